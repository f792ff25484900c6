#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "subtk/exponents.hpp"
#include "subtk/grid.hpp"
#include "subtk/variational.hpp"
#include "subtk/vector_field.hpp"

namespace subtk {

/// Config rejected: carries a machine-readable error code plus a
/// human-oriented message with the offending location.
class config_error : public std::runtime_error {
 public:
  config_error(std::string code, const std::string& what)
      : std::runtime_error(what), code_(std::move(code)) {}
  const std::string& code() const { return code_; }

 private:
  std::string code_;
};

struct MaskSpec {
  std::string kind = "all";  // all | ball
  Eigen::VectorXd center;
  double radius = 1.0;
};

struct DomainConfig {
  Eigen::VectorXd lo, hi;
  std::vector<int> resolution;
  MaskSpec mask;

  GridSpec grid_spec() const;
};

struct IndexConfig {
  int samples_per_axis = 9;
  std::vector<Eigen::VectorXd> extra_points;
  double rank_tol = 1e-9;
  int max_bracket_length = 6;
};

struct WeylConfig {
  std::string model = "power-log";  // power-log | power
  std::optional<std::pair<int, int>> window;  // default: [20, 70% of k]
};

struct EigenConfig {
  int k = 10;
  double tol = 1e-8;
  int block = 2;
  int keep_vectors = 0;
  double shift_hint = 0;
  bool export_matrix = false;
  WeylConfig weyl;
};

struct PotentialSpec {
  std::string kind = "box";  // box | strip
  Eigen::VectorXd lo, hi;    // box corners
  int axis = 0;              // strip axis
  double halfwidth = 0.4;
  double depth = 1.0;

  Eigen::VectorXd sample(const Grid& grid) const;  // nonpositive shape
};

struct ClrConfig {
  PotentialSpec potential;
  std::vector<double> t_values;
  double sat_fraction = 0.1;
};

struct SolveConfig {
  int k_count = 3;
  double tol = 1e-11;
  double sep = 1e-3;
  double eigen_tol = 1e-9;
  int eigen_block = 2;
};

struct MorseConfig {
  std::string vector_file;
  double tol = -1.0;
};

struct ProblemConfig {
  std::string task;
  std::vector<VectorField> fields;
  std::optional<DomainConfig> domain;
  std::optional<ProblemParams> params;
  std::optional<NonlinearitySpec> nonlinearity;
  std::string alpha_expr;  // sampled onto the grid at dispatch
  IndexConfig index;
  EigenConfig eigen;
  ClrConfig clr;
  SolveConfig solve;
  MorseConfig morse;
  std::string out_dir = ".";
  std::uint64_t seed = 12345;

  /// Parses and validates; throws config_error with a code like
  /// MISSING_FIELD, H4_SIGMA, BAD_MASK, ... on the first violation.
  static ProblemConfig load(const std::string& path);
  static ProblemConfig from_json(const nlohmann::json& j);

  /// Overrides the seed and keeps the semantic form (and hence the input
  /// hash) in sync.
  void override_seed(std::uint64_t s);

  /// Canonical JSON of every semantic field (output paths excluded).
  nlohmann::json semantic_json() const;
  /// FNV-1a hash of the canonical semantic form, as 16 hex digits.
  std::string input_hash() const;

 private:
  nlohmann::json raw_semantic_;
};

std::string fnv1a_hex(const std::string& data);

}  // namespace subtk
