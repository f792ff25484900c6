#include <cstdio>
#include <cstdlib>
#include <exception>
#include <string>

#include <CLI11.hpp>
#include <Eigen/Core>

#include "subtk/runner.hpp"

namespace {

int thread_count_from_env() {
  const char* env = std::getenv("SUBTK_THREADS");
  if (!env) return 0;
  int v = std::atoi(env);
  return v > 0 ? v : 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"subelliptic variational toolkit"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir;
  std::uint64_t seed = 0;
  bool have_seed = false;
  int threads = 0;
  bool verbose = false;

  const std::vector<std::string> names{"index", "exponents", "eigen", "clr", "solve", "morse"};
  const std::vector<std::string> descs{
      "Hörmander/Métivier index analysis of a vector-field system",
      "admissible-exponent report for the multiplicity ranges",
      "smallest Dirichlet eigenvalues with a Weyl-law fit",
      "negative-eigenvalue counting and its scaling exponent",
      "multi-solution critical-point search",
      "Morse indices of a stored solution vector"};
  for (size_t i = 0; i < names.size(); ++i) {
    auto* sub = app.add_subcommand(names[i], descs[i]);
    sub->add_option("--config", config_path, "problem config (JSON)")->required();
    sub->add_option("--out", out_dir, "output directory (overrides config)");
    auto* sopt = sub->add_option("--seed", seed, "rng seed (overrides config)");
    sub->add_option("--threads", threads, "worker threads (env SUBTK_THREADS as fallback)");
    sub->add_flag("--verbose", verbose, "progress to stderr");
    sub->callback([sopt, &have_seed] { have_seed = sopt->count() > 0; });
  }

  CLI11_PARSE(app, argc, argv);
  const std::string task = app.get_subcommands().front()->get_name();

  if (threads <= 0) threads = thread_count_from_env();
  if (threads > 0) Eigen::setNbThreads(threads);

  try {
    subtk::ProblemConfig config = subtk::ProblemConfig::load(config_path);
    if (config.task != task) {
      std::fprintf(stderr, "error [TASK_MISMATCH]: config declares task \"%s\" but subcommand is \"%s\"\n",
                   config.task.c_str(), task.c_str());
      return 2;
    }
    if (!out_dir.empty()) config.out_dir = out_dir;
    if (have_seed) config.override_seed(seed);

    subtk::RunReport rep = subtk::run_task(config, verbose);
    std::printf("%s\n", rep.payload.dump(2).c_str());
    if (rep.status == "partial")
      std::fprintf(stderr, "warning: partial result (fewer solutions than requested)\n");
    return rep.exit_code;
  } catch (const subtk::config_error& e) {
    std::fprintf(stderr, "config error [%s]: %s\n", e.code().c_str(), e.what());
    return 2;
  } catch (const subtk::invariant_error& e) {
    std::fprintf(stderr, "config error [%s]: %s\n", e.code().c_str(), e.what());
    return 2;
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "config error [INVALID]: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "numerical failure: %s\n", e.what());
    return 3;
  }
}
