#include "subtk/config.hpp"

#include <fstream>

namespace subtk {

using nlohmann::json;

namespace {

Eigen::VectorXd vec_from_json(const json& j, const std::string& where) {
  if (!j.is_array()) throw config_error("BAD_VECTOR", where + ": expected an array of numbers");
  Eigen::VectorXd v(j.size());
  for (size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_number()) throw config_error("BAD_VECTOR", where + ": expected numbers");
    v[static_cast<int>(i)] = j[i].get<double>();
  }
  return v;
}

const json& need(const json& j, const std::string& key, const std::string& where) {
  auto it = j.find(key);
  if (it == j.end())
    throw config_error("MISSING_FIELD", where + ": missing required field \"" + key + "\"");
  return *it;
}

}  // namespace

GridSpec DomainConfig::grid_spec() const {
  GridSpec s;
  s.lo = lo;
  s.hi = hi;
  s.resolution = resolution;
  if (mask.kind == "ball") {
    Eigen::VectorXd c = mask.center;
    double r2 = mask.radius * mask.radius;
    s.mask = [c, r2](const Eigen::VectorXd& x) { return (x - c).squaredNorm() < r2; };
  }
  return s;
}

Eigen::VectorXd PotentialSpec::sample(const Grid& grid) const {
  Eigen::VectorXd v(grid.num_nodes());
  for (int i = 0; i < grid.num_nodes(); ++i) {
    const Eigen::VectorXd x = grid.node_position(i);
    bool inside = false;
    if (kind == "box") {
      inside = true;
      for (int j = 0; j < x.size(); ++j)
        if (x[j] < lo[j] || x[j] > hi[j]) inside = false;
    } else {  // strip
      inside = std::abs(x[axis]) <= halfwidth;
    }
    v[i] = inside ? -depth : 0.0;
  }
  return v;
}

ProblemConfig ProblemConfig::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw config_error("IO", "cannot open config file " + path);
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw config_error("PARSE", std::string("config parse failure: ") + e.what());
  }
  return from_json(j);
}

ProblemConfig ProblemConfig::from_json(const json& j) {
  ProblemConfig c;
  c.task = need(j, "task", "config").get<std::string>();
  const std::vector<std::string> tasks{"index", "exponents", "eigen", "clr", "solve", "morse"};
  if (std::find(tasks.begin(), tasks.end(), c.task) == tasks.end())
    throw config_error("BAD_TASK", "unknown task \"" + c.task + "\"");

  if (j.contains("fields")) {
    const json& jf = j["fields"];
    if (!jf.is_array() || jf.empty())
      throw config_error("BAD_FIELDS", "fields: expected a non-empty array of component arrays");
    for (const auto& one : jf) {
      std::vector<std::string> comps;
      for (const auto& s : one) comps.push_back(s.get<std::string>());
      try {
        c.fields.push_back(VectorField::parse(comps));
      } catch (const std::invalid_argument& e) {
        throw config_error("BAD_FIELD_EXPR", e.what());
      }
    }
    for (const auto& f : c.fields)
      if (f.dim != c.fields[0].dim)
        throw config_error("BAD_FIELDS", "fields: mixed dimensions");
  }

  if (j.contains("domain")) {
    const json& jd = j["domain"];
    DomainConfig d;
    const json& box = need(jd, "box", "domain");
    d.lo.resize(box.size());
    d.hi.resize(box.size());
    for (size_t a = 0; a < box.size(); ++a) {
      if (!box[a].is_array() || box[a].size() != 2)
        throw config_error("BAD_BOX", "domain.box: expected [lo, hi] pairs per axis");
      d.lo[static_cast<int>(a)] = box[a][0].get<double>();
      d.hi[static_cast<int>(a)] = box[a][1].get<double>();
      if (!(d.hi[static_cast<int>(a)] > d.lo[static_cast<int>(a)]))
        throw config_error("BAD_BOX", "domain.box: empty interval on axis " + std::to_string(a + 1));
    }
    for (const auto& r : need(jd, "resolution", "domain")) {
      int res = r.get<int>();
      if (res < 3) throw config_error("BAD_RESOLUTION", "domain.resolution: needs >= 3 cells per axis");
      d.resolution.push_back(res);
    }
    if (d.resolution.size() != static_cast<size_t>(d.lo.size()))
      throw config_error("BAD_RESOLUTION", "domain.resolution: axis count mismatch");
    if (jd.contains("mask")) {
      const json& jm = jd["mask"];
      d.mask.kind = jm.value("kind", "all");
      if (d.mask.kind == "ball") {
        d.mask.center = jm.contains("center") ? vec_from_json(jm["center"], "domain.mask.center")
                                              : Eigen::VectorXd::Zero(d.lo.size()).eval();
        d.mask.radius = jm.value("radius", 1.0);
        if (!(d.mask.radius > 0)) throw config_error("BAD_MASK", "domain.mask.radius must be positive");
        if (d.mask.center.size() != d.lo.size())
          throw config_error("BAD_MASK", "domain.mask.center: dimension mismatch");
      } else if (d.mask.kind != "all") {
        throw config_error("BAD_MASK", "domain.mask.kind: expected \"all\" or \"ball\"");
      }
    }
    c.domain = d;
  }

  if (j.contains("params")) {
    const json& jp = j["params"];
    ProblemParams p;
    p.p = need(jp, "p", "params").get<double>();
    p.mu = need(jp, "mu", "params").get<double>();
    p.sigma = jp.value("sigma", 0.0);
    p.beta = jp.value("beta", 0.0);
    p.nu_tilde = need(jp, "nu_tilde", "params").get<double>();
    p.theta_exp = jp.value("theta", p.nu_tilde);
    p.kappa = jp.value("kappa", 0.0);
    p.n = jp.value("n", 2);
    p.d = jp.value("d", 0);
    p.R0 = jp.value("R0", 1.0);
    try {
      p.validate();
    } catch (const invariant_error& e) {
      throw config_error(e.code(), std::string("params: ") + e.what());
    }
    c.params = p;
  }

  if (j.contains("nonlinearity")) {
    const json& jn = j["nonlinearity"];
    NonlinearitySpec n;
    n.B = jn.value("B", 1.0);
    n.p = need(jn, "p", "nonlinearity").get<double>();
    n.beta = jn.value("beta", 0.0);
    n.sigma = jn.value("sigma", 0.0);
    n.R0 = jn.value("R0", 1.0);
    c.alpha_expr = jn.value("alpha", std::string());
    try {
      n.validate(0);
    } catch (const std::invalid_argument& e) {
      throw config_error("BAD_NONLINEARITY", e.what());
    }
    c.nonlinearity = n;
  }

  if (j.contains("index")) {
    const json& ji = j["index"];
    c.index.samples_per_axis = ji.value("samples_per_axis", 9);
    c.index.rank_tol = ji.value("rank_tol", 1e-9);
    c.index.max_bracket_length = ji.value("max_bracket_length", 6);
    if (ji.contains("extra_points"))
      for (const auto& pt : ji["extra_points"])
        c.index.extra_points.push_back(vec_from_json(pt, "index.extra_points"));
    if (c.index.samples_per_axis < 2)
      throw config_error("BAD_SAMPLING", "index.samples_per_axis: needs >= 2");
  }

  if (j.contains("eigen")) {
    const json& je = j["eigen"];
    c.eigen.k = je.value("k", 10);
    c.eigen.tol = je.value("tol", 1e-8);
    c.eigen.block = je.value("block", 2);
    c.eigen.keep_vectors = je.value("keep_vectors", 0);
    c.eigen.shift_hint = je.value("shift_hint", 0.0);
    c.eigen.export_matrix = je.value("export_matrix", false);
    if (c.eigen.k < 1) throw config_error("BAD_EIGEN", "eigen.k: needs >= 1");
    if (je.contains("weyl")) {
      const json& jw = je["weyl"];
      c.eigen.weyl.model = jw.value("model", "power-log");
      if (c.eigen.weyl.model != "power-log" && c.eigen.weyl.model != "power")
        throw config_error("BAD_EIGEN", "eigen.weyl.model: expected \"power-log\" or \"power\"");
      if (jw.contains("window")) {
        const json& w = jw["window"];
        if (!w.is_array() || w.size() != 2)
          throw config_error("BAD_EIGEN", "eigen.weyl.window: expected [k_min, k_max]");
        c.eigen.weyl.window = std::make_pair(w[0].get<int>(), w[1].get<int>());
      }
    }
  }

  if (j.contains("clr")) {
    const json& jc = j["clr"];
    const json& jp = need(jc, "potential", "clr");
    c.clr.potential.kind = jp.value("kind", "box");
    if (c.clr.potential.kind == "box") {
      c.clr.potential.lo = vec_from_json(need(jp, "lo", "clr.potential"), "clr.potential.lo");
      c.clr.potential.hi = vec_from_json(need(jp, "hi", "clr.potential"), "clr.potential.hi");
    } else if (c.clr.potential.kind == "strip") {
      c.clr.potential.axis = jp.value("axis", 1) - 1;  // 1-based in configs
      c.clr.potential.halfwidth = jp.value("halfwidth", 0.4);
      if (c.clr.potential.axis < 0)
        throw config_error("BAD_CLR", "clr.potential.axis: 1-based axis index");
    } else {
      throw config_error("BAD_CLR", "clr.potential.kind: expected \"box\" or \"strip\"");
    }
    c.clr.potential.depth = jp.value("depth", 1.0);
    if (!(c.clr.potential.depth > 0))
      throw config_error("BAD_CLR", "clr.potential.depth: must be positive");
    for (const auto& t : need(jc, "t_values", "clr")) c.clr.t_values.push_back(t.get<double>());
    if (c.clr.t_values.size() < 2 || !std::is_sorted(c.clr.t_values.begin(), c.clr.t_values.end()))
      throw config_error("BAD_CLR", "clr.t_values: needs an increasing grid of >= 2 values");
    c.clr.sat_fraction = jc.value("sat_fraction", 0.1);
  }

  if (j.contains("solve")) {
    const json& js = j["solve"];
    c.solve.k_count = js.value("k_count", 3);
    c.solve.tol = js.value("tol", 1e-11);
    c.solve.sep = js.value("sep", 1e-3);
    c.solve.eigen_tol = js.value("eigen_tol", 1e-9);
    c.solve.eigen_block = js.value("eigen_block", 2);
    if (c.solve.k_count < 1) throw config_error("BAD_SOLVE", "solve.k_count: needs >= 1");
  }

  if (j.contains("morse")) {
    const json& jm = j["morse"];
    c.morse.vector_file = need(jm, "vector_file", "morse").get<std::string>();
    c.morse.tol = jm.value("tol", -1.0);
  }

  if (j.contains("output")) c.out_dir = j["output"].value("dir", ".");
  c.seed = j.value("seed", static_cast<std::uint64_t>(12345));

  // task-specific required sections
  auto require_section = [&](bool present, const std::string& name) {
    if (!present)
      throw config_error("MISSING_FIELD", "task \"" + c.task + "\" requires the \"" + name +
                                              "\" section");
  };
  if (c.task == "index") require_section(!c.fields.empty(), "fields");
  if (c.task == "index") require_section(c.domain.has_value(), "domain");
  if (c.task == "exponents") require_section(c.params.has_value(), "params");
  if (c.task == "eigen" || c.task == "clr" || c.task == "solve" || c.task == "morse") {
    require_section(!c.fields.empty(), "fields");
    require_section(c.domain.has_value(), "domain");
  }
  if (c.task == "clr") require_section(!c.clr.t_values.empty(), "clr");
  if (c.task == "solve") require_section(c.nonlinearity.has_value(), "nonlinearity");
  if (c.task == "morse") {
    require_section(!c.morse.vector_file.empty(), "morse");
    require_section(c.nonlinearity.has_value(), "nonlinearity");
  }

  // canonical semantic form: everything except output paths
  json sem = j;
  sem.erase("output");
  c.raw_semantic_ = sem;
  return c;
}

nlohmann::json ProblemConfig::semantic_json() const { return raw_semantic_; }

void ProblemConfig::override_seed(std::uint64_t s) {
  seed = s;
  raw_semantic_["seed"] = s;
}

std::string fnv1a_hex(const std::string& data) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char ch : data) {
    h ^= ch;
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string ProblemConfig::input_hash() const { return fnv1a_hex(raw_semantic_.dump()); }

}  // namespace subtk
