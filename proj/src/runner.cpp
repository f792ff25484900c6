#include "subtk/runner.hpp"

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "subtk/io.hpp"
#include "subtk/spectral.hpp"

namespace subtk {

using nlohmann::json;

namespace {

std::string iso_now() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
  return buf;
}

json vec_to_json(const Eigen::VectorXd& v) {
  json a = json::array();
  for (int i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

std::vector<Eigen::VectorXd> domain_samples(const DomainConfig& d, int per_axis) {
  // uniform closed grid over the box, filtered by the mask
  const int dim = static_cast<int>(d.resolution.size());
  GridSpec gs = d.grid_spec();
  std::vector<Eigen::VectorXd> pts;
  std::vector<int> idx(dim, 0);
  long total = 1;
  for (int j = 0; j < dim; ++j) total *= per_axis + 1;
  for (long f = 0; f < total; ++f) {
    long rem = f;
    Eigen::VectorXd x(dim);
    for (int j = dim - 1; j >= 0; --j) {
      int i = static_cast<int>(rem % (per_axis + 1));
      rem /= per_axis + 1;
      x[j] = d.lo[j] + (d.hi[j] - d.lo[j]) * i / per_axis;
    }
    if (!gs.mask || gs.mask(x)) pts.push_back(x);
  }
  return pts;
}

// ---------------------------------------------------------------------------
// spectrum cache (shared between the eigen and solve commands)
// ---------------------------------------------------------------------------

constexpr char kSpecMagic[8] = {'S', 'U', 'B', 'T', 'K', 'S', '1', '\0'};

std::string spectrum_cache_key(const ProblemConfig& c, int k, int keep, double tol, int block) {
  json key;
  key["fields"] = c.semantic_json().value("fields", json::array());
  key["domain"] = c.semantic_json().value("domain", json());
  key["k"] = k;
  key["keep"] = keep;
  key["tol"] = tol;
  key["block"] = block;
  key["seed"] = c.seed;
  return fnv1a_hex(key.dump());
}

bool load_spectrum(const std::string& path, int n, Spectrum& out) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return false;
  char magic[8];
  in.read(magic, 8);
  if (!in || std::memcmp(magic, kSpecMagic, 8) != 0) return false;
  std::uint32_t fn = 0, fk = 0, fkeep = 0;
  double w = 0;
  in.read(reinterpret_cast<char*>(&fn), 4);
  in.read(reinterpret_cast<char*>(&fk), 4);
  in.read(reinterpret_cast<char*>(&fkeep), 4);
  in.read(reinterpret_cast<char*>(&w), 8);
  if (!in || fn != static_cast<std::uint32_t>(n)) return false;
  out.weight = w;
  out.eigenvalues.resize(fk);
  out.residuals.resize(fk);
  out.eigenvectors.resize(n, fkeep);
  in.read(reinterpret_cast<char*>(out.eigenvalues.data()), 8 * fk);
  in.read(reinterpret_cast<char*>(out.residuals.data()), 8 * fk);
  in.read(reinterpret_cast<char*>(out.eigenvectors.data()),
          static_cast<std::streamsize>(8) * fkeep * n);
  return static_cast<bool>(in);
}

void save_spectrum(const std::string& path, const Spectrum& sp) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open " + tmp);
    out.write(kSpecMagic, 8);
    const std::uint32_t n = static_cast<std::uint32_t>(sp.eigenvectors.rows());
    const std::uint32_t k = static_cast<std::uint32_t>(sp.eigenvalues.size());
    const std::uint32_t keep = static_cast<std::uint32_t>(sp.eigenvectors.cols());
    out.write(reinterpret_cast<const char*>(&n), 4);
    out.write(reinterpret_cast<const char*>(&k), 4);
    out.write(reinterpret_cast<const char*>(&keep), 4);
    out.write(reinterpret_cast<const char*>(&sp.weight), 8);
    out.write(reinterpret_cast<const char*>(sp.eigenvalues.data()), 8 * k);
    out.write(reinterpret_cast<const char*>(sp.residuals.data()), 8 * k);
    out.write(reinterpret_cast<const char*>(sp.eigenvectors.data()),
              static_cast<std::streamsize>(8) * keep * n);
  }
  std::filesystem::rename(tmp, path);
}

Spectrum spectrum_cached(const ProblemConfig& c, const DiscreteOperator& op, int k, int keep,
                         double tol, int block, double shift_hint, bool verbose,
                         bool* cache_hit = nullptr) {
  const std::string key = spectrum_cache_key(c, k, keep, tol, block);
  const std::string path = c.out_dir + "/spectrum_" + key + ".bin";
  Spectrum sp;
  if (load_spectrum(path, static_cast<int>(op.A.rows()), sp)) {
    if (cache_hit) *cache_hit = true;
    if (verbose) std::fprintf(stderr, "[subtk] spectrum cache hit: %s\n", path.c_str());
    return sp;
  }
  if (cache_hit) *cache_hit = false;
  EigenOptions eo;
  eo.k = k;
  eo.tol = tol;
  eo.block = block;
  eo.keep_vectors = keep;
  eo.seed = c.seed;
  eo.shift_hint = shift_hint;
  sp = smallest_eigenpairs(op, eo);
  save_spectrum(path, sp);
  return sp;
}

DiscreteOperator build_operator(const ProblemConfig& c) {
  auto grid = Grid::create(c.domain->grid_spec());
  for (const auto& f : c.fields)
    if (f.dim != grid->dim())
      throw config_error("BAD_FIELDS", "field dimension does not match the domain");
  return assemble_laplacian(c.fields, grid);
}

NonlinearitySpec build_nonlinearity(const ProblemConfig& c, const Grid& grid) {
  NonlinearitySpec spec = *c.nonlinearity;
  if (!c.alpha_expr.empty() && c.alpha_expr != "0") {
    CoefficientExpr a = CoefficientExpr::parse(c.alpha_expr, grid.dim());
    spec.alpha = sample_nodes(grid, [&](const Eigen::VectorXd& x) { return a.eval(x); });
  }
  spec.validate(grid.num_nodes());
  return spec;
}

// ---------------------------------------------------------------------------
// commands
// ---------------------------------------------------------------------------

json cmd_index(const ProblemConfig& c) {
  auto samples = domain_samples(*c.domain, c.index.samples_per_axis);
  auto rep = generalized_metivier_index(c.fields, samples, c.index.extra_points,
                                        c.index.rank_tol, c.index.max_bracket_length);
  json out;
  out["q"] = rep.q;
  out["nu_tilde"] = rep.nu_tilde;
  out["metivier_condition_holds"] = rep.metivier_condition_holds;
  out["note"] = rep.note;
  out["num_samples"] = rep.nu_of_x.size();
  json wit = json::array();
  for (size_t i = 0; i < rep.witness_points.size() && i < 16; ++i)
    wit.push_back(vec_to_json(rep.witness_points[i]));
  out["witness_points"] = wit;
  out["critical_exponent"] = rep.nu_tilde > 2 ? json(critical_exponent(rep.nu_tilde)) : json();
  int nu_min = rep.nu_tilde;
  for (const auto& [x, nu] : rep.nu_of_x) nu_min = std::min(nu_min, nu);
  out["nu_min"] = nu_min;
  return out;
}

json cmd_exponents(const ProblemConfig& c) {
  const ProblemParams& p = *c.params;
  json out;
  out["A1"] = condition_A1(p);
  out["A2"] = condition_A2(p);
  out["sup_p_A1"] = sup_p_A1(p);
  out["sup_p_A2"] = sup_p_A2(p);
  out["range_gap"] = range_gap(p);
  out["critical_exponent"] = critical_exponent(p.nu_tilde);
  if (p.n >= 3) {
    auto cr = classical_ranges(p.n, p.mu);
    out["classical_ranges"] = {{"bahri_berestycki", cr.bahri_berestycki},
                               {"rabinowitz", cr.rabinowitz},
                               {"bahri_lions", cr.bahri_lions}};
    out["rabinowitz_fixed_point"] = rabinowitz_fixed_point(p.n);
  }
  return out;
}

json cmd_eigen(const ProblemConfig& c, bool verbose) {
  DiscreteOperator op = build_operator(c);
  Spectrum sp = spectrum_cached(c, op, c.eigen.k, c.eigen.keep_vectors, c.eigen.tol,
                                c.eigen.block, c.eigen.shift_hint, verbose);

  std::ostringstream csv;
  csv << "k,lambda,residual\n";
  char line[96];
  for (int i = 0; i < sp.eigenvalues.size(); ++i) {
    std::snprintf(line, sizeof(line), "%d,%.17g,%.3e\n", i + 1, sp.eigenvalues[i],
                  sp.residuals[i]);
    csv << line;
  }
  atomic_write_text(c.out_dir + "/eigenvalues.csv", csv.str());

  if (c.eigen.export_matrix) write_matrix_market(c.out_dir + "/operator.mtx", op.A, true);

  json out;
  out["k"] = c.eigen.k;
  out["lambda1"] = sp.eigenvalues[0];
  out["lambda1_positive"] = sp.eigenvalues[0] > 1e-12;
  out["lambda"] = vec_to_json(sp.eigenvalues);
  out["max_residual"] = sp.residuals.maxCoeff();
  out["eigenvalues_csv"] = "eigenvalues.csv";

  const auto model = c.eigen.weyl.model == "power" ? WeylModel::kPowerOnly : WeylModel::kPowerLog;
  int k_min = 20, k_max = default_fit_top(c.eigen.k);
  bool fit_wanted = c.eigen.weyl.window.has_value();
  if (fit_wanted) {
    k_min = c.eigen.weyl.window->first;
    k_max = c.eigen.weyl.window->second;
  } else {
    // default saturation-safe window, skipped when too few eigenvalues
    fit_wanted = k_max - k_min + 1 >= 20;
  }
  if (fit_wanted) {
    auto fit = weyl_fit(sp.eigenvalues, model, k_min, k_max);  // explicit windows fail loudly
    out["weyl"] = {{"model", c.eigen.weyl.model}, {"a_hat", fit.a_hat},
                   {"b_hat", fit.b_hat},          {"c_hat", fit.c_hat},
                   {"r2", fit.r2},                {"window", {fit.k_min, fit.k_max}}};
  } else {
    out["weyl"] = nullptr;
  }
  return out;
}

json cmd_clr(const ProblemConfig& c) {
  DiscreteOperator op = build_operator(c);
  Eigen::VectorXd shape = c.clr.potential.sample(*op.grid);
  const double nu = c.params ? c.params->nu_tilde : 0.0;
  auto r = clr_scaling_fit(op, shape, c.clr.t_values, nu, c.clr.sat_fraction);

  std::ostringstream csv;
  csv << "t,count\n";
  for (size_t i = 0; i < r.t_values.size(); ++i)
    csv << r.t_values[i] << "," << r.counts[i] << "\n";
  atomic_write_text(c.out_dir + "/clr_counts.csv", csv.str());

  json out;
  out["slope"] = r.slope;
  out["theoretical_cap"] = nu > 0 ? json(r.theoretical_cap) : json();
  out["t_values"] = r.t_values;
  out["counts"] = r.counts;
  out["fit_window"] = {r.fit_lo, r.fit_hi};
  out["counts_csv"] = "clr_counts.csv";
  return out;
}

json cmd_solve(const ProblemConfig& c, bool verbose, std::string& status) {
  DiscreteOperator op = build_operator(c);
  NonlinearitySpec spec = build_nonlinearity(c, *op.grid);
  const int kc = c.solve.k_count;
  Spectrum sp = spectrum_cached(c, op, kc + 1, kc, c.solve.eigen_tol, c.solve.eigen_block,
                                0.0, verbose);

  SolveOptions so;
  so.tol = c.solve.tol;
  so.sep = c.solve.sep;
  so.seed = c.seed;
  const double nu = c.params ? c.params->nu_tilde : 3.0;
  auto res = multi_solution_search(spec, op, sp, kc, so, nu);

  GrowthConstants gc = growth_constants(spec);
  gc.A0 = fit_A0(res.records);
  CutoffChi chi;

  json out;
  out["A0"] = gc.A0;
  out["complete"] = res.complete;
  out["seed_radii"] = res.seed_radii;
  json recs = json::array();
  for (size_t i = 0; i < res.records.size(); ++i) {
    auto& r = res.records[i];
    auto me = modified_energy(r.u, spec, gc, chi, op);
    r.modified_energy = me.e1;
    const std::string file = "solution_" + std::to_string(i + 1) + ".bin";
    write_node_vector(c.out_dir + "/" + file, r.u);
    auto nn = norms(r.u, op, 2.0);
    recs.push_back({{"k_label", r.k_label},
                    {"energy", r.energy},
                    {"modified_energy", r.modified_energy},
                    {"psi", me.psi},
                    {"theta", me.theta},
                    {"residual", r.residual},
                    {"morse", r.morse},
                    {"morse_star", r.morse_star},
                    {"sign_changes", r.sign_changes},
                    {"identity_gap", r.identity_gap},
                    {"ratio_bound", r.ratio_bound},
                    {"l2_norm", nn.l2},
                    {"hx1_norm", nn.hx1},
                    {"vector_file", file}});
  }
  out["records"] = recs;
  if (!res.complete) status = "partial";
  return out;
}

json cmd_morse(const ProblemConfig& c) {
  DiscreteOperator op = build_operator(c);
  NonlinearitySpec spec = build_nonlinearity(c, *op.grid);
  Eigen::VectorXd u = read_node_vector(c.morse.vector_file);
  if (u.size() != op.A.rows())
    throw config_error("BAD_VECTOR_FILE", "stored vector size does not match the grid");
  auto hess = hessian_power_functional(u, spec, op);
  auto mi = morse_indices(hess, c.morse.tol);
  json out;
  out["m"] = mi.m;
  out["m_star"] = mi.m_star;
  out["residual"] = gradient(u, spec, op).norm();
  out["energy"] = energy(u, spec, op);
  return out;
}

}  // namespace

json RunReport::to_json() const {
  json j;
  j["task"] = task;
  j["input_hash"] = input_hash;
  j["started_at"] = started_at;
  j["finished_at"] = finished_at;
  j["status"] = status;
  j["payload"] = payload;
  return j;
}

RunReport run_task(const ProblemConfig& c, bool verbose) {
  RunReport rep;
  rep.task = c.task;
  rep.input_hash = c.input_hash();
  rep.started_at = iso_now();

  std::filesystem::create_directories(c.out_dir);
  std::string status = "ok";
  if (c.task == "index")
    rep.payload = cmd_index(c);
  else if (c.task == "exponents")
    rep.payload = cmd_exponents(c);
  else if (c.task == "eigen")
    rep.payload = cmd_eigen(c, verbose);
  else if (c.task == "clr")
    rep.payload = cmd_clr(c);
  else if (c.task == "solve")
    rep.payload = cmd_solve(c, verbose, status);
  else if (c.task == "morse")
    rep.payload = cmd_morse(c);
  else
    throw config_error("BAD_TASK", "unknown task " + c.task);

  rep.status = status;
  rep.exit_code = status == "partial" ? 4 : 0;
  rep.finished_at = iso_now();
  atomic_write_text(c.out_dir + "/" + c.task + "_report.json", rep.to_json().dump(2) + "\n");
  return rep;
}

}  // namespace subtk
