#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

#include <json.hpp>

#ifndef SUBTK_BIN
#define SUBTK_BIN "subtk"
#endif
#ifndef SUBTK_CONFIG_DIR
#define SUBTK_CONFIG_DIR "configs"
#endif

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct RunResult {
  int exit_code = -1;
  json payload;      // stdout
  std::string err;
};

RunResult run_cli(const std::string& args, const std::string& tag) {
  const fs::path tmp = fs::temp_directory_path() / ("subtk_cli_" + tag);
  fs::create_directories(tmp);
  const std::string out_file = (tmp / "stdout.json").string();
  const std::string err_file = (tmp / "stderr.txt").string();
  const std::string cmd =
      std::string(SUBTK_BIN) + " " + args + " > " + out_file + " 2> " + err_file;
  int rc = std::system(cmd.c_str());
  RunResult r;
#ifdef _WIN32
  r.exit_code = rc;
#else
  r.exit_code = WEXITSTATUS(rc);
#endif
  std::ifstream in(out_file);
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (!text.empty()) {
    try {
      r.payload = json::parse(text);
    } catch (...) {
    }
  }
  std::ifstream ein(err_file);
  r.err.assign((std::istreambuf_iterator<char>(ein)), std::istreambuf_iterator<char>());
  return r;
}

std::string cfg(const std::string& name) {
  return (fs::path(SUBTK_CONFIG_DIR) / name).string();
}

fs::path fresh_dir(const std::string& tag) {
  fs::path p = fs::temp_directory_path() / ("subtk_out_" + tag);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

json report_payload(const fs::path& report) {
  std::ifstream in(report);
  REQUIRE(in.good());
  json j;
  in >> j;
  return j["payload"];
}

}  // namespace

TEST_CASE("index goldens for the packaged systems") {
  auto d = fresh_dir("idx");
  auto gr = run_cli("index --config " + cfg("grushin.json") + " --out " + (d / "g").string(), "g");
  REQUIRE(gr.exit_code == 0);
  CHECK(gr.payload["q"] == 2);
  CHECK(gr.payload["nu_tilde"] == 3);
  CHECK(gr.payload["metivier_condition_holds"] == false);
  CHECK(gr.payload["critical_exponent"] == 6.0);

  auto ex = run_cli("index --config " + cfg("example21.json") + " --out " + (d / "e").string(), "e");
  REQUIRE(ex.exit_code == 0);
  CHECK(ex.payload["q"] == 2);
  CHECK(ex.payload["nu_tilde"] == 3);
  CHECK(ex.payload["metivier_condition_holds"] == false);

  auto el = run_cli("index --config " + cfg("elliptic2d.json") + " --out " + (d / "l").string(), "l");
  REQUIRE(el.exit_code == 0);
  CHECK(el.payload["q"] == 1);
  CHECK(el.payload["nu_tilde"] == 2);
  CHECK(el.payload["metivier_condition_holds"] == true);
}

TEST_CASE("exponents: golden report and invariant rejection") {
  auto d = fresh_dir("exp");
  auto r = run_cli("exponents --config " + cfg("example51.json") + " --out " + d.string(), "x");
  REQUIRE(r.exit_code == 0);
  CHECK(r.payload["A1"] == true);
  CHECK(r.payload["A2"] == true);
  CHECK(std::abs(r.payload["sup_p_A1"].get<double>() - 22.0 / 9.0) < 1e-12);
  CHECK(std::abs(r.payload["sup_p_A2"].get<double>() - 12.0 / 5.0) < 1e-12);
  CHECK(r.payload["range_gap"].get<double>() > 0.0);

  // (H.4) violation: sigma >= mu - 1 must exit with the config code
  json bad;
  std::ifstream in(cfg("example51.json"));
  in >> bad;
  bad["params"]["sigma"] = 1.5;
  auto bad_path = fresh_dir("expbad") / "bad.json";
  std::ofstream(bad_path) << bad.dump();
  auto rb = run_cli("exponents --config " + bad_path.string(), "xbad");
  CHECK(rb.exit_code == 2);
  CHECK(rb.err.find("H4_SIGMA") != std::string::npos);
}

TEST_CASE("config rejection paths") {
  auto d = fresh_dir("rej");
  // malformed json
  auto p1 = d / "syntax.json";
  std::ofstream(p1) << "{ not json";
  CHECK(run_cli("index --config " + p1.string(), "r1").exit_code == 2);

  // unknown task
  auto p2 = d / "task.json";
  std::ofstream(p2) << R"({"task": "frobnicate"})";
  CHECK(run_cli("index --config " + p2.string(), "r2").exit_code == 2);

  // task/subcommand mismatch
  CHECK(run_cli("eigen --config " + cfg("grushin.json"), "r3").exit_code == 2);

  // missing required section
  auto p3 = d / "missing.json";
  std::ofstream(p3) << R"({"task": "index", "fields": [["1","0"],["0","x1"]]})";
  auto r3 = run_cli("index --config " + p3.string(), "r4");
  CHECK(r3.exit_code == 2);
  CHECK(r3.err.find("MISSING_FIELD") != std::string::npos);

  // bad field expression with a position-annotated message
  auto p4 = d / "expr.json";
  std::ofstream(p4)
      << R"json({"task":"index","fields":[["sin(x1)","0"]],"domain":{"box":[[0,1],[0,1]],"resolution":[8,8]}})json";
  auto r4 = run_cli("index --config " + p4.string(), "r5");
  CHECK(r4.exit_code == 2);
  CHECK(r4.err.find("position") != std::string::npos);
}

TEST_CASE("determinism: byte-identical payloads for a fixed seed") {
  for (const std::string name : {"grushin.json", "example51.json", "elliptic1d.json",
                                 "eigen_elliptic2d.json"}) {
    const std::string task = name == "example51.json"  ? "exponents"
                             : name == "elliptic1d.json" ? "solve"
                             : name == "eigen_elliptic2d.json" ? "eigen"
                                                               : "index";
    auto d1 = fresh_dir("det1_" + task);
    auto d2 = fresh_dir("det2_" + task);
    auto r1 = run_cli(task + " --config " + cfg(name) + " --seed 42 --out " + d1.string(), "d1");
    auto r2 = run_cli(task + " --config " + cfg(name) + " --seed 42 --out " + d2.string(), "d2");
    REQUIRE(r1.exit_code == 0);
    REQUIRE(r2.exit_code == 0);
    const json p1 = report_payload(d1 / (task + "_report.json"));
    const json p2 = report_payload(d2 / (task + "_report.json"));
    CHECK(p1.dump() == p2.dump());
  }
}

TEST_CASE("solve then morse on the stored vector") {
  auto d = fresh_dir("sm");
  auto rs = run_cli("solve --config " + cfg("elliptic1d.json") + " --out " + d.string(), "s");
  REQUIRE(rs.exit_code == 0);
  REQUIRE(rs.payload["complete"] == true);
  REQUIRE(rs.payload["records"].size() == 3);
  // records come out energy sorted with the expected oscillation counts
  double prev = 0.0;
  for (int k = 0; k < 3; ++k) {
    const auto& rec = rs.payload["records"][k];
    CHECK(rec["sign_changes"] == k);
    CHECK(rec["energy"].get<double>() > prev);
    prev = rec["energy"].get<double>();
    CHECK(rec["psi"] == 1.0);
    CHECK(rec["modified_energy"] == rec["energy"]);
  }

  // morse of the mountain-pass vector
  json mc;
  std::ifstream in(cfg("morse_elliptic1d.json"));
  in >> mc;
  mc["morse"]["vector_file"] = (d / "solution_1.bin").string();
  auto mc_path = d / "morse.json";
  std::ofstream(mc_path) << mc.dump();
  auto rm = run_cli("morse --config " + mc_path.string() + " --out " + d.string(), "m");
  REQUIRE(rm.exit_code == 0);
  CHECK(rm.payload["m"] == 1);
  CHECK(rm.payload["m_star"] == 1);
  CHECK(rm.payload["residual"].get<double>() < 1e-9);
}

TEST_CASE("solve reuses the eigen cache with identical results") {
  // cold run
  auto cold = fresh_dir("cachecold");
  auto rc = run_cli("solve --config " + cfg("elliptic1d.json") + " --out " + cold.string(), "cc");
  REQUIRE(rc.exit_code == 0);

  // warm run: eigen first with the matching spectrum request, then solve
  json ec;
  {
    std::ifstream in(cfg("elliptic1d.json"));
    in >> ec;
  }
  ec["task"] = "eigen";
  ec["eigen"] = {{"k", 4}, {"tol", 1e-9}, {"block", 2}, {"keep_vectors", 3}};
  auto warm = fresh_dir("cachewarm");
  auto ec_path = warm / "eigen.json";
  std::ofstream(ec_path) << ec.dump();
  auto re = run_cli("eigen --config " + ec_path.string() + " --out " + warm.string(), "cw1");
  REQUIRE(re.exit_code == 0);
  int caches = 0;
  for (auto& e : fs::directory_iterator(warm))
    if (e.path().filename().string().rfind("spectrum_", 0) == 0) ++caches;
  CHECK(caches == 1);

  auto rw = run_cli("solve --config " + cfg("elliptic1d.json") + " --out " + warm.string() +
                        " --verbose",
                    "cw2");
  REQUIRE(rw.exit_code == 0);
  CHECK(rw.err.find("cache hit") != std::string::npos);
  CHECK(report_payload(cold / "solve_report.json").dump() ==
        report_payload(warm / "solve_report.json").dump());
}

TEST_CASE("matrix market export flag") {
  json c;
  {
    std::ifstream in(cfg("eigen_elliptic2d.json"));
    in >> c;
  }
  c["eigen"]["k"] = 4;
  c["eigen"].erase("weyl");
  c["eigen"]["export_matrix"] = true;
  c["domain"]["resolution"] = {12, 12};
  auto d = fresh_dir("mm");
  auto p = d / "export.json";
  std::ofstream(p) << c.dump();
  auto r = run_cli("eigen --config " + p.string() + " --out " + d.string(), "mm");
  REQUIRE(r.exit_code == 0);
  std::ifstream mtx(d / "operator.mtx");
  REQUIRE(mtx.good());
  std::string banner;
  std::getline(mtx, banner);
  CHECK(banner.rfind("%%MatrixMarket matrix coordinate real symmetric", 0) == 0);
}

TEST_CASE("numerical failures map to exit code 3") {
  json c;
  {
    std::ifstream in(cfg("clr_elliptic2d.json"));
    in >> c;
  }
  // a potential too weak to bind anything: the scaling fit must refuse
  c["clr"]["t_values"] = {0.001, 0.002};
  auto d = fresh_dir("exit3");
  auto p = d / "weak.json";
  std::ofstream(p) << c.dump();
  auto r = run_cli("clr --config " + p.string() + " --out " + d.string(), "e3");
  CHECK(r.exit_code == 3);
  CHECK(r.err.find("numerical failure") != std::string::npos);
}

TEST_CASE("partial multi-solution results exit with code 4") {
  json c;
  {
    std::ifstream in(cfg("elliptic1d.json"));
    in >> c;
  }
  // an absurd separation radius makes every later solution a duplicate
  c["solve"]["k_count"] = 2;
  c["solve"]["sep"] = 1e6;
  auto d = fresh_dir("partial");
  auto p = d / "partial.json";
  std::ofstream(p) << c.dump();
  auto r = run_cli("solve --config " + p.string() + " --out " + d.string(), "p4");
  CHECK(r.exit_code == 4);
  CHECK(r.payload["complete"] == false);
}
