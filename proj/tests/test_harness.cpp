#include <catch2/catch_amalgamated.hpp>

#include "fdcf/experiment.hpp"

#include <cstdlib>
#include <sstream>

using namespace fdcf;
using Catch::Approx;

namespace {

ExperimentSpec parse(const std::string& text) {
  std::istringstream is(text);
  return parse_config(&is);
}

std::string config_error(const std::string& text) {
  try {
    parse(text).validate();
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

std::vector<std::string> lines(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream is(s);
  for (std::string l; std::getline(is, l);) out.push_back(l);
  return out;
}

ExperimentSpec small_desk() {
  ExperimentSpec spec = preset(Scale::desk);
  spec.drops = 3;
  spec.cfg.controls.max_iters = 5;
  spec.schemes = {SchemeId::proposed, SchemeId::separate_ota, SchemeId::local_mmse, SchemeId::half_duplex,
                  SchemeId::perfect_csi};
  return spec;
}

}  // namespace

TEST_CASE("config parsing applies keys over the preset", "[harness]") {
  const auto spec = parse("# comment\nscale = desk\niters = 7\nrho_ap_dbm = 20\nschemes = proposed, hd\n");
  CHECK(spec.scale == Scale::desk);
  CHECK(spec.cfg.B == 4);
  CHECK(spec.cfg.iters() == 7);
  CHECK(spec.cfg.rho_ap == Approx(0.1));
  REQUIRE(spec.schemes.size() == 2);
  CHECK(spec.schemes[1] == SchemeId::half_duplex);
  const auto paper = parse("");
  CHECK(paper.cfg.B == 16);
  CHECK(paper.cfg.tau == 32);
  std::istringstream is("scale = desk\n");
  CHECK(parse_config(&is, Scale::paper).cfg.B == 16);
}

TEST_CASE("config errors name the offending field", "[harness]") {
  CHECK(config_error("antennas = 3\n").find("unknown key: antennas") != std::string::npos);
  CHECK(config_error("tau = 4\n").find("tau") != std::string::npos);
  CHECK(config_error("M = two\n").find("M") != std::string::npos);
  CHECK(config_error("drops = 0\n").find("drops") != std::string::npos);
  CHECK(config_error("schemes = proposed,magic\n").find("magic") != std::string::npos);
  CHECK(config_error("alpha_ap = 1.5\n").find("alpha_ap") != std::string::npos);
  CHECK(config_error("just a line\n").find("line 1") != std::string::npos);
  CHECK_THROWS_AS(parse_config_file("/nonexistent/cfg"), ConfigError);
}

TEST_CASE("thread count honours the environment", "[harness]") {
  ::setenv("FDCF_THREADS", "3", 1);
  CHECK(resolve_threads(1) == 3);
  ::setenv("FDCF_THREADS", "x", 1);
  CHECK_THROWS_AS(resolve_threads(1), ConfigError);
  ::unsetenv("FDCF_THREADS");
  CHECK(resolve_threads(2) == 2);
  CHECK_THROWS_AS(resolve_threads(0), ConfigError);
}

TEST_CASE("best effective rate scans every training length", "[harness]") {
  const std::vector<double> curve = {0.0, 10.0, 30.0, 31.0};
  const auto [e, t] = best_effective_rate(curve, 100.0, 1000.0);
  CHECK(t == 2);
  CHECK(e == Approx(30.0 * 0.8));
  CHECK(best_effective_rate(curve, 2000.0, 1000.0).first == 0.0);
}

TEST_CASE("rendered outputs have the expected shape", "[harness]") {
  const auto spec = small_desk();
  const auto res = run_experiment(spec, 1);
  REQUIRE(res.drops_ok == 3);
  const auto files = render_outputs(res, spec);

  const auto f1 = lines(files.at("fig1.csv"));
  CHECK(f1.size() == 6);
  CHECK(f1[0] == "Itr,Proposed,Seperate,Local,HD");
  CHECK(f1[5].rfind("5,", 0) == 0);
  CHECK(lines(files.at("fig1_perfect_csi.csv")).size() == 6);

  const auto f2 = lines(files.at("fig2.csv"));
  CHECK(f2.size() == 6);
  CHECK(f2[0] == "Res,Proposed,Seperate,Local");
  CHECK(f2[1].rfind("1000,", 0) == 0);

  for (const char* name : {"fig3_proposed_dl.csv", "fig3_hd_ul.csv", "fig3_perfect_dl.csv"}) {
    const auto rows = lines(files.at(name));
    REQUIRE(rows.size() == 7);  // 3 drops x 2 UEs
    double px = -1.0, py = 0.0;
    for (std::size_t i = 1; i < rows.size(); ++i) {
      double x = 0.0, y = 0.0;
      REQUIRE(std::sscanf(rows[i].c_str(), "%lf,%lf", &x, &y) == 2);
      CHECK(x >= px);
      CHECK(y > py);
      px = x;
      py = y;
    }
    CHECK(py == Approx(1.0));
  }

  const auto meta = nlohmann::json::parse(files.at("run_meta.json"));
  CHECK(meta["seed"] == spec.cfg.seed);
  CHECK(meta["drops_ok"] == 3);
  CHECK(meta["schemes"]["local_mmse"]["training_cost_per_iteration"] == 16.0);
  CHECK(meta["config"]["tau"] == 8);
}

TEST_CASE("effective rates never exceed the sum rate they discount", "[harness]") {
  const auto spec = small_desk();
  const auto res = run_experiment(spec, 1);
  for (const auto& a : res.schemes)
    for (std::size_t r = 0; r < spec.r_tot_grid.size(); ++r) {
      const int t = a.eff_iters[r];
      if (t == 0) {
        CHECK(a.eff_rate[r] == 0.0);
        continue;
      }
      CHECK(a.eff_rate[r] <= a.mean_sum_rate[t] + 1e-12);
      if (a.scheme != SchemeId::perfect_csi) CHECK(a.eff_rate[r] < a.mean_sum_rate[t]);
    }
}

TEST_CASE("every scheme sees the same channel in a drop", "[harness]") {
  const auto spec = small_desk();
  const auto res = run_experiment(spec, 2);
  for (const auto& a : res.schemes) CHECK(a.checksums == res.schemes.front().checksums);
}
