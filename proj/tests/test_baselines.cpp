#include <catch2/catch_amalgamated.hpp>

#include "fdcf/baselines.hpp"

#include <limits>

using namespace fdcf;
using Catch::Approx;

namespace {

NetworkConfig quiet(NetworkConfig c) {
  c.sigma2_ap = 0.0;
  c.sigma2_ue = 0.0;
  return c;
}

PilotBook pilots(const NetworkConfig& cfg, std::uint64_t seed) {
  RngStream rng(seed, 2);
  return build_pilots(cfg, rng);
}

}  // namespace

TEST_CASE("scheme names and training costs", "[baselines]") {
  CHECK(parse_scheme("hd") == SchemeId::half_duplex);
  CHECK(parse_scheme("separate_ota") == SchemeId::separate_ota);
  CHECK_FALSE(parse_scheme("mmse").has_value());
  for (auto s : kAllSchemes) CHECK(parse_scheme(scheme_name(s)) == s);
  CHECK(training_cost(SchemeId::proposed, 32) == 96.0);
  CHECK(training_cost(SchemeId::separate_ota, 32) == 96.0);
  CHECK(training_cost(SchemeId::local_mmse, 32) == 64.0);
  CHECK(training_cost(SchemeId::perfect_csi, 32) == 0.0);
}

TEST_CASE("with a single AP local MMSE and the proposed scheme coincide", "[baselines]") {
  NetworkConfig cfg = quiet(NetworkConfig::desk());
  cfg.grid_side = 1;
  cfg.B = 1;
  const auto ch = make_drop(cfg, 3, 0);
  const auto pb = pilots(cfg, 3);
  const NoiseSource n{3, 0, 0};
  const auto p = run_proposed(ch, cfg, cfg.controls, pb, n);
  const auto l = run_local_mmse(ch, cfg, cfg.controls, pb, n);
  REQUIRE(p.metrics.size() == l.metrics.size());
  for (std::size_t t = 0; t < p.metrics.size(); ++t)
    CHECK(l.metrics[t].sum_rate == Approx(p.metrics[t].sum_rate).epsilon(1e-8));
}

TEST_CASE("without UE-to-UE channels separate training equals the proposed one", "[baselines]") {
  NetworkConfig cfg = NetworkConfig::desk();
  cfg.ue_isolation_db = -std::numeric_limits<double>::infinity();
  const auto ch = make_drop(cfg, 4, 1);
  const auto pb = pilots(cfg, 4);
  const NoiseSource n{4, 1, 0};
  const auto p = run_proposed(ch, cfg, cfg.controls, pb, n);
  const auto s = run_separate_ota(ch, cfg, cfg.controls, pb, n);
  for (std::size_t t = 0; t < p.metrics.size(); ++t) CHECK(s.metrics[t].sum_rate == p.metrics[t].sum_rate);
}

TEST_CASE("cross-link interference separates the two OTA schemes", "[baselines]") {
  const NetworkConfig cfg = NetworkConfig::desk();
  const auto ch = make_drop(cfg, 4, 1);
  const auto pb = pilots(cfg, 4);
  const NoiseSource n{4, 1, 0};
  const auto p = run_proposed(ch, cfg, cfg.controls, pb, n);
  const auto s = run_separate_ota(ch, cfg, cfg.controls, pb, n);
  CHECK(p.metrics.back().sum_rate != s.metrics.back().sum_rate);
  CHECK(p.channel_checksum == s.channel_checksum);
}

TEST_CASE("half duplex halves every UE rate", "[baselines]") {
  const NetworkConfig cfg = NetworkConfig::desk();
  const auto ch = make_drop(cfg, 5, 2);
  const auto pb = pilots(cfg, 5);
  const auto hd = run_half_duplex(ch, cfg, cfg.controls, pb, NoiseSource{5, 2, 0});
  REQUIRE(hd.metrics.size() == static_cast<std::size_t>(cfg.iters() + 1));
  for (const auto& m : hd.metrics) {
    REQUIRE(m.sinr_dl.size() == static_cast<std::size_t>(cfg.K_dl));
    REQUIRE(m.sinr_ul.size() == static_cast<std::size_t>(cfg.K_ul));
    double sum = 0.0;
    for (std::size_t k = 0; k < m.sinr_dl.size(); ++k) {
      CHECK(m.rate_dl[k] == Approx(0.5 * std::log2(1.0 + m.sinr_dl[k])));
      sum += m.rate_dl[k];
    }
    for (std::size_t u = 0; u < m.sinr_ul.size(); ++u) {
      CHECK(m.rate_ul[u] == Approx(0.5 * std::log2(1.0 + m.sinr_ul[u])));
      sum += m.rate_ul[u];
    }
    CHECK(m.sum_rate == Approx(sum));
  }
}

TEST_CASE("half-duplex DL half does not depend on the UL UEs", "[baselines]") {
  const NetworkConfig cfg = NetworkConfig::desk();
  auto ch = make_drop(cfg, 6, 0);
  const auto pb = pilots(cfg, 6);
  const auto a = run_half_duplex(ch, cfg, cfg.controls, pb, NoiseSource{6, 0, 0});
  for (auto& row : ch.F)
    for (auto& f : row) f *= 1e3;
  const auto b = run_half_duplex(ch, cfg, cfg.controls, pb, NoiseSource{6, 0, 0});
  CHECK(a.metrics.back().sum_rate == b.metrics.back().sum_rate);
}

TEST_CASE("perfect-CSI scheme reproduces the optimizer", "[baselines]") {
  const NetworkConfig cfg = NetworkConfig::desk();
  const auto ch = make_drop(cfg, 7, 0);
  const auto r = run_perfect_csi(ch, cfg, cfg.controls);
  const auto ref = run_alt_opt(ch, cfg, cfg.controls, ResidualSI::statistical(cfg.stat_eps()));
  CHECK(r.metrics.back().sum_rate == ref.metrics.back().sum_rate);
  CHECK(r.metrics.back().sum_rate > r.metrics.front().sum_rate);
}
