#include <catch2/catch_amalgamated.hpp>

#include "fdcf/channel.hpp"
#include "fdcf/ota.hpp"

#include <set>

using namespace fdcf;
using Catch::Approx;

namespace {

NetworkConfig quiet_desk() {
  NetworkConfig c = NetworkConfig::desk();
  c.sigma2_ap = 0.0;
  c.sigma2_ue = 0.0;
  return c;
}

PilotBook pilots(const NetworkConfig& cfg, std::uint64_t seed) {
  RngStream rng(seed, 1);
  return build_pilots(cfg, rng);
}

}  // namespace

TEST_CASE("pilot book is orthogonal with unit-modulus entries", "[ota]") {
  RngStream rng(3, 3);
  const auto pb = build_pilots(32, 16, 16, rng);
  CMat all(32, 32);
  all << pb.P, pb.Q;
  CHECK((all.adjoint() * all - 32.0 * CMat::Identity(32, 32)).cwiseAbs().maxCoeff() < 1e-12);
  CHECK((all.cwiseAbs().array() - 1.0).abs().maxCoeff() < 1e-14);
  RngStream r2(4, 3);
  const auto other = build_pilots(32, 16, 16, r2);
  CHECK((other.P - pb.P).norm() > 0.0);
  RngStream r3(4, 3);
  CHECK_THROWS_AS(build_pilots(8, 5, 4, r3), ConfigError);
}

TEST_CASE("noise streams are keyed per iteration and slot", "[ota]") {
  const NoiseSource n{11, 2, 0};
  auto a = n.stream(1, 2);
  auto b = n.stream(1, 2);
  auto c = n.stream(1, 3);
  auto d = n.stream(2, 2);
  const double x = a.standard_normal();
  CHECK(x == b.standard_normal());
  CHECK(x != c.standard_normal());
  CHECK(x != d.standard_normal());
  const NoiseSource salted{11, 2, 1};
  CHECK(x != salted.stream(1, 2).standard_normal());
}

TEST_CASE("noiseless slot 1 recovers the leakage and the DL combiner", "[ota]") {
  const NetworkConfig cfg = quiet_desk();
  const auto ch = make_drop(cfg, 21, 0);
  const auto bf = initialize_beamformers(ch, cfg);
  const auto pb = pilots(cfg, 21);
  OtaSlotSignals sig;
  RngStream rng(1, 1);
  slot1(ch, bf, pb, cfg, rng, sig);
  const VecGrid leak = leakage_vectors(ch, bf);
  for (int b = 0; b < ch.B; ++b)
    for (int i = 0; i < ch.K_dl; ++i) {
      const CVec g = estimate_si(sig.Y_ul1[b], pb, i);
      CHECK((g - leak[b][i]).norm() <= 1e-12 * leak[b][i].norm());
    }
  const auto c = build_cache(ch, bf, ResidualSI::statistical(0.0));
  for (int k = 0; k < ch.K_dl; ++k) {
    CMat r = CMat::Zero(ch.N, ch.N);
    for (const auto& h : c.h_dl[k]) r += h * h.adjoint();
    for (const auto& f : c.f_ul[k]) r += f * f.adjoint();
    const CVec ref = r.fullPivLu().solve(c.h_dl[k][k]);
    CHECK((update_v_dl_ota(k, sig.Y_dl1[k], pb) - ref).norm() <= 1e-8 * ref.norm());
  }
}

TEST_CASE("adaptive scaling keeps every block within budget", "[ota]") {
  const NetworkConfig cfg = NetworkConfig::paper();
  const auto ch = make_drop(cfg, 5, 0);
  RngStream prng(5, 5);
  const auto pb = build_pilots(cfg, prng);
  UpdateControls ctl = cfg.controls;
  ctl.max_iters = 4;
  IbtOptions opt;
  opt.noise = {5, 0, 0};
  const auto r = run_ibt(ch, cfg, ctl, IbtMode::proposed, pb, opt);
  CHECK(r.diag.total_clipped() == 0);
  CHECK(r.diag.max_ratio() <= 1.0 + 1e-6);
  REQUIRE(r.diag.scalings.size() == 4);
  for (const auto& s : r.diag.scalings) {
    CHECK(s.beta1 >= 1.0);
    CHECK(s.beta1 == s.beta2);
    CHECK(s.beta3 >= 1.0);
  }
  CHECK(power_feasible(r.bf, cfg.rho_ap, cfg.rho_ue));
}

TEST_CASE("fixed scaling clips and counts over-budget blocks", "[ota]") {
  NetworkConfig cfg = NetworkConfig::paper();
  cfg.scaling = ScalingMode::fixed;
  const auto ch = make_drop(cfg, 5, 0);
  RngStream prng(5, 5);
  const auto pb = build_pilots(cfg, prng);
  UpdateControls ctl = cfg.controls;
  ctl.max_iters = 3;
  IbtOptions opt;
  opt.noise = {5, 0, 0};
  const auto r = run_ibt(ch, cfg, ctl, IbtMode::proposed, pb, opt);
  CHECK(r.diag.total_clipped() > 0);
  CHECK(r.diag.max_ratio() <= 1.0 + 1e-6);
}

TEST_CASE("training runs are reproducible", "[ota]") {
  const NetworkConfig cfg = NetworkConfig::desk();
  const auto ch = make_drop(cfg, 6, 1);
  const auto pb = pilots(cfg, 6);
  IbtOptions opt;
  opt.noise = {6, 1, 0};
  const auto a = run_ibt(ch, cfg, cfg.controls, IbtMode::proposed, pb, opt);
  const auto b = run_ibt(ch, cfg, cfg.controls, IbtMode::proposed, pb, opt);
  REQUIRE(a.metrics.size() == b.metrics.size());
  for (std::size_t t = 0; t < a.metrics.size(); ++t) CHECK(a.metrics[t].sum_rate == b.metrics[t].sum_rate);
  opt.noise.salt = 9;
  const auto c = run_ibt(ch, cfg, cfg.controls, IbtMode::proposed, pb, opt);
  CHECK(c.metrics.back().sum_rate != a.metrics.back().sum_rate);
}

TEST_CASE("slot text dump has a header", "[ota]") {
  const NetworkConfig cfg = NetworkConfig::desk();
  const auto ch = make_drop(cfg, 6, 1);
  const auto pb = pilots(cfg, 6);
  UpdateControls ctl = cfg.controls;
  ctl.max_iters = 1;
  IbtOptions opt;
  opt.keep_signals = true;
  const auto r = run_ibt(ch, cfg, ctl, IbtMode::proposed, pb, opt);
  REQUIRE(r.signals.size() == 1);
  std::ostringstream os;
  write_slot_text(os, r.signals.front());
  CHECK(os.str().rfind("# fdcf slot signals v1", 0) == 0);
}
