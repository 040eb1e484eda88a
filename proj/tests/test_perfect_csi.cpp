#include <catch2/catch_amalgamated.hpp>

#include "fdcf/channel.hpp"
#include "fdcf/perfect_csi.hpp"

using namespace fdcf;
using Catch::Approx;

namespace {

double quad(const CMat& a, const CMat& rhs, const CMat& x) {
  return (x.adjoint() * a * x).trace().real() - 2.0 * (rhs.adjoint() * x).trace().real();
}

}  // namespace

TEST_CASE("constrained solve is optimal against feasible perturbations", "[perfect_csi]") {
  RngStream rng(17, 1);
  for (int trial = 0; trial < 10; ++trial) {
    const CMat g = draw_complex_gaussian(rng, 3, 2, 1.0);
    const CMat a = g * g.adjoint();  // rank deficient
    const CMat rhs = draw_complex_gaussian(rng, 3, 2, 1.0);
    const double budget = 0.5;
    const auto s = power_constrained_solve(a, rhs, budget, 1e-12);
    CHECK(s.x.squaredNorm() <= budget * (1.0 + 1e-9));
    if (s.lambda > 0.0) CHECK(s.x.squaredNorm() == Approx(budget).epsilon(1e-9));
    const double f0 = quad(a, rhs, s.x);
    for (int p = 0; p < 200; ++p) {
      CMat y = s.x + draw_complex_gaussian(rng, 3, 2, 0.01);
      const double n = y.squaredNorm();
      if (n > budget) y *= std::sqrt(budget / n);
      CHECK(quad(a, rhs, y) >= f0 - 1e-9);
    }
  }
}

TEST_CASE("DL combiner update is the MMSE filter", "[perfect_csi]") {
  const NetworkConfig cfg = NetworkConfig::desk();
  const auto ch = make_drop(cfg, 4, 0);
  const auto bf = initialize_beamformers(ch, cfg);
  const auto c = build_cache(ch, bf, ResidualSI::statistical(cfg.stat_eps()));
  for (int k = 0; k < ch.K_dl; ++k) {
    CMat r = cfg.sigma2_ue * CMat::Identity(ch.N, ch.N);
    for (const auto& h : c.h_dl[k]) r += h * h.adjoint();
    for (const auto& f : c.f_ul[k]) r += f * f.adjoint();
    const CVec ref = r.fullPivLu().solve(c.h_dl[k][k]);
    CHECK((update_v_dl(k, c, cfg) - ref).norm() <= 1e-8 * ref.norm());
  }
}

TEST_CASE("initialization is feasible and deterministic", "[perfect_csi]") {
  const NetworkConfig cfg = NetworkConfig::desk();
  const auto ch = make_drop(cfg, 4, 1);
  const auto a = initialize_beamformers(ch, cfg);
  const auto b = initialize_beamformers(ch, cfg);
  CHECK(power_feasible(a, cfg.rho_ap, cfg.rho_ue));
  CHECK((a.w_dl[2][1] - b.w_dl[2][1]).norm() == 0.0);
  CHECK(ap_dl_power(a, 0) == Approx(cfg.rho_ap));
}

TEST_CASE("alternating optimization improves the sum rate and stays feasible", "[perfect_csi]") {
  const NetworkConfig cfg = NetworkConfig::desk();
  for (std::uint64_t d = 0; d < 5; ++d) {
    const auto ch = make_drop(cfg, 8, d);
    const auto r = run_alt_opt(ch, cfg, cfg.controls, ResidualSI::statistical(cfg.stat_eps()), true);
    REQUIRE(r.metrics.size() == static_cast<std::size_t>(cfg.iters() + 1));
    CHECK(r.metrics.back().sum_rate > r.metrics.front().sum_rate);
    for (const auto& bf : r.iterates) CHECK(power_feasible(bf, cfg.rho_ap, cfg.rho_ue));
  }
}

TEST_CASE("sequential schedule with unit steps never raises the sum MSE", "[perfect_csi]") {
  NetworkConfig cfg = NetworkConfig::desk();
  UpdateControls ctl = cfg.controls;
  ctl.schedule = Schedule::sequential;
  ctl.ue_damping = DampingMode::fixed;
  ctl.alpha_fixed = 1.0;
  ctl.alpha_ap = 1.0;
  ctl.nu_scale = 0.0;
  ctl.prox_ap = 0.0;
  ctl.bisect_tol = 1e-12;
  for (std::uint64_t d = 0; d < 10; ++d) {
    const auto ch = make_drop(cfg, 55, d);
    const auto r = run_alt_opt(ch, cfg, ctl, ResidualSI::statistical(cfg.stat_eps()));
    for (std::size_t i = 1; i < r.mse_trace.size(); ++i)
      CHECK(r.mse_trace[i] <= r.mse_trace[i - 1] + 1e-9 * std::abs(r.mse_trace[i - 1]));
  }
}

TEST_CASE("damping blends old and new", "[perfect_csi]") {
  CVec a(2), b(2);
  a << 1.0, 0.0;
  b << 0.0, 1.0;
  const CVec m = damped_apply(a, b, 0.25);
  CHECK(m(0).real() == Approx(0.75));
  CHECK(m(1).real() == Approx(0.25));
  CHECK(adaptive_step(1.0, 3.0, 0.1) == Approx(0.25));
  CHECK(adaptive_step(0.0, 0.0, 0.1) == 1.0);
  CHECK(adaptive_step(1.0, 1e6, 0.1) == 0.1);
}

TEST_CASE("proximal AP steps still descend", "[perfect_csi]") {
  NetworkConfig cfg = NetworkConfig::desk();
  UpdateControls ctl = cfg.controls;
  ctl.schedule = Schedule::sequential;
  ctl.ue_damping = DampingMode::fixed;
  ctl.alpha_fixed = 1.0;
  ctl.alpha_ap = 1.0;
  ctl.nu_scale = 0.0;
  ctl.bisect_tol = 1e-12;
  ctl.prox_ap = 2.0;
  for (std::uint64_t d = 0; d < 10; ++d) {
    const auto ch = make_drop(cfg, 56, d);
    const auto r = run_alt_opt(ch, cfg, ctl, ResidualSI::statistical(cfg.stat_eps()));
    for (const auto& [before, after] : r.substeps) CHECK(after <= before + 1e-9 * std::abs(before));
  }
}
