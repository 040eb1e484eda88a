#include <catch2/catch_amalgamated.hpp>

#include "fdcf/channel.hpp"
#include "fdcf/metrics.hpp"

#include <cmath>

using namespace fdcf;
using Catch::Approx;

namespace {

BeamformerSet random_bf(const ChannelRealization& ch, std::uint64_t seed) {
  RngStream rng(seed, 99);
  auto bf = BeamformerSet::zeros(ch.B, ch.M, ch.N, ch.K_dl, ch.K_ul);
  for (auto& row : bf.w_dl)
    for (auto& w : row) w = draw_complex_gaussian(rng, ch.M, 1, 0.1).col(0);
  for (auto& row : bf.w_ul)
    for (auto& w : row) w = draw_complex_gaussian(rng, ch.M, 1, 1e5).col(0);
  for (auto& v : bf.v_dl) v = draw_complex_gaussian(rng, ch.N, 1, 1e5).col(0);
  for (auto& v : bf.v_ul) v = draw_complex_gaussian(rng, ch.N, 1, 0.3).col(0);
  return bf;
}

// Stacked-vector evaluation straight from the channel tensors.
double oracle_sinr_dl(const ChannelRealization& ch, const BeamformerSet& bf, const NetworkConfig& cfg, int k) {
  auto link = [&](int i) {
    cd g = 0.0;
    for (int b = 0; b < ch.B; ++b) g += bf.v_dl[k].dot(ch.H_dl(b, k).adjoint() * bf.w_dl[b][i]);
    return g;
  };
  const double s = std::norm(link(k));
  double den = cfg.sigma2_ue * bf.v_dl[k].squaredNorm();
  for (int i = 0; i < ch.K_dl; ++i)
    if (i != k) den += std::norm(link(i));
  for (int u = 0; u < ch.K_ul; ++u) den += std::norm(bf.v_dl[k].dot(ch.F[k][u].adjoint() * bf.v_ul[u]));
  return s / den;
}

double oracle_sinr_ul(const ChannelRealization& ch, const BeamformerSet& bf, const NetworkConfig& cfg, double eps,
                      int u) {
  const int BM = ch.B * ch.M;
  CVec w(BM);
  for (int b = 0; b < ch.B; ++b) w.segment(b * ch.M, ch.M) = bf.w_ul[b][u];
  auto col = [&](int j) {
    CVec h(BM);
    for (int b = 0; b < ch.B; ++b) h.segment(b * ch.M, ch.M) = ch.H_ul(b, j) * bf.v_ul[j];
    return h;
  };
  const double s = std::norm(w.dot(col(u)));
  double den = (cfg.sigma2_ap + eps) * w.squaredNorm();
  for (int j = 0; j < ch.K_ul; ++j)
    if (j != u) den += std::norm(w.dot(col(j)));
  return s / den;
}

}  // namespace

TEST_CASE("cached SINRs match direct stacked evaluation", "[metrics]") {
  const NetworkConfig cfg = NetworkConfig::desk();
  for (std::uint64_t d = 0; d < 5; ++d) {
    const auto ch = make_drop(cfg, 31, d);
    const auto bf = random_bf(ch, d);
    const double eps = 3e-12;
    const auto m = evaluate(ch, bf, ResidualSI::statistical(eps), cfg, 0);
    for (int k = 0; k < ch.K_dl; ++k) CHECK(m.sinr_dl[k] == Approx(oracle_sinr_dl(ch, bf, cfg, k)).epsilon(1e-10));
    for (int u = 0; u < ch.K_ul; ++u)
      CHECK(m.sinr_ul[u] == Approx(oracle_sinr_ul(ch, bf, cfg, eps, u)).epsilon(1e-10));
  }
}

TEST_CASE("cross-AP terms re-sum the coupling matrices", "[metrics]") {
  const auto ch = make_drop(NetworkConfig::desk(), 8, 2);
  const auto bf = random_bf(ch, 5);
  const auto c = build_cache(ch, bf, ResidualSI::statistical(0.0));
  for (int b = 0; b < ch.B; ++b)
    for (int k = 0; k < ch.K_dl; ++k) {
      CVec ref = CVec::Zero(ch.M);
      for (int d = 0; d < ch.B; ++d) {
        if (d == b) continue;
        for (int i = 0; i < ch.K_dl; ++i)
          ref += ch.H_dl(b, i) * bf.v_dl[i] * (ch.H_dl(d, i) * bf.v_dl[i]).dot(bf.w_dl[d][k]);
      }
      CHECK((c.xi_dl[b][k] - ref).norm() <= 1e-10 * ref.norm());
    }
}

TEST_CASE("MMSE combiner turns MSE into 1/(1+SINR)", "[metrics]") {
  const NetworkConfig cfg = NetworkConfig::desk();
  const auto ch = make_drop(cfg, 12, 0);
  auto bf = random_bf(ch, 1);
  const auto c = build_cache(ch, bf, ResidualSI::statistical(0.0));
  for (int k = 0; k < ch.K_dl; ++k) {
    CMat r = cfg.sigma2_ue * CMat::Identity(ch.N, ch.N);
    for (const auto& h : c.h_dl[k]) r += h * h.adjoint();
    for (const auto& f : c.f_ul[k]) r += f * f.adjoint();
    bf.v_dl[k] = r.ldlt().solve(c.h_dl[k][k]);
  }
  const auto c2 = build_cache(ch, bf, ResidualSI::statistical(0.0));
  for (int k = 0; k < ch.K_dl; ++k)
    CHECK(mse_dl(k, c2, bf, cfg) == Approx(1.0 / (1.0 + sinr_dl(k, c2, bf, cfg))).epsilon(1e-8));
}

TEST_CASE("explicit residual SI adds the leakage projection", "[metrics]") {
  const NetworkConfig cfg = NetworkConfig::desk();
  const auto ch = make_drop(cfg, 3, 1);
  const auto bf = random_bf(ch, 2);
  VecGrid delta(ch.B, std::vector<CVec>(ch.K_dl, CVec::Zero(ch.M)));
  delta[1][0](0) = cd(2e-6, 1e-6);
  const auto si = ResidualSI::explicit_from(delta);
  const auto c = build_cache(ch, bf, si);
  const auto t = ul_terms(0, c, bf, si, cfg);
  CHECK(t.residual_si == Approx(std::norm(bf.w_ul[1][0].dot(delta[1][0]))));
}

TEST_CASE("effective rate arithmetic", "[metrics]") {
  CHECK(effective_rate(200.0, 20, 96.0, 10000.0) == Approx(161.6).epsilon(1e-14));
  CHECK(effective_rate(200.0, 20, 64.0, 10000.0) == Approx(174.4).epsilon(1e-14));
  CHECK(effective_rate(50.0, 20, 96.0, 1000.0) == 0.0);
  CHECK(effective_rate(50.0, 0, 96.0, 1000.0) == 50.0);
}

TEST_CASE("power feasibility honours both budgets", "[metrics]") {
  auto bf = BeamformerSet::zeros(2, 2, 2, 1, 1);
  bf.w_dl[0][0] << 1.0, 0.0;
  bf.v_ul[0] << 0.0, 1.0;
  CHECK(power_feasible(bf, 1.0, 1.0));
  bf.w_dl[1][0] << 1.0, 0.1;
  CHECK_FALSE(power_feasible(bf, 1.0, 1.0));
}
