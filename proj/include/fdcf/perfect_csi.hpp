#pragma once
/**
 * @file perfect_csi.hpp
 * @brief Alternating sum-MSE minimization with global CSI: the four MMSE
 * block updates, damped best-response application and the iteration driver.
 *
 * Besides being a benchmark in its own right, this driver is the reference
 * that every over-the-air update must reproduce once noise is removed.
 */

#include "fdcf/channel.hpp"
#include "fdcf/config.hpp"
#include "fdcf/metrics.hpp"
#include "fdcf/numerics.hpp"

#include <algorithm>
#include <string>
#include <vector>

namespace fdcf {

// ---------------------------------------------------------------------------
// Block updates

/// DL UE combiner: (sum_i h h^H + sum_u f f^H + sigma_ue^2 I)^-1 h_kk.
inline CVec update_v_dl(int k, const EffectiveChannelCache& c, const NetworkConfig& cfg) {
  const CVec& h = c.h_dl[k][k];
  const Eigen::Index n = h.size();
  if (h.squaredNorm() == 0.0) return CVec::Zero(n);
  CMat a = CMat::Zero(n, n);
  for (const auto& hi : c.h_dl[k]) a.noalias() += hi * hi.adjoint();
  for (const auto& f : c.f_ul[k]) a.noalias() += f * f.adjoint();
  a.diagonal().array() += cfg.sigma2_ue;
  return hermitian_solve_vec(a, h);
}

/// Solution of (A + lambda I) X = R with lambda >= 0 the smallest multiplier
/// keeping ||X||_F^2 within budget.
struct ConstrainedSolve {
  CMat x;
  double lambda = 0.0;
  double power = 0.0;
};

inline ConstrainedSolve power_constrained_solve(const CMat& a, const CMat& rhs, double budget, double tol,
                                                double lambda_floor = 0.0) {
  const Eigen::Index n = a.rows();
  auto solve_at = [&](double lam) {
    CMat reg = a;
    reg.diagonal().array() += lam;
    return hermitian_solve(reg, rhs);
  };
  if (rhs.squaredNorm() == 0.0) return {CMat::Zero(n, rhs.cols()), lambda_floor, 0.0};
  const auto res = bisect_power_multiplier(
      [&](double lam) { return solve_at(lambda_floor + lam).squaredNorm(); }, budget, tol);
  ConstrainedSolve out;
  out.lambda = lambda_floor + res.lambda;
  out.x = solve_at(out.lambda);
  out.power = out.x.squaredNorm();
  return out;
}

struct UlPrecoderUpdate {
  CVec v;
  double mu = 0.0;
};

/// UL UE precoder: (sum_j hcheck_ul[u][j] hcheck_ul[u][j]^H
///                  + sum_k f_dl[k][u] f_dl[k][u]^H + mu I)^-1 hcheck_ul[u][u],
/// mu >= 0 bisected onto ||v||^2 <= rho_ue.
inline UlPrecoderUpdate update_v_ul(int u, const EffectiveChannelCache& c, const UpdateControls& ctl,
                                    const NetworkConfig& cfg) {
  const CVec& h = c.hcheck_ul[u][u];
  const Eigen::Index n = h.size();
  if (h.squaredNorm() == 0.0) return {CVec::Zero(n), 0.0};
  CMat a = CMat::Zero(n, n);
  for (const auto& g : c.hcheck_ul[u]) a.noalias() += g * g.adjoint();
  for (std::size_t k = 0; k < c.f_dl.size(); ++k) a.noalias() += c.f_dl[k][u] * c.f_dl[k][u].adjoint();
  const auto s = power_constrained_solve(a, CMat(h), cfg.rho_ue, ctl.bisect_tol);
  return {s.x.col(0), s.lambda};
}

struct ApDlUpdate {
  std::vector<CVec> w;  ///< one precoder per DL UE
  double lambda = 0.0;
};

/// Proximal weight c_b = prox_ap * trace(A) / M for a local Gram A.
inline double prox_weight(const CMat& gram, const UpdateControls& ctl) {
  if (!(ctl.prox_ap > 0.0)) return 0.0;
  return ctl.prox_ap * gram.trace().real() / static_cast<double>(gram.rows());
}

/// Every DL precoder of AP b, sharing one multiplier for the per-AP budget:
/// w_k = (Phi_dl[b][b] + c_b I + lambda I)^-1 (hcheck_dl[b][k] - xi_dl[b][k] + c_b w_old_k).
inline ApDlUpdate update_w_dl_ap(int b, const EffectiveChannelCache& c, const std::vector<CVec>& w_old,
                                 const UpdateControls& ctl, const NetworkConfig& cfg) {
  const int Kd = static_cast<int>(c.hcheck_dl[b].size());
  const Eigen::Index m = c.Phi_dl[b][b].rows();
  ApDlUpdate out;
  if (Kd == 0) return out;
  CMat rhs(m, Kd);
  const double cw = prox_weight(c.Phi_dl[b][b], ctl);
  for (int k = 0; k < Kd; ++k) rhs.col(k) = c.hcheck_dl[b][k] - c.xi_dl[b][k] + cw * w_old[k];
  CMat a = c.Phi_dl[b][b];
  a.diagonal().array() += cw;
  const auto s = power_constrained_solve(a, rhs, cfg.rho_ap, ctl.bisect_tol);
  out.lambda = s.lambda;
  for (int k = 0; k < Kd; ++k) out.w.push_back(s.x.col(k));
  return out;
}

/// nu_b = nu_scale * trace(Xi[b]) / M.
inline double ul_regularizer(int b, const EffectiveChannelCache& c, const UpdateControls& ctl) {
  const CMat& xi = c.Xi[b];
  return ctl.nu_scale * xi.trace().real() / static_cast<double>(xi.rows());
}

/// Every UL combiner of AP b:
/// w_u = (Phi_ul[b][b] + Xi[b] + (nu_b + sigma_ap^2 + c_b) I)^-1 (h_ul[b][u] - xi_ul[b][u] + c_b w_old_u).
inline std::vector<CVec> update_w_ul_ap(int b, const EffectiveChannelCache& c, const std::vector<CVec>& w_old,
                                        const UpdateControls& ctl, const NetworkConfig& cfg) {
  const int Ku = static_cast<int>(c.h_ul[b].size());
  std::vector<CVec> out;
  if (Ku == 0) return out;
  const double cw = prox_weight(c.Phi_ul[b][b], ctl);
  CMat a = c.Phi_ul[b][b] + c.Xi[b];
  a.diagonal().array() += ul_regularizer(b, c, ctl) + cfg.sigma2_ap + cw;
  CMat rhs(a.rows(), Ku);
  for (int u = 0; u < Ku; ++u) rhs.col(u) = c.h_ul[b][u] - c.xi_ul[b][u] + cw * w_old[u];
  const CMat w = hermitian_solve(a, rhs);
  for (int u = 0; u < Ku; ++u) out.push_back(w.col(u));
  return out;
}

// ---------------------------------------------------------------------------
// Damping

/// (1 - alpha) old + alpha candidate.
inline CVec damped_apply(const CVec& old, const CVec& candidate, double alpha) {
  require(old.size() == candidate.size(), "damped_apply: dimension mismatch");
  if (alpha == 1.0) return candidate;
  return (1.0 - alpha) * old + alpha * candidate;
}

/// P_sig / (P_sig + P_xint) clamped to [alpha_min, 1]; 1 when nothing is heard.
inline double adaptive_step(double p_sig, double p_xint, double alpha_min) {
  const double tot = p_sig + p_xint;
  if (!(tot > 0.0)) return 1.0;
  return std::clamp(p_sig / tot, alpha_min, 1.0);
}

/// Step for DL UE k. The adaptive rule weighs the desired effective channel
/// against the UL-UE cross-link it hears.
inline double dl_ue_step(int k, const EffectiveChannelCache& c, const UpdateControls& ctl) {
  if (ctl.ue_damping == DampingMode::fixed) return ctl.alpha_fixed;
  double xint = 0.0;
  for (const auto& f : c.f_ul[k]) xint += f.squaredNorm();
  return adaptive_step(c.h_dl[k][k].squaredNorm(), xint, ctl.alpha_min);
}

/// Step for UL UE u: desired channel through its combiners against the
/// leakage it causes at the DL UEs.
inline double ul_ue_step(int u, const EffectiveChannelCache& c, const UpdateControls& ctl) {
  if (ctl.ue_damping == DampingMode::fixed) return ctl.alpha_fixed;
  double xint = 0.0;
  for (std::size_t k = 0; k < c.f_dl.size(); ++k) xint += c.f_dl[k][u].squaredNorm();
  return adaptive_step(c.hcheck_ul[u][u].squaredNorm(), xint, ctl.alpha_min);
}

// ---------------------------------------------------------------------------
// Initialization

/**
 * Deterministic start point.
 *
 * DL precoders: per-AP matched filter toward H[b][k] times the all-ones UE
 * vector, split evenly over the AP budget. UL precoders: sqrt(rho_ue) e_1.
 * DL combiners and UL combiners: unit-gain matched filters for those
 * precoders (v = h / ||h||^2, and w[b] = h_ul[b] / sum_c ||h_ul[c]||^2).
 */
inline BeamformerSet initialize_beamformers(const ChannelRealization& ch, const NetworkConfig& cfg) {
  auto bf = BeamformerSet::zeros(ch.B, ch.M, ch.N, ch.K_dl, ch.K_ul);
  const CVec ones = CVec::Ones(ch.N);
  if (ch.K_dl > 0) {
    const double amp = std::sqrt(cfg.rho_ap / ch.K_dl);
    for (int b = 0; b < ch.B; ++b)
      for (int k = 0; k < ch.K_dl; ++k) {
        const CVec g = ch.H_dl(b, k) * ones;
        const double n = g.norm();
        if (n > 0.0) bf.w_dl[b][k] = amp * g / n;
      }
  }
  for (int u = 0; u < ch.K_ul; ++u) {
    bf.v_ul[u] = CVec::Zero(ch.N);
    bf.v_ul[u](0) = std::sqrt(cfg.rho_ue);
  }
  const auto c = build_cache(ch, bf, ResidualSI::statistical(0.0));
  for (int k = 0; k < ch.K_dl; ++k) {
    const double n2 = c.h_dl[k][k].squaredNorm();
    if (n2 > 0.0) bf.v_dl[k] = c.h_dl[k][k] / n2;
  }
  for (int u = 0; u < ch.K_ul; ++u) {
    double n2 = 0.0;
    for (int b = 0; b < ch.B; ++b) n2 += c.h_ul[b][u].squaredNorm();
    if (n2 > 0.0)
      for (int b = 0; b < ch.B; ++b) bf.w_ul[b][u] = c.h_ul[b][u] / n2;
  }
  return bf;
}

// ---------------------------------------------------------------------------
// Driver

enum class Block { v_dl = 0, v_ul = 1, w_dl = 2, w_ul = 3 };

struct AltOptResult {
  BeamformerSet bf;
  std::vector<IterationMetrics> metrics;  ///< index 0 is the initialization
  std::vector<BeamformerSet> iterates;    ///< filled when requested
  /// sum MSE at the start, then after each of the four blocks per iteration.
  std::vector<double> mse_trace;
  /// sum MSE before/after every exact sub-step (per AP in sequential mode).
  std::vector<std::pair<double, double>> substeps;
};

namespace detail {

inline void check_finite(const BeamformerSet& bf, int iteration, const char* stage) {
  if (!bf.finite())
    throw RuntimeAbort("non-finite beamformer at iteration " + std::to_string(iteration) + " after " + stage);
}

}  // namespace detail

/**
 * Runs `ctl.max_iters` iterations of alternating sum-MSE minimization.
 *
 * The residual SI model is held fixed for the whole run. In the distributed
 * schedule the UL precoders and both AP stages read one cache snapshot taken
 * after the DL combiner update, which is what the over-the-air protocol can
 * observe. The sequential schedule rebuilds the cache after every block and
 * after every AP, making each step an exact block minimizer.
 */
inline AltOptResult run_alt_opt(const ChannelRealization& ch, const NetworkConfig& cfg, const UpdateControls& ctl,
                                const ResidualSI& si, bool keep_iterates = false) {
  AltOptResult res;
  BeamformerSet bf = initialize_beamformers(ch, cfg);

  auto mse_now = [&](const BeamformerSet& x) { return sum_mse(ch, x, si, cfg); };
  res.metrics.push_back(evaluate(ch, bf, si, cfg, 0));
  res.mse_trace.push_back(res.metrics.back().sum_mse);
  if (keep_iterates) res.iterates.push_back(bf);

  for (int it = 1; it <= ctl.max_iters; ++it) {
    // DL combiners; they only enter the DL MSEs, so one snapshot is exact.
    {
      const auto c = build_cache(ch, bf, si);
      const double before = res.mse_trace.back();
      for (int k = 0; k < ch.K_dl; ++k)
        bf.v_dl[k] = damped_apply(bf.v_dl[k], update_v_dl(k, c, cfg), dl_ue_step(k, c, ctl));
      detail::check_finite(bf, it, "DL combiner update");
      res.mse_trace.push_back(mse_now(bf));
      res.substeps.emplace_back(before, res.mse_trace.back());
    }

    if (ctl.schedule == Schedule::distributed) {
      const auto c = build_cache(ch, bf, si);
      std::vector<CVec> v_ul(ch.K_ul);
      std::vector<double> a_ul(ch.K_ul);
      for (int u = 0; u < ch.K_ul; ++u) {
        v_ul[u] = update_v_ul(u, c, ctl, cfg).v;
        a_ul[u] = ul_ue_step(u, c, ctl);
      }
      std::vector<ApDlUpdate> w_dl(ch.B);
      std::vector<std::vector<CVec>> w_ul(ch.B);
      for (int b = 0; b < ch.B; ++b) {
        w_dl[b] = update_w_dl_ap(b, c, bf.w_dl[b], ctl, cfg);
        w_ul[b] = update_w_ul_ap(b, c, bf.w_ul[b], ctl, cfg);
      }
      double before = res.mse_trace.back();
      for (int u = 0; u < ch.K_ul; ++u) bf.v_ul[u] = damped_apply(bf.v_ul[u], v_ul[u], a_ul[u]);
      res.mse_trace.push_back(mse_now(bf));
      res.substeps.emplace_back(before, res.mse_trace.back());
      before = res.mse_trace.back();
      for (int b = 0; b < ch.B; ++b)
        for (int k = 0; k < ch.K_dl; ++k) bf.w_dl[b][k] = damped_apply(bf.w_dl[b][k], w_dl[b].w[k], ctl.alpha_ap);
      res.mse_trace.push_back(mse_now(bf));
      res.substeps.emplace_back(before, res.mse_trace.back());
      before = res.mse_trace.back();
      for (int b = 0; b < ch.B; ++b)
        for (int u = 0; u < ch.K_ul; ++u) bf.w_ul[b][u] = damped_apply(bf.w_ul[b][u], w_ul[b][u], ctl.alpha_ap);
      res.mse_trace.push_back(mse_now(bf));
      res.substeps.emplace_back(before, res.mse_trace.back());
      detail::check_finite(bf, it, "joint update");
    } else {
      {
        const auto c = build_cache(ch, bf, si);
        const double before = res.mse_trace.back();
        for (int u = 0; u < ch.K_ul; ++u)
          bf.v_ul[u] = damped_apply(bf.v_ul[u], update_v_ul(u, c, ctl, cfg).v, ul_ue_step(u, c, ctl));
        detail::check_finite(bf, it, "UL precoder update");
        res.mse_trace.push_back(mse_now(bf));
        res.substeps.emplace_back(before, res.mse_trace.back());
      }
      double stage_mse = res.mse_trace.back();
      for (int b = 0; b < ch.B; ++b) {
        const auto c = build_cache(ch, bf, si);
        const auto upd = update_w_dl_ap(b, c, bf.w_dl[b], ctl, cfg);
        for (int k = 0; k < ch.K_dl; ++k) bf.w_dl[b][k] = damped_apply(bf.w_dl[b][k], upd.w[k], ctl.alpha_ap);
        const double after = mse_now(bf);
        res.substeps.emplace_back(stage_mse, after);
        stage_mse = after;
      }
      detail::check_finite(bf, it, "DL precoder update");
      res.mse_trace.push_back(stage_mse);
      for (int b = 0; b < ch.B; ++b) {
        const auto c = build_cache(ch, bf, si);
        const auto upd = update_w_ul_ap(b, c, bf.w_ul[b], ctl, cfg);
        for (int u = 0; u < ch.K_ul; ++u) bf.w_ul[b][u] = damped_apply(bf.w_ul[b][u], upd[u], ctl.alpha_ap);
        const double after = mse_now(bf);
        res.substeps.emplace_back(stage_mse, after);
        stage_mse = after;
      }
      detail::check_finite(bf, it, "UL combiner update");
      res.mse_trace.push_back(stage_mse);
    }

    res.metrics.push_back(evaluate(ch, bf, si, cfg, it));
    if (keep_iterates) res.iterates.push_back(bf);
  }
  res.bf = std::move(bf);
  return res;
}

/// Perfect-CSI benchmark with the statistical residual-SI model.
inline AltOptResult run_alt_opt(const ChannelRealization& ch, const NetworkConfig& cfg) {
  return run_alt_opt(ch, cfg, cfg.controls, ResidualSI::statistical(cfg.stat_eps()));
}

}  // namespace fdcf
