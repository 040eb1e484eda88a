#pragma once
/**
 * @file ota.hpp
 * @brief Iterative bi-directional over-the-air training for the full-duplex
 * network: pilot books, the three pilot slots, pilot-domain projection at
 * the UEs, self-interference estimation and the four local beamformer
 * reconstructions.
 *
 * Every node update below reads only what that node can observe: its own
 * received pilot blocks, its own pilots and its own previous beamformers.
 * The network-wide scalings beta1, beta2 and beta3 are the only shared
 * constants.
 *
 * Scaling convention. Slot-2 AP blocks are divided by sqrt(beta1); slot-2
 * and slot-3 DL-UE blocks by sqrt(beta2); slot-3 UL-UE blocks by sqrt(beta3).
 * Receivers multiply the affected pilot-subspace components back by the same
 * known factors before use, so the reconstructions do not depend on the
 * scalings in the noiseless limit. With all betas equal to 1 the expressions
 * reduce to the plain protocol equations.
 */

#include "fdcf/channel.hpp"
#include "fdcf/config.hpp"
#include "fdcf/metrics.hpp"
#include "fdcf/numerics.hpp"
#include "fdcf/perfect_csi.hpp"

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <ostream>
#include <string>
#include <vector>

namespace fdcf {

// ---------------------------------------------------------------------------
// Pilots

struct PilotBook {
  int tau = 0;
  CMat P;  ///< tau x K_dl
  CMat Q;  ///< tau x K_ul

  CVec p(int k) const { return P.col(k); }
  CVec q(int u) const { return Q.col(u); }
};

/// Unitary DFT basis scaled by sqrt(tau); a random column subset is dealt to
/// the DL UEs (P) and then the UL UEs (Q).
inline PilotBook build_pilots(int tau, int K_dl, int K_ul, RngStream& rng) {
  if (tau < K_dl + K_ul) throw ConfigError("tau must be ≥ K_dl+K_ul");
  require(K_dl >= 0 && K_ul >= 0, "build_pilots: negative UE count");
  std::vector<int> cols(tau);
  std::iota(cols.begin(), cols.end(), 0);
  for (int i = tau - 1; i > 0; --i) {
    const int j = static_cast<int>(rng.uniform(0.0, static_cast<double>(i + 1)));
    std::swap(cols[i], cols[std::min(j, i)]);
  }
  auto dft_col = [tau](int m) {
    CVec c(tau);
    for (int n = 0; n < tau; ++n) {
      const double ang = -2.0 * 3.14159265358979323846 * static_cast<double>((static_cast<long>(n) * m) % tau) / tau;
      c(n) = cd(std::cos(ang), std::sin(ang));
    }
    return c;
  };
  PilotBook pb;
  pb.tau = tau;
  pb.P.resize(tau, K_dl);
  pb.Q.resize(tau, K_ul);
  for (int k = 0; k < K_dl; ++k) pb.P.col(k) = dft_col(cols[k]);
  for (int u = 0; u < K_ul; ++u) pb.Q.col(u) = dft_col(cols[K_dl + u]);
  return pb;
}

inline PilotBook build_pilots(const NetworkConfig& cfg, RngStream& rng) {
  return build_pilots(cfg.tau, cfg.K_dl, cfg.K_ul, rng);
}

// ---------------------------------------------------------------------------
// Slot signals

struct OtaScaling {
  double beta1 = 1.0;
  double beta2 = 1.0;
  double beta3 = 1.0;
};

/// Per-slot transmit power bookkeeping. Ratios are ||X||_F^2 / (tau budget).
struct SlotPowerLog {
  int clipped = 0;
  double max_ratio = 0.0;
};

struct OtaDiagnostics {
  SlotPowerLog slot1_ap, slot1_ue, slot2_ap, slot2_ue, slot3_dl_ue, slot3_ul_ue;
  std::vector<OtaScaling> scalings;  ///< one per iteration

  int total_clipped() const {
    return slot1_ap.clipped + slot1_ue.clipped + slot2_ap.clipped + slot2_ue.clipped + slot3_dl_ue.clipped +
           slot3_ul_ue.clipped;
  }
  double max_ratio() const {
    return std::max({slot1_ap.max_ratio, slot1_ue.max_ratio, slot2_ap.max_ratio, slot2_ue.max_ratio,
                     slot3_dl_ue.max_ratio, slot3_ul_ue.max_ratio});
  }
};

struct OtaSlotSignals {
  std::vector<CMat> Y_ul1;  ///< [B] M x tau
  std::vector<CMat> Y_dl1;  ///< [K_dl] N x tau
  std::vector<CMat> Y_ul2;  ///< [B]
  std::vector<CMat> Y_dl2;  ///< [K_ul]
  std::vector<CMat> Y_ul3;  ///< [B]
  std::vector<CMat> X3_dl;  ///< [K_dl] slot-3 DL-UE retransmissions
  std::vector<CMat> X3_ul;  ///< [K_ul] slot-3 UL-UE retransmissions
  VecGrid ghat;             ///< [B][K_dl]
};

/// Where the receiver noise of one slot comes from. Streams are keyed per
/// (drop, iteration, slot) so skipping a slot never shifts later draws.
struct NoiseSource {
  std::uint64_t seed = 0;
  std::uint64_t drop = 0;
  std::uint64_t salt = 0;

  RngStream stream(int iteration, int slot, Purpose purpose = Purpose::noise) const {
    return RngStream(seed, stream_key({drop, static_cast<std::uint64_t>(purpose), salt,
                                       static_cast<std::uint64_t>(iteration), static_cast<std::uint64_t>(slot)}));
  }
};

namespace detail {

/// Scales X down to the budget when needed and records the event.
inline void enforce_budget(CMat& x, double budget, int tau, SlotPowerLog& log) {
  const double p = x.squaredNorm() / tau;
  if (budget <= 0.0) return;
  double ratio = p / budget;
  if (ratio > 1.0 + 1e-9) {
    x *= std::sqrt(budget / p);
    ++log.clipped;
    ratio = x.squaredNorm() / tau / budget;
  }
  log.max_ratio = std::max(log.max_ratio, ratio);
  require(ratio <= 1.0 + 1e-6, "transmit block exceeds its power budget");
}

}  // namespace detail

/// Slot 1: APs send DL-precoded pilots, UL UEs send UL-precoded pilots.
inline void slot1(const ChannelRealization& ch, const BeamformerSet& bf, const PilotBook& pb,
                  const NetworkConfig& cfg, RngStream& rng, OtaSlotSignals& sig, OtaDiagnostics* diag = nullptr) {
  const int tau = pb.tau;
  OtaDiagnostics scratch;
  OtaDiagnostics& d = diag ? *diag : scratch;
  std::vector<CMat> x_ap(ch.B, CMat::Zero(ch.M, tau));
  for (int b = 0; b < ch.B; ++b) {
    for (int k = 0; k < ch.K_dl; ++k) x_ap[b].noalias() += bf.w_dl[b][k] * pb.P.col(k).adjoint();
    detail::enforce_budget(x_ap[b], cfg.rho_ap, tau, d.slot1_ap);
  }
  std::vector<CMat> x_ue(ch.K_ul);
  for (int u = 0; u < ch.K_ul; ++u) {
    x_ue[u] = bf.v_ul[u] * pb.Q.col(u).adjoint();
    detail::enforce_budget(x_ue[u], cfg.rho_ue, tau, d.slot1_ue);
  }
  sig.Y_ul1.assign(ch.B, CMat());
  for (int b = 0; b < ch.B; ++b) {
    CMat y = draw_complex_gaussian(rng, ch.M, tau, cfg.sigma2_ap);
    for (int u = 0; u < ch.K_ul; ++u) y.noalias() += ch.H_ul(b, u) * x_ue[u];
    for (int c = 0; c < ch.B; ++c) y.noalias() += ch.S[b][c] * x_ap[c];
    sig.Y_ul1[b] = std::move(y);
  }
  sig.Y_dl1.assign(ch.K_dl, CMat());
  for (int k = 0; k < ch.K_dl; ++k) {
    CMat y = draw_complex_gaussian(rng, ch.N, tau, cfg.sigma2_ue);
    for (int b = 0; b < ch.B; ++b) y.noalias() += ch.H_dl(b, k).adjoint() * x_ap[b];
    for (int u = 0; u < ch.K_ul; ++u) y.noalias() += ch.F[k][u].adjoint() * x_ue[u];
    sig.Y_dl1[k] = std::move(y);
  }
}

/// Slot 2: APs send UL-combiner-precoded pilots, DL UEs send their combiners.
inline void slot2(const ChannelRealization& ch, const BeamformerSet& bf, const PilotBook& pb, const OtaScaling& sc,
                  const NetworkConfig& cfg, RngStream& rng, OtaSlotSignals& sig, OtaDiagnostics* diag = nullptr) {
  const int tau = pb.tau;
  OtaDiagnostics scratch;
  OtaDiagnostics& d = diag ? *diag : scratch;
  const double s1 = 1.0 / std::sqrt(sc.beta1);
  const double s2 = 1.0 / std::sqrt(sc.beta2);
  std::vector<CMat> x_ap(ch.B, CMat::Zero(ch.M, tau));
  for (int b = 0; b < ch.B; ++b) {
    for (int u = 0; u < ch.K_ul; ++u) x_ap[b].noalias() += s1 * bf.w_ul[b][u] * pb.Q.col(u).adjoint();
    detail::enforce_budget(x_ap[b], cfg.rho_ap, tau, d.slot2_ap);
  }
  std::vector<CMat> x_ue(ch.K_dl);
  for (int k = 0; k < ch.K_dl; ++k) {
    x_ue[k] = s2 * bf.v_dl[k] * pb.P.col(k).adjoint();
    detail::enforce_budget(x_ue[k], cfg.rho_ue, tau, d.slot2_ue);
  }
  sig.Y_ul2.assign(ch.B, CMat());
  for (int b = 0; b < ch.B; ++b) {
    CMat y = draw_complex_gaussian(rng, ch.M, tau, cfg.sigma2_ap);
    for (int k = 0; k < ch.K_dl; ++k) y.noalias() += ch.H_dl(b, k) * x_ue[k];
    for (int c = 0; c < ch.B; ++c) y.noalias() += ch.S[b][c] * x_ap[c];
    sig.Y_ul2[b] = std::move(y);
  }
  sig.Y_dl2.assign(ch.K_ul, CMat());
  for (int u = 0; u < ch.K_ul; ++u) {
    CMat y = draw_complex_gaussian(rng, ch.N, tau, cfg.sigma2_ue);
    for (int b = 0; b < ch.B; ++b) y.noalias() += ch.H_ul(b, u).adjoint() * x_ap[b];
    for (int k = 0; k < ch.K_dl; ++k) y.noalias() += ch.F[k][u] * x_ue[k];
    sig.Y_dl2[u] = std::move(y);
  }
}

/// Slot-3 retransmission of DL UE k: v v^H Y_dl1 P P^H / (tau sqrt(beta2)).
inline CMat slot3_dl_block(const CVec& v, const CMat& y_dl1, const PilotBook& pb, const OtaScaling& sc) {
  return v * (v.adjoint() * project_pilot_subspace(y_dl1, pb.P, pb.tau)) / std::sqrt(sc.beta2);
}

/// Slot-3 retransmission of UL UE u: sqrt(beta1) v v^H Y_dl2 Q Q^H / (tau sqrt(beta3)).
inline CMat slot3_ul_block(const CVec& v, const CMat& y_dl2, const PilotBook& pb, const OtaScaling& sc) {
  return std::sqrt(sc.beta1 / sc.beta3) * v * (v.adjoint() * project_pilot_subspace(y_dl2, pb.Q, pb.tau));
}

/**
 * Slot 3: every UE projects what it received onto its own pilot family,
 * precodes with its current beamformer outer product and sends it back; the
 * APs listen. `v_ul_slot3` are the UL precoders the UL UEs transmitted in
 * slot 1, so that the APs' slot-1 and slot-3 observations describe the same
 * precoders.
 */
inline void slot3(const ChannelRealization& ch, const std::vector<CVec>& v_dl, const std::vector<CVec>& v_ul_slot3,
                  const PilotBook& pb, const OtaScaling& sc, const NetworkConfig& cfg, RngStream& rng,
                  OtaSlotSignals& sig, OtaDiagnostics* diag = nullptr) {
  const int tau = pb.tau;
  OtaDiagnostics scratch;
  OtaDiagnostics& d = diag ? *diag : scratch;
  sig.X3_dl.assign(ch.K_dl, CMat());
  for (int k = 0; k < ch.K_dl; ++k) {
    sig.X3_dl[k] = slot3_dl_block(v_dl[k], sig.Y_dl1[k], pb, sc);
    detail::enforce_budget(sig.X3_dl[k], cfg.rho_ue, tau, d.slot3_dl_ue);
  }
  sig.X3_ul.assign(ch.K_ul, CMat());
  for (int u = 0; u < ch.K_ul; ++u) {
    sig.X3_ul[u] = slot3_ul_block(v_ul_slot3[u], sig.Y_dl2[u], pb, sc);
    detail::enforce_budget(sig.X3_ul[u], cfg.rho_ue, tau, d.slot3_ul_ue);
  }
  sig.Y_ul3.assign(ch.B, CMat());
  for (int b = 0; b < ch.B; ++b) {
    CMat y = draw_complex_gaussian(rng, ch.M, tau, cfg.sigma2_ap);
    for (int k = 0; k < ch.K_dl; ++k) y.noalias() += ch.H_dl(b, k) * sig.X3_dl[k];
    for (int u = 0; u < ch.K_ul; ++u) y.noalias() += ch.H_ul(b, u) * sig.X3_ul[u];
    sig.Y_ul3[b] = std::move(y);
  }
}

/// Leakage estimate of DL stream i at AP b: Y_ul1[b] p_i / tau.
inline CVec estimate_si(const CMat& y_ul1, const PilotBook& pb, int i) {
  return y_ul1 * pb.P.col(i) / static_cast<double>(pb.tau);
}

// ---------------------------------------------------------------------------
// Local updates

/// DL UE combiner: (Y Y^H)^-1 Y p_k.
inline CVec update_v_dl_ota(int k, const CMat& y_dl1, const PilotBook& pb) {
  const CMat gram = y_dl1 * y_dl1.adjoint();
  return hermitian_solve_vec(gram, y_dl1 * pb.P.col(k));
}

/// Best-response step a DL UE can measure from slot 1: own-pilot energy
/// against UL-pilot (cross-link) energy.
inline double dl_ue_step_ota(int k, const CMat& y_dl1, const PilotBook& pb, const UpdateControls& ctl) {
  if (ctl.ue_damping == DampingMode::fixed) return ctl.alpha_fixed;
  const double t2 = static_cast<double>(pb.tau) * pb.tau;
  const double sig = (y_dl1 * pb.P.col(k)).squaredNorm() / t2;
  const double xint = pb.Q.cols() ? (y_dl1 * pb.Q).squaredNorm() / t2 : 0.0;
  return adaptive_step(sig, xint, ctl.alpha_min);
}

/// UL UE precoder from slot 2: (Y Y^H + tau mu I)^-1 Y q_u on the
/// beta1-normalized block, mu >= 0 bisected onto ||v||^2 <= rho_ue.
inline UlPrecoderUpdate update_v_ul_ota(int u, const CMat& y_dl2, const PilotBook& pb, const OtaScaling& sc,
                                        const NetworkConfig& cfg, const UpdateControls& ctl) {
  const CMat y = std::sqrt(sc.beta1) * y_dl2;
  const double tau = pb.tau;
  const CVec rhs = y * pb.Q.col(u);
  if (rhs.squaredNorm() == 0.0) return {CVec::Zero(y.rows()), 0.0};
  // (Y Y^H + tau mu I)^-1 Y q = ((Y Y^H)/tau + mu I)^-1 (Y q)/tau
  const auto s = power_constrained_solve(y * y.adjoint() / tau, CMat(rhs / tau), cfg.rho_ue, ctl.bisect_tol);
  return {s.x.col(0), s.lambda};
}

inline double ul_ue_step_ota(int u, const CMat& y_dl2, const PilotBook& pb, const OtaScaling& sc,
                             const UpdateControls& ctl) {
  if (ctl.ue_damping == DampingMode::fixed) return ctl.alpha_fixed;
  const double t2 = static_cast<double>(pb.tau) * pb.tau;
  const double sig = sc.beta1 * (y_dl2 * pb.Q.col(u)).squaredNorm() / t2;
  const double xint = pb.P.cols() ? sc.beta2 * (y_dl2 * pb.P).squaredNorm() / t2 : 0.0;
  return adaptive_step(sig, xint, ctl.alpha_min);
}

/**
 * DL precoders of AP b from its slot-2 and slot-3 observations:
 *   G = Y2 P P^H Y2^H,
 *   w_k = (G + tau^2 (c_b + lambda - sigma_ue^2) I)^-1
 *         (tau Y2 p_k - (tau Y3 p_k - G w_old_k) + tau^2 c_b w_old_k),
 * with Y2, Y3 beta2-normalized, c_b the proximal weight of G / tau^2 and
 * lambda >= sigma_ue^2 bisected onto the per-AP budget. A null y_ul3 drops
 * the bracket (local MMSE).
 */
inline ApDlUpdate update_w_dl_ota(const CMat& y_ul2, const CMat* y_ul3, const std::vector<CVec>& w_old,
                                  const PilotBook& pb, const OtaScaling& sc, const NetworkConfig& cfg,
                                  const UpdateControls& ctl) {
  const int Kd = static_cast<int>(pb.P.cols());
  ApDlUpdate out;
  if (Kd == 0) return out;
  const double tau = pb.tau;
  const double t2 = tau * tau;
  const double root_b2 = std::sqrt(sc.beta2);
  const CMat y2p = root_b2 * (y_ul2 * pb.P);  // M x K_dl
  const CMat gram = y2p * y2p.adjoint();
  CMat rhs = tau * y2p;
  if (y_ul3) {
    const CMat y3p = root_b2 * ((*y_ul3) * pb.P);
    for (int k = 0; k < Kd; ++k) rhs.col(k) -= tau * y3p.col(k) - gram * w_old[k];
  }
  CMat a = gram / t2;
  rhs /= t2;
  const double cw = prox_weight(a, ctl);
  a.diagonal().array() += cw;
  for (int k = 0; k < Kd; ++k) rhs.col(k) += cw * w_old[k];
  const auto s = power_constrained_solve(a, rhs, cfg.rho_ap, ctl.bisect_tol);
  out.lambda = s.lambda + cfg.sigma2_ue;
  for (int k = 0; k < Kd; ++k) out.w.push_back(s.x.col(k));
  return out;
}

/// Effective UL variance nu_bar = sigma_ap^2 + nu_b + eps_si, with the
/// residual-SI proxy eps_si = M sigma_ap^2 / tau and nu_b = nu_scale eps_si.
inline double effective_ul_variance(const NetworkConfig& cfg, const UpdateControls& ctl, int tau) {
  const double eps_si = static_cast<double>(cfg.M) * cfg.sigma2_ap / tau;
  return cfg.sigma2_ap + ctl.nu_scale * eps_si + eps_si;
}

/**
 * UL combiners of AP b from its slot-1 and slot-3 observations:
 *   G = Y1 Q Q^H Y1^H,
 *   w_u = (G + tau^2 (nu_bar + c_b) I)^-1
 *         (tau Y1 q_u - (tau Y3 q_u - G w_old_u) + tau^2 c_b w_old_u),
 * with Y3 beta3-normalized and c_b = prox trace(G) / (tau^2 M).
 */
inline std::vector<CVec> update_w_ul_ota(const CMat& y_ul1, const CMat* y_ul3, const std::vector<CVec>& w_old,
                                         const PilotBook& pb, const OtaScaling& sc, double nu_bar,
                                         double prox = 0.0) {
  const int Ku = static_cast<int>(pb.Q.cols());
  std::vector<CVec> out;
  if (Ku == 0) return out;
  const double tau = pb.tau;
  const double t2 = tau * tau;
  const CMat y1q = y_ul1 * pb.Q;
  const CMat gram = y1q * y1q.adjoint();
  CMat rhs = tau * y1q;
  if (y_ul3) {
    const CMat y3q = std::sqrt(sc.beta3) * ((*y_ul3) * pb.Q);
    for (int u = 0; u < Ku; ++u) rhs.col(u) -= tau * y3q.col(u) - gram * w_old[u];
  }
  CMat a = gram / t2;
  rhs /= t2;
  const double cw = prox > 0.0 ? prox * a.trace().real() / static_cast<double>(a.rows()) : 0.0;
  a.diagonal().array() += cw;
  for (int u = 0; u < Ku; ++u) rhs.col(u) += cw * w_old[u];
  a.diagonal().array() += nu_bar;
  const CMat w = hermitian_solve(a, rhs);
  for (int u = 0; u < Ku; ++u) out.push_back(w.col(u));
  return out;
}

/// Cross term of AP b's DL precoder for stream k as the AP sees it:
/// Y3 p_k / tau - G w_old / tau^2 with Y2, Y3 beta2-normalized.
inline CVec reconstruct_xi_dl(int k, const CMat& y_ul2, const CMat& y_ul3, const CVec& w_old, const PilotBook& pb,
                              const OtaScaling& sc) {
  const double tau = pb.tau;
  const double rb = std::sqrt(sc.beta2);
  const CMat y2p = rb * (y_ul2 * pb.P);
  return rb * (y_ul3 * pb.P.col(k)) / tau - y2p * (y2p.adjoint() * w_old) / (tau * tau);
}

/// Cross term of AP b's UL combiner for stream u: Y3 q_u / tau - G w_old / tau^2
/// with Y3 beta3-normalized.
inline CVec reconstruct_xi_ul(int u, const CMat& y_ul1, const CMat& y_ul3, const CVec& w_old, const PilotBook& pb,
                              const OtaScaling& sc) {
  const double tau = pb.tau;
  const CMat y1q = y_ul1 * pb.Q;
  return std::sqrt(sc.beta3) * (y_ul3 * pb.Q.col(u)) / tau - y1q * (y1q.adjoint() * w_old) / (tau * tau);
}

// ---------------------------------------------------------------------------
// Scalings

/// Smallest scalings that keep every slot-2 and slot-3 block within its
/// budget in the noiseless model, inflated by the configured headroom. beta1
/// and beta2 share one value so the UL-UE slot-2 observation keeps the
/// relative weight of its two pilot families.
inline OtaScaling adaptive_scaling(const ChannelRealization& ch, const BeamformerSet& bf,
                                   const std::vector<CVec>& v_ul_slot3, const NetworkConfig& cfg) {
  BeamformerSet probe = bf;
  probe.v_ul = v_ul_slot3;
  const auto c = build_cache(ch, probe, ResidualSI::statistical(0.0));
  double need = 0.0;
  for (int b = 0; b < ch.B; ++b) {
    double p = 0.0;
    for (int u = 0; u < ch.K_ul; ++u) p += bf.w_ul[b][u].squaredNorm();
    need = std::max(need, p / cfg.rho_ap);
  }
  for (int k = 0; k < ch.K_dl; ++k) {
    const CVec& v = bf.v_dl[k];
    need = std::max(need, v.squaredNorm() / cfg.rho_ue);
    double g = 0.0;
    for (int i = 0; i < ch.K_dl; ++i) g += std::norm(v.dot(c.h_dl[k][i]));
    need = std::max(need, v.squaredNorm() * g / cfg.rho_ue);
  }
  double need3 = 0.0;
  for (int u = 0; u < ch.K_ul; ++u) {
    const CVec& v = v_ul_slot3[u];
    double g = 0.0;
    for (int j = 0; j < ch.K_ul; ++j) g += std::norm(v.dot(c.hcheck_ul[u][j]));
    need3 = std::max(need3, v.squaredNorm() * g / cfg.rho_ue);
  }
  const double beta = std::max(1.0, cfg.beta_headroom * need);
  return {beta, beta, std::max(1.0, cfg.beta_headroom * need3)};
}

// ---------------------------------------------------------------------------
// Driver

enum class IbtMode { proposed, separate, local };

struct IbtOptions {
  NoiseSource noise{};
  bool keep_iterates = false;
  bool keep_signals = false;
};

struct IbtResult {
  BeamformerSet bf;
  std::vector<IterationMetrics> metrics;  ///< index 0 is the initialization
  std::vector<BeamformerSet> iterates;
  std::vector<OtaSlotSignals> signals;
  OtaDiagnostics diag;
  PilotBook pilots;
};

/// Explicit residual SI for the beamformers in use: the APs sound their DL
/// precoders once (a slot-1 style block on their own pilots), estimate the
/// leakage from it and subtract. Noise comes from the evaluation stream.
inline ResidualSI sounded_residual_si(const ChannelRealization& ch, const BeamformerSet& bf, const PilotBook& pb,
                                      const NetworkConfig& cfg, RngStream& rng) {
  const VecGrid leak = leakage_vectors(ch, bf);
  VecGrid delta(ch.B, std::vector<CVec>(ch.K_dl));
  for (int b = 0; b < ch.B; ++b) {
    CMat y = draw_complex_gaussian(rng, ch.M, pb.tau, cfg.sigma2_ap);
    for (int c = 0; c < ch.B; ++c)
      for (int i = 0; i < ch.K_dl; ++i) y.noalias() += ch.S[b][c] * bf.w_dl[c][i] * pb.P.col(i).adjoint();
    for (int i = 0; i < ch.K_dl; ++i) delta[b][i] = leak[b][i] - estimate_si(y, pb, i);
  }
  return ResidualSI::explicit_from(std::move(delta));
}

/**
 * Iterative bi-directional training.
 *
 * One iteration: slot 1, DL combiners, slot 2, UL precoders, slot 3, DL
 * precoders, UL combiners, then damped application of every candidate.
 * Training runs over `training` (the separate scheme passes a realization
 * without UE-to-UE channels); metrics are genie evaluations on `truth` with
 * the residual SI left after sounding-based cancellation.
 */
inline IbtResult run_ibt(const ChannelRealization& truth, const ChannelRealization& training,
                         const NetworkConfig& cfg, const UpdateControls& ctl, IbtMode mode, const PilotBook& pb,
                         const IbtOptions& opt = {}) {
  IbtResult res;
  res.pilots = pb;
  BeamformerSet bf = initialize_beamformers(truth, cfg);
  const bool cross_terms = mode != IbtMode::local;
  const double nu_bar = effective_ul_variance(cfg, ctl, pb.tau);

  auto record = [&](int it) {
    auto rng = opt.noise.stream(it, 0, Purpose::eval_noise);
    const ResidualSI si = sounded_residual_si(truth, bf, pb, cfg, rng);
    res.metrics.push_back(evaluate(truth, bf, si, cfg, it));
    if (opt.keep_iterates) res.iterates.push_back(bf);
  };
  record(0);

  for (int it = 1; it <= ctl.max_iters; ++it) {
    OtaSlotSignals sig;

    auto rng1 = opt.noise.stream(it, 1);
    slot1(training, bf, pb, cfg, rng1, sig, &res.diag);
    sig.ghat.assign(truth.B, std::vector<CVec>(truth.K_dl));
    for (int b = 0; b < truth.B; ++b)
      for (int i = 0; i < truth.K_dl; ++i) sig.ghat[b][i] = estimate_si(sig.Y_ul1[b], pb, i);

    for (int k = 0; k < truth.K_dl; ++k) {
      const CVec cand = update_v_dl_ota(k, sig.Y_dl1[k], pb);
      bf.v_dl[k] = damped_apply(bf.v_dl[k], cand, dl_ue_step_ota(k, sig.Y_dl1[k], pb, ctl));
    }

    const std::vector<CVec> v_ul_used = bf.v_ul;
    const OtaScaling sc = cfg.scaling == ScalingMode::adaptive ? adaptive_scaling(training, bf, v_ul_used, cfg)
                                                               : OtaScaling{cfg.beta1, cfg.beta2, cfg.beta3};
    res.diag.scalings.push_back(sc);

    auto rng2 = opt.noise.stream(it, 2);
    slot2(training, bf, pb, sc, cfg, rng2, sig, &res.diag);
    std::vector<CVec> v_ul(truth.K_ul);
    std::vector<double> a_ul(truth.K_ul);
    for (int u = 0; u < truth.K_ul; ++u) {
      v_ul[u] = update_v_ul_ota(u, sig.Y_dl2[u], pb, sc, cfg, ctl).v;
      a_ul[u] = ul_ue_step_ota(u, sig.Y_dl2[u], pb, sc, ctl);
    }

    if (cross_terms) {
      auto rng3 = opt.noise.stream(it, 3);
      slot3(training, bf.v_dl, v_ul_used, pb, sc, cfg, rng3, sig, &res.diag);
    }

    std::vector<ApDlUpdate> w_dl(truth.B);
    std::vector<std::vector<CVec>> w_ul(truth.B);
    for (int b = 0; b < truth.B; ++b) {
      const CMat* y3 = cross_terms ? &sig.Y_ul3[b] : nullptr;
      w_dl[b] = update_w_dl_ota(sig.Y_ul2[b], y3, bf.w_dl[b], pb, sc, cfg, ctl);
      w_ul[b] = update_w_ul_ota(sig.Y_ul1[b], y3, bf.w_ul[b], pb, sc, nu_bar, ctl.prox_ap);
    }

    for (int u = 0; u < truth.K_ul; ++u) bf.v_ul[u] = damped_apply(bf.v_ul[u], v_ul[u], a_ul[u]);
    for (int b = 0; b < truth.B; ++b) {
      for (int k = 0; k < truth.K_dl; ++k) bf.w_dl[b][k] = damped_apply(bf.w_dl[b][k], w_dl[b].w[k], ctl.alpha_ap);
      for (int u = 0; u < truth.K_ul; ++u) bf.w_ul[b][u] = damped_apply(bf.w_ul[b][u], w_ul[b][u], ctl.alpha_ap);
    }
    if (!bf.finite()) throw RuntimeAbort("non-finite beamformer at IBT iteration " + std::to_string(it));
    if (opt.keep_signals) res.signals.push_back(std::move(sig));
    record(it);
  }
  res.bf = std::move(bf);
  return res;
}

inline IbtResult run_ibt(const ChannelRealization& ch, const NetworkConfig& cfg, const UpdateControls& ctl,
                         IbtMode mode, const PilotBook& pb, const IbtOptions& opt = {}) {
  if (mode == IbtMode::separate) return run_ibt(ch, without_cross_link(ch), cfg, ctl, mode, pb, opt);
  return run_ibt(ch, ch, cfg, ctl, mode, pb, opt);
}

/// Per-slot signal dump in the channel text format.
inline void write_slot_text(std::ostream& os, const OtaSlotSignals& s) {
  os << "# fdcf slot signals v1\n";
  auto dump = [&os](const char* tag, const std::vector<CMat>& v) {
    for (std::size_t i = 0; i < v.size(); ++i) write_matrix_block(os, tag, static_cast<int>(i), 0, v[i]);
  };
  dump("Y_ul1", s.Y_ul1);
  dump("Y_dl1", s.Y_dl1);
  dump("Y_ul2", s.Y_ul2);
  dump("Y_dl2", s.Y_dl2);
  dump("Y_ul3", s.Y_ul3);
  for (std::size_t b = 0; b < s.ghat.size(); ++b)
    for (std::size_t i = 0; i < s.ghat[b].size(); ++i)
      write_matrix_block(os, "ghat", static_cast<int>(b), static_cast<int>(i), CMat(s.ghat[b][i]));
}

}  // namespace fdcf
