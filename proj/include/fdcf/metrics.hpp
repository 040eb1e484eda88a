#pragma once
/**
 * @file metrics.hpp
 * @brief Beamformer state, effective-channel caches and the closed-form
 * SINR / MSE / rate evaluation of the full-duplex signal model.
 *
 * Index conventions (b, c: APs; k, i: DL UEs; u, j: UL UEs):
 *   h_dl[k][i]      = sum_b H[b][k]^H w_dl[b][i]     DL UE k hears stream i
 *   f_ul[k][u]      = F[k][u]^H v_ul[u]              DL UE k hears UL UE u
 *   h_ul[b][j]      = H[b][j] v_ul[j]                AP b hears UL UE j
 *   hcheck_dl[b][k] = H[b][k] v_dl[k]
 *   hcheck_ul[u][j] = sum_b H[b][u]^H w_ul[b][j]     UL UE u through combiner j
 *   f_dl[k][u]      = F[k][u] v_dl[k]
 *   Phi_dl[b][c]    = sum_i hcheck_dl[b][i] hcheck_dl[c][i]^H
 *   Phi_ul[b][c]    = sum_j h_ul[b][j] h_ul[c][j]^H
 *   xi_dl[b][k]     = sum_{c != b} Phi_dl[b][c] w_dl[c][k]
 *   xi_ul[b][u]     = sum_{c != b} Phi_ul[b][c] w_ul[c][u]
 */

#include "fdcf/channel.hpp"
#include "fdcf/config.hpp"
#include "fdcf/numerics.hpp"

#include <cmath>
#include <numeric>
#include <vector>

namespace fdcf {

using VecGrid = std::vector<std::vector<CVec>>;

struct BeamformerSet {
  VecGrid w_dl;               ///< [B][K_dl] M-vectors
  std::vector<CVec> v_dl;     ///< [K_dl] N-vectors
  std::vector<CVec> v_ul;     ///< [K_ul] N-vectors
  VecGrid w_ul;               ///< [B][K_ul] M-vectors

  int B() const { return static_cast<int>(w_dl.size()); }
  int K_dl() const { return static_cast<int>(v_dl.size()); }
  int K_ul() const { return static_cast<int>(v_ul.size()); }

  static BeamformerSet zeros(int B, int M, int N, int K_dl, int K_ul) {
    BeamformerSet bf;
    bf.w_dl.assign(B, std::vector<CVec>(K_dl, CVec::Zero(M)));
    bf.v_dl.assign(K_dl, CVec::Zero(N));
    bf.v_ul.assign(K_ul, CVec::Zero(N));
    bf.w_ul.assign(B, std::vector<CVec>(K_ul, CVec::Zero(M)));
    return bf;
  }

  bool finite() const {
    for (const auto& row : w_dl)
      for (const auto& v : row)
        if (!v.allFinite()) return false;
    for (const auto& row : w_ul)
      for (const auto& v : row)
        if (!v.allFinite()) return false;
    for (const auto& v : v_dl)
      if (!v.allFinite()) return false;
    for (const auto& v : v_ul)
      if (!v.allFinite()) return false;
    return true;
  }
};

inline double ap_dl_power(const BeamformerSet& bf, int b) {
  double p = 0.0;
  for (const auto& w : bf.w_dl[b]) p += w.squaredNorm();
  return p;
}

/// Per-AP DL and per-UE UL power budgets hold to (1 + rel_tol).
inline bool power_feasible(const BeamformerSet& bf, double rho_ap, double rho_ue, double rel_tol = 1e-6) {
  for (int b = 0; b < bf.B(); ++b)
    if (ap_dl_power(bf, b) > rho_ap * (1.0 + rel_tol)) return false;
  for (const auto& v : bf.v_ul)
    if (v.squaredNorm() > rho_ue * (1.0 + rel_tol)) return false;
  return true;
}

/// Residual leakage after digital self-interference subtraction.
struct ResidualSI {
  enum class Model { statistical, explicit_leakage };
  Model model = Model::statistical;
  double eps = 0.0;  ///< statistical: Xi[b] = eps I
  VecGrid delta;     ///< explicit: [B][K_dl] M-vectors

  static ResidualSI statistical(double eps) {
    ResidualSI si;
    si.model = Model::statistical;
    si.eps = eps;
    return si;
  }
  static ResidualSI explicit_from(VecGrid delta) {
    ResidualSI si;
    si.model = Model::explicit_leakage;
    si.delta = std::move(delta);
    return si;
  }
};

/// sum_c S[b][c] w_dl[c][i] for every (b, i): the leakage the AP cancels.
inline VecGrid leakage_vectors(const ChannelRealization& ch, const BeamformerSet& bf) {
  VecGrid g(ch.B, std::vector<CVec>(ch.K_dl, CVec::Zero(ch.M)));
  for (int b = 0; b < ch.B; ++b)
    for (int i = 0; i < ch.K_dl; ++i)
      for (int c = 0; c < ch.B; ++c) g[b][i] += ch.S[b][c] * bf.w_dl[c][i];
  return g;
}

struct EffectiveChannelCache {
  VecGrid h_dl, f_ul, h_ul, hcheck_dl, hcheck_ul, f_dl;
  MatGrid Phi_dl, Phi_ul;
  std::vector<CMat> Xi;
  VecGrid xi_dl, xi_ul;
};

inline EffectiveChannelCache build_cache(const ChannelRealization& ch, const BeamformerSet& bf,
                                         const ResidualSI& si) {
  const int B = ch.B, M = ch.M, N = ch.N, Kd = ch.K_dl, Ku = ch.K_ul;
  EffectiveChannelCache c;

  c.h_dl.assign(Kd, std::vector<CVec>(Kd, CVec::Zero(N)));
  for (int k = 0; k < Kd; ++k)
    for (int i = 0; i < Kd; ++i)
      for (int b = 0; b < B; ++b) c.h_dl[k][i].noalias() += ch.H_dl(b, k).adjoint() * bf.w_dl[b][i];

  c.f_ul.assign(Kd, std::vector<CVec>(Ku));
  c.f_dl.assign(Kd, std::vector<CVec>(Ku));
  for (int k = 0; k < Kd; ++k)
    for (int u = 0; u < Ku; ++u) {
      c.f_ul[k][u] = ch.F[k][u].adjoint() * bf.v_ul[u];
      c.f_dl[k][u] = ch.F[k][u] * bf.v_dl[k];
    }

  c.h_ul.assign(B, std::vector<CVec>(Ku));
  c.hcheck_dl.assign(B, std::vector<CVec>(Kd));
  for (int b = 0; b < B; ++b) {
    for (int j = 0; j < Ku; ++j) c.h_ul[b][j] = ch.H_ul(b, j) * bf.v_ul[j];
    for (int k = 0; k < Kd; ++k) c.hcheck_dl[b][k] = ch.H_dl(b, k) * bf.v_dl[k];
  }

  c.hcheck_ul.assign(Ku, std::vector<CVec>(Ku, CVec::Zero(N)));
  for (int u = 0; u < Ku; ++u)
    for (int j = 0; j < Ku; ++j)
      for (int b = 0; b < B; ++b) c.hcheck_ul[u][j].noalias() += ch.H_ul(b, u).adjoint() * bf.w_ul[b][j];

  c.Phi_dl.assign(B, std::vector<CMat>(B, CMat::Zero(M, M)));
  c.Phi_ul.assign(B, std::vector<CMat>(B, CMat::Zero(M, M)));
  for (int b = 0; b < B; ++b)
    for (int d = 0; d < B; ++d) {
      for (int i = 0; i < Kd; ++i) c.Phi_dl[b][d].noalias() += c.hcheck_dl[b][i] * c.hcheck_dl[d][i].adjoint();
      for (int j = 0; j < Ku; ++j) c.Phi_ul[b][d].noalias() += c.h_ul[b][j] * c.h_ul[d][j].adjoint();
    }

  c.Xi.assign(B, CMat::Zero(M, M));
  for (int b = 0; b < B; ++b) {
    if (si.model == ResidualSI::Model::statistical) {
      c.Xi[b].diagonal().setConstant(cd(si.eps, 0.0));
    } else {
      for (int i = 0; i < Kd; ++i) c.Xi[b].noalias() += si.delta[b][i] * si.delta[b][i].adjoint();
    }
  }

  c.xi_dl.assign(B, std::vector<CVec>(Kd, CVec::Zero(M)));
  c.xi_ul.assign(B, std::vector<CVec>(Ku, CVec::Zero(M)));
  for (int b = 0; b < B; ++b)
    for (int d = 0; d < B; ++d) {
      if (d == b) continue;
      for (int k = 0; k < Kd; ++k) c.xi_dl[b][k].noalias() += c.Phi_dl[b][d] * bf.w_dl[d][k];
      for (int u = 0; u < Ku; ++u) c.xi_ul[b][u].noalias() += c.Phi_ul[b][d] * bf.w_ul[d][u];
    }
  return c;
}

// ---------------------------------------------------------------------------
// DL side

struct DlTerms {
  double signal = 0.0;        ///< |v^H h_kk|^2
  double interference = 0.0;  ///< other DL streams
  double cross_link = 0.0;    ///< UL UEs through F
  double noise = 0.0;
  cd gain{0.0, 0.0};          ///< v^H h_kk
};

inline DlTerms dl_terms(int k, const EffectiveChannelCache& c, const BeamformerSet& bf, const NetworkConfig& cfg) {
  DlTerms t;
  const CVec& v = bf.v_dl[k];
  for (std::size_t i = 0; i < c.h_dl[k].size(); ++i) {
    const cd g = v.dot(c.h_dl[k][i]);
    if (static_cast<int>(i) == k) {
      t.signal = std::norm(g);
      t.gain = g;
    } else {
      t.interference += std::norm(g);
    }
  }
  for (const auto& f : c.f_ul[k]) t.cross_link += std::norm(v.dot(f));
  t.noise = cfg.sigma2_ue * v.squaredNorm();
  return t;
}

inline double sinr_dl(int k, const EffectiveChannelCache& c, const BeamformerSet& bf, const NetworkConfig& cfg) {
  const DlTerms t = dl_terms(k, c, bf, cfg);
  const double den = t.interference + t.cross_link + t.noise;
  if (bf.v_dl[k].squaredNorm() == 0.0 || !(den > 0.0)) return 0.0;
  return t.signal / den;
}

inline double mse_dl(int k, const EffectiveChannelCache& c, const BeamformerSet& bf, const NetworkConfig& cfg) {
  const DlTerms t = dl_terms(k, c, bf, cfg);
  return t.signal + t.interference + t.cross_link + t.noise - 2.0 * t.gain.real() + 1.0;
}

// ---------------------------------------------------------------------------
// UL side

struct UlTerms {
  double signal = 0.0;
  double interference = 0.0;
  double residual_si = 0.0;
  double noise = 0.0;
  cd gain{0.0, 0.0};  ///< sum_b w_ul[b][u]^H h_ul[b][u]
};

/// sum_b w_ul[b][u]^H h_ul[b][j]
inline cd ul_gain(int u, int j, const EffectiveChannelCache& c, const BeamformerSet& bf) {
  cd g{0.0, 0.0};
  for (std::size_t b = 0; b < bf.w_ul.size(); ++b) g += bf.w_ul[b][u].dot(c.h_ul[b][j]);
  return g;
}

inline UlTerms ul_terms(int u, const EffectiveChannelCache& c, const BeamformerSet& bf, const ResidualSI& si,
                        const NetworkConfig& cfg) {
  UlTerms t;
  const int Ku = bf.K_ul();
  for (int j = 0; j < Ku; ++j) {
    const cd g = ul_gain(u, j, c, bf);
    if (j == u) {
      t.signal = std::norm(g);
      t.gain = g;
    } else {
      t.interference += std::norm(g);
    }
  }
  double wnorm = 0.0;
  for (std::size_t b = 0; b < bf.w_ul.size(); ++b) wnorm += bf.w_ul[b][u].squaredNorm();
  t.noise = cfg.sigma2_ap * wnorm;
  if (si.model == ResidualSI::Model::statistical) {
    t.residual_si = si.eps * wnorm;
  } else {
    const int Kd = bf.K_dl();
    for (int i = 0; i < Kd; ++i) {
      cd s{0.0, 0.0};
      for (std::size_t b = 0; b < bf.w_ul.size(); ++b) s += bf.w_ul[b][u].dot(si.delta[b][i]);
      t.residual_si += std::norm(s);
    }
  }
  return t;
}

inline double sinr_ul(int u, const EffectiveChannelCache& c, const BeamformerSet& bf, const ResidualSI& si,
                      const NetworkConfig& cfg) {
  const UlTerms t = ul_terms(u, c, bf, si, cfg);
  const double den = t.interference + t.residual_si + t.noise;
  if (!(den > 0.0) || t.signal == 0.0) return 0.0;
  return t.signal / den;
}

inline double mse_ul(int u, const EffectiveChannelCache& c, const BeamformerSet& bf, const ResidualSI& si,
                     const NetworkConfig& cfg) {
  const UlTerms t = ul_terms(u, c, bf, si, cfg);
  return t.signal + t.interference + t.residual_si + t.noise - 2.0 * t.gain.real() + 1.0;
}

inline double sum_mse(const EffectiveChannelCache& c, const BeamformerSet& bf, const ResidualSI& si,
                      const NetworkConfig& cfg) {
  double s = 0.0;
  for (int k = 0; k < bf.K_dl(); ++k) s += mse_dl(k, c, bf, cfg);
  for (int u = 0; u < bf.K_ul(); ++u) s += mse_ul(u, c, bf, si, cfg);
  return s;
}

inline double sum_mse(const ChannelRealization& ch, const BeamformerSet& bf, const ResidualSI& si,
                      const NetworkConfig& cfg) {
  return sum_mse(build_cache(ch, bf, si), bf, si, cfg);
}

// ---------------------------------------------------------------------------
// Rates

struct IterationMetrics {
  int iteration = 0;
  std::vector<double> sinr_dl, sinr_ul;
  std::vector<double> rate_dl, rate_ul;
  double sum_rate = 0.0;  ///< sum of log2(1 + SINR), bits/s/Hz
  double sum_sinr = 0.0;  ///< raw SINR sum
  double sum_mse = 0.0;
};

inline double rate_of(double sinr) { return std::log2(1.0 + sinr); }

/// Sum of log2(1 + SINR) over every DL and UL UE.
inline double sum_rate(const IterationMetrics& m) {
  double r = 0.0;
  for (double s : m.sinr_dl) r += rate_of(s);
  for (double s : m.sinr_ul) r += rate_of(s);
  return r;
}

inline IterationMetrics evaluate(const ChannelRealization& ch, const BeamformerSet& bf, const ResidualSI& si,
                                 const NetworkConfig& cfg, int iteration) {
  const auto c = build_cache(ch, bf, si);
  IterationMetrics m;
  m.iteration = iteration;
  for (int k = 0; k < bf.K_dl(); ++k) {
    m.sinr_dl.push_back(sinr_dl(k, c, bf, cfg));
    m.rate_dl.push_back(rate_of(m.sinr_dl.back()));
  }
  for (int u = 0; u < bf.K_ul(); ++u) {
    m.sinr_ul.push_back(sinr_ul(u, c, bf, si, cfg));
    m.rate_ul.push_back(rate_of(m.sinr_ul.back()));
  }
  m.sum_rate = sum_rate(m);
  m.sum_sinr = std::accumulate(m.sinr_dl.begin(), m.sinr_dl.end(), 0.0) +
               std::accumulate(m.sinr_ul.begin(), m.sinr_ul.end(), 0.0);
  m.sum_mse = sum_mse(c, bf, si, cfg);
  return m;
}

/// (1 - t r_ibt / r_tot) R, clamped at zero once training eats the budget.
inline double effective_rate(double rate, int iterations, double r_ibt, double r_tot) {
  require(r_tot > 0.0, "effective_rate: r_tot must be positive");
  const double overhead = static_cast<double>(iterations) * r_ibt;
  if (overhead >= r_tot) return 0.0;
  return rate * (r_tot - overhead) / r_tot;
}

}  // namespace fdcf
