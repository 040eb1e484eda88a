#pragma once
/**
 * @file validation.hpp
 * @brief Property and oracle checks over seeded instances. The desk-scale
 * suite backs the `validate` subcommand; the figure-level checks need paper
 * scale and are run by the acceptance binary.
 */

#include "fdcf/baselines.hpp"
#include "fdcf/channel.hpp"
#include "fdcf/config.hpp"
#include "fdcf/experiment.hpp"
#include "fdcf/metrics.hpp"
#include "fdcf/numerics.hpp"
#include "fdcf/ota.hpp"
#include "fdcf/perfect_csi.hpp"

#include <chrono>
#include <cstdio>
#include <functional>
#include <string>
#include <vector>

namespace fdcf::validation {

struct CheckResult {
  std::string name;
  bool pass = false;
  std::string detail;
};

namespace detail {

inline std::string sci(double x) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.3e", x);
  return buf;
}

inline double rel_err(const CMat& a, const CMat& ref) {
  const double d = (a - ref).norm();
  const double n = ref.norm();
  return n > 0.0 ? d / n : d;
}

inline double bf_rel_err(const BeamformerSet& a, const BeamformerSet& ref) {
  double num = 0.0, den = 0.0;
  auto acc = [&](const CVec& x, const CVec& r) {
    num += (x - r).squaredNorm();
    den += r.squaredNorm();
  };
  for (std::size_t b = 0; b < ref.w_dl.size(); ++b) {
    for (std::size_t k = 0; k < ref.w_dl[b].size(); ++k) acc(a.w_dl[b][k], ref.w_dl[b][k]);
    for (std::size_t u = 0; u < ref.w_ul[b].size(); ++u) acc(a.w_ul[b][u], ref.w_ul[b][u]);
  }
  for (std::size_t k = 0; k < ref.v_dl.size(); ++k) acc(a.v_dl[k], ref.v_dl[k]);
  for (std::size_t u = 0; u < ref.v_ul.size(); ++u) acc(a.v_ul[u], ref.v_ul[u]);
  return den > 0.0 ? std::sqrt(num / den) : std::sqrt(num);
}

inline NetworkConfig noiseless(NetworkConfig c) {
  c.sigma2_ap = 0.0;
  c.sigma2_ue = 0.0;
  return c;
}

inline PilotBook pilots_for(const NetworkConfig& cfg, std::uint64_t seed, int drop) {
  auto rng = drop_stream(seed, static_cast<std::uint64_t>(drop), Purpose::pilots);
  return build_pilots(cfg, rng);
}

/// Runs the three slots once with a frozen beamformer set.
inline OtaSlotSignals sound_once(const ChannelRealization& ch, const BeamformerSet& bf, const PilotBook& pb,
                                 const OtaScaling& sc, const NetworkConfig& cfg, const NoiseSource& noise) {
  OtaSlotSignals sig;
  auto r1 = noise.stream(1, 1);
  auto r2 = noise.stream(1, 2);
  auto r3 = noise.stream(1, 3);
  slot1(ch, bf, pb, cfg, r1, sig);
  slot2(ch, bf, pb, sc, cfg, r2, sig);
  slot3(ch, bf.v_dl, bf.v_ul, pb, sc, cfg, r3, sig);
  return sig;
}

}  // namespace detail

// ---------------------------------------------------------------------------

/// Sum MSE never increases across exact block updates (sequential schedule,
/// unit steps, statistical SI).
inline CheckResult check_monotone_descent(int instances = 100, std::uint64_t seed = 101) {
  const auto t0 = std::chrono::steady_clock::now();
  NetworkConfig cfg = NetworkConfig::desk();
  UpdateControls ctl = cfg.controls;
  ctl.schedule = Schedule::sequential;
  ctl.ue_damping = DampingMode::fixed;
  ctl.alpha_fixed = 1.0;
  ctl.alpha_ap = 1.0;
  ctl.nu_scale = 0.0;
  ctl.prox_ap = 0.0;
  ctl.bisect_tol = 1e-12;
  const ResidualSI si = ResidualSI::statistical(cfg.stat_eps());
  double worst = 0.0;
  int violations = 0;
  for (int d = 0; d < instances; ++d) {
    const auto ch = make_drop(cfg, seed, static_cast<std::uint64_t>(d));
    const auto r = run_alt_opt(ch, cfg, ctl, si);
    for (std::size_t i = 1; i < r.mse_trace.size(); ++i) {
      const double inc = r.mse_trace[i] - r.mse_trace[i - 1];
      worst = std::max(worst, inc);
      if (inc > 1e-9) ++violations;
    }
    for (const auto& [before, after] : r.substeps) {
      worst = std::max(worst, after - before);
      if (after - before > 1e-9) ++violations;
    }
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  const bool pass = violations == 0 && secs < 30.0;
  return {"monotone descent", pass,
          std::to_string(instances) + " instances, max increase " + detail::sci(worst) + ", " +
              std::to_string(violations) + " violations, " + detail::sci(secs) + " s"};
}

/// Noiseless OTA updates against their global-CSI counterparts, then full
/// iterate trajectories.
inline CheckResult check_ota_equivalence(int instances = 20, std::uint64_t seed = 202) {
  const NetworkConfig cfg = detail::noiseless(NetworkConfig::desk());
  const UpdateControls ctl = cfg.controls;
  double worst_update = 0.0, worst_traj = 0.0;
  for (int d = 0; d < instances; ++d) {
    const auto base = make_drop(cfg, seed, static_cast<std::uint64_t>(d));
    const auto pb = detail::pilots_for(cfg, seed, d);
    const NoiseSource noise{seed, static_cast<std::uint64_t>(d), 0};

    // Single updates from a non-trivial state, S = 0, F active.
    {
      const auto ch = without_ap_coupling(base);
      UpdateControls warm = ctl;
      warm.max_iters = 3;
      const BeamformerSet bf = run_alt_opt(ch, cfg, warm, ResidualSI::statistical(0.0)).bf;
      const OtaScaling sc = adaptive_scaling(ch, bf, bf.v_ul, cfg);
      const auto sig = detail::sound_once(ch, bf, pb, sc, cfg, noise);
      const auto c = build_cache(ch, bf, ResidualSI::statistical(0.0));
      for (int k = 0; k < ch.K_dl; ++k)
        worst_update = std::max(worst_update,
                                detail::rel_err(update_v_dl_ota(k, sig.Y_dl1[k], pb), update_v_dl(k, c, cfg)));
      for (int u = 0; u < ch.K_ul; ++u)
        worst_update = std::max(worst_update, detail::rel_err(update_v_ul_ota(u, sig.Y_dl2[u], pb, sc, cfg, ctl).v,
                                                              update_v_ul(u, c, ctl, cfg).v));
      const double nu_bar = effective_ul_variance(cfg, ctl, pb.tau);
      for (int b = 0; b < ch.B; ++b) {
        const auto w_dl = update_w_dl_ota(sig.Y_ul2[b], &sig.Y_ul3[b], bf.w_dl[b], pb, sc, cfg, ctl);
        const auto w_dl_ref = update_w_dl_ap(b, c, bf.w_dl[b], ctl, cfg);
        for (int k = 0; k < ch.K_dl; ++k)
          worst_update = std::max(worst_update, detail::rel_err(w_dl.w[k], w_dl_ref.w[k]));
        const auto w_ul = update_w_ul_ota(sig.Y_ul1[b], &sig.Y_ul3[b], bf.w_ul[b], pb, sc, nu_bar, ctl.prox_ap);
        const auto w_ul_ref = update_w_ul_ap(b, c, bf.w_ul[b], ctl, cfg);
        for (int u = 0; u < ch.K_ul; ++u) worst_update = std::max(worst_update, detail::rel_err(w_ul[u], w_ul_ref[u]));
      }
    }

    // Trajectories, S = 0.
    {
      const auto ch = without_ap_coupling(base);
      const auto ref = run_alt_opt(ch, cfg, ctl, ResidualSI::statistical(0.0), true);
      IbtOptions opt;
      opt.noise = noise;
      opt.keep_iterates = true;
      const auto ota = run_ibt(ch, cfg, ctl, IbtMode::proposed, pb, opt);
      for (std::size_t it = 0; it < ref.iterates.size(); ++it)
        worst_traj = std::max(worst_traj, detail::bf_rel_err(ota.iterates[it], ref.iterates[it]));
    }
  }
  const bool pass = worst_update <= 1e-6 && worst_traj <= 1e-5;
  return {"OTA/perfect-CSI equivalence", pass,
          "worst update rel " + detail::sci(worst_update) + ", worst trajectory rel " + detail::sci(worst_traj) +
              " over " + std::to_string(instances) + " instances"};
}

/// Slot-3 retransmissions carry nothing in the opposite pilot family.
inline CheckResult check_projection_nulling(int instances = 20, std::uint64_t seed = 303) {
  const NetworkConfig cfg = detail::noiseless(NetworkConfig::desk());
  double worst = 0.0;
  for (int d = 0; d < instances; ++d) {
    const auto ch = make_drop(cfg, seed, static_cast<std::uint64_t>(d));
    const auto pb = detail::pilots_for(cfg, seed, d);
    UpdateControls warm = cfg.controls;
    warm.max_iters = 2;
    const BeamformerSet bf = run_alt_opt(ch, cfg, warm, ResidualSI::statistical(0.0)).bf;
    const OtaScaling sc = adaptive_scaling(ch, bf, bf.v_ul, cfg);
    const auto sig = detail::sound_once(ch, bf, pb, sc, cfg, {seed, static_cast<std::uint64_t>(d), 0});
    for (const auto& x : sig.X3_dl) worst = std::max(worst, (x * pb.Q).squaredNorm() / pb.tau);
    for (const auto& x : sig.X3_ul) worst = std::max(worst, (x * pb.P).squaredNorm() / pb.tau);
  }
  return {"projection nulling", worst <= 1e-12,
          "max opposing-subspace energy " + detail::sci(worst) + " over " + std::to_string(instances) + " instances"};
}

/// AP-side reconstruction of the inter-AP cross terms on two-AP networks.
inline CheckResult check_cross_terms(int instances = 20, std::uint64_t seed = 404) {
  const NetworkConfig cfg = detail::noiseless(NetworkConfig::desk());
  double worst = 0.0;
  for (int d = 0; d < instances; ++d) {
    const auto ch = select_aps(without_ap_coupling(make_drop(cfg, seed, static_cast<std::uint64_t>(d))), {0, 1});
    const auto pb = detail::pilots_for(cfg, seed, d);
    UpdateControls warm = cfg.controls;
    warm.max_iters = 2;
    const BeamformerSet bf = run_alt_opt(ch, cfg, warm, ResidualSI::statistical(0.0)).bf;
    const OtaScaling sc = adaptive_scaling(ch, bf, bf.v_ul, cfg);
    const auto sig = detail::sound_once(ch, bf, pb, sc, cfg, {seed, static_cast<std::uint64_t>(d), 0});
    const auto c = build_cache(ch, bf, ResidualSI::statistical(0.0));
    for (int b = 0; b < ch.B; ++b) {
      for (int k = 0; k < ch.K_dl; ++k)
        worst = std::max(worst, detail::rel_err(reconstruct_xi_dl(k, sig.Y_ul2[b], sig.Y_ul3[b], bf.w_dl[b][k], pb, sc),
                                                c.xi_dl[b][k]));
      for (int u = 0; u < ch.K_ul; ++u)
        worst = std::max(worst, detail::rel_err(reconstruct_xi_ul(u, sig.Y_ul1[b], sig.Y_ul3[b], bf.w_ul[b][u], pb, sc),
                                                c.xi_ul[b][u]));
    }
  }
  return {"cross-term reconstruction", worst <= 1e-8,
          "worst rel " + detail::sci(worst) + " on B=2, " + std::to_string(instances) + " instances"};
}

/// Budgets on every emitted set and transmit block; complementary slackness
/// of every bisected multiplier.
inline CheckResult check_power_feasibility(int instances = 10, std::uint64_t seed = 505) {
  const NetworkConfig base = NetworkConfig::desk();
  int infeasible = 0, slack_violations = 0;
  double worst_ratio = 0.0;
  auto slack_ok = [&](double lambda, double floor, double power, double budget, double tol) {
    if (lambda > floor) return std::abs(power - budget) <= (tol + 1e-9) * budget;
    return power <= budget * (1.0 + 1e-6);
  };
  for (int d = 0; d < instances; ++d) {
    for (ScalingMode mode : {ScalingMode::adaptive, ScalingMode::fixed}) {
      NetworkConfig cfg = base;
      cfg.scaling = mode;
      const auto ch = make_drop(cfg, seed, static_cast<std::uint64_t>(d));
      const auto pb = detail::pilots_for(cfg, seed, d);
      IbtOptions opt;
      opt.noise = {seed, static_cast<std::uint64_t>(d), 0};
      opt.keep_iterates = true;
      opt.keep_signals = true;
      const auto r = run_ibt(ch, cfg, cfg.controls, IbtMode::proposed, pb, opt);
      worst_ratio = std::max(worst_ratio, r.diag.max_ratio());
      for (const auto& bf : r.iterates)
        if (!power_feasible(bf, cfg.rho_ap, cfg.rho_ue)) ++infeasible;
      // Multipliers of the OTA and global-CSI updates at every iterate.
      for (std::size_t it = 0; it + 1 < r.iterates.size(); ++it) {
        const BeamformerSet& bf = r.iterates[it];
        const auto c = build_cache(ch, bf, ResidualSI::statistical(cfg.stat_eps()));
        const UpdateControls& ctl = cfg.controls;
        for (int b = 0; b < ch.B; ++b) {
          const auto upd = update_w_dl_ap(b, c, bf.w_dl[b], ctl, cfg);
          double p = 0.0;
          for (const auto& w : upd.w) p += w.squaredNorm();
          if (!slack_ok(upd.lambda, 0.0, p, cfg.rho_ap, ctl.bisect_tol)) ++slack_violations;
        }
        for (int u = 0; u < ch.K_ul; ++u) {
          const auto upd = update_v_ul(u, c, ctl, cfg);
          if (!slack_ok(upd.mu, 0.0, upd.v.squaredNorm(), cfg.rho_ue, ctl.bisect_tol)) ++slack_violations;
        }
        const auto& sig = r.signals[it];
        const OtaScaling& sc = r.diag.scalings[it];
        for (int b = 0; b < ch.B; ++b) {
          const auto upd = update_w_dl_ota(sig.Y_ul2[b], &sig.Y_ul3[b], bf.w_dl[b], pb, sc, cfg, ctl);
          double p = 0.0;
          for (const auto& w : upd.w) p += w.squaredNorm();
          if (!slack_ok(upd.lambda, cfg.sigma2_ue, p, cfg.rho_ap, ctl.bisect_tol)) ++slack_violations;
        }
        for (int u = 0; u < ch.K_ul; ++u) {
          const auto upd = update_v_ul_ota(u, sig.Y_dl2[u], pb, sc, cfg, ctl);
          if (!slack_ok(upd.mu, 0.0, upd.v.squaredNorm(), cfg.rho_ue, ctl.bisect_tol)) ++slack_violations;
        }
      }
    }
  }
  const bool pass = infeasible == 0 && slack_violations == 0 && worst_ratio <= 1.0 + 1e-6;
  return {"power feasibility", pass,
          std::to_string(infeasible) + " infeasible sets, " + std::to_string(slack_violations) +
              " slackness violations, max block/budget " + detail::sci(worst_ratio)};
}

inline CheckResult check_pilot_orthogonality(int tau = 32, int K_dl = 16, int K_ul = 16, std::uint64_t seed = 606) {
  RngStream rng(seed, 0);
  const auto pb = build_pilots(tau, K_dl, K_ul, rng);
  CMat all(tau, K_dl + K_ul);
  all << pb.P, pb.Q;
  const CMat gram = all.adjoint() * all;
  const double err = (gram - tau * CMat::Identity(K_dl + K_ul, K_dl + K_ul)).cwiseAbs().maxCoeff() / tau;
  return {"pilot orthogonality", err <= 1e-10, "max |[P,Q]^H[P,Q] - tau I| / tau = " + detail::sci(err)};
}

// ---------------------------------------------------------------------------
// Symbol-level Monte Carlo

struct McEstimate {
  std::vector<double> sinr_dl, mse_dl, sinr_ul, mse_ul;
};

/**
 * Transmits unit-power Gaussian symbols through the raw channels and
 * measures per-UE SINR and MSE of the linear estimates. The signal part of a
 * receiver output is the full output minus the output with that UE's own
 * symbol removed.
 */
inline McEstimate monte_carlo(const ChannelRealization& ch, const BeamformerSet& bf, const ResidualSI& si,
                              const NetworkConfig& cfg, long draws, RngStream& rng) {
  const int B = ch.B, Kd = ch.K_dl, Ku = ch.K_ul;
  const long chunk = 100000;
  std::vector<double> sig_dl(Kd, 0.0), rest_dl(Kd, 0.0), err_dl(Kd, 0.0);
  std::vector<double> sig_ul(Ku, 0.0), rest_ul(Ku, 0.0), err_ul(Ku, 0.0);
  for (long done = 0; done < draws; done += chunk) {
    const long n = std::min(chunk, draws - done);
    const CMat s = draw_complex_gaussian(rng, Kd, n, 1.0);
    const CMat x = draw_complex_gaussian(rng, Ku, n, 1.0);
    std::vector<CMat> tx_ap(B);
    for (int b = 0; b < B; ++b) {
      tx_ap[b] = CMat::Zero(ch.M, n);
      for (int i = 0; i < Kd; ++i) tx_ap[b].noalias() += bf.w_dl[b][i] * s.row(i);
    }
    std::vector<CMat> tx_ue(Ku);
    for (int u = 0; u < Ku; ++u) tx_ue[u] = bf.v_ul[u] * x.row(u);

    for (int k = 0; k < Kd; ++k) {
      CMat y = draw_complex_gaussian(rng, ch.N, n, cfg.sigma2_ue);
      for (int b = 0; b < B; ++b) y.noalias() += ch.H_dl(b, k).adjoint() * tx_ap[b];
      for (int u = 0; u < Ku; ++u) y.noalias() += ch.F[k][u].adjoint() * tx_ue[u];
      CMat own = CMat::Zero(ch.N, n);
      for (int b = 0; b < B; ++b) own.noalias() += ch.H_dl(b, k).adjoint() * (bf.w_dl[b][k] * s.row(k));
      const Eigen::RowVectorXcd est = bf.v_dl[k].adjoint() * y;
      const Eigen::RowVectorXcd without = bf.v_dl[k].adjoint() * (y - own);
      sig_dl[k] += (est - without).squaredNorm();
      rest_dl[k] += without.squaredNorm();
      err_dl[k] += (est - s.row(k)).squaredNorm();
    }

    std::vector<CMat> y_ap(B);
    for (int b = 0; b < B; ++b) {
      y_ap[b] = draw_complex_gaussian(rng, ch.M, n, cfg.sigma2_ap);
      for (int u = 0; u < Ku; ++u) y_ap[b].noalias() += ch.H_ul(b, u) * tx_ue[u];
      if (si.model == ResidualSI::Model::statistical) {
        y_ap[b] += draw_complex_gaussian(rng, ch.M, n, si.eps);
      } else {
        for (int i = 0; i < Kd; ++i) y_ap[b].noalias() += si.delta[b][i] * s.row(i);
      }
    }
    for (int u = 0; u < Ku; ++u) {
      Eigen::RowVectorXcd est = Eigen::RowVectorXcd::Zero(n);
      Eigen::RowVectorXcd own = Eigen::RowVectorXcd::Zero(n);
      for (int b = 0; b < B; ++b) {
        est.noalias() += bf.w_ul[b][u].adjoint() * y_ap[b];
        own.noalias() += bf.w_ul[b][u].adjoint() * (ch.H_ul(b, u) * tx_ue[u]);
      }
      sig_ul[u] += own.squaredNorm();
      rest_ul[u] += (est - own).squaredNorm();
      err_ul[u] += (est - x.row(u)).squaredNorm();
    }
  }
  McEstimate out;
  const double n = static_cast<double>(draws);
  for (int k = 0; k < Kd; ++k) {
    out.sinr_dl.push_back(sig_dl[k] / rest_dl[k]);
    out.mse_dl.push_back(err_dl[k] / n);
  }
  for (int u = 0; u < Ku; ++u) {
    out.sinr_ul.push_back(sig_ul[u] / rest_ul[u]);
    out.mse_ul.push_back(err_ul[u] / n);
  }
  return out;
}

inline CheckResult check_mc_oracles(int instances = 5, long draws = 1000000, std::uint64_t seed = 707) {
  double worst = 0.0;
  for (int d = 0; d < instances; ++d) {
    NetworkConfig cfg = NetworkConfig::desk();
    // Raise the noise floor so every term is visible in the estimates.
    cfg.sigma2_ap = cfg.sigma2_ue = dbm_to_watts(-80.0);
    const auto ch = make_drop(cfg, seed, static_cast<std::uint64_t>(d));
    UpdateControls warm = cfg.controls;
    warm.max_iters = 4;
    const BeamformerSet bf = run_alt_opt(ch, cfg, warm, ResidualSI::statistical(cfg.stat_eps())).bf;
    // Statistical SI on even instances, explicit residual leakage on odd ones.
    ResidualSI si = ResidualSI::statistical(cfg.stat_eps());
    if (d % 2 == 1) {
      VecGrid leak = leakage_vectors(ch, bf);
      for (auto& row : leak)
        for (auto& v : row) v *= 0.05;
      si = ResidualSI::explicit_from(leak);
    }
    const auto c = build_cache(ch, bf, si);
    RngStream rng(seed, stream_key({static_cast<std::uint64_t>(d), 99}));
    const auto mc = monte_carlo(ch, bf, si, cfg, draws, rng);
    auto rel = [](double a, double b) { return std::abs(a - b) / std::abs(b); };
    for (int k = 0; k < ch.K_dl; ++k) {
      worst = std::max(worst, rel(mc.sinr_dl[k], sinr_dl(k, c, bf, cfg)));
      worst = std::max(worst, rel(mc.mse_dl[k], mse_dl(k, c, bf, cfg)));
    }
    for (int u = 0; u < ch.K_ul; ++u) {
      worst = std::max(worst, rel(mc.sinr_ul[u], sinr_ul(u, c, bf, si, cfg)));
      worst = std::max(worst, rel(mc.mse_ul[u], mse_ul(u, c, bf, si, cfg)));
    }
  }
  return {"SINR/MSE Monte-Carlo oracle", worst <= 0.01,
          "worst relative deviation " + detail::sci(worst) + " over " + std::to_string(instances) + " instances, " +
              std::to_string(draws) + " draws"};
}

inline CheckResult check_effective_rate_arithmetic() {
  const double r = effective_rate(200.0, 20, 96.0, 10000.0);
  const bool cost_ok = training_cost(SchemeId::proposed, 32) == 96.0 &&
                       training_cost(SchemeId::separate_ota, 32) == 96.0 &&
                       training_cost(SchemeId::local_mmse, 32) == 64.0;
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", r);
  return {"effective-rate arithmetic", r == 161.6 && cost_ok,
          std::string("R_eff(200,20,96,10000) = ") + buf + (cost_ok ? ", costs 3tau/2tau" : ", cost table wrong")};
}

/// Same seed, different worker counts: rendered files must be identical.
inline CheckResult check_determinism(int threads_a = 1, int threads_b = 3) {
  ExperimentSpec spec = preset(Scale::desk);
  spec.drops = 4;
  spec.cfg.controls.max_iters = 6;
  spec.cfg.seed = 808;
  spec.schemes = {kAllSchemes.begin(), kAllSchemes.end()};
  const auto a = render_outputs(run_experiment(spec, threads_a), spec);
  const auto b = render_outputs(run_experiment(spec, threads_b), spec);
  const auto c = render_outputs(run_experiment(spec, threads_a), spec);
  const bool pass = a == b && a == c;
  return {"determinism", pass,
          std::to_string(a.size()) + " files compared across " + std::to_string(threads_a) + " and " +
              std::to_string(threads_b) + " threads"};
}

/// Every desk-scale check.
inline std::vector<CheckResult> desk_suite() {
  std::vector<CheckResult> out;
  out.push_back(check_monotone_descent());
  out.push_back(check_ota_equivalence());
  out.push_back(check_projection_nulling());
  out.push_back(check_cross_terms());
  out.push_back(check_power_feasibility());
  out.push_back(check_pilot_orthogonality());
  out.push_back(check_mc_oracles());
  out.push_back(check_effective_rate_arithmetic());
  out.push_back(check_determinism());
  return out;
}

// ---------------------------------------------------------------------------
// Figure-level checks (paper scale)

struct FigureChecks {
  CheckResult fig1;
  CheckResult fig2;
  double seconds = 0.0;
};

inline FigureChecks check_figures(int drops = 50, int threads = 1, std::uint64_t seed = 2024) {
  const auto t0 = std::chrono::steady_clock::now();
  ExperimentSpec spec = preset(Scale::paper);
  spec.drops = drops;
  spec.cfg.seed = seed;
  spec.schemes = {SchemeId::proposed, SchemeId::separate_ota, SchemeId::local_mmse, SchemeId::half_duplex};
  const auto drops_out = run_drops(spec, threads);
  const auto res = aggregate(spec, drops_out);
  FigureChecks fc;
  fc.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  const int T = spec.cfg.iters();
  // Paired standard error of the per-drop difference at the last iteration.
  auto paired = [&](std::size_t a, std::size_t b) {
    std::vector<double> diff;
    for (const auto& d : drops_out)
      if (d.ok) diff.push_back(d.runs[a].metrics[T].sum_rate - d.runs[b].metrics[T].sum_rate);
    const double n = static_cast<double>(diff.size());
    double mean = 0.0;
    for (double x : diff) mean += x;
    mean /= n;
    double var = 0.0;
    for (double x : diff) var += (x - mean) * (x - mean);
    var /= std::max(1.0, n - 1.0);
    return std::make_pair(mean, std::sqrt(var / n));
  };
  const auto& P = res.schemes[0];
  const auto& S = res.schemes[1];
  const auto& L = res.schemes[2];
  const auto& H = res.schemes[3];
  std::string msg = "drops ok " + std::to_string(res.drops_ok) + "; means at t=" + std::to_string(T) + ": P " +
                       detail::sci(P.mean_sum_rate[T]) + " S " + detail::sci(S.mean_sum_rate[T]) + " L " +
                       detail::sci(L.mean_sum_rate[T]) + " HD " + detail::sci(H.mean_sum_rate[T]) + ";";
  bool ok = res.drops_ok >= 50;
  const std::pair<std::size_t, std::size_t> pairs[] = {{0, 1}, {1, 2}, {0, 3}};
  const char* labels[] = {"P-S", "S-L", "P-HD"};
  for (int i = 0; i < 3; ++i) {
    const auto [a, b] = pairs[i];
    const auto [gap, sem_pair] = paired(a, b);
    const double sem = std::max({sem_pair, res.schemes[a].sem_sum_rate[T], res.schemes[b].sem_sum_rate[T]});
    ok = ok && gap > sem;
    msg += std::string(" ") + labels[i] + " gap " + detail::sci(gap) + " (sem " + detail::sci(sem) + ")";
  }
  msg += "; " + detail::sci(fc.seconds) + " s";
  fc.fig1 = {"figure-1 ordering", ok && fc.seconds < 1800.0, msg};

  bool ok2 = res.drops_ok >= 50;
  std::string d2;
  for (std::size_t r = 0; r < spec.r_tot_grid.size(); ++r) {
    const bool cell = P.eff_rate[r] > S.eff_rate[r] && P.eff_rate[r] > L.eff_rate[r];
    ok2 = ok2 && cell;
    char buf[160];
    std::snprintf(buf, sizeof buf, "%sr_tot=%g: P %.2f (t=%d) S %.2f L %.2f", r ? "; " : "", spec.r_tot_grid[r],
                  P.eff_rate[r], P.eff_iters[r], S.eff_rate[r], L.eff_rate[r]);
    d2 += buf;
  }
  const bool cost_ok = training_cost(SchemeId::proposed, spec.cfg.tau) == 3.0 * spec.cfg.tau &&
                       training_cost(SchemeId::local_mmse, spec.cfg.tau) == 2.0 * spec.cfg.tau;
  fc.fig2 = {"figure-2 effective rate", ok2 && cost_ok, d2};
  return fc;
}

}  // namespace fdcf::validation
