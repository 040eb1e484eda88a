#pragma once
/**
 * @file baselines.hpp
 * @brief Comparison schemes sharing one channel drop: separate UL/DL
 * over-the-air training, local MMSE without slot 3, half-duplex operation on
 * orthogonal halves, and the perfect-CSI optimizer.
 */

#include "fdcf/channel.hpp"
#include "fdcf/config.hpp"
#include "fdcf/metrics.hpp"
#include "fdcf/ota.hpp"
#include "fdcf/perfect_csi.hpp"

#include <array>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace fdcf {

enum class SchemeId { proposed, separate_ota, local_mmse, half_duplex, perfect_csi };

inline constexpr std::array<SchemeId, 5> kAllSchemes = {SchemeId::proposed, SchemeId::separate_ota,
                                                        SchemeId::local_mmse, SchemeId::half_duplex,
                                                        SchemeId::perfect_csi};

inline std::string scheme_name(SchemeId s) {
  switch (s) {
    case SchemeId::proposed: return "proposed";
    case SchemeId::separate_ota: return "separate_ota";
    case SchemeId::local_mmse: return "local_mmse";
    case SchemeId::half_duplex: return "half_duplex";
    case SchemeId::perfect_csi: return "perfect_csi";
  }
  return "unknown";
}

/// Accepts the canonical names plus the short forms used on the command line.
inline std::optional<SchemeId> parse_scheme(std::string_view s) {
  if (s == "proposed") return SchemeId::proposed;
  if (s == "separate_ota" || s == "separate") return SchemeId::separate_ota;
  if (s == "local_mmse" || s == "local") return SchemeId::local_mmse;
  if (s == "half_duplex" || s == "hd") return SchemeId::half_duplex;
  if (s == "perfect_csi" || s == "perfect") return SchemeId::perfect_csi;
  return std::nullopt;
}

/// Training resources spent per iteration, in symbols.
inline double training_cost(SchemeId s, int tau) {
  switch (s) {
    case SchemeId::proposed:
    case SchemeId::separate_ota:
    case SchemeId::half_duplex: return 3.0 * tau;
    case SchemeId::local_mmse: return 2.0 * tau;
    case SchemeId::perfect_csi: return 0.0;
  }
  return 0.0;
}

struct SchemeRun {
  SchemeId scheme = SchemeId::proposed;
  std::vector<IterationMetrics> metrics;
  std::uint64_t channel_checksum = 0;
  int clipped_blocks = 0;
  double max_power_ratio = 0.0;
};

namespace detail {

inline SchemeRun from_ibt(SchemeId s, const ChannelRealization& ch, IbtResult&& r) {
  SchemeRun out;
  out.scheme = s;
  out.metrics = std::move(r.metrics);
  out.channel_checksum = checksum(ch);
  out.clipped_blocks = r.diag.total_clipped();
  out.max_power_ratio = r.diag.max_ratio();
  return out;
}

}  // namespace detail

inline SchemeRun run_proposed(const ChannelRealization& ch, const NetworkConfig& cfg, const UpdateControls& ctl,
                              const PilotBook& pb, const NoiseSource& noise) {
  IbtOptions opt;
  opt.noise = noise;
  return detail::from_ibt(SchemeId::proposed, ch, run_ibt(ch, cfg, ctl, IbtMode::proposed, pb, opt));
}

/// Training signals synthesized without UE-to-UE channels; AP coupling stays.
inline SchemeRun run_separate_ota(const ChannelRealization& ch, const NetworkConfig& cfg, const UpdateControls& ctl,
                                  const PilotBook& pb, const NoiseSource& noise) {
  IbtOptions opt;
  opt.noise = noise;
  return detail::from_ibt(SchemeId::separate_ota, ch, run_ibt(ch, cfg, ctl, IbtMode::separate, pb, opt));
}

/// Slot 3 skipped; the AP updates drop every cross term.
inline SchemeRun run_local_mmse(const ChannelRealization& ch, const NetworkConfig& cfg, const UpdateControls& ctl,
                                const PilotBook& pb, const NoiseSource& noise) {
  IbtOptions opt;
  opt.noise = noise;
  return detail::from_ibt(SchemeId::local_mmse, ch, run_ibt(ch, cfg, ctl, IbtMode::local, pb, opt));
}

/**
 * DL-only and UL-only over-the-air training on orthogonal halves of the
 * resources. Neither half sees AP coupling or UE-to-UE channels. Each UE's
 * rate is halved; per-iteration metrics concatenate the DL half's DL UEs and
 * the UL half's UL UEs.
 */
inline SchemeRun run_half_duplex(const ChannelRealization& ch, const NetworkConfig& cfg, const UpdateControls& ctl,
                                 const PilotBook& pb, const NoiseSource& noise) {
  std::vector<int> dl(ch.K_dl), ul(ch.K_ul);
  for (int k = 0; k < ch.K_dl; ++k) dl[k] = k;
  for (int u = 0; u < ch.K_ul; ++u) ul[u] = u;
  const ChannelRealization dl_half = without_ap_coupling(select_ues(ch, dl, {}));
  const ChannelRealization ul_half = without_ap_coupling(select_ues(ch, {}, ul));

  PilotBook pb_dl{pb.tau, pb.P, CMat(pb.tau, 0)};
  PilotBook pb_ul{pb.tau, CMat(pb.tau, 0), pb.Q};
  IbtOptions opt_dl, opt_ul;
  opt_dl.noise = noise;
  opt_dl.noise.salt = noise.salt + 1;
  opt_ul.noise = noise;
  opt_ul.noise.salt = noise.salt + 2;
  IbtResult r_dl = run_ibt(dl_half, cfg, ctl, IbtMode::proposed, pb_dl, opt_dl);
  IbtResult r_ul = run_ibt(ul_half, cfg, ctl, IbtMode::proposed, pb_ul, opt_ul);

  SchemeRun out;
  out.scheme = SchemeId::half_duplex;
  out.channel_checksum = checksum(ch);
  out.clipped_blocks = r_dl.diag.total_clipped() + r_ul.diag.total_clipped();
  out.max_power_ratio = std::max(r_dl.diag.max_ratio(), r_ul.diag.max_ratio());
  for (std::size_t it = 0; it < r_dl.metrics.size(); ++it) {
    const auto& d = r_dl.metrics[it];
    const auto& u = r_ul.metrics[it];
    require(d.sinr_ul.empty() && u.sinr_dl.empty(), "half-duplex halves must not mix directions");
    IterationMetrics m;
    m.iteration = d.iteration;
    m.sinr_dl = d.sinr_dl;
    m.sinr_ul = u.sinr_ul;
    for (double s : m.sinr_dl) m.rate_dl.push_back(0.5 * rate_of(s));
    for (double s : m.sinr_ul) m.rate_ul.push_back(0.5 * rate_of(s));
    m.sum_rate = 0.5 * (d.sum_rate + u.sum_rate);
    m.sum_sinr = d.sum_sinr + u.sum_sinr;
    m.sum_mse = d.sum_mse + u.sum_mse;
    out.metrics.push_back(std::move(m));
  }
  return out;
}

/// Alternating optimization with global CSI and the statistical SI model.
inline SchemeRun run_perfect_csi(const ChannelRealization& ch, const NetworkConfig& cfg, const UpdateControls& ctl) {
  SchemeRun out;
  out.scheme = SchemeId::perfect_csi;
  out.channel_checksum = checksum(ch);
  out.metrics = run_alt_opt(ch, cfg, ctl, ResidualSI::statistical(cfg.stat_eps())).metrics;
  return out;
}

inline SchemeRun run_scheme(SchemeId s, const ChannelRealization& ch, const NetworkConfig& cfg,
                            const UpdateControls& ctl, const PilotBook& pb, const NoiseSource& noise) {
  switch (s) {
    case SchemeId::proposed: return run_proposed(ch, cfg, ctl, pb, noise);
    case SchemeId::separate_ota: return run_separate_ota(ch, cfg, ctl, pb, noise);
    case SchemeId::local_mmse: return run_local_mmse(ch, cfg, ctl, pb, noise);
    case SchemeId::half_duplex: return run_half_duplex(ch, cfg, ctl, pb, noise);
    case SchemeId::perfect_csi: return run_perfect_csi(ch, cfg, ctl);
  }
  throw ContractViolation("run_scheme: unknown scheme");
}

}  // namespace fdcf
