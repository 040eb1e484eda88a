#pragma once
/**
 * @file config.hpp
 * @brief Scenario scalars for one full-duplex cell-free network, plus the
 * optimizer controls shared by the perfect-CSI and over-the-air drivers.
 */

#include "fdcf/numerics.hpp"

#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>

namespace fdcf {

/// Bad user-supplied configuration. The message names the offending field.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class DampingMode { fixed, interference_adaptive };

/// Order in which the four blocks are refreshed inside one iteration.
///  - distributed: the information timing of the over-the-air protocol. DL
///    combiners first; then UL precoders, every AP's DL precoders and every
///    AP's UL combiners from one frozen snapshot.
///  - sequential: exact block-coordinate descent. Each block (and each AP
///    inside the AP stages) sees every update made before it.
enum class Schedule { distributed, sequential };

/// How the slot-2/slot-3 transmit scalings are chosen.
///  - adaptive: one network-wide value per iteration, large enough that no
///    slot-2 or slot-3 block exceeds its budget (times the headroom).
///  - fixed: the configured beta1/beta2/beta3; oversized blocks are clipped.
enum class ScalingMode { adaptive, fixed };

struct UpdateControls {
  double nu_scale = 1.0;
  double bisect_tol = kDefaultBisectTol;
  DampingMode ue_damping = DampingMode::interference_adaptive;
  double alpha_fixed = 1.0;     ///< UE step when ue_damping == fixed
  double alpha_ap = 0.5;        ///< step for the AP-side blocks
  double alpha_min = 0.1;       ///< clamp for the adaptive rule
  double prox_ap = 2.0;         ///< proximal weight on the AP blocks, relative to trace/M of the local Gram
  Schedule schedule = Schedule::distributed;
  int max_iters = 20;

  void validate() const {
    auto in_unit = [](double a) { return a > 0.0 && a <= 1.0; };
    if (!in_unit(alpha_fixed)) throw ConfigError("alpha_fixed must lie in (0,1]");
    if (!in_unit(alpha_ap)) throw ConfigError("alpha_ap must lie in (0,1]");
    if (!in_unit(alpha_min)) throw ConfigError("alpha_min must lie in (0,1]");
    if (!(bisect_tol > 0.0)) throw ConfigError("bisect_tol must be positive");
    if (!(nu_scale >= 0.0)) throw ConfigError("nu_scale must be nonnegative");
    if (!(prox_ap >= 0.0)) throw ConfigError("prox_ap must be nonnegative");
    if (max_iters < 0) throw ConfigError("iters must be nonnegative");
  }
};

struct NetworkConfig {
  // Geometry and dimensions.
  int grid_side = 4;
  int B = 16;
  int M = 4;
  int N = 4;
  int K_dl = 16;
  int K_ul = 16;
  double isd = 100.0;

  // Powers in watts.
  double rho_ap = 1.0;
  double rho_ue = 1.0;
  double sigma2_ap = dbm_to_watts(-95.0);
  double sigma2_ue = dbm_to_watts(-95.0);

  int tau = 32;

  // Large-scale model (dB). -infinity disables the corresponding channel.
  double ue_isolation_db = -20.0;
  double si_attenuation_db = -40.0;
  double pathloss_const_db = -30.5;
  double pathloss_exp = 37.0;
  double min_distance = 1.0;

  /// Residual-SI variance used by the statistical model (perfect-CSI
  /// benchmark). NaN means "use sigma2_ap".
  double si_stat_eps = std::numeric_limits<double>::quiet_NaN();

  // Over-the-air scalings.
  ScalingMode scaling = ScalingMode::adaptive;
  double beta1 = 1.0;
  double beta2 = 1.0;
  double beta3 = 1.0;
  double beta_headroom = 1.25;

  UpdateControls controls{};
  std::uint64_t seed = 1;

  int iters() const { return controls.max_iters; }
  int K() const { return K_dl + K_ul; }

  double stat_eps() const { return std::isnan(si_stat_eps) ? sigma2_ap : si_stat_eps; }

  /// Throws ConfigError naming the first violated field.
  void validate() const {
    if (grid_side < 1) throw ConfigError("grid_side must be >= 1");
    if (B != grid_side * grid_side) throw ConfigError("B must equal grid_side^2 (a perfect square)");
    if (M < 1) throw ConfigError("M must be >= 1");
    if (N < 1) throw ConfigError("N must be >= 1");
    if (K_dl < 1) throw ConfigError("K_dl must be >= 1");
    if (K_ul < 1) throw ConfigError("K_ul must be >= 1");
    if (tau < K_dl + K_ul) throw ConfigError("tau must be ≥ K_dl+K_ul");
    if (!(isd > 0.0)) throw ConfigError("isd must be positive");
    if (!(rho_ap > 0.0)) throw ConfigError("rho_ap must be positive");
    if (!(rho_ue > 0.0)) throw ConfigError("rho_ue must be positive");
    if (!(sigma2_ap >= 0.0)) throw ConfigError("sigma2_ap must be nonnegative");
    if (!(sigma2_ue >= 0.0)) throw ConfigError("sigma2_ue must be nonnegative");
    if (!(min_distance > 0.0)) throw ConfigError("min_distance must be positive");
    if (!(beta1 > 0.0)) throw ConfigError("beta1 must be positive");
    if (!(beta2 > 0.0)) throw ConfigError("beta2 must be positive");
    if (!(beta3 > 0.0)) throw ConfigError("beta3 must be positive");
    if (!(beta_headroom >= 1.0)) throw ConfigError("beta_headroom must be >= 1");
    controls.validate();
  }

  /// Four APs on a 2x2 grid, two antennas everywhere, 2+2 UEs, tau = 8.
  static NetworkConfig desk() {
    NetworkConfig c;
    c.grid_side = 2;
    c.B = 4;
    c.M = 2;
    c.N = 2;
    c.K_dl = 2;
    c.K_ul = 2;
    c.tau = 8;
    return c;
  }

  /// Sixteen 4-antenna APs, 16+16 four-antenna UEs, tau = 32.
  static NetworkConfig paper() { return NetworkConfig{}; }
};

}  // namespace fdcf
