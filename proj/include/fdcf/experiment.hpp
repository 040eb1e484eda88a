#pragma once
/**
 * @file experiment.hpp
 * @brief Monte-Carlo harness: flat key=value configuration, per-drop
 * execution of every scheme on a shared realization, aggregation over drops
 * and CSV/JSON emission.
 */

#include "fdcf/baselines.hpp"
#include "fdcf/channel.hpp"
#include "fdcf/config.hpp"
#include "fdcf/metrics.hpp"
#include "fdcf/ota.hpp"

#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

namespace fdcf {

enum class Scale { desk, paper };

struct ExperimentSpec {
  NetworkConfig cfg = NetworkConfig::paper();
  Scale scale = Scale::paper;
  std::vector<SchemeId> schemes = {SchemeId::proposed, SchemeId::separate_ota, SchemeId::local_mmse,
                                   SchemeId::half_duplex};
  int drops = 100;
  std::vector<double> r_tot_grid = {1000, 2500, 5000, 7500, 10000};
  std::string output_dir = "out";
  bool emit_per_ue = false;

  void validate() const {
    cfg.validate();
    if (drops < 1) throw ConfigError("drops must be >= 1");
    if (schemes.empty()) throw ConfigError("schemes must not be empty");
    for (double r : r_tot_grid)
      if (!(r > 0.0)) throw ConfigError("r_tot values must be positive");
  }
};

inline ExperimentSpec preset(Scale s) {
  ExperimentSpec spec;
  spec.scale = s;
  if (s == Scale::desk) {
    spec.cfg = NetworkConfig::desk();
    spec.drops = 20;
  }
  return spec;
}

// ---------------------------------------------------------------------------
// Parsing

namespace detail {

inline std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

inline double to_double(const std::string& key, const std::string& v) {
  const std::string t = trim(v);
  if (t == "-inf" || t == "-infinity") return -std::numeric_limits<double>::infinity();
  if (t == "inf" || t == "infinity") return std::numeric_limits<double>::infinity();
  char* end = nullptr;
  errno = 0;
  const double x = std::strtod(t.c_str(), &end);
  if (t.empty() || end != t.c_str() + t.size() || errno == ERANGE) throw ConfigError(key + ": not a number: " + v);
  return x;
}

inline long long to_int(const std::string& key, const std::string& v) {
  const std::string t = trim(v);
  char* end = nullptr;
  errno = 0;
  const long long x = std::strtoll(t.c_str(), &end, 10);
  if (t.empty() || end != t.c_str() + t.size() || errno == ERANGE) throw ConfigError(key + ": not an integer: " + v);
  return x;
}

inline bool to_bool(const std::string& key, const std::string& v) {
  const std::string t = trim(v);
  if (t == "1" || t == "true" || t == "yes") return true;
  if (t == "0" || t == "false" || t == "no") return false;
  throw ConfigError(key + ": not a boolean: " + v);
}

inline std::vector<std::string> split_csv(const std::string& v) {
  std::vector<std::string> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!trim(item).empty()) out.push_back(trim(item));
  return out;
}

inline Scale to_scale(const std::string& key, const std::string& v) {
  const std::string t = trim(v);
  if (t == "desk") return Scale::desk;
  if (t == "paper") return Scale::paper;
  throw ConfigError(key + ": expected desk or paper, got " + v);
}

}  // namespace detail

inline std::vector<SchemeId> parse_scheme_list(const std::string& v) {
  std::vector<SchemeId> out;
  const auto items = detail::split_csv(v);
  if (items.size() == 1 && items[0] == "all") return {kAllSchemes.begin(), kAllSchemes.end()};
  for (const auto& s : items) {
    const auto id = parse_scheme(s);
    if (!id) throw ConfigError("schemes: unknown scheme " + s);
    if (std::find(out.begin(), out.end(), *id) == out.end()) out.push_back(*id);
  }
  return out;
}

/// Applies one key=value pair. Throws ConfigError on unknown keys.
inline void apply_key(ExperimentSpec& spec, const std::string& key, const std::string& value) {
  using namespace detail;
  NetworkConfig& c = spec.cfg;
  UpdateControls& u = c.controls;
  auto i = [&] { return static_cast<int>(to_int(key, value)); };
  auto d = [&] { return to_double(key, value); };

  if (key == "scale") spec.scale = to_scale(key, value);
  else if (key == "grid_side") c.grid_side = i(), c.B = c.grid_side * c.grid_side;
  else if (key == "B") c.B = i();
  else if (key == "M") c.M = i();
  else if (key == "N") c.N = i();
  else if (key == "K_dl") c.K_dl = i();
  else if (key == "K_ul") c.K_ul = i();
  else if (key == "isd") c.isd = d();
  else if (key == "rho_ap") c.rho_ap = d();
  else if (key == "rho_ue") c.rho_ue = d();
  else if (key == "rho_ap_dbm") c.rho_ap = dbm_to_watts(d());
  else if (key == "rho_ue_dbm") c.rho_ue = dbm_to_watts(d());
  else if (key == "rho_dbm") c.rho_ap = c.rho_ue = dbm_to_watts(d());
  else if (key == "sigma2_ap") c.sigma2_ap = d();
  else if (key == "sigma2_ue") c.sigma2_ue = d();
  else if (key == "noise_ap_dbm") c.sigma2_ap = dbm_to_watts(d());
  else if (key == "noise_ue_dbm") c.sigma2_ue = dbm_to_watts(d());
  else if (key == "noise_dbm") c.sigma2_ap = c.sigma2_ue = dbm_to_watts(d());
  else if (key == "tau") c.tau = i();
  else if (key == "iters") u.max_iters = i();
  else if (key == "ue_isolation_db") c.ue_isolation_db = d();
  else if (key == "si_attenuation_db") c.si_attenuation_db = d();
  else if (key == "pathloss_const_db") c.pathloss_const_db = d();
  else if (key == "pathloss_exp") c.pathloss_exp = d();
  else if (key == "min_distance") c.min_distance = d();
  else if (key == "si_stat_eps") c.si_stat_eps = d();
  else if (key == "si_stat_eps_dbm") c.si_stat_eps = dbm_to_watts(d());
  else if (key == "scaling") {
    const std::string t = trim(value);
    if (t == "adaptive") c.scaling = ScalingMode::adaptive;
    else if (t == "fixed") c.scaling = ScalingMode::fixed;
    else throw ConfigError("scaling: expected adaptive or fixed, got " + value);
  } else if (key == "beta1") c.beta1 = d();
  else if (key == "beta2") c.beta2 = d();
  else if (key == "beta3") c.beta3 = d();
  else if (key == "beta_headroom") c.beta_headroom = d();
  else if (key == "nu_scale") u.nu_scale = d();
  else if (key == "bisect_tol") u.bisect_tol = d();
  else if (key == "ue_damping") {
    const std::string t = trim(value);
    if (t == "fixed") u.ue_damping = DampingMode::fixed;
    else if (t == "adaptive") u.ue_damping = DampingMode::interference_adaptive;
    else throw ConfigError("ue_damping: expected fixed or adaptive, got " + value);
  } else if (key == "alpha_fixed") u.alpha_fixed = d();
  else if (key == "alpha_ap") u.alpha_ap = d();
  else if (key == "alpha_min") u.alpha_min = d();
  else if (key == "prox_ap") u.prox_ap = d();
  else if (key == "schedule") {
    const std::string t = trim(value);
    if (t == "distributed") u.schedule = Schedule::distributed;
    else if (t == "sequential") u.schedule = Schedule::sequential;
    else throw ConfigError("schedule: expected distributed or sequential, got " + value);
  } else if (key == "seed") {
    const long long s = to_int(key, value);
    if (s < 0) throw ConfigError("seed must be nonnegative");
    c.seed = static_cast<std::uint64_t>(s);
  } else if (key == "drops") spec.drops = i();
  else if (key == "schemes") spec.schemes = parse_scheme_list(value);
  else if (key == "r_tot") {
    spec.r_tot_grid.clear();
    for (const auto& s : split_csv(value)) spec.r_tot_grid.push_back(to_double(key, s));
  } else if (key == "output_dir") spec.output_dir = trim(value);
  else if (key == "emit_per_ue") spec.emit_per_ue = to_bool(key, value);
  else throw ConfigError("unknown key: " + key);
}

/// key=value lines; '#' starts a comment. Duplicate keys: last one wins.
inline std::vector<std::pair<std::string, std::string>> read_key_values(std::istream& is) {
  std::vector<std::pair<std::string, std::string>> kv;
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError("config line " + std::to_string(lineno) + ": expected key=value");
    kv.emplace_back(detail::trim(line.substr(0, eq)), detail::trim(line.substr(eq + 1)));
  }
  return kv;
}

/**
 * Builds a spec from an optional config stream. The scale preset is chosen
 * first (`forced_scale` beats a `scale` key in the file), then every other
 * key is applied on top of it.
 */
inline ExperimentSpec parse_config(std::istream* is, std::optional<Scale> forced_scale = std::nullopt) {
  std::vector<std::pair<std::string, std::string>> kv;
  if (is) kv = read_key_values(*is);
  Scale scale = Scale::paper;
  for (const auto& [k, v] : kv)
    if (k == "scale") scale = detail::to_scale(k, v);
  if (forced_scale) scale = *forced_scale;
  ExperimentSpec spec = preset(scale);
  for (const auto& [k, v] : kv)
    if (k != "scale") apply_key(spec, k, v);
  return spec;
}

inline ExperimentSpec parse_config_file(const std::string& path, std::optional<Scale> forced_scale = std::nullopt) {
  std::ifstream f(path);
  if (!f) throw ConfigError("config: cannot open " + path);
  return parse_config(&f, forced_scale);
}

// ---------------------------------------------------------------------------
// Execution

struct DropOutcome {
  int drop = 0;
  bool ok = false;
  std::string error;
  std::vector<SchemeRun> runs;  ///< one per spec.schemes entry, same order
};

/// Every scheme on one drop. All schemes see the same realization, pilots
/// and (where the protocol coincides) the same receiver-noise streams.
inline DropOutcome run_drop(const ExperimentSpec& spec, int drop) {
  DropOutcome out;
  out.drop = drop;
  const NetworkConfig& cfg = spec.cfg;
  try {
    const auto d = static_cast<std::uint64_t>(drop);
    const ChannelRealization ch = make_drop(cfg, cfg.seed, d);
    auto prng = drop_stream(cfg.seed, d, Purpose::pilots);
    const PilotBook pb = build_pilots(cfg, prng);
    const NoiseSource noise{cfg.seed, d, 0};
    const std::uint64_t sum = checksum(ch);
    for (SchemeId s : spec.schemes) {
      SchemeRun r = run_scheme(s, ch, cfg, cfg.controls, pb, noise);
      require(r.channel_checksum == sum, "scheme saw a different channel realization");
      for (const auto& m : r.metrics)
        if (!std::isfinite(m.sum_rate)) throw RuntimeAbort("non-finite sum rate in " + scheme_name(s));
      out.runs.push_back(std::move(r));
    }
    out.ok = true;
  } catch (const RuntimeAbort& e) {
    out.runs.clear();
    out.error = e.what();
  } catch (const ContractViolation& e) {
    out.runs.clear();
    out.error = e.what();
  }
  return out;
}

inline int resolve_threads(int requested) {
  if (const char* env = std::getenv("FDCF_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end == env || *end != '\0' || v < 1) throw ConfigError("FDCF_THREADS must be a positive integer");
    return static_cast<int>(v);
  }
  if (requested < 1) throw ConfigError("threads must be >= 1");
  return requested;
}

inline std::vector<DropOutcome> run_drops(const ExperimentSpec& spec, int threads) {
  std::vector<DropOutcome> out(spec.drops);
  std::atomic<int> next{0};
  auto worker = [&] {
    for (int d = next++; d < spec.drops; d = next++) out[d] = run_drop(spec, d);
  };
  const int n = std::max(1, std::min(threads, spec.drops));
  std::vector<std::thread> pool;
  for (int t = 1; t < n; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  return out;
}

// ---------------------------------------------------------------------------
// Aggregation

struct SchemeAggregate {
  SchemeId scheme = SchemeId::proposed;
  std::vector<double> mean_sum_rate;  ///< index = iteration (0 = init)
  std::vector<double> sem_sum_rate;
  std::vector<double> rates_dl, rates_ul;  ///< per-UE samples at the last iteration, sorted
  std::vector<double> eff_rate;            ///< one per r_tot
  std::vector<int> eff_iters;              ///< training length achieving eff_rate
  int clipped_blocks = 0;
  double max_power_ratio = 0.0;
  std::vector<std::uint64_t> checksums;  ///< per successful drop
};

struct AggregateResult {
  int drops_ok = 0;
  std::vector<std::pair<int, std::string>> failures;
  std::vector<SchemeAggregate> schemes;
  std::vector<DropOutcome> per_drop;  ///< kept only when per-UE output is requested

  const SchemeAggregate* find(SchemeId s) const {
    for (const auto& a : schemes)
      if (a.scheme == s) return &a;
    return nullptr;
  }
};

/// Best effective rate over training lengths 1..iters on a mean curve.
inline std::pair<double, int> best_effective_rate(const std::vector<double>& mean_curve, double r_ibt,
                                                  double r_tot) {
  double best = 0.0;
  int best_t = 0;
  for (int t = 1; t < static_cast<int>(mean_curve.size()); ++t) {
    const double e = effective_rate(mean_curve[t], t, r_ibt, r_tot);
    if (e > best) best = e, best_t = t;
  }
  return {best, best_t};
}

inline AggregateResult aggregate(const ExperimentSpec& spec, std::vector<DropOutcome> drops) {
  AggregateResult res;
  const int iters = spec.cfg.iters();
  for (const auto& d : drops) {
    if (d.ok) ++res.drops_ok;
    else res.failures.emplace_back(d.drop, d.error);
  }
  for (std::size_t si = 0; si < spec.schemes.size(); ++si) {
    SchemeAggregate a;
    a.scheme = spec.schemes[si];
    a.mean_sum_rate.assign(iters + 1, 0.0);
    a.sem_sum_rate.assign(iters + 1, 0.0);
    std::vector<double> sq(iters + 1, 0.0);
    for (const auto& d : drops) {
      if (!d.ok) continue;
      const SchemeRun& r = d.runs[si];
      for (int t = 0; t <= iters; ++t) {
        a.mean_sum_rate[t] += r.metrics[t].sum_rate;
        sq[t] += r.metrics[t].sum_rate * r.metrics[t].sum_rate;
      }
      const auto& last = r.metrics.back();
      a.rates_dl.insert(a.rates_dl.end(), last.rate_dl.begin(), last.rate_dl.end());
      a.rates_ul.insert(a.rates_ul.end(), last.rate_ul.begin(), last.rate_ul.end());
      a.clipped_blocks += r.clipped_blocks;
      a.max_power_ratio = std::max(a.max_power_ratio, r.max_power_ratio);
      a.checksums.push_back(r.channel_checksum);
    }
    const double n = res.drops_ok;
    if (n > 0) {
      for (int t = 0; t <= iters; ++t) {
        const double mean = a.mean_sum_rate[t] / n;
        const double var = n > 1 ? std::max(0.0, (sq[t] - n * mean * mean) / (n - 1)) : 0.0;
        a.mean_sum_rate[t] = mean;
        a.sem_sum_rate[t] = std::sqrt(var / n);
      }
    }
    std::sort(a.rates_dl.begin(), a.rates_dl.end());
    std::sort(a.rates_ul.begin(), a.rates_ul.end());
    for (double r_tot : spec.r_tot_grid) {
      const auto [e, t] = best_effective_rate(a.mean_sum_rate, training_cost(a.scheme, spec.cfg.tau), r_tot);
      a.eff_rate.push_back(e);
      a.eff_iters.push_back(t);
    }
    res.schemes.push_back(std::move(a));
  }
  if (spec.emit_per_ue) res.per_drop = std::move(drops);
  return res;
}

inline AggregateResult run_experiment(const ExperimentSpec& spec, int threads = 1) {
  spec.validate();
  return aggregate(spec, run_drops(spec, threads));
}

// ---------------------------------------------------------------------------
// Emission

namespace detail {

inline std::string fmt(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", x);
  return buf;
}

inline const char* short_name(SchemeId s) {
  switch (s) {
    case SchemeId::proposed: return "proposed";
    case SchemeId::separate_ota: return "separate";
    case SchemeId::local_mmse: return "local";
    case SchemeId::half_duplex: return "hd";
    case SchemeId::perfect_csi: return "perfect";
  }
  return "unknown";
}

inline std::string cdf_csv(const std::vector<double>& sorted) {
  std::string s = "x,y\n";
  const double n = static_cast<double>(sorted.size());
  for (std::size_t i = 0; i < sorted.size(); ++i) s += fmt(sorted[i]) + "," + fmt((i + 1) / n) + "\n";
  return s;
}

inline nlohmann::json config_json(const NetworkConfig& c) {
  nlohmann::json j;
  j["grid_side"] = c.grid_side;
  j["B"] = c.B;
  j["M"] = c.M;
  j["N"] = c.N;
  j["K_dl"] = c.K_dl;
  j["K_ul"] = c.K_ul;
  j["isd"] = c.isd;
  j["rho_ap"] = c.rho_ap;
  j["rho_ue"] = c.rho_ue;
  j["sigma2_ap"] = c.sigma2_ap;
  j["sigma2_ue"] = c.sigma2_ue;
  j["tau"] = c.tau;
  j["iters"] = c.iters();
  j["ue_isolation_db"] = std::isfinite(c.ue_isolation_db) ? nlohmann::json(c.ue_isolation_db) : nlohmann::json("-inf");
  j["si_attenuation_db"] =
      std::isfinite(c.si_attenuation_db) ? nlohmann::json(c.si_attenuation_db) : nlohmann::json("-inf");
  j["pathloss_const_db"] = c.pathloss_const_db;
  j["pathloss_exp"] = c.pathloss_exp;
  j["min_distance"] = c.min_distance;
  j["si_stat_eps"] = c.stat_eps();
  j["scaling"] = c.scaling == ScalingMode::adaptive ? "adaptive" : "fixed";
  j["beta1"] = c.beta1;
  j["beta2"] = c.beta2;
  j["beta3"] = c.beta3;
  j["beta_headroom"] = c.beta_headroom;
  const UpdateControls& u = c.controls;
  j["nu_scale"] = u.nu_scale;
  j["bisect_tol"] = u.bisect_tol;
  j["ue_damping"] = u.ue_damping == DampingMode::fixed ? "fixed" : "adaptive";
  j["alpha_fixed"] = u.alpha_fixed;
  j["alpha_ap"] = u.alpha_ap;
  j["prox_ap"] = u.prox_ap;
  j["alpha_min"] = u.alpha_min;
  j["schedule"] = u.schedule == Schedule::distributed ? "distributed" : "sequential";
  j["seed"] = c.seed;
  return j;
}

}  // namespace detail

/// File name -> contents. Independent of thread count by construction.
inline std::map<std::string, std::string> render_outputs(const AggregateResult& res, const ExperimentSpec& spec) {
  using detail::fmt;
  std::map<std::string, std::string> files;
  const int iters = spec.cfg.iters();

  auto cell = [&](SchemeId s, auto&& get) -> std::string {
    const SchemeAggregate* a = res.find(s);
    return a && res.drops_ok > 0 ? fmt(get(*a)) : "";
  };

  std::string f1 = "Itr,Proposed,Seperate,Local,HD\n";
  for (int t = 1; t <= iters; ++t) {
    auto at = [t](const SchemeAggregate& a) { return a.mean_sum_rate[t]; };
    f1 += std::to_string(t) + "," + cell(SchemeId::proposed, at) + "," + cell(SchemeId::separate_ota, at) + "," +
          cell(SchemeId::local_mmse, at) + "," + cell(SchemeId::half_duplex, at) + "\n";
  }
  files["fig1.csv"] = f1;

  if (res.find(SchemeId::perfect_csi)) {
    std::string fp = "Itr,PerfectCSI\n";
    for (int t = 1; t <= iters; ++t)
      fp += std::to_string(t) + "," +
            cell(SchemeId::perfect_csi, [t](const SchemeAggregate& a) { return a.mean_sum_rate[t]; }) + "\n";
    files["fig1_perfect_csi.csv"] = fp;
  }

  std::string f2 = "Res,Proposed,Seperate,Local\n";
  for (std::size_t r = 0; r < spec.r_tot_grid.size(); ++r) {
    auto at = [r](const SchemeAggregate& a) { return a.eff_rate[r]; };
    char res_buf[64];
    std::snprintf(res_buf, sizeof res_buf, "%g", spec.r_tot_grid[r]);
    f2 += std::string(res_buf) + "," + cell(SchemeId::proposed, at) + "," + cell(SchemeId::separate_ota, at) + "," +
          cell(SchemeId::local_mmse, at) + "\n";
  }
  files["fig2.csv"] = f2;

  for (const auto& a : res.schemes) {
    const std::string base = std::string("fig3_") + detail::short_name(a.scheme);
    files[base + "_dl.csv"] = detail::cdf_csv(a.rates_dl);
    files[base + "_ul.csv"] = detail::cdf_csv(a.rates_ul);
  }

  if (spec.emit_per_ue) {
    std::string pu = "drop,scheme,direction,ue,rate\n";
    for (const auto& d : res.per_drop) {
      if (!d.ok) continue;
      for (const auto& r : d.runs) {
        const auto& last = r.metrics.back();
        for (std::size_t k = 0; k < last.rate_dl.size(); ++k)
          pu += std::to_string(d.drop) + "," + scheme_name(r.scheme) + ",dl," + std::to_string(k) + "," +
                fmt(last.rate_dl[k]) + "\n";
        for (std::size_t u = 0; u < last.rate_ul.size(); ++u)
          pu += std::to_string(d.drop) + "," + scheme_name(r.scheme) + ",ul," + std::to_string(u) + "," +
                fmt(last.rate_ul[u]) + "\n";
      }
    }
    files["per_ue_rates.csv"] = pu;
  }

  nlohmann::json meta;
  meta["config"] = detail::config_json(spec.cfg);
  meta["seed"] = spec.cfg.seed;
  meta["scale"] = spec.scale == Scale::desk ? "desk" : "paper";
  meta["drops_requested"] = spec.drops;
  meta["drops_ok"] = res.drops_ok;
  meta["drops_failed"] = res.failures.size();
  nlohmann::json fails = nlohmann::json::array();
  for (const auto& [d, msg] : res.failures) fails.push_back({{"drop", d}, {"error", msg}});
  meta["failures"] = fails;
  meta["r_tot"] = spec.r_tot_grid;
  nlohmann::json sch = nlohmann::json::object();
  for (const auto& a : res.schemes) {
    nlohmann::json j;
    j["training_cost_per_iteration"] = training_cost(a.scheme, spec.cfg.tau);
    j["mean_sum_rate"] = a.mean_sum_rate;
    j["sem_sum_rate"] = a.sem_sum_rate;
    j["effective_rate"] = a.eff_rate;
    j["effective_rate_iterations"] = a.eff_iters;
    j["clipped_blocks"] = a.clipped_blocks;
    j["max_power_ratio"] = a.max_power_ratio;
    nlohmann::json sums = nlohmann::json::array();
    for (auto c : a.checksums) {
      char buf[32];
      std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(c));
      sums.push_back(buf);
    }
    j["channel_checksums"] = sums;
    sch[scheme_name(a.scheme)] = j;
  }
  meta["schemes"] = sch;
  files["run_meta.json"] = meta.dump(2) + "\n";
  return files;
}

/// Writes every rendered file under spec.output_dir. Throws std::runtime_error
/// on I/O failure.
inline void emit_outputs(const AggregateResult& res, const ExperimentSpec& spec) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(spec.output_dir, ec);
  if (ec) throw std::runtime_error("cannot create output directory " + spec.output_dir + ": " + ec.message());
  for (const auto& [name, body] : render_outputs(res, spec)) {
    const fs::path p = fs::path(spec.output_dir) / name;
    std::ofstream f(p, std::ios::binary);
    f << body;
    if (!f) throw std::runtime_error("cannot write " + p.string());
  }
}

}  // namespace fdcf
