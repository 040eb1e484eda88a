#pragma once
/**
 * @file channel.hpp
 * @brief AP grid, UE drops, pathloss and one Rayleigh channel realization
 * (AP-UE, UE-UE and AP-AP tensors) per Monte-Carlo drop.
 */

#include "fdcf/config.hpp"
#include "fdcf/numerics.hpp"

#include <array>
#include <cstdint>
#include <cstring>
#include <iomanip>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

namespace fdcf {

using Point = std::array<double, 2>;
using MatGrid = std::vector<std::vector<CMat>>;

inline double distance(const Point& a, const Point& b) {
  return std::hypot(a[0] - b[0], a[1] - b[1]);
}

/// Stream purposes inside one drop.
enum class Purpose : std::uint64_t {
  topology = 1,
  channel_h = 2,
  channel_f = 3,
  channel_s = 4,
  pilots = 5,
  noise = 6,
  eval_noise = 7,
};

inline RngStream drop_stream(std::uint64_t seed, std::uint64_t drop, Purpose purpose) {
  return RngStream(seed, stream_key({drop, static_cast<std::uint64_t>(purpose)}));
}

struct Topology {
  std::vector<Point> ap_pos;
  std::vector<Point> ue_pos;  ///< DL UEs first, then UL UEs
};

/// Immutable after creation. H[b][k] is M x N (k over DL then UL UEs),
/// F[k][u] is N x N, S[b][c] is M x M and couples AP c into AP b's receiver.
struct ChannelRealization {
  int B = 0, M = 0, N = 0, K_dl = 0, K_ul = 0;
  MatGrid H;
  MatGrid F;
  MatGrid S;
  std::vector<Point> ap_pos;
  std::vector<Point> ue_pos;

  const CMat& H_dl(int b, int k) const { return H[b][k]; }
  const CMat& H_ul(int b, int u) const { return H[b][K_dl + u]; }
};

/// APs on a grid_side x grid_side lattice with pitch isd, centred in the
/// square [0, grid_side*isd]^2; UEs uniform in the same square.
inline Topology generate_topology(const NetworkConfig& cfg, RngStream& rng) {
  require(cfg.B == cfg.grid_side * cfg.grid_side, "generate_topology: B must equal grid_side^2");
  Topology t;
  t.ap_pos.reserve(cfg.B);
  for (int r = 0; r < cfg.grid_side; ++r)
    for (int c = 0; c < cfg.grid_side; ++c)
      t.ap_pos.push_back({(c + 0.5) * cfg.isd, (r + 0.5) * cfg.isd});
  const double side = cfg.grid_side * cfg.isd;
  t.ue_pos.reserve(cfg.K());
  for (int k = 0; k < cfg.K(); ++k) {
    const double x = rng.uniform(0.0, side);
    const double y = rng.uniform(0.0, side);
    t.ue_pos.push_back({x, y});
  }
  return t;
}

/// Large-scale gain 10^((c - a log10 d)/10), d clamped to cfg.min_distance.
inline double pathloss_linear(double d, const NetworkConfig& cfg) {
  const double dd = std::max(d, cfg.min_distance);
  return db_to_linear(cfg.pathloss_const_db - cfg.pathloss_exp * std::log10(dd));
}

inline double pathloss_db(double d, const NetworkConfig& cfg) {
  return cfg.pathloss_const_db - cfg.pathloss_exp * std::log10(std::max(d, cfg.min_distance));
}

/**
 * Draws H, F and S for one drop.
 *
 * Each tensor comes from its own sub-stream so that disabling one (for
 * instance ue_isolation_db = -inf) leaves the others unchanged.
 */
inline ChannelRealization draw_channels(const NetworkConfig& cfg, const Topology& topo,
                                        std::uint64_t seed, std::uint64_t drop) {
  ChannelRealization ch;
  ch.B = cfg.B;
  ch.M = cfg.M;
  ch.N = cfg.N;
  ch.K_dl = cfg.K_dl;
  ch.K_ul = cfg.K_ul;
  ch.ap_pos = topo.ap_pos;
  ch.ue_pos = topo.ue_pos;
  require(static_cast<int>(topo.ap_pos.size()) == cfg.B, "draw_channels: AP count mismatch");
  require(static_cast<int>(topo.ue_pos.size()) == cfg.K(), "draw_channels: UE count mismatch");

  auto rng_h = drop_stream(seed, drop, Purpose::channel_h);
  ch.H.assign(cfg.B, std::vector<CMat>(cfg.K()));
  for (int b = 0; b < cfg.B; ++b)
    for (int k = 0; k < cfg.K(); ++k) {
      const double g = pathloss_linear(distance(topo.ap_pos[b], topo.ue_pos[k]), cfg);
      ch.H[b][k] = draw_complex_gaussian(rng_h, cfg.M, cfg.N, g);
    }

  auto rng_f = drop_stream(seed, drop, Purpose::channel_f);
  const double iso = db_to_linear(cfg.ue_isolation_db);
  ch.F.assign(cfg.K_dl, std::vector<CMat>(cfg.K_ul));
  for (int k = 0; k < cfg.K_dl; ++k)
    for (int u = 0; u < cfg.K_ul; ++u) {
      const double g = pathloss_linear(distance(topo.ue_pos[k], topo.ue_pos[cfg.K_dl + u]), cfg);
      ch.F[k][u] = draw_complex_gaussian(rng_f, cfg.N, cfg.N, g * iso);
    }

  auto rng_s = drop_stream(seed, drop, Purpose::channel_s);
  const double si = db_to_linear(cfg.si_attenuation_db);
  ch.S.assign(cfg.B, std::vector<CMat>(cfg.B));
  for (int b = 0; b < cfg.B; ++b)
    for (int c = 0; c < cfg.B; ++c) {
      const double g = (b == c) ? si : pathloss_linear(distance(topo.ap_pos[b], topo.ap_pos[c]), cfg);
      ch.S[b][c] = draw_complex_gaussian(rng_s, cfg.M, cfg.M, g);
    }
  return ch;
}

/// Topology and channels for drop `drop` of an experiment seeded with `seed`.
inline ChannelRealization make_drop(const NetworkConfig& cfg, std::uint64_t seed, std::uint64_t drop) {
  auto rng = drop_stream(seed, drop, Purpose::topology);
  const Topology topo = generate_topology(cfg, rng);
  return draw_channels(cfg, topo, seed, drop);
}

inline ChannelRealization without_cross_link(ChannelRealization ch) {
  for (auto& row : ch.F)
    for (auto& m : row) m.setZero();
  return ch;
}

inline ChannelRealization without_ap_coupling(ChannelRealization ch) {
  for (auto& row : ch.S)
    for (auto& m : row) m.setZero();
  return ch;
}

/// Keeps only the listed DL and UL UEs (in order). Tensors shrink accordingly.
inline ChannelRealization select_ues(const ChannelRealization& ch, const std::vector<int>& dl,
                                     const std::vector<int>& ul) {
  ChannelRealization out;
  out.B = ch.B;
  out.M = ch.M;
  out.N = ch.N;
  out.K_dl = static_cast<int>(dl.size());
  out.K_ul = static_cast<int>(ul.size());
  out.ap_pos = ch.ap_pos;
  out.S = ch.S;
  out.H.assign(ch.B, {});
  for (int b = 0; b < ch.B; ++b) {
    for (int k : dl) out.H[b].push_back(ch.H[b][k]);
    for (int u : ul) out.H[b].push_back(ch.H[b][ch.K_dl + u]);
  }
  for (int k : dl) out.ue_pos.push_back(ch.ue_pos[k]);
  for (int u : ul) out.ue_pos.push_back(ch.ue_pos[ch.K_dl + u]);
  out.F.assign(out.K_dl, {});
  for (int i = 0; i < out.K_dl; ++i)
    for (int u : ul) out.F[i].push_back(ch.F[dl[i]][u]);
  return out;
}

/// Keeps only the listed APs (in order).
inline ChannelRealization select_aps(const ChannelRealization& ch, const std::vector<int>& aps) {
  ChannelRealization out = ch;
  out.B = static_cast<int>(aps.size());
  out.ap_pos.clear();
  out.H.clear();
  out.S.assign(out.B, std::vector<CMat>(out.B));
  for (int i = 0; i < out.B; ++i) {
    require(aps[i] >= 0 && aps[i] < ch.B, "select_aps: AP index out of range");
    out.ap_pos.push_back(ch.ap_pos[aps[i]]);
    out.H.push_back(ch.H[aps[i]]);
    for (int j = 0; j < out.B; ++j) out.S[i][j] = ch.S[aps[i]][aps[j]];
  }
  return out;
}

// ---------------------------------------------------------------------------
// Integrity and text fixtures

/// FNV-1a over every stored double, in tensor order.
inline std::uint64_t checksum(const ChannelRealization& ch) {
  std::uint64_t h = 1469598103934665603ULL;
  auto eat = [&h](double v) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, sizeof bits);
    for (int i = 0; i < 8; ++i) {
      h ^= (bits >> (8 * i)) & 0xffU;
      h *= 1099511628211ULL;
    }
  };
  auto eat_grid = [&](const MatGrid& g) {
    for (const auto& row : g)
      for (const auto& m : row)
        for (Eigen::Index i = 0; i < m.size(); ++i) {
          eat(m.data()[i].real());
          eat(m.data()[i].imag());
        }
  };
  eat_grid(ch.H);
  eat_grid(ch.F);
  eat_grid(ch.S);
  for (const auto& p : ch.ap_pos) eat(p[0]), eat(p[1]);
  for (const auto& p : ch.ue_pos) eat(p[0]), eat(p[1]);
  return h;
}

/// One matrix block: a header line "<tag> <i> <j> <rows> <cols>" followed by
/// `rows` lines of comma-joined "re,im" pairs separated by spaces.
inline void write_matrix_block(std::ostream& os, const std::string& tag, int i, int j, const CMat& m) {
  os << tag << ' ' << i << ' ' << j << ' ' << m.rows() << ' ' << m.cols() << '\n';
  os << std::setprecision(17);
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      if (c) os << ' ';
      os << m(r, c).real() << ',' << m(r, c).imag();
    }
    os << '\n';
  }
}

inline CMat read_matrix_rows(std::istream& is, int rows, int cols) {
  CMat m(rows, cols);
  for (int r = 0; r < rows; ++r) {
    std::string line;
    if (!std::getline(is, line)) throw std::runtime_error("channel text: truncated matrix");
    std::istringstream ls(line);
    for (int c = 0; c < cols; ++c) {
      std::string tok;
      if (!(ls >> tok)) throw std::runtime_error("channel text: short row");
      const auto comma = tok.find(',');
      if (comma == std::string::npos) throw std::runtime_error("channel text: expected re,im");
      m(r, c) = cd(std::stod(tok.substr(0, comma)), std::stod(tok.substr(comma + 1)));
    }
  }
  return m;
}

inline void write_channel_text(std::ostream& os, const ChannelRealization& ch) {
  os << "# fdcf channel realization v1\n";
  os << "dims " << ch.B << ' ' << ch.M << ' ' << ch.N << ' ' << ch.K_dl << ' ' << ch.K_ul << '\n';
  os << std::setprecision(17);
  for (int b = 0; b < ch.B; ++b) os << "ap " << b << ' ' << ch.ap_pos[b][0] << ' ' << ch.ap_pos[b][1] << '\n';
  for (std::size_t k = 0; k < ch.ue_pos.size(); ++k)
    os << "ue " << k << ' ' << ch.ue_pos[k][0] << ' ' << ch.ue_pos[k][1] << '\n';
  for (int b = 0; b < ch.B; ++b)
    for (int k = 0; k < ch.K_dl + ch.K_ul; ++k) write_matrix_block(os, "H", b, k, ch.H[b][k]);
  for (int k = 0; k < ch.K_dl; ++k)
    for (int u = 0; u < ch.K_ul; ++u) write_matrix_block(os, "F", k, u, ch.F[k][u]);
  for (int b = 0; b < ch.B; ++b)
    for (int c = 0; c < ch.B; ++c) write_matrix_block(os, "S", b, c, ch.S[b][c]);
}

inline ChannelRealization read_channel_text(std::istream& is) {
  ChannelRealization ch;
  std::string line;
  bool have_dims = false;
  while (std::getline(is, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    std::string tag;
    ls >> tag;
    if (tag == "dims") {
      ls >> ch.B >> ch.M >> ch.N >> ch.K_dl >> ch.K_ul;
      ch.ap_pos.assign(ch.B, {0.0, 0.0});
      ch.ue_pos.assign(ch.K_dl + ch.K_ul, {0.0, 0.0});
      ch.H.assign(ch.B, std::vector<CMat>(ch.K_dl + ch.K_ul));
      ch.F.assign(ch.K_dl, std::vector<CMat>(ch.K_ul));
      ch.S.assign(ch.B, std::vector<CMat>(ch.B));
      have_dims = true;
    } else if (tag == "ap" || tag == "ue") {
      if (!have_dims) throw std::runtime_error("channel text: dims must come first");
      std::size_t i;
      double x, y;
      ls >> i >> x >> y;
      auto& v = (tag == "ap") ? ch.ap_pos : ch.ue_pos;
      if (i >= v.size()) throw std::runtime_error("channel text: position index out of range");
      v[i] = {x, y};
    } else if (tag == "H" || tag == "F" || tag == "S") {
      if (!have_dims) throw std::runtime_error("channel text: dims must come first");
      int i, j, r, c;
      ls >> i >> j >> r >> c;
      auto& g = (tag == "H") ? ch.H : (tag == "F") ? ch.F : ch.S;
      if (i < 0 || j < 0 || i >= static_cast<int>(g.size()) || j >= static_cast<int>(g[i].size()))
        throw std::runtime_error("channel text: block index out of range");
      g[i][j] = read_matrix_rows(is, r, c);
    } else {
      throw std::runtime_error("channel text: unknown tag '" + tag + "'");
    }
  }
  if (!have_dims) throw std::runtime_error("channel text: missing dims line");
  return ch;
}

}  // namespace fdcf
