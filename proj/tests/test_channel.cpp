#include <catch2/catch_amalgamated.hpp>

#include "fdcf/channel.hpp"

#include <cmath>
#include <limits>
#include <sstream>

using namespace fdcf;
using Catch::Approx;

TEST_CASE("pathloss follows the log-distance law", "[channel]") {
  NetworkConfig cfg;
  CHECK(pathloss_db(100.0, cfg) == Approx(-30.5 - 37.0 * 2.0));
  CHECK(pathloss_db(0.2, cfg) == Approx(-30.5));
  CHECK(linear_to_db(pathloss_linear(50.0, cfg)) == Approx(pathloss_db(50.0, cfg)));
}

TEST_CASE("topology places APs on the lattice and UEs inside the square", "[channel]") {
  const NetworkConfig cfg;
  RngStream rng(1, 1);
  const auto t = generate_topology(cfg, rng);
  REQUIRE(t.ap_pos.size() == 16);
  CHECK(t.ap_pos[0][0] == Approx(50.0));
  CHECK(t.ap_pos[5][1] == Approx(150.0));
  for (const auto& p : t.ue_pos) {
    CHECK(p[0] >= 0.0);
    CHECK(p[0] <= 400.0);
    CHECK(p[1] >= 0.0);
    CHECK(p[1] <= 400.0);
  }
}

TEST_CASE("channel dimensions and empirical gains", "[channel]") {
  const NetworkConfig cfg = NetworkConfig::desk();
  const auto ch = make_drop(cfg, 9, 0);
  REQUIRE(ch.H.size() == 4);
  REQUIRE(ch.H[0].size() == 4);
  CHECK(ch.H[0][0].rows() == 2);
  CHECK(ch.F.size() == 2);
  CHECK(ch.F[0].size() == 2);
  CHECK(ch.S[1][1].rows() == 2);

  // Average over drops of |h|^2 / pathloss tracks 1.
  double acc = 0.0;
  int n = 0;
  for (std::uint64_t d = 0; d < 400; ++d) {
    const auto c = make_drop(cfg, 9, d);
    for (int b = 0; b < c.B; ++b)
      for (int k = 0; k < cfg.K(); ++k) {
        const double g = pathloss_linear(distance(c.ap_pos[b], c.ue_pos[k]), cfg);
        acc += c.H[b][k].squaredNorm() / (g * cfg.M * cfg.N);
        ++n;
      }
  }
  CHECK(acc / n == Approx(1.0).epsilon(0.03));
}

TEST_CASE("self-interference gain uses the attenuation", "[channel]") {
  const NetworkConfig cfg = NetworkConfig::desk();
  double acc = 0.0;
  for (std::uint64_t d = 0; d < 500; ++d) acc += make_drop(cfg, 2, d).S[0][0].squaredNorm();
  CHECK(acc / (500.0 * cfg.M * cfg.M) == Approx(1e-4).epsilon(0.05));
}

TEST_CASE("disabling UE coupling leaves H and S untouched", "[channel]") {
  NetworkConfig a = NetworkConfig::desk();
  NetworkConfig b = a;
  b.ue_isolation_db = -std::numeric_limits<double>::infinity();
  const auto ca = make_drop(a, 4, 3);
  const auto cb = make_drop(b, 4, 3);
  CHECK((ca.H[2][1] - cb.H[2][1]).norm() == 0.0);
  CHECK((ca.S[0][3] - cb.S[0][3]).norm() == 0.0);
  CHECK(cb.F[1][0].norm() == 0.0);
}

TEST_CASE("drops are reproducible and distinct", "[channel]") {
  const NetworkConfig cfg = NetworkConfig::desk();
  CHECK(checksum(make_drop(cfg, 5, 1)) == checksum(make_drop(cfg, 5, 1)));
  CHECK(checksum(make_drop(cfg, 5, 1)) != checksum(make_drop(cfg, 5, 2)));
  CHECK(checksum(make_drop(cfg, 5, 1)) != checksum(make_drop(cfg, 6, 1)));
}

TEST_CASE("text round trip is exact", "[channel]") {
  const auto ch = make_drop(NetworkConfig::desk(), 77, 4);
  std::stringstream ss;
  write_channel_text(ss, ch);
  const auto back = read_channel_text(ss);
  CHECK(checksum(back) == checksum(ch));
  CHECK((back.F[1][1] - ch.F[1][1]).norm() == 0.0);
}

TEST_CASE("channel views", "[channel]") {
  const auto ch = make_drop(NetworkConfig::desk(), 1, 0);
  const auto ul = select_ues(ch, {}, {1});
  CHECK(ul.K_dl == 0);
  CHECK(ul.K_ul == 1);
  CHECK((ul.H_ul(2, 0) - ch.H_ul(2, 1)).norm() == 0.0);
  const auto two = select_aps(ch, {1, 3});
  CHECK(two.B == 2);
  CHECK((two.S[0][1] - ch.S[1][3]).norm() == 0.0);
  CHECK((two.H[1][2] - ch.H[3][2]).norm() == 0.0);
  const auto nf = without_cross_link(ch);
  CHECK(nf.F[0][1].norm() == 0.0);
  const auto ns = without_ap_coupling(ch);
  CHECK(ns.S[0][0].norm() == 0.0);
  CHECK(ns.S[2][1].norm() == 0.0);
}
