#include <catch2/catch_amalgamated.hpp>

#include "fdcf/numerics.hpp"

#include <cmath>
#include <set>

using namespace fdcf;
using Catch::Approx;

namespace {

// Plain Gaussian elimination with partial pivoting.
CMat gauss_solve(CMat a, CMat b) {
  const Eigen::Index n = a.rows();
  for (Eigen::Index c = 0; c < n; ++c) {
    Eigen::Index p = c;
    for (Eigen::Index r = c + 1; r < n; ++r)
      if (std::abs(a(r, c)) > std::abs(a(p, c))) p = r;
    a.row(c).swap(a.row(p));
    b.row(c).swap(b.row(p));
    for (Eigen::Index r = c + 1; r < n; ++r) {
      const cd f = a(r, c) / a(c, c);
      a.row(r) -= f * a.row(c);
      b.row(r) -= f * b.row(c);
    }
  }
  CMat x = CMat::Zero(n, b.cols());
  for (Eigen::Index r = n - 1; r >= 0; --r) {
    auto acc = b.row(r).eval();
    for (Eigen::Index c = r + 1; c < n; ++c) acc -= a(r, c) * x.row(c);
    x.row(r) = acc / a(r, r);
  }
  return x;
}

}  // namespace

TEST_CASE("hermitian_solve agrees with elimination", "[numerics]") {
  RngStream rng(7, 1);
  for (int trial = 0; trial < 20; ++trial) {
    const int n = 2 + trial % 5;
    const CMat g = draw_complex_gaussian(rng, n, n + 2, 1.0);
    CMat a = g * g.adjoint();
    a.diagonal().array() += 0.1;
    const CMat b = draw_complex_gaussian(rng, n, 3, 1.0);
    const CMat x = hermitian_solve(a, b);
    const CMat ref = gauss_solve(a, b);
    CHECK((x - ref).norm() <= 1e-10 * ref.norm());
  }
}

TEST_CASE("hermitian_solve rejects non-hermitian input", "[numerics]") {
  CMat a(2, 2);
  a << 1.0, 2.0, 0.0, 1.0;
  CHECK_THROWS_AS(hermitian_solve(a, CMat::Identity(2, 1)), ContractViolation);
}

TEST_CASE("bisection lands on the budget crossing of a grid scan", "[numerics]") {
  // p(l) = sum_i c_i / (e_i + l)^2 is decreasing in l.
  const double c[3] = {4.0, 1.0, 0.25};
  const double e[3] = {0.01, 0.3, 2.0};
  auto p = [&](double l) {
    double s = 0.0;
    for (int i = 0; i < 3; ++i) s += c[i] / ((e[i] + l) * (e[i] + l));
    return s;
  };
  const double budget = 2.0;
  double grid = 0.0;
  for (double l = 0.0; l < 10.0; l += 1e-6)
    if (p(l) <= budget) {
      grid = l;
      break;
    }
  const auto r = bisect_power_multiplier(p, budget, 1e-10);
  CHECK(r.lambda == Approx(grid).margin(2e-6));
  CHECK(r.power <= budget);
  CHECK(r.power >= budget * (1.0 - 1e-10));
}

TEST_CASE("bisection returns zero when already feasible", "[numerics]") {
  const auto r = bisect_power_multiplier([](double l) { return 1.0 / (1.0 + l); }, 2.0);
  CHECK(r.lambda == 0.0);
  CHECK(r.power == 1.0);
}

TEST_CASE("rng streams are reproducible and distinct", "[numerics]") {
  RngStream a(42, stream_key({1, 2})), b(42, stream_key({1, 2})), c(42, stream_key({2, 1}));
  for (int i = 0; i < 100; ++i) {
    const double x = a.standard_normal();
    CHECK(x == b.standard_normal());
    CHECK(x != c.standard_normal());
  }
  std::set<std::uint64_t> keys;
  for (std::uint64_t i = 0; i < 1000; ++i) keys.insert(stream_key({i, 3}));
  CHECK(keys.size() == 1000);
}

TEST_CASE("complex gaussian draws have the requested variance", "[numerics]") {
  RngStream rng(3, 9);
  const CMat x = draw_complex_gaussian(rng, 200, 500, 2.5);
  const double var = x.squaredNorm() / static_cast<double>(x.size());
  CHECK(var == Approx(2.5).epsilon(0.01));
  CHECK(std::abs(x.sum() / static_cast<double>(x.size())) < 0.01);
  CHECK(std::abs((x.array() * x.array()).sum() / static_cast<double>(x.size())) < 0.02);
}

TEST_CASE("pilot projection keeps the span and nulls the complement", "[numerics]") {
  const int tau = 8;
  CMat dft(tau, tau);
  for (int r = 0; r < tau; ++r)
    for (int c = 0; c < tau; ++c) dft(r, c) = std::polar(1.0, 2.0 * M_PI * r * c / tau);
  const CMat p = dft.leftCols(3);
  const CMat q = dft.rightCols(5);
  CHECK(has_orthogonal_columns(dft, tau));
  RngStream rng(5, 5);
  const CMat a = draw_complex_gaussian(rng, 4, 3, 1.0);
  const CMat n = draw_complex_gaussian(rng, 4, 5, 1.0);
  const CMat y = a * p.adjoint() + n * q.adjoint();
  const CMat proj = project_pilot_subspace(y, p, tau);
  CHECK((proj - a * p.adjoint()).norm() < 1e-12);
}

TEST_CASE("dB helpers", "[numerics]") {
  CHECK(dbm_to_watts(30.0) == Approx(1.0));
  CHECK(dbm_to_watts(-95.0) == Approx(3.1622776601683795e-13));
  CHECK(linear_to_db(db_to_linear(-37.5)) == Approx(-37.5));
}

TEST_CASE("direction angle ignores phase", "[numerics]") {
  CVec a(2), b(2);
  a << cd(1, 0), cd(0, 1);
  b = a * std::polar(3.0, 0.7);
  CHECK(direction_angle_deg(a, b) == Approx(0.0).margin(1e-6));
  CVec c(2);
  c << cd(0, 1), cd(1, 0);
  CHECK(direction_angle_deg(a, c) > 1.0);
}
