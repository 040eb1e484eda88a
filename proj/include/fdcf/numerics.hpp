#pragma once
/**
 * @file numerics.hpp
 * @brief Complex-matrix primitives shared by every simulator stage: Hermitian
 * solves with ridge fallback, pilot-subspace projection, power-multiplier
 * bisection, dB conversions and seeded complex Gaussian sampling.
 */

#include <Eigen/Dense>

#include <cmath>
#include <complex>
#include <cstdint>
#include <functional>
#include <initializer_list>
#include <limits>
#include <random>
#include <stdexcept>
#include <string>

namespace fdcf {

using cd = std::complex<double>;
using CMat = Eigen::MatrixXcd;
using CVec = Eigen::VectorXcd;

/// Thrown when a caller breaks a documented precondition.
class ContractViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// A numerical run produced a non-finite iterate and was aborted.
class RuntimeAbort : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline void require(bool ok, const std::string& what) {
  if (!ok) throw ContractViolation(what);
}

inline bool all_finite(const CMat& m) { return m.allFinite(); }

// ---------------------------------------------------------------------------
// Unit conversions. Powers are linear watts everywhere past the config layer.

inline double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }
inline double dbm_to_watts(double dbm) { return db_to_linear(dbm) / 1000.0; }
inline double linear_to_db(double x) { return 10.0 * std::log10(x); }

// ---------------------------------------------------------------------------
// Seeded randomness

/// splitmix64 finalizer; used to derive independent stream seeds.
inline std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Folds a tuple of identifiers (drop, purpose, iteration, ...) into one
/// stream id. Order matters.
inline std::uint64_t stream_key(std::initializer_list<std::uint64_t> parts) {
  std::uint64_t h = 0x6a09e667f3bcc908ULL;
  for (auto p : parts) h = mix64(h ^ mix64(p));
  return h;
}

/// A reproducible random stream. Identical (seed, stream_id) yields an
/// identical draw sequence; streams are never shared across threads.
class RngStream {
 public:
  RngStream(std::uint64_t seed, std::uint64_t stream_id)
      : seed_(seed), stream_id_(stream_id), engine_(mix64(seed ^ mix64(stream_id))) {}

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream_id() const { return stream_id_; }

  double uniform(double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(engine_);
  }

  double standard_normal() { return normal_(engine_); }

  /// CN(0, variance): real and imaginary parts each carry variance/2.
  cd complex_gaussian(double variance) {
    const double s = std::sqrt(variance / 2.0);
    const double re = normal_(engine_);
    const double im = normal_(engine_);
    return {s * re, s * im};
  }

 private:
  std::uint64_t seed_;
  std::uint64_t stream_id_;
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

/// i.i.d. circularly-symmetric complex Gaussian matrix, E|x|^2 = variance.
inline CMat draw_complex_gaussian(RngStream& rng, Eigen::Index rows, Eigen::Index cols,
                                  double variance) {
  require(variance >= 0.0, "draw_complex_gaussian: negative variance");
  require(rows >= 0 && cols >= 0, "draw_complex_gaussian: negative dimension");
  CMat out = CMat::Zero(rows, cols);
  if (variance == 0.0) return out;
  for (Eigen::Index j = 0; j < cols; ++j)
    for (Eigen::Index i = 0; i < rows; ++i) out(i, j) = rng.complex_gaussian(variance);
  return out;
}

// ---------------------------------------------------------------------------
// Hermitian solve

inline constexpr double kHermitianTol = 1e-10;
inline constexpr double kRidgeScale = 1e-12;

inline bool is_hermitian(const CMat& a, double rel_tol = kHermitianTol) {
  if (a.rows() != a.cols()) return false;
  const double scale = a.cwiseAbs().maxCoeff();
  if (scale == 0.0) return true;
  return (a - a.adjoint()).cwiseAbs().maxCoeff() <= rel_tol * scale;
}

/**
 * Solves A x = b for Hermitian positive semidefinite A.
 *
 * A is factored by Cholesky. If the factorization fails or A is numerically
 * singular, the system A + eps I with eps = 1e-12 * trace(A) / rows is solved
 * instead. b may hold several right-hand sides.
 */
inline CMat hermitian_solve(const CMat& a, const CMat& b) {
  require(a.rows() == a.cols() && a.rows() > 0, "hermitian_solve: A must be square");
  require(a.rows() == b.rows(), "hermitian_solve: dimension mismatch");
  require(is_hermitian(a), "hermitian_solve: A is not Hermitian");

  const CMat sym = 0.5 * (a + a.adjoint());
  Eigen::LLT<CMat> llt(sym);
  if (llt.info() == Eigen::Success && llt.rcond() > 1e-13) return llt.solve(b);

  const Eigen::Index n = a.rows();
  double eps = kRidgeScale * sym.trace().real() / static_cast<double>(n);
  if (!(eps > 0.0)) eps = std::numeric_limits<double>::min();
  CMat reg = sym;
  reg.diagonal().array() += eps;
  Eigen::LLT<CMat> ridge(reg);
  if (ridge.info() == Eigen::Success) return ridge.solve(b);
  // Indefinite by rounding only; LDLT copes with the semidefinite boundary.
  return reg.ldlt().solve(b);
}

/// Convenience overload for vector right-hand sides.
inline CVec hermitian_solve_vec(const CMat& a, const CVec& b) {
  return hermitian_solve(a, CMat(b)).col(0);
}

// ---------------------------------------------------------------------------
// Pilot-subspace projection

/// True when pilots^H pilots = tau I to a relative tolerance.
inline bool has_orthogonal_columns(const CMat& pilots, double tau, double rel_tol = 1e-10) {
  if (pilots.cols() == 0) return true;
  const CMat gram = pilots.adjoint() * pilots;
  const CMat target = tau * CMat::Identity(pilots.cols(), pilots.cols());
  return (gram - target).cwiseAbs().maxCoeff() <= rel_tol * tau;
}

/// Y * Pi * Pi^H / tau: keeps the part of each row of Y inside span(Pi).
inline CMat project_pilot_subspace(const CMat& y, const CMat& pilots, double tau) {
  require(y.cols() == pilots.rows(), "project_pilot_subspace: Y columns must equal pilot length");
  require(tau > 0.0, "project_pilot_subspace: tau must be positive");
  require(has_orthogonal_columns(pilots, tau), "project_pilot_subspace: pilot block not orthogonal");
  if (pilots.cols() == 0) return CMat::Zero(y.rows(), y.cols());
  return (y * pilots) * pilots.adjoint() / tau;
}

// ---------------------------------------------------------------------------
// Power-multiplier bisection

struct BisectionResult {
  double lambda = 0.0;
  double power = 0.0;
  int halvings = 0;
};

inline constexpr double kDefaultBisectTol = 1e-6;
inline constexpr int kMaxHalvings = 200;

/**
 * Finds lambda >= 0 such that a decreasing power map meets its budget.
 *
 * Returns lambda = 0 when eval(0) is already within budget. Otherwise the
 * bracket [0, hi] starts at hi = 1 and doubles until eval(hi) < budget, then
 * halves until |eval - budget| <= tol * budget. The returned point is always
 * the feasible end of the final bracket.
 */
inline BisectionResult bisect_power_multiplier(const std::function<double(double)>& eval,
                                               double budget, double tol = kDefaultBisectTol) {
  require(budget > 0.0, "bisect_power_multiplier: budget must be positive");
  require(tol > 0.0, "bisect_power_multiplier: tolerance must be positive");
  const double p0 = eval(0.0);
  require(std::isfinite(p0), "bisect_power_multiplier: eval(0) is not finite");
  if (p0 <= budget) return {0.0, p0, 0};

  double lo = 0.0;
  double hi = 1.0;
  double p_hi = eval(hi);
  int growth = 0;
  while (!(p_hi < budget)) {
    lo = hi;
    hi *= 2.0;
    p_hi = eval(hi);
    require(++growth < 2100, "bisect_power_multiplier: bracket growth failed");
  }
  if (std::abs(p_hi - budget) <= tol * budget) return {hi, p_hi, 0};

  int halvings = 0;
  while (halvings < kMaxHalvings) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    const double p = eval(mid);
    ++halvings;
    if (p > budget) {
      lo = mid;
    } else {
      hi = mid;
      p_hi = p;
      if (budget - p <= tol * budget) break;
    }
  }
  return {hi, p_hi, halvings};
}

// ---------------------------------------------------------------------------

inline double squared_norm(const CMat& m) { return m.squaredNorm(); }

/// Angle between two complex directions in degrees (phase-insensitive).
inline double direction_angle_deg(const CVec& a, const CVec& b) {
  const double na = a.norm();
  const double nb = b.norm();
  if (na == 0.0 || nb == 0.0) return 90.0;
  const double c = std::min(1.0, std::abs(a.dot(b)) / (na * nb));
  return std::acos(c) * 180.0 / 3.14159265358979323846;
}

}  // namespace fdcf
