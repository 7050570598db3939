#pragma once

// Symmetric and symmetric positive-definite matrices, and the log-Euclidean
// geometry on top of them: matrix log/exp through a symmetric
// eigendecomposition, LERM and Frobenius distances, and the closed-form
// log-Euclidean mean.
//
// Every function here is pure. Values can be shared across threads freely.

#include <span>

#include <Eigen/Dense>

namespace emocov {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

/// A square matrix that is exactly symmetric. The constructor reads the lower
/// triangle and mirrors it, so entries[i][j] == entries[j][i] bitwise.
class SymMatrix {
 public:
  /// Throws DimensionMismatch if `m` is empty or not square.
  explicit SymMatrix(const Matrix& m);

  static SymMatrix zero(Index dim);
  static SymMatrix identity(Index dim);
  static SymMatrix diagonal(const Vector& diag);

  Index dim() const { return m_.rows(); }
  const Matrix& matrix() const { return m_; }
  double operator()(Index i, Index j) const { return m_(i, j); }
  double trace() const { return m_.trace(); }

  friend bool operator==(const SymMatrix& a, const SymMatrix& b) {
    return a.m_.rows() == b.m_.rows() && a.m_ == b.m_;
  }

 private:
  Matrix m_;
};

/// Smallest eigenvalue an SPD matrix may have given its largest one.
double positivity_floor(double lambda_max);

/// A symmetric matrix whose spectrum clears positivity_floor(). Checked once
/// at construction; rank-deficient inputs must go through regularize().
class SpdMatrix {
 public:
  /// Throws NotPositiveDefinite when lambda_min <= positivity_floor(lambda_max).
  explicit SpdMatrix(SymMatrix s);
  explicit SpdMatrix(const Matrix& m) : SpdMatrix(SymMatrix(m)) {}

  static SpdMatrix identity(Index dim);
  static SpdMatrix diagonal(const Vector& diag);

  Index dim() const { return s_.dim(); }
  const SymMatrix& sym() const { return s_; }
  const Matrix& matrix() const { return s_.matrix(); }
  double operator()(Index i, Index j) const { return s_(i, j); }

  friend bool operator==(const SpdMatrix& a, const SpdMatrix& b) {
    return a.s_ == b.s_;
  }

 private:
  struct Trusted {};
  SpdMatrix(SymMatrix s, Trusted) : s_(std::move(s)) {}

  friend SpdMatrix spd_exp(const SymMatrix& s);
  friend SpdMatrix regularize(const SymMatrix& s, double epsilon);

  SymMatrix s_;
};

struct EigenPair {
  Vector values;   // descending
  Matrix vectors;  // column i pairs with values[i]
};

/// Full symmetric eigendecomposition. Eigenvalues come back in descending
/// order; each eigenvector is signed so that its first component with
/// magnitude above 1e-12 is positive. Throws IterationFailure if the QR
/// iteration does not converge within 30·dim sweeps and NonFiniteValue if the
/// input holds NaN/Inf.
EigenPair sym_eig(const SymMatrix& s);

/// Eigenvalues only, descending. Same failure modes as sym_eig.
Vector sym_eigenvalues(const SymMatrix& s);

SymMatrix spd_log(const SpdMatrix& c);

/// Throws Overflow when an exponentiated eigenvalue leaves the finite,
/// nonzero double range.
SpdMatrix spd_exp(const SymMatrix& s);

/// ‖a − b‖_F for symmetric matrices of equal dimension.
double sym_distance(const SymMatrix& a, const SymMatrix& b);

/// Log-Euclidean Riemannian metric ‖log(c1) − log(c2)‖_F.
double lerm_distance(const SpdMatrix& c1, const SpdMatrix& c2);

double frobenius_distance(const SpdMatrix& c1, const SpdMatrix& c2);

/// Arithmetic mean of tangent vectors, summed in a canonical order
/// (lexicographic over entries) so the result does not depend on input order.
SymMatrix mean_log(std::span<const SymMatrix> logs);
SymMatrix mean_log(std::span<const SymMatrix* const> logs);

/// exp((1/N) Σ log Cᵢ), the minimizer of Σ d²(C, Cᵢ) under LERM.
SpdMatrix log_euclidean_mean(std::span<const SpdMatrix> cs);
SpdMatrix log_euclidean_mean_of_logs(std::span<const SymMatrix> logs);

/// Σ lerm_distance(c, cᵢ)². Kept as an oracle for the mean.
double karcher_objective(const SpdMatrix& c, std::span<const SpdMatrix> cs);

/// Adds epsilon·I when lambda_min <= epsilon, otherwise returns `s`
/// unchanged. An input with lambda_min < -epsilon/2 (not a covariance) is
/// shifted by epsilon - lambda_min instead so the result is still SPD.
SpdMatrix regularize(const SymMatrix& s, double epsilon);

/// relative · trace(s) / dim, or `relative` itself when the trace is not
/// positive (e.g. an all-zero covariance).
double scale_aware_epsilon(const SymMatrix& s, double relative = 1e-6);

}  // namespace emocov
