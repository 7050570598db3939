#include "emocov/spd.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "emocov/error.hpp"

namespace emocov {

namespace {

constexpr double kSignThreshold = 1e-12;

void require_same_dim(Index a, Index b, const char* what) {
  if (a != b) {
    throw Error(ErrorKind::DimensionMismatch,
                std::string(what) + ": " + std::to_string(a) + " vs " +
                    std::to_string(b));
  }
}

void require_finite(const Matrix& m) {
  if (!m.allFinite()) {
    throw Error(ErrorKind::NonFiniteValue, "matrix has NaN or Inf entries");
  }
}

Eigen::SelfAdjointEigenSolver<Matrix> solve(const SymMatrix& s, int options) {
  require_finite(s.matrix());
  Eigen::SelfAdjointEigenSolver<Matrix> solver(s.matrix(), options);
  if (solver.info() != Eigen::Success) {
    throw Error(ErrorKind::IterationFailure,
                "symmetric eigensolver did not converge (dim " +
                    std::to_string(s.dim()) + ")");
  }
  return solver;
}

// V · diag(f) · Vᵀ
Matrix reassemble(const Matrix& v, const Vector& f) {
  return (v * f.asDiagonal()) * v.transpose();
}

}  // namespace

SymMatrix::SymMatrix(const Matrix& m) : m_(m) {
  if (m_.rows() == 0 || m_.rows() != m_.cols()) {
    throw Error(ErrorKind::DimensionMismatch,
                "symmetric matrix must be square and non-empty, got " +
                    std::to_string(m_.rows()) + "x" + std::to_string(m_.cols()));
  }
  m_.triangularView<Eigen::StrictlyUpper>() = m_.transpose();
}

SymMatrix SymMatrix::zero(Index dim) { return SymMatrix(Matrix::Zero(dim, dim)); }

SymMatrix SymMatrix::identity(Index dim) {
  return SymMatrix(Matrix::Identity(dim, dim));
}

SymMatrix SymMatrix::diagonal(const Vector& diag) {
  return SymMatrix(Matrix(diag.asDiagonal()));
}

double positivity_floor(double lambda_max) {
  return 1e-12 * std::max(1.0, lambda_max);
}

SpdMatrix::SpdMatrix(SymMatrix s) : s_(std::move(s)) {
  const Vector ev = sym_eigenvalues(s_);
  const double lmax = ev(0);
  const double lmin = ev(ev.size() - 1);
  if (!(lmin > positivity_floor(lmax))) {
    throw Error(ErrorKind::NotPositiveDefinite,
                "smallest eigenvalue " + std::to_string(lmin) +
                    " is below the positivity floor (largest " +
                    std::to_string(lmax) + ")");
  }
}

SpdMatrix SpdMatrix::identity(Index dim) {
  return SpdMatrix(SymMatrix::identity(dim), Trusted{});
}

SpdMatrix SpdMatrix::diagonal(const Vector& diag) {
  return SpdMatrix(SymMatrix::diagonal(diag));
}

EigenPair sym_eig(const SymMatrix& s) {
  const auto solver = solve(s, Eigen::ComputeEigenvectors);
  EigenPair out{solver.eigenvalues().reverse(),
                solver.eigenvectors().rowwise().reverse()};
  for (Index j = 0; j < out.vectors.cols(); ++j) {
    auto col = out.vectors.col(j);
    for (Index i = 0; i < col.size(); ++i) {
      if (std::abs(col(i)) > kSignThreshold) {
        if (col(i) < 0.0) col = -col;
        break;
      }
    }
  }
  return out;
}

Vector sym_eigenvalues(const SymMatrix& s) {
  return solve(s, Eigen::EigenvaluesOnly).eigenvalues().reverse();
}

SymMatrix spd_log(const SpdMatrix& c) {
  const EigenPair eig = sym_eig(c.sym());
  const double lmin = eig.values(eig.values.size() - 1);
  if (!(lmin > positivity_floor(eig.values(0)))) {
    throw Error(ErrorKind::NotPositiveDefinite,
                "matrix log: eigenvalue " + std::to_string(lmin) +
                    " at or below the positivity floor");
  }
  return SymMatrix(reassemble(eig.vectors, eig.values.array().log().matrix()));
}

SpdMatrix spd_exp(const SymMatrix& s) {
  const EigenPair eig = sym_eig(s);
  const Vector e = eig.values.array().exp().matrix();
  const double emax = e(0);
  const double emin = e(e.size() - 1);
  if (!std::isfinite(emax) || !(emin > 0.0) ||
      emin < std::numeric_limits<double>::min()) {
    throw Error(ErrorKind::Overflow,
                "matrix exp: eigenvalue range [" +
                    std::to_string(eig.values(eig.values.size() - 1)) + ", " +
                    std::to_string(eig.values(0)) +
                    "] leaves the representable range");
  }
  return SpdMatrix(SymMatrix(reassemble(eig.vectors, e)), SpdMatrix::Trusted{});
}

double sym_distance(const SymMatrix& a, const SymMatrix& b) {
  require_same_dim(a.dim(), b.dim(), "distance");
  return (a.matrix() - b.matrix()).norm();
}

double lerm_distance(const SpdMatrix& c1, const SpdMatrix& c2) {
  require_same_dim(c1.dim(), c2.dim(), "lerm_distance");
  return sym_distance(spd_log(c1), spd_log(c2));
}

double frobenius_distance(const SpdMatrix& c1, const SpdMatrix& c2) {
  require_same_dim(c1.dim(), c2.dim(), "frobenius_distance");
  return sym_distance(c1.sym(), c2.sym());
}

SymMatrix mean_log(std::span<const SymMatrix* const> logs) {
  if (logs.empty()) throw Error(ErrorKind::EmptyInput, "mean of zero matrices");
  const Index dim = logs.front()->dim();
  for (const auto* l : logs) require_same_dim(dim, l->dim(), "mean");

  std::vector<const SymMatrix*> order(logs.begin(), logs.end());
  std::sort(order.begin(), order.end(), [](const SymMatrix* a, const SymMatrix* b) {
    const Matrix& ma = a->matrix();
    const Matrix& mb = b->matrix();
    return std::lexicographical_compare(ma.data(), ma.data() + ma.size(),
                                        mb.data(), mb.data() + mb.size());
  });

  Matrix acc = Matrix::Zero(dim, dim);
  for (const auto* l : order) acc += l->matrix();
  acc /= static_cast<double>(logs.size());
  return SymMatrix(acc);
}

SymMatrix mean_log(std::span<const SymMatrix> logs) {
  std::vector<const SymMatrix*> ptrs;
  ptrs.reserve(logs.size());
  for (const auto& l : logs) ptrs.push_back(&l);
  return mean_log(std::span<const SymMatrix* const>(ptrs));
}

SpdMatrix log_euclidean_mean_of_logs(std::span<const SymMatrix> logs) {
  return spd_exp(mean_log(logs));
}

SpdMatrix log_euclidean_mean(std::span<const SpdMatrix> cs) {
  if (cs.empty()) throw Error(ErrorKind::EmptyInput, "mean of zero matrices");
  std::vector<SymMatrix> logs;
  logs.reserve(cs.size());
  for (const auto& c : cs) {
    require_same_dim(cs.front().dim(), c.dim(), "log_euclidean_mean");
    logs.push_back(spd_log(c));
  }
  return log_euclidean_mean_of_logs(logs);
}

double karcher_objective(const SpdMatrix& c, std::span<const SpdMatrix> cs) {
  const SymMatrix lc = spd_log(c);
  double total = 0.0;
  for (const auto& ci : cs) {
    require_same_dim(c.dim(), ci.dim(), "karcher_objective");
    const double d = sym_distance(lc, spd_log(ci));
    total += d * d;
  }
  return total;
}

SpdMatrix regularize(const SymMatrix& s, double epsilon) {
  if (!(epsilon > 0.0) || !std::isfinite(epsilon)) {
    throw Error(ErrorKind::InvalidParams,
                "regularization epsilon must be positive and finite");
  }
  const Vector ev = sym_eigenvalues(s);
  const double lmax = ev(0);
  const double lmin = ev(ev.size() - 1);
  if (lmin > epsilon) {
    if (!(lmin > positivity_floor(lmax))) {
      throw Error(ErrorKind::NotPositiveDefinite,
                  "epsilon is below the positivity floor for this scale");
    }
    return SpdMatrix(s, SpdMatrix::Trusted{});
  }
  // Plain additive epsilon·I unless the input is clearly indefinite.
  const double shift = lmin >= -0.5 * epsilon ? epsilon : epsilon - lmin;
  if (!(lmin + shift > positivity_floor(lmax + shift))) {
    throw Error(ErrorKind::NotPositiveDefinite,
                "epsilon " + std::to_string(epsilon) +
                    " too small for matrix scale " + std::to_string(lmax));
  }
  Matrix shifted = s.matrix();
  shifted.diagonal().array() += shift;
  return SpdMatrix(SymMatrix(shifted), SpdMatrix::Trusted{});
}

double scale_aware_epsilon(const SymMatrix& s, double relative) {
  const double tr = s.trace();
  if (tr > 0.0 && std::isfinite(tr)) {
    return relative * tr / static_cast<double>(s.dim());
  }
  return relative;
}

}  // namespace emocov
