#pragma once

// Reference implementations used only by the tests. They share no code with
// the library: eigenvalues come from cyclic Jacobi rotations, covariance from
// an explicit two-pass loop, matrix functions from the Jacobi decomposition.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <random>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace oracle {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;

struct Eig {
  Vec values;  // descending
  Mat vectors;
};

// Cyclic Jacobi. Slow, but each rotation is exact-to-rounding, so it makes a
// good independent check on a QR-based solver.
inline Eig jacobi(Mat a, int max_sweeps = 100) {
  const Eigen::Index n = a.rows();
  Mat v = Mat::Identity(n, n);
  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    double off = 0.0;
    for (Eigen::Index p = 0; p < n; ++p) {
      for (Eigen::Index q = p + 1; q < n; ++q) off += a(p, q) * a(p, q);
    }
    if (off < 1e-30 * std::max(1.0, a.squaredNorm())) break;
    for (Eigen::Index p = 0; p < n; ++p) {
      for (Eigen::Index q = p + 1; q < n; ++q) {
        if (a(p, q) == 0.0) continue;
        const double theta = (a(q, q) - a(p, p)) / (2.0 * a(p, q));
        const double t = (theta >= 0 ? 1.0 : -1.0) /
                         (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (Eigen::Index k = 0; k < n; ++k) {
          const double akp = a(k, p), akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (Eigen::Index k = 0; k < n; ++k) {
          const double apk = a(p, k), aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
        for (Eigen::Index k = 0; k < n; ++k) {
          const double vkp = v(k, p), vkq = v(k, q);
          v(k, p) = c * vkp - s * vkq;
          v(k, q) = s * vkp + c * vkq;
        }
      }
    }
  }
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::sort(order.begin(), order.end(),
            [&](Eigen::Index i, Eigen::Index j) { return a(i, i) > a(j, j); });
  Eig out{Vec(n), Mat(n, n)};
  for (Eigen::Index i = 0; i < n; ++i) {
    out.values(i) = a(order[static_cast<std::size_t>(i)], order[static_cast<std::size_t>(i)]);
    out.vectors.col(i) = v.col(order[static_cast<std::size_t>(i)]);
  }
  return out;
}

template <typename F>
Mat apply_fn(const Mat& a, F f) {
  const Eig e = jacobi(a);
  Vec fv = e.values;
  for (Eigen::Index i = 0; i < fv.size(); ++i) fv(i) = f(fv(i));
  return e.vectors * fv.asDiagonal() * e.vectors.transpose();
}

inline Mat log_m(const Mat& a) { return apply_fn(a, [](double x) { return std::log(x); }); }
inline Mat exp_m(const Mat& a) { return apply_fn(a, [](double x) { return std::exp(x); }); }

// Sample covariance of the rows, n − 1 denominator, mean subtracted first.
inline Mat two_pass_covariance(const Mat& rows) {
  const Eigen::Index n = rows.rows(), d = rows.cols();
  std::vector<double> mean(static_cast<std::size_t>(d), 0.0);
  for (Eigen::Index j = 0; j < d; ++j) {
    for (Eigen::Index i = 0; i < n; ++i) mean[static_cast<std::size_t>(j)] += rows(i, j);
    mean[static_cast<std::size_t>(j)] /= static_cast<double>(n);
  }
  Mat c = Mat::Zero(d, d);
  for (Eigen::Index a = 0; a < d; ++a) {
    for (Eigen::Index b = 0; b < d; ++b) {
      double s = 0.0;
      for (Eigen::Index i = 0; i < n; ++i) {
        s += (rows(i, a) - mean[static_cast<std::size_t>(a)]) *
             (rows(i, b) - mean[static_cast<std::size_t>(b)]);
      }
      c(a, b) = s / static_cast<double>(n - 1);
    }
  }
  return c;
}

// Posture rows followed by per-frame displacements, zero displacement first.
inline Mat posture_velocity(const Mat& frames) {
  const Eigen::Index n = frames.rows(), d = frames.cols();
  Mat out = Mat::Zero(n, 2 * d);
  for (Eigen::Index t = 0; t < n; ++t) {
    for (Eigen::Index j = 0; j < d; ++j) {
      out(t, j) = frames(t, j);
      out(t, d + j) = t == 0 ? 0.0 : frames(t, j) - frames(t - 1, j);
    }
  }
  return out;
}

inline Mat random_orthogonal(std::mt19937_64& rng, Eigen::Index n) {
  std::normal_distribution<double> g;
  Mat a(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) a(i, j) = g(rng);
  }
  Eigen::HouseholderQR<Mat> qr(a);
  return qr.householderQ() * Mat::Identity(n, n);
}

inline Eigen::Matrix3d random_rotation(std::mt19937_64& rng) {
  Eigen::Matrix3d q = random_orthogonal(rng, 3);
  if (q.determinant() < 0) q.col(0) *= -1.0;
  return q;
}

// Q·diag(λ)·Qᵀ with log λ uniform on [log(scale/cond), log(scale)], so the
// condition number is at most `max_cond`.
inline Mat random_spd(std::mt19937_64& rng, Eigen::Index n, double max_cond = 1e6) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double scale = std::exp(4.0 * u(rng) - 2.0);
  Vec lambda(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    lambda(i) = scale * std::exp(-std::log(max_cond) * u(rng));
  }
  const Mat q = random_orthogonal(rng, n);
  Mat c = q * lambda.asDiagonal() * q.transpose();
  return 0.5 * (c + c.transpose());
}

// Symmetric matrix with unit Frobenius norm.
inline Mat random_unit_symmetric(std::mt19937_64& rng, Eigen::Index n) {
  std::normal_distribution<double> g;
  Mat w(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j <= i; ++j) w(i, j) = w(j, i) = g(rng);
  }
  return w / w.norm();
}

}  // namespace oracle
