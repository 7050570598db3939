#include "emocov/motion.hpp"

#include <cmath>
#include <string>

#include "emocov/error.hpp"

namespace emocov {

namespace {

// Second principal variance must exceed this fraction of the first.
constexpr double kTorsoRankTolerance = 1e-10;

void orient_by_first_joint(Eigen::Vector3d& axis, const Eigen::Matrix3Xd& centered,
                           double scale) {
  for (Index j = 0; j < centered.cols(); ++j) {
    const double proj = axis.dot(centered.col(j));
    if (std::abs(proj) > 1e-9 * scale) {
      if (proj < 0.0) axis = -axis;
      return;
    }
  }
}

}  // namespace

SkeletonSequence::SkeletonSequence(int n_joints, double fps, Matrix frames,
                                   std::string source_id, std::string subject_id,
                                   std::optional<std::string> label,
                                   Index first_frame)
    : n_joints_(n_joints),
      fps_(fps),
      frames_(std::move(frames)),
      source_id_(std::move(source_id)),
      subject_id_(std::move(subject_id)),
      label_(std::move(label)),
      first_frame_(first_frame) {
  if (n_joints_ <= 0) {
    throw Error(ErrorKind::InvalidParams, "n_joints must be positive");
  }
  if (!(fps_ > 0.0) || !std::isfinite(fps_)) {
    throw Error(ErrorKind::InvalidParams, "fps must be positive");
  }
  if (frames_.cols() != 3 * n_joints_) {
    throw Error(ErrorKind::JointCountMismatch,
                source_id_ + ": expected " + std::to_string(3 * n_joints_) +
                    " coordinates per frame, got " +
                    std::to_string(frames_.cols()));
  }
  if (!frames_.allFinite()) {
    throw Error(ErrorKind::NonFiniteValue, source_id_ + ": non-finite coordinate");
  }
  if (frames_.rows() < 2) {
    throw Error(ErrorKind::TooFewFrames,
                source_id_ + ": need at least 2 frames, got " +
                    std::to_string(frames_.rows()));
  }
}

SkeletonSequence SkeletonSequence::window(Index start, Index length) const {
  if (start < 0 || length < 0 || start + length > n_frames()) {
    throw Error(ErrorKind::InvalidParams,
                "window [" + std::to_string(start) + ", " +
                    std::to_string(start + length) + ") outside " +
                    std::to_string(n_frames()) + " frames");
  }
  if (length < 2) {
    throw Error(ErrorKind::TooFewFrames, "window needs at least 2 frames");
  }
  return SkeletonSequence(n_joints_, fps_, frames_.middleRows(start, length),
                          source_id_, subject_id_, label_, first_frame_ + start);
}

NormalizationFrame torso_frame(const SkeletonSequence& seq,
                               std::span<const int> torso_joints) {
  if (torso_joints.empty()) {
    throw Error(ErrorKind::InvalidParams, "torso joint list is empty");
  }
  Eigen::Matrix3Xd pts(3, static_cast<Index>(torso_joints.size()));
  for (std::size_t k = 0; k < torso_joints.size(); ++k) {
    const int j = torso_joints[k];
    if (j < 0 || j >= seq.n_joints()) {
      throw Error(ErrorKind::InvalidParams,
                  "torso joint index " + std::to_string(j) + " out of range");
    }
    pts.col(static_cast<Index>(k)) = seq.joint(0, j);
  }

  NormalizationFrame out;
  out.origin = pts.rowwise().mean();
  const Eigen::Matrix3Xd centered = pts.colwise() - out.origin;
  const Matrix scatter = centered * centered.transpose() /
                         static_cast<double>(centered.cols());
  const EigenPair eig = sym_eig(SymMatrix(scatter));

  if (!(eig.values(0) > 0.0) ||
      !(eig.values(1) > kTorsoRankTolerance * eig.values(0))) {
    throw Error(ErrorKind::DegenerateTorso,
                seq.source_id() + ": torso joints at frame 0 are collinear or "
                                  "coincident");
  }

  const double scale = std::sqrt(eig.values(0));
  Eigen::Vector3d e1 = eig.vectors.col(0);
  Eigen::Vector3d e2 = eig.vectors.col(1);
  orient_by_first_joint(e1, centered, scale);
  orient_by_first_joint(e2, centered, scale);
  out.basis.col(0) = e1;
  out.basis.col(1) = e2;
  out.basis.col(2) = e1.cross(e2);
  return out;
}

FeatureSequence extract_features(const SkeletonSequence& seq,
                                 const std::optional<NormalizationFrame>& norm) {
  const Index n = seq.n_frames();
  const Index nj = seq.n_joints();
  if (n < 2) {
    throw Error(ErrorKind::TooFewFrames, "need at least 2 frames");
  }

  FeatureSequence out;
  out.n_joints = seq.n_joints();
  out.source_id = seq.source_id();
  out.window = seq.span();
  out.vectors.resize(n, 6 * nj);

  for (Index t = 0; t < n; ++t) {
    const Eigen::RowVectorXd row = seq.frames().row(t);
    Eigen::Matrix3Xd p = Eigen::Map<const Eigen::Matrix3Xd>(row.data(), 3, nj);
    if (norm) {
      p = norm->basis.transpose() * (p.colwise() - norm->origin);
    }
    out.vectors.row(t).head(3 * nj) =
        Eigen::Map<const Eigen::RowVectorXd>(p.data(), 3 * nj);
  }

  out.vectors.row(0).tail(3 * nj).setZero();
  for (Index t = 1; t < n; ++t) {
    out.vectors.row(t).tail(3 * nj) =
        out.vectors.row(t).head(3 * nj) - out.vectors.row(t - 1).head(3 * nj);
  }
  return out;
}

SymMatrix feature_covariance(const FeatureSequence& feats) {
  const Index n = feats.size();
  if (n < 2) {
    throw Error(ErrorKind::TooFewFrames, "covariance needs at least 2 samples");
  }
  const Eigen::RowVectorXd mean = feats.vectors.colwise().mean();
  const Matrix centered = feats.vectors.rowwise() - mean;
  Matrix cov = Matrix::Zero(feats.dim(), feats.dim());
  cov.selfadjointView<Eigen::Lower>().rankUpdate(
      centered.transpose(), 1.0 / static_cast<double>(n - 1));
  return SymMatrix(cov);
}

MotionDescriptor covariance_descriptor(const FeatureSequence& feats,
                                       std::optional<double> epsilon) {
  const SymMatrix cov = feature_covariance(feats);
  const double eps = epsilon ? *epsilon : scale_aware_epsilon(cov);
  return MotionDescriptor{regularize(cov, eps), feats.source_id, feats.window};
}

MotionDescriptor describe_sequence(const SkeletonSequence& seq,
                                   std::span<const int> torso_joints,
                                   std::optional<double> epsilon) {
  return covariance_descriptor(
      extract_features(seq, torso_frame(seq, torso_joints)), epsilon);
}

}  // namespace emocov
