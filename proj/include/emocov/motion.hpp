#pragma once

// Skeleton sequences to covariance descriptors: torso-PCA normalization,
// posture/velocity features, and the sample covariance of those features.

#include <optional>
#include <span>
#include <string>

#include <Eigen/Dense>

#include "emocov/spd.hpp"

namespace emocov {

/// Half-open frame range [start, end) in the source sequence.
struct Window {
  Index start = 0;
  Index end = 0;

  Index size() const { return end - start; }
  friend bool operator==(const Window&, const Window&) = default;
};

/// Joint trajectories, one row per frame laid out as x1,y1,z1,...,xN,yN,zN
/// (meters). Immutable once built.
class SkeletonSequence {
 public:
  /// Throws InvalidParams (n_joints, fps), JointCountMismatch (column count),
  /// NonFiniteValue, or TooFewFrames (fewer than two frames).
  SkeletonSequence(int n_joints, double fps, Matrix frames,
                   std::string source_id = {}, std::string subject_id = {},
                   std::optional<std::string> label = std::nullopt,
                   Index first_frame = 0);

  int n_joints() const { return n_joints_; }
  double fps() const { return fps_; }
  Index n_frames() const { return frames_.rows(); }
  const Matrix& frames() const { return frames_; }
  const std::string& source_id() const { return source_id_; }
  const std::string& subject_id() const { return subject_id_; }
  const std::optional<std::string>& label() const { return label_; }

  /// Position of the first frame in the original recording.
  Index first_frame() const { return first_frame_; }
  Window span() const { return {first_frame_, first_frame_ + n_frames()}; }

  Eigen::Vector3d joint(Index frame, int joint) const {
    return frames_.row(frame).segment<3>(3 * joint).transpose();
  }

  /// Frames [start, start + length) as a new sequence. Throws InvalidParams
  /// if the range leaves the sequence, TooFewFrames if length < 2.
  SkeletonSequence window(Index start, Index length) const;

 private:
  int n_joints_;
  double fps_;
  Matrix frames_;
  std::string source_id_;
  std::string subject_id_;
  std::optional<std::string> label_;
  Index first_frame_;
};

/// Per-frame [p(t), v(t)] rows: 3·N_J normalized coordinates (m) followed by
/// 3·N_J per-frame displacements (m/frame). Row 0 has zero velocity.
struct FeatureSequence {
  int n_joints = 0;
  Matrix vectors;  // n_frames x 6·n_joints
  std::string source_id;
  Window window;

  Index dim() const { return vectors.cols(); }
  Index size() const { return vectors.rows(); }
};

/// Skeleton-centered coordinate system: x_local = basisᵀ · (x − origin).
struct NormalizationFrame {
  Eigen::Vector3d origin = Eigen::Vector3d::Zero();
  Eigen::Matrix3d basis = Eigen::Matrix3d::Identity();

  static NormalizationFrame identity() { return {}; }
};

struct MotionDescriptor {
  SpdMatrix covariance;
  std::string source_id;
  Window window;
};

/// PCA of the torso joints at the first frame. Origin is their centroid; the
/// axes are sorted by descending variance. Each of the first two axes is
/// signed so the first torso joint (in `torso_joints` order) with a
/// non-negligible projection projects positively, and the third axis is their
/// cross product. That rule rotates with the skeleton, so a rigidly moved
/// sequence gets the rigidly moved frame.
///
/// Throws InvalidParams for an empty list or out-of-range index and
/// DegenerateTorso when the point cloud has rank < 2.
NormalizationFrame torso_frame(const SkeletonSequence& seq,
                               std::span<const int> torso_joints);

/// Throws TooFewFrames below two frames.
FeatureSequence extract_features(
    const SkeletonSequence& seq,
    const std::optional<NormalizationFrame>& norm = std::nullopt);

/// Sample covariance with the n − 1 denominator, before regularization.
SymMatrix feature_covariance(const FeatureSequence& feats);

/// feature_covariance() followed by regularize(). Without an explicit
/// epsilon the scale-aware default from scale_aware_epsilon() is used.
MotionDescriptor covariance_descriptor(const FeatureSequence& feats,
                                       std::optional<double> epsilon = std::nullopt);

MotionDescriptor describe_sequence(const SkeletonSequence& seq,
                                   std::span<const int> torso_joints,
                                   std::optional<double> epsilon = std::nullopt);

}  // namespace emocov
