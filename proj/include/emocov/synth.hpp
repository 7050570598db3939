#pragma once

// Parametric generator of labeled walking sequences. Each sequence is a
// 43-marker skeleton whose limbs oscillate at a label-dependent stride
// frequency and amplitude while the body follows a U-shaped path (forward,
// 180° turn, back), placed at a random position and heading.

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "emocov/classify.hpp"
#include "emocov/motion.hpp"

namespace emocov {

struct LabelDynamics {
  double stride_frequency = 1.0;  // Hz
  double amplitude_scale = 1.0;
  double forward_speed = 1.0;  // m/s
  double posture_lean = 0.0;   // rad, forward pitch of the torso
  double noise_sigma = 0.01;   // m, per coordinate per frame
};

struct GaitParams {
  LabelSet labels = LabelSet::emotions();
  std::map<std::string, LabelDynamics> dynamics;
  int n_joints = 43;
  double fps = 120.0;
  double duration = 5.0;  // s
  std::uint64_t seed = 1;
  /// Relative spread of per-subject style (frequency, amplitude, speed,
  /// lean, body size). Zero makes all subjects identical up to phase.
  double subject_variability = 0.08;

  /// Five emotions, 43 joints at 120 fps, ≥ 25% frequency and amplitude
  /// gaps between neighbouring classes, noise 1 cm.
  static GaitParams defaults();

  void set_noise(double sigma);
  /// Throws InvalidParams.
  void validate() const;
};

/// Marker indices of the shoulders and hips, the default torso set.
std::vector<int> default_torso_joints();

/// Marker names of the synthetic skeleton, in column order.
const std::vector<std::string>& marker_names();

inline constexpr int kSkeletonMarkers = 43;

/// One sequence; deterministic in (params.seed, subject, label, rep). Subject
/// and rep are zero-based; ids count from one (subject 0 is "s01").
SkeletonSequence generate_sequence(const GaitParams& params, int subject,
                                   const std::string& label, int rep);

/// subjects × labels × reps sequences ordered subject, label, rep. Subject ids
/// are "s01", "s02", ...; source ids "s01_anger_r1".
std::vector<SkeletonSequence> generate_dataset(const GaitParams& params,
                                               int subjects, int reps_per_label);

}  // namespace emocov
