#include "emocov/synth.hpp"

#include <cmath>
#include <cstdio>
#include <numbers>

#include "emocov/error.hpp"

namespace emocov {

namespace {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
constexpr double kPi = std::numbers::pi;

// splitmix64: tiny, portable, and fully specified, so the same seed gives the
// same bytes with any standard library.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next() {
    std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  double symmetric() { return uniform(-1.0, 1.0); }
  double normal() {
    const double u1 = 1.0 - uniform();  // (0, 1]
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * kPi * u2);
  }

 private:
  std::uint64_t state_;
};

std::uint64_t mix(std::uint64_t a, std::uint64_t b) {
  return Rng(a ^ (b + 0x632BE59BD9B4E019ULL + (a << 6) + (a >> 2))).next();
}

Mat3 rot_z(double a) { return Eigen::AngleAxisd(a, Vec3::UnitZ()).toRotationMatrix(); }
Mat3 rot_y(double a) { return Eigen::AngleAxisd(a, Vec3::UnitY()).toRotationMatrix(); }

// Limb of length `len` hanging down, swung forward by `angle` about the
// lateral axis.
Vec3 swing(double angle, double len) {
  return {len * std::sin(angle), 0.0, -len * std::cos(angle)};
}

struct Style {
  double frequency;
  double amplitude;
  double speed;
  double lean;
  double height;
};

// Position and heading along a U: straight, half circle of radius r, back.
struct PathPoint {
  Vec3 position;
  double heading;
};

PathPoint u_path(double s, double straight, double radius) {
  if (s < straight) return {{s, 0.0, 0.0}, 0.0};
  const double arc = kPi * radius;
  if (s < straight + arc) {
    const double a = (s - straight) / radius;
    return {{straight + radius * std::sin(a), radius - radius * std::cos(a), 0.0}, a};
  }
  const double back = s - straight - arc;
  return {{straight - back, 2.0 * radius, 0.0}, kPi};
}

// All 43 markers in the body frame (x forward, y left, z up) at phase `phi`.
std::vector<Vec3> body_markers(const Style& st, double phi) {
  const double h = st.height;
  const double a = st.amplitude;
  std::vector<Vec3> m;
  m.reserve(kSkeletonMarkers);

  const Vec3 pelvis{0.0, 0.03 * a * std::sin(phi), 0.95 * h + 0.025 * a * std::cos(2.0 * phi)};
  const Mat3 pel = rot_z(0.12 * a * std::sin(phi));
  const Mat3 torso = rot_z(-0.15 * a * std::sin(phi)) *
                     rot_y(st.lean + 0.04 * a * std::sin(2.0 * phi));
  auto on_torso = [&](double x, double y, double z) {
    return Vec3(pelvis + torso * Vec3(x * h, y * h, z * h));
  };
  auto on_pelvis = [&](double x, double y, double z) {
    return Vec3(pelvis + pel * Vec3(x * h, y * h, z * h));
  };

  const Vec3 lsho = on_torso(0.0, 0.19, 0.52);
  const Vec3 rsho = on_torso(0.0, -0.19, 0.52);
  const Vec3 lhip = on_pelvis(0.0, 0.09, -0.02);
  const Vec3 rhip = on_pelvis(0.0, -0.09, -0.02);
  // Torso joints first: they drive the normalization frame.
  m.push_back(lsho);
  m.push_back(rsho);
  m.push_back(lhip);
  m.push_back(rhip);

  m.push_back(on_torso(-0.06, 0.0, 0.58));   // C7
  m.push_back(on_torso(0.05, 0.0, 0.50));    // CLAV
  m.push_back(on_torso(0.09, 0.0, 0.35));    // STRN
  m.push_back(on_torso(-0.10, 0.0, 0.30));   // T10
  m.push_back(on_torso(-0.09, -0.07, 0.45)); // RBAK

  const Vec3 head = on_torso(0.0, 0.0, 0.68);
  const Mat3 head_rot = torso * rot_y(0.6 * st.lean + 0.03 * a * std::sin(2.0 * phi));
  for (const Vec3& off : {Vec3(0.08, 0.06, 0.08), Vec3(0.08, -0.06, 0.08),
                          Vec3(-0.08, 0.06, 0.06), Vec3(-0.08, -0.06, 0.06)}) {
    m.push_back(head + head_rot * (off * h));
  }

  m.push_back(on_pelvis(0.10, 0.12, 0.05));   // LASI
  m.push_back(on_pelvis(0.10, -0.12, 0.05));  // RASI
  m.push_back(on_pelvis(-0.08, 0.05, 0.07));  // LPSI
  m.push_back(on_pelvis(-0.08, -0.05, 0.07)); // RPSI

  // Arms swing against the leg on the same side.
  for (int side : {1, -1}) {
    const double s = side;
    const double arm_phase = side > 0 ? phi + kPi : phi;
    const double shoulder = 0.45 * a * std::sin(arm_phase);
    const double elbow = 0.25 + 0.35 * a * 0.5 * (1.0 + std::sin(arm_phase));
    const Vec3 sho = side > 0 ? lsho : rsho;
    const Vec3 lateral = torso * Vec3(0.0, s * h, 0.0);
    const Vec3 elb = sho + torso * swing(shoulder, 0.30 * h) + 0.03 * lateral;
    const Vec3 wri = elb + torso * swing(shoulder + elbow, 0.27 * h);
    const Vec3 fin = wri + torso * swing(shoulder + elbow + 0.1, 0.08 * h);
    m.push_back(0.5 * (sho + elb) + 0.04 * lateral);  // UPA
    m.push_back(elb + 0.03 * lateral);                // ELB
    m.push_back(0.5 * (elb + wri) + 0.03 * lateral);  // FRM
    m.push_back(wri + 0.025 * lateral);               // WRA
    m.push_back(wri - 0.01 * lateral);                // WRB
    m.push_back(fin);                                 // FIN
  }

  for (int side : {1, -1}) {
    const double s = side;
    const double leg_phase = side > 0 ? phi : phi + kPi;
    const double hip = 0.35 * a * std::sin(leg_phase);
    const double knee = 0.1 + 0.5 * a * 0.5 * (1.0 + std::sin(leg_phase + 1.2));
    const double foot = 0.2 * a * std::sin(leg_phase - 0.5);
    const Vec3 hj = side > 0 ? lhip : rhip;
    const Vec3 lateral = pel * Vec3(0.0, s * h, 0.0);
    const Vec3 kne = hj + pel * swing(hip, 0.45 * h);
    const Vec3 ank = kne + pel * swing(hip - knee, 0.43 * h);
    const Mat3 foot_rot = pel * rot_y(-foot);
    m.push_back(0.5 * (hj + kne) + 0.06 * lateral);                      // THI
    m.push_back(kne + 0.05 * lateral);                                   // KNE
    m.push_back(0.5 * (kne + ank) + 0.04 * lateral);                     // TIB
    m.push_back(ank + 0.035 * lateral);                                  // ANK
    m.push_back(ank + foot_rot * (Vec3(-0.05, 0.0, -0.04) * h));         // HEE
    m.push_back(ank + foot_rot * (Vec3(0.15, 0.0, -0.06) * h));          // TOE
    m.push_back(ank + foot_rot * (Vec3(0.10, 0.04 * s, -0.05) * h));     // META
  }
  return m;
}

}  // namespace

GaitParams GaitParams::defaults() {
  GaitParams p;
  // Low to high energy; stride frequency and amplitude grow by ≥ 25% per step.
  p.dynamics["sadness"] = {0.60, 0.50, 0.70, 0.30, 0.01};
  p.dynamics["neutral"] = {0.75, 0.65, 1.00, 0.05, 0.01};
  p.dynamics["fear"] = {0.95, 0.85, 1.20, 0.18, 0.01};
  p.dynamics["joy"] = {1.20, 1.10, 1.40, -0.06, 0.01};
  p.dynamics["anger"] = {1.50, 1.40, 1.60, 0.12, 0.01};
  return p;
}

void GaitParams::set_noise(double sigma) {
  for (auto& [_, d] : dynamics) d.noise_sigma = sigma;
}

void GaitParams::validate() const {
  auto bad = [](const std::string& what) {
    throw Error(ErrorKind::InvalidParams, "gait parameters: " + what);
  };
  if (n_joints < 4 || n_joints > kSkeletonMarkers) {
    bad("n_joints must be in [4, " + std::to_string(kSkeletonMarkers) + "]");
  }
  if (!(fps > 0.0) || !std::isfinite(fps)) bad("fps must be positive");
  if (!(duration > 0.0) || !std::isfinite(duration)) bad("duration must be positive");
  if (static_cast<long>(std::floor(duration * fps)) < 2) bad("fewer than 2 frames");
  if (!(subject_variability >= 0.0 && subject_variability < 0.5)) {
    bad("subject_variability must be in [0, 0.5)");
  }
  for (const auto& l : labels.labels()) {
    const auto it = dynamics.find(l);
    if (it == dynamics.end()) bad("no dynamics for label '" + l + "'");
    const LabelDynamics& d = it->second;
    if (!(d.stride_frequency > 0.0) || !(d.amplitude_scale > 0.0) ||
        !(d.forward_speed > 0.0) || !std::isfinite(d.posture_lean) ||
        !(d.noise_sigma >= 0.0) || !std::isfinite(d.noise_sigma)) {
      bad("invalid dynamics for label '" + l + "'");
    }
  }
}

std::vector<int> default_torso_joints() { return {0, 1, 2, 3}; }

const std::vector<std::string>& marker_names() {
  static const std::vector<std::string> names = {
      "LSHO", "RSHO", "LHIP", "RHIP", "C7",   "CLAV", "STRN", "T10",  "RBAK",
      "LFHD", "RFHD", "LBHD", "RBHD", "LASI", "RASI", "LPSI", "RPSI", "LUPA",
      "LELB", "LFRM", "LWRA", "LWRB", "LFIN", "RUPA", "RELB", "RFRM", "RWRA",
      "RWRB", "RFIN", "LTHI", "LKNE", "LTIB", "LANK", "LHEE", "LTOE", "LMT5",
      "RTHI", "RKNE", "RTIB", "RANK", "RHEE", "RTOE", "RMT5"};
  return names;
}

SkeletonSequence generate_sequence(const GaitParams& params, int subject,
                                   const std::string& label, int rep) {
  params.validate();
  const std::size_t label_index = params.labels.index_of(label);
  const LabelDynamics& dyn = params.dynamics.at(label);
  const double j = params.subject_variability;

  Rng subject_rng(mix(params.seed, 0x5000 + static_cast<std::uint64_t>(subject)));
  const Style subject_style{1.0 + j * subject_rng.symmetric(),
                            1.0 + j * subject_rng.symmetric(),
                            1.0 + j * subject_rng.symmetric(),
                            0.5 * j * subject_rng.symmetric(),
                            1.0 + 0.6 * j * subject_rng.symmetric()};

  Rng rng(mix(mix(mix(params.seed, static_cast<std::uint64_t>(subject)), label_index),
              static_cast<std::uint64_t>(rep)));
  const double rj = j / 3.0;
  const Style st{dyn.stride_frequency * subject_style.frequency * (1.0 + rj * rng.symmetric()),
                 dyn.amplitude_scale * subject_style.amplitude * (1.0 + rj * rng.symmetric()),
                 dyn.forward_speed * subject_style.speed * (1.0 + rj * rng.symmetric()),
                 dyn.posture_lean + subject_style.lean + 0.5 * rj * rng.symmetric(),
                 subject_style.height};
  const double phase0 = rng.uniform(0.0, 2.0 * kPi);
  const double heading0 = rng.uniform(0.0, 2.0 * kPi);
  const Vec3 start{rng.uniform(-2.0, 2.0), rng.uniform(-2.0, 2.0), 0.0};

  const double radius = 0.8;
  const double path_length = st.speed * params.duration;
  const double straight = std::max(0.5, 0.5 * (path_length - kPi * radius));

  const auto n_frames = static_cast<Index>(std::floor(params.duration * params.fps));
  const int nj = params.n_joints;
  Matrix frames(n_frames, 3 * nj);
  const Mat3 place = rot_z(heading0);
  for (Index f = 0; f < n_frames; ++f) {
    const double t = static_cast<double>(f) / params.fps;
    const double phi = 2.0 * kPi * st.frequency * t + phase0;
    const PathPoint pp = u_path(st.speed * t, straight, radius);
    const Mat3 body_to_world = place * rot_z(pp.heading);
    const Vec3 root = start + place * pp.position;
    const std::vector<Vec3> local = body_markers(st, phi);
    for (int k = 0; k < nj; ++k) {
      const Vec3 w = root + body_to_world * local[static_cast<std::size_t>(k)];
      for (int c = 0; c < 3; ++c) {
        frames(f, 3 * k + c) = w(c) + dyn.noise_sigma * rng.normal();
      }
    }
  }

  char subject_id[16];
  std::snprintf(subject_id, sizeof subject_id, "s%02d", subject + 1);
  const std::string source = std::string(subject_id) + "_" + label + "_r" +
                             std::to_string(rep + 1);
  return SkeletonSequence(nj, params.fps, std::move(frames), source, subject_id, label);
}

std::vector<SkeletonSequence> generate_dataset(const GaitParams& params,
                                               int subjects, int reps_per_label) {
  params.validate();
  if (subjects < 1 || reps_per_label < 1) {
    throw Error(ErrorKind::InvalidParams, "subjects and repetitions must be positive");
  }
  std::vector<SkeletonSequence> out;
  out.reserve(static_cast<std::size_t>(subjects) * params.labels.size() *
              static_cast<std::size_t>(reps_per_label));
  for (int s = 0; s < subjects; ++s) {
    for (const auto& label : params.labels.labels()) {
      for (int r = 0; r < reps_per_label; ++r) {
        out.push_back(generate_sequence(params, s, label, r));
      }
    }
  }
  return out;
}

}  // namespace emocov
