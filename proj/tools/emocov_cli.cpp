// emocov: synthesize gait data, extract covariance descriptors, train
// prototypes, classify sequences and run leave-one-subject-out evaluation.
//
// Exit status: 0 success, 1 usage error, 2 data error, 3 numeric failure.
// Diagnostics go to stderr; results go to stdout or the --out file.

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "emocov/classify.hpp"
#include "emocov/error.hpp"
#include "emocov/evaluate.hpp"
#include "emocov/io.hpp"
#include "emocov/parallel.hpp"
#include "emocov/synth.hpp"

namespace fs = std::filesystem;
using namespace emocov;

namespace {

constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitNumeric = 3;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

bool g_quiet = false;

void log(const std::string& line) {
  if (!g_quiet) std::cerr << "emocov: " << line << '\n';
}

// Options shared by every subcommand that turns sequences into descriptors.
struct DescribeOptions {
  std::optional<double> epsilon;
  std::optional<long> window_start;
  std::optional<long> window_len;
  unsigned threads = 1;
};

void add_describe_options(CLI::App* cmd, DescribeOptions& o) {
  cmd->add_option("--epsilon", o.epsilon,
                  "Regularization added to each covariance (default: EMOCOV_EPSILON, "
                  "else 1e-6 times the mean eigenvalue)");
  cmd->add_option("--window-start", o.window_start, "First frame of the analysed window");
  cmd->add_option("--window-len", o.window_len,
                  "Frames in the analysed window (default: to the end)");
  cmd->add_option("--parallel", o.threads, "Worker threads")->check(CLI::Range(1u, 256u));
}

// Flag value, then EMOCOV_EPSILON, then nothing (scale-aware default).
std::optional<double> resolve_epsilon(const std::optional<double>& flag) {
  std::optional<double> eps = flag;
  if (!eps) {
    if (const char* env = std::getenv("EMOCOV_EPSILON"); env && *env) {
      char* end = nullptr;
      const double v = std::strtod(env, &end);
      if (end == env || *end != '\0') {
        throw UsageError("EMOCOV_EPSILON is not a number: '" + std::string(env) + "'");
      }
      eps = v;
    }
  }
  if (eps && !(*eps > 0.0)) throw UsageError("epsilon must be positive");
  return eps;
}

void check_window(const DescribeOptions& o) {
  if (o.window_start && *o.window_start < 0) throw UsageError("--window-start must be >= 0");
  if (o.window_len && *o.window_len < 2) throw UsageError("--window-len must be >= 2");
}

SkeletonSequence apply_window(const SkeletonSequence& seq, const DescribeOptions& o) {
  if (!o.window_start && !o.window_len) return seq;
  const Index start = o.window_start.value_or(0);
  const Index len = o.window_len ? Index(*o.window_len) : seq.n_frames() - start;
  return seq.window(start, len);
}

MotionDescriptor describe(const SkeletonSequence& raw, const io::FeatureConfig& features,
                          const DescribeOptions& o) {
  return describe_sequence(apply_window(raw, o), features.torso_joints, features.epsilon);
}

io::DescriptorSet describe_manifest(const fs::path& manifest_path, const DescribeOptions& o) {
  const io::DatasetManifest manifest = io::load_manifest(manifest_path);
  if (manifest.entries.empty()) throw Error(ErrorKind::EmptyInput, "manifest has no entries");
  io::FeatureConfig features{manifest.n_joints(), manifest.torso_joints,
                             resolve_epsilon(o.epsilon)};
  log("loading " + std::to_string(manifest.entries.size()) + " sequences");
  const std::vector<SkeletonSequence> seqs = io::load_dataset(manifest, o.threads);

  log("extracting descriptors");
  std::vector<std::optional<LabeledDescriptor>> slots(seqs.size());
  parallel_for(seqs.size(), o.threads, [&](std::size_t i) {
    slots[i].emplace(LabeledDescriptor{describe(seqs[i], features, o),
                                       manifest.entries[i].label,
                                       manifest.entries[i].subject_id});
  });
  io::DescriptorSet out{manifest.label_set, std::move(features), {}};
  out.entries.reserve(slots.size());
  for (auto& s : slots) out.entries.push_back(std::move(*s));
  return out;
}

// ---- synth ----------------------------------------------------------------

struct SynthArgs {
  fs::path out;
  int subjects = 8;
  int reps = 4;
  std::uint64_t seed = 1;
  double noise = 0.01;
  double duration = 5.0;
  double fps = 120.0;
  double variability = 0.08;
  int decimals = 6;
  bool exact = false;
  unsigned threads = 1;
};

int run_synth(const SynthArgs& a) {
  GaitParams params = GaitParams::defaults();
  params.seed = a.seed;
  params.duration = a.duration;
  params.fps = a.fps;
  params.subject_variability = a.variability;
  try {
    params.set_noise(a.noise);
    params.validate();
  } catch (const Error& e) {
    throw UsageError(e.what());
  }
  if (a.subjects < 2) throw UsageError("--subjects must be >= 2");
  if (a.reps < 1) throw UsageError("--reps must be >= 1");

  fs::create_directories(a.out);
  std::vector<std::tuple<int, std::string, int>> jobs;
  for (int s = 0; s < a.subjects; ++s) {
    for (const auto& label : params.labels.labels()) {
      for (int r = 0; r < a.reps; ++r) jobs.emplace_back(s, label, r);
    }
  }
  log("writing " + std::to_string(jobs.size()) + " sequences to " + a.out.string());

  io::DatasetManifest manifest;
  manifest.label_set = params.labels;
  manifest.torso_joints = default_torso_joints();
  manifest.base_dir = a.out;
  manifest.entries.resize(jobs.size());
  const std::optional<int> decimals =
      a.exact ? std::nullopt : std::optional<int>(a.decimals);
  parallel_for(jobs.size(), a.threads, [&](std::size_t i) {
    const auto& [s, label, r] = jobs[i];
    const SkeletonSequence seq = generate_sequence(params, s, label, r);
    const std::string file = seq.source_id() + ".csv";
    io::save_sequence(seq, a.out / file, decimals);
    manifest.entries[i] = {file, seq.subject_id(), label, params.fps, params.n_joints};
  });
  const fs::path manifest_path = a.out / "manifest.json";
  io::save_manifest(manifest, manifest_path);
  std::cout << manifest_path.string() << '\n';
  return 0;
}

// ---- extract --------------------------------------------------------------

int run_extract(const fs::path& manifest, const fs::path& out, const DescribeOptions& o) {
  check_window(o);
  const io::DescriptorSet set = describe_manifest(manifest, o);
  io::save_descriptors(set, out);
  log("wrote " + std::to_string(set.entries.size()) + " descriptors to " + out.string());
  return 0;
}

// ---- train ----------------------------------------------------------------

int run_train(const std::optional<fs::path>& manifest,
              const std::optional<fs::path>& descriptors, const fs::path& out,
              Metric metric, const DescribeOptions& o) {
  check_window(o);
  const io::DescriptorSet set =
      manifest ? describe_manifest(*manifest, o) : io::load_descriptors(*descriptors);
  if (set.entries.empty()) throw Error(ErrorKind::EmptyInput, "no training descriptors");

  std::vector<std::optional<SymMatrix>> logs(set.entries.size());
  parallel_for(set.entries.size(), o.threads, [&](std::size_t i) {
    logs[i].emplace(spd_log(set.entries[i].descriptor.covariance));
  });
  std::vector<const SymMatrix*> ptrs;
  std::vector<std::string> labels;
  for (std::size_t i = 0; i < logs.size(); ++i) {
    ptrs.push_back(&*logs[i]);
    labels.push_back(set.entries[i].label);
  }
  io::Model model{build_prototypes_from_logs(ptrs, labels, metric), set.labels, set.features};
  for (const auto& label : set.labels.labels()) {
    if (!model.prototypes.prototypes().count(label)) {
      log("warning: no training sequences for '" + label + "'");
    }
  }
  io::save_model(model, out);
  log("wrote model with " + std::to_string(model.prototypes.prototypes().size()) +
      " prototypes to " + out.string());
  return 0;
}

// ---- classify -------------------------------------------------------------

int run_classify(const fs::path& model_path, const std::optional<fs::path>& sequence,
                 const std::optional<fs::path>& manifest_path, double fps,
                 const std::optional<std::string>& metric_name, DescribeOptions o) {
  check_window(o);
  const io::Model model = io::load_model(model_path);
  const Metric metric = metric_name ? parse_metric(*metric_name) : model.prototypes.metric();
  io::FeatureConfig features = model.features;
  if (o.epsilon || std::getenv("EMOCOV_EPSILON")) features.epsilon = resolve_epsilon(o.epsilon);

  if (sequence) {
    const SkeletonSequence seq = io::load_sequence(*sequence, fps, features.n_joints);
    const Prediction p = classify_prototype(describe(seq, features, o).covariance,
                                            model.prototypes, metric);
    for (const auto& r : p.ranking) {
      log(r.label + " at distance " + std::to_string(r.distance));
    }
    std::cout << seq.source_id() << '\t' << p.label << '\n';
    return 0;
  }

  const io::DatasetManifest manifest = io::load_manifest(*manifest_path);
  if (manifest.n_joints() != features.n_joints) {
    throw Error(ErrorKind::JointCountMismatch,
                "manifest has " + std::to_string(manifest.n_joints()) +
                    " joints, model expects " + std::to_string(features.n_joints));
  }
  const std::vector<SkeletonSequence> seqs = io::load_dataset(manifest, o.threads);
  std::vector<std::string> predicted(seqs.size());
  parallel_for(seqs.size(), o.threads, [&](std::size_t i) {
    predicted[i] = classify_prototype(describe(seqs[i], features, o).covariance,
                                      model.prototypes, metric)
                       .label;
  });
  std::size_t correct = 0;
  for (std::size_t i = 0; i < seqs.size(); ++i) {
    const std::string& truth = manifest.entries[i].label;
    correct += truth == predicted[i];
    std::cout << seqs[i].source_id() << '\t' << truth << '\t' << predicted[i] << '\n';
  }
  log(std::to_string(correct) + "/" + std::to_string(seqs.size()) + " correct");
  return 0;
}

// ---- crossval -------------------------------------------------------------

int run_crossval_cmd(const fs::path& manifest, const std::optional<fs::path>& out,
                     const ClassifierConfig& config, bool strict, const DescribeOptions& o) {
  check_window(o);
  const io::DescriptorSet set = describe_manifest(manifest, o);
  log("cross-validating (" + std::string(to_string(config.mode)) + ", " +
      std::string(to_string(config.metric)) + ")");
  const EvalReport report =
      run_crossval(set.entries, config, set.labels, RunOptions{o.threads, strict});
  std::cout << render_report(report);
  if (out) {
    io::save_report(report, *out);
    log("wrote report to " + out->string());
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Emotion classification from skeleton motion with covariance descriptors"};
  app.require_subcommand(1);
  app.fallthrough();
  app.add_flag("-q,--quiet", g_quiet, "Suppress progress messages");

  SynthArgs synth;
  auto* synth_cmd = app.add_subcommand("synth", "Generate a labeled synthetic gait dataset");
  synth_cmd->add_option("--out", synth.out, "Output directory")->required();
  synth_cmd->add_option("--subjects", synth.subjects, "Number of subjects");
  synth_cmd->add_option("--reps", synth.reps, "Repetitions per subject and label");
  synth_cmd->add_option("--seed", synth.seed, "Random seed");
  synth_cmd->add_option("--noise", synth.noise, "Marker noise sigma in meters");
  synth_cmd->add_option("--duration", synth.duration, "Seconds per sequence");
  synth_cmd->add_option("--fps", synth.fps, "Frames per second");
  synth_cmd->add_option("--variability", synth.variability, "Between-subject style spread");
  synth_cmd->add_option("--decimals", synth.decimals, "Decimals written per coordinate")
      ->check(CLI::Range(0, 17));
  synth_cmd->add_flag("--exact", synth.exact, "Write shortest round-trip values instead");
  synth_cmd->add_option("--parallel", synth.threads, "Worker threads")
      ->check(CLI::Range(1u, 256u));

  fs::path manifest;
  fs::path out;
  DescribeOptions extract_opts;
  auto* extract_cmd = app.add_subcommand("extract", "Compute covariance descriptors");
  extract_cmd->add_option("--manifest", manifest, "Dataset manifest")->required();
  extract_cmd->add_option("--out", out, "Descriptor file to write")->required();
  add_describe_options(extract_cmd, extract_opts);

  std::optional<fs::path> train_manifest;
  std::optional<fs::path> train_descriptors;
  std::string train_metric = "lerm";
  DescribeOptions train_opts;
  auto* train_cmd = app.add_subcommand("train", "Build one prototype per label");
  auto* tm = train_cmd->add_option("--manifest", train_manifest, "Dataset manifest");
  auto* td = train_cmd->add_option("--descriptors", train_descriptors, "Descriptor file");
  tm->excludes(td);
  train_cmd->add_option("--out", out, "Model file to write")->required();
  train_cmd->add_option("--metric", train_metric, "lerm or frobenius")
      ->check(CLI::IsMember({"lerm", "frobenius"}));
  add_describe_options(train_cmd, train_opts);

  fs::path model_path;
  std::optional<fs::path> sequence;
  std::optional<fs::path> classify_manifest;
  std::optional<std::string> classify_metric;
  double fps = 120.0;
  DescribeOptions classify_opts;
  auto* classify_cmd = app.add_subcommand("classify", "Label sequences with a trained model");
  classify_cmd->add_option("--model", model_path, "Model file")->required();
  auto* cs = classify_cmd->add_option("--sequence", sequence, "Frame file (.csv)");
  auto* cm = classify_cmd->add_option("--manifest", classify_manifest, "Dataset manifest");
  cs->excludes(cm);
  classify_cmd->add_option("--fps", fps, "Frame rate of --sequence");
  classify_cmd->add_option("--metric", classify_metric, "Override the model's metric")
      ->check(CLI::IsMember({"lerm", "frobenius"}));
  add_describe_options(classify_cmd, classify_opts);

  std::optional<fs::path> report_out;
  std::string mode_name = "prototype";
  std::string cv_metric = "lerm";
  int k = 1;
  bool strict = false;
  DescribeOptions cv_opts;
  auto* cv_cmd = app.add_subcommand("crossval", "Leave-one-subject-out evaluation");
  cv_cmd->add_option("--manifest", manifest, "Dataset manifest")->required();
  cv_cmd->add_option("--out", report_out, "Report file to write");
  cv_cmd->add_option("--mode", mode_name, "prototype or knn")
      ->check(CLI::IsMember({"prototype", "knn"}));
  cv_cmd->add_option("--metric", cv_metric, "lerm or frobenius")
      ->check(CLI::IsMember({"lerm", "frobenius"}));
  auto* k_opt = cv_cmd->add_option("--k", k, "Neighbours for knn")->check(CLI::PositiveNumber);
  cv_cmd->add_flag("--strict", strict, "Fail when a fold lacks training data for a label");
  add_describe_options(cv_cmd, cv_opts);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : kExitUsage;
  }

  try {
    if (*synth_cmd) return run_synth(synth);
    if (*extract_cmd) return run_extract(manifest, out, extract_opts);
    if (*train_cmd) {
      if (!train_manifest && !train_descriptors) {
        throw UsageError("train needs --manifest or --descriptors");
      }
      return run_train(train_manifest, train_descriptors, out, parse_metric(train_metric),
                       train_opts);
    }
    if (*classify_cmd) {
      if (!sequence && !classify_manifest) {
        throw UsageError("classify needs --sequence or --manifest");
      }
      return run_classify(model_path, sequence, classify_manifest, fps, classify_metric,
                          classify_opts);
    }
    if (*cv_cmd) {
      const Mode mode = parse_mode(mode_name);
      if (mode == Mode::prototype && k_opt->count() > 0) {
        throw UsageError("--k only applies to --mode knn");
      }
      return run_crossval_cmd(manifest, report_out,
                              ClassifierConfig{mode, parse_metric(cv_metric), k}, strict,
                              cv_opts);
    }
  } catch (const UsageError& e) {
    std::cerr << "emocov: usage: " << e.what() << '\n';
    return kExitUsage;
  } catch (const Error& e) {
    std::cerr << "emocov: error: " << e.what() << '\n';
    return is_numeric(e.kind()) ? kExitNumeric : kExitData;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "emocov: error: Io: " << e.what() << '\n';
    return kExitData;
  }
  return kExitUsage;
}
