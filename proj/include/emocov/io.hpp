#pragma once

// File formats.
//
//   frames (.csv)   one frame per line, x,y,z per joint, comma separated;
//                   an optional non-numeric header line.
//   manifest        JSON: label set, torso joints, one entry per sequence.
//   model           JSON: prototype matrices (packed lower triangle, full
//                   double precision) plus the feature settings used to
//                   build them.
//   descriptors     JSON: labeled covariance descriptors.
//   report          JSON: cross-validation confusion matrices and predictions.
//
// All JSON documents carry "schema_version"; readers reject other versions.

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "emocov/classify.hpp"
#include "emocov/evaluate.hpp"
#include "emocov/motion.hpp"

namespace emocov::io {

inline constexpr int kSchemaVersion = 1;

struct SequenceInfo {
  std::string source_id;
  std::string subject_id;
  std::optional<std::string> label;
};

/// Parses frame text. Errors name the source and line (and column for bad
/// tokens): ParseError, JointCountMismatch, NonFiniteValue, TooFewFrames.
SkeletonSequence parse_sequence(std::string_view text, double fps, int n_joints,
                                const SequenceInfo& info = {});

/// source_id defaults to the file stem. Throws Io if the file is unreadable.
SkeletonSequence load_sequence(const std::filesystem::path& path, double fps,
                               int n_joints, SequenceInfo info = {});

/// Without `decimals` every value is written in shortest round-trip form, so
/// loading gives back identical doubles; with it, fixed-point at that many
/// decimals.
std::string format_sequence(const SkeletonSequence& seq,
                            std::optional<int> decimals = std::nullopt);
void save_sequence(const SkeletonSequence& seq, const std::filesystem::path& path,
                   std::optional<int> decimals = std::nullopt);

struct ManifestEntry {
  std::string path;  // relative to the manifest's directory unless absolute
  std::string subject_id;
  std::string label;
  double fps = 0.0;
  int n_joints = 0;
};

struct DatasetManifest {
  LabelSet label_set = LabelSet::emotions();
  std::vector<int> torso_joints;
  std::vector<ManifestEntry> entries;
  std::filesystem::path base_dir;

  int n_joints() const { return entries.empty() ? 0 : entries.front().n_joints; }
  std::filesystem::path resolve(const ManifestEntry& e) const;
};

/// Throws ParseError (citing the entry index) for unknown labels, mixed
/// joint counts, bad torso indices, or missing files; SchemaVersionMismatch.
DatasetManifest parse_manifest(const nlohmann::json& doc,
                               const std::filesystem::path& base_dir);
DatasetManifest load_manifest(const std::filesystem::path& path);
nlohmann::json manifest_to_json(const DatasetManifest& manifest);
void save_manifest(const DatasetManifest& manifest, const std::filesystem::path& path);

/// Loads every entry in manifest order, on up to `threads` workers.
std::vector<SkeletonSequence> load_dataset(const DatasetManifest& manifest,
                                           unsigned threads = 1);

/// Settings a model needs to turn a raw sequence into a comparable descriptor.
struct FeatureConfig {
  int n_joints = 0;
  std::vector<int> torso_joints;
  std::optional<double> epsilon;  // unset: scale-aware default
};

struct Model {
  PrototypeSet prototypes;
  LabelSet labels;
  FeatureConfig features;
};

nlohmann::json matrix_to_json(const SymMatrix& m);
/// Throws ParseError for malformed arrays.
SymMatrix matrix_from_json(const nlohmann::json& j);

nlohmann::json model_to_json(const Model& model);
Model model_from_json(const nlohmann::json& doc);
void save_model(const Model& model, const std::filesystem::path& path);
Model load_model(const std::filesystem::path& path);

/// Descriptors plus the settings that produced them, so a model trained from
/// them can still describe new sequences.
struct DescriptorSet {
  LabelSet labels;
  FeatureConfig features;
  std::vector<LabeledDescriptor> entries;
};

nlohmann::json descriptors_to_json(const DescriptorSet& set);
/// Throws ParseError (citing the entry) for labels outside the set.
DescriptorSet descriptors_from_json(const nlohmann::json& doc);
void save_descriptors(const DescriptorSet& set, const std::filesystem::path& path);
DescriptorSet load_descriptors(const std::filesystem::path& path);

nlohmann::json report_to_json(const EvalReport& report);
void save_report(const EvalReport& report, const std::filesystem::path& path);

/// Reads a JSON file; ParseError carries the byte offset.
nlohmann::json read_json(const std::filesystem::path& path);
/// Writes `doc` with two-space indentation and a trailing newline.
void write_json(const nlohmann::json& doc, const std::filesystem::path& path);

}  // namespace emocov::io
