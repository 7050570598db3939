#include "emocov/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "emocov/error.hpp"
#include "emocov/parallel.hpp"

namespace emocov::io {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

[[noreturn]] void parse_fail(const std::string& where, const std::string& what) {
  throw Error(ErrorKind::ParseError, where + ": " + what);
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Io, "cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::Io, "cannot write '" + path.string() + "'");
  out << text;
  if (!out) throw Error(ErrorKind::Io, "write failed for '" + path.string() + "'");
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
    s.remove_suffix(1);
  }
  return s;
}

// Whole-token double parse; accepts a leading '+'.
bool parse_double(std::string_view tok, double& out) {
  if (!tok.empty() && tok.front() == '+') tok.remove_prefix(1);
  if (tok.empty()) return false;
  const auto res = std::from_chars(tok.data(), tok.data() + tok.size(), out);
  return res.ec == std::errc() && res.ptr == tok.data() + tok.size();
}

void require_schema(const json& doc, std::string_view kind, const std::string& where) {
  if (!doc.is_object()) parse_fail(where, "expected a JSON object");
  if (!doc.contains("schema_version") || !doc["schema_version"].is_number_integer()) {
    parse_fail(where, "missing integer 'schema_version'");
  }
  const int v = doc["schema_version"].get<int>();
  if (v != kSchemaVersion) {
    throw Error(ErrorKind::SchemaVersionMismatch,
                where + ": schema_version " + std::to_string(v) + ", expected " +
                    std::to_string(kSchemaVersion));
  }
  if (doc.contains("kind") && doc["kind"] != kind) {
    parse_fail(where, "expected kind '" + std::string(kind) + "'");
  }
}

template <typename T>
T field(const json& obj, const char* key, const std::string& where) {
  if (!obj.is_object() || !obj.contains(key)) parse_fail(where, std::string("missing '") + key + "'");
  try {
    return obj.at(key).get<T>();
  } catch (const json::exception&) {
    parse_fail(where, std::string("bad value for '") + key + "'");
  }
}

json window_to_json(const Window& w) { return json::array({w.start, w.end}); }

Window window_from_json(const json& j, const std::string& where) {
  if (!j.is_array() || j.size() != 2 || !j[0].is_number_integer() ||
      !j[1].is_number_integer()) {
    parse_fail(where, "window must be [start, end]");
  }
  return {j[0].get<Index>(), j[1].get<Index>()};
}

json counts_to_json(const CountMatrix& c) {
  json rows = json::array();
  for (Index i = 0; i < c.rows(); ++i) {
    json row = json::array();
    for (Index j = 0; j < c.cols(); ++j) row.push_back(c(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

json rates_to_json(const Matrix& r) {
  json rows = json::array();
  for (Index i = 0; i < r.rows(); ++i) {
    json row = json::array();
    for (Index j = 0; j < r.cols(); ++j) row.push_back(r(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace

SkeletonSequence parse_sequence(std::string_view text, double fps, int n_joints,
                                const SequenceInfo& info) {
  const std::string& name = info.source_id.empty() ? std::string("<input>") : info.source_id;
  if (n_joints <= 0) throw Error(ErrorKind::InvalidParams, "n_joints must be positive");
  const auto width = static_cast<std::size_t>(3 * n_joints);

  std::vector<double> values;
  std::size_t rows = 0;
  std::size_t line_no = 0;
  std::vector<double> row;
  row.reserve(width);
  bool first_content_line = true;

  while (!text.empty()) {
    const std::size_t nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    ++line_no;
    if (trim(line).empty()) continue;

    row.clear();
    std::size_t pos = 0;
    bool header = false;
    while (true) {
      const std::size_t comma = line.find(',', pos);
      const std::string_view raw = line.substr(pos, comma == std::string_view::npos
                                                        ? std::string_view::npos
                                                        : comma - pos);
      const std::string_view tok = trim(raw);
      const std::size_t column = pos + 1 + static_cast<std::size_t>(tok.data() - raw.data());
      double v = 0.0;
      if (!parse_double(tok, v)) {
        if (first_content_line && row.empty()) {
          header = true;
          break;
        }
        parse_fail(name + " line " + std::to_string(line_no) + " column " +
                       std::to_string(column),
                   "not a number: '" + std::string(tok) + "'");
      }
      if (!std::isfinite(v)) {
        throw Error(ErrorKind::NonFiniteValue,
                    name + " line " + std::to_string(line_no) + " column " +
                        std::to_string(column) + ": '" + std::string(tok) + "'");
      }
      row.push_back(v);
      if (comma == std::string_view::npos) break;
      pos = comma + 1;
    }
    first_content_line = false;
    if (header) continue;
    if (row.size() != width) {
      throw Error(ErrorKind::JointCountMismatch,
                  name + " line " + std::to_string(line_no) + ": expected " +
                      std::to_string(width) + " values (" + std::to_string(n_joints) +
                      " joints), got " + std::to_string(row.size()));
    }
    values.insert(values.end(), row.begin(), row.end());
    ++rows;
  }

  Matrix frames(static_cast<Index>(rows), static_cast<Index>(width));
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < width; ++c) {
      frames(static_cast<Index>(r), static_cast<Index>(c)) = values[r * width + c];
    }
  }
  return SkeletonSequence(n_joints, fps, std::move(frames), info.source_id,
                          info.subject_id, info.label);
}

SkeletonSequence load_sequence(const fs::path& path, double fps, int n_joints,
                               SequenceInfo info) {
  if (info.source_id.empty()) info.source_id = path.stem().string();
  return parse_sequence(read_file(path), fps, n_joints, info);
}

std::string format_sequence(const SkeletonSequence& seq, std::optional<int> decimals) {
  std::string out;
  for (int j = 0; j < seq.n_joints(); ++j) {
    if (j) out += ',';
    const std::string p = "j" + std::to_string(j) + "_";
    out += p + "x," + p + "y," + p + "z";
  }
  out += '\n';
  char buf[64];
  const Matrix& f = seq.frames();
  for (Index r = 0; r < f.rows(); ++r) {
    for (Index c = 0; c < f.cols(); ++c) {
      if (c) out += ',';
      const auto res = decimals
                           ? std::to_chars(buf, buf + sizeof buf, f(r, c),
                                           std::chars_format::fixed, *decimals)
                           : std::to_chars(buf, buf + sizeof buf, f(r, c));
      out.append(buf, res.ptr);
    }
    out += '\n';
  }
  return out;
}

void save_sequence(const SkeletonSequence& seq, const fs::path& path,
                   std::optional<int> decimals) {
  write_file(path, format_sequence(seq, decimals));
}

fs::path DatasetManifest::resolve(const ManifestEntry& e) const {
  const fs::path p(e.path);
  return p.is_absolute() ? p : base_dir / p;
}

DatasetManifest parse_manifest(const json& doc, const fs::path& base_dir) {
  const std::string where = "manifest";
  require_schema(doc, "manifest", where);

  DatasetManifest m;
  m.base_dir = base_dir;
  try {
    m.label_set = doc.contains("label_set")
                      ? LabelSet(field<std::vector<std::string>>(doc, "label_set", where))
                      : LabelSet::emotions();
  } catch (const Error& e) {
    parse_fail(where, std::string("label_set: ") + e.what());
  }
  m.torso_joints = field<std::vector<int>>(doc, "torso_joints", where);
  if (m.torso_joints.empty()) parse_fail(where, "torso_joints is empty");

  if (!doc.contains("entries") || !doc["entries"].is_array()) {
    parse_fail(where, "missing 'entries' array");
  }
  const json& entries = doc["entries"];
  for (std::size_t i = 0; i < entries.size(); ++i) {
    const std::string at = where + " entry " + std::to_string(i);
    const json& e = entries[i];
    ManifestEntry me{field<std::string>(e, "path", at), field<std::string>(e, "subject_id", at),
                     field<std::string>(e, "label", at), field<double>(e, "fps", at),
                     field<int>(e, "n_joints", at)};
    if (!m.label_set.contains(me.label)) {
      parse_fail(at + " (" + me.path + ")", "unknown label '" + me.label + "'");
    }
    if (me.subject_id.empty()) parse_fail(at, "empty subject_id");
    if (!(me.fps > 0.0)) parse_fail(at, "fps must be positive");
    if (me.n_joints <= 0) parse_fail(at, "n_joints must be positive");
    if (!m.entries.empty() && me.n_joints != m.entries.front().n_joints) {
      parse_fail(at, "n_joints " + std::to_string(me.n_joints) + " differs from entry 0");
    }
    m.entries.push_back(std::move(me));
    if (!fs::exists(m.resolve(m.entries.back()))) {
      parse_fail(at, "file not found: " + m.resolve(m.entries.back()).string());
    }
  }
  if (m.entries.empty()) parse_fail(where, "no entries");
  for (int j : m.torso_joints) {
    if (j < 0 || j >= m.n_joints()) {
      parse_fail(where, "torso joint " + std::to_string(j) + " out of range");
    }
  }
  return m;
}

DatasetManifest load_manifest(const fs::path& path) {
  return parse_manifest(read_json(path), path.parent_path());
}

json manifest_to_json(const DatasetManifest& m) {
  json entries = json::array();
  for (const auto& e : m.entries) {
    entries.push_back({{"path", e.path},
                       {"subject_id", e.subject_id},
                       {"label", e.label},
                       {"fps", e.fps},
                       {"n_joints", e.n_joints}});
  }
  return {{"schema_version", kSchemaVersion},
          {"kind", "manifest"},
          {"label_set", m.label_set.labels()},
          {"torso_joints", m.torso_joints},
          {"entries", std::move(entries)}};
}

void save_manifest(const DatasetManifest& m, const fs::path& path) {
  write_json(manifest_to_json(m), path);
}

std::vector<SkeletonSequence> load_dataset(const DatasetManifest& m, unsigned threads) {
  std::vector<std::optional<SkeletonSequence>> slots(m.entries.size());
  parallel_for(m.entries.size(), threads, [&](std::size_t i) {
    const ManifestEntry& e = m.entries[i];
    const fs::path p = m.resolve(e);
    slots[i].emplace(load_sequence(p, e.fps, e.n_joints,
                                   {p.stem().string(), e.subject_id, e.label}));
  });
  std::vector<SkeletonSequence> out;
  out.reserve(slots.size());
  for (auto& s : slots) out.push_back(std::move(*s));
  return out;
}

json matrix_to_json(const SymMatrix& m) {
  json lower = json::array();
  for (Index i = 0; i < m.dim(); ++i) {
    for (Index j = 0; j <= i; ++j) lower.push_back(m(i, j));
  }
  return {{"dim", m.dim()}, {"lower", std::move(lower)}};
}

SymMatrix matrix_from_json(const json& j) {
  const std::string where = "matrix";
  const auto dim = field<Index>(j, "dim", where);
  if (dim < 1) parse_fail(where, "dim must be positive");
  const json& lower = j.at("lower");
  if (!lower.is_array() || lower.size() != static_cast<std::size_t>(dim * (dim + 1) / 2)) {
    parse_fail(where, "'lower' must hold dim·(dim+1)/2 numbers");
  }
  Matrix m(dim, dim);
  std::size_t k = 0;
  for (Index r = 0; r < dim; ++r) {
    for (Index c = 0; c <= r; ++c, ++k) {
      if (!lower[k].is_number()) parse_fail(where, "non-numeric entry " + std::to_string(k));
      m(r, c) = lower[k].get<double>();
    }
  }
  return SymMatrix(m);
}

namespace {

json features_to_json(const FeatureConfig& f) {
  json out = {{"n_joints", f.n_joints}, {"torso_joints", f.torso_joints}, {"epsilon", nullptr}};
  if (f.epsilon) out["epsilon"] = *f.epsilon;
  return out;
}

FeatureConfig features_from_json(const json& doc, const std::string& where) {
  const json& f = doc.contains("features") ? doc["features"] : json::object();
  FeatureConfig features{field<int>(f, "n_joints", where + " features"),
                         field<std::vector<int>>(f, "torso_joints", where + " features"),
                         std::nullopt};
  if (f.contains("epsilon") && !f["epsilon"].is_null()) {
    features.epsilon = field<double>(f, "epsilon", where + " features");
  }
  return features;
}

LabelSet labels_from_json(const json& doc, const std::string& where) {
  try {
    return LabelSet(field<std::vector<std::string>>(doc, "labels", where));
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::ParseError) throw;
    parse_fail(where, e.what());
  }
}

}  // namespace

json model_to_json(const Model& model) {
  json protos = json::array();
  for (const auto& [label, m] : model.prototypes.prototypes()) {
    protos.push_back({{"label", label}, {"matrix", matrix_to_json(m.sym())}});
  }
  return {{"schema_version", kSchemaVersion},
          {"kind", "prototype_model"},
          {"metric", std::string(to_string(model.prototypes.metric()))},
          {"labels", model.labels.labels()},
          {"dim", model.prototypes.dim()},
          {"features", features_to_json(model.features)},
          {"prototypes", std::move(protos)}};
}

Model model_from_json(const json& doc) {
  const std::string where = "model";
  require_schema(doc, "prototype_model", where);
  Metric metric = Metric::lerm;
  try {
    metric = parse_metric(field<std::string>(doc, "metric", where));
  } catch (const Error& e) {
    parse_fail(where, e.what());
  }
  LabelSet labels = labels_from_json(doc, where);
  FeatureConfig features = features_from_json(doc, where);

  if (!doc.contains("prototypes") || !doc["prototypes"].is_array() || doc["prototypes"].empty()) {
    parse_fail(where, "missing 'prototypes'");
  }
  std::map<std::string, SpdMatrix> pems;
  for (const json& p : doc["prototypes"]) {
    const auto label = field<std::string>(p, "label", where);
    if (!labels.contains(label)) parse_fail(where, "prototype label '" + label + "' not in labels");
    if (!p.contains("matrix")) parse_fail(where, "prototype '" + label + "' has no matrix");
    if (!pems.emplace(label, SpdMatrix(matrix_from_json(p["matrix"]))).second) {
      parse_fail(where, "duplicate prototype '" + label + "'");
    }
  }
  return Model{PrototypeSet(std::move(pems), metric), std::move(labels), std::move(features)};
}

void save_model(const Model& model, const fs::path& path) {
  write_json(model_to_json(model), path);
}

Model load_model(const fs::path& path) { return model_from_json(read_json(path)); }

json descriptors_to_json(const DescriptorSet& set) {
  json entries = json::array();
  for (const auto& d : set.entries) {
    entries.push_back({{"source_id", d.descriptor.source_id},
                       {"subject_id", d.subject_id},
                       {"label", d.label},
                       {"window", window_to_json(d.descriptor.window)},
                       {"matrix", matrix_to_json(d.descriptor.covariance.sym())}});
  }
  return {{"schema_version", kSchemaVersion},
          {"kind", "descriptor_set"},
          {"labels", set.labels.labels()},
          {"features", features_to_json(set.features)},
          {"entries", std::move(entries)}};
}

DescriptorSet descriptors_from_json(const json& doc) {
  const std::string where = "descriptors";
  require_schema(doc, "descriptor_set", where);
  DescriptorSet out{labels_from_json(doc, where), features_from_json(doc, where), {}};
  if (!doc.contains("entries") || !doc["entries"].is_array()) {
    parse_fail(where, "missing 'entries' array");
  }
  std::size_t i = 0;
  for (const json& e : doc["entries"]) {
    const std::string at = where + " entry " + std::to_string(i++);
    if (!e.contains("matrix") || !e.contains("window")) parse_fail(at, "missing matrix/window");
    auto label = field<std::string>(e, "label", at);
    if (!out.labels.contains(label)) parse_fail(at, "unknown label '" + label + "'");
    out.entries.push_back(LabeledDescriptor{
        MotionDescriptor{SpdMatrix(matrix_from_json(e["matrix"])),
                         field<std::string>(e, "source_id", at),
                         window_from_json(e["window"], at)},
        std::move(label), field<std::string>(e, "subject_id", at)});
  }
  return out;
}

void save_descriptors(const DescriptorSet& set, const fs::path& path) {
  write_json(descriptors_to_json(set), path);
}

DescriptorSet load_descriptors(const fs::path& path) {
  return descriptors_from_json(read_json(path));
}

json report_to_json(const EvalReport& report) {
  json config = {{"mode", std::string(to_string(report.config.mode))},
                 {"metric", std::string(to_string(report.config.metric))}};
  if (report.config.mode == Mode::knn) config["k"] = report.config.k;

  json folds = json::array();
  for (const auto& f : report.folds) {
    folds.push_back({{"held_out_subject", f.held_out_subject},
                     {"n_test", f.confusion.total()},
                     {"counts", counts_to_json(f.confusion.counts())},
                     {"average_accuracy", f.confusion.average_accuracy()},
                     {"missing_labels", f.missing_labels}});
  }
  json predictions = json::array();
  for (const auto& p : report.predictions) {
    predictions.push_back({{"source_id", p.source_id},
                           {"subject_id", p.subject_id},
                           {"truth", p.truth},
                           {"predicted", p.predicted}});
  }
  json per_class = json::object();
  for (const auto& [label, acc] : report.per_class_accuracy) per_class[label] = acc;

  return {{"schema_version", kSchemaVersion},
          {"kind", "crossval_report"},
          {"config", std::move(config)},
          {"labels", report.labels.labels()},
          {"average_accuracy", report.average_accuracy},
          {"per_class_accuracy", std::move(per_class)},
          {"overall",
           {{"counts", counts_to_json(report.overall.counts())},
            {"rates", rates_to_json(report.overall.rates())}}},
          {"folds", std::move(folds)},
          {"predictions", std::move(predictions)}};
}

void save_report(const EvalReport& report, const fs::path& path) {
  write_json(report_to_json(report), path);
}

json read_json(const fs::path& path) {
  const std::string text = read_file(path);
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    parse_fail(path.string() + " byte " + std::to_string(e.byte), "invalid JSON");
  }
}

void write_json(const json& doc, const fs::path& path) {
  write_file(path, doc.dump(2) + "\n");
}

}  // namespace emocov::io
