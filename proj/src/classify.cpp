#include "emocov/classify.hpp"

#include <algorithm>
#include <cctype>
#include <numeric>
#include <set>

#include "emocov/error.hpp"

namespace emocov {

std::string_view to_string(Metric metric) {
  return metric == Metric::lerm ? "lerm" : "frobenius";
}

Metric parse_metric(std::string_view name) {
  if (name == "lerm") return Metric::lerm;
  if (name == "frobenius") return Metric::frobenius;
  throw Error(ErrorKind::InvalidParams,
              "unknown metric '" + std::string(name) + "' (lerm|frobenius)");
}

LabelSet::LabelSet(std::vector<std::string> labels) : labels_(std::move(labels)) {
  if (labels_.empty()) throw Error(ErrorKind::InvalidParams, "empty label set");
  std::set<std::string> seen;
  for (const auto& l : labels_) {
    if (l.empty()) throw Error(ErrorKind::InvalidParams, "empty label name");
    if (!seen.insert(l).second) {
      throw Error(ErrorKind::InvalidParams, "duplicate label '" + l + "'");
    }
  }
}

LabelSet LabelSet::emotions() {
  return LabelSet({"anger", "fear", "joy", "neutral", "sadness"});
}

bool LabelSet::contains(std::string_view label) const {
  return std::find(labels_.begin(), labels_.end(), label) != labels_.end();
}

std::size_t LabelSet::index_of(std::string_view label) const {
  const auto it = std::find(labels_.begin(), labels_.end(), label);
  if (it == labels_.end()) {
    throw Error(ErrorKind::LabelMismatch,
                "label '" + std::string(label) + "' not in label set");
  }
  return static_cast<std::size_t>(it - labels_.begin());
}

std::string display_name(std::string_view label) {
  std::string out(label);
  if (!out.empty()) {
    out[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(out[0])));
  }
  return out;
}

SymMatrix embed(const SpdMatrix& c, Metric metric) {
  return metric == Metric::lerm ? spd_log(c) : c.sym();
}

PrototypeSet::PrototypeSet(std::map<std::string, SpdMatrix> prototypes,
                           Metric metric)
    : prototypes_(std::move(prototypes)), metric_(metric) {
  if (prototypes_.empty()) {
    throw Error(ErrorKind::EmptyInput, "prototype set has no labels");
  }
  const Index d = prototypes_.begin()->second.dim();
  for (const auto& [label, m] : prototypes_) {
    if (m.dim() != d) {
      throw Error(ErrorKind::DimensionMismatch,
                  "prototype '" + label + "' has dim " + std::to_string(m.dim()) +
                      ", expected " + std::to_string(d));
    }
    logs_.emplace(label, spd_log(m));
  }
}

const SymMatrix& PrototypeSet::embedding(const std::string& label,
                                         Metric metric) const {
  if (metric == Metric::lerm) return logs_.at(label);
  return prototypes_.at(label).sym();
}

PrototypeSet build_prototypes_from_logs(std::span<const SymMatrix* const> logs,
                                        std::span<const std::string> labels,
                                        Metric metric) {
  if (logs.empty()) throw Error(ErrorKind::EmptyInput, "no training descriptors");
  if (logs.size() != labels.size()) {
    throw Error(ErrorKind::DimensionMismatch, "one label per descriptor required");
  }
  std::map<std::string, std::vector<const SymMatrix*>> groups;
  for (std::size_t i = 0; i < logs.size(); ++i) {
    if (logs[i]->dim() != logs.front()->dim()) {
      throw Error(ErrorKind::DimensionMismatch,
                  "training descriptors differ in dimension");
    }
    groups[labels[i]].push_back(logs[i]);
  }
  std::map<std::string, SpdMatrix> pems;
  for (const auto& [label, group] : groups) {
    pems.emplace(label, spd_exp(mean_log(std::span<const SymMatrix* const>(group))));
  }
  return PrototypeSet(std::move(pems), metric);
}

PrototypeSet build_prototypes(std::span<const LabeledDescriptor> train,
                              Metric metric) {
  if (train.empty()) throw Error(ErrorKind::EmptyInput, "no training descriptors");
  std::vector<SymMatrix> logs;
  std::vector<const SymMatrix*> ptrs;
  std::vector<std::string> labels;
  logs.reserve(train.size());
  labels.reserve(train.size());
  for (const auto& t : train) {
    if (t.descriptor.covariance.dim() != train.front().descriptor.covariance.dim()) {
      throw Error(ErrorKind::DimensionMismatch,
                  "training descriptors differ in dimension");
    }
    logs.push_back(spd_log(t.descriptor.covariance));
    labels.push_back(t.label);
  }
  for (const auto& l : logs) ptrs.push_back(&l);
  return build_prototypes_from_logs(ptrs, labels, metric);
}

Prediction classify_prototype_embedded(const SymMatrix& query,
                                       const PrototypeSet& pems, Metric metric) {
  if (query.dim() != pems.dim()) {
    throw Error(ErrorKind::DimensionMismatch,
                "descriptor dim " + std::to_string(query.dim()) +
                    " vs prototype dim " + std::to_string(pems.dim()));
  }
  Prediction out;
  for (const auto& [label, _] : pems.prototypes()) {
    out.ranking.push_back({label, sym_distance(query, pems.embedding(label, metric))});
  }
  std::stable_sort(out.ranking.begin(), out.ranking.end(),
                   [](const RankedLabel& a, const RankedLabel& b) {
                     if (a.distance != b.distance) return a.distance < b.distance;
                     return a.label < b.label;
                   });
  out.label = out.ranking.front().label;
  return out;
}

Prediction classify_prototype(const SpdMatrix& c, const PrototypeSet& pems,
                              Metric metric) {
  if (c.dim() != pems.dim()) {
    throw Error(ErrorKind::DimensionMismatch,
                "descriptor dim " + std::to_string(c.dim()) +
                    " vs prototype dim " + std::to_string(pems.dim()));
  }
  return classify_prototype_embedded(embed(c, metric), pems, metric);
}

std::string knn_vote(std::span<const double> distances,
                     std::span<const std::string> labels, int k) {
  if (distances.empty()) throw Error(ErrorKind::EmptyInput, "empty training set");
  if (distances.size() != labels.size()) {
    throw Error(ErrorKind::DimensionMismatch, "one label per descriptor required");
  }
  if (k < 1) throw Error(ErrorKind::InvalidParams, "k must be positive");
  if (static_cast<std::size_t>(k) > distances.size()) {
    throw Error(ErrorKind::KTooLarge,
                "k = " + std::to_string(k) + " exceeds training size " +
                    std::to_string(distances.size()));
  }
  std::vector<std::size_t> order(distances.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return distances[a] < distances[b];
  });

  std::map<std::string, int> votes;
  for (int i = 0; i < k; ++i) ++votes[labels[order[static_cast<std::size_t>(i)]]];
  // std::map iterates labels in lexicographic order, so max_element keeps the
  // smallest label among equal counts.
  return std::max_element(votes.begin(), votes.end(),
                          [](const auto& a, const auto& b) {
                            return a.second < b.second;
                          })
      ->first;
}

std::string classify_knn_embedded(const SymMatrix& query,
                                  std::span<const SymMatrix> train,
                                  std::span<const std::string> labels, int k) {
  std::vector<double> dist(train.size());
  for (std::size_t i = 0; i < train.size(); ++i) {
    dist[i] = sym_distance(query, train[i]);
  }
  return knn_vote(dist, labels, k);
}

std::string classify_knn(const SpdMatrix& c,
                         std::span<const LabeledDescriptor> train, int k,
                         Metric metric) {
  if (train.empty()) throw Error(ErrorKind::EmptyInput, "empty training set");
  std::vector<SymMatrix> embedded;
  std::vector<std::string> labels;
  embedded.reserve(train.size());
  labels.reserve(train.size());
  for (const auto& t : train) {
    if (t.descriptor.covariance.dim() != c.dim()) {
      throw Error(ErrorKind::DimensionMismatch,
                  "training descriptor '" + t.descriptor.source_id +
                      "' has a different dimension");
    }
    embedded.push_back(embed(t.descriptor.covariance, metric));
    labels.push_back(t.label);
  }
  return classify_knn_embedded(embed(c, metric), embedded, labels, k);
}

}  // namespace emocov
