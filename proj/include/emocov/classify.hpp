#pragma once

// Prototype (per-class log-Euclidean mean) and k-NN classifiers over
// covariance descriptors.

#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "emocov/motion.hpp"
#include "emocov/spd.hpp"

namespace emocov {

enum class Metric { lerm, frobenius };

std::string_view to_string(Metric metric);
/// Throws InvalidParams for anything other than "lerm" / "frobenius".
Metric parse_metric(std::string_view name);

/// Closed, ordered set of class labels for one experiment.
class LabelSet {
 public:
  /// Throws InvalidParams if empty or if a label repeats.
  explicit LabelSet(std::vector<std::string> labels);

  /// anger, fear, joy, neutral, sadness
  static LabelSet emotions();

  const std::vector<std::string>& labels() const { return labels_; }
  std::size_t size() const { return labels_.size(); }
  bool contains(std::string_view label) const;
  /// Throws LabelMismatch for a label outside the set.
  std::size_t index_of(std::string_view label) const;

  friend bool operator==(const LabelSet&, const LabelSet&) = default;

 private:
  std::vector<std::string> labels_;
};

/// "anger" -> "Anger"
std::string display_name(std::string_view label);

struct LabeledDescriptor {
  MotionDescriptor descriptor;
  std::string label;
  std::string subject_id;
};

/// The point a metric actually compares: log(C) under LERM, C itself under
/// Frobenius. Either way the distance is ‖embed(a) − embed(b)‖_F.
SymMatrix embed(const SpdMatrix& c, Metric metric);

/// One prototype matrix per label, all of one dimension. Immutable; matrix
/// logs are computed once on construction.
class PrototypeSet {
 public:
  PrototypeSet(std::map<std::string, SpdMatrix> prototypes, Metric metric);

  const std::map<std::string, SpdMatrix>& prototypes() const { return prototypes_; }
  Metric metric() const { return metric_; }
  Index dim() const { return prototypes_.begin()->second.dim(); }
  const SymMatrix& embedding(const std::string& label, Metric metric) const;

 private:
  std::map<std::string, SpdMatrix> prototypes_;
  std::map<std::string, SymMatrix> logs_;
  Metric metric_;
};

struct RankedLabel {
  std::string label;
  double distance = 0.0;

  friend bool operator==(const RankedLabel&, const RankedLabel&) = default;
};

struct Prediction {
  std::string label;
  std::vector<RankedLabel> ranking;  // ascending distance, ties by label
};

/// Per label, the log-Euclidean mean of that label's descriptors. `metric`
/// is recorded as the distance the set is meant to be queried with.
PrototypeSet build_prototypes(std::span<const LabeledDescriptor> train,
                              Metric metric = Metric::lerm);

/// Same, from precomputed matrix logs (logs[i] pairs with labels[i]).
PrototypeSet build_prototypes_from_logs(std::span<const SymMatrix* const> logs,
                                        std::span<const std::string> labels,
                                        Metric metric = Metric::lerm);

Prediction classify_prototype(const SpdMatrix& c, const PrototypeSet& pems,
                              Metric metric);
/// `query` must already be embed(c, metric).
Prediction classify_prototype_embedded(const SymMatrix& query,
                                       const PrototypeSet& pems, Metric metric);

/// Majority label among the k nearest training descriptors. Equal distances
/// keep training order; a tied vote goes to the lexicographically smallest
/// label. Throws EmptyInput, KTooLarge, InvalidParams (k < 1).
std::string classify_knn(const SpdMatrix& c,
                         std::span<const LabeledDescriptor> train, int k,
                         Metric metric);
/// The voting step on precomputed distances (distances[i] to sample i).
std::string knn_vote(std::span<const double> distances,
                     std::span<const std::string> labels, int k);
std::string classify_knn_embedded(const SymMatrix& query,
                                  std::span<const SymMatrix> train,
                                  std::span<const std::string> labels, int k);

}  // namespace emocov
