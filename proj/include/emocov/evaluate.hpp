#pragma once

// Leave-one-subject-out cross-validation and confusion-matrix reporting.

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "emocov/classify.hpp"

namespace emocov {

enum class Mode { prototype, knn };

std::string_view to_string(Mode mode);
Mode parse_mode(std::string_view name);

struct ClassifierConfig {
  Mode mode = Mode::prototype;
  Metric metric = Metric::lerm;
  int k = 1;  // knn only
};

struct Fold {
  std::string held_out_subject;
  std::vector<std::size_t> test_ids;
  std::vector<std::size_t> train_ids;
};

struct FoldPlan {
  std::vector<Fold> folds;
};

/// One fold per distinct subject, folds ordered by subject id. Throws
/// EmptyInput, InvalidParams (empty subject id) or SingleSubject.
FoldPlan plan_loso(std::span<const LabeledDescriptor> dataset);

using CountMatrix = Eigen::Matrix<std::int64_t, Eigen::Dynamic, Eigen::Dynamic>;

/// Rows are true labels, columns predicted labels, both in label-set order.
class ConfusionMatrix {
 public:
  explicit ConfusionMatrix(LabelSet labels);
  /// Throws InvalidParams for a wrongly sized or negative count matrix.
  ConfusionMatrix(LabelSet labels, CountMatrix counts);

  void add(std::string_view truth, std::string_view predicted);

  const LabelSet& labels() const { return labels_; }
  const CountMatrix& counts() const { return counts_; }
  std::int64_t total() const { return counts_.sum(); }
  std::int64_t row_total(std::size_t row) const;
  bool row_empty(std::size_t row) const { return row_total(row) == 0; }

  /// Row-normalized counts; empty rows are all zero (see row_empty()).
  Matrix rates() const;

  /// Unweighted mean of the diagonal rates over non-empty rows.
  double average_accuracy() const;
  std::map<std::string, double> per_class_accuracy() const;

  friend bool operator==(const ConfusionMatrix& a, const ConfusionMatrix& b) {
    return a.labels_ == b.labels_ && a.counts_ == b.counts_;
  }

 private:
  LabelSet labels_;
  CountMatrix counts_;
};

/// Unweighted (macro) mean of per-class accuracies. The one place the
/// averaging convention lives; average_accuracy() goes through it.
double macro_average(std::span<const double> per_class);

/// Pools raw counts across folds. Row-normalizing the pooled counts equals
/// weighting every fold's rates by its number of test samples per class.
/// Throws EmptyInput or LabelMismatch.
ConfusionMatrix aggregate_confusions(std::span<const ConfusionMatrix> per_fold);

struct PredictionRecord {
  std::size_t sample = 0;  // index into the dataset
  std::string source_id;
  std::string subject_id;
  std::string truth;
  std::string predicted;
};

ConfusionMatrix confusion_from_predictions(const LabelSet& labels,
                                           std::span<const PredictionRecord> records);

struct FoldResult {
  std::string held_out_subject;
  ConfusionMatrix confusion;
  /// Test labels with no training sample in this fold.
  std::vector<std::string> missing_labels;
};

struct EvalReport {
  ClassifierConfig config;
  LabelSet labels;
  std::vector<FoldResult> folds;
  ConfusionMatrix overall;
  double average_accuracy = 0.0;
  std::map<std::string, double> per_class_accuracy;
  std::vector<PredictionRecord> predictions;  // fold order, then test order
};

struct RunOptions {
  unsigned threads = 1;
  /// Raise MissingClassInTraining instead of flagging the fold.
  bool strict = false;
};

/// Leave-one-subject-out evaluation. Folds may run in parallel; the result is
/// the same for any thread count. Throws LabelMismatch for labels outside
/// `labels`, plus anything plan_loso() and the classifiers throw.
EvalReport run_crossval(std::span<const LabeledDescriptor> dataset,
                        const ClassifierConfig& config, const LabelSet& labels,
                        const RunOptions& options = {});

/// Percentages with two decimals, rows/columns in label order.
std::string render_table(const ConfusionMatrix& cm);
std::string render_report(const EvalReport& report);

}  // namespace emocov
