#include "emocov/evaluate.hpp"

#include <algorithm>
#include <cstdio>
#include <numeric>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>

#include "emocov/error.hpp"
#include "emocov/parallel.hpp"

namespace emocov {

std::string_view to_string(Mode mode) {
  return mode == Mode::prototype ? "prototype" : "knn";
}

Mode parse_mode(std::string_view name) {
  if (name == "prototype") return Mode::prototype;
  if (name == "knn") return Mode::knn;
  throw Error(ErrorKind::InvalidParams,
              "unknown mode '" + std::string(name) + "' (prototype|knn)");
}

FoldPlan plan_loso(std::span<const LabeledDescriptor> dataset) {
  if (dataset.empty()) throw Error(ErrorKind::EmptyInput, "empty dataset");
  std::map<std::string, std::vector<std::size_t>> by_subject;
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    if (dataset[i].subject_id.empty()) {
      throw Error(ErrorKind::InvalidParams,
                  "sample '" + dataset[i].descriptor.source_id +
                      "' has no subject id");
    }
    by_subject[dataset[i].subject_id].push_back(i);
  }
  if (by_subject.size() < 2) {
    throw Error(ErrorKind::SingleSubject,
                "leave-one-subject-out needs at least 2 subjects");
  }
  FoldPlan plan;
  for (const auto& [subject, test] : by_subject) {
    Fold fold{subject, test, {}};
    for (std::size_t i = 0; i < dataset.size(); ++i) {
      if (dataset[i].subject_id != subject) fold.train_ids.push_back(i);
    }
    plan.folds.push_back(std::move(fold));
  }
  return plan;
}

ConfusionMatrix::ConfusionMatrix(LabelSet labels)
    : labels_(std::move(labels)),
      counts_(CountMatrix::Zero(static_cast<Index>(labels_.size()),
                                static_cast<Index>(labels_.size()))) {}

ConfusionMatrix::ConfusionMatrix(LabelSet labels, CountMatrix counts)
    : labels_(std::move(labels)), counts_(std::move(counts)) {
  const auto e = static_cast<Index>(labels_.size());
  if (counts_.rows() != e || counts_.cols() != e) {
    throw Error(ErrorKind::InvalidParams, "count matrix does not match label set");
  }
  if ((counts_.array() < 0).any()) {
    throw Error(ErrorKind::InvalidParams, "negative confusion count");
  }
}

void ConfusionMatrix::add(std::string_view truth, std::string_view predicted) {
  ++counts_(static_cast<Index>(labels_.index_of(truth)),
            static_cast<Index>(labels_.index_of(predicted)));
}

std::int64_t ConfusionMatrix::row_total(std::size_t row) const {
  return counts_.row(static_cast<Index>(row)).sum();
}

Matrix ConfusionMatrix::rates() const {
  Matrix r = Matrix::Zero(counts_.rows(), counts_.cols());
  for (Index i = 0; i < counts_.rows(); ++i) {
    const auto total = counts_.row(i).sum();
    if (total == 0) continue;
    for (Index j = 0; j < counts_.cols(); ++j) {
      r(i, j) = static_cast<double>(counts_(i, j)) / static_cast<double>(total);
    }
  }
  return r;
}

double ConfusionMatrix::average_accuracy() const {
  std::vector<double> diag;
  const Matrix r = rates();
  for (Index i = 0; i < r.rows(); ++i) {
    if (!row_empty(static_cast<std::size_t>(i))) diag.push_back(r(i, i));
  }
  return diag.empty() ? 0.0 : macro_average(diag);
}

std::map<std::string, double> ConfusionMatrix::per_class_accuracy() const {
  std::map<std::string, double> out;
  const Matrix r = rates();
  for (std::size_t i = 0; i < labels_.size(); ++i) {
    if (!row_empty(i)) {
      out[labels_.labels()[i]] = r(static_cast<Index>(i), static_cast<Index>(i));
    }
  }
  return out;
}

double macro_average(std::span<const double> per_class) {
  if (per_class.empty()) throw Error(ErrorKind::EmptyInput, "no classes to average");
  return std::accumulate(per_class.begin(), per_class.end(), 0.0) /
         static_cast<double>(per_class.size());
}

ConfusionMatrix aggregate_confusions(std::span<const ConfusionMatrix> per_fold) {
  if (per_fold.empty()) throw Error(ErrorKind::EmptyInput, "no folds to aggregate");
  CountMatrix pooled = CountMatrix::Zero(per_fold.front().counts().rows(),
                                         per_fold.front().counts().cols());
  for (const auto& cm : per_fold) {
    if (!(cm.labels() == per_fold.front().labels())) {
      throw Error(ErrorKind::LabelMismatch, "folds use different label orders");
    }
    pooled += cm.counts();
  }
  return ConfusionMatrix(per_fold.front().labels(), std::move(pooled));
}

ConfusionMatrix confusion_from_predictions(const LabelSet& labels,
                                           std::span<const PredictionRecord> records) {
  ConfusionMatrix cm(labels);
  for (const auto& r : records) cm.add(r.truth, r.predicted);
  return cm;
}

EvalReport run_crossval(std::span<const LabeledDescriptor> dataset,
                        const ClassifierConfig& config, const LabelSet& labels,
                        const RunOptions& options) {
  for (const auto& d : dataset) {
    if (!labels.contains(d.label)) {
      throw Error(ErrorKind::LabelMismatch,
                  "sample '" + d.descriptor.source_id + "' has label '" + d.label +
                      "' outside the label set");
    }
  }
  if (config.mode == Mode::knn && config.k < 1) {
    throw Error(ErrorKind::InvalidParams, "k must be positive");
  }
  const FoldPlan plan = plan_loso(dataset);

  // Embeddings are computed once for the whole dataset and shared by folds.
  const std::size_t n = dataset.size();
  const bool need_logs = config.mode == Mode::prototype || config.metric == Metric::lerm;
  std::vector<SymMatrix> logs(n, SymMatrix::zero(1));
  if (need_logs) {
    parallel_for(n, options.threads, [&](std::size_t i) {
      logs[i] = spd_log(dataset[i].descriptor.covariance);
    });
  }
  auto query_of = [&](std::size_t i) -> const SymMatrix& {
    return config.metric == Metric::lerm ? logs[i] : dataset[i].descriptor.covariance.sym();
  };

  std::vector<FoldResult> folds(plan.folds.size(), FoldResult{{}, ConfusionMatrix(labels), {}});
  std::vector<std::vector<PredictionRecord>> fold_predictions(plan.folds.size());

  parallel_for(plan.folds.size(), options.threads, [&](std::size_t f) {
    const Fold& fold = plan.folds[f];
    for (std::size_t i : fold.train_ids) {
      if (dataset[i].subject_id == fold.held_out_subject) {
        throw std::logic_error("subject '" + fold.held_out_subject +
                               "' appears in its own training fold");
      }
    }

    std::vector<std::string> train_labels;
    std::vector<const SymMatrix*> train_points;
    std::set<std::string> train_label_set;
    for (std::size_t i : fold.train_ids) {
      train_labels.push_back(dataset[i].label);
      train_label_set.insert(dataset[i].label);
      train_points.push_back(config.mode == Mode::prototype ? &logs[i] : &query_of(i));
    }

    FoldResult result{fold.held_out_subject, ConfusionMatrix(labels), {}};
    std::set<std::string> missing;
    for (std::size_t i : fold.test_ids) {
      if (!train_label_set.count(dataset[i].label)) missing.insert(dataset[i].label);
    }
    result.missing_labels.assign(missing.begin(), missing.end());
    if (options.strict && !missing.empty()) {
      throw Error(ErrorKind::MissingClassInTraining,
                  "fold '" + fold.held_out_subject + "' has no training sample for '" +
                      *missing.begin() + "'");
    }

    std::optional<PrototypeSet> pems;
    if (config.mode == Mode::prototype) {
      pems.emplace(build_prototypes_from_logs(train_points, train_labels, config.metric));
    }
    std::vector<double> dist(train_points.size());
    for (std::size_t i : fold.test_ids) {
      std::string predicted;
      if (config.mode == Mode::prototype) {
        predicted = classify_prototype_embedded(query_of(i), *pems, config.metric).label;
      } else {
        for (std::size_t t = 0; t < train_points.size(); ++t) {
          dist[t] = sym_distance(query_of(i), *train_points[t]);
        }
        predicted = knn_vote(dist, train_labels, config.k);
      }
      result.confusion.add(dataset[i].label, predicted);
      fold_predictions[f].push_back({i, dataset[i].descriptor.source_id,
                                     dataset[i].subject_id, dataset[i].label,
                                     predicted});
    }
    folds[f] = std::move(result);
  });

  EvalReport report{config, labels, std::move(folds), ConfusionMatrix(labels), 0.0, {}, {}};
  for (auto& fp : fold_predictions) {
    for (auto& r : fp) report.predictions.push_back(std::move(r));
  }
  std::vector<ConfusionMatrix> per_fold;
  for (const auto& fr : report.folds) per_fold.push_back(fr.confusion);
  report.overall = aggregate_confusions(per_fold);
  if (!(report.overall == confusion_from_predictions(labels, report.predictions))) {
    throw std::logic_error("pooled fold counts disagree with the prediction list");
  }
  report.average_accuracy = report.overall.average_accuracy();
  report.per_class_accuracy = report.overall.per_class_accuracy();
  return report;
}

std::string render_table(const ConfusionMatrix& cm) {
  const auto& names = cm.labels().labels();
  std::size_t head = 0;
  for (const auto& l : names) head = std::max(head, l.size());
  head += 2;

  std::vector<std::size_t> width;
  for (const auto& l : names) width.push_back(std::max<std::size_t>(8, l.size() + 2));

  std::ostringstream out;
  out << std::string(head, ' ');
  for (std::size_t j = 0; j < names.size(); ++j) {
    const std::string title = display_name(names[j]);
    out << std::string(width[j] - title.size(), ' ') << title;
  }
  out << '\n';

  const Matrix r = cm.rates();
  char cell[32];
  for (std::size_t i = 0; i < names.size(); ++i) {
    const std::string title = display_name(names[i]);
    out << title << std::string(head - title.size(), ' ');
    for (std::size_t j = 0; j < names.size(); ++j) {
      if (cm.row_empty(i)) {
        std::snprintf(cell, sizeof cell, "%*s", static_cast<int>(width[j]), "--");
      } else {
        std::snprintf(cell, sizeof cell, "%*.2f", static_cast<int>(width[j]),
                      100.0 * r(static_cast<Index>(i), static_cast<Index>(j)));
      }
      out << cell;
    }
    out << '\n';
  }
  std::snprintf(cell, sizeof cell, "%.2f", 100.0 * cm.average_accuracy());
  out << "Average accuracy is " << cell << "%\n";
  return out.str();
}

std::string render_report(const EvalReport& report) {
  std::ostringstream out;
  out << "Leave-one-subject-out, mode=" << to_string(report.config.mode)
      << " metric=" << to_string(report.config.metric);
  if (report.config.mode == Mode::knn) out << " k=" << report.config.k;
  out << ", " << report.folds.size() << " folds, " << report.overall.total()
      << " test sequences\n\n";
  out << render_table(report.overall);
  for (const auto& f : report.folds) {
    if (f.missing_labels.empty()) continue;
    out << "warning: fold '" << f.held_out_subject << "' has no training data for:";
    for (const auto& l : f.missing_labels) out << ' ' << l;
    out << '\n';
  }
  return out.str();
}

}  // namespace emocov
