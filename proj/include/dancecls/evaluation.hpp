// SPDX-License-Identifier: Apache-2.0
//
// Confusion matrices and per-class classification reports.
//
// Zero denominators never produce NaN: the metric is reported as 0 and the
// matching *_degenerate flag is set. The Average row is support-weighted, so
// its recall equals the overall accuracy (trace / total).
#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace dancecls {

class ConfusionMatrix {
 public:
  ConfusionMatrix() = default;
  explicit ConfusionMatrix(std::size_t num_classes, std::vector<std::string> class_names = {});

  std::size_t num_classes() const { return n_; }
  const std::vector<std::string>& class_names() const { return names_; }

  /// Rows are true classes, columns predicted classes.
  std::uint64_t at(std::size_t truth, std::size_t predicted) const { return counts_[truth * n_ + predicted]; }
  void add(std::size_t truth, std::size_t predicted, std::uint64_t n = 1);

  std::uint64_t row_sum(std::size_t truth) const;
  std::uint64_t col_sum(std::size_t predicted) const;
  std::uint64_t trace() const;
  std::uint64_t total() const;

  friend bool operator==(const ConfusionMatrix&, const ConfusionMatrix&) = default;

 private:
  std::size_t n_ = 0;
  std::vector<std::string> names_;
  std::vector<std::uint64_t> counts_;
};

/// Throws ContractError on length mismatch or an index >= num_classes.
ConfusionMatrix confusion_matrix(std::span<const int> predictions, std::span<const int> labels,
                                 std::size_t num_classes,
                                 std::vector<std::string> class_names = {});

struct ClassMetrics {
  std::string name;
  double precision = 0;
  double recall = 0;
  double f1 = 0;
  std::uint64_t support = 0;
  double class_accuracy = 0;  // percent, 100 * recall
  bool precision_degenerate = false;
  bool recall_degenerate = false;
  bool f1_degenerate = false;

  friend bool operator==(const ClassMetrics&, const ClassMetrics&) = default;
};

struct AverageMetrics {
  double precision = 0;
  double recall = 0;
  double f1 = 0;
  std::uint64_t support = 0;

  friend bool operator==(const AverageMetrics&, const AverageMetrics&) = default;
};

struct EvaluationReport {
  std::vector<ClassMetrics> classes;
  AverageMetrics average;
  double average_accuracy = 0;  // percent, 100 * trace / total
  bool empty = false;           // no samples; every metric undefined
  std::string checkpoint_id;

  friend bool operator==(const EvaluationReport&, const EvaluationReport&) = default;
};

EvaluationReport per_class_metrics(const ConfusionMatrix& cm, std::string checkpoint_id = {});

/// Fixed-width table: Dance Class | Precision | Recall | F1-score | Support |
/// Class Accuracy, one row per class plus Average. Two decimals.
std::string render_text(const EvaluationReport& report);
/// Machine-readable JSON document at full precision.
std::string render_json(const EvaluationReport& report);
/// Inverse of render_json. Throws ParseError on malformed documents.
EvaluationReport parse_report_json(std::string_view json_text);

std::string render_confusion_text(const ConfusionMatrix& cm);
std::string render_confusion_json(const ConfusionMatrix& cm);

/// One line of a feature-combination comparison: per-class accuracy and
/// average accuracy, both in percent.
struct AblationRow {
  std::string method;
  std::vector<double> class_accuracy;
  double average_accuracy = 0;
};

AblationRow ablation_row(std::string method, const EvaluationReport& report);
/// Method | <class names...> | Average Accuracy.
std::string render_ablation_table(std::span<const std::string> class_names,
                                  std::span<const AblationRow> rows);

}  // namespace dancecls
