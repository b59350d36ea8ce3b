// SPDX-License-Identifier: Apache-2.0
#include "dancecls/evaluation.hpp"

#include <algorithm>
#include <cstdio>
#include <sstream>

#include <json.hpp>

#include "dancecls/errors.hpp"

namespace dancecls {

using nlohmann::json;

ConfusionMatrix::ConfusionMatrix(std::size_t num_classes, std::vector<std::string> class_names)
    : n_(num_classes), names_(std::move(class_names)), counts_(num_classes * num_classes, 0) {
  if (names_.empty())
    for (std::size_t c = 0; c < n_; ++c) names_.push_back("class" + std::to_string(c));
  if (names_.size() != n_) throw ContractError("class name count does not match class count");
}

void ConfusionMatrix::add(std::size_t truth, std::size_t predicted, std::uint64_t n) {
  if (truth >= n_ || predicted >= n_) throw ContractError("confusion matrix index out of range");
  counts_[truth * n_ + predicted] += n;
}

std::uint64_t ConfusionMatrix::row_sum(std::size_t truth) const {
  std::uint64_t s = 0;
  for (std::size_t p = 0; p < n_; ++p) s += at(truth, p);
  return s;
}

std::uint64_t ConfusionMatrix::col_sum(std::size_t predicted) const {
  std::uint64_t s = 0;
  for (std::size_t t = 0; t < n_; ++t) s += at(t, predicted);
  return s;
}

std::uint64_t ConfusionMatrix::trace() const {
  std::uint64_t s = 0;
  for (std::size_t c = 0; c < n_; ++c) s += at(c, c);
  return s;
}

std::uint64_t ConfusionMatrix::total() const {
  std::uint64_t s = 0;
  for (auto v : counts_) s += v;
  return s;
}

ConfusionMatrix confusion_matrix(std::span<const int> predictions, std::span<const int> labels,
                                 std::size_t num_classes, std::vector<std::string> class_names) {
  if (predictions.size() != labels.size())
    throw ContractError("confusion_matrix: " + std::to_string(predictions.size()) +
                        " predictions for " + std::to_string(labels.size()) + " labels");
  ConfusionMatrix cm(num_classes, std::move(class_names));
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0 || predictions[i] < 0)
      throw ContractError("confusion_matrix: negative class index");
    cm.add(static_cast<std::size_t>(labels[i]), static_cast<std::size_t>(predictions[i]));
  }
  return cm;
}

EvaluationReport per_class_metrics(const ConfusionMatrix& cm, std::string checkpoint_id) {
  EvaluationReport rep;
  rep.checkpoint_id = std::move(checkpoint_id);
  const auto total = cm.total();
  rep.empty = total == 0;

  double wp = 0, wf = 0;
  for (std::size_t c = 0; c < cm.num_classes(); ++c) {
    ClassMetrics m;
    m.name = cm.class_names()[c];
    const auto tp = static_cast<double>(cm.at(c, c));
    const auto col = cm.col_sum(c);
    const auto row = cm.row_sum(c);
    m.support = row;
    if (col == 0) m.precision_degenerate = true; else m.precision = tp / static_cast<double>(col);
    if (row == 0) m.recall_degenerate = true; else m.recall = tp / static_cast<double>(row);
    if (m.precision + m.recall == 0.0) m.f1_degenerate = true;
    else m.f1 = 2.0 * m.precision * m.recall / (m.precision + m.recall);
    m.class_accuracy = 100.0 * m.recall;

    const auto w = static_cast<double>(row);
    wp += w * m.precision;
    wf += w * m.f1;
    rep.classes.push_back(std::move(m));
  }
  rep.average.support = total;
  if (total > 0) {
    const auto n = static_cast<double>(total);
    rep.average.precision = wp / n;
    // Support-weighted recall reduces to trace / total; use the exact form.
    rep.average.recall = static_cast<double>(cm.trace()) / n;
    rep.average.f1 = wf / n;
    rep.average_accuracy = 100.0 * rep.average.recall;
  }
  return rep;
}

namespace {

std::string fixed2(double v, bool flagged) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f%s", v, flagged ? "*" : "");
  return buf;
}

std::string pad_left(const std::string& s, std::size_t width) {
  return s.size() >= width ? s : std::string(width - s.size(), ' ') + s;
}

std::string pad_right(const std::string& s, std::size_t width) {
  return s.size() >= width ? s : s + std::string(width - s.size(), ' ');
}

}  // namespace

std::string render_text(const EvaluationReport& report) {
  std::size_t name_w = std::string("Dance Class").size();
  for (const auto& c : report.classes) name_w = std::max(name_w, c.name.size());
  name_w += 2;

  std::ostringstream out;
  out << pad_right("Dance Class", name_w) << pad_left("Precision", 10) << pad_left("Recall", 9)
      << pad_left("F1-score", 10) << pad_left("Support", 9) << pad_left("Class Accuracy", 16)
      << '\n';
  bool any_flag = false;
  for (const auto& c : report.classes) {
    any_flag |= c.precision_degenerate || c.recall_degenerate || c.f1_degenerate;
    out << pad_right(c.name, name_w) << pad_left(fixed2(c.precision, c.precision_degenerate), 10)
        << pad_left(fixed2(c.recall, c.recall_degenerate), 9)
        << pad_left(fixed2(c.f1, c.f1_degenerate), 10)
        << pad_left(std::to_string(c.support), 9)
        << pad_left(fixed2(c.class_accuracy, c.recall_degenerate), 16) << '\n';
  }
  out << pad_right("Average", name_w) << pad_left(fixed2(report.average.precision, report.empty), 10)
      << pad_left(fixed2(report.average.recall, report.empty), 9)
      << pad_left(fixed2(report.average.f1, report.empty), 10)
      << pad_left(std::to_string(report.average.support), 9)
      << pad_left(fixed2(report.average_accuracy, report.empty), 16) << '\n';
  if (any_flag || report.empty) out << "* undefined (zero denominator), reported as 0\n";
  return out.str();
}

std::string render_json(const EvaluationReport& report) {
  json doc;
  doc["checkpoint"] = report.checkpoint_id;
  doc["empty"] = report.empty;
  doc["classes"] = json::array();
  for (const auto& c : report.classes)
    doc["classes"].push_back({{"name", c.name},
                              {"precision", c.precision},
                              {"recall", c.recall},
                              {"f1", c.f1},
                              {"support", c.support},
                              {"class_accuracy", c.class_accuracy},
                              {"precision_degenerate", c.precision_degenerate},
                              {"recall_degenerate", c.recall_degenerate},
                              {"f1_degenerate", c.f1_degenerate}});
  doc["average"] = {{"precision", report.average.precision},
                    {"recall", report.average.recall},
                    {"f1", report.average.f1},
                    {"support", report.average.support}};
  doc["average_accuracy"] = report.average_accuracy;
  return doc.dump(2) + "\n";
}

EvaluationReport parse_report_json(std::string_view json_text) {
  EvaluationReport rep;
  try {
    const auto doc = json::parse(json_text);
    rep.checkpoint_id = doc.at("checkpoint").get<std::string>();
    rep.empty = doc.at("empty").get<bool>();
    for (const auto& j : doc.at("classes")) {
      ClassMetrics c;
      c.name = j.at("name").get<std::string>();
      c.precision = j.at("precision").get<double>();
      c.recall = j.at("recall").get<double>();
      c.f1 = j.at("f1").get<double>();
      c.support = j.at("support").get<std::uint64_t>();
      c.class_accuracy = j.at("class_accuracy").get<double>();
      c.precision_degenerate = j.at("precision_degenerate").get<bool>();
      c.recall_degenerate = j.at("recall_degenerate").get<bool>();
      c.f1_degenerate = j.at("f1_degenerate").get<bool>();
      rep.classes.push_back(std::move(c));
    }
    const auto& a = doc.at("average");
    rep.average.precision = a.at("precision").get<double>();
    rep.average.recall = a.at("recall").get<double>();
    rep.average.f1 = a.at("f1").get<double>();
    rep.average.support = a.at("support").get<std::uint64_t>();
    rep.average_accuracy = doc.at("average_accuracy").get<double>();
  } catch (const json::exception& e) {
    throw ParseError(std::string("evaluation report: ") + e.what());
  }
  return rep;
}

std::string render_confusion_text(const ConfusionMatrix& cm) {
  std::size_t w = 6;
  for (const auto& n : cm.class_names()) w = std::max(w, n.size());
  w += 2;
  std::ostringstream out;
  out << pad_right("true\\pred", w);
  for (const auto& n : cm.class_names()) out << pad_left(n, w);
  out << '\n';
  for (std::size_t t = 0; t < cm.num_classes(); ++t) {
    out << pad_right(cm.class_names()[t], w);
    for (std::size_t p = 0; p < cm.num_classes(); ++p) out << pad_left(std::to_string(cm.at(t, p)), w);
    out << '\n';
  }
  return out.str();
}

std::string render_confusion_json(const ConfusionMatrix& cm) {
  json doc;
  doc["class_names"] = cm.class_names();
  doc["counts"] = json::array();
  for (std::size_t t = 0; t < cm.num_classes(); ++t) {
    json row = json::array();
    for (std::size_t p = 0; p < cm.num_classes(); ++p) row.push_back(cm.at(t, p));
    doc["counts"].push_back(std::move(row));
  }
  return doc.dump(2) + "\n";
}

AblationRow ablation_row(std::string method, const EvaluationReport& report) {
  AblationRow row{std::move(method), {}, report.average_accuracy};
  for (const auto& c : report.classes) row.class_accuracy.push_back(c.class_accuracy);
  return row;
}

std::string render_ablation_table(std::span<const std::string> class_names,
                                  std::span<const AblationRow> rows) {
  std::size_t method_w = std::string("Method").size();
  for (const auto& r : rows) method_w = std::max(method_w, r.method.size());
  method_w += 2;
  std::vector<std::size_t> widths;
  std::ostringstream out;
  out << pad_right("Method", method_w);
  for (const auto& n : class_names) {
    widths.push_back(std::max<std::size_t>(n.size(), 6) + 2);
    out << pad_left(n, widths.back());
  }
  out << pad_left("Average Accuracy", 18) << '\n';
  for (const auto& r : rows) {
    if (r.class_accuracy.size() != class_names.size())
      throw ContractError("ablation row '" + r.method + "' has the wrong class count");
    out << pad_right(r.method, method_w);
    for (std::size_t c = 0; c < class_names.size(); ++c)
      out << pad_left(fixed2(r.class_accuracy[c], false), widths[c]);
    out << pad_left(fixed2(r.average_accuracy, false), 18) << '\n';
  }
  return out.str();
}

}  // namespace dancecls
