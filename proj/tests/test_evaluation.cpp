#include <doctest.h>

#include <algorithm>
#include <numeric>
#include <random>

#include "dancecls/errors.hpp"
#include "dancecls/evaluation.hpp"
#include "metrics_oracle.hpp"

using namespace dancecls;

namespace {

ConfusionMatrix from_counts(const std::vector<std::vector<std::uint64_t>>& counts,
                            std::vector<std::string> names = {}) {
  ConfusionMatrix cm(counts.size(), std::move(names));
  for (std::size_t t = 0; t < counts.size(); ++t)
    for (std::size_t p = 0; p < counts.size(); ++p) cm.add(t, p, counts[t][p]);
  return cm;
}

std::vector<std::vector<std::uint64_t>> random_counts(std::mt19937_64& rng, std::size_t n) {
  std::uniform_int_distribution<int> cell(0, 30), zero(0, 4);
  std::vector<std::vector<std::uint64_t>> c(n, std::vector<std::uint64_t>(n));
  for (auto& row : c)
    for (auto& v : row) v = zero(rng) == 0 ? 0 : static_cast<std::uint64_t>(cell(rng));
  return c;
}

}  // namespace

TEST_SUITE("evaluation") {

TEST_CASE("confusion matrix counting") {
  const int preds[] = {0, 1, 1};
  const int labels[] = {0, 1, 0};
  const auto cm = confusion_matrix(preds, labels, 2);
  CHECK(cm.at(0, 0) == 1);
  CHECK(cm.at(0, 1) == 1);
  CHECK(cm.at(1, 1) == 1);
  CHECK(cm.at(1, 0) == 0);
  CHECK(cm.total() == 3);

  const int perfect[] = {0, 1, 2, 2, 1};
  const auto diag = confusion_matrix(perfect, perfect, 3);
  for (std::size_t t = 0; t < 3; ++t)
    for (std::size_t p = 0; p < 3; ++p)
      if (t != p) CHECK(diag.at(t, p) == 0);
  CHECK(diag.trace() == 5);

  const int two[] = {0, 1};
  CHECK_THROWS_AS(confusion_matrix(two, labels, 2), ContractError);
  const int out_of_range[] = {0, 2, 1};
  CHECK_THROWS_AS(confusion_matrix(out_of_range, labels, 2), ContractError);
}

TEST_CASE("two-class hand example") {
  const auto rep = per_class_metrics(from_counts({{3, 1}, {2, 4}}));
  CHECK(rep.classes[0].precision == doctest::Approx(0.6));
  CHECK(rep.classes[0].recall == doctest::Approx(0.75));
  CHECK(rep.classes[0].f1 == doctest::Approx(2.0 / 3.0));
  CHECK(rep.classes[0].support == 4);
  CHECK(rep.classes[1].precision == doctest::Approx(0.8));
  CHECK(rep.average_accuracy == doctest::Approx(70.0));
}

TEST_CASE("66 correct of 76 is 86.84 percent") {
  std::vector<std::vector<std::uint64_t>> c(6, std::vector<std::uint64_t>(6, 0));
  c[0][0] = 66;
  c[0][2] = 10;
  for (std::size_t k = 1; k < 6; ++k) c[k][k] = 5;
  const auto rep = per_class_metrics(from_counts(c));
  CHECK(rep.classes[0].support == 76);
  CHECK(rep.classes[0].class_accuracy == doctest::Approx(86.8421052631579));
  const auto text = render_text(rep);
  CHECK(text.find("86.84") != std::string::npos);
  CHECK(text.find("0.87") != std::string::npos);
}

TEST_CASE("diagonal matrix is perfect") {
  const auto rep = per_class_metrics(from_counts({{4, 0, 0}, {0, 2, 0}, {0, 0, 9}}));
  for (const auto& c : rep.classes) {
    CHECK(c.precision == 1.0);
    CHECK(c.recall == 1.0);
    CHECK(c.f1 == 1.0);
  }
  CHECK(rep.average_accuracy == 100.0);
}

TEST_CASE("zero denominators are flagged, never NaN") {
  const auto rep = per_class_metrics(from_counts({{2, 0, 0}, {1, 0, 0}, {0, 0, 0}}));
  CHECK(rep.classes[1].precision_degenerate);
  CHECK(rep.classes[1].precision == 0.0);
  CHECK(rep.classes[1].f1_degenerate);
  CHECK(rep.classes[2].recall_degenerate);
  CHECK(rep.classes[2].support == 0);
  CHECK_FALSE(rep.classes[0].precision_degenerate);
  const auto text = render_text(rep);
  CHECK(text.find("nan") == std::string::npos);
  CHECK(text.find("0.00*") != std::string::npos);

  const auto empty = per_class_metrics(ConfusionMatrix(6));
  CHECK(empty.empty);
  CHECK(empty.average_accuracy == 0.0);
  CHECK(render_text(empty).find("nan") == std::string::npos);
}

TEST_CASE("metrics match the brute-force reference") {
  std::mt19937_64 rng(41);
  for (int trial = 0; trial < 200; ++trial) {
    const auto counts = random_counts(rng, 2 + trial % 6);
    const auto rep = per_class_metrics(from_counts(counts));
    const auto o = testing::oracle_metrics(counts);
    for (std::size_t c = 0; c < counts.size(); ++c) {
      CHECK(std::abs(rep.classes[c].precision - o.precision[c]) < 1e-12);
      CHECK(std::abs(rep.classes[c].recall - o.recall[c]) < 1e-12);
      CHECK(std::abs(rep.classes[c].f1 - o.f1[c]) < 1e-12);
      CHECK(rep.classes[c].support == o.support[c]);
      CHECK(rep.classes[c].class_accuracy == 100.0 * rep.classes[c].recall);
    }
    CHECK(std::abs(rep.average.precision - o.avg_precision) < 1e-12);
    CHECK(std::abs(rep.average.recall - o.avg_recall) < 1e-12);
    CHECK(std::abs(rep.average.f1 - o.avg_f1) < 1e-12);
    CHECK(std::abs(rep.average_accuracy - o.average_accuracy) < 1e-12);
  }
}

TEST_CASE("metric invariants") {
  std::mt19937_64 rng(42);
  for (int trial = 0; trial < 100; ++trial) {
    const auto counts = random_counts(rng, 6);
    const auto cm = from_counts(counts);
    const auto rep = per_class_metrics(cm);
    if (rep.empty) continue;
    std::uint64_t support = 0;
    for (const auto& c : rep.classes) {
      support += c.support;
      for (double v : {c.precision, c.recall, c.f1}) CHECK((v >= 0.0 && v <= 1.0));
    }
    CHECK(support == cm.total());
    CHECK(rep.average.support == cm.total());
    CHECK(100.0 * rep.average.recall == rep.average_accuracy);
    CHECK(rep.average_accuracy ==
          100.0 * (static_cast<double>(cm.trace()) / static_cast<double>(cm.total())));
  }
}

TEST_CASE("metrics are permutation invariant") {
  std::mt19937_64 rng(43);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = 6;
    const auto counts = random_counts(rng, n);
    std::vector<std::string> names = {"a", "b", "c", "d", "e", "f"};
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    std::vector<std::vector<std::uint64_t>> pc(n, std::vector<std::uint64_t>(n));
    std::vector<std::string> pnames(n);
    for (std::size_t t = 0; t < n; ++t) {
      pnames[perm[t]] = names[t];
      for (std::size_t p = 0; p < n; ++p) pc[perm[t]][perm[p]] = counts[t][p];
    }
    const auto a = per_class_metrics(from_counts(counts, names));
    const auto b = per_class_metrics(from_counts(pc, pnames));
    for (std::size_t c = 0; c < n; ++c) CHECK(a.classes[c] == b.classes[perm[c]]);
    CHECK(std::abs(a.average.f1 - b.average.f1) < 1e-12);
    CHECK(a.average_accuracy == b.average_accuracy);
  }
}

TEST_CASE("text report has the table columns and an Average row") {
  std::mt19937_64 rng(44);
  const std::vector<std::string> names = {"Bharatnatyam", "Kathak", "Kuchipudi",
                                          "Manipuri",     "Mohiniattam", "Odissi"};
  const auto rep = per_class_metrics(from_counts(random_counts(rng, 6), names));
  const auto text = render_text(rep);
  std::vector<std::string> lines;
  std::string line;
  for (char ch : text) {
    if (ch == '\n') {
      lines.push_back(line);
      line.clear();
    } else {
      line += ch;
    }
  }
  REQUIRE(lines.size() >= 8);
  const auto& header = lines[0];
  std::size_t pos = 0;
  for (const char* col : {"Dance Class", "Precision", "Recall", "F1-score", "Support", "Class Accuracy"}) {
    const auto at = header.find(col, pos);
    CHECK(at != std::string::npos);
    pos = at;
  }
  for (std::size_t c = 0; c < 6; ++c) CHECK(lines[1 + c].rfind(names[c], 0) == 0);
  CHECK(lines[7].rfind("Average", 0) == 0);
}

TEST_CASE("structured report round-trips") {
  std::mt19937_64 rng(45);
  for (int trial = 0; trial < 20; ++trial) {
    auto rep = per_class_metrics(from_counts(random_counts(rng, 6)), "ck" + std::to_string(trial));
    const auto json = render_json(rep);
    const auto back = parse_report_json(json);
    CHECK(back == rep);
    CHECK(render_json(back) == json);
  }
  CHECK_THROWS_AS(parse_report_json("{}"), ParseError);
}

TEST_CASE("confusion renderings") {
  const auto cm = from_counts({{3, 1}, {2, 4}}, {"x", "y"});
  const auto text = render_confusion_text(cm);
  CHECK(text.find("true\\pred") != std::string::npos);
  const auto json = render_confusion_json(cm);
  CHECK(json.find("\"counts\"") != std::string::npos);
  CHECK(json.find("[\n      3,\n      1\n    ]") != std::string::npos);
}

TEST_CASE("ablation table has one row per feature combination") {
  std::mt19937_64 rng(46);
  const std::vector<std::string> names = {"a", "b", "c", "d", "e", "f"};
  std::vector<AblationRow> rows;
  for (const char* m : {"pose", "inception", "inception+kinetics+pose"})
    rows.push_back(ablation_row(m, per_class_metrics(from_counts(random_counts(rng, 6), names))));
  const auto table = render_ablation_table(names, rows);
  CHECK(std::count(table.begin(), table.end(), '\n') == 4);
  CHECK(table.find("Average Accuracy") != std::string::npos);
  CHECK(table.find("inception+kinetics+pose") != std::string::npos);
  rows[0].class_accuracy.pop_back();
  CHECK_THROWS_AS(render_ablation_table(names, rows), ContractError);
}

}  // TEST_SUITE
