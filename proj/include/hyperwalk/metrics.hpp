#pragma once

#include <cmath>
#include <cstdio>
#include <cstddef>
#include <cstdint>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "hyperwalk/error.hpp"

namespace hyperwalk {

/// Rows are true classes, columns predicted classes.
class ConfusionMatrix {
 public:
  explicit ConfusionMatrix(std::size_t classes) : classes_(classes), counts_(classes * classes, 0) {
    require(classes >= 1, "confusion matrix needs at least one class");
  }

  static ConfusionMatrix from_predictions(std::size_t classes, std::span<const std::size_t> truth,
                                          std::span<const std::size_t> predicted) {
    require(truth.size() == predicted.size(), "truth/prediction length mismatch");
    ConfusionMatrix cm(classes);
    for (std::size_t i = 0; i < truth.size(); ++i) cm.add(truth[i], predicted[i]);
    return cm;
  }

  void add(std::size_t truth, std::size_t predicted, std::uint64_t count = 1) {
    require(truth < classes_ && predicted < classes_, "class index out of range");
    counts_[truth * classes_ + predicted] += count;
    total_ += count;
  }

  std::size_t classes() const { return classes_; }
  std::uint64_t total() const { return total_; }
  std::uint64_t at(std::size_t truth, std::size_t predicted) const { return counts_[truth * classes_ + predicted]; }

  std::uint64_t true_positives(std::size_t c) const { return at(c, c); }
  std::uint64_t false_positives(std::size_t c) const {
    std::uint64_t s = 0;
    for (std::size_t t = 0; t < classes_; ++t) if (t != c) s += at(t, c);
    return s;
  }
  std::uint64_t false_negatives(std::size_t c) const {
    std::uint64_t s = 0;
    for (std::size_t p = 0; p < classes_; ++p) if (p != c) s += at(c, p);
    return s;
  }

 private:
  std::size_t classes_;
  std::vector<std::uint64_t> counts_;
  std::uint64_t total_ = 0;
};

namespace detail {
inline double f1(std::uint64_t tp, std::uint64_t fp, std::uint64_t fn) {
  const std::uint64_t denom = 2 * tp + fp + fn;
  return denom == 0 ? 0.0 : 2.0 * static_cast<double>(tp) / static_cast<double>(denom);
}
inline void require_nonempty(const ConfusionMatrix& cm) {
  if (cm.total() == 0) fail(ErrorCategory::invalid_argument, "metrics on an empty confusion matrix");
}
}  // namespace detail

inline double accuracy(const ConfusionMatrix& cm) {
  detail::require_nonempty(cm);
  std::uint64_t trace = 0;
  for (std::size_t c = 0; c < cm.classes(); ++c) trace += cm.at(c, c);
  return static_cast<double>(trace) / static_cast<double>(cm.total());
}

/// F1 over TP/FP/FN pooled across classes.
inline double micro_f1(const ConfusionMatrix& cm) {
  detail::require_nonempty(cm);
  std::uint64_t tp = 0, fp = 0, fn = 0;
  for (std::size_t c = 0; c < cm.classes(); ++c) {
    tp += cm.true_positives(c);
    fp += cm.false_positives(c);
    fn += cm.false_negatives(c);
  }
  return detail::f1(tp, fp, fn);
}

/// Unweighted mean of per-class F1; a class with zero denominator scores 0.
inline double macro_f1(const ConfusionMatrix& cm) {
  detail::require_nonempty(cm);
  double sum = 0.0;
  for (std::size_t c = 0; c < cm.classes(); ++c) {
    sum += detail::f1(cm.true_positives(c), cm.false_positives(c), cm.false_negatives(c));
  }
  return sum / static_cast<double>(cm.classes());
}

struct RunAggregate {
  double mean = 0.0;
  double stddev = 0.0;  // sample standard deviation; 0 for a single run
  std::size_t runs = 0;
};

inline RunAggregate aggregate_runs(std::span<const double> scores) {
  require(!scores.empty(), "aggregate_runs needs at least one score");
  RunAggregate a;
  a.runs = scores.size();
  for (double s : scores) a.mean += s;
  a.mean /= static_cast<double>(scores.size());
  if (scores.size() > 1) {
    double ss = 0.0;
    for (double s : scores) ss += (s - a.mean) * (s - a.mean);
    a.stddev = std::sqrt(ss / static_cast<double>(scores.size() - 1));
  }
  return a;
}

struct ResultRow {
  std::string dataset;
  std::string split;
  std::size_t run = 0;
  std::uint64_t seed = 0;
  double micro_f1 = 0.0;
  double macro_f1 = 0.0;
  double accuracy = 0.0;
};

inline void write_results_header(std::ostream& out) { out << "dataset,split,run,seed,micro_f1,macro_f1,accuracy\n"; }

inline void write_result_row(std::ostream& out, const ResultRow& r) {
  char buf[160];
  std::snprintf(buf, sizeof buf, "%.6f,%.6f,%.6f", r.micro_f1, r.macro_f1, r.accuracy);
  out << r.dataset << ',' << r.split << ',' << r.run << ',' << r.seed << ',' << buf << '\n';
}

}  // namespace hyperwalk
