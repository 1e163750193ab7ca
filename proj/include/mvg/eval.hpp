#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "mvg/glitchgen.hpp"
#include "mvg/train.hpp"

namespace mvg {

/// Counts of (true class, predicted class) pairs. Rows are true classes.
class ConfusionMatrix {
 public:
  explicit ConfusionMatrix(std::size_t classes) : classes_(classes), counts_(classes * classes, 0) {}

  void add(std::size_t truth, std::size_t predicted);

  std::size_t classes() const noexcept { return classes_; }
  std::size_t count(std::size_t truth, std::size_t predicted) const { return counts_[truth * classes_ + predicted]; }
  std::size_t row_total(std::size_t truth) const;
  std::size_t trace() const;
  std::size_t total() const;

 private:
  std::size_t classes_;
  std::vector<std::size_t> counts_;
};

struct ClassAccuracy {
  std::string name;
  DurationCategory category = DurationCategory::short_duration;
  std::size_t count = 0;
  std::size_t correct = 0;
  double accuracy = 0.0;  // 0 when the class has no samples
};

struct EvalReport {
  double overall_accuracy = 0.0;
  std::vector<ClassAccuracy> per_class;
  ConfusionMatrix confusion{1};

  std::size_t total() const { return confusion.total(); }

  // Three CSV blocks separated by blank lines: summary metrics, the
  // per-class table, and the confusion matrix (rows = true class).
  std::string to_csv() const;
};

EvalReport make_report(const std::vector<ClassInfo>& classes, const std::vector<std::size_t>& labels,
                       const std::vector<std::size_t>& predictions);

template <typename T>
EvalReport evaluate(const Model<T>& model, const Corpus& corpus, Split split) {
  const std::vector<std::size_t> indices = corpus.indices(split);
  const SplitScore s = score(model, corpus, indices);
  std::vector<std::size_t> labels;
  labels.reserve(indices.size());
  for (std::size_t i : indices) labels.push_back(corpus.samples[i].label);
  return make_report(corpus.classes, labels, s.predictions);
}

/// Mean per-class accuracy over the short-duration and long-duration classes.
struct DurationSummary {
  double short_mean = 0.0;
  double long_mean = 0.0;
};

DurationSummary duration_summary(const EvalReport& report);

}  // namespace mvg
