#include "mvg/eval.hpp"

#include <iomanip>
#include <sstream>

namespace mvg {

void ConfusionMatrix::add(std::size_t truth, std::size_t predicted) {
  if (truth >= classes_ || predicted >= classes_)
    throw ValidationError("confusion matrix index out of range (" + std::to_string(truth) + ", " +
                          std::to_string(predicted) + ") for " + std::to_string(classes_) + " classes");
  ++counts_[truth * classes_ + predicted];
}

std::size_t ConfusionMatrix::row_total(std::size_t truth) const {
  std::size_t n = 0;
  for (std::size_t p = 0; p < classes_; ++p) n += count(truth, p);
  return n;
}

std::size_t ConfusionMatrix::trace() const {
  std::size_t n = 0;
  for (std::size_t c = 0; c < classes_; ++c) n += count(c, c);
  return n;
}

std::size_t ConfusionMatrix::total() const {
  std::size_t n = 0;
  for (std::size_t v : counts_) n += v;
  return n;
}

EvalReport make_report(const std::vector<ClassInfo>& classes, const std::vector<std::size_t>& labels,
                       const std::vector<std::size_t>& predictions) {
  if (labels.size() != predictions.size())
    throw DimensionError("make_report: " + std::to_string(labels.size()) + " labels vs " +
                         std::to_string(predictions.size()) + " predictions");
  if (classes.empty()) throw ValidationError("make_report: no classes");
  EvalReport report;
  report.confusion = ConfusionMatrix(classes.size());
  for (std::size_t i = 0; i < labels.size(); ++i) report.confusion.add(labels[i], predictions[i]);
  for (std::size_t c = 0; c < classes.size(); ++c) {
    ClassAccuracy row{classes[c].name, classes[c].category, report.confusion.row_total(c),
                      report.confusion.count(c, c), 0.0};
    if (row.count) row.accuracy = static_cast<double>(row.correct) / static_cast<double>(row.count);
    report.per_class.push_back(row);
  }
  const std::size_t total = report.confusion.total();
  report.overall_accuracy = total ? static_cast<double>(report.confusion.trace()) / static_cast<double>(total) : 0.0;
  return report;
}

namespace {

// Class names are plain words; quote anything that would break a CSV cell.
std::string csv_cell(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"') out += '"';
    out += ch;
  }
  return out + '"';
}

}  // namespace

std::string EvalReport::to_csv() const {
  std::ostringstream out;
  out << std::fixed << std::setprecision(6);
  out << "metric,value\n";
  out << "overall_accuracy," << overall_accuracy << '\n';
  out << "samples," << confusion.total() << '\n';
  out << "correct," << confusion.trace() << '\n';
  out << '\n';
  out << "class_index,class,duration,count,correct,accuracy\n";
  for (std::size_t c = 0; c < per_class.size(); ++c) {
    const ClassAccuracy& row = per_class[c];
    out << c << ',' << csv_cell(row.name) << ',' << to_string(row.category) << ',' << row.count << ','
        << row.correct << ',' << row.accuracy << '\n';
  }
  out << '\n';
  out << "true\\predicted";
  for (const auto& row : per_class) out << ',' << csv_cell(row.name);
  out << '\n';
  for (std::size_t t = 0; t < per_class.size(); ++t) {
    out << csv_cell(per_class[t].name);
    for (std::size_t p = 0; p < per_class.size(); ++p) out << ',' << confusion.count(t, p);
    out << '\n';
  }
  return out.str();
}

DurationSummary duration_summary(const EvalReport& report) {
  DurationSummary s;
  std::size_t n_short = 0, n_long = 0;
  for (const auto& row : report.per_class) {
    if (row.category == DurationCategory::short_duration) {
      s.short_mean += row.accuracy;
      ++n_short;
    } else {
      s.long_mean += row.accuracy;
      ++n_long;
    }
  }
  if (n_short) s.short_mean /= static_cast<double>(n_short);
  if (n_long) s.long_mean /= static_cast<double>(n_long);
  return s;
}

}  // namespace mvg
