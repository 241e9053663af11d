#pragma once

#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "mbfa/csv.hpp"
#include "mbfa/errors.hpp"
#include "mbfa/matrix.hpp"

namespace mbfa {

struct Timing {
  double fit_seconds = 0.0;
  double total_test_seconds = 0.0;
  double per_image_ms = 0.0;
  std::size_t test_instances = 0;
  std::size_t repeats = 0;
};

struct RepeatStats {
  double mean = 0.0;
  double stddev = 0.0;
};

// Rows of `confusion` are true classes and columns predicted classes, both in
// `classes` order.
struct EvaluationReport {
  std::vector<std::size_t> classes;
  std::vector<std::vector<std::size_t>> confusion;
  Vector per_class_accuracy;
  double mean_per_class_top1 = 0.0;

  // Filled when several validation repeats were run.
  Vector repeat_accuracies;
  std::optional<RepeatStats> over_repeats;

  std::optional<Timing> timing;

  std::size_t total() const {
    std::size_t n = 0;
    for (const auto& row : confusion)
      for (auto v : row) n += v;
    return n;
  }
};

// Macro-averaged top-1 accuracy. Both predictions and truth are class ids that
// must appear in class_order. Classes with no test instance are left out of
// the mean.
inline EvaluationReport evaluate(std::span<const std::size_t> predictions,
                                 std::span<const std::size_t> truth,
                                 std::span<const std::size_t> class_order) {
  if (predictions.size() != truth.size()) {
    throw DimensionMismatchError("evaluate: " + std::to_string(predictions.size()) +
                                 " predictions for " + std::to_string(truth.size()) + " labels");
  }
  if (class_order.empty()) throw InvalidInputError("evaluate: empty class list");
  std::size_t max_id = 0;
  for (auto c : class_order) max_id = std::max(max_id, c);
  std::vector<std::ptrdiff_t> position(max_id + 1, -1);
  for (std::size_t i = 0; i < class_order.size(); ++i) {
    if (position[class_order[i]] >= 0) throw InvalidInputError("evaluate: duplicate class id");
    position[class_order[i]] = static_cast<std::ptrdiff_t>(i);
  }
  const auto pos = [&](std::size_t id, const char* what) {
    if (id > max_id || position[id] < 0) {
      throw UnknownClassError(std::string("evaluate: ") + what + " class id " + std::to_string(id) +
                              " is outside the evaluated class set");
    }
    return static_cast<std::size_t>(position[id]);
  };

  const std::size_t n = class_order.size();
  EvaluationReport r;
  r.classes.assign(class_order.begin(), class_order.end());
  r.confusion.assign(n, std::vector<std::size_t>(n, 0));
  for (std::size_t j = 0; j < truth.size(); ++j) {
    ++r.confusion[pos(truth[j], "true")][pos(predictions[j], "predicted")];
  }
  r.per_class_accuracy.assign(n, 0.0);
  std::size_t present = 0;
  double sum = 0.0;
  for (std::size_t l = 0; l < n; ++l) {
    std::size_t row_sum = 0;
    for (auto v : r.confusion[l]) row_sum += v;
    if (row_sum == 0) continue;
    r.per_class_accuracy[l] = static_cast<double>(r.confusion[l][l]) / static_cast<double>(row_sum);
    sum += r.per_class_accuracy[l];
    ++present;
  }
  if (present == 0) throw InvalidInputError("evaluate: no test instances");
  r.mean_per_class_top1 = sum / static_cast<double>(present);
  return r;
}

// Arithmetic mean and sample (n - 1) standard deviation; stddev is 0 for one value.
inline RepeatStats aggregate_repeats(std::span<const double> values) {
  if (values.empty()) throw InvalidInputError("aggregate_repeats: no values");
  RepeatStats s;
  for (double v : values) s.mean += v;
  s.mean /= static_cast<double>(values.size());
  if (values.size() > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - s.mean) * (v - s.mean);
    s.stddev = std::sqrt(ss / static_cast<double>(values.size() - 1));
  }
  return s;
}

// Timing is left out so the document is reproducible byte for byte.
inline nlohmann::ordered_json report_to_json(const EvaluationReport& r,
                                             std::span<const std::string> class_names = {}) {
  nlohmann::ordered_json j;
  j["classes"] = r.classes;
  if (!class_names.empty()) {
    std::vector<std::string> names;
    for (auto c : r.classes) names.push_back(c < class_names.size() ? class_names[c] : std::to_string(c));
    j["class_names"] = names;
  }
  j["mean_per_class_top1"] = r.mean_per_class_top1;
  j["per_class_accuracy"] = r.per_class_accuracy;
  j["confusion"] = r.confusion;
  j["test_instances"] = r.total();
  if (r.over_repeats) {
    j["repeats"] = {{"count", r.repeat_accuracies.size()},
                    {"accuracies", r.repeat_accuracies},
                    {"mean", r.over_repeats->mean},
                    {"std", r.over_repeats->stddev}};
  }
  return j;
}

inline nlohmann::ordered_json timing_to_json(const Timing& t) {
  return {{"fit_seconds", t.fit_seconds},
          {"total_test_seconds", t.total_test_seconds},
          {"per_image_ms", t.per_image_ms},
          {"test_instances", t.test_instances},
          {"repeats", t.repeats}};
}

// Confusion matrix with a header row and a leading column of class names.
inline std::string confusion_to_csv(const EvaluationReport& r,
                                    std::span<const std::string> class_names = {}) {
  const auto name = [&](std::size_t c) {
    return c < class_names.size() ? class_names[c] : std::to_string(c);
  };
  std::string out = "true\\predicted";
  for (auto c : r.classes) out += "," + name(c);
  out += "\n";
  for (std::size_t l = 0; l < r.classes.size(); ++l) {
    out += name(r.classes[l]);
    for (auto v : r.confusion[l]) out += "," + std::to_string(v);
    out += "\n";
  }
  return out;
}

}  // namespace mbfa
