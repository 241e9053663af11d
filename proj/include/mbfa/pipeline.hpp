#pragma once

#include <chrono>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "mbfa/data.hpp"
#include "mbfa/embedding.hpp"
#include "mbfa/errors.hpp"
#include "mbfa/evaluation.hpp"
#include "mbfa/matrix.hpp"

namespace mbfa {

// Per-side-information fusion weights on the probability simplex.
class FusionWeights {
 public:
  explicit FusionWeights(Vector alphas) : alphas_(std::move(alphas)) {
    if (alphas_.empty()) throw InvalidInputError("fusion weights: empty");
    double sum = 0.0;
    for (double a : alphas_) {
      if (!(a >= 0.0 && a <= 1.0)) throw InvalidInputError("fusion weights must lie in [0, 1]");
      sum += a;
    }
    if (std::abs(sum - 1.0) > 1e-12) {
      throw InvalidInputError("fusion weights must sum to 1, got " + format_double(sum));
    }
  }

  static FusionWeights one_hot(std::size_t k, std::size_t hot) {
    Vector a(k, 0.0);
    a.at(hot) = 1.0;
    return FusionWeights(std::move(a));
  }

  // Rescales positive weights onto the simplex (the argmax is unaffected).
  static FusionWeights normalized(Vector raw) {
    double sum = 0.0;
    for (double a : raw) {
      if (!(a >= 0.0) || !std::isfinite(a)) throw InvalidInputError("fusion weights must be >= 0");
      sum += a;
    }
    if (!(sum > 0.0)) throw InvalidInputError("fusion weights must not all be zero");
    for (double& a : raw) a /= sum;
    return FusionWeights(std::move(raw));
  }

  std::size_t size() const noexcept { return alphas_.size(); }
  double operator[](std::size_t k) const { return alphas_[k]; }
  const Vector& alphas() const noexcept { return alphas_; }

  friend bool operator==(const FusionWeights&, const FusionWeights&) = default;

 private:
  Vector alphas_;
};

// `predicted` is a row index into the prototype tables passed to infer(), or a
// dataset class id when produced by predict().
struct Prediction {
  std::size_t instance = 0;
  std::size_t predicted = 0;
  Vector scores;
};

// a.b / (|a| |b|); 0 when either norm is below 1e-15.
inline double cosine_similarity(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) {
    throw DimensionMismatchError("cosine_similarity: lengths " + std::to_string(a.size()) +
                                 " and " + std::to_string(b.size()));
  }
  double ab = 0.0, aa = 0.0, bb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ab += a[i] * b[i];
    aa += a[i] * a[i];
    bb += b[i] * b[i];
  }
  const double na = std::sqrt(aa);
  const double nb = std::sqrt(bb);
  if (na < 1e-15 || nb < 1e-15) return 0.0;
  return ab / (na * nb);
}

// Fused score sum_k alpha_k sim(embedded, prototypes[k].row(l)) for every l.
// prototypes[k] is n x d, one embedded class prototype per row.
inline Vector fused_scores(std::span<const double> embedded, std::span<const Matrix> prototypes,
                           const FusionWeights& weights) {
  if (prototypes.size() != weights.size()) {
    throw DimensionMismatchError("infer: " + std::to_string(weights.size()) + " weights for " +
                                 std::to_string(prototypes.size()) + " side-information types");
  }
  const std::size_t n = prototypes.front().rows();
  Vector scores(n, 0.0);
  for (std::size_t k = 0; k < prototypes.size(); ++k) {
    if (prototypes[k].rows() != n) throw DimensionMismatchError("infer: prototype tables differ in class count");
    for (std::size_t l = 0; l < n; ++l) {
      scores[l] += weights[k] * cosine_similarity(embedded, prototypes[k].row(l));
    }
  }
  return scores;
}

// First index of the maximum.
inline std::size_t argmax(std::span<const double> scores) {
  std::size_t best = 0;
  for (std::size_t l = 1; l < scores.size(); ++l)
    if (scores[l] > scores[best]) best = l;
  return best;
}

// Embeds x with the visual projection (view 0) and applies the fused argmax.
inline Prediction infer(const EmbeddingModel& model, std::span<const double> x,
                        std::span<const Matrix> prototypes, const FusionWeights& weights,
                        std::size_t instance = 0) {
  const Vector embedded = project(model, 0, x);
  Prediction p;
  p.instance = instance;
  p.scores = fused_scores(embedded, prototypes, weights);
  p.predicted = argmax(p.scores);
  return p;
}

struct TrainOptions {
  Method method = Method::MBFA;
  double reg = kDefaultMccaReg;
};

// A model fitted on [X; Y^k1; ...] plus the target-class prototypes embedded
// with phi_k. side_info[k] is the dataset table behind model view k + 1.
struct ZslModel {
  EmbeddingModel model;
  std::vector<std::size_t> side_info;
  std::vector<std::size_t> target_classes;
  std::vector<Matrix> prototypes;
};

inline std::vector<std::size_t> all_side_info(const ZslDataset& ds) {
  std::vector<std::size_t> all(ds.side_info.size());
  for (std::size_t k = 0; k < all.size(); ++k) all[k] = k;
  return all;
}

// phi_k of each target class, one n x d matrix per selected side-info type.
inline std::vector<Matrix> embed_prototypes(const EmbeddingModel& model, const ZslDataset& ds,
                                            std::span<const std::size_t> selection,
                                            std::span<const std::size_t> target_classes) {
  if (model.view_count() != selection.size() + 1) {
    throw DimensionMismatchError("model has " + std::to_string(model.view_count()) +
                                 " views but " + std::to_string(selection.size()) +
                                 " side-information types were selected");
  }
  if (target_classes.empty()) throw InvalidInputError("no target classes to embed");
  std::vector<Matrix> out;
  for (std::size_t k = 0; k < selection.size(); ++k) {
    const auto& table = ds.side_info.at(selection[k]);
    Matrix emb(target_classes.size(), model.d);
    for (std::size_t l = 0; l < target_classes.size(); ++l) {
      if (target_classes[l] >= table.class_count()) throw UnknownClassError("target class out of range");
      const Vector v = project(model, k + 1, table.prototype(target_classes[l]));
      std::copy(v.begin(), v.end(), emb.row(l).begin());
    }
    out.push_back(std::move(emb));
  }
  return out;
}

// Fits on the instances of train_classes (c = K + 1 views) and embeds the
// prototypes of target_classes.
inline ZslModel train(const ZslDataset& ds, std::span<const std::size_t> train_classes,
                      std::span<const std::size_t> target_classes,
                      std::span<const std::size_t> selection, std::size_t d,
                      const TrainOptions& options = {}) {
  if (selection.empty()) throw InvalidInputError("train: empty side-information selection");
  std::vector<bool> used(ds.side_info.size(), false);
  for (auto k : selection) {
    if (k >= ds.side_info.size()) throw RangeError("train: side-information index out of range");
    if (used[k]) throw InvalidInputError("train: side-information type selected twice");
    used[k] = true;
  }
  std::vector<Matrix> views;
  views.push_back(features_of(ds, train_classes));
  auto expanded = expand_side_info(ds, train_classes);
  for (auto k : selection) views.push_back(std::move(expanded[k]));

  ZslModel z;
  z.model = options.method == Method::MBFA ? fit_mbfa(views, d) : fit_mcca(views, d, options.reg);
  z.model.view_names.push_back("visual");
  for (auto k : selection) z.model.view_names.push_back(ds.side_info[k].name);
  z.side_info.assign(selection.begin(), selection.end());
  z.target_classes.assign(target_classes.begin(), target_classes.end());
  z.prototypes = embed_prototypes(z.model, ds, selection, target_classes);
  return z;
}

// Fit on the seen classes, embed the unseen prototypes.
inline ZslModel train(const ZslDataset& ds, std::span<const std::size_t> selection, std::size_t d,
                      const TrainOptions& options = {}) {
  return train(ds, ds.seen, ds.unseen, selection, d, options);
}

// Predictions for every column of x; `predicted` holds dataset class ids.
inline std::vector<Prediction> predict(const ZslModel& z, const Matrix& x,
                                       const FusionWeights& weights) {
  const Matrix embedded = transpose(project_columns(z.model, 0, x));
  std::vector<Prediction> out;
  out.reserve(x.cols());
  for (std::size_t j = 0; j < x.cols(); ++j) {
    Prediction p;
    p.instance = j;
    p.scores = fused_scores(embedded.row(j), z.prototypes, weights);
    p.predicted = z.target_classes[argmax(p.scores)];
    out.push_back(std::move(p));
  }
  return out;
}

// Classifies every instance of the model's target classes and scores the result.
inline EvaluationReport evaluate_model(const ZslModel& z, const ZslDataset& ds,
                                       const FusionWeights& weights) {
  const auto idx = ds.instances_of(z.target_classes);
  if (idx.empty()) throw DatasetError("no test instances for the target classes");
  const auto preds = predict(z, select_columns(ds.features, idx), weights);
  std::vector<std::size_t> predicted, truth;
  for (std::size_t j = 0; j < idx.size(); ++j) {
    predicted.push_back(preds[j].predicted);
    truth.push_back(ds.labels[idx[j]]);
  }
  return evaluate(predicted, truth, z.target_classes);
}

// All weight vectors on the simplex with spacing `step`, in lexicographic
// order of (alpha_1, ..., alpha_K).
inline std::vector<FusionWeights> simplex_grid(std::size_t k, double step) {
  if (k == 0) throw InvalidInputError("simplex_grid: k must be >= 1");
  if (!(step > 0.0 && step <= 1.0)) throw InvalidInputError("grid step must be in (0, 1]");
  const double inv = 1.0 / step;
  const auto m = static_cast<std::size_t>(std::llround(inv));
  if (std::abs(inv - static_cast<double>(m)) > 1e-9) {
    throw InvalidInputError("grid step " + format_double(step) + " does not divide 1");
  }
  std::vector<FusionWeights> out;
  std::vector<std::size_t> parts(k, 0);
  // Enumerate compositions of m into k parts lexicographically.
  const auto rec = [&](auto&& self, std::size_t pos, std::size_t remaining) -> void {
    if (pos + 1 == k) {
      parts[pos] = remaining;
      Vector a(k);
      for (std::size_t i = 0; i < k; ++i) a[i] = static_cast<double>(parts[i]) / static_cast<double>(m);
      out.push_back(FusionWeights(std::move(a)));
      return;
    }
    for (std::size_t v = 0; v <= remaining; ++v) {
      parts[pos] = v;
      self(self, pos + 1, remaining - v);
    }
  };
  rec(rec, 0, m);
  return out;
}

struct GridSearchOptions {
  double grid_step = 0.1;
  double validation_fraction = 0.2;
  std::uint64_t seed = 0;
  TrainOptions train;
};

struct GridCandidate {
  FusionWeights weights;
  double accuracy;
};

struct GridSearchResult {
  FusionWeights best{Vector{1.0}};
  double best_accuracy = 0.0;
  std::vector<GridCandidate> candidates;
  ClassSplit split;
};

// Picks fusion weights on a class-level validation split of the seen classes.
// With a single side-information type the answer is (1) and nothing is trained.
inline GridSearchResult grid_search_weights(const ZslDataset& ds,
                                            std::span<const std::size_t> selection, std::size_t d,
                                            const GridSearchOptions& options = {}) {
  if (selection.empty()) throw InvalidInputError("grid search: empty side-information selection");
  GridSearchResult result;
  if (selection.size() == 1) return result;

  const auto grid = simplex_grid(selection.size(), options.grid_step);
  result.split = split_validation(ds.seen, options.validation_fraction, options.seed);
  const ZslModel z = train(ds, result.split.train, result.split.validation, selection, d, options.train);
  bool first = true;
  for (const auto& w : grid) {
    const double acc = evaluate_model(z, ds, w).mean_per_class_top1;
    result.candidates.push_back({w, acc});
    if (first || acc > result.best_accuracy) {
      result.best = w;
      result.best_accuracy = acc;
      first = false;
    }
  }
  return result;
}

struct CrossValidationResult {
  EvaluationReport report;  // first repeat, with repeat statistics attached
  std::vector<FusionWeights> chosen_weights;
  std::vector<GridSearchResult> searches;
};

// Trains once on all seen classes, then for each repeat picks weights on a
// fresh validation split (seed + r) and evaluates on the unseen classes.
// Fixed weights, when given, replace the search.
inline CrossValidationResult cross_validate(const ZslDataset& ds,
                                            std::span<const std::size_t> selection, std::size_t d,
                                            std::size_t repeats, const GridSearchOptions& options,
                                            const std::optional<FusionWeights>& fixed = std::nullopt,
                                            const ZslModel* pretrained = nullptr) {
  if (repeats < 1) throw InvalidInputError("repeats must be >= 1");
  const ZslModel z = pretrained ? *pretrained : train(ds, selection, d, options.train);
  CrossValidationResult out;
  Vector accs;
  for (std::size_t r = 0; r < repeats; ++r) {
    FusionWeights w = fixed ? *fixed : FusionWeights(Vector{1.0});
    if (!fixed) {
      GridSearchOptions o = options;
      o.seed = options.seed + r;
      out.searches.push_back(grid_search_weights(ds, selection, d, o));
      w = out.searches.back().best;
    }
    auto rep = evaluate_model(z, ds, w);
    accs.push_back(rep.mean_per_class_top1);
    out.chosen_weights.push_back(w);
    if (r == 0) out.report = std::move(rep);
  }
  out.report.repeat_accuracies = accs;
  out.report.over_repeats = aggregate_repeats(accs);
  return out;
}

struct SweepRow {
  std::size_t d;
  double accuracy;
};

// One full train + evaluate on seen/unseen per embedding dimension.
inline std::vector<SweepRow> sweep_dimension(const ZslDataset& ds,
                                             std::span<const std::size_t> selection,
                                             const FusionWeights& weights,
                                             std::span<const std::size_t> d_list,
                                             const TrainOptions& options = {}) {
  std::vector<SweepRow> rows;
  for (auto d : d_list) {
    const auto z = train(ds, selection, d, options);
    rows.push_back({d, evaluate_model(z, ds, weights).mean_per_class_top1});
  }
  return rows;
}

// Wall-clock fit time and per-image inference time on the unseen instances,
// averaged over repeats.
inline Timing benchmark(const ZslDataset& ds, std::span<const std::size_t> selection,
                        std::size_t d, std::size_t repeats, const FusionWeights& weights,
                        const TrainOptions& options = {}) {
  if (repeats < 1) throw InvalidInputError("repeats must be >= 1");
  using clock = std::chrono::steady_clock;
  const Matrix test = features_of(ds, ds.unseen);
  Timing t;
  t.repeats = repeats;
  t.test_instances = test.cols();
  std::size_t sink = 0;
  for (std::size_t r = 0; r < repeats; ++r) {
    const auto t0 = clock::now();
    const ZslModel z = train(ds, selection, d, options);
    const auto t1 = clock::now();
    for (std::size_t j = 0; j < test.cols(); ++j) {
      sink += infer(z.model, test.column(j), z.prototypes, weights, j).predicted;
    }
    const auto t2 = clock::now();
    t.fit_seconds += std::chrono::duration<double>(t1 - t0).count();
    t.total_test_seconds += std::chrono::duration<double>(t2 - t1).count();
  }
  const double reps = static_cast<double>(repeats);
  t.fit_seconds /= reps;
  t.total_test_seconds /= reps;
  t.per_image_ms = 1000.0 * t.total_test_seconds / static_cast<double>(t.test_instances);
  static_cast<void>(sink);
  return t;
}

}  // namespace mbfa
