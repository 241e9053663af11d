#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "mbfa/csv.hpp"
#include "mbfa/errors.hpp"
#include "mbfa/matrix.hpp"
#include "mbfa/rng.hpp"

namespace mbfa {

// One side-information type: row l holds the q-dimensional vector of class l.
struct ClassPrototypeTable {
  std::string name;
  Matrix vectors;

  std::size_t dim() const noexcept { return vectors.cols(); }
  std::size_t class_count() const noexcept { return vectors.rows(); }
  std::span<const double> prototype(std::size_t cls) const { return vectors.row(cls); }
};

// Features are p x N with instances as columns; labels[j] is the class id of
// column j. Class ids index class_names and the rows of every side-info table.
struct ZslDataset {
  Matrix features;
  std::vector<std::size_t> labels;
  std::vector<std::string> class_names;
  std::vector<ClassPrototypeTable> side_info;
  std::vector<std::size_t> seen;
  std::vector<std::size_t> unseen;

  std::size_t class_count() const noexcept { return class_names.size(); }
  std::size_t instance_count() const noexcept { return labels.size(); }

  // Column indices of every instance whose label is in `classes`, in dataset order.
  std::vector<std::size_t> instances_of(std::span<const std::size_t> classes) const {
    std::vector<bool> wanted(class_count(), false);
    for (auto c : classes) {
      if (c >= class_count()) throw UnknownClassError("class id " + std::to_string(c) + " is unknown");
      wanted[c] = true;
    }
    std::vector<std::size_t> out;
    for (std::size_t j = 0; j < labels.size(); ++j)
      if (wanted[labels[j]]) out.push_back(j);
    return out;
  }

  std::size_t side_info_index(const std::string& name) const {
    for (std::size_t k = 0; k < side_info.size(); ++k)
      if (side_info[k].name == name) return k;
    throw InvalidInputError("unknown side-information type '" + name + "'");
  }

  // Throws a DatasetError subclass describing the first violated invariant.
  void validate() const {
    const std::size_t n_classes = class_count();
    if (n_classes == 0) throw DatasetError("dataset has no classes");
    if (features.empty()) throw DatasetError("dataset has no features");
    if (labels.size() != features.cols()) {
      throw DatasetError("labels count " + std::to_string(labels.size()) +
                         " differs from feature column count " + std::to_string(features.cols()));
    }
    std::vector<int> split(n_classes, 0);
    for (auto c : seen) {
      if (c >= n_classes) throw UnknownClassError("seen class id " + std::to_string(c) + " is unknown");
      split[c] |= 1;
    }
    for (auto c : unseen) {
      if (c >= n_classes) throw UnknownClassError("unseen class id " + std::to_string(c) + " is unknown");
      if (split[c] & 1) {
        throw SplitOverlapError("class " + std::to_string(c) + " (" + class_names[c] +
                                ") is in both the seen and unseen splits");
      }
      split[c] |= 2;
    }
    std::vector<std::size_t> counts(n_classes, 0);
    for (std::size_t j = 0; j < labels.size(); ++j) {
      const auto c = labels[j];
      if (c >= n_classes) {
        throw UnknownClassError("instance " + std::to_string(j) + " has unknown class id " +
                                std::to_string(c));
      }
      if (split[c] == 0) {
        throw DatasetError("instance " + std::to_string(j) + " has class " + std::to_string(c) +
                           " which is in neither split");
      }
      ++counts[c];
    }
    for (std::size_t c = 0; c < n_classes; ++c) {
      if (counts[c] == 0) throw DatasetError("class " + std::to_string(c) + " (" + class_names[c] + ") has no instances");
    }
    for (const auto& t : side_info) {
      if (t.vectors.rows() != n_classes) {
        throw DatasetError("side-information '" + t.name + "' has " +
                           std::to_string(t.vectors.rows()) + " rows, expected one per class (" +
                           std::to_string(n_classes) + ")");
      }
    }
  }
};

enum class Split { Seen, Unseen };

inline std::span<const std::size_t> split_classes(const ZslDataset& ds, Split split) {
  return split == Split::Seen ? std::span<const std::size_t>(ds.seen)
                              : std::span<const std::size_t>(ds.unseen);
}

// Feature columns of all instances of the given classes.
inline Matrix features_of(const ZslDataset& ds, std::span<const std::size_t> classes) {
  const auto idx = ds.instances_of(classes);
  if (idx.empty()) throw DatasetError("no instances for the requested classes");
  return select_columns(ds.features, idx);
}

// Replicates class-level side information per instance: one q_k x N matrix per
// type, where column j is the prototype of instance j's class.
inline std::vector<Matrix> expand_side_info(const ZslDataset& ds,
                                            std::span<const std::size_t> classes) {
  const auto idx = ds.instances_of(classes);
  if (idx.empty()) throw DatasetError("no instances for the requested classes");
  std::vector<Matrix> out;
  for (const auto& table : ds.side_info) {
    Matrix y(table.dim(), idx.size());
    for (std::size_t j = 0; j < idx.size(); ++j) {
      const auto proto = table.prototype(ds.labels[idx[j]]);
      for (std::size_t r = 0; r < proto.size(); ++r) y(r, j) = proto[r];
    }
    out.push_back(std::move(y));
  }
  return out;
}

inline std::vector<Matrix> expand_side_info(const ZslDataset& ds, Split split) {
  return expand_side_info(ds, split_classes(ds, split));
}

// ---------------------------------------------------------------------------
// Manifest loading and saving

namespace detail {

inline std::vector<std::size_t> parse_labels(const std::string& text, const std::string& name) {
  std::vector<std::size_t> labels;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto nl = text.find('\n', pos);
    const std::string_view line =
        trim(std::string_view(text).substr(pos, nl == std::string::npos ? std::string::npos : nl - pos));
    ++line_no;
    if (!line.empty()) {
      std::size_t v = 0;
      const auto [ptr, ec] = std::from_chars(line.data(), line.data() + line.size(), v);
      if (ec != std::errc{} || ptr != line.data() + line.size()) {
        throw ParseError(name + ":" + std::to_string(line_no) + ": invalid class id '" +
                         std::string(line) + "'");
      }
      labels.push_back(v);
    }
    if (nl == std::string::npos) break;
    pos = nl + 1;
  }
  return labels;
}

}  // namespace detail

inline ZslDataset load_dataset(const std::filesystem::path& manifest_path) {
  using nlohmann::json;
  const std::string text = read_text_file(manifest_path);
  json m;
  try {
    m = json::parse(text);
  } catch (const json::exception& e) {
    throw ParseError(manifest_path.string() + ": " + e.what());
  }
  const auto base = manifest_path.parent_path();
  const auto resolve = [&](const std::string& p) {
    const std::filesystem::path path(p);
    return path.is_absolute() ? path : base / path;
  };

  ZslDataset ds;
  try {
    ds.class_names = m.at("classes").get<std::vector<std::string>>();
    ds.seen = m.at("seen").get<std::vector<std::size_t>>();
    ds.unseen = m.at("unseen").get<std::vector<std::size_t>>();
    ds.features = load_csv_matrix(resolve(m.at("features").get<std::string>()));
    const auto labels_path = resolve(m.at("labels").get<std::string>());
    ds.labels = detail::parse_labels(read_text_file(labels_path), labels_path.string());
    for (const auto& entry : m.at("side_info")) {
      ClassPrototypeTable t;
      t.name = entry.at("name").get<std::string>();
      const auto path = resolve(entry.at("path").get<std::string>());
      t.vectors = load_csv_matrix(path);
      if (entry.contains("dim")) {
        const auto q = entry.at("dim").get<std::size_t>();
        if (q != t.dim()) {
          throw ParseError(path.string() + ": ragged table, declared dim " + std::to_string(q) +
                           " but rows have " + std::to_string(t.dim()) + " fields");
        }
      }
      ds.side_info.push_back(std::move(t));
    }
  } catch (const json::exception& e) {
    throw ParseError(manifest_path.string() + ": " + e.what());
  }
  ds.validate();
  return ds;
}

// Writes features.csv, labels.txt, one CSV per side-info type and manifest.json.
inline void save_dataset(const ZslDataset& ds, const std::filesystem::path& dir) {
  using nlohmann::ordered_json;
  std::filesystem::create_directories(dir);
  save_csv_matrix(dir / "features.csv", ds.features);
  std::string labels;
  for (auto l : ds.labels) labels += std::to_string(l) + "\n";
  write_text_file(dir / "labels.txt", labels);

  ordered_json m;
  m["features"] = "features.csv";
  m["labels"] = "labels.txt";
  m["classes"] = ds.class_names;
  ordered_json tables = ordered_json::array();
  for (std::size_t k = 0; k < ds.side_info.size(); ++k) {
    const auto& t = ds.side_info[k];
    const std::string file = "side_info_" + std::to_string(k) + ".csv";
    save_csv_matrix(dir / file, t.vectors);
    tables.push_back({{"name", t.name}, {"path", file}, {"dim", t.dim()}});
  }
  m["side_info"] = tables;
  m["seen"] = ds.seen;
  m["unseen"] = ds.unseen;
  write_text_file(dir / "manifest.json", m.dump(2) + "\n");
}

// ---------------------------------------------------------------------------
// Validation split

struct ClassSplit {
  std::vector<std::size_t> train;
  std::vector<std::size_t> validation;
};

// Partitions classes by a seeded Fisher-Yates shuffle; round(fraction * n)
// classes go to validation. Both sides must keep at least two classes.
inline ClassSplit split_validation(std::span<const std::size_t> classes, double fraction,
                                   std::uint64_t seed) {
  if (!(fraction > 0.0 && fraction < 1.0)) {
    throw InvalidInputError("validation fraction must be in (0, 1)");
  }
  const std::size_t n = classes.size();
  const auto n_val = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(n)));
  if (n_val < 2 || n - std::min(n, n_val) < 2) {
    throw DatasetError("cannot split " + std::to_string(n) + " classes with fraction " +
                       format_double(fraction) + ": each side needs at least 2 classes");
  }
  std::vector<std::size_t> shuffled(classes.begin(), classes.end());
  Rng rng(seed);
  for (std::size_t i = n - 1; i > 0; --i) std::swap(shuffled[i], shuffled[rng.below(i + 1)]);
  ClassSplit out;
  out.validation.assign(shuffled.begin(), shuffled.begin() + static_cast<std::ptrdiff_t>(n_val));
  out.train.assign(shuffled.begin() + static_cast<std::ptrdiff_t>(n_val), shuffled.end());
  std::sort(out.validation.begin(), out.validation.end());
  std::sort(out.train.begin(), out.train.end());
  return out;
}

// ---------------------------------------------------------------------------
// Synthetic generator

struct SyntheticView {
  std::string name;
  std::size_t dim = 0;
  // Gaussian noise: per instance for the visual view, per class for side info.
  double sigma = 0.0;
  // Latent coordinates this view observes; empty means all of them.
  std::vector<std::size_t> latent_support;
  // Side info only: replace the table with class vectors unrelated to the latent.
  bool pure_noise = false;
};

struct SyntheticSpec {
  std::size_t latent_dim = 8;
  std::size_t class_count = 12;
  std::size_t unseen_count = 4;
  std::size_t instances_per_class = 30;
  // Per-instance spread around the class prototype in latent space.
  double latent_sigma = 0.0;
  SyntheticView visual{"visual", 32, 0.0, {}, false};
  std::vector<SyntheticView> side_info{{"attributes", 16, 0.0, {}, false}, {"word_vectors", 20, 0.0, {}, false}};
  std::uint64_t seed = 0;
};

namespace detail {

// dim x k matrix with orthonormal columns (Gaussian draw + modified Gram-Schmidt).
inline Matrix random_orthonormal_map(std::size_t dim, std::size_t k, Rng& rng) {
  if (dim < k) {
    throw InvalidInputError("synthetic view of dim " + std::to_string(dim) +
                            " cannot carry " + std::to_string(k) + " latent dimensions");
  }
  Matrix a(dim, k);
  for (auto& v : a.values()) v = rng.normal();
  for (std::size_t j = 0; j < k; ++j) {
    for (std::size_t i = 0; i < j; ++i) {
      double proj = 0.0;
      for (std::size_t r = 0; r < dim; ++r) proj += a(r, i) * a(r, j);
      for (std::size_t r = 0; r < dim; ++r) a(r, j) -= proj * a(r, i);
    }
    double norm = 0.0;
    for (std::size_t r = 0; r < dim; ++r) norm += a(r, j) * a(r, j);
    norm = std::sqrt(norm);
    for (std::size_t r = 0; r < dim; ++r) a(r, j) /= norm;
  }
  return a;
}

inline std::vector<std::size_t> support_of(const SyntheticView& v, std::size_t latent_dim) {
  if (v.latent_support.empty()) {
    std::vector<std::size_t> all(latent_dim);
    for (std::size_t i = 0; i < latent_dim; ++i) all[i] = i;
    return all;
  }
  for (auto s : v.latent_support) {
    if (s >= latent_dim) throw InvalidInputError("latent support index out of range in view " + v.name);
  }
  return v.latent_support;
}

inline Vector apply_map(const Matrix& a, std::span<const std::size_t> support,
                        std::span<const double> latent) {
  Vector out(a.rows(), 0.0);
  for (std::size_t r = 0; r < a.rows(); ++r) {
    double s = 0.0;
    for (std::size_t k = 0; k < support.size(); ++k) s += a(r, k) * latent[support[k]];
    out[r] = s;
  }
  return out;
}

}  // namespace detail

// Classes 0..class_count-unseen_count-1 are seen, the rest unseen.
inline ZslDataset generate_synthetic(const SyntheticSpec& spec) {
  if (spec.latent_dim < 1 || spec.class_count < 1 || spec.instances_per_class < 1 ||
      spec.visual.dim < 1) {
    throw InvalidInputError("synthetic spec: counts and dimensions must be >= 1");
  }
  if (spec.unseen_count < 1 || spec.unseen_count >= spec.class_count) {
    throw InvalidInputError("synthetic spec: unseen_count must be in [1, class_count)");
  }
  if (spec.side_info.empty()) throw InvalidInputError("synthetic spec: no side-information views");
  const auto bad_sigma = [](double s) { return !(s >= 0.0) || !std::isfinite(s); };
  if (bad_sigma(spec.latent_sigma) || bad_sigma(spec.visual.sigma)) {
    throw InvalidInputError("synthetic spec: sigmas must be >= 0");
  }
  for (const auto& v : spec.side_info) {
    if (v.dim < 1 || bad_sigma(v.sigma)) {
      throw InvalidInputError("synthetic spec: invalid side-information view " + v.name);
    }
  }

  Rng rng(spec.seed);
  const std::size_t L = spec.latent_dim;
  const std::size_t n_classes = spec.class_count;

  Matrix protos(n_classes, L);
  for (auto& v : protos.values()) v = rng.normal();

  const auto visual_support = detail::support_of(spec.visual, L);
  const Matrix visual_map = detail::random_orthonormal_map(spec.visual.dim, visual_support.size(), rng);
  std::vector<std::vector<std::size_t>> supports;
  std::vector<Matrix> maps;
  for (const auto& v : spec.side_info) {
    supports.push_back(detail::support_of(v, L));
    maps.push_back(detail::random_orthonormal_map(v.dim, supports.back().size(), rng));
  }

  ZslDataset ds;
  for (std::size_t c = 0; c < n_classes; ++c) ds.class_names.push_back("class_" + std::to_string(c));
  const std::size_t n = n_classes * spec.instances_per_class;
  ds.features = Matrix(spec.visual.dim, n);
  ds.labels.reserve(n);
  Vector latent(L);
  std::size_t col = 0;
  for (std::size_t c = 0; c < n_classes; ++c) {
    for (std::size_t i = 0; i < spec.instances_per_class; ++i, ++col) {
      for (std::size_t k = 0; k < L; ++k) latent[k] = protos(c, k) + spec.latent_sigma * rng.normal();
      const Vector x = detail::apply_map(visual_map, visual_support, latent);
      for (std::size_t r = 0; r < x.size(); ++r) ds.features(r, col) = x[r] + spec.visual.sigma * rng.normal();
      ds.labels.push_back(c);
    }
  }

  for (std::size_t k = 0; k < spec.side_info.size(); ++k) {
    const auto& view = spec.side_info[k];
    ClassPrototypeTable t{view.name, Matrix(n_classes, view.dim)};
    for (std::size_t c = 0; c < n_classes; ++c) {
      auto row = t.vectors.row(c);
      if (view.pure_noise) {
        for (double& v : row) v = rng.normal();
        continue;
      }
      const Vector y = detail::apply_map(maps[k], supports[k], protos.row(c));
      for (std::size_t r = 0; r < y.size(); ++r) row[r] = y[r] + view.sigma * rng.normal();
    }
    ds.side_info.push_back(std::move(t));
  }

  for (std::size_t c = 0; c < n_classes; ++c) {
    (c < n_classes - spec.unseen_count ? ds.seen : ds.unseen).push_back(c);
  }
  ds.validate();
  return ds;
}

}  // namespace mbfa
