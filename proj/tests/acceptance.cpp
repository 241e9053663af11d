// Acceptance run: one PASS/FAIL line per criterion, nonzero exit if any fails.

#include <Eigen/Dense>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <random>
#include <string>
#include <sys/wait.h>
#include <vector>

#include "fixtures.hpp"
#include "mbfa/mbfa.hpp"
#include "oracles.hpp"

using namespace mbfa;
using namespace mbfa::testing;
namespace fs = std::filesystem;

namespace {

using clock_type = std::chrono::steady_clock;

struct Outcome {
  bool pass = true;
  std::string detail;
};

double seconds_since(clock_type::time_point t0) {
  return std::chrono::duration<double>(clock_type::now() - t0).count();
}

double rel_err(double a, double b) { return std::abs(a - b) / std::max(1.0, std::abs(b)); }

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

Outcome eigensolver() {
  std::mt19937_64 gen(101);
  std::uniform_int_distribution<std::size_t> size(2, 50);
  double worst_res = 0.0, worst_orth = 0.0, worst_trace = 0.0;
  const auto t0 = clock_type::now();
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = size(gen);
    const Matrix s = random_symmetric(n, gen);
    const auto r = symmetric_eig(s, n);
    const Eigen::MatrixXd se = to_eigen(s);
    const Eigen::MatrixXd v = to_eigen(r.eigenvectors);
    const double fro = se.norm();
    for (std::size_t j = 0; j < n; ++j) {
      const auto jj = static_cast<Eigen::Index>(j);
      const double res = (se * v.col(jj) - r.eigenvalues[j] * v.col(jj)).norm() / (1.0 + fro);
      worst_res = std::max(worst_res, res);
    }
    const auto ni = static_cast<Eigen::Index>(n);
    worst_orth = std::max(worst_orth, (v.transpose() * v - Eigen::MatrixXd::Identity(ni, ni)).cwiseAbs().maxCoeff());
    double sum = 0.0;
    for (double l : r.eigenvalues) sum += l;
    worst_trace = std::max(worst_trace, rel_err(sum, se.trace()));
  }
  const double secs = seconds_since(t0);
  Outcome o;
  o.pass = worst_res <= 1e-8 && worst_orth <= 1e-10 && worst_trace <= 1e-8 && secs < 10.0;
  o.detail = "residual " + fmt("%.2e", worst_res) + ", orthonormality " + fmt("%.2e", worst_orth) + ", trace " +
             fmt("%.2e", worst_trace) + ", " + fmt("%.2f", secs) + " s";
  return o;
}

Outcome svd_oracle() {
  std::mt19937_64 gen(102);
  std::uniform_int_distribution<std::size_t> dim(2, 8);
  double worst_value = 0.0, worst_proj = 0.0;
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t p1 = dim(gen), p2 = dim(gen);
    const Matrix x1 = random_matrix(p1, 40, gen);
    const Matrix x2 = random_matrix(p2, 40, gen);
    const std::size_t d = std::min(p1, p2) - 1;
    const auto model = fit_mbfa(std::vector<Matrix>{x1, x2}, d);
    const auto svd = cross_svd(center(x1).values, center(x2).values);
    const auto di = static_cast<Eigen::Index>(d);
    for (std::size_t j = 0; j < d; ++j) {
      const double sv = svd.singular_values(static_cast<Eigen::Index>(j));
      worst_value = std::max(worst_value, std::abs(model.eigenvalues[j] - sv) / sv);
    }
    Eigen::MatrixXd expected(static_cast<Eigen::Index>(p1 + p2), di);
    expected.topRows(static_cast<Eigen::Index>(p1)) = svd.u.leftCols(di) / std::sqrt(2.0);
    expected.bottomRows(static_cast<Eigen::Index>(p2)) = svd.v.leftCols(di) / std::sqrt(2.0);
    const Eigen::MatrixXd w = to_eigen(model.stacked());
    worst_proj = std::max(worst_proj, (projector(w) - projector(expected)).norm());
  }
  Outcome o;
  o.pass = worst_value <= 1e-8 && worst_proj <= 1e-6;
  o.detail = "eigenvalue rel err " + fmt("%.2e", worst_value) + ", projector " + fmt("%.2e", worst_proj);
  return o;
}

Outcome objective_identity() {
  std::mt19937_64 gen(103);
  double worst = 0.0;
  for (std::size_t c : {2u, 3u, 4u}) {
    for (int trial = 0; trial < 5; ++trial) {
      std::vector<Matrix> views;
      for (std::size_t i = 0; i < c; ++i) views.push_back(random_matrix(2 + i, 25, gen));
      const auto model = fit_mbfa(views, 3);
      double sum = 0.0;
      for (double l : model.eigenvalues) sum += l;
      worst = std::max(worst, rel_err(objective_value(model, views), sum));
    }
  }
  // Sum of view dimensions 3, d = 1: maximize w^T M w over the sphere.
  double worst_grid = 0.0;
  const std::vector<std::vector<std::size_t>> shapes{{1, 2}, {2, 1}, {1, 1, 1}};
  for (const auto& shape : shapes) {
    std::vector<Matrix> views, centered;
    for (auto p : shape) views.push_back(random_matrix(p, 8, gen, 0.5));
    for (const auto& v : views) centered.push_back(center(v).values);
    const auto model = fit_mbfa(views, 1);
    const double grid = spherical_grid_max(build_cross_covariance(centered).m, 1e-3);
    worst_grid = std::max(worst_grid, std::abs(objective_value(model, views) - grid));
  }
  Outcome o;
  o.pass = worst <= 1e-8 && worst_grid <= 1e-4;
  o.detail = "objective vs eigenvalue sum " + fmt("%.2e", worst) + ", spherical grid " + fmt("%.2e", worst_grid);
  return o;
}

Outcome mcca_contract() {
  std::mt19937_64 gen(104);
  double worst_white = 0.0, worst_scale = 0.0, mbfa_shift = 1e300;
  for (int trial = 0; trial < 10; ++trial) {
    const std::vector<Matrix> views{random_matrix(4, 40, gen), random_matrix(3, 40, gen, 5.0),
                                    random_matrix(5, 40, gen, 0.1)};
    const double reg = 1e-3;
    const auto model = fit_mcca(views, 4, reg);
    std::vector<Matrix> centered;
    for (const auto& v : views) centered.push_back(center(v).values);
    const Eigen::MatrixXd dmat = to_eigen(mcca_constraint_matrix(centered, reg));
    const Eigen::MatrixXd w = to_eigen(model.stacked());
    worst_white = std::max(worst_white, (w.transpose() * dmat * w - Eigen::MatrixXd::Identity(4, 4)).cwiseAbs().maxCoeff());

    std::vector<Matrix> scaled = views;
    const double factors[3] = {1000.0, 0.01, 7.0};
    for (std::size_t i = 0; i < 3; ++i)
      for (auto& v : scaled[i].values()) v *= factors[i];
    const auto a = fit_mcca(views, 4, kDefaultMccaReg);
    const auto b = fit_mcca(scaled, 4, kDefaultMccaReg);
    for (std::size_t j = 0; j < 4; ++j) worst_scale = std::max(worst_scale, std::abs(a.eigenvalues[j] - b.eigenvalues[j]));
    const auto ma = fit_mbfa(views, 4);
    const auto mb = fit_mbfa(scaled, 4);
    mbfa_shift = std::min(mbfa_shift, rel_err(mb.eigenvalues[0], ma.eigenvalues[0]));
  }
  Outcome o;
  o.pass = worst_white <= 1e-6 && worst_scale <= 1e-6 && mbfa_shift > 1e-2;
  o.detail = "W^T D W - I " + fmt("%.2e", worst_white) + ", MCCA rescale shift " + fmt("%.2e", worst_scale) +
             ", MBFA rescale shift >= " + fmt("%.2e", mbfa_shift);
  return o;
}

Outcome inference_oracle() {
  std::mt19937_64 gen(105);
  std::uniform_int_distribution<std::size_t> pick(0, 9);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  int mismatches = 0, ties = 0, one_hot = 0, tie_failures = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t d = 2 + trial % 5, k = 1 + trial % 3, n = 3 + trial % 6;
    EmbeddingModel model;
    model.d = d;
    for (std::size_t i = 0; i <= k; ++i) {
      model.view_dims.push_back(d);
      model.projections.push_back(random_matrix(d, d, gen));
      model.means.push_back(random_matrix(d, 1, gen).column(0));
    }
    model.eigenvalues.assign(d, 1.0);
    std::vector<Matrix> protos;
    for (std::size_t t = 0; t < k; ++t) protos.push_back(random_matrix(n, d, gen));
    Vector raw(k);
    for (auto& a : raw) a = u(gen);
    if (trial % 3 == 0) {
      std::fill(raw.begin(), raw.end(), 0.0);
      raw[pick(gen) % k] = 1.0;
      ++one_hot;
    }
    const auto w = FusionWeights::normalized(raw);
    Vector x = random_matrix(d, 1, gen).column(0);
    std::size_t tie_lo = 0;
    if (trial % 4 == 0) {
      // Two classes share a direction in every table and x embeds exactly onto
      // it, so the maximum is a tie between lo and hi.
      const std::size_t a = pick(gen) % n, b = (a + 1 + pick(gen) % (n - 1)) % n;
      const std::size_t lo = std::min(a, b), hi = std::max(a, b);
      tie_lo = lo;
      model.projections[0] = Matrix::identity(d);
      model.means[0].assign(d, 0.0);
      for (auto& p : protos) {
        for (std::size_t i = 0; i < d; ++i) {
          p(lo, i) = 2.0 * x[i];
          p(hi, i) = 0.5 * x[i];
        }
      }
      ++ties;
    }

    // Direct loop: theta = W_0^T (x - mean_0), then sum_k alpha_k cos per class.
    Vector theta(d, 0.0);
    for (std::size_t r = 0; r < d; ++r)
      for (std::size_t c = 0; c < d; ++c) theta[c] += model.projections[0](r, c) * (x[r] - model.means[0][r]);
    std::size_t best = 0;
    double best_score = 0.0;
    for (std::size_t l = 0; l < n; ++l) {
      double score = 0.0;
      for (std::size_t t = 0; t < k; ++t) {
        double ab = 0.0, aa = 0.0, bb = 0.0;
        for (std::size_t i = 0; i < d; ++i) {
          ab += theta[i] * protos[t](l, i);
          aa += theta[i] * theta[i];
          bb += protos[t](l, i) * protos[t](l, i);
        }
        const double na = std::sqrt(aa), nb = std::sqrt(bb);
        score += w[t] * ((na < 1e-15 || nb < 1e-15) ? 0.0 : ab / (na * nb));
      }
      if (l == 0 || score > best_score) {
        best = l;
        best_score = score;
      }
    }
    const auto got = infer(model, x, protos, w).predicted;
    if (got != best) ++mismatches;
    if (trial % 4 == 0 && got != tie_lo) ++tie_failures;
  }
  Outcome o;
  o.pass = mismatches == 0 && tie_failures == 0;
  o.detail = std::to_string(mismatches) + " mismatches in 1000 cases (" + std::to_string(ties) + " tied maxima, " +
             std::to_string(tie_failures) + " not resolved to the lower index, " +
             std::to_string(one_hot) + " one-hot)";
  return o;
}

// Floor calibrated over 20 runs (data seeds 1000..1019, split seeds 0..19) at sigma 0.05:
// every seed scored 1.0, so mean - 3 std = 1.0.
constexpr double kSigma005Floor = 1.0;

Outcome end_to_end() {
  const auto t0 = clock_type::now();
  bool noiseless_ok = true;
  for (std::uint64_t s = 0; s < 5; ++s) {
    const auto ds = generate_synthetic(zsl_spec(900 + s, 0.0));
    GridSearchOptions opts;
    opts.seed = s;
    noiseless_ok &= cross_validate(ds, all_side_info(ds), 8, 1, opts).report.mean_per_class_top1 == 1.0;
  }
  Vector accs;
  for (std::uint64_t s = 0; s < 20; ++s) {
    const auto ds = generate_synthetic(zsl_spec(1000 + s, 0.05));
    GridSearchOptions opts;
    opts.seed = s;
    accs.push_back(cross_validate(ds, all_side_info(ds), 8, 1, opts).report.mean_per_class_top1);
  }
  const auto stats = aggregate_repeats(accs);
  const double secs = seconds_since(t0);
  Outcome o;
  o.pass = noiseless_ok && stats.mean >= kSigma005Floor && secs < 30.0;
  o.detail = std::string("noiseless ") + (noiseless_ok ? "1.0" : "below 1.0") + "; sigma 0.05 mean " +
             fmt("%.4f", stats.mean) + " std " + fmt("%.4f", stats.stddev) + " (floor " + fmt("%.4f", kSigma005Floor) +
             "), " + fmt("%.2f", secs) + " s";
  return o;
}

Outcome fusion_benefit() {
  Vector t_acc, a_acc, both;
  for (std::uint64_t s = 0; s < 20; ++s) {
    const auto ds = generate_synthetic(complementary_spec(2000 + s, 0.05));
    GridSearchOptions opts;
    opts.seed = s;
    t_acc.push_back(cross_validate(ds, std::vector<std::size_t>{0}, 8, 1, opts).report.mean_per_class_top1);
    a_acc.push_back(cross_validate(ds, std::vector<std::size_t>{1}, 8, 1, opts).report.mean_per_class_top1);
    both.push_back(cross_validate(ds, all_side_info(ds), 8, 1, opts).report.mean_per_class_top1);
  }
  const double t = aggregate_repeats(t_acc).mean, a = aggregate_repeats(a_acc).mean;
  const double ta = aggregate_repeats(both).mean;
  Outcome o;
  o.pass = ta >= std::max(t, a) - 0.01;
  o.detail = "T " + fmt("%.4f", t) + ", A " + fmt("%.4f", a) + ", T+A " + fmt("%.4f", ta);
  return o;
}

// Informational: the published real-dataset numbers need features this run
// does not have. Checks only that a user-supplied manifest loads and runs.
Outcome loader_for_user_data(const fs::path& work) {
  const fs::path dir = work / "user";
  fs::create_directories(dir);
  std::mt19937_64 gen(108);
  const std::size_t classes = 6, per_class = 5;
  const Matrix x = random_matrix(24, classes * per_class, gen);
  std::string labels;
  for (std::size_t j = 0; j < classes * per_class; ++j) labels += std::to_string(j / per_class) + "\n";
  write_text_file(dir / "features.csv", format_csv_matrix(x));
  write_text_file(dir / "labels.txt", labels);
  write_text_file(dir / "attributes.csv", format_csv_matrix(random_matrix(classes, 7, gen)));
  write_text_file(dir / "words.csv", format_csv_matrix(random_matrix(classes, 9, gen)));
  write_text_file(dir / "manifest.json",
                  R"({"features":"features.csv","labels":"labels.txt",)"
                  R"("classes":["a","b","c","d","e","f"],)"
                  R"("side_info":[{"name":"attributes","path":"attributes.csv","dim":7},)"
                  R"({"name":"word_vectors","path":"words.csv","dim":9}],)"
                  R"("seen":[0,1,2,3],"unseen":[4,5]})");
  const auto ds = load_dataset(dir / "manifest.json");
  const auto z = train(ds, all_side_info(ds), 3);
  const auto rep = evaluate_model(z, ds, FusionWeights(Vector{0.5, 0.5}));
  Outcome o;
  o.pass = ds.instance_count() == 30 && rep.total() == 10;
  o.detail = "user manifest loaded and evaluated; published real-dataset table not reproduced";
  return o;
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(MBFA_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

Outcome determinism(const fs::path& work) {
  const std::string data = (work / "det_data").string();
  Outcome o;
  if (run_cli("synth --seed 21 --sigma 0.1 --out " + data) != 0) return {false, "synth failed"};
  const std::string args = "evaluate --manifest " + data + "/manifest.json --d 8 --repeats 3 --seed 5 --out ";
  for (const char* method : {"MBFA", "MCCA"}) {
    const fs::path a = work / (std::string("det_a_") + method), b = work / (std::string("det_b_") + method);
    if (run_cli(args + a.string() + " --method " + method) != 0 || run_cli(args + b.string() + " --method " + method) != 0) {
      return {false, std::string("evaluate failed for ") + method};
    }
    for (const char* f : {"model.json", "report.json", "confusion.csv"}) {
      if (read_text_file(a / f) != read_text_file(b / f)) {
        o.pass = false;
        o.detail += std::string(method) + "/" + f + " differs; ";
      }
    }
  }
  if (o.pass) o.detail = "model.json, report.json, confusion.csv byte-identical across two runs (MBFA and MCCA)";
  return o;
}

Outcome performance() {
  SyntheticSpec spec;
  spec.latent_dim = 40;
  spec.class_count = 60;
  spec.unseen_count = 10;
  spec.instances_per_class = 40;  // 50 seen classes: 2000 training instances
  spec.latent_sigma = 0.1;
  spec.visual = {"visual", 256, 0.1, {}, false};
  spec.side_info = {{"attributes", 85, 0.0, {}, false}, {"word_vectors", 100, 0.0, {}, false}};
  spec.seed = 110;
  const auto ds = generate_synthetic(spec);
  const auto t = benchmark(ds, all_side_info(ds), 40, 1, FusionWeights(Vector{0.5, 0.5}));
  const std::size_t n_train = ds.instances_of(ds.seen).size();
  Outcome o;
  o.pass = n_train == 2000 && t.fit_seconds < 10.0 && t.per_image_ms < 1.0;
  o.detail = "N " + std::to_string(n_train) + ", fit " + fmt("%.3f", t.fit_seconds) + " s, inference " +
             fmt("%.4f", t.per_image_ms) + " ms/image";
  return o;
}

}  // namespace

int main() {
  const fs::path work = fs::temp_directory_path() / ("mbfa_acceptance_" + std::to_string(std::random_device{}()));
  fs::create_directories(work);
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"eigensolver correctness", eigensolver},
      {"two-view SVD oracle", svd_oracle},
      {"objective identity", objective_identity},
      {"MCCA whitening and scale invariance", mcca_contract},
      {"fused inference oracle", inference_oracle},
      {"end-to-end synthetic ZSL", end_to_end},
      {"fusion benefit on complementary side info", fusion_benefit},
      {"real-dataset loader (informational)", [&] { return loader_for_user_data(work); }},
      {"CLI determinism", [&] { return determinism(work); }},
      {"desk-scale performance", performance},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failed += !o.pass;
    std::printf("%s %2zu %s: %s\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first.c_str(), o.detail.c_str());
    std::fflush(stdout);
  }
  fs::remove_all(work);
  std::printf("%d of %zu criteria failed\n", failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
