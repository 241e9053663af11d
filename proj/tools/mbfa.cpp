// mbfa: command-line front end for fitting multi-view embeddings and running
// zero-shot classification experiments.

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "mbfa/mbfa.hpp"

namespace fs = std::filesystem;
using mbfa::Json;

namespace {

struct RunConfig {
  std::string manifest;
  std::string method = "MBFA";
  std::size_t d = 40;
  std::vector<std::string> side_info;
  std::vector<double> weights;
  double grid_step = 0.1;
  double val_fraction = 0.2;
  double reg = mbfa::kDefaultMccaReg;
  std::uint64_t seed = 0;
  std::size_t repeats = 1;
  std::string out = ".";
  std::string model;
  std::vector<std::size_t> d_list{40, 50, 120};
};

Json config_to_json(const RunConfig& c) {
  Json j;
  j["manifest"] = c.manifest;
  j["method"] = c.method;
  j["d"] = c.d;
  j["side_info"] = c.side_info;
  j["weights"] = c.weights;
  j["grid_step"] = c.grid_step;
  j["val_fraction"] = c.val_fraction;
  j["reg"] = c.reg;
  j["seed"] = c.seed;
  j["repeats"] = c.repeats;
  j["out"] = c.out;
  j["model"] = c.model;
  j["d_list"] = c.d_list;
  return j;
}

// Binds every RunConfig field to a flag. Returns setters that a config file
// may apply for flags that were not given on the command line.
std::map<std::string, std::pair<CLI::Option*, std::function<void(const nlohmann::json&)>>>
add_run_flags(CLI::App* app, RunConfig& c) {
  std::map<std::string, std::pair<CLI::Option*, std::function<void(const nlohmann::json&)>>> keys;
  const auto bind = [&](const std::string& key, CLI::Option* opt, auto& field) {
    keys[key] = {opt, [&field](const nlohmann::json& v) { v.get_to(field); }};
  };
  bind("manifest", app->add_option("--manifest", c.manifest, "Dataset manifest (JSON)"), c.manifest);
  bind("method", app->add_option("--method", c.method, "MBFA or MCCA")->capture_default_str(), c.method);
  bind("d", app->add_option("--d", c.d, "Embedding dimension")->capture_default_str(), c.d);
  bind("side_info",
       app->add_option("--side-info", c.side_info, "Side-information types (names or indices)")->delimiter(','),
       c.side_info);
  bind("weights", app->add_option("--weights", c.weights, "Fusion weights, one per side-info type")->delimiter(','),
       c.weights);
  bind("grid_step", app->add_option("--grid-step", c.grid_step, "Fusion-weight grid spacing")->capture_default_str(),
       c.grid_step);
  bind("val_fraction",
       app->add_option("--val-fraction", c.val_fraction, "Fraction of seen classes held out for validation")
           ->capture_default_str(),
       c.val_fraction);
  bind("reg", app->add_option("--reg", c.reg, "MCCA ridge (relative to mean view variance)")->capture_default_str(),
       c.reg);
  bind("seed", app->add_option("--seed", c.seed, "Seed for validation splits")->capture_default_str(), c.seed);
  bind("repeats", app->add_option("--repeats", c.repeats, "Validation repeats")->capture_default_str(), c.repeats);
  bind("out", app->add_option("--out", c.out, "Output directory")->capture_default_str(), c.out);
  bind("model", app->add_option("--model", c.model, "Fitted model.json to evaluate"), c.model);
  bind("d_list", app->add_option("--d-list", c.d_list, "Dimensions for sweep-d")->delimiter(','), c.d_list);
  return keys;
}

struct Context {
  RunConfig config;
  mbfa::ZslDataset dataset;
  std::vector<std::size_t> selection;
  mbfa::TrainOptions train;
};

std::vector<std::size_t> resolve_selection(const mbfa::ZslDataset& ds, const std::vector<std::string>& names) {
  if (names.empty()) return mbfa::all_side_info(ds);
  std::vector<std::size_t> out;
  for (const auto& n : names) {
    const bool numeric = !n.empty() && n.find_first_not_of("0123456789") == std::string::npos;
    if (numeric && std::stoul(n) < ds.side_info.size()) {
      out.push_back(std::stoul(n));
    } else {
      out.push_back(ds.side_info_index(n));
    }
  }
  return out;
}

void check_config(const RunConfig& c) {
  if (c.d < 1) throw mbfa::RangeError("--d must be >= 1");
  if (c.repeats < 1) throw mbfa::InvalidInputError("--repeats must be >= 1");
  mbfa::parse_method(c.method);
  if (c.manifest.empty()) throw mbfa::InvalidInputError("--manifest is required");
}

Context load_context(const RunConfig& c) {
  check_config(c);
  Context ctx{c, mbfa::load_dataset(c.manifest), {}, {}};
  ctx.selection = resolve_selection(ctx.dataset, c.side_info);
  ctx.train.method = mbfa::parse_method(c.method);
  ctx.train.reg = c.reg;
  return ctx;
}

mbfa::GridSearchOptions grid_options(const Context& ctx) {
  mbfa::GridSearchOptions o;
  o.grid_step = ctx.config.grid_step;
  o.validation_fraction = ctx.config.val_fraction;
  o.seed = ctx.config.seed;
  o.train = ctx.train;
  return o;
}

std::optional<mbfa::FusionWeights> fixed_weights(const Context& ctx) {
  if (ctx.config.weights.empty()) {
    if (ctx.selection.size() == 1) return mbfa::FusionWeights(mbfa::Vector{1.0});
    return std::nullopt;
  }
  if (ctx.config.weights.size() != ctx.selection.size()) {
    throw mbfa::DimensionMismatchError("--weights has " + std::to_string(ctx.config.weights.size()) +
                                       " entries for " + std::to_string(ctx.selection.size()) +
                                       " side-information types");
  }
  return mbfa::FusionWeights::normalized(ctx.config.weights);
}

fs::path prepare_out(const RunConfig& c) {
  const fs::path out(c.out);
  fs::create_directories(out);
  mbfa::write_text_file(out / "run-config.json", config_to_json(c).dump(2) + "\n");
  return out;
}

std::string join(const mbfa::Vector& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + mbfa::format_double(v[i]);
  return s;
}

int cmd_fit(const RunConfig& c) {
  const auto ctx = load_context(c);
  const auto out = prepare_out(c);
  const auto t0 = std::chrono::steady_clock::now();
  const auto z = mbfa::train(ctx.dataset, ctx.selection, c.d, ctx.train);
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  mbfa::save_model(out / "model.json", z.model);

  std::vector<mbfa::Matrix> views{mbfa::features_of(ctx.dataset, ctx.dataset.seen)};
  auto expanded = mbfa::expand_side_info(ctx.dataset, mbfa::Split::Seen);
  for (auto k : ctx.selection) views.push_back(expanded[k]);
  const double objective = mbfa::objective_value(z.model, views);

  std::ostringstream log;
  log << "method " << mbfa::to_string(z.model.method) << "\n"
      << "views " << z.model.view_count() << "\n"
      << "d " << z.model.d << "\n"
      << "eigenvalues " << join(z.model.eigenvalues) << "\n"
      << "objective " << mbfa::format_double(objective) << "\n"
      << "fit_seconds " << mbfa::format_double(seconds) << "\n";
  mbfa::write_text_file(out / "fit.log", log.str());
  std::cout << log.str();
  return 0;
}

int cmd_evaluate(const RunConfig& c) {
  auto ctx = load_context(c);
  const auto out = prepare_out(c);
  mbfa::ZslModel z;
  if (!c.model.empty()) {
    z.model = mbfa::load_model(c.model);
    if (c.side_info.empty() && z.model.view_names.size() == z.model.view_count()) {
      ctx.selection = resolve_selection(
          ctx.dataset, std::vector<std::string>(z.model.view_names.begin() + 1, z.model.view_names.end()));
    }
    if (z.model.view_dims.front() != ctx.dataset.features.rows()) {
      throw mbfa::DimensionMismatchError("model expects " + std::to_string(z.model.view_dims.front()) +
                                         " visual features, dataset has " +
                                         std::to_string(ctx.dataset.features.rows()));
    }
    ctx.train.method = z.model.method;
    if (z.model.method == mbfa::Method::MCCA) ctx.train.reg = z.model.reg;
    z.side_info = ctx.selection;
    z.target_classes = ctx.dataset.unseen;
    z.prototypes = mbfa::embed_prototypes(z.model, ctx.dataset, ctx.selection, z.target_classes);
  } else {
    z = mbfa::train(ctx.dataset, ctx.selection, c.d, ctx.train);
    mbfa::save_model(out / "model.json", z.model);
  }

  const auto cv = mbfa::cross_validate(ctx.dataset, ctx.selection, z.model.d, c.repeats, grid_options(ctx),
                                       fixed_weights(ctx), &z);
  auto report = mbfa::report_to_json(cv.report, ctx.dataset.class_names);
  Json chosen = Json::array();
  for (const auto& w : cv.chosen_weights) chosen.push_back(w.alphas());
  report["weights"] = chosen;
  mbfa::write_text_file(out / "report.json", report.dump(2) + "\n");
  mbfa::write_text_file(out / "confusion.csv", mbfa::confusion_to_csv(cv.report, ctx.dataset.class_names));

  std::cout << "mean per-class top-1 " << mbfa::format_double(cv.report.mean_per_class_top1) << "\n";
  if (c.repeats > 1) {
    std::cout << "over " << c.repeats << " repeats: " << mbfa::format_double(cv.report.over_repeats->mean)
              << " +- " << mbfa::format_double(cv.report.over_repeats->stddev) << "\n";
  }
  return 0;
}

int cmd_grid_search(const RunConfig& c) {
  const auto ctx = load_context(c);
  const auto out = prepare_out(c);
  const auto r = mbfa::grid_search_weights(ctx.dataset, ctx.selection, c.d, grid_options(ctx));
  std::ostringstream log;
  log << "candidates " << r.candidates.size() << "\n";
  for (const auto& cand : r.candidates) {
    log << "weights " << join(cand.weights.alphas()) << " accuracy " << mbfa::format_double(cand.accuracy) << "\n";
  }
  log << "best " << join(r.best.alphas()) << "\n";
  mbfa::write_text_file(out / "grid-search.log", log.str());
  Json j;
  j["weights"] = r.best.alphas();
  j["validation_accuracy"] = r.best_accuracy;
  j["train_classes"] = r.split.train;
  j["validation_classes"] = r.split.validation;
  mbfa::write_text_file(out / "weights.json", j.dump(2) + "\n");
  std::cout << log.str();
  return 0;
}

int cmd_sweep_d(const RunConfig& c) {
  const auto ctx = load_context(c);
  const auto out = prepare_out(c);
  auto weights = fixed_weights(ctx);
  if (!weights) weights = mbfa::grid_search_weights(ctx.dataset, ctx.selection, c.d, grid_options(ctx)).best;
  const auto rows = mbfa::sweep_dimension(ctx.dataset, ctx.selection, *weights, c.d_list, ctx.train);
  std::string csv = "d,accuracy\n";
  for (const auto& r : rows) csv += std::to_string(r.d) + "," + mbfa::format_double(r.accuracy) + "\n";
  mbfa::write_text_file(out / "sweep.csv", csv);
  std::cout << csv;
  return 0;
}

int cmd_bench(const RunConfig& c) {
  const auto ctx = load_context(c);
  const auto out = prepare_out(c);
  auto weights = fixed_weights(ctx);
  if (!weights) weights = mbfa::FusionWeights(mbfa::Vector(ctx.selection.size(), 1.0 / static_cast<double>(ctx.selection.size())));
  const auto t = mbfa::benchmark(ctx.dataset, ctx.selection, c.d, c.repeats, *weights, ctx.train);
  mbfa::write_text_file(out / "bench.json", mbfa::timing_to_json(t).dump(2) + "\n");
  std::cout << "fit_seconds " << mbfa::format_double(t.fit_seconds) << "\n"
            << "per_image_ms " << mbfa::format_double(t.per_image_ms) << "\n";
  return 0;
}

struct SynthFlags {
  std::string spec_file;
  std::string out = "synthetic";
  mbfa::SyntheticSpec spec;
  std::vector<std::size_t> side_dims{16, 20};
  double sigma = 0.0;
  double side_sigma = 0.0;
  std::vector<std::size_t> noise_views;
  bool complementary = false;
};

mbfa::SyntheticSpec spec_from_json(const nlohmann::json& j) {
  mbfa::SyntheticSpec s;
  s.latent_dim = j.value("latent_dim", s.latent_dim);
  s.class_count = j.value("class_count", s.class_count);
  s.unseen_count = j.value("unseen_count", s.unseen_count);
  s.instances_per_class = j.value("instances_per_class", s.instances_per_class);
  s.latent_sigma = j.value("latent_sigma", s.latent_sigma);
  s.seed = j.value("seed", s.seed);
  const auto view = [](const nlohmann::json& v, const std::string& fallback) {
    mbfa::SyntheticView out;
    out.name = v.value("name", fallback);
    out.dim = v.at("dim").get<std::size_t>();
    out.sigma = v.value("sigma", 0.0);
    out.latent_support = v.value("latent_support", std::vector<std::size_t>{});
    out.pure_noise = v.value("pure_noise", false);
    return out;
  };
  if (j.contains("visual")) s.visual = view(j.at("visual"), "visual");
  if (j.contains("side_info")) {
    s.side_info.clear();
    for (std::size_t k = 0; k < j.at("side_info").size(); ++k) {
      s.side_info.push_back(view(j.at("side_info")[k], "side_info_" + std::to_string(k)));
    }
  }
  return s;
}

int cmd_synth(const SynthFlags& f) {
  mbfa::SyntheticSpec spec = f.spec;
  if (!f.spec_file.empty()) {
    try {
      spec = spec_from_json(nlohmann::json::parse(mbfa::read_text_file(f.spec_file)));
    } catch (const nlohmann::json::exception& e) {
      throw mbfa::ParseError(f.spec_file + ": " + e.what());
    }
  } else {
    spec.latent_sigma = f.sigma;
    spec.visual.sigma = f.sigma;
    spec.side_info.clear();
    for (std::size_t k = 0; k < f.side_dims.size(); ++k) {
      mbfa::SyntheticView v{"side_info_" + std::to_string(k), f.side_dims[k], f.side_sigma, {}, false};
      if (f.complementary) {
        const std::size_t n = f.side_dims.size();
        for (std::size_t l = 0; l < spec.latent_dim; ++l)
          if (l * n / spec.latent_dim == k) v.latent_support.push_back(l);
      }
      spec.side_info.push_back(std::move(v));
    }
    for (auto k : f.noise_views) {
      if (k >= spec.side_info.size()) throw mbfa::RangeError("--noise-side index out of range");
      spec.side_info[k].pure_noise = true;
    }
  }
  const auto ds = mbfa::generate_synthetic(spec);
  mbfa::save_dataset(ds, f.out);
  std::cout << "wrote " << (fs::path(f.out) / "manifest.json").string() << " (" << ds.instance_count()
            << " instances, " << ds.class_count() << " classes, " << ds.side_info.size()
            << " side-information types)\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multi-battery factor analysis embeddings and zero-shot classification"};
  app.require_subcommand(1);

  RunConfig config;
  std::string config_file;
  std::map<std::string, CLI::App*> run_commands;
  std::map<std::string, std::pair<CLI::Option*, std::function<void(const nlohmann::json&)>>> keys;
  const std::vector<std::pair<std::string, std::string>> commands{
      {"fit", "Fit the embedding on the seen classes and write model.json"},
      {"evaluate", "Classify the unseen classes and write report.json and confusion.csv"},
      {"grid-search", "Choose fusion weights on a validation split of the seen classes"},
      {"sweep-d", "Evaluate a list of embedding dimensions and write sweep.csv"},
      {"bench", "Time fitting and per-image inference"}};
  for (const auto& [name, help] : commands) {
    auto* sub = app.add_subcommand(name, help);
    // Every subcommand binds the same RunConfig, so one key map serves all.
    auto k = add_run_flags(sub, config);
    sub->add_option("--config", config_file, "JSON run configuration; command-line flags take precedence");
    if (keys.empty()) keys = std::move(k);
    run_commands[name] = sub;
  }

  SynthFlags synth;
  auto* synth_cmd = app.add_subcommand("synth", "Write a synthetic multi-view zero-shot dataset");
  synth_cmd->add_option("--spec", synth.spec_file, "JSON generator spec (overrides the other flags)");
  synth_cmd->add_option("--out", synth.out, "Output directory")->capture_default_str();
  synth_cmd->add_option("--latent-dim", synth.spec.latent_dim)->capture_default_str();
  synth_cmd->add_option("--classes", synth.spec.class_count)->capture_default_str();
  synth_cmd->add_option("--unseen", synth.spec.unseen_count)->capture_default_str();
  synth_cmd->add_option("--instances", synth.spec.instances_per_class, "Instances per class")->capture_default_str();
  synth_cmd->add_option("--visual-dim", synth.spec.visual.dim)->capture_default_str();
  synth_cmd->add_option("--side-dims", synth.side_dims, "Dimension of each side-info type")->delimiter(',');
  synth_cmd->add_option("--sigma", synth.sigma, "Latent and visual noise")->capture_default_str();
  synth_cmd->add_option("--side-sigma", synth.side_sigma, "Class-level side-info noise")->capture_default_str();
  synth_cmd->add_option("--noise-side", synth.noise_views, "Side-info types replaced by pure noise")->delimiter(',');
  synth_cmd->add_flag("--complementary", synth.complementary, "Split the latent coordinates across side-info types");
  synth_cmd->add_option("--seed", synth.spec.seed)->capture_default_str();

  CLI11_PARSE(app, argc, argv);

  try {
    if (synth_cmd->parsed()) return cmd_synth(synth);

    CLI::App* active = nullptr;
    std::string name;
    for (const auto& [n, sub] : run_commands) {
      if (sub->parsed()) {
        active = sub;
        name = n;
      }
    }
    if (!config_file.empty()) {
      nlohmann::json j;
      try {
        j = nlohmann::json::parse(mbfa::read_text_file(config_file));
      } catch (const nlohmann::json::exception& e) {
        throw mbfa::ParseError(config_file + ": " + e.what());
      }
      for (const auto& [key, value] : j.items()) {
        const auto it = keys.find(key);
        if (it == keys.end()) throw mbfa::InvalidInputError(config_file + ": unknown key '" + key + "'");
        const std::string flag = it->second.first->get_name();
        if (active->get_option(flag)->count() == 0) {
          try {
            it->second.second(value);
          } catch (const nlohmann::json::exception& e) {
            throw mbfa::ParseError(config_file + ": bad value for '" + key + "': " + e.what());
          }
        }
      }
    }
    if (name == "fit") return cmd_fit(config);
    if (name == "evaluate") return cmd_evaluate(config);
    if (name == "grid-search") return cmd_grid_search(config);
    if (name == "sweep-d") return cmd_sweep_d(config);
    if (name == "bench") return cmd_bench(config);
  } catch (const mbfa::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
