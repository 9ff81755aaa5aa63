// Command line front end: estimate-gamma, geometry, train, predict, tune,
// bench. Exit codes: 0 success, 1 usage, 2 data error, 3 numerical error.

#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "kernelgamma/kernelgamma.hpp"

namespace kg = kernelgamma;
using nlohmann::json;

namespace {

struct usage_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

kg::tuning::ScaleRange parse_scale_range(const std::string& text) {
  if (text == "none") return std::nullopt;
  const std::size_t colon = text.find(':');
  double lo = 0.0, hi = 0.0;
  if (colon == std::string::npos ||
      !kg::detail::parse_number(std::string_view(text).substr(0, colon), lo) ||
      !kg::detail::parse_number(std::string_view(text).substr(colon + 1), hi) ||
      !(lo < hi))
    throw usage_error("--scale-range expects lo:hi with lo < hi, or none");
  return std::pair<double, double>{lo, hi};
}

std::vector<double> parse_number_list(const std::string& text,
                                      const std::string& flag) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    double v = 0.0;
    if (!kg::detail::parse_number(tok, v))
      throw usage_error(flag + " expects a comma-separated number list");
    out.push_back(v);
  }
  if (out.empty()) throw usage_error(flag + " is empty");
  return out;
}

std::vector<std::uint64_t> parse_seed_list(const std::string& text) {
  std::vector<std::uint64_t> out;
  for (double v : parse_number_list(text, "--seeds")) {
    if (v < 0 || v != static_cast<double>(static_cast<std::uint64_t>(v)))
      throw usage_error("--seeds expects non-negative integers");
    out.push_back(static_cast<std::uint64_t>(v));
  }
  return out;
}

void write_output(const std::string& out, const std::string& text) {
  if (out.empty() || out == "-") {
    std::cout << text;
    return;
  }
  std::ofstream f(out);
  if (!f) throw kg::data_error("cannot write file '" + out + "'");
  f << text;
}

// Options shared by the data-consuming subcommands.
struct InputArgs {
  std::string input;
  std::string format = "auto";
  std::size_t label_column = 0;

  void attach(CLI::App* cmd, bool required = true) {
    auto* opt = cmd->add_option("--input", input, "dataset file");
    if (required) opt->required();
    cmd->add_option("--format", format,
                    "input format: auto, libsvm, csv, json");
    cmd->add_option("--label-column", label_column,
                    "label column for csv input (0-based)");
  }

  kg::Dataset load() const {
    return kg::io::load_dataset(input, format, label_column);
  }
};

kg::dmm::Variant parse_variant(const std::string& name) {
  if (name == "min") return kg::dmm::Variant::kMin;
  if (name == "avg") return kg::dmm::Variant::kAvg;
  throw usage_error("--gamma-variant expects min or avg");
}

json geometry_to_json(const kg::geometry::ClassGeometry& g) {
  return json{{"diameters", g.diameters},
              {"pair_distances", g.pair_distances},
              {"D_max", g.d_max},
              {"d_min", g.d_min_interclass},
              {"d_av", g.d_av},
              {"t_pairs", g.t_pairs}};
}

int run(CLI::App& app, int argc, char** argv) {
  // ---- estimate-gamma ----
  auto* cmd_estimate = app.add_subcommand(
      "estimate-gamma", "compute the kernel parameter from class geometry");
  InputArgs est_in;
  est_in.attach(cmd_estimate);
  std::string est_scale = "0:1", est_variant = "avg", est_out;
  std::uint64_t est_seed = 0;
  std::size_t est_cap = 0;
  cmd_estimate->add_option("--scale-range", est_scale, "lo:hi or none");
  cmd_estimate->add_option("--gamma-variant", est_variant, "min or avg");
  cmd_estimate->add_option("--subsample-cap", est_cap,
                           "max points per class in the geometry scan");
  cmd_estimate->add_option("--seed", est_seed, "subsample seed");
  cmd_estimate->add_option("--out", est_out, "output file (default stdout)");

  // ---- geometry ----
  auto* cmd_geometry =
      app.add_subcommand("geometry", "dump the class-geometry summary");
  InputArgs geo_in;
  geo_in.attach(cmd_geometry);
  std::string geo_scale = "0:1", geo_out;
  std::uint64_t geo_seed = 0;
  std::size_t geo_cap = 0;
  cmd_geometry->add_option("--scale-range", geo_scale, "lo:hi or none");
  cmd_geometry->add_option("--subsample-cap", geo_cap,
                           "max points per class in the geometry scan");
  cmd_geometry->add_option("--seed", geo_seed, "subsample seed");
  cmd_geometry->add_option("--out", geo_out, "output file (default stdout)");

  // ---- train ----
  auto* cmd_train = app.add_subcommand("train", "train a classifier");
  InputArgs train_in;
  train_in.attach(cmd_train);
  std::string train_method, train_scale = "0:1", train_variant = "avg";
  std::string train_out;
  std::optional<double> train_gamma, train_c;
  double train_factor = 2.0, train_eig_tol = 1e-10, train_tol = 1e-3;
  std::size_t train_max_iter = 100000;
  std::uint64_t train_seed = 0;
  cmd_train->add_option("--method", train_method, "svm or kos")->required();
  cmd_train->add_option("--gamma", train_gamma,
                        "kernel parameter (omit to estimate from geometry)");
  cmd_train->add_option("--C", train_c, "soft-margin cost (svm)");
  cmd_train->add_option("--gamma-variant", train_variant, "min or avg");
  cmd_train->add_option("--imbalance-factor", train_factor,
                        "kos subclass splitting threshold");
  cmd_train->add_option("--eig-tol", train_eig_tol,
                        "kos relative eigenvalue cutoff");
  cmd_train->add_option("--tol", train_tol, "svm stopping tolerance");
  cmd_train->add_option("--max-iter", train_max_iter, "svm update cap");
  cmd_train->add_option("--seed", train_seed, "kos shuffle seed");
  cmd_train->add_option("--scale-range", train_scale, "lo:hi or none");
  cmd_train->add_option("--out", train_out, "model file")->required();

  // ---- predict ----
  auto* cmd_predict =
      app.add_subcommand("predict", "apply a saved model to a dataset");
  InputArgs pred_in;
  pred_in.attach(cmd_predict);
  std::string pred_model, pred_out;
  cmd_predict->add_option("--model", pred_model, "model file")->required();
  cmd_predict->add_option("--out", pred_out, "output file (default stdout)");

  // ---- tune ----
  auto* cmd_tune =
      app.add_subcommand("tune", "grid-search the kernel parameter by CV");
  InputArgs tune_in;
  tune_in.attach(cmd_tune);
  std::string tune_method, tune_scale = "0:1", tune_gammas, tune_cs, tune_out;
  int tune_folds = 5;
  std::uint64_t tune_seed = 0;
  double tune_factor = 2.0, tune_eig_tol = 1e-10, tune_tol = 1e-3;
  std::size_t tune_max_iter = 100000;
  cmd_tune->add_option("--method", tune_method, "svm or kos")->required();
  cmd_tune->add_option("--folds", tune_folds, "cross-validation folds");
  cmd_tune->add_option("--seed", tune_seed, "fold assignment seed");
  cmd_tune->add_option("--gamma-grid", tune_gammas,
                       "comma-separated gamma values");
  cmd_tune->add_option("--c-grid", tune_cs, "comma-separated C values");
  cmd_tune->add_option("--scale-range", tune_scale, "lo:hi or none");
  cmd_tune->add_option("--imbalance-factor", tune_factor,
                       "kos subclass splitting threshold");
  cmd_tune->add_option("--eig-tol", tune_eig_tol,
                       "kos relative eigenvalue cutoff");
  cmd_tune->add_option("--tol", tune_tol, "svm stopping tolerance");
  cmd_tune->add_option("--max-iter", tune_max_iter, "svm update cap");
  cmd_tune->add_option("--out", tune_out, "output file (default stdout)");

  // ---- bench ----
  auto* cmd_bench = app.add_subcommand(
      "bench", "compare geometry-derived and grid-searched kernel parameters");
  InputArgs bench_in;
  bench_in.attach(cmd_bench, /*required=*/false);
  std::string bench_config, bench_method = "both", bench_mode = "both";
  std::string bench_seeds = "1", bench_scale = "0:1", bench_variant = "avg";
  std::string bench_format = "json", bench_out, bench_name;
  double bench_test_fraction = 0.3;
  int bench_folds = 5;
  cmd_bench->add_option("--config", bench_config, "benchmark config JSON");
  cmd_bench->add_option("--name", bench_name,
                        "dataset display name for --input runs");
  cmd_bench->add_option("--method", bench_method, "svm, kos, or both");
  cmd_bench->add_option("--mode", bench_mode, "learning, dmm, or both");
  cmd_bench->add_option("--seeds", bench_seeds, "comma-separated run seeds");
  cmd_bench->add_option("--test-fraction", bench_test_fraction,
                        "held-out fraction per class");
  cmd_bench->add_option("--folds", bench_folds, "cross-validation folds");
  cmd_bench->add_option("--scale-range", bench_scale, "lo:hi or none");
  cmd_bench->add_option("--gamma-variant", bench_variant, "min or avg");
  cmd_bench->add_option("--report-format", bench_format,
                        "json, csv, or markdown");
  cmd_bench->add_option("--out", bench_out, "output file (default stdout)");

  app.require_subcommand(1);
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  if (cmd_estimate->parsed()) {
    kg::Dataset ds = est_in.load();
    const kg::tuning::ScaleRange range = parse_scale_range(est_scale);
    if (range) ds = apply_scaling(ds, fit_scaling(ds, range->first, range->second));
    const auto geo =
        kg::geometry::compute_geometry(ds, {est_cap, est_seed});
    const auto est = kg::dmm::estimate(geo, parse_variant(est_variant));
    const json out{{"gamma", est.gamma},
                   {"sigma", est.sigma},
                   {"D_max", geo.d_max},
                   {"d_min", geo.d_min_interclass},
                   {"d_av", geo.d_av},
                   {"variant", kg::dmm::variant_name(est.variant)}};
    write_output(est_out, out.dump(2) + "\n");
    return 0;
  }

  if (cmd_geometry->parsed()) {
    kg::Dataset ds = geo_in.load();
    const kg::tuning::ScaleRange range = parse_scale_range(geo_scale);
    if (range) ds = apply_scaling(ds, fit_scaling(ds, range->first, range->second));
    const auto geo =
        kg::geometry::compute_geometry(ds, {geo_cap, geo_seed});
    write_output(geo_out, geometry_to_json(geo).dump(2) + "\n");
    return 0;
  }

  if (cmd_train->parsed()) {
    const kg::tuning::Method method = kg::tuning::parse_method(train_method);
    if (method == kg::tuning::Method::kSvm && !train_c)
      throw usage_error("svm training needs --C");

    const kg::Dataset raw = train_in.load();
    const kg::tuning::ScaleRange range = parse_scale_range(train_scale);
    kg::io::SavedModel saved;
    saved.method = method;
    saved.original_labels = raw.original_labels();

    std::optional<kg::Dataset> scaled;
    if (range) {
      saved.scaling = fit_scaling(raw, range->first, range->second);
      scaled = apply_scaling(raw, *saved.scaling);
    }
    const kg::Dataset& train = scaled ? *scaled : raw;

    double gamma;
    if (train_gamma) {
      gamma = *train_gamma;
    } else {
      const auto geo = kg::geometry::compute_geometry(train);
      gamma = kg::dmm::estimate(geo, parse_variant(train_variant)).gamma;
    }
    saved.gamma = gamma;

    if (method == kg::tuning::Method::kSvm) {
      saved.c = *train_c;
      kg::svm::TrainOptions opts{train_tol, train_max_iter};
      saved.svm_model = kg::svm::train_multiclass(train, gamma, *train_c, opts);
    } else {
      kg::kos::Options opts;
      opts.imbalance_factor = train_factor;
      opts.seed = train_seed;
      opts.eig_tol = train_eig_tol;
      saved.kos_model = kg::kos::fit(train, gamma, opts);
    }
    kg::io::save_model(saved, train_out);

    json summary{{"method", kg::tuning::method_name(method)},
                 {"gamma", gamma},
                 {"n_classes", raw.n_classes()},
                 {"n_samples", raw.size()},
                 {"out", train_out}};
    summary["c"] = saved.c ? json(*saved.c) : json();
    std::cout << summary.dump(2) << "\n";
    return 0;
  }

  if (cmd_predict->parsed()) {
    const kg::io::SavedModel model = kg::io::load_model(pred_model);
    const kg::Dataset ds = pred_in.load();

    json predictions = json::array();
    std::vector<int> pred_ids;
    std::vector<int> truth_ids;
    bool vocab_covered = true;
    for (std::size_t i = 0; i < ds.size(); ++i) {
      const int id = kg::io::predict_id(model, ds.view(i));
      pred_ids.push_back(id);
      predictions.push_back(model.original_labels[static_cast<std::size_t>(id)]);

      const double truth = ds.original_label(ds[i].label);
      int truth_id = -1;
      for (std::size_t k = 0; k < model.original_labels.size(); ++k)
        if (model.original_labels[k] == truth) truth_id = static_cast<int>(k);
      if (truth_id < 0) vocab_covered = false;
      truth_ids.push_back(truth_id);
    }

    json out{{"predictions", std::move(predictions)},
             {"n", ds.size()}};
    if (vocab_covered) {
      out["accuracy"] = kg::bench::accuracy(pred_ids, truth_ids);
      out["macro_precision"] = kg::bench::macro_precision(
          pred_ids, truth_ids,
          static_cast<int>(model.original_labels.size()));
    } else {
      out["accuracy"] = json();
      out["macro_precision"] = json();
    }
    write_output(pred_out, out.dump(2) + "\n");
    return 0;
  }

  if (cmd_tune->parsed()) {
    const kg::tuning::Method method = kg::tuning::parse_method(tune_method);
    const kg::Dataset ds = tune_in.load();

    kg::tuning::GridSpec spec;
    spec.folds = tune_folds;
    spec.seed = tune_seed;
    spec.scale_range = parse_scale_range(tune_scale);
    if (!tune_gammas.empty())
      spec.gamma_grid = parse_number_list(tune_gammas, "--gamma-grid");
    if (!tune_cs.empty()) spec.c_grid = parse_number_list(tune_cs, "--c-grid");

    kg::tuning::ModelOptions mopts;
    mopts.svm_options = {tune_tol, tune_max_iter};
    mopts.kos_options.imbalance_factor = tune_factor;
    mopts.kos_options.eig_tol = tune_eig_tol;
    mopts.kos_options.seed = tune_seed;

    const auto best = kg::tuning::grid_search(ds, method, spec, mopts);
    json out{{"method", kg::tuning::method_name(method)},
             {"gamma", best.gamma},
             {"cv_score", best.cv_score},
             {"elapsed_seconds", best.elapsed_seconds},
             {"evaluations", best.evaluations},
             {"capped", best.capped}};
    out["c"] = best.c ? json(*best.c) : json();
    write_output(tune_out, out.dump(2) + "\n");
    return 0;
  }

  // bench
  kg::bench::BenchConfig config;
  if (!bench_config.empty()) {
    config = kg::bench::load_bench_config(bench_config);
  } else if (!bench_in.input.empty()) {
    kg::bench::SourceSpec src;
    src.name = bench_name.empty() ? bench_in.input : bench_name;
    src.path = bench_in.input;
    src.format = bench_in.format;
    src.label_column = bench_in.label_column;
    config.datasets.push_back(std::move(src));
  } else {
    throw usage_error("bench needs --config or --input");
  }

  const auto* as_parsed = cmd_bench;
  if (as_parsed->count("--method") || bench_config.empty()) {
    if (bench_method == "both")
      config.methods = {kg::tuning::Method::kSvm, kg::tuning::Method::kKos};
    else
      config.methods = {kg::tuning::parse_method(bench_method)};
  }
  if (as_parsed->count("--mode") || bench_config.empty()) {
    if (bench_mode == "both")
      config.modes = {kg::bench::Mode::kLearning, kg::bench::Mode::kDmm};
    else
      config.modes = {kg::bench::parse_mode(bench_mode)};
  }
  if (as_parsed->count("--seeds") || bench_config.empty())
    config.seeds = parse_seed_list(bench_seeds);
  if (as_parsed->count("--test-fraction") || bench_config.empty())
    config.test_fraction = bench_test_fraction;
  if (as_parsed->count("--folds") || bench_config.empty())
    config.grid.folds = bench_folds;
  if (as_parsed->count("--scale-range") || bench_config.empty())
    config.grid.scale_range = parse_scale_range(bench_scale);
  if (as_parsed->count("--gamma-variant") || bench_config.empty())
    config.variant = parse_variant(bench_variant);

  const auto reports = kg::bench::run_benchmark(config);
  write_output(bench_out, kg::bench::emit_report(reports, bench_format));
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"analytic RBF kernel parameter estimation, kernel subspace "
               "classification, and benchmarking"};
  try {
    return run(app, argc, argv);
  } catch (const usage_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const kg::data_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const kg::numerical_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
}
