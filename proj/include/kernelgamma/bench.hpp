#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "kernelgamma/dataset.hpp"
#include "kernelgamma/dmm.hpp"
#include "kernelgamma/error.hpp"
#include "kernelgamma/geometry.hpp"
#include "kernelgamma/kos.hpp"
#include "kernelgamma/serialize.hpp"
#include "kernelgamma/svm.hpp"
#include "kernelgamma/synthetic.hpp"
#include "kernelgamma/tuning.hpp"

namespace kernelgamma::bench {

inline double accuracy(const std::vector<int>& pred,
                       const std::vector<int>& truth) {
  if (pred.size() != truth.size())
    throw data_error("prediction and truth lengths differ");
  if (pred.empty()) throw data_error("nothing to score");
  std::size_t hits = 0;
  for (std::size_t i = 0; i < pred.size(); ++i)
    if (pred[i] == truth[i]) ++hits;
  return static_cast<double>(hits) / static_cast<double>(pred.size());
}

/// Unweighted mean over classes of TP / (TP + FP). A class that was never
/// predicted contributes 0.
inline double macro_precision(const std::vector<int>& pred,
                              const std::vector<int>& truth, int n_classes) {
  if (pred.size() != truth.size())
    throw data_error("prediction and truth lengths differ");
  if (pred.empty()) throw data_error("nothing to score");
  if (n_classes < 1) throw data_error("need at least one class");
  std::vector<std::size_t> tp(static_cast<std::size_t>(n_classes), 0);
  std::vector<std::size_t> predicted(static_cast<std::size_t>(n_classes), 0);
  for (std::size_t i = 0; i < pred.size(); ++i) {
    if (pred[i] < 0 || pred[i] >= n_classes || truth[i] < 0 ||
        truth[i] >= n_classes)
      throw data_error("class id out of range");
    ++predicted[static_cast<std::size_t>(pred[i])];
    if (pred[i] == truth[i]) ++tp[static_cast<std::size_t>(pred[i])];
  }
  double acc = 0.0;
  for (int c = 0; c < n_classes; ++c) {
    const auto k = static_cast<std::size_t>(c);
    if (predicted[k] > 0)
      acc += static_cast<double>(tp[k]) / static_cast<double>(predicted[k]);
  }
  return acc / static_cast<double>(n_classes);
}

/// How the kernel parameter is chosen: LEARNING tunes it by grid search,
/// DMM computes it from class geometry and only tunes what remains (the SVM
/// cost parameter).
enum class Mode { kLearning, kDmm };

inline const char* mode_name(Mode m) {
  return m == Mode::kLearning ? "learning" : "dmm";
}

inline Mode parse_mode(const std::string& name) {
  if (name == "learning") return Mode::kLearning;
  if (name == "dmm") return Mode::kDmm;
  throw data_error("unknown mode '" + name + "' (expected learning or dmm)");
}

/// One evaluated (dataset, method, mode, seed) cell.
struct EvalReport {
  std::string dataset;
  tuning::Method method = tuning::Method::kSvm;
  Mode mode = Mode::kLearning;
  double gamma = 0.0;
  std::optional<double> c;
  std::optional<double> cv_score;
  double accuracy = 0.0;
  double macro_precision = 0.0;
  double tune_seconds = 0.0;
  double train_seconds = 0.0;
  double predict_seconds = 0.0;
  std::uint64_t seed = 0;
  std::optional<double> scale_lo = 0.0;  // absent when training ran unscaled
  std::optional<double> scale_hi = 1.0;
  dmm::Variant variant = dmm::Variant::kAvg;
  bool capped = false;
  std::size_t train_size = 0;
  std::size_t test_size = 0;
  int n_classes = 0;
};

/// One input dataset: either a file (libsvm/csv/json, `auto` picks by
/// extension) or a synthetic blob mixture. Blob draws are re-seeded per run
/// seed so replicated runs see fresh noise.
struct SourceSpec {
  std::string name;
  std::string path;
  std::string format = "auto";
  std::size_t label_column = 0;
  std::optional<synth::BlobsSpec> blobs;
};

struct BenchConfig {
  std::vector<SourceSpec> datasets;
  std::vector<tuning::Method> methods{tuning::Method::kSvm,
                                      tuning::Method::kKos};
  std::vector<Mode> modes{Mode::kLearning, Mode::kDmm};
  std::vector<std::uint64_t> seeds{1};
  double test_fraction = 0.3;
  tuning::GridSpec grid;
  dmm::Variant variant = dmm::Variant::kAvg;
  svm::TrainOptions svm_options;
  kos::Options kos_options;
};

namespace detail {

inline Dataset load_source(const SourceSpec& src, std::uint64_t run_seed) {
  if (src.blobs) {
    synth::BlobsSpec spec = *src.blobs;
    spec.seed ^= run_seed * 0x9e3779b97f4a7c15ULL;
    return synth::make_blobs(spec);
  }
  if (src.path.empty())
    throw data_error("dataset '" + src.name + "' has neither path nor blobs");
  return io::load_dataset(src.path, src.format, src.label_column);
}

struct Timer {
  std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();
  double lap() {
    const auto t1 = std::chrono::steady_clock::now();
    const double s = std::chrono::duration<double>(t1 - t0).count();
    t0 = t1;
    return s;
  }
};

}  // namespace detail

/// Runs every (dataset, seed, method, mode) combination sequentially and in
/// that nesting order. Deterministic apart from the *_seconds fields.
inline std::vector<EvalReport> run_benchmark(const BenchConfig& config) {
  if (config.datasets.empty()) throw data_error("benchmark has no datasets");
  if (config.methods.empty()) throw data_error("benchmark has no methods");
  if (config.modes.empty()) throw data_error("benchmark has no modes");
  if (config.seeds.empty()) throw data_error("benchmark has no seeds");

  std::vector<EvalReport> reports;
  for (const SourceSpec& src : config.datasets) {
    for (std::uint64_t seed : config.seeds) {
      const Dataset full = detail::load_source(src, seed);
      const auto [train, test] =
          stratified_split(full, config.test_fraction, seed);

      for (tuning::Method method : config.methods) {
        for (Mode mode : config.modes) {
          EvalReport r;
          r.dataset = src.name.empty() ? src.path : src.name;
          r.method = method;
          r.mode = mode;
          r.seed = seed;
          if (config.grid.scale_range) {
            r.scale_lo = config.grid.scale_range->first;
            r.scale_hi = config.grid.scale_range->second;
          } else {
            r.scale_lo.reset();
            r.scale_hi.reset();
          }
          r.variant = config.variant;
          r.train_size = train.size();
          r.test_size = test.size();
          r.n_classes = full.n_classes();

          tuning::GridSpec spec = config.grid;
          spec.seed = seed;
          tuning::ModelOptions mopts{config.svm_options, config.kos_options};
          mopts.kos_options.seed = seed;

          detail::Timer timer;
          if (mode == Mode::kLearning) {
            const tuning::GridResult best =
                tuning::grid_search(train, method, spec, mopts);
            r.gamma = best.gamma;
            r.c = best.c;
            r.cv_score = best.cv_score;
            r.capped = best.capped > 0;
          } else {
            std::optional<Dataset> prescaled;
            if (spec.scale_range)
              prescaled = apply_scaling(
                  train, fit_scaling(train, spec.scale_range->first,
                                     spec.scale_range->second));
            const geometry::ClassGeometry geo =
                geometry::compute_geometry(prescaled ? *prescaled : train);
            const dmm::Estimate est = dmm::estimate(geo, config.variant);
            r.gamma = est.gamma;
            if (method == tuning::Method::kSvm) {
              spec.gamma_grid = {est.gamma};
              const tuning::GridResult best =
                  tuning::grid_search(train, method, spec, mopts);
              r.c = best.c;
              r.cv_score = best.cv_score;
              r.capped = best.capped > 0;
            }
          }
          r.tune_seconds = timer.lap();

          // Final model on the full training split, same factory path the
          // search scored.
          std::size_t capped_final = 0;
          tuning::TrainerFactory factory =
              method == tuning::Method::kSvm
                  ? tuning::make_svm_factory(r.gamma, r.c.value_or(1.0),
                                             config.svm_options,
                                             spec.scale_range, &capped_final)
                  : tuning::make_kos_factory(r.gamma, mopts.kos_options,
                                             spec.scale_range);
          const tuning::Predictor predict = factory(train);
          r.capped = r.capped || capped_final > 0;
          r.train_seconds = timer.lap();

          std::vector<int> pred(test.size()), truth(test.size());
          for (std::size_t i = 0; i < test.size(); ++i) {
            pred[i] = predict(test.view(i));
            truth[i] = test[i].label;
          }
          r.predict_seconds = timer.lap();
          r.accuracy = accuracy(pred, truth);
          r.macro_precision = macro_precision(pred, truth, full.n_classes());
          reports.push_back(std::move(r));
        }
      }
    }
  }
  return reports;
}

enum class ReportFormat { kJson, kCsv, kMarkdown };

inline ReportFormat parse_report_format(const std::string& name) {
  if (name == "json") return ReportFormat::kJson;
  if (name == "csv") return ReportFormat::kCsv;
  if (name == "markdown") return ReportFormat::kMarkdown;
  throw data_error("unknown report format '" + name +
                   "' (expected json, csv, or markdown)");
}

namespace detail {

inline nlohmann::json to_json(const EvalReport& r) {
  nlohmann::json j{
      {"dataset", r.dataset},
      {"method", tuning::method_name(r.method)},
      {"mode", mode_name(r.mode)},
      {"gamma", r.gamma},
      {"accuracy", r.accuracy},
      {"macro_precision", r.macro_precision},
      {"tune_seconds", r.tune_seconds},
      {"train_seconds", r.train_seconds},
      {"predict_seconds", r.predict_seconds},
      {"seed", r.seed},
      {"variant", dmm::variant_name(r.variant)},
      {"capped", r.capped},
      {"train_size", r.train_size},
      {"test_size", r.test_size},
      {"n_classes", r.n_classes},
  };
  j["c"] = r.c ? nlohmann::json(*r.c) : nlohmann::json();
  j["cv_score"] = r.cv_score ? nlohmann::json(*r.cv_score) : nlohmann::json();
  j["scale_lo"] = r.scale_lo ? nlohmann::json(*r.scale_lo) : nlohmann::json();
  j["scale_hi"] = r.scale_hi ? nlohmann::json(*r.scale_hi) : nlohmann::json();
  return j;
}

inline std::string csv_number(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

inline std::string percent(double v) {
  std::ostringstream os;
  os.setf(std::ios::fixed);
  os.precision(2);
  os << 100.0 * v << "%";
  return os.str();
}

}  // namespace detail

/// Serializes reports. JSON: one object for a single report, else an array.
/// CSV: fixed header, one row per report, empty cells for absent optionals.
/// Markdown: one section per method, one row per dataset with the two modes
/// side by side (averaged over seeds).
inline std::string emit_report(const std::vector<EvalReport>& reports,
                               ReportFormat format) {
  if (format == ReportFormat::kJson) {
    if (reports.size() == 1) return detail::to_json(reports.front()).dump(2) + "\n";
    nlohmann::json arr = nlohmann::json::array();
    for (const EvalReport& r : reports) arr.push_back(detail::to_json(r));
    return arr.dump(2) + "\n";
  }

  if (format == ReportFormat::kCsv) {
    std::string out =
        "dataset,method,mode,gamma,c,cv_score,accuracy,macro_precision,"
        "tune_seconds,train_seconds,predict_seconds,seed,scale_lo,scale_hi,"
        "variant,capped,train_size,test_size,n_classes\n";
    for (const EvalReport& r : reports) {
      out += r.dataset;
      out += ',';
      out += tuning::method_name(r.method);
      out += ',';
      out += mode_name(r.mode);
      out += ',';
      out += detail::csv_number(r.gamma);
      out += ',';
      if (r.c) out += detail::csv_number(*r.c);
      out += ',';
      if (r.cv_score) out += detail::csv_number(*r.cv_score);
      out += ',';
      out += detail::csv_number(r.accuracy);
      out += ',';
      out += detail::csv_number(r.macro_precision);
      out += ',';
      out += detail::csv_number(r.tune_seconds);
      out += ',';
      out += detail::csv_number(r.train_seconds);
      out += ',';
      out += detail::csv_number(r.predict_seconds);
      out += ',';
      out += std::to_string(r.seed);
      out += ',';
      if (r.scale_lo) out += detail::csv_number(*r.scale_lo);
      out += ',';
      if (r.scale_hi) out += detail::csv_number(*r.scale_hi);
      out += ',';
      out += dmm::variant_name(r.variant);
      out += ',';
      out += r.capped ? "true" : "false";
      out += ',';
      out += std::to_string(r.train_size);
      out += ',';
      out += std::to_string(r.test_size);
      out += ',';
      out += std::to_string(r.n_classes);
      out += '\n';
    }
    return out;
  }

  // Markdown: one row per dataset, one paired "acc | prec" column per mode
  // (seed means), grouped into a section per method.
  struct Cell {
    double acc_sum = 0.0, prec_sum = 0.0;
    std::size_t n = 0;
  };
  std::vector<std::string> datasets;
  for (const EvalReport& r : reports)
    if (std::find(datasets.begin(), datasets.end(), r.dataset) == datasets.end())
      datasets.push_back(r.dataset);

  std::string out;
  for (tuning::Method method : {tuning::Method::kSvm, tuning::Method::kKos}) {
    bool any = false;
    for (const EvalReport& r : reports) any = any || r.method == method;
    if (!any) continue;
    out += std::string("### ") + tuning::method_name(method) + "\n\n";
    out += "| dataset | learning (acc \\| prec) | dmm (acc \\| prec) |\n";
    out += "| --- | --- | --- |\n";
    for (const std::string& name : datasets) {
      Cell learn, dmm_cell;
      for (const EvalReport& r : reports) {
        if (r.dataset != name || r.method != method) continue;
        Cell& cell = r.mode == Mode::kLearning ? learn : dmm_cell;
        cell.acc_sum += r.accuracy;
        cell.prec_sum += r.macro_precision;
        ++cell.n;
      }
      auto fmt = [](const Cell& cell) {
        if (cell.n == 0) return std::string("-");
        const double n = static_cast<double>(cell.n);
        return detail::percent(cell.acc_sum / n) + " \\| " +
               detail::percent(cell.prec_sum / n);
      };
      out += "| " + name + " | " + fmt(learn) + " | " + fmt(dmm_cell) + " |\n";
    }
    out += "\n";
  }
  return out;
}

inline std::string emit_report(const std::vector<EvalReport>& reports,
                               const std::string& format) {
  return emit_report(reports, parse_report_format(format));
}

/// Reads a benchmark configuration from JSON. Every field is optional
/// except `datasets`; defaults match the BenchConfig initializers.
inline BenchConfig parse_bench_config(const nlohmann::json& j) {
  using io::detail::field;
  using io::detail::require;

  BenchConfig config;
  require(j.contains("datasets") && j.at("datasets").is_array() &&
              !j.at("datasets").empty(),
          "config needs a non-empty 'datasets' array");
  for (const auto& dj : j.at("datasets")) {
    SourceSpec src;
    if (dj.contains("name")) src.name = field<std::string>(dj, "name");
    if (dj.contains("path")) src.path = field<std::string>(dj, "path");
    if (dj.contains("format")) src.format = field<std::string>(dj, "format");
    if (dj.contains("label_column"))
      src.label_column = field<std::size_t>(dj, "label_column");
    if (dj.contains("blobs")) {
      const auto& bj = dj.at("blobs");
      synth::BlobsSpec blobs;
      blobs.centers =
          field<std::vector<std::vector<double>>>(bj, "centers");
      if (bj.contains("stddev")) blobs.stddev = field<double>(bj, "stddev");
      if (bj.contains("points_per_class"))
        blobs.points_per_class = field<std::size_t>(bj, "points_per_class");
      if (bj.contains("seed")) blobs.seed = field<std::uint64_t>(bj, "seed");
      src.blobs = std::move(blobs);
    }
    require(!src.path.empty() || src.blobs.has_value(),
            "each dataset needs a 'path' or a 'blobs' block");
    config.datasets.push_back(std::move(src));
  }

  if (j.contains("methods")) {
    config.methods.clear();
    for (const auto& mj : j.at("methods"))
      config.methods.push_back(tuning::parse_method(mj.get<std::string>()));
  }
  if (j.contains("modes")) {
    config.modes.clear();
    for (const auto& mj : j.at("modes"))
      config.modes.push_back(parse_mode(mj.get<std::string>()));
  }
  if (j.contains("seeds"))
    config.seeds = field<std::vector<std::uint64_t>>(j, "seeds");
  if (j.contains("test_fraction"))
    config.test_fraction = field<double>(j, "test_fraction");
  if (j.contains("folds")) config.grid.folds = field<int>(j, "folds");
  if (j.contains("gamma_grid"))
    config.grid.gamma_grid = field<std::vector<double>>(j, "gamma_grid");
  if (j.contains("c_grid"))
    config.grid.c_grid = field<std::vector<double>>(j, "c_grid");
  if (j.contains("scale_range")) {
    if (j.at("scale_range").is_null()) {
      config.grid.scale_range = std::nullopt;
    } else {
      const auto range = field<std::vector<double>>(j, "scale_range");
      require(range.size() == 2, "'scale_range' needs exactly [lo, hi]");
      config.grid.scale_range = std::pair<double, double>{range[0], range[1]};
    }
  }
  if (j.contains("variant")) {
    const auto name = field<std::string>(j, "variant");
    if (name == "min")
      config.variant = dmm::Variant::kMin;
    else if (name == "avg")
      config.variant = dmm::Variant::kAvg;
    else
      throw data_error("unknown variant '" + name + "' (expected min or avg)");
  }
  if (j.contains("svm")) {
    const auto& sj = j.at("svm");
    if (sj.contains("tol")) config.svm_options.tol = field<double>(sj, "tol");
    if (sj.contains("max_iter"))
      config.svm_options.max_iter = field<std::size_t>(sj, "max_iter");
  }
  if (j.contains("kos")) {
    const auto& kj = j.at("kos");
    if (kj.contains("imbalance_factor"))
      config.kos_options.imbalance_factor =
          field<double>(kj, "imbalance_factor");
    if (kj.contains("shuffle"))
      config.kos_options.shuffle = field<bool>(kj, "shuffle");
    if (kj.contains("eig_tol"))
      config.kos_options.eig_tol = field<double>(kj, "eig_tol");
  }
  return config;
}

inline BenchConfig load_bench_config(const std::string& path) {
  return parse_bench_config(
      io::detail::parse_json_text(io::detail::slurp(path), path));
}

}  // namespace kernelgamma::bench
