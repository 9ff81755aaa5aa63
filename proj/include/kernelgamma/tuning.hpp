#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <exception>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "kernelgamma/dataset.hpp"
#include "kernelgamma/error.hpp"
#include "kernelgamma/kos.hpp"
#include "kernelgamma/parallel.hpp"
#include "kernelgamma/svm.hpp"

namespace kernelgamma::tuning {

enum class Method { kSvm, kKos };

inline const char* method_name(Method m) {
  return m == Method::kSvm ? "svm" : "kos";
}

inline Method parse_method(const std::string& name) {
  if (name == "svm") return Method::kSvm;
  if (name == "kos") return Method::kKos;
  throw data_error("unknown method '" + name + "' (expected svm or kos)");
}

inline std::vector<double> default_gamma_grid() {
  std::vector<double> g;
  for (int e = -15; e <= 3; e += 2) g.push_back(std::ldexp(1.0, e));
  return g;
}

inline std::vector<double> default_c_grid() {
  std::vector<double> g;
  for (int e = -5; e <= 15; e += 2) g.push_back(std::ldexp(1.0, e));
  return g;
}

/// Classifies one raw (unscaled) point into a class id.
using Predictor = std::function<int(PointView)>;

/// Builds a predictor from a raw training fold. Factories own their whole
/// pipeline, scaling included, so cross-validation cannot leak statistics
/// from validation folds into training.
using TrainerFactory = std::function<Predictor(const Dataset&)>;

/// Feature scaling target range; disengaged means train on raw features.
using ScaleRange = std::optional<std::pair<double, double>>;

struct GridSpec {
  std::vector<double> gamma_grid = default_gamma_grid();
  std::vector<double> c_grid = default_c_grid();
  int folds = 5;
  std::uint64_t seed = 0;
  ScaleRange scale_range = std::pair<double, double>{0.0, 1.0};
};

/// Model knobs held fixed across the grid.
struct ModelOptions {
  svm::TrainOptions svm_options;
  kos::Options kos_options;
};

namespace detail {

inline std::optional<ScalingSpec> fit_range(const Dataset& train,
                                            const ScaleRange& range) {
  if (!range) return std::nullopt;
  return fit_scaling(train, range->first, range->second);
}

}  // namespace detail

/// Trains a one-vs-one SVM after fitting the scaling range on the fold
/// (skipped when the range is disengaged). A capped solve keeps the carried
/// best-effort model and bumps *capped.
inline TrainerFactory make_svm_factory(double gamma, double c,
                                       const svm::TrainOptions& opts = {},
                                       const ScaleRange& range = std::pair<double, double>{0.0, 1.0},
                                       std::size_t* capped = nullptr) {
  return [gamma, c, opts, range, capped](const Dataset& train) -> Predictor {
    const std::optional<ScalingSpec> spec = detail::fit_range(train, range);
    const Dataset* use = &train;
    std::optional<Dataset> scaled;
    if (spec) {
      scaled = apply_scaling(train, *spec);
      use = &*scaled;
    }
    std::shared_ptr<const svm::MulticlassModel> model;
    try {
      model = std::make_shared<const svm::MulticlassModel>(
          svm::train_multiclass(*use, gamma, c, opts));
    } catch (const svm::nonconvergence_error& e) {
      model = std::make_shared<const svm::MulticlassModel>(*e.multiclass());
      if (capped) ++*capped;
    }
    return [model, spec](PointView x) {
      if (!spec) return svm::predict(*model, x);
      const std::vector<double> xs = scale_point(x, *spec);
      return svm::predict(*model, xs);
    };
  };
}

inline TrainerFactory make_kos_factory(double gamma,
                                       const kos::Options& opts = {},
                                       const ScaleRange& range = std::pair<double, double>{0.0, 1.0}) {
  return [gamma, opts, range](const Dataset& train) -> Predictor {
    const std::optional<ScalingSpec> spec = detail::fit_range(train, range);
    const Dataset* use = &train;
    std::optional<Dataset> scaled;
    if (spec) {
      scaled = apply_scaling(train, *spec);
      use = &*scaled;
    }
    auto model =
        std::make_shared<const kos::Model>(kos::fit(*use, gamma, opts));
    return [model, spec](PointView x) {
      if (!spec) return kos::predict(*model, x);
      const std::vector<double> xs = scale_point(x, *spec);
      return kos::predict(*model, xs);
    };
  };
}

/// Mean validation accuracy over seeded stratified folds. Fold membership
/// is assigned round-robin per class after a shuffle, so every fold sees
/// every class; classes smaller than the fold count are an error.
inline double cross_validate(const Dataset& ds, const TrainerFactory& factory,
                             int folds, std::uint64_t seed) {
  if (folds < 2) throw data_error("cross-validation needs at least 2 folds");
  for (int c = 0; c < ds.n_classes(); ++c)
    if (ds.class_members(c).size() < static_cast<std::size_t>(folds))
      throw data_error("class " + std::to_string(c) + " has fewer samples than folds");

  std::mt19937_64 rng(seed);
  std::vector<int> fold_of(ds.size(), 0);
  for (int c = 0; c < ds.n_classes(); ++c) {
    std::vector<std::size_t> members = ds.class_members(c);
    std::shuffle(members.begin(), members.end(), rng);
    for (std::size_t k = 0; k < members.size(); ++k)
      fold_of[members[k]] = static_cast<int>(k) % folds;
  }

  double score_sum = 0.0;
  for (int f = 0; f < folds; ++f) {
    std::vector<std::size_t> train_idx, val_idx;
    for (std::size_t i = 0; i < ds.size(); ++i)
      (fold_of[i] == f ? val_idx : train_idx).push_back(i);
    const Dataset train = ds.subset(train_idx);
    const Dataset val = ds.subset(val_idx);
    const Predictor predict = factory(train);
    std::size_t hits = 0;
    for (std::size_t i = 0; i < val.size(); ++i)
      if (predict(val.view(i)) == val[i].label) ++hits;
    score_sum += static_cast<double>(hits) / static_cast<double>(val.size());
  }
  return score_sum / static_cast<double>(folds);
}

struct GridResult {
  double gamma = 0.0;
  std::optional<double> c;  // absent for methods without a C knob
  double cv_score = -1.0;
  double elapsed_seconds = 0.0;
  std::size_t evaluations = 0;
  std::size_t capped = 0;
};

/// Exhaustive search over the gamma grid (and C grid for the SVM), scored by
/// cross_validate. Cells are evaluated independently, possibly on worker
/// threads, each into its own slot; the merge then walks the slots in
/// ascending (gamma, C) order and moves the best cell only on a strictly
/// better score. Ties therefore resolve to the smallest gamma, then the
/// smallest C, no matter how evaluation was scheduled.
inline GridResult grid_search(const Dataset& ds, Method method,
                              const GridSpec& spec,
                              const ModelOptions& options = {}) {
  if (spec.gamma_grid.empty()) throw data_error("gamma grid is empty");
  for (double g : spec.gamma_grid)
    if (!(g > 0.0)) throw data_error("gamma grid values must be > 0");
  std::vector<double> gammas = spec.gamma_grid;
  std::sort(gammas.begin(), gammas.end());

  std::vector<double> cs;
  if (method == Method::kSvm) {
    if (spec.c_grid.empty()) throw data_error("C grid is empty");
    for (double c : spec.c_grid)
      if (!(c > 0.0)) throw data_error("C grid values must be > 0");
    cs = spec.c_grid;
    std::sort(cs.begin(), cs.end());
  }

  struct Cell {
    double gamma = 0.0;
    std::optional<double> c;
    double score = -1.0;
    std::size_t capped = 0;
    std::exception_ptr failure;
  };
  std::vector<Cell> cells;
  for (double gamma : gammas) {
    if (method == Method::kSvm) {
      for (double c : cs) {
        Cell cell;
        cell.gamma = gamma;
        cell.c = c;
        cells.push_back(std::move(cell));
      }
    } else {
      Cell cell;
      cell.gamma = gamma;
      cells.push_back(std::move(cell));
    }
  }

  const auto start = std::chrono::steady_clock::now();
  const unsigned chunks = kernelgamma::detail::plan_chunks(cells.size(), 1);
  kernelgamma::detail::run_chunks(
      cells.size(), chunks,
      [&](unsigned, std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) {
          Cell& cell = cells[i];
          try {
            const TrainerFactory factory =
                method == Method::kSvm
                    ? make_svm_factory(cell.gamma, *cell.c, options.svm_options,
                                       spec.scale_range, &cell.capped)
                    : make_kos_factory(cell.gamma, options.kos_options,
                                       spec.scale_range);
            cell.score = cross_validate(ds, factory, spec.folds, spec.seed);
          } catch (...) {
            cell.failure = std::current_exception();
          }
        }
      });

  GridResult best;
  for (const Cell& cell : cells) {
    if (cell.failure) std::rethrow_exception(cell.failure);
    ++best.evaluations;
    best.capped += cell.capped;
    if (cell.score > best.cv_score) {
      best.cv_score = cell.score;
      best.gamma = cell.gamma;
      best.c = cell.c;
    }
  }
  best.elapsed_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
          .count();
  return best;
}

}  // namespace kernelgamma::tuning
