#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "kernelgamma/dataset.hpp"
#include "kernelgamma/error.hpp"
#include "kernelgamma/kernel.hpp"

namespace kernelgamma::svm {

/// Soft-margin binary classifier in kernel expansion form:
/// f(x) = sum_i weights[i] * k(sv[i], x) + bias, sign decides the class.
/// weights[i] is y_i * alpha_i, so it carries the sign of the side the
/// support vector came from.
struct BinaryModel {
  std::vector<std::vector<double>> support_vectors;
  std::vector<double> weights;
  double bias = 0.0;
  double gamma = 0.0;
  double c = 0.0;
};

struct TrainOptions {
  double tol = 1e-3;            // stop when the max KKT violation gap closes
  std::size_t max_iter = 100000;  // pair updates before giving up
};

struct MulticlassModel {
  struct Pair {
    int pos_class = 0;
    int neg_class = 0;
    BinaryModel model;
  };
  std::vector<Pair> pairs;  // all (a, b) with a < b, ascending
  int n_classes = 0;
};

/// Thrown when the solver hits its update cap. Carries the best model found
/// so far; callers may keep it (grid search does) or treat this as fatal.
class nonconvergence_error : public numerical_error {
 public:
  nonconvergence_error(const std::string& what, BinaryModel best)
      : numerical_error(what),
        binary_(std::make_shared<const BinaryModel>(std::move(best))) {}
  nonconvergence_error(const std::string& what, MulticlassModel best)
      : numerical_error(what),
        multi_(std::make_shared<const MulticlassModel>(std::move(best))) {}

  const BinaryModel* binary() const noexcept { return binary_.get(); }
  const MulticlassModel* multiclass() const noexcept { return multi_.get(); }

 private:
  std::shared_ptr<const BinaryModel> binary_;
  std::shared_ptr<const MulticlassModel> multi_;
};

namespace detail {

constexpr std::size_t kGramCacheLimit = 4096;  // full cache up to this n

struct Problem {
  std::vector<PointView> points;
  std::vector<double> y;  // +1 / -1
};

inline BinaryModel extract_model(const Problem& prob,
                                 const std::vector<double>& beta, double bias,
                                 double gamma, double c) {
  BinaryModel m;
  m.bias = bias;
  m.gamma = gamma;
  m.c = c;
  for (std::size_t k = 0; k < beta.size(); ++k) {
    if (beta[k] == 0.0) continue;
    m.support_vectors.emplace_back(prob.points[k].begin(), prob.points[k].end());
    m.weights.push_back(beta[k]);
  }
  return m;
}

}  // namespace detail

/// Trains on two point sets with labels +1 (pos) and -1 (neg) by working on
/// the signed dual variables beta_k = y_k alpha_k, box-constrained to
/// [0, C] or [-C, 0] by side. Each step picks the maximal violating pair and
/// moves mass between them; the gradient of the dual objective is kept
/// incrementally. Stops when the violation gap drops to `tol`; after
/// `max_iter` updates it throws, carrying the model built from the current
/// iterate.
inline BinaryModel train_binary(const std::vector<PointView>& pos,
                                const std::vector<PointView>& neg,
                                double gamma, double c,
                                const TrainOptions& opts = {}) {
  if (pos.empty() || neg.empty())
    throw data_error("both classes need at least one point");
  if (!(c > 0.0)) throw data_error("C must be > 0");
  if (!(gamma >= 0.0)) throw data_error("gamma must be >= 0");

  detail::Problem prob;
  prob.points.reserve(pos.size() + neg.size());
  for (PointView p : pos) {
    prob.points.push_back(p);
    prob.y.push_back(1.0);
  }
  for (PointView p : neg) {
    prob.points.push_back(p);
    prob.y.push_back(-1.0);
  }
  const std::size_t n = prob.points.size();
  const std::size_t d = prob.points.front().size();
  for (PointView p : prob.points)
    if (p.size() != d) throw data_error("points disagree on dimension");

  const kernel::RbfKernel kern{gamma};
  const bool cached = n <= detail::kGramCacheLimit;
  kernel::GramMatrix cache;
  if (cached) cache = kernel::gram(prob.points, kern);

  std::vector<double> scratch_i(cached ? 0 : n), scratch_j(cached ? 0 : n);
  auto krow = [&](std::size_t k, std::vector<double>& scratch) -> const double* {
    if (cached) return cache.row(k);
    for (std::size_t l = 0; l < n; ++l)
      scratch[l] = kern(prob.points[k], prob.points[l]);
    return scratch.data();
  };

  // Box per coordinate: beta_k in [lo_k, hi_k].
  std::vector<double> lo(n), hi(n);
  for (std::size_t k = 0; k < n; ++k) {
    lo[k] = prob.y[k] > 0 ? 0.0 : -c;
    hi[k] = prob.y[k] > 0 ? c : 0.0;
  }

  std::vector<double> beta(n, 0.0);
  std::vector<double> g(prob.y);  // gradient of the dual at beta = 0

  auto select_pair = [&](std::size_t& i, std::size_t& j) {
    double up = -std::numeric_limits<double>::infinity();
    double down = std::numeric_limits<double>::infinity();
    i = n;
    j = n;
    for (std::size_t k = 0; k < n; ++k) {
      if (beta[k] < hi[k] && g[k] > up) {
        up = g[k];
        i = k;
      }
      if (beta[k] > lo[k] && g[k] < down) {
        down = g[k];
        j = k;
      }
    }
  };

  bool converged = false;
  std::size_t iter = 0;
  double gap = std::numeric_limits<double>::infinity();
  for (; iter < opts.max_iter; ++iter) {
    std::size_t i, j;
    select_pair(i, j);
    if (i == n || j == n) {
      converged = true;
      break;
    }
    gap = g[i] - g[j];
    if (gap <= opts.tol) {
      converged = true;
      break;
    }

    const double* ki = krow(i, scratch_i);
    const double* kj = krow(j, scratch_j);
    const double eta = std::max(ki[i] + kj[j] - 2.0 * ki[j], 1e-12);
    double lambda = std::min({hi[i] - beta[i], beta[j] - lo[j], gap / eta});
    if (!(lambda > 0.0)) {
      converged = true;  // stalled at numerical precision
      break;
    }
    beta[i] = std::min(beta[i] + lambda, hi[i]);
    beta[j] = std::max(beta[j] - lambda, lo[j]);
    for (std::size_t k = 0; k < n; ++k) g[k] -= lambda * (ki[k] - kj[k]);
  }

  // Bias from the KKT conditions: free support vectors sit exactly on the
  // margin, so their g equals b; with none free, the midpoint of the final
  // violation interval keeps every point within tol of feasibility.
  double bias;
  double free_sum = 0.0;
  std::size_t free_count = 0;
  for (std::size_t k = 0; k < n; ++k)
    if (beta[k] > lo[k] && beta[k] < hi[k]) {
      free_sum += g[k];
      ++free_count;
    }
  if (free_count > 0) {
    bias = free_sum / static_cast<double>(free_count);
  } else {
    std::size_t i, j;
    select_pair(i, j);
    const double up = i < n ? g[i] : 0.0;
    const double down = j < n ? g[j] : 0.0;
    bias = 0.5 * (up + down);
  }

  BinaryModel model = detail::extract_model(prob, beta, bias, gamma, c);
  if (!converged)
    throw nonconvergence_error(
        "SMO hit the update cap (" + std::to_string(opts.max_iter) +
            ") with violation gap " + std::to_string(gap),
        std::move(model));
  return model;
}

/// f(x) = sum_i w_i k(sv_i, x) + b. An empty expansion returns the bias.
inline double decision(const BinaryModel& model, PointView x) {
  const kernel::RbfKernel kern{model.gamma};
  double acc = model.bias;
  for (std::size_t i = 0; i < model.support_vectors.size(); ++i)
    acc += model.weights[i] * kern(model.support_vectors[i], x);
  return acc;
}

/// One binary machine per unordered class pair. If any pair hits the update
/// cap its carried best model is used, the remaining pairs still train, and
/// the call throws at the end with the completed model attached.
inline MulticlassModel train_multiclass(const Dataset& ds, double gamma,
                                        double c,
                                        const TrainOptions& opts = {}) {
  if (ds.n_classes() < 2)
    throw data_error("multiclass training needs at least 2 classes");

  MulticlassModel model;
  model.n_classes = ds.n_classes();
  std::vector<std::string> capped;
  for (int a = 0; a < ds.n_classes(); ++a) {
    for (int b = a + 1; b < ds.n_classes(); ++b) {
      const auto pos = ds.class_views(a);
      const auto neg = ds.class_views(b);
      MulticlassModel::Pair pair;
      pair.pos_class = a;
      pair.neg_class = b;
      try {
        pair.model = train_binary(pos, neg, gamma, c, opts);
      } catch (const nonconvergence_error& e) {
        pair.model = *e.binary();
        capped.push_back(std::to_string(a) + "/" + std::to_string(b));
      }
      model.pairs.push_back(std::move(pair));
    }
  }
  if (!capped.empty()) {
    std::string what = "SMO hit the update cap for class pair(s) ";
    for (std::size_t k = 0; k < capped.size(); ++k)
      what += (k ? ", " : "") + capped[k];
    throw nonconvergence_error(std::move(what), std::move(model));
  }
  return model;
}

/// Majority vote over the pairwise machines; a non-negative decision votes
/// for the pair's pos class. Vote ties go to the smallest class id.
inline int predict(const MulticlassModel& model, PointView x) {
  if (model.pairs.empty()) throw data_error("model has no pairs");
  std::vector<int> votes(static_cast<std::size_t>(model.n_classes), 0);
  for (const auto& pair : model.pairs) {
    const int winner =
        decision(pair.model, x) >= 0.0 ? pair.pos_class : pair.neg_class;
    ++votes[static_cast<std::size_t>(winner)];
  }
  int best = 0;
  for (int c = 1; c < model.n_classes; ++c)
    if (votes[static_cast<std::size_t>(c)] > votes[static_cast<std::size_t>(best)])
      best = c;
  return best;
}

}  // namespace kernelgamma::svm
