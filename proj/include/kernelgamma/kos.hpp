#pragma once

#include <Eigen/Core>
#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include "kernelgamma/dataset.hpp"
#include "kernelgamma/error.hpp"
#include "kernelgamma/kernel.hpp"

namespace kernelgamma::kos {

struct Options {
  // Classes larger than imbalance_factor times the smallest class are cut
  // into balanced contiguous chunks, each modeled as its own subclass.
  double imbalance_factor = 2.0;
  bool shuffle = true;      // shuffle a class before chunking it
  std::uint64_t seed = 0;
  double eig_tol = 1e-10;   // keep eigenvalues > eig_tol * largest
};

/// One chunk of one class, as produced by the imbalance split.
struct Chunk {
  int class_id = 0;
  int subclass_id = 0;
  std::vector<std::vector<double>> points;
};

/// Kernel principal subspace of one subclass. Holds everything a query
/// needs: the training points, the retained eigenpairs of the centered Gram
/// matrix, and the uncentered Gram means used to center queries the same way
/// the training matrix was centered.
struct ClassSubspace {
  int class_id = 0;
  int subclass_id = 0;
  std::vector<std::vector<double>> train_points;
  std::vector<double> eigenvalues;                // retained, descending
  std::vector<std::vector<double>> eigenvectors;  // one per retained eigenvalue
  std::vector<double> row_means;
  double grand_mean = 0.0;
};

struct Model {
  std::vector<ClassSubspace> subspaces;  // ordered by (class_id, subclass_id)
  double gamma = 0.0;
  double eig_tol = 0.0;
  int n_classes = 0;
};

/// Cuts imbalanced classes into balanced subclasses. With smallest class
/// size m, a class of size s > factor * m is split into
/// ceil(s / (factor * m)) contiguous chunks whose sizes differ by at most
/// one, after an optional seeded shuffle. Other classes pass through whole.
inline std::vector<Chunk> split_imbalanced(const Dataset& ds,
                                           const Options& opts = {}) {
  if (!(opts.imbalance_factor >= 1.0))
    throw data_error("imbalance factor must be >= 1");

  std::size_t m = std::numeric_limits<std::size_t>::max();
  for (int c = 0; c < ds.n_classes(); ++c) {
    const std::size_t s = ds.class_members(c).size();
    if (s == 0) throw data_error("class " + std::to_string(c) + " is empty");
    m = std::min(m, s);
  }

  std::mt19937_64 rng(opts.seed);
  const double cap = opts.imbalance_factor * static_cast<double>(m);
  std::vector<Chunk> out;
  for (int c = 0; c < ds.n_classes(); ++c) {
    std::vector<std::vector<double>> pts;
    for (std::size_t i : ds.class_members(c))
      pts.push_back(ds[i].features);
    const std::size_t s = pts.size();

    if (static_cast<double>(s) <= cap) {
      out.push_back(Chunk{c, 0, std::move(pts)});
      continue;
    }

    if (opts.shuffle) std::shuffle(pts.begin(), pts.end(), rng);
    const auto q = static_cast<std::size_t>(
        std::ceil(static_cast<double>(s) / cap));
    const std::size_t base = s / q;
    const std::size_t rem = s % q;
    std::size_t begin = 0;
    for (std::size_t k = 0; k < q; ++k) {
      const std::size_t len = base + (k < rem ? 1 : 0);
      Chunk chunk;
      chunk.class_id = c;
      chunk.subclass_id = static_cast<int>(k);
      chunk.points.assign(pts.begin() + static_cast<std::ptrdiff_t>(begin),
                          pts.begin() + static_cast<std::ptrdiff_t>(begin + len));
      out.push_back(std::move(chunk));
      begin += len;
    }
  }
  return out;
}

namespace detail {

inline std::vector<PointView> views_of(
    const std::vector<std::vector<double>>& pts) {
  std::vector<PointView> v;
  v.reserve(pts.size());
  for (const auto& p : pts) v.emplace_back(p);
  return v;
}

}  // namespace detail

/// Builds one subspace per chunk: RBF Gram, double centering, symmetric
/// eigendecomposition, and retention of eigenvalues above the relative
/// tolerance. A chunk whose centered Gram has no positive eigenvalue (all
/// points coincide, or a single point) is degenerate.
inline Model fit(const Dataset& ds, double gamma, const Options& opts = {}) {
  if (!(gamma > 0.0)) throw data_error("gamma must be > 0");

  Model model;
  model.gamma = gamma;
  model.eig_tol = opts.eig_tol;
  model.n_classes = ds.n_classes();

  for (Chunk& chunk : split_imbalanced(ds, opts)) {
    const auto views = detail::views_of(chunk.points);
    const std::size_t n = views.size();

    const kernel::GramMatrix g = kernel::gram(views, gamma);
    const kernel::GramMeans m = kernel::means(g);
    const kernel::GramMatrix centered = kernel::center(g, m);

    Eigen::Map<const Eigen::MatrixXd> mat(centered.values.data(),
                                          static_cast<Eigen::Index>(n),
                                          static_cast<Eigen::Index>(n));
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(mat);
    if (es.info() != Eigen::Success)
      throw numerical_error("eigendecomposition failed for class " +
                            std::to_string(chunk.class_id));

    const auto& vals = es.eigenvalues();   // ascending
    const double largest = vals(static_cast<Eigen::Index>(n) - 1);
    if (!(largest > 0.0))
      throw degenerate_class_error(
          "class " + std::to_string(chunk.class_id) + " subclass " +
          std::to_string(chunk.subclass_id) +
          " has no positive spectrum (coincident points?)");

    ClassSubspace sub;
    sub.class_id = chunk.class_id;
    sub.subclass_id = chunk.subclass_id;
    sub.train_points = std::move(chunk.points);
    sub.row_means = m.row_means;
    sub.grand_mean = m.grand_mean;
    for (Eigen::Index i = static_cast<Eigen::Index>(n) - 1; i >= 0; --i) {
      const double ev = vals(i);
      if (!(ev > opts.eig_tol * largest)) break;
      sub.eigenvalues.push_back(ev);
      std::vector<double> vec(n);
      for (std::size_t t = 0; t < n; ++t)
        vec[t] = es.eigenvectors()(static_cast<Eigen::Index>(t), i);
      sub.eigenvectors.push_back(std::move(vec));
    }
    model.subspaces.push_back(std::move(sub));
  }
  return model;
}

namespace detail {

struct Projection {
  std::vector<double> alphas;
  double centered_norm_sq = 0.0;
};

// Centers the query's kernel column with the subspace's cached Gram means
// and projects it onto the retained eigenbasis.
inline Projection project(const ClassSubspace& sub, PointView x, double gamma) {
  const auto views = views_of(sub.train_points);
  const kernel::RbfKernel k{gamma};
  const std::vector<double> kx = kernel::cross_vector(views, x, k);

  double kbar = 0.0;
  for (double v : kx) kbar += v;
  kbar /= static_cast<double>(kx.size());

  std::vector<double> centered(kx.size());
  for (std::size_t l = 0; l < kx.size(); ++l)
    centered[l] = kx[l] - sub.row_means[l] - kbar + sub.grand_mean;

  Projection p;
  p.alphas.resize(sub.eigenvalues.size());
  for (std::size_t i = 0; i < sub.eigenvalues.size(); ++i) {
    double dot = 0.0;
    const std::vector<double>& v = sub.eigenvectors[i];
    for (std::size_t l = 0; l < centered.size(); ++l) dot += v[l] * centered[l];
    p.alphas[i] = dot / std::sqrt(sub.eigenvalues[i]);
  }
  // Squared norm of the centered query image; k(x, x) = 1 for RBF.
  p.centered_norm_sq = k.self() - 2.0 * kbar + sub.grand_mean;
  return p;
}

}  // namespace detail

/// Coordinates of the query in the subspace eigenbasis:
/// alpha_i = <v_i, centered kernel column> / sqrt(eigenvalue_i).
inline std::vector<double> coordinates(const ClassSubspace& sub, PointView x,
                                       double gamma) {
  return detail::project(sub, x, gamma).alphas;
}

/// Distance from the query's feature-space image to the subclass subspace:
/// sqrt of the centered squared norm minus the projected energy, clamped at
/// zero against roundoff. Exactly the training points' residual, so a
/// full-rank subspace gives its own training points distance 0.
inline double distance(const ClassSubspace& sub, PointView x, double gamma) {
  const detail::Projection p = detail::project(sub, x, gamma);
  double energy = 0.0;
  for (double a : p.alphas) energy += a * a;
  return std::sqrt(std::max(0.0, p.centered_norm_sq - energy));
}

/// Nearest-subspace decision. Ties go to the earliest subspace in
/// (class_id, subclass_id) order.
inline int predict(const Model& model, PointView x) {
  if (model.subspaces.empty()) throw data_error("model has no subspaces");
  double best = std::numeric_limits<double>::infinity();
  int best_class = model.subspaces.front().class_id;
  for (const ClassSubspace& sub : model.subspaces) {
    const double d = distance(sub, x, model.gamma);
    if (d < best) {
      best = d;
      best_class = sub.class_id;
    }
  }
  return best_class;
}

}  // namespace kernelgamma::kos
