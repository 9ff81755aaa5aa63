#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "kernelgamma/dataset.hpp"
#include "kernelgamma/error.hpp"
#include "kernelgamma/parallel.hpp"

namespace kernelgamma::kernel {

/// The one kernel that ships. Everything downstream touches kernels through
/// a callable with this shape plus self(), so swapping one in stays cheap.
struct RbfKernel {
  double gamma = 1.0;

  double operator()(PointView a, PointView b) const {
    if (a.size() != b.size())
      throw data_error("kernel arguments disagree on dimension");
    double sq = 0.0;
    for (std::size_t j = 0; j < a.size(); ++j) {
      const double diff = a[j] - b[j];
      sq += diff * diff;
    }
    return std::exp(-gamma * sq);
  }

  // k(x, x), independent of x for this kernel.
  double self() const { return 1.0; }
};

inline double rbf(PointView a, PointView b, double gamma) {
  if (!(gamma >= 0.0)) throw data_error("gamma must be >= 0");
  return RbfKernel{gamma}(a, b);
}

/// Dense symmetric kernel matrix, row-major, unit diagonal for RBF.
struct GramMatrix {
  std::size_t n = 0;
  std::vector<double> values;  // n * n
  bool centered = false;

  double at(std::size_t i, std::size_t j) const { return values[i * n + j]; }
  double& at(std::size_t i, std::size_t j) { return values[i * n + j]; }
  const double* row(std::size_t i) const { return values.data() + i * n; }
};

/// Row means and grand mean of an uncentered Gram matrix. Cached by the
/// subspace models so queries can be centered consistently with training.
struct GramMeans {
  std::vector<double> row_means;
  double grand_mean = 0.0;
};

template <typename Kernel>
GramMatrix gram(const std::vector<PointView>& points, const Kernel& k) {
  if (points.empty()) throw data_error("gram needs at least one point");
  const std::size_t n = points.size();
  GramMatrix g;
  g.n = n;
  g.values.assign(n * n, 0.0);
  const unsigned chunks = detail::plan_chunks(n, 64);
  detail::run_chunks(n, chunks, [&](unsigned, std::size_t lo, std::size_t hi) {
    for (std::size_t i = lo; i < hi; ++i) {
      g.at(i, i) = k.self();
      for (std::size_t j = i + 1; j < n; ++j) g.at(i, j) = k(points[i], points[j]);
    }
  });
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < i; ++j) g.at(i, j) = g.at(j, i);
  return g;
}

inline GramMatrix gram(const std::vector<PointView>& points, double gamma) {
  if (!(gamma >= 0.0)) throw data_error("gamma must be >= 0");
  return gram(points, RbfKernel{gamma});
}

inline GramMeans means(const GramMatrix& g) {
  GramMeans m;
  m.row_means.assign(g.n, 0.0);
  double total = 0.0;
  for (std::size_t i = 0; i < g.n; ++i) {
    double acc = 0.0;
    for (std::size_t j = 0; j < g.n; ++j) acc += g.at(i, j);
    m.row_means[i] = acc / static_cast<double>(g.n);
    total += acc;
  }
  m.grand_mean = total / static_cast<double>(g.n * g.n);
  return m;
}

/// Double centering: M_ij = K_ij - rowmean_i - rowmean_j + grandmean, the
/// Gram matrix of the images after subtracting their mean. Symmetry is
/// preserved term by term.
inline GramMatrix center(const GramMatrix& g, const GramMeans& m) {
  if (g.centered) throw data_error("gram matrix is already centered");
  if (m.row_means.size() != g.n)
    throw data_error("gram means do not match matrix size");
  GramMatrix out;
  out.n = g.n;
  out.centered = true;
  out.values.assign(g.n * g.n, 0.0);
  for (std::size_t i = 0; i < g.n; ++i) {
    for (std::size_t j = i; j < g.n; ++j) {
      const double v =
          g.at(i, j) - m.row_means[i] - m.row_means[j] + m.grand_mean;
      out.at(i, j) = v;
      out.at(j, i) = v;
    }
  }
  return out;
}

inline GramMatrix center(const GramMatrix& g) { return center(g, means(g)); }

/// Kernel values of one query against a point list: out[l] = k(points[l], x).
template <typename Kernel>
std::vector<double> cross_vector(const std::vector<PointView>& points,
                                 PointView x, const Kernel& k) {
  if (points.empty()) throw data_error("cross_vector needs at least one point");
  std::vector<double> out(points.size());
  for (std::size_t l = 0; l < points.size(); ++l) out[l] = k(points[l], x);
  return out;
}

inline std::vector<double> cross_vector(const std::vector<PointView>& points,
                                        PointView x, double gamma) {
  if (!(gamma >= 0.0)) throw data_error("gamma must be >= 0");
  return cross_vector(points, x, RbfKernel{gamma});
}

}  // namespace kernelgamma::kernel
