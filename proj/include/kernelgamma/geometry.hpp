#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include "kernelgamma/dataset.hpp"
#include "kernelgamma/error.hpp"
#include "kernelgamma/parallel.hpp"

namespace kernelgamma::geometry {

/// Class-geometry summary of a labeled dataset, in input (not feature) space.
struct ClassGeometry {
  std::vector<double> diameters;                 // per class id
  std::vector<std::vector<double>> pair_distances;  // P x P, symmetric, 0 diagonal
  double d_max = 0.0;            // largest class diameter
  double d_min_interclass = 0.0; // smallest pairwise inter-class distance
  double d_av = 0.0;             // root mean square of the pairwise distances
  std::size_t t_pairs = 0;       // number of unordered class pairs
  std::size_t subsample_cap_used = 0;  // 0 when every point was scanned

  double pair(int a, int b) const {
    return pair_distances[static_cast<std::size_t>(a)][static_cast<std::size_t>(b)];
  }
};

struct GeometryOptions {
  std::size_t subsample_cap = 0;  // cap per-class points scanned; 0 disables
  std::uint64_t seed = 0;         // used only when subsampling kicks in
};

namespace detail {

using kernelgamma::detail::plan_chunks;
using kernelgamma::detail::run_chunks;

inline double sq_dist(PointView a, PointView b) {
  double acc = 0.0;
  for (std::size_t j = 0; j < a.size(); ++j) {
    const double diff = a[j] - b[j];
    acc += diff * diff;
  }
  return acc;
}

inline void check_dims(const std::vector<PointView>& pts, const char* what) {
  if (pts.empty()) throw data_error(std::string(what) + ": no points");
  const std::size_t d = pts.front().size();
  if (d == 0) throw data_error(std::string(what) + ": empty points");
  for (PointView p : pts)
    if (p.size() != d)
      throw data_error(std::string(what) + ": inconsistent dimensions");
}

}  // namespace detail

/// Largest pairwise Euclidean distance within one point set. Squared
/// distances are scanned and the root is taken once at the end. 0 for a
/// single point.
inline double class_diameter(const std::vector<PointView>& points) {
  detail::check_dims(points, "class_diameter");
  const std::size_t n = points.size();
  const unsigned chunks = detail::plan_chunks(n, 256);
  std::vector<double> local(chunks, 0.0);
  detail::run_chunks(n, chunks, [&](unsigned c, std::size_t lo, std::size_t hi) {
    double best = 0.0;
    for (std::size_t i = lo; i < hi; ++i)
      for (std::size_t j = i + 1; j < n; ++j)
        best = std::max(best, detail::sq_dist(points[i], points[j]));
    local[c] = best;
  });
  return std::sqrt(*std::max_element(local.begin(), local.end()));
}

/// Smallest Euclidean distance between two point sets.
inline double interclass_distance(const std::vector<PointView>& a,
                                  const std::vector<PointView>& b) {
  detail::check_dims(a, "interclass_distance");
  detail::check_dims(b, "interclass_distance");
  if (a.front().size() != b.front().size())
    throw data_error("interclass_distance: inconsistent dimensions");
  const unsigned chunks = detail::plan_chunks(a.size(), 256);
  std::vector<double> local(chunks, std::numeric_limits<double>::infinity());
  detail::run_chunks(a.size(), chunks,
                     [&](unsigned c, std::size_t lo, std::size_t hi) {
                       double best = std::numeric_limits<double>::infinity();
                       for (std::size_t i = lo; i < hi; ++i)
                         for (PointView q : b)
                           best = std::min(best, detail::sq_dist(a[i], q));
                       local[c] = best;
                     });
  return std::sqrt(*std::min_element(local.begin(), local.end()));
}

/// Full geometry scan: per-class diameters, all inter-class minimum
/// distances, and the D_max / d_min / d_av aggregates. Needs >= 2 non-empty
/// classes. With `subsample_cap` set, classes larger than the cap are
/// scanned through a seeded uniform subsample of that size.
inline ClassGeometry compute_geometry(const Dataset& ds,
                                      const GeometryOptions& opts = {}) {
  const int p = ds.n_classes();
  if (p < 2) throw data_error("geometry needs at least 2 classes");

  std::vector<std::vector<PointView>> views(static_cast<std::size_t>(p));
  std::mt19937_64 rng(opts.seed);
  std::size_t cap_used = 0;
  for (int c = 0; c < p; ++c) {
    std::vector<std::size_t> members = ds.class_members(c);
    if (members.empty())
      throw data_error("class " + std::to_string(c) + " is empty");
    if (opts.subsample_cap > 0 && members.size() > opts.subsample_cap) {
      std::shuffle(members.begin(), members.end(), rng);
      members.resize(opts.subsample_cap);
      std::sort(members.begin(), members.end());
      cap_used = opts.subsample_cap;
    }
    for (std::size_t i : members)
      views[static_cast<std::size_t>(c)].push_back(ds.view(i));
  }

  ClassGeometry out;
  out.subsample_cap_used = cap_used;
  out.diameters.resize(static_cast<std::size_t>(p));
  out.pair_distances.assign(static_cast<std::size_t>(p),
                            std::vector<double>(static_cast<std::size_t>(p), 0.0));
  for (int c = 0; c < p; ++c)
    out.diameters[static_cast<std::size_t>(c)] =
        class_diameter(views[static_cast<std::size_t>(c)]);
  out.d_max = *std::max_element(out.diameters.begin(), out.diameters.end());

  // The d_av accumulation stays sequential in (l, k) order so the reported
  // value does not depend on the thread setting.
  double sum_sq = 0.0;
  double min_d = std::numeric_limits<double>::infinity();
  out.t_pairs = 0;
  for (int l = 0; l < p; ++l) {
    for (int k = l + 1; k < p; ++k) {
      const double d = interclass_distance(views[static_cast<std::size_t>(l)],
                                           views[static_cast<std::size_t>(k)]);
      out.pair_distances[static_cast<std::size_t>(l)][static_cast<std::size_t>(k)] = d;
      out.pair_distances[static_cast<std::size_t>(k)][static_cast<std::size_t>(l)] = d;
      sum_sq += d * d;
      min_d = std::min(min_d, d);
      ++out.t_pairs;
    }
  }
  out.d_min_interclass = min_d;
  out.d_av = std::sqrt(sum_sq / static_cast<double>(out.t_pairs));
  return out;
}

/// Squared diameter of a point set's image on the kernel feature sphere:
/// 2 - 2 exp(-gamma D^2) for input-space diameter D. Increasing in gamma,
/// bounded by 2.
inline double feature_diameter_sq(double gamma, double diameter) {
  if (!(gamma >= 0.0)) throw data_error("gamma must be >= 0");
  if (!(diameter >= 0.0)) throw data_error("diameter must be >= 0");
  return -2.0 * std::expm1(-gamma * diameter * diameter);
}

/// Same map applied to an inter-class distance.
inline double feature_distance_sq(double gamma, double distance) {
  return feature_diameter_sq(gamma, distance);
}

}  // namespace kernelgamma::geometry
