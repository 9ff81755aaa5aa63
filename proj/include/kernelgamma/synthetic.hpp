#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "kernelgamma/dataset.hpp"
#include "kernelgamma/error.hpp"

namespace kernelgamma::synth {

/// Isotropic Gaussian blobs, one blob per class. Class c gets original label
/// c and `points_per_class` draws around `centers[c]`.
struct BlobsSpec {
  std::vector<std::vector<double>> centers;
  double stddev = 1.0;
  std::size_t points_per_class = 100;
  std::uint64_t seed = 0;
};

inline Dataset make_blobs(const BlobsSpec& spec) {
  if (spec.centers.empty()) throw data_error("blobs need at least one center");
  if (spec.points_per_class == 0)
    throw data_error("blobs need at least one point per class");
  if (!(spec.stddev >= 0.0)) throw data_error("blob stddev must be >= 0");
  const std::size_t dim = spec.centers.front().size();
  if (dim == 0) throw data_error("blob centers need at least one coordinate");
  for (const auto& c : spec.centers)
    if (c.size() != dim) throw data_error("blob centers disagree on dimension");

  std::mt19937_64 rng(spec.seed);
  std::normal_distribution<double> noise(0.0, spec.stddev);
  std::vector<Sample> samples;
  std::vector<double> labels;
  samples.reserve(spec.centers.size() * spec.points_per_class);
  for (std::size_t c = 0; c < spec.centers.size(); ++c) {
    labels.push_back(static_cast<double>(c));
    for (std::size_t i = 0; i < spec.points_per_class; ++i) {
      Sample s;
      s.features.resize(dim);
      for (std::size_t j = 0; j < dim; ++j)
        s.features[j] = spec.centers[c][j] + noise(rng);
      s.label = static_cast<int>(c);
      samples.push_back(std::move(s));
    }
  }
  return Dataset(std::move(samples), std::move(labels));
}

}  // namespace kernelgamma::synth
