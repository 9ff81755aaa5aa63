// End-to-end tour on synthetic data: draw Gaussian blobs, read off the
// kernel parameter from their geometry, train both classifiers, and print a
// small report.

#include <iostream>

#include "kernelgamma/kernelgamma.hpp"

namespace kg = kernelgamma;

int main() {
  kg::synth::BlobsSpec blobs;
  blobs.centers = {{0.0, 0.0}, {4.0, 0.0}, {2.0, 3.5}};
  blobs.stddev = 0.7;
  blobs.points_per_class = 120;
  blobs.seed = 7;

  const kg::Dataset full = kg::synth::make_blobs(blobs);
  const auto [train, test] = kg::stratified_split(full, 0.3, 7);

  const auto geo = kg::geometry::compute_geometry(train);
  const auto est = kg::dmm::estimate(geo, kg::dmm::Variant::kAvg);
  std::cout << "D_max = " << geo.d_max << ", d_min = " << geo.d_min_interclass
            << ", d_av = " << geo.d_av << "\n";
  std::cout << "gamma = " << est.gamma << " (sigma = " << est.sigma << ")\n\n";

  const kg::kos::Model kos_model = kg::kos::fit(train, est.gamma);
  const kg::svm::MulticlassModel svm_model =
      kg::svm::train_multiclass(train, est.gamma, 10.0);

  std::size_t kos_hits = 0, svm_hits = 0;
  for (std::size_t i = 0; i < test.size(); ++i) {
    if (kg::kos::predict(kos_model, test.view(i)) == test[i].label) ++kos_hits;
    if (kg::svm::predict(svm_model, test.view(i)) == test[i].label) ++svm_hits;
  }
  const auto pct = [&](std::size_t hits) {
    return 100.0 * static_cast<double>(hits) / static_cast<double>(test.size());
  };
  std::cout << "subspace classifier: " << pct(kos_hits) << "% on "
            << test.size() << " held-out points\n";
  std::cout << "pairwise svm:        " << pct(svm_hits) << "%\n";
  return 0;
}
