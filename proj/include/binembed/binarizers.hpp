#pragma once

#include <cstdint>

#include <Eigen/Core>

#include "binembed/core.hpp"

namespace binembed {

// The three training-free binarization strategies. Each fit returns a small
// model; each binarize maps an embedding matrix to packed codes. Thresholding
// is strict everywhere: a value exactly at the threshold maps to bit 0.

struct HardThresholdModel {
  double threshold = 0.0;
  Index dim = 0;  // output width equals the input width
};

struct RandomProjectionModel {
  Matrix<double> weights;  // D x L, entries uniform in (-1/sqrt(D), 1/sqrt(D))
  std::uint64_t seed = 0;

  Index bits() const { return weights.rows(); }
  Index dim() const { return weights.cols(); }
  double bound() const { return 1.0 / std::sqrt(static_cast<double>(weights.rows())); }
};

struct PcaModel {
  Vector<double> mean;         // L
  Matrix<double> components;   // D x L, rows orthonormal
  Vector<double> eigenvalues;  // D, scatter eigenvalues of the centered fit
                               // data, descending

  Index bits() const { return components.rows(); }
  Index dim() const { return components.cols(); }
};

// bit i = 1 iff h(i) > s, width D = L.
BinaryCodeSet hard_threshold_binarize(const EmbeddingMatrix& h, double threshold);

// D x L matrix with i.i.d. entries ~ Uniform(-1/sqrt(D), 1/sqrt(D)).
RandomProjectionModel random_projection_fit(Index dim, Index bits, Rng& rng);

// bit i = 1 iff (W h)(i) > 0.
BinaryCodeSet random_projection_binarize(const RandomProjectionModel& model,
                                         const EmbeddingMatrix& h);

// Centers the data and takes the top `bits` principal axes, descending by
// explained variance. Eigendecomposition of the L x L scatter when N > L,
// SVD of the centered matrix otherwise. Each component's sign is fixed so
// its largest-magnitude entry is positive, which makes codes reproducible.
PcaModel pca_fit(const EmbeddingMatrix& h, Index bits);

// bit i = 1 iff (W (h - mean))(i) > 0.
BinaryCodeSet pca_binarize(const PcaModel& model, const EmbeddingMatrix& h);

}  // namespace binembed
