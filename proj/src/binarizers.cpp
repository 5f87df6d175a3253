#include "binembed/binarizers.hpp"

#include <string>

#include <Eigen/Dense>

namespace binembed {

namespace {

// Packs the strict sign pattern of a dense score matrix (rows = inputs).
BinaryCodeSet pack_positive(const Matrix<double>& scores) {
  BinaryCodeSet codes(scores.rows(), scores.cols());
  for (Index r = 0; r < scores.rows(); ++r) {
    auto row = codes.row(r);
    for (Index j = 0; j < scores.cols(); ++j) {
      if (scores(r, j) > 0.0) {
        row[j / 64] |= 1ull << (j % 64);
      }
    }
  }
  return codes;
}

// Flips each row so that its largest-magnitude entry is positive; ties on
// magnitude resolve to the lowest index.
void fix_component_signs(Matrix<double>& components) {
  for (Index r = 0; r < components.rows(); ++r) {
    Index arg_max = 0;
    double best = -1.0;
    for (Index j = 0; j < components.cols(); ++j) {
      const double mag = std::abs(components(r, j));
      if (mag > best) {
        best = mag;
        arg_max = j;
      }
    }
    if (components(r, arg_max) < 0.0) {
      components.row(r) = -components.row(r);
    }
  }
}

}  // namespace

BinaryCodeSet hard_threshold_binarize(const EmbeddingMatrix& h, double threshold) {
  validate_embeddings(h);
  // Compare at the storage precision so a threshold like 0.1 meets the
  // stored value 0.1f as equal, which maps to bit 0.
  const float s = static_cast<float>(threshold);
  BinaryCodeSet codes(h.rows(), h.cols());
  for (Index r = 0; r < h.rows(); ++r) {
    auto row = codes.row(r);
    for (Index j = 0; j < h.cols(); ++j) {
      if (h(r, j) > s) {
        row[j / 64] |= 1ull << (j % 64);
      }
    }
  }
  return codes;
}

RandomProjectionModel random_projection_fit(Index dim, Index bits, Rng& rng) {
  if (dim < 1 || bits < 1) {
    throw ArgumentError("random_projection_fit: dim and bits must be positive");
  }
  RandomProjectionModel model;
  model.weights.resize(bits, dim);
  const double bound = 1.0 / std::sqrt(static_cast<double>(bits));
  for (Index i = 0; i < bits; ++i) {
    for (Index j = 0; j < dim; ++j) {
      model.weights(i, j) = rng.uniform(-bound, bound);
    }
  }
  return model;
}

BinaryCodeSet random_projection_binarize(const RandomProjectionModel& model,
                                         const EmbeddingMatrix& h) {
  validate_embeddings(h);
  if (h.cols() != model.dim()) {
    throw DimensionError("random_projection_binarize: input dim " +
                         std::to_string(h.cols()) + " != model dim " +
                         std::to_string(model.dim()));
  }
  const Matrix<double> scores = h.cast<double>() * model.weights.transpose();
  return pack_positive(scores);
}

PcaModel pca_fit(const EmbeddingMatrix& h, Index bits) {
  validate_embeddings(h);
  const Index n = h.rows();
  const Index dim = h.cols();
  if (n < 2) {
    throw ArgumentError("pca_fit: need at least two rows");
  }
  if (bits < 1 || bits > std::min(n, dim)) {
    throw RankError("pca_fit: bits = " + std::to_string(bits) +
                    " exceeds min(rows, dim) = " + std::to_string(std::min(n, dim)));
  }

  const Matrix<double> data = h.cast<double>();
  const Eigen::RowVectorXd mean = data.colwise().mean();
  const Matrix<double> centered = data.rowwise() - mean;

  PcaModel model;
  model.mean = mean.transpose();
  model.components.resize(bits, dim);
  model.eigenvalues.resize(bits);

  if (n > dim) {
    // Scatter matrix route: eigenvalues come out ascending, take the tail.
    const Matrix<double> scatter = centered.transpose() * centered;
    Eigen::SelfAdjointEigenSolver<Matrix<double>> solver(scatter);
    if (solver.info() != Eigen::Success) {
      throw DegenerateInputError("pca_fit: eigendecomposition failed");
    }
    for (Index i = 0; i < bits; ++i) {
      const Index src = dim - 1 - i;
      model.eigenvalues(i) = std::max(0.0, solver.eigenvalues()(src));
      model.components.row(i) = solver.eigenvectors().col(src).transpose();
    }
  } else {
    Eigen::JacobiSVD<Matrix<double>> svd(centered, Eigen::ComputeThinV);
    for (Index i = 0; i < bits; ++i) {
      const double s = svd.singularValues()(i);
      model.eigenvalues(i) = s * s;
      model.components.row(i) = svd.matrixV().col(i).transpose();
    }
  }

  if (model.eigenvalues(0) <= 1e-12) {
    throw DegenerateInputError("pca_fit: data has zero variance");
  }
  fix_component_signs(model.components);
  return model;
}

BinaryCodeSet pca_binarize(const PcaModel& model, const EmbeddingMatrix& h) {
  validate_embeddings(h);
  if (h.cols() != model.dim()) {
    throw DimensionError("pca_binarize: input dim " + std::to_string(h.cols()) +
                         " != model dim " + std::to_string(model.dim()));
  }
  const Matrix<double> centered =
      h.cast<double>().rowwise() - model.mean.transpose();
  const Matrix<double> scores = centered * model.components.transpose();
  return pack_positive(scores);
}

}  // namespace binembed
