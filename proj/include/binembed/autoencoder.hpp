#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Core>

#include "binembed/core.hpp"

namespace binembed {

// Encoder-decoder binarizer: a sigmoid encoder thresholded into bits, a
// linear decoder reconstructing the input, trained with straight-through
// gradients plus an optional triplet regularizer that pushes Hamming
// orderings to agree with cosine orderings.

enum class BinarizeMode : std::uint32_t { deterministic = 0, stochastic = 1 };

struct AutoencoderModel {
  Matrix<double> enc_weights;  // D x L
  Vector<double> enc_bias;     // D
  Matrix<double> dec_weights;  // L x D
  Vector<double> dec_bias;     // L
  BinarizeMode mode = BinarizeMode::deterministic;  // training-time thresholding

  Index bits() const { return enc_weights.rows(); }
  Index dim() const { return enc_weights.cols(); }
};

struct TrainConfig {
  double learning_rate = 1e-5;
  Index batch_size = 64;
  double lambda_sp = 0.8;
  Index bits = 2048;
  Index epochs = 10;
  std::uint64_t seed = 0;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_epsilon = 1e-8;
  BinarizeMode mode = BinarizeMode::deterministic;
  // Stop when the epoch-mean loss improves by less than this fraction;
  // <= 0 disables early stopping.
  double early_stop_rel_improvement = 1e-3;
};

// Index triple (anchor a, pivot b, probe c) into a batch, with label +1 when
// cos(h_a, h_b) >= cos(h_b, h_c) and -1 otherwise.
struct Triplet {
  Index a = 0;
  Index b = 0;
  Index c = 0;
  double label = 1.0;
};

struct TripletBatch {
  std::vector<Triplet> triples;
};

// ---------------------------------------------------------------------------
// Forward / losses
// ---------------------------------------------------------------------------

inline double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

struct EncodeResult {
  std::vector<std::uint8_t> bits;
  Vector<double> activations;  // sigmoid outputs, before thresholding
};

// One row. Deterministic mode thresholds at 0.5 (strict, 0.5 itself gives
// bit 0); stochastic mode draws a fresh threshold ~ Uniform(0,1) per bit.
EncodeResult encode(const AutoencoderModel& model,
                    const Eigen::Ref<const Vector<double>>& h, Rng& rng,
                    BinarizeMode mode);

// Inference path: always deterministic thresholding at 0.5, whatever the
// model was trained with.
BinaryCodeSet encode_codes(const AutoencoderModel& model, const EmbeddingMatrix& h);

// h_hat = W' b + k'.
Vector<double> decode(const AutoencoderModel& model,
                      const Eigen::Ref<const Vector<double>>& code);

// Mean squared error over the reconstruction's own length.
double reconstruction_loss(const Eigen::Ref<const Vector<double>>& h,
                           const Eigen::Ref<const Vector<double>>& h_hat);

// Sum over triples of max{0, label * (d(b_a, b_b) - d(b_b, b_c))} where
// d(x, y) = sum_i (x_i - y_i)^2. On exactly binary rows d equals the Hamming
// distance; on relaxed rows it stays differentiable so gradients can cross it.
double semantic_preserving_loss(const Eigen::Ref<const Matrix<double>>& codes,
                                const TripletBatch& triplets);

inline double total_loss(double reconstruction, double semantic, double lambda_sp) {
  if (lambda_sp < 0.0) throw ArgumentError("total_loss: lambda_sp must be >= 0");
  return reconstruction + lambda_sp * semantic;
}

// Uniformly random pairwise-distinct index triples over the batch rows, with
// labels from the continuous cosine similarities.
TripletBatch sample_triplets(const Eigen::Ref<const Matrix<double>>& batch,
                             Index n_triples, Rng& rng);

// ---------------------------------------------------------------------------
// Backward pass (straight-through)
// ---------------------------------------------------------------------------

// Everything the backward pass needs from one forward pass over a batch.
// `codes` holds the thresholded bits during training; the surrogate gradient
// check re-runs the same math with `codes` = `activations`.
struct ForwardCache {
  Matrix<double> inputs;       // B x L
  Matrix<double> activations;  // B x D
  Matrix<double> codes;        // B x D
  Matrix<double> recon;        // B x L
};

ForwardCache forward_batch(const AutoencoderModel& model,
                           const Eigen::Ref<const Matrix<double>>& batch, Rng& rng,
                           BinarizeMode mode, bool relax_codes = false);

struct Gradients {
  Matrix<double> enc_weights;
  Vector<double> enc_bias;
  Matrix<double> dec_weights;
  Vector<double> dec_bias;
};

struct LossBreakdown {
  double reconstruction = 0.0;
  double semantic = 0.0;
  double total = 0.0;
};

// Decoder gradients are exact given the codes; the thresholding step is
// treated as identity on the way back, so encoder gradients keep the
// sigmoid's own derivative: d(code)/d(z) := sigmoid'(z).
Gradients backward_st(const AutoencoderModel& model, const ForwardCache& cache,
                      const TripletBatch& triplets, double lambda_sp,
                      LossBreakdown* losses = nullptr);

// ---------------------------------------------------------------------------
// Optimization
// ---------------------------------------------------------------------------

struct AdamConfig {
  double learning_rate = 1e-5;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct AdamState {
  Matrix<double> m;
  Matrix<double> v;
};

// Standard bias-corrected Adam update; `step` starts at 1. State matrices are
// resized to zero moments on first use.
void adam_step(Eigen::Ref<Matrix<double>> param,
               const Eigen::Ref<const Matrix<double>>& grad, AdamState& state,
               long step, const AdamConfig& cfg);

struct TrainResult {
  AutoencoderModel model;
  std::vector<double> step_losses;  // total loss per optimizer step
  std::vector<double> step_reconstruction;
  std::vector<double> epoch_mean_losses;
};

// Shuffled minibatch epochs over `h`. Aborts with DivergenceError (naming the
// step) if the loss goes non-finite. lambda_sp = 0 is the plain reconstruction
// autoencoder. With batch_size < 3 the semantic term is skipped.
TrainResult train(const EmbeddingMatrix& h, const TrainConfig& cfg, Rng& rng);

}  // namespace binembed
