#include "binembed/autoencoder.hpp"

#include <cstdio>
#include <string>

namespace binembed {

namespace {

Matrix<double> sigmoid_matrix(const Matrix<double>& z) {
  return z.unaryExpr([](double v) { return sigmoid(v); });
}

double squared_distance(const Eigen::Ref<const Matrix<double>>& codes, Index x, Index y) {
  return (codes.row(x) - codes.row(y)).squaredNorm();
}

}  // namespace

EncodeResult encode(const AutoencoderModel& model,
                    const Eigen::Ref<const Vector<double>>& h, Rng& rng,
                    BinarizeMode mode) {
  if (h.size() != model.dim()) {
    throw DimensionError("encode: input dim " + std::to_string(h.size()) +
                         " != model dim " + std::to_string(model.dim()));
  }
  EncodeResult out;
  out.activations = (model.enc_weights * h + model.enc_bias)
                        .unaryExpr([](double v) { return sigmoid(v); });
  out.bits.resize(static_cast<std::size_t>(model.bits()));
  for (Index i = 0; i < model.bits(); ++i) {
    const double threshold =
        mode == BinarizeMode::deterministic ? 0.5 : rng.uniform();
    out.bits[i] = out.activations(i) > threshold ? 1 : 0;
  }
  return out;
}

BinaryCodeSet encode_codes(const AutoencoderModel& model, const EmbeddingMatrix& h) {
  validate_embeddings(h);
  if (h.cols() != model.dim()) {
    throw DimensionError("encode_codes: input dim " + std::to_string(h.cols()) +
                         " != model dim " + std::to_string(model.dim()));
  }
  const Matrix<double> z =
      (h.cast<double>() * model.enc_weights.transpose()).rowwise() +
      model.enc_bias.transpose();
  BinaryCodeSet codes(h.rows(), model.bits());
  for (Index r = 0; r < h.rows(); ++r) {
    auto row = codes.row(r);
    for (Index j = 0; j < model.bits(); ++j) {
      if (sigmoid(z(r, j)) > 0.5) {
        row[j / 64] |= 1ull << (j % 64);
      }
    }
  }
  return codes;
}

Vector<double> decode(const AutoencoderModel& model,
                      const Eigen::Ref<const Vector<double>>& code) {
  if (code.size() != model.bits()) {
    throw DimensionError("decode: code width " + std::to_string(code.size()) +
                         " != model bits " + std::to_string(model.bits()));
  }
  return model.dec_weights * code + model.dec_bias;
}

double reconstruction_loss(const Eigen::Ref<const Vector<double>>& h,
                           const Eigen::Ref<const Vector<double>>& h_hat) {
  if (h.size() != h_hat.size()) {
    throw DimensionError("reconstruction_loss: lengths differ");
  }
  return (h - h_hat).squaredNorm() / static_cast<double>(h.size());
}

double semantic_preserving_loss(const Eigen::Ref<const Matrix<double>>& codes,
                                const TripletBatch& triplets) {
  double loss = 0.0;
  for (const Triplet& t : triplets.triples) {
    const double gap = squared_distance(codes, t.a, t.b) - squared_distance(codes, t.b, t.c);
    loss += std::max(0.0, t.label * gap);
  }
  return loss;
}

TripletBatch sample_triplets(const Eigen::Ref<const Matrix<double>>& batch,
                             Index n_triples, Rng& rng) {
  const Index n = batch.rows();
  if (n < 3) {
    throw ArgumentError("sample_triplets: need at least 3 rows, got " + std::to_string(n));
  }
  TripletBatch out;
  out.triples.reserve(static_cast<std::size_t>(n_triples));
  for (Index t = 0; t < n_triples; ++t) {
    Triplet tri;
    tri.a = static_cast<Index>(rng.next_below(static_cast<std::uint64_t>(n)));
    do {
      tri.b = static_cast<Index>(rng.next_below(static_cast<std::uint64_t>(n)));
    } while (tri.b == tri.a);
    do {
      tri.c = static_cast<Index>(rng.next_below(static_cast<std::uint64_t>(n)));
    } while (tri.c == tri.a || tri.c == tri.b);
    const double sim_ab = cosine_similarity(batch.row(tri.a), batch.row(tri.b));
    const double sim_bc = cosine_similarity(batch.row(tri.b), batch.row(tri.c));
    tri.label = sim_ab >= sim_bc ? 1.0 : -1.0;
    out.triples.push_back(tri);
  }
  return out;
}

ForwardCache forward_batch(const AutoencoderModel& model,
                           const Eigen::Ref<const Matrix<double>>& batch, Rng& rng,
                           BinarizeMode mode, bool relax_codes) {
  if (batch.cols() != model.dim()) {
    throw DimensionError("forward_batch: input dim " + std::to_string(batch.cols()) +
                         " != model dim " + std::to_string(model.dim()));
  }
  ForwardCache cache;
  cache.inputs = batch;
  const Matrix<double> z =
      (batch * model.enc_weights.transpose()).rowwise() + model.enc_bias.transpose();
  cache.activations = sigmoid_matrix(z);
  if (relax_codes) {
    cache.codes = cache.activations;
  } else {
    cache.codes.resize(batch.rows(), model.bits());
    for (Index r = 0; r < batch.rows(); ++r) {
      for (Index j = 0; j < model.bits(); ++j) {
        const double threshold =
            mode == BinarizeMode::deterministic ? 0.5 : rng.uniform();
        cache.codes(r, j) = cache.activations(r, j) > threshold ? 1.0 : 0.0;
      }
    }
  }
  cache.recon = (cache.codes * model.dec_weights.transpose()).rowwise() +
                model.dec_bias.transpose();
  return cache;
}

Gradients backward_st(const AutoencoderModel& model, const ForwardCache& cache,
                      const TripletBatch& triplets, double lambda_sp,
                      LossBreakdown* losses) {
  const Index batch_rows = cache.inputs.rows();
  const Index dim = cache.inputs.cols();
  const double inv_bl = 1.0 / (static_cast<double>(batch_rows) * static_cast<double>(dim));

  // Reconstruction: mean over the batch of per-row MSE.
  const Matrix<double> err = cache.recon - cache.inputs;
  const Matrix<double> grad_recon = 2.0 * inv_bl * err;

  Gradients g;
  g.dec_weights = grad_recon.transpose() * cache.codes;
  g.dec_bias = grad_recon.colwise().sum().transpose();

  // Code gradients: reconstruction chain plus the triplet hinge.
  Matrix<double> grad_codes = grad_recon * model.dec_weights;
  double sp = 0.0;
  for (const Triplet& t : triplets.triples) {
    const double gap = (cache.codes.row(t.a) - cache.codes.row(t.b)).squaredNorm() -
                       (cache.codes.row(t.b) - cache.codes.row(t.c)).squaredNorm();
    const double hinge = t.label * gap;
    if (hinge > 0.0) {
      sp += hinge;
      const double w = 2.0 * t.label * lambda_sp;
      grad_codes.row(t.a) += w * (cache.codes.row(t.a) - cache.codes.row(t.b));
      grad_codes.row(t.b) += w * ((cache.codes.row(t.b) - cache.codes.row(t.a)) -
                                  (cache.codes.row(t.b) - cache.codes.row(t.c)));
      grad_codes.row(t.c) += w * (cache.codes.row(t.b) - cache.codes.row(t.c));
    }
  }

  // Straight-through: thresholding backs off to identity, sigma' stays.
  const Matrix<double> grad_z = grad_codes.array() * cache.activations.array() *
                                (1.0 - cache.activations.array());
  g.enc_weights = grad_z.transpose() * cache.inputs;
  g.enc_bias = grad_z.colwise().sum().transpose();

  if (losses) {
    losses->reconstruction = err.array().square().sum() * inv_bl;
    losses->semantic = sp;
    losses->total = losses->reconstruction + lambda_sp * losses->semantic;
  }
  return g;
}

void adam_step(Eigen::Ref<Matrix<double>> param,
               const Eigen::Ref<const Matrix<double>>& grad, AdamState& state,
               long step, const AdamConfig& cfg) {
  if (state.m.rows() != param.rows() || state.m.cols() != param.cols()) {
    state.m = Matrix<double>::Zero(param.rows(), param.cols());
    state.v = Matrix<double>::Zero(param.rows(), param.cols());
  }
  state.m = cfg.beta1 * state.m + (1.0 - cfg.beta1) * grad;
  state.v = cfg.beta2 * state.v + (1.0 - cfg.beta2) * grad.cwiseProduct(grad);
  const double bias1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(step));
  const double bias2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(step));
  param.array() -= cfg.learning_rate * (state.m.array() / bias1) /
                   ((state.v.array() / bias2).sqrt() + cfg.epsilon);
}

TrainResult train(const EmbeddingMatrix& h, const TrainConfig& cfg, Rng& rng) {
  validate_embeddings(h);
  if (cfg.batch_size < 1) throw ArgumentError("train: batch_size must be positive");
  if (h.rows() < cfg.batch_size) {
    throw ArgumentError("train: rows " + std::to_string(h.rows()) +
                        " < batch_size " + std::to_string(cfg.batch_size));
  }
  if (cfg.learning_rate <= 0.0) throw ArgumentError("train: learning_rate must be > 0");
  if (cfg.lambda_sp < 0.0) throw ArgumentError("train: lambda_sp must be >= 0");
  if (cfg.bits < 1 || cfg.epochs < 1) throw ArgumentError("train: bits and epochs must be positive");

  const Index n = h.rows();
  const Index dim = h.cols();
  const Index bits = cfg.bits;

  TrainResult result;
  AutoencoderModel& model = result.model;
  model.mode = cfg.mode;
  model.enc_weights.resize(bits, dim);
  model.dec_weights.resize(dim, bits);
  model.enc_bias = Vector<double>::Zero(bits);
  model.dec_bias = Vector<double>::Zero(dim);
  const double enc_bound = 1.0 / std::sqrt(static_cast<double>(bits));
  const double dec_bound = 1.0 / std::sqrt(static_cast<double>(dim));
  for (Index i = 0; i < bits; ++i)
    for (Index j = 0; j < dim; ++j) model.enc_weights(i, j) = rng.uniform(-enc_bound, enc_bound);
  for (Index i = 0; i < dim; ++i)
    for (Index j = 0; j < bits; ++j) model.dec_weights(i, j) = rng.uniform(-dec_bound, dec_bound);

  const bool use_sp = cfg.lambda_sp > 0.0 && cfg.batch_size >= 3;
  if (cfg.lambda_sp > 0.0 && cfg.batch_size < 3) {
    std::fprintf(stderr,
                 "train: batch_size < 3, skipping the semantic-preserving term\n");
  }

  const AdamConfig adam{cfg.learning_rate, cfg.adam_beta1, cfg.adam_beta2, cfg.adam_epsilon};
  AdamState st_enc_w, st_enc_b, st_dec_w, st_dec_b;
  long step = 0;

  std::vector<Index> order(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) order[i] = i;
  const Index batches_per_epoch = n / cfg.batch_size;

  double prev_epoch_mean = 0.0;
  for (Index epoch = 0; epoch < cfg.epochs; ++epoch) {
    rng.shuffle(order);
    double epoch_sum = 0.0;
    for (Index b = 0; b < batches_per_epoch; ++b) {
      Matrix<double> batch(cfg.batch_size, dim);
      for (Index r = 0; r < cfg.batch_size; ++r) {
        batch.row(r) = h.row(order[b * cfg.batch_size + r]).cast<double>();
      }

      TripletBatch triplets;
      if (use_sp) triplets = sample_triplets(batch, cfg.batch_size, rng);

      const ForwardCache cache = forward_batch(model, batch, rng, cfg.mode);
      LossBreakdown losses;
      const Gradients grads =
          backward_st(model, cache, triplets, use_sp ? cfg.lambda_sp : 0.0, &losses);

      if (!std::isfinite(losses.total)) {
        throw DivergenceError("train: non-finite loss at step " + std::to_string(step));
      }

      ++step;
      adam_step(model.enc_weights, grads.enc_weights, st_enc_w, step, adam);
      adam_step(model.enc_bias, grads.enc_bias, st_enc_b, step, adam);
      adam_step(model.dec_weights, grads.dec_weights, st_dec_w, step, adam);
      adam_step(model.dec_bias, grads.dec_bias, st_dec_b, step, adam);

      if (!model.enc_weights.allFinite() || !model.enc_bias.allFinite() ||
          !model.dec_weights.allFinite() || !model.dec_bias.allFinite()) {
        throw DivergenceError("train: non-finite parameter after step " +
                              std::to_string(step));
      }

      result.step_losses.push_back(losses.total);
      result.step_reconstruction.push_back(losses.reconstruction);
      epoch_sum += losses.total;
    }

    const double epoch_mean = epoch_sum / static_cast<double>(batches_per_epoch);
    result.epoch_mean_losses.push_back(epoch_mean);
    if (cfg.early_stop_rel_improvement > 0.0 && epoch > 0 && prev_epoch_mean > 0.0) {
      const double improvement = (prev_epoch_mean - epoch_mean) / prev_epoch_mean;
      if (improvement < cfg.early_stop_rel_improvement) break;
    }
    prev_epoch_mean = epoch_mean;
  }
  return result;
}

}  // namespace binembed
