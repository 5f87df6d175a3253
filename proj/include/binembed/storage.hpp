#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <variant>
#include <vector>

#include "binembed/autoencoder.hpp"
#include "binembed/binarizers.hpp"
#include "binembed/core.hpp"
#include "binembed/evaluation.hpp"

namespace binembed {

// On-disk formats. All integers and floats are little-endian regardless of
// host byte order. Every file starts with the same 20-byte header:
//
//   bytes  0..3   magic: "BEMB" embeddings / "BCOD" codes / "BMDL" models
//   bytes  4..7   version, u32 (currently 1)
//   bytes  8..15  rows, u64
//   bytes 16..19  dim_or_bits, u32 (embedding dim, code width, or model D)
//
// Embedding payload: rows x dim float32, row-major.
// Code payload: rows x ceil(bits/64) u64 words, LSB-first, pad bits zero.
// Model payload: u32 method tag, then per-method parameters as float64.

inline constexpr std::uint32_t kFormatVersion = 1;
inline constexpr std::size_t kHeaderBytes = 20;

enum class MethodTag : std::uint32_t {
  hard_threshold = 1,
  random_projection = 2,
  pca = 3,
  autoencoder = 4,
};

using BinarizerModel =
    std::variant<HardThresholdModel, RandomProjectionModel, PcaModel, AutoencoderModel>;

void save_embeddings(const std::filesystem::path& path, const EmbeddingMatrix& h);
EmbeddingMatrix load_embeddings(const std::filesystem::path& path);

void save_codes(const std::filesystem::path& path, const BinaryCodeSet& codes);
BinaryCodeSet load_codes(const std::filesystem::path& path);

void save_model(const std::filesystem::path& path, const BinarizerModel& model);
BinarizerModel load_model(const std::filesystem::path& path);

// Applies whichever strategy the model holds. Autoencoder models encode in
// deterministic inference mode.
BinaryCodeSet binarize_with(const BinarizerModel& model, const EmbeddingMatrix& h);

Index model_bits(const BinarizerModel& model);
Index model_dim(const BinarizerModel& model);
std::string method_name(const BinarizerModel& model);

// Scored pair sets travel as tab-separated text: index_a, index_b, score,
// and an optional 0/1 label column.
ScoredPairSet load_pairs_tsv(const std::filesystem::path& path);
void save_pairs_tsv(const std::filesystem::path& path, const ScoredPairSet& pairs);

// ---------------------------------------------------------------------------
// Synthetic corpora
// ---------------------------------------------------------------------------

// Desk-scale stand-in for a real embedding dump: cluster centers drawn from a
// unit Gaussian, points = center + spread * Gaussian noise, cluster ids
// assigned round-robin.
struct SyntheticCorpusSpec {
  Index n_points = 1000;
  Index dim = 64;
  Index n_clusters = 10;
  double spread = 0.3;
  std::uint64_t seed = 0;
};

struct SyntheticCorpus {
  EmbeddingMatrix embeddings;
  std::vector<std::int32_t> cluster_ids;
  Matrix<double> centers;  // n_clusters x dim
};

SyntheticCorpus generate_synthetic_corpus(const SyntheticCorpusSpec& spec);

// Uniformly random distinct-index pairs. Gold score = cosine of the two
// cluster centers; gold label = same-cluster indicator.
ScoredPairSet sample_scored_pairs(const SyntheticCorpus& corpus, Index n_pairs, Rng& rng);

}  // namespace binembed
