#pragma once

#include <cstdint>
#include <vector>

#include "binembed/core.hpp"

namespace binembed {

// Exact brute-force k-NN over packed codes (Hamming) and over continuous
// embeddings (cosine), plus the pairwise scoring microbenchmark. Ties always
// break toward the lower database index so results are reproducible.

struct Neighbor {
  Index index = 0;
  double score = 0.0;  // Hamming distance or cosine similarity
};

struct NeighborList {
  Index query = 0;
  std::vector<Neighbor> neighbors;  // best first
};

// k smallest Hamming distances per query. With mask_self set, database row i
// is excluded for query i (queries and database must then be the same size).
std::vector<NeighborList> knn_hamming(const BinaryCodeSet& queries,
                                      const BinaryCodeSet& database, Index k,
                                      bool mask_self = false);

// k largest cosine similarities per query; double accumulation throughout.
std::vector<NeighborList> knn_cosine(const EmbeddingMatrix& queries,
                                     const EmbeddingMatrix& database, Index k,
                                     bool mask_self = false);

struct BenchResult {
  double mean_ns_per_pair_hamming = 0.0;
  double mean_ns_per_pair_cosine = 0.0;
  double speedup = 0.0;  // cosine mean / hamming mean
  Index bits = 0;
  Index n_pairs = 0;
  Index repetitions = 0;
};

// Times pairwise cosine (on float vectors of length `bits`) against pairwise
// Hamming (on the same vectors thresholded at zero). Single-threaded, one
// warm-up pass, median over repetitions.
BenchResult bench_pair_scoring(Index n_pairs, Index bits, Index repetitions, Rng& rng);

}  // namespace binembed
