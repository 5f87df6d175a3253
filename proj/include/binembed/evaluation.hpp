#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "binembed/core.hpp"
#include "binembed/retrieval.hpp"

namespace binembed {

// Sentence-matching metrics: rank correlations of similarity scores against
// gold scores, mean-threshold pair classification, and retrieval recall
// against the cosine oracle.

struct ScoredPair {
  Index a = 0;
  Index b = 0;
  double gold_score = 0.0;
  int gold_label = -1;  // 0/1 when the set carries labels, -1 otherwise
};

struct ScoredPairSet {
  std::vector<ScoredPair> pairs;
  double score_min = 0.0;
  double score_max = 5.0;

  bool has_labels() const {
    return !pairs.empty() && pairs.front().gold_label >= 0;
  }
};

// Sample Pearson correlation; both sequences need length >= 2 and nonzero
// variance.
double pearson(std::span<const double> x, std::span<const double> y);

// Pearson correlation of average ranks (ties share the mean of their rank
// range).
double spearman(std::span<const double> x, std::span<const double> y);

// Average ranks in [1, n], ties averaged. Exposed for the rank tests.
std::vector<double> average_ranks(std::span<const double> x);

// Per-pair similarity score = negated Hamming distance, so larger means more
// similar and the same correlation code handles both metrics.
std::vector<double> score_pairs_hamming(const BinaryCodeSet& codes,
                                        const ScoredPairSet& pairs);

// Cosine-similarity scores on the continuous embeddings, same orientation.
std::vector<double> score_pairs_cosine(const EmbeddingMatrix& embeddings,
                                       const ScoredPairSet& pairs);

// Label 1 iff the score strictly exceeds the mean score of the whole set.
std::vector<int> classify_pairs_mean_threshold(std::span<const double> scores);

// Fraction of agreeing labels.
double pair_accuracy(std::span<const int> predicted, std::span<const int> gold);

// Mean over queries of |top-k(binary) ∩ top-k(oracle)| / k. Both lists must
// cover the same query set with at least k entries each.
double recall_at_k(const std::vector<NeighborList>& binary_nn,
                   const std::vector<NeighborList>& oracle_nn, Index k);

struct EvalReport {
  std::optional<double> pearson;
  std::optional<double> spearman;
  std::optional<double> accuracy;
  std::map<Index, double> recall_at_k;
  // Configuration fingerprint.
  std::string method;
  Index bits = 0;
  std::uint64_t seed = 0;
  double lambda_sp = 0.0;
};

}  // namespace binembed
