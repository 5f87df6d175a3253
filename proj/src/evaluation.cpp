#include "binembed/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <unordered_set>

namespace binembed {

namespace {

void check_pair_indices(const ScoredPairSet& pairs, Index rows, const char* what) {
  for (const ScoredPair& p : pairs.pairs) {
    if (p.a < 0 || p.a >= rows || p.b < 0 || p.b >= rows) {
      throw ArgumentError(std::string(what) + ": pair index out of range (" +
                          std::to_string(p.a) + ", " + std::to_string(p.b) +
                          ") for " + std::to_string(rows) + " rows");
    }
  }
}

}  // namespace

double pearson(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw DimensionError("pearson: lengths differ");
  const std::size_t n = x.size();
  if (n < 2) throw ArgumentError("pearson: need at least two observations");

  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);

  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dx = x[i] - mx;
    const double dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0) {
    throw DegenerateInputError("pearson: zero-variance sequence");
  }
  return sxy / std::sqrt(sxx * syy);
}

std::vector<double> average_ranks(std::span<const double> x) {
  const std::size_t n = x.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(),
            [&](std::size_t i, std::size_t j) { return x[i] < x[j]; });

  std::vector<double> ranks(n, 0.0);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && x[order[j + 1]] == x[order[i]]) ++j;
    const double shared = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
    for (std::size_t t = i; t <= j; ++t) ranks[order[t]] = shared;
    i = j + 1;
  }
  return ranks;
}

double spearman(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw DimensionError("spearman: lengths differ");
  const std::vector<double> rx = average_ranks(x);
  const std::vector<double> ry = average_ranks(y);
  return pearson(rx, ry);
}

std::vector<double> score_pairs_hamming(const BinaryCodeSet& codes,
                                        const ScoredPairSet& pairs) {
  check_pair_indices(pairs, codes.rows(), "score_pairs_hamming");
  std::vector<double> scores;
  scores.reserve(pairs.pairs.size());
  for (const ScoredPair& p : pairs.pairs) {
    scores.push_back(-static_cast<double>(hamming_distance(codes.row(p.a), codes.row(p.b))));
  }
  return scores;
}

std::vector<double> score_pairs_cosine(const EmbeddingMatrix& embeddings,
                                       const ScoredPairSet& pairs) {
  check_pair_indices(pairs, embeddings.rows(), "score_pairs_cosine");
  std::vector<double> scores;
  scores.reserve(pairs.pairs.size());
  for (const ScoredPair& p : pairs.pairs) {
    scores.push_back(cosine_similarity(embeddings.row(p.a), embeddings.row(p.b)));
  }
  return scores;
}

std::vector<int> classify_pairs_mean_threshold(std::span<const double> scores) {
  if (scores.empty()) throw ArgumentError("classify_pairs_mean_threshold: empty scores");
  double mean = 0.0;
  for (double s : scores) mean += s;
  mean /= static_cast<double>(scores.size());
  std::vector<int> labels(scores.size());
  for (std::size_t i = 0; i < scores.size(); ++i) {
    labels[i] = scores[i] > mean ? 1 : 0;
  }
  return labels;
}

double pair_accuracy(std::span<const int> predicted, std::span<const int> gold) {
  if (predicted.size() != gold.size()) throw DimensionError("pair_accuracy: lengths differ");
  if (predicted.empty()) throw ArgumentError("pair_accuracy: empty input");
  std::size_t hits = 0;
  for (std::size_t i = 0; i < predicted.size(); ++i) {
    if (predicted[i] == gold[i]) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(predicted.size());
}

double recall_at_k(const std::vector<NeighborList>& binary_nn,
                   const std::vector<NeighborList>& oracle_nn, Index k) {
  if (k < 1) throw ArgumentError("recall_at_k: k must be positive");
  if (binary_nn.size() != oracle_nn.size()) {
    throw DimensionError("recall_at_k: neighbor lists cover different query counts");
  }
  if (binary_nn.empty()) throw ArgumentError("recall_at_k: no queries");

  double total = 0.0;
  for (std::size_t q = 0; q < binary_nn.size(); ++q) {
    if (binary_nn[q].query != oracle_nn[q].query) {
      throw DimensionError("recall_at_k: query sets differ at position " + std::to_string(q));
    }
    if (static_cast<Index>(binary_nn[q].neighbors.size()) < k ||
        static_cast<Index>(oracle_nn[q].neighbors.size()) < k) {
      throw ArgumentError("recall_at_k: a neighbor list is shorter than k");
    }
    std::unordered_set<Index> oracle_top;
    for (Index i = 0; i < k; ++i) oracle_top.insert(oracle_nn[q].neighbors[i].index);
    Index hits = 0;
    for (Index i = 0; i < k; ++i) {
      if (oracle_top.count(binary_nn[q].neighbors[i].index)) ++hits;
    }
    total += static_cast<double>(hits) / static_cast<double>(k);
  }
  return total / static_cast<double>(binary_nn.size());
}

}  // namespace binembed
