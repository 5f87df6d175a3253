#include "binembed/retrieval.hpp"

#include <algorithm>
#include <chrono>
#include <string>

namespace binembed {

namespace {

// Total order encoding the tie rule. Smaller key wins: primary by score
// (already oriented so smaller is better), secondary by database index.
struct Candidate {
  double key = 0.0;
  Index index = 0;
  double score = 0.0;

  bool operator<(const Candidate& o) const {
    return key < o.key || (key == o.key && index < o.index);
  }
};

// Bounded selection: keeps the k best candidates in a max-heap so each new
// candidate costs O(log k).
class TopK {
 public:
  explicit TopK(Index k) : k_(static_cast<std::size_t>(k)) { heap_.reserve(k_ + 1); }

  void offer(const Candidate& c) {
    if (heap_.size() < k_) {
      heap_.push_back(c);
      std::push_heap(heap_.begin(), heap_.end());
    } else if (c < heap_.front()) {
      std::pop_heap(heap_.begin(), heap_.end());
      heap_.back() = c;
      std::push_heap(heap_.begin(), heap_.end());
    }
  }

  std::vector<Neighbor> take_sorted() {
    std::sort(heap_.begin(), heap_.end());
    std::vector<Neighbor> out;
    out.reserve(heap_.size());
    for (const Candidate& c : heap_) out.push_back({c.index, c.score});
    return out;
  }

 private:
  std::size_t k_;
  std::vector<Candidate> heap_;
};

void check_k(Index k, Index candidates, const char* what) {
  if (k < 1) throw ArgumentError(std::string(what) + ": k must be positive");
  if (k > candidates) {
    throw ArgumentError(std::string(what) + ": k = " + std::to_string(k) +
                        " exceeds the " + std::to_string(candidates) +
                        " available database rows");
  }
}

void check_mask(bool mask_self, Index q_rows, Index db_rows, const char* what) {
  if (mask_self && q_rows != db_rows) {
    throw ArgumentError(std::string(what) +
                        ": mask_self requires queries and database of equal size");
  }
}

}  // namespace

std::vector<NeighborList> knn_hamming(const BinaryCodeSet& queries,
                                      const BinaryCodeSet& database, Index k,
                                      bool mask_self) {
  if (queries.bits() != database.bits()) {
    throw DimensionError("knn_hamming: code widths differ (" +
                         std::to_string(queries.bits()) + " vs " +
                         std::to_string(database.bits()) + ")");
  }
  check_mask(mask_self, queries.rows(), database.rows(), "knn_hamming");
  check_k(k, database.rows() - (mask_self ? 1 : 0), "knn_hamming");

  std::vector<NeighborList> results(static_cast<std::size_t>(queries.rows()));
  for (Index q = 0; q < queries.rows(); ++q) {
    TopK top(k);
    const auto qrow = queries.row(q);
    for (Index d = 0; d < database.rows(); ++d) {
      if (mask_self && d == q) continue;
      const double dist = static_cast<double>(hamming_distance(qrow, database.row(d)));
      top.offer({dist, d, dist});
    }
    results[q].query = q;
    results[q].neighbors = top.take_sorted();
  }
  return results;
}

std::vector<NeighborList> knn_cosine(const EmbeddingMatrix& queries,
                                     const EmbeddingMatrix& database, Index k,
                                     bool mask_self) {
  validate_embeddings(queries);
  validate_embeddings(database);
  if (queries.cols() != database.cols()) {
    throw DimensionError("knn_cosine: dims differ (" + std::to_string(queries.cols()) +
                         " vs " + std::to_string(database.cols()) + ")");
  }
  check_mask(mask_self, queries.rows(), database.rows(), "knn_cosine");
  check_k(k, database.rows() - (mask_self ? 1 : 0), "knn_cosine");

  const Matrix<double> qd = queries.cast<double>();
  const Matrix<double> dd = database.cast<double>();
  const Vector<double> qnorm = qd.rowwise().norm();
  const Vector<double> dnorm = dd.rowwise().norm();
  for (Index i = 0; i < qnorm.size(); ++i) {
    if (qnorm(i) == 0.0) {
      throw DegenerateInputError("knn_cosine: query row " + std::to_string(i) +
                                 " has zero norm");
    }
  }
  for (Index i = 0; i < dnorm.size(); ++i) {
    if (dnorm(i) == 0.0) {
      throw DegenerateInputError("knn_cosine: database row " + std::to_string(i) +
                                 " has zero norm");
    }
  }

  std::vector<NeighborList> results(static_cast<std::size_t>(queries.rows()));
  constexpr Index kBlock = 128;
  for (Index start = 0; start < qd.rows(); start += kBlock) {
    const Index m = std::min(kBlock, qd.rows() - start);
    const Matrix<double> dots = qd.middleRows(start, m) * dd.transpose();
    for (Index r = 0; r < m; ++r) {
      const Index q = start + r;
      TopK top(k);
      for (Index d = 0; d < dd.rows(); ++d) {
        if (mask_self && d == q) continue;
        const double sim = dots(r, d) / (qnorm(q) * dnorm(d));
        top.offer({-sim, d, sim});  // negate: larger similarity sorts first
      }
      results[q].query = q;
      results[q].neighbors = top.take_sorted();
    }
  }
  return results;
}

BenchResult bench_pair_scoring(Index n_pairs, Index bits, Index repetitions, Rng& rng) {
  if (n_pairs < 1 || bits < 1 || repetitions < 1) {
    throw ArgumentError("bench_pair_scoring: counts must be positive");
  }

  const Index n_vectors = std::min<Index>(n_pairs * 2, 1024);
  EmbeddingMatrix vectors(n_vectors, bits);
  for (Index i = 0; i < n_vectors; ++i) {
    for (Index j = 0; j < bits; ++j) {
      vectors(i, j) = static_cast<float>(rng.uniform(-1.0, 1.0));
    }
  }
  BinaryCodeSet codes(n_vectors, bits);
  for (Index i = 0; i < n_vectors; ++i) {
    auto row = codes.row(i);
    for (Index j = 0; j < bits; ++j) {
      if (vectors(i, j) > 0.0f) row[j / 64] |= 1ull << (j % 64);
    }
  }
  std::vector<std::pair<Index, Index>> pairs(static_cast<std::size_t>(n_pairs));
  for (auto& p : pairs) {
    p.first = static_cast<Index>(rng.next_below(static_cast<std::uint64_t>(n_vectors)));
    p.second = static_cast<Index>(rng.next_below(static_cast<std::uint64_t>(n_vectors)));
  }

  using Clock = std::chrono::steady_clock;
  volatile double cosine_sink = 0.0;
  volatile std::int64_t hamming_sink = 0;

  auto run_cosine = [&]() {
    double acc = 0.0;
    const auto t0 = Clock::now();
    for (const auto& p : pairs) {
      acc += cosine_similarity(vectors.row(p.first), vectors.row(p.second));
    }
    const auto t1 = Clock::now();
    cosine_sink = acc;
    return std::chrono::duration<double, std::nano>(t1 - t0).count() /
           static_cast<double>(n_pairs);
  };
  auto run_hamming = [&]() {
    std::int64_t acc = 0;
    const auto t0 = Clock::now();
    for (const auto& p : pairs) {
      acc += hamming_distance(codes.row(p.first), codes.row(p.second));
    }
    const auto t1 = Clock::now();
    hamming_sink = acc;
    return std::chrono::duration<double, std::nano>(t1 - t0).count() /
           static_cast<double>(n_pairs);
  };

  run_cosine();  // warm-up
  run_hamming();

  std::vector<double> cosine_ns, hamming_ns;
  for (Index rep = 0; rep < repetitions; ++rep) {
    cosine_ns.push_back(run_cosine());
    hamming_ns.push_back(run_hamming());
  }
  auto median = [](std::vector<double> v) {
    std::sort(v.begin(), v.end());
    return v[v.size() / 2];
  };

  BenchResult result;
  result.bits = bits;
  result.n_pairs = n_pairs;
  result.repetitions = repetitions;
  result.mean_ns_per_pair_cosine = median(cosine_ns);
  result.mean_ns_per_pair_hamming = median(hamming_ns);
  result.speedup = result.mean_ns_per_pair_cosine / result.mean_ns_per_pair_hamming;
  return result;
}

}  // namespace binembed
