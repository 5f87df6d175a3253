#pragma once

#include <bit>
#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "binembed/error.hpp"

namespace binembed {

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

using Index = Eigen::Index;

// N x L continuous embeddings, one row per sentence. 32-bit storage; every
// reduction over these promotes to double.
using EmbeddingMatrix = Matrix<float>;

// Throws unless `h` is non-empty and every entry is finite.
template <typename Derived>
void validate_embeddings(const Eigen::MatrixBase<Derived>& h) {
  if (h.rows() < 1 || h.cols() < 1) {
    throw ArgumentError("embedding matrix must have at least one row and one column");
  }
  if (!h.allFinite()) {
    throw DegenerateInputError("embedding matrix contains NaN or Inf");
  }
}

// ---------------------------------------------------------------------------
// Deterministic random number generation
// ---------------------------------------------------------------------------

// splitmix64 stream. The integer and uniform-double outputs are bit-portable
// across platforms; normal() goes through libm and is only guaranteed
// reproducible for a fixed platform/toolchain. split() derives an independent
// child stream, which is how parallel work must obtain generators.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() {
    std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ull);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
  }

  // Uniform in [0, 1), 53-bit resolution.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Standard normal via Box-Muller; second value cached.
  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u1 = 1.0 - uniform();  // (0, 1]
    double u2 = uniform();
    double r = std::sqrt(-2.0 * std::log(u1));
    double theta = 6.283185307179586476925286766559 * u2;
    spare_ = r * std::sin(theta);
    have_spare_ = true;
    return r * std::cos(theta);
  }

  // Uniform integer in [0, n). Lemire multiply-shift; n must be positive.
  std::uint64_t next_below(std::uint64_t n) {
    return static_cast<std::uint64_t>(
        (static_cast<unsigned __int128>(next_u64()) * n) >> 64);
  }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::swap(v[i - 1], v[next_below(i)]);
    }
  }

  Rng split() { return Rng(next_u64()); }

 private:
  std::uint64_t state_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

// ---------------------------------------------------------------------------
// Bit-packed binary codes
// ---------------------------------------------------------------------------

// N x D binary codes packed LSB-first into 64-bit words: bit j of a row is
// (word[j/64] >> (j%64)) & 1. Pad bits past D in the last word are zero, and
// stay zero; hamming_distance relies on that.
class BinaryCodeSet {
 public:
  BinaryCodeSet(Index rows, Index bits)
      : rows_(rows), bits_(bits), words_per_row_((bits + 63) / 64) {
    if (rows < 1 || bits < 1) {
      throw ArgumentError("binary code set must have at least one row and one bit");
    }
    words_.assign(static_cast<std::size_t>(rows_) * words_per_row_, 0);
  }

  Index rows() const { return rows_; }
  Index bits() const { return bits_; }
  Index words_per_row() const { return words_per_row_; }

  std::span<const std::uint64_t> row(Index i) const {
    return {words_.data() + i * words_per_row_, static_cast<std::size_t>(words_per_row_)};
  }
  std::span<std::uint64_t> row(Index i) {
    return {words_.data() + i * words_per_row_, static_cast<std::size_t>(words_per_row_)};
  }

  void set_bit(Index r, Index j, bool v) {
    std::uint64_t& w = words_[r * words_per_row_ + j / 64];
    const std::uint64_t mask = 1ull << (j % 64);
    w = v ? (w | mask) : (w & ~mask);
  }

  bool bit(Index r, Index j) const {
    return (words_[r * words_per_row_ + j / 64] >> (j % 64)) & 1;
  }

  std::vector<std::uint8_t> unpack_row(Index r) const {
    std::vector<std::uint8_t> out(static_cast<std::size_t>(bits_));
    for (Index j = 0; j < bits_; ++j) out[j] = bit(r, j) ? 1 : 0;
    return out;
  }

  const std::vector<std::uint64_t>& words() const { return words_; }
  std::vector<std::uint64_t>& words() { return words_; }

  bool operator==(const BinaryCodeSet& other) const {
    return rows_ == other.rows_ && bits_ == other.bits_ && words_ == other.words_;
  }

 private:
  Index rows_;
  Index bits_;
  Index words_per_row_;
  std::vector<std::uint64_t> words_;
};

// Packs a {0,1} sequence into LSB-first words. Values other than 0/1 are
// rejected.
inline std::vector<std::uint64_t> pack_bits(std::span<const std::uint8_t> bits) {
  if (bits.empty()) throw ArgumentError("pack_bits: empty bit sequence");
  std::vector<std::uint64_t> words((bits.size() + 63) / 64, 0);
  for (std::size_t j = 0; j < bits.size(); ++j) {
    if (bits[j] > 1) throw ArgumentError("pack_bits: values must be 0 or 1");
    words[j / 64] |= static_cast<std::uint64_t>(bits[j]) << (j % 64);
  }
  return words;
}

// ---------------------------------------------------------------------------
// Distance kernels
// ---------------------------------------------------------------------------

// Hamming distance between two packed rows of equal width: XOR + popcount per
// word. Pad bits must be zero on both sides.
inline std::int64_t hamming_distance(std::span<const std::uint64_t> a,
                                     std::span<const std::uint64_t> b) {
  if (a.size() != b.size()) {
    throw DimensionError("hamming_distance: rows have different widths");
  }
  std::int64_t d = 0;
  for (std::size_t w = 0; w < a.size(); ++w) {
    d += std::popcount(a[w] ^ b[w]);
  }
  return d;
}

inline std::int64_t hamming_distance(const BinaryCodeSet& a, Index i,
                                     const BinaryCodeSet& b, Index j) {
  if (a.bits() != b.bits()) {
    throw DimensionError("hamming_distance: code widths differ (" +
                         std::to_string(a.bits()) + " vs " + std::to_string(b.bits()) + ")");
  }
  return hamming_distance(a.row(i), b.row(j));
}

// cos(u, v) with double accumulation. Throws on length mismatch and on
// zero-norm input.
template <typename DerivedU, typename DerivedV>
double cosine_similarity(const Eigen::MatrixBase<DerivedU>& u,
                         const Eigen::MatrixBase<DerivedV>& v) {
  if (u.size() != v.size()) {
    throw DimensionError("cosine_similarity: vector lengths differ (" +
                         std::to_string(u.size()) + " vs " + std::to_string(v.size()) + ")");
  }
  double dot = 0.0, nu = 0.0, nv = 0.0;
  for (Index i = 0; i < u.size(); ++i) {
    const double a = static_cast<double>(u(i));
    const double b = static_cast<double>(v(i));
    dot += a * b;
    nu += a * a;
    nv += b * b;
  }
  if (nu == 0.0 || nv == 0.0) {
    throw DegenerateInputError("cosine_similarity: zero-norm vector");
  }
  return dot / (std::sqrt(nu) * std::sqrt(nv));
}

}  // namespace binembed
