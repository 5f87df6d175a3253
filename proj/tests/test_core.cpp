#include <doctest.h>

#include <cstdint>
#include <vector>

#include "binembed/core.hpp"
#include "oracles.hpp"

using namespace binembed;

namespace {

BinaryCodeSet random_codes(Index rows, Index bits, Rng& rng) {
  BinaryCodeSet codes(rows, bits);
  for (Index r = 0; r < rows; ++r) {
    for (Index j = 0; j < bits; ++j) {
      codes.set_bit(r, j, rng.next_u64() & 1);
    }
  }
  return codes;
}

}  // namespace

TEST_CASE("hamming_distance on word patterns") {
  const std::vector<std::uint64_t> a{0b1010};
  const std::vector<std::uint64_t> b{0b0110};
  CHECK(hamming_distance(std::span<const std::uint64_t>(a),
                         std::span<const std::uint64_t>(b)) == 2);
  CHECK(hamming_distance(std::span<const std::uint64_t>(a),
                         std::span<const std::uint64_t>(a)) == 0);
}

TEST_CASE("hamming_distance of complementary 4096-bit codes") {
  BinaryCodeSet ones(1, 4096);
  BinaryCodeSet zeros(1, 4096);
  for (Index j = 0; j < 4096; ++j) ones.set_bit(0, j, true);
  CHECK(hamming_distance(ones, 0, zeros, 0) == 4096);
}

TEST_CASE("hamming_distance rejects mismatched widths") {
  BinaryCodeSet a(1, 64);
  BinaryCodeSet b(1, 65);
  CHECK_THROWS_AS(hamming_distance(a, 0, b, 0), DimensionError);
}

TEST_CASE("hamming_distance matches the per-bit oracle for widths 1..130") {
  Rng rng(42);
  for (Index bits = 1; bits <= 130; ++bits) {
    BinaryCodeSet codes = random_codes(4, bits, rng);
    for (Index r = 0; r < 4; ++r) {
      for (Index s = 0; s < 4; ++s) {
        const auto expected = oracle::hamming(codes.unpack_row(r), codes.unpack_row(s));
        CHECK(hamming_distance(codes, r, codes, s) == expected);
      }
    }
  }
}

TEST_CASE("hamming_distance is a metric") {
  Rng rng(7);
  const Index bits = 97;
  BinaryCodeSet codes = random_codes(24, bits, rng);
  for (Index x = 0; x < 24; ++x) {
    for (Index y = 0; y < 24; ++y) {
      const auto dxy = hamming_distance(codes, x, codes, y);
      CHECK(dxy >= 0);
      CHECK(dxy <= bits);
      CHECK(dxy == hamming_distance(codes, y, codes, x));
      if (x == y) CHECK(dxy == 0);
      if (dxy == 0) CHECK(codes.unpack_row(x) == codes.unpack_row(y));
      for (Index z = 0; z < 24; ++z) {
        CHECK(dxy <= hamming_distance(codes, x, codes, z) +
                         hamming_distance(codes, z, codes, y));
      }
    }
  }
}

TEST_CASE("pack_bits packs LSB-first") {
  const std::vector<std::uint8_t> bits{1, 0, 1};
  const auto words = pack_bits(bits);
  REQUIRE(words.size() == 1);
  CHECK(words[0] == 5);

  const std::vector<std::uint8_t> ones(65, 1);
  const auto two_words = pack_bits(ones);
  REQUIRE(two_words.size() == 2);
  CHECK(two_words[0] == 0xFFFFFFFFFFFFFFFFull);
  CHECK(two_words[1] == 0x1ull);
}

TEST_CASE("pack_bits rejects empty and non-binary input") {
  CHECK_THROWS_AS(pack_bits({}), ArgumentError);
  const std::vector<std::uint8_t> bad{0, 2};
  CHECK_THROWS_AS(pack_bits(bad), ArgumentError);
}

TEST_CASE("unpack(pack(bits)) is the identity and pad bits stay zero") {
  Rng rng(11);
  for (int trial = 0; trial < 50; ++trial) {
    const Index bits = 1 + static_cast<Index>(rng.next_below(200));
    std::vector<std::uint8_t> row(static_cast<std::size_t>(bits));
    for (auto& b : row) b = rng.next_u64() & 1;

    const auto words = pack_bits(row);
    BinaryCodeSet codes(1, bits);
    std::copy(words.begin(), words.end(), codes.row(0).begin());
    CHECK(codes.unpack_row(0) == row);

    if (bits % 64 != 0) {
      const std::uint64_t pad_mask = ~((1ull << (bits % 64)) - 1);
      CHECK((words.back() & pad_mask) == 0);
    }
  }
}

TEST_CASE("BinaryCodeSet rejects empty shapes") {
  CHECK_THROWS_AS(BinaryCodeSet(0, 8), ArgumentError);
  CHECK_THROWS_AS(BinaryCodeSet(8, 0), ArgumentError);
}

TEST_CASE("cosine_similarity basics") {
  Vector<float> u(3), v(3);
  u << 1, 2, 3;
  v << 1, 2, 3;
  CHECK(cosine_similarity(u, v) == doctest::Approx(1.0));

  Vector<float> e1(2), e2(2), neg(2);
  e1 << 1, 0;
  e2 << 0, 1;
  neg << -1, 0;
  CHECK(cosine_similarity(e1, e2) == doctest::Approx(0.0));
  CHECK(cosine_similarity(e1, neg) == doctest::Approx(-1.0));
}

TEST_CASE("cosine_similarity is scale invariant") {
  Rng rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    Vector<double> u(16), v(16);
    for (Index i = 0; i < 16; ++i) {
      u(i) = rng.uniform(-1, 1);
      v(i) = rng.uniform(-1, 1);
    }
    const double base = cosine_similarity(u, v);
    for (double c : {0.5, 2.0, 77.0, 1e4}) {
      CHECK(cosine_similarity((c * u).eval(), v) == doctest::Approx(base).epsilon(1e-6));
    }
  }
}

TEST_CASE("cosine_similarity rejects degenerate input") {
  Vector<float> u(2), zero(2), longer(3);
  u << 1, 2;
  zero << 0, 0;
  longer << 1, 2, 3;
  CHECK_THROWS_AS(cosine_similarity(u, zero), DegenerateInputError);
  CHECK_THROWS_AS(cosine_similarity(u, longer), DimensionError);
}

TEST_CASE("Rng streams are reproducible and splittable") {
  Rng a(123), b(123);
  for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());

  Rng parent(9);
  Rng child1 = parent.split();
  Rng child2 = parent.split();
  CHECK(child1.next_u64() != child2.next_u64());

  Rng c(55);
  for (int i = 0; i < 1000; ++i) {
    const double u = c.uniform();
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
    const double r = c.uniform(-2.0, 3.0);
    CHECK(r >= -2.0);
    CHECK(r < 3.0);
    CHECK(c.next_below(17) < 17);
  }
}

TEST_CASE("Rng shuffle is deterministic per seed") {
  std::vector<int> v1{1, 2, 3, 4, 5, 6, 7, 8};
  std::vector<int> v2 = v1;
  Rng a(77), b(77);
  a.shuffle(v1);
  b.shuffle(v2);
  CHECK(v1 == v2);
}

TEST_CASE("validate_embeddings rejects NaN and empty shapes") {
  EmbeddingMatrix ok(2, 2);
  ok << 1, 2, 3, 4;
  CHECK_NOTHROW(validate_embeddings(ok));

  EmbeddingMatrix bad = ok;
  bad(0, 1) = std::numeric_limits<float>::quiet_NaN();
  CHECK_THROWS_AS(validate_embeddings(bad), DegenerateInputError);
}
