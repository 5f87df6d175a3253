#include "binembed/storage.hpp"

#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

namespace binembed {

namespace {

// Explicit little-endian encoding so files are portable across hosts.

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

void put_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

void put_f32(std::string& out, float v) { put_u32(out, std::bit_cast<std::uint32_t>(v)); }
void put_f64(std::string& out, double v) { put_u64(out, std::bit_cast<std::uint64_t>(v)); }

class Reader {
 public:
  Reader(std::string data, std::string path)
      : data_(std::move(data)), path_(std::move(path)) {}

  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) {
      v |= static_cast<std::uint32_t>(static_cast<unsigned char>(data_[pos_ + i])) << (8 * i);
    }
    pos_ += 4;
    return v;
  }

  std::uint64_t u64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) {
      v |= static_cast<std::uint64_t>(static_cast<unsigned char>(data_[pos_ + i])) << (8 * i);
    }
    pos_ += 8;
    return v;
  }

  float f32() { return std::bit_cast<float>(u32()); }
  double f64() { return std::bit_cast<double>(u64()); }

  std::array<char, 4> magic() {
    need(4);
    std::array<char, 4> m;
    std::memcpy(m.data(), data_.data() + pos_, 4);
    pos_ += 4;
    return m;
  }

  std::size_t remaining() const { return data_.size() - pos_; }
  const std::string& path() const { return path_; }

  void expect_consumed() const {
    if (pos_ != data_.size()) {
      throw TruncationError(path_ + ": " + std::to_string(data_.size() - pos_) +
                            " trailing bytes beyond the declared payload");
    }
  }

 private:
  void need(std::size_t n) const {
    if (pos_ + n > data_.size()) {
      throw TruncationError(path_ + ": expected " + std::to_string(pos_ + n) +
                            " bytes, file has " + std::to_string(data_.size()));
    }
  }

  std::string data_;
  std::string path_;
  std::size_t pos_ = 0;
};

void write_file(const std::filesystem::path& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open for writing: " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed: " + path.string());
}

Reader read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open: " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return Reader(std::move(buf).str(), path.string());
}

std::string make_header(const char* magic, std::uint64_t rows, std::uint32_t dim_or_bits) {
  std::string out;
  out.reserve(kHeaderBytes);
  out.append(magic, 4);
  put_u32(out, kFormatVersion);
  put_u64(out, rows);
  put_u32(out, dim_or_bits);
  return out;
}

struct Header {
  std::uint64_t rows;
  std::uint32_t dim_or_bits;
};

Header read_header(Reader& r, const char* expected_magic) {
  const auto magic = r.magic();
  if (std::memcmp(magic.data(), expected_magic, 4) != 0) {
    throw MagicError(r.path() + ": magic '" + std::string(magic.data(), 4) +
                     "' does not match expected '" + expected_magic + "'");
  }
  const std::uint32_t version = r.u32();
  if (version != kFormatVersion) {
    throw VersionError(r.path() + ": version " + std::to_string(version) +
                       " not supported (expected " + std::to_string(kFormatVersion) + ")");
  }
  Header h;
  h.rows = r.u64();
  h.dim_or_bits = r.u32();
  if (h.rows == 0 || h.dim_or_bits == 0) {
    throw CorruptionError(r.path() + ": zero rows or width in header");
  }
  return h;
}

void put_matrix_f64(std::string& out, const Matrix<double>& m) {
  for (Index i = 0; i < m.rows(); ++i)
    for (Index j = 0; j < m.cols(); ++j) put_f64(out, m(i, j));
}

Matrix<double> read_matrix_f64(Reader& r, Index rows, Index cols) {
  Matrix<double> m(rows, cols);
  for (Index i = 0; i < rows; ++i)
    for (Index j = 0; j < cols; ++j) m(i, j) = r.f64();
  return m;
}

void put_vector_f64(std::string& out, const Vector<double>& v) {
  for (Index i = 0; i < v.size(); ++i) put_f64(out, v(i));
}

Vector<double> read_vector_f64(Reader& r, Index n) {
  Vector<double> v(n);
  for (Index i = 0; i < n; ++i) v(i) = r.f64();
  return v;
}

}  // namespace

void save_embeddings(const std::filesystem::path& path, const EmbeddingMatrix& h) {
  validate_embeddings(h);
  std::string out = make_header("BEMB", static_cast<std::uint64_t>(h.rows()),
                                static_cast<std::uint32_t>(h.cols()));
  out.reserve(out.size() + static_cast<std::size_t>(h.size()) * 4);
  for (Index i = 0; i < h.rows(); ++i)
    for (Index j = 0; j < h.cols(); ++j) put_f32(out, h(i, j));
  write_file(path, out);
}

EmbeddingMatrix load_embeddings(const std::filesystem::path& path) {
  Reader r = read_file(path);
  const Header hd = read_header(r, "BEMB");
  EmbeddingMatrix h(static_cast<Index>(hd.rows), static_cast<Index>(hd.dim_or_bits));
  for (Index i = 0; i < h.rows(); ++i)
    for (Index j = 0; j < h.cols(); ++j) h(i, j) = r.f32();
  r.expect_consumed();
  validate_embeddings(h);
  return h;
}

void save_codes(const std::filesystem::path& path, const BinaryCodeSet& codes) {
  std::string out = make_header("BCOD", static_cast<std::uint64_t>(codes.rows()),
                                static_cast<std::uint32_t>(codes.bits()));
  out.reserve(out.size() + codes.words().size() * 8);
  for (std::uint64_t w : codes.words()) put_u64(out, w);
  write_file(path, out);
}

BinaryCodeSet load_codes(const std::filesystem::path& path) {
  Reader r = read_file(path);
  const Header hd = read_header(r, "BCOD");
  BinaryCodeSet codes(static_cast<Index>(hd.rows), static_cast<Index>(hd.dim_or_bits));
  for (std::uint64_t& w : codes.words()) w = r.u64();
  r.expect_consumed();

  // Pad bits past the declared width must be zero.
  const Index bits = codes.bits();
  const Index tail = bits % 64;
  if (tail != 0) {
    const std::uint64_t pad_mask = ~((1ull << tail) - 1);
    for (Index i = 0; i < codes.rows(); ++i) {
      if (codes.row(i)[codes.words_per_row() - 1] & pad_mask) {
        throw CorruptionError(path.string() + ": nonzero pad bits in row " +
                              std::to_string(i));
      }
    }
  }
  return codes;
}

void save_model(const std::filesystem::path& path, const BinarizerModel& model) {
  std::string out = make_header("BMDL", static_cast<std::uint64_t>(model_bits(model)),
                                static_cast<std::uint32_t>(model_dim(model)));

  if (const auto* ht = std::get_if<HardThresholdModel>(&model)) {
    put_u32(out, static_cast<std::uint32_t>(MethodTag::hard_threshold));
    put_f64(out, ht->threshold);
  } else if (const auto* rp = std::get_if<RandomProjectionModel>(&model)) {
    put_u32(out, static_cast<std::uint32_t>(MethodTag::random_projection));
    put_u64(out, rp->seed);
    put_matrix_f64(out, rp->weights);
  } else if (const auto* pca = std::get_if<PcaModel>(&model)) {
    put_u32(out, static_cast<std::uint32_t>(MethodTag::pca));
    put_vector_f64(out, pca->mean);
    put_matrix_f64(out, pca->components);
    put_vector_f64(out, pca->eigenvalues);
  } else {
    const auto& ae = std::get<AutoencoderModel>(model);
    put_u32(out, static_cast<std::uint32_t>(MethodTag::autoencoder));
    put_u32(out, static_cast<std::uint32_t>(ae.mode));
    put_matrix_f64(out, ae.enc_weights);
    put_vector_f64(out, ae.enc_bias);
    put_matrix_f64(out, ae.dec_weights);
    put_vector_f64(out, ae.dec_bias);
  }
  write_file(path, out);
}

BinarizerModel load_model(const std::filesystem::path& path) {
  Reader r = read_file(path);
  const Header hd = read_header(r, "BMDL");
  const Index bits = static_cast<Index>(hd.rows);
  const Index dim = static_cast<Index>(hd.dim_or_bits);
  const std::uint32_t tag = r.u32();

  BinarizerModel model;
  switch (static_cast<MethodTag>(tag)) {
    case MethodTag::hard_threshold: {
      HardThresholdModel ht;
      ht.threshold = r.f64();
      ht.dim = dim;
      model = ht;
      break;
    }
    case MethodTag::random_projection: {
      RandomProjectionModel rp;
      rp.seed = r.u64();
      rp.weights = read_matrix_f64(r, bits, dim);
      model = rp;
      break;
    }
    case MethodTag::pca: {
      PcaModel pca;
      pca.mean = read_vector_f64(r, dim);
      pca.components = read_matrix_f64(r, bits, dim);
      pca.eigenvalues = read_vector_f64(r, bits);
      model = pca;
      break;
    }
    case MethodTag::autoencoder: {
      AutoencoderModel ae;
      ae.mode = static_cast<BinarizeMode>(r.u32());
      ae.enc_weights = read_matrix_f64(r, bits, dim);
      ae.enc_bias = read_vector_f64(r, bits);
      ae.dec_weights = read_matrix_f64(r, dim, bits);
      ae.dec_bias = read_vector_f64(r, dim);
      model = ae;
      break;
    }
    default:
      throw CorruptionError(path.string() + ": unknown method tag " + std::to_string(tag));
  }
  r.expect_consumed();
  return model;
}

BinaryCodeSet binarize_with(const BinarizerModel& model, const EmbeddingMatrix& h) {
  if (const auto* ht = std::get_if<HardThresholdModel>(&model)) {
    if (h.cols() != ht->dim) {
      throw DimensionError("binarize_with: input dim " + std::to_string(h.cols()) +
                           " != model dim " + std::to_string(ht->dim));
    }
    return hard_threshold_binarize(h, ht->threshold);
  }
  if (const auto* rp = std::get_if<RandomProjectionModel>(&model)) {
    return random_projection_binarize(*rp, h);
  }
  if (const auto* pca = std::get_if<PcaModel>(&model)) {
    return pca_binarize(*pca, h);
  }
  return encode_codes(std::get<AutoencoderModel>(model), h);
}

Index model_bits(const BinarizerModel& model) {
  if (const auto* ht = std::get_if<HardThresholdModel>(&model)) return ht->dim;
  if (const auto* rp = std::get_if<RandomProjectionModel>(&model)) return rp->bits();
  if (const auto* pca = std::get_if<PcaModel>(&model)) return pca->bits();
  return std::get<AutoencoderModel>(model).bits();
}

Index model_dim(const BinarizerModel& model) {
  if (const auto* ht = std::get_if<HardThresholdModel>(&model)) return ht->dim;
  if (const auto* rp = std::get_if<RandomProjectionModel>(&model)) return rp->dim();
  if (const auto* pca = std::get_if<PcaModel>(&model)) return pca->dim();
  return std::get<AutoencoderModel>(model).dim();
}

std::string method_name(const BinarizerModel& model) {
  if (std::holds_alternative<HardThresholdModel>(model)) return "ht";
  if (std::holds_alternative<RandomProjectionModel>(model)) return "randproj";
  if (std::holds_alternative<PcaModel>(model)) return "pca";
  return "ae";
}

ScoredPairSet load_pairs_tsv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open: " + path.string());
  ScoredPairSet set;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream fields(line);
    ScoredPair p;
    long long a, b;
    if (!(fields >> a >> b >> p.gold_score)) {
      throw FormatError(path.string() + ":" + std::to_string(line_no) +
                        ": expected 'index_a<TAB>index_b<TAB>score'");
    }
    p.a = static_cast<Index>(a);
    p.b = static_cast<Index>(b);
    int label;
    if (fields >> label) {
      if (label != 0 && label != 1) {
        throw FormatError(path.string() + ":" + std::to_string(line_no) +
                          ": label must be 0 or 1");
      }
      p.gold_label = label;
    }
    if (!std::isfinite(p.gold_score)) {
      throw FormatError(path.string() + ":" + std::to_string(line_no) +
                        ": non-finite gold score");
    }
    set.pairs.push_back(p);
  }
  return set;
}

void save_pairs_tsv(const std::filesystem::path& path, const ScoredPairSet& pairs) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open for writing: " + path.string());
  out.precision(17);
  for (const ScoredPair& p : pairs.pairs) {
    out << p.a << '\t' << p.b << '\t' << p.gold_score;
    if (p.gold_label >= 0) out << '\t' << p.gold_label;
    out << '\n';
  }
  if (!out) throw IoError("write failed: " + path.string());
}

SyntheticCorpus generate_synthetic_corpus(const SyntheticCorpusSpec& spec) {
  if (spec.n_points < 1 || spec.dim < 1 || spec.n_clusters < 1) {
    throw ArgumentError("generate_synthetic_corpus: counts must be positive");
  }
  if (spec.n_clusters > spec.n_points) {
    throw ArgumentError("generate_synthetic_corpus: more clusters than points");
  }
  if (!(spec.spread > 0.0)) {
    throw ArgumentError("generate_synthetic_corpus: spread must be > 0");
  }

  Rng rng(spec.seed);
  SyntheticCorpus corpus;
  corpus.centers.resize(spec.n_clusters, spec.dim);
  for (Index c = 0; c < spec.n_clusters; ++c) {
    for (Index j = 0; j < spec.dim; ++j) corpus.centers(c, j) = rng.normal();
  }

  corpus.embeddings.resize(spec.n_points, spec.dim);
  corpus.cluster_ids.resize(static_cast<std::size_t>(spec.n_points));
  for (Index i = 0; i < spec.n_points; ++i) {
    const Index c = i % spec.n_clusters;
    corpus.cluster_ids[i] = static_cast<std::int32_t>(c);
    for (Index j = 0; j < spec.dim; ++j) {
      corpus.embeddings(i, j) =
          static_cast<float>(corpus.centers(c, j) + spec.spread * rng.normal());
    }
  }
  return corpus;
}

ScoredPairSet sample_scored_pairs(const SyntheticCorpus& corpus, Index n_pairs, Rng& rng) {
  const Index n = corpus.embeddings.rows();
  if (n < 2) throw ArgumentError("sample_scored_pairs: need at least two points");
  if (n_pairs < 1) throw ArgumentError("sample_scored_pairs: n_pairs must be positive");

  ScoredPairSet set;
  set.score_min = -1.0;
  set.score_max = 1.0;
  set.pairs.reserve(static_cast<std::size_t>(n_pairs));
  for (Index t = 0; t < n_pairs; ++t) {
    ScoredPair p;
    p.a = static_cast<Index>(rng.next_below(static_cast<std::uint64_t>(n)));
    do {
      p.b = static_cast<Index>(rng.next_below(static_cast<std::uint64_t>(n)));
    } while (p.b == p.a);
    const std::int32_t ca = corpus.cluster_ids[p.a];
    const std::int32_t cb = corpus.cluster_ids[p.b];
    p.gold_score = cosine_similarity(corpus.centers.row(ca), corpus.centers.row(cb));
    p.gold_label = ca == cb ? 1 : 0;
    set.pairs.push_back(p);
  }
  return set;
}

}  // namespace binembed
