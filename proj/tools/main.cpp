// binembed: convert continuous sentence embeddings into compact binary codes
// and evaluate them with Hamming-distance retrieval and matching metrics.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "binembed/autoencoder.hpp"
#include "binembed/binarizers.hpp"
#include "binembed/core.hpp"
#include "binembed/evaluation.hpp"
#include "binembed/retrieval.hpp"
#include "binembed/storage.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace binembed;

namespace {

std::uint64_t default_seed() {
  if (const char* env = std::getenv("BINEMBED_SEED")) {
    return std::strtoull(env, nullptr, 10);
  }
  return 0;
}

void write_json(const fs::path& path, const json& j) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open for writing: " + path.string());
  out << j.dump(2) << '\n';
  if (!out) throw IoError("write failed: " + path.string());
}

json neighbor_lists_to_json(const std::vector<NeighborList>& lists) {
  json arr = json::array();
  for (const NeighborList& nl : lists) {
    json hits = json::array();
    for (const Neighbor& n : nl.neighbors) {
      hits.push_back({{"index", n.index}, {"score", n.score}});
    }
    arr.push_back({{"query", nl.query}, {"hits", std::move(hits)}});
  }
  return arr;
}

std::vector<int> gold_labels(const ScoredPairSet& pairs) {
  std::vector<int> labels;
  labels.reserve(pairs.pairs.size());
  for (const ScoredPair& p : pairs.pairs) labels.push_back(p.gold_label);
  return labels;
}

std::vector<double> gold_scores(const ScoredPairSet& pairs) {
  std::vector<double> scores;
  scores.reserve(pairs.pairs.size());
  for (const ScoredPair& p : pairs.pairs) scores.push_back(p.gold_score);
  return scores;
}

struct FitOptions {
  std::string method;
  std::string embeddings_path;
  std::string out_path;
  Index bits = 2048;
  std::uint64_t seed = 0;
  double threshold = 0.0;
  double lambda_sp = 0.8;
  double lr = 1e-5;
  Index batch_size = 64;
  Index epochs = 10;
  std::string mode = "deterministic";
};

json run_fit(const FitOptions& opt) {
  const EmbeddingMatrix h = load_embeddings(opt.embeddings_path);
  Rng rng(opt.seed);

  BinarizerModel model;
  json summary{{"method", opt.method}, {"seed", opt.seed}, {"rows", h.rows()}, {"dim", h.cols()}};

  if (opt.method == "ht") {
    model = HardThresholdModel{opt.threshold, h.cols()};
    summary["bits"] = h.cols();
    summary["threshold"] = opt.threshold;
  } else if (opt.method == "randproj") {
    model = random_projection_fit(h.cols(), opt.bits, rng);
    summary["bits"] = opt.bits;
  } else if (opt.method == "pca") {
    model = pca_fit(h, opt.bits);
    summary["bits"] = opt.bits;
  } else if (opt.method == "ae" || opt.method == "ae-sp") {
    TrainConfig cfg;
    cfg.learning_rate = opt.lr;
    cfg.batch_size = opt.batch_size;
    cfg.lambda_sp = opt.method == "ae" ? 0.0 : opt.lambda_sp;
    cfg.bits = opt.bits;
    cfg.epochs = opt.epochs;
    cfg.seed = opt.seed;
    cfg.mode = opt.mode == "stochastic" ? BinarizeMode::stochastic
                                        : BinarizeMode::deterministic;
    TrainResult result = train(h, cfg, rng);
    summary["bits"] = opt.bits;
    summary["lambda_sp"] = cfg.lambda_sp;
    summary["learning_rate"] = cfg.learning_rate;
    summary["batch_size"] = cfg.batch_size;
    summary["mode"] = opt.mode;
    summary["steps"] = result.step_losses.size();
    summary["final_loss"] = result.step_losses.empty() ? 0.0 : result.step_losses.back();
    summary["final_epoch_mean_loss"] =
        result.epoch_mean_losses.empty() ? 0.0 : result.epoch_mean_losses.back();
    model = std::move(result.model);
  } else {
    throw ArgumentError("unknown method: " + opt.method);
  }

  save_model(opt.out_path, model);
  summary["model"] = opt.out_path;
  return summary;
}

struct EvalOptions {
  std::string codes_path;
  std::string embeddings_path;
  std::string pairs_path;
  std::string out_path;
  std::vector<Index> recall_ks;
  bool mask_self = true;
  std::string method = "unknown";
  std::uint64_t seed = 0;
  double lambda_sp = 0.0;
};

json run_eval(const EvalOptions& opt) {
  EvalReport report;
  report.method = opt.method;
  report.seed = opt.seed;
  report.lambda_sp = opt.lambda_sp;

  std::optional<BinaryCodeSet> codes;
  std::optional<EmbeddingMatrix> embeddings;
  if (!opt.codes_path.empty()) codes = load_codes(opt.codes_path);
  if (!opt.embeddings_path.empty()) embeddings = load_embeddings(opt.embeddings_path);
  if (codes) report.bits = codes->bits();

  json out{{"method", report.method},
           {"bits", report.bits},
           {"seed", report.seed},
           {"lambda_sp", report.lambda_sp}};

  if (!opt.pairs_path.empty()) {
    const ScoredPairSet pairs = load_pairs_tsv(opt.pairs_path);
    const std::vector<double> gold = gold_scores(pairs);
    if (codes) {
      const std::vector<double> scores = score_pairs_hamming(*codes, pairs);
      report.pearson = pearson(scores, gold);
      report.spearman = spearman(scores, gold);
      out["pearson"] = *report.pearson;
      out["spearman"] = *report.spearman;
      if (pairs.has_labels()) {
        const std::vector<int> predicted = classify_pairs_mean_threshold(scores);
        report.accuracy = pair_accuracy(predicted, gold_labels(pairs));
        out["accuracy"] = *report.accuracy;
      }
    }
    if (embeddings) {
      const std::vector<double> cos_scores = score_pairs_cosine(*embeddings, pairs);
      out["cosine_pearson"] = pearson(cos_scores, gold);
      out["cosine_spearman"] = spearman(cos_scores, gold);
      if (pairs.has_labels()) {
        out["cosine_accuracy"] = pair_accuracy(classify_pairs_mean_threshold(cos_scores),
                                               gold_labels(pairs));
      }
    }
  }

  if (!opt.recall_ks.empty()) {
    if (!codes || !embeddings) {
      throw ArgumentError("eval: recall@k needs both --codes and --embeddings");
    }
    Index max_k = 0;
    for (Index k : opt.recall_ks) max_k = std::max(max_k, k);
    const auto binary_nn = knn_hamming(*codes, *codes, max_k, opt.mask_self);
    const auto oracle_nn = knn_cosine(*embeddings, *embeddings, max_k, opt.mask_self);
    json recalls;
    for (Index k : opt.recall_ks) {
      const double r = recall_at_k(binary_nn, oracle_nn, k);
      report.recall_at_k[k] = r;
      recalls[std::to_string(k)] = r;
    }
    out["recall_at_k"] = recalls;
  }

  if (!opt.out_path.empty()) write_json(opt.out_path, out);
  return out;
}

// One sweep cell: fit + encode + eval, all artifacts under out_dir.
json run_sweep_cell(const std::string& method, Index bits, double lambda_sp,
                    const FitOptions& base_fit, const EvalOptions& base_eval,
                    const fs::path& out_dir) {
  std::string stem = method + "_b" + std::to_string(bits);
  if (method == "ae-sp") {
    json l = lambda_sp;  // shortest-round-trip formatting, e.g. 0.8
    stem += "_l" + l.dump();
  }
  const fs::path report_path = out_dir / (stem + ".json");
  if (fs::exists(report_path)) {
    std::ifstream in(report_path);
    json cached = json::parse(in);
    cached["skipped"] = true;
    return cached;
  }

  FitOptions fit_opt = base_fit;
  fit_opt.method = method;
  fit_opt.bits = bits;
  fit_opt.lambda_sp = lambda_sp;
  fit_opt.out_path = (out_dir / (stem + ".bmdl")).string();
  json fit_summary = run_fit(fit_opt);

  const BinarizerModel model = load_model(fit_opt.out_path);
  const EmbeddingMatrix h = load_embeddings(fit_opt.embeddings_path);
  const fs::path codes_path = out_dir / (stem + ".bcod");
  save_codes(codes_path, binarize_with(model, h));

  EvalOptions eval_opt = base_eval;
  eval_opt.codes_path = codes_path.string();
  eval_opt.method = method;
  eval_opt.lambda_sp = method == "ae-sp" ? lambda_sp : 0.0;
  eval_opt.out_path = report_path.string();
  json report = run_eval(eval_opt);
  report["fit"] = std::move(fit_summary);
  write_json(report_path, report);
  return report;
}

// Aligned metric table for humans; the JSON line that follows is for scripts.
void print_eval_table(const json& report) {
  auto cell = [&](const json& j, const char* key) -> std::string {
    if (!j.contains(key)) return "-";
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.4f", j[key].get<double>());
    return buf;
  };
  std::printf("%-12s %10s %10s\n", "metric", "binary", "cosine");
  std::printf("%-12s %10s %10s\n", "pearson", cell(report, "pearson").c_str(),
              cell(report, "cosine_pearson").c_str());
  std::printf("%-12s %10s %10s\n", "spearman", cell(report, "spearman").c_str(),
              cell(report, "cosine_spearman").c_str());
  std::printf("%-12s %10s %10s\n", "accuracy", cell(report, "accuracy").c_str(),
              cell(report, "cosine_accuracy").c_str());
  if (report.contains("recall_at_k")) {
    for (const auto& [k, v] : report["recall_at_k"].items()) {
      char buf[32];
      std::snprintf(buf, sizeof(buf), "%.4f", v.get<double>());
      std::printf("recall@%-5s %10s %10s\n", k.c_str(), buf, "-");
    }
  }
}

std::string csv_field(const json& j, const std::string& key) {
  if (!j.contains(key)) return "";
  return j[key].dump();
}

std::string csv_quote(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"binary sentence embedding toolkit"};
  app.require_subcommand(1);

  // --- gen ---------------------------------------------------------------
  struct {
    std::string out, pairs_out, clusters_out;
    Index n = 1000, dim = 64, clusters = 10, n_pairs = 1000;
    double spread = 0.3;
    std::uint64_t seed = default_seed();
  } gen;
  auto* cmd_gen = app.add_subcommand("gen", "generate a synthetic clustered corpus");
  cmd_gen->add_option("--out", gen.out, "output embeddings (.bemb)")->required();
  cmd_gen->add_option("--n", gen.n, "number of points");
  cmd_gen->add_option("--dim", gen.dim, "embedding dimension");
  cmd_gen->add_option("--clusters", gen.clusters, "number of clusters");
  cmd_gen->add_option("--spread", gen.spread, "within-cluster noise scale");
  cmd_gen->add_option("--seed", gen.seed, "rng seed");
  cmd_gen->add_option("--pairs-out", gen.pairs_out, "also write a scored pair TSV");
  cmd_gen->add_option("--n-pairs", gen.n_pairs, "pairs to sample for --pairs-out");
  cmd_gen->add_option("--clusters-out", gen.clusters_out, "write cluster ids, one per line");

  // --- fit ---------------------------------------------------------------
  FitOptions fit;
  fit.seed = default_seed();
  auto* cmd_fit = app.add_subcommand("fit", "fit a binarization model");
  cmd_fit->add_option("--method", fit.method, "ht | randproj | pca | ae | ae-sp")
      ->required()
      ->check(CLI::IsMember({"ht", "randproj", "pca", "ae", "ae-sp"}));
  cmd_fit->add_option("--embeddings", fit.embeddings_path, "input embeddings (.bemb)")
      ->required();
  cmd_fit->add_option("--out", fit.out_path, "output model (.bmdl)")->required();
  cmd_fit->add_option("--bits", fit.bits, "code width D (ignored for ht)");
  cmd_fit->add_option("--seed", fit.seed, "rng seed");
  cmd_fit->add_option("--threshold", fit.threshold, "hard threshold s (ht only)");
  cmd_fit->add_option("--lambda-sp", fit.lambda_sp, "semantic-preserving weight (ae-sp)");
  cmd_fit->add_option("--lr", fit.lr, "Adam learning rate");
  cmd_fit->add_option("--batch-size", fit.batch_size, "minibatch size");
  cmd_fit->add_option("--epochs", fit.epochs, "training epochs");
  cmd_fit->add_option("--mode", fit.mode, "training binarization: deterministic | stochastic")
      ->check(CLI::IsMember({"deterministic", "stochastic"}));

  // --- encode ------------------------------------------------------------
  struct {
    std::string model, embeddings, out;
  } enc;
  auto* cmd_encode = app.add_subcommand("encode", "binarize embeddings with a fitted model");
  cmd_encode->add_option("--model", enc.model, "model file (.bmdl)")->required();
  cmd_encode->add_option("--embeddings", enc.embeddings, "input embeddings (.bemb)")->required();
  cmd_encode->add_option("--out", enc.out, "output codes (.bcod)")->required();

  // --- knn ---------------------------------------------------------------
  struct {
    std::string codes, embeddings, query_codes, query_embeddings, out;
    Index k = 10;
    bool mask_self = true;
  } knn;
  auto* cmd_knn = app.add_subcommand("knn", "brute-force k nearest neighbors");
  cmd_knn->add_option("--codes", knn.codes, "database codes (.bcod), Hamming metric");
  cmd_knn->add_option("--embeddings", knn.embeddings, "database embeddings (.bemb), cosine metric");
  cmd_knn->add_option("--query-codes", knn.query_codes, "query codes (default: database)");
  cmd_knn->add_option("--query-embeddings", knn.query_embeddings,
                      "query embeddings (default: database)");
  cmd_knn->add_option("--k", knn.k, "neighbors per query");
  cmd_knn->add_flag("--mask-self,!--no-mask-self", knn.mask_self,
                    "exclude each query's own row (self-retrieval only)");
  cmd_knn->add_option("--out", knn.out, "output neighbor lists (JSON)")->required();

  // --- eval --------------------------------------------------------------
  EvalOptions eval;
  eval.seed = default_seed();
  std::string recall_ks_arg;
  auto* cmd_eval = app.add_subcommand("eval", "matching metrics and oracle recall");
  cmd_eval->add_option("--codes", eval.codes_path, "binary codes (.bcod)");
  cmd_eval->add_option("--embeddings", eval.embeddings_path, "continuous embeddings (.bemb)");
  cmd_eval->add_option("--pairs", eval.pairs_path, "scored pair TSV");
  cmd_eval->add_option("--recall-k", recall_ks_arg, "comma-separated k list, e.g. 1,5,10");
  cmd_eval->add_flag("--mask-self,!--no-mask-self", eval.mask_self,
                     "mask self-matches in recall computation");
  cmd_eval->add_option("--method", eval.method, "method name for the report fingerprint");
  cmd_eval->add_option("--seed", eval.seed, "seed for the report fingerprint");
  cmd_eval->add_option("--lambda-sp", eval.lambda_sp, "lambda for the report fingerprint");
  cmd_eval->add_option("--out", eval.out_path, "output report (JSON)");

  // --- bench -------------------------------------------------------------
  struct {
    Index bits = 4096, n_pairs = 10000, repetitions = 5;
    std::uint64_t seed = default_seed();
    std::string out;
  } bench;
  auto* cmd_bench = app.add_subcommand("bench", "pairwise cosine vs Hamming timing");
  cmd_bench->add_option("--bits", bench.bits, "bits and dims (equal, for a fair comparison)");
  cmd_bench->add_option("--n-pairs", bench.n_pairs, "pairs per repetition");
  cmd_bench->add_option("--repetitions", bench.repetitions, "timing repetitions (median)");
  cmd_bench->add_option("--seed", bench.seed, "rng seed");
  cmd_bench->add_option("--out", bench.out, "output result (JSON)");

  // --- sweep -------------------------------------------------------------
  struct {
    std::string embeddings, pairs, out_dir;
    std::vector<std::string> methods{"randproj", "pca", "ae", "ae-sp"};
    std::vector<Index> bits_grid{512, 1024, 2048, 4096};
    std::vector<double> lambda_grid{0.0, 0.2, 0.5, 0.8, 1.0};
    std::string recall_ks;
    std::uint64_t seed = default_seed();
    double lr = 1e-5;
    Index batch_size = 64, epochs = 10;
  } sweep;
  auto* cmd_sweep = app.add_subcommand("sweep", "bit-width and lambda ablation grid");
  cmd_sweep->add_option("--embeddings", sweep.embeddings, "input embeddings (.bemb)")->required();
  cmd_sweep->add_option("--pairs", sweep.pairs, "scored pair TSV for matching metrics");
  cmd_sweep->add_option("--out-dir", sweep.out_dir, "directory for per-cell artifacts")->required();
  cmd_sweep->add_option("--methods", sweep.methods, "methods to sweep")->delimiter(',');
  cmd_sweep->add_option("--bits-grid", sweep.bits_grid, "bit widths")->delimiter(',');
  cmd_sweep->add_option("--lambda-grid", sweep.lambda_grid, "lambda_sp values (ae-sp only)")
      ->delimiter(',');
  cmd_sweep->add_option("--recall-k", sweep.recall_ks, "comma-separated k list");
  cmd_sweep->add_option("--seed", sweep.seed, "rng seed");
  cmd_sweep->add_option("--lr", sweep.lr, "Adam learning rate");
  cmd_sweep->add_option("--batch-size", sweep.batch_size, "minibatch size");
  cmd_sweep->add_option("--epochs", sweep.epochs, "training epochs");

  CLI11_PARSE(app, argc, argv);

  auto parse_k_list = [](const std::string& arg) {
    std::vector<Index> ks;
    std::istringstream stream(arg);
    std::string tok;
    while (std::getline(stream, tok, ',')) {
      if (!tok.empty()) ks.push_back(std::stoll(tok));
    }
    return ks;
  };

  try {
    if (cmd_gen->parsed()) {
      SyntheticCorpusSpec spec{gen.n, gen.dim, gen.clusters, gen.spread, gen.seed};
      const SyntheticCorpus corpus = generate_synthetic_corpus(spec);
      save_embeddings(gen.out, corpus.embeddings);
      json summary{{"out", gen.out},       {"n", gen.n},           {"dim", gen.dim},
                   {"clusters", gen.clusters}, {"spread", gen.spread}, {"seed", gen.seed}};
      if (!gen.pairs_out.empty()) {
        Rng rng(gen.seed + 1);
        save_pairs_tsv(gen.pairs_out, sample_scored_pairs(corpus, gen.n_pairs, rng));
        summary["pairs_out"] = gen.pairs_out;
        summary["n_pairs"] = gen.n_pairs;
      }
      if (!gen.clusters_out.empty()) {
        std::ofstream out(gen.clusters_out, std::ios::trunc);
        if (!out) throw IoError("cannot open for writing: " + gen.clusters_out);
        for (std::int32_t id : corpus.cluster_ids) out << id << '\n';
        summary["clusters_out"] = gen.clusters_out;
      }
      std::cout << summary.dump() << '\n';
    } else if (cmd_fit->parsed()) {
      std::cout << run_fit(fit).dump() << '\n';
    } else if (cmd_encode->parsed()) {
      const BinarizerModel model = load_model(enc.model);
      const EmbeddingMatrix h = load_embeddings(enc.embeddings);
      const BinaryCodeSet codes = binarize_with(model, h);
      save_codes(enc.out, codes);
      json summary{{"method", method_name(model)},
                   {"rows", codes.rows()},
                   {"bits", codes.bits()},
                   {"out", enc.out}};
      std::cout << summary.dump() << '\n';
    } else if (cmd_knn->parsed()) {
      const bool use_hamming = !knn.codes.empty();
      if (use_hamming == !knn.embeddings.empty()) {
        throw ArgumentError("knn: give exactly one of --codes or --embeddings");
      }
      json out{{"k", knn.k}, {"metric", use_hamming ? "hamming" : "cosine"}};
      std::vector<NeighborList> lists;
      if (use_hamming) {
        const BinaryCodeSet db = load_codes(knn.codes);
        const bool separate = !knn.query_codes.empty();
        const BinaryCodeSet queries = separate ? load_codes(knn.query_codes) : db;
        lists = knn_hamming(queries, db, knn.k, separate ? false : knn.mask_self);
      } else {
        const EmbeddingMatrix db = load_embeddings(knn.embeddings);
        const bool separate = !knn.query_embeddings.empty();
        const EmbeddingMatrix queries = separate ? load_embeddings(knn.query_embeddings) : db;
        lists = knn_cosine(queries, db, knn.k, separate ? false : knn.mask_self);
      }
      out["queries"] = lists.size();
      out["neighbors"] = neighbor_lists_to_json(lists);
      write_json(knn.out, out);
      std::cout << json{{"out", knn.out}, {"queries", lists.size()}, {"k", knn.k}}.dump()
                << '\n';
    } else if (cmd_eval->parsed()) {
      eval.recall_ks = parse_k_list(recall_ks_arg);
      const json report = run_eval(eval);
      print_eval_table(report);
      std::cout << report.dump() << '\n';
    } else if (cmd_bench->parsed()) {
      Rng rng(bench.seed);
      const BenchResult r = bench_pair_scoring(bench.n_pairs, bench.bits, bench.repetitions, rng);
      json out{{"mean_ns_per_pair_hamming", r.mean_ns_per_pair_hamming},
               {"mean_ns_per_pair_cosine", r.mean_ns_per_pair_cosine},
               {"speedup", r.speedup},
               {"bits", r.bits},
               {"n_pairs", r.n_pairs},
               {"repetitions", r.repetitions}};
      if (!bench.out.empty()) write_json(bench.out, out);
      std::cout << out.dump() << '\n';
    } else if (cmd_sweep->parsed()) {
      fs::create_directories(sweep.out_dir);
      FitOptions base_fit;
      base_fit.embeddings_path = sweep.embeddings;
      base_fit.seed = sweep.seed;
      base_fit.lr = sweep.lr;
      base_fit.batch_size = sweep.batch_size;
      base_fit.epochs = sweep.epochs;
      EvalOptions base_eval;
      base_eval.pairs_path = sweep.pairs;
      base_eval.seed = sweep.seed;
      base_eval.recall_ks = parse_k_list(sweep.recall_ks);

      const fs::path csv_path = fs::path(sweep.out_dir) / "sweep.csv";
      std::ofstream csv(csv_path, std::ios::trunc);
      if (!csv) throw IoError("cannot open for writing: " + csv_path.string());
      csv << "method,bits,lambda_sp,pearson,spearman,accuracy,recall,error\n";

      for (const std::string& method : sweep.methods) {
        for (Index bits : sweep.bits_grid) {
          const std::vector<double> lambdas =
              method == "ae-sp" ? sweep.lambda_grid : std::vector<double>{0.0};
          for (double lambda : lambdas) {
            std::string error;
            json cell;
            try {
              cell = run_sweep_cell(method, bits, lambda, base_fit, base_eval,
                                    sweep.out_dir);
            } catch (const std::exception& e) {
              error = e.what();
            }
            csv << method << ',' << bits << ','
                << (method == "ae-sp" ? json(lambda).dump() : std::string()) << ','
                << csv_field(cell, "pearson") << ',' << csv_field(cell, "spearman") << ','
                << csv_field(cell, "accuracy") << ','
                << (cell.contains("recall_at_k") ? csv_quote(cell["recall_at_k"].dump())
                                                 : std::string())
                << ',' << csv_quote(error) << '\n';
            csv.flush();
          }
        }
      }
      std::cout << json{{"out_dir", sweep.out_dir}, {"csv", csv_path.string()}}.dump() << '\n';
    }
  } catch (const std::exception& e) {
    std::cerr << json{{"error", e.what()}}.dump() << '\n';
    return 1;
  }
  return 0;
}
