#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <unistd.h>

#include <json.hpp>

#include "binembed/binarizers.hpp"
#include "binembed/storage.hpp"

using namespace binembed;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    static int counter = 0;
    path = fs::temp_directory_path() /
           ("binembed_cli_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string file(const std::string& name) const { return (path / name).string(); }
};

int run_cli(const std::string& args, const fs::path& stdout_path = {},
            const fs::path& stderr_path = {}) {
  std::string cmd = std::string(BINEMBED_CLI_PATH) + " " + args;
  if (!stdout_path.empty()) cmd += " >" + stdout_path.string();
  if (!stderr_path.empty()) cmd += " 2>" + stderr_path.string();
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

json slurp_json(const fs::path& path) { return json::parse(slurp(path)); }

}  // namespace

TEST_CASE("gen, fit, encode, knn, eval, and bench chain together") {
  TempDir tmp;
  const std::string emb = tmp.file("corpus.bemb");
  const std::string pairs = tmp.file("pairs.tsv");
  const std::string clusters = tmp.file("clusters.txt");

  REQUIRE(run_cli("gen --out " + emb + " --n 300 --dim 24 --clusters 6 --spread 0.3"
                  " --seed 5 --pairs-out " + pairs + " --n-pairs 400 --clusters-out " +
                  clusters) == 0);
  CHECK(fs::exists(emb));
  CHECK(fs::exists(pairs));
  CHECK(fs::exists(clusters));

  const std::string model = tmp.file("ht.bmdl");
  const fs::path fit_out = tmp.path / "fit.json";
  REQUIRE(run_cli("fit --method ht --threshold 0 --embeddings " + emb + " --out " + model,
                  fit_out) == 0);
  const json fit_summary = slurp_json(fit_out);
  CHECK(fit_summary["method"] == "ht");
  CHECK(fit_summary["bits"] == 24);

  const std::string codes = tmp.file("ht.bcod");
  REQUIRE(run_cli("encode --model " + model + " --embeddings " + emb + " --out " + codes) == 0);

  // The encoded file must equal a direct hard-threshold pass, byte for byte.
  const BinaryCodeSet loaded = load_codes(codes);
  const BinaryCodeSet direct = hard_threshold_binarize(load_embeddings(emb), 0.0);
  CHECK(loaded == direct);

  const std::string knn_out = tmp.file("knn.json");
  REQUIRE(run_cli("knn --codes " + codes + " --k 5 --out " + knn_out) == 0);
  const json knn_json = slurp_json(knn_out);
  CHECK(knn_json["metric"] == "hamming");
  CHECK(knn_json["neighbors"].size() == 300);
  for (const auto& hit : knn_json["neighbors"][0]["hits"]) {
    CHECK(hit["index"] != 0);  // self masked by default
  }

  const std::string eval_out = tmp.file("eval.json");
  REQUIRE(run_cli("eval --codes " + codes + " --embeddings " + emb + " --pairs " + pairs +
                  " --recall-k 1,5 --method ht --out " + eval_out) == 0);
  const json eval_json = slurp_json(eval_out);
  CHECK(eval_json.contains("pearson"));
  CHECK(eval_json.contains("spearman"));
  CHECK(eval_json.contains("accuracy"));
  CHECK(eval_json.contains("cosine_spearman"));
  CHECK(eval_json["recall_at_k"].contains("5"));

  const std::string bench_out = tmp.file("bench.json");
  REQUIRE(run_cli("bench --bits 256 --n-pairs 200 --repetitions 2 --out " + bench_out) == 0);
  const json bench_json = slurp_json(bench_out);
  CHECK(bench_json["speedup"].get<double>() > 0.0);
  CHECK(bench_json["bits"] == 256);
}

TEST_CASE("identical flags and seed give byte-identical artifacts") {
  TempDir tmp;
  const std::string emb = tmp.file("corpus.bemb");
  REQUIRE(run_cli("gen --out " + emb + " --n 200 --dim 16 --clusters 4 --seed 9") == 0);

  for (const std::string method : {"randproj", "ae-sp"}) {
    const std::string m1 = tmp.file(method + "_1.bmdl");
    const std::string m2 = tmp.file(method + "_2.bmdl");
    const std::string flags = " --method " + method + " --bits 32 --seed 3 --epochs 2" +
                              " --batch-size 16 --lr 1e-3 --embeddings " + emb;
    REQUIRE(run_cli("fit" + flags + " --out " + m1) == 0);
    REQUIRE(run_cli("fit" + flags + " --out " + m2) == 0);
    CHECK(slurp(m1) == slurp(m2));

    const std::string c1 = tmp.file(method + "_1.bcod");
    const std::string c2 = tmp.file(method + "_2.bcod");
    REQUIRE(run_cli("encode --model " + m1 + " --embeddings " + emb + " --out " + c1) == 0);
    REQUIRE(run_cli("encode --model " + m2 + " --embeddings " + emb + " --out " + c2) == 0);
    CHECK(slurp(c1) == slurp(c2));
    CHECK(!slurp(c1).empty());
  }
}

TEST_CASE("fitting ae with lambda zero equals ae-sp at lambda zero") {
  TempDir tmp;
  const std::string emb = tmp.file("corpus.bemb");
  REQUIRE(run_cli("gen --out " + emb + " --n 128 --dim 12 --clusters 4 --seed 2") == 0);

  const std::string plain = tmp.file("ae.bmdl");
  const std::string sp_zero = tmp.file("aesp0.bmdl");
  const std::string common = " --bits 16 --seed 6 --epochs 2 --batch-size 16 --lr 1e-3"
                             " --embeddings " + emb + " --out ";
  REQUIRE(run_cli("fit --method ae" + common + plain) == 0);
  REQUIRE(run_cli("fit --method ae-sp --lambda-sp 0" + common + sp_zero) == 0);
  CHECK(slurp(plain) == slurp(sp_zero));
}

TEST_CASE("failures exit nonzero with a one-line JSON error") {
  TempDir tmp;
  const std::string emb = tmp.file("corpus.bemb");
  REQUIRE(run_cli("gen --out " + emb + " --n 64 --dim 16 --clusters 4 --seed 1") == 0);

  const fs::path err = tmp.path / "err.txt";
  CHECK(run_cli("fit --method pca --bits 8192 --embeddings " + emb + " --out " +
                tmp.file("m.bmdl"), tmp.path / "out.txt", err) != 0);
  const json parsed = json::parse(slurp(err));
  CHECK(parsed.contains("error"));

  CHECK(run_cli("encode --model " + tmp.file("missing.bmdl") + " --embeddings " + emb +
                " --out " + tmp.file("c.bcod"), tmp.path / "out2.txt", err) != 0);
}

TEST_CASE("sweep covers the lambda grid, records failures, and resumes") {
  TempDir tmp;
  const std::string emb = tmp.file("corpus.bemb");
  const std::string pairs = tmp.file("pairs.tsv");
  REQUIRE(run_cli("gen --out " + emb + " --n 200 --dim 16 --clusters 4 --seed 3"
                  " --pairs-out " + pairs + " --n-pairs 200") == 0);

  const std::string out_dir = tmp.file("sweep");
  const std::string sweep_cmd =
      "sweep --embeddings " + emb + " --pairs " + pairs + " --out-dir " + out_dir +
      " --methods ae-sp,pca --bits-grid 8,64 --lambda-grid 0,0.2,0.5,0.8,1.0" +
      " --epochs 1 --batch-size 16 --lr 1e-3 --seed 4";
  REQUIRE(run_cli(sweep_cmd, tmp.path / "sweep_stdout.json") == 0);

  // ae-sp: 2 bit widths x 5 lambdas = 10 rows; pca: bits 8 ok, bits 64 > dim fails.
  std::ifstream csv(out_dir + "/sweep.csv");
  std::string line;
  int rows = 0, failures = 0, lambda_rows = 0;
  std::getline(csv, line);  // header
  while (std::getline(csv, line)) {
    ++rows;
    if (line.find("pca,64") == 0) {
      CHECK(line.find("exceeds") != std::string::npos);
      ++failures;
    }
    if (line.find("ae-sp,8,") == 0) ++lambda_rows;
  }
  CHECK(rows == 12);
  CHECK(failures == 1);
  CHECK(lambda_rows == 5);
  CHECK(fs::exists(out_dir + "/ae-sp_b8_l0.8.json"));
  CHECK(fs::exists(out_dir + "/pca_b8.json"));
  CHECK(!fs::exists(out_dir + "/pca_b64.json"));

  // Resumption: the second run flags every existing cell as skipped and
  // leaves the artifacts alone.
  const auto stamp = fs::last_write_time(out_dir + "/ae-sp_b8_l0.8.bmdl");
  REQUIRE(run_cli(sweep_cmd, tmp.path / "sweep_stdout2.json") == 0);
  CHECK(fs::last_write_time(out_dir + "/ae-sp_b8_l0.8.bmdl") == stamp);
}

TEST_CASE("the BINEMBED_SEED environment variable sets the default seed") {
  TempDir tmp;
  const std::string a = tmp.file("a.bemb");
  const std::string b = tmp.file("b.bemb");
  const std::string c = tmp.file("c.bemb");
  const std::string base = "gen --n 32 --dim 8 --clusters 2 --out ";
  REQUIRE(std::system(("BINEMBED_SEED=41 " + std::string(BINEMBED_CLI_PATH) + " " + base + a +
                       " >/dev/null").c_str()) == 0);
  REQUIRE(std::system(("BINEMBED_SEED=41 " + std::string(BINEMBED_CLI_PATH) + " " + base + b +
                       " >/dev/null").c_str()) == 0);
  REQUIRE(std::system(("BINEMBED_SEED=42 " + std::string(BINEMBED_CLI_PATH) + " " + base + c +
                       " >/dev/null").c_str()) == 0);
  CHECK(slurp(a) == slurp(b));
  CHECK(slurp(a) != slurp(c));
}
