// End-to-end tests for the kgtruth command line tool. The binary path and the
// bundled data directory arrive via KGTRUTH_CLI / KGTRUTH_DATA (set by ctest).
#include <catch2/catch_amalgamated.hpp>

#include <sys/wait.h>
#include <unistd.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

using Catch::Approx;
namespace fs = std::filesystem;

namespace {

std::string require_env(const char* name) {
  const char* value = std::getenv(name);
  REQUIRE(value != nullptr);
  return value;
}

fs::path data_file(const std::string& name) {
  return fs::path(require_env("KGTRUTH_DATA")) / name;
}

fs::path scratch_dir() {
  static int counter = 0;
  fs::path dir = fs::temp_directory_path() /
                 ("kgtruth_cli_" + std::to_string(::getpid())) /
                 std::to_string(++counter);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void spill(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  out << content;
  REQUIRE(out.good());
}

std::vector<std::string> split_lines(const std::string& text) {
  std::vector<std::string> lines;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) lines.push_back(line);
  return lines;
}

struct RunResult {
  int exit_code = -1;
  std::string out;
  std::string err;

  bool out_has(const std::string& needle) const {
    return out.find(needle) != std::string::npos;
  }
  bool err_has(const std::string& needle) const {
    return err.find(needle) != std::string::npos;
  }
};

RunResult run_cli(const std::string& args) {
  const fs::path logs = scratch_dir();
  const fs::path out_path = logs / "stdout.txt";
  const fs::path err_path = logs / "stderr.txt";
  const std::string cmd = '"' + require_env("KGTRUTH_CLI") + "\" " + args +
                          " > \"" + out_path.string() + "\" 2> \"" +
                          err_path.string() + '"';
  const int status = std::system(cmd.c_str());
  REQUIRE(status != -1);
  RunResult result;
  result.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  result.out = slurp(out_path);
  result.err = slurp(err_path);
  return result;
}

// Returns the value of "key = value" in a manifest, or "" when absent.
std::string manifest_value(const fs::path& manifest, const std::string& key) {
  for (const std::string& line : split_lines(slurp(manifest))) {
    const std::string prefix = key + " = ";
    if (line.rfind(prefix, 0) == 0) return line.substr(prefix.size());
  }
  return "";
}

}  // namespace

TEST_CASE("discover writes the knowledge graph, weights, and manifest") {
  const fs::path out = scratch_dir();
  const RunResult r = run_cli("discover --cases \"" +
                              data_file("tiny_cases.jsonl").string() +
                              "\" --out \"" + out.string() +
                              "\" --one-hot --seed 3");
  CAPTURE(r.err);
  REQUIRE(r.exit_code == 0);
  CHECK(r.out_has("conditional_kg.tsv"));

  const std::string kg = slurp(out / "conditional_kg.tsv");
  const auto kg_lines = split_lines(kg);
  REQUIRE(kg_lines.size() > 1);
  CHECK(kg_lines[0] ==
        "triple_head\trelation\ttriple_tail\tcondition_type\tcondition_value"
        "\tconfidence");
  CHECK(kg.find("metformin\ttreats\ttype_2_diabetes") != std::string::npos);
  CHECK(kg.find("insulin\ttreats\ttype_1_diabetes") != std::string::npos);

  const auto weight_lines = split_lines(slurp(out / "source_weights.tsv"));
  REQUIRE(weight_lines.size() == 4);  // header + three sources
  CHECK(weight_lines[0] == "source_id\tweight");
  CHECK(weight_lines[1].rfind("emr_gen_hospital\t", 0) == 0);

  const fs::path manifest = out / "manifest.txt";
  CHECK(manifest_value(manifest, "command") == "discover");
  CHECK(manifest_value(manifest, "embedding_mode") == "one_hot");
  CHECK(manifest_value(manifest, "sources") == "3");
  CHECK(manifest_value(manifest, "triples") == "2");
  CHECK(manifest_value(manifest, "use_references") == "true");
  CHECK(manifest_value(manifest, "converged") == "true");
}

TEST_CASE("discover reproduces the bundled golden output byte for byte") {
  const fs::path out_a = scratch_dir();
  const fs::path out_b = scratch_dir();
  const std::string base = "discover --cases \"" +
                           data_file("medical_cases.jsonl").string() +
                           "\" --one-hot --seed 7 --out \"";
  REQUIRE(run_cli(base + out_a.string() + '"').exit_code == 0);
  REQUIRE(run_cli(base + out_b.string() + '"').exit_code == 0);

  const std::string kg_a = slurp(out_a / "conditional_kg.tsv");
  CHECK(kg_a == slurp(out_b / "conditional_kg.tsv"));
  CHECK(slurp(out_a / "source_weights.tsv") ==
        slurp(out_b / "source_weights.tsv"));
  CHECK(slurp(out_a / "manifest.txt") == slurp(out_b / "manifest.txt"));

  CHECK(kg_a == slurp(data_file("golden_conditional_kg.tsv")));
}

TEST_CASE("discover with composed embeddings is seeded and deterministic") {
  const fs::path out_a = scratch_dir();
  const fs::path out_b = scratch_dir();
  const std::string base = "discover --cases \"" +
                           data_file("tiny_cases.jsonl").string() +
                           "\" --dt 4 --de 4 --epochs 3 --seed 11 --out \"";
  const RunResult first = run_cli(base + out_a.string() + '"');
  CAPTURE(first.err);
  REQUIRE(first.exit_code == 0);
  REQUIRE(run_cli(base + out_b.string() + '"').exit_code == 0);

  CHECK(slurp(out_a / "conditional_kg.tsv") ==
        slurp(out_b / "conditional_kg.tsv"));
  CHECK(slurp(out_a / "source_weights.tsv") ==
        slurp(out_b / "source_weights.tsv"));

  const fs::path manifest = out_a / "manifest.txt";
  CHECK(manifest_value(manifest, "embedding_mode") == "composed");
  CHECK(manifest_value(manifest, "cooccurrence_dim") == "4");
  CHECK(manifest_value(manifest, "embedding_dim") == "8");
  CHECK(manifest_value(manifest, "normalized") == "true");
}

TEST_CASE("discover per-type solves are accepted through the tool") {
  const fs::path out = scratch_dir();
  const RunResult r = run_cli("discover --cases \"" +
                              data_file("tiny_cases.jsonl").string() +
                              "\" --out \"" + out.string() +
                              "\" --one-hot --per-type");
  CAPTURE(r.err);
  REQUIRE(r.exit_code == 0);
  CHECK(manifest_value(out / "manifest.txt", "per_type") == "true");
}

TEST_CASE("unsupervised mode accepts corpora without reference sources") {
  const fs::path dir = scratch_dir();
  const fs::path cases = dir / "no_refs.jsonl";
  spill(cases,
        R"({"source_id":"a","triples":[{"head":"h","relation":"r","tail":"t"}],"conditions":[{"type":"gender","value":"male"}]})"
        "\n"
        R"({"source_id":"b","triples":[{"head":"h","relation":"r","tail":"t"}],"conditions":[{"type":"gender","value":"female"}]})"
        "\n");

  const RunResult strict = run_cli("discover --cases \"" + cases.string() +
                                   "\" --out \"" + dir.string() +
                                   "\" --one-hot");
  CHECK(strict.exit_code == 1);
  CHECK(strict.err_has("error:"));
  CHECK(strict.err_has("reference"));

  const RunResult loose = run_cli("discover --cases \"" + cases.string() +
                                  "\" --out \"" + dir.string() +
                                  "\" --one-hot --unsupervised");
  CAPTURE(loose.err);
  REQUIRE(loose.exit_code == 0);
  CHECK(manifest_value(dir / "manifest.txt", "use_references") == "false");
}

TEST_CASE("input errors exit with status one and name the problem") {
  SECTION("missing case file") {
    const RunResult r =
        run_cli("discover --cases /definitely/not/here.jsonl --one-hot");
    CHECK(r.exit_code == 1);
    CHECK(r.err_has("error:"));
    CHECK(r.err_has("/definitely/not/here.jsonl"));
  }
  SECTION("malformed JSON names the offending line") {
    const fs::path dir = scratch_dir();
    const fs::path cases = dir / "broken.jsonl";
    spill(cases,
          R"({"source_id":"a","is_reference":true,"triples":[{"head":"h","relation":"r","tail":"t"}],"conditions":[{"type":"gender","value":"male"}]})"
          "\n{ this is not json\n");
    const RunResult r = run_cli("discover --cases \"" + cases.string() +
                                "\" --out \"" + dir.string() + "\" --one-hot");
    CHECK(r.exit_code == 1);
    CHECK(r.err_has("error:"));
    CHECK(r.err_has("line 2"));
  }
  SECTION("sweep config with an unknown key") {
    const fs::path dir = scratch_dir();
    const fs::path cfg = dir / "bad.cfg";
    spill(cfg, "family = single_truth\nsweep = n_reference\nbogus_key = 3\n");
    const RunResult r = run_cli("bench --sweep \"" + cfg.string() +
                                "\" --out \"" + dir.string() + '"');
    CHECK(r.exit_code == 1);
    CHECK(r.err_has("bogus_key"));
  }
}

TEST_CASE("help exits zero and unknown flags exit one") {
  const RunResult help = run_cli("--help");
  CHECK(help.exit_code == 0);
  CHECK(help.out_has("discover"));
  CHECK(help.out_has("bench"));

  const RunResult sub_help = run_cli("discover --help");
  CHECK(sub_help.exit_code == 0);
  CHECK(sub_help.out_has("--cases"));

  CHECK(run_cli("discover --cases x.jsonl --no-such-flag").exit_code == 1);
  CHECK(run_cli("").exit_code == 1);          // a subcommand is required
  CHECK(run_cli("discover").exit_code == 1);  // --cases is required
}

TEST_CASE("bench sweep output is identical across worker counts") {
  const fs::path dir = scratch_dir();
  const fs::path cfg = dir / "sweep.cfg";
  spill(cfg,
        "family = single_truth\n"
        "sweep = n_reference\n"
        "values = 1:2\n"
        "seeds = 2\n"
        "n_objects = 30\n"
        "n_claims = 4\n"
        "n_sources = 8\n"
        "ref_noise = 0.05\n"
        "nonref_noise = 0.6\n"
        "lambda = 0.5\n"
        "mu = 0.1\n");

  const fs::path out_serial = scratch_dir();
  const fs::path out_parallel = scratch_dir();
  const RunResult serial = run_cli("bench --sweep \"" + cfg.string() +
                                   "\" --jobs 1 --out \"" +
                                   out_serial.string() + '"');
  CAPTURE(serial.err);
  REQUIRE(serial.exit_code == 0);
  CHECK(serial.out_has("results.tsv"));
  REQUIRE(run_cli("bench --sweep \"" + cfg.string() + "\" --jobs 3 --out \"" +
                  out_parallel.string() + '"')
              .exit_code == 0);

  const std::string results = slurp(out_serial / "results.tsv");
  CHECK(results == slurp(out_parallel / "results.tsv"));
  CHECK(slurp(out_serial / "summary.tsv") ==
        slurp(out_parallel / "summary.tsv"));

  // 2 sweep values x 2 seeds x 6 methods, plus the header line.
  const auto lines = split_lines(results);
  REQUIRE(lines.size() == 25);
  CHECK(lines[0] == "sweep_param\tvalue\tmethod\tseed\tmetric\tscore");
  CHECK(lines[1].rfind("n_reference\t1\t", 0) == 0);
}

TEST_CASE("bench toy family also writes the coordinate file") {
  const fs::path dir = scratch_dir();
  const fs::path cfg = dir / "toy.cfg";
  spill(cfg, "family = toy\nseeds = 1\nmu = 0.5\n");
  const RunResult r =
      run_cli("bench --sweep \"" + cfg.string() + "\" --out \"" +
              dir.string() + '"');
  CAPTURE(r.err);
  REQUIRE(r.exit_code == 0);
  CHECK(fs::exists(dir / "results.tsv"));
  CHECK(fs::exists(dir / "toy_coordinates.tsv"));
}

TEST_CASE("embed exports one reusable vector row per triple") {
  const fs::path out_a = scratch_dir();
  const fs::path out_b = scratch_dir();
  const std::string base = "embed --cases \"" +
                           data_file("tiny_cases.jsonl").string() +
                           "\" --dt 3 --de 3 --epochs 2 --seed 9 --out \"";
  const RunResult r = run_cli(base + out_a.string() + '"');
  CAPTURE(r.err);
  REQUIRE(r.exit_code == 0);
  REQUIRE(run_cli(base + out_b.string() + '"').exit_code == 0);

  const fs::path vectors = out_a / "triple_embeddings.txt";
  CHECK(slurp(vectors) == slurp(out_b / "triple_embeddings.txt"));

  const auto lines = split_lines(slurp(vectors));
  REQUIRE(lines.size() == 2);  // one row per distinct triple, no header
  for (int id = 0; id < 2; ++id) {
    std::istringstream row(lines[id]);
    std::string token;
    row >> token;
    CHECK(token == std::to_string(id));
    double value = 0.0;
    int dims = 0;
    while (row >> value) ++dims;
    CHECK(dims == 6);
  }

  // The exported file feeds straight back into discovery.
  const fs::path reused = scratch_dir();
  const RunResult again = run_cli(
      "discover --cases \"" + data_file("tiny_cases.jsonl").string() +
      "\" --triple-embeddings \"" + vectors.string() + "\" --out \"" +
      reused.string() + "\" --seed 2");
  CAPTURE(again.err);
  REQUIRE(again.exit_code == 0);
  CHECK(manifest_value(reused / "manifest.txt", "embedding_mode") ==
        "external");
  CHECK(manifest_value(reused / "manifest.txt", "embedding_dim") == "6");
}

TEST_CASE("embed --normalize produces unit rows") {
  const fs::path out = scratch_dir();
  const RunResult r = run_cli("embed --cases \"" +
                              data_file("tiny_cases.jsonl").string() +
                              "\" --dt 3 --de 3 --epochs 2 --seed 9 "
                              "--normalize --out \"" +
                              out.string() + '"');
  CAPTURE(r.err);
  REQUIRE(r.exit_code == 0);
  for (const std::string& line :
       split_lines(slurp(out / "triple_embeddings.txt"))) {
    std::istringstream row(line);
    std::string token;
    row >> token;
    double value = 0.0, sq = 0.0;
    while (row >> value) sq += value * value;
    CHECK(std::sqrt(sq) == Approx(1.0).epsilon(1e-9));
  }
}

TEST_CASE("non-finite solves exit with status two") {
  const fs::path dir = scratch_dir();
  const fs::path vectors = dir / "huge.txt";
  spill(vectors, "0 1e308 1e308\n1 1e308 1e308\n");
  const RunResult r = run_cli("discover --cases \"" +
                              data_file("tiny_cases.jsonl").string() +
                              "\" --triple-embeddings \"" + vectors.string() +
                              "\" --out \"" + dir.string() + '"');
  CHECK(r.exit_code == 2);
  CHECK(r.err_has("numerical error:"));
}

TEST_CASE("triple embedding files must cover every triple id") {
  const fs::path dir = scratch_dir();
  const fs::path vectors = dir / "partial.txt";
  spill(vectors, "0 0.5 0.5\n");
  const RunResult r = run_cli("discover --cases \"" +
                              data_file("tiny_cases.jsonl").string() +
                              "\" --triple-embeddings \"" + vectors.string() +
                              "\" --out \"" + dir.string() + '"');
  CHECK(r.exit_code == 1);
  CHECK(r.err_has("missing vector for triple id 1"));
}

TEST_CASE("toy reports the embedding contrast and writes coordinates") {
  const fs::path out = scratch_dir();
  const RunResult r = run_cli("toy --out \"" + out.string() + '"');
  CAPTURE(r.err);
  REQUIRE(r.exit_code == 0);
  CHECK(r.out_has("one-hot:"));
  CHECK(r.out_has("planted:"));
  CHECK(r.out_has("0.477140"));
  CHECK(r.out_has("0.093221"));

  const auto lines = split_lines(slurp(out / "toy_coordinates.tsv"));
  REQUIRE(lines.size() == 11);  // header + 2 modes x (3 truths + 2 conditions)
  CHECK(lines[0] == "embeddings\tkind\tlabel\tpc1\tpc2");
  CHECK(lines[1].rfind("one_hot\ttruth\t", 0) == 0);
  CHECK(lines[10].rfind("planted\tcondition\t", 0) == 0);

  const fs::path manifest = out / "manifest.txt";
  CHECK(manifest_value(manifest, "command") == "toy");
  const double one_hot =
      std::stod(manifest_value(manifest, "truth_distance_one_hot"));
  const double planted =
      std::stod(manifest_value(manifest, "truth_distance_planted"));
  CHECK(planted < one_hot);
}
