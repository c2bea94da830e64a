// kgtruth: fuse conflicting (triple, condition) assertions from many sources
// into a conditional knowledge graph, guided by trusted reference sources and
// shared object embeddings.
//
// Subcommands:
//   discover  run truth discovery on a case file, export the discovered KG
//   bench     run a synthetic benchmark sweep described by a config file
//   embed     train and export triple embeddings for a case file
//   toy       run the three-object illustration and export 2-D coordinates
//
// Exit codes: 0 success, 1 input or configuration error, 2 numerical failure.

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "kgtruth/kgtruth.hpp"

namespace fs = std::filesystem;
using namespace kgtruth;

namespace {

std::ifstream open_input(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open '" + path + "' for reading");
  return in;
}

std::ofstream open_output(const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw ParseError("cannot open '" + path.string() + "' for writing");
  return out;
}

fs::path prepare_out_dir(const std::string& out) {
  fs::path dir = out.empty() ? fs::path(".") : fs::path(out);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw ParseError("cannot create output directory '" + dir.string() + "'");
  return dir;
}

std::string join_warnings(const std::vector<std::string>& warnings) {
  std::string joined;
  for (const auto& w : warnings) {
    if (!joined.empty()) joined += "; ";
    joined += w;
  }
  return joined;
}

struct DiscoverOpts {
  std::string cases;
  std::string out = ".";
  std::string entity_embeddings;
  std::string triple_embeddings;
  bool one_hot = false;
  bool per_type = false;
  bool unsupervised = false;
  bool raw_embeddings = false;  // skip row normalization of composed vectors
  int dt = 32;
  int de = 32;
  int epochs = 15;
  std::uint64_t seed = 1;
  HyperParams hp;
};

EmbeddingSet build_embeddings(const DiscoverOpts& o, const Dataset& ds,
                              std::vector<std::string>& warnings) {
  if (o.one_hot) return make_one_hot_embeddings(ds.triple_count());
  if (!o.triple_embeddings.empty()) {
    auto in = open_input(o.triple_embeddings);
    return load_triple_embeddings(in, ds.triple_count());
  }
  CbowConfig tc;
  tc.dimension = o.dt;
  tc.epochs = o.epochs;
  tc.seed = derive_seed(o.seed, 0x7121u);
  const CbowResult t = train_cooccurrence_embeddings(ds, tc);
  if (!t.trained)
    warnings.push_back(
        "no case contains more than one triple; co-occurrence vectors stay at "
        "their random init");

  EntityTable entities;
  if (!o.entity_embeddings.empty()) {
    auto in = open_input(o.entity_embeddings);
    entities = load_entity_embeddings(in);
    int missing = 0;
    for (const auto& name : ds.entities)
      if (entities.find(name) < 0) ++missing;
    if (missing > 0)
      warnings.push_back(std::to_string(missing) +
                         " entities missing from the embedding file use zero "
                         "vectors");
  } else {
    CbowConfig ec;
    ec.dimension = o.de;
    ec.epochs = o.epochs;
    ec.seed = derive_seed(o.seed, 0xE271u);
    entities = train_entity_embeddings(ds, ec);
  }
  EmbeddingSet set = compose_triple_embeddings(t.vectors, entities, ds);
  set.cooccurrence_trained = t.trained;
  return o.raw_embeddings ? set : set.normalized();
}

int run_discover(const DiscoverOpts& o) {
  auto in = open_input(o.cases);
  IngestOptions ingest;
  ingest.allow_no_reference = o.unsupervised;
  const Dataset ds = ingest_cases(in, ingest);

  HyperParams hp = o.hp;
  hp.use_references = !o.unsupervised;
  hp.validate();

  std::vector<std::string> warnings;
  const EmbeddingSet emb = build_embeddings(o, ds, warnings);

  const fs::path dir = prepare_out_dir(o.out);
  std::vector<std::pair<std::string, std::string>> manifest;
  manifest.emplace_back("command", "discover");
  manifest.emplace_back("cases", o.cases);
  manifest.emplace_back("sources", std::to_string(ds.source_count()));
  manifest.emplace_back("cases_count", std::to_string(ds.cases.size()));
  manifest.emplace_back("triples", std::to_string(ds.triple_count()));
  manifest.emplace_back("conditions", std::to_string(ds.condition_count()));
  manifest.emplace_back("condition_types", std::to_string(ds.type_count()));
  const char* mode = o.one_hot ? "one_hot"
                     : o.triple_embeddings.empty() ? "composed" : "external";
  manifest.emplace_back("embedding_mode", mode);
  manifest.emplace_back("embedding_dim", std::to_string(emb.dim()));
  if (std::string(mode) == "composed") {
    manifest.emplace_back("cooccurrence_dim", std::to_string(o.dt));
    manifest.emplace_back("entity_dim", std::to_string(emb.dim() - o.dt));
    manifest.emplace_back("normalized", o.raw_embeddings ? "false" : "true");
    manifest.emplace_back("epochs", std::to_string(o.epochs));
  }
  manifest.emplace_back("seed", std::to_string(o.seed));
  manifest.emplace_back("lambda", format_full(hp.lambda));
  manifest.emplace_back("mu", format_full(hp.mu));
  manifest.emplace_back("epsilon", format_full(hp.epsilon));
  manifest.emplace_back("tol", format_full(hp.tol));
  manifest.emplace_back("max_iter", std::to_string(hp.max_iter));
  manifest.emplace_back("use_references", hp.use_references ? "true" : "false");
  manifest.emplace_back("per_type", o.per_type ? "true" : "false");

  if (o.per_type) {
    const PerTypeSolveResult res = solve_per_type(ds, emb, hp);
    std::string iters;
    double final_obj = 0.0;
    for (const TypeRun& run : res.runs) {
      if (!iters.empty()) iters += ",";
      iters += ds.condition_types[run.type] + ":" +
               std::to_string(run.state.iterations);
      if (!run.state.objective_trace.empty())
        final_obj += run.state.objective_trace.back();
      for (const auto& w : run.state.warnings) warnings.push_back(w);
    }
    manifest.emplace_back("iterations", iters);
    manifest.emplace_back("final_objective", format_full(final_obj));
    auto kg_out = open_output(dir / "conditional_kg.tsv");
    write_conditional_kg(kg_out, ds, res.kg);
    auto w_out = open_output(dir / "source_weights.tsv");
    write_source_weights(w_out, ds, res.mean_weights);
  } else {
    const IndexView ix = build_index(ds, hp.use_references);
    const SolverState st = solve(ds, ix, emb, hp);
    for (const auto& w : st.warnings) warnings.push_back(w);
    manifest.emplace_back("iterations", std::to_string(st.iterations));
    manifest.emplace_back("converged", st.converged ? "true" : "false");
    manifest.emplace_back("final_objective",
                          st.objective_trace.empty()
                              ? "nan"
                              : format_full(st.objective_trace.back()));
    const ConditionalKG kg = confidence_scores(st, ds, ix, hp.epsilon);
    auto kg_out = open_output(dir / "conditional_kg.tsv");
    write_conditional_kg(kg_out, ds, kg);
    auto w_out = open_output(dir / "source_weights.tsv");
    write_source_weights(w_out, ds, st.omega);
  }

  if (!warnings.empty()) {
    manifest.emplace_back("warnings", join_warnings(warnings));
    for (const auto& w : warnings) std::cerr << "warning: " << w << "\n";
  }
  auto m_out = open_output(dir / "manifest.txt");
  write_manifest(m_out, manifest);
  std::cout << "wrote " << (dir / "conditional_kg.tsv").string() << "\n";
  return 0;
}

struct BenchOpts {
  std::string sweep;
  std::string out = ".";
  int jobs = 0;           // 0: keep value from the sweep file
  double lambda = -1.0;   // <0: keep value from the sweep file
  double mu = -1.0;
  std::int64_t seed = -1;
};

int run_bench(const BenchOpts& o) {
  auto in = open_input(o.sweep);
  SweepSettings s = parse_sweep_settings(in);
  if (o.jobs > 0) s.jobs = o.jobs;
  if (o.lambda >= 0.0) s.hp.lambda = o.lambda;
  if (o.mu >= 0.0) s.hp.mu = o.mu;
  if (o.seed >= 0) s.scenario.seed = static_cast<std::uint64_t>(o.seed);
  s.hp.validate();

  const std::vector<SweepRow> rows = run_sweep(s);

  const fs::path dir = prepare_out_dir(o.out);
  auto r_out = open_output(dir / "results.tsv");
  write_sweep_rows(r_out, rows);
  auto s_out = open_output(dir / "summary.tsv");
  write_sweep_summary(s_out, rows);
  if (s.family == SweepFamily::toy) {
    const ToyResult res = run_toy(s.hp);
    auto c_out = open_output(dir / "toy_coordinates.tsv");
    write_toy_coordinates(c_out, res);
  }

  std::vector<std::pair<std::string, std::string>> manifest;
  manifest.emplace_back("command", "bench");
  manifest.emplace_back("sweep_file", o.sweep);
  const char* family = s.family == SweepFamily::single_truth ? "single_truth"
                       : s.family == SweepFamily::ranking    ? "ranking"
                       : s.family == SweepFamily::reliability ? "reliability"
                                                              : "toy";
  manifest.emplace_back("family", family);
  manifest.emplace_back("sweep", s.sweep_param);
  manifest.emplace_back("seeds", std::to_string(s.seeds));
  manifest.emplace_back("seed", std::to_string(s.scenario.seed));
  manifest.emplace_back("jobs", std::to_string(s.jobs));
  manifest.emplace_back("n_objects", std::to_string(s.scenario.n_objects));
  manifest.emplace_back("n_claims", std::to_string(s.scenario.n_claims));
  manifest.emplace_back("n_sources", std::to_string(s.scenario.n_sources));
  manifest.emplace_back("lambda", format_full(s.hp.lambda));
  manifest.emplace_back("mu", format_full(s.hp.mu));
  manifest.emplace_back("rows", std::to_string(rows.size()));
  auto m_out = open_output(dir / "manifest.txt");
  write_manifest(m_out, manifest);
  std::cout << "wrote " << (dir / "results.tsv").string() << " (" << rows.size()
            << " rows)\n";
  return 0;
}

struct EmbedOpts {
  std::string cases;
  std::string out = ".";
  std::string entity_embeddings;
  bool normalize = false;
  bool unsupervised = false;
  int dt = 32;
  int de = 32;
  int epochs = 15;
  std::uint64_t seed = 1;
};

int run_embed(const EmbedOpts& o) {
  auto in = open_input(o.cases);
  IngestOptions ingest;
  ingest.allow_no_reference = true;  // embeddings need no supervision
  const Dataset ds = ingest_cases(in, ingest);

  std::vector<std::string> warnings;
  DiscoverOpts d;
  d.entity_embeddings = o.entity_embeddings;
  d.dt = o.dt;
  d.de = o.de;
  d.epochs = o.epochs;
  d.seed = o.seed;
  d.raw_embeddings = !o.normalize;
  const EmbeddingSet emb = build_embeddings(d, ds, warnings);

  const fs::path dir = prepare_out_dir(o.out);
  std::vector<std::string> tokens(ds.triple_count());
  for (TripleId m = 0; m < ds.triple_count(); ++m) tokens[m] = std::to_string(m);
  auto e_out = open_output(dir / "triple_embeddings.txt");
  write_token_vectors(e_out, tokens, emb.x);

  std::vector<std::pair<std::string, std::string>> manifest;
  manifest.emplace_back("command", "embed");
  manifest.emplace_back("cases", o.cases);
  manifest.emplace_back("triples", std::to_string(ds.triple_count()));
  manifest.emplace_back("cooccurrence_dim", std::to_string(o.dt));
  manifest.emplace_back("entity_dim", std::to_string(emb.dim() - o.dt));
  manifest.emplace_back("epochs", std::to_string(o.epochs));
  manifest.emplace_back("seed", std::to_string(o.seed));
  manifest.emplace_back("normalized", o.normalize ? "true" : "false");
  if (!warnings.empty()) {
    manifest.emplace_back("warnings", join_warnings(warnings));
    for (const auto& w : warnings) std::cerr << "warning: " << w << "\n";
  }
  auto m_out = open_output(dir / "manifest.txt");
  write_manifest(m_out, manifest);
  std::cout << "wrote " << (dir / "triple_embeddings.txt").string() << "\n";
  return 0;
}

struct ToyOpts {
  std::string out = ".";
  HyperParams hp = toy_hyperparams();
};

int run_toy_cmd(const ToyOpts& o) {
  const ToyResult res = run_toy(o.hp);
  const fs::path dir = prepare_out_dir(o.out);
  auto c_out = open_output(dir / "toy_coordinates.tsv");
  write_toy_coordinates(c_out, res);

  std::vector<std::pair<std::string, std::string>> manifest;
  manifest.emplace_back("command", "toy");
  manifest.emplace_back("mu", format_full(o.hp.mu));
  manifest.emplace_back("truth_distance_one_hot", format_full(res.dist_one_hot));
  manifest.emplace_back("truth_distance_planted", format_full(res.dist_planted));
  auto m_out = open_output(dir / "manifest.txt");
  write_manifest(m_out, manifest);

  std::cout << "||v(o0) - v(o1)|| one-hot:  "
            << format_fixed(res.dist_one_hot, 6) << "\n"
            << "||v(o0) - v(o1)|| planted:  "
            << format_fixed(res.dist_planted, 6) << "\n"
            << "wrote " << (dir / "toy_coordinates.tsv").string() << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "kgtruth: conditional truth discovery over conflicting knowledge-triple "
      "assertions"};
  app.require_subcommand(1);

  DiscoverOpts d;
  CLI::App* discover =
      app.add_subcommand("discover", "discover a conditional knowledge graph");
  discover->set_config("--config");
  discover->add_option("--cases", d.cases, "JSONL case file")->required();
  discover->add_option("--out", d.out, "output directory");
  discover->add_option("--entity-embeddings", d.entity_embeddings,
                       "pre-trained entity vectors (token-vector text)");
  discover->add_option("--triple-embeddings", d.triple_embeddings,
                       "precomposed triple vectors keyed by triple id");
  discover->add_flag("--one-hot", d.one_hot, "use indicator embeddings");
  discover->add_flag("--per-type", d.per_type,
                     "solve each condition type separately");
  discover->add_flag("--unsupervised", d.unsupervised,
                     "ignore reference flags (and allow their absence)");
  discover->add_flag("--raw-embeddings", d.raw_embeddings,
                     "skip unit normalization of composed vectors");
  discover->add_option("--dt", d.dt, "co-occurrence embedding dimension");
  discover->add_option("--de", d.de, "entity embedding dimension");
  discover->add_option("--epochs", d.epochs, "embedding training epochs");
  discover->add_option("--seed", d.seed, "random seed");
  discover->add_option("--lambda", d.hp.lambda,
                       "extra weight on reference-confirmed assertions");
  discover->add_option("--mu", d.hp.mu, "case-context regularization weight");
  discover->add_option("--epsilon", d.hp.epsilon, "smoothing constant");
  discover->add_option("--tol", d.hp.tol, "relative convergence tolerance");
  discover->add_option("--max-iter", d.hp.max_iter, "iteration cap");

  BenchOpts b;
  CLI::App* bench = app.add_subcommand("bench", "run a synthetic benchmark sweep");
  bench->add_option("--sweep", b.sweep, "sweep description file")->required();
  bench->add_option("--out", b.out, "output directory");
  bench->add_option("--jobs", b.jobs, "parallel workers (overrides file)");
  bench->add_option("--lambda", b.lambda, "override lambda");
  bench->add_option("--mu", b.mu, "override mu");
  bench->add_option("--seed", b.seed, "override base seed");

  EmbedOpts e;
  CLI::App* embed = app.add_subcommand("embed", "train and export triple embeddings");
  embed->add_option("--cases", e.cases, "JSONL case file")->required();
  embed->add_option("--out", e.out, "output directory");
  embed->add_option("--entity-embeddings", e.entity_embeddings,
                    "pre-trained entity vectors");
  embed->add_flag("--normalize", e.normalize, "unit-normalize composed rows");
  embed->add_option("--dt", e.dt, "co-occurrence embedding dimension");
  embed->add_option("--de", e.de, "entity embedding dimension");
  embed->add_option("--epochs", e.epochs, "embedding training epochs");
  embed->add_option("--seed", e.seed, "random seed");

  ToyOpts t;
  CLI::App* toy =
      app.add_subcommand("toy", "three-object illustration of embedding sharing");
  toy->add_option("--out", t.out, "output directory");
  toy->add_option("--mu", t.hp.mu, "case-context regularization weight");
  toy->add_option("--lambda", t.hp.lambda, "reference weight (inactive here)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  try {
    if (discover->parsed()) return run_discover(d);
    if (bench->parsed()) return run_bench(b);
    if (embed->parsed()) return run_embed(e);
    if (toy->parsed()) return run_toy_cmd(t);
    std::cerr << "error: no subcommand given\n";
    return 1;
  } catch (const NumericalError& ex) {
    std::cerr << "numerical error: " << ex.what() << "\n";
    return 2;
  } catch (const std::exception& ex) {
    std::cerr << "error: " << ex.what() << "\n";
    return 1;
  }
}
