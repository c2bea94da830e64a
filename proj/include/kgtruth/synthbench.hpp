#pragma once

#include <cmath>
#include <future>
#include <string>
#include <utility>
#include <vector>

#include "kgtruth/baselines.hpp"
#include "kgtruth/common.hpp"
#include "kgtruth/dataset.hpp"
#include "kgtruth/engine.hpp"
#include "kgtruth/metrics.hpp"

namespace kgtruth {

/// Parameters of a generated conflict scenario.
struct ScenarioSpec {
  int n_objects = 100;
  int n_claims = 10;
  int n_sources = 100;
  int n_reference = 10;
  double ref_noise = 0.05;     // corruption probability of reference sources
  double nonref_noise = 0.95;  // corruption probability of the others
  int assertions_per_source = 0;  // 0: every source covers every object
  int objects_per_case = 1;  // >1: same-claim objects grouped into one case
  bool exact_noise_fraction = false;  // corrupt exactly round(noise * count)
  int related_claims = 3;             // ranking mode: ground-truth list length
  int ranking_dim = 16;               // ranking mode: embedding dimension
  double ranking_perturbation = 0.05;  // ranking mode: noise on object vectors
  std::uint64_t seed = 1;

  void validate() const {
    if (n_objects < 1 || n_claims < 2 || n_sources < 1)
      throw std::invalid_argument("scenario: need >=1 object/source and >=2 claims");
    if (n_reference < 0 || n_reference > n_sources)
      throw std::invalid_argument("scenario: n_reference out of range");
    if (ref_noise < 0.0 || ref_noise > 1.0 || nonref_noise < 0.0 ||
        nonref_noise > 1.0)
      throw std::invalid_argument("scenario: noise rates must be in [0, 1]");
    if (assertions_per_source < 0 || assertions_per_source > n_objects)
      throw std::invalid_argument("scenario: assertions_per_source out of range");
    if (objects_per_case < 1)
      throw std::invalid_argument("scenario: objects_per_case must be >= 1");
    if (related_claims < 1 || related_claims >= n_claims)
      throw std::invalid_argument(
          "scenario: related_claims must be in [1, n_claims)");
    if (ranking_dim < n_claims)
      throw std::invalid_argument("scenario: ranking_dim must be >= n_claims");
    if (ranking_perturbation < 0.0)
      throw std::invalid_argument("scenario: ranking_perturbation must be >= 0");
  }
};

struct GroundTruth {
  std::vector<ConditionId> truth_condition;       // per object
  std::vector<std::vector<ConditionId>> related;  // per object, most related first
  std::vector<double> source_error;               // realized wrong fraction
  RowMatrixXd object_vectors;                     // ranking mode: planted x rows
};

struct SyntheticData {
  Dataset data;
  GroundTruth truth;
};

namespace detail {

// direct construction keeps TripleId == object index and ConditionId == claim
// index, which the ground-truth bookkeeping relies on
inline Dataset make_skeleton(int n_objects, int n_claims) {
  Dataset ds;
  ds.condition_types = {"claim"};
  ds.conditions_of_type.resize(1);
  for (int j = 0; j < n_objects; ++j) {
    const std::string name = "o" + std::to_string(j);
    ds.triples.push_back({name, "state", name});
    ds.entities.push_back(name);
    ds.triple_entities.emplace_back(j, j);
  }
  for (int i = 0; i < n_claims; ++i) {
    ds.conditions.push_back({"claim", "c" + std::to_string(i)});
    ds.condition_type_of.push_back(0);
    ds.conditions_of_type[0].push_back(i);
  }
  return ds;
}

inline SourceId add_source(Dataset& ds, std::string name, bool is_reference) {
  Source s;
  s.id = static_cast<SourceId>(ds.sources.size());
  s.name = std::move(name);
  s.is_reference = is_reference;
  ds.sources.push_back(std::move(s));
  return ds.sources.back().id;
}

inline void add_case(Dataset& ds, SourceId k, std::vector<TripleId> triples,
                     std::vector<ConditionId> conds) {
  Case c;
  c.id = static_cast<CaseId>(ds.cases.size());
  c.source = k;
  c.triples = std::move(triples);
  c.conditions = std::move(conds);
  ds.sources[k].cases.push_back(c.id);
  for (TripleId m : c.triples)
    for (ConditionId n : c.conditions) ds.sources[k].assertions.emplace_back(m, n);
  ds.cases.push_back(std::move(c));
}

inline void finalize(Dataset& ds) {
  for (Source& s : ds.sources) {
    std::sort(s.assertions.begin(), s.assertions.end());
    s.assertions.erase(std::unique(s.assertions.begin(), s.assertions.end()),
                       s.assertions.end());
    if (s.is_reference)
      ds.reference_assertions.insert(ds.reference_assertions.end(),
                                     s.assertions.begin(), s.assertions.end());
  }
  std::sort(ds.reference_assertions.begin(), ds.reference_assertions.end());
  ds.reference_assertions.erase(
      std::unique(ds.reference_assertions.begin(), ds.reference_assertions.end()),
      ds.reference_assertions.end());
}

// distinct objects covered by one source: all of them, or a sorted random subset
inline std::vector<int> pick_objects(Rng& rng, int n_objects, int count) {
  std::vector<int> all(n_objects);
  for (int j = 0; j < n_objects; ++j) all[j] = j;
  if (count <= 0 || count >= n_objects) return all;
  for (int j = 0; j < count; ++j) {
    const int pick = j + static_cast<int>(rng.below(n_objects - j));
    std::swap(all[j], all[pick]);
  }
  all.resize(count);
  std::sort(all.begin(), all.end());
  return all;
}

// which of the asserted objects get a corrupted claim
inline std::vector<bool> corruption_mask(Rng& rng, int count, double noise,
                                         bool exact) {
  std::vector<bool> mask(count, false);
  if (exact) {
    const int wrong = static_cast<int>(std::lround(noise * count));
    std::vector<int> idx(count);
    for (int i = 0; i < count; ++i) idx[i] = i;
    for (int i = 0; i < wrong; ++i) {
      const int pick = i + static_cast<int>(rng.below(count - i));
      std::swap(idx[i], idx[pick]);
      mask[idx[i]] = true;
    }
  } else {
    for (int i = 0; i < count; ++i) mask[i] = rng.uniform() < noise;
  }
  return mask;
}

// emit one source's assertions, optionally grouping same-claim objects into
// shared cases so the attention context sees more than one triple
inline void emit_cases(Dataset& ds, SourceId k, const std::vector<int>& objs,
                       const std::vector<ConditionId>& claims,
                       int objects_per_case) {
  if (objects_per_case <= 1) {
    for (size_t i = 0; i < objs.size(); ++i)
      add_case(ds, k, {objs[i]}, {claims[i]});
    return;
  }
  const int n_claims = static_cast<int>(ds.conditions.size());
  std::vector<std::vector<int>> by_claim(n_claims);
  for (size_t i = 0; i < objs.size(); ++i) by_claim[claims[i]].push_back(objs[i]);
  for (int c = 0; c < n_claims; ++c) {
    const auto& members = by_claim[c];
    for (size_t start = 0; start < members.size();
         start += static_cast<size_t>(objects_per_case)) {
      const size_t stop =
          std::min(members.size(), start + static_cast<size_t>(objects_per_case));
      add_case(ds, k,
               std::vector<int>(members.begin() + start, members.begin() + stop),
               {c});
    }
  }
}

}  // namespace detail

/// Every object has one true claim; sources assert it or a uniformly random
/// wrong one, with corruption probability set by their group.
inline SyntheticData gen_single_truth(const ScenarioSpec& spec) {
  spec.validate();
  Rng rng(derive_seed(spec.seed, 0x517u));

  SyntheticData out;
  out.data = detail::make_skeleton(spec.n_objects, spec.n_claims);
  out.truth.truth_condition.resize(spec.n_objects);
  for (int m = 0; m < spec.n_objects; ++m)
    out.truth.truth_condition[m] =
        static_cast<ConditionId>(rng.below(spec.n_claims));

  out.truth.source_error.resize(spec.n_sources);
  for (int k = 0; k < spec.n_sources; ++k) {
    const bool is_ref = k < spec.n_reference;
    const double noise = is_ref ? spec.ref_noise : spec.nonref_noise;
    const SourceId sid = detail::add_source(
        out.data, "s" + std::to_string(k), is_ref);
    const std::vector<int> objs =
        detail::pick_objects(rng, spec.n_objects, spec.assertions_per_source);
    const std::vector<bool> wrong = detail::corruption_mask(
        rng, static_cast<int>(objs.size()), noise, spec.exact_noise_fraction);
    std::vector<ConditionId> claims(objs.size());
    int wrong_count = 0;
    for (size_t i = 0; i < objs.size(); ++i) {
      const ConditionId truth = out.truth.truth_condition[objs[i]];
      if (wrong[i]) {
        ConditionId c = static_cast<ConditionId>(rng.below(spec.n_claims - 1));
        if (c >= truth) ++c;
        claims[i] = c;
        ++wrong_count;
      } else {
        claims[i] = truth;
      }
    }
    out.truth.source_error[sid] =
        objs.empty() ? 0.0 : static_cast<double>(wrong_count) / objs.size();
    detail::emit_cases(out.data, sid, objs, claims, spec.objects_per_case);
  }
  detail::finalize(out.data);
  return out;
}

/// Like gen_single_truth, but each source draws its own corruption rate:
/// references uniformly in [0, ref_noise], the rest in [0, nonref_noise].
/// Recovered reliabilities should then track the realized error rates.
inline SyntheticData gen_reliability_study(const ScenarioSpec& spec) {
  spec.validate();
  Rng noise_rng(derive_seed(spec.seed, 0x5CA1Eu));
  ScenarioSpec inner = spec;
  inner.exact_noise_fraction = true;  // realized rates spread over the range
  SyntheticData out;
  out.data = detail::make_skeleton(spec.n_objects, spec.n_claims);

  Rng rng(derive_seed(spec.seed, 0x517u));
  out.truth.truth_condition.resize(spec.n_objects);
  for (int m = 0; m < spec.n_objects; ++m)
    out.truth.truth_condition[m] =
        static_cast<ConditionId>(rng.below(spec.n_claims));

  out.truth.source_error.resize(spec.n_sources);
  for (int k = 0; k < spec.n_sources; ++k) {
    const bool is_ref = k < spec.n_reference;
    const double bound = is_ref ? spec.ref_noise : spec.nonref_noise;
    const double noise = noise_rng.uniform(0.0, bound);
    const SourceId sid = detail::add_source(out.data, "s" + std::to_string(k), is_ref);
    const std::vector<int> objs =
        detail::pick_objects(rng, spec.n_objects, spec.assertions_per_source);
    const std::vector<bool> wrong = detail::corruption_mask(
        rng, static_cast<int>(objs.size()), noise, inner.exact_noise_fraction);
    std::vector<ConditionId> claims(objs.size());
    int wrong_count = 0;
    for (size_t i = 0; i < objs.size(); ++i) {
      const ConditionId truth = out.truth.truth_condition[objs[i]];
      if (wrong[i]) {
        ConditionId c = static_cast<ConditionId>(rng.below(spec.n_claims - 1));
        if (c >= truth) ++c;
        claims[i] = c;
        ++wrong_count;
      } else {
        claims[i] = truth;
      }
    }
    out.truth.source_error[sid] =
        objs.empty() ? 0.0 : static_cast<double>(wrong_count) / objs.size();
    detail::emit_cases(out.data, sid, objs, claims, spec.objects_per_case);
  }
  detail::finalize(out.data);
  return out;
}

/// Ranking scenario: claims sit at orthonormal anchors, every object's planted
/// truth vector is a weighted sum of its related claims' anchors (descending
/// weights), and its observable embedding is that vector plus noise. Sources
/// assert the top related claim; corrupted assertions name an unrelated claim,
/// so the tail of the related list is never asserted and can only be ranked
/// through the embeddings.
inline SyntheticData gen_ranking(const ScenarioSpec& spec) {
  spec.validate();
  if (spec.n_claims - spec.related_claims < 1)
    throw std::invalid_argument("ranking: need at least one unrelated claim");
  Rng rng(derive_seed(spec.seed, 0x4A4Bu));

  SyntheticData out;
  out.data = detail::make_skeleton(spec.n_objects, spec.n_claims);

  std::vector<double> coef(spec.related_claims);
  for (int j = 0; j < spec.related_claims; ++j)
    coef[j] = j == 0 ? 1.0 : (j == 1 ? 0.6 : 0.3 * std::pow(0.5, j - 2));

  out.truth.related.resize(spec.n_objects);
  out.truth.truth_condition.resize(spec.n_objects);
  out.truth.object_vectors.setZero(spec.n_objects, spec.ranking_dim);
  for (int m = 0; m < spec.n_objects; ++m) {
    std::vector<ConditionId>& rel = out.truth.related[m];
    rel.push_back(m % spec.n_claims);  // deterministic coverage of all claims
    while (static_cast<int>(rel.size()) < spec.related_claims) {
      const ConditionId c = static_cast<ConditionId>(rng.below(spec.n_claims));
      if (std::find(rel.begin(), rel.end(), c) == rel.end()) rel.push_back(c);
    }
    out.truth.truth_condition[m] = rel.front();
    for (int j = 0; j < spec.related_claims; ++j)
      out.truth.object_vectors(m, rel[j]) += coef[j];
    if (spec.ranking_perturbation > 0.0)
      for (int dd = 0; dd < spec.ranking_dim; ++dd)
        out.truth.object_vectors(m, dd) +=
            spec.ranking_perturbation * rng.gaussian();
  }

  out.truth.source_error.resize(spec.n_sources);
  for (int k = 0; k < spec.n_sources; ++k) {
    const bool is_ref = k < spec.n_reference;
    const double noise = is_ref ? spec.ref_noise : spec.nonref_noise;
    const SourceId sid = detail::add_source(out.data, "s" + std::to_string(k), is_ref);
    const std::vector<int> objs =
        detail::pick_objects(rng, spec.n_objects, spec.assertions_per_source);
    const std::vector<bool> wrong = detail::corruption_mask(
        rng, static_cast<int>(objs.size()), noise, spec.exact_noise_fraction);
    std::vector<ConditionId> claims(objs.size());
    int wrong_count = 0;
    for (size_t i = 0; i < objs.size(); ++i) {
      const auto& rel = out.truth.related[objs[i]];
      if (wrong[i]) {
        std::vector<ConditionId> unrelated;
        for (ConditionId c = 0; c < spec.n_claims; ++c)
          if (std::find(rel.begin(), rel.end(), c) == rel.end())
            unrelated.push_back(c);
        claims[i] = unrelated[rng.below(unrelated.size())];
        ++wrong_count;
      } else {
        claims[i] = rel.front();
      }
    }
    out.truth.source_error[sid] =
        objs.empty() ? 0.0 : static_cast<double>(wrong_count) / objs.size();
    detail::emit_cases(out.data, sid, objs, claims, spec.objects_per_case);
  }
  detail::finalize(out.data);
  return out;
}

/// Three objects, two claims, three unanimous-on-o0 sources. o0 additionally
/// gets a conflicting claim from s2. With one-hot embeddings o0 and o1 share
/// nothing; with the planted embeddings (o0 and o1 nearly parallel, o2
/// orthogonal) the solver pulls their truth vectors together.
struct ToyData {
  Dataset data;
  EmbeddingSet one_hot;
  EmbeddingSet planted;
};

inline ToyData gen_toy() {
  ToyData toy;
  toy.data = detail::make_skeleton(3, 2);
  const SourceId s0 = detail::add_source(toy.data, "s0", false);
  const SourceId s1 = detail::add_source(toy.data, "s1", false);
  const SourceId s2 = detail::add_source(toy.data, "s2", false);
  detail::add_case(toy.data, s0, {0}, {0});
  detail::add_case(toy.data, s0, {1}, {0});
  detail::add_case(toy.data, s1, {0}, {0});
  detail::add_case(toy.data, s1, {2}, {1});
  detail::add_case(toy.data, s2, {0}, {0});
  detail::add_case(toy.data, s2, {0}, {1});
  detail::finalize(toy.data);

  toy.one_hot = make_one_hot_embeddings(3);
  RowMatrixXd planted(3, 2);
  const double a = 3.14159265358979323846 / 12.0;  // 15 degrees
  planted << 1.0, 0.0, std::cos(a), std::sin(a), 0.0, 1.0;
  toy.planted = make_external_embeddings(planted);
  return toy;
}

struct ToyResult {
  ToyData toy;
  SolverState state_one_hot;
  SolverState state_planted;
  double dist_one_hot = 0.0;  // ||v_o0 - v_o1||
  double dist_planted = 0.0;
};

/// Preset for the illustration: a strong context pull makes the contrast
/// between indicator and planted embeddings easy to see.
inline HyperParams toy_hyperparams() {
  HyperParams hp;
  hp.mu = 0.5;
  hp.use_references = false;
  return hp;
}

inline ToyResult run_toy(HyperParams hp = {}) {
  hp.use_references = false;  // the toy has no reference sources
  ToyResult res;
  res.toy = gen_toy();
  res.state_one_hot = solve(res.toy.data, res.toy.one_hot, hp);
  res.state_planted = solve(res.toy.data, res.toy.planted, hp);
  res.dist_one_hot =
      (res.state_one_hot.v.row(0) - res.state_one_hot.v.row(1)).norm();
  res.dist_planted =
      (res.state_planted.v.row(0) - res.state_planted.v.row(1)).norm();
  return res;
}

/// Project rows onto their two leading principal components. Component signs
/// are fixed by making the largest-magnitude loading positive.
inline RowMatrixXd pca_project_rows(const RowMatrixXd& x) {
  const Eigen::RowVectorXd mean = x.colwise().mean();
  RowMatrixXd centered = x;
  centered.rowwise() -= mean;
  const Eigen::MatrixXd cov =
      centered.transpose() * centered / std::max<int>(1, x.rows() - 1);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(cov);
  RowMatrixXd proj(x.rows(), 2);
  const int d = static_cast<int>(cov.cols());
  for (int c = 0; c < 2; ++c) {
    Eigen::VectorXd axis = c < d ? es.eigenvectors().col(d - 1 - c).eval()
                                 : Eigen::VectorXd::Zero(d).eval();
    int arg = 0;
    for (int i = 1; i < d; ++i)
      if (std::abs(axis(i)) > std::abs(axis(arg))) arg = i;
    if (d > 0 && axis(arg) < 0.0) axis = -axis;
    proj.col(c) = centered * axis;
  }
  return proj;
}

enum class SweepFamily { single_truth, ranking, reliability, toy };

struct SweepSettings {
  SweepFamily family = SweepFamily::single_truth;
  std::string sweep_param = "n_reference";
  std::vector<double> values;
  int seeds = 10;
  ScenarioSpec scenario;
  HyperParams hp;
  int jobs = 1;
};

/// Long-format result record, one per (sweep value, method, seed, metric).
struct SweepRow {
  std::string sweep_param;
  double value = 0.0;
  std::string method;
  int seed = 0;
  std::string metric;
  double score = 0.0;
};

namespace detail {

inline void apply_sweep_value(const std::string& param, double value,
                              ScenarioSpec& sc, HyperParams& hp) {
  if (param == "n_reference")
    sc.n_reference = static_cast<int>(std::lround(value));
  else if (param == "ref_noise")
    sc.ref_noise = value;
  else if (param == "nonref_noise")
    sc.nonref_noise = value;
  else if (param == "lambda")
    hp.lambda = value;
  else if (param == "mu")
    hp.mu = value;
  else if (param == "none")
    ;  // plain repetition over seeds
  else
    throw std::invalid_argument("unknown sweep parameter '" + param + "'");
}

inline void push_rows(std::vector<SweepRow>& rows, const std::string& param,
                      double value, const std::string& method, int seed,
                      std::initializer_list<std::pair<const char*, double>> kv) {
  for (const auto& [metric, score] : kv)
    rows.push_back({param, value, method, seed, metric, score});
}

inline std::vector<SweepRow> eval_point(const SweepSettings& cfg, double value,
                                        int seed_index) {
  ScenarioSpec sc = cfg.scenario;
  HyperParams hp = cfg.hp;
  apply_sweep_value(cfg.sweep_param, value, sc, hp);
  sc.seed = derive_seed(cfg.scenario.seed, 0xBE7Cu, seed_index);
  const std::string& param = cfg.sweep_param;

  std::vector<SweepRow> rows;
  if (cfg.family == SweepFamily::single_truth ||
      cfg.family == SweepFamily::reliability) {
    const SyntheticData sd = cfg.family == SweepFamily::single_truth
                                 ? gen_single_truth(sc)
                                 : gen_reliability_study(sc);
    const IndexView ix = build_index(sd.data, hp.use_references);
    const EmbeddingSet emb = make_one_hot_embeddings(sd.data.triple_count());
    const SolverState st = solve(sd.data, ix, emb, hp);

    if (cfg.family == SweepFamily::single_truth) {
      std::vector<int> pred(sd.data.triple_count(), -1);
      for (TripleId m = 0; m < sd.data.triple_count(); ++m) {
        const auto sel = select_truth(st, sd.data, ix, m);
        if (!sel.empty()) pred[m] = sel.front().second;
      }
      push_rows(rows, param, value, "engine", seed_index,
                {{"error_rate", error_rate(pred, sd.truth.truth_condition)}});
      for (const BaselineResult& b : run_all_baselines(sd.data, ix)) {
        std::vector<int> bp(sd.data.triple_count(), -1);
        for (TripleId m = 0; m < sd.data.triple_count(); ++m)
          bp[m] = b.selected[m][0];
        push_rows(rows, param, value, b.method, seed_index,
                  {{"error_rate", error_rate(bp, sd.truth.truth_condition)}});
      }
    } else {
      double wr = 0.0, wn = 0.0;
      int cr = 0, cn = 0;
      for (SourceId k = 0; k < sd.data.source_count(); ++k) {
        if (sd.data.sources[k].is_reference) {
          wr += st.omega(k);
          ++cr;
        } else {
          wn += st.omega(k);
          ++cn;
        }
      }
      std::vector<double> om(st.omega.data(), st.omega.data() + st.omega.size());
      push_rows(rows, param, value, "engine", seed_index,
                {{"pearson", pearson(om, sd.truth.source_error)},
                 {"mean_weight_reference", cr > 0 ? wr / cr : 0.0},
                 {"mean_weight_other", cn > 0 ? wn / cn : 0.0}});
      for (const BaselineResult& b : run_all_baselines(sd.data, ix)) {
        try {
          push_rows(rows, param, value, b.method, seed_index,
                    {{"pearson", pearson(b.source_scores, sd.truth.source_error)}});
        } catch (const std::invalid_argument&) {
          // degenerate scores (zero variance): no correlation to report
        }
      }
    }
  } else if (cfg.family == SweepFamily::ranking) {
    const SyntheticData sd = gen_ranking(sc);
    const IndexView ix = build_index(sd.data, hp.use_references);
    const EmbeddingSet emb = make_external_embeddings(sd.truth.object_vectors);
    const SolverState st = solve(sd.data, ix, emb, hp);

    std::vector<std::vector<int>> ranks(sd.data.triple_count());
    for (TripleId m = 0; m < sd.data.triple_count(); ++m)
      ranks[m] = rank_conditions(st, sd.data, m, 0);
    push_rows(rows, param, value, "engine", seed_index,
              {{"mrr", mrr(ranks, sd.truth.related)},
               {"map", map_score(ranks, sd.truth.related)}});
    for (const BaselineResult& b : run_all_baselines(sd.data, ix)) {
      for (TripleId m = 0; m < sd.data.triple_count(); ++m)
        ranks[m] = baseline_rank_conditions(b, sd.data, ix, m, 0);
      push_rows(rows, param, value, b.method, seed_index,
                {{"mrr", mrr(ranks, sd.truth.related)},
                 {"map", map_score(ranks, sd.truth.related)}});
    }
  } else {  // toy
    const ToyResult toy = run_toy(hp);
    rows.push_back({"embeddings", 0.0, "engine", seed_index,
                    "truth_distance_o0_o1", toy.dist_one_hot});
    rows.push_back({"embeddings", 1.0, "engine", seed_index,
                    "truth_distance_o0_o1", toy.dist_planted});
  }
  return rows;
}

}  // namespace detail

/// Run every (value, seed) instance of a sweep and collect long-format rows.
/// Row order is canonical (by value, then seed) regardless of job count.
inline std::vector<SweepRow> run_sweep(const SweepSettings& cfg) {
  if (cfg.seeds < 1) throw std::invalid_argument("sweep: seeds must be >= 1");
  std::vector<double> values = cfg.values;
  if (cfg.family == SweepFamily::toy || cfg.family == SweepFamily::reliability)
    values = {0.0};
  else if (values.empty())
    throw std::invalid_argument("sweep: no values given");

  struct Task {
    double value;
    int seed;
  };
  std::vector<Task> tasks;
  for (double v : values)
    for (int s = 0; s < cfg.seeds; ++s) tasks.push_back({v, s});

  std::vector<std::vector<SweepRow>> results(tasks.size());
  const int jobs = std::max(1, cfg.jobs);
  if (jobs == 1 || tasks.size() <= 1) {
    for (size_t i = 0; i < tasks.size(); ++i)
      results[i] = detail::eval_point(cfg, tasks[i].value, tasks[i].seed);
  } else {
    std::vector<std::future<void>> futs;
    for (int w = 0; w < jobs; ++w) {
      futs.push_back(std::async(std::launch::async, [&, w] {
        for (size_t i = static_cast<size_t>(w); i < tasks.size();
             i += static_cast<size_t>(jobs))
          results[i] = detail::eval_point(cfg, tasks[i].value, tasks[i].seed);
      }));
    }
    for (auto& f : futs) f.get();
  }

  std::vector<SweepRow> rows;
  for (const auto& r : results) rows.insert(rows.end(), r.begin(), r.end());
  return rows;
}

}  // namespace kgtruth
