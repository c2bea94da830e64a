#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "kgtruth/common.hpp"
#include "kgtruth/dataset.hpp"
#include "kgtruth/embeddings.hpp"
#include "kgtruth/index.hpp"

namespace kgtruth {

struct HyperParams {
  double lambda = 0.5;    // extra weight on reference-confirmed assertions
  double mu = 0.1;        // pull towards attention-weighted case context
  double epsilon = 1e-8;  // smoothing for errors, weights and confidences
  double tol = 1e-6;      // relative objective change for convergence
  int max_iter = 100;
  bool use_references = true;  // false: ignore reference flags entirely
  // The solver itself is deterministic; the seed feeds any embedding training
  // done on its behalf and is recorded with results.
  std::uint64_t seed = 1;

  void validate() const {
    if (lambda < 0.0) throw std::invalid_argument("lambda must be >= 0");
    if (mu < 0.0) throw std::invalid_argument("mu must be >= 0");
    if (!(epsilon > 0.0)) throw std::invalid_argument("epsilon must be > 0");
    if (tol < 0.0) throw std::invalid_argument("tol must be >= 0");
    if (max_iter < 1) throw std::invalid_argument("max_iter must be >= 1");
  }
};

struct SolverState {
  RowMatrixXd v;          // truth vectors, one row per triple
  RowMatrixXd u;          // condition vectors, one row per condition
  Eigen::VectorXd omega;  // source reliabilities
  Eigen::VectorXd theta;  // smoothed per-source errors from the last pass

  std::vector<double> objective_trace;     // one entry per completed iteration
  std::vector<double> constraint_residual; // |sum exp(-omega) - 1| per iteration
  int iterations = 0;
  bool converged = false;
  std::vector<std::string> warnings;
};

struct KgEntry {
  TripleId triple;
  ConditionId condition;
  double confidence;
};

/// Discovered conditional knowledge graph: per-(triple, condition-type)
/// normalized confidences over the asserted candidate conditions.
struct ConditionalKG {
  std::vector<KgEntry> entries;
};

// export order: by triple, then best conditions first
inline bool kg_entry_order(const KgEntry& a, const KgEntry& b) {
  if (a.triple != b.triple) return a.triple < b.triple;
  if (a.confidence != b.confidence) return a.confidence > b.confidence;
  return a.condition < b.condition;
}

// Everything the update steps need, precomputed once per (dataset, index,
// embeddings, hyperparameter) combination. Each occurrence carries
// base = (1 + lambda * [confirmed]) / (|F_k| + lambda |Delta_k|); multiplying
// by the current omega_k gives its weight in the sums.
struct SolveWorkspace {
  const Dataset* ds = nullptr;
  const IndexView* ix = nullptr;
  const EmbeddingSet* emb = nullptr;
  HyperParams hp;

  RowMatrixXd contexts;        // attention-weighted case context per (case, slot)
  Eigen::VectorXd context_sq;  // sum_i alpha_i ||x_i||^2 per (case, slot)
  std::vector<double> occ_base;
  Eigen::VectorXd denom;       // |F_k| + lambda |Delta_k| per source
};

inline SolveWorkspace build_workspace(const Dataset& ds, const IndexView& ix,
                                      const EmbeddingSet& emb,
                                      const HyperParams& hp) {
  hp.validate();
  if (static_cast<int>(emb.x.rows()) != ds.triple_count())
    throw std::invalid_argument(
        "embeddings cover " + std::to_string(emb.x.rows()) +
        " triples, dataset has " + std::to_string(ds.triple_count()));

  SolveWorkspace ws;
  ws.ds = &ds;
  ws.ix = &ix;
  ws.emb = &emb;
  ws.hp = hp;

  const int d = emb.dim();
  ws.contexts.setZero(ix.context_count, d);
  ws.context_sq.setZero(ix.context_count);
  RowMatrixXd xc;
  for (size_t c = 0; c < ds.cases.size(); ++c) {
    const auto& triples = ds.cases[c].triples;
    const int s = static_cast<int>(triples.size());
    xc.resize(s, d);
    for (int i = 0; i < s; ++i) xc.row(i) = emb.x.row(triples[i]);
    const Eigen::MatrixXd gram = xc * xc.transpose();
    const int off = ix.case_context_offset[c];
    for (int p = 0; p < s; ++p) {
      Eigen::VectorXd alpha = (gram.col(p).array() - gram.col(p).maxCoeff()).exp();
      alpha /= alpha.sum();
      ws.contexts.row(off + p) = alpha.transpose() * xc;
      ws.context_sq(off + p) = alpha.dot(gram.diagonal());
    }
  }

  ws.denom.resize(ds.source_count());
  for (SourceId k = 0; k < ds.source_count(); ++k)
    ws.denom(k) = ix.f_size[k] + hp.lambda * ix.delta_size[k];

  ws.occ_base.resize(ix.occurrences.size());
  for (size_t oi = 0; oi < ix.occurrences.size(); ++oi) {
    const auto& o = ix.occurrences[oi];
    const double boost = o.in_reference ? 1.0 + hp.lambda : 1.0;
    ws.occ_base[oi] = boost / ws.denom(o.source);
  }
  return ws;
}

/// omega_k = |F_k ∩ F_ref| / (|F_k| + |F_ref|) + epsilon. Without references
/// all sources start at the same (tiny) weight; only ratios matter to the
/// first update passes.
inline Eigen::VectorXd init_source_weights(const Dataset& ds,
                                           const IndexView& ix,
                                           const HyperParams& hp) {
  const double fref = ix.references_used
                          ? static_cast<double>(ds.reference_assertions.size())
                          : 0.0;
  Eigen::VectorXd omega(ds.source_count());
  for (SourceId k = 0; k < ds.source_count(); ++k)
    omega(k) = ix.delta_size[k] / (ix.f_size[k] + fref) + hp.epsilon;
  return omega;
}

namespace detail {

inline void check_finite(const RowMatrixXd& m, const char* step, int iter) {
  if (!m.allFinite())
    throw NumericalError(std::string("non-finite values after ") + step +
                         " at iteration " + std::to_string(iter));
}

inline void check_finite(const Eigen::VectorXd& v, const char* step, int iter) {
  if (!v.allFinite())
    throw NumericalError(std::string("non-finite values after ") + step +
                         " at iteration " + std::to_string(iter));
}

}  // namespace detail

/// Exact minimizer of the objective over truth vectors: weighted mean of the
/// asserted condition vectors and case contexts. Triples without assertions
/// keep their previous rows.
inline void update_truth_vectors(const SolveWorkspace& ws, RowMatrixXd& v,
                                 const RowMatrixXd& u,
                                 const Eigen::VectorXd& omega) {
  const double mu = ws.hp.mu;
  RowMatrixXd num = RowMatrixXd::Zero(v.rows(), v.cols());
  Eigen::VectorXd den = Eigen::VectorXd::Zero(v.rows());
  const auto& occ = ws.ix->occurrences;
  for (size_t oi = 0; oi < occ.size(); ++oi) {
    const auto& o = occ[oi];
    const double w = omega(o.source) * ws.occ_base[oi];
    num.row(o.triple) += w * u.row(o.condition) + (w * mu) * ws.contexts.row(o.context);
    den(o.triple) += w * (1.0 + mu);
  }
  for (int m = 0; m < v.rows(); ++m)
    if (den(m) > 0.0) v.row(m) = num.row(m) / den(m);
}

/// Exact minimizer over condition vectors: weighted mean of the truth vectors
/// asserted under each condition. Conditions without assertions keep their
/// previous rows.
inline void update_condition_vectors(const SolveWorkspace& ws, RowMatrixXd& u,
                                     const RowMatrixXd& v,
                                     const Eigen::VectorXd& omega) {
  RowMatrixXd num = RowMatrixXd::Zero(u.rows(), u.cols());
  Eigen::VectorXd den = Eigen::VectorXd::Zero(u.rows());
  const auto& occ = ws.ix->occurrences;
  for (size_t oi = 0; oi < occ.size(); ++oi) {
    const auto& o = occ[oi];
    const double w = omega(o.source) * ws.occ_base[oi];
    num.row(o.condition) += w * v.row(o.triple);
    den(o.condition) += w;
  }
  for (int n = 0; n < u.rows(); ++n)
    if (den(n) > 0.0) u.row(n) = num.row(n) / den(n);
}

/// Initial truth vectors: attention-weighted case contexts only (condition
/// vectors do not exist yet). Unasserted triples fall back to their own
/// embedding row.
inline RowMatrixXd init_truth_vectors(const SolveWorkspace& ws,
                                      const Eigen::VectorXd& omega) {
  const int M = ws.ds->triple_count();
  RowMatrixXd num = RowMatrixXd::Zero(M, ws.emb->dim());
  Eigen::VectorXd den = Eigen::VectorXd::Zero(M);
  const auto& occ = ws.ix->occurrences;
  for (size_t oi = 0; oi < occ.size(); ++oi) {
    const auto& o = occ[oi];
    const double w = omega(o.source) * ws.occ_base[oi];
    num.row(o.triple) += w * ws.contexts.row(o.context);
    den(o.triple) += w;
  }
  RowMatrixXd v(M, ws.emb->dim());
  for (int m = 0; m < M; ++m)
    v.row(m) = den(m) > 0.0 ? (num.row(m) / den(m)).eval() : ws.emb->x.row(m);
  return v;
}

/// Normalized per-source errors (epsilon-smoothed): each source's share of
/// the objective with its reliability factored out.
inline Eigen::VectorXd compute_source_errors(const SolveWorkspace& ws,
                                             const RowMatrixXd& v,
                                             const RowMatrixXd& u) {
  const double mu = ws.hp.mu;
  const Eigen::VectorXd vsq = v.rowwise().squaredNorm();
  Eigen::VectorXd theta(ws.ds->source_count());
  const auto& occ = ws.ix->occurrences;
  for (SourceId k = 0; k < ws.ds->source_count(); ++k) {
    const auto [begin, end] = ws.ix->source_occ_range[k];
    double acc = 0.0;
    for (int oi = begin; oi < end; ++oi) {
      const auto& o = occ[oi];
      double err = (v.row(o.triple) - u.row(o.condition)).squaredNorm();
      err += mu * (vsq(o.triple) -
                   2.0 * v.row(o.triple).dot(ws.contexts.row(o.context)) +
                   ws.context_sq(o.context));
      acc += ws.occ_base[oi] * err;
    }
    theta(k) = acc + ws.hp.epsilon;
  }
  return theta;
}

/// omega_k = -log(theta_k / sum theta): the exact minimizer of the weighted
/// error under the constraint sum_k exp(-omega_k) = 1.
inline Eigen::VectorXd update_source_weights(const Eigen::VectorXd& theta) {
  const double total = theta.sum();
  if (!(total > 0.0))
    throw NumericalError("source errors sum to zero; cannot update weights");
  return (theta / total).array().log().matrix() * -1.0;
}

/// The objective value itself, accumulated directly over occurrences. Equals
/// sum_k omega_k (theta_k - epsilon) up to floating-point reassociation.
inline double objective(const SolveWorkspace& ws, const RowMatrixXd& v,
                        const RowMatrixXd& u, const Eigen::VectorXd& omega) {
  const double mu = ws.hp.mu;
  const Eigen::VectorXd vsq = v.rowwise().squaredNorm();
  double obj = 0.0;
  const auto& occ = ws.ix->occurrences;
  for (size_t oi = 0; oi < occ.size(); ++oi) {
    const auto& o = occ[oi];
    double err = (v.row(o.triple) - u.row(o.condition)).squaredNorm();
    err += mu * (vsq(o.triple) -
                 2.0 * v.row(o.triple).dot(ws.contexts.row(o.context)) +
                 ws.context_sq(o.context));
    obj += omega(o.source) * ws.occ_base[oi] * err;
  }
  return obj;
}

/// Block coordinate descent: truth vectors, condition vectors, reliabilities.
/// Every step is an exact minimizer, so the recorded objective trace is
/// non-increasing (up to the epsilon smoothing of the reliability step).
inline SolverState solve(const Dataset& ds, const IndexView& ix,
                         const EmbeddingSet& emb, const HyperParams& hp) {
  SolveWorkspace ws = build_workspace(ds, ix, emb, hp);

  SolverState st;
  if (ws.hp.use_references && ds.reference_assertions.empty())
    st.warnings.push_back(
        "reference set is empty; reliability starts uniform and confirmed-"
        "assertion terms are inactive");
  if (!emb.cooccurrence_trained && emb.mode == EmbeddingMode::composed)
    st.warnings.push_back(
        "co-occurrence corpus had no multi-triple cases; that part of the "
        "embedding is random");

  st.omega = init_source_weights(ds, ix, hp);
  st.v = init_truth_vectors(ws, st.omega);
  detail::check_finite(st.v, "truth-vector init", 0);
  st.u = RowMatrixXd::Zero(ds.condition_count(), emb.dim());
  update_condition_vectors(ws, st.u, st.v, st.omega);
  detail::check_finite(st.u, "condition-vector init", 0);

  st.theta = compute_source_errors(ws, st.v, st.u);
  double prev = st.omega.dot(st.theta - Eigen::VectorXd::Constant(
                                            st.theta.size(), hp.epsilon));

  for (int t = 1; t <= hp.max_iter; ++t) {
    update_truth_vectors(ws, st.v, st.u, st.omega);
    detail::check_finite(st.v, "truth-vector update", t);
    update_condition_vectors(ws, st.u, st.v, st.omega);
    detail::check_finite(st.u, "condition-vector update", t);
    st.theta = compute_source_errors(ws, st.v, st.u);
    detail::check_finite(st.theta, "source-error update", t);
    st.omega = update_source_weights(st.theta);
    detail::check_finite(st.omega, "reliability update", t);

    const double obj = st.omega.dot(
        st.theta - Eigen::VectorXd::Constant(st.theta.size(), hp.epsilon));
    st.objective_trace.push_back(obj);
    st.constraint_residual.push_back(
        std::abs((-st.omega).array().exp().sum() - 1.0));
    st.iterations = t;

    if (std::abs(obj - prev) / std::max(std::abs(prev), 1e-12) < hp.tol) {
      st.converged = true;
      break;
    }
    prev = obj;
  }
  return st;
}

inline SolverState solve(const Dataset& ds, const EmbeddingSet& emb,
                         const HyperParams& hp = {}) {
  const IndexView ix = build_index(ds, hp.use_references);
  return solve(ds, ix, emb, hp);
}

/// p(m, n) = (min_n' dist^2 + eps) / (dist^2 + eps), normalized within each
/// (triple, condition-type) group over the conditions actually asserted for
/// that triple. The best condition of each group scores exactly 1.
inline ConditionalKG confidence_scores(const SolverState& st, const Dataset& ds,
                                       const IndexView& ix,
                                       double eps = 1e-8) {
  ConditionalKG kg;
  std::vector<std::pair<ConditionId, double>> group;
  for (TripleId m = 0; m < ds.triple_count(); ++m) {
    for (int type = 0; type < ds.type_count(); ++type) {
      group.clear();
      for (int a : ix.claims_of_triple[m]) {
        const ConditionId n = ix.assertions[a].second;
        if (ds.condition_type_of[n] != type) continue;
        group.emplace_back(n, (st.v.row(m) - st.u.row(n)).squaredNorm());
      }
      if (group.empty()) continue;
      double best = group.front().second;
      for (const auto& [n, d2] : group) best = std::min(best, d2);
      for (const auto& [n, d2] : group)
        kg.entries.push_back({m, n, (best + eps) / (d2 + eps)});
    }
  }
  std::sort(kg.entries.begin(), kg.entries.end(), kg_entry_order);
  return kg;
}

inline ConditionalKG confidence_scores(const SolverState& st, const Dataset& ds,
                                       double eps = 1e-8) {
  const IndexView ix = build_index(ds);
  return confidence_scores(st, ds, ix, eps);
}

/// Most plausible asserted condition per type for one triple: the condition
/// vector closest to the triple's truth vector (ties: lowest id).
inline std::vector<std::pair<int, ConditionId>> select_truth(
    const SolverState& st, const Dataset& ds, const IndexView& ix, TripleId m) {
  std::vector<std::pair<int, ConditionId>> out;  // (type, condition)
  for (int type = 0; type < ds.type_count(); ++type) {
    ConditionId best = -1;
    double best_d2 = 0.0;
    for (int a : ix.claims_of_triple[m]) {
      const ConditionId n = ix.assertions[a].second;
      if (ds.condition_type_of[n] != type) continue;
      const double d2 = (st.v.row(m) - st.u.row(n)).squaredNorm();
      if (best < 0 || d2 < best_d2) {
        best = n;
        best_d2 = d2;
      }
    }
    if (best >= 0) out.emplace_back(type, best);
  }
  return out;
}

/// All conditions of one type ranked by distance to the triple's truth
/// vector, nearest first (ties: lowest id).
inline std::vector<ConditionId> rank_conditions(const SolverState& st,
                                               const Dataset& ds, TripleId m,
                                               int type) {
  std::vector<std::pair<double, ConditionId>> scored;
  for (ConditionId n : ds.conditions_of_type[type])
    scored.emplace_back((st.v.row(m) - st.u.row(n)).squaredNorm(), n);
  std::sort(scored.begin(), scored.end());
  std::vector<ConditionId> out;
  out.reserve(scored.size());
  for (const auto& [d2, n] : scored) out.push_back(n);
  return out;
}

/// Restrict a dataset to the assertions of one condition type. Triple,
/// condition and entity id spaces are preserved; cases that lose all their
/// conditions are dropped, as are sources left with no cases. Returns the
/// projected dataset plus the original id of each retained source.
inline std::pair<Dataset, std::vector<SourceId>> project_to_type(
    const Dataset& ds, int type) {
  Dataset out;
  out.triples = ds.triples;
  out.conditions = ds.conditions;
  out.condition_types = ds.condition_types;
  out.condition_type_of = ds.condition_type_of;
  out.conditions_of_type = ds.conditions_of_type;
  out.entities = ds.entities;
  out.triple_entities = ds.triple_entities;

  std::vector<SourceId> kept;
  std::vector<SourceId> remap(ds.source_count(), -1);
  for (const Case& c : ds.cases) {
    std::vector<ConditionId> conds;
    for (ConditionId n : c.conditions)
      if (ds.condition_type_of[n] == type) conds.push_back(n);
    if (conds.empty()) continue;
    if (remap[c.source] < 0) {
      remap[c.source] = static_cast<SourceId>(out.sources.size());
      kept.push_back(c.source);
      Source s;
      s.id = remap[c.source];
      s.name = ds.sources[c.source].name;
      s.is_reference = ds.sources[c.source].is_reference;
      out.sources.push_back(std::move(s));
    }
    Case nc;
    nc.id = static_cast<CaseId>(out.cases.size());
    nc.source = remap[c.source];
    nc.triples = c.triples;
    nc.conditions = std::move(conds);
    out.sources[nc.source].cases.push_back(nc.id);
    for (TripleId m : nc.triples)
      for (ConditionId n : nc.conditions)
        out.sources[nc.source].assertions.emplace_back(m, n);
    out.cases.push_back(std::move(nc));
  }
  for (Source& s : out.sources) {
    std::sort(s.assertions.begin(), s.assertions.end());
    s.assertions.erase(std::unique(s.assertions.begin(), s.assertions.end()),
                       s.assertions.end());
    if (s.is_reference)
      out.reference_assertions.insert(out.reference_assertions.end(),
                                      s.assertions.begin(), s.assertions.end());
  }
  std::sort(out.reference_assertions.begin(), out.reference_assertions.end());
  out.reference_assertions.erase(
      std::unique(out.reference_assertions.begin(),
                  out.reference_assertions.end()),
      out.reference_assertions.end());
  return {std::move(out), std::move(kept)};
}

struct TypeRun {
  int type;
  Dataset data;
  std::vector<SourceId> source_ids;  // projected id -> original id
  SolverState state;
};

struct PerTypeSolveResult {
  std::vector<TypeRun> runs;
  ConditionalKG kg;
  Eigen::VectorXd mean_weights;  // per original source, averaged over types
};

/// Solve each condition type as its own problem (types then share no
/// information through the condition vectors). Confidences are merged;
/// reliabilities are averaged over the types a source participates in.
inline PerTypeSolveResult solve_per_type(const Dataset& ds,
                                         const EmbeddingSet& emb,
                                         const HyperParams& hp = {}) {
  PerTypeSolveResult res;
  Eigen::VectorXd acc = Eigen::VectorXd::Zero(ds.source_count());
  Eigen::VectorXd cnt = Eigen::VectorXd::Zero(ds.source_count());
  for (int type = 0; type < ds.type_count(); ++type) {
    auto [proj, ids] = project_to_type(ds, type);
    if (proj.cases.empty()) continue;
    TypeRun run;
    run.type = type;
    run.data = std::move(proj);
    run.source_ids = std::move(ids);
    const IndexView pix = build_index(run.data, hp.use_references);
    run.state = solve(run.data, pix, emb, hp);
    const ConditionalKG part =
        confidence_scores(run.state, run.data, pix, hp.epsilon);
    res.kg.entries.insert(res.kg.entries.end(), part.entries.begin(),
                          part.entries.end());
    for (size_t i = 0; i < run.source_ids.size(); ++i) {
      acc(run.source_ids[i]) += run.state.omega(static_cast<int>(i));
      cnt(run.source_ids[i]) += 1.0;
    }
    res.runs.push_back(std::move(run));
  }
  if (res.runs.empty()) throw std::invalid_argument("dataset has no assertions");
  res.mean_weights = Eigen::VectorXd::Zero(ds.source_count());
  for (int k = 0; k < ds.source_count(); ++k)
    if (cnt(k) > 0.0) res.mean_weights(k) = acc(k) / cnt(k);
  std::sort(res.kg.entries.begin(), res.kg.entries.end(), kg_entry_order);
  return res;
}

}  // namespace kgtruth
