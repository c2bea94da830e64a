#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "kgtruth/dataset.hpp"
#include "kgtruth/index.hpp"

namespace kgtruth {

/// Output shared by the voting-style reference methods. Claim scores are
/// aligned with IndexView::assertions; conditions a method never saw score
/// default_claim_score when ranking.
struct BaselineResult {
  std::string method;
  std::vector<std::vector<ConditionId>> selected;  // [triple][type], -1 if none
  std::vector<double> source_scores;               // per source
  std::vector<double> claim_scores;                // per distinct assertion
  double default_claim_score = 0.0;
  int iterations = 0;
};

namespace detail {

// argmax of claim scores within each (triple, type) group; assertion order is
// ascending in condition id, so strict > resolves ties to the lowest id
inline void select_from_scores(BaselineResult& r, const Dataset& ds,
                               const IndexView& ix) {
  r.selected.assign(ds.triple_count(),
                    std::vector<ConditionId>(ds.type_count(), -1));
  std::vector<double> best(ds.type_count());
  for (TripleId m = 0; m < ds.triple_count(); ++m) {
    for (int a : ix.claims_of_triple[m]) {
      const ConditionId n = ix.assertions[a].second;
      const int type = ds.condition_type_of[n];
      if (r.selected[m][type] < 0 || r.claim_scores[a] > best[type]) {
        r.selected[m][type] = n;
        best[type] = r.claim_scores[a];
      }
    }
  }
}

// fraction of a source's assertions that agree with the selected truths
inline std::vector<double> agreement_scores(const BaselineResult& r,
                                            const Dataset& ds) {
  std::vector<double> out(ds.source_count(), 0.0);
  for (SourceId k = 0; k < ds.source_count(); ++k) {
    const auto& fk = ds.sources[k].assertions;
    if (fk.empty()) continue;
    int hits = 0;
    for (const auto& [m, n] : fk)
      if (r.selected[m][ds.condition_type_of[n]] == n) ++hits;
    out[k] = static_cast<double>(hits) / static_cast<double>(fk.size());
  }
  return out;
}

}  // namespace detail

/// One vote per supporting source; ties go to the lowest condition id.
/// Source scores are the fraction of assertions that agree with the outcome.
inline BaselineResult majority_vote(const Dataset& ds, const IndexView& ix) {
  BaselineResult r;
  r.method = "majority_vote";
  r.iterations = 1;
  r.claim_scores.resize(ix.assertions.size());
  for (size_t a = 0; a < ix.assertions.size(); ++a)
    r.claim_scores[a] = static_cast<double>(ix.assertion_sources[a].size());
  detail::select_from_scores(r, ds, ix);
  r.source_scores = detail::agreement_scores(r, ds);
  return r;
}

/// Iterates between source trustworthiness and claim confidence:
/// tau = -ln(1 - t), sigma(claim) = sum of supporter tau,
/// s = 1 / (1 + exp(-gamma sigma)), t = mean of s over the source's claims.
/// The implication weight rho is accepted for interface compatibility but has
/// no effect, since claims here carry no implication structure.
inline BaselineResult truthfinder(const Dataset& ds, const IndexView& ix,
                                  double gamma = 0.3, double rho = 0.5,
                                  double init_trust = 0.9, int max_iter = 50,
                                  double tol = 1e-6) {
  (void)rho;
  BaselineResult r;
  r.method = "truthfinder";
  r.default_claim_score = 0.5;  // s at sigma = 0

  const int K = ds.source_count();
  std::vector<double> trust(K, init_trust);
  std::vector<double> s(ix.assertions.size(), 0.0);
  std::vector<int> claim_of_source_assertion;  // flattened F_k -> assertion ids
  std::vector<std::pair<int, int>> range(K);
  for (SourceId k = 0; k < K; ++k) {
    range[k].first = static_cast<int>(claim_of_source_assertion.size());
    for (const auto& [m, n] : ds.sources[k].assertions)
      claim_of_source_assertion.push_back(ix.assertion_index(m, n));
    range[k].second = static_cast<int>(claim_of_source_assertion.size());
  }

  for (int it = 1; it <= max_iter; ++it) {
    r.iterations = it;
    std::vector<double> tau(K);
    for (SourceId k = 0; k < K; ++k) {
      const double t = std::clamp(trust[k], 1e-6, 1.0 - 1e-6);
      tau[k] = -std::log(1.0 - t);
    }
    for (size_t a = 0; a < ix.assertions.size(); ++a) {
      double sigma = 0.0;
      for (SourceId k : ix.assertion_sources[a]) sigma += tau[k];
      s[a] = 1.0 / (1.0 + std::exp(-gamma * sigma));
    }
    double delta = 0.0;
    for (SourceId k = 0; k < K; ++k) {
      double acc = 0.0;
      for (int i = range[k].first; i < range[k].second; ++i)
        acc += s[claim_of_source_assertion[i]];
      const int cnt = range[k].second - range[k].first;
      const double next = cnt > 0 ? acc / cnt : trust[k];
      delta = std::max(delta, std::abs(next - trust[k]));
      trust[k] = next;
    }
    if (delta < tol) break;
  }

  r.claim_scores = s;
  detail::select_from_scores(r, ds, ix);
  r.source_scores = trust;
  return r;
}

namespace detail {

// shared investment machinery; pooled = false gives B = H^g, pooled = true
// redistributes each (triple, type) group's total credit by H^g shares
inline BaselineResult invest_like(const Dataset& ds, const IndexView& ix,
                                  double g, int max_iter, bool pooled) {
  BaselineResult r;
  r.method = pooled ? "pooled_investment" : "investment";

  const int K = ds.source_count();
  const size_t A = ix.assertions.size();
  std::vector<double> trust(K, 1.0);
  std::vector<double> H(A), B(A);

  for (int it = 1; it <= max_iter; ++it) {
    r.iterations = it;
    // each source spreads its trust evenly over its claims
    std::vector<double> share(K);
    for (SourceId k = 0; k < K; ++k) {
      const size_t cnt = ds.sources[k].assertions.size();
      share[k] = cnt > 0 ? trust[k] / static_cast<double>(cnt) : 0.0;
    }
    for (size_t a = 0; a < A; ++a) {
      double h = 0.0;
      for (SourceId k : ix.assertion_sources[a]) h += share[k];
      H[a] = h;
    }
    if (pooled) {
      for (TripleId m = 0; m < ds.triple_count(); ++m) {
        for (int type = 0; type < ds.type_count(); ++type) {
          double total_h = 0.0, total_g = 0.0;
          for (int a : ix.claims_of_triple[m]) {
            if (ds.condition_type_of[ix.assertions[a].second] != type) continue;
            total_h += H[a];
            total_g += std::pow(H[a], g);
          }
          if (total_g <= 0.0) continue;
          for (int a : ix.claims_of_triple[m]) {
            if (ds.condition_type_of[ix.assertions[a].second] != type) continue;
            B[a] = total_h * std::pow(H[a], g) / total_g;
          }
        }
      }
    } else {
      for (size_t a = 0; a < A; ++a) B[a] = std::pow(H[a], g);
    }
    // credit flows back proportional to each source's stake in the claim
    std::vector<double> next(K, 0.0);
    for (size_t a = 0; a < A; ++a) {
      if (H[a] <= 0.0) continue;
      const double payout = B[a] / H[a];
      for (SourceId k : ix.assertion_sources[a]) next[k] += payout * share[k];
    }
    const double peak = *std::max_element(next.begin(), next.end());
    if (peak > 0.0)
      for (double& t : next) t /= peak;
    double delta = 0.0;
    for (SourceId k = 0; k < K; ++k)
      delta = std::max(delta, std::abs(next[k] - trust[k]));
    trust = next;
    if (delta < 1e-12) break;  // numeric fixed point, nothing more to do
  }

  r.claim_scores = B;
  detail::select_from_scores(r, ds, ix);
  r.source_scores = trust;
  return r;
}

}  // namespace detail

/// Sources invest trust evenly across their claims; claim credibility grows
/// as H^g and pays back proportionally to each investor's stake. Trust is
/// renormalized to a maximum of 1 every round.
inline BaselineResult investment(const Dataset& ds, const IndexView& ix,
                                 double g = 1.2, int max_iter = 50) {
  return detail::invest_like(ds, ix, g, max_iter, false);
}

/// Investment with per-(triple, type) pooling: the group's total credit is
/// redistributed by H^g shares, so mutually exclusive claims compete for a
/// fixed pot instead of growing independently.
inline BaselineResult pooled_investment(const Dataset& ds, const IndexView& ix,
                                        double g = 1.4, int max_iter = 50) {
  return detail::invest_like(ds, ix, g, max_iter, true);
}

/// Weighted voting with weights w_k = -log of the source's share of the total
/// 0-1 loss against the current truths (epsilon-smoothed). Stops when the
/// truth assignment is stable.
inline BaselineResult crh(const Dataset& ds, const IndexView& ix,
                          int max_iter = 50, double eps = 1e-8) {
  BaselineResult r;
  r.method = "crh";

  const int K = ds.source_count();
  std::vector<double> w(K, 1.0);
  std::vector<double> votes(ix.assertions.size(), 0.0);
  std::vector<std::vector<ConditionId>> prev;

  for (int it = 1; it <= max_iter; ++it) {
    r.iterations = it;
    for (size_t a = 0; a < ix.assertions.size(); ++a) {
      double v = 0.0;
      for (SourceId k : ix.assertion_sources[a]) v += w[k];
      votes[a] = v;
    }
    r.claim_scores = votes;
    detail::select_from_scores(r, ds, ix);

    double total = 0.0;
    std::vector<double> loss(K, eps);
    for (SourceId k = 0; k < K; ++k) {
      for (const auto& [m, n] : ds.sources[k].assertions)
        if (r.selected[m][ds.condition_type_of[n]] != n) loss[k] += 1.0;
      total += loss[k];
    }
    for (SourceId k = 0; k < K; ++k) w[k] = -std::log(loss[k] / total);

    if (!prev.empty() && prev == r.selected) break;
    prev = r.selected;
  }

  r.source_scores = w;
  return r;
}

/// All conditions of a type ranked for one triple by a baseline's claim
/// scores, highest first (unasserted conditions score the method's default;
/// ties: lowest id).
inline std::vector<ConditionId> baseline_rank_conditions(
    const BaselineResult& r, const Dataset& ds, const IndexView& ix,
    TripleId m, int type) {
  std::vector<std::pair<double, ConditionId>> scored;
  for (ConditionId n : ds.conditions_of_type[type]) {
    double score = r.default_claim_score;
    const int a = ix.assertion_index(m, n);
    if (a >= 0) score = r.claim_scores[a];
    scored.emplace_back(-score, n);  // negate: sort ascending = score descending
  }
  std::sort(scored.begin(), scored.end());
  std::vector<ConditionId> out;
  out.reserve(scored.size());
  for (const auto& [neg, n] : scored) out.push_back(n);
  return out;
}

inline std::vector<BaselineResult> run_all_baselines(const Dataset& ds,
                                                     const IndexView& ix) {
  return {majority_vote(ds, ix), truthfinder(ds, ix), investment(ds, ix),
          pooled_investment(ds, ix), crh(ds, ix)};
}

}  // namespace kgtruth
