#pragma once

#include <algorithm>
#include <utility>
#include <vector>

#include "kgtruth/dataset.hpp"

namespace kgtruth {

/// One (triple, condition) assertion occurrence. The same pair may occur in
/// several cases of one source; sums in the solver run over occurrences while
/// per-source sizes count distinct pairs.
struct AssertionOccurrence {
  SourceId source;
  CaseId case_id;
  int slot;  // position of the triple within its case
  TripleId triple;
  ConditionId condition;
  int context;  // dense id of the (case, slot) attention context
  bool in_reference;  // pair also asserted by some reference source
};

/// Precomputed navigation structures over a Dataset. Read-only; safe to share
/// across solver runs with different hyperparameters.
struct IndexView {
  std::vector<AssertionOccurrence> occurrences;  // grouped by source
  std::vector<std::pair<int, int>> source_occ_range;  // [begin, end) per source

  std::vector<std::vector<int>> occ_of_triple;     // occurrence indices
  std::vector<std::vector<int>> occ_of_condition;  // occurrence indices

  std::vector<int> f_size;      // |F_k| distinct assertions per source
  std::vector<int> delta_size;  // |F_k ∩ F_ref| per source

  // Distinct (triple, condition) pairs across all sources, sorted, with the
  // sources supporting each; the view the voting-style methods consume.
  std::vector<std::pair<TripleId, ConditionId>> assertions;
  std::vector<std::vector<SourceId>> assertion_sources;
  std::vector<std::vector<int>> claims_of_triple;  // indices into assertions

  std::vector<std::vector<SourceId>> sources_of_triple;  // sorted, distinct

  std::vector<int> case_context_offset;  // CaseId -> first context id
  int context_count = 0;

  bool references_used = true;

  int assertion_index(TripleId m, ConditionId n) const {
    auto it = std::lower_bound(assertions.begin(), assertions.end(),
                               std::make_pair(m, n));
    if (it == assertions.end() || *it != std::make_pair(m, n)) return -1;
    return static_cast<int>(it - assertions.begin());
  }

  /// Conditions source k asserted for triple m (distinct, ascending).
  std::vector<ConditionId> conditions_of(TripleId m, SourceId k) const {
    std::vector<ConditionId> out;
    for (int oi : occ_of_triple[m]) {
      const auto& o = occurrences[oi];
      if (o.source == k) out.push_back(o.condition);
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
  }

  /// Triples source k asserted under condition n (distinct, ascending).
  std::vector<TripleId> triples_of(ConditionId n, SourceId k) const {
    std::vector<TripleId> out;
    for (int oi : occ_of_condition[n]) {
      const auto& o = occurrences[oi];
      if (o.source == k) out.push_back(o.triple);
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
  }
};

/// Build the occurrence index. With use_references = false the reference
/// partition is ignored entirely: every occurrence is treated as unlabeled,
/// which turns the solver into its unsupervised variant.
inline IndexView build_index(const Dataset& ds, bool use_references = true) {
  IndexView ix;
  ix.references_used = use_references;

  const int M = ds.triple_count();
  const int N = ds.condition_count();
  const int K = ds.source_count();

  ix.case_context_offset.resize(ds.cases.size() + 1);
  int ctx = 0;
  for (size_t c = 0; c < ds.cases.size(); ++c) {
    ix.case_context_offset[c] = ctx;
    ctx += static_cast<int>(ds.cases[c].triples.size());
  }
  ix.case_context_offset[ds.cases.size()] = ctx;
  ix.context_count = ctx;

  const auto& fref = ds.reference_assertions;
  auto in_ref = [&](TripleId m, ConditionId n) {
    if (!use_references) return false;
    return std::binary_search(fref.begin(), fref.end(), std::make_pair(m, n));
  };

  ix.occ_of_triple.resize(M);
  ix.occ_of_condition.resize(N);
  ix.f_size.resize(K);
  ix.delta_size.resize(K);
  ix.source_occ_range.resize(K);

  for (SourceId k = 0; k < K; ++k) {
    const Source& src = ds.sources[k];
    const int begin = static_cast<int>(ix.occurrences.size());
    for (CaseId c : src.cases) {
      const Case& cs = ds.cases[c];
      for (int s = 0; s < static_cast<int>(cs.triples.size()); ++s) {
        const TripleId m = cs.triples[s];
        for (ConditionId n : cs.conditions) {
          AssertionOccurrence o;
          o.source = k;
          o.case_id = c;
          o.slot = s;
          o.triple = m;
          o.condition = n;
          o.context = ix.case_context_offset[c] + s;
          o.in_reference = in_ref(m, n);
          const int oi = static_cast<int>(ix.occurrences.size());
          ix.occ_of_triple[m].push_back(oi);
          ix.occ_of_condition[n].push_back(oi);
          ix.occurrences.push_back(o);
        }
      }
    }
    ix.source_occ_range[k] = {begin, static_cast<int>(ix.occurrences.size())};

    ix.f_size[k] = static_cast<int>(src.assertions.size());
    int dk = 0;
    if (use_references) {
      for (const auto& a : src.assertions)
        if (std::binary_search(fref.begin(), fref.end(), a)) ++dk;
    }
    ix.delta_size[k] = dk;
  }

  // distinct assertion table with supporters
  std::vector<std::pair<std::pair<TripleId, ConditionId>, SourceId>> flat;
  for (SourceId k = 0; k < K; ++k)
    for (const auto& a : ds.sources[k].assertions) flat.emplace_back(a, k);
  std::sort(flat.begin(), flat.end());
  for (const auto& [pair, k] : flat) {
    if (ix.assertions.empty() || ix.assertions.back() != pair) {
      ix.assertions.push_back(pair);
      ix.assertion_sources.emplace_back();
    }
    ix.assertion_sources.back().push_back(k);
  }

  ix.claims_of_triple.resize(M);
  ix.sources_of_triple.resize(M);
  for (size_t a = 0; a < ix.assertions.size(); ++a) {
    const TripleId m = ix.assertions[a].first;
    ix.claims_of_triple[m].push_back(static_cast<int>(a));
    for (SourceId k : ix.assertion_sources[a]) ix.sources_of_triple[m].push_back(k);
  }
  for (auto& ks : ix.sources_of_triple) {
    std::sort(ks.begin(), ks.end());
    ks.erase(std::unique(ks.begin(), ks.end()), ks.end());
  }

  return ix;
}

}  // namespace kgtruth
