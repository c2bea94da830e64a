#pragma once

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cctype>
#include <istream>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "kgtruth/common.hpp"

namespace kgtruth {

// Dense ids. Triples, conditions, sources and cases are interned in first
// appearance order, so ids are stable for a given input stream.
using TripleId = int;
using ConditionId = int;
using SourceId = int;
using CaseId = int;

/// A knowledge triple as raw strings (pre-interning).
struct TripleRecord {
  std::string head;
  std::string relation;
  std::string tail;

  bool operator==(const TripleRecord& o) const {
    return head == o.head && relation == o.relation && tail == o.tail;
  }
};

/// A condition as raw strings (pre-interning).
struct ConditionRecord {
  std::string type;
  std::string value;

  bool operator==(const ConditionRecord& o) const {
    return type == o.type && value == o.value;
  }
};

/// One case as it appears in an input stream: a bag of co-occurring triples
/// plus the conditions they were asserted under.
struct CaseRecord {
  std::string source_id;
  bool is_reference = false;
  std::vector<TripleRecord> triples;
  std::vector<ConditionRecord> conditions;
  int line = 0;  // 1-based input line, 0 when not file-backed
};

/// Interned case: every (triple, condition) pair is one assertion occurrence.
struct Case {
  CaseId id = -1;
  SourceId source = -1;
  std::vector<TripleId> triples;
  std::vector<ConditionId> conditions;
};

struct Source {
  SourceId id = -1;
  std::string name;
  bool is_reference = false;
  std::vector<CaseId> cases;
  // distinct asserted (triple, condition) pairs, sorted
  std::vector<std::pair<TripleId, ConditionId>> assertions;
};

struct Dataset {
  std::vector<Source> sources;
  std::vector<Case> cases;

  std::vector<TripleRecord> triples;        // TripleId -> strings
  std::vector<ConditionRecord> conditions;  // ConditionId -> (type, value)
  std::vector<std::string> condition_types;
  std::vector<int> condition_type_of;  // ConditionId -> type index
  std::vector<std::vector<ConditionId>> conditions_of_type;

  std::vector<std::string> entities;  // entity id -> surface string
  std::vector<std::pair<int, int>> triple_entities;  // TripleId -> (head, tail)

  // union of assertions over reference sources, sorted
  std::vector<std::pair<TripleId, ConditionId>> reference_assertions;

  int triple_count() const { return static_cast<int>(triples.size()); }
  int condition_count() const { return static_cast<int>(conditions.size()); }
  int source_count() const { return static_cast<int>(sources.size()); }
  int type_count() const { return static_cast<int>(condition_types.size()); }

  bool has_reference() const {
    for (const auto& s : sources)
      if (s.is_reference) return true;
    return false;
  }
};

struct IngestOptions {
  bool allow_no_reference = false;  // engine runs unsupervised in that case
  bool bucket_ages = true;
};

namespace detail {

inline bool iequals(const std::string& a, const char* b) {
  size_t i = 0;
  for (; i < a.size() && b[i] != '\0'; ++i)
    if (std::tolower(static_cast<unsigned char>(a[i])) != b[i]) return false;
  return i == a.size() && b[i] == '\0';
}

// "37" -> "30", clamped to [0, 90]; non-numeric values pass through unchanged
inline std::string bucket_age_value(const std::string& raw) {
  size_t pos = 0;
  long v = 0;
  try {
    v = std::stol(raw, &pos);
  } catch (const std::exception&) {
    return raw;
  }
  while (pos < raw.size() &&
         std::isspace(static_cast<unsigned char>(raw[pos])))
    ++pos;
  if (pos != raw.size()) return raw;  // trailing junk: treat as categorical
  v = std::clamp(v, 0L, 90L);
  return std::to_string((v / 10) * 10);
}

inline std::string where(const CaseRecord& rec, size_t index) {
  std::string loc = "case " + std::to_string(index + 1);
  if (rec.line > 0) loc += " (line " + std::to_string(rec.line) + ")";
  if (!rec.source_id.empty()) loc += " from source '" + rec.source_id + "'";
  return loc;
}

}  // namespace detail

/// Intern a stream of case records into a Dataset. Enforces the structural
/// rules: consistent reference flags per source, no duplicate condition types
/// with conflicting values inside a case, and at least one assertion overall.
/// Sources that end up with no (triple, condition) assertions are dropped
/// together with their cases.
inline Dataset ingest_cases(const std::vector<CaseRecord>& records,
                            const IngestOptions& opts = {}) {
  if (records.empty()) throw ParseError("no cases in input");

  // Pass 1: validate records, normalize conditions, settle reference flags.
  struct Cleaned {
    std::vector<TripleRecord> triples;
    std::vector<ConditionRecord> conditions;
  };
  std::vector<Cleaned> cleaned(records.size());
  std::unordered_map<std::string, bool> ref_flag;

  for (size_t i = 0; i < records.size(); ++i) {
    const CaseRecord& rec = records[i];
    if (rec.source_id.empty())
      throw ParseError(detail::where(rec, i) + ": empty source id");
    if (rec.triples.empty())
      throw ParseError(detail::where(rec, i) + ": empty triple list");

    auto [it, inserted] = ref_flag.emplace(rec.source_id, rec.is_reference);
    if (!inserted && it->second != rec.is_reference)
      throw ParseError("source '" + rec.source_id +
                       "' has conflicting reference flags");

    Cleaned& out = cleaned[i];
    for (const TripleRecord& t : rec.triples) {
      if (t.head.empty() || t.relation.empty() || t.tail.empty())
        throw ParseError(detail::where(rec, i) +
                         ": triple with empty head, relation or tail");
      if (std::find(out.triples.begin(), out.triples.end(), t) ==
          out.triples.end())
        out.triples.push_back(t);
    }
    for (const ConditionRecord& c : rec.conditions) {
      if (c.type.empty())
        throw ParseError(detail::where(rec, i) + ": condition with empty type");
      ConditionRecord norm = c;
      if (opts.bucket_ages && detail::iequals(c.type, "age"))
        norm.value = detail::bucket_age_value(c.value);
      bool dup = false;
      for (const ConditionRecord& prev : out.conditions) {
        if (prev.type == norm.type) {
          if (prev.value == norm.value) {
            dup = true;
            break;
          }
          throw ParseError(detail::where(rec, i) +
                           ": conflicting values for condition type '" +
                           norm.type + "'");
        }
      }
      if (!dup) out.conditions.push_back(std::move(norm));
    }
  }

  // Pass 2: a case yields assertions only if it has both triples and
  // conditions; keep only sources with at least one such case.
  std::unordered_map<std::string, bool> source_has_assertions;
  for (size_t i = 0; i < records.size(); ++i)
    if (!cleaned[i].conditions.empty())
      source_has_assertions[records[i].source_id] = true;
  if (source_has_assertions.empty())
    throw ParseError("no assertions: every case lacks conditions");

  // Pass 3: intern over retained records, ids in first-appearance order.
  Dataset ds;
  std::unordered_map<std::string, SourceId> source_ids;
  std::unordered_map<std::string, TripleId> triple_ids;
  std::unordered_map<std::string, ConditionId> condition_ids;
  std::unordered_map<std::string, int> type_ids;
  std::unordered_map<std::string, int> entity_ids;

  auto intern_entity = [&](const std::string& name) {
    auto [it, inserted] = entity_ids.emplace(name, ds.entities.size());
    if (inserted) ds.entities.push_back(name);
    return it->second;
  };

  for (size_t i = 0; i < records.size(); ++i) {
    const CaseRecord& rec = records[i];
    auto has = source_has_assertions.find(rec.source_id);
    if (has == source_has_assertions.end()) continue;  // source dropped

    auto [sit, new_source] = source_ids.emplace(rec.source_id, ds.sources.size());
    if (new_source) {
      Source s;
      s.id = sit->second;
      s.name = rec.source_id;
      s.is_reference = ref_flag.at(rec.source_id);
      ds.sources.push_back(std::move(s));
    }
    Source& src = ds.sources[sit->second];

    Case cs;
    cs.id = static_cast<CaseId>(ds.cases.size());
    cs.source = src.id;
    for (const TripleRecord& t : cleaned[i].triples) {
      const std::string key = t.head + '\x1f' + t.relation + '\x1f' + t.tail;
      auto [tit, new_triple] = triple_ids.emplace(key, ds.triples.size());
      if (new_triple) {
        ds.triples.push_back(t);
        const int head_id = intern_entity(t.head);  // head first, deterministically
        const int tail_id = intern_entity(t.tail);
        ds.triple_entities.emplace_back(head_id, tail_id);
      }
      cs.triples.push_back(tit->second);
    }
    for (const ConditionRecord& c : cleaned[i].conditions) {
      const std::string key = c.type + '\x1f' + c.value;
      auto [cit, new_cond] = condition_ids.emplace(key, ds.conditions.size());
      if (new_cond) {
        auto [yit, new_type] = type_ids.emplace(c.type, ds.condition_types.size());
        if (new_type) ds.condition_types.push_back(c.type);
        ds.conditions.push_back(c);
        ds.condition_type_of.push_back(yit->second);
      }
      cs.conditions.push_back(cit->second);
    }
    src.cases.push_back(cs.id);
    for (TripleId m : cs.triples)
      for (ConditionId n : cs.conditions) src.assertions.emplace_back(m, n);
    ds.cases.push_back(std::move(cs));
  }

  for (Source& s : ds.sources) {
    std::sort(s.assertions.begin(), s.assertions.end());
    s.assertions.erase(std::unique(s.assertions.begin(), s.assertions.end()),
                       s.assertions.end());
    if (s.is_reference)
      ds.reference_assertions.insert(ds.reference_assertions.end(),
                                     s.assertions.begin(), s.assertions.end());
  }
  std::sort(ds.reference_assertions.begin(), ds.reference_assertions.end());
  ds.reference_assertions.erase(std::unique(ds.reference_assertions.begin(),
                                            ds.reference_assertions.end()),
                                ds.reference_assertions.end());

  ds.conditions_of_type.assign(ds.condition_types.size(), {});
  for (ConditionId n = 0; n < ds.condition_count(); ++n)
    ds.conditions_of_type[ds.condition_type_of[n]].push_back(n);

  if (!opts.allow_no_reference && !ds.has_reference())
    throw ParseError(
        "no reference source in input (pass allow_no_reference to run "
        "unsupervised)");
  return ds;
}

/// Parse one case per line from a JSON-lines stream. Field names:
/// source_id, is_reference, triples[{head,relation,tail}],
/// conditions[{type,value}].
inline std::vector<CaseRecord> parse_case_records(std::istream& in) {
  std::vector<CaseRecord> records;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    size_t start = line.find_first_not_of(" \t\r");
    if (start == std::string::npos) continue;  // blank line
    try {
      const nlohmann::json j = nlohmann::json::parse(line);
      CaseRecord rec;
      rec.line = line_no;
      rec.source_id = j.at("source_id").get<std::string>();
      rec.is_reference = j.value("is_reference", false);
      for (const auto& t : j.at("triples")) {
        rec.triples.push_back({t.at("head").get<std::string>(),
                               t.at("relation").get<std::string>(),
                               t.at("tail").get<std::string>()});
      }
      if (j.contains("conditions")) {
        for (const auto& c : j.at("conditions")) {
          std::string value;
          const auto& v = c.at("value");
          if (v.is_string())
            value = v.get<std::string>();
          else if (v.is_number_integer())
            value = std::to_string(v.get<long long>());
          else if (v.is_number_float())
            value = format_full(v.get<double>());
          else
            throw ParseError("condition value must be a string or number");
          rec.conditions.push_back({c.at("type").get<std::string>(), value});
        }
      }
      records.push_back(std::move(rec));
    } catch (const ParseError& e) {
      throw ParseError("line " + std::to_string(line_no) + ": " + e.what());
    } catch (const nlohmann::json::exception& e) {
      throw ParseError("line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return records;
}

inline Dataset ingest_cases(std::istream& in, const IngestOptions& opts = {}) {
  return ingest_cases(parse_case_records(in), opts);
}

}  // namespace kgtruth
