#pragma once

#include <algorithm>
#include <cmath>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "kgtruth/common.hpp"
#include "kgtruth/dataset.hpp"
#include "kgtruth/engine.hpp"
#include "kgtruth/synthbench.hpp"

namespace kgtruth {

namespace detail {

// keep TSV cells single-line
inline std::string sanitize_cell(std::string s) {
  for (char& c : s)
    if (c == '\t' || c == '\n' || c == '\r') c = ' ';
  return s;
}

inline std::string format_value(double v) {
  if (v == std::floor(v) && std::abs(v) < 1e15) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.0f", v);
    return buf;
  }
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%g", v);
  return buf;
}

}  // namespace detail

inline void write_conditional_kg(std::ostream& out, const Dataset& ds,
                                 const ConditionalKG& kg) {
  out << "triple_head\trelation\ttriple_tail\tcondition_type\tcondition_value"
         "\tconfidence\n";
  for (const KgEntry& e : kg.entries) {
    const TripleRecord& t = ds.triples[e.triple];
    const ConditionRecord& c = ds.conditions[e.condition];
    out << detail::sanitize_cell(t.head) << '\t'
        << detail::sanitize_cell(t.relation) << '\t'
        << detail::sanitize_cell(t.tail) << '\t'
        << detail::sanitize_cell(c.type) << '\t'
        << detail::sanitize_cell(c.value) << '\t'
        << format_fixed(e.confidence, 6) << '\n';
  }
}

inline void write_source_weights(std::ostream& out, const Dataset& ds,
                                 const Eigen::VectorXd& omega) {
  out << "source_id\tweight\n";
  for (SourceId k = 0; k < ds.source_count(); ++k)
    out << detail::sanitize_cell(ds.sources[k].name) << '\t'
        << format_fixed(omega(k), 6) << '\n';
}

inline void write_sweep_rows(std::ostream& out,
                             const std::vector<SweepRow>& rows) {
  out << "sweep_param\tvalue\tmethod\tseed\tmetric\tscore\n";
  for (const SweepRow& r : rows)
    out << r.sweep_param << '\t' << detail::format_value(r.value) << '\t'
        << r.method << '\t' << r.seed << '\t' << r.metric << '\t'
        << format_fixed(r.score, 6) << '\n';
}

/// Seed-averaged view of a sweep, grouped in first-appearance order.
inline void write_sweep_summary(std::ostream& out,
                                const std::vector<SweepRow>& rows) {
  struct Key {
    std::string param, method, metric;
    double value;
  };
  std::vector<Key> order;
  std::map<std::string, std::pair<double, int>> agg;
  auto key_of = [](const SweepRow& r) {
    return r.sweep_param + '\t' + detail::format_value(r.value) + '\t' +
           r.method + '\t' + r.metric;
  };
  for (const SweepRow& r : rows) {
    auto [it, inserted] = agg.emplace(key_of(r), std::make_pair(0.0, 0));
    if (inserted) order.push_back({r.sweep_param, r.method, r.metric, r.value});
    it->second.first += r.score;
    it->second.second += 1;
  }
  out << "sweep_param\tvalue\tmethod\tmetric\tmean_score\tseeds\n";
  for (const Key& k : order) {
    const auto& [sum, cnt] =
        agg.at(k.param + '\t' + detail::format_value(k.value) + '\t' + k.method +
               '\t' + k.metric);
    out << k.param << '\t' << detail::format_value(k.value) << '\t' << k.method
        << '\t' << k.metric << '\t' << format_fixed(sum / cnt, 6) << '\t' << cnt
        << '\n';
  }
}

inline void write_manifest(
    std::ostream& out,
    const std::vector<std::pair<std::string, std::string>>& entries) {
  for (const auto& [k, v] : entries) out << k << " = " << v << '\n';
}

/// Token-vector text format, one "token v1 ... vd" line per row.
inline void write_token_vectors(std::ostream& out,
                                const std::vector<std::string>& tokens,
                                const RowMatrixXd& vectors) {
  for (int i = 0; i < vectors.rows(); ++i) {
    out << detail::sanitize_cell(tokens[i]);
    for (int j = 0; j < vectors.cols(); ++j)
      out << ' ' << format_full(vectors(i, j));
    out << '\n';
  }
}

inline void write_toy_coordinates(std::ostream& out, const ToyResult& res) {
  out << "embeddings\tkind\tlabel\tpc1\tpc2\n";
  auto dump = [&](const char* mode, const SolverState& st) {
    const Dataset& ds = res.toy.data;
    const int M = ds.triple_count();
    const int N = ds.condition_count();
    RowMatrixXd all(M + N, st.v.cols());
    all.topRows(M) = st.v;
    all.bottomRows(N) = st.u;
    const RowMatrixXd proj = pca_project_rows(all);
    for (int m = 0; m < M; ++m)
      out << mode << "\ttruth\t" << ds.triples[m].head << '\t'
          << format_fixed(proj(m, 0), 6) << '\t' << format_fixed(proj(m, 1), 6)
          << '\n';
    for (int n = 0; n < N; ++n)
      out << mode << "\tcondition\t" << ds.conditions[n].value << '\t'
          << format_fixed(proj(M + n, 0), 6) << '\t'
          << format_fixed(proj(M + n, 1), 6) << '\n';
  };
  dump("one_hot", res.state_one_hot);
  dump("planted", res.state_planted);
}

/// Minimal "key = value" config format: blank lines and #-comments skipped,
/// [section] headers tolerated and ignored, later keys override earlier ones.
class KvConfig {
 public:
  static KvConfig parse(std::istream& in) {
    KvConfig cfg;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      std::string s = trim(line);
      if (s.empty() || s[0] == '#') continue;
      if (s.front() == '[' && s.back() == ']') continue;
      const size_t eq = s.find('=');
      if (eq == std::string::npos)
        throw ParseError("config line " + std::to_string(line_no) +
                         ": expected key = value");
      const std::string key = trim(s.substr(0, eq));
      const std::string value = trim(s.substr(eq + 1));
      if (key.empty())
        throw ParseError("config line " + std::to_string(line_no) +
                         ": empty key");
      cfg.values_[key] = value;
      cfg.order_.push_back(key);
    }
    return cfg;
  }

  bool has(const std::string& key) const { return values_.count(key) > 0; }

  std::string get(const std::string& key) const {
    auto it = values_.find(key);
    if (it == values_.end()) throw ParseError("config: missing key '" + key + "'");
    return it->second;
  }

  std::string get(const std::string& key, const std::string& fallback) const {
    auto it = values_.find(key);
    return it == values_.end() ? fallback : it->second;
  }

  double get_double(const std::string& key, double fallback) const {
    if (!has(key)) return fallback;
    return to_double(key, get(key));
  }

  int get_int(const std::string& key, int fallback) const {
    if (!has(key)) return fallback;
    const double v = to_double(key, get(key));
    if (v != std::floor(v))
      throw ParseError("config: key '" + key + "' must be an integer");
    return static_cast<int>(v);
  }

  bool get_bool(const std::string& key, bool fallback) const {
    if (!has(key)) return fallback;
    const std::string v = get(key);
    if (v == "true" || v == "yes" || v == "1") return true;
    if (v == "false" || v == "no" || v == "0") return false;
    throw ParseError("config: key '" + key + "' must be a boolean");
  }

  /// "1,2,3", "1:15" (integer range) or "0:1:0.25" (range with step).
  std::vector<double> get_values(const std::string& key) const {
    const std::string raw = get(key);
    std::vector<double> out;
    if (raw.find(':') != std::string::npos) {
      std::vector<std::string> parts = split(raw, ':');
      if (parts.size() < 2 || parts.size() > 3)
        throw ParseError("config: key '" + key + "' has a malformed range");
      const double lo = to_double(key, parts[0]);
      const double hi = to_double(key, parts[1]);
      const double step = parts.size() == 3 ? to_double(key, parts[2]) : 1.0;
      if (step <= 0.0 || hi < lo)
        throw ParseError("config: key '" + key + "' has a malformed range");
      for (double v = lo; v <= hi + 1e-9; v += step) out.push_back(v);
      return out;
    }
    for (const std::string& p : split(raw, ','))
      out.push_back(to_double(key, trim(p)));
    if (out.empty()) throw ParseError("config: key '" + key + "' is empty");
    return out;
  }

  /// Keys that appeared but are not in the accepted set (typo guard).
  std::vector<std::string> unknown_keys(
      const std::vector<std::string>& known) const {
    std::vector<std::string> out;
    for (const auto& [k, v] : values_)
      if (std::find(known.begin(), known.end(), k) == known.end())
        out.push_back(k);
    return out;
  }

 private:
  static std::string trim(const std::string& s) {
    size_t b = s.find_first_not_of(" \t\r");
    size_t e = s.find_last_not_of(" \t\r");
    return b == std::string::npos ? "" : s.substr(b, e - b + 1);
  }

  static std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : s) {
      if (c == sep) {
        out.push_back(cur);
        cur.clear();
      } else {
        cur += c;
      }
    }
    out.push_back(cur);
    return out;
  }

  static double to_double(const std::string& key, const std::string& v) {
    try {
      size_t pos = 0;
      const double d = std::stod(v, &pos);
      if (pos != v.size())
        throw ParseError("config: key '" + key + "' is not numeric");
      return d;
    } catch (const std::exception&) {
      throw ParseError("config: key '" + key + "' is not numeric");
    }
  }

  std::map<std::string, std::string> values_;
  std::vector<std::string> order_;
};

/// Parse a sweep description file into runnable settings.
inline SweepSettings parse_sweep_settings(std::istream& in) {
  const KvConfig cfg = KvConfig::parse(in);
  static const std::vector<std::string> known = {
      "family", "sweep", "values", "seeds", "seed", "jobs",
      "n_objects", "n_claims", "n_sources", "n_reference",
      "ref_noise", "nonref_noise", "assertions_per_source",
      "objects_per_case", "exact_noise", "related_claims", "ranking_dim",
      "ranking_perturbation", "lambda", "mu", "epsilon", "tol", "max_iter",
      "use_references"};
  const auto unknown = cfg.unknown_keys(known);
  if (!unknown.empty())
    throw ParseError("sweep config: unknown key '" + unknown.front() + "'");

  SweepSettings s;
  const std::string family = cfg.get("family", "single_truth");
  if (family == "single_truth")
    s.family = SweepFamily::single_truth;
  else if (family == "ranking")
    s.family = SweepFamily::ranking;
  else if (family == "reliability")
    s.family = SweepFamily::reliability;
  else if (family == "toy")
    s.family = SweepFamily::toy;
  else
    throw ParseError("sweep config: unknown family '" + family + "'");

  s.sweep_param = cfg.get("sweep", "none");
  if (cfg.has("values")) s.values = cfg.get_values("values");
  s.seeds = cfg.get_int("seeds", s.seeds);
  s.jobs = cfg.get_int("jobs", s.jobs);

  ScenarioSpec& sc = s.scenario;
  sc.seed = static_cast<std::uint64_t>(cfg.get_int("seed", 1));
  sc.n_objects = cfg.get_int("n_objects", sc.n_objects);
  sc.n_claims = cfg.get_int("n_claims", sc.n_claims);
  sc.n_sources = cfg.get_int("n_sources", sc.n_sources);
  sc.n_reference = cfg.get_int("n_reference", sc.n_reference);
  sc.ref_noise = cfg.get_double("ref_noise", sc.ref_noise);
  sc.nonref_noise = cfg.get_double("nonref_noise", sc.nonref_noise);
  sc.assertions_per_source =
      cfg.get_int("assertions_per_source", sc.assertions_per_source);
  sc.objects_per_case = cfg.get_int("objects_per_case", sc.objects_per_case);
  sc.exact_noise_fraction = cfg.get_bool("exact_noise", sc.exact_noise_fraction);
  sc.related_claims = cfg.get_int("related_claims", sc.related_claims);
  sc.ranking_dim = cfg.get_int("ranking_dim", sc.ranking_dim);
  sc.ranking_perturbation =
      cfg.get_double("ranking_perturbation", sc.ranking_perturbation);

  HyperParams& hp = s.hp;
  hp.lambda = cfg.get_double("lambda", hp.lambda);
  hp.mu = cfg.get_double("mu", hp.mu);
  hp.epsilon = cfg.get_double("epsilon", hp.epsilon);
  hp.tol = cfg.get_double("tol", hp.tol);
  hp.max_iter = cfg.get_int("max_iter", hp.max_iter);
  hp.use_references = cfg.get_bool("use_references", hp.use_references);
  return s;
}

}  // namespace kgtruth
