#pragma once

#include <algorithm>
#include <cmath>
#include <istream>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include "kgtruth/common.hpp"
#include "kgtruth/dataset.hpp"

namespace kgtruth {

enum class EmbeddingMode { composed, one_hot, external };

/// Token-to-vector table (entity embeddings, or any loaded vector file).
struct EntityTable {
  std::vector<std::string> tokens;
  std::unordered_map<std::string, int> index;
  RowMatrixXd vectors;  // tokens.size() x dim

  int dim() const { return static_cast<int>(vectors.cols()); }
  int find(const std::string& token) const {
    auto it = index.find(token);
    return it == index.end() ? -1 : it->second;
  }
};

struct CbowConfig {
  int dimension = 32;
  int negative_samples = 5;
  int epochs = 15;
  double learning_rate = 0.025;
  std::uint64_t seed = 1;

  void validate() const {
    if (dimension <= 0) throw std::invalid_argument("cbow: dimension must be positive");
    if (negative_samples <= 0)
      throw std::invalid_argument("cbow: negative_samples must be positive");
    if (epochs <= 0) throw std::invalid_argument("cbow: epochs must be positive");
    if (!(learning_rate > 0.0))
      throw std::invalid_argument("cbow: learning_rate must be positive");
  }
};

struct CbowResult {
  RowMatrixXd vectors;
  // false when no sentence had two or more tokens; vectors are then the
  // seeded random init and the caller should surface a warning
  bool trained = false;
};

/// CBOW with negative sampling over short unordered sentences. The whole
/// sentence is the context window: each token is predicted from the average
/// of the other tokens' input vectors. Follows word2vec conventions
/// (input vectors uniform in (-0.5/d, 0.5/d), output vectors zero, unigram^0.75
/// negative table, linear learning-rate decay floored at 1e-4 of the base).
inline CbowResult train_cbow(const std::vector<std::vector<int>>& sentences,
                             int vocab, const CbowConfig& cfg) {
  cfg.validate();
  if (vocab <= 0) throw std::invalid_argument("cbow: empty vocabulary");
  const int d = cfg.dimension;

  Rng rng(derive_seed(cfg.seed, 0xCB0Du));
  CbowResult res;
  res.vectors.resize(vocab, d);
  for (int i = 0; i < vocab; ++i)
    for (int j = 0; j < d; ++j)
      res.vectors(i, j) = (rng.uniform() - 0.5) / d;

  std::vector<double> counts(vocab, 0.0);
  long long trainable_tokens = 0;
  for (const auto& s : sentences) {
    for (int w : s) {
      if (w < 0 || w >= vocab)
        throw std::invalid_argument("cbow: token id out of range");
      counts[w] += 1.0;
    }
    if (s.size() >= 2) trainable_tokens += static_cast<long long>(s.size());
  }
  if (trainable_tokens == 0) return res;  // all singletons: keep random init

  std::vector<double> cum(vocab);
  double total = 0.0;
  for (int w = 0; w < vocab; ++w) {
    total += std::pow(counts[w], 0.75);
    cum[w] = total;
  }
  auto sample_negative = [&]() {
    const double r = rng.uniform() * total;
    return static_cast<int>(
        std::lower_bound(cum.begin(), cum.end(), r) - cum.begin());
  };

  RowMatrixXd out = RowMatrixXd::Zero(vocab, d);
  Eigen::VectorXd h(d), e(d);
  const double total_steps =
      static_cast<double>(cfg.epochs) * static_cast<double>(trainable_tokens);
  long long processed = 0;

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    for (const auto& s : sentences) {
      const int len = static_cast<int>(s.size());
      if (len < 2) continue;
      for (int p = 0; p < len; ++p) {
        const double alpha =
            std::max(cfg.learning_rate * (1.0 - processed / total_steps),
                     cfg.learning_rate * 1e-4);
        ++processed;
        const int target = s[p];
        h.setZero();
        for (int q = 0; q < len; ++q)
          if (q != p) h += res.vectors.row(s[q]).transpose();
        h /= (len - 1);

        e.setZero();
        for (int j = 0; j <= cfg.negative_samples; ++j) {
          int cand;
          double label;
          if (j == 0) {
            cand = target;
            label = 1.0;
          } else {
            cand = sample_negative();
            if (cand == target) continue;
            label = 0.0;
          }
          const double f = 1.0 / (1.0 + std::exp(-h.dot(out.row(cand))));
          const double g = (label - f) * alpha;
          e += g * out.row(cand).transpose();
          out.row(cand) += g * h.transpose();
        }
        for (int q = 0; q < len; ++q)
          if (q != p) res.vectors.row(s[q]) += e.transpose();
      }
    }
  }
  res.trained = true;
  return res;
}

/// Triple co-occurrence vectors: each case's triples form one sentence.
inline CbowResult train_cooccurrence_embeddings(const Dataset& ds,
                                                const CbowConfig& cfg) {
  std::vector<std::vector<int>> sentences;
  sentences.reserve(ds.cases.size());
  for (const Case& c : ds.cases) sentences.push_back(c.triples);
  return train_cbow(sentences, ds.triple_count(), cfg);
}

/// Entity vectors trained on the same corpus when no pre-trained table is
/// supplied: each case contributes the entity sequence (head, tail) of its
/// triples as one sentence.
inline EntityTable train_entity_embeddings(const Dataset& ds,
                                           const CbowConfig& cfg) {
  std::vector<std::vector<int>> sentences;
  sentences.reserve(ds.cases.size());
  for (const Case& c : ds.cases) {
    std::vector<int> s;
    s.reserve(c.triples.size() * 2);
    for (TripleId m : c.triples) {
      s.push_back(ds.triple_entities[m].first);
      s.push_back(ds.triple_entities[m].second);
    }
    sentences.push_back(std::move(s));
  }
  const CbowResult r =
      train_cbow(sentences, static_cast<int>(ds.entities.size()), cfg);
  EntityTable table;
  table.tokens = ds.entities;
  for (size_t i = 0; i < table.tokens.size(); ++i)
    table.index.emplace(table.tokens[i], static_cast<int>(i));
  table.vectors = r.vectors;
  return table;
}

/// Parse "token v1 v2 ... vd" lines. An optional "count dim" header line
/// (two integers) is accepted and skipped.
inline EntityTable parse_token_vectors(std::istream& in,
                                       const std::string& what) {
  EntityTable table;
  std::string line;
  int line_no = 0;
  int dim = -1;
  std::vector<double> row;
  while (std::getline(in, line)) {
    ++line_no;
    std::istringstream ls(line);
    std::string token;
    if (!(ls >> token)) continue;
    row.clear();
    double v;
    while (ls >> v) row.push_back(v);
    if (!ls.eof())
      throw ParseError(what + " line " + std::to_string(line_no) +
                       ": non-numeric vector component");
    if (line_no == 1 && row.size() == 1) {
      // word2vec-style "count dim" header
      char* end = nullptr;
      (void)std::strtol(token.c_str(), &end, 10);
      if (end && *end == '\0') continue;
    }
    if (row.empty())
      throw ParseError(what + " line " + std::to_string(line_no) +
                       ": no vector components");
    if (dim < 0)
      dim = static_cast<int>(row.size());
    else if (static_cast<int>(row.size()) != dim)
      throw ParseError(what + " line " + std::to_string(line_no) +
                       ": expected " + std::to_string(dim) + " components, got " +
                       std::to_string(row.size()));
    if (!table.index.emplace(token, static_cast<int>(table.tokens.size())).second)
      throw ParseError(what + " line " + std::to_string(line_no) +
                       ": duplicate token '" + token + "'");
    table.tokens.push_back(token);
    const int r = static_cast<int>(table.vectors.rows());
    table.vectors.conservativeResize(r + 1, dim);
    for (int j = 0; j < dim; ++j) table.vectors(r, j) = row[j];
  }
  if (table.tokens.empty()) throw ParseError(what + ": no vectors in file");
  return table;
}

inline EntityTable load_entity_embeddings(std::istream& in) {
  return parse_token_vectors(in, "entity embeddings");
}

/// Per-triple vectors plus the parts they were composed from.
struct EmbeddingSet {
  EmbeddingMode mode = EmbeddingMode::composed;
  RowMatrixXd t;         // co-occurrence part, empty unless composed
  EntityTable entities;  // entity part, empty unless composed
  RowMatrixXd x;         // triple vectors, one row per TripleId
  bool cooccurrence_trained = true;

  int dim() const { return static_cast<int>(x.cols()); }

  /// Copy with every non-zero row scaled to unit L2 norm.
  EmbeddingSet normalized() const {
    EmbeddingSet out = *this;
    for (int i = 0; i < out.x.rows(); ++i) {
      const double norm = out.x.row(i).norm();
      if (norm > 0.0) out.x.row(i) /= norm;
    }
    return out;
  }
};

/// x_m = [t_m : (e_head + e_tail) / 2]. Entities absent from the table
/// contribute a zero entity part.
inline EmbeddingSet compose_triple_embeddings(const RowMatrixXd& t,
                                              const EntityTable& entities,
                                              const Dataset& ds) {
  const int M = ds.triple_count();
  if (static_cast<int>(t.rows()) != M)
    throw std::invalid_argument(
        "compose: co-occurrence matrix has " + std::to_string(t.rows()) +
        " rows, dataset has " + std::to_string(M) + " triples");
  const int dt = static_cast<int>(t.cols());
  const int de = entities.dim();

  EmbeddingSet set;
  set.mode = EmbeddingMode::composed;
  set.t = t;
  set.entities = entities;
  set.x.setZero(M, dt + de);
  for (TripleId m = 0; m < M; ++m) {
    set.x.row(m).head(dt) = t.row(m);
    const auto [h, tl] = ds.triple_entities[m];
    Eigen::RowVectorXd ent = Eigen::RowVectorXd::Zero(de);
    const int hi = entities.find(ds.entities[h]);
    const int ti = entities.find(ds.entities[tl]);
    if (hi >= 0) ent += entities.vectors.row(hi);
    if (ti >= 0) ent += entities.vectors.row(ti);
    set.x.row(m).tail(de) = 0.5 * ent;
  }
  return set;
}

/// Indicator vectors: no sharing between triples, d = M.
inline EmbeddingSet make_one_hot_embeddings(int triple_count) {
  if (triple_count <= 0) throw std::invalid_argument("one-hot: no triples");
  EmbeddingSet set;
  set.mode = EmbeddingMode::one_hot;
  set.x = RowMatrixXd::Identity(triple_count, triple_count);
  return set;
}

inline EmbeddingSet make_external_embeddings(RowMatrixXd x) {
  EmbeddingSet set;
  set.mode = EmbeddingMode::external;
  set.x = std::move(x);
  return set;
}

/// Load precomposed triple vectors; tokens must be the decimal TripleIds
/// 0..M-1, each present exactly once.
inline EmbeddingSet load_triple_embeddings(std::istream& in, int triple_count) {
  const EntityTable raw = parse_token_vectors(in, "triple embeddings");
  RowMatrixXd x(triple_count, raw.dim());
  std::vector<bool> seen(triple_count, false);
  for (size_t i = 0; i < raw.tokens.size(); ++i) {
    int id = -1;
    try {
      size_t pos = 0;
      id = std::stoi(raw.tokens[i], &pos);
      if (pos != raw.tokens[i].size()) id = -1;
    } catch (const std::exception&) {
      id = -1;
    }
    if (id < 0 || id >= triple_count)
      throw ParseError("triple embeddings: token '" + raw.tokens[i] +
                       "' is not a triple id in [0, " +
                       std::to_string(triple_count) + ")");
    seen[id] = true;
    x.row(id) = raw.vectors.row(static_cast<int>(i));
  }
  for (int id = 0; id < triple_count; ++id)
    if (!seen[id])
      throw ParseError("triple embeddings: missing vector for triple id " +
                       std::to_string(id));
  return make_external_embeddings(std::move(x));
}

/// Softmax similarity of each context vector to the target, with the usual
/// max subtraction for overflow safety. Context must be non-empty.
inline Eigen::VectorXd attention_weights(const Eigen::VectorXd& target,
                                         const RowMatrixXd& context) {
  if (context.rows() == 0)
    throw std::invalid_argument("attention: empty context");
  Eigen::VectorXd logits = context * target;
  const double mx = logits.maxCoeff();
  Eigen::VectorXd w = (logits.array() - mx).exp();
  return w / w.sum();
}

}  // namespace kgtruth
