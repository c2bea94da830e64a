#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

namespace kgtruth {

/// Fraction of positions where prediction and truth disagree. Unresolved
/// predictions (-1) count as errors.
inline double error_rate(const std::vector<int>& predicted,
                         const std::vector<int>& truth) {
  if (predicted.size() != truth.size() || truth.empty())
    throw std::invalid_argument("error_rate: size mismatch or empty input");
  int wrong = 0;
  for (size_t i = 0; i < truth.size(); ++i)
    if (predicted[i] != truth[i]) ++wrong;
  return static_cast<double>(wrong) / static_cast<double>(truth.size());
}

/// Mean reciprocal rank of each object's single most relevant item (the first
/// entry of its relevant list). Items missing from a ranking score zero.
inline double mrr(const std::vector<std::vector<int>>& rankings,
                  const std::vector<std::vector<int>>& relevant) {
  if (rankings.size() != relevant.size() || rankings.empty())
    throw std::invalid_argument("mrr: size mismatch or empty input");
  double acc = 0.0;
  for (size_t i = 0; i < rankings.size(); ++i) {
    if (relevant[i].empty()) throw std::invalid_argument("mrr: empty relevant set");
    const int target = relevant[i].front();
    for (size_t r = 0; r < rankings[i].size(); ++r) {
      if (rankings[i][r] == target) {
        acc += 1.0 / static_cast<double>(r + 1);
        break;
      }
    }
  }
  return acc / static_cast<double>(rankings.size());
}

/// Mean average precision with the whole relevant list as the positive set.
inline double map_score(const std::vector<std::vector<int>>& rankings,
                        const std::vector<std::vector<int>>& relevant) {
  if (rankings.size() != relevant.size() || rankings.empty())
    throw std::invalid_argument("map: size mismatch or empty input");
  double acc = 0.0;
  for (size_t i = 0; i < rankings.size(); ++i) {
    const auto& rel = relevant[i];
    if (rel.empty()) throw std::invalid_argument("map: empty relevant set");
    int hits = 0;
    double ap = 0.0;
    for (size_t r = 0; r < rankings[i].size(); ++r) {
      bool is_rel = false;
      for (int t : rel)
        if (t == rankings[i][r]) {
          is_rel = true;
          break;
        }
      if (is_rel) {
        ++hits;
        ap += static_cast<double>(hits) / static_cast<double>(r + 1);
      }
    }
    acc += ap / static_cast<double>(rel.size());
  }
  return acc / static_cast<double>(rankings.size());
}

/// Sample Pearson correlation; throws if either side has zero variance.
inline double pearson(const std::vector<double>& xs,
                      const std::vector<double>& ys) {
  if (xs.size() != ys.size() || xs.size() < 2)
    throw std::invalid_argument("pearson: need two equal-length samples");
  const double n = static_cast<double>(xs.size());
  double mx = 0.0, my = 0.0;
  for (size_t i = 0; i < xs.size(); ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, syy = 0.0, sxy = 0.0;
  for (size_t i = 0; i < xs.size(); ++i) {
    const double dx = xs[i] - mx;
    const double dy = ys[i] - my;
    sxx += dx * dx;
    syy += dy * dy;
    sxy += dx * dy;
  }
  if (sxx <= 0.0 || syy <= 0.0)
    throw std::invalid_argument("pearson: zero variance");
  return sxy / std::sqrt(sxx * syy);
}

}  // namespace kgtruth
