#pragma once

// Brute-force reference implementations used to pin expected values. These
// are intentionally written from the definitions, independent of the library
// code paths they check.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

#include "veinorigin/image.hpp"
#include "veinorigin/metrics.hpp"

namespace oracle {

/// AUC by exhaustive positive/negative pair counting.
inline double auc_pairwise(const std::vector<double>& scores, const std::vector<bool>& positive) {
  std::int64_t wins = 0, ties = 0, npos = 0, nneg = 0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (positive[i]) ++npos;
    else ++nneg;
  }
  if (npos == 0 || nneg == 0) return std::numeric_limits<double>::quiet_NaN();
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (!positive[i]) continue;
    for (std::size_t j = 0; j < scores.size(); ++j) {
      if (positive[j]) continue;
      if (scores[i] > scores[j]) ++wins;
      else if (scores[i] == scores[j]) ++ties;
    }
  }
  return (static_cast<double>(wins) + 0.5 * static_cast<double>(ties)) /
         (static_cast<double>(npos) * static_cast<double>(nneg));
}

/// One-vs-rest AUC for every class of a score matrix.
inline std::vector<double> auc_ovr_pairwise(const veinorigin::ScoreMatrix& sm) {
  std::vector<double> out(sm.num_classes);
  for (int c = 0; c < sm.num_classes; ++c) {
    std::vector<double> scores(sm.rows());
    std::vector<bool> positive(sm.rows());
    for (int r = 0; r < sm.rows(); ++r) {
      scores[r] = sm.at(r, c);
      positive[r] = sm.labels[r] == c;
    }
    out[c] = auc_pairwise(scores, positive);
  }
  return out;
}

/// Confusion counts by a naive double loop.
inline std::vector<std::int64_t> confusion_naive(const veinorigin::ScoreMatrix& sm) {
  std::vector<std::int64_t> counts(static_cast<std::size_t>(sm.num_classes) * sm.num_classes, 0);
  for (int r = 0; r < sm.rows(); ++r) {
    int best = 0;
    double best_score = sm.at(r, 0);
    for (int c = 1; c < sm.num_classes; ++c) {
      if (sm.at(r, c) > best_score) {
        best_score = sm.at(r, c);
        best = c;
      }
    }
    counts[static_cast<std::size_t>(sm.labels[r]) * sm.num_classes + best] += 1;
  }
  return counts;
}

/// Macro precision from first principles.
inline double precision_naive(const std::vector<std::int64_t>& counts, int classes) {
  double sum = 0.0;
  int defined = 0;
  for (int c = 0; c < classes; ++c) {
    std::int64_t tp = counts[static_cast<std::size_t>(c) * classes + c];
    std::int64_t predicted = 0;
    for (int t = 0; t < classes; ++t) predicted += counts[static_cast<std::size_t>(t) * classes + c];
    if (predicted == 0) continue;
    sum += static_cast<double>(tp) / static_cast<double>(predicted);
    ++defined;
  }
  return sum / defined;
}

/// Per-image mean by plain double-loop accumulation.
inline double mean_naive(const veinorigin::GrayImage& img) {
  double sum = 0.0;
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x) sum += img.at(x, y);
  return sum / (static_cast<double>(img.width) * img.height);
}

/// Two-pass population variance.
inline double variance_naive(const veinorigin::GrayImage& img) {
  const double mu = mean_naive(img);
  double acc = 0.0;
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x) {
      const double d = img.at(x, y) - mu;
      acc += d * d;
    }
  return acc / (static_cast<double>(img.width) * img.height);
}

/// Interpolated quantile at p*(n-1). Same lerp rule as the library so
/// equality is exact, arrived at through an independent sort/selection path.
inline double quantile_naive(std::vector<double> values, double p) {
  std::sort(values.begin(), values.end());
  if (values.size() == 1) return values[0];
  const double pos = p * (static_cast<double>(values.size()) - 1.0);
  const std::size_t lo = static_cast<std::size_t>(pos);
  if (lo + 1 >= values.size()) return values.back();
  const double frac = pos - static_cast<double>(lo);
  return values[lo] * (1.0 - frac) + values[lo + 1] * frac;
}

/// Exact histogram by counting.
inline std::array<std::uint64_t, 256> histogram_naive(const veinorigin::GrayImage& img) {
  std::array<std::uint64_t, 256> counts{};
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x) counts[img.at(x, y)] += 1;
  return counts;
}

}  // namespace oracle
