#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include "veinorigin/error.hpp"
#include "veinorigin/sensor.hpp"

namespace veinorigin {

/// Per-row class probabilities with ground-truth labels.
struct ScoreMatrix {
  int num_classes = kNumSensors;
  std::vector<double> scores;  // rows * num_classes, row-major
  std::vector<int> labels;     // true class per row

  int rows() const { return static_cast<int>(labels.size()); }
  double at(int r, int c) const { return scores[static_cast<std::size_t>(r) * num_classes + c]; }
  double& at(int r, int c) { return scores[static_cast<std::size_t>(r) * num_classes + c]; }

  void validate() const {
    if (scores.size() != static_cast<std::size_t>(labels.size()) * num_classes)
      raise(errc::shape_error, "score matrix size mismatch");
    for (int label : labels)
      if (label < 0 || label >= num_classes)
        raise(errc::invalid_argument, "label out of range");
  }
};

struct AucResult {
  std::vector<double> per_class;  // NaN where undefined (no positives or no negatives)
  double macro = 0.0;
};

/// One-vs-rest AUC per class via the Mann-Whitney statistic
/// (#(pos > neg) + 0.5 * #ties) / (#pos * #neg), computed with tie-averaged
/// ranks. Classes without both positives and negatives are undefined and
/// excluded from the macro average.
inline AucResult auc_ovr(const ScoreMatrix& sm) {
  sm.validate();
  const int n = sm.rows();
  AucResult res;
  res.per_class.assign(sm.num_classes, std::numeric_limits<double>::quiet_NaN());
  double macro_sum = 0.0;
  int defined = 0;

  std::vector<std::pair<double, int>> entries(n);  // score, is_positive
  for (int c = 0; c < sm.num_classes; ++c) {
    std::int64_t npos = 0;
    for (int r = 0; r < n; ++r) {
      entries[r] = {sm.at(r, c), sm.labels[r] == c ? 1 : 0};
      npos += entries[r].second;
    }
    const std::int64_t nneg = n - npos;
    if (npos == 0 || nneg == 0) continue;

    std::sort(entries.begin(), entries.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
    double rank_sum_pos = 0.0;
    int i = 0;
    while (i < n) {
      int j = i;
      while (j < n && entries[j].first == entries[i].first) ++j;
      const double avg_rank = 0.5 * (static_cast<double>(i + 1) + static_cast<double>(j));
      for (int k = i; k < j; ++k)
        if (entries[k].second) rank_sum_pos += avg_rank;
      i = j;
    }
    const double auc = (rank_sum_pos - 0.5 * static_cast<double>(npos) * (npos + 1)) /
                       (static_cast<double>(npos) * static_cast<double>(nneg));
    res.per_class[c] = auc;
    macro_sum += auc;
    ++defined;
  }
  if (defined == 0)
    raise(errc::all_classes_undefined, "no class has both positive and negative rows");
  res.macro = macro_sum / defined;
  return res;
}

struct ConfusionMatrix {
  int num_classes = kNumSensors;
  std::vector<std::int64_t> counts;  // rows = true class, cols = predicted

  explicit ConfusionMatrix(int classes = kNumSensors)
      : num_classes(classes),
        counts(static_cast<std::size_t>(classes) * classes, 0) {}

  std::int64_t at(int t, int p) const {
    return counts[static_cast<std::size_t>(t) * num_classes + p];
  }
  std::int64_t& at(int t, int p) { return counts[static_cast<std::size_t>(t) * num_classes + p]; }

  std::int64_t total() const {
    std::int64_t s = 0;
    for (auto v : counts) s += v;
    return s;
  }
};

/// Argmax prediction per row; ties break to the lowest class index.
inline ConfusionMatrix confusion(const ScoreMatrix& sm) {
  sm.validate();
  ConfusionMatrix cm(sm.num_classes);
  for (int r = 0; r < sm.rows(); ++r) {
    int best = 0;
    for (int c = 1; c < sm.num_classes; ++c)
      if (sm.at(r, c) > sm.at(r, best)) best = c;
    ++cm.at(sm.labels[r], best);
  }
  return cm;
}

/// Unweighted mean of per-class TP/(TP+FP); classes never predicted are
/// excluded.
inline double precision_macro(const ConfusionMatrix& cm) {
  double sum = 0.0;
  int defined = 0;
  for (int c = 0; c < cm.num_classes; ++c) {
    std::int64_t predicted = 0;
    for (int t = 0; t < cm.num_classes; ++t) predicted += cm.at(t, c);
    if (predicted == 0) continue;
    sum += static_cast<double>(cm.at(c, c)) / static_cast<double>(predicted);
    ++defined;
  }
  if (defined == 0) raise(errc::undefined_metric, "no class was ever predicted");
  return sum / defined;
}

struct RocPoint {
  double fpr = 0.0;
  double tpr = 0.0;
};

/// One-vs-rest ROC polyline for a class, threshold swept from +inf down.
/// Starts at (0,0) and ends at (1,1); tied scores collapse into one step.
inline std::vector<RocPoint> roc_points(const ScoreMatrix& sm, int cls) {
  sm.validate();
  std::int64_t npos = 0, nneg = 0;
  std::vector<std::pair<double, int>> entries(sm.rows());
  for (int r = 0; r < sm.rows(); ++r) {
    entries[r] = {sm.at(r, cls), sm.labels[r] == cls ? 1 : 0};
    if (entries[r].second) ++npos;
    else ++nneg;
  }
  if (npos == 0 || nneg == 0)
    raise(errc::undefined_metric, "roc undefined for class " + std::to_string(cls));
  std::sort(entries.begin(), entries.end(),
            [](const auto& a, const auto& b) { return a.first > b.first; });
  std::vector<RocPoint> pts{{0.0, 0.0}};
  std::int64_t tp = 0, fp = 0;
  std::size_t i = 0;
  while (i < entries.size()) {
    std::size_t j = i;
    while (j < entries.size() && entries[j].first == entries[i].first) {
      if (entries[j].second) ++tp;
      else ++fp;
      ++j;
    }
    pts.push_back({static_cast<double>(fp) / nneg, static_cast<double>(tp) / npos});
    i = j;
  }
  return pts;
}

/// Mean of each sample's patch score rows; rows stay normalized because the
/// mean of rows summing to one sums to one.
inline ScoreMatrix aggregate_by_sample(const ScoreMatrix& sm,
                                       const std::vector<std::string>& source_ids) {
  sm.validate();
  if (static_cast<int>(source_ids.size()) != sm.rows())
    raise(errc::shape_error, "source id count does not match score rows");
  std::map<std::string, std::vector<int>> groups;
  for (int r = 0; r < sm.rows(); ++r) groups[source_ids[r]].push_back(r);

  ScoreMatrix out;
  out.num_classes = sm.num_classes;
  for (const auto& [sid, rows] : groups) {
    std::vector<double> mean(sm.num_classes, 0.0);
    for (int r : rows)
      for (int c = 0; c < sm.num_classes; ++c) mean[c] += sm.at(r, c);
    for (auto& v : mean) v /= static_cast<double>(rows.size());
    const int label = sm.labels[rows.front()];
    for (int r : rows)
      if (sm.labels[r] != label)
        raise(errc::invalid_argument, "inconsistent labels within sample " + sid);
    out.scores.insert(out.scores.end(), mean.begin(), mean.end());
    out.labels.push_back(label);
  }
  return out;
}

}  // namespace veinorigin
