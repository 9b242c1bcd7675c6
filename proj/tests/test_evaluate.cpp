#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "support/oracles.hpp"
#include "support/testutil.hpp"
#include "veinorigin/metrics.hpp"
#include "veinorigin/report.hpp"
#include "veinorigin/rng.hpp"

using namespace veinorigin;
using testutil::TempDir;

namespace {

/// Random score matrix; rows are softmax-like (positive, sum to 1). With
/// `quantize`, scores are snapped to a coarse grid so ties occur.
ScoreMatrix random_scores(int rows, int classes, std::uint64_t seed, bool quantize) {
  Rng rng(seed);
  ScoreMatrix sm;
  sm.num_classes = classes;
  sm.scores.resize(static_cast<std::size_t>(rows) * classes);
  sm.labels.resize(rows);
  for (int r = 0; r < rows; ++r) {
    sm.labels[r] = static_cast<int>(rng.below(classes));
    double sum = 0;
    for (int c = 0; c < classes; ++c) {
      double v = rng.uniform();
      if (quantize) v = std::floor(v * 8) / 8.0;
      sm.at(r, c) = v + 1e-3;
      sum += sm.at(r, c);
    }
    for (int c = 0; c < classes; ++c) sm.at(r, c) /= sum;
    if (quantize)
      for (int c = 0; c < classes; ++c) sm.at(r, c) = std::floor(sm.at(r, c) * 64) / 64.0;
  }
  return sm;
}

ScoreMatrix perfect_scores(int per_class) {
  ScoreMatrix sm;
  sm.num_classes = kNumSensors;
  for (int c = 0; c < kNumSensors; ++c) {
    for (int i = 0; i < per_class; ++i) {
      std::vector<double> row(kNumSensors, 0.02);
      row[c] = 1.0 - 0.02 * (kNumSensors - 1);
      sm.scores.insert(sm.scores.end(), row.begin(), row.end());
      sm.labels.push_back(c);
    }
  }
  return sm;
}

}  // namespace

TEST_CASE("auc_ovr: perfect separation gives 1.0 everywhere") {
  const ScoreMatrix sm = perfect_scores(5);
  const AucResult res = auc_ovr(sm);
  REQUIRE(res.macro == 1.0);
  for (double v : res.per_class) REQUIRE(v == 1.0);
}

TEST_CASE("auc_ovr: all-tied scores give 0.5") {
  // Two classes, every score in column 0 identical.
  ScoreMatrix sm;
  sm.num_classes = 2;
  sm.scores = {0.5, 0.5, 0.5, 0.5, 0.5, 0.5};
  sm.labels = {0, 1, 0};
  const AucResult res = auc_ovr(sm);
  REQUIRE(res.per_class[0] == 0.5);
  REQUIRE(res.per_class[1] == 0.5);
}

TEST_CASE("auc_ovr: undefined classes are excluded from the macro") {
  ScoreMatrix sm;
  sm.num_classes = 3;
  sm.scores = {0.9, 0.05, 0.05, 0.2, 0.7, 0.1, 0.1, 0.8, 0.1};
  sm.labels = {0, 1, 1};  // class 2 has no positives
  const AucResult res = auc_ovr(sm);
  REQUIRE(std::isnan(res.per_class[2]));
  REQUIRE_FALSE(std::isnan(res.per_class[0]));
  REQUIRE_FALSE(std::isnan(res.per_class[1]));

  ScoreMatrix single;
  single.num_classes = 2;
  single.scores = {0.6, 0.4, 0.7, 0.3};
  single.labels = {0, 0};
  try {
    auc_ovr(single);
    FAIL("expected AllClassesUndefined");
  } catch (const Error& e) {
    REQUIRE(e.code() == errc::all_classes_undefined);
  }
}

TEST_CASE("auc_ovr equals exhaustive pairwise brute force") {
  Rng meta(1234);
  for (int trial = 0; trial < 200; ++trial) {
    const int rows = 8 + static_cast<int>(meta.below(193));
    const bool quantize = trial % 2 == 0;
    const ScoreMatrix sm = random_scores(rows, 8, 1000 + trial, quantize);
    AucResult fast;
    try {
      fast = auc_ovr(sm);
    } catch (const Error&) {
      continue;  // all classes undefined in a tiny draw
    }
    const std::vector<double> slow = oracle::auc_ovr_pairwise(sm);
    for (int c = 0; c < 8; ++c) {
      if (std::isnan(slow[c])) {
        REQUIRE(std::isnan(fast.per_class[c]));
      } else {
        REQUIRE(std::abs(fast.per_class[c] - slow[c]) < 1e-12);
      }
    }
  }
}

TEST_CASE("auc is invariant under strictly increasing transforms of a column") {
  const ScoreMatrix sm = random_scores(60, 8, 77, false);
  const AucResult base = auc_ovr(sm);
  for (int c = 0; c < 8; ++c) {
    ScoreMatrix cubed = sm;
    for (int r = 0; r < sm.rows(); ++r) cubed.at(r, c) = std::pow(sm.at(r, c), 3);
    const AucResult res = auc_ovr(cubed);
    REQUIRE(std::abs(res.per_class[c] - base.per_class[c]) < 1e-12);
  }
}

TEST_CASE("auc flips to its complement when labels flip (no ties)") {
  const ScoreMatrix sm = random_scores(40, 2, 5, false);
  ScoreMatrix flipped = sm;
  for (auto& label : flipped.labels) label = 1 - label;
  const AucResult a = auc_ovr(sm);
  const AucResult b = auc_ovr(flipped);
  REQUIRE(std::abs(b.per_class[0] - (1.0 - a.per_class[0])) < 1e-12);
  REQUIRE(std::abs(b.per_class[1] - (1.0 - a.per_class[1])) < 1e-12);
}

TEST_CASE("confusion: argmax with lowest-index tie break") {
  ScoreMatrix sm;
  sm.num_classes = 4;
  sm.scores = {
      0.1, 0.4, 0.1, 0.4,  // tie between classes 1 and 3 -> predict 1
      0.3, 0.3, 0.2, 0.2,  // tie between classes 0 and 1 -> predict 0
      0.0, 0.0, 0.0, 1.0,
  };
  sm.labels = {2, 1, 3};
  const ConfusionMatrix cm = confusion(sm);
  REQUIRE(cm.at(2, 1) == 1);  // first row: argmax tie 1 vs 2 -> class 1
  REQUIRE(cm.at(1, 0) == 1);
  REQUIRE(cm.at(3, 3) == 1);
  REQUIRE(cm.total() == 3);
}

TEST_CASE("confusion: three correct rows land on the diagonal") {
  ScoreMatrix sm;
  sm.num_classes = 8;
  for (int i = 0; i < 3; ++i) {
    std::vector<double> row(8, 0.05);
    row[2] = 0.65;
    sm.scores.insert(sm.scores.end(), row.begin(), row.end());
    sm.labels.push_back(2);
  }
  const ConfusionMatrix cm = confusion(sm);
  REQUIRE(cm.at(2, 2) == 3);
  REQUIRE(cm.total() == 3);
}

TEST_CASE("confusion matches the naive loop oracle") {
  for (int trial = 0; trial < 100; ++trial) {
    const ScoreMatrix sm = random_scores(50, 8, 2000 + trial, trial % 2 == 0);
    const ConfusionMatrix cm = confusion(sm);
    REQUIRE(cm.counts == oracle::confusion_naive(sm));
    REQUIRE(cm.total() == sm.rows());
  }
}

TEST_CASE("precision_macro: worked examples") {
  SECTION("diagonal confusion is 1.0") {
    ConfusionMatrix cm(8);
    for (int c = 0; c < 8; ++c) cm.at(c, c) = 4;
    REQUIRE(precision_macro(cm) == 1.0);
  }
  SECTION("[[5,1],[0,4]] -> macro 0.9") {
    ConfusionMatrix cm(2);
    cm.at(0, 0) = 5;
    cm.at(0, 1) = 1;
    cm.at(1, 0) = 0;
    cm.at(1, 1) = 4;
    REQUIRE(precision_macro(cm) == 0.9);
  }
  SECTION("never-predicted classes are excluded") {
    ConfusionMatrix cm(3);
    cm.at(0, 0) = 2;
    cm.at(1, 0) = 2;  // class 1 never predicted, class 2 never predicted
    REQUIRE(precision_macro(cm) == 0.5);
  }
  SECTION("no predictions at all is undefined") {
    ConfusionMatrix cm(3);
    try {
      precision_macro(cm);
      FAIL("expected Undefined");
    } catch (const Error& e) {
      REQUIRE(e.code() == errc::undefined_metric);
    }
  }
}

TEST_CASE("precision_macro matches the hand formula on random confusions") {
  for (int trial = 0; trial < 100; ++trial) {
    const ScoreMatrix sm = random_scores(64, 8, 3000 + trial, false);
    const ConfusionMatrix cm = confusion(sm);
    REQUIRE(precision_macro(cm) == oracle::precision_naive(cm.counts, 8));
  }
}

TEST_CASE("per_sensor_report: canonical 8 rows") {
  const ScoreMatrix sm = perfect_scores(4);
  const PerSensorReport rep = per_sensor_report(sm);
  for (int c = 0; c < kNumSensors; ++c) REQUIRE(rep.auc[c] == 1.0);
}

TEST_CASE("per_sensor_report: only the confused sensor drops below 1") {
  // MMCBNU (index 3) positives get ambiguous scores against PALMAR.
  ScoreMatrix sm;
  sm.num_classes = 8;
  Rng rng(9);
  for (int c = 0; c < 8; ++c) {
    for (int i = 0; i < 10; ++i) {
      std::vector<double> row(8, 0.01);
      if (c == sensor_index(SensorClass::MMCBNU) && i < 5) {
        // half the MMCBNU rows are mistaken for PALMAR, scoring below the
        // 0.01 the negatives get in the MMCBNU column
        row[sensor_index(SensorClass::PALMAR)] = 0.6;
        row[sensor_index(SensorClass::MMCBNU)] = 0.004;
      } else {
        row[c] = 0.93;
      }
      sm.scores.insert(sm.scores.end(), row.begin(), row.end());
      sm.labels.push_back(c);
    }
  }
  const PerSensorReport rep = per_sensor_report(sm);
  const std::vector<double> slow = oracle::auc_ovr_pairwise(sm);
  for (int c = 0; c < 8; ++c) {
    REQUIRE(std::abs(rep.auc[c] - slow[c]) < 1e-12);
    if (c == sensor_index(SensorClass::MMCBNU)) {
      REQUIRE(rep.auc[c] < 1.0);
    } else {
      REQUIRE(rep.auc[c] == 1.0);
    }
  }
}

TEST_CASE("aggregate_by_sample: mean rows stay normalized") {
  ScoreMatrix sm;
  sm.num_classes = 8;
  std::vector<std::string> sources;
  Rng rng(31);
  for (int s = 0; s < 6; ++s) {
    for (int p = 0; p < 4; ++p) {
      double sum = 0;
      std::vector<double> row(8);
      for (auto& v : row) {
        v = rng.uniform() + 1e-6;
        sum += v;
      }
      for (auto& v : row) v /= sum;
      sm.scores.insert(sm.scores.end(), row.begin(), row.end());
      sm.labels.push_back(s % 8);
      sources.push_back("sample" + std::to_string(s));
    }
  }
  const ScoreMatrix agg = aggregate_by_sample(sm, sources);
  REQUIRE(agg.rows() == 6);
  for (int r = 0; r < agg.rows(); ++r) {
    double sum = 0;
    for (int c = 0; c < 8; ++c) sum += agg.at(r, c);
    REQUIRE(std::abs(sum - 1.0) < 1e-9);
  }
}

TEST_CASE("EvalReport JSON round-trip is lossless") {
  TempDir dir("report");
  const ScoreMatrix sm = random_scores(64, 8, 99, false);
  EvalReport rep = make_eval_report(sm, "patch", "fv2021", 7, "roi");
  rep.per_class_auc[5] = std::numeric_limits<double>::quiet_NaN();  // exercise null
  save_report(rep, dir / "r.json");
  const EvalReport back = load_report(dir / "r.json");
  for (int c = 0; c < 8; ++c) {
    if (std::isnan(rep.per_class_auc[c])) {
      REQUIRE(std::isnan(back.per_class_auc[c]));
    } else {
      REQUIRE(back.per_class_auc[c] == rep.per_class_auc[c]);  // bitwise
    }
  }
  REQUIRE(back.macro_auc == rep.macro_auc);
  REQUIRE(back.macro_precision == rep.macro_precision);
  REQUIRE(back.confusion.counts == rep.confusion.counts);
  REQUIRE(back.sample_aggregation == rep.sample_aggregation);
  REQUIRE(back.metadata.arch == "fv2021");
  REQUIRE(back.metadata.seed == 7);
  REQUIRE(back.metadata.data_kind == "roi");

  // JSON keys named by the schema
  const std::string text = testutil::read_file(dir / "r.json");
  for (const char* key : {"per_class_auc", "macro_auc", "macro_precision", "confusion",
                          "sample_aggregation", "metadata"})
    REQUIRE(text.find(key) != std::string::npos);
}

TEST_CASE("per-sensor CSV: canonical order, 4-decimal display") {
  TempDir dir("psr");
  PerSensorReport rep;
  for (int c = 0; c < 8; ++c) rep.auc[c] = 0.99931;
  save_per_sensor_csv(rep, dir / "ps.csv");
  const std::string csv = testutil::read_file(dir / "ps.csv");
  REQUIRE(csv.find("sensor,auc") == 0);
  REQUIRE(csv.find("SDUMLA,0.9993") != std::string::npos);
  REQUIRE(csv.find("UTFVP,0.9993") != std::string::npos);
  // canonical order: SDUMLA row comes before UTFVP row
  REQUIRE(csv.find("SDUMLA") < csv.find("UTFVP"));

  save_per_sensor_json(rep, dir / "ps.json");
  const PerSensorReport back = per_sensor_from_json(
      nlohmann::json::parse(testutil::read_file(dir / "ps.json")));
  for (int c = 0; c < 8; ++c) REQUIRE(back.auc[c] == rep.auc[c]);
}

TEST_CASE("print_summary formats AUC to five decimals") {
  EvalReport rep;
  rep.macro_auc = 0.9997;
  rep.macro_precision = 1.0;
  rep.metadata.arch = "fv2021";
  rep.metadata.data_kind = "roi";
  const std::string text = print_summary(rep);
  REQUIRE(text.find("0.99970") != std::string::npos);
  REQUIRE(text.find("1.0") != std::string::npos);

  EvalReport anon;
  anon.macro_auc = 1.0;
  anon.macro_precision = 0.9896;
  const std::string placeholder = print_summary(anon);
  REQUIRE(placeholder.find("(unknown)") != std::string::npos);
  REQUIRE(placeholder.find("1.00000") != std::string::npos);
  REQUIRE(placeholder.find("0.9896") != std::string::npos);
}

TEST_CASE("roc_points: endpoints, monotonicity, and perfect separation") {
  const ScoreMatrix sm = perfect_scores(4);
  for (int c = 0; c < 8; ++c) {
    const auto pts = roc_points(sm, c);
    REQUIRE(pts.front().fpr == 0.0);
    REQUIRE(pts.front().tpr == 0.0);
    REQUIRE(pts.back().fpr == 1.0);
    REQUIRE(pts.back().tpr == 1.0);
    for (std::size_t i = 1; i < pts.size(); ++i) {
      REQUIRE(pts[i].fpr >= pts[i - 1].fpr);
      REQUIRE(pts[i].tpr >= pts[i - 1].tpr);
    }
    // perfect scores reach (0, 1) before any false positive
    bool hits_corner = false;
    for (const auto& p : pts) hits_corner |= (p.fpr == 0.0 && p.tpr == 1.0);
    REQUIRE(hits_corner);
  }

  TempDir dir("roc");
  save_roc_points_csv(sm, dir / "roc.csv");
  const std::string csv = testutil::read_file(dir / "roc.csv");
  REQUIRE(csv.find("sensor,fpr,tpr") == 0);
  REQUIRE(csv.find("MMCBNU,") != std::string::npos);
}

TEST_CASE("save_report: unwritable path raises WriteError") {
  EvalReport rep;
  try {
    save_report(rep, "/nonexistent_dir_zz/report.json");
    FAIL("expected WriteError");
  } catch (const Error& e) {
    REQUIRE(e.code() == errc::write_error);
  }
}
