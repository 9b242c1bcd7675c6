#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <set>

#include "support/testutil.hpp"
#include "veinorigin/manifest.hpp"
#include "veinorigin/png_io.hpp"
#include "veinorigin/rng.hpp"
#include "veinorigin/sensor.hpp"
#include "veinorigin/synthetic.hpp"

using namespace veinorigin;
using testutil::TempDir;

namespace {

GrayImage random_image(int w, int h, std::uint64_t seed) {
  Rng rng(seed);
  GrayImage img(w, h);
  for (auto& p : img.pixels) p = static_cast<std::uint8_t>(rng.below(256));
  return img;
}

DatasetManifest fake_manifest(SensorClass sensor, int count, const std::string& prefix) {
  DatasetManifest m;
  for (int i = 0; i < count; ++i) {
    SampleRecord r;
    r.sample_id = prefix + "/" + std::to_string(i);
    r.sensor = sensor;
    r.path = "/nonexistent/" + r.sample_id + ".png";
    r.kind = SampleKind::raw;
    r.width = 96;
    r.height = 96;
    m.records.push_back(r);
  }
  return m;
}

}  // namespace

TEST_CASE("sensor classes: canonical order is fixed") {
  REQUIRE(kNumSensors == 8);
  const auto order = canonical_sensors();
  const char* expected[] = {"SDUMLA", "HKPU_FV",   "IDIAP",  "MMCBNU",
                            "PALMAR", "FV_USM", "THU_FVFDT", "UTFVP"};
  for (int i = 0; i < kNumSensors; ++i) {
    REQUIRE(sensor_index(order[i]) == i);
    REQUIRE(sensor_name(order[i]) == expected[i]);
    REQUIRE(parse_sensor(expected[i]) == order[i]);
  }
  REQUIRE_THROWS_AS(parse_sensor("NOSUCH"), Error);
}

TEST_CASE("scan_directory: lexicographic, deterministic, reads headers") {
  TempDir dir("scan");
  save_png(random_image(64, 40, 1), dir / "b.png");
  save_png(random_image(32, 20, 2), dir / "a.png");
  save_png(random_image(96, 96, 3), dir / "c.png");

  const ScanResult first = scan_directory(dir.path(), SensorClass::UTFVP, SampleKind::raw);
  REQUIRE(first.manifest.records.size() == 3);
  REQUIRE(first.skipped.empty());
  REQUIRE(first.manifest.records[0].sample_id == "UTFVP/a");
  REQUIRE(first.manifest.records[0].width == 32);
  REQUIRE(first.manifest.records[0].height == 20);
  REQUIRE(first.manifest.records[2].width == 96);

  const ScanResult second = scan_directory(dir.path(), SensorClass::UTFVP, SampleKind::raw);
  REQUIRE(first.manifest == second.manifest);
  REQUIRE(first.manifest.checksum() == second.manifest.checksum());
}

TEST_CASE("scan_directory: unreadable file goes to the record-level error list") {
  TempDir dir("scanbad");
  save_png(random_image(30, 30, 4), dir / "good.png");
  testutil::write_file(dir / "broken.png", "not a png at all");
  const ScanResult res = scan_directory(dir.path(), SensorClass::IDIAP, SampleKind::roi);
  REQUIRE(res.manifest.records.size() == 1);
  REQUIRE(res.skipped.size() == 1);
  REQUIRE(res.skipped[0].path.find("broken.png") != std::string::npos);
}

TEST_CASE("scan_directory: empty directory raises EmptyDataset") {
  TempDir dir("scanempty");
  try {
    scan_directory(dir.path(), SensorClass::SDUMLA, SampleKind::raw);
    FAIL("expected EmptyDataset");
  } catch (const Error& e) {
    REQUIRE(e.code() == errc::empty_dataset);
  }
}

TEST_CASE("validate_manifest reports duplicates, missing files, bad dimensions") {
  TempDir dir("validate");
  save_png(random_image(20, 20, 5), dir / "x.png");

  DatasetManifest m;
  SampleRecord r;
  r.sample_id = "UTFVP/x";
  r.sensor = SensorClass::UTFVP;
  r.path = (dir / "x.png").string();
  r.width = 20;
  r.height = 20;
  m.records.push_back(r);

  SECTION("all good") {
    const ValidationReport rep = validate_manifest(m);
    REQUIRE(rep.valid);
    REQUIRE(rep.issues.empty());
  }
  SECTION("duplicate id") {
    m.records.push_back(r);
    const ValidationReport rep = validate_manifest(m);
    REQUIRE_FALSE(rep.valid);
    REQUIRE(rep.issues.size() == 1);
    REQUIRE(rep.issues[0].kind == ValidationIssue::Kind::duplicate_id);
  }
  SECTION("missing file") {
    m.records[0].path += ".gone";
    const ValidationReport rep = validate_manifest(m);
    REQUIRE_FALSE(rep.valid);
    REQUIRE(rep.issues[0].kind == ValidationIssue::Kind::missing_file);
  }
  SECTION("bad dimensions") {
    m.records[0].width = 0;
    const ValidationReport rep = validate_manifest(m);
    REQUIRE_FALSE(rep.valid);
    REQUIRE(rep.issues[0].kind == ValidationIssue::Kind::bad_dimensions);
  }
}

TEST_CASE("merge_manifests: 8 x 120 records give 960, canonical order kept") {
  std::vector<DatasetManifest> parts;
  // Feed in reverse order on purpose; merge must regroup canonically.
  for (int i = kNumSensors - 1; i >= 0; --i)
    parts.push_back(fake_manifest(sensor_from_index(i),
                                  120, std::string(sensor_name(sensor_from_index(i)))));
  const DatasetManifest merged = merge_manifests(parts);
  REQUIRE(merged.records.size() == 960);
  for (std::size_t i = 1; i < merged.records.size(); ++i)
    REQUIRE(sensor_index(merged.records[i - 1].sensor) <= sensor_index(merged.records[i].sensor));
}

TEST_CASE("merge_manifests: identity and conflicts") {
  const DatasetManifest one = fake_manifest(SensorClass::PALMAR, 7, "PALMAR");
  const DatasetManifest same = merge_manifests({one});
  REQUIRE(same.records == one.records);

  try {
    merge_manifests({one, one});
    FAIL("expected MergeConflict");
  } catch (const Error& e) {
    REQUIRE(e.code() == errc::merge_conflict);
  }
}

TEST_CASE("merge_manifests preserves the record multiset") {
  Rng rng(99);
  for (int trial = 0; trial < 20; ++trial) {
    const int na = 1 + static_cast<int>(rng.below(40));
    const int nb = 1 + static_cast<int>(rng.below(40));
    const DatasetManifest a = fake_manifest(SensorClass::IDIAP, na, "IDIAP");
    const DatasetManifest b = fake_manifest(SensorClass::MMCBNU, nb, "MMCBNU");
    const DatasetManifest merged = merge_manifests({a, b});
    REQUIRE(merged.records.size() == static_cast<std::size_t>(na + nb));
    std::multiset<std::string> expect, got;
    for (const auto& r : a.records) expect.insert(r.sample_id);
    for (const auto& r : b.records) expect.insert(r.sample_id);
    for (const auto& r : merged.records) got.insert(r.sample_id);
    REQUIRE(expect == got);
  }
}

TEST_CASE("manifest JSON round-trips and detects checksum drift") {
  TempDir dir("mjson");
  DatasetManifest m = fake_manifest(SensorClass::FV_USM, 5, "FV_USM");
  m.created_with_seed = 1234;
  const auto path = dir / "m.json";
  save_manifest(m, path);
  const DatasetManifest back = load_manifest(path);
  REQUIRE(back == m);
  REQUIRE(back.checksum() == m.checksum());

  // Tamper with a record but keep the stored digest.
  std::string text = testutil::read_file(path);
  const auto pos = text.find("FV_USM/3");
  REQUIRE(pos != std::string::npos);
  text.replace(pos, 8, "FV_USM/9");
  testutil::write_file(path, text);
  try {
    load_manifest(path);
    FAIL("expected ChecksumError");
  } catch (const Error& e) {
    REQUIRE(e.code() == errc::checksum_mismatch);
  }
}

TEST_CASE("synthetic generator: determinism and manifest scale") {
  TempDir dir("synth");
  const auto profiles_arr = default_profiles();
  const std::vector<SyntheticSensorProfile> profiles(profiles_arr.begin(), profiles_arr.end());

  const DatasetManifest a = generate_synthetic_dataset(profiles, 2, 96, 96, 11, dir / "a");
  REQUIRE(a.records.size() == 16);
  REQUIRE(a.created_with_seed == 11);
  for (const auto& r : a.records) REQUIRE(std::filesystem::exists(r.path));

  const DatasetManifest b = generate_synthetic_dataset(profiles, 2, 96, 96, 11, dir / "b");
  for (std::size_t i = 0; i < a.records.size(); ++i) {
    REQUIRE(testutil::read_file(a.records[i].path) == testutil::read_file(b.records[i].path));
  }
}

TEST_CASE("synthetic generator rejects bad inputs") {
  TempDir dir("synthbad");
  const auto arr = default_profiles();
  std::vector<SyntheticSensorProfile> profiles(arr.begin(), arr.end());

  try {
    generate_synthetic_dataset(profiles, 1, 95, 200, 0, dir.path());
    FAIL("expected SizeTooSmall");
  } catch (const Error& e) {
    REQUIRE(e.code() == errc::size_too_small);
  }
  REQUIRE_THROWS_AS(generate_synthetic_dataset(profiles, 0, 96, 96, 0, dir.path()), Error);

  profiles[1].fpn_seed = profiles[0].fpn_seed;  // collide
  REQUIRE_THROWS_AS(generate_synthetic_dataset(profiles, 1, 96, 96, 0, dir.path()), Error);

  profiles = {arr.begin(), arr.end()};
  profiles[2].fpn_strength = 0.2;  // out of range
  REQUIRE_THROWS_AS(generate_synthetic_dataset(profiles, 1, 96, 96, 0, dir.path()), Error);
  profiles = {arr.begin(), arr.end()};
  profiles.pop_back();
  REQUIRE_THROWS_AS(generate_synthetic_dataset(profiles, 1, 96, 96, 0, dir.path()), Error);
}

TEST_CASE("synthetic signature: same-class residual correlation beats cross-class") {
  // Two profiles identical except for the fixed-pattern seed.
  SyntheticSensorProfile pa;
  pa.sensor = SensorClass::SDUMLA;
  pa.fpn_seed = 101;
  pa.fpn_strength = 0.10;
  pa.luminance_offset = 0.0;
  pa.read_noise_sigma = 1.0;
  pa.vignette_strength = 0.1;
  SyntheticSensorProfile pb = pa;
  pb.sensor = SensorClass::HKPU_FV;
  pb.fpn_seed = 909;

  const int w = 96, h = 96, per_class = 48;
  const auto fa = detail::fpn_field(pa.fpn_seed, w, h);
  const auto fb = detail::fpn_field(pb.fpn_seed, w, h);
  std::vector<GrayImage> imgs_a, imgs_b;
  for (int i = 0; i < per_class; ++i) {
    imgs_a.push_back(render_synthetic_sample(pa, fa, w, h, derive_seed(5, i)));
    imgs_b.push_back(render_synthetic_sample(pb, fb, w, h, derive_seed(5, 1000 + i)));
  }

  // Residual = image minus the grand mean image.
  std::vector<double> mean(static_cast<std::size_t>(w) * h, 0.0);
  for (const auto& img : imgs_a)
    for (std::size_t i = 0; i < mean.size(); ++i) mean[i] += img.pixels[i];
  for (const auto& img : imgs_b)
    for (std::size_t i = 0; i < mean.size(); ++i) mean[i] += img.pixels[i];
  for (auto& v : mean) v /= (2.0 * per_class);

  auto residual = [&](const GrayImage& img) {
    std::vector<double> r(mean.size());
    for (std::size_t i = 0; i < r.size(); ++i) r[i] = img.pixels[i] - mean[i];
    return r;
  };
  auto pearson = [](const std::vector<double>& x, const std::vector<double>& y) {
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      mx += x[i];
      my += y[i];
    }
    mx /= x.size();
    my /= y.size();
    double sxy = 0, sxx = 0, syy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      sxy += (x[i] - mx) * (y[i] - my);
      sxx += (x[i] - mx) * (x[i] - mx);
      syy += (y[i] - my) * (y[i] - my);
    }
    return sxy / std::sqrt(sxx * syy);
  };

  std::vector<std::vector<double>> ra, rb;
  for (const auto& img : imgs_a) ra.push_back(residual(img));
  for (const auto& img : imgs_b) rb.push_back(residual(img));

  double same_sum = 0.0;
  int same_n = 0;
  for (int i = 0; i < per_class; ++i)
    for (int j = i + 1; j < per_class; ++j) {
      same_sum += pearson(ra[i], ra[j]) + pearson(rb[i], rb[j]);
      same_n += 2;
    }
  double cross_sum = 0.0;
  int cross_n = 0;
  for (int i = 0; i < per_class; ++i)
    for (int j = 0; j < per_class; ++j) {
      cross_sum += pearson(ra[i], rb[j]);
      ++cross_n;
    }
  REQUIRE(same_n >= 50);
  REQUIRE(cross_n >= 50);
  REQUIRE(same_sum / same_n > cross_sum / cross_n);
}

TEST_CASE("synthetic corpus: nearest-class-mean on 16x16 thumbnails beats chance") {
  const auto arr = default_profiles();
  const int per_class = 15;
  const int w = 96, h = 96;

  std::vector<std::vector<double>> thumbs;  // 16*16 features
  std::vector<int> labels;
  for (int s = 0; s < kNumSensors; ++s) {
    const auto fpn = detail::fpn_field(arr[s].fpn_seed, w, h);
    for (int i = 0; i < per_class; ++i) {
      const GrayImage img = render_synthetic_sample(
          arr[s], fpn, w, h, derive_seed(77, (static_cast<std::uint64_t>(s) << 32) | i));
      const GrayImage t = resize_bilinear(img, 16, 16);
      std::vector<double> f(t.pixels.begin(), t.pixels.end());
      thumbs.push_back(std::move(f));
      labels.push_back(s);
    }
  }

  // Hold out the last 20% of each class.
  const int train_per_class = per_class - per_class / 5;
  std::vector<std::vector<double>> means(kNumSensors, std::vector<double>(256, 0.0));
  std::vector<int> counts(kNumSensors, 0);
  for (std::size_t i = 0; i < thumbs.size(); ++i) {
    const int within = static_cast<int>(i) % per_class;
    if (within >= train_per_class) continue;
    for (int k = 0; k < 256; ++k) means[labels[i]][k] += thumbs[i][k];
    ++counts[labels[i]];
  }
  for (int s = 0; s < kNumSensors; ++s)
    for (auto& v : means[s]) v /= counts[s];

  int correct = 0, total = 0;
  for (std::size_t i = 0; i < thumbs.size(); ++i) {
    const int within = static_cast<int>(i) % per_class;
    if (within < train_per_class) continue;
    int best = -1;
    double best_d = std::numeric_limits<double>::infinity();
    for (int s = 0; s < kNumSensors; ++s) {
      double d = 0;
      for (int k = 0; k < 256; ++k) {
        const double diff = thumbs[i][k] - means[s][k];
        d += diff * diff;
      }
      if (d < best_d) {
        best_d = d;
        best = s;
      }
    }
    correct += (best == labels[i]) ? 1 : 0;
    ++total;
  }
  const double accuracy = static_cast<double>(correct) / total;
  INFO("nearest-class-mean accuracy " << accuracy);
  REQUIRE(accuracy > 0.125);
}

TEST_CASE("png round-trip is bit exact") {
  TempDir dir("png");
  const GrayImage img = random_image(37, 23, 6);
  save_png(img, dir / "x.png");
  const GrayImage back = load_png(dir / "x.png");
  REQUIRE(back == img);
  // Same pixels, same bytes.
  save_png(img, dir / "y.png");
  REQUIRE(testutil::read_file(dir / "x.png") == testutil::read_file(dir / "y.png"));
}
