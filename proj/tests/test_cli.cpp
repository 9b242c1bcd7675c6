#include <catch2/catch_amalgamated.hpp>

#include <iostream>
#include <sstream>

#include "support/testutil.hpp"
#include "veinorigin/cli.hpp"

using namespace veinorigin;
using testutil::TempDir;

namespace {

struct CliResult {
  int code;
  std::string out;
  std::string err;
};

CliResult run_cli(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  auto* old_out = std::cout.rdbuf(out.rdbuf());
  auto* old_err = std::cerr.rdbuf(err.rdbuf());
  int code = -1;
  try {
    code = cli::run(args);
  } catch (...) {
    std::cout.rdbuf(old_out);
    std::cerr.rdbuf(old_err);
    throw;
  }
  std::cout.rdbuf(old_out);
  std::cerr.rdbuf(old_err);
  return {code, out.str(), err.str()};
}

}  // namespace

TEST_CASE("cli: params --all prints the complexity table") {
  const CliResult res = run_cli({"params", "--all"});
  REQUIRE(res.code == 0);
  REQUIRE(res.out.find("fv2021") != std::string::npos);
  REQUIRE(res.out.find("6 Conv + 1 FC") != std::string::npos);
  REQUIRE(res.out.find("314,216") != std::string::npos);
  REQUIRE(res.out.find("Trainable") != std::string::npos);
}

TEST_CASE("cli: params --arch with shapes and --emit") {
  TempDir dir("params");
  const CliResult res = run_cli({"params", "--arch", "fv2021", "--shapes", "--emit",
                                 (dir / "fv.json").string()});
  REQUIRE(res.code == 0);
  REQUIRE(res.out.find("stem_conv: 48x48x32") != std::string::npos);
  REQUIRE(res.out.find("b2_relu: 24x24x512") != std::string::npos);
  const ArchitectureConfig emitted = load_arch(dir / "fv.json");
  REQUIRE(emitted.name == "fv2021");
  REQUIRE(count_parameters(emitted).trainable == 311976);
}

TEST_CASE("cli: unknown architecture exits 1 and names it") {
  const CliResult res = run_cli({"train", "--arch", "nosuch", "--manifest", "x.json", "--splits",
                                 "y.json", "--out", "/tmp/zz"});
  REQUIRE(res.code == 1);
  REQUIRE(res.err.find("nosuch") != std::string::npos);
}

TEST_CASE("cli: unknown flag exits 1 with usage hint") {
  const CliResult res = run_cli({"synth", "--frobnicate", "4"});
  REQUIRE(res.code == 1);
  REQUIRE(res.err.find("--help") != std::string::npos);
}

TEST_CASE("cli: no subcommand exits 1") {
  const CliResult res = run_cli({});
  REQUIRE(res.code == 1);
}

TEST_CASE("cli: --help lists every declared flag per subcommand") {
  const std::map<std::string, std::vector<std::string>> expected = {
      {"synth", {"--per-class", "--size", "--seed", "--out"}},
      {"ingest", {"--root", "--sensor", "--kind", "--out"}},
      {"stats", {"--manifest", "--out", "--histograms"}},
      {"preprocess",
       {"--manifest", "--out", "--clahe", "--clahe-clip", "--tile-grid", "--roi", "--blur-radius",
        "--margin", "--resize", "--patch"}},
      {"split", {"--manifest", "--seed", "--out"}},
      {"params", {"--arch", "--all", "--out", "--shapes", "--emit"}},
      {"train",
       {"--arch", "--manifest", "--splits", "--config", "--out", "--seed", "--epochs",
        "--batch-size", "--deterministic"}},
      {"eval", {"--weights", "--manifest", "--splits", "--agg", "--out", "--seed"}},
      {"report", {"--in"}},
      {"pipeline",
       {"--per-class", "--size", "--arch", "--seed", "--out", "--epochs", "--batch-size", "--agg",
        "--config", "--clahe-clip", "--tile-grid", "--patch", "--deterministic"}},
  };
  for (const auto& [sub, flags] : expected) {
    const CliResult res = run_cli({sub, "--help"});
    REQUIRE(res.code == 0);
    for (const auto& flag : flags) {
      INFO(sub << " missing " << flag);
      REQUIRE(res.out.find(flag) != std::string::npos);
    }
  }
}

TEST_CASE("cli: synth then ingest, stats, split") {
  TempDir dir("cliflow");
  const std::string out = (dir / "run").string();
  CliResult res = run_cli({"synth", "--per-class", "3", "--size", "96x96", "--seed", "5", "--out",
                           out});
  REQUIRE(res.code == 0);
  REQUIRE(std::filesystem::exists(dir / "run" / "manifests" / "manifest.json"));

  const DatasetManifest m = load_manifest(dir / "run" / "manifests" / "manifest.json");
  REQUIRE(m.records.size() == 24);

  // ingest one sensor directory back
  res = run_cli({"ingest", "--root", (dir / "run" / "images" / "UTFVP").string(), "--sensor",
                 "UTFVP", "--kind", "raw", "--out", (dir / "ingested.json").string()});
  REQUIRE(res.code == 0);
  const DatasetManifest ingested = load_manifest(dir / "ingested.json");
  REQUIRE(ingested.records.size() == 3);
  REQUIRE(ingested.records[0].sensor == SensorClass::UTFVP);

  // stats over the full synthetic manifest, with per-sample histograms
  res = run_cli({"stats", "--manifest", (dir / "run" / "manifests" / "manifest.json").string(),
                 "--out", (dir / "stats.csv").string(), "--histograms",
                 (dir / "hists").string()});
  REQUIRE(res.code == 0);
  const std::string csv = testutil::read_file(dir / "stats.csv");
  REQUIRE(csv.find("sensor,metric,min,q1,median,q3,max") == 0);
  // 8 sensors x 2 metrics + header
  REQUIRE(std::count(csv.begin(), csv.end(), '\n') == 17);
  REQUIRE(std::filesystem::exists(dir / "hists" / "UTFVP_UTFVP_0000.csv"));
  const std::string hist0 = testutil::read_file(dir / "hists" / "UTFVP_UTFVP_0000.csv");
  REQUIRE(hist0.find("bin,count") == 0);

  // split
  res = run_cli({"split", "--manifest", (dir / "run" / "manifests" / "manifest.json").string(),
                 "--seed", "9", "--out", (dir / "split.json").string()});
  REQUIRE(res.code == 0);
  const SplitAssignment s = load_split(dir / "split.json");
  REQUIRE(s.train_ids.size() == 16);  // floor(0.7*24)
  REQUIRE(s.val_ids.size() == 2);
  REQUIRE(s.test_ids.size() == 6);
}

TEST_CASE("cli: ingest without --root or env is a validation failure") {
  const char* saved = std::getenv("VEIN_ORIGIN_DATA_ROOT");
  ::unsetenv("VEIN_ORIGIN_DATA_ROOT");
  const CliResult res = run_cli({"ingest", "--sensor", "UTFVP"});
  REQUIRE(res.code == 1);
  if (saved) ::setenv("VEIN_ORIGIN_DATA_ROOT", saved, 1);
}

TEST_CASE("cli: ingest falls back to VEIN_ORIGIN_DATA_ROOT") {
  TempDir dir("clienv");
  const std::string out = (dir / "run").string();
  REQUIRE(run_cli({"synth", "--per-class", "2", "--seed", "3", "--out", out}).code == 0);
  ::setenv("VEIN_ORIGIN_DATA_ROOT", (dir / "run" / "images" / "IDIAP").string().c_str(), 1);
  const CliResult res = run_cli(
      {"ingest", "--sensor", "IDIAP", "--kind", "raw", "--out", (dir / "env.json").string()});
  ::unsetenv("VEIN_ORIGIN_DATA_ROOT");
  REQUIRE(res.code == 0);
  REQUIRE(load_manifest(dir / "env.json").records.size() == 2);
}

TEST_CASE("cli: preprocess emits patches and a patch set") {
  TempDir dir("clipre");
  const std::string out = (dir / "run").string();
  REQUIRE(run_cli({"synth", "--per-class", "2", "--size", "192x96", "--seed", "4", "--out", out})
              .code == 0);
  const CliResult res =
      run_cli({"preprocess", "--manifest", (dir / "run" / "manifests" / "manifest.json").string(),
               "--out", (dir / "pre").string(), "--clahe", "--clahe-clip", "2.0", "--tile-grid",
               "8x8", "--patch", "96"});
  REQUIRE(res.code == 0);
  const PatchSet ps = load_patchset(dir / "pre" / "patchset.json");
  REQUIRE(ps.patches.size() == 16 * 2);  // 192x96 -> 2 patches each
  for (const auto& p : ps.patches) REQUIRE(std::filesystem::exists(p.path));
}

TEST_CASE("cli: pipeline end-to-end determinism at small scale") {
  TempDir dir("clipipe");
  const std::vector<std::string> base = {"pipeline", "--per-class", "6",    "--arch",
                                         "fv2021",   "--seed",      "7",    "--epochs",
                                         "2",        "--batch-size", "16"};
  auto with_out = [&](const std::string& out) {
    std::vector<std::string> args = base;
    args.push_back("--out");
    args.push_back(out);
    return args;
  };
  const CliResult a = run_cli(with_out((dir / "a").string()));
  REQUIRE(a.code == 0);
  const CliResult b = run_cli(with_out((dir / "b").string()));
  REQUIRE(b.code == 0);

  REQUIRE(testutil::read_file(dir / "a" / "reports" / "eval_report.json") ==
          testutil::read_file(dir / "b" / "reports" / "eval_report.json"));
  REQUIRE(testutil::read_file(dir / "a" / "reports" / "per_sensor.csv") ==
          testutil::read_file(dir / "b" / "reports" / "per_sensor.csv"));
  REQUIRE(testutil::read_file(dir / "a" / "reports" / "history.csv") ==
          testutil::read_file(dir / "b" / "reports" / "history.csv"));

  // exit 0 implies every declared output exists and parses
  const auto run_manifest = nlohmann::json::parse(
      testutil::read_file(dir / "a" / "run_manifest.json"));
  REQUIRE(run_manifest.at("files").size() > 0);
  for (const auto& f : run_manifest.at("files"))
    REQUIRE(std::filesystem::exists(f.get<std::string>()));
  // and the machine outputs parse against their schemas
  load_report(dir / "a" / "reports" / "eval_report.json");
  load_patchset(dir / "a" / "patchset.json");
  load_split(dir / "a" / "manifests" / "split.json");
  load_manifest(dir / "a" / "manifests" / "manifest.json");

  // summary uses the 5-decimal AUC convention
  REQUIRE(a.out.find("AUC-ROC") != std::string::npos);

  // the run lock is released afterwards
  REQUIRE_FALSE(std::filesystem::exists(dir / "a" / ".lock"));
}

TEST_CASE("cli: pipeline refuses a locked run directory") {
  TempDir dir("clilock");
  std::filesystem::create_directories(dir / "run");
  testutil::write_file(dir / "run" / ".lock", "");
  const CliResult res = run_cli({"pipeline", "--per-class", "6", "--epochs", "1", "--seed", "1",
                                 "--out", (dir / "run").string()});
  REQUIRE(res.code == 2);
  REQUIRE(res.err.find("lock") != std::string::npos);
}

TEST_CASE("cli: eval --agg sample aggregates patch scores per sample") {
  TempDir dir("cliagg");
  const std::string out = (dir / "r").string();
  REQUIRE(run_cli({"pipeline", "--per-class", "6", "--size", "192x96", "--seed", "2", "--epochs",
                   "1", "--batch-size", "16", "--out", out})
              .code == 0);
  const CliResult res = run_cli({"eval", "--weights", (dir / "r" / "checkpoints" / "best.ckpt").string(),
                                 "--manifest", (dir / "r" / "patchset.json").string(), "--splits",
                                 (dir / "r" / "manifests" / "split.json").string(), "--agg",
                                 "sample", "--out", (dir / "agg").string()});
  REQUIRE(res.code == 0);
  const EvalReport rep = load_report(dir / "agg" / "eval_report.json");
  REQUIRE(rep.sample_aggregation == "sample_vote");
  // 48 samples -> 33/4/11 split; 2 patches per sample collapse to 11 rows.
  REQUIRE(rep.confusion.total() == 11);

  const EvalReport patch_rep = load_report(dir / "r" / "reports" / "eval_report.json");
  REQUIRE(patch_rep.sample_aggregation == "patch");
  REQUIRE(patch_rep.confusion.total() == 22);
}

TEST_CASE("cli: report subcommand prints a saved summary") {
  TempDir dir("clireport");
  EvalReport rep;
  rep.macro_auc = 0.9997;
  rep.macro_precision = 0.998;
  rep.metadata.arch = "fv2021";
  rep.metadata.data_kind = "raw";
  save_report(rep, dir / "r.json");
  const CliResult res = run_cli({"report", "--in", (dir / "r.json").string()});
  REQUIRE(res.code == 0);
  REQUIRE(res.out.find("0.99970") != std::string::npos);
}
