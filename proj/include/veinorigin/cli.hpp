#pragma once

#include <fcntl.h>
#include <unistd.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "veinorigin/checkpoint.hpp"
#include "veinorigin/clahe.hpp"
#include "veinorigin/error.hpp"
#include "veinorigin/manifest.hpp"
#include "veinorigin/metrics.hpp"
#include "veinorigin/params.hpp"
#include "veinorigin/patches.hpp"
#include "veinorigin/patchset.hpp"
#include "veinorigin/png_io.hpp"
#include "veinorigin/report.hpp"
#include "veinorigin/roi.hpp"
#include "veinorigin/split.hpp"
#include "veinorigin/stats.hpp"
#include "veinorigin/synthetic.hpp"
#include "veinorigin/train.hpp"
#include "veinorigin/zoo.hpp"

namespace veinorigin::cli {

namespace fs = std::filesystem;

inline std::pair<int, int> parse_size(const std::string& s) {
  const auto x = s.find('x');
  if (x == std::string::npos) raise(errc::invalid_argument, "size must be WxH, got " + s);
  try {
    return {std::stoi(s.substr(0, x)), std::stoi(s.substr(x + 1))};
  } catch (const std::exception&) {
    raise(errc::invalid_argument, "size must be WxH, got " + s);
  }
}

inline std::pair<int, int> parse_grid(const std::string& s) {
  auto [a, b] = parse_size(s);
  return {a, b};
}

inline std::string sanitize_id(std::string id) {
  for (auto& c : id)
    if (c == '/' || c == '\\') c = '_';
  return id;
}

/// Exclusive lock file guarding a run directory.
class RunLock {
 public:
  explicit RunLock(const fs::path& dir) : path_(dir / ".lock") {
    fs::create_directories(dir);
    fd_ = ::open(path_.c_str(), O_CREAT | O_EXCL | O_WRONLY, 0644);
    if (fd_ < 0)
      raise(errc::io_error, "run directory is locked (remove " + path_.string() + " if stale)");
  }
  ~RunLock() {
    if (fd_ >= 0) {
      ::close(fd_);
      std::error_code ec;
      fs::remove(path_, ec);
    }
  }
  RunLock(const RunLock&) = delete;
  RunLock& operator=(const RunLock&) = delete;

 private:
  fs::path path_;
  int fd_ = -1;
};

struct ProducedFiles {
  std::vector<std::string> files;
  void add(const fs::path& p) { files.push_back(p.string()); }
  void write(const fs::path& path) const {
    nlohmann::json j;
    j["schema_version"] = 1;
    j["files"] = files;
    std::ofstream out(path);
    if (!out) raise(errc::write_error, "cannot write run manifest: " + path.string());
    out << j.dump(2) << "\n";
  }
};

// ---- subcommand bodies ----

struct SynthOpts {
  int per_class = 120;
  std::string size = "96x96";
  std::uint64_t seed = 0;
  std::string out;
};

inline DatasetManifest do_synth(const SynthOpts& o, ProducedFiles* produced = nullptr) {
  const auto [w, h] = parse_size(o.size);
  const auto profiles = default_profiles();
  const fs::path out_dir = fs::path(o.out) / "images";
  DatasetManifest m = generate_synthetic_dataset(
      std::vector<SyntheticSensorProfile>(profiles.begin(), profiles.end()), o.per_class, w, h,
      o.seed, out_dir);
  const fs::path manifest_dir = fs::path(o.out) / "manifests";
  fs::create_directories(manifest_dir);
  save_manifest(m, manifest_dir / "manifest.json");
  if (produced) {
    for (const auto& r : m.records) produced->add(r.path);
    produced->add(manifest_dir / "manifest.json");
  }
  return m;
}

struct IngestOpts {
  std::string root;
  std::string sensor;
  std::string kind = "raw";
  std::string out = "manifest.json";
};

inline void do_ingest(const IngestOpts& o) {
  std::string root = o.root;
  if (root.empty()) {
    if (const char* env = std::getenv("VEIN_ORIGIN_DATA_ROOT")) root = env;
  }
  if (root.empty())
    raise(errc::invalid_argument, "--root is required (or set VEIN_ORIGIN_DATA_ROOT)");
  const ScanResult scan = scan_directory(root, parse_sensor(o.sensor), parse_kind(o.kind));
  for (const auto& issue : scan.skipped)
    std::cerr << "skipped " << issue.path << ": " << issue.reason << "\n";
  const ValidationReport v = validate_manifest(scan.manifest);
  if (!v.valid) {
    for (const auto& issue : v.issues)
      std::cerr << "invalid: " << issue.sample_id << " " << issue.detail << "\n";
    raise(errc::invalid_argument, "scanned manifest failed validation");
  }
  save_manifest(scan.manifest, o.out);
  std::cout << "ingested " << scan.manifest.records.size() << " samples -> " << o.out << "\n";
}

struct PreprocessOpts {
  std::string manifest;
  std::string out;
  bool use_clahe = false;
  double clahe_clip = 2.0;
  std::string tile_grid = "8x8";
  bool use_roi = false;
  int blur_radius = 3;
  int margin = 2;
  std::string resize;  // WxH, empty = keep
  int patch = kPatchSize;
};

inline PatchSet do_preprocess(const PreprocessOpts& o, ProducedFiles* produced = nullptr) {
  const DatasetManifest m = load_manifest(o.manifest);
  if (m.records.empty()) raise(errc::empty_dataset, "manifest has no records");
  const auto [rows, cols] = o.tile_grid.empty() ? std::pair<int, int>{8, 8} : parse_grid(o.tile_grid);
  const fs::path out_dir = fs::path(o.out);
  fs::create_directories(out_dir / "patches");

  PatchSet ps;
  ps.patch_size = o.patch;
  for (const auto& rec : m.records) {
    GrayImage img = load_png(rec.path);
    SampleKind kind = rec.kind;
    if (o.use_roi) {
      img = extract_roi(img, {o.blur_radius, o.margin}).first;
      kind = SampleKind::roi;
    }
    if (o.use_clahe) img = clahe(img, o.clahe_clip, rows, cols);
    if (!o.resize.empty()) {
      const auto [rw, rh] = parse_size(o.resize);
      img = resize_bilinear(img, rw, rh);
    }
    const std::vector<Patch> patches = extract_patches(img, rec.sample_id, o.patch);
    for (const auto& p : patches) {
      PatchRecord pr;
      pr.patch_id = rec.sample_id + "#y" + std::to_string(p.y) + "x" + std::to_string(p.x);
      pr.source_id = rec.sample_id;
      pr.sensor = rec.sensor;
      pr.kind = kind;
      pr.x = p.x;
      pr.y = p.y;
      const fs::path file =
          out_dir / "patches" /
          (sanitize_id(rec.sample_id) + "_y" + std::to_string(p.y) + "x" + std::to_string(p.x) +
           ".png");
      save_png(p.pixels, file);
      pr.path = file.string();
      if (produced) produced->add(file);
      ps.patches.push_back(std::move(pr));
    }
  }
  const fs::path ps_path = out_dir / "patchset.json";
  save_patchset(ps, ps_path);
  if (produced) produced->add(ps_path);
  return ps;
}

struct TrainOpts {
  std::string arch = "fv2021";
  std::string patchset;  // --manifest
  std::string splits;
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::optional<int> epochs;
  std::optional<int> batch_size;
  bool deterministic = false;
};

inline fs::path do_train(const TrainOpts& o, ProducedFiles* produced = nullptr) {
  TrainConfig cfg;
  if (!o.config.empty()) cfg = parse_train_config(o.config);
  if (o.seed) cfg.seed = *o.seed;
  if (o.epochs) cfg.max_epochs = *o.epochs;
  if (o.batch_size) cfg.batch_size = *o.batch_size;
  if (o.deterministic) cfg.reshuffle_each_epoch = false;

  const ArchitectureConfig arch = build_architecture(o.arch);
  const OptimizerConfig opt = resolve_optimizer(cfg, o.arch);
  std::cerr << "effective config (flag > file > default):\n" << format_train_config(cfg, opt);

  const PatchSet ps = load_patchset(o.patchset);
  const SplitAssignment split = load_split(o.splits);
  LabeledPatches<float> train_set = load_labeled_patches<float>(ps, split.train_set());
  LabeledPatches<float> val_set = load_labeled_patches<float>(ps, split.val_set());
  if (train_set.count() == 0) raise(errc::too_few_samples, "empty training split");

  Network<float> net(arch, derive_seed(cfg.seed, 0x1217u));
  const TrainingRun run = train(net, train_set, val_set, cfg, opt);

  fs::create_directories(o.out);
  const fs::path ckpt = fs::path(o.out) / "best.ckpt";
  save_checkpoint(net, ckpt);
  const fs::path hist = fs::path(o.out) / "history.csv";
  write_history_csv(run, hist);
  if (produced) {
    produced->add(ckpt);
    produced->add(hist);
  }
  std::cout << "trained " << o.arch << " for " << run.history.size() << " epoch(s)";
  if (run.best_epoch >= 0)
    std::cout << ", best epoch " << run.best_epoch << " (val_loss "
              << run.history[run.best_epoch].val_loss << ")";
  std::cout << "\n";
  return ckpt;
}

struct EvalOpts {
  std::string weights;
  std::string patchset;  // --manifest
  std::string splits;
  std::string agg = "patch";
  std::string out;
  std::uint64_t seed = 0;
};

inline EvalReport do_eval(const EvalOpts& o, ProducedFiles* produced = nullptr) {
  if (o.agg != "patch" && o.agg != "sample")
    raise(errc::invalid_argument, "--agg must be patch or sample");
  const std::string arch_name = checkpoint_arch_name(o.weights);
  const ArchitectureConfig arch = build_architecture(arch_name);
  Network<float> net(arch, 0);
  load_checkpoint(net, o.weights);

  const PatchSet ps = load_patchset(o.patchset);
  const SplitAssignment split = load_split(o.splits);
  const LabeledPatches<float> test_set = load_labeled_patches<float>(ps, split.test_set());
  if (test_set.count() == 0) raise(errc::too_few_samples, "empty test split");

  std::string data_kind;
  for (const auto& p : ps.patches) {
    const std::string k(kind_name(p.kind));
    if (data_kind.empty()) data_kind = k;
    else if (data_kind != k) data_kind = "mixed";
  }

  ScoreMatrix sm;
  sm.num_classes = net.num_classes();
  sm.labels = test_set.labels;
  sm.scores.resize(static_cast<std::size_t>(test_set.count()) * sm.num_classes);
  const int bs = 64;
  const std::size_t stride = static_cast<std::size_t>(test_set.x.h) * test_set.x.w;
  for (int b = 0; b < test_set.count(); b += bs) {
    const int e = std::min(test_set.count(), b + bs);
    Tensor<float> batch(e - b, test_set.x.h, test_set.x.w, 1);
    std::copy_n(test_set.x.data.data() + static_cast<std::size_t>(b) * stride,
                static_cast<std::size_t>(e - b) * stride, batch.data.data());
    const Tensor<float> probs = net.forward(batch);
    for (int r = 0; r < probs.n; ++r)
      for (int c = 0; c < sm.num_classes; ++c)
        sm.at(b + r, c) = static_cast<double>(probs.data[static_cast<std::size_t>(r) * sm.num_classes + c]);
  }

  std::string aggregation = "patch";
  ScoreMatrix final_scores = sm;
  if (o.agg == "sample") {
    final_scores = aggregate_by_sample(sm, test_set.source_ids);
    aggregation = "sample_vote";
  }

  const EvalReport rep =
      make_eval_report(final_scores, aggregation, arch_name, o.seed, data_kind);
  const PerSensorReport psr = per_sensor_report(final_scores);

  fs::create_directories(o.out);
  const fs::path rep_path = fs::path(o.out) / "eval_report.json";
  save_report(rep, rep_path);
  save_per_sensor_csv(psr, fs::path(o.out) / "per_sensor.csv");
  save_per_sensor_json(psr, fs::path(o.out) / "per_sensor.json");
  save_roc_points_csv(final_scores, fs::path(o.out) / "roc_points.csv");
  if (produced) {
    produced->add(rep_path);
    produced->add(fs::path(o.out) / "per_sensor.csv");
    produced->add(fs::path(o.out) / "per_sensor.json");
    produced->add(fs::path(o.out) / "roc_points.csv");
  }
  std::cout << print_summary(rep);
  return rep;
}

// ---- entry point ----

inline int run(const std::vector<std::string>& args) {
  CLI::App app{"Finger-vein sensor origin identification pipeline"};
  app.require_subcommand(1);

  // synth
  SynthOpts synth_opts;
  auto* synth = app.add_subcommand("synth", "Generate the synthetic 8-sensor corpus");
  synth->add_option("--per-class", synth_opts.per_class, "Samples per sensor class")
      ->capture_default_str();
  synth->add_option("--size", synth_opts.size, "Image size WxH (min 96x96)")
      ->capture_default_str();
  synth->add_option("--seed", synth_opts.seed, "Generator seed")->capture_default_str();
  synth->add_option("--out", synth_opts.out, "Output directory")->required();

  // ingest
  IngestOpts ingest_opts;
  auto* ingest = app.add_subcommand("ingest", "Scan a directory of real samples into a manifest");
  ingest->add_option("--root", ingest_opts.root,
                     "Sample directory (default: $VEIN_ORIGIN_DATA_ROOT)");
  ingest->add_option("--sensor", ingest_opts.sensor, "Sensor class name")->required();
  ingest->add_option("--kind", ingest_opts.kind, "raw or roi")->capture_default_str();
  ingest->add_option("--out", ingest_opts.out, "Manifest output path")->capture_default_str();

  // stats
  std::string stats_manifest, stats_out, stats_hist_dir;
  auto* stats = app.add_subcommand("stats", "Per-sensor luminance/variance distribution table");
  stats->add_option("--manifest", stats_manifest, "Dataset manifest")->required();
  stats->add_option("--out", stats_out, "Output CSV path")->required();
  stats->add_option("--histograms", stats_hist_dir,
                    "Also write one bin,count CSV per sample into this directory");

  // preprocess
  PreprocessOpts pre_opts;
  auto* pre = app.add_subcommand("preprocess", "ROI/CLAHE/resize and patch extraction");
  pre->add_option("--manifest", pre_opts.manifest, "Dataset manifest")->required();
  pre->add_option("--out", pre_opts.out, "Output directory")->required();
  pre->add_flag("--clahe", pre_opts.use_clahe, "Apply CLAHE");
  pre->add_option("--clahe-clip", pre_opts.clahe_clip, "CLAHE clip limit")->capture_default_str();
  pre->add_option("--tile-grid", pre_opts.tile_grid, "CLAHE tile grid RxC")->capture_default_str();
  pre->add_flag("--roi", pre_opts.use_roi, "Crop to the finger region first");
  pre->add_option("--blur-radius", pre_opts.blur_radius, "ROI Gaussian blur radius")
      ->capture_default_str();
  pre->add_option("--margin", pre_opts.margin, "ROI inward margin")->capture_default_str();
  pre->add_option("--resize", pre_opts.resize, "Resize to WxH before patching");
  pre->add_option("--patch", pre_opts.patch, "Patch size")->capture_default_str();

  // split
  std::string split_manifest, split_out;
  std::uint64_t split_seed = 0;
  auto* split_cmd = app.add_subcommand("split", "Deterministic 70/10/20 train/val/test split");
  split_cmd->add_option("--manifest", split_manifest, "Dataset manifest")->required();
  split_cmd->add_option("--seed", split_seed, "Shuffle seed")->capture_default_str();
  split_cmd->add_option("--out", split_out, "Split output path")->required();

  // params
  std::string params_arch;
  bool params_all = false;
  std::string params_out, params_emit;
  bool params_shapes = false;
  auto* params_cmd = app.add_subcommand("params", "Parameter counts and complexity table");
  params_cmd->add_option("--arch", params_arch, "Architecture name");
  params_cmd->add_flag("--all", params_all, "All six reference architectures");
  params_cmd->add_option("--out", params_out, "Also write the table as CSV");
  params_cmd->add_flag("--shapes", params_shapes, "Print per-layer output shapes");
  params_cmd->add_option("--emit", params_emit,
                         "Write the --arch configuration as a JSON graph file");

  // train
  TrainOpts train_opts;
  std::uint64_t train_seed = 0;
  int train_epochs = -1, train_batch = -1;
  auto* train_cmd = app.add_subcommand("train", "Train a model on preprocessed patches");
  train_cmd->add_option("--arch", train_opts.arch, "Architecture name")->capture_default_str();
  train_cmd->add_option("--manifest", train_opts.patchset, "Patch set manifest")->required();
  train_cmd->add_option("--splits", train_opts.splits, "Split assignment file")->required();
  train_cmd->add_option("--config", train_opts.config, "key=value training config file");
  train_cmd->add_option("--out", train_opts.out, "Output directory")->required();
  auto* tso = train_cmd->add_option("--seed", train_seed, "Training seed (overrides config)");
  auto* teo = train_cmd->add_option("--epochs", train_epochs, "Max epochs (overrides config)");
  auto* tbo = train_cmd->add_option("--batch-size", train_batch, "Batch size (overrides config)");
  train_cmd->add_flag("--deterministic", train_opts.deterministic,
                      "Force the reproducible single-permutation mode");

  // eval
  EvalOpts eval_opts;
  auto* eval_cmd = app.add_subcommand("eval", "Evaluate a checkpoint on the test split");
  eval_cmd->add_option("--weights", eval_opts.weights, "Checkpoint path")->required();
  eval_cmd->add_option("--manifest", eval_opts.patchset, "Patch set manifest")->required();
  eval_cmd->add_option("--splits", eval_opts.splits, "Split assignment file")->required();
  eval_cmd->add_option("--agg", eval_opts.agg, "patch or sample aggregation")
      ->capture_default_str();
  eval_cmd->add_option("--out", eval_opts.out, "Output directory")->required();
  eval_cmd->add_option("--seed", eval_opts.seed, "Seed recorded in report metadata")
      ->capture_default_str();

  // report
  std::string report_in;
  auto* report_cmd = app.add_subcommand("report", "Print the summary table of a saved report");
  report_cmd->add_option("--in", report_in, "EvalReport JSON path")->required();

  // pipeline
  SynthOpts pl_synth;
  std::string pl_arch = "fv2021";
  std::string pl_out;
  std::uint64_t pl_seed = 0;
  int pl_epochs = 12;
  int pl_batch = 64;
  std::string pl_agg = "patch";
  std::string pl_config;
  double pl_clip = 2.0;
  std::string pl_grid = "8x8";
  int pl_patch = kPatchSize;
  bool pl_deterministic = false;
  auto* pl = app.add_subcommand("pipeline",
                                "synth -> preprocess -> split -> train -> eval in one run");
  pl->add_option("--per-class", pl_synth.per_class, "Samples per sensor class")
      ->capture_default_str();
  pl->add_option("--size", pl_synth.size, "Synthetic image size WxH")->capture_default_str();
  pl->add_option("--arch", pl_arch, "Architecture name")->capture_default_str();
  pl->add_option("--seed", pl_seed, "Seed for every stage")->capture_default_str();
  pl->add_option("--out", pl_out, "Run directory")->required();
  pl->add_option("--epochs", pl_epochs, "Max training epochs")->capture_default_str();
  pl->add_option("--batch-size", pl_batch, "Batch size")->capture_default_str();
  pl->add_option("--agg", pl_agg, "patch or sample aggregation")->capture_default_str();
  pl->add_option("--config", pl_config, "key=value training config file");
  pl->add_option("--clahe-clip", pl_clip, "CLAHE clip limit")->capture_default_str();
  pl->add_option("--tile-grid", pl_grid, "CLAHE tile grid RxC")->capture_default_str();
  pl->add_option("--patch", pl_patch, "Patch size")->capture_default_str();
  pl->add_flag("--deterministic", pl_deterministic,
               "Force the reproducible single-permutation mode");

  std::vector<const char*> argv;
  argv.push_back("vein-origin");
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp& e) {
    std::cout << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    std::cerr << e.what() << "\n";
    std::cerr << "run with --help for usage\n";
    return 1;
  }

  try {
    if (*synth) {
      do_synth(synth_opts);
      std::cout << "wrote synthetic corpus under " << synth_opts.out << "\n";
    } else if (*ingest) {
      do_ingest(ingest_opts);
    } else if (*stats) {
      const DatasetManifest m = load_manifest(stats_manifest);
      write_stats_csv(dataset_stats(m), stats_out);
      if (!stats_hist_dir.empty()) {
        fs::create_directories(stats_hist_dir);
        for (const auto& rec : m.records)
          write_histogram_csv(histogram(load_png(rec.path)),
                              fs::path(stats_hist_dir) / (sanitize_id(rec.sample_id) + ".csv"));
      }
      std::cout << "wrote stats -> " << stats_out << "\n";
    } else if (*pre) {
      const PatchSet ps = do_preprocess(pre_opts);
      std::cout << "wrote " << ps.patches.size() << " patches under " << pre_opts.out << "\n";
    } else if (*split_cmd) {
      const DatasetManifest m = load_manifest(split_manifest);
      const SplitAssignment s = make_splits(m, split_seed);
      save_split(s, split_out);
      std::cout << "split " << m.records.size() << " samples into " << s.train_ids.size() << "/"
                << s.val_ids.size() << "/" << s.test_ids.size() << " -> " << split_out << "\n";
    } else if (*params_cmd) {
      std::vector<std::string> names;
      if (params_all) names = architecture_names();
      else if (!params_arch.empty()) names.push_back(params_arch);
      else raise(errc::invalid_argument, "params needs --arch NAME or --all");
      const auto rows = complexity_table(names);
      std::cout << format_complexity_table(rows);
      if (params_shapes) {
        for (const auto& name : names) {
          std::cout << "\n" << name << " output shapes:\n";
          for (const auto& ns : infer_shapes(build_architecture(name)))
            std::cout << "  " << ns.id << ": " << ns.shape.h << "x" << ns.shape.w << "x"
                      << ns.shape.c << "\n";
        }
      }
      if (!params_out.empty()) write_complexity_csv(rows, params_out);
      if (!params_emit.empty()) {
        if (params_arch.empty())
          raise(errc::invalid_argument, "--emit needs --arch NAME");
        save_arch(build_architecture(params_arch), params_emit);
      }
    } else if (*train_cmd) {
      if (tso->count()) train_opts.seed = train_seed;
      if (teo->count()) train_opts.epochs = train_epochs;
      if (tbo->count()) train_opts.batch_size = train_batch;
      do_train(train_opts);
    } else if (*eval_cmd) {
      do_eval(eval_opts);
    } else if (*report_cmd) {
      std::cout << print_summary(load_report(report_in));
    } else if (*pl) {
      const fs::path out(pl_out);
      RunLock lock(out);
      ProducedFiles produced;

      pl_synth.seed = pl_seed;
      pl_synth.out = pl_out;
      do_synth(pl_synth, &produced);

      PreprocessOpts pre2;
      pre2.manifest = (out / "manifests" / "manifest.json").string();
      pre2.out = pl_out;
      pre2.use_clahe = true;
      pre2.clahe_clip = pl_clip;
      pre2.tile_grid = pl_grid;
      pre2.patch = pl_patch;
      do_preprocess(pre2, &produced);

      const DatasetManifest m = load_manifest(pre2.manifest);
      const SplitAssignment s = make_splits(m, pl_seed);
      fs::create_directories(out / "manifests");
      save_split(s, out / "manifests" / "split.json");
      produced.add(out / "manifests" / "split.json");

      TrainOpts t;
      t.arch = pl_arch;
      t.patchset = (out / "patchset.json").string();
      t.splits = (out / "manifests" / "split.json").string();
      t.config = pl_config;
      t.out = (out / "checkpoints").string();
      t.seed = pl_seed;
      t.epochs = pl_epochs;
      t.batch_size = pl_batch;
      t.deterministic = pl_deterministic;
      const fs::path ckpt = do_train(t, &produced);
      // history.csv lands under checkpoints/; move it next to the reports
      fs::create_directories(out / "reports");
      fs::rename(out / "checkpoints" / "history.csv", out / "reports" / "history.csv");
      for (auto& f : produced.files)
        if (f == (out / "checkpoints" / "history.csv").string())
          f = (out / "reports" / "history.csv").string();

      EvalOpts e;
      e.weights = ckpt.string();
      e.patchset = t.patchset;
      e.splits = t.splits;
      e.agg = pl_agg;
      e.out = (out / "reports").string();
      e.seed = pl_seed;
      do_eval(e, &produced);

      produced.add(out / "run_manifest.json");
      produced.write(out / "run_manifest.json");
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    switch (e.code()) {
      case errc::io_error:
      case errc::write_error:
      case errc::divergence:
        return 2;
      default:
        return 1;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}

inline int run(int argc, char** argv) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return run(args);
}

}  // namespace veinorigin::cli
