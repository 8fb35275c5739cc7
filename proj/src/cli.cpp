#include "petprep/cli.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <iostream>
#include <limits>
#include <mutex>
#include <optional>
#include <thread>

#include <CLI11.hpp>
#include <json.hpp>
#include <spdlog/sinks/stdout_sinks.h>
#include <spdlog/spdlog.h>

#include "petprep/augment.hpp"
#include "petprep/dataset.hpp"
#include "petprep/metrics.hpp"
#include "petprep/nifti.hpp"

namespace petprep::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

/// Usage problems detected after CLI11 parsing (bad ranges, etc.).
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::shared_ptr<spdlog::logger> logger() {
  static std::once_flag once;
  static std::shared_ptr<spdlog::logger> log;
  std::call_once(once, [] {
    log = std::make_shared<spdlog::logger>("petprep", std::make_shared<spdlog::sinks::stderr_sink_mt>());
    log->set_pattern("[petprep] [%l] %v");
  });
  const char *env = std::getenv("PETPREP_LOG");
  const std::string level = env != nullptr ? env : "info";
  log->set_level(level == "debug" ? spdlog::level::debug
                 : level == "error" ? spdlog::level::err
                                    : spdlog::level::info);
  return log;
}

/// Runs work(i) for i in [0, n) on up to `jobs` threads; rethrows the lowest-index failure.
template <typename Fn> void parallel_for(std::size_t n, std::size_t jobs, Fn &&work) {
  std::vector<std::exception_ptr> failures(n);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        work(i);
      } catch (...) {
        failures[i] = std::current_exception();
      }
    }
  };
  const std::size_t threads = std::clamp<std::size_t>(jobs, 1, std::max<std::size_t>(n, 1));
  std::vector<std::jthread> pool;
  for (std::size_t t = 1; t < threads; ++t) {
    pool.emplace_back(worker);
  }
  worker();
  pool.clear();
  for (auto &f : failures) {
    if (f) {
      std::rethrow_exception(f);
    }
  }
}

[[noreturn]] void case_error(const std::string &case_id, const Error &e) {
  throw Error(e.code(), "case " + case_id + ": " + e.what());
}

void require_file(const std::string &case_id, const char *what, const fs::path &p) {
  std::error_code ec;
  if (!fs::is_regular_file(p, ec)) {
    throw Error(ErrorCode::FileNotFound, "case " + case_id + ": " + what + " " + p.string());
  }
}

void require_case_files(const DatasetManifest &m) {
  for (const auto &e : m.entries) {
    require_file(e.case_id, "pet_path", e.pet_path);
    require_file(e.case_id, "ct_path", e.ct_path);
    require_file(e.case_id, "mask_path", e.mask_path);
  }
}

void ensure_dir(const fs::path &dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) {
    throw Error(ErrorCode::IoError, "cannot create directory " + dir.string());
  }
}

void write_text(const fs::path &path, const std::string &text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << text;
  if (!out) {
    throw Error(ErrorCode::IoError, "cannot write " + path.string());
  }
}

std::string shortest(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

json optional_number(const std::optional<double> &v) {
  return v ? json(*v) : json(nullptr);
}

// ---------------------------------------------------------------- split

struct SplitArgs {
  std::string manifest;
  double test_fraction = 0.0;
  std::uint64_t seed = 0;
  std::string out_train;
  std::string out_test;
};

void run_split(const SplitArgs &a, std::ostream &out) {
  if (!(a.test_fraction > 0.0 && a.test_fraction < 1.0)) {
    throw UsageError("--test-fraction must lie strictly between 0 and 1");
  }
  const DatasetManifest m = load_manifest(a.manifest);
  const SplitResult split = stratified_split(m, a.test_fraction, a.seed);
  save_manifest(select_cases(m, split.train), a.out_train);
  save_manifest(select_cases(m, split.test), a.out_test);
  logger()->info("split seed {}: {} train / {} test", a.seed, split.train.size(), split.test.size());
  out << "bin,train,test\n";
  for (const auto &b : split.bins) {
    out << b.label << ',' << b.train << ',' << b.test << '\n';
  }
  out << "total," << split.train.size() << ',' << split.test.size() << '\n';
}

// ---------------------------------------------------------------- preprocess / augment

struct PipelineArgs {
  std::string config;
  std::string manifest;
  std::string out_dir;
  std::size_t replicates = 1;
  std::optional<std::uint64_t> seed;
  std::size_t jobs = 1;
};

struct LoadedCase {
  Volume pet;
  Volume ct;
  LabelMask mask;
};

LoadedCase load_case(const ManifestEntry &e) {
  try {
    return {nifti::read_volume(e.pet_path), nifti::read_volume(e.ct_path),
            nifti::read_mask(e.mask_path)};
  } catch (const Error &err) {
    case_error(e.case_id, err);
  }
}

void run_preprocess(const PipelineArgs &a, std::ostream &out) {
  const PipelineConfig cfg = load_pipeline_config(a.config);
  const DatasetManifest m = load_manifest(a.manifest);
  require_case_files(m);
  const fs::path dir(a.out_dir);
  ensure_dir(dir);
  const std::string digest = config_digest(cfg);
  logger()->info("preprocess: {} cases, config sha256 {}, master_seed {}", m.entries.size(), digest,
                 cfg.master_seed);

  DatasetManifest written = m;
  parallel_for(m.entries.size(), a.jobs, [&](std::size_t i) {
    const auto &e = m.entries[i];
    try {
      const LoadedCase c = load_case(e);
      const CaseChannels p = preprocess(c.pet, c.ct, c.mask, cfg);
      auto &w = written.entries[i];
      w.pet_path = dir / (e.case_id + "_pet.nii.gz");
      w.ct_path = dir / (e.case_id + "_ct.nii.gz");
      w.mask_path = dir / (e.case_id + "_mask.nii.gz");
      nifti::write_volume(p.pet, w.pet_path);
      nifti::write_volume(p.ct, w.ct_path);
      nifti::write_mask(p.mask, w.mask_path);
      logger()->debug("preprocessed {}", e.case_id);
    } catch (const Error &err) {
      if (std::string_view(err.what()).find("case " + e.case_id) != std::string_view::npos) {
        throw;
      }
      case_error(e.case_id, err);
    }
  });
  save_manifest(written, dir / "manifest.csv");
  out << "preprocessed " << m.entries.size() << " cases into " << dir.string() << '\n';
}

void run_augment(const PipelineArgs &a, std::ostream &out) {
  if (a.replicates == 0) {
    throw UsageError("--replicates must be at least 1");
  }
  PipelineConfig cfg = load_pipeline_config(a.config);
  if (a.seed) {
    cfg.master_seed = *a.seed;
  }
  const DatasetManifest m = load_manifest(a.manifest);
  require_case_files(m);
  const fs::path dir(a.out_dir);
  ensure_dir(dir);
  const std::string digest = config_digest(cfg);
  logger()->info("augment: {} cases x {} replicates, config sha256 {}, master_seed {}",
                 m.entries.size(), a.replicates, digest, cfg.master_seed);

  const std::size_t k = a.replicates;
  DatasetManifest written;
  written.entries.resize(m.entries.size() * k);
  parallel_for(m.entries.size(), a.jobs, [&](std::size_t i) {
    const auto &e = m.entries[i];
    try {
      const LoadedCase c = load_case(e);
      for (std::size_t r = 0; r < k; ++r) {
        const AugmentedSample s = apply_pipeline(c.pet, c.ct, c.mask, cfg, e.case_id, r);
        const std::string stem = e.case_id + "_r" + std::to_string(r);
        auto &w = written.entries[i * k + r];
        w = e;
        w.case_id = stem;
        w.pet_path = dir / (stem + "_pet.nii.gz");
        w.ct_path = dir / (stem + "_ct.nii.gz");
        w.mask_path = dir / (stem + "_mask.nii.gz");
        nifti::write_volume(s.pet, w.pet_path);
        nifti::write_volume(s.ct, w.ct_path);
        nifti::write_mask(s.mask, w.mask_path);
        write_text(dir / (stem + ".json"), provenance_json(s, digest));
        logger()->debug("augmented {}", stem);
      }
    } catch (const Error &err) {
      if (std::string_view(err.what()).find("case " + e.case_id) != std::string_view::npos) {
        throw;
      }
      case_error(e.case_id, err);
    }
  });
  save_manifest(written, dir / "manifest.csv");
  out << "wrote " << written.entries.size() << " augmented samples into " << dir.string() << '\n';
}

// ---------------------------------------------------------------- evaluate

struct EvaluateArgs {
  std::string manifest;
  std::string pred_dir;
  int connectivity = 18;
  std::string out_json;
  std::string out_csv;
  std::string config;
  std::size_t jobs = 1;
};

/// <case_id>.nii.gz, then <case_id>.nii, then the ground-truth file name.
fs::path find_prediction(const fs::path &dir, const ManifestEntry &e) {
  for (const fs::path &candidate : {dir / (e.case_id + ".nii.gz"), dir / (e.case_id + ".nii"),
                                   dir / e.mask_path.filename()}) {
    std::error_code ec;
    if (fs::is_regular_file(candidate, ec)) {
      return candidate;
    }
  }
  throw Error(ErrorCode::FileNotFound, "case " + e.case_id + ": no prediction in " + dir.string() +
                                           " (tried " + e.case_id + ".nii.gz, " + e.case_id +
                                           ".nii, " + e.mask_path.filename().string() + ")");
}

void run_evaluate(const EvaluateArgs &a, std::ostream &out) {
  Connectivity conn{};
  try {
    conn = connectivity_from_int(a.connectivity);
  } catch (const Error &e) {
    throw UsageError(e.what());
  }
  std::optional<std::string> digest;
  if (!a.config.empty()) {
    digest = config_digest(load_pipeline_config(a.config));
  }
  const DatasetManifest m = load_manifest(a.manifest);
  if (m.entries.empty()) {
    throw Error(ErrorCode::EmptyCohort, a.manifest + " lists no cases");
  }
  const fs::path pred_dir(a.pred_dir);
  std::vector<fs::path> preds;
  for (const auto &e : m.entries) {
    require_file(e.case_id, "mask_path", e.mask_path);
    preds.push_back(find_prediction(pred_dir, e));
  }

  logger()->info("evaluate: {} cases, connectivity {}, config sha256 {}", m.entries.size(),
                 a.connectivity, digest.value_or("none"));

  std::vector<CaseMetrics> metrics(m.entries.size());
  parallel_for(m.entries.size(), a.jobs, [&](std::size_t i) {
    const auto &e = m.entries[i];
    try {
      metrics[i] = evaluate_case(nifti::read_mask(preds[i]), nifti::read_mask(e.mask_path), conn,
                                 e.case_id);
    } catch (const Error &err) {
      case_error(e.case_id, err);
    }
  });
  const CohortReport cohort = aggregate_cohort(metrics);
  if (cohort.all_negative()) {
    logger()->warn("AllNegativeCohort: no case has ground-truth foreground; Dice and FNvol are undefined");
  }

  json cases = json::array();
  for (const auto &c : metrics) {
    cases.push_back({{"case_id", c.case_id},
                     {"dice", optional_number(c.dice)},
                     {"fp_vol_cm3", c.fp_vol_cm3},
                     {"fn_vol_cm3", optional_number(c.fn_vol_cm3)}});
  }
  auto fmt_opt = [](const std::optional<double> &v) { return v ? json(format_2dp(*v)) : json(nullptr); };
  const json report = {
      {"connectivity", a.connectivity},
      {"config_sha256", digest ? json(*digest) : json(nullptr)},
      {"cohort",
       {{"mean_dice_pct", optional_number(cohort.mean_dice_pct)},
        {"mean_fp_vol_cm3", cohort.mean_fp_vol_cm3},
        {"mean_fn_vol_cm3", optional_number(cohort.mean_fn_vol_cm3)},
        {"n_cases", cohort.n_cases},
        {"n_positive_cases", cohort.n_positive_cases},
        {"all_negative", cohort.all_negative()},
        {"formatted",
         {{"dice_pct", fmt_opt(cohort.mean_dice_pct)},
          {"fp_vol_cm3", format_2dp(cohort.mean_fp_vol_cm3)},
          {"fn_vol_cm3", fmt_opt(cohort.mean_fn_vol_cm3)}}}}},
      {"cases", cases}};
  write_text(a.out_json, report.dump(2) + "\n");

  auto csv_opt = [](const std::optional<double> &v, double scale) {
    return v ? format_2dp(*v * scale) : std::string();
  };
  std::string csv = "case_id,dice,fp_vol_cm3,fn_vol_cm3\n";
  for (const auto &c : metrics) {
    csv += c.case_id + ',' + csv_opt(c.dice, 100.0) + ',' + format_2dp(c.fp_vol_cm3) + ',' +
           csv_opt(c.fn_vol_cm3, 1.0) + '\n';
  }
  csv += "MEAN," + csv_opt(cohort.mean_dice_pct, 1.0) + ',' + format_2dp(cohort.mean_fp_vol_cm3) +
         ',' + csv_opt(cohort.mean_fn_vol_cm3, 1.0) + '\n';
  write_text(a.out_csv, csv);

  out << "cases " << cohort.n_cases << " (positive " << cohort.n_positive_cases << ")\n";
  out << "Dice " << (cohort.mean_dice_pct ? format_2dp(*cohort.mean_dice_pct) : "n/a")
      << " | FPvol " << format_2dp(cohort.mean_fp_vol_cm3) << " | FNvol "
      << (cohort.mean_fn_vol_cm3 ? format_2dp(*cohort.mean_fn_vol_cm3) : "n/a") << '\n';
}

// ---------------------------------------------------------------- inspect

void run_inspect(const std::string &file, std::ostream &out) {
  const Volume v = nifti::read_volume(file);
  const auto [lo, hi] = std::minmax_element(v.data().begin(), v.data().end());
  const auto fg = std::count_if(v.data().begin(), v.data().end(), [](float x) { return x != 0.0f; });
  const auto &g = v.geometry();
  out << "file: " << file << '\n';
  out << "shape: " << g.shape[0] << " x " << g.shape[1] << " x " << g.shape[2] << '\n';
  out << "spacing_mm: " << shortest(g.spacing[0]) << ' ' << shortest(g.spacing[1]) << ' '
      << shortest(g.spacing[2]) << '\n';
  out << "origin_mm: " << shortest(g.origin[0]) << ' ' << shortest(g.origin[1]) << ' '
      << shortest(g.origin[2]) << '\n';
  out << "min: " << shortest(*lo) << '\n';
  out << "max: " << shortest(*hi) << '\n';
  out << "foreground_voxels: " << fg << '\n';
}

} // namespace

int run(const std::vector<std::string> &args, std::ostream &out, std::ostream &err) {
  CLI::App app{"PET/CT lesion-segmentation data toolkit", "petprep"};
  app.require_subcommand(1);

  SplitArgs split;
  auto *split_cmd = app.add_subcommand("split", "Lesion-count stratified train/test split");
  split_cmd->add_option("--manifest", split.manifest, "Input manifest CSV")->required();
  split_cmd->add_option("--test-fraction", split.test_fraction, "Test share in (0, 1)")->required();
  split_cmd->add_option("--seed", split.seed, "Shuffle seed")->required();
  split_cmd->add_option("--out-train", split.out_train, "Train manifest output")->required();
  split_cmd->add_option("--out-test", split.out_test, "Test manifest output")->required();

  PipelineArgs prep;
  auto *prep_cmd = app.add_subcommand("preprocess", "Resample, clip and normalize every case");
  prep_cmd->add_option("--config", prep.config, "Pipeline config JSON")->required();
  prep_cmd->add_option("--manifest", prep.manifest, "Input manifest CSV")->required();
  prep_cmd->add_option("--out-dir", prep.out_dir, "Output directory")->required();
  prep_cmd->add_option("--jobs", prep.jobs, "Worker threads")->capture_default_str();

  PipelineArgs aug;
  std::uint64_t aug_seed = 0;
  auto *aug_cmd = app.add_subcommand("augment", "Write augmented replicates with provenance");
  aug_cmd->add_option("--config", aug.config, "Pipeline config JSON")->required();
  aug_cmd->add_option("--manifest", aug.manifest, "Input manifest CSV")->required();
  aug_cmd->add_option("--replicates", aug.replicates, "Replicates per case")->required();
  aug_cmd->add_option("--seed", aug_seed, "Master seed (overrides the config)")->required();
  aug_cmd->add_option("--out-dir", aug.out_dir, "Output directory")->required();
  aug_cmd->add_option("--jobs", aug.jobs, "Worker threads")->capture_default_str();

  EvaluateArgs eval;
  auto *eval_cmd = app.add_subcommand("evaluate", "Dice / FPvol / FNvol against ground truth");
  eval_cmd->add_option("--manifest", eval.manifest, "Manifest with ground-truth masks")->required();
  eval_cmd->add_option("--pred-dir", eval.pred_dir, "Directory of predicted masks")->required();
  eval_cmd->add_option("--connectivity", eval.connectivity, "6, 18 or 26")->capture_default_str();
  eval_cmd->add_option("--out-json", eval.out_json, "JSON report")->required();
  eval_cmd->add_option("--out-csv", eval.out_csv, "CSV report")->required();
  eval_cmd->add_option("--config", eval.config, "Pipeline config whose digest is recorded");
  eval_cmd->add_option("--jobs", eval.jobs, "Worker threads")->capture_default_str();

  std::string inspect_file;
  auto *inspect_cmd = app.add_subcommand("inspect", "Print geometry and intensity summary");
  inspect_cmd->add_option("file", inspect_file, "NIfTI file")->required();

  std::vector<std::string> owned = {"petprep"};
  owned.insert(owned.end(), args.begin(), args.end());
  std::vector<const char *> argv;
  for (const auto &s : owned) {
    argv.push_back(s.c_str());
  }

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError &e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*split_cmd) {
      run_split(split, out);
    } else if (*prep_cmd) {
      run_preprocess(prep, out);
    } else if (*aug_cmd) {
      aug.seed = aug_seed;
      run_augment(aug, out);
    } else if (*eval_cmd) {
      run_evaluate(eval, out);
    } else if (*inspect_cmd) {
      run_inspect(inspect_file, out);
    }
  } catch (const UsageError &e) {
    err << "usage error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const Error &e) {
    err << "error: " << e.what() << '\n';
    return kExitData;
  } catch (const fs::filesystem_error &e) {
    err << "error: " << e.what() << '\n';
    return kExitData;
  }
  return kExitOk;
}

int run(int argc, const char *const *argv) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) {
    args.emplace_back(argv[i]);
  }
  return run(args, std::cout, std::cerr);
}

} // namespace petprep::cli
