#include "rwt/cli/app.h"

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>

#include "rwt/cli/run_config.h"
#include "rwt/common/binary_io.h"
#include "rwt/common/errors.h"
#include "rwt/io/checkpoint.h"
#include "rwt/io/dataset_io.h"
#include "rwt/model/grad_suite.h"
#include "rwt/train/cv.h"
#include "rwt/train/metrics.h"

namespace rwt::cli {
namespace fs = std::filesystem;

namespace {

class MissingFile : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Flag values that override the config file when given.
struct Overrides {
  std::string config;
  std::optional<std::string> out, data, checkpoint, variant, init;
  std::optional<std::uint64_t> seed;
  std::optional<int> workers, depth, iters;
  std::optional<double> spacing_mm;
  std::optional<long long> subjects;
};

void RequireFile(const std::string& path, const char* what) {
  if (path.empty()) throw ConfigError(std::string("no ") + what + " given");
  if (!fs::is_regular_file(path)) throw MissingFile(std::string(what) + " not found: " + path);
}

void RequireOut(const std::string& path) {
  if (path.empty()) throw ConfigError("no output path given (--out)");
}

void WriteText(const fs::path& path, const std::string& text) { io::WriteFile(path, text); }

template <typename Fn>
std::string Render(Fn&& fn) {
  std::ostringstream os;
  fn(os);
  return os.str();
}

RunConfig Resolve(const std::string& command, const Overrides& o) {
  RunConfig cfg;
  if (!o.config.empty()) {
    if (!fs::is_regular_file(o.config)) throw MissingFile("config not found: " + o.config);
    cfg.LoadIni(o.config);
  }
  if (o.out) cfg.out = *o.out;
  if (o.data) cfg.data = *o.data;
  if (o.checkpoint) cfg.checkpoint = *o.checkpoint;
  if (o.workers) cfg.workers = *o.workers;
  if (o.spacing_mm) cfg.spacing_mm = *o.spacing_mm;
  if (o.iters) cfg.train.max_iters = *o.iters;
  if (o.init) cfg.Set("train", "init", *o.init);
  if (o.depth) {
    cfg.model.temporal_depth = *o.depth;
    cfg.model.spatial_depth = *o.depth;
  }
  if (o.subjects) {
    if (*o.subjects < 1) throw ConfigError("--subjects must be at least 1");
    cfg.subjects = static_cast<std::size_t>(*o.subjects);
  }
  if (o.variant) {
    if (command == "ablate") {
      cfg.Set("run", "variants", *o.variant);
    } else {
      ApplyVariantName(cfg.model, *o.variant);
    }
  }
  if (o.seed) {
    if (command == "generate") {
      cfg.data_seed = *o.seed;
    } else {
      cfg.train.seed = *o.seed;
      cfg.fold_seed = *o.seed;
    }
  }
  if (cfg.workers < 1) throw ConfigError("workers must be at least 1");
  if (cfg.subjects < 1) throw ConfigError("subjects must be at least 1");
  if (cfg.spacing_mm && !(*cfg.spacing_mm > 0.0)) throw ConfigError("spacing_mm must be positive");
  try {
    cfg.ranges.Validate();
    cfg.model.Validate();
    cfg.train.Validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  return cfg;
}

void CheckDatasetFits(const std::vector<phantom::CineSequence>& data,
                      const model::ResRNNConfig& cfg) {
  if (data.empty()) throw ConfigError("dataset has no subjects");
  for (const auto& s : data) {
    if (static_cast<std::size_t>(s.frames) != cfg.frames) {
      throw ConfigError("dataset subject " + std::to_string(s.subject_id) + " has " +
                        std::to_string(s.frames) + " frames; model expects " +
                        std::to_string(cfg.frames));
    }
  }
}

int CmdGenerate(const RunConfig& cfg, std::ostream& out) {
  RequireOut(cfg.out);
  const fs::path path(cfg.out);
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  spdlog::info("generating {} subjects (seed {})", cfg.subjects, cfg.data_seed);
  const auto data = phantom::GenerateDataset(cfg.subjects, cfg.data_seed, cfg.ranges);
  io::WriteDataset(path, data);
  WriteText(fs::path(cfg.out + ".manifest.txt"), io::DatasetManifest(data));
  WriteText(fs::path(cfg.out + ".config.ini"), cfg.ToIni());
  out << "wrote " << data.size() << " subjects, " << data.size() * cfg.ranges.frames
      << " frames to " << cfg.out << '\n';
  return kExitOk;
}

int CmdTrain(const RunConfig& cfg, std::ostream& out) {
  RequireFile(cfg.data, "dataset (--data)");
  RequireOut(cfg.out);
  fs::create_directories(cfg.out);
  const auto data = io::ReadDataset(cfg.data);
  CheckDatasetFits(data, cfg.model);
  WriteText(fs::path(cfg.out) / "config.ini", cfg.ToIni());
  spdlog::info("training {} on {} subjects for {} iterations", ResolvedVariantName(cfg.model),
               data.size(), cfg.train.max_iters);
  const auto start = std::chrono::steady_clock::now();
  auto result = train::Train(data, cfg.model, cfg.train, [](int iter, double loss) {
    spdlog::info("iter {:6d}  loss {:.6g}", iter, loss);
  });
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  io::SaveCheckpoint(fs::path(cfg.out) / "model.rwtc", {cfg.model, result.params});
  WriteText(fs::path(cfg.out) / "loss_curve.csv",
            Render([&](std::ostream& os) { train::WriteLossCurve(os, result.loss_curve); }));
  out << "trained " << ResolvedVariantName(cfg.model) << " in " << secs << " s; final loss "
      << result.loss_curve.back().second << "; checkpoint " << (fs::path(cfg.out) / "model.rwtc").string()
      << '\n';
  return kExitOk;
}

void WriteReport(const fs::path& dir, const std::string& stem, const train::MetricsReport& r) {
  WriteText(dir / (stem + ".csv"),
            Render([&](std::ostream& os) { train::WriteRegionTable(os, r); }));
  WriteText(dir / (stem + "_frames.csv"),
            Render([&](std::ostream& os) { train::WriteFrameCurve(os, r); }));
}

int CmdEval(RunConfig cfg, std::ostream& out) {
  RequireFile(cfg.data, "dataset (--data)");
  RequireFile(cfg.checkpoint, "checkpoint (--checkpoint)");
  RequireOut(cfg.out);
  fs::create_directories(cfg.out);
  const auto ckpt = io::LoadCheckpoint(cfg.checkpoint);
  cfg.model = ckpt.config;
  const auto data = io::ReadDataset(cfg.data);
  CheckDatasetFits(data, cfg.model);
  WriteText(fs::path(cfg.out) / "config.ini", cfg.ToIni());
  const auto report = train::Evaluate(ckpt.params, cfg.model, data, cfg.spacing_mm);
  WriteReport(cfg.out, "metrics", report);
  out << Render([&](std::ostream& os) { train::WriteRegionTable(os, report); });
  return kExitOk;
}

int CmdAblate(const RunConfig& cfg, std::ostream& out) {
  RequireFile(cfg.data, "dataset (--data)");
  RequireOut(cfg.out);
  if (cfg.variants.empty()) throw ConfigError("no variants to compare");
  std::vector<model::ResRNNConfig> models;
  for (const auto& name : cfg.variants) {
    model::ResRNNConfig m = cfg.model;
    ApplyVariantName(m, name);
    models.push_back(m);
  }
  fs::create_directories(cfg.out);
  const auto data = io::ReadDataset(cfg.data);
  CheckDatasetFits(data, cfg.model);
  WriteText(fs::path(cfg.out) / "config.ini", cfg.ToIni());
  const auto folds = train::FiveFold(data, cfg.fold_seed);

  std::vector<std::string> titles;
  std::vector<train::MetricsReport> reports;
  for (std::size_t k = 0; k < models.size(); ++k) {
    const std::string name = cfg.variants[k];
    spdlog::info("cross-validating {} ({} folds, {} workers)", name, folds.size(), cfg.workers);
    train::CvOptions options;
    options.workers = cfg.workers;
    options.spacing_mm = cfg.spacing_mm;
    options.progress = [&name](int fold, int iter, double loss) {
      spdlog::debug("{} fold {} iter {:6d} loss {:.6g}", name, fold, iter, loss);
    };
    auto cv = train::RunCv(data, folds, models[k], cfg.train, options);
    WriteReport(cfg.out, "metrics_" + name, cv.report);
    for (std::size_t f = 0; f < cv.loss_curves.size(); ++f) {
      WriteText(fs::path(cfg.out) / ("loss_" + name + "_fold" + std::to_string(f) + ".csv"),
                Render([&](std::ostream& os) { train::WriteLossCurve(os, cv.loss_curves[f]); }));
    }
    spdlog::info("{}: mean MAE {:.5f} normalized ({:.3f} px)", name, cv.report.MeanMae(),
                 cv.report.MeanMae() * train::kPixelsPerUnit);
    const bool base = name == ResolvedVariantName(models[k]) && models[k].spatial_rnn;
    titles.push_back(base ? std::string(model::VariantTitle(models[k].variant)) : name);
    reports.push_back(std::move(cv.report));
  }
  const std::string table =
      Render([&](std::ostream& os) { train::WriteComparisonTable(os, titles, reports); });
  WriteText(fs::path(cfg.out) / "ablation.csv", table);
  out << table;
  return kExitOk;
}

int CmdGradcheck(const RunConfig& cfg, std::ostream& out) {
  model::ResRNNConfig toy = model::ResRNNConfig::Toy();
  const auto reports = model::ModelGradCheck(toy, cfg.train.seed);
  bool ok = true;
  std::ostringstream text;
  for (const auto& r : reports) {
    const bool pass = r.result.Passed(cfg.gradcheck_tol);
    ok = ok && pass;
    text << (pass ? "PASS " : "FAIL ") << r.variant << " max_rel_error=" << r.result.max_rel_error
         << " worst=" << r.worst_param << '[' << r.result.worst_index << ']' << '\n';
  }
  text << (ok ? "gradcheck passed" : "gradcheck FAILED") << " (tolerance " << cfg.gradcheck_tol
       << ")\n";
  if (!cfg.out.empty()) {
    fs::create_directories(cfg.out);
    WriteText(fs::path(cfg.out) / "gradcheck.txt", text.str());
    WriteText(fs::path(cfg.out) / "config.ini", cfg.ToIni());
  }
  out << text.str();
  return ok ? kExitOk : kExitRuntime;
}

}  // namespace

void ConfigureLogging() {
  static bool configured = false;
  if (!configured) {
    auto logger = spdlog::stderr_color_mt("rwt");
    logger->set_pattern("[%H:%M:%S.%e] [%^%l%$] %v");
    spdlog::set_default_logger(logger);
    configured = true;
  }
  spdlog::level::level_enum level = spdlog::level::info;
  if (const char* env = std::getenv("RWT_LOG_LEVEL")) {
    level = spdlog::level::from_str(env);
    if (level == spdlog::level::off && std::string_view(env) != "off") {
      level = spdlog::level::info;
      spdlog::warn("ignoring unknown RWT_LOG_LEVEL '{}'", env);
    }
  }
  spdlog::set_level(level);
}

int RunCli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  ConfigureLogging();
  CLI::App app{"Regional wall thickness estimation with ResRNN on synthetic cine phantoms", "rwt"};
  app.require_subcommand(1);
  Overrides o;

  auto add_common = [&o](CLI::App* sub) {
    sub->add_option("--config", o.config, "INI configuration file");
    sub->add_option("--out", o.out, "output file (generate) or directory");
    sub->add_option("--seed", o.seed, "dataset seed (generate) or training and fold seed");
    sub->add_option("--workers", o.workers, "parallel fold workers");
  };
  auto* gen = app.add_subcommand("generate", "write a phantom dataset and manifest");
  add_common(gen);
  gen->add_option("--subjects", o.subjects, "number of subjects");

  auto add_model = [&o](CLI::App* sub) {
    sub->add_option("--variant", o.variant,
                    "cnn, rnn-plain, rnn-circle, resrnn-plain, resrnn-circle, trnn-plain, "
                    "trnn-circle (ablate: comma list)");
    sub->add_option("--depth", o.depth, "circle depth for both runners");
    sub->add_option("--iters", o.iters, "training iterations");
    sub->add_option("--init", o.init, "uniform or zero");
    sub->add_option("--data", o.data, "dataset file");
    sub->add_option("--spacing-mm", o.spacing_mm, "pixel spacing for mm columns");
  };
  auto* trn = app.add_subcommand("train", "train one model on a dataset");
  add_common(trn);
  add_model(trn);
  auto* ev = app.add_subcommand("eval", "evaluate a checkpoint on a dataset");
  add_common(ev);
  ev->add_option("--data", o.data, "dataset file");
  ev->add_option("--checkpoint", o.checkpoint, "checkpoint file");
  ev->add_option("--spacing-mm", o.spacing_mm, "pixel spacing for mm columns");
  auto* abl = app.add_subcommand("ablate", "five-fold comparison of the model variants");
  add_common(abl);
  add_model(abl);
  auto* gc = app.add_subcommand("gradcheck", "finite-difference check on a toy model");
  add_common(gc);

  std::vector<std::string> argv_store{"rwt"};
  argv_store.insert(argv_store.end(), args.begin(), args.end());
  std::vector<const char*> argv;
  for (const auto& a : argv_store) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  CLI::App* sub = app.get_subcommands().front();
  const std::string command = sub->get_name();
  try {
    const RunConfig cfg = Resolve(command, o);
    if (command == "generate") return CmdGenerate(cfg, out);
    if (command == "train") return CmdTrain(cfg, out);
    if (command == "eval") return CmdEval(cfg, out);
    if (command == "ablate") return CmdAblate(cfg, out);
    return CmdGradcheck(cfg, out);
  } catch (const ConfigError& e) {
    err << "rwt " << command << ": " << e.what() << '\n';
    return kExitUsage;
  } catch (const MissingFile& e) {
    err << "rwt " << command << ": " << e.what() << '\n';
    return kExitMissingFile;
  } catch (const FormatError& e) {
    err << "rwt " << command << ": " << e.what() << '\n';
    return e.code() == FormatErrorCode::kIo ? kExitRuntime : kExitFormat;
  } catch (const NumericalError& e) {
    err << "rwt " << command << ": " << e.what() << '\n';
    return kExitDiverged;
  } catch (const std::exception& e) {
    err << "rwt " << command << ": " << e.what() << '\n';
    return kExitRuntime;
  }
}

}  // namespace rwt::cli
