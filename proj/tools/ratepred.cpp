// ratepred: generate, mask, train, eval and report for multi-link rate prediction.
#include <cstdio>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#ifdef __GLIBC__
#include <malloc.h>
#endif

#include <CLI11.hpp>

#include "ratepred/io/dataset_io.hpp"
#include "ratepred/io/pipeline.hpp"
#include "ratepred/io/run_config.hpp"

namespace fs = std::filesystem;
using namespace ratepred;

namespace {

constexpr int kExitFailure = 1;
constexpr int kExitUsage = 2;

int fail(const std::string& category, std::string message) {
  for (char& c : message) {
    if (c == '\n' || c == '\r') c = ' ';
  }
  std::cerr << "error: category=" << category << " message=" << message << '\n';
  return category == "usage" ? kExitUsage : kExitFailure;
}

// --config must be applied before the flags are bound so that flags win.
std::optional<std::string> find_config_arg(int argc, char** argv) {
  for (int i = 1; i < argc; ++i) {
    const std::string a = argv[i];
    if (a == "--config" && i + 1 < argc) return std::string(argv[i + 1]);
    if (a.rfind("--config=", 0) == 0) return a.substr(9);
  }
  return std::nullopt;
}

void progress_line(const std::string& s) { std::cerr << s << '\n'; }

void add_world_flags(CLI::App* c, io::RunConfig& cfg) {
  c->add_option("--seed", cfg.seed, "master seed")->capture_default_str();
  c->add_option("--mobility", cfg.mobility, "low | medium | high")->capture_default_str();
  c->add_option("--routes", cfg.routes, "number of routes")->capture_default_str();
  c->add_option("--steps", cfg.steps, "steps per route (50 ms each)")->capture_default_str();
}

void add_bandit_flags(CLI::App* c, io::RunConfig& cfg) {
  c->add_option("--epsilon", cfg.bandit.epsilon, "exploration probability")->capture_default_str();
  c->add_option("--eta", cfg.bandit.eta, "exponential-weights learning rate")->capture_default_str();
  c->add_option("--k", cfg.bandit.k, "links measured per step")->capture_default_str();
  c->add_option("--noise-std-db", cfg.bandit.noise_std_db, "observation noise on measured SNR")
      ->capture_default_str();
}

void add_model_flags(CLI::App* c, io::RunConfig& cfg) {
  auto& m = cfg.model;
  auto& t = cfg.training;
  c->add_option("--window", m.window, "history window W")->capture_default_str();
  c->add_option("--embed-dim", m.embed_dim)->capture_default_str();
  c->add_option("--heads", m.heads)->capture_default_str();
  c->add_option("--ffn-dim", m.ffn_dim)->capture_default_str();
  c->add_option("--head-hidden", m.head_hidden)->capture_default_str();
  c->add_option("--kernel-size", m.kernel_size)->capture_default_str();
  c->add_option("--dropout", m.dropout)->capture_default_str();
  c->add_option("--epochs", t.epochs)->capture_default_str();
  c->add_option("--batch-size", t.batch_size)->capture_default_str();
  c->add_option("--stride", t.stride, "window stride over training routes")->capture_default_str();
  c->add_option("--lr", t.adam.lr)->capture_default_str();
  c->add_option("--train-seed", t.seed, "initialization, shuffling and dropout seed")->capture_default_str();
}

}  // namespace

int main(int argc, char** argv) {
#ifdef __GLIBC__
  // Training reallocates the same large buffers every step; keep them mapped.
  mallopt(M_TRIM_THRESHOLD, 1 << 30);
  mallopt(M_MMAP_THRESHOLD, 32 << 20);
#endif
  io::RunConfig cfg;
  if (auto file = find_config_arg(argc, argv)) {
    try {
      cfg = io::load_run_config(*file, cfg);
    } catch (const std::exception& e) {
      return fail("config", e.what());
    }
  }

  CLI::App app{"Multi-link rate prediction under partial measurements"};
  app.require_subcommand(1);
  app.fallthrough();
  std::string config_file;
  app.add_option("--config", config_file, "JSON file with RunConfig keys; flags override it");

  bool force = false;
  fs::path dataset_dir, out_dir, model_file, eval_dir;
  std::optional<std::uint64_t> mask_seed;
  std::vector<std::string> baseline_names{"B1", "B2"};
  io::ReportOptions report_opt;
  std::string pooling = "sample";

  auto* gen = app.add_subcommand("generate", "simulate routes into a dataset directory");
  add_world_flags(gen, cfg);
  gen->add_option("--out", out_dir, "dataset directory")->required();
  gen->add_flag("--force", force, "overwrite a non-empty output directory");

  auto* mask = app.add_subcommand("mask", "add bandit measurement masks to a dataset");
  add_bandit_flags(mask, cfg);
  mask->add_option("--dataset", dataset_dir)->required();
  mask->add_option("--mask-seed", mask_seed, "defaults to a stream derived from the dataset seed");

  auto* train = app.add_subcommand("train", "train the predictor on the train split");
  add_model_flags(train, cfg);
  train->add_option("--dataset", dataset_dir)->required();
  train->add_option("--out", out_dir, "directory for model.json and train_log.csv")->required();

  auto* eval = app.add_subcommand("eval", "evaluate the model and baselines on the test split");
  eval->add_option("--dataset", dataset_dir)->required();
  eval->add_option("--model", model_file)->required();
  eval->add_option("--baselines", baseline_names, "any of B1, B2")->delimiter(',')->capture_default_str();
  eval->add_option("--out", out_dir)->required();

  auto* report = app.add_subcommand("report", "write cdf.csv, timeseries.csv and summary.json");
  report->add_option("--eval", eval_dir, "directory written by eval")->required();
  report->add_option("--out", out_dir)->required();
  report->add_option("--cdf-points", report_opt.cdf_points)->capture_default_str();
  report->add_option("--cdf-pooling", pooling, "sample | route")
      ->check(CLI::IsMember({"sample", "route"}))
      ->capture_default_str();

  auto* run = app.add_subcommand("run", "every stage in order under --output-dir");
  add_world_flags(run, cfg);
  add_bandit_flags(run, cfg);
  add_model_flags(run, cfg);
  std::string output_dir = cfg.output_dir.string();
  run->add_option("--output-dir", output_dir)->capture_default_str();
  run->add_flag("--force", force, "overwrite an existing dataset");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return fail("usage", e.what());
  }

  try {
    if (*gen) {
      io::cmd_generate(cfg, out_dir, force);
    } else if (*mask) {
      std::uint64_t seed;
      if (mask_seed) {
        seed = *mask_seed;
      } else {
        if (!fs::exists(dataset_dir / "manifest.json")) {
          return fail("dataset_missing", "no dataset at " + dataset_dir.string() + "; run `generate` first");
        }
        seed = io::default_mask_seed(io::load_dataset(dataset_dir).manifest.master_seed);
      }
      io::cmd_mask(dataset_dir, cfg.bandit, seed);
    } else if (*train) {
      const auto out = io::cmd_train(dataset_dir, cfg, out_dir, progress_line);
      std::cout << out.model_file.string() << '\n';
    } else if (*eval) {
      std::vector<baselines::Baseline> which;
      for (const auto& name : baseline_names) which.push_back(baselines::baseline_from_name(name));
      io::cmd_eval(dataset_dir, model_file, which, out_dir);
    } else if (*report) {
      report_opt.pooling = pooling == "route" ? io::CdfPooling::PerRoute : io::CdfPooling::PerSample;
      io::cmd_report(eval_dir, out_dir, report_opt);
    } else if (*run) {
      cfg.output_dir = output_dir;
      io::cmd_run(cfg, force, progress_line);
    }
  } catch (const io::PipelineError& e) {
    return fail(e.category(), e.what());
  } catch (const std::invalid_argument& e) {
    return fail("config", e.what());
  } catch (const std::exception& e) {
    return fail("io", e.what());
  }
  return 0;
}
