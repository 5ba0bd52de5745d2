#pragma once

#include <filesystem>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "ratepred/baselines/baselines.hpp"
#include "ratepred/io/run_config.hpp"

namespace ratepred::io {

/// Failure with a short machine-readable category, e.g. "dataset_unmasked".
class PipelineError : public std::runtime_error {
 public:
  PipelineError(std::string category, const std::string& message)
      : std::runtime_error(message), category_(std::move(category)) {}
  const std::string& category() const { return category_; }

 private:
  std::string category_;
};

using ProgressFn = std::function<void(const std::string&)>;

/// Simulates `routes` traces and writes manifest.json plus one CSV per route.
void cmd_generate(const RunConfig& cfg, const std::filesystem::path& out_dir, bool force);

/// Mask stream seed derived from a dataset's master seed, kept apart from the route streams.
std::uint64_t default_mask_seed(std::uint64_t master_seed);

/// Adds bandit masks and observations to every route of a dataset.
void cmd_mask(const std::filesystem::path& dataset_dir, const measure::BanditParams& params,
              std::uint64_t seed);

struct TrainOutputs {
  std::filesystem::path model_file;
  std::filesystem::path log_file;
};

/// Trains on the train split, selects on val, writes model JSON and log CSV.
TrainOutputs cmd_train(const std::filesystem::path& dataset_dir, const RunConfig& cfg,
                       const std::filesystem::path& out_dir, const ProgressFn& progress = {});

/// Writes eval.json and series/route_NNNN.csv for the test split.
void cmd_eval(const std::filesystem::path& dataset_dir, const std::filesystem::path& model_file,
              const std::vector<baselines::Baseline>& baselines, const std::filesystem::path& out_dir);

enum class CdfPooling { PerSample, PerRoute };

struct ReportOptions {
  std::size_t cdf_points = 101;
  CdfPooling pooling = CdfPooling::PerSample;
};

/// Reads eval outputs and writes cdf.csv, timeseries.csv and summary.json.
void cmd_report(const std::filesystem::path& eval_dir, const std::filesystem::path& out_dir,
                const ReportOptions& options = {});

/// generate, mask, train, eval (B1 and B2) and report under cfg.output_dir in
/// dataset/, model/, eval/ and report/.
void cmd_run(const RunConfig& cfg, bool force, const ProgressFn& progress = {});

/// 64-bit FNV-1a of a file's bytes as 16 hex digits; used as a content id.
std::string file_fingerprint(const std::filesystem::path& file);

}  // namespace ratepred::io
