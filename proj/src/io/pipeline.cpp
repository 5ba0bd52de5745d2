#include "ratepred/io/pipeline.hpp"

#include <cstdio>
#include <fstream>

#include "ratepred/channel/mobility.hpp"
#include "ratepred/eval/metrics.hpp"
#include "ratepred/io/csv.hpp"
#include "ratepred/io/dataset_io.hpp"
#include "ratepred/measure/masking.hpp"
#include "ratepred/model/trainer.hpp"
#include "ratepred/nn/serialize.hpp"
#include "ratepred/rng.hpp"

namespace ratepred::io {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kEvalSchemaVersion = 1;
constexpr const char* kModelName = "model";

Dataset open_dataset(const fs::path& dir) {
  if (!fs::exists(dir / "manifest.json")) {
    throw PipelineError("dataset_missing", "no dataset at " + dir.string() + "; run `generate` first");
  }
  try {
    return load_dataset(dir);
  } catch (const std::exception& e) {
    throw PipelineError("dataset_invalid", e.what());
  }
}

Dataset open_masked_dataset(const fs::path& dir) {
  Dataset ds = open_dataset(dir);
  if (!ds.masked()) {
    throw PipelineError("dataset_unmasked",
                        "dataset at " + dir.string() + " has no measurement masks; run `mask` first");
  }
  return ds;
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) {
    throw PipelineError("io", "cannot create " + dir.string() + ": " + ec.message());
  }
}

json mse_json(const eval::MseSummary& s) {
  return {{"per_link", s.per_link}, {"overall", s.overall}, {"counts", s.counts}};
}

json optional_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

std::string series_file_name(std::size_t route) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "series/route_%04zu.csv", route);
  return buf;
}

}  // namespace

std::string file_fingerprint(const fs::path& file) {
  const std::string bytes = read_file(file);
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

void cmd_generate(const RunConfig& cfg, const fs::path& out_dir, bool force) {
  if (fs::exists(out_dir) && !fs::is_empty(out_dir) && !force) {
    throw PipelineError("output_exists", out_dir.string() + " is not empty; pass --force to overwrite");
  }
  if (cfg.routes == 0 || cfg.steps == 0) {
    throw PipelineError("config", "routes and steps must be positive");
  }
  channel::MobilityLevel level;
  channel::ChannelConfig cc = channel::default_channel_config();
  try {
    level = channel::mobility_from_name(cfg.mobility);
    cc.links = cfg.links;
    cc.shadow_sigma_db.clear();
    for (const auto& l : cc.links) cc.shadow_sigma_db.push_back(channel::default_shadow_sigma_db(l.carrier_freq_ghz));
    cc.steps = cfg.steps;
    channel::validate(cc);
  } catch (const std::invalid_argument& e) {
    throw PipelineError("config", e.what());
  }
  ensure_dir(out_dir);
  if (force) {
    fs::remove(out_dir / "manifest.json");
  }

  DatasetManifest m;
  m.master_seed = cfg.seed;
  m.rng_algorithm = std::string(kRngAlgorithm);
  m.mobility = level.name;
  m.routes = cfg.routes;
  m.steps = cfg.steps;
  m.period_ms = channel::kStepSeconds * 1000.0;
  m.channel = cc;
  m.split = assign_splits(cfg.routes, cfg.seed);
  for (std::size_t r = 0; r < cfg.routes; ++r) {
    const channel::TraceSet tr = channel::simulate_route(cc, level, channel::route_seed(cfg.seed, r));
    m.route_files.push_back(route_file_name(r));
    write_file_atomic(out_dir / m.route_files.back(), trace_to_csv(tr));
  }
  // Manifest last: its presence marks a complete dataset.
  write_manifest(out_dir, m);
}

std::uint64_t default_mask_seed(std::uint64_t master_seed) {
  return stable_hash(stable_hash(master_seed, 0x6D61736BULL), 0);
}

void cmd_mask(const fs::path& dataset_dir, const measure::BanditParams& params, std::uint64_t seed) {
  Dataset ds = open_dataset(dataset_dir);
  try {
    measure::make_bandit(ds.manifest.channel.links.size(), params);
  } catch (const std::invalid_argument& e) {
    throw PipelineError("config", e.what());
  }
  for (auto& tr : ds.routes) {
    tr.mask.clear();
    tr.obs_snr_db.clear();
  }
  measure::build_masked_dataset(ds.routes, ds.manifest.channel.links, params, seed);
  for (std::size_t r = 0; r < ds.routes.size(); ++r) {
    write_file_atomic(dataset_dir / ds.manifest.route_files[r], trace_to_csv(ds.routes[r]));
  }
  ds.manifest.bandit = params;
  ds.manifest.mask_seed = seed;
  write_manifest(dataset_dir, ds.manifest);
}

TrainOutputs cmd_train(const fs::path& dataset_dir, const RunConfig& cfg, const fs::path& out_dir,
                       const ProgressFn& progress) {
  const Dataset ds = open_masked_dataset(dataset_dir);
  RunConfig run = cfg;
  run.links = ds.manifest.channel.links;
  model::ModelConfig mc;
  try {
    mc = model_config_for(run);
  } catch (const std::invalid_argument& e) {
    throw PipelineError("config", e.what());
  }
  const auto train_routes = ds.split_routes(Split::Train);
  const auto val_routes = ds.split_routes(Split::Val);
  if (train_routes.empty() || val_routes.empty()) {
    throw PipelineError("empty_split", "train and val splits must both hold at least one route");
  }
  ensure_dir(out_dir);

  std::string log = "epoch,train_loss,val_loss\n";
  auto on_epoch = [&](const model::EpochLog& e) {
    log += std::to_string(e.epoch) + "," + format_double(e.train_loss) + "," + format_double(e.val_loss) + "\n";
    if (progress) {
      char buf[128];
      std::snprintf(buf, sizeof buf, "epoch %zu/%zu train_loss %.6g val_loss %.6g", e.epoch + 1,
                    run.training.epochs, e.train_loss, e.val_loss);
      progress(buf);
    }
  };
  model::TrainResult result;
  try {
    result = model::train(train_routes, val_routes, run.links, mc, run.training, on_epoch);
  } catch (const std::invalid_argument& e) {
    throw PipelineError("training", e.what());
  }

  json model_cfg = model::to_json(mc);
  model_cfg["link_table"] = to_json(run.links);
  model_cfg["training"] = to_json(run)["training"];
  model_cfg["best_epoch"] = result.best_epoch;
  model_cfg["best_val_loss"] = result.best_val_loss;
  model_cfg["dataset_id"] = file_fingerprint(dataset_dir / "manifest.json");

  TrainOutputs out{out_dir / "model.json", out_dir / "train_log.csv"};
  write_file_atomic(out.model_file, nn::params_to_json(result.params, model_cfg).dump(1) + "\n");
  write_file_atomic(out.log_file, log);
  return out;
}

void cmd_eval(const fs::path& dataset_dir, const fs::path& model_file,
              const std::vector<baselines::Baseline>& which, const fs::path& out_dir) {
  const Dataset ds = open_masked_dataset(dataset_dir);
  json stored;
  nn::ParamStore params;
  model::ModelConfig mc;
  try {
    params = nn::load_model(model_file, &stored);
    mc = model::model_config_from_json(stored);
    model::check_params(params, mc);
  } catch (const std::exception& e) {
    throw PipelineError("model_invalid", model_file.string() + ": " + e.what());
  }
  const auto& links = ds.manifest.channel.links;
  if (!stored.contains("link_table") || links_from_json(stored.at("link_table")) != links) {
    throw PipelineError("model_mismatch", "the model was trained on a different link table than this dataset");
  }

  std::vector<std::size_t> test_ids;
  for (std::size_t r = 0; r < ds.routes.size(); ++r) {
    if (ds.manifest.split[r] == Split::Test) test_ids.push_back(r);
  }
  if (test_ids.empty()) {
    throw PipelineError("empty_split", "the test split has no routes");
  }
  for (std::size_t r : test_ids) {
    if (ds.routes[r].steps < mc.window + 1) {
      throw PipelineError("dataset_invalid", "routes are shorter than W + 1 steps");
    }
  }
  ensure_dir(out_dir / "series");

  const std::size_t m = links.size(), W = mc.window;
  std::vector<std::string> methods{kModelName};
  for (auto b : which) methods.emplace_back(baselines::to_string(b));
  std::vector<eval::MseAccumulator> acc(methods.size(), eval::MseAccumulator(m));

  json route_list = json::array();
  for (std::size_t r : test_ids) {
    const channel::TraceSet& tr = ds.routes[r];
    std::vector<std::vector<double>> series;
    series.push_back(model::predict_series(tr, links, params, mc));
    for (auto b : which) series.push_back(baselines::run_baseline(tr, b, W));
    const auto truth = std::span(tr.rate_bps).subspan(W * m);
    for (std::size_t k = 0; k < methods.size(); ++k) acc[k].add(series[k], truth);

    std::string csv = "t";
    for (std::size_t i = 1; i <= m; ++i) csv += ",true_bps_" + std::to_string(i);
    for (std::size_t i = 1; i <= m; ++i) csv += ",meas_" + std::to_string(i);
    for (const auto& name : methods)
      for (std::size_t i = 1; i <= m; ++i) csv += "," + name + "_bps_" + std::to_string(i);
    csv += '\n';
    for (std::size_t t = W; t < tr.steps; ++t) {
      csv += std::to_string(t);
      for (std::size_t i = 0; i < m; ++i) csv += "," + format_double(tr.rate(t, i));
      for (std::size_t i = 0; i < m; ++i) csv += tr.measured(t, i) ? ",1" : ",0";
      for (const auto& s : series)
        for (std::size_t i = 0; i < m; ++i) csv += "," + format_double(s[(t - W) * m + i]);
      csv += '\n';
    }
    const std::string file = series_file_name(r);
    write_file_atomic(out_dir / file, csv);
    route_list.push_back({{"route", r}, {"file", file}});
  }

  json mse = json::object();
  for (std::size_t k = 0; k < methods.size(); ++k) mse[methods[k]] = mse_json(acc[k].summary());
  const json doc = {{"schema_version", kEvalSchemaVersion},
                    {"units", "Mbps^2"},
                    {"dataset_id", file_fingerprint(dataset_dir / "manifest.json")},
                    {"model_id", file_fingerprint(model_file)},
                    {"mobility", ds.manifest.mobility},
                    {"window", W},
                    {"links", m},
                    {"methods", methods},
                    {"routes", route_list},
                    {"mse", mse}};
  write_file_atomic(out_dir / "eval.json", doc.dump(2) + "\n");
}

void cmd_report(const fs::path& eval_dir, const fs::path& out_dir, const ReportOptions& opt) {
  if (!fs::exists(eval_dir / "eval.json")) {
    throw PipelineError("eval_missing", "no eval.json in " + eval_dir.string() + "; run `eval` first");
  }
  json ev;
  try {
    ev = json::parse(read_file(eval_dir / "eval.json"));
  } catch (const json::exception& e) {
    throw PipelineError("eval_invalid", e.what());
  }
  const auto methods = ev.at("methods").get<std::vector<std::string>>();
  const std::size_t m = ev.at("links").get<std::size_t>();
  const std::size_t W = ev.at("window").get<std::size_t>();
  std::vector<double> grid;
  try {
    grid = eval::uniform_quantile_grid(opt.cdf_points);
  } catch (const std::invalid_argument& e) {
    throw PipelineError("config", e.what());
  }
  ensure_dir(out_dir);

  std::vector<eval::MseAccumulator> acc(methods.size(), eval::MseAccumulator(m));
  std::vector<std::vector<double>> pooled(methods.size());
  std::string ts = "route,t,true_max_mbps";
  for (const auto& name : methods) ts += "," + name + "_max_mbps";
  for (const auto& name : methods)
    for (std::size_t i = 1; i <= m; ++i) ts += "," + name + "_sqerr_mbps2_" + std::to_string(i);
  for (std::size_t i = 1; i <= m; ++i) ts += ",meas_" + std::to_string(i);
  ts += '\n';

  for (const auto& entry : ev.at("routes")) {
    const std::size_t route = entry.at("route").get<std::size_t>();
    CsvTable table;
    try {
      table = read_csv(eval_dir / entry.at("file").get<std::string>());
    } catch (const std::exception& e) {
      throw PipelineError("eval_invalid", e.what());
    }
    const std::size_t rows = table.rows.size();
    std::vector<double> truth((W + rows) * m, 0.0);
    std::vector<std::uint8_t> mask((W + rows) * m, 0);
    std::map<std::string, std::vector<double>> preds;
    for (std::size_t r = 0; r < rows; ++r) {
      const auto& row = table.rows[r];
      for (std::size_t i = 1; i <= m; ++i) {
        const std::size_t j = (W + r) * m + i - 1;
        truth[j] = parse_double(row[table.column("true_bps_" + std::to_string(i))]);
        mask[j] = static_cast<std::uint8_t>(parse_int(row[table.column("meas_" + std::to_string(i))]));
        for (const auto& name : methods)
          preds[name].push_back(parse_double(row[table.column(name + "_bps_" + std::to_string(i))]));
      }
    }
    const auto truth_tail = std::span(truth).subspan(W * m);
    for (std::size_t k = 0; k < methods.size(); ++k) {
      const auto& p = preds[methods[k]];
      acc[k].add(p, truth_tail);
      const auto sq = eval::squared_errors(p, truth_tail);
      if (opt.pooling == CdfPooling::PerSample) {
        pooled[k].insert(pooled[k].end(), sq.begin(), sq.end());
      } else {
        pooled[k].push_back(eval::mse(p, truth_tail, m).overall);
      }
    }
    for (const auto& row : eval::timeseries_report(W, m, truth, mask, preds)) {
      ts += std::to_string(route) + "," + std::to_string(row.t) + "," + format_double(row.true_max_mbps);
      for (const auto& name : methods) ts += "," + format_double(row.predicted_max_mbps.at(name));
      for (const auto& name : methods)
        for (double e : row.squared_errors.at(name)) ts += "," + format_double(e);
      for (auto flag : row.mask) ts += flag ? ",1" : ",0";
      ts += '\n';
    }
  }

  std::string cdf = "method,quantile,error_mbps2,probability\n";
  for (std::size_t k = 0; k < methods.size(); ++k) {
    const auto points = eval::error_cdf(pooled[k], grid);
    for (std::size_t q = 0; q < points.size(); ++q) {
      cdf += methods[k] + "," + format_double(grid[q]) + "," + format_double(points[q].error) + "," +
             format_double(points[q].probability) + "\n";
    }
  }

  json mse = json::object();
  std::vector<eval::MseSummary> summaries;
  for (std::size_t k = 0; k < methods.size(); ++k) {
    summaries.push_back(acc[k].summary());
    mse[methods[k]] = mse_json(summaries.back());
  }
  json reductions = json::object();
  for (std::size_t k = 1; k < methods.size(); ++k) {
    const auto red = eval::reduction_vs_baseline(summaries[0], summaries[k]);
    json per_link = json::array();
    for (const auto& v : red.per_link) per_link.push_back(optional_json(v));
    reductions["vs_" + methods[k]] = {{"per_link", per_link}, {"overall", optional_json(red.overall)}};
  }
  const json summary = {{"units", "Mbps^2"},
                        {"reduction_units", "percent"},
                        {"dataset_id", ev.at("dataset_id")},
                        {"model_id", ev.at("model_id")},
                        {"mobility", ev.at("mobility")},
                        {"window", W},
                        {"cdf_pooling", opt.pooling == CdfPooling::PerSample ? "sample" : "route"},
                        {"mse", mse},
                        {"reduction_percent", reductions}};

  write_file_atomic(out_dir / "cdf.csv", cdf);
  write_file_atomic(out_dir / "timeseries.csv", ts);
  write_file_atomic(out_dir / "summary.json", summary.dump(2) + "\n");
}

void cmd_run(const RunConfig& cfg, bool force, const ProgressFn& progress) {
  const fs::path root = cfg.output_dir;
  const fs::path dataset = root / "dataset";
  auto note = [&](const std::string& s) {
    if (progress) progress(s);
  };
  note("generate " + dataset.string());
  cmd_generate(cfg, dataset, force);
  note("mask");
  cmd_mask(dataset, cfg.bandit, default_mask_seed(cfg.seed));
  note("train");
  const TrainOutputs trained = cmd_train(dataset, cfg, root / "model", progress);
  note("eval");
  cmd_eval(dataset, trained.model_file, {baselines::Baseline::B1, baselines::Baseline::B2}, root / "eval");
  note("report");
  cmd_report(root / "eval", root / "report");
}

}  // namespace ratepred::io
