#include <doctest.h>

#include <bit>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <limits>

#include "ratepred/channel/simulate.hpp"
#include "ratepred/io/csv.hpp"
#include "ratepred/io/dataset_io.hpp"
#include "ratepred/io/pipeline.hpp"
#include "ratepred/io/run_config.hpp"
#include "ratepred/measure/masking.hpp"
#include "ratepred/rng.hpp"

using namespace ratepred;
using namespace ratepred::io;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

fs::path fresh_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("ratepred_test_io_" + name);
  fs::remove_all(p);
  return p;
}

RunConfig tiny_run(const fs::path& out) {
  RunConfig c;
  c.seed = 5;
  c.routes = 7;
  c.steps = 60;
  c.model.window = 6;
  c.model.embed_dim = 8;
  c.model.heads = 2;
  c.model.ffn_dim = 16;
  c.model.head_hidden = 8;
  c.training.epochs = 2;
  c.training.batch_size = 32;
  c.training.stride = 3;
  c.output_dir = out;
  return c;
}

std::string category_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const PipelineError& e) {
    return e.category();
  }
  return "";
}

bool same_bits(double a, double b) { return std::bit_cast<std::uint64_t>(a) == std::bit_cast<std::uint64_t>(b); }

void check_same_trace(const channel::TraceSet& a, const channel::TraceSet& b) {
  REQUIRE(a.steps == b.steps);
  REQUIRE(a.links == b.links);
  REQUIRE(a.mask == b.mask);
  for (std::size_t j = 0; j < a.rate_bps.size(); ++j) {
    CHECK(same_bits(a.rate_bps[j], b.rate_bps[j]));
    CHECK(same_bits(a.snr_db[j], b.snr_db[j]));
  }
  REQUIRE(a.obs_snr_db.size() == b.obs_snr_db.size());
  for (std::size_t j = 0; j < a.obs_snr_db.size(); ++j) {
    if (std::isnan(a.obs_snr_db[j])) {
      CHECK(std::isnan(b.obs_snr_db[j]));
    } else {
      CHECK(same_bits(a.obs_snr_db[j], b.obs_snr_db[j]));
    }
  }
}

}  // namespace

TEST_CASE("doubles survive text round trip bit-exactly") {
  Rng rng(99);
  for (int i = 0; i < 2000; ++i) {
    const double v = std::ldexp(rng.normal(), static_cast<int>(rng.uniform(-60.0, 60.0)));
    CHECK(same_bits(parse_double(format_double(v)), v));
  }
  CHECK(same_bits(parse_double(format_double(4.8e8)), 4.8e8));
  CHECK(same_bits(parse_double(format_double(-0.1)), -0.1));
  CHECK_THROWS(parse_double("1.5x"));
  CHECK_THROWS(parse_double(""));
  CHECK_THROWS(parse_int("2.0"));
  CHECK(parse_int("-17") == -17);
}

TEST_CASE("route splits are 70/15/15 with rounding toward train") {
  auto count = [](const std::vector<Split>& s, Split which) { return std::count(s.begin(), s.end(), which); };
  for (auto [n, val] : std::vector<std::pair<std::size_t, long>>{{20, 3}, {60, 9}, {7, 1}, {6, 0}, {100, 15}}) {
    const auto s = assign_splits(n, 11);
    REQUIRE(s.size() == n);
    CHECK(count(s, Split::Val) == val);
    CHECK(count(s, Split::Test) == val);
    CHECK(count(s, Split::Train) == static_cast<long>(n) - 2 * val);
  }
  CHECK(assign_splits(60, 11) == assign_splits(60, 11));
  CHECK(assign_splits(60, 11) != assign_splits(60, 12));
  CHECK(split_from_name(to_string(Split::Val)) == Split::Val);
  CHECK_THROWS(split_from_name("holdout"));
}

TEST_CASE("trace csv round trip, unmasked and masked") {
  const fs::path dir = fresh_dir("trace");
  fs::create_directories(dir);
  auto cc = channel::default_channel_config();
  cc.steps = 40;
  channel::TraceSet tr = channel::simulate_route(cc, channel::mobility_from_name("high"), 3);

  write_file_atomic(dir / "a.csv", trace_to_csv(tr));
  check_same_trace(tr, trace_from_csv(dir / "a.csv"));

  measure::mask_route(tr, cc.links, measure::BanditParams{}, 4);
  write_file_atomic(dir / "b.csv", trace_to_csv(tr));
  const CsvTable t = read_csv(dir / "b.csv");
  CHECK(t.header.front() == "t");
  CHECK(t.column("meas_4") < t.header.size());
  CHECK(t.rows.size() == 40);
  check_same_trace(tr, trace_from_csv(dir / "b.csv"));
  fs::remove_all(dir);
}

TEST_CASE("manifest json round trip") {
  DatasetManifest m;
  m.master_seed = 42;
  m.rng_algorithm = "x";
  m.mobility = "low";
  m.routes = 3;
  m.steps = 10;
  m.channel = channel::default_channel_config();
  m.split = assign_splits(3, 42);
  m.route_files = {route_file_name(0), route_file_name(1), route_file_name(2)};
  CHECK(to_json(manifest_from_json(to_json(m))) == to_json(m));
  CHECK(to_json(m).at("bandit").is_null());
  m.bandit = measure::BanditParams{0.3, 0.05, 2, 1.0};
  m.mask_seed = 9;
  const DatasetManifest back = manifest_from_json(to_json(m));
  REQUIRE(back.bandit.has_value());
  CHECK(back.bandit->k == 2);
  CHECK(back.mask_seed == 9);
  CHECK(route_file_name(7) == "route_0007.csv");
}

TEST_CASE("run config defaults, overlay and rejection") {
  const RunConfig d;
  CHECK(d.bandit.epsilon == 0.2);
  CHECK(d.steps == 1200);
  CHECK(d.training.adam.lr == 1e-3);
  CHECK(d.model.dropout == 0.2);
  CHECK(d.training.batch_size == 128);
  CHECK(d.training.epochs == 200);
  CHECK(d.links.size() == 4);

  const RunConfig c = apply_config_json(d, json::parse(R"({"seed": 9, "bandit": {"k": 2}, "training": {"lr": 0.01}})"));
  CHECK(c.seed == 9);
  CHECK(c.bandit.k == 2);
  CHECK(c.bandit.epsilon == 0.2);
  CHECK(c.training.adam.lr == 0.01);
  CHECK(apply_config_json(d, to_json(c)).seed == 9);
  CHECK(to_json(apply_config_json(d, to_json(c))) == to_json(c));

  CHECK_THROWS_AS(apply_config_json(d, json::parse(R"({"sed": 1})")), std::invalid_argument);
  CHECK_THROWS_AS(apply_config_json(d, json::parse(R"({"model": {"layers": 2}})")), std::invalid_argument);
  CHECK_THROWS_AS(apply_config_json(d, json::parse(R"({"routes": "many"})")), std::invalid_argument);

  const auto mc = model_config_for(d);
  CHECK(mc.caps_bps == std::vector<double>{4.8e8, 4.8e8, 9.6e8, 9.6e8});
}

TEST_CASE("generate writes one file per route and refuses to overwrite") {
  const fs::path dir = fresh_dir("gen");
  RunConfig c = tiny_run(dir);
  c.routes = 2;
  c.steps = 100;
  cmd_generate(c, dir / "ds", false);
  const Dataset ds = load_dataset(dir / "ds");
  CHECK(ds.routes.size() == 2);
  CHECK(read_csv(dir / "ds" / route_file_name(1)).rows.size() == 100);
  CHECK_FALSE(ds.masked());
  CHECK(category_of([&] { cmd_generate(c, dir / "ds", false); }) == "output_exists");
  const std::string before = read_file(dir / "ds" / route_file_name(0));
  cmd_generate(c, dir / "ds", true);
  CHECK(read_file(dir / "ds" / route_file_name(0)) == before);

  c.mobility = "warp";
  CHECK(category_of([&] { cmd_generate(c, dir / "ds2", false); }) == "config");
  fs::remove_all(dir);
}

TEST_CASE("pipeline stages reject bad inputs with categories") {
  const fs::path dir = fresh_dir("errors");
  const RunConfig c = tiny_run(dir);
  CHECK(category_of([&] { cmd_mask(dir / "none", c.bandit, 1); }) == "dataset_missing");
  cmd_generate(c, dir / "ds", false);
  CHECK(category_of([&] { cmd_train(dir / "ds", c, dir / "m"); }) == "dataset_unmasked");
  measure::BanditParams bad = c.bandit;
  bad.epsilon = 1.5;
  CHECK(category_of([&] { cmd_mask(dir / "ds", bad, 1); }) == "config");
  cmd_mask(dir / "ds", c.bandit, default_mask_seed(c.seed));
  CHECK(load_dataset(dir / "ds").masked());
  CHECK(category_of([&] { cmd_report(dir / "noeval", dir / "r"); }) == "eval_missing");

  std::ofstream(dir / "junk.json") << "{\"params\": 3}";
  CHECK(category_of([&] { cmd_eval(dir / "ds", dir / "junk.json", {}, dir / "e"); }) == "model_invalid");

  // Same routes, different link table: the model must not be applied.
  cmd_train(dir / "ds", c, dir / "m");
  RunConfig other = c;
  other.links.pop_back();
  cmd_generate(other, dir / "ds3", false);
  cmd_mask(dir / "ds3", c.bandit, 1);
  CHECK(category_of([&] { cmd_eval(dir / "ds3", dir / "m" / "model.json", {}, dir / "e"); }) == "model_mismatch");

  RunConfig two = c;
  two.routes = 2;
  cmd_generate(two, dir / "ds2", false);
  cmd_mask(dir / "ds2", c.bandit, 1);
  CHECK(category_of([&] { cmd_train(dir / "ds2", two, dir / "m2"); }) == "empty_split");
  fs::remove_all(dir);
}

TEST_CASE("full pipeline output is byte-identical across runs") {
  const fs::path a = fresh_dir("run_a"), b = fresh_dir("run_b");
  cmd_run(tiny_run(a), false);
  cmd_run(tiny_run(b), false);
  std::size_t compared = 0;
  for (const auto& e : fs::recursive_directory_iterator(a)) {
    if (!e.is_regular_file()) continue;
    const fs::path rel = fs::relative(e.path(), a);
    REQUIRE(fs::exists(b / rel));
    CHECK_MESSAGE(read_file(e.path()) == read_file(b / rel), rel.string());
    ++compared;
  }
  CHECK(compared >= 7 + 1 + 2 + 2 + 3);

  const json summary = json::parse(read_file(a / "report" / "summary.json"));
  CHECK(summary.at("units") == "Mbps^2");
  CHECK(summary.at("reduction_percent").contains("vs_B1"));
  CHECK(summary.at("reduction_percent").contains("vs_B2"));
  const json ev = json::parse(read_file(a / "eval" / "eval.json"));
  CHECK(ev.at("methods") == json::array({"model", "B1", "B2"}));
  for (const char* m : {"model", "B1", "B2"}) {
    CHECK(summary.at("mse").at(m).at("overall").get<double>() ==
          doctest::Approx(ev.at("mse").at(m).at("overall").get<double>()).epsilon(1e-12));
  }
  const std::string text = read_file(a / "report" / "summary.json") + read_file(a / "model" / "model.json");
  CHECK(text.find(a.string()) == std::string::npos);
  fs::remove_all(a);
  fs::remove_all(b);
}
