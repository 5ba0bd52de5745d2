#include "ratepred/io/dataset_io.hpp"

#include <cmath>
#include <cstdio>
#include <numeric>
#include <stdexcept>

#include "ratepred/io/csv.hpp"
#include "ratepred/rng.hpp"

namespace ratepred::io {

using nlohmann::json;

std::string to_string(Split s) {
  switch (s) {
    case Split::Train: return "train";
    case Split::Val: return "val";
    case Split::Test: return "test";
  }
  return "?";
}

Split split_from_name(const std::string& name) {
  if (name == "train") return Split::Train;
  if (name == "val") return Split::Val;
  if (name == "test") return Split::Test;
  throw std::invalid_argument("unknown split '" + name + "'");
}

std::vector<Split> assign_splits(std::size_t routes, std::uint64_t seed) {
  std::vector<std::size_t> order(routes);
  std::iota(order.begin(), order.end(), 0);
  Rng rng(stable_hash(seed, 0x5B117));
  rng.shuffle(std::span(order));
  const std::size_t n_val = routes * 15 / 100;
  const std::size_t n_test = routes * 15 / 100;
  const std::size_t n_train = routes - n_val - n_test;
  std::vector<Split> out(routes);
  for (std::size_t k = 0; k < routes; ++k) {
    out[order[k]] = k < n_train ? Split::Train : (k < n_train + n_val ? Split::Val : Split::Test);
  }
  return out;
}

json to_json(const channel::LinkConfig& l) {
  return {{"link_id", l.link_id},
          {"gnb_id", l.gnb_id},
          {"rx_id", l.rx_id},
          {"carrier_freq_ghz", l.carrier_freq_ghz},
          {"bandwidth_hz", l.bandwidth_hz},
          {"beta", l.beta},
          {"rho_max", l.rho_max},
          {"tx_power_dbm", l.tx_power_dbm},
          {"noise_psd_dbm_hz", l.noise_psd_dbm_hz},
          {"noise_figure_db", l.noise_figure_db}};
}

channel::LinkConfig link_from_json(const json& j) {
  channel::LinkConfig l;
  l.link_id = j.at("link_id").get<int>();
  l.gnb_id = j.at("gnb_id").get<int>();
  l.rx_id = j.at("rx_id").get<int>();
  l.carrier_freq_ghz = j.at("carrier_freq_ghz").get<double>();
  l.bandwidth_hz = j.at("bandwidth_hz").get<double>();
  l.beta = j.value("beta", l.beta);
  l.rho_max = j.value("rho_max", l.rho_max);
  l.tx_power_dbm = j.value("tx_power_dbm", l.tx_power_dbm);
  l.noise_psd_dbm_hz = j.value("noise_psd_dbm_hz", l.noise_psd_dbm_hz);
  l.noise_figure_db = j.value("noise_figure_db", l.noise_figure_db);
  channel::validate(l);
  return l;
}

json to_json(const std::vector<channel::LinkConfig>& links) {
  json arr = json::array();
  for (const auto& l : links) arr.push_back(to_json(l));
  return arr;
}

std::vector<channel::LinkConfig> links_from_json(const json& j) {
  if (!j.is_array() || j.empty()) {
    throw std::invalid_argument("link table must be a non-empty array");
  }
  std::vector<channel::LinkConfig> out;
  for (const auto& e : j) out.push_back(link_from_json(e));
  return out;
}

json to_json(const measure::BanditParams& p) {
  return {{"epsilon", p.epsilon}, {"eta", p.eta}, {"k", p.k}, {"noise_std_db", p.noise_std_db}};
}

measure::BanditParams bandit_from_json(const json& j) {
  measure::BanditParams p;
  p.epsilon = j.value("epsilon", p.epsilon);
  p.eta = j.value("eta", p.eta);
  p.k = j.value("k", p.k);
  p.noise_std_db = j.value("noise_std_db", p.noise_std_db);
  return p;
}

namespace {

json vec_json(const channel::Vec3& v) { return json::array({v.x, v.y, v.z}); }

channel::Vec3 vec_from_json(const json& j) {
  if (!j.is_array() || j.size() != 3) {
    throw std::invalid_argument("expected a 3-vector");
  }
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

}  // namespace

json to_json(const channel::ChannelConfig& c) {
  json antennas = json::array();
  for (const auto& a : c.antennas) {
    antennas.push_back({{"rx_id", a.rx_id},
                        {"pattern", std::string(channel::to_string(a.kind))},
                        {"boresight", vec_json(a.boresight)},
                        {"peak_gain_dbi", a.peak_gain_dbi},
                        {"pattern_exponent", a.pattern_exponent},
                        {"floor_db", a.floor_db}});
  }
  const auto& g = c.geometry;
  return {{"links", to_json(c.links)},
          {"antennas", antennas},
          {"shadow_sigma_db", c.shadow_sigma_db},
          {"shadow_corr_distance_m", c.shadow_corr_distance_m},
          {"geometry",
           {{"site_x", g.site_x},
            {"site_y", g.site_y},
            {"gnb_height_m", g.gnb_height_m},
            {"ue_height_m", g.ue_height_m},
            {"start_radius_min_m", g.start_radius_min_m},
            {"start_radius_max_m", g.start_radius_max_m}}}};
}

channel::ChannelConfig channel_from_json(const json& j) {
  channel::ChannelConfig c;
  c.links = links_from_json(j.at("links"));
  for (const auto& a : j.at("antennas")) {
    channel::AntennaModel m;
    m.rx_id = a.at("rx_id").get<int>();
    m.kind = channel::pattern_from_name(a.at("pattern").get<std::string>());
    m.boresight = vec_from_json(a.at("boresight"));
    m.peak_gain_dbi = a.at("peak_gain_dbi").get<double>();
    m.pattern_exponent = a.at("pattern_exponent").get<double>();
    m.floor_db = a.at("floor_db").get<double>();
    c.antennas.push_back(m);
  }
  c.shadow_sigma_db = j.at("shadow_sigma_db").get<std::vector<double>>();
  c.shadow_corr_distance_m = j.at("shadow_corr_distance_m").get<double>();
  const json& g = j.at("geometry");
  c.geometry.site_x = g.at("site_x").get<double>();
  c.geometry.site_y = g.at("site_y").get<double>();
  c.geometry.gnb_height_m = g.at("gnb_height_m").get<double>();
  c.geometry.ue_height_m = g.at("ue_height_m").get<double>();
  c.geometry.start_radius_min_m = g.at("start_radius_min_m").get<double>();
  c.geometry.start_radius_max_m = g.at("start_radius_max_m").get<double>();
  return c;
}

json to_json(const DatasetManifest& m) {
  json split = json::array();
  for (Split s : m.split) split.push_back(to_string(s));
  json j = {{"schema_version", m.schema_version},
            {"master_seed", m.master_seed},
            {"rng_algorithm", m.rng_algorithm},
            {"mobility", m.mobility},
            {"routes", m.routes},
            {"steps", m.steps},
            {"period_ms", m.period_ms},
            {"channel", to_json(m.channel)},
            {"split", split},
            {"route_files", m.route_files}};
  j["bandit"] = m.bandit ? to_json(*m.bandit) : json(nullptr);
  j["mask_seed"] = m.mask_seed ? json(*m.mask_seed) : json(nullptr);
  return j;
}

DatasetManifest manifest_from_json(const json& j) {
  DatasetManifest m;
  m.schema_version = j.at("schema_version").get<int>();
  if (m.schema_version != kDatasetSchemaVersion) {
    throw std::invalid_argument("unsupported dataset schema_version " + std::to_string(m.schema_version));
  }
  m.master_seed = j.at("master_seed").get<std::uint64_t>();
  m.rng_algorithm = j.at("rng_algorithm").get<std::string>();
  m.mobility = j.at("mobility").get<std::string>();
  m.routes = j.at("routes").get<std::size_t>();
  m.steps = j.at("steps").get<std::size_t>();
  m.period_ms = j.at("period_ms").get<double>();
  m.channel = channel_from_json(j.at("channel"));
  m.channel.steps = m.steps;
  if (!j.at("bandit").is_null()) m.bandit = bandit_from_json(j.at("bandit"));
  if (j.contains("mask_seed") && !j.at("mask_seed").is_null()) m.mask_seed = j.at("mask_seed").get<std::uint64_t>();
  for (const auto& s : j.at("split")) m.split.push_back(split_from_name(s.get<std::string>()));
  m.route_files = j.at("route_files").get<std::vector<std::string>>();
  if (m.split.size() != m.routes || m.route_files.size() != m.routes) {
    throw std::invalid_argument("manifest: split and route_files must list every route");
  }
  return m;
}

std::string route_file_name(std::size_t index) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "route_%04zu.csv", index);
  return buf;
}

std::string trace_to_csv(const channel::TraceSet& tr) {
  const std::size_t m = tr.links;
  std::string out = "t";
  auto head = [&](const char* prefix) {
    for (std::size_t i = 1; i <= m; ++i) out += "," + std::string(prefix) + std::to_string(i);
  };
  head("snr_db_");
  head("rate_bps_");
  if (tr.masked()) {
    head("meas_");
    head("obs_snr_db_");
  }
  out += '\n';
  for (std::size_t t = 0; t < tr.steps; ++t) {
    out += std::to_string(t);
    for (std::size_t i = 0; i < m; ++i) out += "," + format_double(tr.snr(t, i));
    for (std::size_t i = 0; i < m; ++i) out += "," + format_double(tr.rate(t, i));
    if (tr.masked()) {
      for (std::size_t i = 0; i < m; ++i) out += tr.measured(t, i) ? ",1" : ",0";
      for (std::size_t i = 0; i < m; ++i) {
        out += ',';
        if (tr.measured(t, i)) out += format_double(tr.obs_snr_db[tr.at(t, i)]);
      }
    }
    out += '\n';
  }
  return out;
}

channel::TraceSet trace_from_csv(const std::filesystem::path& file) {
  const CsvTable table = read_csv(file);
  std::size_t m = 0;
  while (true) {
    const std::string name = "snr_db_" + std::to_string(m + 1);
    bool found = false;
    for (const auto& h : table.header) found = found || h == name;
    if (!found) break;
    ++m;
  }
  if (m == 0) {
    throw std::invalid_argument(file.string() + ": no snr_db_ columns");
  }
  bool masked = false;
  for (const auto& h : table.header) masked = masked || h == "meas_1";

  channel::TraceSet tr;
  tr.steps = table.rows.size();
  tr.links = m;
  tr.snr_db.resize(tr.steps * m);
  tr.rate_bps.resize(tr.steps * m);
  if (masked) {
    tr.mask.resize(tr.steps * m);
    tr.obs_snr_db.assign(tr.steps * m, std::nan(""));
  }
  const std::size_t c_t = table.column("t");
  std::vector<std::size_t> c_snr, c_rate, c_meas, c_obs;
  for (std::size_t i = 1; i <= m; ++i) {
    c_snr.push_back(table.column("snr_db_" + std::to_string(i)));
    c_rate.push_back(table.column("rate_bps_" + std::to_string(i)));
    if (masked) {
      c_meas.push_back(table.column("meas_" + std::to_string(i)));
      c_obs.push_back(table.column("obs_snr_db_" + std::to_string(i)));
    }
  }
  for (std::size_t t = 0; t < tr.steps; ++t) {
    const auto& row = table.rows[t];
    if (parse_int(row[c_t]) != static_cast<long long>(t)) {
      throw std::invalid_argument(file.string() + ": steps must be numbered 0, 1, 2, ...");
    }
    for (std::size_t i = 0; i < m; ++i) {
      tr.snr_db[tr.at(t, i)] = parse_double(row[c_snr[i]]);
      tr.rate_bps[tr.at(t, i)] = parse_double(row[c_rate[i]]);
      if (!masked) continue;
      const long long flag = parse_int(row[c_meas[i]]);
      if (flag != 0 && flag != 1) {
        throw std::invalid_argument(file.string() + ": meas columns must be 0 or 1");
      }
      tr.mask[tr.at(t, i)] = static_cast<std::uint8_t>(flag);
      if (flag) {
        tr.obs_snr_db[tr.at(t, i)] = parse_double(row[c_obs[i]]);
      } else if (!row[c_obs[i]].empty()) {
        throw std::invalid_argument(file.string() + ": observation present on an unmeasured slot");
      }
    }
  }
  return tr;
}

std::vector<channel::TraceSet> Dataset::split_routes(Split s) const {
  std::vector<channel::TraceSet> out;
  for (std::size_t r = 0; r < routes.size(); ++r) {
    if (manifest.split[r] == s) out.push_back(routes[r]);
  }
  return out;
}

void write_manifest(const std::filesystem::path& dir, const DatasetManifest& m) {
  write_file_atomic(dir / "manifest.json", to_json(m).dump(2) + "\n");
}

Dataset load_dataset(const std::filesystem::path& dir) {
  const auto manifest_path = dir / "manifest.json";
  if (!std::filesystem::exists(manifest_path)) {
    throw std::runtime_error("no dataset at " + dir.string() + " (manifest.json missing)");
  }
  Dataset ds;
  ds.dir = dir;
  ds.manifest = manifest_from_json(json::parse(read_file(manifest_path)));
  for (std::size_t r = 0; r < ds.manifest.routes; ++r) {
    channel::TraceSet tr = trace_from_csv(dir / ds.manifest.route_files[r]);
    if (tr.links != ds.manifest.channel.links.size() || tr.steps != ds.manifest.steps) {
      throw std::invalid_argument(ds.manifest.route_files[r] + " does not match the manifest shape");
    }
    if (tr.masked() != ds.masked()) {
      throw std::invalid_argument(ds.manifest.route_files[r] + ": mask columns disagree with the manifest");
    }
    tr.seed = channel::route_seed(ds.manifest.master_seed, r);
    tr.mobility = ds.manifest.mobility;
    tr.period_s = ds.manifest.period_ms / 1000.0;
    ds.routes.push_back(std::move(tr));
  }
  return ds;
}

}  // namespace ratepred::io
