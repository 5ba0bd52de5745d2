#include "ratepred/channel/simulate.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

#include "ratepred/channel/propagation.hpp"
#include "ratepred/measure/rate_map.hpp"

namespace ratepred::channel {

void validate(const LinkConfig& link) {
  auto fail = [&](const char* what) {
    throw std::invalid_argument("link " + std::to_string(link.link_id) + ": " + what);
  };
  if (!(link.bandwidth_hz > 0.0)) {
    fail("bandwidth must be positive");
  }
  if (!(link.beta > 0.0 && link.beta <= 1.0)) {
    fail("beta must lie in (0, 1]");
  }
  if (!(link.rho_max > 0.0)) {
    fail("rho_max must be positive");
  }
  if (!(link.carrier_freq_ghz > 0.0)) {
    fail("carrier frequency must be positive");
  }
}

std::vector<LinkConfig> default_links() {
  std::vector<LinkConfig> links;
  auto make = [](int id, int gnb, int rx, double f_ghz, double bw) {
    LinkConfig l;
    l.link_id = id;
    l.gnb_id = gnb;
    l.rx_id = rx;
    l.carrier_freq_ghz = f_ghz;
    l.bandwidth_hz = bw;
    return l;
  };
  links.push_back(make(1, 1, 3, 3.5, 100e6));
  links.push_back(make(2, 1, 4, 3.5, 100e6));
  links.push_back(make(3, 2, 1, 15.0, 200e6));
  links.push_back(make(4, 2, 2, 15.0, 200e6));
  return links;
}

double default_shadow_sigma_db(double carrier_freq_ghz) { return carrier_freq_ghz < 7.125 ? 4.0 : 6.0; }

ChannelConfig default_channel_config() {
  ChannelConfig c;
  c.links = default_links();
  c.antennas = {
      default_patch(1, Vec3{1.0, 0.0, 0.0}),
      default_patch(2, Vec3{-1.0, 0.0, 0.0}),
      default_dipole(3, Vec3{0.0, 0.0, 1.0}),
      default_dipole(4, Vec3{0.0, 1.0, 0.0}),
  };
  for (const auto& l : c.links) {
    c.shadow_sigma_db.push_back(default_shadow_sigma_db(l.carrier_freq_ghz));
  }
  return c;
}

namespace {

const AntennaModel& antenna_for(const ChannelConfig& c, int rx_id) {
  for (const auto& a : c.antennas) {
    if (a.rx_id == rx_id) {
      return a;
    }
  }
  throw std::invalid_argument("no antenna model for RX" + std::to_string(rx_id));
}

}  // namespace

void validate(const ChannelConfig& config) {
  if (config.links.empty()) {
    throw std::invalid_argument("channel config: no links");
  }
  for (std::size_t i = 0; i < config.links.size(); ++i) {
    const LinkConfig& l = config.links[i];
    validate(l);
    if (l.link_id != static_cast<int>(i) + 1) {
      throw std::invalid_argument("channel config: link ids must run 1..M in order");
    }
    antenna_for(config, l.rx_id);
  }
  for (const auto& a : config.antennas) {
    if (!(norm(a.boresight) > 0.0) || a.floor_db > 0.0) {
      throw std::invalid_argument("antenna RX" + std::to_string(a.rx_id) + ": invalid boresight or floor");
    }
  }
  if (config.shadow_sigma_db.size() != config.links.size()) {
    throw std::invalid_argument("channel config: need one shadowing sigma per link");
  }
  for (double s : config.shadow_sigma_db) {
    if (!(s >= 0.0)) {
      throw std::invalid_argument("channel config: shadowing sigma must be non-negative");
    }
  }
  if (!(config.shadow_corr_distance_m > 0.0)) {
    throw std::invalid_argument("channel config: correlation distance must be positive");
  }
  const Geometry& g = config.geometry;
  if (!(g.start_radius_min_m >= 0.0 && g.start_radius_max_m >= g.start_radius_min_m)) {
    throw std::invalid_argument("channel config: invalid start annulus");
  }
  if (config.steps == 0) {
    throw std::invalid_argument("channel config: steps must be positive");
  }
}

std::uint64_t route_seed(std::uint64_t master_seed, std::size_t route_index) {
  return stable_hash(master_seed, route_index);
}

TraceSet simulate_route(const ChannelConfig& config, const MobilityLevel& level, std::uint64_t seed) {
  validate(config);
  using std::numbers::pi;
  const std::size_t m = config.links.size();
  const Geometry& geo = config.geometry;
  Rng rng(seed);

  UEState ue;
  const double r2 = rng.uniform(geo.start_radius_min_m * geo.start_radius_min_m,
                                geo.start_radius_max_m * geo.start_radius_max_m);
  const double bearing = rng.uniform(-pi, pi);
  ue.x = geo.site_x + std::sqrt(r2) * std::cos(bearing);
  ue.y = geo.site_y + std::sqrt(r2) * std::sin(bearing);
  ue.heading = wrap_angle(rng.uniform(-pi, pi));
  ue.speed = rng.uniform(0.0, level.v_max);
  ue.yaw = wrap_angle(rng.uniform(-pi, pi));
  ue.pitch = 0.0;

  std::vector<double> shadow(m);
  for (std::size_t i = 0; i < m; ++i) {
    shadow[i] = config.shadow_sigma_db[i] * rng.normal();
  }

  std::vector<const AntennaModel*> antennas(m);
  for (std::size_t i = 0; i < m; ++i) {
    antennas[i] = &antenna_for(config, config.links[i].rx_id);
  }

  TraceSet trace;
  trace.seed = seed;
  trace.mobility = level.name;
  trace.steps = config.steps;
  trace.links = m;
  trace.period_s = kStepSeconds;
  trace.snr_db.resize(config.steps * m);
  trace.rate_bps.resize(config.steps * m);

  for (std::size_t t = 0; t < config.steps; ++t) {
    if (t > 0) {
      ue = step_mobility(ue, level, rng);
      ue = step_rotation(ue, level, rng);
      const double moved = ue.distance_since_shadow_update;
      ue.distance_since_shadow_update = 0.0;
      for (std::size_t i = 0; i < m; ++i) {
        shadow[i] = shadowing_step(shadow[i], moved, config.shadow_sigma_db[i],
                                   config.shadow_corr_distance_m, rng);
      }
    }
    const Vec3 to_site{geo.site_x - ue.x, geo.site_y - ue.y, geo.gnb_height_m - geo.ue_height_m};
    const double d3 = norm(to_site);
    const Vec3 unit{to_site.x / d3, to_site.y / d3, to_site.z / d3};
    Vec3 body = to_body_frame(unit, ue.yaw, ue.pitch);
    const double bn = norm(body);
    body = Vec3{body.x / bn, body.y / bn, body.z / bn};
    for (std::size_t i = 0; i < m; ++i) {
      const LinkConfig& link = config.links[i];
      const double gain = antenna_gain(*antennas[i], body);
      const double pl = pathloss_db(d3, link.carrier_freq_ghz);
      const double s = snr_db(link, gain, pl, shadow[i]);
      trace.snr_db[trace.at(t, i)] = s;
      trace.rate_bps[trace.at(t, i)] = measure::rate_from_snr_db(s, link);
    }
  }
  return trace;
}

}  // namespace ratepred::channel
