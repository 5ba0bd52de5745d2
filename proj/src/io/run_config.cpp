#include "ratepred/io/run_config.hpp"

#include <set>
#include <stdexcept>

#include "ratepred/io/csv.hpp"
#include "ratepred/io/dataset_io.hpp"

namespace ratepred::io {

using nlohmann::json;

namespace {

void reject_unknown(const json& j, const std::set<std::string>& known, const std::string& where) {
  if (!j.is_object()) {
    throw std::invalid_argument("config " + where + " must be an object");
  }
  for (const auto& [key, value] : j.items()) {
    if (!known.contains(key)) {
      throw std::invalid_argument("unknown config key '" + where + key + "'");
    }
  }
}

template <class T>
void take(const json& j, const char* key, T& field) {
  if (j.contains(key)) field = j.at(key).get<T>();
}

}  // namespace

RunConfig apply_config_json(RunConfig c, const json& j) {
  reject_unknown(j, {"seed", "mobility", "routes", "steps", "links", "bandit", "model", "training", "output_dir"}, "");
  try {
    take(j, "seed", c.seed);
    take(j, "mobility", c.mobility);
    take(j, "routes", c.routes);
    take(j, "steps", c.steps);
    if (j.contains("links")) c.links = links_from_json(j.at("links"));
    if (j.contains("output_dir")) c.output_dir = j.at("output_dir").get<std::string>();
    if (j.contains("bandit")) {
      const json& b = j.at("bandit");
      reject_unknown(b, {"epsilon", "eta", "k", "noise_std_db"}, "bandit.");
      take(b, "epsilon", c.bandit.epsilon);
      take(b, "eta", c.bandit.eta);
      take(b, "k", c.bandit.k);
      take(b, "noise_std_db", c.bandit.noise_std_db);
    }
    if (j.contains("model")) {
      const json& m = j.at("model");
      reject_unknown(m, {"window", "embed_dim", "heads", "ffn_dim", "head_hidden", "kernel_size", "dropout",
                         "rate_unit_bps"}, "model.");
      take(m, "window", c.model.window);
      take(m, "embed_dim", c.model.embed_dim);
      take(m, "heads", c.model.heads);
      take(m, "ffn_dim", c.model.ffn_dim);
      take(m, "head_hidden", c.model.head_hidden);
      take(m, "kernel_size", c.model.kernel_size);
      take(m, "dropout", c.model.dropout);
      take(m, "rate_unit_bps", c.model.rate_unit_bps);
    }
    if (j.contains("training")) {
      const json& t = j.at("training");
      reject_unknown(t, {"epochs", "batch_size", "stride", "lr", "beta1", "beta2", "adam_epsilon", "seed"},
                     "training.");
      take(t, "epochs", c.training.epochs);
      take(t, "batch_size", c.training.batch_size);
      take(t, "stride", c.training.stride);
      take(t, "lr", c.training.adam.lr);
      take(t, "beta1", c.training.adam.beta1);
      take(t, "beta2", c.training.adam.beta2);
      take(t, "adam_epsilon", c.training.adam.epsilon);
      take(t, "seed", c.training.seed);
    }
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("config value has the wrong type: ") + e.what());
  }
  return c;
}

RunConfig load_run_config(const std::filesystem::path& file, RunConfig base) {
  json j;
  try {
    j = json::parse(read_file(file));
  } catch (const json::parse_error& e) {
    throw std::invalid_argument("config " + file.string() + " is not valid JSON: " + e.what());
  }
  return apply_config_json(std::move(base), j);
}

json to_json(const RunConfig& c) {
  const auto& m = c.model;
  const auto& t = c.training;
  return {{"seed", c.seed},
          {"mobility", c.mobility},
          {"routes", c.routes},
          {"steps", c.steps},
          {"links", to_json(c.links)},
          {"bandit", to_json(c.bandit)},
          {"model",
           {{"window", m.window},
            {"embed_dim", m.embed_dim},
            {"heads", m.heads},
            {"ffn_dim", m.ffn_dim},
            {"head_hidden", m.head_hidden},
            {"kernel_size", m.kernel_size},
            {"dropout", m.dropout},
            {"rate_unit_bps", m.rate_unit_bps}}},
          {"training",
           {{"epochs", t.epochs},
            {"batch_size", t.batch_size},
            {"stride", t.stride},
            {"lr", t.adam.lr},
            {"beta1", t.adam.beta1},
            {"beta2", t.adam.beta2},
            {"adam_epsilon", t.adam.epsilon},
            {"seed", t.seed}}},
          {"output_dir", c.output_dir.string()}};
}

model::ModelConfig model_config_for(const RunConfig& c) {
  model::ModelConfig m = c.model;
  m.links = c.links.size();
  m.caps_bps.clear();
  for (const auto& l : c.links) m.caps_bps.push_back(l.rate_cap_bps());
  m.validate();
  return m;
}

}  // namespace ratepred::io
