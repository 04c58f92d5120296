#include "snce/config.hpp"

#include <fstream>
#include <stdexcept>

namespace snce {

void RunConfig::validate() const {
  nce.validate();
  augment.validate();
  scenario.validate();
  split.validate();
  if (obs_len < 1 || pred_len < 1) throw std::invalid_argument("obs_len and pred_len must be >= 1");
  if (nce.horizon > pred_len) {
    throw std::invalid_argument("sampling horizon " + std::to_string(nce.horizon) + " exceeds pred_len " +
                                std::to_string(pred_len));
  }
  if (stride < 1) throw std::invalid_argument("stride must be >= 1");
  if (hidden_width < 1) throw std::invalid_argument("hidden_width must be >= 1");
  if (batch_size < 1) throw std::invalid_argument("batch_size must be >= 1");
  if (workers < 1) throw std::invalid_argument("workers must be >= 1");
  if (!(optimizer.learning_rate >= 0.0)) throw std::invalid_argument("learning rate must be >= 0");
  if (!(collision_threshold >= 0.0)) throw std::invalid_argument("collision threshold must be >= 0");
  if (data.subsample < 1) throw std::invalid_argument("subsample must be >= 1");
  if (!data.synthetic() && data.val_paths.empty()) {
    throw std::invalid_argument("file-based data needs validation paths as well as training paths");
  }
}

nlohmann::json to_json(const RunConfig& c) {
  using nlohmann::json;
  return json{
      {"nce",
       {{"temperature", c.nce.temperature},
        {"horizon", c.nce.horizon},
        {"contrastive_weight", c.nce.contrastive_weight},
        {"denominator", to_string(c.nce.mode)}}},
      {"augment",
       {{"rho_min", c.augment.rho_min},
        {"rho_max", c.augment.rho_max},
        {"noise_weight", c.augment.noise_weight},
        {"n_directions", c.augment.n_directions},
        {"rng_seed", c.augment.rng_seed}}},
      {"scenario",
       {{"n_agents", c.scenario.n_agents},
        {"n_scenes", c.scenario.n_scenes},
        {"circle_radius", c.scenario.circle_radius},
        {"preferred_speed", c.scenario.preferred_speed},
        {"frame_interval", c.scenario.frame_interval},
        {"steps", c.scenario.steps},
        {"repulsion_strength", c.scenario.repulsion_strength},
        {"repulsion_range", c.scenario.repulsion_range},
        {"tangential_bias", c.scenario.tangential_bias},
        {"angle_jitter", c.scenario.angle_jitter},
        {"seed", c.scenario.seed}}},
      {"split", {{"validation_fraction", c.split.validation_fraction}, {"split_seed", c.split.split_seed}}},
      {"data",
       {{"train_paths", c.data.train_paths},
        {"val_paths", c.data.val_paths},
        {"column_order", to_string(c.data.column_order)},
        {"frame_interval", c.data.frame_interval},
        {"subsample", c.data.subsample}}},
      {"obs_len", c.obs_len},
      {"pred_len", c.pred_len},
      {"stride", c.stride},
      {"hidden_width", c.hidden_width},
      {"optimizer",
       {{"learning_rate", c.optimizer.learning_rate},
        {"beta1", c.optimizer.beta1},
        {"beta2", c.optimizer.beta2},
        {"epsilon", c.optimizer.epsilon}}},
      {"batch_size", c.batch_size},
      {"epochs", c.epochs},
      {"collision_threshold", c.collision_threshold},
      {"collision_mode", to_string(c.collision_mode)},
      {"seed", c.seed},
      {"workers", c.workers},
      {"log_wall_clock", c.log_wall_clock},
  };
}

namespace {

void merge_strict(nlohmann::json& target, const nlohmann::json& patch, const std::string& path) {
  if (!patch.is_object()) throw std::invalid_argument("config section '" + path + "' must be a JSON object");
  for (auto it = patch.begin(); it != patch.end(); ++it) {
    const std::string key_path = path.empty() ? it.key() : path + "." + it.key();
    if (!target.contains(it.key())) throw std::invalid_argument("unknown config key '" + key_path + "'");
    auto& slot = target[it.key()];
    if (slot.is_object()) {
      merge_strict(slot, it.value(), key_path);
    } else {
      slot = it.value();
    }
  }
}

template <typename T>
T field(const nlohmann::json& section, const char* key, const char* where) {
  try {
    return section.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw std::invalid_argument(std::string("config value '") + where + "." + key + "' has the wrong type");
  }
}

}  // namespace

RunConfig run_config_from_json(const nlohmann::json& j, const RunConfig& base) {
  auto full = to_json(base);
  merge_strict(full, j, "");

  RunConfig c;
  const auto& n = full["nce"];
  c.nce.temperature = field<double>(n, "temperature", "nce");
  c.nce.horizon = field<std::size_t>(n, "horizon", "nce");
  c.nce.contrastive_weight = field<double>(n, "contrastive_weight", "nce");
  c.nce.mode = denominator_mode_from_string(field<std::string>(n, "denominator", "nce"));

  const auto& a = full["augment"];
  c.augment.rho_min = field<double>(a, "rho_min", "augment");
  c.augment.rho_max = field<double>(a, "rho_max", "augment");
  c.augment.noise_weight = field<double>(a, "noise_weight", "augment");
  c.augment.n_directions = field<std::size_t>(a, "n_directions", "augment");
  c.augment.rng_seed = field<std::uint64_t>(a, "rng_seed", "augment");

  const auto& s = full["scenario"];
  c.scenario.n_agents = field<std::size_t>(s, "n_agents", "scenario");
  c.scenario.n_scenes = field<std::size_t>(s, "n_scenes", "scenario");
  c.scenario.circle_radius = field<double>(s, "circle_radius", "scenario");
  c.scenario.preferred_speed = field<double>(s, "preferred_speed", "scenario");
  c.scenario.frame_interval = field<double>(s, "frame_interval", "scenario");
  c.scenario.steps = field<std::size_t>(s, "steps", "scenario");
  c.scenario.repulsion_strength = field<double>(s, "repulsion_strength", "scenario");
  c.scenario.repulsion_range = field<double>(s, "repulsion_range", "scenario");
  c.scenario.tangential_bias = field<double>(s, "tangential_bias", "scenario");
  c.scenario.angle_jitter = field<double>(s, "angle_jitter", "scenario");
  c.scenario.seed = field<std::uint64_t>(s, "seed", "scenario");

  const auto& sp = full["split"];
  c.split.validation_fraction = field<double>(sp, "validation_fraction", "split");
  c.split.split_seed = field<std::uint64_t>(sp, "split_seed", "split");

  const auto& d = full["data"];
  c.data.train_paths = field<std::vector<std::string>>(d, "train_paths", "data");
  c.data.val_paths = field<std::vector<std::string>>(d, "val_paths", "data");
  c.data.column_order = column_order_from_string(field<std::string>(d, "column_order", "data"));
  c.data.frame_interval = field<double>(d, "frame_interval", "data");
  c.data.subsample = field<std::size_t>(d, "subsample", "data");

  c.obs_len = field<std::size_t>(full, "obs_len", "run");
  c.pred_len = field<std::size_t>(full, "pred_len", "run");
  c.stride = field<std::size_t>(full, "stride", "run");
  c.hidden_width = field<std::size_t>(full, "hidden_width", "run");

  const auto& o = full["optimizer"];
  c.optimizer.learning_rate = field<double>(o, "learning_rate", "optimizer");
  c.optimizer.beta1 = field<double>(o, "beta1", "optimizer");
  c.optimizer.beta2 = field<double>(o, "beta2", "optimizer");
  c.optimizer.epsilon = field<double>(o, "epsilon", "optimizer");

  c.batch_size = field<std::size_t>(full, "batch_size", "run");
  c.epochs = field<std::size_t>(full, "epochs", "run");
  c.collision_threshold = field<double>(full, "collision_threshold", "run");
  c.collision_mode = collision_mode_from_string(field<std::string>(full, "collision_mode", "run"));
  c.seed = field<std::uint64_t>(full, "seed", "run");
  c.workers = field<std::size_t>(full, "workers", "run");
  c.log_wall_clock = field<bool>(full, "log_wall_clock", "run");
  return c;
}

RunConfig load_run_config(const std::filesystem::path& path, const RunConfig& base) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read config file " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::parse_error& e) {
    throw std::runtime_error("config file " + path.string() + " is not valid JSON: " + e.what());
  }
  return run_config_from_json(j, base);
}

void save_run_config(const std::filesystem::path& path, const RunConfig& cfg) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write config file " + path.string());
  out << to_json(cfg).dump(2) << '\n';
}

RunConfig preset_config(const std::string& name) {
  RunConfig c;
  if (name == "default") return c;
  if (name == "tuned") {
    c.nce.temperature = 0.1412;
    c.nce.horizon = 1;
    c.nce.contrastive_weight = 16.0;
    c.augment.rho_min = 0.22;
    c.augment.rho_max = 3.1;
    c.augment.noise_weight = 0.24;
    return c;
  }
  throw std::invalid_argument("unknown preset '" + name + "' (expected default or tuned)");
}

std::vector<std::string> preset_names() { return {"default", "tuned"}; }

}  // namespace snce
