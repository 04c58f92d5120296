#include "snce/checkpoint.hpp"

#include <cmath>
#include <fstream>
#include <stdexcept>

namespace snce {

namespace {

const char* activation_name(Activation a) { return a == Activation::relu ? "relu" : "identity"; }

Activation activation_from(const std::string& name, const std::string& where) {
  if (name == "relu") return Activation::relu;
  if (name == "identity") return Activation::identity;
  throw std::invalid_argument(where + ": unknown activation '" + name + "'");
}

Mlp network_from_json(const nlohmann::json& j, const std::string& name) {
  std::vector<DenseLayer> layers;
  std::size_t index = 0;
  for (const auto& lj : j.at("layers")) {
    const std::string where = "checkpoint network " + name + " layer " + std::to_string(index++);
    DenseLayer l;
    l.in_dim = lj.at("in_dim").get<std::size_t>();
    l.out_dim = lj.at("out_dim").get<std::size_t>();
    l.activation = activation_from(lj.at("activation").get<std::string>(), where);
    l.weight = lj.at("weight").get<std::vector<double>>();
    l.bias = lj.at("bias").get<std::vector<double>>();
    if (l.weight.size() != l.in_dim * l.out_dim || l.bias.size() != l.out_dim) {
      throw std::invalid_argument(where + ": parameter count does not match its " + std::to_string(l.out_dim) +
                                  "x" + std::to_string(l.in_dim) + " shape");
    }
    layers.push_back(std::move(l));
  }
  return Mlp(std::move(layers));
}

}  // namespace

nlohmann::ordered_json to_json(const Checkpoint& ckpt) {
  nlohmann::ordered_json j;
  j["format"] = kCheckpointFormat;
  j["version"] = kCheckpointVersion;
  j["run_config"] = to_json(ckpt.run);
  auto nets = nlohmann::ordered_json::array();
  const auto ptrs = ckpt.model.networks();
  for (std::size_t k = 0; k < ptrs.size(); ++k) {
    nlohmann::ordered_json nj;
    nj["name"] = kNetworkNames[k];
    auto layers = nlohmann::ordered_json::array();
    for (const auto& l : ptrs[k]->layers()) {
      nlohmann::ordered_json lj;
      lj["in_dim"] = l.in_dim;
      lj["out_dim"] = l.out_dim;
      lj["activation"] = activation_name(l.activation);
      lj["weight"] = l.weight;
      lj["bias"] = l.bias;
      layers.push_back(std::move(lj));
    }
    nj["layers"] = std::move(layers);
    nets.push_back(std::move(nj));
  }
  j["networks"] = std::move(nets);
  return j;
}

Checkpoint checkpoint_from_json(const nlohmann::json& j) {
  try {
    if (j.at("format").get<std::string>() != kCheckpointFormat) {
      throw std::invalid_argument("not a checkpoint: format tag is '" + j.at("format").get<std::string>() + "'");
    }
    const int version = j.at("version").get<int>();
    if (version != kCheckpointVersion) {
      throw std::invalid_argument("unsupported checkpoint version " + std::to_string(version));
    }
    Checkpoint c;
    c.run = run_config_from_json(j.at("run_config"));
    c.model.shape = c.run.model_shape();
    const auto& nets = j.at("networks");
    auto slots = c.model.networks();
    if (nets.size() != slots.size()) {
      throw std::invalid_argument("checkpoint has " + std::to_string(nets.size()) + " networks, expected " +
                                  std::to_string(slots.size()));
    }
    for (std::size_t k = 0; k < slots.size(); ++k) {
      const auto name = nets[k].at("name").get<std::string>();
      if (name != kNetworkNames[k]) {
        throw std::invalid_argument("checkpoint network " + std::to_string(k) + " is '" + name + "', expected '" +
                                    kNetworkNames[k] + "'");
      }
      *slots[k] = network_from_json(nets[k], name);
    }
    c.model.validate();
    if (!c.model.all_finite()) throw std::invalid_argument("checkpoint contains non-finite parameters");
    return c;
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(std::string("malformed checkpoint: ") + e.what());
  }
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write checkpoint " + path.string());
  out << to_json(ckpt).dump() << '\n';
  if (!out) throw std::runtime_error("failed writing checkpoint " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read checkpoint " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::parse_error& e) {
    throw std::runtime_error("checkpoint " + path.string() + " is not valid JSON: " + e.what());
  }
  return checkpoint_from_json(j);
}

}  // namespace snce
