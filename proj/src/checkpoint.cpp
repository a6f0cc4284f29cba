#include "coadapt/checkpoint.hpp"

#include <fstream>

namespace coadapt {

using nlohmann::json;

json mlp_to_json(const Mlp& net) {
  json layers = json::array();
  for (const auto& layer : net.layers()) {
    const Matrix& w = layer.weight.value();
    std::vector<double> weights;
    weights.reserve(w.size());
    for (Eigen::Index r = 0; r < w.rows(); ++r) {
      for (Eigen::Index c = 0; c < w.cols(); ++c) weights.push_back(w(r, c));
    }
    const Matrix& b = layer.bias.value();
    layers.push_back({{"rows", w.rows()},
                      {"cols", w.cols()},
                      {"weight", weights},
                      {"bias", std::vector<double>(b.data(), b.data() + b.size())}});
  }
  return {{"format", "coadapt-mlp/1"},
          {"output_activation",
           net.output_activation() == OutputActivation::kTanh ? "tanh" : "none"},
          {"layers", layers}};
}

Mlp mlp_from_json(const json& j) {
  if (j.value("format", std::string()) != "coadapt-mlp/1") {
    throw UsageError("not a coadapt-mlp/1 checkpoint");
  }
  const auto& layers = j.at("layers");
  if (layers.empty()) throw UsageError("checkpoint has no layers");
  std::vector<int> widths{layers.front().at("rows").get<int>()};
  for (const auto& layer : layers) {
    if (layer.at("rows").get<int>() != widths.back()) {
      throw UsageError("checkpoint layer widths do not chain");
    }
    widths.push_back(layer.at("cols").get<int>());
  }
  const auto output = j.at("output_activation").get<std::string>() == "tanh"
                          ? OutputActivation::kTanh
                          : OutputActivation::kNone;
  std::mt19937_64 unused(0);
  Mlp net(widths, output, unused);
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const auto weights = layers[i].at("weight").get<std::vector<double>>();
    const auto bias = layers[i].at("bias").get<std::vector<double>>();
    Matrix& w = net.layers()[i].weight.mutable_value();
    Matrix& b = net.layers()[i].bias.mutable_value();
    if (weights.size() != static_cast<std::size_t>(w.size()) ||
        bias.size() != static_cast<std::size_t>(b.size())) {
      throw UsageError("checkpoint layer " + std::to_string(i) + " has wrong size");
    }
    for (Eigen::Index r = 0; r < w.rows(); ++r) {
      for (Eigen::Index c = 0; c < w.cols(); ++c) w(r, c) = weights[r * w.cols() + c];
    }
    for (Eigen::Index c = 0; c < b.size(); ++c) b(0, c) = bias[c];
  }
  return net;
}

void save_mlp(const Mlp& net, const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << mlp_to_json(net).dump() << '\n';
}

Mlp load_mlp(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  return mlp_from_json(json::parse(in));
}

void assign_weights(Mlp& target, const Mlp& source) {
  if (target.layers().size() != source.layers().size()) {
    throw UsageError("assign_weights: layer count differs");
  }
  for (std::size_t i = 0; i < target.layers().size(); ++i) {
    auto& t = target.layers()[i];
    const auto& s = source.layers()[i];
    if (t.weight.rows() != s.weight.rows() || t.weight.cols() != s.weight.cols()) {
      throw UsageError("assign_weights: layer shapes differ");
    }
    t.weight.mutable_value() = s.weight.value();
    t.bias.mutable_value() = s.bias.value();
  }
}

}  // namespace coadapt
