#pragma once

#include <stdexcept>
#include <string>

#include "json.hpp"
#include "neural.hpp"

namespace risorch {

inline const char* layer_kind_name(LayerKind k) {
    switch (k) {
        case LayerKind::conv1d: return "conv1d";
        case LayerKind::maxpool1d: return "maxpool1d";
        case LayerKind::dense: return "dense";
        case LayerKind::relu: return "relu";
        case LayerKind::dropout: return "dropout";
        case LayerKind::flatten: return "flatten";
    }
    return "?";
}

inline LayerKind layer_kind_from_name(const std::string& name) {
    if (name == "conv1d") return LayerKind::conv1d;
    if (name == "maxpool1d") return LayerKind::maxpool1d;
    if (name == "dense") return LayerKind::dense;
    if (name == "relu") return LayerKind::relu;
    if (name == "dropout") return LayerKind::dropout;
    if (name == "flatten") return LayerKind::flatten;
    throw std::invalid_argument("unknown layer kind '" + name + "'");
}

// Layer-spec header plus the flat parameter vector. Adam state is not part of
// a checkpoint; restored networks resume with a fresh optimizer.
template <class Real>
nlohmann::json network_to_json(const Network<Real>& net) {
    nlohmann::json layers = nlohmann::json::array();
    for (const auto& s : net.layers()) {
        nlohmann::json l;
        l["kind"] = layer_kind_name(s.kind);
        switch (s.kind) {
            case LayerKind::conv1d:
                l["filters"] = s.filters;
                l["kernel_width"] = s.kernel_width;
                break;
            case LayerKind::maxpool1d:
                l["patch_width"] = s.patch_width;
                break;
            case LayerKind::dense:
                l["units"] = s.units;
                break;
            case LayerKind::dropout:
                l["probability"] = s.probability;
                break;
            default:
                break;
        }
        layers.push_back(std::move(l));
    }
    nlohmann::json j;
    j["input_dim"] = net.input_dim();
    j["layers"] = std::move(layers);
    j["parameters"] = net.parameters();
    return j;
}

template <class Real>
Network<Real> network_from_json(const nlohmann::json& j) {
    std::vector<LayerSpec> specs;
    for (const auto& l : j.at("layers")) {
        LayerSpec s;
        s.kind = layer_kind_from_name(l.at("kind").get<std::string>());
        switch (s.kind) {
            case LayerKind::conv1d:
                s.filters = l.at("filters").get<std::size_t>();
                s.kernel_width = l.at("kernel_width").get<std::size_t>();
                break;
            case LayerKind::maxpool1d:
                s.patch_width = l.at("patch_width").get<std::size_t>();
                break;
            case LayerKind::dense:
                s.units = l.at("units").get<std::size_t>();
                break;
            case LayerKind::dropout:
                s.probability = l.at("probability").get<double>();
                break;
            default:
                break;
        }
        specs.push_back(s);
    }
    Network<Real> net(std::move(specs), j.at("input_dim").get<std::size_t>(), 0);
    auto params = j.at("parameters").get<std::vector<Real>>();
    if (params.size() != net.parameter_count())
        throw std::invalid_argument("checkpoint parameter count does not match architecture");
    net.parameters() = std::move(params);
    return net;
}

}  // namespace risorch
