#include "trimnet/network.hpp"

#include <cmath>

#include "trimnet/errors.hpp"
#include "trimnet/rng.hpp"

namespace trimnet {

const char* to_string(Activation a) {
    switch (a) {
        case Activation::identity: return "identity";
        case Activation::relu: return "relu";
        case Activation::tanh: return "tanh";
        case Activation::softmax: return "softmax";
    }
    return "?";
}

Activation activation_from_string(const std::string& s) {
    if (s == "identity") return Activation::identity;
    if (s == "relu") return Activation::relu;
    if (s == "tanh") return Activation::tanh;
    if (s == "softmax") return Activation::softmax;
    throw ConfigError("unknown activation '" + s + "'");
}

bool is_parameterized(const Layer& layer) {
    return std::holds_alternative<DenseLayer>(layer) || std::holds_alternative<Conv2dLayer>(layer);
}

std::size_t layer_param_count(const Layer& layer) {
    if (const auto* d = std::get_if<DenseLayer>(&layer)) return d->weight.size() + d->bias.size();
    if (const auto* c = std::get_if<Conv2dLayer>(&layer)) return c->weight.size() + c->bias.size();
    return 0;
}

const char* layer_kind_name(const Layer& layer) {
    if (std::holds_alternative<DenseLayer>(layer)) return "dense";
    if (std::holds_alternative<Conv2dLayer>(layer)) return "conv2d";
    if (std::holds_alternative<MaxPool2dLayer>(layer)) return "maxpool2d";
    return "flatten";
}

namespace {

[[noreturn]] void layer_error(std::size_t index, const Layer& layer, const std::string& what) {
    throw ConfigError("layer " + std::to_string(index) + " (" + layer_kind_name(layer) + "): " +
                      what);
}

Activation layer_activation(const Layer& layer) {
    if (const auto* d = std::get_if<DenseLayer>(&layer)) return d->activation;
    if (const auto* c = std::get_if<Conv2dLayer>(&layer)) return c->activation;
    return Activation::identity;
}

}  // namespace

std::vector<std::vector<std::size_t>> Network::layer_output_shapes() const {
    if (input_shape.empty()) throw ConfigError("network input shape is empty");
    for (std::size_t d : input_shape) {
        if (d == 0) throw ConfigError("network input shape has a zero dimension");
    }

    std::vector<std::vector<std::size_t>> shapes;
    shapes.reserve(layers.size());
    std::vector<std::size_t> cur = input_shape;

    for (std::size_t idx = 0; idx < layers.size(); ++idx) {
        const Layer& layer = layers[idx];
        if (const auto* d = std::get_if<DenseLayer>(&layer)) {
            if (d->weight.rank() != 2) layer_error(idx, layer, "weight must be 2-D");
            if (d->bias.rank() != 1 || d->bias.dim(0) != d->weight.dim(0))
                layer_error(idx, layer, "bias length must equal weight row count");
            if (cur.size() != 1)
                layer_error(idx, layer,
                            "expects a flat input, got shape " + shape_to_string(cur) +
                                " (insert a flatten layer)");
            if (cur[0] != d->weight.dim(1))
                layer_error(idx, layer,
                            "expects " + std::to_string(d->weight.dim(1)) + " inputs, got " +
                                std::to_string(cur[0]));
            cur = {d->weight.dim(0)};
        } else if (const auto* c = std::get_if<Conv2dLayer>(&layer)) {
            if (c->weight.rank() != 4) layer_error(idx, layer, "weight must be 4-D");
            if (c->bias.rank() != 1 || c->bias.dim(0) != c->weight.dim(0))
                layer_error(idx, layer, "bias length must equal output channel count");
            if (c->stride.first == 0 || c->stride.second == 0)
                layer_error(idx, layer, "stride must be positive");
            if (cur.size() != 3)
                layer_error(idx, layer,
                            "expects input shape [channels, height, width], got " +
                                shape_to_string(cur));
            if (cur[0] != c->weight.dim(1))
                layer_error(idx, layer,
                            "expects " + std::to_string(c->weight.dim(1)) + " input channels, got " +
                                std::to_string(cur[0]));
            const std::size_t ph = cur[1] + 2 * c->padding.first;
            const std::size_t pw = cur[2] + 2 * c->padding.second;
            if (c->weight.dim(2) > ph || c->weight.dim(3) > pw)
                layer_error(idx, layer,
                            "kernel " + std::to_string(c->weight.dim(2)) + "x" +
                                std::to_string(c->weight.dim(3)) + " larger than padded input " +
                                std::to_string(ph) + "x" + std::to_string(pw));
            cur = {c->weight.dim(0), (ph - c->weight.dim(2)) / c->stride.first + 1,
                   (pw - c->weight.dim(3)) / c->stride.second + 1};
        } else if (const auto* p = std::get_if<MaxPool2dLayer>(&layer)) {
            if (p->window.first == 0 || p->window.second == 0 || p->stride.first == 0 ||
                p->stride.second == 0)
                layer_error(idx, layer, "window and stride must be positive");
            if (cur.size() != 3)
                layer_error(idx, layer,
                            "expects input shape [channels, height, width], got " +
                                shape_to_string(cur));
            if (p->window.first > cur[1] || p->window.second > cur[2])
                layer_error(idx, layer, "pool window larger than input");
            cur = {cur[0], (cur[1] - p->window.first) / p->stride.first + 1,
                   (cur[2] - p->window.second) / p->stride.second + 1};
        } else {
            if (cur.size() < 1) layer_error(idx, layer, "nothing to flatten");
            cur = {shape_product(cur)};
        }

        if (layer_activation(layer) == Activation::softmax && idx + 1 != layers.size())
            layer_error(idx, layer, "softmax is permitted only as the final layer's activation");

        shapes.push_back(cur);
    }
    return shapes;
}

std::vector<std::size_t> Network::output_shape() const {
    auto shapes = layer_output_shapes();
    return shapes.empty() ? input_shape : shapes.back();
}

std::size_t Network::param_count() const {
    std::size_t n = 0;
    for (const Layer& layer : layers) n += layer_param_count(layer);
    return n;
}

std::size_t Network::last_parameterized_layer() const {
    for (std::size_t i = layers.size(); i > 0; --i) {
        if (is_parameterized(layers[i - 1])) return i - 1;
    }
    return npos;
}

void init_weights(Network& net, std::uint64_t seed) {
    Rng rng(seed);
    for (Layer& layer : net.layers) {
        if (auto* d = std::get_if<DenseLayer>(&layer)) {
            const double fan_in = static_cast<double>(d->weight.dim(1));
            const double fan_out = static_cast<double>(d->weight.dim(0));
            const double bound = std::sqrt(6.0 / (fan_in + fan_out));
            for (double& w : d->weight.values()) w = rng.uniform(-bound, bound);
            for (double& b : d->bias.values()) b = 0.0;
        } else if (auto* c = std::get_if<Conv2dLayer>(&layer)) {
            const std::size_t receptive = c->weight.dim(2) * c->weight.dim(3);
            const double fan_in = static_cast<double>(c->weight.dim(1) * receptive);
            const double fan_out = static_cast<double>(c->weight.dim(0) * receptive);
            const double bound = std::sqrt(6.0 / (fan_in + fan_out));
            for (double& w : c->weight.values()) w = rng.uniform(-bound, bound);
            for (double& b : c->bias.values()) b = 0.0;
        }
    }
}

}  // namespace trimnet
