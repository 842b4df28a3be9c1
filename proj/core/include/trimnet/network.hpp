#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "trimnet/tensor.hpp"

namespace trimnet {

enum class Activation { identity, relu, tanh, softmax };

const char* to_string(Activation a);
Activation activation_from_string(const std::string& s);

// Fully connected layer: weight [m, n], bias [m].
// weight(i, j) connects input neuron j to output neuron i.
struct DenseLayer {
    Tensor weight;
    Tensor bias;
    Activation activation = Activation::identity;
};

// 2-D convolution (cross-correlation): weight [k_out, k_in, d1, d2], bias [k_out].
// Kernel (i, j) correlates input channel j into output channel i.
struct Conv2dLayer {
    Tensor weight;
    Tensor bias;
    std::pair<std::size_t, std::size_t> stride{1, 1};
    std::pair<std::size_t, std::size_t> padding{0, 0};
    Activation activation = Activation::identity;
};

// Per-channel max pooling, no padding. Stride defaults to the window.
struct MaxPool2dLayer {
    std::pair<std::size_t, std::size_t> window{2, 2};
    std::pair<std::size_t, std::size_t> stride{2, 2};
};

// Reshapes [B, c, h, w] (or any rank >= 2) to [B, c*h*w], channel-major.
struct FlattenLayer {};

using Layer = std::variant<DenseLayer, Conv2dLayer, MaxPool2dLayer, FlattenLayer>;

bool is_parameterized(const Layer& layer);
std::size_t layer_param_count(const Layer& layer);
const char* layer_kind_name(const Layer& layer);

// Ordered sequence of layers over a fixed per-sample input shape.
struct Network {
    std::vector<std::size_t> input_shape;
    std::vector<Layer> layers;

    // Per-sample output shape of each layer; throws ConfigError naming the
    // first incompatible layer. Also enforces that softmax appears only as
    // the final layer's activation.
    std::vector<std::vector<std::size_t>> layer_output_shapes() const;

    void validate() const { (void)layer_output_shapes(); }

    std::vector<std::size_t> output_shape() const;

    std::size_t param_count() const;

    // Index of the last dense/conv layer, or npos when none exists.
    std::size_t last_parameterized_layer() const;

    static constexpr std::size_t npos = static_cast<std::size_t>(-1);
};

// Fills every weight tensor with uniform values in
// [-sqrt(6/(fan_in+fan_out)), +sqrt(6/(fan_in+fan_out))]; biases are zeroed.
void init_weights(Network& net, std::uint64_t seed);

}  // namespace trimnet
