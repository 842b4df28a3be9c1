#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "trimnet/engine.hpp"
#include "trimnet/network.hpp"
#include "trimnet/tensor.hpp"

namespace trimnet {

enum class RegularizerKind { none, l1, l2, guided_l1, guided_l2 };

const char* to_string(RegularizerKind k);
RegularizerKind regularizer_from_string(const std::string& s);

// Penalty configuration. Biases are never penalized; target_layers lists the
// dense/conv layers whose weights enter the penalty.
struct RegularizerConfig {
    RegularizerKind kind = RegularizerKind::none;
    double lambda = 0.0;
    std::vector<std::size_t> target_layers;
};

// Position weight (i + j) / (m + n) with 1-based indices: strictly increasing
// in i and j, so high-index rows and columns are penalized hardest. Throws
// std::invalid_argument when an index is out of range.
double guided_coefficient(std::size_t i, std::size_t j, std::size_t m, std::size_t n);

// Penalty of a 2-D weight: lambda * sum c_ij * p(W_ij), with c_ij = 1 for the
// standard kinds and the guided coefficient otherwise, and p = |.| (L1) or
// (.)^2 (L2).
double dense_penalty(const Tensor& weight, const RegularizerConfig& config);

// Penalty of a 4-D conv weight: kernel (i, j) contributes its L1 norm (L1
// kinds) or squared L2 norm (L2 kinds), position-weighted over the channel
// grid for guided kinds.
double conv_penalty(const Tensor& weight, const RegularizerConfig& config);

// Elementwise gradient of dense_penalty/conv_penalty. The L1 sub-gradient at
// an exact zero is 0.
Tensor penalty_grad(const Tensor& weight, const RegularizerConfig& config);

// Sum of per-layer penalties over config.target_layers. Throws ConfigError
// when a target index is not a dense/conv layer.
double total_penalty(const Network& net, const RegularizerConfig& config);

// Adds penalty gradients for the target layers onto existing data-loss
// gradients.
void add_penalty_grads(const Network& net, const RegularizerConfig& config, ParamGradients& grads);

}  // namespace trimnet
