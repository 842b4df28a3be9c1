#pragma once

#include <utility>
#include <vector>

#include "trimnet/network.hpp"
#include "trimnet/tensor.hpp"

namespace trimnet {

// Intermediate values retained by forward() for gradient computation.
struct ForwardTrace {
    Tensor input;                                       // [B, ...input_shape]
    std::vector<Tensor> pre;                            // pre-activation per layer
    std::vector<Tensor> post;                           // post-activation per layer
    std::vector<std::vector<std::size_t>> pool_argmax;  // per layer; flat source index per output
};

// Gradients with the same shapes as the parameters; empty tensors for
// parameterless layers.
struct ParamGradients {
    std::vector<Tensor> weight;
    std::vector<Tensor> bias;
};

// Evaluates the network on a batch shaped [B, ...input_shape].
std::pair<Tensor, ForwardTrace> forward(const Network& net, const Tensor& batch);

// Forward pass without a trace (evaluation path).
Tensor forward_outputs(const Network& net, const Tensor& batch);

// Gradient of the mean cross-entropy data loss with respect to every weight
// and bias. Requires the final layer to be dense with softmax activation;
// the trace must come from forward() on the same network.
ParamGradients backward(const Network& net, const ForwardTrace& trace,
                        const std::vector<int>& labels);
ParamGradients backward(const Network& net, const ForwardTrace& trace, const Tensor& onehot);

// Mean negative log-likelihood over the batch. Outputs must be softmax
// probabilities (rows summing to 1 within 1e-9); the probability at the true
// class is floored at 1e-12 before taking the log.
double cross_entropy_loss(const Tensor& outputs, const std::vector<int>& labels);
double cross_entropy_loss(const Tensor& outputs, const Tensor& onehot);

// Converts one-hot rows to class indices; throws std::invalid_argument when a
// row is not one-hot.
std::vector<int> onehot_to_labels(const Tensor& onehot);

// Standalone convolution evaluation: input [B, k_in, H, W] -> [B, k_out, H', W'].
Tensor conv2d_forward(const Conv2dLayer& layer, const Tensor& input);

}  // namespace trimnet
