#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "trimnet/engine.hpp"
#include "trimnet/network.hpp"

namespace trimnet {

enum class OptimizerKind { sgd_nesterov, adam };

const char* to_string(OptimizerKind k);
OptimizerKind optimizer_from_string(const std::string& s);

struct OptimizerConfig {
    OptimizerKind kind = OptimizerKind::sgd_nesterov;
    double learning_rate = 1e-3;
    double momentum = 0.9;  // sgd_nesterov
    double beta1 = 0.9;     // adam
    double beta2 = 0.99;
    double epsilon = 1e-8;
};

// One momentum update on a flat parameter block. The gradient must have been
// evaluated at the look-ahead point params + momentum * velocity; then
// v <- momentum * v - lr * g and params += v.
void sgd_nesterov_step(std::span<double> params, std::span<const double> grad,
                       std::span<double> velocity, double lr, double momentum);

// One Adam update with bias correction; t is the 1-based step number of this
// update.
void adam_step(std::span<double> params, std::span<const double> grad, std::span<double> m,
               std::span<double> v, std::size_t t, double lr, double beta1, double beta2,
               double epsilon);

// Holds per-parameter optimizer state for one network. Rebuild it whenever the
// network's architecture changes (e.g. after pruning).
class NetworkOptimizer {
public:
    NetworkOptimizer(const Network& net, OptimizerConfig config);

    const OptimizerConfig& config() const { return config_; }
    std::size_t step_count() const { return steps_; }

    // Point at which the training loop must evaluate gradients. For Nesterov
    // this is the look-ahead network params + momentum * velocity (stored in
    // an internal scratch network); for Adam it is `net` itself.
    const Network& gradient_eval_point(const Network& net);

    // Applies one update to `net` in place.
    void step(Network& net, const ParamGradients& grads);

private:
    struct Slot {
        Tensor weight_a, bias_a;  // velocity (sgd) / first moment (adam)
        Tensor weight_b, bias_b;  // second moment (adam only)
    };

    OptimizerConfig config_;
    std::vector<Slot> slots_;  // one per layer; empty tensors when parameterless
    std::size_t steps_ = 0;
    Network lookahead_;
};

}  // namespace trimnet
