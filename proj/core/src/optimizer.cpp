#include "trimnet/optimizer.hpp"

#include <cmath>
#include <stdexcept>

#include "trimnet/errors.hpp"

namespace trimnet {
namespace {

// Invokes fn(weight&, bias&, layer_index) for every parameterized layer.
template <typename Net, typename Fn>
void for_each_param(Net& net, Fn&& fn) {
    for (std::size_t idx = 0; idx < net.layers.size(); ++idx) {
        std::visit(
            [&](auto& layer) {
                using T = std::decay_t<decltype(layer)>;
                if constexpr (std::is_same_v<T, DenseLayer> || std::is_same_v<T, Conv2dLayer>)
                    fn(layer.weight, layer.bias, idx);
            },
            net.layers[idx]);
    }
}

void check_span_sizes(std::size_t p, std::size_t g, std::size_t s, const char* what) {
    if (p != g || p != s)
        throw std::invalid_argument(std::string(what) + ": parameter/gradient/state sizes differ");
}

}  // namespace

const char* to_string(OptimizerKind k) {
    switch (k) {
        case OptimizerKind::sgd_nesterov: return "sgd-nesterov";
        case OptimizerKind::adam: return "adam";
    }
    throw std::invalid_argument("unknown optimizer kind");
}

OptimizerKind optimizer_from_string(const std::string& s) {
    if (s == "sgd-nesterov" || s == "sgd_nesterov" || s == "sgd") return OptimizerKind::sgd_nesterov;
    if (s == "adam") return OptimizerKind::adam;
    throw ConfigError("unknown optimizer \"" + s + "\" (expected sgd-nesterov or adam)");
}

void sgd_nesterov_step(std::span<double> params, std::span<const double> grad,
                       std::span<double> velocity, double lr, double momentum) {
    check_span_sizes(params.size(), grad.size(), velocity.size(), "sgd_nesterov_step");
    for (std::size_t i = 0; i < params.size(); ++i) {
        velocity[i] = momentum * velocity[i] - lr * grad[i];
        params[i] += velocity[i];
    }
}

void adam_step(std::span<double> params, std::span<const double> grad, std::span<double> m,
               std::span<double> v, std::size_t t, double lr, double beta1, double beta2,
               double epsilon) {
    check_span_sizes(params.size(), grad.size(), m.size(), "adam_step");
    if (m.size() != v.size()) throw std::invalid_argument("adam_step: moment sizes differ");
    if (t == 0) throw std::invalid_argument("adam_step: t is 1-based");
    const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(t));
    const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(t));
    for (std::size_t i = 0; i < params.size(); ++i) {
        m[i] = beta1 * m[i] + (1.0 - beta1) * grad[i];
        v[i] = beta2 * v[i] + (1.0 - beta2) * grad[i] * grad[i];
        const double m_hat = m[i] / bc1;
        const double v_hat = v[i] / bc2;
        params[i] -= lr * m_hat / (std::sqrt(v_hat) + epsilon);
    }
}

NetworkOptimizer::NetworkOptimizer(const Network& net, OptimizerConfig config)
    : config_(config) {
    if (!(config_.learning_rate > 0.0))
        throw ConfigError("optimizer: learning rate must be positive");
    if (!(config_.momentum >= 0.0 && config_.momentum < 1.0))
        throw ConfigError("optimizer: momentum must be in [0, 1)");
    if (!(config_.beta1 >= 0.0 && config_.beta1 < 1.0 && config_.beta2 >= 0.0 &&
          config_.beta2 < 1.0))
        throw ConfigError("optimizer: betas must be in [0, 1)");
    if (!(config_.epsilon > 0.0)) throw ConfigError("optimizer: epsilon must be positive");

    slots_.resize(net.layers.size());
    const bool adam = config_.kind == OptimizerKind::adam;
    for_each_param(net, [&](const Tensor& w, const Tensor& b, std::size_t idx) {
        slots_[idx].weight_a = Tensor::zeros(w.shape());
        slots_[idx].bias_a = Tensor::zeros(b.shape());
        if (adam) {
            slots_[idx].weight_b = Tensor::zeros(w.shape());
            slots_[idx].bias_b = Tensor::zeros(b.shape());
        }
    });
}

const Network& NetworkOptimizer::gradient_eval_point(const Network& net) {
    if (config_.kind != OptimizerKind::sgd_nesterov) return net;
    lookahead_ = net;  // reuses allocations after the first step
    const double mu = config_.momentum;
    for_each_param(lookahead_, [&](Tensor& w, Tensor& b, std::size_t idx) {
        Slot& slot = slots_[idx];
        if (!slot.weight_a.same_shape(w) || !slot.bias_a.same_shape(b))
            throw std::invalid_argument(
                "optimizer: network shape changed since construction (layer " +
                std::to_string(idx) + ")");
        for (std::size_t i = 0; i < w.size(); ++i) w[i] += mu * slot.weight_a[i];
        for (std::size_t i = 0; i < b.size(); ++i) b[i] += mu * slot.bias_a[i];
    });
    return lookahead_;
}

void NetworkOptimizer::step(Network& net, const ParamGradients& grads) {
    if (grads.weight.size() != net.layers.size() || grads.bias.size() != net.layers.size())
        throw std::invalid_argument("optimizer: gradient layer count mismatch");
    ++steps_;
    for_each_param(net, [&](Tensor& w, Tensor& b, std::size_t idx) {
        Slot& slot = slots_[idx];
        const Tensor& gw = grads.weight[idx];
        const Tensor& gb = grads.bias[idx];
        if (!gw.same_shape(w) || !gb.same_shape(b))
            throw std::invalid_argument("optimizer: gradient shape mismatch at layer " +
                                        std::to_string(idx));
        if (!slot.weight_a.same_shape(w) || !slot.bias_a.same_shape(b))
            throw std::invalid_argument(
                "optimizer: network shape changed since construction (layer " +
                std::to_string(idx) + ")");
        if (config_.kind == OptimizerKind::sgd_nesterov) {
            sgd_nesterov_step(w.values(), gw.values(), slot.weight_a.values(),
                              config_.learning_rate, config_.momentum);
            sgd_nesterov_step(b.values(), gb.values(), slot.bias_a.values(),
                              config_.learning_rate, config_.momentum);
        } else {
            adam_step(w.values(), gw.values(), slot.weight_a.values(), slot.weight_b.values(),
                      steps_, config_.learning_rate, config_.beta1, config_.beta2,
                      config_.epsilon);
            adam_step(b.values(), gb.values(), slot.bias_a.values(), slot.bias_b.values(), steps_,
                      config_.learning_rate, config_.beta1, config_.beta2, config_.epsilon);
        }
    });
}

}  // namespace trimnet
