#include "trimnet/regularizer.hpp"

#include <cmath>
#include <stdexcept>

#include "trimnet/errors.hpp"

namespace trimnet {

const char* to_string(RegularizerKind k) {
    switch (k) {
        case RegularizerKind::none: return "none";
        case RegularizerKind::l1: return "l1";
        case RegularizerKind::l2: return "l2";
        case RegularizerKind::guided_l1: return "guided-l1";
        case RegularizerKind::guided_l2: return "guided-l2";
    }
    return "?";
}

RegularizerKind regularizer_from_string(const std::string& s) {
    if (s == "none") return RegularizerKind::none;
    if (s == "l1") return RegularizerKind::l1;
    if (s == "l2") return RegularizerKind::l2;
    if (s == "guided-l1" || s == "guided_l1") return RegularizerKind::guided_l1;
    if (s == "guided-l2" || s == "guided_l2") return RegularizerKind::guided_l2;
    throw ConfigError("unknown regularizer '" + s + "'");
}

namespace {

bool is_l1(RegularizerKind k) {
    return k == RegularizerKind::l1 || k == RegularizerKind::guided_l1;
}

bool is_guided(RegularizerKind k) {
    return k == RegularizerKind::guided_l1 || k == RegularizerKind::guided_l2;
}

}  // namespace

double guided_coefficient(std::size_t i, std::size_t j, std::size_t m, std::size_t n) {
    if (i < 1 || i > m || j < 1 || j > n)
        throw std::invalid_argument("guided coefficient index (" + std::to_string(i) + ", " +
                                    std::to_string(j) + ") out of range for " + std::to_string(m) +
                                    "x" + std::to_string(n));
    return static_cast<double>(i + j) / static_cast<double>(m + n);
}

double dense_penalty(const Tensor& weight, const RegularizerConfig& config) {
    if (config.kind == RegularizerKind::none || config.lambda == 0.0) return 0.0;
    if (weight.rank() != 2) throw std::invalid_argument("dense penalty needs a 2-D weight");
    const std::size_t m = weight.dim(0), n = weight.dim(1);
    const bool l1 = is_l1(config.kind);
    const bool guided = is_guided(config.kind);
    const double inv_mn = 1.0 / static_cast<double>(m + n);

    double sum = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            const double w = weight.at(i, j);
            const double p = l1 ? std::abs(w) : w * w;
            // 1-based indices in the position weight.
            const double c = guided ? static_cast<double>(i + j + 2) * inv_mn : 1.0;
            sum += c * p;
        }
    }
    return config.lambda * sum;
}

double conv_penalty(const Tensor& weight, const RegularizerConfig& config) {
    if (config.kind == RegularizerKind::none || config.lambda == 0.0) return 0.0;
    if (weight.rank() != 4) throw std::invalid_argument("conv penalty needs a 4-D weight");
    const std::size_t ko = weight.dim(0), ki = weight.dim(1);
    const std::size_t kernel_size = weight.dim(2) * weight.dim(3);
    const bool l1 = is_l1(config.kind);
    const bool guided = is_guided(config.kind);
    const double inv_kk = 1.0 / static_cast<double>(ko + ki);

    double sum = 0.0;
    for (std::size_t i = 0; i < ko; ++i) {
        for (std::size_t j = 0; j < ki; ++j) {
            const double* kern = weight.data() + (i * ki + j) * kernel_size;
            double norm = 0.0;
            for (std::size_t t = 0; t < kernel_size; ++t)
                norm += l1 ? std::abs(kern[t]) : kern[t] * kern[t];
            const double c = guided ? static_cast<double>(i + j + 2) * inv_kk : 1.0;
            sum += c * norm;
        }
    }
    return config.lambda * sum;
}

Tensor penalty_grad(const Tensor& weight, const RegularizerConfig& config) {
    Tensor grad(weight.shape());
    if (config.kind == RegularizerKind::none || config.lambda == 0.0) return grad;
    const bool l1 = is_l1(config.kind);
    const bool guided = is_guided(config.kind);

    if (weight.rank() == 2) {
        const std::size_t m = weight.dim(0), n = weight.dim(1);
        const double inv_mn = 1.0 / static_cast<double>(m + n);
        for (std::size_t i = 0; i < m; ++i)
            for (std::size_t j = 0; j < n; ++j) {
                const double w = weight.at(i, j);
                const double c = guided ? static_cast<double>(i + j + 2) * inv_mn : 1.0;
                const double d = l1 ? (w > 0.0 ? 1.0 : (w < 0.0 ? -1.0 : 0.0)) : 2.0 * w;
                grad.at(i, j) = config.lambda * c * d;
            }
        return grad;
    }
    if (weight.rank() == 4) {
        const std::size_t ko = weight.dim(0), ki = weight.dim(1);
        const std::size_t kernel_size = weight.dim(2) * weight.dim(3);
        const double inv_kk = 1.0 / static_cast<double>(ko + ki);
        for (std::size_t i = 0; i < ko; ++i)
            for (std::size_t j = 0; j < ki; ++j) {
                // All elements of kernel (i, j) share one position weight.
                const double c = guided ? static_cast<double>(i + j + 2) * inv_kk : 1.0;
                const double* kern = weight.data() + (i * ki + j) * kernel_size;
                double* out = grad.data() + (i * ki + j) * kernel_size;
                for (std::size_t t = 0; t < kernel_size; ++t) {
                    const double w = kern[t];
                    const double d = l1 ? (w > 0.0 ? 1.0 : (w < 0.0 ? -1.0 : 0.0)) : 2.0 * w;
                    out[t] = config.lambda * c * d;
                }
            }
        return grad;
    }
    throw std::invalid_argument("penalty gradient needs a 2-D or 4-D weight");
}

namespace {

const Tensor& target_weight(const Network& net, std::size_t index) {
    if (index >= net.layers.size())
        throw ConfigError("regularizer target layer " + std::to_string(index) +
                          " out of range (network has " + std::to_string(net.layers.size()) +
                          " layers)");
    const Layer& layer = net.layers[index];
    if (const auto* d = std::get_if<DenseLayer>(&layer)) return d->weight;
    if (const auto* c = std::get_if<Conv2dLayer>(&layer)) return c->weight;
    throw ConfigError("regularizer target layer " + std::to_string(index) + " is a " +
                      layer_kind_name(layer) + " layer; only dense/conv layers carry weights");
}

}  // namespace

double total_penalty(const Network& net, const RegularizerConfig& config) {
    if (config.kind == RegularizerKind::none) return 0.0;
    double sum = 0.0;
    for (std::size_t index : config.target_layers) {
        const Tensor& w = target_weight(net, index);
        sum += w.rank() == 2 ? dense_penalty(w, config) : conv_penalty(w, config);
    }
    return sum;
}

void add_penalty_grads(const Network& net, const RegularizerConfig& config,
                       ParamGradients& grads) {
    if (config.kind == RegularizerKind::none || config.lambda == 0.0) return;
    for (std::size_t index : config.target_layers) {
        const Tensor& w = target_weight(net, index);
        const Tensor pg = penalty_grad(w, config);
        Tensor& g = grads.weight[index];
        if (g.empty()) g = Tensor(w.shape());
        for (std::size_t k = 0; k < g.size(); ++k) g[k] += pg[k];
    }
}

}  // namespace trimnet
