#include "trimnet/pruning.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <numeric>
#include <stdexcept>
#include <string>

#include "trimnet/errors.hpp"

namespace trimnet {
namespace {

std::vector<std::size_t> iota_indices(std::size_t n) {
    std::vector<std::size_t> out(n);
    std::iota(out.begin(), out.end(), std::size_t{0});
    return out;
}

// weight[kept_rows][:, kept_cols] for a dense (m, n) matrix.
Tensor take_dense(const Tensor& weight, const std::vector<std::size_t>& rows,
                  const std::vector<std::size_t>& cols) {
    Tensor out = Tensor::zeros({rows.size(), cols.size()});
    const std::size_t n = weight.shape()[1];
    const double* src = weight.data();
    double* dst = out.data();
    for (std::size_t r = 0; r < rows.size(); ++r) {
        const double* row = src + rows[r] * n;
        for (std::size_t c = 0; c < cols.size(); ++c) dst[r * cols.size() + c] = row[cols[c]];
    }
    return out;
}

// weight[kept_out][kept_in] for a conv (out, in, kh, kw) tensor; kernels are
// copied whole.
Tensor take_conv(const Tensor& weight, const std::vector<std::size_t>& out_ch,
                 const std::vector<std::size_t>& in_ch) {
    const auto& s = weight.shape();
    const std::size_t in = s[1], kh = s[2], kw = s[3];
    const std::size_t kernel = kh * kw;
    Tensor out = Tensor::zeros({out_ch.size(), in_ch.size(), kh, kw});
    const double* src = weight.data();
    double* dst = out.data();
    for (std::size_t o = 0; o < out_ch.size(); ++o) {
        const double* plane = src + out_ch[o] * in * kernel;
        for (std::size_t i = 0; i < in_ch.size(); ++i) {
            const double* k = plane + in_ch[i] * kernel;
            std::copy(k, k + kernel, dst);
            dst += kernel;
        }
    }
    return out;
}

Tensor take_bias(const Tensor& bias, const std::vector<std::size_t>& kept) {
    Tensor out = Tensor::zeros({kept.size()});
    for (std::size_t i = 0; i < kept.size(); ++i) out.data()[i] = bias.data()[kept[i]];
    return out;
}

}  // namespace

RowScores row_scores(const Tensor& weight) {
    const auto& s = weight.shape();
    RowScores out;
    if (s.size() == 2) {
        out.scores.assign(s[0], 0.0);
        const double* w = weight.data();
        for (std::size_t i = 0; i < s[0]; ++i) {
            double acc = 0.0;
            for (std::size_t j = 0; j < s[1]; ++j) acc += std::abs(w[i * s[1] + j]);
            out.scores[i] = acc;
        }
        return out;
    }
    if (s.size() == 4) {
        out.scores.assign(s[0], 0.0);
        const std::size_t per_row = s[1] * s[2] * s[3];
        const double* w = weight.data();
        for (std::size_t o = 0; o < s[0]; ++o) {
            double acc = 0.0;
            for (std::size_t k = 0; k < per_row; ++k) acc += std::abs(w[o * per_row + k]);
            out.scores[o] = acc;
        }
        return out;
    }
    throw std::invalid_argument("row_scores: weight must be rank 2 (dense) or rank 4 (conv), got rank " +
                                std::to_string(s.size()));
}

RowScores row_scores(const Network& net, std::size_t layer_index) {
    if (layer_index >= net.layers.size())
        throw std::invalid_argument("row_scores: layer index " + std::to_string(layer_index) +
                                    " out of range");
    const Tensor* weight = nullptr;
    std::visit(
        [&](const auto& layer) {
            using T = std::decay_t<decltype(layer)>;
            if constexpr (std::is_same_v<T, DenseLayer> || std::is_same_v<T, Conv2dLayer>)
                weight = &layer.weight;
        },
        net.layers[layer_index]);
    if (weight == nullptr)
        throw std::invalid_argument("row_scores: layer " + std::to_string(layer_index) +
                                    " has no weights");
    RowScores out = row_scores(*weight);
    out.layer_index = layer_index;
    return out;
}

double eta_max(const RowScores& scores) {
    if (scores.scores.empty()) throw std::invalid_argument("eta_max: no scores");
    return *std::max_element(scores.scores.begin(), scores.scores.end());
}

PruneDecision select_removed_rows(const RowScores& scores, double alpha) {
    if (!(alpha >= 0.0 && alpha <= 1.0))
        throw std::invalid_argument("select_removed_rows: alpha must be in [0, 1], got " +
                                    std::to_string(alpha));
    PruneDecision d;
    d.layer_index = scores.layer_index;
    d.eta_max = eta_max(scores);
    d.tau = alpha * d.eta_max;
    for (std::size_t i = 0; i < scores.scores.size(); ++i) {
        if (scores.scores[i] < d.tau)
            d.removed_rows.push_back(i);
        else
            d.kept_rows.push_back(i);
    }
    return d;
}

std::pair<Network, PruneReport> prune_network(const Network& net, const PruneConfig& config) {
    if (!(config.alpha >= 0.0 && config.alpha <= 1.0))
        throw std::invalid_argument("prune_network: alpha must be in [0, 1], got " +
                                    std::to_string(config.alpha));

    std::vector<std::size_t> prunable = config.prunable_layers;
    std::sort(prunable.begin(), prunable.end());
    prunable.erase(std::unique(prunable.begin(), prunable.end()), prunable.end());

    const std::size_t last_param = net.last_parameterized_layer();
    if (last_param == Network::npos)
        throw ConfigError("prune_network: network has no parameterized layers");
    for (std::size_t idx : prunable) {
        if (idx >= net.layers.size())
            throw ConfigError("prune_network: prunable layer " + std::to_string(idx) +
                              " out of range");
        if (idx == last_param)
            throw ConfigError("prune_network: layer " + std::to_string(idx) +
                              " is the output layer and cannot be pruned");
        const bool parameterized = std::holds_alternative<DenseLayer>(net.layers[idx]) ||
                                   std::holds_alternative<Conv2dLayer>(net.layers[idx]);
        if (!parameterized)
            throw ConfigError("prune_network: layer " + std::to_string(idx) + " has no weights");
    }

    const auto shapes = net.layer_output_shapes();

    Network reduced;
    reduced.input_shape = net.input_shape;
    reduced.layers.reserve(net.layers.size());

    PruneReport report;
    report.original_param_count = net.param_count();

    // Indices (in original coordinates) of the surviving input slots of the
    // next layer: flat positions ahead of a dense layer, channels ahead of a
    // conv layer. Either way that is input_shape[0], and the network input is
    // never pruned.
    std::vector<std::size_t> kept = iota_indices(net.input_shape[0]);

    for (std::size_t idx = 0; idx < net.layers.size(); ++idx) {
        const bool is_prunable = std::binary_search(prunable.begin(), prunable.end(), idx);
        const auto& layer = net.layers[idx];

        if (const auto* dense = std::get_if<DenseLayer>(&layer)) {
            std::vector<std::size_t> kept_rows;
            if (is_prunable) {
                // Scores come from the layer's full trained weights, before
                // upstream column deletion touches them.
                PruneDecision d = select_removed_rows(row_scores(net, idx), config.alpha);
                kept_rows = d.kept_rows;
                report.decisions.push_back(std::move(d));
            } else {
                kept_rows = iota_indices(dense->weight.shape()[0]);
            }
            DenseLayer out;
            out.activation = dense->activation;
            out.weight = take_dense(dense->weight, kept_rows, kept);
            out.bias = take_bias(dense->bias, kept_rows);
            reduced.layers.emplace_back(std::move(out));
            kept = std::move(kept_rows);
        } else if (const auto* conv = std::get_if<Conv2dLayer>(&layer)) {
            std::vector<std::size_t> kept_out;
            if (is_prunable) {
                PruneDecision d = select_removed_rows(row_scores(net, idx), config.alpha);
                kept_out = d.kept_rows;
                report.decisions.push_back(std::move(d));
            } else {
                kept_out = iota_indices(conv->weight.shape()[0]);
            }
            Conv2dLayer out;
            out.activation = conv->activation;
            out.stride = conv->stride;
            out.padding = conv->padding;
            out.weight = take_conv(conv->weight, kept_out, kept);
            out.bias = take_bias(conv->bias, kept_out);
            reduced.layers.emplace_back(std::move(out));
            kept = std::move(kept_out);
        } else if (std::holds_alternative<MaxPool2dLayer>(layer)) {
            reduced.layers.push_back(layer);  // channel set passes through
        } else if (std::holds_alternative<FlattenLayer>(layer)) {
            const auto& in_shape = idx == 0 ? net.input_shape : shapes[idx - 1];
            if (in_shape.size() == 3) {
                // Channel c owns the contiguous flat block [c*H*W, (c+1)*H*W).
                const std::size_t block = in_shape[1] * in_shape[2];
                std::vector<std::size_t> flat;
                flat.reserve(kept.size() * block);
                for (std::size_t c : kept)
                    for (std::size_t p = 0; p < block; ++p) flat.push_back(c * block + p);
                kept = std::move(flat);
            }
            reduced.layers.push_back(layer);
        }
    }

    reduced.layer_output_shapes();  // validate the surgery produced a consistent net

    report.reduced_param_count = reduced.param_count();
    report.compression_ratio = compression_ratio(net, reduced);
    return {std::move(reduced), std::move(report)};
}

double compression_ratio(const Network& original, const Network& reduced) {
    const std::size_t r = reduced.param_count();
    if (r == 0) throw std::invalid_argument("compression_ratio: reduced network has no parameters");
    return static_cast<double>(original.param_count()) / static_cast<double>(r);
}

const std::vector<double>& default_alpha_grid() {
    static const std::vector<double> grid = [] {
        std::vector<double> g{0.0, 1e-6, 1e-5, 1e-4, 1e-3, 1e-2};
        for (int i = 1; i <= 20; ++i) g.push_back(static_cast<double>(5 * i) / 100.0);
        return g;
    }();
    return grid;
}

AlphaSearchResult smallest_alpha_for_ratio(const Network& net, double target_ratio,
                                           std::span<const double> alpha_grid,
                                           const std::vector<std::size_t>& prunable_layers) {
    if (!(target_ratio > 0.0))
        throw std::invalid_argument("smallest_alpha_for_ratio: target ratio must be positive");
    if (alpha_grid.empty())
        throw std::invalid_argument("smallest_alpha_for_ratio: empty alpha grid");
    if (!std::is_sorted(alpha_grid.begin(), alpha_grid.end()))
        throw std::invalid_argument("smallest_alpha_for_ratio: alpha grid must be sorted ascending");

    AlphaSearchResult result;
    result.best_ratio = 0.0;
    for (double alpha : alpha_grid) {
        auto [reduced, report] = prune_network(net, {alpha, prunable_layers});
        if (report.compression_ratio > result.best_ratio) {
            result.best_ratio = report.compression_ratio;
            result.best_alpha = alpha;
        }
        if (report.compression_ratio >= target_ratio) {
            result.reached = true;
            result.alpha = alpha;
            result.report = std::move(report);
            return result;
        }
    }
    // Not reached: report the best the grid could do.
    auto [reduced, report] = prune_network(net, {result.best_alpha, prunable_layers});
    result.report = std::move(report);
    result.alpha = result.best_alpha;
    return result;
}

}  // namespace trimnet
