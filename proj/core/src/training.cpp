#include "trimnet/training.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "trimnet/engine.hpp"
#include "trimnet/errors.hpp"

namespace trimnet {
namespace {

// Names the first layer holding a non-finite parameter, or npos.
std::size_t first_non_finite_layer(const Network& net) {
    for (std::size_t idx = 0; idx < net.layers.size(); ++idx) {
        bool bad = false;
        std::visit(
            [&](const auto& layer) {
                using T = std::decay_t<decltype(layer)>;
                if constexpr (std::is_same_v<T, DenseLayer> || std::is_same_v<T, Conv2dLayer>)
                    bad = !layer.weight.all_finite() || !layer.bias.all_finite();
            },
            net.layers[idx]);
        if (bad) return idx;
    }
    return Network::npos;
}

[[noreturn]] void abort_training(std::size_t epoch, std::size_t step, const Network& net,
                                 const std::string& what) {
    std::string msg = "training aborted at epoch " + std::to_string(epoch) + ", step " +
                      std::to_string(step) + ": " + what;
    const std::size_t layer = first_non_finite_layer(net);
    if (layer != Network::npos)
        msg += " (first non-finite parameters in layer " + std::to_string(layer) + ", " +
               layer_kind_name(net.layers[layer]) + ")";
    throw TrainingError(msg);
}

void validate_setup(const Network& net, const Dataset& data, const TrainConfig& config) {
    net.validate();
    data.validate();
    if (config.batch_size == 0) throw ConfigError("train: batch size must be positive");
    if (config.batch_size > data.size())
        throw ConfigError("train: batch size " + std::to_string(config.batch_size) +
                          " exceeds dataset size " + std::to_string(data.size()));
    if (net.input_shape != data.sample_shape())
        throw ConfigError("train: network input shape " + shape_to_string(net.input_shape) +
                          " does not match sample shape " + shape_to_string(data.sample_shape()));
    const auto out_shape = net.output_shape();
    if (out_shape.size() != 1 || out_shape[0] != data.class_count)
        throw ConfigError("train: network output shape " + shape_to_string(out_shape) +
                          " does not match " + std::to_string(data.class_count) + " classes");
    if (config.regularizer.kind != RegularizerKind::none) {
        if (!(config.regularizer.lambda >= 0.0))
            throw ConfigError("train: regularizer lambda must be non-negative");
        (void)total_penalty(net, config.regularizer);  // rejects bad target layers up front
    }
}

}  // namespace

TrainHistory train(Network& net, const Dataset& data, const TrainConfig& config,
                   const Dataset* eval_data) {
    validate_setup(net, data, config);
    if (eval_data != nullptr) eval_data->validate();

    const bool penalized = config.regularizer.kind != RegularizerKind::none;
    NetworkOptimizer optimizer(net, config.optimizer);
    TrainHistory history;
    history.epochs.reserve(config.epochs);

    for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
        const auto slices = batches(data.size(), config.batch_size, config.seed, epoch);
        double loss_sum = 0.0;

        for (std::size_t step = 1; step <= slices.size(); ++step) {
            const auto& slice = slices[step - 1];
            auto [batch, labels] = data.gather(slice);

            const Network& eval_point = optimizer.gradient_eval_point(net);
            auto [outputs, trace] = forward(eval_point, batch);
            const double loss = cross_entropy_loss(outputs, labels);
            if (!std::isfinite(loss)) abort_training(epoch, step, net, "data loss is not finite");

            ParamGradients grads = backward(eval_point, trace, labels);
            if (penalized) add_penalty_grads(eval_point, config.regularizer, grads);

            optimizer.step(net, grads);
            if (first_non_finite_layer(net) != Network::npos)
                abort_training(epoch, step, net, "parameters diverged");

            loss_sum += loss * static_cast<double>(slice.size());
        }

        EpochStats stats;
        stats.epoch = epoch;
        stats.train_loss = loss_sum / static_cast<double>(data.size());
        stats.penalty = penalized ? total_penalty(net, config.regularizer) : 0.0;
        stats.eval_accuracy = evaluate_accuracy(net, eval_data != nullptr ? *eval_data : data);
        history.epochs.push_back(stats);
    }
    return history;
}

TrainHistory fine_tune(Network& net, const Dataset& data, const TrainConfig& config,
                       const Dataset* eval_data) {
    if (config.regularizer.kind != RegularizerKind::none)
        throw ConfigError("fine_tune: fine-tuning uses the plain loss; got regularizer \"" +
                          std::string(to_string(config.regularizer.kind)) + "\"");
    return train(net, data, config, eval_data);
}

double evaluate_accuracy(const Network& net, const Dataset& data) {
    data.validate();
    constexpr std::size_t kEvalBatch = 512;
    const std::size_t n = data.size();
    std::size_t correct = 0;

    std::vector<std::size_t> indices(kEvalBatch);
    for (std::size_t start = 0; start < n; start += kEvalBatch) {
        const std::size_t stop = std::min(n, start + kEvalBatch);
        indices.resize(stop - start);
        for (std::size_t i = start; i < stop; ++i) indices[i - start] = i;
        auto [batch, labels] = data.gather(indices);
        const Tensor outputs = forward_outputs(net, batch);
        const std::size_t classes = outputs.dim(1);
        for (std::size_t row = 0; row < labels.size(); ++row) {
            const double* p = outputs.data() + row * classes;
            std::size_t best = 0;
            for (std::size_t c = 1; c < classes; ++c)
                if (p[c] > p[best]) best = c;  // ties keep the lower index
            correct += best == static_cast<std::size_t>(labels[row]);
        }
    }
    return static_cast<double>(correct) / static_cast<double>(n);
}

}  // namespace trimnet
