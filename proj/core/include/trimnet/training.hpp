#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "trimnet/dataset.hpp"
#include "trimnet/network.hpp"
#include "trimnet/optimizer.hpp"
#include "trimnet/regularizer.hpp"

namespace trimnet {

struct TrainConfig {
    std::size_t epochs = 1;
    std::size_t batch_size = 256;
    std::uint64_t seed = 0;
    OptimizerConfig optimizer;
    RegularizerConfig regularizer;
};

struct EpochStats {
    std::size_t epoch = 0;      // 1-based
    double train_loss = 0.0;    // mean per-sample data loss over the epoch's steps
    double penalty = 0.0;       // total regularizer penalty at epoch end
    double eval_accuracy = 0.0; // on eval_data when given, else on the training data
};

struct TrainHistory {
    std::vector<EpochStats> epochs;
};

// Minimizes mean cross-entropy plus the regularizer penalty with mini-batch
// steps; per-epoch reshuffling keyed by (seed, epoch), last partial batch
// kept. Mutates `net` in place and is bit-for-bit reproducible from the seed.
// Throws TrainingError naming epoch, step, and layer when values go
// non-finite; ConfigError on net/data/config mismatch.
TrainHistory train(Network& net, const Dataset& data, const TrainConfig& config,
                   const Dataset* eval_data = nullptr);

// Penalty-free training pass for a pruned network; throws ConfigError when the
// config carries a regularizer.
TrainHistory fine_tune(Network& net, const Dataset& data, const TrainConfig& config,
                       const Dataset* eval_data = nullptr);

// Fraction of samples whose argmax output matches the label; output ties
// break toward the lowest class index.
double evaluate_accuracy(const Network& net, const Dataset& data);

}  // namespace trimnet
