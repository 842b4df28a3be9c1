#pragma once

#include <cstddef>
#include <span>
#include <utility>
#include <vector>

#include "trimnet/network.hpp"
#include "trimnet/tensor.hpp"

namespace trimnet {

// Per-output-unit importance scores of one layer: absolute row sums for dense
// weights, summed kernel L1 norms for conv weights.
struct RowScores {
    std::size_t layer_index = 0;
    std::vector<double> scores;
};

// Outcome of thresholding one layer. Row indices are 0-based.
struct PruneDecision {
    std::size_t layer_index = 0;
    double eta_max = 0.0;
    double tau = 0.0;
    std::vector<std::size_t> removed_rows;
    std::vector<std::size_t> kept_rows;
};

struct PruneReport {
    std::vector<PruneDecision> decisions;
    std::size_t original_param_count = 0;
    std::size_t reduced_param_count = 0;
    double compression_ratio = 1.0;
};

// alpha in [0, 1]; prunable_layers must reference dense/conv layers and must
// exclude the last parameterized layer (the output layer). The input layer is
// implicit and never pruned.
struct PruneConfig {
    double alpha = 0.0;
    std::vector<std::size_t> prunable_layers;
};

RowScores row_scores(const Tensor& weight);
RowScores row_scores(const Network& net, std::size_t layer_index);

// Maximum score; throws std::invalid_argument on empty scores.
double eta_max(const RowScores& scores);

// tau = alpha * eta_max; rows scoring strictly below tau are removed, so
// alpha = 0 removes nothing and rows at the maximum always survive.
PruneDecision select_removed_rows(const RowScores& scores, double alpha);

// Removes rows (and their bias elements) from every prunable layer, walking
// input to output, and deletes the matching input columns of the next
// parameterized layer downstream. Surviving weights are copied verbatim.
std::pair<Network, PruneReport> prune_network(const Network& net, const PruneConfig& config);

// Learnable parameter count of `original` divided by that of `reduced`.
double compression_ratio(const Network& original, const Network& reduced);

// The alpha schedule used for compression sweeps:
// {0, 1e-6, 1e-5, 1e-4, 1e-3, 1e-2, 0.05, 0.10, ..., 1.00}.
const std::vector<double>& default_alpha_grid();

struct AlphaSearchResult {
    bool reached = false;
    double alpha = 0.0;       // first grid value reaching the target (when reached)
    PruneReport report;       // report at `alpha`, or at the best grid value otherwise
    double best_ratio = 1.0;  // best compression ratio seen across the grid
    double best_alpha = 0.0;
};

// First grid value whose pruned network reaches target_ratio; grid must be
// sorted ascending. When no value reaches the target the result carries the
// best achieved ratio instead.
AlphaSearchResult smallest_alpha_for_ratio(const Network& net, double target_ratio,
                                           std::span<const double> alpha_grid,
                                           const std::vector<std::size_t>& prunable_layers);

}  // namespace trimnet
