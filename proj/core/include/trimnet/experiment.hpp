#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "trimnet/dataset.hpp"
#include "trimnet/network.hpp"
#include "trimnet/pruning.hpp"
#include "trimnet/training.hpp"

namespace trimnet {

// One grid point of a compression sweep; accuracies are test-set fractions.
struct SweepRow {
    double alpha = 0.0;
    double compression_ratio = 1.0;
    double accuracy_before_finetune = 0.0;
    double accuracy_after_finetune = 0.0;
};

struct SweepResult {
    std::vector<SweepRow> rows;
};

// Everything a full train -> prune -> fine-tune run needs. `alpha` applies
// directly unless target_ratio > 0, in which case the smallest grid alpha
// reaching that compression ratio is used. Empty prune_layers (and empty
// regularizer target_layers) mean every parameterized layer except the output
// layer.
struct ExperimentConfig {
    std::string arch;
    std::string dataset_spec = "blobs:";
    std::size_t train_subset = 0;  // 0 = all samples
    std::size_t test_subset = 0;
    std::uint64_t seed = 1;
    TrainConfig pretrain;
    TrainConfig finetune;
    double alpha = 0.0;
    double target_ratio = 0.0;
    std::vector<std::size_t> prune_layers;
    std::string out_dir = ".";
};

// Fills an ExperimentConfig from parsed key=value pairs; unknown keys are
// rejected. Key schema is documented in the README.
ExperimentConfig experiment_from_key_values(const std::map<std::string, std::string>& kv);

struct PipelineResult {
    Network reduced;  // pruned and fine-tuned
    PruneReport prune_report;
    SweepRow row;
    TrainHistory pretrain_history;
    TrainHistory finetune_history;
    double chosen_alpha = 0.0;
};

// The six-step pipeline: build regularized loss, pre-train, threshold-prune,
// rebuild the reduced network, fine-tune, evaluate. Writes checkpoints,
// histories, heatmaps of the regularized layers, the prune report, a
// one-row metrics CSV, and a status file into config.out_dir. Any stage
// failure records "incomplete" in the status file and raises PipelineError.
// When `pretrained` is given, the pre-training stage loads it instead of
// training.
PipelineResult run_pipeline(const ExperimentConfig& config, const Network* pretrained = nullptr);

// Pre-trains once, then prunes + fine-tunes per grid point; writes sweep.csv
// and the pretrained checkpoint into config.out_dir.
SweepResult run_sweep(const ExperimentConfig& config, std::span<const double> alpha_grid,
                      const Network* pretrained = nullptr);

void write_sweep_csv(const SweepResult& result, const std::string& path);
SweepResult read_sweep_csv(const std::string& path);

void write_history_csv(const TrainHistory& history, const std::string& path);

// Plain-text per-layer table: rows before/after, eta_max, tau, removed count,
// plus parameter totals and the compression ratio.
void write_prune_report(const PruneReport& report, const std::string& path);
std::string prune_report_text(const PruneReport& report);

// sweep.csv + prune_report.txt under `dir`.
void write_report(const SweepResult& sweep, const PruneReport& report, const std::string& dir);

// 2-D view of a parameterized layer's weights for heatmap export: the weight
// matrix itself for dense layers, the per-kernel L1-norm grid [out, in] for
// conv layers.
Tensor weight_heatmap_matrix(const Network& net, std::size_t layer_index);

// Every dense/conv layer except the output layer: the default prune and
// regularizer target set.
std::vector<std::size_t> hidden_parameterized_layers(const Network& net);

}  // namespace trimnet
