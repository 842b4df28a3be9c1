#include "trimnet/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "trimnet/checkpoint.hpp"
#include "trimnet/config.hpp"
#include "trimnet/errors.hpp"
#include "trimnet/heatmap.hpp"

namespace trimnet {
namespace {

namespace fs = std::filesystem;

void write_text_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw FormatError(path + ": cannot open for writing");
    out << text;
    if (!out) throw FormatError(path + ": write failed");
}

void write_status(const std::string& dir, const std::string& text) {
    write_text_file(dir + "/status.txt", text + "\n");
}

// Runs one pipeline stage; on failure records the incomplete status and
// rethrows with the stage tag attached.
template <typename Fn>
auto stage(const std::string& dir, const char* name, Fn&& fn) {
    try {
        return fn();
    } catch (const std::exception& e) {
        write_status(dir, std::string("incomplete: stage \"") + name + "\" failed: " + e.what());
        throw PipelineError(name, e.what());
    }
}

struct Prepared {
    Network net;  // architecture with zero parameters
    std::vector<std::size_t> prune_layers;
    TrainConfig pretrain;
    Dataset train;
    Dataset test;
};

Prepared resolve(const ExperimentConfig& config, const Network* pretrained) {
    Prepared p;
    p.net = pretrained != nullptr ? *pretrained : network_from_architecture(config.arch);
    if (pretrained != nullptr && !config.arch.empty() &&
        describe_architecture(*pretrained) != config.arch)
        throw ConfigError("pretrained network is " + describe_architecture(*pretrained) +
                          " but the config says " + config.arch);

    p.prune_layers =
        config.prune_layers.empty() ? hidden_parameterized_layers(p.net) : config.prune_layers;
    if (p.prune_layers.empty())
        throw ConfigError("nothing to prune: the network has no hidden parameterized layers");

    p.pretrain = config.pretrain;
    p.pretrain.seed = config.seed;
    if (p.pretrain.regularizer.kind != RegularizerKind::none &&
        p.pretrain.regularizer.target_layers.empty())
        p.pretrain.regularizer.target_layers = hidden_parameterized_layers(p.net);

    if (!(config.alpha >= 0.0 && config.alpha <= 1.0))
        throw ConfigError("alpha must be in [0, 1], got " + std::to_string(config.alpha));
    return p;
}

void load_data(const ExperimentConfig& config, Prepared& p) {
    auto [train, test] = load_dataset_spec(config.dataset_spec);
    if (config.train_subset > 0) train = train.subset(config.train_subset);
    if (config.test_subset > 0) test = test.subset(config.test_subset);
    if (train.sample_shape() != p.net.input_shape)
        train = train.with_sample_shape(p.net.input_shape);
    if (test.sample_shape() != p.net.input_shape) test = test.with_sample_shape(p.net.input_shape);
    p.train = std::move(train);
    p.test = std::move(test);
}

// Heatmaps describe the layers the regularizer shaped (or, untargeted, the
// prunable ones).
std::vector<std::size_t> heatmap_layers(const Prepared& p) {
    if (p.pretrain.regularizer.kind != RegularizerKind::none)
        return p.pretrain.regularizer.target_layers;
    return p.prune_layers;
}

std::string csv_row(std::initializer_list<double> values) {
    std::string row;
    for (double v : values) {
        if (!row.empty()) row += ',';
        row += format_double(v);
    }
    return row + "\r\n";
}

}  // namespace

ExperimentConfig experiment_from_key_values(const std::map<std::string, std::string>& kv) {
    ExperimentConfig c;
    c.pretrain.epochs = 50;
    c.pretrain.batch_size = 256;
    c.pretrain.optimizer.kind = OptimizerKind::sgd_nesterov;
    c.pretrain.optimizer.learning_rate = 1e-3;
    c.pretrain.optimizer.momentum = 0.9;
    c.pretrain.regularizer.lambda = 1e-2;
    c.finetune.epochs = 5;
    c.finetune.batch_size = 256;
    c.finetune.optimizer.kind = OptimizerKind::adam;
    c.finetune.optimizer.learning_rate = 1e-3;
    c.finetune.optimizer.beta1 = 0.9;
    c.finetune.optimizer.beta2 = 0.99;

    auto train_key = [](TrainConfig& t, const std::string& field, const std::string& value,
                        const std::string& key) {
        if (field == "epochs") t.epochs = parse_size(value, key);
        else if (field == "batch") t.batch_size = parse_size(value, key);
        else if (field == "optimizer") t.optimizer.kind = optimizer_from_string(value);
        else if (field == "lr") t.optimizer.learning_rate = parse_double(value, key);
        else if (field == "momentum") t.optimizer.momentum = parse_double(value, key);
        else if (field == "beta1") t.optimizer.beta1 = parse_double(value, key);
        else if (field == "beta2") t.optimizer.beta2 = parse_double(value, key);
        else if (field == "epsilon") t.optimizer.epsilon = parse_double(value, key);
        else throw ConfigError("unknown config key \"" + key + "\"");
    };

    for (const auto& [key, value] : kv) {
        if (key == "arch") c.arch = value;
        else if (key == "dataset") c.dataset_spec = value;
        else if (key == "subset") c.train_subset = parse_size(value, key);
        else if (key == "test_subset") c.test_subset = parse_size(value, key);
        else if (key == "seed") c.seed = parse_uint64(value, key);
        else if (key == "out_dir") c.out_dir = value;
        else if (key == "alpha") c.alpha = parse_double(value, key);
        else if (key == "target_ratio") c.target_ratio = parse_double(value, key);
        else if (key == "prune.layers") c.prune_layers = parse_index_list(value, key);
        else if (key == "regularizer")
            c.pretrain.regularizer.kind = regularizer_from_string(value);
        else if (key == "lambda") c.pretrain.regularizer.lambda = parse_double(value, key);
        else if (key == "regularizer.targets")
            c.pretrain.regularizer.target_layers = parse_index_list(value, key);
        else if (key.rfind("pretrain.", 0) == 0)
            train_key(c.pretrain, key.substr(9), value, key);
        else if (key.rfind("finetune.", 0) == 0)
            train_key(c.finetune, key.substr(9), value, key);
        else throw ConfigError("unknown config key \"" + key + "\"");
    }
    c.pretrain.seed = c.seed;
    c.finetune.seed = c.seed;
    return c;
}

PipelineResult run_pipeline(const ExperimentConfig& config, const Network* pretrained) {
    const std::string& dir = config.out_dir;
    fs::create_directories(dir);
    write_status(dir, "incomplete: pipeline running");

    Prepared p = stage(dir, "config", [&] { return resolve(config, pretrained); });
    stage(dir, "data", [&] { load_data(config, p); return 0; });

    PipelineResult result;
    Network net = stage(dir, "pretrain", [&] {
        Network n = p.net;
        if (pretrained == nullptr) {
            init_weights(n, config.seed);
            result.pretrain_history = train(n, p.train, p.pretrain, &p.test);
        }
        save_checkpoint(n, dir + "/pretrained.ckpt");
        write_history_csv(result.pretrain_history, dir + "/pretrain_history.csv");
        for (std::size_t idx : heatmap_layers(p))
            export_heatmap(weight_heatmap_matrix(n, idx),
                           dir + "/heatmap_layer" + std::to_string(idx));
        return n;
    });

    stage(dir, "prune", [&] {
        result.chosen_alpha = config.alpha;
        if (config.target_ratio > 0.0) {
            const auto search = smallest_alpha_for_ratio(net, config.target_ratio,
                                                         default_alpha_grid(), p.prune_layers);
            if (!search.reached)
                throw ConfigError("target compression ratio " +
                                  format_double(config.target_ratio) + " is unreachable; best " +
                                  format_double(search.best_ratio) + " at alpha " +
                                  format_double(search.best_alpha));
            result.chosen_alpha = search.alpha;
        }
        auto [reduced, report] = prune_network(net, {result.chosen_alpha, p.prune_layers});
        result.reduced = std::move(reduced);
        result.prune_report = std::move(report);
        save_checkpoint(result.reduced, dir + "/reduced.ckpt");
        write_prune_report(result.prune_report, dir + "/prune_report.txt");
        result.row.alpha = result.chosen_alpha;
        result.row.compression_ratio = result.prune_report.compression_ratio;
        result.row.accuracy_before_finetune = evaluate_accuracy(result.reduced, p.test);
        return 0;
    });

    stage(dir, "finetune", [&] {
        result.finetune_history = fine_tune(result.reduced, p.train, config.finetune, &p.test);
        save_checkpoint(result.reduced, dir + "/finetuned.ckpt");
        write_history_csv(result.finetune_history, dir + "/finetune_history.csv");
        return 0;
    });

    stage(dir, "evaluate", [&] {
        result.row.accuracy_after_finetune = evaluate_accuracy(result.reduced, p.test);
        SweepResult one;
        one.rows.push_back(result.row);
        write_sweep_csv(one, dir + "/pipeline.csv");
        return 0;
    });

    write_status(dir, "complete");
    return result;
}

SweepResult run_sweep(const ExperimentConfig& config, std::span<const double> alpha_grid,
                      const Network* pretrained) {
    const std::string& dir = config.out_dir;
    fs::create_directories(dir);
    write_status(dir, "incomplete: sweep running");

    Prepared p = stage(dir, "config", [&] {
        if (alpha_grid.empty()) throw ConfigError("sweep: empty alpha grid");
        return resolve(config, pretrained);
    });
    stage(dir, "data", [&] { load_data(config, p); return 0; });

    Network net = stage(dir, "pretrain", [&] {
        Network n = p.net;
        if (pretrained == nullptr) {
            init_weights(n, config.seed);
            TrainHistory history = train(n, p.train, p.pretrain, &p.test);
            write_history_csv(history, dir + "/pretrain_history.csv");
        }
        save_checkpoint(n, dir + "/pretrained.ckpt");
        return n;
    });

    SweepResult result;
    stage(dir, "sweep", [&] {
        for (double alpha : alpha_grid) {
            auto [reduced, report] = prune_network(net, {alpha, p.prune_layers});
            SweepRow row;
            row.alpha = alpha;
            row.compression_ratio = report.compression_ratio;
            row.accuracy_before_finetune = evaluate_accuracy(reduced, p.test);
            fine_tune(reduced, p.train, config.finetune, &p.test);
            row.accuracy_after_finetune = evaluate_accuracy(reduced, p.test);
            result.rows.push_back(row);
        }
        write_sweep_csv(result, dir + "/sweep.csv");
        return 0;
    });

    write_status(dir, "complete");
    return result;
}

void write_sweep_csv(const SweepResult& result, const std::string& path) {
    std::string text = "alpha,compression_ratio,accuracy_before_finetune,accuracy_after_finetune\r\n";
    for (const SweepRow& r : result.rows)
        text += csv_row({r.alpha, r.compression_ratio, r.accuracy_before_finetune,
                         r.accuracy_after_finetune});
    write_text_file(path, text);
}

SweepResult read_sweep_csv(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FormatError(path + ": cannot open");
    std::string line;
    if (!std::getline(in, line)) throw FormatError(path + ": empty file");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != "alpha,compression_ratio,accuracy_before_finetune,accuracy_after_finetune")
        throw FormatError(path + ": unexpected header \"" + line + "\"");

    SweepResult result;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto fields = split(line, ',');
        if (fields.size() != 4)
            throw FormatError(path + ": line " + std::to_string(line_no) + " has " +
                              std::to_string(fields.size()) + " fields, expected 4");
        SweepRow row;
        row.alpha = parse_double(fields[0], "alpha");
        row.compression_ratio = parse_double(fields[1], "compression_ratio");
        row.accuracy_before_finetune = parse_double(fields[2], "accuracy_before_finetune");
        row.accuracy_after_finetune = parse_double(fields[3], "accuracy_after_finetune");
        result.rows.push_back(row);
    }
    return result;
}

void write_history_csv(const TrainHistory& history, const std::string& path) {
    std::string text = "epoch,train_loss,penalty,eval_accuracy\r\n";
    for (const EpochStats& e : history.epochs)
        text += format_double(static_cast<double>(e.epoch)) + "," + format_double(e.train_loss) +
                "," + format_double(e.penalty) + "," + format_double(e.eval_accuracy) + "\r\n";
    write_text_file(path, text);
}

std::string prune_report_text(const PruneReport& report) {
    std::ostringstream out;
    out << "layer  rows_before  rows_after  removed  eta_max  tau\n";
    for (const PruneDecision& d : report.decisions) {
        const std::size_t before = d.kept_rows.size() + d.removed_rows.size();
        out << d.layer_index << "  " << before << "  " << d.kept_rows.size() << "  "
            << d.removed_rows.size() << "  " << format_double(d.eta_max) << "  "
            << format_double(d.tau) << "\n";
    }
    out << "parameters: " << report.original_param_count << " -> " << report.reduced_param_count
        << "\n";
    out << "compression_ratio: " << format_double(report.compression_ratio) << "\n";
    return out.str();
}

void write_prune_report(const PruneReport& report, const std::string& path) {
    write_text_file(path, prune_report_text(report));
}

void write_report(const SweepResult& sweep, const PruneReport& report, const std::string& dir) {
    fs::create_directories(dir);
    write_sweep_csv(sweep, dir + "/sweep.csv");
    write_prune_report(report, dir + "/prune_report.txt");
}

std::vector<std::size_t> hidden_parameterized_layers(const Network& net) {
    std::vector<std::size_t> out;
    const std::size_t last = net.last_parameterized_layer();
    for (std::size_t idx = 0; idx < net.layers.size(); ++idx)
        if (idx != last && is_parameterized(net.layers[idx])) out.push_back(idx);
    return out;
}

Tensor weight_heatmap_matrix(const Network& net, std::size_t layer_index) {
    if (layer_index >= net.layers.size())
        throw ConfigError("heatmap: layer index " + std::to_string(layer_index) + " out of range");
    const Layer& layer = net.layers[layer_index];
    if (const auto* dense = std::get_if<DenseLayer>(&layer)) return dense->weight;
    if (const auto* conv = std::get_if<Conv2dLayer>(&layer)) {
        const auto& s = conv->weight.shape();
        Tensor grid = Tensor::zeros({s[0], s[1]});
        const std::size_t kernel = s[2] * s[3];
        const double* w = conv->weight.data();
        for (std::size_t o = 0; o < s[0]; ++o)
            for (std::size_t i = 0; i < s[1]; ++i) {
                double acc = 0.0;
                const double* k = w + (o * s[1] + i) * kernel;
                for (std::size_t t = 0; t < kernel; ++t) acc += std::abs(k[t]);
                grid.at(o, i) = acc;
            }
        return grid;
    }
    throw ConfigError("heatmap: layer " + std::to_string(layer_index) + " (" +
                      layer_kind_name(layer) + ") has no weights");
}

}  // namespace trimnet
