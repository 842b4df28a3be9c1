#pragma once

#include <stdexcept>
#include <string>

namespace trimnet {

// Invalid network architecture, layer wiring, or run configuration.
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Malformed file contents (IDX, checkpoint, config file).
struct FormatError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Training aborted (non-finite loss, diverged run).
struct TrainingError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// A pipeline stage failed; message carries the stage tag and the cause.
struct PipelineError : std::runtime_error {
    PipelineError(const std::string& stage_name, const std::string& cause)
        : std::runtime_error("stage \"" + stage_name + "\": " + cause), stage(stage_name) {}
    std::string stage;
};

}  // namespace trimnet
