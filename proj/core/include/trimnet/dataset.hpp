#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "trimnet/tensor.hpp"

namespace trimnet {

// Labeled samples: inputs [N, ...sample_shape], class-index labels length N.
struct Dataset {
    Tensor inputs;
    std::vector<int> labels;
    std::size_t class_count = 0;

    std::size_t size() const { return labels.size(); }
    std::vector<std::size_t> sample_shape() const;

    // Checks N >= 1, label range, and inputs/labels agreement; throws
    // std::invalid_argument on violation.
    void validate() const;

    // First k samples (k <= size).
    Dataset subset(std::size_t k) const;

    // Same samples with each input reshaped to `shape` (element counts must
    // match), e.g. {784} to feed a [1, 28, 28] image to a dense layer.
    Dataset with_sample_shape(std::vector<std::size_t> shape) const;

    // Rows `indices` gathered into a batch tensor [B, ...sample_shape] plus
    // the matching labels.
    std::pair<Tensor, std::vector<int>> gather(const std::vector<std::size_t>& indices) const;
};

// IDX image file (big-endian magic 0x00000803) to [N, 1, H, W] with pixel
// bytes scaled to [0, 1] by division by 255. Throws FormatError on bad magic
// or truncation.
Tensor load_idx_images(const std::string& path);

// IDX label file (magic 0x00000801) to class indices.
std::vector<int> load_idx_labels(const std::string& path);

// Inverse writers: values are scaled by 255 and rounded to bytes, so a loaded
// file written back is byte-identical. Throws FormatError when the tensor is
// not [N, 1, H, W] / values outside [0, 1], and on I/O failure.
void save_idx_images(const std::string& path, const Tensor& images);
void save_idx_labels(const std::string& path, const std::vector<int>& labels);

// MNIST-style directory holding train-images-idx3-ubyte, train-labels-idx1-ubyte,
// t10k-images-idx3-ubyte, t10k-labels-idx1-ubyte.
std::pair<Dataset, Dataset> load_mnist_dir(const std::string& dir);

// Gaussian point clouds with unit-variance noise around fixed class centers
// a distance ~separation apart; samples interleave classes so any prefix is
// roughly class-balanced. Deterministic in all arguments.
Dataset synthetic_blobs(std::size_t n_per_class, std::size_t class_count, std::size_t dim,
                        double separation, std::uint64_t seed);

// A seeded permutation of {0..n-1} chunked into ceil(n/batch_size) slices; the
// permutation depends on (seed, epoch) only.
std::vector<std::vector<std::size_t>> batches(std::size_t n, std::size_t batch_size,
                                              std::uint64_t seed, std::uint64_t epoch);

}  // namespace trimnet
