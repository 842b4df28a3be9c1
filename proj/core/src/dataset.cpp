#include "trimnet/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <stdexcept>
#include <utility>

#include "trimnet/errors.hpp"
#include "trimnet/rng.hpp"

namespace trimnet {
namespace {

constexpr std::uint32_t kImagesMagic = 0x00000803;
constexpr std::uint32_t kLabelsMagic = 0x00000801;

std::vector<unsigned char> read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FormatError(path + ": cannot open");
    std::vector<unsigned char> bytes{std::istreambuf_iterator<char>(in),
                                     std::istreambuf_iterator<char>()};
    if (in.bad()) throw FormatError(path + ": read failed");
    return bytes;
}

std::uint32_t read_be32(const std::vector<unsigned char>& b, std::size_t off) {
    return (std::uint32_t(b[off]) << 24) | (std::uint32_t(b[off + 1]) << 16) |
           (std::uint32_t(b[off + 2]) << 8) | std::uint32_t(b[off + 3]);
}

void write_be32(std::ostream& out, std::uint32_t v) {
    const unsigned char b[4] = {static_cast<unsigned char>(v >> 24),
                                static_cast<unsigned char>(v >> 16),
                                static_cast<unsigned char>(v >> 8),
                                static_cast<unsigned char>(v)};
    out.write(reinterpret_cast<const char*>(b), 4);
}

std::string hex32(std::uint32_t v) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "0x%08x", v);
    return buf;
}

void check_magic(const std::string& path, const std::vector<unsigned char>& bytes,
                 std::uint32_t expected) {
    if (bytes.size() < 4)
        throw FormatError(path + ": file too short for a magic number (" +
                          std::to_string(bytes.size()) + " bytes)");
    const std::uint32_t magic = read_be32(bytes, 0);
    if (magic != expected)
        throw FormatError(path + ": bad magic " + hex32(magic) + ", expected " + hex32(expected));
}

void check_payload(const std::string& path, std::size_t actual, std::size_t expected) {
    if (actual != expected)
        throw FormatError(path + ": payload holds " + std::to_string(actual) +
                          " bytes, header promises " + std::to_string(expected));
}

}  // namespace

std::vector<std::size_t> Dataset::sample_shape() const {
    const auto& s = inputs.shape();
    return {s.begin() + 1, s.end()};
}

void Dataset::validate() const {
    if (labels.empty()) throw std::invalid_argument("dataset: empty");
    if (inputs.rank() < 2 || inputs.shape()[0] != labels.size())
        throw std::invalid_argument("dataset: inputs shape " + shape_to_string(inputs.shape()) +
                                    " does not match " + std::to_string(labels.size()) +
                                    " labels");
    if (class_count == 0) throw std::invalid_argument("dataset: class_count is zero");
    for (std::size_t i = 0; i < labels.size(); ++i)
        if (labels[i] < 0 || static_cast<std::size_t>(labels[i]) >= class_count)
            throw std::invalid_argument("dataset: label " + std::to_string(labels[i]) +
                                        " at row " + std::to_string(i) + " outside [0, " +
                                        std::to_string(class_count) + ")");
}

Dataset Dataset::subset(std::size_t k) const {
    if (k == 0 || k > size())
        throw std::invalid_argument("dataset: subset size " + std::to_string(k) +
                                    " outside [1, " + std::to_string(size()) + "]");
    std::vector<std::size_t> shape = inputs.shape();
    shape[0] = k;
    const std::size_t per = inputs.size() / size();
    Dataset out;
    out.inputs = Tensor(std::move(shape),
                        {inputs.values().begin(),
                         inputs.values().begin() + static_cast<std::ptrdiff_t>(k * per)});
    out.labels.assign(labels.begin(), labels.begin() + static_cast<std::ptrdiff_t>(k));
    out.class_count = class_count;
    return out;
}

Dataset Dataset::with_sample_shape(std::vector<std::size_t> shape) const {
    std::vector<std::size_t> full{size()};
    full.insert(full.end(), shape.begin(), shape.end());
    Dataset out;
    out.inputs = inputs.reshaped(std::move(full));
    out.labels = labels;
    out.class_count = class_count;
    return out;
}

std::pair<Tensor, std::vector<int>> Dataset::gather(const std::vector<std::size_t>& indices) const {
    const std::size_t per = inputs.size() / size();
    std::vector<std::size_t> shape = inputs.shape();
    shape[0] = indices.size();
    Tensor batch = Tensor::zeros(std::move(shape));
    std::vector<int> batch_labels(indices.size());
    for (std::size_t r = 0; r < indices.size(); ++r) {
        const std::size_t src = indices[r];
        if (src >= size()) throw std::invalid_argument("dataset: gather index out of range");
        std::copy_n(inputs.data() + src * per, per, batch.data() + r * per);
        batch_labels[r] = labels[src];
    }
    return {std::move(batch), std::move(batch_labels)};
}

Tensor load_idx_images(const std::string& path) {
    const auto bytes = read_file(path);
    check_magic(path, bytes, kImagesMagic);
    if (bytes.size() < 16) throw FormatError(path + ": truncated image header");
    const std::size_t n = read_be32(bytes, 4);
    const std::size_t h = read_be32(bytes, 8);
    const std::size_t w = read_be32(bytes, 12);
    check_payload(path, bytes.size() - 16, n * h * w);
    Tensor out = Tensor::zeros({n, 1, h, w});
    const unsigned char* px = bytes.data() + 16;
    double* dst = out.data();
    for (std::size_t i = 0; i < n * h * w; ++i) dst[i] = px[i] / 255.0;
    return out;
}

std::vector<int> load_idx_labels(const std::string& path) {
    const auto bytes = read_file(path);
    check_magic(path, bytes, kLabelsMagic);
    if (bytes.size() < 8) throw FormatError(path + ": truncated label header");
    const std::size_t n = read_be32(bytes, 4);
    check_payload(path, bytes.size() - 8, n);
    return {bytes.begin() + 8, bytes.end()};
}

void save_idx_images(const std::string& path, const Tensor& images) {
    if (images.rank() != 4 || images.dim(1) != 1)
        throw FormatError(path + ": expected [N, 1, H, W] images, got " +
                          shape_to_string(images.shape()));
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw FormatError(path + ": cannot open for writing");
    write_be32(out, kImagesMagic);
    write_be32(out, static_cast<std::uint32_t>(images.dim(0)));
    write_be32(out, static_cast<std::uint32_t>(images.dim(2)));
    write_be32(out, static_cast<std::uint32_t>(images.dim(3)));
    std::vector<unsigned char> px(images.size());
    for (std::size_t i = 0; i < images.size(); ++i) {
        const double v = images[i];
        if (!(v >= 0.0 && v <= 1.0))
            throw FormatError(path + ": pixel value " + std::to_string(v) + " outside [0, 1]");
        px[i] = static_cast<unsigned char>(std::llround(v * 255.0));
    }
    out.write(reinterpret_cast<const char*>(px.data()), static_cast<std::streamsize>(px.size()));
    if (!out) throw FormatError(path + ": write failed");
}

void save_idx_labels(const std::string& path, const std::vector<int>& labels) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw FormatError(path + ": cannot open for writing");
    write_be32(out, kLabelsMagic);
    write_be32(out, static_cast<std::uint32_t>(labels.size()));
    std::vector<unsigned char> bytes(labels.size());
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] < 0 || labels[i] > 255)
            throw FormatError(path + ": label " + std::to_string(labels[i]) +
                              " does not fit in a byte");
        bytes[i] = static_cast<unsigned char>(labels[i]);
    }
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
    if (!out) throw FormatError(path + ": write failed");
}

std::pair<Dataset, Dataset> load_mnist_dir(const std::string& dir) {
    auto load = [&](const char* images, const char* labels) {
        Dataset d;
        d.inputs = load_idx_images(dir + "/" + images);
        d.labels = load_idx_labels(dir + "/" + labels);
        d.class_count = 10;
        d.validate();
        return d;
    };
    return {load("train-images-idx3-ubyte", "train-labels-idx1-ubyte"),
            load("t10k-images-idx3-ubyte", "t10k-labels-idx1-ubyte")};
}

Dataset synthetic_blobs(std::size_t n_per_class, std::size_t class_count, std::size_t dim,
                        double separation, std::uint64_t seed) {
    if (n_per_class == 0 || class_count == 0 || dim == 0)
        throw std::invalid_argument("synthetic_blobs: sizes must be positive");

    // Fixed center layout: class c sits at separation * (1 + c/dim) along
    // axis c%dim, giving pairwise center distances >= separation.
    std::vector<std::vector<double>> centers(class_count, std::vector<double>(dim, 0.0));
    for (std::size_t c = 0; c < class_count; ++c)
        centers[c][c % dim] = separation * static_cast<double>(1 + c / dim);

    const std::size_t n = n_per_class * class_count;
    Dataset out;
    out.inputs = Tensor::zeros({n, dim});
    out.labels.resize(n);
    out.class_count = class_count;

    Rng rng(seed);
    for (std::size_t i = 0; i < n_per_class; ++i) {
        for (std::size_t c = 0; c < class_count; ++c) {
            const std::size_t row = i * class_count + c;
            out.labels[row] = static_cast<int>(c);
            for (std::size_t d = 0; d < dim; ++d)
                out.inputs.data()[row * dim + d] = centers[c][d] + rng.normal();
        }
    }
    return out;
}

std::vector<std::vector<std::size_t>> batches(std::size_t n, std::size_t batch_size,
                                              std::uint64_t seed, std::uint64_t epoch) {
    if (n == 0) throw std::invalid_argument("batches: empty dataset");
    if (batch_size == 0) throw std::invalid_argument("batches: batch size must be positive");
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng rng(seed, epoch);
    rng.shuffle(order);

    std::vector<std::vector<std::size_t>> out;
    out.reserve((n + batch_size - 1) / batch_size);
    for (std::size_t start = 0; start < n; start += batch_size) {
        const std::size_t stop = std::min(n, start + batch_size);
        out.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(start),
                         order.begin() + static_cast<std::ptrdiff_t>(stop));
    }
    return out;
}

}  // namespace trimnet
