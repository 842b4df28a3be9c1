#include "trimnet/heatmap.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <vector>

#include "trimnet/errors.hpp"

namespace trimnet {

std::string format_double(double v) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

void write_matrix_csv(const Tensor& matrix, const std::string& path) {
    if (matrix.rank() != 2)
        throw FormatError(path + ": CSV export needs a 2-D tensor, got " +
                          shape_to_string(matrix.shape()));
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw FormatError(path + ": cannot open for writing");
    for (std::size_t i = 0; i < matrix.dim(0); ++i) {
        for (std::size_t j = 0; j < matrix.dim(1); ++j) {
            if (j > 0) out << ',';
            out << format_double(matrix.at(i, j));
        }
        out << "\r\n";
    }
    if (!out) throw FormatError(path + ": write failed");
}

void write_pgm(const Tensor& matrix, const std::string& path) {
    if (matrix.rank() != 2)
        throw FormatError(path + ": PGM export needs a 2-D tensor, got " +
                          shape_to_string(matrix.shape()));
    const std::size_t h = matrix.dim(0), w = matrix.dim(1);
    double max_abs = 0.0;
    for (std::size_t i = 0; i < matrix.size(); ++i)
        max_abs = std::max(max_abs, std::abs(matrix[i]));

    std::vector<unsigned char> pixels(h * w, 0);
    if (max_abs > 0.0) {
        for (std::size_t i = 0; i < pixels.size(); ++i)
            pixels[i] = static_cast<unsigned char>(
                std::llround(std::abs(matrix[i]) / max_abs * 255.0));
    }

    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw FormatError(path + ": cannot open for writing");
    out << "P5\n" << w << " " << h << "\n255\n";
    out.write(reinterpret_cast<const char*>(pixels.data()),
              static_cast<std::streamsize>(pixels.size()));
    if (!out) throw FormatError(path + ": write failed");
}

void export_heatmap(const Tensor& weight, const std::string& path_stem) {
    if (weight.rank() != 2)
        throw FormatError(path_stem + ": heatmap export needs a 2-D weight, got " +
                          shape_to_string(weight.shape()));
    Tensor abs_w = weight;
    for (std::size_t i = 0; i < abs_w.size(); ++i) abs_w[i] = std::abs(abs_w[i]);
    write_matrix_csv(abs_w, path_stem + ".csv");
    write_pgm(abs_w, path_stem + ".pgm");
}

}  // namespace trimnet
