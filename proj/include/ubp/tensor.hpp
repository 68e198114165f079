#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

namespace ubp {

/// Dense 4-D convolution weights, row-major over (c_out, c_in, kh, kw).
struct WeightTensor {
    int c_out = 0;
    int c_in = 0;
    int kh = 0;
    int kw = 0;
    std::vector<float> data;

    WeightTensor() = default;
    WeightTensor(int c_out_, int c_in_, int kh_, int kw_);

    std::size_t elements() const {
        return static_cast<std::size_t>(c_out) * c_in * kh * kw;
    }
    std::size_t offset(int i, int j, int y, int x) const {
        return ((static_cast<std::size_t>(i) * c_in + j) * kh + y) * kw + x;
    }
    float at(int i, int j, int y, int x) const { return data[offset(i, j, y, x)]; }
    float& at(int i, int j, int y, int x) { return data[offset(i, j, y, x)]; }

    /// Throws std::invalid_argument if dimensions or data length are inconsistent.
    void check() const;
};

/// 2-D activations: rows = input channels, cols = flattened spatial size.
struct ActivationMatrix {
    int rows = 0;
    int cols = 0;
    std::vector<float> data;

    ActivationMatrix() = default;
    ActivationMatrix(int rows_, int cols_);

    std::size_t elements() const { return static_cast<std::size_t>(rows) * cols; }
    float at(int r, int c) const { return data[static_cast<std::size_t>(r) * cols + c]; }
    float& at(int r, int c) { return data[static_cast<std::size_t>(r) * cols + c]; }

    void check() const;
};

enum class Dist { uniform, gaussian };

/// Deterministic synthetic weights. Uniform draws from [-1,1), gaussian from
/// N(0,1). The generator is mt19937 with fixed bit mappings (see README) so
/// fixtures are reproducible across reimplementations.
WeightTensor gen_tensor(int c_out, int c_in, int kh, int kw, std::uint64_t seed, Dist dist);

/// Same generator over a 2-D activation matrix.
ActivationMatrix gen_matrix(int rows, int cols, std::uint64_t seed, Dist dist);

} // namespace ubp
