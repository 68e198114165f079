#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "ubp/kernels.hpp"
#include "ubp/packed_sparse.hpp"
#include "ubp/selection.hpp"

namespace ubp {

/// Axes of one sweep. Weights are synthesized (gaussian) per point from a
/// seed derived deterministically from `seed` and the point coordinates, so
/// re-running a sweep reproduces every non-timing field.
struct SweepSpec {
    std::vector<std::array<int, 3>> shapes; // (c_out, c_in, cols)
    std::vector<int> block_sizes;
    std::vector<double> sparsities;
    std::vector<Method> methods;
    std::vector<Dataflow> kernels;
    int repeats = 5;
    std::uint64_t seed = 1;
    double dp_timeout_s = 60.0; // budget per optimal-selection point
    int threads = 1;
    int nr = 4;

    void check() const;
};

/// MobileNetV1 pointwise-layer stand-in: square 1x1 shapes with cols = 196.
SweepSpec mobilenet_v1_preset();

struct EfficacyRow {
    int c_out, c_in, kh, kw, n;
    double sparsity;
    Method method;
    std::string status; // ok | timeout | infeasible | efficacy_undefined
    double kept = 0.0;
    double efficacy_value = 0.0;
    double select_seconds = 0.0;
};

struct KernelRow {
    int c_out, c_in, cols, n;
    double sparsity;
    Dataflow dataflow;
    int threads, nr, repeats;
    double median_seconds = 0.0;
    double gflops = 0.0;
    std::uint64_t register_copies = 0;
    std::uint64_t epilogue_stores = 0;
    bool correct = false;
};

struct TimingRow {
    long long b;
    int c_out, c_in, n;
    double sparsity;
    int m;
    Method method;
    int repeats;
    double median_seconds = 0.0;
    std::string status; // ok | timeout | infeasible
};

std::vector<EfficacyRow> sweep_efficacy(const SweepSpec& spec);
std::vector<KernelRow> sweep_kernels(const SweepSpec& spec);
std::vector<TimingRow> sweep_selection_timing(const SweepSpec& spec);

std::string to_csv(const std::vector<EfficacyRow>& rows);
std::string to_csv(const std::vector<KernelRow>& rows);
std::string to_csv(const std::vector<TimingRow>& rows);

/// Seed for one sweep point, mixed from the sweep seed and point coordinates.
std::uint64_t point_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b, std::uint64_t c);

double median(std::vector<double> v);

} // namespace ubp
