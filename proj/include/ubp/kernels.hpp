#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "ubp/packed_sparse.hpp"
#include "ubp/tensor.hpp"

namespace ubp {

struct TileConfig {
    int mr = 0;      // output-row tile height; 0 = take the pack's block size
    int nr = 4;      // output-column tile width
    int threads = 1; // workers over disjoint column ranges

    void check() const;
};

/// One kernel execution: numeric output plus dataflow accounting.
struct KernelReport {
    ActivationMatrix output;
    std::uint64_t register_copies = 0; // inter-tile accumulator moves
    std::uint64_t epilogue_stores = 0; // accumulator rows stored after a strip's final tile
    std::uint64_t column_tiles = 0;    // strips processed (summed over workers)
    double elapsed = 0.0;              // wall-clock seconds
    std::uint64_t flops = 0;           // effective multiply-adds x2
};

/// Ground-truth product O[r,c] = sum_j w[r,j] * I[j,c] with fixed ascending-j
/// accumulation. Requires kh = kw = 1.
ActivationMatrix dense_ref(const WeightTensor& w, const ActivationMatrix& in);

/// Aligned kernel: output tiles advance by n rows, all n accumulator rows
/// stored per tile. register_copies is always zero.
KernelReport spmm_abp(const PackedSparse& p, const ActivationMatrix& in, const TileConfig& cfg);

/// Unaligned kernel, naive dataflow: the register window slides one start row
/// at a time across the whole strip; each advance stores the bottom row and
/// shifts the remaining n-1 accumulators down (counted as register copies).
KernelReport spmm_ubp_naive(const PackedSparse& p, const ActivationMatrix& in, const TileConfig& cfg);

/// Unaligned kernel, WROS dataflow: weights were pre-rotated so the
/// accumulator for output row r always lives in slot r mod n. No register
/// copies ever; the last n-1 rows of each strip are flushed by an epilogue.
KernelReport spmm_ubp_wros(const PackedSparse& p, const ActivationMatrix& in, const TileConfig& cfg);

/// Dispatch on the pack's dataflow tag.
KernelReport spmm(const PackedSparse& p, const ActivationMatrix& in, const TileConfig& cfg);

/// Contiguous near-equal column ranges; empty ranges when parts > cols.
std::vector<std::pair<int, int>> partition_columns(int cols, int parts);

/// max |a-b| normalized by max(|ref|, 1e-30). Used for the 1e-5 dense checks.
double normalized_max_diff(const ActivationMatrix& a, const ActivationMatrix& ref);

} // namespace ubp
