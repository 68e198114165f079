#pragma once

// Test-only oracles, independent of the library's selection and kernel paths.

#include <optional>
#include <vector>

#include "ubp/selection.hpp"
#include "ubp/tensor.hpp"

namespace ubp::testing {

/// Exhaustive-enumeration maximizer. Every feasible subset of eligible starts
/// is enumerated per input column (recursion over start positions with >= n
/// separation); column results combine through an exhaustive search over
/// per-column block counts, which is lossless because scores add across
/// columns. No recurrence is shared with ubp::select_optimal. Returns nullopt
/// when m is infeasible.
std::optional<std::vector<int>> enum_best_selection(const ScoreArray& s, int m);

/// Fully flat variant for tiny instances (b <= ~24): enumerates subsets of
/// flat candidate indices directly. Used to cross-check enum_best_selection.
std::optional<std::vector<int>> enum_best_selection_flat(const ScoreArray& s, int m);

/// Independent dense product: j-outer loop order, double accumulation.
ActivationMatrix oracle_matmul(const WeightTensor& w, const ActivationMatrix& in);

/// Random weight tensor whose per-kernel values make selection ties
/// vanishingly unlikely (gaussian floats).
WeightTensor random_layer(int c_out, int c_in, std::uint64_t seed);

} // namespace ubp::testing
