#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "ubp/tensor.hpp"

namespace ubp {

/// Requested block count cannot be met by any set of mutually non-overlapping
/// eligible blocks (or a selector ran out of candidates mid-way). No partial
/// selection is ever returned.
class InfeasibleError : public std::runtime_error {
public:
    explicit InfeasibleError(const std::string& msg) : std::runtime_error(msg) {}
};

enum class Method { greedy, bed, optimal, abp, ep };
enum class ScoreFn { l1 };

const char* method_name(Method m);
std::optional<Method> method_from_name(const std::string& name);

struct PruningConfig {
    int n = 4;              // block size N
    double sparsity = 0.0;  // target pruning rate p in [0,1)
    Method method = Method::greedy;
    ScoreFn score_fn = ScoreFn::l1;

    void check() const;
};

/// Per-candidate block importance scores. Candidate k = i + c_out*j covers the
/// N kernels starting at output channel i in input column j; starts that would
/// cross the output-channel boundary carry -infinity.
struct ScoreArray {
    int c_out = 0;
    int c_in = 0;
    int n = 0;
    std::vector<double> scores; // length c_out * c_in

    long long candidates() const { return static_cast<long long>(c_out) * c_in; }
    bool eligible(long long k) const;
    /// Count of mutually non-overlapping blocks any selection can reach:
    /// c_in * floor(c_out / n).
    long long capacity() const;
};

/// A validated set of unaligned block starts (flat k = i + c_out*j, sorted).
struct BlockSelection {
    int c_out = 0;
    int c_in = 0;
    int n = 0;
    std::vector<int> starts;

    int m() const { return static_cast<int>(starts.size()); }
    /// Kernel-level keep mask in candidate layout (index k = i + c_out*j).
    std::vector<std::uint8_t> kernel_mask() const;
    /// Throws std::invalid_argument on any invariant violation: ineligible
    /// start, duplicate, or two starts in one column closer than n.
    void check() const;
};

/// Element-wise keep mask over a weight tensor (flat tensor layout).
struct ElementMask {
    int c_out = 0;
    int c_in = 0;
    int kh = 0;
    int kw = 0;
    std::vector<std::uint8_t> keep;

    std::size_t kept() const;
};

/// L1 block scores per Eq.-style definition: scores[k] = sum |w| over the n
/// kernels starting at output channel (k mod c_out) in column (k div c_out),
/// or -infinity when the block would cross the boundary.
ScoreArray score_blocks(const WeightTensor& w, int n);

/// floor(b * (1 - sparsity) / n).
int blocks_for_sparsity(long long b, int n, double sparsity);

/// Pick the max finite score m times, invalidating every overlapping start
/// after each pick. Ties break toward the lowest flat index.
BlockSelection select_greedy(const ScoreArray& s, int m);

/// Exact maximizer via the take/skip recurrence over (prefix, count) with
/// backtracking. O(b*m) time and memory.
BlockSelection select_optimal(const ScoreArray& s, int m);

/// select_optimal with a cooperative wall-clock budget; nullopt on timeout.
std::optional<BlockSelection> select_optimal_budgeted(const ScoreArray& s, int m, double budget_seconds);

/// Block Expansion and Division. Expansion greedily selects blocks but
/// rescores left neighbours with the marginal value of merging into the
/// selected region; division re-splits merged regions into n-sized blocks.
BlockSelection select_bed(const ScoreArray& s, int m);

/// Expansion stage alone: returns the intermediate index set in selection
/// order (before division).
std::vector<int> bed_expand(const ScoreArray& s, int m);

/// Division stage alone: consumes the expansion index set, returns final
/// sorted starts.
std::vector<int> bed_divide(std::vector<int> expanded, int n);

/// Aligned baseline: starts restricted to multiples of n, top-m by score.
BlockSelection select_abp(const ScoreArray& s, int m);

/// Element-wise baseline: keep the top floor(E*(1-sparsity)) elements by |w|,
/// ties toward the lowest flat offset.
ElementMask select_ep(const WeightTensor& w, double sparsity);

/// Sum of |w| over kept elements, accumulated in flat tensor order so equal
/// keep-sets produce bit-identical sums regardless of method.
double kept_score(const WeightTensor& w, const BlockSelection& sel);
double kept_score(const WeightTensor& w, const ElementMask& mask);

/// (method - ABP) / (EP - ABP) at the same n and sparsity. nullopt when the
/// denominator is degenerate (|EP - ABP| <= 1e-12): efficacy undefined.
std::optional<double> efficacy(const WeightTensor& w, const PruningConfig& cfg, double method_score);

} // namespace ubp
