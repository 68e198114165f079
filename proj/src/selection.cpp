#include "ubp/selection.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>

namespace ubp {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

std::string dims_str(int c_out, int c_in, int n) {
    return "c_out=" + std::to_string(c_out) + " c_in=" + std::to_string(c_in) +
           " n=" + std::to_string(n);
}

} // namespace

const char* method_name(Method m) {
    switch (m) {
        case Method::greedy: return "greedy";
        case Method::bed: return "bed";
        case Method::optimal: return "optimal";
        case Method::abp: return "abp";
        case Method::ep: return "ep";
    }
    return "?";
}

std::optional<Method> method_from_name(const std::string& name) {
    if (name == "greedy") return Method::greedy;
    if (name == "bed") return Method::bed;
    if (name == "optimal") return Method::optimal;
    if (name == "abp") return Method::abp;
    if (name == "ep") return Method::ep;
    return std::nullopt;
}

void PruningConfig::check() const {
    if (n < 1) throw std::invalid_argument("PruningConfig: block size must be >= 1");
    if (!(sparsity >= 0.0 && sparsity < 1.0))
        throw std::invalid_argument("PruningConfig: sparsity must be in [0,1)");
}

bool ScoreArray::eligible(long long k) const {
    if (k < 0 || k >= candidates()) return false;
    return (k % c_out) + n <= c_out;
}

long long ScoreArray::capacity() const {
    if (c_out < n) return 0;
    return static_cast<long long>(c_in) * (c_out / n);
}

std::vector<std::uint8_t> BlockSelection::kernel_mask() const {
    std::vector<std::uint8_t> mask(static_cast<std::size_t>(c_out) * c_in, 0);
    for (int k : starts) {
        for (int d = 0; d < n; ++d) mask[static_cast<std::size_t>(k) + d] = 1;
    }
    return mask;
}

void BlockSelection::check() const {
    if (c_out < 1 || c_in < 1 || n < 1)
        throw std::invalid_argument("BlockSelection: bad dimensions " + dims_str(c_out, c_in, n));
    long long b = static_cast<long long>(c_out) * c_in;
    int prev = -1;
    for (int k : starts) {
        if (k < 0 || k >= b)
            throw std::invalid_argument("BlockSelection: start " + std::to_string(k) + " out of range");
        if (k % c_out + n > c_out)
            throw std::invalid_argument("BlockSelection: start " + std::to_string(k) +
                                        " crosses the output-channel boundary");
        if (prev >= 0) {
            if (k <= prev) throw std::invalid_argument("BlockSelection: starts not strictly sorted");
            if (k / c_out == prev / c_out && k - prev < n)
                throw std::invalid_argument("BlockSelection: starts " + std::to_string(prev) + " and " +
                                            std::to_string(k) + " overlap");
        }
        prev = k;
    }
}

std::size_t ElementMask::kept() const {
    std::size_t count = 0;
    for (auto v : keep) count += v;
    return count;
}

ScoreArray score_blocks(const WeightTensor& w, int n) {
    w.check();
    if (n < 1 || n > w.c_out)
        throw std::invalid_argument("score_blocks: block size " + std::to_string(n) +
                                    " exceeds c_out=" + std::to_string(w.c_out));
    ScoreArray s;
    s.c_out = w.c_out;
    s.c_in = w.c_in;
    s.n = n;
    s.scores.assign(static_cast<std::size_t>(w.c_out) * w.c_in, kNegInf);

    const int kernel_elems = w.kh * w.kw;
    for (int j = 0; j < w.c_in; ++j) {
        for (int i = 0; i + n <= w.c_out; ++i) {
            double sum = 0.0;
            for (int d = 0; d < n; ++d) {
                const float* kern = w.data.data() + w.offset(i + d, j, 0, 0);
                for (int e = 0; e < kernel_elems; ++e) sum += std::abs(static_cast<double>(kern[e]));
            }
            s.scores[static_cast<std::size_t>(j) * w.c_out + i] = sum;
        }
    }
    return s;
}

int blocks_for_sparsity(long long b, int n, double sparsity) {
    if (b < 0 || n < 1) throw std::invalid_argument("blocks_for_sparsity: bad arguments");
    if (!(sparsity >= 0.0 && sparsity < 1.0))
        throw std::invalid_argument("blocks_for_sparsity: sparsity must be in [0,1)");
    // Small nudge so exact-integer products are not floored down by float noise.
    return static_cast<int>(std::floor(static_cast<double>(b) * (1.0 - sparsity) / n + 1e-9));
}

namespace {

void check_feasible(const ScoreArray& s, int m) {
    if (m < 0) throw std::invalid_argument("selection: negative block count");
    if (m > s.capacity())
        throw InfeasibleError("infeasible block count " + std::to_string(m) + ": only " +
                              std::to_string(s.capacity()) + " non-overlapping blocks exist (" +
                              dims_str(s.c_out, s.c_in, s.n) + ")");
}

// Candidate order shared by greedy and ABP: score descending, flat index
// ascending on ties.
std::vector<int> rank_by_score(const std::vector<double>& scores) {
    std::vector<int> order(scores.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](int a, int bidx) {
        if (scores[a] != scores[bidx]) return scores[a] > scores[bidx];
        return a < bidx;
    });
    return order;
}

BlockSelection finish(const ScoreArray& s, std::vector<int> starts) {
    std::sort(starts.begin(), starts.end());
    BlockSelection sel;
    sel.c_out = s.c_out;
    sel.c_in = s.c_in;
    sel.n = s.n;
    sel.starts = std::move(starts);
    sel.check();
    return sel;
}

} // namespace

BlockSelection select_greedy(const ScoreArray& s, int m) {
    check_feasible(s, m);
    // Scores never change under greedy, only turn ineligible, so one ranking
    // pass is equivalent to repeated argmax with lowest-index tie-breaking.
    std::vector<int> order = rank_by_score(s.scores);
    std::vector<std::uint8_t> dead(s.scores.size(), 0);
    std::vector<int> starts;
    starts.reserve(m);
    for (int k : order) {
        if (static_cast<int>(starts.size()) == m) break;
        if (s.scores[k] == kNegInf) break; // only sentinels remain
        if (dead[k]) continue;
        starts.push_back(k);
        const int col_base = (k / s.c_out) * s.c_out;
        const int lo = std::max(col_base, k - s.n + 1);
        const int hi = std::min(col_base + s.c_out - 1, k + s.n - 1);
        for (int t = lo; t <= hi; ++t) dead[t] = 1;
    }
    if (static_cast<int>(starts.size()) < m)
        throw InfeasibleError("greedy exhausted eligible blocks after " +
                              std::to_string(starts.size()) + " of " + std::to_string(m) + " picks");
    return finish(s, std::move(starts));
}

namespace {

BlockSelection optimal_impl(const ScoreArray& s, int m, const double* budget_seconds, bool& timed_out) {
    timed_out = false;
    check_feasible(s, m);
    const long long b = s.candidates();
    const int n = s.n;

    if (m == 0) return finish(s, {});

    // T[k][cnt] = best total from the first k candidates; take the (k-1)-th
    // only on strict improvement so tie sets resolve toward lower indices.
    std::vector<double> prev(static_cast<std::size_t>(b) + 1, 0.0);
    std::vector<double> cur(static_cast<std::size_t>(b) + 1, kNegInf);
    std::vector<std::uint8_t> take(static_cast<std::size_t>(b + 1) * (m + 1), 0);

    const auto t0 = std::chrono::steady_clock::now();
    for (int cnt = 1; cnt <= m; ++cnt) {
        if (budget_seconds) {
            double el = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
            if (el > *budget_seconds) {
                timed_out = true;
                return BlockSelection{};
            }
        }
        cur[0] = kNegInf;
        for (long long k = 1; k <= b; ++k) {
            const double skip = cur[k - 1];
            const long long back = k - n > 0 ? k - n : 0;
            const double take_score = prev[back] + s.scores[k - 1];
            if (take_score > skip) {
                cur[k] = take_score;
                take[static_cast<std::size_t>(k) * (m + 1) + cnt] = 1;
            } else {
                cur[k] = skip;
            }
        }
        std::swap(prev, cur);
    }

    if (prev[b] == kNegInf)
        throw InfeasibleError("optimal selection infeasible for m=" + std::to_string(m));

    std::vector<int> starts;
    starts.reserve(m);
    long long k = b;
    for (int cnt = m; cnt > 0;) {
        if (take[static_cast<std::size_t>(k) * (m + 1) + cnt]) {
            starts.push_back(static_cast<int>(k - 1));
            k = k - n > 0 ? k - n : 0;
            --cnt;
        } else {
            --k;
        }
    }
    return finish(s, std::move(starts));
}

} // namespace

BlockSelection select_optimal(const ScoreArray& s, int m) {
    bool timed_out = false;
    return optimal_impl(s, m, nullptr, timed_out);
}

std::optional<BlockSelection> select_optimal_budgeted(const ScoreArray& s, int m, double budget_seconds) {
    bool timed_out = false;
    BlockSelection sel = optimal_impl(s, m, &budget_seconds, timed_out);
    if (timed_out) return std::nullopt;
    return sel;
}

std::vector<int> bed_expand(const ScoreArray& s, int m) {
    check_feasible(s, m);
    const int n = s.n;
    const int c_out = s.c_out;

    // The remaining score/index list of the expansion pseudocode, as one flat
    // vector in candidate order. Neighbour arithmetic and deletions act on
    // list positions; entries carry their original index so cross-column
    // expansion can be refused.
    struct Entry {
        int orig;
        double score;
    };
    std::vector<Entry> list;
    list.reserve(s.scores.size());
    for (int k = 0; k < static_cast<int>(s.scores.size()); ++k) list.push_back({k, s.scores[k]});

    std::vector<int> picked;
    picked.reserve(m);
    for (int iter = 0; iter < m; ++iter) {
        int best_pos = -1;
        double best = kNegInf;
        for (int p = 0; p < static_cast<int>(list.size()); ++p) {
            if (list[p].score > best) {
                best = list[p].score;
                best_pos = p;
            }
        }
        if (best_pos < 0)
            throw InfeasibleError("block expansion exhausted candidates after " +
                                  std::to_string(picked.size()) + " of " + std::to_string(m) + " picks");

        const int col = list[best_pos].orig / c_out;
        const double sel_score = list[best_pos].score;

        // Rescore the left neighbours with the marginal value of merging into
        // the selected region. A donor beyond the list, in another column, or
        // at -inf means the merge would run past removed kernels or the
        // column top: mark the target non-expandable.
        for (int off = 1; off < n; ++off) {
            const int t = best_pos - off;
            if (t < 0 || list[t].orig / c_out != col) break;
            const int d = best_pos - off + n;
            if (d >= static_cast<int>(list.size()) || list[d].orig / c_out != col ||
                list[t].score == kNegInf || list[d].score == kNegInf) {
                list[t].score = kNegInf;
            } else {
                list[t].score += list[d].score - sel_score;
            }
        }

        picked.push_back(list[best_pos].orig);
        int erase_end = best_pos;
        while (erase_end < static_cast<int>(list.size()) && erase_end < best_pos + n &&
               list[erase_end].orig / c_out == col)
            ++erase_end;
        list.erase(list.begin() + best_pos, list.begin() + erase_end);
    }
    return picked;
}

std::vector<int> bed_divide(std::vector<int> expanded, int n) {
    std::sort(expanded.begin(), expanded.end());
    std::vector<int> out;
    out.reserve(expanded.size());
    int next_idx = 0;
    for (int k : expanded) {
        if (next_idx > k) {
            out.push_back(next_idx);
            next_idx += n;
        } else {
            out.push_back(k);
            next_idx = k + n;
        }
    }
    return out;
}

BlockSelection select_bed(const ScoreArray& s, int m) {
    std::vector<int> expanded = bed_expand(s, m);
    return finish(s, bed_divide(std::move(expanded), s.n));
}

BlockSelection select_abp(const ScoreArray& s, int m) {
    if (m < 0) throw std::invalid_argument("selection: negative block count");
    std::vector<int> aligned;
    for (long long k = 0; k < s.candidates(); ++k) {
        if (k % s.c_out % s.n == 0 && s.eligible(k)) aligned.push_back(static_cast<int>(k));
    }
    if (m > static_cast<int>(aligned.size()))
        throw InfeasibleError("infeasible block count " + std::to_string(m) + ": only " +
                              std::to_string(aligned.size()) + " aligned blocks exist");
    std::sort(aligned.begin(), aligned.end(), [&](int a, int bidx) {
        if (s.scores[a] != s.scores[bidx]) return s.scores[a] > s.scores[bidx];
        return a < bidx;
    });
    aligned.resize(m);
    return finish(s, std::move(aligned));
}

ElementMask select_ep(const WeightTensor& w, double sparsity) {
    w.check();
    if (!(sparsity >= 0.0 && sparsity < 1.0))
        throw std::invalid_argument("select_ep: sparsity must be in [0,1)");
    const std::size_t total = w.elements();
    const auto kept =
        static_cast<std::size_t>(std::floor(static_cast<double>(total) * (1.0 - sparsity) + 1e-9));

    std::vector<std::size_t> order(total);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t bidx) {
        float fa = std::abs(w.data[a]);
        float fb = std::abs(w.data[bidx]);
        if (fa != fb) return fa > fb;
        return a < bidx;
    });

    ElementMask mask;
    mask.c_out = w.c_out;
    mask.c_in = w.c_in;
    mask.kh = w.kh;
    mask.kw = w.kw;
    mask.keep.assign(total, 0);
    for (std::size_t r = 0; r < kept; ++r) mask.keep[order[r]] = 1;
    return mask;
}

double kept_score(const WeightTensor& w, const BlockSelection& sel) {
    w.check();
    sel.check();
    if (sel.c_out != w.c_out || sel.c_in != w.c_in)
        throw std::invalid_argument("kept_score: selection dimensions do not match tensor");
    const auto mask = sel.kernel_mask();
    const int kernel_elems = w.kh * w.kw;
    double sum = 0.0;
    std::size_t e = 0;
    for (int i = 0; i < w.c_out; ++i) {
        for (int j = 0; j < w.c_in; ++j) {
            if (mask[static_cast<std::size_t>(j) * w.c_out + i]) {
                for (int q = 0; q < kernel_elems; ++q)
                    sum += std::abs(static_cast<double>(w.data[e + q]));
            }
            e += kernel_elems;
        }
    }
    return sum;
}

double kept_score(const WeightTensor& w, const ElementMask& mask) {
    w.check();
    if (mask.keep.size() != w.elements())
        throw std::invalid_argument("kept_score: mask length does not match tensor");
    double sum = 0.0;
    for (std::size_t e = 0; e < mask.keep.size(); ++e) {
        if (mask.keep[e]) sum += std::abs(static_cast<double>(w.data[e]));
    }
    return sum;
}

std::optional<double> efficacy(const WeightTensor& w, const PruningConfig& cfg, double method_score) {
    cfg.check();
    ScoreArray s = score_blocks(w, cfg.n);
    const int m = blocks_for_sparsity(s.candidates(), cfg.n, cfg.sparsity);
    const double abp = kept_score(w, select_abp(s, m));
    const double ep = kept_score(w, select_ep(w, cfg.sparsity));
    const double denom = ep - abp;
    if (std::abs(denom) <= 1e-12) return std::nullopt; // degenerate layer
    return (method_score - abp) / denom;
}

} // namespace ubp
