#include "ubp/kernels.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <condition_variable>
#include <functional>
#include <mutex>
#include <stdexcept>
#include <thread>

namespace ubp {

namespace {

// Persistent worker pool so per-call thread spawn cost does not dwarf the
// small kernels. The calling thread participates, so a pool of k-1 workers
// serves k-way runs. Work items are claimed under the mutex; the hot loops
// themselves stay lock-free.
class WorkerPool {
public:
    static WorkerPool& instance() {
        static WorkerPool pool;
        return pool;
    }

    void run(int count, const std::function<void(int)>& fn) {
        if (count <= 0) return;
        if (count == 1) {
            fn(0);
            return;
        }
        std::unique_lock lk(m_);
        ensure_workers(count - 1);
        fn_ = &fn;
        total_ = count;
        next_ = 0;
        done_ = 0;
        ++generation_;
        lk.unlock();
        cv_work_.notify_all();
        work_loop();
        lk.lock();
        cv_done_.wait(lk, [&] { return done_ == total_; });
        fn_ = nullptr;
    }

    ~WorkerPool() {
        {
            std::lock_guard lk(m_);
            stop_ = true;
        }
        cv_work_.notify_all();
        for (auto& t : workers_) t.join();
    }

private:
    void ensure_workers(int want) { // caller holds m_
        while (static_cast<int>(workers_.size()) < want)
            workers_.emplace_back([this] { worker_main(); });
    }

    void work_loop() {
        for (;;) {
            int idx;
            {
                std::lock_guard lk(m_);
                if (next_ >= total_) return;
                idx = next_++;
            }
            (*fn_)(idx);
            {
                std::lock_guard lk(m_);
                ++done_;
                if (done_ == total_) cv_done_.notify_all();
            }
        }
    }

    void worker_main() {
        std::uint64_t seen = 0;
        for (;;) {
            {
                std::unique_lock lk(m_);
                cv_work_.wait(lk, [&] { return stop_ || generation_ != seen; });
                if (stop_) return;
                seen = generation_;
            }
            work_loop();
        }
    }

    std::mutex m_;
    std::condition_variable cv_work_;
    std::condition_variable cv_done_;
    std::vector<std::thread> workers_;
    const std::function<void(int)>* fn_ = nullptr;
    int total_ = 0;
    int next_ = 0;
    int done_ = 0;
    std::uint64_t generation_ = 0;
    bool stop_ = false;
};

} // namespace

void TileConfig::check() const {
    if (nr < 1) throw std::invalid_argument("TileConfig: nr must be >= 1");
    if (threads < 1) throw std::invalid_argument("TileConfig: threads must be >= 1");
    if (mr < 0) throw std::invalid_argument("TileConfig: mr must be >= 0");
}

ActivationMatrix dense_ref(const WeightTensor& w, const ActivationMatrix& in) {
    w.check();
    in.check();
    if (w.kh != 1 || w.kw != 1)
        throw std::invalid_argument("dense_ref: requires kh = kw = 1");
    if (w.c_in != in.rows)
        throw std::invalid_argument("dense_ref: weight c_in " + std::to_string(w.c_in) +
                                    " vs input rows " + std::to_string(in.rows));
    ActivationMatrix out(w.c_out, in.cols);
    for (int r = 0; r < w.c_out; ++r) {
        for (int c = 0; c < in.cols; ++c) {
            float acc = 0.0f;
            for (int j = 0; j < w.c_in; ++j)
                acc += w.data[static_cast<std::size_t>(r) * w.c_in + j] * in.at(j, c);
            out.at(r, c) = acc;
        }
    }
    return out;
}

std::vector<std::pair<int, int>> partition_columns(int cols, int parts) {
    if (parts < 1) throw std::invalid_argument("partition_columns: parts must be >= 1");
    std::vector<std::pair<int, int>> ranges;
    ranges.reserve(parts);
    const int base = cols / parts;
    const int rem = cols % parts;
    int begin = 0;
    for (int p = 0; p < parts; ++p) {
        const int width = base + (p < rem ? 1 : 0);
        ranges.emplace_back(begin, begin + width);
        begin += width;
    }
    return ranges;
}

double normalized_max_diff(const ActivationMatrix& a, const ActivationMatrix& ref) {
    if (a.rows != ref.rows || a.cols != ref.cols)
        throw std::invalid_argument("normalized_max_diff: shape mismatch");
    double max_diff = 0.0;
    double scale = 0.0;
    for (std::size_t e = 0; e < ref.data.size(); ++e) {
        max_diff = std::max(max_diff, std::abs(static_cast<double>(a.data[e]) - ref.data[e]));
        scale = std::max(scale, std::abs(static_cast<double>(ref.data[e])));
    }
    return max_diff / std::max(scale, 1e-30);
}

namespace {

struct Counters {
    std::uint64_t copies = 0;
    std::uint64_t epilogue = 0;
    std::uint64_t tiles = 0;
};

// All three strip kernels share the same register-file abstraction: n
// accumulator rows of nr columns, kept in `acc` row-major. The nr dimension
// stands in for vector lanes; scalar execution keeps the contract testable.

void abp_range(const PackedSparse& p, const ActivationMatrix& in, int nr, int cb, int ce,
               ActivationMatrix& out, Counters& ctr) {
    const int n = p.n;
    const float* in_base = in.data.data();
    const float* blk_base = p.data.data();
    const std::uint32_t* idx = p.indices.data();
    float* out_base = out.data.data();
    const int in_cols = in.cols;
    std::vector<float> acc(static_cast<std::size_t>(n) * nr);
    for (int c0 = cb; c0 < ce; c0 += nr) {
        const int tw = std::min(nr, ce - c0);
        ++ctr.tiles;
        for (std::size_t row = 0; row < p.indptr_rows(); ++row) {
            if (p.indptr[row + 1] == p.indptr[row]) continue;
            const int t = p.row_start(row);
            std::fill(acc.begin(), acc.end(), 0.0f);
            for (std::uint32_t b = p.indptr[row]; b < p.indptr[row + 1]; ++b) {
                const float* blk = blk_base + static_cast<std::size_t>(b) * n;
                const float* src = in_base + static_cast<std::size_t>(idx[b]) * in_cols + c0;
                for (int s = 0; s < n; ++s) {
                    const float wv = blk[s];
                    float* arow = acc.data() + static_cast<std::size_t>(s) * nr;
                    for (int c = 0; c < tw; ++c) arow[c] += wv * src[c];
                }
            }
            for (int s = 0; s < n; ++s) {
                std::copy_n(acc.data() + static_cast<std::size_t>(s) * nr, tw,
                            out_base + static_cast<std::size_t>(t + s) * out.cols + c0);
            }
        }
    }
}

void naive_range(const PackedSparse& p, const ActivationMatrix& in, int nr, int cb, int ce,
                 ActivationMatrix& out, Counters& ctr) {
    const int n = p.n;
    const int t_last = p.c_out - n;
    if (t_last < 0) return;
    const float* in_base = in.data.data();
    const float* blk_base = p.data.data();
    const std::uint32_t* idx = p.indices.data();
    float* out_base = out.data.data();
    const int in_cols = in.cols;
    std::vector<float> acc(static_cast<std::size_t>(n) * nr);
    for (int c0 = cb; c0 < ce; c0 += nr) {
        const int tw = std::min(nr, ce - c0);
        ++ctr.tiles;
        std::fill(acc.begin(), acc.end(), 0.0f);
        // The window walks every start row; accumulator slot s holds output
        // row t + s throughout the strip.
        for (int t = 0; t <= t_last; ++t) {
            for (std::uint32_t b = p.indptr[t]; b < p.indptr[t + 1]; ++b) {
                const float* blk = blk_base + static_cast<std::size_t>(b) * n;
                const float* src = in_base + static_cast<std::size_t>(idx[b]) * in_cols + c0;
                for (int s = 0; s < n; ++s) {
                    const float wv = blk[s];
                    float* arow = acc.data() + static_cast<std::size_t>(s) * nr;
                    for (int c = 0; c < tw; ++c) arow[c] += wv * src[c];
                }
            }
            std::copy_n(acc.data(), tw, out_base + static_cast<std::size_t>(t) * out.cols + c0);
            if (t < t_last) {
                // Advance one row: each of the remaining n-1 accumulator rows
                // moves down one slot, then the vacated top row is cleared.
                for (int s = 1; s < n; ++s) {
                    std::copy_n(acc.data() + static_cast<std::size_t>(s) * nr, nr,
                                acc.data() + static_cast<std::size_t>(s - 1) * nr);
                }
                ctr.copies += static_cast<std::uint64_t>(n - 1);
                std::fill_n(acc.data() + static_cast<std::size_t>(n - 1) * nr, tw, 0.0f);
            } else {
                for (int s = 1; s < n; ++s) {
                    std::copy_n(acc.data() + static_cast<std::size_t>(s) * nr, tw,
                                out_base + static_cast<std::size_t>(t + s) * out.cols + c0);
                    ++ctr.epilogue;
                }
            }
        }
    }
}

void wros_range(const PackedSparse& p, const ActivationMatrix& in, int nr, int cb, int ce,
                ActivationMatrix& out, Counters& ctr) {
    const int n = p.n;
    const int t_last = p.c_out - n;
    if (t_last < 0) return;
    const float* in_base = in.data.data();
    const float* blk_base = p.data.data();
    const std::uint32_t* idx = p.indices.data();
    float* out_base = out.data.data();
    const int in_cols = in.cols;
    std::vector<float> acc(static_cast<std::size_t>(n) * nr);
    for (int c0 = cb; c0 < ce; c0 += nr) {
        const int tw = std::min(nr, ce - c0);
        ++ctr.tiles;
        std::fill(acc.begin(), acc.end(), 0.0f);
        int base = -1; // lowest output row whose slot is still live
        int last = -1;
        for (int t = 0; t <= t_last; ++t) {
            if (p.indptr[t + 1] == p.indptr[t]) continue;
            if (base >= 0 && base < t) {
                // Rows the window has passed are complete; flush them from
                // their slots. Rows beyond base+n-2 were never touched.
                const int flush_end = std::min(t, base + n - 1);
                for (int r = base; r < flush_end; ++r) {
                    float* slot = acc.data() + static_cast<std::size_t>(r % n) * nr;
                    std::copy_n(slot, tw, out_base + static_cast<std::size_t>(r) * out.cols + c0);
                    std::fill_n(slot, tw, 0.0f);
                }
            }
            base = t;
            for (std::uint32_t b = p.indptr[t]; b < p.indptr[t + 1]; ++b) {
                const float* blk = blk_base + static_cast<std::size_t>(b) * n;
                const float* src = in_base + static_cast<std::size_t>(idx[b]) * in_cols + c0;
                // Pre-rotated data keeps slot s = the weight whose output row
                // is congruent to s mod n: a straight slot-for-slot fma.
                for (int s = 0; s < n; ++s) {
                    const float wv = blk[s];
                    float* arow = acc.data() + static_cast<std::size_t>(s) * nr;
                    for (int c = 0; c < tw; ++c) arow[c] += wv * src[c];
                }
            }
            // Row t takes no further contributions: store it, free its slot.
            float* slot = acc.data() + static_cast<std::size_t>(t % n) * nr;
            std::copy_n(slot, tw, out_base + static_cast<std::size_t>(t) * out.cols + c0);
            std::fill_n(slot, tw, 0.0f);
            base = t + 1;
            last = t;
        }
        if (last >= 0) {
            for (int r = base; r < last + n; ++r) {
                const float* slot = acc.data() + static_cast<std::size_t>(r % n) * nr;
                std::copy_n(slot, tw, out_base + static_cast<std::size_t>(r) * out.cols + c0);
                ++ctr.epilogue;
            }
        }
    }
}

using RangeFn = void (*)(const PackedSparse&, const ActivationMatrix&, int, int, int,
                         ActivationMatrix&, Counters&);

KernelReport run_strips(const PackedSparse& p, const ActivationMatrix& in, const TileConfig& cfg,
                        RangeFn fn) {
    cfg.check();
    in.check();
    if (p.kh != 1 || p.kw != 1)
        throw std::invalid_argument("spmm: packs with kh*kw > 1 run through densify + dense_ref");
    if (p.c_in != in.rows)
        throw std::invalid_argument("spmm: pack c_in " + std::to_string(p.c_in) + " vs input rows " +
                                    std::to_string(in.rows));
    if (cfg.mr != 0 && cfg.mr != p.n)
        throw std::invalid_argument("spmm: mr must equal the pack's block size");
    // Deep validation happens in pack()/load_packed(); the hot path only
    // checks what it is about to index.
    if (p.indptr.size() != p.indptr_rows() + 1 || p.indptr.front() != 0 ||
        p.indptr.back() != p.indices.size() ||
        p.data.size() != p.indices.size() * static_cast<std::size_t>(p.block_elems()))
        throw std::invalid_argument("spmm: malformed pack structure");
    for (std::size_t r = 1; r < p.indptr.size(); ++r)
        if (p.indptr[r] < p.indptr[r - 1])
            throw std::invalid_argument("spmm: indptr decreases at row " + std::to_string(r - 1));
    for (std::uint32_t j : p.indices)
        if (j >= static_cast<std::uint32_t>(p.c_in))
            throw std::invalid_argument("spmm: input-channel index out of range");

    KernelReport rep;
    rep.output = ActivationMatrix(p.c_out, in.cols);
    rep.flops = 2ull * p.block_count() * static_cast<std::uint64_t>(p.n) * in.cols;

    const auto ranges = partition_columns(in.cols, cfg.threads);
    std::vector<Counters> ctrs(ranges.size());

    const auto t0 = std::chrono::steady_clock::now();
    const std::function<void(int)> task = [&](int w) {
        fn(p, in, cfg.nr, ranges[w].first, ranges[w].second, rep.output, ctrs[w]);
    };
    WorkerPool::instance().run(static_cast<int>(ranges.size()), task);
    rep.elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    for (const auto& c : ctrs) {
        rep.register_copies += c.copies;
        rep.epilogue_stores += c.epilogue;
        rep.column_tiles += c.tiles;
    }
    return rep;
}

} // namespace

KernelReport spmm_abp(const PackedSparse& p, const ActivationMatrix& in, const TileConfig& cfg) {
    if (p.dataflow != Dataflow::aligned)
        throw std::invalid_argument("spmm_abp: pack is tagged " + std::string(dataflow_name(p.dataflow)));
    return run_strips(p, in, cfg, abp_range);
}

KernelReport spmm_ubp_naive(const PackedSparse& p, const ActivationMatrix& in, const TileConfig& cfg) {
    if (p.dataflow != Dataflow::unaligned_naive)
        throw std::invalid_argument("spmm_ubp_naive: pack is tagged " +
                                    std::string(dataflow_name(p.dataflow)));
    return run_strips(p, in, cfg, naive_range);
}

KernelReport spmm_ubp_wros(const PackedSparse& p, const ActivationMatrix& in, const TileConfig& cfg) {
    if (p.dataflow != Dataflow::unaligned_wros)
        throw std::invalid_argument("spmm_ubp_wros: pack is tagged " +
                                    std::string(dataflow_name(p.dataflow)));
    return run_strips(p, in, cfg, wros_range);
}

KernelReport spmm(const PackedSparse& p, const ActivationMatrix& in, const TileConfig& cfg) {
    switch (p.dataflow) {
        case Dataflow::aligned: return spmm_abp(p, in, cfg);
        case Dataflow::unaligned_naive: return spmm_ubp_naive(p, in, cfg);
        case Dataflow::unaligned_wros: return spmm_ubp_wros(p, in, cfg);
    }
    throw std::invalid_argument("spmm: unknown dataflow tag");
}

} // namespace ubp
