#include "ubp/bench.hpp"

#include <algorithm>
#include <chrono>
#include <sstream>
#include <stdexcept>

namespace ubp {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(double v) {
    std::ostringstream os;
    os.precision(17);
    os << v;
    return os.str();
}

} // namespace

void SweepSpec::check() const {
    if (shapes.empty() || block_sizes.empty() || sparsities.empty())
        throw std::invalid_argument("SweepSpec: shapes, block_sizes and sparsities must be non-empty");
    if (repeats < 1) throw std::invalid_argument("SweepSpec: repeats must be >= 1");
    if (threads < 1 || nr < 1) throw std::invalid_argument("SweepSpec: threads and nr must be >= 1");
    for (const auto& s : shapes)
        if (s[0] < 1 || s[1] < 1 || s[2] < 1)
            throw std::invalid_argument("SweepSpec: shape entries must be positive");
}

SweepSpec mobilenet_v1_preset() {
    SweepSpec spec;
    spec.shapes = {{64, 64, 196}, {128, 128, 196}, {256, 256, 196},
                   {512, 512, 196}, {1024, 1024, 196}};
    spec.block_sizes = {4};
    spec.sparsities = {0.8};
    spec.methods = {Method::greedy, Method::bed, Method::abp};
    spec.kernels = {Dataflow::aligned, Dataflow::unaligned_naive, Dataflow::unaligned_wros};
    spec.repeats = 5;
    spec.threads = 4;
    return spec;
}

std::uint64_t point_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b, std::uint64_t c) {
    // splitmix64-style mixing; stability of this function is part of the
    // sweep-reproducibility contract.
    std::uint64_t x = seed ^ (a * 0x9E3779B97F4A7C15ull) ^ (b * 0xBF58476D1CE4E5B9ull) ^
                      (c * 0x94D049BB133111EBull);
    x ^= x >> 30;
    x *= 0xBF58476D1CE4E5B9ull;
    x ^= x >> 27;
    x *= 0x94D049BB133111EBull;
    x ^= x >> 31;
    return x;
}

double median(std::vector<double> v) {
    if (v.empty()) return 0.0;
    std::sort(v.begin(), v.end());
    const std::size_t mid = v.size() / 2;
    if (v.size() % 2 == 1) return v[mid];
    return 0.5 * (v[mid - 1] + v[mid]);
}

std::vector<EfficacyRow> sweep_efficacy(const SweepSpec& spec) {
    spec.check();
    std::vector<EfficacyRow> rows;
    std::uint64_t shape_idx = 0;
    for (const auto& shape : spec.shapes) {
        ++shape_idx;
        std::uint64_t n_idx = 0;
        for (int n : spec.block_sizes) {
            ++n_idx;
            std::uint64_t p_idx = 0;
            for (double p : spec.sparsities) {
                ++p_idx;
                const auto wseed = point_seed(spec.seed, shape_idx, n_idx, p_idx);
                const WeightTensor w = gen_tensor(shape[0], shape[1], 1, 1, wseed, Dist::gaussian);
                for (Method method : spec.methods) {
                    EfficacyRow row{shape[0], shape[1], 1, 1, n, p, method, "ok", 0.0, 0.0, 0.0};
                    try {
                        if (n > shape[0]) throw InfeasibleError("block size exceeds c_out");
                        const ScoreArray s = score_blocks(w, n);
                        const int m = blocks_for_sparsity(s.candidates(), n, p);
                        const auto t0 = Clock::now();
                        double kept = 0.0;
                        bool timed_out = false;
                        switch (method) {
                            case Method::greedy: kept = kept_score(w, select_greedy(s, m)); break;
                            case Method::bed: kept = kept_score(w, select_bed(s, m)); break;
                            case Method::optimal: {
                                auto sel = select_optimal_budgeted(s, m, spec.dp_timeout_s);
                                if (!sel) timed_out = true;
                                else kept = kept_score(w, *sel);
                                break;
                            }
                            case Method::abp: kept = kept_score(w, select_abp(s, m)); break;
                            case Method::ep: kept = kept_score(w, select_ep(w, p)); break;
                        }
                        row.select_seconds = seconds_since(t0);
                        if (timed_out) {
                            row.status = "timeout";
                        } else {
                            row.kept = kept;
                            PruningConfig cfg{n, p, method, ScoreFn::l1};
                            auto eff = efficacy(w, cfg, kept);
                            if (eff) row.efficacy_value = *eff;
                            else row.status = "efficacy_undefined";
                        }
                    } catch (const InfeasibleError&) {
                        row.status = "infeasible";
                    }
                    rows.push_back(row);
                }
            }
        }
    }
    return rows;
}

std::vector<KernelRow> sweep_kernels(const SweepSpec& spec) {
    spec.check();
    std::vector<KernelRow> rows;
    TileConfig cfg;
    cfg.nr = spec.nr;
    cfg.threads = spec.threads;

    std::uint64_t shape_idx = 0;
    for (const auto& shape : spec.shapes) {
        ++shape_idx;
        std::uint64_t n_idx = 0;
        for (int n : spec.block_sizes) {
            ++n_idx;
            std::uint64_t p_idx = 0;
            for (double p : spec.sparsities) {
                ++p_idx;
                const auto wseed = point_seed(spec.seed, shape_idx, n_idx, p_idx);
                const WeightTensor w = gen_tensor(shape[0], shape[1], 1, 1, wseed, Dist::gaussian);
                const ActivationMatrix in = gen_matrix(shape[1], shape[2], wseed + 1, Dist::uniform);
                ScoreArray s;
                int m = 0;
                try {
                    s = score_blocks(w, n);
                    m = blocks_for_sparsity(s.candidates(), n, p);
                } catch (const std::exception&) {
                    continue; // shape cannot host this block size; nothing to report
                }
                for (Dataflow df : spec.kernels) {
                    KernelRow row{shape[0], shape[1], shape[2], n, p, df,
                                  spec.threads, spec.nr, spec.repeats};
                    try {
                        const BlockSelection sel =
                            df == Dataflow::aligned ? select_abp(s, m) : select_bed(s, m);
                        const PackedSparse pack_df = pack(w, sel, df);
                        std::vector<double> times;
                        times.reserve(spec.repeats);
                        KernelReport last;
                        for (int rep = 0; rep < spec.repeats; ++rep) {
                            last = spmm(pack_df, in, cfg);
                            times.push_back(last.elapsed);
                        }
                        row.median_seconds = median(times);
                        row.gflops = row.median_seconds > 0.0
                                         ? static_cast<double>(last.flops) / row.median_seconds / 1e9
                                         : 0.0;
                        row.register_copies = last.register_copies;
                        row.epilogue_stores = last.epilogue_stores;
                        const ActivationMatrix ref = dense_ref(densify(pack_df), in);
                        row.correct = normalized_max_diff(last.output, ref) <= 1e-5;
                    } catch (const InfeasibleError&) {
                        row.correct = false;
                        row.median_seconds = 0.0;
                    }
                    rows.push_back(row);
                }
            }
        }
    }
    return rows;
}

std::vector<TimingRow> sweep_selection_timing(const SweepSpec& spec) {
    spec.check();
    if (spec.methods.empty())
        throw std::invalid_argument("sweep_selection_timing: methods must be non-empty");
    std::vector<TimingRow> rows;
    std::uint64_t shape_idx = 0;
    for (const auto& shape : spec.shapes) {
        ++shape_idx;
        std::uint64_t n_idx = 0;
        for (int n : spec.block_sizes) {
            ++n_idx;
            const auto wseed = point_seed(spec.seed, shape_idx, n_idx, 0);
            const WeightTensor w = gen_tensor(shape[0], shape[1], 1, 1, wseed, Dist::gaussian);
            ScoreArray s;
            try {
                s = score_blocks(w, n);
            } catch (const std::exception&) {
                continue;
            }
            for (double p : spec.sparsities) {
                const int m = blocks_for_sparsity(s.candidates(), n, p);
                for (Method method : spec.methods) {
                    if (method == Method::ep) continue; // block-selection timing only
                    TimingRow row{s.candidates(), shape[0], shape[1], n, p, m,
                                  method, spec.repeats, 0.0, "ok"};
                    std::vector<double> times;
                    times.reserve(spec.repeats);
                    try {
                        for (int rep = 0; rep < spec.repeats; ++rep) {
                            const auto t0 = Clock::now();
                            switch (method) {
                                case Method::greedy: select_greedy(s, m); break;
                                case Method::bed: select_bed(s, m); break;
                                case Method::optimal: {
                                    if (!select_optimal_budgeted(s, m, spec.dp_timeout_s))
                                        row.status = "timeout";
                                    break;
                                }
                                case Method::abp: select_abp(s, m); break;
                                case Method::ep: break;
                            }
                            times.push_back(seconds_since(t0));
                            if (row.status == "timeout") break;
                        }
                    } catch (const InfeasibleError&) {
                        row.status = "infeasible";
                    }
                    if (row.status == "ok") row.median_seconds = median(times);
                    rows.push_back(row);
                }
            }
        }
    }
    return rows;
}

std::string to_csv(const std::vector<EfficacyRow>& rows) {
    std::ostringstream os;
    os << "c_out,c_in,kh,kw,n,sparsity,method,status,kept_score,efficacy,select_seconds\n";
    for (const auto& r : rows) {
        os << r.c_out << ',' << r.c_in << ',' << r.kh << ',' << r.kw << ',' << r.n << ','
           << fmt(r.sparsity) << ',' << method_name(r.method) << ',' << r.status << ','
           << fmt(r.kept) << ',' << fmt(r.efficacy_value) << ',' << fmt(r.select_seconds) << '\n';
    }
    return os.str();
}

std::string to_csv(const std::vector<KernelRow>& rows) {
    std::ostringstream os;
    os << "c_out,c_in,cols,n,sparsity,dataflow,threads,nr,repeats,median_seconds,gflops,"
          "register_copies,epilogue_stores,correct\n";
    for (const auto& r : rows) {
        os << r.c_out << ',' << r.c_in << ',' << r.cols << ',' << r.n << ',' << fmt(r.sparsity) << ','
           << dataflow_name(r.dataflow) << ',' << r.threads << ',' << r.nr << ',' << r.repeats << ','
           << fmt(r.median_seconds) << ',' << fmt(r.gflops) << ',' << r.register_copies << ','
           << r.epilogue_stores << ',' << (r.correct ? 1 : 0) << '\n';
    }
    return os.str();
}

std::string to_csv(const std::vector<TimingRow>& rows) {
    std::ostringstream os;
    os << "b,c_out,c_in,n,sparsity,m,method,repeats,median_seconds,status\n";
    for (const auto& r : rows) {
        os << r.b << ',' << r.c_out << ',' << r.c_in << ',' << r.n << ',' << fmt(r.sparsity) << ','
           << r.m << ',' << method_name(r.method) << ',' << r.repeats << ',' << fmt(r.median_seconds)
           << ',' << r.status << '\n';
    }
    return os.str();
}

} // namespace ubp
