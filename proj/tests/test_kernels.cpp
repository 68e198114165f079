#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "ubp/kernels.hpp"
#include "ubp/packed_sparse.hpp"
#include "ubp/selection.hpp"

using namespace ubp;

namespace {

// W = [[0,1],[2,4],[3,0],[0,0]] as a 4x2 1x1-conv layer; the dense product
// with I = [[1,2],[3,4]] is [[3,4],[14,20],[3,6],[0,0]].
WeightTensor example_weights() {
    WeightTensor w(4, 2, 1, 1);
    w.data = {0, 1, 2, 4, 3, 0, 0, 0};
    return w;
}

ActivationMatrix example_input() {
    ActivationMatrix in(2, 2);
    in.data = {1, 2, 3, 4};
    return in;
}

const BlockSelection example_selection{4, 2, 2, {1, 4}}; // (i=1,j=0) and (i=0,j=1)

std::uint64_t expected_tiles(int cols, int nr, int threads) {
    std::uint64_t tiles = 0;
    for (auto [b, e] : partition_columns(cols, threads))
        tiles += static_cast<std::uint64_t>((e - b + nr - 1) / nr);
    return tiles;
}

// Mask applied by hand, independent of pack/densify.
WeightTensor apply_mask(const WeightTensor& w, const BlockSelection& sel) {
    WeightTensor out(w.c_out, w.c_in, w.kh, w.kw);
    const auto mask = sel.kernel_mask();
    for (int i = 0; i < w.c_out; ++i)
        for (int j = 0; j < w.c_in; ++j)
            if (mask[static_cast<std::size_t>(j) * w.c_out + i])
                out.data[w.offset(i, j, 0, 0)] = w.data[w.offset(i, j, 0, 0)];
    return out;
}

} // namespace

TEST_CASE("dense_ref: hand-computed product, identity and zero weights") {
    ActivationMatrix out = dense_ref(example_weights(), example_input());
    CHECK(out.data == std::vector<float>{3, 4, 14, 20, 3, 6, 0, 0});

    WeightTensor eye(3, 3, 1, 1);
    for (int i = 0; i < 3; ++i) eye.at(i, i, 0, 0) = 1.0f;
    ActivationMatrix in = gen_matrix(3, 5, 4, Dist::uniform);
    CHECK(dense_ref(eye, in).data == in.data);

    WeightTensor zero(3, 3, 1, 1);
    for (float v : dense_ref(zero, in).data) CHECK(v == 0.0f);

    WeightTensor bad(3, 4, 1, 1);
    CHECK_THROWS_AS(dense_ref(bad, in), std::invalid_argument);
}

TEST_CASE("dense_ref agrees with the independent triple-loop oracle") {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        WeightTensor w = testing::random_layer(9, 7, 40 + seed);
        ActivationMatrix in = gen_matrix(7, 13, 50 + seed, Dist::uniform);
        CHECK(normalized_max_diff(dense_ref(w, in), testing::oracle_matmul(w, in)) <= 1e-6);
    }
}

TEST_CASE("worked 4x2 example: naive and wros match the dense product exactly") {
    const WeightTensor w = example_weights();
    const ActivationMatrix in = example_input();
    TileConfig cfg;

    PackedSparse naive = pack(w, example_selection, Dataflow::unaligned_naive);
    KernelReport rn = spmm_ubp_naive(naive, in, cfg);
    CHECK(rn.output.data == std::vector<float>{3, 4, 14, 20, 3, 6, 0, 0});

    PackedSparse wros = pack(w, example_selection, Dataflow::unaligned_wros);
    KernelReport rw = spmm_ubp_wros(wros, in, cfg);
    CHECK(rw.output.data == rn.output.data);
    CHECK(rw.register_copies == 0);

    // Unaligned start 1 cannot be packed aligned.
    CHECK_THROWS_AS(pack(w, example_selection, Dataflow::aligned), std::invalid_argument);
    // Kernels reject a mismatched tag.
    CHECK_THROWS_AS(spmm_ubp_wros(naive, in, cfg), std::invalid_argument);
    CHECK_THROWS_AS(spmm_abp(naive, in, cfg), std::invalid_argument);
}

TEST_CASE("ABP kernel: dense-oracle agreement, zero counters, ragged tiles") {
    WeightTensor w = testing::random_layer(8, 6, 60);
    ScoreArray s = score_blocks(w, 4);
    BlockSelection sel = select_abp(s, 6);
    PackedSparse p = pack(w, sel, Dataflow::aligned);

    for (int cols : {1, 3, 16}) {
        ActivationMatrix in = gen_matrix(6, cols, 61, Dist::uniform);
        TileConfig cfg;
        cfg.nr = 4; // nr > cols exercises the ragged path when cols < 4
        KernelReport rep = spmm_abp(p, in, cfg);
        CHECK(normalized_max_diff(rep.output, dense_ref(densify(p), in)) <= 1e-5);
        CHECK(rep.register_copies == 0);
        CHECK(rep.epilogue_stores == 0);
    }

    // Empty pack: zero output, zero counters.
    BlockSelection empty{8, 6, 4, {}};
    ActivationMatrix ein = gen_matrix(6, 4, 62, Dist::uniform);
    KernelReport rep = spmm_abp(pack(w, empty, Dataflow::aligned), ein, TileConfig{});
    for (float v : rep.output.data) CHECK(v == 0.0f);
    CHECK(rep.register_copies == 0);
    CHECK(rep.epilogue_stores == 0);
}

TEST_CASE("naive kernel: register copies match the closed form exactly") {
    WeightTensor w = testing::random_layer(12, 4, 70);
    ScoreArray s = score_blocks(w, 4);
    BlockSelection sel = select_bed(s, blocks_for_sparsity(s.candidates(), 4, 0.5));
    PackedSparse p = pack(w, sel, Dataflow::unaligned_naive);

    for (int cols : {1, 7, 24}) {
        for (int threads : {1, 3}) {
            ActivationMatrix in = gen_matrix(4, cols, 71, Dist::uniform);
            TileConfig cfg;
            cfg.nr = 4;
            cfg.threads = threads;
            KernelReport rep = spmm_ubp_naive(p, in, cfg);
            const std::uint64_t tiles = expected_tiles(cols, cfg.nr, threads);
            CHECK(rep.column_tiles == tiles);
            CHECK(rep.register_copies == static_cast<std::uint64_t>(4 - 1) * (12 - 4) * tiles);
            CHECK(rep.epilogue_stores == static_cast<std::uint64_t>(4 - 1) * tiles);
            CHECK(normalized_max_diff(rep.output, dense_ref(densify(p), in)) <= 1e-5);
        }
    }
}

TEST_CASE("naive kernel with N=1 degenerates to an element-wise kernel") {
    WeightTensor w = testing::random_layer(6, 5, 80);
    ScoreArray s = score_blocks(w, 1);
    BlockSelection sel = select_greedy(s, 15);
    PackedSparse p = pack(w, sel, Dataflow::unaligned_naive);
    ActivationMatrix in = gen_matrix(5, 9, 81, Dist::uniform);
    KernelReport rep = spmm_ubp_naive(p, in, TileConfig{});
    CHECK(rep.register_copies == 0);
    CHECK(rep.epilogue_stores == 0);
    CHECK(normalized_max_diff(rep.output, dense_ref(densify(p), in)) <= 1e-5);
}

TEST_CASE("wros kernel: zero copies always, epilogue is (N-1) per strip") {
    WeightTensor w = testing::random_layer(16, 8, 90);
    ScoreArray s = score_blocks(w, 4);
    BlockSelection sel = select_bed(s, blocks_for_sparsity(s.candidates(), 4, 0.75));
    PackedSparse p = pack(w, sel, Dataflow::unaligned_wros);

    for (int cols : {1, 5, 32}) {
        for (int threads : {1, 4}) {
            ActivationMatrix in = gen_matrix(8, cols, 91, Dist::uniform);
            TileConfig cfg;
            cfg.threads = threads;
            KernelReport rep = spmm_ubp_wros(p, in, cfg);
            CHECK(rep.register_copies == 0);
            CHECK(rep.epilogue_stores ==
                  static_cast<std::uint64_t>(4 - 1) * expected_tiles(cols, cfg.nr, threads));
            CHECK(normalized_max_diff(rep.output, dense_ref(densify(p), in)) <= 1e-5);
        }
    }
}

TEST_CASE("threading: outputs bit-identical across worker counts") {
    WeightTensor w = testing::random_layer(24, 16, 100);
    ScoreArray s = score_blocks(w, 4);
    BlockSelection sel = select_bed(s, blocks_for_sparsity(s.candidates(), 4, 0.6));
    ActivationMatrix in = gen_matrix(16, 19, 101, Dist::uniform);

    for (Dataflow df : {Dataflow::unaligned_naive, Dataflow::unaligned_wros}) {
        PackedSparse p = pack(w, sel, df);
        TileConfig cfg;
        KernelReport one = spmm(p, in, cfg);
        cfg.threads = 4;
        KernelReport four = spmm(p, in, cfg);
        CHECK(one.output.data == four.output.data); // bit-exact

        cfg.threads = 64; // parts > cols: degenerate empty partitions
        KernelReport many = spmm(p, in, cfg);
        CHECK(many.output.data == one.output.data);
    }
}

TEST_CASE("counters sum over workers") {
    WeightTensor w = testing::random_layer(8, 4, 110);
    ScoreArray s = score_blocks(w, 2);
    BlockSelection sel = select_bed(s, blocks_for_sparsity(s.candidates(), 2, 0.5));
    PackedSparse p = pack(w, sel, Dataflow::unaligned_naive);
    ActivationMatrix in = gen_matrix(4, 12, 111, Dist::uniform);

    TileConfig cfg;
    cfg.threads = 3;
    KernelReport whole = spmm_ubp_naive(p, in, cfg);

    std::uint64_t copies = 0, epilogue = 0;
    for (auto [b, e] : partition_columns(in.cols, 3)) {
        ActivationMatrix slice(4, e - b);
        for (int r = 0; r < 4; ++r)
            for (int c = b; c < e; ++c) slice.at(r, c - b) = in.at(r, c);
        KernelReport part = spmm_ubp_naive(p, slice, TileConfig{});
        copies += part.register_copies;
        epilogue += part.epilogue_stores;
    }
    CHECK(whole.register_copies == copies);
    CHECK(whole.epilogue_stores == epilogue);
}

TEST_CASE("cross-kernel equivalence on random instances") {
    for (std::uint64_t seed = 0; seed < 12; ++seed) {
        const int n = seed % 2 == 0 ? 2 : 4;
        const int c_out = n * (2 + static_cast<int>(seed % 3));
        const int c_in = 3 + static_cast<int>(seed % 5);
        WeightTensor w = testing::random_layer(c_out, c_in, 200 + seed);
        ActivationMatrix in = gen_matrix(c_in, 6 + static_cast<int>(seed % 9), 300 + seed,
                                         Dist::uniform);
        ScoreArray s = score_blocks(w, n);
        const int m = blocks_for_sparsity(s.candidates(), n, 0.5);

        BlockSelection ubp_sel = select_bed(s, m);
        KernelReport naive =
            spmm_ubp_naive(pack(w, ubp_sel, Dataflow::unaligned_naive), in, TileConfig{});
        KernelReport wros =
            spmm_ubp_wros(pack(w, ubp_sel, Dataflow::unaligned_wros), in, TileConfig{});
        ActivationMatrix ref = dense_ref(apply_mask(w, ubp_sel), in);
        CHECK(normalized_max_diff(naive.output, ref) <= 1e-5);
        CHECK(normalized_max_diff(wros.output, ref) <= 1e-5);
        CHECK(normalized_max_diff(wros.output, naive.output) <= 1e-5);

        BlockSelection abp_sel = select_abp(s, m);
        KernelReport abp = spmm_abp(pack(w, abp_sel, Dataflow::aligned), in, TileConfig{});
        CHECK(normalized_max_diff(abp.output, dense_ref(apply_mask(w, abp_sel), in)) <= 1e-5);
    }
}

TEST_CASE("alignment degeneracy: aligned selection through wros matches abp") {
    WeightTensor w = testing::random_layer(16, 6, 400);
    ScoreArray s = score_blocks(w, 4);
    BlockSelection sel = select_abp(s, 12);
    ActivationMatrix in = gen_matrix(6, 10, 401, Dist::uniform);

    PackedSparse wros = pack(w, sel, Dataflow::unaligned_wros);
    PackedSparse naive = pack(w, sel, Dataflow::unaligned_naive);
    CHECK(wros.data == naive.data); // zero rotations when all starts are multiples of N

    KernelReport rw = spmm_ubp_wros(wros, in, TileConfig{});
    KernelReport ra = spmm_abp(pack(w, sel, Dataflow::aligned), in, TileConfig{});
    CHECK(rw.output.data == ra.output.data);
    CHECK(rw.register_copies == 0);
}
