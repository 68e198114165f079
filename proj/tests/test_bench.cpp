#include <doctest.h>

#include <algorithm>

#include "ubp/bench.hpp"

using namespace ubp;

namespace {

SweepSpec worked_layer_spec() {
    SweepSpec spec;
    spec.shapes = {{8, 1, 4}};
    spec.block_sizes = {2};
    spec.sparsities = {0.25};
    spec.methods = {Method::greedy, Method::bed, Method::optimal, Method::abp, Method::ep};
    spec.repeats = 1;
    return spec;
}

const EfficacyRow* find_row(const std::vector<EfficacyRow>& rows, Method m) {
    for (const auto& r : rows)
        if (r.method == m) return &r;
    return nullptr;
}

} // namespace

TEST_CASE("sweep_efficacy covers methods with efficacy and timings") {
    auto rows = sweep_efficacy(worked_layer_spec());
    REQUIRE(rows.size() == 5);
    for (const auto& r : rows) {
        CHECK(r.status == "ok");
        CHECK(r.select_seconds >= 0.0);
    }
    // Random gaussian layer: definitional endpoints hold whatever the draw.
    CHECK(find_row(rows, Method::abp)->efficacy_value == doctest::Approx(0.0));
    CHECK(find_row(rows, Method::ep)->efficacy_value == doctest::Approx(1.0));
    const double opt = find_row(rows, Method::optimal)->efficacy_value;
    CHECK(find_row(rows, Method::greedy)->efficacy_value <= opt);
    CHECK(find_row(rows, Method::bed)->efficacy_value <= opt);
}

TEST_CASE("dp timeout budget 0 marks optimal rows as timeout") {
    SweepSpec spec = worked_layer_spec();
    spec.methods = {Method::optimal};
    spec.dp_timeout_s = 0.0;
    auto rows = sweep_efficacy(spec);
    REQUIRE(rows.size() == 1);
    CHECK(rows[0].status == "timeout");
}

TEST_CASE("sweeps with one seed reproduce all non-timing fields") {
    SweepSpec spec;
    spec.shapes = {{16, 8, 12}, {8, 4, 5}};
    spec.block_sizes = {2, 4};
    spec.sparsities = {0.5, 0.75};
    spec.methods = {Method::greedy, Method::bed};
    spec.seed = 99;
    auto a = sweep_efficacy(spec);
    auto b = sweep_efficacy(spec);
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].kept == b[i].kept);
        CHECK(a[i].efficacy_value == b[i].efficacy_value);
        CHECK(a[i].status == b[i].status);
    }
}

TEST_CASE("sweep_kernels rows carry the dataflow accounting") {
    SweepSpec spec;
    spec.shapes = {{16, 16, 9}};
    spec.block_sizes = {4};
    spec.sparsities = {0.5};
    spec.kernels = {Dataflow::aligned, Dataflow::unaligned_naive, Dataflow::unaligned_wros};
    spec.repeats = 3;
    auto rows = sweep_kernels(spec);
    REQUIRE(rows.size() == 3);
    for (const auto& r : rows) {
        CHECK(r.correct);
        CHECK(r.median_seconds > 0.0);
        CHECK(r.gflops > 0.0);
        if (r.dataflow == Dataflow::unaligned_wros || r.dataflow == Dataflow::aligned)
            CHECK(r.register_copies == 0);
        if (r.dataflow == Dataflow::unaligned_naive)
            CHECK(r.register_copies > 0); // unaligned blocks exist and N > 1
    }
}

TEST_CASE("selection timing sweep: sane bounds and ordering at small scale") {
    SweepSpec spec;
    spec.shapes = {{64, 64, 1}};
    spec.block_sizes = {4};
    spec.sparsities = {0.999}; // m = 1
    spec.methods = {Method::greedy, Method::bed, Method::optimal};
    spec.repeats = 5;
    auto rows = sweep_selection_timing(spec);
    REQUIRE(rows.size() == 3);
    for (const auto& r : rows) {
        CHECK(r.m == 1);
        CHECK(r.status == "ok");
        CHECK(r.median_seconds < 1e-3); // sub-millisecond at b = 4096, m = 1
    }
}

TEST_CASE("csv emitters: one self-describing row per point") {
    auto rows = sweep_efficacy(worked_layer_spec());
    const std::string csv = to_csv(rows);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 1 + static_cast<long>(rows.size()));
    CHECK(csv.rfind("c_out,c_in,kh,kw,n,sparsity,method,status", 0) == 0);
    CHECK(csv.find("greedy") != std::string::npos);
    CHECK(csv.find("optimal") != std::string::npos);
}

TEST_CASE("mobilenet preset shapes") {
    SweepSpec spec = mobilenet_v1_preset();
    REQUIRE(spec.shapes.size() == 5);
    CHECK(spec.shapes.front()[0] == 64);
    CHECK(spec.shapes.back()[0] == 1024);
    for (const auto& s : spec.shapes) CHECK(s[2] == 196);
    CHECK_NOTHROW(spec.check());
}
