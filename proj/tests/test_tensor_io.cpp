#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "ubp/tensor.hpp"
#include "ubp/tensor_io.hpp"

using namespace ubp;

namespace {

std::string temp_path(const std::string& name) {
    return (std::filesystem::temp_directory_path() / name).string();
}

std::vector<std::uint8_t> slurp(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    REQUIRE(f.good());
    return {std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()};
}

} // namespace

TEST_CASE("weight layout: element (i,j,y,x) at ((i*c_in+j)*kh+y)*kw+x") {
    WeightTensor w(2, 2, 1, 1);
    w.data = {1, 2, 3, 4};
    CHECK(w.at(1, 0, 0, 0) == 3.0f);
    CHECK(w.at(0, 1, 0, 0) == 2.0f);

    const std::string path = temp_path("ubp_layout.ubpt");
    store_tensor(w, path);
    WeightTensor back = load_weights(path);
    CHECK(back.at(1, 0, 0, 0) == 3.0f);
    std::remove(path.c_str());
}

TEST_CASE("zero dimension rejected") {
    CHECK_THROWS_AS(WeightTensor(0, 2, 1, 1), std::invalid_argument);

    // A file claiming a zero dim must decode to a dimension error, distinctly.
    const std::string path = temp_path("ubp_zerodim.ubpt");
    WeightTensor w(1, 1, 1, 1);
    store_tensor(w, path);
    auto bytes = slurp(path);
    bytes[12] = 0; // first dim
    std::ofstream(path, std::ios::binary)
        .write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    try {
        load_tensor(path);
        FAIL("expected IoError");
    } catch (const IoError& e) {
        CHECK(e.kind() == IoError::Kind::bad_header);
    }
    std::remove(path.c_str());
}

TEST_CASE("bad magic and truncation reported distinctly") {
    const std::string path = temp_path("ubp_corrupt.ubpt");
    store_tensor(gen_tensor(3, 2, 1, 1, 7, Dist::uniform), path);

    auto bytes = slurp(path);
    SUBCASE("magic") {
        bytes[0] = 'X';
        std::ofstream(path, std::ios::binary)
            .write(reinterpret_cast<const char*>(bytes.data()),
                   static_cast<std::streamsize>(bytes.size()));
        try {
            load_tensor(path);
            FAIL("expected IoError");
        } catch (const IoError& e) {
            CHECK(e.kind() == IoError::Kind::bad_magic);
        }
    }
    SUBCASE("truncated payload") {
        bytes.resize(bytes.size() - 5);
        std::ofstream(path, std::ios::binary | std::ios::trunc)
            .write(reinterpret_cast<const char*>(bytes.data()),
                   static_cast<std::streamsize>(bytes.size()));
        try {
            load_tensor(path);
            FAIL("expected IoError");
        } catch (const IoError& e) {
            CHECK(e.kind() == IoError::Kind::truncated);
        }
    }
    std::remove(path.c_str());
}

TEST_CASE("store/load round trip is byte- and value-exact") {
    const std::string path = temp_path("ubp_roundtrip.ubpt");
    const std::string path2 = temp_path("ubp_roundtrip2.ubpt");
    WeightTensor w = gen_tensor(5, 3, 2, 2, 42, Dist::gaussian);
    store_tensor(w, path);
    WeightTensor back = load_weights(path);
    CHECK(back.data == w.data);
    store_tensor(back, path2);
    CHECK(slurp(path) == slurp(path2));

    ActivationMatrix m = gen_matrix(4, 9, 11, Dist::uniform);
    store_tensor(m, path);
    ActivationMatrix mback = load_activations(path);
    CHECK(mback.rows == 4);
    CHECK(mback.cols == 9);
    CHECK(mback.data == m.data);

    std::remove(path.c_str());
    std::remove(path2.c_str());
}

TEST_CASE("8x1x1x1 store yields header plus 32 payload bytes") {
    const std::string path = temp_path("ubp_size.ubpt");
    store_tensor(gen_tensor(8, 1, 1, 1, 0, Dist::uniform), path);
    // magic(4) + version(4) + ndim(4) + dims(16) + dtype(4) = 32 header bytes
    CHECK(slurp(path).size() == 32 + 32);
    std::remove(path.c_str());
}

TEST_CASE("store to unwritable path raises an I/O error") {
    WeightTensor w(1, 1, 1, 1);
    try {
        store_tensor(w, "/nonexistent-dir/never/x.ubpt");
        FAIL("expected IoError");
    } catch (const IoError& e) {
        CHECK(e.kind() == IoError::Kind::write_failed);
    }
}

TEST_CASE("gen_tensor is a pure function of its arguments") {
    WeightTensor a = gen_tensor(4, 3, 2, 1, 9, Dist::gaussian);
    WeightTensor b = gen_tensor(4, 3, 2, 1, 9, Dist::gaussian);
    CHECK(a.data == b.data);

    WeightTensor c = gen_tensor(4, 3, 2, 1, 10, Dist::gaussian);
    CHECK(a.data != c.data);

    WeightTensor u = gen_tensor(6, 6, 1, 1, 1, Dist::uniform);
    double l1 = 0.0;
    for (float v : u.data) {
        CHECK(v >= -1.0f);
        CHECK(v < 1.0f);
        l1 += std::abs(v);
    }
    CHECK(l1 > 0.0);
}
