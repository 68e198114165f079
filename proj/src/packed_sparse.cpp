#include "ubp/packed_sparse.hpp"

#include <algorithm>
#include <stdexcept>

#include "byte_io.hpp"

namespace ubp {

const char* dataflow_name(Dataflow d) {
    switch (d) {
        case Dataflow::aligned: return "aligned";
        case Dataflow::unaligned_naive: return "naive";
        case Dataflow::unaligned_wros: return "wros";
    }
    return "?";
}

PackedSparse pack(const WeightTensor& w, const BlockSelection& sel, Dataflow dataflow) {
    w.check();
    sel.check();
    if (sel.c_out != w.c_out || sel.c_in != w.c_in)
        throw std::invalid_argument("pack: selection dimensions do not match tensor");

    PackedSparse p;
    p.c_out = w.c_out;
    p.c_in = w.c_in;
    p.kh = w.kh;
    p.kw = w.kw;
    p.n = sel.n;
    p.dataflow = dataflow;

    // Bucket blocks by start row; within a row sort by input channel.
    std::vector<std::vector<int>> rows(w.c_out);
    for (int k : sel.starts) {
        const int i = k % w.c_out;
        const int j = k / w.c_out;
        if (dataflow == Dataflow::aligned && i % sel.n != 0)
            throw std::invalid_argument("pack: aligned dataflow but start row " + std::to_string(i) +
                                        " is not a multiple of n");
        rows[i].push_back(j);
    }

    const std::size_t nrows = p.indptr_rows();
    const int kernel_elems = w.kh * w.kw;
    p.indptr.assign(nrows + 1, 0);
    for (std::size_t r = 0; r < nrows; ++r) {
        const int t = p.row_start(r);
        auto& cols = rows[t];
        std::sort(cols.begin(), cols.end());
        p.indptr[r + 1] = p.indptr[r] + static_cast<std::uint32_t>(cols.size());
        for (int j : cols) {
            p.indices.push_back(static_cast<std::uint32_t>(j));
            const std::size_t base = p.data.size();
            p.data.resize(base + static_cast<std::size_t>(p.block_elems()));
            for (int d = 0; d < sel.n; ++d) {
                const int channel = t + d;
                // WROS pre-rotates each block so channel i lands in slot i mod n;
                // the other tags keep natural order.
                const int slot = dataflow == Dataflow::unaligned_wros ? channel % sel.n : d;
                const float* src = w.data.data() + w.offset(channel, j, 0, 0);
                std::copy(src, src + kernel_elems, p.data.begin() + base + slot * kernel_elems);
            }
        }
    }
    return p;
}

WeightTensor densify(const PackedSparse& p) {
    auto problems = validate(p);
    if (!problems.empty())
        throw std::invalid_argument("densify: malformed PackedSparse: " + problems.front());

    WeightTensor w(p.c_out, p.c_in, p.kh, p.kw);
    const int kernel_elems = p.kh * p.kw;
    const std::size_t nrows = p.indptr_rows();
    for (std::size_t r = 0; r < nrows; ++r) {
        const int t = p.row_start(r);
        for (std::uint32_t b = p.indptr[r]; b < p.indptr[r + 1]; ++b) {
            const int j = static_cast<int>(p.indices[b]);
            const float* block = p.data.data() + static_cast<std::size_t>(b) * p.block_elems();
            for (int d = 0; d < p.n; ++d) {
                const int channel = t + d;
                const int slot = p.dataflow == Dataflow::unaligned_wros ? channel % p.n : d;
                std::copy(block + slot * kernel_elems, block + (slot + 1) * kernel_elems,
                          w.data.begin() + w.offset(channel, j, 0, 0));
            }
        }
    }
    return w;
}

std::vector<std::string> validate(const PackedSparse& p) {
    std::vector<std::string> out;
    if (p.c_out < 1 || p.c_in < 1 || p.kh < 1 || p.kw < 1 || p.n < 1) {
        out.push_back("non-positive dimension");
        return out;
    }
    const std::size_t nrows = p.indptr_rows();
    if (p.indptr.size() != nrows + 1) {
        out.push_back("indptr length " + std::to_string(p.indptr.size()) + ", expected " +
                      std::to_string(nrows + 1));
        return out;
    }
    if (p.indptr.front() != 0) out.push_back("indptr[0] != 0");
    for (std::size_t r = 0; r + 1 < p.indptr.size(); ++r) {
        if (p.indptr[r + 1] < p.indptr[r]) {
            out.push_back("indptr decreases at row " + std::to_string(r));
            return out;
        }
    }
    if (p.indptr.back() != p.indices.size())
        out.push_back("indptr tail " + std::to_string(p.indptr.back()) + " != block count " +
                      std::to_string(p.indices.size()));
    if (p.data.size() != p.indices.size() * static_cast<std::size_t>(p.block_elems()))
        out.push_back("data length does not match block count");

    // Per-row checks: indices in range and strictly increasing; start rows in
    // bounds for the dataflow.
    for (std::size_t r = 0; r < nrows && p.indptr.back() == p.indices.size(); ++r) {
        const int t = p.row_start(r);
        if (p.indptr[r + 1] > p.indptr[r] && t + p.n > p.c_out)
            out.push_back("blocks in structurally-empty start row " + std::to_string(t));
        for (std::uint32_t b = p.indptr[r]; b < p.indptr[r + 1]; ++b) {
            if (p.indices[b] >= static_cast<std::uint32_t>(p.c_in)) {
                out.push_back("input-channel index " + std::to_string(p.indices[b]) + " out of range");
                continue;
            }
            if (b > p.indptr[r] && p.indices[b] <= p.indices[b - 1])
                out.push_back("indices not strictly increasing in start row " + std::to_string(t));
        }
    }

    // Cross-row overlap: within one input column, any two start rows must be
    // at least n apart.
    if (p.indptr.back() == p.indices.size()) {
        std::vector<std::vector<int>> col_rows(p.c_in);
        for (std::size_t r = 0; r < nrows; ++r) {
            for (std::uint32_t b = p.indptr[r]; b < p.indptr[r + 1]; ++b) {
                if (p.indices[b] < static_cast<std::uint32_t>(p.c_in))
                    col_rows[p.indices[b]].push_back(p.row_start(r));
            }
        }
        for (int j = 0; j < p.c_in; ++j) {
            auto& rows = col_rows[j];
            std::sort(rows.begin(), rows.end());
            for (std::size_t q = 1; q < rows.size(); ++q) {
                if (rows[q] - rows[q - 1] < p.n)
                    out.push_back("blocks at rows " + std::to_string(rows[q - 1]) + " and " +
                                  std::to_string(rows[q]) + " overlap in column " + std::to_string(j));
            }
        }
    }
    return out;
}

namespace {
constexpr char kMagic[4] = {'U', 'B', 'P', 'S'};
constexpr std::uint32_t kVersion = 1;
} // namespace

void store_packed(const PackedSparse& p, const std::string& path) {
    auto problems = validate(p);
    if (!problems.empty())
        throw std::invalid_argument("store_packed: refusing to store malformed pack: " + problems.front());
    detail::Writer w;
    w.magic(kMagic);
    w.u32(kVersion);
    w.u32(static_cast<std::uint32_t>(p.c_out));
    w.u32(static_cast<std::uint32_t>(p.c_in));
    w.u32(static_cast<std::uint32_t>(p.kh));
    w.u32(static_cast<std::uint32_t>(p.kw));
    w.u32(static_cast<std::uint32_t>(p.n));
    w.u32(static_cast<std::uint32_t>(p.dataflow));
    w.u32(static_cast<std::uint32_t>(p.block_count()));
    for (auto v : p.indptr) w.u32(v);
    for (auto v : p.indices) w.u32(v);
    for (auto v : p.data) w.f32(v);
    detail::write_file(path, w.bytes());
}

PackedSparse load_packed(const std::string& path) {
    auto bytes = detail::read_file(path);
    detail::Reader r(bytes, path);
    r.expect_magic(kMagic);
    if (r.u32() != kVersion) throw IoError(IoError::Kind::bad_version, path + ": unsupported version");

    PackedSparse p;
    p.c_out = static_cast<int>(r.u32());
    p.c_in = static_cast<int>(r.u32());
    p.kh = static_cast<int>(r.u32());
    p.kw = static_cast<int>(r.u32());
    p.n = static_cast<int>(r.u32());
    std::uint32_t df = r.u32();
    if (df > 2) throw IoError(IoError::Kind::bad_header, path + ": unknown dataflow tag");
    p.dataflow = static_cast<Dataflow>(df);
    if (p.c_out < 1 || p.c_in < 1 || p.kh < 1 || p.kw < 1 || p.n < 1 || p.n > p.c_out)
        throw IoError(IoError::Kind::bad_header, path + ": bad dimensions");
    const std::uint32_t blocks = r.u32();

    const std::size_t nrows = p.indptr_rows();
    const std::size_t expect =
        (nrows + 1 + blocks) * 4 + static_cast<std::size_t>(blocks) * p.block_elems() * 4;
    if (r.remaining() != expect)
        throw IoError(IoError::Kind::truncated, path + ": body holds " + std::to_string(r.remaining()) +
                                                    " bytes, header requires " + std::to_string(expect));

    p.indptr.resize(nrows + 1);
    for (auto& v : p.indptr) v = r.u32();
    p.indices.resize(blocks);
    for (auto& v : p.indices) v = r.u32();
    p.data.resize(static_cast<std::size_t>(blocks) * p.block_elems());
    for (auto& v : p.data) v = r.f32();

    auto problems = validate(p);
    if (!problems.empty())
        throw IoError(IoError::Kind::bad_header, path + ": invalid pack: " + problems.front());
    return p;
}

} // namespace ubp
