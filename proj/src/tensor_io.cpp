#include "ubp/tensor_io.hpp"

#include "byte_io.hpp"

namespace ubp {

namespace {

constexpr char kMagic[4] = {'U', 'B', 'P', 'T'};
constexpr std::uint32_t kVersion = 1;
constexpr std::uint32_t kDtypeF32 = 0;

void read_payload(detail::Reader& r, std::vector<float>& out, std::size_t count) {
    if (r.remaining() != count * 4)
        throw IoError(IoError::Kind::truncated,
                      r.name() + ": payload holds " + std::to_string(r.remaining() / 4) +
                          " floats, dims require " + std::to_string(count));
    out.resize(count);
    for (auto& v : out) v = r.f32();
}

} // namespace

Tensor load_tensor(const std::string& path) {
    auto bytes = detail::read_file(path);
    detail::Reader r(bytes, path);
    r.expect_magic(kMagic);
    if (r.u32() != kVersion) throw IoError(IoError::Kind::bad_version, path + ": unsupported version");
    std::uint32_t ndim = r.u32();
    if (ndim != 2 && ndim != 4)
        throw IoError(IoError::Kind::bad_header, path + ": ndim must be 2 or 4, got " + std::to_string(ndim));
    std::uint32_t dims[4] = {0, 0, 0, 0};
    std::size_t count = 1;
    for (std::uint32_t d = 0; d < ndim; ++d) {
        dims[d] = r.u32();
        if (dims[d] == 0)
            throw IoError(IoError::Kind::bad_header, path + ": dimension " + std::to_string(d) + " is zero");
        count *= dims[d];
    }
    if (r.u32() != kDtypeF32) throw IoError(IoError::Kind::bad_header, path + ": unsupported dtype");

    if (ndim == 4) {
        WeightTensor w;
        w.c_out = static_cast<int>(dims[0]);
        w.c_in = static_cast<int>(dims[1]);
        w.kh = static_cast<int>(dims[2]);
        w.kw = static_cast<int>(dims[3]);
        read_payload(r, w.data, count);
        w.check();
        return w;
    }
    ActivationMatrix m;
    m.rows = static_cast<int>(dims[0]);
    m.cols = static_cast<int>(dims[1]);
    read_payload(r, m.data, count);
    m.check();
    return m;
}

void store_tensor(const WeightTensor& t, const std::string& path) {
    t.check();
    detail::Writer w;
    w.magic(kMagic);
    w.u32(kVersion);
    w.u32(4);
    w.u32(static_cast<std::uint32_t>(t.c_out));
    w.u32(static_cast<std::uint32_t>(t.c_in));
    w.u32(static_cast<std::uint32_t>(t.kh));
    w.u32(static_cast<std::uint32_t>(t.kw));
    w.u32(kDtypeF32);
    for (float v : t.data) w.f32(v);
    detail::write_file(path, w.bytes());
}

void store_tensor(const ActivationMatrix& m, const std::string& path) {
    m.check();
    detail::Writer w;
    w.magic(kMagic);
    w.u32(kVersion);
    w.u32(2);
    w.u32(static_cast<std::uint32_t>(m.rows));
    w.u32(static_cast<std::uint32_t>(m.cols));
    w.u32(kDtypeF32);
    for (float v : m.data) w.f32(v);
    detail::write_file(path, w.bytes());
}

WeightTensor load_weights(const std::string& path) {
    Tensor t = load_tensor(path);
    if (auto* w = std::get_if<WeightTensor>(&t)) return std::move(*w);
    throw IoError(IoError::Kind::bad_header, path + ": expected a 4-D weight tensor");
}

ActivationMatrix load_activations(const std::string& path) {
    Tensor t = load_tensor(path);
    if (auto* m = std::get_if<ActivationMatrix>(&t)) return std::move(*m);
    throw IoError(IoError::Kind::bad_header, path + ": expected a 2-D activation matrix");
}

} // namespace ubp
