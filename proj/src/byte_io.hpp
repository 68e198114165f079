#pragma once

// Little-endian byte stream helpers shared by the .ubpt and .ubps codecs.

#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "ubp/tensor_io.hpp"

namespace ubp::detail {

inline std::vector<std::uint8_t> read_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoError(IoError::Kind::open_failed, "cannot open " + path);
    f.seekg(0, std::ios::end);
    auto size = static_cast<std::size_t>(f.tellg());
    f.seekg(0, std::ios::beg);
    std::vector<std::uint8_t> bytes(size);
    if (size > 0) f.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(size));
    if (!f) throw IoError(IoError::Kind::open_failed, "cannot read " + path);
    return bytes;
}

inline void write_file(const std::string& path, const std::vector<std::uint8_t>& bytes) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw IoError(IoError::Kind::write_failed, "cannot open " + path + " for writing");
    f.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    f.flush();
    if (!f) throw IoError(IoError::Kind::write_failed, "short write to " + path);
}

class Reader {
public:
    Reader(const std::vector<std::uint8_t>& bytes, std::string name)
        : bytes_(bytes), name_(std::move(name)) {}

    std::uint32_t u32() {
        if (pos_ + 4 > bytes_.size())
            throw IoError(IoError::Kind::truncated, name_ + ": truncated at byte " + std::to_string(pos_));
        std::uint32_t v = static_cast<std::uint32_t>(bytes_[pos_]) |
                          static_cast<std::uint32_t>(bytes_[pos_ + 1]) << 8 |
                          static_cast<std::uint32_t>(bytes_[pos_ + 2]) << 16 |
                          static_cast<std::uint32_t>(bytes_[pos_ + 3]) << 24;
        pos_ += 4;
        return v;
    }
    float f32() {
        std::uint32_t v = u32();
        float out;
        std::memcpy(&out, &v, 4);
        return out;
    }
    void expect_magic(const char magic[4]) {
        if (pos_ + 4 > bytes_.size() || std::memcmp(bytes_.data() + pos_, magic, 4) != 0)
            throw IoError(IoError::Kind::bad_magic, name_ + ": bad magic");
        pos_ += 4;
    }
    bool exhausted() const { return pos_ == bytes_.size(); }
    std::size_t remaining() const { return bytes_.size() - pos_; }
    const std::string& name() const { return name_; }

private:
    const std::vector<std::uint8_t>& bytes_;
    std::string name_;
    std::size_t pos_ = 0;
};

class Writer {
public:
    void u32(std::uint32_t v) {
        bytes_.push_back(static_cast<std::uint8_t>(v));
        bytes_.push_back(static_cast<std::uint8_t>(v >> 8));
        bytes_.push_back(static_cast<std::uint8_t>(v >> 16));
        bytes_.push_back(static_cast<std::uint8_t>(v >> 24));
    }
    void f32(float f) {
        std::uint32_t v;
        std::memcpy(&v, &f, 4);
        u32(v);
    }
    void magic(const char m[4]) {
        bytes_.insert(bytes_.end(), m, m + 4);
    }
    const std::vector<std::uint8_t>& bytes() const { return bytes_; }

private:
    std::vector<std::uint8_t> bytes_;
};

} // namespace ubp::detail
