#pragma once

#include <stdexcept>
#include <string>
#include <variant>

#include "ubp/tensor.hpp"

namespace ubp {

/// Errors raised by container decode/encode, with a distinct kind per failure.
class IoError : public std::runtime_error {
public:
    enum class Kind {
        open_failed,
        bad_magic,
        bad_version,
        bad_header,   // dimension or dtype field invalid
        truncated,    // payload shorter than the header promises
        write_failed,
    };

    IoError(Kind k, const std::string& msg) : std::runtime_error(msg), kind_(k) {}
    Kind kind() const { return kind_; }

private:
    Kind kind_;
};

/// One container (.ubpt) for both tensor kinds, distinguished by ndim (4 or 2).
/// Layout: magic "UBPT", version u32=1, ndim u32, dims u32*ndim, dtype u32 (0 =
/// float32), then the row-major float32 payload. Everything little-endian.
using Tensor = std::variant<WeightTensor, ActivationMatrix>;

Tensor load_tensor(const std::string& path);
void store_tensor(const WeightTensor& t, const std::string& path);
void store_tensor(const ActivationMatrix& m, const std::string& path);

/// Convenience loaders that insist on a specific kind (IoError::Kind::bad_header
/// when the file holds the other one).
WeightTensor load_weights(const std::string& path);
ActivationMatrix load_activations(const std::string& path);

} // namespace ubp
