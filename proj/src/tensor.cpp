#include "ubp/tensor.hpp"

#include <cmath>
#include <random>
#include <stdexcept>
#include <string>

namespace ubp {

WeightTensor::WeightTensor(int c_out_, int c_in_, int kh_, int kw_)
    : c_out(c_out_), c_in(c_in_), kh(kh_), kw(kw_) {
    if (c_out < 1 || c_in < 1 || kh < 1 || kw < 1)
        throw std::invalid_argument("WeightTensor: all dimensions must be >= 1");
    data.assign(elements(), 0.0f);
}

void WeightTensor::check() const {
    if (c_out < 1 || c_in < 1 || kh < 1 || kw < 1)
        throw std::invalid_argument("WeightTensor: all dimensions must be >= 1");
    if (data.size() != elements())
        throw std::invalid_argument("WeightTensor: data length " + std::to_string(data.size()) +
                                    " does not match dimensions");
}

ActivationMatrix::ActivationMatrix(int rows_, int cols_) : rows(rows_), cols(cols_) {
    if (rows < 1 || cols < 1)
        throw std::invalid_argument("ActivationMatrix: dimensions must be >= 1");
    data.assign(elements(), 0.0f);
}

void ActivationMatrix::check() const {
    if (rows < 1 || cols < 1)
        throw std::invalid_argument("ActivationMatrix: dimensions must be >= 1");
    if (data.size() != elements())
        throw std::invalid_argument("ActivationMatrix: data length mismatch");
}

namespace {

// Fixed generator so fixtures reproduce bit-for-bit: mt19937 seeded directly,
// uniform = top 24 bits mapped to [0,1), gaussian = Box-Muller on those uniforms.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : gen_(static_cast<std::uint32_t>(seed)) {}

    float unit() { // [0, 1)
        return static_cast<float>(gen_() >> 8) * (1.0f / 16777216.0f);
    }
    float uniform() { // [-1, 1)
        return 2.0f * unit() - 1.0f;
    }
    float gaussian() { // mean 0, stddev 1
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        // u1 in (0,1] so log() is finite.
        float u1 = (static_cast<float>(gen_() >> 8) + 1.0f) * (1.0f / 16777216.0f);
        float u2 = unit();
        float r = std::sqrt(-2.0f * std::log(u1));
        float theta = 2.0f * 3.14159265358979323846f * u2;
        spare_ = r * std::sin(theta);
        have_spare_ = true;
        return r * std::cos(theta);
    }
    float draw(Dist d) { return d == Dist::uniform ? uniform() : gaussian(); }

private:
    std::mt19937 gen_;
    bool have_spare_ = false;
    float spare_ = 0.0f;
};

} // namespace

WeightTensor gen_tensor(int c_out, int c_in, int kh, int kw, std::uint64_t seed, Dist dist) {
    WeightTensor w(c_out, c_in, kh, kw);
    Rng rng(seed);
    for (auto& v : w.data) v = rng.draw(dist);
    return w;
}

ActivationMatrix gen_matrix(int rows, int cols, std::uint64_t seed, Dist dist) {
    ActivationMatrix m(rows, cols);
    Rng rng(seed);
    for (auto& v : m.data) v = rng.draw(dist);
    return m;
}

} // namespace ubp
