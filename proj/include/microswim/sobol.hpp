#pragma once

#include <bit>
#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "microswim/common.hpp"
#include "microswim/detail/sobol_data.hpp"

namespace microswim::sobol {

// Low-discrepancy sequence on the unit box, with optional digital-shift
// scrambling (each dimension's bit stream is XORed with a seeded constant,
// preserving the net's equidistribution while decorrelating designs).
class SobolSequence {
  public:
    explicit SobolSequence(int dim) : SobolSequence(dim, false, 0) {}

    SobolSequence(int dim, std::uint64_t scramble_seed) : SobolSequence(dim, true, scramble_seed) {}

    int dim() const { return dim_; }
    std::uint64_t index() const { return count_; }

    // emits sequence index 0 first (the digitally shifted origin), then the
    // gray-code walk through the net
    Vec next() {
        Vec p(dim_);
        for (int d = 0; d < dim_; ++d) p[d] = (state_[d] ^ shift_[d]) * 0x1p-32;
        const int bit = std::countr_zero(count_ + 1);
        for (int d = 0; d < dim_; ++d)
            state_[d] ^= direction_[static_cast<std::size_t>(d) * 32 + bit];
        ++count_;
        return p;
    }

    Mat take(int n) {
        if (n < 1) throw DimensionError("sobol: need at least one point");
        Mat out(n, dim_);
        for (int i = 0; i < n; ++i) out.row(i) = next().transpose();
        return out;
    }

  private:
    SobolSequence(int dim, bool scramble, std::uint64_t seed) : dim_(dim) {
        if (dim < 1 || dim > detail::sobol_max_dim)
            throw DimensionError("sobol: dimension must be in [1, 256]");
        direction_.assign(static_cast<std::size_t>(dim) * 32, 0);
        state_.assign(dim, 0);
        shift_.assign(dim, 0);
        for (int d = 0; d < dim_; ++d) init_direction(d);
        if (scramble) {
            Rng rng(seed);
            for (int d = 0; d < dim_; ++d)
                shift_[d] = static_cast<std::uint32_t>(rng.bits() >> 32);
        }
    }

    void init_direction(int d) {
        std::uint32_t* v = direction_.data() + static_cast<std::size_t>(d) * 32;
        const std::uint32_t poly = detail::sobol_poly[static_cast<std::size_t>(d)];
        std::uint32_t m[33];
        if (poly == 1) {  // first coordinate: plain radical-inverse direction numbers
            for (int j = 1; j <= 32; ++j) m[j] = 1;
        } else {
            const int s = 31 - std::countl_zero(poly);  // polynomial degree
            for (int j = 1; j <= s; ++j) m[j] = detail::sobol_minit[static_cast<std::size_t>(d)][j - 1];
            for (int j = s + 1; j <= 32; ++j) {
                m[j] = m[j - s] ^ (m[j - s] << s);
                for (int k = 1; k < s; ++k)
                    if ((poly >> (s - k)) & 1u) m[j] ^= m[j - k] << k;
            }
        }
        for (int j = 1; j <= 32; ++j) v[j - 1] = m[j] << (32 - j);
    }

    int dim_;
    std::uint64_t count_ = 0;
    std::vector<std::uint32_t> direction_;
    std::vector<std::uint32_t> state_;
    std::vector<std::uint32_t> shift_;
};

// n scrambled points in one call
inline Mat sample(int dim, int n, std::uint64_t scramble_seed) {
    return SobolSequence(dim, scramble_seed).take(n);
}

}  // namespace microswim::sobol
