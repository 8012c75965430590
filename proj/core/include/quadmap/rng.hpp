#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>

namespace quadmap {

/// Source of uniform draws in [0, 1). Virtual so tests can script exact
/// sequences; every consumer documents its draw order against this interface.
class RandomStream {
  public:
    virtual ~RandomStream() = default;
    virtual double next01() = 0;
};

/// mt19937_64-backed stream. The generator and the bits-to-double mapping
/// ((x >> 11) * 2^-53) are both fully specified, so sequences are identical
/// across platforms for a given seed.
class Mt64Stream final : public RandomStream {
  public:
    explicit Mt64Stream(std::uint64_t seed) : gen_(seed) {}

    double next01() override { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

  private:
    std::mt19937_64 gen_;
};

/// floor(u * n) clamped to [0, n-1]; deterministic unlike std::uniform_int_distribution.
inline std::int64_t draw_index(RandomStream& rs, std::int64_t n) {
    const auto k = static_cast<std::int64_t>(rs.next01() * static_cast<double>(n));
    return k >= n ? n - 1 : k;
}

/// Uniform draw over [lo, hi).
inline double draw_uniform(RandomStream& rs, double lo, double hi) {
    return lo + (hi - lo) * rs.next01();
}

/// Standard normal via Box-Muller (two draws per sample, cosine branch only,
/// second branch discarded so the draw count per sample is fixed).
inline double draw_normal(RandomStream& rs) {
    const double u1 = 1.0 - rs.next01(); // (0, 1]
    const double u2 = rs.next01();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

} // namespace quadmap
