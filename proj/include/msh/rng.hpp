#pragma once

#include <array>
#include <cmath>
#include <cstdint>

namespace msh {

namespace detail {

inline std::uint64_t mix64(std::uint64_t z) {
    z ^= z >> 30;
    z *= 0xBF58476D1CE4E5B9ULL;
    z ^= z >> 27;
    z *= 0x94D049BB133111EBULL;
    z ^= z >> 31;
    return z;
}

} // namespace detail

/// Counter-based stream: the i-th output is a pure function of (key, i), so a
/// path's randomness depends only on (master_seed, path_index) and never on
/// the worker that ran it.  The mixer is the splitmix64 finalizer over a
/// Weyl-sequenced counter.
class CounterRng {
  public:
    CounterRng(std::uint64_t master_seed, std::uint64_t stream_index);

    std::uint64_t next_u64() {
        counter_ += 0x9E3779B97F4A7C15ULL;
        return detail::mix64(key_ ^ counter_);
    }

    /// Uniform on (0,1): 53 random bits, offset by half an ulp so 0 is excluded.
    double next_uniform() {
        return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
    }

    double next_gaussian();

  private:
    const struct ZigTables* zig_; // cached, avoids the static-init guard per draw
    std::uint64_t key_ = 0;
    std::uint64_t counter_ = 0;
};

/// Marsaglia-Tsang ziggurat tables for the standard normal (128 strips).
struct ZigTables {
    std::array<std::uint64_t, 128> kn{};
    std::array<double, 128> wn{};
    std::array<double, 128> fn{};
    double r = 3.442619855899;

    ZigTables() {
        const double m = 9007199254740992.0; // 2^53
        double dn = 3.442619855899;
        double tn = dn;
        const double vn = 9.91256303526217e-3;
        double q = vn / std::exp(-0.5 * dn * dn);
        kn[0] = static_cast<std::uint64_t>((dn / q) * m);
        kn[1] = 0;
        wn[0] = q / m;
        wn[127] = dn / m;
        fn[0] = 1.0;
        fn[127] = std::exp(-0.5 * dn * dn);
        for (int i = 126; i >= 1; --i) {
            dn = std::sqrt(-2.0 * std::log(vn / dn + std::exp(-0.5 * dn * dn)));
            kn[static_cast<std::size_t>(i) + 1] = static_cast<std::uint64_t>((dn / tn) * m);
            tn = dn;
            fn[static_cast<std::size_t>(i)] = std::exp(-0.5 * dn * dn);
            wn[static_cast<std::size_t>(i)] = dn / m;
        }
    }
};

namespace detail {

inline const ZigTables& ziggurat() {
    static const ZigTables tab;
    return tab;
}

} // namespace detail

inline CounterRng::CounterRng(std::uint64_t master_seed, std::uint64_t stream_index)
    : zig_(&detail::ziggurat()),
      key_(detail::mix64(master_seed ^ detail::mix64(stream_index + 0x632BE59BD9B4E019ULL))) {}

inline double CounterRng::next_gaussian() {
    const ZigTables& z = *zig_;
    for (;;) {
        const std::uint64_t u = next_u64();
        const std::size_t i = u & 127U;
        // signed 54-bit integer from the top bits: 53 magnitude bits + sign
        const auto j = static_cast<std::int64_t>(u >> 10) - (1LL << 53);
        const auto aj = static_cast<std::uint64_t>(j < 0 ? -j : j);
        if (aj < z.kn[i]) return static_cast<double>(j) * z.wn[i];
        if (i == 0) {
            // tail beyond r: Marsaglia's exact tail method
            double x, y;
            do {
                x = -std::log(next_uniform()) / z.r;
                y = -std::log(next_uniform());
            } while (y + y < x * x);
            return j > 0 ? z.r + x : -(z.r + x);
        }
        const double x = static_cast<double>(j) * z.wn[i];
        if (z.fn[i] + next_uniform() * (z.fn[i - 1] - z.fn[i]) < std::exp(-0.5 * x * x)) return x;
    }
}

} // namespace msh
