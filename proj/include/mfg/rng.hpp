#pragma once

#include <array>
#include <cstdint>
#include <utility>

namespace mfg {

/// Philox4x32-10 counter-based generator (Salmon et al., SC'11).
/// A pure function of (counter, key): no state, so any sample of any stream can
/// be produced on any thread in any order.
struct Philox4x32 {
    using Counter = std::array<std::uint32_t, 4>;
    using Key = std::array<std::uint32_t, 2>;

    static Counter block(Counter ctr, Key key) noexcept {
        for (int round = 0; round < 10; ++round) {
            if (round > 0) {
                key[0] += 0x9E3779B9u;
                key[1] += 0xBB67AE85u;
            }
            const std::uint64_t p0 = std::uint64_t{0xD2511F53u} * ctr[0];
            const std::uint64_t p1 = std::uint64_t{0xCD9E8D57u} * ctr[2];
            const auto hi0 = static_cast<std::uint32_t>(p0 >> 32), lo0 = static_cast<std::uint32_t>(p0);
            const auto hi1 = static_cast<std::uint32_t>(p1 >> 32), lo1 = static_cast<std::uint32_t>(p1);
            ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
        }
        return ctr;
    }
};

/// Independent random streams. Every draw is addressed by
/// (stream, index, step), where index is a sample/agent/path id.
enum class Stream : std::uint32_t {
    type_draw = 0,
    idiosyncratic = 1,
    common = 2,
    drift_check = 3,
};

class CounterRng {
public:
    explicit CounterRng(std::uint64_t seed = 0) noexcept : seed_(seed) {}

    std::uint64_t seed() const noexcept { return seed_; }

    Philox4x32::Counter raw(Stream stream, std::uint64_t index, std::uint64_t step) const noexcept {
        return Philox4x32::block(
            {static_cast<std::uint32_t>(step), static_cast<std::uint32_t>(index),
             static_cast<std::uint32_t>(index >> 32), static_cast<std::uint32_t>(stream)},
            {static_cast<std::uint32_t>(seed_), static_cast<std::uint32_t>(seed_ >> 32)});
    }

    /// Two uniforms on [0, 1) with 53-bit resolution.
    std::pair<double, double> uniforms(Stream stream, std::uint64_t index, std::uint64_t step) const noexcept {
        const auto r = raw(stream, index, step);
        const std::uint64_t a = (std::uint64_t{r[0]} << 32) | r[1];
        const std::uint64_t b = (std::uint64_t{r[2]} << 32) | r[3];
        constexpr double kScale = 0x1.0p-53;
        return {static_cast<double>(a >> 11) * kScale, static_cast<double>(b >> 11) * kScale};
    }

    double uniform(Stream stream, std::uint64_t index, std::uint64_t step) const noexcept {
        return uniforms(stream, index, step).first;
    }

    /// Two independent standard normals (Box-Muller).
    std::pair<double, double> normals(Stream stream, std::uint64_t index, std::uint64_t step) const noexcept;

private:
    std::uint64_t seed_;
};

}  // namespace mfg
