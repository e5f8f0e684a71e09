#include "mfg/rng.hpp"

#include <cmath>
#include <numbers>

namespace mfg {

std::pair<double, double> CounterRng::normals(Stream stream, std::uint64_t index, std::uint64_t step) const noexcept {
    const auto [u1, u2] = uniforms(stream, index, step);
    // 1 - u1 lies in (0, 1], so the log is finite.
    const double r = std::sqrt(-2.0 * std::log(1.0 - u1));
    const double angle = 2.0 * std::numbers::pi * u2;
    return {r * std::cos(angle), r * std::sin(angle)};
}

}  // namespace mfg
