#include "mfg/grid.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "mfg/error.hpp"

namespace mfg {

TimeGrid::TimeGrid(double horizon, std::size_t n_steps) : horizon_(horizon), n_steps_(n_steps) {
    if (!(horizon > 0.0) || !std::isfinite(horizon)) {
        throw StructuralError("time grid: horizon must be finite and > 0");
    }
    if (n_steps == 0) throw StructuralError("time grid: need at least one step");
}

std::pair<std::size_t, double> TimeGrid::locate(double t) const {
    if (!(t >= 0.0 && t <= horizon_)) {
        throw DomainError("time " + std::to_string(t) + " outside [0, " + std::to_string(horizon_) + "]");
    }
    const double x = t / horizon_ * static_cast<double>(n_steps_);
    auto i = static_cast<std::size_t>(std::floor(x));
    if (i >= n_steps_) return {n_steps_ - 1, 1.0};
    return {i, x - static_cast<double>(i)};
}

GridCurve::GridCurve(TimeGrid g, std::vector<double> v) : grid(g), values(std::move(v)) {
    if (values.size() != grid.knots()) {
        throw StructuralError("grid curve: " + std::to_string(values.size()) + " values for " +
                              std::to_string(grid.knots()) + " knots");
    }
}

double GridCurve::at(double t) const {
    const auto [i, frac] = grid.locate(t);
    if (frac == 0.0) return values[i];
    if (frac == 1.0) return values[i + 1];
    return values[i] + frac * (values[i + 1] - values[i]);
}

}  // namespace mfg
