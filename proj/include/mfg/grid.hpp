#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace mfg {

/// Uniform time grid over [0, horizon] with n_steps intervals.
class TimeGrid {
public:
    TimeGrid() = default;
    TimeGrid(double horizon, std::size_t n_steps);

    double horizon() const noexcept { return horizon_; }
    std::size_t steps() const noexcept { return n_steps_; }
    std::size_t knots() const noexcept { return n_steps_ + 1; }
    double dt() const noexcept { return horizon_ / static_cast<double>(n_steps_); }

    /// Knot time; the last knot is exactly the horizon.
    double time(std::size_t i) const noexcept {
        return i == n_steps_ ? horizon_ : horizon_ * static_cast<double>(i) / static_cast<double>(n_steps_);
    }

    /// Index of the cell containing t and the fractional position inside it.
    /// Throws DomainError outside [0, horizon].
    std::pair<std::size_t, double> locate(double t) const;

    bool operator==(const TimeGrid&) const = default;

private:
    double horizon_ = 1.0;
    std::size_t n_steps_ = 1;
};

/// One value per grid knot, linearly interpolated in between.
struct GridCurve {
    TimeGrid grid;
    std::vector<double> values;

    GridCurve() = default;
    GridCurve(TimeGrid g, std::vector<double> v);
    static GridCurve filled(const TimeGrid& g, double v) { return {g, std::vector<double>(g.knots(), v)}; }

    double operator[](std::size_t i) const { return values[i]; }
    double& operator[](std::size_t i) { return values[i]; }
    std::size_t size() const noexcept { return values.size(); }
    double front() const { return values.front(); }
    double back() const { return values.back(); }
    std::span<const double> span() const noexcept { return values; }

    /// Linear interpolation; exact at knots.
    double at(double t) const;
};

}  // namespace mfg
