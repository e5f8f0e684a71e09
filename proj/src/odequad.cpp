#include "mfg/odequad.hpp"

#include <cmath>

#include "mfg/error.hpp"

namespace mfg {

GridCurve rk4_integrate(const TimeGrid& grid, const OdeRhs& rhs, double boundary_value, Direction direction) {
    const std::size_t n = grid.steps();
    GridCurve y = GridCurve::filled(grid, 0.0);

    auto step = [&](double t0, double t1, double y0) {
        const double h = t1 - t0;
        const double tm = 0.5 * (t0 + t1);
        const double k1 = rhs(t0, y0);
        const double k2 = rhs(tm, y0 + 0.5 * h * k1);
        const double k3 = rhs(tm, y0 + 0.5 * h * k2);
        const double k4 = rhs(t1, y0 + h * k3);
        return y0 + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    };

    if (direction == Direction::forward) {
        y[0] = boundary_value;
        for (std::size_t i = 0; i < n; ++i) {
            y[i + 1] = step(grid.time(i), grid.time(i + 1), y[i]);
            if (!std::isfinite(y[i + 1])) throw BlowUpError("rk4: non-finite value in forward sweep", i + 1);
        }
    } else {
        y[n] = boundary_value;
        for (std::size_t i = n; i-- > 0;) {
            y[i] = step(grid.time(i + 1), grid.time(i), y[i + 1]);
            if (!std::isfinite(y[i])) throw BlowUpError("rk4: non-finite value in backward sweep", i);
        }
    }
    return y;
}

GridCurve trapezoid_cumulative(const GridCurve& f, Anchor anchor) {
    const std::size_t n = f.grid.steps();
    const double half_dt = 0.5 * f.grid.dt();
    GridCurve out = GridCurve::filled(f.grid, 0.0);
    if (anchor == Anchor::left) {
        for (std::size_t i = 0; i < n; ++i) out[i + 1] = out[i] + half_dt * (f[i] + f[i + 1]);
    } else {
        for (std::size_t i = n; i-- > 0;) out[i] = out[i + 1] + half_dt * (f[i] + f[i + 1]);
    }
    return out;
}

}  // namespace mfg
