#pragma once

#include <functional>

#include "mfg/grid.hpp"

namespace mfg {

enum class Direction { forward, backward };
enum class Anchor { left, right };

using OdeRhs = std::function<double(double t, double y)>;

/// Classical fourth-order Runge-Kutta on the grid. Forward sweeps start from
/// the boundary value at t = 0, backward sweeps from the terminal value at t = T.
/// Throws BlowUpError carrying the first knot whose value is not finite.
GridCurve rk4_integrate(const TimeGrid& grid, const OdeRhs& rhs, double boundary_value, Direction direction);

/// Composite trapezoid rule accumulated along the grid.
/// Anchor::left gives t -> int_0^t f, Anchor::right gives t -> int_t^T f.
GridCurve trapezoid_cumulative(const GridCurve& f, Anchor anchor);

}  // namespace mfg
