#pragma once

#include <vector>

#include "nslab/field.hpp"

namespace nslab {

/// Backward characteristic feet, one point per grid sample (unwrapped coordinates).
struct DeparturePoints {
    Grid grid;
    std::vector<double> x, y;  ///< y unused in 1-D
};

/// X = x − dt·v(x − dt/2·v(x)); v is interpolated with Lagrange weights of the given order.
DeparturePoints departure_points(const VecField& v, double dt, int order);

/// Periodic Lagrange interpolation of the given even order (number of points per axis).
/// With clip, each value is limited to the range of the 2^d surrounding samples.
Field interpolate(const Field& f, const DeparturePoints& X, int order, bool clip);
double interpolate_at(const Field& f, double x, double y, int order, bool clip);
/// Multilinear interpolation.
Field interpolate_linear(const Field& f, const DeparturePoints& X);

}  // namespace nslab
