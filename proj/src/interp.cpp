#include "nslab/interp.hpp"

#include <algorithm>
#include <array>
#include <stdexcept>

namespace nslab {

namespace {

constexpr int kMaxOrder = 8;

struct AxisStencil {
    int base;  // index of the first stencil point
    int cell;  // index of the left cell corner
    std::array<double, kMaxOrder> w{};
};

int wrap(int i, int n) { return ((i % n) + n) % n; }

AxisStencil axis_stencil(double x, double h, int order) {
    const double s = x / h;
    const int cell = int(std::floor(s));
    const double frac = s - cell;
    AxisStencil st;
    st.cell = cell;
    st.base = cell - (order / 2 - 1);
    for (int a = 0; a < order; ++a) {
        const double xa = double(a - (order / 2 - 1));
        double w = 1.0;
        for (int b = 0; b < order; ++b) {
            if (b == a) continue;
            const double xb = double(b - (order / 2 - 1));
            w *= (frac - xb) / (xa - xb);
        }
        st.w[std::size_t(a)] = w;
    }
    return st;
}

void check_order(int order) {
    if (order < 2 || order > kMaxOrder || order % 2 != 0)
        throw std::invalid_argument("interpolation order must be even and in [2, 8]");
}

}  // namespace

double interpolate_at(const Field& f, double x, double y, int order, bool clip) {
    check_order(order);
    const Grid& g = f.grid();
    const int n = g.n;
    const double h = g.spacing();
    const AxisStencil sx = axis_stencil(x, h, order);
    if (g.dim == 1) {
        double v = 0.0;
        for (int a = 0; a < order; ++a) v += sx.w[std::size_t(a)] * f[std::size_t(wrap(sx.base + a, n))];
        if (clip) {
            const double f0 = f[std::size_t(wrap(sx.cell, n))], f1 = f[std::size_t(wrap(sx.cell + 1, n))];
            v = std::clamp(v, std::min(f0, f1), std::max(f0, f1));
        }
        return v;
    }
    const AxisStencil sy = axis_stencil(y, h, order);
    double v = 0.0;
    for (int a = 0; a < order; ++a) {
        const std::size_t row = std::size_t(wrap(sx.base + a, n)) * std::size_t(n);
        double r = 0.0;
        for (int b = 0; b < order; ++b) r += sy.w[std::size_t(b)] * f[row + std::size_t(wrap(sy.base + b, n))];
        v += sx.w[std::size_t(a)] * r;
    }
    if (clip) {
        double lo = INFINITY, hi = -INFINITY;
        for (int a = 0; a < 2; ++a)
            for (int b = 0; b < 2; ++b) {
                const double c = f[std::size_t(wrap(sx.cell + a, n)) * std::size_t(n) + std::size_t(wrap(sy.cell + b, n))];
                lo = std::min(lo, c);
                hi = std::max(hi, c);
            }
        v = std::clamp(v, lo, hi);
    }
    return v;
}

Field interpolate(const Field& f, const DeparturePoints& X, int order, bool clip) {
    check_order(order);
    Field out(f.grid());
    const bool two = f.grid().dim == 2;
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = interpolate_at(f, X.x[i], two ? X.y[i] : 0.0, order, clip);
    return out;
}

Field interpolate_linear(const Field& f, const DeparturePoints& X) { return interpolate(f, X, 2, false); }

DeparturePoints departure_points(const VecField& v, double dt, int order) {
    check_order(order);
    const Grid& g = v.grid();
    DeparturePoints X{g, std::vector<double>(g.size()), std::vector<double>(g.dim == 2 ? g.size() : 0)};
    const double h = g.spacing();
    for (std::size_t i = 0; i < g.size(); ++i) {
        const double x0 = g.dim == 1 ? double(i) * h : double(i / std::size_t(g.n)) * h;
        const double y0 = g.dim == 1 ? 0.0 : double(i % std::size_t(g.n)) * h;
        if (g.dim == 1) {
            const double xm = x0 - 0.5 * dt * v[0][i];
            X.x[i] = x0 - dt * interpolate_at(v[0], xm, 0.0, order, false);
        } else {
            const double xm = x0 - 0.5 * dt * v[0][i], ym = y0 - 0.5 * dt * v[1][i];
            X.x[i] = x0 - dt * interpolate_at(v[0], xm, ym, order, false);
            X.y[i] = y0 - dt * interpolate_at(v[1], xm, ym, order, false);
        }
    }
    return X;
}

}  // namespace nslab
