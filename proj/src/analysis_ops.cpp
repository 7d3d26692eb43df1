#include "nslab/analysis_ops.hpp"

#include <algorithm>
#include <map>
#include <random>
#include <stdexcept>

#include "nslab/kernels.hpp"
#include "nslab/spectral.hpp"

namespace nslab {

namespace {

// Ball radii are compared with a relative slack so lattice points on the sphere count.
constexpr double kRadiusSlack = 1e-9;

Field ball_indicator(const Grid& g, double r) {
    Field ind(g);
    for (std::size_t i = 0; i < ind.size(); ++i) ind[i] = g.torus_norm(i) <= r * (1 + kRadiusSlack) ? 1.0 : 0.0;
    return ind;
}

Field shift(const Field& f, std::size_t offset_idx) {
    const Grid& g = f.grid();
    Field out(g);
    if (g.dim == 1) {
        const std::size_t n = std::size_t(g.n);
        for (std::size_t i = 0; i < n; ++i) out[i] = f[(i + offset_idx) % n];
        return out;
    }
    const std::size_t n = std::size_t(g.n);
    const std::size_t di = offset_idx / n, dj = offset_idx % n;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) out[i * n + j] = f[((i + di) % n) * n + (j + dj) % n];
    return out;
}

double torus_distance(const Grid& g, std::size_t a, std::size_t b) {
    const int n = g.n;
    auto wrap = [n](int k) { return std::min(((k % n) + n) % n, n - ((k % n) + n) % n); };
    if (g.dim == 1) return wrap(int(a) - int(b)) * g.spacing();
    const int da = wrap(int(a / n) - int(b / n)), db = wrap(int(a % n) - int(b % n));
    return std::hypot(double(da), double(db)) * g.spacing();
}

}  // namespace

Field maximal(const Field& f) {
    const Grid& g = f.grid();
    const Field af = abs(f);
    Field out = af;
    for (double r = g.spacing(); r <= g.period / 2 * (1 + kRadiusSlack); r *= 2) {
        const Field ind = ball_indicator(g, r);
        const double count = ind.sum();
        Field avg = convolve(af, ind);
        avg *= 1.0 / (count * g.cell_volume());
        for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::max(out[i], avg[i]);
    }
    return out;
}

Field D_r_of_magnitude(const Field& grad_mag, double r) {
    const Grid& g = grad_mag.grid();
    if (r < g.spacing() * (1 - kRadiusSlack)) throw std::invalid_argument("D_r requires r >= spacing");
    Field k(g);
    for (std::size_t i = 1; i < k.size(); ++i) {
        const double z = g.torus_norm(i);
        if (z <= r * (1 + kRadiusSlack)) k[i] = std::pow(z, 1 - g.dim) / r;
    }
    return convolve(grad_mag, k);
}

Field D_r(const Field& f, double r) { return D_r_of_magnitude(spectral::grad(f).magnitude(), r); }

double D_r_at(const Field& grad_mag, std::size_t idx, double r) {
    const Grid& g = grad_mag.grid();
    if (r < g.spacing() * (1 - kRadiusSlack)) throw std::invalid_argument("D_r requires r >= spacing");
    double s = 0.0;
    for (std::size_t j = 0; j < grad_mag.size(); ++j) {
        if (j == idx) continue;
        const double z = torus_distance(g, idx, j);
        if (z <= r * (1 + kRadiusSlack)) s += grad_mag[j] * std::pow(z, 1 - g.dim);
    }
    return s * g.cell_volume() / r;
}

double D_shift_decay(const Field& u, double h) {
    const Grid& g = u.grid();
    if (!(h > 0.0 && h < 1.0)) throw std::invalid_argument("D_shift_decay requires 0 < h < 1");
    if (g.spacing() > h / 2) throw std::invalid_argument("grid does not resolve h (need spacing <= h/2)");
    const double wnorm = norm(u, NormSpace::w1p(2));
    if (wnorm == 0.0) return 0.0;
    const Field gm = spectral::grad(u).magnitude();
    if (gm.max_abs() <= 1e-13 * std::max(1.0, u.max_abs())) return 0.0;

    std::map<long long, Field> cache;
    double acc = 0.0;
    for (std::size_t i = 1; i < g.size(); ++i) {
        const double r = g.torus_norm(i);
        const long long key = std::llround(r * r / (g.spacing() * g.spacing()));
        auto it = cache.find(key);
        if (it == cache.end()) it = cache.emplace(key, D_r_of_magnitude(gm, r)).first;
        const Field diff = it->second - shift(it->second, i);
        acc += kh_value(r, h, g.dim) * norm(diff, NormSpace::lp(2));
    }
    acc *= g.cell_volume();
    return acc / (std::sqrt(std::abs(std::log(h))) * wnorm);
}

void SmoothedSignParams::validate() const {
    if (!(sigma > 0.0)) throw std::invalid_argument("σ > 0 required");
}

double smoothed_abs(double w, double sigma) {
    const double a = std::abs(w);
    return a > sigma ? a - sigma / 2 : w * w / (2 * sigma);
}

double smoothed_sign(double w, double sigma) {
    if (std::abs(w) > sigma) return w > 0 ? 1.0 : -1.0;
    return w / sigma;
}

Field smoothed_abs(const Field& w, double sigma) {
    Field out(w.grid());
    for (std::size_t i = 0; i < w.size(); ++i) out[i] = smoothed_abs(w[i], sigma);
    return out;
}

LagrangeCheck lagrange_constant(const Field& f, int pairs, unsigned seed) {
    const Grid& g = f.grid();
    const Field gm = spectral::grad(f).magnitude();
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<std::size_t> pick(0, g.size() - 1);
    LagrangeCheck out{0.0, 0};
    while (out.pairs < pairs) {
        const std::size_t x = pick(rng), y = pick(rng);
        if (x == y) continue;
        const double r = torus_distance(g, x, y);
        const double denom = r * (D_r_at(gm, x, r) + D_r_at(gm, y, r));
        ++out.pairs;
        const double num = std::abs(f[x] - f[y]);
        if (denom > 0.0) out.constant = std::max(out.constant, num / denom);
    }
    return out;
}

}  // namespace nslab
