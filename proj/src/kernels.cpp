#include "nslab/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <stdexcept>
#include <tuple>

#include "nslab/spectral.hpp"

namespace nslab {

double kh_value(double r, double h, int d) {
    const double base = r <= 0.5 ? r + h : 0.5 + h;
    return std::pow(base, -d);
}

namespace {

void check_h(double h) {
    if (!(h > 0.0) || !std::isfinite(h)) throw std::invalid_argument("kernel width h must be positive");
}

double gaussian_periodized_value(double a, double b, int d, double h) {
    const double L = Grid::period;
    double s = 0.0;
    for (int m = -3; m <= 3; ++m) {
        const double xa = a + m * L;
        if (d == 1) {
            s += std::exp(-xa * xa / (2 * h * h));
            continue;
        }
        for (int q = -3; q <= 3; ++q) {
            const double xb = b + q * L;
            s += std::exp(-(xa * xa + xb * xb) / (2 * h * h));
        }
    }
    return s;
}

}  // namespace

KernelSample kernel_field(const KernelSpec& spec, const Grid& grid) {
    check_h(spec.h);
    KernelSample out{Field(grid), grid.spacing() > spec.h / 2};
    Field& f = out.field;
    const double s = grid.spacing();
    if (spec.kind == KernelKind::FlatKh) {
        for (std::size_t i = 0; i < f.size(); ++i) f[i] = kh_value(grid.torus_norm(i), spec.h, grid.dim);
        return out;
    }
    for (std::size_t i = 0; i < f.size(); ++i) {
        double a, b = 0.0;
        if (grid.dim == 1) {
            a = grid.signed_index(int(i)) * s;
        } else {
            a = grid.signed_index(int(i / grid.n)) * s;
            b = grid.signed_index(int(i % grid.n)) * s;
        }
        f[i] = gaussian_periodized_value(a, b, grid.dim, spec.h);
    }
    f *= 1.0 / f.integral();
    return out;
}

Field normalized_kernel(const KernelSpec& spec, const Grid& grid) {
    Field k = kernel_field(spec, grid).field;
    k *= 1.0 / k.integral();
    return k;
}

double l1_norm_ratio(double h, const Grid& grid) {
    if (!(h > 0.0 && h < 0.1)) throw std::invalid_argument("l1_norm_ratio requires 0 < h < 0.1");
    if (grid.spacing() > h / 2) throw std::invalid_argument("grid does not resolve h (need spacing <= h/2)");
    return kernel_field({KernelKind::FlatKh, h}, grid).field.integral() / std::abs(std::log(h));
}

double l1_norm_2d_radial(double h, int samples) {
    check_h(h);
    // ∫_0^{1/2} 2πr/(r+h)^2 dr in the variable t = ln(r+h), composite Simpson.
    const double a = std::log(h), b = std::log(0.5 + h);
    const int m = samples + (samples % 2);
    const double dt = (b - a) / m;
    auto g = [h](double t) {
        const double e = std::exp(t);
        return 2.0 * std::numbers::pi * (e - h) / e;
    };
    double s = g(a) + g(b);
    for (int i = 1; i < m; ++i) s += (i % 2 ? 4.0 : 2.0) * g(a + i * dt);
    const double disc = s * dt / 3.0;
    const double L = Grid::period;
    const double tail_area = L * L - std::numbers::pi * 0.25;
    return disc + tail_area / ((0.5 + h) * (0.5 + h));
}

double l1_norm_ratio(double h, int d) {
    if (!(h > 0.0 && h < 0.1)) throw std::invalid_argument("l1_norm_ratio requires 0 < h < 0.1");
    if (d == 2) return l1_norm_2d_radial(h) / std::abs(std::log(h));
    if (d != 1) throw std::invalid_argument("dimension must be 1 or 2");
    int n = 8;
    while (Grid::period / n > h / 2) n *= 2;
    return l1_norm_ratio(h, Grid(1, n));
}

Field convolve(const Field& f, const Field& g) {
    if (!(f.grid() == g.grid())) throw std::invalid_argument("convolve: grid mismatch");
    const Grid& grid = f.grid();
    Spectrum a = fft::forward(f);
    const Spectrum b = fft::forward(g);
    for (std::size_t i = 0; i < a.size(); ++i) a[i] *= b[i];
    Field out = fft::inverse(grid, a);
    out *= grid.cell_volume();
    return out;
}

namespace {

// Kernel spectra times spacing^d, keyed by (kind, h, dim, n).
struct KernelCache {
    std::mutex mutex;
    std::map<std::tuple<int, double, int, int>, std::shared_ptr<const Spectrum>> spectra;

    std::shared_ptr<const Spectrum> get(const KernelSpec& spec, const Grid& g) {
        const auto key = std::make_tuple(int(spec.kind), spec.h, g.dim, g.n);
        {
            std::lock_guard lock(mutex);
            auto it = spectra.find(key);
            if (it != spectra.end()) return it->second;
        }
        Spectrum s = fft::forward(normalized_kernel(spec, g));
        for (auto& c : s) c *= g.cell_volume();
        auto ptr = std::make_shared<const Spectrum>(std::move(s));
        std::lock_guard lock(mutex);
        if (spectra.size() > 256) spectra.clear();
        return spectra.emplace(key, ptr).first->second;
    }
};

KernelCache& kernel_cache() {
    static KernelCache c;
    return c;
}

Field apply_kernel(const Field& f, const Spectrum& k) {
    Spectrum a = fft::forward(f);
    for (std::size_t i = 0; i < a.size(); ++i) a[i] *= k[i];
    return fft::inverse(f.grid(), a);
}

}  // namespace

Field mollify(const Field& f, const KernelSpec& spec) { return apply_kernel(f, *kernel_cache().get(spec, f.grid())); }

VecField mollify(const VecField& v, const KernelSpec& spec) {
    const auto k = kernel_cache().get(spec, v.grid());
    VecField out(v.grid());
    for (int c = 0; c < v.dim(); ++c) out[c] = apply_kernel(v[c], *k);
    return out;
}

ConvLemmaResult conv_lemma_constant(double h1, double h2, const Grid& grid) {
    check_h(h1);
    check_h(h2);
    if (grid.spacing() > std::min(h1, h2) / 2) throw std::invalid_argument("grid does not resolve both kernels");
    const Field k1 = normalized_kernel({KernelKind::FlatKh, h1}, grid);
    const Field k2 = normalized_kernel({KernelKind::FlatKh, h2}, grid);
    const Field c = convolve(k1, k2);
    ConvLemmaResult out{0.0, Field(grid)};
    for (std::size_t i = 0; i < c.size(); ++i) {
        out.ratio[i] = c[i] / (k1[i] + k2[i]);
        out.constant = std::max(out.constant, out.ratio[i]);
    }
    return out;
}

double commutator_defect(const Field& f, const Field& g, double delta, KernelKind kind) {
    check_h(delta);
    const double nf = norm(f, NormSpace::lp(2));
    const double ng = norm(spectral::grad(g), NormSpace::lp(2));
    if (nf == 0.0 || ng <= 1e-14 * std::max(1.0, g.max_abs())) return 0.0;
    const KernelSpec spec{kind, delta};
    const Field comm = mollify(hadamard(f, g), spec) - hadamard(mollify(f, spec), g);
    return norm(comm, NormSpace::lp(1)) * std::abs(std::log(delta)) / (nf * ng);
}

double gradk_constant(double h, const Grid& grid) {
    check_h(h);
    if (grid.spacing() > h / 2) throw std::invalid_argument("grid does not resolve h (need spacing <= h/2)");
    const double s = grid.spacing();
    const int d = grid.dim;
    double c = 0.0;
    for (std::size_t i = 1; i < grid.size(); ++i) {
        double z[2] = {0.0, 0.0};
        if (d == 1) {
            z[0] = grid.signed_index(int(i)) * s;
        } else {
            z[0] = grid.signed_index(int(i / grid.n)) * s;
            z[1] = grid.signed_index(int(i % grid.n)) * s;
        }
        const double r = std::hypot(z[0], z[1]);
        if (std::abs(r - 0.5) < 2 * s) continue;
        double g2 = 0.0;
        for (int a = 0; a < d; ++a) {
            double zp[2] = {z[0], z[1]}, zm[2] = {z[0], z[1]};
            zp[a] += s;
            zm[a] -= s;
            const double dk = (kh_value(std::hypot(zp[0], zp[1]), h, d) -
                               kh_value(std::hypot(zm[0], zm[1]), h, d)) / (2 * s);
            g2 += dk * dk;
        }
        c = std::max(c, r * std::sqrt(g2) / kh_value(r, h, d));
    }
    return c;
}

double first_moment(double h, const Grid& grid) {
    const Field k = normalized_kernel({KernelKind::FlatKh, h}, grid);
    double s = 0.0;
    for (std::size_t i = 0; i < k.size(); ++i) s += k[i] * grid.torus_norm(i);
    return s * grid.cell_volume();
}

}  // namespace nslab
