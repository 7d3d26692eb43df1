#include "nslab/spectral.hpp"

#include <fftw3.h>

#include <limits>
#include <map>
#include <mutex>

namespace nslab {

namespace fft {
namespace {

// FFTW planning is not thread-safe; execution with the new-array interface is.
// Plans are created with FFTW_UNALIGNED so results do not depend on buffer alignment.
struct PlanCache {
    std::mutex mutex;
    std::map<std::tuple<int, int, int>, fftw_plan> plans;

    fftw_plan get(const Grid& g, int sign) {
        std::lock_guard lock(mutex);
        auto key = std::make_tuple(g.dim, g.n, sign);
        auto it = plans.find(key);
        if (it != plans.end()) return it->second;
        std::vector<std::complex<double>> a(g.size()), b(g.size());
        auto* in = reinterpret_cast<fftw_complex*>(a.data());
        auto* out = reinterpret_cast<fftw_complex*>(b.data());
        const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
        fftw_plan p = g.dim == 1 ? fftw_plan_dft_1d(g.n, in, out, sign, flags)
                                 : fftw_plan_dft_2d(g.n, g.n, in, out, sign, flags);
        plans.emplace(key, p);
        return p;
    }

    ~PlanCache() {
        for (auto& [k, p] : plans) fftw_destroy_plan(p);
    }
};

PlanCache& cache() {
    static PlanCache c;
    return c;
}

void execute(const Grid& g, int sign, Spectrum& s) {
    fftw_plan p = cache().get(g, sign);
    Spectrum out(s.size());
    fftw_execute_dft(p, reinterpret_cast<fftw_complex*>(s.data()), reinterpret_cast<fftw_complex*>(out.data()));
    s.swap(out);
}

}  // namespace

void forward_inplace(const Grid& g, Spectrum& s) { execute(g, FFTW_FORWARD, s); }

void inverse_inplace(const Grid& g, Spectrum& s) {
    execute(g, FFTW_BACKWARD, s);
    const double inv = 1.0 / double(g.size());
    for (auto& c : s) c *= inv;
}

Spectrum forward(const Field& f) {
    Spectrum s(f.size());
    for (std::size_t i = 0; i < f.size(); ++i) s[i] = f[i];
    forward_inplace(f.grid(), s);
    return s;
}

Field inverse(const Grid& g, const Spectrum& s) {
    Spectrum t = s;
    inverse_inplace(g, t);
    Field out(g);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = t[i].real();
    return out;
}

std::array<int, 2> wavenumber(const Grid& g, std::size_t idx) {
    if (g.dim == 1) return {g.signed_index(int(idx)), 0};
    return {g.signed_index(int(idx / g.n)), g.signed_index(int(idx % g.n))};
}

bool is_nyquist(const Grid& g, std::size_t idx) {
    const auto k = wavenumber(g, idx);
    const int ny = -g.n / 2;
    return k[0] == ny || (g.dim == 2 && k[1] == ny);
}

}  // namespace fft

namespace spectral {
namespace {

// First-derivative wavenumber: the Nyquist mode has no real derivative.
double deriv_k(const Grid& g, int k) { return k == -g.n / 2 ? 0.0 : double(k); }

double k_squared(const Grid& g, std::size_t idx) {
    const auto k = fft::wavenumber(g, idx);
    return double(k[0]) * k[0] + (g.dim == 2 ? double(k[1]) * k[1] : 0.0);
}

}  // namespace

Field derivative(const Field& f, int axis) {
    const Grid& g = f.grid();
    Spectrum s = fft::forward(f);
    for (std::size_t i = 0; i < s.size(); ++i) {
        const double k = deriv_k(g, fft::wavenumber(g, i)[std::size_t(axis)]);
        s[i] *= std::complex<double>(0.0, k);
    }
    return fft::inverse(g, s);
}

VecField grad(const Field& f) {
    const Grid& g = f.grid();
    const Spectrum s = fft::forward(f);
    VecField out(g);
    for (int a = 0; a < g.dim; ++a) {
        Spectrum t = s;
        for (std::size_t i = 0; i < t.size(); ++i)
            t[i] *= std::complex<double>(0.0, deriv_k(g, fft::wavenumber(g, i)[std::size_t(a)]));
        out[a] = fft::inverse(g, t);
    }
    return out;
}

Field div(const VecField& v) {
    const Grid& g = v.grid();
    Spectrum acc(g.size());
    for (int a = 0; a < g.dim; ++a) {
        const Spectrum s = fft::forward(v[a]);
        for (std::size_t i = 0; i < s.size(); ++i)
            acc[i] += s[i] * std::complex<double>(0.0, deriv_k(g, fft::wavenumber(g, i)[std::size_t(a)]));
    }
    return fft::inverse(g, acc);
}

Field laplacian(const Field& f) {
    const Grid& g = f.grid();
    Spectrum s = fft::forward(f);
    for (std::size_t i = 0; i < s.size(); ++i) s[i] *= -k_squared(g, i);
    return fft::inverse(g, s);
}

InvLaplacian inv_laplacian(const Field& f) {
    const Grid& g = f.grid();
    Spectrum s = fft::forward(f);
    const double mean = s[0].real() / double(g.size());
    s[0] = 0.0;
    for (std::size_t i = 1; i < s.size(); ++i) s[i] /= k_squared(g, i);
    return {fft::inverse(g, s), mean};
}

Field inv_laplacian_div(const VecField& v) {
    const Grid& g = v.grid();
    Spectrum acc(g.size());
    for (int a = 0; a < g.dim; ++a) {
        const Spectrum s = fft::forward(v[a]);
        for (std::size_t i = 1; i < s.size(); ++i)
            acc[i] += s[i] * std::complex<double>(0.0, deriv_k(g, fft::wavenumber(g, i)[std::size_t(a)]));
    }
    acc[0] = 0.0;
    for (std::size_t i = 1; i < acc.size(); ++i) acc[i] /= k_squared(g, i);
    return fft::inverse(g, acc);
}

TensorField gradient_tensor(const VecField& u) {
    const Grid& g = u.grid();
    TensorField out(g);
    for (int i = 0; i < g.dim; ++i) {
        const VecField gi = grad(u[i]);
        for (int j = 0; j < g.dim; ++j) out.at(i, j) = gi[j];
    }
    return out;
}

Field dealias(const Field& f) {
    const Grid& g = f.grid();
    const int kmax = g.n / 3;
    Spectrum s = fft::forward(f);
    for (std::size_t i = 0; i < s.size(); ++i) {
        const auto k = fft::wavenumber(g, i);
        if (std::abs(k[0]) > kmax || std::abs(k[1]) > kmax) s[i] = 0.0;
    }
    return fft::inverse(g, s);
}

VecField dealias(const VecField& v) {
    VecField out(v.grid());
    for (int c = 0; c < v.dim(); ++c) out[c] = dealias(v[c]);
    return out;
}

Field dealiased_product(const Field& a, const Field& b) { return dealias(hadamard(a, b)); }

Field apply_multiplier(const Field& f, const std::function<double(double, double)>& symbol) {
    const Grid& g = f.grid();
    Spectrum s = fft::forward(f);
    for (std::size_t i = 0; i < s.size(); ++i) {
        const auto k = fft::wavenumber(g, i);
        s[i] *= symbol(double(k[0]), double(k[1]));
    }
    return fft::inverse(g, s);
}

}  // namespace spectral

namespace {

double lp_of_magnitude(const Field& mag, double p) {
    if (std::isinf(p)) return mag.max_abs();
    double s = 0.0;
    for (double v : mag.values()) s += std::pow(std::abs(v), p);
    return std::pow(s * mag.grid().cell_volume(), 1.0 / p);
}

// Σ_k (1+|k|^2)^s |f̂_k|^2 with the torus Parseval weight.
double sobolev2_squared(const Field& f, double s) {
    const Grid& g = f.grid();
    const Spectrum sp = fft::forward(f);
    const double N = double(g.size());
    double acc = 0.0;
    for (std::size_t i = 0; i < sp.size(); ++i) {
        const auto k = fft::wavenumber(g, i);
        const double k2 = double(k[0]) * k[0] + double(k[1]) * k[1];
        acc += std::pow(1.0 + k2, s) * std::norm(sp[i] / N);
    }
    return acc * g.volume();
}

void check_space(const NormSpace& sp) {
    if (!(sp.p >= 1.0)) throw std::invalid_argument("norm exponent must satisfy p >= 1");
    switch (sp.kind) {
        case NormSpace::Kind::Lp:
        case NormSpace::Kind::W1p:
            return;
        case NormSpace::Kind::Wneg1p:
            if (sp.p != 2.0) throw std::invalid_argument("negative-order norms are offered for p = 2 only");
            return;
        case NormSpace::Kind::Fractional:
            if (sp.p != 2.0) throw std::invalid_argument("fractional norms are offered for p = 2 only");
            if (!(sp.s > -2.0 && sp.s < 2.0)) throw std::invalid_argument("fractional order must lie in (-2, 2)");
            return;
    }
}

}  // namespace

double norm(const Field& f, const NormSpace& sp) {
    check_space(sp);
    switch (sp.kind) {
        case NormSpace::Kind::Lp:
            return lp_of_magnitude(f, sp.p);
        case NormSpace::Kind::W1p: {
            const double a = lp_of_magnitude(f, sp.p);
            const double b = lp_of_magnitude(spectral::grad(f).magnitude(), sp.p);
            if (std::isinf(sp.p)) return std::max(a, b);
            return std::pow(std::pow(a, sp.p) + std::pow(b, sp.p), 1.0 / sp.p);
        }
        case NormSpace::Kind::Wneg1p:
            return std::sqrt(sobolev2_squared(f, -1.0));
        case NormSpace::Kind::Fractional:
            return std::sqrt(sobolev2_squared(f, sp.s));
    }
    return std::numeric_limits<double>::quiet_NaN();
}

double norm(const VecField& v, const NormSpace& sp) {
    check_space(sp);
    switch (sp.kind) {
        case NormSpace::Kind::Lp:
            return lp_of_magnitude(v.magnitude(), sp.p);
        case NormSpace::Kind::W1p: {
            const double a = lp_of_magnitude(v.magnitude(), sp.p);
            const double b = lp_of_magnitude(spectral::gradient_tensor(v).frobenius(), sp.p);
            if (std::isinf(sp.p)) return std::max(a, b);
            return std::pow(std::pow(a, sp.p) + std::pow(b, sp.p), 1.0 / sp.p);
        }
        case NormSpace::Kind::Wneg1p:
        case NormSpace::Kind::Fractional: {
            const double s = sp.kind == NormSpace::Kind::Wneg1p ? -1.0 : sp.s;
            double acc = 0.0;
            for (int c = 0; c < v.dim(); ++c) acc += sobolev2_squared(v[c], s);
            return std::sqrt(acc);
        }
    }
    return std::numeric_limits<double>::quiet_NaN();
}

}  // namespace nslab
