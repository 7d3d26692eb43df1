#pragma once

#include <array>
#include <complex>
#include <functional>
#include <vector>

#include "nslab/field.hpp"

namespace nslab {

using Spectrum = std::vector<std::complex<double>>;

namespace fft {

/// Unnormalized forward DFT of a real field (complex layout, full grid).
Spectrum forward(const Field& f);
/// Inverse DFT including the 1/N factor; returns the real part.
Field inverse(const Grid& g, const Spectrum& s);
/// Complex-to-complex transforms on a flat buffer of size g.size().
void forward_inplace(const Grid& g, Spectrum& s);
void inverse_inplace(const Grid& g, Spectrum& s);

/// Wavenumber vector of flat spectral index idx (integer wavenumbers, period 2π).
std::array<int, 2> wavenumber(const Grid& g, std::size_t idx);
/// True for indices on the Nyquist line of any axis.
bool is_nyquist(const Grid& g, std::size_t idx);

}  // namespace fft

/// Spectral calculus on the periodic torus.
namespace spectral {

VecField grad(const Field& f);
Field div(const VecField& v);
Field laplacian(const Field& f);
/// Partial derivative along axis (0 = x, 1 = y).
Field derivative(const Field& f, int axis);

struct InvLaplacian {
    Field field;           ///< mean-zero g with −Δg = f − mean(f)
    double discarded_mean;  ///< mean(f)
};
InvLaplacian inv_laplacian(const Field& f);

/// (−Δ)^{-1} Div v, mean-zero. Symbol i k·v̂ / |k|^2.
Field inv_laplacian_div(const VecField& v);

/// ∇u with entries (i, j) = ∂_j u_i.
TensorField gradient_tensor(const VecField& u);

/// Two-thirds rule: keep modes with |k_j| <= n/3 on every axis.
Field dealias(const Field& f);
VecField dealias(const VecField& v);
/// Pointwise product followed by the two-thirds filter.
Field dealiased_product(const Field& a, const Field& b);

/// Multiply the spectrum by a real symbol m(kx, ky).
Field apply_multiplier(const Field& f, const std::function<double(double, double)>& symbol);

}  // namespace spectral

/// Function spaces accepted by norm().
struct NormSpace {
    enum class Kind { Lp, W1p, Wneg1p, Fractional };
    Kind kind = Kind::Lp;
    double p = 2.0;  ///< exponent; +inf allowed for Lp
    double s = 0.0;  ///< smoothness for Fractional

    static NormSpace lp(double p) { return {Kind::Lp, p, 0.0}; }
    static NormSpace w1p(double p) { return {Kind::W1p, p, 1.0}; }
    static NormSpace wneg1p(double p) { return {Kind::Wneg1p, p, -1.0}; }
    static NormSpace fractional(double s, double p = 2.0) { return {Kind::Fractional, p, s}; }
};

/// Lebesgue norms by equal-weight quadrature; Sobolev norms through the
/// multiplier (1+|k|^2)^{s/2} (p = 2 only for negative or fractional order).
double norm(const Field& f, const NormSpace& space);
double norm(const VecField& v, const NormSpace& space);

}  // namespace nslab
