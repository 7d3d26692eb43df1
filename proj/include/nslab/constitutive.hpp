#pragma once

#include <limits>
#include <string>

#include "nslab/field.hpp"

namespace nslab {

struct Params {
    // stage parameters
    double eps = 0.1;
    double delta = 0.1;
    double k = 0.1;
    double M = std::numeric_limits<double>::infinity();
    double lambda = 0.1;
    // exponents and material constants
    double m = 4.0;
    double Gamma = 4.5;
    double gamma = 2.0;
    double mu = 1.0;
    double xi = 0.0;
    double Lambda = 2.0 * std::sqrt(2.0);
    double sigma = 1e-3;
    /// Dimension whose pressure-exponent floor applies (2 or 3).
    int mapped_dim = 2;

    /// Defaults with Λ = 2√d for the given grid dimension.
    static Params defaults(int d);

    /// Throws ConfigError naming the first violated inequality.
    void validate(int d) const;
    [[nodiscard]] bool truncated() const { return std::isfinite(M); }
};

/// λ min(ρ,M)^Γ + min(ρ,M)^γ.
double pressure(double rho, const Params& p);
Field pressure(const Field& rho, const Params& p);
/// ρe with (ρe)'ρ − ρe = p; affine above M.
double internal_energy(double rho, const Params& p);
Field internal_energy(const Field& rho, const Params& p);
/// (ρe)'(ρ).
double internal_energy_derivative(double rho, const Params& p);

/// S = μ(∇u + ∇uᵀ) + ξ div u I.
TensorField stress(const TensorField& grad_u, const Params& p);
/// Pointwise S(∇u):∇u.
Field dissipation_density(const TensorField& grad_u, const Params& p);
/// ∫ S(∇u):∇u.
double stress_dissipation(const VecField& u, const Params& p);

/// Density values below this are treated as round-off and clipped to 0.
inline constexpr double kRhoTolerance = 1e-12;

}  // namespace nslab
