#include "nslab/constitutive.hpp"

#include "nslab/errors.hpp"
#include "nslab/spectral.hpp"

namespace nslab {

Params Params::defaults(int d) {
    Params p;
    p.Lambda = 2.0 * std::sqrt(double(d));
    return p;
}

void Params::validate(int d) const {
    auto require = [](bool ok, const char* what) {
        if (!ok) throw ConfigError(std::string("parameter constraint violated: ") + what);
    };
    require(eps >= 0 && delta >= 0 && k >= 0 && lambda >= 0, "ε, δ, k, λ >= 0");
    require(M > 0, "M > 0");
    require(mu > 0 && 2 * mu + d * xi > 0, "μ > 0, 2μ + dξ > 0");
    require(mapped_dim == 2 || mapped_dim == 3, "mapped dimension is 2 or 3");
    if (mapped_dim == 2) require(gamma >= 1.5, "γ ≥ 3/2");
    else require(gamma >= 1.8, "γ ≥ 9/5");
    require(m + 1 >= 4, "m + 1 ≥ 4");
    require(m + 1 > Gamma && Gamma >= m, "m+1 > Γ ≥ m");
    require(Gamma > gamma, "Γ > γ");
    require(Gamma >= 3, "Γ ≥ 3");
    require(Lambda > 0, "Λ > 0");
    require(sigma > 0, "σ > 0");
}

namespace {

double clip_rho(double rho) {
    if (!(rho >= -kRhoTolerance)) throw NumericalError("negative density " + std::to_string(rho));
    return rho < 0 ? 0.0 : rho;
}

}  // namespace

double pressure(double rho, const Params& p) {
    const double r = std::min(clip_rho(rho), p.M);
    return p.lambda * std::pow(r, p.Gamma) + std::pow(r, p.gamma);
}

double internal_energy(double rho, const Params& p) {
    const double r = clip_rho(rho);
    if (r < p.M) return p.lambda * std::pow(r, p.Gamma) / (p.Gamma - 1) + std::pow(r, p.gamma) / (p.gamma - 1);
    const double M = p.M;
    return p.lambda * p.Gamma / (p.Gamma - 1) * r * std::pow(M, p.Gamma - 1) - p.lambda * std::pow(M, p.Gamma) +
           p.gamma / (p.gamma - 1) * r * std::pow(M, p.gamma - 1) - std::pow(M, p.gamma);
}

double internal_energy_derivative(double rho, const Params& p) {
    const double r = std::min(clip_rho(rho), p.M);
    return p.lambda * p.Gamma / (p.Gamma - 1) * std::pow(r, p.Gamma - 1) +
           p.gamma / (p.gamma - 1) * std::pow(r, p.gamma - 1);
}

Field pressure(const Field& rho, const Params& p) {
    Field out(rho.grid());
    for (std::size_t i = 0; i < rho.size(); ++i) out[i] = pressure(rho[i], p);
    return out;
}

Field internal_energy(const Field& rho, const Params& p) {
    Field out(rho.grid());
    for (std::size_t i = 0; i < rho.size(); ++i) out[i] = internal_energy(rho[i], p);
    return out;
}

TensorField stress(const TensorField& grad_u, const Params& p) {
    const int d = grad_u.grid.dim;
    TensorField S(grad_u.grid);
    const Field divu = grad_u.trace();
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) {
            S.at(i, j) = (grad_u.at(i, j) + grad_u.at(j, i)) * p.mu;
            if (i == j) S.at(i, j) += divu * p.xi;
        }
    return S;
}

Field dissipation_density(const TensorField& grad_u, const Params& p) {
    const TensorField S = stress(grad_u, p);
    Field out(grad_u.grid);
    for (std::size_t e = 0; e < S.entries.size(); ++e) out += hadamard(S.entries[e], grad_u.entries[e]);
    return out;
}

double stress_dissipation(const VecField& u, const Params& p) {
    return dissipation_density(spectral::gradient_tensor(u), p).integral();
}

}  // namespace nslab
