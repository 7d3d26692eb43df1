#pragma once

#include <vector>

#include "nslab/field.hpp"
#include "nslab/solver.hpp"

namespace nslab {

/// Instantaneous energy budget of one state.
struct EnergyTerms {
    double mass = 0.0;
    double kinetic = 0.0;      ///< ∫(δ+[ρ]_δ)|u|²/2
    double internal = 0.0;     ///< ∫ρe(ρ)
    double dissipation = 0.0;  ///< ∫S(∇u):∇u
    double damping = 0.0;      ///< k∫ρ^m (ρe)'(ρ) + (k/2)∫[ρ^m]_δ|u|²
    double work = 0.0;         ///< ∫f·u + ∫[s]_δ|u|²/2 + ∫(ρe)'(ρ)s
    [[nodiscard]] double energy() const { return kinetic + internal; }
};
EnergyTerms energy_terms(const FluidState& s, const Params& p, const SolverOptions& o, const Forcing& f = {});

struct LedgerRow {
    long step = 0;
    double t = 0.0;
    EnergyTerms terms;
    double dissipation_cum = 0.0;
    double damping_cum = 0.0;
    double work_cum = 0.0;
    double energy_residual = 0.0;  ///< E − E0 + ∫(D + K) − ∫work, right-endpoint sums
    double mass_residual = 0.0;    ///< Δ∫ρ + damped mass − source mass over the last step
    double min_w = 0.0;
    double max_rho_w = 0.0;
    double rho_logw = 0.0;  ///< ∫ρ|log w|
};
std::vector<LedgerRow> energy_ledger(const Trajectory& tr);

/// ∫ρ|log w|; +inf where ρ > 0 and w = 0.
double rho_log_w(const Field& rho, const Field& w);

/// Effective viscous flux G = (2μ+ξ)div u − p_ε.
Field evf(const FluidState& s, const Params& p, const SolverOptions& o);

/// Both sides of G − mean(G) = −(−Δ)^{-1}Div X at each interior snapshot.
struct EvfSeries {
    std::vector<double> t;
    std::vector<Field> G;    ///< mean-free flux
    std::vector<Field> rhs;  ///< −(−Δ)^{-1}Div X for the chosen form
    std::vector<double> weight;  ///< time quadrature weight per entry
};
/// form 1: X = A∂_t u + B·∇u − f. form 2: X = ∂_t(Au) + Div(B⊗u) + k[ρ^m]_δ u − [s]_δ u − f.
EvfSeries evf_series(const Trajectory& tr, int form);
/// Space-time L² norm of G − rhs over interior snapshots.
double evf_identity_residual(const Trajectory& tr, int form);
/// Space-time L² norm of a − b over matching series.
double evf_series_distance(const EvfSeries& a, const EvfSeries& b);
/// Spatial L² residual per snapshot; one-sided differences at the ends.
std::vector<double> evf_residual_per_snapshot(const Trajectory& tr, int form);

/// ∬K_h(x−y)|ρ(x)−ρ(y)|^σ w(x) with the smoothed modulus; divided by ‖K_h‖_{L1} when normalized.
double kolmogorov_weighted(const Field& rho, const Field& w, double h, double sigma, bool normalized = false);
/// k∬K_h(x−y)(ρ^m(x)−ρ^m(y))sgn^σ(ρ(x)−ρ(y)) w(x).
double kolmogorov_G(const Field& rho, const Field& w, double h, double sigma, double k, double m);
/// max over seq of (1/‖K_h‖_{L1})∬K_h(x−y)|f(x)−f(y)|^p.
double kolmogorov_plain(const std::vector<Field>& seq, double h, double p);

struct WeightRemovalSplit {
    double region1 = 0.0;   ///< pairs with x or y outside Ω_ζ = {w ≤ ζ}
    double region2 = 0.0;   ///< pairs with both points in Ω_ζ
    double total = 0.0;     ///< region1 + region2
    double plain = 0.0;     ///< ∬K̄_h|ρ(x)−ρ(y)| over all pairs
    double I1_bound = 0.0;  ///< (1/ζ)∬_{region 1}K̄_h|ρ(x)−ρ(y)|(w(x)+w(y))
    double I2_bound = 0.0;  ///< 2∫ρ|log w| / |log ζ|
};
/// Throws NumericalError if region2 exceeds I2_bound.
WeightRemovalSplit weight_removal_split(const Field& rho, const Field& w, double h, double zeta);

struct RegularizationDefect {
    std::vector<double> eta;
    std::vector<double> defect;  ///< ‖ρ|u − π_η∗u|‖_{L1(t,x)}
    double theta = 0.0;          ///< least-squares log-log slope
};
/// π_η is a Gaussian of width ct·η in t (reflected at the ends) and cx·η in x.
RegularizationDefect regularization_defect(const std::vector<Field>& rho, const std::vector<VecField>& u,
                                           double dt, const std::vector<double>& eta, double ct = 1.0,
                                           double cx = 1.0);
RegularizationDefect regularization_defect(const Trajectory& tr, const std::vector<double>& eta, double ct = 1.0,
                                           double cx = 1.0);

/// ψ(t) = exp(1 − 1/(1 − (t/t_c)²)) on [0, t_c), 0 afterwards.
struct BumpProfile {
    double t_c = 1.0;
    [[nodiscard]] double value(double t) const;
    [[nodiscard]] double derivative(double t) const;
};

struct BogovskiiTerms {
    double lhs = 0.0;  ///< ∫∫ψ p_ε ρ
    double I0 = 0.0;   ///< ∫ψ ρ̄ ∫p_ε
    double I1 = 0.0;   ///< (μ+ξ)∫∫ψρ div u
    double I2 = 0.0;   ///< μ∫∫ψ∇u:∇²g
    double I3 = 0.0;   ///< −∫∫ψ(u⊗B):∇²g
    double I4 = 0.0;   ///< time-derivative term after integration by parts
    double I5 = 0.0;   ///< k∫∫ψ[ρ^m]_δ u·∇g
    double Is = 0.0;   ///< ∫∫ψ[s]_δ u·∇g
    double If = 0.0;   ///< ∫∫ψ f·∇g
    double rhs = 0.0;
    double residual = 0.0;  ///< |lhs − rhs| / |lhs|
};
/// Tests momentum with ψ∇g, g = Δ^{-1}(ρ − ρ̄); throws std::invalid_argument when t_c ≥ t_end.
BogovskiiTerms bogovskii_functional(const Trajectory& tr, const BumpProfile& psi);

/// Uniformly sampled space-time data, periodic in t with the given period.
struct SpaceTimeScalar {
    double period = 1.0;
    std::vector<Field> slices;
};
struct SpaceTimeVector {
    double period = 1.0;
    std::vector<VecField> slices;
};

struct LemmaExponents {
    double q, qp, qbar, qbarp;  ///< q, q′, q̄, q̄′; +inf allowed
};
/// α solving 1 − 1/q′ − 1/q̄ = α(1/q + 1/q̄′ − 1/q′ − 1/q̄); throws if no branch of the relation holds.
double lemma_alpha(const LemmaExponents& e);

struct InterpolationCheck {
    double lhs = 0.0;  ///< ∫∫((−Δ)^{-1}Div ∂_tφ)W
    double rhs = 0.0;
    double ratio = 0.0;  ///< |lhs| / rhs
    double alpha = 0.0;  ///< 1 − β
    double beta = 0.0;
    double norm_phi = 0.0, norm_dphi = 0.0, norm_W = 0.0, norm_dW = 0.0;
};
/// ‖∂_t f‖_{L^r W^{-1,r}} is the L^r norm of F^{-1}(|ξ₀||ξ|^{-1}F f), spatial mean mode dropped.
InterpolationCheck interpolation_verifier(const SpaceTimeVector& phi, const SpaceTimeScalar& W,
                                          const LemmaExponents& e, double beta);
/// ∂_t by FFT in time.
SpaceTimeScalar time_derivative(const SpaceTimeScalar& f);
SpaceTimeVector time_derivative(const SpaceTimeVector& f);
/// L^q norm over the space-time cylinder.
double spacetime_norm(const SpaceTimeScalar& f, double q);
double spacetime_norm(const SpaceTimeVector& f, double q);

}  // namespace nslab
