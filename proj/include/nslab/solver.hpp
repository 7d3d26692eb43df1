#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "nslab/constitutive.hpp"
#include "nslab/field.hpp"
#include "nslab/interp.hpp"
#include "nslab/kernels.hpp"

namespace nslab {

struct SolverOptions {
    double dt = 1e-3;
    double t_end = 1.0;
    double tol_fp = 1e-10;
    int max_fp_iter = 30;
    double relaxation = 0.7;  ///< applied when the Picard residual stagnates
    int interp_order = 4;     ///< Lagrange points per axis (4 = cubic)
    double cfl_max = 2.0;     ///< max dt·|u_ε|/spacing
    bool mass_fixer = false;  ///< rescale ρ to remove the transport mass defect
    double gmres_tol = 1e-12;
    int gmres_max_iter = 300;
    KernelKind eps_kernel = KernelKind::GaussianPeriodized;
    KernelKind delta_kernel = KernelKind::GaussianPeriodized;
    int snapshot_stride = 1;

    void validate() const;
};

/// Optional body force f(t) and mass source s(t) sampled on the grid.
struct Forcing {
    std::function<VecField(double)> momentum;
    std::function<Field(double)> mass;
    [[nodiscard]] bool any() const { return bool(momentum) || bool(mass); }
};

struct FluidState {
    double t = 0.0;
    long step = 0;
    Field rho;
    VecField u;
    Field w;

    [[nodiscard]] const Grid& grid() const { return rho.grid(); }
};

/// Fields derived from (ρ, u); recomputed from the state on demand.
struct DerivedFields {
    Field p;          ///< p^{M,λ}(ρ)
    Field p_eps;      ///< κ_ε ∗ p
    TensorField grad_u;
    Field Mgrad;      ///< M[|∇u|]
    VecField u_eps;   ///< κ_ε ∗ u
    Field rho_delta;  ///< [ρ]_δ
    VecField B;       ///< [P(ρ u_ε)]_δ
};
DerivedFields derive(const FluidState& s, const Params& p, const SolverOptions& o);

/// Mollification at width h; identity when h == 0.
Field mollify_maybe(const Field& f, KernelKind kind, double h);
VecField mollify_maybe(const VecField& v, KernelKind kind, double h);

struct StepStats {
    int fp_iterations = 0;
    std::vector<double> fp_residuals;
    int gmres_iterations = 0;
    double damping_mass = 0.0;   ///< ∫ρ removed by the damping sub-step
    double source_mass = 0.0;    ///< ∫ρ added by the mass source
    double transport_defect = 0.0;  ///< transport mass error before any fix
    double mass_fix = 0.0;       ///< ∫ρ added by the fixer
};

struct ContinuityResult {
    Field rho;
    DeparturePoints X;
    double damping_mass = 0.0;
    double source_mass = 0.0;
    double transport_defect = 0.0;
    double mass_fix = 0.0;
};

/// Semi-Lagrangian continuity step along v with exact damping; s0, s1 are the mass source at both ends.
ContinuityResult continuity_step(const Field& rho, const VecField& v, const Params& p, const SolverOptions& o,
                                 double dt, const Field* s0 = nullptr, const Field* s1 = nullptr);
/// Closed-form solution of ρ' = −kρ^m over dt.
double damping_ode(double rho, double k, double m, double dt);

struct MomentumResult {
    VecField u;
    ContinuityResult continuity;
    VecField v_mid;  ///< transport velocity used for ρ and w
    int iterations = 0;
    int gmres_iterations = 0;
    std::vector<double> residuals;
};
/// Picard iteration on ũ coupling the continuity step and the implicit momentum solve.
MomentumResult momentum_fixed_point(const FluidState& s, const Params& p, const SolverOptions& o,
                                    const Forcing& forcing = {});

/// Semi-Lagrangian weight transport with damping exp(−Λ M dt).
Field weight_step(const Field& w, const DeparturePoints& X, const Field& Mgrad, const Params& p, double dt);
Field weight_step(const Field& w, const VecField& u_eps, const Field& Mgrad, const Params& p, double dt,
                  int order = 4);

struct InitialData {
    std::function<double(double, double)> rho;
    std::vector<std::function<double(double, double)>> u;  ///< d components
    std::string description = "custom";
};
/// ρ0 = 1 + 0.3cos x (d=1) or 1 + 0.3cos x cos y (d=2); u0 = amplitude·(sin x, sin 2y).
InitialData default_initial_data(int d, double amplitude = 0.1);

struct StageConfig {
    Grid grid;
    Params params;
    SolverOptions options;
    InitialData initial;
    Forcing forcing;
};

FluidState initial_state(const StageConfig& c);
FluidState advance(const FluidState& s, const StageConfig& c, StepStats* stats = nullptr);

struct Snapshot {
    FluidState state;
    StepStats stats;  ///< stats since the previous snapshot (masses summed, max Picard count)
};

struct Trajectory {
    Grid grid;
    Params params;
    SolverOptions options;
    Forcing forcing;
    std::vector<Snapshot> snapshots;
    bool ok = true;
    std::string failure;
    FluidState final_state;
};

/// Runs from the initial data (or from start) to t_end; failures truncate the trajectory.
Trajectory run(const StageConfig& c, std::optional<FluidState> start = std::nullopt);

/// Manufactured 1-D-profile solution ρ* = 1 + 0.3cos(x−t), u* = (a sin(x−t), 0).
struct Manufactured {
    double amplitude = 0.5;
    [[nodiscard]] double rho(double t, double x) const { return 1.0 + 0.3 * std::cos(x - t); }
    [[nodiscard]] double u(double t, double x) const { return amplitude * std::sin(x - t); }
    [[nodiscard]] Field rho_field(const Grid& g, double t) const;
    [[nodiscard]] VecField u_field(const Grid& g, double t) const;
    [[nodiscard]] InitialData initial(int d) const;
    /// Forcing that makes (ρ*, u*) solve the regularized system with the same kernels.
    [[nodiscard]] Forcing forcing(const Grid& g, const Params& p, const SolverOptions& o) const;
};

}  // namespace nslab
