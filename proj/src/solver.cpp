#include "nslab/solver.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include "nslab/analysis_ops.hpp"
#include "nslab/errors.hpp"
#include "nslab/gmres.hpp"
#include "nslab/spectral.hpp"

namespace nslab {

void SolverOptions::validate() const {
    auto require = [](bool ok, const char* what) {
        if (!ok) throw ConfigError(std::string("solver option invalid: ") + what);
    };
    require(dt > 0 && std::isfinite(dt), "dt > 0");
    require(t_end > 0 && std::isfinite(t_end), "t_end > 0");
    require(tol_fp > 0, "tol_fp > 0");
    require(max_fp_iter >= 1, "max_fp_iter >= 1");
    require(relaxation > 0 && relaxation <= 1, "relaxation in (0, 1]");
    require(interp_order >= 2 && interp_order <= 8 && interp_order % 2 == 0, "interp_order even in [2, 8]");
    require(cfl_max > 0, "cfl_max > 0");
    require(gmres_tol > 0 && gmres_max_iter >= 1, "gmres_tol > 0, gmres_max_iter >= 1");
    require(snapshot_stride >= 1, "snapshot_stride >= 1");
}

Field mollify_maybe(const Field& f, KernelKind kind, double h) {
    if (h == 0.0) return f;
    return mollify(f, KernelSpec{kind, h});
}

VecField mollify_maybe(const VecField& v, KernelKind kind, double h) {
    if (h == 0.0) return v;
    return mollify(v, KernelSpec{kind, h});
}

namespace {

VecField dealiased_products(const Field& a, const VecField& v) {
    VecField out(v.grid());
    for (int c = 0; c < v.dim(); ++c) out[c] = spectral::dealiased_product(a, v[c]);
    return out;
}

VecField advection_coefficient(const Field& rho, const VecField& u_eps, const Params& p, const SolverOptions& o) {
    return mollify_maybe(dealiased_products(rho, u_eps), o.delta_kernel, p.delta);
}

Field mean_coefficient(const Field& rho, const Params& p, const SolverOptions& o) {
    Field a = mollify_maybe(rho, o.delta_kernel, p.delta);
    a += p.delta;
    return a;
}

Vec flatten(const VecField& v) {
    const std::size_t N = v.grid().size();
    Vec out(N * std::size_t(v.dim()));
    for (int c = 0; c < v.dim(); ++c) std::copy(v[c].raw().begin(), v[c].raw().end(), out.begin() + std::ptrdiff_t(std::size_t(c) * N));
    return out;
}

VecField unflatten(const Grid& g, const Vec& x) {
    const std::size_t N = g.size();
    VecField v(g);
    for (int c = 0; c < g.dim; ++c)
        std::copy(x.begin() + std::ptrdiff_t(std::size_t(c) * N), x.begin() + std::ptrdiff_t(std::size_t(c + 1) * N), v[c].raw().begin());
    return v;
}

// −Div S(u) = −μΔu − (μ+ξ)∇div u
VecField neg_div_stress(const VecField& u, const Params& p) {
    const Grid& g = u.grid();
    VecField out(g);
    const Field dv = spectral::div(u);
    for (int c = 0; c < g.dim; ++c) {
        out[c] = spectral::laplacian(u[c]) * (-p.mu);
        out[c] -= spectral::derivative(dv, c) * (p.mu + p.xi);
    }
    return out;
}

// inverse of (Ā/dt − μΔ − (μ+ξ)∇div) mode by mode
VecField spectral_precondition(const VecField& r, double abar_dt, const Params& p) {
    const Grid& g = r.grid();
    const int d = g.dim;
    std::vector<Spectrum> s;
    for (int c = 0; c < d; ++c) s.push_back(fft::forward(r[c]));
    for (std::size_t i = 0; i < g.size(); ++i) {
        auto k = fft::wavenumber(g, i);
        if (fft::is_nyquist(g, i)) k = {0, 0};
        const double kk = double(k[0]) * k[0] + double(k[1]) * k[1];
        const double cT = abar_dt + p.mu * kk, cL = abar_dt + (2 * p.mu + p.xi) * kk;
        if (d == 1) {
            s[0][i] /= cL;
            continue;
        }
        if (kk == 0.0) {
            s[0][i] /= abar_dt;
            s[1][i] /= abar_dt;
            continue;
        }
        const std::complex<double> kd = (double(k[0]) * s[0][i] + double(k[1]) * s[1][i]) / kk;
        const std::complex<double> L0 = double(k[0]) * kd, L1 = double(k[1]) * kd;
        s[0][i] = (s[0][i] - L0) / cT + L0 / cL;
        s[1][i] = (s[1][i] - L1) / cT + L1 / cL;
    }
    VecField out(g);
    for (int c = 0; c < d; ++c) out[c] = fft::inverse(g, s[std::size_t(c)]);
    return out;
}

// x ↦ −Div S(u) + P[B·∇u] + P[Au]/dt in one spectral pass.
class MomentumOperator {
public:
    MomentumOperator(const Grid& g, const Params& p) : g_(g), p_(p), kk_(g.size()), mask_(g.size()) {
        const int kmax = g.n / 3;
        for (int a = 0; a < g.dim; ++a) dk_[std::size_t(a)].resize(g.size());
        for (std::size_t i = 0; i < g.size(); ++i) {
            const auto k = fft::wavenumber(g, i);
            for (int a = 0; a < g.dim; ++a) {
                const int ka = k[std::size_t(a)];
                dk_[std::size_t(a)][i] = ka == -g.n / 2 ? 0.0 : double(ka);
            }
            kk_[i] = double(k[0]) * k[0] + double(k[1]) * k[1];
            mask_[i] = std::abs(k[0]) <= kmax && std::abs(k[1]) <= kmax;
        }
    }

    Vec apply(const Vec& x, const Field& A, const VecField& B, double inv_dt) const {
        const std::size_t N = g_.size();
        const int d = g_.dim;
        std::vector<Spectrum> U(static_cast<std::size_t>(d));
        for (int c = 0; c < d; ++c) {
            Spectrum& s = U[std::size_t(c)];
            s.resize(N);
            for (std::size_t i = 0; i < N; ++i) s[i] = x[std::size_t(c) * N + i];
            fft::forward_inplace(g_, s);
        }
        Spectrum divu(N);
        for (int c = 0; c < d; ++c)
            for (std::size_t i = 0; i < N; ++i) divu[i] += std::complex<double>(0.0, dk_[std::size_t(c)][i]) * U[std::size_t(c)][i];
        Vec out(N * std::size_t(d));
        Spectrum t(N);
        for (int c = 0; c < d; ++c) {
            std::vector<double> phys(N);
            for (std::size_t i = 0; i < N; ++i) phys[i] = A[i] * x[std::size_t(c) * N + i] * inv_dt;
            for (int j = 0; j < d; ++j) {
                for (std::size_t i = 0; i < N; ++i) t[i] = std::complex<double>(0.0, dk_[std::size_t(j)][i]) * U[std::size_t(c)][i];
                fft::inverse_inplace(g_, t);
                for (std::size_t i = 0; i < N; ++i) phys[i] += B[j][i] * t[i].real();
            }
            for (std::size_t i = 0; i < N; ++i) t[i] = phys[i];
            fft::forward_inplace(g_, t);
            for (std::size_t i = 0; i < N; ++i) {
                const std::complex<double> stress = p_.mu * kk_[i] * U[std::size_t(c)][i] -
                    (p_.mu + p_.xi) * std::complex<double>(0.0, dk_[std::size_t(c)][i]) * divu[i];
                t[i] = (mask_[i] ? t[i] : 0.0) + stress;
            }
            fft::inverse_inplace(g_, t);
            for (std::size_t i = 0; i < N; ++i) out[std::size_t(c) * N + i] = t[i].real();
        }
        return out;
    }

private:
    Grid g_;
    Params p_;
    std::array<std::vector<double>, 2> dk_;
    std::vector<double> kk_;
    std::vector<bool> mask_;
};

}  // namespace

DerivedFields derive(const FluidState& s, const Params& p, const SolverOptions& o) {
    DerivedFields d{pressure(s.rho, p), Field(), spectral::gradient_tensor(s.u), Field(), VecField(), Field(), VecField()};
    d.p_eps = mollify_maybe(d.p, o.eps_kernel, p.eps);
    d.Mgrad = maximal(d.grad_u.frobenius());
    d.u_eps = mollify_maybe(s.u, o.eps_kernel, p.eps);
    d.rho_delta = mollify_maybe(s.rho, o.delta_kernel, p.delta);
    d.B = advection_coefficient(s.rho, d.u_eps, p, o);
    return d;
}

double damping_ode(double rho, double k, double m, double dt) {
    if (k == 0.0 || rho <= 0.0) return rho;
    return std::pow(std::pow(rho, 1.0 - m) + k * (m - 1.0) * dt, -1.0 / (m - 1.0));
}

ContinuityResult continuity_step(const Field& rho, const VecField& v, const Params& p, const SolverOptions& o,
                                 double dt, const Field* s0, const Field* s1) {
    const Grid& g = rho.grid();
    if (dt * v.max_abs() > o.cfl_max * g.spacing())
        throw NumericalError("continuity_step: CFL violation (dt·|u_ε| = " + std::to_string(dt * v.max_abs()) +
                             " > cfl_max·spacing)");
    ContinuityResult r{Field(g), departure_points(v, dt, o.interp_order)};
    const Field divv = spectral::div(v);
    const Field divX = interpolate(divv, r.X, o.interp_order, false);
    const Field rhoX = interpolate(rho, r.X, o.interp_order, true);
    Field out(g);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = rhoX[i] * std::exp(-0.5 * dt * (divv[i] + divX[i]));
    const double m0 = rho.integral();
    r.transport_defect = out.integral() - m0;
    if (o.mass_fixer && out.integral() > 0) {
        out *= m0 / out.integral();
        r.mass_fix = -r.transport_defect;
    }
    if (s0 && s1) {
        const Field sX = interpolate(*s0, r.X, o.interp_order, false);
        Field add(g);
        for (std::size_t i = 0; i < out.size(); ++i) add[i] = 0.5 * dt * ((*s1)[i] + sX[i]);
        r.source_mass = add.integral();
        out += add;
    }
    for (std::size_t i = 0; i < out.size(); ++i) {
        if (!(out[i] >= -kRhoTolerance)) throw NumericalError("continuity_step: negative density");
        if (out[i] < 0) out[i] = 0.0;
    }
    const double before = out.integral();
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = damping_ode(out[i], p.k, p.m, dt);
    r.damping_mass = before - out.integral();
    r.rho = std::move(out);
    return r;
}

MomentumResult momentum_fixed_point(const FluidState& s, const Params& p, const SolverOptions& o,
                                    const Forcing& forcing) {
    const Grid& g = s.grid();
    const int d = g.dim;
    const double dt = o.dt;
    const VecField ueps_n = mollify_maybe(s.u, o.eps_kernel, p.eps);

    std::optional<Field> s0, s1;
    if (forcing.mass) {
        s0 = forcing.mass(s.t);
        s1 = forcing.mass(s.t + dt);
    }
    std::optional<VecField> f1;
    if (forcing.momentum) f1 = forcing.momentum(s.t + dt);

    MomentumResult res;
    VecField ut = s.u;
    double prev = INFINITY;
    for (int it = 1; it <= o.max_fp_iter; ++it) {
        const VecField ut_eps = mollify_maybe(ut, o.eps_kernel, p.eps);
        VecField v = (ueps_n + ut_eps) * 0.5;
        ContinuityResult cont = continuity_step(s.rho, v, p, o, dt, s0 ? &*s0 : nullptr, s1 ? &*s1 : nullptr);

        const Field A = mean_coefficient(cont.rho, p, o);
        const VecField B = advection_coefficient(cont.rho, ut_eps, p, o);
        const Field p_eps = mollify_maybe(pressure(cont.rho, p), o.eps_kernel, p.eps);
        const double abar_dt = A.mean() / dt;

        VecField rhs(g);
        for (int c = 0; c < d; ++c) {
            rhs[c] = spectral::dealiased_product(A, s.u[c]) * (1.0 / dt);
            rhs[c] -= spectral::dealias(spectral::derivative(p_eps, c));
            if (f1) rhs[c] += spectral::dealias((*f1)[c]);
        }

        const MomentumOperator mop(g, p);
        const LinearOp op = [&](const Vec& x) { return mop.apply(x, A, B, 1.0 / dt); };
        const LinearOp pre = [&](const Vec& x) { return flatten(spectral_precondition(unflatten(g, x), abar_dt, p)); };

        Vec x = flatten(ut);
        const GmresResult gr = gmres(op, pre, flatten(rhs), x, o.gmres_tol, o.gmres_max_iter);
        res.gmres_iterations += gr.iterations;
        if (!gr.converged && gr.relative_residual > 1e3 * o.gmres_tol)
            throw NumericalError("momentum_fixed_point: linear solve did not converge (relative residual " +
                                 std::to_string(gr.relative_residual) + ")");
        VecField u = unflatten(g, x);
        if (!u.finite()) throw NumericalError("momentum_fixed_point: non-finite velocity");

        const double nu = std::sqrt(ut.dot_integral(ut));
        const VecField du = u - ut;
        const double diff = std::sqrt(du.dot_integral(du));
        res.residuals.push_back(diff);
        res.iterations = it;
        if (diff < o.tol_fp * (1.0 + nu)) {
            res.u = std::move(u);
            res.continuity = std::move(cont);
            res.v_mid = std::move(v);
            return res;
        }
        if (diff > 0.9 * prev) ut = ut + du * o.relaxation;
        else ut = std::move(u);
        prev = diff;
    }
    std::string hist;
    for (double r : res.residuals) hist += " " + std::to_string(r);
    throw NumericalError("momentum_fixed_point: no convergence in " + std::to_string(o.max_fp_iter) +
                         " iterations (residuals:" + hist + "); dt may be too large");
}

Field weight_step(const Field& w, const DeparturePoints& X, const Field& Mgrad, const Params& p, double dt) {
    const Field wX = interpolate(w, X, 4, true);
    const Field MX = interpolate_linear(Mgrad, X);
    Field out(w.grid());
    for (std::size_t i = 0; i < out.size(); ++i)
        out[i] = std::clamp(wX[i] * std::exp(-0.5 * dt * p.Lambda * (Mgrad[i] + MX[i])), 0.0, 1.0);
    return out;
}

Field weight_step(const Field& w, const VecField& u_eps, const Field& Mgrad, const Params& p, double dt, int order) {
    return weight_step(w, departure_points(u_eps, dt, order), Mgrad, p, dt);
}

InitialData default_initial_data(int d, double amplitude) {
    InitialData init;
    init.description = "default";
    if (d == 1) {
        init.rho = [](double x, double) { return 1.0 + 0.3 * std::cos(x); };
        init.u = {[amplitude](double x, double) { return amplitude * std::sin(x); }};
    } else {
        init.rho = [](double x, double y) { return 1.0 + 0.3 * std::cos(x) * std::cos(y); };
        init.u = {[amplitude](double x, double) { return amplitude * std::sin(x); },
                  [amplitude](double, double y) { return amplitude * std::sin(2 * y); }};
    }
    return init;
}

FluidState initial_state(const StageConfig& c) {
    const Grid& g = c.grid;
    if (!c.initial.rho || int(c.initial.u.size()) != g.dim) throw ConfigError("initial data needs ρ0 and d velocity components");
    FluidState s;
    s.rho = Field::from_function(g, c.initial.rho);
    if (!s.rho.finite() || s.rho.min() < 0) throw ConfigError("initial density must be finite and nonnegative");
    s.u = VecField(g);
    for (int k = 0; k < g.dim; ++k) s.u[k] = spectral::dealias(Field::from_function(g, c.initial.u[std::size_t(k)]));
    if (!s.u.finite()) throw ConfigError("initial velocity must be finite");
    s.w = Field(g, 1.0);
    return s;
}

FluidState advance(const FluidState& s, const StageConfig& c, StepStats* stats) {
    const Params& p = c.params;
    const SolverOptions& o = c.options;
    MomentumResult mr = momentum_fixed_point(s, p, o, c.forcing);

    const VecField u_mid = (s.u + mr.u) * 0.5;
    const Field Mgrad = maximal(spectral::gradient_tensor(u_mid).frobenius());

    FluidState next;
    next.t = s.t + o.dt;
    next.step = s.step + 1;
    next.w = weight_step(s.w, mr.continuity.X, Mgrad, p, o.dt);
    next.rho = std::move(mr.continuity.rho);
    next.u = std::move(mr.u);
    if (stats) {
        stats->fp_iterations = mr.iterations;
        stats->fp_residuals = mr.residuals;
        stats->gmres_iterations = mr.gmres_iterations;
        stats->damping_mass = mr.continuity.damping_mass;
        stats->source_mass = mr.continuity.source_mass;
        stats->transport_defect = mr.continuity.transport_defect;
        stats->mass_fix = mr.continuity.mass_fix;
    }
    return next;
}

Trajectory run(const StageConfig& c, std::optional<FluidState> start) {
    c.params.validate(c.grid.dim);
    c.options.validate();
    Trajectory tr{c.grid, c.params, c.options, c.forcing, {}, true, {}, {}};
    FluidState s = start ? *start : initial_state(c);
    tr.snapshots.push_back({s, {}});
    const long total = std::lround(c.options.t_end / c.options.dt);
    StepStats acc;
    while (s.step < total) {
        StepStats st;
        try {
            s = advance(s, c, &st);
        } catch (const NumericalError& e) {
            tr.ok = false;
            tr.failure = e.what();
            break;
        }
        // mass bookkeeping sums over the steps between snapshots
        acc.fp_iterations = std::max(acc.fp_iterations, st.fp_iterations);
        acc.fp_residuals = st.fp_residuals;
        acc.gmres_iterations += st.gmres_iterations;
        acc.damping_mass += st.damping_mass;
        acc.source_mass += st.source_mass;
        acc.transport_defect += st.transport_defect;
        acc.mass_fix += st.mass_fix;
        if (s.step % c.options.snapshot_stride == 0 || s.step == total) {
            tr.snapshots.push_back({s, acc});
            acc = StepStats{};
        }
    }
    tr.final_state = s;
    return tr;
}

Field Manufactured::rho_field(const Grid& g, double t) const {
    return Field::from_function(g, [&](double x, double) { return rho(t, x); });
}

VecField Manufactured::u_field(const Grid& g, double t) const {
    VecField u(g);
    u[0] = Field::from_function(g, [&](double x, double) { return this->u(t, x); });
    return u;
}

InitialData Manufactured::initial(int d) const {
    InitialData init;
    init.description = "manufactured";
    const double a = amplitude;
    init.rho = [](double x, double) { return 1.0 + 0.3 * std::cos(x); };
    init.u.push_back([a](double x, double) { return a * std::sin(x); });
    if (d == 2) init.u.push_back([](double, double) { return 0.0; });
    return init;
}

Forcing Manufactured::forcing(const Grid& g, const Params& p, const SolverOptions& o) const {
    const Manufactured ms = *this;
    Forcing f;
    f.mass = [ms, g, p, o](double t) {
        const Field rho = ms.rho_field(g, t);
        const VecField ue = mollify_maybe(ms.u_field(g, t), o.eps_kernel, p.eps);
        Field s = Field::from_function(g, [&](double x, double) { return 0.3 * std::sin(x - t); });
        VecField flux(g);
        for (int c = 0; c < g.dim; ++c) flux[c] = hadamard(rho, ue[c]);
        s += spectral::div(flux);
        for (std::size_t i = 0; i < s.size(); ++i) s[i] += p.k * std::pow(rho[i], p.m);
        return s;
    };
    f.momentum = [ms, g, p, o](double t) {
        const Field rho = ms.rho_field(g, t);
        const VecField u = ms.u_field(g, t);
        const VecField ue = mollify_maybe(u, o.eps_kernel, p.eps);
        const Field A = mean_coefficient(rho, p, o);
        const VecField B = advection_coefficient(rho, ue, p, o);
        const Field p_eps = mollify_maybe(pressure(rho, p), o.eps_kernel, p.eps);
        VecField dtu(g);
        dtu[0] = Field::from_function(g, [&](double x, double) { return -ms.amplitude * std::cos(x - t); });
        VecField out = neg_div_stress(u, p);
        for (int c = 0; c < g.dim; ++c) {
            Field adv(g);
            const VecField gu = spectral::grad(u[c]);
            for (int j = 0; j < g.dim; ++j) adv += hadamard(B[j], gu[j]);
            out[c] += spectral::dealias(adv);
            out[c] += spectral::dealiased_product(A, dtu[c]);
            out[c] += spectral::derivative(p_eps, c);
        }
        return out;
    };
    return f;
}

}  // namespace nslab
