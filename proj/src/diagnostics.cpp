#include "nslab/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <optional>
#include <stdexcept>

#include "nslab/analysis_ops.hpp"
#include "nslab/errors.hpp"
#include "nslab/spectral.hpp"

namespace nslab {

namespace {

Field power(const Field& f, double m) {
    Field out(f.grid());
    for (std::size_t i = 0; i < f.size(); ++i) out[i] = std::pow(std::max(f[i], 0.0), m);
    return out;
}

Field coefficient_A(const Field& rho, const Params& p, const SolverOptions& o) {
    Field a = mollify_maybe(rho, o.delta_kernel, p.delta);
    a += p.delta;
    return a;
}

VecField coefficient_B(const Field& rho, const VecField& u, const Params& p, const SolverOptions& o) {
    const VecField ue = mollify_maybe(u, o.eps_kernel, p.eps);
    VecField flux(rho.grid());
    for (int c = 0; c < ue.dim(); ++c) flux[c] = spectral::dealiased_product(rho, ue[c]);
    return mollify_maybe(flux, o.delta_kernel, p.delta);
}

double squared_l2(const Field& f) {
    double s = 0.0;
    for (double v : f.raw()) s += v * v;
    return s * f.grid().cell_volume();
}

}  // namespace

EnergyTerms energy_terms(const FluidState& s, const Params& p, const SolverOptions& o, const Forcing& f) {
    const Grid& g = s.grid();
    EnergyTerms e;
    e.mass = s.rho.integral();
    const Field A = coefficient_A(s.rho, p, o);
    Field u2(g);
    for (int c = 0; c < g.dim; ++c) u2 += hadamard(s.u[c], s.u[c]);
    e.kinetic = 0.5 * hadamard(A, u2).integral();
    e.internal = internal_energy(s.rho, p).integral();
    e.dissipation = stress_dissipation(s.u, p);
    if (p.k != 0.0) {
        const Field rm = power(s.rho, p.m);
        double k1 = 0.0;
        for (std::size_t i = 0; i < rm.size(); ++i) k1 += rm[i] * internal_energy_derivative(s.rho[i], p);
        e.damping = p.k * k1 * g.cell_volume();
        e.damping += 0.5 * p.k * hadamard(mollify_maybe(rm, o.delta_kernel, p.delta), u2).integral();
    }
    if (f.momentum) e.work += f.momentum(s.t).dot_integral(s.u);
    if (f.mass) {
        const Field src = f.mass(s.t);
        e.work += 0.5 * hadamard(mollify_maybe(src, o.delta_kernel, p.delta), u2).integral();
        double w = 0.0;
        for (std::size_t i = 0; i < src.size(); ++i) w += internal_energy_derivative(s.rho[i], p) * src[i];
        e.work += w * g.cell_volume();
    }
    return e;
}

double rho_log_w(const Field& rho, const Field& w) {
    double s = 0.0;
    for (std::size_t i = 0; i < rho.size(); ++i) {
        if (rho[i] == 0.0) continue;
        if (w[i] <= 0.0) return std::numeric_limits<double>::infinity();
        s += rho[i] * std::abs(std::log(w[i]));
    }
    return s * rho.grid().cell_volume();
}

std::vector<LedgerRow> energy_ledger(const Trajectory& tr) {
    std::vector<LedgerRow> rows;
    rows.reserve(tr.snapshots.size());
    double E0 = 0.0, prev_t = 0.0, prev_mass = 0.0;
    for (std::size_t j = 0; j < tr.snapshots.size(); ++j) {
        const Snapshot& snap = tr.snapshots[j];
        const FluidState& s = snap.state;
        LedgerRow r;
        r.step = s.step;
        r.t = s.t;
        r.terms = energy_terms(s, tr.params, tr.options, tr.forcing);
        if (j == 0) {
            E0 = r.terms.energy();
        } else {
            const LedgerRow& last = rows.back();
            const double dt = s.t - prev_t;
            r.dissipation_cum = last.dissipation_cum + dt * r.terms.dissipation;
            r.damping_cum = last.damping_cum + dt * r.terms.damping;
            r.work_cum = last.work_cum + dt * r.terms.work;
            r.mass_residual = r.terms.mass - prev_mass + snap.stats.damping_mass - snap.stats.source_mass;
        }
        r.energy_residual = r.terms.energy() - E0 + r.dissipation_cum + r.damping_cum - r.work_cum;
        r.min_w = s.w.min();
        r.max_rho_w = hadamard(s.rho, s.w).max();
        r.rho_logw = rho_log_w(s.rho, s.w);
        prev_t = s.t;
        prev_mass = r.terms.mass;
        rows.push_back(r);
    }
    return rows;
}

Field evf(const FluidState& s, const Params& p, const SolverOptions& o) {
    Field G = spectral::div(s.u) * (2 * p.mu + p.xi);
    G -= mollify_maybe(pressure(s.rho, p), o.eps_kernel, p.eps);
    return G;
}

namespace {

struct EvfPoint {
    Field G, rhs;
};

// Identity terms at snapshot j with ∂_t from snapshots a < b.
EvfPoint evf_point(const Trajectory& tr, std::size_t j, std::size_t a, std::size_t b, int form) {
    const Params& p = tr.params;
    const SolverOptions& o = tr.options;
    const FluidState& s = tr.snapshots[j].state;
    const FluidState& sa = tr.snapshots[a].state;
    const FluidState& sb = tr.snapshots[b].state;
    const Grid& g = s.grid();
    const int d = g.dim;
    const double Dt = sb.t - sa.t;
    const Field A = coefficient_A(s.rho, p, o);
    const VecField B = coefficient_B(s.rho, s.u, p, o);
    VecField X(g);
    std::optional<VecField> f;
    if (tr.forcing.momentum) f = tr.forcing.momentum(s.t);
    if (form == 1) {
        for (int c = 0; c < d; ++c) {
            X[c] = spectral::dealiased_product(A, (sb.u[c] - sa.u[c]) * (1.0 / Dt));
            const VecField gu = spectral::grad(s.u[c]);
            Field adv(g);
            for (int i = 0; i < d; ++i) adv += hadamard(B[i], gu[i]);
            X[c] += spectral::dealias(adv);
        }
    } else if (form == 2) {
        const Field Aa = coefficient_A(sa.rho, p, o), Ab = coefficient_A(sb.rho, p, o);
        Field damp(g), src(g);
        if (p.k != 0.0) damp = mollify_maybe(power(s.rho, p.m), o.delta_kernel, p.delta) * p.k;
        if (tr.forcing.mass) src = mollify_maybe(tr.forcing.mass(s.t), o.delta_kernel, p.delta);
        for (int c = 0; c < d; ++c) {
            X[c] = (spectral::dealiased_product(Ab, sb.u[c]) - spectral::dealiased_product(Aa, sa.u[c])) * (1.0 / Dt);
            for (int i = 0; i < d; ++i) X[c] += spectral::derivative(spectral::dealiased_product(B[i], s.u[c]), i);
            X[c] += spectral::dealiased_product(damp - src, s.u[c]);
        }
    } else {
        throw std::invalid_argument("evf form must be 1 or 2");
    }
    if (f)
        for (int c = 0; c < d; ++c) X[c] -= spectral::dealias((*f)[c]);
    EvfPoint out{spectral::dealias(evf(s, p, o)), spectral::inv_laplacian_div(X) * -1.0};
    out.G += -out.G.mean();
    return out;
}

void require_series(const Trajectory& tr, int form) {
    if (form != 1 && form != 2) throw std::invalid_argument("evf form must be 1 or 2");
    if (tr.snapshots.size() < 3) throw std::invalid_argument("trajectory too short for the centered time stencil");
}

}  // namespace

EvfSeries evf_series(const Trajectory& tr, int form) {
    require_series(tr, form);
    EvfSeries out;
    const std::size_t N = tr.snapshots.size();
    for (std::size_t j = 1; j + 1 < N; ++j) {
        EvfPoint pt = evf_point(tr, j, j - 1, j + 1, form);
        out.t.push_back(tr.snapshots[j].state.t);
        out.G.push_back(std::move(pt.G));
        out.rhs.push_back(std::move(pt.rhs));
        out.weight.push_back(0.5 * (tr.snapshots[j + 1].state.t - tr.snapshots[j - 1].state.t));
    }
    return out;
}

double evf_identity_residual(const Trajectory& tr, int form) {
    const EvfSeries s = evf_series(tr, form);
    double acc = 0.0;
    for (std::size_t j = 0; j < s.t.size(); ++j) acc += s.weight[j] * squared_l2(s.G[j] - s.rhs[j]);
    return std::sqrt(acc);
}

double evf_series_distance(const EvfSeries& a, const EvfSeries& b) {
    if (a.t.size() != b.t.size()) throw std::invalid_argument("evf series lengths differ");
    double acc = 0.0;
    for (std::size_t j = 0; j < a.t.size(); ++j) acc += a.weight[j] * squared_l2(a.rhs[j] - b.rhs[j]);
    return std::sqrt(acc);
}

std::vector<double> evf_residual_per_snapshot(const Trajectory& tr, int form) {
    const std::size_t N = tr.snapshots.size();
    if (form != 1 && form != 2) throw std::invalid_argument("evf form must be 1 or 2");
    if (N < 2) return std::vector<double>(N, 0.0);
    std::vector<double> out;
    for (std::size_t j = 0; j < N; ++j) {
        const std::size_t a = j == 0 ? 0 : j - 1, b = j + 1 == N ? j : j + 1;
        const EvfPoint pt = evf_point(tr, j, a, b, form);
        out.push_back(std::sqrt(squared_l2(pt.G - pt.rhs)));
    }
    return out;
}

namespace {

struct OffsetStencil {
    std::vector<std::size_t> offset;  // flat lattice offsets
    std::vector<double> weight;       // K_h at the offset
    double l1 = 0.0;                  // ‖K_h‖_{L1} over the full torus
};

constexpr double kStencilFloor = 1e-6;
constexpr double kMaxExcludedMass = 1e-3;

OffsetStencil offset_stencil(const Grid& g, double h) {
    if (!(h > 0)) throw std::invalid_argument("kernel width h must be positive");
    const double kmax = kh_value(0.0, h, g.dim);
    OffsetStencil st;
    double total = 0.0, excluded = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) {
        const double k = kh_value(g.torus_norm(i), h, g.dim);
        total += k;
        if (k < kStencilFloor * kmax) {
            excluded += k;
            continue;
        }
        st.offset.push_back(i);
        st.weight.push_back(k);
    }
    if (excluded > kMaxExcludedMass * total)
        throw NumericalError("kernel stencil truncation drops more than 1e-3 of the kernel mass");
    st.l1 = total * g.cell_volume();
    return st;
}

// Σ_z K(z) Σ_x F(x, x+z) spacing^{2d}
template <class F>
double double_sum(const Grid& g, const OffsetStencil& st, F&& pair) {
    const std::size_t n = std::size_t(g.n);
    double acc = 0.0;
    for (std::size_t s = 0; s < st.offset.size(); ++s) {
        const std::size_t o = st.offset[s];
        double inner = 0.0;
        if (g.dim == 1) {
            for (std::size_t x = 0; x < n; ++x) inner += pair(x, (x + o) % n);
        } else {
            const std::size_t oa = o / n, ob = o % n;
            for (std::size_t i = 0; i < n; ++i) {
                const std::size_t row = ((i + oa) % n) * n;
                for (std::size_t j = 0; j < n; ++j) inner += pair(i * n + j, row + (j + ob) % n);
            }
        }
        acc += st.weight[s] * inner;
    }
    return acc * g.cell_volume() * g.cell_volume();
}

}  // namespace

double kolmogorov_weighted(const Field& rho, const Field& w, double h, double sigma, bool normalized) {
    if (!(sigma > 0)) throw std::invalid_argument("σ must be positive");
    const Grid& g = rho.grid();
    const OffsetStencil st = offset_stencil(g, h);
    const double v = double_sum(g, st, [&](std::size_t x, std::size_t y) {
        return smoothed_abs(rho[x] - rho[y], sigma) * w[x];
    });
    return normalized ? v / st.l1 : v;
}

double kolmogorov_G(const Field& rho, const Field& w, double h, double sigma, double k, double m) {
    if (!(sigma > 0)) throw std::invalid_argument("σ must be positive");
    const Grid& g = rho.grid();
    const OffsetStencil st = offset_stencil(g, h);
    const Field rm = power(rho, m);
    return k * double_sum(g, st, [&](std::size_t x, std::size_t y) {
        return (rm[x] - rm[y]) * smoothed_sign(rho[x] - rho[y], sigma) * w[x];
    });
}

double kolmogorov_plain(const std::vector<Field>& seq, double h, double p) {
    if (seq.empty()) throw std::invalid_argument("kolmogorov_plain needs a nonempty sequence");
    double best = 0.0;
    for (const Field& f : seq) {
        const OffsetStencil st = offset_stencil(f.grid(), h);
        const double v = double_sum(f.grid(), st, [&](std::size_t x, std::size_t y) {
            return std::pow(std::abs(f[x] - f[y]), p);
        });
        best = std::max(best, v / st.l1);
    }
    return best;
}

WeightRemovalSplit weight_removal_split(const Field& rho, const Field& w, double h, double zeta) {
    if (!(zeta > 0 && zeta < 1)) throw std::invalid_argument("ζ must lie in (0, 1)");
    const Grid& g = rho.grid();
    const OffsetStencil st = offset_stencil(g, h);
    const double inv = 1.0 / st.l1;
    WeightRemovalSplit r;
    r.region1 = inv * double_sum(g, st, [&](std::size_t x, std::size_t y) {
        return (w[x] > zeta || w[y] > zeta) ? std::abs(rho[x] - rho[y]) : 0.0;
    });
    r.region2 = inv * double_sum(g, st, [&](std::size_t x, std::size_t y) {
        return (w[x] <= zeta && w[y] <= zeta) ? std::abs(rho[x] - rho[y]) : 0.0;
    });
    r.total = r.region1 + r.region2;
    r.plain = inv * double_sum(g, st, [&](std::size_t x, std::size_t y) { return std::abs(rho[x] - rho[y]); });
    r.I1_bound = inv / zeta * double_sum(g, st, [&](std::size_t x, std::size_t y) {
        return (w[x] > zeta || w[y] > zeta) ? std::abs(rho[x] - rho[y]) * (w[x] + w[y]) : 0.0;
    });
    r.I2_bound = 2.0 * rho_log_w(rho, w) / std::abs(std::log(zeta));
    if (r.region2 > r.I2_bound * (1 + 1e-12))
        throw NumericalError("weight_removal_split: I2 exceeds 2∫ρ|log w|/|log ζ|");
    return r;
}

RegularizationDefect regularization_defect(const std::vector<Field>& rho, const std::vector<VecField>& u,
                                           double dt, const std::vector<double>& eta, double ct, double cx) {
    if (eta.size() < 3) throw std::invalid_argument("regularization_defect needs at least 3 η values");
    if (rho.size() != u.size() || rho.empty()) throw std::invalid_argument("density and velocity series differ");
    const long N = long(rho.size());
    const double duration = dt * double(N - 1);
    RegularizationDefect out;
    out.eta = eta;
    for (double e : eta) {
        const double et = ct * e, ex = cx * e;
        const long reach = et > 0 ? long(std::ceil(4 * et / dt)) : 0;
        if (4 * et > duration) throw std::invalid_argument("trajectory too short for the time mollifier support");
        std::vector<double> ker(std::size_t(2 * reach + 1), 1.0);
        double ks = 0.0;
        for (long l = -reach; l <= reach; ++l) {
            const double v = reach == 0 ? 1.0 : std::exp(-0.5 * std::pow(double(l) * dt / et, 2));
            ker[std::size_t(l + reach)] = v;
            ks += v;
        }
        for (double& v : ker) v /= ks;
        double defect = 0.0;
        for (long j = 0; j < N; ++j) {
            VecField avg(u[0].grid());
            for (long l = -reach; l <= reach; ++l) {
                long idx = j + l;
                if (idx < 0) idx = -idx;
                if (idx > N - 1) idx = 2 * (N - 1) - idx;
                avg += u[std::size_t(idx)] * ker[std::size_t(l + reach)];
            }
            const VecField diff = u[std::size_t(j)] - mollify_maybe(avg, KernelKind::GaussianPeriodized, ex);
            const double tw = (j == 0 || j == N - 1) && N > 1 ? 0.5 * dt : dt;
            defect += tw * hadamard(rho[std::size_t(j)], diff.magnitude()).integral();
        }
        out.defect.push_back(N == 1 ? defect / dt : defect);
    }
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    int cnt = 0;
    for (std::size_t i = 0; i < eta.size(); ++i) {
        if (!(out.defect[i] > 0)) continue;
        const double lx = std::log(eta[i]), ly = std::log(out.defect[i]);
        sx += lx, sy += ly, sxx += lx * lx, sxy += lx * ly;
        ++cnt;
    }
    if (cnt < 2) {
        out.theta = std::numeric_limits<double>::quiet_NaN();
        return out;
    }
    out.theta = (cnt * sxy - sx * sy) / (cnt * sxx - sx * sx);
    if (!(out.theta > 0)) throw NumericalError("regularization_defect: fitted exponent is not positive");
    return out;
}

RegularizationDefect regularization_defect(const Trajectory& tr, const std::vector<double>& eta, double ct,
                                           double cx) {
    std::vector<Field> rho;
    std::vector<VecField> u;
    for (const Snapshot& s : tr.snapshots) {
        rho.push_back(s.state.rho);
        u.push_back(s.state.u);
    }
    const double dt = tr.snapshots.size() > 1 ? tr.snapshots[1].state.t - tr.snapshots[0].state.t : tr.options.dt;
    return regularization_defect(rho, u, dt, eta, ct, cx);
}

double BumpProfile::value(double t) const {
    const double s = t / t_c;
    if (s < 0 || s >= 1) return 0.0;
    return std::exp(1.0 - 1.0 / (1.0 - s * s));
}

double BumpProfile::derivative(double t) const {
    const double s = t / t_c;
    if (s < 0 || s >= 1) return 0.0;
    const double q = 1.0 - s * s;
    return value(t) * (-2.0 * s / t_c) / (q * q);
}

BogovskiiTerms bogovskii_functional(const Trajectory& tr, const BumpProfile& psi) {
    if (tr.snapshots.size() < 2) throw std::invalid_argument("trajectory too short for the Bogovskii functional");
    const double t_end = tr.snapshots.back().state.t;
    if (!(psi.t_c > 0) || psi.t_c >= t_end) throw std::invalid_argument("ψ support must end before t_end");
    const Params& p = tr.params;
    const SolverOptions& o = tr.options;
    BogovskiiTerms r;
    const std::size_t N = tr.snapshots.size();
    for (std::size_t j = 0; j < N; ++j) {
        const FluidState& s = tr.snapshots[j].state;
        const double tw = 0.5 * ((j + 1 < N ? tr.snapshots[j + 1].state.t : s.t) - (j > 0 ? tr.snapshots[j - 1].state.t : s.t));
        const double ps = psi.value(s.t), dps = psi.derivative(s.t);
        if (ps == 0.0 && dps == 0.0) continue;
        const Grid& g = s.grid();
        const int d = g.dim;
        const Field gfield = spectral::inv_laplacian(s.rho).field * -1.0;
        const VecField gg = spectral::grad(gfield);
        const TensorField H = spectral::gradient_tensor(gg);
        const TensorField gu = spectral::gradient_tensor(s.u);
        const Field p_eps = mollify_maybe(pressure(s.rho, p), o.eps_kernel, p.eps);
        const Field A = coefficient_A(s.rho, p, o);
        const VecField B = coefficient_B(s.rho, s.u, p, o);
        const VecField ue = mollify_maybe(s.u, o.eps_kernel, p.eps);

        VecField Au(g);
        for (int c = 0; c < d; ++c) Au[c] = hadamard(A, s.u[c]);

        // ∂_t g = Δ^{-1}(−Div(ρu_ε) − kρ^m + s)
        VecField flux(g);
        for (int c = 0; c < d; ++c) flux[c] = hadamard(s.rho, ue[c]);
        Field src = spectral::div(flux);
        Field rm(g);
        if (p.k != 0.0) {
            rm = power(s.rho, p.m);
            src += rm * p.k;
        }
        std::optional<Field> smass;
        if (tr.forcing.mass) {
            smass = tr.forcing.mass(s.t);
            src -= *smass;
        }
        const VecField grad_minus_dtg = spectral::grad(spectral::inv_laplacian(src).field * -1.0);

        double i2 = 0.0, i3 = 0.0;
        for (int a = 0; a < d; ++a)
            for (int b = 0; b < d; ++b) {
                i2 += hadamard(gu.at(a, b), H.at(a, b)).integral();
                i3 += hadamard(hadamard(s.u[a], B[b]), H.at(a, b)).integral();
            }

        if (j == 0) r.I4 -= ps * Au.dot_integral(gg);
        r.lhs += tw * ps * hadamard(p_eps, s.rho).integral();
        r.I0 += tw * ps * s.rho.mean() * p_eps.integral();
        r.I1 += tw * ps * (p.mu + p.xi) * hadamard(s.rho, spectral::div(s.u)).integral();
        r.I2 += tw * ps * p.mu * i2;
        r.I3 -= tw * ps * i3;
        r.I4 += tw * (-dps * Au.dot_integral(gg) + ps * Au.dot_integral(grad_minus_dtg));
        if (p.k != 0.0) {
            const Field rmd = mollify_maybe(rm, o.delta_kernel, p.delta);
            VecField v(g);
            for (int c = 0; c < d; ++c) v[c] = hadamard(rmd, s.u[c]);
            r.I5 += tw * ps * p.k * v.dot_integral(gg);
        }
        if (smass) {
            const Field sd = mollify_maybe(*smass, o.delta_kernel, p.delta);
            VecField v(g);
            for (int c = 0; c < d; ++c) v[c] = hadamard(sd, s.u[c]);
            r.Is += tw * ps * v.dot_integral(gg);
        }
        if (tr.forcing.momentum) r.If += tw * ps * tr.forcing.momentum(s.t).dot_integral(gg);
    }
    r.rhs = r.I0 + r.I1 + r.I2 + r.I3 + r.I4 + r.I5 - r.Is - r.If;
    r.residual = r.lhs != 0.0 ? std::abs(r.lhs - r.rhs) / std::abs(r.lhs) : std::abs(r.rhs);
    return r;
}

double lemma_alpha(const LemmaExponents& e) {
    auto inv = [](double q) {
        if (!(q >= 1)) throw std::invalid_argument("lemma exponents must lie in [1, ∞]");
        return std::isinf(q) ? 0.0 : 1.0 / q;
    };
    const double a = inv(e.qp) + inv(e.qbar), b = inv(e.q) + inv(e.qbarp);
    const bool branch1 = a < 1 && 1 < b, branch2 = a > 1 && 1 > b;
    if (!branch1 && !branch2) throw std::invalid_argument("exponent relation 1/q′ + 1/q̄ < 1 < 1/q + 1/q̄′ (or reversed) violated");
    return (1 - a) / (b - a);
}

namespace {

void check_series(std::size_t nt) {
    if (nt < 8 || (nt & (nt - 1)) != 0) throw std::invalid_argument("time samples must be a power of two >= 8");
}

// Applies an even space-time symbol m(ω, |k|) by FFT in t and x.
std::vector<Field> apply_spacetime(const std::vector<Field>& f, double period,
                                   const std::function<std::complex<double>(double, double)>& symbol) {
    const std::size_t nt = f.size();
    check_series(nt);
    const Grid& g = f[0].grid();
    const Grid tg(1, int(nt));
    std::vector<Spectrum> sp;
    for (const Field& s : f) sp.push_back(fft::forward(s));
    Spectrum line(nt);
    for (std::size_t k = 0; k < g.size(); ++k) {
        for (std::size_t j = 0; j < nt; ++j) line[j] = sp[j][k];
        fft::forward_inplace(tg, line);
        const auto wk = fft::wavenumber(g, k);
        const double kk = std::sqrt(double(wk[0]) * wk[0] + double(wk[1]) * wk[1]);
        for (std::size_t j = 0; j < nt; ++j) {
            const double om = 2 * std::numbers::pi * tg.signed_index(int(j)) / period;
            line[j] *= symbol(om, kk);
        }
        fft::inverse_inplace(tg, line);
        for (std::size_t j = 0; j < nt; ++j) sp[j][k] = line[j];
    }
    std::vector<Field> out;
    for (const Spectrum& s : sp) out.push_back(fft::inverse(g, s));
    return out;
}

std::vector<Field> components(const SpaceTimeVector& v, int c) {
    std::vector<Field> out;
    for (const VecField& s : v.slices) out.push_back(s[c]);
    return out;
}

double lq_norm(const std::vector<Field>& mag, double period, double q) {
    const double dt = period / double(mag.size());
    if (std::isinf(q)) {
        double m = 0.0;
        for (const Field& f : mag) m = std::max(m, f.max_abs());
        return m;
    }
    double acc = 0.0;
    for (const Field& f : mag)
        for (double v : f.raw()) acc += std::pow(std::abs(v), q);
    return std::pow(acc * dt * mag[0].grid().cell_volume(), 1.0 / q);
}

std::vector<Field> magnitudes(const std::vector<std::vector<Field>>& comps) {
    std::vector<Field> out;
    for (std::size_t j = 0; j < comps[0].size(); ++j) {
        Field m(comps[0][j].grid());
        for (const auto& c : comps) m += hadamard(c[j], c[j]);
        for (double& v : m.raw()) v = std::sqrt(v);
        out.push_back(std::move(m));
    }
    return out;
}

// |ξ₀||ξ|^{-1}, zero on the spatial mean mode
std::complex<double> neg_sobolev_dt(double om, double kk) { return kk == 0.0 ? 0.0 : std::abs(om) / kk; }

}  // namespace

SpaceTimeScalar time_derivative(const SpaceTimeScalar& f) {
    check_series(f.slices.size());
    const std::size_t nt = f.slices.size();
    const Grid& g = f.slices[0].grid();
    const Grid tg(1, int(nt));
    SpaceTimeScalar out{f.period, std::vector<Field>(nt, Field(g))};
    Spectrum line(nt);
    for (std::size_t k = 0; k < g.size(); ++k) {
        for (std::size_t j = 0; j < nt; ++j) line[j] = f.slices[j][k];
        fft::forward_inplace(tg, line);
        for (std::size_t j = 0; j < nt; ++j) {
            const double om = 2 * std::numbers::pi * tg.signed_index(int(j)) / f.period;
            line[j] *= j == nt / 2 ? std::complex<double>(0.0) : std::complex<double>(0.0, om);
        }
        fft::inverse_inplace(tg, line);
        for (std::size_t j = 0; j < nt; ++j) out.slices[j][k] = line[j].real();
    }
    return out;
}

SpaceTimeVector time_derivative(const SpaceTimeVector& f) {
    const int d = f.slices.at(0).dim();
    SpaceTimeVector out{f.period, std::vector<VecField>(f.slices.size(), VecField(f.slices[0].grid()))};
    for (int c = 0; c < d; ++c) {
        const SpaceTimeScalar dc = time_derivative(SpaceTimeScalar{f.period, components(f, c)});
        for (std::size_t j = 0; j < f.slices.size(); ++j) out.slices[j][c] = dc.slices[j];
    }
    return out;
}

double spacetime_norm(const SpaceTimeScalar& f, double q) { return lq_norm(f.slices, f.period, q); }

double spacetime_norm(const SpaceTimeVector& f, double q) {
    std::vector<std::vector<Field>> comps;
    for (int c = 0; c < f.slices.at(0).dim(); ++c) comps.push_back(components(f, c));
    return lq_norm(magnitudes(comps), f.period, q);
}

InterpolationCheck interpolation_verifier(const SpaceTimeVector& phi, const SpaceTimeScalar& W,
                                          const LemmaExponents& e, double beta) {
    lemma_alpha(e);
    if (!(beta > 0 && beta < 1)) throw std::invalid_argument("β must lie in (0, 1)");
    if (phi.slices.size() != W.slices.size() || phi.period != W.period)
        throw std::invalid_argument("φ and W must share the space-time grid");
    check_series(phi.slices.size());
    InterpolationCheck r;
    r.beta = beta;
    r.alpha = 1.0 - beta;

    SpaceTimeScalar q{phi.period, {}};
    for (const VecField& s : phi.slices) q.slices.push_back(spectral::inv_laplacian_div(s));
    const SpaceTimeScalar dq = time_derivative(q);
    const double dt = phi.period / double(phi.slices.size());
    for (std::size_t j = 0; j < dq.slices.size(); ++j) r.lhs += dt * hadamard(dq.slices[j], W.slices[j]).integral();

    std::vector<std::vector<Field>> dphi;
    for (int c = 0; c < phi.slices[0].dim(); ++c) dphi.push_back(apply_spacetime(components(phi, c), phi.period, neg_sobolev_dt));
    r.norm_phi = spacetime_norm(phi, e.q);
    r.norm_dphi = lq_norm(magnitudes(dphi), phi.period, e.qp);
    r.norm_W = spacetime_norm(W, e.qbar);
    r.norm_dW = lq_norm(apply_spacetime(W.slices, W.period, neg_sobolev_dt), W.period, e.qbarp);
    const double a = r.alpha;
    r.rhs = std::pow(r.norm_phi, a) * std::pow(r.norm_dphi, 1 - a) * std::pow(r.norm_W, 1 - a) * std::pow(r.norm_dW, a);
    r.ratio = r.rhs > 0 ? std::abs(r.lhs) / r.rhs : 0.0;
    return r;
}

}  // namespace nslab
