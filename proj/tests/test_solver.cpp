#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>

#include "nslab/analysis_ops.hpp"
#include "nslab/checkpoint.hpp"
#include "nslab/diagnostics.hpp"
#include "nslab/errors.hpp"
#include "nslab/gmres.hpp"
#include "nslab/interp.hpp"
#include "nslab/solver.hpp"
#include "nslab/spectral.hpp"

using namespace nslab;

namespace {

StageConfig default_config(int d, int n, double dt, double t_end) {
    StageConfig c;
    c.grid = Grid(d, n);
    c.params = Params::defaults(d);
    c.options.dt = dt;
    c.options.t_end = t_end;
    c.initial = default_initial_data(d);
    return c;
}

StageConfig rest_config(int d, int n, double rho0, double t_end) {
    StageConfig c = default_config(d, n, 1e-3, t_end);
    c.initial.rho = [rho0](double, double) { return rho0; };
    c.initial.u.assign(std::size_t(d), [](double, double) { return 0.0; });
    return c;
}

// RK4 on ρ' = −kρ^m with many substeps.
double rk4_damping(double rho, double k, double m, double t, int steps) {
    const double h = t / steps;
    auto f = [&](double r) { return -k * std::pow(r, m); };
    for (int i = 0; i < steps; ++i) {
        const double a = f(rho), b = f(rho + 0.5 * h * a), c = f(rho + 0.5 * h * b), d = f(rho + h * c);
        rho += h / 6 * (a + 2 * b + 2 * c + d);
    }
    return rho;
}

double l2_error(const VecField& a, const VecField& b) {
    const VecField d = a - b;
    return std::sqrt(d.dot_integral(d));
}

}  // namespace

TEST_CASE("damping ODE closed form matches RK4") {
    for (double rho : {0.2, 1.0, 1.7})
        for (double k : {0.0, 0.1, 2.0}) {
            const double exact = damping_ode(rho, k, 4.0, 0.7);
            CHECK(exact == doctest::Approx(rk4_damping(rho, k, 4.0, 0.7, 20000)).epsilon(1e-12));
        }
    CHECK(damping_ode(0.0, 0.1, 4.0, 1.0) == 0.0);
}

TEST_CASE("GMRES solves a small nonsymmetric system") {
    const int n = 30;
    auto A = [n](const Vec& x) {
        Vec y(static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i) {
            y[std::size_t(i)] = 4.0 * x[std::size_t(i)];
            if (i > 0) y[std::size_t(i)] -= 1.5 * x[std::size_t(i - 1)];
            if (i + 1 < n) y[std::size_t(i)] -= 0.5 * x[std::size_t(i + 1)];
        }
        return y;
    };
    Vec xs(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) xs[std::size_t(i)] = std::sin(i + 1.0);
    const Vec b = A(xs);
    Vec x(std::size_t(n), 0.0);
    const auto id = [](const Vec& v) { return v; };
    const GmresResult r = gmres(A, id, b, x, 1e-13, 200, 10);
    CHECK(r.converged);
    for (int i = 0; i < n; ++i) CHECK(x[std::size_t(i)] == doctest::Approx(xs[std::size_t(i)]).epsilon(1e-10));
}

TEST_CASE("Lagrange interpolation reproduces low-degree trigonometric data and clipping bounds") {
    const Grid g(1, 64);
    const Field f = Field::from_function(g, [](double x, double) { return std::sin(x) + 0.5 * std::cos(3 * x); });
    for (double x : {0.1, 1.234, 3.0, 6.2}) {
        const double exact = std::sin(x) + 0.5 * std::cos(3 * x);
        CHECK(std::abs(interpolate_at(f, x, 0, 8, false) - exact) < 1e-7);
        CHECK(std::abs(interpolate_at(f, x, 0, 4, false) - exact) < 2e-4);
    }
    const Field step = Field::from_function(g, [](double x, double) { return x < 3.0 ? 0.0 : 1.0; });
    for (int i = 0; i < 640; ++i) {
        const double v = interpolate_at(step, 0.01 * i, 0, 4, true);
        CHECK(v >= 0.0);
        CHECK(v <= 1.0);
    }
    CHECK_THROWS_AS(interpolate_at(f, 0.3, 0, 3, false), std::invalid_argument);
}

TEST_CASE("continuity step: rest state follows the damping law, k = 0 leaves ρ unchanged") {
    const Grid g(1, 64);
    const Params p = Params::defaults(1);
    SolverOptions o;
    const Field rho(g, 1.4);
    const VecField zero(g);
    const ContinuityResult r = continuity_step(rho, zero, p, o, 0.01);
    CHECK((r.rho - Field(g, damping_ode(1.4, p.k, p.m, 0.01))).max_abs() < 1e-15);
    CHECK(r.rho[3] == doctest::Approx(std::pow(std::pow(1.4, -3.0) + 3 * p.k * 0.01, -1.0 / 3)).epsilon(1e-14));
    Params p0 = p;
    p0.k = 0.0;
    const Field bumpy = Field::from_function(g, [](double x, double) { return 1 + 0.3 * std::cos(x); });
    CHECK((continuity_step(bumpy, zero, p0, o, 0.01).rho - bumpy).max_abs() < 1e-15);
}

TEST_CASE("continuity step rejects CFL violations") {
    const Grid g(1, 64);
    VecField v(g);
    v[0] = Field(g, 10.0);
    SolverOptions o;
    CHECK_THROWS_AS(continuity_step(Field(g, 1.0), v, Params::defaults(1), o, 0.1), NumericalError);
}

TEST_CASE("rest state: ρ tracks the closed-form ODE and u stays zero") {
    for (int d : {1, 2}) {
        const StageConfig c = rest_config(d, d == 1 ? 64 : 16, 1.3, d == 1 ? 1.0 : 0.2);
        const Trajectory tr = run(c);
        REQUIRE(tr.ok);
        double rho_err = 0, umax = 0, prevE = INFINITY;
        for (const Snapshot& s : tr.snapshots) {
            const double exact = rk4_damping(1.3, c.params.k, c.params.m, s.state.t, 2000);
            rho_err = std::max(rho_err, (s.state.rho - Field(c.grid, exact)).max_abs());
            umax = std::max(umax, s.state.u.max_abs());
            const double E = energy_terms(s.state, c.params, c.options).energy();
            CHECK(E <= prevE);
            prevE = E;
        }
        CHECK(rho_err < 1e-6);
        CHECK(umax < 1e-12);
    }
}

TEST_CASE("default 1-D run: mass balance, energy decay, weight bounds") {
    const StageConfig c = default_config(1, 128, 1e-3, 0.3);
    const Trajectory tr = run(c);
    REQUIRE(tr.ok);
    const double m0 = tr.snapshots[0].state.rho.integral();
    const double rho0max = tr.snapshots[0].state.rho.max();
    const auto rows = energy_ledger(tr);
    for (std::size_t i = 1; i < rows.size(); ++i) {
        // independent recount of the per-step mass budget
        const double dm = tr.snapshots[i].state.rho.integral() - tr.snapshots[i - 1].state.rho.integral();
        CHECK(std::abs(dm + tr.snapshots[i].stats.damping_mass) <= 1e-8 * m0);
        CHECK(rows[i].terms.energy() - rows[i - 1].terms.energy() <= 1e-8);
        const FluidState& s = tr.snapshots[i].state;
        CHECK(s.w.min() >= 0.0);
        CHECK(s.w.max() <= 1.0 + 1e-12);
        CHECK(hadamard(s.rho, s.w).max() <= rho0max * (1 + 1e-6));
        CHECK(s.rho.min() >= -1e-12);
        CHECK(tr.snapshots[i].stats.fp_iterations <= 8);
    }
}

TEST_CASE("fixed-point iteration: bounded count under the gradient CFL and failure reporting") {
    StageConfig c = default_config(1, 64, 2e-3, 0.02);
    c.initial = default_initial_data(1, 0.5);
    const FluidState s = initial_state(c);
    CHECK(c.options.dt * spectral::gradient_tensor(s.u).frobenius().max_abs() <= 0.25);
    const MomentumResult r = momentum_fixed_point(s, c.params, c.options);
    CHECK(r.iterations <= 8);
    CHECK(r.residuals.size() == std::size_t(r.iterations));

    SolverOptions strict = c.options;
    strict.max_fp_iter = 1;
    strict.tol_fp = 1e-300;
    try {
        momentum_fixed_point(s, c.params, strict);
        FAIL("expected non-convergence");
    } catch (const NumericalError& e) {
        CHECK(std::string(e.what()).find("residuals") != std::string::npos);
    }
}

TEST_CASE("manufactured solution converges at first order in dt") {
    const Manufactured ms;
    double prev = 0;
    for (double dt : {2e-3, 1e-3, 5e-4}) {
        StageConfig c;
        c.grid = Grid(1, 64);
        c.params = Params::defaults(1);
        c.options.dt = dt;
        c.options.t_end = 0.25;
        c.initial = ms.initial(1);
        c.forcing = ms.forcing(c.grid, c.params, c.options);
        const Trajectory tr = run(c);
        REQUIRE(tr.ok);
        const double err = l2_error(tr.final_state.u, ms.u_field(c.grid, tr.final_state.t));
        const double rerr = (tr.final_state.rho - ms.rho_field(c.grid, tr.final_state.t)).max_abs();
        CHECK(rerr < 1e-3);
        if (prev > 0) {
            CHECK(prev / err > 1.7);
            CHECK(prev / err < 2.3);
        }
        prev = err;
    }
    // refining space at fixed dt does not change the error
    StageConfig a, b;
    for (auto* c : {&a, &b}) {
        c->params = Params::defaults(1);
        c->options.dt = 1e-3;
        c->options.t_end = 0.1;
        c->initial = ms.initial(1);
    }
    a.grid = Grid(1, 32);
    b.grid = Grid(1, 128);
    a.forcing = ms.forcing(a.grid, a.params, a.options);
    b.forcing = ms.forcing(b.grid, b.params, b.options);
    const double ea = l2_error(run(a).final_state.u, ms.u_field(a.grid, 0.1));
    const double eb = l2_error(run(b).final_state.u, ms.u_field(b.grid, 0.1));
    CHECK(std::abs(ea - eb) < 0.05 * eb);
}

TEST_CASE("weight step: zero gradient keeps w = 1, constant M gives exp(−ΛMt)") {
    const Grid g(1, 64);
    const Params p = Params::defaults(1);
    Field w(g, 1.0);
    const VecField zero(g);
    for (int i = 0; i < 20; ++i) w = weight_step(w, zero, Field(g), p, 0.01);
    CHECK((w - Field(g, 1.0)).max_abs() == 0.0);

    const double Mc = 0.7;
    VecField u(g);
    u[0] = Field(g, 0.3);  // uniform translation: M[|∇u|] is the supplied constant
    Field w2(g, 1.0);
    for (int i = 0; i < 50; ++i) w2 = weight_step(w2, u, Field(g, Mc), p, 0.01);
    CHECK((w2 - Field(g, std::exp(-p.Lambda * Mc * 0.5))).max_abs() < 1e-13);

    StageConfig c = rest_config(1, 32, 1.0, 0.05);
    const Trajectory tr = run(c);
    CHECK((tr.final_state.w - Field(c.grid, 1.0)).max_abs() == 0.0);
}

TEST_CASE("determinism and split restart through a checkpoint") {
    const StageConfig c = default_config(1, 64, 1e-3, 0.1);
    const Trajectory full = run(c);
    const Trajectory again = run(c);
    CHECK(full.final_state.u[0].raw() == again.final_state.u[0].raw());
    CHECK(full.final_state.rho.raw() == again.final_state.rho.raw());

    StageConfig half = c;
    half.options.t_end = 0.05;
    const Trajectory first = run(half);
    const auto path = (std::filesystem::temp_directory_path() / "nslab_split_test.ckpt").string();
    write_checkpoint(path, first.final_state, c.params);
    const Checkpoint ck = read_checkpoint(path);
    std::filesystem::remove(path);
    CHECK(ck.state.t == first.final_state.t);
    CHECK(ck.state.rho.raw() == first.final_state.rho.raw());
    const Trajectory second = run(c, ck.state);
    REQUIRE(second.ok);
    CHECK(second.final_state.step == full.final_state.step);
    CHECK((second.final_state.u - full.final_state.u).max_abs() <= 1e-10);
    CHECK((second.final_state.rho - full.final_state.rho).max_abs() <= 1e-10);
    CHECK((second.final_state.w - full.final_state.w).max_abs() <= 1e-10);
}

TEST_CASE("checkpoint round trip is bit exact in 2-D") {
    const StageConfig c = default_config(2, 16, 1e-3, 0.003);
    const Trajectory tr = run(c);
    Params p = c.params;
    p.M = 7.5;
    const auto path = (std::filesystem::temp_directory_path() / "nslab_rt_test.ckpt").string();
    write_checkpoint(path, tr.final_state, p, {{"note", "round trip"}});
    const Checkpoint ck = read_checkpoint(path);
    std::filesystem::remove(path);
    CHECK(ck.state.step == tr.final_state.step);
    CHECK(ck.state.u[1].raw() == tr.final_state.u[1].raw());
    CHECK(ck.state.w.raw() == tr.final_state.w.raw());
    CHECK(ck.params.M == 7.5);
    CHECK(ck.params.Gamma == p.Gamma);
    CHECK(ck.extra["note"] == "round trip");
    CHECK_THROWS_AS(read_checkpoint("/nonexistent/file.ckpt"), IoError);
}

TEST_CASE("snapshot stride sums the mass bookkeeping") {
    StageConfig c = default_config(1, 64, 1e-3, 0.02);
    const Trajectory every = run(c);
    c.options.snapshot_stride = 5;
    const Trajectory strided = run(c);
    CHECK(strided.snapshots.size() == 5);
    double sum = 0;
    for (std::size_t i = 1; i <= 5; ++i) sum += every.snapshots[i].stats.damping_mass;
    CHECK(strided.snapshots[1].stats.damping_mass == doctest::Approx(sum).epsilon(1e-14));
    CHECK(strided.final_state.rho.raw() == every.final_state.rho.raw());
}
