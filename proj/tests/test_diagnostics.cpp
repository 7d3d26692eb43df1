#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "nslab/analysis_ops.hpp"
#include "nslab/diagnostics.hpp"
#include "nslab/harness.hpp"
#include "nslab/errors.hpp"
#include "nslab/kernels.hpp"
#include "nslab/spectral.hpp"

using namespace nslab;

namespace {

constexpr double kPi = std::numbers::pi;

double torus_gap(double a, double b) {
    const double d = std::abs(a - b);
    return std::min(d, 2 * kPi - d);
}

// Direct O(N²) double sum over all point pairs, kernel evaluated from coordinates.
template <class F>
double brute_double_sum(const Grid& g, double h, F&& pair) {
    const double s = g.spacing();
    double acc = 0.0;
    for (std::size_t x = 0; x < g.size(); ++x)
        for (std::size_t y = 0; y < g.size(); ++y) {
            double r;
            if (g.dim == 1) {
                r = torus_gap(double(x) * s, double(y) * s);
            } else {
                const std::size_t n = std::size_t(g.n);
                const double a = torus_gap(double(x / n) * s, double(y / n) * s);
                const double b = torus_gap(double(x % n) * s, double(y % n) * s);
                r = std::hypot(a, b);
            }
            acc += kh_value(r, h, g.dim) * pair(x, y);
        }
    return acc * g.cell_volume() * g.cell_volume();
}

double brute_kernel_l1(const Grid& g, double h) {
    return brute_double_sum(g, h, [](std::size_t x, std::size_t) { return x == 0 ? 1.0 : 0.0; }) / g.cell_volume();
}

StageConfig manufactured_config(int n, double dt, double t_end) {
    const Manufactured ms;
    StageConfig c;
    c.grid = Grid(1, n);
    c.params = Params::defaults(1);
    c.options.dt = dt;
    c.options.t_end = t_end;
    c.initial = ms.initial(1);
    c.forcing = ms.forcing(c.grid, c.params, c.options);
    return c;
}

StageConfig rest_config(double rho0, double t_end) {
    StageConfig c;
    c.grid = Grid(1, 32);
    c.params = Params::defaults(1);
    c.options.dt = 1e-3;
    c.options.t_end = t_end;
    c.initial.rho = [rho0](double, double) { return rho0; };
    c.initial.u = {[](double, double) { return 0.0; }};
    return c;
}

const LemmaExponents kLemma{10.0 / 7, 10.0 / 9, INFINITY, 1.0};

}  // namespace

TEST_CASE("energy ledger: zero state gives zero rows") {
    StageConfig c = rest_config(0.0, 0.01);
    const auto rows = energy_ledger(run(c));
    for (const LedgerRow& r : rows) {
        CHECK(r.terms.energy() == 0.0);
        CHECK(r.dissipation_cum == 0.0);
        CHECK(r.damping_cum == 0.0);
        CHECK(r.energy_residual == 0.0);
        CHECK(r.mass_residual == 0.0);
    }
}

TEST_CASE("energy ledger: rest state decays like the internal energy of the ODE") {
    const StageConfig c = rest_config(1.2, 0.5);
    const Trajectory tr = run(c);
    const auto rows = energy_ledger(tr);
    const double vol = c.grid.volume();
    for (const LedgerRow& r : rows) {
        CHECK(r.terms.kinetic == 0.0);
        const double rho = damping_ode(1.2, c.params.k, c.params.m, r.t);
        CHECK(std::abs(r.terms.energy() - internal_energy(rho, c.params) * vol) < 1e-8);
        CHECK(r.dissipation_cum == 0.0);
    }
    for (std::size_t i = 1; i < rows.size(); ++i) CHECK(rows[i].dissipation_cum >= rows[i - 1].dissipation_cum);
}

TEST_CASE("energy ledger: residual halves with dt for k = 0") {
    double prev = 0;
    for (double dt : {2e-3, 1e-3}) {
        StageConfig c;
        c.grid = Grid(1, 64);
        c.params = Params::defaults(1);
        c.params.k = 0.0;
        c.options.dt = dt;
        c.options.t_end = 0.5;
        c.initial = default_initial_data(1);
        const auto rows = energy_ledger(run(c));
        double worst = 0;
        for (const LedgerRow& r : rows) worst = std::max(worst, std::abs(r.energy_residual));
        if (prev > 0) {
            CHECK(prev / worst > 1.7);
            CHECK(prev / worst < 2.3);
        }
        prev = worst;
    }
}

TEST_CASE("evf: constant state has zero identity residual") {
    const Trajectory tr = run(rest_config(1.1, 0.01));
    const Field G = evf(tr.snapshots[3].state, tr.params, tr.options);
    CHECK(G.mean() == doctest::Approx(-pressure(tr.snapshots[3].state.rho[0], tr.params)).epsilon(1e-10));
    CHECK(evf_identity_residual(tr, 1) < 1e-12);
    CHECK(evf_identity_residual(tr, 2) < 1e-12);
    CHECK_THROWS_AS(evf_identity_residual(tr, 3), std::invalid_argument);
    Trajectory short_tr = tr;
    short_tr.snapshots.resize(2);
    CHECK_THROWS_AS(evf_identity_residual(short_tr, 1), std::invalid_argument);
}

TEST_CASE("evf: manufactured residual is first order in dt and both forms agree") {
    double p1 = 0, p2 = 0;
    for (double dt : {2e-3, 1e-3}) {
        const Trajectory tr = run(manufactured_config(64, dt, 0.2));
        REQUIRE(tr.ok);
        const double r1 = evf_identity_residual(tr, 1), r2 = evf_identity_residual(tr, 2);
        CHECK(evf_series_distance(evf_series(tr, 1), evf_series(tr, 2)) <= 2 * std::min(r1, r2));
        if (p1 > 0) {
            CHECK(std::log2(p1 / r1) >= 0.9);
            CHECK(std::log2(p2 / r2) >= 0.9);
        }
        p1 = r1, p2 = r2;
        const auto per = evf_residual_per_snapshot(tr, 1);
        CHECK(per.size() == tr.snapshots.size());
    }
}

TEST_CASE("kolmogorov: trivial cases vanish") {
    const Grid g(1, 64);
    const Field c(g, 2.5), w(g, 0.7);
    const Field f = Field::from_function(g, [](double x, double) { return std::sin(x); });
    CHECK(kolmogorov_weighted(c, w, 0.05, 1e-3) == 0.0);
    CHECK(kolmogorov_weighted(f, Field(g), 0.05, 1e-3) == 0.0);
    CHECK(kolmogorov_G(c, w, 0.05, 1e-3, 0.1, 4) == 0.0);
    CHECK(kolmogorov_plain({c}, 0.05, 1) == 0.0);
    CHECK_THROWS_AS(kolmogorov_weighted(f, w, 0.05, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(kolmogorov_plain({}, 0.05, 1), std::invalid_argument);
}

TEST_CASE("kolmogorov: sin x matches the brute-force sum and decreases with h") {
    const Grid g(1, 256);
    const Field f = Field::from_function(g, [](double x, double) { return std::sin(x); });
    const Field w(g, 1.0);
    const double sigma = 1e-3;
    double prev = INFINITY;
    for (double h : {0.2, 0.05, 0.0125}) {
        const double v = kolmogorov_weighted(f, w, h, sigma, true);
        const double oracle = brute_double_sum(g, h, [&](std::size_t x, std::size_t y) {
            return smoothed_abs(f[x] - f[y], sigma);
        }) / brute_kernel_l1(g, h);
        CHECK(std::abs(v - oracle) <= 1e-6 * oracle);
        CHECK(v < prev);
        prev = v;
    }
}

TEST_CASE("kolmogorov: 2-D functionals agree with brute force to 1e-8") {
    const Grid g(2, 16);
    const Field rho = Field::from_function(g, [](double x, double y) { return 1 + 0.3 * std::sin(x) * std::cos(2 * y); });
    const Field w = Field::from_function(g, [](double x, double y) { return 0.5 + 0.4 * std::cos(x + y); });
    const double h = 0.3, sigma = 0.05, k = 0.1, m = 4;
    const double R = kolmogorov_weighted(rho, w, h, sigma);
    const double Ro = brute_double_sum(g, h, [&](std::size_t x, std::size_t y) { return smoothed_abs(rho[x] - rho[y], sigma) * w[x]; });
    CHECK(std::abs(R - Ro) <= 1e-8 * Ro);
    const double G = kolmogorov_G(rho, w, h, sigma, k, m);
    const double Go = k * brute_double_sum(g, h, [&](std::size_t x, std::size_t y) {
        return (std::pow(rho[x], m) - std::pow(rho[y], m)) * smoothed_sign(rho[x] - rho[y], sigma) * w[x];
    });
    CHECK(std::abs(G - Go) <= 1e-8 * std::abs(Go));
    const double P = kolmogorov_plain({rho}, h, 2);
    const double Po = brute_double_sum(g, h, [&](std::size_t x, std::size_t y) { return std::pow(rho[x] - rho[y], 2); }) /
                      brute_kernel_l1(g, h);
    CHECK(std::abs(P - Po) <= 1e-8 * Po);
}

TEST_CASE("kolmogorov: monotone in w and ordered in σ") {
    const Grid g(1, 128);
    const Field rho = Field::from_function(g, [](double x, double) { return 1 + 0.5 * std::cos(x) + 0.1 * std::sin(5 * x); });
    const Field w1 = Field::from_function(g, [](double x, double) { return 0.3 + 0.2 * std::sin(x); });
    const Field w2 = w1 + Field::from_function(g, [](double x, double) { return 0.1 + 0.1 * std::cos(3 * x); });
    const double h = 0.05;
    CHECK(kolmogorov_weighted(rho, w1, h, 1e-3) <= kolmogorov_weighted(rho, w2, h, 1e-3));
    const double s = 1e-3, sp = 0.2;
    const double mass = brute_kernel_l1(g, h) * w1.integral();
    const double rs = kolmogorov_weighted(rho, w1, h, s), rsp = kolmogorov_weighted(rho, w1, h, sp);
    CHECK(rs >= rsp);
    CHECK(rs <= rsp + sp / 2 * mass * (1 + 1e-10));
}

TEST_CASE("kolmogorov: stencil truncation beyond 1e-3 of the mass is an error") {
    const Grid g(2, 256);
    const Field f = Field::from_function(g, [](double x, double) { return std::sin(x); });
    CHECK_THROWS_AS(kolmogorov_plain({f}, 1e-4, 1), NumericalError);
    CHECK_NOTHROW(kolmogorov_plain({Field::from_function(Grid(2, 32), [](double x, double) { return std::sin(x); })}, 1e-4, 1));
}

TEST_CASE("kolmogorov plain: oscillating sequence keeps its value, Jensen ordering in p") {
    const Grid g(1, 512);
    std::vector<Field> seq;
    for (int k = 1; k <= 32; ++k) seq.push_back(Field::from_function(g, [k](double x, double) { return std::sin(k * x); }));
    for (double h : {0.2, 0.05, 0.0125}) {
        const double one = kolmogorov_plain({seq[0]}, h, 1);
        CHECK(kolmogorov_plain(seq, h, 1) >= 0.1 * one);
        const double v1 = kolmogorov_plain({seq[2]}, h, 1), v2 = kolmogorov_plain({seq[2]}, h, 2);
        CHECK(v2 >= v1 * v1 / g.volume());
    }
}

TEST_CASE("weight removal: partition, w = 1, and the log bound") {
    const Grid g(1, 256);
    const Field one(g, 1.0);
    const Field rho = Field::from_function(g, [](double x, double) { return 1 + 0.4 * std::sin(x); });
    const WeightRemovalSplit a = weight_removal_split(rho, one, 0.05, 0.5);
    CHECK(a.region2 == 0.0);
    CHECK(a.I2_bound == 0.0);
    CHECK(std::abs(a.total - a.plain) <= 1e-10);
    CHECK(a.plain == doctest::Approx(kolmogorov_plain({rho}, 0.05, 1)).epsilon(1e-12));

    Field jump = Field::from_function(g, [](double x, double) { return std::exp(-5.0 * (x > kPi ? 1.0 : 0.0)); });
    const Field w = mollify(jump, {KernelKind::GaussianPeriodized, 0.1});
    for (double zeta : {0.5, 0.1}) {
        const WeightRemovalSplit s = weight_removal_split(one, w, 0.05, zeta);
        CHECK(s.region2 <= s.I2_bound);
        CHECK(s.region1 <= s.I1_bound);
        const WeightRemovalSplit t = weight_removal_split(rho, w, 0.05, zeta);
        CHECK(t.region2 > 0.0);
        CHECK(t.region2 <= t.I2_bound);
        CHECK(std::abs(t.total - t.plain) <= 1e-10);
    }
    CHECK_THROWS_AS(weight_removal_split(rho, w, 0.05, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(weight_removal_split(rho, w, 0.05, 0.0), std::invalid_argument);
}

TEST_CASE("regularization defect: zero velocity, spatial refinement, ladder checks") {
    const Grid g(1, 128);
    const std::vector<Field> rho(21, Field::from_function(g, [](double x, double) { return 1 + 0.3 * std::cos(x); }));
    std::vector<VecField> zero(21, VecField(g));
    const auto z = regularization_defect(rho, zero, 0.01, {0.01, 0.02, 0.04});
    for (double d : z.defect) CHECK(d == 0.0);

    VecField u(g);
    u[0] = Field::from_function(g, [](double x, double) { return std::sin(x); });
    const std::vector<VecField> steady(21, u);
    const auto r = regularization_defect(rho, steady, 0.01, {0.05, 0.1, 0.2, 0.4}, 0.0, 1.0);
    for (std::size_t i = 1; i < r.defect.size(); ++i) CHECK(r.defect[i] > r.defect[i - 1]);
    CHECK(r.theta >= 1.0);
    CHECK(r.defect[0] < 0.01);

    CHECK_THROWS_AS(regularization_defect(rho, steady, 0.01, {0.1, 0.2}), std::invalid_argument);
    CHECK_THROWS_AS(regularization_defect(rho, steady, 0.01, {0.1, 0.2, 0.4}, 1.0, 0.0), std::invalid_argument);
}

TEST_CASE("regularization defect: manufactured run reports a positive exponent") {
    const Trajectory tr = run(manufactured_config(64, 1e-3, 0.5));
    const auto r = regularization_defect(tr, {0.01, 0.02, 0.04, 0.08});
    CHECK(r.theta > 0.0);
    CHECK(r.theta == doctest::Approx(2.0).epsilon(0.1));
}

TEST_CASE("bogovskii: rest state is exact, support must end before t_end") {
    const Trajectory tr = run(rest_config(1.3, 0.2));
    const BogovskiiTerms b = bogovskii_functional(tr, BumpProfile{0.15});
    CHECK(b.residual < 1e-10);
    CHECK(b.lhs == doctest::Approx(b.I0).epsilon(1e-12));
    CHECK_THROWS_AS(bogovskii_functional(tr, BumpProfile{0.5}), std::invalid_argument);
}

TEST_CASE("bogovskii: manufactured residual shrinks with dt") {
    double prev = 0;
    for (double dt : {2e-3, 1e-3}) {
        const Trajectory tr = run(manufactured_config(64, dt, 0.3));
        const BogovskiiTerms b = bogovskii_functional(tr, BumpProfile{0.25});
        CHECK(b.residual < 1e-3);
        if (prev > 0) CHECK(prev / b.residual > 1.7);
        prev = b.residual;
    }
}

TEST_CASE("bump profile") {
    const BumpProfile psi{2.0};
    CHECK(psi.value(0.0) == 1.0);
    CHECK(psi.value(2.0) == 0.0);
    CHECK(psi.derivative(0.0) == 0.0);
    const double t = 1.3, e = 1e-6;
    CHECK(psi.derivative(t) == doctest::Approx((psi.value(t + e) - psi.value(t - e)) / (2 * e)).epsilon(1e-7));
}

TEST_CASE("interpolation lemma: exponent relation and α") {
    CHECK(lemma_alpha(kLemma) == doctest::Approx(0.125).epsilon(1e-14));
    CHECK_THROWS_AS(lemma_alpha({2, 2, 2, 2}), std::invalid_argument);
    CHECK(lemma_alpha({1.2, 2.0, 3.0, 1.5}) == doctest::Approx(0.25).epsilon(1e-14));
}

TEST_CASE("interpolation lemma: divergence-free φ gives lhs = 0") {
    const Grid g(2, 16);
    SpaceTimeVector phi{1.0, {}};
    SpaceTimeScalar W{1.0, {}};
    for (int j = 0; j < 16; ++j) {
        const double s = std::sin(2 * kPi * j / 16.0);
        VecField v(g);
        // φ = ∇^⊥(sin x sin 2y)·s(t)
        v[0] = Field::from_function(g, [&](double x, double y) { return s * 2 * std::sin(x) * std::cos(2 * y); });
        v[1] = Field::from_function(g, [&](double x, double y) { return -s * std::cos(x) * std::sin(2 * y); });
        phi.slices.push_back(v);
        W.slices.push_back(Field::from_function(g, [&](double x, double y) { return std::cos(x + y) * s; }));
    }
    const InterpolationCheck c = interpolation_verifier(phi, W, kLemma, 0.875);
    CHECK(std::abs(c.lhs) < 1e-12);
    CHECK(c.alpha == doctest::Approx(0.125));
}

TEST_CASE("interpolation lemma: single mode matches the closed form") {
    const Grid g(1, 32);
    const int nt = 64;
    SpaceTimeVector phi{3.0, {}};
    SpaceTimeScalar W{3.0, {}};
    for (int j = 0; j < nt; ++j) {
        const double th = 2 * kPi * j / nt;
        const double s = 0.5 * std::sin(th) - 0.25 * std::sin(2 * th), r = 0.5 - 0.5 * std::cos(th);
        VecField v(g);
        v[0] = Field::from_function(g, [&](double x, double) { return std::sin(x) * s; });
        phi.slices.push_back(v);
        W.slices.push_back(Field::from_function(g, [&](double x, double) { return std::cos(x) * r; }));
    }
    // ∫cos²x dx · ∫s′r dt = π · (−π/4)
    const InterpolationCheck c = interpolation_verifier(phi, W, kLemma, 0.875);
    CHECK(std::abs(c.lhs + kPi * kPi / 4) < 1e-8);
    CHECK(c.ratio > 0.0);
    CHECK_THROWS_AS(interpolation_verifier(phi, W, {2, 2, 2, 2}, 0.5), std::invalid_argument);
}

TEST_CASE("interpolation lemma: random family and time scaling share one constant") {
    double lo = INFINITY, hi = 0;
    for (unsigned seed = 1; seed <= 10; ++seed) {
        const LemmaPair p = random_lemma_pair(seed, 1.0, 1, 32, 128);
        const InterpolationCheck c = interpolation_verifier(p.phi, p.W, kLemma, 0.875);
        CHECK(c.lhs > 0.0);
        lo = std::min(lo, c.ratio), hi = std::max(hi, c.ratio);
    }
    CHECK(hi <= 3 * lo);
    std::vector<double> ratios;
    for (double a : {1.0, 2.0, 4.0}) {
        const LemmaPair p = random_lemma_pair(7, a, 1, 32, 512);
        ratios.push_back(interpolation_verifier(p.phi, p.W, kLemma, 0.875).ratio);
    }
    CHECK(*std::max_element(ratios.begin(), ratios.end()) <= 3 * *std::min_element(ratios.begin(), ratios.end()));
}
