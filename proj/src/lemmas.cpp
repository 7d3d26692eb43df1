#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "nslab/analysis_ops.hpp"
#include "nslab/errors.hpp"
#include "nslab/harness.hpp"
#include "nslab/kernels.hpp"
#include "nslab/spectral.hpp"

namespace nslab {

using nlohmann::json;

namespace {

constexpr double kPi = std::numbers::pi;

struct Getter {
    const LemmaParams& p;
    std::vector<std::string> allowed;

    void check() const {
        for (const auto& [k, v] : p)
            if (std::find(allowed.begin(), allowed.end(), k) == allowed.end())
                throw ConfigError("unknown lemma parameter " + k);
    }
    std::vector<double> list(const std::string& k, std::vector<double> def) const {
        const auto it = p.find(k);
        return it == p.end() ? def : it->second;
    }
    double scalar(const std::string& k, double def) const {
        const auto it = p.find(k);
        if (it == p.end()) return def;
        if (it->second.size() != 1) throw ConfigError("lemma parameter " + k + " takes one value");
        return it->second.front();
    }
    int integer(const std::string& k, int def) const {
        const double v = scalar(k, def);
        if (v != std::floor(v)) throw ConfigError("lemma parameter " + k + " must be an integer");
        return int(v);
    }
};

Grid resolving_grid(int d, double h, int cap) {
    int n = 8;
    while (Grid::period / n > h / 2 && n < cap) n *= 2;
    return Grid(d, n);
}

double spread(const std::vector<double>& v) {
    const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
    return *lo > 0 ? *hi / *lo : INFINITY;
}

double bump(double s) {
    if (s <= 0 || s >= 1) return 0.0;
    const double c = 2 * s - 1;
    return std::exp(1 - 1 / (1 - c * c));
}

json conv_k(const Getter& g) {
    const std::vector<double> h = g.list("h", {0.05, 0.01, 0.005});
    const double hmin = *std::min_element(h.begin(), h.end());
    const Grid grid = resolving_grid(1, hmin, 1 << 16);
    json rows = json::array();
    std::vector<double> all;
    for (double h1 : h) {
        json row = json::array();
        for (double h2 : h) {
            const double c = conv_lemma_constant(h1, h2, grid).constant;
            row.push_back(c);
            all.push_back(c);
        }
        rows.push_back(row);
    }
    return {{"h", h}, {"n", grid.n}, {"constant", rows}, {"spread", spread(all)}};
}

json norm_k(const Getter& g) {
    const std::vector<double> h = g.list("h", {1e-2, 1e-3, 1e-4});
    const int d = g.integer("d", 1);
    std::vector<double> r;
    for (double x : h) r.push_back(l1_norm_ratio(x, d));
    const auto [lo, hi] = std::minmax_element(r.begin(), r.end());
    return {{"h", h}, {"d", d}, {"ratio", r}, {"relative_spread", (*hi - *lo) / *hi}};
}

json commutator(const Getter& g) {
    const std::vector<double> delta = g.list("delta", {0.1, 0.02, 0.004});
    const Grid grid = resolving_grid(1, *std::min_element(delta.begin(), delta.end()), 1 << 16);
    const Field s = Field::from_function(grid, [](double x, double) { return std::sin(x); });
    std::vector<double> v;
    for (double d : delta) v.push_back(commutator_defect(s, s, d));
    return {{"delta", delta}, {"n", grid.n}, {"normalized_defect", v}, {"spread", spread(v)}};
}

json lagrange(const Getter& g) {
    const int d = g.integer("d", 1), n = g.integer("n", d == 1 ? 256 : 64), pairs = g.integer("pairs", 1000);
    const unsigned seed = unsigned(g.integer("seed", 1));
    const Grid grid(d, n);
    const Field f = Field::from_function(grid, [](double x, double y) {
        return std::sin(x) + 0.5 * std::cos(2 * x + y) + 0.25 * std::sin(3 * y);
    });
    const LagrangeCheck c = lagrange_constant(f, pairs, seed);
    return {{"d", d}, {"n", n}, {"pairs", c.pairs}, {"constant", c.constant}};
}

json du(const Getter& g) {
    const std::vector<double> h = g.list("h", {0.05, 0.01});
    const Grid grid = resolving_grid(1, 0.01, 1 << 16);
    const Field u = Field::from_function(grid, [](double x, double) { return std::sin(x); });
    std::vector<double> v;
    for (double x : h) v.push_back(D_shift_decay(u, x));
    return {{"h", h}, {"n", grid.n}, {"normalized_decay", v}, {"spread", spread(v)}};
}

json interpolation(const Getter& g) {
    const int members = g.integer("members", 10), d = g.integer("d", 1);
    const int n = g.integer("n", d == 1 ? 32 : 16), nt = g.integer("nt", 512);
    const LemmaExponents e{10.0 / 7, 10.0 / 9, INFINITY, 1.0};
    const double alpha = lemma_alpha(e);
    std::vector<double> family, ladder;
    for (int s = 1; s <= members; ++s) {
        const LemmaPair p = random_lemma_pair(unsigned(s), 1.0, d, n, nt);
        family.push_back(interpolation_verifier(p.phi, p.W, e, 1 - alpha).ratio);
    }
    const std::vector<double> scales = g.list("scale", {1.0, 2.0, 4.0});
    for (double a : scales) {
        const LemmaPair p = random_lemma_pair(7, a, d, n, nt);
        ladder.push_back(interpolation_verifier(p.phi, p.W, e, 1 - alpha).ratio);
    }
    return {{"alpha", alpha},
            {"family_ratio", family},
            {"family_spread", spread(family)},
            {"scale", scales},
            {"scale_ratio", ladder},
            {"scale_spread", spread(ladder)}};
}

json kolmogorov(const Getter& g) {
    const int n = g.integer("n", 2048);
    const std::vector<double> h = g.list("h", {0.2, 0.05, 0.0125});
    const int count = g.integer("count", 32);
    const Grid grid(1, n);
    const Field f = Field::from_function(grid, [](double x, double) { return std::sin(x); });
    std::vector<Field> seq;
    for (int k = 1; k <= count; ++k) seq.push_back(Field::from_function(grid, [k](double x, double) { return std::sin(k * x); }));
    std::vector<double> smooth, osc;
    for (double x : h) {
        smooth.push_back(kolmogorov_plain({f}, x, 1.0));
        osc.push_back(kolmogorov_plain(seq, x, 1.0));
    }
    return {{"h", h},
            {"n", n},
            {"smooth", smooth},
            {"sequence", osc},
            {"smooth_ratio", smooth.back() / smooth.front()},
            {"sequence_ratio", osc.back() / smooth.front()}};
}

}  // namespace

LemmaParams parse_lemma_params(const std::vector<std::string>& kv) {
    LemmaParams out;
    for (const std::string& s : kv) {
        const auto eq = s.find('=');
        if (eq == std::string::npos || eq == 0) throw ConfigError("lemma parameter must be key=value: " + s);
        std::vector<double> vals;
        std::size_t pos = eq + 1;
        while (pos <= s.size()) {
            const std::size_t c = std::min(s.find(':', pos), s.size());
            try {
                vals.push_back(parse_double(s.substr(pos, c - pos)));
            } catch (const IoError&) {
                throw ConfigError("lemma parameter " + s.substr(0, eq) + ": malformed number");
            }
            pos = c + 1;
        }
        out[s.substr(0, eq)] = vals;
    }
    return out;
}

const std::vector<std::string>& lemma_names() {
    static const std::vector<std::string> names = {"convK", "normK", "commutator", "lagrange", "du", "interpolation",
                                                   "kolmogorov"};
    return names;
}

json verify_lemma(const std::string& name, const LemmaParams& params) {
    json out;
    try {
        if (name == "convK") {
            const Getter g{params, {"h"}};
            g.check();
            out = conv_k(g);
        } else if (name == "normK") {
            const Getter g{params, {"h", "d"}};
            g.check();
            out = norm_k(g);
        } else if (name == "commutator") {
            const Getter g{params, {"delta"}};
            g.check();
            out = commutator(g);
        } else if (name == "lagrange") {
            const Getter g{params, {"d", "n", "pairs", "seed"}};
            g.check();
            out = lagrange(g);
        } else if (name == "du") {
            const Getter g{params, {"h"}};
            g.check();
            out = du(g);
        } else if (name == "interpolation") {
            const Getter g{params, {"members", "d", "n", "nt", "scale"}};
            g.check();
            out = interpolation(g);
        } else if (name == "kolmogorov") {
            const Getter g{params, {"n", "h", "count"}};
            g.check();
            out = kolmogorov(g);
        } else {
            throw ConfigError("unknown lemma " + name);
        }
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string(name) + ": " + e.what());
    }
    out["lemma"] = name;
    return out;
}

LemmaPair random_lemma_pair(unsigned seed, double scale, int d, int n, int nt) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> U(-1, 1);
    const Grid g(d, n);
    double amp[3][2], ph[3][2], fr[3];
    for (int k = 0; k < 3; ++k) {
        fr[k] = 1 + 2 * std::abs(U(rng));
        for (int c = 0; c < 2; ++c) amp[k][c] = U(rng), ph[k][c] = kPi * U(rng);
    }
    LemmaPair out{{1.0, {}}, {1.0, {}}};
    SpaceTimeScalar q{1.0, {}};
    for (int j = 0; j < nt; ++j) {
        const double s = scale * double(j) / nt, b = bump(s);
        VecField v(g);
        for (int c = 0; c < d; ++c)
            v[c] = Field::from_function(g, [&](double x, double y) {
                double acc = 0;
                for (int k = 0; k < 3; ++k)
                    acc += amp[k][c] * std::sin((k + 1) * x + (c ? (k + 1) * y : 0) + ph[k][c]) *
                           std::cos(2 * kPi * fr[k] * s + k);
                return b * acc;
            });
        q.slices.push_back(spectral::inv_laplacian_div(v));
        out.phi.slices.push_back(std::move(v));
    }
    out.W = time_derivative(q);
    return out;
}

}  // namespace nslab
