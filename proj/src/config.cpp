#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <random>
#include <set>
#include <sstream>

#include "nslab/checkpoint.hpp"
#include "nslab/errors.hpp"
#include "nslab/harness.hpp"

namespace nslab {

namespace {

using nlohmann::json;

const std::vector<std::string> kStageOrder = {"eps", "M", "k", "delta", "lambda"};

void check_keys(const json& j, const std::string& section, const std::set<std::string>& allowed, bool strict) {
    if (!j.is_object()) throw ConfigError(section + " must be an object");
    if (!strict) return;
    for (const auto& [key, v] : j.items())
        if (!allowed.count(key)) throw ConfigError("unknown key in " + section + ": " + key);
}

double number(const json& v, const std::string& what) {
    if (v.is_string() && (v == "inf" || v == "Infinity")) return INFINITY;
    if (!v.is_number()) throw ConfigError(what + ": expected a number");
    return v.get<double>();
}

int integer(const json& v, const std::string& what) {
    if (!v.is_number_integer()) throw ConfigError(what + ": expected an integer");
    return v.get<int>();
}

bool boolean(const json& v, const std::string& what) {
    if (!v.is_boolean()) throw ConfigError(what + ": expected true or false");
    return v.get<bool>();
}

std::string text(const json& v, const std::string& what) {
    if (!v.is_string()) throw ConfigError(what + ": expected a string");
    return v.get<std::string>();
}

std::vector<double> numbers(const json& v, const std::string& what) {
    if (!v.is_array()) throw ConfigError(what + ": expected an array of numbers");
    std::vector<double> out;
    for (const json& x : v) out.push_back(number(x, what));
    return out;
}

json number_json(double v) {
    if (std::isinf(v)) return v > 0 ? json("inf") : json("-inf");
    return v;
}

KernelKind kernel_kind(const json& v, const std::string& what) {
    const std::string s = text(v, what);
    if (s == "gaussian") return KernelKind::GaussianPeriodized;
    if (s == "kh") return KernelKind::FlatKh;
    throw ConfigError(what + ": expected \"gaussian\" or \"kh\"");
}

const char* kernel_name(KernelKind k) { return k == KernelKind::FlatKh ? "kh" : "gaussian"; }

InitialKind initial_kind(const std::string& s) {
    if (s == "default") return InitialKind::Default;
    if (s == "rest") return InitialKind::Rest;
    if (s == "zero") return InitialKind::Zero;
    if (s == "manufactured") return InitialKind::Manufactured;
    if (s == "random") return InitialKind::Random;
    throw ConfigError("initial.kind: expected default, rest, zero, manufactured or random");
}

const char* initial_name(InitialKind k) {
    switch (k) {
        case InitialKind::Default: return "default";
        case InitialKind::Rest: return "rest";
        case InitialKind::Zero: return "zero";
        case InitialKind::Manufactured: return "manufactured";
        case InitialKind::Random: return "random";
    }
    return "default";
}

bool decreasing_param(const std::string& p) { return p != "M"; }

void validate_plan(const SweepPlan& plan) {
    plan.options.validate();
    const DiagnosticsSpec& d = plan.diagnostics;
    for (double h : d.h)
        if (!(h > 0 && h < 0.5)) throw ConfigError("diagnostics.h: widths must satisfy 0 < h < 1/2");
    if (!(d.sigma > 0)) throw ConfigError("diagnostics.sigma: σ > 0");
    if (!(d.zeta > 0 && d.zeta < 1)) throw ConfigError("diagnostics.zeta: 0 < ζ < 1");
    if (!d.eta.empty()) {
        if (d.eta.size() < 3) throw ConfigError("diagnostics.eta: at least three values");
        for (double e : d.eta)
            if (!(e > 0)) throw ConfigError("diagnostics.eta: η > 0");
    }
    if (d.evf_form != 1 && d.evf_form != 2) throw ConfigError("diagnostics.evf_form: 1 or 2");
    if (d.checkpoint_every < 0) throw ConfigError("diagnostics.checkpoint_every >= 0");
    if (d.bogovskii_tc < 0 || (d.bogovskii_tc > 0 && d.bogovskii_tc >= plan.options.t_end))
        throw ConfigError("diagnostics.bogovskii_tc: 0 < t_c < t_end");
    if (plan.manufactured_forcing && plan.grid.dim != 1)
        throw ConfigError("manufactured forcing is one-dimensional");
    if (plan.workers < 1) throw ConfigError("sweep.workers >= 1");
    if (plan.initial.modes < 1) throw ConfigError("initial.modes >= 1");
    if (!(plan.initial.rho0 >= 0)) throw ConfigError("initial.rho0 >= 0");

    int last = -1;
    for (const Stage& s : plan.stages) {
        const auto it = std::find(kStageOrder.begin(), kStageOrder.end(), s.param);
        if (it == kStageOrder.end()) throw ConfigError("sweep stage parameter must be one of eps, M, k, delta, lambda");
        const int pos = int(it - kStageOrder.begin());
        if (pos <= last) throw ConfigError("sweep stages must follow the nesting order eps, M, k, delta, lambda");
        last = pos;
        if (s.values.empty()) throw ConfigError("sweep stage " + s.param + ": empty ladder");
        for (std::size_t i = 1; i < s.values.size(); ++i) {
            const bool ok = decreasing_param(s.param) ? s.values[i] < s.values[i - 1] : s.values[i] > s.values[i - 1];
            if (!ok)
                throw ConfigError("sweep stage " + s.param + ": ladder must be strictly " +
                                  (decreasing_param(s.param) ? "decreasing" : "increasing"));
        }
    }
    plan.params.validate(plan.grid.dim);
    for (const LadderPoint& p : ladder_points(plan)) p.params.validate(plan.grid.dim);
}

const std::set<std::string> kParamKeys = {"eps", "delta", "k", "M", "lambda", "m", "Gamma",
                                          "gamma", "mu", "xi", "Lambda", "sigma", "mapped_dim"};

}  // namespace

SweepPlan plan_from_json(const json& j) {
    if (!j.is_object()) throw ConfigError("config must be a JSON object");
    const bool strict = j.contains("strict") ? boolean(j["strict"], "strict") : true;
    check_keys(j, "config",
               {"strict", "grid", "params", "time", "solver", "initial", "forcing", "diagnostics", "sweep", "output"},
               strict);
    SweepPlan plan;
    try {
        int d = 1, n = 128;
        if (j.contains("grid")) {
            const json& g = j["grid"];
            check_keys(g, "grid", {"d", "n"}, strict);
            if (g.contains("d")) d = integer(g["d"], "grid.d");
            if (g.contains("n")) n = integer(g["n"], "grid.n");
        }
        plan.grid = Grid(d, n);
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("grid: ") + e.what());
    }
    plan.params = Params::defaults(plan.grid.dim);
    if (j.contains("params")) {
        json p = j["params"];
        check_keys(p, "params", kParamKeys, strict);
        if (!strict)
            for (auto it = p.begin(); it != p.end();) it = kParamKeys.count(it.key()) ? std::next(it) : p.erase(it);
        plan.params = params_from_json(p, plan.params);
    }
    SolverOptions& o = plan.options;
    if (j.contains("time")) {
        const json& t = j["time"];
        check_keys(t, "time", {"dt", "t_end", "snapshot_stride"}, strict);
        if (t.contains("dt")) o.dt = number(t["dt"], "time.dt");
        if (t.contains("t_end")) o.t_end = number(t["t_end"], "time.t_end");
        if (t.contains("snapshot_stride")) o.snapshot_stride = integer(t["snapshot_stride"], "time.snapshot_stride");
    }
    if (j.contains("solver")) {
        const json& s = j["solver"];
        check_keys(s, "solver",
                   {"tol_fp", "max_fp_iter", "relaxation", "interp_order", "cfl_max", "mass_fixer", "gmres_tol",
                    "gmres_max_iter", "eps_kernel", "delta_kernel"},
                   strict);
        if (s.contains("tol_fp")) o.tol_fp = number(s["tol_fp"], "solver.tol_fp");
        if (s.contains("max_fp_iter")) o.max_fp_iter = integer(s["max_fp_iter"], "solver.max_fp_iter");
        if (s.contains("relaxation")) o.relaxation = number(s["relaxation"], "solver.relaxation");
        if (s.contains("interp_order")) o.interp_order = integer(s["interp_order"], "solver.interp_order");
        if (s.contains("cfl_max")) o.cfl_max = number(s["cfl_max"], "solver.cfl_max");
        if (s.contains("mass_fixer")) o.mass_fixer = boolean(s["mass_fixer"], "solver.mass_fixer");
        if (s.contains("gmres_tol")) o.gmres_tol = number(s["gmres_tol"], "solver.gmres_tol");
        if (s.contains("gmres_max_iter")) o.gmres_max_iter = integer(s["gmres_max_iter"], "solver.gmres_max_iter");
        if (s.contains("eps_kernel")) o.eps_kernel = kernel_kind(s["eps_kernel"], "solver.eps_kernel");
        if (s.contains("delta_kernel")) o.delta_kernel = kernel_kind(s["delta_kernel"], "solver.delta_kernel");
    }
    if (j.contains("initial")) {
        const json& i = j["initial"];
        check_keys(i, "initial", {"kind", "amplitude", "rho0", "modes"}, strict);
        if (i.contains("kind")) plan.initial.kind = initial_kind(text(i["kind"], "initial.kind"));
        if (i.contains("amplitude")) plan.initial.amplitude = number(i["amplitude"], "initial.amplitude");
        if (i.contains("rho0")) plan.initial.rho0 = number(i["rho0"], "initial.rho0");
        if (i.contains("modes")) plan.initial.modes = integer(i["modes"], "initial.modes");
    }
    if (j.contains("forcing")) {
        const json& f = j["forcing"];
        check_keys(f, "forcing", {"kind"}, strict);
        if (f.contains("kind")) {
            const std::string k = text(f["kind"], "forcing.kind");
            if (k == "manufactured") plan.manufactured_forcing = true;
            else if (k != "none") throw ConfigError("forcing.kind: expected none or manufactured");
        }
    }
    if (j.contains("diagnostics")) {
        const json& d = j["diagnostics"];
        check_keys(d, "diagnostics", {"h", "sigma", "zeta", "eta", "evf_form", "checkpoint_every", "bogovskii_tc"},
                   strict);
        DiagnosticsSpec& s = plan.diagnostics;
        if (d.contains("h")) s.h = numbers(d["h"], "diagnostics.h");
        if (d.contains("sigma")) s.sigma = number(d["sigma"], "diagnostics.sigma");
        if (d.contains("zeta")) s.zeta = number(d["zeta"], "diagnostics.zeta");
        if (d.contains("eta")) s.eta = numbers(d["eta"], "diagnostics.eta");
        if (d.contains("evf_form")) s.evf_form = integer(d["evf_form"], "diagnostics.evf_form");
        if (d.contains("checkpoint_every")) s.checkpoint_every = integer(d["checkpoint_every"], "diagnostics.checkpoint_every");
        if (d.contains("bogovskii_tc")) s.bogovskii_tc = number(d["bogovskii_tc"], "diagnostics.bogovskii_tc");
    }
    if (j.contains("sweep")) {
        const json& s = j["sweep"];
        check_keys(s, "sweep", {"stages", "workers", "seed"}, strict);
        if (s.contains("workers")) plan.workers = integer(s["workers"], "sweep.workers");
        if (s.contains("seed")) {
            if (!s["seed"].is_number_integer() || s["seed"].get<std::int64_t>() < 0)
                throw ConfigError("sweep.seed: expected a nonnegative integer");
            plan.seed = s["seed"].get<std::uint64_t>();
        }
        if (s.contains("stages")) {
            if (!s["stages"].is_array()) throw ConfigError("sweep.stages: expected an array");
            for (const json& st : s["stages"]) {
                check_keys(st, "sweep stage", {"param", "values"}, true);
                if (!st.contains("param") || !st.contains("values"))
                    throw ConfigError("sweep stage needs param and values");
                plan.stages.push_back({text(st["param"], "sweep stage param"), numbers(st["values"], "sweep stage values")});
            }
        }
    }
    if (j.contains("output")) {
        const json& out = j["output"];
        check_keys(out, "output", {"root", "name"}, strict);
        if (out.contains("root")) plan.output_root = text(out["root"], "output.root");
        if (out.contains("name")) plan.name = text(out["name"], "output.name");
        if (plan.name.empty() || plan.name.find('/') != std::string::npos)
            throw ConfigError("output.name: nonempty, without '/'");
    }
    validate_plan(plan);
    return plan;
}

SweepPlan parse_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot read config " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    json j;
    try {
        j = json::parse(ss.str());
    } catch (const json::parse_error& e) {
        throw ConfigError("malformed config " + path + ": " + e.what());
    }
    return plan_from_json(j);
}

json plan_to_json(const SweepPlan& plan) {
    const SolverOptions& o = plan.options;
    const DiagnosticsSpec& d = plan.diagnostics;
    json stages = json::array();
    for (const Stage& s : plan.stages) {
        json v = json::array();
        for (double x : s.values) v.push_back(number_json(x));
        stages.push_back({{"param", s.param}, {"values", v}});
    }
    json h = json::array(), eta = json::array();
    for (double x : d.h) h.push_back(x);
    for (double x : d.eta) eta.push_back(x);
    return {{"strict", true},
            {"grid", {{"d", plan.grid.dim}, {"n", plan.grid.n}}},
            {"params", params_to_json(plan.params)},
            {"time", {{"dt", o.dt}, {"t_end", o.t_end}, {"snapshot_stride", o.snapshot_stride}}},
            {"solver",
             {{"tol_fp", o.tol_fp},
              {"max_fp_iter", o.max_fp_iter},
              {"relaxation", o.relaxation},
              {"interp_order", o.interp_order},
              {"cfl_max", o.cfl_max},
              {"mass_fixer", o.mass_fixer},
              {"gmres_tol", o.gmres_tol},
              {"gmres_max_iter", o.gmres_max_iter},
              {"eps_kernel", kernel_name(o.eps_kernel)},
              {"delta_kernel", kernel_name(o.delta_kernel)}}},
            {"initial",
             {{"kind", initial_name(plan.initial.kind)},
              {"amplitude", plan.initial.amplitude},
              {"rho0", plan.initial.rho0},
              {"modes", plan.initial.modes}}},
            {"forcing", {{"kind", plan.manufactured_forcing ? "manufactured" : "none"}}},
            {"diagnostics",
             {{"h", h},
              {"sigma", d.sigma},
              {"zeta", d.zeta},
              {"eta", eta},
              {"evf_form", d.evf_form},
              {"checkpoint_every", d.checkpoint_every},
              {"bogovskii_tc", d.bogovskii_tc}}},
            {"sweep", {{"stages", stages}, {"workers", plan.workers}, {"seed", plan.seed}}},
            {"output", {{"root", plan.output_root}, {"name", plan.name}}}};
}

void apply_env_overrides(SweepPlan& plan) {
    if (const char* w = std::getenv("NSLAB_WORKERS")) {
        char* end = nullptr;
        const long v = std::strtol(w, &end, 10);
        if (end == w || *end != '\0' || v < 1 || v > 1024) throw ConfigError("NSLAB_WORKERS must be an integer in [1, 1024]");
        plan.workers = int(v);
    }
    if (const char* r = std::getenv("NSLAB_OUTPUT_ROOT"))
        if (*r) plan.output_root = r;
}

std::string LadderPoint::id() const {
    if (stage < 0) return "base";
    char buf[64];
    std::snprintf(buf, sizeof buf, "s%d_%s_%02d", stage, param.c_str(), index);
    return buf;
}

void set_stage_param(Params& p, const std::string& name, double value) {
    if (name == "eps") p.eps = value;
    else if (name == "M") p.M = value;
    else if (name == "k") p.k = value;
    else if (name == "delta") p.delta = value;
    else if (name == "lambda") p.lambda = value;
    else throw ConfigError("unknown stage parameter " + name);
}

std::vector<LadderPoint> ladder_points(const SweepPlan& plan) {
    std::vector<LadderPoint> out;
    if (plan.stages.empty()) {
        out.push_back({-1, 0, "", 0.0, plan.params});
        return out;
    }
    Params frozen = plan.params;
    for (std::size_t s = 0; s < plan.stages.size(); ++s) {
        const Stage& st = plan.stages[s];
        for (std::size_t i = 0; i < st.values.size(); ++i) {
            LadderPoint p{int(s), int(i), st.param, st.values[i], frozen};
            set_stage_param(p.params, st.param, st.values[i]);
            out.push_back(p);
        }
        set_stage_param(frozen, st.param, st.values.back());
    }
    return out;
}

StageConfig stage_config(const SweepPlan& plan, const Params& params) {
    StageConfig c;
    c.grid = plan.grid;
    c.params = params;
    c.options = plan.options;
    const int d = plan.grid.dim;
    const InitialSpec& is = plan.initial;
    switch (is.kind) {
        case InitialKind::Default: c.initial = default_initial_data(d, is.amplitude); break;
        case InitialKind::Rest:
        case InitialKind::Zero: {
            const double r = is.kind == InitialKind::Rest ? is.rho0 : 0.0;
            c.initial.description = is.kind == InitialKind::Rest ? "rest" : "zero";
            c.initial.rho = [r](double, double) { return r; };
            c.initial.u.assign(std::size_t(d), [](double, double) { return 0.0; });
            break;
        }
        case InitialKind::Manufactured: {
            Manufactured ms;
            ms.amplitude = is.amplitude;
            c.initial = ms.initial(d);
            break;
        }
        case InitialKind::Random: {
            std::mt19937_64 rng(plan.seed);
            std::uniform_real_distribution<double> U(-1.0, 1.0);
            struct Mode {
                int kx, ky;
                double a, phase;
            };
            // density modes first, then one set per velocity component
            auto draw = [&](int count) {
                std::vector<Mode> m;
                for (int i = 0; i < count; ++i) {
                    const int kx = 1 + i, ky = d == 2 ? int(std::lround(2 * U(rng))) : 0;
                    m.push_back({kx, ky, U(rng), 3.141592653589793 * U(rng)});
                }
                return m;
            };
            const std::vector<Mode> rm = draw(is.modes);
            const double rho0 = is.rho0, amp = is.amplitude, K = is.modes;
            c.initial.description = "random";
            c.initial.rho = [rm, rho0, K](double x, double y) {
                double s = 0;
                for (const Mode& m : rm) s += m.a * std::cos(m.kx * x + m.ky * y + m.phase);
                return rho0 * (1.0 + 0.3 * s / K);
            };
            for (int comp = 0; comp < d; ++comp) {
                const std::vector<Mode> um = draw(is.modes);
                c.initial.u.push_back([um, amp, K](double x, double y) {
                    double s = 0;
                    for (const Mode& m : um) s += m.a * std::sin(m.kx * x + m.ky * y + m.phase);
                    return amp * s / K;
                });
            }
            break;
        }
    }
    if (plan.manufactured_forcing) {
        Manufactured ms;
        ms.amplitude = is.amplitude;
        c.forcing = ms.forcing(c.grid, c.params, c.options);
    }
    return c;
}

}  // namespace nslab
