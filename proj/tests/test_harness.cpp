#include <doctest.h>

#include <bit>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "nslab/errors.hpp"
#include "nslab/harness.hpp"

using namespace nslab;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

fs::path scratch(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("nslab_test_" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

std::string config_error(const json& j) {
    try {
        plan_from_json(j);
    } catch (const ConfigError& e) {
        return e.what();
    }
    return "";
}

json small_run() {
    return {{"grid", {{"d", 1}, {"n", 32}}},
            {"time", {{"dt", 2e-3}, {"t_end", 0.05}, {"snapshot_stride", 5}}},
            {"diagnostics", {{"h", {0.2, 0.1, 0.05}}, {"checkpoint_every", 2}}}};
}

int run_cli(const std::string& args) {
    const int rc = std::system((std::string(NSLAB_CLI) + " " + args + " >/dev/null 2>&1").c_str());
    return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

}  // namespace

TEST_CASE("config: minimal file yields the default material constants") {
    const SweepPlan p = plan_from_json(json::object());
    CHECK(p.params.gamma == 2.0);
    CHECK(p.params.m == 4.0);
    CHECK(p.params.Gamma == 4.5);
    CHECK(p.grid.dim == 1);
    CHECK(p.params.Lambda == doctest::Approx(2.0));
    CHECK(plan_from_json({{"grid", {{"d", 2}, {"n", 16}}}}).params.Lambda == doctest::Approx(2 * std::sqrt(2.0)));
    CHECK(p.stages.empty());
    CHECK(ladder_points(p).size() == 1);
}

TEST_CASE("config: constraint errors name the violated inequality") {
    CHECK(config_error({{"params", {{"Gamma", 3.9}, {"m", 4}}}}).find("m+1 > Γ ≥ m") != std::string::npos);
    CHECK(config_error({{"params", {{"mu", 0}}}}).find("μ > 0, 2μ + dξ > 0") != std::string::npos);
    CHECK(config_error({{"params", {{"mu", 1}, {"xi", -2.5}}}}).find("μ > 0, 2μ + dξ > 0") != std::string::npos);
    CHECK(config_error({{"params", {{"gamma", 1.2}}}}).find("γ ≥ 3/2") != std::string::npos);
    CHECK(config_error({{"params", {{"m", 2}, {"Gamma", 2.5}}}}).find("m + 1 ≥ 4") != std::string::npos);
    CHECK(config_error({{"params", {{"M", -1}}}}).find("M > 0") != std::string::npos);
    CHECK(config_error({{"time", {{"dt", 0}}}}).find("dt > 0") != std::string::npos);
    CHECK(config_error({{"grid", {{"n", 12}}}}).find("power of two") != std::string::npos);
    // a ladder point may also break a constraint
    CHECK(config_error({{"sweep", {{"stages", {{{"param", "eps"}, {"values", {0.1, -0.1}}}}}}}})
              .find("ε, δ, k, λ >= 0") != std::string::npos);
}

TEST_CASE("config: strict keys, ladders and stage order") {
    CHECK(config_error({{"grdi", {{"n", 32}}}}).find("unknown key in config: grdi") != std::string::npos);
    CHECK(config_error({{"params", {{"Mu", 1}}}}).find("unknown key in params: Mu") != std::string::npos);
    CHECK(config_error({{"strict", false}, {"grdi", 1}, {"params", {{"Mu", 1}}}}).empty());
    auto stage = [](const std::string& p, std::vector<json> v) { return json{{"param", p}, {"values", v}}; };
    CHECK(config_error({{"sweep", {{"stages", {stage("eps", {0.1, 0.2})}}}}}).find("strictly decreasing") != std::string::npos);
    CHECK(config_error({{"sweep", {{"stages", {stage("M", {8, 4})}}}}}).find("strictly increasing") != std::string::npos);
    CHECK(config_error({{"sweep", {{"stages", {stage("k", {0.1}), stage("eps", {0.1})}}}}}).find("nesting order") !=
          std::string::npos);
    CHECK(config_error({{"sweep", {{"stages", {stage("mu", {1.0})}}}}}).find("one of eps") != std::string::npos);
    CHECK(config_error({{"sweep", {{"stages", {stage("M", {4, 8, "inf"})}}}}}).empty());
    CHECK(config_error({{"diagnostics", {{"eta", {0.1, 0.2}}}}}).find("at least three") != std::string::npos);
    CHECK(config_error({{"diagnostics", {{"zeta", 1.5}}}}).find("0 < ζ < 1") != std::string::npos);
    CHECK(config_error({{"diagnostics", {{"h", {0.6}}}}}).find("0 < h < 1/2") != std::string::npos);
    CHECK(config_error({{"grid", {{"d", 2}, {"n", 16}}}, {"forcing", {{"kind", "manufactured"}}}}).find("one-dimensional") !=
          std::string::npos);
    CHECK(config_error({{"time", {{"dt", "fast"}}}}).find("time.dt: expected a number") != std::string::npos);
    CHECK(config_error(json::array()).find("JSON object") != std::string::npos);
}

TEST_CASE("config: file errors and JSON round trip") {
    CHECK_THROWS_AS(parse_config("/nonexistent/nslab.json"), IoError);
    const fs::path d = scratch("cfg");
    {
        std::ofstream(d / "bad.json") << "{ \"grid\": ";
    }
    CHECK_THROWS_AS(parse_config((d / "bad.json").string()), ConfigError);
    json j = small_run();
    j["sweep"] = {{"stages", {{{"param", "eps"}, {"values", {0.2, 0.1}}}, {{"param", "M"}, {"values", {4, "inf"}}}}},
                  {"workers", 3},
                  {"seed", 11}};
    j["solver"] = {{"eps_kernel", "kh"}, {"mass_fixer", true}};
    j["initial"] = {{"kind", "random"}, {"modes", 3}};
    const SweepPlan p = plan_from_json(j);
    const json back = plan_to_json(p);
    CHECK(plan_to_json(plan_from_json(back)) == back);
    CHECK(back["sweep"]["stages"][1]["values"][1] == "inf");
    CHECK(back["solver"]["eps_kernel"] == "kh");
    CHECK(p.seed == 11);
}

TEST_CASE("ladder points freeze earlier stages at their last value") {
    json j = small_run();
    j["sweep"] = {{"stages",
                   {{{"param", "eps"}, {"values", {0.2, 0.1}}},
                    {{"param", "M"}, {"values", {4, 8}}},
                    {{"param", "lambda"}, {"values", {0.1, 0.01}}}}}};
    const auto pts = ladder_points(plan_from_json(j));
    REQUIRE(pts.size() == 6);
    CHECK(pts[0].params.eps == 0.2);
    CHECK(std::isinf(pts[1].params.M));
    CHECK(pts[2].params.eps == 0.1);
    CHECK(pts[3].params.M == 8);
    CHECK(pts[4].params.eps == 0.1);
    CHECK(pts[4].params.M == 8);
    CHECK(pts[4].params.lambda == 0.1);
    CHECK(pts[5].params.lambda == 0.01);
    CHECK(pts[3].id() == "s1_M_01");
}

TEST_CASE("environment overrides") {
    SweepPlan p = plan_from_json(json::object());
    setenv("NSLAB_WORKERS", "6", 1);
    setenv("NSLAB_OUTPUT_ROOT", "/tmp/elsewhere", 1);
    apply_env_overrides(p);
    CHECK(p.workers == 6);
    CHECK(p.output_root == "/tmp/elsewhere");
    setenv("NSLAB_WORKERS", "zero", 1);
    CHECK_THROWS_AS(apply_env_overrides(p), ConfigError);
    unsetenv("NSLAB_WORKERS");
    unsetenv("NSLAB_OUTPUT_ROOT");
}

TEST_CASE("csv: frozen header, empty ladder, shortest round-trip floats") {
    CHECK(csv_header({}) ==
          "step,t,mass,kinetic,internal,dissipation_cum,damping_cum,energy_residual,evf_residual,min_w,max_rho_w,rho_logw");
    CHECK(csv_header({0.2, 0.0125}) ==
          "step,t,mass,kinetic,internal,dissipation_cum,damping_cum,energy_residual,evf_residual,min_w,max_rho_w,rho_logw,"
          "R_h_0.2,R_h_0.0125");
    CHECK(to_csv(RecordTable{}) == csv_header({}) + "\n");
    CHECK(format_double(0.1) == "0.1");
    CHECK(format_double(1e-300) == "1e-300");
    CHECK(format_double(INFINITY) == "inf");
    CHECK(format_double(-INFINITY) == "-inf");
    CHECK(format_double(NAN) == "nan");
    CHECK(std::isnan(parse_double("nan")));
    CHECK_THROWS_AS(parse_double("1.5x"), IoError);
    std::mt19937_64 rng(3);
    for (int i = 0; i < 2000; ++i) {
        const double v = std::bit_cast<double>(rng());
        if (!std::isfinite(v)) continue;
        CHECK(parse_double(format_double(v)) == v);
    }
}

TEST_CASE("csv: parse and re-emit is byte-identical") {
    RecordTable t;
    t.h = {0.2, 0.05};
    std::mt19937_64 rng(5);
    std::normal_distribution<double> nd;
    for (int s = 0; s < 5; ++s) {
        DiagnosticsRecord r;
        r.step = 10 * s;
        r.t = 0.01 * s;
        r.mass = nd(rng), r.kinetic = nd(rng), r.internal = nd(rng), r.dissipation_cum = nd(rng);
        r.damping_cum = nd(rng), r.energy_residual = nd(rng) * 1e-9, r.evf_residual = nd(rng);
        r.min_w = 1.0, r.max_rho_w = nd(rng), r.rho_logw = s == 4 ? INFINITY : nd(rng);
        r.R_h = {nd(rng), nd(rng)};
        t.rows.push_back(r);
    }
    const std::string a = to_csv(t);
    CHECK(to_csv(parse_csv(a)) == a);
    CHECK_THROWS_AS(parse_csv("step,t\n1,2\n"), IoError);
    CHECK_THROWS_AS(parse_csv(csv_header({}) + "\n1,2\n"), IoError);
}

TEST_CASE("svg charts are standalone documents") {
    const std::string s = svg_line_chart("x", "t", {{"a", {1, 2, 3}, {1, 4, 9}}, {"b", {1, 2}, {0, -1}}}, true, true);
    CHECK(s.rfind("<svg xmlns=\"http://www.w3.org/2000/svg\"", 0) == 0);
    CHECK(s.find("</svg>") != std::string::npos);
    CHECK(s.find("nan") == std::string::npos);
    const std::string e = svg_line_chart("empty", "t", {}, false, false);
    CHECK(e.find("</svg>") != std::string::npos);
}

TEST_CASE("run directory contents and bit-exact reproduction from the snapshot") {
    const fs::path d = scratch("run");
    const SweepPlan plan = plan_from_json(small_run());
    const RunSummary s = run_point(plan, ladder_points(plan).front(), (d / "a").string());
    CHECK(s.ok);
    for (const char* f : {"config.json", "VERSION", "diagnostics.csv", "report.json", "report.md", "checkpoints/final.ckpt",
                          "checkpoints/step_0.ckpt", "checkpoints/step_10.ckpt", "plots/mass.svg", "plots/R_h.svg"})
        CHECK_MESSAGE(fs::exists(d / "a" / f), f);
    CHECK(slurp(d / "a" / "VERSION") == version_stamp() + "\n");
    const RecordTable t = read_csv((d / "a" / "diagnostics.csv").string());
    CHECK(t.rows.size() == 6);
    CHECK(t.h.size() == 3);
    for (std::size_t i = 1; i < t.rows.size(); ++i) CHECK(t.rows[i].dissipation_cum >= t.rows[i - 1].dissipation_cum);

    const SweepPlan again = parse_config((d / "a" / "config.json").string());
    run_point(again, ladder_points(again).front(), (d / "b").string());
    CHECK(slurp(d / "a" / "diagnostics.csv") == slurp(d / "b" / "diagnostics.csv"));
    CHECK(report_to_json(report_from_dir((d / "a").string())) == json::parse(slurp(d / "a" / "report.json")));
}

TEST_CASE("sweep: one-point ladder equals the single run") {
    const fs::path d = scratch("onept");
    json j = small_run();
    const SweepPlan base = plan_from_json(j);
    run_point(base, ladder_points(base).front(), (d / "single").string());
    j["sweep"] = {{"stages", {{{"param", "eps"}, {"values", {base.params.eps}}}}}};
    const SweepReport r = run_sweep(plan_from_json(j), (d / "sweep").string());
    REQUIRE(r.runs.size() == 1);
    CHECK(slurp(d / "single" / "diagnostics.csv") == slurp(d / "sweep" / "runs" / "s0_eps_00" / "diagnostics.csv"));
    const json single = json::parse(slurp(d / "single" / "report.json"));
    CHECK(single["runs"][0]["R_mean"] == report_to_json(r)["runs"][0]["R_mean"]);
    CHECK(single["runs"][0]["max_energy_residual"] == report_to_json(r)["runs"][0]["max_energy_residual"]);
}

TEST_CASE("sweep: eps ladder trends down in h, worker count does not change results") {
    const fs::path d = scratch("sweep");
    json j = small_run();
    j["time"]["t_end"] = 0.1;
    j["sweep"] = {{"stages", {{{"param", "eps"}, {"values", {0.2, 0.1, 0.05}}}, {{"param", "k"}, {"values", {0.2, 0.1}}}}},
                  {"workers", 1}};
    SweepPlan p1 = plan_from_json(j);
    const SweepReport r1 = run_sweep(p1, (d / "w1").string());
    SweepPlan p8 = p1;
    p8.workers = 8;
    const SweepReport r8 = run_sweep(p8, (d / "w8").string());
    CHECK(r1.complete);
    REQUIRE(r1.stages.size() == 2);
    for (bool t : r1.stages[0].trend) CHECK(t);
    CHECK(r1.stages[0].R.size() == 3);
    CHECK(slurp(d / "w1" / "records.csv") == slurp(d / "w8" / "records.csv"));
    for (const RunSummary& s : r1.runs)
        CHECK(slurp(d / "w1" / s.dir / "diagnostics.csv") == slurp(d / "w8" / s.dir / "diagnostics.csv"));
    json a = report_to_json(r1), b = report_to_json(r8);
    CHECK(a == b);
    CHECK(report_to_json(report_from_dir((d / "w8").string())) == b);
    CHECK(fs::exists(d / "w1" / "plots" / "stage0_eps_R_vs_h.svg"));
}

TEST_CASE("sweep: numerical failures are quarantined and the report is partial") {
    const fs::path d = scratch("fail");
    json j = small_run();
    j["initial"] = {{"kind", "default"}, {"amplitude", 2.0}};
    j["sweep"] = {{"stages", {{{"param", "eps"}, {"values", {0.2, 0.1}}}}}};
    j["solver"] = {{"cfl_max", 0.01}};
    const SweepReport r = run_sweep(plan_from_json(j), (d / "s").string());
    CHECK_FALSE(r.complete);
    for (const RunSummary& s : r.runs) {
        CHECK_FALSE(s.ok);
        CHECK(s.failure.find("CFL") != std::string::npos);
        CHECK(fs::exists(d / "s" / s.dir / "FAILED"));
    }
    CHECK(slurp(d / "s" / "report.md").find("partial") != std::string::npos);
    CHECK_FALSE(report_from_dir((d / "s").string()).complete);
}

TEST_CASE("verify-lemma dispatch") {
    const json n = verify_lemma("normK", parse_lemma_params({"h=0.01:0.001"}));
    CHECK(n["ratio"].size() == 2);
    CHECK(n["relative_spread"].get<double>() < 0.25);
    CHECK(verify_lemma("kolmogorov", parse_lemma_params({"n=256", "count=4"}))["smooth_ratio"].get<double>() < 1.0);
    CHECK(verify_lemma("lagrange", parse_lemma_params({"pairs=50"}))["constant"].get<double>() > 0.0);
    CHECK_THROWS_AS(verify_lemma("normK", parse_lemma_params({"q=1"})), ConfigError);
    CHECK_THROWS_AS(verify_lemma("nope", {}), ConfigError);
    CHECK_THROWS_AS(parse_lemma_params({"h"}), ConfigError);
    CHECK_THROWS_AS(parse_lemma_params({"h=abc"}), ConfigError);
    CHECK(lemma_names().size() == 7);
}

TEST_CASE("cli exit codes") {
    const fs::path d = scratch("cli");
    {
        std::ofstream(d / "ok.json") << small_run().dump();
        std::ofstream(d / "gamma.json") << json{{"params", {{"Gamma", 3.9}}}}.dump();
        json f = small_run();
        f["solver"] = {{"cfl_max", 0.01}};
        f["initial"] = {{"amplitude", 2.0}};
        std::ofstream(d / "cfl.json") << f.dump();
    }
    const std::string out = " --out " + d.string();
    CHECK(run_cli("simulate " + (d / "ok.json").string() + out) == 0);
    CHECK(run_cli("report " + (d / "run").string()) == 0);
    CHECK(run_cli("diagnose " + (d / "run" / "checkpoints" / "final.ckpt").string() + " --h 0.1,0.05 --sigma 1e-3") == 0);
    CHECK(run_cli("simulate " + (d / "gamma.json").string() + out) == 2);
    CHECK(run_cli("simulate " + (d / "cfl.json").string() + out) == 3);
    CHECK(run_cli("simulate " + (d / "missing.json").string()) == 4);
    CHECK(run_cli("diagnose " + (d / "missing.ckpt").string()) == 4);
    CHECK(run_cli("verify-lemma normK --params h=0.01") == 0);
    CHECK(run_cli("verify-lemma normK --params bogus=1") == 2);
    CHECK(run_cli("frobnicate") == 2);
}
