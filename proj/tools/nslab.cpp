// nslab command line: simulate, sweep, diagnose, verify-lemma, report.
#include <cmath>
#include <filesystem>
#include <iostream>

#include "CLI11.hpp"
#include "nslab/checkpoint.hpp"
#include "nslab/diagnostics.hpp"
#include "nslab/errors.hpp"
#include "nslab/harness.hpp"

using namespace nslab;
using nlohmann::json;

namespace {

enum Exit { kOk = 0, kConfig = 2, kNumerical = 3, kIo = 4 };

json num(double v) {
    if (std::isnan(v)) return nullptr;
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    return v;
}

SweepPlan load(const std::string& path, int workers, const std::string& out) {
    SweepPlan plan = parse_config(path);
    apply_env_overrides(plan);
    if (workers > 0) plan.workers = workers;
    if (!out.empty()) plan.output_root = out;
    return plan;
}

int simulate(const std::string& config, const std::string& out) {
    SweepPlan plan = load(config, 0, out);
    plan.stages.clear();
    const std::string dir = plan.output_root + "/" + plan.name;
    const RunSummary s = run_point(plan, ladder_points(plan).front(), dir);
    std::cout << json{{"dir", dir},
                      {"ok", s.ok},
                      {"failure", s.failure},
                      {"max_energy_residual", num(s.max_energy_residual)},
                      {"max_evf_residual", num(s.max_evf_residual)}}
                     .dump()
              << "\n";
    if (!s.ok) std::cerr << "numerical failure: " << s.failure << "\n";
    return s.ok ? kOk : kNumerical;
}

int sweep(const std::string& config, int workers, const std::string& out) {
    const SweepPlan plan = load(config, workers, out);
    const std::string dir = plan.output_root + "/" + plan.name;
    const SweepReport r = run_sweep(plan, dir);
    std::cout << report_to_markdown(r);
    for (const RunSummary& s : r.runs)
        if (!s.ok) std::cerr << "run " << s.point.id() << " failed: " << s.failure << "\n";
    return r.complete ? kOk : kNumerical;
}

int diagnose(const std::string& path, const std::vector<double>& hs, double sigma, double zeta) {
    const Checkpoint ck = read_checkpoint(path);
    const FluidState& s = ck.state;
    const EnergyTerms e = energy_terms(s, ck.params, SolverOptions{});
    const Field G = evf(s, ck.params, SolverOptions{});
    json out = {{"t", s.t},
                {"step", s.step},
                {"grid", {{"d", s.grid().dim}, {"n", s.grid().n}}},
                {"mass", e.mass},
                {"kinetic", e.kinetic},
                {"internal", e.internal},
                {"dissipation", e.dissipation},
                {"damping", e.damping},
                {"evf_mean", G.mean()},
                {"evf_max_abs", G.max_abs()},
                {"min_w", s.w.min()},
                {"max_rho_w", hadamard(s.rho, s.w).max()},
                {"rho_logw", num(rho_log_w(s.rho, s.w))}};
    json R = json::object(), plain = json::object(), split = json::object();
    for (double h : hs) {
        const std::string k = format_double(h);
        R[k] = kolmogorov_weighted(s.rho, s.w, h, sigma, true);
        plain[k] = kolmogorov_plain({s.rho}, h, 1.0);
        const WeightRemovalSplit w = weight_removal_split(s.rho, s.w, h, zeta);
        split[k] = {{"region1", w.region1}, {"region2", w.region2}, {"I1_bound", num(w.I1_bound)}, {"I2_bound", num(w.I2_bound)}};
    }
    out["sigma"] = sigma;
    out["zeta"] = zeta;
    out["R_h"] = R;
    out["plain"] = plain;
    out["weight_removal"] = split;
    std::cout << out.dump(2) << "\n";
    return kOk;
}

int report(const std::string& dir) {
    const SweepReport r = report_from_dir(dir);
    write_report(r, dir);
    emit_plots(r, dir + "/plots");
    std::cout << report_to_markdown(r);
    return r.complete ? kOk : kNumerical;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"nslab: regularized compressible Navier-Stokes experiments on the periodic torus"};
    app.require_subcommand(1);
    app.set_version_flag("--version", version_stamp());

    std::string config, out, ckpt, dir, lemma;
    int workers = 0;
    std::vector<double> hs{0.2, 0.05, 0.0125};
    double sigma = 1e-3, zeta = 0.1;
    std::vector<std::string> lemma_params;

    auto* sim = app.add_subcommand("simulate", "run one trajectory from a config");
    sim->add_option("config", config, "JSON config")->required();
    sim->add_option("--out", out, "output root (overrides config and NSLAB_OUTPUT_ROOT)");

    auto* sw = app.add_subcommand("sweep", "run the staged parameter ladders of a config");
    sw->add_option("config", config, "JSON config")->required();
    sw->add_option("--workers", workers, "parallel runs per stage (overrides NSLAB_WORKERS)")->check(CLI::PositiveNumber);
    sw->add_option("--out", out, "output root (overrides config and NSLAB_OUTPUT_ROOT)");

    auto* dg = app.add_subcommand("diagnose", "functionals of a checkpointed state");
    dg->set_help_flag("--help", "print this help message and exit");
    dg->add_option("checkpoint", ckpt, "checkpoint file")->required();
    dg->add_option("--h", hs, "kernel widths")->delimiter(',');
    dg->add_option("--sigma", sigma, "smoothed modulus seam")->check(CLI::PositiveNumber);
    dg->add_option("--zeta", zeta, "weight-removal level");

    auto* vl = app.add_subcommand("verify-lemma", "numerical check of a named lemma");
    vl->add_option("name", lemma, "lemma name")->required()->check(CLI::IsMember(lemma_names()));
    vl->add_option("--params", lemma_params, "key=value, lists separated by ':'");

    auto* rp = app.add_subcommand("report", "rebuild the report of a run or sweep directory");
    rp->add_option("dir", dir, "run or sweep directory")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kConfig;
    }

    try {
        if (*sim) return simulate(config, out);
        if (*sw) return sweep(config, workers, out);
        if (*dg) return diagnose(ckpt, hs, sigma, zeta);
        if (*vl) {
            std::cout << verify_lemma(lemma, parse_lemma_params(lemma_params)).dump(2) << "\n";
            return kOk;
        }
        if (*rp) return report(dir);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kConfig;
    } catch (const NumericalError& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return kNumerical;
    } catch (const IoError& e) {
        std::cerr << "I/O error: " << e.what() << "\n";
        return kIo;
    } catch (const std::filesystem::filesystem_error& e) {
        std::cerr << "I/O error: " << e.what() << "\n";
        return kIo;
    } catch (const std::invalid_argument& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kConfig;
    }
    return kOk;
}
