#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "json.hpp"
#include "nslab/diagnostics.hpp"
#include "nslab/solver.hpp"

namespace nslab {

enum class InitialKind { Default, Rest, Zero, Manufactured, Random };

struct InitialSpec {
    InitialKind kind = InitialKind::Default;
    double amplitude = 0.1;  ///< velocity amplitude (default, random, manufactured)
    double rho0 = 1.0;       ///< constant density (rest) or base density (random)
    int modes = 4;           ///< Fourier modes of the random data
};

struct DiagnosticsSpec {
    std::vector<double> h;    ///< kernel widths of the R_h columns
    double sigma = 1e-3;      ///< smoothed modulus seam
    double zeta = 0.1;        ///< weight-removal level
    std::vector<double> eta;  ///< regularization-defect ladder; empty disables
    int evf_form = 1;
    int checkpoint_every = 0;  ///< snapshots between checkpoints; 0 writes only the final state
    double bogovskii_tc = 0.0;  ///< ψ support; 0 disables
};

struct Stage {
    std::string param;  ///< eps, M, k, delta or lambda
    std::vector<double> values;
};

struct SweepPlan {
    Grid grid{1, 128};
    Params params = Params::defaults(1);
    SolverOptions options;
    InitialSpec initial;
    bool manufactured_forcing = false;
    DiagnosticsSpec diagnostics;
    std::vector<Stage> stages;
    std::string output_root = "runs";
    std::string name = "run";
    int workers = 1;
    std::uint64_t seed = 0;
};

/// Reads and validates a JSON config; IoError if unreadable, ConfigError naming the violated constraint.
SweepPlan parse_config(const std::string& path);
SweepPlan plan_from_json(const nlohmann::json& j);
nlohmann::json plan_to_json(const SweepPlan& plan);
/// NSLAB_WORKERS and NSLAB_OUTPUT_ROOT.
void apply_env_overrides(SweepPlan& plan);

/// Parameter sets in run order: one entry per ladder point, earlier stages frozen at their last value.
struct LadderPoint {
    int stage = -1;  ///< -1 for the base run of a plan without stages
    int index = 0;
    std::string param;
    double value = 0.0;
    Params params;
    [[nodiscard]] std::string id() const;
};
std::vector<LadderPoint> ladder_points(const SweepPlan& plan);
void set_stage_param(Params& p, const std::string& name, double value);

StageConfig stage_config(const SweepPlan& plan, const Params& params);

struct DiagnosticsRecord {
    long step = 0;
    double t = 0.0, mass = 0.0, kinetic = 0.0, internal = 0.0;
    double dissipation_cum = 0.0, damping_cum = 0.0, energy_residual = 0.0, evf_residual = 0.0;
    double min_w = 0.0, max_rho_w = 0.0, rho_logw = 0.0;
    std::vector<double> R_h;  ///< normalized weighted functional, one per configured h
};
struct RecordTable {
    std::vector<double> h;
    std::vector<DiagnosticsRecord> rows;
};
RecordTable diagnose_trajectory(const Trajectory& tr, const DiagnosticsSpec& spec);

/// Shortest round-trip decimal; nan, inf, -inf for non-finite values.
std::string format_double(double v);
double parse_double(const std::string& s);
std::string csv_header(const std::vector<double>& h);
std::string to_csv(const RecordTable& table);
RecordTable parse_csv(const std::string& text);
void emit_csv(const RecordTable& table, const std::string& path);
RecordTable read_csv(const std::string& path);

struct RunSummary {
    LadderPoint point;
    std::string dir;
    bool ok = true;
    std::string failure;
    std::vector<double> h;
    std::vector<double> R_mean;  ///< time mean of each R_h column
    double max_energy_residual = 0.0;
    double max_evf_residual = 0.0;
    nlohmann::json extra = nlohmann::json::object();  ///< final-state diagnostics
};

struct StageReport {
    std::string param;
    std::vector<double> values;
    std::vector<double> h;
    std::vector<std::vector<double>> R;  ///< ladder point × h
    std::vector<double> slope;           ///< log-log slope of R against h per ladder point
    std::vector<bool> trend;             ///< R nonincreasing as h decreases
};

struct SweepReport {
    std::vector<RunSummary> runs;
    std::vector<StageReport> stages;
    bool complete = true;
};

/// Runs one ladder point into dir: config snapshot, version stamp, checkpoints, CSV, report, plots.
RunSummary run_point(const SweepPlan& plan, const LadderPoint& point, const std::string& dir);
/// All ladder points; stages in order, points within a stage on a worker pool.
SweepReport run_sweep(const SweepPlan& plan, const std::string& dir);
SweepReport build_report(const SweepPlan& plan, std::vector<RunSummary> runs);
/// Rebuilds the report of a sweep directory from its config snapshot and run CSVs.
SweepReport report_from_dir(const std::string& dir);
nlohmann::json report_to_json(const SweepReport& r);
std::string report_to_markdown(const SweepReport& r);
void write_report(const SweepReport& r, const std::string& dir);

struct Series {
    std::string name;
    std::vector<double> x, y;
};
std::string svg_line_chart(const std::string& title, const std::string& xlabel, const std::vector<Series>& series,
                           bool logx, bool logy);
void emit_run_plots(const RecordTable& table, const std::string& dir);
void emit_plots(const SweepReport& r, const std::string& dir);

std::string version_stamp();

/// Named lemma checks for the CLI; params hold scalars or colon-separated lists.
using LemmaParams = std::map<std::string, std::vector<double>>;
LemmaParams parse_lemma_params(const std::vector<std::string>& kv);
nlohmann::json verify_lemma(const std::string& name, const LemmaParams& params);
const std::vector<std::string>& lemma_names();

/// Smooth random φ windowed by a bump on [0, 1/scale) of the unit time period, and W = ∂_t(−Δ)^{-1}Div φ.
struct LemmaPair {
    SpaceTimeVector phi;
    SpaceTimeScalar W;
};
LemmaPair random_lemma_pair(unsigned seed, double scale, int d, int n, int nt);

}  // namespace nslab
