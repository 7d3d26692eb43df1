#include <algorithm>
#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

#include "nslab/checkpoint.hpp"
#include "nslab/diagnostics.hpp"
#include "nslab/errors.hpp"
#include "nslab/harness.hpp"

namespace nslab {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

void make_dir(const std::string& d) {
    std::error_code ec;
    fs::create_directories(d, ec);
    if (ec) throw IoError("cannot create " + d + ": " + ec.message());
}

void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path);
    out << text;
    if (!out) throw IoError("write failed for " + path);
}

std::string read_text(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot read " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

json num(double v) {
    if (std::isnan(v)) return nullptr;
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    return v;
}

SweepPlan single_run_plan(const SweepPlan& plan, const LadderPoint& p) {
    SweepPlan s = plan;
    s.stages.clear();
    s.params = p.params;
    s.workers = 1;
    s.name = p.id();
    return s;
}

// time means and maxima shared by the live and the rebuilt report
void summarize(const RecordTable& t, RunSummary& s) {
    s.h = t.h;
    s.R_mean.assign(t.h.size(), 0.0);
    s.max_energy_residual = 0.0;
    s.max_evf_residual = 0.0;
    for (const DiagnosticsRecord& r : t.rows) {
        for (std::size_t i = 0; i < t.h.size(); ++i) s.R_mean[i] += r.R_h[i];
        s.max_energy_residual = std::max(s.max_energy_residual, std::abs(r.energy_residual));
        s.max_evf_residual = std::max(s.max_evf_residual, std::abs(r.evf_residual));
    }
    if (!t.rows.empty())
        for (double& v : s.R_mean) v /= double(t.rows.size());
}

json final_state_diagnostics(const Trajectory& tr, const DiagnosticsSpec& spec) {
    json out = json::object();
    auto guarded = [&](const char* key, auto&& fn) {
        try {
            out[key] = fn();
        } catch (const std::exception& e) {
            out[key] = {{"error", e.what()}};
        }
    };
    const FluidState& s = tr.snapshots.back().state;
    if (!spec.h.empty()) {
        guarded("plain", [&] {
            json p = json::object();
            for (double h : spec.h) p[format_double(h)] = num(kolmogorov_plain({s.rho}, h, 1.0));
            return p;
        });
        guarded("weight_removal", [&] {
            const WeightRemovalSplit w = weight_removal_split(s.rho, s.w, spec.h.front(), spec.zeta);
            return json{{"h", spec.h.front()},      {"zeta", spec.zeta},         {"region1", num(w.region1)},
                        {"region2", num(w.region2)}, {"I1_bound", num(w.I1_bound)}, {"I2_bound", num(w.I2_bound)}};
        });
    }
    if (!spec.eta.empty())
        guarded("regularization_defect", [&] {
            const RegularizationDefect r = regularization_defect(tr, spec.eta);
            json d = json::array();
            for (double v : r.defect) d.push_back(num(v));
            return json{{"eta", r.eta}, {"defect", d}, {"theta", num(r.theta)}};
        });
    if (spec.bogovskii_tc > 0)
        guarded("bogovskii", [&] {
            const BogovskiiTerms b = bogovskii_functional(tr, BumpProfile{spec.bogovskii_tc});
            return json{{"lhs", num(b.lhs)}, {"I0", num(b.I0)}, {"I1", num(b.I1)}, {"I2", num(b.I2)},
                        {"I3", num(b.I3)},   {"I4", num(b.I4)}, {"I5", num(b.I5)}, {"Is", num(b.Is)},
                        {"If", num(b.If)},   {"rhs", num(b.rhs)}, {"residual", num(b.residual)}};
        });
    return out;
}

double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    int n = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (!(x[i] > 0 && y[i] > 0) || !std::isfinite(y[i])) continue;
        const double a = std::log(x[i]), b = std::log(y[i]);
        sx += a, sy += b, sxx += a * a, sxy += a * b, ++n;
    }
    if (n < 2) return NAN;
    const double den = n * sxx - sx * sx;
    return den == 0 ? NAN : (n * sxy - sx * sy) / den;
}

bool decreases_with_h(const std::vector<double>& h, const std::vector<double>& R) {
    std::vector<std::size_t> idx(h.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return h[a] < h[b]; });
    for (std::size_t i = 1; i < idx.size(); ++i)
        if (!(R[idx[i - 1]] <= R[idx[i]] * (1 + 1e-12))) return false;
    return true;
}

}  // namespace

std::string version_stamp() { return NSLAB_VERSION; }

RunSummary run_point(const SweepPlan& plan, const LadderPoint& point, const std::string& dir) {
    RunSummary sum;
    sum.point = point;
    sum.dir = "runs/" + point.id();
    make_dir(dir);
    make_dir(dir + "/checkpoints");
    const SweepPlan single = single_run_plan(plan, point);
    write_text(dir + "/config.json", plan_to_json(single).dump(2) + "\n");
    write_text(dir + "/VERSION", version_stamp() + "\n");
    fs::remove(dir + "/FAILED");

    RecordTable table;
    table.h = plan.diagnostics.h;
    try {
        const Trajectory tr = run(stage_config(plan, point.params));
        if (!tr.ok) {
            sum.ok = false;
            sum.failure = tr.failure;
        }
        const int every = plan.diagnostics.checkpoint_every;
        const json extra = {{"version", version_stamp()}, {"run", point.id()}};
        for (std::size_t j = 0; j < tr.snapshots.size(); ++j) {
            if (every > 0 && j % std::size_t(every) == 0) {
                const FluidState& s = tr.snapshots[j].state;
                write_checkpoint(dir + "/checkpoints/step_" + std::to_string(s.step) + ".ckpt", s, tr.params, extra);
            }
        }
        write_checkpoint(dir + "/checkpoints/final.ckpt", tr.snapshots.back().state, tr.params, extra);
        table = diagnose_trajectory(tr, plan.diagnostics);
        if (tr.snapshots.size() >= 3) sum.extra = final_state_diagnostics(tr, plan.diagnostics);
    } catch (const NumericalError& e) {
        sum.ok = false;
        sum.failure = e.what();
    }
    emit_csv(table, dir + "/diagnostics.csv");
    summarize(table, sum);
    write_text(dir + "/extra.json", sum.extra.dump(2) + "\n");
    if (!sum.ok) write_text(dir + "/FAILED", sum.failure + "\n");
    RunSummary as_base = sum;
    as_base.point = ladder_points(single).front();
    as_base.dir = ".";
    write_report(build_report(single, {as_base}), dir);
    emit_run_plots(table, dir + "/plots");
    return sum;
}

SweepReport run_sweep(const SweepPlan& plan, const std::string& dir) {
    make_dir(dir);
    write_text(dir + "/config.json", plan_to_json(plan).dump(2) + "\n");
    write_text(dir + "/VERSION", version_stamp() + "\n");
    const std::vector<LadderPoint> points = ladder_points(plan);
    std::vector<RunSummary> results(points.size());

    // stages in sequence, ladder points of one stage on the pool
    std::size_t begin = 0;
    while (begin < points.size()) {
        std::size_t end = begin;
        while (end < points.size() && points[end].stage == points[begin].stage) ++end;
        std::atomic<std::size_t> next{begin};
        std::mutex err_mu;
        std::exception_ptr err;
        auto worker = [&] {
            for (;;) {
                const std::size_t i = next.fetch_add(1);
                if (i >= end) return;
                try {
                    results[i] = run_point(plan, points[i], dir + "/runs/" + points[i].id());
                } catch (...) {
                    std::lock_guard lk(err_mu);
                    if (!err) err = std::current_exception();
                }
            }
        };
        const std::size_t nw = std::min<std::size_t>(std::size_t(plan.workers), end - begin);
        std::vector<std::jthread> pool;
        for (std::size_t w = 1; w < nw; ++w) pool.emplace_back(worker);
        worker();
        pool.clear();
        if (err) std::rethrow_exception(err);
        begin = end;
    }

    SweepReport report = build_report(plan, results);
    std::string combined = "run," + csv_header(plan.diagnostics.h) + "\n";
    for (const RunSummary& r : report.runs) {
        const std::string text = read_text(dir + "/" + r.dir + "/diagnostics.csv");
        std::istringstream in(text);
        std::string line;
        std::getline(in, line);
        while (std::getline(in, line))
            if (!line.empty()) combined += r.point.id() + "," + line + "\n";
    }
    write_text(dir + "/records.csv", combined);
    write_report(report, dir);
    emit_plots(report, dir + "/plots");
    return report;
}

SweepReport build_report(const SweepPlan& plan, std::vector<RunSummary> runs) {
    SweepReport rep;
    std::sort(runs.begin(), runs.end(), [](const RunSummary& a, const RunSummary& b) {
        return std::pair(a.point.stage, a.point.index) < std::pair(b.point.stage, b.point.index);
    });
    rep.runs = std::move(runs);
    for (const RunSummary& r : rep.runs) rep.complete = rep.complete && r.ok;
    const std::size_t nst = std::max<std::size_t>(1, plan.stages.size());
    for (std::size_t s = 0; s < nst; ++s) {
        StageReport st;
        st.param = plan.stages.empty() ? "" : plan.stages[s].param;
        st.h = plan.diagnostics.h;
        for (const RunSummary& r : rep.runs) {
            if (r.point.stage != (plan.stages.empty() ? -1 : int(s))) continue;
            st.values.push_back(r.point.value);
            st.R.push_back(r.R_mean);
            st.slope.push_back(loglog_slope(st.h, r.R_mean));
            st.trend.push_back(r.ok && decreases_with_h(st.h, r.R_mean));
        }
        rep.stages.push_back(std::move(st));
    }
    return rep;
}

SweepReport report_from_dir(const std::string& dir) {
    if (!fs::exists(dir + "/config.json")) throw IoError("no config.json in " + dir);
    const SweepPlan plan = parse_config(dir + "/config.json");
    std::vector<RunSummary> runs;
    const bool single = plan.stages.empty() && !fs::exists(dir + "/runs");
    for (const LadderPoint& p : ladder_points(plan)) {
        RunSummary s;
        s.point = p;
        s.dir = single ? "." : "runs/" + p.id();
        const std::string rd = dir + "/" + s.dir;
        if (!fs::exists(rd + "/diagnostics.csv")) {
            s.ok = false;
            s.failure = "missing diagnostics.csv";
            s.h = plan.diagnostics.h;
            s.R_mean.assign(s.h.size(), NAN);
            runs.push_back(s);
            continue;
        }
        summarize(read_csv(rd + "/diagnostics.csv"), s);
        if (fs::exists(rd + "/FAILED")) {
            s.ok = false;
            s.failure = read_text(rd + "/FAILED");
            if (!s.failure.empty() && s.failure.back() == '\n') s.failure.pop_back();
        }
        if (fs::exists(rd + "/extra.json")) s.extra = json::parse(read_text(rd + "/extra.json"));
        runs.push_back(s);
    }
    return build_report(plan, runs);
}

json report_to_json(const SweepReport& r) {
    json runs = json::array();
    for (const RunSummary& s : r.runs) {
        json R = json::object();
        for (std::size_t i = 0; i < s.h.size(); ++i) R[format_double(s.h[i])] = num(s.R_mean[i]);
        runs.push_back({{"id", s.point.id()},
                        {"stage", s.point.stage},
                        {"param", s.point.param},
                        {"value", num(s.point.value)},
                        {"dir", s.dir},
                        {"ok", s.ok},
                        {"failure", s.failure},
                        {"R_mean", R},
                        {"max_energy_residual", num(s.max_energy_residual)},
                        {"max_evf_residual", num(s.max_evf_residual)},
                        {"extra", s.extra}});
    }
    json stages = json::array();
    for (const StageReport& st : r.stages) {
        json R = json::array(), slope = json::array(), vals = json::array();
        for (const auto& row : st.R) {
            json jr = json::array();
            for (double v : row) jr.push_back(num(v));
            R.push_back(jr);
        }
        for (double v : st.slope) slope.push_back(num(v));
        for (double v : st.values) vals.push_back(num(v));
        stages.push_back({{"param", st.param}, {"values", vals}, {"h", st.h}, {"R", R}, {"slope", slope}, {"trend", st.trend}});
    }
    return {{"version", version_stamp()}, {"complete", r.complete}, {"runs", runs}, {"stages", stages}};
}

std::string report_to_markdown(const SweepReport& r) {
    std::ostringstream o;
    o << "# nslab report\n\n";
    o << "version: " << version_stamp() << "\n\n";
    o << "status: " << (r.complete ? "complete" : "partial (failed runs quarantined)") << "\n\n";
    o << "| run | ok | max energy residual | max evf residual | failure |\n|---|---|---|---|---|\n";
    for (const RunSummary& s : r.runs)
        o << "| " << s.point.id() << " | " << (s.ok ? "yes" : "no") << " | " << format_double(s.max_energy_residual)
          << " | " << format_double(s.max_evf_residual) << " | " << s.failure << " |\n";
    for (const StageReport& st : r.stages) {
        if (st.h.empty()) continue;
        o << "\n## R_h, stage " << (st.param.empty() ? "base" : st.param) << "\n\n| value |";
        for (double h : st.h) o << " h=" << format_double(h) << " |";
        o << " slope | trend |\n|---|";
        for (std::size_t i = 0; i < st.h.size() + 2; ++i) o << "---|";
        o << "\n";
        for (std::size_t j = 0; j < st.R.size(); ++j) {
            o << "| " << format_double(st.values[j]) << " |";
            for (double v : st.R[j]) o << " " << format_double(v) << " |";
            o << " " << format_double(st.slope[j]) << " | " << (st.trend[j] ? "yes" : "no") << " |\n";
        }
    }
    return o.str();
}

void write_report(const SweepReport& r, const std::string& dir) {
    write_text(dir + "/report.json", report_to_json(r).dump(2) + "\n");
    write_text(dir + "/report.md", report_to_markdown(r));
}

void emit_plots(const SweepReport& r, const std::string& dir) {
    make_dir(dir);
    for (std::size_t s = 0; s < r.stages.size(); ++s) {
        const StageReport& st = r.stages[s];
        if (st.h.empty()) continue;
        std::vector<Series> series;
        for (std::size_t j = 0; j < st.R.size(); ++j)
            series.push_back({(st.param.empty() ? std::string("base") : st.param) + "=" + format_double(st.values[j]),
                              st.h, st.R[j]});
        const std::string name = "stage" + std::to_string(s) + (st.param.empty() ? "" : "_" + st.param);
        write_text(dir + "/" + name + "_R_vs_h.svg", svg_line_chart("mean R_h vs h", "h", series, true, true));
    }
}

}  // namespace nslab
