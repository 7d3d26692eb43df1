#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "nslab/diagnostics.hpp"
#include "nslab/errors.hpp"
#include "nslab/harness.hpp"

namespace nslab {

namespace {

constexpr const char* kFixedHeader =
    "step,t,mass,kinetic,internal,dissipation_cum,damping_cum,energy_residual,evf_residual,min_w,max_rho_w,rho_logw";
constexpr int kFixedColumns = 12;

std::vector<std::string> split(const std::string& line, char sep) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : line) {
        if (c == sep) {
            out.push_back(cur);
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    out.push_back(cur);
    return out;
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

}  // namespace

std::string format_double(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[64];
    const auto r = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, r.ptr);
}

double parse_double(const std::string& s) {
    double v = 0.0;
    const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
    if (r.ec != std::errc() || r.ptr != s.data() + s.size()) throw IoError("malformed number '" + s + "'");
    return v;
}

RecordTable diagnose_trajectory(const Trajectory& tr, const DiagnosticsSpec& spec) {
    RecordTable table;
    table.h = spec.h;
    const std::vector<LedgerRow> ledger = energy_ledger(tr);
    const std::vector<double> evf = evf_residual_per_snapshot(tr, spec.evf_form);
    for (std::size_t j = 0; j < ledger.size(); ++j) {
        const LedgerRow& l = ledger[j];
        DiagnosticsRecord r;
        r.step = l.step;
        r.t = l.t;
        r.mass = l.terms.mass;
        r.kinetic = l.terms.kinetic;
        r.internal = l.terms.internal;
        r.dissipation_cum = l.dissipation_cum;
        r.damping_cum = l.damping_cum;
        r.energy_residual = l.energy_residual;
        r.evf_residual = evf[j];
        r.min_w = l.min_w;
        r.max_rho_w = l.max_rho_w;
        r.rho_logw = l.rho_logw;
        const FluidState& s = tr.snapshots[j].state;
        for (double h : spec.h) r.R_h.push_back(kolmogorov_weighted(s.rho, s.w, h, spec.sigma, true));
        table.rows.push_back(std::move(r));
    }
    return table;
}

std::string csv_header(const std::vector<double>& h) {
    std::string s = kFixedHeader;
    for (double v : h) s += ",R_h_" + format_double(v);
    return s;
}

std::string to_csv(const RecordTable& table) {
    std::string out = csv_header(table.h) + "\n";
    for (const DiagnosticsRecord& r : table.rows) {
        out += std::to_string(r.step);
        for (double v : {r.t, r.mass, r.kinetic, r.internal, r.dissipation_cum, r.damping_cum, r.energy_residual,
                         r.evf_residual, r.min_w, r.max_rho_w, r.rho_logw})
            out += "," + format_double(v);
        for (double v : r.R_h) out += "," + format_double(v);
        out += "\n";
    }
    return out;
}

RecordTable parse_csv(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line)) throw IoError("empty CSV");
    const std::vector<std::string> head = split(line, ',');
    if (int(head.size()) < kFixedColumns || line.rfind(kFixedHeader, 0) != 0)
        throw IoError("CSV header does not match the diagnostics layout");
    RecordTable table;
    for (std::size_t c = kFixedColumns; c < head.size(); ++c) {
        if (head[c].rfind("R_h_", 0) != 0) throw IoError("unexpected CSV column " + head[c]);
        table.h.push_back(parse_double(head[c].substr(4)));
    }
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const std::vector<std::string> f = split(line, ',');
        if (f.size() != head.size()) throw IoError("CSV row has " + std::to_string(f.size()) + " fields");
        DiagnosticsRecord r;
        long step = 0;
        const auto res = std::from_chars(f[0].data(), f[0].data() + f[0].size(), step);
        if (res.ec != std::errc() || res.ptr != f[0].data() + f[0].size()) throw IoError("malformed step " + f[0]);
        r.step = step;
        double* slots[] = {&r.t,           &r.mass,         &r.kinetic,         &r.internal,
                           &r.dissipation_cum, &r.damping_cum, &r.energy_residual, &r.evf_residual,
                           &r.min_w,       &r.max_rho_w,    &r.rho_logw};
        for (int c = 0; c < kFixedColumns - 1; ++c) *slots[c] = parse_double(f[std::size_t(c + 1)]);
        for (std::size_t c = kFixedColumns; c < f.size(); ++c) r.R_h.push_back(parse_double(f[c]));
        table.rows.push_back(std::move(r));
    }
    return table;
}

void emit_csv(const RecordTable& table, const std::string& path) { write_text(path, to_csv(table)); }

RecordTable read_csv(const std::string& path) { return parse_csv(read_text(path)); }

std::string svg_line_chart(const std::string& title, const std::string& xlabel, const std::vector<Series>& series,
                           bool logx, bool logy) {
    const double W = 640, H = 400, left = 70, right = 160, top = 36, bottom = 48;
    auto tx = [&](double v) { return logx ? std::log10(v) : v; };
    auto ty = [&](double v) { return logy ? std::log10(v) : v; };
    auto usable = [&](double x, double y) {
        return std::isfinite(x) && std::isfinite(y) && (!logx || x > 0) && (!logy || y > 0);
    };
    double x0 = INFINITY, x1 = -INFINITY, y0 = INFINITY, y1 = -INFINITY;
    for (const Series& s : series)
        for (std::size_t i = 0; i < s.x.size(); ++i)
            if (usable(s.x[i], s.y[i])) {
                x0 = std::min(x0, tx(s.x[i])), x1 = std::max(x1, tx(s.x[i]));
                y0 = std::min(y0, ty(s.y[i])), y1 = std::max(y1, ty(s.y[i]));
            }
    if (!(x0 <= x1)) x0 = 0, x1 = 1;
    if (!(y0 <= y1)) y0 = 0, y1 = 1;
    if (x1 - x0 < 1e-300) x0 -= 0.5, x1 += 0.5;
    if (y1 - y0 <= 1e-12 * std::max(1.0, std::abs(y1))) {
        const double pad = std::max(1e-12, 0.05 * std::abs(y1));
        y0 -= pad, y1 += pad;
    }
    const double pw = W - left - right, ph = H - top - bottom;
    auto px = [&](double v) { return left + (v - x0) / (x1 - x0) * pw; };
    auto py = [&](double v) { return top + (1 - (v - y0) / (y1 - y0)) * ph; };
    auto label = [](double v, bool log) {
        char b[32];
        std::snprintf(b, sizeof b, "%.3g", log ? std::pow(10.0, v) : v);
        return std::string(b);
    };
    static const char* palette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f"};

    std::ostringstream o;
    o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\" viewBox=\"0 0 " << W
      << ' ' << H << "\" font-family=\"sans-serif\" font-size=\"11\">\n";
    o << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    o << "<text x=\"" << left + pw / 2 << "\" y=\"20\" text-anchor=\"middle\" font-size=\"13\">" << title << "</text>\n";
    o << "<rect x=\"" << left << "\" y=\"" << top << "\" width=\"" << pw << "\" height=\"" << ph
      << "\" fill=\"none\" stroke=\"black\"/>\n";
    for (int i = 0; i <= 4; ++i) {
        const double vx = x0 + (x1 - x0) * i / 4, vy = y0 + (y1 - y0) * i / 4;
        o << "<text x=\"" << px(vx) << "\" y=\"" << top + ph + 16 << "\" text-anchor=\"middle\">" << label(vx, logx)
          << "</text>\n";
        o << "<text x=\"" << left - 6 << "\" y=\"" << py(vy) + 4 << "\" text-anchor=\"end\">" << label(vy, logy)
          << "</text>\n";
        o << "<line x1=\"" << px(vx) << "\" y1=\"" << top << "\" x2=\"" << px(vx) << "\" y2=\"" << top + ph
          << "\" stroke=\"#ddd\"/>\n";
    }
    o << "<text x=\"" << left + pw / 2 << "\" y=\"" << H - 10 << "\" text-anchor=\"middle\">" << xlabel
      << (logx ? " (log)" : "") << "</text>\n";
    for (std::size_t k = 0; k < series.size(); ++k) {
        const Series& s = series[k];
        const char* color = palette[k % 8];
        o << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
        for (std::size_t i = 0; i < s.x.size(); ++i)
            if (usable(s.x[i], s.y[i])) o << px(tx(s.x[i])) << ',' << py(ty(s.y[i])) << ' ';
        o << "\"/>\n";
        const double ly = top + 14 + 16 * double(k);
        o << "<line x1=\"" << W - right + 10 << "\" y1=\"" << ly - 4 << "\" x2=\"" << W - right + 30 << "\" y2=\""
          << ly - 4 << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n";
        o << "<text x=\"" << W - right + 34 << "\" y=\"" << ly << "\">" << s.name << "</text>\n";
    }
    o << "</svg>\n";
    return o.str();
}

void emit_run_plots(const RecordTable& table, const std::string& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw IoError("cannot create " + dir + ": " + ec.message());
    std::vector<double> t;
    for (const DiagnosticsRecord& r : table.rows) t.push_back(r.t);
    struct Column {
        const char* name;
        double DiagnosticsRecord::*field;
    };
    const Column cols[] = {{"mass", &DiagnosticsRecord::mass},
                           {"kinetic", &DiagnosticsRecord::kinetic},
                           {"internal", &DiagnosticsRecord::internal},
                           {"dissipation_cum", &DiagnosticsRecord::dissipation_cum},
                           {"damping_cum", &DiagnosticsRecord::damping_cum},
                           {"energy_residual", &DiagnosticsRecord::energy_residual},
                           {"evf_residual", &DiagnosticsRecord::evf_residual},
                           {"min_w", &DiagnosticsRecord::min_w},
                           {"max_rho_w", &DiagnosticsRecord::max_rho_w},
                           {"rho_logw", &DiagnosticsRecord::rho_logw}};
    for (const Column& c : cols) {
        Series s{c.name, t, {}};
        for (const DiagnosticsRecord& r : table.rows) s.y.push_back(r.*(c.field));
        write_text(dir + "/" + c.name + ".svg", svg_line_chart(c.name, "t", {s}, false, false));
    }
    if (!table.h.empty() && !table.rows.empty()) {
        std::vector<Series> rs;
        const std::size_t stride = std::max<std::size_t>(1, table.rows.size() / 4);
        for (std::size_t j = 0; j < table.rows.size(); j += stride) {
            Series s{"t=" + format_double(table.rows[j].t), table.h, table.rows[j].R_h};
            rs.push_back(s);
        }
        write_text(dir + "/R_h.svg", svg_line_chart("R_h vs h", "h", rs, true, true));
    }
}

}  // namespace nslab
