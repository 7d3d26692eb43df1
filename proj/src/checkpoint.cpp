#include "nslab/checkpoint.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>

#include "nslab/errors.hpp"

namespace nslab {

namespace {

constexpr char kMagic[8] = {'N', 'S', 'L', 'A', 'B', 'C', 'K', '1'};
constexpr std::uint32_t kEndianTag = 0x01020304u;

nlohmann::json number_or_inf(double v) {
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    return v;
}

double read_number(const nlohmann::json& v, const char* key) {
    if (v.is_string()) {
        const auto s = v.get<std::string>();
        if (s == "inf" || s == "Infinity") return INFINITY;
        throw ConfigError(std::string("parameter ") + key + ": expected a number or \"inf\"");
    }
    if (!v.is_number()) throw ConfigError(std::string("parameter ") + key + ": expected a number");
    return v.get<double>();
}

std::uint64_t byteswap64(std::uint64_t x) {
    std::uint64_t r = 0;
    for (int i = 0; i < 8; ++i) r |= ((x >> (8 * i)) & 0xffu) << (8 * (7 - i));
    return r;
}

}  // namespace

nlohmann::json params_to_json(const Params& p) {
    return {{"eps", p.eps},   {"delta", p.delta}, {"k", p.k},         {"M", number_or_inf(p.M)},
            {"lambda", p.lambda}, {"m", p.m},     {"Gamma", p.Gamma}, {"gamma", p.gamma},
            {"mu", p.mu},     {"xi", p.xi},       {"Lambda", p.Lambda}, {"sigma", p.sigma},
            {"mapped_dim", p.mapped_dim}};
}

Params params_from_json(const nlohmann::json& j, const Params& base) {
    if (!j.is_object()) throw ConfigError("params must be an object");
    Params p = base;
    for (const auto& [key, v] : j.items()) {
        if (key == "eps") p.eps = read_number(v, "eps");
        else if (key == "delta") p.delta = read_number(v, "delta");
        else if (key == "k") p.k = read_number(v, "k");
        else if (key == "M") p.M = read_number(v, "M");
        else if (key == "lambda") p.lambda = read_number(v, "lambda");
        else if (key == "m") p.m = read_number(v, "m");
        else if (key == "Gamma") p.Gamma = read_number(v, "Gamma");
        else if (key == "gamma") p.gamma = read_number(v, "gamma");
        else if (key == "mu") p.mu = read_number(v, "mu");
        else if (key == "xi") p.xi = read_number(v, "xi");
        else if (key == "Lambda") p.Lambda = read_number(v, "Lambda");
        else if (key == "sigma") p.sigma = read_number(v, "sigma");
        else if (key == "mapped_dim") p.mapped_dim = int(read_number(v, "mapped_dim"));
        else throw ConfigError("unknown key in params: " + key);
    }
    return p;
}

void write_checkpoint(const std::string& path, const FluidState& s, const Params& p, const nlohmann::json& extra) {
    const Grid& g = s.grid();
    nlohmann::json h = {{"format", "nslab-checkpoint"},
                        {"version", 1},
                        {"grid", {{"d", g.dim}, {"n", g.n}, {"L", Grid::period}}},
                        {"t_bits", std::bit_cast<std::uint64_t>(s.t)},
                        {"t", s.t},
                        {"step", s.step},
                        {"params", params_to_json(p)},
                        {"fields", nlohmann::json::array()},
                        {"layout", "row-major, index = i*n + j, i along x"},
                        {"extra", extra}};
    h["fields"].push_back("rho");
    for (int c = 0; c < g.dim; ++c) h["fields"].push_back("u" + std::to_string(c));
    h["fields"].push_back("w");
    const std::string header = h.dump();

    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open checkpoint for writing: " + path);
    out.write(kMagic, sizeof kMagic);
    const std::uint32_t tag = kEndianTag;
    out.write(reinterpret_cast<const char*>(&tag), sizeof tag);
    const std::uint64_t len = header.size();
    out.write(reinterpret_cast<const char*>(&len), sizeof len);
    out.write(header.data(), std::streamsize(len));
    auto put = [&](const Field& f) {
        out.write(reinterpret_cast<const char*>(f.raw().data()), std::streamsize(f.size() * sizeof(double)));
    };
    put(s.rho);
    for (int c = 0; c < g.dim; ++c) put(s.u[c]);
    put(s.w);
    if (!out) throw IoError("failed writing checkpoint: " + path);
}

Checkpoint read_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open checkpoint: " + path);
    char magic[8];
    in.read(magic, sizeof magic);
    if (!in || std::memcmp(magic, kMagic, sizeof kMagic) != 0) throw IoError("not a checkpoint file: " + path);
    std::uint32_t tag = 0;
    in.read(reinterpret_cast<char*>(&tag), sizeof tag);
    bool swap = false;
    if (tag == 0x04030201u) swap = true;
    else if (tag != kEndianTag) throw IoError("bad endianness tag in checkpoint: " + path);
    std::uint64_t len = 0;
    in.read(reinterpret_cast<char*>(&len), sizeof len);
    if (swap) len = byteswap64(len);
    if (!in || len > (1u << 26)) throw IoError("corrupt checkpoint header: " + path);
    std::string header(len, '\0');
    in.read(header.data(), std::streamsize(len));
    nlohmann::json h;
    try {
        h = nlohmann::json::parse(header);
    } catch (const std::exception& e) {
        throw IoError("unparseable checkpoint header: " + std::string(e.what()));
    }
    Checkpoint ck;
    try {
        const Grid g(h.at("grid").at("d").get<int>(), h.at("grid").at("n").get<int>());
        ck.params = params_from_json(h.at("params"), Params{});
        ck.state.t = std::bit_cast<double>(h.at("t_bits").get<std::uint64_t>());
        ck.state.step = h.at("step").get<long>();
        ck.extra = h.value("extra", nlohmann::json::object());
        auto get = [&](Field& f) {
            f = Field(g);
            in.read(reinterpret_cast<char*>(f.raw().data()), std::streamsize(f.size() * sizeof(double)));
            if (swap)
                for (double& v : f.raw()) v = std::bit_cast<double>(byteswap64(std::bit_cast<std::uint64_t>(v)));
        };
        get(ck.state.rho);
        ck.state.u = VecField(g);
        for (int c = 0; c < g.dim; ++c) get(ck.state.u[c]);
        get(ck.state.w);
    } catch (const nlohmann::json::exception& e) {
        throw IoError("checkpoint header missing fields: " + std::string(e.what()));
    } catch (const std::invalid_argument& e) {
        throw IoError("checkpoint grid invalid: " + std::string(e.what()));
    }
    if (!in) throw IoError("truncated checkpoint: " + path);
    return ck;
}

}  // namespace nslab
