#include "droplet/config.hpp"

#include "droplet/error.hpp"
#include "droplet/thermal.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <set>

namespace droplet {

using nlohmann::json;

namespace {

[[noreturn]] void bad(const std::string& msg) { throw Error(ErrorCode::invalid_argument, msg); }

void allow_keys(const json& obj, const std::set<std::string>& keys, const std::string& where) {
    if (!obj.is_object()) bad(where + " must be an object");
    for (const auto& [k, v] : obj.items()) {
        if (!keys.count(k)) bad("unknown key '" + k + "' in " + where);
    }
}

double number(const json& v, const std::string& name) {
    if (!v.is_number()) bad(name + " must be a number");
    const double x = v.get<double>();
    if (!std::isfinite(x)) bad(name + " must be finite");
    return x;
}

int integer(const json& v, const std::string& name) {
    if (!v.is_number_integer()) bad(name + " must be an integer");
    return v.get<int>();
}

std::vector<double> numbers(const json& v, const std::string& name) {
    if (!v.is_array()) bad(name + " must be an array");
    std::vector<double> out;
    for (const auto& e : v) out.push_back(number(e, name));
    return out;
}

PotentialSpec parse_potential(const json& p, int dim) {
    allow_keys(p, {"family", "lambda", "anisotropy", "epsilon", "wavevector"}, "potential");
    if (!p.contains("family") || !p["family"].is_string()) bad("potential.family must be a string");
    const PotentialFamily fam = parse_family(p["family"].get<std::string>());
    const double lambda = p.contains("lambda") ? number(p["lambda"], "potential.lambda") : 1.0;
    PotentialSpec s;
    switch (fam) {
    case PotentialFamily::quadratic: s = PotentialSpec::quadratic(lambda); break;
    case PotentialFamily::quartic: s = PotentialSpec::quartic(lambda); break;
    case PotentialFamily::anisotropic_quadratic:
        if (!p.contains("anisotropy")) bad("potential.anisotropy is required");
        s = PotentialSpec::anisotropic(lambda, numbers(p["anisotropy"], "potential.anisotropy"));
        break;
    case PotentialFamily::quadratic_plus_cosine:
        if (!p.contains("wavevector")) bad("potential.wavevector is required");
        s = PotentialSpec::cosine_perturbed(lambda, p.contains("epsilon") ? number(p["epsilon"], "potential.epsilon") : 0.0,
                                            numbers(p["wavevector"], "potential.wavevector"));
        break;
    case PotentialFamily::custom: bad("custom potentials cannot be configured from a file");
    }
    s.validate(dim);
    return s;
}

json potential_json(const PotentialSpec& s) {
    json p{{"family", family_name(s.family)}, {"lambda", s.lambda}};
    if (s.family == PotentialFamily::anisotropic_quadratic) p["anisotropy"] = s.anisotropy;
    if (s.family == PotentialFamily::quadratic_plus_cosine) {
        p["epsilon"] = s.epsilon;
        p["wavevector"] = s.wavevector;
    }
    return p;
}

} // namespace

DumpFormat parse_dump_format(const std::string& name) {
    if (name == "none") return DumpFormat::none;
    if (name == "csv") return DumpFormat::csv;
    if (name == "bin") return DumpFormat::bin;
    bad("dump format must be csv, bin or none");
}

std::string dump_format_name(DumpFormat f) {
    switch (f) {
    case DumpFormat::none: return "none";
    case DumpFormat::csv: return "csv";
    case DumpFormat::bin: return "bin";
    }
    return "none";
}

std::uint64_t fnv1a(const std::string& bytes) {
    std::uint64_t h = 14695981039346656037ull;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

std::map<std::string, RateWindow> default_rate_windows() {
    constexpr double open = -std::numeric_limits<double>::infinity();
    return {
        {"h_gap_sup", {-1.0, -1.3, -0.7, 0.9}},
        {"c_gap", {-1.0, open, -0.7, 0.9}},
        {"ext_mass", {-0.5, -0.75, -0.35, 0.9}},
        {"ext_entropy", {-0.5, -0.8, -0.3, 0.9}},
        {"grad_gap", {-0.5, -0.8, -0.2, 0.9}},
        {"grad_gap_band_excluded", {-0.5, open, -0.35, 0.9}},
        {"layer_width", {-0.5, -0.65, -0.35, 0.9}},
        {"bulk_error_k0", {-1.0, -1.3, -0.7, 0.9}},
        {"bulk_error_k1", {-2.0, -2.4, -1.6, 0.9}},
    };
}

RunConfig parse_config(const json& doc) {
    allow_keys(doc, {"potential", "dim", "grid", "beta", "solver", "expansion", "layer", "output", "dump_fields",
                     "jobs", "rate_windows"},
               "config");
    RunConfig c;
    if (doc.contains("dim")) c.dim = integer(doc["dim"], "dim");
    if (c.dim != 2 && c.dim != 3) bad("dim must be 2 or 3");
    if (!doc.contains("potential")) bad("potential is required");
    c.potential = parse_potential(doc["potential"], c.dim);

    if (doc.contains("grid")) {
        const json& g = doc["grid"];
        allow_keys(g, {"n", "L"}, "grid");
        if (g.contains("n")) c.n = integer(g["n"], "grid.n");
        if (g.contains("L")) {
            if (g["L"].is_string()) {
                if (g["L"].get<std::string>() != "auto") bad("grid.L must be a number or \"auto\"");
            } else {
                c.half_width = number(g["L"], "grid.L");
                if (!(*c.half_width > 0.0)) bad("grid.L must be positive");
            }
        }
    }
    if (c.n < 16) bad("n too small (minimum 16)");
    if (c.n % 2 != 0) bad("n must be even");

    if (doc.contains("beta")) c.betas = doc["beta"].is_array() ? numbers(doc["beta"], "beta")
                                                               : std::vector<double>{number(doc["beta"], "beta")};
    if (c.betas.empty()) bad("beta list is empty");
    for (double b : c.betas) {
        if (!(b >= 2.0)) bad("beta must be >= 2");
    }
    std::sort(c.betas.begin(), c.betas.end());
    if (std::adjacent_find(c.betas.begin(), c.betas.end()) != c.betas.end()) bad("beta list has duplicates");

    if (doc.contains("solver")) {
        const json& s = doc["solver"];
        allow_keys(s, {"tol_kkt", "tol_fix", "max_iter"}, "solver");
        if (s.contains("tol_kkt")) c.tol_kkt = number(s["tol_kkt"], "solver.tol_kkt");
        if (s.contains("tol_fix")) c.tol_fix = number(s["tol_fix"], "solver.tol_fix");
        if (s.contains("max_iter") && !s["max_iter"].is_null()) c.max_iter = integer(s["max_iter"], "solver.max_iter");
        if (!(c.tol_kkt > 0.0) || !(c.tol_fix > 0.0)) bad("solver tolerances must be positive");
        if (c.max_iter && *c.max_iter < 1) bad("solver.max_iter must be >= 1");
    }
    if (doc.contains("expansion")) {
        const json& e = doc["expansion"];
        allow_keys(e, {"K", "margin"}, "expansion");
        if (e.contains("K")) c.expansion_K = integer(e["K"], "expansion.K");
        if (e.contains("margin") && !(e["margin"].is_string() && e["margin"] == "auto")) {
            c.expansion_margin = number(e["margin"], "expansion.margin");
        }
        if (c.expansion_K < 1) bad("expansion.K must be >= 1");
    }
    if (doc.contains("layer")) {
        allow_keys(doc["layer"], {"K"}, "layer");
        if (doc["layer"].contains("K")) c.layer_K = number(doc["layer"]["K"], "layer.K");
        if (!(c.layer_K >= 1.0)) bad("layer.K must be >= 1");
    }
    if (doc.contains("output")) {
        if (!doc["output"].is_string()) bad("output must be a string");
        c.output = doc["output"].get<std::string>();
    }
    if (doc.contains("dump_fields")) {
        if (!doc["dump_fields"].is_string()) bad("dump_fields must be a string");
        c.dump = parse_dump_format(doc["dump_fields"].get<std::string>());
    }
    if (doc.contains("jobs")) c.jobs = integer(doc["jobs"], "jobs");
    if (c.jobs < 1) bad("jobs must be >= 1");

    c.windows = default_rate_windows();
    if (doc.contains("rate_windows")) {
        const json& w = doc["rate_windows"];
        if (!w.is_object()) bad("rate_windows must be an object");
        for (const auto& [name, val] : w.items()) {
            if (!c.windows.count(name)) bad("unknown rate quantity '" + name + "'");
            if (!val.is_array() || val.size() < 2 || val.size() > 3) bad("rate_windows." + name + " must be [lo, hi] or [lo, hi, min_r2]");
            RateWindow& rw = c.windows[name];
            rw.lo = val[0].is_null() ? -std::numeric_limits<double>::infinity() : number(val[0], name);
            rw.hi = val[1].is_null() ? std::numeric_limits<double>::infinity() : number(val[1], name);
            if (val.size() == 3) rw.min_r2 = number(val[2], name);
            if (!(rw.lo <= rw.hi)) bad("rate_windows." + name + ": lo > hi");
        }
    }
    json hashed = doc;
    hashed.erase("output");
    c.hash = fnv1a(hashed.dump());
    return c;
}

RunConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::io, "cannot open config " + path.string());
    json doc;
    try {
        in >> doc;
    } catch (const json::exception& e) {
        throw Error(ErrorCode::invalid_argument, "config parse error: " + std::string(e.what()));
    }
    return parse_config(doc);
}

void RunConfig::resolve() {
    if (!half_width) half_width = auto_half_width(potential, dim, betas.front());
}

double RunConfig::resolved_half_width() const {
    if (!half_width) throw Error(ErrorCode::invalid_argument, "half width not resolved");
    return *half_width;
}

Grid RunConfig::grid() const { return Grid(dim, n, resolved_half_width()); }

json RunConfig::to_json() const {
    json w = json::object();
    for (const auto& [name, rw] : windows) {
        w[name] = {{"predicted", rw.predicted},
                   {"lo", std::isfinite(rw.lo) ? json(rw.lo) : json(nullptr)},
                   {"hi", std::isfinite(rw.hi) ? json(rw.hi) : json(nullptr)},
                   {"min_r2", rw.min_r2}};
    }
    return {
        {"potential", potential_json(potential)},
        {"dim", dim},
        {"grid", {{"n", n}, {"L", half_width ? json(*half_width) : json("auto")}, {"h", half_width ? json(2.0 * *half_width / n) : json(nullptr)}}},
        {"beta", betas},
        {"solver", {{"tol_kkt", tol_kkt}, {"tol_fix", tol_fix}, {"max_iter", max_iter ? json(*max_iter) : json(nullptr)}}},
        {"expansion", {{"K", expansion_K}, {"margin", expansion_margin ? json(*expansion_margin) : json("auto")}}},
        {"layer", {{"K", layer_K}}},
        {"output", output.string()},
        {"dump_fields", dump_format_name(dump)},
        {"jobs", jobs},
        {"rate_windows", w},
    };
}

} // namespace droplet
