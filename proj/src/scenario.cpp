#include "feederflow/scenario.hpp"

#include <array>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "feederflow/io.hpp"

namespace feederflow {

namespace {

std::string trim(const std::string& s) {
    const auto begin = s.find_first_not_of(" \t\r");
    if (begin == std::string::npos) return {};
    const auto end = s.find_last_not_of(" \t\r");
    return s.substr(begin, end - begin + 1);
}

double parse_double(const std::string& token, int line) {
    const std::string t = trim(token);
    double value = 0.0;
    const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), value);
    if (ec != std::errc() || ptr != t.data() + t.size()) {
        throw ParseError("expected a number, got '" + t + "'", line);
    }
    return value;
}

int parse_int(const std::string& token, int line) {
    const std::string t = trim(token);
    int value = 0;
    const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), value);
    if (ec != std::errc() || ptr != t.data() + t.size()) {
        throw ParseError("expected an integer, got '" + t + "'", line);
    }
    return value;
}

std::array<double, 4> parse_quad(const std::string& value, int line) {
    std::array<double, 4> out{};
    std::size_t pos = 0;
    for (int i = 0; i < 4; ++i) {
        const std::size_t comma = value.find(',', pos);
        const bool last = (i == 3);
        if (!last && comma == std::string::npos) {
            throw ParseError("expected four comma-separated numbers", line);
        }
        if (last && comma != std::string::npos) {
            throw ParseError("expected exactly four comma-separated numbers", line);
        }
        const std::string token =
            last ? value.substr(pos) : value.substr(pos, comma - pos);
        out[static_cast<std::size_t>(i)] = parse_double(token, line);
        pos = comma + 1;
    }
    return out;
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FeederError("cannot read " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

}  // namespace

void Scenario::validate() const {
    params.validate();
    solver.validate();
    if (manufactured) {
        if (!profile.empty()) {
            throw ValidationError(
                "a manufactured scenario cannot also define segments or bumps");
        }
        build_manufactured();  // boundary compatibility / positivity check
        return;
    }
    if (!profile.empty() && profile.length() != params.L) {
        throw ValidationError("profile is defined on length " +
                              std::to_string(profile.length()) + " but the feeder has L = " +
                              std::to_string(params.L));
    }
    profile.validate();
}

std::unique_ptr<Profile> Scenario::make_profile() const {
    if (manufactured) return build_manufactured();
    return std::make_unique<PowerProfile>(profile);
}

std::unique_ptr<ManufacturedSolution> Scenario::build_manufactured() const {
    if (!manufactured) return nullptr;
    return std::make_unique<ManufacturedSolution>(
        boundary_cubic(manufactured->v_amplitude, 1.0, params.L),
        boundary_cubic(manufactured->theta_amplitude, 0.0, params.L), params);
}

Scenario parse_scenario(const std::string& text) {
    enum class Section { Top, Feeder, Segments, Bumps, Solver, Manufactured };
    Section section = Section::Top;

    Scenario sc;
    std::vector<Segment> segments;
    std::vector<Bump> bumps;
    ManufacturedSpec manu;
    bool has_name = false, in_manufactured = false;
    bool has_g = false, has_b = false, has_L = false;
    bool has_vamp = false, has_tamp = false;
    std::set<std::string> seen;  // "section.key" for single-occurrence keys

    auto mark_once = [&seen](const std::string& id, int line) {
        if (!seen.insert(id).second) throw ParseError("duplicate key '" + id + "'", line);
    };

    std::istringstream in(text);
    std::string raw;
    int lineno = 0;
    while (std::getline(in, raw)) {
        ++lineno;
        const std::size_t hash = raw.find('#');
        if (hash != std::string::npos) raw.erase(hash);
        const std::string line = trim(raw);
        if (line.empty()) continue;

        if (line.front() == '[') {
            if (line.back() != ']') throw ParseError("unterminated section header", lineno);
            const std::string name = trim(line.substr(1, line.size() - 2));
            if (name == "feeder") section = Section::Feeder;
            else if (name == "segments") section = Section::Segments;
            else if (name == "bumps") section = Section::Bumps;
            else if (name == "solver") section = Section::Solver;
            else if (name == "manufactured") { section = Section::Manufactured; in_manufactured = true; }
            else throw ParseError("unknown section [" + name + "]", lineno);
            continue;
        }

        const std::size_t eq = line.find('=');
        if (eq == std::string::npos) throw ParseError("expected 'key = value'", lineno);
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty()) throw ParseError("empty key", lineno);

        switch (section) {
            case Section::Top:
                if (key == "name") {
                    mark_once("name", lineno);
                    sc.name = value;
                    has_name = true;
                } else {
                    throw ParseError("unknown key '" + key + "' outside any section", lineno);
                }
                break;
            case Section::Feeder:
                mark_once("feeder." + key, lineno);
                if (key == "g") { sc.params.g = parse_double(value, lineno); has_g = true; }
                else if (key == "b") { sc.params.b = parse_double(value, lineno); has_b = true; }
                else if (key == "L") { sc.params.L = parse_double(value, lineno); has_L = true; }
                else throw ParseError("unknown key '" + key + "' in [feeder]", lineno);
                break;
            case Section::Segments: {
                if (key != "segment") {
                    throw ParseError("only 'segment =' entries belong in [segments]", lineno);
                }
                const auto f = parse_quad(value, lineno);
                segments.push_back({f[0], f[1], f[2], f[3]});
                break;
            }
            case Section::Bumps: {
                if (key != "bump") {
                    throw ParseError("only 'bump =' entries belong in [bumps]", lineno);
                }
                const auto f = parse_quad(value, lineno);
                bumps.push_back({f[0], f[1], f[2], f[3]});
                break;
            }
            case Section::Solver:
                mark_once("solver." + key, lineno);
                if (key == "n_intervals") sc.solver.n_intervals = parse_int(value, lineno);
                else if (key == "newton_tol") sc.solver.newton_tol = parse_double(value, lineno);
                else if (key == "max_newton_iters") sc.solver.max_newton_iters = parse_int(value, lineno);
                else if (key == "fd_step") sc.solver.fd_step = parse_double(value, lineno);
                else if (key == "damping") sc.solver.damping = parse_double(value, lineno);
                else throw ParseError("unknown key '" + key + "' in [solver]", lineno);
                break;
            case Section::Manufactured:
                mark_once("manufactured." + key, lineno);
                if (key == "v_amplitude") { manu.v_amplitude = parse_double(value, lineno); has_vamp = true; }
                else if (key == "theta_amplitude") { manu.theta_amplitude = parse_double(value, lineno); has_tamp = true; }
                else throw ParseError("unknown key '" + key + "' in [manufactured]", lineno);
                break;
        }
    }

    if (!has_g || !has_b || !has_L) {
        throw ValidationError("the [feeder] section must set g, b, and L");
    }
    if (in_manufactured && (!has_vamp || !has_tamp)) {
        throw ValidationError(
            "the [manufactured] section must set v_amplitude and theta_amplitude");
    }
    if (!has_name) sc.name = "unnamed";
    sc.profile = PowerProfile(sc.params.L, std::move(segments), std::move(bumps));
    if (in_manufactured) sc.manufactured = manu;
    sc.validate();
    return sc;
}

std::string serialize(const Scenario& sc) {
    std::string out;
    out += "name = " + sc.name + "\n\n[feeder]\n";
    out += "g = " + format_double(sc.params.g) + "\n";
    out += "b = " + format_double(sc.params.b) + "\n";
    out += "L = " + format_double(sc.params.L) + "\n";
    if (!sc.profile.segments().empty()) {
        out += "\n[segments]\n";
        for (const Segment& s : sc.profile.segments()) {
            out += "segment = " + format_double(s.x_start) + ", " + format_double(s.x_end) +
                   ", " + format_double(s.p_density) + ", " + format_double(s.q_density) + "\n";
        }
    }
    if (!sc.profile.bumps().empty()) {
        out += "\n[bumps]\n";
        for (const Bump& b : sc.profile.bumps()) {
            out += "bump = " + format_double(b.center) + ", " + format_double(b.half_width) +
                   ", " + format_double(b.p_amplitude) + ", " + format_double(b.q_amplitude) +
                   "\n";
        }
    }
    out += "\n[solver]\n";
    out += "n_intervals = " + std::to_string(sc.solver.n_intervals) + "\n";
    out += "newton_tol = " + format_double(sc.solver.newton_tol) + "\n";
    out += "max_newton_iters = " + std::to_string(sc.solver.max_newton_iters) + "\n";
    out += "fd_step = " + format_double(sc.solver.fd_step) + "\n";
    out += "damping = " + format_double(sc.solver.damping) + "\n";
    if (sc.manufactured) {
        out += "\n[manufactured]\n";
        out += "v_amplitude = " + format_double(sc.manufactured->v_amplitude) + "\n";
        out += "theta_amplitude = " + format_double(sc.manufactured->theta_amplitude) + "\n";
    }
    return out;
}

Scenario preset(const std::string& name) {
    Scenario sc;
    sc.name = name;
    sc.params = {1.0, 1.0, 1.0};
    if (name == "no_load") {
        sc.profile = PowerProfile(1.0, {}, {});
    } else if (name == "conventional") {
        // Consumption-only feeder, q ≤ 0 everywhere: ∫p = -0.15, ∫q = -0.05.
        sc.profile = PowerProfile(1.0,
                                  {{0.125, 0.375, -0.2, -0.08},
                                   {0.5, 0.625, -0.4, -0.12},
                                   {0.75, 0.875, -0.4, -0.12}},
                                  {});
    } else if (name == "pv_ev") {
        // Same consumption blocks but with reactive support (q ≥ 0
        // everywhere) plus a generation bump supplying ∫p = +0.3, enough to
        // push net flow backwards: ∫p = +0.15, ∫q = +0.05.
        sc.profile = PowerProfile(1.0,
                                  {{0.125, 0.375, -0.2, 0.1},
                                   {0.5, 0.625, -0.4, 0.05},
                                   {0.75, 0.875, -0.4, 0.05}},
                                  {{0.5, 0.125, 2.4, 0.1}});
    } else if (name == "manufactured") {
        sc.manufactured = ManufacturedSpec{0.12, 0.1};
    } else {
        throw UnknownPreset(name);
    }
    sc.validate();
    return sc;
}

std::vector<std::string> preset_names() {
    return {"no_load", "conventional", "pv_ev", "manufactured"};
}

Scenario load_scenario(const std::string& ref) {
    namespace fs = std::filesystem;
    std::error_code ec;
    if (fs::is_regular_file(ref, ec)) return parse_scenario(read_file(ref));
    if (const char* dir = std::getenv("FEEDERFLOW_PRESET_DIR")) {
        const fs::path candidate = fs::path(dir) / (ref + ".cfg");
        if (fs::is_regular_file(candidate, ec)) return parse_scenario(read_file(candidate));
    }
    return preset(ref);
}

void set_numeric_field(Scenario& sc, const std::string& path, double value) {
    auto as_int = [&](const char* what) {
        const double rounded = std::round(value);
        if (std::abs(rounded - value) > 1e-9) {
            throw ValidationError(std::string(what) + " needs an integer, got " +
                                  std::to_string(value));
        }
        return static_cast<int>(rounded);
    };
    if (path == "feeder.g") sc.params.g = value;
    else if (path == "feeder.b") sc.params.b = value;
    else if (path == "feeder.L") sc.params.L = value;
    else if (path == "solver.n_intervals") sc.solver.n_intervals = as_int(path.c_str());
    else if (path == "solver.newton_tol") sc.solver.newton_tol = value;
    else if (path == "solver.max_newton_iters") sc.solver.max_newton_iters = as_int(path.c_str());
    else if (path == "solver.fd_step") sc.solver.fd_step = value;
    else if (path == "solver.damping") sc.solver.damping = value;
    else if (path == "manufactured.v_amplitude" || path == "manufactured.theta_amplitude") {
        if (!sc.manufactured) {
            throw ValidationError("'" + path + "' requires a manufactured scenario");
        }
        if (path == "manufactured.v_amplitude") sc.manufactured->v_amplitude = value;
        else sc.manufactured->theta_amplitude = value;
    } else {
        throw ValidationError("unknown scenario field '" + path + "'");
    }
}

}  // namespace feederflow
