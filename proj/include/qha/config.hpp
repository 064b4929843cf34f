#pragma once

// Experiment configuration: flat "key = value" text with dotted section
// paths, '#' comments. Every key has a default; unknown keys and malformed
// values are reported with their field path.

#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "qha/core.hpp"
#include "qha/group.hpp"

namespace qha {

class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(std::vector<std::string> problems)
        : std::runtime_error(join(problems)), problems_(std::move(problems)) {}
    const std::vector<std::string>& problems() const { return problems_; }

private:
    static std::string join(const std::vector<std::string>& p) {
        std::string out;
        for (const auto& s : p) out += (out.empty() ? "" : "\n") + s;
        return out;
    }
    std::vector<std::string> problems_;
};

struct ExperimentConfig {
    Backend backend = Backend::affine;
    std::size_t basis_n = 256;
    double omega_min = 1.0 / 16;
    double delta = std::log(2.0) / 16;
    long cyclic_order = 32;
    Box window = Box::affine(-4, 4, std::exp(-2.0), std::exp(2.0));
    std::size_t grid_nx = 128;
    std::uint64_t seed = 1;

    std::vector<double> window_centers{1.1, 1.2, 1.25, 1.3, 1.35, 1.4};
    double window_width = 0.3;

    std::size_t moyal_pairs = 6;
    double moyal_tolerance = -1;  // negative: backend default

    Box loc_omega = Box::affine(0, 1, 1, std::exp(1.0));
    double loc_delta = 0.5;
    std::vector<double> loc_scales{1, 2, 4, 8};
    double loc_center = 0.25;
    double loc_width = 0.2;
    double loc_x_step = 1.0 / 16;
    double loc_margin = 2.0;
    std::size_t loc_cap = 512;
    double loc_ratio_tolerance = 0.2;

    std::string bl_phi = "square";
    std::size_t bl_instances = 8;
    double bl_hinge = 0.5;

    double tolerance_scale = 1.0;
    std::vector<std::string> skip;

    // Canonical key = value text of every setting, in key order.
    std::map<std::string, std::string> echo;
};

namespace config_detail {

inline std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

inline std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::stringstream in(s);
    std::string item;
    while (std::getline(in, item, ',')) out.push_back(trim(item));
    return out;
}

inline std::string format_number(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

// Reads typed values out of the raw table, collecting problems by key.
class Reader {
public:
    explicit Reader(const std::map<std::string, std::string>& raw) : raw_(raw) {}

    std::vector<std::string> problems;

    bool has(const std::string& key) const { return raw_.count(key) > 0; }
    const std::string& text(const std::string& key) const { return raw_.at(key); }

    double number(const std::string& key) {
        const std::string& s = text(key);
        try {
            std::size_t used = 0;
            const double v = std::stod(s, &used);
            if (used == s.size() && std::isfinite(v)) return v;
        } catch (const std::exception&) {
        }
        fail(key, "expected a finite number, got \"" + s + "\"");
        return 0.0;
    }

    long integer(const std::string& key, long lo, long hi) {
        const std::string& s = text(key);
        try {
            std::size_t used = 0;
            const long long v = std::stoll(s, &used);
            if (used == s.size()) {
                if (v < lo || v > hi) {
                    fail(key, "must lie in [" + std::to_string(lo) + ", " + std::to_string(hi) + "], got " + s);
                    return lo;
                }
                return static_cast<long>(v);
            }
        } catch (const std::exception&) {
        }
        fail(key, "expected an integer, got \"" + s + "\"");
        return lo;
    }

    std::vector<double> numbers(const std::string& key) {
        std::vector<double> out;
        for (const auto& item : split_list(text(key))) {
            try {
                std::size_t used = 0;
                const double v = std::stod(item, &used);
                if (used == item.size() && std::isfinite(v)) {
                    out.push_back(v);
                    continue;
                }
            } catch (const std::exception&) {
            }
            fail(key, "expected a comma-separated list of numbers, got \"" + text(key) + "\"");
            return {};
        }
        return out;
    }

    void fail(const std::string& key, const std::string& why) { problems.push_back(key + ": " + why); }

private:
    const std::map<std::string, std::string>& raw_;
};

inline const std::map<std::string, std::string>& defaults() {
    static const std::map<std::string, std::string> table{
        {"backend", "affine"},
        {"basis.n", "256"},
        {"basis.omega_min", "0.0625"},
        {"basis.delta", format_number(std::log(2.0) / 16)},
        {"cyclic.order", "32"},
        {"grid.x0", "-4"},
        {"grid.x1", "4"},
        {"grid.a0", format_number(std::exp(-2.0))},
        {"grid.a1", format_number(std::exp(2.0))},
        {"grid.nx", "128"},
        {"seed", "1"},
        {"windows.centers", "1.1, 1.2, 1.25, 1.3, 1.35, 1.4"},
        {"windows.width", "0.3"},
        {"moyal.pairs", "6"},
        {"moyal.tolerance", "auto"},
        {"localization.omega", "0, 1, 1, " + format_number(std::exp(1.0))},
        {"localization.delta", "0.5"},
        {"localization.scales", "1, 2, 4, 8"},
        {"localization.window_center", "0.25"},
        {"localization.window_width", "0.2"},
        {"localization.x_step", "0.0625"},
        {"localization.margin", "2"},
        {"localization.cap", "512"},
        {"localization.ratio_tolerance", "0.2"},
        {"berezin.phi", "square"},
        {"berezin.instances", "8"},
        {"berezin.hinge", "0.5"},
        {"suite.tolerance_scale", "1"},
        {"suite.skip", ""},
    };
    return table;
}

}  // namespace config_detail

// Builds a validated config from key = value text. Throws ConfigError listing
// every problem found.
inline ExperimentConfig parse_config(std::istream& in) {
    using namespace config_detail;
    std::map<std::string, std::string> raw = defaults();
    std::vector<std::string> problems;
    std::string line;
    int lineno = 0;
    std::map<std::string, int> seen;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            problems.push_back("line " + std::to_string(lineno) + ": expected key = value");
            continue;
        }
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (!raw.count(key)) {
            problems.push_back(key + ": unknown key (line " + std::to_string(lineno) + ")");
            continue;
        }
        if (seen.count(key)) {
            problems.push_back(key + ": set twice (lines " + std::to_string(seen[key]) + " and " +
                               std::to_string(lineno) + ")");
            continue;
        }
        seen[key] = lineno;
        raw[key] = value;
    }

    Reader r(raw);
    ExperimentConfig c;
    const std::string& backend = r.text("backend");
    if (backend == "affine")
        c.backend = Backend::affine;
    else if (backend == "cyclic")
        c.backend = Backend::cyclic;
    else
        r.fail("backend", "must be affine or cyclic, got \"" + backend + "\"");

    c.basis_n = static_cast<std::size_t>(r.integer("basis.n", 8, 4096));
    c.omega_min = r.number("basis.omega_min");
    if (!(c.omega_min > 0)) r.fail("basis.omega_min", "must be positive");
    c.delta = r.number("basis.delta");
    if (!(c.delta > 0 && c.delta < 1)) r.fail("basis.delta", "must lie in (0, 1)");
    c.cyclic_order = r.integer("cyclic.order", 2, 512);

    const double x0 = r.number("grid.x0"), x1 = r.number("grid.x1");
    const double a0 = r.number("grid.a0"), a1 = r.number("grid.a1");
    if (!(x1 > x0)) r.fail("grid.x1", "must exceed grid.x0");
    if (!(a0 > 0)) r.fail("grid.a0", "must be positive");
    if (!(a1 > a0)) r.fail("grid.a1", "must exceed grid.a0");
    if (x1 > x0 && a0 > 0 && a1 > a0) c.window = Box::affine(x0, x1, a0, a1);
    c.grid_nx = static_cast<std::size_t>(r.integer("grid.nx", 2, 4096));
    c.seed = static_cast<std::uint64_t>(r.integer("seed", 0, 2147483647L));

    c.window_centers = r.numbers("windows.centers");
    if (c.window_centers.empty()) r.fail("windows.centers", "needs at least one center");
    for (double v : c.window_centers)
        if (!(v > 0)) r.fail("windows.centers", "centers must be positive");
    c.window_width = r.number("windows.width");
    if (!(c.window_width > 0)) r.fail("windows.width", "must be positive");

    c.moyal_pairs = static_cast<std::size_t>(r.integer("moyal.pairs", 1, 64));
    if (r.text("moyal.tolerance") != "auto") {
        c.moyal_tolerance = r.number("moyal.tolerance");
        if (!(c.moyal_tolerance >= 0)) r.fail("moyal.tolerance", "must be nonnegative or auto");
    }

    const auto omega = r.numbers("localization.omega");
    if (omega.size() != 4)
        r.fail("localization.omega", "expected x0, x1, a0, a1");
    else if (!(omega[1] > omega[0] && omega[2] > 0 && omega[3] > omega[2]))
        r.fail("localization.omega", "needs x0 < x1 and 0 < a0 < a1");
    else
        c.loc_omega = Box::affine(omega[0], omega[1], omega[2], omega[3]);
    c.loc_delta = r.number("localization.delta");
    if (!(c.loc_delta > 0 && c.loc_delta < 1)) r.fail("localization.delta", "must lie in (0, 1)");
    c.loc_scales = r.numbers("localization.scales");
    if (c.loc_scales.empty()) r.fail("localization.scales", "needs at least one scale");
    for (double v : c.loc_scales)
        if (!(v > 0)) r.fail("localization.scales", "scales must be positive");
    c.loc_center = r.number("localization.window_center");
    if (!(c.loc_center > 0)) r.fail("localization.window_center", "must be positive");
    c.loc_width = r.number("localization.window_width");
    if (!(c.loc_width > 0)) r.fail("localization.window_width", "must be positive");
    c.loc_x_step = r.number("localization.x_step");
    if (!(c.loc_x_step > 0)) r.fail("localization.x_step", "must be positive");
    c.loc_margin = r.number("localization.margin");
    if (!(c.loc_margin >= 0)) r.fail("localization.margin", "must be nonnegative");
    c.loc_cap = static_cast<std::size_t>(r.integer("localization.cap", 2, 4096));
    c.loc_ratio_tolerance = r.number("localization.ratio_tolerance");
    if (!(c.loc_ratio_tolerance > 0)) r.fail("localization.ratio_tolerance", "must be positive");

    c.bl_phi = r.text("berezin.phi");
    if (c.bl_phi != "square" && c.bl_phi != "hinge" && c.bl_phi != "linear")
        r.fail("berezin.phi", "must be square, hinge or linear, got \"" + c.bl_phi + "\"");
    c.bl_instances = static_cast<std::size_t>(r.integer("berezin.instances", 1, 256));
    c.bl_hinge = r.number("berezin.hinge");
    if (!(c.bl_hinge >= 0)) r.fail("berezin.hinge", "must be nonnegative");

    c.tolerance_scale = r.number("suite.tolerance_scale");
    if (!(c.tolerance_scale >= 1)) r.fail("suite.tolerance_scale", "must be at least 1");
    if (!r.text("suite.skip").empty())
        for (const auto& id : split_list(r.text("suite.skip")))
            if (!id.empty()) c.skip.push_back(id);

    problems.insert(problems.end(), r.problems.begin(), r.problems.end());
    if (!problems.empty()) throw ConfigError(problems);
    c.echo = raw;
    return c;
}

inline ExperimentConfig parse_config_text(const std::string& text) {
    std::istringstream in(text);
    return parse_config(in);
}

inline ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError({"config: cannot open " + path});
    return parse_config(in);
}

}  // namespace qha
