// Command-line runner: one subcommand per experiment, CSV artifacts with a
// config echo and content hash, optional JSON summary.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "qha/experiments.hpp"
#include "qha/parallel.hpp"

namespace {

constexpr int exit_pass = 0;
constexpr int exit_invariant = 1;
constexpr int exit_config = 2;

using Runner = qha::Table (*)(const qha::Setup&);

qha::Table suite(const qha::Setup& s) { return qha::run_suite(s); }

const std::map<std::string, std::pair<Runner, std::string>>& subcommands() {
    static const std::map<std::string, std::pair<Runner, std::string>> table{
        {"moyal", {qha::run_moyal, "orthogonality relation over window pairs"}},
        {"localization-scaling", {qha::run_localization_scaling, "eigenvalue counts of dilated regions"}},
        {"berezin-lieb", {qha::run_berezin_lieb, "both Berezin-Lieb inequalities on random instances"}},
        {"cohen-map", {qha::run_cohen_map, "scalogram of the first two windows over the grid"}},
        {"admissibility", {qha::run_admissibility, "admissibility constants, direct and integral routes"}},
        {"wavelet-moyal", {qha::run_wavelet_moyal, "Moyal identity of the operator wavelet transform"}},
        {"suite", {suite, "every proposition check with measured errors"}},
    };
    return table;
}

// RFC 4180: quote fields holding a comma, quote or line break; double inner quotes.
std::string csv_field(const std::string& v) {
    if (v.find_first_of(",\"\r\n") == std::string::npos) return v;
    std::string out = "\"";
    for (char c : v) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

std::string csv_body(const qha::Table& t) {
    std::ostringstream out;
    const auto line = [&](const std::vector<std::string>& cells) {
        for (std::size_t i = 0; i < cells.size(); ++i) out << (i ? "," : "") << csv_field(cells[i]);
        out << "\n";
    };
    line(t.columns);
    for (const auto& row : t.rows) line(row);
    return out.str();
}

std::string hex64(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

bool write_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    out << text;
    return static_cast<bool>(out);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Quantum harmonic analysis experiments on the affine group and a cyclic phase space"};
    app.require_subcommand(1);
    app.fallthrough();
    int workers = 1;
    std::string out_path, json_path, config_path;
    app.add_option("--workers", workers, "worker threads (results do not depend on it)")->check(CLI::PositiveNumber);
    app.add_option("--out", out_path, "CSV output file (default: stdout)");
    app.add_option("--json", json_path, "JSON summary file");
    for (const auto& [name, entry] : subcommands()) {
        auto* sub = app.add_subcommand(name, entry.second);
        sub->add_option("config", config_path, "key = value config file (defaults when omitted)");
    }
    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return exit_config;
    }
    const std::string name = app.get_subcommands().front()->get_name();
    qha::parallel::set_workers(workers);

    qha::Table table;
    qha::ExperimentConfig cfg;
    try {
        cfg = config_path.empty() ? qha::parse_config_text("") : qha::load_config(config_path);
        const qha::Setup setup(cfg);
        table = subcommands().at(name).first(setup);
    } catch (const qha::ConfigError& e) {
        for (const auto& p : e.problems()) std::cerr << "config error: " << p << "\n";
        return exit_config;
    } catch (const qha::Error& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return exit_config;
    }

    const std::string body = csv_body(table);
    const std::string hash = "fnv1a64:" + hex64(qha::fnv1a64(body));
    std::ostringstream csv;
    csv << "# qha_cli " << name << "\n";
    for (const auto& [key, value] : cfg.echo) csv << "# " << key << " = " << value << "\n";
    csv << "# content-hash = " << hash << "\n" << body;

    if (out_path.empty()) {
        std::cout << csv.str();
    } else if (!write_file(out_path, csv.str())) {
        std::cerr << "cannot write " << out_path << "\n";
        return exit_config;
    }
    if (!json_path.empty()) {
        nlohmann::ordered_json j{{"subcommand", name},
                                 {"config", cfg.echo},
                                 {"content_hash", hash},
                                 {"status", table.failures.empty() ? "pass" : "fail"},
                                 {"failures", table.failures},
                                 {"summary", table.summary}};
        if (!write_file(json_path, j.dump(2) + "\n")) {
            std::cerr << "cannot write " << json_path << "\n";
            return exit_config;
        }
    }
    for (const auto& f : table.failures) std::cerr << "invariant failed: " << f << "\n";
    return table.failures.empty() ? exit_pass : exit_invariant;
}
