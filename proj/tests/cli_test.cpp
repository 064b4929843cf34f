#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <gtest/gtest.h>

#include "qha/experiments.hpp"

namespace fs = std::filesystem;

namespace {

struct Run {
    int code = -1;
    std::string out, err;
};

fs::path scratch_dir() {
    const auto dir = fs::temp_directory_path() / ("qha_cli_test_" + std::to_string(::getpid()));
    fs::create_directories(dir);
    return dir;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

fs::path write_config(const std::string& name, const std::string& text) {
    const auto p = scratch_dir() / name;
    std::ofstream(p) << text;
    return p;
}

Run run(const std::string& args) {
    const auto dir = scratch_dir();
    const auto out = dir / "stdout", err = dir / "stderr";
    const std::string cmd = std::string(QHA_CLI_PATH) + " " + args + " >" + out.string() + " 2>" + err.string();
    const int status = std::system(cmd.c_str());
    return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, slurp(out), slurp(err)};
}

// Body after the comment header.
std::string body_of(const std::string& csv) {
    std::istringstream in(csv);
    std::string line, body;
    while (std::getline(in, line))
        if (line.rfind("# ", 0) != 0) body += line + "\n";
    return body;
}

}  // namespace

TEST(Cli, NegativeBasisSizeIsAConfigError) {
    const auto cfg = write_config("negative_n.cfg", "basis.n = -256\n");
    const auto r = run("moyal " + cfg.string());
    EXPECT_EQ(r.code, 2);
    EXPECT_NE(r.err.find("basis.n"), std::string::npos) << r.err;
}

TEST(Cli, DeltaOutsideUnitIntervalIsAConfigError) {
    const auto cfg = write_config("bad_delta.cfg", "localization.delta = 1.5\n");
    const auto r = run("localization-scaling " + cfg.string());
    EXPECT_EQ(r.code, 2);
    EXPECT_NE(r.err.find("localization.delta"), std::string::npos) << r.err;
}

TEST(Cli, EveryProblemIsListedWithItsFieldPath) {
    const auto cfg = write_config("many.cfg", "backend = torus\ngrid.nx = 1.5\nberezin.phi = cube\nno.such.key = 1\n");
    const auto r = run("suite " + cfg.string());
    EXPECT_EQ(r.code, 2);
    for (const char* key : {"backend", "grid.nx", "berezin.phi", "no.such.key"})
        EXPECT_NE(r.err.find(key), std::string::npos) << key;
    EXPECT_TRUE(r.out.empty());
}

TEST(Cli, UnknownSkipIdIsAConfigError) {
    const auto cfg = write_config("skip.cfg", "backend = cyclic\nsuite.skip = cohen.nothing\n");
    const auto r = run("suite " + cfg.string());
    EXPECT_EQ(r.code, 2);
    EXPECT_NE(r.err.find("suite.skip"), std::string::npos) << r.err;
}

TEST(Cli, CyclicMoyalPassesWithEchoAndHash) {
    const auto cfg = write_config("cyclic.cfg", "backend = cyclic\n");
    const auto json = scratch_dir() / "moyal.json";
    const auto r = run("moyal " + cfg.string() + " --json " + json.string());
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_NE(r.out.find("# backend = cyclic\n"), std::string::npos);
    EXPECT_NE(r.out.find("# cyclic.order = 32\n"), std::string::npos);
    const std::string body = body_of(r.out);
    char hex[17];
    std::snprintf(hex, sizeof hex, "%016llx", static_cast<unsigned long long>(qha::fnv1a64(body)));
    EXPECT_NE(r.out.find(std::string("# content-hash = fnv1a64:") + hex), std::string::npos);
    const auto summary = nlohmann::json::parse(slurp(json));
    EXPECT_EQ(summary["status"], "pass");
    EXPECT_LE(summary["summary"]["max_rel_error"].get<double>(), 1e-9);
}

TEST(Cli, BrokenToleranceExitsOneNamingTheFailure) {
    const auto cfg = write_config("strict.cfg", "backend = cyclic\nmoyal.tolerance = 0\n");
    const auto r = run("moyal " + cfg.string());
    EXPECT_EQ(r.code, 1);
    EXPECT_NE(r.err.find("orthogonality pair"), std::string::npos) << r.err;
}

TEST(Cli, CyclicSuitePassesAndIgnoresWorkerCount) {
    const auto cfg = write_config("cyclic_suite.cfg", "backend = cyclic\n");
    const auto one = run("suite " + cfg.string() + " --workers 1");
    const auto three = run("suite " + cfg.string() + " --workers 3");
    EXPECT_EQ(one.code, 0) << one.err;
    EXPECT_EQ(one.out, three.out);
    EXPECT_NE(one.out.find("localization.scaling,skip"), std::string::npos);
}

TEST(Cli, CsvFieldsAreQuoted) {
    // Detail strings with commas are quoted per RFC 4180.
    const auto cfg = write_config("cyclic_quote.cfg", "backend = cyclic\n");
    const auto r = run("suite " + cfg.string());
    std::istringstream in(body_of(r.out));
    std::string line;
    std::getline(in, line);
    EXPECT_EQ(line, "id,status,error,tolerance,detail");
    while (std::getline(in, line)) {
        std::size_t fields = 1;
        bool quoted = false;
        for (char c : line) {
            if (c == '"') quoted = !quoted;
            if (c == ',' && !quoted) ++fields;
        }
        EXPECT_EQ(fields, 5u) << line;
    }
}

TEST(Cli, MissingSubcommandIsAConfigError) { EXPECT_EQ(run("").code, 2); }
