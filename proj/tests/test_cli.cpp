#include <catch2/catch.hpp>

#include <array>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>

namespace {

struct RunResult {
    int exit_code;
    std::string output;
};

RunResult run(const std::string& args) {
    const std::string cmd = std::string(LATKERN_BIN) + " " + args + " 2>&1";
    std::array<char, 4096> buf{};
    std::string out;
    FILE* pipe = popen(cmd.c_str(), "r");
    REQUIRE(pipe != nullptr);
    while (fgets(buf.data(), buf.size(), pipe)) out += buf.data();
    const int status = pclose(pipe);
    return {WEXITSTATUS(status), out};
}

std::string slurp(const std::string& path) {
    std::ifstream in(path);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace

TEST_CASE("usage and version", "[cli]") {
    CHECK(run("--version").exit_code == 0);
    CHECK(run("").exit_code == 1);                      // subcommand required
    CHECK(run("no-such-command").exit_code == 1);
    CHECK(run("eval-first --stencil bogus:3").exit_code == 1);
}

TEST_CASE("ellipticity report", "[cli]") {
    RunResult r = run("ellipticity --stencil laplacian1d:3 --grid 1024");
    CHECK(r.exit_code == 0);
    CHECK(r.output.find("\"verified\": true") != std::string::npos);
}

TEST_CASE("omega of the second-order family vanishes", "[cli]") {
    RunResult r = run("omega --stencil laplacian1d:1 --x 0..8");
    CHECK(r.exit_code == 0);
    std::stringstream ss(r.output);
    std::string line;
    int rows = 0;
    while (std::getline(ss, line)) {
        if (line.empty() || line[0] == '#' || line[0] == 'x') continue;
        const auto c1 = line.find(','), c2 = line.rfind(',');
        const double re = std::stod(line.substr(c1 + 1, c2 - c1 - 1));
        CHECK(std::abs(re) < 1e-8);
        ++rows;
    }
    CHECK(rows == 9);
}

TEST_CASE("deterministic artifacts", "[cli]") {
    const std::string f1 = "/tmp/latkern_field_a.csv", f2 = "/tmp/latkern_field_b.csv";
    CHECK(run("field --stencil simple-walk:2 --t 2 --window 6 --tol 1e-9 --out " + f1).exit_code == 0);
    CHECK(run("field --stencil simple-walk:2 --t 2 --window 6 --tol 1e-9 --out " + f2).exit_code == 0);
    auto a = slurp(f1), b = slurp(f2);
    // identical except the echoed output path in the provenance header
    auto strip = [](std::string s, const std::string& needle) {
        std::stringstream ss(s), out;
        std::string line;
        while (std::getline(ss, line))
            if (line.find(needle) == std::string::npos) out << line << "\n";
        return out.str();
    };
    CHECK(strip(a, "command:") == strip(b, "command:"));
    CHECK(a.find("x1,x2,re,im") != std::string::npos);
}

TEST_CASE("eval and expand artifacts", "[cli]") {
    RunResult r = run("eval-first --stencil laplacian1d:1 --t 1 --x 0");
    CHECK(r.exit_code == 0);
    CHECK(r.output.find("0.308508322553671") != std::string::npos);

    RunResult p = run("expand --stencil laplacian1d:1 --J 1 --K 4 --emit polys");
    CHECK(p.exit_code == 0);
    CHECK(p.output.find("\"layers\"") != std::string::npos);
    CHECK(p.output.find("1/12") != std::string::npos);

    RunResult prof = run("expand --stencil laplacian1d:1 --J 0 --K 2 --emit profiles --n 4 --ymax 2");
    CHECK(prof.exit_code == 0);
    CHECK(prof.output.find("y,grade,re,im") != std::string::npos);
}

TEST_CASE("verify-remainder gate", "[cli]") {
    RunResult r = run("verify-remainder --stencil laplacian1d:1 --kind first --J 0 --K 2 "
                      "--ladder 16,2,4 --window 24");
    CHECK(r.exit_code == 0);
    CHECK(r.output.find("\"pass\": true") != std::string::npos);
    CHECK(r.output.find("fitted_slope") != std::string::npos);
}

TEST_CASE("walk round trip", "[cli]") {
    const std::string hist = "/tmp/latkern_hist.csv";
    CHECK(run("walk-sim --stencil simple-walk:2 --scale 0.25 --t 3 --paths 20000 --seed 7 --out " + hist)
              .exit_code == 0);
    RunResult again = run("walk-sim --stencil simple-walk:2 --scale 0.25 --t 3 --paths 20000 --seed 7");
    CHECK(again.exit_code == 0);

    RunResult cmp = run("walk-compare --hist " + hist +
                        " --stencil simple-walk:2 --scale 0.25 --order exact");
    CHECK(cmp.exit_code == 0);
    const auto pos = cmp.output.find("\"tv\": ");
    REQUIRE(pos != std::string::npos);
    const double tv = std::stod(cmp.output.substr(pos + 6));
    CHECK(tv < 0.05);
}

TEST_CASE("json config provides defaults, flags win", "[cli]") {
    const std::string cfg = "/tmp/latkern_cfg.json";
    {
        std::ofstream out(cfg);
        out << "{\"command\":\"eval-first\",\"stencil\":\"laplacian1d:1\",\"t\":\"1\",\"x\":\"0\"}";
    }
    RunResult r = run("--json-config " + cfg);
    CHECK(r.exit_code == 0);
    CHECK(r.output.find("0.308508322553671") != std::string::npos);
    // command-line flag overrides the config value
    RunResult r2 = run("--json-config " + cfg + " --x 1");
    CHECK(r2.exit_code == 0);
    CHECK(r2.output.find("0.308508322553671") == std::string::npos);
}

TEST_CASE("oned emitters", "[cli]") {
    RunResult c = run("oned --N 1 --emit constants");
    CHECK(c.exit_code == 0);
    CHECK(c.output.find("\"1\": \"1/12\"") != std::string::npos);
    RunResult v = run("oned-verify --N 1");
    CHECK(v.exit_code == 0);
    CHECK(v.output.find("FAIL") == std::string::npos);
}
