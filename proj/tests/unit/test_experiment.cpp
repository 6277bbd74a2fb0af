#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "json.hpp"
#include "support.hpp"

using namespace projlab;
using namespace projlab::testing;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
    std::ifstream is(p, std::ios::binary);
    std::ostringstream os;
    os << is.rdbuf();
    return os.str();
}

fs::path scratch(const std::string& name) {
    fs::path p = fs::temp_directory_path() / ("projlab_test_" + name);
    fs::remove_all(p);
    return p;
}

ExperimentConfig base(const std::string& command) {
    ExperimentConfig cfg;
    cfg.command = command;
    cfg.cache_dir = PROJLAB_TEST_CACHE;
    return cfg;
}

} // namespace

TEST_SUITE("experiment") {
    TEST_CASE("parse_complex accepts the usual spellings") {
        CHECK(parse_complex("3+0.3i") == cplx(3.0, 0.3));
        CHECK(parse_complex("1 - 2i") == cplx(1.0, -2.0));
        CHECK(parse_complex("-i") == cplx(0.0, -1.0));
        CHECK(parse_complex("2.5") == cplx(2.5, 0.0));
        CHECK(parse_complex("1e-3+2e-2j") == cplx(1e-3, 2e-2));
        CHECK(error_code_of([] { parse_complex("abc"); }) == "bad value");
        CHECK(error_code_of([] { parse_complex(""); }) == "bad value");
    }

    TEST_CASE("config parsing") {
        ExperimentConfig cfg = parse_config("# comment\ncommand = degree\nc = 1+0.5i\nR = 8\nlocus_lengths = 4, 6\n");
        CHECK(cfg.command == "degree");
        CHECK(cfg.c == cplx(1.0, 0.5));
        CHECK(cfg.R == 8.0);
        CHECK(cfg.locus_lengths == std::vector<double>{4.0, 6.0});
        CHECK(cfg.T == 200.0);
        CHECK(error_code_of([] { parse_config("colour = blue\n"); }) == "unknown key");
        CHECK(error_code_of([] { parse_config("T 5\n"); }) == "malformed config");
        CHECK(error_code_of([] { parse_config("T = five\n"); }) == "bad value");
    }

    TEST_CASE("validation names the violated constraint") {
        ExperimentConfig cfg = base("lyapunov");
        CHECK_NOTHROW(validate(cfg));
        cfg.T = -5.0;
        CHECK(error_code_of([&] { validate(cfg); }) == "T out of range");
        cfg = base("lyapunov");
        cfg.dt = 0.1;
        CHECK(error_code_of([&] { validate(cfg); }) == "dt out of range");
        cfg = base("scan");
        cfg.grid.nx = 500;
        CHECK(error_code_of([&] { validate(cfg); }) == "grid too large");
        cfg = base("fly");
        CHECK(error_code_of([&] { validate(cfg); }) == "unknown command");
    }

    TEST_CASE("a rejected config exits 2 and writes nothing") {
        ExperimentConfig cfg = base("lyapunov");
        cfg.T = -5.0;
        cfg.out_dir = scratch("rejected").string();
        std::ostringstream log;
        CHECK(run_experiment(cfg, log) == 2);
        CHECK(log.str().find("T out of range") != std::string::npos);
        CHECK_FALSE(fs::exists(cfg.out_dir));
    }

    TEST_CASE("verify-formula passes at the Fuchsian point and fails on an injected degree") {
        ExperimentConfig cfg = base("verify-formula");
        cfg.R = 8.0;
        FormulaReport r = verify_formula(torus(), form(), cfg);
        CHECK(r.delta.value == 0.0);
        CHECK(r.predicted == doctest::Approx(0.5));
        CHECK(r.pass);
        CHECK(r.margin >= 0.0);

        cfg.inject_delta = 0.1;
        FormulaReport bad = verify_formula(torus(), form(), cfg);
        CHECK(bad.predicted == doctest::Approx(0.5 + 0.2 * 3.141592653589793));
        CHECK_FALSE(bad.pass);
        CHECK(bad.margin < 0.0);
    }

    TEST_CASE("results.json is byte-identical on rerun") {
        ExperimentConfig cfg = base("lyapunov");
        cfg.T = 20.0;
        cfg.n = 20;
        cfg.ball_R = 6.0;
        cfg.ball_n = 50;
        cfg.c = cplx(1.0, 0.5);
        std::ostringstream log;
        cfg.out_dir = scratch("rerun_a").string();
        REQUIRE(run_experiment(cfg, log) == 0);
        std::string first = slurp(fs::path(cfg.out_dir) / "results.json");
        cfg.out_dir = scratch("rerun_b").string();
        REQUIRE(run_experiment(cfg, log) == 0);
        std::string second = slurp(fs::path(cfg.out_dir) / "results.json");
        CHECK(!first.empty());
        CHECK(first == second);
        auto j = nlohmann::json::parse(first);
        CHECK(j["command"] == "lyapunov");
        CHECK(j["chi"]["value"].get<double>() > 0.5);
    }

    TEST_CASE("manifest columns describe the emitted CSV") {
        ExperimentConfig cfg = base("scan");
        cfg.T = 5.0;
        cfg.n = 8;
        cfg.grid = GridSpec{cplx(-0.2, -0.2), 0.1, 4, 3};
        cfg.bootstrap = 5;
        cfg.out_dir = scratch("manifest").string();
        std::ostringstream log;
        REQUIRE(run_experiment(cfg, log) == 0);
        auto manifest = nlohmann::json::parse(slurp(fs::path(cfg.out_dir) / "manifest.json"));
        CHECK(manifest["command"] == "scan");
        CHECK(manifest["seed"] == cfg.seed);
        CHECK(parse_config(manifest["config"].get<std::string>()).to_text() == cfg.to_text());
        bool listed = false;
        for (const auto& f : manifest["files"]) listed = listed || f == "chi_grid.csv";
        CHECK(listed);

        std::istringstream csv(slurp(fs::path(cfg.out_dir) / "chi_grid.csv"));
        std::string header, line;
        std::getline(csv, header);
        std::string expected;
        for (const auto& col : manifest["columns"]["chi_grid.csv"])
            expected += (expected.empty() ? "" : ",") + col.get<std::string>();
        CHECK(header == expected);
        int rows = 0;
        while (std::getline(csv, line))
            if (!line.empty()) ++rows;
        CHECK(rows == 12);
        auto results = nlohmann::json::parse(slurp(fs::path(cfg.out_dir) / "results.json"));
        CHECK(results["scan"]["cells"] == 12);
    }
}

TEST_SUITE("properties") {
    TEST_CASE("config text round-trips") {
        ExperimentConfig cfg = base("compare");
        cfg.c = cplx(-0.25, 1.75);
        cfg.T = 123.5;
        cfg.seed = 987654321;
        cfg.locus_lengths = {3.0, 5.5};
        cfg.grid = GridSpec{cplx(0.5, -1.5), 0.15, 21, 17};
        cfg.trace_t = cplx(4.0, 0.5);
        std::string text = cfg.to_text();
        ExperimentConfig back = parse_config(text);
        CHECK(back.to_text() == text);
        CHECK(back.c == cfg.c);
        CHECK(back.seed == cfg.seed);
        CHECK(back.grid.ny == 17);
    }
}
