#include "cli_runner.hpp"
#include "expr.hpp"

#include <catch_amalgamated.hpp>
#include <nlohmann/json.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>

using namespace bzo;
using namespace bzo::cli;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("bzo-test-" + name);
    fs::remove_all(p);
    return p;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

RunConfig sweep_config(const fs::path& out, unsigned threads) {
    RunConfig c;
    c.command = "sweep";
    c.delta = "0:1:10";
    c.n_k = 1024;
    c.no_refine = true;
    c.wkb_n_k = 512;
    c.out_dir = out.string();
    c.threads = threads;
    return c;
}

int call(std::vector<std::string> args) {
    args.insert(args.begin(), "bzo");
    std::vector<char*> argv;
    for (auto& a : args) argv.push_back(a.data());
    return main_entry(int(argv.size()), argv.data());
}

}  // namespace

TEST_CASE("angle expressions", "[cli]") {
    CHECK(parse_expr("pi/2-0.1") == Catch::Approx(std::numbers::pi / 2 - 0.1).epsilon(1e-15));
    CHECK(parse_expr(" 2*(pi - 1) ") == Catch::Approx(2 * (std::numbers::pi - 1)).epsilon(1e-15));
    CHECK(parse_expr("-0.25") == -0.25);
    CHECK(parse_expr("1e-3") == 1e-3);
    CHECK_THROWS_AS(parse_expr("pi/"), ConfigError);
    CHECK_THROWS_AS(parse_expr("2 3"), ConfigError);
    CHECK_THROWS_AS(parse_expr("(1"), ConfigError);
}

TEST_CASE("delta ranges", "[cli]") {
    const DeltaRange r = parse_range("0:1.2:120");
    CHECK(r.lo == 0.0);
    CHECK(r.hi == 1.2);
    CHECK(r.points == 121);
    CHECK(parse_range("0.4").points == 1);
    CHECK_THROWS_AS(parse_range("0:1"), ConfigError);
    CHECK_THROWS_AS(parse_range("0:1:2.5"), ConfigError);
    CHECK_THROWS_AS(parse_range("0:1:0"), ConfigError);
}

TEST_CASE("exit statuses", "[cli]") {
    std::ostringstream log;
    RunConfig bad;
    bad.command = "spectrum";
    bad.model = "ssh";
    bad.out_dir = scratch("bad").string();
    CHECK(run(bad, log).status == exit_config);
    bad.command = "no-such-command";
    CHECK(run(bad, log).status == exit_config);

    RunConfig tight;
    tight.command = "evolve";
    tight.force = 0.02;
    tight.cells = 12;
    tight.periods = 1.0;
    tight.out_dir = scratch("edge").string();
    const RunResult r = run(tight, log);
    CHECK(r.status == exit_numerical);
    CHECK_FALSE(r.message.empty());

    CHECK(call({"sweep", "--delta", "0:1", "--out", scratch("argv").string()}) == exit_config);
    CHECK(call({"sweep", "--bogus"}) == exit_config);
}

TEST_CASE("manifest lists every output with its digest", "[cli]") {
    const fs::path out = scratch("manifest");
    std::ostringstream log;
    const RunResult r = run(sweep_config(out, 2), log);
    REQUIRE(r.status == exit_ok);
    const auto manifest = nlohmann::json::parse(slurp(out / "manifest.json"));
    CHECK(manifest["command"] == "sweep");
    CHECK(manifest["params"]["delta_points"] == 11);
    CHECK(manifest["params"]["threads"] == 2);
    CHECK(manifest.contains("version"));
    CHECK(manifest["results"]["summary"].contains("classification"));
    REQUIRE(manifest["outputs"].size() == 2);
    for (const auto& o : manifest["outputs"]) {
        const fs::path p = o["path"].get<std::string>();
        REQUIRE(fs::exists(p));
        CHECK(o["sha256"] == sha256_hex(slurp(p)));
    }
    CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST_CASE("outputs do not depend on the thread count", "[cli]") {
    std::ostringstream log;
    const fs::path a = scratch("t1"), b = scratch("t3"), c = scratch("tenv");
    REQUIRE(run(sweep_config(a, 1), log).status == exit_ok);
    REQUIRE(run(sweep_config(b, 3), log).status == exit_ok);
    CHECK(slurp(a / "sweep.csv") == slurp(b / "sweep.csv"));

    ::setenv("BZL_THREADS", "2", 1);
    const RunResult r = run(sweep_config(c, 0), log);
    ::unsetenv("BZL_THREADS");
    REQUIRE(r.status == exit_ok);
    CHECK(nlohmann::json::parse(slurp(c / "manifest.json"))["params"]["threads"] == 2);
    CHECK(slurp(a / "sweep.csv") == slurp(c / "sweep.csv"));
}

TEST_CASE("config file supplies defaults and flags override it", "[cli]") {
    const fs::path dir = scratch("config");
    fs::create_directories(dir);
    const fs::path ini = dir / "run.toml";
    std::ofstream(ini) << "[spectrum]\nmodel = \"rice-mele\"\nt1 = 0.4\ndelta = 0.2\nnk = 512\n";
    const fs::path out = dir / "out";
    REQUIRE(call({"--config", ini.string(), "spectrum", "--delta", "0.3", "--out", out.string()}) == exit_ok);
    const auto manifest = nlohmann::json::parse(slurp(out / "manifest.json"));
    CHECK(manifest["params"]["model"] == "rice-mele");
    CHECK(manifest["params"]["t1"] == 0.4);
    CHECK(manifest["params"]["delta"] == 0.3);
}

TEST_CASE("classify reads back what sweep wrote", "[cli]") {
    std::ostringstream log;
    const fs::path out = scratch("roundtrip");
    RunConfig c = sweep_config(out, 1);
    c.model = "rice-mele";
    c.t1 = 0.4;
    c.delta = "0:1.2:24";
    REQUIRE(run(c, log).status == exit_ok);
    const auto sweep = nlohmann::json::parse(slurp(out / "sweep.json"));

    RunConfig k;
    k.command = "classify";
    k.input = (out / "sweep.csv").string();
    k.out_dir = (out / "classify").string();
    REQUIRE(run(k, log).status == exit_ok);
    const auto back = nlohmann::json::parse(slurp(out / "classify" / "classify.json"));
    CHECK(back["classification"] == sweep["classification"]);
    CHECK(back["delta_star"] == sweep["delta_star"]);

    k.kind = "bogus";
    CHECK(run(k, log).status == exit_config);
    k.kind = "series";
    CHECK(run(k, log).status == exit_config);  // sweep CSV has no t/A columns
}
