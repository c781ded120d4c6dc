#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include <unistd.h>

#include <json.hpp>

#include "cli.hpp"

namespace fs = std::filesystem;
using ahm::cli::run;

namespace {

struct Scratch {
    fs::path root;
    Scratch() {
        root = fs::temp_directory_path() / ("ahm_cli_test_" + std::to_string(::getpid()));
        fs::remove_all(root);
        fs::create_directories(root);
    }
    ~Scratch() { fs::remove_all(root); }

    std::string config(const std::string& name, const std::string& body) const {
        const fs::path p = root / name;
        std::ofstream(p) << body;
        return p.string();
    }
    std::string out(const std::string& name) const { return (root / name).string(); }
};

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

const char* kSolve = R"({ "grid": {"half_width": 9.6, "points": 128}, "roots": [[0.0, 0.0]] })";
const char* kLinearFamily = R"({
  "source": {
    "coords": [{}, {}, {"x3": 1.0}, {"t": 1.0}],
    "x3": {"min": -1.0, "max": 1.0, "count": 41},
    "t": {"min": -1.0, "max": 1.0, "count": 41}
  },
  "centerline_times": [-0.5, 0.5],
  "expect_events": 1
})";

}  // namespace

TEST_CASE("solve-vortex writes a snapshot and diagnostics") {
    Scratch s;
    const std::string out = s.out("solve");
    REQUIRE(run({"solve-vortex", "--config", s.config("solve.json", kSolve), "--out", out, "--check"}) ==
            ahm::cli::kExitOk);
    CHECK(fs::exists(fs::path(out) / "vortex.ahmf"));
    CHECK(fs::exists(fs::path(out) / "manifest.json"));
    const auto d = nlohmann::json::parse(slurp(fs::path(out) / "diagnostics.json"));
    CHECK(d["energy_over_pi_n"].get<double>() == doctest::Approx(1.0).epsilon(0.02));
    CHECK(d["vorticity_over_pi_n"].get<double>() == doctest::Approx(1.0).epsilon(0.02));
    const auto m = nlohmann::json::parse(slurp(fs::path(out) / "manifest.json"));
    CHECK(m["command"] == "solve-vortex");
    for (const auto& o : m["outputs"]) CHECK(o["sha256"].get<std::string>().size() == 64);
}

TEST_CASE("reconnect finds the single event of the linear family") {
    Scratch s;
    const std::string out = s.out("rec");
    REQUIRE(run({"reconnect", "--config", s.config("rec.json", kLinearFamily), "--out", out, "--check"}) ==
            ahm::cli::kExitOk);
    const auto ev = nlohmann::json::parse(slurp(fs::path(out) / "events.json"));
    const auto& list = ev.is_array() ? ev : ev["events"];
    REQUIRE(list.size() == 1);
    CHECK(std::abs(list[0]["winding"].get<int>()) == 1);
    CHECK(fs::exists(fs::path(out) / "centerlines.csv"));
}

TEST_CASE("config errors leave no artifacts") {
    Scratch s;
    const std::string unknown = s.config("unknown.json", R"({ "grid": {"half_width": 9.6, "points": 128}, "roots": [[0, 0]], "rootz": 1 })");
    CHECK(run({"solve-vortex", "--config", unknown, "--out", s.out("a")}) == ahm::cli::kExitConfig);
    CHECK_FALSE(fs::exists(s.out("a")));
    const std::string broken = s.config("broken.json", R"({ "grid": {"half_width": 9.6, )");
    CHECK(run({"solve-vortex", "--config", broken, "--out", s.out("b")}) == ahm::cli::kExitConfig);
    CHECK_FALSE(fs::exists(s.out("b")));
    const std::string coarse = s.config("coarse.json", R"({ "grid": {"half_width": 9.6, "points": 64}, "roots": [[0, 0]] })");
    CHECK(run({"solve-vortex", "--config", coarse, "--out", s.out("c")}) == ahm::cli::kExitConfig);
    CHECK_FALSE(fs::exists(s.out("c")));
    CHECK(run({"solve-vortex", "--out", s.out("d")}) == ahm::cli::kExitConfig);
    CHECK(run({"no-such-command"}) == ahm::cli::kExitConfig);
}

TEST_CASE("solver failure exits 2") {
    Scratch s;
    const std::string cfg =
        s.config("tight.json", R"({ "grid": {"half_width": 9.6, "points": 128}, "roots": [[0, 0]], "newton_tol": 1e-30 })");
    CHECK(run({"solve-vortex", "--config", cfg, "--out", s.out("x")}) == ahm::cli::kExitSolver);
}

TEST_CASE("failing check exits 3 only under --check") {
    Scratch s;
    std::string body = kLinearFamily;
    body.replace(body.find("\"expect_events\": 1"), 18, "\"expect_events\": 2");
    const std::string cfg = s.config("rec2.json", body);
    CHECK(run({"reconnect", "--config", cfg, "--out", s.out("r1"), "--check"}) == ahm::cli::kExitCheck);
    CHECK(run({"reconnect", "--config", cfg, "--out", s.out("r2")}) == ahm::cli::kExitOk);
    const auto m = nlohmann::json::parse(slurp(fs::path(s.out("r1")) / "manifest.json"));
    bool failed = false;
    for (const auto& c : m["checks"]) failed = failed || !c["passed"].get<bool>();
    CHECK(failed);
}

TEST_CASE("repeated runs are byte-identical") {
    Scratch s;
    const std::string cfg = s.config("rec.json", kLinearFamily);
    REQUIRE(run({"reconnect", "--config", cfg, "--out", s.out("one"), "--seed", "5"}) == 0);
    REQUIRE(run({"reconnect", "--config", cfg, "--out", s.out("two"), "--seed", "5"}) == 0);
    int compared = 0;
    for (const auto& e : fs::directory_iterator(s.out("one"))) {
        const std::string name = e.path().filename().string();
        if (name == "timing.json") continue;
        CHECK_MESSAGE(slurp(e.path()) == slurp(fs::path(s.out("two")) / name), name);
        ++compared;
    }
    CHECK(compared >= 3);
}
