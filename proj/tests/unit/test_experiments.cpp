#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "tnlab/errors.hpp"
#include "tnlab/experiments.hpp"

using namespace tnlab;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    std::ostringstream os;
    os << f.rdbuf();
    return os.str();
}

fs::path scratch(const std::string& name) {
    auto p = fs::temp_directory_path() / ("tnlab_test_" + name);
    fs::remove_all(p);
    return p;
}

Json tiny_acw() { return Json::parse(R"({"acw": {"K": [0, 1, 4], "T": 4, "ensemble": 3}})"); }

Json acw_manifest(double lambda1, double se1) {
    Json rows = Json::array();
    rows.push_back({{"K", 0.0}, {"lambda_mc", 1.0}, {"stderr", 0.0}, {"lambda_quadrature", nullptr}});
    const double K[] = {0.5, 1.0, 2.0, 5.0, 10.0};
    const double q[] = {0.6, 0.0263, -0.36, -0.4775, -0.4944};
    for (int i = 0; i < 5; ++i) {
        const double mc = i == 1 ? lambda1 : q[i];
        rows.push_back({{"K", K[i]}, {"lambda_mc", mc}, {"stderr", i == 1 ? se1 : 0.01}, {"lambda_quadrature", q[i]}});
    }
    return {{"experiment", "acw"},
            {"wall_clock_seconds", 10.0},
            {"measurements", {{"a", 1.0}, {"b", -2.0}, {"rows", rows}}}};
}

}  // namespace

TEST_CASE("every experiment resolves an empty config and resolution is idempotent") {
    for (const auto& id : experiment_ids()) {
        CAPTURE(id);
        const Json r = resolve_config(id, Json::object());
        CHECK(r["experiment"] == id);
        CHECK(r.contains("seed"));
        CHECK(resolve_config(id, r) == r);
    }
    const Json r = resolve_config("acw", Json::object());
    CHECK(r["acw"]["T"].get<double>() == 200.0);
    CHECK(r["acw"]["K"].size() == 6);
    const Json m = resolve_config("mixing", Json::object());
    CHECK(m["model"]["noise"]["shells"] == Json::parse("[[1, 1.0]]"));
    CHECK(m["solver"]["points"] == 64);
}

TEST_CASE("config errors name the offending key") {
    auto message = [](const std::string& id, const char* text) {
        try {
            resolve_config(id, Json::parse(text));
        } catch (const InputError& e) {
            return std::string(e.what());
        }
        return std::string("no error");
    };
    CHECK(message("acw", R"({"acw": {"T": 10, "Tmax": 3}})").find("acw.Tmax") != std::string::npos);
    CHECK(message("acw", R"({"acw": {"T": "long"}})").find("acw.T") != std::string::npos);
    CHECK(message("acw", R"({"acw": {"T": -1}})").find("acw.T") != std::string::npos);
    CHECK(message("acw", R"({"colour": 1})").find("colour") != std::string::npos);
    CHECK(message("mixing", R"({"model": {"noise": {"intensity": 2}}})").find("intensity") != std::string::npos);
    CHECK(message("lyapunov", R"({"solver": {"scheme": "rk4"}})").find("solver.scheme") != std::string::npos);
    CHECK(message("mixing", R"({"mixing": {"fit_window": [3, 1]}})").find("fit_window") != std::string::npos);
    CHECK(message("acw", R"({"experiment": "steady"})").find("experiment") != std::string::npos);
    CHECK_THROWS_AS(resolve_config("nonsense", Json::object()), InputError);
    CHECK_THROWS_AS(run_experiment("acw", Json::parse(R"({"acw": {"T": 2.5}})")), InputError);
}

TEST_CASE("same config and seed give byte-identical outputs; manifest reruns reproduce them") {
    const auto a = scratch("acw_a"), b = scratch("acw_b"), c = scratch("acw_c"), d = scratch("acw_d");
    const Json m1 = run_experiment("acw", tiny_acw(), {std::nullopt, 1, a});
    run_experiment("acw", tiny_acw(), {std::nullopt, 3, b});
    run_experiment("acw", m1["config"], {std::nullopt, 2, c});
    run_experiment("acw", tiny_acw(), {std::uint64_t{99}, 1, d});
    const auto ref = slurp(a / "acw.csv");
    CHECK(!ref.empty());
    CHECK(ref.rfind("K,lambda_mc,stderr,lambda_quadrature\n", 0) == 0);
    CHECK(slurp(b / "acw.csv") == ref);
    CHECK(slurp(c / "acw.csv") == ref);
    CHECK(slurp(d / "acw.csv") != ref);
    const Json loaded = load_json(a / "acw_manifest.json");
    CHECK(loaded["schema_version"] == kManifestSchemaVersion);
    CHECK(loaded["config"] == m1["config"]);
    CHECK(loaded["files"] == Json::array({"acw.csv"}));
    for (const auto& p : {a, b, c, d}) fs::remove_all(p);
}

TEST_CASE("steady campaign writes the order parameter table") {
    const auto dir = scratch("steady");
    const Json cfg = Json::parse(R"({"steady": {"points": 16, "two_mode": false,
        "single_mode": {"nu": [0.6, 0.3], "bracket": [0.3, 0.6], "bisection_tol": 0.05}}})");
    const Json m = run_experiment("steady", cfg, {std::nullopt, 1, dir});
    const auto& s = m["measurements"]["single_mode"];
    CHECK(s["rows"][0]["order_parameter"].get<double>() < 1e-6);
    CHECK(s["rows"][1]["order_parameter"].get<double>() > 0.05);
    CHECK(std::abs(s["nu_crit_estimate"].get<double>() - 0.5) < 0.05);
    CHECK(m["derived"].is_object());
    CHECK(fs::exists(dir / "steady.csv"));
    fs::remove_all(dir);
}

TEST_CASE("empty manifest set leaves every criterion missing") {
    const auto r = check_acceptance({});
    REQUIRE(r.size() == 9);
    for (std::size_t i = 0; i < r.size(); ++i) {
        CHECK(r[i].id == criterion_ids()[i]);
        CHECK(r[i].status == "missing");
    }
}

TEST_CASE("A1 verdicts follow the 3-stderr rule") {
    auto status = [](const Json& m) { return check_acceptance({m})[0].status; };
    CHECK(status(acw_manifest(0.03, 0.01)) == "pass");
    CHECK(status(acw_manifest(0.08, 0.01)) == "fail");
    Json slow = acw_manifest(0.03, 0.01);
    slow["wall_clock_seconds"] = 500.0;
    CHECK(status(slow) == "fail");
    Json broken = acw_manifest(0.03, 0.01);
    broken["measurements"].erase("rows");
    CHECK(status(broken) == "fail");
}

TEST_CASE("A4 passes when 90% of seeds return to uniform above K_crit") {
    Json seeds = Json::array();
    for (int i = 0; i < 20; ++i) seeds.push_back({{"success", i != 0}});
    Json m{{"experiment", "ergodicity"},
           {"wall_clock_seconds", 100.0},
           {"measurements",
            {{"deterministic", {{"initial_hm1", 0.1}, {"min_hm1", 0.099}}},
             {"K_crit_multiple", 1.5},
             {"T", 10.0},
             {"seeds", seeds},
             {"success_fraction", 0.95}}}};
    CHECK(check_acceptance({m})[3].status == "pass");
    m["measurements"]["success_fraction"] = 0.85;
    CHECK(check_acceptance({m})[3].status == "fail");
}
