#include "dsc/errors.hpp"
#include "dsc/harness.hpp"

#include <doctest.h>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace dsc;
using nlohmann::json;

namespace {

const char* kTwoExperiments = R"({
  "defaults": {
    "horizon": 40, "trials": 3, "seed": 5,
    "system": {"d": 3, "n": 1, "p": 2, "spectral_radius": 0.6},
    "cost": {"q_scale": 2.0, "r_scale": 0.5},
    "controllers": [
      {"type": "lqg"},
      {"type": "grc", "memory": 4, "eta": 0.001, "radius": 0.5},
      {"type": "dsc", "h": 1, "h_tilde": 2, "m": 3, "m_tilde": 4, "eta": 0.002, "radius": 0.25, "label": "mine"}
    ]
  },
  "experiments": [
    {"name": "lin", "disturbance": {"kind": "gaussian", "std": 0.3}},
    {"name": "sin", "transition": "relu", "trials": 2,
     "disturbance": {"kind": "sinusoid", "amplitude": 0.5, "frequency": 0.05, "phases": [0, 1, 2]}}
  ]
})";

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace

TEST_CASE("defaults merge into each experiment") {
    const auto cs = parse_config(kTwoExperiments);
    REQUIRE(cs.size() == 2);
    CHECK(cs[0].name == "lin");
    CHECK(cs[0].horizon == 40);
    CHECK(cs[0].trials == 3);
    CHECK(cs[1].trials == 2);
    CHECK(cs[0].transition == Transition::Linear);
    CHECK(cs[1].transition == Transition::Relu);
    CHECK(cs[0].system.d == 3);
    CHECK(cs[0].cost.q_scale == 2.0);
    CHECK(std::get<GaussianNoise>(cs[0].disturbance.kind).std == 0.3);
    const auto& s = std::get<Sinusoid>(cs[1].disturbance.kind);
    CHECK(s.amplitude == 0.5);
    CHECK(s.phases == std::vector<double>{0, 1, 2});
    REQUIRE(cs[0].controllers.size() == 3);
    CHECK(cs[0].controllers[0].label == "LQG");
    CHECK(cs[0].controllers[1].label == "GRC");
    CHECK(cs[0].controllers[1].grc.memory == 4);
    CHECK(cs[0].controllers[1].grc.radius == 0.5);
    CHECK(cs[0].controllers[2].label == "mine");
    CHECK(cs[0].controllers[2].dsc.h_tilde == 2);
    CHECK(cs[0].controllers[2].dsc.m_tilde == 4);
    CHECK(cs[0].controllers[2].dsc.eta == 0.002);
    CHECK(cs[0].controllers[0].lqg_noise_from_disturbance);
}

TEST_CASE("single experiment documents and matrices") {
    const auto cs = parse_config(R"({"name": "one", "horizon": 5,
        "system": {"d": 2, "n": 1, "p": 1, "A": [[0.5, 0], [0, 0.2]], "B": [[1], [0]], "C": [[1, 1]]},
        "controllers": [{"type": "lqg", "noise_std": 0.7}, {"type": "zero"}]})");
    REQUIRE(cs.size() == 1);
    REQUIRE(cs[0].system.A);
    CHECK((*cs[0].system.A)(0, 0) == 0.5);
    CHECK((*cs[0].system.C)(0, 1) == 1.0);
    CHECK(!cs[0].controllers[0].lqg_noise_from_disturbance);
    CHECK(cs[0].controllers[0].lqg.noise_std == 0.7);
    CHECK(cs[0].controllers[1].label == "zero");
}

TEST_CASE("round trip through JSON") {
    const auto cs = parse_config(kTwoExperiments);
    for (const auto& c : cs) {
        const std::string text = config_to_json(c);
        const auto back = parse_config(text);
        REQUIRE(back.size() == 1);
        CHECK(config_to_json(back[0]) == text);
        CHECK(back[0].controllers.size() == c.controllers.size());
    }
}

TEST_CASE("malformed configs") {
    CHECK_THROWS_AS(parse_config("{not json"), ParameterError);
    CHECK_THROWS_AS(parse_config(R"({"controllers": [{"label": "x"}]})"), ParameterError);
    CHECK_THROWS_AS(parse_config(R"({"transition": "cubic", "controllers": [{"type": "zero"}]})"), ParameterError);
    CHECK_THROWS_AS(parse_config(R"({"disturbance": {"kind": "laplace"}, "controllers": [{"type": "zero"}]})"),
                    ParameterError);
    CHECK_THROWS_AS(parse_config(R"({"horizon": "long", "controllers": [{"type": "zero"}]})"), ParameterError);
    CHECK_THROWS_AS(load_config("/nonexistent/cfg.json"), ParameterError);
}

TEST_CASE("run_benchmark writes csv files and a manifest") {
    const auto dir = std::filesystem::temp_directory_path() / "dsc_test_config";
    std::filesystem::remove_all(dir);
    RunOverrides ov;
    ov.trials = 2;
    ov.seed = 11;
    ov.threads = 2;
    const auto results = run_benchmark(parse_config(kTwoExperiments), dir, ov);
    REQUIRE(results.size() == 2);
    CHECK(std::filesystem::exists(dir / "lin.csv"));
    CHECK(std::filesystem::exists(dir / "sin.csv"));
    const json m = json::parse(slurp(dir / "manifest.json"));
    REQUIRE(m.at("experiments").size() == 2);
    const json& e = m.at("experiments")[0];
    CHECK(e.at("csv") == "lin.csv");
    CHECK(e.at("config").at("trials") == 2);
    CHECK(e.at("config").at("seed") == 11);
    CHECK(e.at("trials_used") == 2);
    CHECK(e.at("failures").empty());

    const auto rows = read_csv(dir / "lin.csv");
    CHECK(rows.size() == 3 * 40);

    const std::string first_csv = slurp(dir / "lin.csv"), first_manifest = slurp(dir / "manifest.json");
    run_benchmark(parse_config(kTwoExperiments), dir, ov);
    CHECK(slurp(dir / "lin.csv") == first_csv);
    CHECK(slurp(dir / "manifest.json") == first_manifest);

    RunOverrides naive = ov;
    naive.naive_conv = true;
    run_benchmark(parse_config(kTwoExperiments), dir / "naive", naive);
    const auto fast_rows = read_csv(dir / "lin.csv"), naive_rows = read_csv(dir / "naive" / "lin.csv");
    REQUIRE(fast_rows.size() == naive_rows.size());
    for (std::size_t i = 0; i < fast_rows.size(); ++i) {
        CHECK(fast_rows[i].mean == doctest::Approx(naive_rows[i].mean).epsilon(1e-9));
    }

    RunOverrides zero = ov;
    zero.trials = 0;
    CHECK_THROWS_AS(run_benchmark(parse_config(kTwoExperiments), dir, zero), ParameterError);
}
