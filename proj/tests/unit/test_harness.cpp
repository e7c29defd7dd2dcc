#include "dsc/errors.hpp"
#include "dsc/harness.hpp"

#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

using namespace dsc;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

ExperimentConfig small_config() {
    ExperimentConfig c;
    c.name = "small";
    c.horizon = 60;
    c.trials = 4;
    c.seed = 99;
    c.system.d = 4;
    c.system.n = 2;
    c.system.p = 2;
    c.system.spectral_radius = 0.7;
    c.disturbance.kind = GaussianNoise{0.5};
    ControllerSpec z;
    z.type = "zero";
    ControllerSpec l;
    l.type = "lqg";
    ControllerSpec g;
    g.type = "grc";
    g.grc.memory = 3;
    g.grc.eta = 1e-3;
    g.grc.radius = 1.0;
    ControllerSpec d;
    d.type = "dsc";
    d.dsc.h = 1;
    d.dsc.h_tilde = 1;
    d.dsc.m = 3;
    d.dsc.m_tilde = 3;
    d.dsc.eta = 1e-3;
    d.dsc.radius = 1.0;
    c.controllers = {z, l, g, d};
    return c;
}

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

TrialLog fixed_log(std::vector<std::vector<double>> per_controller, std::vector<std::string> names) {
    TrialLog log;
    log.controllers = std::move(names);
    log.costs = MatrixXd(per_controller[0].size(), per_controller.size());
    for (std::size_t k = 0; k < per_controller.size(); ++k) {
        for (std::size_t t = 0; t < per_controller[k].size(); ++t) log.costs(t, k) = per_controller[k][t];
    }
    return log;
}

}  // namespace

TEST_CASE("sliding window") {
    const std::vector<double> constant(50, 3.25);
    for (double v : sliding_window(constant, 0.1)) CHECK(v == 3.25);
    const std::vector<double> series = {4.0, 1.0, 7.0, 2.0};
    CHECK(sliding_window(series, 0.25) == series);  // window 1
    std::mt19937_64 rng(31);
    std::uniform_real_distribution<double> unif(0.0, 10.0);
    std::vector<double> c(257);
    for (auto& v : c) v = unif(rng);
    for (double f : {0.01, 0.1, 0.37, 1.0}) {
        const auto out = sliding_window(c, f);
        const long w = std::max(1L, static_cast<long>(std::floor(f * 257)));
        std::vector<double> prefix(258, 0.0);
        for (int t = 0; t < 257; ++t) prefix[t + 1] = prefix[t] + c[t];
        for (long t = 0; t < 257; ++t) {
            const long lo = std::max(0L, t - w + 1);
            CHECK(out[t] == doctest::Approx((prefix[t + 1] - prefix[lo]) / (t - lo + 1)).epsilon(1e-12));
        }
    }
    CHECK_THROWS_AS(sliding_window({}, 0.1), ParameterError);
    CHECK_THROWS_AS(sliding_window(series, 0.0), ParameterError);
    CHECK_THROWS_AS(sliding_window(series, 1.5), ParameterError);
}

TEST_CASE("aggregate statistics") {
    const auto a = fixed_log({{1.0, 2.0, 3.0}}, {"A"});
    SUBCASE("identical trials have zero width") {
        const auto r = aggregate({a, a, a}, 0.5);
        CHECK(r.trials == 3);
        CHECK(r.half_width.isZero(0.0));
    }
    SUBCASE("symmetric trials average to zero") {
        const auto neg = fixed_log({{-1.0, -2.0, -3.0}}, {"A"});
        const auto r = aggregate({a, neg}, 1.0);
        CHECK(r.mean.isZero(0.0));
        CHECK(r.half_width.minCoeff() > 0.0);
    }
    SUBCASE("single trial") {
        const auto r = aggregate({a}, 1.0);
        CHECK(r.half_width.isZero(0.0));
        CHECK(r.mean(0, 2) == 2.0);
    }
    SUBCASE("failed trials are skipped") {
        auto bad = fixed_log({{100.0, 100.0, 100.0}}, {"A"});
        bad.failure = TrialFailure{"A", 1, "boom"};
        const auto r = aggregate({a, bad}, 1.0);
        CHECK(r.trials == 1);
        CHECK(r.mean(0, 0) == 1.0);
        CHECK(aggregate({bad}, 1.0).trials == 0);
    }
    SUBCASE("gaussian interval width") {
        std::mt19937_64 rng(32);
        std::normal_distribution<double> normal(5.0, 2.0);
        std::vector<TrialLog> logs;
        for (int i = 0; i < 400; ++i) logs.push_back(fixed_log({{normal(rng)}}, {"A"}));
        const auto r = aggregate(logs, 1.0);
        const double expected = 1.96 * 2.0 / std::sqrt(400.0);
        CHECK(std::abs(r.half_width(0, 0) - expected) < 0.2 * expected);
        CHECK(std::abs(r.mean(0, 0) - 5.0) < 3 * 2.0 / 20.0);
    }
}

TEST_CASE("csv golden file and round trip") {
    const auto t1 = fixed_log({{1.0, 2.0, 3.0}, {0.5, 0.25, 0.125}}, {"A", "B"});
    const auto t2 = fixed_log({{3.0, 4.0, 5.0}, {0.5, 0.25, 0.125}}, {"A", "B"});
    const auto r = aggregate({t1, t2}, 1.0);
    const auto dir = std::filesystem::temp_directory_path() / "dsc_test_harness";
    std::filesystem::create_directories(dir);
    write_csv(r, dir / "agg.csv");
    CHECK(slurp(dir / "agg.csv") == slurp(std::filesystem::path(DSC_TEST_DATA) / "golden_aggregate.csv"));

    const auto rows = read_csv(dir / "agg.csv");
    REQUIRE(rows.size() == 6);
    for (std::size_t k = 0; k < 2; ++k) {
        for (int t = 0; t < 3; ++t) {
            const auto& row = rows[k * 3 + t];
            CHECK(row.t == t);
            CHECK(row.controller == r.controllers[k]);
            CHECK(row.mean == r.mean(k, t));
            CHECK(row.ci_low == r.mean(k, t) - r.half_width(k, t));
            CHECK(row.ci_high == r.mean(k, t) + r.half_width(k, t));
        }
    }

    AggregateResult empty;
    write_csv(empty, dir / "empty.csv");
    CHECK(slurp(dir / "empty.csv") == "t,controller,mean,ci_low,ci_high\n");
    CHECK(read_csv(dir / "empty.csv").empty());
    {
        std::ofstream bad(dir / "bad.csv");
        bad << "a,b\n";
    }
    CHECK_THROWS_AS(read_csv(dir / "bad.csv"), ParameterError);
    CHECK_THROWS_AS(read_csv(dir / "missing.csv"), ParameterError);
}

TEST_CASE("trial seeds") {
    CHECK(trial_seed(5, 0) != trial_seed(5, 1));
    CHECK(trial_seed(1, 3) == trial_seed(1, 3));
    // nearby bases do not share trials
    for (int i = 0; i < 64; ++i) {
        for (int j = 0; j < 64; ++j) CHECK(trial_seed(1, i) != trial_seed(7, j));
    }
}

TEST_CASE("run_trial is deterministic and shares the adversary") {
    const ExperimentConfig c = small_config();
    const TrialLog a = run_trial(c, 2), b = run_trial(c, 2);
    REQUIRE(!a.failure);
    CHECK(a.costs == b.costs);
    CHECK(a.costs.rows() == 60);
    CHECK(a.costs.cols() == 4);
    for (std::size_t k = 1; k < a.disturbance_hash.size(); ++k) CHECK(a.disturbance_hash[k] == a.disturbance_hash[0]);
    CHECK(a.disturbance_hash == b.disturbance_hash);
    CHECK(a.controllers == std::vector<std::string>{"zero", "lqg", "grc", "dsc"});

    ExperimentConfig own = c;
    own.shared_adversary = false;
    const TrialLog o = run_trial(own, 2);
    CHECK(o.disturbance_hash[0] != o.disturbance_hash[1]);
    CHECK(run_trial(c, 3).costs != a.costs);
}

TEST_CASE("first-step cost and quiet runs") {
    ExperimentConfig c = small_config();
    c.horizon = 1;
    c.system.x0_std = 1.5;
    const TrialLog log = run_trial(c, 0);
    const SystemModel m = trial_system(c, 0);
    const VectorXd x0 = trial_initial_state(c, 0);
    CHECK(x0.norm() > 0.0);
    CHECK(log.costs(0, 0) == doctest::Approx((m.C * x0).squaredNorm()).epsilon(1e-14));

    ExperimentConfig quiet = small_config();
    quiet.disturbance.kind = GaussianNoise{0.0};
    const TrialLog q = run_trial(quiet, 1);
    REQUIRE(!q.failure);
    CHECK(q.costs.isZero(0.0));
}

TEST_CASE("random B and C are rescaled") {
    ExperimentConfig c = small_config();
    c.system.b_norm = 3.0;
    c.system.c_norm = 2.0;
    const SystemModel m = trial_system(c, 0);
    CHECK(spectral_norm(m.B) == doctest::Approx(3.0).epsilon(1e-12));
    CHECK(spectral_norm(m.C) == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(m.kappa_B == doctest::Approx(3.0).epsilon(1e-12));
    CHECK(spectral_radius(m.A) == doctest::Approx(0.7).epsilon(1e-8));
}

TEST_CASE("diverging controller is reported and excluded") {
    ExperimentConfig c = small_config();
    c.horizon = 3000;
    c.trials = 2;
    ControllerSpec bad;
    bad.type = "ldc";
    bad.label = "unstable";
    bad.ldc_A = 1.5 * MatrixXd::Identity(2, 2);
    bad.ldc_B = MatrixXd::Identity(2, 2);
    bad.ldc_C = MatrixXd::Identity(2, 2);
    c.controllers = {c.controllers[0], bad};
    const TrialLog log = run_trial(c, 0);
    REQUIRE(log.failure);
    CHECK(log.failure->controller == "unstable");
    const ExperimentResult r = run_experiment(c, 2);
    CHECK(r.aggregate.trials == 0);
    CHECK(r.failures.size() == 2);
    CHECK(r.failed_trials == std::vector<int>{0, 1});
}

TEST_CASE("thread count does not change results") {
    const ExperimentConfig c = small_config();
    const ExperimentResult one = run_experiment(c, 1);
    const ExperimentResult many = run_experiment(c, 3);
    CHECK(one.aggregate.mean == many.aggregate.mean);
    CHECK(one.aggregate.half_width == many.aggregate.half_width);
    CHECK(one.aggregate.trials == 4);
}

TEST_CASE("config validation") {
    ExperimentConfig c = small_config();
    c.horizon = 0;
    CHECK_THROWS_AS(c.validate(), ParameterError);
    c = small_config();
    c.controllers.clear();
    CHECK_THROWS_AS(c.validate(), ParameterError);
    c = small_config();
    c.controllers[0].type = "pid";
    CHECK_THROWS_AS(c.validate(), ParameterError);
    c = small_config();
    c.window_fraction = 0.0;
    CHECK_THROWS_AS(c.validate(), ParameterError);
    c = small_config();
    c.system.x0_std = -1.0;
    CHECK_THROWS_AS(c.validate(), ParameterError);
}

TEST_CASE("noiseless runs stay bounded and a frozen DSC matches the zero policy") {
    ExperimentConfig c = small_config();
    c.horizon = 200;
    c.disturbance.kind = GaussianNoise{0.0};
    c.system.x0_std = 1.0;
    ControllerSpec frozen = c.controllers[3];
    frozen.label = "frozen";
    frozen.dsc.eta = 0.0;
    c.controllers.push_back(frozen);
    for (int trial = 0; trial < 3; ++trial) {
        const TrialLog log = run_trial(c, trial);
        REQUIRE(!log.failure);
        const long w = 20;
        for (Eigen::Index k = 0; k < log.costs.cols(); ++k) {
            const double first = log.costs.col(k).head(w).mean();
            CHECK(log.costs.col(k).sum() <= first * c.horizon);
        }
        CHECK(log.costs.col(4) == log.costs.col(0));
    }
}

TEST_CASE("Gaussian disturbances: LQG is no worse than DSC") {
    ExperimentConfig c;
    for (const auto& e : load_config(std::filesystem::path(DSC_CONFIG_DIR) / "benchmark.json")) {
        if (e.name == "gaussian_linear") c = e;
    }
    REQUIRE(c.name == "gaussian_linear");
    c.trials = 20;
    const ExperimentResult r = run_experiment(c);
    REQUIRE(r.failures.empty());
    const Eigen::Index last = r.aggregate.mean.cols() - 1;
    CHECK(r.aggregate.controllers[0] == "LQG");
    CHECK(r.aggregate.controllers[2] == "DSC");
    CHECK(r.aggregate.mean(0, last) <= r.aggregate.mean(2, last));
}
