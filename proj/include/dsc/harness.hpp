#pragma once

#include "dsc/baselines.hpp"
#include "dsc/controller.hpp"
#include "dsc/double_spectral.hpp"
#include "dsc/lds.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace dsc {

enum class Transition { Linear, Relu };

struct SystemSpec {
    int d = 10;
    int n = 2;
    int p = 3;
    double spectral_radius = 0.8;
    // Rescale the random B, C to these spectral norms (0 keeps the raw draw).
    double b_norm = 0.0;
    double c_norm = 0.0;
    // x_0 ~ N(0, x0_std^2 I), drawn per trial.
    double x0_std = 0.0;
    // Explicit matrices replace the random draw when all three are set.
    std::optional<Eigen::MatrixXd> A;
    std::optional<Eigen::MatrixXd> B;
    std::optional<Eigen::MatrixXd> C;
};

struct DisturbanceSpec {
    DisturbanceKind kind = GaussianNoise{1.0};
    double bound = 0.0;  // 0: 3 sqrt(d) std for Gaussian, sqrt(d) amplitude otherwise
};

struct CostSpec {
    std::optional<Eigen::MatrixXd> Q;
    std::optional<Eigen::MatrixXd> R;
    double q_scale = 1.0;  // Q = q_scale I_p when Q is unset
    double r_scale = 1.0;
};

struct ControllerSpec {
    std::string type;   // dsc | grc | lqg | zero | ldc
    std::string label;  // column name in outputs
    DscOptions dsc;
    GrcOptions grc;
    LqgOptions lqg;
    bool lqg_noise_from_disturbance = true;
    std::optional<Eigen::MatrixXd> ldc_A;
    std::optional<Eigen::MatrixXd> ldc_B;
    std::optional<Eigen::MatrixXd> ldc_C;
};

struct ExperimentConfig {
    std::string name = "experiment";
    long horizon = 1000;
    int trials = 100;
    std::uint64_t seed = 0;
    SystemSpec system;
    Transition transition = Transition::Linear;
    DisturbanceSpec disturbance;
    CostSpec cost;
    std::vector<ControllerSpec> controllers;
    double window_fraction = 0.10;
    bool shared_adversary = true;
    bool naive_conv = false;

    void validate() const;
};

// Per-trial seed: splitmix64(splitmix64(base) ^ trial_index). Hashing the
// base first keeps nearby base seeds from sharing trials.
std::uint64_t trial_seed(std::uint64_t base, int trial_index);

// Builds the trial's system, cost and disturbance bound exactly as
// run_trial does.
SystemModel trial_system(const ExperimentConfig& config, int trial_index);
Eigen::VectorXd trial_initial_state(const ExperimentConfig& config, int trial_index);
CostFunction make_cost(const ExperimentConfig& config);
double disturbance_bound(const ExperimentConfig& config);
std::unique_ptr<Controller> make_controller(const ControllerSpec& spec, const ExperimentConfig& config,
                                            const SystemModel& model, const CostFunction& cost);

struct TrialFailure {
    std::string controller;
    long t = 0;
    std::string message;
};

struct TrialLog {
    int trial = 0;
    std::uint64_t seed = 0;
    std::vector<std::string> controllers;
    Eigen::MatrixXd costs;                      // horizon x controllers
    std::vector<std::uint64_t> disturbance_hash;  // FNV-1a of the w_t bytes each controller consumed
    std::optional<TrialFailure> failure;
};

TrialLog run_trial(const ExperimentConfig& config, int trial_index);

// output[t] = mean of costs[max(0, t-w+1) .. t], w = max(1, floor(fraction T)).
std::vector<double> sliding_window(const std::vector<double>& costs, double fraction);

struct AggregateResult {
    std::vector<std::string> controllers;
    Eigen::MatrixXd mean;        // controllers x horizon
    Eigen::MatrixXd half_width;  // 1.96 * sample stddev / sqrt(trials); zero for one trial
    int trials = 0;
};

// Sliding-window curves averaged over the successful trials, in trial order.
AggregateResult aggregate(const std::vector<TrialLog>& logs, double fraction);

// Header `t,controller,mean,ci_low,ci_high`, %.17g decimals, LF endings.
void write_csv(const AggregateResult& result, const std::filesystem::path& path);

struct CsvRow {
    long t = 0;
    std::string controller;
    double mean = 0.0;
    double ci_low = 0.0;
    double ci_high = 0.0;
};
std::vector<CsvRow> read_csv(const std::filesystem::path& path);

struct ExperimentResult {
    ExperimentConfig config;
    AggregateResult aggregate;
    std::vector<TrialFailure> failures;
    std::vector<int> failed_trials;
};

// Runs every trial on a pool of `threads` workers (0: hardware concurrency).
ExperimentResult run_experiment(const ExperimentConfig& config, int threads = 0);

// ---------------------------------------------------------------------------
// Configuration files

// A config document holds either one experiment, or shared "defaults" plus an
// "experiments" array whose entries are merged over the defaults.
std::vector<ExperimentConfig> load_config(const std::filesystem::path& path);
std::vector<ExperimentConfig> parse_config(const std::string& json_text);

struct RunOverrides {
    std::optional<int> trials;
    std::optional<std::uint64_t> seed;
    bool naive_conv = false;
    int threads = 0;
};

// Runs each experiment, writes <out>/<name>.csv and <out>/manifest.json.
std::vector<ExperimentResult> run_benchmark(std::vector<ExperimentConfig> configs, const std::filesystem::path& out,
                                            const RunOverrides& overrides);

std::string config_to_json(const ExperimentConfig& config);

}  // namespace dsc
