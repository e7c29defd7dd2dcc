#include "dsc/harness.hpp"

#include "dsc/errors.hpp"

#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>
#include <thread>

namespace dsc {

using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
    std::uint64_t z = x + 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

void fnv1a(std::uint64_t& hash, const VectorXd& v) {
    const auto* bytes = reinterpret_cast<const unsigned char*>(v.data());
    for (std::size_t i = 0; i < static_cast<std::size_t>(v.size()) * sizeof(double); ++i) {
        hash ^= bytes[i];
        hash *= 0x100000001b3ULL;
    }
}

class ZeroController : public Controller {
public:
    explicit ZeroController(int n) : n_(n) {}
    std::string name() const override { return "Zero"; }
    VectorXd step(const VectorXd&) override { return VectorXd::Zero(n_); }

private:
    int n_;
};

double lqg_noise_std(const ExperimentConfig& config) {
    if (const auto* g = std::get_if<GaussianNoise>(&config.disturbance.kind)) return g->std;
    if (const auto* s = std::get_if<Sinusoid>(&config.disturbance.kind)) return s->amplitude / std::sqrt(2.0);
    return 1.0;
}

}  // namespace

void ExperimentConfig::validate() const {
    detail::require(horizon >= 1, "config '" + name + "': horizon must be >= 1");
    detail::require(trials >= 1, "config '" + name + "': trials must be >= 1");
    detail::require(window_fraction > 0.0 && window_fraction <= 1.0,
                    "config '" + name + "': window_fraction must lie in (0, 1]");
    detail::require(!controllers.empty(), "config '" + name + "': no controllers");
    detail::require(system.b_norm >= 0.0 && system.c_norm >= 0.0 && system.x0_std >= 0.0,
                    "config '" + name + "': b_norm, c_norm and x0_std must be nonnegative");
    for (const auto& c : controllers) {
        detail::require(c.type == "dsc" || c.type == "grc" || c.type == "lqg" || c.type == "zero" || c.type == "ldc",
                        "config '" + name + "': unknown controller type '" + c.type + "'");
    }
}

std::uint64_t trial_seed(std::uint64_t base, int trial_index) {
    return splitmix64(splitmix64(base) ^ static_cast<std::uint64_t>(trial_index));
}

double disturbance_bound(const ExperimentConfig& config) {
    if (config.disturbance.bound > 0.0) return config.disturbance.bound;
    const double root_d = std::sqrt(static_cast<double>(config.system.d));
    if (const auto* g = std::get_if<GaussianNoise>(&config.disturbance.kind)) {
        return std::max(3.0 * root_d * g->std, 1e-12);
    }
    if (const auto* s = std::get_if<Sinusoid>(&config.disturbance.kind)) return std::max(root_d * s->amplitude, 1e-12);
    return root_d;
}

CostFunction make_cost(const ExperimentConfig& config) {
    const int p = config.system.p, n = config.system.n;
    MatrixXd Q = config.cost.Q ? *config.cost.Q : MatrixXd(config.cost.q_scale * MatrixXd::Identity(p, p));
    MatrixXd R = config.cost.R ? *config.cost.R : MatrixXd(config.cost.r_scale * MatrixXd::Identity(n, n));
    return CostFunction::quadratic(std::move(Q), std::move(R));
}

SystemModel trial_system(const ExperimentConfig& config, int trial_index) {
    const std::uint64_t seed = trial_seed(config.seed, trial_index);
    SystemModel model;
    const auto& s = config.system;
    if (s.A && s.B && s.C) {
        model.A = *s.A;
        model.B = *s.B;
        model.C = *s.C;
        detail::require(model.d() == s.d && model.n() == s.n && model.p() == s.p,
                        "config '" + config.name + "': explicit matrices disagree with d, n, p");
        fill_bounds(model);
    } else {
        std::mt19937_64 rng(splitmix64(seed + 1));
        model = random_system(s.d, s.n, s.p, s.spectral_radius, rng);
        if (s.b_norm > 0.0) {
            model.B *= s.b_norm / spectral_norm(model.B);
            model.kappa_B = std::max(1.0, spectral_norm(model.B));
        }
        if (s.c_norm > 0.0) {
            model.C *= s.c_norm / spectral_norm(model.C);
            model.kappa_C = std::max(1.0, spectral_norm(model.C));
        }
    }
    const CostFunction cost = make_cost(config);
    model.W = std::max(1.0, disturbance_bound(config));
    const double qn = cost.Q().size() ? spectral_norm(cost.Q()) : 0.0;
    const double rn = cost.R().size() ? spectral_norm(cost.R()) : 0.0;
    model.G = std::max(1.0, 2.0 * std::max(qn, rn));
    model.validate();
    return model;
}

VectorXd trial_initial_state(const ExperimentConfig& config, int trial_index) {
    VectorXd x0 = VectorXd::Zero(config.system.d);
    if (config.system.x0_std > 0.0) {
        std::mt19937_64 rng(splitmix64(trial_seed(config.seed, trial_index) + 4));
        std::normal_distribution<double> normal(0.0, config.system.x0_std);
        for (Eigen::Index i = 0; i < x0.size(); ++i) x0(i) = normal(rng);
    }
    return x0;
}

std::unique_ptr<Controller> make_controller(const ControllerSpec& spec, const ExperimentConfig& config,
                                            const SystemModel& model, const CostFunction& cost) {
    if (spec.type == "dsc") {
        DscOptions opts = spec.dsc;
        opts.horizon = config.horizon;
        if (config.naive_conv) opts.conv = ConvMode::Naive;
        return std::make_unique<DoubleSpectralController>(model, cost, opts);
    }
    if (spec.type == "grc") {
        GrcOptions opts = spec.grc;
        opts.horizon = config.horizon;
        return std::make_unique<GrcController>(model, cost, opts);
    }
    if (spec.type == "lqg") {
        LqgOptions opts = spec.lqg;
        if (spec.lqg_noise_from_disturbance) opts.noise_std = std::max(lqg_noise_std(config), 1e-6);
        return std::make_unique<LqgController>(model, cost, opts);
    }
    if (spec.type == "zero") return std::make_unique<ZeroController>(model.n());
    if (spec.type == "ldc") {
        detail::require(spec.ldc_A && spec.ldc_B && spec.ldc_C, "ldc controller needs A, B and C");
        return std::make_unique<LdcController>(LdcPolicy(*spec.ldc_A, *spec.ldc_B, *spec.ldc_C));
    }
    throw ParameterError("unknown controller type '" + spec.type + "'");
}

TrialLog run_trial(const ExperimentConfig& config, int trial_index) {
    config.validate();
    TrialLog log;
    log.trial = trial_index;
    log.seed = trial_seed(config.seed, trial_index);
    const SystemModel model = trial_system(config, trial_index);
    const CostFunction cost = make_cost(config);
    const double bound = model.W;
    const int T = static_cast<int>(config.horizon);
    const int K = static_cast<int>(config.controllers.size());

    log.costs = MatrixXd::Zero(T, K);
    log.disturbance_hash.assign(K, 0xcbf29ce484222325ULL);
    for (const auto& spec : config.controllers) log.controllers.push_back(spec.label.empty() ? spec.type : spec.label);

    const VectorXd x0 = trial_initial_state(config, trial_index);
    MatrixXd shared;
    if (config.shared_adversary) {
        shared = DisturbanceSource(config.disturbance.kind, model.d(), bound, splitmix64(log.seed + 2)).generate(T);
    }

    for (int k = 0; k < K; ++k) {
        const MatrixXd disturbances =
            config.shared_adversary
                ? shared
                : DisturbanceSource(config.disturbance.kind, model.d(), bound, splitmix64(log.seed + 3 + k))
                      .generate(T);
        auto controller = make_controller(config.controllers[k], config, model, cost);
        SimState state{x0, 0};
        long t = 0;
        try {
            for (t = 0; t < T; ++t) {
                const VectorXd y = model.C * state.x;
                const VectorXd u = controller->step(y);
                const VectorXd w = disturbances.col(t);
                fnv1a(log.disturbance_hash[k], w);
                const double c = cost(y, u).value;
                if (!std::isfinite(c) || !u.allFinite()) throw NumericalError("non-finite cost or control");
                log.costs(t, k) = c;
                StepResult next = config.transition == Transition::Relu ? step_relu(state, model, u, w)
                                                                        : step(state, model, u, w);
                if (!next.next.x.allFinite()) throw NumericalError("state diverged");
                state = std::move(next.next);
            }
        } catch (const NumericalError& e) {
            log.failure = TrialFailure{log.controllers[k], t, e.what()};
            return log;
        }
    }
    return log;
}

std::vector<double> sliding_window(const std::vector<double>& costs, double fraction) {
    detail::require(!costs.empty(), "sliding_window: empty series");
    detail::require(fraction > 0.0 && fraction <= 1.0, "sliding_window: fraction must lie in (0, 1]");
    const long T = static_cast<long>(costs.size());
    const long w = std::max(1L, static_cast<long>(std::floor(fraction * static_cast<double>(T))));
    std::vector<double> out(T);
    for (long t = 0; t < T; ++t) {
        const long lo = std::max(0L, t - w + 1);
        double sum = 0.0;
        for (long i = lo; i <= t; ++i) sum += costs[i];
        out[t] = sum / static_cast<double>(t - lo + 1);
    }
    return out;
}

AggregateResult aggregate(const std::vector<TrialLog>& logs, double fraction) {
    AggregateResult result;
    std::vector<const TrialLog*> ok;
    for (const auto& log : logs) {
        if (!log.failure) ok.push_back(&log);
    }
    if (ok.empty()) return result;
    const Eigen::Index T = ok.front()->costs.rows();
    const Eigen::Index K = ok.front()->costs.cols();
    for (const auto* log : ok) {
        detail::require(log->costs.rows() == T && log->costs.cols() == K, "aggregate: mismatched horizons");
    }
    result.controllers = ok.front()->controllers;
    result.trials = static_cast<int>(ok.size());
    result.mean = MatrixXd::Zero(K, T);
    result.half_width = MatrixXd::Zero(K, T);

    const double n = static_cast<double>(ok.size());
    for (Eigen::Index k = 0; k < K; ++k) {
        MatrixXd curves(ok.size(), T);
        for (std::size_t i = 0; i < ok.size(); ++i) {
            std::vector<double> series(T);
            for (Eigen::Index t = 0; t < T; ++t) series[t] = ok[i]->costs(t, k);
            const auto smooth = sliding_window(series, fraction);
            for (Eigen::Index t = 0; t < T; ++t) curves(i, t) = smooth[t];
        }
        for (Eigen::Index t = 0; t < T; ++t) {
            double sum = 0.0;
            for (std::size_t i = 0; i < ok.size(); ++i) sum += curves(i, t);
            const double mean = sum / n;
            result.mean(k, t) = mean;
            if (ok.size() >= 2) {
                double ss = 0.0;
                for (std::size_t i = 0; i < ok.size(); ++i) ss += (curves(i, t) - mean) * (curves(i, t) - mean);
                result.half_width(k, t) = 1.96 * std::sqrt(ss / (n - 1.0)) / std::sqrt(n);
            }
        }
    }
    return result;
}

namespace {

std::string format_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

}  // namespace

void write_csv(const AggregateResult& result, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("write_csv: cannot open " + path.string());
    out << "t,controller,mean,ci_low,ci_high\n";
    for (std::size_t k = 0; k < result.controllers.size(); ++k) {
        for (Eigen::Index t = 0; t < result.mean.cols(); ++t) {
            const double m = result.mean(k, t);
            const double h = result.half_width(k, t);
            out << t << ',' << result.controllers[k] << ',' << format_double(m) << ',' << format_double(m - h) << ','
                << format_double(m + h) << '\n';
        }
    }
    if (!out) throw std::runtime_error("write_csv: write failed for " + path.string());
}

std::vector<CsvRow> read_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ParameterError("read_csv: cannot open " + path.string());
    std::string line;
    if (!std::getline(in, line) || line != "t,controller,mean,ci_low,ci_high") {
        throw ParameterError("read_csv: unexpected header in " + path.string());
    }
    std::vector<CsvRow> rows;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string cells[5];
        for (auto& cell : cells) std::getline(ss, cell, ',');
        CsvRow row;
        row.t = std::stol(cells[0]);
        row.controller = cells[1];
        row.mean = std::strtod(cells[2].c_str(), nullptr);
        row.ci_low = std::strtod(cells[3].c_str(), nullptr);
        row.ci_high = std::strtod(cells[4].c_str(), nullptr);
        rows.push_back(std::move(row));
    }
    return rows;
}

ExperimentResult run_experiment(const ExperimentConfig& config, int threads) {
    config.validate();
    const int workers = std::max(1, threads > 0 ? threads : static_cast<int>(std::thread::hardware_concurrency()));
    std::vector<TrialLog> logs(config.trials);
    std::atomic<int> next{0};
    std::vector<std::exception_ptr> errors(workers);
    auto work = [&](int id) {
        try {
            for (int i = next++; i < config.trials; i = next++) logs[i] = run_trial(config, i);
        } catch (...) {
            errors[id] = std::current_exception();
            next = config.trials;
        }
    };
    if (workers == 1) {
        work(0);
    } else {
        std::vector<std::jthread> pool;
        for (int id = 0; id < workers; ++id) pool.emplace_back(work, id);
    }
    for (auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }

    ExperimentResult result;
    result.config = config;
    for (const auto& log : logs) {
        if (log.failure) {
            result.failures.push_back(*log.failure);
            result.failed_trials.push_back(log.trial);
        }
    }
    result.aggregate = aggregate(logs, config.window_fraction);
    return result;
}

}  // namespace dsc
