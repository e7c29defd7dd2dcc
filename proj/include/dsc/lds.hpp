#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <filesystem>
#include <functional>
#include <random>
#include <utility>
#include <variant>
#include <vector>

namespace dsc {

// Partially observed LDS  x' = A x + B u + w,  y = C x, together with the
// bound constants the theory is stated in.
struct SystemModel {
    Eigen::MatrixXd A;  // d x d
    Eigen::MatrixXd B;  // d x n
    Eigen::MatrixXd C;  // p x d
    double kappa = 1.0;
    double kappa_B = 1.0;
    double kappa_C = 1.0;
    double gamma = 2.0 / 3.0;
    double W = 1.0;
    double G = 1.0;

    int d() const { return static_cast<int>(A.rows()); }
    int n() const { return static_cast<int>(B.cols()); }
    int p() const { return static_cast<int>(C.rows()); }

    // Throws ParameterError on inconsistent shapes or non-finite entries.
    void validate() const;
};

// Largest singular value.
double spectral_norm(const Eigen::MatrixXd& m);
// Largest eigenvalue modulus.
double spectral_radius(const Eigen::MatrixXd& m);

// Fills kappa_B, kappa_C from measured norms, gamma = min(2/3, 1 - rho(A)),
// and kappa as the smallest constant with ||A^i|| <= kappa (1-gamma)^i for
// i <= horizon. Requires rho(A) < 1.
void fill_bounds(SystemModel& model, int horizon = 200);

// A = V diag(lambda) V^-1 with real eigenvalues in (0, spectral_radius], the
// largest exactly spectral_radius, and V = U diag(s) Q^T with U, Q random
// orthogonal and s in [1, 2]. B, C have standard normal entries. kappa is
// the condition number of V, gamma = 1 - spectral_radius (capped at 2/3).
SystemModel random_system(int d, int n, int p, double spectral_radius, std::mt19937_64& rng);

// Markov parameters C A^(q-1) B for q = 1..count (element q-1 holds q).
std::vector<Eigen::MatrixXd> markov_parameters(const SystemModel& model, int count);

struct SimState {
    Eigen::VectorXd x;
    long t = 0;

    static SimState zero(int d) { return {Eigen::VectorXd::Zero(d), 0}; }
};

struct StepResult {
    SimState next;
    Eigen::VectorXd y;  // observation of the pre-update state
};

StepResult step(const SimState& state, const SystemModel& model, const Eigen::VectorXd& u,
                const Eigen::VectorXd& w);

// x' = ReLU(A x + B u) + w.
StepResult step_relu(const SimState& state, const SystemModel& model, const Eigen::VectorXd& u,
                     const Eigen::VectorXd& w);

// ---------------------------------------------------------------------------
// Disturbances

struct GaussianNoise {
    double std = 1.0;
};

// Coordinate i: amplitude * sin(2 pi frequency t + phase_i).
struct Sinusoid {
    double amplitude = 1.0;
    double frequency = 0.01;
    std::vector<double> phases;  // empty: equally spaced 2 pi i / d
};

struct Replay {
    std::filesystem::path path;
};

using DisturbanceKind = std::variant<GaussianNoise, Sinusoid, Replay>;

// Emits w_0, w_1, ... with ||w_t|| <= W; samples exceeding the bound are
// rescaled onto the sphere of radius W.
class DisturbanceSource {
public:
    DisturbanceSource(DisturbanceKind kind, int d, double bound, std::uint64_t seed);

    Eigen::VectorXd next();
    // The next `steps` disturbances as columns of a d x steps matrix.
    Eigen::MatrixXd generate(int steps);

    double bound() const { return bound_; }
    const DisturbanceKind& kind() const { return kind_; }

private:
    DisturbanceKind kind_;
    int d_;
    double bound_;
    std::mt19937_64 rng_;
    std::normal_distribution<double> normal_{0.0, 1.0};
    std::vector<double> phases_;
    Eigen::MatrixXd replay_;
    long t_ = 0;
};

// Reads a replay file: one row per step, d comma-separated decimals.
Eigen::MatrixXd read_replay_csv(const std::filesystem::path& path, int d);

// ---------------------------------------------------------------------------
// Costs

struct CostEval {
    double value = 0.0;
    Eigen::VectorXd grad_y;
    Eigen::VectorXd grad_u;
};

// Convex cost c(y, u). Quadratic costs are validated PSD at construction;
// custom costs supply their own value and gradient oracle.
class CostFunction {
public:
    using Oracle = std::function<CostEval(const Eigen::VectorXd&, const Eigen::VectorXd&)>;

    static CostFunction quadratic(Eigen::MatrixXd Q, Eigen::MatrixXd R);
    static CostFunction custom(Oracle oracle);

    CostEval operator()(const Eigen::VectorXd& y, const Eigen::VectorXd& u) const;

    bool is_quadratic() const { return !oracle_; }
    const Eigen::MatrixXd& Q() const { return Q_; }
    const Eigen::MatrixXd& R() const { return R_; }

private:
    Eigen::MatrixXd Q_;
    Eigen::MatrixXd R_;
    Oracle oracle_;
};

// value = y'Qy + u'Ru, gradients 2Qy, 2Ru.
CostEval quadratic_cost(const CostFunction& cost, const Eigen::VectorXd& y, const Eigen::VectorXd& u);

// ---------------------------------------------------------------------------
// Linear dynamical controllers: s' = A_pi s + B_pi y, u = C_pi s.

class LdcPolicy {
public:
    LdcPolicy(Eigen::MatrixXd A_pi, Eigen::MatrixXd B_pi, Eigen::MatrixXd C_pi);

    static LdcPolicy zero(int s, int n, int p);

    // Returns C_pi s_t, then advances s.
    Eigen::VectorXd step(const Eigen::VectorXd& y);

    const Eigen::VectorXd& state() const { return s_; }
    const Eigen::MatrixXd& A() const { return A_; }
    const Eigen::MatrixXd& B() const { return B_; }
    const Eigen::MatrixXd& C() const { return C_; }

    // Checks ||B_pi||, ||C_pi|| <= kappa and that A_pi = H L H^-1 with L real,
    // nonnegative, ||L|| <= 1 - gamma and ||H||, ||H^-1|| <= kappa (H taken
    // as the eigenvector matrix rescaled to unit-norm columns).
    bool diagonalizably_stable(double kappa, double gamma) const;

private:
    Eigen::MatrixXd A_;
    Eigen::MatrixXd B_;
    Eigen::MatrixXd C_;
    Eigen::VectorXd s_;
};

Eigen::VectorXd ldc_step(LdcPolicy& policy, const Eigen::VectorXd& y);

}  // namespace dsc
