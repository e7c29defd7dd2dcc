#pragma once

#include "dsc/controller.hpp"
#include "dsc/lds.hpp"
#include "dsc/memoryless.hpp"
#include "dsc/signals.hpp"

#include <Eigen/Dense>

namespace dsc {

// Gradient response controller: u_t = sum_{i=0}^{m_g-1} M[i] y_nat_{t-i}.
struct GrcParams {
    ParameterTensor taps;  // m_g slices of n x p
    int memory = 1;
    double eta = 0.0;
    double radius = 0.0;

    static GrcParams create(int n, int p, int memory, double eta, double radius);
};

// `window` is p x m_g, newest-first.
Eigen::VectorXd grc_control(const GrcParams& params, const Eigen::MatrixXd& window);
GrcParams grc_step(const GrcParams& params, const ParameterTensor& grad);

struct GrcOptions {
    int memory = 10;
    double eta = 1e-3;
    double radius = 0.0;  // 0: R_M formula with h = 1, h~ = memory
    int truncation = 0;   // 0: default_truncation(model, horizon)
    long horizon = 1000;
};

class GrcController : public Controller {
public:
    GrcController(SystemModel model, CostFunction cost, const GrcOptions& opts);

    std::string name() const override { return "GRC"; }
    Eigen::VectorXd step(const Eigen::VectorXd& y) override;

    const MemorylessLearner& learner() const { return learner_; }

private:
    SystemModel model_;
    CostFunction cost_;
    int memory_;
    NatureState nature_;
    MemorylessLearner learner_;
    Eigen::VectorXd u_prev_;
    long t_ = 0;
};

// ---------------------------------------------------------------------------

struct DareSolution {
    Eigen::MatrixXd P;
    Eigen::MatrixXd gain;  // (R + B'PB)^-1 B'PA
    int iterations = 0;
    double residual = 0.0;  // ||f(P) - P||_F
};

// Fixed-point iteration of P = Q + A'(P - PB(R + B'PB)^-1 B'P)A from P = Q.
// Throws NumericalError with the final residual if tol is not reached.
DareSolution solve_dare(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B, const Eigen::MatrixXd& Q,
                        const Eigen::MatrixXd& R, double tol = 1e-10, int max_iter = 100000);

// One application of the Riccati map; used to re-check a returned solution.
Eigen::MatrixXd riccati_map(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B, const Eigen::MatrixXd& Q,
                            const Eigen::MatrixXd& R, const Eigen::MatrixXd& P);

struct LqgSolution {
    Eigen::MatrixXd P_control;
    Eigen::MatrixXd K_gain;    // n x d, u = -K x_hat
    Eigen::MatrixXd P_filter;  // prior error covariance
    Eigen::MatrixXd L_gain;    // d x p
    Eigen::VectorXd x_hat;     // prior estimate of the next state
};

struct LqgOptions {
    double state_eps = 1e-6;        // Q_x = C' Q_y C + eps I
    double noise_std = 1.0;         // process covariance noise_std^2 I
    double measurement_eps = 1e-6;  // measurement covariance eps I
};

LqgSolution design_lqg(const SystemModel& model, const Eigen::MatrixXd& Q_y, const Eigen::MatrixXd& R,
                       const LqgOptions& opts = {});

// Correct the estimate with y, play u = -K x_hat, predict the next state.
Eigen::VectorXd lqg_step(LqgSolution& sol, const SystemModel& model, const Eigen::VectorXd& y);

class LqgController : public Controller {
public:
    LqgController(SystemModel model, const CostFunction& cost, const LqgOptions& opts = {});

    std::string name() const override { return "LQG"; }
    Eigen::VectorXd step(const Eigen::VectorXd& y) override;

    const LqgSolution& solution() const { return sol_; }

private:
    SystemModel model_;
    LqgSolution sol_;
};

// Plays a fixed LDC; used as a comparator policy.
class LdcController : public Controller {
public:
    explicit LdcController(LdcPolicy policy) : policy_(std::move(policy)) {}

    std::string name() const override { return "LDC"; }
    Eigen::VectorXd step(const Eigen::VectorXd& y) override { return policy_.step(y); }

private:
    LdcPolicy policy_;
};

}  // namespace dsc
