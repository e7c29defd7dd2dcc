#include "dsc/baselines.hpp"

#include "dsc/double_spectral.hpp"
#include "dsc/errors.hpp"

#include <string>

namespace dsc {

using Eigen::MatrixXd;
using Eigen::VectorXd;

GrcParams GrcParams::create(int n, int p, int memory, double eta, double radius) {
    detail::require(memory >= 1, "GrcParams: memory must be positive");
    detail::require(eta >= 0.0, "GrcParams: step size must be nonnegative");
    detail::require(radius > 0.0, "GrcParams: radius must be positive");
    return {ParameterTensor::zeros(memory, n, p), memory, eta, radius};
}

VectorXd grc_control(const GrcParams& params, const MatrixXd& window) {
    detail::require(window.rows() == params.taps.cols && window.cols() == params.memory,
                    "grc_control: window must be " + detail::dims(params.taps.cols, params.memory) + ", got " +
                        detail::dims(window.rows(), window.cols()));
    return params.taps.data * window.reshaped();
}

GrcParams grc_step(const GrcParams& params, const ParameterTensor& grad) {
    GrcParams next = params;
    next.taps = ogd_step(params.taps, grad, params.eta, ConstraintSet{0.0, params.radius});
    return next;
}

namespace {

ConstraintSet grc_constraints(const SystemModel& model, const GrcOptions& opts) {
    ConstraintSet cs = constraint_set(model, 1, opts.memory);
    if (opts.radius > 0.0) cs.R_M = opts.radius;
    return cs;
}

}  // namespace

GrcController::GrcController(SystemModel model, CostFunction cost, const GrcOptions& opts)
    : model_(std::move(model)),
      cost_(std::move(cost)),
      memory_(opts.memory),
      nature_(model_.d(), model_.p(), std::max(1, opts.memory)),
      learner_(GrcParams::create(model_.n(), model_.p(), opts.memory, opts.eta, 1.0).taps,
               markov_parameters(model_, opts.truncation > 0 ? opts.truncation
                                                             : default_truncation(model_, opts.horizon)),
               opts.eta, grc_constraints(model_, opts)),
      u_prev_(VectorXd::Zero(model_.n())) {}

VectorXd GrcController::step(const VectorXd& y) {
    const VectorXd y_nat = nature_.update(model_, u_prev_, y, t_);
    const MatrixXd window = nature_.window(t_, memory_);
    VectorXd u = learner_.act(window.reshaped());
    if (!u.allFinite()) throw NumericalError("GRC: non-finite control at t = " + std::to_string(t_));
    learner_.update(y_nat, cost_);
    u_prev_ = u;
    ++t_;
    return u;
}

// ---------------------------------------------------------------------------

MatrixXd riccati_map(const MatrixXd& A, const MatrixXd& B, const MatrixXd& Q, const MatrixXd& R, const MatrixXd& P) {
    const MatrixXd S = R + B.transpose() * P * B;
    Eigen::LDLT<MatrixXd> ldlt(S);
    if (ldlt.info() != Eigen::Success || !ldlt.isPositive()) {
        throw NumericalError("riccati_map: R + B'PB is not positive definite");
    }
    const MatrixXd PB = P * B;
    MatrixXd next = Q + A.transpose() * (P - PB * ldlt.solve(PB.transpose())) * A;
    return 0.5 * (next + next.transpose());
}

DareSolution solve_dare(const MatrixXd& A, const MatrixXd& B, const MatrixXd& Q, const MatrixXd& R, double tol,
                        int max_iter) {
    detail::require(A.rows() == A.cols(), "solve_dare: A must be square");
    detail::require(B.rows() == A.rows(), "solve_dare: B must have as many rows as A");
    detail::require(Q.rows() == A.rows() && Q.cols() == A.rows(), "solve_dare: Q must match A");
    detail::require(R.rows() == B.cols() && R.cols() == B.cols(), "solve_dare: R must be n x n");
    detail::require(tol > 0.0 && max_iter >= 1, "solve_dare: tol and max_iter must be positive");

    DareSolution sol;
    sol.P = 0.5 * (Q + Q.transpose());
    double residual = 0.0;
    for (int it = 1; it <= max_iter; ++it) {
        MatrixXd next = riccati_map(A, B, Q, R, sol.P);
        residual = (next - sol.P).norm();
        sol.P = std::move(next);
        sol.iterations = it;
        if (!sol.P.allFinite()) throw NumericalError("solve_dare: iteration diverged");
        if (residual < tol) break;
    }
    sol.residual = (riccati_map(A, B, Q, R, sol.P) - sol.P).norm();
    if (sol.residual >= tol) {
        throw NumericalError("solve_dare: no convergence after " + std::to_string(sol.iterations) +
                             " iterations, residual " + std::to_string(sol.residual));
    }
    const MatrixXd S = R + B.transpose() * sol.P * B;
    sol.gain = S.ldlt().solve(B.transpose() * sol.P * A);
    return sol;
}

LqgSolution design_lqg(const SystemModel& model, const MatrixXd& Q_y, const MatrixXd& R, const LqgOptions& opts) {
    model.validate();
    detail::require(Q_y.rows() == model.p() && Q_y.cols() == model.p(), "design_lqg: Q_y must be p x p");
    detail::require(R.rows() == model.n() && R.cols() == model.n(), "design_lqg: R must be n x n");
    const int d = model.d();
    const MatrixXd Q_x = model.C.transpose() * Q_y * model.C + opts.state_eps * MatrixXd::Identity(d, d);
    const DareSolution control = solve_dare(model.A, model.B, Q_x, R);

    const MatrixXd W = opts.noise_std * opts.noise_std * MatrixXd::Identity(d, d);
    const MatrixXd V = opts.measurement_eps * MatrixXd::Identity(model.p(), model.p());
    const DareSolution filter = solve_dare(model.A.transpose(), model.C.transpose(), W, V);

    LqgSolution sol;
    sol.P_control = control.P;
    sol.K_gain = control.gain;
    sol.P_filter = filter.P;
    const MatrixXd S = model.C * filter.P * model.C.transpose() + V;
    sol.L_gain = S.ldlt().solve(model.C * filter.P).transpose();
    sol.x_hat = VectorXd::Zero(d);
    return sol;
}

VectorXd lqg_step(LqgSolution& sol, const SystemModel& model, const VectorXd& y) {
    detail::require(y.size() == model.p(), "lqg_step: observation has length " + std::to_string(y.size()) +
                                               ", expected " + std::to_string(model.p()));
    detail::require(sol.x_hat.size() == model.d() && sol.K_gain.rows() == model.n(),
                    "lqg_step: solution does not match the model");
    const VectorXd corrected = sol.x_hat + sol.L_gain * (y - model.C * sol.x_hat);
    VectorXd u = -sol.K_gain * corrected;
    sol.x_hat = model.A * corrected + model.B * u;
    return u;
}

LqgController::LqgController(SystemModel model, const CostFunction& cost, const LqgOptions& opts)
    : model_(std::move(model)) {
    detail::require(cost.is_quadratic(), "LqgController: requires a quadratic cost");
    sol_ = design_lqg(model_, cost.Q(), cost.R(), opts);
}

VectorXd LqgController::step(const VectorXd& y) { return lqg_step(sol_, model_, y); }

}  // namespace dsc
