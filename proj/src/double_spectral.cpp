#include "dsc/double_spectral.hpp"

#include "dsc/errors.hpp"

#include <climits>
#include <cmath>
#include <string>

namespace dsc {

using Eigen::MatrixXd;
using Eigen::VectorXd;

DscParams DscParams::create(int n, int p, int h, int h_tilde, int m, int m_tilde, double gamma, double eta) {
    detail::require(n >= 1 && p >= 1, "DscParams: n and p must be positive");
    detail::require(m >= 0 && m_tilde >= 0, "DscParams: memories must be nonnegative");
    detail::require(h >= 0 && h + 1 <= m + 1, "DscParams: need 0 <= h <= m");
    detail::require(h_tilde >= 1 && h_tilde <= m_tilde + 1, "DscParams: need 1 <= h~ <= m~ + 1");
    detail::require(eta >= 0.0, "DscParams: step size must be nonnegative");
    DscParams params;
    params.h = h;
    params.h_tilde = h_tilde;
    params.m = m;
    params.m_tilde = m_tilde;
    params.lifting = make_basis(m + 1, h + 1, gamma);
    params.learning = make_basis(m_tilde + 1, h_tilde, gamma);
    params.M = ParameterTensor::zeros(h_tilde + 1, n, (h + 2) * p);
    params.eta = eta;
    return params;
}

VectorXd lift(const MatrixXd& window, const SpectralBasis& lifting) {
    detail::require(window.cols() == lifting.window,
                    "lift: window has " + std::to_string(window.cols()) + " columns, lifting bank expects " +
                        std::to_string(lifting.window));
    const Eigen::Index p = window.rows();
    VectorXd out(p * (lifting.count + 1));
    out.head(p) = window.col(0);
    for (int l = 0; l < lifting.count; ++l) {
        out.segment(p * (l + 1), p) = lifting.weight(l) * (window * lifting.filters.col(l));
    }
    return out;
}

VectorXd dsc_features(const MatrixXd& lifted_window, const SpectralBasis& learning) {
    detail::require(lifted_window.cols() == learning.window,
                    "dsc_features: window has " + std::to_string(lifted_window.cols()) +
                        " columns, learning bank expects " + std::to_string(learning.window));
    const Eigen::Index f = lifted_window.rows();
    VectorXd out(f * (learning.count + 1));
    out.head(f) = lifted_window.col(0);
    for (int i = 0; i < learning.count; ++i) {
        out.segment(f * (i + 1), f) = learning.weight(i) * (lifted_window * learning.filters.col(i));
    }
    return out;
}

VectorXd control(const DscParams& params, const MatrixXd& lifted_window) {
    detail::require(lifted_window.rows() == params.lifted_dim(),
                    "control: lifted window has " + std::to_string(lifted_window.rows()) + " rows, expected " +
                        std::to_string(params.lifted_dim()));
    return params.M.data * dsc_features(lifted_window, params.learning);
}

namespace {

MatrixXd trace_window(std::span<const VectorXd> y_nat, long t, int length, Eigen::Index p) {
    MatrixXd out = MatrixXd::Zero(p, length);
    for (int k = 0; k < length; ++k) {
        const long s = t - k;
        if (s >= 0 && s < static_cast<long>(y_nat.size())) out.col(k) = y_nat[s];
    }
    return out;
}

Eigen::Index trace_dim(const DscParams& params) {
    return params.lifted_dim() / (params.h + 2);
}

}  // namespace

MatrixXd lifted_window(const DscParams& params, std::span<const VectorXd> y_nat, long t) {
    const Eigen::Index p = trace_dim(params);
    MatrixXd out(params.lifted_dim(), params.m_tilde + 1);
    for (int r = 0; r <= params.m_tilde; ++r) {
        out.col(r) = lift(trace_window(y_nat, t - r, params.m + 1, p), params.lifting);
    }
    return out;
}

VectorXd dsc_features_at(const DscParams& params, std::span<const VectorXd> y_nat, long t) {
    return dsc_features(lifted_window(params, y_nat, t), params.learning);
}

Counterfactual counterfactual_outputs(const DscParams& params, std::span<const VectorXd> y_nat, long t,
                                      const SystemModel& model, int truncation) {
    detail::require(truncation >= 1, "counterfactual_outputs: truncation must be >= 1");
    detail::require(t >= 0 && t < static_cast<long>(y_nat.size()), "counterfactual_outputs: t outside trace");
    detail::require(model.p() == trace_dim(params) && model.n() == params.M.rows,
                    "counterfactual_outputs: model dimensions do not match parameters");
    const auto markov = markov_parameters(model, truncation);
    Counterfactual cf;
    cf.u = params.M.data * dsc_features_at(params, y_nat, t);
    cf.y = y_nat[t];
    for (int q = 1; q <= truncation && t - q >= 0; ++q) {
        cf.y += markov[q - 1] * (params.M.data * dsc_features_at(params, y_nat, t - q));
    }
    return cf;
}

ParameterTensor loss_gradient(const DscParams& params, std::span<const VectorXd> y_nat, long t,
                              const SystemModel& model, const CostFunction& cost, int truncation) {
    const Counterfactual cf = counterfactual_outputs(params, y_nat, t, model, truncation);
    const CostEval e = cost(cf.y, cf.u);
    if (!e.grad_y.allFinite() || !e.grad_u.allFinite()) {
        throw NumericalError("loss_gradient: non-finite cost gradient at t = " + std::to_string(t));
    }
    const auto markov = markov_parameters(model, truncation);
    ParameterTensor grad = ParameterTensor::zeros(params.M.slices, params.M.rows, params.M.cols);
    grad.data = e.grad_u * dsc_features_at(params, y_nat, t).transpose();
    for (int q = 1; q <= truncation && t - q >= 0; ++q) {
        grad.data += (markov[q - 1].transpose() * e.grad_y) * dsc_features_at(params, y_nat, t - q).transpose();
    }
    return grad;
}

ConstraintSet constraint_set(const SystemModel& model, int h, int h_tilde) {
    const double g = model.gamma;
    const double lg = std::log(2.0 / g);
    ConstraintSet cs;
    cs.R = 4096.0 * std::pow(model.kappa, 24) * model.kappa_B * std::pow(model.kappa_C, 2) * model.W *
           std::pow(h, 4) / std::pow(g, 4) * std::sqrt(lg);
    cs.R_M = 128.0 * std::pow(model.kappa, 16) * model.kappa_B * model.kappa_C *
             std::sqrt(std::pow(h, 5) * h_tilde) / std::pow(g, 2.5) * std::pow(lg, 0.25);
    return cs;
}

int default_truncation(const SystemModel& model, long horizon) {
    detail::require(horizon >= 1, "default_truncation: horizon must be positive");
    const double v = std::ceil(std::log(model.kappa * model.kappa * static_cast<double>(horizon)) / model.gamma);
    return std::max(1, static_cast<int>(v));
}

namespace {

int checked_ceil(double value, const char* name) {
    if (!std::isfinite(value) || value > static_cast<double>(INT_MAX)) {
        throw ParameterError(std::string("schedule_params: ") + name +
                             " overflows; use a smaller horizon or a larger gamma");
    }
    const double c = std::ceil(value);
    if (c < 1.0) {
        throw ParameterError(std::string("schedule_params: ") + name + " evaluates below 1 (" + std::to_string(c) +
                             "); the horizon is too short for these constants");
    }
    return static_cast<int>(c);
}

}  // namespace

Schedule schedule_params(const ScheduleInputs& in) {
    detail::require(in.T >= 2, "schedule_params: horizon must be at least 2");
    detail::require(in.gamma > 0.0 && in.gamma <= 2.0 / 3.0, "schedule_params: gamma must lie in (0, 2/3]");
    detail::require(in.kappa >= 1.0 && in.kappa_B >= 1.0 && in.kappa_C >= 1.0 && in.W >= 1.0 && in.G >= 1.0 &&
                        in.d >= 1 && in.C0 > 0.0,
                    "schedule_params: constants must be >= 1");

    const double T = static_cast<double>(in.T);
    const double g = in.gamma;
    const double logT = std::log(T);
    const double lg = std::log(2.0 / g);
    const double k = in.kappa, kb = in.kappa_B, kc = in.kappa_C, W = in.W, G = in.G;
    const double d = in.d;

    const double C1 = in.C0 * G * std::pow(k, 13) * kb * std::pow(kc, 4) * W * W;
    const double C2 = in.C0 * G * std::pow(k, 13) * kb * kb * std::pow(kc, 5) * W * W * d;
    const double C3 = in.C0 * G * std::pow(k, 56) * std::pow(kb, 3) * std::pow(kc, 5) * W * W;
    const double C4 = C3 * d;
    const double C5 = 1024.0 * G * std::pow(k, 12) * kb * std::pow(kc, 3) * W * W;

    Schedule s;
    s.m = checked_ceil(std::log(C1 * std::pow(T, 1.5) / std::pow(g, 3)) / g, "m");
    s.h = checked_ceil(
        2.0 * logT *
            std::log(C2 * std::sqrt(static_cast<double>(s.m)) / (g * g) * std::pow(T, 1.5) * logT * std::pow(lg, 0.25)),
        "h");
    s.m_tilde = checked_ceil(
        std::log(C3 * std::pow(s.h, 9.5) / std::pow(g, 12) * std::sqrt(T) * std::pow(lg, 1.25)) / g, "m_tilde");
    s.h_tilde = checked_ceil(2.0 * logT *
                                 std::log(C4 * std::pow(s.h, 10.5) * std::sqrt(static_cast<double>(s.m_tilde)) /
                                          std::pow(g, 11.5) * std::sqrt(T) * logT * std::pow(lg, 1.5)),
                             "h_tilde");
    s.eta = (1.0 / C5) * std::sqrt(std::pow(g, 7) / (std::pow(s.h, 5) * s.h_tilde * static_cast<double>(s.m) *
                                                      static_cast<double>(s.m_tilde)));

    SystemModel bounds;
    bounds.kappa = k;
    bounds.kappa_B = kb;
    bounds.kappa_C = kc;
    bounds.W = W;
    bounds.gamma = g;
    const ConstraintSet cs = constraint_set(bounds, s.h, s.h_tilde);
    s.R = cs.R;
    s.R_M = cs.R_M;
    return s;
}

// ---------------------------------------------------------------------------

namespace {

DscParams make_params(const SystemModel& model, const DscOptions& opts) {
    const double gamma = opts.filter_gamma > 0.0 ? opts.filter_gamma : model.gamma;
    return DscParams::create(model.n(), model.p(), opts.h, opts.h_tilde, opts.m, opts.m_tilde, gamma, opts.eta);
}

ConstraintSet make_constraints(const SystemModel& model, const DscOptions& opts) {
    ConstraintSet cs = constraint_set(model, opts.h, opts.h_tilde);
    if (opts.radius > 0.0) cs.R_M = opts.radius;
    return cs;
}

int make_truncation(const SystemModel& model, const DscOptions& opts) {
    return opts.truncation > 0 ? opts.truncation : default_truncation(model, opts.horizon);
}

}  // namespace

DoubleSpectralController::DoubleSpectralController(SystemModel model, CostFunction cost, const DscOptions& opts)
    : model_(std::move(model)),
      cost_(std::move(cost)),
      params_(make_params(model_, opts)),
      nature_(model_.d(), model_.p(), opts.m + opts.m_tilde + 2),
      lift_conv_(model_.p(), params_.lifting.filters, opts.conv),
      learn_conv_(params_.lifted_dim(), params_.learning.filters, opts.conv),
      learner_(params_.M, markov_parameters(model_, make_truncation(model_, opts)), opts.eta,
               make_constraints(model_, opts)),
      u_prev_(Eigen::VectorXd::Zero(model_.n())) {}

VectorXd DoubleSpectralController::step(const VectorXd& y) {
    y_nat_ = nature_.update(model_, u_prev_, y, t_);

    const Eigen::Index p = model_.p();
    lift_conv_.push(y_nat_);
    lifted_.resize(params_.lifted_dim());
    lifted_.head(p) = y_nat_;
    for (int l = 0; l <= params_.h; ++l) {
        lifted_.segment(p * (l + 1), p) = params_.lifting.weight(l) * lift_conv_.query(l);
    }

    const Eigen::Index f = params_.lifted_dim();
    learn_conv_.push(lifted_);
    VectorXd features(params_.feature_dim());
    features.head(f) = lifted_;
    for (int i = 0; i < params_.h_tilde; ++i) {
        features.segment(f * (i + 1), f) = params_.learning.weight(i) * learn_conv_.query(i);
    }

    VectorXd u = learner_.act(features);
    if (!u.allFinite()) throw NumericalError("DSC: non-finite control at t = " + std::to_string(t_));
    learner_.update(y_nat_, cost_);
    params_.M = learner_.params();
    u_prev_ = u;
    ++t_;
    return u;
}

}  // namespace dsc
