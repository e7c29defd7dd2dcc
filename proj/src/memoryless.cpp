#include "dsc/memoryless.hpp"

#include "dsc/errors.hpp"

#include <string>

namespace dsc {

using Eigen::MatrixXd;
using Eigen::VectorXd;

ParameterTensor ParameterTensor::zeros(int slices, int rows, int cols) {
    detail::require(slices >= 1 && rows >= 1 && cols >= 1, "ParameterTensor: dimensions must be positive");
    return {slices, rows, cols, MatrixXd::Zero(rows, static_cast<Eigen::Index>(slices) * cols)};
}

ParameterTensor project(const ParameterTensor& M, const ConstraintSet& cs) {
    const double norm = M.norm();
    if (norm <= cs.R_M) return M;
    ParameterTensor out = M;
    out.data *= cs.R_M / norm;
    return out;
}

ParameterTensor ogd_step(const ParameterTensor& M, const ParameterTensor& grad, double eta, const ConstraintSet& cs) {
    detail::require(M.same_shape(grad), "ogd_step: gradient shape does not match parameters");
    detail::require(eta >= 0.0, "ogd_step: step size must be nonnegative");
    ParameterTensor next = M;
    next.data -= eta * grad.data;
    return project(next, cs);
}

MemorylessLearner::MemorylessLearner(ParameterTensor init, std::vector<MatrixXd> markov, double eta,
                                     ConstraintSet cs)
    : M_(std::move(init)), markov_(std::move(markov)), eta_(eta), cs_(cs) {
    detail::require(eta_ >= 0.0, "MemorylessLearner: step size must be nonnegative");
    detail::require(cs_.R_M > 0.0, "MemorylessLearner: R_M must be positive");
    for (const auto& g : markov_) {
        detail::require(g.cols() == M_.rows, "MemorylessLearner: Markov parameter has wrong column count");
    }
    zero_ = VectorXd::Zero(static_cast<Eigen::Index>(M_.slices) * M_.cols);
    ring_.assign(markov_.size() + 1, zero_);
    M_ = project(M_, cs_);
}

void MemorylessLearner::set_params(ParameterTensor M) {
    detail::require(M.same_shape(M_), "MemorylessLearner::set_params: shape mismatch");
    M_ = project(M, cs_);
}

const VectorXd& MemorylessLearner::features_at(int lag) const {
    if (lag >= rounds_) return zero_;
    return ring_[(rounds_ - 1 - lag) % static_cast<long>(ring_.size())];
}

VectorXd MemorylessLearner::act(const VectorXd& features) {
    detail::require(features.size() == zero_.size(), "MemorylessLearner::act: expected " +
                                                         std::to_string(zero_.size()) + " features, got " +
                                                         std::to_string(features.size()));
    ring_[rounds_ % static_cast<long>(ring_.size())] = features;
    ++rounds_;
    return M_.data * features;
}

Counterfactual MemorylessLearner::counterfactual(const VectorXd& y_nat) const {
    detail::require(rounds_ > 0, "MemorylessLearner::counterfactual: no round recorded");
    Counterfactual cf;
    cf.u = M_.data * features_at(0);
    cf.y = y_nat;
    for (std::size_t q = 1; q <= markov_.size(); ++q) {
        const VectorXd& f = features_at(static_cast<int>(q));
        if (&f == &zero_) break;
        cf.y.noalias() += markov_[q - 1] * (M_.data * f);
    }
    return cf;
}

ParameterTensor MemorylessLearner::gradient(const VectorXd& y_nat, const CostFunction& cost) const {
    return gradient_at(counterfactual(y_nat), cost);
}

ParameterTensor MemorylessLearner::gradient_at(const Counterfactual& cf, const CostFunction& cost) const {
    const CostEval e = cost(cf.y, cf.u);
    if (!e.grad_y.allFinite() || !e.grad_u.allFinite()) {
        throw NumericalError("MemorylessLearner::gradient: non-finite cost gradient");
    }
    ParameterTensor grad = ParameterTensor::zeros(M_.slices, M_.rows, M_.cols);
    grad.data.noalias() = e.grad_u * features_at(0).transpose();
    for (std::size_t q = 1; q <= markov_.size(); ++q) {
        const VectorXd& f = features_at(static_cast<int>(q));
        if (&f == &zero_) break;
        grad.data.noalias() += (markov_[q - 1].transpose() * e.grad_y) * f.transpose();
    }
    return grad;
}

void MemorylessLearner::update(const VectorXd& y_nat, const CostFunction& cost) {
    const Counterfactual cf = counterfactual(y_nat);
    if (cf.y.norm() > cs_.R || cf.u.norm() > cs_.R) ++violations_;
    M_ = ogd_step(M_, gradient_at(cf, cost), eta_, cs_);
}

}  // namespace dsc
