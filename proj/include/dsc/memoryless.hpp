#pragma once

#include "dsc/lds.hpp"

#include <Eigen/Dense>

#include <vector>

namespace dsc {

// Stack of `slices` matrices of shape rows x cols stored side by side:
// slice i occupies columns [i * cols, (i + 1) * cols). Multiplying `data`
// by the stacked feature vector [f_0; f_1; ...] gives sum_i M_i f_i.
struct ParameterTensor {
    int slices = 0;
    int rows = 0;
    int cols = 0;
    Eigen::MatrixXd data;

    static ParameterTensor zeros(int slices, int rows, int cols);

    auto slice(int i) { return data.middleCols(static_cast<Eigen::Index>(i) * cols, cols); }
    auto slice(int i) const { return data.middleCols(static_cast<Eigen::Index>(i) * cols, cols); }
    double norm() const { return data.norm(); }
    bool same_shape(const ParameterTensor& other) const {
        return slices == other.slices && rows == other.rows && cols == other.cols;
    }
};

// Parameter domain. Only the Frobenius ball of radius R_M is enforced; R
// bounds counterfactual trajectories and is monitored.
struct ConstraintSet {
    double R = 0.0;
    double R_M = 0.0;
};

// Radial projection onto {||M||_F <= R_M}.
ParameterTensor project(const ParameterTensor& M, const ConstraintSet& cs);

// project(M - eta * grad).
ParameterTensor ogd_step(const ParameterTensor& M, const ParameterTensor& grad, double eta, const ConstraintSet& cs);

struct Counterfactual {
    Eigen::VectorXd y;
    Eigen::VectorXd u;
};

// Online learner for policies u_s = sum_i M_i f_{i,s} whose features f do
// not depend on M. The memoryless loss at time t replays the current M over
// the last `truncation` feature vectors:
//   y_t(M) = y_nat_t + sum_{q=1}^{L} C A^(q-1) B u_{t-q}(M),
//   l_t(M) = c(y_t(M), u_t(M)),
// and is minimized by projected online gradient descent.
class MemorylessLearner {
public:
    MemorylessLearner(ParameterTensor init, std::vector<Eigen::MatrixXd> markov, double eta, ConstraintSet cs);

    // Records the stacked features of the current round and returns M f_t.
    Eigen::VectorXd act(const Eigen::VectorXd& features);

    Counterfactual counterfactual(const Eigen::VectorXd& y_nat) const;
    ParameterTensor gradient(const Eigen::VectorXd& y_nat, const CostFunction& cost) const;
    // One OGD step on the loss of the round recorded by the last act().
    void update(const Eigen::VectorXd& y_nat, const CostFunction& cost);

    const ParameterTensor& params() const { return M_; }
    void set_params(ParameterTensor M);
    int truncation() const { return static_cast<int>(markov_.size()); }
    double eta() const { return eta_; }
    const ConstraintSet& constraints() const { return cs_; }
    // Rounds in which ||y_t(M)|| or ||u_t(M)|| exceeded R.
    long trajectory_bound_violations() const { return violations_; }

private:
    ParameterTensor gradient_at(const Counterfactual& cf, const CostFunction& cost) const;
    // Feature vector recorded `lag` rounds ago (zero before the first round).
    const Eigen::VectorXd& features_at(int lag) const;

    ParameterTensor M_;
    std::vector<Eigen::MatrixXd> markov_;
    double eta_;
    ConstraintSet cs_;
    std::vector<Eigen::VectorXd> ring_;
    long rounds_ = 0;
    long violations_ = 0;
    Eigen::VectorXd zero_;
};

}  // namespace dsc
