#pragma once

#include "dsc/controller.hpp"
#include "dsc/lds.hpp"
#include "dsc/memoryless.hpp"
#include "dsc/signals.hpp"
#include "dsc/spectral.hpp"

#include <Eigen/Dense>

#include <span>
#include <vector>

namespace dsc {

// Parameters of a double spectral controller.
//
//   lifted:   y~_t = [y_nat_t; s_0^(1/4) Y_t phi_0; ...; s_h^(1/4) Y_t phi_h]
//   control:  u_t  = M_0 y~_t + sum_{i=1}^{h~} l_i^(1/4) M_i Y~_t psi_i
//
// Y_t = [y_nat_t ... y_nat_{t-m}], Y~_t = [y~_t ... y~_{t-m~}]. The lifting
// bank holds h+1 filters of length m+1 (indexed 0..h), the learning bank h~
// filters of length m~+1 (filter i in column i-1). M has h~+1 slices of
// shape n x (h+2)p.
struct DscParams {
    int h = 0;
    int h_tilde = 1;
    int m = 0;
    int m_tilde = 0;
    SpectralBasis lifting;
    SpectralBasis learning;
    ParameterTensor M;
    double eta = 0.0;

    static DscParams create(int n, int p, int h, int h_tilde, int m, int m_tilde, double gamma, double eta);

    int lifted_dim() const { return M.cols; }
    int feature_dim() const { return M.slices * M.cols; }
};

// Spectral lifting of a p x (m+1) newest-first window of natural observations.
Eigen::VectorXd lift(const Eigen::MatrixXd& window, const SpectralBasis& lifting);

// Stacked features [y~_t; l_1^(1/4) Y~_t psi_1; ...] from a (h+2)p x (m~+1)
// newest-first window of lifted observations. u_t = M.data * features.
Eigen::VectorXd dsc_features(const Eigen::MatrixXd& lifted_window, const SpectralBasis& learning);

Eigen::VectorXd control(const DscParams& params, const Eigen::MatrixXd& lifted_window);

// Lifted window at time t, built from a natural-observation trace indexed by
// time (entries before 0 or missing read as zero).
Eigen::MatrixXd lifted_window(const DscParams& params, std::span<const Eigen::VectorXd> y_nat, long t);

// Feature vector at time t computed directly from the trace.
Eigen::VectorXd dsc_features_at(const DscParams& params, std::span<const Eigen::VectorXd> y_nat, long t);

// (y_t(M), u_t(M)) with the Markov sum truncated at `truncation` terms.
Counterfactual counterfactual_outputs(const DscParams& params, std::span<const Eigen::VectorXd> y_nat, long t,
                                      const SystemModel& model, int truncation);

// Exact gradient of l_t(M) = c(y_t(M), u_t(M)) with respect to M.
ParameterTensor loss_gradient(const DscParams& params, std::span<const Eigen::VectorXd> y_nat, long t,
                              const SystemModel& model, const CostFunction& cost, int truncation);

// Parameter domain bounds for the given filter counts and system constants.
ConstraintSet constraint_set(const SystemModel& model, int h, int h_tilde);

// L_G = ceil((1/gamma) log(kappa^2 T)), at least 1.
int default_truncation(const SystemModel& model, long horizon);

struct ScheduleInputs {
    long T = 1;
    double gamma = 0.5;
    double kappa = 1.0;
    double kappa_B = 1.0;
    double kappa_C = 1.0;
    double W = 1.0;
    double G = 1.0;
    int d = 1;
    double C0 = 1.0;
};

struct Schedule {
    int m = 0;
    int h = 0;
    int m_tilde = 0;
    int h_tilde = 0;
    double eta = 0.0;
    double R = 0.0;
    double R_M = 0.0;
};

// Hyperparameters that carry the regret guarantee (natural logarithms).
Schedule schedule_params(const ScheduleInputs& in);

struct DscOptions {
    int h = 5;
    int h_tilde = 5;
    int m = 10;
    int m_tilde = 10;
    double eta = 1e-3;
    int truncation = 0;         // 0: default_truncation(model, horizon)
    long horizon = 1000;
    double filter_gamma = 0.0;  // 0: model.gamma
    double radius = 0.0;        // 0: R_M from constraint_set
    ConvMode conv = ConvMode::Fast;
};

// Streaming double spectral controller: tracks y_nat, runs both filter
// levels through StreamConvolver, plays u_t and takes one OGD step on l_t.
class DoubleSpectralController : public Controller {
public:
    DoubleSpectralController(SystemModel model, CostFunction cost, const DscOptions& opts);

    std::string name() const override { return "DSC"; }
    Eigen::VectorXd step(const Eigen::VectorXd& y) override;

    const DscParams& params() const { return params_; }
    const MemorylessLearner& learner() const { return learner_; }
    // y_nat and lifted observation of the last round.
    const Eigen::VectorXd& last_y_nat() const { return y_nat_; }
    const Eigen::VectorXd& last_lifted() const { return lifted_; }

private:
    SystemModel model_;
    CostFunction cost_;
    DscParams params_;
    NatureState nature_;
    StreamConvolver lift_conv_;
    StreamConvolver learn_conv_;
    MemorylessLearner learner_;
    Eigen::VectorXd u_prev_;
    Eigen::VectorXd y_nat_;
    Eigen::VectorXd lifted_;
    long t_ = 0;
};

}  // namespace dsc
