#include "dsc/lds.hpp"

#include "dsc/errors.hpp"

#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>
#include <string>

namespace dsc {

using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

void require_vector(const VectorXd& v, int expected, const char* what) {
    if (v.size() != expected) {
        throw ParameterError(std::string(what) + ": expected length " + std::to_string(expected) + ", got " +
                             std::to_string(v.size()));
    }
    if (!v.allFinite()) throw ParameterError(std::string(what) + ": non-finite entries");
}

MatrixXd random_orthogonal(int n, std::mt19937_64& rng) {
    std::normal_distribution<double> normal(0.0, 1.0);
    MatrixXd g(n, n);
    for (int j = 0; j < n; ++j)
        for (int i = 0; i < n; ++i) g(i, j) = normal(rng);
    Eigen::HouseholderQR<MatrixXd> qr(g);
    return qr.householderQ() * MatrixXd::Identity(n, n);
}

}  // namespace

void SystemModel::validate() const {
    detail::require(A.rows() >= 1 && A.rows() == A.cols(), "SystemModel: A must be square and nonempty, got " +
                                                                detail::dims(A.rows(), A.cols()));
    detail::require(B.rows() == A.rows() && B.cols() >= 1,
                    "SystemModel: B must be d x n, got " + detail::dims(B.rows(), B.cols()));
    detail::require(C.cols() == A.rows() && C.rows() >= 1,
                    "SystemModel: C must be p x d, got " + detail::dims(C.rows(), C.cols()));
    detail::require(A.allFinite() && B.allFinite() && C.allFinite(), "SystemModel: non-finite entries");
    detail::require(gamma > 0.0 && gamma <= 2.0 / 3.0 + 1e-15, "SystemModel: gamma must lie in (0, 2/3]");
    detail::require(kappa >= 1.0 && kappa_B >= 1.0 && kappa_C >= 1.0 && W > 0.0 && G > 0.0,
                    "SystemModel: bound constants must be >= 1 (W, G > 0)");
}

double spectral_norm(const MatrixXd& m) {
    if (m.size() == 0) return 0.0;
    Eigen::JacobiSVD<MatrixXd> svd(m);
    return svd.singularValues()(0);
}

double spectral_radius(const MatrixXd& m) {
    if (m.size() == 0) return 0.0;
    Eigen::EigenSolver<MatrixXd> es(m, false);
    return es.eigenvalues().cwiseAbs().maxCoeff();
}

void fill_bounds(SystemModel& model, int horizon) {
    const double rho = spectral_radius(model.A);
    detail::require(rho < 1.0, "fill_bounds: A must be stable, spectral radius " + std::to_string(rho));
    model.kappa_B = std::max(1.0, spectral_norm(model.B));
    model.kappa_C = std::max(1.0, spectral_norm(model.C));
    model.gamma = std::min(2.0 / 3.0, 1.0 - rho);
    double kappa = 1.0;
    MatrixXd power = MatrixXd::Identity(model.d(), model.d());
    for (int i = 1; i <= horizon; ++i) {
        power = power * model.A;
        kappa = std::max(kappa, spectral_norm(power) / std::pow(1.0 - model.gamma, i));
    }
    model.kappa = kappa;
}

SystemModel random_system(int d, int n, int p, double radius, std::mt19937_64& rng) {
    detail::require(d >= 1 && n >= 1 && p >= 1, "random_system: dimensions must be positive");
    detail::require(radius > 0.0 && radius < 1.0, "random_system: spectral radius must lie in (0, 1)");

    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::normal_distribution<double> normal(0.0, 1.0);

    VectorXd lambda(d);
    lambda(0) = radius;
    for (int i = 1; i < d; ++i) lambda(i) = radius * (1.0 - unit(rng));  // (0, radius]

    const MatrixXd U = random_orthogonal(d, rng);
    const MatrixXd Q = random_orthogonal(d, rng);
    VectorXd s(d);
    for (int i = 0; i < d; ++i) s(i) = 1.0 + unit(rng);
    const MatrixXd V = U * s.asDiagonal() * Q.transpose();
    const MatrixXd V_inv = Q * s.cwiseInverse().asDiagonal() * U.transpose();

    SystemModel model;
    model.A = V * lambda.asDiagonal() * V_inv;
    model.B.resize(d, n);
    for (int j = 0; j < n; ++j)
        for (int i = 0; i < d; ++i) model.B(i, j) = normal(rng);
    model.C.resize(p, d);
    for (int j = 0; j < d; ++j)
        for (int i = 0; i < p; ++i) model.C(i, j) = normal(rng);

    model.kappa = std::max(1.0, spectral_norm(V) * spectral_norm(V_inv));
    model.kappa_B = std::max(1.0, spectral_norm(model.B));
    model.kappa_C = std::max(1.0, spectral_norm(model.C));
    model.gamma = std::min(2.0 / 3.0, 1.0 - radius);
    return model;
}

std::vector<MatrixXd> markov_parameters(const SystemModel& model, int count) {
    std::vector<MatrixXd> out;
    out.reserve(std::max(0, count));
    MatrixXd ab = model.B;  // A^(q-1) B
    for (int q = 1; q <= count; ++q) {
        out.push_back(model.C * ab);
        ab = model.A * ab;
    }
    return out;
}

StepResult step(const SimState& state, const SystemModel& model, const VectorXd& u, const VectorXd& w) {
    require_vector(state.x, model.d(), "step: state");
    require_vector(u, model.n(), "step: control");
    require_vector(w, model.d(), "step: disturbance");
    StepResult r;
    r.y = model.C * state.x;
    r.next.x = model.A * state.x + model.B * u + w;
    r.next.t = state.t + 1;
    return r;
}

StepResult step_relu(const SimState& state, const SystemModel& model, const VectorXd& u, const VectorXd& w) {
    require_vector(state.x, model.d(), "step_relu: state");
    require_vector(u, model.n(), "step_relu: control");
    require_vector(w, model.d(), "step_relu: disturbance");
    StepResult r;
    r.y = model.C * state.x;
    r.next.x = (model.A * state.x + model.B * u).cwiseMax(0.0) + w;
    r.next.t = state.t + 1;
    return r;
}

// ---------------------------------------------------------------------------

DisturbanceSource::DisturbanceSource(DisturbanceKind kind, int d, double bound, std::uint64_t seed)
    : kind_(std::move(kind)), d_(d), bound_(bound), rng_(seed) {
    detail::require(d >= 1, "DisturbanceSource: dimension must be positive");
    detail::require(bound > 0.0, "DisturbanceSource: bound W must be positive");
    if (const auto* s = std::get_if<Sinusoid>(&kind_)) {
        if (s->phases.empty()) {
            phases_.resize(d);
            for (int i = 0; i < d; ++i) phases_[i] = 2.0 * std::numbers::pi * i / d;
        } else {
            detail::require(static_cast<int>(s->phases.size()) == d,
                            "DisturbanceSource: sinusoid needs one phase per coordinate");
            phases_ = s->phases;
        }
    } else if (const auto* r = std::get_if<Replay>(&kind_)) {
        replay_ = read_replay_csv(r->path, d);
    } else {
        detail::require(std::get<GaussianNoise>(kind_).std >= 0.0, "DisturbanceSource: negative std");
    }
}

VectorXd DisturbanceSource::next() {
    VectorXd w(d_);
    if (const auto* g = std::get_if<GaussianNoise>(&kind_)) {
        for (int i = 0; i < d_; ++i) w(i) = g->std * normal_(rng_);
    } else if (const auto* s = std::get_if<Sinusoid>(&kind_)) {
        const double arg = 2.0 * std::numbers::pi * s->frequency * static_cast<double>(t_);
        for (int i = 0; i < d_; ++i) w(i) = s->amplitude * std::sin(arg + phases_[i]);
    } else {
        if (t_ >= replay_.cols()) {
            throw ParameterError("DisturbanceSource: replay exhausted after " + std::to_string(replay_.cols()) +
                                 " steps");
        }
        w = replay_.col(t_);
    }
    ++t_;
    const double norm = w.norm();
    if (norm > bound_) w *= bound_ / norm;
    return w;
}

MatrixXd DisturbanceSource::generate(int steps) {
    MatrixXd out(d_, steps);
    for (int t = 0; t < steps; ++t) out.col(t) = next();
    return out;
}

MatrixXd read_replay_csv(const std::filesystem::path& path, int d) {
    std::ifstream in(path);
    if (!in) throw ParameterError("read_replay_csv: cannot open " + path.string());
    std::vector<double> values;
    std::string line;
    long rows = 0;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string cell;
        int cols = 0;
        while (std::getline(ss, cell, ',')) {
            try {
                std::size_t used = 0;
                values.push_back(std::stod(cell, &used));
            } catch (const std::exception&) {
                throw ParameterError("read_replay_csv: bad number '" + cell + "' in " + path.string() + " row " +
                                     std::to_string(rows + 1));
            }
            ++cols;
        }
        if (cols != d) {
            throw ParameterError("read_replay_csv: row " + std::to_string(rows + 1) + " of " + path.string() +
                                 " has " + std::to_string(cols) + " columns, expected " + std::to_string(d));
        }
        ++rows;
    }
    MatrixXd out(d, rows);
    for (long t = 0; t < rows; ++t)
        for (int i = 0; i < d; ++i) out(i, t) = values[t * d + i];
    return out;
}

// ---------------------------------------------------------------------------

namespace {

void require_psd(const MatrixXd& m, const char* name) {
    detail::require(m.rows() == m.cols(), std::string("CostFunction: ") + name + " must be square");
    detail::require(m.allFinite(), std::string("CostFunction: ") + name + " has non-finite entries");
    const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
    detail::require((m - m.transpose()).cwiseAbs().maxCoeff() <= 1e-12 * scale,
                    std::string("CostFunction: ") + name + " must be symmetric");
    if (m.size() == 0) return;
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(m, Eigen::EigenvaluesOnly);
    detail::require(es.eigenvalues()(0) >= -1e-12 * scale,
                    std::string("CostFunction: ") + name + " must be positive semidefinite");
}

}  // namespace

CostFunction CostFunction::quadratic(MatrixXd Q, MatrixXd R) {
    require_psd(Q, "Q");
    require_psd(R, "R");
    CostFunction c;
    c.Q_ = std::move(Q);
    c.R_ = std::move(R);
    return c;
}

CostFunction CostFunction::custom(Oracle oracle) {
    detail::require(static_cast<bool>(oracle), "CostFunction: empty oracle");
    CostFunction c;
    c.oracle_ = std::move(oracle);
    return c;
}

CostEval CostFunction::operator()(const VectorXd& y, const VectorXd& u) const {
    if (oracle_) return oracle_(y, u);
    return quadratic_cost(*this, y, u);
}

CostEval quadratic_cost(const CostFunction& cost, const VectorXd& y, const VectorXd& u) {
    detail::require(cost.is_quadratic(), "quadratic_cost: cost is not quadratic");
    detail::require(y.size() == cost.Q().rows() && u.size() == cost.R().rows(),
                    "quadratic_cost: dimension mismatch");
    CostEval e;
    const VectorXd qy = cost.Q() * y;
    const VectorXd ru = cost.R() * u;
    e.value = y.dot(qy) + u.dot(ru);
    e.grad_y = 2.0 * qy;
    e.grad_u = 2.0 * ru;
    return e;
}

// ---------------------------------------------------------------------------

LdcPolicy::LdcPolicy(MatrixXd A_pi, MatrixXd B_pi, MatrixXd C_pi)
    : A_(std::move(A_pi)), B_(std::move(B_pi)), C_(std::move(C_pi)) {
    detail::require(A_.rows() == A_.cols(), "LdcPolicy: A_pi must be square");
    detail::require(B_.rows() == A_.rows(), "LdcPolicy: B_pi must have s rows");
    detail::require(C_.cols() == A_.rows(), "LdcPolicy: C_pi must have s columns");
    s_ = VectorXd::Zero(A_.rows());
}

LdcPolicy LdcPolicy::zero(int s, int n, int p) {
    return LdcPolicy(MatrixXd::Zero(s, s), MatrixXd::Zero(s, p), MatrixXd::Zero(n, s));
}

VectorXd LdcPolicy::step(const VectorXd& y) {
    detail::require(y.size() == B_.cols(), "LdcPolicy::step: observation has length " + std::to_string(y.size()) +
                                               ", expected " + std::to_string(B_.cols()));
    VectorXd u = C_ * s_;
    s_ = A_ * s_ + B_ * y;
    return u;
}

bool LdcPolicy::diagonalizably_stable(double kappa, double gamma) const {
    if (spectral_norm(B_) > kappa || spectral_norm(C_) > kappa) return false;
    if (A_.rows() == 0) return true;
    Eigen::EigenSolver<MatrixXd> es(A_);
    if (es.info() != Eigen::Success) return false;
    const auto& ev = es.eigenvalues();
    if (ev.imag().cwiseAbs().maxCoeff() > 1e-12) return false;
    if (ev.real().minCoeff() < -1e-12 || ev.real().maxCoeff() > 1.0 - gamma + 1e-12) return false;
    const MatrixXd H = es.eigenvectors().real();
    Eigen::JacobiSVD<MatrixXd> svd(H);
    const auto& sv = svd.singularValues();
    if (sv(sv.size() - 1) <= 0.0) return false;
    return sv(0) <= kappa && 1.0 / sv(sv.size() - 1) <= kappa;
}

VectorXd ldc_step(LdcPolicy& policy, const VectorXd& y) { return policy.step(y); }

}  // namespace dsc
