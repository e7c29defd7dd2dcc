#include "dsc/errors.hpp"
#include "dsc/memoryless.hpp"

#include <doctest.h>

#include <random>

using namespace dsc;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

MatrixXd randn(int r, int c, std::mt19937_64& rng) {
    std::normal_distribution<double> normal;
    MatrixXd m(r, c);
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = normal(rng);
    return m;
}

ParameterTensor random_tensor(int s, int r, int c, std::mt19937_64& rng) {
    ParameterTensor t = ParameterTensor::zeros(s, r, c);
    t.data = randn(r, s * c, rng);
    return t;
}

}  // namespace

TEST_CASE("tensor layout") {
    ParameterTensor t = ParameterTensor::zeros(3, 2, 4);
    CHECK(t.data.rows() == 2);
    CHECK(t.data.cols() == 12);
    t.slice(1).setOnes();
    CHECK(t.data.middleCols(4, 4).isOnes());
    CHECK(t.data.leftCols(4).isZero());
    CHECK_THROWS_AS(ParameterTensor::zeros(0, 2, 2), ParameterError);
}

TEST_CASE("projection") {
    std::mt19937_64 rng(1);
    const ConstraintSet cs{0.0, 2.0};
    ParameterTensor m = random_tensor(2, 2, 3, rng);
    m.data *= 1.0 / m.norm();  // norm 1 = R_M / 2
    CHECK(project(m, cs).data == m.data);
    m.data *= 4.0;  // norm 4 = 2 R_M
    const ParameterTensor p = project(m, cs);
    CHECK(p.norm() == doctest::Approx(2.0).epsilon(1e-14));
    CHECK((p.data - m.data / 2.0).norm() < 1e-14);
}

TEST_CASE("ogd step trivial cases and errors") {
    std::mt19937_64 rng(2);
    const ConstraintSet cs{0.0, 100.0};
    const ParameterTensor m = random_tensor(2, 2, 3, rng);
    const ParameterTensor g = random_tensor(2, 2, 3, rng);
    CHECK(ogd_step(m, ParameterTensor::zeros(2, 2, 3), 0.5, cs).data == m.data);
    CHECK(ogd_step(m, g, 0.0, cs).data == m.data);
    CHECK((ogd_step(m, g, 0.1, cs).data - (m.data - 0.1 * g.data)).norm() < 1e-15);
    CHECK_THROWS_AS(ogd_step(m, ParameterTensor::zeros(3, 2, 3), 0.1, cs), ParameterError);
    CHECK_THROWS_AS(ogd_step(m, g, -1.0, cs), ParameterError);
    for (int k = 0; k < 20; ++k) {
        const ParameterTensor big = random_tensor(2, 2, 3, rng);
        CHECK(ogd_step(m, big, 50.0, ConstraintSet{0.0, 1.5}).norm() <= 1.5 * (1.0 + 1e-15));
    }
}

TEST_CASE("three OGD steps on a fixed quadratic decrease it") {
    std::mt19937_64 rng(3);
    const int n = 2, p = 3, slices = 2, cols = 3;
    const auto cost = CostFunction::quadratic(MatrixXd::Identity(p, p), MatrixXd::Identity(n, n));
    std::vector<MatrixXd> markov = {randn(p, n, rng), randn(p, n, rng)};
    const VectorXd f0 = randn(slices * cols, 1, rng), f1 = randn(slices * cols, 1, rng),
                   f2 = randn(slices * cols, 1, rng);
    const VectorXd y_nat = randn(p, 1, rng);
    MemorylessLearner learner(ParameterTensor::zeros(slices, n, cols), markov, 1e-3, ConstraintSet{1e9, 1e9});
    learner.act(f2);
    learner.act(f1);
    learner.act(f0);
    auto loss = [&](const ParameterTensor& M) {
        const VectorXd u0 = M.data * f0;
        const VectorXd y = y_nat + markov[0] * (M.data * f1) + markov[1] * (M.data * f2);
        return y.squaredNorm() + u0.squaredNorm();
    };
    double prev = loss(learner.params());
    for (int k = 0; k < 3; ++k) {
        const ParameterTensor M = learner.params();
        const ParameterTensor next = ogd_step(M, learner.gradient(y_nat, cost), 1e-3, learner.constraints());
        learner.set_params(next);
        const double now = loss(next);
        CHECK(now < prev);
        prev = now;
    }
}

TEST_CASE("learner counterfactual and gradient at M = 0") {
    std::mt19937_64 rng(4);
    const auto cost = CostFunction::quadratic(MatrixXd::Identity(3, 3), MatrixXd::Identity(2, 2));
    MemorylessLearner learner(ParameterTensor::zeros(2, 2, 4), {randn(3, 2, rng)}, 0.1, ConstraintSet{10.0, 10.0});
    CHECK_THROWS_AS(learner.counterfactual(VectorXd::Zero(3)), ParameterError);
    const VectorXd f = randn(8, 1, rng);
    const VectorXd y_nat = randn(3, 1, rng);
    CHECK(learner.act(f).isZero(0.0));
    const Counterfactual cf = learner.counterfactual(y_nat);
    CHECK(cf.y == y_nat);
    CHECK(cf.u.isZero(0.0));
    // single round: Markov sums are inactive and u(0) = 0 kills the gradient
    CHECK(learner.gradient(y_nat, cost).data.isZero(0.0));
    CHECK_THROWS_AS(learner.act(VectorXd::Zero(7)), ParameterError);
}

TEST_CASE("learner gradient matches finite differences") {
    std::mt19937_64 rng(5);
    for (int rep = 0; rep < 20; ++rep) {
        const MatrixXd q = randn(3, 3, rng), r = randn(2, 2, rng);
        const auto cost = CostFunction::quadratic(q * q.transpose(), r * r.transpose() + MatrixXd::Identity(2, 2));
        std::vector<MatrixXd> markov = {randn(3, 2, rng), randn(3, 2, rng), randn(3, 2, rng)};
        MemorylessLearner learner(random_tensor(2, 2, 3, rng), markov, 0.0, ConstraintSet{1e9, 1e9});
        for (int k = 0; k < 5; ++k) learner.act(randn(6, 1, rng));
        const VectorXd y_nat = randn(3, 1, rng);
        const ParameterTensor g = learner.gradient(y_nat, cost);
        MatrixXd fd(g.data.rows(), g.data.cols());
        const double h = 1e-6;
        for (Eigen::Index i = 0; i < fd.size(); ++i) {
            ParameterTensor plus = learner.params(), minus = learner.params();
            plus.data.data()[i] += h;
            minus.data.data()[i] -= h;
            learner.set_params(plus);
            const auto cp = learner.counterfactual(y_nat);
            const double lp = cost(cp.y, cp.u).value;
            learner.set_params(minus);
            const auto cm = learner.counterfactual(y_nat);
            const double lm = cost(cm.y, cm.u).value;
            fd.data()[i] = (lp - lm) / (2 * h);
            ParameterTensor mid = plus;
            mid.data.data()[i] -= h;
            learner.set_params(mid);
        }
        CHECK((fd - g.data).norm() / g.data.norm() < 1e-5);
    }
}

TEST_CASE("update projects and counts trajectory violations") {
    std::mt19937_64 rng(6);
    const auto cost = CostFunction::quadratic(MatrixXd::Identity(3, 3), MatrixXd::Identity(2, 2));
    MemorylessLearner learner(random_tensor(2, 2, 3, rng), {randn(3, 2, rng)}, 10.0, ConstraintSet{1e-3, 0.5});
    CHECK(learner.params().norm() <= 0.5 * (1.0 + 1e-15));
    for (int t = 0; t < 10; ++t) {
        learner.act(randn(6, 1, rng));
        learner.update(randn(3, 1, rng), cost);
        CHECK(learner.params().norm() <= 0.5 * (1.0 + 1e-15));
    }
    CHECK(learner.trajectory_bound_violations() == 10);
    CHECK(learner.truncation() == 1);
}
