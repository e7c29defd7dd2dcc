#pragma once

#include "dsc/lds.hpp"

#include <Eigen/Dense>

#include <complex>
#include <memory>
#include <vector>

namespace dsc {

// Online natural-observation tracker. Maintains the fictitious state
// z_{t+1} = A z_t + B u_t and records y_nat_t = y_t - C z_t in a ring buffer.
// Reads at negative times return zero.
class NatureState {
public:
    NatureState(int d, int p, int capacity);

    // Round t: advances z with the control played at t-1 (zero at t = 0),
    // records and returns y_nat_t. `t` must be the next unrecorded step.
    Eigen::VectorXd update(const SystemModel& model, const Eigen::VectorXd& u_prev, const Eigen::VectorXd& y,
                           long t);

    // Newest recorded step, -1 before the first update.
    long time() const { return time_; }
    int capacity() const { return static_cast<int>(buffer_.size()); }
    const Eigen::VectorXd& z() const { return z_; }

    Eigen::VectorXd at(long t) const;
    // p x length matrix whose column k is y_nat_{t-k}.
    Eigen::MatrixXd window(long t, int length) const;

private:
    Eigen::VectorXd z_;
    std::vector<Eigen::VectorXd> buffer_;
    long time_ = -1;
    int p_;
};

Eigen::VectorXd nature_update(NatureState& ns, const SystemModel& model, const Eigen::VectorXd& u_prev,
                              const Eigen::VectorXd& y, long t);

enum class ConvMode { Fast, Naive };

// Streaming causal convolution of a vector-valued input with a bank of
// filters: after the push of x_t, query(j) returns
//   sum_{k=0}^{min(t, L-1)} filter_j[k] * x_{t-k}.
//
// Fast mode splits every (input i, output s) pair by the highest bit in
// which i and s differ. When the left half-block of inputs containing i
// completes, its contribution to the whole right half-block of outputs is
// computed in one shot (FFT for large blocks, direct for small ones) and
// parked in an accumulator. Each push triggers exactly one block at level
// ctz(t+1), so the amortized cost per step is O(log^2 t) for filters as long
// as the stream. Naive mode evaluates the sum directly.
class StreamConvolver {
public:
    // `filters` is L x J, one filter per column.
    StreamConvolver(int dim, Eigen::MatrixXd filters, ConvMode mode = ConvMode::Fast);
    ~StreamConvolver();
    StreamConvolver(StreamConvolver&&) noexcept;
    StreamConvolver& operator=(StreamConvolver&&) noexcept;
    StreamConvolver(const StreamConvolver&) = delete;
    StreamConvolver& operator=(const StreamConvolver&) = delete;

    void push(const Eigen::VectorXd& v);
    Eigen::VectorXd query(int j) const;

    // Index of the newest input, -1 before the first push.
    long time() const { return time_; }
    int dim() const { return dim_; }
    int filter_count() const { return static_cast<int>(filters_.cols()); }
    int filter_length() const { return static_cast<int>(filters_.rows()); }
    ConvMode mode() const { return mode_; }

private:
    struct FftWorkspace;

    void process_block(long t);
    void block_direct(long t, long n, long r_count, long q_min);
    void block_fft(long t, long n, int level);
    double* acc(long s, int j);

    int dim_;
    Eigen::MatrixXd filters_;
    ConvMode mode_;
    long time_ = -1;
    std::vector<double> inputs_;  // time-major, dim_ per step
    std::vector<double> acc_;     // (s * J + j) * dim_ + c
    // Cached filter transforms per level, one spectrum per filter.
    std::vector<std::vector<std::vector<std::complex<double>>>> filter_spectra_;
    std::unique_ptr<FftWorkspace> fft_;
};

void conv_push(StreamConvolver& sc, const Eigen::VectorXd& v);
Eigen::VectorXd conv_query(const StreamConvolver& sc, int j);

}  // namespace dsc
