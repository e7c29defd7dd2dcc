#include "dsc/signals.hpp"

#include "dsc/errors.hpp"

#include <fftw3.h>

#include <algorithm>
#include <bit>
#include <map>
#include <mutex>
#include <string>

namespace dsc {

using Eigen::MatrixXd;
using Eigen::VectorXd;

NatureState::NatureState(int d, int p, int capacity) : z_(VectorXd::Zero(d)), p_(p) {
    detail::require(d >= 1 && p >= 1, "NatureState: dimensions must be positive");
    detail::require(capacity >= 1, "NatureState: capacity must be positive");
    buffer_.assign(capacity, VectorXd::Zero(p));
}

VectorXd NatureState::update(const SystemModel& model, const VectorXd& u_prev, const VectorXd& y, long t) {
    if (t != time_ + 1) {
        throw ParameterError("NatureState::update: expected step " + std::to_string(time_ + 1) + ", got " +
                             std::to_string(t));
    }
    detail::require(model.d() == z_.size() && model.p() == p_, "NatureState::update: model dimension mismatch");
    detail::require(u_prev.size() == model.n(), "NatureState::update: control has wrong length");
    detail::require(y.size() == p_, "NatureState::update: observation has wrong length");

    z_ = model.A * z_ + model.B * u_prev;
    VectorXd y_nat = y - model.C * z_;
    time_ = t;
    buffer_[t % buffer_.size()] = y_nat;
    return y_nat;
}

VectorXd NatureState::at(long t) const {
    if (t < 0) return VectorXd::Zero(p_);
    if (t > time_) throw ParameterError("NatureState::at: step " + std::to_string(t) + " not yet recorded");
    if (time_ - t >= static_cast<long>(buffer_.size())) {
        throw ParameterError("NatureState::at: step " + std::to_string(t) + " evicted (capacity " +
                             std::to_string(buffer_.size()) + ")");
    }
    return buffer_[t % buffer_.size()];
}

MatrixXd NatureState::window(long t, int length) const {
    MatrixXd out(p_, length);
    for (int k = 0; k < length; ++k) out.col(k) = at(t - k);
    return out;
}

VectorXd nature_update(NatureState& ns, const SystemModel& model, const VectorXd& u_prev, const VectorXd& y,
                       long t) {
    return ns.update(model, u_prev, y, t);
}

// ---------------------------------------------------------------------------

namespace {

struct FftwFree {
    void operator()(void* p) const { fftw_free(p); }
};

template <typename T>
using FftwBuffer = std::unique_ptr<T[], FftwFree>;

struct PlanPair {
    fftw_plan forward;
    fftw_plan inverse;
};

// FFTW's planner is not thread-safe; execution with the new-array interface
// is. FFTW_ESTIMATE keeps plan selection (and so every output bit) fixed
// from run to run.
PlanPair plans_for(int size) {
    static std::mutex mutex;
    static std::map<int, PlanPair> cache;
    std::lock_guard<std::mutex> lock(mutex);
    auto it = cache.find(size);
    if (it != cache.end()) return it->second;
    FftwBuffer<double> real(fftw_alloc_real(size));
    FftwBuffer<fftw_complex> spec(fftw_alloc_complex(size / 2 + 1));
    PlanPair plans{fftw_plan_dft_r2c_1d(size, real.get(), spec.get(), FFTW_ESTIMATE),
                   fftw_plan_dft_c2r_1d(size, spec.get(), real.get(), FFTW_ESTIMATE)};
    cache.emplace(size, plans);
    return plans;
}

}  // namespace

struct StreamConvolver::FftWorkspace {
    long capacity = 0;
    FftwBuffer<double> real;
    FftwBuffer<fftw_complex> input_spec;
    FftwBuffer<fftw_complex> product;

    void reserve(long size) {
        if (size <= capacity) return;
        real.reset(fftw_alloc_real(size));
        input_spec.reset(fftw_alloc_complex(size / 2 + 1));
        product.reset(fftw_alloc_complex(size / 2 + 1));
        capacity = size;
    }
};

StreamConvolver::StreamConvolver(int dim, MatrixXd filters, ConvMode mode)
    : dim_(dim), filters_(std::move(filters)), mode_(mode), fft_(std::make_unique<FftWorkspace>()) {
    detail::require(dim >= 1, "StreamConvolver: dimension must be positive");
    detail::require(filters_.rows() >= 1 && filters_.cols() >= 1, "StreamConvolver: empty filter bank");
    detail::require(filters_.allFinite(), "StreamConvolver: non-finite filter taps");
}

StreamConvolver::~StreamConvolver() = default;
StreamConvolver::StreamConvolver(StreamConvolver&&) noexcept = default;
StreamConvolver& StreamConvolver::operator=(StreamConvolver&&) noexcept = default;

double* StreamConvolver::acc(long s, int j) {
    const std::size_t need = static_cast<std::size_t>((s + 1) * filter_count() * dim_);
    if (acc_.size() < need) acc_.resize(std::max(need, 2 * acc_.size()), 0.0);
    return acc_.data() + (s * filter_count() + j) * dim_;
}

void StreamConvolver::push(const VectorXd& v) {
    detail::require(v.size() == dim_, "StreamConvolver::push: expected length " + std::to_string(dim_) + ", got " +
                                          std::to_string(v.size()));
    inputs_.insert(inputs_.end(), v.data(), v.data() + dim_);
    ++time_;
    if (mode_ == ConvMode::Fast) process_block(time_);
}

void StreamConvolver::process_block(long t) {
    const int level = std::countr_zero(static_cast<unsigned long>(t + 1));
    const long n = 1L << level;
    const long taps = filter_length();
    // Outputs t+1+r and inputs t+1-n+q interact through lag n + r - q, which
    // is nonzero only below `taps`.
    const long r_count = std::min(n, taps - 1);
    if (r_count <= 0) return;
    const long q_min = std::max(0L, n - taps + 1);
    const long direct_cost = r_count * (n - q_min);
    const long fft_cost = 6 * (2 * n) * (level + 1);
    if (direct_cost <= fft_cost) {
        block_direct(t, n, r_count, q_min);
    } else {
        block_fft(t, n, level);
    }
}

void StreamConvolver::block_direct(long t, long n, long r_count, long q_min) {
    const long a = t + 1 - n;
    const long taps = filter_length();
    for (int j = 0; j < filter_count(); ++j) {
        for (long r = 0; r < r_count; ++r) {
            double* out = acc(t + 1 + r, j);
            for (long q = q_min; q < n; ++q) {
                const long lag = n + r - q;
                if (lag >= taps) continue;
                const double f = filters_(lag, j);
                const double* x = inputs_.data() + (a + q) * dim_;
                for (int c = 0; c < dim_; ++c) out[c] += f * x[c];
            }
        }
    }
}

void StreamConvolver::block_fft(long t, long n, int level) {
    const long size = 2 * n;
    const long bins = n + 1;
    const long a = t + 1 - n;
    const long taps = filter_length();
    const long r_count = std::min(n, taps - 1);
    const PlanPair plans = plans_for(static_cast<int>(size));
    fft_->reserve(size);
    double* real = fft_->real.get();
    fftw_complex* xspec = fft_->input_spec.get();
    fftw_complex* prod = fft_->product.get();

    if (filter_spectra_.size() <= static_cast<std::size_t>(level)) filter_spectra_.resize(level + 1);
    auto& spectra = filter_spectra_[level];
    if (spectra.empty()) {
        spectra.resize(filter_count());
        for (int j = 0; j < filter_count(); ++j) {
            std::fill(real, real + size, 0.0);
            for (long k = 0; k < std::min(size, taps); ++k) real[k] = filters_(k, j);
            fftw_execute_dft_r2c(plans.forward, real, xspec);
            spectra[j].resize(bins);
            for (long b = 0; b < bins; ++b) spectra[j][b] = {xspec[b][0], xspec[b][1]};
        }
    }

    const double scale = 1.0 / static_cast<double>(size);
    for (int c = 0; c < dim_; ++c) {
        for (long q = 0; q < n; ++q) real[q] = inputs_[(a + q) * dim_ + c];
        std::fill(real + n, real + size, 0.0);
        fftw_execute_dft_r2c(plans.forward, real, xspec);
        for (int j = 0; j < filter_count(); ++j) {
            const auto& f = spectra[j];
            for (long b = 0; b < bins; ++b) {
                const double xr = xspec[b][0], xi = xspec[b][1];
                prod[b][0] = xr * f[b].real() - xi * f[b].imag();
                prod[b][1] = xr * f[b].imag() + xi * f[b].real();
            }
            fftw_execute_dft_c2r(plans.inverse, prod, real);
            // Circular wrap cannot reach indices n..2n-1: lags there are in [1, 2n).
            for (long r = 0; r < r_count; ++r) acc(t + 1 + r, j)[c] += real[n + r] * scale;
        }
    }
}

VectorXd StreamConvolver::query(int j) const {
    detail::require(j >= 0 && j < filter_count(), "StreamConvolver::query: unknown filter index " + std::to_string(j));
    detail::require(time_ >= 0, "StreamConvolver::query: no input pushed yet");
    const long t = time_;
    VectorXd out = VectorXd::Zero(dim_);
    if (mode_ == ConvMode::Naive) {
        const long last = std::min(t, static_cast<long>(filter_length()) - 1);
        for (long k = 0; k <= last; ++k) {
            const double f = filters_(k, j);
            const double* x = inputs_.data() + (t - k) * dim_;
            for (int c = 0; c < dim_; ++c) out(c) += f * x[c];
        }
        return out;
    }
    const std::size_t offset = static_cast<std::size_t>((t * filter_count() + j) * dim_);
    if (offset + dim_ <= acc_.size()) {
        for (int c = 0; c < dim_; ++c) out(c) = acc_[offset + c];
    }
    const double f0 = filters_(0, j);
    const double* x = inputs_.data() + t * dim_;
    for (int c = 0; c < dim_; ++c) out(c) += f0 * x[c];
    return out;
}

void conv_push(StreamConvolver& sc, const VectorXd& v) { sc.push(v); }

VectorXd conv_query(const StreamConvolver& sc, int j) { return sc.query(j); }

}  // namespace dsc
