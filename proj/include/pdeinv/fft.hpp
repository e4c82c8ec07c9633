#pragma once

#include <fftw3.h>

#include <complex>
#include <cstddef>
#include <map>
#include <mutex>
#include <span>
#include <utility>
#include <vector>

#include "pdeinv/error.hpp"

namespace pdeinv {

namespace detail {

// FFTW's planner is not thread-safe; plan execution on distinct arrays is.
// Plans are created once per shape and live for the whole process.
struct FftPlans {
    fftw_plan r2c = nullptr;
    fftw_plan c2r = nullptr;
};

inline std::mutex& fft_planner_mutex() {
    static std::mutex m;
    return m;
}

inline FftPlans plans_for(const std::vector<int>& shape, double* real, fftw_complex* spec) {
    static std::map<std::vector<int>, FftPlans> cache;
    std::lock_guard<std::mutex> lock(fft_planner_mutex());
    auto it = cache.find(shape);
    if (it != cache.end()) return it->second;
    const int rank = static_cast<int>(shape.size());
    FftPlans p;
    p.r2c = fftw_plan_dft_r2c(rank, shape.data(), real, spec, FFTW_ESTIMATE);
    p.c2r = fftw_plan_dft_c2r(rank, shape.data(), spec, real, FFTW_ESTIMATE);
    require(p.r2c != nullptr && p.c2r != nullptr, ErrorKind::invalid_config, "FFTW planning failed");
    cache.emplace(shape, p);
    return p;
}

}  // namespace detail

/// Real-to-complex transform over a 1D or 2D row-major array.
///
/// The spectrum uses FFTW's half layout: n0 x (n1/2+1) in 2D, n/2+1 in 1D.
/// `forward` is unnormalized; `inverse` divides by the number of points so
/// that inverse(forward(x)) == x.
class RealFft {
public:
    explicit RealFft(std::vector<std::size_t> shape) : shape_(std::move(shape)) {
        require(shape_.size() == 1 || shape_.size() == 2, ErrorKind::invalid_config,
                "FFT supports 1D and 2D arrays");
        real_size_ = 1;
        for (auto n : shape_) real_size_ *= n;
        spec_size_ = real_size_ / shape_.back() * (shape_.back() / 2 + 1);
        real_ = static_cast<double*>(fftw_malloc(sizeof(double) * real_size_));
        spec_ = static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * spec_size_));
        std::vector<int> dims(shape_.begin(), shape_.end());
        plans_ = detail::plans_for(dims, real_, spec_);
    }

    RealFft(const RealFft& other) : RealFft(other.shape_) {}
    RealFft& operator=(const RealFft&) = delete;

    ~RealFft() {
        fftw_free(real_);
        fftw_free(spec_);
    }

    const std::vector<std::size_t>& shape() const { return shape_; }
    std::size_t real_size() const { return real_size_; }
    std::size_t spectrum_size() const { return spec_size_; }
    /// Length of the halved last axis.
    std::size_t half_last() const { return shape_.back() / 2 + 1; }

    void forward(std::span<const double> in, std::span<std::complex<double>> out) {
        require(in.size() == real_size_ && out.size() == spec_size_, ErrorKind::invalid_config,
                "FFT buffer size mismatch");
        std::copy(in.begin(), in.end(), real_);
        fftw_execute_dft_r2c(plans_.r2c, real_, spec_);
        auto* s = reinterpret_cast<std::complex<double>*>(spec_);
        std::copy(s, s + spec_size_, out.begin());
    }

    void inverse(std::span<const std::complex<double>> in, std::span<double> out) {
        require(in.size() == spec_size_ && out.size() == real_size_, ErrorKind::invalid_config,
                "FFT buffer size mismatch");
        auto* s = reinterpret_cast<std::complex<double>*>(spec_);
        std::copy(in.begin(), in.end(), s);
        fftw_execute_dft_c2r(plans_.c2r, spec_, real_);
        const double scale = 1.0 / static_cast<double>(real_size_);
        for (std::size_t i = 0; i < real_size_; ++i) out[i] = real_[i] * scale;
    }

    std::vector<std::complex<double>> forward(std::span<const double> in) {
        std::vector<std::complex<double>> out(spec_size_);
        forward(in, out);
        return out;
    }

    std::vector<double> inverse(std::span<const std::complex<double>> in) {
        std::vector<double> out(real_size_);
        inverse(in, out);
        return out;
    }

private:
    std::vector<std::size_t> shape_;
    std::size_t real_size_ = 0;
    std::size_t spec_size_ = 0;
    double* real_ = nullptr;
    fftw_complex* spec_ = nullptr;
    detail::FftPlans plans_;
};

/// Signed mode index of FFT bin `i` on an axis of `n` points.
inline long signed_mode(std::size_t i, std::size_t n) {
    const long li = static_cast<long>(i), ln = static_cast<long>(n);
    return li <= ln / 2 ? li : li - ln;
}

/// Multiplicity of a half-spectrum bin when summing |c|^2 over the full
/// spectrum: bins other than the zero and (even-n) Nyquist columns stand
/// for themselves and their conjugate partner.
inline double half_spectrum_weight(std::size_t j, std::size_t n_last) {
    if (j == 0) return 1.0;
    if (n_last % 2 == 0 && j == n_last / 2) return 1.0;
    return 2.0;
}

}  // namespace pdeinv
