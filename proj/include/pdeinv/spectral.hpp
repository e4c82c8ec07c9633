#pragma once

#include <cmath>
#include <complex>
#include <cstdlib>
#include <numbers>
#include <vector>

#include "pdeinv/error.hpp"
#include "pdeinv/fft.hpp"
#include "pdeinv/grid.hpp"

namespace pdeinv {

/// Wavenumber tables for a fully periodic 1D or 2D grid in FFTW half layout.
///
/// Physical wavenumbers are 2*pi*m/L for mode index m. First-derivative
/// symbols vanish at the Nyquist bin so that odd derivatives stay real.
class SpectralGrid {
public:
    explicit SpectralGrid(const Grid& grid) : grid_(grid), fft_(grid.shape()) {
        require(grid.all_periodic(), ErrorKind::unsupported_grid,
                "spectral operations need a periodic grid");
        n0_ = grid.nx();
        n1_ = grid.ndims() == 2 ? grid.ny() : 1;
        nh_ = grid.ndims() == 2 ? n1_ / 2 + 1 : n0_ / 2 + 1;
        const std::size_t rows = grid.ndims() == 2 ? n0_ : 1;
        const std::size_t cols = nh_;
        size_ = rows * cols;
        kx_.resize(size_);
        ky_.resize(size_);
        dkx_.resize(size_);
        dky_.resize(size_);
        mx_.resize(size_);
        my_.resize(size_);
        const double two_pi = 2.0 * std::numbers::pi;
        if (grid.ndims() == 1) {
            const double L = grid.axis(0).length();
            for (std::size_t j = 0; j < cols; ++j) {
                const long m = static_cast<long>(j);
                mx_[j] = m;
                my_[j] = 0;
                kx_[j] = two_pi * static_cast<double>(m) / L;
                dkx_[j] = (n0_ % 2 == 0 && j == n0_ / 2) ? 0.0 : kx_[j];
                ky_[j] = dky_[j] = 0.0;
            }
        } else {
            const double Lx = grid.axis(0).length(), Ly = grid.axis(1).length();
            for (std::size_t i = 0; i < rows; ++i) {
                const long mi = signed_mode(i, n0_);
                const bool nyq_i = (n0_ % 2 == 0 && i == n0_ / 2);
                for (std::size_t j = 0; j < cols; ++j) {
                    const std::size_t idx = i * cols + j;
                    const long mj = static_cast<long>(j);
                    const bool nyq_j = (n1_ % 2 == 0 && j == n1_ / 2);
                    mx_[idx] = mi;
                    my_[idx] = mj;
                    kx_[idx] = two_pi * static_cast<double>(mi) / Lx;
                    ky_[idx] = two_pi * static_cast<double>(mj) / Ly;
                    dkx_[idx] = nyq_i ? 0.0 : kx_[idx];
                    dky_[idx] = nyq_j ? 0.0 : ky_[idx];
                }
            }
        }
    }

    SpectralGrid(const SpectralGrid& other) : SpectralGrid(other.grid_) {}

    const Grid& grid() const { return grid_; }
    RealFft& fft() { return fft_; }
    std::size_t size() const { return size_; }
    std::size_t points() const { return grid_.size(); }
    std::size_t rows() const { return grid_.ndims() == 2 ? n0_ : 1; }
    std::size_t cols() const { return nh_; }
    /// Points along the halved (last) axis.
    std::size_t last_axis_points() const { return grid_.ndims() == 2 ? n1_ : n0_; }

    double kx(std::size_t idx) const { return kx_[idx]; }
    double ky(std::size_t idx) const { return ky_[idx]; }
    /// First-derivative symbols (zero at Nyquist).
    double dkx(std::size_t idx) const { return dkx_[idx]; }
    double dky(std::size_t idx) const { return dky_[idx]; }
    double k2(std::size_t idx) const { return kx_[idx] * kx_[idx] + ky_[idx] * ky_[idx]; }
    long mx(std::size_t idx) const { return mx_[idx]; }
    long my(std::size_t idx) const { return my_[idx]; }
    /// |m| in mode-index units.
    double mode_norm(std::size_t idx) const {
        const double a = static_cast<double>(mx_[idx]), b = static_cast<double>(my_[idx]);
        return std::sqrt(a * a + b * b);
    }

    /// Weight of bin idx when summing over the full (both-halves) spectrum.
    double weight(std::size_t idx) const { return half_spectrum_weight(idx % nh_, last_axis_points()); }

    /// 2/3-rule keep mask: every |m_axis| satisfies 3|m| < N.
    bool dealias_keep(std::size_t idx) const {
        const bool keep_x = 3 * std::labs(mx_[idx]) < static_cast<long>(n0_);
        if (grid_.ndims() == 1) return keep_x;
        return keep_x && 3 * std::labs(my_[idx]) < static_cast<long>(n1_);
    }

    std::vector<std::complex<double>> forward(std::span<const double> in) { return fft_.forward(in); }
    std::vector<double> inverse(std::span<const std::complex<double>> in) { return fft_.inverse(in); }

private:
    Grid grid_;
    RealFft fft_;
    std::size_t n0_ = 0, n1_ = 1, nh_ = 0, size_ = 0;
    std::vector<double> kx_, ky_, dkx_, dky_;
    std::vector<long> mx_, my_;
};

struct VelocityResult {
    Field velocity;  // channels {u_x, u_y}
    bool mean_removed = false;
};

/// Velocity from vorticity through the streamfunction.
///
/// Convention: w = -lap(psi), u = (d_y psi, -d_x psi), so curl u = w. For
/// w = sin(x) on [0,2pi]^2 this gives u = (0, -cos x). A nonzero-mean w is
/// projected to zero mean and flagged.
inline VelocityResult velocity_from_vorticity(const Field& w, SpectralGrid& sg) {
    require(w.grid().ndims() == 2, ErrorKind::unsupported_grid, "velocity needs a 2D field");
    require(w.grid() == sg.grid(), ErrorKind::invalid_config, "spectral grid mismatch");
    auto what = sg.forward(w.channel(0));
    VelocityResult out;
    double rms = 0.0;
    for (double v : w.channel(0)) rms += v * v;
    rms = std::sqrt(rms / static_cast<double>(w.points()));
    const double mean = what[0].real() / static_cast<double>(w.points());
    out.mean_removed = std::abs(mean) > 1e-12 * std::max(rms, 1e-300) && std::abs(mean) > 0.0;
    what[0] = 0.0;
    std::vector<std::complex<double>> uh(sg.size()), vh(sg.size());
    const std::complex<double> I(0.0, 1.0);
    for (std::size_t idx = 1; idx < sg.size(); ++idx) {
        const double k2 = sg.k2(idx);
        const std::complex<double> psi = k2 > 0.0 ? what[idx] / k2 : 0.0;
        uh[idx] = I * sg.dky(idx) * psi;
        vh[idx] = -I * sg.dkx(idx) * psi;
    }
    uh[0] = vh[0] = 0.0;
    Field vel(w.grid(), {"u_x", "u_y"});
    sg.fft().inverse(uh, vel.channel(0));
    sg.fft().inverse(vh, vel.channel(1));
    out.velocity = std::move(vel);
    return out;
}

inline VelocityResult velocity_from_vorticity(const Field& w) {
    SpectralGrid sg(w.grid());
    return velocity_from_vorticity(w, sg);
}

}  // namespace pdeinv
