#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <complex>
#include <vector>

#include "pdeinv/error.hpp"
#include "pdeinv/grid.hpp"
#include "pdeinv/ode/radau5.hpp"
#include "pdeinv/solvers/config.hpp"
#include "pdeinv/solvers/downsample.hpp"
#include "pdeinv/spectral.hpp"

namespace pdeinv {

/// Right-hand side of u_t = -u u_x - delta^2 u_xxx with spectral x-derivatives.
class KdvOperator {
public:
    KdvOperator(const Grid& grid, double delta, bool dealias) : sg_(grid), delta2_(delta * delta), dealias_(dealias) {
        require(grid.ndims() == 1 && grid.all_periodic(), ErrorKind::unsupported_grid, "KdV needs a 1D periodic grid");
        require(std::isfinite(delta) && delta > 0.0, ErrorKind::invalid_params, "delta must be positive");
        n_ = grid.size();
        spec_.resize(sg_.size());
        work_.resize(sg_.size());
        ux_.resize(n_);
        uxxx_.resize(n_);
        u_.resize(n_);
    }

    std::size_t size() const { return n_; }

    void operator()(double, const ode::Vector& y, ode::Vector& dy) {
        const std::complex<double> I(0.0, 1.0);
        std::copy(y.data(), y.data() + n_, u_.begin());
        sg_.fft().forward(u_, spec_);
        for (std::size_t m = 0; m < spec_.size(); ++m) {
            const double k = sg_.dkx(m);
            work_[m] = I * k * spec_[m];
        }
        sg_.fft().inverse(work_, ux_);
        for (std::size_t m = 0; m < spec_.size(); ++m) {
            const double k = sg_.dkx(m);
            work_[m] = -I * k * k * k * spec_[m];
        }
        sg_.fft().inverse(work_, uxxx_);
        if (dealias_) {
            for (std::size_t p = 0; p < n_; ++p) u_[p] = u_[p] * ux_[p];
            sg_.fft().forward(u_, spec_);
            for (std::size_t m = 0; m < spec_.size(); ++m) {
                if (!sg_.dealias_keep(m)) spec_[m] = 0.0;
            }
            sg_.fft().inverse(spec_, u_);
            for (std::size_t p = 0; p < n_; ++p) dy[p] = -u_[p] - delta2_ * uxxx_[p];
        } else {
            for (std::size_t p = 0; p < n_; ++p) dy[p] = -u_[p] * ux_[p] - delta2_ * uxxx_[p];
        }
    }

    /// Spectral differentiation matrix of the given odd order (columns are
    /// derivatives of unit vectors).
    Eigen::MatrixXd derivative_matrix(int order) {
        Eigen::MatrixXd D(n_, n_);
        std::vector<double> e(n_, 0.0), col(n_);
        const std::complex<double> I(0.0, 1.0);
        for (std::size_t c = 0; c < n_; ++c) {
            std::fill(e.begin(), e.end(), 0.0);
            e[c] = 1.0;
            sg_.fft().forward(e, spec_);
            for (std::size_t m = 0; m < spec_.size(); ++m) spec_[m] *= std::pow(I * sg_.dkx(m), order);
            sg_.fft().inverse(spec_, col);
            for (std::size_t r = 0; r < n_; ++r) D(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = col[r];
        }
        return D;
    }

    double delta2() const { return delta2_; }

private:
    SpectralGrid sg_;
    double delta2_;
    bool dealias_;
    std::size_t n_ = 0;
    std::vector<std::complex<double>> spec_, work_;
    std::vector<double> ux_, uxxx_, u_;
};

/// KdV integrated with Radau IIA (order 5) and an exact dense Jacobian
/// J = -diag(u_x) - diag(u) D1 - delta^2 D3.
inline Trajectory solve_kdv(const Field& ic, double delta, const SolverConfig& config) {
    require(ic.grid().ndims() == 1 && ic.grid().all_periodic(), ErrorKind::unsupported_grid,
            "KdV needs a 1D periodic grid");
    require(ic.n_channels() == 1, ErrorKind::invalid_config, "KdV needs a single channel");
    const auto factors = config.output_factors(ic.grid());
    require(ic.all_finite(), ErrorKind::invalid_config, "initial condition is not finite");
    const Grid grid = ic.grid();
    KdvOperator op(grid, delta, config.dealias);
    const Eigen::MatrixXd D1 = op.derivative_matrix(1);
    const Eigen::MatrixXd D3 = op.derivative_matrix(3);
    const double d2 = op.delta2();
    auto jac = [D1, D3, d2](double, const ode::Vector& u) -> Eigen::MatrixXd {
        const ode::Vector ux = D1 * u;
        Eigen::MatrixXd J = -d2 * D3;
        J.noalias() -= u.asDiagonal() * D1;
        J.diagonal() -= ux;
        return J;
    };
    ode::Options opts;
    opts.rtol = config.rtol;
    opts.atol = config.atol;
    opts.max_steps = config.max_steps;
    ode::Vector y0 = Eigen::Map<const ode::Vector>(ic.values().data(), static_cast<Eigen::Index>(ic.values().size()));
    ode::Radau5 integ(op, jac, 0.0, std::move(y0), opts);
    integ.advance_to(config.burn_in_s);

    Trajectory traj(coarse_grid(grid, factors), {"u"});
    for (double t : config.record_times()) {
        integ.advance_to(config.burn_in_s + t);
        const ode::Vector& y = integ.y();
        if (!y.allFinite()) throw TimeIntegrationError(ErrorKind::divergence, integ.t(), "non-finite state");
        traj.push_back(t, downsample_values(grid, 1, std::span<const double>(y.data(), static_cast<std::size_t>(y.size())),
                                            factors, config.downsample_method));
    }
    return traj;
}

}  // namespace pdeinv
