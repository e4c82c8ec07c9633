#pragma once

#include <cmath>
#include <algorithm>
#include <complex>
#include <vector>

#include "pdeinv/error.hpp"
#include "pdeinv/grid.hpp"
#include "pdeinv/solvers/config.hpp"
#include "pdeinv/solvers/downsample.hpp"
#include "pdeinv/spectral.hpp"

namespace pdeinv {

/// Coefficients of  w_t + u.grad w = nu lap w - drag w + f(y),
/// with Kolmogorov forcing f = -k_f cos(k_f y) when forcing_k > 0.
struct VorticityModel {
    double nu = 1e-3;
    double drag = 0.0;
    double forcing_k = 0.0;
};

/// Pseudo-spectral vorticity integrator. The linear (viscous + drag) part is
/// always trapezoidal (Crank-Nicolson); advection is either second-order
/// Adams-Bashforth (Euler first step) or the three-stage low-storage
/// Runge-Kutta of Spalart, Moser & Rogers (1991), whose explicit part is
/// stable on the imaginary axis. Advection is evaluated with 2/3-rule
/// truncation when dealiasing is on.
class VorticityIntegrator {
public:
    VorticityIntegrator(const Grid& grid, VorticityModel model, bool dealias,
                        NsScheme scheme = NsScheme::cn_ab2)
        : sg_(grid), model_(model), dealias_(dealias), scheme_(scheme) {
        require(grid.ndims() == 2 && grid.all_periodic(), ErrorKind::unsupported_grid,
                "vorticity solver needs a periodic 2D grid");
        require(model.nu > 0.0 && std::isfinite(model.nu), ErrorKind::invalid_params, "viscosity must be positive");
        const std::size_t m = sg_.size();
        w_hat_.assign(m, 0.0);
        n_prev_.assign(m, 0.0);
        forcing_hat_.assign(m, 0.0);
        uh_.resize(m);
        vh_.resize(m);
        wxh_.resize(m);
        wyh_.resize(m);
        u_.resize(grid.size());
        v_.resize(grid.size());
        wx_.resize(grid.size());
        wy_.resize(grid.size());
        if (model.forcing_k > 0.0) {
            std::vector<double> f(grid.size());
            const Axis& ay = grid.axis(1);
            for (std::size_t i = 0; i < grid.nx(); ++i) {
                for (std::size_t j = 0; j < grid.ny(); ++j) {
                    f[i * grid.ny() + j] = -model.forcing_k * std::cos(model.forcing_k * ay.coord(j));
                }
            }
            forcing_hat_ = sg_.forward(f);
        }
    }

    void set_state(const Field& w) {
        require(w.grid() == sg_.grid(), ErrorKind::invalid_config, "state grid mismatch");
        w_hat_ = sg_.forward(w.channel(0));
        have_prev_ = false;
    }

    Field state() {
        Field w(sg_.grid(), {"w"});
        sg_.fft().inverse(w_hat_, w.channel(0));
        return w;
    }

    double time() const { return time_; }
    void set_time(double t) { time_ = t; }

    /// Advances `steps` steps of size dt. Throws a divergence error on a
    /// non-finite state. A change of dt uses the variable-step AB2 weights.
    void advance(double dt, std::size_t steps) {
        for (std::size_t s = 0; s < steps; ++s) {
            if (scheme_ == NsScheme::cn_ab2) {
                step_ab2(dt);
            } else {
                step_rk3(dt);
            }
            time_ += dt;
            double check = 0.0;
            for (const auto& c : w_hat_) check += std::abs(c.real()) + std::abs(c.imag());
            if (!std::isfinite(check)) {
                throw TimeIntegrationError(ErrorKind::divergence, time_, "vorticity became non-finite");
            }
        }
    }

    /// max(|u_x|/dx + |u_y|/dy) of the current state, so that dt times this
    /// is the advective CFL number.
    double cfl_rate() {
        std::vector<std::complex<double>> scratch(sg_.size());
        nonlinear(scratch);
        return last_rate_;
    }

private:
    double linear_symbol(std::size_t idx) const { return -model_.nu * sg_.k2(idx) - model_.drag; }

    void step_ab2(double dt) {
        const std::size_t m = sg_.size();
        if (lin_dt_ != dt) {
            lin_dt_ = dt;
            explicit_factor_.resize(m);
            implicit_factor_.resize(m);
            for (std::size_t idx = 0; idx < m; ++idx) {
                const double L = linear_symbol(idx);
                explicit_factor_[idx] = 1.0 + 0.5 * dt * L;
                implicit_factor_[idx] = 1.0 / (1.0 - 0.5 * dt * L);
            }
        }
        n_now_.resize(m);
        nonlinear(n_now_);
        const double r = have_prev_ ? dt / prev_dt_ : 0.0;
        const double a = 1.0 + 0.5 * r;
        const double b = -0.5 * r;
        for (std::size_t idx = 0; idx < m; ++idx) {
            const std::complex<double> rhs =
                explicit_factor_[idx] * w_hat_[idx] + dt * (a * n_now_[idx] + b * n_prev_[idx] + forcing_hat_[idx]);
            w_hat_[idx] = rhs * implicit_factor_[idx];
        }
        n_prev_.swap(n_now_);
        have_prev_ = true;
        prev_dt_ = dt;
    }

    void step_rk3(double dt) {
        static constexpr double gamma[3] = {8.0 / 15.0, 5.0 / 12.0, 3.0 / 4.0};
        static constexpr double zeta[3] = {0.0, -17.0 / 60.0, -5.0 / 12.0};
        static constexpr double alpha[3] = {29.0 / 96.0, -3.0 / 40.0, 1.0 / 6.0};
        static constexpr double beta[3] = {37.0 / 160.0, 5.0 / 24.0, 1.0 / 6.0};
        const std::size_t m = sg_.size();
        if (lin_dt_ != dt) {
            lin_dt_ = dt;
            rk_explicit_.assign(3 * m, 0.0);
            rk_implicit_.assign(3 * m, 0.0);
            for (int k = 0; k < 3; ++k) {
                for (std::size_t idx = 0; idx < m; ++idx) {
                    const double L = linear_symbol(idx);
                    rk_explicit_[k * m + idx] = 1.0 + alpha[k] * dt * L;
                    rk_implicit_[k * m + idx] = 1.0 / (1.0 - beta[k] * dt * L);
                }
            }
        }
        n_now_.resize(m);
        for (int k = 0; k < 3; ++k) {
            nonlinear(n_now_);
            const double g = gamma[k], z = zeta[k], f = gamma[k] + zeta[k];
            for (std::size_t idx = 0; idx < m; ++idx) {
                const std::complex<double> rhs = rk_explicit_[k * m + idx] * w_hat_[idx] +
                                                 dt * (g * n_now_[idx] + z * n_prev_[idx] + f * forcing_hat_[idx]);
                w_hat_[idx] = rhs * rk_implicit_[k * m + idx];
            }
            n_prev_.swap(n_now_);
        }
    }

    // N = -(u . grad w), returned in spectral space.
    void nonlinear(std::vector<std::complex<double>>& out) {
        const std::size_t m = sg_.size();
        const std::complex<double> I(0.0, 1.0);
        for (std::size_t idx = 0; idx < m; ++idx) {
            std::complex<double> w = w_hat_[idx];
            if (dealias_ && !sg_.dealias_keep(idx)) w = 0.0;
            const double k2 = sg_.k2(idx);
            const std::complex<double> psi = k2 > 0.0 ? w / k2 : 0.0;
            uh_[idx] = I * sg_.dky(idx) * psi;
            vh_[idx] = -I * sg_.dkx(idx) * psi;
            wxh_[idx] = I * sg_.dkx(idx) * w;
            wyh_[idx] = I * sg_.dky(idx) * w;
        }
        auto& fft = sg_.fft();
        fft.inverse(uh_, u_);
        fft.inverse(vh_, v_);
        fft.inverse(wxh_, wx_);
        fft.inverse(wyh_, wy_);
        const double ihx = 1.0 / sg_.grid().spacing(0), ihy = 1.0 / sg_.grid().spacing(1);
        double rate = 0.0;
        for (std::size_t p = 0; p < u_.size(); ++p) {
            rate = std::max(rate, std::abs(u_[p]) * ihx + std::abs(v_[p]) * ihy);
            u_[p] = -(u_[p] * wx_[p] + v_[p] * wy_[p]);
        }
        last_rate_ = rate;
        fft.forward(u_, out);
        if (dealias_) {
            for (std::size_t idx = 0; idx < m; ++idx) {
                if (!sg_.dealias_keep(idx)) out[idx] = 0.0;
            }
        }
    }

    SpectralGrid sg_;
    VorticityModel model_;
    bool dealias_;
    NsScheme scheme_;
    double time_ = 0.0;
    bool have_prev_ = false;
    double prev_dt_ = 0.0;
    double lin_dt_ = -1.0;
    double last_rate_ = 0.0;
    std::vector<std::complex<double>> w_hat_, n_prev_, forcing_hat_;
    std::vector<std::complex<double>> uh_, vh_, wxh_, wyh_;
    std::vector<double> u_, v_, wx_, wy_;
    std::vector<double> explicit_factor_, implicit_factor_, rk_explicit_, rk_implicit_;
    std::vector<std::complex<double>> n_now_;
};

namespace detail {

inline std::size_t step_count(double span, double dt) {
    if (span <= 0.0) return 0;
    return static_cast<std::size_t>(std::llround(std::ceil(span / dt - 1e-9)));
}

// Advances by exactly `span` in equal substeps no longer than dt_max and
// within the advective CFL limit of the state at the start of the span.
inline void advance_span(VorticityIntegrator& integ, double span, double dt_max, double cfl) {
    if (span <= 0.0) return;
    std::size_t n = step_count(span, dt_max);
    if (cfl > 0.0) n = std::max(n, step_count(span * integ.cfl_rate(), cfl));
    n = std::max<std::size_t>(n, 1);
    integ.advance(span / static_cast<double>(n), n);
}

}  // namespace detail

/// Burn-in, then record at the configured cadence and downsample.
///
/// config.dt is the largest step taken; each recording interval (and each
/// burn-in chunk of the same length) is split into equal substeps, more of
/// them when the advective CFL number would exceed config.cfl.
inline Trajectory integrate_vorticity(const Field& ic_w, const VorticityModel& model, const SolverConfig& config) {
    require(ic_w.grid().ndims() == 2 && ic_w.grid().size() > 0, ErrorKind::invalid_config,
            "vorticity initial condition must be a non-empty 2D field");
    const auto factors = config.output_factors(ic_w.grid());
    require(config.dt > 0.0, ErrorKind::invalid_config, "NS solver needs dt > 0");
    require(ic_w.all_finite(), ErrorKind::invalid_config, "initial condition is not finite");
    const auto record = config.record_times();

    VorticityIntegrator integ(ic_w.grid(), model, config.dealias, config.ns_scheme);
    Field w0(ic_w.grid(), {"w"}, std::vector<double>(ic_w.channel(0).begin(), ic_w.channel(0).end()));
    integ.set_state(w0);
    const double chunk = config.record_interval_s;
    const std::size_t burn_chunks = detail::step_count(config.burn_in_s, chunk);
    for (std::size_t b = 0; b < burn_chunks; ++b) {
        const double span = std::min(chunk, config.burn_in_s - static_cast<double>(b) * chunk);
        detail::advance_span(integ, span, config.dt, config.cfl);
    }

    const Grid out_grid = coarse_grid(ic_w.grid(), factors);
    Trajectory traj(out_grid, {"w"});
    for (std::size_t k = 0; k < record.size(); ++k) {
        if (k > 0) detail::advance_span(integ, record[k] - record[k - 1], config.dt, config.cfl);
        Field w = integ.state();
        if (!w.all_finite()) throw TimeIntegrationError(ErrorKind::divergence, integ.time(), "non-finite frame");
        traj.push_back(record[k], downsample_values(w.grid(), 1, w.values(), factors, config.downsample_method));
    }
    return traj;
}

inline Trajectory solve_ns_unforced(const Field& ic_w, double nu, const SolverConfig& config) {
    return integrate_vorticity(ic_w, VorticityModel{nu, 0.0, 0.0}, config);
}

/// Kolmogorov-forced flow with linear drag (defaults: drag 0.1, k_f = 2).
inline Trajectory solve_ns_forced(const Field& ic_w, double nu, const SolverConfig& config, double drag = 0.1,
                                  double forcing_k = 2.0) {
    return integrate_vorticity(ic_w, VorticityModel{nu, drag, forcing_k}, config);
}

}  // namespace pdeinv
