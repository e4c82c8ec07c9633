#pragma once

#include <cmath>
#include <vector>

#include "pdeinv/error.hpp"
#include "pdeinv/grid.hpp"
#include "pdeinv/ode/dopri5.hpp"
#include "pdeinv/params.hpp"
#include "pdeinv/solvers/config.hpp"
#include "pdeinv/solvers/downsample.hpp"

namespace pdeinv {

struct RdParams {
    double Du = 0.1;
    double Dv = 0.1;
    double k = 0.05;

    static RdParams from(const ParamVector& p) { return RdParams{p.at("Du"), p.at("Dv"), p.at("k")}; }
};

/// FitzHugh-Nagumo reactions.
inline double rd_reaction_u(double u, double v, double k) { return u - u * u * u - k - v; }
inline double rd_reaction_v(double u, double v) { return u - v; }

namespace detail {

// Cell-average finite volumes: the flux through each face is the central
// difference of the two adjacent cells. Non-periodic axes are closed
// (zero flux), equivalently a mirrored ghost cell.
inline void rd_rhs(const Grid& grid, const RdParams& p, const ode::Vector& y, ode::Vector& dy) {
    const std::size_t nx = grid.nx(), ny = grid.ny(), n = nx * ny;
    const double ix2 = 1.0 / (grid.spacing(0) * grid.spacing(0));
    const double iy2 = 1.0 / (grid.spacing(1) * grid.spacing(1));
    const bool px = grid.axis(0).periodic, py = grid.axis(1).periodic;
    const double* u = y.data();
    const double* v = y.data() + n;
    double* du = dy.data();
    double* dv = dy.data() + n;
    for (std::size_t i = 0; i < nx; ++i) {
        const std::size_t im = i == 0 ? (px ? nx - 1 : 0) : i - 1;
        const std::size_t ip = i + 1 == nx ? (px ? 0 : nx - 1) : i + 1;
        for (std::size_t j = 0; j < ny; ++j) {
            const std::size_t jm = j == 0 ? (py ? ny - 1 : 0) : j - 1;
            const std::size_t jp = j + 1 == ny ? (py ? 0 : ny - 1) : j + 1;
            const std::size_t c = i * ny + j;
            const double lu = (u[ip * ny + j] - 2.0 * u[c] + u[im * ny + j]) * ix2 +
                              (u[i * ny + jp] - 2.0 * u[c] + u[i * ny + jm]) * iy2;
            const double lv = (v[ip * ny + j] - 2.0 * v[c] + v[im * ny + j]) * ix2 +
                              (v[i * ny + jp] - 2.0 * v[c] + v[i * ny + jm]) * iy2;
            du[c] = p.Du * lu + rd_reaction_u(u[c], v[c], p.k);
            dv[c] = p.Dv * lv + rd_reaction_v(u[c], v[c]);
        }
    }
}

}  // namespace detail

/// FitzHugh-Nagumo reaction-diffusion on a 2D grid, integrated with
/// adaptive Dormand-Prince 5(4). Steps are shortened to land on every
/// recording time.
inline Trajectory solve_rd(const Field& ic, const ParamVector& params, const SolverConfig& config) {
    require(ic.grid().ndims() == 2, ErrorKind::unsupported_grid, "reaction-diffusion needs a 2D grid");
    require(ic.n_channels() == 2, ErrorKind::invalid_config, "reaction-diffusion needs channels [u, v]");
    const auto factors = config.output_factors(ic.grid());
    const RdParams p = RdParams::from(params);
    require(std::isfinite(p.Du) && std::isfinite(p.Dv) && std::isfinite(p.k) && p.Du >= 0.0 && p.Dv >= 0.0,
            ErrorKind::invalid_params, "Du, Dv must be finite and non-negative");
    require(ic.all_finite(), ErrorKind::invalid_config, "initial condition is not finite");

    const Grid grid = ic.grid();
    auto rhs = [grid, p](double, const ode::Vector& y, ode::Vector& dy) { detail::rd_rhs(grid, p, y, dy); };
    ode::Options opts;
    opts.rtol = config.rtol;
    opts.atol = config.atol;
    opts.max_steps = config.max_steps;
    ode::Vector y0 = Eigen::Map<const ode::Vector>(ic.values().data(), static_cast<Eigen::Index>(ic.values().size()));
    ode::Dopri5 integ(rhs, 0.0, std::move(y0), opts);
    integ.advance_to(config.burn_in_s);

    Trajectory traj(coarse_grid(grid, factors), {"u", "v"});
    for (double t : config.record_times()) {
        integ.advance_to(config.burn_in_s + t);
        const ode::Vector& y = integ.y();
        if (!y.allFinite()) throw TimeIntegrationError(ErrorKind::divergence, integ.t(), "non-finite state");
        traj.push_back(t, downsample_values(grid, 2, std::span<const double>(y.data(), static_cast<std::size_t>(y.size())),
                                            factors, config.downsample_method));
    }
    return traj;
}

}  // namespace pdeinv
