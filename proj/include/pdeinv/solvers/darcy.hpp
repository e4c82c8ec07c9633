#pragma once

#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include <cmath>
#include <limits>
#include <span>
#include <vector>

#include "pdeinv/error.hpp"
#include "pdeinv/grid.hpp"
#include "pdeinv/solvers/config.hpp"
#include "pdeinv/solvers/downsample.hpp"

namespace pdeinv {

inline double face_coefficient(double a, double b, FaceAverage avg) {
    return avg == FaceAverage::harmonic ? 2.0 * a * b / (a + b) : 0.5 * (a + b);
}

namespace detail {

inline void check_darcy_grid(const Grid& g) {
    require(g.ndims() == 2 && !g.axis(0).periodic && !g.axis(1).periodic, ErrorKind::unsupported_grid,
            "Darcy needs a 2D non-periodic grid");
    require(g.axis(0).centering == Centering::vertex && g.axis(1).centering == Centering::vertex,
            ErrorKind::unsupported_grid, "Darcy needs a vertex-centred grid (boundary nodes carry u = 0)");
}

}  // namespace detail

/// -div(a grad u) at interior nodes in flux form; boundary entries are 0.
inline std::vector<double> darcy_apply(const CoefficientField& a, std::span<const double> u,
                                       FaceAverage avg = FaceAverage::harmonic) {
    const Grid& g = a.grid();
    detail::check_darcy_grid(g);
    require(u.size() == g.size(), ErrorKind::invalid_config, "field does not match coefficient grid");
    const std::size_t nx = g.nx(), ny = g.ny();
    const double ix2 = 1.0 / (g.spacing(0) * g.spacing(0)), iy2 = 1.0 / (g.spacing(1) * g.spacing(1));
    std::vector<double> out(g.size(), 0.0);
    for (std::size_t i = 1; i + 1 < nx; ++i) {
        for (std::size_t j = 1; j + 1 < ny; ++j) {
            const std::size_t c = i * ny + j;
            const double ac = a.at(i, j);
            const double ae = face_coefficient(ac, a.at(i + 1, j), avg);
            const double aw = face_coefficient(ac, a.at(i - 1, j), avg);
            const double an = face_coefficient(ac, a.at(i, j + 1), avg);
            const double as = face_coefficient(ac, a.at(i, j - 1), avg);
            out[c] = -(ae * (u[c + ny] - u[c]) - aw * (u[c] - u[c - ny])) * ix2 -
                     (an * (u[c + 1] - u[c]) - as * (u[c] - u[c - 1])) * iy2;
        }
    }
    return out;
}

/// Steady Darcy flow -div(a grad u) = 1 with u = 0 on the boundary.
inline Field solve_darcy(const CoefficientField& a, const SolverConfig& config) {
    const Grid& g = a.grid();
    detail::check_darcy_grid(g);
    if (!config.internal_resolution.empty()) {
        require(config.internal_resolution == g.shape(), ErrorKind::invalid_config,
                "coefficient does not match internal_resolution");
    }
    const std::size_t nx = g.nx(), ny = g.ny();
    const std::size_t mx = nx - 2, my = ny - 2, m = mx * my;
    const double ix2 = 1.0 / (g.spacing(0) * g.spacing(0)), iy2 = 1.0 / (g.spacing(1) * g.spacing(1));
    const FaceAverage avg = config.face_average;
    auto unknown = [my](std::size_t i, std::size_t j) { return static_cast<int>((i - 1) * my + (j - 1)); };

    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(5 * m);
    for (std::size_t i = 1; i + 1 < nx; ++i) {
        for (std::size_t j = 1; j + 1 < ny; ++j) {
            const int r = unknown(i, j);
            const double ac = a.at(i, j);
            const double ae = face_coefficient(ac, a.at(i + 1, j), avg) * ix2;
            const double aw = face_coefficient(ac, a.at(i - 1, j), avg) * ix2;
            const double an = face_coefficient(ac, a.at(i, j + 1), avg) * iy2;
            const double as = face_coefficient(ac, a.at(i, j - 1), avg) * iy2;
            trip.emplace_back(r, r, ae + aw + an + as);
            if (i + 2 < nx) trip.emplace_back(r, unknown(i + 1, j), -ae);
            if (i > 1) trip.emplace_back(r, unknown(i - 1, j), -aw);
            if (j + 2 < ny) trip.emplace_back(r, unknown(i, j + 1), -an);
            if (j > 1) trip.emplace_back(r, unknown(i, j - 1), -as);
        }
    }
    Eigen::SparseMatrix<double> A(static_cast<int>(m), static_cast<int>(m));
    A.setFromTriplets(trip.begin(), trip.end());
    const Eigen::VectorXd f = Eigen::VectorXd::Ones(static_cast<Eigen::Index>(m));

    Eigen::SimplicialLLT<Eigen::SparseMatrix<double>> llt(A);
    Eigen::VectorXd x;
    if (llt.info() == Eigen::Success) x = llt.solve(f);
    const double fn = f.norm();
    double rel = x.size() == f.size() ? (A * x - f).norm() / fn : std::numeric_limits<double>::infinity();
    if (!(rel < config.linear_tol)) {
        // One step of iterative refinement before giving up.
        if (x.size() == f.size() && std::isfinite(rel)) {
            x += llt.solve(f - A * x);
            rel = (A * x - f).norm() / fn;
        }
        if (!(rel < config.linear_tol)) throw SolverFailure(rel, "Darcy linear solve did not reach tolerance");
    }

    Field u(g, {"u"});
    for (std::size_t i = 1; i + 1 < nx; ++i) {
        for (std::size_t j = 1; j + 1 < ny; ++j) u.at(0, i, j) = x(unknown(i, j));
    }
    if (!config.output_resolution.empty() && config.output_resolution != g.shape()) {
        return downsample(u, factors_for(g, config.output_resolution), config.downsample_method);
    }
    return u;
}

}  // namespace pdeinv
