#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>

namespace pdeinv::ode {

using Vector = Eigen::VectorXd;

struct Options {
    double rtol = 1e-6;
    double atol = 1e-6;
    double max_step = std::numeric_limits<double>::infinity();
    double first_step = 0.0;  // 0 picks one automatically
    std::size_t max_steps = 10'000'000;
};

struct Stats {
    std::size_t steps = 0;
    std::size_t rejected = 0;
    std::size_t rhs_evals = 0;
    std::size_t jac_evals = 0;
    std::size_t factorizations = 0;
};

/// Root-mean-square norm.
inline double rms(const Vector& v) {
    if (v.size() == 0) return 0.0;
    return v.norm() / std::sqrt(static_cast<double>(v.size()));
}

/// Starting step from the usual two-evaluation heuristic, for a method whose
/// local error scales like h^(order+1).
template <class Rhs>
double initial_step(Rhs& rhs, double t0, const Vector& y0, const Vector& f0, int order, double rtol, double atol,
                    Stats& stats) {
    const Vector scale = (atol + y0.array().abs() * rtol).matrix();
    const double d0 = rms((y0.array() / scale.array()).matrix());
    const double d1 = rms((f0.array() / scale.array()).matrix());
    const double h0 = (d0 < 1e-5 || d1 < 1e-5) ? 1e-6 : 0.01 * d0 / d1;
    const Vector y1 = y0 + h0 * f0;
    Vector f1(y0.size());
    rhs(t0 + h0, y1, f1);
    ++stats.rhs_evals;
    const double d2 = rms(((f1 - f0).array() / scale.array()).matrix()) / h0;
    const double h1 = (d1 <= 1e-15 && d2 <= 1e-15) ? std::max(1e-6, h0 * 1e-3)
                                                     : std::pow(0.01 / std::max(d1, d2), 1.0 / (order + 1));
    return std::min(100.0 * h0, h1);
}

inline double min_step(double t) {
    return 10.0 * std::abs(std::nextafter(t, std::numeric_limits<double>::infinity()) - t);
}

}  // namespace pdeinv::ode
