#pragma once

#include <algorithm>
#include <cmath>
#include <utility>

#include "pdeinv/error.hpp"
#include "pdeinv/ode/common.hpp"

namespace pdeinv::ode {

/// Adaptive Dormand-Prince 5(4) with FSAL and a plain I-controller.
///
/// `advance_to` lands exactly on the requested time by shortening the last
/// step; the unclamped step proposal is kept for the next call.
/// Rhs signature: void(double t, const Vector& y, Vector& dydt).
template <class Rhs>
class Dopri5 {
public:
    Dopri5(Rhs rhs, double t0, Vector y0, Options opts)
        : rhs_(std::move(rhs)), opts_(opts), t_(t0), y_(std::move(y0)) {
        require(y_.allFinite(), ErrorKind::integration_failure, "initial state is not finite");
        f_.resize(y_.size());
        eval(t_, y_, f_);
        h_ = opts_.first_step > 0.0 ? opts_.first_step
                                    : initial_step(rhs_, t_, y_, f_, 4, opts_.rtol, opts_.atol, stats_);
        h_ = std::min(h_, opts_.max_step);
        for (auto* k : {&k2_, &k3_, &k4_, &k5_, &k6_, &k7_, &tmp_, &ynew_}) k->resize(y_.size());
    }

    double t() const { return t_; }
    const Vector& y() const { return y_; }
    const Stats& stats() const { return stats_; }

    void advance_to(double t_end) {
        while (t_ < t_end) {
            const double remaining = t_end - t_;
            const bool clamp = 1.01 * h_ >= remaining;
            double h = clamp ? remaining : h_;
            const double h_used = step(h);
            if (clamp && h_used >= remaining) {
                t_ = t_end;
            }
        }
    }

private:
    void eval(double t, const Vector& y, Vector& out) {
        rhs_(t, y, out);
        ++stats_.rhs_evals;
    }

    // Takes one accepted step of size <= h; returns the size taken.
    double step(double h) {
        constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
        constexpr double a21 = 1.0 / 5;
        constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
        constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
        constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561, a54 = -212.0 / 729;
        constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                         a65 = -5103.0 / 18656;
        constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784, b6 = 11.0 / 84;
        constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                         e6 = 22.0 / 525, e7 = -1.0 / 40;
        const bool clamped = h < h_;
        for (;;) {
            if (stats_.steps + stats_.rejected >= opts_.max_steps) {
                throw TimeIntegrationError(ErrorKind::integration_failure, t_, "step budget exhausted");
            }
            if (h < min_step(t_)) {
                throw TimeIntegrationError(ErrorKind::integration_failure, t_, "step size underflow");
            }
            tmp_ = y_ + h * a21 * f_;
            eval(t_ + c2 * h, tmp_, k2_);
            tmp_ = y_ + h * (a31 * f_ + a32 * k2_);
            eval(t_ + c3 * h, tmp_, k3_);
            tmp_ = y_ + h * (a41 * f_ + a42 * k2_ + a43 * k3_);
            eval(t_ + c4 * h, tmp_, k4_);
            tmp_ = y_ + h * (a51 * f_ + a52 * k2_ + a53 * k3_ + a54 * k4_);
            eval(t_ + c5 * h, tmp_, k5_);
            tmp_ = y_ + h * (a61 * f_ + a62 * k2_ + a63 * k3_ + a64 * k4_ + a65 * k5_);
            eval(t_ + h, tmp_, k6_);
            ynew_ = y_ + h * (b1 * f_ + b3 * k3_ + b4 * k4_ + b5 * k5_ + b6 * k6_);
            eval(t_ + h, ynew_, k7_);
            tmp_ = h * (e1 * f_ + e3 * k3_ + e4 * k4_ + e5 * k5_ + e6 * k6_ + e7 * k7_);
            const auto scale = opts_.atol + y_.array().abs().max(ynew_.array().abs()) * opts_.rtol;
            const double err = rms((tmp_.array() / scale).matrix());
            if (!std::isfinite(err)) {
                if (!ynew_.allFinite() && h <= min_step(t_) * 1e3) {
                    throw TimeIntegrationError(ErrorKind::divergence, t_, "state became non-finite");
                }
                ++stats_.rejected;
                h *= 0.2;
                continue;
            }
            if (err <= 1.0) {
                const double factor = err == 0.0 ? 10.0 : std::clamp(0.9 * std::pow(err, -0.2), 0.2, 10.0);
                const double proposal = std::min(h * factor, opts_.max_step);
                if (!clamped || proposal < h_) h_ = proposal;
                t_ += h;
                y_.swap(ynew_);
                f_.swap(k7_);
                ++stats_.steps;
                return h;
            }
            ++stats_.rejected;
            h *= std::max(0.2, 0.9 * std::pow(err, -0.2));
            h_ = h;
        }
    }

    Rhs rhs_;
    Options opts_;
    Stats stats_;
    double t_;
    double h_ = 0.0;
    Vector y_, f_;
    Vector k2_, k3_, k4_, k5_, k6_, k7_, tmp_, ynew_;
};

}  // namespace pdeinv::ode
