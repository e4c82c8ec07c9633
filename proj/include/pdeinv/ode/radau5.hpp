#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <optional>
#include <utility>

#include "pdeinv/error.hpp"
#include "pdeinv/ode/common.hpp"

namespace pdeinv::ode {

namespace radau_detail {

inline const double S6 = std::sqrt(6.0);
inline const double C[3] = {(4.0 - S6) / 10.0, (4.0 + S6) / 10.0, 1.0};
inline const double E[3] = {(-13.0 - 7.0 * S6) / 3.0, (-13.0 + 7.0 * S6) / 3.0, -1.0 / 3.0};
inline const double MU_REAL = 3.0 + std::cbrt(9.0) - std::cbrt(3.0);
inline const std::complex<double> MU_COMPLEX(3.0 + 0.5 * (std::cbrt(3.0) - std::cbrt(9.0)),
                                             -0.5 * (std::pow(3.0, 5.0 / 6.0) + std::pow(3.0, 7.0 / 6.0)));
inline const double T[3][3] = {{0.09443876248897524, -0.14125529502095421, 0.03002919410514742},
                               {0.25021312296533332, 0.20412935229379994, -0.38294211275726192},
                               {1.0, 1.0, 0.0}};
inline const double TI[3][3] = {{4.17871859155190428, 0.32768282076106237, 0.52337644549944951},
                                {-4.17871859155190428, -0.32768282076106237, 0.47662355450055044},
                                {0.50287263494578682, -2.57192694985560522, 0.59603920482822492}};
// Dense output: y(t_old + x h) = y_old + sum_j Q_j x^(j+1), Q = Z^T P.
inline const double P[3][3] = {{13.0 / 3.0 + 7.0 * S6 / 3.0, -23.0 / 3.0 - 22.0 * S6 / 3.0, 10.0 / 3.0 + 5.0 * S6},
                               {13.0 / 3.0 - 7.0 * S6 / 3.0, -23.0 / 3.0 + 22.0 * S6 / 3.0, 10.0 / 3.0 - 5.0 * S6},
                               {1.0 / 3.0, -8.0 / 3.0, 10.0 / 3.0}};
constexpr int NEWTON_MAXITER = 6;
constexpr double MIN_FACTOR = 0.2;
constexpr double MAX_FACTOR = 10.0;

// NaN h_old / err_old means no previous accepted step.
inline double predict_factor(double h, double h_old, double err, double err_old) {
    double multiplier = 1.0;
    if (!std::isnan(h_old) && !std::isnan(err_old) && err != 0.0) multiplier = h / h_old * std::pow(err_old / err, 0.25);
    if (err == 0.0) return std::numeric_limits<double>::infinity();
    return std::min(1.0, multiplier) * std::pow(err, -0.25);
}

}  // namespace radau_detail

/// Implicit Radau IIA of order 5 with simplified Newton iterations, error
/// estimation and step control in the form popularized by Hairer & Wanner's
/// RADAU5 (and SciPy's port of it).
///
/// Rhs signature: void(double t, const Vector& y, Vector& dydt).
/// Jac signature: Eigen::MatrixXd(double t, const Vector& y).
template <class Rhs, class Jac>
class Radau5 {
public:
    Radau5(Rhs rhs, Jac jac, double t0, Vector y0, Options opts)
        : rhs_(std::move(rhs)), jac_(std::move(jac)), opts_(opts), t_(t0), y_(std::move(y0)) {
        require(y_.allFinite(), ErrorKind::integration_failure, "initial state is not finite");
        n_ = y_.size();
        f_.resize(n_);
        eval(t_, y_, f_);
        h_abs_ = opts_.first_step > 0.0 ? opts_.first_step
                                        : initial_step(rhs_, t_, y_, f_, 3, opts_.rtol, opts_.atol, stats_);
        const double eps = std::numeric_limits<double>::epsilon();
        newton_tol_ = std::max(10.0 * eps / opts_.rtol, std::min(0.03, std::sqrt(opts_.rtol)));
        J_ = jac_eval(t_, y_);
        current_jac_ = true;
        I_ = Eigen::MatrixXd::Identity(n_, n_);
    }

    double t() const { return t_; }
    const Vector& y() const { return y_; }
    const Stats& stats() const { return stats_; }

    /// Integrates to exactly t_end (the final step is shortened to land on it).
    void advance_to(double t_end) {
        while (t_ < t_end) step(t_end);
    }

private:
    using Lu = Eigen::PartialPivLU<Eigen::MatrixXd>;
    using LuC = Eigen::PartialPivLU<Eigen::MatrixXcd>;

    void eval(double t, const Vector& y, Vector& out) {
        rhs_(t, y, out);
        ++stats_.rhs_evals;
    }

    Eigen::MatrixXd jac_eval(double t, const Vector& y) {
        ++stats_.jac_evals;
        return jac_(t, y);
    }

    void factorize(double h) {
        using namespace radau_detail;
        lu_real_.emplace((MU_REAL / h) * I_ - J_);
        Eigen::MatrixXcd mc = (MU_COMPLEX / h) * I_.cast<std::complex<double>>() - J_.cast<std::complex<double>>();
        lu_complex_.emplace(mc);
        stats_.factorizations += 2;
    }

    void drop_lu() {
        lu_real_.reset();
        lu_complex_.reset();
    }

    struct Collocation {
        bool converged = false;
        int iterations = 0;
        Eigen::MatrixXd Z;
        double rate = 0.0;
        bool has_rate = false;
    };

    Collocation solve_collocation(double t, double h, const Eigen::MatrixXd& Z0, const Vector& scale) {
        using namespace radau_detail;
        const double m_real = MU_REAL / h;
        const std::complex<double> m_complex = MU_COMPLEX / h;
        Eigen::MatrixXd W(n_, 3), Z = Z0, F(n_, 3), dW(n_, 3);
        for (int r = 0; r < 3; ++r) W.col(r) = TI[r][0] * Z0.col(0) + TI[r][1] * Z0.col(1) + TI[r][2] * Z0.col(2);
        Collocation out;
        std::optional<double> dw_norm_old;
        Vector yi(n_), fi(n_);
        for (int k = 0; k < NEWTON_MAXITER; ++k) {
            out.iterations = k + 1;
            bool finite = true;
            for (int i = 0; i < 3; ++i) {
                yi = y_ + Z.col(i);
                eval(t + C[i] * h, yi, fi);
                F.col(i) = fi;
                finite = finite && fi.allFinite();
            }
            if (!finite) break;
            const Vector f_real = TI[0][0] * F.col(0) + TI[0][1] * F.col(1) + TI[0][2] * F.col(2) - m_real * W.col(0);
            Eigen::VectorXcd f_complex(n_);
            for (Eigen::Index p = 0; p < n_; ++p) {
                std::complex<double> acc = 0.0;
                for (int j = 0; j < 3; ++j) acc += F(p, j) * std::complex<double>(TI[1][j], TI[2][j]);
                f_complex(p) = acc - m_complex * std::complex<double>(W(p, 1), W(p, 2));
            }
            const Vector dw_real = lu_real_->solve(f_real);
            const Eigen::VectorXcd dw_complex = lu_complex_->solve(f_complex);
            dW.col(0) = dw_real;
            dW.col(1) = dw_complex.real();
            dW.col(2) = dw_complex.imag();
            double acc = 0.0;
            for (int c = 0; c < 3; ++c) acc += (dW.col(c).array() / scale.array()).square().sum();
            const double dw_norm = std::sqrt(acc / static_cast<double>(3 * n_));
            if (dw_norm_old) {
                out.rate = dw_norm / *dw_norm_old;
                out.has_rate = true;
            }
            if (out.has_rate &&
                (out.rate >= 1.0 ||
                 std::pow(out.rate, NEWTON_MAXITER - k) / (1.0 - out.rate) * dw_norm > newton_tol_)) {
                break;
            }
            W += dW;
            for (int r = 0; r < 3; ++r) Z.col(r) = T[r][0] * W.col(0) + T[r][1] * W.col(1) + T[r][2] * W.col(2);
            if (dw_norm == 0.0 || (out.has_rate && out.rate / (1.0 - out.rate) * dw_norm < newton_tol_)) {
                out.converged = true;
                break;
            }
            dw_norm_old = dw_norm;
        }
        out.Z = std::move(Z);
        return out;
    }

    void step(double t_bound) {
        using namespace radau_detail;
        if (stats_.steps + stats_.rejected >= opts_.max_steps) {
            throw TimeIntegrationError(ErrorKind::integration_failure, t_, "step budget exhausted");
        }
        const double min_h = min_step(t_);
        double h_abs = h_abs_;
        double h_abs_old = h_abs_old_, err_old = err_old_;
        if (h_abs > opts_.max_step) {
            h_abs = opts_.max_step;
            h_abs_old = err_old = std::numeric_limits<double>::quiet_NaN();
        } else if (h_abs < min_h) {
            h_abs = min_h;
            h_abs_old = err_old = std::numeric_limits<double>::quiet_NaN();
        }
        bool rejected = false;
        Collocation col;
        double t_new = t_, h = 0.0, err_norm = 0.0, safety = 0.9;
        Vector y_new(n_);
        for (;;) {
            if (h_abs < min_h) {
                throw TimeIntegrationError(ErrorKind::integration_failure, t_, "step size underflow");
            }
            t_new = t_ + h_abs;
            if (t_new > t_bound) t_new = t_bound;
            h = t_new - t_;
            h_abs = std::abs(h);

            Eigen::MatrixXd Z0 = Eigen::MatrixXd::Zero(n_, 3);
            if (dense_) {
                for (int i = 0; i < 3; ++i) Z0.col(i) = dense_at(t_ + h * C[i]) - y_;
            }
            Vector scale = (opts_.atol + y_.array().abs() * opts_.rtol).matrix();
            bool converged = false;
            while (!converged) {
                if (!lu_real_) factorize(h);
                col = solve_collocation(t_, h, Z0, scale);
                converged = col.converged;
                if (!converged) {
                    if (current_jac_) break;
                    J_ = jac_eval(t_, y_);
                    current_jac_ = true;
                    drop_lu();
                }
            }
            if (!converged) {
                h_abs *= 0.5;
                drop_lu();
                ++stats_.rejected;
                continue;
            }
            y_new = y_ + col.Z.col(2);
            const Vector ZE = (col.Z.col(0) * E[0] + col.Z.col(1) * E[1] + col.Z.col(2) * E[2]) / h;
            Vector error = lu_real_->solve(f_ + ZE);
            scale = (opts_.atol + y_.array().abs().max(y_new.array().abs()) * opts_.rtol).matrix();
            err_norm = rms((error.array() / scale.array()).matrix());
            safety = 0.9 * (2 * NEWTON_MAXITER + 1) / (2 * NEWTON_MAXITER + col.iterations);
            if (rejected && err_norm > 1.0) {
                Vector fe(n_);
                eval(t_, y_ + error, fe);
                error = lu_real_->solve(fe + ZE);
                err_norm = rms((error.array() / scale.array()).matrix());
            }
            if (!std::isfinite(err_norm)) {
                if (!y_new.allFinite()) {
                    throw TimeIntegrationError(ErrorKind::divergence, t_, "state became non-finite");
                }
                err_norm = 1e10;
            }
            if (err_norm > 1.0) {
                const double factor = predict_factor(h_abs, h_abs_old, err_norm, err_old);
                h_abs *= std::max(MIN_FACTOR, safety * factor);
                drop_lu();
                rejected = true;
                ++stats_.rejected;
            } else {
                break;
            }
        }
        const bool recompute_jac = col.iterations > 2 && col.has_rate && col.rate > 1e-3;
        double factor = predict_factor(h_abs, h_abs_old, err_norm, err_old);
        factor = std::min(MAX_FACTOR, safety * factor);
        if (!recompute_jac && factor < 1.2) {
            factor = 1.0;
        } else {
            drop_lu();
        }
        Vector f_new(n_);
        eval(t_new, y_new, f_new);
        if (recompute_jac) {
            J_ = jac_eval(t_new, y_new);
            current_jac_ = true;
        } else {
            current_jac_ = false;
        }
        h_abs_old_ = h_abs_;
        err_old_ = err_norm;
        h_abs_ = h_abs * factor;
        // Dense output of the accepted step.
        Q_.resize(n_, 3);
        for (int j = 0; j < 3; ++j) Q_.col(j) = col.Z.col(0) * P[0][j] + col.Z.col(1) * P[1][j] + col.Z.col(2) * P[2][j];
        dense_t_old_ = t_;
        dense_h_ = h;
        y_old_ = y_;
        dense_ = true;
        t_ = t_new;
        y_ = std::move(y_new);
        f_ = std::move(f_new);
        ++stats_.steps;
    }

    Vector dense_at(double t) const {
        const double x = (t - dense_t_old_) / dense_h_;
        return y_old_ + Q_.col(0) * x + Q_.col(1) * (x * x) + Q_.col(2) * (x * x * x);
    }

    Rhs rhs_;
    Jac jac_;
    Options opts_;
    Stats stats_;
    Eigen::Index n_ = 0;
    double t_;
    Vector y_, f_;
    double h_abs_ = 0.0;
    double h_abs_old_ = std::numeric_limits<double>::quiet_NaN();
    double err_old_ = std::numeric_limits<double>::quiet_NaN();
    double newton_tol_ = 0.0;
    Eigen::MatrixXd J_, I_;
    bool current_jac_ = false;
    std::optional<Lu> lu_real_;
    std::optional<LuC> lu_complex_;
    bool dense_ = false;
    Eigen::MatrixXd Q_;
    Vector y_old_;
    double dense_t_old_ = 0.0, dense_h_ = 1.0;
};

}  // namespace pdeinv::ode
