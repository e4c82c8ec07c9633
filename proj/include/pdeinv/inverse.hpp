#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <boost/math/tools/minima.hpp>

#include "pdeinv/error.hpp"
#include "pdeinv/fd.hpp"
#include "pdeinv/residual.hpp"

namespace pdeinv {

enum class InverseMethod { lsq, scan_refine, pixelwise };

inline std::string_view to_string(InverseMethod m) {
    switch (m) {
    case InverseMethod::lsq: return "lsq";
    case InverseMethod::scan_refine: return "scan_refine";
    case InverseMethod::pixelwise: return "pixelwise";
    }
    return "unknown";
}

struct InverseDiagnostics {
    std::size_t n_evals = 0;
    double bracket_lo = std::numeric_limits<double>::quiet_NaN();
    double bracket_hi = std::numeric_limits<double>::quiet_NaN();
    /// <g, g> / points for the closed form, g the residual direction of the slot.
    double gram = std::numeric_limits<double>::quiet_NaN();
};

struct InverseEstimate {
    ParamVector phi_hat;
    double residual_at_hat = 0.0;
    InverseMethod method = InverseMethod::lsq;
    InverseDiagnostics diagnostics;
};

namespace detail {

/// The single slot of `system` absent from `known`.
inline std::string unknown_slot(const SystemSpec& system, const ParamVector& known) {
    std::vector<std::string> missing;
    for (const auto& p : system.params) {
        if (!known.has(p.name)) missing.push_back(p.name);
    }
    require(missing.size() == 1, ErrorKind::invalid_params,
            "exactly one unknown parameter slot required, found " + std::to_string(missing.size()));
    return missing.front();
}

/// Residual terms reduced to r(c) = r0 + c g over the interior, with c the
/// unknown slot's coefficient.
struct ReducedResidual {
    std::vector<double> r0;
    std::vector<double> g;

    double norm_at(double c) const {
        double s = 0.0;
        for (std::size_t i = 0; i < r0.size(); ++i) {
            const double v = r0[i] + c * g[i];
            s += v * v;
        }
        return s / static_cast<double>(r0.size());
    }
};

inline ReducedResidual reduce(const ResidualTerms& t, const ParamVector& known, const std::string& slot) {
    const auto mask = fd::interior_mask(t.grid);
    const std::size_t n = t.grid.size();
    std::vector<double> full_r0 = t.base;
    for (const auto& [name, d] : t.directions) {
        if (name == slot) continue;
        const double c = slot_coefficient(name, known.at(name));
        for (std::size_t i = 0; i < full_r0.size(); ++i) full_r0[i] += c * d[i];
    }
    const auto& dir = t.direction(slot);
    ReducedResidual red;
    for (std::size_t i = 0; i < full_r0.size(); ++i) {
        if (!mask[i % n]) continue;
        red.r0.push_back(full_r0[i]);
        red.g.push_back(dir[i]);
    }
    require(!red.r0.empty(), ErrorKind::degenerate_grid, "grid has no interior points");
    return red;
}

// Slot value whose coefficient is c (inverse of slot_coefficient).
inline double slot_value(const std::string& slot, double c) {
    return slot == "delta" ? std::sqrt(std::max(0.0, c)) : c;
}

inline InverseEstimate finish(ParamVector phi, const std::string& slot, double value, double residual,
                              InverseMethod method, InverseDiagnostics diag) {
    require(std::isfinite(value), ErrorKind::ill_posed, "estimate for '" + slot + "' is not finite");
    phi.set(slot, value);
    return InverseEstimate{std::move(phi), residual, method, diag};
}

}  // namespace detail

/// Closed-form least squares for the one slot missing from `known`; the
/// residual is affine in the slot's coefficient (delta^2 for KdV).
inline InverseEstimate estimate_linear_lsq(const Trajectory& window, const SystemSpec& system,
                                           const ParamVector& known = {}) {
    const std::string slot = detail::unknown_slot(system, known);
    const auto red = detail::reduce(residual_terms(window, system), known, slot);
    double gg = 0.0, gr = 0.0;
    for (std::size_t i = 0; i < red.g.size(); ++i) {
        gg += red.g[i] * red.g[i];
        gr += red.g[i] * red.r0[i];
    }
    const double points = static_cast<double>(red.g.size());
    require(gg >= 1e-12 * points, ErrorKind::ill_posed,
            "residual does not depend on '" + slot + "' for this window");
    const double c = -gr / gg;
    const double value = detail::slot_value(slot, c);
    InverseDiagnostics diag;
    diag.n_evals = 1;
    diag.gram = gg / points;
    return detail::finish(known, slot, value, red.norm_at(slot_coefficient(slot, value)), InverseMethod::lsq, diag);
}

/// Closed-form least squares for every slot missing from `known` at once:
/// the normal equations of r0 + sum_p c_p g_p over the interior.
inline InverseEstimate estimate_joint_lsq(const Trajectory& window, const SystemSpec& system,
                                          const ParamVector& known = {}) {
    std::vector<std::string> slots;
    for (const auto& p : system.params)
        if (!known.has(p.name)) slots.push_back(p.name);
    require(!slots.empty(), ErrorKind::invalid_params, "no unknown parameter slot");
    const auto terms = residual_terms(window, system);
    const auto mask = fd::interior_mask(terms.grid);
    const std::size_t n = terms.grid.size();
    std::vector<double> r0 = terms.base;
    for (const auto& [name, d] : terms.directions) {
        if (!known.has(name)) continue;
        const double c = slot_coefficient(name, known.at(name));
        for (std::size_t i = 0; i < r0.size(); ++i) r0[i] += c * d[i];
    }
    const std::size_t m = slots.size();
    Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(m, m);
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(m);
    std::vector<const std::vector<double>*> dirs;
    for (const auto& s : slots) dirs.push_back(&terms.direction(s));
    double points = 0.0;
    for (std::size_t i = 0; i < r0.size(); ++i) {
        if (!mask[i % n]) continue;
        points += 1.0;
        for (std::size_t a = 0; a < m; ++a) {
            rhs(a) -= (*dirs[a])[i] * r0[i];
            for (std::size_t b = 0; b <= a; ++b) gram(a, b) += (*dirs[a])[i] * (*dirs[b])[i];
        }
    }
    require(points > 0.0, ErrorKind::degenerate_grid, "grid has no interior points");
    for (std::size_t a = 0; a < m; ++a) {
        for (std::size_t b = 0; b < a; ++b) gram(b, a) = gram(a, b);
        require(gram(a, a) >= 1e-12 * points, ErrorKind::ill_posed,
                "residual does not depend on '" + slots[a] + "' for this window");
    }
    // Conditioning is judged on the unit-diagonal (correlation) form.
    const Eigen::VectorXd scale = gram.diagonal().cwiseSqrt().cwiseInverse();
    const Eigen::MatrixXd corr = scale.asDiagonal() * gram * scale.asDiagonal();
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(corr, Eigen::EigenvaluesOnly);
    require(eig.eigenvalues().minCoeff() > 1e-10, ErrorKind::ill_posed, "residual directions are collinear");
    const Eigen::VectorXd c = gram.ldlt().solve(rhs);
    ParamVector phi = known;
    for (std::size_t a = 0; a < m; ++a) {
        const double v = detail::slot_value(slots[a], c(a));
        require(std::isfinite(v), ErrorKind::ill_posed, "estimate for '" + slots[a] + "' is not finite");
        phi.set(slots[a], v);
    }
    const double res = residual_norm(window, phi, system);
    InverseDiagnostics diag;
    diag.n_evals = 1;
    diag.gram = gram.trace() / (points * static_cast<double>(m));
    return InverseEstimate{std::move(phi), res, InverseMethod::lsq, diag};
}

/// Residual scan over `candidates` for the unknown slot, optionally refined
/// by Brent's method inside the bracket around the best candidate.
inline InverseEstimate estimate_scan(const Trajectory& window, const SystemSpec& system, const ParamVector& known,
                                     std::vector<double> candidates, bool refine) {
    require(!candidates.empty(), ErrorKind::invalid_config, "candidate grid is empty");
    for (double v : candidates) require(std::isfinite(v), ErrorKind::invalid_config, "candidate is not finite");
    const std::string slot = detail::unknown_slot(system, known);
    const auto red = detail::reduce(residual_terms(window, system), known, slot);
    std::sort(candidates.begin(), candidates.end());
    candidates.erase(std::unique(candidates.begin(), candidates.end()), candidates.end());

    InverseDiagnostics diag;
    auto eval = [&](double v) {
        ++diag.n_evals;
        return red.norm_at(slot_coefficient(slot, v));
    };
    std::size_t best = 0;
    double best_r = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < candidates.size(); ++i) {
        const double r = eval(candidates[i]);
        if (r < best_r) {
            best_r = r;
            best = i;
        }
    }
    double best_v = candidates[best];
    diag.bracket_lo = candidates[best == 0 ? 0 : best - 1];
    diag.bracket_hi = candidates[std::min(best + 1, candidates.size() - 1)];
    if (refine && diag.bracket_hi > diag.bracket_lo) {
        boost::uintmax_t iters = 200;
        // 24 bits gives a final bracket below 1e-6 relative width.
        const auto [x, fx] = boost::math::tools::brent_find_minima(eval, diag.bracket_lo, diag.bracket_hi, 24, iters);
        if (fx < best_r) {
            best_r = fx;
            best_v = x;
        }
    }
    return detail::finish(known, slot, best_v, best_r, InverseMethod::scan_refine, diag);
}

/// Candidate grid for a slot following its declared range and spacing.
inline std::vector<double> candidate_grid(const SystemSpec& system, const std::string& slot, std::size_t n) {
    return system.range(slot).sample(n);
}

struct DarcyEstimate {
    CoefficientField coefficient;
    std::vector<char> confident;
    double residual_at_hat = 0.0;
    InverseMethod method = InverseMethod::pixelwise;

    double confident_fraction() const {
        return static_cast<double>(std::count(confident.begin(), confident.end(), 1)) /
               static_cast<double>(confident.size());
    }
};

/// Per-cell choice between the two Darcy levels: each hypothesis a is scored
/// by sum (a * L u - 1)^2 over the interior points of the 3x3 neighborhood,
/// L the flux-form operator for unit coefficient. Scores within 10% of each
/// other, and boundary cells, are low-confidence.
inline DarcyEstimate estimate_darcy_pixelwise(const Field& u, double low = 3.0, double high = 12.0) {
    const Grid& g = u.grid();
    detail::check_darcy_grid(g);
    const std::size_t nx = g.nx(), ny = g.ny();
    const auto lu = darcy_apply(CoefficientField::constant(g, 1.0), u.channel(0));
    const auto mask = fd::interior_mask(g);
    std::vector<double> a(g.size(), low);
    std::vector<char> confident(g.size(), 0);
    for (std::size_t i = 1; i + 1 < nx; ++i) {
        for (std::size_t j = 1; j + 1 < ny; ++j) {
            double s_low = 0.0, s_high = 0.0;
            for (std::size_t ii = i - 1; ii <= i + 1; ++ii) {
                for (std::size_t jj = j - 1; jj <= j + 1; ++jj) {
                    const std::size_t q = ii * ny + jj;
                    if (!mask[q]) continue;
                    s_low += std::pow(low * lu[q] - 1.0, 2);
                    s_high += std::pow(high * lu[q] - 1.0, 2);
                }
            }
            const std::size_t p = i * ny + j;
            a[p] = s_high < s_low ? high : low;
            confident[p] = std::abs(s_high - s_low) > 0.1 * std::max(s_high, s_low) ? 1 : 0;
        }
    }
    // Boundary cells copy their nearest interior neighbor.
    for (std::size_t i = 0; i < nx; ++i) {
        for (std::size_t j = 0; j < ny; ++j) {
            if (mask[i * ny + j]) continue;
            const std::size_t ci = std::clamp<std::size_t>(i, 1, nx - 2), cj = std::clamp<std::size_t>(j, 1, ny - 2);
            a[i * ny + j] = a[ci * ny + cj];
        }
    }
    DarcyEstimate est{CoefficientField(g, std::move(a)), std::move(confident), 0.0, InverseMethod::pixelwise};
    est.residual_at_hat = residual_norm(u, est.coefficient);
    return est;
}

}  // namespace pdeinv
