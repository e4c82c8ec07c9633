#pragma once

#include <cmath>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "pdeinv/error.hpp"
#include "pdeinv/fd.hpp"
#include "pdeinv/grid.hpp"
#include "pdeinv/params.hpp"
#include "pdeinv/solvers/darcy.hpp"
#include "pdeinv/spectral.hpp"
#include "pdeinv/system.hpp"

namespace pdeinv {

/// Finite-difference derivative channels of a window, one stacked frame per
/// forward-difference pair (aligned to the earlier frame); one per frame for
/// the steady Darcy system.
struct DerivativeStack {
    Grid grid;
    std::vector<std::string> channels;
    std::vector<double> times;
    std::vector<double> values;  // [frame, channel, x(, y)]
    std::pair<double, double> valid_time_range{0.0, 0.0};

    std::size_t n_frames() const { return times.size(); }
    std::size_t frame_size() const { return channels.size() * grid.size(); }

    std::span<const double> channel(std::size_t frame, std::size_t c) const {
        return std::span<const double>(values).subspan((frame * channels.size() + c) * grid.size(), grid.size());
    }

    Trajectory as_trajectory() const { return Trajectory(grid, channels, times, values); }
};

/// Residual of one window written as base + sum_p c_p(phi) * direction_p,
/// where c_p is the slot value (delta^2 for the KdV dispersion slot).
/// Channels are (pair, species) planes in pair-major order.
struct ResidualTerms {
    Grid grid;
    std::vector<std::string> channels;
    std::vector<double> base;
    std::vector<std::pair<std::string, std::vector<double>>> directions;

    const std::vector<double>& direction(std::string_view slot) const {
        for (const auto& [name, d] : directions) {
            if (name == slot) return d;
        }
        fail(ErrorKind::invalid_params, "no residual direction for slot " + std::string(slot));
    }
};

/// Multiplier with which a parameter slot enters the residual.
inline double slot_coefficient(std::string_view slot, double value) {
    return slot == "delta" ? value * value : value;
}

namespace detail {

inline void require_window(const Trajectory& window, const SystemSpec& system) {
    require(system.time_dependent(), ErrorKind::invalid_params,
            "the Darcy residual needs a coefficient field; use the coefficient overload");
    require(window.n_frames() >= 2, ErrorKind::insufficient_window,
            "time derivative needs at least 2 frames, got " + std::to_string(window.n_frames()));
    require(window.channels().size() == system.channels.size(), ErrorKind::invalid_config,
            "window channels do not match the system");
}

inline std::vector<double> time_difference(const Trajectory& w, std::size_t k, std::size_t c) {
    const std::size_t n = w.grid().size();
    const double dt = w.times()[k + 1] - w.times()[k];
    const auto a = w.frame_values(k).subspan(c * n, n);
    const auto b = w.frame_values(k + 1).subspan(c * n, n);
    std::vector<double> out(n);
    for (std::size_t p = 0; p < n; ++p) out[p] = (b[p] - a[p]) / dt;
    return out;
}

inline std::vector<double> advection(SpectralGrid& sg, const Field& w) {
    const Grid& g = w.grid();
    const auto vel = velocity_from_vorticity(w, sg).velocity;
    const auto wx = fd::d1(g, w.channel(0), 0);
    const auto wy = fd::d1(g, w.channel(0), 1);
    std::vector<double> out(g.size());
    for (std::size_t p = 0; p < out.size(); ++p) out[p] = vel.channel(0)[p] * wx[p] + vel.channel(1)[p] * wy[p];
    return out;
}

inline void append(std::vector<double>& dst, const std::vector<double>& src) {
    dst.insert(dst.end(), src.begin(), src.end());
}

}  // namespace detail

inline DerivativeStack compute_derivatives(const Trajectory& window, const SystemSpec& system) {
    const Grid& g = window.grid();
    DerivativeStack s;
    s.grid = g;
    s.channels = system.derivatives;
    if (system.id == SystemId::darcy2d) {
        require(window.n_frames() >= 1, ErrorKind::insufficient_window, "Darcy derivatives need a frame");
        for (std::size_t k = 0; k < window.n_frames(); ++k) {
            const auto u = window.frame_values(k).subspan(0, g.size());
            detail::append(s.values, fd::d1(g, u, 0));
            detail::append(s.values, fd::d1(g, u, 1));
            detail::append(s.values, fd::d2(g, u, 0));
            detail::append(s.values, fd::d2(g, u, 1));
            s.times.push_back(window.times()[k]);
        }
        s.valid_time_range = {window.times().front(), window.times().back()};
        return s;
    }
    detail::require_window(window, system);
    const std::size_t n = g.size();
    std::optional<SpectralGrid> sg;
    if (system.id == SystemId::ns2d_unforced || system.id == SystemId::ns2d_forced) sg.emplace(g);
    for (std::size_t k = 0; k + 1 < window.n_frames(); ++k) {
        const auto frame = window.frame_values(k);
        switch (system.id) {
        case SystemId::rd2d: {
            const auto u = frame.subspan(0, n), v = frame.subspan(n, n);
            detail::append(s.values, detail::time_difference(window, k, 0));
            detail::append(s.values, detail::time_difference(window, k, 1));
            detail::append(s.values, fd::laplacian(g, u));
            detail::append(s.values, fd::laplacian(g, v));
            std::vector<double> r(n);
            for (std::size_t p = 0; p < n; ++p) r[p] = u[p] - u[p] * u[p] * u[p] - v[p];
            detail::append(s.values, r);
            break;
        }
        case SystemId::ns2d_unforced:
        case SystemId::ns2d_forced: {
            const Field w = window.frame(k);
            detail::append(s.values, detail::time_difference(window, k, 0));
            detail::append(s.values, fd::laplacian(g, w.channel(0)));
            detail::append(s.values, detail::advection(*sg, w));
            break;
        }
        case SystemId::kdv1d: {
            const auto u = frame.subspan(0, n);
            const auto ux = fd::d1(g, u, 0);
            detail::append(s.values, detail::time_difference(window, k, 0));
            detail::append(s.values, ux);
            detail::append(s.values, fd::d1(g, fd::d1(g, ux, 0), 0));
            std::vector<double> nl(n);
            for (std::size_t p = 0; p < n; ++p) nl[p] = u[p] * ux[p];
            detail::append(s.values, nl);
            break;
        }
        case SystemId::darcy2d:
            break;
        }
        s.times.push_back(window.times()[k]);
    }
    s.valid_time_range = {window.times().front(), window.times()[window.n_frames() - 2]};
    return s;
}

/// Residual of a time-dependent window split into its parameter-free part and
/// one direction per parameter slot.
inline ResidualTerms residual_terms(const Trajectory& window, const SystemSpec& system) {
    detail::require_window(window, system);
    const DerivativeStack d = compute_derivatives(window, system);
    const Grid& g = window.grid();
    const std::size_t n = g.size();
    ResidualTerms t;
    t.grid = g;
    for (const auto& p : system.params) t.directions.emplace_back(p.name, std::vector<double>{});
    auto dir = [&](std::string_view name) -> std::vector<double>& {
        for (auto& [slot, v] : t.directions) {
            if (slot == name) return v;
        }
        fail(ErrorKind::invalid_params, "unknown slot");
    };
    std::vector<double> forcing;
    if (system.id == SystemId::ns2d_forced) {
        forcing.resize(n);
        for (std::size_t i = 0; i < g.nx(); ++i) {
            for (std::size_t j = 0; j < g.ny(); ++j) {
                forcing[i * g.ny() + j] = -system.forcing_k * std::cos(system.forcing_k * g.axis(1).coord(j));
            }
        }
    }
    for (std::size_t k = 0; k < d.n_frames(); ++k) {
        const auto frame = window.frame_values(k);
        const std::string at = "@" + std::to_string(k);
        switch (system.id) {
        case SystemId::rd2d: {
            const auto u = frame.subspan(0, n), v = frame.subspan(n, n);
            const auto ut = d.channel(k, 0), vt = d.channel(k, 1), lu = d.channel(k, 2), lv = d.channel(k, 3);
            t.channels.push_back("r_u" + at);
            t.channels.push_back("r_v" + at);
            for (std::size_t p = 0; p < n; ++p) t.base.push_back(ut[p] - (u[p] - u[p] * u[p] * u[p] - v[p]));
            for (std::size_t p = 0; p < n; ++p) t.base.push_back(vt[p] - (u[p] - v[p]));
            auto& du = dir("Du");
            auto& dv = dir("Dv");
            auto& dk = dir("k");
            for (std::size_t p = 0; p < n; ++p) du.push_back(-lu[p]);
            du.insert(du.end(), n, 0.0);
            dv.insert(dv.end(), n, 0.0);
            for (std::size_t p = 0; p < n; ++p) dv.push_back(-lv[p]);
            dk.insert(dk.end(), n, 1.0);
            dk.insert(dk.end(), n, 0.0);
            break;
        }
        case SystemId::ns2d_unforced:
        case SystemId::ns2d_forced: {
            const auto w = frame.subspan(0, n);
            const auto wt = d.channel(k, 0), lap = d.channel(k, 1), adv = d.channel(k, 2);
            t.channels.push_back("r_w" + at);
            for (std::size_t p = 0; p < n; ++p) {
                double b = wt[p] + adv[p];
                if (system.id == SystemId::ns2d_forced) b += system.drag * w[p] - forcing[p];
                t.base.push_back(b);
            }
            auto& dn = dir("nu");
            for (std::size_t p = 0; p < n; ++p) dn.push_back(-lap[p]);
            break;
        }
        case SystemId::kdv1d: {
            const auto ut = d.channel(k, 0), uxxx = d.channel(k, 2), nl = d.channel(k, 3);
            t.channels.push_back("r_u" + at);
            for (std::size_t p = 0; p < n; ++p) t.base.push_back(ut[p] + nl[p]);
            auto& dd = dir("delta");
            dd.insert(dd.end(), uxxx.begin(), uxxx.end());
            break;
        }
        case SystemId::darcy2d:
            break;
        }
    }
    return t;
}

/// Residual values for a full parameter vector (every slot must be set).
inline std::vector<double> evaluate_terms(const ResidualTerms& t, const ParamVector& phi) {
    std::vector<double> r = t.base;
    for (const auto& [slot, d] : t.directions) {
        const auto v = phi.get(slot);
        require(v.has_value(), ErrorKind::invalid_params, "missing parameter slot '" + slot + "'");
        require(std::isfinite(*v), ErrorKind::invalid_params, "parameter '" + slot + "' is not finite");
        const double c = slot_coefficient(slot, *v);
        for (std::size_t i = 0; i < r.size(); ++i) r[i] += c * d[i];
    }
    return r;
}

/// Mean of squares over interior points and all channels.
inline double mean_square_interior(const Grid& g, std::span<const double> values) {
    const auto mask = fd::interior_mask(g);
    const std::size_t n = g.size();
    require(n > 0 && values.size() % n == 0, ErrorKind::invalid_config, "values do not match grid");
    const std::size_t channels = values.size() / n;
    double sum = 0.0;
    std::size_t count = 0;
    for (std::size_t c = 0; c < channels; ++c) {
        for (std::size_t p = 0; p < n; ++p) {
            if (!mask[p]) continue;
            const double v = values[c * n + p];
            sum += v * v;
            ++count;
        }
    }
    require(count > 0, ErrorKind::degenerate_grid, "grid has no interior points");
    return sum / static_cast<double>(count);
}

inline Field residual_field(const Trajectory& window, const ParamVector& phi, const SystemSpec& system) {
    const ResidualTerms t = residual_terms(window, system);
    return Field(t.grid, t.channels, evaluate_terms(t, phi));
}

inline double residual_norm(const Trajectory& window, const ParamVector& phi, const SystemSpec& system) {
    const ResidualTerms t = residual_terms(window, system);
    return mean_square_interior(t.grid, evaluate_terms(t, phi));
}

/// Darcy residual -div(a grad u) - 1 in flux form; zero on the boundary.
inline Field residual_field(const Field& u, const CoefficientField& a, FaceAverage avg = FaceAverage::harmonic) {
    require(u.grid() == a.grid(), ErrorKind::invalid_config, "coefficient and solution grids differ");
    auto r = darcy_apply(a, u.channel(0), avg);
    const auto mask = fd::interior_mask(u.grid());
    for (std::size_t p = 0; p < r.size(); ++p) r[p] = mask[p] ? r[p] - 1.0 : 0.0;
    return Field(u.grid(), {"r_u"}, std::move(r));
}

inline double residual_norm(const Field& u, const CoefficientField& a, FaceAverage avg = FaceAverage::harmonic) {
    const Field r = residual_field(u, a, avg);
    return mean_square_interior(r.grid(), r.values());
}

}  // namespace pdeinv
