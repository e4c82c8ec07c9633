#pragma once

#include <cmath>
#include <numbers>
#include <string>
#include <string_view>
#include <vector>

#include "pdeinv/error.hpp"
#include "pdeinv/grid.hpp"
#include "pdeinv/params.hpp"

namespace pdeinv {

enum class SystemId { rd2d, ns2d_unforced, ns2d_forced, kdv1d, darcy2d };

inline std::string_view to_string(SystemId id) {
    switch (id) {
    case SystemId::rd2d: return "rd2d";
    case SystemId::ns2d_unforced: return "ns2d_unforced";
    case SystemId::ns2d_forced: return "ns2d_forced";
    case SystemId::kdv1d: return "kdv1d";
    case SystemId::darcy2d: return "darcy2d";
    }
    return "unknown";
}

/// Accepts both the underscore form and the CLI's dashed form.
inline SystemId parse_system_id(std::string_view text) {
    std::string s(text);
    for (auto& ch : s) {
        if (ch == '-') ch = '_';
    }
    if (s == "rd2d") return SystemId::rd2d;
    if (s == "ns2d_unforced") return SystemId::ns2d_unforced;
    if (s == "ns2d_forced") return SystemId::ns2d_forced;
    if (s == "kdv1d") return SystemId::kdv1d;
    if (s == "darcy2d") return SystemId::darcy2d;
    fail(ErrorKind::invalid_config, "unknown system '" + std::string(text) + "'");
}

enum class Spacing { linear, log };

inline std::string_view to_string(Spacing s) { return s == Spacing::log ? "log" : "linear"; }

inline Spacing parse_spacing(std::string_view s) {
    if (s == "log") return Spacing::log;
    if (s == "linear") return Spacing::linear;
    fail(ErrorKind::invalid_config, "unknown spacing '" + std::string(s) + "'");
}

/// Declared range of one physical parameter and its default sampling.
struct ParamRange {
    std::string name;
    double lo = 0.0;
    double hi = 1.0;
    Spacing spacing = Spacing::linear;
    std::size_t count = 1;

    /// `n` values from lo to hi inclusive, linear or log-spaced.
    std::vector<double> sample(std::size_t n) const {
        require(n >= 1, ErrorKind::invalid_config, "parameter grid needs at least one value");
        std::vector<double> v(n);
        if (n == 1) {
            v[0] = lo;
            return v;
        }
        const double last = static_cast<double>(n - 1);
        for (std::size_t i = 0; i < n; ++i) {
            const double f = static_cast<double>(i) / last;
            if (spacing == Spacing::log) {
                const double a = std::log10(lo), b = std::log10(hi);
                v[i] = std::pow(10.0, a + (b - a) * f);
            } else {
                v[i] = lo + (hi - lo) * f;
            }
        }
        // Endpoints exact regardless of rounding in the formula above.
        v.front() = lo;
        v.back() = hi;
        return v;
    }
    std::vector<double> sample() const { return sample(count); }

    /// Position of `value` in the range, in [0,1] when inside (log space for log ranges).
    double fraction(double value) const {
        if (spacing == Spacing::log) {
            return (std::log10(value) - std::log10(lo)) / (std::log10(hi) - std::log10(lo));
        }
        return (value - lo) / (hi - lo);
    }

    double from_fraction(double f) const {
        if (spacing == Spacing::log) {
            return std::pow(10.0, std::log10(lo) + f * (std::log10(hi) - std::log10(lo)));
        }
        return lo + f * (hi - lo);
    }

    bool contains(double value, double rel_tol = 1e-9) const {
        const double slack = rel_tol * std::max(std::abs(lo), std::abs(hi));
        return value >= lo - slack && value <= hi + slack;
    }
};

/// One of the five benchmark systems with its parameter slots and constants.
struct SystemSpec {
    SystemId id = SystemId::kdv1d;
    std::vector<ParamRange> params;
    double drag = 0.1;       // forced NS linear drag
    double forcing_k = 2.0;  // forced NS Kolmogorov wavenumber
    std::vector<std::string> channels;
    std::vector<std::string> derivatives;
    Spacing range_spacing = Spacing::linear;
    double domain_lo = 0.0;
    double domain_hi = 1.0;
    std::size_t default_ics = 1;
    /// Parameters whose ranges define evaluation splits by default.
    std::vector<std::string> split_axes;

    bool time_dependent() const { return id != SystemId::darcy2d; }
    /// True when the inverse target is a coefficient field rather than scalars.
    bool field_parameter() const { return id == SystemId::darcy2d; }

    const ParamRange& range(std::string_view name) const {
        for (const auto& p : params) {
            if (p.name == name) return p;
        }
        fail(ErrorKind::invalid_params, "system has no parameter " + std::string(name));
    }

    bool has_param(std::string_view name) const {
        for (const auto& p : params) {
            if (p.name == name) return true;
        }
        return false;
    }

    std::vector<std::string> param_names() const {
        std::vector<std::string> names;
        for (const auto& p : params) names.push_back(p.name);
        return names;
    }

    /// Cartesian product of every scalar range at its default (or given) count.
    std::vector<ParamVector> param_grid() const {
        std::vector<ParamVector> out;
        if (field_parameter()) {
            out.emplace_back();
            return out;
        }
        out.emplace_back();
        for (const auto& p : params) {
            std::vector<ParamVector> next;
            for (const auto& base : out) {
                for (double v : p.sample()) {
                    ParamVector pv = base;
                    pv.set(p.name, v);
                    next.push_back(pv);
                }
            }
            out = std::move(next);
        }
        return out;
    }

    /// Default grid at the given per-axis resolution.
    Grid make_grid(const std::vector<std::size_t>& shape) const {
        switch (id) {
        case SystemId::rd2d:
            require(shape.size() == 2, ErrorKind::invalid_config, "rd2d needs a 2D resolution");
            return Grid::cell_2d(shape[0], shape[1], domain_lo, domain_hi);
        case SystemId::ns2d_unforced:
        case SystemId::ns2d_forced:
            require(shape.size() == 2, ErrorKind::invalid_config, "ns needs a 2D resolution");
            return Grid::periodic_2d(shape[0], shape[1], domain_lo, domain_hi);
        case SystemId::kdv1d:
            require(shape.size() == 1, ErrorKind::invalid_config, "kdv1d needs a 1D resolution");
            return Grid::periodic_1d(shape[0], domain_lo, domain_hi);
        case SystemId::darcy2d:
            require(shape.size() == 2, ErrorKind::invalid_config, "darcy2d needs a 2D resolution");
            return Grid::vertex_2d(shape[0], shape[1], domain_lo, domain_hi);
        }
        fail(ErrorKind::invalid_config, "unknown system");
    }

    static SystemSpec defaults(SystemId id) {
        SystemSpec s;
        s.id = id;
        switch (id) {
        case SystemId::rd2d:
            s.params = {{"k", 0.005, 0.1, Spacing::linear, 2},
                        {"Du", 0.01, 0.5, Spacing::linear, 28},
                        {"Dv", 0.01, 0.5, Spacing::linear, 27}};
            s.channels = {"u", "v"};
            s.derivatives = {"u_t", "v_t", "lap_u", "lap_v", "u-u^3-v"};
            s.domain_lo = -1.0;
            s.domain_hi = 1.0;
            s.default_ics = 5;
            // k is sampled only at its two endpoints, both inside the
            // extreme bands, so k is not a default split axis.
            s.split_axes = {"Du", "Dv"};
            break;
        case SystemId::ns2d_unforced:
            s.params = {{"nu", 1e-4, 1e-2, Spacing::log, 101}};
            s.channels = {"w"};
            s.derivatives = {"w_t", "lap_w", "u.grad_w"};
            s.range_spacing = Spacing::log;
            s.domain_lo = 0.0;
            s.domain_hi = 1.0;
            s.default_ics = 192;
            s.split_axes = {"nu"};
            break;
        case SystemId::ns2d_forced:
            s.params = {{"nu", 1e-5, 1e-2, Spacing::log, 120}};
            s.channels = {"w"};
            s.derivatives = {"w_t", "lap_w", "u.grad_w"};
            s.range_spacing = Spacing::log;
            s.domain_lo = 0.0;
            s.domain_hi = 2.0 * std::numbers::pi;
            s.default_ics = 108;
            s.split_axes = {"nu"};
            break;
        case SystemId::kdv1d:
            s.params = {{"delta", 0.8, 5.0, Spacing::linear, 100}};
            s.channels = {"u"};
            s.derivatives = {"u_t", "u_x", "u_xxx", "u*u_x"};
            s.domain_lo = 0.0;
            s.domain_hi = 32.0;
            s.default_ics = 100;
            s.split_axes = {"delta"};
            break;
        case SystemId::darcy2d:
            // The "parameter" is the coefficient field; count is the number of i.i.d. samples.
            s.params = {{"a", 3.0, 12.0, Spacing::linear, 2048}};
            s.channels = {"u"};
            s.derivatives = {"u_x", "u_y", "u_xx", "u_yy"};
            s.domain_lo = 0.0;
            s.domain_hi = 1.0;
            s.default_ics = 2048;
            break;
        }
        return s;
    }
};

}  // namespace pdeinv
