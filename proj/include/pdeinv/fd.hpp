#pragma once

#include <span>
#include <vector>

#include "pdeinv/error.hpp"
#include "pdeinv/grid.hpp"

namespace pdeinv::fd {

namespace detail {

// Iterates every 1D line along `axis` of a row-major plane.
template <class F>
void for_each_line(const Grid& g, std::size_t axis, F&& f) {
    const std::size_t nx = g.nx(), ny = g.ny();
    if (axis == 0) {
        for (std::size_t j = 0; j < ny; ++j) f(j, ny, nx);
    } else {
        for (std::size_t i = 0; i < nx; ++i) f(i * ny, std::size_t{1}, ny);
    }
}

}  // namespace detail

/// First derivative along `axis`: second-order central differences, periodic
/// wrap on periodic axes, second-order one-sided stencils at the ends of
/// non-periodic axes.
inline std::vector<double> d1(const Grid& g, std::span<const double> f, std::size_t axis) {
    require(f.size() == g.size(), ErrorKind::invalid_config, "field size does not match grid");
    require(axis < g.ndims(), ErrorKind::invalid_config, "axis out of range");
    const Axis& ax = g.axis(axis);
    const double h = ax.spacing();
    const double i2h = 0.5 / h;
    std::vector<double> out(f.size());
    detail::for_each_line(g, axis, [&](std::size_t base, std::size_t stride, std::size_t n) {
        auto at = [&](std::size_t i) { return f[base + i * stride]; };
        for (std::size_t i = 1; i + 1 < n; ++i) out[base + i * stride] = (at(i + 1) - at(i - 1)) * i2h;
        if (ax.periodic) {
            out[base] = (at(1) - at(n - 1)) * i2h;
            out[base + (n - 1) * stride] = (at(0) - at(n - 2)) * i2h;
        } else {
            out[base] = (-3.0 * at(0) + 4.0 * at(1) - at(2)) * i2h;
            out[base + (n - 1) * stride] = (3.0 * at(n - 1) - 4.0 * at(n - 2) + at(n - 3)) * i2h;
        }
    });
    return out;
}

/// Second derivative along `axis`, same boundary treatment as d1.
inline std::vector<double> d2(const Grid& g, std::span<const double> f, std::size_t axis) {
    require(f.size() == g.size(), ErrorKind::invalid_config, "field size does not match grid");
    require(axis < g.ndims(), ErrorKind::invalid_config, "axis out of range");
    const Axis& ax = g.axis(axis);
    const double ih2 = 1.0 / (ax.spacing() * ax.spacing());
    std::vector<double> out(f.size());
    detail::for_each_line(g, axis, [&](std::size_t base, std::size_t stride, std::size_t n) {
        auto at = [&](std::size_t i) { return f[base + i * stride]; };
        for (std::size_t i = 1; i + 1 < n; ++i) {
            out[base + i * stride] = (at(i + 1) - 2.0 * at(i) + at(i - 1)) * ih2;
        }
        if (ax.periodic) {
            out[base] = (at(1) - 2.0 * at(0) + at(n - 1)) * ih2;
            out[base + (n - 1) * stride] = (at(0) - 2.0 * at(n - 1) + at(n - 2)) * ih2;
        } else {
            out[base] = (2.0 * at(0) - 5.0 * at(1) + 4.0 * at(2) - at(3)) * ih2;
            out[base + (n - 1) * stride] = (2.0 * at(n - 1) - 5.0 * at(n - 2) + 4.0 * at(n - 3) - at(n - 4)) * ih2;
        }
    });
    return out;
}

inline std::vector<double> laplacian(const Grid& g, std::span<const double> f) {
    auto out = d2(g, f, 0);
    if (g.ndims() == 2) {
        const auto yy = d2(g, f, 1);
        for (std::size_t p = 0; p < out.size(); ++p) out[p] += yy[p];
    }
    return out;
}

/// True for points off the boundary ring of every non-periodic axis.
inline std::vector<char> interior_mask(const Grid& g) {
    std::vector<char> m(g.size(), 1);
    const std::size_t nx = g.nx(), ny = g.ny();
    const bool bx = !g.axis(0).periodic;
    const bool by = g.ndims() == 2 && !g.axis(1).periodic;
    for (std::size_t i = 0; i < nx; ++i) {
        for (std::size_t j = 0; j < ny; ++j) {
            if ((bx && (i == 0 || i + 1 == nx)) || (by && (j == 0 || j + 1 == ny))) m[i * ny + j] = 0;
        }
    }
    return m;
}

}  // namespace pdeinv::fd
