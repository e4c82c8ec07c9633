#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "pdeinv/error.hpp"
#include "pdeinv/grid.hpp"
#include "pdeinv/random.hpp"
#include "pdeinv/spectral.hpp"

namespace pdeinv {

/// Replaces each value with probability p by its channel's max or min
/// (equal odds).
inline Field salt_pepper(const Field& f, double p, std::uint64_t seed) {
    require(p >= 0.0 && p <= 1.0, ErrorKind::invalid_config, "salt-and-pepper probability must be in [0, 1]");
    Field out = f;
    Rng rng(seed);
    for (std::size_t c = 0; c < f.n_channels(); ++c) {
        const auto src = f.channel(c);
        if (src.empty()) continue;
        const auto [lo, hi] = std::minmax_element(src.begin(), src.end());
        auto dst = out.channel(c);
        for (auto& v : dst) {
            // Two draws per point regardless of outcome keep streams aligned across p.
            const bool hit = rng.uniform() < p;
            const bool salt = rng.uniform() < 0.5;
            if (hit) v = salt ? *hi : *lo;
        }
    }
    return out;
}

enum class FilterShape { radial, separable };

inline double butterworth_gain(double k, double k_c, int order) {
    return 1.0 / std::sqrt(1.0 + std::pow(k / k_c, 2.0 * order));
}

/// Low-pass H(|m|) = (1 + (|m|/k_c)^(2 order))^(-1/2) with k_c = cutoff_ratio * N/2
/// in mode-index units. Removing a fraction p of modes means cutoff_ratio = 1 - p.
inline Field butterworth(const Field& f, double cutoff_ratio, int order = 6, FilterShape shape = FilterShape::radial) {
    require(cutoff_ratio > 0.0 && cutoff_ratio <= 1.0, ErrorKind::invalid_config, "cutoff_ratio must be in (0, 1]");
    require(order >= 1, ErrorKind::invalid_config, "filter order must be positive");
    SpectralGrid sg(f.grid());
    std::size_t n_min = f.grid().nx();
    if (f.grid().ndims() == 2) n_min = std::min(n_min, f.grid().ny());
    const double k_c = cutoff_ratio * static_cast<double>(n_min) / 2.0;
    std::vector<double> gain(sg.size());
    for (std::size_t idx = 0; idx < sg.size(); ++idx) {
        if (shape == FilterShape::radial) {
            gain[idx] = butterworth_gain(sg.mode_norm(idx), k_c, order);
        } else {
            gain[idx] = butterworth_gain(std::abs(static_cast<double>(sg.mx(idx))), k_c, order) *
                        butterworth_gain(std::abs(static_cast<double>(sg.my(idx))), k_c, order);
        }
    }
    Field out = f;
    for (std::size_t c = 0; c < f.n_channels(); ++c) {
        auto hat = sg.forward(f.channel(c));
        for (std::size_t idx = 0; idx < hat.size(); ++idx) hat[idx] *= gain[idx];
        sg.fft().inverse(hat, out.channel(c));
    }
    return out;
}

inline Field butterworth_removed_fraction(const Field& f, double p, int order = 6) {
    require(p >= 0.0 && p < 1.0, ErrorKind::invalid_config, "removed fraction must be in [0, 1)");
    return butterworth(f, 1.0 - p, order);
}

enum class DropFill { interpolate, nan };

struct DroppedField {
    Field field;
    /// 1 where the value was observed, 0 where it was synthesized; point order.
    std::vector<std::uint8_t> keep_mask;
    std::vector<std::uint8_t> kept_rows, kept_cols;
};

namespace detail {

inline std::vector<std::uint8_t> draw_lines(std::size_t n, double p, Rng& rng, const char* axis) {
    std::vector<std::uint8_t> keep(n);
    bool any = false;
    for (auto& k : keep) {
        k = rng.uniform() >= p ? 1 : 0;
        any = any || k;
    }
    require(any, ErrorKind::degenerate_grid, std::string("every grid line along ") + axis + " was dropped");
    return keep;
}

// Fills the unkept entries of line[0..n) by linear interpolation between kept
// neighbours; ends extrapolate linearly from the two nearest kept entries.
inline void fill_line(std::vector<double>& line, const std::vector<std::uint8_t>& keep) {
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < keep.size(); ++i)
        if (keep[i]) idx.push_back(i);
    if (idx.size() == 1) {
        std::fill(line.begin(), line.end(), line[idx[0]]);
        return;
    }
    std::size_t seg = 0;
    for (std::size_t i = 0; i < line.size(); ++i) {
        if (keep[i]) continue;
        while (seg + 2 < idx.size() && idx[seg + 1] < i) ++seg;
        const auto a = idx[seg], b = idx[seg + 1];
        const double t = (static_cast<double>(i) - static_cast<double>(a)) / static_cast<double>(b - a);
        line[i] = line[a] + t * (line[b] - line[a]);
    }
}

}  // namespace detail

/// Drops each x line (and, in 2D, each y line) independently with
/// probability p. Dropped values are rebuilt by linear interpolation along y
/// on kept x lines, then along x, or left as NaN.
inline DroppedField drop_grid_lines(const Field& f, double p, std::uint64_t seed, DropFill fill = DropFill::interpolate) {
    require(p >= 0.0 && p < 1.0, ErrorKind::invalid_config, "grid-line drop probability must be in [0, 1)");
    const std::size_t nx = f.grid().nx(), ny = f.grid().ny();
    const bool two_d = f.grid().ndims() == 2;
    Rng rng(seed);
    DroppedField out{f, {}, detail::draw_lines(nx, p, rng, "x"), {}};
    out.kept_cols = two_d ? detail::draw_lines(ny, p, rng, "y") : std::vector<std::uint8_t>(1, 1);
    out.keep_mask.resize(nx * ny);
    for (std::size_t i = 0; i < nx; ++i)
        for (std::size_t j = 0; j < ny; ++j) out.keep_mask[i * ny + j] = out.kept_rows[i] && out.kept_cols[j];
    for (std::size_t c = 0; c < f.n_channels(); ++c) {
        auto v = out.field.channel(c);
        if (fill == DropFill::nan) {
            for (std::size_t q = 0; q < v.size(); ++q)
                if (!out.keep_mask[q]) v[q] = std::numeric_limits<double>::quiet_NaN();
            continue;
        }
        std::vector<double> line;
        if (two_d) {
            line.resize(ny);
            for (std::size_t i = 0; i < nx; ++i) {
                if (!out.kept_rows[i]) continue;
                std::copy_n(v.begin() + static_cast<std::ptrdiff_t>(i * ny), ny, line.begin());
                detail::fill_line(line, out.kept_cols);
                std::copy(line.begin(), line.end(), v.begin() + static_cast<std::ptrdiff_t>(i * ny));
            }
        }
        line.resize(nx);
        for (std::size_t j = 0; j < ny; ++j) {
            for (std::size_t i = 0; i < nx; ++i) line[i] = v[i * ny + j];
            detail::fill_line(line, out.kept_rows);
            for (std::size_t i = 0; i < nx; ++i) v[i * ny + j] = line[i];
        }
    }
    return out;
}

}  // namespace pdeinv
