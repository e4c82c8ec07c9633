#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "pdeinv/error.hpp"
#include "pdeinv/grid.hpp"

namespace pdeinv {

enum class DownsampleMethod { stride, nearest };

inline std::string_view to_string(DownsampleMethod m) {
    return m == DownsampleMethod::stride ? "stride" : "nearest";
}

inline DownsampleMethod parse_downsample_method(std::string_view s) {
    if (s == "stride") return DownsampleMethod::stride;
    if (s == "nearest") return DownsampleMethod::nearest;
    fail(ErrorKind::invalid_config, "unknown downsample method '" + std::string(s) + "'");
}

namespace detail {

// Vertex-centred non-periodic axes keep both end points, so it is the
// number of intervals that must divide.
inline std::size_t coarse_count(const Axis& ax, std::size_t factor) {
    require(factor >= 1, ErrorKind::invalid_config, "downsample factor must be >= 1");
    const bool vertex = !ax.periodic && ax.centering == Centering::vertex;
    const std::size_t span = vertex ? ax.n - 1 : ax.n;
    require(span % factor == 0, ErrorKind::invalid_config,
            "downsample factor " + std::to_string(factor) + " does not divide resolution " +
                std::to_string(ax.n));
    return vertex ? span / factor + 1 : span / factor;
}

inline std::size_t source_index(const Axis& ax, std::size_t i, std::size_t factor, DownsampleMethod m) {
    const bool cell = !ax.periodic && ax.centering == Centering::cell;
    if (m == DownsampleMethod::nearest && cell) return i * factor + factor / 2;
    return i * factor;
}

}  // namespace detail

/// Factor that maps `fine` points onto `coarse` points on this axis.
inline std::size_t downsample_factor(const Axis& ax, std::size_t coarse) {
    require(coarse >= 1, ErrorKind::invalid_config, "target resolution must be positive");
    const bool vertex = !ax.periodic && ax.centering == Centering::vertex;
    const std::size_t fine_span = vertex ? ax.n - 1 : ax.n;
    const std::size_t coarse_span = vertex ? coarse - 1 : coarse;
    require(coarse_span >= 1 && fine_span % coarse_span == 0, ErrorKind::invalid_config,
            "resolution " + std::to_string(coarse) + " does not divide " + std::to_string(ax.n));
    return fine_span / coarse_span;
}

inline Grid coarse_grid(const Grid& grid, const std::vector<std::size_t>& factors) {
    require(factors.size() == grid.ndims(), ErrorKind::invalid_config, "one factor per axis required");
    std::vector<std::size_t> shape;
    for (std::size_t a = 0; a < grid.ndims(); ++a) shape.push_back(detail::coarse_count(grid.axis(a), factors[a]));
    return grid.with_shape(shape);
}

/// Spatial subsampling of one frame's worth of values laid out [channel, x(, y)].
inline std::vector<double> downsample_values(const Grid& grid, std::size_t channels,
                                             std::span<const double> values,
                                             const std::vector<std::size_t>& factors, DownsampleMethod method) {
    const Grid coarse = coarse_grid(grid, factors);
    std::vector<double> out(channels * coarse.size());
    const std::size_t fx = grid.nx(), fy = grid.ny();
    const std::size_t cx = coarse.nx(), cy = coarse.ny();
    for (std::size_t c = 0; c < channels; ++c) {
        for (std::size_t i = 0; i < cx; ++i) {
            const std::size_t si = detail::source_index(grid.axis(0), i, factors[0], method);
            for (std::size_t j = 0; j < cy; ++j) {
                const std::size_t sj =
                    grid.ndims() == 2 ? detail::source_index(grid.axis(1), j, factors[1], method) : 0;
                out[(c * cx + i) * cy + j] = values[(c * fx + si) * fy + sj];
            }
        }
    }
    return out;
}

inline Field downsample(const Field& f, const std::vector<std::size_t>& factors,
                        DownsampleMethod method = DownsampleMethod::stride) {
    const Grid coarse = coarse_grid(f.grid(), factors);
    return Field(coarse, f.channels(), downsample_values(f.grid(), f.n_channels(), f.values(), factors, method));
}

/// Subsampled trajectory; timestamps unchanged.
inline Trajectory downsample(const Trajectory& t, const std::vector<std::size_t>& factors,
                             DownsampleMethod method = DownsampleMethod::stride) {
    const Grid coarse = coarse_grid(t.grid(), factors);
    Trajectory out(coarse, t.channels());
    for (std::size_t k = 0; k < t.n_frames(); ++k) {
        out.push_back(t.times()[k],
                      downsample_values(t.grid(), t.channels().size(), t.frame_values(k), factors, method));
    }
    return out;
}

inline Trajectory downsample(const Trajectory& t, std::size_t factor,
                             DownsampleMethod method = DownsampleMethod::stride) {
    return downsample(t, std::vector<std::size_t>(t.grid().ndims(), factor), method);
}

inline Field downsample(const Field& f, std::size_t factor, DownsampleMethod method = DownsampleMethod::stride) {
    return downsample(f, std::vector<std::size_t>(f.grid().ndims(), factor), method);
}

/// Downsample to an explicit per-axis resolution.
inline std::vector<std::size_t> factors_for(const Grid& grid, const std::vector<std::size_t>& target) {
    require(target.size() == grid.ndims(), ErrorKind::invalid_config, "target resolution rank mismatch");
    std::vector<std::size_t> f;
    for (std::size_t a = 0; a < grid.ndims(); ++a) f.push_back(downsample_factor(grid.axis(a), target[a]));
    return f;
}

}  // namespace pdeinv
