#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "pdeinv/error.hpp"
#include "pdeinv/grid.hpp"
#include "pdeinv/params.hpp"
#include "pdeinv/solvers/downsample.hpp"

namespace pdeinv {

/// ||a - b|| / ||b|| over two equally sized value ranges.
inline double rel_l2(std::span<const double> a, std::span<const double> ref) {
    require(a.size() == ref.size(), ErrorKind::invalid_config, "rel_l2: size mismatch");
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        num += (a[i] - ref[i]) * (a[i] - ref[i]);
        den += ref[i] * ref[i];
    }
    require(den > 0.0, ErrorKind::undefined_metric, "rel_l2: reference has zero norm");
    return std::sqrt(num / den);
}

inline double rel_l2(const Field& u, const Field& ref) {
    require(u.grid() == ref.grid() && u.n_channels() == ref.n_channels(), ErrorKind::invalid_config,
            "rel_l2: field shapes differ");
    return rel_l2(u.values(), ref.values());
}

inline double rel_l2(const Trajectory& u, const Trajectory& ref) {
    require(u.grid() == ref.grid() && u.channels().size() == ref.channels().size() && u.n_frames() == ref.n_frames(),
            ErrorKind::invalid_config, "rel_l2: trajectory shapes differ");
    return rel_l2(u.values(), ref.values());
}

/// ||phi_hat - phi|| / ||phi|| over the entries of `truth`.
inline double relative_error(const ParamVector& hat, const ParamVector& truth) {
    require(!truth.empty(), ErrorKind::undefined_metric, "relative_error: empty parameter vector");
    std::vector<double> a, b;
    for (const auto& [name, value] : truth.entries()) {
        const auto h = hat.get(name);
        require(h.has_value(), ErrorKind::invalid_config, "relative_error: prediction lacks '" + name + "'");
        a.push_back(*h);
        b.push_back(value);
    }
    return rel_l2(a, b);
}

inline double relative_error(const CoefficientField& hat, const CoefficientField& truth) {
    require(hat.grid() == truth.grid(), ErrorKind::invalid_config, "relative_error: coefficient grids differ");
    return rel_l2(hat.values(), truth.values());
}

/// Negated ordinary least-squares slope of errors against xs. Larger means
/// error falls faster as x grows.
inline double nls(std::span<const double> xs, std::span<const double> errors) {
    require(xs.size() == errors.size() && xs.size() >= 2, ErrorKind::undefined_metric,
            "nls: need at least two (x, error) pairs");
    const double n = static_cast<double>(xs.size());
    const double mx = std::accumulate(xs.begin(), xs.end(), 0.0) / n;
    const double my = std::accumulate(errors.begin(), errors.end(), 0.0) / n;
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        sxy += (xs[i] - mx) * (errors[i] - my);
        sxx += (xs[i] - mx) * (xs[i] - mx);
    }
    require(sxx > 0.0, ErrorKind::undefined_metric, "nls: all x values are identical");
    return -sxy / sxx;
}

inline double pearson(std::span<const double> a, std::span<const double> b) {
    require(a.size() == b.size() && a.size() >= 2, ErrorKind::undefined_metric, "pearson: need two equal-length series");
    const double n = static_cast<double>(a.size());
    const double ma = std::accumulate(a.begin(), a.end(), 0.0) / n;
    const double mb = std::accumulate(b.begin(), b.end(), 0.0) / n;
    double sab = 0.0, saa = 0.0, sbb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        sab += (a[i] - ma) * (b[i] - mb);
        saa += (a[i] - ma) * (a[i] - ma);
        sbb += (b[i] - mb) * (b[i] - mb);
    }
    require(saa > 0.0 && sbb > 0.0, ErrorKind::undefined_metric, "pearson: constant input");
    return std::clamp(sab / std::sqrt(saa * sbb), -1.0, 1.0);
}

struct GridIndependence {
    double rel_l2 = 0.0;
    double pearson = 1.0;
};

/// Compares a coarse run against a fine run after subsampling the fine one
/// onto the coarse grid. The fine run is the reference.
inline GridIndependence grid_independence(const Trajectory& low, const Trajectory& high,
                                          DownsampleMethod method = DownsampleMethod::stride) {
    require(low.n_frames() == high.n_frames(), ErrorKind::invalid_config, "grid_independence: frame counts differ");
    require(low.channels().size() == high.channels().size(), ErrorKind::invalid_config,
            "grid_independence: channel counts differ");
    const Trajectory aligned = downsample(high, factors_for(high.grid(), low.grid().shape()), method);
    return {rel_l2(low.values(), aligned.values()), pearson(low.values(), aligned.values())};
}

struct MetricReport {
    std::string metric_name = "relative_error";
    std::string split;
    double mean = 0.0;
    double stddev = 0.0;
    std::size_t n_seeds = 0;
};

/// Mean and population standard deviation over seeds (std = 0 for one seed).
inline MetricReport aggregate_over_seeds(std::span<const double> per_seed, std::string split = {},
                                         std::string metric = "relative_error") {
    require(!per_seed.empty(), ErrorKind::undefined_metric, "aggregate_over_seeds: no seeds");
    const double n = static_cast<double>(per_seed.size());
    const double mean = std::accumulate(per_seed.begin(), per_seed.end(), 0.0) / n;
    double var = 0.0;
    for (double e : per_seed) var += (e - mean) * (e - mean);
    return {std::move(metric), std::move(split), mean, std::sqrt(var / n), per_seed.size()};
}

inline constexpr std::size_t kEvalWindowStride = 10;

/// Start frames of evaluation windows: every `stride`-th window that fits.
inline std::vector<std::size_t> eval_window_starts(std::size_t n_frames, std::size_t window_frames,
                                                   std::size_t stride = kEvalWindowStride, std::size_t first = 0) {
    require(stride >= 1 && window_frames >= 1, ErrorKind::invalid_config, "window stride and size must be positive");
    std::vector<std::size_t> out;
    for (std::size_t s = first; s + window_frames <= n_frames; s += stride) out.push_back(s);
    return out;
}

}  // namespace pdeinv
