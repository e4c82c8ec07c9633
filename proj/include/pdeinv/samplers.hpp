#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "pdeinv/error.hpp"
#include "pdeinv/grid.hpp"
#include "pdeinv/random.hpp"
#include "pdeinv/spectral.hpp"

namespace pdeinv {

struct GrfConfig {
    double length_scale = 0.8;
    double variance = 1.0;
    Grid grid;
    std::string channel = "u";
};

/// Squared-exponential spectral density exp(-l^2 |k|^2 / 2) (unnormalized).
inline double grf_spectral_density(double length_scale, double k2) {
    return std::exp(-0.5 * length_scale * length_scale * k2);
}

/// Zero-mean stationary Gaussian random field on a periodic grid.
///
/// White noise is transformed, which yields conjugate-symmetric complex
/// Gaussian coefficients; they are weighted by sqrt of the spectral density,
/// the mean mode is dropped, and the result is scaled to the requested
/// pointwise variance.
inline Field sample_grf(const GrfConfig& config, std::uint64_t seed) {
    require(config.grid.all_periodic(), ErrorKind::unsupported_grid, "GRF sampling needs a periodic grid");
    require(config.length_scale > 0.0, ErrorKind::invalid_config, "GRF length scale must be positive");
    require(config.variance >= 0.0, ErrorKind::invalid_config, "GRF variance must be non-negative");
    SpectralGrid sg(config.grid);
    const std::size_t n = config.grid.size();
    Rng rng(seed);
    std::vector<double> noise(n);
    for (auto& x : noise) x = rng.normal();
    auto spec = sg.forward(noise);
    double total = 0.0;
    for (std::size_t idx = 0; idx < sg.size(); ++idx) {
        const double s = idx == 0 ? 0.0 : grf_spectral_density(config.length_scale, sg.k2(idx));
        total += sg.weight(idx) * s;
        spec[idx] *= std::sqrt(s);
    }
    Field out(config.grid, {config.channel});
    if (total <= 0.0) return out;
    sg.fft().inverse(spec, out.channel(0));
    const double scale = std::sqrt(config.variance / (total / static_cast<double>(n)));
    for (auto& v : out.channel(0)) v *= scale;
    return out;
}

struct KdvMode {
    double amplitude = 1.0;
    double wavenumber = 1.0;  // l_k
    double phase = 0.0;       // phi_k
};

struct KdvIcConfig {
    int K = 10;
    /// Domain length; 0 means "take it from the grid".
    double L = 0.0;
    Grid grid;
    /// phi_k ~ U(0,1) is used as radians unless this is set, in which case
    /// it is a fraction of a full turn.
    bool phase_in_cycles = false;
    bool round_wavenumbers = true;
    /// Test hook: bypasses sampling with explicit modes.
    std::optional<std::vector<KdvMode>> forced_modes;
};

inline std::vector<KdvMode> sample_kdv_modes(const KdvIcConfig& config, std::uint64_t seed) {
    require(config.K >= 1, ErrorKind::invalid_config, "KdV initial condition needs K >= 1");
    if (config.forced_modes) return *config.forced_modes;
    Rng rng(seed);
    std::vector<KdvMode> modes(static_cast<std::size_t>(config.K));
    for (auto& m : modes) {
        m.amplitude = rng.uniform();
        m.wavenumber = rng.uniform(1.0, 3.0);
        if (config.round_wavenumbers) m.wavenumber = std::round(m.wavenumber);
        m.phase = rng.uniform();
        if (config.phase_in_cycles) m.phase *= 2.0 * std::numbers::pi;
    }
    return modes;
}

/// u0(x) = sum_k A_k sin(2 pi l_k x / L + phi_k) on a 1D periodic grid.
inline Field sample_kdv_ic(const KdvIcConfig& config, std::uint64_t seed) {
    require(config.K >= 1, ErrorKind::invalid_config, "KdV initial condition needs K >= 1");
    require(config.grid.ndims() == 1 && config.grid.all_periodic(), ErrorKind::unsupported_grid,
            "KdV initial condition needs a 1D periodic grid");
    const Axis& ax = config.grid.axis(0);
    const double L = config.L > 0.0 ? config.L : ax.length();
    require(std::abs(L - ax.length()) <= 1e-12 * L, ErrorKind::invalid_config,
            "grid length does not match L");
    const auto modes = sample_kdv_modes(config, seed);
    Field out(config.grid, {"u"});
    auto u = out.channel(0);
    const double two_pi = 2.0 * std::numbers::pi;
    for (std::size_t i = 0; i < ax.n; ++i) {
        const double x = ax.coord(i);
        double s = 0.0;
        for (const auto& m : modes) s += m.amplitude * std::sin(two_pi * m.wavenumber * (x - ax.lo) / L + m.phase);
        u[i] = s;
    }
    return out;
}

/// Spectral amplitude of the Darcy latent field, sqrt of (|k|^2 + 9)^-2.
inline double darcy_latent_amplitude(double k2) { return 1.0 / (k2 + 9.0); }

/// Latent g ~ N(0, (-lap + 9)^-2) on a periodic surrogate of `grid`
/// (same point count and spacing), before thresholding.
inline std::vector<double> sample_darcy_latent(const Grid& grid, std::uint64_t seed) {
    require(grid.ndims() == 2, ErrorKind::unsupported_grid, "Darcy coefficients need a 2D grid");
    const double hx = grid.spacing(0), hy = grid.spacing(1);
    Grid periodic({Axis{grid.nx(), 0.0, hx * static_cast<double>(grid.nx()), true, Centering::vertex},
                   Axis{grid.ny(), 0.0, hy * static_cast<double>(grid.ny()), true, Centering::vertex}});
    SpectralGrid sg(periodic);
    Rng rng(seed);
    std::vector<double> noise(periodic.size());
    for (auto& x : noise) x = rng.normal();
    auto spec = sg.forward(noise);
    spec[0] = 0.0;
    for (std::size_t idx = 1; idx < sg.size(); ++idx) spec[idx] *= darcy_latent_amplitude(sg.k2(idx));
    return sg.inverse(spec);
}

/// Thresholded latent: 12 where g >= 0, 3 where g < 0.
inline CoefficientField sample_darcy_coeff(const Grid& grid, std::uint64_t seed) {
    auto g = sample_darcy_latent(grid, seed);
    for (auto& v : g) v = v >= 0.0 ? 12.0 : 3.0;
    return CoefficientField(grid, std::move(g));
}

}  // namespace pdeinv
