#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "pdeinv/error.hpp"
#include "pdeinv/grid.hpp"
#include "pdeinv/solvers/downsample.hpp"
#include "pdeinv/system.hpp"

namespace pdeinv {

enum class FaceAverage { harmonic, arithmetic };

/// Advection treatment of the spectral vorticity solvers (viscosity and
/// drag are always Crank-Nicolson).
enum class NsScheme { cn_ab2, cn_rk3 };

inline std::string_view to_string(NsScheme s) { return s == NsScheme::cn_ab2 ? "cn-ab2" : "cn-rk3"; }

inline NsScheme parse_ns_scheme(std::string_view s) {
    if (s == "cn-ab2") return NsScheme::cn_ab2;
    if (s == "cn-rk3") return NsScheme::cn_rk3;
    fail(ErrorKind::invalid_config, "unknown NS scheme '" + std::string(s) + "'");
}

inline std::string_view to_string(FaceAverage f) { return f == FaceAverage::harmonic ? "harmonic" : "arithmetic"; }

inline FaceAverage parse_face_average(std::string_view s) {
    if (s == "harmonic") return FaceAverage::harmonic;
    if (s == "arithmetic") return FaceAverage::arithmetic;
    fail(ErrorKind::invalid_config, "unknown face average '" + std::string(s) + "'");
}

/// Time integration, recording and resolution settings for one solve.
/// Times are simulation seconds; recorded timestamps start at 0 at the end
/// of burn-in.
struct SolverConfig {
    std::vector<std::size_t> internal_resolution;
    std::vector<std::size_t> output_resolution;
    double dt = 0.0;  // largest step for the spectral NS solvers
    double cfl = 0.4;  // advective CFL cap for the NS solvers; 0 disables
    NsScheme ns_scheme = NsScheme::cn_ab2;
    double rtol = 1e-6;
    double atol = 1e-6;
    double burn_in_s = 0.0;
    double record_interval_s = 1.0;
    double horizon_s = 0.0;
    bool dealias = true;
    DownsampleMethod downsample_method = DownsampleMethod::stride;
    FaceAverage face_average = FaceAverage::harmonic;
    double linear_tol = 1e-10;
    std::size_t max_steps = 100'000'000;

    void validate() const {
        require(burn_in_s >= 0.0 && std::isfinite(burn_in_s), ErrorKind::invalid_config, "burn_in_s must be >= 0");
        require(record_interval_s > 0.0, ErrorKind::invalid_config, "record_interval_s must be > 0");
        require(cfl >= 0.0, ErrorKind::invalid_config, "cfl must be >= 0");
        require(horizon_s >= 0.0, ErrorKind::invalid_config, "horizon_s must be >= 0");
        require(rtol > 0.0 && atol > 0.0, ErrorKind::invalid_config, "tolerances must be positive");
        for (auto n : internal_resolution) require(n > 0, ErrorKind::invalid_config, "zero-size grid");
        for (auto n : output_resolution) require(n > 0, ErrorKind::invalid_config, "zero-size output grid");
    }

    /// Recording instants relative to the end of burn-in.
    std::vector<double> record_times() const {
        std::vector<double> t;
        const double limit = horizon_s * (1.0 + 1e-12) + 1e-12;
        for (std::size_t m = 0;; ++m) {
            const double tm = static_cast<double>(m) * record_interval_s;
            if (tm > limit) break;
            t.push_back(tm);
        }
        return t;
    }

    /// Checks the config against the solver's grid and returns the
    /// downsampling factors to reach the output resolution.
    std::vector<std::size_t> output_factors(const Grid& grid) const {
        validate();
        if (!internal_resolution.empty()) {
            require(internal_resolution == grid.shape(), ErrorKind::invalid_config,
                    "initial condition does not match internal_resolution");
        }
        if (output_resolution.empty()) return std::vector<std::size_t>(grid.ndims(), 1);
        return factors_for(grid, output_resolution);
    }

    /// Desk-scale defaults per system.
    static SolverConfig defaults(SystemId id) {
        SolverConfig c;
        switch (id) {
        case SystemId::rd2d:
            c.internal_resolution = c.output_resolution = {128, 128};
            c.rtol = 1e-6;
            c.atol = 1e-6;
            c.burn_in_s = 1.0;
            c.record_interval_s = 0.05;
            c.horizon_s = 5.0;
            break;
        case SystemId::ns2d_unforced:
            c.internal_resolution = {256, 256};
            c.output_resolution = {64, 64};
            c.dt = 1e-4;
            c.burn_in_s = 15.0;
            c.record_interval_s = 3.0 / 64.0;
            c.horizon_s = 3.0;
            break;
        case SystemId::ns2d_forced:
            c.internal_resolution = {256, 256};
            c.output_resolution = {64, 64};
            c.dt = 2e-3;
            c.cfl = 0.5;
            c.ns_scheme = NsScheme::cn_rk3;
            c.burn_in_s = 40.0;
            c.record_interval_s = 14.75 / 64.0;
            c.horizon_s = 14.75;
            break;
        case SystemId::kdv1d:
            c.internal_resolution = c.output_resolution = {256};
            c.rtol = 1e-9;
            c.atol = 1e-9;
            c.burn_in_s = 40.0;
            c.record_interval_s = 102.0 / 140.0;
            c.horizon_s = 102.0;
            c.dealias = false;
            break;
        case SystemId::darcy2d:
            c.internal_resolution = c.output_resolution = {121, 121};
            c.record_interval_s = 1.0;
            c.horizon_s = 0.0;
            c.dealias = false;
            break;
        }
        return c;
    }
};

}  // namespace pdeinv
