#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "pdeinv/error.hpp"
#include "pdeinv/grid.hpp"
#include "pdeinv/params.hpp"
#include "pdeinv/solvers/config.hpp"
#include "pdeinv/solvers/navier_stokes.hpp"
#include "pdeinv/spectral.hpp"
#include "pdeinv/system.hpp"

namespace pdeinv {

enum class SpectrumQuantity { energy, enstrophy };

/// Shell-summed spectrum. Shell s collects modes with round(|m|) == s, where
/// m is the integer mode index, so on a 2pi box shells are wavenumbers.
struct EnergySpectrum {
    std::vector<double> k;
    std::vector<double> E;
    /// Domain-averaged 1/2 |u|^2 (or 1/2 w^2) in grid space.
    double total_energy = 0.0;
};

namespace detail {

// Adds 1/2 |c|^2 / N^2 per full-spectrum bin into the shells.
inline void accumulate_shells(SpectralGrid& sg, std::span<const double> values, std::vector<double>& E) {
    const auto hat = sg.forward(values);
    const double n2 = static_cast<double>(sg.points()) * static_cast<double>(sg.points());
    for (std::size_t idx = 0; idx < sg.size(); ++idx) {
        const auto shell = static_cast<std::size_t>(std::floor(sg.mode_norm(idx) + 0.5));
        E[shell] += 0.5 * sg.weight(idx) * std::norm(hat[idx]) / n2;
    }
}

}  // namespace detail

/// Kinetic-energy spectrum of a vorticity field (velocity recovered through
/// the streamfunction). The enstrophy variant bins 1/2 |w_hat|^2 instead.
inline EnergySpectrum energy_spectrum(const Field& w, SpectrumQuantity q = SpectrumQuantity::energy) {
    require(w.grid().ndims() == 2 && w.grid().all_periodic(), ErrorKind::unsupported_grid,
            "energy spectrum needs a periodic 2D field");
    SpectralGrid sg(w.grid());
    const std::size_t nx = w.grid().nx(), ny = w.grid().ny();
    const double corner = std::hypot(static_cast<double>(nx / 2), static_cast<double>(ny / 2));
    const auto shells = static_cast<std::size_t>(std::floor(corner + 0.5)) + 1;
    EnergySpectrum s;
    s.E.assign(shells, 0.0);
    for (std::size_t i = 0; i < shells; ++i) s.k.push_back(static_cast<double>(i));
    double grid_energy = 0.0;
    if (q == SpectrumQuantity::energy) {
        const Field vel = velocity_from_vorticity(w, sg).velocity;
        for (std::size_t c = 0; c < 2; ++c) {
            detail::accumulate_shells(sg, vel.channel(c), s.E);
            for (double v : vel.channel(c)) grid_energy += 0.5 * v * v;
        }
    } else {
        detail::accumulate_shells(sg, w.channel(0), s.E);
        for (double v : w.channel(0)) grid_energy += 0.5 * v * v;
    }
    s.total_energy = grid_energy / static_cast<double>(w.points());
    return s;
}

/// First shell past the spectral peak whose energy falls below rel * E_max.
/// Returns the shell count when the spectrum never falls that low.
inline std::size_t drop_off_shell(const EnergySpectrum& s, double rel = 1e-6) {
    require(!s.E.empty(), ErrorKind::invalid_config, "empty spectrum");
    const auto peak = static_cast<std::size_t>(std::max_element(s.E.begin(), s.E.end()) - s.E.begin());
    const double floor = rel * s.E[peak];
    for (std::size_t k = peak + 1; k < s.E.size(); ++k) {
        if (s.E[k] < floor) return k;
    }
    return s.E.size();
}

inline constexpr double kSpectrumEps = 1e-20;

/// mean_k |log10(a_k + eps) - log10(b_k + eps)|
inline double log_spectral_distance(const EnergySpectrum& a, const EnergySpectrum& b, double eps = kSpectrumEps) {
    require(a.E.size() == b.E.size() && !a.E.empty(), ErrorKind::invalid_config, "spectra have different shell counts");
    double d = 0.0;
    for (std::size_t k = 0; k < a.E.size(); ++k) d += std::abs(std::log10(a.E[k] + eps) - std::log10(b.E[k] + eps));
    return d / static_cast<double>(a.E.size());
}

struct SelfConsistencyReport {
    std::vector<double> frame_distance;
    double mean_distance = 0.0;
    std::size_t drop_off_ref = 0;  // final frame
    std::size_t drop_off_hat = 0;
    bool diverged = false;
    std::string message;
};

/// Re-simulates a reference NS trajectory from its first frame with phi_hat,
/// at the reference resolution and cadence, and compares spectra framewise.
/// `config` supplies the time-stepping settings (dt, cfl, scheme, dealias).
inline SelfConsistencyReport self_consistency(const SystemSpec& system, const Trajectory& ref, const ParamVector& phi_hat,
                                              SolverConfig config) {
    require(system.id == SystemId::ns2d_unforced || system.id == SystemId::ns2d_forced, ErrorKind::unsupported_grid,
            "self-consistency spectra need a periodic 2D vorticity system");
    require(ref.n_frames() >= 2, ErrorKind::insufficient_window, "reference needs at least two frames");
    const auto& t = ref.times();
    config.internal_resolution = config.output_resolution = ref.grid().shape();
    config.burn_in_s = 0.0;
    config.record_interval_s = t[1] - t[0];
    config.horizon_s = t.back() - t.front();
    const double nu = phi_hat.at("nu");
    SelfConsistencyReport out;
    const Field ic = ref.frame(0);
    Trajectory hat(ref.grid(), ref.channels());
    try {
        hat = system.id == SystemId::ns2d_forced ? solve_ns_forced(ic, nu, config, system.drag, system.forcing_k)
                                                 : solve_ns_unforced(ic, nu, config);
    } catch (const Error& e) {
        if (!e.is_numerical()) throw;
        out.diverged = true;
        out.message = e.what();
        return out;
    }
    const std::size_t n = std::min(hat.n_frames(), ref.n_frames());
    double sum = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        const auto sr = energy_spectrum(ref.frame(k));
        const auto sh = energy_spectrum(hat.frame(k));
        out.frame_distance.push_back(log_spectral_distance(sh, sr));
        sum += out.frame_distance.back();
        if (k + 1 == n) {
            out.drop_off_ref = drop_off_shell(sr);
            out.drop_off_hat = drop_off_shell(sh);
        }
    }
    out.mean_distance = sum / static_cast<double>(n);
    return out;
}

}  // namespace pdeinv
