#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <filesystem>
#include <mutex>
#include <numbers>
#include <set>
#include <thread>
#include <vector>

#include "pdeinv/manifest.hpp"
#include "pdeinv/random.hpp"
#include "pdeinv/samplers.hpp"
#include "pdeinv/solvers/darcy.hpp"
#include "pdeinv/solvers/kdv.hpp"
#include "pdeinv/solvers/navier_stokes.hpp"
#include "pdeinv/solvers/reaction_diffusion.hpp"
#include "pdeinv/splits.hpp"

namespace pdeinv {

/// Solver-resolution grid for a system.
inline Grid internal_grid(const SystemSpec& s, const std::vector<std::size_t>& res) {
    const double lo = s.domain_lo, hi = s.domain_hi;
    switch (s.id) {
    case SystemId::rd2d: return Grid::cell_2d(res.at(0), res.at(1), lo, hi);
    case SystemId::ns2d_unforced:
    case SystemId::ns2d_forced: return Grid::periodic_2d(res.at(0), res.at(1), lo, hi);
    case SystemId::kdv1d: return Grid::periodic_1d(res.at(0), lo, hi);
    case SystemId::darcy2d: return Grid::vertex_2d(res.at(0), res.at(1), lo, hi);
    }
    fail(ErrorKind::invalid_config, "unknown system");
}

/// GRF length scale used for initial conditions: 0.8 on the 2*pi forced
/// domain, the same fraction of the domain for unforced NS, 0.1 for RD.
inline double default_ic_length_scale(const SystemSpec& s) {
    switch (s.id) {
    case SystemId::ns2d_forced: return 0.8;
    case SystemId::ns2d_unforced: return 0.8 * (s.domain_hi - s.domain_lo) / (2.0 * std::numbers::pi);
    case SystemId::rd2d: return 0.1;
    default: return 0.0;
    }
}

/// Initial condition (or, for Darcy, nothing: use sample_darcy_coeff).
inline Field sample_initial_condition(const SystemSpec& s, const Grid& grid, std::uint64_t seed, double length_scale = 0.0) {
    if (length_scale <= 0.0) length_scale = default_ic_length_scale(s);
    switch (s.id) {
    case SystemId::ns2d_unforced:
    case SystemId::ns2d_forced: {
        GrfConfig gc;
        gc.grid = grid;
        gc.length_scale = length_scale;
        gc.channel = "w";
        return sample_grf(gc, seed);
    }
    case SystemId::rd2d: {
        // GRF on a periodic grid with the same points, copied onto the cell grid.
        GrfConfig gc;
        gc.grid = Grid::periodic_2d(grid.nx(), grid.ny(), grid.axis(0).lo, grid.axis(0).hi);
        gc.length_scale = length_scale;
        Field ic(grid, {"u", "v"});
        for (std::size_t c = 0; c < 2; ++c) {
            const Field f = sample_grf(gc, derive_seed(seed, c));
            std::copy(f.values().begin(), f.values().end(), ic.channel(c).begin());
        }
        return ic;
    }
    case SystemId::kdv1d: {
        KdvIcConfig kc;
        kc.grid = grid;
        return sample_kdv_ic(kc, seed);
    }
    case SystemId::darcy2d: break;
    }
    fail(ErrorKind::invalid_config, "Darcy has no initial condition; sample a coefficient field");
}

/// One time-dependent solve for a system.
inline Trajectory solve_system(const SystemSpec& s, const Field& ic, const ParamVector& phi, const SolverConfig& c) {
    switch (s.id) {
    case SystemId::rd2d: return solve_rd(ic, phi, c);
    case SystemId::ns2d_unforced: return solve_ns_unforced(ic, phi.at("nu"), c);
    case SystemId::ns2d_forced: return solve_ns_forced(ic, phi.at("nu"), c, s.drag, s.forcing_k);
    case SystemId::kdv1d: return solve_kdv(ic, phi.at("delta"), c);
    case SystemId::darcy2d: break;
    }
    fail(ErrorKind::invalid_config, "Darcy is steady; use solve_darcy");
}

struct GenerateSpec {
    /// Values per parameter slot in system order; empty means the system counts.
    std::vector<std::size_t> param_counts;
    /// Explicit parameter values; when non-empty they replace the grid.
    std::vector<ParamVector> param_values;
    std::size_t n_ics = 0;  // 0: system default
    std::uint64_t master_seed = 0;
    SolverConfig solver;
    std::size_t jobs = 1;
    double ic_length_scale = 0.0;  // 0: per-system default
    bool make_splits = true;
    SplitConfig split;
};

/// Cartesian parameter grid with per-slot counts (each slot's own spacing).
inline std::vector<ParamVector> parameter_grid(const SystemSpec& s, const std::vector<std::size_t>& counts) {
    if (s.field_parameter()) return {ParamVector{}};
    std::vector<std::vector<double>> axes;
    for (std::size_t a = 0; a < s.params.size(); ++a) {
        axes.push_back(s.params[a].sample(counts.empty() ? s.params[a].count : counts.at(a)));
    }
    std::vector<ParamVector> out{ParamVector{}};
    for (std::size_t a = 0; a < axes.size(); ++a) {
        std::vector<ParamVector> next;
        for (const auto& base : out) {
            for (double v : axes[a]) {
                ParamVector p = base;
                p.set(s.params[a].name, v);
                next.push_back(p);
            }
        }
        out = std::move(next);
    }
    return out;
}

/// Per-cell seeds hash(master, param, ic); regenerated until unique.
inline std::vector<std::vector<std::uint64_t>> derive_ic_seeds(std::uint64_t master, std::size_t n_params, std::size_t n_ics) {
    std::set<std::uint64_t> seen;
    std::vector<std::vector<std::uint64_t>> seeds(n_params, std::vector<std::uint64_t>(n_ics));
    for (std::size_t i = 0; i < n_params; ++i) {
        for (std::size_t j = 0; j < n_ics; ++j) {
            std::uint64_t s = derive_seed(master, i, j);
            while (!seen.insert(s).second) s = splitmix64(s);
            seeds[i][j] = s;
        }
    }
    return seeds;
}

/// Samples, solves and writes every (parameter, IC) cell, then splits and
/// writes the manifest last. Solver failures become manifest failures.
inline DatasetManifest generate_dataset(const SystemSpec& system, const GenerateSpec& spec,
                                        const std::filesystem::path& out_dir) {
    spec.solver.validate();
    require(!spec.solver.internal_resolution.empty(), ErrorKind::invalid_config, "internal_resolution is required");
    std::error_code ec;
    std::filesystem::create_directories(out_dir / "traj", ec);
    require(!ec, ErrorKind::io, "cannot create " + (out_dir / "traj").string() + ": " + ec.message());

    DatasetManifest m;
    m.system = system;
    m.solver_config = spec.solver;
    m.master_seed = spec.master_seed;
    m.param_values = spec.param_values.empty() ? parameter_grid(system, spec.param_counts) : spec.param_values;
    for (const auto& phi : spec.param_values) {
        for (const auto& r : system.params) {
            const auto v = phi.get(r.name);
            require(v.has_value(), ErrorKind::invalid_config, "parameter value lacks '" + r.name + "'");
            require(*v >= r.lo && *v <= r.hi, ErrorKind::invalid_config,
                    "param out of declared range: " + r.name + " = " + std::to_string(*v));
        }
    }
    const std::size_t n_ics = spec.n_ics ? spec.n_ics : system.default_ics;
    require(n_ics >= 1, ErrorKind::invalid_config, "need at least one IC");
    m.ic_seeds = derive_ic_seeds(spec.master_seed, m.param_values.size(), n_ics);
    m.normalize_ids();
    if (system.field_parameter()) m.darcy_stats.assign(n_ics, 0.0);

    const Grid grid = internal_grid(system, spec.solver.internal_resolution);
    const std::size_t cells = m.param_values.size() * n_ics;
    std::atomic<std::size_t> next{0};
    std::mutex mu;
    std::vector<FailedCell> failures;
    std::exception_ptr fatal;

    auto work = [&] {
        for (;;) {
            const std::size_t cell = next.fetch_add(1);
            if (cell >= cells) return;
            const std::size_t i = cell / n_ics, j = cell % n_ics;
            const std::uint64_t seed = m.ic_seeds[i][j];
            try {
                if (system.field_parameter()) {
                    const auto a = sample_darcy_coeff(grid, seed);
                    const Field u = solve_darcy(a, spec.solver);
                    const Field a_out = downsample(a.as_field(), spec.solver.output_factors(grid), spec.solver.downsample_method);
                    write_trajectory(trajectory_file(out_dir, i, j), Trajectory(u.grid(), u.channels(), {0.0}, {u.values().begin(), u.values().end()}));
                    write_trajectory(coefficient_file(out_dir, i, j), Trajectory(a_out.grid(), {"a"}, {0.0}, {a_out.values().begin(), a_out.values().end()}));
                    std::lock_guard lock(mu);
                    m.darcy_stats[j] = darcy_split_stat(a);
                } else {
                    const Field ic = sample_initial_condition(system, grid, seed, spec.ic_length_scale);
                    write_trajectory(trajectory_file(out_dir, i, j), solve_system(system, ic, m.param_values[i], spec.solver));
                }
            } catch (const Error& e) {
                if (e.kind() == ErrorKind::io || e.kind() == ErrorKind::invalid_config) {
                    std::lock_guard lock(mu);
                    if (!fatal) fatal = std::current_exception();
                    next.store(cells);
                    return;
                }
                std::lock_guard lock(mu);
                failures.push_back({i, j, std::string(to_string(e.kind())), e.what()});
            } catch (...) {
                std::lock_guard lock(mu);
                if (!fatal) fatal = std::current_exception();
                next.store(cells);
                return;
            }
        }
    };
    const std::size_t jobs = std::max<std::size_t>(1, std::min(spec.jobs, cells));
    std::vector<std::thread> pool;
    for (std::size_t t = 1; t < jobs; ++t) pool.emplace_back(work);
    work();
    for (auto& t : pool) t.join();
    if (fatal) std::rethrow_exception(fatal);

    std::sort(failures.begin(), failures.end(),
              [](const FailedCell& a, const FailedCell& b) { return std::tie(a.param_idx, a.ic_idx) < std::tie(b.param_idx, b.ic_idx); });
    m.failures = std::move(failures);
    if (spec.make_splits) {
        // Grids too coarse to leave anything trainable are written unsplit.
        try {
            m.splits = system.field_parameter() ? build_darcy_splits(m.darcy_stats, spec.split)
                                                : build_splits(m.param_values, n_ics, system, spec.split);
        } catch (const Error& e) {
            if (e.kind() != ErrorKind::empty_train) throw;
        }
    }
    write_manifest(out_dir, m);
    return m;
}

// ---- data-scaling subsets ---------------------------------------------------

struct SubsetSpec {
    double ic_fraction = 1.0;
    double param_fraction = 1.0;
    double horizon_fraction = 1.0;

    void validate() const {
        for (double f : {ic_fraction, param_fraction, horizon_fraction}) {
            require(f > 0.0 && f <= 1.0 && std::isfinite(f), ErrorKind::invalid_config, "subset fractions must be in (0, 1]");
        }
    }
};

/// ceil(fraction * n), at least 1. The tiny slack keeps exact products
/// such as 0.2 * 5 from rounding up past the integer.
inline std::size_t ceil_count(double fraction, std::size_t n) {
    const double x = fraction * static_cast<double>(n);
    return std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(x - 1e-9)));
}

/// `k` evenly spread indices of [0, n) that include both ends when k >= 2.
inline std::vector<std::size_t> spread_indices(std::size_t n, std::size_t k) {
    std::vector<std::size_t> out;
    if (k >= n) {
        out.resize(n);
        std::iota(out.begin(), out.end(), std::size_t{0});
        return out;
    }
    if (k == 1) return {0};
    for (std::size_t m = 0; m < k; ++m) {
        out.push_back(static_cast<std::size_t>(std::llround(static_cast<double>(m) * static_cast<double>(n - 1) / static_cast<double>(k - 1))));
    }
    return out;
}

/// Manifest-only view: a seeded random ceil(f * n) ICs per parameter; an
/// evenly spread ceil(f * n) of the training parameter values (endpoints
/// kept, evaluation rows untouched); and a horizon cut that trains on the
/// leading ceil(f * T) frames and evaluates on the final 25%.
inline DatasetManifest subset_dataset(const DatasetManifest& base, const SubsetSpec& spec, std::uint64_t seed,
                                      const std::string& data_root_ref) {
    spec.validate();
    DatasetManifest m = base;
    m.normalize_ids();
    m.data_root = data_root_ref;
    const std::size_t n_frames = base.system.time_dependent() ? base.solver_config.record_times().size() : 1;

    auto is_train_row = [&](std::size_t i) {
        if (!m.splits) return true;
        const auto& row = m.splits->labels[i];
        return std::any_of(row.begin(), row.end(), [](SplitLabel l) { return l == SplitLabel::train; });
    };
    // Parameter thinning over train rows only.
    std::vector<std::size_t> train_rows;
    for (std::size_t i = 0; i < m.n_params(); ++i) {
        if (is_train_row(i)) train_rows.push_back(i);
    }
    std::set<std::size_t> keep_rows;
    for (std::size_t i = 0; i < m.n_params(); ++i) {
        if (!is_train_row(i)) keep_rows.insert(i);
    }
    for (auto pos : spread_indices(train_rows.size(), ceil_count(spec.param_fraction, train_rows.size()))) {
        keep_rows.insert(train_rows[pos]);
    }
    // Darcy rows hold every sample; thin them like ICs instead.
    const bool ic_axis_is_sample = m.system.field_parameter();
    const double ic_frac = ic_axis_is_sample ? spec.param_fraction : spec.ic_fraction;

    DatasetManifest out = m;
    out.param_values.clear();
    out.ic_seeds.clear();
    out.param_ids.clear();
    out.ic_ids.clear();
    if (out.splits) out.splits->labels.clear();
    std::vector<double> stats;
    Rng rng(derive_seed(seed, 0x5ab5e7));
    for (std::size_t i : keep_rows) {
        const std::size_t n = m.ic_seeds[i].size();
        std::vector<std::size_t> cols(n);
        std::iota(cols.begin(), cols.end(), std::size_t{0});
        // Only training cells are thinned; evaluation cells stay.
        std::vector<std::size_t> train_cols, kept;
        for (auto c : cols) {
            const bool train = !m.splits || m.splits->labels[i][c] == SplitLabel::train;
            (train ? train_cols : kept).push_back(c);
        }
        const std::size_t k = train_cols.empty() ? 0 : ceil_count(ic_frac, train_cols.size());
        for (std::size_t t = 0; t < k; ++t) {
            const std::size_t pick = t + rng.index(train_cols.size() - t);
            std::swap(train_cols[t], train_cols[pick]);
        }
        train_cols.resize(k);
        kept.insert(kept.end(), train_cols.begin(), train_cols.end());
        std::sort(kept.begin(), kept.end());

        out.param_values.push_back(m.param_values[i]);
        out.param_ids.push_back(m.param_ids[i]);
        std::vector<std::uint64_t> s;
        std::vector<std::size_t> ids;
        std::vector<SplitLabel> labels;
        for (auto c : kept) {
            s.push_back(m.ic_seeds[i][c]);
            ids.push_back(m.ic_ids[i][c]);
            if (m.splits) labels.push_back(m.splits->labels[i][c]);
            if (!m.darcy_stats.empty()) stats.push_back(m.darcy_stats[c]);
        }
        out.ic_seeds.push_back(std::move(s));
        out.ic_ids.push_back(std::move(ids));
        if (out.splits) out.splits->labels.push_back(std::move(labels));
    }
    out.darcy_stats = std::move(stats);
    if (m.system.time_dependent()) {
        HorizonView h;
        h.fraction = spec.horizon_fraction;
        h.train_frames = ceil_count(spec.horizon_fraction, n_frames);
        h.eval_start = n_frames - ceil_count(0.25, n_frames);
        out.horizon = h;
    }
    return out;
}

}  // namespace pdeinv
