#pragma once

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "pdeinv/dataset.hpp"
#include "pdeinv/degradation.hpp"
#include "pdeinv/inverse.hpp"
#include "pdeinv/io.hpp"
#include "pdeinv/manifest.hpp"
#include "pdeinv/metrics.hpp"
#include "pdeinv/residual.hpp"
#include "pdeinv/spectra.hpp"
#include "pdeinv/splits.hpp"

#ifndef PDEINV_VERSION
#define PDEINV_VERSION "0.1.0"
#endif

namespace pdeinv::cli {

namespace fs = std::filesystem;

enum ExitCode : int { ok = 0, config_error = 2, numerical_error = 3, io_error = 4 };

inline int exit_code_for(const Error& e) {
    if (e.kind() == ErrorKind::io) return io_error;
    if (e.is_numerical()) return numerical_error;
    return config_error;
}

namespace detail {

inline std::vector<std::size_t> parse_resolution(const std::string& s, const SystemSpec& sys) {
    std::vector<std::size_t> out;
    std::stringstream ss(s);
    std::string part;
    while (std::getline(ss, part, 'x')) {
        try {
            std::size_t used = 0;
            const long v = std::stol(part, &used);
            require(used == part.size() && v > 0, ErrorKind::invalid_config, "bad resolution '" + s + "'");
            out.push_back(static_cast<std::size_t>(v));
        } catch (const std::logic_error&) {
            fail(ErrorKind::invalid_config, "bad resolution '" + s + "'");
        }
    }
    const std::size_t dims = sys.id == SystemId::kdv1d ? 1 : 2;
    if (out.size() == 1 && dims == 2) out.push_back(out[0]);
    require(out.size() == dims, ErrorKind::invalid_config, "resolution '" + s + "' has the wrong rank");
    return out;
}

inline std::pair<double, double> parse_band(const std::string& s) {
    const auto colon = s.find(':');
    require(colon != std::string::npos, ErrorKind::invalid_config, "band must be lo:hi");
    try {
        return {std::stod(s.substr(0, colon)), std::stod(s.substr(colon + 1))};
    } catch (const std::logic_error&) {
        fail(ErrorKind::invalid_config, "band must be lo:hi, got '" + s + "'");
    }
}

/// PDEINV_SEED, when set, replaces the --seed value.
inline std::uint64_t resolve_seed(std::uint64_t flag) {
    const char* env = std::getenv("PDEINV_SEED");
    if (!env || !*env) return flag;
    try {
        std::size_t used = 0;
        const unsigned long long v = std::stoull(env, &used);
        require(used == std::string(env).size(), ErrorKind::invalid_config, "PDEINV_SEED is not an integer");
        return v;
    } catch (const std::logic_error&) {
        fail(ErrorKind::invalid_config, std::string("PDEINV_SEED is not an integer: ") + env);
    }
}

inline void write_run_json(const fs::path& dir, const std::string& command, json config) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    require(!ec, ErrorKind::io, "cannot create " + dir.string());
    write_json_atomic(dir / "run.json", json{{"command", command}, {"version", PDEINV_VERSION}, {"config", std::move(config)}});
}

inline fs::path cell_file(const DatasetManifest& m, const fs::path& dir, std::size_t row, std::size_t col) {
    return trajectory_file(data_root(m, dir), m.param_ids.at(row), m.ic_ids.at(row).at(col));
}

inline fs::path cell_coefficient(const DatasetManifest& m, const fs::path& dir, std::size_t row, std::size_t col) {
    return coefficient_file(data_root(m, dir), m.param_ids.at(row), m.ic_ids.at(row).at(col));
}

inline DatasetManifest load_dataset(const fs::path& dir) {
    require(fs::exists(dir / "manifest.json"), ErrorKind::io, "no manifest.json in " + dir.string());
    DatasetManifest m = read_manifest(dir);
    m.normalize_ids();
    const auto v = validate_manifest(m);
    require(v.empty(), ErrorKind::invalid_config, v.empty() ? "" : "invalid manifest: " + v.front());
    return m;
}

inline bool in_split(const DatasetManifest& m, std::size_t row, std::size_t col, SplitLabel label) {
    require(m.splits.has_value(), ErrorKind::invalid_config, "dataset has no splits; run `split --write` first");
    return m.splits->labels.at(row).at(col) == label;
}

inline ParamVector restrict_to(const ParamVector& phi, const std::vector<std::string>& names) {
    ParamVector out;
    for (const auto& n : names) out.set(n, phi.at(n));
    return out;
}

}  // namespace detail

// ---- generate -----------------------------------------------------------------

struct GenerateOptions {
    std::string system;
    bool defaults = false;
    std::string params_file;
    std::size_t ics = 0;
    std::uint64_t seed = 0;
    std::string out;
    std::string resolution, internal_resolution;
    std::optional<double> cadence, horizon, burn_in, dt;
    std::vector<std::size_t> param_counts;
    std::size_t jobs = 1;
    std::string solver_config;
    bool no_splits = false;
};

/// Parameter values from a JSON file: {"name": [values...]} per slot (cartesian
/// product), or {"values": [{"name": value, ...}, ...]}.
inline std::vector<ParamVector> read_params_file(const fs::path& path, const SystemSpec& sys) {
    const json j = read_json_file(path);
    std::vector<ParamVector> out;
    try {
        if (j.contains("values")) {
            for (const auto& row : j.at("values")) out.push_back(param_vector_from_json(row));
            return out;
        }
        out.emplace_back();
        for (const auto& r : sys.params) {
            require(j.contains(r.name), ErrorKind::invalid_config, "params file lacks '" + r.name + "'");
            std::vector<ParamVector> next;
            for (const auto& base : out) {
                for (const auto& v : j.at(r.name)) {
                    ParamVector p = base;
                    p.set(r.name, v.get<double>());
                    next.push_back(p);
                }
            }
            out = std::move(next);
        }
    } catch (const json::exception& e) {
        fail(ErrorKind::invalid_config, std::string("malformed params file: ") + e.what());
    }
    return out;
}

inline int run_generate(GenerateOptions o) {
    const SystemSpec sys = SystemSpec::defaults(parse_system_id(o.system));
    require(o.defaults != !o.params_file.empty(), ErrorKind::invalid_config, "give exactly one of --defaults or --params-file");
    GenerateSpec spec;
    spec.master_seed = detail::resolve_seed(o.seed);
    spec.n_ics = o.ics;
    spec.jobs = o.jobs;
    spec.make_splits = !o.no_splits;
    spec.split = SplitConfig::defaults(sys.id);
    spec.split.seed = spec.master_seed;
    SolverConfig c = SolverConfig::defaults(sys.id);
    if (!o.solver_config.empty()) c = solver_config_from_json(read_json_file(o.solver_config), c);
    if (!o.internal_resolution.empty()) c.internal_resolution = detail::parse_resolution(o.internal_resolution, sys);
    if (!o.resolution.empty()) c.output_resolution = detail::parse_resolution(o.resolution, sys);
    if (o.internal_resolution.empty() && !o.resolution.empty()) {
        // A coarser output than the default internal grid keeps the default;
        // a finer one solves at the output resolution.
        for (std::size_t a = 0; a < c.output_resolution.size(); ++a) {
            if (c.output_resolution[a] > c.internal_resolution[a]) c.internal_resolution = c.output_resolution;
        }
    }
    if (o.cadence) c.record_interval_s = *o.cadence;
    if (o.horizon) c.horizon_s = *o.horizon;
    if (o.burn_in) c.burn_in_s = *o.burn_in;
    if (o.dt) c.dt = *o.dt;
    c.validate();
    spec.solver = c;
    spec.param_counts = o.param_counts;
    if (!o.params_file.empty()) {
        require(!sys.field_parameter(), ErrorKind::invalid_config, "Darcy coefficients are sampled, not listed");
        spec.param_values = read_params_file(o.params_file, sys);
    }

    const fs::path out(o.out);
    const auto m = generate_dataset(sys, spec, out);
    json cfg{{"system", to_string(sys.id)},
             {"seed", spec.master_seed},
             {"ics", m.n_ics()},
             {"param_counts", spec.param_counts},
             {"params_file", o.params_file},
             {"jobs", spec.jobs},
             {"splits", spec.make_splits},
             {"solver", to_json(c)}};
    detail::write_run_json(out, "generate", cfg);
    const std::size_t cells = m.n_params() * m.n_ics();
    std::cout << json{{"out", out.string()}, {"cells", cells}, {"failures", m.failures.size()}, {"split", m.splits.has_value()}}.dump()
              << "\n";
    return m.failures.size() == cells ? numerical_error : ok;
}

// ---- split --------------------------------------------------------------------

struct SplitOptions {
    std::string dataset;
    std::optional<double> extreme_frac;
    std::string band;
    std::optional<double> val_frac, test_frac;
    std::optional<std::uint64_t> seed;  // default: the dataset's master seed
    bool write = false;
    std::string run_dir;
};

inline int run_split(const SplitOptions& o) {
    const fs::path dir(o.dataset);
    DatasetManifest m = detail::load_dataset(dir);
    SplitConfig c = SplitConfig::defaults(m.system.id);
    if (o.extreme_frac || !o.band.empty()) c.explicit_bands.clear();
    if (o.extreme_frac) c.extreme_frac = *o.extreme_frac;
    if (!o.band.empty()) std::tie(c.middle_lo_frac, c.middle_hi_frac) = detail::parse_band(o.band);
    if (o.val_frac) c.val_frac = *o.val_frac;
    if (o.test_frac) c.test_id_frac = *o.test_frac;
    c.seed = detail::resolve_seed(o.seed.value_or(m.master_seed));
    SplitAssignment s;
    json bands = json::object();
    if (m.system.field_parameter()) {
        require(!m.darcy_stats.empty(), ErrorKind::invalid_config, "Darcy dataset lacks per-sample statistics");
        s = build_darcy_splits(m.darcy_stats, c);
    } else {
        require(m.n_ics() > 0, ErrorKind::invalid_config, "dataset has no ICs");
        s = build_splits(m.param_values, m.n_ics(), m.system, c);
        for (const auto& name : split_axes(m.system, c)) {
            const auto b = bands_for(m.system.range(name), c);
            json jb{{"lower_extreme_hi", b.lower_extreme_hi}, {"upper_extreme_lo", b.upper_extreme_lo}};
            if (b.middle) jb["middle"] = {b.middle->first, b.middle->second};
            bands[name] = jb;
        }
        // Views may hold ragged rows; relabel per row length.
        for (std::size_t i = 0; i < m.n_params(); ++i) s.labels[i].resize(m.ic_seeds[i].size(), s.labels[i].front());
    }
    json counts = json::object();
    for (auto l : {SplitLabel::train, SplitLabel::val, SplitLabel::test_id, SplitLabel::ood_nonextreme, SplitLabel::ood_extreme}) {
        counts[std::string(to_string(l))] = s.count(l);
    }
    json values = json::object();
    for (std::size_t i = 0; i < m.n_params() && !m.system.field_parameter(); ++i) {
        values[std::string(to_string(s.labels[i].front()))].push_back(to_json(m.param_values[i]));
    }
    if (o.write) {
        m.splits = s;
        write_manifest(dir, m);
    }
    detail::write_run_json(o.run_dir.empty() ? fs::current_path() : fs::path(o.run_dir), "split",
                           json{{"dataset", o.dataset}, {"split", to_json(c)}, {"write", o.write}});
    std::cout << json{{"counts", counts}, {"bands", bands}, {"values", values}}.dump() << "\n";
    return ok;
}

// ---- invert -------------------------------------------------------------------

struct InvertOptions {
    std::string dataset;
    std::string method = "lsq";
    std::string split;
    std::size_t window_frames = 2;
    bool derivative_channels = false;
    std::size_t stride = kEvalWindowStride;
    std::size_t candidates = 64;
    std::vector<std::string> targets;
    std::string out;
    std::string run_dir;
};

inline int run_invert(const InvertOptions& o) {
    const fs::path dir(o.dataset);
    const DatasetManifest m = detail::load_dataset(dir);
    const SplitLabel label = parse_split_label(o.split);
    require(o.method == "lsq" || o.method == "scan" || o.method == "pixelwise", ErrorKind::invalid_config,
            "unknown method '" + o.method + "'");
    const bool darcy = m.system.field_parameter();
    require(darcy == (o.method == "pixelwise"), ErrorKind::invalid_config,
            darcy ? "Darcy inversion uses --method pixelwise" : "pixelwise inversion is for Darcy only");
    require(o.window_frames >= 2, ErrorKind::invalid_config, "--window-frames must be at least 2");

    std::vector<std::string> targets = o.targets;
    if (targets.empty() && !darcy) {
        for (const auto& p : m.system.params) targets.push_back(p.name);
    }
    for (const auto& t : targets) (void)m.system.range(t);
    require(o.method != "scan" || targets.size() == 1, ErrorKind::invalid_config,
            "scan inverts one slot; name it with --target");

    const fs::path run_dir = o.run_dir.empty() ? fs::current_path() : fs::path(o.run_dir);
    std::error_code ec;
    fs::create_directories(run_dir, ec);
    require(!ec, ErrorKind::io, "cannot create " + run_dir.string());
    const fs::path out_path = o.out.empty() ? run_dir / "predictions.jsonl" : fs::path(o.out);
    std::ofstream rows(out_path, std::ios::trunc);
    require(rows.good(), ErrorKind::io, "cannot write " + out_path.string());
    if (o.derivative_channels) fs::create_directories(run_dir / "derivatives");
    if (darcy) fs::create_directories(run_dir / "pred");

    std::vector<double> errors;
    std::size_t failed_windows = 0;
    for (std::size_t i = 0; i < m.n_params(); ++i) {
        for (std::size_t j = 0; j < m.ic_seeds[i].size(); ++j) {
            if (!detail::in_split(m, i, j, label) || m.failed(i, j)) continue;
            const Trajectory traj = read_trajectory(detail::cell_file(m, dir, i, j));
            if (darcy) {
                const Trajectory a = read_trajectory(detail::cell_coefficient(m, dir, i, j));
                const auto est = estimate_darcy_pixelwise(traj.frame(0));
                const CoefficientField truth(a.grid(), std::vector<double>(a.values().begin(), a.values().end()));
                const double err = relative_error(est.coefficient, truth);
                const auto pred = run_dir / "pred" / (trajectory_stem(m.param_ids[i], m.ic_ids[i][j]) + ".a.bin");
                write_trajectory(pred, Trajectory(a.grid(), {"a"}, {0.0},
                                                  {est.coefficient.values().begin(), est.coefficient.values().end()}));
                errors.push_back(err);
                rows << json{{"param_idx", i},
                             {"ic_idx", j},
                             {"window_start", 0},
                             {"phi_hat", {{"coefficient_file", fs::absolute(pred).string()}}},
                             {"relative_error", err},
                             {"confident_fraction", est.confident_fraction()},
                             {"residual", est.residual_at_hat}}
                            .dump()
                     << "\n";
                continue;
            }
            const std::size_t first = m.horizon ? m.horizon->eval_start : 0;
            const ParamVector truth = detail::restrict_to(m.param_values[i], targets);
            ParamVector known;
            for (const auto& p : m.system.params) {
                if (std::find(targets.begin(), targets.end(), p.name) == targets.end()) known.set(p.name, m.param_values[i].at(p.name));
            }
            for (std::size_t s : eval_window_starts(traj.n_frames(), o.window_frames, o.stride, first)) {
                const Trajectory w = traj.window(s, o.window_frames);
                json row{{"param_idx", i}, {"ic_idx", j}, {"window_start", s}};
                try {
                    const InverseEstimate est =
                        o.method == "lsq"
                            ? estimate_joint_lsq(w, m.system, known)
                            : estimate_scan(w, m.system, known, candidate_grid(m.system, targets[0], o.candidates), true);
                    const ParamVector hat = detail::restrict_to(est.phi_hat, targets);
                    const double err = relative_error(hat, truth);
                    errors.push_back(err);
                    row["phi_hat"] = to_json(hat);
                    row["phi"] = to_json(truth);
                    row["relative_error"] = err;
                    row["residual"] = est.residual_at_hat;
                } catch (const Error& e) {
                    if (!e.is_numerical()) throw;
                    ++failed_windows;
                    row["error"] = e.what();
                }
                if (o.derivative_channels) {
                    const auto stack = compute_derivatives(w, m.system).as_trajectory();
                    const auto name = trajectory_stem(m.param_ids[i], m.ic_ids[i][j]) + "_w" + std::to_string(s) + ".bin";
                    write_trajectory(run_dir / "derivatives" / name, stack);
                    row["derivatives_file"] = fs::absolute(run_dir / "derivatives" / name).string();
                }
                rows << row.dump() << "\n";
            }
        }
    }
    rows.flush();
    require(rows.good(), ErrorKind::io, "write failed for " + out_path.string());
    detail::write_run_json(run_dir, "invert",
                           json{{"dataset", o.dataset},
                                {"method", o.method},
                                {"split", o.split},
                                {"window_frames", o.window_frames},
                                {"stride", o.stride},
                                {"candidates", o.candidates},
                                {"targets", targets},
                                {"derivative_channels", o.derivative_channels},
                                {"out", out_path.string()}});
    json summary{{"split", o.split}, {"method", o.method}, {"n_windows", errors.size()}, {"failed_windows", failed_windows}};
    if (!errors.empty()) {
        const auto r = aggregate_over_seeds(errors, o.split);
        summary["mean_relative_error"] = r.mean;
        summary["std_relative_error"] = r.stddev;
    }
    std::cout << summary.dump() << "\n";
    return errors.empty() && failed_windows > 0 ? numerical_error : ok;
}

// ---- eval ---------------------------------------------------------------------

struct EvalOptions {
    std::vector<std::string> pred;
    std::string dataset;
    std::string split;
    std::string run_dir;
};

/// Mean relative error of one predictions file over the rows in `label`.
inline std::pair<double, std::size_t> score_predictions(const fs::path& file, const DatasetManifest& m, const fs::path& dir,
                                                        SplitLabel label) {
    std::ifstream in(file);
    require(in.good(), ErrorKind::io, "cannot open " + file.string());
    std::string line;
    double sum = 0.0;
    std::size_t n = 0, lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        json row;
        try {
            row = json::parse(line);
        } catch (const json::exception& e) {
            fail(ErrorKind::io, file.string() + ":" + std::to_string(lineno) + ": malformed JSON");
        }
        try {
            const auto i = row.at("param_idx").get<std::size_t>();
            const auto j = row.at("ic_idx").get<std::size_t>();
            require(i < m.n_params() && j < m.ic_seeds[i].size(), ErrorKind::invalid_config,
                    file.string() + ":" + std::to_string(lineno) + ": cell out of range");
            if (!row.contains("phi_hat") || !detail::in_split(m, i, j, label)) continue;
            const json& hat = row.at("phi_hat");
            double err = 0.0;
            if (m.system.field_parameter()) {
                const Trajectory p = read_trajectory(hat.at("coefficient_file").get<std::string>());
                const Trajectory a = read_trajectory(detail::cell_coefficient(m, dir, i, j));
                err = relative_error(CoefficientField(p.grid(), std::vector<double>(p.values().begin(), p.values().end())),
                                     CoefficientField(a.grid(), std::vector<double>(a.values().begin(), a.values().end())));
            } else {
                const ParamVector ph = param_vector_from_json(hat);
                std::vector<std::string> names;
                for (const auto& [name, v] : ph.entries()) names.push_back(name);
                err = relative_error(ph, detail::restrict_to(m.param_values[i], names));
            }
            sum += err;
            ++n;
        } catch (const json::exception& e) {
            fail(ErrorKind::invalid_config, file.string() + ":" + std::to_string(lineno) + ": " + e.what());
        }
    }
    require(n > 0, ErrorKind::undefined_metric, "no predictions in " + file.string() + " fall in the split");
    return {sum / static_cast<double>(n), n};
}

inline int run_eval(const EvalOptions& o) {
    const fs::path dir(o.dataset);
    const DatasetManifest m = detail::load_dataset(dir);
    const SplitLabel label = parse_split_label(o.split);
    std::vector<double> per_seed;
    std::size_t rows = 0;
    for (const auto& p : o.pred) {
        const auto [mean, n] = score_predictions(p, m, dir, label);
        per_seed.push_back(mean);
        rows += n;
    }
    const auto r = aggregate_over_seeds(per_seed, o.split);
    detail::write_run_json(o.run_dir.empty() ? fs::current_path() : fs::path(o.run_dir), "eval",
                           json{{"dataset", o.dataset}, {"split", o.split}, {"pred", o.pred}});
    std::cout << json{{"system", to_string(m.system.id)},
                      {"split", r.split},
                      {"metric", r.metric_name},
                      {"mean", r.mean},
                      {"std", r.stddev},
                      {"n_seeds", r.n_seeds},
                      {"n_rows", rows}}
                     .dump()
              << "\n";
    return ok;
}

// ---- spectra ------------------------------------------------------------------

struct SpectraOptions {
    std::string traj;
    std::optional<std::size_t> frame;
    bool enstrophy = false;
    std::string csv;
    bool self_consistency = false;
    std::optional<double> phi_hat;
    std::string system = "ns2d-forced";
    std::optional<double> dt;
    std::string run_dir;
};

inline int run_spectra(const SpectraOptions& o) {
    const Trajectory t = read_trajectory(o.traj);
    require(t.n_frames() > 0, ErrorKind::invalid_config, "trajectory has no frames");
    const std::size_t k = o.frame.value_or(t.n_frames() - 1);
    require(k < t.n_frames(), ErrorKind::invalid_config, "--frame beyond the last frame");
    const auto s = energy_spectrum(t.frame(k), o.enstrophy ? SpectrumQuantity::enstrophy : SpectrumQuantity::energy);
    std::ostringstream csv;
    csv << "k,E\n";
    csv.precision(17);
    for (std::size_t i = 0; i < s.E.size(); ++i) csv << s.k[i] << "," << s.E[i] << "\n";
    if (o.csv.empty()) {
        std::cout << csv.str();
    } else {
        write_text_file(o.csv, csv.str());
    }
    json cfg{{"traj", o.traj}, {"frame", k}, {"enstrophy", o.enstrophy}, {"csv", o.csv}};
    json report{{"frame", k}, {"total_energy", s.total_energy}, {"drop_off_shell", drop_off_shell(s)}};
    if (o.self_consistency) {
        require(o.phi_hat.has_value(), ErrorKind::invalid_config, "--self-consistency needs --phi-hat");
        const SystemSpec sys = SystemSpec::defaults(parse_system_id(o.system));
        SolverConfig c = SolverConfig::defaults(sys.id);
        if (o.dt) c.dt = *o.dt;
        const auto r = self_consistency(sys, t, ParamVector{{"nu", *o.phi_hat}}, c);
        report["self_consistency"] = {{"mean_distance", r.mean_distance},
                                      {"frame_distance", r.frame_distance},
                                      {"drop_off_ref", r.drop_off_ref},
                                      {"drop_off_hat", r.drop_off_hat},
                                      {"diverged", r.diverged},
                                      {"message", r.message}};
        cfg["system"] = o.system;
        cfg["phi_hat"] = *o.phi_hat;
        cfg["solver"] = to_json(c);
    }
    detail::write_run_json(o.run_dir.empty() ? fs::current_path() : fs::path(o.run_dir), "spectra", cfg);
    // The CSV owns stdout when no file is given; the report then goes to stderr.
    (o.csv.empty() ? std::cerr : std::cout) << report.dump() << "\n";
    return ok;
}

// ---- degrade ------------------------------------------------------------------

struct DegradeOptions {
    std::string dataset;
    std::string op;
    double p = 0.0;
    std::uint64_t seed = 0;
    std::string out;
    int order = 6;
    std::string fill = "interpolate";
};

inline int run_degrade(const DegradeOptions& o) {
    require(o.op == "snp" || o.op == "butterworth" || o.op == "gridlines", ErrorKind::invalid_config,
            "unknown op '" + o.op + "'");
    require(o.fill == "interpolate" || o.fill == "nan", ErrorKind::invalid_config, "--fill is interpolate or nan");
    const fs::path dir(o.dataset), out(o.out);
    DatasetManifest m = detail::load_dataset(dir);
    const std::uint64_t seed = detail::resolve_seed(o.seed);
    std::error_code ec;
    fs::create_directories(out / "traj", ec);
    require(!ec, ErrorKind::io, "cannot create " + (out / "traj").string());
    for (std::size_t i = 0; i < m.n_params(); ++i) {
        for (std::size_t j = 0; j < m.ic_seeds[i].size(); ++j) {
            if (m.failed(i, j)) continue;
            const std::size_t pid = m.param_ids[i], iid = m.ic_ids[i][j];
            const Trajectory t = read_trajectory(detail::cell_file(m, dir, i, j));
            Trajectory d(t.grid(), t.channels());
            Trajectory mask(t.grid(), {"mask"});
            for (std::size_t k = 0; k < t.n_frames(); ++k) {
                const std::uint64_t s = derive_seed(seed, derive_seed(pid, iid), k);
                const Field f = t.frame(k);
                if (o.op == "snp") {
                    d.push_back(t.times()[k], salt_pepper(f, o.p, s));
                } else if (o.op == "butterworth") {
                    d.push_back(t.times()[k], butterworth_removed_fraction(f, o.p, o.order));
                } else {
                    const auto r = drop_grid_lines(f, o.p, s, o.fill == "nan" ? DropFill::nan : DropFill::interpolate);
                    d.push_back(t.times()[k], r.field);
                    mask.push_back(t.times()[k], std::vector<double>(r.keep_mask.begin(), r.keep_mask.end()));
                }
            }
            write_trajectory(trajectory_file(out, pid, iid), d, o.fill == "nan");
            if (o.op == "gridlines") {
                write_trajectory(out / "traj" / (trajectory_stem(pid, iid) + ".mask.bin"), mask);
            }
            if (m.system.field_parameter()) {
                fs::copy_file(detail::cell_coefficient(m, dir, i, j), coefficient_file(out, pid, iid),
                              fs::copy_options::overwrite_existing, ec);
                require(!ec, ErrorKind::io, "cannot copy coefficient: " + ec.message());
                fs::copy_file(sidecar_path(detail::cell_coefficient(m, dir, i, j)), sidecar_path(coefficient_file(out, pid, iid)),
                              fs::copy_options::overwrite_existing, ec);
                require(!ec, ErrorKind::io, "cannot copy coefficient sidecar: " + ec.message());
            }
        }
    }
    m.data_root.clear();
    detail::write_run_json(out, "degrade",
                           json{{"dataset", o.dataset}, {"op", o.op}, {"p", o.p}, {"seed", seed}, {"order", o.order}, {"fill", o.fill}});
    write_manifest(out, m);
    std::cout << json{{"out", out.string()}, {"op", o.op}, {"p", o.p}}.dump() << "\n";
    return ok;
}

// ---- subset -------------------------------------------------------------------

struct SubsetOptions {
    std::string dataset;
    double ic_frac = 1.0, param_frac = 1.0, horizon_frac = 1.0;
    std::uint64_t seed = 0;
    std::string out;
};

inline int run_subset(const SubsetOptions& o) {
    const fs::path dir(o.dataset), out(o.out);
    const DatasetManifest base = detail::load_dataset(dir);
    std::error_code ec;
    fs::create_directories(out, ec);
    require(!ec, ErrorKind::io, "cannot create " + out.string());
    const fs::path root = fs::weakly_canonical(data_root(base, dir));
    fs::path ref = fs::relative(root, fs::weakly_canonical(out), ec);
    if (ec || ref.empty()) ref = root;
    const std::uint64_t seed = detail::resolve_seed(o.seed);
    const auto view = subset_dataset(base, SubsetSpec{o.ic_frac, o.param_frac, o.horizon_frac}, seed, ref.string());
    detail::write_run_json(out, "subset",
                           json{{"dataset", o.dataset},
                                {"ic_frac", o.ic_frac},
                                {"param_frac", o.param_frac},
                                {"horizon_frac", o.horizon_frac},
                                {"seed", seed}});
    write_manifest(out, view);
    std::size_t cells = 0;
    for (const auto& row : view.ic_seeds) cells += row.size();
    json summary{{"out", out.string()}, {"params", view.n_params()}, {"cells", cells}};
    if (view.horizon) summary["train_frames"] = view.horizon->train_frames;
    std::cout << summary.dump() << "\n";
    return ok;
}

// ---- entry point --------------------------------------------------------------

/// Parses argv and runs one subcommand. Library errors map to exit codes
/// 2 (configuration), 3 (numerical) and 4 (I/O).
inline int run(int argc, const char* const* argv) {
    CLI::App app{"PDE inverse-problem benchmark engine"};
    app.set_version_flag("--version", PDEINV_VERSION);
    app.require_subcommand(1);

    GenerateOptions gen;
    auto* g = app.add_subcommand("generate", "Simulate a dataset");
    g->add_option("--system", gen.system, "rd2d | ns2d-unforced | ns2d-forced | kdv1d | darcy2d")->required();
    g->add_flag("--defaults", gen.defaults, "Use the system's default parameter grid");
    g->add_option("--params-file", gen.params_file, "JSON parameter values");
    g->add_option("--ics", gen.ics, "ICs per parameter value (default: system default)");
    g->add_option("--seed", gen.seed, "Master seed (PDEINV_SEED overrides)");
    g->add_option("--out", gen.out, "Output directory")->required();
    g->add_option("--resolution", gen.resolution, "Output resolution, e.g. 64 or 64x64");
    g->add_option("--internal-resolution", gen.internal_resolution, "Solver resolution");
    g->add_option("--cadence", gen.cadence, "Seconds between recorded frames");
    g->add_option("--horizon", gen.horizon, "Recorded span in seconds");
    g->add_option("--burn-in", gen.burn_in, "Discarded span in seconds");
    g->add_option("--dt", gen.dt, "Maximum time step");
    g->add_option("--param-counts", gen.param_counts, "Values per parameter slot")->delimiter(',');
    g->add_option("--jobs", gen.jobs, "Worker threads")->check(CLI::PositiveNumber);
    g->add_option("--solver-config", gen.solver_config, "JSON solver overrides");
    g->add_flag("--no-splits", gen.no_splits, "Skip split assignment");

    SplitOptions sp;
    auto* s = app.add_subcommand("split", "Assign train / val / test-id / OOD labels");
    s->add_option("--dataset", sp.dataset)->required();
    s->add_option("--extreme-frac", sp.extreme_frac, "Range fraction of each extreme band (default 0.1)");
    s->add_option("--band", sp.band, "Non-extreme band as range fractions lo:hi (default 0.4:0.6)");
    s->add_option("--val-frac", sp.val_frac);
    s->add_option("--test-frac", sp.test_frac);
    s->add_option("--seed", sp.seed);
    s->add_flag("--write", sp.write, "Store the labels in the manifest");
    s->add_option("--run-dir", sp.run_dir, "Where run.json goes (default: working directory)");

    InvertOptions inv;
    auto* iv = app.add_subcommand("invert", "Classical residual-based parameter estimation");
    iv->add_option("--dataset", inv.dataset)->required();
    iv->add_option("--method", inv.method, "lsq | scan | pixelwise")->required();
    iv->add_option("--split", inv.split, "train | val | test-id | ood-nonextreme | ood-extreme")->required();
    iv->add_option("--window-frames", inv.window_frames);
    iv->add_flag("--derivative-channels", inv.derivative_channels, "Also write each window's derivative stack");
    iv->add_option("--stride", inv.stride, "Evaluate every n-th window");
    iv->add_option("--candidates", inv.candidates, "Scan grid size");
    iv->add_option("--target", inv.targets, "Slot to estimate; others are taken as known (repeatable)");
    iv->add_option("--out", inv.out, "Predictions JSONL (default: <run-dir>/predictions.jsonl)");
    iv->add_option("--run-dir", inv.run_dir);

    EvalOptions ev;
    auto* e = app.add_subcommand("eval", "Score prediction files against a dataset");
    e->add_option("--pred", ev.pred, "Predictions JSONL, one per seed")->required();
    e->add_option("--dataset", ev.dataset)->required();
    e->add_option("--split", ev.split)->required();
    e->add_option("--run-dir", ev.run_dir);

    SpectraOptions spc;
    auto* sc = app.add_subcommand("spectra", "Energy spectra and spectral self-consistency");
    sc->add_option("--traj", spc.traj)->required();
    sc->add_option("--frame", spc.frame, "Frame index (default: last)");
    sc->add_flag("--enstrophy", spc.enstrophy);
    sc->add_option("--csv", spc.csv, "Write k,E rows here instead of stdout");
    sc->add_flag("--self-consistency", spc.self_consistency);
    sc->add_option("--phi-hat", spc.phi_hat, "Predicted viscosity");
    sc->add_option("--system", spc.system);
    sc->add_option("--dt", spc.dt);
    sc->add_option("--run-dir", spc.run_dir);

    DegradeOptions dg;
    auto* d = app.add_subcommand("degrade", "Write a corrupted copy of a dataset");
    d->add_option("--dataset", dg.dataset)->required();
    d->add_option("--op", dg.op, "snp | butterworth | gridlines")->required();
    d->add_option("--p", dg.p)->required();
    d->add_option("--seed", dg.seed);
    d->add_option("--out", dg.out)->required();
    d->add_option("--order", dg.order);
    d->add_option("--fill", dg.fill, "interpolate | nan");

    SubsetOptions sb;
    auto* su = app.add_subcommand("subset", "Data-scaling view of a dataset");
    su->add_option("--dataset", sb.dataset)->required();
    su->add_option("--ic-frac", sb.ic_frac);
    su->add_option("--param-frac", sb.param_frac);
    su->add_option("--horizon-frac", sb.horizon_frac);
    su->add_option("--seed", sb.seed);
    su->add_option("--out", sb.out)->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& err) {
        const int code = app.exit(err);
        return code == 0 ? ok : config_error;
    }
    try {
        if (*g) return run_generate(gen);
        if (*s) return run_split(sp);
        if (*iv) return run_invert(inv);
        if (*e) return run_eval(ev);
        if (*sc) return run_spectra(spc);
        if (*d) return run_degrade(dg);
        if (*su) return run_subset(sb);
    } catch (const Error& err) {
        std::cerr << "error: " << err.what() << "\n";
        return exit_code_for(err);
    } catch (const fs::filesystem_error& err) {
        std::cerr << "error: io: " << err.what() << "\n";
        return io_error;
    }
    return config_error;
}

}  // namespace pdeinv::cli
