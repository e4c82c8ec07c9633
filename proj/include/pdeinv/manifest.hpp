#pragma once

#include <filesystem>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "pdeinv/io.hpp"
#include "pdeinv/splits.hpp"

namespace pdeinv {

inline constexpr const char* kFormatVersion = "1";

struct FailedCell {
    std::size_t param_idx = 0;
    std::size_t ic_idx = 0;
    std::string kind;
    std::string message;
};

/// Frame ranges of a horizon-truncated view: frames [0, train_frames) are
/// trainable, frames [eval_start, n_frames) are reserved for evaluation.
struct HorizonView {
    double fraction = 1.0;
    std::size_t train_frames = 0;
    std::size_t eval_start = 0;
};

/// Dataset description. Rows are parameter values, columns ICs; file
/// indices (`param_ids`, `ic_ids`) refer to the trajectory files under
/// `data_root` and differ from row/column positions only in subset views.
struct DatasetManifest {
    SystemSpec system;
    std::vector<ParamVector> param_values;
    std::vector<std::vector<std::uint64_t>> ic_seeds;
    SolverConfig solver_config;
    std::uint64_t master_seed = 0;
    std::optional<SplitAssignment> splits;
    std::string format_version = kFormatVersion;

    std::vector<std::size_t> param_ids;
    std::vector<std::vector<std::size_t>> ic_ids;
    std::vector<FailedCell> failures;
    /// Fraction-of-maximum statistic per Darcy sample (row 0).
    std::vector<double> darcy_stats;
    std::optional<HorizonView> horizon;
    /// Directory holding traj/; empty means the manifest's own directory.
    std::string data_root;

    std::size_t n_params() const { return param_values.size(); }
    std::size_t n_ics() const { return ic_seeds.empty() ? 0 : ic_seeds.front().size(); }

    bool failed(std::size_t row, std::size_t col) const {
        for (const auto& f : failures) {
            if (f.param_idx == param_ids.at(row) && f.ic_idx == ic_ids.at(row).at(col)) return true;
        }
        return false;
    }

    /// Fills default file indices (identity) where absent.
    void normalize_ids() {
        if (param_ids.empty()) {
            param_ids.resize(param_values.size());
            std::iota(param_ids.begin(), param_ids.end(), std::size_t{0});
        }
        if (ic_ids.empty()) {
            for (const auto& seeds : ic_seeds) {
                std::vector<std::size_t> ids(seeds.size());
                std::iota(ids.begin(), ids.end(), std::size_t{0});
                ic_ids.push_back(std::move(ids));
            }
        }
    }
};

inline std::string trajectory_stem(std::size_t param_id, std::size_t ic_id) {
    return "p" + std::to_string(param_id) + "_ic" + std::to_string(ic_id);
}

inline std::filesystem::path trajectory_file(const std::filesystem::path& root, std::size_t param_id, std::size_t ic_id) {
    return root / "traj" / (trajectory_stem(param_id, ic_id) + ".bin");
}

inline std::filesystem::path coefficient_file(const std::filesystem::path& root, std::size_t param_id, std::size_t ic_id) {
    return root / "traj" / (trajectory_stem(param_id, ic_id) + ".a.bin");
}

/// Root that trajectory paths resolve against for a manifest stored in `dir`.
inline std::filesystem::path data_root(const DatasetManifest& m, const std::filesystem::path& dir) {
    if (m.data_root.empty()) return dir;
    const std::filesystem::path r(m.data_root);
    return r.is_absolute() ? r : dir / r;
}

inline json to_json(const SplitConfig& c) {
    json bands = json::object();
    for (const auto& [name, b] : c.explicit_bands) {
        json jb{{"lower_extreme_hi", b.lower_extreme_hi}, {"upper_extreme_lo", b.upper_extreme_lo}};
        if (b.middle) jb["middle"] = {b.middle->first, b.middle->second};
        bands[name] = jb;
    }
    return json{{"extreme_frac", c.extreme_frac}, {"middle_band", {c.middle_lo_frac, c.middle_hi_frac}},
                {"val_frac", c.val_frac},         {"test_id_frac", c.test_id_frac},
                {"darcy_sigma", c.darcy_sigma},   {"seed", c.seed},
                {"axes", c.axes},                 {"explicit_bands", bands}};
}

inline SplitConfig split_config_from_json(const json& j) {
    SplitConfig c;
    c.extreme_frac = j.at("extreme_frac").get<double>();
    c.middle_lo_frac = j.at("middle_band").at(0).get<double>();
    c.middle_hi_frac = j.at("middle_band").at(1).get<double>();
    c.val_frac = j.at("val_frac").get<double>();
    c.test_id_frac = j.at("test_id_frac").get<double>();
    c.darcy_sigma = j.value("darcy_sigma", 1.5);
    c.seed = j.value("seed", std::uint64_t{0});
    c.axes = j.value("axes", std::vector<std::string>{});
    if (j.contains("explicit_bands")) {
        for (const auto& [name, jb] : j.at("explicit_bands").items()) {
            AxisBands b{jb.at("lower_extreme_hi").get<double>(), jb.at("upper_extreme_lo").get<double>(), std::nullopt};
            if (jb.contains("middle")) b.middle = std::pair{jb.at("middle").at(0).get<double>(), jb.at("middle").at(1).get<double>()};
            c.explicit_bands[name] = b;
        }
    }
    return c;
}

inline json to_json(const DatasetManifest& m) {
    json params = json::array();
    for (const auto& p : m.param_values) params.push_back(to_json(p));
    json failures = json::array();
    for (const auto& f : m.failures) {
        failures.push_back({{"param_idx", f.param_idx}, {"ic_idx", f.ic_idx}, {"kind", f.kind}, {"message", f.message}});
    }
    json j{{"format_version", m.format_version},
           {"system", to_json(m.system)},
           {"master_seed", m.master_seed},
           {"solver_config", to_json(m.solver_config)},
           {"param_values", params},
           {"ic_seeds", m.ic_seeds},
           {"param_ids", m.param_ids},
           {"ic_ids", m.ic_ids},
           {"failures", failures}};
    if (!m.darcy_stats.empty()) j["darcy_stats"] = m.darcy_stats;
    if (m.splits) {
        json labels = json::array();
        for (const auto& row : m.splits->labels) {
            json r = json::array();
            for (auto l : row) r.push_back(to_string(l));
            labels.push_back(r);
        }
        j["splits"] = {{"config", to_json(m.splits->config)}, {"labels", labels}};
    }
    if (m.horizon) {
        j["horizon"] = {{"fraction", m.horizon->fraction}, {"train_frames", m.horizon->train_frames},
                        {"eval_start", m.horizon->eval_start}};
    }
    if (!m.data_root.empty()) j["data_root"] = m.data_root;
    return j;
}

inline DatasetManifest manifest_from_json(const json& j) {
    try {
        DatasetManifest m;
        m.format_version = j.at("format_version").get<std::string>();
        require(m.format_version == kFormatVersion, ErrorKind::io, "unsupported manifest format " + m.format_version);
        m.system = system_from_json(j.at("system"));
        m.master_seed = j.at("master_seed").get<std::uint64_t>();
        m.solver_config = solver_config_from_json(j.at("solver_config"));
        for (const auto& p : j.at("param_values")) m.param_values.push_back(param_vector_from_json(p));
        m.ic_seeds = j.at("ic_seeds").get<std::vector<std::vector<std::uint64_t>>>();
        m.param_ids = j.value("param_ids", std::vector<std::size_t>{});
        m.ic_ids = j.value("ic_ids", std::vector<std::vector<std::size_t>>{});
        for (const auto& f : j.value("failures", json::array())) {
            m.failures.push_back({f.at("param_idx").get<std::size_t>(), f.at("ic_idx").get<std::size_t>(),
                                  f.at("kind").get<std::string>(), f.at("message").get<std::string>()});
        }
        m.darcy_stats = j.value("darcy_stats", std::vector<double>{});
        if (j.contains("splits")) {
            SplitAssignment s;
            s.config = split_config_from_json(j.at("splits").at("config"));
            for (const auto& row : j.at("splits").at("labels")) {
                std::vector<SplitLabel> r;
                for (const auto& l : row) r.push_back(parse_split_label(l.get<std::string>()));
                s.labels.push_back(std::move(r));
            }
            m.splits = std::move(s);
        }
        if (j.contains("horizon")) {
            const auto& h = j.at("horizon");
            m.horizon = HorizonView{h.at("fraction").get<double>(), h.at("train_frames").get<std::size_t>(),
                                    h.at("eval_start").get<std::size_t>()};
        }
        m.data_root = j.value("data_root", std::string{});
        m.normalize_ids();
        return m;
    } catch (const json::exception& e) {
        fail(ErrorKind::io, std::string("malformed manifest: ") + e.what());
    }
}

inline void write_manifest(const std::filesystem::path& dir, const DatasetManifest& m) {
    write_json_atomic(dir / "manifest.json", to_json(m));
}

inline DatasetManifest read_manifest(const std::filesystem::path& dir) {
    const auto path = std::filesystem::is_directory(dir) ? dir / "manifest.json" : dir;
    return manifest_from_json(read_json_file(path));
}

/// Invariant violations as human-readable strings; empty when valid. With a
/// `dir`, every non-failed trajectory file must also exist.
inline std::vector<std::string> validate_manifest(const DatasetManifest& m,
                                                  const std::optional<std::filesystem::path>& dir = std::nullopt) {
    std::vector<std::string> v;
    if (m.format_version != kFormatVersion) v.push_back("unsupported format_version '" + m.format_version + "'");
    if (m.system.params.empty()) v.push_back("system has no parameter slots");
    if (m.ic_seeds.size() != m.param_values.size()) {
        v.push_back("ic_seeds has " + std::to_string(m.ic_seeds.size()) + " rows for " +
                    std::to_string(m.param_values.size()) + " parameter values");
    }
    // Subset views thin only training rows, so equal counts hold for base datasets.
    const bool view = !m.data_root.empty();
    for (std::size_t i = 0; i < m.ic_seeds.size() && !view; ++i) {
        if (m.ic_seeds[i].size() != m.n_ics()) {
            v.push_back("parameter " + std::to_string(i) + " has " + std::to_string(m.ic_seeds[i].size()) +
                        " ICs, expected " + std::to_string(m.n_ics()));
        }
    }
    for (std::size_t i = 0; i < m.param_values.size(); ++i) {
        for (const auto& [name, value] : m.param_values[i].entries()) {
            if (!m.system.has_param(name)) {
                v.push_back("parameter " + std::to_string(i) + ": unknown slot '" + name + "'");
                continue;
            }
            const auto& r = m.system.range(name);
            const double tol = 1e-9 * (r.hi - r.lo);
            if (!std::isfinite(value) || value < r.lo - tol || value > r.hi + tol) {
                v.push_back("parameter " + std::to_string(i) + ": param out of declared range (" + name + " = " +
                            std::to_string(value) + " not in [" + std::to_string(r.lo) + ", " + std::to_string(r.hi) + "])");
            }
        }
    }
    if (!m.param_ids.empty() && m.param_ids.size() != m.param_values.size()) v.push_back("param_ids size mismatch");
    if (!m.ic_ids.empty()) {
        bool ok = m.ic_ids.size() == m.ic_seeds.size();
        for (std::size_t i = 0; ok && i < m.ic_ids.size(); ++i) ok = m.ic_ids[i].size() == m.ic_seeds[i].size();
        if (!ok) v.push_back("ic_ids shape does not match ic_seeds");
    }
    if (m.splits) {
        bool ok = m.splits->labels.size() == m.param_values.size();
        for (std::size_t i = 0; ok && i < m.splits->labels.size(); ++i) ok = m.splits->labels[i].size() == m.ic_seeds[i].size();
        if (!ok) v.push_back("split labels do not cover every (param, ic) cell");
    }
    if (m.system.field_parameter() && !m.darcy_stats.empty() && m.darcy_stats.size() != m.n_ics()) {
        v.push_back("darcy_stats size does not match IC count");
    }
    if (dir && v.empty()) {
        DatasetManifest n = m;
        n.normalize_ids();
        const auto root = data_root(n, *dir);
        for (std::size_t i = 0; i < n.n_params(); ++i) {
            for (std::size_t j = 0; j < n.ic_seeds[i].size(); ++j) {
                if (n.failed(i, j)) continue;
                const auto f = trajectory_file(root, n.param_ids[i], n.ic_ids[i][j]);
                if (!std::filesystem::exists(f) || !std::filesystem::exists(sidecar_path(f))) {
                    v.push_back("missing trajectory file " + f.string());
                }
                if (n.system.field_parameter() && !std::filesystem::exists(coefficient_file(root, n.param_ids[i], n.ic_ids[i][j]))) {
                    v.push_back("missing coefficient file for " + trajectory_stem(n.param_ids[i], n.ic_ids[i][j]));
                }
            }
        }
    }
    return v;
}

}  // namespace pdeinv
