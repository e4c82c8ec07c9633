#pragma once

#include <bit>
#include <cstdint>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "pdeinv/error.hpp"
#include "pdeinv/grid.hpp"
#include "pdeinv/params.hpp"
#include "pdeinv/solvers/config.hpp"
#include "pdeinv/system.hpp"

namespace pdeinv {

using json = nlohmann::ordered_json;

// ---- JSON conversions -----------------------------------------------------

inline json to_json(const Grid& g) {
    json axes = json::array();
    for (std::size_t a = 0; a < g.ndims(); ++a) {
        const Axis& ax = g.axis(a);
        axes.push_back({{"n", ax.n},
                        {"lo", ax.lo},
                        {"hi", ax.hi},
                        {"periodic", ax.periodic},
                        {"centering", ax.centering == Centering::cell ? "cell" : "vertex"}});
    }
    return json{{"axes", axes}};
}

inline Grid grid_from_json(const json& j) {
    std::vector<Axis> axes;
    for (const auto& a : j.at("axes")) {
        Axis ax;
        ax.n = a.at("n").get<std::size_t>();
        ax.lo = a.at("lo").get<double>();
        ax.hi = a.at("hi").get<double>();
        ax.periodic = a.at("periodic").get<bool>();
        const auto c = a.at("centering").get<std::string>();
        require(c == "cell" || c == "vertex", ErrorKind::invalid_config, "unknown centering '" + c + "'");
        ax.centering = c == "cell" ? Centering::cell : Centering::vertex;
        axes.push_back(ax);
    }
    return Grid(std::move(axes));
}

inline json to_json(const ParamVector& p) {
    json j = json::object();
    for (const auto& [name, value] : p.entries()) j[name] = value;
    return j;
}

inline ParamVector param_vector_from_json(const json& j) {
    ParamVector p;
    for (const auto& [name, value] : j.items()) p.set(name, value.get<double>());
    return p;
}

inline json to_json(const SolverConfig& c) {
    return json{{"internal_resolution", c.internal_resolution},
                {"output_resolution", c.output_resolution},
                {"dt", c.dt},
                {"cfl", c.cfl},
                {"ns_scheme", to_string(c.ns_scheme)},
                {"rtol", c.rtol},
                {"atol", c.atol},
                {"burn_in_s", c.burn_in_s},
                {"record_interval_s", c.record_interval_s},
                {"horizon_s", c.horizon_s},
                {"dealias", c.dealias},
                {"downsample_method", to_string(c.downsample_method)},
                {"face_average", to_string(c.face_average)},
                {"linear_tol", c.linear_tol},
                {"max_steps", c.max_steps}};
}

/// Missing keys keep the values already in `base`.
inline SolverConfig solver_config_from_json(const json& j, SolverConfig base = {}) {
    auto opt = [&](const char* key, auto& field) {
        if (j.contains(key)) field = j.at(key).get<std::remove_reference_t<decltype(field)>>();
    };
    opt("internal_resolution", base.internal_resolution);
    opt("output_resolution", base.output_resolution);
    opt("dt", base.dt);
    opt("cfl", base.cfl);
    opt("rtol", base.rtol);
    opt("atol", base.atol);
    opt("burn_in_s", base.burn_in_s);
    opt("record_interval_s", base.record_interval_s);
    opt("horizon_s", base.horizon_s);
    opt("dealias", base.dealias);
    opt("linear_tol", base.linear_tol);
    opt("max_steps", base.max_steps);
    if (j.contains("ns_scheme")) base.ns_scheme = parse_ns_scheme(j.at("ns_scheme").get<std::string>());
    if (j.contains("downsample_method"))
        base.downsample_method = parse_downsample_method(j.at("downsample_method").get<std::string>());
    if (j.contains("face_average")) base.face_average = parse_face_average(j.at("face_average").get<std::string>());
    base.validate();
    return base;
}

inline json to_json(const SystemSpec& s) {
    json params = json::array();
    for (const auto& p : s.params) {
        params.push_back({{"name", p.name}, {"lo", p.lo}, {"hi", p.hi}, {"spacing", to_string(p.spacing)}, {"count", p.count}});
    }
    return json{{"system_id", to_string(s.id)},
                {"params", params},
                {"drag", s.drag},
                {"forcing_k", s.forcing_k},
                {"channels", s.channels},
                {"derivatives", s.derivatives},
                {"range_spacing", to_string(s.range_spacing)},
                {"domain", {s.domain_lo, s.domain_hi}},
                {"default_ics", s.default_ics},
                {"split_axes", s.split_axes}};
}

inline SystemSpec system_from_json(const json& j) {
    SystemSpec s = SystemSpec::defaults(parse_system_id(j.at("system_id").get<std::string>()));
    if (j.contains("params")) {
        s.params.clear();
        for (const auto& p : j.at("params")) {
            s.params.push_back({p.at("name").get<std::string>(), p.at("lo").get<double>(), p.at("hi").get<double>(),
                                parse_spacing(p.at("spacing").get<std::string>()), p.at("count").get<std::size_t>()});
        }
    }
    if (j.contains("drag")) s.drag = j.at("drag").get<double>();
    if (j.contains("forcing_k")) s.forcing_k = j.at("forcing_k").get<double>();
    if (j.contains("channels")) s.channels = j.at("channels").get<std::vector<std::string>>();
    if (j.contains("derivatives")) s.derivatives = j.at("derivatives").get<std::vector<std::string>>();
    if (j.contains("range_spacing")) s.range_spacing = parse_spacing(j.at("range_spacing").get<std::string>());
    if (j.contains("domain")) {
        s.domain_lo = j.at("domain").at(0).get<double>();
        s.domain_hi = j.at("domain").at(1).get<double>();
    }
    if (j.contains("default_ics")) s.default_ics = j.at("default_ics").get<std::size_t>();
    if (j.contains("split_axes")) s.split_axes = j.at("split_axes").get<std::vector<std::string>>();
    return s;
}

// ---- files ------------------------------------------------------------------

inline json read_json_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    require(in.good(), ErrorKind::io, "cannot open " + path.string());
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        fail(ErrorKind::io, "malformed JSON in " + path.string() + ": " + e.what());
    }
}

inline void write_text_file(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    require(out.good(), ErrorKind::io, "cannot write " + path.string());
    out << text;
    out.flush();
    require(out.good(), ErrorKind::io, "write failed for " + path.string());
}

/// Writes via a temporary sibling and rename, so readers never see a partial file.
inline void write_json_atomic(const std::filesystem::path& path, const json& j) {
    auto tmp = path;
    tmp += ".tmp";
    write_text_file(tmp, j.dump(2) + "\n");
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    require(!ec, ErrorKind::io, "cannot rename " + tmp.string() + ": " + ec.message());
}

inline std::filesystem::path sidecar_path(std::filesystem::path bin) {
    bin += ".json";
    return bin;
}

namespace detail {

inline std::uint32_t to_le(std::uint32_t v) {
    if constexpr (std::endian::native == std::endian::big) {
        return (v >> 24) | ((v >> 8) & 0xff00u) | ((v << 8) & 0xff0000u) | (v << 24);
    }
    return v;
}

}  // namespace detail

/// Raw row-major little-endian f32 values [t, c, x(, y)] plus a JSON sidecar
/// at `<path>.json` holding shape, dtype, axes, times, channels and grid.
/// NaN is only stored when `allow_nan` is set (masked degradation output).
inline void write_trajectory(const std::filesystem::path& path, const Trajectory& traj, bool allow_nan = false) {
    std::vector<std::uint32_t> raw(traj.values().size());
    for (std::size_t i = 0; i < raw.size(); ++i) {
        const float f = static_cast<float>(traj.values()[i]);
        require(std::isfinite(f) || (allow_nan && std::isnan(f)), ErrorKind::io, "non-finite value cannot be stored as f32");
        raw[i] = detail::to_le(std::bit_cast<std::uint32_t>(f));
    }
    {
        std::ofstream out(path, std::ios::binary | std::ios::trunc);
        require(out.good(), ErrorKind::io, "cannot write " + path.string());
        out.write(reinterpret_cast<const char*>(raw.data()), static_cast<std::streamsize>(raw.size() * 4));
        require(out.good(), ErrorKind::io, "write failed for " + path.string());
    }
    std::vector<std::size_t> shape{traj.n_frames(), traj.channels().size()};
    for (auto n : traj.grid().shape()) shape.push_back(n);
    std::vector<std::string> axes{"t", "c", "x"};
    if (traj.grid().ndims() == 2) axes.push_back("y");
    const json side{{"shape", shape},
                    {"dtype", "f32le"},
                    {"axes", axes},
                    {"times", traj.times()},
                    {"channels", traj.channels()},
                    {"grid", to_json(traj.grid())}};
    write_text_file(sidecar_path(path), side.dump(2) + "\n");
}

inline Trajectory read_trajectory(const std::filesystem::path& path) {
    const json side = read_json_file(sidecar_path(path));
    try {
        require(side.at("dtype").get<std::string>() == "f32le", ErrorKind::io, "unsupported dtype in " + path.string());
        const Grid grid = grid_from_json(side.at("grid"));
        const auto channels = side.at("channels").get<std::vector<std::string>>();
        const auto times = side.at("times").get<std::vector<double>>();
        const auto shape = side.at("shape").get<std::vector<std::size_t>>();
        std::vector<std::size_t> expect{times.size(), channels.size()};
        for (auto n : grid.shape()) expect.push_back(n);
        require(shape == expect, ErrorKind::io, "sidecar shape disagrees with grid/times in " + path.string());
        const std::size_t count = times.size() * channels.size() * grid.size();
        std::ifstream in(path, std::ios::binary);
        require(in.good(), ErrorKind::io, "cannot open " + path.string());
        std::vector<std::uint32_t> raw(count);
        in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(count * 4));
        require(in.gcount() == static_cast<std::streamsize>(count * 4), ErrorKind::io, "truncated data in " + path.string());
        require(in.peek() == std::char_traits<char>::eof(), ErrorKind::io, "trailing bytes in " + path.string());
        std::vector<double> values(count);
        for (std::size_t i = 0; i < count; ++i) values[i] = std::bit_cast<float>(detail::to_le(raw[i]));
        return Trajectory(grid, channels, times, std::move(values));
    } catch (const json::exception& e) {
        fail(ErrorKind::io, "malformed sidecar for " + path.string() + ": " + e.what());
    } catch (const Error& e) {
        if (e.kind() == ErrorKind::io) throw;
        fail(ErrorKind::io, std::string("invalid trajectory file ") + path.string() + ": " + e.what());
    }
}

}  // namespace pdeinv
