#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "pdeinv/error.hpp"

namespace pdeinv {

/// Where samples sit on a non-periodic axis. Periodic axes are always
/// sampled at lo + i*dx with dx = (hi-lo)/n.
enum class Centering { vertex, cell };

struct Axis {
    std::size_t n = 0;
    double lo = 0.0;
    double hi = 1.0;
    bool periodic = true;
    Centering centering = Centering::vertex;

    double length() const { return hi - lo; }

    double spacing() const {
        const double len = hi - lo;
        if (periodic || centering == Centering::cell) return len / static_cast<double>(n);
        return len / static_cast<double>(n - 1);
    }

    double coord(std::size_t i) const {
        const double offset = (!periodic && centering == Centering::cell) ? 0.5 : 0.0;
        return lo + (static_cast<double>(i) + offset) * spacing();
    }

    bool operator==(const Axis&) const = default;
};

/// Discretization descriptor shared by every field on it. Axis 0 is x,
/// axis 1 (if present) is y; storage is row-major with y fastest.
class Grid {
public:
    Grid() = default;

    explicit Grid(std::vector<Axis> axes) : axes_(std::move(axes)) {
        require(axes_.size() == 1 || axes_.size() == 2, ErrorKind::invalid_config,
                "grid must have 1 or 2 dimensions");
        for (std::size_t a = 0; a < axes_.size(); ++a) {
            const Axis& ax = axes_[a];
            const std::string name = "axis " + std::to_string(a);
            require(ax.n >= 4, ErrorKind::invalid_config, name + " needs at least 4 points");
            require(ax.hi > ax.lo, ErrorKind::invalid_config, name + " needs hi > lo");
            require(ax.spacing() > 0.0 && std::isfinite(ax.spacing()), ErrorKind::invalid_config,
                    name + " spacing must be positive");
        }
    }

    static Grid periodic_1d(std::size_t n, double lo, double hi) {
        return Grid({Axis{n, lo, hi, true, Centering::vertex}});
    }
    static Grid periodic_2d(std::size_t nx, std::size_t ny, double lo, double hi) {
        return Grid({Axis{nx, lo, hi, true, Centering::vertex}, Axis{ny, lo, hi, true, Centering::vertex}});
    }
    static Grid vertex_2d(std::size_t nx, std::size_t ny, double lo, double hi) {
        return Grid({Axis{nx, lo, hi, false, Centering::vertex}, Axis{ny, lo, hi, false, Centering::vertex}});
    }
    static Grid cell_2d(std::size_t nx, std::size_t ny, double lo, double hi) {
        return Grid({Axis{nx, lo, hi, false, Centering::cell}, Axis{ny, lo, hi, false, Centering::cell}});
    }

    std::size_t ndims() const { return axes_.size(); }
    const Axis& axis(std::size_t a) const { return axes_.at(a); }
    const std::vector<Axis>& axes() const { return axes_; }
    double spacing(std::size_t a) const { return axes_.at(a).spacing(); }

    std::vector<std::size_t> shape() const {
        std::vector<std::size_t> s;
        for (const auto& ax : axes_) s.push_back(ax.n);
        return s;
    }

    /// Number of grid points.
    std::size_t size() const {
        std::size_t s = axes_.empty() ? 0 : 1;
        for (const auto& ax : axes_) s *= ax.n;
        return s;
    }

    std::size_t nx() const { return axes_.empty() ? 0 : axes_[0].n; }
    std::size_t ny() const { return axes_.size() > 1 ? axes_[1].n : 1; }

    bool all_periodic() const {
        return !axes_.empty() &&
               std::all_of(axes_.begin(), axes_.end(), [](const Axis& a) { return a.periodic; });
    }
    bool any_periodic() const {
        return std::any_of(axes_.begin(), axes_.end(), [](const Axis& a) { return a.periodic; });
    }

    /// Same domain and boundary type with new point counts.
    Grid with_shape(const std::vector<std::size_t>& shape) const {
        require(shape.size() == axes_.size(), ErrorKind::invalid_config, "shape rank mismatch");
        std::vector<Axis> axes = axes_;
        for (std::size_t a = 0; a < axes.size(); ++a) axes[a].n = shape[a];
        return Grid(std::move(axes));
    }

    bool operator==(const Grid&) const = default;

private:
    std::vector<Axis> axes_;
};

/// Solution restricted to one time: values indexed [channel, x(, y)].
class Field {
public:
    Field() = default;

    Field(Grid grid, std::vector<std::string> channels)
        : grid_(std::move(grid)), channels_(std::move(channels)),
          values_(channels_.size() * grid_.size(), 0.0) {}

    Field(Grid grid, std::vector<std::string> channels, std::vector<double> values)
        : grid_(std::move(grid)), channels_(std::move(channels)), values_(std::move(values)) {
        require(!channels_.empty(), ErrorKind::invalid_config, "field needs at least one channel");
        require(values_.size() == channels_.size() * grid_.size(), ErrorKind::invalid_config,
                "field values do not match (channels,)+grid.shape");
    }

    const Grid& grid() const { return grid_; }
    const std::vector<std::string>& channels() const { return channels_; }
    std::size_t n_channels() const { return channels_.size(); }
    std::size_t points() const { return grid_.size(); }

    std::span<const double> values() const { return values_; }
    std::span<double> values() { return values_; }
    std::vector<double>& data() { return values_; }

    std::span<const double> channel(std::size_t c) const {
        return std::span<const double>(values_).subspan(c * points(), points());
    }
    std::span<double> channel(std::size_t c) {
        return std::span<double>(values_).subspan(c * points(), points());
    }

    std::size_t channel_index(const std::string& name) const {
        auto it = std::find(channels_.begin(), channels_.end(), name);
        require(it != channels_.end(), ErrorKind::invalid_config, "no channel named " + name);
        return static_cast<std::size_t>(it - channels_.begin());
    }

    double& at(std::size_t c, std::size_t i, std::size_t j = 0) {
        return values_[(c * grid_.nx() + i) * grid_.ny() + j];
    }
    double at(std::size_t c, std::size_t i, std::size_t j = 0) const {
        return values_[(c * grid_.nx() + i) * grid_.ny() + j];
    }

    bool all_finite() const {
        return std::all_of(values_.begin(), values_.end(), [](double v) { return std::isfinite(v); });
    }

private:
    Grid grid_;
    std::vector<std::string> channels_;
    std::vector<double> values_;
};

/// Time-indexed stack of fields: values indexed [time, channel, x(, y)].
class Trajectory {
public:
    Trajectory() = default;

    Trajectory(Grid grid, std::vector<std::string> channels)
        : grid_(std::move(grid)), channels_(std::move(channels)) {}

    Trajectory(Grid grid, std::vector<std::string> channels, std::vector<double> times,
               std::vector<double> values)
        : grid_(std::move(grid)), channels_(std::move(channels)), times_(std::move(times)),
          values_(std::move(values)) {
        require(!times_.empty(), ErrorKind::invalid_config, "trajectory needs at least one frame");
        require(values_.size() == times_.size() * frame_size(), ErrorKind::invalid_config,
                "trajectory values do not match (times, channels)+grid.shape");
        for (std::size_t k = 1; k < times_.size(); ++k) {
            require(times_[k] > times_[k - 1], ErrorKind::invalid_config,
                    "trajectory times must be strictly increasing");
        }
    }

    const Grid& grid() const { return grid_; }
    const std::vector<std::string>& channels() const { return channels_; }
    const std::vector<double>& times() const { return times_; }
    std::span<const double> values() const { return values_; }
    std::span<double> values() { return values_; }

    std::size_t n_frames() const { return times_.size(); }
    std::size_t frame_size() const { return channels_.size() * grid_.size(); }

    std::span<const double> frame_values(std::size_t k) const {
        return std::span<const double>(values_).subspan(k * frame_size(), frame_size());
    }
    std::span<double> frame_values(std::size_t k) {
        return std::span<double>(values_).subspan(k * frame_size(), frame_size());
    }

    Field frame(std::size_t k) const {
        require(k < n_frames(), ErrorKind::invalid_config, "frame index out of range");
        auto v = frame_values(k);
        return Field(grid_, channels_, std::vector<double>(v.begin(), v.end()));
    }

    void push_back(double t, std::span<const double> frame) {
        require(frame.size() == frame_size(), ErrorKind::invalid_config, "frame size mismatch");
        require(times_.empty() || t > times_.back(), ErrorKind::invalid_config,
                "trajectory times must be strictly increasing");
        times_.push_back(t);
        values_.insert(values_.end(), frame.begin(), frame.end());
    }

    void push_back(double t, const Field& f) {
        require(f.grid() == grid_ && f.channels() == channels_, ErrorKind::invalid_config,
                "field does not match trajectory layout");
        push_back(t, f.values());
    }

    /// Frames [start, start+count); grid, channels and timestamps preserved.
    Trajectory window(std::size_t start, std::size_t count) const {
        require(count >= 1 && start + count <= n_frames(), ErrorKind::invalid_config,
                "window out of range");
        std::vector<double> t(times_.begin() + static_cast<std::ptrdiff_t>(start),
                              times_.begin() + static_cast<std::ptrdiff_t>(start + count));
        auto first = values_.begin() + static_cast<std::ptrdiff_t>(start * frame_size());
        std::vector<double> v(first, first + static_cast<std::ptrdiff_t>(count * frame_size()));
        return Trajectory(grid_, channels_, std::move(t), std::move(v));
    }

    /// Frames whose timestamps fall in [t0, t1].
    Trajectory slice_time(double t0, double t1) const {
        std::size_t first = n_frames(), last = 0;
        for (std::size_t k = 0; k < n_frames(); ++k) {
            if (times_[k] >= t0 && times_[k] <= t1) {
                first = std::min(first, k);
                last = k;
            }
        }
        require(first < n_frames(), ErrorKind::invalid_config, "time slice selects no frames");
        return window(first, last - first + 1);
    }

    bool all_finite() const {
        return std::all_of(values_.begin(), values_.end(), [](double v) { return std::isfinite(v); });
    }

private:
    Grid grid_;
    std::vector<std::string> channels_;
    std::vector<double> times_;
    std::vector<double> values_;
};

/// Spatially varying positive coefficient a(x).
class CoefficientField {
public:
    CoefficientField() = default;

    CoefficientField(Grid grid, std::vector<double> values)
        : grid_(std::move(grid)), values_(std::move(values)) {
        require(values_.size() == grid_.size(), ErrorKind::invalid_config,
                "coefficient values do not match grid");
        for (double v : values_) {
            require(std::isfinite(v) && v > 0.0, ErrorKind::invalid_coefficient,
                    "coefficient must be strictly positive");
        }
    }

    static CoefficientField constant(const Grid& grid, double value) {
        return CoefficientField(grid, std::vector<double>(grid.size(), value));
    }

    const Grid& grid() const { return grid_; }
    std::span<const double> values() const { return values_; }
    double at(std::size_t i, std::size_t j = 0) const { return values_[i * grid_.ny() + j]; }

    /// True when every value is one of the two Darcy levels.
    bool is_binary(double low = 3.0, double high = 12.0) const {
        return std::all_of(values_.begin(), values_.end(),
                           [&](double v) { return v == low || v == high; });
    }

    Field as_field(const std::string& channel = "a") const {
        return Field(grid_, {channel}, values_);
    }

private:
    Grid grid_;
    std::vector<double> values_;
};

}  // namespace pdeinv
