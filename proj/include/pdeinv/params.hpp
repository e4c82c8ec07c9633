#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <initializer_list>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "pdeinv/error.hpp"

namespace pdeinv {

inline constexpr std::array<std::string_view, 5> kScalarParamNames = {"nu", "delta", "k", "Du", "Dv"};

inline bool is_scalar_param_name(std::string_view name) {
    return std::find(kScalarParamNames.begin(), kScalarParamNames.end(), name) != kScalarParamNames.end();
}

/// Ordered (name, value) pairs for the scalar physical parameters of a system.
class ParamVector {
public:
    using Entry = std::pair<std::string, double>;

    ParamVector() = default;
    ParamVector(std::initializer_list<Entry> entries) {
        for (const auto& [name, value] : entries) set(name, value);
    }

    /// Insert or overwrite.
    void set(const std::string& name, double value) {
        require(is_scalar_param_name(name), ErrorKind::invalid_params, "unknown parameter name " + name);
        for (auto& e : entries_) {
            if (e.first == name) {
                e.second = value;
                return;
            }
        }
        entries_.emplace_back(name, value);
    }

    std::optional<double> get(std::string_view name) const {
        for (const auto& e : entries_) {
            if (e.first == name) return e.second;
        }
        return std::nullopt;
    }

    double at(std::string_view name) const {
        auto v = get(name);
        require(v.has_value(), ErrorKind::invalid_params, "missing parameter slot " + std::string(name));
        return *v;
    }

    bool has(std::string_view name) const { return get(name).has_value(); }
    bool empty() const { return entries_.empty(); }
    std::size_t size() const { return entries_.size(); }
    const std::vector<Entry>& entries() const { return entries_; }

    std::vector<double> values() const {
        std::vector<double> v;
        for (const auto& e : entries_) v.push_back(e.second);
        return v;
    }

    bool out_of_range() const { return out_of_range_; }
    void set_out_of_range(bool flag) { out_of_range_ = flag; }

    bool operator==(const ParamVector&) const = default;

private:
    std::vector<Entry> entries_;
    bool out_of_range_ = false;
};

}  // namespace pdeinv
