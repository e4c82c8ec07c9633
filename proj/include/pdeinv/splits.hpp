#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "pdeinv/error.hpp"
#include "pdeinv/grid.hpp"
#include "pdeinv/params.hpp"
#include "pdeinv/random.hpp"
#include "pdeinv/system.hpp"

namespace pdeinv {

enum class SplitLabel { train, val, test_id, ood_nonextreme, ood_extreme };

inline std::string_view to_string(SplitLabel l) {
    switch (l) {
    case SplitLabel::train: return "train";
    case SplitLabel::val: return "val";
    case SplitLabel::test_id: return "test-id";
    case SplitLabel::ood_nonextreme: return "ood-nonextreme";
    case SplitLabel::ood_extreme: return "ood-extreme";
    }
    return "unknown";
}

inline SplitLabel parse_split_label(std::string_view s) {
    for (auto l : {SplitLabel::train, SplitLabel::val, SplitLabel::test_id, SplitLabel::ood_nonextreme,
                   SplitLabel::ood_extreme}) {
        if (s == to_string(l)) return l;
    }
    fail(ErrorKind::invalid_config, "unknown split '" + std::string(s) + "'");
}

/// Band edges of one parameter axis in value space. Values at or below
/// `lower_extreme_hi` or at or above `upper_extreme_lo` are extreme; values
/// in [middle_lo, middle_hi] are non-extreme.
struct AxisBands {
    double lower_extreme_hi = -std::numeric_limits<double>::infinity();
    double upper_extreme_lo = std::numeric_limits<double>::infinity();
    std::optional<std::pair<double, double>> middle;
};

struct SplitConfig {
    double extreme_frac = 0.10;
    double middle_lo_frac = 0.40;
    double middle_hi_frac = 0.60;  // an empty band (hi <= lo) disables non-extreme
    double val_frac = 0.10;
    double test_id_frac = 0.10;
    double darcy_sigma = 1.5;
    std::uint64_t seed = 0;
    /// Explicit bands override the fraction rule per parameter name.
    std::map<std::string, AxisBands> explicit_bands;
    /// Parameters that define the OOD bands; empty means the system default.
    std::vector<std::string> axes;

    bool has_middle() const { return middle_hi_frac > middle_lo_frac; }

    void validate() const {
        require(extreme_frac >= 0.0 && extreme_frac < 0.5, ErrorKind::invalid_config, "extreme_frac must be in [0, 0.5)");
        if (has_middle()) {
            require(middle_lo_frac > extreme_frac && middle_hi_frac < 1.0 - extreme_frac, ErrorKind::invalid_config,
                    "middle band must lie strictly inside the non-extreme range");
        }
        require(val_frac >= 0.0 && test_id_frac >= 0.0 && val_frac + test_id_frac < 1.0, ErrorKind::invalid_config,
                "val_frac + test_id_frac must be below 1");
        require(darcy_sigma > 0.0, ErrorKind::invalid_config, "darcy_sigma must be positive");
    }

    /// Fraction rule everywhere, except rd2d which takes the interval table.
    static SplitConfig defaults(SystemId id) {
        SplitConfig c;
        if (id == SystemId::rd2d) {
            c.explicit_bands["k"] = AxisBands{0.01, 0.09, std::pair{0.04, 0.08}};
            c.explicit_bands["Du"] = AxisBands{0.08, 0.49, std::pair{0.2, 0.4}};
            c.explicit_bands["Dv"] = AxisBands{0.08, 0.49, std::pair{0.2, 0.4}};
        }
        return c;
    }
};

namespace detail {

// Position of v in [lo, hi] as a fraction, in log space for log ranges.
inline double range_fraction(const ParamRange& r, double v) {
    if (r.spacing == Spacing::log) return (std::log(v) - std::log(r.lo)) / (std::log(r.hi) - std::log(r.lo));
    return (v - r.lo) / (r.hi - r.lo);
}

inline double range_value(const ParamRange& r, double f) {
    if (r.spacing == Spacing::log) return std::exp(std::log(r.lo) + f * (std::log(r.hi) - std::log(r.lo)));
    return r.lo + f * (r.hi - r.lo);
}

constexpr double kBandTol = 1e-9;

}  // namespace detail

inline AxisBands bands_for(const ParamRange& r, const SplitConfig& c) {
    if (auto it = c.explicit_bands.find(r.name); it != c.explicit_bands.end()) return it->second;
    AxisBands b;
    if (c.extreme_frac > 0.0) {
        b.lower_extreme_hi = detail::range_value(r, c.extreme_frac);
        b.upper_extreme_lo = detail::range_value(r, 1.0 - c.extreme_frac);
    }
    if (c.has_middle()) b.middle = std::pair{detail::range_value(r, c.middle_lo_frac), detail::range_value(r, c.middle_hi_frac)};
    return b;
}

enum class RangeClass { trainable, non_extreme, extreme };

/// Per-axis band membership. Comparisons are made in fraction space with a
/// 1e-9 tolerance so that grid values landing on an edge count as OOD.
inline RangeClass classify_axis(const ParamRange& r, const AxisBands& b, double v) {
    const double f = detail::range_fraction(r, v);
    auto frac = [&](double x) {
        if (!std::isfinite(x)) return x;
        return detail::range_fraction(r, x);
    };
    if (f <= frac(b.lower_extreme_hi) + detail::kBandTol || f >= frac(b.upper_extreme_lo) - detail::kBandTol) {
        return RangeClass::extreme;
    }
    if (b.middle && f >= frac(b.middle->first) - detail::kBandTol && f <= frac(b.middle->second) + detail::kBandTol) {
        return RangeClass::non_extreme;
    }
    return RangeClass::trainable;
}

inline std::vector<std::string> split_axes(const SystemSpec& s, const SplitConfig& c) {
    return c.axes.empty() ? s.split_axes : c.axes;
}

/// Extreme if any axis is extreme; non-extreme only if every axis is in its
/// middle band; trainable otherwise.
inline RangeClass classify_params(const ParamVector& phi, const SystemSpec& s, const SplitConfig& c) {
    bool all_middle = true;
    for (const auto& name : split_axes(s, c)) {
        const ParamRange& r = s.range(name);
        const RangeClass a = classify_axis(r, bands_for(r, c), phi.at(name));
        if (a == RangeClass::extreme) return RangeClass::extreme;
        all_middle = all_middle && a == RangeClass::non_extreme;
    }
    return all_middle ? RangeClass::non_extreme : RangeClass::trainable;
}

/// Labels indexed [param][ic].
struct SplitAssignment {
    std::vector<std::vector<SplitLabel>> labels;
    SplitConfig config;

    std::size_t count(SplitLabel l) const {
        std::size_t n = 0;
        for (const auto& row : labels) n += static_cast<std::size_t>(std::count(row.begin(), row.end(), l));
        return n;
    }
};

namespace detail {

// Moves round(frac * n) randomly chosen members of `pool` into `out`.
inline void hold_out(std::vector<std::size_t>& pool, double frac, Rng& rng, std::vector<std::size_t>& out) {
    std::size_t k = static_cast<std::size_t>(std::llround(frac * static_cast<double>(pool.size())));
    if (frac > 0.0 && pool.size() >= 3) k = std::max<std::size_t>(k, 1);
    k = std::min(k, pool.size() > 0 ? pool.size() - 1 : 0);
    for (std::size_t m = 0; m < k; ++m) {
        const std::size_t pick = rng.index(pool.size());
        out.push_back(pool[pick]);
        pool.erase(pool.begin() + static_cast<std::ptrdiff_t>(pick));
    }
}

}  // namespace detail

/// Band labels per parameter value; trainable values are then held out by
/// value into val and test-id. Every IC of a parameter shares its label.
inline SplitAssignment build_splits(const std::vector<ParamVector>& params, std::size_t n_ics, const SystemSpec& system,
                                    const SplitConfig& config) {
    config.validate();
    require(!params.empty(), ErrorKind::invalid_config, "no parameter values to split");
    require(!system.field_parameter(), ErrorKind::invalid_config, "Darcy splits use build_darcy_splits");
    std::vector<SplitLabel> per_param(params.size(), SplitLabel::train);
    std::vector<std::size_t> trainable;
    for (std::size_t i = 0; i < params.size(); ++i) {
        switch (classify_params(params[i], system, config)) {
        case RangeClass::extreme: per_param[i] = SplitLabel::ood_extreme; break;
        case RangeClass::non_extreme: per_param[i] = SplitLabel::ood_nonextreme; break;
        case RangeClass::trainable: trainable.push_back(i); break;
        }
    }
    require(!trainable.empty(), ErrorKind::empty_train, "OOD bands cover every parameter value");
    Rng rng(derive_seed(config.seed, 0x5b17));
    std::vector<std::size_t> test, val;
    detail::hold_out(trainable, config.test_id_frac, rng, test);
    detail::hold_out(trainable, config.val_frac, rng, val);
    for (auto i : test) per_param[i] = SplitLabel::test_id;
    for (auto i : val) per_param[i] = SplitLabel::val;
    SplitAssignment out;
    out.config = config;
    for (auto l : per_param) out.labels.emplace_back(n_ics, l);
    return out;
}

/// Fraction of grid points at the field's maximum level (12 for Darcy).
inline double darcy_split_stat(const CoefficientField& a, double high = 12.0) {
    const auto v = a.values();
    const auto n = std::count(v.begin(), v.end(), high);
    return static_cast<double>(n) / static_cast<double>(v.size());
}

/// Samples whose statistic lies beyond mean +- sigma * std are OOD-extreme;
/// the rest are split by sample into train / val / test-id. Labels [0][ic].
inline SplitAssignment build_darcy_splits(const std::vector<double>& stats, const SplitConfig& config) {
    config.validate();
    require(!stats.empty(), ErrorKind::invalid_config, "no Darcy samples to split");
    const double n = static_cast<double>(stats.size());
    const double mean = std::accumulate(stats.begin(), stats.end(), 0.0) / n;
    double var = 0.0;
    for (double s : stats) var += (s - mean) * (s - mean);
    const double sd = stats.size() > 1 ? std::sqrt(var / (n - 1.0)) : 0.0;
    std::vector<SplitLabel> labels(stats.size(), SplitLabel::train);
    std::vector<std::size_t> central;
    for (std::size_t j = 0; j < stats.size(); ++j) {
        if (std::abs(stats[j] - mean) > config.darcy_sigma * sd) {
            labels[j] = SplitLabel::ood_extreme;
        } else {
            central.push_back(j);
        }
    }
    require(!central.empty(), ErrorKind::empty_train, "no Darcy samples inside the central band");
    Rng rng(derive_seed(config.seed, 0xda2c));
    std::vector<std::size_t> test, val;
    detail::hold_out(central, config.test_id_frac, rng, test);
    detail::hold_out(central, config.val_frac, rng, val);
    for (auto j : test) labels[j] = SplitLabel::test_id;
    for (auto j : val) labels[j] = SplitLabel::val;
    SplitAssignment out;
    out.config = config;
    out.labels.push_back(std::move(labels));
    return out;
}

}  // namespace pdeinv
