#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include <Eigen/Dense>

#include "helpers.hpp"
#include "pdeinv/dataset.hpp"
#include "pdeinv/degradation.hpp"
#include "pdeinv/metrics.hpp"
#include "pdeinv/spectra.hpp"

using namespace pdeinv;

namespace {

constexpr double kPi = std::numbers::pi;

Field mode_field(std::size_t n, double mx, double my, double phase = 0.0) {
    const Grid g = Grid::periodic_2d(n, n, 0.0, 2.0 * kPi);
    Field f(g, {"w"});
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
            f.at(0, i, j) = std::sin(mx * g.axis(0).coord(i) + my * g.axis(1).coord(j) + phase);
    return f;
}

Field noise_field(std::size_t nx, std::size_t ny, std::uint64_t seed) {
    Field f(Grid::periodic_2d(nx, ny, 0.0, 2.0 * kPi), {"w"});
    Rng rng(seed);
    for (auto& v : f.values()) v = rng.normal();
    return f;
}

}  // namespace

TEST(Metrics, RelativeErrorExamples) {
    const ParamVector phi{{"nu", 1.0}};
    EXPECT_EQ(relative_error(phi, phi), 0.0);
    EXPECT_NEAR(relative_error(ParamVector{{"nu", 1.1}}, phi), 0.1, 1e-15);
    const Grid g = Grid::vertex_2d(5, 5, 0.0, 1.0);
    EXPECT_DOUBLE_EQ(relative_error(CoefficientField::constant(g, 12.0), CoefficientField::constant(g, 3.0)), 3.0);
    EXPECT_EQ(thrown_kind([&] { relative_error(phi, ParamVector{{"nu", 0.0}}); }), ErrorKind::undefined_metric);
    // Scale covariance.
    const ParamVector a{{"Du", 0.3}, {"Dv", 0.1}}, b{{"Du", 0.25}, {"Dv", 0.15}};
    const ParamVector a7{{"Du", 2.1}, {"Dv", 0.7}}, b7{{"Du", 1.75}, {"Dv", 1.05}};
    EXPECT_NEAR(relative_error(a7, b7), relative_error(a, b), 1e-14);
}

TEST(Metrics, NlsIsNegatedOlsSlope) {
    const std::vector<double> xs{0.0, 1.0, 2.0, 3.0};
    std::vector<double> ys;
    for (double x : xs) ys.push_back(1.0 - 0.5 * x);
    EXPECT_NEAR(nls(xs, ys), 0.5, 1e-15);
    EXPECT_EQ(nls(xs, std::vector<double>(4, 0.3)), 0.0);
    EXPECT_EQ(thrown_kind([&] { nls(std::vector<double>(3, 1.0), std::vector<double>{1, 2, 3}); }),
              ErrorKind::undefined_metric);

    Rng rng(3);
    std::vector<double> x(50), y(50);
    Eigen::MatrixXd A(50, 2);
    Eigen::VectorXd b(50);
    for (int i = 0; i < 50; ++i) {
        x[i] = rng.uniform(0.0, 10.0);
        y[i] = 2.0 - 0.3 * x[i] + 0.1 * rng.normal();
        A(i, 0) = 1.0;
        A(i, 1) = x[i];
        b(i) = y[i];
    }
    const Eigen::VectorXd coef = (A.transpose() * A).ldlt().solve(A.transpose() * b);
    EXPECT_NEAR(nls(x, y), -coef(1), 1e-12);
    // Shift invariance and scale equivariance.
    std::vector<double> shifted, scaled;
    for (double v : y) {
        shifted.push_back(v + 4.0);
        scaled.push_back(3.0 * v);
    }
    EXPECT_NEAR(nls(x, shifted), nls(x, y), 1e-12);
    EXPECT_NEAR(nls(x, scaled), 3.0 * nls(x, y), 1e-12);
}

TEST(Metrics, PearsonAgainstCovarianceFormula) {
    const std::vector<double> a{1.0, 2.0, 4.0, 7.0};
    std::vector<double> neg;
    for (double v : a) neg.push_back(-v);
    EXPECT_NEAR(pearson(a, a), 1.0, 1e-15);
    EXPECT_NEAR(pearson(a, neg), -1.0, 1e-15);
    EXPECT_EQ(thrown_kind([&] { pearson(a, std::vector<double>(4, 2.0)); }), ErrorKind::undefined_metric);

    Rng rng(8);
    Eigen::VectorXd x(200), y(200);
    for (int i = 0; i < 200; ++i) {
        x(i) = rng.normal();
        y(i) = 0.4 * x(i) + rng.normal();
    }
    const Eigen::VectorXd xc = x.array() - x.mean(), yc = y.array() - y.mean();
    const double oracle = (xc.dot(yc) / 199.0) / std::sqrt(xc.squaredNorm() / 199.0 * yc.squaredNorm() / 199.0);
    EXPECT_NEAR(pearson(std::vector<double>(x.data(), x.data() + 200), std::vector<double>(y.data(), y.data() + 200)),
                oracle, 1e-12);
}

TEST(Metrics, RelL2Examples) {
    const std::vector<double> ref{3.0, 4.0};
    EXPECT_EQ(pdeinv::rel_l2(ref, ref), 0.0);
    EXPECT_DOUBLE_EQ(pdeinv::rel_l2(std::vector<double>{6.0, 8.0}, ref), 1.0);
    EXPECT_DOUBLE_EQ(pdeinv::rel_l2(std::vector<double>{3.0, 4.5}, ref), 0.1);
    EXPECT_EQ(thrown_kind([&] { pdeinv::rel_l2(ref, std::vector<double>{0.0, 0.0}); }), ErrorKind::undefined_metric);
}

TEST(Metrics, GridIndependenceOfIdenticalAndIncompatibleRuns) {
    Trajectory t(Grid::periodic_2d(16, 16, 0.0, 2.0 * kPi), {"w"});
    t.push_back(0.0, noise_field(16, 16, 1));
    t.push_back(1.0, noise_field(16, 16, 2));
    const auto gi = grid_independence(t, t);
    EXPECT_EQ(gi.rel_l2, 0.0);
    EXPECT_NEAR(gi.pearson, 1.0, 1e-15);
    Trajectory odd(Grid::periodic_2d(6, 6, 0.0, 2.0 * kPi), {"w"});
    odd.push_back(0.0, noise_field(6, 6, 1));
    odd.push_back(1.0, noise_field(6, 6, 2));
    EXPECT_EQ(thrown_kind([&] { grid_independence(odd, t); }), ErrorKind::invalid_config);
}

TEST(Metrics, UnderResolvedForcedFlowFailsGridIndependence) {
    SolverConfig c = SolverConfig::defaults(SystemId::ns2d_forced);
    c.burn_in_s = 0.0;
    c.record_interval_s = 2.0;
    c.horizon_s = 8.0;
    const auto sys = SystemSpec::defaults(SystemId::ns2d_forced);
    Field ic_hi = sample_initial_condition(sys, Grid::periodic_2d(128, 128, 0.0, 2.0 * kPi), 4);
    c.internal_resolution = {128, 128};
    c.output_resolution = {32, 32};
    const auto hi = solve_ns_forced(ic_hi, 1e-5, c);
    c.internal_resolution = c.output_resolution = {32, 32};
    const auto lo = solve_ns_forced(downsample(ic_hi, 4), 1e-5, c);
    // Compare once the unresolved scales have had time to feed back.
    const auto gi = grid_independence(lo.window(3, 2), hi.window(3, 2));
    EXPECT_GT(gi.rel_l2, 0.2);
}

TEST(Metrics, SeedAggregation) {
    const auto r = aggregate_over_seeds(std::vector<double>{1.0, 2.0, 3.0}, "test-id");
    EXPECT_DOUBLE_EQ(r.mean, 2.0);
    EXPECT_NEAR(r.stddev, std::sqrt(2.0 / 3.0), 1e-15);
    EXPECT_EQ(r.n_seeds, 3u);
    EXPECT_EQ(aggregate_over_seeds(std::vector<double>(4, 0.7)).stddev, 0.0);
    EXPECT_EQ(aggregate_over_seeds(std::vector<double>{0.4}).stddev, 0.0);
    Rng rng(1);
    std::vector<double> v(37);
    for (auto& x : v) x = rng.uniform(0.0, 1.0);
    double mean = 0.0, m2 = 0.0;
    for (double x : v) mean += x;
    mean /= 37.0;
    for (double x : v) m2 += (x - mean) * (x - mean);
    const auto a = aggregate_over_seeds(v);
    EXPECT_NEAR(a.mean, mean, 1e-15);
    EXPECT_NEAR(a.stddev, std::sqrt(m2 / 37.0), 1e-15);
}

TEST(Metrics, EvalWindowsEveryTenth) {
    EXPECT_EQ(eval_window_starts(25, 2), (std::vector<std::size_t>{0, 10, 20}));
    EXPECT_EQ(eval_window_starts(21, 2), (std::vector<std::size_t>{0, 10}));
    EXPECT_TRUE(eval_window_starts(1, 2).empty());
}

TEST(Spectra, SingleModeLandsInItsShell) {
    const auto s = energy_spectrum(mode_field(32, 3.0, 0.0));
    for (std::size_t k = 0; k < s.E.size(); ++k) {
        if (k == 3) EXPECT_GT(s.E[k], 0.0);
        else EXPECT_LT(s.E[k], 1e-28) << k;
    }
    // w = sin 3x gives |u|^2 = cos^2(3x)/9, mean 1/18, energy 1/36.
    EXPECT_NEAR(s.E[3], 1.0 / 36.0, 1e-15);
    const auto diag = energy_spectrum(mode_field(32, 3.0, 4.0));
    EXPECT_GT(diag.E[5], 0.0);
    EXPECT_NEAR(diag.total_energy, diag.E[5], 1e-15);
    const auto zero = energy_spectrum(Field(Grid::periodic_2d(16, 16, 0.0, 2.0 * kPi), {"w"}));
    for (double e : zero.E) EXPECT_EQ(e, 0.0);
    EXPECT_EQ(thrown_kind([&] { energy_spectrum(Field(Grid::cell_2d(8, 8, 0.0, 1.0), {"w"})); }),
              ErrorKind::unsupported_grid);
}

TEST(Spectra, ParsevalOnRandomFields) {
    for (std::uint64_t s = 0; s < 20; ++s) {
        const std::size_t nx = 16 + 2 * (s % 5), ny = 32 - (s % 3);
        for (auto q : {SpectrumQuantity::energy, SpectrumQuantity::enstrophy}) {
            const auto sp = energy_spectrum(noise_field(nx, ny, s), q);
            double sum = 0.0;
            for (double e : sp.E) {
                EXPECT_GE(e, 0.0);
                sum += e;
            }
            EXPECT_NEAR(sum, sp.total_energy, 1e-10 * sp.total_energy);
        }
    }
}

TEST(Spectra, TranslationInvariant) {
    const Field f = noise_field(24, 24, 9);
    Field g = f;
    for (std::size_t i = 0; i < 24; ++i)
        for (std::size_t j = 0; j < 24; ++j) g.at(0, i, j) = f.at(0, (i + 5) % 24, (j + 11) % 24);
    const auto a = energy_spectrum(f), b = energy_spectrum(g);
    for (std::size_t k = 0; k < a.E.size(); ++k) EXPECT_NEAR(a.E[k], b.E[k], 1e-10 * a.total_energy);
}

TEST(Spectra, DropOffAndDistance) {
    EnergySpectrum s;
    s.E = {0.0, 1.0, 0.5, 1e-3, 1e-7, 0.0};
    s.k = {0, 1, 2, 3, 4, 5};
    EXPECT_EQ(drop_off_shell(s), 4u);
    s.E = {0.0, 1.0, 0.5};
    EXPECT_EQ(drop_off_shell(s), 3u);
    EnergySpectrum a, b;
    a.E = {1.0, 10.0};
    b.E = {10.0, 10.0};
    EXPECT_NEAR(log_spectral_distance(a, b), 0.5, 1e-12);
    EXPECT_EQ(log_spectral_distance(a, a), 0.0);
}

TEST(Spectra, SelfConsistencyIdentifiesViscosity) {
    const auto sys = SystemSpec::defaults(SystemId::ns2d_forced);
    SolverConfig c = SolverConfig::defaults(sys.id);
    c.internal_resolution = c.output_resolution = {32, 32};
    c.burn_in_s = 0.0;
    c.record_interval_s = 0.5;
    c.horizon_s = 2.0;
    const Field ic = sample_initial_condition(sys, Grid::periodic_2d(32, 32, 0.0, 2.0 * kPi), 12);
    const auto ref = solve_ns_forced(ic, 1e-3, c);
    const auto same = self_consistency(sys, ref, ParamVector{{"nu", 1e-3}}, c);
    EXPECT_FALSE(same.diverged);
    EXPECT_LT(same.mean_distance, 1e-8);
    const auto off = self_consistency(sys, ref, ParamVector{{"nu", 1e-2}}, c);
    EXPECT_GT(off.mean_distance, same.mean_distance);
    EXPECT_GT(off.mean_distance, 1e-3);
    EXPECT_EQ(thrown_kind([&] { self_consistency(SystemSpec::defaults(SystemId::kdv1d), ref, {}, c); }),
              ErrorKind::unsupported_grid);
}

TEST(Degradation, SaltPepper) {
    const Field f = noise_field(32, 32, 1);
    const auto same = salt_pepper(f, 0.0, 5);
    EXPECT_EQ(std::vector<double>(same.values().begin(), same.values().end()),
              std::vector<double>(f.values().begin(), f.values().end()));
    const auto [lo, hi] = std::minmax_element(f.values().begin(), f.values().end());
    const auto all = salt_pepper(f, 1.0, 5);
    for (double v : all.values()) EXPECT_TRUE(v == *lo || v == *hi);
    const auto a = salt_pepper(f, 0.3, 5), b = salt_pepper(f, 0.3, 5);
    EXPECT_EQ(std::vector<double>(a.values().begin(), a.values().end()),
              std::vector<double>(b.values().begin(), b.values().end()));
    EXPECT_EQ(thrown_kind([&] { salt_pepper(f, 1.5, 0); }), ErrorKind::invalid_config);

    const Field big = noise_field(1000, 1000, 2);
    const auto d = salt_pepper(big, 0.5, 7);
    std::size_t changed = 0;
    for (std::size_t i = 0; i < big.values().size(); ++i) changed += d.values()[i] != big.values()[i];
    // The two extreme points themselves may be "corrupted" to their own value.
    EXPECT_NEAR(static_cast<double>(changed) / 1e6, 0.5, 0.002);
}

TEST(Degradation, ButterworthGainAndSymmetry) {
    Field c(Grid::periodic_2d(16, 16, 0.0, 2.0 * kPi), {"w"});
    for (auto& v : c.values()) v = 2.5;
    const auto flat = butterworth(c, 0.3);
    for (double v : flat.values()) EXPECT_NEAR(v, 2.5, 1e-14);

    // k_c = 0.25 * 32 = 8: a mode on the x axis at |m| = 8 passes at 2^-1/2.
    const Field m8 = mode_field(64, 8.0, 0.0, 0.3);
    const auto out = butterworth(m8, 0.25);
    for (std::size_t i = 0; i < m8.values().size(); ++i) {
        EXPECT_NEAR(out.values()[i], m8.values()[i] / std::sqrt(2.0), 1e-12);
    }
    EXPECT_EQ(thrown_kind([&] { butterworth(Field(Grid::cell_2d(8, 8, 0.0, 1.0), {"w"}), 0.5); }),
              ErrorKind::unsupported_grid);
}

TEST(Degradation, ButterworthSuppressesHighShells) {
    const Field f = noise_field(128, 128, 4);
    const auto g = butterworth_removed_fraction(f, 0.75);
    const double k_c = 0.25 * 64.0;
    const auto sf = energy_spectrum(f, SpectrumQuantity::enstrophy);
    const auto sg = energy_spectrum(g, SpectrumQuantity::enstrophy);
    const auto sgg = energy_spectrum(butterworth_removed_fraction(g, 0.75), SpectrumQuantity::enstrophy);
    for (std::size_t k = 0; k < sf.E.size(); ++k) {
        if (static_cast<double>(k) >= 2.0 * k_c + 0.5) {
            EXPECT_LE(sg.E[k], 0.01 * sf.E[k]) << k;
            EXPECT_LE(sg.E[k], std::pow(butterworth_gain(static_cast<double>(k) - 0.5, k_c, 6), 2) * sf.E[k]) << k;
        }
        EXPECT_LE(sgg.E[k], sg.E[k] * (1.0 + 1e-12) + 1e-300);
    }
}

TEST(Degradation, GridLineDropout) {
    const Grid g = Grid::periodic_2d(64, 64, 0.0, 1.0);
    Field lin(g, {"u"});
    for (std::size_t i = 0; i < 64; ++i)
        for (std::size_t j = 0; j < 64; ++j) lin.at(0, i, j) = 2.0 * g.axis(0).coord(i) - 0.7 * g.axis(1).coord(j) + 1.0;
    const auto none = drop_grid_lines(lin, 0.0, 1);
    EXPECT_TRUE(std::all_of(none.keep_mask.begin(), none.keep_mask.end(), [](auto m) { return m == 1; }));
    double kept_total = 0.0;
    for (std::uint64_t s = 0; s < 200; ++s) {
        const auto d = drop_grid_lines(lin, 0.3, s);
        for (std::size_t q = 0; q < lin.values().size(); ++q) {
            ASSERT_NEAR(d.field.values()[q], lin.values()[q], 1e-12);
        }
        kept_total += static_cast<double>(std::count(d.kept_rows.begin(), d.kept_rows.end(), 1) +
                                          std::count(d.kept_cols.begin(), d.kept_cols.end(), 1));
    }
    EXPECT_NEAR(kept_total / 400.0, 44.8, 0.6);
    const auto nan = drop_grid_lines(lin, 0.3, 3, DropFill::nan);
    for (std::size_t q = 0; q < lin.values().size(); ++q) EXPECT_EQ(std::isnan(nan.field.values()[q]), !nan.keep_mask[q]);
    EXPECT_EQ(thrown_kind([&] { drop_grid_lines(lin, 1.0, 0); }), ErrorKind::invalid_config);
    Field tiny(Grid::periodic_2d(4, 4, 0.0, 1.0), {"u"});
    bool degenerate = false;
    for (std::uint64_t s = 0; s < 100 && !degenerate; ++s) {
        degenerate = thrown_kind([&] { drop_grid_lines(tiny, 0.9, s); }) == ErrorKind::degenerate_grid;
    }
    EXPECT_TRUE(degenerate);
}
