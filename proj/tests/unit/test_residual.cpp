#include <gtest/gtest.h>

#include <array>
#include <cmath>
#include <numbers>

#include "helpers.hpp"
#include "pdeinv/fd.hpp"
#include "pdeinv/random.hpp"
#include "pdeinv/residual.hpp"
#include "pdeinv/samplers.hpp"
#include "pdeinv/solvers/darcy.hpp"
#include "pdeinv/solvers/reaction_diffusion.hpp"

using namespace pdeinv;

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

std::vector<double> sample(const Grid& g, auto fn) {
    std::vector<double> v(g.size());
    for (std::size_t i = 0; i < g.nx(); ++i)
        for (std::size_t j = 0; j < g.ny(); ++j)
            v[i * g.ny() + j] = fn(g.axis(0).coord(i), g.ndims() == 2 ? g.axis(1).coord(j) : 0.0);
    return v;
}

Trajectory frames(const Grid& g, const std::vector<std::string>& channels, const std::vector<double>& times,
                  auto fn_of_t) {
    Trajectory t(g, channels);
    for (double time : times) t.push_back(time, std::span<const double>(fn_of_t(time)));
    return t;
}

double max_err(std::span<const double> a, std::span<const double> b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

Trajectory taylor_green(std::size_t n, double nu, std::vector<double> times) {
    const Grid g = Grid::periodic_2d(n, n, 0.0, kTwoPi);
    return frames(g, {"w"}, times, [&](double t) {
        return sample(g, [&](double x, double y) { return 2.0 * std::cos(x) * std::cos(y) * std::exp(-2.0 * nu * t); });
    });
}

}  // namespace

TEST(FiniteDifference, FirstDerivativeIsSecondOrderWithOneSidedEnds) {
    auto f = [](double x, double) { return std::sin(3.0 * x) + x * x; };
    auto df = [](double x, double) { return 3.0 * std::cos(3.0 * x) + 2.0 * x; };
    auto err = [&](std::size_t n) {
        const Grid g = Grid::vertex_2d(n, 5, 0.0, 1.0);
        return max_err(fd::d1(g, sample(g, f), 0), sample(g, df));
    };
    const double ratio = err(41) / err(81);
    EXPECT_GT(ratio, 3.5);
    EXPECT_LT(ratio, 4.5);
}

TEST(FiniteDifference, PeriodicDerivativesOfSingleMode) {
    const std::size_t n = 64;
    const Grid g = Grid::periodic_1d(n, 0.0, 1.0);
    const double h = 1.0 / n, k = kTwoPi;
    const auto f = sample(g, [&](double x, double) { return std::sin(k * x); });
    // Central differences scale a Fourier mode by a known symbol.
    const auto d1 = fd::d1(g, f, 0);
    const auto d2 = fd::d2(g, f, 0);
    const auto e1 = sample(g, [&](double x, double) { return std::sin(k * h) / h * std::cos(k * x); });
    const auto e2 = sample(g, [&](double x, double) { return -(2.0 - 2.0 * std::cos(k * h)) / (h * h) * std::sin(k * x); });
    EXPECT_LT(max_err(d1, e1), 1e-10);
    EXPECT_LT(max_err(d2, e2), 1e-8);
}

TEST(FiniteDifference, SecondDerivativeAndLaplacianOnVertexGrid) {
    auto f = [](double x, double y) { return std::exp(x) * std::sin(2.0 * y); };
    auto lap = [](double x, double y) { return -3.0 * std::exp(x) * std::sin(2.0 * y); };
    auto err = [&](std::size_t n) {
        const Grid g = Grid::vertex_2d(n, n, 0.0, 1.0);
        return max_err(fd::laplacian(g, sample(g, f)), sample(g, lap));
    };
    const double ratio = err(33) / err(65);
    EXPECT_GT(ratio, 3.5);
    EXPECT_LT(ratio, 4.5);
    // Cubic is differentiated exactly by the four-point end stencil.
    const Grid g = Grid::vertex_2d(9, 4, 0.0, 2.0);
    const auto c = sample(g, [](double x, double) { return x * x * x; });
    EXPECT_LT(max_err(fd::d2(g, c, 0), sample(g, [](double x, double) { return 6.0 * x; })), 1e-11);
}

TEST(FiniteDifference, InteriorMaskDropsOnlyNonPeriodicBoundary) {
    const auto vm = fd::interior_mask(Grid::vertex_2d(5, 6, 0.0, 1.0));
    EXPECT_EQ(std::count(vm.begin(), vm.end(), 1), 3 * 4);
    const auto pm = fd::interior_mask(Grid::periodic_2d(5, 6, 0.0, 1.0));
    EXPECT_EQ(std::count(pm.begin(), pm.end(), 1), 30);
}

TEST(Residual, DerivativeChannelsFollowSystem) {
    const std::vector<double> times = {0.0, 0.1, 0.25, 0.3};
    for (SystemId id : {SystemId::rd2d, SystemId::ns2d_unforced, SystemId::ns2d_forced, SystemId::kdv1d}) {
        const SystemSpec sys = SystemSpec::defaults(id);
        const Grid g = id == SystemId::kdv1d ? Grid::periodic_1d(32, 0.0, 32.0)
                       : id == SystemId::rd2d ? Grid::cell_2d(8, 8, -1.0, 1.0)
                                              : Grid::periodic_2d(8, 8, 0.0, kTwoPi);
        Rng rng(1);
        auto w = frames(g, sys.channels, times, [&](double) {
            std::vector<double> v(sys.channels.size() * g.size());
            for (auto& x : v) x = rng.normal();
            return v;
        });
        const auto d = compute_derivatives(w, sys);
        EXPECT_EQ(d.channels, sys.derivatives) << to_string(id);
        EXPECT_EQ(d.n_frames(), 3u);
        EXPECT_EQ(d.values.size(), 3 * d.frame_size());
        EXPECT_DOUBLE_EQ(d.valid_time_range.first, 0.0);
        EXPECT_DOUBLE_EQ(d.valid_time_range.second, 0.25);
        // Forward difference uses the local spacing.
        const auto ut = d.channel(2, 0);
        EXPECT_NEAR(ut[3], (w.frame_values(3)[3] - w.frame_values(2)[3]) / 0.05, 1e-9);
        EXPECT_EQ(d.as_trajectory().n_frames(), 3u);
    }
}

TEST(Residual, TaylorGreenVanishesAtTrueViscosity) {
    const double nu = 1e-2;
    const auto w = taylor_green(64, nu, {0.0, 1e-4, 2e-4});
    const auto sys = SystemSpec::defaults(SystemId::ns2d_unforced);
    const double at_true = residual_norm(w, ParamVector{{"nu", nu}}, sys);
    const double at_double = residual_norm(w, ParamVector{{"nu", 2.0 * nu}}, sys);
    EXPECT_LT(at_true, 1e-4 * at_double);
    const Field r = residual_field(w, ParamVector{{"nu", nu}}, sys);
    EXPECT_EQ(r.channels(), (std::vector<std::string>{"r_w@0", "r_w@1"}));
}

TEST(Residual, ForcedLaminarStateVanishes) {
    const double nu = 5e-3, alpha = 0.1, kf = 2.0;
    const Grid g = Grid::periodic_2d(64, 64, 0.0, kTwoPi);
    const double h = g.axis(1).spacing();
    // Steady for the discrete Laplacian symbol, so the residual is exact to roundoff.
    const double sym = (2.0 - 2.0 * std::cos(kf * h)) / (h * h);
    const auto w = frames(g, {"w"}, {0.0, 0.5}, [&](double) {
        return sample(g, [&](double, double y) { return -kf / (nu * sym + alpha) * std::cos(kf * y); });
    });
    const auto sys = SystemSpec::defaults(SystemId::ns2d_forced);
    EXPECT_LT(residual_norm(w, ParamVector{{"nu", nu}}, sys), 1e-24);
    EXPECT_GT(residual_norm(w, ParamVector{{"nu", 2.0 * nu}}, sys), 1e-4);
}

TEST(Residual, IsAffineInLinearSlots) {
    const auto w = taylor_green(32, 1e-2, {0.0, 0.1, 0.2});
    const auto sys = SystemSpec::defaults(SystemId::ns2d_unforced);
    const Field r1 = residual_field(w, ParamVector{{"nu", 0.1}}, sys);
    const Field r2 = residual_field(w, ParamVector{{"nu", 0.2}}, sys);
    const Field r3 = residual_field(w, ParamVector{{"nu", 0.3}}, sys);
    for (std::size_t p = 0; p < r1.values().size(); ++p) {
        EXPECT_NEAR(r3.values()[p] - r1.values()[p], 2.0 * (r2.values()[p] - r1.values()[p]), 1e-12);
    }
    const auto terms = residual_terms(w, sys);
    EXPECT_EQ(terms.direction("nu").size(), terms.base.size());
}

TEST(Residual, KdvSolitonSelectsItsDispersion) {
    const double delta = 1.0, c = 4.0, x0 = 14.0;
    const Grid g = Grid::periodic_1d(512, 0.0, 32.0);
    auto soliton = [&](double t) {
        return sample(g, [&](double x, double) {
            const double s = 1.0 / std::cosh(std::sqrt(c) / (2.0 * delta) * (x - x0 - c * t));
            return 3.0 * c * s * s;
        });
    };
    const auto w = frames(g, {"u"}, {0.0, 1e-4, 2e-4}, soliton);
    const auto sys = SystemSpec::defaults(SystemId::kdv1d);
    double best = 1e300, best_delta = 0.0;
    for (double d = 0.8; d <= 1.2 + 1e-12; d += 0.005) {
        const double r = residual_norm(w, ParamVector{{"delta", d}}, sys);
        if (r < best) {
            best = r;
            best_delta = d;
        }
    }
    EXPECT_NEAR(best_delta, delta, 0.02);
    EXPECT_LT(residual_norm(w, ParamVector{{"delta", delta}}, sys),
              0.05 * residual_norm(w, ParamVector{{"delta", 1.1 * delta}}, sys));
}

TEST(Residual, RdSolverOutputHasSmallResidualAtTrueParameters) {
    const Grid g = Grid::cell_2d(24, 24, -1.0, 1.0);
    Field ic(g, {"u", "v"});
    ic.data() = sample(g, [](double x, double y) { return std::exp(-4.0 * (x * x + y * y)); });
    const auto v0 = sample(g, [](double x, double y) { return 0.5 * std::exp(-6.0 * ((x - 0.3) * (x - 0.3) + y * y)); });
    ic.data().insert(ic.data().end(), v0.begin(), v0.end());
    SolverConfig c = SolverConfig::defaults(SystemId::rd2d);
    c.internal_resolution = c.output_resolution = {24, 24};
    c.burn_in_s = 0.0;
    c.record_interval_s = 1e-4;
    c.horizon_s = 3e-4;
    c.rtol = c.atol = 1e-12;
    const ParamVector truth{{"Du", 0.2}, {"Dv", 0.3}, {"k", 0.05}};
    const auto traj = solve_rd(ic, truth, c);
    const auto sys = SystemSpec::defaults(SystemId::rd2d);
    const double r0 = residual_norm(traj, truth, sys);
    for (const auto& wrong : {ParamVector{{"Du", 0.3}, {"Dv", 0.3}, {"k", 0.05}},
                              ParamVector{{"Du", 0.2}, {"Dv", 0.45}, {"k", 0.05}},
                              ParamVector{{"Du", 0.2}, {"Dv", 0.3}, {"k", 0.07}}}) {
        EXPECT_LT(r0, 1e-3 * residual_norm(traj, wrong, sys));
    }
}

TEST(Residual, DarcySolutionSatisfiesFluxResidual) {
    const Grid g = Grid::vertex_2d(61, 61, 0.0, 1.0);
    const auto a = sample_darcy_coeff(g, 7);
    SolverConfig c = SolverConfig::defaults(SystemId::darcy2d);
    c.internal_resolution = c.output_resolution = {61, 61};
    const Field u = solve_darcy(a, c);
    EXPECT_LT(residual_norm(u, a), 1e-18);
    EXPECT_GT(residual_norm(u, CoefficientField::constant(g, 7.0)), 1e-2);
    const Field r = residual_field(u, a);
    EXPECT_EQ(r.at(0, 0, 5), 0.0);
}

TEST(Residual, ErrorsForBadInputs) {
    const auto sys = SystemSpec::defaults(SystemId::ns2d_unforced);
    const auto one = taylor_green(16, 1e-2, {0.0});
    EXPECT_EQ(thrown_kind([&] { residual_norm(one, ParamVector{{"nu", 1e-2}}, sys); }), ErrorKind::insufficient_window);
    const auto two = taylor_green(16, 1e-2, {0.0, 0.1});
    EXPECT_EQ(thrown_kind([&] { residual_norm(two, ParamVector{}, sys); }), ErrorKind::invalid_params);
    EXPECT_EQ(thrown_kind([&] { residual_norm(two, ParamVector{{"nu", 1e-2}}, SystemSpec::defaults(SystemId::darcy2d)); }),
              ErrorKind::invalid_params);
    const double nan = std::numeric_limits<double>::quiet_NaN();
    EXPECT_EQ(thrown_kind([&] { residual_norm(two, ParamVector{{"nu", nan}}, sys); }), ErrorKind::invalid_params);
}

TEST(Residual, ZeroAndEquilibriumStatesHaveZeroResidual) {
    const auto ns = SystemSpec::defaults(SystemId::ns2d_unforced);
    const Grid pg = Grid::periodic_2d(16, 16, 0.0, 1.0);
    const auto zero = frames(pg, {"w"}, {0.0, 0.1}, [&](double) { return std::vector<double>(pg.size(), 0.0); });
    EXPECT_EQ(residual_norm(zero, ParamVector{{"nu", 1e-3}}, ns), 0.0);

    const double k = 0.05, u_star = -std::cbrt(k);
    const Grid cg = Grid::cell_2d(12, 12, -1.0, 1.0);
    const auto rest = frames(cg, {"u", "v"}, {0.0, 0.05, 0.1}, [&](double) { return std::vector<double>(2 * cg.size(), u_star); });
    EXPECT_LT(residual_norm(rest, ParamVector{{"Du", 0.1}, {"Dv", 0.2}, {"k", k}}, SystemSpec::defaults(SystemId::rd2d)), 1e-28);
    const auto d = compute_derivatives(rest, SystemSpec::defaults(SystemId::rd2d));
    EXPECT_EQ(max_abs(d.channel(0, 0)), 0.0);
    EXPECT_EQ(max_abs(d.channel(1, 1)), 0.0);
}

TEST(Residual, NormIsMeanSquareAndQuadraticInScale) {
    const auto w = taylor_green(32, 1e-2, {0.0, 0.1});
    const auto sys = SystemSpec::defaults(SystemId::ns2d_unforced);
    const ParamVector phi{{"nu", 0.05}};
    const Field r = residual_field(w, phi, sys);
    EXPECT_NEAR(residual_norm(w, phi, sys), sum_sq(r.values()) / static_cast<double>(r.values().size()), 1e-15);
    // Taylor-Green is a linear regime: doubling w doubles every residual term.
    Trajectory w2 = w;
    for (auto& v : w2.values()) v *= 2.0;
    EXPECT_NEAR(residual_norm(w2, phi, sys), 4.0 * residual_norm(w, phi, sys), 1e-12);
}

TEST(Residual, NormIsQuadraticInEachSlot) {
    // Three evaluations fix the quadratic; a fourth must lie on it.
    auto check = [](const Trajectory& w, const SystemSpec& sys, ParamVector phi, const std::string& slot,
                    std::array<double, 4> xs) {
        std::array<double, 4> ys{};
        for (std::size_t i = 0; i < 4; ++i) {
            phi.set(slot, xs[i]);
            ys[i] = residual_norm(w, phi, sys);
        }
        auto coeff = [&](double x) { return slot == "delta" ? x * x : x; };
        const double x0 = coeff(xs[0]), x1 = coeff(xs[1]), x2 = coeff(xs[2]), x3 = coeff(xs[3]);
        const double l0 = (x3 - x1) * (x3 - x2) / ((x0 - x1) * (x0 - x2));
        const double l1 = (x3 - x0) * (x3 - x2) / ((x1 - x0) * (x1 - x2));
        const double l2 = (x3 - x0) * (x3 - x1) / ((x2 - x0) * (x2 - x1));
        const double pred = l0 * ys[0] + l1 * ys[1] + l2 * ys[2];
        EXPECT_NEAR(pred, ys[3], 1e-10 * std::abs(ys[3])) << slot;
    };
    Rng rng(9);
    auto noise = [&](const Grid& g, const std::vector<std::string>& channels) {
        return frames(g, channels, {0.0, 0.1, 0.2}, [&](double) {
            std::vector<double> v(channels.size() * g.size());
            for (auto& x : v) x = rng.normal();
            return v;
        });
    };
    const Grid pg = Grid::periodic_2d(16, 16, 0.0, kTwoPi);
    check(noise(pg, {"w"}), SystemSpec::defaults(SystemId::ns2d_forced), {}, "nu", {1e-3, 4e-3, 9e-3, 2e-2});
    const Grid cg = Grid::cell_2d(16, 16, -1.0, 1.0);
    const ParamVector rd{{"Du", 0.1}, {"Dv", 0.2}, {"k", 0.03}};
    for (const char* slot : {"Du", "Dv", "k"}) check(noise(cg, {"u", "v"}), SystemSpec::defaults(SystemId::rd2d), rd, slot, {0.01, 0.1, 0.3, 0.45});
    const Grid kg = Grid::periodic_1d(64, 0.0, 32.0);
    check(noise(kg, {"u"}), SystemSpec::defaults(SystemId::kdv1d), {}, "delta", {0.8, 1.7, 3.1, 4.9});
}

TEST(Residual, CentralDifferenceMeetsTruncationBound) {
    const std::size_t n = 256;
    const Grid g = Grid::periodic_1d(n, 0.0, 1.0);
    const double h = 1.0 / n;
    const auto u = sample(g, [](double x, double) { return std::sin(kTwoPi * x); });
    const auto du = fd::d1(g, u, 0);
    const auto ex = sample(g, [](double x, double) { return kTwoPi * std::cos(kTwoPi * x); });
    EXPECT_LT(max_err(du, ex), std::pow(kTwoPi, 3) * h * h / 6.0 * 1.1);
}

TEST(Residual, DerivativeStackConvergesUnderRefinement) {
    // Band-limited field sampled on two periodic grids; spatial channels vs exact values.
    auto err = [](std::size_t n) {
        const Grid g = Grid::periodic_1d(n, 0.0, 32.0);
        const double k = kTwoPi / 32.0 * 3.0;
        const auto w = frames(g, {"u"}, {0.0, 0.1}, [&](double) { return sample(g, [&](double x, double) { return std::sin(k * x); }); });
        const auto d = compute_derivatives(w, SystemSpec::defaults(SystemId::kdv1d));
        const auto uxxx = sample(g, [&](double x, double) { return -k * k * k * std::cos(k * x); });
        return max_err(d.channel(0, 2), uxxx);
    };
    const double ratio = err(64) / err(128);
    EXPECT_GT(ratio, 3.5);
    EXPECT_LT(ratio, 4.5);
}
