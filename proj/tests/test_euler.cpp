#include <gtest/gtest.h>

#include <cmath>
#include <complex>
#include <numbers>
#include <sstream>

#include "qhydro/euler.hpp"

using namespace qhydro;

namespace {

constexpr double pi = std::numbers::pi;

/// Field from primitive variables (rho, v, P) of a d = 3 gas moving along axis 0, e_int = 3P/2.
template <class Rho, class Vel, class Pre>
ConservedField primitive_field(int n, Rho rho, Vel vel, Pre pre) {
    Grid g = Grid::make({n});
    ConservedField f = ConservedField::uniform(g, {});
    for (std::size_t c = 0; c < g.cells(); ++c) {
        const double x = g.position(c)[0];
        const double r = rho(x), v = vel(x), p = pre(x);
        f.q[c] = ConservedVec{{r, r * v, 0, 0, 1.5 * p + 0.5 * r * v * v}};
    }
    return f;
}

std::complex<double> first_mode(const ConservedField& f, int mu) {
    std::complex<double> s = 0;
    for (std::size_t c = 0; c < f.q.size(); ++c) s += f.q[c][mu] * std::polar(1.0, -2 * pi * f.grid.position(c)[0]);
    return s / double(f.q.size());
}

} // namespace

TEST(Euler, FluxAtRest) {
    ConservedVec q{{0.7, 0, 0, 0, 2.0}};
    for (int axis = 0; axis < 3; ++axis) {
        auto a = flux_row(q, 1.3, axis);
        for (int k = 0; k < 5; ++k) EXPECT_EQ(a[k], k == 1 + axis ? 1.3 : 0.0);
    }
}

TEST(Euler, FluxFromPrimitives) {
    // with u the velocity: (rho u_i, rho u_k u_i + delta_ik P, u_i (e + P))
    const double rho = 0.8, p = 2.5;
    const std::array<double, 3> u{0.3, -0.2, 0.1};
    const double e = 1.5 * p + 0.5 * rho * (u[0] * u[0] + u[1] * u[1] + u[2] * u[2]);
    ConservedVec q{{rho, rho * u[0], rho * u[1], rho * u[2], e}};
    for (int i = 0; i < 3; ++i) {
        auto a = flux_row(q, p, i);
        EXPECT_NEAR(a[0], q[1 + i], 1e-15);
        for (int k = 0; k < 3; ++k) EXPECT_NEAR(a[1 + k], rho * u[k] * u[i] + (k == i ? p : 0), 1e-15);
        EXPECT_NEAR(a[4], u[i] * (e + p), 1e-15);
    }
}

TEST(Euler, GalileanFluxIdentity) {
    // at fixed P the boosted flux is the rest flux with u -> u + v
    const double v = 0.3, p = 1.7;
    ConservedVec q{{0.9, 0.2, 0, 0, 3.0}};
    ConservedVec b = qhydro::boost(q, {v, 0, 0});
    auto a0 = flux_row(q, p, 0), a1 = flux_row(b, p, 0);
    EXPECT_NEAR(a1[0], a0[0] + v * q[0], 1e-14);
    EXPECT_NEAR(a1[1], a0[1] + 2 * v * q[1] + v * v * q[0], 1e-14);
    const double u = q[1] / q[0];
    EXPECT_NEAR(a1[4], (u + v) * (b[4] + p), 1e-14);
    EXPECT_NEAR(b[4] - kinetic_energy_density(b), q[4] - kinetic_energy_density(q), 1e-14);
}

TEST(Euler, VirialLaw) {
    VirialPressure law{3};
    ConservedVec q{{0.5, 0.2, 0, 0, 2.0}};
    EXPECT_NEAR(law(q), 2.0 / 3 * (2.0 - 0.04), 1e-15);
    EXPECT_THROW(law(ConservedVec{{0.5, 1.0, 0, 0, 0.5}}), DomainError);
    EXPECT_NEAR(law.signal_speed(q), 0.4 + std::sqrt(5.0 / 3 * law(q) / 0.5), 1e-15);
}

TEST(Euler, UniformStateIsExactlySteady) {
    VirialPressure law{3};
    auto f = ConservedField::uniform(Grid::make({32}), ConservedVec{{0.6, 0.3, 0, 0, 9.0}});
    auto one = step(f, law, 1e-3);
    for (std::size_t c = 0; c < f.q.size(); ++c) EXPECT_LT((one.q[c] - f.q[c]).max_abs(), 1e-14);
    IntegrateOptions opt;
    opt.T_end = 1;
    auto tr = integrate(f, law, opt);
    EXPECT_FALSE(tr.blew_up);
    for (std::size_t c = 0; c < f.q.size(); ++c) EXPECT_LT((tr.last().q[c] - f.q[c]).max_abs(), 1e-12);
    EXPECT_DOUBLE_EQ(tr.last().time, 1.0);
}

TEST(Euler, CflLimitIsEnforced) {
    VirialPressure law{3};
    auto f = ConservedField::uniform(Grid::make({16}), ConservedVec{{0.6, 0, 0, 0, 9.0}});
    EXPECT_THROW(step(f, law, 1.0), CflError);
    EXPECT_THROW(step(f, law, -1e-3), CflError);
}

TEST(Euler, ConservesTotals) {
    VirialPressure law{3};
    auto f = primitive_field(
        64, [](double x) { return 0.6 + 0.1 * std::sin(2 * pi * x); }, [](double x) { return 0.2 * std::cos(2 * pi * x); },
        [](double) { return 6.0; });
    IntegrateOptions opt;
    opt.T_end = 0.05;
    auto tr = integrate(f, law, opt);
    EXPECT_LT(tr.max_step_drift, 1e-13);
    EXPECT_LT(tr.total_drift.max_abs(), 1e-12);
}

TEST(Euler, ContactWaveIsAdvected) {
    // constant v and P: rho(X - vT) is an exact solution; one period returns it to the start
    VirialPressure law{3};
    auto f = primitive_field(
        128, [](double x) { return 0.6 + 0.15 * std::sin(2 * pi * x); }, [](double) { return 1.0; }, [](double) { return 6.0; });
    IntegrateOptions opt;
    opt.T_end = 1;
    auto tr = integrate(f, law, opt);
    // centred differences carry the mode at v sin(kh)/(kh): after one period the
    // phase lags by 2 pi (1 - sin(kh)/(kh)), an rms error of amplitude * lag / sqrt 2
    const double kh = 2 * pi / 128;
    const double lag = 2 * pi * (1 - std::sin(kh) / kh);
    EXPECT_NEAR(l2_difference(tr.last(), f, 0), 0.15 * lag / std::sqrt(2.0), 0.05 * 0.15 * lag);
    double drho = 0;
    for (std::size_t c = 0; c < f.q.size(); ++c) drho = std::max(drho, std::abs(tr.last().q[c][1] / tr.last().q[c][0] - 1.0));
    EXPECT_LT(drho, 1e-8);
}

TEST(Euler, AcousticModeOscillatesAtSoundSpeed) {
    VirialPressure law{3};
    const double rho0 = 0.6, p0 = 6.0, amp = 1e-6;
    const double c = std::sqrt(5.0 / 3 * p0 / rho0);
    auto f = primitive_field(
        128, [&](double x) { return rho0 * (1 + amp * std::cos(2 * pi * x)); }, [](double) { return 0.0; },
        [&](double x) { return p0 * (1 + 5.0 / 3 * amp * std::cos(2 * pi * x)); });
    IntegrateOptions opt;
    opt.T_end = 0.07;
    auto tr = integrate(f, law, opt);
    // a standing wave: the k = 1 density mode goes as cos(2 pi c T)
    const double ratio = first_mode(tr.last(), 0).real() / first_mode(f, 0).real();
    EXPECT_NEAR(ratio, std::cos(2 * pi * c * opt.T_end), 1e-3);
}

TEST(Euler, ReflectionSymmetry) {
    VirialPressure law{3};
    const int n = 64;
    auto f = primitive_field(
        n, [](double x) { return 0.6 + 0.1 * std::cos(2 * pi * x) + 0.05 * std::sin(4 * pi * x); },
        [](double x) { return 0.3 * std::sin(2 * pi * x); }, [](double x) { return 6.0 + 0.5 * std::cos(6 * pi * x); });
    auto mirror = [&](const ConservedField& a) {
        ConservedField m = a;
        for (int i = 0; i < n; ++i) {
            m.q[i] = a.q[(n - i) % n];
            m.q[i][1] = -m.q[i][1];
        }
        return m;
    };
    IntegrateOptions opt;
    opt.T_end = 0.05;
    auto a = integrate(f, law, opt).last();
    auto b = integrate(mirror(f), law, opt).last();
    auto ma = mirror(a);
    for (int mu : {0, 1, 4}) EXPECT_LT(l2_difference(ma, b, mu), 1e-10);
}

TEST(Euler, SecondOrderConvergence) {
    VirialPressure law{3};
    auto make = [&](int n) {
        return primitive_field(
            n, [](double x) { return 0.6 + 0.1 * std::exp(-0.5 * std::pow((x - 0.5) / 0.08, 2)); }, [](double) { return 0.5; },
            [](double x) { return 6.0 + std::exp(-0.5 * std::pow((x - 0.5) / 0.08, 2)); });
    };
    auto run = [&](int n) {
        IntegrateOptions opt;
        opt.T_end = 0.1;
        opt.max_dt = 0.05 / 512;
        return integrate(make(n), law, opt).last();
    };
    auto fine = run(512);
    double err[3];
    int k = 0;
    for (int n : {64, 128, 256}) {
        auto c = run(n);
        err[k++] = l2_difference(c, restrict_to(fine, c.grid), 0);
    }
    const double o1 = std::log2(err[0] / err[1]), o2 = std::log2(err[1] / err[2]);
    EXPECT_GT(o1, 1.8);
    EXPECT_GT(o2, 1.8);
}

TEST(Euler, GradientGuardStopsSteepening) {
    VirialPressure law{3};
    auto f = primitive_field(
        64, [](double) { return 0.6; }, [](double x) { return 2.0 * std::sin(2 * pi * x); }, [](double) { return 6.0; });
    IntegrateOptions opt;
    opt.T_end = 2;
    opt.euler.blowup_factor = 5;
    auto tr = integrate(f, law, opt);
    EXPECT_TRUE(tr.blew_up);
    EXPECT_LT(tr.blowup_time, 2.0);
    EXPECT_FALSE(tr.stop_reason.empty());
    auto j = trajectory_summary(tr);
    EXPECT_EQ(j["blew_up"], true);
}

TEST(Euler, OutputTimesAreHitExactly) {
    VirialPressure law{3};
    auto f = ConservedField::uniform(Grid::make({16}), ConservedVec{{0.6, 0, 0, 0, 9.0}});
    IntegrateOptions opt;
    opt.T_end = 0.3;
    opt.output_times = {0, 0.1, 0.25};
    auto tr = integrate(f, law, opt);
    ASSERT_EQ(tr.frames.size(), 4u);
    EXPECT_EQ(tr.frames[0].time, 0.0);
    EXPECT_EQ(tr.frames[1].time, 0.1);
    EXPECT_EQ(tr.frames[2].time, 0.25);
    EXPECT_EQ(tr.frames[3].time, 0.3);
}

TEST(Euler, PressureCacheRoundTrip) {
    ContinuumFreeGas gas(3);
    auto cache = CachedPressure::build(gas, {0.4, 0.5, 0.6, 0.7}, {5.0, 6.0, 7.0, 8.0});
    std::stringstream ss;
    cache.write(ss);
    auto back = CachedPressure::read(ss);
    EXPECT_EQ(back.eos_dimension(), 3);
    for (double rho : {0.4, 0.55, 0.7})
        for (double e : {5.0, 6.3, 8.0}) {
            ConservedVec q{{rho, 0.1 * rho, 0, 0, e + 0.005 * rho}};
            EXPECT_EQ(back(q), cache(q));
            EXPECT_NEAR(cache(q), 2.0 / 3 * e, 1e-9); // virial, linear in e
        }
    EXPECT_THROW(cache(ConservedVec{{0.9, 0, 0, 0, 6}}), DomainError);
    std::istringstream bad("rho,e_internal,P\n");
    EXPECT_THROW(CachedPressure::read(bad), PreconditionError);
}

TEST(Euler, EosPressureAgreesWithVirial) {
    ContinuumFreeGas gas(3);
    EosPressure law(gas, 2);
    ConservedVec q{{0.6, 0.18, 0, 0, 9.0}};
    EXPECT_NEAR(law(q, 0), VirialPressure{3}(q), 1e-9);
    EXPECT_NEAR(law(q, 0), law(q, 1), 1e-12);
}

TEST(Euler, GridAndRestriction) {
    EXPECT_THROW(Grid::make({2}), ConfigError);
    Grid g = Grid::make({8, 4});
    EXPECT_EQ(g.cells(), 32u);
    EXPECT_EQ(g.neighbor(g.index({7, 0, 0}), 0, 1), g.index({0, 0, 0}));
    EXPECT_EQ(g.neighbor(g.index({0, 0, 0}), 1, -1), g.index({0, 3, 0}));
    ConservedField fine = ConservedField::uniform(Grid::make({8}), {});
    for (std::size_t c = 0; c < 8; ++c) fine.q[c][0] = double(c);
    auto coarse = restrict_to(fine, Grid::make({4}));
    for (std::size_t c = 0; c < 4; ++c) EXPECT_EQ(coarse.q[c][0], 2.0 * c);
    EXPECT_THROW(restrict_to(fine, Grid::make({5})), PreconditionError);
}
