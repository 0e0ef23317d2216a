#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "qhydro/compare.hpp"
#include "qhydro/dynamics.hpp"
#include "qhydro/entropy.hpp"

using namespace qhydro;

namespace {

Eigen::VectorXcd basis(std::size_t dim, std::uint64_t s) {
    Eigen::VectorXcd v = Eigen::VectorXcd::Zero(dim);
    v[s] = 1;
    return v;
}

} // namespace

TEST(Dynamics, GibbsStateIsFixed) {
    auto model = LatticeModel::build(Lattice({6}), PairPotential::chain({0.7}));
    auto g = gibbs_state(LambdaVec{{0.2, 0, 0, 0, 1.3}}, model);
    auto r = evolve(g, model, {0.3, 1.7, 5.0});
    for (const auto& s : r.states) EXPECT_LT((s.matrix() - g.matrix()).max_abs(), 1e-12);
}

TEST(Dynamics, TwoSiteOscillation) {
    // on a 2-site ring both bonds join the same pair: one-body H = [[1, -1], [-1, 1]],
    // so a particle starting on site 0 is found on site 1 with probability sin^2 t
    auto model = LatticeModel::build(Lattice({2}), {});
    auto start = DensityMatrix::pure(basis(4, 0b01), model.sectors());
    std::vector<double> times{0.1, 0.5, 1.0, 2.3};
    auto r = evolve(start, model, times);
    for (std::size_t i = 0; i < times.size(); ++i) {
        const double s = std::sin(times[i]);
        EXPECT_NEAR(r.states[i].expect(model.densities.n[1]), s * s, 1e-13);
        EXPECT_NEAR(r.states[i].expect(model.densities.n[0]), 1 - s * s, 1e-13);
    }
    EXPECT_LT(r.drift("N"), 1e-14);
    EXPECT_LT(r.drift("H"), 1e-14);
}

TEST(Dynamics, ConservedTotalsAndSpectrum) {
    auto model = LatticeModel::build(Lattice({6}), PairPotential::chain({0.5}));
    FourierProfile p;
    p.base = LambdaVec{{-0.3, 0.2, 0, 0, 1.2}};
    p.modes.push_back({0, {1, 0, 0}, 0.0, 0.6, 0.0});
    auto g0 = local_gibbs_state(model, p.sample(model.lattice()));
    auto r = evolve(g0, model, {0.5, 1.0, 4.0, 10.0});
    EXPECT_LT(r.drift("N"), 1e-11);
    EXPECT_LT(r.drift("H"), 1e-11);
    EXPECT_LT(r.spectrum_drift, 1e-12);
    EXPECT_THROW(r.drift("Q"), PreconditionError);

    auto free = LatticeModel::build(Lattice({6}), {});
    auto gf = local_gibbs_state(free, p.sample(free.lattice()));
    EXPECT_LT(evolve(gf, free, {1.0, 4.0}).drift("P1"), 1e-11);
}

TEST(Dynamics, MomentumOccupations) {
    const int m = 6;
    FockSpace fs(Lattice({m}));
    auto part = fs.number_sectors();
    auto vac = momentum_occupations(DensityMatrix::pure(basis(fs.dim(), 0), part), fs);
    for (double n : vac.occupation) EXPECT_NEAR(n, 0.0, 1e-15);
    auto full = momentum_occupations(DensityMatrix::pure(basis(fs.dim(), (1u << m) - 1), part), fs);
    for (double n : full.occupation) EXPECT_NEAR(n, 1.0, 1e-14);
    EXPECT_NEAR(full.total(), m, 1e-13);

    auto model = LatticeModel::build(Lattice({m}), {});
    LambdaVec l{{0.4, 0.5, 0, 0, 1.5}};
    auto occ = momentum_occupations(gibbs_state(l, model), model.space);
    for (std::size_t i = 0; i < occ.momenta.size(); ++i) {
        const double p = occ.momenta[i][0];
        const double x = l[0] + l[1] * std::sin(p) - l[4] * (1 - std::cos(p));
        EXPECT_NEAR(occ.occupation[i], 1 / (1 + std::exp(-x)), 1e-12) << "p=" << p;
    }
}

TEST(Dynamics, MomentumGrid) {
    auto ps = momentum_grid(Lattice({4}));
    const double pi = std::numbers::pi;
    ASSERT_EQ(ps.size(), 4u);
    EXPECT_DOUBLE_EQ(ps[0][0], 0.0);
    EXPECT_DOUBLE_EQ(ps[1][0], pi / 2);
    EXPECT_DOUBLE_EQ(ps[2][0], pi);
    EXPECT_DOUBLE_EQ(ps[3][0], -pi / 2);
}

TEST(Dynamics, CutoffObservables) {
    const int m = 6;
    FockSpace fs(Lattice({m}));
    const double eps_d = 1.0 / m;
    auto vac = DensityMatrix::pure(basis(fs.dim(), 0), fs.number_sectors());
    EXPECT_EQ(velocity_cutoff_integral(momentum_occupations(vac, fs), 0.3, eps_d), 0.0);
    EXPECT_EQ(nonimplosion_observable(vac, fs.lattice(), 1, eps_d), 0.0);

    // one particle in the k = 0 plane wave
    Eigen::VectorXcd psi = Eigen::VectorXcd::Zero(fs.dim());
    for (int x = 0; x < m; ++x) psi[std::size_t(1) << x] = 1 / std::sqrt(double(m));
    auto one = DensityMatrix::pure(psi, fs.number_sectors());
    EXPECT_NEAR(velocity_cutoff_integral(momentum_occupations(one, fs), 0.3, eps_d), eps_d, 1e-15);
    EXPECT_NEAR(nonimplosion_observable(one, fs.lattice(), 1, eps_d), eps_d, 1e-15);

    // two neighbours: each sees both within 2R, 2 * 2^2
    auto pair = DensityMatrix::pure(basis(fs.dim(), 0b11), fs.number_sectors());
    EXPECT_NEAR(nonimplosion_observable(pair, fs.lattice(), 1, eps_d), 8 * eps_d, 1e-15);
}

TEST(Dynamics, CutoffDiagnosticsOnGibbs) {
    auto model = LatticeModel::build(Lattice({6}), {});
    auto g = gibbs_state(LambdaVec{{0, 0, 0, 0, 1}}, model);
    auto r = evolve(g, model, {0, 1, 2});
    auto d = cutoff_diagnostics(r, model.space, 0.1, 1);
    EXPECT_NEAR(CutoffDiagnostics::growth(d.velocity_integral), 1.0, 1e-12);
    EXPECT_NEAR(CutoffDiagnostics::growth(d.nonimplosion), 1.0, 1e-12);
    EXPECT_EQ(CutoffDiagnostics::growth({0, 0}), 1.0);
    EXPECT_TRUE(std::isinf(CutoffDiagnostics::growth({0, 1})));
    EXPECT_THROW(cutoff_diagnostics(r, model.space, 0.0, 1), PreconditionError);
}

TEST(Dynamics, StationarityProbe) {
    auto model = LatticeModel::build(Lattice({6}), PairPotential::chain({0.4}));
    auto obs = conserved_totals(model);
    for (int x = 0; x < 6; ++x) obs.push_back({"n" + std::to_string(x), model.densities.n[x]});
    std::vector<double> times{0.5, 1, 2, 4};

    auto mixed = DensityMatrix::maximally_mixed(model.sectors());
    EXPECT_LT(stationarity_probe(mixed, model.hamiltonian, obs, times).max_drift, 1e-13);

    LambdaField f = LambdaField::constant(model.lattice(), LambdaVec{{0.5, 0, 0, 0, 1}});
    EXPECT_LT(stationarity_probe(local_gibbs_state(model, f), model.hamiltonian, obs, times).max_drift, 1e-12);
    f.values[2][0] = -0.5;
    EXPECT_GT(stationarity_probe(local_gibbs_state(model, f), model.hamiltonian, obs, times).max_drift, 1e-3);
}

TEST(Dynamics, CompareOnConstantProfileIsAtRest) {
    CompareConfig cfg;
    cfg.lattice = Lattice({6});
    cfg.profile.base = LambdaVec{{-0.4, 0.3, 0, 0, 1.1}};
    cfg.times = {0, 1, 2};
    cfg.refine = 2;
    cfg.test_functions = {TestFunction{{0, 0, 0}, 1, 0, 0}, TestFunction{{1, 0, 0}, 0, 1, 0}};
    auto rep = hydro_compare(cfg);
    ASSERT_EQ(rep.frames.size(), 3u);
    EXPECT_EQ(rep.frames[0].entropy_density, 0.0);
    for (const auto& fr : rep.frames) {
        for (const auto& row : fr.residuals)
            for (double v : row) EXPECT_LT(std::abs(v), 1e-8);
        EXPECT_LT(std::abs(fr.entropy_density), 1e-8);
    }
    EXPECT_LT(rep.evolution.drift("N"), 1e-12);
    auto j = rep.to_json();
    EXPECT_EQ(j["entropy_series"].size(), 3u);
    EXPECT_EQ(j["components"][0], "rho");
}

TEST(Dynamics, PeriodicSmoothingPreservesConstantsAndMean) {
    Lattice lat({8});
    std::vector<double> c(8, 2.5), v{1, 0, 0, 0, 0, 0, 0, 0};
    for (double x : smooth_sites(lat, c, 1.5)) EXPECT_NEAR(x, 2.5, 1e-14);
    auto s = smooth_sites(lat, v, 1.5);
    double sum = 0;
    for (double x : s) sum += x;
    EXPECT_NEAR(sum, 1.0, 1e-14); // symmetric kernel on a ring
    EXPECT_NEAR(s[1], s[7], 1e-15);
}
