#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include <Eigen/Eigenvalues>

#include "qhydro/eos.hpp"
#include "qhydro/gibbs.hpp"

using namespace qhydro;

namespace {

constexpr double pi = std::numbers::pi;

struct ModeSum {
    double psi = 0;
    std::array<double, 5> q{}; // n, p1, p2, p3, h per site
};

/// Free fermions on a periodic box: one-particle exponent
/// lambda0 + lambda.sin k - lambda4 sum_j (1 - cos k_j).
ModeSum free_mode_sum(const std::vector<int>& dims, const LambdaVec& l) {
    ModeSum r;
    std::vector<int> n = dims;
    while (n.size() < 3) n.push_back(1);
    int count = 0;
    for (int a = 0; a < n[0]; ++a)
        for (int b = 0; b < n[1]; ++b)
            for (int c = 0; c < n[2]; ++c) {
                const double k[3] = {2 * pi * a / n[0], 2 * pi * b / n[1], 2 * pi * c / n[2]};
                double x = l[0], e = 0;
                for (int j = 0; j < 3; ++j) {
                    x += l[1 + j] * std::sin(k[j]);
                    e += 1 - std::cos(k[j]);
                }
                x -= l[4] * e;
                const double f = 1 / (1 + std::exp(-x));
                r.psi += std::log1p(std::exp(x));
                r.q[0] += f;
                for (int j = 0; j < 3; ++j) r.q[1 + j] += std::sin(k[j]) * f;
                r.q[4] += e * f;
                ++count;
            }
    r.psi /= count;
    for (auto& v : r.q) v /= count;
    return r;
}

} // namespace

TEST(Gibbs, SingleSiteFermiFactor) {
    auto model = LatticeModel::build(Lattice({1}), {});
    for (double l0 : {-3.0, 0.0, 0.7, 5.0}) {
        LambdaVec l{{l0, 0, 0, 0, 1}};
        auto g = gibbs_state(l, model);
        EXPECT_NEAR(g.expect(model.densities.n[0]), 1 / (1 + std::exp(-l0)), 1e-14);
        EXPECT_NEAR(pressure_finite(l, model), std::log1p(std::exp(l0)), 1e-14);
    }
}

TEST(Gibbs, ValidStateAndTranslationInvariance) {
    auto model = LatticeModel::build(Lattice({6}), PairPotential::chain({0.8}));
    auto g = gibbs_state(LambdaVec{{0.2, 0.3, 0, 0, 1.5}}, model);
    EXPECT_TRUE(g.is_valid(1e-12));
    auto f = expectations(g, model.densities);
    for (int x = 1; x < 6; ++x) EXPECT_LT((f.sites[x] - f.sites[0]).max_abs(), 1e-12);
}

TEST(Gibbs, LowTemperatureSelectsGroundState) {
    // mu = 0.5 between the k = 0 level and the k = +-pi/2 pair
    auto model = LatticeModel::build(Lattice({4}), {});
    const double beta = 200, mu = 0.5;
    DenseOp k = DenseOp(model.hamiltonian.matrix);
    for (int x = 0; x < 4; ++x) k -= mu * DenseOp(model.space.number(x).matrix);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(k);
    Eigen::VectorXcd ground = es.eigenvectors().col(0);
    ASSERT_GT(es.eigenvalues()[1] - es.eigenvalues()[0], 0.4);
    auto g = gibbs_state(make_lambda(beta, mu), model);
    Complex fid = ground.dot(g.matrix().to_dense() * ground);
    EXPECT_GT(fid.real(), 1 - 1e-12);
    EXPECT_NEAR(expectations(g, model.densities).mean()[0], 0.25, 1e-12);
}

TEST(Gibbs, FreePressureMatchesModeSum) {
    for (auto dims : std::vector<std::vector<int>>{{6}, {7}, {3, 3}}) {
        auto model = LatticeModel::build(Lattice(dims), {});
        for (LambdaVec l : {LambdaVec{{0.3, 0.4, 0, 0, 1.2}}, LambdaVec{{-1.0, -0.8, 0.5, 0, 0.6}}}) {
            if (dims.size() == 1) l[2] = 0;
            auto oracle = free_mode_sum(dims, l);
            EXPECT_NEAR(pressure_finite(l, model), oracle.psi, 1e-13);
            auto q = expectations(gibbs_state(l, model), model.densities).mean();
            for (int mu : {0, 1, 4}) EXPECT_NEAR(q[mu], oracle.q[mu], 1e-12) << "component " << mu;
            auto lat = LatticeFreeGas(dims).evaluate(l, 1);
            EXPECT_NEAR(lat.psi, oracle.psi, 1e-13);
            for (int mu : {0, 1, 2, 4}) EXPECT_NEAR(lat.q[mu], oracle.q[mu], 1e-13);
        }
    }
}

TEST(Gibbs, PressureLimitsAndMonotonicity) {
    auto model = LatticeModel::build(Lattice({5}), PairPotential::chain({0.6}));
    EXPECT_LT(pressure_finite(LambdaVec{{-40, 0, 0, 0, 1}}, model), 1e-15);
    double prev = -1;
    for (double l0 = -4; l0 <= 4; l0 += 0.5) {
        double p = pressure_finite(LambdaVec{{l0, 0, 0, 0, 1}}, model);
        EXPECT_GT(p, prev);
        prev = p;
    }
    // reflection symmetry
    EXPECT_NEAR(pressure_finite(LambdaVec{{0.1, 0.7, 0, 0, 1}}, model), pressure_finite(LambdaVec{{0.1, -0.7, 0, 0, 1}}, model),
                1e-13);
}

TEST(Gibbs, RepulsionLowersPressure) {
    auto free = LatticeModel::build(Lattice({6}), {});
    auto rep = LatticeModel::build(Lattice({6}), PairPotential::chain({1.0}));
    for (double l0 : {-1.0, 0.0, 1.5}) {
        LambdaVec l{{l0, 0.2, 0, 0, 1}};
        EXPECT_LT(pressure_finite(l, rep), pressure_finite(l, free));
    }
}

TEST(Gibbs, DualityOnSmallRings) {
    for (auto w : {PairPotential{}, PairPotential::chain({0.5})}) {
        auto model = LatticeModel::build(Lattice({5}), w);
        auto r = duality_check(LambdaVec{{0.4, -0.3, 0, 0, 0.9}}, model, 1e-4);
        EXPECT_LT(r.max_deviation, 1e-7);
    }
    auto model = LatticeModel::build(Lattice({4}), {});
    EXPECT_THROW(duality_check(LambdaVec{{0, 0, 0, 0, 1}}, model, 0.1), PreconditionError);
}

TEST(Gibbs, ConstantLocalGibbsIsGibbs) {
    auto model = LatticeModel::build(Lattice({5}), PairPotential::chain({0.4}));
    LambdaVec l{{0.5, 0.2, 0, 0, 1.3}};
    FourierProfile prof;
    prof.base = l;
    auto a = local_gibbs_state(model, prof.sample(model.lattice()));
    auto b = gibbs_state(l, model);
    EXPECT_LT((a.matrix() - b.matrix()).max_abs(), 1e-14);
}

TEST(Gibbs, TwoPlateauDensities) {
    const int m = 10;
    auto model = LatticeModel::build(Lattice({m}), {});
    LambdaField f;
    for (int x = 0; x < m; ++x) f.values.push_back(LambdaVec{{x < m / 2 ? -1.5 : 1.5, 0, 0, 0, 1}});
    auto occ = expectations(local_gibbs_state(model, f), model.densities);
    LatticeFreeGas bulk({0});
    const double lo = bulk.q_of_lambda(f[2])[0], hi = bulk.q_of_lambda(f[7])[0];
    EXPECT_NEAR(occ.sites[2][0], lo, 0.05 * lo);
    EXPECT_NEAR(occ.sites[7][0], hi, 0.05 * hi);
    EXPECT_GT(hi, lo);
}

TEST(Gibbs, MomentumPerParticleMatchesEos) {
    const int m = 8;
    auto model = LatticeModel::build(Lattice({m}), {});
    LambdaVec l{{-0.5, 0.6, 0, 0, 1.1}};
    auto q = expectations(gibbs_state(l, model), model.densities).mean();
    auto e = LatticeFreeGas({m}).q_of_lambda(l);
    EXPECT_NEAR(q[1] / q[0], e[1] / e[0], 1e-12);
    EXPECT_GT(q[1], 0); // positive lambda1 favours sin k > 0
}

TEST(Gibbs, RequiresPositiveBeta) {
    auto model = LatticeModel::build(Lattice({3}), {});
    EXPECT_THROW(gibbs_state(LambdaVec{{0, 0, 0, 0, 0}}, model), DomainError);
    EXPECT_THROW(pressure_finite(LambdaVec{{0, 0, 0, 0, -1}}, model), DomainError);
}

TEST(Gibbs, FourierProfileSampling) {
    FourierProfile p;
    p.base = LambdaVec{{0.1, 0, 0, 0, 1}};
    p.modes.push_back({0, {1, 0, 0}, 0.0, 0.5, 0.0});
    auto f = p.sample(Lattice({4}));
    // X = x / 4
    EXPECT_NEAR(f[0][0], 0.1, 1e-15);
    EXPECT_NEAR(f[1][0], 0.6, 1e-15);
    EXPECT_NEAR(f[3][0], -0.4, 1e-15);
}
