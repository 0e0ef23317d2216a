#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <sstream>

#include <Eigen/Eigenvalues>

#include "qhydro/fock.hpp"
#include "qhydro/gibbs.hpp"

using namespace qhydro;

namespace {

DenseOp dense(const FockOperator& op) { return DenseOp(op.matrix); }

double max_abs(const DenseOp& m) { return m.cwiseAbs().maxCoeff(); }

/// Vector of the occupation basis state with the given bit pattern.
Eigen::VectorXcd basis(std::size_t dim, std::uint64_t s) {
    Eigen::VectorXcd v = Eigen::VectorXcd::Zero(dim);
    v[s] = 1;
    return v;
}

} // namespace

TEST(Fock, SingleModeCar) {
    FockSpace fs(Lattice({1}));
    DenseOp a = dense(fs.annihilator(0));
    Eigen::Matrix2cd expect;
    expect << 0, 1, 0, 0;
    EXPECT_LT(max_abs(a - expect), 1e-15);
    DenseOp ac = a * a.adjoint() + a.adjoint() * a;
    EXPECT_LT(max_abs(ac - DenseOp::Identity(2, 2)), 1e-15);
}

TEST(Fock, CarOnThreeSites) {
    FockSpace fs(Lattice({3}));
    const DenseOp id = DenseOp::Identity(8, 8);
    for (int x = 0; x < 3; ++x)
        for (int y = 0; y < 3; ++y) {
            DenseOp ax = dense(fs.annihilator(x)), ay = dense(fs.annihilator(y));
            EXPECT_LT(max_abs(ax * ay + ay * ax), 1e-14);
            DenseOp mixed = ax * ay.adjoint() + ay.adjoint() * ax;
            EXPECT_LT(max_abs(mixed - (x == y ? id : DenseOp::Zero(8, 8))), 1e-14);
        }
    DenseOp a1 = dense(fs.annihilator(1));
    EXPECT_EQ(max_abs(a1 * a1), 0.0);
}

TEST(Fock, JordanWignerSignOnTwoSites) {
    // a+_0 a+_1 |0> = -a+_1 a+_0 |0>
    FockSpace fs(Lattice({2}));
    Eigen::VectorXcd vac = basis(4, 0);
    Eigen::VectorXcd u = dense(fs.creator(0)) * (dense(fs.creator(1)) * vac);
    Eigen::VectorXcd v = dense(fs.creator(1)) * (dense(fs.creator(0)) * vac);
    EXPECT_LT((u + v).norm(), 1e-15);
    EXPECT_NEAR(u.norm(), 1.0, 1e-15);
}

TEST(Fock, RingOneParticleSpectrum) {
    FockSpace fs(Lattice({4}));
    DenseOp h = dense(build_hamiltonian(fs, {}));
    Eigen::MatrixXcd one(4, 4);
    for (int x = 0; x < 4; ++x)
        for (int y = 0; y < 4; ++y) one(x, y) = h(std::size_t(1) << x, std::size_t(1) << y);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(one);
    // 1 - cos(2 pi m / 4)
    const double expect[] = {0, 1, 1, 2};
    for (int i = 0; i < 4; ++i) EXPECT_NEAR(es.eigenvalues()[i], expect[i], 1e-13);
}

TEST(Fock, HamiltonianConservesNumberAndIsBoundedBelow) {
    Lattice lat({6});
    FockSpace fs(lat);
    auto w = PairPotential::chain({0.5, 0.25});
    FockOperator h = build_hamiltonian(fs, w);
    FockOperator n = fs.zero();
    for (int x = 0; x < 6; ++x) n.matrix += fs.number(x).matrix;
    EXPECT_LT(max_abs(dense(commutator(h, n))), 1e-13);
    EXPECT_LT(h.hermiticity_defect(), 1e-14);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(dense(h), Eigen::EigenvaluesOnly);
    EXPECT_GE(es.eigenvalues().minCoeff(), -1e-12);
    EXPECT_NEAR(es.eigenvalues().minCoeff(), 0.0, 1e-12); // vacuum
}

TEST(Fock, InteractionIsPairSum) {
    Lattice lat({6});
    FockSpace fs(lat);
    auto w = PairPotential::chain({0.7, -0.2});
    DenseOp v = dense(build_interaction(fs, w));
    // sites 0, 1, 3: pairs at distance 1, 3 (minimal image 3), 2
    const std::uint64_t s = 0b1011;
    EXPECT_NEAR(v(s, s).real(), 0.7 + 0.0 - 0.2, 1e-15);
    EXPECT_NEAR(v(0, 0).real(), 0.0, 0.0);
}

TEST(Fock, VacuumDensitiesVanish) {
    auto model = LatticeModel::build(Lattice({4}), PairPotential::chain({0.3}));
    auto vac = DensityMatrix::pure(basis(16, 0), model.sectors());
    auto f = expectations(vac, model.densities);
    for (const auto& q : f.sites) EXPECT_EQ(q.max_abs(), 0.0);
}

TEST(Fock, DensitiesAreHermitianAndSumToTotals) {
    Lattice lat({3, 2});
    FockSpace fs(lat);
    auto u = build_local_densities(fs, {});
    for (int x = 0; x < lat.sites(); ++x)
        for (int mu = 0; mu < 5; ++mu)
            if (auto d = u.density(mu, x)) EXPECT_LT(d->hermiticity_defect(), 1e-15);
    EXPECT_EQ(u.density(3, 0), nullptr);
    DenseOp h = dense(build_kinetic(fs));
    EXPECT_LT(max_abs(dense(u.total(4)) - h), 1e-14);
}

TEST(Fock, PlaneWaveMomentum) {
    const int m = 8;
    FockSpace fs(Lattice({m}));
    auto u = build_local_densities(fs, {});
    for (int j : {1, 2, 3}) {
        const double k = 2 * std::numbers::pi * j / m;
        Eigen::VectorXcd psi = Eigen::VectorXcd::Zero(fs.dim());
        for (int x = 0; x < m; ++x) psi[std::size_t(1) << x] = std::polar(1.0 / std::sqrt(m), k * x);
        for (int x = 0; x < m; ++x) {
            Complex px = psi.dot(dense(u.p[0][x]) * psi);
            EXPECT_NEAR(px.real(), std::sin(k) / m, 1e-14);
            EXPECT_NEAR(px.imag(), 0.0, 1e-14);
        }
    }
}

TEST(Fock, TotalMomentumCommutesWithFreeHamiltonian) {
    FockSpace fs(Lattice({6}));
    auto u = build_local_densities(fs, {});
    FockOperator p = u.total(1);
    EXPECT_LT(max_abs(dense(commutator(p, build_kinetic(fs)))), 1e-13);
}

TEST(Fock, ReflectionFlipsMomentum) {
    Lattice lat({5});
    FockSpace fs(lat);
    auto u = build_local_densities(fs, {});
    DenseOp r = dense(mode_permutation_operator(fs, reflection_permutation(lat, 0)));
    EXPECT_LT(max_abs(r.adjoint() * r - DenseOp::Identity(32, 32)), 1e-15);
    EXPECT_LT(max_abs(r * dense(u.total(1)) * r.adjoint() + dense(u.total(1))), 1e-14);
    EXPECT_LT(max_abs(r * dense(u.total(4)) * r.adjoint() - dense(u.total(4))), 1e-14);
}

TEST(Fock, CommutatorScan) {
    auto rows = commutator_boundary_scan({8}, {3, 6, 8}, {{0, 0}, {0, 4}});
    ASSERT_EQ(rows.size(), 6u);
    double partial[2] = {0, 0};
    int k = 0;
    for (const auto& r : rows) {
        if (r.mu == r.nu) EXPECT_LT(r.norm, 1e-13);
        if (r.mu == 0 && r.nu == 4) {
            if (r.region == 8) EXPECT_LT(r.norm, 1e-12); // [N, H] on the full ring
            else partial[k++] = r.norm;
        }
    }
    ASSERT_EQ(k, 2);
    EXPECT_GT(partial[0], 0.1);
    // two boundary points regardless of the region size
    EXPECT_LT(std::max(partial[0], partial[1]) / std::min(partial[0], partial[1]), 1.5);
}

TEST(Fock, CooExportRoundTrip) {
    FockSpace fs(Lattice({3}));
    FockOperator h = build_hamiltonian(fs, {});
    std::ostringstream os;
    write_coo(os, h);
    std::istringstream is(os.str());
    std::string header;
    std::getline(is, header);
    EXPECT_EQ(header, "# row col re im");
    DenseOp back = DenseOp::Zero(8, 8);
    int row, col;
    double re, im;
    while (is >> row >> col >> re >> im) back(row, col) = Complex(re, im);
    EXPECT_EQ(max_abs(back - dense(h)), 0.0);
}

TEST(Fock, DenseLimitIsEnforced) {
    FockLimits lim;
    lim.max_dense_sites = 6;
    FockSpace fs(Lattice({8}), lim);
    EXPECT_THROW(fs.require_dense(), ResourceError);
}
