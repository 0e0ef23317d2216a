#ifndef QHYDRO_FOCK_HPP
#define QHYDRO_FOCK_HPP

#include <array>
#include <bit>
#include <cstdint>
#include <memory>
#include <ostream>
#include <string>
#include <vector>

#include "block_matrix.hpp"
#include "lattice.hpp"

namespace qhydro {

struct FockLimits {
    int max_dense_sites = 14;
    int max_sparse_sites = 20;
};

/// Estimated bytes of a dense state on M sites stored in particle-number blocks.
inline std::size_t dense_state_bytes(int sites) {
    // sum_N C(M,N)^2 = C(2M,M)
    double c = 1;
    for (int k = 1; k <= sites; ++k) c = c * (sites + k) / k;
    return std::size_t(c * sizeof(Complex));
}

/// Operator on the fermion Fock space of a lattice; occupation basis with
/// bit x of the basis index set when site x is occupied.
struct FockOperator {
    SparseOp matrix;
    int sites = 0;
    bool hermitian = false;

    std::size_t dim() const { return std::size_t(matrix.rows()); }
    FockOperator adjoint() const { return {SparseOp(matrix.adjoint()), sites, hermitian}; }
    double hermiticity_defect() const { return max_abs(SparseOp(matrix - SparseOp(matrix.adjoint()))); }
};

inline FockOperator operator*(const FockOperator& a, const FockOperator& b) {
    return {SparseOp(a.matrix * b.matrix), a.sites, false};
}
inline FockOperator operator+(const FockOperator& a, const FockOperator& b) {
    return {SparseOp(a.matrix + b.matrix), a.sites, a.hermitian && b.hermitian};
}
inline FockOperator operator-(const FockOperator& a, const FockOperator& b) {
    return {SparseOp(a.matrix - b.matrix), a.sites, a.hermitian && b.hermitian};
}
inline FockOperator operator*(Complex s, const FockOperator& a) {
    return {SparseOp(s * a.matrix), a.sites, a.hermitian && s.imag() == 0.0};
}
inline FockOperator commutator(const FockOperator& a, const FockOperator& b) {
    return {SparseOp(a.matrix * b.matrix - b.matrix * a.matrix), a.sites, false};
}
inline FockOperator anticommutator(const FockOperator& a, const FockOperator& b) {
    return {SparseOp(a.matrix * b.matrix + b.matrix * a.matrix), a.sites, false};
}

/// Annihilation operators a_x via Jordan-Wigner strings along the site order:
/// a_x |s> = (-1)^{#occupied sites before x} |s - e_x> when x is occupied.
inline std::vector<FockOperator> build_ladder_operators(const Lattice& lat, const FockLimits& limits = {}) {
    const int m = lat.sites();
    if (m > limits.max_sparse_sites)
        throw ResourceError("lattice has " + std::to_string(m) + " sites; the Fock-space guard allows " +
                                std::to_string(limits.max_sparse_sites),
                            std::size_t(m) * (std::size_t(1) << (m - 1)) * (sizeof(Complex) + 2 * sizeof(int)));
    const std::uint64_t dim = std::uint64_t(1) << m;
    std::vector<FockOperator> out;
    out.reserve(m);
    for (int x = 0; x < m; ++x) {
        std::vector<Eigen::Triplet<Complex>> t;
        t.reserve(dim / 2);
        const std::uint64_t bit = std::uint64_t(1) << x;
        for (std::uint64_t s = 0; s < dim; ++s) {
            if (!(s & bit)) continue;
            int before = std::popcount(s & (bit - 1));
            t.emplace_back(int(s ^ bit), int(s), (before & 1) ? -1.0 : 1.0);
        }
        SparseOp a(dim, dim);
        a.setFromTriplets(t.begin(), t.end());
        out.push_back({std::move(a), m, false});
    }
    return out;
}

/// Fock space of a lattice with its ladder operators and particle-number sectors.
class FockSpace {
public:
    explicit FockSpace(Lattice lat, FockLimits limits = {})
        : lattice_(std::move(lat)), limits_(limits), ladders_(build_ladder_operators(lattice_, limits_)) {
        const int m = lattice_.sites();
        std::vector<std::vector<std::uint32_t>> sectors(m + 1);
        for (std::uint32_t s = 0; s < dim(); ++s) sectors[std::popcount(s)].push_back(s);
        sectors_ = Partition::from_blocks(std::move(sectors));
    }

    const Lattice& lattice() const { return lattice_; }
    const FockLimits& limits() const { return limits_; }
    int modes() const { return lattice_.sites(); }
    std::size_t dim() const { return std::size_t(1) << modes(); }
    const FockOperator& annihilator(int x) const { return ladders_[x]; }
    FockOperator creator(int x) const { return ladders_[x].adjoint(); }
    const std::vector<FockOperator>& annihilators() const { return ladders_; }
    const PartitionPtr& number_sectors() const { return sectors_; }

    FockOperator identity() const {
        SparseOp i(dim(), dim());
        i.setIdentity();
        return {std::move(i), modes(), true};
    }
    FockOperator zero() const { return {SparseOp(dim(), dim()), modes(), true}; }

    FockOperator number(int x) const {
        FockOperator n = creator(x) * ladders_[x];
        n.hermitian = true;
        return n;
    }

    /// Throws the resource error for dense work (states, exponentials) beyond the guard.
    void require_dense() const {
        if (modes() > limits_.max_dense_sites)
            throw ResourceError("dense Fock-space work on " + std::to_string(modes()) + " sites exceeds the guard of " +
                                    std::to_string(limits_.max_dense_sites),
                                dense_state_bytes(modes()));
    }

private:
    Lattice lattice_;
    FockLimits limits_;
    std::vector<FockOperator> ladders_;
    PartitionPtr sectors_;
};

/// One kinetic bond term (a+_y - a+_x)(a_y - a_x) / (2 s^2), y = x + e_axis.
inline FockOperator bond_kinetic(const FockSpace& fs, int x, int y) {
    const double s = fs.lattice().spacing();
    SparseOp b = fs.annihilator(y).matrix - fs.annihilator(x).matrix;
    return {SparseOp((0.5 / (s * s)) * SparseOp(b.adjoint()) * b), fs.modes(), true};
}

struct Bond {
    int from;
    int to;
};

/// Nearest-neighbour bonds x -> x + e_j. Axes of extent one carry no bond.
inline std::vector<Bond> lattice_bonds(const Lattice& lat) {
    std::vector<Bond> bonds;
    for (int x = 0; x < lat.sites(); ++x)
        for (int a = 0; a < lat.dimension(); ++a)
            if (lat.extent(a) > 1) bonds.push_back({x, lat.shift(x, a, 1)});
    return bonds;
}

inline FockOperator build_kinetic(const FockSpace& fs) {
    FockOperator h = fs.zero();
    for (const auto& b : lattice_bonds(fs.lattice())) h.matrix += bond_kinetic(fs, b.from, b.to).matrix;
    h.hermitian = true;
    return h;
}

/// V = 1/2 sum_{x != y} W(x - y) n_x n_y; diagonal in the occupation basis.
inline FockOperator build_interaction(const FockSpace& fs, const PairPotential& w) {
    w.check_fits(fs.lattice());
    std::vector<Eigen::Triplet<Complex>> t;
    if (!w.is_zero())
        for (std::uint64_t s = 0; s < fs.dim(); ++s) {
            double e = w.configuration_energy(fs.lattice(), s);
            if (e != 0.0) t.emplace_back(int(s), int(s), e);
        }
    SparseOp v(fs.dim(), fs.dim());
    v.setFromTriplets(t.begin(), t.end());
    return {std::move(v), fs.modes(), true};
}

/// H = H_0 + V with the bond-difference kinetic term.
inline FockOperator build_hamiltonian(const FockSpace& fs, const PairPotential& w) {
    return build_kinetic(fs) + build_interaction(fs, w);
}

/// Local densities u_x = (n_x, p_x^1..d, h_x).
///
/// p_x^j = -(i/2) [a+_x (D_j a)_x - (D_j a+)_x a_x], D_j the centered difference,
/// so a plane wave e^{ikx} carries momentum sin(k)/s. h_x takes half of each
/// kinetic bond touching x plus 1/2 sum_y W(x-y) n_x n_y.
struct LocalDensitySet {
    std::vector<FockOperator> n;
    std::vector<std::vector<FockOperator>> p; // p[axis][site]
    std::vector<FockOperator> h;

    int sites() const { return int(n.size()); }
    int dimension() const { return int(p.size()); }

    /// u^mu_x, or nullptr for momentum components beyond the lattice dimension.
    const FockOperator* density(int mu, int x) const {
        if (mu == 0) return &n[x];
        if (mu == 4) return &h[x];
        if (mu - 1 < dimension()) return &p[mu - 1][x];
        return nullptr;
    }

    FockOperator total(int mu) const {
        FockOperator t{SparseOp(n[0].matrix.rows(), n[0].matrix.cols()), n[0].sites, true};
        for (int x = 0; x < sites(); ++x)
            if (auto d = density(mu, x)) t.matrix += d->matrix;
        return t;
    }
};

inline LocalDensitySet build_local_densities(const FockSpace& fs, const PairPotential& w) {
    const Lattice& lat = fs.lattice();
    const int m = lat.sites(), d = lat.dimension();
    const double s = lat.spacing();
    LocalDensitySet u;
    u.n.reserve(m);
    for (int x = 0; x < m; ++x) u.n.push_back(fs.number(x));

    u.p.assign(d, {});
    for (int a = 0; a < d; ++a)
        for (int x = 0; x < m; ++x) {
            SparseOp da = (0.5 / s) * (fs.annihilator(lat.shift(x, a, 1)).matrix - fs.annihilator(lat.shift(x, a, -1)).matrix);
            SparseOp forward = fs.creator(x).matrix * da;
            SparseOp backward = forward.adjoint();
            u.p[a].push_back({SparseOp(Complex(0, -0.5) * (forward - backward)), m, true});
        }

    w.check_fits(lat);
    for (int x = 0; x < m; ++x) u.h.push_back(fs.zero());
    for (const auto& b : lattice_bonds(lat)) {
        SparseOp half = 0.5 * bond_kinetic(fs, b.from, b.to).matrix;
        u.h[b.from].matrix += half;
        u.h[b.to].matrix += half;
    }
    if (!w.is_zero())
        for (int x = 0; x < m; ++x)
            for (int y = 0; y < m; ++y) {
                if (x == y) continue;
                double wxy = w(lat.displacement(x, y));
                if (wxy != 0.0) u.h[x].matrix += (0.5 * wxy) * SparseOp(u.n[x].matrix * u.n[y].matrix);
            }
    return u;
}

/// Fock-space unitary of a site permutation a_x -> a_{perm[x]}, with the
/// fermionic reordering sign of the occupied modes.
inline FockOperator mode_permutation_operator(const FockSpace& fs, const std::vector<int>& perm) {
    const int m = fs.modes();
    std::vector<Eigen::Triplet<Complex>> t;
    t.reserve(fs.dim());
    for (std::uint64_t s = 0; s < fs.dim(); ++s) {
        // |s> = a+_{x1} ... a+_{xk} |0> with x1 < ... < xk; image is a+_{p(x1)} ... a+_{p(xk)} |0>
        std::vector<int> img;
        std::uint64_t target = 0;
        for (int x = 0; x < m; ++x)
            if (s >> x & 1u) {
                img.push_back(perm[x]);
                target |= std::uint64_t(1) << perm[x];
            }
        int inversions = 0;
        for (std::size_t i = 0; i < img.size(); ++i)
            for (std::size_t j = i + 1; j < img.size(); ++j) inversions += img[i] > img[j];
        t.emplace_back(int(target), int(s), (inversions & 1) ? -1.0 : 1.0);
    }
    SparseOp u(fs.dim(), fs.dim());
    u.setFromTriplets(t.begin(), t.end());
    return {std::move(u), m, false};
}

/// Site permutation of the reflection x_axis -> -x_axis.
inline std::vector<int> reflection_permutation(const Lattice& lat, int axis) {
    std::vector<int> perm(lat.sites());
    for (int x = 0; x < lat.sites(); ++x) {
        auto c = lat.coords(x);
        c[axis] = -c[axis];
        perm[x] = lat.site(c);
    }
    return perm;
}

struct CommutatorScanRow {
    int sites;
    int region;
    int mu;
    int nu;
    double norm;
};

/// Spectral norms of [U^mu, U^nu] for partial sums U^mu = sum_{x < region} u^mu_x
/// on 1D rings, for every (sites, region) pair with region <= sites.
inline std::vector<CommutatorScanRow> commutator_boundary_scan(const std::vector<int>& lattice_sizes,
                                                               const std::vector<int>& region_sizes,
                                                               const std::vector<std::array<int, 2>>& pairs = {{0, 4}},
                                                               const PairPotential& w = {}) {
    std::vector<CommutatorScanRow> rows;
    for (int m : lattice_sizes) {
        if (m > 12) throw PreconditionError("boundary scan is limited to 1D lattices with at most 12 sites");
        FockSpace fs(Lattice({m}));
        auto u = build_local_densities(fs, w);
        for (int region : region_sizes) {
            if (region > m) continue;
            for (auto [mu, nu] : pairs) {
                FockOperator a = fs.zero(), b = fs.zero();
                for (int x = 0; x < region; ++x) {
                    if (auto d = u.density(mu, x)) a.matrix += d->matrix;
                    if (auto d = u.density(nu, x)) b.matrix += d->matrix;
                }
                auto c = BlockMatrix::from_sparse(commutator(a, b).matrix, fs.number_sectors());
                rows.push_back({m, region, mu, nu, normal_norm(c)});
            }
        }
    }
    return rows;
}

/// Coordinate-list export: one "row col re im" line per stored nonzero.
inline void write_coo(std::ostream& os, const FockOperator& op) {
    os.precision(17);
    os << "# row col re im\n";
    for (int col = 0; col < op.matrix.outerSize(); ++col)
        for (SparseOp::InnerIterator it(op.matrix, col); it; ++it)
            if (it.value() != Complex(0))
                os << it.row() << ' ' << it.col() << ' ' << it.value().real() << ' ' << it.value().imag() << '\n';
}

} // namespace qhydro

#endif
