#ifndef QHYDRO_GIBBS_HPP
#define QHYDRO_GIBBS_HPP

#include <array>
#include <cmath>
#include <functional>
#include <numbers>
#include <ostream>
#include <vector>

#include "fock.hpp"
#include "vec5.hpp"

namespace qhydro {

/// A lattice system with everything needed for statistical mechanics on it.
struct LatticeModel {
    FockSpace space;
    PairPotential potential;
    FockOperator hamiltonian;
    LocalDensitySet densities;

    static LatticeModel build(const Lattice& lat, const PairPotential& w, const FockLimits& limits = {}) {
        FockSpace fs(lat, limits);
        auto h = build_hamiltonian(fs, w);
        auto u = build_local_densities(fs, w);
        return LatticeModel{std::move(fs), w, std::move(h), std::move(u)};
    }

    const Lattice& lattice() const { return space.lattice(); }
    int sites() const { return space.modes(); }
    const PartitionPtr& sectors() const { return space.number_sectors(); }
    BlockMatrix hamiltonian_blocks() const { return BlockMatrix::from_sparse(hamiltonian.matrix, sectors()); }
};

/// Site-valued multipliers lambda(eps x) on a lattice.
struct LambdaField {
    std::vector<LambdaVec> values;

    static LambdaField constant(const Lattice& lat, const LambdaVec& l) {
        return LambdaField{std::vector<LambdaVec>(lat.sites(), l)};
    }
    const LambdaVec& operator[](int x) const { return values[x]; }
    int sites() const { return int(values.size()); }
};

/// Smooth multiplier profile on the unit torus:
/// lambda^mu(X, T) = base^mu + sum_modes [c cos(2 pi k.X - w T) + s sin(2 pi k.X - w T)].
struct FourierProfile {
    struct Mode {
        int component = 0;
        std::array<int, 3> wavevector{1, 0, 0};
        double cos_coeff = 0;
        double sin_coeff = 0;
        double omega = 0;
    };
    LambdaVec base;
    std::vector<Mode> modes;

    LambdaVec operator()(const std::array<double, 3>& X, double T = 0) const {
        LambdaVec l = base;
        for (const auto& m : modes) {
            double phase = 2 * std::numbers::pi * (m.wavevector[0] * X[0] + m.wavevector[1] * X[1] + m.wavevector[2] * X[2]) -
                           m.omega * T;
            l[m.component] += m.cos_coeff * std::cos(phase) + m.sin_coeff * std::sin(phase);
        }
        return l;
    }

    /// Samples the profile at X = eps x for every site.
    LambdaField sample(const Lattice& lat, double T = 0) const {
        LambdaField f;
        f.values.reserve(lat.sites());
        for (int x = 0; x < lat.sites(); ++x) f.values.push_back((*this)(lat.macro_position(x), T));
        return f;
    }
};

/// Positive semidefinite unit-trace operator stored in blocks.
class DensityMatrix {
public:
    DensityMatrix() = default;
    explicit DensityMatrix(BlockMatrix m) : m_(std::move(m)) {}

    const BlockMatrix& matrix() const { return m_; }
    const PartitionPtr& partition() const { return m_.partition(); }
    std::size_t dim() const { return m_.dim(); }

    double expect(const SparseOp& op) const { return m_.trace_product(op).real(); }
    Complex expect_complex(const SparseOp& op) const { return m_.trace_product(op); }
    double expect(const FockOperator& op) const { return expect(op.matrix); }

    std::vector<double> eigenvalues() const { return eigh(m_, false).all_values(); }

    /// Hermiticity, eigenvalue floor and trace within `tol`.
    bool is_valid(double tol = 1e-12) const {
        if (m_.hermiticity_defect() > tol) return false;
        if (std::abs(m_.trace() - Complex(1)) > tol) return false;
        return eigh(m_, false).min_value() >= -tol;
    }

    DensityMatrix regroup(const PartitionPtr& p) const { return DensityMatrix(m_.regroup(p)); }
    DensityMatrix to_full() const { return DensityMatrix(m_.to_full()); }

    static DensityMatrix pure(const Eigen::VectorXcd& psi, PartitionPtr part) {
        DenseOp d = psi * psi.adjoint() / psi.squaredNorm();
        return DensityMatrix(BlockMatrix::from_dense(d, std::move(part)));
    }

    static DensityMatrix maximally_mixed(PartitionPtr part) {
        BlockMatrix m = BlockMatrix::identity(part);
        m *= Complex(1.0 / double(part->dim()));
        return DensityMatrix(std::move(m));
    }

private:
    BlockMatrix m_;
};

/// exp(K) / Tr exp(K) together with log Tr exp(K).
struct ExponentialState {
    DensityMatrix state;
    double log_partition = 0;
};

inline ExponentialState exponential_state(const BlockMatrix& exponent) {
    auto spec = eigh(exponent);
    const double log_z = log_trace_exp(spec);
    BlockMatrix rho = spec.apply([&](double e) { return std::exp(e - log_z); });
    return {DensityMatrix(std::move(rho)), log_z};
}

/// K = sum_x lambda(eps x) . u_x = sum_x [lambda^0 n_x + lambda^j p^j_x - lambda^4 h_x].
inline SparseOp exponent_operator(const LatticeModel& model, const LambdaField& field) {
    if (field.sites() != model.sites()) throw PreconditionError("lambda field does not match the lattice");
    SparseOp k(model.space.dim(), model.space.dim());
    const auto& u = model.densities;
    for (int x = 0; x < model.sites(); ++x) {
        const LambdaVec& l = field[x];
        for (int mu = 0; mu < 5; ++mu) {
            const FockOperator* d = u.density(mu, x);
            if (!d || l[mu] == 0.0) continue;
            double coef = mu == 4 ? -l[mu] : l[mu];
            k += coef * d->matrix;
        }
    }
    return k;
}

inline SparseOp exponent_operator(const LatticeModel& model, const LambdaVec& l) {
    return exponent_operator(model, LambdaField::constant(model.lattice(), l));
}

inline void require_positive_beta(const LambdaField& f) {
    for (const auto& l : f.values)
        if (!(l[4] > 0)) throw DomainError("lambda4 (inverse temperature) must be positive");
}

/// Local Gibbs state exp(sum_x lambda(eps x) . u_x) / c.
inline ExponentialState local_gibbs(const LatticeModel& model, const LambdaField& field) {
    require_positive_beta(field);
    model.space.require_dense();
    return exponential_state(BlockMatrix::from_sparse(exponent_operator(model, field), model.sectors()));
}

inline DensityMatrix local_gibbs_state(const LatticeModel& model, const LambdaField& field) {
    return local_gibbs(model, field).state;
}

/// Translation-invariant Gibbs state exp(-beta(H - alpha.P - mu N)) / Z.
inline DensityMatrix gibbs_state(const LambdaVec& l, const LatticeModel& model) {
    return local_gibbs_state(model, LambdaField::constant(model.lattice(), l));
}

/// |Lambda|^{-1} log Tr exp(sum_x lambda . u_x), volume counted in sites.
inline double pressure_finite(const LambdaVec& l, const LatticeModel& model) {
    LambdaField f = LambdaField::constant(model.lattice(), l);
    require_positive_beta(f);
    model.space.require_dense();
    auto k = BlockMatrix::from_sparse(exponent_operator(model, f), model.sectors());
    return log_trace_exp(eigh(k, false)) / model.sites();
}

/// Site expectations <u^mu_x> of a state.
struct MicroField {
    std::vector<ConservedVec> sites;

    ConservedVec mean() const {
        ConservedVec m;
        for (const auto& q : sites) m += q;
        return (1.0 / double(sites.size())) * m;
    }
};

inline MicroField expectations(const DensityMatrix& state, const LocalDensitySet& u, double hermitian_tol = 1e-10) {
    if (state.matrix().hermiticity_defect() > hermitian_tol)
        throw PreconditionError("expectations need a hermitian state");
    MicroField f;
    f.sites.resize(u.sites());
    for (int x = 0; x < u.sites(); ++x)
        for (int mu = 0; mu < 5; ++mu)
            if (auto d = u.density(mu, x)) f.sites[x][mu] = state.expect(d->matrix);
    return f;
}

/// Per-site gradient of the pressure: dpsi/dlambda^mu = omega(u^mu), dpsi/dlambda^4 = -omega(u^4).
inline std::array<double, 5> pressure_gradient_from_state(const DensityMatrix& state, const LocalDensitySet& u) {
    ConservedVec q = expectations(state, u).mean();
    return {q[0], q[1], q[2], q[3], -q[4]};
}

struct DualityReport {
    std::array<double, 5> finite_difference{};
    std::array<double, 5> expectation{};
    std::array<double, 5> deviation{};
    double max_deviation = 0;
};

/// Compares centered differences of pressure_finite against Gibbs expectations.
inline DualityReport duality_check(const LambdaVec& l, const LatticeModel& model, double fd_step) {
    if (fd_step < 1e-6 || fd_step > 1e-2) throw PreconditionError("fd_step must lie in [1e-6, 1e-2]");
    DualityReport r;
    r.expectation = pressure_gradient_from_state(gibbs_state(l, model), model.densities);
    for (int mu = 0; mu < 5; ++mu) {
        if (mu >= 1 && mu <= 3 && mu > model.lattice().dimension()) {
            r.finite_difference[mu] = 0; // no momentum operator along this axis
        } else {
            LambdaVec up = l, down = l;
            up[mu] += fd_step;
            down[mu] -= fd_step;
            r.finite_difference[mu] = (pressure_finite(up, model) - pressure_finite(down, model)) / (2 * fd_step);
        }
        r.deviation[mu] = std::abs(r.finite_difference[mu] - r.expectation[mu]);
        r.max_deviation = std::max(r.max_deviation, r.deviation[mu]);
    }
    return r;
}

/// Occupation table "site,n,p1..pd,h".
inline void write_occupation_csv(std::ostream& os, const MicroField& f, int dimension) {
    os.precision(17);
    os << "site,n";
    for (int a = 0; a < dimension; ++a) os << ",p" << a + 1;
    os << ",h\n";
    for (std::size_t x = 0; x < f.sites.size(); ++x) {
        os << x << ',' << f.sites[x][0];
        for (int a = 0; a < dimension; ++a) os << ',' << f.sites[x][1 + a];
        os << ',' << f.sites[x][4] << '\n';
    }
}

} // namespace qhydro

#endif
