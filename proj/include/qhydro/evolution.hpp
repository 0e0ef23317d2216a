#ifndef QHYDRO_EVOLUTION_HPP
#define QHYDRO_EVOLUTION_HPP

#include <cmath>
#include <memory>

#include "gibbs.hpp"

namespace qhydro {

/// Exact propagation gamma_t = e^{-iHt} gamma_0 e^{iHt} from one
/// eigendecomposition of H.
class Propagator {
public:
    explicit Propagator(const BlockMatrix& hamiltonian) : h_(hamiltonian), spec_(eigh(hamiltonian)) {
        if (hamiltonian.hermiticity_defect() > 1e-12) throw PreconditionError("Hamiltonian must be hermitian");
    }

    const BlockSpectrum& spectrum() const { return spec_; }
    const PartitionPtr& partition() const { return spec_.partition; }

    /// Orbit of one initial state; precomputes gamma_0 in the energy basis.
    /// Holds a pointer to the propagator, which must outlive it.
    class Orbit {
    public:
        DensityMatrix state_at(double t) const {
            const auto& s = prop_->spec_;
            BlockMatrix out(s.partition);
            for (std::size_t k = 0; k < s.values.size(); ++k) {
                const auto n = s.values[k].size();
                if (n == 0) continue;
                Eigen::VectorXcd ph(n);
                for (Eigen::Index i = 0; i < n; ++i) ph[i] = std::polar(1.0, -s.values[k][i] * t);
                DenseOp x = ph.asDiagonal() * rotated_[k] * ph.conjugate().asDiagonal();
                DenseOp tmp = s.vectors[k] * x;
                out.block(k).noalias() = tmp * s.vectors[k].adjoint();
            }
            return DensityMatrix(std::move(out));
        }

    private:
        friend class Propagator;
        const Propagator* prop_ = nullptr;
        std::vector<DenseOp> rotated_;
    };

    /// The initial state must live on the propagator's partition (see for_state).
    Orbit orbit(const DensityMatrix& gamma0) const {
        if (!same_partition(gamma0.partition(), spec_.partition))
            throw PreconditionError("initial state and Hamiltonian use different partitions");
        Orbit o;
        o.prop_ = this;
        o.rotated_.resize(spec_.values.size());
        for (std::size_t k = 0; k < spec_.values.size(); ++k) {
            if (spec_.values[k].size() == 0) continue;
            o.rotated_[k] = spec_.vectors[k].adjoint() * gamma0.matrix().block(k) * spec_.vectors[k];
        }
        return o;
    }

    DensityMatrix evolve(const DensityMatrix& gamma0, double t) const { return orbit(gamma0).state_at(t); }

    /// Propagator on the partition of `gamma0`, falling back to the full basis
    /// when the state does not respect the blocks of H.
    static Propagator for_state(const BlockMatrix& hamiltonian, DensityMatrix& gamma0) {
        if (same_partition(hamiltonian.partition(), gamma0.partition())) return Propagator(hamiltonian);
        try {
            return Propagator(hamiltonian.regroup(gamma0.partition()));
        } catch (const PreconditionError&) {
            gamma0 = gamma0.to_full();
            return Propagator(hamiltonian.to_full());
        }
    }

    const BlockMatrix& hamiltonian() const { return h_; }

private:
    BlockMatrix h_;
    BlockSpectrum spec_;
};

} // namespace qhydro

#endif
