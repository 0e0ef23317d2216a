#ifndef QHYDRO_ENTROPY_HPP
#define QHYDRO_ENTROPY_HPP

#include <cmath>
#include <functional>
#include <limits>
#include <string>

#include <nlohmann/json.hpp>

#include "evolution.hpp"
#include "gibbs.hpp"

namespace qhydro {

struct EntropyOptions {
    /// Eigenvalues below this count as the numerical kernel.
    double kernel_threshold = 1e-12;
};

struct EntropyReport {
    double value = 0;          // +infinity when kernel_violation
    bool kernel_violation = false;
    double density = 0;        // eps^d * value

    bool is_infinite() const { return kernel_violation; }

    nlohmann::json to_json() const {
        nlohmann::json j;
        if (kernel_violation) {
            j["S"] = "inf";
            j["density"] = "inf";
        } else {
            j["S"] = value;
            j["density"] = density;
        }
        j["kernel_violation"] = kernel_violation;
        return j;
    }
};

/// Tr gamma log gamma on the support of gamma.
inline double trace_x_log_x(const BlockSpectrum& s) {
    double t = 0;
    for (const auto& v : s.values)
        for (Eigen::Index i = 0; i < v.size(); ++i)
            if (v[i] > 0) t += v[i] * std::log(v[i]);
    return t;
}

inline double von_neumann_entropy(const DensityMatrix& g) { return -trace_x_log_x(eigh(g.matrix(), false)); }

namespace detail {

inline void common_partition(DensityMatrix& a, DensityMatrix& b) {
    if (a.dim() != b.dim()) throw PreconditionError("states have different dimensions");
    if (!same_partition(a.partition(), b.partition())) {
        a = a.to_full();
        b = b.to_full();
    }
}

} // namespace detail

/// S(gamma|omega) = Tr gamma (log gamma - log omega), or +infinity when
/// gamma has weight above the threshold on the numerical kernel of omega.
/// The cross term uses Tr gamma log omega = sum_ij |<g_i|w_j>|^2 g_i log w_j.
inline EntropyReport relative_entropy(DensityMatrix gamma, DensityMatrix omega, const EntropyOptions& opt = {}) {
    detail::common_partition(gamma, omega);
    auto gs = eigh(gamma.matrix());
    auto ws = eigh(omega.matrix());
    const double tau = opt.kernel_threshold;
    EntropyReport r;
    double cross = 0;
    for (std::size_t k = 0; k < gs.values.size(); ++k) {
        const auto& gv = gs.values[k];
        const auto& wv = ws.values[k];
        if (gv.size() == 0) continue;
        DenseOp overlap = ws.vectors[k].adjoint() * gs.vectors[k]; // <w_j|g_i>
        Eigen::MatrixXd weight = overlap.cwiseAbs2();
        for (Eigen::Index j = 0; j < wv.size(); ++j) {
            double gamma_weight = 0;
            for (Eigen::Index i = 0; i < gv.size(); ++i)
                if (gv[i] > 0) gamma_weight += weight(j, i) * gv[i];
            if (wv[j] < tau) {
                if (gamma_weight > tau) r.kernel_violation = true;
                continue;
            }
            cross += gamma_weight * std::log(wv[j]);
        }
    }
    if (r.kernel_violation) {
        r.value = r.density = std::numeric_limits<double>::infinity();
        return r;
    }
    r.value = trace_x_log_x(gs) - cross;
    r.density = r.value;
    return r;
}

/// Scales the report by eps^d (the whole finite box plays the role of Lambda_eps).
inline EntropyReport with_density(EntropyReport r, double eps, int dimension) {
    if (!r.kernel_violation) r.density = std::pow(eps, dimension) * r.value;
    return r;
}

/// S(gamma | exp(K)/Z) using log omega = K - log Z exactly. `gamma_x_log_gamma`
/// is Tr gamma log gamma, which is invariant under unitary evolution.
inline double relative_entropy_to_exponential(const DensityMatrix& gamma, double gamma_x_log_gamma, const SparseOp& exponent,
                                              double log_partition) {
    return gamma_x_log_gamma - gamma.expect(exponent) + log_partition;
}

namespace detail {

inline BlockMatrix log_of_positive(const DensityMatrix& omega, double floor) {
    auto s = eigh(omega.matrix());
    if (s.min_value() <= floor) throw PreconditionError("omega must be strictly positive (ker omega = {0})");
    return s.apply([](double x) { return std::log(x); });
}

} // namespace detail

/// RHS - LHS of gamma(h) <= delta^{-1} log Tr e^{delta h + log omega} + delta^{-1} S(gamma|omega).
inline double entropy_inequality_margin(DensityMatrix gamma, DensityMatrix omega, const FockOperator& h, double delta,
                                        double positivity_floor = 1e-12) {
    if (!(delta > 0)) throw PreconditionError("delta must be positive");
    if (!h.hermitian && h.hermiticity_defect() > 1e-12) throw PreconditionError("h must be hermitian");
    detail::common_partition(gamma, omega);
    BlockMatrix log_omega = detail::log_of_positive(omega, positivity_floor);
    BlockMatrix hb;
    try {
        hb = BlockMatrix::from_sparse(h.matrix, omega.partition());
    } catch (const PreconditionError&) {
        gamma = gamma.to_full();
        omega = omega.to_full();
        log_omega = log_omega.to_full();
        hb = BlockMatrix::from_sparse(h.matrix, omega.partition());
    }
    BlockMatrix x = Complex(delta) * hb + log_omega;
    double log_tr = log_trace_exp(eigh(x, false));
    auto s = relative_entropy(gamma, omega);
    double lhs = gamma.expect(h.matrix);
    return (log_tr + s.value) / delta - lhs;
}

/// Family t -> exponent K_t of a time-dependent local Gibbs state exp(K_t)/c(t).
using ExponentFamily = std::function<SparseOp(double)>;

struct EntropyDerivativeCheck {
    double finite_difference = 0; // centered difference of S(gamma_t|omega_t)
    double identity = 0;          // -Tr gamma_t (i[H, log omega_t] + d/dt log omega_t)
    double residual = 0;
};

/// Checks dS(gamma_t|omega_t)/dt = -Tr gamma_t (i[H, log omega_t] + d/dt log omega_t)
/// at time t, with gamma_t the exact evolution of gamma0 and omega_t = exp(K_t)/c(t).
/// Since log omega_t = K_t - log c(t), the time derivative is
/// dK/dt - omega_t(dK/dt), with dK/dt from centered differences.
inline EntropyDerivativeCheck entropy_derivative_check(const DensityMatrix& gamma0, const ExponentFamily& family,
                                                       const FockOperator& hamiltonian, double t, double dt) {
    DensityMatrix g0 = gamma0;
    auto h_blocks = BlockMatrix::from_sparse(hamiltonian.matrix, g0.partition());
    Propagator prop(h_blocks);
    auto orbit = prop.orbit(g0);
    auto omega_at = [&](double s) {
        auto st = exponential_state(BlockMatrix::from_sparse(family(s), g0.partition()));
        if (eigh(st.state.matrix(), false).min_value() <= 0) throw PreconditionError("omega_t must be strictly positive");
        return st;
    };
    auto entropy_at = [&](double s) { return relative_entropy(orbit.state_at(s), omega_at(s).state).value; };

    EntropyDerivativeCheck r;
    r.finite_difference = (entropy_at(t + dt) - entropy_at(t - dt)) / (2 * dt);

    DensityMatrix gt = orbit.state_at(t);
    SparseOp k = family(t);
    SparseOp dk = (1.0 / (2 * dt)) * SparseOp(family(t + dt) - family(t - dt));
    SparseOp hk = hamiltonian.matrix * k;
    SparseOp kh = k * hamiltonian.matrix;
    SparseOp ic = Complex(0, 1) * SparseOp(hk - kh);
    auto omega_t = omega_at(t);
    r.identity = -gt.expect(ic) - gt.expect(dk) + omega_t.state.expect(dk);
    r.residual = std::abs(r.finite_difference - r.identity);
    return r;
}

} // namespace qhydro

#endif
