#ifndef QHYDRO_FLUX_HPP
#define QHYDRO_FLUX_HPP

#include <algorithm>
#include <cmath>
#include <vector>

#include <Eigen/Dense>

#include "errors.hpp"
#include "vec5.hpp"

namespace qhydro {

/// Flux row A^k_i(q), k = 0..4, of the Euler system along axis i (0-based).
/// A^0_i = q^i, A^k_i = delta_ik P + q_k q_i / q_0, A^4_i = q^i (q_4 + P) / q_0.
inline ConservedVec flux_row(const ConservedVec& q, double p, int axis) {
    const double qi = q[1 + axis];
    const double vi = qi / q[0];
    ConservedVec a;
    a[0] = qi;
    for (int k = 1; k <= 3; ++k) a[k] = q[k] * vi;
    a[1 + axis] += p;
    a[4] = vi * (q[4] + p);
    return a;
}

struct CharacteristicSpeeds {
    std::vector<double> speeds; // real parts, ascending
    double max_imag = 0;
    bool hyperbolic = true;

    double max_speed() const { return std::max(std::abs(speeds.front()), std::abs(speeds.back())); }
    /// Half the spread between the outermost speeds (c for a simple fluid).
    double sound() const { return 0.5 * (speeds.back() - speeds.front()); }
};

/// Eigenvalues of the flux Jacobian dA_axis/dq over the listed components,
/// by centered differences of `pressure`. Complex parts above `hyperbolic_tol`
/// (relative to the largest speed) mark the state as non-hyperbolic.
template <class Pressure>
CharacteristicSpeeds characteristic_speeds(const ConservedVec& q, const Pressure& pressure, const std::vector<int>& comps,
                                           int axis, double rel_step = 1e-5, double hyperbolic_tol = 1e-6) {
    const int n = int(comps.size());
    Eigen::MatrixXd jac(n, n);
    double scale = 0;
    for (int c : comps) scale = std::max(scale, std::abs(q[c]));
    for (int l = 0; l < n; ++l) {
        const double h = rel_step * std::max(std::abs(q[comps[l]]), 1e-3 * scale);
        ConservedVec up = q, dn = q;
        up[comps[l]] += h;
        dn[comps[l]] -= h;
        ConservedVec fu = flux_row(up, pressure(up), axis), fd = flux_row(dn, pressure(dn), axis);
        for (int k = 0; k < n; ++k) jac(k, l) = (fu[comps[k]] - fd[comps[k]]) / (2 * h);
    }
    Eigen::EigenSolver<Eigen::MatrixXd> es(jac, false);
    CharacteristicSpeeds s;
    double top = 0;
    for (int i = 0; i < n; ++i) {
        s.speeds.push_back(es.eigenvalues()[i].real());
        s.max_imag = std::max(s.max_imag, std::abs(es.eigenvalues()[i].imag()));
        top = std::max(top, std::abs(es.eigenvalues()[i].real()));
    }
    std::sort(s.speeds.begin(), s.speeds.end());
    s.hyperbolic = s.max_imag <= hyperbolic_tol * std::max(1.0, top);
    return s;
}

} // namespace qhydro

#endif
