#ifndef QHYDRO_VEC5_HPP
#define QHYDRO_VEC5_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>

namespace qhydro {

/// Five-component vector indexed by the conserved-quantity label
/// mu = 0 (particles), 1..3 (momentum), 4 (energy). The tag keeps
/// multipliers and densities from being mixed up.
template <class Tag>
struct Vec5 {
    std::array<double, 5> c{};

    constexpr double& operator[](std::size_t mu) { return c[mu]; }
    constexpr double operator[](std::size_t mu) const { return c[mu]; }

    Vec5& operator+=(const Vec5& o) {
        for (std::size_t i = 0; i < 5; ++i) c[i] += o.c[i];
        return *this;
    }
    Vec5& operator-=(const Vec5& o) {
        for (std::size_t i = 0; i < 5; ++i) c[i] -= o.c[i];
        return *this;
    }
    Vec5& operator*=(double s) {
        for (auto& x : c) x *= s;
        return *this;
    }
    friend Vec5 operator+(Vec5 a, const Vec5& b) { return a += b; }
    friend Vec5 operator-(Vec5 a, const Vec5& b) { return a -= b; }
    friend Vec5 operator*(double s, Vec5 a) { return a *= s; }
    friend Vec5 operator*(Vec5 a, double s) { return a *= s; }
    friend bool operator==(const Vec5&, const Vec5&) = default;

    double max_abs() const {
        double m = 0;
        for (double x : c) m = std::max(m, std::abs(x));
        return m;
    }
};

struct LambdaTag {};
struct ConservedTag {};

/// Lagrange multipliers (beta*mu, beta*alpha^1..3, beta).
using LambdaVec = Vec5<LambdaTag>;
/// Per-volume conserved densities (rho, rho v^1..3, e).
using ConservedVec = Vec5<ConservedTag>;

inline LambdaVec make_lambda(double beta, double mu, std::array<double, 3> alpha = {0, 0, 0}) {
    return LambdaVec{{beta * mu, beta * alpha[0], beta * alpha[1], beta * alpha[2], beta}};
}

/// lambda . q with the energy entering with a minus sign.
inline double pairing(const LambdaVec& l, const ConservedVec& q) {
    return l[0] * q[0] + l[1] * q[1] + l[2] * q[2] + l[3] * q[3] - l[4] * q[4];
}

inline double kinetic_energy_density(const ConservedVec& q) {
    return 0.5 * (q[1] * q[1] + q[2] * q[2] + q[3] * q[3]) / q[0];
}

} // namespace qhydro

#endif
