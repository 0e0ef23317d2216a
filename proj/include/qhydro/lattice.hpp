#ifndef QHYDRO_LATTICE_HPP
#define QHYDRO_LATTICE_HPP

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <numeric>
#include <string>
#include <vector>

#include "errors.hpp"

namespace qhydro {

/// Periodic hypercubic lattice (torus) in 1 to 3 dimensions.
///
/// Sites are enumerated row-major: the last axis varies fastest, so in 2D
/// site = x0 * dims[1] + x1. The Jordan-Wigner strings follow this order.
class Lattice {
public:
    Lattice() : Lattice(std::vector<int>{1}) {}
    explicit Lattice(std::vector<int> dims, double spacing = 1.0) : dims_(std::move(dims)), spacing_(spacing) {
        if (dims_.empty() || dims_.size() > 3) throw ConfigError("/lattice/dims", "dimension must be 1, 2 or 3");
        for (int n : dims_)
            if (n < 1) throw ConfigError("/lattice/dims", "every axis needs at least one site");
        if (!(spacing_ > 0)) throw ConfigError("/lattice/spacing", "spacing must be positive");
        sites_ = std::accumulate(dims_.begin(), dims_.end(), 1, std::multiplies<>());
    }

    int dimension() const { return static_cast<int>(dims_.size()); }
    int sites() const { return sites_; }
    int extent(int axis) const { return dims_[axis]; }
    const std::vector<int>& dims() const { return dims_; }
    double spacing() const { return spacing_; }

    std::array<int, 3> coords(int site) const {
        std::array<int, 3> c{0, 0, 0};
        for (int a = dimension() - 1; a >= 0; --a) {
            c[a] = site % dims_[a];
            site /= dims_[a];
        }
        return c;
    }

    int site(const std::array<int, 3>& c) const {
        int s = 0;
        for (int a = 0; a < dimension(); ++a) s = s * dims_[a] + wrap(c[a], dims_[a]);
        return s;
    }

    /// Site reached from `site` by `step` lattice units along `axis`.
    int shift(int site, int axis, int step) const {
        auto c = coords(site);
        c[axis] += step;
        return this->site(c);
    }

    /// Minimal-image displacement to - from, each component in (-n/2, n/2].
    std::array<int, 3> displacement(int from, int to) const {
        auto a = coords(from), b = coords(to);
        std::array<int, 3> d{0, 0, 0};
        for (int ax = 0; ax < dimension(); ++ax) {
            int n = dims_[ax];
            int r = wrap(b[ax] - a[ax], n);
            if (2 * r > n) r -= n;
            d[ax] = r;
        }
        return d;
    }

    double distance(int from, int to) const {
        auto d = displacement(from, to);
        double s = 0;
        for (int v : d) s += double(v) * v;
        return std::sqrt(s) * spacing_;
    }

    /// Macroscopic coordinate X = eps * x of a site on the unit torus (eps = 1/extent per axis).
    std::array<double, 3> macro_position(int site) const {
        auto c = coords(site);
        std::array<double, 3> X{0, 0, 0};
        for (int a = 0; a < dimension(); ++a) X[a] = double(c[a]) / dims_[a];
        return X;
    }

    friend bool operator==(const Lattice& a, const Lattice& b) {
        return a.dims_ == b.dims_ && a.spacing_ == b.spacing_;
    }

    static int wrap(int v, int n) { return ((v % n) + n) % n; }

private:
    std::vector<int> dims_;
    double spacing_;
    int sites_ = 1;
};

/// Pair potential on integer displacement vectors, symmetric under every axis reflection.
class PairPotential {
public:
    using Displacement = std::array<int, 3>;

    PairPotential() = default;

    /// Entries are symmetrized over all axis reflections. Conflicting values
    /// for reflected displacements, or entries beyond `range`, are rejected.
    PairPotential(const std::map<Displacement, double>& entries, int range) : range_(range) {
        if (range < 0) throw ConfigError("/lattice/range", "range must be nonnegative");
        for (const auto& [r, w] : entries) {
            if (r == Displacement{0, 0, 0}) continue; // self term is excluded on a lattice
            double norm2 = 0;
            for (int v : r) norm2 += double(v) * v;
            if (std::sqrt(norm2) > range_ + 1e-12 && w != 0.0)
                throw ConfigError("/lattice/W", "entry beyond the declared range");
            for (int mask = 0; mask < 8; ++mask) {
                Displacement m = r;
                for (int a = 0; a < 3; ++a)
                    if (mask & (1 << a)) m[a] = -m[a];
                auto it = values_.find(m);
                if (it != values_.end() && it->second != w)
                    throw ConfigError("/lattice/W", "values break reflection symmetry");
                values_[m] = w;
            }
        }
    }

    /// Convenience for 1D: W(r) for r = 1..values.size().
    static PairPotential chain(const std::vector<double>& values) {
        std::map<Displacement, double> e;
        for (std::size_t i = 0; i < values.size(); ++i) e[{int(i) + 1, 0, 0}] = values[i];
        return PairPotential(e, int(values.size()));
    }

    double operator()(const Displacement& r) const {
        auto it = values_.find(r);
        return it == values_.end() ? 0.0 : it->second;
    }

    int range() const { return range_; }
    bool is_zero() const {
        for (const auto& [r, w] : values_)
            if (w != 0.0) return false;
        return true;
    }
    const std::map<Displacement, double>& values() const { return values_; }

    /// Throws unless every axis with a nonzero coupling is long enough for
    /// the minimal image of each displacement to be unique.
    void check_fits(const Lattice& lat) const {
        if (is_zero()) return;
        for (int a = 0; a < lat.dimension(); ++a)
            if (2 * range_ >= lat.extent(a))
                throw ConfigError("/lattice/range", "interaction range must be below half the smallest lattice dimension");
    }

    /// Sum over unordered pairs of occupied sites of W(x_i - x_j).
    double configuration_energy(const Lattice& lat, std::uint64_t occupation) const {
        double e = 0;
        const int m = lat.sites();
        for (int i = 0; i < m; ++i) {
            if (!(occupation >> i & 1u)) continue;
            for (int j = i + 1; j < m; ++j)
                if (occupation >> j & 1u) e += (*this)(lat.displacement(i, j));
        }
        return e;
    }

private:
    std::map<Displacement, double> values_;
    int range_ = 0;
};

/// Smallest B >= 0 with sum_{i<j} W(x_i - x_j) >= -B N over every occupation
/// pattern of the lattice, found by enumeration.
inline double stability_constant(const Lattice& lat, const PairPotential& w, int max_sites = 12) {
    if (lat.sites() > max_sites)
        throw ResourceError("stability constant enumeration needs 2^M patterns; supply B instead",
                            (std::size_t(1) << lat.sites()) * sizeof(double));
    double b = 0;
    const std::uint64_t n = std::uint64_t(1) << lat.sites();
    for (std::uint64_t s = 1; s < n; ++s) {
        int count = __builtin_popcountll(s);
        b = std::max(b, -w.configuration_energy(lat, s) / count);
    }
    return b;
}

} // namespace qhydro

#endif
