#ifndef QHYDRO_EOS_HPP
#define QHYDRO_EOS_HPP

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <memory>
#include <numbers>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/tools/roots.hpp>
#include <boost/math/tools/toms748_solve.hpp>
#include <nlohmann/json.hpp>

#include "errors.hpp"
#include "flux.hpp"
#include "gibbs.hpp"
#include "parallel.hpp"
#include "spline.hpp"
#include "vec5.hpp"

namespace qhydro {

using Mat5 = Eigen::Matrix<double, 5, 5>;

namespace detail {

inline double softplus(double x) { return x > 0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }
inline double logistic(double x) { return x > 0 ? 1 / (1 + std::exp(-x)) : std::exp(x) / (1 + std::exp(x)); }
/// sigma(x)(1 - sigma(x)) without cancellation.
inline double logistic_slope(double x) {
    const double e = std::exp(-std::abs(x));
    return e / ((1 + e) * (1 + e));
}

} // namespace detail

/// psi, its gradient expressed as q (so q4 = -dpsi/dlambda4) and optionally its Hessian.
struct EosPoint {
    double psi = 0;
    ConservedVec q;
    Mat5 hessian = Mat5::Zero();
};

/// Declared one-phase rectangle in (rho, internal energy density e - rho v^2/2).
struct OnePhaseBox {
    double rho_min = 0, rho_max = std::numeric_limits<double>::infinity();
    double e_min = 0, e_max = std::numeric_limits<double>::infinity();

    bool contains(const ConservedVec& q) const {
        const double ei = q[4] - kinetic_energy_density(q);
        return q[0] >= rho_min && q[0] <= rho_max && ei >= e_min && ei <= e_max;
    }
    nlohmann::json to_json() const {
        auto num = [](double x) { return std::isfinite(x) ? nlohmann::json(x) : nlohmann::json("inf"); };
        return {{"rho", {num(rho_min), num(rho_max)}}, {"e", {num(e_min), num(e_max)}}};
    }
};

class EquationOfState {
public:
    virtual ~EquationOfState() = default;

    virtual std::string kind() const = 0;
    virtual int dimension() const = 0;
    /// order 0: psi only; 1: psi and q; 2: also the Hessian.
    virtual EosPoint evaluate(const LambdaVec& l, int order) const = 0;
    /// Components of lambda and q that carry information (0, the live momentum axes, 4).
    virtual std::vector<int> active() const = 0;
    /// Throws DomainError on q outside the model's admissible region.
    virtual void check_admissible(const ConservedVec& q) const = 0;
    virtual LambdaVec initial_guess(const ConservedVec& q) const = 0;
    virtual nlohmann::json describe() const { return {{"kind", kind()}, {"d", dimension()}}; }

    double psi(const LambdaVec& l) const { return evaluate(l, 0).psi; }
    ConservedVec q_of_lambda(const LambdaVec& l) const { return evaluate(l, 1).q; }
    Mat5 hessian(const LambdaVec& l) const { return evaluate(l, 2).hessian; }

    OnePhaseBox box;

protected:
    static void require_beta(const LambdaVec& l) {
        if (!(l[4] > 0) || !std::isfinite(l[4])) throw DomainError("lambda4 (inverse temperature) must be positive");
    }
};

/// Rest-frame thermodynamics in the variables (a, beta) with a = lambda0 + |lambda|^2 / (2 beta).
struct RestPoint {
    double psi = 0, rho = 0, e = 0;
    double rho_a = 0, rho_b = 0, e_a = 0, e_b = 0;
};

/// Models whose psi depends on lambda only through (a, beta), i.e. Galilean
/// invariant gases: q_j = rho u_j and e = e_rest + rho u^2/2 with u = lambda / beta.
class GalileanEos : public EquationOfState {
public:
    explicit GalileanEos(int d) : d_(d) {
        if (d < 1 || d > 3) throw ConfigError("/eos/dimension", "must be 1, 2 or 3");
    }

    int dimension() const override { return d_; }
    std::vector<int> active() const override {
        std::vector<int> a{0};
        for (int j = 1; j <= d_; ++j) a.push_back(j);
        a.push_back(4);
        return a;
    }

    virtual RestPoint rest(double a, double beta, int order) const = 0;

    EosPoint evaluate(const LambdaVec& l, int order) const override {
        require_beta(l);
        const double beta = l[4];
        std::array<double, 3> u{0, 0, 0};
        double u2 = 0;
        for (int j = 0; j < d_; ++j) {
            u[j] = l[1 + j] / beta;
            u2 += u[j] * u[j];
        }
        const double a = l[0] + 0.5 * beta * u2;
        RestPoint r = rest(a, beta, order);
        EosPoint p;
        p.psi = r.psi;
        if (order < 1) return p;
        p.q[0] = r.rho;
        for (int j = 0; j < d_; ++j) p.q[1 + j] = r.rho * u[j];
        p.q[4] = r.e + 0.5 * r.rho * u2;
        if (order < 2) return p;
        // gradient g = (rho, rho u, -e) as a function of (a, u, beta), chained with d(a, u, beta)/d lambda
        Mat5 g = Mat5::Zero(), dv = Mat5::Zero();
        g(0, 0) = r.rho_a;
        g(0, 4) = r.rho_b;
        for (int j = 0; j < d_; ++j) {
            g(1 + j, 0) = r.rho_a * u[j];
            g(1 + j, 1 + j) = r.rho;
            g(1 + j, 4) = r.rho_b * u[j];
            g(4, 1 + j) = -r.rho * u[j];
        }
        g(4, 0) = -(r.e_a + 0.5 * r.rho_a * u2);
        g(4, 4) = -(r.e_b + 0.5 * r.rho_b * u2);
        dv(0, 0) = 1;
        for (int j = 0; j < d_; ++j) {
            dv(0, 1 + j) = u[j];
            dv(1 + j, 1 + j) = 1 / beta;
            dv(1 + j, 4) = -u[j] / beta;
        }
        dv(0, 4) = -0.5 * u2;
        dv(4, 4) = 1;
        p.hessian = g * dv;
        p.hessian = 0.5 * (p.hessian + p.hessian.transpose()).eval();
        return p;
    }

protected:
    void check_momentum_axes(const ConservedVec& q) const {
        for (int j = d_ + 1; j <= 3; ++j)
            if (q[j] != 0.0) throw DomainError("momentum component " + std::to_string(j) + " beyond the model dimension");
    }

    int d_;
};

struct QuadratureOptions {
    /// Relative tolerance requested from the adaptive Gauss-Kronrod rule. The
    /// estimate |K61 - G30| is pessimistic; asking for much less than 1e-12
    /// only buys recursion into roundoff.
    double tolerance = 1e-12;
    unsigned max_depth = 12;
    /// Error estimates above this (relative) raise ConvergenceError.
    double accept = 1e-9;
};

/// Free spinless Fermi gas in the continuum, mass 1:
/// psi = (2 pi)^-d int dk log(1 + exp(lambda0 + lambda.k - lambda4 k^2/2)).
class ContinuumFreeGas : public GalileanEos {
public:
    explicit ContinuumFreeGas(int d, QuadratureOptions opt = {}) : GalileanEos(d), opt_(opt) {
        static constexpr double pi = std::numbers::pi;
        const double surface[] = {2.0, 2 * pi, 4 * pi};
        cd_ = surface[d - 1] / std::pow(2 * pi, d);
    }

    std::string kind() const override { return "continuum_free"; }
    nlohmann::json describe() const override {
        return {{"kind", kind()}, {"d", d_}, {"quadrature_tolerance", opt_.tolerance}, {"box", box.to_json()}};
    }

    /// c_d int_0^inf k^{d-1} (k^2/2)^n g(a - k^2/2) dk (beta = 1).
    /// Away from the Fermi edge the integral runs in k; across the edge it runs
    /// in z = k^2/2 - a so that g(-z) is free of cancellation for large a.
    template <class G>
    double radial(double a, int n, G&& g) const {
        using boost::math::quadrature::gauss_kronrod;
        constexpr double edge = 40, tail = 60;
        double total = 0, err = 0;
        auto run = [&](auto&& f, std::vector<double> pts) {
            std::sort(pts.begin(), pts.end());
            pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
            for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
                double e = 0;
                total += gauss_kronrod<double, 61>::integrate(f, pts[i], pts[i + 1], opt_.max_depth, opt_.tolerance, &e);
                err += e;
            }
        };
        auto in_k = [&](double k) {
            const double kk = 0.5 * k * k;
            return std::pow(k, d_ - 1) * std::pow(kk, n) * g(a - kk);
        };
        if (a > edge) {
            const double k1 = std::sqrt(2 * (a - edge));
            std::vector<double> pts{0.0, k1, 0.5 * k1};
            for (double k : {1.0, 2.0, 4.0, 8.0})
                if (k < k1) pts.push_back(k);
            run(in_k, pts);
            auto in_z = [&](double z) {
                const double y = a + z;
                return std::pow(2 * y, 0.5 * (d_ - 2)) * std::pow(y, n) * g(-z);
            };
            run(in_z, {-edge, -10, -3, 0, 3, 10, tail});
        } else {
            const double kmax = std::sqrt(2 * (std::max(a, 0.0) + tail));
            std::vector<double> pts{0.0, kmax};
            for (double k : {1.0, 2.0, 4.0, 8.0})
                if (k < kmax) pts.push_back(k);
            if (a > 0) {
                const double kf = std::sqrt(2 * a);
                for (double z : {-10.0, -3.0, 0.0, 3.0, 10.0})
                    if (a + z > 0) pts.push_back(std::sqrt(2 * (a + z)));
                pts.push_back(0.5 * kf);
            }
            run(in_k, pts);
        }
        if (err > opt_.accept * std::abs(total) + 1e-300)
            throw ConvergenceError("free-gas quadrature did not reach tolerance (estimate " + std::to_string(err) + ")",
                                   err, int(opt_.max_depth));
        return cd_ * total;
    }

    RestPoint rest(double a, double beta, int order) const override {
        const double s0 = std::pow(beta, -0.5 * d_);
        RestPoint r;
        r.psi = s0 * radial(a, 0, detail::softplus);
        if (order < 1) return r;
        r.rho = s0 * radial(a, 0, detail::logistic);
        r.e = s0 / beta * radial(a, 1, detail::logistic);
        if (order < 2) return r;
        const double j1 = radial(a, 1, detail::logistic_slope);
        r.rho_a = s0 * radial(a, 0, detail::logistic_slope);
        r.rho_b = -s0 / beta * j1;
        r.e_a = s0 / beta * j1;
        r.e_b = -s0 / (beta * beta) * radial(a, 2, detail::logistic_slope);
        return r;
    }

    /// Lower bound of e / rho^{1+2/d} (the filled Fermi sea).
    double degeneracy_floor() const {
        const double d = d_;
        return std::pow(d, 1 + 2 / d) / (2 * (d + 2)) * std::pow(cd_, -2 / d);
    }

    void check_admissible(const ConservedVec& q) const override {
        check_momentum_axes(q);
        if (!(q[0] > 0)) throw DomainError("density must be positive");
        const double ei = q[4] - kinetic_energy_density(q);
        if (!(ei > 0)) throw DomainError("internal energy e - rho v^2/2 must be positive");
        if (!(ei / std::pow(q[0], 1 + 2.0 / d_) > degeneracy_floor()))
            throw DomainError("internal energy below the Fermi-sea floor");
    }

    /// Exact rest-frame inversion: e/rho^{1+2/d} depends on a alone, beta then follows from rho.
    LambdaVec initial_guess(const ConservedVec& q) const override {
        check_admissible(q);
        const double rho = q[0];
        const double ei = q[4] - kinetic_energy_density(q);
        const double target = ei / std::pow(rho, 1 + 2.0 / d_);
        auto rho1 = [&](double a) { return radial(a, 0, detail::logistic); };
        auto ratio = [&](double a) { return radial(a, 1, detail::logistic) / std::pow(rho1(a), 1 + 2.0 / d_); };
        // classical estimate ratio ~ (d/2)(2 pi) e^{-2a/d}
        double guess = -0.5 * d_ * std::log(target / (d_ * std::numbers::pi));
        double lo = std::min(guess, 0.0) - 2, hi = std::max(guess, 0.0) + 2;
        auto f = [&](double a) { return std::log(ratio(a) / target); };
        double flo = f(lo), fhi = f(hi);
        for (int i = 0; i < 60 && flo < 0; ++i) {
            lo = 2 * lo - 1;
            if (lo < -700) throw DomainError("state too dilute for the free-gas inversion");
            flo = f(lo);
        }
        for (int i = 0; i < 80 && fhi > 0; ++i) {
            hi = 2 * hi + 1;
            fhi = f(hi);
        }
        if (flo < 0 || fhi > 0) throw DomainError("free-gas inversion could not bracket the fugacity");
        std::uintmax_t iters = 200;
        auto tol = boost::math::tools::eps_tolerance<double>(52);
        auto [a0, a1] = boost::math::tools::toms748_solve(f, lo, hi, flo, fhi, tol, iters);
        const double a = 0.5 * (a0 + a1);
        const double beta = std::pow(rho1(a) / rho, 2.0 / d_);
        LambdaVec l;
        double u2 = 0;
        for (int j = 1; j <= d_; ++j) {
            const double u = q[j] / rho;
            l[j] = beta * u;
            u2 += u * u;
        }
        l[0] = a - 0.5 * beta * u2;
        l[4] = beta;
        return l;
    }

private:
    QuadratureOptions opt_;
    double cd_ = 0;
};

/// Free fermions on the cubic lattice: dispersion sum_j (1 - cos k_j s)/s^2,
/// mode velocity sin(k_j s)/s. `modes[j]` sites per axis; 0 means the
/// Brillouin-zone integral (periodic trapezoid rule refined until converged).
class LatticeFreeGas : public EquationOfState {
public:
    explicit LatticeFreeGas(std::vector<int> modes, double spacing = 1.0, double tolerance = 1e-13)
        : modes_(std::move(modes)), spacing_(spacing), tol_(tolerance) {
        if (modes_.empty() || modes_.size() > 3) throw ConfigError("/eos/modes", "needs 1 to 3 axes");
        for (int m : modes_)
            if (m < 0) throw ConfigError("/eos/modes", "must be nonnegative");
        if (!(spacing > 0)) throw ConfigError("/eos/spacing", "must be positive");
    }

    std::string kind() const override { return "lattice_free"; }
    int dimension() const override { return int(modes_.size()); }
    const std::vector<int>& modes() const { return modes_; }
    nlohmann::json describe() const override {
        return {{"kind", kind()}, {"d", dimension()}, {"modes", modes_}, {"spacing", spacing_}, {"tolerance", tol_}, {"box", box.to_json()}};
    }

    std::vector<int> active() const override {
        std::vector<int> a{0};
        for (int j = 0; j < dimension(); ++j)
            if (modes_[j] == 0 || modes_[j] > 2) a.push_back(1 + j); // sin k vanishes on 1- and 2-site axes
        a.push_back(4);
        return a;
    }

    EosPoint evaluate(const LambdaVec& l, int order) const override {
        require_beta(l);
        bool infinite = false;
        for (int m : modes_) infinite |= m == 0;
        if (!infinite) return mode_sum(l, order, modes_);
        // refine the periodic trapezoid rule until psi and q settle
        const int d = dimension();
        const int cap = d == 1 ? 1 << 16 : d == 2 ? 1 << 9 : 1 << 6;
        std::vector<int> n = modes_;
        int level = 16;
        auto grid = [&](int lv) {
            for (std::size_t j = 0; j < n.size(); ++j) n[j] = modes_[j] == 0 ? lv : modes_[j];
            return n;
        };
        EosPoint prev = mode_sum(l, order, grid(level));
        while (level < cap) {
            level *= 2;
            EosPoint next = mode_sum(l, order, grid(level));
            double diff = std::abs(next.psi - prev.psi) / std::max(std::abs(next.psi), 1e-300);
            if (order >= 1) diff = std::max(diff, (next.q - prev.q).max_abs() / std::max(next.q.max_abs(), 1e-300));
            prev = next;
            if (diff < tol_) return prev;
        }
        throw ConvergenceError("Brillouin-zone sum did not converge", 0.0, level);
    }

    void check_admissible(const ConservedVec& q) const override {
        for (int j = dimension() + 1; j <= 3; ++j)
            if (q[j] != 0.0) throw DomainError("momentum component beyond the lattice dimension");
        if (!(q[0] > 0 && q[0] < 1)) throw DomainError("lattice density must lie in (0, 1)");
        if (!(q[4] > 0)) throw DomainError("energy density must be positive");
    }

    LambdaVec initial_guess(const ConservedVec& q) const override {
        check_admissible(q);
        LambdaVec l;
        l[0] = std::log(q[0] / (1 - q[0]));
        l[4] = 1;
        return l;
    }

private:
    EosPoint mode_sum(const LambdaVec& l, int order, const std::vector<int>& n) const {
        const int d = int(n.size());
        const double s = spacing_;
        std::array<std::vector<double>, 3> sn, en;
        for (int j = 0; j < d; ++j) {
            for (int m = 0; m < n[j]; ++m) {
                const double k = 2 * std::numbers::pi * m / n[j];
                sn[j].push_back(std::sin(k) / s);
                en[j].push_back((1 - std::cos(k)) / (s * s));
            }
        }
        for (int j = d; j < 3; ++j) {
            sn[j] = {0.0};
            en[j] = {0.0};
        }
        EosPoint p;
        std::array<double, 5> g{};
        std::size_t count = 0;
        for (std::size_t i0 = 0; i0 < sn[0].size(); ++i0)
            for (std::size_t i1 = 0; i1 < sn[1].size(); ++i1)
                for (std::size_t i2 = 0; i2 < sn[2].size(); ++i2) {
                    const double v[3] = {sn[0][i0], sn[1][i1], sn[2][i2]};
                    const double eps = en[0][i0] + en[1][i1] + en[2][i2];
                    const double x = l[0] + l[1] * v[0] + l[2] * v[1] + l[3] * v[2] - l[4] * eps;
                    ++count;
                    p.psi += detail::softplus(x);
                    if (order < 1) continue;
                    const double f = detail::logistic(x);
                    p.q[0] += f;
                    for (int j = 0; j < 3; ++j) p.q[1 + j] += v[j] * f;
                    p.q[4] += eps * f;
                    if (order < 2) continue;
                    const double w = detail::logistic_slope(x);
                    g = {1, v[0], v[1], v[2], -eps};
                    for (int a = 0; a < 5; ++a)
                        for (int b = 0; b < 5; ++b) p.hessian(a, b) += w * g[a] * g[b];
                }
        const double inv = 1.0 / double(count);
        p.psi *= inv;
        p.q *= inv;
        p.hessian *= inv;
        return p;
    }

    std::vector<int> modes_;
    double spacing_;
    double tol_;
};

/// psi(lambda0, lambda4) tabulated from exact diagonalization at alpha = 0 and
/// interpolated by a bicubic spline; moving states use the Galilean extension
/// psi(lambda) = table(lambda0 + |lambda|^2/(2 lambda4), lambda4).
class TabulatedEos : public GalileanEos {
public:
    struct CellResidual {
        double lambda0 = 0, lambda4 = 0;
        double psi_error = 0;     // spline vs exact pressure at the cell centre
        double density_error = 0; // spline d/dlambda0 vs Gibbs <n>
    };

    TabulatedEos(int d, std::vector<double> lambda0, std::vector<double> lambda4, std::vector<std::vector<double>> psi,
                 nlohmann::json source = {})
        : GalileanEos(d), l0_(std::move(lambda0)), l4_(std::move(lambda4)), nodes_(std::move(psi)), source_(std::move(source)),
          spline_(l0_, l4_, nodes_) {}

    std::string kind() const override { return "tabulated_interacting"; }
    nlohmann::json describe() const override {
        nlohmann::json j = {{"kind", kind()}, {"d", d_}, {"lambda0", l0_}, {"lambda4", l4_}, {"box", box.to_json()}};
        j["source"] = source_;
        return j;
    }

    RestPoint rest(double a, double beta, int order) const override {
        if (!spline_.contains(a, beta)) throw DomainError("lambda outside the tabulated range");
        auto v = spline_.eval(a, beta);
        RestPoint r;
        r.psi = v.f;
        r.rho = v.fx;
        r.e = -v.fy;
        if (order >= 2) {
            r.rho_a = v.fxx;
            r.rho_b = v.fxy;
            r.e_a = -v.fxy;
            r.e_b = -v.fyy;
        }
        return r;
    }

    void check_admissible(const ConservedVec& q) const override {
        check_momentum_axes(q);
        if (!(q[0] > 0)) throw DomainError("density must be positive");
        if (!(q[4] - kinetic_energy_density(q) > 0)) throw DomainError("internal energy must be positive");
    }

    LambdaVec initial_guess(const ConservedVec& q) const override {
        check_admissible(q);
        LambdaVec l;
        const double beta = 0.5 * (l4_.front() + l4_.back());
        l[0] = 0.5 * (l0_.front() + l0_.back());
        double u2 = 0;
        for (int j = 1; j <= d_; ++j) {
            const double u = q[j] / q[0];
            l[j] = beta * u;
            u2 += u * u;
        }
        l[0] -= 0.5 * beta * u2;
        l[4] = beta;
        return l;
    }

    const std::vector<double>& lambda0_grid() const { return l0_; }
    const std::vector<double>& lambda4_grid() const { return l4_; }
    double node(std::size_t i, std::size_t j) const { return nodes_[i][j]; }
    const nlohmann::json& source() const { return source_; }

    std::vector<CellResidual> residuals;

private:
    std::vector<double> l0_, l4_;
    std::vector<std::vector<double>> nodes_;
    nlohmann::json source_;
    BicubicSpline spline_;
};

struct TabulationOptions {
    int threads = 1;
    /// Also compute exact values at cell centres and report interpolation residuals.
    bool check_cells = true;
    double warn_threshold = 1e-3;
};

struct TabulationResult {
    std::shared_ptr<TabulatedEos> model;
    std::vector<std::string> warnings;
};

/// Pressure table from pressure_finite on a (lambda0, lambda4) grid at alpha = 0.
inline TabulationResult tabulate_interacting(const Lattice& lat, const PairPotential& w, const std::vector<double>& lambda0,
                                             const std::vector<double>& lambda4, const TabulationOptions& opt = {}) {
    if (lat.sites() > 12) throw PreconditionError("tabulation is limited to M <= 12");
    if (lambda0.size() < 2 || lambda4.size() < 2) throw ConfigError("/eos/grid", "needs at least two nodes per axis");
    for (double b : lambda4)
        if (!(b > 0)) throw ConfigError("/eos/grid/lambda4", "lambda4 must be positive");
    const auto model = LatticeModel::build(lat, w);
    const std::size_t n0 = lambda0.size(), n4 = lambda4.size();
    std::vector<std::vector<double>> psi(n0, std::vector<double>(n4));
    parallel_for(n0 * n4, opt.threads, [&](std::size_t idx) {
        const std::size_t i = idx / n4, j = idx % n4;
        psi[i][j] = pressure_finite(LambdaVec{{lambda0[i], 0, 0, 0, lambda4[j]}}, model);
    });
    nlohmann::json src = {{"M", lat.sites()}, {"dims", lat.dims()}, {"spacing", lat.spacing()}, {"range", w.range()}};
    nlohmann::json wj = nlohmann::json::object();
    for (const auto& [r, v] : w.values()) wj[std::to_string(r[0]) + "," + std::to_string(r[1]) + "," + std::to_string(r[2])] = v;
    src["W"] = wj;
    TabulationResult out;
    out.model = std::make_shared<TabulatedEos>(lat.dimension(), lambda0, lambda4, psi, src);
    if (!opt.check_cells) return out;
    const std::size_t cells = (n0 - 1) * (n4 - 1);
    std::vector<TabulatedEos::CellResidual> res(cells);
    parallel_for(cells, opt.threads, [&](std::size_t idx) {
        const std::size_t i = idx / (n4 - 1), j = idx % (n4 - 1);
        LambdaVec l{{0.5 * (lambda0[i] + lambda0[i + 1]), 0, 0, 0, 0.5 * (lambda4[j] + lambda4[j + 1])}};
        auto exact = gibbs_state(l, model);
        const double n = expectations(exact, model.densities).mean()[0];
        auto p = out.model->evaluate(l, 1);
        res[idx] = {l[0], l[4], std::abs(p.psi - pressure_finite(l, model)), std::abs(p.q[0] - n)};
    });
    for (const auto& r : res)
        if (std::max(r.psi_error, r.density_error) > opt.warn_threshold)
            out.warnings.push_back("interpolation residual " + std::to_string(std::max(r.psi_error, r.density_error)) +
                                   " in cell centred at lambda0=" + std::to_string(r.lambda0) + ", lambda4=" + std::to_string(r.lambda4));
    out.model->residuals = std::move(res);
    return out;
}

struct NewtonOptions {
    double tolerance = 1e-13;  // stop when the relative residual falls below this
    double acceptable = 1e-9;  // residual still accepted when progress stalls
    int max_iterations = 50;
};

struct NewtonReport {
    LambdaVec lambda;
    double residual = 0;
    int iterations = 0;
};

/// Solves grad psi(lambda) = (q0, q1..3, -q4) by damped Newton on the convex
/// function psi(lambda) - lambda.q, with lambda4 = exp(s) kept positive.
inline NewtonReport solve_lambda(const ConservedVec& q, const EquationOfState& model, std::optional<LambdaVec> guess = {},
                                 const NewtonOptions& opt = {}) {
    model.check_admissible(q);
    const auto act = model.active();
    for (int j = 1; j <= 3; ++j)
        if (std::find(act.begin(), act.end(), j) == act.end() && q[j] != 0.0)
            throw DomainError("momentum component " + std::to_string(j) + " is not carried by this model");
    const double scale = q.max_abs();
    auto residual_of = [&](const EosPoint& p) {
        double r = 0;
        for (int c : act) r = std::max(r, std::abs(p.q[c] - q[c]));
        return r / scale;
    };
    LambdaVec l = guess ? *guess : model.initial_guess(q);
    if (!(l[4] > 0)) l = model.initial_guess(q);
    EosPoint p = model.evaluate(l, 2);
    double res = residual_of(p);
    double phi = p.psi - pairing(l, q);
    const int n = int(act.size());
    int it = 0;
    for (; it < opt.max_iterations && res >= opt.tolerance; ++it) {
        Eigen::MatrixXd h(n, n);
        Eigen::VectorXd grad(n);
        for (int a = 0; a < n; ++a) {
            const int ca = act[a];
            grad[a] = ca == 4 ? -(p.q[4] - q[4]) : p.q[ca] - q[ca];
            for (int b = 0; b < n; ++b) h(a, b) = p.hessian(ca, act[b]);
        }
        Eigen::LDLT<Eigen::MatrixXd> ldlt(h);
        if (ldlt.info() != Eigen::Success) throw ConvergenceError("singular Hessian in lambda_of_q", res, it);
        Eigen::VectorXd step = -ldlt.solve(grad);
        bool accepted = false;
        for (double t = 1; t > 1e-12; t *= 0.5) {
            LambdaVec trial = l;
            for (int a = 0; a < n; ++a) {
                if (act[a] == 4) {
                    const double ds = std::clamp(t * step[a] / l[4], -3.0, 3.0);
                    trial[4] = l[4] * std::exp(ds);
                } else {
                    trial[act[a]] += t * step[a];
                }
            }
            EosPoint tp;
            try {
                tp = model.evaluate(trial, 2);
            } catch (const DomainError&) {
                continue;
            } catch (const ConvergenceError&) {
                continue;
            }
            const double tres = residual_of(tp);
            const double tphi = tp.psi - pairing(trial, q);
            if (!std::isfinite(tres)) continue;
            if (tres < res || tphi < phi - 1e-15 * std::abs(phi)) {
                l = trial;
                p = tp;
                res = tres;
                phi = tphi;
                accepted = true;
                break;
            }
        }
        if (!accepted) break;
    }
    if (res >= opt.acceptable)
        throw ConvergenceError("lambda_of_q did not converge (relative residual " + std::to_string(res) + ")", res, it);
    return {l, res, it};
}

inline LambdaVec lambda_of_q(const ConservedVec& q, const EquationOfState& model, std::optional<LambdaVec> guess = {},
                             const NewtonOptions& opt = {}) {
    return solve_lambda(q, model, guess, opt).lambda;
}

/// P(q) = psi(lambda(q)) / lambda4(q).
inline double pressure_P(const ConservedVec& q, const EquationOfState& model, std::optional<LambdaVec> guess = {},
                         const NewtonOptions& opt = {}) {
    const LambdaVec l = lambda_of_q(q, model, guess, opt);
    return model.psi(l) / l[4];
}

/// Entropy density s = psi - lambda.q (pairing with the model's sign convention).
inline double entropy_density(const LambdaVec& l, const ConservedVec& q, double psi) { return psi - pairing(l, q); }

struct SoundSpeedReport {
    CharacteristicSpeeds speeds;
    double max_speed = 0; // largest |characteristic speed|
    double c = 0;         // half the spread of the outermost speeds
};

/// Characteristic speeds of the Euler flux along `axis`, with P from pressure_P.
/// Non-hyperbolic Jacobians raise DomainError.
inline SoundSpeedReport sound_speed(const ConservedVec& q, const EquationOfState& model, int axis = 0, const NewtonOptions& opt = {}) {
    if (axis < 0 || axis >= model.dimension()) throw PreconditionError("axis outside the model dimension");
    const LambdaVec l0 = lambda_of_q(q, model, std::nullopt, opt);
    auto pressure = [&](const ConservedVec& x) { return pressure_P(x, model, l0, opt); };
    SoundSpeedReport r;
    r.speeds = characteristic_speeds(q, pressure, model.active(), axis);
    if (!r.speeds.hyperbolic)
        throw DomainError("flux Jacobian has complex eigenvalues (imaginary part " + std::to_string(r.speeds.max_imag) +
                          "): state leaves the hyperbolic regime");
    r.max_speed = r.speeds.max_speed();
    r.c = r.speeds.sound();
    return r;
}

/// EOS table: a '#'-prefixed JSON header line, then lambda0..lambda4, psi, rho, q1..q3, e.
inline void write_eos_table(std::ostream& os, const EquationOfState& model, const std::vector<LambdaVec>& points,
                            nlohmann::json header = {}) {
    header["eos"] = model.describe();
    os << "# " << header.dump() << '\n';
    os << "lambda0,lambda1,lambda2,lambda3,lambda4,psi,rho,q1,q2,q3,e\n";
    os.precision(17);
    for (const auto& l : points) {
        auto p = model.evaluate(l, 1);
        for (int mu = 0; mu < 5; ++mu) os << l[mu] << ',';
        os << p.psi;
        for (int mu = 0; mu < 5; ++mu) os << ',' << p.q[mu];
        os << '\n';
    }
}

} // namespace qhydro

#endif
