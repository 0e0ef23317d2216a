#ifndef QHYDRO_EULER_HPP
#define QHYDRO_EULER_HPP

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <functional>
#include <istream>
#include <limits>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <boost/math/tools/toms748_solve.hpp>
#include <nlohmann/json.hpp>

#include "eos.hpp"
#include "flux.hpp"
#include "parallel.hpp"
#include "spline.hpp"

namespace qhydro {

/// Periodic node grid on the unit torus, X_i = i / n per axis, axis 0 fastest.
struct Grid {
    int d = 1;
    std::array<int, 3> n{1, 1, 1};

    static Grid make(const std::vector<int>& cells) {
        if (cells.empty() || cells.size() > 3) throw ConfigError("/euler/cells", "needs 1 to 3 axes");
        Grid g;
        g.d = int(cells.size());
        for (int a = 0; a < g.d; ++a) {
            if (cells[a] < 4) throw ConfigError("/euler/cells", "at least 4 cells per axis");
            g.n[a] = cells[a];
        }
        return g;
    }

    std::size_t cells() const { return std::size_t(n[0]) * n[1] * n[2]; }
    double dx(int axis) const { return 1.0 / n[axis]; }
    double cell_volume() const { return 1.0 / double(cells()); }

    std::array<int, 3> coords(std::size_t c) const {
        return {int(c % n[0]), int(c / n[0] % n[1]), int(c / (std::size_t(n[0]) * n[1]))};
    }
    std::size_t index(std::array<int, 3> c) const {
        for (int a = 0; a < 3; ++a) c[a] = ((c[a] % n[a]) + n[a]) % n[a];
        return std::size_t(c[0]) + std::size_t(n[0]) * (std::size_t(c[1]) + std::size_t(n[1]) * c[2]);
    }
    std::size_t neighbor(std::size_t c, int axis, int step) const {
        auto x = coords(c);
        x[axis] += step;
        return index(x);
    }
    std::array<double, 3> position(std::size_t c) const {
        auto x = coords(c);
        return {double(x[0]) / n[0], double(x[1]) / n[1], double(x[2]) / n[2]};
    }
    bool operator==(const Grid&) const = default;
};

struct ConservedField {
    Grid grid;
    std::vector<ConservedVec> q;
    double time = 0;

    static ConservedField uniform(const Grid& g, const ConservedVec& v) { return {g, std::vector<ConservedVec>(g.cells(), v), 0}; }

    /// sum_cells q * cell volume, summed in index order.
    ConservedVec totals() const {
        ConservedVec t;
        for (const auto& x : q) t += x;
        return grid.cell_volume() * t;
    }
};

/// P = (2/d)(e - rho v^2/2): the continuum free gas, whose pressure is exactly
/// 2/d of its internal energy. Closed form; no Newton solve.
struct VirialPressure {
    int eos_dimension = 3;

    double operator()(const ConservedVec& q, std::size_t = 0) const {
        const double ei = q[4] - kinetic_energy_density(q);
        if (!(q[0] > 0) || !(ei > 0)) throw DomainError("density and internal energy must be positive");
        return 2.0 / eos_dimension * ei;
    }
    double signal_speed(const ConservedVec& q, std::size_t cell = 0) const {
        const double p = (*this)(q, cell);
        const double v = std::sqrt(2 * kinetic_energy_density(q) / q[0]);
        return v + std::sqrt((1 + 2.0 / eos_dimension) * p / q[0]);
    }
};

/// P from an equation of state through lambda_of_q, warm-started per cell
/// from the previous solution. Each cell's slot is written only by the
/// worker that owns that cell.
class EosPressure {
public:
    EosPressure(const EquationOfState& eos, std::size_t cells, NewtonOptions opt = {})
        : eos_(&eos), warm_(cells), opt_(opt) {}

    double operator()(const ConservedVec& q, std::size_t cell = 0) const {
        auto& w = warm_.at(cell);
        auto r = solve_lambda(q, *eos_, w, opt_);
        w = r.lambda;
        return eos_->psi(r.lambda) / r.lambda[4];
    }

    const EquationOfState& eos() const { return *eos_; }
    std::vector<int> components() const { return eos_->active(); }

private:
    const EquationOfState* eos_;
    mutable std::vector<std::optional<LambdaVec>> warm_;
    NewtonOptions opt_;
};

/// Memoized P(rho, e - rho v^2/2) on a rectilinear grid, bicubic in between;
/// valid for Galilean-invariant models whose pressure does not depend on v.
class CachedPressure {
public:
    CachedPressure(std::vector<double> rho, std::vector<double> e_internal, std::vector<std::vector<double>> p, int eos_dimension)
        : rho_(std::move(rho)), e_(std::move(e_internal)), p_(std::move(p)), d_(eos_dimension), spline_(rho_, e_, p_) {}

    /// Tabulates pressure_P of `eos` on the grid.
    static CachedPressure build(const EquationOfState& eos, std::vector<double> rho, std::vector<double> e_internal, int threads = 1,
                                const NewtonOptions& opt = {}) {
        std::vector<std::vector<double>> p(rho.size(), std::vector<double>(e_internal.size()));
        parallel_for(rho.size() * e_internal.size(), threads, [&](std::size_t idx) {
            const std::size_t i = idx / e_internal.size(), j = idx % e_internal.size();
            p[i][j] = pressure_P(ConservedVec{{rho[i], 0, 0, 0, e_internal[j]}}, eos, std::nullopt, opt);
        });
        return CachedPressure(std::move(rho), std::move(e_internal), std::move(p), eos.dimension());
    }

    double operator()(const ConservedVec& q, std::size_t = 0) const {
        const double ei = q[4] - kinetic_energy_density(q);
        if (!spline_.contains(q[0], ei)) throw DomainError("state outside the pressure cache");
        return spline_.eval(q[0], ei).f;
    }

    int eos_dimension() const { return d_; }

    /// CSV rows rho,e_internal,P in full precision.
    void write(std::ostream& os) const {
        os.precision(17);
        os << "# dimension " << d_ << '\n' << "rho,e_internal,P\n";
        for (std::size_t i = 0; i < rho_.size(); ++i)
            for (std::size_t j = 0; j < e_.size(); ++j) os << rho_[i] << ',' << e_[j] << ',' << p_[i][j] << '\n';
    }

    static CachedPressure read(std::istream& is) {
        std::string line;
        int d = 0;
        std::getline(is, line);
        if (std::sscanf(line.c_str(), "# dimension %d", &d) != 1) throw PreconditionError("pressure cache: missing dimension line");
        std::getline(is, line);
        std::vector<double> rho, e;
        std::vector<std::array<double, 3>> rows;
        while (std::getline(is, line)) {
            if (line.empty()) continue;
            std::array<double, 3> r{};
            std::istringstream ls(line);
            char comma = 0;
            if (!(ls >> r[0] >> comma >> r[1] >> comma >> r[2])) throw PreconditionError("pressure cache: bad row '" + line + "'");
            rows.push_back(r);
            if (rho.empty() || rho.back() != r[0]) rho.push_back(r[0]);
            if (rho.size() == 1) e.push_back(r[1]);
        }
        if (rho.empty() || rows.size() != rho.size() * e.size()) throw PreconditionError("pressure cache: ragged grid");
        std::vector<std::vector<double>> p(rho.size(), std::vector<double>(e.size()));
        for (std::size_t k = 0; k < rows.size(); ++k) p[k / e.size()][k % e.size()] = rows[k][2];
        return CachedPressure(std::move(rho), std::move(e), std::move(p), d);
    }

private:
    std::vector<double> rho_, e_;
    std::vector<std::vector<double>> p_;
    int d_;
    BicubicSpline spline_;
};

struct EulerOptions {
    double cfl = 0.4;
    /// Hyperdissipation -nu d^4 q with nu = dissipation * dx^3 (0.02 when enabled; 0 disables).
    double dissipation = 0;
    double blowup_factor = 50;
    int threads = 1;
};

namespace detail {

template <class Law>
double law_signal_speed(const Law& law, const ConservedVec& q, std::size_t cell, const Grid& g) {
    if constexpr (requires { law.signal_speed(q, cell); }) {
        return law.signal_speed(q, cell);
    } else {
        std::vector<int> comps{0};
        for (int a = 0; a < g.d; ++a) comps.push_back(1 + a);
        comps.push_back(4);
        auto p = [&](const ConservedVec& x) { return law(x, cell); };
        double s = 0;
        for (int a = 0; a < g.d; ++a) {
            auto cs = characteristic_speeds(q, p, comps, a);
            if (!cs.hyperbolic) throw InadmissibleCell("flux Jacobian not hyperbolic", cell);
            s = std::max(s, cs.max_speed());
        }
        return s;
    }
}

} // namespace detail

/// max over cells of |v| + c.
template <class Law>
double max_signal_speed(const ConservedField& f, const Law& law, int threads = 1) {
    std::vector<double> s(f.q.size());
    parallel_for(f.q.size(), threads, [&](std::size_t c) {
        try {
            s[c] = detail::law_signal_speed(law, f.q[c], c, f.grid);
        } catch (const InadmissibleCell&) {
            throw;
        } catch (const DomainError& e) {
            throw InadmissibleCell(std::string("cell ") + std::to_string(c) + ": " + e.what(), c);
        }
    });
    return *std::max_element(s.begin(), s.end());
}

/// dq/dT = -sum_i D_i A_i(q) - nu d^4 q with centered differences.
template <class Law>
std::vector<ConservedVec> euler_rhs(const Grid& g, const std::vector<ConservedVec>& q, const Law& law, const EulerOptions& opt) {
    const std::size_t n = q.size();
    std::vector<double> p(n);
    parallel_for(n, opt.threads, [&](std::size_t c) {
        try {
            p[c] = law(q[c], c);
        } catch (const DomainError& e) {
            throw InadmissibleCell(std::string("cell ") + std::to_string(c) + ": " + e.what(), c);
        }
    });
    std::vector<ConservedVec> out(n);
    parallel_for(n, opt.threads, [&](std::size_t c) {
        ConservedVec r;
        for (int a = 0; a < g.d; ++a) {
            const std::size_t up = g.neighbor(c, a, 1), dn = g.neighbor(c, a, -1);
            ConservedVec diff = flux_row(q[up], p[up], a) - flux_row(q[dn], p[dn], a);
            r -= (0.5 / g.dx(a)) * diff;
            if (opt.dissipation > 0) {
                const std::size_t up2 = g.neighbor(c, a, 2), dn2 = g.neighbor(c, a, -2);
                ConservedVec d4 = q[up2] - 4.0 * q[up] + 6.0 * q[c] - 4.0 * q[dn] + q[dn2];
                r -= (opt.dissipation / g.dx(a)) * d4;
            }
        }
        out[c] = r;
    });
    return out;
}

/// One classical RK4 step of size dT; `signal` is max |v| + c for the CFL check.
template <class Law>
ConservedField step_with_speed(const ConservedField& f, const Law& law, double dT, double signal, const EulerOptions& opt) {
    double dxmin = 1;
    for (int a = 0; a < f.grid.d; ++a) dxmin = std::min(dxmin, f.grid.dx(a));
    if (!(dT > 0)) throw CflError("time step must be positive");
    if (dT > opt.cfl * dxmin / signal * (1 + 1e-12))
        throw CflError("time step " + std::to_string(dT) + " exceeds the CFL limit " + std::to_string(opt.cfl * dxmin / signal));
    const auto& g = f.grid;
    const std::size_t n = f.q.size();
    auto axpy = [&](const std::vector<ConservedVec>& k, double h) {
        std::vector<ConservedVec> y(n);
        for (std::size_t c = 0; c < n; ++c) y[c] = f.q[c] + h * k[c];
        return y;
    };
    auto k1 = euler_rhs(g, f.q, law, opt);
    auto k2 = euler_rhs(g, axpy(k1, 0.5 * dT), law, opt);
    auto k3 = euler_rhs(g, axpy(k2, 0.5 * dT), law, opt);
    auto k4 = euler_rhs(g, axpy(k3, dT), law, opt);
    ConservedField out{g, std::vector<ConservedVec>(n), f.time + dT};
    for (std::size_t c = 0; c < n; ++c) out.q[c] = f.q[c] + (dT / 6) * (k1[c] + 2.0 * k2[c] + 2.0 * k3[c] + k4[c]);
    return out;
}

template <class Law>
ConservedField step(const ConservedField& f, const Law& law, double dT, const EulerOptions& opt = {}) {
    return step_with_speed(f, law, dT, max_signal_speed(f, law, opt.threads), opt);
}

/// max over cells, axes and components of |centered difference| / dx.
inline double max_gradient(const ConservedField& f) {
    double m = 0;
    for (std::size_t c = 0; c < f.q.size(); ++c)
        for (int a = 0; a < f.grid.d; ++a) {
            ConservedVec diff = f.q[f.grid.neighbor(c, a, 1)] - f.q[f.grid.neighbor(c, a, -1)];
            m = std::max(m, diff.max_abs() * 0.5 / f.grid.dx(a));
        }
    return m;
}

struct IntegrateOptions {
    double T_end = 1;
    /// Frames are stored at these times (T_end is always included).
    std::vector<double> output_times;
    /// Additionally store every `stride`-th step (0: off).
    int stride = 0;
    /// Upper bound on the step (0: CFL only).
    double max_dt = 0;
    EulerOptions euler;
};

struct Trajectory {
    std::vector<ConservedField> frames;
    ConservedVec initial_totals;
    ConservedVec total_drift;      // max over steps of |totals - initial|
    double max_step_drift = 0;     // max over steps and components of |totals(n+1) - totals(n)|
    bool blew_up = false;
    double blowup_time = std::numeric_limits<double>::quiet_NaN();
    std::string stop_reason;
    int steps = 0;
    double wall_seconds = 0;
    double initial_gradient = 0, final_gradient = 0;

    const ConservedField& last() const { return frames.back(); }
};

/// Integrates to T_end with CFL-limited steps, landing exactly on output times.
/// Stops early when max|grad q| exceeds blowup_factor times its initial value.
template <class Law>
Trajectory integrate(const ConservedField& f0, const Law& law, const IntegrateOptions& opt) {
    const auto t0 = std::chrono::steady_clock::now();
    Trajectory tr;
    std::vector<double> outs = opt.output_times;
    outs.push_back(opt.T_end);
    std::sort(outs.begin(), outs.end());
    outs.erase(std::unique(outs.begin(), outs.end()), outs.end());
    double scale = 0;
    for (const auto& x : f0.q) scale = std::max(scale, x.max_abs());
    tr.initial_gradient = max_gradient(f0);
    const double guard = opt.euler.blowup_factor * std::max(tr.initial_gradient, 1e-10 * scale);
    tr.initial_totals = f0.totals();
    ConservedField f = f0;
    ConservedVec prev = tr.initial_totals;
    std::size_t next = 0;
    while (next < outs.size() && outs[next] <= f.time) {
        tr.frames.push_back(f);
        ++next;
    }
    double dxmin = 1;
    for (int a = 0; a < f.grid.d; ++a) dxmin = std::min(dxmin, f.grid.dx(a));
    while (next < outs.size()) {
        const double signal = max_signal_speed(f, law, opt.euler.threads);
        double dT = opt.euler.cfl * dxmin / signal;
        if (opt.max_dt > 0) dT = std::min(dT, opt.max_dt);
        bool landing = false;
        if (f.time + dT >= outs[next] - 1e-14 * std::max(1.0, outs[next])) {
            dT = outs[next] - f.time;
            landing = true;
        }
        f = step_with_speed(f, law, dT, signal, opt.euler);
        if (landing) f.time = outs[next];
        ++tr.steps;
        ConservedVec tot = f.totals();
        for (int mu = 0; mu < 5; ++mu) {
            tr.total_drift[mu] = std::max(tr.total_drift[mu], std::abs(tot[mu] - tr.initial_totals[mu]));
            tr.max_step_drift = std::max(tr.max_step_drift, std::abs(tot[mu] - prev[mu]));
        }
        prev = tot;
        tr.final_gradient = max_gradient(f);
        if (tr.final_gradient > guard) {
            tr.blew_up = true;
            tr.blowup_time = f.time;
            tr.stop_reason = "gradient guard: max|grad q| exceeded " + std::to_string(opt.euler.blowup_factor) + "x its initial value";
            tr.frames.push_back(f);
            break;
        }
        if (landing) {
            tr.frames.push_back(f);
            ++next;
        } else if (opt.stride > 0 && tr.steps % opt.stride == 0) {
            tr.frames.push_back(f);
        }
    }
    tr.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return tr;
}

/// Uniform Galilean boost by V: (rho, q + rho V, e + q.V + rho V^2/2).
inline ConservedVec boost(const ConservedVec& q, const std::array<double, 3>& v) {
    ConservedVec b = q;
    double qv = 0, v2 = 0;
    for (int j = 0; j < 3; ++j) {
        b[1 + j] += q[0] * v[j];
        qv += q[1 + j] * v[j];
        v2 += v[j] * v[j];
    }
    b[4] += qv + 0.5 * q[0] * v2;
    return b;
}

inline ConservedField boost(const ConservedField& f, const std::array<double, 3>& v) {
    ConservedField b = f;
    for (auto& x : b.q) x = boost(x, v);
    return b;
}

/// Energy density e with pressure_P(rho, mom, e) = p, by bracketing and toms748.
inline double energy_for_pressure(double rho, const std::array<double, 3>& mom, double p, const EquationOfState& eos,
                                  const NewtonOptions& opt = {}) {
    if (!(p > 0) || !(rho > 0)) throw DomainError("energy_for_pressure needs positive rho and P");
    ConservedVec q{{rho, mom[0], mom[1], mom[2], 0}};
    const double kin = kinetic_energy_density(q);
    auto f = [&](double ei) {
        q[4] = kin + ei;
        return pressure_P(q, eos, std::nullopt, opt) / p - 1;
    };
    double lo = 0.5 * eos.dimension() * p, hi = lo;
    double flo = f(lo), fhi = flo;
    for (int i = 0; i < 400 && flo >= 0; ++i) {
        try {
            const double next = lo * 0.9;
            flo = f(next);
            lo = next;
        } catch (const DomainError&) {
            throw DomainError("requested pressure lies below the admissible floor at this density");
        }
    }
    for (int i = 0; i < 200 && fhi <= 0; ++i) fhi = f(hi *= 2);
    if (flo >= 0 || fhi <= 0) throw DomainError("could not bracket the energy for the requested pressure");
    std::uintmax_t iters = 200;
    auto [a, b] = boost::math::tools::toms748_solve(f, lo, hi, flo, fhi, boost::math::tools::eps_tolerance<double>(50), iters);
    return kin + 0.5 * (a + b);
}

/// Frame CSV: X1..Xd, rho, mom1..momd, e, P, v1..vd.
template <class Law>
void write_frame_csv(std::ostream& os, const ConservedField& f, const Law& law) {
    const int d = f.grid.d;
    os.precision(17);
    for (int a = 0; a < d; ++a) os << 'X' << a + 1 << ',';
    os << "rho";
    for (int a = 0; a < d; ++a) os << ",mom" << a + 1;
    os << ",e,P";
    for (int a = 0; a < d; ++a) os << ",v" << a + 1;
    os << '\n';
    for (std::size_t c = 0; c < f.q.size(); ++c) {
        const auto x = f.grid.position(c);
        const auto& q = f.q[c];
        for (int a = 0; a < d; ++a) os << x[a] << ',';
        os << q[0];
        for (int a = 0; a < d; ++a) os << ',' << q[1 + a];
        os << ',' << q[4] << ',' << law(q, c);
        for (int a = 0; a < d; ++a) os << ',' << q[1 + a] / q[0];
        os << '\n';
    }
}

/// Run summary without wall-clock timings, so identical runs give identical files.
inline nlohmann::json trajectory_summary(const Trajectory& tr) {
    nlohmann::json j;
    j["steps"] = tr.steps;
    j["frames"] = tr.frames.size();
    j["final_time"] = tr.frames.empty() ? 0.0 : tr.last().time;
    j["initial_totals"] = tr.initial_totals.c;
    j["total_drift"] = tr.total_drift.c;
    j["max_step_drift"] = tr.max_step_drift;
    j["blew_up"] = tr.blew_up;
    j["blowup_time"] = tr.blew_up ? nlohmann::json(tr.blowup_time) : nlohmann::json(nullptr);
    j["stop_reason"] = tr.stop_reason;
    j["initial_gradient"] = tr.initial_gradient;
    j["final_gradient"] = tr.final_gradient;
    return j;
}

/// L2 (root mean square) difference of one component between two fields on the same grid.
inline double l2_difference(const ConservedField& a, const ConservedField& b, int mu) {
    if (!(a.grid == b.grid)) throw PreconditionError("fields live on different grids");
    double s = 0;
    for (std::size_t c = 0; c < a.q.size(); ++c) s += (a.q[c][mu] - b.q[c][mu]) * (a.q[c][mu] - b.q[c][mu]);
    return std::sqrt(s / double(a.q.size()));
}

/// Restriction of a fine field to a coarser grid sharing its nodes (every r-th node).
inline ConservedField restrict_to(const ConservedField& fine, const Grid& coarse) {
    ConservedField out{coarse, std::vector<ConservedVec>(coarse.cells()), fine.time};
    for (std::size_t c = 0; c < coarse.cells(); ++c) {
        auto x = coarse.coords(c);
        std::array<int, 3> y{};
        for (int a = 0; a < 3; ++a) {
            if (fine.grid.n[a] % coarse.n[a]) throw PreconditionError("grids are not nested");
            y[a] = x[a] * (fine.grid.n[a] / coarse.n[a]);
        }
        out.q[c] = fine.q[fine.grid.index(y)];
    }
    return out;
}

} // namespace qhydro

#endif
