#ifndef QHYDRO_DYNAMICS_HPP
#define QHYDRO_DYNAMICS_HPP

#include <array>
#include <cmath>
#include <numbers>
#include <string>
#include <utility>
#include <vector>

#include "entropy.hpp"
#include "evolution.hpp"
#include "gibbs.hpp"

namespace qhydro {

struct TrackedObservable {
    std::string name;
    FockOperator op;
};

/// Conserved totals N, P^1..d, H of a lattice model.
inline std::vector<TrackedObservable> conserved_totals(const LatticeModel& model) {
    std::vector<TrackedObservable> t;
    t.push_back({"N", model.densities.total(0)});
    for (int a = 0; a < model.lattice().dimension(); ++a) t.push_back({"P" + std::to_string(a + 1), model.densities.total(1 + a)});
    t.push_back({"H", model.hamiltonian});
    return t;
}

struct EvolutionResult {
    std::vector<double> times;
    std::vector<DensityMatrix> states;
    /// max_t |Tr gamma_t A - Tr gamma_0 A| per tracked observable.
    std::vector<std::pair<std::string, double>> drifts;
    /// max_t of the largest eigenvalue shift of gamma_t against gamma_0.
    double spectrum_drift = 0;

    double drift(const std::string& name) const {
        for (const auto& [n, d] : drifts)
            if (n == name) return d;
        throw PreconditionError("no drift recorded for " + name);
    }
};

/// gamma_t = e^{-iHt} gamma_0 e^{iHt} at each requested time.
inline EvolutionResult evolve(const DensityMatrix& gamma0, const FockOperator& hamiltonian, const std::vector<double>& times,
                              const std::vector<TrackedObservable>& tracked = {}, bool keep_states = true) {
    DensityMatrix g0 = gamma0;
    auto h_sectors = BlockMatrix::from_sparse(hamiltonian.matrix, Partition::full(hamiltonian.dim()));
    Propagator prop = [&] {
        // prefer the state's own blocks
        try {
            return Propagator(BlockMatrix::from_sparse(hamiltonian.matrix, g0.partition()));
        } catch (const PreconditionError&) {
            g0 = g0.to_full();
            return Propagator(std::move(h_sectors));
        }
    }();
    auto orbit = prop.orbit(g0);
    const auto spectrum0 = g0.eigenvalues();
    std::vector<double> initial;
    for (const auto& o : tracked) initial.push_back(g0.expect(o.op));

    EvolutionResult r;
    r.times = times;
    r.drifts.reserve(tracked.size());
    for (const auto& o : tracked) r.drifts.emplace_back(o.name, 0.0);
    for (double t : times) {
        DensityMatrix gt = orbit.state_at(t);
        for (std::size_t i = 0; i < tracked.size(); ++i)
            r.drifts[i].second = std::max(r.drifts[i].second, std::abs(gt.expect(tracked[i].op) - initial[i]));
        auto spec = gt.eigenvalues();
        for (std::size_t i = 0; i < spec.size(); ++i) r.spectrum_drift = std::max(r.spectrum_drift, std::abs(spec[i] - spectrum0[i]));
        if (keep_states) r.states.push_back(std::move(gt));
    }
    return r;
}

inline EvolutionResult evolve(const DensityMatrix& gamma0, const LatticeModel& model, const std::vector<double>& times,
                              bool keep_states = true) {
    return evolve(gamma0, model.hamiltonian, times, conserved_totals(model), keep_states);
}

/// G_xy = Tr gamma a+_x a_y.
inline Eigen::MatrixXcd one_body_density(const DensityMatrix& gamma, const FockSpace& fs) {
    const int m = fs.modes();
    Eigen::MatrixXcd g(m, m);
    for (int x = 0; x < m; ++x) {
        SparseOp cx = fs.creator(x).matrix;
        for (int y = 0; y < m; ++y) g(x, y) = gamma.expect_complex(SparseOp(cx * fs.annihilator(y).matrix));
    }
    return g;
}

struct MomentumOccupations {
    std::vector<std::array<double, 3>> momenta;
    std::vector<double> occupation;

    double total() const {
        double s = 0;
        for (double n : occupation) s += n;
        return s;
    }
};

/// Momentum grid p_j = 2 pi m_j / (n_j s) with m_j in (-n_j/2, n_j/2].
inline std::vector<std::array<double, 3>> momentum_grid(const Lattice& lat) {
    std::vector<std::array<double, 3>> ps;
    ps.reserve(lat.sites());
    for (int x = 0; x < lat.sites(); ++x) {
        auto c = lat.coords(x);
        std::array<double, 3> p{0, 0, 0};
        for (int a = 0; a < lat.dimension(); ++a) {
            int n = lat.extent(a), m = c[a];
            if (2 * m > n) m -= n;
            p[a] = 2 * std::numbers::pi * m / (n * lat.spacing());
        }
        ps.push_back(p);
    }
    return ps;
}

/// N_p = Tr gamma a+_p a_p with a_p = M^{-1/2} sum_x e^{-ip.x} a_x.
inline MomentumOccupations momentum_occupations(const DensityMatrix& gamma, const FockSpace& fs) {
    const Lattice& lat = fs.lattice();
    const int m = lat.sites();
    auto g = one_body_density(gamma, fs);
    MomentumOccupations out;
    out.momenta = momentum_grid(lat);
    std::vector<std::array<double, 3>> pos(m);
    for (int x = 0; x < m; ++x) {
        auto c = lat.coords(x);
        for (int a = 0; a < 3; ++a) pos[x][a] = c[a] * lat.spacing();
    }
    for (const auto& p : out.momenta) {
        Complex s = 0;
        for (int x = 0; x < m; ++x)
            for (int y = 0; y < m; ++y) {
                double ph = 0;
                for (int a = 0; a < 3; ++a) ph += p[a] * (pos[x][a] - pos[y][a]);
                s += std::polar(1.0, ph) * g(x, y);
            }
        out.occupation.push_back(s.real() / m);
    }
    return out;
}

/// eps^d sum_p e^{c p^2} N_p.
inline double velocity_cutoff_integral(const MomentumOccupations& occ, double c, double eps_d) {
    double s = 0;
    for (std::size_t i = 0; i < occ.momenta.size(); ++i) {
        const auto& p = occ.momenta[i];
        s += std::exp(c * (p[0] * p[0] + p[1] * p[1] + p[2] * p[2])) * occ.occupation[i];
    }
    return eps_d * s;
}

/// Tr gamma eps^d sum_x n_x [sum_{|x-y| <= 2R} n_y]^2, diagonal in the occupation basis.
inline double nonimplosion_observable(const DensityMatrix& gamma, const Lattice& lat, int range, double eps_d) {
    const int m = lat.sites();
    std::vector<std::vector<int>> near(m);
    for (int x = 0; x < m; ++x)
        for (int y = 0; y < m; ++y)
            if (lat.distance(x, y) / lat.spacing() <= 2.0 * range + 1e-12) near[x].push_back(y);
    const auto& part = *gamma.partition();
    double total = 0;
    for (std::size_t k = 0; k < part.count(); ++k) {
        const auto& idx = part.blocks[k];
        const auto& b = gamma.matrix().block(k);
        for (std::size_t i = 0; i < idx.size(); ++i) {
            const double w = b(i, i).real();
            if (w == 0.0) continue;
            const std::uint64_t s = idx[i];
            double f = 0;
            for (int x = 0; x < m; ++x) {
                if (!(s >> x & 1u)) continue;
                int count = 0;
                for (int y : near[x]) count += int(s >> y & 1u);
                f += double(count) * count;
            }
            total += w * f;
        }
    }
    return eps_d * total;
}

struct CutoffDiagnostics {
    double c = 0;
    int range = 0;
    std::vector<double> times;
    std::vector<double> velocity_integral;
    std::vector<double> nonimplosion;

    /// max over the series of value / value at t = 0 (1 for identically zero series).
    static double growth(const std::vector<double>& series) {
        if (series.empty() || series.front() == 0.0) {
            for (double v : series)
                if (v != 0.0) return std::numeric_limits<double>::infinity();
            return 1.0;
        }
        double g = 0;
        for (double v : series) g = std::max(g, v / series.front());
        return g;
    }
};

inline void append_cutoff_sample(CutoffDiagnostics& d, double t, const DensityMatrix& gamma, const FockSpace& fs) {
    const double eps_d = 1.0 / fs.modes();
    d.times.push_back(t);
    d.velocity_integral.push_back(velocity_cutoff_integral(momentum_occupations(gamma, fs), d.c, eps_d));
    d.nonimplosion.push_back(nonimplosion_observable(gamma, fs.lattice(), d.range, eps_d));
}

inline CutoffDiagnostics cutoff_diagnostics(const EvolutionResult& result, const FockSpace& fs, double c, int range) {
    if (!(c > 0)) throw PreconditionError("velocity cutoff constant c must be positive");
    if (result.states.size() != result.times.size()) throw PreconditionError("evolution result was computed without states");
    CutoffDiagnostics d;
    d.c = c;
    d.range = range;
    for (std::size_t i = 0; i < result.times.size(); ++i) append_cutoff_sample(d, result.times[i], result.states[i], fs);
    return d;
}

struct StationarityReport {
    std::vector<std::pair<std::string, double>> drifts;
    double max_drift = 0;
};

/// max_t |Tr omega_t A - Tr omega A| for each observable.
inline StationarityReport stationarity_probe(const DensityMatrix& omega, const FockOperator& hamiltonian,
                                             const std::vector<TrackedObservable>& observables, const std::vector<double>& times) {
    auto r = evolve(omega, hamiltonian, times, observables, false);
    StationarityReport s;
    s.drifts = r.drifts;
    for (const auto& [n, d] : s.drifts) s.max_drift = std::max(s.max_drift, d);
    return s;
}

} // namespace qhydro

#endif
