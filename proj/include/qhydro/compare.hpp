#ifndef QHYDRO_COMPARE_HPP
#define QHYDRO_COMPARE_HPP

#include <array>
#include <cmath>
#include <numbers>
#include <ostream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "dynamics.hpp"
#include "entropy.hpp"
#include "eos.hpp"
#include "euler.hpp"
#include "evolution.hpp"
#include "gibbs.hpp"
#include "parallel.hpp"

namespace qhydro {

/// Smooth test function f(X) = constant + c cos(2 pi k.X) + s sin(2 pi k.X).
struct TestFunction {
    std::array<int, 3> wavevector{0, 0, 0};
    double constant = 0, cos_coeff = 0, sin_coeff = 0;

    double operator()(const std::array<double, 3>& X) const {
        const double ph = 2 * std::numbers::pi * (wavevector[0] * X[0] + wavevector[1] * X[1] + wavevector[2] * X[2]);
        return constant + cos_coeff * std::cos(ph) + sin_coeff * std::sin(ph);
    }
};

struct CompareConfig {
    Lattice lattice{std::vector<int>{12}};
    PairPotential potential;
    FourierProfile profile;
    /// Microscopic times; the Euler side runs to T = eps t with eps = 1/M.
    std::vector<double> times{0, 1, 2, 3, 4, 5, 6};
    double smoothing_width = 2; // sites
    std::vector<TestFunction> test_functions;
    double rate_dt = 0.01;
    /// Euler nodes per lattice site along each axis.
    int refine = 8;
    EulerOptions euler;
    double cutoff_c = 0.1;
    /// Non-implosion range R; -1 takes the potential's range.
    int cutoff_range = 1;
    OnePhaseBox box;
    int threads = 1;
};

/// Periodic Gaussian smoothing of site values, sigma = width in sites.
inline std::vector<double> smooth_sites(const Lattice& lat, const std::vector<double>& v, double width) {
    const int m = lat.sites();
    if (width <= 0) return v;
    std::vector<double> out(m, 0.0);
    for (int x = 0; x < m; ++x) {
        double wsum = 0, acc = 0;
        for (int y = 0; y < m; ++y) {
            auto d = lat.displacement(x, y);
            const double r2 = double(d[0]) * d[0] + double(d[1]) * d[1] + double(d[2]) * d[2];
            const double w = std::exp(-0.5 * r2 / (width * width));
            wsum += w;
            acc += w * v[y];
        }
        out[x] = acc / wsum;
    }
    return out;
}

struct RateCheck {
    std::vector<int> components;
    /// [component][site], smoothed.
    std::vector<std::vector<double>> quantum, euler;
    double relative_error = 0; // ||quantum - euler|| / ||euler||
    double null_error = 1;     // same with the quantum rate replaced by zero
    double null_ratio = 0;     // null_error / relative_error
};

struct CompareFrame {
    double t = 0, T = 0;
    /// [component][site]: smoothed quantum expectations and Euler values at X = eps x.
    std::vector<std::vector<double>> quantum, euler;
    /// [test function][component]: eps^d sum_x f(eps x)(<u_x> - q(eps x)).
    std::vector<std::vector<double>> residuals;
    double entropy_density = 0;
};

struct CompareReport {
    std::vector<int> components;
    std::vector<CompareFrame> frames;
    RateCheck rate;
    CutoffDiagnostics cutoff;
    EvolutionResult evolution; // drifts only
    nlohmann::json euler_summary;
    std::vector<std::string> warnings;
    int sites = 0, dimension = 1;

    nlohmann::json to_json() const;
};

namespace detail {

inline std::vector<std::vector<double>> component_rows(const std::vector<ConservedVec>& sites, const std::vector<int>& comps) {
    std::vector<std::vector<double>> rows(comps.size(), std::vector<double>(sites.size()));
    for (std::size_t k = 0; k < comps.size(); ++k)
        for (std::size_t x = 0; x < sites.size(); ++x) rows[k][x] = sites[x][comps[k]];
    return rows;
}

} // namespace detail

/// Desk-scale version of the hydrodynamic diagram: exact evolution of the
/// local Gibbs state against the Euler solution with the matching lattice EOS.
inline CompareReport hydro_compare(const CompareConfig& cfg) {
    const Lattice& lat = cfg.lattice;
    const int m = lat.sites(), d = lat.dimension();
    const double eps = 1.0 / m;
    const double eps_d = std::pow(eps, d);
    CompareReport rep;
    rep.sites = m;
    rep.dimension = d;
    if (!cfg.potential.is_zero())
        rep.warnings.push_back("W != 0: qualitative mode, the Euler side uses the free lattice equation of state");

    const auto model = LatticeModel::build(lat, cfg.potential);
    LatticeFreeGas eos(lat.dims(), lat.spacing());
    rep.components = eos.active();
    const auto& comps = rep.components;

    // t = 0 state
    const LambdaField field0 = cfg.profile.sample(lat, 0);
    require_positive_beta(field0);
    const auto gibbs0 = local_gibbs(model, field0);
    const DensityMatrix& gamma0 = gibbs0.state;
    const SparseOp k0 = exponent_operator(model, field0);
    const double gamma_log_gamma = gamma0.expect(k0) - gibbs0.log_partition;

    for (int x = 0; x < m; ++x) {
        auto q = eos.q_of_lambda(field0[x]);
        if (!cfg.box.contains(q)) {
            rep.warnings.push_back("site " + std::to_string(x) + " starts outside the declared one-phase box");
            break;
        }
    }

    // exact evolution
    Propagator prop(model.hamiltonian_blocks());
    auto orbit = prop.orbit(gamma0);
    std::vector<double> all_times = cfg.times;
    all_times.push_back(-cfg.rate_dt);
    all_times.push_back(cfg.rate_dt);
    std::vector<DensityMatrix> states(all_times.size());
    parallel_for(all_times.size(), cfg.threads, [&](std::size_t i) { states[i] = orbit.state_at(all_times[i]); });

    auto totals = conserved_totals(model);
    rep.evolution.times = cfg.times;
    for (const auto& o : totals) {
        const double v0 = gamma0.expect(o.op);
        double drift = 0;
        for (std::size_t i = 0; i < cfg.times.size(); ++i) drift = std::max(drift, std::abs(states[i].expect(o.op) - v0));
        rep.evolution.drifts.emplace_back(o.name, drift);
    }

    // Euler side on the refined node grid
    std::vector<int> cells;
    for (int a = 0; a < d; ++a) cells.push_back(lat.extent(a) * cfg.refine);
    const Grid grid = Grid::make(cells);
    ConservedField f0{grid, std::vector<ConservedVec>(grid.cells()), 0};
    EosPressure law(eos, grid.cells());
    for (std::size_t c = 0; c < grid.cells(); ++c) f0.q[c] = eos.q_of_lambda(cfg.profile(grid.position(c), 0));
    IntegrateOptions iopt;
    iopt.euler = cfg.euler;
    iopt.euler.threads = cfg.threads;
    double t_max = 0;
    for (double t : cfg.times) {
        iopt.output_times.push_back(eps * t);
        t_max = std::max(t_max, t);
    }
    iopt.T_end = eps * t_max;
    Trajectory traj = t_max > 0 ? integrate(f0, law, iopt) : Trajectory{};
    if (t_max == 0) traj.frames.push_back(f0);
    rep.euler_summary = trajectory_summary(traj);
    if (traj.blew_up) rep.warnings.push_back("Euler run stopped early: " + traj.stop_reason);

    auto site_node = [&](int x) {
        auto c = lat.coords(x);
        std::array<int, 3> n{0, 0, 0};
        for (int a = 0; a < d; ++a) n[a] = c[a] * cfg.refine;
        return grid.index(n);
    };
    auto frame_at = [&](double T) -> const ConservedField* {
        for (const auto& f : traj.frames)
            if (std::abs(f.time - T) <= 1e-12 * std::max(1.0, T)) return &f;
        return nullptr;
    };

    CutoffDiagnostics cut;
    cut.c = cfg.cutoff_c;
    cut.range = cfg.cutoff_range >= 0 ? cfg.cutoff_range : cfg.potential.range();

    rep.frames.resize(cfg.times.size());
    std::vector<LambdaVec> warm(m);
    for (int x = 0; x < m; ++x) warm[x] = field0[x];
    for (std::size_t i = 0; i < cfg.times.size(); ++i) {
        CompareFrame& fr = rep.frames[i];
        fr.t = cfg.times[i];
        fr.T = eps * fr.t;
        auto micro = expectations(states[i], model.densities);
        const ConservedField* ef = frame_at(fr.T);
        if (!ef) {
            rep.frames.resize(i);
            rep.warnings.push_back("no Euler frame at t = " + std::to_string(fr.t) + "; comparison truncated");
            break;
        }
        std::vector<ConservedVec> euler_sites(m);
        for (int x = 0; x < m; ++x) euler_sites[x] = ef->q[site_node(x)];
        auto qraw = detail::component_rows(micro.sites, comps);
        auto eraw = detail::component_rows(euler_sites, comps);
        fr.quantum.resize(comps.size());
        fr.euler.resize(comps.size());
        for (std::size_t k = 0; k < comps.size(); ++k) {
            fr.quantum[k] = smooth_sites(lat, qraw[k], cfg.smoothing_width);
            fr.euler[k] = smooth_sites(lat, eraw[k], cfg.smoothing_width);
        }
        for (const auto& tf : cfg.test_functions) {
            std::vector<double> r(comps.size(), 0.0);
            for (std::size_t k = 0; k < comps.size(); ++k)
                for (int x = 0; x < m; ++x) r[k] += eps_d * tf(lat.macro_position(x)) * (qraw[k][x] - eraw[k][x]);
            fr.residuals.push_back(std::move(r));
        }
        // omega_t from the Euler fields; at t = 0 it is the initial local Gibbs state itself
        if (fr.t == 0) {
            fr.entropy_density = 0;
        } else {
            LambdaField lt;
            lt.values.resize(m);
            for (int x = 0; x < m; ++x) {
                lt.values[x] = lambda_of_q(euler_sites[x], eos, warm[x]);
                warm[x] = lt.values[x];
            }
            const SparseOp kt = exponent_operator(model, lt);
            const double log_z = log_trace_exp(eigh(BlockMatrix::from_sparse(kt, model.sectors()), false));
            fr.entropy_density = eps_d * relative_entropy_to_exponential(states[i], gamma_log_gamma, kt, log_z);
        }
        append_cutoff_sample(cut, fr.t, states[i], model.space);
    }
    rep.cutoff = std::move(cut);

    // t = 0 rates: quantum centred difference against -eps div A(q(X, 0))
    {
        const std::size_t ip = all_times.size() - 1, im = all_times.size() - 2;
        auto up = expectations(states[ip], model.densities), dn = expectations(states[im], model.densities);
        std::vector<ConservedVec> qrate(m), erate(m);
        for (int x = 0; x < m; ++x) qrate[x] = (1.0 / (2 * cfg.rate_dt)) * (up.sites[x] - dn.sites[x]);
        const double h = 1e-4;
        for (int x = 0; x < m; ++x) {
            const auto X = lat.macro_position(x);
            ConservedVec div;
            for (int a = 0; a < d; ++a) {
                auto A = [&](double s) {
                    auto Y = X;
                    Y[a] += s;
                    const LambdaVec l = cfg.profile(Y, 0);
                    const auto p = eos.evaluate(l, 1);
                    return flux_row(p.q, p.psi / l[4], a);
                };
                div += (1.0 / (2 * h)) * (A(h) - A(-h));
            }
            erate[x] = -eps * div;
        }
        RateCheck& rc = rep.rate;
        rc.components = comps;
        auto qr = detail::component_rows(qrate, comps), er = detail::component_rows(erate, comps);
        double num = 0, den = 0;
        for (std::size_t k = 0; k < comps.size(); ++k) {
            rc.quantum.push_back(smooth_sites(lat, qr[k], cfg.smoothing_width));
            rc.euler.push_back(smooth_sites(lat, er[k], cfg.smoothing_width));
            for (int x = 0; x < m; ++x) {
                num += std::pow(rc.quantum[k][x] - rc.euler[k][x], 2);
                den += std::pow(rc.euler[k][x], 2);
            }
        }
        if (den == 0) {
            rc.relative_error = std::sqrt(num);
            rc.null_error = 0;
            rc.null_ratio = 0;
        } else {
            rc.relative_error = std::sqrt(num / den);
            rc.null_error = 1;
            rc.null_ratio = rc.relative_error > 0 ? rc.null_error / rc.relative_error : std::numeric_limits<double>::infinity();
        }
    }
    return rep;
}

inline std::string component_name(int mu) {
    if (mu == 0) return "rho";
    if (mu == 4) return "e";
    return "mom" + std::to_string(mu);
}

inline nlohmann::json CompareReport::to_json() const {
    nlohmann::json j;
    j["sites"] = sites;
    j["dimension"] = dimension;
    std::vector<std::string> names;
    for (int c : components) names.push_back(component_name(c));
    j["components"] = names;
    auto finite = [](double x) { return std::isfinite(x) ? nlohmann::json(x) : nlohmann::json("inf"); };
    j["rate_check"] = {{"relative_l2_error", finite(rate.relative_error)},
                       {"null_error", rate.null_error},
                       {"null_ratio", finite(rate.null_ratio)},
                       {"quantum", rate.quantum},
                       {"euler", rate.euler}};
    nlohmann::json ent = nlohmann::json::array(), res = nlohmann::json::array();
    for (const auto& f : frames) {
        ent.push_back({{"t", f.t}, {"T", f.T}, {"entropy_density", f.entropy_density}});
        res.push_back({{"t", f.t}, {"residuals", f.residuals}});
    }
    j["entropy_series"] = ent;
    j["test_function_residuals"] = res;
    j["cutoff"] = {{"c", cutoff.c},
                   {"range", cutoff.range},
                   {"times", cutoff.times},
                   {"velocity_integral", cutoff.velocity_integral},
                   {"nonimplosion", cutoff.nonimplosion},
                   {"velocity_growth", finite(CutoffDiagnostics::growth(cutoff.velocity_integral))},
                   {"nonimplosion_growth", finite(CutoffDiagnostics::growth(cutoff.nonimplosion))}};
    nlohmann::json drifts = nlohmann::json::object();
    for (const auto& [n, v] : evolution.drifts) drifts[n] = v;
    j["quantum_drifts"] = drifts;
    j["euler"] = euler_summary;
    j["warnings"] = warnings;
    return j;
}

/// CSV for one frame: X, then smoothed quantum and Euler columns per component.
inline void write_compare_frame_csv(std::ostream& os, const CompareReport& rep, const CompareFrame& f, const Lattice& lat) {
    os.precision(17);
    for (int a = 0; a < lat.dimension(); ++a) os << 'X' << a + 1 << ',';
    for (std::size_t k = 0; k < rep.components.size(); ++k) os << component_name(rep.components[k]) << "_q,";
    for (std::size_t k = 0; k < rep.components.size(); ++k)
        os << component_name(rep.components[k]) << "_euler" << (k + 1 < rep.components.size() ? "," : "\n");
    for (int x = 0; x < lat.sites(); ++x) {
        const auto X = lat.macro_position(x);
        for (int a = 0; a < lat.dimension(); ++a) os << X[a] << ',';
        for (std::size_t k = 0; k < rep.components.size(); ++k) os << f.quantum[k][x] << ',';
        for (std::size_t k = 0; k < rep.components.size(); ++k) os << f.euler[k][x] << (k + 1 < rep.components.size() ? "," : "\n");
    }
}

} // namespace qhydro

#endif
