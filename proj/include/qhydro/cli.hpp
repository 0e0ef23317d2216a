#ifndef QHYDRO_CLI_HPP
#define QHYDRO_CLI_HPP

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "acceptance.hpp"
#include "compare.hpp"
#include "config.hpp"
#include "dynamics.hpp"
#include "entropy.hpp"
#include "eos.hpp"
#include "euler.hpp"
#include "fock.hpp"
#include "gibbs.hpp"
#include "hash.hpp"

#ifndef QHYDRO_VERSION
#define QHYDRO_VERSION "0.0.0"
#endif

namespace qhydro::cli {

namespace fs = std::filesystem;

struct Run {
    std::string mode;
    json config;
    fs::path out;
    std::uint64_t seed = 1;
    int threads = 1;
    std::vector<std::string> files; // relative to out
    std::ostream* log = &std::cerr;

    /// Writes an artifact under the output directory and records it for the manifest.
    void write(const std::string& name, const std::string& content) {
        const fs::path p = out / name;
        fs::create_directories(p.parent_path());
        std::ofstream os(p, std::ios::binary);
        if (!os) throw PreconditionError("cannot write " + p.string());
        os << content;
        track(name);
    }
    void track(const std::string& name) {
        if (std::find(files.begin(), files.end(), name) == files.end()) files.push_back(name);
    }
    void timing(const std::string& what, double seconds) const {
        *log << "[timing] " << what << ": " << std::fixed << std::setprecision(3) << seconds << " s\n";
        log->unsetf(std::ios::floatfield);
    }
};

inline std::string numbered(const std::string& stem, std::size_t i, const std::string& ext) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "%04zu", i);
    return stem + buf + ext;
}

inline void write_manifest(Run& r) {
    std::sort(r.files.begin(), r.files.end());
    json files = json::array();
    for (const auto& f : r.files) {
        const auto bytes = read_file((r.out / f).string());
        files.push_back({{"path", f}, {"sha256", sha256_hex(bytes)}, {"bytes", bytes.size()}});
    }
    json m = {{"mode", r.mode},
              {"seed", r.seed},
              {"config_sha256", sha256_hex(r.config.dump())},
              {"build", {{"version", QHYDRO_VERSION}, {"compiler", __VERSION__}}},
              {"files", files}};
    std::ofstream(r.out / "manifest.json") << m.dump(2) << '\n';
}

using Clock = std::chrono::steady_clock;
inline double since(Clock::time_point t) { return std::chrono::duration<double>(Clock::now() - t).count(); }

// ----- eos -----

inline json eos_header(const json& c, const EquationOfState& m, const NewtonOptions& n) {
    json h = {{"kind", m.kind()}, {"newton", {{"tolerance", n.tolerance}, {"acceptable", n.acceptable}, {"max_iterations", n.max_iterations}}}};
    const json e = c.value("eos", json::object());
    if (m.kind() == "continuum_free") {
        QuadratureOptions q;
        h["quadrature"] = {{"tolerance", e.value("quadrature", json::object()).value("tolerance", q.tolerance)},
                           {"accept", e.value("quadrature", json::object()).value("accept", q.accept)}};
        h["M"] = nullptr;
    }
    if (m.kind() == "lattice_free") h["M"] = e.at("modes");
    h["W"] = c.contains("lattice") ? c["lattice"].value("W", json::object()) : json::object();
    return h;
}

inline json default_grid() {
    return {{"lambda0", {{"min", -2.0}, {"max", 2.0}, {"count", 9}}}, {"lambda4", {{"min", 0.5}, {"max", 2.0}, {"count", 4}}}};
}

inline int run_eos(Run& r) {
    const auto t0 = Clock::now();
    const json e = r.config.value("eos", json::object());
    const json grid = e.value("grid", default_grid());
    const auto l0 = range_from(grid.at("lambda0")), l4 = range_from(grid.at("lambda4"));
    const auto l1 = grid.contains("lambda1") ? range_from(grid.at("lambda1")) : std::vector<double>{0.0};
    const NewtonOptions nopt = newton_from(r.config);
    std::ostringstream table;
    json summary = {{"mode", "eos"}};
    if (e.value("kind", "continuum") == "interacting") {
        if (!r.config.contains("lattice")) throw ConfigError("/lattice", "the interacting equation of state needs a lattice");
        const Lattice lat = lattice_from(r.config);
        const PairPotential w = potential_from(r.config, lat);
        TabulationOptions topt;
        topt.threads = r.threads;
        auto tab = tabulate_interacting(lat, w, l0, l4, topt);
        std::vector<LambdaVec> nodes;
        for (double a : l0)
            for (double b : l4) nodes.push_back(LambdaVec{{a, 0, 0, 0, b}});
        json header = eos_header(r.config, *tab.model, nopt);
        header["M"] = lat.sites();
        double worst = 0;
        for (const auto& c : tab.model->residuals) worst = std::max({worst, c.psi_error, c.density_error});
        header["max_cell_residual"] = worst;
        write_eos_table(table, *tab.model, nodes, header);
        std::ostringstream res;
        res.precision(17);
        res << "lambda0,lambda4,psi_error,density_error\n";
        for (const auto& c : tab.model->residuals) res << c.lambda0 << ',' << c.lambda4 << ',' << c.psi_error << ',' << c.density_error << '\n';
        r.write("eos_residuals.csv", res.str());
        summary["warnings"] = tab.warnings;
        summary["max_cell_residual"] = worst;
        for (const auto& wmsg : tab.warnings) *r.log << "warning: " << wmsg << '\n';
    } else {
        auto m = free_eos_from(r.config);
        std::vector<LambdaVec> pts;
        for (double a : l0)
            for (double u : l1)
                for (double b : l4) {
                    LambdaVec l{{a, 0, 0, 0, b}};
                    const auto act = m->active();
                    if (u != 0 && std::find(act.begin(), act.end(), 1) == act.end())
                        throw ConfigError("/eos/grid/lambda1", "this model carries no momentum along axis 1");
                    l[1] = u;
                    pts.push_back(l);
                }
        write_eos_table(table, *m, pts, eos_header(r.config, *m, nopt));
        summary["points"] = pts.size();
    }
    r.write("eos_table.csv", table.str());
    r.write("eos_summary.json", summary.dump(2) + "\n");
    r.timing("eos", since(t0));
    return 0;
}

// ----- euler -----

inline double series_value(const json& s, const std::array<double, 3>& X, double fallback) {
    double v = s.value("base", fallback);
    for (const auto& m : s.value("modes", json::array())) {
        auto k = m.at("k").get<std::vector<int>>();
        double ph = 0;
        for (std::size_t a = 0; a < k.size(); ++a) ph += 2 * std::numbers::pi * k[a] * X[a];
        v += m.value("cos", 0.0) * std::cos(ph) + m.value("sin", 0.0) * std::sin(ph);
    }
    return v;
}

inline ConservedField read_field_csv(const std::string& path, const Grid& g) {
    std::ifstream in(path);
    if (!in) throw ConfigError("/euler/initial/path", "cannot read " + path);
    std::string line;
    std::getline(in, line);
    std::vector<std::string> cols;
    {
        std::stringstream ss(line);
        std::string c;
        while (std::getline(ss, c, ',')) cols.push_back(c);
    }
    auto col = [&](const std::string& name) -> int {
        auto it = std::find(cols.begin(), cols.end(), name);
        return it == cols.end() ? -1 : int(it - cols.begin());
    };
    const int irho = col("rho"), ie = col("e");
    if (irho < 0 || ie < 0) throw ConfigError("/euler/initial/path", "CSV needs rho and e columns");
    ConservedField f{g, {}, 0};
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<double> v;
        std::stringstream ss(line);
        std::string c;
        while (std::getline(ss, c, ',')) v.push_back(std::stod(c));
        if (v.size() != cols.size()) throw ConfigError("/euler/initial/path", "ragged CSV row");
        ConservedVec q;
        q[0] = v[irho];
        q[4] = v[ie];
        for (int a = 0; a < 3; ++a)
            if (int i = col("mom" + std::to_string(a + 1)); i >= 0) q[1 + a] = v[i];
        f.q.push_back(q);
    }
    if (f.q.size() != g.cells()) throw ConfigError("/euler/initial/path", "CSV has " + std::to_string(f.q.size()) + " rows for " + std::to_string(g.cells()) + " cells");
    return f;
}

inline ConservedField initial_field(const Run& r, const Grid& g, const EquationOfState& eos) {
    const json& e = r.config.at("euler");
    const json init = e.value("initial", json{{"kind", "lambda"}});
    const std::string kind = init.at("kind");
    ConservedField f{g, std::vector<ConservedVec>(g.cells()), 0};
    if (kind == "csv") {
        if (!init.contains("path")) throw ConfigError("/euler/initial/path", "required for CSV initial data");
        return read_field_csv(init.at("path"), g);
    }
    if (kind == "lambda") {
        if (!r.config.contains("lambda")) throw ConfigError("/lambda", "lambda profile required for lambda initial data");
        const FourierProfile p = profile_from(r.config);
        for (std::size_t c = 0; c < g.cells(); ++c) {
            LambdaVec l = p(g.position(c), 0);
            for (int j = g.d + 1; j <= 3; ++j) l[j] = 0;
            f.q[c] = eos.q_of_lambda(l);
        }
        return f;
    }
    if (!init.contains("rho") || !init.contains("pressure")) throw ConfigError("/euler/initial", "fields need rho and pressure series");
    const NewtonOptions nopt = newton_from(r.config);
    for (std::size_t c = 0; c < g.cells(); ++c) {
        const auto X = g.position(c);
        const double rho = series_value(init.at("rho"), X, 0.0);
        std::array<double, 3> mom{0, 0, 0};
        const json vel = init.value("velocity", json::array());
        if (int(vel.size()) > g.d) throw ConfigError("/euler/initial/velocity", "more components than grid axes");
        for (std::size_t a = 0; a < vel.size(); ++a) mom[a] = rho * series_value(vel[a], X, 0.0);
        const double p = series_value(init.at("pressure"), X, 0.0);
        f.q[c] = ConservedVec{{rho, mom[0], mom[1], mom[2], energy_for_pressure(rho, mom, p, eos, nopt)}};
    }
    return f;
}

inline std::shared_ptr<EquationOfState> euler_eos(Run& r) {
    const json e = r.config.value("eos", json::object());
    if (e.value("kind", "continuum") != "interacting") return free_eos_from(r.config);
    if (!r.config.contains("lattice")) throw ConfigError("/lattice", "the interacting equation of state needs a lattice");
    const Lattice lat = lattice_from(r.config);
    const json grid = e.value("grid", default_grid());
    TabulationOptions topt;
    topt.threads = r.threads;
    auto tab = tabulate_interacting(lat, potential_from(r.config, lat), range_from(grid.at("lambda0")), range_from(grid.at("lambda4")), topt);
    for (const auto& w : tab.warnings) *r.log << "warning: " << w << '\n';
    if (e.contains("box")) tab.model->box = box_from(e.at("box"));
    return tab.model;
}

template <class Law>
int euler_with(Run& r, const ConservedField& f0, const Law& law, const std::string& law_name, const EquationOfState& eos) {
    const json& e = r.config.at("euler");
    IntegrateOptions opt;
    opt.T_end = e.value("T_end", 0.1);
    if (e.contains("output_times")) opt.output_times = e.at("output_times").get<std::vector<double>>();
    opt.max_dt = e.value("max_dt", 0.0);
    opt.euler.cfl = e.value("cfl", 0.4);
    opt.euler.dissipation = e.value("dissipation", 0.0);
    opt.euler.blowup_factor = e.value("blowup_factor", 50.0);
    opt.euler.threads = r.threads;
    auto tr = integrate(f0, law, opt);
    for (std::size_t i = 0; i < tr.frames.size(); ++i) {
        std::ostringstream os;
        write_frame_csv(os, tr.frames[i], law);
        r.write(numbered("euler_frame_", i, ".csv"), os.str());
    }
    json s = trajectory_summary(tr);
    json times = json::array();
    for (const auto& fr : tr.frames) times.push_back(fr.time);
    s["frame_times"] = times;
    s["pressure_law"] = law_name;
    s["eos"] = eos.describe();
    s["cells"] = e.at("cells");
    r.write("euler_summary.json", s.dump(2) + "\n");
    r.timing("euler integration (" + std::to_string(tr.steps) + " steps)", tr.wall_seconds);
    if (tr.blew_up) *r.log << "warning: " << tr.stop_reason << '\n';
    return 0;
}

inline int run_euler(Run& r) {
    if (!r.config.contains("euler")) throw ConfigError("/euler", "required for mode euler");
    const json& e = r.config.at("euler");
    const Grid g = Grid::make(e.at("cells").get<std::vector<int>>());
    auto eos = euler_eos(r);
    if (g.d > eos->dimension()) throw ConfigError("/euler/cells", "grid has more axes than the equation of state");
    const ConservedField f0 = initial_field(r, g, *eos);
    const std::string law = e.value("pressure", "eos");
    if (law == "virial") {
        if (eos->kind() != "continuum_free") throw ConfigError("/euler/pressure", "the virial law needs the continuum free gas");
        return euler_with(r, f0, VirialPressure{eos->dimension()}, law, *eos);
    }
    if (law == "cached") {
        if (!e.contains("cache")) throw ConfigError("/euler/cache", "required for the cached pressure law");
        const auto t0 = Clock::now();
        auto cache = CachedPressure::build(*eos, range_from(e["cache"]["rho"]), range_from(e["cache"]["e"]), r.threads, newton_from(r.config));
        r.timing("pressure cache", since(t0));
        std::ostringstream os;
        cache.write(os);
        r.write("pressure_cache.csv", os.str());
        return euler_with(r, f0, cache, law, *eos);
    }
    return euler_with(r, f0, EosPressure(*eos, g.cells(), newton_from(r.config)), law, *eos);
}

// ----- quantum -----

inline void require_lattice(const Run& r) {
    if (!r.config.contains("lattice")) throw ConfigError("/lattice", "required for mode " + r.mode);
    if (!r.config.contains("lambda")) throw ConfigError("/lambda", "required for mode " + r.mode);
}

inline int run_quantum(Run& r) {
    require_lattice(r);
    const auto t0 = Clock::now();
    const Lattice lat = lattice_from(r.config);
    const PairPotential w = potential_from(r.config, lat);
    const FourierProfile prof = profile_from(r.config);
    const auto model = LatticeModel::build(lat, w);
    const json q = r.config.value("quantum", json::object());
    std::vector<double> times = q.contains("times") ? q.at("times").get<std::vector<double>>() : acceptance::time_grid(10, 10);
    const auto field = prof.sample(lat, 0);
    const auto gamma0 = local_gibbs_state(model, field);
    auto ev = evolve(gamma0, model, times);
    const json cut = q.value("cutoff", json::object());
    auto diag = cutoff_diagnostics(ev, model.space, cut.value("c", 0.1), cut.value("range", std::max(1, w.range())));
    const auto omega = gibbs_state(prof.base, model);
    const double eps = 1.0 / lat.sites();
    json entropy = json::array();
    for (std::size_t i = 0; i < ev.states.size(); ++i) {
        std::ostringstream os;
        write_occupation_csv(os, expectations(ev.states[i], model.densities), lat.dimension());
        r.write(numbered("quantum_occupations_", i, ".csv"), os.str());
        auto rep = with_density(relative_entropy(ev.states[i], omega), eps, lat.dimension());
        entropy.push_back({{"t", times[i]}, {"relative_to_uniform_gibbs", rep.to_json()}});
    }
    {
        auto ev0 = gamma0.eigenvalues();
        std::sort(ev0.begin(), ev0.end(), std::greater<>());
        std::ostringstream os;
        os.precision(17);
        os << "index,eigenvalue\n";
        for (std::size_t i = 0; i < ev0.size(); ++i) os << i << ',' << ev0[i] << '\n';
        r.write("quantum_spectrum.csv", os.str());
    }
    json drifts = json::object();
    for (const auto& [n, d] : ev.drifts) drifts[n] = d;
    json s = {{"sites", lat.sites()},
              {"times", times},
              {"drifts", drifts},
              {"spectrum_drift", ev.spectrum_drift},
              {"entropy", entropy},
              {"cutoff",
               {{"c", diag.c},
                {"range", diag.range},
                {"velocity_integral", diag.velocity_integral},
                {"nonimplosion", diag.nonimplosion}}}};
    if (!w.is_zero()) s["note"] = "lattice momentum is not conserved for W != 0; its drift is reported, not asserted";
    r.write("quantum_summary.json", s.dump(2) + "\n");
    r.timing("quantum evolution", since(t0));
    return 0;
}

// ----- compare -----

inline int run_compare(Run& r) {
    require_lattice(r);
    const auto t0 = Clock::now();
    auto cc = compare_config_from(r.config, r.threads);
    auto rep = hydro_compare(cc);
    for (std::size_t i = 0; i < rep.frames.size(); ++i) {
        std::ostringstream os;
        write_compare_frame_csv(os, rep, rep.frames[i], cc.lattice);
        r.write(numbered("compare_frame_", i, ".csv"), os.str());
    }
    r.write("compare_report.json", rep.to_json().dump(2) + "\n");
    for (const auto& w : rep.warnings) *r.log << "warning: " << w << '\n';
    r.timing("compare", since(t0));
    return 0;
}

// ----- diagnostics -----

inline int run_diag(Run& r) {
    const auto t0 = Clock::now();
    const json d = r.config.value("diagnostics", json::object());
    json rep = json::object();
    json car = json::array();
    for (const auto& dims : d.value("car_lattices", json::array({json::array({8}), json::array({2, 3})}))) {
        auto v = dims.get<std::vector<int>>();
        int sites = 1;
        for (int x : v) sites *= x;
        if (sites > 12) throw ConfigError("/diagnostics/car_lattices", "CAR check is limited to 12 sites");
        car.push_back({{"dims", v}, {"max_defect", acceptance::car_defect(Lattice(v))}});
    }
    rep["car"] = car;
    const std::vector<int> sizes = d.value("boundary_sizes", std::vector<int>{4, 6, 8, 10, 12});
    std::vector<std::array<int, 2>> pairs;
    for (const auto& p : d.value("boundary_pairs", json::array({json::array({0, 4})}))) pairs.push_back({p[0].get<int>(), p[1].get<int>()});
    PairPotential w;
    if (r.config.contains("lattice")) {
        Lattice lat = lattice_from(r.config);
        w = potential_from(r.config, lat);
    }
    std::ostringstream scan;
    scan.precision(17);
    scan << "sites,region,mu,nu,norm\n";
    for (int m : sizes)
        for (const auto& row : commutator_boundary_scan({m}, {m / 2}, pairs, w))
            scan << row.sites << ',' << row.region << ',' << row.mu << ',' << row.nu << ',' << row.norm << '\n';
    r.write("boundary_scan.csv", scan.str());
    if (r.config.contains("lattice") && r.config.contains("lambda")) {
        const Lattice lat = lattice_from(r.config);
        const auto model = LatticeModel::build(lat, w);
        const LambdaVec base = profile_from(r.config).base;
        auto dual = duality_check(base, model, d.value("fd_step", 1e-4));
        rep["duality"] = {{"lambda", base.c}, {"finite_difference", dual.finite_difference}, {"expectation", dual.expectation},
                          {"max_deviation", dual.max_deviation}};
        const auto omega = gibbs_state(base, model);
        auto st = stationarity_probe(omega, model.hamiltonian, conserved_totals(model),
                                     d.value("stationarity_times", acceptance::time_grid(10, 10)));
        json sd = json::object();
        for (const auto& [n, v] : st.drifts) sd[n] = v;
        rep["stationarity"] = {{"drifts", sd}, {"max_drift", st.max_drift}};
        if (d.value("export_operators", false)) {
            std::ostringstream os;
            os.precision(17);
            write_coo(os, model.hamiltonian);
            r.write("hamiltonian_coo.txt", os.str());
        }
    }
    r.write("diag_report.json", rep.dump(2) + "\n");
    r.timing("diagnostics", since(t0));
    return 0;
}

// ----- selftest -----

inline int run_selftest(Run& r, std::ostream& out) {
    const json st = r.config.value("selftest", json::object());
    AcceptanceOptions o;
    o.seed = r.seed;
    o.threads = r.threads;
    o.tol = AcceptanceTolerances::from_json(st.value("tolerances", json::object()));
    const fs::path cache_rel = st.value("eos_cache", std::string("eos_cache"));
    if (cache_rel.is_absolute() || cache_rel.lexically_normal().string().rfind("..", 0) == 0)
        throw ConfigError("/selftest/eos_cache", "must be a relative path inside the output directory");
    o.eos_cache_dir = (r.out / cache_rel).string();
    bool all = true;
    json results = json::array();
    auto rs = run_acceptance(o, [&](const CriterionResult& c) {
        out << c.line() << std::endl;
        r.timing("criterion " + std::to_string(c.id), c.seconds);
    });
    for (const auto& c : rs) {
        all = all && c.passed && !c.skipped;
        results.push_back(c.to_json());
    }
    for (const char* f : {"pressure_cache_d3.csv", "pressure_cache_d3.sha256"})
        if (fs::exists(fs::path(o.eos_cache_dir) / f)) r.track((cache_rel / f).string());
    r.write("selftest_report.json", json{{"seed", r.seed}, {"all_passed", all}, {"criteria", results}}.dump(2) + "\n");
    out << (all ? "selftest: all criteria passed" : "selftest: FAILED") << std::endl;
    return all ? 0 : 1;
}

// ----- entry point -----

inline json error_payload(const std::string& kind, const std::exception& e) {
    json j = {{"error", kind}, {"message", e.what()}};
    if (auto c = dynamic_cast<const ConvergenceError*>(&e)) {
        j["residual"] = c->residual;
        j["iterations"] = c->iterations;
    }
    if (auto c = dynamic_cast<const InadmissibleCell*>(&e)) j["cell"] = c->cell;
    if (auto c = dynamic_cast<const ResourceError*>(&e)) j["required_bytes"] = c->required_bytes;
    return j;
}

/// Runs the command line; returns the process exit status
/// (0 success, 1 selftest failure, 2 configuration error, 3 numerical failure).
inline int run(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
    CLI::App app{"quantum hydrodynamics desk experiments"};
    app.require_subcommand(1, 1);
    std::string config_path, out_dir;
    std::optional<std::uint64_t> seed;
    std::optional<int> threads;
    std::vector<std::string> sets;
    app.add_option("--config", config_path, "experiment config JSON");
    app.add_option("--out", out_dir, "output directory");
    app.add_option("--seed", seed, "seed for randomized suites");
    app.add_option("--threads", threads, "worker threads (0: all cores)");
    app.add_option("--set", sets, "override a config entry, key.path=value")->take_all()->allow_extra_args(false);
    const std::vector<std::pair<std::string, std::string>> subs = {{"eos", "tabulate an equation of state"},
                                                                   {"euler", "run the Euler solver"},
                                                                   {"quantum", "evolve a local Gibbs state exactly"},
                                                                   {"compare", "quantum vs Euler comparison"},
                                                                   {"diag", "operator diagnostics"},
                                                                   {"selftest", "run the acceptance suite"}};
    for (const auto& [name, help] : subs) app.add_subcommand(name, help)->fallthrough();
    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        out << app.help();
        return 0;
    } catch (const CLI::ParseError& e) {
        err << "usage error: " << e.what() << '\n';
        return 2;
    }
    Run r;
    r.log = &err;
    r.mode = app.get_subcommands().front()->get_name();
    const std::string config_mode = r.mode == "diag" ? "diagnostics" : r.mode;
    try {
        json c = json::object();
        if (!config_path.empty()) {
            std::ifstream in(config_path);
            if (!in) throw ConfigError("", "cannot read config file " + config_path);
            c = json::parse(in, nullptr, false);
            if (c.is_discarded()) throw ConfigError("", "config file " + config_path + " is not valid JSON");
            if (!c.is_object()) throw ConfigError("/", "config must be a JSON object");
        }
        for (const auto& s : sets) apply_override(c, s);
        if (!c.contains("mode")) c["mode"] = config_mode;
        if (c["mode"] != config_mode)
            throw ConfigError("/mode", "config is for mode " + c["mode"].dump() + " but the subcommand is " + r.mode);
        validate_config(c);
        r.config = c;
        r.seed = seed ? *seed : c.value("seed", std::uint64_t(1));
        r.threads = threads ? *threads : 0;
        if (r.threads < 0) throw ConfigError("--threads", "must be nonnegative");
        if (r.threads == 0) r.threads = default_threads();
        r.out = out_dir.empty() ? fs::path(c.value("output", std::string("qhydro_out"))) : fs::path(out_dir);
        // semantic checks that the schema cannot express
        if (c.contains("lambda")) profile_from(c);
        if (c.contains("lattice")) potential_from(c, lattice_from(c));
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << '\n';
        return 2;
    } catch (const json::exception& e) {
        err << "config error: " << e.what() << '\n';
        return 2;
    }
    fs::create_directories(r.out);
    int code = 0;
    try {
        r.write("config.json", r.config.dump(2) + "\n");
        if (r.mode == "eos") code = run_eos(r);
        else if (r.mode == "euler") code = run_euler(r);
        else if (r.mode == "quantum") code = run_quantum(r);
        else if (r.mode == "compare") code = run_compare(r);
        else if (r.mode == "diag") code = run_diag(r);
        else code = run_selftest(r, out);
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << '\n';
        code = 2;
    } catch (const json::exception& e) {
        err << "config error: " << e.what() << '\n';
        code = 2;
    } catch (const std::exception& e) {
        std::string kind = "Error";
        if (dynamic_cast<const InadmissibleCell*>(&e)) kind = "InadmissibleCell";
        else if (dynamic_cast<const DomainError*>(&e)) kind = "DomainError";
        else if (dynamic_cast<const ConvergenceError*>(&e)) kind = "ConvergenceError";
        else if (dynamic_cast<const CflError*>(&e)) kind = "CflError";
        else if (dynamic_cast<const ResourceError*>(&e)) kind = "ResourceError";
        else if (dynamic_cast<const PreconditionError*>(&e)) kind = "PreconditionError";
        const json payload = error_payload(kind, e);
        err << "numerical failure: " << payload.dump() << '\n';
        r.write("error.json", payload.dump(2) + "\n");
        code = 3;
    }
    write_manifest(r);
    return code;
}

} // namespace qhydro::cli

#endif
