#include "app.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <iostream>
#include <map>
#include <numbers>
#include <random>
#include <set>
#include <sstream>
#include <thread>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "CLI11.hpp"
#include "cbf/cbf.hpp"

namespace cbf::app {

namespace pt = boost::property_tree;
namespace fs = std::filesystem;

const char* to_string(Mode m) {
    switch (m) {
        case Mode::direct: return "direct";
        case Mode::inverse: return "inverse";
        case Mode::verify: return "verify";
        case Mode::sweep: return "sweep";
    }
    return "?";
}

Mode parse_mode(const std::string& s) {
    for (Mode m : {Mode::direct, Mode::inverse, Mode::verify, Mode::sweep})
        if (s == to_string(m)) return m;
    throw ConfigError("unknown mode '" + s + "' (expected direct, inverse, verify or sweep)");
}

SolverConfig RunConfig::solver_config() const { return solver_config(T); }

SolverConfig RunConfig::solver_config(double T_final) const {
    return SolverConfig{Grid(nx, ny), dt, T_final, params};
}

json RunConfig::to_json() const {
    return {{"mode", to_string(mode)},
            {"case", case_name},
            {"grid", {{"nx", nx}, {"ny", ny}}},
            {"time", {{"dt", dt}, {"T", T}}},
            {"physics", {{"mu", params.mu}, {"alpha", params.alpha}, {"beta", params.beta}, {"r", params.r}}},
            {"inverse", {{"tol", tol}, {"max_iter", max_iter}, {"radius", radius}, {"phi_csv", phi_csv}}},
            {"verify", {{"slack", slack}, {"random_pairs", random_pairs}, {"eps", eps}}},
            {"sweep", {{"T", sweep_T}, {"r", sweep_r}}},
            {"seed", seed}};
}

void RunConfig::validate() const {
    auto field = [](const std::string& name, auto&& fn) {
        try {
            fn();
        } catch (const DomainError& e) {
            throw ConfigError(name + ": " + e.what());
        }
    };
    if (case_name.empty()) throw ConfigError("[run] case: missing (see --list-cases)");
    const auto cat = case_catalog();
    if (std::find(cat.begin(), cat.end(), case_name) == cat.end())
        throw ConfigError("[run] case: unknown manufactured case '" + case_name + "'");
    field("[grid]", [&] { Grid(nx, ny); });
    field("[time]/[physics]", [&] { solver_config().validate(); });
    if (!(tol > 0.0)) throw ConfigError("[inverse] tol: must be positive");
    if (max_iter < 1) throw ConfigError("[inverse] max_iter: must be at least 1");
    if (!(radius > 0.0)) throw ConfigError("[inverse] radius: must be positive");
    if (!phi_csv.empty() && !fs::exists(phi_csv)) throw ConfigError("[inverse] phi_csv: no such file " + phi_csv);
    if (!(slack >= 0.0)) throw ConfigError("[verify] slack: must be non-negative");
    if (eps.size() < 2) throw ConfigError("[verify] eps: needs at least two values");
    for (std::size_t i = 0; i < eps.size(); ++i)
        if (!(eps[i] > 0.0) || (i > 0 && !(eps[i] < eps[i - 1])))
            throw ConfigError("[verify] eps: values must be positive and decreasing");
    if (sweep_T.empty()) throw ConfigError("[sweep] T: empty list");
    if (sweep_r.empty()) throw ConfigError("[sweep] r: empty list");
    for (double t : sweep_T) field("[sweep] T", [&] { solver_config(t).validate(); });
    for (double r : sweep_r)
        if (!(r >= 1.0 && r <= 3.0)) throw ConfigError("[sweep] r: exponents must lie in [1, 3]");
    if (jobs < 1) throw ConfigError("[run] jobs: must be at least 1");
}

namespace {

const std::map<std::string, std::set<std::string>>& schema() {
    static const std::map<std::string, std::set<std::string>> s{
        {"run", {"mode", "case", "out", "jobs", "seed"}},
        {"grid", {"nx", "ny"}},
        {"time", {"dt", "T"}},
        {"physics", {"mu", "alpha", "beta", "r"}},
        {"inverse", {"tol", "max_iter", "radius", "phi_csv"}},
        {"verify", {"slack", "random_pairs", "eps"}},
        {"sweep", {"T", "r"}},
    };
    return s;
}

class Reader {
public:
    Reader(const pt::ptree& tree, std::string origin) : tree_(tree), origin_(std::move(origin)) {}

    std::optional<std::string> raw(const std::string& sec, const std::string& key) const {
        const auto s = tree_.get_child_optional(pt::ptree::path_type(sec, '\0'));
        if (!s) return std::nullopt;
        const auto v = s->get_optional<std::string>(pt::ptree::path_type(key, '\0'));
        if (!v) return std::nullopt;
        return *v;
    }

    void text(const std::string& sec, const std::string& key, std::string& out) const {
        if (auto v = raw(sec, key)) out = *v;
    }

    void number(const std::string& sec, const std::string& key, double& out) const {
        if (auto v = raw(sec, key)) out = to_double(sec, key, *v);
    }

    template <class Int>
    void integer(const std::string& sec, const std::string& key, Int& out) const {
        auto v = raw(sec, key);
        if (!v) return;
        std::size_t used = 0;
        long long x = 0;
        try {
            x = std::stoll(*v, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used == 0 || used != v->size() || x < 0)
            throw fail(sec, key, "expected a non-negative integer, got '" + *v + "'");
        out = Int(x);
    }

    void list(const std::string& sec, const std::string& key, std::vector<double>& out) const {
        auto v = raw(sec, key);
        if (!v) return;
        std::vector<double> vals;
        std::istringstream in(*v);
        std::string item;
        while (std::getline(in, item, ',')) {
            item.erase(0, item.find_first_not_of(" \t"));
            item.erase(item.find_last_not_of(" \t") + 1);
            vals.push_back(to_double(sec, key, item));
        }
        if (vals.empty()) throw fail(sec, key, "empty list");
        out = std::move(vals);
    }

    ConfigError fail(const std::string& sec, const std::string& key, const std::string& msg) const {
        return ConfigError(origin_ + ": [" + sec + "] " + key + ": " + msg);
    }

private:
    double to_double(const std::string& sec, const std::string& key, const std::string& v) const {
        std::size_t used = 0;
        double x = 0.0;
        try {
            x = std::stod(v, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used == 0 || used != v.size() || !std::isfinite(x))
            throw fail(sec, key, "expected a finite number, got '" + v + "'");
        return x;
    }

    const pt::ptree& tree_;
    std::string origin_;
};

}  // namespace

RunConfig parse_config(const std::string& text, const std::string& origin) {
    pt::ptree tree;
    std::istringstream in(text);
    try {
        pt::ini_parser::read_ini(in, tree);
    } catch (const pt::ini_parser_error& e) {
        throw ConfigError(origin + ":" + std::to_string(e.line()) + ": " + e.message());
    }
    for (const auto& [sec, body] : tree) {
        const auto it = schema().find(sec);
        if (body.empty() && !body.data().empty()) throw ConfigError(origin + ": key '" + sec + "' outside any section");
        if (it == schema().end()) throw ConfigError(origin + ": unknown section [" + sec + "]");
        for (const auto& [key, value] : body)
            if (!it->second.count(key)) throw ConfigError(origin + ": [" + sec + "] " + key + ": unknown key");
    }

    const Reader rd(tree, origin);
    RunConfig c;
    if (auto m = rd.raw("run", "mode")) {
        try {
            c.mode = parse_mode(*m);
        } catch (const ConfigError& e) {
            throw rd.fail("run", "mode", e.what());
        }
    }
    rd.text("run", "case", c.case_name);
    std::string out;
    rd.text("run", "out", out);
    if (!out.empty()) c.out = out;
    rd.integer("run", "jobs", c.jobs);
    rd.integer("run", "seed", c.seed);
    rd.integer("grid", "nx", c.nx);
    c.ny = c.nx;
    rd.integer("grid", "ny", c.ny);
    rd.number("time", "dt", c.dt);
    rd.number("time", "T", c.T);
    rd.number("physics", "mu", c.params.mu);
    rd.number("physics", "alpha", c.params.alpha);
    rd.number("physics", "beta", c.params.beta);
    rd.number("physics", "r", c.params.r);
    rd.number("inverse", "tol", c.tol);
    rd.integer("inverse", "max_iter", c.max_iter);
    rd.number("inverse", "radius", c.radius);
    rd.text("inverse", "phi_csv", c.phi_csv);
    rd.number("verify", "slack", c.slack);
    rd.integer("verify", "random_pairs", c.random_pairs);
    rd.list("verify", "eps", c.eps);
    rd.list("sweep", "T", c.sweep_T);
    rd.list("sweep", "r", c.sweep_r);
    if (c.case_name.empty()) throw ConfigError(origin + ": [run] case: required key is missing");
    return c;
}

RunConfig load_config(const fs::path& path) {
    std::string text;
    try {
        text = read_file(path);
    } catch (const IoError& e) {
        throw ConfigError(e.what());
    }
    return parse_config(text, path.string());
}

namespace {

std::shared_ptr<spdlog::logger> logger() {
    if (auto l = spdlog::get("cbf")) return l;
    auto l = spdlog::stderr_color_mt("cbf");
    l->set_pattern("[%l] %v");
    return l;
}

void configure_logging() {
    auto lg = logger();
    const char* env = std::getenv("CBF_LOG");
    if (!env || !*env) {
        lg->set_level(spdlog::level::warn);
        return;
    }
    const auto lvl = spdlog::level::from_str(env);
    if (lvl == spdlog::level::off && std::string(env) != "off") {
        lg->set_level(spdlog::level::warn);
        lg->warn("CBF_LOG='{}' is not a log level; using warn", env);
        return;
    }
    lg->set_level(lvl);
}

json artifact_header(const RunConfig& cfg) {
    return {{"format_version", format_version}, {"config", cfg.to_json()}};
}

std::vector<std::string> csv_header(const RunConfig& cfg) {
    return {"format_version=" + std::to_string(format_version), "config=" + cfg.to_json().dump()};
}

void write_json(const RunConfig& cfg, const std::string& name, const json& body) {
    json doc = artifact_header(cfg);
    doc.update(body);
    write_file_atomic(cfg.out / name, doc.dump(2) + "\n");
}

void write_csv(const RunConfig& cfg, const std::string& name, CsvTable table) {
    auto head = csv_header(cfg);
    table.comments.insert(table.comments.begin(), head.begin(), head.end());
    write_file_atomic(cfg.out / name, table.render());
}

VelocityField random_velocity(const Grid& g, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> unit(-1.0, 1.0);
    const double scale = std::pow(10.0, 3.0 * std::uniform_real_distribution<double>(-0.7, 0.3)(rng));
    VelocityField v(g);
    for (double& x : v.ux_data()) x = scale * unit(rng);
    for (double& x : v.uy_data()) x = scale * unit(rng);
    v.clear_boundary_normal();
    return v;
}

TimeSeries profile(const SolverConfig& sc, double amplitude) {
    const double T = sc.T;
    return TimeSeries::sample(0.0, sc.dt, sc.steps() + 1, [&](double t) {
        return amplitude * std::sin(std::numbers::pi * t / T);
    });
}

double max_observation_gap(const Trajectory& u, const InverseProblemData& d) {
    double m = 0.0;
    for (std::size_t n = 0; n < u.size(); ++n) m = std::max(m, std::abs(observe(u[n], d.omega()) - d.phi()[n]));
    return m;
}

InverseProblemData with_measurement(const ManufacturedProblem& mp, const RunConfig& cfg) {
    if (cfg.phi_csv.empty()) return mp.data;
    const auto& d = mp.data;
    TimeSeries phi = read_time_series_csv(cfg.phi_csv, "phi");
    return InverseProblemData(d.u0(), d.g(), d.omega(), std::move(phi), d.cfg(), d.g0_min());
}

int cmd_direct(const RunConfig& cfg) {
    const auto lg = logger();
    const auto mp = build_case(cfg.case_name, cfg.params.r, cfg.solver_config());
    const auto& d = mp.data;
    lg->info("direct run of '{}' with {} steps", cfg.case_name, d.cfg().steps());
    const Trajectory u = solve_direct(d.u0(), mp.f_exact, d.g(), d.cfg());
    const auto p = recover_pressures(u, mp.f_exact, d.g());

    CsvTable obs;
    obs.columns = {"t", "energy", "observation", "phi", "velocity_error", "pressure_error"};
    double pmax = 0.0;
    for (std::size_t n = 0; n < u.size(); ++n) {
        const double perr = n == 0 ? 0.0 : l2_norm(p[n] - mp.p_exact[n]);
        pmax = std::max(pmax, perr);
        obs.add_row({u.time(n), l2_norm(u[n]), observe(u[n], d.omega()), d.phi()[n], l2_norm(u[n] - mp.u_exact[n]),
                     perr});
    }
    const DirectError err = direct_error(u, mp);
    write_file_atomic(cfg.out / "trajectory.bin", encode_trajectory(u, artifact_header(cfg)));
    write_csv(cfg, "observations.csv", std::move(obs));
    write_json(cfg, "summary.json", {{"direct_error", to_json(err)}, {"max_pressure_error", pmax}});
    lg->info("max velocity error {:.3e}, max pressure error {:.3e}", err.max_l2, pmax);
    return exit_code::ok;
}

int cmd_inverse(const RunConfig& cfg) {
    const auto lg = logger();
    const auto mp = build_case(cfg.case_name, cfg.params.r, cfg.solver_config());
    const InverseProblemData d = with_measurement(mp, cfg);
    const AdmissibilityReport adm = admissibility(d, cfg.radius);
    PicardOptions opt{cfg.tol, cfg.max_iter, cfg.radius, std::nullopt};
    auto [f, rep] = solve_inverse_picard(d, opt);
    lg->info("Picard: {} iterations, converged={}", rep.iterations(), rep.converged);
    const TimeSeries fm = solve_inverse_marching(d);
    const TimeSeries center = ball_center(d);

    CsvTable tab;
    tab.columns = {"t", "f_rec", "f_marching", "f_reference", "ball_center"};
    for (std::size_t n = 0; n < f.size(); ++n) tab.add_row({f.time(n), f[n], fm[n], mp.f_exact[n], center[n]});
    CsvTable meas;
    meas.columns = {"t", "phi"};
    for (std::size_t n = 0; n < d.phi().size(); ++n) meas.add_row({d.phi().time(n), d.phi()[n]});

    json report = to_json(rep);
    report["relative_error_vs_reference"] = inverse_error(f, mp);
    report["marching_relative_difference"] = l2_time_norm(f - fm) / l2_time_norm(f);
    report["measurement_source"] = cfg.phi_csv.empty() ? std::string("case") : cfg.phi_csv;
    write_csv(cfg, "f_rec.csv", std::move(tab));
    write_csv(cfg, "measurement.csv", std::move(meas));
    write_json(cfg, "iteration_report.json", {{"iteration_report", report}});
    write_json(cfg, "admissibility_report.json", {{"admissibility", to_json(adm)}});
    if (!rep.converged) {
        lg->error("Picard iteration did not converge after {} iterations", rep.iterations());
        return exit_code::not_converged;
    }
    return exit_code::ok;
}

EstimateCheck worst_of(const std::vector<EstimateCheck>& cs) {
    EstimateCheck w = cs.front();
    bool all = true;
    for (const auto& c : cs) {
        all = all && c.passed;
        if (c.utilization() > w.utilization()) w = c;
    }
    w.passed = all;
    return w;
}

int cmd_verify(const RunConfig& cfg) {
    const auto lg = logger();
    const SolverConfig sc = cfg.solver_config();
    const auto mp = build_case(cfg.case_name, cfg.params.r, sc);
    const auto& d = mp.data;
    const SolverConfig& run_cfg = d.cfg();
    std::vector<EstimateCheck> ledger;
    auto add = [&](EstimateCheck c, const std::string& suffix = {}) {
        if (!suffix.empty()) c.name += "_" + suffix;
        lg->info("{:<40} {} lhs={:.6e} rhs={:.6e}", c.name, c.passed ? "pass" : "FAIL", c.lhs, c.rhs);
        ledger.push_back(std::move(c));
    };

    const Trajectory u = solve_direct(d.u0(), mp.f_exact, d.g(), run_cfg);
    add(check_energy_E1(u, mp.f_exact, d.g(), cfg.slack));
    add(check_energy_E2(u, mp.f_exact, d.g(), cfg.slack));
    const TimeSeries zero(0.0, run_cfg.dt, run_cfg.steps() + 1);
    const Trajectory rest = solve_direct(d.u0(), zero, d.g(), run_cfg);
    add(check_energy_E1(rest, zero, d.g(), cfg.slack), "unforced");
    add(check_energy_E2(rest, zero, d.g(), cfg.slack), "unforced");
    TimeSeries f2 = mp.f_exact;
    const TimeSeries bump = profile(run_cfg, 0.1);
    for (std::size_t n = 0; n < f2.size(); ++n) f2[n] *= 1.0 + bump[n];
    const Trajectory u2 = solve_direct(d.u0(), f2, d.g(), run_cfg);
    add(check_direct_stability_E6(u2, f2, u, mp.f_exact, d.g(), cfg.slack));

    std::mt19937_64 rng(cfg.seed);
    for (double r : {1.0, 1.5, 2.0, 2.5, 3.0}) {
        std::vector<EstimateCheck> mono, taylor;
        for (std::size_t k = 0; k < cfg.random_pairs; ++k) {
            const VelocityField a = random_velocity(run_cfg.grid, rng);
            const VelocityField b = random_velocity(run_cfg.grid, rng);
            mono.push_back(check_monotonicity_E11(a, b, run_cfg.params.beta, r));
            taylor.push_back(check_taylor_bound_3j(a, b, r));
        }
        if (!mono.empty()) {
            add(worst_of(mono));
            add(worst_of(taylor));
        }
    }

    const PicardOptions opt{cfg.tol, cfg.max_iter, cfg.radius, std::nullopt};
    auto [f, rep] = solve_inverse_picard(d, opt);
    const double final_rel = rep.relative_residuals.empty() ? 0.0 : rep.relative_residuals.back();
    add(make_check("picard_converged", rep.converged ? final_rel : std::numeric_limits<double>::infinity(), cfg.tol,
                   0.0, "iterations=" + std::to_string(rep.iterations())));
    add(make_check("fixed_point_residual", l2_time_norm(apply_A(f, d) - f), 10.0 * cfg.tol, 0.0));
    PicardOptions other = opt;
    other.start = rep.ball_center + profile(run_cfg, 0.5 * cfg.radius);
    const auto [f_other, rep_other] = solve_inverse_picard(d, other);
    add(make_check("fixed_point_uniqueness", l2_time_norm(f_other - f), 100.0 * cfg.tol, 0.0,
                   "second start converged=" + std::to_string(rep_other.converged)));
    const TimeSeries fm = solve_inverse_marching(d);
    add(make_check("picard_marching_agreement", l2_time_norm(f - fm) / l2_time_norm(f), 1e-6, 0.0));
    const Trajectory uf = solve_direct(d.u0(), f, d.g(), run_cfg);
    add(make_check("overdetermination", max_observation_gap(uf, d), 1e-3, 0.0));
    add(make_check("source_recovery_error", inverse_error(f, mp), 1e-2, 0.0));

    json experiments = json::array();
    CsvTable deltas, slopes;
    deltas.comments = {"kind: 0 = u0, 1 = g, 2 = phi"};
    deltas.columns = {"kind", "eps"};
    slopes.comments = deltas.comments;
    slopes.columns = {"kind"};
    for (const char* q : OutputDeltas::names) {
        deltas.columns.push_back(q);
        slopes.columns.push_back(std::string("slope_") + q);
    }
    for (const char* q : OutputDeltas::names) slopes.columns.push_back(std::string("max_ratio_") + q);
    const PicardOptions tight{std::min(cfg.tol, 1e-10), cfg.max_iter, cfg.radius, std::nullopt};
    for (auto kind : {PerturbationKind::u0, PerturbationKind::g, PerturbationKind::phi}) {
        const StabilityExperiment ex = run_stability_experiment(d, kind, cfg.eps, tight);
        const double code = double(int(kind));
        for (std::size_t i = 0; i < ex.eps.size(); ++i) {
            std::vector<double> row{code, ex.eps[i]};
            for (std::size_t k = 0; k < OutputDeltas::count; ++k)
                row.push_back(ex.deltas[i] ? ex.deltas[i]->values[k] : std::numeric_limits<double>::quiet_NaN());
            deltas.add_row(std::move(row));
        }
        std::vector<double> row{code};
        row.insert(row.end(), ex.slopes.begin(), ex.slopes.end());
        row.insert(row.end(), ex.max_ratio.begin(), ex.max_ratio.end());
        slopes.add_row(std::move(row));
        for (std::size_t k = 0; k < OutputDeltas::count; ++k) {
            const double dev = std::isfinite(ex.slopes[k]) ? std::abs(ex.slopes[k] - 1.0)
                                                           : std::numeric_limits<double>::infinity();
            add(make_check(std::string("lipschitz_slope_") + to_string(kind) + "_" + OutputDeltas::names[k], dev,
                           0.15, 0.0, "slope=" + format_double(ex.slopes[k])));
        }
        const auto failed = std::count_if(ex.deltas.begin(), ex.deltas.end(), [](const auto& x) { return !x; });
        add(make_check(std::string("lipschitz_complete_") + to_string(kind), double(failed), 0.0, 0.0));
        experiments.push_back(to_json(ex));
    }

    json checks = json::array();
    bool all = true;
    for (const auto& c : ledger) {
        checks.push_back(to_json(c));
        all = all && c.passed;
    }
    write_json(cfg, "check_ledger.json", {{"all_passed", all}, {"checks", checks}, {"stability", experiments}});
    write_csv(cfg, "stability_deltas.csv", std::move(deltas));
    write_csv(cfg, "stability_slopes.csv", std::move(slopes));
    if (!all) lg->error("some checks failed; see check_ledger.json");
    return all ? exit_code::ok : exit_code::check_failed;
}

struct SweepMember {
    double T = 0.0;
    double r = 0.0;
    std::vector<double> values;
    int status = exit_code::ok;
};

void run_sweep_member(const RunConfig& cfg, SweepMember& m) {
    const double nan = std::numeric_limits<double>::quiet_NaN();
    m.values.assign(9, nan);
    try {
        const auto mp = build_case(cfg.case_name, m.r, cfg.solver_config(m.T));
        m.r = mp.closures.r;
        const auto& d = mp.data;
        const AdmissibilityReport adm = admissibility(d, cfg.radius);
        const double kappa = lipschitz_quotient(d);
        PicardOptions opt{cfg.tol, cfg.max_iter, cfg.radius, std::nullopt};
        const auto [f, rep] = solve_inverse_picard(d, opt);
        m.values = {adm.m1.value_or(nan),
                    adm.m2.value_or(nan),
                    adm.self_map_bound(),
                    adm.contraction_base,
                    kappa,
                    rep.contraction_ratios.empty() ? nan : rep.contraction_ratios.front(),
                    double(rep.iterations()),
                    rep.converged ? 1.0 : 0.0,
                    inverse_error(f, mp)};
        if (!rep.converged) m.status = exit_code::not_converged;
    } catch (const NumericalError& e) {
        logger()->error("sweep member T={} r={}: {}", m.T, m.r, e.what());
        m.status = exit_code::numerical_error;
    } catch (const AdmissibilityError& e) {
        logger()->error("sweep member T={} r={}: {}", m.T, m.r, e.what());
        m.status = exit_code::config_error;
    }
}

int cmd_sweep(const RunConfig& cfg) {
    std::vector<SweepMember> members;
    for (double r : cfg.sweep_r)
        for (double T : cfg.sweep_T) members.push_back({T, r, {}, exit_code::ok});

    std::atomic<std::size_t> next{0};
    {
        std::vector<std::jthread> pool;
        const unsigned n = std::min<unsigned>(cfg.jobs, unsigned(members.size()));
        for (unsigned w = 0; w < n; ++w)
            pool.emplace_back([&] {
                for (std::size_t k = next++; k < members.size(); k = next++) run_sweep_member(cfg, members[k]);
            });
    }

    CsvTable tab;
    tab.comments = {"status: 0 ok, 2 inadmissible data, 3 numerical failure, 4 not converged"};
    tab.columns = {"T",   "r",          "m1", "m2", "self_map_bound", "contraction_base", "lipschitz_quotient",
                   "first_picard_ratio", "picard_iterations", "converged", "recovery_error", "status"};
    int code = exit_code::ok;
    for (const auto& m : members) {
        std::vector<double> row{m.T, m.r};
        row.insert(row.end(), m.values.begin(), m.values.end());
        row.push_back(double(m.status));
        tab.add_row(std::move(row));
        if (code == exit_code::ok) code = m.status;
    }
    write_csv(cfg, "sweep.csv", std::move(tab));
    return code;
}

}  // namespace

int run(const RunConfig& cfg) {
    const auto lg = logger();
    try {
        cfg.validate();
    } catch (const ConfigError& e) {
        lg->error("{}", e.what());
        return exit_code::config_error;
    }
    try {
        switch (cfg.mode) {
            case Mode::direct: return cmd_direct(cfg);
            case Mode::inverse: return cmd_inverse(cfg);
            case Mode::verify: return cmd_verify(cfg);
            case Mode::sweep: return cmd_sweep(cfg);
        }
    } catch (const NumericalError& e) {
        lg->error("numerical failure: {}", e.what());
        return exit_code::numerical_error;
    } catch (const ConfigError& e) {
        lg->error("{}", e.what());
        return exit_code::config_error;
    } catch (const IoError& e) {
        lg->error("{}", e.what());
        return exit_code::check_failed;
    } catch (const Error& e) {
        lg->error("invalid input: {}", e.what());
        return exit_code::config_error;
    }
    return exit_code::check_failed;
}

int run_cli(int argc, const char* const* argv) {
    configure_logging();
    CLI::App cli{"Convective Brinkman-Forchheimer direct solver and source reconstruction"};
    std::string config_path, mode, out;
    unsigned jobs = 1;
    std::uint64_t seed = 42;
    bool list = false;
    cli.add_option("--config", config_path, "INI run configuration");
    auto* mode_opt = cli.add_option("--mode", mode, "direct, inverse, verify or sweep (overrides [run] mode)")
                         ->check(CLI::IsMember({"direct", "inverse", "verify", "sweep"}));
    auto* out_opt = cli.add_option("--out", out, "output directory (overrides [run] out)");
    auto* jobs_opt = cli.add_option("--jobs", jobs, "worker threads for sweeps")->check(CLI::PositiveNumber);
    auto* seed_opt = cli.add_option("--seed", seed, "seed for randomized checks");
    cli.add_flag("--list-cases", list, "print the manufactured case catalog and exit");
    try {
        cli.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int c = cli.exit(e);
        return c == 0 ? exit_code::ok : exit_code::config_error;
    }
    if (list) {
        for (const auto& name : case_catalog()) std::cout << name << '\n';
        return exit_code::ok;
    }
    if (config_path.empty()) {
        logger()->error("--config is required");
        return exit_code::config_error;
    }
    RunConfig cfg;
    try {
        cfg = load_config(config_path);
    } catch (const ConfigError& e) {
        logger()->error("{}", e.what());
        return exit_code::config_error;
    }
    if (mode_opt->count()) cfg.mode = parse_mode(mode);
    if (out_opt->count()) cfg.out = out;
    if (jobs_opt->count()) cfg.jobs = jobs;
    if (seed_opt->count()) cfg.seed = seed;
    return run(cfg);
}

}  // namespace cbf::app
