#pragma once

#include <chrono>
#include <filesystem>
#include <fstream>
#include <future>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "wgf/audit.hpp"
#include "wgf/config.hpp"
#include "wgf/controlled_evi.hpp"
#include "wgf/evi.hpp"
#include "wgf/flow.hpp"
#include "wgf/hamiltonian.hpp"
#include "wgf/selftest.hpp"
#include "wgf/value.hpp"
#include "wgf/viscosity.hpp"

namespace wgf {

/// Command-line overrides applied on top of the config's [run] section.
struct RunOverrides {
    std::optional<double> tol_scale;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out_dir;
    int parallel = 1;
};

struct AuditDecl {
    std::string name;
    std::string kind;
    Config::Section params;
    bool expect_pass = true;
};

struct Scenario {
    Grid grid{0.0, 1.0, 8};
    EnergySpec spec;
    std::vector<std::pair<std::string, GridMeasure>> measures;
    std::optional<RewardSpec> reward;
    ControlProblem problem;  // valid when [reward] is present
    bool has_problem = false;
    int value_budget = 200;
    std::vector<AuditDecl> audits;
    std::uint64_t seed = 1;
    std::string out_dir = "out";
    double tol_scale = 1.0;
    double c_tol = 10.0;
    std::string config_hash;

    const GridMeasure& measure(const std::string& name) const {
        for (const auto& [n, m] : measures)
            if (n == name) return m;
        throw std::runtime_error("unknown measure '" + name + "'");
    }

    std::vector<GridMeasure> measure_list(const std::vector<std::string>& names) const {
        std::vector<GridMeasure> out;
        for (const auto& n : names) out.push_back(measure(n));
        return out;
    }

    double trajectory_tol(double dt) const { return tol_scale * c_tol * (grid.dx() + dt); }
};

namespace detail {

inline GridMeasure parse_measure(const Grid& g, const std::string& spec_text) {
    std::istringstream in(spec_text);
    std::string kind;
    in >> kind;
    auto num = [&in, &spec_text]() {
        double v;
        if (!(in >> v)) throw std::runtime_error("measure spec '" + spec_text + "': missing number");
        return v;
    };
    if (kind == "gaussian") {
        const double m = num(), s = num();
        return gaussian_measure(g, m, s);
    }
    if (kind == "uniform") {
        const double a = num(), b = num();
        return uniform_measure(g, a, b);
    }
    if (kind == "bump") {
        const double c = num(), w = num();
        return bump_measure(g, c, w);
    }
    if (kind == "bimodal") {
        const double m1 = num(), s1 = num(), m2 = num(), s2 = num();
        return bimodal_measure(g, m1, s1, m2, s2);
    }
    if (kind == "csv") {
        std::string path;
        in >> path;
        return read_csv(g, path);
    }
    throw std::runtime_error("unknown measure family '" + kind + "'");
}

inline EnergySpec parse_energy(const Config::Section& s) {
    EnergySpec spec;
    const std::string internal = s.get_or("internal", "none");
    if (internal == "boltzmann") spec.internal = InternalEnergySpec::boltzmann();
    else if (internal == "renyi") spec.internal = InternalEnergySpec::renyi(s.number("alpha"));
    else if (internal != "none") throw std::runtime_error("unknown internal energy '" + internal + "'");

    const std::string pot = s.get_or("potential", "none");
    if (pot == "quadratic") spec.potential = PotentialSpec::quadratic(s.number("kappa_v"));
    else if (pot == "double_well")
        spec.potential = PotentialSpec::double_well(s.number("well_a"), s.number("well_b"));
    else if (pot != "none") throw std::runtime_error("unknown potential '" + pot + "'");

    const std::string w = s.get_or("interaction", "none");
    if (w == "quadratic")
        spec.interaction = InteractionSpec::quadratic(s.number("interaction_coeff"),
                                                      s.number_or("kappa_w", 0.0));
    else if (w == "soft_well")
        spec.interaction = InteractionSpec::soft_well(s.number("well_amplitude"), s.number("well_width"));
    else if (w != "none") throw std::runtime_error("unknown interaction '" + w + "'");
    return spec;
}

inline RewardSpec parse_reward(const Scenario& sc, const Config::Section& s) {
    const std::string kind = s.get("kind");
    if (kind == "const") return RewardSpec::constant(s.number("value"));
    if (kind == "w2_target")
        return RewardSpec::w2_target(sc.measure(s.get("target")), s.number_or("scale", 1.0));
    if (kind == "mean_target")
        return RewardSpec::mean_target(s.number("m_star"), s.number_or("scale", 1.0));
    throw std::runtime_error("unknown reward kind '" + kind + "'");
}

inline CylindricalPhi parse_phi(const Config::Section& s) {
    const std::vector<std::string> words = s.words("phi");
    if (words.empty()) throw std::runtime_error("empty phi spec");
    std::vector<double> c;
    for (std::size_t i = 1; i < words.size(); ++i) c.push_back(std::stod(words[i]));
    if (words[0] == "linear") return CylindricalPhi::linear(c);
    if (words[0] == "log") return CylindricalPhi::log_saturating(c);
    throw std::runtime_error("unknown phi kind '" + words[0] + "'");
}

inline ControlField parse_control(const Scenario& sc, const Config::Section& s, double t_final,
                                  Rng& rng) {
    const std::vector<std::string> words =
        s.has("control") ? s.words("control") : std::vector<std::string>{"zero"};
    const std::string kind = words[0];
    if (kind == "zero") return ControlField::zero();
    const ControlBasis basis(sc.grid, sc.has_problem ? sc.problem.basis.size() : 6);
    if (kind == "basis") {
        std::vector<double> c;
        for (std::size_t i = 1; i < words.size(); ++i) c.push_back(std::stod(words[i]));
        c.resize(basis.size(), 0.0);
        return ControlField::basis_static(basis, c);
    }
    if (kind == "random") {
        std::vector<double> c(basis.size());
        for (double& v : c) v = rng.uniform(-0.5, 0.5);
        return ControlField::basis_static(basis, c);
    }
    if (kind == "adversarial") {
        // strong alternating pushes across a few time windows
        const int w = 3;
        std::vector<std::vector<double>> coeff(w, std::vector<double>(basis.size(), 0.0));
        for (int j = 0; j < w; ++j)
            for (int b = 0; b < basis.size(); ++b)
                coeff[j][b] = (((j + b) % 2 == 0) ? 0.8 : -0.8) * (0.5 + 0.5 * rng.uniform());
        return ControlField::basis_windows(basis, geometric_windows(t_final, w), coeff);
    }
    throw std::runtime_error("unknown control kind '" + kind + "'");
}

}  // namespace detail

inline Scenario load_scenario(const Config& cfg, const RunOverrides& over = {}) {
    Scenario sc;
    sc.config_hash = cfg.hash();

    const auto& g = cfg.section("grid");
    sc.grid = Grid(g.number("x_min"), g.number("x_max"),
                   static_cast<int>(g.number("n_cells")));
    sc.spec = cfg.has("energy") ? detail::parse_energy(cfg.section("energy")) : EnergySpec{};

    if (cfg.has("measures"))
        for (const auto& [name, spec_text] : cfg.section("measures").entries)
            sc.measures.emplace_back(name, detail::parse_measure(sc.grid, spec_text));

    if (cfg.has("run")) {
        const auto& r = cfg.section("run");
        sc.seed = static_cast<std::uint64_t>(r.number_or("seed", 1));
        sc.out_dir = r.get_or("out", "out");
        sc.tol_scale = r.number_or("tol_scale", 1.0);
        sc.c_tol = r.number_or("c_tol", 10.0);
    }
    if (over.tol_scale) sc.tol_scale = *over.tol_scale;
    if (over.seed) sc.seed = *over.seed;
    if (over.out_dir) sc.out_dir = *over.out_dir;

    if (cfg.has("reward")) {
        sc.reward = detail::parse_reward(sc, cfg.section("reward"));
        ControlProblem p;
        p.spec = sc.spec;
        p.reward = *sc.reward;
        if (cfg.has("value")) {
            const auto& v = cfg.section("value");
            p.lambda = v.number_or("lambda", 1.0);
            p.horizon = v.number_or("horizon", 8.0 * p.lambda);
            p.dt = v.number_or("dt", 5e-3);
            p.quad_samples = v.integer_or("quad_samples", 64);
            sc.value_budget = v.integer_or("budget", 200);
        }
        int n_basis = 8, n_windows = 6;
        double coeff_max = 1.0;
        if (cfg.has("control")) {
            const auto& c = cfg.section("control");
            n_basis = c.integer_or("n_basis", 8);
            n_windows = c.integer_or("n_windows", 6);
            coeff_max = c.number_or("coeff_max", 1.0);
        }
        p.basis = ControlBasis(sc.grid, n_basis);
        p.n_windows = n_windows;
        p.coeff_max = coeff_max;
        p.validate();
        sc.problem = std::move(p);
        sc.has_problem = true;
    }

    for (const auto& s : cfg.sections()) {
        if (s.name.rfind("audit:", 0) != 0) continue;
        AuditDecl decl;
        decl.name = s.name.substr(6);
        decl.kind = s.get("kind");
        decl.params = s;
        decl.expect_pass = s.get_or("expect", "pass") != "fail";
        sc.audits.push_back(std::move(decl));
    }
    return sc;
}

struct AuditOutcome {
    AuditReport report;
    bool expect_pass = true;
    double runtime_s = 0.0;
    std::string error;  // non-empty when the audit itself errored

    bool ok() const { return error.empty() && report.passed() == expect_pass; }
};

/// Execute one declared audit. Audit-level RNG is derived from the scenario
/// seed and the audit name, so results do not depend on execution order.
inline AuditOutcome run_audit(const Scenario& sc, const AuditDecl& decl) {
    AuditOutcome out;
    out.expect_pass = decl.expect_pass;
    const auto t0 = std::chrono::steady_clock::now();
    Rng rng(sc.seed ^ fnv1a(decl.name));
    const auto& p = decl.params;
    try {
        const std::string& kind = decl.kind;
        if (kind == "gaussian_variance") {
            const GridMeasure mu0 = sc.measure(p.get("mu"));
            const double dt = p.number_or("dt", 1e-3);
            const double t_final = p.number_or("t_final", 0.5);
            const double rel_tol = p.number_or("rel_tol", 0.01) * sc.tol_scale;
            const double var0 = mu0.variance();
            const auto traj = evolve(sc.spec, mu0, ControlField::zero(), t_final, dt,
                                     p.integer_or("stride", 50), false);
            double worst = 0.0, lhs = 0.0, rhs = 0.0;
            for (int k = 0; k < traj.nodes(); ++k) {
                const double want = var0 + traj.times[k];
                const double err = std::fabs(traj.states[k].variance() - want) / want;
                if (err > worst) {
                    worst = err;
                    lhs = traj.states[k].variance();
                    rhs = want;
                }
            }
            out.report = make_report(decl.name, lhs, rhs, rel_tol - worst, rel_tol,
                                     "max relative variance error " + std::to_string(worst));
            out.report.verdict = worst <= rel_tol ? "PASS" : "FAIL";
        } else if (kind == "entropy_monotone") {
            const GridMeasure mu0 = sc.measure(p.get("mu"));
            const auto traj = evolve(sc.spec, mu0, ControlField::zero(),
                                     p.number_or("t_final", 0.3), p.number_or("dt", 1e-3), 1, false);
            out.report = entropy_monotone_audit(sc.spec, traj, p.number_or("tol", 1e-6));
            out.report.name = decl.name;
        } else if (kind == "evi_pointwise") {
            const double dt = p.number_or("dt", 1e-3);
            auto traj = evolve(sc.spec, sc.measure(p.get("mu")), ControlField::zero(),
                               p.number_or("t_final", 0.3), dt, p.integer_or("stride", 20), false);
            if (p.get_or("reverse", "no") == "yes") traj = time_reversed(traj);
            out.report = evi_pointwise(sc.spec, traj, sc.measure(p.get("nu")),
                                       p.number_or("tol", sc.trajectory_tol(dt)));
            out.report.name = decl.name;
        } else if (kind == "contraction") {
            const double dt = p.number_or("dt", 1e-3);
            out.report = contraction_audit(sc.spec, sc.measure(p.get("mu")), sc.measure(p.get("nu")),
                                           p.number_or("t_final", 0.5), dt,
                                           p.number_or("tol", sc.trajectory_tol(dt)),
                                           p.integer_or("stride", 50));
            out.report.name = decl.name;
        } else if (kind == "asymptotics") {
            out.report = asymptotic_expansion_audit(
                sc.spec, sc.measure(p.get("mu")), sc.measure(p.get("nu")), p.numbers("t_list"),
                p.number_or("dt", 5e-4), p.number_or("tol", 5e-3) * sc.tol_scale);
            out.report.name = decl.name;
        } else if (kind == "controlled_evi") {
            const double dt = p.number_or("dt", 1e-3);
            const double t_final = p.number_or("t_final", 0.25);
            const ControlField u = detail::parse_control(sc, p, t_final, rng);
            auto traj = evolve(sc.spec, sc.measure(p.get("mu")), u, t_final, dt,
                               p.integer_or("stride", 10));
            if (p.get_or("reverse", "no") == "yes") traj = time_reversed(traj);
            const double tol = p.number_or("tol", sc.trajectory_tol(dt));
            const double a = p.number_or("a", 1.0);
            const CylindricalPhi phi = detail::parse_phi(p);
            const GridMeasure anchor = sc.measure(p.get("anchor"));
            const std::vector<GridMeasure> anchors = sc.measure_list(p.words("anchors"));
            if (p.get_or("variant", "dagger") == "dagger")
                out.report = controlled_evi_residual(sc.spec, traj,
                                                     TestFunctionDagger{a, phi, anchor, anchors}, tol);
            else
                out.report = controlled_evi_residual(
                    sc.spec, traj, TestFunctionDdagger{a, phi, anchor, anchors}, tol);
            out.report.name = decl.name;
        } else if (kind == "lemma35") {
            const double dt = p.number_or("dt", 1e-3);
            const double t_final = p.number_or("t_final", 0.3);
            const ControlField u = detail::parse_control(sc, p, t_final, rng);
            const auto traj = evolve(sc.spec, sc.measure(p.get("mu")), u, t_final, dt,
                                     p.integer_or("stride", 10));
            const QuadraticLowerBound qlb = calibrate_lower_bound(
                sc.spec, sc.measure(p.get("qlb_anchor")), sc.measure_list(p.words("qlb_probes")));
            out.report = lemma35_bounds(sc.spec, traj, sc.measure(p.get("rho")), qlb,
                                        p.number_or("alpha", -3.0),
                                        p.number_or("tol", 2e-2) * sc.tol_scale);
            out.report.name = decl.name;
        } else if (kind == "porous_convergence") {
            const double t_final = p.number_or("t_final", 0.25);
            const double dt_factor = p.number_or("dt_factor", 0.2);
            const std::vector<double> init = p.numbers("bump");  // center halfwidth
            auto solve = [&](int n) {
                const Grid gl(sc.grid.x_min, sc.grid.x_max, n);
                const GridMeasure m0 = bump_measure(gl, init.at(0), init.at(1));
                return evolve(sc.spec, m0, ControlField::zero(), t_final, dt_factor * gl.dx(),
                              1 << 20, false)
                    .states.back();
            };
            std::vector<double> levels = p.has("levels") ? p.numbers("levels")
                                                         : std::vector<double>{128, 256, 512};
            const double lo = p.number_or("ratio_lo", 0.35), hi = p.number_or("ratio_hi", 0.65);
            std::vector<double> errs;
            for (double n : levels)
                errs.push_back(
                    quantile_distance_exact(solve(static_cast<int>(n)), solve(4 * static_cast<int>(n)), 2.0));
            AuditReport bundle;
            bundle.name = decl.name;
            for (std::size_t l = 1; l < errs.size(); ++l) {
                const double ratio = errs[l] / errs[l - 1];
                AuditReport part = make_report("halving_" + std::to_string(l), ratio, 0.5,
                                               std::min(ratio - lo, hi - ratio), 0.0);
                bundle.parts.push_back(part);
            }
            bundle.lhs = errs.front();
            bundle.rhs = errs.back();
            bundle.slack = 0.0;
            for (const auto& part : bundle.parts) bundle.slack = std::min(bundle.slack, part.slack);
            bundle.verdict = bundle.passed() ? "PASS" : "FAIL";
            out.report = bundle;
        } else if (kind == "dpp") {
            if (!sc.has_problem) throw std::runtime_error("dpp audit needs [reward]");
            out.report = dpp_residual(sc.problem, sc.measure(p.get("mu")),
                                      p.number_or("t_mid", 0.5),
                                      p.integer_or("budget", sc.value_budget),
                                      p.number_or("tol", -1.0), sc.seed ^ fnv1a(decl.name));
            out.report.name = decl.name;
        } else if (kind == "value_bounds") {
            if (!sc.has_problem) throw std::runtime_error("value audit needs [reward]");
            out.report = value_bounds_audit(sc.problem, sc.measure(p.get("mu")),
                                            p.integer_or("budget", sc.value_budget),
                                            sc.seed ^ fnv1a(decl.name));
            out.report.name = decl.name;
        } else if (kind == "subsolution" || kind == "supersolution") {
            if (!sc.has_problem) throw std::runtime_error("viscosity audit needs [reward]");
            const double a = p.number_or("a", 1.0);
            const CylindricalPhi phi = detail::parse_phi(p);
            const GridMeasure anchor = sc.measure(p.get("anchor"));
            const std::vector<GridMeasure> anchors = sc.measure_list(p.words("anchors"));
            const std::vector<GridMeasure> seeds =
                p.has("seeds") ? sc.measure_list(p.words("seeds")) : std::vector<GridMeasure>{};
            const double tol = p.number_or("tol", default_tol_visc(sc.problem) * sc.tol_scale);
            const int budget = p.integer_or("budget", sc.value_budget);
            if (kind == "subsolution")
                out.report = subsolution_residual(sc.problem, TestFunctionDagger{a, phi, anchor, anchors},
                                                  seeds, budget, tol, sc.seed ^ fnv1a(decl.name));
            else
                out.report =
                    supersolution_residual(sc.problem, TestFunctionDdagger{a, phi, anchor, anchors},
                                           seeds, budget, tol, sc.seed ^ fnv1a(decl.name));
            out.report.name = decl.name;
        } else {
            throw std::runtime_error("unknown audit kind '" + kind + "'");
        }
    } catch (const std::exception& e) {
        out.error = e.what();
        out.report.name = decl.name;
        out.report.verdict = "ERROR";
    }
    out.runtime_s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return out;
}

// -- reports -----------------------------------------------------------------

inline nlohmann::ordered_json report_to_json(const AuditReport& r) {
    nlohmann::ordered_json j;
    j["name"] = r.name;
    j["lhs"] = r.lhs;
    j["rhs"] = r.rhs;
    j["slack"] = r.slack;
    j["tol"] = r.tol;
    j["verdict"] = r.verdict;
    if (!r.detail.empty()) j["detail"] = r.detail;
    if (!r.parts.empty()) {
        nlohmann::ordered_json parts = nlohmann::ordered_json::array();
        for (const auto& part : r.parts) parts.push_back(report_to_json(part));
        j["parts"] = parts;
    }
    return j;
}

/// Summary JSON: deterministic given seed and config (no timings).
inline std::string summary_json(const Scenario& sc, const std::vector<AuditOutcome>& outcomes) {
    nlohmann::ordered_json j;
    j["config_hash"] = sc.config_hash;
    j["seed"] = sc.seed;
    j["tol_scale"] = sc.tol_scale;
    nlohmann::ordered_json list = nlohmann::ordered_json::array();
    bool all_ok = true;
    for (const auto& o : outcomes) {
        nlohmann::ordered_json entry = report_to_json(o.report);
        entry["expected"] = o.expect_pass ? "PASS" : "FAIL";
        entry["ok"] = o.ok();
        if (!o.error.empty()) entry["error"] = o.error;
        list.push_back(entry);
        all_ok = all_ok && o.ok();
    }
    j["audits"] = list;
    j["all_ok"] = all_ok;
    return j.dump(2) + "\n";
}

inline std::string audit_json(const Scenario& sc, const AuditOutcome& o) {
    nlohmann::ordered_json j = report_to_json(o.report);
    j["config_hash"] = sc.config_hash;
    j["runtime_s"] = o.runtime_s;
    j["expected"] = o.expect_pass ? "PASS" : "FAIL";
    j["ok"] = o.ok();
    if (!o.error.empty()) j["error"] = o.error;
    return j.dump(2) + "\n";
}

struct ScenarioResult {
    std::vector<AuditOutcome> outcomes;
    std::string summary;
    bool all_ok = true;
    bool any_error = false;
};

/// Run the declared audits (optionally `parallel` at a time), write per-audit
/// JSON plus summary.json under out_dir, and return the outcomes in
/// declaration order.
inline ScenarioResult run_scenario(const Scenario& sc, int parallel = 1,
                                   const std::vector<std::string>& kind_filter = {}) {
    std::vector<const AuditDecl*> todo;
    for (const auto& d : sc.audits) {
        if (!kind_filter.empty() &&
            std::find(kind_filter.begin(), kind_filter.end(), d.kind) == kind_filter.end())
            continue;
        todo.push_back(&d);
    }

    ScenarioResult result;
    result.outcomes.resize(todo.size());
    if (parallel <= 1) {
        for (std::size_t i = 0; i < todo.size(); ++i)
            result.outcomes[i] = run_audit(sc, *todo[i]);
    } else {
        std::vector<std::future<AuditOutcome>> futs(todo.size());
        std::size_t next = 0;
        while (next < todo.size()) {
            const std::size_t batch = std::min<std::size_t>(parallel, todo.size() - next);
            for (std::size_t b = 0; b < batch; ++b)
                futs[next + b] = std::async(std::launch::async,
                                            [&sc, decl = todo[next + b]] { return run_audit(sc, *decl); });
            for (std::size_t b = 0; b < batch; ++b) result.outcomes[next + b] = futs[next + b].get();
            next += batch;
        }
    }

    for (const auto& o : result.outcomes) {
        result.all_ok = result.all_ok && o.ok();
        result.any_error = result.any_error || !o.error.empty();
    }
    result.summary = summary_json(sc, result.outcomes);

    std::filesystem::create_directories(sc.out_dir);
    for (const auto& o : result.outcomes) {
        std::ofstream f(sc.out_dir + "/" + o.report.name + ".json", std::ios::binary);
        f << audit_json(sc, o);
    }
    std::ofstream f(sc.out_dir + "/summary.json", std::ios::binary);
    f << result.summary;
    return result;
}

/// Trajectory dump: one CSV per stored slice plus a JSON manifest.
inline void dump_trajectory(const Scenario& sc, const ControlledTrajectory& traj,
                            const std::string& dir) {
    std::filesystem::create_directories(dir);
    nlohmann::ordered_json manifest;
    manifest["config_hash"] = sc.config_hash;
    manifest["solver_dt"] = traj.solver_dt;
    nlohmann::ordered_json times = nlohmann::ordered_json::array();
    nlohmann::ordered_json files = nlohmann::ordered_json::array();
    for (int k = 0; k < traj.nodes(); ++k) {
        char name[48];
        std::snprintf(name, sizeof(name), "slice_%05d.csv", k);
        write_csv(traj.states[k], dir + "/" + name);
        times.push_back(traj.times[k]);
        files.push_back(name);
    }
    manifest["times"] = times;
    manifest["files"] = files;
    nlohmann::ordered_json diags = nlohmann::ordered_json::array();
    for (const auto& d : traj.diagnostics) {
        nlohmann::ordered_json e;
        e["mass_defect"] = d.mass_defect;
        e["min_density"] = d.min_density;
        e["control_l2"] = d.control_l2;
        e["metric_speed"] = d.metric_speed;
        e["boundary_mass"] = d.boundary_mass;
        diags.push_back(e);
    }
    manifest["diagnostics"] = diags;
    std::ofstream f(dir + "/manifest.json", std::ios::binary);
    f << manifest.dump(2) << "\n";
}

}  // namespace wgf
