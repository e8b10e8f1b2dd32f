// Acceptance suite: every release criterion, one pass/fail line each.
// Returns the number of failed criteria.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "wgf/controlled_evi.hpp"
#include "wgf/evi.hpp"
#include "wgf/scenario.hpp"
#include "wgf/selftest.hpp"
#include "wgf/value.hpp"
#include "wgf/viscosity.hpp"

using namespace wgf;

namespace {

#ifndef WGF_SCENARIO_DIR
#define WGF_SCENARIO_DIR "scenarios"
#endif

struct Gate {
    int failed = 0;
    std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();

    void report(int index, const std::string& name, bool pass, const std::string& note = {}) {
        std::printf("%s  criterion %2d: %s%s%s\n", pass ? "PASS" : "FAIL", index, name.c_str(),
                    note.empty() ? "" : " -- ", note.c_str());
        std::fflush(stdout);
        if (!pass) ++failed;
    }

    double elapsed() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    }
};

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.3g", v);
    return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t).count();
}

std::string read_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    std::ostringstream buf;
    buf << f.rdbuf();
    return buf.str();
}

// ---- criterion 1: W2 oracle equivalence ------------------------------------

void criterion_w2_oracle(Gate& gate) {
    const auto t0 = std::chrono::steady_clock::now();
    double worst = 0.0;
    for (const auto& pair : make_atom_suite(200, 20240901ull)) {
        const double viaq = wasserstein_p(pair.mu, pair.nu, pair.p);
        const std::vector<double> wmu(pair.mu_atoms.size(), pair.weight);
        const std::vector<double> wnu(pair.nu_atoms.size(), pair.weight);
        worst = std::max(worst,
                         std::fabs(viaq - lp_transport_cost(pair.mu_atoms, wmu, pair.nu_atoms,
                                                            wnu, pair.p)));
    }
    const double secs = seconds_since(t0);
    gate.report(1, "W2 quantile formula matches exhaustive LP on 200 atomic pairs",
                worst < 1e-9 && secs < 5.0,
                "max err " + fmt(worst) + ", " + fmt(secs) + " s");
}

// ---- criterion 2: heat-flow analytic check ---------------------------------

void criterion_heat_analytic(Gate& gate) {
    const Grid g(-8.0, 8.0, 1024);
    EnergySpec spec;
    spec.internal = InternalEnergySpec::boltzmann();
    const GridMeasure mu0 = gaussian_measure(g, 0.0, 1.0);
    const auto traj = evolve(spec, mu0, ControlField::zero(), 0.5, 1e-3, 1, false);
    double worst_rel = 0.0;
    for (int k = 0; k < traj.nodes(); ++k) {
        const double want = 1.0 + traj.times[k];
        worst_rel = std::max(worst_rel, std::fabs(traj.states[k].variance() - want) / want);
    }
    // raw internal entropy sum, checked per solver step
    double worst_increase = -1e300;
    double prev = 0.0;
    for (int k = 0; k < traj.nodes(); ++k) {
        double s = 0.0;
        for (int i = 0; i < g.n_cells; ++i) {
            const double r = traj.states[k].density(i);
            if (r > 0.0) s += r * std::log(r);
        }
        s *= g.dx();
        if (k > 0) worst_increase = std::max(worst_increase, s - prev);
        prev = s;
    }
    gate.report(2, "heat flow: variance sigma0^2 + t within 1%, entropy monotone per step",
                worst_rel < 0.01 && worst_increase < 1e-6,
                "var err " + fmt(worst_rel) + ", max entropy increase " + fmt(worst_increase));
}

// ---- criterion 3: confined contraction at rate 1 ---------------------------

void criterion_contraction(Gate& gate) {
    const auto t0 = std::chrono::steady_clock::now();
    const Grid g(-7.0, 7.0, 1024);
    EnergySpec spec;
    spec.internal = InternalEnergySpec::boltzmann();
    spec.potential = PotentialSpec::quadratic(1.0);
    bool ok = true;
    double worst_ratio = 0.0;
    const std::vector<std::pair<GridMeasure, GridMeasure>> pairs = {
        {gaussian_measure(g, -1.0, 1.0), gaussian_measure(g, 1.0, 1.0)},
        {gaussian_measure(g, -0.5, 0.7), gaussian_measure(g, 1.2, 1.1)}};
    for (const auto& [mu, nu] : pairs) {
        const auto a = evolve(spec, mu, ControlField::zero(), 1.0, 1e-3, 100, false);
        const auto b = evolve(spec, nu, ControlField::zero(), 1.0, 1e-3, 100, false);
        const double w0 = wasserstein2(mu, nu);
        for (double t : {0.1, 0.5, 1.0}) {
            int k = 0;
            for (int j = 0; j < a.nodes(); ++j)
                if (std::fabs(a.times[j] - t) < std::fabs(a.times[k] - t)) k = j;
            const double ratio =
                wasserstein2(a.states[k], b.states[k]) / (std::exp(-a.times[k]) * w0);
            worst_ratio = std::max(worst_ratio, ratio);
            ok = ok && ratio <= 1.02;
        }
    }
    const double secs = seconds_since(t0);
    gate.report(3, "confined flows contract at rate kappa = 1 (ratio within 2%)",
                ok && secs < 30.0, "worst ratio " + fmt(worst_ratio) + ", " + fmt(secs) + " s");
}

// ---- criterion 4: porous-medium self-convergence ---------------------------

void criterion_porous(Gate& gate) {
    EnergySpec spec;
    spec.internal = InternalEnergySpec::renyi(2.0);
    spec.potential = PotentialSpec::quadratic(1.0);
    auto solve = [&](int n) {
        const Grid g(-3.0, 3.0, n);
        const GridMeasure m0 = bump_measure(g, 0.8, 0.9);
        return evolve(spec, m0, ControlField::zero(), 0.25, 0.2 * g.dx(), 1 << 20, false)
            .states.back();
    };
    std::vector<double> errs;
    for (int n : {128, 256, 512}) errs.push_back(quantile_distance_exact(solve(n), solve(4 * n), 2.0));
    bool ok = true;
    std::string note;
    for (std::size_t l = 1; l < errs.size(); ++l) {
        const double ratio = errs[l] / errs[l - 1];
        ok = ok && ratio >= 0.35 && ratio <= 0.65;
        note += (l > 1 ? ", " : "") + fmt(ratio);
    }
    gate.report(4, "porous-medium W2 error halves (+-30%) per refinement, 3 levels", ok,
                "ratios " + note);
}

// ---- criteria 5 and 6: controlled EVI and metric-growth suite --------------

struct SuiteScenario {
    std::string name;
    EnergySpec spec;
    Grid grid;
    GridMeasure mu0;
    TestFunctionDagger dagger;
    TestFunctionDdagger ddagger;
    GridMeasure rho;
    QuadraticLowerBound qlb;
};

std::vector<SuiteScenario> build_suite() {
    std::vector<SuiteScenario> out;
    {
        const Grid g(-8.0, 8.0, 512);
        EnergySpec spec;
        spec.internal = InternalEnergySpec::boltzmann();
        const GridMeasure mu0 = gaussian_measure(g, 0.0, 0.8);
        const GridMeasure rho = gaussian_measure(g, 0.7, 1.1);
        const GridMeasure anchor = gaussian_measure(g, -0.8, 1.3);
        const QuadraticLowerBound qlb =
            calibrate_lower_bound(spec, gaussian_measure(g, 0.0, 1.0), {mu0, rho, anchor});
        out.push_back({"heat", spec, g, mu0,
                       TestFunctionDagger{1.0, CylindricalPhi::linear({1.0}), rho, {anchor}},
                       TestFunctionDdagger{1.0, CylindricalPhi::log_saturating({0.8}), rho, {anchor}},
                       rho, qlb});
    }
    {
        const Grid g(-7.0, 7.0, 512);
        EnergySpec spec;
        spec.internal = InternalEnergySpec::boltzmann();
        spec.potential = PotentialSpec::quadratic(1.0);
        const GridMeasure mu0 = gaussian_measure(g, -1.0, 0.8);
        const GridMeasure rho = gaussian_measure(g, 0.4, 0.9);
        const GridMeasure anchor = gaussian_measure(g, 0.0, std::sqrt(0.5));
        const QuadraticLowerBound qlb =
            calibrate_lower_bound(spec, anchor, {mu0, rho, anchor});
        out.push_back({"confined", spec, g, mu0,
                       TestFunctionDagger{0.9, CylindricalPhi::linear({0.8}), rho, {anchor}},
                       TestFunctionDdagger{0.9, CylindricalPhi::log_saturating({0.7}), rho, {anchor}},
                       rho, qlb});
    }
    {
        const Grid g(-7.0, 7.0, 256);
        EnergySpec spec;
        spec.internal = InternalEnergySpec::boltzmann();
        spec.potential = PotentialSpec::quadratic(1.0);
        spec.interaction = InteractionSpec::soft_well(0.5, 1.5);
        const GridMeasure mu0 = bimodal_measure(g, -1.2, 0.6, 1.2, 0.6);
        const GridMeasure rho = gaussian_measure(g, 0.3, 0.8);
        const GridMeasure anchor = gaussian_measure(g, 0.0, 1.0);
        const QuadraticLowerBound qlb = calibrate_lower_bound(spec, anchor, {mu0, rho, anchor});
        out.push_back({"interaction", spec, g, mu0,
                       TestFunctionDagger{1.0, CylindricalPhi::linear({0.9}), rho, {anchor}},
                       TestFunctionDdagger{1.0, CylindricalPhi::log_saturating({0.8}), rho, {anchor}},
                       rho, qlb});
    }
    return out;
}

void criteria_controlled_evi_and_lemma35(Gate& gate) {
    const double dt = 1e-3, t_final = 0.25;
    int evi_pass = 0, evi_total = 0, lem_pass = 0, lem_total = 0;
    bool reversal_failed_as_required = false;

    for (const auto& s : build_suite()) {
        const double tol = audit_tol(s.grid, dt);  // 10 (dx + dt)
        const ControlBasis basis(s.grid, 6);
        Rng rng(fnv1a(s.name));
        std::vector<ControlField> controls;
        controls.push_back(ControlField::zero());
        for (int j = 0; j < 2; ++j) {
            std::vector<double> c(basis.size());
            for (double& v : c) v = rng.uniform(-0.5, 0.5);
            controls.push_back(ControlField::basis_static(basis, c));
        }
        for (int j = 0; j < 2; ++j) {
            const int w = 3;
            std::vector<std::vector<double>> coeff(w, std::vector<double>(basis.size()));
            for (int a = 0; a < w; ++a)
                for (int b = 0; b < basis.size(); ++b)
                    coeff[a][b] = (((a + b + j) % 2 == 0) ? 0.8 : -0.8) * (0.5 + 0.5 * rng.uniform());
            controls.push_back(
                ControlField::basis_windows(basis, geometric_windows(t_final, w), coeff));
        }

        for (const auto& u : controls) {
            const auto traj = evolve(s.spec, s.mu0, u, t_final, dt, 25);
            ++evi_total;
            if (controlled_evi_residual(s.spec, traj, s.dagger, tol).passed()) ++evi_pass;
            ++evi_total;
            if (controlled_evi_residual(s.spec, traj, s.ddagger, tol).passed()) ++evi_pass;

            const double kappa = s.spec.kappa();
            ++lem_total;
            if (lemma35_bounds(s.spec, traj, s.rho, s.qlb, 3.0 * (kappa - 1.0), 2e-2).passed())
                ++lem_pass;
        }
    }

    // constructed counterexample: reversed heat flow must fail the dagger audit
    {
        const Grid g(-8.0, 8.0, 512);
        EnergySpec spec;
        spec.internal = InternalEnergySpec::boltzmann();
        const auto traj =
            evolve(spec, gaussian_measure(g, 0.0, 0.5), ControlField::zero(), 0.4, 1e-3, 20, false);
        const TestFunctionDagger tf{1.0, CylindricalPhi::linear({1.0}),
                                    gaussian_measure(g, 0.0, 1.5),
                                    {gaussian_measure(g, 0.0, 1.5)}};
        const AuditReport rev =
            controlled_evi_residual(spec, time_reversed(traj), tf, audit_tol(g, 1e-3));
        reversal_failed_as_required = !rev.passed();
    }

    gate.report(5, "controlled EVI passes on the 30-audit suite; reversal fails",
                evi_pass == evi_total && evi_total == 30 && reversal_failed_as_required,
                std::to_string(evi_pass) + "/" + std::to_string(evi_total) + " pass, reversal " +
                    (reversal_failed_as_required ? "rejected" : "NOT rejected"));
    gate.report(6, "metric-growth bounds pass on the same suite at tol 2e-2",
                lem_pass == lem_total && lem_total == 15,
                std::to_string(lem_pass) + "/" + std::to_string(lem_total) + " pass");
}

// ---- criterion 7: asymptotic expansion at kappa = 0 ------------------------

void criterion_asymptotics(Gate& gate) {
    bool ok = true;
    std::string note;
    {
        const Grid g(-8.0, 8.0, 512);
        EnergySpec spec;
        spec.internal = InternalEnergySpec::boltzmann();
        const AuditReport r =
            asymptotic_expansion_audit(spec, gaussian_measure(g, 0.0, 0.6),
                                       gaussian_measure(g, 0.4, 1.4), {0.01, 0.05, 0.1}, 5e-4, 5e-3);
        ok = ok && r.passed();
        note += "heat slack " + fmt(r.slack);
    }
    {
        const Grid g(-3.0, 3.0, 512);
        EnergySpec spec;
        spec.internal = InternalEnergySpec::renyi(2.0);
        const AuditReport r = asymptotic_expansion_audit(spec, bump_measure(g, 0.0, 1.0),
                                                         bump_measure(g, 0.4, 1.2),
                                                         {0.01, 0.05, 0.1}, 2e-4, 5e-3);
        ok = ok && r.passed();
        note += ", porous slack " + fmt(r.slack);
    }
    gate.report(7, "asymptotic expansion holds at kappa = 0 for t in {0.01, 0.05, 0.1}", ok, note);
}

// ---- criteria 8-10: value function, DPP, viscosity --------------------------

ControlProblem make_value_problem(const Grid& g, RewardSpec reward, int n_basis) {
    ControlProblem p;
    p.spec.internal = InternalEnergySpec::boltzmann();
    p.reward = std::move(reward);
    p.lambda = 1.0;
    p.horizon = 8.0;
    p.dt = 5e-3;
    p.basis = ControlBasis(g, n_basis);
    p.n_windows = 6;
    p.coeff_max = 1.0;
    p.quad_samples = 64;
    return p;
}

void criteria_value(Gate& gate) {
    const Grid g(-6.0, 6.0, 128);
    const GridMeasure target = gaussian_measure(g, 0.6, 1.0);
    const GridMeasure mu0 = gaussian_measure(g, -0.8, 0.8);
    const ControlProblem smooth = make_value_problem(g, RewardSpec::w2_target(target), 6);
    const ControlProblem trivial = make_value_problem(g, RewardSpec::constant(0.3), 4);

    // criterion 8: DPP
    {
        const AuditReport generic = dpp_residual(smooth, mu0, 0.5, 240);
        const AuditReport exact = dpp_residual(trivial, gaussian_measure(g, 0.0, 1.0), 0.5, 120);
        const bool ok = generic.passed() && std::fabs(exact.slack) <= 1e-6;
        gate.report(8, "DPP residual within 0.05||h|| + tails; exact zero for constant h", ok,
                    "generic residual " + fmt(-generic.slack) + ", const residual " +
                        fmt(-exact.slack));
    }

    // criterion 9: value-function bounds and monotone improvement
    {
        bool ok = true;
        std::string note;
        int idx = 0;
        for (const auto* prob : {&smooth, &trivial}) {
            for (const auto& m : {mu0, target}) {
                const ValueResult vr = value_function(*prob, m, 200);
                const double cap = prob->reward.bound + vr.best.tail_bound;
                ok = ok && std::fabs(vr.best.phi_estimate) <= cap + 1e-12;
                ok = ok && vr.best.phi_estimate >= vr.baseline.phi_estimate - 1e-12;
                ++idx;
            }
        }
        gate.report(9, "phi estimates respect |Phi| <= ||h|| + tail and never trail the u = 0 bid",
                    ok, std::to_string(idx) + " optimizations checked");
    }

    // criterion 10: viscosity residuals
    {
        const GridMeasure rho = gaussian_measure(g, 0.4, 0.9);
        const std::vector<GridMeasure> seeds = {gaussian_measure(g, -0.4, 0.8),
                                                gaussian_measure(g, 0.0, 1.2)};
        const TestFunctionDagger dag{0.8, CylindricalPhi::log_saturating({0.7}), rho, {target}};
        const TestFunctionDdagger ddag{0.8, CylindricalPhi::log_saturating({0.7}), rho, {target}};
        const AuditReport sub = subsolution_residual(smooth, dag, seeds, 240);
        const AuditReport sup = supersolution_residual(smooth, ddag, seeds, 240);

        const GridMeasure anchor = gaussian_measure(g, 0.0, 1.0);
        const TestFunctionDagger dag0{1.0, CylindricalPhi::linear({1.0}), anchor, {anchor}};
        const TestFunctionDdagger ddag0{1.0, CylindricalPhi::linear({1.0}), anchor, {anchor}};
        const AuditReport sub0 =
            subsolution_residual(trivial, dag0, {gaussian_measure(g, 0.7, 0.9)}, 120);
        const AuditReport sup0 =
            supersolution_residual(trivial, ddag0, {gaussian_measure(g, 0.7, 0.9)}, 120);

        bool corduroy_ok = false, corduroy_star_ok = false;
        for (const auto& part : sup.parts) {
            if (part.name == "corduroy_zero") corduroy_ok = part.verdict == "PASS";
            if (part.name == "corduroy_young_optimal") corduroy_star_ok = part.verdict == "PASS";
        }
        const bool ok = sub.passed() && sup.passed() && corduroy_ok && corduroy_star_ok &&
                        std::fabs(sub0.slack) <= 1e-6 && std::fabs(sup0.slack) <= 1e-6;
        gate.report(10,
                    "viscosity residuals within tol; exact zero for constant h; corduroy holds",
                    ok,
                    "sub slack " + fmt(sub.slack) + ", sup slack " + fmt(sup.slack) +
                        ", trivial " + fmt(sub0.slack) + "/" + fmt(sup0.slack));
    }
}

// ---- criterion 11: determinism ----------------------------------------------

void criterion_determinism(Gate& gate) {
    const std::string path = std::string(WGF_SCENARIO_DIR) + "/heat_smoke.cfg";
    const std::string text = read_file(path);
    if (text.empty()) {
        gate.report(11, "byte-identical summaries for identical seeds", false,
                    "cannot read " + path);
        return;
    }
    RunOverrides over;
    over.out_dir = "out/acceptance_det_a";
    const Scenario sc1 = load_scenario(Config::parse(text), over);
    over.out_dir = "out/acceptance_det_b";
    const Scenario sc2 = load_scenario(Config::parse(text), over);
    const ScenarioResult r1 = run_scenario(sc1);
    const ScenarioResult r2 = run_scenario(sc2);
    const std::string d1 = read_file("out/acceptance_det_a/summary.json");
    const std::string d2 = read_file("out/acceptance_det_b/summary.json");
    gate.report(11, "two heat_smoke runs with one seed give byte-identical summary JSON",
                r1.all_ok && !d1.empty() && d1 == d2 && r1.summary == r2.summary,
                r1.all_ok ? "" : "heat_smoke audits not ok");
    std::filesystem::remove_all("out/acceptance_det_a");
    std::filesystem::remove_all("out/acceptance_det_b");
}

// ---- criterion 12: selftest + bundled scenarios under budget -----------------

void criterion_full_run(Gate& gate) {
    const SelftestResult st = run_selftest();
    bool ok = st.ok;
    std::string note = st.ok ? "selftest ok" : "selftest FAILED";
    for (const std::string name : {"ou_contraction", "porous", "confined_interaction",
                                   "value_heat", "trivial_const"}) {
        const std::string path = std::string(WGF_SCENARIO_DIR) + "/" + name + ".cfg";
        const std::string text = read_file(path);
        if (text.empty()) {
            ok = false;
            note += ", missing " + name;
            continue;
        }
        RunOverrides over;
        over.out_dir = "out/acceptance_" + name;
        const Scenario sc = load_scenario(Config::parse(text), over);
        const ScenarioResult r = run_scenario(sc);
        ok = ok && r.all_ok;
        note += ", " + name + (r.all_ok ? " ok" : " FAILED");
        std::filesystem::remove_all("out/acceptance_" + name);
    }
    const double total = gate.elapsed();
    ok = ok && total < 600.0;
    gate.report(12, "selftest plus bundled scenarios complete under 10 minutes", ok,
                note + ", total " + fmt(total) + " s");
}

}  // namespace

int main() {
    Gate gate;
    criterion_w2_oracle(gate);
    criterion_heat_analytic(gate);
    criterion_contraction(gate);
    criterion_porous(gate);
    criteria_controlled_evi_and_lemma35(gate);
    criterion_asymptotics(gate);
    criteria_value(gate);
    criterion_determinism(gate);
    criterion_full_run(gate);
    std::printf("%d of 12 criteria failed (total %.1f s)\n", gate.failed, gate.elapsed());
    return gate.failed;
}
