// Scenario-driven experiment runner for the Wasserstein gradient-flow lab.
//
// Exit codes: 0 all audits ok, 1 failed verdicts, 2 config parse error,
// 3 audit execution error.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "wgf/scenario.hpp"

namespace {

std::string read_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open config file: " + path);
    std::ostringstream buf;
    buf << f.rdbuf();
    return buf.str();
}

void print_table(const wgf::ScenarioResult& result) {
    std::printf("%-24s %-8s %12s %12s %-9s %s\n", "audit", "verdict", "slack", "tol", "expected",
                "ok");
    for (const auto& o : result.outcomes) {
        std::printf("%-24s %-8s %12.4e %12.4e %-9s %s\n", o.report.name.c_str(),
                    o.report.verdict.c_str(), o.report.slack, o.report.tol,
                    o.expect_pass ? "PASS" : "FAIL", o.ok() ? "yes" : "NO");
        if (!o.error.empty()) std::printf("    error: %s\n", o.error.c_str());
    }
}

int finish(const wgf::ScenarioResult& result) {
    print_table(result);
    if (result.any_error) return 3;
    return result.all_ok ? 0 : 1;
}

struct CommonFlags {
    std::string config_path;
    double tol_scale = -1.0;
    long long seed = -1;
    int parallel = 1;
    std::string out_dir;
};

void add_common(CLI::App* cmd, CommonFlags& flags) {
    cmd->add_option("config", flags.config_path, "scenario config file")->required();
    cmd->add_option("--tol-scale", flags.tol_scale, "scale all audit tolerances");
    cmd->add_option("--seed", flags.seed, "override the scenario seed");
    cmd->add_option("--parallel", flags.parallel, "run up to N independent audits concurrently");
    cmd->add_option("--out", flags.out_dir, "output directory");
}

wgf::Scenario load(const CommonFlags& flags) {
    const wgf::Config cfg = wgf::Config::parse(read_file(flags.config_path));
    wgf::RunOverrides over;
    if (flags.tol_scale > 0.0) over.tol_scale = flags.tol_scale;
    if (flags.seed >= 0) over.seed = static_cast<std::uint64_t>(flags.seed);
    if (!flags.out_dir.empty()) over.out_dir = flags.out_dir;
    return wgf::load_scenario(cfg, over);
}

int run_filtered(const CommonFlags& flags, const std::vector<std::string>& kinds) {
    const wgf::Scenario sc = load(flags);
    return finish(wgf::run_scenario(sc, flags.parallel, kinds));
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"controlled Wasserstein gradient flows: simulation and inequality audits"};
    app.require_subcommand(1);

    CommonFlags run_flags, flow_flags, evi_flags, value_flags, dpp_flags, sub_flags, super_flags;

    CLI::App* cmd_run = app.add_subcommand("run", "run every audit declared in the config");
    add_common(cmd_run, run_flags);

    CLI::App* cmd_selftest =
        app.add_subcommand("selftest", "oracle equivalences and analytic solver checks");

    CLI::App* cmd_flow =
        app.add_subcommand("flow", "evolve the [flow] trajectory, dump CSV slices + manifest");
    add_common(cmd_flow, flow_flags);

    CLI::App* cmd_evi = app.add_subcommand("evi", "EVI-family audits only");
    add_common(cmd_evi, evi_flags);
    CLI::App* cmd_value = app.add_subcommand("value", "value-function bound audits only");
    add_common(cmd_value, value_flags);
    CLI::App* cmd_dpp = app.add_subcommand("dpp", "dynamic-programming audits only");
    add_common(cmd_dpp, dpp_flags);
    CLI::App* cmd_sub = app.add_subcommand("subsol", "subsolution audits only");
    add_common(cmd_sub, sub_flags);
    CLI::App* cmd_super = app.add_subcommand("supersol", "supersolution audits only");
    add_common(cmd_super, super_flags);

    CLI11_PARSE(app, argc, argv);

    try {
        if (cmd_selftest->parsed()) {
            const wgf::SelftestResult r = wgf::run_selftest();
            for (const auto& line : r.lines) std::printf("%s\n", line.c_str());
            return r.ok ? 0 : 1;
        }
        if (cmd_run->parsed()) {
            const wgf::Scenario sc = load(run_flags);
            return finish(wgf::run_scenario(sc, run_flags.parallel));
        }
        if (cmd_flow->parsed()) {
            const wgf::Scenario sc = load(flow_flags);
            const wgf::Config cfg = wgf::Config::parse(read_file(flow_flags.config_path));
            if (cfg.has("flow")) {
                const auto& f = cfg.section("flow");
                wgf::Rng rng(sc.seed);
                const double t_final = f.number_or("t_final", 0.5);
                const wgf::ControlField u = wgf::detail::parse_control(sc, f, t_final, rng);
                const auto traj =
                    wgf::evolve(sc.spec, sc.measure(f.get("mu")), u, t_final,
                                f.number_or("dt", 1e-3), f.integer_or("stride", 10));
                wgf::dump_trajectory(sc, traj, sc.out_dir + "/trajectory");
                std::printf("trajectory: %d slices -> %s/trajectory\n", traj.nodes(),
                            sc.out_dir.c_str());
            }
            return finish(wgf::run_scenario(
                sc, flow_flags.parallel,
                {"gaussian_variance", "entropy_monotone", "porous_convergence"}));
        }
        if (cmd_evi->parsed())
            return run_filtered(evi_flags, {"evi_pointwise", "contraction", "asymptotics",
                                            "entropy_monotone", "controlled_evi", "lemma35"});
        if (cmd_value->parsed()) return run_filtered(value_flags, {"value_bounds"});
        if (cmd_dpp->parsed()) return run_filtered(dpp_flags, {"dpp"});
        if (cmd_sub->parsed()) return run_filtered(sub_flags, {"subsolution"});
        if (cmd_super->parsed()) return run_filtered(super_flags, {"supersolution"});
    } catch (const wgf::ConfigError& e) {
        std::fprintf(stderr, "%s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 3;
    }
    return 0;
}
