// Scenario-driven front end: run executions, check equilibria, print bound
// tables, and demo the segment-emulation attack.
#include <CLI11.hpp>
#include <cstdlib>
#include <fstream>
#include <iostream>

#include "ratsim/parallel.hpp"
#include "ratsim/scenario.hpp"

using namespace ratsim;

namespace {

std::string out_dir_default() {
    const char* env = std::getenv("RATSIM_OUT_DIR");
    return env && *env ? env : ".";
}

Rat parse_rat(const std::string& s) {
    auto slash = s.find('/');
    if (slash == std::string::npos) return Rat(std::stoll(s));
    return Rat(std::stoll(s.substr(0, slash)), std::stoll(s.substr(slash + 1)));
}

struct CommonOpts {
    std::uint64_t seed = 0;
    bool seed_set = false;
    std::size_t trials = 0;
    bool enumerate = false;
    int jobs = 0;
    std::string out;
};

void apply_overrides(Scenario& s, const CommonOpts& o) {
    if (o.seed_set) s.seed = o.seed;
    if (o.trials) s.trials = o.trials;
    if (o.enumerate) s.enumerate = true;
}

int cmd_run(const std::string& path, const CommonOpts& opts) {
    Scenario s = load_scenario(path);
    apply_overrides(s, opts);
    ExecutionPlan plan;
    std::optional<DeviationSpec> dev;
    if (s.cheater) {
        dev = scenario_deviation(s);
        plan = deviation_plan(s.topology, s.cfg, *dev);
    } else {
        plan = honest_plan(s.topology, s.cfg);
    }
    ProblemSpec problem = problem_for(s.cfg, dev ? &dev->scheme : nullptr);

    if (s.enumerate) {
        Rat legal = 0, aborted = 0;
        std::uint64_t branches = 0;
        plan.record_messages = false;
        enumerate_executions(plan, [&](const Rat& p, const ExecutionTrace& t) {
            ++branches;
            if (t.aborted()) aborted += p;
            if (classify_output(s.topology, t.outputs, problem) == Verdict::Legal) legal += p;
        });
        std::cout << "scenario " << s.name << ": branches=" << branches
                  << " P[legal]=" << rat_str(legal) << " P[abort]=" << rat_str(aborted) << "\n";
        return legal == 1 ? 0 : 2;
    }

    SeededSource src(s.seed);
    plan.record_messages = true;
    ExecutionTrace t = run_execution(plan, src);
    std::string out_path = (opts.out.empty() ? out_dir_default() : opts.out) + "/" + s.name +
                           ".trace.jsonl";
    std::ofstream f(out_path);
    f << trace_to_jsonl(t);
    Verdict v = classify_output(s.topology, t.outputs, problem);
    std::cout << "scenario " << s.name << ": "
              << (v == Verdict::Legal ? "Legal" : "Erroneous") << "\n";
    if (t.abort)
        std::cout << "  abort at round " << t.abort->round << " by agent " << t.abort->detector
                  << ": " << t.abort->reason << "\n";
    for (const auto& [a, o] : t.outputs) {
        std::cout << "  output[" << a << "] =";
        if (o)
            for (std::int64_t x : o->vals) std::cout << " " << x;
        else
            std::cout << " bottom";
        std::cout << "\n";
    }
    std::cout << "  trace: " << out_path << "\n";
    return v == Verdict::Legal ? 0 : 2;
}

int cmd_check_equilibrium(const std::string& path, const CommonOpts& opts) {
    Scenario s = load_scenario(path);
    apply_overrides(s, opts);
    EquilibriumJob job;
    job.scenario_name = s.name;
    job.original = s.topology;
    job.cfg = s.cfg;
    job.pref_of = scenario_pref_of(s);
    job.catalog = standard_catalog(s.topology, s.cfg, s.catalog_max_d, job.pref_of);
    if (s.cheater) job.catalog.push_back(scenario_deviation(s));
    job.mode = s.enumerate ? EstimationMode::Exact : EstimationMode::MonteCarlo;
    job.trials = s.trials;
    job.seed = s.seed;
    job.jobs = opts.jobs;
    EquilibriumReport rep = check_equilibrium(job);
    std::string out_path = (opts.out.empty() ? out_dir_default() : opts.out) + "/" + s.name +
                           ".report.json";
    std::ofstream f(out_path);
    f << rep.to_json() << "\n";
    std::cout << rep.to_table() << "report: " << out_path << "\n";
    return rep.deviation_found ? 3 : 0;
}

int cmd_attack_demo(const CommonOpts& opts) {
    // Built-in demonstration: knowledge sharing on a 4-ring with k = 4; the
    // cheater duplicates into n+1 = 5 virtual agents and substitutes the last
    // open record so every branch lands on its preferred value.
    Scenario s = parse_scenario(
        "name = \"attack-demo\"\n[topology]\nring = 4\n[problem]\nprotocol = \"ks\"\nk = 4\n"
        "pad_field = 2\n[cheater]\nposition = 1\nd = 5\nstrategy = \"sybil\"\n");
    apply_overrides(s, opts);
    auto pref_of = scenario_pref_of(s);
    ExecutionPlan honest = honest_plan(s.topology, s.cfg);
    ProblemSpec hp = problem_for(s.cfg, nullptr);
    Preference pref{1, pref_of(1)};
    Rat honest_eu = expected_utility_exact(honest, hp, pref);
    DeviationSpec dev = scenario_deviation(s);
    ExecutionPlan attack = deviation_plan(s.topology, s.cfg, dev);
    ProblemSpec ap = problem_for(s.cfg, &dev.scheme);
    Rat cheat_eu = expected_utility_exact(attack, ap, pref);
    std::cout << "knowledge sharing, ring n=4, k=4, cheater at 1 duplicating into d=5\n"
              << "  honest expected utility:  " << rat_str(honest_eu) << "\n"
              << "  emulation expected utility: " << rat_str(cheat_eu) << "\n"
              << "  margin: " << rat_str(cheat_eu - honest_eu)
              << (cheat_eu > honest_eu ? "  (profitable deviation)" : "") << "\n";
    return 0;
}

int cmd_bounds_table(int alpha_max, int beta_max, std::vector<int> ks,
                     std::vector<std::string> xs_raw, const std::string& format,
                     const std::string& out) {
    if (alpha_max < 3 || beta_max < alpha_max)
        throw Error(ErrorCode::ConfigError, "need alpha-max >= 3 and beta-max >= alpha-max");
    if (ks.empty()) ks = {2, 3, 4, 10};
    std::vector<Rat> xs;
    for (const auto& r : xs_raw) xs.push_back(parse_rat(r));
    if (xs.empty()) xs = {Rat(1, 2), Rat(1)};
    std::string table = format == "csv" ? bounds_table_csv(alpha_max, beta_max, ks, xs)
                                        : bounds_table_markdown(alpha_max, beta_max, ks, xs);
    if (out.empty()) {
        std::cout << table;
    } else {
        std::ofstream f(out);
        f << table;
        std::cout << "wrote " << out << "\n";
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Deterministic simulator and analysis toolkit for protocols among rational agents"};
    app.require_subcommand(1);

    CommonOpts opts;
    std::string scenario_path;

    auto add_common = [&](CLI::App* cmd, bool needs_scenario) {
        if (needs_scenario)
            cmd->add_option("scenario", scenario_path, "scenario file")->required();
        cmd->add_option("--seed", opts.seed, "randomness seed override")
            ->each([&](const std::string&) { opts.seed_set = true; });
        cmd->add_option("--trials", opts.trials, "Monte Carlo sample count override");
        cmd->add_flag("--enumerate", opts.enumerate, "exact enumeration instead of sampling");
        cmd->add_option("--jobs", opts.jobs, "parallel worker count (0 = auto)");
        cmd->add_option("--out", opts.out, "output directory (default $RATSIM_OUT_DIR or .)");
    };

    auto* run = app.add_subcommand("run", "execute one scenario and export its trace");
    add_common(run, true);
    auto* chk = app.add_subcommand("check-equilibrium", "compare honest play against a catalog");
    add_common(chk, true);
    auto* demo = app.add_subcommand("attack-demo", "built-in segment-emulation attack");
    add_common(demo, false);

    int alpha_max = 8, beta_max = 16;
    std::vector<int> ks;
    std::vector<std::string> xs;
    std::string format = "md", table_out;
    auto* bt = app.add_subcommand("bounds-table", "knowledge-bound classification and incentive grid");
    bt->add_option("--alpha-max", alpha_max);
    bt->add_option("--beta-max", beta_max);
    bt->add_option("--k", ks, "field sizes");
    bt->add_option("--x", xs, "success payoffs, e.g. 1/2");
    bt->add_option("--format", format)->check(CLI::IsMember({"md", "csv"}));
    bt->add_option("--out", table_out, "output file (default stdout)");

    CLI11_PARSE(app, argc, argv);
    try {
        if (run->parsed()) return cmd_run(scenario_path, opts);
        if (chk->parsed()) return cmd_check_equilibrium(scenario_path, opts);
        if (demo->parsed()) return cmd_attack_demo(opts);
        if (bt->parsed()) return cmd_bounds_table(alpha_max, beta_max, ks, xs, format, table_out);
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 1;
}
