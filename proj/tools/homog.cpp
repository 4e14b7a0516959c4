// Command-line front end: run experiments, plan budgets, dump environments
// and refit results files.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "homog/analysis.hpp"
#include "homog/config.hpp"
#include "homog/corrector.hpp"
#include "homog/errors.hpp"
#include "homog/experiment.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 1;
constexpr int kExitRuntime = 2;

struct Overrides {
    std::optional<std::uint64_t> seed;
    std::optional<int> workers;
    std::optional<std::string> output;
    std::optional<double> tol;

    void apply(homog::ExperimentConfig& cfg) const {
        if (seed) cfg.seed = *seed;
        if (workers) cfg.workers = *workers;
        if (output) cfg.output = *output;
        if (tol) cfg.solver.tol = *tol;
        cfg.validate();
    }
};

void add_overrides(CLI::App* cmd, Overrides& o) {
    cmd->add_option("--seed", o.seed, "Master seed (overrides the config)");
    cmd->add_option("--workers", o.workers, "Worker threads (overrides the config)")->check(CLI::PositiveNumber);
    cmd->add_option("--output", o.output, "Results CSV path (overrides the config)");
    cmd->add_option("--tol", o.tol, "Relative CG tolerance (overrides the config)")->check(CLI::PositiveNumber);
}

int cmd_run(const std::string& config_path, const Overrides& o) {
    homog::ExperimentConfig cfg = homog::load_config(config_path);
    o.apply(cfg);
    const homog::ExperimentResult result = homog::run_experiment(cfg);
    homog::write_outputs(cfg, result);

    for (const auto& p : result.points) {
        std::fprintf(stderr, "%s point=%lld k=%lld mean=%.8g stat=%.4g", p.method.c_str(),
                     static_cast<long long>(p.point), static_cast<long long>(p.errors.count), p.errors.mean,
                     p.errors.statistical_error);
        if (p.errors.reference.kind != homog::ReferenceKind::None)
            std::fprintf(stderr, " syst=%.4g", p.errors.systematic_error);
        if (p.warnings) std::fprintf(stderr, " warnings=%lld", static_cast<long long>(p.warnings));
        std::fprintf(stderr, " (%.2fs)\n", p.wall_time_s);
    }
    for (const auto& f : result.fits) {
        if (f.fit)
            std::fprintf(stderr, "fit %s: rate %.3f prefactor %.3f\n", f.curve.c_str(), f.fit->rate, f.fit->prefactor);
        else
            std::fprintf(stderr, "fit %s skipped: %s\n", f.curve.c_str(), f.note.c_str());
    }
    std::fprintf(stderr, "wrote %s\n", cfg.output.c_str());
    return kExitOk;
}

int cmd_plan(double delta, double c_syst, double c_rand, int dimension) {
    const homog::BudgetPlan plan = homog::plan_budget(delta, c_syst, c_rand, dimension);
    std::printf("delta       %g\n", plan.delta);
    std::printf("C_syst      %g\n", plan.c_syst);
    std::printf("C_rand      %g\n", plan.c_rand);
    std::printf("d           %d\n", plan.dimension);
    std::printf("N           %lld\n", static_cast<long long>(plan.side));
    std::printf("k           %lld\n", static_cast<long long>(plan.realizations));
    std::printf("cost k*N^d  %.6g\n", plan.cost_proxy);
    return kExitOk;
}

int cmd_dump_env(const std::string& config_path, const Overrides& o, std::int64_t side, std::int64_t index,
                 const std::string& corrector_path) {
    homog::ExperimentConfig cfg = homog::load_config(config_path);
    o.apply(cfg);
    if (!o.output) cfg.output = "environment.csv";
    if (side < 1) throw homog::ConfigError("--side must be >= 1");
    const std::uint64_t seed = homog::realization_seed(cfg.seed, side, index);
    const homog::BoxEnvironment box = homog::sample_box(cfg.environment, static_cast<int>(side), seed);

    std::ofstream out(cfg.output);
    if (!out) throw homog::Error("cannot write " + cfg.output);
    homog::write_csv(out, box);

    if (!corrector_path.empty()) {
        homog::CorrectorField phi;
        switch (cfg.method) {
            case homog::ExperimentMethod::Dirichlet: phi = homog::solve_dirichlet(box, cfg.xi, cfg.solver); break;
            case homog::ExperimentMethod::Regularized:
                phi = homog::solve_regularized(box, cfg.xi, cfg.regularization.mu(static_cast<int>(side)), cfg.solver);
                break;
            case homog::ExperimentMethod::PeriodLaw:
                phi = homog::solve_periodic(homog::sample_periodic_law(cfg.environment, static_cast<int>(side), seed),
                                            cfg.xi, 0.0, cfg.solver);
                break;
            case homog::ExperimentMethod::PeriodSpace:
                phi = homog::solve_periodic(homog::periodize_space(box), cfg.xi, 0.0, cfg.solver);
                break;
            default: throw homog::ConfigError("--corrector needs a corrector method in the config");
        }
        std::ofstream field_out(corrector_path);
        if (!field_out) throw homog::Error("cannot write " + corrector_path);
        homog::write_csv(field_out, phi);
    }
    std::fprintf(stderr, "wrote %s (seed %llu)\n", cfg.output.c_str(), static_cast<unsigned long long>(seed));
    return kExitOk;
}

int cmd_fit(const std::string& results_path, const std::string& output, bool weighted) {
    std::ifstream in(results_path);
    if (!in) throw homog::ConfigError("cannot open results file '" + results_path + "'");
    const auto fits = homog::fit_results_csv(in, weighted);
    if (output.empty() || output == "-") {
        homog::write_fit_report(std::cout, fits);
    } else {
        std::ofstream out(output);
        if (!out) throw homog::Error("cannot write " + output);
        homog::write_fit_report(out, fits);
    }
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Homogenized coefficients of random conductance models"};
    app.require_subcommand(1);

    std::string config_path;
    Overrides overrides;

    auto* run = app.add_subcommand("run", "Run the sweep described by a config file");
    run->add_option("config", config_path, "Experiment config")->required();
    add_overrides(run, overrides);

    double delta = 0.0, c_syst = 1.29, c_rand = 1.48;
    int dimension = 2;
    auto* plan = app.add_subcommand("plan", "Budget (N, k) for a target RMS error");
    plan->add_option("--delta", delta, "Target RMS error")->required();
    plan->add_option("--c-syst", c_syst, "Systematic-error prefactor")->capture_default_str();
    plan->add_option("--c-rand", c_rand, "Random-error prefactor")->capture_default_str();
    plan->add_option("-d,--dim", dimension, "Dimension")->capture_default_str();

    std::int64_t side = 0, index = 0;
    std::string corrector_path;
    auto* dump = app.add_subcommand("dump-env", "Write one box environment (and optionally its corrector) as CSV");
    dump->add_option("config", config_path, "Experiment config")->required();
    dump->add_option("--side", side, "Box side N")->required();
    dump->add_option("--realization", index, "Realization index at that side")->capture_default_str();
    dump->add_option("--corrector", corrector_path, "Also solve and write the corrector of the config's method");
    add_overrides(dump, overrides);

    std::string results_path, fit_output;
    bool weighted = false;
    auto* fit = app.add_subcommand("fit", "Refit error rates of an existing results CSV");
    fit->add_option("results", results_path, "Results CSV")->required();
    fit->add_option("--output", fit_output, "Report path (stdout by default)");
    fit->add_flag("--weighted", weighted, "Weight points by their realization count");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitConfig;
    }

    try {
        if (*run) return cmd_run(config_path, overrides);
        if (*plan) return cmd_plan(delta, c_syst, c_rand, dimension);
        if (*dump) return cmd_dump_env(config_path, overrides, side, index, corrector_path);
        if (*fit) return cmd_fit(results_path, fit_output, weighted);
    } catch (const homog::ConfigError& e) {
        std::fprintf(stderr, "configuration error: %s\n", e.what());
        return kExitConfig;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitRuntime;
    }
    return kExitConfig;
}
