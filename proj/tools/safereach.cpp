/*
 Copyright 2026 The safereach Authors

 Licensed under the Apache License, Version 2.0 (the "License");
 you may not use this file except in compliance with the License.
 You may obtain a copy of the License at

      https://www.apache.org/licenses/LICENSE-2.0

 Unless required by applicable law or agreed to in writing, software
 distributed under the License is distributed on an "AS IS" BASIS,
 WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 See the License for the specific language governing permissions and
 limitations under the License.
*/

#include <CLI11.hpp>

#include <cstdio>
#include <exception>
#include <iostream>
#include <optional>
#include <string>

#include "safereach/harness.hpp"

namespace sh = safereach::harness;
namespace reach = safereach::reach;
namespace gp = safereach::gp;

namespace {

struct Overrides {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::optional<int> steps;
    std::optional<int> iterations;
    std::optional<int> horizon;
    std::optional<int> grid;
    std::optional<std::string> explore;
    std::optional<std::string> quadrature;
    std::vector<std::string> sets;

    void attach(CLI::App* app)
    {
        app->add_option("-c,--config", config, "key = value configuration file")->check(CLI::ExistingFile);
        app->add_option("--seed", seed, "Random seed");
        app->add_option("--steps", steps, "Steps per iteration");
        app->add_option("--iterations", iterations, "Number of iterations");
        app->add_option("--horizon", horizon, "DP horizon N");
        app->add_option("--grid", grid, "Grid points per state dimension");
        app->add_option("--explore", explore, "Exploration on|off")->check(CLI::IsMember({"on", "off"}));
        app->add_option("--quadrature", quadrature, "left|midpoint|cellmass")
            ->check(CLI::IsMember({"left", "midpoint", "cellmass"}));
        app->add_option("--set", sets, "Extra key=value overrides");
    }

    sh::RunConfig resolve() const
    {
        sh::RunConfig cfg = config.empty() ? sh::RunConfig::defaults() : sh::load_config(config);
        if (seed)
            cfg.seed = *seed;
        if (steps)
            cfg.steps = *steps;
        if (iterations)
            cfg.iterations = *iterations;
        if (horizon)
            cfg.horizon = *horizon;
        if (grid)
            cfg.grid_points = *grid;
        if (explore)
            cfg.explore = *explore == "on";
        if (quadrature)
            cfg.set("quadrature", *quadrature);
        for (const auto& s : sets) {
            const auto eq = s.find('=');
            if (eq == std::string::npos)
                throw std::invalid_argument("--set expects key=value, got '" + s + "'");
            cfg.set(s.substr(0, eq), s.substr(eq + 1));
        }
        cfg.validate();
        return cfg;
    }
};

gp::GpModel model_for(const sh::RunConfig& cfg, const std::string& dataset, const std::string& hyperparams)
{
    const gp::Dataset data = dataset.empty() ? sh::seed_dataset(cfg) : sh::read_dataset(dataset);
    const auto hyps = hyperparams.empty() ? sh::initial_hyperparams(cfg) : sh::read_final_hyperparams(hyperparams, 2);
    return gp::fit(data, hyps);
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Safe reach-avoid learning for a disturbed pendulum"};
    app.set_version_flag("--version", std::string(sh::kVersion));
    app.require_subcommand(1);

    Overrides run_o;
    std::string run_out;
    auto* run = app.add_subcommand("run", "Run the learning loop and export logs");
    run_o.attach(run);
    run->add_option("-o,--out", run_out, "Output directory (overrides output_dir)");

    Overrides rep_o;
    std::string rep_dataset, rep_hyp, rep_out = "report.csv";
    double rep_u = 0.0;
    auto* rep = app.add_subcommand("report", "Posterior mean and variance on the state grid");
    rep_o.attach(rep);
    rep->add_option("--dataset", rep_dataset, "dataset.csv from a run")->required()->check(CLI::ExistingFile);
    rep->add_option("--hyperparams", rep_hyp, "hyperparams.csv from a run")->check(CLI::ExistingFile);
    rep->add_option("--u", rep_u, "Fixed control");
    rep->add_option("-o,--out", rep_out, "Output CSV");

    Overrides dp_o;
    std::string dp_dataset, dp_hyp, dp_out = "values.csv";
    auto* dp = app.add_subcommand("dp-solve", "Solve the reach-avoid DP and write value tables");
    dp_o.attach(dp);
    dp->add_option("--dataset", dp_dataset, "dataset.csv (default: the seed sample)")->check(CLI::ExistingFile);
    dp->add_option("--hyperparams", dp_hyp, "hyperparams.csv")->check(CLI::ExistingFile);
    dp->add_option("-o,--out", dp_out, "Output CSV");

    Overrides mc_o;
    std::string mc_dataset, mc_hyp;
    int mc_samples = 10000;
    auto* mc = app.add_subcommand("mc-check", "Compare the DP value at the initial state with Monte Carlo");
    mc_o.attach(mc);
    mc->add_option("--dataset", mc_dataset, "dataset.csv (default: the seed sample)")->check(CLI::ExistingFile);
    mc->add_option("--hyperparams", mc_hyp, "hyperparams.csv")->check(CLI::ExistingFile);
    mc->add_option("--samples", mc_samples, "Monte Carlo samples")->check(CLI::PositiveNumber);

    CLI11_PARSE(app, argc, argv);

    try {
        if (*run) {
            sh::RunConfig cfg = run_o.resolve();
            if (!run_out.empty())
                cfg.output_dir = run_out;
            const sh::EpisodeLog log = sh::run_learning(cfg);
            sh::export_episode(log, cfg, cfg.output_dir);
            const auto rows = sh::grid_report(sh::final_model(log), cfg.grid(), 0.0);
            sh::write_grid_report(rows, std::filesystem::path(cfg.output_dir) / "report.csv");
            std::cout << "steps " << log.steps.size() << ", violations " << log.total_violations()
                      << ", samples " << log.dataset.size() << ", max variance "
                      << sh::format_double(sh::max_report_variance(rows, cfg.safe_box)) << '\n';
            if (!log.error.empty()) {
                std::cerr << "run aborted: " << log.error << '\n';
                return 2;
            }
        }
        else if (*rep) {
            const sh::RunConfig cfg = rep_o.resolve();
            const auto rows = sh::grid_report(model_for(cfg, rep_dataset, rep_hyp), cfg.grid(), rep_u);
            sh::write_grid_report(rows, rep_out);
            std::cout << "max variance " << sh::format_double(sh::max_report_variance(rows, cfg.safe_box)) << '\n';
        }
        else if (*dp) {
            const sh::RunConfig cfg = dp_o.resolve();
            const reach::StateGrid grid = cfg.grid();
            const reach::SafeSet safe{cfg.safe_box};
            const auto sol = reach::solve(model_for(cfg, dp_dataset, dp_hyp), grid, safe, cfg.initial_target(),
                                          cfg.control_bounds, cfg.horizon, cfg.dp);
            sh::write_value_tables(sol, grid, dp_out);
            std::cout << "success probability "
                      << sh::format_double(reach::reach_avoid_success_prob_normalized(sol.values.front(), grid, safe,
                                                                                      cfg.dp.quadrature))
                      << ", max overshoot " << sh::format_double(sol.max_overshoot) << '\n';
        }
        else if (*mc) {
            const sh::RunConfig cfg = mc_o.resolve();
            const reach::StateGrid grid = cfg.grid();
            const reach::SafeSet safe{cfg.safe_box};
            const gp::GpModel model = model_for(cfg, mc_dataset, mc_hyp);
            const auto target = cfg.initial_target();
            const auto sol = reach::solve(model, grid, safe, target, cfg.control_bounds, cfg.horizon, cfg.dp);
            const Eigen::VectorXd x0 = cfg.initial_state;
            const double dp_value = reach::value_at(sol.values.front(), grid, x0, cfg.dp.interpolate);
            const auto est = reach::monte_carlo_reach_prob(model, sol.policy, grid, x0, safe, target, cfg.horizon,
                                                           mc_samples, cfg.seed, cfg.dp);
            std::cout << "dp " << sh::format_double(dp_value) << " mc " << sh::format_double(est.probability)
                      << " stderr " << sh::format_double(est.stderr_) << '\n';
        }
    }
    catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
