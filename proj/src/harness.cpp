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

#include "safereach/harness.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <limits>
#include <random>
#include <sstream>
#include <stdexcept>

namespace safereach::harness {

namespace fs = std::filesystem;

namespace {

std::string trim(const std::string& s)
{
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos)
        return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

double parse_double(const std::string& key, const std::string& text)
{
    const std::string t = trim(text);
    char* end = nullptr;
    const double v = std::strtod(t.c_str(), &end);
    if (t.empty() || end != t.c_str() + t.size())
        throw std::invalid_argument("config: key '" + key + "' expects a number, got '" + text + "'");
    return v;
}

int parse_int(const std::string& key, const std::string& text)
{
    const std::string t = trim(text);
    int v = 0;
    auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
    if (t.empty() || ec != std::errc() || ptr != t.data() + t.size())
        throw std::invalid_argument("config: key '" + key + "' expects an integer, got '" + text + "'");
    return v;
}

bool parse_bool(const std::string& key, const std::string& text)
{
    const std::string t = trim(text);
    if (t == "on" || t == "true" || t == "1" || t == "yes")
        return true;
    if (t == "off" || t == "false" || t == "0" || t == "no")
        return false;
    throw std::invalid_argument("config: key '" + key + "' expects on/off, got '" + text + "'");
}

Eigen::VectorXd parse_vector(const std::string& key, const std::string& text, Eigen::Index expected)
{
    std::vector<double> values;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ','))
        values.push_back(parse_double(key, item));
    if (static_cast<Eigen::Index>(values.size()) != expected) {
        throw std::invalid_argument("config: key '" + key + "' expects " + std::to_string(expected)
                                    + " comma-separated values");
    }
    return Eigen::Map<Eigen::VectorXd>(values.data(), expected);
}

std::string join(const Eigen::VectorXd& v)
{
    std::string out;
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        if (i)
            out += ',';
        out += format_double(v[i]);
    }
    return out;
}

const char* quadrature_name(reach::Quadrature q)
{
    switch (q) {
    case reach::Quadrature::LeftNode:
        return "left";
    case reach::Quadrature::Midpoint:
        return "midpoint";
    case reach::Quadrature::CellMass:
        return "cellmass";
    }
    return "left";
}

std::ofstream open_out(const fs::path& path)
{
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out)
        throw std::runtime_error("cannot open '" + path.string() + "' for writing");
    return out;
}

void finish(std::ofstream& out, const fs::path& path)
{
    out.flush();
    if (!out)
        throw std::runtime_error("write to '" + path.string() + "' failed");
}

std::vector<std::string> split_csv(const std::string& line)
{
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ','))
        cells.push_back(trim(cell));
    return cells;
}

Eigen::Vector2d observe(const RunConfig& cfg, const plant::PlantState& s, double u, std::mt19937_64& rng)
{
    const plant::PlantState next = plant::euler_step(s, u, cfg.pendulum, cfg.disturbance);
    std::normal_distribution<double> normal(0.0, 1.0);
    Eigen::Vector2d y = next.vector();
    for (Eigen::Index d = 0; d < 2; ++d) {
        if (cfg.process_noise_std[d] > 0.0)
            y[d] += cfg.process_noise_std[d] * normal(rng);
    }
    if (cfg.clip_to_state_box)
        y = cfg.state_box.project(y);
    return y;
}

Eigen::VectorXd joint(const Eigen::Vector2d& x, double u) { return Eigen::Vector3d(x[0], x[1], u); }

} // namespace

std::string format_double(double v)
{
    if (std::isnan(v))
        return "nan";
    if (std::isinf(v))
        return v > 0 ? "inf" : "-inf";
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    if (ec != std::errc())
        throw std::runtime_error("format_double: conversion failed");
    return std::string(buf, ptr);
}

RunConfig RunConfig::defaults()
{
    RunConfig c;
    const double pi = std::numbers::pi;
    c.state_box = Box(Eigen::Vector2d(-pi / 2, -10.0), Eigen::Vector2d(pi / 2, 10.0));
    c.safe_box = Box(Eigen::Vector2d(-pi / 4, -10.0), Eigen::Vector2d(pi / 4, 10.0));
    const double r = 2.0 * pi / 100.0;
    c.target_radius = r;
    c.target_box = Box(Eigen::Vector2d(-r, -1.0), Eigen::Vector2d(r, 1.0));
    c.control_bounds = Box(Eigen::VectorXd::Constant(1, -5.0), Eigen::VectorXd::Constant(1, 5.0));
    c.dp.quadrature = reach::Quadrature::CellMass;
    c.mle.fit_mean = false;
    c.dp.action.search = opt::SearchConfig{0.25, 0.5, 1e-3, 200};
    return c;
}

void RunConfig::validate() const
{
    pendulum.validate();
    state_box.validate();
    safe_box.validate();
    control_bounds.validate();
    if (state_box.dim() != 2 || safe_box.dim() != 2)
        throw std::invalid_argument("config: state and safe boxes must be 2-dimensional");
    if (control_bounds.dim() != 1)
        throw std::invalid_argument("config: the pendulum has one control input");
    if (!state_box.contains(safe_box))
        throw std::invalid_argument("config: safe box must lie inside the state box");
    if (!initial_target().inside(safe_box))
        throw std::invalid_argument("config: initial target must lie inside the safe box");
    if (horizon < 1)
        throw std::invalid_argument("config: horizon must be at least 1");
    if (steps < 1)
        throw std::invalid_argument("config: steps must be at least 1");
    if (iterations < 1)
        throw std::invalid_argument("config: iterations must be at least 1");
    if (refit_period < 1)
        throw std::invalid_argument("config: refit_period must be at least 1");
    if (grid_points < 2)
        throw std::invalid_argument("config: grid_points must be at least 2");
    if (mean_degree < 1)
        throw std::invalid_argument("config: mean_degree must be at least 1");
    if ((process_noise_std.array() < 0.0).any())
        throw std::invalid_argument("config: process_noise_std must be nonnegative");
    if (exploration.trigger_period < 1 || exploration.control_quadrature_points < 1)
        throw std::invalid_argument("config: exploration period and quadrature must be positive");
    if (explore)
        explore::eroded_safe_box(reach::SafeSet{safe_box}, exploration.radius);
    dp.action.search.validate();
    for (const auto& h : initial_hyperparams(*this))
        h.validate();
}

void RunConfig::set(const std::string& raw_key, const std::string& value)
{
    const std::string key = trim(raw_key);
    const std::string v = trim(value);
    auto vec2 = [&] { return Eigen::Vector2d(parse_vector(key, v, 2)); };

    if (key == "mass")
        pendulum.mass = parse_double(key, v);
    else if (key == "length")
        pendulum.length = parse_double(key, v);
    else if (key == "friction")
        pendulum.friction = parse_double(key, v);
    else if (key == "gravity")
        pendulum.gravity = parse_double(key, v);
    else if (key == "sample_time")
        pendulum.sample_time = parse_double(key, v);
    else if (key == "wrap_angle")
        pendulum.wrap_angle = parse_bool(key, v);
    else if (key == "disturbance_amplitude") {
        const auto a = vec2();
        disturbance.amplitude = {a[0], a[1]};
    }
    else if (key == "disturbance_frequency") {
        const auto f = vec2();
        disturbance.frequency = {f[0], f[1]};
    }
    else if (key == "process_noise_std")
        process_noise_std = vec2();
    else if (key == "state_lower")
        state_box.lower = vec2();
    else if (key == "state_upper")
        state_box.upper = vec2();
    else if (key == "clip_to_state_box")
        clip_to_state_box = parse_bool(key, v);
    else if (key == "train_outside_state_box")
        train_outside_state_box = parse_bool(key, v);
    else if (key == "safe_lower")
        safe_box.lower = vec2();
    else if (key == "safe_upper")
        safe_box.upper = vec2();
    else if (key == "grid_over_state_box")
        grid_over_state_box = parse_bool(key, v);
    else if (key == "grid_points")
        grid_points = parse_int(key, v);
    else if (key == "target_shape") {
        if (v != "ball" && v != "box")
            throw std::invalid_argument("config: target_shape must be ball or box");
        target_is_ball = v == "ball";
    }
    else if (key == "target_center")
        target_center = vec2();
    else if (key == "target_radius")
        target_radius = parse_double(key, v);
    else if (key == "target_lower")
        target_box.lower = vec2();
    else if (key == "target_upper")
        target_box.upper = vec2();
    else if (key == "control_lower")
        control_bounds.lower = parse_vector(key, v, 1);
    else if (key == "control_upper")
        control_bounds.upper = parse_vector(key, v, 1);
    else if (key == "horizon")
        horizon = parse_int(key, v);
    else if (key == "steps")
        steps = parse_int(key, v);
    else if (key == "iterations")
        iterations = parse_int(key, v);
    else if (key == "refit_period")
        refit_period = parse_int(key, v);
    else if (key == "initial_state")
        initial_state = vec2();
    else if (key == "reset_on_violation")
        reset_on_violation = parse_bool(key, v);
    else if (key == "explore")
        explore = parse_bool(key, v);
    else if (key == "explore_radius")
        exploration.radius = parse_double(key, v);
    else if (key == "explore_period")
        exploration.trigger_period = parse_int(key, v);
    else if (key == "explore_quadrature")
        exploration.control_quadrature_points = parse_int(key, v);
    else if (key == "hyp_noise_variance")
        hyp_noise_variance = vec2();
    else if (key == "hyp_signal_variance")
        hyp_signal_variance = vec2();
    else if (key == "hyp_length_scales_1")
        hyp_length_scales[0] = parse_vector(key, v, 3);
    else if (key == "hyp_length_scales_2")
        hyp_length_scales[1] = parse_vector(key, v, 3);
    else if (key == "mean_degree")
        mean_degree = parse_int(key, v);
    else if (key == "mean_init") {
        if (v != "nominal" && v != "zero")
            throw std::invalid_argument("config: mean_init must be nominal or zero");
        nominal_mean = v == "nominal";
    }
    else if (key == "mle_fit_mean")
        mle.fit_mean = parse_bool(key, v);
    else if (key == "mle_ridge")
        mle.mean_ridge = parse_double(key, v);
    else if (key == "mle_lower_factor")
        mle.lower_factor = parse_double(key, v);
    else if (key == "mle_upper_factor")
        mle.upper_factor = parse_double(key, v);
    else if (key == "mle_starts")
        mle.starts = parse_int(key, v);
    else if (key == "mle_max_evals")
        mle.search.max_evals = parse_int(key, v);
    else if (key == "quadrature") {
        if (v == "left")
            dp.quadrature = reach::Quadrature::LeftNode;
        else if (v == "midpoint")
            dp.quadrature = reach::Quadrature::Midpoint;
        else if (v == "cellmass")
            dp.quadrature = reach::Quadrature::CellMass;
        else
            throw std::invalid_argument("config: quadrature must be left, midpoint or cellmass");
    }
    else if (key == "include_noise_in_dp")
        dp.include_noise_in_dp = parse_bool(key, v);
    else if (key == "renormalize")
        dp.renormalize = parse_bool(key, v);
    else if (key == "interpolate")
        dp.interpolate = parse_bool(key, v);
    else if (key == "control_initial_mesh")
        dp.action.search.initial_mesh = parse_double(key, v);
    else if (key == "control_mesh_tolerance")
        dp.action.search.mesh_tolerance = parse_double(key, v);
    else if (key == "control_max_evals")
        dp.action.search.max_evals = parse_int(key, v);
    else if (key == "seed") {
        const std::string t = v;
        std::uint64_t s = 0;
        auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), s);
        if (t.empty() || ec != std::errc() || ptr != t.data() + t.size())
            throw std::invalid_argument("config: seed must be a nonnegative integer");
        seed = s;
    }
    else if (key == "output_dir")
        output_dir = v;
    else
        throw std::invalid_argument("config: unknown key '" + key + "'");
}

std::vector<std::pair<std::string, std::string>> RunConfig::entries() const
{
    auto b = [](bool x) { return std::string(x ? "on" : "off"); };
    auto d = [](double x) { return format_double(x); };
    auto i = [](long long x) { return std::to_string(x); };
    return {
        {"mass", d(pendulum.mass)},
        {"length", d(pendulum.length)},
        {"friction", d(pendulum.friction)},
        {"gravity", d(pendulum.gravity)},
        {"sample_time", d(pendulum.sample_time)},
        {"wrap_angle", b(pendulum.wrap_angle)},
        {"disturbance_amplitude", join(Eigen::Vector2d(disturbance.amplitude[0], disturbance.amplitude[1]))},
        {"disturbance_frequency", join(Eigen::Vector2d(disturbance.frequency[0], disturbance.frequency[1]))},
        {"process_noise_std", join(process_noise_std)},
        {"state_lower", join(state_box.lower)},
        {"state_upper", join(state_box.upper)},
        {"clip_to_state_box", b(clip_to_state_box)},
        {"train_outside_state_box", b(train_outside_state_box)},
        {"safe_lower", join(safe_box.lower)},
        {"safe_upper", join(safe_box.upper)},
        {"grid_over_state_box", b(grid_over_state_box)},
        {"grid_points", i(grid_points)},
        {"target_shape", target_is_ball ? "ball" : "box"},
        {"target_center", join(target_center)},
        {"target_radius", d(target_radius)},
        {"target_lower", join(target_box.lower)},
        {"target_upper", join(target_box.upper)},
        {"control_lower", join(control_bounds.lower)},
        {"control_upper", join(control_bounds.upper)},
        {"horizon", i(horizon)},
        {"steps", i(steps)},
        {"iterations", i(iterations)},
        {"refit_period", i(refit_period)},
        {"initial_state", join(initial_state)},
        {"reset_on_violation", b(reset_on_violation)},
        {"explore", b(explore)},
        {"explore_radius", d(exploration.radius)},
        {"explore_period", i(exploration.trigger_period)},
        {"explore_quadrature", i(exploration.control_quadrature_points)},
        {"hyp_noise_variance", join(hyp_noise_variance)},
        {"hyp_signal_variance", join(hyp_signal_variance)},
        {"hyp_length_scales_1", join(hyp_length_scales[0])},
        {"hyp_length_scales_2", join(hyp_length_scales[1])},
        {"mean_degree", i(mean_degree)},
        {"mean_init", nominal_mean ? "nominal" : "zero"},
        {"mle_fit_mean", b(mle.fit_mean)},
        {"mle_ridge", d(mle.mean_ridge)},
        {"mle_lower_factor", d(mle.lower_factor)},
        {"mle_upper_factor", d(mle.upper_factor)},
        {"mle_starts", i(mle.starts)},
        {"mle_max_evals", i(mle.search.max_evals)},
        {"quadrature", quadrature_name(dp.quadrature)},
        {"include_noise_in_dp", b(dp.include_noise_in_dp)},
        {"renormalize", b(dp.renormalize)},
        {"interpolate", b(dp.interpolate)},
        {"control_initial_mesh", d(dp.action.search.initial_mesh)},
        {"control_mesh_tolerance", d(dp.action.search.mesh_tolerance)},
        {"control_max_evals", i(dp.action.search.max_evals)},
        {"seed", std::to_string(seed)},
    };
}

reach::TargetSet RunConfig::initial_target() const
{
    if (target_is_ball)
        return reach::TargetSet::ball(target_center, target_radius);
    return reach::TargetSet::box(target_box);
}

reach::StateGrid RunConfig::grid() const
{
    return reach::StateGrid(grid_over_state_box ? state_box : safe_box, grid_points);
}

RunConfig parse_config(std::istream& in)
{
    RunConfig cfg = RunConfig::defaults();
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos)
            line.erase(hash);
        line = trim(line);
        if (line.empty())
            continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw std::invalid_argument("config line " + std::to_string(lineno) + ": expected key = value");
        try {
            cfg.set(line.substr(0, eq), line.substr(eq + 1));
        }
        catch (const std::invalid_argument& e) {
            throw std::invalid_argument("config line " + std::to_string(lineno) + ": " + e.what());
        }
    }
    return cfg;
}

RunConfig load_config(const fs::path& path)
{
    std::ifstream in(path);
    if (!in)
        throw std::runtime_error("cannot open config '" + path.string() + "'");
    return parse_config(in);
}

std::vector<gp::GpHyperparams> initial_hyperparams(const RunConfig& cfg)
{
    std::vector<gp::GpHyperparams> hyps;
    const auto nominal = plant::nominal_mean_coeffs(cfg.pendulum, cfg.mean_degree);
    for (std::size_t j = 0; j < 2; ++j) {
        gp::GpHyperparams h;
        const auto ji = static_cast<Eigen::Index>(j);
        h.noise_variance = cfg.hyp_noise_variance[ji];
        h.signal_variance = cfg.hyp_signal_variance[ji];
        h.length_scales = cfg.hyp_length_scales[j];
        h.poly_coeffs = cfg.nominal_mean ? nominal[j] : Eigen::MatrixXd::Zero(3, cfg.mean_degree + 1);
        hyps.push_back(std::move(h));
    }
    return hyps;
}

gp::Dataset seed_dataset(const RunConfig& cfg)
{
    std::mt19937_64 rng(cfg.seed);
    gp::Dataset data(3, 2);
    const plant::PlantState s0 = plant::PlantState::from(cfg.initial_state);
    data.add(joint(cfg.initial_state, 0.0), observe(cfg, s0, 0.0, rng));
    return data;
}

int EpisodeLog::total_violations() const
{
    int total = 0;
    for (int v : violations)
        total += v;
    return total;
}

EpisodeLog run_learning(const RunConfig& cfg)
{
    cfg.validate();
    EpisodeLog log;
    std::mt19937_64 rng(cfg.seed);

    const reach::StateGrid grid = cfg.grid();
    const reach::SafeSet safe{cfg.safe_box};
    reach::TargetSet target = cfg.initial_target();
    const std::vector<gp::GpHyperparams> prior = initial_hyperparams(cfg);
    std::vector<gp::GpHyperparams> hyps = prior;

    // Seed sample (initial_state, u = 0): the dataset is never empty.
    const plant::PlantState s0 = plant::PlantState::from(cfg.initial_state);
    log.dataset.add(joint(cfg.initial_state, 0.0), observe(cfg, s0, 0.0, rng));
    log.violations.assign(static_cast<std::size_t>(cfg.iterations), 0);

    int step = 0;
    try {
        for (int it = 0; it < cfg.iterations; ++it) {
            plant::PlantState state = s0;
            for (int s = 0; s < cfg.steps; ++s) {
                ++step;
                const auto t0 = std::chrono::steady_clock::now();

                gp::GpModel model = gp::fit(log.dataset, hyps);
                if (cfg.explore && (step - 1) % cfg.exploration.trigger_period == 0)
                    target = explore::select_target(model, safe, cfg.exploration, grid, cfg.control_bounds);

                if (step % cfg.refit_period == 0) {
                    gp::MleResult r = gp::optimize_hyperparams(log.dataset, hyps, prior, cfg.mle);
                    for (std::size_t j = 0; j < hyps.size(); ++j) {
                        log.refits.push_back({step, static_cast<int>(j), r.loglik_before[j], r.loglik_after[j],
                                              hyps[j], r.hyperparams[j], r.fallback});
                    }
                    hyps = r.hyperparams;
                    model = gp::fit(log.dataset, hyps);
                }

                const reach::Plan plan = reach::plan_action(model, grid, safe, target, cfg.control_bounds,
                                                            cfg.horizon, state.vector(), cfg.dp);
                const double u = plan.u[0];
                const Eigen::Vector2d y = observe(cfg, state, u, rng);

                StepRecord rec;
                rec.iteration = it + 1;
                rec.step = step;
                rec.state = state;
                rec.u = u;
                rec.next = plant::PlantState::from(y);
                rec.in_safe = plant::in_safe_set(state, cfg.safe_box);
                rec.next_in_safe = plant::in_safe_set(rec.next, cfg.safe_box);
                rec.dp_value = plan.value;
                rec.target_center = target.center();
                rec.wall_seconds =
                    std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
                if (!rec.next_in_safe)
                    ++log.violations[static_cast<std::size_t>(it)];
                log.steps.push_back(rec);

                if (cfg.train_outside_state_box || cfg.state_box.contains(state.vector()))
                    log.dataset.add(joint(state.vector(), u), y);
                state = rec.next;
                if (cfg.reset_on_violation && !rec.next_in_safe)
                    state = s0;
            }
        }
    }
    catch (const std::exception& e) {
        log.error = "step " + std::to_string(step) + ": " + e.what();
    }
    log.final_hyperparams = hyps;
    return log;
}

gp::GpModel final_model(const EpisodeLog& log) { return gp::fit(log.dataset, log.final_hyperparams); }

std::vector<GridReportRow> grid_report(const gp::GpModel& model, const reach::StateGrid& grid, double fixed_u)
{
    if (grid.dim() != 2 || model.output_dim() != 2 || model.input_dim() != 3)
        throw std::invalid_argument("grid_report: expects a 2-state, 1-control model");
    std::vector<GridReportRow> rows;
    rows.reserve(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const Eigen::VectorXd x = grid.node(i);
        const gp::Posterior p = model.predict(joint(Eigen::Vector2d(x[0], x[1]), fixed_u));
        GridReportRow row;
        row.x = x;
        row.mean = p.mean;
        for (Eigen::Index d = 0; d < 2; ++d)
            row.variance[d] = p.variance[d] + model.hyperparams(d).noise_variance;
        rows.push_back(row);
    }
    return rows;
}

double max_report_variance(const std::vector<GridReportRow>& rows, const Box& region)
{
    double best = 0.0;
    for (const auto& r : rows) {
        if (region.contains(Eigen::VectorXd(r.x)))
            best = std::max(best, r.variance.maxCoeff());
    }
    return best;
}

void write_grid_report(const std::vector<GridReportRow>& rows, const fs::path& path)
{
    std::ofstream out = open_out(path);
    out << "x1,x2,mean1,mean2,var1,var2,log10var1,log10var2\n";
    for (const auto& r : rows) {
        out << format_double(r.x[0]) << ',' << format_double(r.x[1]) << ',' << format_double(r.mean[0]) << ','
            << format_double(r.mean[1]) << ',' << format_double(r.variance[0]) << ','
            << format_double(r.variance[1]) << ',' << format_double(std::log10(r.variance[0])) << ','
            << format_double(std::log10(r.variance[1])) << '\n';
    }
    finish(out, path);
}

namespace {

std::string hyperparam_header(const gp::GpHyperparams& h)
{
    std::string s = "noise_variance,signal_variance";
    for (Eigen::Index i = 0; i < h.length_scales.size(); ++i)
        s += ",L" + std::to_string(i + 1);
    for (Eigen::Index i = 0; i < h.poly_coeffs.rows(); ++i)
        for (Eigen::Index j = 0; j < h.poly_coeffs.cols(); ++j)
            s += ",h_" + std::to_string(i + 1) + "_" + std::to_string(j);
    return s;
}

std::string hyperparam_cells(const gp::GpHyperparams& h)
{
    std::string s = format_double(h.noise_variance) + "," + format_double(h.signal_variance);
    for (Eigen::Index i = 0; i < h.length_scales.size(); ++i)
        s += "," + format_double(h.length_scales[i]);
    for (Eigen::Index i = 0; i < h.poly_coeffs.rows(); ++i)
        for (Eigen::Index j = 0; j < h.poly_coeffs.cols(); ++j)
            s += "," + format_double(h.poly_coeffs(i, j));
    return s;
}

} // namespace

void write_dataset(const gp::Dataset& data, const fs::path& path)
{
    std::ofstream out = open_out(path);
    out << "x1,x2,u,y1,y2\n";
    for (std::size_t i = 0; i < data.size(); ++i) {
        const auto& x = data.inputs()[i];
        const auto& y = data.targets()[i];
        out << format_double(x[0]) << ',' << format_double(x[1]) << ',' << format_double(x[2]) << ','
            << format_double(y[0]) << ',' << format_double(y[1]) << '\n';
    }
    finish(out, path);
}

gp::Dataset read_dataset(const fs::path& path)
{
    std::ifstream in(path);
    if (!in)
        throw std::runtime_error("cannot open dataset '" + path.string() + "'");
    gp::Dataset data(3, 2);
    std::string line;
    std::getline(in, line);
    int lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (trim(line).empty())
            continue;
        const auto cells = split_csv(line);
        if (cells.size() != 5)
            throw std::runtime_error(path.string() + ":" + std::to_string(lineno) + ": expected 5 columns");
        std::array<double, 5> v{};
        for (std::size_t c = 0; c < 5; ++c)
            v[c] = parse_double("dataset", cells[c]);
        data.add(Eigen::Vector3d(v[0], v[1], v[2]), Eigen::Vector2d(v[3], v[4]));
    }
    return data;
}

std::vector<gp::GpHyperparams> read_final_hyperparams(const fs::path& path, std::size_t outputs)
{
    std::ifstream in(path);
    if (!in)
        throw std::runtime_error("cannot open hyperparameters '" + path.string() + "'");
    std::string line;
    std::getline(in, line);
    const auto header = split_csv(line);
    std::size_t n_ls = 0;
    std::size_t n_h = 0;
    int max_i = 0;
    int max_j = 0;
    for (const auto& h : header) {
        if (h.size() > 1 && h[0] == 'L')
            ++n_ls;
        if (h.rfind("h_", 0) == 0) {
            ++n_h;
            const auto us = h.find('_', 2);
            max_i = std::max(max_i, std::stoi(h.substr(2, us - 2)));
            max_j = std::max(max_j, std::stoi(h.substr(us + 1)));
        }
    }
    if (n_ls == 0 || n_h != static_cast<std::size_t>(max_i) * static_cast<std::size_t>(max_j + 1))
        throw std::runtime_error(path.string() + ": unrecognized hyperparameter header");

    std::vector<gp::GpHyperparams> latest(outputs);
    std::vector<bool> seen(outputs, false);
    while (std::getline(in, line)) {
        if (trim(line).empty())
            continue;
        const auto cells = split_csv(line);
        // step,output,loglik_before,loglik_after,fallback, then the parameters
        if (cells.size() != 5 + 2 + n_ls + n_h)
            throw std::runtime_error(path.string() + ": malformed row");
        const auto out_idx = static_cast<std::size_t>(parse_int("output", cells[1]));
        if (out_idx >= outputs)
            continue;
        gp::GpHyperparams h;
        std::size_t c = 5;
        h.noise_variance = parse_double("noise_variance", cells[c++]);
        h.signal_variance = parse_double("signal_variance", cells[c++]);
        h.length_scales.resize(static_cast<Eigen::Index>(n_ls));
        for (std::size_t i = 0; i < n_ls; ++i)
            h.length_scales[static_cast<Eigen::Index>(i)] = parse_double("L", cells[c++]);
        h.poly_coeffs.resize(max_i, max_j + 1);
        for (int i = 0; i < max_i; ++i)
            for (int j = 0; j <= max_j; ++j)
                h.poly_coeffs(i, j) = parse_double("h", cells[c++]);
        latest[out_idx] = std::move(h);
        seen[out_idx] = true;
    }
    for (std::size_t j = 0; j < outputs; ++j) {
        if (!seen[j])
            throw std::runtime_error(path.string() + ": no hyperparameters for output " + std::to_string(j));
    }
    return latest;
}

void export_episode(const EpisodeLog& log, const RunConfig& cfg, const fs::path& dir)
{
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec)
        throw std::runtime_error("cannot create '" + dir.string() + "': " + ec.message());

    {
        const fs::path p = dir / "trajectory.csv";
        std::ofstream out = open_out(p);
        out << "step,x1,x2,u,in_safe\n";
        for (const auto& s : log.steps) {
            out << s.step << ',' << format_double(s.state.angle) << ',' << format_double(s.state.angular_velocity)
                << ',' << format_double(s.u) << ',' << (s.in_safe ? 1 : 0) << '\n';
        }
        finish(out, p);
    }
    {
        const fs::path p = dir / "hyperparams.csv";
        std::ofstream out = open_out(p);
        const std::vector<gp::GpHyperparams> init = initial_hyperparams(cfg);
        out << "step,output,loglik_before,loglik_after,fallback," << hyperparam_header(init.front()) << '\n';
        const std::string nan = format_double(std::numeric_limits<double>::quiet_NaN());
        for (std::size_t j = 0; j < init.size(); ++j)
            out << "0," << j << ',' << nan << ',' << nan << ",0," << hyperparam_cells(init[j]) << '\n';
        for (const auto& r : log.refits) {
            out << r.step << ',' << r.output << ',' << format_double(r.loglik_before) << ','
                << format_double(r.loglik_after) << ',' << (r.fallback ? 1 : 0) << ',' << hyperparam_cells(r.after)
                << '\n';
        }
        finish(out, p);
    }
    {
        const fs::path p = dir / "violations.csv";
        std::ofstream out = open_out(p);
        out << "iteration,steps,violations\n";
        for (std::size_t it = 0; it < log.violations.size(); ++it) {
            const auto steps = std::count_if(log.steps.begin(), log.steps.end(), [&](const StepRecord& s) {
                return s.iteration == static_cast<int>(it) + 1;
            });
            if (steps == 0)
                continue;
            out << it + 1 << ',' << steps << ',' << log.violations[it] << '\n';
        }
        finish(out, p);
    }
    write_dataset(log.dataset, dir / "dataset.csv");
    {
        const fs::path p = dir / "manifest.txt";
        std::ofstream out = open_out(p);
        out << "version=" << kVersion << '\n';
        for (const auto& [k, v] : cfg.entries())
            out << k << '=' << v << '\n';
        out << "executed_steps=" << log.steps.size() << '\n';
        out << "total_violations=" << log.total_violations() << '\n';
        out << "status=" << (log.error.empty() ? "ok" : "aborted") << '\n';
        if (!log.error.empty())
            out << "error=" << log.error << '\n';
        finish(out, p);
    }
    {
        const fs::path p = dir / "timing.txt";
        std::ofstream out = open_out(p);
        out << "# step wall_seconds dp_value\n";
        for (const auto& s : log.steps)
            out << s.step << ' ' << s.wall_seconds << ' ' << format_double(s.dp_value) << '\n';
        finish(out, p);
    }
}

void write_value_tables(const reach::Solution& sol, const reach::StateGrid& grid, const fs::path& path)
{
    std::ofstream out = open_out(path);
    for (Eigen::Index d = 0; d < grid.dim(); ++d)
        out << 'x' << d + 1 << ',';
    const int n = sol.policy.horizon();
    for (int k = 0; k <= n; ++k)
        out << "J" << k << ',';
    for (int k = 0; k < n; ++k) {
        const Eigen::Index m = sol.policy.controls[static_cast<std::size_t>(k)].cols();
        for (Eigen::Index c = 0; c < m; ++c)
            out << "u" << k << (m > 1 ? "_" + std::to_string(c + 1) : std::string()) << (k + 1 < n || c + 1 < m ? "," : "");
    }
    out << '\n';
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const Eigen::VectorXd x = grid.node(i);
        const auto ii = static_cast<Eigen::Index>(i);
        for (Eigen::Index d = 0; d < x.size(); ++d)
            out << format_double(x[d]) << ',';
        for (int k = 0; k <= n; ++k)
            out << format_double(sol.values[static_cast<std::size_t>(k)].values[ii]) << ',';
        for (int k = 0; k < n; ++k) {
            const auto& c = sol.policy.controls[static_cast<std::size_t>(k)];
            for (Eigen::Index j = 0; j < c.cols(); ++j)
                out << format_double(c(ii, j)) << (k + 1 < n || j + 1 < c.cols() ? "," : "");
        }
        out << '\n';
    }
    finish(out, path);
}

} // namespace safereach::harness
