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

#ifndef SAFEREACH_HARNESS_HPP
#define SAFEREACH_HARNESS_HPP

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <numbers>
#include <string>
#include <vector>

#include "safereach/explorer.hpp"
#include "safereach/gp.hpp"
#include "safereach/plant.hpp"
#include "safereach/reach.hpp"

namespace safereach::harness {

inline constexpr const char* kVersion = "0.3.0";

/**
 * Everything needed to reproduce a learning run. Loaded from a flat
 * `key = value` file (see README for the key list); vectors are comma
 * separated.
 */
struct RunConfig {
    plant::PendulumParams pendulum;
    plant::DisturbanceSpec disturbance = plant::DisturbanceSpec::reference();
    /// Std-dev of Gaussian noise added to each plant output; drawn from the run seed.
    Eigen::Vector2d process_noise_std{0.01, 0.01};

    Box state_box;
    /// Saturate every plant output to the state box.
    bool clip_to_state_box = false;
    /// Also train on transitions that start outside the state box.
    bool train_outside_state_box = false;
    Box safe_box;
    /// DP grid spans the safe box (default) or the whole state box.
    bool grid_over_state_box = false;
    int grid_points = 40;

    /// Initial target: ball (center, radius) or box (lower, upper).
    bool target_is_ball = false;
    Eigen::Vector2d target_center{0.0, 0.0};
    double target_radius = 2.0 * std::numbers::pi / 100.0;
    Box target_box;

    Box control_bounds;
    int horizon = 4;
    int steps = 40;
    int iterations = 1;
    int refit_period = 10;
    Eigen::Vector2d initial_state{0.0, 0.1};
    bool reset_on_violation = false;

    bool explore = false;
    explore::ExplorationConfig exploration;

    /// Initial kernel hyperparameters per output dimension (next angle, next velocity).
    Eigen::Vector2d hyp_noise_variance{1e-4, 1e-4};
    Eigen::Vector2d hyp_signal_variance{1e-3, 0.1};
    std::array<Eigen::Vector3d, 2> hyp_length_scales{Eigen::Vector3d(0.05, 0.5, 25.0), Eigen::Vector3d(0.05, 0.5, 25.0)};
    int mean_degree = 5;
    /// Seed the polynomial mean with the nominal pendulum model instead of zeros.
    bool nominal_mean = true;
    gp::MleOptions mle;

    reach::DpOptions dp;

    std::uint64_t seed = 1;
    std::string output_dir = "out";

    /// Defaults for the pendulum experiment.
    static RunConfig defaults();

    /// Throws std::invalid_argument unless target in safe in state box, horizon >= 1, steps >= 1, ...
    void validate() const;

    /// Sets one key; throws std::invalid_argument for unknown keys or malformed values.
    void set(const std::string& key, const std::string& value);

    /// Resolved configuration as ordered key/value pairs (the manifest body).
    std::vector<std::pair<std::string, std::string>> entries() const;

    reach::TargetSet initial_target() const;
    reach::StateGrid grid() const;
};

/// Parses `key = value` lines (blank lines and '#' comments ignored) on top of RunConfig::defaults().
RunConfig parse_config(std::istream& in);
RunConfig load_config(const std::filesystem::path& path);

struct StepRecord {
    int iteration = 0;
    int step = 0;
    plant::PlantState state;
    double u = 0.0;
    plant::PlantState next;
    bool in_safe = true;
    /// The step landed in the safe set; violations count the steps where it did not.
    bool next_in_safe = true;
    double dp_value = 0.0;
    Eigen::Vector2d target_center{0.0, 0.0};
    double wall_seconds = 0.0;
};

struct RefitRecord {
    int step = 0;
    int output = 0;
    double loglik_before = 0.0;
    double loglik_after = 0.0;
    gp::GpHyperparams before;
    gp::GpHyperparams after;
    bool fallback = false;
};

struct EpisodeLog {
    std::vector<StepRecord> steps;
    std::vector<RefitRecord> refits;
    /// Violations per iteration.
    std::vector<int> violations;
    gp::Dataset dataset{3, 2};
    std::vector<gp::GpHyperparams> final_hyperparams;
    /// Non-empty when the run aborted; the log holds everything up to the failure.
    std::string error;

    int total_violations() const;
};

/// The learning loop. Never throws for GP/DP failures; those end up in EpisodeLog::error.
EpisodeLog run_learning(const RunConfig& cfg);

/// Fits the GP models a finished run ends with.
gp::GpModel final_model(const EpisodeLog& log);

struct GridReportRow {
    Eigen::Vector2d x;
    Eigen::Vector2d mean;
    /// Predictive variance of an observation (posterior + noise variance).
    Eigen::Vector2d variance;
};

std::vector<GridReportRow> grid_report(const gp::GpModel& model, const reach::StateGrid& grid, double fixed_u);

/// Largest report variance over nodes inside `region`, over both outputs.
double max_report_variance(const std::vector<GridReportRow>& rows, const Box& region);

/// Shortest round-trip decimal representation.
std::string format_double(double v);

void write_grid_report(const std::vector<GridReportRow>& rows, const std::filesystem::path& path);

/// Writes trajectory.csv, hyperparams.csv, violations.csv, dataset.csv, manifest.txt and timing.txt.
void export_episode(const EpisodeLog& log, const RunConfig& cfg, const std::filesystem::path& dir);

void write_dataset(const gp::Dataset& data, const std::filesystem::path& path);
gp::Dataset read_dataset(const std::filesystem::path& path);

/// Latest hyperparameters per output from a hyperparams.csv written by export_episode.
std::vector<gp::GpHyperparams> read_final_hyperparams(const std::filesystem::path& path, std::size_t outputs);

/// Node coordinates with J_k and u* for every stage.
void write_value_tables(const reach::Solution& sol, const reach::StateGrid& grid, const std::filesystem::path& path);

/// Dataset holding only the seed sample ((initial_state, 0) -> plant step).
gp::Dataset seed_dataset(const RunConfig& cfg);

/// Initial hyperparameters with the polynomial mean seeded per cfg.nominal_mean.
std::vector<gp::GpHyperparams> initial_hyperparams(const RunConfig& cfg);

} // namespace safereach::harness

#endif
