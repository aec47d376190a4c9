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

#ifndef SAFEREACH_EXPLORER_HPP
#define SAFEREACH_EXPLORER_HPP

#include <numbers>
#include <stdexcept>

#include "safereach/gp.hpp"
#include "safereach/reach.hpp"

namespace safereach::explore {

/// Invalid exploration setup, e.g. a radius that erodes the safe set away.
class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

struct ExplorationConfig {
    double radius = 2.0 * std::numbers::pi / 100.0;
    /// Steps between target relocations.
    int trigger_period = 1;
    /// Quadrature points per control dimension.
    int control_quadrature_points = 11;
};

/**
 * Posterior variance summed over output dimensions and integrated over the
 * control box with a uniform midpoint rule of `quadrature` points per control
 * dimension.
 */
double integrated_variance(const gp::GpModel& model, const Eigen::VectorXd& x, const Box& u_bounds, int quadrature);

/// The safe box shrunk by r in every dimension; throws ConfigError when empty.
Box eroded_safe_box(const reach::SafeSet& safe, double radius);

/**
 * Ball of radius cfg.radius centered at the grid node of the eroded safe box
 * with the largest integrated variance (lowest flat index on ties).
 */
reach::TargetSet select_target(const gp::GpModel& model, const reach::SafeSet& safe, const ExplorationConfig& cfg,
                               const reach::StateGrid& grid, const Box& u_bounds);

} // namespace safereach::explore

#endif
