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

#ifndef SAFEREACH_REACH_HPP
#define SAFEREACH_REACH_HPP

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <vector>

#include "safereach/box.hpp"
#include "safereach/gp.hpp"
#include "safereach/optimizer.hpp"

namespace safereach::reach {

/// How the transition integral over the grid is discretized.
enum class Quadrature {
    /// sum_i (s_{i+1} - s_i) * p(s_i); the last node of each axis gets zero weight.
    LeftNode,
    /// Each node weighted by the width of its Voronoi cell inside the grid box.
    Midpoint,
    /// Exact Gaussian mass of each node's Voronoi cell (no density mass leakage).
    CellMass,
};

/**
 * Tensor grid of linearly spaced nodes. Flat indices are row-major: the last
 * dimension varies fastest.
 */
class StateGrid {
public:
    StateGrid(const Box& box, int points_per_dim);
    StateGrid(const Box& box, std::vector<int> points_per_dim);

    Eigen::Index dim() const { return box_.dim(); }
    std::size_t size() const { return size_; }
    const Box& box() const { return box_; }
    const std::vector<Eigen::VectorXd>& axes() const { return axes_; }
    const Eigen::VectorXd& axis(Eigen::Index d) const { return axes_[static_cast<std::size_t>(d)]; }

    Eigen::VectorXd node(std::size_t flat) const;
    std::vector<int> multi_index(std::size_t flat) const;
    std::size_t flat_index(const std::vector<int>& idx) const;
    /// Nearest node, coordinate-wise (points outside the box snap to the boundary).
    std::size_t nearest(const Eigen::VectorXd& x) const;

    /// Per-axis integration weights for the given rule (CellMass uses Voronoi widths).
    std::vector<Eigen::VectorXd> axis_weights(Quadrature rule) const;
    /// Per-axis Voronoi cell edges: n+1 values from box.lower to box.upper.
    const std::vector<Eigen::VectorXd>& cell_edges() const { return edges_; }

private:
    Box box_;
    std::vector<Eigen::VectorXd> axes_;
    std::vector<Eigen::VectorXd> edges_;
    std::vector<std::size_t> strides_;
    std::size_t size_ = 0;
};

struct SafeSet {
    Box box;
    bool contains(const Eigen::VectorXd& x) const { return box.contains(x); }
};

/// Closed ball (Euclidean) or closed box of goal states.
class TargetSet {
public:
    static TargetSet ball(Eigen::VectorXd center, double radius);
    static TargetSet box(Box b);

    bool contains(const Eigen::VectorXd& x) const;
    bool is_ball() const { return is_ball_; }
    const Eigen::VectorXd& center() const { return center_; }
    double radius() const { return radius_; }
    /// Bounding box (the box itself for box targets).
    Box bounding_box() const;
    /// True if the whole target lies in `outer`.
    bool inside(const Box& outer) const;
    /// Superset obtained by growing the ball radius or the box by `margin`.
    TargetSet enlarged(double margin) const;

private:
    bool is_ball_ = true;
    Eigen::VectorXd center_;
    double radius_ = 0.0;
    Box box_;
};

struct ValueTable {
    int stage = 0;
    /// Clamped to [0, 1].
    Eigen::VectorXd values;
    /// Value before clamping.
    Eigen::VectorXd pre_clamp;
    /// Discretized transition mass that landed on safe nodes at the chosen action.
    Eigen::VectorXd mass;
};

struct PolicyTable {
    /// controls[k] is (grid nodes x control dim) for stage k = 0..N-1.
    std::vector<Eigen::MatrixXd> controls;

    int horizon() const { return static_cast<int>(controls.size()); }
    Eigen::VectorXd lookup(int stage, const StateGrid& grid, const Eigen::VectorXd& x) const;
};

/// How the supremum over controls is taken.
struct ActionSearch {
    /// If nonempty, enumerate these controls instead of running pattern search.
    std::vector<Eigen::VectorXd> discrete_controls;
    opt::SearchConfig search{0.25, 0.5, 1e-3, 200};
};

struct DpOptions {
    Quadrature quadrature = Quadrature::LeftNode;
    /// Add the GP noise variance to the predictive variance of the next state.
    bool include_noise_in_dp = true;
    /// Rescale each backup so the discretized mass on S equals the exact Gaussian mass of S.
    bool renormalize = false;
    /// Multilinear instead of nearest-node interpolation for off-grid value queries.
    bool interpolate = false;
    ActionSearch action;
};

int target_indicator(const Eigen::VectorXd& x, const TargetSet& target);

/// Product of per-dimension Gaussian densities of z given the GP prediction at (x, u).
double transition_density(const gp::GpModel& model, const Eigen::VectorXd& x, const Eigen::VectorXd& u,
                          const Eigen::VectorXd& z, bool include_noise = true);

struct BackupResult {
    double value = 0.0;
    double pre_clamp = 0.0;
    double mass = 0.0;
};

/// Discretized integral of J_next * p(. | x, u) over grid nodes in the safe set, clamped to [0, 1].
BackupResult bellman_backup(const ValueTable& j_next, const Eigen::VectorXd& x, const Eigen::VectorXd& u,
                            const gp::GpModel& model, const StateGrid& grid, const SafeSet& safe,
                            const DpOptions& opts = {});

struct ActionResult {
    Eigen::VectorXd u;
    double value = 0.0;
    double pre_clamp = 0.0;
    double mass = 0.0;
    int evaluations = 0;
    /// Every (control, value) evaluated, in evaluation order.
    std::vector<opt::PollRecord> polled;
};

/**
 * Maximizes bellman_backup over u. Ties prefer the smallest control norm, then
 * the lexicographically smallest control.
 */
ActionResult optimal_action(const ValueTable& j_next, const Eigen::VectorXd& x, const gp::GpModel& model,
                            const StateGrid& grid, const SafeSet& safe, const Box& u_bounds,
                            const DpOptions& opts = {}, bool keep_polled = false);

struct Solution {
    /// values[k] for k = 0..N; values[N] is the target indicator.
    std::vector<ValueTable> values;
    PolicyTable policy;
    /// max(pre_clamp - 1, 0) over all stages and nodes.
    double max_overshoot = 0.0;
};

/// Terminal table J_N = indicator of the target on grid nodes.
ValueTable terminal_table(const StateGrid& grid, const TargetSet& target, int horizon);

/// Backward sweep computing every stage on every node.
Solution solve(const gp::GpModel& model, const StateGrid& grid, const SafeSet& safe, const TargetSet& target,
               const Box& u_bounds, int horizon, const DpOptions& opts = {});

struct Plan {
    Eigen::VectorXd u;
    double value = 0.0;
    /// Tables for stages 1..N (index k-1); stage 0 is evaluated at x0 only.
    std::vector<ValueTable> tail;
};

/// Optimal first action at x0: stages N..1 on the grid, stage 0 at x0 exactly.
Plan plan_action(const gp::GpModel& model, const StateGrid& grid, const SafeSet& safe, const TargetSet& target,
                 const Box& u_bounds, int horizon, const Eigen::VectorXd& x0, const DpOptions& opts = {});

/// Off-grid value query (nearest node or multilinear, per opts.interpolate).
double value_at(const ValueTable& table, const StateGrid& grid, const Eigen::VectorXd& x, bool interpolate);

/// Integral of J_0 over S with the grid's cell weights (unnormalized).
double reach_avoid_success_prob(const ValueTable& j0, const StateGrid& grid, const SafeSet& safe,
                                Quadrature rule = Quadrature::LeftNode);
/// Same, divided by the volume of S.
double reach_avoid_success_prob_normalized(const ValueTable& j0, const StateGrid& grid, const SafeSet& safe,
                                           Quadrature rule = Quadrature::LeftNode);

struct McEstimate {
    double probability = 0.0;
    double stderr_ = 0.0;
    int samples = 0;
};

/**
 * Simulates the GP-predicted system under `policy` (nearest-node lookup) and
 * counts trajectories with x_1..x_N in S and x_N in the target; x0 outside S
 * is a failure. first_action overrides the stage-0 control.
 */
McEstimate monte_carlo_reach_prob(const gp::GpModel& model, const PolicyTable& policy, const StateGrid& grid,
                                  const Eigen::VectorXd& x0, const SafeSet& safe, const TargetSet& target,
                                  int horizon, int samples, std::uint64_t seed, const DpOptions& opts = {},
                                  const std::optional<Eigen::VectorXd>& first_action = std::nullopt);

/**
 * Top-down recursion without memoization: every inner node re-solves the
 * remaining horizon. Exponential; horizon is limited to 2. Returns the
 * optimal stage-k value at x0.
 */
double cost_algorithm2(const gp::GpModel& model, const Eigen::VectorXd& x0, const TargetSet& target,
                       const SafeSet& safe, const StateGrid& grid, const Box& u_bounds, int horizon, int stage = 0,
                       const DpOptions& opts = {});

} // namespace safereach::reach

#endif
