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

#ifndef SAFEREACH_OPTIMIZER_HPP
#define SAFEREACH_OPTIMIZER_HPP

#include <Eigen/Dense>
#include <functional>
#include <vector>

#include "safereach/box.hpp"

namespace safereach::opt {

using BoxBounds = Box;

/**
 * Parameters of the coordinate pattern search. Mesh sizes are fractions of
 * the box width in each coordinate.
 */
struct SearchConfig {
    double initial_mesh = 0.25;
    double contraction = 0.5;
    double mesh_tolerance = 1e-3;
    int max_evals = 200;
    /// The objective may be called concurrently during a poll.
    bool reentrant = false;
    /// Keep every evaluated point in SearchResult::trace.
    bool record_trace = false;

    void validate() const;
};

struct PollRecord {
    Eigen::VectorXd point;
    double value;
};

struct SearchResult {
    Eigen::VectorXd argmax;
    double value = 0.0;
    int evaluations = 0;
    /// max_evals ran out before the mesh reached mesh_tolerance.
    bool truncated = false;
    std::vector<PollRecord> trace;
};

/// Objective to maximize. Non-finite return values are treated as -inf.
using Objective = std::function<double(const Eigen::VectorXd&)>;

/**
 * Box-constrained generalized pattern search maximizing `objective`.
 *
 * Polls start +- mesh * width_i * e_i for every coordinate, projecting
 * infeasible polls onto the box, and moves to the best strictly improving
 * poll. A failed poll contracts the mesh. Ties never move the incumbent, so
 * a constant objective returns `start`.
 */
SearchResult pattern_search(const Objective& objective, const BoxBounds& bounds, const SearchConfig& cfg,
                            const Eigen::VectorXd& start);

/// Runs pattern_search from each start and keeps the best (first on ties).
SearchResult multi_start_search(const Objective& objective, const BoxBounds& bounds, const SearchConfig& cfg,
                                const std::vector<Eigen::VectorXd>& starts);

/// `count` points evenly spaced along the box diagonal at fractions (k+1)/(count+1).
std::vector<Eigen::VectorXd> evenly_spaced_starts(const BoxBounds& bounds, int count);

} // namespace safereach::opt

#endif
