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

#include "safereach/explorer.hpp"

#include <vector>

namespace safereach::explore {

double integrated_variance(const gp::GpModel& model, const Eigen::VectorXd& x, const Box& u_bounds, int quadrature)
{
    if (quadrature < 1)
        throw std::invalid_argument("integrated_variance: quadrature must be positive");
    const Eigen::Index m = u_bounds.dim();
    const Eigen::VectorXd step = u_bounds.width() / static_cast<double>(quadrature);
    const double cell = step.prod();

    std::vector<int> idx(static_cast<std::size_t>(m), 0);
    Eigen::VectorXd xu(x.size() + m);
    xu.head(x.size()) = x;
    double total = 0.0;
    for (;;) {
        for (Eigen::Index c = 0; c < m; ++c)
            xu[x.size() + c] = u_bounds.lower[c] + (idx[static_cast<std::size_t>(c)] + 0.5) * step[c];
        total += model.predict(xu).variance.sum() * cell;

        Eigen::Index c = m - 1;
        for (; c >= 0; --c) {
            if (++idx[static_cast<std::size_t>(c)] < quadrature)
                break;
            idx[static_cast<std::size_t>(c)] = 0;
        }
        if (c < 0)
            break;
    }
    return total;
}

Box eroded_safe_box(const reach::SafeSet& safe, double radius)
{
    if (!(radius > 0.0))
        throw ConfigError("exploration radius must be positive");
    const Eigen::VectorXd lo = safe.box.lower.array() + radius;
    const Eigen::VectorXd hi = safe.box.upper.array() - radius;
    if (!(lo.array() < hi.array()).all())
        throw ConfigError("exploration radius leaves no room inside the safe set");
    return Box(lo, hi);
}

reach::TargetSet select_target(const gp::GpModel& model, const reach::SafeSet& safe, const ExplorationConfig& cfg,
                               const reach::StateGrid& grid, const Box& u_bounds)
{
    const Box inner = eroded_safe_box(safe, cfg.radius);
    bool found = false;
    double best = 0.0;
    Eigen::VectorXd center;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const Eigen::VectorXd node = grid.node(i);
        if (!inner.contains(node))
            continue;
        const double v = integrated_variance(model, node, u_bounds, cfg.control_quadrature_points);
        if (!found || v > best) {
            best = v;
            center = node;
            found = true;
        }
    }
    if (!found)
        throw ConfigError("no grid node lies inside the eroded safe set");
    return reach::TargetSet::ball(center, cfg.radius);
}

} // namespace safereach::explore
