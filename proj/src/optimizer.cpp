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

#include "safereach/optimizer.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "safereach/parallel.hpp"

namespace safereach::opt {

namespace {

constexpr double kFailed = -std::numeric_limits<double>::infinity();

double guarded(const Objective& objective, const Eigen::VectorXd& x)
{
    double v = objective(x);
    return std::isfinite(v) ? v : kFailed;
}

} // namespace

void SearchConfig::validate() const
{
    if (!(initial_mesh > 0.0))
        throw std::invalid_argument("SearchConfig: initial_mesh must be positive");
    if (!(contraction > 0.0 && contraction < 1.0))
        throw std::invalid_argument("SearchConfig: contraction must lie in (0, 1)");
    if (!(mesh_tolerance > 0.0))
        throw std::invalid_argument("SearchConfig: mesh_tolerance must be positive");
    if (max_evals < 1)
        throw std::invalid_argument("SearchConfig: max_evals must be at least 1");
}

SearchResult pattern_search(const Objective& objective, const BoxBounds& bounds, const SearchConfig& cfg,
                            const Eigen::VectorXd& start)
{
    cfg.validate();
    bounds.validate();
    if (start.size() != bounds.dim())
        throw std::invalid_argument("pattern_search: start dimension does not match bounds");
    if (!bounds.contains(start))
        throw std::invalid_argument("pattern_search: start lies outside the bounds");

    const Eigen::VectorXd width = bounds.width();
    const Eigen::Index dim = bounds.dim();

    SearchResult result;
    result.argmax = start;
    result.value = guarded(objective, start);
    result.evaluations = 1;
    if (cfg.record_trace)
        result.trace.push_back({start, result.value});

    double mesh = cfg.initial_mesh;
    while (mesh >= cfg.mesh_tolerance) {
        // Poll set in fixed order +e0, -e0, +e1, -e1, ... with duplicates dropped.
        std::vector<Eigen::VectorXd> polls;
        for (Eigen::Index i = 0; i < dim; ++i) {
            if (width[i] <= 0.0)
                continue;
            for (double sign : {1.0, -1.0}) {
                Eigen::VectorXd p = result.argmax;
                p[i] += sign * mesh * width[i];
                p = bounds.project(p);
                if (p[i] == result.argmax[i])
                    continue;
                polls.push_back(std::move(p));
            }
        }
        if (polls.empty())
            break;

        const int budget = cfg.max_evals - result.evaluations;
        if (budget <= 0) {
            result.truncated = true;
            break;
        }
        bool out_of_budget = false;
        if (static_cast<int>(polls.size()) > budget) {
            polls.resize(static_cast<std::size_t>(budget));
            out_of_budget = true;
        }

        std::vector<double> values(polls.size());
        if (cfg.reentrant) {
            parallel_for(polls.size(), [&](std::size_t j) { values[j] = guarded(objective, polls[j]); });
        }
        else {
            for (std::size_t j = 0; j < polls.size(); ++j)
                values[j] = guarded(objective, polls[j]);
        }
        result.evaluations += static_cast<int>(polls.size());

        std::size_t best = polls.size();
        double best_value = result.value;
        for (std::size_t j = 0; j < polls.size(); ++j) {
            if (cfg.record_trace)
                result.trace.push_back({polls[j], values[j]});
            if (values[j] > best_value) {
                best_value = values[j];
                best = j;
            }
        }

        if (best < polls.size()) {
            result.argmax = polls[best];
            result.value = best_value;
        }
        else {
            mesh *= cfg.contraction;
        }
        if (out_of_budget) {
            result.truncated = true;
            break;
        }
    }
    return result;
}

SearchResult multi_start_search(const Objective& objective, const BoxBounds& bounds, const SearchConfig& cfg,
                                const std::vector<Eigen::VectorXd>& starts)
{
    if (starts.empty())
        throw std::invalid_argument("multi_start_search: no start points");
    SearchResult best;
    bool have = false;
    int total_evals = 0;
    bool truncated = false;
    for (const auto& s : starts) {
        SearchResult r = pattern_search(objective, bounds, cfg, s);
        total_evals += r.evaluations;
        truncated = truncated || r.truncated;
        if (!have || r.value > best.value) {
            std::vector<PollRecord> trace = std::move(best.trace);
            best = std::move(r);
            if (cfg.record_trace)
                best.trace.insert(best.trace.begin(), trace.begin(), trace.end());
            have = true;
        }
        else if (cfg.record_trace) {
            best.trace.insert(best.trace.end(), r.trace.begin(), r.trace.end());
        }
    }
    best.evaluations = total_evals;
    best.truncated = truncated;
    return best;
}

std::vector<Eigen::VectorXd> evenly_spaced_starts(const BoxBounds& bounds, int count)
{
    if (count < 1)
        throw std::invalid_argument("evenly_spaced_starts: count must be at least 1");
    std::vector<Eigen::VectorXd> starts;
    starts.reserve(static_cast<std::size_t>(count));
    for (int k = 0; k < count; ++k) {
        double t = static_cast<double>(k + 1) / static_cast<double>(count + 1);
        starts.push_back(bounds.lower + t * bounds.width());
    }
    return starts;
}

} // namespace safereach::opt
