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

#include "safereach/reach.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <random>
#include <stdexcept>

#include "safereach/parallel.hpp"

namespace safereach::reach {

namespace {

constexpr double kMinVariance = 1e-24;

double normal_pdf(double z, double mean, double sd)
{
    const double t = (z - mean) / sd;
    return std::exp(-0.5 * t * t) / (sd * std::sqrt(2.0 * std::numbers::pi));
}

double normal_cdf(double z, double mean, double sd) { return 0.5 * std::erfc(-(z - mean) / (sd * std::numbers::sqrt2)); }

Eigen::VectorXd joint_input(const Eigen::VectorXd& x, const Eigen::VectorXd& u)
{
    Eigen::VectorXd xu(x.size() + u.size());
    xu << x, u;
    return xu;
}

/// Per-axis discretized transition weights for one (x, u).
struct Transition {
    std::vector<Eigen::VectorXd> weights;
    Eigen::VectorXd mean;
    Eigen::VectorXd sd;
};

Transition make_transition(const gp::GpModel& model, const Eigen::VectorXd& x, const Eigen::VectorXd& u,
                           const StateGrid& grid, const DpOptions& opts)
{
    if (model.output_dim() != grid.dim())
        throw std::invalid_argument("reach: model output dimension does not match the grid dimension");
    const gp::Posterior post = model.predict(joint_input(x, u));
    Transition t;
    t.mean = post.mean;
    t.sd.resize(grid.dim());
    for (Eigen::Index d = 0; d < grid.dim(); ++d) {
        double var = post.variance[d];
        if (opts.include_noise_in_dp)
            var += model.hyperparams(d).noise_variance;
        t.sd[d] = std::sqrt(std::max(var, kMinVariance));
    }

    const std::vector<Eigen::VectorXd> widths = grid.axis_weights(opts.quadrature);
    t.weights.resize(static_cast<std::size_t>(grid.dim()));
    for (Eigen::Index d = 0; d < grid.dim(); ++d) {
        const Eigen::VectorXd& axis = grid.axis(d);
        Eigen::VectorXd w(axis.size());
        if (opts.quadrature == Quadrature::CellMass) {
            const Eigen::VectorXd& e = grid.cell_edges()[static_cast<std::size_t>(d)];
            for (Eigen::Index i = 0; i < axis.size(); ++i)
                w[i] = std::max(0.0, normal_cdf(e[i + 1], t.mean[d], t.sd[d]) - normal_cdf(e[i], t.mean[d], t.sd[d]));
        }
        else {
            for (Eigen::Index i = 0; i < axis.size(); ++i)
                w[i] = widths[static_cast<std::size_t>(d)][i] * normal_pdf(axis[i], t.mean[d], t.sd[d]);
        }
        t.weights[static_cast<std::size_t>(d)] = std::move(w);
    }
    return t;
}

std::vector<char> safe_mask(const StateGrid& grid, const SafeSet& safe)
{
    std::vector<char> mask(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i)
        mask[i] = safe.contains(grid.node(i)) ? 1 : 0;
    return mask;
}

/// Weight of node `flat` under the tensor-product transition.
double node_weight(const Transition& t, const StateGrid& grid, std::size_t flat)
{
    const std::vector<int> idx = grid.multi_index(flat);
    double w = 1.0;
    for (std::size_t d = 0; d < idx.size(); ++d)
        w *= t.weights[d][idx[d]];
    return w;
}

BackupResult integrate(const Transition& t, const Eigen::VectorXd& j_next, const std::vector<char>& mask,
                       const StateGrid& grid, const SafeSet& safe, const DpOptions& opts)
{
    BackupResult r;
    const std::size_t dims = static_cast<std::size_t>(grid.dim());
    std::vector<int> idx(dims, 0);
    for (std::size_t flat = 0; flat < grid.size(); ++flat) {
        if (mask[flat]) {
            double w = 1.0;
            for (std::size_t d = 0; d < dims; ++d)
                w *= t.weights[d][idx[d]];
            r.mass += w;
            r.pre_clamp += w * j_next[static_cast<Eigen::Index>(flat)];
        }
        for (std::size_t d = dims; d-- > 0;) {
            if (++idx[d] < grid.axis(static_cast<Eigen::Index>(d)).size())
                break;
            idx[d] = 0;
        }
    }
    if (opts.renormalize && r.mass > 0.0) {
        double exact = 1.0;
        for (Eigen::Index d = 0; d < grid.dim(); ++d) {
            exact *= normal_cdf(safe.box.upper[d], t.mean[d], t.sd[d])
                   - normal_cdf(safe.box.lower[d], t.mean[d], t.sd[d]);
        }
        r.pre_clamp *= exact / r.mass;
    }
    r.value = std::clamp(r.pre_clamp, 0.0, 1.0);
    return r;
}

bool tie_preferred(const Eigen::VectorXd& a, const Eigen::VectorXd& b)
{
    const double na = a.squaredNorm();
    const double nb = b.squaredNorm();
    if (na != nb)
        return na < nb;
    return std::lexicographical_compare(a.data(), a.data() + a.size(), b.data(), b.data() + b.size());
}

using ControlObjective = std::function<BackupResult(const Eigen::VectorXd&)>;

ActionResult maximize_over_controls(const ControlObjective& objective, const Box& u_bounds,
                                    const ActionSearch& search, bool keep_polled)
{
    ActionResult best;
    bool have = false;
    auto consider = [&](const Eigen::VectorXd& u, const BackupResult& b) {
        if (keep_polled)
            best.polled.push_back({u, b.value});
        ++best.evaluations;
        if (!have || b.value > best.value || (b.value == best.value && tie_preferred(u, best.u))) {
            best.u = u;
            best.value = b.value;
            best.pre_clamp = b.pre_clamp;
            best.mass = b.mass;
            have = true;
        }
    };

    if (!search.discrete_controls.empty()) {
        for (const auto& u : search.discrete_controls) {
            if (!u_bounds.contains(u))
                throw std::invalid_argument("optimal_action: discrete control outside the control bounds");
            consider(u, objective(u));
        }
        return best;
    }

    opt::SearchConfig cfg = search.search;
    cfg.record_trace = true;
    const Eigen::VectorXd start = u_bounds.project(Eigen::VectorXd::Zero(u_bounds.dim()));
    opt::SearchResult r = opt::pattern_search([&](const Eigen::VectorXd& u) { return objective(u).value; }, u_bounds,
                                              cfg, start);
    // Re-scan the trace so ties resolve by norm, then lexicographically.
    Eigen::VectorXd chosen = r.argmax;
    for (const auto& p : r.trace) {
        if (p.value == r.value && tie_preferred(p.point, chosen))
            chosen = p.point;
    }
    const BackupResult b = objective(chosen);
    best.u = chosen;
    best.value = b.value;
    best.pre_clamp = b.pre_clamp;
    best.mass = b.mass;
    best.evaluations = r.evaluations;
    if (keep_polled)
        best.polled = std::move(r.trace);
    return best;
}

} // namespace

StateGrid::StateGrid(const Box& box, int points_per_dim)
    : StateGrid(box, std::vector<int>(static_cast<std::size_t>(box.dim()), points_per_dim))
{
}

StateGrid::StateGrid(const Box& box, std::vector<int> points_per_dim) : box_(box)
{
    box_.validate();
    if (static_cast<Eigen::Index>(points_per_dim.size()) != box_.dim())
        throw std::invalid_argument("StateGrid: one point count per dimension required");
    size_ = 1;
    strides_.assign(points_per_dim.size(), 1);
    for (std::size_t d = 0; d < points_per_dim.size(); ++d) {
        const int n = points_per_dim[d];
        const Eigen::Index di = static_cast<Eigen::Index>(d);
        if (n < 2)
            throw std::invalid_argument("StateGrid: at least 2 points per dimension");
        if (!(box_.upper[di] > box_.lower[di]))
            throw std::invalid_argument("StateGrid: box must have positive width in every dimension");
        axes_.push_back(Eigen::VectorXd::LinSpaced(n, box_.lower[di], box_.upper[di]));
        Eigen::VectorXd e(n + 1);
        e[0] = box_.lower[di];
        e[n] = box_.upper[di];
        for (int i = 1; i < n; ++i)
            e[i] = 0.5 * (axes_.back()[i - 1] + axes_.back()[i]);
        edges_.push_back(std::move(e));
        size_ *= static_cast<std::size_t>(n);
    }
    for (std::size_t d = points_per_dim.size(); d-- > 1;)
        strides_[d - 1] = strides_[d] * static_cast<std::size_t>(points_per_dim[d]);
}

Eigen::VectorXd StateGrid::node(std::size_t flat) const
{
    Eigen::VectorXd x(dim());
    for (std::size_t d = 0; d < axes_.size(); ++d) {
        const std::size_t i = (flat / strides_[d]) % static_cast<std::size_t>(axes_[d].size());
        x[static_cast<Eigen::Index>(d)] = axes_[d][static_cast<Eigen::Index>(i)];
    }
    return x;
}

std::vector<int> StateGrid::multi_index(std::size_t flat) const
{
    std::vector<int> idx(axes_.size());
    for (std::size_t d = 0; d < axes_.size(); ++d)
        idx[d] = static_cast<int>((flat / strides_[d]) % static_cast<std::size_t>(axes_[d].size()));
    return idx;
}

std::size_t StateGrid::flat_index(const std::vector<int>& idx) const
{
    std::size_t flat = 0;
    for (std::size_t d = 0; d < axes_.size(); ++d)
        flat += static_cast<std::size_t>(idx[d]) * strides_[d];
    return flat;
}

std::size_t StateGrid::nearest(const Eigen::VectorXd& x) const
{
    if (x.size() != dim())
        throw std::invalid_argument("StateGrid::nearest: dimension mismatch");
    std::vector<int> idx(axes_.size());
    for (std::size_t d = 0; d < axes_.size(); ++d) {
        const Eigen::VectorXd& e = edges_[d];
        // Node i owns [e_i, e_{i+1}); ties at an edge go to the upper node.
        const double v = x[static_cast<Eigen::Index>(d)];
        auto it = std::upper_bound(e.data() + 1, e.data() + e.size() - 1, v);
        idx[d] = static_cast<int>(it - (e.data() + 1));
    }
    return flat_index(idx);
}

std::vector<Eigen::VectorXd> StateGrid::axis_weights(Quadrature rule) const
{
    std::vector<Eigen::VectorXd> out;
    for (std::size_t d = 0; d < axes_.size(); ++d) {
        const Eigen::VectorXd& a = axes_[d];
        Eigen::VectorXd w(a.size());
        if (rule == Quadrature::LeftNode) {
            for (Eigen::Index i = 0; i + 1 < a.size(); ++i)
                w[i] = a[i + 1] - a[i];
            w[a.size() - 1] = 0.0;
        }
        else {
            const Eigen::VectorXd& e = edges_[d];
            for (Eigen::Index i = 0; i < a.size(); ++i)
                w[i] = e[i + 1] - e[i];
        }
        out.push_back(std::move(w));
    }
    return out;
}

TargetSet TargetSet::ball(Eigen::VectorXd center, double radius)
{
    if (!(radius > 0.0))
        throw std::invalid_argument("TargetSet: radius must be positive");
    TargetSet t;
    t.is_ball_ = true;
    t.center_ = std::move(center);
    t.radius_ = radius;
    return t;
}

TargetSet TargetSet::box(Box b)
{
    b.validate();
    TargetSet t;
    t.is_ball_ = false;
    t.center_ = b.center();
    t.box_ = std::move(b);
    return t;
}

bool TargetSet::contains(const Eigen::VectorXd& x) const
{
    if (is_ball_)
        return x.size() == center_.size() && (x - center_).norm() <= radius_;
    return box_.contains(x);
}

Box TargetSet::bounding_box() const
{
    if (is_ball_)
        return Box(center_.array() - radius_, center_.array() + radius_);
    return box_;
}

bool TargetSet::inside(const Box& outer) const { return outer.contains(bounding_box()); }

TargetSet TargetSet::enlarged(double margin) const
{
    if (is_ball_)
        return ball(center_, radius_ + margin);
    return box(Box(box_.lower.array() - margin, box_.upper.array() + margin));
}

Eigen::VectorXd PolicyTable::lookup(int stage, const StateGrid& grid, const Eigen::VectorXd& x) const
{
    if (stage < 0 || stage >= horizon())
        throw std::out_of_range("PolicyTable::lookup: stage out of range");
    return controls[static_cast<std::size_t>(stage)].row(static_cast<Eigen::Index>(grid.nearest(x))).transpose();
}

int target_indicator(const Eigen::VectorXd& x, const TargetSet& target) { return target.contains(x) ? 1 : 0; }

double transition_density(const gp::GpModel& model, const Eigen::VectorXd& x, const Eigen::VectorXd& u,
                          const Eigen::VectorXd& z, bool include_noise)
{
    if (z.size() != model.output_dim())
        throw std::invalid_argument("transition_density: z dimension does not match the model outputs");
    const gp::Posterior post = model.predict(joint_input(x, u));
    double density = 1.0;
    for (Eigen::Index d = 0; d < z.size(); ++d) {
        double var = post.variance[d] + (include_noise ? model.hyperparams(d).noise_variance : 0.0);
        density *= normal_pdf(z[d], post.mean[d], std::sqrt(std::max(var, kMinVariance)));
    }
    return density;
}

BackupResult bellman_backup(const ValueTable& j_next, const Eigen::VectorXd& x, const Eigen::VectorXd& u,
                            const gp::GpModel& model, const StateGrid& grid, const SafeSet& safe,
                            const DpOptions& opts)
{
    if (static_cast<std::size_t>(j_next.values.size()) != grid.size())
        throw std::invalid_argument("bellman_backup: value table does not match the grid");
    const Transition t = make_transition(model, x, u, grid, opts);
    return integrate(t, j_next.values, safe_mask(grid, safe), grid, safe, opts);
}

namespace {

ActionResult optimal_action_masked(const ValueTable& j_next, const Eigen::VectorXd& x, const gp::GpModel& model,
                                   const StateGrid& grid, const SafeSet& safe, const std::vector<char>& mask,
                                   const Box& u_bounds, const DpOptions& opts, bool keep_polled)
{
    auto objective = [&](const Eigen::VectorXd& u) {
        return integrate(make_transition(model, x, u, grid, opts), j_next.values, mask, grid, safe, opts);
    };
    return maximize_over_controls(objective, u_bounds, opts.action, keep_polled);
}

ValueTable sweep(const ValueTable& j_next, int stage, const gp::GpModel& model, const StateGrid& grid,
                 const SafeSet& safe, const std::vector<char>& mask, const Box& u_bounds, const DpOptions& opts,
                 Eigen::MatrixXd& controls)
{
    ValueTable out;
    out.stage = stage;
    const Eigen::Index n = static_cast<Eigen::Index>(grid.size());
    out.values.resize(n);
    out.pre_clamp.resize(n);
    out.mass.resize(n);
    controls.resize(n, u_bounds.dim());
    parallel_for(grid.size(), [&](std::size_t i) {
        const Eigen::Index ii = static_cast<Eigen::Index>(i);
        ActionResult r = optimal_action_masked(j_next, grid.node(i), model, grid, safe, mask, u_bounds, opts, false);
        out.values[ii] = r.value;
        out.pre_clamp[ii] = r.pre_clamp;
        out.mass[ii] = r.mass;
        controls.row(ii) = r.u.transpose();
    });
    return out;
}

void check_problem(const gp::GpModel& model, const StateGrid& grid, const Box& u_bounds, int horizon)
{
    if (horizon < 1)
        throw std::invalid_argument("reach: horizon must be at least 1");
    if (model.input_dim() != grid.dim() + u_bounds.dim())
        throw std::invalid_argument("reach: model input dimension must equal state dim + control dim");
}

} // namespace

ActionResult optimal_action(const ValueTable& j_next, const Eigen::VectorXd& x, const gp::GpModel& model,
                            const StateGrid& grid, const SafeSet& safe, const Box& u_bounds, const DpOptions& opts,
                            bool keep_polled)
{
    if (static_cast<std::size_t>(j_next.values.size()) != grid.size())
        throw std::invalid_argument("optimal_action: value table does not match the grid");
    return optimal_action_masked(j_next, x, model, grid, safe, safe_mask(grid, safe), u_bounds, opts, keep_polled);
}

ValueTable terminal_table(const StateGrid& grid, const TargetSet& target, int horizon)
{
    ValueTable t;
    t.stage = horizon;
    const Eigen::Index n = static_cast<Eigen::Index>(grid.size());
    t.values.resize(n);
    for (std::size_t i = 0; i < grid.size(); ++i)
        t.values[static_cast<Eigen::Index>(i)] = target_indicator(grid.node(i), target);
    t.pre_clamp = t.values;
    t.mass = Eigen::VectorXd::Zero(n);
    return t;
}

Solution solve(const gp::GpModel& model, const StateGrid& grid, const SafeSet& safe, const TargetSet& target,
               const Box& u_bounds, int horizon, const DpOptions& opts)
{
    check_problem(model, grid, u_bounds, horizon);
    const std::vector<char> mask = safe_mask(grid, safe);
    Solution s;
    s.values.resize(static_cast<std::size_t>(horizon) + 1);
    s.policy.controls.resize(static_cast<std::size_t>(horizon));
    s.values[static_cast<std::size_t>(horizon)] = terminal_table(grid, target, horizon);
    for (int k = horizon - 1; k >= 0; --k) {
        const auto ku = static_cast<std::size_t>(k);
        s.values[ku] = sweep(s.values[ku + 1], k, model, grid, safe, mask, u_bounds, opts, s.policy.controls[ku]);
        s.max_overshoot = std::max(s.max_overshoot, (s.values[ku].pre_clamp.array() - 1.0).maxCoeff());
    }
    return s;
}

Plan plan_action(const gp::GpModel& model, const StateGrid& grid, const SafeSet& safe, const TargetSet& target,
                 const Box& u_bounds, int horizon, const Eigen::VectorXd& x0, const DpOptions& opts)
{
    check_problem(model, grid, u_bounds, horizon);
    const std::vector<char> mask = safe_mask(grid, safe);
    Plan p;
    p.tail.resize(static_cast<std::size_t>(horizon));
    p.tail.back() = terminal_table(grid, target, horizon);
    Eigen::MatrixXd scratch;
    for (int k = horizon - 1; k >= 1; --k) {
        const auto ku = static_cast<std::size_t>(k);
        p.tail[ku - 1] = sweep(p.tail[ku], k, model, grid, safe, mask, u_bounds, opts, scratch);
    }
    ActionResult r = optimal_action_masked(p.tail.front(), x0, model, grid, safe, mask, u_bounds, opts, false);
    p.u = r.u;
    p.value = r.value;
    return p;
}

double value_at(const ValueTable& table, const StateGrid& grid, const Eigen::VectorXd& x, bool interpolate)
{
    if (!interpolate)
        return table.values[static_cast<Eigen::Index>(grid.nearest(x))];

    // Multilinear interpolation on the cell containing the (box-projected) point.
    const Eigen::VectorXd p = grid.box().project(x);
    const std::size_t dims = static_cast<std::size_t>(grid.dim());
    std::vector<int> base(dims);
    std::vector<double> frac(dims);
    for (std::size_t d = 0; d < dims; ++d) {
        const Eigen::VectorXd& a = grid.axis(static_cast<Eigen::Index>(d));
        auto it = std::upper_bound(a.data(), a.data() + a.size(), p[static_cast<Eigen::Index>(d)]);
        int i = static_cast<int>(it - a.data()) - 1;
        i = std::clamp(i, 0, static_cast<int>(a.size()) - 2);
        base[d] = i;
        frac[d] = (p[static_cast<Eigen::Index>(d)] - a[i]) / (a[i + 1] - a[i]);
    }
    double v = 0.0;
    for (std::size_t corner = 0; corner < (std::size_t{1} << dims); ++corner) {
        std::vector<int> idx(base);
        double w = 1.0;
        for (std::size_t d = 0; d < dims; ++d) {
            const bool hi = (corner >> d) & 1u;
            idx[d] += hi ? 1 : 0;
            w *= hi ? frac[d] : 1.0 - frac[d];
        }
        if (w != 0.0)
            v += w * table.values[static_cast<Eigen::Index>(grid.flat_index(idx))];
    }
    return v;
}

double reach_avoid_success_prob(const ValueTable& j0, const StateGrid& grid, const SafeSet& safe, Quadrature rule)
{
    const std::vector<Eigen::VectorXd> w = grid.axis_weights(rule);
    double total = 0.0;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        if (!safe.contains(grid.node(i)))
            continue;
        const std::vector<int> idx = grid.multi_index(i);
        double vol = 1.0;
        for (std::size_t d = 0; d < idx.size(); ++d)
            vol *= w[d][idx[d]];
        total += j0.values[static_cast<Eigen::Index>(i)] * vol;
    }
    return total;
}

double reach_avoid_success_prob_normalized(const ValueTable& j0, const StateGrid& grid, const SafeSet& safe,
                                           Quadrature rule)
{
    return reach_avoid_success_prob(j0, grid, safe, rule) / safe.box.volume();
}

McEstimate monte_carlo_reach_prob(const gp::GpModel& model, const PolicyTable& policy, const StateGrid& grid,
                                  const Eigen::VectorXd& x0, const SafeSet& safe, const TargetSet& target,
                                  int horizon, int samples, std::uint64_t seed, const DpOptions& opts,
                                  const std::optional<Eigen::VectorXd>& first_action)
{
    if (samples < 1)
        throw std::invalid_argument("monte_carlo_reach_prob: samples must be positive");
    if (horizon < 1 || horizon > policy.horizon())
        throw std::invalid_argument("monte_carlo_reach_prob: horizon exceeds the policy horizon");

    McEstimate est;
    est.samples = samples;
    if (!safe.contains(x0))
        return est;

    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    int hits = 0;
    for (int s = 0; s < samples; ++s) {
        Eigen::VectorXd x = x0;
        bool ok = true;
        for (int k = 0; k < horizon && ok; ++k) {
            const Eigen::VectorXd u = (k == 0 && first_action) ? *first_action : policy.lookup(k, grid, x);
            const gp::Posterior post = model.predict(joint_input(x, u));
            for (Eigen::Index d = 0; d < x.size(); ++d) {
                double var = post.variance[d] + (opts.include_noise_in_dp ? model.hyperparams(d).noise_variance : 0.0);
                x[d] = post.mean[d] + std::sqrt(std::max(var, 0.0)) * normal(rng);
            }
            ok = safe.contains(x);
        }
        if (ok && target.contains(x))
            ++hits;
    }
    est.probability = static_cast<double>(hits) / samples;
    est.stderr_ = std::sqrt(est.probability * (1.0 - est.probability) / samples);
    return est;
}

namespace {

struct Algorithm2 {
    const gp::GpModel& model;
    const TargetSet& target;
    const SafeSet& safe;
    const StateGrid& grid;
    const Box& u_bounds;
    int horizon;
    const DpOptions& opts;
    std::vector<char> mask;

    /// Cost of applying u at x with k steps already taken.
    BackupResult cost(const Eigen::VectorXd& x, const Eigen::VectorXd& u, int k) const
    {
        const Transition t = make_transition(model, x, u, grid, opts);
        BackupResult r;
        if (k == horizon - 1) {
            for (std::size_t i = 0; i < grid.size(); ++i) {
                if (!mask[i] || !target.contains(grid.node(i)))
                    continue;
                r.pre_clamp += node_weight(t, grid, i);
            }
        }
        else {
            for (std::size_t i = 0; i < grid.size(); ++i) {
                if (!mask[i])
                    continue;
                const double w = node_weight(t, grid, i);
                r.mass += w;
                r.pre_clamp += w * best(grid.node(i), k + 1);
            }
        }
        r.value = std::clamp(r.pre_clamp, 0.0, 1.0);
        return r;
    }

    double best(const Eigen::VectorXd& x, int k) const
    {
        return maximize_over_controls([&](const Eigen::VectorXd& u) { return cost(x, u, k); }, u_bounds, opts.action,
                                      false)
            .value;
    }
};

} // namespace

double cost_algorithm2(const gp::GpModel& model, const Eigen::VectorXd& x0, const TargetSet& target,
                       const SafeSet& safe, const StateGrid& grid, const Box& u_bounds, int horizon, int stage,
                       const DpOptions& opts)
{
    check_problem(model, grid, u_bounds, horizon);
    if (horizon > 2)
        throw std::invalid_argument("cost_algorithm2: naive recursion is limited to horizon <= 2");
    if (stage < 0 || stage >= horizon)
        throw std::invalid_argument("cost_algorithm2: stage must lie in [0, horizon)");
    if (opts.renormalize)
        throw std::invalid_argument("cost_algorithm2: renormalization is not part of the literal recursion");
    Algorithm2 alg{model, target, safe, grid, u_bounds, horizon, opts, safe_mask(grid, safe)};
    return alg.best(x0, stage);
}

} // namespace safereach::reach
