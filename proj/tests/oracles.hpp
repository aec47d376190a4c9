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

// Reference implementations used by the tests. They are written for clarity
// and share nothing with the library beyond its public types.

#ifndef SAFEREACH_TESTS_ORACLES_HPP
#define SAFEREACH_TESTS_ORACLES_HPP

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <random>
#include <vector>

#include "safereach/gp.hpp"
#include "safereach/reach.hpp"

namespace oracle {

using safereach::Box;

inline double se_kernel(const Eigen::VectorXd& a, const Eigen::VectorXd& b, double sp2, const Eigen::VectorXd& ls)
{
    double q = 0.0;
    for (Eigen::Index i = 0; i < a.size(); ++i)
        q += (a[i] - b[i]) * (a[i] - b[i]) / ls[i];
    return sp2 * std::exp(-q / 2.0);
}

inline double poly_mean(const Eigen::MatrixXd& h, const Eigen::VectorXd& x)
{
    double m = 0.0;
    for (Eigen::Index i = 0; i < h.rows(); ++i)
        for (Eigen::Index j = 0; j < h.cols(); ++j)
            m += h(i, j) * std::pow(x[i], static_cast<double>(j));
    return m;
}

/// Exact GP through an explicit LU inverse of K + sn2 I.
struct DenseGp {
    Eigen::MatrixXd x;
    Eigen::VectorXd y;
    safereach::gp::GpHyperparams h;
    Eigen::MatrixXd kinv;
    Eigen::VectorXd r;
    double logdet = 0.0;

    DenseGp(const Eigen::MatrixXd& inputs, const Eigen::VectorXd& targets, const safereach::gp::GpHyperparams& hyp)
        : x(inputs), y(targets), h(hyp)
    {
        const Eigen::Index n = x.rows();
        Eigen::MatrixXd k(n, n);
        for (Eigen::Index a = 0; a < n; ++a)
            for (Eigen::Index b = 0; b < n; ++b)
                k(a, b) = se_kernel(x.row(a), x.row(b), h.signal_variance, h.length_scales)
                          + (a == b ? h.noise_variance : 0.0);
        Eigen::FullPivLU<Eigen::MatrixXd> lu(k);
        kinv = lu.inverse();
        logdet = 0.0;
        const Eigen::MatrixXd u = lu.matrixLU().triangularView<Eigen::Upper>();
        for (Eigen::Index i = 0; i < n; ++i)
            logdet += std::log(std::abs(u(i, i)));
        r.resize(n);
        for (Eigen::Index a = 0; a < n; ++a)
            r[a] = y[a] - poly_mean(h.poly_coeffs, x.row(a));
    }

    std::pair<double, double> predict(const Eigen::VectorXd& q) const
    {
        const Eigen::Index n = x.rows();
        Eigen::VectorXd ks(n);
        for (Eigen::Index a = 0; a < n; ++a)
            ks[a] = se_kernel(q, x.row(a), h.signal_variance, h.length_scales);
        const double mean = poly_mean(h.poly_coeffs, q) + ks.dot(kinv * r);
        const double var = h.signal_variance - ks.dot(kinv * ks);
        return {mean, var};
    }

    double lml() const
    {
        const double n = static_cast<double>(x.rows());
        return -0.5 * r.dot(kinv * r) - 0.5 * logdet - 0.5 * n * std::log(2.0 * std::numbers::pi);
    }
};

inline double normal_pdf(double z, double mean, double var)
{
    return std::exp(-(z - mean) * (z - mean) / (2.0 * var)) / std::sqrt(2.0 * std::numbers::pi * var);
}

inline double normal_mass(double a, double b, double mean, double sd)
{
    return 0.5 * (std::erf((b - mean) / (sd * std::numbers::sqrt2)) - std::erf((a - mean) / (sd * std::numbers::sqrt2)));
}

/// Left-node weights: the gap to the next node, zero for the last node.
inline std::vector<double> left_weights(const Eigen::VectorXd& a)
{
    std::vector<double> w(static_cast<std::size_t>(a.size()), 0.0);
    for (Eigen::Index i = 0; i + 1 < a.size(); ++i)
        w[static_cast<std::size_t>(i)] = a[i + 1] - a[i];
    return w;
}

/// Midpoint weights: width of each node's Voronoi cell clipped to [a_0, a_last].
inline std::vector<double> voronoi_weights(const Eigen::VectorXd& a)
{
    std::vector<double> w(static_cast<std::size_t>(a.size()), 0.0);
    const Eigen::Index n = a.size();
    for (Eigen::Index i = 0; i < n; ++i) {
        const double lo = i == 0 ? a[0] : 0.5 * (a[i - 1] + a[i]);
        const double hi = i == n - 1 ? a[n - 1] : 0.5 * (a[i] + a[i + 1]);
        w[static_cast<std::size_t>(i)] = hi - lo;
    }
    return w;
}

/// Brute-force 2-D reach-avoid recursion: every stage re-solves all later stages.
struct BruteDp {
    const safereach::gp::GpModel& model;
    Eigen::VectorXd ax, ay;
    std::vector<double> wx, wy;
    Eigen::Vector2d s_lo, s_hi;
    std::function<bool(double, double)> in_target;
    std::vector<double> controls;
    int horizon;

    bool in_safe(double x, double y) const { return x >= s_lo[0] && x <= s_hi[0] && y >= s_lo[1] && y <= s_hi[1]; }

    double step_value(int k, double x, double y, double u) const
    {
        const auto p = model.predict(Eigen::Vector3d(x, y, u));
        const double v0 = p.variance[0] + model.hyperparams(0).noise_variance;
        const double v1 = p.variance[1] + model.hyperparams(1).noise_variance;
        double sum = 0.0;
        for (Eigen::Index i = 0; i < ax.size(); ++i) {
            for (Eigen::Index j = 0; j < ay.size(); ++j) {
                if (!in_safe(ax[i], ay[j]))
                    continue;
                const double w = wx[static_cast<std::size_t>(i)] * wy[static_cast<std::size_t>(j)];
                if (w == 0.0)
                    continue;
                const double next = value(k + 1, ax[i], ay[j]);
                sum += next * normal_pdf(ax[i], p.mean[0], v0) * normal_pdf(ay[j], p.mean[1], v1) * w;
            }
        }
        return std::clamp(sum, 0.0, 1.0);
    }

    double value(int k, double x, double y) const
    {
        if (k == horizon)
            return in_target(x, y) ? 1.0 : 0.0;
        double best = 0.0;
        for (double u : controls)
            best = std::max(best, step_value(k, x, y, u));
        return best;
    }
};

inline Eigen::MatrixXd random_matrix(std::mt19937_64& rng, Eigen::Index r, Eigen::Index c, double lo, double hi)
{
    std::uniform_real_distribution<double> d(lo, hi);
    Eigen::MatrixXd m(r, c);
    for (Eigen::Index i = 0; i < r; ++i)
        for (Eigen::Index j = 0; j < c; ++j)
            m(i, j) = d(rng);
    return m;
}

inline safereach::gp::GpHyperparams random_hyp(std::mt19937_64& rng, Eigen::Index d)
{
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::uniform_int_distribution<int> deg(0, 5);
    safereach::gp::GpHyperparams h;
    h.signal_variance = 0.5 + 1.5 * u(rng);
    h.noise_variance = 0.01 + 0.3 * u(rng);
    h.length_scales = (0.3 + 2.7 * random_matrix(rng, d, 1, 0.0, 1.0).array()).matrix();
    h.poly_coeffs = random_matrix(rng, d, deg(rng) + 1, -0.5, 0.5);
    return h;
}

inline double rel_err(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

/// The small reach-avoid problem shared by the DP tests: 5x5 grid on [-1,1]^2,
/// a GP fitted to a few samples of a smooth contraction, u in [-1, 1].
struct SmallProblem {
    safereach::gp::GpModel model;
    safereach::reach::StateGrid grid{Box(Eigen::Vector2d(-1, -1), Eigen::Vector2d(1, 1)), 5};
    safereach::reach::SafeSet safe{Box(Eigen::Vector2d(-1, -1), Eigen::Vector2d(1, 1))};
    // Union of the Voronoi cells of nodes -0.5 and 0 in each dimension.
    safereach::reach::TargetSet target =
        safereach::reach::TargetSet::box(Box(Eigen::Vector2d(-0.75, -0.75), Eigen::Vector2d(0.25, 0.25)));
    Box u_bounds{Eigen::VectorXd::Constant(1, -1.0), Eigen::VectorXd::Constant(1, 1.0)};
    std::vector<double> controls;

    static Eigen::Vector2d truth(double x1, double x2, double u)
    {
        return {0.7 * x1 + 0.3 * x2, 0.6 * x2 + 0.5 * u + 0.2 * std::sin(2.0 * x1)};
    }

    explicit SmallProblem(double signal_variance = 0.2, double noise_variance = 0.1, std::uint64_t seed = 42)
    {
        std::mt19937_64 rng(seed);
        std::uniform_real_distribution<double> d(-1.0, 1.0);
        std::normal_distribution<double> noise(0.0, 0.05);
        safereach::gp::Dataset data(3, 2);
        for (int i = 0; i < 12; ++i) {
            const double x1 = d(rng), x2 = d(rng), u = d(rng);
            const Eigen::Vector2d y = truth(x1, x2, u);
            data.add(Eigen::Vector3d(x1, x2, u), Eigen::Vector2d(y[0] + noise(rng), y[1] + noise(rng)));
        }
        std::vector<safereach::gp::GpHyperparams> hs(2, safereach::gp::GpHyperparams::isotropic(3, 1, signal_variance, noise_variance));
        hs[0].poly_coeffs(0, 1) = 0.7;
        hs[0].poly_coeffs(1, 1) = 0.3;
        hs[1].poly_coeffs(1, 1) = 0.6;
        hs[1].poly_coeffs(2, 1) = 0.5;
        model = safereach::gp::fit(data, hs);
        for (int k = 0; k <= 10; ++k)
            controls.push_back(-1.0 + 0.2 * k);
    }

    safereach::reach::DpOptions discrete_options() const
    {
        safereach::reach::DpOptions o;
        for (double u : controls)
            o.action.discrete_controls.push_back(Eigen::VectorXd::Constant(1, u));
        return o;
    }

    BruteDp brute(int horizon, bool midpoint = false) const
    {
        auto w = midpoint ? voronoi_weights : left_weights;
        return BruteDp{model,
                       grid.axis(0),
                       grid.axis(1),
                       w(grid.axis(0)),
                       w(grid.axis(1)),
                       safe.box.lower,
                       safe.box.upper,
                       [t = target](double a, double b) { return t.contains(Eigen::Vector2d(a, b)); },
                       controls,
                       horizon};
    }
};

} // namespace oracle

#endif
