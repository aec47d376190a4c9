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

#include <doctest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "safereach/explorer.hpp"

using namespace safereach;
using explore::ExplorationConfig;

namespace {

Box square(double h) { return Box(Eigen::Vector2d(-h, -h), Eigen::Vector2d(h, h)); }
Box controls(double lo, double hi) { return Box(Eigen::VectorXd::Constant(1, lo), Eigen::VectorXd::Constant(1, hi)); }

gp::GpModel prior_model(double sp2)
{
    return gp::fit(gp::Dataset(3, 2), std::vector<gp::GpHyperparams>(2, gp::GpHyperparams::isotropic(3, 1, sp2, 1e-3)));
}

/// Midpoint-rule integral written out directly from predict().
double brute_integrated_variance(const gp::GpModel& m, const Eigen::Vector2d& x, double lo, double hi, int q)
{
    const double h = (hi - lo) / q;
    double s = 0.0;
    for (int k = 0; k < q; ++k) {
        const auto p = m.predict(Eigen::Vector3d(x[0], x[1], lo + (k + 0.5) * h));
        s += (p.variance[0] + p.variance[1]) * h;
    }
    return s;
}

} // namespace

TEST_CASE("integrated variance of the prior")
{
    const gp::GpModel m = prior_model(0.3);
    CHECK(explore::integrated_variance(m, Eigen::Vector2d(0.1, 0.2), controls(-5, 5), 11)
          == doctest::Approx(0.3 * 2 * 10).epsilon(1e-12));
    CHECK(explore::integrated_variance(m, Eigen::Vector2d(0.1, 0.2), controls(0, 1), 1)
          == doctest::Approx(0.6).epsilon(1e-12));
    CHECK_THROWS_AS(explore::integrated_variance(m, Eigen::Vector2d::Zero(), controls(0, 1), 0), std::invalid_argument);
}

TEST_CASE("integrated variance against a direct midpoint sum")
{
    const oracle::SmallProblem p;
    std::mt19937_64 rng(8);
    std::uniform_real_distribution<double> d(-1, 1);
    for (int t = 0; t < 20; ++t) {
        const Eigen::Vector2d x(d(rng), d(rng));
        CHECK(explore::integrated_variance(p.model, x, p.u_bounds, 7)
              == doctest::Approx(brute_integrated_variance(p.model, x, -1, 1, 7)).epsilon(1e-12));
    }
}

TEST_CASE("eroded safe box")
{
    const reach::SafeSet s{Box(Eigen::Vector2d(-1, -2), Eigen::Vector2d(1, 2))};
    const Box e = explore::eroded_safe_box(s, 0.25);
    CHECK(e.lower == Eigen::Vector2d(-0.75, -1.75));
    CHECK(e.upper == Eigen::Vector2d(0.75, 1.75));
    CHECK_THROWS_AS(explore::eroded_safe_box(s, 1.0), explore::ConfigError);
    CHECK_THROWS_AS(explore::eroded_safe_box(s, 0.0), explore::ConfigError);
    CHECK_THROWS_AS(explore::eroded_safe_box(s, -0.1), explore::ConfigError);
}

TEST_CASE("target goes to the most uncertain admissible node")
{
    const oracle::SmallProblem p;
    const reach::StateGrid g(square(1.0), 21);
    ExplorationConfig cfg;
    cfg.radius = 0.15;
    const reach::TargetSet t = explore::select_target(p.model, p.safe, cfg, g, p.u_bounds);

    const Box inner = explore::eroded_safe_box(p.safe, cfg.radius);
    double best = -1.0;
    std::size_t arg = 0;
    for (std::size_t i = 0; i < g.size(); ++i) {
        if (!inner.contains(g.node(i)))
            continue;
        const double v = brute_integrated_variance(p.model, g.node(i), -1, 1, cfg.control_quadrature_points);
        if (v > best) {
            best = v;
            arg = i;
        }
    }
    CHECK(t.is_ball());
    CHECK(t.center() == g.node(arg));
    CHECK(t.radius() == 0.15);
    CHECK(t.inside(p.safe.box));
}

TEST_CASE("ties go to the lowest flat index")
{
    const gp::GpModel flat = prior_model(1.0);
    const reach::StateGrid g(square(1.0), 9);
    ExplorationConfig cfg;
    cfg.radius = 0.3;
    const reach::TargetSet t = explore::select_target(flat, reach::SafeSet{square(1.0)}, cfg, g, controls(-1, 1));
    CHECK(t.center() == Eigen::Vector2d(-0.5, -0.5));
}

TEST_CASE("target ball always fits in the safe set")
{
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> d(-1, 1);
    for (int t = 0; t < 10; ++t) {
        gp::Dataset data(3, 2);
        for (int i = 0; i < 6; ++i)
            data.add(Eigen::Vector3d(d(rng), d(rng), d(rng)), Eigen::Vector2d(d(rng), d(rng)));
        const gp::GpModel m = gp::fit(data, std::vector<gp::GpHyperparams>(2, gp::GpHyperparams::isotropic(3, 1, 0.5, 0.01)));
        ExplorationConfig cfg;
        cfg.radius = 0.05 + 0.1 * (d(rng) + 1.0);
        const reach::SafeSet s{Box(Eigen::Vector2d(-0.8, -1.0), Eigen::Vector2d(0.6, 1.0))};
        const reach::TargetSet tgt = explore::select_target(m, s, cfg, reach::StateGrid(square(1.0), 13), controls(-1, 1));
        CHECK(tgt.inside(s.box));
    }
}

TEST_CASE("no node inside the eroded set")
{
    const reach::StateGrid g(square(1.0), 2);
    ExplorationConfig cfg;
    cfg.radius = 0.1;
    CHECK_THROWS_AS(explore::select_target(prior_model(1.0), reach::SafeSet{square(1.0)}, cfg, g, controls(-1, 1)),
                    explore::ConfigError);
}

TEST_CASE("data lowers the integrated variance near the samples")
{
    gp::Dataset data(3, 2);
    for (double u : {-1.0, 0.0, 1.0})
        data.add(Eigen::Vector3d(0.5, 0.5, u), Eigen::Vector2d(0.0, 0.0));
    const gp::GpModel m = gp::fit(data, std::vector<gp::GpHyperparams>(2, gp::GpHyperparams::isotropic(3, 0.3, 1.0, 1e-4)));
    const reach::StateGrid g(square(1.0), 5);
    ExplorationConfig cfg;
    cfg.radius = 0.2;
    const reach::TargetSet t = explore::select_target(m, reach::SafeSet{square(1.0)}, cfg, g, controls(-1, 1));
    CHECK(t.center() != Eigen::Vector2d(0.5, 0.5));
    CHECK(explore::integrated_variance(m, Eigen::Vector2d(0.5, 0.5), controls(-1, 1), 11)
          < explore::integrated_variance(m, Eigen::Vector2d(-0.5, -0.5), controls(-1, 1), 11));
}
