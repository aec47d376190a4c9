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

#include "safereach/optimizer.hpp"

using namespace safereach;

namespace {

Box interval(double lo, double hi) { return Box(Eigen::VectorXd::Constant(1, lo), Eigen::VectorXd::Constant(1, hi)); }
Eigen::VectorXd scalar(double v) { return Eigen::VectorXd::Constant(1, v); }

} // namespace

TEST_CASE("unimodal quadratic")
{
    const auto r = opt::pattern_search([](const Eigen::VectorXd& u) { return -(u[0] - 1.0) * (u[0] - 1.0); },
                                       interval(-5, 5), {}, scalar(0.0));
    CHECK(std::abs(r.argmax[0] - 1.0) < 1e-2);
    CHECK(r.value == -(r.argmax[0] - 1.0) * (r.argmax[0] - 1.0));
}

TEST_CASE("constant objective returns the start")
{
    const auto r = opt::pattern_search([](const Eigen::VectorXd&) { return 3.0; }, interval(-5, 5), {}, scalar(1.3));
    CHECK(r.argmax[0] == 1.3);
    CHECK(r.value == 3.0);
}

TEST_CASE("optimum outside the box lands on the boundary")
{
    auto f = [](const Eigen::VectorXd& u) { return -(u[0] + 7.0) * (u[0] + 7.0); };
    const auto r = opt::pattern_search(f, interval(-5, 5), {}, scalar(0.0));
    // dense scan at 1e-3
    double best_u = 5.0, best = -1e300;
    for (int i = 0; i <= 10000; ++i) {
        const double u = -5.0 + 1e-3 * i;
        if (f(scalar(u)) > best) {
            best = f(scalar(u));
            best_u = u;
        }
    }
    CHECK(best_u == -5.0);
    CHECK(r.argmax[0] == -5.0);
}

TEST_CASE("every polled point is feasible and the incumbent never gets worse")
{
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> d(-1.0, 1.0);
    for (int t = 0; t < 30; ++t) {
        const double a = d(rng), b = d(rng), c = d(rng);
        auto f = [&](const Eigen::VectorXd& u) { return std::sin(3 * a * u[0]) + b * u[1] - c * u[0] * u[1]; };
        const Box box(Eigen::Vector2d(-2, -1), Eigen::Vector2d(1, 3));
        opt::SearchConfig cfg;
        cfg.record_trace = true;
        const auto r = opt::pattern_search(f, box, cfg, Eigen::Vector2d(0.0, 0.0));
        CHECK(box.contains(r.argmax));
        double best = -1e300;
        for (const auto& p : r.trace) {
            CHECK(box.contains(p.point));
            CHECK(p.value == f(p.point));
            best = std::max(best, p.value);
        }
        CHECK(r.value == best);
        CHECK(r.value >= f(Eigen::Vector2d(0.0, 0.0)));
        CHECK(r.evaluations == static_cast<int>(r.trace.size()));
    }
}

TEST_CASE("grid-scan dominance on random smooth 1-D functions")
{
    std::mt19937_64 rng(12);
    std::uniform_real_distribution<double> d(-1.0, 1.0);
    for (int t = 0; t < 50; ++t) {
        const double a = d(rng), b = d(rng), c = 2.0 * d(rng);
        auto f = [&](const Eigen::VectorXd& u) { return a * u[0] - 0.3 * (u[0] - c) * (u[0] - c) + 0.2 * b * std::cos(u[0]); };
        double lo = 1e300, hi = -1e300;
        for (int i = 0; i <= 1000; ++i) {
            const double v = f(scalar(-5.0 + 0.01 * i));
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
        const auto r = opt::pattern_search(f, interval(-5, 5), {}, scalar(0.0));
        CHECK(r.value >= hi - 1e-3 * (hi - lo));
    }
}

TEST_CASE("non-finite values are treated as failures")
{
    auto f = [](const Eigen::VectorXd& u) { return u[0] > 0.5 ? std::nan("") : -u[0] * u[0] + u[0]; };
    const auto r = opt::pattern_search(f, interval(-5, 5), {}, scalar(0.0));
    CHECK(std::isfinite(r.value));
    CHECK(r.argmax[0] <= 0.5);
}

TEST_CASE("budget exhaustion sets the truncation flag")
{
    opt::SearchConfig cfg;
    cfg.max_evals = 3;
    const auto r = opt::pattern_search([](const Eigen::VectorXd& u) { return -(u[0] - 1.0) * (u[0] - 1.0); },
                                       interval(-5, 5), cfg, scalar(0.0));
    CHECK(r.truncated);
    CHECK(r.evaluations <= 3);
    const auto full = opt::pattern_search([](const Eigen::VectorXd& u) { return -(u[0] - 1.0) * (u[0] - 1.0); },
                                          interval(-5, 5), {}, scalar(0.0));
    CHECK_FALSE(full.truncated);
}

TEST_CASE("search is deterministic")
{
    auto f = [](const Eigen::VectorXd& u) { return std::sin(u[0]) * std::cos(2 * u[1]); };
    const Box box(Eigen::Vector2d(-3, -3), Eigen::Vector2d(3, 3));
    const auto a = opt::pattern_search(f, box, {}, Eigen::Vector2d(0.1, 0.2));
    const auto b = opt::pattern_search(f, box, {}, Eigen::Vector2d(0.1, 0.2));
    CHECK(a.argmax == b.argmax);
    CHECK(a.value == b.value);
    CHECK(a.evaluations == b.evaluations);
}

TEST_CASE("reentrant polling gives the same answer")
{
    auto f = [](const Eigen::VectorXd& u) { return -std::pow(u[0] - 0.3, 2) - std::pow(u[1] + 0.7, 2); };
    const Box box(Eigen::Vector2d(-3, -3), Eigen::Vector2d(3, 3));
    opt::SearchConfig par;
    par.reentrant = true;
    const auto a = opt::pattern_search(f, box, {}, Eigen::Vector2d(0.0, 0.0));
    const auto b = opt::pattern_search(f, box, par, Eigen::Vector2d(0.0, 0.0));
    CHECK(a.argmax == b.argmax);
    CHECK(a.value == b.value);
}

TEST_CASE("multi-start keeps the best start and the first on ties")
{
    auto bimodal = [](const Eigen::VectorXd& u) {
        return std::exp(-std::pow(u[0] + 3.0, 2)) + 2.0 * std::exp(-std::pow(u[0] - 3.0, 2));
    };
    const auto r = opt::multi_start_search(bimodal, interval(-5, 5), {}, {scalar(-3.0), scalar(2.5)});
    CHECK(std::abs(r.argmax[0] - 3.0) < 1e-2);
    const auto tie = opt::multi_start_search([](const Eigen::VectorXd&) { return 0.0; }, interval(-5, 5), {},
                                             {scalar(-1.0), scalar(2.0)});
    CHECK(tie.argmax[0] == -1.0);
}

TEST_CASE("evenly spaced starts lie on the diagonal")
{
    const Box box(Eigen::Vector2d(0, -4), Eigen::Vector2d(4, 4));
    const auto s = opt::evenly_spaced_starts(box, 3);
    REQUIRE(s.size() == 3);
    CHECK(s[0][0] == doctest::Approx(1.0));
    CHECK(s[0][1] == doctest::Approx(-2.0));
    CHECK(s[1][0] == doctest::Approx(2.0));
    CHECK(s[2][1] == doctest::Approx(2.0));
}

TEST_CASE("invalid inputs")
{
    auto f = [](const Eigen::VectorXd&) { return 0.0; };
    CHECK_THROWS_AS(opt::pattern_search(f, interval(-1, 1), {}, scalar(2.0)), std::invalid_argument);
    opt::SearchConfig bad;
    bad.contraction = 1.5;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    CHECK_THROWS_AS(Box(Eigen::VectorXd::Constant(1, 1.0), Eigen::VectorXd::Constant(1, 0.0)), std::invalid_argument);
}

TEST_CASE("degenerate box returns its single point")
{
    const auto r = opt::pattern_search([](const Eigen::VectorXd& u) { return u[0]; }, interval(2, 2), {}, scalar(2.0));
    CHECK(r.argmax[0] == 2.0);
}
