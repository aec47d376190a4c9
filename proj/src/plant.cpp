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

#include "safereach/plant.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace safereach::plant {

void PendulumParams::validate() const
{
    auto positive = [](double v) { return v > 0.0 && std::isfinite(v); };
    if (!positive(mass) || !positive(length) || !positive(friction) || !positive(gravity) || !positive(sample_time))
        throw std::invalid_argument("PendulumParams: all constants must be strictly positive");
}

double DisturbanceSpec::value(int dim, double x) const
{
    return amplitude.at(static_cast<std::size_t>(dim)) * std::sin(frequency.at(static_cast<std::size_t>(dim)) * x);
}

PlantState PlantState::from(const Eigen::VectorXd& v)
{
    if (v.size() != 2)
        throw std::invalid_argument("PlantState: expected a 2-vector");
    return {v[0], v[1]};
}

std::array<double, 2> continuous_derivative(const PlantState& s, double u, const PendulumParams& p,
                                            const DisturbanceSpec& d)
{
    const double ml2 = p.mass * p.length * p.length;
    return {s.angular_velocity + d.value(0, s.angle),
            u / ml2 + (p.gravity / p.length) * std::sin(s.angle) - (p.friction / p.mass) * s.angular_velocity
                + d.value(1, s.angular_velocity)};
}

PlantState euler_step(const PlantState& s, double u, const PendulumParams& p, const DisturbanceSpec& d)
{
    const auto dx = continuous_derivative(s, u, p, d);
    PlantState next{s.angle + p.sample_time * dx[0], s.angular_velocity + p.sample_time * dx[1]};
    if (p.wrap_angle) {
        next.angle = std::remainder(next.angle, 2.0 * std::numbers::pi);
        if (next.angle == -std::numbers::pi)
            next.angle = std::numbers::pi;
    }
    return next;
}

bool in_safe_set(const PlantState& s, const Box& safe) { return safe.contains(s.vector()); }

std::array<Eigen::MatrixXd, 2> nominal_mean_coeffs(const PendulumParams& p, int degree)
{
    if (degree < 1)
        throw std::invalid_argument("nominal_mean_coeffs: degree must be at least 1");
    const double t = p.sample_time;
    Eigen::MatrixXd angle_out = Eigen::MatrixXd::Zero(3, degree + 1);
    Eigen::MatrixXd velocity_out = Eigen::MatrixXd::Zero(3, degree + 1);

    // x_1' = x_1 + T x_2
    angle_out(0, 1) = 1.0;
    angle_out(1, 1) = t;

    // x_2' = x_2 (1 - bT/m) + (gT/l) sin(x_1) + T/(m l^2) u
    velocity_out(1, 1) = 1.0 - p.friction * t / p.mass;
    velocity_out(2, 1) = t / (p.mass * p.length * p.length);
    const double gain = p.gravity * t / p.length;
    double factorial = 1.0;
    for (int j = 1; j <= degree; ++j) {
        factorial *= j;
        if (j % 2 == 1) {
            const double sign = ((j - 1) / 2) % 2 == 0 ? 1.0 : -1.0;
            velocity_out(0, j) = gain * sign / factorial;
        }
    }
    return {angle_out, velocity_out};
}

} // namespace safereach::plant
