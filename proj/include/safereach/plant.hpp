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

#ifndef SAFEREACH_PLANT_HPP
#define SAFEREACH_PLANT_HPP

#include <Eigen/Dense>
#include <array>

#include "safereach/box.hpp"

namespace safereach::plant {

/// Damped inverted pendulum constants. All must be strictly positive.
struct PendulumParams {
    double mass = 1.0;      // kg
    double length = 1.0;    // m
    double friction = 0.1;  // b
    double gravity = 9.81;  // m/s^2
    double sample_time = 0.2;  // s
    /// Wrap the angle into (-pi, pi] after each step.
    bool wrap_angle = false;

    void validate() const;
};

/// Additive state-dependent disturbance d_i(x) = amplitude_i * sin(frequency_i * x_i).
struct DisturbanceSpec {
    std::array<double, 2> amplitude{0.0, 0.0};
    std::array<double, 2> frequency{0.0, 0.0};

    static DisturbanceSpec none() { return {}; }
    /// d_1 = 0.2 sin(20 x_1), d_2 = 2 sin(3 x_2).
    static DisturbanceSpec reference() { return {{0.2, 2.0}, {20.0, 3.0}}; }

    double value(int dim, double x) const;
};

struct PlantState {
    double angle = 0.0;             // x_1, rad
    double angular_velocity = 0.0;  // x_2, rad/s

    Eigen::VectorXd vector() const { return Eigen::Vector2d(angle, angular_velocity); }
    static PlantState from(const Eigen::VectorXd& v);

    friend bool operator==(const PlantState&, const PlantState&) = default;
};

/// Continuous-time right-hand side (dx_1/dt, dx_2/dt).
std::array<double, 2> continuous_derivative(const PlantState& s, double u, const PendulumParams& p,
                                            const DisturbanceSpec& d);

/// Forward-Euler step x + T * f(x, u).
PlantState euler_step(const PlantState& s, double u, const PendulumParams& p, const DisturbanceSpec& d);

/// Closed-box membership.
bool in_safe_set(const PlantState& s, const Box& safe);

/**
 * Coefficients of the nominal (disturbance-free) one-step map written as a
 * separable polynomial in (x_1, x_2, u) of the given degree, one row block
 * per output. sin(x_1) is replaced by its Taylor polynomial. Used to seed the
 * GP mean with the known part of the model.
 */
std::array<Eigen::MatrixXd, 2> nominal_mean_coeffs(const PendulumParams& p, int degree);

} // namespace safereach::plant

#endif
