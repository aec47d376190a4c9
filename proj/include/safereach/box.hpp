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

#ifndef SAFEREACH_BOX_HPP
#define SAFEREACH_BOX_HPP

#include <Eigen/Dense>
#include <stdexcept>
#include <string>

namespace safereach {

/**
 * Closed axis-aligned box [lower, upper]. Used for state boxes, safe sets,
 * control bounds and optimizer search bounds.
 */
struct Box {
    Eigen::VectorXd lower;
    Eigen::VectorXd upper;

    Box() = default;
    Box(Eigen::VectorXd lo, Eigen::VectorXd hi) : lower(std::move(lo)), upper(std::move(hi)) { validate(); }

    /// Symmetric box [-half, half] in every coordinate.
    static Box symmetric(const Eigen::VectorXd& half) { return Box(-half, half); }

    void validate() const
    {
        if (lower.size() != upper.size())
            throw std::invalid_argument("Box: lower and upper have different lengths");
        for (Eigen::Index i = 0; i < lower.size(); ++i) {
            if (!(lower[i] <= upper[i]))
                throw std::invalid_argument("Box: lower[" + std::to_string(i) + "] > upper[" + std::to_string(i) + "]");
        }
    }

    Eigen::Index dim() const { return lower.size(); }
    Eigen::VectorXd width() const { return upper - lower; }
    Eigen::VectorXd center() const { return 0.5 * (lower + upper); }
    double volume() const { return width().prod(); }

    bool contains(const Eigen::VectorXd& x) const
    {
        if (x.size() != lower.size())
            return false;
        for (Eigen::Index i = 0; i < x.size(); ++i) {
            if (!(x[i] >= lower[i] && x[i] <= upper[i]))
                return false;
        }
        return true;
    }

    bool contains(const Box& other) const
    {
        return other.dim() == dim() && (other.lower.array() >= lower.array()).all()
            && (other.upper.array() <= upper.array()).all();
    }

    Eigen::VectorXd project(const Eigen::VectorXd& x) const { return x.cwiseMax(lower).cwiseMin(upper); }
};

} // namespace safereach

#endif
