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

#ifndef SAFEREACH_GP_HPP
#define SAFEREACH_GP_HPP

#include <Eigen/Dense>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "safereach/box.hpp"
#include "safereach/optimizer.hpp"

namespace safereach::gp {

/// Cholesky factorization failed even after the largest jitter.
class NumericalError : public std::runtime_error {
public:
    NumericalError(const std::string& what, double last_jitter, double diag_ratio)
        : std::runtime_error(what), last_jitter_(last_jitter), diag_ratio_(diag_ratio)
    {
    }
    double last_jitter() const { return last_jitter_; }
    /// max/min diagonal of the Gram matrix, a cheap conditioning hint.
    double diag_ratio() const { return diag_ratio_; }

private:
    double last_jitter_;
    double diag_ratio_;
};

/**
 * Hyperparameters of one scalar GP: squared-exponential kernel
 *
 *   k(x, x') = signal_variance * exp(-0.5 * sum_i (x_i - x'_i)^2 / length_scales_i)
 *
 * (length_scales holds the diagonal of L, i.e. squared characteristic
 * lengths) plus a separable polynomial mean
 *
 *   m(x) = sum_i sum_j poly_coeffs(i, j) * x_i^j,   j = 0..degree.
 */
struct GpHyperparams {
    double noise_variance = 1e-2;
    double signal_variance = 1.0;
    Eigen::VectorXd length_scales;
    Eigen::MatrixXd poly_coeffs;

    /// Unit length scales and an all-zero mean of the given degree.
    static GpHyperparams isotropic(Eigen::Index input_dim, int degree = 5, double signal_variance = 1.0,
                                   double noise_variance = 1e-2);

    Eigen::Index input_dim() const { return length_scales.size(); }
    int degree() const { return static_cast<int>(poly_coeffs.cols()) - 1; }

    /// Throws std::invalid_argument on non-positive variances/length scales or a mis-shaped mean.
    void validate() const;

    /// Kernel parameters packed as [noise_variance, signal_variance, length_scales...].
    Eigen::VectorXd kernel_params() const;
    void set_kernel_params(const Eigen::VectorXd& packed);
};

/// Recorded (state, control) -> next-state samples.
class Dataset {
public:
    Dataset() = default;
    Dataset(Eigen::Index input_dim, Eigen::Index output_dim) : input_dim_(input_dim), output_dim_(output_dim) {}

    void add(const Eigen::VectorXd& input, const Eigen::VectorXd& target);

    std::size_t size() const { return inputs_.size(); }
    bool empty() const { return inputs_.empty(); }
    Eigen::Index input_dim() const { return input_dim_; }
    Eigen::Index output_dim() const { return output_dim_; }

    const std::vector<Eigen::VectorXd>& inputs() const { return inputs_; }
    const std::vector<Eigen::VectorXd>& targets() const { return targets_; }

    /// n x input_dim design matrix.
    Eigen::MatrixXd input_matrix() const;
    /// Targets of output dimension j.
    Eigen::VectorXd target_column(Eigen::Index j) const;

private:
    Eigen::Index input_dim_ = 0;
    Eigen::Index output_dim_ = 0;
    std::vector<Eigen::VectorXd> inputs_;
    std::vector<Eigen::VectorXd> targets_;
};

struct ScalarPosterior {
    double mean;
    double variance;
};

struct Posterior {
    Eigen::VectorXd mean;
    Eigen::VectorXd variance;
};

double kernel_eval(const Eigen::VectorXd& x, const Eigen::VectorXd& x2, const GpHyperparams& hyp);
double mean_eval(const GpHyperparams& hyp, const Eigen::VectorXd& x);

/// Polynomial mean features: column i*(degree+1)+j holds x_i^j.
Eigen::MatrixXd mean_features(const Eigen::MatrixXd& inputs, int degree);

/**
 * Exact GP posterior for one output dimension. Immutable after construction;
 * predict() is safe to call concurrently.
 */
class ScalarGp {
public:
    /// inputs is n x D; n may be zero (prior only).
    ScalarGp(GpHyperparams hyp, Eigen::MatrixXd inputs, Eigen::VectorXd targets);

    ScalarPosterior predict(const Eigen::VectorXd& x) const;
    double log_marginal_likelihood() const;

    const GpHyperparams& hyperparams() const { return hyp_; }
    /// Lower-triangular factor of K + (noise_variance + jitter) I.
    const Eigen::MatrixXd& chol_factor() const { return chol_; }
    const Eigen::VectorXd& alpha() const { return alpha_; }
    const Eigen::MatrixXd& inputs() const { return inputs_; }
    const Eigen::VectorXd& targets() const { return targets_; }
    /// Diagonal jitter that was needed on top of the noise variance.
    double jitter() const { return jitter_; }
    Eigen::Index size() const { return inputs_.rows(); }

private:
    Eigen::VectorXd kernel_column(const Eigen::VectorXd& x) const;

    GpHyperparams hyp_;
    Eigen::MatrixXd inputs_;
    Eigen::MatrixXd scaled_inputs_;
    Eigen::VectorXd targets_;
    Eigen::VectorXd inv_sqrt_ls_;
    Eigen::MatrixXd chol_;
    Eigen::VectorXd alpha_;
    double jitter_ = 0.0;
};

/// One independent ScalarGp per output dimension over the joint (state, control) input.
class GpModel {
public:
    GpModel() = default;
    GpModel(Dataset data, std::vector<ScalarGp> outputs) : data_(std::move(data)), outputs_(std::move(outputs)) {}

    Posterior predict(const Eigen::VectorXd& x) const;
    /// Polynomial mean per output dimension.
    Eigen::VectorXd mean(const Eigen::VectorXd& x) const;

    Eigen::Index input_dim() const { return data_.input_dim(); }
    Eigen::Index output_dim() const { return static_cast<Eigen::Index>(outputs_.size()); }
    const ScalarGp& output(Eigen::Index j) const { return outputs_.at(static_cast<std::size_t>(j)); }
    const GpHyperparams& hyperparams(Eigen::Index j) const { return output(j).hyperparams(); }
    const Dataset& dataset() const { return data_; }

private:
    Dataset data_;
    std::vector<ScalarGp> outputs_;
};

/// Fits one GP per output dimension; hyps has one entry per output (or one entry shared by all).
GpModel fit(const Dataset& data, std::span<const GpHyperparams> hyps);
GpModel fit(const Dataset& data, const GpHyperparams& hyp);

Posterior predict(const GpModel& model, const Eigen::VectorXd& x_star);

/// Sum over output dimensions of the log evidence. Requires a nonempty dataset.
double log_marginal_likelihood(const Dataset& data, std::span<const GpHyperparams> hyps);
double log_marginal_likelihood(const Eigen::MatrixXd& inputs, const Eigen::VectorXd& targets,
                               const GpHyperparams& hyp);

/**
 * Maximum-likelihood settings. Kernel parameters are searched in log space
 * with pattern search; the polynomial mean, when fit_mean is set, is profiled
 * out by ridge-regularized generalized least squares anchored at the initial
 * coefficients.
 */
struct MleOptions {
    /// Default box per kernel parameter is [lower_factor, upper_factor] x initial value.
    double lower_factor = 1e-4;
    double upper_factor = 1e4;
    int starts = 3;
    opt::SearchConfig search{0.25, 0.5, 1e-3, 200};
    bool fit_mean = true;
    double mean_ridge = 1.0;
};

/// Box over packed kernel parameters [noise, signal, length_scales...] in natural units.
Box default_mle_bounds(const GpHyperparams& init, const MleOptions& opts = {});

struct ScalarMleResult {
    GpHyperparams hyperparams;
    double loglik_before = 0.0;
    double loglik_after = 0.0;
    /// Every evaluation failed; hyperparams is the initial value.
    bool fallback = false;
};

ScalarMleResult optimize_hyperparams(const Eigen::MatrixXd& inputs, const Eigen::VectorXd& targets,
                                     const GpHyperparams& init, const Box& bounds, const MleOptions& opts = {});
/// Same, but the profiled mean is shrunk towards mean_anchor instead of init.poly_coeffs.
ScalarMleResult optimize_hyperparams(const Eigen::MatrixXd& inputs, const Eigen::VectorXd& targets,
                                     const GpHyperparams& init, const Box& bounds, const MleOptions& opts,
                                     const Eigen::MatrixXd& mean_anchor);

struct MleResult {
    std::vector<GpHyperparams> hyperparams;
    std::vector<double> loglik_before;
    std::vector<double> loglik_after;
    bool fallback = false;
};

/// Optimizes each output dimension independently with default_mle_bounds(init[j]).
MleResult optimize_hyperparams(const Dataset& data, std::span<const GpHyperparams> init,
                               const MleOptions& opts = {});

/**
 * Warm start from init, with bounds and mean anchor taken from reference
 * (typically the configured prior), so repeated refits cannot drift.
 */
MleResult optimize_hyperparams(const Dataset& data, std::span<const GpHyperparams> init,
                               std::span<const GpHyperparams> reference, const MleOptions& opts = {});

} // namespace safereach::gp

#endif
