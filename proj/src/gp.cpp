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

#include "safereach/gp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace safereach::gp {

namespace {

constexpr double kFirstJitter = 1e-10;
constexpr double kLastJitter = 1e-4;

void check_dim(const Eigen::VectorXd& x, Eigen::Index expected, const char* where)
{
    if (x.size() != expected) {
        throw std::invalid_argument(std::string(where) + ": input dimension " + std::to_string(x.size())
                                    + " does not match " + std::to_string(expected));
    }
}

struct Factor {
    Eigen::MatrixXd lower;
    double jitter = 0.0;
};

/// Cholesky of gram (already containing the noise term), escalating diagonal jitter on failure.
Factor factorize(const Eigen::MatrixXd& gram, double signal_variance)
{
    Factor f;
    const Eigen::Index n = gram.rows();
    if (n == 0)
        return f;

    double jitter = 0.0;
    for (;;) {
        Eigen::LLT<Eigen::MatrixXd> llt(gram + jitter * Eigen::MatrixXd::Identity(n, n));
        if (llt.info() == Eigen::Success && llt.matrixLLT().diagonal().allFinite()) {
            f.lower = llt.matrixL();
            f.jitter = jitter;
            return f;
        }
        if (jitter == 0.0)
            jitter = kFirstJitter * signal_variance;
        else if (jitter < kLastJitter * signal_variance * (1.0 - 1e-9))
            jitter *= 10.0;
        else
            break;
    }
    const Eigen::VectorXd diag = gram.diagonal();
    const double ratio = diag.maxCoeff() / std::max(diag.minCoeff(), std::numeric_limits<double>::min());
    throw NumericalError("Cholesky factorization failed after jitter " + std::to_string(jitter) + " (n="
                             + std::to_string(n) + ", diagonal ratio " + std::to_string(ratio) + ")",
                         jitter, ratio);
}

Eigen::MatrixXd gram_matrix(const Eigen::MatrixXd& inputs, const GpHyperparams& hyp)
{
    const Eigen::Index n = inputs.rows();
    const Eigen::RowVectorXd inv_sqrt = hyp.length_scales.cwiseSqrt().cwiseInverse().transpose();
    const Eigen::MatrixXd scaled = inputs.array().rowwise() * inv_sqrt.array();
    Eigen::MatrixXd k(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        k(i, i) = hyp.signal_variance + hyp.noise_variance;
        for (Eigen::Index j = 0; j < i; ++j) {
            double v = hyp.signal_variance * std::exp(-0.5 * (scaled.row(i) - scaled.row(j)).squaredNorm());
            k(i, j) = v;
            k(j, i) = v;
        }
    }
    return k;
}

Eigen::VectorXd mean_vector(const Eigen::MatrixXd& inputs, const GpHyperparams& hyp)
{
    Eigen::VectorXd m(inputs.rows());
    for (Eigen::Index i = 0; i < inputs.rows(); ++i)
        m[i] = mean_eval(hyp, inputs.row(i).transpose());
    return m;
}

double lml_from_factor(const Factor& f, const Eigen::VectorXd& residual)
{
    const Eigen::Index n = residual.size();
    const Eigen::VectorXd w = f.lower.triangularView<Eigen::Lower>().solve(residual);
    const double log_det = 2.0 * f.lower.diagonal().array().log().sum();
    return -0.5 * w.squaredNorm() - 0.5 * log_det - 0.5 * static_cast<double>(n) * std::log(2.0 * std::numbers::pi);
}

/// Ridge GLS update of the polynomial mean given the current kernel, anchored at anchor.
Eigen::MatrixXd profile_mean(const Eigen::MatrixXd& inputs, const Eigen::VectorXd& targets,
                             const GpHyperparams& hyp, const Eigen::MatrixXd& anchor, double ridge,
                             const Factor& f)
{
    const int degree = hyp.degree();
    const Eigen::MatrixXd h_feat = mean_features(inputs, degree);
    Eigen::VectorXd h0(anchor.size());
    for (Eigen::Index i = 0; i < anchor.rows(); ++i)
        for (Eigen::Index j = 0; j < anchor.cols(); ++j)
            h0[i * anchor.cols() + j] = anchor(i, j);

    const auto lower = f.lower.triangularView<Eigen::Lower>();
    const Eigen::MatrixXd a = lower.solve(h_feat);
    const Eigen::VectorXd b = lower.solve(targets - h_feat * h0);
    Eigen::MatrixXd normal = a.transpose() * a;
    normal.diagonal().array() += ridge;
    const Eigen::VectorXd h = h0 + normal.ldlt().solve(a.transpose() * b);

    Eigen::MatrixXd coeffs(anchor.rows(), anchor.cols());
    for (Eigen::Index i = 0; i < coeffs.rows(); ++i)
        for (Eigen::Index j = 0; j < coeffs.cols(); ++j)
            coeffs(i, j) = h[i * coeffs.cols() + j];
    return coeffs;
}

} // namespace

GpHyperparams GpHyperparams::isotropic(Eigen::Index input_dim, int degree, double signal_variance,
                                       double noise_variance)
{
    GpHyperparams h;
    h.noise_variance = noise_variance;
    h.signal_variance = signal_variance;
    h.length_scales = Eigen::VectorXd::Ones(input_dim);
    h.poly_coeffs = Eigen::MatrixXd::Zero(input_dim, degree + 1);
    return h;
}

void GpHyperparams::validate() const
{
    if (!(noise_variance > 0.0) || !std::isfinite(noise_variance))
        throw std::invalid_argument("GpHyperparams: noise_variance must be positive");
    if (!(signal_variance > 0.0) || !std::isfinite(signal_variance))
        throw std::invalid_argument("GpHyperparams: signal_variance must be positive");
    if (length_scales.size() == 0)
        throw std::invalid_argument("GpHyperparams: no length scales");
    for (Eigen::Index i = 0; i < length_scales.size(); ++i) {
        if (!(length_scales[i] > 0.0) || !std::isfinite(length_scales[i]))
            throw std::invalid_argument("GpHyperparams: length scale " + std::to_string(i) + " must be positive");
    }
    if (poly_coeffs.rows() != length_scales.size() || poly_coeffs.cols() < 1)
        throw std::invalid_argument("GpHyperparams: poly_coeffs must be input_dim x (degree+1)");
    if (!poly_coeffs.allFinite())
        throw std::invalid_argument("GpHyperparams: poly_coeffs must be finite");
}

Eigen::VectorXd GpHyperparams::kernel_params() const
{
    Eigen::VectorXd p(2 + length_scales.size());
    p[0] = noise_variance;
    p[1] = signal_variance;
    p.tail(length_scales.size()) = length_scales;
    return p;
}

void GpHyperparams::set_kernel_params(const Eigen::VectorXd& packed)
{
    if (packed.size() != 2 + length_scales.size())
        throw std::invalid_argument("GpHyperparams::set_kernel_params: wrong parameter count");
    noise_variance = packed[0];
    signal_variance = packed[1];
    length_scales = packed.tail(length_scales.size());
}

void Dataset::add(const Eigen::VectorXd& input, const Eigen::VectorXd& target)
{
    if (input.size() != input_dim_ || target.size() != output_dim_) {
        throw std::invalid_argument("Dataset::add: expected input/target sizes " + std::to_string(input_dim_) + "/"
                                    + std::to_string(output_dim_) + ", got " + std::to_string(input.size()) + "/"
                                    + std::to_string(target.size()));
    }
    inputs_.push_back(input);
    targets_.push_back(target);
}

Eigen::MatrixXd Dataset::input_matrix() const
{
    Eigen::MatrixXd m(static_cast<Eigen::Index>(inputs_.size()), input_dim_);
    for (std::size_t i = 0; i < inputs_.size(); ++i)
        m.row(static_cast<Eigen::Index>(i)) = inputs_[i].transpose();
    return m;
}

Eigen::VectorXd Dataset::target_column(Eigen::Index j) const
{
    if (j < 0 || j >= output_dim_)
        throw std::out_of_range("Dataset::target_column: output index out of range");
    Eigen::VectorXd y(static_cast<Eigen::Index>(targets_.size()));
    for (std::size_t i = 0; i < targets_.size(); ++i)
        y[static_cast<Eigen::Index>(i)] = targets_[i][j];
    return y;
}

double kernel_eval(const Eigen::VectorXd& x, const Eigen::VectorXd& x2, const GpHyperparams& hyp)
{
    check_dim(x, hyp.input_dim(), "kernel_eval");
    check_dim(x2, hyp.input_dim(), "kernel_eval");
    const double quad = ((x - x2).array().square() / hyp.length_scales.array()).sum();
    return hyp.signal_variance * std::exp(-0.5 * quad);
}

double mean_eval(const GpHyperparams& hyp, const Eigen::VectorXd& x)
{
    if (hyp.poly_coeffs.rows() != x.size() || hyp.poly_coeffs.cols() < 1)
        throw std::invalid_argument("mean_eval: poly_coeffs shape does not match input dimension");
    double total = 0.0;
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        // Horner per input dimension.
        double acc = 0.0;
        for (Eigen::Index j = hyp.poly_coeffs.cols() - 1; j >= 0; --j)
            acc = acc * x[i] + hyp.poly_coeffs(i, j);
        total += acc;
    }
    return total;
}

Eigen::MatrixXd mean_features(const Eigen::MatrixXd& inputs, int degree)
{
    const Eigen::Index n = inputs.rows();
    const Eigen::Index d = inputs.cols();
    const Eigen::Index per = degree + 1;
    Eigen::MatrixXd h(n, d * per);
    for (Eigen::Index r = 0; r < n; ++r) {
        for (Eigen::Index i = 0; i < d; ++i) {
            double p = 1.0;
            for (Eigen::Index j = 0; j < per; ++j) {
                h(r, i * per + j) = p;
                p *= inputs(r, i);
            }
        }
    }
    return h;
}

ScalarGp::ScalarGp(GpHyperparams hyp, Eigen::MatrixXd inputs, Eigen::VectorXd targets)
    : hyp_(std::move(hyp)), inputs_(std::move(inputs)), targets_(std::move(targets))
{
    hyp_.validate();
    if (inputs_.rows() != targets_.size())
        throw std::invalid_argument("ScalarGp: inputs and targets have different lengths");
    if (inputs_.rows() > 0 && inputs_.cols() != hyp_.input_dim())
        throw std::invalid_argument("ScalarGp: input dimension does not match length_scales");

    inv_sqrt_ls_ = hyp_.length_scales.cwiseSqrt().cwiseInverse();
    scaled_inputs_ = inputs_.array().rowwise() * inv_sqrt_ls_.transpose().array();
    if (inputs_.rows() == 0)
        return;

    Factor f = factorize(gram_matrix(inputs_, hyp_), hyp_.signal_variance);
    chol_ = std::move(f.lower);
    jitter_ = f.jitter;
    const Eigen::VectorXd residual = targets_ - mean_vector(inputs_, hyp_);
    alpha_ = chol_.triangularView<Eigen::Lower>().solve(residual);
    chol_.triangularView<Eigen::Lower>().transpose().solveInPlace(alpha_);
}

Eigen::VectorXd ScalarGp::kernel_column(const Eigen::VectorXd& x) const
{
    const Eigen::RowVectorXd xs = (x.array() * inv_sqrt_ls_.array()).matrix().transpose();
    return hyp_.signal_variance * (-0.5 * (scaled_inputs_.rowwise() - xs).rowwise().squaredNorm()).array().exp();
}

ScalarPosterior ScalarGp::predict(const Eigen::VectorXd& x) const
{
    check_dim(x, hyp_.input_dim(), "predict");
    ScalarPosterior p{mean_eval(hyp_, x), hyp_.signal_variance};
    if (inputs_.rows() == 0)
        return p;
    const Eigen::VectorXd k = kernel_column(x);
    p.mean += k.dot(alpha_);
    const Eigen::VectorXd v = chol_.triangularView<Eigen::Lower>().solve(k);
    p.variance = std::max(0.0, hyp_.signal_variance - v.squaredNorm());
    return p;
}

double ScalarGp::log_marginal_likelihood() const
{
    if (inputs_.rows() == 0)
        throw std::invalid_argument("log_marginal_likelihood: empty dataset");
    Factor f{chol_, jitter_};
    return lml_from_factor(f, targets_ - mean_vector(inputs_, hyp_));
}

Posterior GpModel::predict(const Eigen::VectorXd& x) const
{
    Posterior p{Eigen::VectorXd(output_dim()), Eigen::VectorXd(output_dim())};
    for (Eigen::Index j = 0; j < output_dim(); ++j) {
        ScalarPosterior s = output(j).predict(x);
        p.mean[j] = s.mean;
        p.variance[j] = s.variance;
    }
    return p;
}

Eigen::VectorXd GpModel::mean(const Eigen::VectorXd& x) const
{
    Eigen::VectorXd m(output_dim());
    for (Eigen::Index j = 0; j < output_dim(); ++j)
        m[j] = mean_eval(hyperparams(j), x);
    return m;
}

namespace {

const GpHyperparams& pick(std::span<const GpHyperparams> hyps, Eigen::Index j, Eigen::Index outputs)
{
    if (hyps.size() == 1)
        return hyps[0];
    if (static_cast<Eigen::Index>(hyps.size()) != outputs)
        throw std::invalid_argument("expected one hyperparameter set per output dimension");
    return hyps[static_cast<std::size_t>(j)];
}

} // namespace

GpModel fit(const Dataset& data, std::span<const GpHyperparams> hyps)
{
    if (hyps.empty())
        throw std::invalid_argument("fit: no hyperparameters");
    const Eigen::MatrixXd x = data.input_matrix();
    std::vector<ScalarGp> outputs;
    outputs.reserve(static_cast<std::size_t>(data.output_dim()));
    for (Eigen::Index j = 0; j < data.output_dim(); ++j) {
        const GpHyperparams& h = pick(hyps, j, data.output_dim());
        if (h.input_dim() != data.input_dim())
            throw std::invalid_argument("fit: hyperparameter input dimension does not match dataset");
        outputs.emplace_back(h, x, data.target_column(j));
    }
    return GpModel(data, std::move(outputs));
}

GpModel fit(const Dataset& data, const GpHyperparams& hyp) { return fit(data, std::span<const GpHyperparams>(&hyp, 1)); }

Posterior predict(const GpModel& model, const Eigen::VectorXd& x_star) { return model.predict(x_star); }

double log_marginal_likelihood(const Eigen::MatrixXd& inputs, const Eigen::VectorXd& targets,
                               const GpHyperparams& hyp)
{
    hyp.validate();
    if (inputs.rows() == 0)
        throw std::invalid_argument("log_marginal_likelihood: empty dataset");
    if (inputs.rows() != targets.size() || inputs.cols() != hyp.input_dim())
        throw std::invalid_argument("log_marginal_likelihood: shape mismatch");
    Factor f = factorize(gram_matrix(inputs, hyp), hyp.signal_variance);
    return lml_from_factor(f, targets - mean_vector(inputs, hyp));
}

double log_marginal_likelihood(const Dataset& data, std::span<const GpHyperparams> hyps)
{
    if (data.empty())
        throw std::invalid_argument("log_marginal_likelihood: empty dataset");
    const Eigen::MatrixXd x = data.input_matrix();
    double total = 0.0;
    for (Eigen::Index j = 0; j < data.output_dim(); ++j)
        total += log_marginal_likelihood(x, data.target_column(j), pick(hyps, j, data.output_dim()));
    return total;
}

Box default_mle_bounds(const GpHyperparams& init, const MleOptions& opts)
{
    const Eigen::VectorXd p = init.kernel_params();
    return Box(p * opts.lower_factor, p * opts.upper_factor);
}

ScalarMleResult optimize_hyperparams(const Eigen::MatrixXd& inputs, const Eigen::VectorXd& targets,
                                     const GpHyperparams& init, const Box& bounds, const MleOptions& opts)
{
    return optimize_hyperparams(inputs, targets, init, bounds, opts, init.poly_coeffs);
}

ScalarMleResult optimize_hyperparams(const Eigen::MatrixXd& inputs, const Eigen::VectorXd& targets,
                                     const GpHyperparams& init, const Box& bounds, const MleOptions& opts,
                                     const Eigen::MatrixXd& mean_anchor)
{
    init.validate();
    if (mean_anchor.rows() != init.poly_coeffs.rows() || mean_anchor.cols() != init.poly_coeffs.cols())
        throw std::invalid_argument("optimize_hyperparams: mean anchor shape does not match the mean");
    if (inputs.rows() == 0)
        throw std::invalid_argument("optimize_hyperparams: empty dataset");
    const Eigen::VectorXd p0 = init.kernel_params();
    if (bounds.dim() != p0.size())
        throw std::invalid_argument("optimize_hyperparams: bounds do not match the kernel parameter count");
    if (!(bounds.lower.array() > 0.0).all())
        throw std::invalid_argument("optimize_hyperparams: kernel parameter bounds must be positive");
    if (!bounds.contains(p0))
        throw std::invalid_argument("optimize_hyperparams: initial hyperparameters outside bounds");

    const Box log_box(bounds.lower.array().log().matrix(), bounds.upper.array().log().matrix());

    // Maps a log-space point to hyperparameters, profiling the mean when requested.
    auto realize = [&](const Eigen::VectorXd& log_params) {
        GpHyperparams h = init;
        h.set_kernel_params(bounds.project(log_params.array().exp().matrix()));
        Factor f = factorize(gram_matrix(inputs, h), h.signal_variance);
        if (opts.fit_mean)
            h.poly_coeffs = profile_mean(inputs, targets, h, mean_anchor, opts.mean_ridge, f);
        return std::make_pair(h, f);
    };

    auto objective = [&](const Eigen::VectorXd& log_params) {
        try {
            auto [h, f] = realize(log_params);
            return lml_from_factor(f, targets - mean_vector(inputs, h));
        }
        catch (const NumericalError&) {
            return -std::numeric_limits<double>::infinity();
        }
    };

    ScalarMleResult result;
    result.hyperparams = init;
    try {
        result.loglik_before = log_marginal_likelihood(inputs, targets, init);
    }
    catch (const NumericalError&) {
        result.loglik_before = -std::numeric_limits<double>::infinity();
    }
    result.loglik_after = result.loglik_before;

    std::vector<Eigen::VectorXd> starts;
    starts.push_back(log_box.project(p0.array().log().matrix()));
    for (auto& s : opt::evenly_spaced_starts(log_box, std::max(1, opts.starts)))
        starts.push_back(s);

    opt::SearchResult best = opt::multi_start_search(objective, log_box, opts.search, starts);
    if (!std::isfinite(best.value)) {
        result.fallback = true;
        return result;
    }
    if (best.value < result.loglik_before)
        return result;

    result.hyperparams = realize(best.argmax).first;
    result.loglik_after = best.value;
    return result;
}

MleResult optimize_hyperparams(const Dataset& data, std::span<const GpHyperparams> init, const MleOptions& opts)
{
    return optimize_hyperparams(data, init, init, opts);
}

MleResult optimize_hyperparams(const Dataset& data, std::span<const GpHyperparams> init,
                               std::span<const GpHyperparams> reference, const MleOptions& opts)
{
    if (data.empty())
        throw std::invalid_argument("optimize_hyperparams: empty dataset");
    MleResult out;
    const Eigen::MatrixXd x = data.input_matrix();
    bool all_failed = true;
    for (Eigen::Index j = 0; j < data.output_dim(); ++j) {
        const GpHyperparams& h0 = pick(init, j, data.output_dim());
        const GpHyperparams& ref = pick(reference, j, data.output_dim());
        ScalarMleResult r = optimize_hyperparams(x, data.target_column(j), h0, default_mle_bounds(ref, opts), opts,
                                                 ref.poly_coeffs);
        all_failed = all_failed && r.fallback;
        out.hyperparams.push_back(std::move(r.hyperparams));
        out.loglik_before.push_back(r.loglik_before);
        out.loglik_after.push_back(r.loglik_after);
    }
    out.fallback = all_failed;
    return out;
}

} // namespace safereach::gp
