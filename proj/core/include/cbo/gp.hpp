#pragma once

#include "cbo/param_space.hpp"

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Core>

namespace cbo {

/// Matern smoothness used by every model; recorded in campaign state.
inline constexpr double kMaternNu = 2.5;
/// Fixed observation noise standard deviation, in standardized output units.
inline constexpr double kNoiseStd = 0.005;

enum class Channel { objective, constraint };

/// Affine output scaling: standardized = (raw - center) / scale.
/// Objective: center = mean, scale = sample std. Constraint: center = 0, scale = sample std.
struct Standardization {
    double center = 0.0;
    double scale = 1.0;

    static Standardization for_channel(Channel channel, std::span<const double> raw);

    double apply(double raw) const noexcept { return (raw - center) / scale; }
    double invert(double standardized) const noexcept { return scale * standardized + center; }

    bool operator==(const Standardization&) const = default;
};

struct GpHyperparameters {
    Eigen::VectorXd lengthscales;  // unit-cube units, one per dimension
    double signal_variance = 1.0;  // standardized units squared
    double noise_std = kNoiseStd;

    bool operator==(const GpHyperparameters& o) const
    {
        return lengthscales.size() == o.lengthscales.size() && lengthscales == o.lengthscales &&
               signal_variance == o.signal_variance && noise_std == o.noise_std;
    }
};

struct PosteriorGaussian {
    double mean = 0.0;
    double std = 0.0;
};

struct JointPosterior {
    Eigen::VectorXd mean;
    Eigen::MatrixXd covariance;
};

/// Matern-5/2 ARD covariance between two unit-cube points.
double matern_kernel(const Eigen::Ref<const Eigen::VectorXd>& a,
                     const Eigen::Ref<const Eigen::VectorXd>& b, const GpHyperparameters& hyper);
double matern_kernel(const UnitPoint& a, const UnitPoint& b, const GpHyperparameters& hyper);

/// Gram matrix between the rows of `a` (n x d) and the rows of `b` (m x d).
Eigen::MatrixXd matern_cross(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b,
                             const GpHyperparameters& hyper);

/// Log-parameter vector used by the fitter: [log l_1..log l_d, log signal_variance]
/// (ARD) or [log l, log signal_variance] (isotropic).
Eigen::VectorXd to_log_params(const GpHyperparameters& hyper, bool ard);
GpHyperparameters from_log_params(const Eigen::VectorXd& theta, std::size_t dim, bool ard);

/// Log marginal likelihood of standardized targets under zero-mean GP with `hyper`,
/// -1/2 y'a - sum log diag(L) - n/2 log 2pi. If `grad` is non-null it receives the
/// gradient with respect to `to_log_params(hyper, ard)`.
double log_marginal_likelihood(const Eigen::MatrixXd& inputs, const Eigen::VectorXd& targets,
                               const GpHyperparameters& hyper, Eigen::VectorXd* grad = nullptr,
                               bool ard = true);

struct FitOptions {
    std::size_t restarts = 8;
    std::size_t max_iters = 200;
    bool ard = true;

    // Search box for the hyperparameters.
    double min_lengthscale = 1e-3;
    double max_lengthscale = 1e3;
    double min_signal_variance = 1e-4;
    double max_signal_variance = 1e4;
    // Log-uniform range for initial lengthscales.
    double init_lengthscale_lo = 1e-2;
    double init_lengthscale_hi = 1e1;
};

/// Exact GP regression on standardized targets with fixed noise. Immutable once built.
class GpModel {
public:
    /// Multi-start maximum-likelihood fit. Requires >= 2 inputs with no two
    /// closer than kDuplicateTolerance. Deterministic in `seed`.
    static GpModel fit(std::span<const UnitPoint> inputs, std::span<const double> raw_targets,
                       Channel channel, std::uint64_t seed, const FitOptions& options = {});

    /// Conditions on data with the given hyperparameters (no search).
    static GpModel condition(std::span<const UnitPoint> inputs,
                             std::span<const double> raw_targets, Channel channel,
                             const GpHyperparameters& hyper);

    /// Posterior of the latent function, standardized units.
    PosteriorGaussian posterior(const UnitPoint& x) const;
    PosteriorGaussian posterior(const Eigen::Ref<const Eigen::VectorXd>& x) const;

    /// Joint posterior of the latent function at the rows of `xs` (m x d).
    JointPosterior joint_posterior(const Eigen::MatrixXd& xs) const;

    /// n_samples x |xs| draws from the joint posterior (standardized units).
    Eigen::MatrixXd joint_posterior_samples(std::span<const UnitPoint> xs, std::size_t n_samples,
                                            std::uint64_t seed) const;

    /// Maps a standardized posterior to raw output units.
    PosteriorGaussian destandardize(const PosteriorGaussian& g) const noexcept;

    Channel channel() const noexcept { return channel_; }
    const GpHyperparameters& hyperparameters() const noexcept { return hyper_; }
    const Standardization& standardization() const noexcept { return standardize_; }
    const Eigen::MatrixXd& train_inputs() const noexcept { return inputs_; }
    const Eigen::VectorXd& train_targets() const noexcept { return targets_; }
    const Eigen::VectorXd& raw_targets() const noexcept { return raw_; }
    const Eigen::VectorXd& alpha() const noexcept { return alpha_; }
    const Eigen::MatrixXd& factor() const noexcept { return factor_; }
    double jitter() const noexcept { return jitter_; }
    double log_marginal_likelihood() const noexcept { return lml_; }
    std::size_t dim() const noexcept { return static_cast<std::size_t>(inputs_.cols()); }
    std::size_t size() const noexcept { return static_cast<std::size_t>(inputs_.rows()); }

    /// max |(K + noise^2 I + jitter I) alpha - y|
    double solve_residual() const;

private:
    GpModel() = default;
    void build();

    Channel channel_ = Channel::objective;
    GpHyperparameters hyper_;
    Standardization standardize_;
    Eigen::MatrixXd inputs_;
    Eigen::VectorXd raw_;
    Eigen::VectorXd targets_;
    Eigen::MatrixXd factor_;  // lower-triangular
    Eigen::VectorXd alpha_;
    // Extended-precision copies for single-point queries; ill-conditioned Gram
    // matrices otherwise lose digits in the variance.
    Eigen::Matrix<long double, Eigen::Dynamic, Eigen::Dynamic> factor_ext_;
    Eigen::Matrix<long double, Eigen::Dynamic, 1> alpha_ext_;
    double jitter_ = 0.0;
    double lml_ = 0.0;
};

/// Cholesky with jitter escalation: tries `a`, then a + j I for
/// j = 1e-10, 1e-9, ..., 1e-4. Returns the jitter used; throws numeric on failure.
double cholesky_with_jitter(const Eigen::MatrixXd& a, Eigen::LLT<Eigen::MatrixXd>& llt);

Eigen::MatrixXd stack_points(std::span<const UnitPoint> points);

} // namespace cbo
