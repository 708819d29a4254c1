#include "cbo/gp.hpp"

#include "cbo/errors.hpp"
#include "cbo/qmc.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>

namespace cbo {

namespace {

constexpr double kSqrt5 = 2.23606797749978969641;

using MatrixXld = Eigen::Matrix<long double, Eigen::Dynamic, Eigen::Dynamic>;
using VectorXld = Eigen::Matrix<long double, Eigen::Dynamic, 1>;

// (1 + sqrt5 r + 5r^2/3) exp(-sqrt5 r)
template <typename T>
T matern52_shape(T r) noexcept
{
    const T s = static_cast<T>(kSqrt5) * r;
    return (T(1) + s + s * s / T(3)) * std::exp(-s);
}

long double kernel_ext(const Eigen::Ref<const Eigen::VectorXd>& a,
                       const Eigen::Ref<const Eigen::VectorXd>& b, const GpHyperparameters& hyper)
{
    long double r2 = 0.0L;
    for (Eigen::Index i = 0; i < a.size(); ++i) {
        const long double t =
            (static_cast<long double>(a[i]) - b[i]) / hyper.lengthscales[i];
        r2 += t * t;
    }
    const long double s = std::sqrt(5.0L * r2);
    return hyper.signal_variance * (1.0L + s + s * s / 3.0L) * std::exp(-s);
}

double scaled_distance(const Eigen::Ref<const Eigen::VectorXd>& a,
                       const Eigen::Ref<const Eigen::VectorXd>& b,
                       const Eigen::VectorXd& lengthscales) noexcept
{
    return ((a - b).array() / lengthscales.array()).matrix().norm();
}

void check_hyper(const GpHyperparameters& hyper, Eigen::Index dim)
{
    if (hyper.lengthscales.size() != dim)
        throw Error(ErrorKind::invalid_argument, "lengthscale count does not match dimension");
    if ((hyper.lengthscales.array() <= 0.0).any() || !(hyper.signal_variance > 0.0) ||
        !(hyper.noise_std > 0.0))
        throw Error(ErrorKind::invalid_argument, "hyperparameters must be strictly positive");
}

Eigen::MatrixXd noisy_gram(const Eigen::MatrixXd& x, const GpHyperparameters& hyper)
{
    Eigen::MatrixXd k = matern_cross(x, x, hyper);
    k.diagonal().array() += hyper.noise_std * hyper.noise_std;
    return k;
}

void check_training_data(std::span<const UnitPoint> inputs, std::span<const double> raw)
{
    if (inputs.size() < 2)
        throw Error(ErrorKind::invalid_argument, "GP fit needs at least 2 training points");
    if (inputs.size() != raw.size())
        throw Error(ErrorKind::invalid_argument, "input and target counts differ");
    const Eigen::Index d = inputs.front().size();
    if (d == 0)
        throw Error(ErrorKind::invalid_argument, "training inputs have zero dimension");
    for (std::size_t i = 0; i < inputs.size(); ++i) {
        if (inputs[i].size() != d)
            throw Error(ErrorKind::invalid_argument, "training inputs have mixed dimensions");
        if (!std::isfinite(raw[i]))
            throw Error(ErrorKind::data, "non-finite training target at row " + std::to_string(i));
        for (std::size_t j = 0; j < i; ++j)
            if ((inputs[i].coords() - inputs[j].coords()).norm() < kDuplicateTolerance)
                throw Error(ErrorKind::degenerate_data,
                            "training points " + std::to_string(j) + " and " + std::to_string(i) +
                                " coincide");
    }
}

struct Box {
    Eigen::VectorXd lo;
    Eigen::VectorXd hi;

    Eigen::VectorXd project(const Eigen::VectorXd& t) const { return t.cwiseMax(lo).cwiseMin(hi); }
};

// Negative infinity marks parameters whose Gram matrix cannot be factored.
double safe_lml(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const Eigen::VectorXd& theta,
                bool ard, Eigen::VectorXd& grad)
{
    try {
        const auto hyper = from_log_params(theta, static_cast<std::size_t>(x.cols()), ard);
        return log_marginal_likelihood(x, y, hyper, &grad, ard);
    } catch (const Error&) {
        grad.setZero(theta.size());
        return -std::numeric_limits<double>::infinity();
    }
}

// Projected gradient ascent with Barzilai-Borwein steps and Armijo backtracking.
double ascend(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, bool ard, const Box& box,
              std::size_t max_iters, Eigen::VectorXd& theta)
{
    Eigen::VectorXd grad;
    double f = safe_lml(x, y, theta, ard, grad);
    if (!std::isfinite(f))
        return f;

    double step = 0.1 / std::max(1.0, grad.lpNorm<Eigen::Infinity>());
    Eigen::VectorXd next_grad;
    for (std::size_t it = 0; it < max_iters; ++it) {
        const Eigen::VectorXd pg = box.project(theta + grad) - theta;
        if (pg.lpNorm<Eigen::Infinity>() < 1e-7)
            break;

        bool accepted = false;
        Eigen::VectorXd next;
        double f_next = f;
        for (int tries = 0; tries < 40; ++tries) {
            Eigen::VectorXd delta = step * grad;
            const double max_move = delta.lpNorm<Eigen::Infinity>();
            if (max_move > 1.0)
                delta *= 1.0 / max_move;
            next = box.project(theta + delta);
            const Eigen::VectorXd s = next - theta;
            if (s.lpNorm<Eigen::Infinity>() < 1e-14)
                break;
            f_next = safe_lml(x, y, next, ard, next_grad);
            if (std::isfinite(f_next) && f_next >= f + 1e-4 * grad.dot(s)) {
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if (!accepted)
            break;

        const Eigen::VectorXd s = next - theta;
        const Eigen::VectorXd dy = next_grad - grad;
        const double sy = s.dot(dy);
        const double previous = f;
        theta = next;
        f = f_next;
        grad = next_grad;
        step = sy < 0.0 ? s.squaredNorm() / -sy : 2.0 * step;
        step = std::clamp(step, 1e-8, 1e4);
        if (std::abs(f - previous) < 1e-12 * (1.0 + std::abs(f)) && s.norm() < 1e-9)
            break;
    }
    return f;
}

} // namespace

Standardization Standardization::for_channel(Channel channel, std::span<const double> raw)
{
    Standardization out;
    if (raw.empty())
        return out;
    const double n = static_cast<double>(raw.size());
    double mean = 0.0;
    for (double r : raw)
        mean += r;
    mean /= n;
    double ss = 0.0;
    for (double r : raw)
        ss += (r - mean) * (r - mean);
    const double sd = raw.size() > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0;
    out.center = channel == Channel::objective ? mean : 0.0;
    out.scale = sd > 0.0 && std::isfinite(sd) ? sd : 1.0;
    return out;
}

double matern_kernel(const Eigen::Ref<const Eigen::VectorXd>& a,
                     const Eigen::Ref<const Eigen::VectorXd>& b, const GpHyperparameters& hyper)
{
    if (a.size() != b.size() || a.size() != hyper.lengthscales.size())
        throw Error(ErrorKind::invalid_argument, "kernel argument dimensions differ");
    return hyper.signal_variance * matern52_shape(scaled_distance(a, b, hyper.lengthscales));
}

double matern_kernel(const UnitPoint& a, const UnitPoint& b, const GpHyperparameters& hyper)
{
    return matern_kernel(a.coords(), b.coords(), hyper);
}

Eigen::MatrixXd matern_cross(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b,
                             const GpHyperparameters& hyper)
{
    if (a.cols() != b.cols() || a.cols() != hyper.lengthscales.size())
        throw Error(ErrorKind::invalid_argument, "kernel argument dimensions differ");
    const Eigen::RowVectorXd inv = hyper.lengthscales.cwiseInverse().transpose();
    const Eigen::MatrixXd as = a.array().rowwise() * inv.array();
    const Eigen::MatrixXd bs = b.array().rowwise() * inv.array();
    Eigen::MatrixXd out(a.rows(), b.rows());
    for (Eigen::Index j = 0; j < b.rows(); ++j)
        for (Eigen::Index i = 0; i < a.rows(); ++i)
            out(i, j) = hyper.signal_variance * matern52_shape((as.row(i) - bs.row(j)).norm());
    return out;
}

Eigen::VectorXd to_log_params(const GpHyperparameters& hyper, bool ard)
{
    const Eigen::Index d = hyper.lengthscales.size();
    Eigen::VectorXd theta(ard ? d + 1 : 2);
    if (ard)
        theta.head(d) = hyper.lengthscales.array().log().matrix();
    else
        theta[0] = std::log(hyper.lengthscales[0]);
    theta[theta.size() - 1] = std::log(hyper.signal_variance);
    return theta;
}

GpHyperparameters from_log_params(const Eigen::VectorXd& theta, std::size_t dim, bool ard)
{
    const auto d = static_cast<Eigen::Index>(dim);
    if (theta.size() != (ard ? d + 1 : 2))
        throw Error(ErrorKind::invalid_argument, "log-parameter vector has wrong length");
    GpHyperparameters hyper;
    hyper.lengthscales =
        ard ? Eigen::VectorXd(theta.head(d).array().exp()) : Eigen::VectorXd::Constant(d, std::exp(theta[0]));
    hyper.signal_variance = std::exp(theta[theta.size() - 1]);
    hyper.noise_std = kNoiseStd;
    return hyper;
}

double cholesky_with_jitter(const Eigen::MatrixXd& a, Eigen::LLT<Eigen::MatrixXd>& llt)
{
    llt.compute(a);
    if (llt.info() == Eigen::Success)
        return 0.0;
    for (double jitter = 1e-10; jitter <= 1e-4 * (1.0 + 1e-9); jitter *= 10.0) {
        Eigen::MatrixXd shifted = a;
        shifted.diagonal().array() += jitter;
        llt.compute(shifted);
        if (llt.info() == Eigen::Success)
            return jitter;
    }
    throw Error(ErrorKind::numeric, "Cholesky factorization failed after jitter escalation to 1e-4");
}

double log_marginal_likelihood(const Eigen::MatrixXd& inputs, const Eigen::VectorXd& targets,
                               const GpHyperparameters& hyper, Eigen::VectorXd* grad, bool ard)
{
    check_hyper(hyper, inputs.cols());
    const Eigen::Index n = inputs.rows();
    const Eigen::Index d = inputs.cols();
    Eigen::MatrixXd k = noisy_gram(inputs, hyper);
    Eigen::LLT<Eigen::MatrixXd> llt;
    const double jitter = cholesky_with_jitter(k, llt);
    const Eigen::VectorXd alpha = llt.solve(targets);
    const Eigen::MatrixXd l = llt.matrixL();
    const double lml = -0.5 * targets.dot(alpha) - l.diagonal().array().log().sum() -
                       0.5 * static_cast<double>(n) * std::log(2.0 * std::numbers::pi);

    if (grad != nullptr) {
        k.diagonal().array() += jitter;
        // W = alpha alpha' - K^-1; dLML/dtheta_j = 1/2 sum_ab W_ab dK_ab/dtheta_j
        Eigen::MatrixXd w = alpha * alpha.transpose();
        w.noalias() -= llt.solve(Eigen::MatrixXd::Identity(n, n));

        grad->setZero(ard ? d + 1 : 2);
        const Eigen::VectorXd& ell = hyper.lengthscales;
        for (Eigen::Index a = 0; a < n; ++a) {
            for (Eigen::Index b = 0; b < n; ++b) {
                const Eigen::ArrayXd scaled =
                    (inputs.row(a) - inputs.row(b)).transpose().array() / ell.array();
                const Eigen::ArrayXd sq = scaled.square();
                const double r = std::sqrt(sq.sum());
                const double e = std::exp(-kSqrt5 * r);
                const double kab = hyper.signal_variance * (1.0 + kSqrt5 * r + 5.0 * r * r / 3.0) * e;
                // dk/dlog l_i = s (5/3)(1 + sqrt5 r) e^{-sqrt5 r} (delta_i / l_i)^2
                const double radial = hyper.signal_variance * (5.0 / 3.0) * (1.0 + kSqrt5 * r) * e;
                const double wab = 0.5 * w(a, b);
                if (ard)
                    grad->head(d) += (wab * radial) * sq.matrix();
                else
                    (*grad)[0] += wab * radial * sq.sum();
                (*grad)[grad->size() - 1] += wab * kab;
            }
        }
    }
    return lml;
}

Eigen::MatrixXd stack_points(std::span<const UnitPoint> points)
{
    if (points.empty())
        return {};
    Eigen::MatrixXd out(static_cast<Eigen::Index>(points.size()), points.front().size());
    for (std::size_t i = 0; i < points.size(); ++i) {
        if (points[i].size() != out.cols())
            throw Error(ErrorKind::invalid_argument, "points have mixed dimensions");
        out.row(static_cast<Eigen::Index>(i)) = points[i].coords().transpose();
    }
    return out;
}

GpModel GpModel::condition(std::span<const UnitPoint> inputs, std::span<const double> raw_targets,
                           Channel channel, const GpHyperparameters& hyper)
{
    check_training_data(inputs, raw_targets);
    check_hyper(hyper, inputs.front().size());
    GpModel m;
    m.channel_ = channel;
    m.hyper_ = hyper;
    m.inputs_ = stack_points(inputs);
    m.raw_ = Eigen::Map<const Eigen::VectorXd>(raw_targets.data(),
                                               static_cast<Eigen::Index>(raw_targets.size()));
    m.standardize_ = Standardization::for_channel(channel, raw_targets);
    m.targets_ = (m.raw_.array() - m.standardize_.center) / m.standardize_.scale;
    m.build();
    return m;
}

GpModel GpModel::fit(std::span<const UnitPoint> inputs, std::span<const double> raw_targets,
                     Channel channel, std::uint64_t seed, const FitOptions& options)
{
    check_training_data(inputs, raw_targets);
    if (options.restarts == 0 || options.max_iters == 0)
        throw Error(ErrorKind::invalid_argument, "fit needs at least one restart and iteration");

    const Eigen::MatrixXd x = stack_points(inputs);
    const auto d = static_cast<std::size_t>(x.cols());
    const auto standardize = Standardization::for_channel(channel, raw_targets);
    Eigen::VectorXd y(x.rows());
    for (Eigen::Index i = 0; i < x.rows(); ++i)
        y[i] = standardize.apply(raw_targets[static_cast<std::size_t>(i)]);

    const Eigen::Index np = options.ard ? static_cast<Eigen::Index>(d) + 1 : 2;
    Box box{Eigen::VectorXd::Constant(np, std::log(options.min_lengthscale)),
            Eigen::VectorXd::Constant(np, std::log(options.max_lengthscale))};
    box.lo[np - 1] = std::log(options.min_signal_variance);
    box.hi[np - 1] = std::log(options.max_signal_variance);

    std::mt19937_64 rng(mix_seed(seed, 0x6670));
    std::uniform_real_distribution<double> init(std::log(options.init_lengthscale_lo),
                                                std::log(options.init_lengthscale_hi));

    Eigen::VectorXd best_theta;
    double best_lml = -std::numeric_limits<double>::infinity();
    for (std::size_t r = 0; r < options.restarts; ++r) {
        Eigen::VectorXd theta(np);
        for (Eigen::Index i = 0; i + 1 < np; ++i)
            theta[i] = init(rng);
        theta[np - 1] = 0.0;  // signal variance 1
        theta = box.project(theta);
        const double lml = ascend(x, y, options.ard, box, options.max_iters, theta);
        if (lml > best_lml) {
            best_lml = lml;
            best_theta = theta;
        }
    }
    if (!std::isfinite(best_lml))
        throw Error(ErrorKind::numeric, "no restart produced a factorizable kernel matrix");

    return condition(inputs, raw_targets, channel, from_log_params(best_theta, d, options.ard));
}

void GpModel::build()
{
    Eigen::LLT<Eigen::MatrixXd> llt;
    jitter_ = cholesky_with_jitter(noisy_gram(inputs_, hyper_), llt);
    factor_ = llt.matrixL();
    alpha_ = llt.solve(targets_);
    // One round of iterative refinement against the factored system.
    Eigen::MatrixXd k = noisy_gram(inputs_, hyper_);
    k.diagonal().array() += jitter_;
    alpha_ += llt.solve(targets_ - k * alpha_);

    const Eigen::Index n = inputs_.rows();
    MatrixXld kx(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j <= i; ++j)
            kx(i, j) = kx(j, i) = kernel_ext(inputs_.row(i).transpose(), inputs_.row(j).transpose(), hyper_);
    kx.diagonal().array() += static_cast<long double>(hyper_.noise_std) * hyper_.noise_std + jitter_;
    const Eigen::LLT<MatrixXld> llt_ext(kx);
    if (llt_ext.info() == Eigen::Success) {
        factor_ext_ = llt_ext.matrixL();
        alpha_ext_ = llt_ext.solve(targets_.cast<long double>());
    } else {
        factor_ext_.resize(0, 0);
        alpha_ext_.resize(0);
    }

    lml_ = -0.5 * targets_.dot(alpha_) - factor_.diagonal().array().log().sum() -
           0.5 * static_cast<double>(targets_.size()) * std::log(2.0 * std::numbers::pi);
    if (!(solve_residual() < 1e-8))
        throw Error(ErrorKind::numeric, "kernel system solve residual exceeds 1e-8");
}

double GpModel::solve_residual() const
{
    Eigen::MatrixXd k = noisy_gram(inputs_, hyper_);
    k.diagonal().array() += jitter_;
    return (k * alpha_ - targets_).lpNorm<Eigen::Infinity>();
}

PosteriorGaussian GpModel::posterior(const UnitPoint& x) const
{
    return posterior(x.coords());
}

PosteriorGaussian GpModel::posterior(const Eigen::Ref<const Eigen::VectorXd>& x) const
{
    if (x.size() != inputs_.cols())
        throw Error(ErrorKind::invalid_argument, "query point dimension mismatch");
    if (factor_ext_.size() > 0) {
        VectorXld kx(inputs_.rows());
        for (Eigen::Index i = 0; i < inputs_.rows(); ++i)
            kx[i] = kernel_ext(inputs_.row(i).transpose(), x, hyper_);
        const long double mean = kx.dot(alpha_ext_);
        factor_ext_.triangularView<Eigen::Lower>().solveInPlace(kx);
        const long double var = hyper_.signal_variance - kx.squaredNorm();
        return {static_cast<double>(mean), static_cast<double>(std::sqrt(std::max(var, 0.0L)))};
    }
    Eigen::VectorXd kx(inputs_.rows());
    for (Eigen::Index i = 0; i < inputs_.rows(); ++i)
        kx[i] = hyper_.signal_variance *
                matern52_shape(scaled_distance(inputs_.row(i).transpose(), x, hyper_.lengthscales));
    const double mean = kx.dot(alpha_);
    factor_.triangularView<Eigen::Lower>().solveInPlace(kx);
    const double var = hyper_.signal_variance - kx.squaredNorm();
    return {mean, std::sqrt(std::max(var, 0.0))};
}

JointPosterior GpModel::joint_posterior(const Eigen::MatrixXd& xs) const
{
    if (xs.cols() != inputs_.cols())
        throw Error(ErrorKind::invalid_argument, "query point dimension mismatch");
    Eigen::MatrixXd kxs = matern_cross(inputs_, xs, hyper_);
    JointPosterior out;
    out.mean = kxs.transpose() * alpha_;
    factor_.triangularView<Eigen::Lower>().solveInPlace(kxs);
    out.covariance = matern_cross(xs, xs, hyper_);
    out.covariance.noalias() -= kxs.transpose() * kxs;
    return out;
}

Eigen::MatrixXd GpModel::joint_posterior_samples(std::span<const UnitPoint> xs,
                                                 std::size_t n_samples, std::uint64_t seed) const
{
    if (xs.empty())
        throw Error(ErrorKind::invalid_argument, "need at least one query point");
    const JointPosterior post = joint_posterior(stack_points(xs));
    Eigen::LLT<Eigen::MatrixXd> llt;
    cholesky_with_jitter(post.covariance, llt);
    const Eigen::MatrixXd z = normal_base_samples(n_samples, xs.size(), seed);
    Eigen::MatrixXd out = z * llt.matrixL().transpose();
    out.rowwise() += post.mean.transpose();
    return out;
}

PosteriorGaussian GpModel::destandardize(const PosteriorGaussian& g) const noexcept
{
    return {standardize_.invert(g.mean), standardize_.scale * g.std};
}

} // namespace cbo
