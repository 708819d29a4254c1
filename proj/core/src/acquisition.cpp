#include "cbo/acquisition.hpp"

#include "cbo/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace cbo {

std::string_view to_string(AcquisitionKind kind)
{
    return kind == AcquisitionKind::cei ? "cei" : "ucb";
}

std::string_view to_string(BatchMode mode)
{
    return mode == BatchMode::joint ? "joint" : "sequential";
}

AcquisitionKind parse_acquisition_kind(std::string_view name)
{
    if (name == "cei")
        return AcquisitionKind::cei;
    if (name == "ucb")
        return AcquisitionKind::ucb;
    throw Error(ErrorKind::invalid_argument, "unknown acquisition kind '" + std::string(name) + "'");
}

BatchMode parse_batch_mode(std::string_view name)
{
    if (name == "joint")
        return BatchMode::joint;
    if (name == "sequential")
        return BatchMode::sequential;
    throw Error(ErrorKind::invalid_argument, "unknown batch mode '" + std::string(name) + "'");
}

void AcquisitionConfig::validate() const
{
    if (mc_samples < 1)
        throw Error(ErrorKind::invalid_argument, "mc_samples must be >= 1");
    if (batch_size < 1)
        throw Error(ErrorKind::invalid_argument, "batch size q must be >= 1");
    if (!std::isfinite(constraint_threshold))
        throw Error(ErrorKind::invalid_argument, "constraint threshold must be finite");
    if (!(ucb_beta >= 0.0) || !std::isfinite(ucb_beta))
        throw Error(ErrorKind::invalid_argument, "ucb_beta must be finite and >= 0");
}

double normal_cdf(double z) noexcept
{
    return 0.5 * std::erfc(-z / std::numbers::sqrt2);
}

double normal_pdf(double z) noexcept
{
    return std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi);
}

double expected_improvement(const PosteriorGaussian& g, double best) noexcept
{
    const double delta = g.mean - best;
    if (!(g.std > 0.0))
        return std::max(0.0, delta);
    const double z = delta / g.std;
    return std::max(0.0, delta * normal_cdf(z) + g.std * normal_pdf(z));
}

double probability_feasible(const PosteriorGaussian& g, double threshold) noexcept
{
    if (!(g.std > 0.0))
        return g.mean <= threshold ? 1.0 : 0.0;
    return normal_cdf((threshold - g.mean) / g.std);
}

double constrained_ei(const PosteriorGaussian& gk, const PosteriorGaussian& gv, double best,
                      double threshold) noexcept
{
    return probability_feasible(gv, threshold) * expected_improvement(gk, best);
}

double ucb(const PosteriorGaussian& g, double beta) noexcept
{
    return g.mean + beta * g.std;
}

namespace {

std::optional<Incumbent> feasible_argmax(std::span<const double> k, std::span<const double> v,
                                         double threshold)
{
    std::optional<Incumbent> best;
    for (std::size_t i = 0; i < k.size(); ++i)
        if (v[i] <= threshold && (!best || k[i] > best->value))
            best = Incumbent{i, k[i]};
    return best;
}

} // namespace

std::optional<Incumbent> incumbent(const Dataset& dataset, double threshold)
{
    if (dataset.empty())
        throw Error(ErrorKind::invalid_state, "incumbent of an empty dataset");
    const auto k = dataset.objective_values();
    const auto v = dataset.constraint_values();
    return feasible_argmax(k, v, threshold);
}

std::optional<Incumbent> incumbent(const GpModel& model_k, const GpModel& model_v,
                                   double threshold)
{
    const auto& k = model_k.raw_targets();
    const auto& v = model_v.raw_targets();
    if (k.size() != v.size())
        throw Error(ErrorKind::invalid_argument, "objective and constraint models differ in size");
    if (k.size() == 0)
        throw Error(ErrorKind::invalid_state, "incumbent of an empty dataset");
    return feasible_argmax({k.data(), static_cast<std::size_t>(k.size())},
                           {v.data(), static_cast<std::size_t>(v.size())}, threshold);
}

BatchAcquisition::BatchAcquisition(const GpModel& model_k, const GpModel& model_v,
                                   const AcquisitionConfig& config,
                                   std::optional<double> best_raw, std::size_t max_points,
                                   std::uint64_t seed, SamplerKind sampler)
    : model_k_(&model_k),
      model_v_(&model_v),
      kind_(config.kind),
      threshold_(config.constraint_threshold),
      beta_(config.ucb_beta),
      max_points_(max_points)
{
    config.validate();
    if (max_points == 0)
        throw Error(ErrorKind::invalid_argument, "batch acquisition needs at least one point");
    if (model_k.dim() != model_v.dim())
        throw Error(ErrorKind::invalid_argument, "objective and constraint models differ in dimension");
    if (best_raw)
        best_std_ = model_k.standardization().apply(*best_raw);
    const Eigen::MatrixXd base = normal_base_samples(config.mc_samples, 2 * max_points, seed, sampler);
    base_k_.resize(base.rows(), static_cast<Eigen::Index>(max_points));
    base_v_.resize(base.rows(), static_cast<Eigen::Index>(max_points));
    for (Eigen::Index i = 0; i < static_cast<Eigen::Index>(max_points); ++i) {
        base_k_.col(i) = base.col(2 * i);
        base_v_.col(i) = base.col(2 * i + 1);
    }
}

McEstimate BatchAcquisition::estimate(const Eigen::MatrixXd& batch) const
{
    const Eigen::Index q = batch.rows();
    if (q == 0 || static_cast<std::size_t>(q) > max_points_)
        throw Error(ErrorKind::invalid_argument, "batch size outside [1, max_points]");

    const JointPosterior pk = model_k_->joint_posterior(batch);
    Eigen::LLT<Eigen::MatrixXd> llt_k;
    cholesky_with_jitter(pk.covariance, llt_k);
    const Eigen::MatrixXd lk = llt_k.matrixL();

    const Eigen::Index n = base_k_.rows();
    const Eigen::MatrixXd k_samples = base_k_.leftCols(q) * lk.transpose();

    double sum = 0.0, sum_sq = 0.0;
    if (kind_ == AcquisitionKind::ucb) {
        const double weight = beta_ * std::sqrt(std::numbers::pi / 2.0);
        for (Eigen::Index s = 0; s < n; ++s) {
            double best = -std::numeric_limits<double>::infinity();
            for (Eigen::Index i = 0; i < q; ++i)
                best = std::max(best, pk.mean[i] + weight * std::abs(k_samples(s, i)));
            sum += best;
            sum_sq += best * best;
        }
    } else {
        const JointPosterior pv = model_v_->joint_posterior(batch);
        Eigen::LLT<Eigen::MatrixXd> llt_v;
        cholesky_with_jitter(pv.covariance, llt_v);
        const Eigen::MatrixXd lv = llt_v.matrixL();
        const Eigen::MatrixXd v_samples = base_v_.leftCols(q) * lv.transpose();
        const auto& sv = model_v_->standardization();
        // v_raw <= t  <=>  v_std <= (t - center) / scale
        const double v_limit = sv.apply(threshold_);
        for (Eigen::Index s = 0; s < n; ++s) {
            double best = 0.0;
            for (Eigen::Index i = 0; i < q; ++i) {
                if (pv.mean[i] + v_samples(s, i) > v_limit)
                    continue;
                if (best_std_) {
                    best = std::max(best, pk.mean[i] + k_samples(s, i) - *best_std_);
                } else {
                    best = 1.0;
                    break;
                }
            }
            sum += best;
            sum_sq += best * best;
        }
    }

    const double dn = static_cast<double>(n);
    const double mean = sum / dn;
    const double var = n > 1 ? std::max(0.0, (sum_sq - dn * mean * mean) / (dn - 1.0)) : 0.0;
    return {mean, std::sqrt(var / dn)};
}

McEstimate qcei_mc(const GpModel& model_k, const GpModel& model_v, std::span<const UnitPoint> xs,
                   double best, double threshold, std::size_t n_samples, std::uint64_t seed,
                   SamplerKind sampler)
{
    if (xs.empty())
        throw Error(ErrorKind::invalid_argument, "qcei_mc needs at least one point");
    AcquisitionConfig config;
    config.kind = AcquisitionKind::cei;
    config.constraint_threshold = threshold;
    config.mc_samples = n_samples;
    config.batch_size = xs.size();
    const BatchAcquisition acq(model_k, model_v, config, best, xs.size(), seed, sampler);
    return acq.estimate(stack_points(xs));
}

double constrained_ei_at(const GpModel& model_k, const GpModel& model_v, const UnitPoint& x,
                         double best, double threshold)
{
    const PosteriorGaussian gk = model_k.posterior(x);
    const PosteriorGaussian gv = model_v.destandardize(model_v.posterior(x));
    return constrained_ei(gk, gv, model_k.standardization().apply(best), threshold);
}

} // namespace cbo
