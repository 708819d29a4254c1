#pragma once

#include "cbo/evaluators.hpp"
#include "cbo/gp.hpp"
#include "cbo/qmc.hpp"

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string_view>

#include <Eigen/Core>

namespace cbo {

enum class AcquisitionKind { cei, ucb };
enum class BatchMode { joint, sequential };

std::string_view to_string(AcquisitionKind kind);
std::string_view to_string(BatchMode mode);
AcquisitionKind parse_acquisition_kind(std::string_view name);
BatchMode parse_batch_mode(std::string_view name);

struct AcquisitionConfig {
    AcquisitionKind kind = AcquisitionKind::cei;
    double constraint_threshold = 25.0;  // raw constraint units
    std::size_t mc_samples = 1024;
    std::size_t batch_size = 5;
    double ucb_beta = 2.0;
    BatchMode batch_mode = BatchMode::joint;

    void validate() const;
    bool operator==(const AcquisitionConfig&) const = default;
};

struct Incumbent {
    std::size_t index = 0;
    double value = 0.0;  // raw objective units
};

double normal_cdf(double z) noexcept;
double normal_pdf(double z) noexcept;

double expected_improvement(const PosteriorGaussian& g, double best) noexcept;
double probability_feasible(const PosteriorGaussian& g, double threshold) noexcept;
/// PF * EI; `gk` and `best` share units, `gv` and `threshold` share units.
double constrained_ei(const PosteriorGaussian& gk, const PosteriorGaussian& gv, double best,
                      double threshold) noexcept;
double ucb(const PosteriorGaussian& g, double beta) noexcept;

/// Feasible row with maximal k (ties: lowest index); nullopt when nothing is feasible.
/// Throws invalid_state on an empty dataset.
std::optional<Incumbent> incumbent(const Dataset& dataset, double threshold);
/// Same rule applied to the raw training targets of two models fitted on the same inputs.
std::optional<Incumbent> incumbent(const GpModel& model_k, const GpModel& model_v,
                                   double threshold);

struct McEstimate {
    double value = 0.0;
    double std_error = 0.0;
};

/// Monte-Carlo batch acquisition over q joint points with fixed base samples, so the
/// surface is a deterministic function of the batch. Column 2i of the base draws
/// drives the objective at point i and column 2i+1 the constraint; a batch that
/// extends another reuses its draws.
///
/// Values are in standardized objective units:
///  - CEI with incumbent: E[max_i 1(v_i <= t) max(0, k_i - best)]
///  - CEI without incumbent: E[max_i 1(v_i <= t)] (probability some point is feasible)
///  - UCB: E[max_i (mu_i + beta sqrt(pi/2) |k_i - mu_i|)], whose q = 1 value is mu + beta std
class BatchAcquisition {
public:
    BatchAcquisition(const GpModel& model_k, const GpModel& model_v,
                     const AcquisitionConfig& config, std::optional<double> best_raw,
                     std::size_t max_points, std::uint64_t seed,
                     SamplerKind sampler = SamplerKind::sobol);

    /// `batch` is q x d in the unit cube with q <= max_points.
    double operator()(const Eigen::MatrixXd& batch) const { return estimate(batch).value; }
    McEstimate estimate(const Eigen::MatrixXd& batch) const;

    bool feasibility_only() const noexcept { return !best_std_.has_value(); }
    std::size_t max_points() const noexcept { return max_points_; }

private:
    const GpModel* model_k_;
    const GpModel* model_v_;
    AcquisitionKind kind_;
    double threshold_;
    double beta_;
    std::optional<double> best_std_;
    std::size_t max_points_;
    Eigen::MatrixXd base_k_;  // n_samples x max_points
    Eigen::MatrixXd base_v_;
};

/// Monte-Carlo estimate of E[max_i 1(v_i <= threshold) max(0, k_i - best)] at the
/// q points `xs`, objective improvement in standardized units; `best` in raw objective
/// units, `threshold` in raw constraint units.
McEstimate qcei_mc(const GpModel& model_k, const GpModel& model_v, std::span<const UnitPoint> xs,
                   double best, double threshold, std::size_t n_samples, std::uint64_t seed,
                   SamplerKind sampler = SamplerKind::sobol);

/// Closed-form CEI at x with the same unit conventions as `qcei_mc`.
double constrained_ei_at(const GpModel& model_k, const GpModel& model_v, const UnitPoint& x,
                         double best, double threshold);

} // namespace cbo
