#pragma once

#include "cbo/acquisition.hpp"
#include "cbo/gp.hpp"
#include "cbo/qmc.hpp"

#include <cstddef>
#include <cstdint>
#include <functional>
#include <vector>

#include <Eigen/Core>

namespace cbo {

struct OptimizerBudget {
    std::size_t raw_samples = 256;
    std::size_t restarts = 10;
    std::size_t max_iters_per_restart = 200;
    double convergence_tol = 1e-6;
    SamplerKind raw_sampler = SamplerKind::sobol;

    void validate() const;
    bool operator==(const OptimizerBudget&) const = default;
};

/// Objective over a q x d batch in the unit cube.
using BatchObjective = std::function<double(const Eigen::MatrixXd&)>;

struct BatchSearchResult {
    Eigen::MatrixXd batch;  // q x d
    double value = 0.0;
    double best_raw_value = 0.0;
    std::size_t evaluations = 0;
};

/// Maximizes `objective` jointly over q x d coordinates in [0,1]:
/// scores `raw_samples` quasi-random batches, refines the top `restarts` by
/// compass search with a halving step, and returns the best refined batch
/// (ties: lowest restart index). Rows of `fixed_prefix` are held constant and
/// prepended to every evaluated batch.
BatchSearchResult maximize_batch(const BatchObjective& objective, std::size_t q, std::size_t d,
                                 const OptimizerBudget& budget, std::uint64_t seed,
                                 const Eigen::MatrixXd& fixed_prefix = {});

struct ProposedBatch {
    std::vector<UnitPoint> points;
    double value = 0.0;           // acquisition value of the batch (standardized units)
    double best_raw_value = 0.0;  // best raw-sample value before refinement
    bool feasibility_only = false;  // true when no feasible incumbent existed
};

/// Proposes config.batch_size candidates. The incumbent is the feasible best among
/// the training targets of the two models; without one, only the probability that
/// some batch point is feasible is maximized.
ProposedBatch propose_batch(const GpModel& model_k, const GpModel& model_v,
                            const AcquisitionConfig& config, const OptimizerBudget& budget,
                            std::uint64_t seed);

} // namespace cbo
