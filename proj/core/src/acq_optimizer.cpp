#include "cbo/acq_optimizer.hpp"

#include "cbo/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace cbo {

namespace {

constexpr double kInitialStep = 0.1;
constexpr double kMinStep = 1e-6;

Eigen::MatrixXd to_batch(const Eigen::VectorXd& z, std::size_t q, std::size_t d,
                         const Eigen::MatrixXd& prefix)
{
    const auto p = prefix.rows();
    Eigen::MatrixXd out(p + static_cast<Eigen::Index>(q), static_cast<Eigen::Index>(d));
    if (p > 0)
        out.topRows(p) = prefix;
    for (std::size_t i = 0; i < q; ++i)
        out.row(p + static_cast<Eigen::Index>(i)) =
            z.segment(static_cast<Eigen::Index>(i * d), static_cast<Eigen::Index>(d)).transpose();
    return out;
}

struct Refined {
    Eigen::VectorXd z;
    double value;
};

// Compass search: poll +-step along each coordinate, take the first improving move,
// halve the step after a sweep without improvement.
Refined compass_search(const BatchObjective& objective, Eigen::VectorXd z, double value,
                       std::size_t q, std::size_t d, const OptimizerBudget& budget,
                       const Eigen::MatrixXd& prefix, std::size_t& evaluations)
{
    double step = kInitialStep;
    for (std::size_t it = 0; it < budget.max_iters_per_restart && step >= kMinStep; ++it) {
        bool improved = false;
        for (Eigen::Index c = 0; c < z.size(); ++c) {
            for (const double sign : {1.0, -1.0}) {
                const double original = z[c];
                const double moved = std::clamp(original + sign * step, 0.0, 1.0);
                if (moved == original)
                    continue;
                z[c] = moved;
                const double trial = objective(to_batch(z, q, d, prefix));
                ++evaluations;
                if (trial > value + budget.convergence_tol * std::abs(value)) {
                    value = trial;
                    improved = true;
                    break;
                }
                z[c] = original;
            }
        }
        if (!improved)
            step *= 0.5;
    }
    return {std::move(z), value};
}

} // namespace

void OptimizerBudget::validate() const
{
    if (raw_samples < 1 || restarts < 1 || max_iters_per_restart < 1)
        throw Error(ErrorKind::invalid_argument, "optimizer budget counts must be >= 1");
    if (!(convergence_tol > 0.0))
        throw Error(ErrorKind::invalid_argument, "optimizer convergence tolerance must be > 0");
}

BatchSearchResult maximize_batch(const BatchObjective& objective, std::size_t q, std::size_t d,
                                 const OptimizerBudget& budget, std::uint64_t seed,
                                 const Eigen::MatrixXd& fixed_prefix)
{
    budget.validate();
    if (q == 0 || d == 0)
        throw Error(ErrorKind::invalid_argument, "batch search needs q >= 1 and d >= 1");
    if (fixed_prefix.size() > 0 && fixed_prefix.cols() != static_cast<Eigen::Index>(d))
        throw Error(ErrorKind::invalid_argument, "fixed prefix has wrong dimension");

    const Eigen::MatrixXd raw =
        uniform_points(budget.raw_samples, q * d, mix_seed(seed, 0x726177), budget.raw_sampler);

    BatchSearchResult result;
    std::vector<double> values(budget.raw_samples);
    for (std::size_t r = 0; r < budget.raw_samples; ++r)
        values[r] = objective(
            to_batch(raw.row(static_cast<Eigen::Index>(r)).transpose(), q, d, fixed_prefix));
    result.evaluations = budget.raw_samples;

    std::vector<std::size_t> order(budget.raw_samples);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return values[a] > values[b]; });
    result.best_raw_value = values[order.front()];

    const std::size_t starts = std::min(budget.restarts, budget.raw_samples);
    Eigen::VectorXd best_z;
    double best_value = -std::numeric_limits<double>::infinity();
    for (std::size_t r = 0; r < starts; ++r) {
        const std::size_t idx = order[r];
        Refined refined = compass_search(objective, raw.row(static_cast<Eigen::Index>(idx)).transpose(),
                                         values[idx], q, d, budget, fixed_prefix,
                                         result.evaluations);
        if (refined.value > best_value) {
            best_value = refined.value;
            best_z = std::move(refined.z);
        }
    }

    result.value = best_value;
    result.batch = to_batch(best_z, q, d, Eigen::MatrixXd{});
    return result;
}

ProposedBatch propose_batch(const GpModel& model_k, const GpModel& model_v,
                            const AcquisitionConfig& config, const OptimizerBudget& budget,
                            std::uint64_t seed)
{
    config.validate();
    budget.validate();
    const auto inc = incumbent(model_k, model_v, config.constraint_threshold);
    const std::optional<double> best = inc ? std::optional<double>(inc->value) : std::nullopt;
    const std::size_t q = config.batch_size;
    const std::size_t d = model_k.dim();

    const BatchAcquisition acquisition(model_k, model_v, config, best, q,
                                       mix_seed(seed, 0x6d63), budget.raw_sampler);
    const BatchObjective objective = [&](const Eigen::MatrixXd& b) { return acquisition(b); };

    ProposedBatch out;
    out.feasibility_only = config.kind == AcquisitionKind::cei && !best;

    Eigen::MatrixXd chosen;
    if (config.batch_mode == BatchMode::joint) {
        const auto res = maximize_batch(objective, q, d, budget, mix_seed(seed, 0x6f7074));
        chosen = res.batch;
        out.value = res.value;
        out.best_raw_value = res.best_raw_value;
    } else {
        chosen.resize(0, static_cast<Eigen::Index>(d));
        for (std::size_t j = 0; j < q; ++j) {
            const auto res =
                maximize_batch(objective, 1, d, budget, mix_seed(seed, 0x736571 + j), chosen);
            chosen.conservativeResize(chosen.rows() + 1, Eigen::NoChange);
            chosen.row(chosen.rows() - 1) = res.batch.row(0);
            out.value = res.value;
            out.best_raw_value = res.best_raw_value;
        }
    }

    for (Eigen::Index i = 0; i < chosen.rows(); ++i)
        out.points.emplace_back(chosen.row(i).transpose().cwiseMax(0.0).cwiseMin(1.0));
    return out;
}

} // namespace cbo
