#pragma once

#include "cbo/acq_optimizer.hpp"
#include "cbo/acquisition.hpp"
#include "cbo/evaluators.hpp"
#include "cbo/gp.hpp"
#include "cbo/param_space.hpp"

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace cbo {

inline constexpr int kStateVersion = 1;

/// Everything needed to start a campaign; mirrors the JSON config file.
struct CampaignConfig {
    ParameterSpace space = prechamber_space();
    AcquisitionConfig acq;
    OptimizerBudget budget;
    std::size_t doe_n = 10;
    std::uint64_t seed = 0;
    LhsPlacement lhs = LhsPlacement::random;
    bool ard = true;
    std::size_t fit_restarts = 8;
    std::optional<BuiltinEvaluator> evaluator;  // embedded mode when set

    void validate() const;
};

struct PendingProposal {
    std::string id;
    UnitPoint u;

    bool operator==(const PendingProposal&) const = default;
};

/// Diagnostics recorded by every completed `step`.
struct IterationRecord {
    std::size_t iteration = 0;
    double acquisition_value = 0.0;
    double best_raw_value = 0.0;
    bool feasibility_only = false;
    std::size_t replaced_duplicates = 0;

    bool operator==(const IterationRecord&) const = default;
};

struct CampaignState {
    ParameterSpace space;
    AcquisitionConfig acq;
    OptimizerBudget budget;
    LhsPlacement lhs = LhsPlacement::random;
    bool ard = true;
    std::size_t fit_restarts = 8;
    std::size_t doe_n = 0;
    std::uint64_t rng_seed = 0;
    std::optional<BuiltinEvaluator> evaluator;

    std::size_t iteration = 0;  // completed BO iterations
    Dataset dataset;
    std::vector<PendingProposal> pending;
    std::size_t pending_stage = 0;  // 0 = DOE, otherwise the iteration being proposed

    std::optional<GpHyperparameters> hyper_k;
    std::optional<GpHyperparameters> hyper_v;
    double kernel_nu = kMaternNu;
    std::vector<IterationRecord> history;

    bool awaiting_results() const noexcept { return !pending.empty(); }
    FitOptions fit_options() const;

    bool operator==(const CampaignState&) const = default;
};

/// Per-iteration seed; straight-through and resumed runs derive the same value.
std::uint64_t iteration_seed(std::uint64_t rng_seed, std::size_t iteration) noexcept;

/// Creates the DOE. With an evaluator the design is evaluated immediately;
/// otherwise it becomes pending proposals with ids iter0_<j>.
CampaignState init_campaign(const CampaignConfig& config, const EvaluatorFn* evaluator = nullptr);

/// One BO iteration: fit both GPs, propose q candidates, then either evaluate
/// them (evaluator given) or leave them pending. Throws invalid_state while
/// results are outstanding.
CampaignState step(const CampaignState& state, const EvaluatorFn* evaluator = nullptr);

/// Appends results for every pending proposal and clears them. The id set must
/// match exactly; the input state is never modified.
CampaignState ingest(const CampaignState& state, std::span<const ResultRow> results);
CampaignState ingest_file(const CampaignState& state, const std::filesystem::path& results_csv);

/// Runs `iterations` embedded steps, checking that the cumulative feasible
/// best never decreases.
CampaignState run_embedded(CampaignState state, const EvaluatorFn& evaluator,
                           std::size_t iterations);

struct FittedModels {
    GpModel k;
    GpModel v;
};

/// Fits objective and constraint GPs on the current dataset.
FittedModels fit_models(const CampaignState& state, std::uint64_t seed);

struct StageBest {
    std::string stage;               // "DoE", "It1", ...
    std::optional<std::size_t> row;  // dataset index of the feasible best, if any
};

struct ProgressTrace {
    std::vector<StageBest> cumulative;  // best over all rows up to the stage
    std::vector<StageBest> per_batch;   // best over the rows added in the stage
    std::optional<std::size_t> best_row;
};

ProgressTrace best_so_far(const CampaignState& state);

std::string stage_label(std::size_t stage);

CampaignConfig config_from_json(const std::string& text);
CampaignConfig load_config(const std::filesystem::path& path);
std::string config_to_json(const CampaignConfig& config);

std::string state_to_json(const CampaignState& state);
CampaignState state_from_json(const std::string& text);

/// Atomic write (temp file + rename).
void save_state(const CampaignState& state, const std::filesystem::path& path);
CampaignState load_state(const std::filesystem::path& path);

/// Writes the pending proposals as proposals_iter<stage>.csv in `dir`.
std::filesystem::path write_pending(const CampaignState& state, const std::filesystem::path& dir);

} // namespace cbo
