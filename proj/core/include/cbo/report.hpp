#pragma once

#include "cbo/campaign.hpp"

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace cbo {

enum class TraceView { cumulative, per_batch };

struct TableRow {
    std::string stage;
    std::optional<Observation> best;  // empty when nothing feasible at that stage
};

/// One row per stage (DoE, It1, ...): feasible-best k, |v| and the design.
struct ResultTable {
    TraceView view = TraceView::cumulative;
    std::vector<std::string> dims;
    std::vector<TableRow> rows;
};

ResultTable emit_table(const CampaignState& state, TraceView view = TraceView::cumulative);

/// `stage,k,v_mag,<dims>` at full precision.
std::string table_csv(const ResultTable& table);
/// Aligned text with two decimals.
std::string table_text(const ResultTable& table);

inline constexpr std::size_t kDefaultSliceResolution = 101;

struct SliceGrid {
    std::string dim;
    std::string quantity;  // "mean" or "std"
    std::vector<double> coords;  // physical units
    std::vector<double> values;  // raw objective units
};

/// Surrogate of k swept along each axis through the incumbent x*.
struct SliceReport {
    std::vector<SliceGrid> grids;  // 2 per dimension: mean then std
    Eigen::VectorXd incumbent_x;
    Observation incumbent;
    PosteriorGaussian at_incumbent;  // raw units
    double prior_std = 0.0;          // raw units
    GpHyperparameters hyper;
};

/// Refits the objective GP on the full dataset and sweeps every dimension over
/// `resolution` equispaced points. Throws invalid_state without a feasible incumbent.
SliceReport emit_slices(const CampaignState& state, std::size_t resolution = kDefaultSliceResolution);

/// The model used by `emit_slices` (deterministic in the state).
GpModel slice_model(const CampaignState& state);

/// Writes slice_<dim>_mean.csv, slice_<dim>_std.csv and slice_markers.csv.
std::vector<std::filesystem::path> write_slices(const SliceReport& report,
                                                const CampaignState& state,
                                                const std::filesystem::path& dir);

} // namespace cbo
