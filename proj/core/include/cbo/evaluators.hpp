#pragma once

#include "cbo/param_space.hpp"

#include <cstddef>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

namespace cbo {

/// One evaluated design: physical input, objective k, constraint |v|.
struct Observation {
    Eigen::VectorXd x;
    double k = 0.0;
    double v = 0.0;
    std::string tag;  // provenance: "doe", "bo_iter_<n>" or "manual"

    bool operator==(const Observation& o) const
    {
        return x.size() == o.x.size() && x == o.x && k == o.k && v == o.v && tag == o.tag;
    }
};

std::string iteration_tag(std::size_t iteration);

/// Ordered observations. Rejects inputs that duplicate an existing row
/// (unit-cube distance below kDuplicateTolerance).
class Dataset {
public:
    Dataset() = default;

    void append(const ParameterSpace& space, Observation obs);
    bool contains_close(const ParameterSpace& space, const UnitPoint& u) const;

    const std::vector<Observation>& rows() const noexcept { return rows_; }
    std::size_t size() const noexcept { return rows_.size(); }
    bool empty() const noexcept { return rows_.empty(); }
    const Observation& operator[](std::size_t i) const { return rows_[i]; }

    std::vector<UnitPoint> unit_inputs(const ParameterSpace& space) const;
    std::vector<double> objective_values() const;
    std::vector<double> constraint_values() const;

    bool operator==(const Dataset&) const = default;

private:
    std::vector<Observation> rows_;
};

struct Evaluation {
    double k = 0.0;
    double v = 0.0;
};

using EvaluatorFn = std::function<Evaluation(const Eigen::VectorXd&)>;

/// Analytic stand-in for the prechamber CFD response on `prechamber_space()`.
/// With u the unit-cube image of x:
///   k = 60 + 220 exp(-(u2-0.33)^2/0.08) (0.4 + 0.6 u1 u3)
///   v = 12 +  18 exp(-(u2-0.25)^2/0.10) (0.5 + 0.5 u1)
Evaluation proxy_prechamber(const Eigen::VectorXd& x);

/// k = -(x1-0.7)^2 - (x2-0.7)^2, v = x1 + x2 on [0,1]^2; feasible when v <= 1.
Evaluation benchmark_quadratic(const Eigen::VectorXd& x);

enum class BuiltinEvaluator { proxy, quadratic };

std::string_view to_string(BuiltinEvaluator e);
BuiltinEvaluator parse_evaluator(std::string_view name);

EvaluatorFn make_evaluator(BuiltinEvaluator e);
ParameterSpace default_space(BuiltinEvaluator e);
double default_threshold(BuiltinEvaluator e);

// Ask-tell CSV protocol.

std::string proposal_id(std::size_t iteration, std::size_t j);
std::filesystem::path proposals_file(const std::filesystem::path& dir, std::size_t iteration);

struct ProposalRow {
    std::string id;
    Eigen::VectorXd x;
};

/// Writes `proposals_iter<N>.csv` (header `id,<dim names>`, ids `iter<N>_<j>`,
/// 17 significant digits) into `dir` and returns its path.
std::filesystem::path write_proposals(const std::filesystem::path& dir,
                                      const ParameterSpace& space,
                                      std::span<const Eigen::VectorXd> batch,
                                      std::size_t iteration);

std::vector<ProposalRow> read_proposals(const std::filesystem::path& path,
                                        const ParameterSpace& space);

struct ResultRow {
    std::string id;
    double k = 0.0;
    double v = 0.0;
};

/// Parses `id,k,v_mag`. The id set must equal `outstanding` exactly.
std::vector<ResultRow> read_results(const std::filesystem::path& path,
                                    std::span<const std::string> outstanding);

void write_results(const std::filesystem::path& path, std::span<const ResultRow> rows);

/// 17-significant-digit decimal text.
std::string format_full(double value);

} // namespace cbo
