#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace cbo {

struct Dimension {
    std::string name;
    double lower = 0.0;
    double upper = 1.0;

    bool operator==(const Dimension&) const = default;
};

/// A point of the closed unit cube [0,1]^d. Construction validates every coordinate.
class UnitPoint {
public:
    UnitPoint() = default;
    explicit UnitPoint(Eigen::VectorXd coords);

    const Eigen::VectorXd& coords() const noexcept { return coords_; }
    Eigen::Index size() const noexcept { return coords_.size(); }
    double operator[](Eigen::Index i) const { return coords_[i]; }

    bool operator==(const UnitPoint& other) const
    {
        return coords_.size() == other.coords_.size() && coords_ == other.coords_;
    }

private:
    Eigen::VectorXd coords_;
};

/// Design space: ordered, named dimensions with closed physical bounds.
/// Owns the affine map between physical coordinates and the unit cube.
class ParameterSpace {
public:
    ParameterSpace() = default;
    explicit ParameterSpace(std::vector<Dimension> dims);

    const std::vector<Dimension>& dims() const noexcept { return dims_; }
    std::size_t size() const noexcept { return dims_.size(); }
    std::vector<std::string> names() const;

    /// Throws bounds_violation naming the offending dimension.
    UnitPoint to_unit(const Eigen::VectorXd& physical) const;
    Eigen::VectorXd from_unit(const UnitPoint& u) const;

    bool contains(const Eigen::VectorXd& physical) const;

    bool operator==(const ParameterSpace&) const = default;

private:
    std::vector<Dimension> dims_;
};

/// d_bottle in [8,12], d_bore in [0.75,1.15], h_neck in [15,20] (millimetres).
ParameterSpace prechamber_space();

enum class LhsPlacement { random, midpoint };

/// Permutation-based Latin hypercube in [0,1)^d: along every axis each of the
/// n equal-width strata holds exactly one point. Pure function of its arguments.
std::vector<UnitPoint> latin_hypercube(const ParameterSpace& space, std::size_t n,
                                       std::uint64_t seed,
                                       LhsPlacement placement = LhsPlacement::random);

/// Unit-cube Euclidean distance below which two inputs count as duplicates.
inline constexpr double kDuplicateTolerance = 1e-10;

} // namespace cbo
