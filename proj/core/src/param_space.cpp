#include "cbo/param_space.hpp"

#include "cbo/errors.hpp"
#include "cbo/qmc.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <set>

namespace cbo {

UnitPoint::UnitPoint(Eigen::VectorXd coords) : coords_(std::move(coords))
{
    for (Eigen::Index i = 0; i < coords_.size(); ++i) {
        const double c = coords_[i];
        if (!(c >= 0.0 && c <= 1.0))
            throw Error(ErrorKind::bounds_violation,
                        "unit coordinate " + std::to_string(i) + " = " + std::to_string(c) +
                            " outside [0,1]");
    }
}

ParameterSpace::ParameterSpace(std::vector<Dimension> dims) : dims_(std::move(dims))
{
    if (dims_.empty())
        throw Error(ErrorKind::invalid_argument, "parameter space needs at least one dimension");
    std::set<std::string> seen;
    for (const auto& d : dims_) {
        if (d.name.empty())
            throw Error(ErrorKind::invalid_argument, "dimension names must be non-empty");
        if (!seen.insert(d.name).second)
            throw Error(ErrorKind::invalid_argument, "duplicate dimension name '" + d.name + "'");
        if (!std::isfinite(d.lower) || !std::isfinite(d.upper) || !(d.upper > d.lower))
            throw Error(ErrorKind::invalid_argument,
                        "dimension '" + d.name + "' needs finite bounds with upper > lower");
    }
}

std::vector<std::string> ParameterSpace::names() const
{
    std::vector<std::string> out;
    out.reserve(dims_.size());
    for (const auto& d : dims_)
        out.push_back(d.name);
    return out;
}

bool ParameterSpace::contains(const Eigen::VectorXd& physical) const
{
    if (static_cast<std::size_t>(physical.size()) != dims_.size())
        return false;
    for (std::size_t i = 0; i < dims_.size(); ++i) {
        const double x = physical[static_cast<Eigen::Index>(i)];
        if (!(x >= dims_[i].lower && x <= dims_[i].upper))
            return false;
    }
    return true;
}

UnitPoint ParameterSpace::to_unit(const Eigen::VectorXd& physical) const
{
    if (static_cast<std::size_t>(physical.size()) != dims_.size())
        throw Error(ErrorKind::invalid_argument,
                    "point has " + std::to_string(physical.size()) + " coordinates, space has " +
                        std::to_string(dims_.size()));
    Eigen::VectorXd u(physical.size());
    for (std::size_t i = 0; i < dims_.size(); ++i) {
        const auto& d = dims_[i];
        const double x = physical[static_cast<Eigen::Index>(i)];
        if (!(x >= d.lower && x <= d.upper))
            throw Error(ErrorKind::bounds_violation,
                        "dimension '" + d.name + "' value " + std::to_string(x) + " outside [" +
                            std::to_string(d.lower) + ", " + std::to_string(d.upper) + "]");
        // x - lower <= upper - lower under monotone rounding, so the ratio stays in [0,1].
        u[static_cast<Eigen::Index>(i)] = (x - d.lower) / (d.upper - d.lower);
    }
    return UnitPoint(std::move(u));
}

Eigen::VectorXd ParameterSpace::from_unit(const UnitPoint& u) const
{
    if (static_cast<std::size_t>(u.size()) != dims_.size())
        throw Error(ErrorKind::invalid_argument, "unit point dimension mismatch");
    Eigen::VectorXd x(u.size());
    for (std::size_t i = 0; i < dims_.size(); ++i) {
        const auto& d = dims_[i];
        const double v = d.lower + u[static_cast<Eigen::Index>(i)] * (d.upper - d.lower);
        x[static_cast<Eigen::Index>(i)] = std::clamp(v, d.lower, d.upper);
    }
    return x;
}

ParameterSpace prechamber_space()
{
    return ParameterSpace({{"d_bottle", 8.0, 12.0}, {"d_bore", 0.75, 1.15}, {"h_neck", 15.0, 20.0}});
}

std::vector<UnitPoint> latin_hypercube(const ParameterSpace& space, std::size_t n,
                                       std::uint64_t seed, LhsPlacement placement)
{
    if (n == 0)
        throw Error(ErrorKind::invalid_argument, "latin hypercube needs n >= 1");
    const std::size_t d = space.size();
    Eigen::MatrixXd coords(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));

    std::mt19937_64 rng(mix_seed(seed, 0x6c6873));
    std::uniform_real_distribution<double> jitter(0.0, 1.0);
    std::vector<std::size_t> strata(n);
    for (std::size_t j = 0; j < d; ++j) {
        std::iota(strata.begin(), strata.end(), std::size_t{0});
        std::shuffle(strata.begin(), strata.end(), rng);
        for (std::size_t i = 0; i < n; ++i) {
            const double offset = placement == LhsPlacement::midpoint ? 0.5 : jitter(rng);
            const auto stratum = static_cast<double>(strata[i]);
            double u = (stratum + offset) / static_cast<double>(n);
            // Nudge so floor(u * n) names the intended stratum despite rounding.
            while (std::floor(u * static_cast<double>(n)) > stratum)
                u = std::nextafter(u, 0.0);
            while (std::floor(u * static_cast<double>(n)) < stratum)
                u = std::nextafter(u, 1.0);
            coords(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = u;
        }
    }

    std::vector<UnitPoint> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i)
        out.emplace_back(coords.row(static_cast<Eigen::Index>(i)).transpose());
    return out;
}

} // namespace cbo
