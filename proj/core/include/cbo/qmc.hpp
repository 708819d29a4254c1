#pragma once

#include <cstddef>
#include <cstdint>

#include <Eigen/Core>

namespace cbo {

/// splitmix64 finalizer over (a, b); used to derive independent stream seeds.
std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b) noexcept;

enum class SamplerKind { sobol, uniform };

/// n x dim matrix of points in (0,1). Sobol points are randomized with a
/// per-dimension digital shift drawn from `seed`; column j only depends on
/// (seed, j), so a prefix of columns is stable when `dim` grows.
Eigen::MatrixXd uniform_points(std::size_t n, std::size_t dim, std::uint64_t seed,
                               SamplerKind kind = SamplerKind::sobol);

/// Standard-normal base draws: the inverse normal CDF applied to `uniform_points`.
Eigen::MatrixXd normal_base_samples(std::size_t n, std::size_t dim, std::uint64_t seed,
                                    SamplerKind kind = SamplerKind::sobol);

} // namespace cbo
