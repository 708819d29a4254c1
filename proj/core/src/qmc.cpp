#include "cbo/qmc.hpp"

#include "cbo/errors.hpp"

#include <boost/math/distributions/normal.hpp>
#include <boost/random/sobol.hpp>

#include <random>

namespace cbo {

std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b) noexcept
{
    std::uint64_t z = a + 0x9e3779b97f4a7c15ULL * (b + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

namespace {

// 53 high bits mapped to the open interval (0,1).
double to_open_unit(std::uint64_t bits) noexcept
{
    return (static_cast<double>(bits >> 11) + 0.5) * 0x1.0p-53;
}

} // namespace

Eigen::MatrixXd uniform_points(std::size_t n, std::size_t dim, std::uint64_t seed,
                               SamplerKind kind)
{
    if (dim == 0)
        throw Error(ErrorKind::invalid_argument, "sampler dimension must be positive");
    Eigen::MatrixXd out(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(dim));
    if (n == 0)
        return out;

    if (kind == SamplerKind::uniform) {
        for (std::size_t j = 0; j < dim; ++j) {
            std::mt19937_64 rng(mix_seed(seed, j));
            for (std::size_t i = 0; i < n; ++i)
                out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
                    to_open_unit(rng());
        }
        return out;
    }

    std::vector<std::uint64_t> shift(dim);
    for (std::size_t j = 0; j < dim; ++j)
        shift[j] = mix_seed(seed, j);

    boost::random::sobol engine(dim);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < dim; ++j)
            out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
                to_open_unit(engine() ^ shift[j]);
    return out;
}

Eigen::MatrixXd normal_base_samples(std::size_t n, std::size_t dim, std::uint64_t seed,
                                    SamplerKind kind)
{
    Eigen::MatrixXd u = uniform_points(n, dim, seed, kind);
    const boost::math::normal standard;
    return u.unaryExpr([&](double p) { return boost::math::quantile(standard, p); });
}

} // namespace cbo
