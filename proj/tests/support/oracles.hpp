#pragma once

// Brute-force references used only by tests. Nothing here calls into the
// GP implementation: kernels, solves and determinants are recomputed directly.

#include <Eigen/Dense>
#include <boost/multiprecision/cpp_bin_float.hpp>
#include <boost/multiprecision/eigen.hpp>
#include <boost/math/constants/constants.hpp>

#include <cmath>
#include <cstddef>
#include <numbers>
#include <random>

namespace cbo::oracle {

// 50 significant digits: enough that cancellation in sf2 - k'K^-1 k stays far
// below test tolerances even for Gram matrices with condition numbers near 1e10.
using Real = boost::multiprecision::number<boost::multiprecision::cpp_bin_float<50>,
                                           boost::multiprecision::et_off>;
using MatrixL = Eigen::Matrix<Real, Eigen::Dynamic, Eigen::Dynamic>;
using VectorL = Eigen::Matrix<Real, Eigen::Dynamic, 1>;

inline Real matern52_l(const Eigen::VectorXd& a, const Eigen::VectorXd& b,
                       const Eigen::VectorXd& lengthscales, const Real& signal_variance)
{
    Real r2 = 0;
    for (Eigen::Index i = 0; i < a.size(); ++i) {
        const Real t = (Real(a[i]) - Real(b[i])) / Real(lengthscales[i]);
        r2 += t * t;
    }
    const Real r = sqrt(r2);
    const Real s5 = sqrt(Real(5));
    return signal_variance * (1 + s5 * r + 5 * r2 / 3) * exp(-s5 * r);
}

inline double matern52(const Eigen::VectorXd& a, const Eigen::VectorXd& b,
                       const Eigen::VectorXd& lengthscales, double signal_variance)
{
    return static_cast<double>(matern52_l(a, b, lengthscales, Real(signal_variance)));
}

/// Textbook GP formulas with an explicit inverse, all in 50-digit arithmetic.
struct DenseGp {
    Eigen::MatrixXd x;  // n x d
    VectorL y;
    Eigen::VectorXd lengthscales;
    Real signal_variance;
    Real noise_std;
    MatrixL k_inv;
    Real logdet = 0;

    DenseGp(Eigen::MatrixXd x_, const Eigen::VectorXd& y_, Eigen::VectorXd ell, double sf2, double sn)
        : x(std::move(x_)), y(y_.cast<Real>()), lengthscales(std::move(ell)),
          signal_variance(sf2), noise_std(sn)
    {
        const Eigen::FullPivLU<MatrixL> lu(gram());
        k_inv = lu.inverse();
        const MatrixL u = lu.matrixLU().template triangularView<Eigen::Upper>();
        for (Eigen::Index i = 0; i < u.rows(); ++i)
            logdet += log(abs(u(i, i)));
    }

    MatrixL gram() const
    {
        const Eigen::Index n = x.rows();
        MatrixL k(n, n);
        for (Eigen::Index i = 0; i < n; ++i)
            for (Eigen::Index j = 0; j < n; ++j)
                k(i, j) = matern52_l(x.row(i).transpose(), x.row(j).transpose(), lengthscales,
                                     signal_variance) +
                          (i == j ? Real(noise_std * noise_std) : Real(0));
        return k;
    }

    VectorL cross(const Eigen::VectorXd& q) const
    {
        VectorL k(x.rows());
        for (Eigen::Index i = 0; i < x.rows(); ++i)
            k[i] = matern52_l(x.row(i).transpose(), q, lengthscales, signal_variance);
        return k;
    }

    double mean(const Eigen::VectorXd& q) const
    {
        return static_cast<double>(cross(q).dot(k_inv * y));
    }

    double variance(const Eigen::VectorXd& q) const
    {
        const VectorL k = cross(q);
        return static_cast<double>(signal_variance - k.dot(k_inv * k));
    }

    double covariance(const Eigen::VectorXd& a, const Eigen::VectorXd& b) const
    {
        return static_cast<double>(matern52_l(a, b, lengthscales, signal_variance) -
                                   cross(a).dot(k_inv * cross(b)));
    }

    double lml() const
    {
        const Real two_pi = 2 * boost::math::constants::pi<Real>();
        return static_cast<double>(Real(-0.5) * y.dot(k_inv * y) - logdet / 2 -
                                   Real(y.size()) / 2 * log(two_pi));
    }
};

inline double std_normal_cdf(double z)
{
    return 0.5 * std::erfc(-z / std::sqrt(2.0));
}

/// Exact standard error of the n-sample Monte-Carlo estimate of
/// E[1(v <= t) max(0, k - best)] for independent Gaussians k ~ N(mk, sk^2),
/// v ~ N(mv, sv^2). Uses E[max(0, k - b)^2] = (d^2 + s^2) Phi(d/s) + d s phi(d/s).
inline double cei_mc_standard_error(double mk, double sk, double mv, double sv, double best,
                                    double threshold, std::size_t n)
{
    // Long double keeps tiny tail probabilities from underflowing to zero.
    using L = long double;
    const L d = static_cast<L>(mk) - best;
    const L z = d / sk;
    const L cdf = 0.5L * std::erfc(-z / std::sqrt(2.0L));
    const L pdf = std::exp(-0.5L * z * z) / std::sqrt(2.0L * std::numbers::pi_v<L>);
    const L ei = d * cdf + sk * pdf;
    const L m2 = (d * d + static_cast<L>(sk) * sk) * cdf + d * sk * pdf;
    const L pf = 0.5L * std::erfc(-((static_cast<L>(threshold) - mv) / sv) / std::sqrt(2.0L));
    const L var = pf * m2 - (pf * ei) * (pf * ei);
    return static_cast<double>(std::sqrt(std::max(var, 0.0L) / static_cast<L>(n)));
}

/// 201^3 scan of the prechamber proxy in unit coordinates; returns best feasible k.
struct GridOptimum {
    double k;
    double v;
    Eigen::Vector3d u;
};

inline GridOptimum proxy_grid_optimum(std::size_t n = 201, double threshold = 25.0)
{
    GridOptimum best{-1e300, 0.0, Eigen::Vector3d::Zero()};
    for (std::size_t a = 0; a < n; ++a)
        for (std::size_t b = 0; b < n; ++b)
            for (std::size_t c = 0; c < n; ++c) {
                const double u1 = static_cast<double>(a) / static_cast<double>(n - 1);
                const double u2 = static_cast<double>(b) / static_cast<double>(n - 1);
                const double u3 = static_cast<double>(c) / static_cast<double>(n - 1);
                const double k = 60.0 + 220.0 * std::exp(-(u2 - 0.33) * (u2 - 0.33) / 0.08) *
                                            (0.4 + 0.6 * u1 * u3);
                const double v = 12.0 + 18.0 * std::exp(-(u2 - 0.25) * (u2 - 0.25) / 0.10) *
                                            (0.5 + 0.5 * u1);
                if (v <= threshold && k > best.k)
                    best = {k, v, Eigen::Vector3d(u1, u2, u3)};
            }
    return best;
}

// Frozen from an independent 201^3 scan of the proxy (threshold 25).
inline constexpr double kProxyGridK = 253.56687061290515;
inline constexpr double kProxyGridV = 24.985958101930073;

/// Random smooth test function in [0,1]^d for building datasets.
inline Eigen::VectorXd smooth_targets(const Eigen::MatrixXd& x, std::mt19937_64& rng)
{
    std::normal_distribution<double> n01;
    const Eigen::Index d = x.cols();
    Eigen::VectorXd w(d), phase(d);
    for (Eigen::Index i = 0; i < d; ++i) {
        w[i] = 1.0 + 3.0 * std::abs(n01(rng));
        phase[i] = n01(rng);
    }
    Eigen::VectorXd y(x.rows());
    for (Eigen::Index r = 0; r < x.rows(); ++r) {
        double s = 0.0;
        for (Eigen::Index i = 0; i < d; ++i)
            s += std::sin(w[i] * x(r, i) + phase[i]);
        y[r] = 10.0 * s + 3.0 * x(r, 0) * x(r, 0);
    }
    return y;
}

} // namespace cbo::oracle
