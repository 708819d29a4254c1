#include "cbo/gp.hpp"
#include "cbo/param_space.hpp"

#include <benchmark/benchmark.h>

#include <cmath>
#include <random>

namespace {

struct Data {
    std::vector<cbo::UnitPoint> x;
    std::vector<double> y;
};

Data make_data(std::size_t n, std::size_t d)
{
    std::mt19937_64 rng(n * 131 + d);
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    Data out;
    for (std::size_t i = 0; i < n; ++i) {
        Eigen::VectorXd c(static_cast<Eigen::Index>(d));
        for (auto& v : c)
            v = u01(rng);
        out.y.push_back(std::sin(6.0 * c[0]) + c.squaredNorm());
        out.x.emplace_back(c);
    }
    return out;
}

void BM_GpFit(benchmark::State& state)
{
    const auto data = make_data(static_cast<std::size_t>(state.range(0)), 3);
    for (auto _ : state)
        benchmark::DoNotOptimize(cbo::GpModel::fit(data.x, data.y, cbo::Channel::objective, 1));
}
BENCHMARK(BM_GpFit)->Arg(10)->Arg(25)->Arg(60)->Unit(benchmark::kMillisecond);

void BM_Posterior(benchmark::State& state)
{
    const auto data = make_data(static_cast<std::size_t>(state.range(0)), 3);
    const auto model = cbo::GpModel::fit(data.x, data.y, cbo::Channel::objective, 1);
    const cbo::UnitPoint q(Eigen::Vector3d(0.3, 0.6, 0.2));
    for (auto _ : state)
        benchmark::DoNotOptimize(model.posterior(q));
}
BENCHMARK(BM_Posterior)->Arg(10)->Arg(25)->Arg(60);

void BM_JointPosterior(benchmark::State& state)
{
    const auto data = make_data(25, 3);
    const auto model = cbo::GpModel::fit(data.x, data.y, cbo::Channel::objective, 1);
    const Eigen::MatrixXd batch = Eigen::MatrixXd::Constant(state.range(0), 3, 0.5) +
                                  0.1 * Eigen::MatrixXd::Random(state.range(0), 3);
    for (auto _ : state)
        benchmark::DoNotOptimize(model.joint_posterior(batch));
}
BENCHMARK(BM_JointPosterior)->Arg(1)->Arg(5)->Arg(10);

void BM_LogMarginalLikelihoodWithGradient(benchmark::State& state)
{
    const auto data = make_data(static_cast<std::size_t>(state.range(0)), 3);
    const Eigen::MatrixXd x = cbo::stack_points(data.x);
    const Eigen::VectorXd y = Eigen::Map<const Eigen::VectorXd>(data.y.data(), static_cast<Eigen::Index>(data.y.size()));
    cbo::GpHyperparameters h;
    h.lengthscales = Eigen::Vector3d(0.3, 0.5, 0.8);
    h.signal_variance = 1.0;
    Eigen::VectorXd grad;
    for (auto _ : state)
        benchmark::DoNotOptimize(cbo::log_marginal_likelihood(x, y, h, &grad, true));
}
BENCHMARK(BM_LogMarginalLikelihoodWithGradient)->Arg(10)->Arg(25)->Arg(60);

} // namespace
