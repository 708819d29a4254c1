#include "cbo/acq_optimizer.hpp"
#include "cbo/acquisition.hpp"
#include "cbo/evaluators.hpp"

#include <benchmark/benchmark.h>

#include <random>

namespace {

struct Models {
    cbo::GpModel k;
    cbo::GpModel v;
};

Models proxy_models(std::size_t n)
{
    const auto space = cbo::prechamber_space();
    const auto design = cbo::latin_hypercube(space, n, 5);
    std::vector<double> k, v;
    for (const auto& u : design) {
        const auto e = cbo::proxy_prechamber(space.from_unit(u));
        k.push_back(e.k);
        v.push_back(e.v);
    }
    return {cbo::GpModel::fit(design, k, cbo::Channel::objective, 1),
            cbo::GpModel::fit(design, v, cbo::Channel::constraint, 2)};
}

void BM_BatchAcquisition(benchmark::State& state)
{
    const auto m = proxy_models(25);
    cbo::AcquisitionConfig cfg;
    const auto q = static_cast<std::size_t>(state.range(0));
    cfg.batch_size = q;
    const cbo::BatchAcquisition acq(m.k, m.v, cfg, 200.0, q, 3);
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    Eigen::MatrixXd batch(static_cast<Eigen::Index>(q), 3);
    for (auto& c : batch.reshaped())
        c = u01(rng);
    for (auto _ : state)
        benchmark::DoNotOptimize(acq(batch));
}
BENCHMARK(BM_BatchAcquisition)->Arg(1)->Arg(5)->Arg(10);

void BM_ProposeBatch(benchmark::State& state)
{
    const auto m = proxy_models(static_cast<std::size_t>(state.range(0)));
    cbo::AcquisitionConfig cfg;
    const cbo::OptimizerBudget budget;
    for (auto _ : state)
        benchmark::DoNotOptimize(cbo::propose_batch(m.k, m.v, cfg, budget, 7));
}
BENCHMARK(BM_ProposeBatch)->Arg(10)->Arg(25)->Unit(benchmark::kMillisecond);

} // namespace

BENCHMARK_MAIN();
