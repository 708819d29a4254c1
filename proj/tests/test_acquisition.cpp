#include "cbo/acquisition.hpp"
#include "cbo/errors.hpp"

#include "oracles.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace cbo;

namespace {

struct ModelPair {
    std::vector<UnitPoint> inputs;
    GpModel k;
    GpModel v;
};

ModelPair proxy_models(std::uint64_t seed, std::size_t n = 12)
{
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    const auto space = prechamber_space();
    std::vector<UnitPoint> inputs;
    std::vector<double> k, v;
    for (std::size_t i = 0; i < n; ++i) {
        const UnitPoint u(Eigen::Vector3d(u01(rng), u01(rng), u01(rng)));
        const auto e = proxy_prechamber(space.from_unit(u));
        inputs.push_back(u);
        k.push_back(e.k);
        v.push_back(e.v);
    }
    auto mk = GpModel::fit(inputs, k, Channel::objective, seed);
    auto mv = GpModel::fit(inputs, v, Channel::constraint, seed + 1);
    return {inputs, std::move(mk), std::move(mv)};
}

UnitPoint random_unit(std::mt19937_64& rng, std::size_t d)
{
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    Eigen::VectorXd c(static_cast<Eigen::Index>(d));
    for (auto& x : c)
        x = u01(rng);
    return UnitPoint(c);
}

double best_k(const ModelPair& m, double threshold)
{
    const auto inc = incumbent(m.k, m.v, threshold);
    return inc ? inc->value : m.k.raw_targets().maxCoeff();
}

} // namespace

TEST(ExpectedImprovement, SpotValues)
{
    EXPECT_DOUBLE_EQ(expected_improvement({3.0, 0.0}, 2.0), 1.0);
    EXPECT_NEAR(expected_improvement({2.0, 1.0}, 2.0), 0.398942280401432677939946059934, 1e-15);
    EXPECT_LT(expected_improvement({-8.0, 1.0}, 2.0), 1e-20);
    EXPECT_GE(expected_improvement({-80.0, 1.0}, 2.0), 0.0);
}

TEST(ExpectedImprovement, Monotonicity)
{
    const double best = 0.0;
    for (int i = 0; i < 100; ++i) {
        const double mu = -5.0 + 10.0 * i / 99.0;
        for (int j = 0; j + 1 < 100; ++j) {
            const double s0 = 0.01 + 3.0 * j / 99.0, s1 = 0.01 + 3.0 * (j + 1) / 99.0;
            if (mu <= best)
                EXPECT_LE(expected_improvement({mu, s0}, best), expected_improvement({mu, s1}, best));
            if (i + 1 < 100) {
                const double mu1 = -5.0 + 10.0 * (i + 1) / 99.0;
                EXPECT_LE(expected_improvement({mu, s0}, best), expected_improvement({mu1, s0}, best));
            }
        }
    }
}

TEST(ProbabilityFeasible, SpotValues)
{
    EXPECT_NEAR(probability_feasible({25.0, 3.0}, 25.0), 0.5, 1e-12);
    EXPECT_NEAR(probability_feasible({25.0 - 5.0 * 0.7, 0.7}, 25.0), 0.999999713348428120806088326248,
                1e-13);
    EXPECT_EQ(probability_feasible({25.01, 0.0}, 25.0), 0.0);
    EXPECT_EQ(probability_feasible({25.0, 0.0}, 25.0), 1.0);
    for (double mu : {-100.0, 0.0, 24.0, 26.0, 1e3}) {
        const double p = probability_feasible({mu, 2.0}, 25.0);
        EXPECT_GE(p, 0.0);
        EXPECT_LE(p, 1.0);
    }
}

TEST(ConstrainedEi, SpotValuesAndFactorization)
{
    const PosteriorGaussian certain{-100.0, 0.0};
    const PosteriorGaussian impossible{100.0, 0.0};
    EXPECT_DOUBLE_EQ(constrained_ei({2.5, 0.4}, certain, 2.0, 0.0),
                     expected_improvement({2.5, 0.4}, 2.0));
    EXPECT_EQ(constrained_ei({50.0, 3.0}, impossible, 2.0, 0.0), 0.0);
    EXPECT_NEAR(constrained_ei({2.0, 1.0}, {25.0, 1.0}, 2.0, 25.0),
                0.199471140200716338969973029967, 1e-15);

    std::mt19937_64 rng(1);
    std::normal_distribution<double> n01;
    std::uniform_real_distribution<double> sd(0.0, 3.0);
    for (int i = 0; i < 1000; ++i) {
        const PosteriorGaussian gk{n01(rng), sd(rng)}, gv{n01(rng), sd(rng)};
        const double best = n01(rng), t = n01(rng);
        EXPECT_EQ(constrained_ei(gk, gv, best, t),
                  probability_feasible(gv, t) * expected_improvement(gk, best));
    }
}

TEST(Ucb, SpotValues)
{
    EXPECT_EQ(ucb({1.3, 2.0}, 0.0), 1.3);
    EXPECT_EQ(ucb({1.3, 0.0}, 7.0), 1.3);
    EXPECT_DOUBLE_EQ(ucb({1.0, 2.0}, 1.5), 4.0);
}

TEST(Incumbent, DatasetRules)
{
    const auto space = prechamber_space();
    Dataset empty;
    EXPECT_THROW(incumbent(empty, 25.0), Error);

    Dataset ds;
    ds.append(space, {Eigen::Vector3d(10.2, 0.89, 18.75), 160.38, 21.0, "doe"});
    EXPECT_EQ(incumbent(ds, 25.0)->index, 0u);
    ds.append(space, {Eigen::Vector3d(11.0, 0.80, 19.0), 290.0, 27.0, "bo_iter_1"});
    ds.append(space, {Eigen::Vector3d(11.5, 0.84, 19.5), 263.16, 22.53, "bo_iter_3"});
    const auto inc = incumbent(ds, 25.0);
    ASSERT_TRUE(inc);
    EXPECT_EQ(inc->index, 2u);
    EXPECT_EQ(inc->value, 263.16);

    Dataset infeasible;
    infeasible.append(space, {Eigen::Vector3d(10.0, 0.9, 17.0), 200.0, 30.0, "doe"});
    EXPECT_FALSE(incumbent(infeasible, 25.0));
}

TEST(QceiMc, SinglePointMatchesClosedFormAtMillionSamples)
{
    const auto m = proxy_models(3);
    const double best = best_k(m, 25.0);
    std::mt19937_64 rng(4);
    int checked = 0;
    for (int i = 0; i < 10; ++i) {
        const std::vector<UnitPoint> x{random_unit(rng, 3)};
        const auto est = qcei_mc(m.k, m.v, x, best, 25.0, 1'000'000, rng());
        const double exact = constrained_ei_at(m.k, m.v, x[0], best, 25.0);
        const auto gk = m.k.posterior(x[0]);
        const auto gv = m.v.destandardize(m.v.posterior(x[0]));
        const double se = oracle::cei_mc_standard_error(
            gk.mean, gk.std, gv.mean, gv.std, m.k.standardization().apply(best), 25.0, 1'000'000);
        EXPECT_LE(std::abs(est.value - exact), 3.0 * se)
            << "exact " << exact << " mc " << est.value << " se " << se;
        if (exact > 1e-4)
            EXPECT_NEAR(est.std_error, se, 0.05 * se);
        ++checked;
    }
    EXPECT_EQ(checked, 10);
}

TEST(QceiMc, DuplicatePointsAddNothing)
{
    const auto m = proxy_models(5);
    const double best = best_k(m, 25.0);
    std::mt19937_64 rng(6);
    for (int i = 0; i < 5; ++i) {
        const UnitPoint p = random_unit(rng, 3);
        const std::vector<UnitPoint> one{p}, three{p, p, p};
        const auto a = qcei_mc(m.k, m.v, one, best, 25.0, 20000, 9);
        const auto b = qcei_mc(m.k, m.v, three, best, 25.0, 20000, 9);
        EXPECT_NEAR(a.value, b.value, 3.0 * (a.std_error + b.std_error) + 1e-9);
    }
}

TEST(QceiMc, DeeplyInfeasibleBatchIsNegligible)
{
    const auto m = proxy_models(7);
    const double best = best_k(m, 25.0);
    std::mt19937_64 rng(8);
    std::vector<UnitPoint> xs;
    for (int i = 0; i < 4; ++i)
        xs.push_back(random_unit(rng, 3));
    // Place the threshold at least 10 posterior std below every constraint mean.
    double threshold = std::numeric_limits<double>::infinity();
    for (const auto& x : xs) {
        const auto g = m.v.destandardize(m.v.posterior(x));
        threshold = std::min(threshold, g.mean - 10.0 * g.std);
    }
    EXPECT_LT(qcei_mc(m.k, m.v, xs, best, threshold, 4096, 1).value, 1e-6);
}

TEST(QceiMc, AddingPointsNeverDecreasesEstimate)
{
    const auto m = proxy_models(9);
    const double best = best_k(m, 25.0);
    std::mt19937_64 rng(10);
    AcquisitionConfig cfg;
    cfg.mc_samples = 4096;
    const BatchAcquisition acq(m.k, m.v, cfg, best, 6, 77);
    for (int trial = 0; trial < 10; ++trial) {
        std::vector<UnitPoint> xs;
        double prev = 0.0;
        for (int q = 1; q <= 6; ++q) {
            xs.push_back(random_unit(rng, 3));
            const auto est = acq.estimate(stack_points(xs));
            EXPECT_GE(est.value, prev - 3.0 * est.std_error);
            prev = est.value;
        }
    }
}

TEST(QceiMc, ConvergesAtSquareRootRate)
{
    const auto m = proxy_models(11);
    const double best = best_k(m, 25.0);
    std::mt19937_64 rng(12);
    // Use the most promising of many random points so the estimate is not trivially zero.
    std::vector<UnitPoint> x{random_unit(rng, 3)};
    double exact = constrained_ei_at(m.k, m.v, x[0], best, 25.0);
    for (int i = 0; i < 500; ++i) {
        const UnitPoint p = random_unit(rng, 3);
        const double a = constrained_ei_at(m.k, m.v, p, best, 25.0);
        if (a > exact) {
            exact = a;
            x[0] = p;
        }
    }
    ASSERT_GT(exact, 1e-3);
    for (std::size_t n : {1000u, 10000u, 100000u, 1000000u}) {
        const auto est = qcei_mc(m.k, m.v, x, best, 25.0, n, 13);
        // Error bound scales like 1/sqrt(n) via the per-sample spread.
        EXPECT_LE(std::abs(est.value - exact), 4.0 * est.std_error + 1e-12) << "n=" << n;
        EXPECT_LE(est.std_error * std::sqrt(static_cast<double>(n)), 10.0);
    }
}

TEST(QceiMc, DeterministicInSeed)
{
    const auto m = proxy_models(13);
    std::mt19937_64 rng(14);
    const std::vector<UnitPoint> xs{random_unit(rng, 3), random_unit(rng, 3)};
    const auto a = qcei_mc(m.k, m.v, xs, 150.0, 25.0, 1024, 5);
    const auto b = qcei_mc(m.k, m.v, xs, 150.0, 25.0, 1024, 5);
    EXPECT_EQ(a.value, b.value);
}

TEST(QceiMc, NoIncumbentEstimatesFeasibilityProbability)
{
    const auto m = proxy_models(15);
    AcquisitionConfig cfg;
    cfg.mc_samples = 200000;
    const BatchAcquisition acq(m.k, m.v, cfg, std::nullopt, 1, 3);
    EXPECT_TRUE(acq.feasibility_only());
    std::mt19937_64 rng(16);
    for (int i = 0; i < 5; ++i) {
        const std::vector<UnitPoint> x{random_unit(rng, 3)};
        const auto est = acq.estimate(stack_points(x));
        const double pf = probability_feasible(m.v.destandardize(m.v.posterior(x[0])), 25.0);
        EXPECT_NEAR(est.value, pf, 3.0 * est.std_error + 1e-9);
    }
}

TEST(QUcb, SinglePointReducesToClosedForm)
{
    const auto m = proxy_models(17);
    AcquisitionConfig cfg;
    cfg.kind = AcquisitionKind::ucb;
    cfg.ucb_beta = 1.5;
    cfg.mc_samples = 200000;
    const BatchAcquisition acq(m.k, m.v, cfg, std::nullopt, 1, 3);
    std::mt19937_64 rng(18);
    for (int i = 0; i < 5; ++i) {
        const std::vector<UnitPoint> x{random_unit(rng, 3)};
        const auto est = acq.estimate(stack_points(x));
        EXPECT_NEAR(est.value, ucb(m.k.posterior(x[0]), 1.5), 3.0 * est.std_error + 1e-9);
    }
}

TEST(ConstrainedEi, ArgmaxInvariantUnderObjectiveScaling)
{
    std::mt19937_64 rng(19);
    const auto base = proxy_models(19);
    std::vector<double> k(base.k.raw_targets().data(),
                          base.k.raw_targets().data() + base.k.raw_targets().size());
    std::vector<double> v(base.v.raw_targets().data(),
                          base.v.raw_targets().data() + base.v.raw_targets().size());
    std::vector<UnitPoint> grid;
    for (int i = 0; i < 500; ++i)
        grid.push_back(random_unit(rng, 3));
    const auto mv = GpModel::condition(base.inputs, v, Channel::constraint, base.v.hyperparameters());
    auto argmax = [&](double c) {
        std::vector<double> kc = k;
        for (auto& x : kc)
            x *= c;
        // Standardization absorbs the scale, so the same hyperparameters apply.
        const auto mk = GpModel::condition(base.inputs, kc, Channel::objective, base.k.hyperparameters());
        const double best = incumbent(mk, mv, 25.0)->value;
        std::size_t arg = 0;
        double top = -1.0;
        for (std::size_t i = 0; i < grid.size(); ++i) {
            const auto gk = mk.destandardize(mk.posterior(grid[i]));
            const auto gv = mv.destandardize(mv.posterior(grid[i]));
            const double a = constrained_ei(gk, gv, best, 25.0);
            if (a > top) {
                top = a;
                arg = i;
            }
        }
        return arg;
    };
    const std::size_t ref = argmax(1.0);
    for (double c : {0.01, 0.5, 3.0, 1000.0})
        EXPECT_EQ(argmax(c), ref) << "c=" << c;
}

TEST(AcquisitionConfig, Validation)
{
    AcquisitionConfig c;
    EXPECT_NO_THROW(c.validate());
    c.mc_samples = 0;
    EXPECT_THROW(c.validate(), Error);
    c = {};
    c.batch_size = 0;
    EXPECT_THROW(c.validate(), Error);
    c = {};
    c.constraint_threshold = std::numeric_limits<double>::infinity();
    EXPECT_THROW(c.validate(), Error);
    EXPECT_EQ(parse_acquisition_kind("ucb"), AcquisitionKind::ucb);
    EXPECT_THROW(parse_batch_mode("greedy"), Error);
}
