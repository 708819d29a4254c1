#include "cbo/errors.hpp"
#include "cbo/evaluators.hpp"

#include "oracles.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <random>

using namespace cbo;

namespace {

class TempDir {
public:
    TempDir()
    {
        std::random_device rd;
        path_ = std::filesystem::temp_directory_path() / ("cbo_eval_" + std::to_string(rd()));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() { std::filesystem::remove_all(path_); }
    const std::filesystem::path& path() const { return path_; }

private:
    std::filesystem::path path_;
};

Eigen::VectorXd proxy_x(double u1, double u2, double u3)
{
    return prechamber_space().from_unit(UnitPoint(Eigen::Vector3d(u1, u2, u3)));
}

void write_file(const std::filesystem::path& p, const std::string& text)
{
    std::ofstream(p) << text;
}

ErrorKind kind_of(const std::function<void()>& f)
{
    try {
        f();
    } catch (const Error& e) {
        return e.kind();
    }
    ADD_FAILURE() << "no error thrown";
    return ErrorKind::invalid_argument;
}

} // namespace

TEST(ProxyPrechamber, ClosedFormSpotValues)
{
    EXPECT_DOUBLE_EQ(proxy_prechamber(proxy_x(0.0, 0.33, 0.0)).k, 148.0);
    EXPECT_DOUBLE_EQ(proxy_prechamber(proxy_x(1.0, 0.33, 1.0)).k, 280.0);
    EXPECT_THROW(proxy_prechamber(Eigen::Vector3d(13.0, 0.9, 17.0)), Error);
}

TEST(ProxyPrechamber, GridOptimumMatchesFrozenOracle)
{
    const auto opt = oracle::proxy_grid_optimum();
    EXPECT_DOUBLE_EQ(opt.k, oracle::kProxyGridK);
    EXPECT_DOUBLE_EQ(opt.v, oracle::kProxyGridV);
    EXPECT_GT(opt.v, 24.0);
    EXPECT_LE(opt.v, 25.0);
    const auto e = proxy_prechamber(prechamber_space().from_unit(UnitPoint(opt.u)));
    EXPECT_NEAR(e.k, opt.k, 1e-9);
    EXPECT_NEAR(e.v, opt.v, 1e-9);
}

TEST(ProxyPrechamber, TrendChecks)
{
    const int n = 21;
    const double h = 1.0 / (n - 1);
    for (int a = 0; a < n; ++a)
        for (int b = 0; b < n; ++b)
            for (int c = 0; c < n; ++c) {
                const double u1 = a * h, u2 = b * h, u3 = c * h;
                const auto e = proxy_prechamber(proxy_x(u1, u2, u3));
                if (a + 1 < n) {
                    const auto e1 = proxy_prechamber(proxy_x(u1 + h, u2, u3));
                    EXPECT_GE(e1.k, e.k);
                    EXPECT_GE(e1.v, e.v);
                }
                if (c + 1 < n)
                    EXPECT_GE(proxy_prechamber(proxy_x(u1, u2, u3 + h)).k, e.k);
            }
    int arg = 0;
    double top = -1.0;
    for (int b = 0; b <= 200; ++b) {
        const double k = proxy_prechamber(proxy_x(1.0, b / 200.0, 1.0)).k;
        if (k > top) {
            top = k;
            arg = b;
        }
    }
    EXPECT_GT(arg, 0);
    EXPECT_LT(arg, 200);
}

TEST(BenchmarkQuadratic, SpotValues)
{
    const auto at_opt = benchmark_quadratic(Eigen::Vector2d(0.5, 0.5));
    EXPECT_DOUBLE_EQ(at_opt.k, -0.08);
    EXPECT_DOUBLE_EQ(at_opt.v, 1.0);
    const auto free_max = benchmark_quadratic(Eigen::Vector2d(0.7, 0.7));
    EXPECT_EQ(free_max.k, 0.0);
    EXPECT_GT(free_max.v, 1.0);
    EXPECT_EQ(default_threshold(BuiltinEvaluator::quadratic), 1.0);
    EXPECT_EQ(default_space(BuiltinEvaluator::quadratic).names(), (std::vector<std::string>{"x1", "x2"}));
}

TEST(Builtins, ParseAndDispatch)
{
    EXPECT_EQ(parse_evaluator("proxy"), BuiltinEvaluator::proxy);
    EXPECT_EQ(to_string(BuiltinEvaluator::quadratic), "quadratic");
    EXPECT_THROW(parse_evaluator("cfd"), Error);
    EXPECT_EQ(make_evaluator(BuiltinEvaluator::proxy)(proxy_x(1, 0.33, 1)).k, 280.0);
}

TEST(Proposals, FormatContract)
{
    TempDir dir;
    const auto space = prechamber_space();
    std::vector<Eigen::VectorXd> batch;
    for (int j = 0; j < 5; ++j)
        batch.push_back(proxy_x(0.1 * j, 1.0 / 3.0, 0.2 + 0.1 * j));
    const auto path = write_proposals(dir.path(), space, batch, 1);
    EXPECT_EQ(path.filename(), "proposals_iter1.csv");

    std::ifstream in(path);
    std::string line;
    std::getline(in, line);
    EXPECT_EQ(line, "id,d_bottle,d_bore,h_neck");
    std::vector<std::string> ids;
    while (std::getline(in, line))
        ids.push_back(line.substr(0, line.find(',')));
    EXPECT_EQ(ids, (std::vector<std::string>{"iter1_0", "iter1_1", "iter1_2", "iter1_3", "iter1_4"}));

    const auto rows = read_proposals(path, space);
    ASSERT_EQ(rows.size(), 5u);
    for (std::size_t j = 0; j < 5; ++j) {
        EXPECT_EQ(rows[j].id, ids[j]);
        // 17 significant digits make the round trip exact.
        EXPECT_EQ(rows[j].x, batch[j]);
    }
}

TEST(Proposals, FullPrecisionRoundTrip)
{
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> u(-1e6, 1e6);
    for (int i = 0; i < 1000; ++i) {
        const double x = u(rng) * std::pow(10.0, static_cast<double>(i % 20) - 10.0);
        EXPECT_EQ(std::stod(format_full(x)), x);
    }
}

TEST(Results, ParsesMatchingIdsInAnyOrder)
{
    TempDir dir;
    const auto p = dir.path() / "r.csv";
    write_file(p, "id,k,v_mag\niter1_1,200.5,22\niter1_0,150,21.25\n");
    const std::vector<std::string> ids{"iter1_0", "iter1_1"};
    const auto rows = read_results(p, ids);
    ASSERT_EQ(rows.size(), 2u);
    EXPECT_EQ(rows[0].id, "iter1_1");
    EXPECT_EQ(rows[1].v, 21.25);

    std::vector<ResultRow> out{{"iter1_0", 1.0 / 3.0, 2.0 / 7.0}, {"iter1_1", 1e-300, 5e300}};
    write_results(p, out);
    const auto back = read_results(p, ids);
    EXPECT_EQ(back[0].k, 1.0 / 3.0);
    EXPECT_EQ(back[1].v, 5e300);
}

TEST(Results, ProtocolAndDataErrors)
{
    TempDir dir;
    const auto p = dir.path() / "r.csv";
    const std::vector<std::string> ids{"iter1_0", "iter1_1"};

    write_file(p, "id,k,v_mag\niter1_0,150,21\n");
    try {
        read_results(p, ids);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::protocol);
        EXPECT_NE(std::string(e.what()).find("iter1_1"), std::string::npos);
    }

    write_file(p, "id,k,v_mag\niter1_0,150,21\niter1_1,1,2\niter1_9,1,2\n");
    EXPECT_EQ(kind_of([&] { read_results(p, ids); }), ErrorKind::protocol);
    write_file(p, "id,k,v_mag\niter1_0,150,21\niter1_0,1,2\niter1_1,1,2\n");
    EXPECT_EQ(kind_of([&] { read_results(p, ids); }), ErrorKind::protocol);

    write_file(p, "id,k,v_mag\niter1_0,150,21\niter1_1,nan,2\n");
    try {
        read_results(p, ids);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::data);
        EXPECT_NE(std::string(e.what()).find("row 2"), std::string::npos) << e.what();
    }

    write_file(p, "id,k,v\niter1_0,150,21\n");
    EXPECT_EQ(kind_of([&] { read_results(p, ids); }), ErrorKind::protocol);
    EXPECT_EQ(kind_of([&] { read_results(dir.path() / "missing.csv", ids); }), ErrorKind::io);
}

TEST(DatasetTest, RejectsDuplicatesAndNonFinite)
{
    const auto space = prechamber_space();
    Dataset ds;
    ds.append(space, {proxy_x(0.2, 0.3, 0.4), 100.0, 20.0, "doe"});
    EXPECT_EQ(kind_of([&] { ds.append(space, {proxy_x(0.2, 0.3, 0.4), 101.0, 20.0, "manual"}); }),
              ErrorKind::degenerate_data);
    EXPECT_EQ(kind_of([&] { ds.append(space, {proxy_x(0.5, 0.3, 0.4), std::nan(""), 20.0, "doe"}); }),
              ErrorKind::data);
    EXPECT_EQ(kind_of([&] { ds.append(space, {Eigen::Vector3d(20.0, 0.9, 17.0), 1.0, 1.0, "doe"}); }),
              ErrorKind::bounds_violation);
    EXPECT_EQ(ds.size(), 1u);
    EXPECT_TRUE(ds.contains_close(space, space.to_unit(proxy_x(0.2, 0.3, 0.4))));
    EXPECT_EQ(iteration_tag(3), "bo_iter_3");
}
