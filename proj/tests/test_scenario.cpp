#include "fixtures.hpp"
#include "vscuc/scenario.hpp"

#include <gtest/gtest.h>

#include <set>

using namespace vscuc;

namespace
{

ForecastProfile flat_profile(int horizon, std::vector< QuantileBin > q, double wind = 2.0)
{
    ForecastProfile p;
    p.horizon = horizon;
    for (int h = 0; h < horizon; ++h)
    {
        p.wind.push_back({wind});
        p.load_p.push_back({1.0, 0.5});
        p.load_q.push_back({0.2, 0.1});
        p.error_quantiles.push_back(q);
    }
    return p;
}

void expect_depth_sums(const ScenarioTree& t)
{
    for (int d = 0; d < t.horizon(); ++d)
    {
        double s = 0.0;
        for (int id : t.nodes_at_depth(d))
            s += t.node(id).probability;
        EXPECT_NEAR(s, 1.0, 1e-12) << "depth " << d;
    }
    for (const auto& n : t.nodes())
        if (!n.children.empty())
        {
            double s = 0.0;
            for (int c : n.children)
                s += t.node(c).probability;
            EXPECT_NEAR(s, n.probability, 1e-12);
        }
    EXPECT_EQ(t.node(0).probability, 1.0);
}

} // namespace

TEST(Scenario, SingleQuantileIsOnePath)
{
    const auto t = build_tree(flat_profile(5, {{1.0, 0.0, 0.0}}), {1, 2, 3});
    EXPECT_EQ(t.size(), 5u);
    EXPECT_EQ(t.leaves().size(), 1u);
    for (const auto& n : t.nodes())
        EXPECT_EQ(n.probability, 1.0);
}

TEST(Scenario, TwoQuantilesBranchOnce)
{
    const auto t = build_tree(flat_profile(3, {{0.5, 0.1, 0.0}, {0.5, -0.1, 0.0}}), {1});
    const auto leaves = t.leaves();
    ASSERT_EQ(leaves.size(), 2u);
    for (int l : leaves)
        EXPECT_DOUBLE_EQ(t.node(l).probability, 0.5);
    expect_depth_sums(t);
}

TEST(Scenario, ThreeQuantilesTwoBranchings)
{
    const std::vector< QuantileBin > q{{0.25, -0.1, 0.0}, {0.5, 0.0, 0.0}, {0.25, 0.1, 0.0}};
    const auto                       t = build_tree(flat_profile(4, q), {1, 2});
    const auto                       leaves = t.leaves();
    ASSERT_EQ(leaves.size(), 9u);
    // Leaf probabilities are the products of the two masses on the path.
    std::multiset< double > got, expect;
    for (int l : leaves)
        got.insert(t.node(l).probability);
    for (const auto& a : q)
        for (const auto& b : q)
            expect.insert(a.mass * b.mass);
    auto gi = got.begin();
    for (double e : expect)
        EXPECT_NEAR(*gi++, e, 1e-15);
    double s = 0.0;
    for (int l : leaves)
        s += t.node(l).probability;
    EXPECT_NEAR(s, 1.0, 1e-12);
    expect_depth_sums(t);
}

TEST(Scenario, LeafCountIsProductOfBranchings)
{
    const std::vector< QuantileBin > q{{0.2, -0.1, 0.0}, {0.3, 0.0, 0.05}, {0.5, 0.1, -0.05}};
    for (const std::vector< int >& br : {std::vector< int >{1}, {1, 3}, {2, 3, 4}, {}})
    {
        const auto t = build_tree(flat_profile(6, q), br);
        std::size_t expect = 1;
        for (std::size_t k = 0; k < br.size(); ++k)
            expect *= q.size();
        EXPECT_EQ(t.leaves().size(), expect);
        expect_depth_sums(t);
    }
}

TEST(Scenario, DefaultDeskTree)
{
    const std::vector< QuantileBin > q{{0.25, -0.1, 0.02}, {0.5, 0.0, 0.0}, {0.25, 0.1, -0.02}};
    const auto                       t = build_tree(flat_profile(6, q));
    EXPECT_EQ(t.size(), 16u);
    EXPECT_EQ(t.nodes_at_depth(0).size(), 1u);
    EXPECT_EQ(t.nodes_at_depth(5).size(), 3u);
}

TEST(Scenario, Errors)
{
    EXPECT_THROW(build_tree(flat_profile(3, {}), {1}), Error);
    EXPECT_THROW(build_tree(flat_profile(3, {{0.5, 0, 0}, {0.4, 0, 0}}), {1}), Error);
    EXPECT_NO_THROW(build_tree(flat_profile(3, {{0.5, 0, 0}, {0.5 + 5e-10, 0, 0}}), {1}));
    const auto t = build_tree(flat_profile(2, {{1.0, 0, 0}}));
    EXPECT_THROW(node_realization(t, 7), Error);
    try
    {
        node_realization(t, -1);
    }
    catch (const Error& e)
    {
        EXPECT_EQ(e.code(), ErrorCode::UnknownNode);
    }
}

TEST(Scenario, Realizations)
{
    const auto t0 = build_tree(flat_profile(3, {{0.5, 0.1, 0.0}, {0.5, -0.1, 0.0}}), {1, 2});
    EXPECT_EQ(node_realization(t0, 0).wind, (std::vector< double >{2.0}));
    EXPECT_EQ(node_realization(t0, 0).load_p, (std::vector< double >{1.0, 0.5}));
    // +10 % branch on a 2.0 central forecast.
    bool saw = false;
    for (int id : t0.nodes_at_depth(1))
        if (t0.node(id).quantile == 0)
        {
            EXPECT_NEAR(node_realization(t0, id).wind[0], 2.2, 1e-12);
            saw = true;
        }
    EXPECT_TRUE(saw);

    // Two consecutive -10 % branches on central 1.0 compose to 0.81.
    const auto t1 = build_tree(flat_profile(3, {{0.5, 0.1, 0.0}, {0.5, -0.1, 0.0}}, 1.0), {1, 2});
    for (int id : t1.nodes_at_depth(2))
    {
        const auto& n = t1.node(id);
        if (n.quantile == 1 && t1.node(n.parent).quantile == 1)
        {
            EXPECT_NEAR(node_realization(t1, id).wind[0], 0.81, 1e-12);
        }
    }
}

TEST(Scenario, Deterministic)
{
    const std::vector< QuantileBin > q{{0.25, -0.1, 0.02}, {0.5, 0.0, 0.0}, {0.25, 0.1, -0.02}};
    const auto a = build_tree(flat_profile(5, q), {1, 2});
    const auto b = build_tree(flat_profile(5, q), {1, 2});
    ASSERT_EQ(a.size(), b.size());
    for (std::size_t i = 0; i < a.size(); ++i)
    {
        EXPECT_EQ(a.nodes()[i].parent, b.nodes()[i].parent);
        EXPECT_EQ(a.nodes()[i].probability, b.nodes()[i].probability);
        EXPECT_EQ(a.nodes()[i].wind_factor, b.nodes()[i].wind_factor);
    }
}

TEST(Scenario, ProfileFromCase)
{
    auto gc                       = fixtures::two_bus();
    gc.gfl_ibgs[0].available_profile = {0.1, 0.2, 0.3, 0.4};
    gc.forecast.load_profile      = {1.0, 0.9, 0.8, 0.7};
    const auto p                  = make_profile(gc, 1, 3);
    EXPECT_EQ(p.wind[0][0], 0.2);
    EXPECT_NEAR(p.load_p[2][1], 0.7 * 0.5, 1e-15);
    EXPECT_THROW(make_profile(gc, 2, 3), Error);
}
