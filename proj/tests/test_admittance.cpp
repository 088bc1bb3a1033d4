#include "fixtures.hpp"
#include "vscuc/admittance.hpp"

#include <gtest/gtest.h>

using namespace vscuc;

namespace
{
const Complex kJ(0.0, 1.0);

GridCase lines_only(int n, std::vector< Line > lines)
{
    GridCase gc;
    gc.per_unit = true;
    for (int i = 1; i <= n; ++i)
        gc.buses.push_back({i, 0.9, 1.1, 0.0, 0.0, 0.0, 0.0, i == 1});
    gc.lines = std::move(lines);
    gc.freq  = fixtures::default_freq();
    return gc;
}
} // namespace

TEST(Admittance, SingleLineY0)
{
    const auto y = build_y0(lines_only(2, {{1, 2, 0.0, 0.1, 0.0, std::nullopt}}));
    EXPECT_NEAR(std::abs(y(0, 0) - (-10.0 * kJ)), 0.0, 1e-12);
    EXPECT_NEAR(std::abs(y(0, 1) - (10.0 * kJ)), 0.0, 1e-12);
    EXPECT_NEAR(std::abs(y(1, 0) - (10.0 * kJ)), 0.0, 1e-12);
    EXPECT_NEAR(std::abs(y(1, 1) - (-10.0 * kJ)), 0.0, 1e-12);
}

TEST(Admittance, EmptyLineSetIsZero)
{
    EXPECT_EQ(build_y0(lines_only(3, {})).norm(), 0.0);
}

TEST(Admittance, TriangleY0)
{
    const auto y = build_y0(lines_only(3, {{1, 2, 0, 0.2, 0, {}}, {2, 3, 0, 0.2, 0, {}}, {1, 3, 0, 0.2, 0, {}}}));
    for (int i = 0; i < 3; ++i)
        for (int k = 0; k < 3; ++k)
        {
            // Each bus touches two lines of admittance -j5.
            const Complex expect = i == k ? Complex(0, -10) : Complex(0, 5);
            EXPECT_NEAR(std::abs(y(i, k) - expect), 0.0, 1e-12);
        }
}

TEST(Admittance, Y0RowSumsEqualShunts)
{
    std::mt19937 rng(3);
    const auto   gc = fixtures::random_network(rng, 6, 2, 0, 1);
    const auto   y  = build_y0(gc);
    const BusIndex idx(gc);
    Eigen::VectorXcd shunt = Eigen::VectorXcd::Zero(6);
    for (const auto& l : gc.lines)
    {
        shunt(idx(l.from_bus)) += Complex(0, 0.5 * l.b_sh);
        shunt(idx(l.to_bus)) += Complex(0, 0.5 * l.b_sh);
    }
    EXPECT_LT((y.rowwise().sum() - shunt).norm(), 1e-12);
}

TEST(Admittance, YgEntries)
{
    auto gc = fixtures::two_bus();
    DeviceConfig cfg{{0.0}, {}, {}};
    EXPECT_EQ(build_yg(gc, cfg).norm(), 0.0);

    gc.buses.push_back({3, 0.9, 1.1, 0, 0, 0, 0, false});
    gc.lines.push_back({2, 3, 0, 0.1, 0, {}});
    gc.sync_gens[0].bus = 3;
    cfg.sg_on           = {1.0};
    auto yg             = build_yg(gc, cfg);
    EXPECT_NEAR(std::abs(yg(2) - Complex(0, -5)), 0.0, 1e-12);
    EXPECT_EQ(std::abs(yg(0)), 0.0);

    gc.sync_gens.push_back(gc.sync_gens[0]);
    cfg.sg_on = {1.0, 1.0};
    yg        = build_yg(gc, cfg);
    EXPECT_NEAR(std::abs(yg(2) - Complex(0, -10)), 0.0, 1e-12);

    cfg.sg_on = {1.0};
    EXPECT_THROW(build_yg(gc, cfg), Error);
}

TEST(Admittance, ScalarInverse)
{
    GridCase gc = lines_only(1, {});
    SyncGen  g;
    g.bus         = 1;
    g.x_transient = 0.5;
    gc.sync_gens  = {g};
    const auto z  = compute_z(gc, DeviceConfig{{1.0}, {}, {}}).z;
    EXPECT_NEAR(std::abs(z(0, 0) - Complex(0, 0.5)), 0.0, 1e-15);
}

TEST(Admittance, AllOffIsSingular)
{
    const auto gc = fixtures::two_bus();
    try
    {
        compute_z(gc, DeviceConfig{{0.0}, {}, {}});
        FAIL();
    }
    catch (const Error& e)
    {
        EXPECT_EQ(e.code(), ErrorCode::Singular);
    }
}

TEST(Admittance, TwoBusHandInverse)
{
    // Y = [[-j15, j10], [j10, -j10]]; det = -150 + 100 = -50 (times j^2 = -1
    // gives 50 with sign handled below). Hand inverse: Z = adj(Y)/det(Y).
    const Complex y11(0, -15), y12(0, 10), y22(0, -10);
    const Complex det = y11 * y22 - y12 * y12;
    const Complex z11 = y22 / det, z22 = y11 / det, z12 = -y12 / det;
    EXPECT_NEAR(std::abs(z11 - Complex(0, 0.2)), 0.0, 1e-15);
    EXPECT_NEAR(std::abs(z22 - Complex(0, 0.3)), 0.0, 1e-15);
    EXPECT_NEAR(std::abs(z12 - Complex(0, 0.2)), 0.0, 1e-15);

    const auto m = compute_z(fixtures::two_bus(), DeviceConfig{{1.0}, {}, {}});
    EXPECT_NEAR(std::abs(m.z(0, 0) - z11), 0.0, 1e-12);
    EXPECT_NEAR(std::abs(m.z(1, 1) - z22), 0.0, 1e-12);
    EXPECT_NEAR(std::abs(m.z(0, 1) - z12), 0.0, 1e-12);
    EXPECT_NEAR(std::abs(m.z(1, 0) - z12), 0.0, 1e-12);
    EXPECT_LT(m.residual, 1e-9);
}

TEST(Admittance, TwoBusRatios)
{
    const auto r = z_ratios(fixtures::two_bus(), DeviceConfig{{1.0}, {}, {}});
    ASSERT_EQ(r.self.size(), 1u);
    EXPECT_NEAR(r.self[0], 1.0 / 0.3, 1e-12);
    EXPECT_TRUE(r.flatten().size() == 1u);
}

TEST(Admittance, RandomCasesInverseResidual)
{
    std::mt19937 rng(11);
    for (int k = 0; k < 50; ++k)
    {
        const int  n  = 2 + k % 5;
        const auto gc = fixtures::random_network(rng, n, 2, 1, 1);
        const auto cfg = DeviceConfig::all_on(gc);
        const auto m   = compute_z(gc, cfg);
        const auto y   = AdmittanceModel{build_y0(gc), build_yg(gc, cfg)}.y();
        const double res = (y * m.z - ComplexMatrix::Identity(n, n)).rowwise().lpNorm< 1 >().maxCoeff();
        EXPECT_LT(res, 1e-9);
    }
}

TEST(Admittance, LosslessIsPurelyImaginary)
{
    std::mt19937 rng(5);
    const auto   gc = fixtures::random_network(rng, 5, 2, 1, 2);
    ImpedanceOptions opt;
    opt.lossless = true;
    const auto cfg = DeviceConfig::all_on(gc);
    EXPECT_EQ(build_yg(gc, cfg).real().norm(), 0.0);
    const auto z = compute_z(gc, cfg, opt).z;
    EXPECT_LT(z.real().norm(), 1e-12 * z.norm());
}

TEST(Admittance, PositiveShuntNeverIncreasesSelfImpedance)
{
    std::mt19937                              rng(17);
    std::uniform_real_distribution< double >  add(0.5, 20.0);
    for (int k = 0; k < 40; ++k)
    {
        const int      n   = 2 + k % 5;
        const auto     gc  = fixtures::random_network(rng, n, 2, 0, 1);
        const auto     cfg = DeviceConfig::all_on(gc);
        AdmittanceModel base{build_y0(gc, {true}), build_yg(gc, cfg)};
        const auto     z0 = compute_z(base).z;
        AdmittanceModel more = base;
        std::uniform_int_distribution< int > bus(0, n - 1);
        more.yg(bus(rng)) += Complex(0, -add(rng));
        const auto z1 = compute_z(more).z;
        for (int i = 0; i < n; ++i)
            EXPECT_LE(std::abs(z1(i, i)), std::abs(z0(i, i)) + 1e-12);
    }
}

TEST(Admittance, RatiosArePure)
{
    std::mt19937 rng(23);
    const auto   gc  = fixtures::random_network(rng, 6, 3, 1, 2);
    const auto   cfg = DeviceConfig::all_on(gc);
    const auto   a   = z_ratios(gc, cfg).flatten();
    const auto   b   = z_ratios(gc, cfg).flatten();
    ASSERT_EQ(a.size(), 4u);
    for (std::size_t i = 0; i < a.size(); ++i)
        EXPECT_EQ(a[i], b[i]);
}

TEST(Admittance, StrengthIgnoresStatcom)
{
    auto       gc    = fixtures::two_bus();
    const auto cfg   = DeviceConfig::all_on(gc);
    const auto before = strength_indicator(gc, cfg).mean;
    ShuntReactiveDevice s;
    s.kind     = ShuntKind::Statcom;
    s.bus      = 2;
    s.q_rating = 0.3;
    s.i_max    = 0.3;
    gc.shunt_devices.push_back(s);
    EXPECT_EQ(strength_indicator(gc, DeviceConfig::all_on(gc)).mean, before);
}

TEST(Admittance, CondenserRaisesStrength)
{
    auto       gc     = fixtures::two_bus();
    const auto before = strength_indicator(gc, DeviceConfig::all_on(gc)).mean;
    ShuntReactiveDevice sc;
    sc.kind        = ShuntKind::SynchronousCondenser;
    sc.bus         = 2;
    sc.q_rating    = 0.3;
    sc.x_transient = 0.3;
    gc.shunt_devices.push_back(sc);
    auto cfg = DeviceConfig::all_on(gc);
    EXPECT_GT(strength_indicator(gc, cfg).mean, before);
    cfg.sc_on = {0.0};
    EXPECT_EQ(strength_indicator(gc, cfg).mean, before);
}

TEST(Admittance, RemovingUnitDoesNotIncreaseStrength)
{
    std::mt19937 rng(29);
    for (int k = 0; k < 20; ++k)
    {
        const auto gc  = fixtures::random_network(rng, 3 + k % 4, 3, 0, 1);
        auto       cfg = DeviceConfig::all_on(gc);
        const double all = strength_indicator(gc, cfg).mean;
        cfg.sg_on[k % 3] = 0.0;
        EXPECT_LE(strength_indicator(gc, cfg).mean, all + 1e-12);
    }
}

TEST(Admittance, BundledCaseFourTargets)
{
    const auto gc = load_case(std::string(VSCUC_DATA_DIR) + "/ieee30-mod.json");
    const auto r  = z_ratios(gc, DeviceConfig::all_on(gc)).flatten();
    ASSERT_EQ(r.size(), 4u);
    for (double v : r)
    {
        EXPECT_TRUE(std::isfinite(v));
        EXPECT_GT(v, 0.0);
    }
    const auto names = z_ratio_names(gc);
    EXPECT_EQ(names, (std::vector< std::string >{"z1_23", "z24_23", "z1_24", "z23_24"}));
}
