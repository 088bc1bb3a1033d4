#include "fixtures.hpp"

#include "vscuc/evaluate.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace vscuc;

namespace
{

/// Single-node schedule with one IBG and the given dispatch.
ScheduleSolution single_node(double avail, double dispatch, double shed = 0.0)
{
    ScheduleSolution s;
    s.config     = {DeviceConfig{{1.0}, {}, {}}};
    s.depth      = {0};
    s.probability = {1.0};
    s.duration   = {1.0};
    s.p_c        = {{dispatch}};
    s.q_c        = {{0.0}};
    s.h_s        = {{0.0}};
    s.shed       = {{shed}};
    s.wind_avail = {{avail}};
    return s;
}

/// Peak frequency deviation of 2H df/dt = -dP + R min(t/T_d, 1) - D df,
/// integrated with classical RK4 until the derivative turns positive.
double simulate_nadir(double H, double R, const FrequencyParams& f)
{
    auto rhs = [&](double t, double df) { return (-f.dp_l + R * std::min(t / f.t_d, 1.0) - f.damping_d * df) / (2.0 * H); };
    const double h  = 1e-3;
    double       df = 0.0, t = 0.0, lo = 0.0;
    for (int k = 0; k < 10000000; ++k)
    {
        const double k1 = rhs(t, df);
        const double k2 = rhs(t + 0.5 * h, df + 0.5 * h * k1);
        const double k3 = rhs(t + 0.5 * h, df + 0.5 * h * k2);
        const double k4 = rhs(t + h, df + h * k3);
        df += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        t += h;
        lo = std::min(lo, df);
        if (k1 > 0.0 && t > 1.0)
            break;
    }
    return -lo;
}

ScenarioTree chain(const GridCase& gc, int hours) { return build_tree(make_profile(gc, 0, hours), {}); }

} // namespace

// ---------------------------------------------------------------------------
// Voltage stability.

TEST(Stability, LargeActiveInjectionViolates)
{
    EXPECT_TRUE(stability_violated(10.0, 0.0, 1.0));
    EXPECT_FALSE(stability_violated(0.5, 0.0, 1.0));
}

TEST(Stability, BoundaryIsNotAViolation)
{
    // P^2 = 2 Q Gamma + Gamma^2 at P = sqrt(3), Q = 1, Gamma = 1.
    EXPECT_FALSE(stability_violated(std::sqrt(3.0), 1.0, 1.0));
    EXPECT_TRUE(stability_violated(std::sqrt(3.0) * 1.001, 1.0, 1.0));
}

TEST(Stability, NegativeRightHandSideViolates) { EXPECT_TRUE(stability_violated(0.0, -2.0, 1.0)); }

TEST(Stability, ConeAgreesWithQuadraticForm)
{
    std::mt19937                             rng(7);
    std::uniform_real_distribution< double > up(-3.0, 3.0), uq(-1.0, 3.0), ug(0.0, 2.0);
    int                                      agree = 0, checked = 0;
    for (int k = 0; k < 100; ++k)
    {
        const double p = up(rng), q = uq(rng), g = ug(rng);
        const double margin = 2.0 * q * g + g * g - p * p;
        if (std::abs(margin) < 1e-4)
            continue;
        const bool quad = q + g < 0.0 || margin < 0.0;
        agree += quad == stability_violated(p, q, g) ? 1 : 0;
        ++checked;
    }
    EXPECT_EQ(agree, checked);
    EXPECT_GT(checked, 90);
}

TEST(Stability, ShrinkingGammaNeverReducesViolations)
{
    auto gc = fixtures::two_bus();
    auto s  = single_node(0.4, 0.0);
    s.config[0] = DeviceConfig::all_on(gc);
    const double z1 = z_ratios(gc, s.config[0]).self[0];
    std::size_t  last = 0;
    for (double p : {0.1, 0.5, 1.0, 2.0, 5.0})
    {
        s.p_c[0][0] = p;
        std::size_t prev = 0;
        for (double scale : {1.0, 0.8, 0.5, 0.2})
        {
            const auto v = violation_rate(s, gc, nullptr, scale);
            EXPECT_GE(v.violations, prev);
            prev = v.violations;
        }
        const auto v = violation_rate(s, gc);
        EXPECT_EQ(v.violations, p > 0.5 * z1 ? 1u : 0u) << p;
        EXPECT_GE(v.violations, last);
        last = v.violations;
    }
}

TEST(Stability, SingularConfigurationCountsAsViolation)
{
    auto gc = fixtures::two_bus();
    auto s  = single_node(0.4, 0.1);
    s.config[0] = DeviceConfig{{0.0}, {}, {}};
    const auto v = violation_rate(s, gc);
    EXPECT_EQ(v.singular, 1u);
    EXPECT_EQ(v.violations, 1u);
    EXPECT_DOUBLE_EQ(v.rate_pct, 100.0);
    EXPECT_EQ(v.surrogate_rate_pct, -1.0);
}

TEST(Stability, GammaMeanIsHalfTheExactRatio)
{
    auto gc = fixtures::two_bus();
    auto s  = single_node(0.4, 0.1);
    s.config[0] = DeviceConfig::all_on(gc);
    const auto v = violation_rate(s, gc);
    // Z_11 of bus 2 with the SG reactance 0.2 behind line x=0.1.
    EXPECT_NEAR(v.gamma_mean[0], 0.5 / 0.3, 1e-9);
}

// ---------------------------------------------------------------------------
// Energy.

TEST(Energy, CurtailmentIsAvailableMinusDispatch)
{
    const auto e = curtailment_and_shed(single_node(3.0, 2.7), 100.0);
    EXPECT_NEAR(e.curtailment_mw, 30.0, 1e-9);
    EXPECT_EQ(e.shed_mw, 0.0);
}

TEST(Energy, WeightsByProbabilityAndDuration)
{
    auto s        = single_node(1.0, 1.0, 0.1);
    s.config.push_back(s.config[0]);
    s.depth       = {0, 1, 1};
    s.probability = {1.0, 0.25, 0.75};
    s.duration    = {1.0, 1.0, 1.0};
    s.p_c         = {{1.0}, {0.6}, {1.0}};
    s.wind_avail  = {{1.0}, {1.0}, {1.0}};
    s.shed        = {{0.0}, {0.2}, {0.0}};
    const auto e  = curtailment_and_shed(s, 100.0);
    EXPECT_NEAR(e.curtailment_mw, 100.0 * 0.25 * 0.4 / 2.0, 1e-9);
    EXPECT_NEAR(e.shed_mw, 100.0 * 0.25 * 0.2 / 2.0, 1e-9);
}

TEST(Energy, OverDispatchIsNotNegativeCurtailment)
{
    EXPECT_EQ(curtailment_and_shed(single_node(1.0, 1.2), 100.0).curtailment_mw, 0.0);
}

// ---------------------------------------------------------------------------
// Frequency.

TEST(Frequency, NadirSlackMatchesClosedForm)
{
    const auto f = fixtures::default_freq();
    EXPECT_NEAR(nadir_slack(10.0, 3.0, {}, f), 30.0 - 27.75, 1e-12);
    EXPECT_NEAR(nadir_slack(27.75, 1.0, {}, f), 0.0, 1e-12);
    // SI units add (dP T_d / 4) H_s^2 = 0.75 * 4.
    EXPECT_NEAR(nadir_slack(20.0, 2.0, {2.0}, f), 40.0 - 27.75 - 3.0, 1e-12);
}

TEST(Frequency, RocofSlack)
{
    const auto f = fixtures::default_freq();
    EXPECT_NEAR(rocof_slack(15.0, f), 0.5 - 0.3 * 50.0 / 30.0, 1e-12);
    EXPECT_NEAR(rocof_slack(15.0, f), 0.0, 1e-12);
    EXPECT_EQ(rocof_slack(0.0, f), -kInf);
}

TEST(Frequency, BoundaryScheduleMeetsNadirInTimeDomain)
{
    const auto   f  = fixtures::default_freq();
    const double x1 = nadir_constant(f);
    for (double R : {0.5, 1.0, 3.0, 10.0})
    {
        const double H   = x1 / R;
        const double dev = simulate_nadir(H, R, f);
        EXPECT_NEAR(dev / f.df_lim, 1.0, 0.02) << "R=" << R;
    }
}

TEST(Frequency, SlackSignPredictsTimeDomainCompliance)
{
    const auto   f  = fixtures::default_freq();
    const double x1 = nadir_constant(f);
    for (double ratio : {0.7, 1.3})
    {
        const double R = 2.0, H = ratio * x1 / R;
        const bool   ok = nadir_slack(H, R, {}, f) >= 0.0;
        EXPECT_EQ(ok, simulate_nadir(H, R, f) <= f.df_lim * 1.02) << ratio;
    }
}

TEST(Frequency, UndampedNadirIsExact)
{
    auto f      = fixtures::default_freq();
    f.damping_d = 0.0;
    const double H = 10.0, R = 2.0;
    EXPECT_NEAR(simulate_nadir(H, R, f), f.dp_l * f.dp_l * f.t_d / (4.0 * H * R), 1e-6);
}

TEST(Frequency, ReportRebuildsInertiaFromCommitment)
{
    auto gc = fixtures::two_bus();
    auto s  = single_node(0.4, 0.1);
    s.config[0] = DeviceConfig::all_on(gc);
    // H = 5 * 2 = 10, R = 1: HR = 10 < 27.75 and RoCoF = 0.3*50/20 = 0.75.
    const auto r = frequency_slacks(s, gc);
    EXPECT_NEAR(r.nadir_slack_min, 10.0 - 27.75, 1e-9);
    EXPECT_NEAR(r.rocof_slack_min, 0.5 - 0.75, 1e-9);
    EXPECT_DOUBLE_EQ(r.violation_pct, 100.0);
}

// ---------------------------------------------------------------------------
// Relaxation quality.

TEST(Rank1, DeviationOfAHandPoint)
{
    ScheduleSolution s = single_node(0.0, 0.0);
    s.branches         = {{0, 1}};
    s.c_ii             = {{1.0, 1.0}};
    s.c_ij             = {{0.9}};
    s.s_ij             = {{0.0}};
    EXPECT_NEAR(rank1_deviation(s).mean, 0.19, 1e-12);
    s.c_ij = {{std::cos(0.3) * 1.1}};
    s.s_ij = {{std::sin(0.3) * 1.1}};
    s.c_ii = {{1.0, 1.21}};
    EXPECT_NEAR(rank1_deviation(s).mean, 0.0, 1e-12);
}

// ---------------------------------------------------------------------------
// Strength.

TEST(Strength, StatcomRatingLeavesStrengthUnchanged)
{
    auto gc = fixtures::two_bus();
    gc.shunt_devices.push_back({"st", ShuntKind::Statcom, 2, 0.0, 0.0, 0.0});
    auto s  = single_node(0.4, 0.1);
    s.config[0] = DeviceConfig::all_on(gc);
    std::vector< double > seen;
    for (double q : {0.0, 0.1, 0.2, 0.3})
    {
        gc.shunt_devices[0].q_rating = q;
        gc.shunt_devices[0].i_max    = q;
        seen.push_back(schedule_strength(s, gc).reference_mean);
    }
    for (double v : seen)
        EXPECT_NEAR(v, seen[0], 1e-12);
}

TEST(Strength, CondenserRatingStrengthens)
{
    auto gc = fixtures::two_bus();
    gc.shunt_devices.push_back({"sc", ShuntKind::SynchronousCondenser, 2, 0.1, 0.0, 0.2});
    auto s  = single_node(0.4, 0.1);
    double last = -1.0;
    for (double q : {0.1, 0.2, 0.4, 0.8})
    {
        gc.shunt_devices[0].q_rating = q;
        s.config[0] = DeviceConfig::all_on(gc);
        const auto st = schedule_strength(s, gc);
        EXPECT_GT(st.reference_mean, last);
        EXPECT_NEAR(st.scheduled_mean, st.reference_mean, 1e-12);
        last = st.reference_mean;
    }
}

// ---------------------------------------------------------------------------
// Total cost of ownership.

TEST(Tco, ReferenceValues)
{
    const auto a = tco(30.0, 0.008, 0.0, 1.0e6);
    EXPECT_NEAR(a.p_loss, 0.24, 1e-12);
    EXPECT_NEAR(a.e_loss, 2102.4, 1e-9);
    EXPECT_NEAR(a.c_oandm, 1.0e4, 1e-9);
    const auto b = tco(30.0, 0.015, 50.0, 0.0);
    EXPECT_NEAR(b.p_loss, 0.45, 1e-12);
    EXPECT_NEAR(b.e_loss, 3942.0, 1e-9);
    EXPECT_NEAR(b.c_loss, 50.0 * 3942.0, 1e-6);
}

TEST(Tco, ZeroRatingHasNoLoss)
{
    const auto r = tco(0.0, 0.01, 50.0, 0.0);
    EXPECT_EQ(r.p_loss, 0.0);
    EXPECT_EQ(r.c_loss, 0.0);
}

TEST(Tco, LinearInRatingAndAnnualized)
{
    const auto a = tco(50.0, 0.003, 40.0, 0.0), b = tco(150.0, 0.003, 40.0, 0.0);
    EXPECT_NEAR(b.c_loss, 3.0 * a.c_loss, 1e-9);
    EXPECT_NEAR(a.e_loss / a.p_loss, kHoursPerYear, 1e-9);
}

TEST(Tco, NegativeInputsRejected)
{
    EXPECT_THROW(tco(-1.0, 0.01, 1.0, 1.0), Error);
    EXPECT_THROW(tco(1.0, -0.01, 1.0, 1.0), Error);
}

// ---------------------------------------------------------------------------
// Solved schedules.

namespace
{

struct Solved
{
    GridCase         gc;
    BuiltProgram     bp;
    ScheduleSolution s;
    BnbResult        r;
};

/// Two-bus case with priced line losses, so the relaxation has a reason to
/// be exact. A grid-forming unit beside the SG supplies free energy and
/// removes that reason.
GridCase lossy_two_bus(bool with_gfm)
{
    auto gc                   = fixtures::two_bus();
    gc.lines[0].r             = 0.02;
    gc.sync_gens[0].inertia_h = 20.0;
    gc.sync_gens[0].pfr_gain  = 3.0;
    if (!with_gfm)
        return gc;
    GridFormingUnit v;
    v.name         = "v1";
    v.bus          = 1;
    v.x_transient  = 0.3;
    v.p_max        = 0.3;
    v.q_max        = 0.3;
    v.alpha_levels = 2;
    gc.gfm_units   = {v};
    return gc;
}

Solved solve_two_bus(Mode mode, const SurrogateModel* sur, bool with_gfm = true)
{
    const auto gc   = lossy_two_bus(with_gfm);
    const auto tree = chain(gc, 1);
    BuildOptions o;
    o.mode = mode;
    Solved out{gc, build(gc, tree, sur, o), {}, {}};
    out.r = solve_misocp(out.bp.program);
    if (out.r.has_incumbent)
        out.s = extract_schedule(out.bp, tree, out.r.x, out.r.objective);
    return out;
}

} // namespace

TEST(Solved, ConvexRelaxationIsTight)
{
    const auto res = solve_two_bus(Mode::BaseSi, nullptr, false);
    ASSERT_EQ(res.r.status, MipStatus::Optimal);
    EXPECT_LE(soc_gap(res.bp, res.s.point).max, 1e-6);
    EXPECT_LE(rank1_deviation(res.s).mean, 1e-2);
    const auto f = frequency_slacks(res.s, res.gc);
    EXPECT_GE(f.nadir_slack_min, -1e-6);
    EXPECT_EQ(f.violation_pct, 0.0);
}

TEST(Solved, StabilityConstrainedScheduleHasNoViolations)
{
    const auto sur = fit_case(lossy_two_bus(true), 2);
    const auto res = solve_two_bus(Mode::VscSi, &sur);
    ASSERT_EQ(res.r.status, MipStatus::Optimal);
    const auto v = violation_rate(res.s, res.gc, &sur);
    EXPECT_LE(v.rate_pct, 1.0);
    EXPECT_EQ(v.surrogate_rate_pct, 0.0);
}

TEST(Solved, CsvRowMatchesHeader)
{
    const auto res = solve_two_bus(Mode::BaseSi, nullptr);
    ASSERT_TRUE(res.r.has_incumbent);
    auto m       = evaluate_schedule(res.s, res.bp, res.gc);
    m.experiment = "NONE";
    const auto header = csv_header(m.ibg_bus);
    const auto row    = csv_row(m);
    EXPECT_EQ(std::count(header.begin(), header.end(), ','), std::count(row.begin(), row.end(), ','));
    EXPECT_EQ(metrics_columns(m.ibg_bus).size(), 21u + 2u * m.ibg_bus.size());
    EXPECT_NE(header.find("Gamma_2"), std::string::npos);
    EXPECT_NEAR(m.cost_expected, res.r.objective, 1e-9);
}

TEST(Solved, ExtractRejectsWrongDimension)
{
    const auto res = solve_two_bus(Mode::BaseSi, nullptr);
    const auto tree = chain(res.gc, 1);
    EXPECT_THROW(extract_schedule(res.bp, tree, {1.0}, 0.0), Error);
}
