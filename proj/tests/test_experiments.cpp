#include "fixtures.hpp"

#include "vscuc/experiments.hpp"

#include <gtest/gtest.h>

using namespace vscuc;

namespace
{

/// One bus with a cheap base unit and an expensive peaker; frequency
/// constraints are off so only commitment logic shapes the schedule.
GridCase peaker_case(const std::vector< double >& load_profile, int peaker_min_up)
{
    GridCase gc;
    gc.name     = "peaker";
    gc.per_unit = true;
    gc.buses    = {{1, 0.95, 1.05, 1.0, 0.0, 0.0, 0.0, true}};
    SyncGen base;
    base.name        = "base";
    base.bus         = 1;
    base.p_max       = 1.0;
    base.q_min       = -1.0;
    base.q_max       = 1.0;
    base.cost_lin    = 10.0;
    base.initial_on  = true;
    SyncGen peak     = base;
    peak.name         = "peak";
    peak.cost_lin     = 30.0;
    peak.cost_noload  = 50.0;
    peak.min_up       = peaker_min_up;
    peak.initial_on   = false;
    gc.sync_gens      = {base, peak};
    gc.freq           = fixtures::default_freq();
    gc.shed_cost      = 10000.0;
    gc.forecast.load_profile = load_profile;
    return gc;
}

RollingOptions myopic(int steps)
{
    RollingOptions o;
    o.mode                = Mode::BaseSi;
    o.steps               = steps;
    o.lookahead           = 1;
    o.build.freq_enabled  = false;
    o.build.rocof_enabled = false;
    o.solver.rel_gap      = 0.0;
    return o;
}

GridCase with_statcom(GridCase gc)
{
    gc.shunt_devices.push_back({"st", ShuntKind::Statcom, 2, 0.1, 0.1, 0.0});
    return gc;
}

MetricsReport row(const std::string& mode, double x, double cost, double strength)
{
    MetricsReport m;
    m.mode          = mode;
    m.sweep_value   = x;
    m.cost_expected = cost;
    m.strength_mean = strength;
    return m;
}

} // namespace

// ---------------------------------------------------------------------------
// Case patching.

TEST(Patch, WindCapacityScalesAvailabilityAndRating)
{
    auto gc = fixtures::two_bus();
    gc.gfl_ibgs[0].available_profile = {0.4, 0.8};
    const auto p = with_wind_capacity(gc, 250.0);
    EXPECT_NEAR(installed_wind_mw(p), 250.0, 1e-9);
    EXPECT_NEAR(p.gfl_ibgs[0].s_max, 2.5, 1e-12);
    EXPECT_NEAR(p.gfl_ibgs[0].available_profile[1], 2.0, 1e-12);
    EXPECT_THROW(with_wind_capacity(gc, -1.0), Error);
}

TEST(Patch, StatcomRatingSetsCurrentLimit)
{
    const auto p = with_statcom_rating(with_statcom(fixtures::two_bus()), 30.0);
    EXPECT_NEAR(p.shunt_devices[0].q_rating, 0.3, 1e-12);
    EXPECT_NEAR(p.shunt_devices[0].i_max, 0.3, 1e-12);
    EXPECT_THROW(with_statcom_rating(fixtures::two_bus(), 10.0), Error);
}

TEST(Patch, StatcomSiteMovesDevice)
{
    const auto gc = with_statcom(fixtures::two_bus());
    EXPECT_EQ(with_statcom_site(gc, 1).shunt_devices[0].bus, 1);
    EXPECT_THROW(with_statcom_site(gc, 7), Error);
}

TEST(Patch, CondenserAddedAtStatcomBusAndRemovedAtZero)
{
    const auto gc = with_statcom(fixtures::two_bus());
    const auto p  = with_sc_rating(gc, 20.0, 0, 0.2);
    ASSERT_EQ(p.num_condensers(), 1u);
    const auto* sc = p.devices_of(ShuntKind::SynchronousCondenser)[0];
    EXPECT_EQ(sc->bus, 2);
    EXPECT_NEAR(sc->q_rating, 0.2, 1e-12);
    EXPECT_NEAR(with_sc_rating(p, 40.0, 0, 0.2).devices_of(ShuntKind::SynchronousCondenser)[0]->q_rating, 0.4, 1e-12);
    EXPECT_EQ(with_sc_rating(p, 0.0, 0, 0.2).num_condensers(), 0u);
}

TEST(Spec, RejectsUnsortedOrEmptyInputs)
{
    ExperimentSpec s;
    s.axis   = SweepAxis::WindCapacity;
    s.values = {200.0, 100.0};
    EXPECT_THROW(s.validate(), Error);
    s.values = {};
    EXPECT_THROW(s.validate(), Error);
    s.values = {100.0};
    s.modes  = {};
    EXPECT_THROW(s.validate(), Error);
    EXPECT_THROW(parse_axis("WIND"), Error);
    EXPECT_EQ(parse_axis("SC_RATING"), SweepAxis::ScRating);
}

TEST(Tree, BranchingBeyondLookAheadIsDropped)
{
    auto gc = fixtures::two_bus();
    gc.gfl_ibgs[0].available_profile = {0.4, 0.4, 0.4};
    gc.forecast.quantiles            = {{0.5, -0.1, 0.0}, {0.5, 0.1, 0.0}};
    TreeConfig t;
    t.horizon         = 1;
    t.branching_hours = std::vector< int >{1, 2};
    EXPECT_EQ(make_tree(gc, t).size(), 1u);
    t.horizon = 3;
    EXPECT_EQ(make_tree(gc, t).size(), 1u + 2u + 4u);
}

// ---------------------------------------------------------------------------
// Sweeps.

TEST(Sweep, ThreeModeComparisonTable)
{
    auto gc = fixtures::two_bus();
    gc.lines[0].r               = 0.02;
    gc.sync_gens[0].inertia_h   = 20.0;
    gc.sync_gens[0].pfr_gain    = 3.0;
    GridFormingUnit v;
    v.name         = "v1";
    v.bus          = 1;
    v.x_transient  = 0.3;
    v.p_max        = 0.3;
    v.q_max        = 0.3;
    gc.gfm_units   = {v};
    ExperimentSpec spec;
    spec.tree.horizon = 1;
    std::vector< std::string > seen;
    const auto res = run_sweep(gc, spec, [&](const MetricsReport& m) { seen.push_back(m.mode); });
    ASSERT_EQ(res.rows.size(), 3u);
    EXPECT_EQ(res.failures, 0u);
    EXPECT_EQ(seen, (std::vector< std::string >{"BASE_SI", "VSC_SI", "VSC_Q_SI"}));
    for (const auto& r : res.rows)
    {
        EXPECT_EQ(r.status, "OPTIMAL");
        EXPECT_EQ(r.experiment, "NONE");
    }
    // Every VSC feasible point is BASE feasible; slack is the gap on max(1, |cost|).
    auto slack = [](double v) { return 0.02 * std::max(1.0, std::abs(v)); };
    EXPECT_LE(res.rows[0].objective, res.rows[1].objective + slack(res.rows[1].objective));
    EXPECT_LE(res.rows[2].objective, res.rows[1].objective + slack(res.rows[1].objective));
}

TEST(Sweep, PointFailuresAreRecordedAndSweepContinues)
{
    ExperimentSpec spec;
    spec.axis         = SweepAxis::StatcomRating;
    spec.values       = {0.0, 10.0};
    spec.modes        = {Mode::BaseSi};
    spec.tree.horizon = 1;
    const auto res    = run_sweep(fixtures::two_bus(), spec);
    ASSERT_EQ(res.rows.size(), 2u);
    EXPECT_EQ(res.failures, 2u);
    EXPECT_EQ(res.diagnostics.size(), 2u);
    EXPECT_EQ(res.rows[0].status, "ERROR");
    EXPECT_TRUE(std::isnan(res.rows[1].objective));
}

TEST(Sweep, ShortfallPointCompletesWithShedding)
{
    auto gc               = fixtures::two_bus();
    gc.buses[1].p_load    = 1.0; // beyond the SG and the available wind
    gc.sync_gens[0].p_max = 0.1;
    ExperimentSpec spec;
    spec.modes        = {Mode::BaseSi};
    spec.tree.horizon = 1;
    spec.build.freq_enabled  = false;
    spec.build.rocof_enabled = false;
    const auto res    = run_sweep(gc, spec);
    ASSERT_EQ(res.rows.size(), 1u);
    EXPECT_EQ(res.failures, 0u);
    EXPECT_GT(res.rows[0].shed_mw, 0.0);
}

TEST(Sweep, TableCsvHasHeaderAndRows)
{
    const auto text = table_csv({row("BASE_SI", 1.0, 2.0, 3.0)}, {23, 24});
    EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 2);
    EXPECT_EQ(text.rfind("experiment,sweep_value,mode", 0), 0u);
}

// ---------------------------------------------------------------------------
// Plot data.

TEST(PlotData, EmptyTableGivesHeaderOnly)
{
    const auto text = emit_plotdata({}, "fig4", {Mode::BaseSi, Mode::VscSi});
    EXPECT_EQ(text, "wind_mw,cost_per_h_BASE_SI,cost_per_h_VSC_SI,viol_pct_BASE_SI,viol_pct_VSC_SI\n");
}

TEST(PlotData, ProjectsModesIntoColumns)
{
    const std::vector< MetricsReport > t{row("VSC_SI", 200.0, 12.0, 4.0), row("BASE_SI", 100.0, 9.0, 4.0),
                                         row("BASE_SI", 200.0, 10.0, 4.0), row("VSC_SI", 100.0, 11.0, 4.0)};
    const auto text = emit_plotdata(t, "fig4", {Mode::BaseSi, Mode::VscSi});
    EXPECT_EQ(text, "wind_mw,cost_per_h_BASE_SI,cost_per_h_VSC_SI,viol_pct_BASE_SI,viol_pct_VSC_SI\n"
                    "100,9,11,0,0\n"
                    "200,10,12,0,0\n");
}

TEST(PlotData, StatcomFigureCarriesStrengthColumn)
{
    const auto text = emit_plotdata({row("VSC_SI", 10.0, 5.0, 3.5)}, "fig5", {Mode::VscSi});
    EXPECT_EQ(text, "statcom_mvar,cost_per_h_VSC_SI,viol_pct_VSC_SI,strength_mean\n10,5,0,3.5\n");
}

TEST(PlotData, MissingModeIsNan)
{
    const auto text = emit_plotdata({row("VSC_SI", 10.0, 5.0, 3.5)}, "fig12", {Mode::BaseSi, Mode::VscSi});
    EXPECT_NE(text.find("10,nan,5,nan,0,3.5"), std::string::npos) << text;
}

TEST(PlotData, UnknownFigureOrColumnRejected)
{
    EXPECT_THROW(emit_plotdata({}, "fig99", {Mode::BaseSi}), Error);
    EXPECT_THROW(metric_value(MetricsReport{}, "nope"), Error);
}

// ---------------------------------------------------------------------------
// Manifest.

TEST(Manifest, HashIsStableAndConfigSensitive)
{
    ExperimentSpec s;
    s.case_path = "case.json";
    const auto a = run_manifest(s, "{}");
    const auto b = run_manifest(s, "{}");
    EXPECT_EQ(a["config_hash"], b["config_hash"]);
    s.solver.rel_gap = 0.01;
    EXPECT_NE(run_manifest(s, "{}")["config_hash"], a["config_hash"]);
    EXPECT_NE(run_manifest(s, "{ }")["case_hash"], a["case_hash"]);
    EXPECT_EQ(a["versions"]["vscuc"], kVersion);
    // FNV-1a reference value of the empty string.
    EXPECT_EQ(fnv1a(""), 0xcbf29ce484222325ull);
}

// ---------------------------------------------------------------------------
// Rolling horizon.

TEST(Rolling, StationaryForecastGivesIdenticalCommitments)
{
    const auto gc = peaker_case({0.8, 0.8, 0.8}, 1);
    auto       o  = myopic(2);
    o.lookahead   = 2;
    const auto r  = run_rolling(gc, o, nullptr);
    ASSERT_EQ(r.steps.size(), 2u);
    EXPECT_EQ(r.steps[0].x, r.steps[1].x);
    EXPECT_NEAR(r.steps[0].hour_cost, r.steps[1].hour_cost, 1e-6);
    EXPECT_TRUE(check_commitment_sequence(gc, r.steps).empty());
}

TEST(Rolling, CarriedMinimumUpTimeKeepsPeakerOn)
{
    const std::vector< double > load{0.5, 1.5, 0.5, 0.5, 0.5};
    const auto                  held = run_rolling(peaker_case(load, 3), myopic(5), nullptr);
    const auto                  free = run_rolling(peaker_case(load, 1), myopic(5), nullptr);
    std::vector< double >       on_held, on_free;
    for (std::size_t k = 0; k < 5; ++k)
    {
        on_held.push_back(std::round(held.steps[k].x[1]));
        on_free.push_back(std::round(free.steps[k].x[1]));
    }
    EXPECT_EQ(on_held, (std::vector< double >{0, 1, 1, 1, 0}));
    EXPECT_EQ(on_free, (std::vector< double >{0, 1, 0, 0, 0}));
    EXPECT_GT(held.total_cost, free.total_cost);
    EXPECT_TRUE(check_commitment_sequence(peaker_case(load, 3), held.steps).empty());
}

TEST(Rolling, RebuiltTreeUsesUpdatedForecast)
{
    auto gc = peaker_case({0.5, 0.7, 0.9}, 1);
    gc.forecast.quantiles = {{0.5, 0.0, -0.1}, {0.5, 0.0, 0.1}};
    TreeConfig first;
    first.horizon = 2;
    TreeConfig second;
    second.start_hour = 1;
    second.horizon    = 2;
    const auto a = make_tree(gc, first), b = make_tree(gc, second);
    const auto root_b = node_realization(b, 0).load_p[0];
    for (int id : a.nodes_at_depth(1))
        EXPECT_GT(std::abs(node_realization(a, id).load_p[0] - root_b), 1e-6);
    EXPECT_NEAR(root_b, 0.7, 1e-12);
}

TEST(Rolling, SequenceCheckerFlagsEarlyShutdown)
{
    const auto        gc = peaker_case({0.5, 0.5, 0.5}, 3);
    RollingStep       on, off;
    on.x  = {1.0, 1.0};
    off.x = {1.0, 0.0};
    const auto issues = check_commitment_sequence(gc, {on, off, off});
    ASSERT_EQ(issues.size(), 1u);
    EXPECT_NE(issues[0].find("peak"), std::string::npos);
}

TEST(Rolling, ProfileTooShortRejected)
{
    EXPECT_THROW(run_rolling(peaker_case({0.5, 0.5}, 1), myopic(3), nullptr), Error);
}

TEST(Rolling, LookAheadTruncatedAtProfileEnd)
{
    auto       o = myopic(3);
    o.lookahead  = 4;
    const auto r = run_rolling(peaker_case({0.5, 0.5, 0.5}, 1), o, nullptr);
    EXPECT_EQ(r.steps[0].lookahead, 3);
    EXPECT_EQ(r.steps[2].lookahead, 1);
}
