#ifndef VSCUC_EXPERIMENTS_HPP
#define VSCUC_EXPERIMENTS_HPP

// Sweep harness and rolling-horizon driver. Every solve goes case -> tree ->
// program -> branch-and-bound -> ex-post metrics.

#include "vscuc/evaluate.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <fstream>
#include <functional>
#include <map>

namespace vscuc
{

inline constexpr const char* kVersion = "1.0.0";

enum class SweepAxis
{
    None,
    WindCapacity,  ///< total installed wind, MW
    StatcomRating, ///< MVAr, applied to every STATCOM
    StatcomSite,   ///< bus id of the first STATCOM
    ScRating,      ///< MVAr of the synchronous condenser
};

inline const char* to_string(SweepAxis a)
{
    switch (a)
    {
    case SweepAxis::None: return "NONE";
    case SweepAxis::WindCapacity: return "WIND_CAPACITY";
    case SweepAxis::StatcomRating: return "STATCOM_RATING";
    case SweepAxis::StatcomSite: return "STATCOM_SITE";
    case SweepAxis::ScRating: return "SC_RATING";
    }
    return "?";
}

inline SweepAxis parse_axis(const std::string& s)
{
    for (auto a : {SweepAxis::None, SweepAxis::WindCapacity, SweepAxis::StatcomRating, SweepAxis::StatcomSite,
                   SweepAxis::ScRating})
        if (s == to_string(a))
            return a;
    throw Error(ErrorCode::InvalidArgument,
                "unknown sweep axis '" + s + "' (expected NONE, WIND_CAPACITY, STATCOM_RATING, STATCOM_SITE or SC_RATING)");
}

struct TreeConfig
{
    int start_hour = 0;
    int horizon    = 6;
    std::optional< std::vector< int > >         branching_hours; ///< case value when unset
    std::optional< std::vector< QuantileBin > > quantiles;       ///< case value when unset
};

inline ScenarioTree make_tree(const GridCase& gc, const TreeConfig& t)
{
    const auto& q = t.quantiles ? *t.quantiles : gc.forecast.quantiles;
    auto        b = t.branching_hours ? *t.branching_hours : gc.forecast.branching_hours;
    // Branching hours beyond a short look-ahead are dropped rather than rejected.
    std::erase_if(b, [&](int h) { return h >= t.horizon; });
    return build_tree(make_profile(gc, t.start_hour, t.horizon, q), b);
}

struct ExperimentSpec
{
    std::string           name = "experiment";
    std::string           case_path;
    std::vector< Mode >   modes{Mode::BaseSi, Mode::VscSi, Mode::VscQSi};
    SweepAxis             axis = SweepAxis::None;
    std::vector< double > values;
    TreeConfig            tree;
    BnbOptions            solver;
    BuildOptions          build;
    /// Condenser added by SC sweeps when the case has none. Bus 0 selects the
    /// first STATCOM bus, else the first GFL-IBG bus.
    int    sc_bus         = 0;
    double sc_x_transient = 0.2;

    void validate() const
    {
        if (modes.empty())
            throw Error(ErrorCode::InvalidArgument, "experiment needs at least one mode");
        if (axis != SweepAxis::None && values.empty())
            throw Error(ErrorCode::InvalidArgument, "sweep axis " + std::string(to_string(axis)) + " needs values");
        for (double v : values)
            if (!std::isfinite(v))
                throw Error(ErrorCode::InvalidArgument, "sweep values must be finite");
        if (!std::is_sorted(values.begin(), values.end()))
            throw Error(ErrorCode::InvalidArgument, "sweep values must be sorted");
        if (tree.horizon < 1)
            throw Error(ErrorCode::InvalidArgument, "horizon must be positive");
    }
};

// ---------------------------------------------------------------------------
// Case patching.

inline double installed_wind_mw(const GridCase& gc)
{
    double s = 0.0;
    for (const auto& c : gc.gfl_ibgs)
        s += c.s_max;
    return s * gc.base_mva;
}

/// Scales every GFL-IBG's availability profile and s_max to a new total.
inline GridCase with_wind_capacity(GridCase gc, double total_mw)
{
    const double base = installed_wind_mw(gc);
    if (!(base > 0.0))
        throw Error(ErrorCode::InvalidArgument, "case has no installed wind to scale");
    if (total_mw < 0.0)
        throw Error(ErrorCode::InvalidArgument, "wind capacity must be non-negative");
    const double k = total_mw / base;
    for (auto& c : gc.gfl_ibgs)
    {
        c.s_max *= k;
        for (double& a : c.available_profile)
            a *= k;
        c.h_si_max *= k;
    }
    return gc;
}

inline GridCase with_statcom_rating(GridCase gc, double mvar)
{
    if (mvar < 0.0)
        throw Error(ErrorCode::InvalidArgument, "STATCOM rating must be non-negative");
    bool any = false;
    for (auto& d : gc.shunt_devices)
        if (d.kind == ShuntKind::Statcom)
        {
            d.q_rating = mvar / gc.base_mva;
            d.i_max    = mvar / gc.base_mva;
            any        = true;
        }
    if (!any)
        throw Error(ErrorCode::InvalidArgument, "case has no STATCOM to rate");
    return gc;
}

inline GridCase with_statcom_site(GridCase gc, int bus)
{
    const BusIndex idx(gc);
    (void)idx(bus);
    for (auto& d : gc.shunt_devices)
        if (d.kind == ShuntKind::Statcom)
        {
            d.bus = bus;
            return gc;
        }
    throw Error(ErrorCode::InvalidArgument, "case has no STATCOM to move");
}

/// Sets the first condenser's rating, adding one when the case has none. A
/// zero rating removes it.
inline GridCase with_sc_rating(GridCase gc, double mvar, int bus, double x_transient)
{
    if (mvar < 0.0)
        throw Error(ErrorCode::InvalidArgument, "condenser rating must be non-negative");
    auto it = std::find_if(gc.shunt_devices.begin(), gc.shunt_devices.end(),
                           [](const ShuntReactiveDevice& d) { return d.kind == ShuntKind::SynchronousCondenser; });
    if (mvar == 0.0)
    {
        if (it != gc.shunt_devices.end())
            gc.shunt_devices.erase(it);
        return gc;
    }
    if (it == gc.shunt_devices.end())
    {
        if (bus == 0)
        {
            const auto st = gc.devices_of(ShuntKind::Statcom);
            if (!st.empty())
                bus = st[0]->bus;
            else if (!gc.gfl_ibgs.empty())
                bus = gc.gfl_ibgs[0].bus;
            else
                throw Error(ErrorCode::InvalidArgument, "no bus to place the condenser at");
        }
        ShuntReactiveDevice sc;
        sc.name        = "SC" + std::to_string(bus);
        sc.kind        = ShuntKind::SynchronousCondenser;
        sc.bus         = bus;
        sc.x_transient = x_transient;
        gc.shunt_devices.push_back(sc);
        it = gc.shunt_devices.end() - 1;
    }
    it->q_rating = mvar / gc.base_mva;
    return gc;
}

inline GridCase patch_case(const GridCase& gc, const ExperimentSpec& spec, double value)
{
    switch (spec.axis)
    {
    case SweepAxis::None: return gc;
    case SweepAxis::WindCapacity: return with_wind_capacity(gc, value);
    case SweepAxis::StatcomRating: return with_statcom_rating(gc, value);
    case SweepAxis::StatcomSite: return with_statcom_site(gc, static_cast< int >(std::lround(value)));
    case SweepAxis::ScRating: return with_sc_rating(gc, value, spec.sc_bus, spec.sc_x_transient);
    }
    return gc;
}

/// Training grid size: the finest alpha grid of the fleet.
inline int surrogate_levels(const GridCase& gc)
{
    int n = 2;
    for (const auto& v : gc.gfm_units)
        n = std::max(n, v.alpha_levels);
    return n;
}

// ---------------------------------------------------------------------------
// Single solve.

struct SolveOutcome
{
    BnbResult                       mip;
    std::optional< ScheduleSolution > schedule;
    MetricsReport                   metrics;
    ProgramCounts                   counts;
};

inline MetricsReport failed_metrics(const GridCase& gc, Mode mode, const std::string& status)
{
    const double  nan = std::numeric_limits< double >::quiet_NaN();
    MetricsReport m;
    m.mode   = to_string(mode);
    m.status = status;
    for (double* v : {&m.cost_expected, &m.objective, &m.rel_gap, &m.violation_rate_pct, &m.surrogate_violation_pct,
                      &m.curtailment_mw, &m.shed_mw, &m.freq_violation_pct, &m.nadir_slack_min, &m.rocof_slack_min,
                      &m.soc_gap_mean, &m.soc_gap_max, &m.rank1_mean, &m.strength_mean, &m.strength_scheduled})
        *v = nan;
    for (const auto& c : gc.gfl_ibgs)
    {
        m.ibg_bus.push_back(c.bus);
        m.ibg_voltage.push_back(nan);
        m.ibg_gamma.push_back(nan);
    }
    return m;
}

inline SolveOutcome solve_case(const GridCase& gc, const ScenarioTree& tree, Mode mode, const SurrogateModel* sur,
                               BuildOptions build_opt, const BnbOptions& solver)
{
    build_opt.mode = mode;
    const auto   bp = build(gc, tree, is_vsc(mode) ? sur : nullptr, build_opt);
    SolveOutcome out;
    out.counts = count(bp.program);
    out.mip    = solve_misocp(bp.program, solver);
    if (!out.mip.has_incumbent)
    {
        out.metrics        = failed_metrics(gc, mode, to_string(out.mip.status));
        out.metrics.nodes  = out.mip.node_count;
        out.metrics.wall_time_s = out.mip.wall_time;
        out.metrics.rel_gap = out.mip.rel_gap;
        return out;
    }
    out.schedule              = extract_schedule(bp, tree, out.mip.x, out.mip.objective);
    out.metrics               = evaluate_schedule(*out.schedule, bp, gc, is_vsc(mode) ? sur : nullptr);
    out.metrics.status        = to_string(out.mip.status);
    out.metrics.rel_gap       = out.mip.rel_gap;
    out.metrics.nodes         = out.mip.node_count;
    out.metrics.wall_time_s   = out.mip.wall_time;
    return out;
}

// ---------------------------------------------------------------------------
// Sweeps.

struct SweepResult
{
    std::vector< MetricsReport > rows;
    std::size_t                  failures = 0;
    std::vector< std::string >   diagnostics; ///< one per failed point
};

using ProgressFn = std::function< void(const MetricsReport&) >;

/// Runs every (value, mode) pair. Point failures are recorded and the sweep
/// continues. A surrogate is fitted once per distinct admittance structure.
inline SweepResult run_sweep(const GridCase& base, const ExperimentSpec& spec, const ProgressFn& progress = {})
{
    spec.validate();
    SweepResult                     out;
    const std::vector< double >     values = spec.axis == SweepAxis::None ? std::vector< double >{0.0} : spec.values;
    const bool                      need_sur = std::any_of(spec.modes.begin(), spec.modes.end(), is_vsc);
    std::optional< SurrogateModel > shared;

    for (double value : values)
    {
        std::optional< GridCase >       gc;
        std::optional< SurrogateModel > local;
        std::optional< ScenarioTree >   tree;
        std::string                     setup_error;
        try
        {
            gc   = patch_case(base, spec, value);
            tree = make_tree(*gc, spec.tree);
            if (need_sur)
            {
                // Only condensers change the admittance structure.
                if (spec.axis == SweepAxis::ScRating)
                    local = fit_case(*gc, surrogate_levels(*gc));
                else if (!shared)
                    shared = fit_case(*gc, surrogate_levels(*gc));
            }
        }
        catch (const std::exception& e)
        {
            setup_error = e.what();
        }
        const SurrogateModel* sur = local ? &*local : (shared ? &*shared : nullptr);

        for (Mode mode : spec.modes)
        {
            MetricsReport m;
            if (!setup_error.empty())
            {
                m = failed_metrics(gc ? *gc : base, mode, "ERROR");
                out.diagnostics.push_back(std::string(to_string(mode)) + " @ " + std::to_string(value) + ": " +
                                          setup_error);
            }
            else
            {
                try
                {
                    m = solve_case(*gc, *tree, mode, sur, spec.build, spec.solver).metrics;
                    if (m.status != "OPTIMAL")
                        out.diagnostics.push_back(std::string(to_string(mode)) + " @ " + std::to_string(value) +
                                                  ": solver status " + m.status);
                }
                catch (const std::exception& e)
                {
                    m = failed_metrics(*gc, mode, "ERROR");
                    out.diagnostics.push_back(std::string(to_string(mode)) + " @ " + std::to_string(value) + ": " +
                                              e.what());
                }
            }
            m.experiment  = to_string(spec.axis);
            m.sweep_value = value;
            if (!std::isfinite(m.objective))
                ++out.failures;
            if (progress)
                progress(m);
            out.rows.push_back(std::move(m));
        }
    }
    return out;
}

inline std::string table_csv(const std::vector< MetricsReport >& rows, const std::vector< int >& ibg_bus)
{
    std::string out = csv_header(ibg_bus) + "\n";
    for (const auto& r : rows)
        out += csv_row(r) + "\n";
    return out;
}

// ---------------------------------------------------------------------------
// Plot data.

struct FigureSpec
{
    std::string                id;
    std::string                x_column;
    std::vector< std::string > per_mode; ///< metric columns repeated per mode
    std::vector< std::string > shared;   ///< mode-independent metric columns, taken from the first mode
};

inline const std::vector< FigureSpec >& figure_specs()
{
    static const std::vector< FigureSpec > specs{
        {"fig4", "wind_mw", {"cost_per_h", "viol_pct"}, {}},
        {"fig5", "statcom_mvar", {"cost_per_h", "viol_pct"}, {"strength_mean"}},
        {"fig6", "wind_mw", {"curtail_mw", "shed_mw"}, {}},
        {"fig9", "wind_mw", {"nadir_slack_min", "rocof_slack_min", "freq_viol_pct"}, {}},
        {"fig10", "wind_mw", {"rank1_mean", "soc_gap_max"}, {}},
        {"fig11", "statcom_bus", {"cost_per_h", "viol_pct"}, {}},
        {"fig12", "sc_mvar", {"cost_per_h", "viol_pct"}, {"strength_mean"}},
    };
    return specs;
}

inline const FigureSpec& figure_spec(const std::string& id)
{
    for (const auto& f : figure_specs())
        if (f.id == id)
            return f;
    throw Error(ErrorCode::InvalidArgument, "unknown figure '" + id + "'");
}

/// Figure matching a sweep axis, empty for NONE.
inline std::vector< std::string > figures_for(SweepAxis a)
{
    switch (a)
    {
    case SweepAxis::None: return {};
    case SweepAxis::WindCapacity: return {"fig4", "fig6", "fig9", "fig10"};
    case SweepAxis::StatcomRating: return {"fig5"};
    case SweepAxis::StatcomSite: return {"fig11"};
    case SweepAxis::ScRating: return {"fig12"};
    }
    return {};
}

inline double metric_value(const MetricsReport& m, const std::string& column)
{
    static const std::map< std::string, double MetricsReport::* > fields{
        {"cost_per_h", &MetricsReport::cost_expected},
        {"objective", &MetricsReport::objective},
        {"rel_gap", &MetricsReport::rel_gap},
        {"viol_pct", &MetricsReport::violation_rate_pct},
        {"viol_surrogate_pct", &MetricsReport::surrogate_violation_pct},
        {"curtail_mw", &MetricsReport::curtailment_mw},
        {"shed_mw", &MetricsReport::shed_mw},
        {"freq_viol_pct", &MetricsReport::freq_violation_pct},
        {"nadir_slack_min", &MetricsReport::nadir_slack_min},
        {"rocof_slack_min", &MetricsReport::rocof_slack_min},
        {"soc_gap_mean", &MetricsReport::soc_gap_mean},
        {"soc_gap_max", &MetricsReport::soc_gap_max},
        {"rank1_mean", &MetricsReport::rank1_mean},
        {"strength_mean", &MetricsReport::strength_mean},
        {"strength_scheduled", &MetricsReport::strength_scheduled},
        {"wall_s", &MetricsReport::wall_time_s},
    };
    const auto it = fields.find(column);
    if (it == fields.end())
        throw Error(ErrorCode::InvalidArgument, "missing column '" + column + "'");
    return m.*(it->second);
}

/// One row per sweep value, columns `<metric>_<mode>` in the given mode order.
inline std::string emit_plotdata(const std::vector< MetricsReport >& table, const std::string& figure,
                                 const std::vector< Mode >& modes)
{
    const auto&        f = figure_spec(figure);
    std::ostringstream os;
    os << std::setprecision(10) << f.x_column;
    for (const auto& c : f.per_mode)
        for (Mode md : modes)
            os << ',' << c << '_' << to_string(md);
    for (const auto& c : f.shared)
        os << ',' << c;
    os << '\n';

    std::vector< double > xs;
    for (const auto& r : table)
        if (std::find(xs.begin(), xs.end(), r.sweep_value) == xs.end())
            xs.push_back(r.sweep_value);
    std::sort(xs.begin(), xs.end());
    auto cell = [&](double v) {
        if (std::isfinite(v))
            os << v;
        else
            os << "nan";
    };
    for (double x : xs)
    {
        auto find = [&](Mode md) -> const MetricsReport* {
            for (const auto& r : table)
                if (r.sweep_value == x && r.mode == to_string(md))
                    return &r;
            return nullptr;
        };
        cell(x);
        for (const auto& c : f.per_mode)
            for (Mode md : modes)
            {
                os << ',';
                const auto* r = find(md);
                cell(r ? metric_value(*r, c) : std::nan(""));
            }
        for (const auto& c : f.shared)
        {
            os << ',';
            const MetricsReport* r = nullptr;
            for (Mode md : modes)
                if (!r)
                    r = find(md);
            cell(r ? metric_value(*r, c) : std::nan(""));
        }
        os << '\n';
    }
    return os.str();
}

// ---------------------------------------------------------------------------
// Run manifest.

/// 64-bit FNV-1a, stable across platforms and runs.
inline std::uint64_t fnv1a(std::string_view s)
{
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : s)
    {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return h;
}

inline nlohmann::json spec_json(const ExperimentSpec& s)
{
    nlohmann::json j;
    j["name"]      = s.name;
    j["case"]      = s.case_path;
    j["axis"]      = to_string(s.axis);
    j["values"]    = s.values;
    std::vector< std::string > modes;
    for (Mode m : s.modes)
        modes.push_back(to_string(m));
    j["modes"] = modes;
    j["tree"]  = {{"start_hour", s.tree.start_hour}, {"horizon", s.tree.horizon}};
    if (s.tree.branching_hours)
        j["tree"]["branching_hours"] = *s.tree.branching_hours;
    if (s.tree.quantiles)
    {
        nlohmann::json q = nlohmann::json::array();
        for (const auto& b : *s.tree.quantiles)
            q.push_back({{"mass", b.mass}, {"wind_dev", b.wind_dev}, {"load_dev", b.load_dev}});
        j["tree"]["quantiles"] = q;
    }
    j["solver"] = {{"rel_gap", s.solver.rel_gap},       {"node_limit", s.solver.node_limit},
                   {"threads", s.solver.threads},       {"int_tol", s.solver.int_tol},
                   {"root_rounding", s.solver.root_rounding}, {"heuristic_every", s.solver.heuristic_every}};
    if (std::isfinite(s.solver.time_limit_s))
        j["solver"]["time_limit_s"] = s.solver.time_limit_s;
    j["build"] = {{"statcom_enabled", s.build.statcom_enabled}, {"freq_enabled", s.build.freq_enabled},
                  {"rocof_enabled", s.build.rocof_enabled},     {"gamma_margin", s.build.gamma_margin}};
    return j;
}

inline nlohmann::json run_manifest(const ExperimentSpec& s, const std::string& case_text)
{
    const auto cfg = spec_json(s);
    char       hex[17];
    std::snprintf(hex, sizeof hex, "%016llx", static_cast< unsigned long long >(fnv1a(cfg.dump())));
    char chex[17];
    std::snprintf(chex, sizeof chex, "%016llx", static_cast< unsigned long long >(fnv1a(case_text)));
    nlohmann::json j;
    j["config"]      = cfg;
    j["config_hash"] = hex;
    j["case_hash"]   = chex;
    j["versions"]    = {{"vscuc", kVersion},
                        {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                                      std::to_string(EIGEN_MINOR_VERSION)},
                        {"nlohmann_json", std::to_string(NLOHMANN_JSON_VERSION_MAJOR) + "." +
                                              std::to_string(NLOHMANN_JSON_VERSION_MINOR) + "." +
                                              std::to_string(NLOHMANN_JSON_VERSION_PATCH)},
                        {"compiler", __VERSION__}};
    // Everything is deterministic; no random streams are drawn.
    j["seeds"] = nlohmann::json::object();
    return j;
}

// ---------------------------------------------------------------------------
// Rolling horizon.

struct RollingStep
{
    int                   hour = 0; ///< day hour implemented by this step
    int                   lookahead = 0;
    std::string           status;
    double                objective = 0.0; ///< full look-ahead objective
    double                hour_cost = 0.0; ///< cost of the implemented hour
    double                rel_gap   = 0.0;
    std::vector< double > x, p_g;      ///< implemented commitment and dispatch
    std::vector< double > p_c, wind_avail;
    double                startups = 0.0;
    MetricsReport         metrics;
};

struct RollingResult
{
    std::vector< RollingStep > steps;
    double                     total_cost   = 0.0; ///< sum of implemented hour costs
    double                     curtailment_mwh = 0.0;
    double                     shed_mwh        = 0.0;
    double                     max_violation_pct = 0.0;
};

struct RollingOptions
{
    Mode         mode       = Mode::VscSi;
    int          start_hour = 0;
    int          steps      = 24;
    int          lookahead  = 6;
    std::optional< std::vector< int > >         branching_hours;
    std::optional< std::vector< QuantileBin > > quantiles;
    BnbOptions   solver;
    BuildOptions build;
};

/// Root-node operating cost of a schedule: generation, no-load, start-up and shedding.
inline double root_hour_cost(const GridCase& gc, const ScheduleSolution& s)
{
    double c = 0.0;
    for (std::size_t g = 0; g < gc.sync_gens.size(); ++g)
    {
        const auto&  sg = gc.sync_gens[g];
        const double p  = s.p_g[0][g];
        c += sg.cost_quad * p * p + sg.cost_lin * p + sg.cost_noload * s.config[0].sg_on[g];
    }
    for (double v : s.shed[0])
        c += gc.shed_cost * v;
    return c;
}

/// Carries the implemented hour into the initial state of the next step.
inline void carry_state(GridCase& gc, const std::vector< double >& x, const std::vector< double >& p)
{
    for (std::size_t g = 0; g < gc.sync_gens.size(); ++g)
    {
        auto&      sg = gc.sync_gens[g];
        const bool on = x[g] > 0.5;
        sg.initial_hours = on == sg.initial_on ? sg.initial_hours + 1 : 1;
        sg.initial_on    = on;
        sg.initial_p     = on ? p[g] : 0.0;
    }
}

/// Each step rebuilds the tree from the forecast at its hour, solves and
/// implements the root hour. The look-ahead is truncated at the end of the
/// case profile.
inline RollingResult run_rolling(GridCase gc, const RollingOptions& o, const SurrogateModel* sur,
                                 const std::function< void(const RollingStep&) >& progress = {})
{
    if (o.steps < 1 || o.lookahead < 1)
        throw Error(ErrorCode::InvalidArgument, "rolling needs positive steps and look-ahead");
    const int day = static_cast< int >(gc.horizon_hours());
    if (o.start_hour + o.steps > day)
        throw Error(ErrorCode::InvalidArgument, "case profile covers " + std::to_string(day) + " hours, rolling needs " +
                                                    std::to_string(o.start_hour + o.steps));
    RollingResult out;
    for (int k = 0; k < o.steps; ++k)
    {
        TreeConfig tc;
        tc.start_hour      = o.start_hour + k;
        tc.horizon         = std::min(o.lookahead, day - tc.start_hour);
        tc.branching_hours = o.branching_hours;
        tc.quantiles       = o.quantiles;
        const auto tree    = make_tree(gc, tc);
        auto       res     = solve_case(gc, tree, o.mode, sur, o.build, o.solver);
        if (!res.schedule)
            throw Error(ErrorCode::Infeasible, "rolling step " + std::to_string(k) + " (hour " +
                                                   std::to_string(tc.start_hour) + "): " + to_string(res.mip.status) +
                                                   (res.mip.diagnostics.empty() ? "" : ", " + res.mip.diagnostics));
        const auto& s = *res.schedule;
        RollingStep st;
        st.hour       = tc.start_hour;
        st.lookahead  = tc.horizon;
        st.status     = to_string(res.mip.status);
        st.objective  = res.mip.objective;
        st.rel_gap    = res.mip.rel_gap;
        st.x          = s.config[0].sg_on;
        st.p_g        = s.p_g[0];
        st.p_c        = s.p_c[0];
        st.wind_avail = s.wind_avail[0];
        st.startups   = s.u_start[0];
        for (std::size_t g = 0; g < gc.sync_gens.size(); ++g)
        {
            const bool was = gc.sync_gens[g].initial_on;
            if (!was && st.x[g] > 0.5)
                st.hour_cost += gc.sync_gens[g].cost_startup;
        }
        st.hour_cost += root_hour_cost(gc, s);
        st.metrics = res.metrics;

        out.total_cost += st.hour_cost;
        for (std::size_t c = 0; c < st.p_c.size(); ++c)
            out.curtailment_mwh += std::max(0.0, st.wind_avail[c] - st.p_c[c]) * gc.base_mva;
        for (double v : s.shed[0])
            out.shed_mwh += v * gc.base_mva;
        out.max_violation_pct = std::max(out.max_violation_pct, st.metrics.violation_rate_pct);

        carry_state(gc, st.x, st.p_g);
        if (progress)
            progress(st);
        out.steps.push_back(std::move(st));
    }
    return out;
}

/// Min-up/min-down violations of an implemented sequence given the initial
/// status. Empty when the sequence is time-consistent.
inline std::vector< std::string > check_commitment_sequence(const GridCase& gc, const std::vector< RollingStep >& steps)
{
    std::vector< std::string > out;
    for (std::size_t g = 0; g < gc.sync_gens.size(); ++g)
    {
        const auto& sg    = gc.sync_gens[g];
        bool        on    = sg.initial_on;
        int         hours = sg.initial_hours;
        for (std::size_t k = 0; k < steps.size(); ++k)
        {
            const bool now = steps[k].x[g] > 0.5;
            if (now != on)
            {
                const int need = on ? sg.min_up : sg.min_down;
                if (hours < need)
                    out.push_back(sg.name + " switched " + (on ? "off" : "on") + " at step " + std::to_string(k) +
                                  " after " + std::to_string(hours) + " h (minimum " + std::to_string(need) + ")");
                on    = now;
                hours = 1;
            }
            else
                ++hours;
        }
    }
    return out;
}

inline std::string rolling_csv(const RollingResult& r)
{
    std::ostringstream os;
    os << std::setprecision(10) << "hour,lookahead,status,objective,hour_cost,rel_gap,startups,committed,viol_pct\n";
    for (const auto& s : r.steps)
    {
        int on = 0;
        for (double v : s.x)
            on += v > 0.5 ? 1 : 0;
        os << s.hour << ',' << s.lookahead << ',' << s.status << ',' << s.objective << ',' << s.hour_cost << ','
           << s.rel_gap << ',' << s.startups << ',' << on << ',' << s.metrics.violation_rate_pct << '\n';
    }
    return os.str();
}

inline void write_file(const std::string& path, const std::string& text)
{
    std::ofstream f(path);
    if (!f)
        throw Error(ErrorCode::Io, "cannot write " + path);
    f << text;
}

} // namespace vscuc

#endif // VSCUC_EXPERIMENTS_HPP
