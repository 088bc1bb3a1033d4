#ifndef VSCUC_GRID_CASE_HPP
#define VSCUC_GRID_CASE_HPP

// Grid data model, case-document parsing/serialization, validation and
// per-unit normalization.
//
// Case documents are JSON (see docs/case_format.md). Quantities in a document
// are physical (MW, MVAr, MVA, Hz, $/MWh); after parse_case every quantity of
// a GridCase is on the system base and `per_unit` is set.

#include "vscuc/common.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <fstream>
#include <optional>
#include <queue>
#include <set>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

namespace vscuc
{

struct Bus
{
    int    id           = 0;
    double v_min        = 0.95;
    double v_max        = 1.05;
    double p_load       = 0.0;
    double q_load       = 0.0;
    double g_shunt      = 0.0; ///< bus shunt conductance (p.u. at 1 p.u. voltage)
    double b_shunt      = 0.0; ///< bus shunt susceptance, positive = capacitive
    bool   is_reference = false;

    bool operator==(const Bus&) const = default;
};

struct Line
{
    int                     from_bus = 0;
    int                     to_bus   = 0;
    double                  r        = 0.0;
    double                  x        = 0.0;
    double                  b_sh     = 0.0; ///< total line charging
    std::optional< double > rating;        ///< apparent-power limit

    bool operator==(const Line&) const = default;
};

struct SyncGen
{
    std::string name;
    int         bus          = 0;
    double      p_min        = 0.0;
    double      p_max        = 0.0;
    double      q_min        = 0.0;
    double      q_max        = 0.0;
    double      cost_quad    = 0.0; ///< $/(p.u.^2 h)
    double      cost_lin     = 0.0; ///< $/(p.u. h)
    double      cost_noload  = 0.0; ///< $/h
    double      cost_startup = 0.0; ///< $ per start
    int         min_up       = 1;
    int         min_down     = 1;
    double      ramp         = kInf; ///< p.u./h
    double      x_transient  = 0.2;
    double      inertia_h    = 0.0; ///< s, on the unit's own p_max base
    double      pfr_gain     = 0.0; ///< primary response delivered by T_d (p.u.)
    // Status before the first scheduled hour.
    bool   initial_on    = false;
    int    initial_hours = 1000; ///< hours spent in the initial status
    double initial_p     = 0.0;

    bool operator==(const SyncGen&) const = default;
};

struct GridFormingUnit
{
    std::string name;
    int         bus          = 0;
    double      x_transient  = 0.2;
    double      p_max        = 0.0;
    double      q_max        = 0.0;
    int         alpha_levels = 2;

    bool operator==(const GridFormingUnit&) const = default;
};

struct GridFollowingIbg
{
    std::string           name;
    int                   bus   = 0;
    double                s_max = 1.0;
    std::vector< double > available_profile;
    bool                  si_capable = false;
    double                h_si_max   = 0.0;

    bool operator==(const GridFollowingIbg&) const = default;
};

enum class ShuntKind
{
    Statcom,
    SynchronousCondenser,
};

struct ShuntReactiveDevice
{
    std::string name;
    ShuntKind   kind     = ShuntKind::Statcom;
    int         bus      = 0;
    double      q_rating = 0.0;
    double      i_max    = 0.0; ///< STATCOM only
    /// SC only. Expressed on the condenser's own rating base, so the
    /// system-base admittance is q_rating / x_transient.
    double x_transient = 0.0;

    bool operator==(const ShuntReactiveDevice&) const = default;
};

struct FrequencyParams
{
    double dp_l      = 0.0; ///< largest disturbance (p.u.)
    double df_lim    = 0.0; ///< nadir limit (p.u. of nominal frequency)
    double t_d       = 0.0; ///< response delivery time (s)
    double damping_d = 0.0; ///< load damping (p.u./p.u.)
    double rocof_max = 0.0; ///< Hz/s
    double f_nominal = 50.0;

    bool operator==(const FrequencyParams&) const = default;
};

struct QuantileBin
{
    double mass     = 1.0;
    double wind_dev = 0.0; ///< multiplicative deviation applied to wind availability
    double load_dev = 0.0; ///< multiplicative deviation applied to bus loads

    bool operator==(const QuantileBin&) const = default;
};

/// Forecast data carried by a case document.
struct ForecastSection
{
    std::vector< double >      load_profile; ///< per-hour multiplier on nominal bus loads
    std::vector< QuantileBin > quantiles{QuantileBin{}};
    std::vector< int >         branching_hours{1};

    bool operator==(const ForecastSection&) const = default;
};

struct GridCase
{
    std::string                        name;
    double                             base_mva = 100.0;
    std::vector< Bus >                 buses;
    std::vector< Line >                lines;
    std::vector< SyncGen >             sync_gens;
    std::vector< GridFormingUnit >     gfm_units;
    std::vector< GridFollowingIbg >    gfl_ibgs;
    std::vector< ShuntReactiveDevice > shunt_devices;
    FrequencyParams                    freq;
    double                             shed_cost = 0.0; ///< $/(p.u. h)
    ForecastSection                    forecast;
    bool                               per_unit = false;

    bool operator==(const GridCase&) const = default;

    std::size_t num_buses() const { return buses.size(); }

    std::vector< const ShuntReactiveDevice* > devices_of(ShuntKind kind) const
    {
        std::vector< const ShuntReactiveDevice* > out;
        for (const auto& d : shunt_devices)
            if (d.kind == kind)
                out.push_back(&d);
        return out;
    }

    std::size_t num_condensers() const { return devices_of(ShuntKind::SynchronousCondenser).size(); }

    std::size_t horizon_hours() const
    {
        std::size_t h = forecast.load_profile.size();
        for (const auto& c : gfl_ibgs)
            h = std::max(h, c.available_profile.size());
        return h;
    }
};

/// Maps external bus ids to dense 0-based indices.
class BusIndex
{
public:
    explicit BusIndex(const GridCase& gc)
    {
        for (std::size_t i = 0; i < gc.buses.size(); ++i)
            map_.emplace(gc.buses[i].id, static_cast< int >(i));
    }

    bool contains(int id) const { return map_.count(id) != 0; }

    int operator()(int id) const
    {
        const auto it = map_.find(id);
        if (it == map_.end())
            throw Error(ErrorCode::DanglingReference, "bus " + std::to_string(id) + " does not exist");
        return it->second;
    }

private:
    std::unordered_map< int, int > map_;
};

// ---------------------------------------------------------------------------
// Validation

enum class Severity
{
    Warning,
    Error,
};

struct Diagnostic
{
    Severity    severity = Severity::Error;
    ErrorCode   code     = ErrorCode::Schema;
    std::string location;
    std::string message;
};

inline bool has_errors(const std::vector< Diagnostic >& diags)
{
    return std::any_of(diags.begin(), diags.end(), [](const Diagnostic& d) { return d.severity == Severity::Error; });
}

namespace detail
{
inline std::string at(const char* section, std::size_t i, const char* field = nullptr)
{
    std::string s = std::string(section) + "[" + std::to_string(i) + "]";
    if (field)
        s += std::string(".") + field;
    return s;
}
} // namespace detail

/// Checks every type invariant of a case. Empty result iff the case is valid.
inline std::vector< Diagnostic > validate_case(const GridCase& gc)
{
    std::vector< Diagnostic > out;
    auto err = [&](ErrorCode code, std::string loc, std::string msg) {
        out.push_back({Severity::Error, code, std::move(loc), std::move(msg)});
    };
    using detail::at;

    if (!(gc.base_mva > 0.0))
        err(ErrorCode::Schema, "base_mva", "base_mva must be positive");
    if (gc.buses.empty())
        err(ErrorCode::Schema, "buses", "case has no buses");

    std::unordered_map< int, int > ids;
    int                            n_ref = 0;
    for (std::size_t i = 0; i < gc.buses.size(); ++i)
    {
        const auto& b = gc.buses[i];
        if (!ids.emplace(b.id, static_cast< int >(i)).second)
            err(ErrorCode::Schema, at("buses", i, "id"), "duplicate bus id " + std::to_string(b.id));
        if (!(b.v_min > 0.0) || !(b.v_min <= b.v_max))
            err(ErrorCode::Schema, at("buses", i, "v_min"), "require 0 < v_min <= v_max");
        if (b.is_reference && ++n_ref > 1)
            err(ErrorCode::DuplicateReference, at("buses", i, "is_reference"), "more than one reference bus");
    }
    auto check_bus = [&](int id, const std::string& loc) {
        if (!ids.count(id))
        {
            err(ErrorCode::DanglingReference, loc, "bus " + std::to_string(id) + " does not exist");
            return false;
        }
        return true;
    };

    for (std::size_t i = 0; i < gc.lines.size(); ++i)
    {
        const auto& l  = gc.lines[i];
        const bool  ok = check_bus(l.from_bus, at("lines", i, "from_bus")) & check_bus(l.to_bus, at("lines", i, "to_bus"));
        if (ok && l.from_bus == l.to_bus)
            err(ErrorCode::Schema, at("lines", i), "line endpoints coincide");
        if (!(l.x > 0.0))
            err(ErrorCode::Schema, at("lines", i, "x"), "reactance must be positive");
        if (l.rating && !(*l.rating > 0.0))
            err(ErrorCode::Schema, at("lines", i, "rating"), "rating must be positive");
    }
    for (std::size_t i = 0; i < gc.sync_gens.size(); ++i)
    {
        const auto& g = gc.sync_gens[i];
        check_bus(g.bus, at("sync_gens", i, "bus"));
        if (!(g.p_min <= g.p_max))
            err(ErrorCode::Schema, at("sync_gens", i, "p_min"), "require p_min <= p_max");
        if (!(g.q_min <= g.q_max))
            err(ErrorCode::Schema, at("sync_gens", i, "q_min"), "require q_min <= q_max");
        if (!(g.x_transient > 0.0))
            err(ErrorCode::Schema, at("sync_gens", i, "x_transient"), "transient reactance must be positive");
        if (!(g.inertia_h >= 0.0))
            err(ErrorCode::Schema, at("sync_gens", i, "inertia_h"), "inertia must be non-negative");
        if (g.min_up < 1 || g.min_down < 1)
            err(ErrorCode::Schema, at("sync_gens", i, "min_up"), "min_up and min_down must be >= 1");
        if (!(g.ramp > 0.0))
            err(ErrorCode::Schema, at("sync_gens", i, "ramp"), "ramp must be positive");
        if (g.cost_quad < 0.0)
            err(ErrorCode::Schema, at("sync_gens", i, "cost_quad"), "quadratic cost must be convex");
    }
    for (std::size_t i = 0; i < gc.gfm_units.size(); ++i)
    {
        const auto& v = gc.gfm_units[i];
        check_bus(v.bus, at("gfm_units", i, "bus"));
        if (!(v.x_transient > 0.0))
            err(ErrorCode::Schema, at("gfm_units", i, "x_transient"), "transient reactance must be positive");
        if (v.alpha_levels < 2)
            err(ErrorCode::Schema, at("gfm_units", i, "alpha_levels"), "alpha_levels must be >= 2");
        if (v.p_max < 0.0 || v.q_max < 0.0)
            err(ErrorCode::Schema, at("gfm_units", i, "p_max"), "capacities must be non-negative");
    }
    for (std::size_t i = 0; i < gc.gfl_ibgs.size(); ++i)
    {
        const auto& c = gc.gfl_ibgs[i];
        check_bus(c.bus, at("gfl_ibgs", i, "bus"));
        if (!(c.s_max > 0.0))
            err(ErrorCode::Schema, at("gfl_ibgs", i, "s_max"), "s_max must be positive");
        for (std::size_t h = 0; h < c.available_profile.size(); ++h)
            if (!(c.available_profile[h] >= 0.0))
                err(ErrorCode::Schema, at("gfl_ibgs", i, "available_profile") + "[" + std::to_string(h) + "]",
                    "availability must be non-negative");
        if (c.h_si_max < 0.0)
            err(ErrorCode::Schema, at("gfl_ibgs", i, "h_si_max"), "synthetic inertia cap must be non-negative");
    }
    for (std::size_t i = 0; i < gc.shunt_devices.size(); ++i)
    {
        const auto& d = gc.shunt_devices[i];
        check_bus(d.bus, at("shunt_devices", i, "bus"));
        if (!(d.q_rating >= 0.0))
            err(ErrorCode::Schema, at("shunt_devices", i, "q_rating"), "rating must be non-negative");
        if (d.kind == ShuntKind::Statcom)
        {
            if (!(d.i_max > 0.0))
                err(ErrorCode::Schema, at("shunt_devices", i, "i_max"), "STATCOM requires i_max > 0");
            if (d.x_transient != 0.0)
                err(ErrorCode::Schema, at("shunt_devices", i, "x_transient"), "STATCOM has no transient reactance");
        }
        else if (!(d.x_transient > 0.0))
            err(ErrorCode::Schema, at("shunt_devices", i, "x_transient"), "condenser requires x_transient > 0");
    }

    const auto& f = gc.freq;
    if (!(f.dp_l > 0.0 && f.df_lim > 0.0 && f.t_d > 0.0 && f.damping_d > 0.0 && f.rocof_max > 0.0 && f.f_nominal > 0.0))
        err(ErrorCode::Schema, "frequency", "all frequency parameters must be positive");
    else if (!(f.dp_l / f.df_lim > f.damping_d))
        err(ErrorCode::Schema, "frequency",
            "realness condition violated: delta_p_l / delta_f_lim must exceed the load damping");

    if (gc.shed_cost < 0.0)
        err(ErrorCode::Schema, "costs.shed_cost", "shedding cost must be non-negative");

    double mass = 0.0;
    for (const auto& q : gc.forecast.quantiles)
    {
        mass += q.mass;
        if (!(q.mass > 0.0) || q.wind_dev <= -1.0 || q.load_dev <= -1.0)
            err(ErrorCode::Schema, "forecast.quantiles", "masses must be positive and deviations > -1");
    }
    if (gc.forecast.quantiles.empty() || std::abs(mass - 1.0) > 1e-9)
        err(ErrorCode::Schema, "forecast.quantiles", "quantile masses must sum to 1");

    // Connectivity over the line graph.
    if (!gc.buses.empty() && !has_errors(out))
    {
        std::vector< std::vector< int > > adj(gc.buses.size());
        for (const auto& l : gc.lines)
        {
            adj[ids[l.from_bus]].push_back(ids[l.to_bus]);
            adj[ids[l.to_bus]].push_back(ids[l.from_bus]);
        }
        std::vector< char > seen(gc.buses.size(), 0);
        std::queue< int >   q;
        q.push(0);
        seen[0]          = 1;
        std::size_t nseen = 1;
        while (!q.empty())
        {
            const int u = q.front();
            q.pop();
            for (int v : adj[u])
                if (!seen[v])
                {
                    seen[v] = 1;
                    ++nseen;
                    q.push(v);
                }
        }
        if (nseen != gc.buses.size())
            err(ErrorCode::Disconnected, "lines",
                "network graph is disconnected (" + std::to_string(gc.buses.size() - nseen) + " unreachable buses)");
    }
    return out;
}

// ---------------------------------------------------------------------------
// Per-unit conversion

namespace detail
{
/// Multiplies every power-scaled field by `s` (s = 1/base to normalize,
/// s = base to restore physical units).
inline void scale_power(GridCase& gc, double s)
{
    for (auto& b : gc.buses)
    {
        b.p_load *= s;
        b.q_load *= s;
        b.g_shunt *= s;
        b.b_shunt *= s;
    }
    for (auto& l : gc.lines)
        if (l.rating)
            *l.rating *= s;
    for (auto& g : gc.sync_gens)
    {
        g.p_min *= s;
        g.p_max *= s;
        g.q_min *= s;
        g.q_max *= s;
        g.ramp *= s;
        g.pfr_gain *= s;
        g.initial_p *= s;
        // $/MW^2h -> $/pu^2h and $/MWh -> $/pu h
        g.cost_quad /= s * s;
        g.cost_lin /= s;
    }
    for (auto& v : gc.gfm_units)
    {
        v.p_max *= s;
        v.q_max *= s;
    }
    for (auto& c : gc.gfl_ibgs)
    {
        c.s_max *= s;
        for (auto& a : c.available_profile)
            a *= s;
    }
    for (auto& d : gc.shunt_devices)
    {
        d.q_rating *= s;
        d.i_max *= s;
    }
    gc.freq.dp_l *= s;
    gc.shed_cost /= s;
}
} // namespace detail

/// Converts a physical-unit case to per-unit on base_mva. Idempotent.
inline GridCase normalize(GridCase gc)
{
    if (gc.per_unit)
        return gc;
    detail::scale_power(gc, 1.0 / gc.base_mva);
    gc.freq.df_lim /= gc.freq.f_nominal;
    gc.per_unit = true;
    return gc;
}

inline GridCase to_physical(GridCase gc)
{
    if (!gc.per_unit)
        return gc;
    detail::scale_power(gc, gc.base_mva);
    gc.freq.df_lim *= gc.freq.f_nominal;
    gc.per_unit = false;
    return gc;
}

// ---------------------------------------------------------------------------
// Parsing

namespace detail
{
using nlohmann::json;

class Reader
{
public:
    Reader(const json& j, std::string path) : j_(j), path_(std::move(path))
    {
        if (!j_.is_object())
            throw Error(ErrorCode::Schema, path_ + ": expected an object");
    }

    bool has(const char* key) const { return j_.contains(key) && !j_.at(key).is_null(); }

    double num(const char* key) const
    {
        if (!has(key))
            throw Error(ErrorCode::Schema, field(key) + ": required field missing");
        const auto& v = j_.at(key);
        if (!v.is_number())
            throw Error(ErrorCode::Schema, field(key) + ": expected a number");
        return v.get< double >();
    }
    double num(const char* key, double dflt) const { return has(key) ? num(key) : dflt; }

    int integer(const char* key) const
    {
        if (!has(key))
            throw Error(ErrorCode::Schema, field(key) + ": required field missing");
        const auto& v = j_.at(key);
        if (!v.is_number_integer())
            throw Error(ErrorCode::Schema, field(key) + ": expected an integer");
        return v.get< int >();
    }
    int integer(const char* key, int dflt) const { return has(key) ? integer(key) : dflt; }

    bool boolean(const char* key, bool dflt) const
    {
        if (!has(key))
            return dflt;
        const auto& v = j_.at(key);
        if (!v.is_boolean())
            throw Error(ErrorCode::Schema, field(key) + ": expected true or false");
        return v.get< bool >();
    }

    std::string str(const char* key, const std::string& dflt) const
    {
        if (!has(key))
            return dflt;
        const auto& v = j_.at(key);
        if (!v.is_string())
            throw Error(ErrorCode::Schema, field(key) + ": expected a string");
        return v.get< std::string >();
    }

    std::vector< double > numbers(const char* key) const
    {
        std::vector< double > out;
        if (!has(key))
            return out;
        const auto& v = j_.at(key);
        if (!v.is_array())
            throw Error(ErrorCode::Schema, field(key) + ": expected an array");
        for (std::size_t i = 0; i < v.size(); ++i)
        {
            if (!v[i].is_number())
                throw Error(ErrorCode::Schema, field(key) + "[" + std::to_string(i) + "]: expected a number");
            out.push_back(v[i].get< double >());
        }
        return out;
    }

    template < typename F >
    void each(const char* key, F&& f) const
    {
        if (!has(key))
            return;
        const auto& v = j_.at(key);
        if (!v.is_array())
            throw Error(ErrorCode::Schema, field(key) + ": expected an array");
        for (std::size_t i = 0; i < v.size(); ++i)
            f(Reader(v[i], field(key) + "[" + std::to_string(i) + "]"));
    }

    Reader sub(const char* key) const
    {
        if (!has(key))
            throw Error(ErrorCode::Schema, field(key) + ": required section missing");
        return Reader(j_.at(key), field(key));
    }

    std::string field(const char* key) const { return path_.empty() ? std::string(key) : path_ + "." + key; }

private:
    const json& j_;
    std::string path_;
};
} // namespace detail

/// Parses the JSON structure of a case document into physical units without
/// validating it.
inline GridCase parse_case_raw(const nlohmann::json& doc)
{
    detail::Reader r(doc, "");
    GridCase       gc;
    gc.name     = r.str("name", "");
    gc.base_mva = r.num("base_mva");

    r.each("buses", [&](const detail::Reader& b) {
        Bus bus;
        bus.id           = b.integer("id");
        bus.v_min        = b.num("v_min", 0.95);
        bus.v_max        = b.num("v_max", 1.05);
        bus.p_load       = b.num("p_load_mw", 0.0);
        bus.q_load       = b.num("q_load_mvar", 0.0);
        bus.g_shunt      = b.num("g_shunt_mw", 0.0);
        bus.b_shunt      = b.num("b_shunt_mvar", 0.0);
        bus.is_reference = b.boolean("is_reference", false);
        gc.buses.push_back(bus);
    });
    r.each("lines", [&](const detail::Reader& l) {
        Line line;
        line.from_bus = l.integer("from_bus");
        line.to_bus   = l.integer("to_bus");
        line.r        = l.num("r_pu", 0.0);
        line.x        = l.num("x_pu");
        line.b_sh     = l.num("b_pu", 0.0);
        if (l.has("rating_mva"))
            line.rating = l.num("rating_mva");
        gc.lines.push_back(line);
    });
    r.each("sync_gens", [&](const detail::Reader& g) {
        SyncGen sg;
        sg.name          = g.str("name", "");
        sg.bus           = g.integer("bus");
        sg.p_min         = g.num("p_min_mw", 0.0);
        sg.p_max         = g.num("p_max_mw");
        sg.q_min         = g.num("q_min_mvar", 0.0);
        sg.q_max         = g.num("q_max_mvar", 0.0);
        sg.cost_quad     = g.num("cost_quad", 0.0);
        sg.cost_lin      = g.num("cost_lin", 0.0);
        sg.cost_noload   = g.num("cost_noload", 0.0);
        sg.cost_startup  = g.num("cost_startup", 0.0);
        sg.min_up        = g.integer("min_up_h", 1);
        sg.min_down      = g.integer("min_down_h", 1);
        sg.ramp          = g.num("ramp_mw_per_h", kInf);
        sg.x_transient   = g.num("x_transient_pu");
        sg.inertia_h     = g.num("inertia_h_s", 0.0);
        sg.pfr_gain      = g.num("pfr_mw", 0.0);
        sg.initial_on    = g.boolean("initial_on", false);
        sg.initial_hours = g.integer("initial_hours", 1000);
        sg.initial_p     = g.num("initial_p_mw", 0.0);
        gc.sync_gens.push_back(sg);
    });
    r.each("gfm_units", [&](const detail::Reader& g) {
        GridFormingUnit v;
        v.name         = g.str("name", "");
        v.bus          = g.integer("bus");
        v.x_transient  = g.num("x_transient_pu");
        v.p_max        = g.num("p_max_mw");
        v.q_max        = g.num("q_max_mvar", v.p_max);
        v.alpha_levels = g.integer("alpha_levels");
        gc.gfm_units.push_back(v);
    });
    r.each("gfl_ibgs", [&](const detail::Reader& g) {
        GridFollowingIbg c;
        c.name              = g.str("name", "");
        c.bus               = g.integer("bus");
        c.s_max             = g.num("s_max_mva", gc.base_mva); // 1.0 p.u. default
        c.available_profile = g.numbers("available_mw");
        c.si_capable        = g.boolean("si_capable", false);
        c.h_si_max          = g.num("h_si_max_s", 0.0);
        gc.gfl_ibgs.push_back(c);
    });
    r.each("shunt_devices", [&](const detail::Reader& g) {
        ShuntReactiveDevice d;
        d.name             = g.str("name", "");
        const auto kind    = g.str("kind", "");
        if (kind == "STATCOM")
            d.kind = ShuntKind::Statcom;
        else if (kind == "SYNCHRONOUS_CONDENSER")
            d.kind = ShuntKind::SynchronousCondenser;
        else
            throw Error(ErrorCode::Schema, g.field("kind") + ": expected STATCOM or SYNCHRONOUS_CONDENSER");
        d.bus         = g.integer("bus");
        d.q_rating    = g.num("q_rating_mvar");
        d.i_max       = g.num("i_max_mva", d.kind == ShuntKind::Statcom ? d.q_rating : 0.0);
        d.x_transient = g.num("x_transient_pu", 0.0);
        gc.shunt_devices.push_back(d);
    });

    const auto f      = r.sub("frequency");
    gc.freq.dp_l      = f.num("delta_p_l_mw");
    gc.freq.df_lim    = f.num("delta_f_lim_hz");
    gc.freq.t_d       = f.num("t_d_s");
    gc.freq.damping_d = f.num("damping_pu");
    gc.freq.rocof_max = f.num("rocof_max_hz_per_s");
    gc.freq.f_nominal = f.num("f_nominal_hz", 50.0);

    if (r.has("costs"))
        gc.shed_cost = r.sub("costs").num("shed_cost_per_mwh", 0.0);

    if (r.has("forecast"))
    {
        const auto fc            = r.sub("forecast");
        gc.forecast.load_profile = fc.numbers("load_profile");
        if (fc.has("quantiles"))
        {
            gc.forecast.quantiles.clear();
            fc.each("quantiles", [&](const detail::Reader& q) {
                gc.forecast.quantiles.push_back({q.num("mass"), q.num("wind_dev", 0.0), q.num("load_dev", 0.0)});
            });
        }
        if (fc.has("branching_hours"))
        {
            gc.forecast.branching_hours.clear();
            for (double h : fc.numbers("branching_hours"))
                gc.forecast.branching_hours.push_back(static_cast< int >(h));
        }
    }
    return gc;
}

/// Parses, validates and normalizes a case document. Throws vscuc::Error
/// carrying the first ERROR diagnostic's code and field path.
inline GridCase parse_case(const nlohmann::json& doc)
{
    GridCase   gc    = parse_case_raw(doc);
    const auto diags = validate_case(gc);
    for (const auto& d : diags)
        if (d.severity == Severity::Error)
            throw Error(d.code, d.location + ": " + d.message);
    return normalize(std::move(gc));
}

inline GridCase parse_case_text(std::string_view text)
{
    nlohmann::json doc;
    try
    {
        doc = nlohmann::json::parse(text);
    }
    catch (const nlohmann::json::parse_error& e)
    {
        throw Error(ErrorCode::Schema, std::string("malformed document: ") + e.what());
    }
    return parse_case(doc);
}

inline GridCase load_case(const std::string& path)
{
    std::ifstream in(path);
    if (!in)
        throw Error(ErrorCode::Io, "cannot open case file " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_case_text(ss.str());
}

/// Serializes to the case document schema (physical units).
inline nlohmann::json serialize_case(const GridCase& in)
{
    const GridCase gc = to_physical(in);
    nlohmann::json j;
    j["name"]     = gc.name;
    j["base_mva"] = gc.base_mva;
    auto& buses   = j["buses"] = nlohmann::json::array();
    for (const auto& b : gc.buses)
        buses.push_back({{"id", b.id},
                         {"v_min", b.v_min},
                         {"v_max", b.v_max},
                         {"p_load_mw", b.p_load},
                         {"q_load_mvar", b.q_load},
                         {"g_shunt_mw", b.g_shunt},
                         {"b_shunt_mvar", b.b_shunt},
                         {"is_reference", b.is_reference}});
    auto& lines = j["lines"] = nlohmann::json::array();
    for (const auto& l : gc.lines)
    {
        nlohmann::json e{{"from_bus", l.from_bus}, {"to_bus", l.to_bus}, {"r_pu", l.r}, {"x_pu", l.x}, {"b_pu", l.b_sh}};
        if (l.rating)
            e["rating_mva"] = *l.rating;
        lines.push_back(e);
    }
    auto& sgs = j["sync_gens"] = nlohmann::json::array();
    for (const auto& g : gc.sync_gens)
    {
        nlohmann::json e{{"name", g.name},
                         {"bus", g.bus},
                         {"p_min_mw", g.p_min},
                         {"p_max_mw", g.p_max},
                         {"q_min_mvar", g.q_min},
                         {"q_max_mvar", g.q_max},
                         {"cost_quad", g.cost_quad},
                         {"cost_lin", g.cost_lin},
                         {"cost_noload", g.cost_noload},
                         {"cost_startup", g.cost_startup},
                         {"min_up_h", g.min_up},
                         {"min_down_h", g.min_down},
                         {"x_transient_pu", g.x_transient},
                         {"inertia_h_s", g.inertia_h},
                         {"pfr_mw", g.pfr_gain},
                         {"initial_on", g.initial_on},
                         {"initial_hours", g.initial_hours},
                         {"initial_p_mw", g.initial_p}};
        if (std::isfinite(g.ramp))
            e["ramp_mw_per_h"] = g.ramp;
        sgs.push_back(e);
    }
    auto& gfms = j["gfm_units"] = nlohmann::json::array();
    for (const auto& v : gc.gfm_units)
        gfms.push_back({{"name", v.name},
                        {"bus", v.bus},
                        {"x_transient_pu", v.x_transient},
                        {"p_max_mw", v.p_max},
                        {"q_max_mvar", v.q_max},
                        {"alpha_levels", v.alpha_levels}});
    auto& gfls = j["gfl_ibgs"] = nlohmann::json::array();
    for (const auto& c : gc.gfl_ibgs)
        gfls.push_back({{"name", c.name},
                        {"bus", c.bus},
                        {"s_max_mva", c.s_max},
                        {"available_mw", c.available_profile},
                        {"si_capable", c.si_capable},
                        {"h_si_max_s", c.h_si_max}});
    auto& devs = j["shunt_devices"] = nlohmann::json::array();
    for (const auto& d : gc.shunt_devices)
    {
        nlohmann::json e{{"name", d.name},
                         {"kind", d.kind == ShuntKind::Statcom ? "STATCOM" : "SYNCHRONOUS_CONDENSER"},
                         {"bus", d.bus},
                         {"q_rating_mvar", d.q_rating}};
        if (d.kind == ShuntKind::Statcom)
            e["i_max_mva"] = d.i_max;
        else
            e["x_transient_pu"] = d.x_transient;
        devs.push_back(e);
    }
    j["frequency"] = {{"delta_p_l_mw", gc.freq.dp_l},
                      {"delta_f_lim_hz", gc.freq.df_lim},
                      {"t_d_s", gc.freq.t_d},
                      {"damping_pu", gc.freq.damping_d},
                      {"rocof_max_hz_per_s", gc.freq.rocof_max},
                      {"f_nominal_hz", gc.freq.f_nominal}};
    j["costs"] = {{"shed_cost_per_mwh", gc.shed_cost}};
    auto quantiles = nlohmann::json::array();
    for (const auto& q : gc.forecast.quantiles)
        quantiles.push_back({{"mass", q.mass}, {"wind_dev", q.wind_dev}, {"load_dev", q.load_dev}});
    j["forecast"] = {{"load_profile", gc.forecast.load_profile},
                     {"quantiles", quantiles},
                     {"branching_hours", gc.forecast.branching_hours}};
    return j;
}

} // namespace vscuc

#endif // VSCUC_GRID_CASE_HPP
