#ifndef VSCUC_FORMULATION_HPP
#define VSCUC_FORMULATION_HPP

// Builds the stochastic voltage-stability-constrained UC as a ConicProgram.
//
// First-stage decisions (SG commitment, start-up/shut-down, GFM strength
// level, condenser status) live on tree depths and are shared by every node
// at that depth. Dispatch, network, shedding, synthetic inertia and the
// stability auxiliaries are per node.
//
// Line flows use c_ij = |Vi||Vj|cos(dij), s_ij = -|Vi||Vj|sin(dij) with
//   P_ij =  g c_ii - g c_ij + b s_ij
//   Q_ij = -(b + b_sh/2) c_ii + b c_ij + g s_ij,   g + jb = 1/(r + jx),
// so the bus terms G_ii, B_ii of the nodal balances are the bus shunts only.

#include "vscuc/conic_program.hpp"
#include "vscuc/scenario.hpp"
#include "vscuc/surrogate.hpp"

#include <map>
#include <set>
#include <memory>

namespace vscuc
{

enum class Mode
{
    BaseSi,
    VscSi,
    VscQSi,
};

inline const char* to_string(Mode m)
{
    switch (m)
    {
    case Mode::BaseSi: return "BASE_SI";
    case Mode::VscSi: return "VSC_SI";
    case Mode::VscQSi: return "VSC_Q_SI";
    }
    return "?";
}

inline Mode parse_mode(const std::string& s)
{
    if (s == "BASE_SI")
        return Mode::BaseSi;
    if (s == "VSC_SI")
        return Mode::VscSi;
    if (s == "VSC_Q_SI")
        return Mode::VscQSi;
    throw Error(ErrorCode::InvalidArgument, "unknown mode '" + s + "' (expected BASE_SI, VSC_SI or VSC_Q_SI)");
}

inline bool is_vsc(Mode m) { return m != Mode::BaseSi; }

struct BuildOptions
{
    Mode mode            = Mode::VscSi;
    bool statcom_enabled = true;
    bool freq_enabled    = true;
    bool rocof_enabled   = true;
    /// Relative tightening of the learned margin, Gamma = (1 - m) z1 / 2.
    /// Negative selects three times the combined per-target MAEP of the IBG.
    double gamma_margin = -1.0;
    /// Alpha grid levels; 0 takes the surrogate's training grid.
    int n_v = 0;
};

/// Handles of every decision symbol. Depth-indexed vectors hold first-stage
/// variables; node-indexed vectors hold recourse variables. -1 marks an
/// absent handle.
struct VariableMap
{
    // [depth][device]
    std::vector< std::vector< int > >                x, u, v;
    std::vector< std::vector< std::vector< int > > > alpha_sel; ///< [depth][gfm][level]
    std::vector< std::vector< int > >                sc_on;     ///< [depth][condenser]
    std::vector< double >                            alpha_values; ///< level -> alpha

    // [node][device or bus or line]
    std::vector< std::vector< int > > p_g, q_g, p_v, q_v, p_c, q_c, h_s, q_stat, q_sc, shed;
    std::vector< std::vector< int > > c_ii, c_ij, s_ij;
    std::vector< int >                h, r;
    std::vector< std::vector< int > > p_hat, q_hat, gamma;

    /// Bus pairs carrying the c_ij/s_ij variables (dense bus indices).
    std::vector< std::pair< int, int > > branches;
    std::vector< int >                   line_branch; ///< line -> branch
    std::vector< std::vector< double > > wind_avail;  ///< [node][ibg]
    std::vector< std::vector< double > > load_p, load_q;
    std::vector< double >                gamma_margin; ///< per IBG
    std::size_t                          n_products = 0;

    /// alpha value of a GFM at a depth as an affine expression.
    LinExpr alpha(std::size_t d, std::size_t g) const
    {
        LinExpr e;
        for (std::size_t l = 0; l < alpha_sel[d][g].size(); ++l)
            e.add(alpha_sel[d][g][l], alpha_values[l]);
        return e;
    }
};

struct BuiltProgram
{
    ConicProgram             program;
    VariableMap              vars;
    BuildOptions             options;
    std::vector< Diagnostic > diagnostics;
};

inline double nadir_constant(const FrequencyParams& f)
{
    return f.dp_l * f.dp_l * f.t_d / (4.0 * f.df_lim) - f.dp_l * f.t_d * f.damping_d / 4.0;
}

/// Minimum aggregate inertia for the RoCoF limit (p.u. s).
inline double rocof_inertia(const FrequencyParams& f) { return f.dp_l * f.f_nominal / (2.0 * f.rocof_max); }

namespace detail
{

/// Shared state of the sub-builders.
struct Builder
{
    const GridCase&      gc;
    const ScenarioTree&  tree;
    const SurrogateModel* sur;
    BuildOptions          opt;
    BusIndex              idx;
    ConicProgram          p;
    VariableMap           vm;
    std::vector< Diagnostic > diags;

    // Product caches: per-depth monomial values and per-node factor products.
    std::map< std::tuple< int, int, int >, int >         pair_cache;  ///< (depth, i, j) -> x_i x_j
    std::map< std::pair< int, std::string >, LinExpr >   value_cache; ///< (depth, feature) -> value
    std::map< std::pair< std::string, std::string >, LinExpr > prod_cache;

    Builder(const GridCase& g, const ScenarioTree& t, const SurrogateModel* s, BuildOptions o)
        : gc(g), tree(t), sur(s), opt(o), idx(g)
    {}

    std::size_t n_depth() const { return static_cast< std::size_t >(tree.horizon()); }
    std::size_t n_nodes() const { return tree.size(); }
    std::size_t depth(std::size_t n) const { return static_cast< std::size_t >(tree.nodes()[n].depth); }
    std::string tag(std::size_t n) const { return "@n" + std::to_string(n); }
    std::string dtag(std::size_t d) const { return "@d" + std::to_string(d); }

    /// Binary feature i at depth d: SGs first, then condensers.
    int binary(std::size_t d, std::size_t i) const
    {
        const auto ns = gc.sync_gens.size();
        return i < ns ? vm.x[d][i] : vm.sc_on[d][i - ns];
    }

    /// w = b * y for binary(-valued) b and y in [lo, hi]; exact whenever b is
    /// integral.
    LinExpr mccormick(int b, const LinExpr& y, double lo, double hi, const std::string& name)
    {
        if (!std::isfinite(lo) || !std::isfinite(hi))
            throw Error(ErrorCode::InvalidArgument, "product " + name + " has an unbounded continuous factor");
        const int w = p.add_var(name, std::min(0.0, lo), std::max(0.0, hi));
        ++vm.n_products;
        const LinExpr W = LinExpr::var(w);
        const LinExpr B = LinExpr::var(b);
        p.add_le(W - hi * B, 0.0, name + ":ub");
        p.add_ge(W - lo * B, 0.0, name + ":lb");
        p.add_le(W - y - lo * B, -lo, name + ":y-lo");
        p.add_ge(W - y - hi * B, -hi, name + ":y-hi");
        return W;
    }

    /// x_i x_j at depth d (binary-valued, linearized).
    int pair(std::size_t d, std::size_t i, std::size_t j)
    {
        const auto key = std::make_tuple(static_cast< int >(d), static_cast< int >(i), static_cast< int >(j));
        if (auto it = pair_cache.find(key); it != pair_cache.end())
            return it->second;
        const int   a = binary(d, i), b = binary(d, j);
        const auto  name = "xx" + std::to_string(i) + "_" + std::to_string(j) + dtag(d);
        const int   y    = p.add_var(name, 0.0, 1.0);
        ++vm.n_products;
        p.add_le(LinExpr::var(y) - LinExpr::var(a), 0.0, name + ":a");
        p.add_le(LinExpr::var(y) - LinExpr::var(b), 0.0, name + ":b");
        p.add_ge(LinExpr::var(y) - LinExpr::var(a) - LinExpr::var(b), -1.0, name + ":ab");
        pair_cache.emplace(key, y);
        return y;
    }

    /// Value of a surrogate feature at depth d as an affine expression.
    LinExpr feature_value(std::size_t d, const FeatureLayout::Feature& f)
    {
        using K              = FeatureLayout::Kind;
        const std::string id = std::to_string(static_cast< int >(f.kind)) + ":" + std::to_string(f.a) + ":" + std::to_string(f.b);
        const auto        key = std::make_pair(static_cast< int >(d), id);
        if (auto it = value_cache.find(key); it != value_cache.end())
            return it->second;
        LinExpr out;
        switch (f.kind)
        {
        case K::Binary: out = LinExpr::var(binary(d, f.a)); break;
        case K::Alpha: out = vm.alpha(d, f.a); break;
        case K::BinaryBinary: out = LinExpr::var(pair(d, f.a, f.b)); break;
        case K::BinaryAlpha:
            out = mccormick(binary(d, f.a), vm.alpha(d, f.b), 0.0, 1.0,
                            "xa" + std::to_string(f.a) + "_" + std::to_string(f.b) + dtag(d));
            break;
        case K::AlphaAlpha:
        {
            const auto& sel = vm.alpha_sel[d][f.a];
            for (std::size_t l = 0; l < sel.size(); ++l)
                if (vm.alpha_values[l] != 0.0)
                    out += vm.alpha_values[l] *
                           mccormick(sel[l], vm.alpha(d, f.b), 0.0, 1.0,
                                     "aa" + std::to_string(f.a) + "_" + std::to_string(f.b) + "_l" + std::to_string(l) + dtag(d));
            break;
        }
        case K::Constant: out = LinExpr(1.0); break;
        }
        value_cache.emplace(key, out);
        return out;
    }

    /// sum_l level_l * (o_l * y); exact at integral selections.
    LinExpr alpha_times(std::size_t d, std::size_t g, const LinExpr& y, double lo, double hi, const std::string& yname)
    {
        const auto key = std::make_pair("a" + std::to_string(g) + dtag(d), yname);
        if (auto it = prod_cache.find(key); it != prod_cache.end())
            return it->second;
        LinExpr     out;
        const auto& sel = vm.alpha_sel[d][g];
        for (std::size_t l = 0; l < sel.size(); ++l)
            if (vm.alpha_values[l] != 0.0)
                out += vm.alpha_values[l] * mccormick(sel[l], y, lo, hi, "o" + std::to_string(g) + "l" + std::to_string(l) + "*" + yname);
        prod_cache.emplace(key, out);
        return out;
    }

    /// feature(d) * y for a bounded continuous factor y named yname.
    LinExpr feature_times(std::size_t d, const FeatureLayout::Feature& f, const LinExpr& y, double lo, double hi,
                          const std::string& yname)
    {
        using K              = FeatureLayout::Kind;
        const std::string id = std::to_string(static_cast< int >(f.kind)) + ":" + std::to_string(f.a) + ":" + std::to_string(f.b) + dtag(d);
        const auto        key = std::make_pair(id, yname);
        if (auto it = prod_cache.find(key); it != prod_cache.end())
            return it->second;
        const double lo0 = std::min(0.0, lo), hi0 = std::max(0.0, hi);
        LinExpr      out;
        switch (f.kind)
        {
        case K::Binary: out = mccormick(binary(d, f.a), y, lo, hi, "b" + std::to_string(f.a) + "*" + yname); break;
        case K::Alpha: out = alpha_times(d, f.a, y, lo, hi, yname); break;
        case K::BinaryBinary:
            out = mccormick(pair(d, f.a, f.b), y, lo, hi, "bb" + std::to_string(f.a) + "_" + std::to_string(f.b) + "*" + yname);
            break;
        case K::BinaryAlpha:
            out = mccormick(binary(d, f.a), alpha_times(d, f.b, y, lo, hi, yname), lo0, hi0,
                            "b" + std::to_string(f.a) + "a" + std::to_string(f.b) + "*" + yname);
            break;
        case K::AlphaAlpha:
        {
            const LinExpr q   = alpha_times(d, f.b, y, lo, hi, yname);
            const auto&   sel = vm.alpha_sel[d][f.a];
            for (std::size_t l = 0; l < sel.size(); ++l)
                if (vm.alpha_values[l] != 0.0)
                    out += vm.alpha_values[l] *
                           mccormick(sel[l], q, lo0, hi0,
                                     "o" + std::to_string(f.a) + "l" + std::to_string(l) + "a" + std::to_string(f.b) + "*" + yname);
            break;
        }
        case K::Constant: out = y; break;
        }
        prod_cache.emplace(key, out);
        return out;
    }
};

inline void register_first_stage(Builder& b)
{
    const auto nd = b.n_depth();
    int        nv = b.opt.n_v;
    if (nv <= 0)
        nv = b.sur && b.sur->n_v > 0 ? b.sur->n_v : (b.gc.gfm_units.empty() ? 2 : b.gc.gfm_units[0].alpha_levels);
    if (nv < 2)
        throw Error(ErrorCode::InvalidArgument, "alpha grid needs at least two levels");
    for (int l = 0; l < nv; ++l)
        b.vm.alpha_values.push_back(alpha_level(l, nv));

    b.vm.x.resize(nd);
    b.vm.u.resize(nd);
    b.vm.v.resize(nd);
    b.vm.alpha_sel.resize(nd);
    b.vm.sc_on.resize(nd);
    for (std::size_t d = 0; d < nd; ++d)
    {
        const auto t = b.dtag(d);
        for (const auto& g : b.gc.sync_gens)
        {
            b.vm.x[d].push_back(b.p.add_binary("x_" + g.name + t));
            b.p.vars()[static_cast< std::size_t >(b.vm.x[d].back())].branch_priority = 1;
            // Start-up/shut-down are continuous: the transition equality pins
            // them to {0,1} whenever x is integral.
            b.vm.u[d].push_back(b.p.add_var("u_" + g.name + t, 0.0, 1.0));
            b.vm.v[d].push_back(b.p.add_var("v_" + g.name + t, 0.0, 1.0));
        }
        for (const auto& gv : b.gc.gfm_units)
        {
            std::vector< int > sel;
            for (int l = 0; l < nv; ++l)
                sel.push_back(b.p.add_binary("alpha_" + gv.name + "_l" + std::to_string(l) + t));
            LinExpr sum;
            for (int s : sel)
                sum.add(s, 1.0);
            b.p.add_eq(sum, 1.0, "onehot_" + gv.name + t);
            b.p.add_one_hot(sel);
            b.vm.alpha_sel[d].push_back(std::move(sel));
        }
        for (const auto* sc : b.gc.devices_of(ShuntKind::SynchronousCondenser))
        {
            b.vm.sc_on[d].push_back(b.p.add_binary("sc_" + sc->name + t));
            b.p.vars()[static_cast< std::size_t >(b.vm.sc_on[d].back())].branch_priority = 1;
        }
    }
}

} // namespace detail

/// Transition, start-up/shut-down exclusivity, minimum up/down windows
/// (including carried initial status), capacity and ramp limits.
inline void add_commitment(detail::Builder& b)
{
    auto&      p  = b.p;
    auto&      vm = b.vm;
    const auto nd = b.n_depth();
    for (std::size_t g = 0; g < b.gc.sync_gens.size(); ++g)
    {
        const auto& sg         = b.gc.sync_gens[g];
        const double x_prev0   = sg.initial_on ? 1.0 : 0.0;
        for (std::size_t d = 0; d < nd; ++d)
        {
            const auto t  = b.dtag(d);
            LinExpr    tr = LinExpr::var(vm.x[d][g]) - LinExpr::var(vm.u[d][g]) + LinExpr::var(vm.v[d][g]);
            if (d == 0)
                p.add_eq(tr, x_prev0, "trans_" + sg.name + t);
            else
                p.add_eq(tr - LinExpr::var(vm.x[d - 1][g]), 0.0, "trans_" + sg.name + t);
            p.add_le(LinExpr::var(vm.u[d][g]) + LinExpr::var(vm.v[d][g]), 1.0, "uv_" + sg.name + t);

            // Windows reaching before the horizon are truncated.
            LinExpr up, down;
            for (int k = 0; k < sg.min_up && static_cast< int >(d) - k >= 0; ++k)
                up.add(vm.u[d - static_cast< std::size_t >(k)][g], 1.0);
            for (int k = 0; k < sg.min_down && static_cast< int >(d) - k >= 0; ++k)
                down.add(vm.v[d - static_cast< std::size_t >(k)][g], 1.0);
            if (sg.min_up > 1)
                p.add_le(up - LinExpr::var(vm.x[d][g]), 0.0, "minup_" + sg.name + t);
            if (sg.min_down > 1)
                p.add_le(down + LinExpr::var(vm.x[d][g]), 1.0, "mindown_" + sg.name + t);

            // Carried status: a unit inside its initial window keeps it.
            const int carried = sg.initial_on ? sg.min_up - sg.initial_hours : sg.min_down - sg.initial_hours;
            if (static_cast< int >(d) < carried)
            {
                auto& var = p.vars()[static_cast< std::size_t >(vm.x[d][g])];
                var.lb = var.ub = x_prev0;
            }
        }
        if (static_cast< std::size_t >(std::max(sg.min_up, sg.min_down)) > nd)
            b.diags.push_back({Severity::Warning, ErrorCode::InvalidArgument, "commitment." + sg.name,
                               "minimum up/down time exceeds the horizon; windows truncated"});
    }

    for (std::size_t n = 0; n < b.n_nodes(); ++n)
    {
        const auto& node = b.tree.nodes()[n];
        const auto  d    = b.depth(n);
        for (std::size_t g = 0; g < b.gc.sync_gens.size(); ++g)
        {
            const auto&   sg = b.gc.sync_gens[g];
            const auto    t  = sg.name + b.tag(n);
            const LinExpr X  = LinExpr::var(vm.x[d][g]);
            const LinExpr P  = LinExpr::var(vm.p_g[n][g]);
            const LinExpr Q  = LinExpr::var(vm.q_g[n][g]);
            p.add_le(P - sg.p_max * X, 0.0, "pmax_" + t);
            p.add_ge(P - sg.p_min * X, 0.0, "pmin_" + t);
            p.add_le(Q - sg.q_max * X, 0.0, "qmax_" + t);
            p.add_ge(Q - sg.q_min * X, 0.0, "qmin_" + t);

            if (std::isfinite(sg.ramp))
            {
                const double su = std::max(sg.ramp, sg.p_min);
                if (node.parent < 0)
                {
                    // Previous hour is the carried state.
                    const double x0 = sg.initial_on ? 1.0 : 0.0;
                    p.add_le(P - su * LinExpr::var(vm.u[d][g]), sg.initial_p + sg.ramp * x0, "rup_" + t);
                    p.add_le(-P - sg.ramp * X - su * LinExpr::var(vm.v[d][g]), -sg.initial_p, "rdn_" + t);
                }
                else
                {
                    const auto    pn    = static_cast< std::size_t >(node.parent);
                    const LinExpr Pprev = LinExpr::var(vm.p_g[pn][g]);
                    const LinExpr Xprev = LinExpr::var(vm.x[d - 1][g]);
                    p.add_le(P - Pprev - sg.ramp * Xprev - su * LinExpr::var(vm.u[d][g]), 0.0, "rup_" + t);
                    p.add_le(Pprev - P - sg.ramp * X - su * LinExpr::var(vm.v[d][g]), 0.0, "rdn_" + t);
                }
            }
        }
        for (std::size_t g = 0; g < b.gc.gfm_units.size(); ++g)
        {
            const auto&   gv = b.gc.gfm_units[g];
            const LinExpr A  = vm.alpha(d, g);
            p.add_le(LinExpr::var(vm.p_v[n][g]) - gv.p_max * A, 0.0, "vpmax_" + gv.name + b.tag(n));
            p.add_le(LinExpr::var(vm.q_v[n][g]) - gv.q_max * A, 0.0, "vqmax_" + gv.name + b.tag(n));
            p.add_ge(LinExpr::var(vm.q_v[n][g]) + gv.q_max * A, 0.0, "vqmin_" + gv.name + b.tag(n));
        }
        std::size_t k = 0;
        for (const auto* sc : b.gc.devices_of(ShuntKind::SynchronousCondenser))
        {
            const LinExpr On = LinExpr::var(vm.sc_on[d][k]);
            const LinExpr Q  = LinExpr::var(vm.q_sc[n][k]);
            p.add_le(Q - sc->q_rating * On, 0.0, "scq_" + sc->name + b.tag(n));
            p.add_ge(Q + sc->q_rating * On, 0.0, "scq_" + sc->name + b.tag(n));
            ++k;
        }
    }
}

/// SOC-relaxed AC network: nodal balances, voltage box and the rotated cones
/// c_ij^2 + s_ij^2 <= c_ii c_jj, plus apparent-power ratings when present.
inline void add_soc_power_flow(detail::Builder& b)
{
    auto&       p  = b.p;
    auto&       vm = b.vm;
    const auto& gc = b.gc;
    const auto  nb = static_cast< int >(gc.num_buses());

    for (std::size_t n = 0; n < b.n_nodes(); ++n)
    {
        const auto           t = b.tag(n);
        std::vector< LinExpr > pbal(static_cast< std::size_t >(nb)), qbal(static_cast< std::size_t >(nb));

        // Injections.
        for (std::size_t g = 0; g < gc.sync_gens.size(); ++g)
        {
            const auto i = static_cast< std::size_t >(b.idx(gc.sync_gens[g].bus));
            pbal[i].add(vm.p_g[n][g], 1.0);
            qbal[i].add(vm.q_g[n][g], 1.0);
        }
        for (std::size_t g = 0; g < gc.gfm_units.size(); ++g)
        {
            const auto i = static_cast< std::size_t >(b.idx(gc.gfm_units[g].bus));
            pbal[i].add(vm.p_v[n][g], 1.0);
            qbal[i].add(vm.q_v[n][g], 1.0);
        }
        for (std::size_t c = 0; c < gc.gfl_ibgs.size(); ++c)
        {
            const auto i = static_cast< std::size_t >(b.idx(gc.gfl_ibgs[c].bus));
            pbal[i].add(vm.p_c[n][c], 1.0);
            if (vm.q_c[n][c] >= 0)
                qbal[i].add(vm.q_c[n][c], 1.0);
        }
        {
            std::size_t ks = 0, kc = 0;
            for (const auto& d : gc.shunt_devices)
            {
                const auto i = static_cast< std::size_t >(b.idx(d.bus));
                if (d.kind == ShuntKind::Statcom)
                {
                    if (vm.q_stat[n][ks] >= 0)
                        qbal[i].add(vm.q_stat[n][ks], 1.0);
                    ++ks;
                }
                else
                    qbal[i].add(vm.q_sc[n][kc++], 1.0);
            }
        }
        // Demand net of shedding (constant power factor).
        for (int i = 0; i < nb; ++i)
        {
            const auto   ii = static_cast< std::size_t >(i);
            const double pd = vm.load_p[n][ii], qd = vm.load_q[n][ii];
            pbal[ii].constant -= pd;
            qbal[ii].constant -= qd;
            if (vm.shed[n][ii] >= 0)
            {
                pbal[ii].add(vm.shed[n][ii], 1.0);
                qbal[ii].add(vm.shed[n][ii], qd / pd);
            }
            // Bus shunt terms.
            pbal[ii].add(vm.c_ii[n][ii], -gc.buses[ii].g_shunt);
            qbal[ii].add(vm.c_ii[n][ii], gc.buses[ii].b_shunt);
        }
        // Line flows leaving each terminal.
        for (std::size_t l = 0; l < gc.lines.size(); ++l)
        {
            const auto&   ln = gc.lines[l];
            const int     i = b.idx(ln.from_bus), j = b.idx(ln.to_bus);
            const auto    k = static_cast< std::size_t >(vm.line_branch[l]);
            const Complex y = 1.0 / Complex(ln.r, ln.x);
            const double  g = y.real(), bb = y.imag();
            // s_ij is stored for the branch orientation (lo, hi).
            const double sgn = vm.branches[k].first == i ? 1.0 : -1.0;
            const int    cij = vm.c_ij[n][k], sij = vm.s_ij[n][k];
            auto flow = [&](int from, double sdir, LinExpr& pb, LinExpr& qb) {
                const int cff = vm.c_ii[n][static_cast< std::size_t >(from)];
                LinExpr   pf, qf;
                pf.add(cff, g).add(cij, -g).add(sij, bb * sdir);
                qf.add(cff, -(bb + 0.5 * ln.b_sh)).add(cij, bb).add(sij, g * sdir);
                pb -= pf;
                qb -= qf;
                if (ln.rating)
                    p.add_soc(LinExpr(*ln.rating), {pf, qf}, "rating");
            };
            flow(i, sgn, pbal[static_cast< std::size_t >(i)], qbal[static_cast< std::size_t >(i)]);
            flow(j, -sgn, pbal[static_cast< std::size_t >(j)], qbal[static_cast< std::size_t >(j)]);
        }
        for (int i = 0; i < nb; ++i)
        {
            const auto ii = static_cast< std::size_t >(i);
            const auto bt = std::to_string(gc.buses[ii].id) + t;
            p.add_eq(pbal[ii], 0.0, "pbal_" + bt);
            p.add_eq(qbal[ii], 0.0, "qbal_" + bt);
        }
        for (std::size_t k = 0; k < vm.branches.size(); ++k)
        {
            const auto [i, j] = vm.branches[k];
            p.add_rotated(0.5 * LinExpr::var(vm.c_ii[n][static_cast< std::size_t >(i)]),
                          LinExpr::var(vm.c_ii[n][static_cast< std::size_t >(j)]),
                          {LinExpr::var(vm.c_ij[n][k]), LinExpr::var(vm.s_ij[n][k])}, "pf");
        }
    }
}

/// IBG capability, availability and, in VSC modes, the learned stability
/// cone ||(P^, Q^)|| <= Q^ + Gamma.
inline void add_ibg_and_vsc(detail::Builder& b)
{
    auto&       p  = b.p;
    auto&       vm = b.vm;
    const auto& gc = b.gc;
    const auto  nc = gc.gfl_ibgs.size();

    for (std::size_t n = 0; n < b.n_nodes(); ++n)
        for (std::size_t c = 0; c < nc; ++c)
        {
            std::vector< LinExpr > u{LinExpr::var(vm.p_c[n][c])};
            if (vm.q_c[n][c] >= 0)
                u.push_back(LinExpr::var(vm.q_c[n][c]));
            p.add_soc(LinExpr(gc.gfl_ibgs[c].s_max), u, "capability");
        }

    if (!is_vsc(b.opt.mode))
        return;
    if (!b.sur)
        throw Error(ErrorCode::InvalidArgument, "VSC modes require a fitted surrogate model");
    const auto& m = *b.sur;
    if (!(m.layout == FeatureLayout{gc.sync_gens.size() + gc.num_condensers(), gc.gfm_units.size(), m.layout.intercept}) ||
        m.num_ibgs() != nc || m.coefficients.size() != nc * nc)
        throw Error(ErrorCode::DimensionMismatch, "surrogate fleet does not match the case");
    const auto feats = m.layout.features();

    // Margin per IBG from the self and mutual MAEPs.
    vm.gamma_margin.assign(nc, 0.0);
    for (std::size_t c = 0; c < nc; ++c)
    {
        if (b.opt.gamma_margin >= 0.0)
            vm.gamma_margin[c] = b.opt.gamma_margin;
        else
        {
            double e = m.metrics.empty() ? 0.0 : m.metrics[m.self_target(c)].maep_pct;
            for (std::size_t k = 0; k < nc; ++k)
                if (k != c && !m.metrics.empty())
                    e += m.metrics[m.mutual_target(c, k)].maep_pct;
            vm.gamma_margin[c] = std::min(0.5, 3.0 * e / 100.0);
        }
    }

    const bool with_q = b.opt.mode == Mode::VscQSi;
    for (std::size_t n = 0; n < b.n_nodes(); ++n)
    {
        const auto d = b.depth(n);
        for (std::size_t c = 0; c < nc; ++c)
        {
            const auto t = gc.gfl_ibgs[c].name + b.tag(n);
            // Gamma from the learned self ratio.
            LinExpr     z1;
            const auto& k1 = m.coefficients[m.self_target(c)];
            for (std::size_t f = 0; f < feats.size(); ++f)
                if (k1(static_cast< Eigen::Index >(f)) != 0.0)
                    z1 += k1(static_cast< Eigen::Index >(f)) * b.feature_value(d, feats[f]);
            const double scale = 0.5 * (1.0 - vm.gamma_margin[c]);
            p.add_eq(LinExpr::var(vm.gamma[n][c]) - scale * z1, 0.0, "gamma_" + t);

            LinExpr ph = LinExpr::var(vm.p_c[n][c]);
            LinExpr qh;
            if (with_q)
                qh.add(vm.q_c[n][c], 1.0);
            for (std::size_t k = 0; k < nc; ++k)
            {
                if (k == c)
                    continue;
                const auto& kk = m.coefficients[m.mutual_target(c, k)];
                const auto  pname = "P_" + gc.gfl_ibgs[k].name + b.tag(n);
                const auto  qname = "Q_" + gc.gfl_ibgs[k].name + b.tag(n);
                const double pmax = vm.wind_avail[n][k];
                const double smax = gc.gfl_ibgs[k].s_max;
                for (std::size_t f = 0; f < feats.size(); ++f)
                {
                    const double a = kk(static_cast< Eigen::Index >(f));
                    if (a == 0.0)
                        continue;
                    ph += a * b.feature_times(d, feats[f], LinExpr::var(vm.p_c[n][k]), 0.0, pmax, pname);
                    if (with_q)
                        qh += a * b.feature_times(d, feats[f], LinExpr::var(vm.q_c[n][k]), -smax, smax, qname);
                }
            }
            p.add_eq(LinExpr::var(vm.p_hat[n][c]) - ph, 0.0, "phat_" + t);
            p.add_eq(LinExpr::var(vm.q_hat[n][c]) - qh, 0.0, "qhat_" + t);
            const LinExpr rhs = LinExpr::var(vm.q_hat[n][c]) + LinExpr::var(vm.gamma[n][c]);
            p.add_ge(rhs, 0.0, "vscpos_" + t);
            p.add_soc(rhs, {LinExpr::var(vm.p_hat[n][c]), LinExpr::var(vm.q_hat[n][c])}, "vsc");
        }
    }
}

/// STATCOM box and voltage-scaled current limit (Q)^2 <= I_max^2 c_bb.
inline void add_statcom(detail::Builder& b)
{
    auto&      vm = b.vm;
    std::size_t k = 0;
    for (const auto& d : b.gc.shunt_devices)
    {
        if (d.kind != ShuntKind::Statcom)
            continue;
        const auto bus = static_cast< std::size_t >(b.idx(d.bus));
        for (std::size_t n = 0; n < b.n_nodes(); ++n)
        {
            const int q = vm.q_stat[n][k];
            if (q < 0)
                continue;
            b.p.add_rotated(0.5 * d.i_max * d.i_max * LinExpr::var(vm.c_ii[n][bus]), LinExpr(1.0), {LinExpr::var(q)},
                            "statcom");
        }
        ++k;
    }
}

/// Aggregate inertia and primary response, the nadir condition
///   H R >= x1^2 + (dP T_d / 4) sum_j gamma_j H_sj^2
/// as a rotated cone over (H/2, R), and the RoCoF floor on H.
inline void add_frequency(detail::Builder& b)
{
    auto&       p  = b.p;
    auto&       vm = b.vm;
    const auto& gc = b.gc;
    const auto& f  = gc.freq;
    for (std::size_t n = 0; n < b.n_nodes(); ++n)
    {
        const auto t = b.tag(n);
        const auto d = b.depth(n);
        LinExpr    H = LinExpr::var(vm.h[n]), R = LinExpr::var(vm.r[n]);
        for (std::size_t g = 0; g < gc.sync_gens.size(); ++g)
        {
            H.add(vm.x[d][g], -gc.sync_gens[g].inertia_h * gc.sync_gens[g].p_max);
            R.add(vm.x[d][g], -gc.sync_gens[g].pfr_gain);
        }
        for (std::size_t c = 0; c < gc.gfl_ibgs.size(); ++c)
            if (vm.h_s[n][c] >= 0)
                H.add(vm.h_s[n][c], -1.0);
        p.add_eq(H, 0.0, "H" + t);
        p.add_eq(R, 0.0, "R" + t);
        if (!b.opt.freq_enabled)
            continue;

        const double           x1sq = nadir_constant(f);
        const double           k    = std::sqrt(f.dp_l * f.t_d / 4.0);
        std::vector< LinExpr > u{LinExpr(std::sqrt(x1sq))};
        for (std::size_t c = 0; c < gc.gfl_ibgs.size(); ++c)
            if (vm.h_s[n][c] >= 0)
                u.push_back(k * LinExpr::var(vm.h_s[n][c]));
        p.add_rotated(0.5 * LinExpr::var(vm.h[n]), LinExpr::var(vm.r[n]), u, "nadir");
        if (b.opt.rocof_enabled && f.rocof_max > 0.0)
            p.add_ge(LinExpr::var(vm.h[n]), rocof_inertia(f), "rocof" + t);
    }
}

/// Expected cost: energy, no-load and shedding weighted by pi and duration;
/// start-up cost once per start.
inline void add_objective(detail::Builder& b)
{
    auto&       p  = b.p;
    auto&       vm = b.vm;
    const auto& gc = b.gc;
    LinExpr     obj;
    for (std::size_t n = 0; n < b.n_nodes(); ++n)
    {
        const auto&  node = b.tree.nodes()[n];
        const double w    = node.probability * node.duration;
        const auto   d    = b.depth(n);
        for (std::size_t g = 0; g < gc.sync_gens.size(); ++g)
        {
            const auto& sg = gc.sync_gens[g];
            obj.add(vm.p_g[n][g], w * sg.cost_lin);
            obj.add(vm.x[d][g], w * sg.cost_noload);
            obj.add(vm.u[d][g], node.probability * sg.cost_startup);
            p.add_quadratic(vm.p_g[n][g], w * sg.cost_quad);
        }
        for (int s : vm.shed[n])
            if (s >= 0)
                obj.add(s, w * gc.shed_cost);
    }
    p.add_objective(obj);
}

/// Variable count of a build excluding the product auxiliaries:
///   depth terms  D (3 n_sg + n_gfm n_v + n_sc)
///   node terms   N (2 n_sg + 2 n_gfm + n_ibg (1 + q) + n_si + n_stat + n_sc
///                   + n_bus + n_loaded + 2 n_branch + 2 + 3 n_ibg vsc)
/// where q = 1 only in VSC_Q_SI, vsc = 1 in both VSC modes, n_stat counts
/// enabled STATCOMs with a positive rating and n_loaded counts buses with
/// positive active load in that node.
inline std::size_t structural_variable_count(const GridCase& gc, const ScenarioTree& tree, const BuildOptions& o, int n_v)
{
    std::set< std::pair< int, int > > pairs;
    BusIndex                          idx(gc);
    for (const auto& l : gc.lines)
        pairs.emplace(std::minmax(idx(l.from_bus), idx(l.to_bus)));
    std::size_t n_si = 0, n_stat = 0;
    for (const auto& ib : gc.gfl_ibgs)
        n_si += ib.si_capable ? 1 : 0;
    for (const auto* d : gc.devices_of(ShuntKind::Statcom))
        n_stat += o.statcom_enabled && d->q_rating > 0.0 ? 1 : 0;
    const std::size_t nsg = gc.sync_gens.size(), ngfm = gc.gfm_units.size(), nc = gc.gfl_ibgs.size();
    const std::size_t nsc = gc.num_condensers();
    const std::size_t per_depth = 3 * nsg + ngfm * static_cast< std::size_t >(n_v) + nsc;
    std::size_t       total     = static_cast< std::size_t >(tree.horizon()) * per_depth;
    for (std::size_t n = 0; n < tree.size(); ++n)
    {
        const auto  rl     = node_realization(tree, static_cast< int >(n));
        std::size_t loaded = 0;
        for (double pl : rl.load_p)
            loaded += pl > 0.0 ? 1 : 0;
        total += 2 * nsg + 2 * ngfm + nc * (o.mode == Mode::VscQSi ? 2 : 1) + n_si + n_stat + nsc + gc.num_buses() +
                 loaded + 2 * pairs.size() + 2 + (is_vsc(o.mode) ? 3 * nc : 0);
    }
    return total;
}

/// Full program for a mode. BASE_SI carries no stability cone.
inline BuiltProgram build(const GridCase& gc, const ScenarioTree& tree, const SurrogateModel* surrogate,
                          const BuildOptions& options = {})
{
    if (!gc.per_unit)
        throw Error(ErrorCode::InvalidArgument, "case must be normalized to per unit");
    if (is_vsc(options.mode) && !surrogate)
        throw Error(ErrorCode::InvalidArgument, "VSC modes require a fitted surrogate model");
    if (options.freq_enabled && nadir_constant(gc.freq) <= 0.0)
        throw Error(ErrorCode::InvalidArgument, "frequency parameters violate dP/df_lim > D");

    detail::Builder b(gc, tree, surrogate, options);
    auto&           p  = b.p;
    auto&           vm = b.vm;
    detail::register_first_stage(b);

    // Branch list keyed by bus pair so parallel lines share (c_ij, s_ij).
    std::map< std::pair< int, int >, int > br;
    for (const auto& l : gc.lines)
    {
        int i = b.idx(l.from_bus), j = b.idx(l.to_bus);
        if (i > j)
            std::swap(i, j);
        auto [it, fresh] = br.emplace(std::make_pair(i, j), static_cast< int >(vm.branches.size()));
        if (fresh)
            vm.branches.emplace_back(i, j);
        vm.line_branch.push_back(it->second);
    }

    const auto nn       = b.n_nodes();
    const auto n_stat   = gc.devices_of(ShuntKind::Statcom).size();
    const auto n_cond   = gc.num_condensers();
    const auto resize = [&](auto&... v) { (v.resize(nn), ...); };
    resize(vm.p_g, vm.q_g, vm.p_v, vm.q_v, vm.p_c, vm.q_c, vm.h_s, vm.q_stat, vm.q_sc, vm.shed, vm.c_ii, vm.c_ij, vm.s_ij,
           vm.p_hat, vm.q_hat, vm.gamma, vm.wind_avail, vm.load_p, vm.load_q);
    vm.h.assign(nn, -1);
    vm.r.assign(nn, -1);

    for (std::size_t n = 0; n < nn; ++n)
    {
        const auto t   = b.tag(n);
        const auto rl  = node_realization(tree, static_cast< int >(n));
        vm.wind_avail[n] = rl.wind;
        vm.load_p[n]     = rl.load_p;
        vm.load_q[n]     = rl.load_q;
        for (const auto& g : gc.sync_gens)
        {
            vm.p_g[n].push_back(p.add_var("P_" + g.name + t, 0.0, g.p_max));
            vm.q_g[n].push_back(p.add_var("Q_" + g.name + t, std::min(0.0, g.q_min), std::max(0.0, g.q_max)));
        }
        for (const auto& g : gc.gfm_units)
        {
            vm.p_v[n].push_back(p.add_var("P_" + g.name + t, 0.0, g.p_max));
            vm.q_v[n].push_back(p.add_var("Q_" + g.name + t, -g.q_max, g.q_max));
        }
        const bool q_free = options.mode == Mode::VscQSi;
        for (std::size_t c = 0; c < gc.gfl_ibgs.size(); ++c)
        {
            const auto& ib = gc.gfl_ibgs[c];
            vm.p_c[n].push_back(p.add_var("P_" + ib.name + t, 0.0, std::min(rl.wind[c], ib.s_max)));
            // Reactive output is not scheduled outside VSC_Q_SI.
            vm.q_c[n].push_back(q_free ? p.add_var("Q_" + ib.name + t, -ib.s_max, ib.s_max) : -1);
            vm.h_s[n].push_back(ib.si_capable ? p.add_var("Hs_" + ib.name + t, 0.0, ib.h_si_max) : -1);
        }
        for (const auto& d : gc.shunt_devices)
        {
            if (d.kind == ShuntKind::Statcom)
                vm.q_stat[n].push_back(options.statcom_enabled && d.q_rating > 0.0
                                           ? p.add_var("Qstat_" + d.name + t, -d.q_rating, d.q_rating)
                                           : -1);
            else
                vm.q_sc[n].push_back(p.add_var("Qsc_" + d.name + t, -d.q_rating, d.q_rating));
        }
        for (std::size_t i = 0; i < gc.num_buses(); ++i)
        {
            const auto& bus = gc.buses[i];
            const auto  bt  = std::to_string(bus.id) + t;
            vm.c_ii[n].push_back(p.add_var("cii_" + bt, bus.v_min * bus.v_min, bus.v_max * bus.v_max));
            vm.shed[n].push_back(rl.load_p[i] > 0.0 ? p.add_var("shed_" + bt, 0.0, rl.load_p[i]) : -1);
        }
        for (const auto& [i, j] : vm.branches)
        {
            const double vv = gc.buses[static_cast< std::size_t >(i)].v_max * gc.buses[static_cast< std::size_t >(j)].v_max;
            const auto   bt = std::to_string(gc.buses[static_cast< std::size_t >(i)].id) + "_" +
                            std::to_string(gc.buses[static_cast< std::size_t >(j)].id) + t;
            vm.c_ij[n].push_back(p.add_var("cij_" + bt, 0.0, vv));
            vm.s_ij[n].push_back(p.add_var("sij_" + bt, -vv, vv));
        }
        vm.h[n] = p.add_var("H" + t, 0.0, kInf);
        vm.r[n] = p.add_var("R" + t, 0.0, kInf);
        if (is_vsc(options.mode))
            for (const auto& ib : gc.gfl_ibgs)
            {
                vm.p_hat[n].push_back(p.add_var("Phat_" + ib.name + t, -kInf, kInf));
                vm.q_hat[n].push_back(p.add_var("Qhat_" + ib.name + t, -kInf, kInf));
                vm.gamma[n].push_back(p.add_var("Gamma_" + ib.name + t, -kInf, kInf));
            }
        (void)n_stat;
        (void)n_cond;
    }

    add_commitment(b);
    add_soc_power_flow(b);
    add_ibg_and_vsc(b);
    if (options.statcom_enabled)
        add_statcom(b);
    add_frequency(b);
    add_objective(b);
    p.validate();

    BuiltProgram out{std::move(b.p), std::move(b.vm), options, std::move(b.diags)};
    return out;
}

} // namespace vscuc

#endif // VSCUC_FORMULATION_HPP
