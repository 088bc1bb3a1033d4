#ifndef VSCUC_SOLVER_HPP
#define VSCUC_SOLVER_HPP

// Continuous conic subproblem interface and a best-bound branch-and-bound
// driver for programs with binaries.

#include "vscuc/conic_program.hpp"
#include "vscuc/ipm.hpp"

#include <chrono>
#include <cstdio>
#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <queue>
#include <thread>

namespace vscuc
{

enum class SolveStatus
{
    Optimal,
    Infeasible,
    Unbounded,
    NumericFailure,
};

inline const char* to_string(SolveStatus s)
{
    switch (s)
    {
    case SolveStatus::Optimal: return "OPTIMAL";
    case SolveStatus::Infeasible: return "INFEASIBLE";
    case SolveStatus::Unbounded: return "UNBOUNDED";
    case SolveStatus::NumericFailure: return "NUMERIC_FAILURE";
    }
    return "UNKNOWN";
}

struct RelaxationResult
{
    SolveStatus           status = SolveStatus::NumericFailure;
    std::vector< double > x;
    double                objective = kInf;  ///< evaluated at x
    double                bound     = -kInf; ///< valid lower bound when OPTIMAL
    double                residual  = kInf;  ///< independent feasibility check (integrality ignored)
    bool                  reduced_accuracy = false;
    int                   iterations       = 0;
    std::string           diagnostics;
};

struct Capabilities
{
    bool linear    = true;
    bool soc       = true;
    bool rotated   = true;
    bool quadratic = true;
};

/// Pluggable continuous solver. Bounds override the program's variable bounds
/// (binaries are treated as continuous within them).
class SubproblemSolver
{
public:
    virtual ~SubproblemSolver()                 = default;
    virtual Capabilities     capabilities() const = 0;
    virtual RelaxationResult solve(const ConicProgram& p, const std::vector< double >& lb,
                                   const std::vector< double >& ub, bool tightened) const = 0;
};

/// Maximum residual at which an OPTIMAL point is accepted.
inline constexpr double kAcceptResidual = 1e-7;

// ---------------------------------------------------------------------------
// Translation to the interior-point standard form.

struct StandardForm
{
    ConeProblem           cp;
    std::vector< int >    col_of;      ///< program variable -> column, -1 if fixed
    std::vector< double > fixed_value; ///< value of fixed variables
    double                obj_constant = 0.0;
    bool                  infeasible   = false;
    std::string           why;
};

inline StandardForm to_standard_form(const ConicProgram& p, const std::vector< double >& lb,
                                     const std::vector< double >& ub)
{
    const std::size_t nv = p.num_vars();
    if (lb.size() != nv || ub.size() != nv)
        throw Error(ErrorCode::DimensionMismatch, "bound vectors do not match the program");
    StandardForm sf;
    sf.col_of.assign(nv, -1);
    sf.fixed_value.assign(nv, 0.0);
    int n = 0;
    for (std::size_t j = 0; j < nv; ++j)
    {
        if (lb[j] > ub[j] + 1e-12)
        {
            sf.infeasible = true;
            sf.why        = "empty bound interval on " + p.vars()[j].name;
            return sf;
        }
        if (ub[j] - lb[j] <= 1e-12)
            sf.fixed_value[j] = 0.5 * (lb[j] + ub[j]);
        else
            sf.col_of[j] = n++;
    }
    // Epigraph columns for the quadratic objective.
    std::vector< std::pair< int, double > > epi; // (program var, coef) of free quadratic vars
    const int                               nx = n;
    for (const auto& [j, q] : p.quadratic())
    {
        if (sf.col_of[static_cast< std::size_t >(j)] < 0)
            sf.obj_constant += q * sf.fixed_value[static_cast< std::size_t >(j)] * sf.fixed_value[static_cast< std::size_t >(j)];
        else
            epi.emplace_back(j, q);
    }
    n += static_cast< int >(epi.size());

    // Affine expression split into free part and constant.
    struct Row
    {
        std::vector< std::pair< int, double > > a;
        double                                  c = 0.0;
    };
    auto reduce = [&](const LinExpr& e) {
        Row r;
        r.c = e.constant;
        for (const auto& [j, v] : e.terms)
        {
            const int col = sf.col_of[static_cast< std::size_t >(j)];
            if (col < 0)
                r.c += v * sf.fixed_value[static_cast< std::size_t >(j)];
            else
                r.a.emplace_back(col, v);
        }
        return r;
    };

    std::vector< Eigen::Triplet< double > > ta, tg;
    std::vector< double >                   bv, hv;
    int                                     nl = 0;
    auto add_g = [&](const Row& r, double sign, double h) {
        for (const auto& [col, v] : r.a)
            tg.emplace_back(nl, col, sign * v);
        hv.push_back(h);
        ++nl;
    };

    Eigen::VectorXd c = Eigen::VectorXd::Zero(n);
    {
        const Row o      = reduce(p.objective());
        sf.obj_constant += o.c;
        for (const auto& [col, v] : o.a)
            c(col) += v;
        for (std::size_t k = 0; k < epi.size(); ++k)
            c(nx + static_cast< int >(k)) = epi[k].second;
    }

    for (const auto& row : p.rows())
    {
        const Row r = reduce(row.expr);
        if (r.a.empty())
        {
            const double tol = 1e-9 * std::max(1.0, std::abs(row.rhs));
            const bool   ok  = row.sense == Sense::LessEqual      ? r.c <= row.rhs + tol
                               : row.sense == Sense::GreaterEqual ? r.c >= row.rhs - tol
                                                                  : std::abs(r.c - row.rhs) <= tol;
            if (!ok)
            {
                sf.infeasible = true;
                sf.why        = "constant row violated: " + row.name;
                return sf;
            }
            continue;
        }
        if (row.sense == Sense::Equal)
        {
            const int i = static_cast< int >(bv.size());
            for (const auto& [col, v] : r.a)
                ta.emplace_back(i, col, v);
            bv.push_back(row.rhs - r.c);
        }
        else if (row.sense == Sense::LessEqual)
            add_g(r, 1.0, row.rhs - r.c);
        else
            add_g(r, -1.0, r.c - row.rhs);
    }
    for (std::size_t j = 0; j < nv; ++j)
    {
        const int col = sf.col_of[j];
        if (col < 0)
            continue;
        if (std::isfinite(lb[j]))
        {
            tg.emplace_back(nl, col, -1.0);
            hv.push_back(-lb[j]);
            ++nl;
        }
        if (std::isfinite(ub[j]))
        {
            tg.emplace_back(nl, col, 1.0);
            hv.push_back(ub[j]);
            ++nl;
        }
    }
    const int l = nl;
    sf.cp.dims.l = l;

    // Cone rows: s = h - G x holds the affine expression values.
    auto add_cone_row = [&](const Row& r) { add_g(r, -1.0, r.c); };
    for (const auto& cone : p.socs())
    {
        add_cone_row(reduce(cone.t));
        for (const auto& u : cone.u)
            add_cone_row(reduce(u));
        sf.cp.dims.q.push_back(1 + static_cast< int >(cone.u.size()));
    }
    const double r2 = std::sqrt(0.5);
    auto rotated = [&](const Row& t1, const Row& t2, const std::vector< Row >& us) {
        // ||u||^2 <= 2 t1 t2  <=>  ||((t1 - t2)/sqrt2, u)|| <= (t1 + t2)/sqrt2
        Row sum, diff;
        sum.c  = r2 * (t1.c + t2.c);
        diff.c = r2 * (t1.c - t2.c);
        for (const auto& [col, v] : t1.a)
        {
            sum.a.emplace_back(col, r2 * v);
            diff.a.emplace_back(col, r2 * v);
        }
        for (const auto& [col, v] : t2.a)
        {
            sum.a.emplace_back(col, r2 * v);
            diff.a.emplace_back(col, -r2 * v);
        }
        add_cone_row(sum);
        add_cone_row(diff);
        for (const auto& u : us)
            add_cone_row(u);
        sf.cp.dims.q.push_back(2 + static_cast< int >(us.size()));
    };
    for (const auto& cone : p.rotated())
    {
        std::vector< Row > us;
        for (const auto& u : cone.u)
            us.push_back(reduce(u));
        rotated(reduce(cone.t1), reduce(cone.t2), us);
    }
    for (std::size_t k = 0; k < epi.size(); ++k)
    {
        Row t, half, u;
        t.a.emplace_back(nx + static_cast< int >(k), 1.0);
        half.c = 0.5;
        u.a.emplace_back(sf.col_of[static_cast< std::size_t >(epi[k].first)], 1.0);
        rotated(t, half, {u});
    }

    sf.cp.A.resize(static_cast< int >(bv.size()), n);
    sf.cp.A.setFromTriplets(ta.begin(), ta.end());
    sf.cp.G.resize(nl, n);
    sf.cp.G.setFromTriplets(tg.begin(), tg.end());
    sf.cp.b = Eigen::Map< Eigen::VectorXd >(bv.data(), static_cast< int >(bv.size()));
    sf.cp.h = Eigen::Map< Eigen::VectorXd >(hv.data(), static_cast< int >(hv.size()));
    sf.cp.c = c;
    return sf;
}

/// Interior-point implementation of the subproblem interface.
class InteriorPointSolver : public SubproblemSolver
{
public:
    explicit InteriorPointSolver(IpmSettings st = {}) : st_(st) {}

    Capabilities capabilities() const override { return {}; }

    RelaxationResult solve(const ConicProgram& p, const std::vector< double >& lb, const std::vector< double >& ub,
                           bool tightened) const override
    {
        RelaxationResult out;
        const auto       sf = to_standard_form(p, lb, ub);
        if (sf.infeasible)
        {
            out.status      = SolveStatus::Infeasible;
            out.diagnostics = sf.why;
            return out;
        }
        IpmSettings st = st_;
        if (tightened)
        {
            st.feastol *= 1e-2;
            st.abstol *= 1e-2;
            st.reltol *= 1e-2;
            st.max_iter *= 2;
            st.static_reg *= 1e-2;
            st.refine += 8;
        }
        IpmResult r;
        if (sf.cp.c.size() == 0)
        {
            r.status = IpmStatus::Optimal;
        }
        else
        {
            r = solve_cone_program(sf.cp, st);
        }
        out.iterations       = r.iterations;
        out.reduced_accuracy = r.reduced_accuracy;
        switch (r.status)
        {
        case IpmStatus::PrimalInfeasible: out.status = SolveStatus::Infeasible; return out;
        case IpmStatus::DualInfeasible: out.status = SolveStatus::Unbounded; return out;
        case IpmStatus::Optimal: break;
        default:
            out.status      = SolveStatus::NumericFailure;
            out.diagnostics = std::string("interior point: ") + to_string(r.status) + " after " +
                              std::to_string(r.iterations) + " iterations";
            return out;
        }
        out.x.resize(p.num_vars());
        for (std::size_t j = 0; j < p.num_vars(); ++j)
            out.x[j] = sf.col_of[j] < 0 ? sf.fixed_value[j] : r.x(sf.col_of[j]);
        // Snap tiny bound excursions produced by the interior iterates.
        for (std::size_t j = 0; j < p.num_vars(); ++j)
            out.x[j] = std::clamp(out.x[j], lb[j], ub[j]);

        const auto rep = check_feasibility(p, out.x);
        out.residual             = std::max({rep.bound, rep.linear, rep.cone});
        out.objective            = rep.objective;
        out.bound                = std::min(r.pcost, r.dcost) + sf.obj_constant;
        // Bound from the interior point objective; never above the point value.
        out.bound = std::min(out.bound, out.objective);
        if (out.residual > kAcceptResidual)
        {
            out.status      = SolveStatus::NumericFailure;
            out.diagnostics = "independent check rejected point (residual " + std::to_string(out.residual) + ")";
            return out;
        }
        out.status = SolveStatus::Optimal;
        return out;
    }

private:
    IpmSettings st_;
};

/// Solves the continuous relaxation (binaries relaxed to their bounds).
inline RelaxationResult solve_relaxation(const ConicProgram& p, const SubproblemSolver& s)
{
    std::vector< double > lb, ub;
    for (const auto& v : p.vars())
    {
        lb.push_back(v.lb);
        ub.push_back(v.ub);
    }
    auto r = s.solve(p, lb, ub, false);
    if (r.status == SolveStatus::NumericFailure)
        r = s.solve(p, lb, ub, true);
    return r;
}

inline RelaxationResult solve_relaxation(const ConicProgram& p, const IpmSettings& st = {})
{
    return solve_relaxation(p, InteriorPointSolver(st));
}

// ---------------------------------------------------------------------------
// Cone residuals.

struct ConeResidual
{
    std::string group;
    bool        rotated  = false;
    double      residual = 0.0;
};

struct ResidualSummary
{
    std::vector< ConeResidual > cones;
    double                      mean = 0.0;
    double                      max  = 0.0;
};

inline ResidualSummary soc_residuals(const ConicProgram& p, const std::vector< double >& x,
                                     const std::string& group_filter = {})
{
    if (x.size() != p.num_vars())
        throw Error(ErrorCode::DimensionMismatch, "point dimension does not match the program");
    ResidualSummary out;
    auto            norm2 = [&](const std::vector< LinExpr >& u) {
        double s = 0.0;
        for (const auto& e : u)
        {
            const double v = e.eval(x);
            s += v * v;
        }
        return s;
    };
    for (const auto& c : p.socs())
        if (group_filter.empty() || c.group == group_filter)
            out.cones.push_back({c.group, false, soc_violation(c.t.eval(x), std::sqrt(norm2(c.u)))});
    for (const auto& c : p.rotated())
        if (group_filter.empty() || c.group == group_filter)
        {
            const double prod = 2.0 * c.t1.eval(x) * c.t2.eval(x);
            out.cones.push_back({c.group, true, std::max(0.0, norm2(c.u) - prod) / std::max(1.0, prod)});
        }
    for (const auto& r : out.cones)
    {
        out.mean += r.residual;
        out.max = std::max(out.max, r.residual);
    }
    if (!out.cones.empty())
        out.mean /= static_cast< double >(out.cones.size());
    return out;
}

// ---------------------------------------------------------------------------
// Branch and bound.

enum class MipStatus
{
    Optimal,   ///< gap within tolerance or tree exhausted with an incumbent
    Infeasible,
    Unbounded,
    BoundOnly, ///< node or time limit reached
    NumericFailure,
};

inline const char* to_string(MipStatus s)
{
    switch (s)
    {
    case MipStatus::Optimal: return "OPTIMAL";
    case MipStatus::Infeasible: return "INFEASIBLE";
    case MipStatus::Unbounded: return "UNBOUNDED";
    case MipStatus::BoundOnly: return "BOUND_ONLY";
    case MipStatus::NumericFailure: return "NUMERIC_FAILURE";
    }
    return "UNKNOWN";
}

struct BnbOptions
{
    double        rel_gap       = 0.02;
    long          node_limit    = 100000;
    double        time_limit_s  = kInf;
    double        int_tol       = 1e-4; ///< interior-point relaxations leave ~1e-5 residue on binaries
    int           threads       = 1;
    bool          root_rounding = true;
    int           heuristic_every = 4; ///< rounding attempt every k-th node; 0 disables
    bool          trace         = false; ///< one line per node on stderr
    IpmSettings   ipm;
};

struct BnbResult
{
    MipStatus             status = MipStatus::NumericFailure;
    bool                  has_incumbent = false;
    std::vector< double > x;
    double                objective  = kInf;
    double                best_bound = -kInf;
    double                rel_gap    = kInf;
    double                root_bound = -kInf;
    long                  node_count = 0;
    double                wall_time  = 0.0;
    std::string           diagnostics;
};

inline double relative_gap(double incumbent, double bound)
{
    return (incumbent - bound) / std::max(1.0, std::abs(incumbent));
}

namespace detail
{
struct BnbNode
{
    long                                    id    = 0;
    int                                     depth = 0;
    double                                  bound = -kInf;
    std::vector< std::pair< int, double > > fix; ///< (variable, value)
};

struct NodeOrder
{
    bool operator()(const BnbNode& a, const BnbNode& b) const
    {
        if (a.bound != b.bound)
            return a.bound > b.bound;
        return a.id > b.id;
    }
};
} // namespace detail

inline BnbResult solve_misocp(const ConicProgram& p, const BnbOptions& opt = {},
                              const SubproblemSolver* solver = nullptr)
{
    using clock = std::chrono::steady_clock;
    const auto t0 = clock::now();
    p.validate();
    std::unique_ptr< SubproblemSolver > owned;
    if (!solver)
    {
        owned  = std::make_unique< InteriorPointSolver >(opt.ipm);
        solver = owned.get();
    }
    const std::size_t     nv = p.num_vars();
    std::vector< double > lb0(nv), ub0(nv);
    std::vector< int >    bins;
    for (std::size_t j = 0; j < nv; ++j)
    {
        lb0[j] = p.vars()[j].lb;
        ub0[j] = p.vars()[j].ub;
        if (p.vars()[j].binary)
            bins.push_back(static_cast< int >(j));
    }
    BnbResult res;
    auto      elapsed = [&] { return std::chrono::duration< double >(clock::now() - t0).count(); };

    auto solve_node = [&](const detail::BnbNode& nd) {
        auto lb = lb0, ub = ub0;
        for (const auto& [j, v] : nd.fix)
            lb[static_cast< std::size_t >(j)] = ub[static_cast< std::size_t >(j)] = v;
        auto r = solver->solve(p, lb, ub, false);
        if (r.status == SolveStatus::NumericFailure)
            r = solver->solve(p, lb, ub, true);
        return r;
    };

    auto accept = [&](const std::vector< double >& x, double obj) {
        auto rep = check_feasibility(p, x);
        if (!rep.ok(1e-6))
            return false;
        if (!res.has_incumbent || obj < res.objective)
        {
            res.has_incumbent = true;
            res.objective     = obj;
            res.x             = x;
            if (opt.trace)
                std::fprintf(stderr, "bnb incumbent %.10g after %ld nodes\n", obj, res.node_count);
        }
        return true;
    };

    // Nearest (variant 0) or switch-on (variant 1) rounding; one-hot groups
    // keep their largest member.
    auto round_point = [&](const std::vector< double >& xr, int variant) {
        auto x = xr;
        for (int j : bins)
        {
            double& v = x[static_cast< std::size_t >(j)];
            v         = variant == 0 ? std::round(v) : (v > opt.int_tol ? 1.0 : 0.0);
        }
        for (const auto& g : p.one_hot_groups())
        {
            int arg = g.front();
            for (int j : g)
                if (xr[static_cast< std::size_t >(j)] > xr[static_cast< std::size_t >(arg)])
                    arg = j;
            for (int j : g)
                x[static_cast< std::size_t >(j)] = j == arg ? 1.0 : 0.0;
        }
        return x;
    };

    // Integral candidate from a relaxation point: round binaries, verify,
    // otherwise re-solve with the binaries fixed.
    auto try_integral = [&](const std::vector< double >& xr) {
        const std::vector< double > x   = round_point(xr, 0);
        const auto                  rep = check_feasibility(p, x);
        if (rep.ok(1e-6))
            return accept(x, rep.objective);
        detail::BnbNode fixed;
        for (int j : bins)
            fixed.fix.emplace_back(j, x[static_cast< std::size_t >(j)]);
        const auto r = solve_node(fixed);
        if (r.status != SolveStatus::Optimal)
            return false;
        auto xf = r.x;
        for (int j : bins)
            xf[static_cast< std::size_t >(j)] = x[static_cast< std::size_t >(j)];
        return accept(xf, check_feasibility(p, xf).objective);
    };

    // Root.
    detail::BnbNode root;
    auto            rr = solve_node(root);
    res.node_count     = 1;
    if (opt.trace)
        std::fprintf(stderr, "bnb node 0 depth 0 bound %.10g status %s\n", rr.bound, to_string(rr.status));
    if (rr.status == SolveStatus::Infeasible)
    {
        res.status    = MipStatus::Infeasible;
        res.wall_time = elapsed();
        return res;
    }
    if (rr.status == SolveStatus::Unbounded)
    {
        res.status    = MipStatus::Unbounded;
        res.wall_time = elapsed();
        return res;
    }
    if (rr.status == SolveStatus::NumericFailure)
    {
        res.status      = MipStatus::NumericFailure;
        res.diagnostics = "root relaxation: " + rr.diagnostics;
        res.wall_time   = elapsed();
        return res;
    }
    res.root_bound = rr.bound;

    auto most_fractional = [&](const std::vector< double >& x, const std::vector< std::pair< int, double > >& fix) {
        int    best = -1;
        int    bp   = std::numeric_limits< int >::min();
        double bf   = opt.int_tol;
        for (int j : bins)
        {
            const double v  = x[static_cast< std::size_t >(j)];
            const double f  = std::min(v, 1.0 - v);
            const int    pr = p.vars()[static_cast< std::size_t >(j)].branch_priority;
            if (f > opt.int_tol && (pr > bp || (pr == bp && f > bf)))
            {
                bool fixed = false;
                for (const auto& fv : fix)
                    fixed = fixed || fv.first == j;
                if (!fixed)
                {
                    bf   = f;
                    bp   = pr;
                    best = j;
                }
            }
        }
        return best;
    };

    if (bins.empty())
    {
        accept(rr.x, rr.objective);
        res.status     = res.has_incumbent ? MipStatus::Optimal : MipStatus::NumericFailure;
        res.best_bound = std::min(rr.bound, res.objective);
        res.rel_gap    = res.has_incumbent ? relative_gap(res.objective, res.best_bound) : kInf;
        res.wall_time  = elapsed();
        return res;
    }

    if (opt.root_rounding && most_fractional(rr.x, {}) >= 0)
    {
        // Nearest rounding, then the conservative variant switching every
        // partly-set binary on.
        if (!try_integral(rr.x))
            try_integral(round_point(rr.x, 1));
    }

    std::priority_queue< detail::BnbNode, std::vector< detail::BnbNode >, detail::NodeOrder > open;
    long   next_id    = 1;
    double pruned_min = kInf; // lowest bound among nodes discarded within tolerance
    bool   limit_hit  = false;
    bool   any_unbounded_child = false;

    auto prune_eps = [&] { return std::max(opt.rel_gap, 1e-9) * std::max(1.0, std::abs(res.objective)); };

    // Expands a solved node (bound known) into children or an incumbent.
    auto process = [&](const detail::BnbNode& nd, const RelaxationResult& r) {
        double bound = nd.bound;
        if (r.status == SolveStatus::Infeasible)
            return;
        if (r.status == SolveStatus::Unbounded)
        {
            any_unbounded_child = true;
            return;
        }
        const bool ok = r.status == SolveStatus::Optimal;
        if (ok)
            bound = std::max(bound, r.bound);
        if (res.has_incumbent && bound >= res.objective - prune_eps())
        {
            pruned_min = std::min(pruned_min, bound);
            return;
        }
        int j = -1;
        if (ok)
        {
            j = most_fractional(r.x, nd.fix);
            if (j >= 0 && opt.heuristic_every > 0 && (!res.has_incumbent || res.node_count % opt.heuristic_every == 0))
                try_integral(r.x);
            if (j < 0)
            {
                if (try_integral(r.x))
                {
                    pruned_min = std::min(pruned_min, bound);
                    return;
                }
            }
        }
        if (j < 0)
        {
            // Failed node or unverifiable integral point: branch on the first free binary.
            for (int b : bins)
            {
                bool fixed = false;
                for (const auto& fv : nd.fix)
                    fixed = fixed || fv.first == b;
                if (!fixed)
                {
                    j = b;
                    break;
                }
            }
            if (j < 0)
                return;
        }
        for (double v : {0.0, 1.0})
        {
            detail::BnbNode child;
            child.id    = next_id++;
            child.depth = nd.depth + 1;
            child.bound = bound;
            child.fix   = nd.fix;
            child.fix.emplace_back(j, v);
            open.push(std::move(child));
        }
    };

    root.bound = rr.bound;
    process(root, rr);

    const int threads = std::max(1, opt.threads);
    while (!open.empty())
    {
        const double lowest = open.top().bound;
        if (res.has_incumbent && relative_gap(res.objective, std::min(lowest, pruned_min)) <= opt.rel_gap)
            break;
        if (res.node_count >= opt.node_limit || elapsed() >= opt.time_limit_s)
        {
            limit_hit = true;
            break;
        }
        std::vector< detail::BnbNode > batch;
        while (!open.empty() && static_cast< int >(batch.size()) < threads)
        {
            auto nd = open.top();
            open.pop();
            if (res.has_incumbent && nd.bound >= res.objective - prune_eps())
            {
                pruned_min = std::min(pruned_min, nd.bound);
                continue;
            }
            batch.push_back(std::move(nd));
        }
        std::vector< RelaxationResult > out(batch.size());
        if (batch.size() == 1)
            out[0] = solve_node(batch[0]);
        else
        {
            std::vector< std::thread > pool;
            for (std::size_t i = 0; i < batch.size(); ++i)
                pool.emplace_back([&, i] { out[i] = solve_node(batch[i]); });
            for (auto& t : pool)
                t.join();
        }
        for (std::size_t i = 0; i < batch.size(); ++i)
        {
            ++res.node_count;
            if (opt.trace)
                std::fprintf(stderr, "bnb node %ld depth %d bound %.10g status %s\n", batch[i].id, batch[i].depth,
                             out[i].status == SolveStatus::Optimal ? out[i].bound : batch[i].bound,
                             to_string(out[i].status));
            process(batch[i], out[i]);
        }
    }

    double bound = pruned_min;
    if (!open.empty())
        bound = std::min(bound, open.top().bound);
    res.wall_time = elapsed();
    if (!res.has_incumbent)
    {
        if (limit_hit)
        {
            res.status     = MipStatus::BoundOnly;
            res.best_bound = std::min(bound, rr.bound);
        }
        else
            res.status = any_unbounded_child ? MipStatus::Unbounded : MipStatus::Infeasible;
        return res;
    }
    res.best_bound = std::min(bound, res.objective);
    res.rel_gap    = relative_gap(res.objective, res.best_bound);
    res.status     = limit_hit && res.rel_gap > opt.rel_gap ? MipStatus::BoundOnly : MipStatus::Optimal;
    return res;
}

} // namespace vscuc

#endif // VSCUC_SOLVER_HPP
