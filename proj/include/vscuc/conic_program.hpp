#ifndef VSCUC_CONIC_PROGRAM_HPP
#define VSCUC_CONIC_PROGRAM_HPP

// Solver-agnostic intermediate representation of a mixed-integer conic
// program: bounded continuous/binary variables, sparse affine expressions,
// linear rows, second-order and rotated second-order cones, and a linear
// plus diagonal convex quadratic objective.

#include "vscuc/common.hpp"

#include <algorithm>
#include <iomanip>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <utility>
#include <vector>

namespace vscuc
{

/// Sparse affine expression sum_j a_j x_j + constant.
struct LinExpr
{
    std::vector< std::pair< int, double > > terms;
    double                                  constant = 0.0;

    LinExpr() = default;
    LinExpr(double c) : constant(c) {} // NOLINT: implicit constants read naturally

    static LinExpr var(int j, double coef = 1.0)
    {
        LinExpr e;
        e.terms.emplace_back(j, coef);
        return e;
    }

    LinExpr& add(int j, double coef)
    {
        if (coef != 0.0)
            terms.emplace_back(j, coef);
        return *this;
    }

    LinExpr& operator+=(const LinExpr& o)
    {
        terms.insert(terms.end(), o.terms.begin(), o.terms.end());
        constant += o.constant;
        return *this;
    }
    LinExpr& operator-=(const LinExpr& o)
    {
        for (const auto& [j, a] : o.terms)
            terms.emplace_back(j, -a);
        constant -= o.constant;
        return *this;
    }
    LinExpr& operator*=(double s)
    {
        for (auto& t : terms)
            t.second *= s;
        constant *= s;
        return *this;
    }

    /// Merges duplicate indices and drops exact zeros; sorted by index.
    LinExpr& compact()
    {
        std::sort(terms.begin(), terms.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
        std::vector< std::pair< int, double > > out;
        for (const auto& t : terms)
        {
            if (!out.empty() && out.back().first == t.first)
                out.back().second += t.second;
            else
                out.push_back(t);
        }
        std::erase_if(out, [](const auto& t) { return t.second == 0.0; });
        terms = std::move(out);
        return *this;
    }

    double eval(const std::vector< double >& x) const
    {
        double v = constant;
        for (const auto& [j, a] : terms)
            v += a * x[static_cast< std::size_t >(j)];
        return v;
    }
};

inline LinExpr operator+(LinExpr a, const LinExpr& b) { return a += b; }
inline LinExpr operator-(LinExpr a, const LinExpr& b) { return a -= b; }
inline LinExpr operator*(double s, LinExpr a) { return a *= s; }
inline LinExpr operator*(LinExpr a, double s) { return a *= s; }
inline LinExpr operator-(LinExpr a) { return a *= -1.0; }

enum class Sense
{
    LessEqual,
    GreaterEqual,
    Equal,
};

struct Variable
{
    std::string name;
    double      lb     = -kInf;
    double      ub     = kInf;
    bool        binary = false;
    int         branch_priority = 0; // higher classes are branched on first
};

/// expr (sense) rhs
struct LinearConstraint
{
    LinExpr     expr;
    Sense       sense = Sense::LessEqual;
    double      rhs   = 0.0;
    std::string name;
};

/// ||u|| <= t
struct SocCone
{
    LinExpr                t;
    std::vector< LinExpr > u;
    std::string            group;
};

/// ||u||^2 <= 2 t1 t2, t1, t2 >= 0
struct RotatedCone
{
    LinExpr                t1;
    LinExpr                t2;
    std::vector< LinExpr > u;
    std::string            group;
};

class ConicProgram
{
public:
    int add_var(std::string name, double lb, double ub, bool binary = false)
    {
        if (binary)
        {
            lb = std::max(lb, 0.0);
            ub = std::min(ub, 1.0);
        }
        vars_.push_back({std::move(name), lb, ub, binary});
        return static_cast< int >(vars_.size() - 1);
    }
    int add_binary(std::string name) { return add_var(std::move(name), 0.0, 1.0, true); }

    void add_linear(LinExpr e, Sense s, double rhs, std::string name = {})
    {
        rows_.push_back({std::move(e.compact()), s, rhs, std::move(name)});
    }
    void add_le(const LinExpr& e, double rhs, std::string name = {}) { add_linear(e, Sense::LessEqual, rhs, std::move(name)); }
    void add_ge(const LinExpr& e, double rhs, std::string name = {}) { add_linear(e, Sense::GreaterEqual, rhs, std::move(name)); }
    void add_eq(const LinExpr& e, double rhs, std::string name = {}) { add_linear(e, Sense::Equal, rhs, std::move(name)); }

    void add_soc(LinExpr t, std::vector< LinExpr > u, std::string group = {})
    {
        t.compact();
        for (auto& e : u)
            e.compact();
        socs_.push_back({std::move(t), std::move(u), std::move(group)});
    }
    void add_rotated(LinExpr t1, LinExpr t2, std::vector< LinExpr > u, std::string group = {})
    {
        t1.compact();
        t2.compact();
        for (auto& e : u)
            e.compact();
        rsocs_.push_back({std::move(t1), std::move(t2), std::move(u), std::move(group)});
    }

    void add_objective(const LinExpr& e)
    {
        objective_ += e;
        objective_.compact();
    }
    /// Adds coef * x_j^2 (coef >= 0) to the objective.
    void add_quadratic(int j, double coef)
    {
        if (coef < 0.0)
            throw Error(ErrorCode::InvalidArgument, "quadratic objective coefficients must be non-negative");
        if (coef != 0.0)
            quad_[j] += coef;
    }

    /// Groups of binaries of which exactly one is set (used by rounding).
    void add_one_hot(std::vector< int > group) { one_hot_.push_back(std::move(group)); }

    std::vector< Variable >&                      vars() { return vars_; }
    const std::vector< Variable >&                vars() const { return vars_; }
    const std::vector< LinearConstraint >&        rows() const { return rows_; }
    const std::vector< SocCone >&                 socs() const { return socs_; }
    const std::vector< RotatedCone >&             rotated() const { return rsocs_; }
    const LinExpr&                                objective() const { return objective_; }
    const std::map< int, double >&                quadratic() const { return quad_; }
    const std::vector< std::vector< int > >&      one_hot_groups() const { return one_hot_; }

    std::size_t num_vars() const { return vars_.size(); }
    std::size_t num_binaries() const
    {
        return static_cast< std::size_t >(std::count_if(vars_.begin(), vars_.end(), [](const Variable& v) { return v.binary; }));
    }

    double objective_value(const std::vector< double >& x) const
    {
        double v = objective_.eval(x);
        for (const auto& [j, q] : quad_)
            v += q * x[static_cast< std::size_t >(j)] * x[static_cast< std::size_t >(j)];
        return v;
    }

    /// Checks the IR invariants; throws INVALID_ARGUMENT on the first failure.
    void validate() const
    {
        const auto n     = static_cast< int >(vars_.size());
        auto       check = [&](const LinExpr& e, const std::string& where) {
            for (const auto& [j, a] : e.terms)
            {
                if (j < 0 || j >= n)
                    throw Error(ErrorCode::InvalidArgument, where + ": references unknown variable " + std::to_string(j));
                if (!std::isfinite(a))
                    throw Error(ErrorCode::InvalidArgument, where + ": non-finite coefficient");
            }
            if (!std::isfinite(e.constant))
                throw Error(ErrorCode::InvalidArgument, where + ": non-finite constant");
        };
        for (std::size_t j = 0; j < vars_.size(); ++j)
            if (!(vars_[j].lb <= vars_[j].ub))
                throw Error(ErrorCode::InvalidArgument, "variable " + vars_[j].name + " has lb > ub");
        for (std::size_t i = 0; i < rows_.size(); ++i)
        {
            check(rows_[i].expr, "row " + std::to_string(i));
            if (!std::isfinite(rows_[i].rhs))
                throw Error(ErrorCode::InvalidArgument, "row " + std::to_string(i) + ": non-finite rhs");
        }
        for (std::size_t k = 0; k < socs_.size(); ++k)
        {
            check(socs_[k].t, "soc " + std::to_string(k));
            for (const auto& e : socs_[k].u)
                check(e, "soc " + std::to_string(k));
        }
        for (std::size_t k = 0; k < rsocs_.size(); ++k)
        {
            check(rsocs_[k].t1, "rsoc " + std::to_string(k));
            check(rsocs_[k].t2, "rsoc " + std::to_string(k));
            for (const auto& e : rsocs_[k].u)
                check(e, "rsoc " + std::to_string(k));
        }
        check(objective_, "objective");
        for (const auto& [j, q] : quad_)
            if (j < 0 || j >= n || !(q >= 0.0))
                throw Error(ErrorCode::InvalidArgument, "invalid quadratic objective term");
    }

private:
    std::vector< Variable >           vars_;
    std::vector< LinearConstraint >   rows_;
    std::vector< SocCone >            socs_;
    std::vector< RotatedCone >        rsocs_;
    LinExpr                           objective_;
    std::map< int, double >           quad_;
    std::vector< std::vector< int > > one_hot_;
};

// ---------------------------------------------------------------------------
// Independent feasibility check. Evaluates the IR directly and shares no code
// with the interior-point solver.

struct FeasibilityReport
{
    double bound     = 0.0; ///< worst bound violation
    double linear    = 0.0; ///< worst linear row violation / max(1, |rhs|)
    double cone      = 0.0; ///< worst normalized cone violation
    double integral  = 0.0; ///< worst distance of a binary from {0, 1}
    double objective = 0.0;

    double worst() const { return std::max({bound, linear, cone, integral}); }
    bool   ok(double tol) const { return worst() <= tol; }
};

inline double soc_violation(double t, double unorm) { return std::max(0.0, unorm - t) / std::max(1.0, t); }

inline double rotated_violation(double t1, double t2, double unorm2)
{
    const double prod = 2.0 * t1 * t2;
    double       v    = std::max(0.0, unorm2 - prod) / std::max(1.0, prod);
    v                 = std::max({v, -t1, -t2});
    return v;
}

inline FeasibilityReport check_feasibility(const ConicProgram& p, const std::vector< double >& x)
{
    if (x.size() != p.num_vars())
        throw Error(ErrorCode::DimensionMismatch, "point dimension does not match the program");
    FeasibilityReport r;
    for (std::size_t j = 0; j < x.size(); ++j)
    {
        const auto& v = p.vars()[j];
        r.bound       = std::max({r.bound, v.lb - x[j], x[j] - v.ub});
        if (v.binary)
            r.integral = std::max(r.integral, std::min(std::abs(x[j]), std::abs(x[j] - 1.0)));
    }
    for (const auto& row : p.rows())
    {
        const double lhs = row.expr.eval(x);
        double       viol = 0.0;
        switch (row.sense)
        {
        case Sense::LessEqual: viol = lhs - row.rhs; break;
        case Sense::GreaterEqual: viol = row.rhs - lhs; break;
        case Sense::Equal: viol = std::abs(lhs - row.rhs); break;
        }
        r.linear = std::max(r.linear, viol / std::max(1.0, std::abs(row.rhs)));
    }
    for (const auto& c : p.socs())
    {
        double s = 0.0;
        for (const auto& e : c.u)
        {
            const double v = e.eval(x);
            s += v * v;
        }
        r.cone = std::max(r.cone, soc_violation(c.t.eval(x), std::sqrt(s)));
    }
    for (const auto& c : p.rotated())
    {
        double s = 0.0;
        for (const auto& e : c.u)
        {
            const double v = e.eval(x);
            s += v * v;
        }
        r.cone = std::max(r.cone, rotated_violation(c.t1.eval(x), c.t2.eval(x), s));
    }
    r.objective = p.objective_value(x);
    return r;
}

// ---------------------------------------------------------------------------
// Text IR. Line-oriented, whitespace separated; see docs/ir_format.md.

namespace detail
{
inline void write_expr(std::ostream& os, const LinExpr& e)
{
    os << e.constant << ' ' << e.terms.size();
    for (const auto& [j, a] : e.terms)
        os << ' ' << j << ' ' << a;
}

inline LinExpr read_expr(std::istream& is)
{
    LinExpr     e;
    std::size_t k = 0;
    if (!(is >> e.constant >> k))
        throw Error(ErrorCode::Schema, "ir: malformed expression");
    for (std::size_t i = 0; i < k; ++i)
    {
        int    j = 0;
        double a = 0.0;
        if (!(is >> j >> a))
            throw Error(ErrorCode::Schema, "ir: malformed expression term");
        e.terms.emplace_back(j, a);
    }
    return e;
}

inline std::string token_or_dash(const std::string& s) { return s.empty() ? "-" : s; }
inline std::string dash_to_empty(const std::string& s) { return s == "-" ? "" : s; }

inline double read_bound(const std::string& s)
{
    if (s == "inf")
        return kInf;
    if (s == "-inf")
        return -kInf;
    return std::stod(s);
}
} // namespace detail

inline void write_ir(std::ostream& os, const ConicProgram& p)
{
    os << std::setprecision(17);
    os << "vscuc-conic-ir 1\n";
    for (const auto& v : p.vars())
        os << "var " << detail::token_or_dash(v.name) << ' ' << v.lb << ' ' << v.ub << ' ' << (v.binary ? 'B' : 'C') << '\n';
    os << "obj ";
    detail::write_expr(os, p.objective());
    os << '\n';
    for (const auto& [j, q] : p.quadratic())
        os << "quad " << j << ' ' << q << '\n';
    for (const auto& r : p.rows())
    {
        os << "row " << detail::token_or_dash(r.name) << ' '
           << (r.sense == Sense::LessEqual ? "<=" : r.sense == Sense::GreaterEqual ? ">=" : "==") << ' ' << r.rhs << ' ';
        detail::write_expr(os, r.expr);
        os << '\n';
    }
    for (const auto& c : p.socs())
    {
        os << "soc " << detail::token_or_dash(c.group) << ' ' << c.u.size() << " | ";
        detail::write_expr(os, c.t);
        for (const auto& e : c.u)
        {
            os << " | ";
            detail::write_expr(os, e);
        }
        os << '\n';
    }
    for (const auto& c : p.rotated())
    {
        os << "rsoc " << detail::token_or_dash(c.group) << ' ' << c.u.size() << " | ";
        detail::write_expr(os, c.t1);
        os << " | ";
        detail::write_expr(os, c.t2);
        for (const auto& e : c.u)
        {
            os << " | ";
            detail::write_expr(os, e);
        }
        os << '\n';
    }
    for (const auto& g : p.one_hot_groups())
    {
        os << "onehot " << g.size();
        for (int j : g)
            os << ' ' << j;
        os << '\n';
    }
    os << "end\n";
}

inline ConicProgram read_ir(std::istream& is)
{
    std::string header;
    int         version = 0;
    if (!(is >> header >> version) || header != "vscuc-conic-ir" || version != 1)
        throw Error(ErrorCode::Schema, "ir: missing vscuc-conic-ir 1 header");
    ConicProgram p;
    std::string  tag;
    auto         sep = [&] {
        std::string bar;
        if (!(is >> bar) || bar != "|")
            throw Error(ErrorCode::Schema, "ir: expected '|'");
    };
    while (is >> tag)
    {
        if (tag == "end")
            return p;
        if (tag == "var")
        {
            std::string name, lb, ub, kind;
            is >> name >> lb >> ub >> kind;
            const int j = p.add_var(detail::dash_to_empty(name), detail::read_bound(lb), detail::read_bound(ub), kind == "B");
            p.vars()[static_cast< std::size_t >(j)].lb = detail::read_bound(lb);
            p.vars()[static_cast< std::size_t >(j)].ub = detail::read_bound(ub);
        }
        else if (tag == "obj")
            p.add_objective(detail::read_expr(is));
        else if (tag == "quad")
        {
            int    j = 0;
            double q = 0.0;
            is >> j >> q;
            p.add_quadratic(j, q);
        }
        else if (tag == "row")
        {
            std::string name, sense;
            double      rhs = 0.0;
            is >> name >> sense >> rhs;
            const Sense s = sense == "<=" ? Sense::LessEqual : sense == ">=" ? Sense::GreaterEqual : Sense::Equal;
            p.add_linear(detail::read_expr(is), s, rhs, detail::dash_to_empty(name));
        }
        else if (tag == "soc" || tag == "rsoc")
        {
            std::string group;
            std::size_t k = 0;
            is >> group >> k;
            sep();
            LinExpr t1 = detail::read_expr(is), t2;
            if (tag == "rsoc")
            {
                sep();
                t2 = detail::read_expr(is);
            }
            std::vector< LinExpr > u;
            for (std::size_t i = 0; i < k; ++i)
            {
                sep();
                u.push_back(detail::read_expr(is));
            }
            if (tag == "soc")
                p.add_soc(t1, u, detail::dash_to_empty(group));
            else
                p.add_rotated(t1, t2, u, detail::dash_to_empty(group));
        }
        else if (tag == "onehot")
        {
            std::size_t        k = 0;
            std::vector< int > g;
            is >> k;
            for (std::size_t i = 0; i < k; ++i)
            {
                int j = 0;
                is >> j;
                g.push_back(j);
            }
            p.add_one_hot(std::move(g));
        }
        else
            throw Error(ErrorCode::Schema, "ir: unknown record '" + tag + "'");
        if (!is)
            throw Error(ErrorCode::Schema, "ir: malformed '" + tag + "' record");
    }
    throw Error(ErrorCode::Schema, "ir: missing end record");
}

struct ProgramCounts
{
    std::size_t variables   = 0;
    std::size_t binaries    = 0;
    std::size_t linear_rows = 0;
    std::size_t equalities  = 0;
    std::size_t socs        = 0;
    std::size_t rotated     = 0;
    std::size_t quadratic   = 0;
};

inline ProgramCounts count(const ConicProgram& p)
{
    ProgramCounts c;
    c.variables   = p.num_vars();
    c.binaries    = p.num_binaries();
    c.linear_rows = p.rows().size();
    c.equalities  = static_cast< std::size_t >(
        std::count_if(p.rows().begin(), p.rows().end(), [](const LinearConstraint& r) { return r.sense == Sense::Equal; }));
    c.socs      = p.socs().size();
    c.rotated   = p.rotated().size();
    c.quadratic = p.quadratic().size();
    return c;
}

} // namespace vscuc

#endif // VSCUC_CONIC_PROGRAM_HPP
