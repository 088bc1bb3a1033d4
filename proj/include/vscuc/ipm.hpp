#ifndef VSCUC_IPM_HPP
#define VSCUC_IPM_HPP

// Primal-dual interior-point method for linear/second-order cone programs
//
//   minimize c'x  s.t.  A x = b,  G x + s = h,  s in K
//
// with K = R+^l x Q^{q_1} x ... x Q^{q_k}. Homogeneous self-dual embedding,
// Nesterov-Todd scaling and Mehrotra predictor-corrector steps. The KKT system
// is factored by a sparse LDL' on a quasi-definite regularized matrix with
// iterative refinement; single-entry LP rows (variable bounds) are reduced
// into the x block.

#include "vscuc/common.hpp"

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include <algorithm>
#include <cstdio>
#include <vector>

namespace vscuc
{

using SparseMatrix = Eigen::SparseMatrix< double, Eigen::ColMajor, int >;

struct ConeDims
{
    int                l = 0; ///< number of nonnegative-orthant rows (first in G)
    std::vector< int > q;     ///< second-order cone block sizes, each >= 1

    int rows() const
    {
        int m = l;
        for (int k : q)
            m += k;
        return m;
    }
    int degree() const { return l + static_cast< int >(q.size()); }
};

struct ConeProblem
{
    SparseMatrix    A; ///< p x n
    Eigen::VectorXd b;
    SparseMatrix    G; ///< m x n
    Eigen::VectorXd h;
    Eigen::VectorXd c;
    ConeDims        dims;
};

enum class IpmStatus
{
    Optimal,
    PrimalInfeasible,
    DualInfeasible,
    MaxIterations,
    NumericFailure,
};

inline const char* to_string(IpmStatus s)
{
    switch (s)
    {
    case IpmStatus::Optimal: return "OPTIMAL";
    case IpmStatus::PrimalInfeasible: return "INFEASIBLE";
    case IpmStatus::DualInfeasible: return "UNBOUNDED";
    case IpmStatus::MaxIterations: return "MAX_ITERATIONS";
    case IpmStatus::NumericFailure: return "NUMERIC_FAILURE";
    }
    return "UNKNOWN";
}

struct IpmSettings
{
    double feastol     = 1e-8;
    double abstol      = 1e-8;
    double reltol      = 1e-8;
    double feastol_inacc = 1e-5; ///< accepted when progress stalls
    double reltol_inacc  = 1e-5;
    int    max_iter    = 120;
    double static_reg  = 1e-9;
    int    refine      = 8;
    int    ruiz_iter   = 12;
    bool   verbose     = false;
};

struct IpmResult
{
    IpmStatus       status = IpmStatus::NumericFailure;
    bool            reduced_accuracy = false;
    Eigen::VectorXd x, y, z, s;
    double          pcost = 0.0;
    double          dcost = 0.0;
    double          pres  = 0.0;
    double          dres  = 0.0;
    double          gap   = 0.0;
    int             iterations = 0;
};

namespace detail
{

// ---------------------------------------------------------------------------
// Cone primitives on a flat vector laid out as [LP | SOC_1 | SOC_2 ...].

struct SocScaling
{
    double          eta = 1.0;
    Eigen::VectorXd w; ///< normalized NT point, w'Jw = 1
};

struct Scaling
{
    Eigen::VectorXd           lp_w; ///< sqrt(s/z)
    std::vector< SocScaling > soc;
    Eigen::VectorXd           lambda;
};

inline double jnorm2(const Eigen::Ref< const Eigen::VectorXd >& v)
{
    return v(0) * v(0) - v.tail(v.size() - 1).squaredNorm();
}

/// W v for one SOC block.
inline Eigen::VectorXd soc_w(const SocScaling& sc, const Eigen::Ref< const Eigen::VectorXd >& v)
{
    const auto            k  = v.size();
    const double          w0 = sc.w(0);
    const Eigen::VectorXd w1 = sc.w.tail(k - 1);
    const Eigen::VectorXd v1 = v.tail(k - 1);
    const double          d  = w1.dot(v1);
    Eigen::VectorXd       out(k);
    out(0)          = w0 * v(0) + d;
    out.tail(k - 1) = v1 + (d / (1.0 + w0) + v(0)) * w1;
    return sc.eta * out;
}

/// W^{-1} v for one SOC block.
inline Eigen::VectorXd soc_winv(const SocScaling& sc, const Eigen::Ref< const Eigen::VectorXd >& v)
{
    const auto            k  = v.size();
    const double          w0 = sc.w(0);
    const Eigen::VectorXd w1 = sc.w.tail(k - 1);
    const Eigen::VectorXd v1 = v.tail(k - 1);
    const double          d  = w1.dot(v1);
    Eigen::VectorXd       out(k);
    out(0)          = w0 * v(0) - d;
    out.tail(k - 1) = v1 + (d / (1.0 + w0) - v(0)) * w1;
    return out / sc.eta;
}

/// Dense W^2 of one SOC block.
inline Eigen::MatrixXd soc_w2(const SocScaling& sc, int k)
{
    Eigen::MatrixXd W(k, k);
    for (int j = 0; j < k; ++j)
        W.col(j) = soc_w(sc, Eigen::VectorXd::Unit(k, j));
    return W * W;
}

class ConeOps
{
public:
    explicit ConeOps(const ConeDims& d) : dims_(d)
    {
        int off = d.l;
        for (int k : d.q)
        {
            off_.push_back(off);
            off += k;
        }
        m_ = off;
    }

    int m() const { return m_; }

    template < class F >
    void each_soc(F&& f) const
    {
        for (std::size_t i = 0; i < dims_.q.size(); ++i)
            f(i, off_[i], dims_.q[i]);
    }

    /// Identity scaling used by the initialization solves.
    Scaling identity() const
    {
        Scaling sc;
        sc.lp_w = Eigen::VectorXd::Ones(dims_.l);
        each_soc([&](std::size_t, int, int k) { sc.soc.push_back({1.0, Eigen::VectorXd::Unit(k, 0)}); });
        sc.lambda = Eigen::VectorXd::Zero(m_);
        return sc;
    }

    /// Nesterov-Todd scaling for strictly interior (s, z).
    bool nt_scaling(const Eigen::VectorXd& s, const Eigen::VectorXd& z, Scaling& sc) const
    {
        sc.lp_w.resize(dims_.l);
        sc.lambda.resize(m_);
        for (int i = 0; i < dims_.l; ++i)
        {
            if (!(s(i) > 0.0 && z(i) > 0.0))
                return false;
            sc.lp_w(i)   = std::sqrt(s(i) / z(i));
            sc.lambda(i) = std::sqrt(s(i) * z(i));
        }
        sc.soc.clear();
        bool ok = true;
        each_soc([&](std::size_t, int off, int k) {
            const Eigen::VectorXd sb = s.segment(off, k);
            const Eigen::VectorXd zb = z.segment(off, k);
            const double          sn = jnorm2(sb), zn = jnorm2(zb);
            if (!(sn > 0.0 && zn > 0.0 && sb(0) > 0.0 && zb(0) > 0.0))
            {
                ok = false;
                return;
            }
            const Eigen::VectorXd sbar = sb / std::sqrt(sn);
            const Eigen::VectorXd zbar = zb / std::sqrt(zn);
            const double          gamma = std::sqrt(std::max(0.5 * (1.0 + sbar.dot(zbar)), 1e-300));
            Eigen::VectorXd       w     = sbar;
            w(0) += zbar(0);
            w.tail(k - 1) -= zbar.tail(k - 1);
            w /= 2.0 * gamma;
            // Renormalize against rounding so that w'Jw = 1 exactly.
            const double wn = jnorm2(w);
            if (wn > 0.0)
                w /= std::sqrt(wn);
            SocScaling soc{std::pow(sn / zn, 0.25), w};
            sc.lambda.segment(off, k) = soc_w(soc, zb);
            sc.soc.push_back(std::move(soc));
        });
        return ok;
    }

    Eigen::VectorXd apply_w(const Scaling& sc, const Eigen::VectorXd& v) const
    {
        Eigen::VectorXd out(m_);
        out.head(dims_.l) = sc.lp_w.cwiseProduct(v.head(dims_.l));
        each_soc([&](std::size_t i, int off, int k) { out.segment(off, k) = soc_w(sc.soc[i], v.segment(off, k)); });
        return out;
    }

    Eigen::VectorXd apply_winv(const Scaling& sc, const Eigen::VectorXd& v) const
    {
        Eigen::VectorXd out(m_);
        out.head(dims_.l) = v.head(dims_.l).cwiseQuotient(sc.lp_w);
        each_soc([&](std::size_t i, int off, int k) { out.segment(off, k) = soc_winv(sc.soc[i], v.segment(off, k)); });
        return out;
    }

    /// Jordan product u o v.
    Eigen::VectorXd jprod(const Eigen::VectorXd& u, const Eigen::VectorXd& v) const
    {
        Eigen::VectorXd out(m_);
        out.head(dims_.l) = u.head(dims_.l).cwiseProduct(v.head(dims_.l));
        each_soc([&](std::size_t, int off, int k) {
            const auto ub = u.segment(off, k);
            const auto vb = v.segment(off, k);
            out(off)                        = ub.dot(vb);
            out.segment(off + 1, k - 1)     = ub(0) * vb.tail(k - 1) + vb(0) * ub.tail(k - 1);
        });
        return out;
    }

    /// Solves u o v = w for v.
    Eigen::VectorXd jdiv(const Eigen::VectorXd& u, const Eigen::VectorXd& w) const
    {
        Eigen::VectorXd out(m_);
        out.head(dims_.l) = w.head(dims_.l).cwiseQuotient(u.head(dims_.l));
        each_soc([&](std::size_t, int off, int k) {
            const auto   ub  = u.segment(off, k);
            const auto   wb  = w.segment(off, k);
            const double det = jnorm2(ub);
            const double v0  = (ub(0) * wb(0) - ub.tail(k - 1).dot(wb.tail(k - 1))) / det;
            out(off)                    = v0;
            out.segment(off + 1, k - 1) = (wb.tail(k - 1) - v0 * ub.tail(k - 1)) / ub(0);
        });
        return out;
    }

    Eigen::VectorXd unit() const
    {
        Eigen::VectorXd e = Eigen::VectorXd::Zero(m_);
        e.head(dims_.l).setOnes();
        each_soc([&](std::size_t, int off, int) { e(off) = 1.0; });
        return e;
    }

    /// Smallest alpha with v + alpha e in K (can be negative).
    double shift_needed(const Eigen::VectorXd& v) const
    {
        double a = -kInf;
        for (int i = 0; i < dims_.l; ++i)
            a = std::max(a, -v(i));
        each_soc([&](std::size_t, int off, int k) { a = std::max(a, v.segment(off + 1, k - 1).norm() - v(off)); });
        return a;
    }

    /// Largest alpha <= cap with v + alpha d in K, v interior.
    double max_step(const Eigen::VectorXd& v, const Eigen::VectorXd& d, double cap) const
    {
        double a = cap;
        for (int i = 0; i < dims_.l; ++i)
            if (d(i) < 0.0)
                a = std::min(a, -v(i) / d(i));
        each_soc([&](std::size_t, int off, int k) {
            const Eigen::VectorXd vb = v.segment(off, k);
            const Eigen::VectorXd db = d.segment(off, k);
            const double          r  = std::sqrt(std::max(jnorm2(vb), 1e-300));
            const Eigen::VectorXd x  = vb / r;
            const Eigen::VectorXd dd = db / r;
            // Lorentz boost taking x to e; the step bound is read off there.
            const double          rho0 = x(0) * dd(0) - x.tail(k - 1).dot(dd.tail(k - 1));
            const Eigen::VectorXd rho1 = dd.tail(k - 1) - (dd(0) + rho0) / (1.0 + x(0)) * x.tail(k - 1);
            const double          t    = rho1.norm() - rho0;
            if (t > 0.0)
                a = std::min(a, 1.0 / t);
        });
        return a;
    }

private:
    ConeDims           dims_;
    std::vector< int > off_;
    int                m_ = 0;
};

// ---------------------------------------------------------------------------
// Quasi-definite KKT system
//
//   [ D_e + rx I   A'     G_k'        ] [dx]   [r1 + G_e' W_e^-2 r3_e]
//   [ A           -ry I    0          ] [dy] = [r2                   ]
//   [ G_k          0     -W_k^2 - rz I] [dz_k] [r3_k                 ]
//
// where e are single-entry LP rows of G folded into the x block and k the
// remaining rows.

class Kkt
{
public:
    Kkt(const ConeProblem& pb, const ConeOps& ops, double reg) : pb_(pb), ops_(ops), reg_(reg)
    {
        n_ = static_cast< int >(pb.c.size());
        p_ = static_cast< int >(pb.b.size());
        m_ = ops.m();
        const SparseMatrix Gr = SparseMatrix(pb.G.transpose()); // rows of G as columns
        row_nnz_.assign(static_cast< std::size_t >(m_), 0);
        for (int r = 0; r < m_; ++r)
            row_nnz_[static_cast< std::size_t >(r)] = static_cast< int >(Gr.col(r).nonZeros());
        // Eliminate single-entry orthant rows.
        kept_index_.assign(static_cast< std::size_t >(m_), -1);
        elim_col_.assign(static_cast< std::size_t >(m_), -1);
        elim_val_.assign(static_cast< std::size_t >(m_), 0.0);
        for (int r = 0; r < m_; ++r)
        {
            if (r < pb.dims.l && row_nnz_[static_cast< std::size_t >(r)] <= 1)
            {
                for (SparseMatrix::InnerIterator it(Gr, r); it; ++it)
                {
                    elim_col_[static_cast< std::size_t >(r)] = static_cast< int >(it.row());
                    elim_val_[static_cast< std::size_t >(r)] = it.value();
                }
                continue;
            }
            kept_index_[static_cast< std::size_t >(r)] = nk_;
            kept_rows_.push_back(r);
            ++nk_;
        }
        N_ = n_ + p_ + nk_;

        std::vector< Eigen::Triplet< double > > trip;
        for (int j = 0; j < n_; ++j)
            trip.emplace_back(j, j, 1.0);
        for (int j = 0; j < p_; ++j)
            trip.emplace_back(n_ + j, n_ + j, -1.0);
        for (int j = 0; j < nk_; ++j)
            trip.emplace_back(n_ + p_ + j, n_ + p_ + j, -1.0);
        for (int col = 0; col < pb.A.outerSize(); ++col)
            for (SparseMatrix::InnerIterator it(pb.A, col); it; ++it)
                trip.emplace_back(n_ + static_cast< int >(it.row()), col, 1.0);
        for (int col = 0; col < pb.G.outerSize(); ++col)
            for (SparseMatrix::InnerIterator it(pb.G, col); it; ++it)
            {
                const int k = kept_index_[static_cast< std::size_t >(it.row())];
                if (k >= 0)
                    trip.emplace_back(n_ + p_ + k, col, 1.0);
            }
        ops.each_soc([&](std::size_t, int off, int k) {
            for (int a = 0; a < k; ++a)
                for (int b = 0; b < a; ++b)
                    trip.emplace_back(n_ + p_ + kept_index_[static_cast< std::size_t >(off + a)],
                                      n_ + p_ + kept_index_[static_cast< std::size_t >(off + b)], 1.0);
        });
        K_.resize(N_, N_);
        K_.setFromTriplets(trip.begin(), trip.end());
        K_.makeCompressed();

        // Constant entries.
        for (int col = 0; col < pb.A.outerSize(); ++col)
            for (SparseMatrix::InnerIterator it(pb.A, col); it; ++it)
                K_.coeffRef(n_ + static_cast< int >(it.row()), col) = it.value();
        for (int col = 0; col < pb.G.outerSize(); ++col)
            for (SparseMatrix::InnerIterator it(pb.G, col); it; ++it)
            {
                const int k = kept_index_[static_cast< std::size_t >(it.row())];
                if (k >= 0)
                    K_.coeffRef(n_ + p_ + k, col) = it.value();
            }
        for (int j = 0; j < n_ + p_ + nk_; ++j)
            diag_slot_.push_back(slot(j, j));
        ops.each_soc([&](std::size_t, int off, int k) {
            std::vector< int > s;
            for (int a = 0; a < k; ++a)
                for (int b = 0; b <= a; ++b)
                    s.push_back(slot(n_ + p_ + kept_index_[static_cast< std::size_t >(off + a)],
                                     n_ + p_ + kept_index_[static_cast< std::size_t >(off + b)]));
            soc_slots_.push_back(std::move(s));
        });
        ldl_.analyzePattern(K_);
    }

    /// Loads the scaling into the matrix and factors. False on breakdown.
    bool factor(const Scaling& sc)
    {
        double* val = K_.valuePtr();
        xdiag_.setZero(n_);
        for (int r = 0; r < ops_.m(); ++r)
        {
            const int j = elim_col_[static_cast< std::size_t >(r)];
            if (kept_index_[static_cast< std::size_t >(r)] < 0 && j >= 0)
            {
                const double g = elim_val_[static_cast< std::size_t >(r)];
                xdiag_(j) += g * g / (sc.lp_w(r) * sc.lp_w(r));
            }
        }
        for (int j = 0; j < n_; ++j)
            val[diag_slot_[static_cast< std::size_t >(j)]] = xdiag_(j) + reg_;
        for (int j = 0; j < p_; ++j)
            val[diag_slot_[static_cast< std::size_t >(n_ + j)]] = -reg_;
        for (int r : kept_rows_)
            if (r < pb_.dims.l)
                val[diag_slot_[static_cast< std::size_t >(n_ + p_ + kept_index_[static_cast< std::size_t >(r)])]] =
                    -sc.lp_w(r) * sc.lp_w(r) - reg_;
        w2_.clear();
        ops_.each_soc([&](std::size_t i, int, int k) {
            Eigen::MatrixXd w2 = soc_w2(sc.soc[i], k);
            std::size_t     t  = 0;
            for (int a = 0; a < k; ++a)
                for (int b = 0; b <= a; ++b)
                    val[soc_slots_[i][t++]] = -w2(a, b) - (a == b ? reg_ : 0.0);
            w2_.push_back(std::move(w2));
        });
        lpw2_ = sc.lp_w.cwiseProduct(sc.lp_w);
        ldl_.factorize(K_);
        return ldl_.info() == Eigen::Success;
    }

    /// Solves the unregularized system for rhs (r1, r2, r3) with r3 over all m rows.
    void solve(const Eigen::VectorXd& r1, const Eigen::VectorXd& r2, const Eigen::VectorXd& r3, int refine,
               Eigen::VectorXd& dx, Eigen::VectorXd& dy, Eigen::VectorXd& dz) const
    {
        Eigen::VectorXd rhs(N_);
        rhs.head(n_) = r1;
        rhs.segment(n_, p_) = r2;
        for (int r = 0; r < ops_.m(); ++r)
        {
            const int k = kept_index_[static_cast< std::size_t >(r)];
            if (k >= 0)
                rhs(n_ + p_ + k) = r3(r);
            else if (elim_col_[static_cast< std::size_t >(r)] >= 0)
                rhs(elim_col_[static_cast< std::size_t >(r)]) +=
                    elim_val_[static_cast< std::size_t >(r)] * r3(r) / lpw2_(r);
        }
        Eigen::VectorXd sol = ldl_.solve(rhs);
        double          rn  = rhs.lpNorm< Eigen::Infinity >();
        for (int it = 0; it < refine; ++it)
        {
            const Eigen::VectorXd res = rhs - apply(sol);
            if (res.lpNorm< Eigen::Infinity >() <= 1e-14 * (1.0 + rn))
                break;
            sol += ldl_.solve(res);
        }
        dx = sol.head(n_);
        dy = sol.segment(n_, p_);
        dz.resize(ops_.m());
        for (int r = 0; r < ops_.m(); ++r)
        {
            const int k = kept_index_[static_cast< std::size_t >(r)];
            if (k >= 0)
                dz(r) = sol(n_ + p_ + k);
            else
            {
                const int j = elim_col_[static_cast< std::size_t >(r)];
                const double gdx = j >= 0 ? elim_val_[static_cast< std::size_t >(r)] * dx(j) : 0.0;
                dz(r)        = (gdx - r3(r)) / lpw2_(r);
            }
        }
    }

private:
    int slot(int r, int c) const
    {
        const int* inner = K_.innerIndexPtr();
        const int* outer = K_.outerIndexPtr();
        const int* hit   = std::lower_bound(inner + outer[c], inner + outer[c + 1], r);
        if (hit == inner + outer[c + 1] || *hit != r)
            throw Error(ErrorCode::NumericFailure, "kkt pattern lookup failed");
        return static_cast< int >(hit - inner);
    }

    /// Unregularized reduced operator times v (lower storage, symmetric).
    Eigen::VectorXd apply(const Eigen::VectorXd& v) const
    {
        Eigen::VectorXd out = K_.selfadjointView< Eigen::Lower >() * v;
        out.head(n_) -= reg_ * v.head(n_);
        out.tail(p_ + nk_) += reg_ * v.tail(p_ + nk_);
        return out;
    }

    const ConeProblem& pb_;
    const ConeOps&     ops_;
    double             reg_;
    int                n_ = 0, p_ = 0, m_ = 0, nk_ = 0, N_ = 0;
    std::vector< int >    row_nnz_, kept_index_, kept_rows_, elim_col_;
    std::vector< double > elim_val_;
    std::vector< int >    diag_slot_;
    std::vector< std::vector< int > > soc_slots_;
    std::vector< Eigen::MatrixXd >    w2_;
    Eigen::VectorXd                   xdiag_, lpw2_;
    SparseMatrix                      K_;
    Eigen::SimplicialLDLT< SparseMatrix, Eigen::Lower, Eigen::AMDOrdering< int > > ldl_;
};

// ---------------------------------------------------------------------------
// Ruiz equilibration of [A; G]; cone blocks share one row factor.

struct Equilibration
{
    Eigen::VectorXd D;  ///< column scale (x = D x~)
    Eigen::VectorXd EA; ///< row scale of A
    Eigen::VectorXd EG; ///< row scale of G
    double          cscale = 1.0;
    double          bscale = 1.0;
};

inline Equilibration equilibrate(ConeProblem& pb, int iters)
{
    const auto n = pb.c.size();
    const auto p = pb.b.size();
    const auto m = pb.h.size();
    Equilibration eq{Eigen::VectorXd::Ones(n), Eigen::VectorXd::Ones(p), Eigen::VectorXd::Ones(m)};
    ConeOps       ops(pb.dims);
    for (int it = 0; it < iters; ++it)
    {
        Eigen::VectorXd cn = Eigen::VectorXd::Zero(n), ra = Eigen::VectorXd::Zero(p), rg = Eigen::VectorXd::Zero(m);
        for (int col = 0; col < n; ++col)
        {
            for (SparseMatrix::InnerIterator i(pb.A, col); i; ++i)
            {
                cn(col)     = std::max(cn(col), std::abs(i.value()));
                ra(i.row()) = std::max(ra(i.row()), std::abs(i.value()));
            }
            for (SparseMatrix::InnerIterator i(pb.G, col); i; ++i)
            {
                cn(col)     = std::max(cn(col), std::abs(i.value()));
                rg(i.row()) = std::max(rg(i.row()), std::abs(i.value()));
            }
        }
        ops.each_soc([&](std::size_t, int off, int k) {
            const double mx = rg.segment(off, k).maxCoeff();
            rg.segment(off, k).setConstant(mx);
        });
        auto inv_sqrt = [](double v) { return v > 0.0 ? 1.0 / std::sqrt(std::clamp(v, 1e-8, 1e8)) : 1.0; };
        Eigen::VectorXd dc(n), da(p), dg(m);
        for (int j = 0; j < n; ++j)
            dc(j) = inv_sqrt(cn(j));
        for (int j = 0; j < p; ++j)
            da(j) = inv_sqrt(ra(j));
        for (int j = 0; j < m; ++j)
            dg(j) = inv_sqrt(rg(j));
        pb.A = da.asDiagonal() * pb.A * dc.asDiagonal();
        pb.G = dg.asDiagonal() * pb.G * dc.asDiagonal();
        eq.D  = eq.D.cwiseProduct(dc);
        eq.EA = eq.EA.cwiseProduct(da);
        eq.EG = eq.EG.cwiseProduct(dg);
    }
    pb.b = eq.EA.cwiseProduct(pb.b);
    pb.h = eq.EG.cwiseProduct(pb.h);
    pb.c = eq.D.cwiseProduct(pb.c);
    const double cn = pb.c.lpNorm< Eigen::Infinity >();
    eq.cscale       = cn > 0.0 ? 1.0 / std::max(cn, 1e-6) : 1.0;
    pb.c *= eq.cscale;
    double bn = 0.0;
    if (p > 0)
        bn = std::max(bn, pb.b.lpNorm< Eigen::Infinity >());
    if (m > 0)
        bn = std::max(bn, pb.h.lpNorm< Eigen::Infinity >());
    eq.bscale = bn > 1.0 ? 1.0 / bn : 1.0;
    pb.b *= eq.bscale;
    pb.h *= eq.bscale;
    return eq;
}

} // namespace detail

/// Solves the cone program. The input is copied; equilibration is internal.
inline IpmResult solve_cone_program(ConeProblem pb, const IpmSettings& st = {})
{
    using Eigen::VectorXd;
    const int n = static_cast< int >(pb.c.size());
    const int p = static_cast< int >(pb.b.size());
    const int m = static_cast< int >(pb.h.size());
    if (pb.A.rows() != p || pb.A.cols() != n || pb.G.rows() != m || pb.G.cols() != n || pb.dims.rows() != m)
        throw Error(ErrorCode::DimensionMismatch, "cone program dimensions are inconsistent");
    for (int k : pb.dims.q)
        if (k < 1)
            throw Error(ErrorCode::InvalidArgument, "second-order cone blocks must have size >= 1");

    const auto      eq = detail::equilibrate(pb, st.ruiz_iter);
    detail::ConeOps ops(pb.dims);
    detail::Kkt     kkt(pb, ops, st.static_reg);
    IpmResult       res;

    auto unscale = [&](const VectorXd& x, const VectorXd& y, const VectorXd& z, const VectorXd& s, double tau) {
        res.x = eq.D.cwiseProduct(x) / (tau * eq.bscale);
        res.y = eq.EA.cwiseProduct(y) / (tau * eq.cscale);
        res.z = eq.EG.cwiseProduct(z) / (tau * eq.cscale);
        res.s = s.cwiseQuotient(eq.EG) / (tau * eq.bscale);
    };

    // Initialization: two least-squares solves with identity scaling.
    auto sc = ops.identity();
    if (!kkt.factor(sc))
    {
        res.status = IpmStatus::NumericFailure;
        return res;
    }
    VectorXd x, y, z, s, tx, ty, tz;
    kkt.solve(VectorXd::Zero(n), pb.b, pb.h, st.refine, x, ty, tz);
    s = -tz;
    {
        const double a = ops.shift_needed(s);
        if (a >= -1e-8)
            s += (1.0 + std::max(a, 0.0)) * ops.unit();
    }
    kkt.solve(-pb.c, VectorXd::Zero(p), VectorXd::Zero(m), st.refine, tx, y, z);
    {
        const double a = ops.shift_needed(z);
        if (a >= -1e-8)
            z += (1.0 + std::max(a, 0.0)) * ops.unit();
    }
    double tau = 1.0, kappa = 1.0;

    const double resx0 = std::max(1.0, pb.c.norm());
    const double resy0 = std::max(1.0, pb.b.norm());
    const double resz0 = std::max(1.0, pb.h.norm());
    const double deg   = pb.dims.degree() + 1.0;
    const VectorXd e   = ops.unit();

    double best_score = kInf;
    struct Snapshot
    {
        VectorXd x, y, z, s;
        double   tau = 1.0, pres = kInf, dres = kInf, relgap = kInf, gap = kInf, pcost = 0, dcost = 0;
    } best;

    for (int iter = 0; iter <= st.max_iter; ++iter)
    {
        res.iterations = iter;
        // Residuals of the embedding.
        const VectorXd rx = pb.A.transpose() * y + pb.G.transpose() * z + pb.c * tau;
        const VectorXd ry = -(pb.A * x) + pb.b * tau;
        const VectorXd rz = -(pb.G * x) + pb.h * tau - s;
        const double   cx = pb.c.dot(x), by = pb.b.dot(y), hz = pb.h.dot(z);
        const double   rt = -cx - by - hz - kappa;

        const double pres   = std::max(ry.norm() / resy0, rz.norm() / resz0) / tau;
        const double dres   = rx.norm() / resx0 / tau;
        const double pcost  = cx / tau;
        const double dcost  = (-by - hz) / tau;
        const double gap    = s.dot(z) / (tau * tau);
        double       relgap = kInf;
        if (pcost < 0.0)
            relgap = gap / -pcost;
        else if (dcost > 0.0)
            relgap = gap / dcost;
        const double absgap = std::abs(pcost - dcost);
        relgap              = std::min(relgap, absgap / std::max(1.0, std::min(std::abs(pcost), std::abs(dcost))));

        if (st.verbose)
            std::fprintf(stderr, "ipm %3d  pcost %+.6e  dcost %+.6e  pres %.2e  dres %.2e  gap %.2e  tau %.2e  kappa %.2e\n",
                         iter, pcost, dcost, pres, dres, gap, tau, kappa);

        const double score = std::max({pres, dres, std::min(relgap, gap)});
        if (score < best_score)
        {
            best_score = score;
            best       = {x, y, z, s, tau, pres, dres, relgap, gap, pcost, dcost};
        }

        if (pres < st.feastol && dres < st.feastol && (gap < st.abstol || relgap < st.reltol))
        {
            res.status = IpmStatus::Optimal;
            unscale(x, y, z, s, tau);
            res.pcost = pcost / (eq.cscale * eq.bscale);
            res.dcost = dcost / (eq.cscale * eq.bscale);
            res.pres = pres, res.dres = dres, res.gap = gap / (eq.cscale * eq.bscale);
            return res;
        }
        // Infeasibility certificates.
        if (by + hz < 0.0)
        {
            const double pinf = (pb.A.transpose() * y + pb.G.transpose() * z).norm() / resx0 / -(by + hz);
            if (pinf < st.feastol && tau < kappa)
            {
                res.status = IpmStatus::PrimalInfeasible;
                res.y      = eq.EA.cwiseProduct(y) / -(by + hz);
                res.z      = eq.EG.cwiseProduct(z) / -(by + hz);
                return res;
            }
        }
        if (cx < 0.0)
        {
            const double dinf =
                std::max((pb.A * x).norm() / resy0, (pb.G * x + s).norm() / resz0) / -cx;
            if (dinf < st.feastol && tau < kappa)
            {
                res.status = IpmStatus::DualInfeasible;
                res.x      = eq.D.cwiseProduct(x) / -cx;
                return res;
            }
        }
        if (iter == st.max_iter)
            break;

        if (!ops.nt_scaling(s, z, sc) || !kkt.factor(sc))
            break;
        const VectorXd& lam = sc.lambda;
        const double    mu  = (s.dot(z) + tau * kappa) / deg;

        VectorXd dx1, dy1, dz1;
        kkt.solve(-pb.c, pb.b, pb.h, st.refine, dx1, dy1, dz1);
        const double den_base = -(pb.c.dot(dx1) + pb.b.dot(dy1) + pb.h.dot(dz1));

        auto direction = [&](double sigma, const VectorXd& rc, double rtk, VectorXd& dx, VectorXd& dy, VectorXd& dz,
                             VectorXd& ds, double& dtau, double& dkap) {
            const double   f   = 1.0 - sigma;
            const VectorXd lrc = ops.jdiv(lam, rc);
            const VectorXd wl  = ops.apply_w(sc, lrc);
            VectorXd       dx0, dy0, dz0;
            kkt.solve(-f * rx, f * ry, f * rz - wl, st.refine, dx0, dy0, dz0);
            const double num = -f * rt + rtk / tau + pb.c.dot(dx0) + pb.b.dot(dy0) + pb.h.dot(dz0);
            const double den = kappa / tau + den_base;
            dtau             = num / den;
            dx               = dx0 + dtau * dx1;
            dy               = dy0 + dtau * dy1;
            dz               = dz0 + dtau * dz1;
            ds               = ops.apply_w(sc, lrc - ops.apply_w(sc, dz));
            dkap             = (rtk - kappa * dtau) / tau;
        };
        auto step_len = [&](const VectorXd& ds, const VectorXd& dz, double dtau, double dkap) {
            double a = ops.max_step(s, ds, 1.0);
            a        = ops.max_step(z, dz, a);
            if (dtau < 0.0)
                a = std::min(a, -tau / dtau);
            if (dkap < 0.0)
                a = std::min(a, -kappa / dkap);
            return a;
        };

        // Predictor.
        VectorXd dxa, dya, dza, dsa;
        double   dta = 0, dka = 0;
        direction(0.0, -ops.jprod(lam, lam), -tau * kappa, dxa, dya, dza, dsa, dta, dka);
        const double aa    = step_len(dsa, dza, dta, dka);
        const double sigma = std::clamp(std::pow(1.0 - aa, 3), 0.0, 1.0);

        // Corrector.
        const VectorXd corr = ops.jprod(ops.apply_winv(sc, dsa), ops.apply_w(sc, dza));
        VectorXd       dx, dy, dz, ds;
        double         dt = 0, dk = 0;
        direction(sigma, -ops.jprod(lam, lam) + sigma * mu * e - corr, -tau * kappa + sigma * mu - dta * dka, dx, dy,
                  dz, ds, dt, dk);
        double a = step_len(ds, dz, dt, dk);
        a        = std::min(1.0, 0.99 * a);
        if (!(a > 1e-12) || !dx.allFinite())
            break;
        x += a * dx;
        y += a * dy;
        z += a * dz;
        s += a * ds;
        tau += a * dt;
        kappa += a * dk;
        if (!(tau > 0.0) || !(kappa > 0.0))
            break;
    }

    // Stalled or out of iterations: accept the best iterate at reduced accuracy.
    if (best.pres < st.feastol_inacc && best.dres < st.feastol_inacc &&
        (best.gap < st.feastol_inacc || best.relgap < st.reltol_inacc))
    {
        res.status           = IpmStatus::Optimal;
        res.reduced_accuracy = true;
        unscale(best.x, best.y, best.z, best.s, best.tau);
        res.pcost = best.pcost / (eq.cscale * eq.bscale);
        res.dcost = best.dcost / (eq.cscale * eq.bscale);
        res.pres = best.pres, res.dres = best.dres, res.gap = best.gap / (eq.cscale * eq.bscale);
        return res;
    }
    res.status = res.iterations >= st.max_iter ? IpmStatus::MaxIterations : IpmStatus::NumericFailure;
    if (best.x.size() == n)
        unscale(best.x, best.y, best.z, best.s, best.tau);
    return res;
}

} // namespace vscuc

#endif // VSCUC_IPM_HPP
