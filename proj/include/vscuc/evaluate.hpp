#ifndef VSCUC_EVALUATE_HPP
#define VSCUC_EVALUATE_HPP

// Ex-post evaluation of solved schedules. Stability is re-checked with exact
// impedance ratios, so surrogate error shows up in the violation rate.

#include "vscuc/admittance.hpp"
#include "vscuc/formulation.hpp"
#include "vscuc/solver.hpp"

#include <iomanip>
#include <sstream>

namespace vscuc
{

/// Values of a solved program in case units (per unit), detached from the
/// variable handles. Absent quantities read 0.
struct ScheduleSolution
{
    Mode   mode      = Mode::BaseSi;
    double objective = 0.0;

    std::vector< DeviceConfig > config; ///< per depth
    std::vector< double >       u_start; ///< per depth, summed start-ups

    std::vector< int >    depth;
    std::vector< double > probability, duration;

    std::vector< std::vector< double > > p_g, q_g, p_v, q_v, p_c, q_c, h_s, q_stat, shed;
    std::vector< std::vector< double > > c_ii, c_ij, s_ij;
    std::vector< std::vector< double > > p_hat, q_hat, gamma; ///< model values, VSC modes only
    std::vector< std::vector< double > > wind_avail, load_p;
    std::vector< double >                h, r;
    std::vector< std::pair< int, int > > branches;

    std::vector< double > point;

    std::size_t num_nodes() const { return depth.size(); }
    const DeviceConfig& config_of(std::size_t n) const { return config[static_cast< std::size_t >(depth[n])]; }
};

inline ScheduleSolution extract_schedule(const BuiltProgram& bp, const ScenarioTree& tree, const std::vector< double >& x,
                                         double objective)
{
    if (x.size() != bp.program.num_vars())
        throw Error(ErrorCode::DimensionMismatch, "point dimension does not match the program");
    const auto& vm  = bp.vars;
    auto        val = [&](int j) { return j < 0 ? 0.0 : x[static_cast< std::size_t >(j)]; };
    auto        row = [&](const std::vector< int >& h) {
        std::vector< double > out;
        out.reserve(h.size());
        for (int j : h)
            out.push_back(val(j));
        return out;
    };
    auto rows = [&](const std::vector< std::vector< int > >& h) {
        std::vector< std::vector< double > > out;
        for (const auto& v : h)
            out.push_back(row(v));
        return out;
    };

    ScheduleSolution s;
    s.mode      = bp.options.mode;
    s.objective = objective;
    for (std::size_t d = 0; d < vm.x.size(); ++d)
    {
        DeviceConfig c;
        for (int j : vm.x[d])
            c.sg_on.push_back(std::round(val(j)));
        for (std::size_t g = 0; g < vm.alpha_sel[d].size(); ++g)
            c.alpha.push_back(std::clamp(vm.alpha(d, g).eval(x), 0.0, 1.0));
        for (int j : vm.sc_on[d])
            c.sc_on.push_back(std::round(val(j)));
        s.config.push_back(std::move(c));
        double us = 0.0;
        for (int j : vm.u[d])
            us += val(j);
        s.u_start.push_back(us);
    }
    for (const auto& n : tree.nodes())
    {
        s.depth.push_back(n.depth);
        s.probability.push_back(n.probability);
        s.duration.push_back(n.duration);
    }
    s.p_g    = rows(vm.p_g);
    s.q_g    = rows(vm.q_g);
    s.p_v    = rows(vm.p_v);
    s.q_v    = rows(vm.q_v);
    s.p_c    = rows(vm.p_c);
    s.q_c    = rows(vm.q_c);
    s.h_s    = rows(vm.h_s);
    s.q_stat = rows(vm.q_stat);
    s.shed   = rows(vm.shed);
    s.c_ii   = rows(vm.c_ii);
    s.c_ij   = rows(vm.c_ij);
    s.s_ij   = rows(vm.s_ij);
    s.p_hat  = rows(vm.p_hat);
    s.q_hat  = rows(vm.q_hat);
    s.gamma  = rows(vm.gamma);
    s.h      = row(vm.h);
    s.r      = row(vm.r);
    s.wind_avail = vm.wind_avail;
    s.load_p     = vm.load_p;
    s.branches   = vm.branches;
    s.point      = x;
    return s;
}

// ---------------------------------------------------------------------------
// Voltage stability.

inline constexpr double kViolationScale = 1.0 + 1e-6;

/// P^2 + Q^2 > (Q + Gamma)^2 (1 + 1e-6), or a negative right-hand side.
inline bool stability_violated(double p_hat, double q_hat, double gamma)
{
    const double rhs = q_hat + gamma;
    return rhs < 0.0 || p_hat * p_hat + q_hat * q_hat > rhs * rhs * kViolationScale;
}

struct PairCheck
{
    int    node = 0;
    int    ibg  = 0;
    double p_hat = 0.0, q_hat = 0.0, gamma = 0.0;
    bool   violated = false;
    bool   singular = false;
};

struct ViolationReport
{
    double                  rate_pct           = 0.0; ///< exact impedance ratios
    double                  surrogate_rate_pct = 0.0; ///< learned ratios, -1 if no model given
    std::size_t             pairs              = 0;
    std::size_t             violations         = 0;
    std::size_t             singular           = 0;
    std::vector< PairCheck > checks;
    std::vector< double >    gamma_mean; ///< probability-weighted exact Gamma per IBG
};

namespace detail
{
inline std::pair< double, double > equivalent_injection(const ScheduleSolution& s, std::size_t n, std::size_t c,
                                                        const ZRatioSet& z)
{
    double ph = s.p_c[n][c], qh = s.q_c[n][c];
    for (std::size_t k = 0; k < z.num_ibgs(); ++k)
        if (k != c)
        {
            const double m = z.mutual(static_cast< Eigen::Index >(c), static_cast< Eigen::Index >(k));
            ph += m * s.p_c[n][k];
            qh += m * s.q_c[n][k];
        }
    return {ph, qh};
}
} // namespace detail

/// Counts (node, IBG) pairs that leave the stability cone. `gamma_scale`
/// shrinks every Gamma (1 = nominal).
inline ViolationReport violation_rate(const ScheduleSolution& s, const GridCase& gc, const SurrogateModel* model = nullptr,
                                      double gamma_scale = 1.0)
{
    ViolationReport out;
    const auto      nc = gc.gfl_ibgs.size();
    out.gamma_mean.assign(nc, 0.0);
    std::vector< double > wsum(nc, 0.0);
    std::size_t           sur_viol = 0;
    if (nc == 0)
    {
        out.surrogate_rate_pct = model ? 0.0 : -1.0;
        return out;
    }

    // Exact ratios depend only on the depth configuration.
    std::vector< std::optional< ZRatioSet > > exact(s.config.size());
    std::vector< bool >                       tried(s.config.size(), false);
    for (std::size_t n = 0; n < s.num_nodes(); ++n)
    {
        const auto d = static_cast< std::size_t >(s.depth[n]);
        if (!tried[d])
        {
            tried[d] = true;
            try
            {
                exact[d] = z_ratios(gc, s.config[d]);
            }
            catch (const Error&)
            {
                exact[d].reset();
            }
        }
        std::optional< ZRatioSet > learned;
        if (model)
            learned = predict(*model, s.config[d]);
        for (std::size_t c = 0; c < nc; ++c)
        {
            PairCheck pc;
            pc.node = static_cast< int >(n);
            pc.ibg  = static_cast< int >(c);
            ++out.pairs;
            if (!exact[d])
            {
                pc.singular = pc.violated = true;
                ++out.singular;
                ++out.violations;
                out.checks.push_back(pc);
                continue;
            }
            const auto [ph, qh] = detail::equivalent_injection(s, n, c, *exact[d]);
            pc.p_hat            = ph;
            pc.q_hat            = qh;
            pc.gamma            = gamma_scale * 0.5 * exact[d]->self[c];
            pc.violated         = stability_violated(ph, qh, pc.gamma);
            out.violations += pc.violated ? 1 : 0;
            out.gamma_mean[c] += s.probability[n] * s.duration[n] * pc.gamma;
            wsum[c] += s.probability[n] * s.duration[n];
            out.checks.push_back(pc);
            if (learned)
            {
                const auto [lp, lq] = detail::equivalent_injection(s, n, c, *learned);
                sur_viol += stability_violated(lp, lq, gamma_scale * 0.5 * learned->self[c]) ? 1 : 0;
            }
        }
    }
    for (std::size_t c = 0; c < nc; ++c)
        out.gamma_mean[c] = wsum[c] > 0.0 ? out.gamma_mean[c] / wsum[c] : 0.0;
    out.rate_pct           = 100.0 * static_cast< double >(out.violations) / static_cast< double >(out.pairs);
    out.surrogate_rate_pct = model ? 100.0 * static_cast< double >(sur_viol) / static_cast< double >(out.pairs) : -1.0;
    return out;
}

// ---------------------------------------------------------------------------
// Energy.

struct EnergyReport
{
    double curtailment_mw = 0.0;
    double shed_mw        = 0.0;
};

/// Expected hourly wind curtailment and load shedding in MW.
inline EnergyReport curtailment_and_shed(const ScheduleSolution& s, double base_mva)
{
    EnergyReport out;
    double       wt = 0.0;
    for (std::size_t n = 0; n < s.num_nodes(); ++n)
    {
        const double w = s.probability[n] * s.duration[n];
        double       cur = 0.0, shed = 0.0;
        for (std::size_t c = 0; c < s.p_c[n].size(); ++c)
            cur += std::max(0.0, s.wind_avail[n][c] - s.p_c[n][c]);
        for (double v : s.shed[n])
            shed += v;
        out.curtailment_mw += w * cur;
        out.shed_mw += w * shed;
        wt += w;
    }
    if (wt > 0.0)
    {
        out.curtailment_mw *= base_mva / wt;
        out.shed_mw *= base_mva / wt;
    }
    return out;
}

// ---------------------------------------------------------------------------
// Frequency.

/// HR - [x1^2 + (dP T_d / 4) sum H_sj^2] for SI-providing units.
inline double nadir_slack(double H, double R, const std::vector< double >& h_si, const FrequencyParams& f)
{
    double si = 0.0;
    for (double v : h_si)
        si += v * v;
    return H * R - (nadir_constant(f) + f.dp_l * f.t_d / 4.0 * si);
}

/// rocof_max - dP f0 / (2H) in Hz/s.
inline double rocof_slack(double H, const FrequencyParams& f)
{
    if (!(H > 0.0))
        return -kInf;
    return f.rocof_max - f.dp_l * f.f_nominal / (2.0 * H);
}

struct FrequencyReport
{
    double nadir_slack_min = kInf;
    double rocof_slack_min = kInf;
    double violation_pct   = 0.0; ///< nodes with a slack below -1e-6
    std::vector< double > nadir_slack, rocof_slack; ///< per node
};

/// Slacks rebuilt from the commitment and SI dispatch, not from H and R.
inline FrequencyReport frequency_slacks(const ScheduleSolution& s, const GridCase& gc)
{
    FrequencyReport out;
    std::size_t     bad = 0;
    for (std::size_t n = 0; n < s.num_nodes(); ++n)
    {
        const auto& cfg = s.config_of(n);
        double      H = 0.0, R = 0.0;
        for (std::size_t g = 0; g < gc.sync_gens.size(); ++g)
        {
            H += gc.sync_gens[g].inertia_h * gc.sync_gens[g].p_max * cfg.sg_on[g];
            R += gc.sync_gens[g].pfr_gain * cfg.sg_on[g];
        }
        std::vector< double > hs;
        for (std::size_t c = 0; c < gc.gfl_ibgs.size(); ++c)
            if (gc.gfl_ibgs[c].si_capable)
            {
                hs.push_back(s.h_s[n][c]);
                H += s.h_s[n][c];
            }
        const double ns = nadir_slack(H, R, hs, gc.freq);
        const double rs = gc.freq.rocof_max > 0.0 ? rocof_slack(H, gc.freq) : kInf;
        out.nadir_slack.push_back(ns);
        out.rocof_slack.push_back(rs);
        out.nadir_slack_min = std::min(out.nadir_slack_min, ns);
        out.rocof_slack_min = std::min(out.rocof_slack_min, rs);
        bad += ns < -1e-6 || rs < -1e-6 ? 1 : 0;
    }
    if (s.num_nodes() > 0)
        out.violation_pct = 100.0 * static_cast< double >(bad) / static_cast< double >(s.num_nodes());
    return out;
}

// ---------------------------------------------------------------------------
// Relaxation quality.

/// Residuals of the power-flow cones only.
inline ResidualSummary soc_gap(const BuiltProgram& bp, const std::vector< double >& x)
{
    return soc_residuals(bp.program, x, "pf");
}

struct Rank1Report
{
    double mean = 0.0;
    double max  = 0.0;
};

/// mean over branches and nodes of (c_ii c_jj - c_ij^2 - s_ij^2) / max(1, c_ii c_jj).
inline Rank1Report rank1_deviation(const ScheduleSolution& s)
{
    Rank1Report out;
    std::size_t k = 0;
    for (std::size_t n = 0; n < s.num_nodes(); ++n)
        for (std::size_t b = 0; b < s.branches.size(); ++b)
        {
            const auto [i, j] = s.branches[b];
            const double cc   = s.c_ii[n][static_cast< std::size_t >(i)] * s.c_ii[n][static_cast< std::size_t >(j)];
            const double dev  = (cc - s.c_ij[n][b] * s.c_ij[n][b] - s.s_ij[n][b] * s.s_ij[n][b]) / std::max(1.0, cc);
            out.mean += dev;
            out.max = std::max(out.max, dev);
            ++k;
        }
    if (k > 0)
        out.mean /= static_cast< double >(k);
    return out;
}

// ---------------------------------------------------------------------------
// Strength.

struct StrengthReport
{
    double                reference_mean = 0.0; ///< every device on, fixed across sweeps
    double                scheduled_mean = 0.0; ///< expected over the scheduled configurations
    std::vector< double > reference_per_ibg;
};

inline StrengthReport schedule_strength(const ScheduleSolution& s, const GridCase& gc)
{
    StrengthReport out;
    const auto     ref   = strength_indicator(gc, DeviceConfig::all_on(gc));
    out.reference_mean    = ref.mean;
    out.reference_per_ibg = ref.per_ibg;
    double wt             = 0.0;
    std::vector< std::optional< double > > per_depth(s.config.size());
    for (std::size_t n = 0; n < s.num_nodes(); ++n)
    {
        const auto d = static_cast< std::size_t >(s.depth[n]);
        if (!per_depth[d])
        {
            try
            {
                per_depth[d] = strength_indicator(gc, s.config[d]).mean;
            }
            catch (const Error&)
            {
                per_depth[d] = 0.0;
            }
        }
        const double w = s.probability[n] * s.duration[n];
        out.scheduled_mean += w * *per_depth[d];
        wt += w;
    }
    if (wt > 0.0)
        out.scheduled_mean /= wt;
    return out;
}

/// Probability-weighted voltage magnitude at every IBG bus.
inline std::vector< double > ibg_voltage_mean(const ScheduleSolution& s, const GridCase& gc)
{
    const BusIndex        idx(gc);
    std::vector< double > out(gc.gfl_ibgs.size(), 0.0);
    double                wt = 0.0;
    for (std::size_t n = 0; n < s.num_nodes(); ++n)
    {
        const double w = s.probability[n] * s.duration[n];
        for (std::size_t c = 0; c < out.size(); ++c)
            out[c] += w * std::sqrt(std::max(0.0, s.c_ii[n][static_cast< std::size_t >(idx(gc.gfl_ibgs[c].bus))]));
        wt += w;
    }
    for (double& v : out)
        v = wt > 0.0 ? v / wt : 0.0;
    return out;
}

// ---------------------------------------------------------------------------
// Total cost of ownership.

inline constexpr double kHoursPerYear = 8760.0;

struct TcoReport
{
    double p_loss  = 0.0; ///< MW
    double e_loss  = 0.0; ///< MWh/yr
    double c_loss  = 0.0; ///< $/yr
    double c_oandm = 0.0; ///< $/yr
};

inline TcoReport tco(double rating_mvar, double loss_fraction, double energy_price, double capex)
{
    if (rating_mvar < 0.0 || loss_fraction < 0.0 || energy_price < 0.0 || capex < 0.0)
        throw Error(ErrorCode::InvalidArgument, "TCO inputs must be non-negative");
    TcoReport r;
    r.p_loss  = loss_fraction * rating_mvar;
    r.e_loss  = kHoursPerYear * r.p_loss;
    r.c_loss  = energy_price * r.e_loss;
    r.c_oandm = 0.01 * capex;
    return r;
}

// ---------------------------------------------------------------------------
// Report.

struct MetricsReport
{
    std::string experiment;
    double      sweep_value = 0.0;
    std::string mode;
    std::string status;
    double      cost_expected  = 0.0; ///< $ over the horizon divided by its hours
    double      objective      = 0.0;
    double      rel_gap        = 0.0;
    double      violation_rate_pct    = 0.0;
    double      surrogate_violation_pct = -1.0;
    double      curtailment_mw = 0.0;
    double      shed_mw        = 0.0;
    double      freq_violation_pct = 0.0;
    double      nadir_slack_min = 0.0;
    double      rocof_slack_min = 0.0;
    double      soc_gap_mean = 0.0;
    double      soc_gap_max  = 0.0;
    double      rank1_mean   = 0.0;
    double      strength_mean = 0.0;
    double      strength_scheduled = 0.0;
    double      wall_time_s  = 0.0;
    long        nodes        = 0;
    std::vector< int >    ibg_bus;
    std::vector< double > ibg_voltage, ibg_gamma;
};

inline MetricsReport evaluate_schedule(const ScheduleSolution& s, const BuiltProgram& bp, const GridCase& gc,
                                       const SurrogateModel* model = nullptr)
{
    MetricsReport m;
    m.mode      = to_string(s.mode);
    m.status    = "OPTIMAL";
    m.objective = s.objective;
    double hours = 0.0;
    for (std::size_t n = 0; n < s.num_nodes(); ++n)
        hours += s.probability[n] * s.duration[n];
    m.cost_expected = hours > 0.0 ? s.objective / hours : s.objective;

    const auto v             = violation_rate(s, gc, model);
    m.violation_rate_pct     = v.rate_pct;
    m.surrogate_violation_pct = v.surrogate_rate_pct;
    const auto e             = curtailment_and_shed(s, gc.base_mva);
    m.curtailment_mw         = e.curtailment_mw;
    m.shed_mw                = e.shed_mw;
    const auto f             = frequency_slacks(s, gc);
    m.freq_violation_pct     = f.violation_pct;
    m.nadir_slack_min        = f.nadir_slack_min;
    m.rocof_slack_min        = f.rocof_slack_min;
    const auto g             = soc_gap(bp, s.point);
    m.soc_gap_mean           = g.mean;
    m.soc_gap_max            = g.max;
    m.rank1_mean             = rank1_deviation(s).mean;
    const auto st            = schedule_strength(s, gc);
    m.strength_mean          = st.reference_mean;
    m.strength_scheduled     = st.scheduled_mean;
    for (const auto& ib : gc.gfl_ibgs)
        m.ibg_bus.push_back(ib.bus);
    m.ibg_voltage = ibg_voltage_mean(s, gc);
    m.ibg_gamma   = v.gamma_mean;
    return m;
}

inline std::vector< std::string > metrics_columns(const std::vector< int >& ibg_bus)
{
    std::vector< std::string > cols{"experiment", "sweep_value", "mode", "status", "cost_per_h", "objective",
                                    "rel_gap", "viol_pct", "viol_surrogate_pct", "curtail_mw", "shed_mw",
                                    "freq_viol_pct", "nadir_slack_min", "rocof_slack_min", "soc_gap_mean",
                                    "soc_gap_max", "rank1_mean", "strength_mean", "strength_scheduled", "nodes",
                                    "wall_s"};
    for (int b : ibg_bus)
        cols.push_back("V_" + std::to_string(b));
    for (int b : ibg_bus)
        cols.push_back("Gamma_" + std::to_string(b));
    return cols;
}

inline std::string csv_header(const std::vector< int >& ibg_bus)
{
    std::string out;
    for (const auto& c : metrics_columns(ibg_bus))
        out += (out.empty() ? "" : ",") + c;
    return out;
}

inline std::string csv_row(const MetricsReport& m)
{
    std::ostringstream os;
    os << std::setprecision(10);
    auto num = [&](double v) {
        if (std::isfinite(v))
            os << v;
        else
            os << (std::isnan(v) ? "nan" : (v > 0 ? "inf" : "-inf"));
    };
    os << m.experiment << ',';
    num(m.sweep_value);
    os << ',' << m.mode << ',' << m.status;
    for (double v : {m.cost_expected, m.objective, m.rel_gap, m.violation_rate_pct, m.surrogate_violation_pct,
                     m.curtailment_mw, m.shed_mw, m.freq_violation_pct, m.nadir_slack_min, m.rocof_slack_min,
                     m.soc_gap_mean, m.soc_gap_max, m.rank1_mean, m.strength_mean, m.strength_scheduled})
    {
        os << ',';
        num(v);
    }
    os << ',' << m.nodes << ',';
    num(m.wall_time_s);
    for (std::size_t c = 0; c < m.ibg_bus.size(); ++c)
    {
        os << ',';
        num(c < m.ibg_voltage.size() ? m.ibg_voltage[c] : std::nan(""));
    }
    for (std::size_t c = 0; c < m.ibg_bus.size(); ++c)
    {
        os << ',';
        num(c < m.ibg_gamma.size() ? m.ibg_gamma[c] : std::nan(""));
    }
    return os.str();
}

} // namespace vscuc

#endif // VSCUC_EVALUATE_HPP
