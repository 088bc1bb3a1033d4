#ifndef VSCUC_ADMITTANCE_HPP
#define VSCUC_ADMITTANCE_HPP

// Bus admittance assembly (Y0 from lines, Yg from voltage-regulating
// devices), inversion to the bus impedance matrix and the exact Z-ratios that
// serve as ground truth for the surrogate and the ex-post evaluation.

#include "vscuc/grid_case.hpp"

#include <Eigen/Dense>

#include <numeric>

namespace vscuc
{

using ComplexMatrix = Eigen::MatrixXcd;
using ComplexVector = Eigen::VectorXcd;

/// Device status vector that selects Yg: commitment per SG, strength level
/// per GFM and on/off per synchronous condenser (case order).
struct DeviceConfig
{
    std::vector< double > sg_on;
    std::vector< double > alpha;
    std::vector< double > sc_on;

    bool operator==(const DeviceConfig&) const = default;

    static DeviceConfig all_on(const GridCase& gc)
    {
        return {std::vector< double >(gc.sync_gens.size(), 1.0), std::vector< double >(gc.gfm_units.size(), 1.0),
                std::vector< double >(gc.num_condensers(), 1.0)};
    }
};

struct ImpedanceOptions
{
    bool lossless = false; ///< drop line resistance when assembling Y0
};

/// Pi-model bus admittance from lines only.
inline ComplexMatrix build_y0(const GridCase& gc, const ImpedanceOptions& opt = {})
{
    const BusIndex idx(gc);
    const auto     n = static_cast< Eigen::Index >(gc.num_buses());
    ComplexMatrix  y = ComplexMatrix::Zero(n, n);
    for (const auto& l : gc.lines)
    {
        const int     i  = idx(l.from_bus);
        const int     j  = idx(l.to_bus);
        const Complex ys = 1.0 / Complex(opt.lossless ? 0.0 : l.r, l.x);
        const Complex sh(0.0, 0.5 * l.b_sh);
        y(i, i) += ys + sh;
        y(j, j) += ys + sh;
        y(i, j) -= ys;
        y(j, i) -= ys;
    }
    return y;
}

/// Diagonal of Yg. SGs contribute x/(jX), GFMs alpha/(jX), condensers
/// on*rating/(jX); grid-following IBGs and STATCOMs contribute nothing.
inline ComplexVector build_yg(const GridCase& gc, const DeviceConfig& cfg)
{
    if (cfg.sg_on.size() != gc.sync_gens.size() || cfg.alpha.size() != gc.gfm_units.size() ||
        cfg.sc_on.size() != gc.num_condensers())
        throw Error(ErrorCode::DimensionMismatch, "device configuration does not match the case fleet");

    const BusIndex idx(gc);
    ComplexVector  yg = ComplexVector::Zero(static_cast< Eigen::Index >(gc.num_buses()));
    for (std::size_t g = 0; g < gc.sync_gens.size(); ++g)
        yg(idx(gc.sync_gens[g].bus)) += cfg.sg_on[g] / Complex(0.0, gc.sync_gens[g].x_transient);
    for (std::size_t v = 0; v < gc.gfm_units.size(); ++v)
    {
        if (cfg.alpha[v] < 0.0 || cfg.alpha[v] > 1.0)
            throw Error(ErrorCode::InvalidArgument, "alpha outside [0,1]");
        yg(idx(gc.gfm_units[v].bus)) += cfg.alpha[v] / Complex(0.0, gc.gfm_units[v].x_transient);
    }
    std::size_t k = 0;
    for (const auto& d : gc.shunt_devices)
    {
        if (d.kind != ShuntKind::SynchronousCondenser)
            continue;
        yg(idx(d.bus)) += cfg.sc_on[k++] * d.q_rating / Complex(0.0, d.x_transient);
    }
    return yg;
}

struct AdmittanceModel
{
    ComplexMatrix y0;
    ComplexVector yg;

    ComplexMatrix y() const
    {
        ComplexMatrix out = y0;
        out.diagonal() += yg;
        return out;
    }
};

struct ImpedanceModel
{
    ComplexMatrix z;
    DeviceConfig  config;
    double        rcond    = 0.0;
    double        residual = 0.0; ///< ||Y Z - I||_inf
};

inline constexpr double kIllConditionedLimit = 1e12;
inline constexpr double kInverseResidualTol  = 1e-9;

inline ImpedanceModel compute_z(const AdmittanceModel& model, const DeviceConfig& cfg = {})
{
    if ((model.yg.array().abs() == 0.0).all())
        throw Error(ErrorCode::Singular, "no voltage-regulating device is online");

    const ComplexMatrix y = model.y();
    const auto          n = y.rows();
    Eigen::PartialPivLU< ComplexMatrix > lu(y);
    const ComplexMatrix& lu_mat = lu.matrixLU();
    for (Eigen::Index i = 0; i < n; ++i)
        if (std::abs(lu_mat(i, i)) == 0.0)
            throw Error(ErrorCode::Singular, "admittance matrix is singular");
    const double rcond = lu.rcond();
    if (!(rcond * kIllConditionedLimit >= 1.0))
        throw Error(ErrorCode::IllConditioned, "condition estimate " + std::to_string(1.0 / rcond) + " exceeds 1e12");

    ImpedanceModel out;
    out.z        = lu.inverse();
    out.config   = cfg;
    out.rcond    = rcond;
    out.residual = ((y * out.z) - ComplexMatrix::Identity(n, n)).rowwise().lpNorm< 1 >().maxCoeff();
    if (!(out.residual < kInverseResidualTol))
        throw Error(ErrorCode::IllConditioned, "inverse residual " + std::to_string(out.residual) + " above 1e-9");
    return out;
}

inline ImpedanceModel compute_z(const GridCase& gc, const DeviceConfig& cfg, const ImpedanceOptions& opt = {})
{
    return compute_z(AdmittanceModel{build_y0(gc, opt), build_yg(gc, cfg)}, cfg);
}

/// Exact impedance ratios at the grid-following IBG buses.
struct ZRatioSet
{
    std::vector< double > self;   ///< 1/|Z_cc| per IBG
    Eigen::MatrixXd       mutual; ///< (c, c') = |Z_cc'|/|Z_cc|; diagonal unused (0)

    std::size_t num_ibgs() const { return self.size(); }

    /// Flattened targets: per IBG c, the self ratio then mutual ratios for
    /// c' != c in case order.
    std::vector< double > flatten() const
    {
        std::vector< double > out;
        const auto            n = self.size();
        for (std::size_t c = 0; c < n; ++c)
        {
            out.push_back(self[c]);
            for (std::size_t k = 0; k < n; ++k)
                if (k != c)
                    out.push_back(mutual(static_cast< Eigen::Index >(c), static_cast< Eigen::Index >(k)));
        }
        return out;
    }

    static ZRatioSet unflatten(const std::vector< double >& flat, std::size_t n)
    {
        if (flat.size() != n * n)
            throw Error(ErrorCode::DimensionMismatch, "flattened Z-ratio vector has wrong size");
        ZRatioSet   out;
        std::size_t p = 0;
        out.mutual    = Eigen::MatrixXd::Zero(static_cast< Eigen::Index >(n), static_cast< Eigen::Index >(n));
        for (std::size_t c = 0; c < n; ++c)
        {
            out.self.push_back(flat[p++]);
            for (std::size_t k = 0; k < n; ++k)
                if (k != c)
                    out.mutual(static_cast< Eigen::Index >(c), static_cast< Eigen::Index >(k)) = flat[p++];
        }
        return out;
    }
};

/// Target names in flatten() order, e.g. "z1_23", "z24_23".
inline std::vector< std::string > z_ratio_names(const GridCase& gc)
{
    std::vector< std::string > out;
    const auto&                c = gc.gfl_ibgs;
    for (std::size_t i = 0; i < c.size(); ++i)
    {
        out.push_back("z1_" + std::to_string(c[i].bus));
        for (std::size_t k = 0; k < c.size(); ++k)
            if (k != i)
                out.push_back("z" + std::to_string(c[k].bus) + "_" + std::to_string(c[i].bus));
    }
    return out;
}

inline ZRatioSet z_ratios_from(const GridCase& gc, const ComplexMatrix& z)
{
    const BusIndex idx(gc);
    const auto     n = gc.gfl_ibgs.size();
    ZRatioSet      out;
    out.mutual = Eigen::MatrixXd::Zero(static_cast< Eigen::Index >(n), static_cast< Eigen::Index >(n));
    for (std::size_t c = 0; c < n; ++c)
    {
        const int    bc  = idx(gc.gfl_ibgs[c].bus);
        const double zcc = std::abs(z(bc, bc));
        out.self.push_back(1.0 / zcc);
        for (std::size_t k = 0; k < n; ++k)
            if (k != c)
                out.mutual(static_cast< Eigen::Index >(c), static_cast< Eigen::Index >(k)) =
                    std::abs(z(bc, idx(gc.gfl_ibgs[k].bus))) / zcc;
    }
    return out;
}

inline ZRatioSet z_ratios(const GridCase& gc, const DeviceConfig& cfg, const ImpedanceOptions& opt = {})
{
    return z_ratios_from(gc, compute_z(gc, cfg, opt).z);
}

struct StrengthIndicator
{
    std::vector< double > per_ibg;
    double                mean = 0.0;
};

/// Local system strength 1/|Z_cc| at every IBG bus and its mean.
inline StrengthIndicator strength_indicator(const GridCase& gc, const DeviceConfig& cfg, const ImpedanceOptions& opt = {})
{
    StrengthIndicator out;
    out.per_ibg = z_ratios(gc, cfg, opt).self;
    if (!out.per_ibg.empty())
        out.mean = std::accumulate(out.per_ibg.begin(), out.per_ibg.end(), 0.0) / static_cast< double >(out.per_ibg.size());
    return out;
}

} // namespace vscuc

#endif // VSCUC_ADMITTANCE_HPP
