#ifndef VSCUC_SURROGATE_HPP
#define VSCUC_SURROGATE_HPP

// Offline Z-ratio surrogate: exhaustive configuration dataset, linear model
// over {binary statuses, GFM strengths, pairwise interactions, constant},
// two-pass least squares with hard pruning.

#include "vscuc/admittance.hpp"

#include <Eigen/QR>

#include <cstdint>
#include <iomanip>

namespace vscuc
{

/// Feature ordering shared by the dataset, the regression and the MISOCP
/// builder: binaries (SGs then condensers), GFM strengths, then interactions
/// (binary pairs lexicographic, binary x GFM, GFM pairs), then the constant
/// column when `intercept` is set.
struct FeatureLayout
{
    std::size_t n_binary  = 0;
    std::size_t n_gfm     = 0;
    bool        intercept = true;

    enum class Kind
    {
        Binary,
        Alpha,
        BinaryBinary,
        BinaryAlpha,
        AlphaAlpha,
        Constant,
    };

    struct Feature
    {
        Kind        kind;
        std::size_t a = 0; ///< first factor index (within its group)
        std::size_t b = 0; ///< second factor index, for interactions
    };

    static FeatureLayout of(const GridCase& gc) { return {gc.sync_gens.size() + gc.num_condensers(), gc.gfm_units.size()}; }

    std::size_t num_interactions() const
    {
        return n_binary * (n_binary - (n_binary ? 1 : 0)) / 2 + n_binary * n_gfm + n_gfm * (n_gfm - (n_gfm ? 1 : 0)) / 2;
    }
    std::size_t num_features() const { return n_binary + n_gfm + num_interactions() + (intercept ? 1 : 0); }

    std::vector< Feature > features() const
    {
        std::vector< Feature > out;
        for (std::size_t i = 0; i < n_binary; ++i)
            out.push_back({Kind::Binary, i, 0});
        for (std::size_t v = 0; v < n_gfm; ++v)
            out.push_back({Kind::Alpha, v, 0});
        for (std::size_t i = 0; i < n_binary; ++i)
            for (std::size_t j = i + 1; j < n_binary; ++j)
                out.push_back({Kind::BinaryBinary, i, j});
        for (std::size_t i = 0; i < n_binary; ++i)
            for (std::size_t v = 0; v < n_gfm; ++v)
                out.push_back({Kind::BinaryAlpha, i, v});
        for (std::size_t v = 0; v < n_gfm; ++v)
            for (std::size_t w = v + 1; w < n_gfm; ++w)
                out.push_back({Kind::AlphaAlpha, v, w});
        if (intercept)
            out.push_back({Kind::Constant, 0, 0});
        return out;
    }

    bool operator==(const FeatureLayout&) const = default;
};

/// Binary status vector in feature order: SG commitments then condensers.
inline std::vector< double > binary_statuses(const DeviceConfig& cfg)
{
    std::vector< double > x = cfg.sg_on;
    x.insert(x.end(), cfg.sc_on.begin(), cfg.sc_on.end());
    return x;
}

/// Pairwise products in the fixed interaction ordering.
inline std::vector< double > interaction_terms(const std::vector< double >& x, const std::vector< double >& alpha)
{
    std::vector< double > eta;
    const auto            nb = x.size();
    const auto            nv = alpha.size();
    eta.reserve(nb * nb / 2 + nb * nv + nv * nv / 2);
    for (std::size_t i = 0; i < nb; ++i)
        for (std::size_t j = i + 1; j < nb; ++j)
            eta.push_back(x[i] * x[j]);
    for (std::size_t i = 0; i < nb; ++i)
        for (std::size_t v = 0; v < nv; ++v)
            eta.push_back(x[i] * alpha[v]);
    for (std::size_t v = 0; v < nv; ++v)
        for (std::size_t w = v + 1; w < nv; ++w)
            eta.push_back(alpha[v] * alpha[w]);
    return eta;
}

inline Eigen::VectorXd feature_vector(const std::vector< double >& x, const std::vector< double >& alpha,
                                      bool intercept = true)
{
    const auto      eta = interaction_terms(x, alpha);
    Eigen::VectorXd f(static_cast< Eigen::Index >(x.size() + alpha.size() + eta.size() + (intercept ? 1 : 0)));
    Eigen::Index    k = 0;
    for (double v : x)
        f(k++) = v;
    for (double v : alpha)
        f(k++) = v;
    for (double v : eta)
        f(k++) = v;
    if (intercept)
        f(k) = 1.0;
    return f;
}

inline std::vector< std::string > feature_names(const GridCase& gc)
{
    std::vector< std::string > bin;
    for (std::size_t g = 0; g < gc.sync_gens.size(); ++g)
        bin.push_back("x" + std::to_string(g + 1));
    for (std::size_t k = 0; k < gc.num_condensers(); ++k)
        bin.push_back("sc" + std::to_string(k + 1));
    std::vector< std::string > gfm;
    for (std::size_t v = 0; v < gc.gfm_units.size(); ++v)
        gfm.push_back("a" + std::to_string(v + 1));

    std::vector< std::string > out;
    for (const auto& f : FeatureLayout::of(gc).features())
    {
        switch (f.kind)
        {
        case FeatureLayout::Kind::Binary: out.push_back(bin[f.a]); break;
        case FeatureLayout::Kind::Alpha: out.push_back(gfm[f.a]); break;
        case FeatureLayout::Kind::BinaryBinary: out.push_back(bin[f.a] + "*" + bin[f.b]); break;
        case FeatureLayout::Kind::BinaryAlpha: out.push_back(bin[f.a] + "*" + gfm[f.b]); break;
        case FeatureLayout::Kind::AlphaAlpha: out.push_back(gfm[f.a] + "*" + gfm[f.b]); break;
        case FeatureLayout::Kind::Constant: out.push_back("1"); break;
        }
    }
    return out;
}

/// Uniform grid on [0,1] with n_v points including both endpoints.
inline double alpha_level(int level, int n_v) { return static_cast< double >(level) / static_cast< double >(n_v - 1); }

struct ConfigSample
{
    std::vector< double > x;
    std::vector< double > alpha;
    std::vector< double > eta;
    std::vector< double > targets; ///< ZRatioSet::flatten() order
};

struct Dataset
{
    FeatureLayout               layout;
    int                         n_v = 0;
    std::vector< std::string >  target_names;
    std::vector< ConfigSample > samples;
    std::uint64_t               candidates = 0;
    std::uint64_t               excluded   = 0;
    std::vector< std::string >  exclusion_log; ///< "index: reason"
};

inline std::uint64_t dataset_size(std::size_t n_binary, std::size_t n_gfm, int n_v)
{
    std::uint64_t n = std::uint64_t{1} << n_binary;
    for (std::size_t v = 0; v < n_gfm; ++v)
        n *= static_cast< std::uint64_t >(n_v);
    return n;
}

/// Enumerates every (binary status, alpha level) configuration and evaluates
/// the exact Z-ratios. Singular/ill-conditioned configurations are excluded
/// and logged. Ordering: binary mask outer (bit i = binary i), alpha levels
/// inner with GFM 0 slowest.
inline Dataset enumerate_dataset(const GridCase& gc, int n_v, const ImpedanceOptions& opt = {})
{
    if (n_v < 2)
        throw Error(ErrorCode::InvalidArgument, "n_v must be at least 2");
    const auto layout = FeatureLayout::of(gc);
    if (layout.n_binary > 30)
        throw Error(ErrorCode::InvalidArgument, "too many binary devices for exhaustive enumeration");

    Dataset ds;
    ds.layout       = layout;
    ds.n_v          = n_v;
    ds.target_names = z_ratio_names(gc);
    ds.candidates   = dataset_size(layout.n_binary, layout.n_gfm, n_v);

    const ComplexMatrix y0  = build_y0(gc, opt);
    const auto          nsg = gc.sync_gens.size();
    std::uint64_t       nalpha = dataset_size(0, layout.n_gfm, n_v);
    std::uint64_t       index  = 0;
    std::vector< int >  levels(layout.n_gfm, 0);
    for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << layout.n_binary); ++mask)
    {
        for (std::uint64_t a = 0; a < nalpha; ++a, ++index)
        {
            std::uint64_t rem = a;
            for (std::size_t v = layout.n_gfm; v-- > 0;)
            {
                levels[v] = static_cast< int >(rem % static_cast< std::uint64_t >(n_v));
                rem /= static_cast< std::uint64_t >(n_v);
            }
            DeviceConfig cfg;
            for (std::size_t i = 0; i < layout.n_binary; ++i)
            {
                const double on = ((mask >> i) & 1u) ? 1.0 : 0.0;
                (i < nsg ? cfg.sg_on : cfg.sc_on).push_back(on);
            }
            for (std::size_t v = 0; v < layout.n_gfm; ++v)
                cfg.alpha.push_back(alpha_level(levels[v], n_v));
            try
            {
                const auto   z = compute_z(AdmittanceModel{y0, build_yg(gc, cfg)}, cfg).z;
                ConfigSample s;
                s.x       = binary_statuses(cfg);
                s.alpha   = cfg.alpha;
                s.eta     = interaction_terms(s.x, s.alpha);
                s.targets = z_ratios_from(gc, z).flatten();
                ds.samples.push_back(std::move(s));
            }
            catch (const Error& e)
            {
                if (e.code() != ErrorCode::Singular && e.code() != ErrorCode::IllConditioned)
                    throw;
                ++ds.excluded;
                ds.exclusion_log.push_back(std::to_string(index) + ": " + e.what());
            }
        }
    }
    return ds;
}

inline Eigen::MatrixXd feature_matrix(const Dataset& ds)
{
    const auto      k = static_cast< Eigen::Index >(ds.layout.num_features());
    Eigen::MatrixXd f(static_cast< Eigen::Index >(ds.samples.size()), k);
    for (std::size_t r = 0; r < ds.samples.size(); ++r)
    {
        const auto& s = ds.samples[r];
        if (s.x.size() != ds.layout.n_binary || s.alpha.size() != ds.layout.n_gfm)
            throw Error(ErrorCode::DimensionMismatch, "sample " + std::to_string(r) + " does not match the layout");
        f.row(static_cast< Eigen::Index >(r)) = feature_vector(s.x, s.alpha, ds.layout.intercept).transpose();
    }
    return f;
}

struct TargetMetrics
{
    double      mse       = 0.0;
    double      maep_pct  = 0.0;
    double      max_ape   = 0.0; ///< worst relative error over the training set (fraction)
    double      mse_full  = 0.0; ///< before pruning
    double      maep_full = 0.0;
    std::size_t n_retained = 0;
};

struct SurrogateModel
{
    FeatureLayout                   layout;
    int                             n_v = 0;
    std::vector< std::string >      feature_names;
    std::vector< std::string >      target_names;
    std::vector< Eigen::VectorXd >  coefficients; ///< per target, over all features
    std::vector< Eigen::VectorXd >  full_coefficients;
    double                          prune_threshold = 1e-4;
    std::vector< std::vector< int > > retained;
    std::vector< TargetMetrics >    metrics;
    std::vector< Diagnostic >       diagnostics;

    std::size_t num_ibgs() const
    {
        std::size_t n = 0;
        while (n * n < target_names.size())
            ++n;
        return n;
    }

    /// Index of the self-ratio target of IBG c and of the mutual target (c, k).
    std::size_t self_target(std::size_t c) const { return c * num_ibgs(); }
    std::size_t mutual_target(std::size_t c, std::size_t k) const { return c * num_ibgs() + 1 + (k < c ? k : k - 1); }
};

inline constexpr double kMaepFloor          = 1e-9;
inline constexpr double kDefaultPruneThresh = 1e-4;

namespace detail
{
inline TargetMetrics accuracy(const Eigen::VectorXd& pred, const Eigen::VectorXd& y)
{
    TargetMetrics m;
    const auto    n = y.size();
    m.mse           = n ? (pred - y).squaredNorm() / static_cast< double >(n) : 0.0;
    double      sum = 0.0;
    std::size_t cnt = 0;
    for (Eigen::Index i = 0; i < n; ++i)
    {
        if (std::abs(y(i)) < kMaepFloor)
            continue;
        const double ape = std::abs(pred(i) - y(i)) / std::abs(y(i));
        sum += ape;
        m.max_ape = std::max(m.max_ape, ape);
        ++cnt;
    }
    m.maep_pct = cnt ? 100.0 * sum / static_cast< double >(cnt) : 0.0;
    return m;
}

/// Minimum-norm least squares via complete orthogonal decomposition.
inline Eigen::VectorXd least_squares(const Eigen::MatrixXd& f, const Eigen::VectorXd& y, bool& deficient)
{
    Eigen::CompleteOrthogonalDecomposition< Eigen::MatrixXd > cod(f);
    deficient = cod.rank() < f.cols();
    return cod.solve(y);
}
} // namespace detail

/// Two-pass fit per target: full least squares, zero |k| < threshold, refit
/// on the retained features.
inline SurrogateModel fit(const Dataset& ds, double prune_threshold = kDefaultPruneThresh,
                          const std::vector< std::string >& names = {})
{
    if (ds.samples.empty())
        throw Error(ErrorCode::InvalidArgument, "dataset is empty");
    const Eigen::MatrixXd f  = feature_matrix(ds);
    const auto            nt = ds.samples.front().targets.size();
    const auto            k  = f.cols();

    bool                any_varies = false;
    const Eigen::Index  kv         = k - (ds.layout.intercept ? 1 : 0);
    for (Eigen::Index j = 0; j < kv && !any_varies; ++j)
        any_varies = (f.col(j).array() != f(0, j)).any();
    if (!any_varies)
        throw Error(ErrorCode::InvalidArgument, "all features are constant");

    SurrogateModel m;
    m.layout          = ds.layout;
    m.n_v             = ds.n_v;
    m.target_names    = ds.target_names;
    m.prune_threshold = prune_threshold;
    m.feature_names   = names;
    if (m.feature_names.empty())
        for (Eigen::Index j = 0; j < k; ++j)
            m.feature_names.push_back("f" + std::to_string(j));
    if (m.target_names.size() != nt)
        for (std::size_t t = m.target_names.size(); t < nt; ++t)
            m.target_names.push_back("t" + std::to_string(t));

    bool warned_full = false;
    for (std::size_t t = 0; t < nt; ++t)
    {
        Eigen::VectorXd y(f.rows());
        for (Eigen::Index r = 0; r < f.rows(); ++r)
            y(r) = ds.samples[static_cast< std::size_t >(r)].targets[t];

        bool            deficient = false;
        Eigen::VectorXd full      = detail::least_squares(f, y, deficient);
        if (deficient && !warned_full)
        {
            m.diagnostics.push_back({Severity::Warning, ErrorCode::RankDeficient, "surrogate.fit",
                                     "feature matrix is rank deficient; using the minimum-norm solution"});
            warned_full = true;
        }
        const auto full_metrics = detail::accuracy(f * full, y);

        std::vector< int > keep;
        for (Eigen::Index j = 0; j < k; ++j)
            if (std::abs(full(j)) >= prune_threshold)
                keep.push_back(static_cast< int >(j));

        Eigen::VectorXd coef = Eigen::VectorXd::Zero(k);
        if (!keep.empty())
        {
            Eigen::MatrixXd fr(f.rows(), static_cast< Eigen::Index >(keep.size()));
            for (std::size_t j = 0; j < keep.size(); ++j)
                fr.col(static_cast< Eigen::Index >(j)) = f.col(keep[j]);
            bool                  def2 = false;
            const Eigen::VectorXd kr   = detail::least_squares(fr, y, def2);
            for (std::size_t j = 0; j < keep.size(); ++j)
                coef(keep[j]) = kr(static_cast< Eigen::Index >(j));
        }
        // Retained set reports the final nonzero pattern.
        std::vector< int > nz;
        for (Eigen::Index j = 0; j < k; ++j)
            if (coef(j) != 0.0)
                nz.push_back(static_cast< int >(j));

        auto metrics       = detail::accuracy(f * coef, y);
        metrics.mse_full   = full_metrics.mse;
        metrics.maep_full  = full_metrics.maep_pct;
        metrics.n_retained = nz.size();

        m.full_coefficients.push_back(full);
        m.coefficients.push_back(coef);
        m.retained.push_back(std::move(nz));
        m.metrics.push_back(metrics);
    }
    return m;
}

inline SurrogateModel fit_case(const GridCase& gc, int n_v, double prune_threshold = kDefaultPruneThresh)
{
    return fit(enumerate_dataset(gc, n_v), prune_threshold, feature_names(gc));
}

/// Evaluates every target at one configuration.
inline std::vector< double > predict_flat(const SurrogateModel& m, const std::vector< double >& x,
                                          const std::vector< double >& alpha)
{
    if (x.size() != m.layout.n_binary || alpha.size() != m.layout.n_gfm)
        throw Error(ErrorCode::DimensionMismatch, "configuration does not match the surrogate feature layout");
    const Eigen::VectorXd f = feature_vector(x, alpha, m.layout.intercept);
    std::vector< double > out;
    for (const auto& c : m.coefficients)
        out.push_back(c.dot(f));
    return out;
}

inline ZRatioSet predict(const SurrogateModel& m, const std::vector< double >& x, const std::vector< double >& alpha)
{
    return ZRatioSet::unflatten(predict_flat(m, x, alpha), m.num_ibgs());
}

inline ZRatioSet predict(const SurrogateModel& m, const DeviceConfig& cfg)
{
    return predict(m, binary_statuses(cfg), cfg.alpha);
}

// ---------------------------------------------------------------------------
// Serialization

inline nlohmann::json serialize_model(const SurrogateModel& m)
{
    nlohmann::json j;
    j["format"]          = "vscuc-surrogate/1";
    j["n_binary"]        = m.layout.n_binary;
    j["n_gfm"]           = m.layout.n_gfm;
    j["intercept"]       = m.layout.intercept;
    j["n_v"]             = m.n_v;
    j["prune_threshold"] = m.prune_threshold;
    j["features"]        = m.feature_names;
    auto& targets        = j["targets"] = nlohmann::json::array();
    for (std::size_t t = 0; t < m.coefficients.size(); ++t)
    {
        std::vector< double > coef(m.coefficients[t].data(), m.coefficients[t].data() + m.coefficients[t].size());
        const auto&           mt = m.metrics[t];
        targets.push_back({{"name", m.target_names[t]},
                           {"coefficients", coef},
                           {"retained", m.retained[t]},
                           {"mse", mt.mse},
                           {"maep_pct", mt.maep_pct},
                           {"max_ape", mt.max_ape},
                           {"mse_full", mt.mse_full},
                           {"maep_full_pct", mt.maep_full}});
    }
    return j;
}

inline SurrogateModel deserialize_model(const nlohmann::json& j)
{
    if (j.value("format", "") != "vscuc-surrogate/1")
        throw Error(ErrorCode::Schema, "format: expected vscuc-surrogate/1");
    SurrogateModel m;
    try
    {
        m.layout.n_binary = j.at("n_binary").get< std::size_t >();
        m.layout.n_gfm    = j.at("n_gfm").get< std::size_t >();
        m.layout.intercept = j.value("intercept", false);
        m.n_v             = j.at("n_v").get< int >();
        m.prune_threshold = j.at("prune_threshold").get< double >();
        m.feature_names   = j.at("features").get< std::vector< std::string > >();
        for (const auto& t : j.at("targets"))
        {
            const auto coef = t.at("coefficients").get< std::vector< double > >();
            if (coef.size() != m.layout.num_features())
                throw Error(ErrorCode::Schema, "targets: coefficient count does not match the layout");
            m.target_names.push_back(t.at("name").get< std::string >());
            m.coefficients.push_back(Eigen::Map< const Eigen::VectorXd >(coef.data(), static_cast< Eigen::Index >(coef.size())));
            m.full_coefficients.push_back(m.coefficients.back());
            m.retained.push_back(t.at("retained").get< std::vector< int > >());
            TargetMetrics mt;
            mt.mse        = t.value("mse", 0.0);
            mt.maep_pct   = t.value("maep_pct", 0.0);
            mt.max_ape    = t.value("max_ape", 0.0);
            mt.mse_full   = t.value("mse_full", 0.0);
            mt.maep_full  = t.value("maep_full_pct", 0.0);
            mt.n_retained = m.retained.back().size();
            m.metrics.push_back(mt);
        }
    }
    catch (const nlohmann::json::exception& e)
    {
        throw Error(ErrorCode::Schema, std::string("surrogate model: ") + e.what());
    }
    return m;
}

/// CSV metrics table: target, mse, maep_pct, n_features_retained.
inline std::string metrics_csv(const SurrogateModel& m)
{
    std::ostringstream os;
    os << "target,mse,maep_pct,n_features_retained\n";
    os << std::setprecision(10);
    for (std::size_t t = 0; t < m.metrics.size(); ++t)
        os << m.target_names[t] << ',' << m.metrics[t].mse << ',' << m.metrics[t].maep_pct << ','
           << m.metrics[t].n_retained << '\n';
    return os.str();
}

/// Dataset as CSV: binary statuses, alphas, then targets.
inline std::string dataset_csv(const Dataset& ds)
{
    std::ostringstream os;
    os << std::setprecision(17);
    for (std::size_t i = 0; i < ds.layout.n_binary; ++i)
        os << "b" << i + 1 << ',';
    for (std::size_t v = 0; v < ds.layout.n_gfm; ++v)
        os << "a" << v + 1 << ',';
    for (std::size_t t = 0; t < ds.target_names.size(); ++t)
        os << ds.target_names[t] << (t + 1 < ds.target_names.size() ? "," : "");
    os << '\n';
    for (const auto& s : ds.samples)
    {
        for (double v : s.x)
            os << v << ',';
        for (double v : s.alpha)
            os << v << ',';
        for (std::size_t t = 0; t < s.targets.size(); ++t)
            os << s.targets[t] << (t + 1 < s.targets.size() ? "," : "");
        os << '\n';
    }
    return os.str();
}

} // namespace vscuc

#endif // VSCUC_SURROGATE_HPP
