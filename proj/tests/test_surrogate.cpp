#include "fixtures.hpp"
#include "vscuc/surrogate.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <random>

using namespace vscuc;

namespace
{

/// Dataset over all binary/level configurations of a layout whose single
/// target is `coef . features`.
Dataset synthetic(const FeatureLayout& layout, int n_v, const Eigen::VectorXd& coef)
{
    Dataset ds;
    ds.layout       = layout;
    ds.n_v          = n_v;
    ds.target_names = {"t"};
    const auto na   = dataset_size(0, layout.n_gfm, n_v);
    for (std::uint64_t mask = 0; mask < (1u << layout.n_binary); ++mask)
        for (std::uint64_t a = 0; a < na; ++a)
        {
            ConfigSample s;
            for (std::size_t i = 0; i < layout.n_binary; ++i)
                s.x.push_back(((mask >> i) & 1u) ? 1.0 : 0.0);
            std::uint64_t rem = a;
            for (std::size_t v = 0; v < layout.n_gfm; ++v)
            {
                s.alpha.push_back(alpha_level(static_cast< int >(rem % n_v), n_v));
                rem /= n_v;
            }
            s.eta = interaction_terms(s.x, s.alpha);
            if (coef.size())
                s.targets = {coef.dot(feature_vector(s.x, s.alpha, layout.intercept))};
            ds.samples.push_back(s);
            ++ds.candidates;
        }
    return ds;
}

GridCase fleet(int n_sg, int n_gfm, int n_v)
{
    std::mt19937 rng(100 + n_sg * 10 + n_gfm);
    auto         gc = fixtures::random_network(rng, 5, n_sg, n_gfm, 2);
    for (auto& v : gc.gfm_units)
        v.alpha_levels = n_v;
    return gc;
}

} // namespace

TEST(Surrogate, InteractionTermsExample)
{
    EXPECT_EQ(interaction_terms({1, 0}, {0.5}), (std::vector< double >{0.0, 0.5, 0.0}));
    const auto z = interaction_terms({0, 0, 0}, {0, 0});
    EXPECT_TRUE(std::all_of(z.begin(), z.end(), [](double v) { return v == 0.0; }));
}

TEST(Surrogate, InteractionCount)
{
    const std::vector< double > x(8, 1.0), a(2, 1.0);
    EXPECT_EQ(interaction_terms(x, a).size(), 45u);
    EXPECT_EQ((FeatureLayout{8, 2}.num_interactions()), 45u);
    EXPECT_EQ((FeatureLayout{8, 2}.num_features()), 56u);
    EXPECT_EQ((FeatureLayout{8, 2, false}.num_features()), 55u);
    const auto names = FeatureLayout{2, 1}.features();
    EXPECT_EQ(names.back().kind, FeatureLayout::Kind::Constant);
}

TEST(Surrogate, InteractionOrdering)
{
    // SG pairs lexicographic, then SG x GFM, then GFM pairs.
    const auto eta = interaction_terms({2, 3, 5}, {7, 11});
    const std::vector< double > expect{6, 10, 15, 14, 22, 21, 33, 35, 55, 77};
    EXPECT_EQ(eta, expect);
}

TEST(Surrogate, DatasetSizeFormula)
{
    EXPECT_EQ(dataset_size(2, 1, 3), 12u);
    EXPECT_EQ(dataset_size(0, 1, 5), 5u);
    EXPECT_EQ(dataset_size(8, 2, 8), 16384u);
    struct Shape
    {
        int sg, gfm, nv;
    };
    for (auto s : {Shape{2, 1, 3}, Shape{0, 1, 5}, Shape{3, 0, 2}, Shape{1, 2, 4}, Shape{4, 1, 2}})
    {
        const auto gc = fleet(s.sg, s.gfm, s.nv);
        const auto ds = enumerate_dataset(gc, s.nv);
        const auto expect = (std::uint64_t{1} << s.sg) * static_cast< std::uint64_t >(std::pow(s.nv, s.gfm));
        EXPECT_EQ(ds.candidates, expect);
        EXPECT_EQ(ds.samples.size() + ds.excluded, expect);
    }
}

TEST(Surrogate, SingularSamplesExcluded)
{
    const auto ds = enumerate_dataset(fleet(0, 1, 5), 5);
    EXPECT_EQ(ds.candidates, 5u);
    EXPECT_EQ(ds.excluded, 1u); // alpha = 0 leaves no device online
    ASSERT_EQ(ds.exclusion_log.size(), 1u);
    EXPECT_NE(ds.exclusion_log[0].find("SINGULAR"), std::string::npos);
}

TEST(Surrogate, SamplesCarryExactValues)
{
    const auto gc = fleet(2, 1, 3);
    const auto ds = enumerate_dataset(gc, 3);
    for (const auto& s : ds.samples)
    {
        EXPECT_EQ(s.eta, interaction_terms(s.x, s.alpha));
        for (double a : s.alpha)
            EXPECT_TRUE(a == 0.0 || a == 0.5 || a == 1.0);
        DeviceConfig cfg{{s.x[0], s.x[1]}, s.alpha, {}};
        EXPECT_EQ(s.targets, z_ratios(gc, cfg).flatten());
    }
}

TEST(Surrogate, EnumerationDeterministic)
{
    const auto gc = fleet(3, 1, 3);
    const auto a  = enumerate_dataset(gc, 3);
    const auto b  = enumerate_dataset(gc, 3);
    ASSERT_EQ(a.samples.size(), b.samples.size());
    for (std::size_t i = 0; i < a.samples.size(); ++i)
    {
        EXPECT_EQ(a.samples[i].x, b.samples[i].x);
        EXPECT_EQ(a.samples[i].alpha, b.samples[i].alpha);
        EXPECT_EQ(a.samples[i].targets, b.samples[i].targets);
    }
}

TEST(Surrogate, ExactLinearTargetRecovered)
{
    const FeatureLayout layout{3, 2};
    std::mt19937        rng(1);
    std::normal_distribution< double > nd(0.0, 1.0);
    Eigen::VectorXd coef(static_cast< Eigen::Index >(layout.num_features()));
    for (auto& c : coef)
        c = 1.0 + std::abs(nd(rng));
    const auto ds = synthetic(layout, 3, coef);
    const auto m  = fit(ds);
    EXPECT_LT(m.metrics[0].mse, 1e-20);
    EXPECT_LT(m.metrics[0].maep_pct, 1e-8);
    EXPECT_LT((m.coefficients[0] - coef).norm(), 1e-9);
    for (const auto& s : ds.samples)
        EXPECT_NEAR(predict_flat(m, s.x, s.alpha)[0], s.targets[0], 1e-10);
}

TEST(Surrogate, SmallCoefficientPruned)
{
    const FeatureLayout layout{3, 1};
    Eigen::VectorXd     coef = Eigen::VectorXd::Constant(static_cast< Eigen::Index >(layout.num_features()), 0.5);
    coef(4)                  = 3e-5; // below the 1e-4 threshold
    const auto ds = synthetic(layout, 4, coef);
    const auto m  = fit(ds);
    EXPECT_EQ(m.coefficients[0](4), 0.0);
    EXPECT_EQ(m.metrics[0].n_retained, layout.num_features() - 1);
    EXPECT_TRUE(std::find(m.retained[0].begin(), m.retained[0].end(), 4) == m.retained[0].end());
    // Unpruned MAEP is ~0, so compare against an absolute floor as well.
    EXPECT_LE(m.metrics[0].maep_pct, std::max(2.0 * m.metrics[0].maep_full, 0.01));
}

TEST(Surrogate, PruningMseBound)
{
    const auto gc = fleet(4, 1, 3);
    const auto ds = enumerate_dataset(gc, 3);
    const auto m  = fit(ds, 5e-2); // aggressive threshold so something is pruned
    const auto f  = feature_matrix(ds);
    const double  n = static_cast< double >(f.rows());
    bool            pruned_any = false;
    for (std::size_t t = 0; t < m.coefficients.size(); ++t)
    {
        const auto&     full    = m.full_coefficients[t];
        Eigen::VectorXd removed = Eigen::VectorXd::Zero(full.size());
        for (Eigen::Index j = 0; j < full.size(); ++j)
            if (std::abs(full(j)) < m.prune_threshold)
            {
                removed(j) = full(j);
                pruned_any = true;
            }
        // Zeroing the removed coefficients is a feasible refit, so the refit
        // is at least as good: sqrt(MSE_pruned) <= sqrt(MSE_full) + ||F r||/sqrt(N).
        double col_energy = 0.0;
        for (Eigen::Index j = 0; j < full.size(); ++j)
            col_energy += std::abs(removed(j)) * f.col(j).norm();
        const double bound = std::pow(std::sqrt(m.metrics[t].mse_full) + col_energy / std::sqrt(n), 2);
        EXPECT_LE(m.metrics[t].mse, bound + 1e-15);
    }
    EXPECT_TRUE(pruned_any);
}

TEST(Surrogate, MetricsInvariantToOrdering)
{
    const auto gc = fleet(3, 1, 3);
    auto       ds = enumerate_dataset(gc, 3);
    const auto a  = fit(ds);
    std::mt19937 rng(4);
    std::shuffle(ds.samples.begin(), ds.samples.end(), rng);
    const auto b = fit(ds);
    for (std::size_t t = 0; t < a.metrics.size(); ++t)
    {
        EXPECT_NEAR(a.metrics[t].mse, b.metrics[t].mse, 1e-12 * (1 + a.metrics[t].mse));
        EXPECT_NEAR(a.metrics[t].maep_pct, b.metrics[t].maep_pct, 1e-9);
    }
}

TEST(Surrogate, RankDeficiencyWarns)
{
    // Construct an explicit deficiency: a single alpha level makes alpha and
    // x*alpha columns duplicates of x columns.
    Dataset d2;
    d2.layout       = {2, 1};
    d2.n_v          = 2;
    d2.target_names = {"t"};
    for (int mask = 0; mask < 4; ++mask)
    {
        ConfigSample s;
        s.x       = {double(mask & 1), double((mask >> 1) & 1)};
        s.alpha   = {1.0};
        s.eta     = interaction_terms(s.x, s.alpha);
        s.targets = {1.0 + s.x[0] + 2.0 * s.x[1]};
        d2.samples.push_back(s);
    }
    const auto m2 = fit(d2);
    ASSERT_FALSE(m2.diagnostics.empty());
    EXPECT_EQ(m2.diagnostics[0].code, ErrorCode::RankDeficient);
    EXPECT_EQ(m2.diagnostics[0].severity, Severity::Warning);
    for (const auto& s : d2.samples)
        EXPECT_NEAR(predict_flat(m2, s.x, s.alpha)[0], s.targets[0], 1e-9);
}

TEST(Surrogate, ConstantFeaturesRejected)
{
    Dataset d;
    d.layout = {1, 0};
    d.n_v    = 2;
    d.samples.push_back({{1.0}, {}, {}, {2.0}});
    d.samples.push_back({{1.0}, {}, {}, {2.0}});
    EXPECT_THROW(fit(d), Error);
    EXPECT_THROW(fit(Dataset{}), Error);
}

TEST(Surrogate, ZeroModelPredictsZero)
{
    SurrogateModel m;
    m.layout       = {2, 1};
    m.target_names = {"a"};
    m.coefficients = {Eigen::VectorXd::Zero(static_cast< Eigen::Index >(m.layout.num_features()))};
    EXPECT_EQ(predict_flat(m, {1, 1}, {0.5})[0], 0.0);
    EXPECT_THROW(predict_flat(m, {1}, {0.5}), Error);
}

TEST(Surrogate, SerializationRoundTrip)
{
    const auto gc = fleet(2, 1, 3);
    const auto m  = fit_case(gc, 3);
    const auto j  = serialize_model(m);
    const auto m2 = deserialize_model(nlohmann::json::parse(j.dump()));
    ASSERT_EQ(m2.coefficients.size(), m.coefficients.size());
    for (std::size_t t = 0; t < m.coefficients.size(); ++t)
        EXPECT_EQ(m2.coefficients[t], m.coefficients[t]);
    EXPECT_EQ(m2.feature_names, m.feature_names);
    const auto csv = metrics_csv(m);
    EXPECT_EQ(csv.substr(0, csv.find('\n')), "target,mse,maep_pct,n_features_retained");
}

TEST(Surrogate, BundledCaseAccuracy)
{
    const auto gc = load_case(std::string(VSCUC_DATA_DIR) + "/ieee30-mod.json");
    const int  nv = gc.gfm_units[0].alpha_levels;
    const auto ds = enumerate_dataset(gc, nv);
    EXPECT_EQ(ds.candidates, 16384u);
    const auto m = fit(ds, kDefaultPruneThresh, feature_names(gc));
    ASSERT_EQ(m.metrics.size(), 4u);
    for (const auto& mt : m.metrics)
        EXPECT_LE(mt.maep_pct, 5.0);

    // All-on sits on the corner of the configuration cube where the ratios
    // saturate, so its error is a tail value: bounded by the worst training
    // error and by a 15 % sanity cap.
    const auto cfg   = DeviceConfig::all_on(gc);
    const auto exact = z_ratios(gc, cfg).flatten();
    const auto pred  = predict_flat(m, binary_statuses(cfg), cfg.alpha);
    for (std::size_t t = 0; t < exact.size(); ++t)
    {
        const double ape = std::abs(pred[t] - exact[t]) / exact[t];
        EXPECT_LE(ape, m.metrics[t].max_ape + 1e-12) << m.target_names[t];
        EXPECT_LE(ape * 100.0, 15.0) << m.target_names[t];
    }
}

TEST(Surrogate, WithoutInterceptMatchesLinearForm)
{
    const FeatureLayout layout{3, 1, false};
    Eigen::VectorXd     coef = Eigen::VectorXd::LinSpaced(static_cast< Eigen::Index >(layout.num_features()), 0.2, 1.4);
    Dataset             ds   = synthetic(layout, 3, Eigen::VectorXd::Zero(0));
    for (auto& s : ds.samples)
        s.targets = {coef.dot(feature_vector(s.x, s.alpha, false))};
    const auto m = fit(ds);
    EXPECT_LT((m.coefficients[0] - coef).norm(), 1e-9);
    const auto m2 = deserialize_model(nlohmann::json::parse(serialize_model(m).dump()));
    EXPECT_FALSE(m2.layout.intercept);
    EXPECT_NEAR(predict_flat(m2, {1, 0, 1}, {0.5})[0], coef.dot(feature_vector({1, 0, 1}, {0.5}, false)), 1e-12);
}
