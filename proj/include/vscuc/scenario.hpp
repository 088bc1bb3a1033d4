#ifndef VSCUC_SCENARIO_HPP
#define VSCUC_SCENARIO_HPP

// Quantile-based scenario trees over load and wind forecast errors. Depth d
// of the tree is look-ahead hour d; the root is the first (implemented) hour.

#include "vscuc/grid_case.hpp"

#include <algorithm>
#include <numeric>

namespace vscuc
{

struct ForecastProfile
{
    int                                     horizon = 0;
    std::vector< std::vector< double > >    wind;   ///< [hour][ibg] central availability (p.u.)
    std::vector< std::vector< double > >    load_p; ///< [hour][bus] central active demand
    std::vector< std::vector< double > >    load_q; ///< [hour][bus]
    std::vector< std::vector< QuantileBin > > error_quantiles; ///< [hour] bins
};

/// Central forecast starting at `start_hour` of the case's day profile.
inline ForecastProfile make_profile(const GridCase& gc, int start_hour, int horizon,
                                    const std::vector< QuantileBin >& quantiles)
{
    if (horizon < 1 || start_hour < 0)
        throw Error(ErrorCode::InvalidArgument, "horizon must be positive and start hour nonnegative");
    const auto last = static_cast< std::size_t >(start_hour + horizon);
    if (!gc.forecast.load_profile.empty() && gc.forecast.load_profile.size() < last)
        throw Error(ErrorCode::InvalidArgument, "forecast.load_profile does not cover hour " + std::to_string(last - 1));
    for (std::size_t c = 0; c < gc.gfl_ibgs.size(); ++c)
        if (gc.gfl_ibgs[c].available_profile.size() < last)
            throw Error(ErrorCode::InvalidArgument,
                        "gfl_ibgs[" + std::to_string(c) + "].available_mw does not cover hour " + std::to_string(last - 1));

    ForecastProfile p;
    p.horizon = horizon;
    for (int h = 0; h < horizon; ++h)
    {
        const auto   t  = static_cast< std::size_t >(start_hour + h);
        const double lf = gc.forecast.load_profile.empty() ? 1.0 : gc.forecast.load_profile[t];
        std::vector< double > w, lp, lq;
        for (const auto& c : gc.gfl_ibgs)
            w.push_back(c.available_profile[t]);
        for (const auto& b : gc.buses)
        {
            lp.push_back(lf * b.p_load);
            lq.push_back(lf * b.q_load);
        }
        p.wind.push_back(std::move(w));
        p.load_p.push_back(std::move(lp));
        p.load_q.push_back(std::move(lq));
        p.error_quantiles.push_back(quantiles);
    }
    return p;
}

inline ForecastProfile make_profile(const GridCase& gc, int start_hour, int horizon)
{
    return make_profile(gc, start_hour, horizon, gc.forecast.quantiles);
}

struct ScenarioNode
{
    int                id       = 0;
    int                parent   = -1;
    int                depth    = 0;
    double             duration = 1.0; ///< hours
    double             probability = 1.0;
    double             wind_factor = 1.0; ///< cumulative product of (1 + wind_dev)
    double             load_factor = 1.0;
    int                quantile    = -1; ///< bin taken when this node branched, -1 otherwise
    std::vector< int > children;
};

struct NodeRealization
{
    std::vector< double > wind;   ///< per IBG
    std::vector< double > load_p; ///< per bus
    std::vector< double > load_q;
};

class ScenarioTree
{
public:
    ScenarioTree() = default;
    ScenarioTree(ForecastProfile profile, std::vector< ScenarioNode > nodes, std::vector< int > branching)
        : profile_(std::move(profile)), nodes_(std::move(nodes)), branching_(std::move(branching))
    {
        by_depth_.resize(static_cast< std::size_t >(profile_.horizon));
        for (const auto& n : nodes_)
            by_depth_[static_cast< std::size_t >(n.depth)].push_back(n.id);
    }

    const ForecastProfile&             profile() const { return profile_; }
    const std::vector< ScenarioNode >& nodes() const { return nodes_; }
    const std::vector< int >&          branching_hours() const { return branching_; }
    int                                horizon() const { return profile_.horizon; }
    std::size_t                        size() const { return nodes_.size(); }

    const ScenarioNode& node(int id) const
    {
        if (id < 0 || static_cast< std::size_t >(id) >= nodes_.size())
            throw Error(ErrorCode::UnknownNode, "node " + std::to_string(id));
        return nodes_[static_cast< std::size_t >(id)];
    }

    const std::vector< int >& nodes_at_depth(int d) const { return by_depth_.at(static_cast< std::size_t >(d)); }

    std::vector< int > leaves() const
    {
        std::vector< int > out;
        for (const auto& n : nodes_)
            if (n.children.empty())
                out.push_back(n.id);
        return out;
    }

    /// Node ids from the root down to `id`.
    std::vector< int > path(int id) const
    {
        std::vector< int > out;
        for (int n = node(id).id; n >= 0; n = nodes_[static_cast< std::size_t >(n)].parent)
            out.push_back(n);
        std::reverse(out.begin(), out.end());
        return out;
    }

private:
    ForecastProfile                  profile_;
    std::vector< ScenarioNode >      nodes_;
    std::vector< int >               branching_;
    std::vector< std::vector< int > > by_depth_;
};

inline constexpr double kMassTolerance = 1e-9;

/// Expands the profile into a tree. At each branching hour every node spawns
/// one child per quantile bin; elsewhere nodes continue as single chains.
inline ScenarioTree build_tree(const ForecastProfile& profile, std::vector< int > branching_hours)
{
    if (profile.horizon < 1)
        throw Error(ErrorCode::InvalidArgument, "horizon must be positive");
    if (profile.error_quantiles.size() != static_cast< std::size_t >(profile.horizon))
        throw Error(ErrorCode::DimensionMismatch, "quantile list must cover every hour");
    std::sort(branching_hours.begin(), branching_hours.end());
    branching_hours.erase(std::unique(branching_hours.begin(), branching_hours.end()), branching_hours.end());
    // Hours beyond the horizon are dropped, which lets short rolling windows
    // reuse a day-level branching schedule.
    std::erase_if(branching_hours, [&](int h) { return h >= profile.horizon; });
    for (int h : branching_hours)
    {
        if (h < 1)
            throw Error(ErrorCode::InvalidArgument, "branching hour " + std::to_string(h) + " must be at least 1");
        const auto& q = profile.error_quantiles[static_cast< std::size_t >(h)];
        if (q.empty())
            throw Error(ErrorCode::InvalidArgument, "empty quantile list at hour " + std::to_string(h));
        double mass = 0.0;
        for (const auto& b : q)
        {
            if (b.mass < 0.0 || b.wind_dev < -1.0 || b.load_dev < -1.0)
                throw Error(ErrorCode::InvalidArgument, "quantile bin at hour " + std::to_string(h) + " is out of range");
            mass += b.mass;
        }
        if (std::abs(mass - 1.0) > kMassTolerance)
            throw Error(ErrorCode::InvalidArgument, "quantile masses at hour " + std::to_string(h) + " sum to " + std::to_string(mass));
    }

    std::vector< ScenarioNode > nodes(1);
    std::vector< int >          frontier{0};
    for (int d = 1; d < profile.horizon; ++d)
    {
        const bool         branch = std::binary_search(branching_hours.begin(), branching_hours.end(), d);
        const auto&        q      = profile.error_quantiles[static_cast< std::size_t >(d)];
        std::vector< int > next;
        for (int pid : frontier)
        {
            const std::size_t nb = branch ? q.size() : 1;
            for (std::size_t k = 0; k < nb; ++k)
            {
                const auto&  parent = nodes[static_cast< std::size_t >(pid)];
                ScenarioNode n;
                n.id          = static_cast< int >(nodes.size());
                n.parent      = pid;
                n.depth       = d;
                n.probability = parent.probability * (branch ? q[k].mass : 1.0);
                n.wind_factor = parent.wind_factor * (branch ? 1.0 + q[k].wind_dev : 1.0);
                n.load_factor = parent.load_factor * (branch ? 1.0 + q[k].load_dev : 1.0);
                n.quantile    = branch ? static_cast< int >(k) : -1;
                nodes[static_cast< std::size_t >(pid)].children.push_back(n.id);
                next.push_back(n.id);
                nodes.push_back(std::move(n));
            }
        }
        double total = 0.0;
        for (int id : next)
            total += nodes[static_cast< std::size_t >(id)].probability;
        for (int id : next)
            nodes[static_cast< std::size_t >(id)].probability /= total;
        frontier = std::move(next);
    }
    return ScenarioTree(profile, std::move(nodes), std::move(branching_hours));
}

inline ScenarioTree build_tree(const ForecastProfile& profile) { return build_tree(profile, {1}); }

/// Central forecast at the node's hour scaled by its cumulative deviations.
inline NodeRealization node_realization(const ScenarioTree& tree, int node_id)
{
    const auto&     n = tree.node(node_id);
    const auto      h = static_cast< std::size_t >(n.depth);
    const auto&     p = tree.profile();
    NodeRealization r;
    for (double w : p.wind[h])
        r.wind.push_back(w * n.wind_factor);
    for (double l : p.load_p[h])
        r.load_p.push_back(l * n.load_factor);
    for (double l : p.load_q[h])
        r.load_q.push_back(l * n.load_factor);
    return r;
}

} // namespace vscuc

#endif // VSCUC_SCENARIO_HPP
