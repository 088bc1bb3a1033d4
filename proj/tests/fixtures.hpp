#ifndef VSCUC_TESTS_FIXTURES_HPP
#define VSCUC_TESTS_FIXTURES_HPP

// Small programmatic cases shared by the unit tests.

#include "vscuc/grid_case.hpp"

#include <random>

namespace fixtures
{

inline vscuc::FrequencyParams default_freq()
{
    vscuc::FrequencyParams f;
    f.dp_l      = 0.3;
    f.df_lim    = 0.008;
    f.t_d       = 10.0;
    f.damping_d = 0.5;
    f.rocof_max = 0.5;
    f.f_nominal = 50.0;
    return f;
}

/// Per-unit 2-bus case: line x=0.1 between buses 1 and 2, one SG (X=0.2) at
/// bus 1 and a grid-following IBG at bus 2.
inline vscuc::GridCase two_bus()
{
    vscuc::GridCase gc;
    gc.name     = "two-bus";
    gc.per_unit = true;
    gc.buses    = {{1, 0.9, 1.1, 0.0, 0.0, 0.0, 0.0, true}, {2, 0.9, 1.1, 0.5, 0.1, 0.0, 0.0, false}};
    gc.lines    = {{1, 2, 0.0, 0.1, 0.0, std::nullopt}};
    vscuc::SyncGen g;
    g.name        = "g1";
    g.bus         = 1;
    g.p_max       = 2.0;
    g.q_min       = -1.0;
    g.q_max       = 1.0;
    g.cost_lin    = 10.0;
    g.x_transient = 0.2;
    g.inertia_h   = 5.0;
    g.pfr_gain    = 1.0;
    gc.sync_gens  = {g};
    vscuc::GridFollowingIbg c;
    c.name              = "w2";
    c.bus               = 2;
    c.s_max             = 1.0;
    c.available_profile = {0.4};
    gc.gfl_ibgs         = {c};
    gc.freq             = default_freq();
    gc.shed_cost        = 1000.0;
    return gc;
}

/// Random connected network on n buses: a spanning chain plus extra edges,
/// then SGs/GFMs at random buses.
inline vscuc::GridCase random_network(std::mt19937& rng, int n, int n_sg, int n_gfm, int n_ibg)
{
    std::uniform_real_distribution< double > ux(0.05, 0.5), ur(0.0, 0.05), ub(0.0, 0.05), xt(0.1, 0.6);
    std::uniform_int_distribution< int >     bus(1, n);
    vscuc::GridCase                          gc;
    gc.per_unit = true;
    for (int i = 1; i <= n; ++i)
        gc.buses.push_back({i, 0.9, 1.1, 0.1, 0.02, 0.0, 0.0, i == 1});
    for (int i = 2; i <= n; ++i)
    {
        std::uniform_int_distribution< int > prev(1, i - 1);
        gc.lines.push_back({prev(rng), i, ur(rng), ux(rng), ub(rng), std::nullopt});
    }
    for (int k = 0; k < n / 2; ++k)
    {
        const int a = bus(rng), b = bus(rng);
        if (a != b)
            gc.lines.push_back({a, b, ur(rng), ux(rng), ub(rng), std::nullopt});
    }
    for (int k = 0; k < n_sg; ++k)
    {
        vscuc::SyncGen g;
        g.name        = "g" + std::to_string(k);
        g.bus         = bus(rng);
        g.p_max       = 1.0;
        g.x_transient = xt(rng);
        gc.sync_gens.push_back(g);
    }
    for (int k = 0; k < n_gfm; ++k)
    {
        vscuc::GridFormingUnit v;
        v.name         = "v" + std::to_string(k);
        v.bus          = bus(rng);
        v.x_transient  = xt(rng);
        v.p_max        = 1.0;
        v.q_max        = 1.0;
        v.alpha_levels = 3;
        gc.gfm_units.push_back(v);
    }
    for (int k = 0; k < n_ibg; ++k)
    {
        vscuc::GridFollowingIbg c;
        c.name              = "c" + std::to_string(k);
        c.bus               = bus(rng);
        c.available_profile = {0.5};
        gc.gfl_ibgs.push_back(c);
    }
    gc.freq = default_freq();
    return gc;
}

} // namespace fixtures

#endif
