#!/usr/bin/env python3
"""Generates the bundled case files in data/.

The 30-bus network is the standard IEEE 30-bus test system (branch and load
data). Generator fleet, wind, costs and frequency data are the modified
configuration used by this repository; see docs/case_format.md.

Usage: python3 tools/gen_cases.py [--pypower-118 PATH] [--out data]
"""
import argparse
import json
import math
import os

# from, to, r, x, b (p.u. on 100 MVA)
IEEE30_BRANCHES = [
    (1, 2, 0.0192, 0.0575, 0.0528), (1, 3, 0.0452, 0.1652, 0.0408),
    (2, 4, 0.0570, 0.1737, 0.0368), (3, 4, 0.0132, 0.0379, 0.0084),
    (2, 5, 0.0472, 0.1983, 0.0418), (2, 6, 0.0581, 0.1763, 0.0374),
    (4, 6, 0.0119, 0.0414, 0.0090), (5, 7, 0.0460, 0.1160, 0.0204),
    (6, 7, 0.0267, 0.0820, 0.0170), (6, 8, 0.0120, 0.0420, 0.0090),
    (6, 9, 0.0, 0.2080, 0.0), (6, 10, 0.0, 0.5560, 0.0),
    (9, 11, 0.0, 0.2080, 0.0), (9, 10, 0.0, 0.1100, 0.0),
    (4, 12, 0.0, 0.2560, 0.0), (12, 13, 0.0, 0.1400, 0.0),
    (12, 14, 0.1231, 0.2559, 0.0), (12, 15, 0.0662, 0.1304, 0.0),
    (12, 16, 0.0945, 0.1987, 0.0), (14, 15, 0.2210, 0.1997, 0.0),
    (16, 17, 0.0524, 0.1923, 0.0), (15, 18, 0.1073, 0.2185, 0.0),
    (18, 19, 0.0639, 0.1292, 0.0), (19, 20, 0.0340, 0.0680, 0.0),
    (10, 20, 0.0936, 0.2090, 0.0), (10, 17, 0.0324, 0.0845, 0.0),
    (10, 21, 0.0348, 0.0749, 0.0), (10, 22, 0.0727, 0.1499, 0.0),
    (21, 22, 0.0116, 0.0236, 0.0), (15, 23, 0.1000, 0.2020, 0.0),
    (22, 24, 0.1150, 0.1790, 0.0), (23, 24, 0.1320, 0.2700, 0.0),
    (24, 25, 0.1885, 0.3292, 0.0), (25, 26, 0.2544, 0.3800, 0.0),
    (25, 27, 0.1093, 0.2087, 0.0), (28, 27, 0.0, 0.3960, 0.0),
    (27, 29, 0.2198, 0.4153, 0.0), (27, 30, 0.3202, 0.6027, 0.0),
    (29, 30, 0.2399, 0.4533, 0.0), (8, 28, 0.0636, 0.2000, 0.0428),
    (6, 28, 0.0169, 0.0599, 0.0130),
]

# bus: (P MW, Q MVAr); total 283.4 MW
IEEE30_LOADS = {
    2: (21.7, 12.7), 3: (2.4, 1.2), 4: (7.6, 1.6), 5: (94.2, 19.0), 7: (22.8, 10.9),
    8: (30.0, 30.0), 10: (5.8, 2.0), 12: (11.2, 7.5), 14: (6.2, 1.6), 15: (8.2, 2.5),
    16: (3.5, 1.8), 17: (9.0, 5.8), 18: (3.2, 0.9), 19: (9.5, 3.4), 20: (2.2, 0.7),
    21: (17.5, 11.2), 23: (3.2, 1.6), 24: (8.7, 6.7), 26: (3.5, 2.3), 29: (2.4, 0.9),
    30: (10.6, 1.9),
}
IEEE30_SHUNTS = {10: 19.0, 24: 4.3}

# Daily load multipliers (hour 0 = midnight).
LOAD_PROFILE = [0.72, 0.68, 0.66, 0.65, 0.66, 0.70, 0.78, 0.86, 0.92, 0.95, 0.97, 0.98,
                0.97, 0.96, 0.95, 0.95, 0.97, 1.00, 0.99, 0.96, 0.91, 0.85, 0.79, 0.75]
# Wind availability as a fraction of installed capacity.
WIND_PROFILE = [0.78, 0.80, 0.82, 0.81, 0.79, 0.76, 0.72, 0.66, 0.60, 0.55, 0.50, 0.47,
                0.45, 0.46, 0.49, 0.53, 0.57, 0.62, 0.67, 0.71, 0.74, 0.76, 0.77, 0.78]

# name, bus, p_min, p_max, q_min, q_max, cost_quad, cost_lin, noload, startup,
# min_up, min_down, ramp, x', H, pfr, initial_on
SG_FLEET = [
    ("G2a", 2, 20, 80, -40, 60, 0.020, 18.0, 180, 900, 3, 2, 40, 0.25, 5.0, 16, True),
    ("G2b", 2, 15, 60, -30, 45, 0.025, 21.0, 150, 700, 2, 2, 35, 0.30, 4.5, 12, True),
    ("G3", 3, 10, 40, -20, 30, 0.030, 26.0, 120, 500, 2, 1, 30, 0.40, 4.0, 8, False),
    ("G4", 4, 12, 50, -25, 40, 0.028, 24.0, 140, 600, 2, 2, 30, 0.35, 4.0, 10, True),
    ("G5", 5, 18, 70, -35, 55, 0.022, 20.0, 170, 800, 3, 2, 40, 0.28, 5.0, 14, True),
    ("G27", 27, 10, 40, -20, 30, 0.035, 30.0, 110, 450, 1, 1, 30, 0.40, 3.5, 8, False),
    ("G30a", 30, 8, 40, -20, 30, 0.040, 32.0, 100, 400, 1, 1, 30, 0.40, 3.5, 8, False),
    ("G30b", 30, 8, 40, -20, 30, 0.045, 34.0, 100, 400, 1, 1, 30, 0.40, 3.5, 8, False),
]


def rotate(profile, start):
    return profile[start:] + profile[:start]


def ieee30(name, wind_mw, gfm_levels, statcom_mvar=None, sc_mvar=None, hours=24, start_hour=0):
    wind_profile = rotate(WIND_PROFILE, start_hour)
    load_profile = rotate(LOAD_PROFILE, start_hour)
    buses = []
    for i in range(1, 31):
        p, q = IEEE30_LOADS.get(i, (0.0, 0.0))
        buses.append({"id": i, "v_min": 0.95, "v_max": 1.10, "p_load_mw": p, "q_load_mvar": q,
                      "b_shunt_mvar": IEEE30_SHUNTS.get(i, 0.0), "is_reference": i == 1})
    lines = [{"from_bus": f, "to_bus": t, "r_pu": r, "x_pu": x, "b_pu": b} for f, t, r, x, b in IEEE30_BRANCHES]
    sgs = []
    for (n, bus, pmin, pmax, qmin, qmax, cq, cl, nl, su, mu, md, ramp, xt, h, pfr, on) in SG_FLEET:
        sgs.append({"name": n, "bus": bus, "p_min_mw": pmin, "p_max_mw": pmax, "q_min_mvar": qmin,
                    "q_max_mvar": qmax, "cost_quad": cq, "cost_lin": cl, "cost_noload": nl,
                    "cost_startup": su, "min_up_h": mu, "min_down_h": md, "ramp_mw_per_h": ramp,
                    "x_transient_pu": xt, "inertia_h_s": h, "pfr_mw": pfr, "initial_on": on,
                    "initial_hours": 12, "initial_p_mw": (pmin + pmax) / 2 if on else 0.0})
    gfms = [{"name": "VSG1a", "bus": 1, "x_transient_pu": 0.50, "p_max_mw": 40, "q_max_mvar": 30,
             "alpha_levels": gfm_levels},
            {"name": "VSG1b", "bus": 1, "x_transient_pu": 0.60, "p_max_mw": 30, "q_max_mvar": 25,
             "alpha_levels": gfm_levels}]
    per = wind_mw / 2.0
    ibgs = [{"name": "W23", "bus": 23, "s_max_mva": per, "available_mw": [round(per * w, 4) for w in wind_profile[:hours]],
             "si_capable": True, "h_si_max_s": 0.5},
            {"name": "W24", "bus": 24, "s_max_mva": per, "available_mw": [round(per * w, 4) for w in wind_profile[:hours]],
             "si_capable": True, "h_si_max_s": 0.5}]
    shunts = []
    if statcom_mvar is not None:
        shunts.append({"name": "STAT22", "kind": "STATCOM", "bus": 22, "q_rating_mvar": statcom_mvar,
                       "i_max_mva": statcom_mvar})
    if sc_mvar is not None:
        shunts.append({"name": "SC22", "kind": "SYNCHRONOUS_CONDENSER", "bus": 22, "q_rating_mvar": sc_mvar,
                       "x_transient_pu": 0.25})
    return {
        "name": name, "base_mva": 100.0, "buses": buses, "lines": lines, "sync_gens": sgs,
        "gfm_units": gfms, "gfl_ibgs": ibgs, "shunt_devices": shunts,
        "frequency": {"delta_p_l_mw": 20.0, "delta_f_lim_hz": 0.8, "t_d_s": 10.0, "damping_pu": 0.5,
                      "rocof_max_hz_per_s": 1.0, "f_nominal_hz": 50.0},
        "costs": {"shed_cost_per_mwh": 10000.0},
        "forecast": {"load_profile": load_profile[:hours],
                     "quantiles": [{"mass": 0.25, "wind_dev": -0.10, "load_dev": 0.02},
                                   {"mass": 0.50, "wind_dev": 0.0, "load_dev": 0.0},
                                   {"mass": 0.25, "wind_dev": 0.10, "load_dev": -0.02}],
                     "branching_hours": [1]},
    }


def two_bus():
    return {
        "name": "two-bus", "base_mva": 100.0,
        "buses": [{"id": 1, "is_reference": True}, {"id": 2, "p_load_mw": 50.0, "q_load_mvar": 10.0}],
        "lines": [{"from_bus": 1, "to_bus": 2, "r_pu": 0.0, "x_pu": 0.1}],
        "sync_gens": [{"name": "G1", "bus": 1, "p_max_mw": 200, "q_min_mvar": -100, "q_max_mvar": 100,
                       "cost_lin": 20.0, "cost_noload": 50.0, "x_transient_pu": 0.2, "inertia_h_s": 5.0,
                       "pfr_mw": 50.0}],
        "gfl_ibgs": [{"name": "W2", "bus": 2, "s_max_mva": 100.0, "available_mw": [40.0, 30.0, 20.0]}],
        "frequency": {"delta_p_l_mw": 5.0, "delta_f_lim_hz": 0.8, "t_d_s": 10.0, "damping_pu": 0.5,
                      "rocof_max_hz_per_s": 1.0},
        "costs": {"shed_cost_per_mwh": 10000.0},
        "forecast": {"load_profile": [1.0, 0.9, 0.8]},
    }


def ieee118(path):
    import importlib.util
    spec = importlib.util.spec_from_file_location("case118", path)
    mod = importlib.util.module_from_spec(spec)
    spec.loader.exec_module(mod)
    ppc = mod.case118()
    base = ppc["baseMVA"]
    buses = []
    for row in ppc["bus"]:
        bid = int(row[0])
        buses.append({"id": bid, "v_min": 0.94, "v_max": 1.06, "p_load_mw": float(row[2]),
                      "q_load_mvar": float(row[3]), "g_shunt_mw": float(row[4]),
                      "b_shunt_mvar": float(row[5]), "is_reference": int(row[1]) == 3})
    lines = []
    for row in ppc["branch"]:
        lines.append({"from_bus": int(row[0]), "to_bus": int(row[1]), "r_pu": float(row[2]),
                      "x_pu": float(row[3]), "b_pu": float(row[4])})
    sgs = []
    for k, (row, cost) in enumerate(zip(ppc["gen"], ppc["gencost"])):
        pmax = float(row[8])
        if pmax <= 0.0:
            continue
        sgs.append({"name": "G%d_%d" % (int(row[0]), k), "bus": int(row[0]), "p_min_mw": 0.2 * pmax,
                    "p_max_mw": pmax, "q_min_mvar": float(row[4]), "q_max_mvar": float(row[3]),
                    "cost_quad": float(cost[4]), "cost_lin": float(cost[5]), "cost_noload": 5.0 * math.sqrt(pmax),
                    "cost_startup": 10.0 * pmax, "min_up_h": 2, "min_down_h": 2,
                    "x_transient_pu": max(0.05, min(2.0, 25.0 / pmax)), "inertia_h_s": 4.0,
                    "pfr_mw": 0.1 * pmax, "initial_on": True, "initial_hours": 12, "initial_p_mw": 0.5 * pmax})
    wind_buses = [3, 41, 72, 87]
    per = 4000.0 / len(wind_buses)
    ibgs = [{"name": "W%d" % b, "bus": b, "s_max_mva": per, "available_mw": [round(per * w, 3) for w in WIND_PROFILE],
             "si_capable": True, "h_si_max_s": 1.0} for b in wind_buses]
    return {
        "name": "ieee118-mod", "base_mva": base, "buses": buses, "lines": lines, "sync_gens": sgs,
        "gfm_units": [], "gfl_ibgs": ibgs, "shunt_devices": [],
        "frequency": {"delta_p_l_mw": 200.0, "delta_f_lim_hz": 0.8, "t_d_s": 10.0, "damping_pu": 1.0,
                      "rocof_max_hz_per_s": 1.0},
        "costs": {"shed_cost_per_mwh": 10000.0},
        "forecast": {"load_profile": LOAD_PROFILE,
                     "quantiles": [{"mass": 0.25, "wind_dev": -0.10}, {"mass": 0.5}, {"mass": 0.25, "wind_dev": 0.10}],
                     "branching_hours": [1]},
    }


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--out", default=os.path.join(os.path.dirname(__file__), "..", "data"))
    ap.add_argument("--pypower-118", default=None, help="path to a MATPOWER/PYPOWER case118.py")
    a = ap.parse_args()
    os.makedirs(a.out, exist_ok=True)
    cases = {
        "ieee30-mod.json": ieee30("ieee30-mod", 200.0, 8),
        # Evening peak with high wind: the hours where the voltage-stability limit binds.
        "ieee30-stress.json": ieee30("ieee30-stress", 400.0, 3, statcom_mvar=30.0, start_hour=16),
        "two-bus.json": two_bus(),
    }
    if a.pypower_118:
        cases["ieee118-mod.json"] = ieee118(a.pypower_118)
    for fname, doc in cases.items():
        with open(os.path.join(a.out, fname), "w") as f:
            json.dump(doc, f, indent=1)
            f.write("\n")
        print("wrote", fname)


if __name__ == "__main__":
    main()
