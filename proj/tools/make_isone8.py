#!/usr/bin/env python3
"""Regenerates data/isone8, the bundled 8-zone ISO New England test system.

Deterministic: no randomness, so the committed CSVs are reproducible byte for
byte. Zone topology, line parameters, and per-state installed capacity follow
the published 8-zone reduction of the ISO-NE system; capacities are split into
individual units (76 controllable, 16 renewable) so that merit order, ramping,
and retirement scenarios have realistic granularity.
"""

import json
import math
import os

HERE = os.path.dirname(os.path.abspath(__file__))
OUT = os.path.join(HERE, "..", "data", "isone8")

ZONES = ["ME", "NH", "VT", "WCMA", "NEMA", "SEMA", "CT", "RI"]
STATE = {z: ("MA" if z in ("WCMA", "NEMA", "SEMA") else z) for z in ZONES}

# line, from, to, reactance ohm, capacity MW
LINES = [
    (1, "ME", "NH", 54.05, 1200),
    (2, "VT", "NH", 47.0, 1200),
    (3, "VT", "WCMA", 70.5, 1200),
    (4, "WCMA", "NH", 40.42, 1200),
    (5, "NEMA", "WCMA", 37.6, 1200),
    (6, "NEMA", "NH", 29.61, 1200),
    (7, "NEMA", "SEMA", 14.1, 1200),
    (8, "WCMA", "CT", 14.1, 1200),
    (9, "WCMA", "RI", 30.55, 1200),
    (10, "NEMA", "RI", 18.8, 1200),
    (11, "CT", "RI", 30.08, 1200),
    (12, "SEMA", "RI", 9.4, 1200),
]

# Installed capacity by state and technology, MW.
CAP = {
    "wind":    {"ME": 221.2, "NH": 140.5, "VT": 39.0, "MA": 681.7, "CT": 132.5, "RI": 85.0},
    "solar":   {"ME": 41.4, "NH": 83.84, "VT": 306.3, "MA": 1871.26, "CT": 464.34, "RI": 116.66},
    "nuclear": {"ME": 0.0, "NH": 1244.0, "VT": 620.2, "MA": 684.7, "CT": 2116.0, "RI": 0.0},
    "coal":    {"ME": 311.8, "NH": 95.4, "VT": 0.0, "MA": 144.4, "CT": 744.4, "RI": 1099.5},
    "oil":     {"ME": 1146.9, "NH": 400.2, "VT": 0.0, "MA": 1111.7, "CT": 2212.8, "RI": 435.0},
    "ng":      {"ME": 3862.7, "NH": 508.0, "VT": 0.0, "MA": 2249.6, "CT": 621.4, "RI": 3491.6},
}

# Marginal cost schedule per technology, $/MWh, one entry per unit in a state.
# Kept on a 2.5 $/MWh grid so a price discretization step that divides 2.5
# puts every controllable marginal cost exactly on the representable grid.
COST = {
    "nuclear": [7.5, 7.5, 7.5, 7.5],
    "coal": [20.0, 22.5, 25.0, 27.5],
    "ng": [25.0, 27.5, 30.0, 32.5],
    "oil": [87.5, 100.0, 112.5, 125.0],
}
RAMP_FRAC = {"nuclear": 0.1, "coal": 0.3, "ng": 0.6, "oil": 1.0}
SIGMA = {"wind": 0.1, "solar": 0.2}
RES_COST = {"wind": 1.1, "solar": 0.4}

# MA capacity lands in its three zones as one WCMA unit (35%), two NEMA units
# (20% each) and one SEMA unit (25%); renewables split 35/40/25 by zone.
MA_UNIT_SPLIT = [("WCMA", 0.35), ("NEMA", 0.20), ("NEMA", 0.20), ("SEMA", 0.25)]
MA_RES_SPLIT = [("WCMA", 0.35), ("NEMA", 0.40), ("SEMA", 0.25)]

HOURS = 24
DAYS = [("peak", 0.5, 11000.0), ("offpeak", 0.5, 9486.0)]  # avg peak 10243 MW
SHARE = {"ME": 0.11, "NH": 0.09, "VT": 0.055, "WCMA": 0.14, "NEMA": 0.19,
         "SEMA": 0.16, "CT": 0.17, "RI": 0.085}

CAND_TECH = [
    ("ng", "controllable", 20.0, 895000.0, 0.0),
    ("wind", "renewable", 1.1, 1630000.0, 0.1),
    ("solar", "renewable", 0.4, 2434000.0, 0.2),
]


def num(v):
    return repr(round(v, 10))


def profile(t):
    # Daily shape peaking at hour 18 with exactly 1.0 there.
    return 0.65 + 0.35 * (1.0 + math.cos(2.0 * math.pi * (t - 18) / 24.0)) / 2.0


def wind_factor(zone_idx, t, day_idx):
    shift = 0.05 if day_idx == 0 else -0.03
    return 0.3 + 0.12 * math.sin(2.0 * math.pi * (t + zone_idx) / 24.0) + shift


def solar_factor(t, day_idx):
    scale = 0.75 if day_idx == 0 else 0.6
    return scale * max(0.0, math.sin(math.pi * (t - 6) / 12.0))


def controllable_units():
    rows = []
    for tech in ("nuclear", "coal", "oil", "ng"):
        for state in ("ME", "NH", "VT", "MA", "CT", "RI"):
            cap = CAP[tech][state]
            if cap == 0.0:
                continue
            if state == "MA":
                placement = [(z, cap * f) for z, f in MA_UNIT_SPLIT]
            else:
                placement = [(state, cap / 4.0)] * 4
            for k, (zone, mw) in enumerate(placement):
                rows.append({
                    "id": f"{zone}_{tech.upper()}{k + 1}",
                    "node": zone, "kind": "controllable", "fuel": tech,
                    "g_min": 0.0, "g_max": mw,
                    "ramp": RAMP_FRAC[tech] * mw, "cost": COST[tech][k],
                })
    return rows


def renewable_units():
    rows = []
    for tech in ("wind", "solar"):
        for state in ("ME", "NH", "VT", "MA", "CT", "RI"):
            cap = CAP[tech][state]
            if state == "MA":
                placement = [(z, cap * f) for z, f in MA_RES_SPLIT]
            else:
                placement = [(state, cap)]
            for zone, mw in placement:
                rows.append({
                    "id": f"{zone}_{tech.upper()}",
                    "node": zone, "kind": "renewable", "fuel": tech,
                    "g_min": 0.0, "g_max": mw, "ramp": None,
                    "cost": RES_COST[tech], "sigma": SIGMA[tech],
                })
    return rows


def main():
    os.makedirs(OUT, exist_ok=True)

    def write(name, lines):
        with open(os.path.join(OUT, name), "w") as f:
            f.write("\n".join(lines) + "\n")

    write("nodes.csv", ["node,state"] + [f"{z},{STATE[z]}" for z in ZONES])
    write("lines.csv", ["line,from,to,reactance_ohm,capacity_mw"] +
          [f"{i},{a},{b},{num(x)},{num(c)}" for i, a, b, x, c in LINES])

    gen_header = ("id,node,kind,fuel,g_min_mw,g_max_mw,ramp_down_mw,ramp_up_mw,"
                  "cost_usd_per_mwh,alpha,sigma,upsilon,reserve_mw")
    rows = []
    for u in controllable_units():
        rows.append(f"{u['id']},{u['node']},controllable,{u['fuel']},0,"
                    f"{num(u['g_max'])},{num(-u['ramp'])},{num(u['ramp'])},"
                    f"{num(u['cost'])},,0,0,0")
    res_units = renewable_units()
    for u in res_units:
        rows.append(f"{u['id']},{u['node']},renewable,{u['fuel']},0,"
                    f"{num(u['g_max'])},,,{num(u['cost'])},0,{num(u['sigma'])},0,0")
    write("generators.csv", [gen_header] + rows)

    cand_header = gen_header + ",capital_cost_usd_per_mw,min_output_factor"
    rows = []
    cand_res = []
    for zone in ZONES:
        for tech, kind, cost, capex, sigma in CAND_TECH:
            gid = f"CAND_{tech.upper()}_{zone}"
            if kind == "renewable":
                cand_res.append((gid, tech))
                ramps = ","  # renewables follow the forecast, no ramp limit
            else:
                ramps = f"{num(-0.6 * 5000)},{num(0.6 * 5000)}"
            rows.append(f"{gid},{zone},{kind},{tech},0,5000,{ramps},"
                        f"{num(cost)},0,{num(sigma)},0,0,{num(capex)},0")
    write("candidates.csv", [cand_header] + rows)

    write("repdays.csv", ["day,weight"] + [f"{d},{num(w)}" for d, w, _ in DAYS])

    rows = ["node,day,hour,demand_mw"]
    for di, (day, _, peak) in enumerate(DAYS):
        for t in range(HOURS):
            for z in ZONES:
                rows.append(f"{z},{day},{t},{num(SHARE[z] * peak * profile(t))}")
    write("demand.csv", rows)

    rows = ["gen,day,hour,factor"]
    res_series = [(u["id"], u["fuel"], ZONES.index(u["node"])) for u in res_units]
    res_series += [(gid, tech, ZONES.index(gid.rsplit("_", 1)[1]))
                   for gid, tech in cand_res]
    for gid, tech, zi in res_series:
        for di, (day, _, _) in enumerate(DAYS):
            for t in range(HOURS):
                fac = wind_factor(zi, t, di) if tech == "wind" else solar_factor(t, di)
                rows.append(f"{gid},{day},{t},{num(fac)}")
    write("forecast.csv", rows)

    policy = {
        "horizon_years": 10,
        "discount_rate": 0.05,
        "actors": {
            s: {
                "rps_fraction": kappa,
                "capital_budget": bc,
                "policy_budget": bp,
                "energy_tariff": 3.0,
                "capacity_tariff": 300.0,
                "retail_price": 90.0,
                "interface_limit": 4000.0,
                "eta": 0.03,
            }
            for s, kappa, bc, bp in [
                ("ME", 0.80, 2.5e6, 8.0e5),
                ("NH", 0.252, 1.2e6, 3.0e5),
                ("VT", 0.75, 1.2e6, 4.0e5),
                ("MA", 0.35, 3.5e6, 1.0e6),
                ("CT", 0.48, 2.5e6, 8.0e5),
                ("RI", 0.385, 1.2e6, 4.0e5),
            ]
        },
        "retirements": {
            "basecase": {},
            "coal": {"fuels": ["coal"]},
            "coal_nuclear": {"fuels": ["coal", "nuclear"]},
        },
    }
    with open(os.path.join(OUT, "policy.json"), "w") as f:
        json.dump(policy, f, indent=2)
        f.write("\n")

    n_ctrl = len(controllable_units())
    n_res = len(res_units)
    print(f"wrote {OUT}: {n_ctrl} controllable units, {n_res} renewable units, "
          f"{len(ZONES) * len(CAND_TECH)} candidates")


if __name__ == "__main__":
    main()
