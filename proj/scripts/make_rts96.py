#!/usr/bin/env python3
"""Generate the bundled 73-bus three-area case and its base snapshot.

Topology: three 24-bus areas (ring plus chords) joined through a hub bus
and direct inter-area ties. Thermal limits are sized from the worst
single-outage flow at the base dispatch so the shipped snapshot clears
every N-1 screen with margin.

Writes data/rts96.case and data/rts96_base.inj; deterministic.
"""

import random
from pathlib import Path

import numpy as np

OUT_DIR = Path(__file__).resolve().parent.parent / "data"

N_AREAS = 3
AREA_BUSES = 24
HUB = N_AREAS * AREA_BUSES  # bus 72
N_BUSES = HUB + 1

FAIL_PROB = 5e-4
REPAIR = 5
BASE_DEMAND = 70.0  # MW per load bus in the snapshot
WIND_CAP = 100.0
WIND_CF = 0.35
LIMIT_MARGIN = 1.35
LIMIT_FLOOR = 60.0


def build_lines(rng):
    lines = []

    def add(u, v):
        lines.append((u, v, rng.uniform(300.0, 600.0)))

    for a in range(N_AREAS):
        base = a * AREA_BUSES
        for i in range(AREA_BUSES):  # ring
            add(base + i, base + (i + 1) % AREA_BUSES)
        for i in range(0, AREA_BUSES, 2):  # chords
            add(base + i, base + (i + 6) % AREA_BUSES)
    for a in range(N_AREAS):  # two hub ties per area
        base = a * AREA_BUSES
        add(base + 0, HUB)
        add(base + 12, HUB)
    # direct area-to-area ties
    for a in range(N_AREAS):
        b = (a + 1) % N_AREAS
        add(a * AREA_BUSES + 5, b * AREA_BUSES + 17)
        add(a * AREA_BUSES + 9, b * AREA_BUSES + 21)
    assert len(lines) == 120, len(lines)
    return lines


def build_generators(rng):
    gens = []
    sizes = [(40.0, 160.0), (20.0, 100.0), (0.0, 60.0)]
    for a in range(N_AREAS):
        base = a * AREA_BUSES
        for b in range(11):  # generator buses 0-10 of each area
            for s, (gmin_hi, gmax) in enumerate(sizes):
                gmax_i = gmax * rng.uniform(0.8, 1.2)
                gmin_i = gmin_hi * rng.uniform(0.0, 0.5)
                cost = rng.uniform(8.0, 35.0)
                gens.append((base + b, round(gmin_i, 1), round(gmax_i, 1), round(cost, 2)))
    assert len(gens) == 99, len(gens)
    return gens


def build_wind():
    units = []
    for a in range(N_AREAS):
        base = a * AREA_BUSES
        for b in (20, 21, 22):
            units.append((base + b, WIND_CAP))
    assert len(units) == 9
    return units


def load_buses():
    out = []
    for a in range(N_AREAS):
        base = a * AREA_BUSES
        out.extend(base + b for b in range(11, 24))
    return out


def dispatch(gens, target):
    """Proportional-to-capacity dispatch clipped to unit limits."""
    gmin = np.array([g[1] for g in gens])
    gmax = np.array([g[2] for g in gens])
    target = min(max(target, gmin.sum()), gmax.sum())
    lo, hi = 0.0, 1.0
    for _ in range(200):
        lam = 0.5 * (lo + hi)
        total = np.clip(lam * gmax, gmin, gmax).sum()
        if total < target:
            lo = lam
        else:
            hi = lam
    return np.clip(0.5 * (lo + hi) * gmax, gmin, gmax)


def dc_flows(lines, net, outage):
    """Angles via a reduced Laplacian solve with bus 0 as slack."""
    lap = np.zeros((N_BUSES, N_BUSES))
    for idx, (u, v, b) in enumerate(lines):
        if idx == outage:
            continue
        lap[u, u] += b
        lap[v, v] += b
        lap[u, v] -= b
        lap[v, u] -= b
    rhs = net.copy()
    rhs[0] = 0.0
    lap[0, :] = 0.0
    lap[0, 0] = 1.0
    theta = np.linalg.solve(lap, rhs)
    return np.array(
        [0.0 if i == outage else b * (theta[u] - theta[v])
         for i, (u, v, b) in enumerate(lines)]
    )


def main():
    rng = random.Random(96)
    lines = build_lines(rng)
    gens = build_generators(rng)
    wind = build_wind()
    loads = load_buses()

    demand = np.zeros(N_BUSES)
    demand[loads] = BASE_DEMAND
    wind_mw = np.zeros(N_BUSES)
    for bus, cap in wind:
        wind_mw[bus] += cap * WIND_CF
    gen_mw = dispatch(gens, demand.sum() - wind_mw.sum())

    net = wind_mw - demand
    for (bus, _, _, _), mw in zip(gens, gen_mw):
        net[bus] += mw
    # slack-balance to machine precision
    net[0] -= net.sum()

    worst = np.abs(dc_flows(lines, net, -1))
    for outage in range(len(lines)):
        worst = np.maximum(worst, np.abs(dc_flows(lines, net, outage)))
    limits = np.maximum(LIMIT_MARGIN * worst, LIMIT_FLOOR)

    case = OUT_DIR / "rts96.case"
    with case.open("w") as f:
        f.write("# Three-area 73-bus system: 120 lines, 99 units, 9 wind farms.\n")
        f.write("# Generated by scripts/make_rts96.py; susceptance in MW/rad.\n")
        f.write("BUS\n")
        load_set = set(loads)
        for b in range(N_BUSES):
            f.write(f"{b} {1 if b in load_set else 0}\n")
        f.write("LINE\n# id from to susceptance limit fail_prob repair\n")
        for i, (u, v, b) in enumerate(lines):
            f.write(f"{i} {u} {v} {b:.1f} {limits[i]:.1f} {FAIL_PROB} {REPAIR}\n")
        f.write("GEN\n# id bus g_min g_max cost\n")
        for i, (bus, gmin, gmax, cost) in enumerate(gens):
            f.write(f"{i} {bus} {gmin} {gmax} {cost}\n")
        f.write("WIND\n# id bus capacity\n")
        for i, (bus, cap) in enumerate(wind):
            f.write(f"{i} {bus} {cap:.0f}\n")
        f.write("REF\n0\n")

    inj = OUT_DIR / "rts96_base.inj"
    with inj.open("w") as f:
        f.write("# Base snapshot matching the generated case's dispatch.\n")
        f.write("DEMAND\n")
        for b in loads:
            f.write(f"{b} {BASE_DEMAND}\n")
        f.write("WIND\n")
        for i, (bus, cap) in enumerate(wind):
            f.write(f"{i} {cap * WIND_CF}\n")
        f.write("GEN\n")
        for i, mw in enumerate(gen_mw):
            f.write(f"{i} {mw:.6f}\n")

    print(f"wrote {case} and {inj}")
    print(f"total demand {demand.sum():.1f} MW, wind {wind_mw.sum():.1f} MW, "
          f"dispatch {gen_mw.sum():.1f} MW")
    print(f"limit range [{limits.min():.1f}, {limits.max():.1f}] MW")


if __name__ == "__main__":
    main()
