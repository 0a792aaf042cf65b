"""Regenerate the bundled grid cases in crates/core/data/.

Requires numpy and pypower (`pip install pypower`). The network data comes
from the MATPOWER/PYPOWER case9 and case39 tables; B is the imaginary part of
the bus admittance matrix (line charging and transformer taps included),
reordered so load buses come first and generator buses last.

Reactive loads are scaled to a stressed operating point and the covertness
caps q_a_max are set per load bus; both are recorded in each output file.
"""
import json
import os

import numpy as np
from pypower.api import case9, case39, ext2int, makeYbus

ROOT = os.path.join(os.path.dirname(__file__), "..", "crates", "core")
OUT = os.path.join(ROOT, "data")
FIXTURES = os.path.join(ROOT, "tests", "data")


def dump(obj, path):
    """JSON with one line per top-level key; matrix rows stay on one line."""
    lines = []
    for key, val in obj.items():
        if key == "B":
            rows = ",\n    ".join(json.dumps(r) for r in val)
            lines.append(f'  "B": [\n    {rows}\n  ]')
        elif key == "branches":
            rows = ",\n    ".join(json.dumps(r) for r in val)
            lines.append(f'  "branches": [\n    {rows}\n  ]')
        else:
            lines.append(f"  {json.dumps(key)}: {json.dumps(val)}")
    with open(path, "w") as f:
        f.write("{\n" + ",\n".join(lines) + "\n}\n")


def build(ppc, name, q_scale, ctrl, q_a_max, q_d_max, note):
    ppc = ext2int(ppc)
    ybus, _, _ = makeYbus(ppc["baseMVA"], ppc["bus"], ppc["branch"])
    b = np.imag(ybus.toarray())
    gens = sorted(set(int(g) for g in ppc["gen"][:, 0]))
    loads = [i for i in range(b.shape[0]) if i not in gens]
    order = loads + gens
    b = b[np.ix_(order, order)]
    vg_by_bus = {int(g[0]): float(g[5]) for g in ppc["gen"]}
    load_ids = [i + 1 for i in loads]
    q_nom = ppc["bus"][loads, 3] / ppc["baseMVA"] * q_scale
    qa = [float(q_a_max(bus)) for bus in load_ids]
    qd = [float(q_d_max) if bus in ctrl else 0.0 for bus in load_ids]
    branches = []
    for br in ppc["branch"]:
        branches.append({
            "from": int(br[0]) + 1, "to": int(br[1]) + 1,
            "r": float(br[2]), "x": float(br[3]), "b": float(br[4]),
            "tap": float(br[8]),
        })
    case = {
        "name": name,
        "description": note,
        "base_MVA": float(ppc["baseMVA"]),
        "n_loads": len(loads),
        "n_gens": len(gens),
        "load_bus_ids": load_ids,
        "gen_bus_ids": [g + 1 for g in gens],
        "B": [[float(v) for v in row] for row in b],
        "V_G": [vg_by_bus[g] for g in gens],
        "Q_L_nominal": [float(v) for v in q_nom],
        "q_a_max": qa,
        "q_d_max": qd,
        "ctrl_buses": sorted(ctrl),
    }
    dump(case, os.path.join(OUT, name + ".json"))
    # branch-list variant used by the importer tests
    alt = {k: v for k, v in case.items() if k != "B"}
    alt["branches"] = branches
    dump(alt, os.path.join(FIXTURES, name + "_branches.json"))

    # dense-inverse reference values for the test suite
    k = len(loads)
    bll, blg = b[:k, :k], b[:k, k:]
    vstar = -np.linalg.inv(bll) @ blg @ np.array(case["V_G"])
    qcrit = 0.25 * np.diag(vstar) @ bll @ np.diag(vstar)
    delta = np.abs(np.linalg.inv(qcrit) @ q_nom).max()
    print(f"{name}: K={k} G={len(gens)} delta_nominal={delta!r}")


build(
    case9(), "ieee9", 3.5, {4, 5, 6, 8},
    lambda bus: 1.0 if bus in (4, 5, 6, 8) else 0.5, 2.0,
    "IEEE 9-bus (MATPOWER case9 network). Reactive loads scaled x3.5 to a "
    "stressed operating point. q_a_max: 1.0 pu on buses with control devices, "
    "0.5 pu on buses 7 and 9. q_d_max: 2.0 pu on controllable buses.",
)
build(
    case39(), "ieee39", 2.0, {5, 6, 7, 8, 10, 11, 13},
    lambda bus: 2.0, 2.0,
    "IEEE 39-bus New England (MATPOWER case39 network). Reactive loads scaled "
    "x2.0 to a stressed operating point. q_a_max: 2.0 pu on every load bus. "
    "q_d_max: 2.0 pu on controllable buses.",
)
