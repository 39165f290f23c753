"""Feeder documents for tests, examples, and the command line.

Every builder returns a plain JSON-ready dict in SI units on a 10 kVA /
230 V base.  All profiles are closed-form functions of the period index,
so two calls with the same arguments produce byte-identical documents.
"""

import math

BASE_KVA = 10.0
BASE_VOLTS = 230.0
_VMIN = 0.90 * BASE_VOLTS
_VMAX = 1.10 * BASE_VOLTS
_ZBASE = BASE_VOLTS * BASE_VOLTS / (BASE_KVA * 1e3)  # 5.29 ohm

_SQRT3 = math.sqrt(3.0)
_ANGLES = (0.0, -2.0 * math.pi / 3.0, 2.0 * math.pi / 3.0)


def _cx(z: complex) -> dict:
    return {"re": z.real, "im": z.imag}


def _zmat(self_z: complex, mutual_z: complex = 0j) -> list:
    return [
        [_cx(self_z if r == c else mutual_z) for c in range(3)]
        for r in range(3)
    ]


def _pu_z(self_pu: complex, mutual_pu: complex = 0j) -> list:
    return _zmat(self_pu * _ZBASE, mutual_pu * _ZBASE)


def _balanced_root(T: int, vm: float = BASE_VOLTS) -> list:
    one = [_cx(vm * complex(math.cos(a), math.sin(a))) for a in _ANGLES]
    return [one for _ in range(T)]


def _node(nid: str, **kw) -> dict:
    d = {"id": nid, "vmin": _VMIN, "vmax": _VMAX}
    d.update(kw)
    return d


def _customer(node, kind, phase, p, q, service_z_pu=0.02 + 0.01j) -> dict:
    if not isinstance(p, (list, tuple)):
        p, q = [p], [q]
    return {
        "node": node,
        "kind": kind,
        "initial_phase": phase,
        "service_z": _cx(service_z_pu * _ZBASE),
        "demand": [{"p": float(pp), "q": float(qq)} for pp, qq in zip(p, q)],
        "vmin": _VMIN,
        "vmax": _VMAX,
    }


def _horizon(T: int, n_o: int = 1) -> dict:
    return {"T": T, "n_o": n_o, "root_voltage": _balanced_root(T)}


def load_profile(t: int, T: int) -> float:
    """Residential double-peak shape in roughly [0.4, 1.0]."""
    hour = 24.0 * (t - 1) / T
    morning = 0.30 * math.exp(-(((hour - 8.5) / 2.5) ** 2))
    evening = 0.45 * math.exp(-(((hour - 20.0) / 2.8) ** 2))
    return 0.40 + morning + evening


def solar_profile(t: int, T: int) -> float:
    """Daylight bell, zero outside 06:00-20:00, peak 1 at 13:00."""
    hour = 24.0 * (t - 1) / T
    if hour < 6.0 or hour > 20.0:
        return 0.0
    return math.sin(math.pi * (hour - 6.0) / 14.0)


def two_node_doc(kind: str = "fixed", T: int = 1, p_watts: float = 800.0) -> dict:
    """Root, one secondary bus, one customer; the smallest legal feeder."""
    q = 0.33 * p_watts
    return {
        "base": {"kva": BASE_KVA, "volts": BASE_VOLTS},
        "nodes": [
            _node("n1", is_root=True),
            _node("n2", is_secondary=True),
        ],
        "lines": [{"from": "n1", "to": "n2", "z": _pu_z(0.002 + 0.04j)}],
        "customers": [
            _customer("n2", kind, "a", [p_watts] * T, [q] * T),
        ],
        "horizon": _horizon(T),
    }


def balanced_doc(T: int = 1) -> dict:
    """Three identical customers, one per phase: unbalance exactly zero."""
    p, q = 600.0, 200.0
    return {
        "base": {"kva": BASE_KVA, "volts": BASE_VOLTS},
        "nodes": [
            _node("n1", is_root=True),
            _node("n2", is_secondary=True),
        ],
        "lines": [{"from": "n1", "to": "n2", "z": _pu_z(0.002 + 0.04j, 0.0005 + 0.002j)}],
        "customers": [
            _customer("n2", "fixed", ph, [p] * T, [q] * T) for ph in ("a", "b", "c")
        ],
        "horizon": _horizon(T),
    }


# five single-period fixtures with <= 3 adjustable customers, used for
# exhaustive-enumeration equivalence; each varies topology and loading
_SMALL_VARIANTS = {
    0: {
        "nodes": ["n3"],
        "lines": [("n2", "n3", 0.004 + 0.009j)],
        "customers": [
            ("n3", "fixed", "a", 600.0),
            ("n3", "adjustable", "a", 500.0),
            ("n2", "fixed", "b", 300.0),
        ],
    },
    1: {
        "nodes": ["n3", "n4"],
        "lines": [("n2", "n3", 0.005 + 0.011j), ("n3", "n4", 0.004 + 0.008j)],
        "customers": [
            ("n3", "adjustable", "a", 700.0),
            ("n4", "adjustable", "a", 550.0),
            ("n4", "fixed", "b", 400.0),
            ("n3", "fixed", "c", 350.0),
        ],
    },
    2: {
        "nodes": ["n3"],
        "lines": [("n2", "n3", 0.006 + 0.013j)],
        "customers": [
            ("n3", "adjustable", "a", 800.0),
            ("n3", "adjustable", "b", 450.0),
            ("n3", "adjustable", "a", 620.0),
            ("n2", "fixed", "c", 280.0),
        ],
    },
    3: {
        "nodes": ["n3", "n4"],
        "lines": [("n2", "n3", 0.003 + 0.007j), ("n2", "n4", 0.005 + 0.012j)],
        "customers": [
            ("n3", "adjustable", "b", 650.0),
            ("n4", "adjustable", "c", 520.0),
            ("n3", "fixed", "a", 480.0),
            ("n4", "fixed", "a", 410.0),
        ],
    },
    4: {
        "nodes": ["n3"],
        "lines": [("n2", "n3", 0.004 + 0.010j)],
        "customers": [
            ("n3", "adjustable", "a", -700.0),  # rooftop generation
            ("n3", "adjustable", "a", 560.0),
            ("n3", "fixed", "b", 330.0),
            ("n3", "adjustable", "c", 610.0),
            ("n2", "fixed", "a", 290.0),
        ],
    },
}


def small_feeder_doc(variant: int) -> dict:
    """One of five compact single-period fixtures for oracle comparisons."""
    spec = _SMALL_VARIANTS[variant]
    nodes = [_node("n1", is_root=True), _node("n2", is_secondary=True)]
    nodes.extend(_node(nid) for nid in spec["nodes"])
    lines = [{"from": "n1", "to": "n2", "z": _pu_z(0.002 + 0.04j)}]
    lines.extend(
        {"from": f, "to": t, "z": _pu_z(z, 0.3 * z)} for f, t, z in spec["lines"]
    )
    customers = [
        _customer(node, kind, ph, p, 0.33 * abs(p))
        for node, kind, ph, p in spec["customers"]
    ]
    return {
        "base": {"kva": BASE_KVA, "volts": BASE_VOLTS},
        "nodes": nodes,
        "lines": lines,
        "customers": customers,
        "horizon": _horizon(1),
    }


# layout of the desk-scale benchmark feeder: (node, kind, phase, base watts)
_IEEE13_CUSTOMERS = (
    ("n4", "fixed", "a", 550.0),
    ("n4", "fixed", "b", 420.0),
    ("n4", "adjustable", "c", 480.0),
    ("n5", "fixed", "a", 610.0),
    ("n5", "adjustable", "a", 520.0),
    ("n6", "fixed", "b", 380.0),
    ("n6", "fixed", "a", 300.0),
    ("n7", "fixed", "c", 450.0),
    ("n7", "adjustable", "a", 560.0),
    ("n8", "fixed", "b", 350.0),
    ("n9", "fixed", "a", 520.0),
    ("n9", "adjustable", "b", 440.0),
    ("n10", "fixed", "c", 400.0),
    ("n11", "fixed", "a", 480.0),
    ("n12", "fixed", "b", 360.0),
    ("n13", "fixed", "c", 430.0),
    ("n13", "adjustable", "a", 500.0),
)

_IEEE13_LINES = (
    ("n2", "n3"),
    ("n3", "n4"),
    ("n4", "n5"),
    ("n5", "n6"),
    ("n3", "n7"),
    ("n7", "n8"),
    ("n8", "n9"),
    ("n2", "n10"),
    ("n10", "n11"),
    ("n11", "n12"),
    ("n12", "n13"),
)


def ieee13_like_doc(
    T: int = 24,
    n_o: int = 1,
    svc_kva: float = 5.0,
    pv_watts: float = 2500.0,
) -> dict:
    """Thirteen-bus radial feeder, 17 customers, 5 with switchable service.

    The five adjustable customers host rooftop generation, so midday and
    evening unbalance pull the optimal assignment in different directions.
    """
    nodes = [_node("n1", is_root=True), _node("n2", is_secondary=True)]
    nodes.extend(_node(f"n{i}") for i in range(3, 14))
    lines = [
        {
            "from": "n1",
            "to": "n2",
            "z": _pu_z(0.002 + 0.04j),
            "ampacity": 60.0,
        }
    ]
    lines.extend(
        {"from": f, "to": t, "z": _pu_z(0.004 + 0.010j, 0.001 + 0.005j)}
        for f, t in _IEEE13_LINES
    )

    customers = []
    for cid0, (node, kind, ph, base) in enumerate(_IEEE13_CUSTOMERS):
        shift = (cid0 % 3) - 1
        p, q = [], []
        for t in range(1, T + 1):
            load = base * load_profile(t + shift, T)
            gen = pv_watts * solar_profile(t, T) if kind == "adjustable" else 0.0
            p.append(load - gen)
            q.append(0.33 * load)
        customers.append(_customer(node, kind, ph, p, q))

    doc = {
        "base": {"kva": BASE_KVA, "volts": BASE_VOLTS},
        "nodes": nodes,
        "lines": lines,
        "customers": customers,
        "horizon": _horizon(T, n_o),
    }
    if svc_kva > 0:
        doc["svc"] = {
            "node": "n2",
            "s_cap": svc_kva * 1e3,
            "s_ind": svc_kva * 1e3,
            "v_rated": _SQRT3 * BASE_VOLTS,
        }
    return doc


def medium_feeder_doc(T: int = 12, n_o: int = 1, svc_kva: float = 2.0) -> dict:
    """Four-bus chain with two adjustable customers; cheap enough to sweep."""
    nodes = [
        _node("n1", is_root=True),
        _node("n2", is_secondary=True),
        _node("n3"),
        _node("n4"),
    ]
    lines = [
        {"from": "n1", "to": "n2", "z": _pu_z(0.002 + 0.04j)},
        {"from": "n2", "to": "n3", "z": _pu_z(0.004 + 0.009j, 0.001 + 0.004j)},
        {"from": "n3", "to": "n4", "z": _pu_z(0.005 + 0.011j, 0.001 + 0.004j)},
    ]
    layout = (
        ("n3", "fixed", "a", 700.0, 0.0),
        ("n3", "fixed", "b", 450.0, 0.0),
        ("n3", "adjustable", "a", 600.0, 0.0),
        ("n4", "fixed", "c", 500.0, 0.0),
        ("n4", "adjustable", "a", 650.0, 1500.0),
        ("n4", "fixed", "b", 380.0, 0.0),
    )
    customers = []
    for cid0, (node, kind, ph, base, pv) in enumerate(layout):
        shift = cid0 % 3
        p, q = [], []
        for t in range(1, T + 1):
            load = base * load_profile(t + shift, T)
            p.append(load - pv * solar_profile(t, T))
            q.append(0.33 * load)
        customers.append(_customer(node, kind, ph, p, q))
    doc = {
        "base": {"kva": BASE_KVA, "volts": BASE_VOLTS},
        "nodes": nodes,
        "lines": lines,
        "customers": customers,
        "horizon": _horizon(T, n_o),
    }
    if svc_kva > 0:
        doc["svc"] = {
            "node": "n2",
            "s_cap": svc_kva * 1e3,
            "s_ind": svc_kva * 1e3,
            "v_rated": _SQRT3 * BASE_VOLTS,
        }
    return doc


def infeasible_svc_doc() -> dict:
    """Single-phase generation so heavy that only re-phasing can satisfy
    the voltage-unbalance limits; the tiny compensator cannot.
    """
    return {
        "base": {"kva": BASE_KVA, "volts": BASE_VOLTS},
        "nodes": [
            _node("n1", is_root=True),
            _node("n2", is_secondary=True),
            _node("n3"),
        ],
        "lines": [
            {"from": "n1", "to": "n2", "z": _pu_z(0.002 + 0.06j)},
            {"from": "n2", "to": "n3", "z": _pu_z(0.005 + 0.025j, 0.001 + 0.008j)},
        ],
        "customers": [
            _customer("n3", "fixed", "a", 400.0, 130.0),
            _customer("n3", "adjustable", "a", -3500.0, 0.0),
            _customer("n3", "adjustable", "a", -3500.0, 0.0),
            _customer("n3", "adjustable", "a", -3500.0, 0.0),
        ],
        "svc": {
            "node": "n2",
            "s_cap": 200.0,
            "s_ind": 200.0,
            "v_rated": _SQRT3 * BASE_VOLTS,
        },
        "horizon": _horizon(1),
    }


def random_feeder_doc(rng) -> dict:
    """Small randomized single-period feeder within the sweep's domain.

    Demands are capped so the worst-case voltage drop stays a few percent,
    keeping the instance inside the linearization region.
    """
    n_extra = int(rng.integers(0, 2))
    nodes = [_node("n1", is_root=True), _node("n2", is_secondary=True)]
    nodes.extend(_node(f"n{3 + i}") for i in range(n_extra))
    lines = [
        {
            "from": "n1",
            "to": "n2",
            "z": _pu_z(complex(0.002, 0.03 + 0.02 * rng.random())),
        }
    ]
    prev = "n2"
    for i in range(n_extra):
        nid = f"n{3 + i}"
        self_z = complex(
            0.002 + 0.004 * rng.random(), 0.004 + 0.008 * rng.random()
        )
        lines.append({"from": prev, "to": nid, "z": _pu_z(self_z, 0.3 * self_z)})
        prev = nid

    leafs = [n["id"] for n in nodes[1:]]
    n_cust = int(rng.integers(1, 4))
    adjustable_budget = 1 if rng.random() < 0.15 else 0
    customers = []
    for _ in range(n_cust):
        node = leafs[int(rng.integers(0, len(leafs)))]
        phase = "abc"[int(rng.integers(0, 3))]
        kind = "fixed"
        if adjustable_budget:
            kind = "adjustable"
            adjustable_budget -= 1
        p = float(rng.uniform(200.0, 900.0))
        if rng.random() < 0.15:
            p = -p
        q = 0.33 * abs(p)
        customers.append(_customer(node, kind, phase, p, q))
    return {
        "base": {"kva": BASE_KVA, "volts": BASE_VOLTS},
        "nodes": nodes,
        "lines": lines,
        "customers": customers,
        "horizon": _horizon(1),
    }
