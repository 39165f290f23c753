"""Typed network model, JSON ingestion, per-unit conversion and validation.

A network document carries SI quantities (volts, ohms, watts/vars, VA,
amps).  ``load_network`` parses a document, converts everything onto a
single per-unit base and validates the result, so the rest of the package
only ever sees per-unit values.  The per-unit base is single-phase:
``base.kva`` is the power base in kVA and ``base.volts`` the
phase-to-neutral voltage base.
"""

import json
import math
from dataclasses import dataclass, replace
from pathlib import Path

PHASES = ("a", "b", "c")
CUSTOMER_KINDS = ("fixed", "adjustable")

DEFAULT_NU_NEG = 0.02
DEFAULT_NU_ZERO = 0.045


class NetworkError(ValueError):
    """Base class for network document problems."""


class SchemaError(NetworkError):
    """Document shape, typing or cross-reference problem."""


class TopologyError(NetworkError):
    """The graph is not a rooted radial feeder."""


@dataclass(frozen=True)
class Node:
    id: str
    vm_min: float
    vm_max: float
    is_root: bool = False
    is_secondary: bool = False


@dataclass(frozen=True)
class Line:
    from_node: str
    to_node: str
    # 3x3 phase impedance matrix, row/column order a, b, c
    z: tuple
    ampacity: float | None = None

    def z_at(self, p: int, q: int) -> complex:
        return self.z[p][q]


@dataclass(frozen=True)
class Customer:
    cid: int  # 1-based position in the document
    node: str
    kind: str  # "fixed" or "adjustable"
    initial_phase: str
    service_z: complex
    demand: tuple  # ((p, q), ...) one pair per period
    vm_min: float
    vm_max: float

    @property
    def adjustable(self) -> bool:
        return self.kind == "adjustable"


@dataclass(frozen=True)
class SvcSpec:
    node: str
    s_cap: float
    s_ind: float
    v_rated: float  # phase-to-phase magnitude at the compensator bus


@dataclass(frozen=True)
class Horizon:
    periods: tuple  # (1, 2, ..., T)
    n_o: int
    subsets: tuple  # contiguous near-even partition of periods
    root_voltage: tuple  # per period: (Va, Vb, Vc) complex

    @property
    def T(self) -> int:
        return len(self.periods)


@dataclass(frozen=True)
class ValidationReport:
    findings: tuple

    @property
    def ok(self) -> bool:
        return not self.findings


@dataclass(frozen=True)
class Network:
    nodes: tuple
    lines: tuple
    customers: tuple
    svc: SvcSpec | None
    horizon: Horizon
    nu_neg: float
    nu_zero: float
    base_kva: float
    base_volts: float
    units: str = "pu"  # "pu" or "si"
    nominal_vm: float = 1.0

    def node(self, node_id: str) -> Node:
        for n in self.nodes:
            if n.id == node_id:
                return n
        raise KeyError(node_id)

    def root(self) -> Node:
        return next(n for n in self.nodes if n.is_root)

    def secondary(self) -> Node:
        return next(n for n in self.nodes if n.is_secondary)

    def dt_line(self) -> Line:
        """The transformer branch between the root and the secondary bus."""
        r, s = self.root().id, self.secondary().id
        for ln in self.lines:
            if {ln.from_node, ln.to_node} == {r, s}:
                return ln
        raise TopologyError("no branch joins root %r and secondary %r" % (r, s))

    def customers_at(self, node_id: str) -> tuple:
        return tuple(c for c in self.customers if c.node == node_id)

    def adjustable_customers(self) -> tuple:
        return tuple(c for c in self.customers if c.adjustable)


def even_partition(T: int, n_o: int) -> tuple:
    """Split periods 1..T into n_o contiguous near-even subsets.

    Sizes differ by at most one; when T is not divisible the leading
    subsets take the extra period so any remainder lands on the last,
    shorter subset.
    """
    if n_o < 1 or n_o > T:
        raise SchemaError(f"horizon: n_o={n_o} must be in 1..T={T}")
    base, rem = divmod(T, n_o)
    subsets = []
    start = 1
    for k in range(n_o):
        size = base + (1 if k < rem else 0)
        subsets.append(tuple(range(start, start + size)))
        start += size
    return tuple(subsets)


# ---------------------------------------------------------------------------
# parsing


def _complex_of(obj, where: str) -> complex:
    if not isinstance(obj, dict) or "re" not in obj or "im" not in obj:
        raise SchemaError(f"{where}: expected an object with 're' and 'im'")
    try:
        return complex(float(obj["re"]), float(obj["im"]))
    except (TypeError, ValueError) as exc:
        raise SchemaError(f"{where}: non-numeric re/im") from exc


def _number(obj, where: str) -> float:
    if isinstance(obj, bool) or not isinstance(obj, (int, float)):
        raise SchemaError(f"{where}: expected a number, got {type(obj).__name__}")
    return float(obj)


def _parse_node(doc: dict, i: int) -> Node:
    where = f"nodes[{i}]"
    if "id" not in doc:
        raise SchemaError(f"{where}: missing 'id'")
    return Node(
        id=str(doc["id"]),
        vm_min=_number(doc.get("vmin", 0.0), where + ".vmin"),
        vm_max=_number(doc.get("vmax", 0.0), where + ".vmax"),
        is_root=bool(doc.get("is_root", False)),
        is_secondary=bool(doc.get("is_secondary", False)),
    )


def _parse_line(doc: dict, i: int) -> Line:
    where = f"lines[{i}]"
    for key in ("from", "to", "z"):
        if key not in doc:
            raise SchemaError(f"{where}: missing '{key}'")
    z = doc["z"]
    if not isinstance(z, list) or len(z) != 3 or any(len(row) != 3 for row in z):
        raise SchemaError(f"{where}.z: expected a 3x3 matrix")
    zmat = tuple(
        tuple(_complex_of(z[r][c], f"{where}.z[{r}][{c}]") for c in range(3))
        for r in range(3)
    )
    amp = doc.get("ampacity")
    return Line(
        from_node=str(doc["from"]),
        to_node=str(doc["to"]),
        z=zmat,
        ampacity=None if amp is None else _number(amp, where + ".ampacity"),
    )


def _parse_customer(doc: dict, i: int) -> Customer:
    where = f"customers[{i}]"
    for key in ("node", "kind", "initial_phase", "service_z", "demand"):
        if key not in doc:
            raise SchemaError(f"{where}: missing '{key}'")
    demand = doc["demand"]
    if not isinstance(demand, list) or not demand:
        raise SchemaError(f"{where}.demand: expected a non-empty list")
    pairs = tuple(
        (
            _number(d.get("p", None), f"{where}.demand[{t}].p"),
            _number(d.get("q", None), f"{where}.demand[{t}].q"),
        )
        for t, d in enumerate(demand)
    )
    return Customer(
        cid=i + 1,
        node=str(doc["node"]),
        kind=str(doc["kind"]),
        initial_phase=str(doc["initial_phase"]),
        service_z=_complex_of(doc["service_z"], where + ".service_z"),
        demand=pairs,
        vm_min=_number(doc.get("vmin", 0.0), where + ".vmin"),
        vm_max=_number(doc.get("vmax", 0.0), where + ".vmax"),
    )


def parse_document(doc: dict) -> Network:
    """Parse a raw document (SI units) into a Network without validation."""
    if not isinstance(doc, dict):
        raise SchemaError("document: expected a JSON object at top level")
    for key in ("base", "nodes", "lines", "customers", "horizon"):
        if key not in doc:
            raise SchemaError(f"document: missing '{key}'")
    base = doc["base"]
    if "kva" not in base or "volts" not in base:
        raise SchemaError("base: expected 'kva' and 'volts'")
    base_kva = _number(base["kva"], "base.kva")
    base_volts = _number(base["volts"], "base.volts")

    nodes = tuple(_parse_node(n, i) for i, n in enumerate(doc["nodes"]))
    lines = tuple(_parse_line(l, i) for i, l in enumerate(doc["lines"]))
    customers = tuple(_parse_customer(c, i) for i, c in enumerate(doc["customers"]))

    svc = None
    if doc.get("svc") is not None:
        s = doc["svc"]
        for key in ("node", "s_cap", "s_ind", "v_rated"):
            if key not in s:
                raise SchemaError(f"svc: missing '{key}'")
        svc = SvcSpec(
            node=str(s["node"]),
            s_cap=_number(s["s_cap"], "svc.s_cap"),
            s_ind=_number(s["s_ind"], "svc.s_ind"),
            v_rated=_number(s["v_rated"], "svc.v_rated"),
        )

    hor = doc["horizon"]
    for key in ("T", "n_o", "root_voltage"):
        if key not in hor:
            raise SchemaError(f"horizon: missing '{key}'")
    T = int(hor["T"])
    if T < 1:
        raise SchemaError("horizon.T: must be >= 1")
    rv_doc = hor["root_voltage"]
    if not isinstance(rv_doc, list) or len(rv_doc) != T:
        raise SchemaError(f"horizon.root_voltage: expected {T} period entries")
    root_voltage = []
    for t, triple in enumerate(rv_doc):
        if not isinstance(triple, list) or len(triple) != 3:
            raise SchemaError(f"horizon.root_voltage[{t}]: expected 3 phase entries")
        root_voltage.append(
            tuple(_complex_of(triple[p], f"horizon.root_voltage[{t}][{p}]") for p in range(3))
        )
    horizon = Horizon(
        periods=tuple(range(1, T + 1)),
        n_o=int(hor["n_o"]),
        subsets=even_partition(T, int(hor["n_o"])),
        root_voltage=tuple(root_voltage),
    )

    limits = doc.get("limits") or {}
    nu_neg = _number(limits.get("nu_neg", DEFAULT_NU_NEG), "limits.nu_neg")
    nu_zero = _number(limits.get("nu_zero", DEFAULT_NU_ZERO), "limits.nu_zero")

    return Network(
        nodes=nodes,
        lines=lines,
        customers=customers,
        svc=svc,
        horizon=horizon,
        nu_neg=nu_neg,
        nu_zero=nu_zero,
        base_kva=base_kva,
        base_volts=base_volts,
        units="si",
        nominal_vm=base_volts,
    )


# ---------------------------------------------------------------------------
# per-unit conversion


def _scale_network(net: Network, s_div: float, v_div: float, units: str) -> Network:
    z_div = v_div * v_div / s_div
    i_div = s_div / v_div
    nodes = tuple(
        replace(n, vm_min=n.vm_min / v_div, vm_max=n.vm_max / v_div) for n in net.nodes
    )
    lines = tuple(
        replace(
            ln,
            z=tuple(tuple(zz / z_div for zz in row) for row in ln.z),
            ampacity=None if ln.ampacity is None else ln.ampacity / i_div,
        )
        for ln in net.lines
    )
    customers = tuple(
        replace(
            c,
            service_z=c.service_z / z_div,
            demand=tuple((p / s_div, q / s_div) for p, q in c.demand),
            vm_min=c.vm_min / v_div,
            vm_max=c.vm_max / v_div,
        )
        for c in net.customers
    )
    svc = net.svc
    if svc is not None:
        svc = replace(
            svc,
            s_cap=svc.s_cap / s_div,
            s_ind=svc.s_ind / s_div,
            v_rated=svc.v_rated / v_div,
        )
    horizon = replace(
        net.horizon,
        root_voltage=tuple(
            tuple(v / v_div for v in triple) for triple in net.horizon.root_voltage
        ),
    )
    return replace(
        net,
        nodes=nodes,
        lines=lines,
        customers=customers,
        svc=svc,
        horizon=horizon,
        units=units,
        nominal_vm=net.nominal_vm / v_div,
    )


def to_per_unit(raw: Network, base_kva: float, base_v: float) -> Network:
    """Convert an SI network onto the (base_kva, base_v) per-unit base."""
    if raw.units != "si":
        raise NetworkError("to_per_unit: network is already per-unit")
    if base_kva <= 0 or base_v <= 0:
        raise NetworkError("to_per_unit: bases must be positive")
    net = _scale_network(raw, base_kva * 1e3, base_v, "pu")
    return replace(net, base_kva=base_kva, base_volts=base_v)


def from_per_unit(net: Network) -> Network:
    """Invert ``to_per_unit``, restoring SI quantities."""
    if net.units != "pu":
        raise NetworkError("from_per_unit: network is not per-unit")
    s_div = 1.0 / (net.base_kva * 1e3)
    v_div = 1.0 / net.base_volts
    return _scale_network(net, s_div, v_div, "si")


# ---------------------------------------------------------------------------
# validation


def _adjacency(net: Network) -> dict:
    adj = {n.id: [] for n in net.nodes}
    for ln in net.lines:
        if ln.from_node in adj and ln.to_node in adj:
            adj[ln.from_node].append(ln.to_node)
            adj[ln.to_node].append(ln.from_node)
    return adj


def validate(net: Network) -> ValidationReport:
    """Collect structural and numeric findings; empty findings means valid."""
    out = []
    ids = [n.id for n in net.nodes]
    seen = set()
    for nid in ids:
        if nid in seen:
            out.append(f"node {nid!r}: duplicate id")
        seen.add(nid)

    roots = [n.id for n in net.nodes if n.is_root]
    secs = [n.id for n in net.nodes if n.is_secondary]
    if len(roots) != 1:
        out.append(f"nodes: expected exactly one root, found {roots or 'none'}")
    if len(secs) != 1:
        out.append(f"nodes: expected exactly one secondary, found {secs or 'none'}")

    for n in net.nodes:
        if not (0.0 < n.vm_min < n.vm_max):
            out.append(f"node {n.id!r}: voltage bounds must satisfy 0 < vmin < vmax")

    node_set = set(ids)
    for i, ln in enumerate(net.lines):
        tag = f"line {ln.from_node!r}->{ln.to_node!r}"
        if ln.from_node not in node_set or ln.to_node not in node_set:
            out.append(f"{tag}: endpoint is not a declared node")
            continue
        if ln.from_node == ln.to_node:
            out.append(f"{tag}: self loop")
        for r in range(3):
            for c in range(r + 1, 3):
                if abs(ln.z[r][c] - ln.z[c][r]) > 1e-9 * max(1.0, abs(ln.z[r][c])):
                    out.append(f"{tag}: impedance matrix is not symmetric")
                    break
        if ln.ampacity is not None and ln.ampacity <= 0:
            out.append(f"{tag}: ampacity must be positive")

    # radial: a spanning tree over all declared nodes
    if len(net.lines) != len(net.nodes) - 1:
        out.append(
            f"topology: {len(net.lines)} branches for {len(net.nodes)} nodes, not a tree"
        )
    if net.nodes:
        adj = _adjacency(net)
        start = net.nodes[0].id
        stack, reach = [start], {start}
        while stack:
            for m in adj[stack.pop()]:
                if m not in reach:
                    reach.add(m)
                    stack.append(m)
        missing = sorted(node_set - reach)
        if missing:
            out.append(f"topology: nodes unreachable from {start!r}: {missing}")

    if len(roots) == 1 and len(secs) == 1:
        dt = [
            ln
            for ln in net.lines
            if {ln.from_node, ln.to_node} == {roots[0], secs[0]}
        ]
        if len(dt) != 1:
            out.append(
                f"topology: root {roots[0]!r} and secondary {secs[0]!r} must share exactly one branch"
            )

    T = net.horizon.T
    for c in net.customers:
        tag = f"customer {c.cid}"
        if c.node not in node_set:
            out.append(f"{tag}: unknown node {c.node!r}")
        if c.kind not in CUSTOMER_KINDS:
            out.append(f"{tag}: kind must be one of {CUSTOMER_KINDS}")
        if c.initial_phase not in PHASES:
            out.append(f"{tag}: initial_phase must be one of {PHASES}")
        if len(c.demand) != T:
            out.append(f"{tag}: demand has {len(c.demand)} periods, horizon has {T}")
        if not (0.0 < c.vm_min < c.vm_max):
            out.append(f"{tag}: voltage bounds must satisfy 0 < vmin < vmax")

    hor = net.horizon
    if hor.periods != tuple(range(1, T + 1)):
        out.append("horizon: periods must be 1..T")
    flat = tuple(t for sub in hor.subsets for t in sub)
    if flat != hor.periods:
        out.append("horizon: subsets must partition 1..T contiguously in order")
    sizes = {len(sub) for sub in hor.subsets}
    if sizes and max(sizes) - min(sizes) > 1:
        out.append("horizon: subset sizes must differ by at most one")
    if len(hor.subsets) != hor.n_o:
        out.append(f"horizon: n_o={hor.n_o} but {len(hor.subsets)} subsets")
    if len(hor.root_voltage) != T:
        out.append("horizon: root_voltage must have one triple per period")
    elif len(roots) == 1:
        rn = net.node(roots[0])
        for t, triple in enumerate(hor.root_voltage):
            for p, v in zip(PHASES, triple):
                vm = abs(v)
                if not (rn.vm_min - 1e-9 <= vm <= rn.vm_max + 1e-9):
                    out.append(
                        f"horizon: root voltage phase {p} period {t + 1} magnitude "
                        f"{vm:.6g} outside [{rn.vm_min:.6g}, {rn.vm_max:.6g}]"
                    )
                    break

    if net.svc is not None:
        s = net.svc
        if s.node not in node_set:
            out.append(f"svc: unknown node {s.node!r}")
        elif len(secs) == 1 and s.node != secs[0]:
            out.append(f"svc: must sit at the secondary bus {secs[0]!r}, not {s.node!r}")
        if s.s_cap < 0 or s.s_ind < 0:
            out.append("svc: capacities must be nonnegative")
        if s.v_rated <= 0:
            out.append("svc: v_rated must be positive")

    if not (0.0 < net.nu_neg < 1.0):
        out.append("limits: nu_neg must lie in (0, 1)")
    if not (0.0 < net.nu_zero < 1.0):
        out.append("limits: nu_zero must lie in (0, 1)")

    return ValidationReport(findings=tuple(out))


def load_network(source) -> Network:
    """Load, per-unit and validate a network document.

    ``source`` may be a dict, a JSON string or a path to a JSON file.
    Raises SchemaError/TopologyError naming the offending element.
    """
    if isinstance(source, dict):
        doc = source
    elif isinstance(source, (str, Path)):
        text = str(source)
        # inline JSON always starts with an object brace; anything else is a path
        if text.lstrip().startswith("{"):
            doc = json.loads(text)
        else:
            doc = json.loads(Path(text).read_text())
    else:
        raise SchemaError(f"load_network: unsupported source {type(source).__name__}")

    raw = parse_document(doc)
    net = to_per_unit(raw, raw.base_kva, raw.base_volts)
    report = validate(net)
    if not report.ok:
        msg = "; ".join(report.findings)
        if any(f.startswith("topology") for f in report.findings):
            raise TopologyError(msg)
        raise SchemaError(msg)
    return net
