"""Assembly of one reconfiguration-window subproblem as a MISOCP.

One subproblem covers a contiguous set of periods T_k during which phase
assignments are frozen: a single block of per-customer binaries is shared
by every period in the window, while compensator mode binaries stay
per-period.  All feeder physics enters as linear rows (complex equations
split into real/imaginary pairs), and every norm bound becomes a
second-order cone over linear member expressions, so the result is a
standard mixed-integer SOCP independent of any particular solver.

Lowering to the solver's matrix form lives in ``to_cone_program``; the
reverse mapping from a solution vector to electrical quantities is
``extract_solution``.
"""

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import sparse as sp

from . import conesolver, linearize, netmodel

PAIRS = ("ab", "bc", "ca")

_INT_TOL = 1e-6


@dataclass(frozen=True)
class StrategyFlags:
    """Which control layers participate: compensator (SVC), switching (PSD)."""

    use_svc: bool
    use_psd: bool


STRATEGIES = {
    1: StrategyFlags(use_svc=False, use_psd=False),
    2: StrategyFlags(use_svc=True, use_psd=False),
    3: StrategyFlags(use_svc=False, use_psd=True),
    4: StrategyFlags(use_svc=True, use_psd=True),
}


class VarSpace:
    """Dense name -> index registry for model variables."""

    def __init__(self):
        self._names = []
        self._index = {}

    def add(self, name: str) -> int:
        if name in self._index:
            raise ValueError(f"variable {name!r} already defined")
        j = len(self._names)
        self._names.append(name)
        self._index[name] = j
        return j

    def index(self, name: str) -> int:
        return self._index[name]

    def __contains__(self, name: str) -> bool:
        return name in self._index

    def name(self, j: int) -> str:
        return self._names[j]

    def __len__(self) -> int:
        return len(self._names)


@dataclass(frozen=True)
class LinearRow:
    idx: tuple
    coef: tuple
    sense: str  # "==" or "<="
    rhs: float
    tag: str


@dataclass(frozen=True)
class Cone:
    """sqrt(sum of member expressions squared) <= bound expression."""

    bound: tuple  # (idx, coef, const)
    members: tuple  # of (idx, coef, const)
    tag: str


@dataclass(frozen=True)
class ProductGroup:
    """z = binary * y for an affine y with known range [lo, hi]."""

    binary: int
    y: tuple  # (idx, coef, const)
    z: int
    lo: float
    hi: float
    tag: str


@dataclass
class MISOCPModel:
    var_space: VarSpace
    rows: list = field(default_factory=list)
    cones: list = field(default_factory=list)
    products: list = field(default_factory=list)
    binaries: list = field(default_factory=list)
    alpha_groups: list = field(default_factory=list)  # (cid, (ja, jb, jc))
    kappa_vars: list = field(default_factory=list)
    relax_exact: frozenset = frozenset()  # binaries whose box relaxation is exact
    objective: dict = field(default_factory=dict)  # var index -> coefficient
    window: int = 0
    periods: tuple = ()
    strategy: StrategyFlags = STRATEGIES[1]
    net: object = None
    fits: object = None

    @property
    def n(self) -> int:
        return len(self.var_space)


@dataclass
class DispatchSolution:
    """Electrical reading of one solved window."""

    window: int
    periods: tuple
    strategy: StrategyFlags
    objective: float
    assignment: dict  # cid -> phase
    z_neg: dict  # t -> value
    z_zero: dict
    node_voltages: dict  # (node, phase, t) -> complex
    line_currents: dict  # (from, to, phase, t) -> complex
    customer_currents: dict  # (cid, t) -> complex
    customer_voltages: dict  # (cid, t) -> complex terminal voltage
    svc_currents: dict  # (pair, t) -> complex branch current
    svc_modes: dict  # (pair, t) -> 0 inductive / 1 capacitive
    svc_mags: dict  # (pair, t) -> |I|


@dataclass(frozen=True)
class RegionFit:
    """Per-(phase, vm range) linearization data used while building rows."""

    region: linearize.VoltageRegion
    fit: linearize.InvConjFit
    cut: tuple  # (cos d, sin d, vm_min)
    x_bounds: linearize.ProductBounds
    y_bounds: linearize.ProductBounds


class _Aff(dict):
    """Mutable affine expression: {index: coef} plus a constant."""

    def __init__(self):
        super().__init__()
        self.const = 0.0

    def term(self, j: int, v: float):
        if v != 0.0:
            self[j] = self.get(j, 0.0) + v
        return self

    def add_const(self, v: float):
        self.const += v
        return self

    def materialize(self) -> tuple:
        items = sorted(self.items())
        return (
            tuple(j for j, _ in items),
            tuple(v for _, v in items),
            self.const,
        )


def _expr(*pairs, const=0.0):
    a = _Aff()
    for j, v in pairs:
        a.term(j, v)
    a.const = const
    return a


def pair_angles(root_voltage) -> dict:
    """Phase-pair angles beta of V_phi - V_psi for one period's root voltage."""
    v = {"a": root_voltage[0], "b": root_voltage[1], "c": root_voltage[2]}
    return {
        (p, q): math.atan2((v[p] - v[q]).imag, (v[p] - v[q]).real) for p, q in PAIRS
    }


def build_fits(
    net: netmodel.Network,
    half_width: float = linearize.DEFAULT_HALF_WIDTH,
    grid: int = linearize.DEFAULT_GRID,
) -> dict:
    """Region fits keyed by (phase, vm_min, vm_max) for every customer range."""
    out = {}
    ranges = sorted({(c.vm_min, c.vm_max) for c in net.customers})
    for lo, hi in ranges:
        regions = linearize.phase_regions(lo, hi, half_width=half_width)
        for ph, region in regions.items():
            samples = linearize.sample_region(region, grid, grid)
            fit = linearize.fit_inverse_conjugate(samples)
            xb, yb = linearize.region_xy_bounds(region)
            out[(ph, lo, hi)] = RegionFit(
                region=region,
                fit=fit,
                cut=linearize.lower_vm_cut(region, lo),
                x_bounds=xb,
                y_bounds=yb,
            )
    return out


# ---------------------------------------------------------------------------
# model assembly


def _row(model, aff: _Aff, sense: str, tag: str):
    idx, coef, const = aff.materialize()
    model.rows.append(LinearRow(idx=idx, coef=coef, sense=sense, rhs=-const, tag=tag))


def _cone(model, bound: _Aff, members, tag: str):
    model.cones.append(
        Cone(
            bound=bound.materialize(),
            members=tuple(m.materialize() for m in members),
            tag=tag,
        )
    )


def _product(model, binary: int, y: _Aff, z: int, bounds, tag: str):
    model.products.append(
        ProductGroup(
            binary=binary, y=y.materialize(), z=z, lo=bounds.y_min, hi=bounds.y_max, tag=tag
        )
    )


def _node_v(model, nid: str, ph: str, t: int) -> tuple:
    vs = model.var_space
    return vs.index(f"vx[{nid},{ph},{t}]"), vs.index(f"vy[{nid},{ph},{t}]")


def _line_i(model, ln, ph: str, t: int) -> tuple:
    vs = model.var_space
    key = f"{ln.from_node}>{ln.to_node}"
    return vs.index(f"ilr[{key},{ph},{t}]"), vs.index(f"ili[{key},{ph},{t}]")


def _cust_fit(model, cust, ph: str) -> RegionFit:
    return model.fits[(ph, cust.vm_min, cust.vm_max)]


def _alpha_index(model, cust, ph: str):
    return model.var_space.index(f"assign[{cust.cid},{ph}]")


def _is_adjustable(model, cust) -> bool:
    return model.strategy.use_psd and cust.adjustable


def add_feeder(model: MISOCPModel, net: netmodel.Network, t: int, fits: dict):
    """Physics rows for period t: line Ohm's law, KCL, customer balance."""
    vs = model.var_space
    if model.fits is None:
        model.fits = fits
    if model.net is None:
        model.net = net

    for n in net.nodes:
        for ph in netmodel.PHASES:
            vs.add(f"vx[{n.id},{ph},{t}]")
            vs.add(f"vy[{n.id},{ph},{t}]")
    for ln in net.lines:
        for ph in netmodel.PHASES:
            key = f"{ln.from_node}>{ln.to_node}"
            vs.add(f"ilr[{key},{ph},{t}]")
            vs.add(f"ili[{key},{ph},{t}]")

    # line voltage drop, 3x3 coupled: V_to = V_from - Z I
    for ln in net.lines:
        for p, ph in enumerate(netmodel.PHASES):
            fx, fy = _node_v(model, ln.from_node, ph, t)
            tx, ty = _node_v(model, ln.to_node, ph, t)
            re = _expr((tx, 1.0), (fx, -1.0))
            im = _expr((ty, 1.0), (fy, -1.0))
            for q, qh in enumerate(netmodel.PHASES):
                ir, ii = _line_i(model, ln, qh, t)
                z = ln.z_at(p, q)
                re.term(ir, z.real).term(ii, -z.imag)
                im.term(ir, z.imag).term(ii, z.real)
            key = f"{ln.from_node}>{ln.to_node}"
            _row(model, re, "==", f"ohm_re[{key},{ph},{t}]")
            _row(model, im, "==", f"ohm_im[{key},{ph},{t}]")

    # customer variables and balance rows
    for cust in net.customers:
        _add_customer(model, net, cust, t)

    # nodal current balance: inflow = outflow + load draw (+ SVC draw)
    for n in net.nodes:
        if n.is_root:
            continue  # slack bus, current defined by the DT branch
        parents = [ln for ln in net.lines if ln.to_node == n.id]
        children = [ln for ln in net.lines if ln.from_node == n.id]
        for ph in netmodel.PHASES:
            re, im = _Aff(), _Aff()
            for ln in parents:
                ir, ii = _line_i(model, ln, ph, t)
                re.term(ir, 1.0)
                im.term(ii, 1.0)
            for ln in children:
                ir, ii = _line_i(model, ln, ph, t)
                re.term(ir, -1.0)
                im.term(ii, -1.0)
            for cust in net.customers_at(n.id):
                cr, ci = _customer_phase_current(model, cust, ph, t)
                if cr is not None:
                    re.term(cr, -1.0)
                    im.term(ci, -1.0)
            if model.strategy.use_svc and net.svc is not None and n.id == net.svc.node:
                for jr, vcoef in _svc_phase_draw(model, ph, t, part="re"):
                    re.term(jr, -vcoef)
                for ji, vcoef in _svc_phase_draw(model, ph, t, part="im"):
                    im.term(ji, -vcoef)
            _row(model, re, "==", f"kcl_re[{n.id},{ph},{t}]")
            _row(model, im, "==", f"kcl_im[{n.id},{ph},{t}]")


def _customer_phase_current(model, cust, ph: str, t: int):
    """Variable indices of the customer's draw on phase ph, or None."""
    vs = model.var_space
    if _is_adjustable(model, cust):
        return (
            vs.index(f"ipr[{cust.cid},{ph},{t}]"),
            vs.index(f"ipi[{cust.cid},{ph},{t}]"),
        )
    if ph == cust.initial_phase:
        return vs.index(f"icr[{cust.cid},{t}]"), vs.index(f"ici[{cust.cid},{t}]")
    return None, None


def _svc_phase_draw(model, ph: str, t: int, part: str):
    """Terms of the phase draw I_phase = I_xy - I_zx over pair current vars."""
    vs = model.var_space
    terms = []
    for p, q in PAIRS:
        j = vs.index(f"sv{'r' if part == 're' else 'i'}[{p}{q},{t}]")
        if p == ph:
            terms.append((j, 1.0))
        elif q == ph:
            terms.append((j, -1.0))
    return terms


def _add_customer(model: MISOCPModel, net, cust, t: int):
    vs = model.var_space
    p_t, q_t = cust.demand[t - 1]
    zs = cust.service_z

    icr = vs.add(f"icr[{cust.cid},{t}]")
    ici = vs.add(f"ici[{cust.cid},{t}]")
    ux = vs.add(f"ux[{cust.cid},{t}]")
    uy = vs.add(f"uy[{cust.cid},{t}]")
    vcx = vs.add(f"vcx[{cust.cid},{t}]")
    vcy = vs.add(f"vcy[{cust.cid},{t}]")

    # service-line drop: V = U - z_s I
    _row(
        model,
        _expr((vcx, 1.0), (ux, -1.0), (icr, zs.real), (ici, -zs.imag)),
        "==",
        f"service_re[{cust.cid},{t}]",
    )
    _row(
        model,
        _expr((vcy, 1.0), (uy, -1.0), (icr, zs.imag), (ici, zs.real)),
        "==",
        f"service_im[{cust.cid},{t}]",
    )

    if not _is_adjustable(model, cust):
        ph = cust.initial_phase
        nx, ny = _node_v(model, cust.node, ph, t)
        _row(model, _expr((ux, 1.0), (nx, -1.0)), "==", f"head_re[{cust.cid},{t}]")
        _row(model, _expr((uy, 1.0), (ny, -1.0)), "==", f"head_im[{cust.cid},{t}]")
        rf = _cust_fit(model, cust, ph)
        _power_balance_rows(model, cust, t, p_t, q_t, icr, ici, [(None, rf, vcx, vcy)])
        _terminal_region_rows(model, cust, t, rf, vcx, vcy, gate=None)
        return

    # adjustable: per-phase current products, head-voltage selection, and
    # fit coefficients switched by the assignment binaries
    icap = max(math.hypot(p, q) for p, q in cust.demand) / cust.vm_min
    ibounds = linearize.ProductBounds(-icap, icap) if icap > 0 else None
    node = net.node(cust.node)
    phase_data = []
    sel_x = _expr((ux, 1.0))
    sel_y = _expr((uy, 1.0))
    for ph in netmodel.PHASES:
        al = _alpha_index(model, cust, ph)
        rf = _cust_fit(model, cust, ph)
        ipr = vs.add(f"ipr[{cust.cid},{ph},{t}]")
        ipi = vs.add(f"ipi[{cust.cid},{ph},{t}]")
        if ibounds is None:
            _row(model, _expr((ipr, 1.0)), "==", f"iphase_re0[{cust.cid},{ph},{t}]")
            _row(model, _expr((ipi, 1.0)), "==", f"iphase_im0[{cust.cid},{ph},{t}]")
        else:
            _product(
                model, al, _expr((icr, 1.0)), ipr, ibounds, f"ipr[{cust.cid},{ph},{t}]"
            )
            _product(
                model, al, _expr((ici, 1.0)), ipi, ibounds, f"ipi[{cust.cid},{ph},{t}]"
            )

        zcx = vs.add(f"zcx[{cust.cid},{ph},{t}]")
        zcy = vs.add(f"zcy[{cust.cid},{ph},{t}]")
        vb = linearize.ProductBounds(-cust.vm_max, cust.vm_max)
        _product(model, al, _expr((vcx, 1.0)), zcx, vb, f"zcx[{cust.cid},{ph},{t}]")
        _product(model, al, _expr((vcy, 1.0)), zcy, vb, f"zcy[{cust.cid},{ph},{t}]")

        zdx = vs.add(f"zdx[{cust.cid},{ph},{t}]")
        zdy = vs.add(f"zdy[{cust.cid},{ph},{t}]")
        nx, ny = _node_v(model, cust.node, ph, t)
        nb = linearize.ProductBounds(-node.vm_max, node.vm_max)
        _product(model, al, _expr((nx, 1.0)), zdx, nb, f"zdx[{cust.cid},{ph},{t}]")
        _product(model, al, _expr((ny, 1.0)), zdy, nb, f"zdy[{cust.cid},{ph},{t}]")
        sel_x.term(zdx, -1.0)
        sel_y.term(zdy, -1.0)

        phase_data.append((al, rf, zcx, zcy))
        _terminal_region_rows(model, cust, t, rf, zcx, zcy, gate=al, suffix=ph)
        # selected head voltage also honors the customer's lower limit
        cd, sd, vm = rf.cut
        _row(
            model,
            _expr((zdx, -cd), (zdy, -sd), (al, vm)),
            "<=",
            f"head_cut[{cust.cid},{ph},{t}]",
        )

    _row(model, sel_x, "==", f"select_re[{cust.cid},{t}]")
    _row(model, sel_y, "==", f"select_im[{cust.cid},{t}]")
    _power_balance_rows(model, cust, t, p_t, q_t, icr, ici, phase_data)


def _power_balance_rows(model, cust, t, p_t, q_t, icr, ici, phase_data):
    """Linearized constant-power draw, coefficients gated by assignment.

    phase_data entries are (gate, fit, x_index, y_index); gate None means
    the term is unconditional (fixed customer) and the fit offsets land in
    the row constant instead of multiplying a binary.
    """
    re = _expr((icr, 1.0))
    im = _expr((ici, 1.0))
    for gate, rf, jx, jy in phase_data:
        f = rf.fit
        re.term(jx, -(p_t * f.kx + q_t * f.hx))
        re.term(jy, -(p_t * f.ky + q_t * f.hy))
        im.term(jx, -(p_t * f.hx - q_t * f.kx))
        im.term(jy, -(p_t * f.hy - q_t * f.ky))
        off_re = p_t * f.bx + q_t * f.by
        off_im = p_t * f.by - q_t * f.bx
        if gate is None:
            re.add_const(-off_re)
            im.add_const(-off_im)
        else:
            re.term(gate, -off_re)
            im.term(gate, -off_im)
    _row(model, re, "==", f"power_re[{cust.cid},{t}]")
    _row(model, im, "==", f"power_im[{cust.cid},{t}]")


def _terminal_region_rows(model, cust, t, rf, jx, jy, gate, suffix=""):
    """Keep the (possibly gated) terminal voltage inside the fit region.

    Lower magnitude via the supporting half-plane; the angular sector via
    two half-planes around the region centre.  With a gate binary the rows
    collapse to 0 <= 0 when the phase is not selected.
    """
    cd, sd, vm = rf.cut
    tag = f"[{cust.cid}{',' + suffix if suffix else ''},{t}]"
    cut = _expr((jx, -cd), (jy, -sd))
    if gate is None:
        cut.add_const(vm)
    else:
        cut.term(gate, vm)
    _row(model, cut, "<=", f"vm_cut{tag}")

    tanw = math.tan(rf.region.half_width)
    d = rf.region.center_angle
    # |(-sin d) X + (cos d) Y| <= tan(w) ((cos d) X + (sin d) Y)
    perp = ((-math.sin(d), math.cos(d)), (math.sin(d), -math.cos(d)))
    for k, (ax, ay) in enumerate(perp):
        row = _expr(
            (jx, ax - tanw * math.cos(d)),
            (jy, ay - tanw * math.sin(d)),
        )
        _row(model, row, "<=", f"sector{k}{tag}")


def add_svc(model: MISOCPModel, net: netmodel.Network, t: int):
    """Compensator rows for period t: delta branch currents at fixed angles."""
    if net.svc is None:
        raise ValueError("add_svc: network has no compensator specification")
    vs = model.var_space
    svc = net.svc
    betas = pair_angles(net.horizon.root_voltage[t - 1])
    imax_cap = svc.s_cap / (3.0 * svc.v_rated)
    imax_ind = svc.s_ind / (3.0 * svc.v_rated)
    imax_hi = max(imax_cap, imax_ind)

    for p, q in PAIRS:
        pair = f"{p}{q}"
        mag = vs.add(f"svmag[{pair},{t}]")
        w = vs.add(f"svw[{pair},{t}]")
        jr = vs.add(f"svr[{pair},{t}]")
        ji = vs.add(f"svi[{pair},{t}]")
        kap = vs.index(f"svmode[{pair},{t}]")
        beta = betas[(p, q)]

        # rectangular parts at the frozen angle; w = kappa * mag flips the
        # direction between inductive (kappa 0) and capacitive (kappa 1)
        sb, cb = math.sin(beta), math.cos(beta)
        _row(
            model,
            _expr((jr, 1.0), (mag, -sb), (w, 2.0 * sb)),
            "==",
            f"svc_re[{pair},{t}]",
        )
        _row(
            model,
            _expr((ji, 1.0), (mag, cb), (w, -2.0 * cb)),
            "==",
            f"svc_im[{pair},{t}]",
        )
        if imax_hi > 0:
            _product(
                model,
                kap,
                _expr((mag, 1.0)),
                w,
                linearize.ProductBounds(0.0, imax_hi),
                f"svw[{pair},{t}]",
            )
        else:
            _row(model, _expr((w, 1.0)), "==", f"svc_w0[{pair},{t}]")
            _row(model, _expr((mag, 1.0)), "==", f"svc_m0[{pair},{t}]")

        _row(model, _expr((mag, -1.0)), "<=", f"svc_nonneg[{pair},{t}]")
        # capacity depends on mode: mag <= imax_ind + kappa (imax_cap - imax_ind)
        _row(
            model,
            _expr((mag, 1.0), (kap, imax_ind - imax_cap), const=-imax_ind),
            "<=",
            f"svc_cap[{pair},{t}]",
        )


def add_limits(model: MISOCPModel, net: netmodel.Network, t: int):
    """Voltage-quality rows for period t: root pin, magnitude, unbalance."""
    vs = model.var_space
    root = net.root()
    v0 = net.horizon.root_voltage[t - 1]
    for p, ph in enumerate(netmodel.PHASES):
        jx, jy = _node_v(model, root.id, ph, t)
        _row(model, _expr((jx, 1.0), const=-v0[p].real), "==", f"root_re[{ph},{t}]")
        _row(model, _expr((jy, 1.0), const=-v0[p].imag), "==", f"root_im[{ph},{t}]")

    vnom = net.nominal_vm
    for n in net.nodes:
        for ph in netmodel.PHASES:
            jx, jy = _node_v(model, n.id, ph, t)
            _cone(
                model,
                _expr(const=n.vm_max),
                [_expr((jx, 1.0)), _expr((jy, 1.0))],
                f"vmax[{n.id},{ph},{t}]",
            )
            if not n.is_root:
                d = linearize.DEFAULT_CENTERS[ph]
                _row(
                    model,
                    _expr((jx, -math.cos(d)), (jy, -math.sin(d)), const=n.vm_min),
                    "<=",
                    f"vmin[{n.id},{ph},{t}]",
                )

        # sequence voltages and their unbalance disks
        ar, ai = _node_v(model, n.id, "a", t)
        br, bi = _node_v(model, n.id, "b", t)
        cr, ci = _node_v(model, n.id, "c", t)
        defs = _sequence_defs(ar, ai, br, bi, cr, ci)
        names = ("vnegr", "vnegi", "vzerr", "vzeri")
        seq_idx = []
        for name, expr_terms in zip(names, defs):
            j = vs.add(f"{name}[{n.id},{t}]")
            seq_idx.append(j)
            row = _expr((j, 1.0))
            for jj, vv in expr_terms:
                row.term(jj, -vv)
            _row(model, row, "==", f"{name}_def[{n.id},{t}]")
        _cone(
            model,
            _expr(const=net.nu_neg * vnom),
            [_expr((seq_idx[0], 1.0)), _expr((seq_idx[1], 1.0))],
            f"nsv[{n.id},{t}]",
        )
        _cone(
            model,
            _expr(const=net.nu_zero * vnom),
            [_expr((seq_idx[2], 1.0)), _expr((seq_idx[3], 1.0))],
            f"zsv[{n.id},{t}]",
        )

    for ln in net.lines:
        if ln.ampacity is None:
            continue
        key = f"{ln.from_node}>{ln.to_node}"
        for ph in netmodel.PHASES:
            ir, ii = _line_i(model, ln, ph, t)
            _cone(
                model,
                _expr(const=ln.ampacity),
                [_expr((ir, 1.0)), _expr((ii, 1.0))],
                f"ampacity[{key},{ph},{t}]",
            )

    # customer terminal magnitude ceiling (lower bound handled per phase)
    for cust in net.customers:
        jx = vs.index(f"vcx[{cust.cid},{t}]")
        jy = vs.index(f"vcy[{cust.cid},{t}]")
        _cone(
            model,
            _expr(const=cust.vm_max),
            [_expr((jx, 1.0)), _expr((jy, 1.0))],
            f"cust_vmax[{cust.cid},{t}]",
        )


def _sequence_defs(ar, ai, br, bi, cr, ci):
    """Coefficient lists for Re/Im of negative and zero sequence parts.

    negative: (2 a - (1 + j sqrt3) b - (1 - j sqrt3) c) / 6
    zero: (a + b + c) / 3
    """
    s3 = math.sqrt(3.0)
    neg_re = [(ar, 2.0 / 6.0), (br, -1.0 / 6.0), (bi, s3 / 6.0), (cr, -1.0 / 6.0), (ci, -s3 / 6.0)]
    neg_im = [(ai, 2.0 / 6.0), (br, -s3 / 6.0), (bi, -1.0 / 6.0), (cr, s3 / 6.0), (ci, -1.0 / 6.0)]
    zer_re = [(ar, 1.0 / 3.0), (br, 1.0 / 3.0), (cr, 1.0 / 3.0)]
    zer_im = [(ai, 1.0 / 3.0), (bi, 1.0 / 3.0), (ci, 1.0 / 3.0)]
    return neg_re, neg_im, zer_re, zer_im


def add_objective(model: MISOCPModel, net: netmodel.Network, t: int):
    """Epigraph of the DT current unbalance for period t."""
    vs = model.var_space
    dt = net.dt_line()
    ar, ai = _line_i(model, dt, "a", t)
    br, bi = _line_i(model, dt, "b", t)
    cr, ci = _line_i(model, dt, "c", t)
    defs = _sequence_defs(ar, ai, br, bi, cr, ci)
    names = ("inegr", "inegi", "izerr", "izeri")
    idx = []
    for name, terms in zip(names, defs):
        j = vs.add(f"{name}[{t}]")
        idx.append(j)
        row = _expr((j, 1.0))
        for jj, vv in terms:
            row.term(jj, -vv)
        _row(model, row, "==", f"{name}_def[{t}]")
    zn = vs.add(f"zneg[{t}]")
    zz = vs.add(f"zzer[{t}]")
    _cone(model, _expr((zn, 1.0)), [_expr((idx[0], 1.0)), _expr((idx[1], 1.0))], f"obj_neg[{t}]")
    _cone(model, _expr((zz, 1.0)), [_expr((idx[2], 1.0)), _expr((idx[3], 1.0))], f"obj_zero[{t}]")
    model.objective[zn] = model.objective.get(zn, 0.0) + 1.0
    model.objective[zz] = model.objective.get(zz, 0.0) + 1.0


def build_subproblem(
    net: netmodel.Network,
    k: int,
    strategy,
    fits: dict | None = None,
) -> MISOCPModel:
    """Assemble the window-k subproblem under the given strategy.

    Assignment binaries are created once and shared by every period in the
    window; compensator mode binaries are per period.  ``strategy`` may be
    a StrategyFlags or a number 1..4.
    """
    if isinstance(strategy, int):
        strategy = STRATEGIES[strategy]
    subsets = net.horizon.subsets
    if not (0 <= k < len(subsets)):
        raise ValueError(f"window index {k} out of range for {len(subsets)} subsets")
    periods = tuple(subsets[k])
    if not periods:
        raise ValueError(f"window {k} is empty")
    if strategy.use_svc and net.svc is None:
        raise ValueError("strategy requires a compensator but the network has none")
    if fits is None:
        fits = build_fits(net)

    model = MISOCPModel(
        var_space=VarSpace(),
        window=k,
        periods=periods,
        strategy=strategy,
        net=net,
        fits=fits,
    )
    vs = model.var_space

    if strategy.use_psd:
        for cust in net.adjustable_customers():
            trio = []
            row = _Aff()
            for ph in netmodel.PHASES:
                j = vs.add(f"assign[{cust.cid},{ph}]")
                trio.append(j)
                model.binaries.append(j)
                row.term(j, 1.0)
            row.add_const(-1.0)
            _row(model, row, "==", f"one_phase[{cust.cid}]")
            model.alpha_groups.append((cust.cid, tuple(trio)))

    exact = []
    if strategy.use_svc:
        symmetric = net.svc.s_cap == net.svc.s_ind
        for t in periods:
            for p, q in PAIRS:
                j = vs.add(f"svmode[{p}{q},{t}]")
                model.binaries.append(j)
                model.kappa_vars.append(j)
                if symmetric:
                    exact.append(j)
    model.relax_exact = frozenset(exact)

    for t in periods:
        if strategy.use_svc:
            add_svc(model, net, t)
        add_feeder(model, net, t, fits)
        add_limits(model, net, t)
        add_objective(model, net, t)
    return model


# ---------------------------------------------------------------------------
# lowering to the solver's standard form


@dataclass
class ConeMap:
    """Bookkeeping from model variables to the emitted cone program."""

    n: int
    var_names: tuple
    fixed: dict
    eq_tags: tuple
    ineq_tags: tuple
    cone_tags: tuple

    def value_of(self, x, name: str) -> float:
        return float(x[self.var_names.index(name)])


def to_cone_program(model: MISOCPModel, fixed: dict | None = None):
    """Lower the model to standard cone form.

    ``fixed`` maps binary indices to 0/1 values: fixed binaries are pinned
    with equality rows and their product envelopes collapse to exact
    equalities so the continuous relaxation keeps a strict interior.
    """
    fixed = dict(fixed or {})
    binary_set = set(model.binaries)
    for j, v in fixed.items():
        if j not in binary_set:
            raise ValueError(f"fixed index {j} is not a binary of this model")
        if v not in (0, 1, 0.0, 1.0):
            raise ValueError(f"binary {j} fixed to non-binary value {v!r}")
    n = model.n

    eq_entries, eq_rhs, eq_tags = [], [], []
    in_entries, in_rhs, in_tags = [], [], []

    def eq_row(aff_mat, rhs_shift, tag):
        r = len(eq_rhs)
        idx, coef, const = aff_mat
        for j, v in zip(idx, coef):
            eq_entries.append((r, j, v))
        eq_rhs.append(rhs_shift - const)
        eq_tags.append(tag)

    def in_row(entries, rhs, tag):
        r = len(in_rhs)
        for j, v in entries:
            in_entries.append((r, j, v))
        in_rhs.append(rhs)
        in_tags.append(tag)

    for row in model.rows:
        if row.sense == "==":
            eq_row((row.idx, row.coef, 0.0), row.rhs, row.tag)
        else:
            in_row(list(zip(row.idx, row.coef)), row.rhs, row.tag)

    for j, v in fixed.items():
        eq_row(((j,), (1.0,), 0.0), float(v), f"pin[{model.var_space.name(j)}]")

    for g in model.products:
        yi, yc, y0 = g.y
        if g.binary in fixed:
            v = float(fixed[g.binary])
            # z - v*y = v*y0
            ent = [(g.z, 1.0)] + [(j, -v * c) for j, c in zip(yi, yc)]
            r = len(eq_rhs)
            for j, c in ent:
                eq_entries.append((r, j, c))
            eq_rhs.append(v * y0)
            eq_tags.append(f"prod_fix[{g.tag}]")
            continue
        cuts = linearize.bind_product(linearize.ProductBounds(g.lo, g.hi))
        for k_i, cut in enumerate(cuts):
            ent = [(g.binary, cut.cx), (g.z, cut.cz)]
            rhs = cut.rhs - cut.cy * y0
            ent.extend((j, cut.cy * c) for j, c in zip(yi, yc))
            in_row(ent, rhs, f"prod{k_i}[{g.tag}]")

    for j in model.binaries:
        if j in fixed:
            continue
        name = model.var_space.name(j)
        in_row([(j, -1.0)], 0.0, f"bin_lo[{name}]")
        in_row([(j, 1.0)], 1.0, f"bin_hi[{name}]")

    n_orthant = len(in_rhs)
    soc_dims = []
    cone_tags = []
    for cone in model.cones:
        dim = 1 + len(cone.members)
        soc_dims.append(dim)
        cone_tags.append(cone.tag)
        bi, bc, b0 = cone.bound
        r = len(in_rhs)
        for j, v in zip(bi, bc):
            in_entries.append((r, j, -v))
        in_rhs.append(b0)
        in_tags.append(f"cone_bound[{cone.tag}]")
        for mm in cone.members:
            mi, mc, m0 = mm
            r = len(in_rhs)
            for j, v in zip(mi, mc):
                in_entries.append((r, j, -v))
            in_rhs.append(m0)
            in_tags.append(f"cone_member[{cone.tag}]")

    def build(entries, nrows):
        if not entries:
            return sp.csc_matrix((nrows, n))
        rows, cols, data = zip(*entries)
        return sp.csc_matrix((data, (rows, cols)), shape=(nrows, n))

    c = np.zeros(n)
    for j, v in model.objective.items():
        c[j] = v

    prob = conesolver.StandardConeProblem(
        c=c,
        A=build(eq_entries, len(eq_rhs)),
        b=np.asarray(eq_rhs),
        G=build(in_entries, len(in_rhs)),
        h=np.asarray(in_rhs),
        n_orthant=n_orthant,
        soc_dims=tuple(soc_dims),
    )
    cmap = ConeMap(
        n=n,
        var_names=tuple(model.var_space._names),
        fixed=fixed,
        eq_tags=tuple(eq_tags),
        ineq_tags=tuple(in_tags),
        cone_tags=tuple(cone_tags),
    )
    return prob, cmap


def dump_model(model: MISOCPModel, fixed: dict | None = None) -> str:
    """Render the lowered cone program in the text interchange format."""
    prob, _ = to_cone_program(model, fixed)
    return conesolver.dump_problem(prob)


# ---------------------------------------------------------------------------
# solution extraction


def extract_solution(model: MISOCPModel, raw) -> DispatchSolution:
    """Read a solution vector back into electrical quantities.

    Assignment binaries must be integral within 1e-6 and each customer
    must select exactly one phase after rounding.
    """
    x = np.asarray(raw, dtype=float).ravel()
    if x.shape[0] != model.n:
        raise ValueError(f"solution length {x.shape[0]} != variable count {model.n}")
    vs = model.var_space

    for j in model.binaries:
        if min(abs(x[j]), abs(x[j] - 1.0)) > _INT_TOL:
            raise ValueError(
                f"binary {vs.name(j)} fractional in solution: {x[j]!r}"
            )

    assignment = {}
    for cust in model.net.customers:
        if model.strategy.use_psd and cust.adjustable:
            trio = [(ph, x[_alpha_index(model, cust, ph)]) for ph in netmodel.PHASES]
            chosen = [ph for ph, v in trio if v > 0.5]
            if len(chosen) != 1:
                raise ValueError(
                    f"customer {cust.cid}: rounded assignment selects {len(chosen)} phases"
                )
            assignment[cust.cid] = chosen[0]
        else:
            assignment[cust.cid] = cust.initial_phase

    def val(name):
        return float(x[vs.index(name)])

    node_voltages = {}
    line_currents = {}
    customer_currents = {}
    customer_voltages = {}
    svc_currents = {}
    svc_modes = {}
    svc_mags = {}
    z_neg, z_zero = {}, {}
    for t in model.periods:
        for n in model.net.nodes:
            for ph in netmodel.PHASES:
                node_voltages[(n.id, ph, t)] = complex(
                    val(f"vx[{n.id},{ph},{t}]"), val(f"vy[{n.id},{ph},{t}]")
                )
        for ln in model.net.lines:
            key = f"{ln.from_node}>{ln.to_node}"
            for ph in netmodel.PHASES:
                line_currents[(ln.from_node, ln.to_node, ph, t)] = complex(
                    val(f"ilr[{key},{ph},{t}]"), val(f"ili[{key},{ph},{t}]")
                )
        for cust in model.net.customers:
            customer_currents[(cust.cid, t)] = complex(
                val(f"icr[{cust.cid},{t}]"), val(f"ici[{cust.cid},{t}]")
            )
            customer_voltages[(cust.cid, t)] = complex(
                val(f"vcx[{cust.cid},{t}]"), val(f"vcy[{cust.cid},{t}]")
            )
        if model.strategy.use_svc and model.net.svc is not None:
            for p, q in PAIRS:
                pair = f"{p}{q}"
                svc_currents[(pair, t)] = complex(
                    val(f"svr[{pair},{t}]"), val(f"svi[{pair},{t}]")
                )
                svc_modes[(pair, t)] = int(round(val(f"svmode[{pair},{t}]")))
                svc_mags[(pair, t)] = val(f"svmag[{pair},{t}]")
        z_neg[t] = val(f"zneg[{t}]")
        z_zero[t] = val(f"zzer[{t}]")

    objective = float(sum(z_neg.values()) + sum(z_zero.values()))
    return DispatchSolution(
        window=model.window,
        periods=model.periods,
        strategy=model.strategy,
        objective=objective,
        assignment=assignment,
        z_neg=z_neg,
        z_zero=z_zero,
        node_voltages=node_voltages,
        line_currents=line_currents,
        customer_currents=customer_currents,
        customer_voltages=customer_voltages,
        svc_currents=svc_currents,
        svc_modes=svc_modes,
        svc_mags=svc_mags,
    )
