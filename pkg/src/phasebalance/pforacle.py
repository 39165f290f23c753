"""Exact three-phase power flow for radial feeders, used as ground truth.

A backward/forward sweep resolves the nonlinear constant-power customer
model to a fixed point: customer currents are recomputed from terminal
voltages, aggregated leaf-to-root through the 3x3 phase-impedance lines,
and voltage drops propagated root-to-leaf until the largest voltage change
falls below tolerance.  Compensator branch currents are taken as given,
never re-optimized, so the oracle grades exactly what the optimizer chose.
"""

import itertools
import math
from dataclasses import dataclass

from . import formulation, netmodel, seqcomp
from .formulation import PAIRS

SWEEP_TOL = 1e-10
MAX_SWEEPS = 200
PHASES = ("a", "b", "c")


class PowerFlowError(RuntimeError):
    """Sweep failure: divergence, voltage collapse, or guard violation."""


@dataclass(frozen=True)
class PFState:
    """Converged network state for one period.

    All quantities are per unit.  Slack dictionaries hold the margin to the
    corresponding limit (positive means satisfied).
    """

    t: int
    node_voltages: dict  # (node, phase) -> complex
    customer_voltages: dict  # cid -> complex terminal voltage
    customer_currents: dict  # cid -> complex
    customer_phases: dict  # cid -> phase actually connected
    line_currents: dict  # (from, to, phase) -> complex
    svc_phase_currents: dict  # phase -> complex draw at the compensator node
    dt_sequence: seqcomp.SequenceTriple  # of the transformer phase currents
    sweeps: int
    kcl_residual: float
    ohm_residual: float
    power_residual: float
    vm_slacks: dict  # (node, phase) -> (lower slack, upper slack)
    customer_vm_slacks: dict  # cid -> (lower slack, upper slack)
    ampacity_slacks: dict  # (from, to, phase) -> slack, only for rated lines
    sequence_slacks: dict  # node -> (nsv slack, zsv slack)

    @property
    def objective(self) -> float:
        """Unbalance cost of this period: |I neg| + |I zero| at the DT."""
        return abs(self.dt_sequence.neg) + abs(self.dt_sequence.zero)


@dataclass(frozen=True)
class ValidationMetrics:
    """Worst-case exact-model deviations for a dispatch solution."""

    objective_exact: float
    objective_model: float
    max_vm_violation: float
    max_ampacity_violation: float
    max_nsv_ratio: float
    max_zsv_ratio: float
    max_voltage_error: float  # ||V_model - V_exact||_inf over nodes, periods

    def __post_init__(self):
        for f in (
            self.objective_exact,
            self.max_vm_violation,
            self.max_ampacity_violation,
            self.max_nsv_ratio,
            self.max_zsv_ratio,
            self.max_voltage_error,
        ):
            if f < 0 or math.isnan(f):
                raise ValueError("validation metrics must be nonnegative")


def _children_map(net: netmodel.Network) -> dict:
    kids = {n.id: [] for n in net.nodes}
    for ln in net.lines:
        kids[ln.from_node].append(ln)
    return kids


def _topo_lines(net: netmodel.Network) -> list:
    """Lines ordered parent-before-child from the root."""
    kids = _children_map(net)
    out, stack = [], [net.root().id]
    while stack:
        nid = stack.pop()
        for ln in kids[nid]:
            out.append(ln)
            stack.append(ln.to_node)
    return out


def _path_impedance(net: netmodel.Network, node_id: str) -> float:
    """Sum of self-impedance magnitudes from the root to ``node_id``."""
    parent = {ln.to_node: ln for ln in net.lines}
    total, nid = 0.0, node_id
    while nid != net.root().id:
        ln = parent[nid]
        total += max(abs(ln.z_at(p, p)) for p in range(3))
        nid = ln.from_node
    return total


def full_assignment(net: netmodel.Network, assignment: dict | None) -> dict:
    """Phase per customer id, defaulting fixed customers to their own phase."""
    assignment = dict(assignment or {})
    out = {}
    for cust in net.customers:
        ph = assignment.get(cust.cid, None if cust.adjustable else cust.initial_phase)
        if ph is None:
            raise ValueError(f"assignment missing adjustable customer {cust.cid}")
        if ph not in PHASES:
            raise ValueError(f"customer {cust.cid}: unknown phase {ph!r}")
        if not cust.adjustable and ph != cust.initial_phase:
            raise ValueError(f"customer {cust.cid} has no switch; cannot move to {ph}")
        out[cust.cid] = ph
    return out


def svc_phase_draws(svc_currents: dict | None) -> dict:
    """Per-phase draw of a delta bank keyed by pair name ("ab", "bc", "ca")."""
    if svc_currents:
        branch = {pair: complex(svc_currents.get(pair, 0.0)) for pair in PAIRS}
    else:
        branch = {pair: 0j for pair in PAIRS}
    return {
        "a": branch["ab"] - branch["ca"],
        "b": branch["bc"] - branch["ab"],
        "c": branch["ca"] - branch["bc"],
    }


def _check_divergence_guard(net: netmodel.Network, t: int):
    # keeps the fixed point contractive: |S| <= vm_min^2 / (4 |Z_path|)
    for cust in net.customers:
        p, q = cust.demand[t - 1]
        s = math.hypot(p, q)
        zpath = _path_impedance(net, cust.node) + abs(cust.service_z)
        if zpath <= 0:
            continue
        if s > 0.25 * cust.vm_min * cust.vm_min / zpath:
            raise PowerFlowError(
                f"customer {cust.cid} demand {s:.4f} pu exceeds the sweep "
                f"guard {0.25 * cust.vm_min ** 2 / zpath:.4f} pu for its path"
            )


def solve_power_flow(
    net: netmodel.Network,
    assignment: dict | None,
    svc_currents: dict | None,
    t: int,
) -> PFState:
    """Sweep to the exact operating point of period ``t``.

    ``assignment`` maps customer ids to phases (fixed customers may be
    omitted); ``svc_currents`` maps pair names ("ab", "bc", "ca") to
    complex branch currents.
    """
    if not (1 <= t <= net.horizon.T):
        raise ValueError(f"period {t} outside horizon 1..{net.horizon.T}")
    phases = full_assignment(net, assignment)
    _check_divergence_guard(net, t)

    root_v = net.horizon.root_voltage[t - 1]
    vroot = {ph: complex(root_v[i]) for i, ph in enumerate(PHASES)}
    volts = {(n.id, ph): vroot[ph] for n in net.nodes for ph in PHASES}
    vterm = {c.cid: vroot[phases[c.cid]] for c in net.customers}
    icust = {c.cid: 0j for c in net.customers}

    svc_node = net.svc.node if net.svc is not None else None
    draws = svc_phase_draws(svc_currents)
    if net.svc is None and svc_currents:
        raise ValueError("svc currents supplied but the network has no compensator")

    lines = _topo_lines(net)
    order = [net.root().id] + [ln.to_node for ln in lines]
    cust_at = {nid: net.customers_at(nid) for nid in order}
    flows = {}

    converged = False
    sweeps = 0
    for sweeps in range(1, MAX_SWEEPS + 1):
        # customer currents from the latest terminal voltages
        for cust in net.customers:
            v = vterm[cust.cid]
            if v == 0:
                raise PowerFlowError(f"customer {cust.cid}: terminal voltage collapsed")
            p, q = cust.demand[t - 1]
            icust[cust.cid] = complex(p, -q) / v.conjugate()

        # backward: aggregate currents leaf to root
        inj = {}
        for nid in order:
            node_draw = {ph: 0j for ph in PHASES}
            for cust in cust_at[nid]:
                node_draw[phases[cust.cid]] += icust[cust.cid]
            if nid == svc_node:
                for ph in PHASES:
                    node_draw[ph] += draws[ph]
            inj[nid] = node_draw
        for ln in reversed(lines):
            flow = {ph: inj[ln.to_node][ph] for ph in PHASES}
            flows[(ln.from_node, ln.to_node)] = flow
            for ph in PHASES:
                inj[ln.from_node][ph] += flow[ph]

        # forward: push voltage drops root to leaf
        delta = 0.0
        for ln in lines:
            flow = flows[(ln.from_node, ln.to_node)]
            for i, ph in enumerate(PHASES):
                drop = sum(ln.z_at(i, j) * flow[PHASES[j]] for j in range(3))
                new = volts[(ln.from_node, ph)] - drop
                delta = max(delta, abs(new - volts[(ln.to_node, ph)]))
                volts[(ln.to_node, ph)] = new
        for cust in net.customers:
            new = volts[(cust.node, phases[cust.cid])] - cust.service_z * icust[cust.cid]
            delta = max(delta, abs(new - vterm[cust.cid]))
            vterm[cust.cid] = new

        if delta <= SWEEP_TOL:
            converged = True
            break
    if not converged:
        raise PowerFlowError(
            f"power flow did not converge in {MAX_SWEEPS} sweeps "
            f"(last voltage change {delta:.3e} pu)"
        )

    line_currents = {
        (ln.from_node, ln.to_node, ph): flows[(ln.from_node, ln.to_node)][ph]
        for ln in lines
        for ph in PHASES
    }

    # residuals of the converged state; currents satisfy KCL and the final
    # forward pass enforces Ohm's law, so only the power mismatch is free
    kcl = 0.0
    for nid in order:
        for ph in PHASES:
            bal = 0j
            if nid != net.root().id:
                parent = next(ln for ln in lines if ln.to_node == nid)
                bal += line_currents[(parent.from_node, nid, ph)]
            for ln in lines:
                if ln.from_node == nid:
                    bal -= line_currents[(nid, ln.to_node, ph)]
            for cust in cust_at[nid]:
                if phases[cust.cid] == ph:
                    bal -= icust[cust.cid]
            if nid == svc_node:
                bal -= draws[ph]
            if nid != net.root().id:
                kcl = max(kcl, abs(bal))
    ohm = 0.0
    for ln in lines:
        for i, ph in enumerate(PHASES):
            drop = sum(
                ln.z_at(i, j) * line_currents[(ln.from_node, ln.to_node, PHASES[j])]
                for j in range(3)
            )
            ohm = max(
                ohm,
                abs(volts[(ln.from_node, ph)] - drop - volts[(ln.to_node, ph)]),
            )
    power = 0.0
    for cust in net.customers:
        p, q = cust.demand[t - 1]
        s = vterm[cust.cid] * icust[cust.cid].conjugate()
        power = max(power, abs(s - complex(p, q)))

    dt = net.dt_line()
    dt_seq = seqcomp.decompose(
        seqcomp.PhaseTriple(
            a=line_currents[(dt.from_node, dt.to_node, "a")],
            b=line_currents[(dt.from_node, dt.to_node, "b")],
            c=line_currents[(dt.from_node, dt.to_node, "c")],
        )
    )

    vm_slacks = {}
    for n in net.nodes:
        for ph in PHASES:
            vm = abs(volts[(n.id, ph)])
            vm_slacks[(n.id, ph)] = (vm - n.vm_min, n.vm_max - vm)
    cust_slacks = {}
    for cust in net.customers:
        vm = abs(vterm[cust.cid])
        cust_slacks[cust.cid] = (vm - cust.vm_min, cust.vm_max - vm)
    amp_slacks = {}
    for ln in lines:
        if ln.ampacity is None:
            continue
        for ph in PHASES:
            amp_slacks[(ln.from_node, ln.to_node, ph)] = ln.ampacity - abs(
                line_currents[(ln.from_node, ln.to_node, ph)]
            )
    seq_slacks = {}
    vnom = net.nominal_vm
    for n in net.nodes:
        seq = seqcomp.decompose(
            seqcomp.PhaseTriple(
                a=volts[(n.id, "a")], b=volts[(n.id, "b")], c=volts[(n.id, "c")]
            )
        )
        seq_slacks[n.id] = (
            net.nu_neg * vnom - abs(seq.neg),
            net.nu_zero * vnom - abs(seq.zero),
        )

    return PFState(
        t=t,
        node_voltages=volts,
        customer_voltages=dict(vterm),
        customer_currents=dict(icust),
        customer_phases=phases,
        line_currents=line_currents,
        svc_phase_currents=draws,
        dt_sequence=dt_seq,
        sweeps=sweeps,
        kcl_residual=kcl,
        ohm_residual=ohm,
        power_residual=power,
        vm_slacks=vm_slacks,
        customer_vm_slacks=cust_slacks,
        ampacity_slacks=amp_slacks,
        sequence_slacks=seq_slacks,
    )


def validate_solution(
    net: netmodel.Network, sol: "formulation.DispatchSolution"
) -> ValidationMetrics:
    """Grade a dispatch solution against the exact power flow."""
    f_exact = 0.0
    vm_viol = 0.0
    amp_viol = 0.0
    nsv_ratio = 0.0
    zsv_ratio = 0.0
    v_err = 0.0
    vnom = net.nominal_vm
    for t in sol.periods:
        svc_t = None
        if net.svc is not None:
            svc_t = {pair: sol.svc_currents.get((pair, t), 0j) for pair in PAIRS}
        try:
            state = solve_power_flow(net, sol.assignment, svc_t, t)
        except PowerFlowError as exc:
            raise PowerFlowError(f"period {t}: {exc}") from exc
        f_exact += state.objective
        for lo, hi in state.vm_slacks.values():
            vm_viol = max(vm_viol, -lo, -hi)
        for lo, hi in state.customer_vm_slacks.values():
            vm_viol = max(vm_viol, -lo, -hi)
        for slack in state.ampacity_slacks.values():
            amp_viol = max(amp_viol, -slack)
        for nid, (nslack, zslack) in state.sequence_slacks.items():
            nsv_ratio = max(nsv_ratio, (net.nu_neg * vnom - nslack) / (net.nu_neg * vnom))
            zsv_ratio = max(zsv_ratio, (net.nu_zero * vnom - zslack) / (net.nu_zero * vnom))
        for (nid, ph, tt), v_lin in sol.node_voltages.items():
            if tt != t:
                continue
            v_err = max(v_err, abs(complex(v_lin) - state.node_voltages[(nid, ph)]))
    return ValidationMetrics(
        objective_exact=f_exact,
        objective_model=sol.objective,
        max_vm_violation=max(vm_viol, 0.0),
        max_ampacity_violation=max(amp_viol, 0.0),
        max_nsv_ratio=max(nsv_ratio, 0.0),
        max_zsv_ratio=max(zsv_ratio, 0.0),
        max_voltage_error=v_err,
    )


def window_objective(
    net: netmodel.Network,
    periods,
    assignment: dict,
    svc_by_period: dict | None = None,
) -> float:
    """Exact unbalance cost of one assignment over a set of periods."""
    total = 0.0
    for t in periods:
        svc_t = svc_by_period.get(t) if svc_by_period else None
        total += solve_power_flow(net, assignment, svc_t, t).objective
    return total


def enumerate_assignments(
    net: netmodel.Network,
    k: int,
    strategy,
    grid: tuple = (),
    evaluator=None,
):
    """Exhaustive minimizer over phase assignments (and an SVC grid).

    ``grid`` is a finite sequence of per-pair branch-current dictionaries
    applied uniformly to every period of the window; the zero dispatch is
    always included.  ``evaluator`` overrides the exact-power-flow scoring
    with ``evaluator(assignment, svc_point) -> objective``; pass the
    cone-model scorer to compare against branch-and-bound on equal terms.
    Ties go to the lexicographically lowest assignment, then earliest grid
    point.  Returns ``(assignment dict, objective)``.
    """
    if isinstance(strategy, int):
        strategy = formulation.STRATEGIES[strategy]
    subsets = net.horizon.subsets
    if not (0 <= k < len(subsets)):
        raise ValueError(f"window index {k} out of range for {len(subsets)} subsets")
    periods = subsets[k]

    # without switching every adjustable customer stays where it is
    base = {}
    adjustable = ()
    if strategy.use_psd:
        adjustable = net.adjustable_customers()
    else:
        base = {c.cid: c.initial_phase for c in net.adjustable_customers()}
    if len(adjustable) > 6:
        raise ValueError(
            f"{len(adjustable)} adjustable customers exceed the 3^6 enumeration cap"
        )
    choice_sets = [PHASES] * len(adjustable)

    points = [None]
    if strategy.use_svc and net.svc is not None:
        points = [None] + [dict(g) for g in grid]

    if evaluator is None:
        def evaluator(assignment, svc_point):
            svc_by_period = None
            if svc_point is not None:
                svc_by_period = {t: svc_point for t in periods}
            return window_objective(net, periods, assignment, svc_by_period)

    best = None
    for combo in itertools.product(*choice_sets):
        assignment = base | {c.cid: ph for c, ph in zip(adjustable, combo)}
        for point in points:
            obj = evaluator(assignment, point)
            if best is None or obj < best[0]:
                best = (obj, assignment)
    if best is None:
        raise ValueError("nothing to enumerate")
    return best[1], best[0]
