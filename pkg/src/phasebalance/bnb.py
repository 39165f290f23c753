"""Best-first branch-and-bound over the assignment and mode binaries.

Nodes carry partial 0/1 fixings; each is bounded by the continuous cone
relaxation with those binaries pinned.  Exactly-one assignment blocks are
propagated logically (fixing one phase to 1 clears the other two, two
zeros force the third), so the tree never visits contradictory patterns.
Compensator mode bits whose capacity is sign-symmetric are never branched:
the relaxation is exact in them and a repair pass recovers 0/1 values.
"""

import heapq
import time
import zlib
from dataclasses import dataclass

import numpy as np

from . import conesolver, formulation

INT_TOL = 1e-6
DEFAULT_GAP_TOL = 1e-6
DEFAULT_NODE_LIMIT = 10 ** 6

STATUS_OPTIMAL = "optimal"
STATUS_GAP_LIMIT = "gap-limit"
STATUS_INFEASIBLE = "infeasible"
STATUS_TIME_LIMIT = "time-limit"


@dataclass(frozen=True)
class BnbNode:
    """Search node: partial binary fixings plus an inherited lower bound."""

    fixings: tuple  # sorted ((index, value), ...)
    bound: float
    depth: int


@dataclass(frozen=True)
class MIPSolution:
    incumbent: np.ndarray | None
    objective: float
    gap: float
    nodes_explored: int
    status: str


def fixings_hash(fixings: tuple) -> str:
    """Stable 8-hex-digit tag of a fixing set, used in node logs."""
    text = ",".join(f"{j}:{int(v)}" for j, v in fixings)
    return f"{zlib.crc32(text.encode()) & 0xFFFFFFFF:08x}"


def branch(node: BnbNode, relaxation, binaries=None):
    """Split on the most-fractional binary of the relaxation.

    ``binaries`` lists the branchable variable indices; the cone solution
    itself does not know which coordinates are binary.  Ties on the
    fractionality score go to the lowest index.  Raises if every listed
    binary is already integral.
    """
    if binaries is None:
        raise ValueError("branch needs the list of branchable binary indices")
    fixed = {j for j, _ in node.fixings}
    x = relaxation.x
    best_j, best_score = None, None
    for j in binaries:
        if j in fixed:
            continue
        frac = abs(x[j] - round(x[j]))
        if frac <= INT_TOL:
            continue
        score = abs(x[j] - 0.5)
        if best_score is None or score < best_score:
            best_j, best_score = j, score
    if best_j is None:
        raise ValueError("branch called with an integral relaxation")
    child0 = BnbNode(
        fixings=tuple(sorted(node.fixings + ((best_j, 0),))),
        bound=node.bound,
        depth=node.depth + 1,
    )
    child1 = BnbNode(
        fixings=tuple(sorted(node.fixings + ((best_j, 1),))),
        bound=node.bound,
        depth=node.depth + 1,
    )
    return child0, child1


def _propagate_groups(fixings: dict, alpha_groups) -> dict | None:
    """Close fixings under the exactly-one phase blocks; None on conflict."""
    out = dict(fixings)
    for _, trio in alpha_groups:
        vals = {j: out[j] for j in trio if j in out}
        ones = [j for j, v in vals.items() if v == 1]
        zeros = [j for j, v in vals.items() if v == 0]
        if len(ones) > 1 or len(zeros) == 3:
            return None
        if ones:
            for j in trio:
                if j != ones[0]:
                    if out.get(j, 0) == 1:
                        return None
                    out[j] = 0
        elif len(zeros) == 2:
            third = next(j for j in trio if j not in vals)
            out[third] = 1
    return out


def _kappa_products(model) -> dict:
    """kappa index -> (mag index, w index) for the mode repair rule."""
    kappas = set(model.kappa_vars)
    out = {}
    for g in model.products:
        if g.binary in kappas:
            out[g.binary] = (g.y[0][0], g.z)
    return out


def repair_fixings(model, x, partial: dict) -> dict:
    """Round every binary of ``x`` to a consistent full 0/1 fixing.

    Assignment bits round to the nearest integer; sign-symmetric mode bits
    are chosen from the sign of the current they multiplex (rho = mag - 2w
    negative means the capacitive direction was in use).
    """
    kmap = _kappa_products(model)
    full = dict(partial)
    for j in model.binaries:
        if j in full:
            continue
        if j in kmap:
            mag_i, w_i = kmap[j]
            rho = x[mag_i] - 2.0 * x[w_i]
            full[j] = 1 if rho < 0 else 0
        elif j in set(model.kappa_vars):
            full[j] = 0  # zero-capacity mode bit, value immaterial
        else:
            full[j] = int(round(x[j]))
    return full


def solve_misocp(
    model: formulation.MISOCPModel,
    gap_tol: float = DEFAULT_GAP_TOL,
    time_limit: float | None = None,
    node_limit: int = DEFAULT_NODE_LIMIT,
    node_log: list | None = None,
) -> MIPSolution:
    """Globally minimize the model, returning an incumbent and gap.

    Deterministic for fixed inputs: best-first on bound with FIFO ties,
    branching ties by lowest variable index.
    """
    t0 = time.monotonic()
    branchable = [j for j in model.binaries if j not in model.relax_exact]
    alpha_groups = model.alpha_groups

    def log(node_hash, parent_hash, bound, action, obj=None):
        if node_log is None:
            return
        line = f"node={node_hash} parent={parent_hash} bound={bound:.12e} action={action}"
        if obj is not None:
            line += f" obj={obj:.12e}"
        node_log.append(line)

    upper = float("inf")
    incumbent = None
    lost_lower = float("inf")  # parent bounds of nodes the solver failed on
    nodes_explored = 0
    counter = 0
    root = BnbNode(fixings=(), bound=-float("inf"), depth=0)
    heap = [(root.bound, counter, root, "root")]
    status = None

    def scale():
        return max(1.0, abs(upper))

    def current_lower():
        lo = heap[0][0] if heap else float("inf")
        lo = min(lo, lost_lower)
        return min(lo, upper)

    def current_gap():
        lo = current_lower()
        if upper == float("inf"):
            return float("inf")
        return max(0.0, (upper - lo) / scale())

    while True:
        if not heap and lost_lower == float("inf"):
            status = STATUS_OPTIMAL if incumbent is not None else STATUS_INFEASIBLE
            break
        if current_gap() <= gap_tol:
            status = STATUS_OPTIMAL
            break
        if not heap:
            status = STATUS_GAP_LIMIT
            break
        if nodes_explored >= node_limit:
            status = STATUS_GAP_LIMIT
            break
        if time_limit is not None and time.monotonic() - t0 > time_limit:
            status = STATUS_TIME_LIMIT
            break

        _, _, node, parent_hash = heapq.heappop(heap)
        node_hash = fixings_hash(node.fixings)
        if node.bound >= upper - gap_tol * scale() and upper < float("inf"):
            log(node_hash, parent_hash, node.bound, "prune")
            continue

        nodes_explored += 1
        fixed = dict(node.fixings)
        prob, _ = formulation.to_cone_program(model, fixed=fixed)
        rel = conesolver.solve(prob)

        if rel.status == conesolver.STATUS_INFEASIBLE:
            log(node_hash, parent_hash, float("inf"), "infeasible")
            continue
        if rel.status == conesolver.STATUS_UNBOUNDED:
            raise RuntimeError("relaxation claims unbounded objective; model malformed")
        if rel.status != conesolver.STATUS_OPTIMAL:
            # could not bound this subtree; remember its parent bound so the
            # final gap stays honest rather than silently optimistic
            parent_bound = node.bound if node.bound > -float("inf") else 0.0
            lost_lower = min(lost_lower, parent_bound)
            log(node_hash, parent_hash, parent_bound, "stalled")
            continue

        bound = rel.objective
        if bound >= upper - gap_tol * scale():
            log(node_hash, parent_hash, bound, "prune")
            continue

        fractional = [
            j
            for j in branchable
            if j not in fixed and abs(rel.x[j] - round(rel.x[j])) > INT_TOL
        ]
        if not fractional:
            if not model.binaries:
                if rel.objective < upper:
                    upper, incumbent = rel.objective, rel.x
                log(node_hash, parent_hash, bound, "incumbent", rel.objective)
                continue
            full = repair_fixings(model, rel.x, fixed)
            full = _propagate_groups(full, alpha_groups)
            if full is None:
                log(node_hash, parent_hash, bound, "repair-conflict")
                continue
            rprob, _ = formulation.to_cone_program(model, fixed=full)
            rsol = conesolver.solve(rprob)
            if rsol.status != conesolver.STATUS_OPTIMAL:
                log(node_hash, parent_hash, bound, "repair-failed")
                continue
            if rsol.objective < upper:
                upper, incumbent = rsol.objective, rsol.x
            log(node_hash, parent_hash, bound, "incumbent", rsol.objective)
            continue

        probe = BnbNode(fixings=node.fixings, bound=bound, depth=node.depth)
        kids = branch(probe, rel, binaries=branchable)
        log(node_hash, parent_hash, bound, "branch")
        for kid in kids:
            prop = _propagate_groups(dict(kid.fixings), alpha_groups)
            if prop is None:
                continue
            child = BnbNode(
                fixings=tuple(sorted(prop.items())),
                bound=bound,
                depth=kid.depth,
            )
            counter += 1
            heapq.heappush(heap, (child.bound, counter, child, node_hash))

    gap = current_gap()
    if status == STATUS_OPTIMAL and incumbent is None:
        status = STATUS_INFEASIBLE
    return MIPSolution(
        incumbent=incumbent,
        objective=upper,
        gap=gap if incumbent is not None else float("inf"),
        nodes_explored=nodes_explored,
        status=status,
    )


def audit_node_log(lines, gap_tol: float = DEFAULT_GAP_TOL) -> dict:
    """Replay a node log, checking bound monotonicity and pruning safety.

    Returns counters; raises AssertionError on any violated invariant.
    """
    bounds = {}
    incumbents = []
    prunes = []
    for line in lines:
        parts = dict(p.split("=", 1) for p in line.split())
        h, ph = parts["node"], parts["parent"]
        bound = float(parts["bound"])
        action = parts["action"]
        if action in ("branch", "incumbent", "prune", "stalled"):
            if ph in bounds and bounds[ph] > -float("inf"):
                assert bound >= bounds[ph] - 1e-9, (
                    f"child bound {bound} dropped below parent {bounds[ph]}"
                )
        if action == "branch":
            bounds[h] = bound
        if action == "incumbent":
            incumbents.append(float(parts["obj"]))
        if action == "prune":
            prunes.append(bound)
    final_upper = min(incumbents) if incumbents else float("inf")
    scale = max(1.0, abs(final_upper))
    for bound in prunes:
        assert bound >= final_upper - gap_tol * scale - 1e-9, (
            f"pruned node bound {bound} was below the final incumbent {final_upper}"
        )
    return {
        "nodes": len(lines),
        "incumbents": len(incumbents),
        "prunes": len(prunes),
        "best": final_upper,
    }
