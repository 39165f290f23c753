"""Branch and bound: exactness vs enumeration, mechanics, audit trail."""

from types import SimpleNamespace

import numpy as np
import pytest

from phasebalance import bnb, conesolver, fixtures, formulation, netmodel, pforacle


def load(doc):
    return netmodel.load_network(doc)


def refined_evaluator(model):
    """Score a phase assignment by its fixed-binary cone optimum."""

    def ev(assignment, svc_point):
        fixed = {}
        for cid, trio in model.alpha_groups:
            for ph, j in zip(netmodel.PHASES, trio):
                fixed[j] = 1.0 if assignment[cid] == ph else 0.0
        prob, _ = formulation.to_cone_program(model, fixed)
        sol = conesolver.solve(prob)
        if sol.status != conesolver.STATUS_OPTIMAL:
            return float("inf")
        return sol.objective

    return ev


@pytest.fixture(scope="module")
def medium():
    return load(fixtures.medium_feeder_doc(T=2, n_o=1))


def test_matches_enumeration_one_customer():
    net = load(fixtures.two_node_doc(kind="adjustable", T=2))
    model = formulation.build_subproblem(net, 0, 3)
    res = bnb.solve_misocp(model)
    assert res.status == bnb.STATUS_OPTIMAL
    assert res.gap <= bnb.DEFAULT_GAP_TOL

    _, best = pforacle.enumerate_assignments(
        net, 0, 3, evaluator=refined_evaluator(model)
    )
    assert res.objective == pytest.approx(best, rel=1e-6)


def test_matches_enumeration_two_customers(medium):
    model = formulation.build_subproblem(medium, 0, 3)
    res = bnb.solve_misocp(model)
    assert res.status == bnb.STATUS_OPTIMAL

    asg, best = pforacle.enumerate_assignments(
        medium, 0, 3, evaluator=refined_evaluator(model)
    )
    assert res.objective == pytest.approx(best, rel=1e-6)
    # the incumbent decodes to the same phase choice the enumeration found
    sol = formulation.extract_solution(model, res.incumbent)
    for cid, ph in asg.items():
        assert sol.assignment[cid] == ph


def test_no_binaries_is_single_solve():
    net = load(fixtures.two_node_doc(T=1))
    model = formulation.build_subproblem(net, 0, 1)
    res = bnb.solve_misocp(model)
    assert res.status == bnb.STATUS_OPTIMAL
    assert res.nodes_explored == 1
    assert res.gap == 0.0
    assert res.incumbent is not None


def test_branch_picks_most_fractional():
    node = bnb.BnbNode(fixings=(), bound=1.5, depth=2)
    rel = SimpleNamespace(x=np.array([0.9, 0.45, 0.2]))
    c0, c1 = bnb.branch(node, rel, binaries=[0, 1, 2])
    assert c0.fixings == ((1, 0),) and c1.fixings == ((1, 1),)
    assert c0.bound == c1.bound == 1.5
    assert c0.depth == c1.depth == 3


def test_branch_tie_goes_to_lowest_index():
    rel = SimpleNamespace(x=np.array([0.6, 0.4]))
    node = bnb.BnbNode(fixings=(), bound=0.0, depth=0)
    c0, _ = bnb.branch(node, rel, binaries=[0, 1])
    assert c0.fixings == ((0, 0),)


def test_branch_skips_already_fixed():
    rel = SimpleNamespace(x=np.array([0.5, 0.7]))
    node = bnb.BnbNode(fixings=((0, 1),), bound=0.0, depth=1)
    c0, _ = bnb.branch(node, rel, binaries=[0, 1])
    assert c0.fixings == ((0, 1), (1, 0))


def test_branch_errors():
    node = bnb.BnbNode(fixings=(), bound=0.0, depth=0)
    with pytest.raises(ValueError, match="branchable"):
        bnb.branch(node, SimpleNamespace(x=np.array([0.5])))
    integral = SimpleNamespace(x=np.array([1.0, 0.0]))
    with pytest.raises(ValueError, match="integral"):
        bnb.branch(node, integral, binaries=[0, 1])


def test_propagate_exactly_one_groups():
    groups = [("c1", (0, 1, 2)), ("c2", (3, 4, 5))]
    # a one forces the rest of its block to zero
    out = bnb._propagate_groups({0: 1}, groups)
    assert out == {0: 1, 1: 0, 2: 0}
    # two zeros force the remaining one
    out = bnb._propagate_groups({3: 0, 5: 0}, groups)
    assert out == {3: 0, 5: 0, 4: 1}
    # conflicts collapse to None
    assert bnb._propagate_groups({0: 1, 1: 1}, groups) is None
    assert bnb._propagate_groups({0: 0, 1: 0, 2: 0}, groups) is None
    # a one elsewhere in a block already forced to zero is a conflict
    assert bnb._propagate_groups({0: 1, 2: 1}, groups) is None


def test_repair_rounds_assignments_and_modes(medium):
    model = formulation.build_subproblem(medium, 0, 4)
    x = np.zeros(model.n)
    kmap = bnb._kappa_products(model)
    assert set(kmap) == set(model.kappa_vars)

    want = {}
    for i, (kappa, (mag_i, w_i)) in enumerate(sorted(kmap.items())):
        x[mag_i] = 1.0
        # rho = mag - 2w: negative means the capacitive branch was active
        x[w_i] = 0.8 if i % 2 == 0 else 0.2
        want[kappa] = 1 if i % 2 == 0 else 0
    for _, trio in model.alpha_groups:
        x[trio[0]], x[trio[1]], x[trio[2]] = 0.7, 0.2, 0.1
        want[trio[0]], want[trio[1]], want[trio[2]] = 1, 0, 0

    full = bnb.repair_fixings(model, x, {})
    for j, v in want.items():
        assert full[j] == v, model.var_space.name(j)
    # partial fixings survive untouched
    j0 = model.binaries[0]
    forced = bnb.repair_fixings(model, x, {j0: 1 - want[j0]})
    assert forced[j0] == 1 - want[j0]


def test_fixings_hash_is_stable():
    a = bnb.fixings_hash(((3, 1), (7, 0)))
    assert a == bnb.fixings_hash(((3, 1), (7, 0)))
    assert len(a) == 8 and int(a, 16) >= 0
    assert a != bnb.fixings_hash(((3, 0), (7, 0)))


def test_node_log_replays_clean(medium):
    model = formulation.build_subproblem(medium, 0, 4)
    log = []
    res = bnb.solve_misocp(model, node_log=log)
    assert res.status == bnb.STATUS_OPTIMAL
    stats = bnb.audit_node_log(log)
    assert stats["nodes"] == len(log)
    assert stats["incumbents"] >= 1
    assert stats["best"] == pytest.approx(res.objective, rel=1e-12)
    roots = [line for line in log if "parent=root" in line]
    assert roots and log[0] == roots[0]


def test_audit_rejects_bound_regressions():
    lines = [
        "node=aaaaaaaa parent=root bound=2.000000000000e+00 action=branch",
        "node=bbbbbbbb parent=aaaaaaaa bound=1.000000000000e+00 action=branch",
    ]
    with pytest.raises(AssertionError, match="dropped below"):
        bnb.audit_node_log(lines)


def test_audit_rejects_unsafe_prunes():
    lines = [
        "node=aaaaaaaa parent=root bound=5.000000000000e-01 action=prune",
        "node=bbbbbbbb parent=root bound=1.000000000000e+00 action=incumbent obj=1.000000000000e+00",
    ]
    with pytest.raises(AssertionError, match="below the final incumbent"):
        bnb.audit_node_log(lines, gap_tol=1e-6)


def test_infeasible_model_reports_infeasible():
    net = load(fixtures.infeasible_svc_doc())
    model = formulation.build_subproblem(net, 0, 2)
    res = bnb.solve_misocp(model)
    assert res.status == bnb.STATUS_INFEASIBLE
    assert res.incumbent is None
    assert res.gap == float("inf")


def test_node_limit_truncates(medium):
    model = formulation.build_subproblem(medium, 0, 3)
    res = bnb.solve_misocp(model, node_limit=1)
    assert res.nodes_explored <= 1
    assert res.status in (bnb.STATUS_GAP_LIMIT, bnb.STATUS_OPTIMAL)


def test_time_limit_reports_status(medium):
    model = formulation.build_subproblem(medium, 0, 3)
    res = bnb.solve_misocp(model, time_limit=0.0)
    assert res.status == bnb.STATUS_TIME_LIMIT
    assert res.incumbent is None


def test_deterministic_replay(medium):
    model_a = formulation.build_subproblem(medium, 0, 4)
    model_b = formulation.build_subproblem(medium, 0, 4)
    log_a, log_b = [], []
    ra = bnb.solve_misocp(model_a, node_log=log_a)
    rb = bnb.solve_misocp(model_b, node_log=log_b)
    assert log_a == log_b
    assert ra.nodes_explored == rb.nodes_explored
    assert ra.objective == rb.objective
    assert np.array_equal(ra.incumbent, rb.incumbent)
