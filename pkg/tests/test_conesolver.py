"""Interior-point solver against closed forms and the first-order oracle."""

import numpy as np
import pytest

from phasebalance import conesolver
from phasebalance.conesolver import StandardConeProblem

import _oracles


def solve(prob, **kw):
    sol = conesolver.solve(prob, **kw)
    return sol


def test_lp_vertex():
    # min -x1 - 2 x2  s.t. x1 + x2 <= 4, x1 <= 3, x >= 0 -> (0, 4), obj -8
    prob = StandardConeProblem(
        c=[-1.0, -2.0],
        G=[[1.0, 1.0], [1.0, 0.0], [-1.0, 0.0], [0.0, -1.0]],
        h=[4.0, 3.0, 0.0, 0.0],
        n_orthant=4,
    )
    sol = solve(prob)
    assert sol.status == conesolver.STATUS_OPTIMAL
    assert sol.objective == pytest.approx(-8.0, abs=1e-7)
    assert sol.x == pytest.approx([0.0, 4.0], abs=1e-6)


def test_lp_equality_only():
    # min x1 + x2 s.t. x1 - x2 = 1, x >= 0 -> (1, 0)
    prob = StandardConeProblem(
        c=[1.0, 1.0],
        A=[[1.0, -1.0]],
        b=[1.0],
        G=[[-1.0, 0.0], [0.0, -1.0]],
        h=[0.0, 0.0],
        n_orthant=2,
    )
    sol = solve(prob)
    assert sol.status == conesolver.STATUS_OPTIMAL
    assert sol.x == pytest.approx([1.0, 0.0], abs=1e-7)


def test_345_cone():
    # min t s.t. (t; 3, 4) in SOC -> t = 5
    prob = StandardConeProblem(
        c=[1.0],
        G=[[-1.0], [0.0], [0.0]],
        h=[0.0, 3.0, 4.0],
        soc_dims=(3,),
    )
    sol = solve(prob)
    assert sol.status == conesolver.STATUS_OPTIMAL
    assert sol.objective == pytest.approx(5.0, abs=1e-7)


def test_variable_bounds():
    prob = StandardConeProblem(
        c=[1.0, -1.0],
        lb=np.array([-2.0, -np.inf]),
        ub=np.array([np.inf, 7.5]),
    )
    sol = solve(prob)
    assert sol.status == conesolver.STATUS_OPTIMAL
    assert sol.x == pytest.approx([-2.0, 7.5], abs=1e-6)


def test_infeasible_certificate():
    # x >= 1 and x <= 0
    prob = StandardConeProblem(
        c=[0.0],
        G=[[-1.0], [1.0]],
        h=[-1.0, 0.0],
        n_orthant=2,
    )
    sol = solve(prob)
    assert sol.status == conesolver.STATUS_INFEASIBLE
    # Farkas certificate: z >= 0, G'z = 0, h'z < 0
    z = sol.z
    assert np.all(z >= -1e-9)
    assert abs(prob.G.T @ z) < 1e-6 * np.linalg.norm(z)
    assert prob.h @ z < 0


def test_unbounded_certificate():
    # min x with only x <= 5
    prob = StandardConeProblem(c=[1.0], G=[[1.0]], h=[5.0], n_orthant=1)
    sol = solve(prob)
    assert sol.status == conesolver.STATUS_UNBOUNDED
    # improving ray: c'x < 0, Gx <= 0
    assert prob.c @ sol.x < 0
    assert np.all(prob.G @ sol.x <= 1e-9)


def test_rejects_inconsistent_dims():
    with pytest.raises(ValueError):
        StandardConeProblem(c=[1.0], G=[[1.0]], h=[0.0], n_orthant=2)
    with pytest.raises(ValueError):
        StandardConeProblem(c=[1.0], G=[[1.0]], h=[0.0], soc_dims=(1,))


def test_socp_matches_construction_and_oracle():
    rng = np.random.default_rng(11)
    for _ in range(10):
        gen = _oracles.random_socp(rng)
        prob = StandardConeProblem(
            c=gen.c,
            A=gen.A,
            b=gen.b,
            G=gen.G,
            h=gen.h,
            n_orthant=gen.l,
            soc_dims=tuple(gen.socs),
        )
        sol = solve(prob)
        assert sol.status == conesolver.STATUS_OPTIMAL
        scale = max(1.0, abs(gen.opt))
        assert abs(sol.objective - gen.opt) <= 1e-6 * scale
        _, admm_obj, _ = _oracles.solve_socp_admm(gen)
        assert abs(sol.objective - admm_obj) <= 1e-5 * scale
        assert sol.primal_residual <= 1e-8
        assert sol.dual_residual <= 1e-8
        assert sol.duality_gap <= 1e-8


def test_kkt_residuals_reported_honestly():
    rng = np.random.default_rng(23)
    gen = _oracles.random_socp(rng)
    prob = StandardConeProblem(
        c=gen.c, A=gen.A, b=gen.b, G=gen.G, h=gen.h,
        n_orthant=gen.l, soc_dims=tuple(gen.socs),
    )
    sol = solve(prob)
    # recompute the residuals from the returned point; the reported values
    # must not be better than reality
    r_prim = np.linalg.norm(gen.A @ sol.x - gen.b) if gen.A.shape[0] else 0.0
    m = gen.G.shape[0]
    r_cone = np.linalg.norm(gen.G @ sol.x + sol.s[:m] - gen.h)
    scale_p = 1.0 + np.linalg.norm(gen.b) + np.linalg.norm(gen.h)
    assert max(r_prim, r_cone) / scale_p <= sol.primal_residual + 1e-9


def test_dump_load_round_trip():
    rng = np.random.default_rng(5)
    gen = _oracles.random_socp(rng)
    prob = StandardConeProblem(
        c=gen.c, A=gen.A, b=gen.b, G=gen.G, h=gen.h,
        n_orthant=gen.l, soc_dims=tuple(gen.socs),
    )
    text = conesolver.dump_problem(prob)
    again = conesolver.load_problem(text)
    assert conesolver.dump_problem(again) == text
    s1 = solve(prob)
    s2 = solve(again)
    assert s1.objective == s2.objective
    assert np.array_equal(s1.x, s2.x)


def test_deterministic_solves():
    rng = np.random.default_rng(9)
    gen = _oracles.random_socp(rng)
    prob = StandardConeProblem(
        c=gen.c, A=gen.A, b=gen.b, G=gen.G, h=gen.h,
        n_orthant=gen.l, soc_dims=tuple(gen.socs),
    )
    a = solve(prob)
    b = solve(prob)
    assert np.array_equal(a.x, b.x)
    assert a.iterations == b.iterations


def test_sparse_path_agrees_with_dense():
    # same LP solved tiny (dense path) and padded into the sparse regime
    rng = np.random.default_rng(31)
    n, m = 120, 260
    # feasible bounded LP: box plus random inequalities around a known point
    x0 = rng.uniform(-1.0, 1.0, size=n)
    G1 = rng.normal(size=(m, n))
    h1 = G1 @ x0 + rng.uniform(0.2, 1.5, size=m)
    G = np.vstack([G1, -np.eye(n), np.eye(n)])
    h = np.concatenate([h1, 2.0 - x0 * 0, 2.0 + x0 * 0])
    c = rng.normal(size=n)
    prob = StandardConeProblem(c=c, G=G, h=h, n_orthant=G.shape[0])
    sol = solve(prob)
    assert sol.status == conesolver.STATUS_OPTIMAL
    # verify feasibility and stationarity via the oracle residual route
    assert np.all(G @ sol.x - h <= 1e-7)
    z = sol.z[: G.shape[0]]
    assert np.all(z >= -1e-9)
    assert np.linalg.norm(c + G.T @ z) <= 1e-6 * max(1.0, np.linalg.norm(c))
