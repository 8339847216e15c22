import io

import numpy as np
import pytest
from hypothesis import given, strategies as st

from sdrsvm import _backend
from sdrsvm.exceptions import LpIterationLimit, ShapeError
from sdrsvm.lp import LpProblem, RawLp, canonicalize, dump_lp, load_lp, solve_lp

from oracles import enumerate_vertices, random_bounded_lp, vertex_optimum


def test_simplex_edge(core):
    p = LpProblem(c=[-1, -1], A=[[1, 1]], rhs=[1], senses=("<=",))
    sol = solve_lp(p, core=core)
    assert sol.status == "optimal"
    assert sol.objective == pytest.approx(-1.0, abs=1e-12)


def test_unbounded_ray(core):
    p = LpProblem(c=[-1.0], A=np.zeros((0, 1)), rhs=[])
    sol = solve_lp(p, core=core)
    assert sol.status == "unbounded"
    assert sol.ray[0] > 0

    p = LpProblem(c=[-1, 0], A=[[1, -1]], rhs=[-1], senses=("<=",))  # x <= y - 1
    sol = solve_lp(p, core=core)
    assert sol.status == "unbounded"
    r = sol.ray
    assert np.all(r >= -1e-12) and p.c @ r < 0 and p.A[0] @ r <= 1e-12


def test_infeasible(core):
    p = LpProblem(c=[1, 1], A=[[1, 1], [1, 1]], rhs=[1, 2], senses=("<=", ">="))
    assert solve_lp(p, core=core).status == "infeasible"


def test_redundant_equality(core):
    p = LpProblem(c=[1, 2], A=[[1, 1], [2, 2]], rhs=[1, 2], senses=("=", "="))
    sol = solve_lp(p, core=core)
    assert sol.status == "optimal"
    np.testing.assert_allclose(sol.x, [1, 0], atol=1e-12)


def test_negative_rhs_and_offset(core):
    # min x + 3 s.t. -x <= -2
    p = LpProblem(c=[1.0], A=[[-1.0]], rhs=[-2.0], senses=("<=",), offset=3.0)
    sol = solve_lp(p, core=core)
    assert sol.objective == pytest.approx(5.0, abs=1e-12)


def test_shape_checks():
    with pytest.raises(ShapeError):
        LpProblem(c=[1, 2], A=[[1, 2, 3]], rhs=[1])
    with pytest.raises(ShapeError):
        LpProblem(c=[1], A=[[1]], rhs=[1], senses=("<",))


def test_iteration_limit_carries_point(core):
    rng = np.random.default_rng(5)
    n = 8
    A = rng.uniform(0.1, 1.0, (n, n))
    p = LpProblem(c=-np.ones(n), A=A, rhs=np.ones(n), senses=("<=",) * n)
    with pytest.raises(LpIterationLimit) as exc:
        solve_lp(p, max_iters=1, core=core)
    assert exc.value.iterations == 1
    assert exc.value.best_x is not None
    assert p.violation(exc.value.best_x) <= 1e-9


def beale():
    """Beale's example, which cycles under the textbook Dantzig rule."""
    c = [-0.75, 20.0, -0.5, 6.0]
    A = [[0.25, -8.0, -1.0, 9.0], [0.5, -12.0, -0.5, 3.0], [0.0, 0.0, 1.0, 0.0]]
    return LpProblem(c=c, A=A, rhs=[0, 0, 1], senses=("<=", "<=", "<="))


@pytest.mark.parametrize("kw", [{}, {"bland": True}, {"stall_limit": 1}, {"stall_limit": 2}])
def test_beale_terminates(core, kw):
    p = beale()
    sol = solve_lp(p, core=core, **kw)
    assert sol.status == "optimal"
    assert sol.objective == pytest.approx(-1.25, abs=1e-9)
    assert sol.objective == pytest.approx(vertex_optimum(p)[1], abs=1e-9)


def test_degenerate_stall_remedies_agree(core):
    # a highly degenerate LP: many constraints tight at the origin
    rng = np.random.default_rng(11)
    m, n = 40, 25
    A = rng.standard_normal((m, n))
    p = LpProblem(c=rng.standard_normal(n), A=np.vstack([A, np.ones(n)]),
                  rhs=np.r_[np.zeros(m), 5.0], senses=(">=",) * m + ("<=",))
    ref = solve_lp(p, bland=True, core=core)
    for limit in (1, 3, 20):
        sol = solve_lp(p, stall_limit=limit, core=core)
        assert sol.status == ref.status
        if ref.status == "optimal":
            assert sol.objective == pytest.approx(ref.objective, abs=1e-8)
            assert sol.max_violation <= 1e-7


def test_random_lps_match_vertex_enumeration(core):
    rng = np.random.default_rng(1234)
    for _ in range(50):
        p = random_bounded_lp(rng)
        status, val = vertex_optimum(p)
        for bland in (False, True):
            sol = solve_lp(p, bland=bland, max_iters=50 * (p.n_vars + p.n_constraints), core=core)
            assert sol.status == status
            if status == "optimal":
                assert sol.objective == pytest.approx(val, abs=1e-6)
                assert p.violation(sol.x) <= 1e-7
                assert sol.x.min() >= -1e-9


def test_optimum_beats_random_feasible_points(rng):
    checked = 0
    while checked < 10:
        p = random_bounded_lp(rng)
        verts = enumerate_vertices(p)
        if not verts:
            continue
        V = np.array(verts)
        W = rng.dirichlet(np.ones(len(V)), size=1000)
        pts = W @ V  # convex combinations are feasible
        sol = solve_lp(p)
        assert np.all(sol.objective <= pts @ p.c + p.offset + 1e-9)
        checked += 1


def test_scipy_cross_check(rng):
    linprog = pytest.importorskip("scipy.optimize").linprog
    for _ in range(20):
        m, n = 15, 12
        A = rng.standard_normal((m, n))
        x0 = rng.uniform(0, 1, n)
        rhs = A @ x0 - rng.uniform(0, 1, m)  # x0 is strictly feasible
        c = rng.uniform(-1, 2, n)
        p = LpProblem(c=c, A=np.vstack([A, np.ones(n)]), rhs=np.r_[rhs, 3 * n],
                      senses=(">=",) * m + ("<=",))
        ref = linprog(c, A_ub=np.vstack([-A, np.ones(n)]), b_ub=np.r_[-rhs, 3 * n],
                      bounds=(0, None), method="highs")
        sol = solve_lp(p)
        assert ref.status == 0
        assert sol.objective == pytest.approx(ref.fun, abs=1e-7)


def test_deterministic():
    rng = np.random.default_rng(3)
    p = random_bounded_lp(rng, max_vars=6, max_cons=6)
    a, b = solve_lp(p), solve_lp(p)
    assert a.x.tobytes() == b.x.tobytes()
    assert a.iterations == b.iterations


def test_backends_agree_on_fixed_lps():
    if len(_backend.available()) < 2:
        pytest.skip("compiled core not built")
    cy, py = _backend.get("cython"), _backend.get("python")
    rng = np.random.default_rng(99)
    for _ in range(30):
        p = random_bounded_lp(rng)
        a, b = solve_lp(p, core=cy), solve_lp(p, core=py)
        assert a.status == b.status
        assert a.iterations == b.iterations
        if a.status == "optimal":
            np.testing.assert_allclose(a.x, b.x, atol=1e-12)


class TestCanonicalize:
    def test_free_variable(self):
        raw = RawLp(c=[1.0], A=[[1.0]], rhs=[-3.0], lower=[-np.inf])
        p, vm = canonicalize(raw)
        sol = solve_lp(p)
        assert vm.reconstruct(sol.x)[0] == pytest.approx(-3.0, abs=1e-12)
        assert sol.objective == pytest.approx(-3.0, abs=1e-12)

    def test_shifted_bound(self):
        raw = RawLp(c=[1.0], A=np.zeros((0, 1)), rhs=[], lower=[1.0])
        p, vm = canonicalize(raw)
        sol = solve_lp(p)
        assert vm.reconstruct(sol.x)[0] == 1.0
        assert sol.objective == 1.0

    def test_round_trip_residuals(self, rng):
        for _ in range(100):
            n = int(rng.integers(1, 6))
            m = int(rng.integers(1, 6))
            lower = np.where(rng.random(n) < 0.3, -np.inf, rng.uniform(-2, 2, n))
            x_feas = np.where(np.isfinite(lower), lower, 0.0) + rng.uniform(0, 2, n)
            A = rng.standard_normal((m, n))
            rhs = A @ x_feas - rng.uniform(0, 1, m)
            raw = RawLp(c=rng.uniform(0.1, 1.0, n) * np.where(np.isfinite(lower), 1, 0),
                        A=np.vstack([A, np.ones(n)]), rhs=np.r_[rhs, -100.0],
                        senses=(">=",) * (m + 1), lower=lower)
            p, vm = canonicalize(raw)
            sol = solve_lp(p)
            assert sol.status == "optimal"
            x = vm.reconstruct(sol.x, clip=False)
            assert np.all(raw.A @ x >= raw.rhs - 1e-7)
            fin = np.isfinite(lower)
            assert np.all(x[fin] >= lower[fin] - 1e-9)
            assert sol.objective == pytest.approx(raw.c @ x, abs=1e-9)


@given(st.integers(0, 2**32 - 1))
def test_dump_load_round_trip(seed):
    p = random_bounded_lp(np.random.default_rng(seed))
    p.offset = 0.1 * (seed % 7)
    buf = io.StringIO()
    dump_lp(p, buf)
    q = load_lp(io.StringIO(buf.getvalue()))
    assert q.A.tobytes() == p.A.tobytes()
    assert q.c.tobytes() == p.c.tobytes()
    assert q.rhs.tobytes() == p.rhs.tobytes()
    assert q.senses == p.senses and q.offset == p.offset


def test_load_rejects_garbage():
    with pytest.raises(ValueError):
        load_lp(io.StringIO("hello\n"))
