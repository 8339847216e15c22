"""Dense two-phase primal simplex for small and medium linear programs.

Problems are stated as ``min c.x + offset`` subject to row constraints
``A[i].x (>=|<=|=) rhs[i]`` and ``x >= 0``. Free variables and shifted
lower bounds are handled by :func:`canonicalize`.

Pivoting uses Dantzig's rule (most negative reduced cost). After
``stall_limit`` consecutive degenerate pivots the right-hand side is
perturbed; Bland's rule is the fallback if stalling persists.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from . import _backend
from .exceptions import LpIterationLimit, ShapeError

logger = logging.getLogger(__name__)

__all__ = [
    "LpProblem",
    "LpSolution",
    "RawLp",
    "VariableMap",
    "canonicalize",
    "solve_lp",
    "dump_lp",
    "load_lp",
]

PIVOT_TOL = 1e-9
FEAS_TOL = 1e-7
STALL_LIMIT = 20
PERTURB = 1e-6  # relative size of the anti-degeneracy rhs perturbation
MAX_PERTURB = 3
_SENSES = (">=", "<=", "=")


@dataclass
class LpProblem:
    """``min c.x + offset`` s.t. ``A x (senses) rhs``, ``x >= 0``."""

    c: np.ndarray
    A: np.ndarray
    rhs: np.ndarray
    senses: tuple = None
    offset: float = 0.0

    def __post_init__(self):
        self.c = np.asarray(self.c, dtype=float).ravel()
        self.A = np.asarray(self.A, dtype=float)
        self.rhs = np.asarray(self.rhs, dtype=float).ravel()
        if self.A.ndim != 2:
            self.A = self.A.reshape(len(self.rhs), len(self.c))
        m, n = self.A.shape
        if n != self.c.size or m != self.rhs.size:
            raise ShapeError(f"A is {self.A.shape}, c has {self.c.size}, rhs has {self.rhs.size}")
        if self.senses is None:
            self.senses = (">=",) * m
        self.senses = tuple(self.senses)
        if len(self.senses) != m or any(s not in _SENSES for s in self.senses):
            raise ShapeError("senses must give one of '>=', '<=', '=' per row")

    @property
    def n_vars(self):
        return self.c.size

    @property
    def n_constraints(self):
        return self.rhs.size

    def violation(self, x):
        """Largest constraint or sign violation of ``x`` (0 if feasible)."""
        x = np.asarray(x, dtype=float)
        if self.n_constraints == 0:
            return max(0.0, float(-x.min(initial=0.0)))
        ax = self.A @ x
        s = np.array(self.senses)
        v = np.zeros_like(ax)
        v[s == ">="] = self.rhs[s == ">="] - ax[s == ">="]
        v[s == "<="] = ax[s == "<="] - self.rhs[s == "<="]
        v[s == "="] = np.abs(ax[s == "="] - self.rhs[s == "="])
        return float(max(v.max(initial=0.0), -x.min(initial=0.0), 0.0))


@dataclass
class LpSolution:
    x: np.ndarray
    objective: float
    status: str
    iterations: int
    ray: np.ndarray | None = None
    bland_used: bool = False
    max_violation: float = 0.0


@dataclass
class RawLp:
    """LP with per-variable lower bounds (``-inf`` marks a free variable)."""

    c: np.ndarray
    A: np.ndarray
    rhs: np.ndarray
    senses: tuple = None
    lower: np.ndarray = None
    names: list = None

    def __post_init__(self):
        self.c = np.asarray(self.c, dtype=float).ravel()
        self.A = np.asarray(self.A, dtype=float).reshape(-1, self.c.size)
        self.rhs = np.asarray(self.rhs, dtype=float).ravel()
        if self.senses is None:
            self.senses = (">=",) * self.rhs.size
        if self.lower is None:
            self.lower = np.zeros(self.c.size)
        self.lower = np.asarray(self.lower, dtype=float).ravel()
        if self.lower.size != self.c.size:
            raise ShapeError("one lower bound per variable is required")


@dataclass
class VariableMap:
    """Maps canonical (all nonnegative) columns back to original variables."""

    pos: np.ndarray
    neg: np.ndarray
    shift: np.ndarray
    names: list = field(default_factory=list)

    def reconstruct(self, x_canonical, clip=True):
        xc = np.asarray(x_canonical, dtype=float)
        if clip:
            xc = np.maximum(xc, 0.0)
        x = xc[self.pos].copy()
        free = self.neg >= 0
        x[free] -= xc[self.neg[free]]
        return x + self.shift


def canonicalize(raw: RawLp):
    """Rewrite ``raw`` so that every variable is nonnegative.

    A free variable ``v`` becomes ``v+ - v-``; a variable with finite lower
    bound ``L`` becomes ``L + v'``. Returns the :class:`LpProblem` and the
    :class:`VariableMap` needed to recover original coordinates.
    """
    n = raw.c.size
    free = ~np.isfinite(raw.lower)
    shift = np.where(free, 0.0, raw.lower)
    pos = np.arange(n)
    neg = np.full(n, -1)
    extra = np.flatnonzero(free)
    neg[extra] = n + np.arange(extra.size)
    A = np.hstack([raw.A, -raw.A[:, extra]])
    c = np.concatenate([raw.c, -raw.c[extra]])
    rhs = raw.rhs - raw.A @ shift
    offset = float(raw.c @ shift)
    problem = LpProblem(c=c, A=A, rhs=rhs, senses=tuple(raw.senses), offset=offset)
    return problem, VariableMap(pos=pos, neg=neg, shift=shift, names=list(raw.names or []))


def _standard_form(p: LpProblem):
    """Equality form with slacks and a crash basis.

    Returns ``(A, b, cost, basis, n_struct)``; rows whose ``basis`` entry is
    -1 still need an artificial variable.
    """
    A = p.A.copy()
    b = p.rhs.copy()
    senses = list(p.senses)
    flip = b < 0
    A[flip] *= -1.0
    b[flip] *= -1.0
    for i in np.flatnonzero(flip):
        senses[i] = {">=": "<=", "<=": ">=", "=": "="}[senses[i]]
    m, n = A.shape
    ineq = [i for i, s in enumerate(senses) if s != "="]
    S = np.zeros((m, len(ineq)))
    for k, i in enumerate(ineq):
        S[i, k] = 1.0 if senses[i] == "<=" else -1.0
    A = np.hstack([A, S])
    cost = np.concatenate([p.c, np.zeros(len(ineq))])
    basis = np.full(m, -1, dtype=np.int64)
    for k, i in enumerate(ineq):
        if senses[i] == "<=":
            basis[i] = n + k
    # any column with a single positive entry can start basic in its row
    nnz = np.count_nonzero(A, axis=0)
    used = set(basis[basis >= 0].tolist())
    for j in np.flatnonzero(nnz == 1):
        i = int(np.flatnonzero(A[:, j])[0])
        if basis[i] >= 0 or j in used or A[i, j] <= 0:
            continue
        a = A[i, j]
        A[i] = A[i] / a
        b[i] = b[i] / a
        basis[i] = j
        used.add(int(j))
    return A, b, cost, basis, n


class _Phase:
    """Tableau for one simplex phase, with periodic reinversion.

    Reinversion rebuilds ``T`` from the original columns and the current
    basis, discarding rounding error accumulated by elimination pivots.

    Long runs of degenerate pivots are broken by perturbing the zero
    right-hand sides by small distinct amounts. Once the perturbed problem
    is optimal the true right-hand side is restored and any rows it leaves
    slightly infeasible are repaired with dual simplex pivots. Bland's rule
    is the last resort after ``MAX_PERTURB`` rounds.
    """

    def __init__(self, A, b, cost, basis, core, tol, stall_limit, mode):
        self.A = A
        self.b = b
        self.b_work = b
        self.cost = cost
        self.basis = np.ascontiguousarray(basis, dtype=np.int64)
        self.core = core
        self.tol = tol
        self.stall_limit = stall_limit
        self.mode = mode
        self.stall = 0
        self.rounds = 0
        self.used_bland = mode != _backend.DANTZIG
        m, n = A.shape
        self.T = np.zeros((m + 1, n + 1))
        self.reinvert()

    @property
    def m(self):
        return self.basis.size

    @property
    def perturbed(self):
        return self.b_work is not self.b

    def reinvert(self):
        m = self.m
        B = self.A[:, self.basis]
        sol = np.linalg.solve(B, np.column_stack([self.A, self.b_work]))
        rhs = sol[:, -1]
        # rounding noise on degenerate rows must not look infeasible
        rhs[(rhs < 0) & (rhs > -FEAS_TOL)] = 0.0
        self.T[:m] = sol
        cb = self.cost[self.basis]
        self.T[m, :-1] = self.cost - cb @ sol[:, :-1]
        self.T[m, -1] = -(cb @ rhs)

    def perturb(self):
        m = self.m
        rhs = self.T[:m, -1]
        scale = max(1.0, float(np.abs(self.b).max(initial=0.0)))
        # distinct deterministic offsets, golden-ratio spaced
        frac = (np.arange(1, m + 1) * 0.6180339887498949) % 1.0
        delta = np.where(rhs <= FEAS_TOL * scale, PERTURB * scale * (1.0 + frac), 0.0)
        self.b_work = self.b_work + self.A[:, self.basis] @ delta
        self.rounds += 1
        self.stall = 0
        self.reinvert()

    def restore(self):
        """Drop the perturbation; returns dual pivots spent (-1: infeasible)."""
        self.b_work = self.b
        self.reinvert()
        m = self.m
        n = self.A.shape[1]
        pivots = 0
        while True:
            rhs = self.T[:m, -1]
            r = int(np.argmin(rhs))
            if rhs[r] >= 0.0:
                return pivots
            row = self.T[r, :n]
            cand = np.flatnonzero(row < -self.tol)
            if cand.size == 0:
                return -1
            ratios = np.maximum(self.T[m, cand], 0.0) / -row[cand]
            j = int(cand[np.argmin(ratios)])
            self.core.pivot(self.T, r, j)
            self.basis[r] = j
            pivots += 1
            if pivots % max(50, m) == 0:
                self.reinvert()

    def run(self, budget, refactor_every):
        """Pivot until optimal/unbounded or ``budget`` pivots are spent."""
        total = 0
        fresh = True
        while True:
            chunk = min(refactor_every, budget - total)
            status, it, col, self.mode, self.stall, used = self.core.simplex_loop(
                self.T, self.basis, chunk, self.tol, self.stall_limit, self.mode, self.stall
            )
            self.used_bland |= used
            total += it
            if it:
                fresh = False
            if status == _backend.STALLED:
                if self.rounds < MAX_PERTURB:
                    self.perturb()
                else:
                    self.mode = _backend.BLAND
                    self.used_bland = True
                fresh = True
                continue
            if status == _backend.ITERATION_LIMIT:
                if total >= budget:
                    return status, total, col
                self.reinvert()
                fresh = True
                continue
            if status == _backend.OPTIMAL and self.perturbed:
                extra = self.restore()
                if extra < 0:
                    return status, total, col
                total += extra
                fresh = False
            if fresh:
                return status, total, col
            # confirm the verdict on a freshly reinverted tableau
            self.reinvert()
            fresh = True

    def values(self):
        x = np.zeros(self.A.shape[1])
        x[self.basis] = self.T[:self.m, -1]
        return x


def solve_lp(p: LpProblem, max_iters=None, *, tol=PIVOT_TOL, feas_tol=FEAS_TOL,
             stall_limit=STALL_LIMIT, bland=False, core=None) -> LpSolution:
    """Solve ``p`` with the two-phase simplex method.

    Parameters
    ----------
    p : LpProblem
    max_iters : int, optional
        Total pivot budget over both phases; defaults to
        ``50 * (n_vars + n_constraints)``.
    stall_limit : int
        Consecutive degenerate pivots tolerated before the anti-stalling
        remedy (right-hand side perturbation, then Bland's rule) kicks in.
    bland : bool
        Use Bland's rule throughout instead of Dantzig's.
    core : module, optional
        Backend override (``sdrsvm._backend.get(name)``).

    Returns
    -------
    LpSolution
        ``status`` is ``"optimal"``, ``"unbounded"`` (with ``ray`` set) or
        ``"infeasible"``.

    Raises
    ------
    LpIterationLimit
        When the pivot budget runs out; carries the last feasible point.
    """
    core = core or _backend.core
    m, n = p.A.shape
    if max_iters is None:
        max_iters = 50 * (n + m)
    if m == 0:
        if np.any(p.c < -tol):
            ray = np.where(p.c < -tol, 1.0, 0.0)
            return LpSolution(np.zeros(n), -np.inf, "unbounded", 0, ray=ray)
        return LpSolution(np.zeros(n), p.offset, "optimal", 0)

    A, b, cost, basis, n_struct = _standard_form(p)
    n_cols = A.shape[1]
    refactor_every = max(50, m)
    mode = _backend.BLAND_ALWAYS if bland else _backend.DANTZIG
    art_rows = np.flatnonzero(basis < 0)
    n_art = art_rows.size
    iters_total = 0
    used_bland = bland
    if n_art:
        art = np.zeros((m, n_art))
        art[art_rows, np.arange(n_art)] = 1.0
        basis[art_rows] = n_cols + np.arange(n_art)
        A1 = np.hstack([A, art])
        cost1 = np.concatenate([np.zeros(n_cols), np.ones(n_art)])
        ph = _Phase(A1, b, cost1, basis, core, tol, stall_limit, mode)
        status, it, _ = ph.run(max_iters, refactor_every)
        iters_total += it
        used_bland = ph.used_bland
        if status == _backend.ITERATION_LIMIT:
            raise LpIterationLimit(
                f"phase 1 did not finish within {max_iters} pivots", None, iters_total
            )
        infeas = -ph.T[ph.m, -1]
        if infeas > feas_tol * max(1.0, float(np.abs(b).max())):
            return LpSolution(np.zeros(n), np.nan, "infeasible", iters_total, bland_used=used_bland)
        keep = np.ones(m, dtype=bool)
        for i in range(m):
            if ph.basis[i] < n_cols:
                continue
            row = np.abs(ph.T[i, :n_cols])
            j = int(np.argmax(row))
            if row[j] > tol:
                core.pivot(ph.T, i, j)
                ph.basis[i] = j
            else:
                keep[i] = False  # redundant equality
        A = np.ascontiguousarray(A[keep])
        b = b[keep]
        basis = ph.basis[keep]
        mode = ph.mode

    ph = _Phase(A, b, cost, basis, core, tol, stall_limit, mode)
    status, it, col = ph.run(max_iters - iters_total, refactor_every)
    iters_total += it
    used_bland = used_bland or ph.used_bland

    x = ph.values()[:n_struct]
    if status == _backend.ITERATION_LIMIT:
        raise LpIterationLimit(
            f"simplex did not converge within {max_iters} pivots", x.copy(), iters_total
        )
    if status == _backend.UNBOUNDED:
        r = np.zeros(n_cols)
        r[col] = 1.0
        r[ph.basis] = -ph.T[:ph.m, col]
        return LpSolution(x, -np.inf, "unbounded", iters_total, ray=r[:n_struct],
                          bland_used=used_bland)
    viol = p.violation(x)
    if viol > feas_tol:
        logger.warning("LP solution violates constraints by %.3g", viol)
    return LpSolution(x, float(p.c @ x + p.offset), "optimal", iters_total,
                      bland_used=used_bland, max_violation=viol)


def dump_lp(p: LpProblem, path_or_file):
    """Write ``p`` in the plain-text fixed format (see README)."""
    lines = [
        "SDRLP 1",
        f"DIM {p.n_constraints} {p.n_vars}",
        "OFFSET " + repr(float(p.offset)),
        "OBJ " + " ".join(repr(float(v)) for v in p.c),
    ]
    for i in range(p.n_constraints):
        lines.append(
            f"ROW {p.senses[i]} {float(p.rhs[i])!r} " + " ".join(repr(float(v)) for v in p.A[i])
        )
    text = "\n".join(lines) + "\nEND\n"
    if hasattr(path_or_file, "write"):
        path_or_file.write(text)
    else:
        with open(path_or_file, "w") as fh:
            fh.write(text)


def load_lp(path_or_file) -> LpProblem:
    """Read a problem written by :func:`dump_lp`."""
    if hasattr(path_or_file, "read"):
        text = path_or_file.read()
    else:
        with open(path_or_file) as fh:
            text = fh.read()
    lines = text.strip().splitlines()
    if not lines or lines[0] != "SDRLP 1" or lines[-1] != "END":
        raise ValueError("not an SDRLP 1 file")
    _, m, n = lines[1].split()
    m, n = int(m), int(n)
    offset = float(lines[2].split()[1])
    c = np.array([float(v) for v in lines[3].split()[1:]])
    A = np.zeros((m, n))
    rhs = np.zeros(m)
    senses = []
    for i, line in enumerate(lines[4:4 + m]):
        parts = line.split()
        senses.append(parts[1])
        rhs[i] = float(parts[2])
        A[i] = [float(v) for v in parts[3:]]
    return LpProblem(c=c, A=A, rhs=rhs, senses=tuple(senses), offset=offset)
