"""Log-barrier interior-point solver for small convex QCQPs.

Problems are posed over real variables::

    maximize    x^T A0 x + 2 b0^T x + c0          (A0 negative semidefinite)
    subject to  x^T Ai x + 2 bi^T x + ci <= 0     (Ai positive semidefinite)

Complex problems are handled by the callers through
:func:`ris_fd_opt.linalg.real_embed`.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from .linalg import QuadraticForm

FEASIBILITY_TOL = 1e-8
CURVATURE_TOL = 1e-8


class QcqpInfeasible(RuntimeError):
    """No strictly feasible point exists; ``violation`` is the phase-1 optimum."""

    def __init__(self, violation: float):
        super().__init__(f"constraints infeasible (min max-violation {violation:.3e})")
        self.violation = violation


def _min_eig(A: np.ndarray) -> float:
    if not np.any(A):
        return 0.0
    off = A - np.diag(np.diag(A))
    if not np.any(off):
        return float(np.min(np.diag(A)))
    return float(np.linalg.eigvalsh(A)[0])


@dataclass(frozen=True)
class ConvexQcqp:
    """Maximize a concave quadratic subject to convex quadratic constraints."""

    objective: QuadraticForm
    constraints: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "constraints", tuple(self.constraints))
        forms = (self.objective,) + self.constraints
        if not all(q.is_real for q in forms):
            raise ValueError("ConvexQcqp works on real forms; use real_embed first")
        if any(q.dim != self.dim for q in self.constraints):
            raise ValueError("constraint dimension mismatch")

    @property
    def dim(self) -> int:
        return self.objective.dim

    def check_convexity(self) -> None:
        """Raise ``ValueError`` if a curvature invariant is violated."""
        A0 = self.objective.A
        if -_min_eig(-A0) > CURVATURE_TOL * max(1.0, np.linalg.norm(A0)):
            raise ValueError("objective is not concave")
        for i, q in enumerate(self.constraints):
            if _min_eig(q.A) < -CURVATURE_TOL * max(1.0, np.linalg.norm(q.A)):
                raise ValueError(f"constraint {i} is not convex")

    def constraint_values(self, x) -> np.ndarray:
        return _Stack(self.constraints, self.dim).values(np.asarray(x, float))

    def objective_value(self, x) -> float:
        return self.objective(np.asarray(x, float))


@dataclass
class QcqpSolution:
    x: np.ndarray
    objective_value: float
    kkt_residual: float
    status: str  # "optimal" | "max_iter" | "numerical_breakdown"
    duals: np.ndarray = field(default_factory=lambda: np.zeros(0))
    newton_steps: int = 0
    history: list = field(default_factory=list)


class _Stack:
    """Constraint values, gradients and weighted Hessians in vectorized form."""

    def __init__(self, forms, n: int):
        self.n = n
        self.m = len(forms)
        lin, diag, dense = [], [], []
        for i, q in enumerate(forms):
            A = q.A
            if not np.any(A):
                lin.append(i)
            elif not np.any(A - np.diag(np.diag(A))):
                diag.append(i)
            else:
                dense.append(i)
        self.order = np.array(lin + diag + dense, dtype=int)
        self.inverse = np.empty(self.m, dtype=int)
        self.inverse[self.order] = np.arange(self.m)
        self.nl, self.nd, self.nq = len(lin), len(diag), len(dense)
        def rows(idx, get):
            return np.array([get(forms[i]) for i in idx], dtype=float) if idx else None

        self.Lb, self.Lc = rows(lin, lambda q: q.b), rows(lin, lambda q: q.c)
        self.Dd, self.Db, self.Dc = (rows(diag, lambda q: np.diag(q.A)),
                                     rows(diag, lambda q: q.b), rows(diag, lambda q: q.c))
        self.QA, self.Qb, self.Qc = (rows(dense, lambda q: q.A),
                                     rows(dense, lambda q: q.b), rows(dense, lambda q: q.c))

    def values(self, x) -> np.ndarray:
        """Constraint values in the original order."""
        return self._values(x)[0][self.inverse]

    def _values(self, x):
        parts, cache = [], {}
        if self.nl:
            parts.append(2.0 * self.Lb @ x + self.Lc)
        if self.nd:
            parts.append(self.Dd @ (x * x) + 2.0 * self.Db @ x + self.Dc)
        if self.nq:
            Ax = self.QA @ x
            cache["Ax"] = Ax
            parts.append(Ax @ x + 2.0 * self.Qb @ x + self.Qc)
        return (np.concatenate(parts) if parts else np.zeros(0)), cache

    def max_value(self, x) -> float:
        v = self._values(x)[0]
        return float(v.max()) if v.size else -np.inf

    def grads(self, x, cache=None) -> np.ndarray:
        """Gradients stacked as rows, in internal order."""
        rows = []
        if self.nl:
            rows.append(2.0 * self.Lb)
        if self.nd:
            rows.append(2.0 * (self.Dd * x + self.Db))
        if self.nq:
            Ax = cache["Ax"] if cache and "Ax" in cache else self.QA @ x
            rows.append(2.0 * (Ax + self.Qb))
        return np.vstack(rows) if rows else np.zeros((0, self.n))

    def curvature_along(self, d) -> np.ndarray:
        """``d^T A_i d`` per constraint, in internal order."""
        parts = []
        if self.nl:
            parts.append(np.zeros(self.nl))
        if self.nd:
            parts.append(self.Dd @ (d * d))
        if self.nq:
            parts.append(np.einsum("i,kij,j->k", d, self.QA, d))
        return np.concatenate(parts) if parts else np.zeros(0)

    def weighted_curvature(self, w) -> np.ndarray:
        """``sum_i w_i * 2 A_i`` with ``w`` in internal order."""
        H = np.zeros((self.n, self.n))
        if self.nd:
            H[np.diag_indices(self.n)] += 2.0 * (w[self.nl:self.nl + self.nd] @ self.Dd)
        if self.nq:
            H += 2.0 * np.tensordot(w[self.nl + self.nd:], self.QA, axes=1)
        return H


def kkt_residual(p: ConvexQcqp, x, duals) -> float:
    """Stationarity plus complementary-slackness residual of ``(x, duals)``."""
    x = np.asarray(x, float)
    duals = np.asarray(duals, float)
    if np.any(duals < 0):
        raise ValueError("duals must be nonnegative")
    grad = p.objective.gradient(x)
    if not p.constraints:
        return float(np.linalg.norm(grad))
    st = _Stack(p.constraints, p.dim)
    f, cache = st._values(x)
    G = st.grads(x, cache)
    mu = duals[st.order]
    return float(np.linalg.norm(grad - G.T @ mu) + np.sum(np.abs(mu * f)))


def _newton_direction(H, g):
    try:
        return -cho_solve(cho_factor(H, check_finite=False), g, check_finite=False), False
    except np.linalg.LinAlgError:
        pass
    reg = 1e-10 * max(np.trace(H), 1e-300)
    Hr = H + reg * np.eye(H.shape[0])
    try:
        return -cho_solve(cho_factor(Hr, check_finite=False), g, check_finite=False), False
    except np.linalg.LinAlgError:
        return -np.linalg.lstsq(Hr, g, rcond=None)[0], True


def _max_step(f, d1, d2) -> float:
    """Largest ``s`` keeping every ``f + s d1 + s^2 d2`` negative (``f < 0``)."""
    s_max = np.inf
    lin = d2 == 0
    grow = lin & (d1 > 0)
    if np.any(grow):
        s_max = float(np.min(-f[grow] / d1[grow]))
    q = ~lin
    if np.any(q):
        a, b, c = d2[q], d1[q], f[q]
        disc = b * b - 4 * a * c
        ok = disc >= 0
        with np.errstate(invalid="ignore", divide="ignore"):
            root = (-b + np.sqrt(np.where(ok, disc, 0.0))) / (2 * a)
        # a > 0 (convex): the positive root always exists since c < 0
        pos = ok & (root > 0)
        if np.any(pos):
            s_max = min(s_max, float(np.min(root[pos])))
    return s_max


def _center(A0, b0, st: _Stack, x, t, newton_tol, alpha, beta, max_newton,
            stop=None):
    """Newton centering on ``-t f0 - sum log(-f_i)``.  Returns (x, f, steps, broke).

    Along a search direction every constraint and the objective are exact
    quadratics in the step length, so the backtracking search works on
    scalar coefficients and starts inside the feasible interval.
    """
    steps = 0
    broke = False
    f, cache = st._values(x)
    for _ in range(max_newton):
        inv = 1.0 / (-f)
        G = st.grads(x, cache)
        A0x = A0 @ x
        g = -t * 2.0 * (A0x + b0) + G.T @ inv
        Gs = G * inv[:, None]
        H = -t * 2.0 * A0 + st.weighted_curvature(inv) + Gs.T @ Gs
        dx, bad = _newton_direction(H, g)
        broke = broke or bad
        lam2 = float(-g @ dx)
        steps += 1
        if lam2 / 2.0 <= newton_tol or not np.isfinite(lam2):
            break
        d1 = G @ dx
        d2 = st.curvature_along(dx)
        o1 = 2.0 * (A0x + b0) @ dx
        o2 = float(dx @ A0 @ dx)
        s = min(1.0, 0.99 * _max_step(f, d1, d2))
        while s >= 1e-14:
            fn = f + s * d1 + s * s * d2
            if np.all(fn < 0):
                dphi = -t * (s * o1 + s * s * o2) - np.sum(np.log(fn / f))
                if dphi <= -alpha * s * lam2:
                    break
            s *= beta
        if s < 1e-14:
            break
        xn = x + s * dx
        fn, cn = st._values(xn)
        if not np.all(fn < 0):
            break
        x, f, cache = xn, fn, cn
        if stop is not None and stop(x, f):
            break
    return x, f, steps, broke


def find_feasible(p: ConvexQcqp, x0=None, *, tol: float = 1e-10, max_outer: int = 60):
    """Phase-1: return a strictly feasible point or raise :class:`QcqpInfeasible`.

    Solves ``min s  s.t.  q_i(x) <= s, s >= -1`` by the barrier method and
    stops as soon as the current point is strictly interior.
    """
    n = p.dim
    x0 = np.zeros(n) if x0 is None else np.asarray(x0, float)
    if not p.constraints:
        return x0
    st = _Stack(p.constraints, n)
    f0 = st.max_value(x0)
    if f0 < 0:
        return x0
    # augmented variable z = (x, s): constraints q_i(x) - s <= 0 and -s - 1 <= 0
    aug = []
    for q in p.constraints:
        A = np.zeros((n + 1, n + 1))
        A[:n, :n] = q.A
        b = np.append(q.b, -0.5)
        aug.append(QuadraticForm(A, b, q.c))
    aug.append(QuadraticForm(np.zeros((n + 1, n + 1)), np.append(np.zeros(n), -0.5), -1.0))
    sta = _Stack(aug, n + 1)
    A0 = np.zeros((n + 1, n + 1))
    b0 = np.zeros(n + 1)
    b0[-1] = -0.5  # maximize -s
    z = np.append(x0, max(f0, 0.0) + 1.0)
    margin = 1e-9

    def interior(zz, _f):
        return st.max_value(zz[:n]) < -margin

    t = 1.0
    m = len(aug)
    for _ in range(max_outer):
        z, _, _, _ = _center(A0, b0, sta, z, t, 1e-10, 0.3, 0.8, 200, stop=interior)
        if st.max_value(z[:n]) < 0 and (interior(z, None) or m / t < tol):
            return z[:n]
        if m / t < tol:
            break
        t *= 10.0
    raise QcqpInfeasible(float(st.max_value(z[:n])))


def solve(p: ConvexQcqp, x0=None, tol: float = 1e-7, *, t0: float = 1.0,
          mu: float = 10.0, newton_tol: float = 1e-9, alpha: float = 0.3,
          beta: float = 0.8, max_newton: int = 100, max_outer: int = 50,
          kkt_tol: float | None = None) -> QcqpSolution:
    """Solve ``p`` by the log-barrier method.

    ``x0`` should be strictly feasible; otherwise a phase-1 search is run
    first (and :class:`QcqpInfeasible` propagates if it fails).  Terminates
    when the duality-gap estimate ``m / t`` drops below ``tol``.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    n = p.dim
    x = np.zeros(n) if x0 is None else np.array(x0, dtype=float)
    A0, b0 = p.objective.A, p.objective.b
    m = len(p.constraints)
    if m == 0:
        return _solve_unconstrained(p)
    st = _Stack(p.constraints, n)
    if not st.max_value(x) < 0:
        x = find_feasible(p, x)
    t = t0
    steps = 0
    status = "max_iter"
    broke_any = False
    history = [p.objective(x)]
    for _ in range(max_outer):
        x, f, k, broke = _center(A0, b0, st, x, t, newton_tol, alpha, beta, max_newton)
        steps += k
        broke_any = broke_any or broke
        history.append(p.objective(x))
        if m / t <= tol:
            status = "optimal"
            break
        t *= mu
    duals, kkt = _polished_duals(p, st, x, t)
    if kkt_tol is None:
        kkt_tol = 1e-4 * max(1.0, np.abs(history[-1])) + 10 * tol
    if status == "optimal" and broke_any and kkt > kkt_tol:
        status = "numerical_breakdown"
    return QcqpSolution(x, p.objective(x), kkt, status, duals, steps, history)


def _polished_duals(p, st: _Stack, x, t):
    """Barrier duals, replaced by an active-set least-squares fit when better."""
    f, cache = st._values(x)
    barrier = (1.0 / (t * (-f)))[st.inverse]
    best = (barrier, kkt_residual(p, x, barrier))
    G = st.grads(x, cache)[st.inverse]
    fo = f[st.inverse]
    active = -fo <= 1e-6 * (1.0 + np.abs(fo).max())
    if np.any(active):
        grad = p.objective.gradient(x)
        mu_a = np.linalg.lstsq(G[active].T, grad, rcond=None)[0]
        if np.all(mu_a >= 0):
            mu = np.zeros_like(barrier)
            mu[active] = mu_a
            r = kkt_residual(p, x, mu)
            if r < best[1]:
                best = (mu, r)
    return best


def _solve_unconstrained(p: ConvexQcqp) -> QcqpSolution:
    A, b = p.objective.A, p.objective.b
    x = np.linalg.lstsq(A, -b, rcond=None)[0]
    res = float(np.linalg.norm(p.objective.gradient(x)))
    status = "optimal" if res <= 1e-8 * max(1.0, np.linalg.norm(b)) else "max_iter"
    return QcqpSolution(x, p.objective(x), res, status, np.zeros(0), 1, [p.objective(x)])
