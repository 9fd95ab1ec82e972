"""Active BS beamforming for fixed RIS phases (SCA inner loop).

The M beams are stacked column by column into one vector ``[w_1; ...; w_M]``
of length ``N_t M`` before the real embedding used by the QCQP solver.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import qcqp
from .linalg import QuadraticForm, block_diag, complex_from_real, hermitian, real_embed
from .system import effective_channels
from .transforms import qos_budget


class QosInfeasible(RuntimeError):
    """The UL QoS cannot be met (negative interference budget)."""


@dataclass(frozen=True)
class BsSubproblemData:
    omega: np.ndarray     # (M, N_t, N_t): (1 + r_m) p_D D_wm^H D_wm
    gram: np.ndarray      # (M, N_t, N_t): p_D D_wm^H D_wm
    omega_ul: np.ndarray  # (N_t, N_t): S_w^H S_w
    n: np.ndarray         # D_C,m + sigma^2
    xi_U: float
    r: np.ndarray
    t: np.ndarray
    p_D: float
    anchor: np.ndarray    # N_t x M
    scale: float          # objective normalization (power units)

    @property
    def N_t(self) -> int:
        return self.omega_ul.shape[0]

    @property
    def M(self) -> int:
        return self.omega.shape[0]


def stack(W) -> np.ndarray:
    return np.asarray(W).T.ravel()


def unstack(x, N_t: int, M: int) -> np.ndarray:
    return np.asarray(x).reshape(M, N_t).T


def build_bs_data(ris, ch, r, t, power, t_th_U: float, anchor) -> BsSubproblemData:
    """Quadratic-form data of the beamforming subproblem at fixed phases."""
    xi_U = qos_budget(ris, ch, power, t_th_U)
    if xi_U < 0:
        raise QosInfeasible(f"UL QoS unattainable at these phases (xi_U = {xi_U:.3e})")
    H_D, H_C, _, H_S = effective_channels(ch, ris)
    r = np.asarray(r, float)
    t = np.asarray(t, float)
    gram = power.p_D * np.einsum("mi,mj->mij", H_D.conj(), H_D)
    omega = (1.0 + r)[:, None, None] * gram
    D_C = power.p_U * np.sum(np.abs(H_C) ** 2, axis=1)
    n = D_C + power.sigma2
    anchor = np.asarray(anchor, complex)
    signal = np.real(np.einsum("mi,mij,mj->m", anchor.T.conj(), omega, anchor.T)) if ch.sizes.M else np.zeros(0)
    scale = power.sigma2 + float(np.sum(signal))
    return BsSubproblemData(omega, gram, hermitian(H_S) @ H_S, n, xi_U, r, t, power.p_D, anchor, scale)


def exact_bs_objective(data: BsSubproblemData, W) -> float:
    """Dinkelbach surrogate as a function of ``W`` (phases fixed)."""
    W = np.asarray(W)
    own = np.real(np.einsum("im,mij,jm->m", W.conj(), data.omega, W))
    # all[m] = sum_m' w_m'^H gram_m w_m'
    allp = np.real(np.einsum("ik,mij,jk->m", W.conj(), data.gram, W))
    return float(np.sum(own - data.t * (allp + data.n)))


def ul_interference(data: BsSubproblemData, W) -> float:
    W = np.asarray(W)
    return data.p_D * float(np.real(np.einsum("im,ij,jm->", W.conj(), data.omega_ul, W)))


def sca_bs_objective(data: BsSubproblemData, anchor=None) -> QuadraticForm:
    """Concave minorant of :func:`exact_bs_objective`, tangent at ``anchor``."""
    Wp = data.anchor if anchor is None else np.asarray(anchor)
    Q = np.einsum("m,mij->ij", data.t, data.gram)
    A = block_diag([-Q] * data.M)
    b = stack(np.einsum("mij,jm->im", data.omega, Wp))
    c = float(np.sum(-np.real(np.einsum("im,mij,jm->m", Wp.conj(), data.omega, Wp)) - data.t * data.n))
    return QuadraticForm(A, b, c)


def sca_ul_constraint(data: BsSubproblemData, mode: str = "sca") -> QuadraticForm | None:
    """UL QoS as ``q(w) <= 0`` in the stacked variable; ``None`` if unconstrained.

    With independent unit-power DL symbols the SI power is
    ``p_D sum_m w_m^H Omega_U w_m``; the cross-stream products that the
    ``sca`` mode linearizes have zero mean, so both modes return the same
    exact convex constraint.
    """
    if mode not in ("sca", "direct"):
        raise ValueError(f"unknown UL constraint mode {mode!r}")
    if not np.isfinite(data.xi_U):
        return None
    A = block_diag([data.p_D * data.omega_ul] * data.M)
    return QuadraticForm(A, np.zeros(A.shape[0], complex), -data.xi_U)


def power_constraint(N_t: int, M: int, P_max: float) -> QuadraticForm:
    n = N_t * M
    return QuadraticForm(np.eye(n), np.zeros(n), -P_max)


@dataclass
class BsResult:
    W: np.ndarray
    objective: float
    iterations: int
    converged: bool
    history: list = field(default_factory=list)


def _strict_start(data, W, P_max, margin=1e-7):
    """Shrink ``W`` slightly so that it is strictly inside both constraints."""
    ratio = float(np.sum(np.abs(W) ** 2)) / P_max
    if np.isfinite(data.xi_U) and data.xi_U > 0:
        ratio = max(ratio, ul_interference(data, W) / data.xi_U)
    elif np.isfinite(data.xi_U):
        return np.zeros_like(W)
    if ratio >= 1 - margin:
        W = W * np.sqrt((1 - margin) / ratio)
    return W


def solve_bs(data: BsSubproblemData, power, *, T_w: int = 30, rho_w: float = 0.01,
             mode: str = "sca", solver_tol: float = 1e-7) -> BsResult:
    """SCA loop over the beamformer; returns the best feasible iterate.

    Stops when the normalized surrogate changes by at most ``rho_w`` or after
    ``T_w`` iterations.
    """
    N_t, M = data.N_t, data.M
    P = power.P_max
    cons = [real_embed(power_constraint(N_t, M, P).scaled(1.0 / P))]
    ul = sca_ul_constraint(data, mode)
    if ul is not None:
        if data.xi_U <= 0:
            # zero budget: only W = 0 is feasible
            W = np.zeros((N_t, M), complex)
            return BsResult(W, exact_bs_objective(data, W), 0, True, [exact_bs_objective(data, W)])
        cons.append(real_embed(ul.scaled(1.0 / data.xi_U)))
    scale = data.scale
    W = _strict_start(data, data.anchor, P)
    best_W, best_val = W, exact_bs_objective(data, W)
    history = [best_val]
    converged = False
    it = 0
    for it in range(1, T_w + 1):
        obj = real_embed(sca_bs_objective(data, W).scaled(1.0 / scale))
        sol = qcqp.solve(qcqp.ConvexQcqp(obj, cons), real_embed(stack(W)), tol=solver_tol)
        W = unstack(complex_from_real(sol.x), N_t, M)
        val = exact_bs_objective(data, W)
        history.append(val)
        if val > best_val:
            best_W, best_val = W, val
        if abs(history[-1] - history[-2]) <= rho_w * scale:
            converged = True
            break
    return BsResult(best_W, best_val, it, converged, history)
