"""Passive RIS phase design for a fixed beamformer (PCCP inner loop).

The variable is the unit-modulus phasor ``phi = e^{j theta}``; the amplitude
``beta`` is folded into the cascade gains, so every received power is a
quadratic form in ``phi``.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import qcqp
from .linalg import QuadraticForm, complex_from_real, real_embed
from .system import RisPhase, cascade_affine
from .transforms import qos_threshold


@dataclass(frozen=True)
class ThetaQuadratics:
    """Per-user ``phi^H (Omega_m - Psi_m) phi + 2 Re{zeta_m phi} + c_m`` and the UL analogue.

    ``zeta`` rows are stored as row vectors (the form's ``b`` is their
    conjugate). ``Omega_U`` is ``None`` when the UL QoS is inactive.
    """

    Omega: np.ndarray
    Psi: np.ndarray
    zeta: np.ndarray
    c: np.ndarray
    Omega_U: np.ndarray | None = None
    Psi_U: np.ndarray | None = None
    zeta_U: np.ndarray | None = None
    c_U: float = 0.0
    beta: float = 0.9

    @property
    def K(self) -> int:
        return self.Omega.shape[1]

    @property
    def has_ul(self) -> bool:
        return self.Omega_U is not None

    def terms(self, phi) -> np.ndarray:
        phi = np.asarray(phi)
        quad = np.einsum("i,mij,j->m", phi.conj(), self.Omega - self.Psi, phi)
        return np.real(quad) + 2 * np.real(self.zeta @ phi) + self.c

    def objective(self, phi) -> float:
        """Exact Dinkelbach objective at phasor ``phi``."""
        return float(np.sum(self.terms(phi)))

    def ul_value(self, phi) -> float:
        """``U_S - t_bar (U_I + sigma_U^2)``; nonnegative iff the UL QoS holds."""
        if not self.has_ul:
            return np.inf
        phi = np.asarray(phi)
        quad = np.vdot(phi, (self.Omega_U - self.Psi_U) @ phi)
        return float(np.real(quad) + 2 * np.real(self.zeta_U @ phi) + self.c_U)


def _gram(G):
    return G.conj().T @ G


def build_theta_quadratics(W, ch, r, t, power, t_th_U: float, beta: float = 0.9) -> ThetaQuadratics:
    """Expand every received power ``p ||a + G phi||^2`` into its quadratic form."""
    W = np.asarray(W, complex)
    M, N, K = ch.sizes.M, ch.sizes.N, ch.sizes.K
    r = np.asarray(r, float)
    t = np.asarray(t, float)
    Omega = np.zeros((M, K, K), complex)
    Psi = np.zeros((M, K, K), complex)
    zeta = np.zeros((M, K), complex)
    c = np.zeros(M)
    eye_N = np.eye(N)
    for m in range(M):
        rows = slice(m, m + 1)
        for mp in range(M):
            f = cascade_affine(ch.D[rows], ch.D2[rows], ch.D1, W[:, mp], beta)
            a, G = f.base, f.gain
            w_sig = (1.0 + r[m]) * power.p_D if mp == m else 0.0
            g, lin, cst = _gram(G), a.conj() @ G, float(np.real(np.vdot(a, a)))
            Omega[m] += w_sig * g
            Psi[m] += t[m] * power.p_D * g
            zeta[m] += (w_sig - t[m] * power.p_D) * lin
            c[m] += (w_sig - t[m] * power.p_D) * cst
        for n in range(N):
            f = cascade_affine(ch.V[rows], ch.D2[rows], ch.U1, eye_N[:, n], beta)
            a, G = f.base, f.gain
            Psi[m] += t[m] * power.p_U * _gram(G)
            zeta[m] -= t[m] * power.p_U * (a.conj() @ G)
            c[m] -= t[m] * power.p_U * float(np.real(np.vdot(a, a)))
        c[m] -= t[m] * power.sigma2
    t_bar = qos_threshold(t_th_U)
    if N == 0 or t_bar == 0:
        return ThetaQuadratics(Omega, Psi, zeta, c, beta=beta)
    Omega_U = np.zeros((K, K), complex)
    Psi_U = np.zeros((K, K), complex)
    zeta_U = np.zeros(K, complex)
    c_U = -t_bar * power.sigma2_U
    for n in range(N):
        f = cascade_affine(ch.U, ch.U2, ch.U1, eye_N[:, n], beta)
        Omega_U += power.p_U * _gram(f.gain)
        zeta_U += power.p_U * (f.base.conj() @ f.gain)
        c_U += power.p_U * float(np.real(np.vdot(f.base, f.base)))
    for m in range(M):
        f = cascade_affine(ch.S, ch.U2, ch.D1, W[:, m], beta)
        Psi_U += t_bar * power.p_D * _gram(f.gain)
        zeta_U -= t_bar * power.p_D * (f.base.conj() @ f.gain)
        c_U -= t_bar * power.p_D * float(np.real(np.vdot(f.base, f.base)))
    return ThetaQuadratics(Omega, Psi, zeta, c, Omega_U, Psi_U, zeta_U, float(c_U), beta)


def _minorant(Omega, Psi, zeta, c, anchor) -> QuadraticForm:
    """Linearize ``phi^H Omega phi`` at ``anchor``; keeps ``-phi^H Psi phi``."""
    q = np.asarray(anchor, complex)
    Oq = Omega @ q
    return QuadraticForm(-Psi, zeta.conj() + Oq, c - float(np.real(np.vdot(q, Oq))))


def sca_theta_surrogates(tq: ThetaQuadratics, anchor):
    """Concave minorants of the objective and of the UL QoS left-hand side.

    Returns ``(objective, ul)``; ``ul`` is ``None`` when the QoS is inactive.
    Both are tangent to the exact functions at ``anchor``.
    """
    obj = _minorant(tq.Omega.sum(axis=0), tq.Psi.sum(axis=0), tq.zeta.sum(axis=0),
                    float(tq.c.sum()), anchor)
    ul = None
    if tq.has_ul:
        ul = _minorant(tq.Omega_U, tq.Psi_U, tq.zeta_U, tq.c_U, anchor)
    return obj, ul


@dataclass
class PccpState:
    lam: float
    anchor: np.ndarray
    a: np.ndarray | None = None
    b: np.ndarray | None = None

    def __post_init__(self):
        if self.lam < 0:
            raise ValueError("penalty must be nonnegative")
        K = len(self.anchor)
        if self.a is None:
            self.a = np.zeros(K)
        if self.b is None:
            self.b = np.zeros(K)


def lambda_schedule(lambda0: float, kappa: float, lambda_max: float, steps: int) -> list:
    """Penalties used at PCCP steps ``1..steps``: ``min(kappa * previous, lambda_max)``."""
    if kappa < 1:
        raise ValueError("kappa must be at least 1")
    out, lam = [], lambda0
    for _ in range(steps):
        lam = min(kappa * lam, lambda_max)
        out.append(lam)
    return out


def _pad(q: QuadraticForm, extra: int) -> QuadraticForm:
    n = q.A.shape[0]
    A = np.zeros((n + extra, n + extra))
    A[:n, :n] = q.A
    return QuadraticForm(A, np.concatenate([q.b, np.zeros(extra)]), q.c)


def _pccp_program(tq, anchor, lam, scale):
    """Real convex program over ``x = [Re phi; Im phi; a; b]`` (length 4K)."""
    K = tq.K
    n = 4 * K
    obj_c, ul_c = sca_theta_surrogates(tq, anchor)
    obj = _pad(real_embed(obj_c.scaled(1.0 / scale)), 2 * K)
    obj = QuadraticForm(obj.A, obj.b - np.concatenate([np.zeros(2 * K), 0.5 * lam * np.ones(2 * K)]), obj.c)
    cons = []
    if ul_c is not None:
        ul_scale = max(abs(tq.c_U) + float(np.real(np.trace(tq.Omega_U))), 1e-300)
        cons.append(_pad(real_embed(ul_c.scaled(-1.0 / ul_scale)), 2 * K))
    q = np.asarray(anchor, complex)
    for k in range(K):
        # |phi_k|^2 - 1 - a_k <= 0
        A = np.zeros((n, n))
        A[k, k] = A[K + k, K + k] = 1.0
        b = np.zeros(n)
        b[2 * K + k] = -0.5
        cons.append(QuadraticForm(A, b, -1.0))
        # 1 - b_k - (2 Re{conj(q_k) phi_k} - |q_k|^2) <= 0
        b = np.zeros(n)
        b[k], b[K + k], b[3 * K + k] = -q[k].real, -q[k].imag, -0.5
        cons.append(QuadraticForm(np.zeros((n, n)), b, 1.0 + abs(q[k]) ** 2))
    for j in range(2 * K, n):
        b = np.zeros(n)
        b[j] = -0.5
        cons.append(QuadraticForm(np.zeros((n, n)), b, 0.0))
    return qcqp.ConvexQcqp(obj, cons)


def _objective_scale(tq, anchor) -> float:
    """Signal-power scale used to normalize the objective."""
    q = np.asarray(anchor, complex)
    sig = np.real(np.einsum("i,mij,j->m", q.conj(), tq.Omega, q))
    return max(float(np.sum(np.abs(sig))) + float(np.sum(np.abs(tq.c))), 1e-300)


def pccp_step(tq: ThetaQuadratics, state: PccpState, *, solver_tol: float = 1e-7, scale=None):
    """One penalized convex step. Returns ``(phi_next, a, b, penalized objective)``.

    The penalized objective is in the units of ``tq`` (unnormalized).
    """
    K = tq.K
    q = np.asarray(state.anchor, complex)
    scale = _objective_scale(tq, q) if scale is None else scale
    prog = _pccp_program(tq, q, state.lam, scale)
    mod2 = np.abs(q) ** 2
    x0 = np.concatenate([q.real, q.imag, np.maximum(mod2 - 1, 0) + 1, np.maximum(1 - mod2, 0) + 1])
    sol = qcqp.solve(prog, x0, tol=solver_tol)
    phi = complex_from_real(sol.x[:2 * K])
    a = np.maximum(sol.x[2 * K:3 * K], 0.0)
    b = np.maximum(sol.x[3 * K:], 0.0)
    obj_c, _ = sca_theta_surrogates(tq, q)
    value = obj_c(phi) - state.lam * scale * float(np.sum(a + b))
    return phi, a, b, value


def project_unit(phi) -> np.ndarray:
    phi = np.asarray(phi, complex)
    mag = np.abs(phi)
    out = np.ones_like(phi)
    nz = mag > 0
    out[nz] = phi[nz] / mag[nz]
    return out


@dataclass
class RisResult:
    phase: RisPhase
    objective: float
    iterations: int
    converged: bool
    slack: float  # pre-projection slack sum of the returned iterate
    fallback: bool = False
    history: list = field(default_factory=list)


def solve_ris(tq: ThetaQuadratics, theta_init, *, kappa: float = 3.0, lambda0: float = 1.0,
              lambda_max: float = 1e4, rho_theta: float = 0.01, T_theta: int = 30,
              slack_tol: float = 0.05, solver_tol: float = 1e-7) -> RisResult:
    """PCCP loop over the phases followed by projection to the unit circle.

    Convergence needs both a normalized objective change of at most
    ``rho_theta`` and a slack sum of at most ``slack_tol``. The best projected
    iterate that meets the exact UL QoS is returned (the initial phases
    included); ``fallback`` flags the case where no iterate improved on them.
    """
    if kappa < 1:
        raise ValueError("kappa must be at least 1")
    theta_init = theta_init if isinstance(theta_init, RisPhase) else RisPhase(theta_init, tq.beta)
    q = theta_init.phasor
    scale = _objective_scale(tq, q)
    best_phi, best_val, best_slack = q, tq.objective(q), 0.0
    if tq.has_ul and tq.ul_value(q) < 0:
        best_val = -np.inf
    history = [tq.objective(q)]
    lam, prev, slack, converged, it = lambda0, history[0], np.inf, False, 0
    for it in range(1, T_theta + 1):
        try:
            phi, a, b, _ = pccp_step(tq, PccpState(lam, q), solver_tol=solver_tol, scale=scale)
        except qcqp.QcqpInfeasible:
            break
        slack = float(np.sum(a + b))
        cand = project_unit(phi)
        val = tq.objective(cand)
        if val > best_val and (not tq.has_ul or tq.ul_value(cand) >= 0):
            best_phi, best_val, best_slack = cand, val, slack
        cur = tq.objective(phi)
        history.append(cur)
        q = phi
        lam = min(kappa * lam, lambda_max)
        if abs(cur - prev) <= rho_theta * scale and slack <= slack_tol:
            converged = True
            break
        prev = cur
    fallback = best_phi is theta_init.phasor
    if not np.isfinite(best_val):
        best_val = tq.objective(best_phi)
    return RisResult(RisPhase.from_phasor(best_phi, tq.beta), best_val, it, converged, best_slack,
                     fallback, history)
