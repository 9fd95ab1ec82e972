"""Received powers, SINRs and rates of the RIS-assisted full-duplex link.

Symbols are unit-variance and mutually independent, so every received power
is an expected value: the sum over streams of ``||channel * beam||^2`` times
the stream's transmit power.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .channels import ChannelSet


@dataclass(frozen=True)
class PowerConfig:
    p_D: float = 1.0
    p_U: float = 1e-3
    P_max: float = 1.0
    sigma2: float = 1e-12
    sigma2_U: float = 1e-12

    def __post_init__(self):
        if min(self.p_D, self.p_U, self.P_max, self.sigma2, self.sigma2_U) <= 0:
            raise ValueError("powers must be positive")


@dataclass(frozen=True)
class RisPhase:
    """Phase angles ``theta`` and fixed amplitude ``beta``."""

    theta: np.ndarray
    beta: float = 0.9

    def __post_init__(self):
        th = np.mod(np.asarray(self.theta, dtype=float).ravel(), 2 * np.pi)
        if not np.all(np.isfinite(th)):
            raise ValueError("phases must be finite")
        if not 0 <= self.beta <= 1:
            raise ValueError("beta must lie in [0, 1]")
        object.__setattr__(self, "theta", th)

    @classmethod
    def from_phasor(cls, phasor, beta: float = 0.9) -> "RisPhase":
        return cls(np.angle(np.asarray(phasor)), beta)

    @property
    def K(self) -> int:
        return self.theta.shape[0]

    @property
    def phasor(self) -> np.ndarray:
        """Unit-modulus vector ``e^{j theta}``."""
        return np.exp(1j * self.theta)

    @property
    def reflection(self) -> np.ndarray:
        """Realized reflection coefficients ``beta e^{j theta}``."""
        return self.beta * self.phasor


@dataclass(frozen=True)
class AffineThetaMap:
    """``signal(phasor) = base + gain @ phasor`` for a received vector."""

    base: np.ndarray
    gain: np.ndarray

    def __call__(self, phasor) -> np.ndarray:
        return self.base + self.gain @ np.asarray(phasor)

    def power(self, phasor) -> float:
        s = self(phasor)
        return float(np.real(np.vdot(s, s)))


def cascade_affine(X, A, B, v, beta: float) -> AffineThetaMap:
    """Split ``(X + A diag(beta e^{j theta}) B) v`` into ``X v + G e^{j theta}``."""
    X, A, B, v = (np.atleast_2d(X), np.atleast_2d(A), np.atleast_2d(B), np.asarray(v))
    if X.shape[1] != B.shape[1] or A.shape[1] != B.shape[0] or A.shape[0] != X.shape[0]:
        raise ValueError("cascade_affine: dimensions are not conformal")
    if v.shape[0] != X.shape[1]:
        raise ValueError("cascade_affine: v has the wrong length")
    return AffineThetaMap(X @ v, beta * A * (B @ v)[None, :])


def _reflect(A, refl, B):
    """``A diag(refl) B``."""
    return (A * refl[None, :]) @ B


def effective_channels(ch: ChannelSet, ris: RisPhase | None):
    """Direct-plus-cascaded channels ``(H_D, H_C, H_U, H_S)`` at the given phases.

    ``H_D = D + D2 Θ D1``, ``H_C = V + D2 Θ U1``, ``H_U = U + U2 Θ U1`` and
    ``H_S = S + U2 Θ D1``.
    """
    if ris is None or ch.sizes.K == 0:
        return ch.D, ch.V, ch.U, ch.S
    if ris.K != ch.sizes.K:
        raise ValueError("RIS phase length does not match K")
    r = ris.reflection
    return (ch.D + _reflect(ch.D2, r, ch.D1), ch.V + _reflect(ch.D2, r, ch.U1),
            ch.U + _reflect(ch.U2, r, ch.U1), ch.S + _reflect(ch.U2, r, ch.D1))


def dl_terms(W, ris, ch: ChannelSet, power: PowerConfig):
    """Per-user ``(D_S, D_I, D_C)`` powers."""
    H_D, H_C, _, _ = effective_channels(ch, ris)
    G = np.abs(H_D @ W) ** 2  # G[m, m'] = |h_m w_m'|^2
    D_S = power.p_D * np.diag(G).copy() if G.size else np.zeros(ch.sizes.M)
    D_I = power.p_D * G.sum(axis=1) - D_S if G.size else np.zeros(ch.sizes.M)
    D_C = power.p_U * np.sum(np.abs(H_C) ** 2, axis=1)
    return D_S, D_I, D_C


def dl_sinrs(W, ris, ch: ChannelSet, power: PowerConfig) -> np.ndarray:
    D_S, D_I, D_C = dl_terms(W, ris, ch, power)
    return D_S / (D_C + D_I + power.sigma2)


def dl_sinr(m: int, W, ris, ch: ChannelSet, power: PowerConfig) -> float:
    return float(dl_sinrs(W, ris, ch, power)[m])


def ul_terms(W, ris, ch: ChannelSet, power: PowerConfig):
    """Aggregate UL signal ``U_S`` and SI power ``U_I``."""
    _, _, H_U, H_S = effective_channels(ch, ris)
    U_S = power.p_U * float(np.sum(np.abs(H_U) ** 2))
    U_I = power.p_D * float(np.sum(np.abs(H_S @ W) ** 2))
    return U_S, U_I


def ul_aggregate_sinr(W, ris, ch: ChannelSet, power: PowerConfig) -> float:
    if ch.sizes.N == 0:
        return 0.0
    U_S, U_I = ul_terms(W, ris, ch, power)
    return U_S / (U_I + power.sigma2_U)


def ul_mrc_sinrs(W, ris, ch: ChannelSet, power: PowerConfig) -> np.ndarray:
    """Per-UL-user SINR under MRC combining (reporting only)."""
    _, _, H_U, H_S = effective_channels(ch, ris)
    N = ch.sizes.N
    out = np.zeros(N)
    SI = H_S @ W
    for n in range(N):
        h = H_U[:, n]
        nrm2 = float(np.real(np.vdot(h, h)))
        if nrm2 == 0:
            continue
        cross = np.abs(h.conj() @ H_U) ** 2
        sig = power.p_U * cross[n]
        inter = power.p_U * (cross.sum() - cross[n]) + power.p_D * float(np.sum(np.abs(h.conj() @ SI) ** 2))
        out[n] = sig / (inter + power.sigma2_U * nrm2)
    return out


def rate(sinr):
    return np.log2(1.0 + np.asarray(sinr))


@dataclass
class RateReport:
    dl_sinr: np.ndarray
    dl_rates: np.ndarray
    ul_aggregate_sinr: float
    ul_aggregate_rate: float
    ul_sinr: np.ndarray
    ul_rates: np.ndarray
    extra: dict = field(default_factory=dict)

    @property
    def dl_sum(self) -> float:
        return float(np.sum(self.dl_rates))

    @property
    def ul_sum(self) -> float:
        return float(np.sum(self.ul_rates))

    @property
    def sum_rate(self) -> float:
        """DL sum rate plus aggregate UL rate."""
        return self.dl_sum + self.ul_aggregate_rate

    @property
    def jensen_holds(self) -> bool:
        """Whether the per-user MRC UL sum rate dominates the aggregate rate."""
        return self.ul_sum >= self.ul_aggregate_rate

    def csv_fields(self, prefix: str = "") -> dict:
        row = {f"{prefix}dl_sum": self.dl_sum, f"{prefix}ul_aggregate": self.ul_aggregate_rate,
               f"{prefix}ul_mrc_sum": self.ul_sum, f"{prefix}sum_rate": self.sum_rate}
        row.update({f"{prefix}dl_rate_{m}": float(r) for m, r in enumerate(self.dl_rates)})
        row.update({f"{prefix}ul_rate_{n}": float(r) for n, r in enumerate(self.ul_rates)})
        return row


def rates(W, ris, ch: ChannelSet, power: PowerConfig) -> RateReport:
    g_dl = dl_sinrs(W, ris, ch, power)
    g_ul = ul_aggregate_sinr(W, ris, ch, power)
    g_n = ul_mrc_sinrs(W, ris, ch, power)
    return RateReport(g_dl, rate(g_dl), g_ul, float(rate(g_ul)), g_n, rate(g_n))
