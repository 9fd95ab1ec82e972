"""Comparison schemes: MRT/MRC half-duplex, FD without RIS, random RIS phases."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channels import ChannelSet
from .fris import FrisConfig, FrisResult, run_fris
from .system import PowerConfig, RisPhase, effective_channels, rate


def mrt_beamformer(ch: ChannelSet, ris: RisPhase | None, power: PowerConfig) -> np.ndarray:
    """``W`` proportional to the conjugate effective DL channels, total power ``P_max``."""
    H_D = effective_channels(ch, ris)[0]
    W = H_D.conj().T.copy()
    nrm = np.linalg.norm(W)
    if nrm > 0:
        W *= np.sqrt(power.P_max) / nrm
    return W


def mrc_ris_phases(ch: ChannelSet, beta: float = 0.9) -> RisPhase:
    """Phases that co-phase the cascade of the strongest DL user with its direct path.

    The user with the largest direct-channel norm is served by MRT on its
    direct channel; every reflected element is then rotated onto the phase of
    the direct signal.
    """
    K = ch.sizes.K
    if K == 0:
        return RisPhase(np.zeros(0), beta)
    if ch.sizes.M == 0:
        return RisPhase(np.zeros(K), beta)
    m = int(np.argmax(np.linalg.norm(ch.D, axis=1)))
    d = ch.D[m]
    nrm = np.linalg.norm(d)
    w = d.conj() / nrm if nrm > 0 else np.ones(ch.sizes.N_t) / np.sqrt(ch.sizes.N_t)
    direct = d @ w
    per_elem = ch.D2[m] * (ch.D1 @ w)
    ref = np.angle(direct) if abs(direct) > 0 else 0.0
    return RisPhase(ref - np.angle(per_elem), beta)


@dataclass
class HdReport:
    dl_rates: np.ndarray
    ul_rate: float

    @property
    def dl_sum(self) -> float:
        return float(np.sum(self.dl_rates))

    @property
    def sum_rate(self) -> float:
        """Time-shared sum: each direction is active half of the time."""
        return 0.5 * (self.dl_sum + self.ul_rate)


def hd_rates(ch: ChannelSet, ris: RisPhase | None, power: PowerConfig, W=None) -> HdReport:
    """Half-duplex rates: no CCI in the DL slot, no SI in the UL slot.

    The DL slot uses MRT on the effective channels unless ``W`` is given; the
    UL rate is the aggregate rate over the UL users.
    """
    H_D, _, H_U, _ = effective_channels(ch, ris)
    W = mrt_beamformer(ch, ris, power) if W is None else np.asarray(W)
    G = np.abs(H_D @ W) ** 2
    if G.size:
        sig = power.p_D * np.diag(G)
        inter = power.p_D * G.sum(axis=1) - sig
        dl = rate(sig / (inter + power.sigma2))
    else:
        dl = np.zeros(ch.sizes.M)
    ul = 0.0
    if ch.sizes.N:
        ul = float(rate(power.p_U * float(np.sum(np.abs(H_U) ** 2)) / power.sigma2_U))
    return HdReport(np.asarray(dl, float), ul)


def fd_no_ris(ch: ChannelSet, power: PowerConfig = PowerConfig(), cfg: FrisConfig = FrisConfig(),
              seed: int = 0) -> FrisResult:
    """The full-duplex scheme with the RIS removed."""
    return run_fris(ch.without_ris(), power, cfg, seed)


def random_phase_fd(ch: ChannelSet, power: PowerConfig = PowerConfig(), cfg: FrisConfig = FrisConfig(),
                    seed: int = 0) -> FrisResult:
    """Full duplex with random fixed RIS phases; only the beamformer is optimized."""
    beta = ch.meta.get("beta", 0.9)
    theta = np.random.default_rng(seed).uniform(0.0, 2 * np.pi, ch.sizes.K)
    return run_fris(ch, power, cfg, seed, fixed_phase=RisPhase(theta, beta))
