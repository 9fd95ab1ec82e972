"""Lagrangian-dual and Dinkelbach transforms, and the UL QoS rewrite."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .system import dl_terms, ul_terms

LN2 = np.log(2.0)


@dataclass(frozen=True)
class TransformState:
    r: np.ndarray
    t: np.ndarray
    t_bar: float
    xi_U: float


def qos_threshold(t_th_U: float) -> float:
    """SINR-domain threshold ``2^t - 1`` of a rate threshold in bit/s/Hz."""
    if t_th_U < 0:
        raise ValueError("rate threshold must be nonnegative")
    return 2.0 ** t_th_U - 1.0


def rate_threshold_from_db(gamma_db: float) -> float:
    """Rate threshold whose SINR-domain equivalent is ``10^(gamma/10)``."""
    return float(np.log2(1.0 + 10.0 ** (gamma_db / 10.0)))


def optimal_r(W, ris, ch, power) -> np.ndarray:
    """Optimal auxiliaries of the Lagrangian dual transform (the DL SINRs)."""
    D_S, D_I, D_C = dl_terms(W, ris, ch, power)
    return D_S / (D_I + D_C + power.sigma2)


def lagrangian_objective(W, ris, r, ch, power) -> float:
    """Lagrangian-dual rewrite of the DL sum rate, in bit/s/Hz.

    ``[sum ln(1+r) - sum r + sum (1+r) D_S / (D_S + D_I + D_C + sigma^2)] / ln 2``;
    the common ``1/ln 2`` keeps the optimum in ``r`` at the SINR.
    """
    r = np.asarray(r, dtype=float)
    if np.any(r < 0):
        raise ValueError("r must be nonnegative")
    D_S, D_I, D_C = dl_terms(W, ris, ch, power)
    frac = (1.0 + r) * D_S / (D_S + D_I + D_C + power.sigma2)
    return float(np.sum(np.log1p(r) - r + frac) / LN2)


def dinkelbach_t(W_prev, ris_prev, r, ch, power) -> np.ndarray:
    """Dinkelbach ratios evaluated at the previous iterate."""
    r = np.asarray(r, dtype=float)
    D_S, D_I, D_C = dl_terms(W_prev, ris_prev, ch, power)
    den = D_S + D_I + D_C + power.sigma2
    with np.errstate(invalid="ignore", divide="ignore"):
        t = np.where(den > 0, (1.0 + r) * D_S / den, 0.0)
    return t


def dinkelbach_terms(W, ris, r, t, ch, power) -> np.ndarray:
    """Per-user terms ``(1+r) D_S - t (D_S + D_I + D_C + sigma^2)``."""
    D_S, D_I, D_C = dl_terms(W, ris, ch, power)
    return (1.0 + np.asarray(r)) * D_S - np.asarray(t) * (D_S + D_I + D_C + power.sigma2)


def dinkelbach_objective(W, ris, r, t, ch, power) -> float:
    return float(np.sum(dinkelbach_terms(W, ris, r, t, ch, power)))


def qos_budget(ris, ch, power, t_th_U: float) -> float:
    """UL interference budget ``xi_U = (U_S - t_bar sigma_U^2) / t_bar``.

    The budget is infinite when there is no UL user or no threshold; a
    negative value means the QoS cannot be met at these phases.
    """
    t_bar = qos_threshold(t_th_U)
    if ch.sizes.N == 0 or t_bar == 0:
        return np.inf
    W0 = np.zeros((ch.sizes.N_t, ch.sizes.M), complex)
    U_S, _ = ul_terms(W0, ris, ch, power)
    return (U_S - t_bar * power.sigma2_U) / t_bar


def qos_satisfied(W, ris, ch, power, t_th_U: float, rel_tol: float = 0.0) -> bool:
    """Exact aggregate UL QoS ``U_S >= t_bar (U_I + sigma_U^2)``."""
    t_bar = qos_threshold(t_th_U)
    if ch.sizes.N == 0 or t_bar == 0:
        return True
    U_S, U_I = ul_terms(W, ris, ch, power)
    return U_S >= t_bar * (1.0 - rel_tol) * (U_I + power.sigma2_U)


def transform_state(W, ris, ch, power, t_th_U: float) -> TransformState:
    r = optimal_r(W, ris, ch, power)
    return TransformState(r, dinkelbach_t(W, ris, r, ch, power), qos_threshold(t_th_U),
                          qos_budget(ris, ch, power, t_th_U))
