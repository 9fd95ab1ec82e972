"""Alternating optimization of the BS beamformer and the RIS phases."""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field

import numpy as np

from .bs import QosInfeasible, build_bs_data, solve_bs
from .channels import ChannelSet
from .ris import build_theta_quadratics, solve_ris
from .system import PowerConfig, RisPhase, effective_channels, rates, ul_terms
from .transforms import dinkelbach_t, optimal_r, qos_threshold, rate_threshold_from_db


@dataclass(frozen=True)
class FrisConfig:
    rho: float = 0.01
    rho_w: float = 0.01
    rho_theta: float = 0.01
    T: int = 20
    T_w: int = 30
    T_theta: int = 30
    kappa: float = 3.0
    lambda0: float = 1.0
    lambda_max: float = 1e4
    gamma_U_db: float | None = 5.0
    t_th_U_bits: float | None = None  # overrides gamma_U_db when given
    slack_tol: float = 0.05
    solver_tol: float = 1e-7
    ul_constraint_mode: str = "sca"
    collapse_drop: float = 0.10

    def __post_init__(self):
        if min(self.rho, self.rho_w, self.rho_theta, self.solver_tol) <= 0:
            raise ValueError("tolerances must be positive")
        if min(self.T, self.T_w, self.T_theta) < 1:
            raise ValueError("iteration caps must be at least 1")
        if self.kappa < 1:
            raise ValueError("kappa must be at least 1 (smaller values never tighten the penalty)")
        if self.lambda0 < 0 or self.lambda_max < self.lambda0:
            raise ValueError("need 0 <= lambda0 <= lambda_max")
        if self.ul_constraint_mode not in ("sca", "direct"):
            raise ValueError("ul_constraint_mode must be 'sca' or 'direct'")
        if self.t_th_U_bits is not None and self.t_th_U_bits < 0:
            raise ValueError("t_th_U_bits must be nonnegative")

    @property
    def t_th_U(self) -> float:
        """UL rate threshold in bit/s/Hz."""
        if self.t_th_U_bits is not None:
            return float(self.t_th_U_bits)
        if self.gamma_U_db is None:
            return 0.0
        return rate_threshold_from_db(self.gamma_U_db)

    def replace(self, **kw) -> "FrisConfig":
        d = asdict(self)
        d.update(kw)
        return FrisConfig(**d)


def feasibility(W, ris, ch: ChannelSet, power: PowerConfig, t_th_U: float, tol: float = 1e-6) -> dict:
    """Exact constraint checks: power budget, UL QoS and unit modulus."""
    p_ok = float(np.sum(np.abs(W) ** 2)) <= power.P_max * (1 + 1e-8)
    t_bar = qos_threshold(t_th_U)
    if ch.sizes.N == 0 or t_bar == 0:
        q_ok = True
    else:
        U_S, U_I = ul_terms(W, ris, ch, power)
        q_ok = U_S / (U_I + power.sigma2_U) >= t_bar * (1 - tol)
    m_ok = ris is None or bool(np.allclose(np.abs(ris.phasor), 1.0, atol=1e-12))
    return {"power": bool(p_ok), "qos": bool(q_ok), "modulus": m_ok,
            "feasible": bool(p_ok and q_ok and m_ok)}


def initialize(ch: ChannelSet, power: PowerConfig, cfg: FrisConfig, seed: int = 0, beta: float = 0.9,
               phase: RisPhase | None = None):
    """Random phases and a full-power MRT beamformer scaled down to meet the UL QoS."""
    if phase is None:
        rng = np.random.default_rng(seed)
        phase = RisPhase(rng.uniform(0.0, 2 * np.pi, ch.sizes.K), beta)
    ris = phase
    H_D = effective_channels(ch, ris)[0]
    W = H_D.conj().T.copy()
    nrm = np.linalg.norm(W)
    if nrm > 0:
        W *= np.sqrt(power.P_max) / nrm
    t_bar = qos_threshold(cfg.t_th_U)
    if ch.sizes.N == 0 or t_bar == 0:
        return W, ris
    U_S, U_I = ul_terms(W, ris, ch, power)
    xi = (U_S - t_bar * power.sigma2_U) / t_bar
    if xi < 0:
        raise QosInfeasible("UL signal alone cannot meet the QoS threshold")
    if U_I > xi:
        # U_I scales with the square of a common gain on W
        W *= np.sqrt(xi / U_I * (1 - 1e-9))
    return W, ris


@dataclass
class FrisResult:
    W: np.ndarray
    phase: RisPhase
    status: str
    history: list = field(default_factory=list)
    dl_sum_rate: float = 0.0
    ul_aggregate_rate: float = 0.0
    initial_rate: float = 0.0
    iterations: int = 0
    slack: float = 0.0
    collapsed: bool = False

    @property
    def best_so_far(self) -> list:
        out, best = [], -np.inf
        for h in self.history:
            if h["feasible"]:
                best = max(best, h["dl_sum_rate"])
            out.append(best)
        return out

    def to_dict(self) -> dict:
        return {
            "status": self.status,
            "dl_sum_rate": self.dl_sum_rate,
            "ul_aggregate_rate": self.ul_aggregate_rate,
            "initial_rate": self.initial_rate,
            "iterations": self.iterations,
            "slack": self.slack,
            "collapsed": self.collapsed,
            "W": {"re": self.W.real.tolist(), "im": self.W.imag.tolist()},
            "theta": self.phase.theta.tolist(),
            "beta": self.phase.beta,
            "history": self.history,
        }

    def to_json(self, path=None, **kw) -> str:
        text = json.dumps(self.to_dict(), **kw)
        if path is not None:
            with open(path, "w") as fh:
                fh.write(text)
        return text

    @classmethod
    def from_dict(cls, d: dict) -> "FrisResult":
        W = np.asarray(d["W"]["re"]) + 1j * np.asarray(d["W"]["im"])
        return cls(W.reshape(np.shape(d["W"]["re"])), RisPhase(d["theta"], d["beta"]), d["status"],
                   d["history"], d["dl_sum_rate"], d["ul_aggregate_rate"], d["initial_rate"],
                   d["iterations"], d["slack"], d["collapsed"])


def _infeasible(ch, beta, reason):
    W = np.zeros((ch.sizes.N_t, ch.sizes.M), complex)
    ris = RisPhase(np.zeros(ch.sizes.K), beta)
    return FrisResult(W, ris, "infeasible", [{"iteration": 0, "note": reason, "feasible": False,
                                              "dl_sum_rate": 0.0}])


def run_fris(ch: ChannelSet, power: PowerConfig = PowerConfig(), cfg: FrisConfig = FrisConfig(),
             seed: int = 0, beta: float | None = None, fixed_phase: RisPhase | None = None) -> FrisResult:
    """Alternate BS and RIS updates until the exact DL sum rate settles.

    The returned point is the best exactly-feasible iterate (initial point
    included). An iterate whose rate drops by more than ``cfg.collapse_drop``
    relative to its predecessor is flagged and the previous point is restored.
    With ``fixed_phase`` the RIS is held at those phases and only the
    beamformer is optimized.
    """
    beta = ch.meta.get("beta", 0.9) if beta is None else beta
    t_th = cfg.t_th_U
    try:
        W, ris = initialize(ch, power, cfg, seed, beta, fixed_phase)
    except QosInfeasible as exc:
        return _infeasible(ch, beta, str(exc))

    def record(i, W, ris, **extra):
        rep = rates(W, ris, ch, power)
        feas = feasibility(W, ris, ch, power, t_th)
        row = {"iteration": i, "dl_sum_rate": rep.dl_sum, "ul_aggregate_rate": rep.ul_aggregate_rate,
               "feasible": feas["feasible"]}
        row.update(extra)
        return row, rep

    row, rep = record(0, W, ris)
    history = [row]
    initial = rep.dl_sum
    best = (initial, W, ris, 0.0) if row["feasible"] else (-np.inf, W, ris, 0.0)
    prev_rate = initial
    status, collapsed, i = "max_iter", False, 0
    for i in range(1, cfg.T + 1):
        r = optimal_r(W, ris, ch, power)
        t = dinkelbach_t(W, ris, r, ch, power)
        try:
            data = build_bs_data(ris, ch, r, t, power, t_th, W)
        except QosInfeasible:
            history.append({"iteration": i, "note": "qos unattainable at current phases",
                            "feasible": False, "dl_sum_rate": prev_rate})
            break
        bs = solve_bs(data, power, T_w=cfg.T_w, rho_w=cfg.rho_w, mode=cfg.ul_constraint_mode,
                      solver_tol=cfg.solver_tol)
        W_new, ris_new, slack, ris_iters, surrogate = bs.W, ris, 0.0, 0, bs.objective
        if ch.sizes.K > 0 and fixed_phase is None:
            tq = build_theta_quadratics(W_new, ch, r, t, power, t_th, beta)
            rr = solve_ris(tq, ris, kappa=cfg.kappa, lambda0=cfg.lambda0, lambda_max=cfg.lambda_max,
                           rho_theta=cfg.rho_theta, T_theta=cfg.T_theta, slack_tol=cfg.slack_tol,
                           solver_tol=cfg.solver_tol)
            ris_new, slack, ris_iters, surrogate = rr.phase, rr.slack, rr.iterations, rr.objective
        row, rep = record(i, W_new, ris_new, surrogate=surrogate, bs_iterations=bs.iterations,
                          ris_iterations=ris_iters, slack=slack)
        rate = rep.dl_sum
        if prev_rate > 0 and rate < (1 - cfg.collapse_drop) * prev_rate:
            row["collapsed"] = True
            history.append(row)
            collapsed = True
            break  # the update is deterministic, retrying from the same point repeats it
        history.append(row)
        if row["feasible"] and rate > best[0]:
            best = (rate, W_new, ris_new, slack)
        W, ris = W_new, ris_new
        if i >= 2 and abs(rate - prev_rate) <= cfg.rho:
            status = "converged"
            break
        prev_rate = rate
    if not np.isfinite(best[0]):
        return _infeasible(ch, beta, "no feasible iterate")
    _, W_b, ris_b, slack_b = best
    rep = rates(W_b, ris_b, ch, power)
    return FrisResult(W_b, ris_b, status, history, rep.dl_sum, rep.ul_aggregate_rate,
                      initial, i, slack_b, collapsed)
