"""Quick invariant checks on random instances, printed as a pass/fail table."""
from __future__ import annotations

import time
from dataclasses import replace

import numpy as np

from . import qcqp
from .bs import build_bs_data, exact_bs_objective, sca_bs_objective, stack
from .channels import Sizes, generate_drop
from .linalg import QuadraticForm, real_embed
from .ris import build_theta_quadratics, sca_theta_surrogates
from .system import PowerConfig, RisPhase, cascade_affine, dl_sinrs, dl_terms, ul_terms
from .transforms import (dinkelbach_t, dinkelbach_terms, lagrangian_objective, optimal_r,
                         qos_threshold, rate_threshold_from_db)


def random_instance(rng, sizes=Sizes(3, 3, 4, 2, 2), power=PowerConfig()):
    """A drop plus random feasible-power ``W`` and random phases."""
    ch = generate_drop(sizes=sizes, seed=int(rng.integers(2 ** 31)))
    W = rng.standard_normal((sizes.N_t, sizes.M)) + 1j * rng.standard_normal((sizes.N_t, sizes.M))
    W *= np.sqrt(power.P_max * rng.uniform(0.1, 1.0)) / np.linalg.norm(W)
    ris = RisPhase(rng.uniform(0, 2 * np.pi, sizes.K))
    return ch, W, ris


def _rel(a, b):
    a, b = np.asarray(a), np.asarray(b)
    return float(np.max(np.abs(a - b)) / max(np.max(np.abs(b)), 1e-300))


def check_prop1(rng, p, n=20):
    err = 0.0
    for _ in range(n):
        ch, W, ris = random_instance(rng)
        r = optimal_r(W, ris, ch, p)
        err = max(err, abs(lagrangian_objective(W, ris, r, ch, p) - np.sum(np.log2(1 + dl_sinrs(W, ris, ch, p)))))
    return err <= 1e-9, f"max |F_D(r*) - sum rate| = {err:.1e}"


def check_anchor_zero(rng, p, n=20):
    err = 0.0
    for _ in range(n):
        ch, W, ris = random_instance(rng)
        r = optimal_r(W, ris, ch, p)
        t = dinkelbach_t(W, ris, r, ch, p)
        terms = dinkelbach_terms(W, ris, r, t, ch, p)
        err = max(err, float(np.max(np.abs(terms))) / max(float(np.max(t)) * p.sigma2, 1e-300))
    return err <= 1e-6, f"max anchor term / (t sigma^2) = {err:.1e}"


def _bs_case(rng, p, fault=None):
    ch, W, ris = random_instance(rng)
    r = optimal_r(W, ris, ch, p)
    t = dinkelbach_t(W, ris, r, ch, p)
    data = build_bs_data(ris, ch, r, t, p, 0.0, W)
    return ch, W, ris, r, t, data


def check_bs_minorant(rng, p, n=10, pts=20):
    worst_gap, worst_tan = -np.inf, 0.0
    for _ in range(n):
        ch, W, ris, r, t, data = _bs_case(rng, p)
        sur = sca_bs_objective(data, W)
        sc = data.scale
        worst_tan = max(worst_tan, abs(sur(stack(W)) - exact_bs_objective(data, W)) / sc)
        for _ in range(pts):
            V = W + 0.5 * (rng.standard_normal(W.shape) + 1j * rng.standard_normal(W.shape)) * np.abs(W).max()
            worst_gap = max(worst_gap, (sur(stack(V)) - exact_bs_objective(data, V)) / sc)
    ok = worst_gap <= 1e-10 and worst_tan <= 1e-10
    return ok, f"max (surrogate - exact) = {worst_gap:.1e}, tangency {worst_tan:.1e} (relative)"


def check_theta_fidelity(rng, p, n=10, fault=None):
    worst = 0.0
    for _ in range(n):
        ch, W, ris = random_instance(rng)
        r = optimal_r(W, ris, ch, p)
        t = dinkelbach_t(W, ris, r, ch, p)
        tq = build_theta_quadratics(W, ch, r, t, p, rate_threshold_from_db(5.0))
        if fault == "omega-sign":
            tq = replace(tq, Omega=-tq.Omega)
        for _ in range(5):
            th = RisPhase(rng.uniform(0, 2 * np.pi, ch.sizes.K))
            direct = dinkelbach_terms(W, th, r, t, ch, p)
            U_S, U_I = ul_terms(W, th, ch, p)
            t_bar = qos_threshold(rate_threshold_from_db(5.0))
            ul_direct = U_S - t_bar * (U_I + p.sigma2_U)
            D_S, D_I, D_C = dl_terms(W, th, ch, p)
            scale = np.max((1 + r) * D_S + t * (D_S + D_I + D_C + p.sigma2))
            worst = max(worst, float(np.max(np.abs(tq.terms(th.phasor) - direct))) / scale,
                        abs(tq.ul_value(th.phasor) - ul_direct) / (U_S + t_bar * (U_I + p.sigma2_U)))
    return worst <= 1e-9, f"max relative mismatch = {worst:.1e}"


def check_ris_minorant(rng, p, n=10, pts=20):
    worst = -np.inf
    for _ in range(n):
        ch, W, ris = random_instance(rng)
        r = optimal_r(W, ris, ch, p)
        t = dinkelbach_t(W, ris, r, ch, p)
        tq = build_theta_quadratics(W, ch, r, t, p, rate_threshold_from_db(5.0))
        q = ris.phasor
        obj, ul = sca_theta_surrogates(tq, q)
        sc = float(np.sum(np.abs(tq.c))) + float(np.real(np.trace(tq.Omega.sum(0))))
        sc_u = abs(tq.c_U) + float(np.real(np.trace(tq.Omega_U)))
        worst = max(worst, abs(obj(q) - tq.objective(q)) / sc, abs(ul(q) - tq.ul_value(q)) / sc_u)
        for _ in range(pts):
            phi = np.exp(1j * rng.uniform(0, 2 * np.pi, ch.sizes.K)) * rng.uniform(0.5, 1.5, ch.sizes.K)
            worst = max(worst, (obj(phi) - tq.objective(phi)) / sc, (ul(phi) - tq.ul_value(phi)) / sc_u)
    return worst <= 1e-10, f"max (surrogate - exact) or tangency error = {worst:.1e}"


def check_cascade(rng, p, n=20):
    worst = 0.0
    for _ in range(n):
        X, A, B = (rng.standard_normal(s) + 1j * rng.standard_normal(s) for s in [(3, 4), (3, 5), (5, 4)])
        v = rng.standard_normal(4) + 1j * rng.standard_normal(4)
        th = rng.uniform(0, 2 * np.pi, 5)
        f = cascade_affine(X, A, B, v, 0.9)
        direct = (X + A @ np.diag(0.9 * np.exp(1j * th)) @ B) @ v
        worst = max(worst, _rel(f(np.exp(1j * th)), direct))
    return worst <= 1e-10, f"max relative error = {worst:.1e}"


def check_qcqp(rng, p):
    obj = real_embed(QuadraticForm(-np.eye(1), np.array([1.0 + 0j]), 0.0))
    errs = []
    for radius2, value in [(4.0, 1.0), (0.25, 0.75)]:
        con = real_embed(QuadraticForm(np.eye(1), np.zeros(1, complex), -radius2))
        sol = qcqp.solve(qcqp.ConvexQcqp(obj, [con]))
        errs.append(abs(sol.objective_value - value))
    return max(errs) <= 1e-6, f"max error on analytic instances = {max(errs):.1e}"


CHECKS = [
    ("Lagrangian transform identity", check_prop1),
    ("Dinkelbach anchor zero", check_anchor_zero),
    ("cascade decomposition", check_cascade),
    ("BS surrogate minorant", check_bs_minorant),
    ("RIS surrogate minorant", check_ris_minorant),
    ("phase quadratic fidelity", check_theta_fidelity),
    ("QCQP analytic instances", check_qcqp),
]


def run_selftest(fault: str | None = None, seed: int = 7, out=print) -> int:
    """Run every check; returns 0 when all pass."""
    p = PowerConfig()
    failures = 0
    t0 = time.perf_counter()
    for name, fn in CHECKS:
        rng = np.random.default_rng(seed)
        kw = {"fault": fault} if fn is check_theta_fidelity else {}
        try:
            ok, detail = fn(rng, p, **kw)
        except Exception as exc:  # a crash is a failure, not an abort
            ok, detail = False, f"raised {type(exc).__name__}: {exc}"
        failures += not ok
        out(f"{'PASS' if ok else 'FAIL'}  {name:<32} {detail}")
    out(f"{len(CHECKS) - failures}/{len(CHECKS)} checks passed in {time.perf_counter() - t0:.1f} s")
    return 0 if failures == 0 else 1
