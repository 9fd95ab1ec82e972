import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ris_fd_opt.ris import (PccpState, build_theta_quadratics, lambda_schedule, pccp_step,
                            project_unit, sca_theta_surrogates, solve_ris)
from ris_fd_opt.system import PowerConfig, RisPhase, ul_terms
from ris_fd_opt.transforms import (dinkelbach_t, dinkelbach_terms, optimal_r, qos_threshold,
                                   rate_threshold_from_db)

from conftest import random_case

P = PowerConfig()
T_TH = rate_threshold_from_db(5.0)


def _tq(rng, t_th=T_TH):
    ch, W, ris = random_case(rng)
    r = optimal_r(W, ris, ch, P)
    t = dinkelbach_t(W, ris, r, ch, P)
    return ch, W, ris, r, t, build_theta_quadratics(W, ch, r, t, P, t_th)


def _scale(tq, phi):
    return float(np.sum(np.abs(tq.c))) + float(np.real(np.trace(tq.Omega.sum(0)))) + abs(tq.objective(phi))


def test_quadratics_match_system_model(rng):
    t_bar = qos_threshold(T_TH)
    for _ in range(20):
        ch, W, ris, r, t, tq = _tq(rng)
        for _ in range(5):
            th = RisPhase(rng.uniform(0, 2 * np.pi, ch.sizes.K))
            direct = dinkelbach_terms(W, th, r, t, ch, P)
            sc = np.abs(tq.c).max() + np.abs(direct).max()
            assert np.allclose(tq.terms(th.phasor), direct, rtol=0, atol=1e-9 * sc)
            U_S, U_I = ul_terms(W, th, ch, P)
            exact = U_S - t_bar * (U_I + P.sigma2_U)
            assert tq.ul_value(th.phasor) == pytest.approx(exact, rel=1e-9, abs=1e-9 * (U_S + t_bar * U_I))


def test_no_ul_block_without_threshold(rng):
    *_, tq = _tq(rng, t_th=0.0)
    assert not tq.has_ul and tq.ul_value(np.ones(tq.K)) == np.inf
    _, ul = sca_theta_surrogates(tq, np.ones(tq.K))
    assert ul is None


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2 ** 31))
def test_surrogates_are_tangent_minorants(seed):
    rng = np.random.default_rng(seed)
    ch, W, ris, r, t, tq = _tq(rng)
    q = ris.phasor
    obj, ul = sca_theta_surrogates(tq, q)
    sc = _scale(tq, q)
    sc_u = abs(tq.c_U) + float(np.real(np.trace(tq.Omega_U)))
    assert abs(obj(q) - tq.objective(q)) <= 1e-10 * sc
    assert abs(ul(q) - tq.ul_value(q)) <= 1e-10 * sc_u
    for _ in range(20):
        phi = np.exp(1j * rng.uniform(0, 2 * np.pi, tq.K)) * rng.uniform(0, 2, tq.K)
        assert obj(phi) <= tq.objective(phi) + 1e-10 * sc
        assert ul(phi) <= tq.ul_value(phi) + 1e-10 * sc_u


def test_lambda_schedule():
    assert lambda_schedule(1.0, 3.0, 20.0, 4) == [3.0, 9.0, 20.0, 20.0]
    with pytest.raises(ValueError):
        lambda_schedule(1.0, 0.5, 10.0, 3)


def test_project_unit():
    out = project_unit([2.0, 0.0, -1j * 0.5])
    assert np.allclose(np.abs(out), 1.0)
    assert np.allclose(out, [1.0, 1.0, -1j])


def test_pccp_step_slacks_and_modulus(rng):
    ch, W, ris, r, t, tq = _tq(rng, t_th=0.0)
    phi, a, b, _ = pccp_step(tq, PccpState(10.0, ris.phasor))
    assert np.all(a >= 0) and np.all(b >= 0)
    # the convex side bounds |phi|^2 by 1 + a
    assert np.all(np.abs(phi) ** 2 <= 1 + a + 1e-6)


def test_solve_ris_improves_and_stays_feasible(rng):
    for _ in range(3):
        ch, W, ris, r, t, tq = _tq(rng)
        if tq.ul_value(ris.phasor) < 0:
            continue
        res = solve_ris(tq, ris)
        phi = res.phase.phasor
        assert np.array_equal(np.abs(phi), np.abs(phi)) and np.allclose(np.abs(phi), 1.0, atol=1e-12)
        assert res.objective >= tq.objective(ris.phasor) - 1e-12 * _scale(tq, ris.phasor)
        assert tq.ul_value(phi) >= 0
        assert res.objective == pytest.approx(tq.objective(phi))


def test_solve_ris_rejects_small_kappa(rng):
    *_, ris, r, t, tq = _tq(rng)
    with pytest.raises(ValueError):
        solve_ris(tq, ris, kappa=0.5)
