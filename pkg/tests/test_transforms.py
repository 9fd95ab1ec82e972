import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ris_fd_opt.system import PowerConfig, dl_sinrs, dl_terms, ul_terms
from ris_fd_opt.transforms import (dinkelbach_objective, dinkelbach_t, dinkelbach_terms,
                                   lagrangian_objective, optimal_r, qos_budget, qos_satisfied,
                                   qos_threshold, rate_threshold_from_db, transform_state)

from conftest import crandn, random_case

P = PowerConfig()


def _sum_rate(W, ris, ch):
    return float(np.sum(np.log2(1 + dl_sinrs(W, ris, ch, P))))


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2 ** 31))
def test_lagrangian_at_optimum_equals_sum_rate(seed):
    ch, W, ris = random_case(np.random.default_rng(seed))
    r = optimal_r(W, ris, ch, P)
    assert lagrangian_objective(W, ris, r, ch, P) == pytest.approx(_sum_rate(W, ris, ch), abs=1e-9)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2 ** 31))
def test_optimal_r_maximizes_the_lagrangian(seed):
    rng = np.random.default_rng(seed)
    ch, W, ris = random_case(rng)
    r = optimal_r(W, ris, ch, P)
    best = lagrangian_objective(W, ris, r, ch, P)
    for _ in range(20):
        other = np.maximum(r * rng.uniform(0.2, 3.0, r.shape) + rng.uniform(0, 0.1, r.shape), 0)
        assert lagrangian_objective(W, ris, other, ch, P) <= best + 1e-12


def test_stationarity_finite_difference(rng):
    ch, W, ris = random_case(rng)
    r = optimal_r(W, ris, ch, P)
    h = 1e-5
    for m in range(len(r)):
        e = np.zeros_like(r)
        e[m] = h
        g = (lagrangian_objective(W, ris, r + e, ch, P) - lagrangian_objective(W, ris, r - e, ch, P)) / (2 * h)
        assert abs(g) <= 1e-6


def test_dinkelbach_anchor_is_zero(rng):
    for _ in range(20):
        ch, W, ris = random_case(rng)
        r = optimal_r(W, ris, ch, P)
        t = dinkelbach_t(W, ris, r, ch, P)
        assert np.all(np.abs(dinkelbach_terms(W, ris, r, t, ch, P)) <= 1e-10 * max(1.0, t.max()))


def test_dinkelbach_terms_factor_through_the_ratio(rng):
    """Each term is the denominator times (new ratio - anchor ratio)."""
    ch, W, ris = random_case(rng)
    r = optimal_r(W, ris, ch, P)
    t = dinkelbach_t(W, ris, r, ch, P)
    V = crandn(rng, *W.shape) * np.abs(W).max()
    D_S, D_I, D_C = dl_terms(V, ris, ch, P)
    den = D_S + D_I + D_C + P.sigma2
    expected = den * (dinkelbach_t(V, ris, r, ch, P) - t)
    assert np.allclose(dinkelbach_terms(V, ris, r, t, ch, P), expected, rtol=1e-9, atol=0)
    assert dinkelbach_objective(V, ris, r, t, ch, P) == pytest.approx(expected.sum(), rel=1e-9)


def test_thresholds():
    assert qos_threshold(1.0) == pytest.approx(1.0)
    assert qos_threshold(0.0) == 0.0
    assert qos_threshold(rate_threshold_from_db(5.0)) == pytest.approx(10 ** 0.5)
    with pytest.raises(ValueError):
        qos_threshold(-1.0)
    with pytest.raises(ValueError):
        lagrangian_objective(np.zeros((3, 2)), None, [-1.0, 0.0], None, P)


def test_budget_characterizes_qos(rng):
    ch, W, ris = random_case(rng)
    t_th = rate_threshold_from_db(5.0)
    xi = qos_budget(ris, ch, P, t_th)
    _, U_I = ul_terms(W, ris, ch, P)
    assert qos_satisfied(W, ris, ch, P, t_th) == (U_I <= xi)
    assert qos_budget(ris, ch, P, 0.0) == np.inf
    st_ = transform_state(W, ris, ch, P, t_th)
    assert st_.xi_U == pytest.approx(xi) and st_.t_bar == pytest.approx(qos_threshold(t_th))
