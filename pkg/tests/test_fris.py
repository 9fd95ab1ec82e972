import json

import numpy as np
import pytest

from ris_fd_opt.channels import Sizes, generate_drop
from ris_fd_opt.fris import FrisConfig, FrisResult, feasibility, initialize, run_fris
from ris_fd_opt.system import PowerConfig, RisPhase, effective_channels, rates
from ris_fd_opt.transforms import qos_satisfied

P = PowerConfig()
SMALL = Sizes(4, 4, 6, 2, 2)


def test_config_validation_and_threshold():
    assert FrisConfig().t_th_U == pytest.approx(np.log2(1 + 10 ** 0.5))
    assert FrisConfig(t_th_U_bits=1.5).t_th_U == 1.5
    assert FrisConfig(gamma_U_db=None).t_th_U == 0.0
    assert FrisConfig().replace(T=3).T == 3
    for bad in ({"kappa": 0.5}, {"rho": 0.0}, {"T": 0}, {"ul_constraint_mode": "x"},
                {"lambda0": 5.0, "lambda_max": 1.0}, {"t_th_U_bits": -1.0}):
        with pytest.raises(ValueError):
            FrisConfig(**bad)


def test_initial_point_meets_constraints():
    cfg = FrisConfig()
    for seed in range(5):
        ch = generate_drop(sizes=SMALL, seed=seed)
        W, ris = initialize(ch, P, cfg, seed)
        assert np.sum(np.abs(W) ** 2) <= P.P_max * (1 + 1e-12)
        assert qos_satisfied(W, ris, ch, P, cfg.t_th_U)


@pytest.mark.parametrize("seed", range(4))
def test_result_is_feasible_and_history_monotone(seed):
    ch = generate_drop(sizes=SMALL, seed=seed)
    res = run_fris(ch, P, FrisConfig(), seed)
    assert res.status in ("converged", "max_iter")
    f = feasibility(res.W, res.phase, ch, P, FrisConfig().t_th_U)
    assert f["feasible"]
    assert np.array_equal(np.abs(res.phase.phasor), np.abs(res.phase.phasor))
    assert np.allclose(np.abs(res.phase.phasor), 1.0, atol=1e-12)
    assert res.slack <= 0.05
    best = res.best_so_far
    assert all(b2 >= b1 for b1, b2 in zip(best, best[1:]))
    assert res.dl_sum_rate >= res.initial_rate - 1e-12
    assert res.dl_sum_rate == pytest.approx(rates(res.W, res.phase, ch, P).dl_sum)


def test_beta_zero_equals_no_ris():
    ch = generate_drop(sizes=SMALL, seed=3)
    a = run_fris(ch, P, FrisConfig(), 3, beta=0.0)
    b = run_fris(ch.without_ris(), P, FrisConfig(), 3)
    assert a.dl_sum_rate == pytest.approx(b.dl_sum_rate, abs=1e-9)
    assert a.ul_aggregate_rate == pytest.approx(b.ul_aggregate_rate, abs=1e-9)


def test_single_user_without_interference_is_mrt():
    ch = generate_drop(sizes=Sizes(4, 4, 0, 1, 0), seed=5)
    res = run_fris(ch, P, FrisConfig(), 5)
    h = ch.D[0]
    closed = np.log2(1 + P.p_D * P.P_max * np.vdot(h, h).real / P.sigma2)
    assert res.dl_sum_rate == pytest.approx(closed, abs=1e-3)


def test_single_user_with_ris_is_mrt_at_returned_phases():
    ch = generate_drop(sizes=Sizes(4, 4, 6, 1, 0), seed=6)
    res = run_fris(ch, P, FrisConfig(), 6)
    h = effective_channels(ch, res.phase)[0][0]
    closed = np.log2(1 + P.p_D * P.P_max * np.vdot(h, h).real / P.sigma2)
    assert res.dl_sum_rate == pytest.approx(closed, abs=1e-3)


def test_fixed_phase_is_kept():
    ch = generate_drop(sizes=SMALL, seed=2)
    ph = RisPhase(np.linspace(0, 1, SMALL.K), 0.9)
    res = run_fris(ch, P, FrisConfig(), 2, fixed_phase=ph)
    assert np.allclose(res.phase.theta, ph.theta)


def test_unattainable_threshold_reports_infeasible():
    ch = generate_drop(sizes=SMALL, seed=1)
    res = run_fris(ch, P, FrisConfig(t_th_U_bits=80.0), 1)
    assert res.status == "infeasible" and res.dl_sum_rate == 0.0


def test_deterministic_and_serializable(tmp_path):
    ch = generate_drop(sizes=SMALL, seed=8)
    a = run_fris(ch, P, FrisConfig(), 8)
    b = run_fris(ch, P, FrisConfig(), 8)
    assert a.to_json() == b.to_json()
    a.to_json(tmp_path / "r.json")
    back = FrisResult.from_dict(json.loads((tmp_path / "r.json").read_text()))
    assert np.array_equal(back.W, a.W) and back.dl_sum_rate == a.dl_sum_rate
