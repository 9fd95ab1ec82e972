import numpy as np
import pytest

from ris_fd_opt.channels import (ChannelSet, RicianParams, ScenarioGeometry, Sizes, draw_rician,
                                 generate_drop, link_power, los_matrix, pathloss_db, pathloss_linear,
                                 sample_disk)


def test_pathloss_formula():
    assert pathloss_db(10.0) == pytest.approx(38.88 + 22.0)
    assert pathloss_linear(10.0) == pytest.approx(10 ** (-(60.88) / 10))
    assert link_power(60.88, "as_printed") == pytest.approx(10 ** 6.088)
    with pytest.raises(ValueError):
        pathloss_db(0.0)
    with pytest.raises(ValueError):
        link_power(1.0, "bogus")


def test_rician_moments_by_monte_carlo(rng):
    """Mean entry equals sqrt(g rho/(1+rho)) * LoS; total power equals g."""
    p = RicianParams(rho=3.0)
    los = np.exp(1j * rng.uniform(0, 2 * np.pi, (2, 3)))
    draws = np.array([draw_rician(2, 3, 0, p, rng, los=los, gain=2.0) for _ in range(20000)])
    assert np.allclose(draws.mean(0), np.sqrt(2.0 * 0.75) * los, atol=0.02)
    assert np.allclose(np.mean(np.abs(draws) ** 2, 0), 2.0, rtol=0.03)
    var = np.mean(np.abs(draws - np.sqrt(1.5) * los) ** 2, 0)
    assert np.allclose(var, 2.0 * 0.25, rtol=0.05)


def test_pure_los_when_rho_infinite(rng):
    los = los_matrix(3, [0, 0], np.array([0.0, 1.0]), 2, [10, 5], np.array([1.0, 0.0]))
    H = draw_rician(3, 2, 0, RicianParams(), rng, los=los, gain=1.0, rho=np.inf)
    assert np.allclose(H, los)
    assert np.allclose(np.abs(los), 1.0)
    assert np.linalg.matrix_rank(los) == 1


def test_disk_sampling_uniform(rng):
    pts = np.array([sample_disk([1.0, 2.0], 3.0, rng) for _ in range(20000)])
    d = np.linalg.norm(pts - [1.0, 2.0], axis=1)
    assert d.max() <= 3.0
    # uniform in area: P(d <= r/2) = 1/4
    assert np.mean(d <= 1.5) == pytest.approx(0.25, abs=0.015)


def test_drop_shapes_and_determinism():
    s = Sizes(3, 2, 5, 4, 2)
    a = generate_drop(sizes=s, seed=9)
    b = generate_drop(sizes=s, seed=9)
    c = generate_drop(sizes=s, seed=10)
    assert a.sizes == s
    for name in ("U", "U1", "U2", "D", "D1", "D2", "S", "V"):
        assert np.array_equal(getattr(a, name), getattr(b, name))
    assert not np.allclose(a.D, c.D)


def test_streams_independent_of_ris_size():
    """Direct links do not move when the RIS size changes (paired sweeps)."""
    a = generate_drop(sizes=Sizes(3, 3, 8, 2, 2), seed=4)
    b = generate_drop(sizes=Sizes(3, 3, 32, 2, 2), seed=4)
    for name in ("U", "D", "S", "V"):
        assert np.array_equal(getattr(a, name), getattr(b, name))


def test_conventions_differ_only_in_scale():
    s = Sizes(2, 2, 3, 1, 1)
    phys = generate_drop(sizes=s, seed=3)
    printed = generate_drop(sizes=s, params=RicianParams(pathloss_convention="as_printed"), seed=3)
    d = np.linalg.norm(ScenarioGeometry().cluster_center - ScenarioGeometry().bs)
    assert np.all(np.abs(printed.D) > np.abs(phys.D))
    ratio = np.abs(printed.D2 / phys.D2)
    assert np.allclose(ratio, ratio.flat[0])
    assert d > 0


def test_without_ris_and_permutation():
    ch = generate_drop(sizes=Sizes(2, 2, 4, 3, 2), seed=1)
    n = ch.without_ris()
    assert n.sizes.K == 0 and np.array_equal(n.D, ch.D)
    p = ch.permuted([2, 0, 1], [1, 0])
    assert np.array_equal(p.D[0], ch.D[2])
    assert np.array_equal(p.V[0, 0], ch.V[2, 1])
    assert np.array_equal(p.U1[:, 0], ch.U1[:, 1])


def test_json_round_trip(tmp_path):
    ch = generate_drop(sizes=Sizes(2, 2, 3, 2, 1), seed=2)
    ch.to_json(tmp_path / "c.json")
    back = ChannelSet.from_json(tmp_path / "c.json")
    for name in ("U", "U1", "U2", "D", "D1", "D2", "S", "V"):
        assert np.array_equal(getattr(back, name), getattr(ch, name))
    empty = ChannelSet.from_dict(ch.without_ris().to_dict())
    assert empty.sizes.K == 0


def test_validation():
    ch = generate_drop(sizes=Sizes(2, 2, 3, 2, 1), seed=2)
    with pytest.raises(ValueError):
        ChannelSet(ch.U, ch.U1, ch.U2, ch.D, ch.D1, ch.D2[:, :2], ch.S, ch.V)
    bad = ch.D.copy()
    bad[0, 0] = np.nan
    with pytest.raises(ValueError):
        ChannelSet(ch.U, ch.U1, ch.U2, bad, ch.D1, ch.D2, ch.S, ch.V)
    with pytest.raises(ValueError):
        RicianParams(beta=1.5)
    with pytest.raises(ValueError):
        generate_drop(sizes=Sizes(0, 2, 3, 2, 1))
