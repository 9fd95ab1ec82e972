"""Interior-point solver against closed forms and a projected-gradient oracle."""
import numpy as np
import pytest

from ris_fd_opt import qcqp
from ris_fd_opt.linalg import QuadraticForm, real_embed

from conftest import crandn
from oracles import ball, pg_oracle, random_instance


def test_analytic_disk_instances():
    obj = real_embed(QuadraticForm(-np.eye(1), np.array([1.0 + 0j]), 0.0))
    # unconstrained optimum x = 1, value 1, is inside radius 2
    s = qcqp.solve(qcqp.ConvexQcqp(obj, [real_embed(ball(np.zeros(1, complex), 2.0))]))
    assert s.objective_value == pytest.approx(1.0, abs=1e-6)
    # radius 1/2 binds: x = 1/2, value -1/4 + 1 = 3/4
    s = qcqp.solve(qcqp.ConvexQcqp(obj, [real_embed(ball(np.zeros(1, complex), 0.5))]))
    assert s.objective_value == pytest.approx(0.75, abs=1e-6)
    assert s.status == "optimal"


def test_linear_objective_on_ball_closed_form(rng):
    for _ in range(10):
        n = 2
        b = crandn(rng, n)
        c, r = crandn(rng, n), rng.uniform(0.5, 2)
        obj = real_embed(QuadraticForm(np.zeros((n, n)), b, 0.0))
        s = qcqp.solve(qcqp.ConvexQcqp(obj, [real_embed(ball(c, r))]))
        # max 2 Re b^H x over the ball: x = c + r b / |b|
        exact = 2 * np.real(np.vdot(b, c)) + 2 * r * np.linalg.norm(b)
        assert s.objective_value == pytest.approx(exact, abs=1e-6)


def test_matches_projected_gradient_oracle(rng):
    for _ in range(50):
        n, P, b, balls = random_instance(rng)
        p = qcqp.ConvexQcqp(real_embed(QuadraticForm(-P, b, 0.0)),
                            [real_embed(ball(c, r)) for c, r in balls])
        s = qcqp.solve(p)
        assert np.all(p.constraint_values(s.x) <= 1e-8)
        assert s.objective_value == pytest.approx(pg_oracle(P, b, balls), abs=1e-4)


def test_duals_satisfy_kkt(rng):
    n, P, b, balls = random_instance(rng)
    p = qcqp.ConvexQcqp(real_embed(QuadraticForm(-P, b, 0.0)), [real_embed(ball(c, r)) for c, r in balls])
    s = qcqp.solve(p)
    assert np.all(s.duals >= 0)
    assert qcqp.kkt_residual(p, s.x, s.duals) <= 1e-5


def test_infeasible_raises():
    far = [real_embed(ball(np.zeros(1, complex), 1.0)), real_embed(ball(np.array([5.0 + 0j]), 1.0))]
    p = qcqp.ConvexQcqp(real_embed(QuadraticForm(-np.eye(1), np.zeros(1), 0.0)), far)
    with pytest.raises(qcqp.QcqpInfeasible):
        qcqp.solve(p)


def test_rejects_nonconcave_objective():
    p = qcqp.ConvexQcqp(QuadraticForm(np.eye(2), np.zeros(2), 0.0), [])
    with pytest.raises(ValueError):
        p.check_convexity()


def test_rejects_complex_forms():
    with pytest.raises(ValueError):
        qcqp.ConvexQcqp(QuadraticForm(-np.eye(1), np.array([1j]), 0.0))
