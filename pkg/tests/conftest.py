import numpy as np
import pytest

from ris_fd_opt.channels import Sizes, generate_drop
from ris_fd_opt.system import PowerConfig, RisPhase


def crandn(rng, *shape):
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2)


def random_case(rng, sizes=Sizes(3, 3, 4, 2, 2), power=PowerConfig()):
    """A drop, a random beamformer inside the power budget and random phases."""
    ch = generate_drop(sizes=sizes, seed=int(rng.integers(2 ** 31)))
    W = crandn(rng, sizes.N_t, sizes.M)
    W *= np.sqrt(power.P_max * rng.uniform(0.1, 1.0)) / np.linalg.norm(W)
    return ch, W, RisPhase(rng.uniform(0, 2 * np.pi, sizes.K))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


ACCEPTANCE = {}


def record_criterion(number: int, ok: bool, detail: str) -> None:
    """Store one acceptance line; printed in the terminal summary."""
    line = f"criterion {number:>2}: {'PASS' if ok else 'FAIL'}  {detail}"
    ACCEPTANCE[number] = line
    print(line)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for n in sorted(ACCEPTANCE):
            terminalreporter.write_line(ACCEPTANCE[n])
