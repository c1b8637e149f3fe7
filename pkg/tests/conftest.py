import numpy as np
import pytest

from onebit_em.channel import ChannelParams, generate_channel
from onebit_em.harness import noise_variance
from onebit_em.ofdm import map_bits, random_bits, transmit

_ACCEPTANCE = []


def make_instance(N, K, W, D=1, snr_db=5.0, seed=0, L=None, eta=4):
    """Channel, transmitted grid, bits and observation for a small problem."""
    rng = np.random.default_rng(seed)
    L = min(16, W) if L is None else L
    ch = generate_channel(ChannelParams(N=N, K=K, W=W, L=L, eta=eta), rng)
    bits = random_bits(rng, W, K, D)
    S = map_bits(bits, D, (W, K))
    obs = transmit(S, ch, noise_variance(ch, D, snr_db), rng)
    return ch, S, bits, obs


@pytest.fixture
def instance():
    return make_instance


@pytest.fixture(scope="session")
def acceptance_log():
    """Collects ``(criterion, passed, detail)`` for the terminal summary."""
    return _ACCEPTANCE


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for name, ok, detail in sorted(_ACCEPTANCE, key=lambda r: int(r[0].split()[0].rstrip("."))):
        terminalreporter.write_line(f"[{'PASS' if ok else 'FAIL'}] {name}: {detail}")
