import logging

import numpy as np
import pytest

from secrecy_opt import Eavesdropper, ProblemInstance
from secrecy_opt.sim import alpha_to_epsilon, gen_channels

logging.getLogger("secrecy_opt").setLevel(logging.ERROR)


@pytest.fixture
def rng():
    return np.random.Generator(np.random.Philox(12345))


def make_instance(rng, nt=None, k=None, alpha=None, power_db=None):
    """Random instance with CN(0,1) channels and normalized uncertainty."""
    nt = nt if nt is not None else int(rng.integers(2, 5))
    k = k if k is not None else int(rng.integers(1, 4))
    alpha = alpha if alpha is not None else float(rng.uniform(0.03, 0.15))
    power_db = power_db if power_db is not None else float(rng.uniform(5, 20))
    h, g_bars = gen_channels(nt, k, rng)
    eps = alpha_to_epsilon(alpha, nt)
    return ProblemInstance(
        h=h,
        eves=tuple(Eavesdropper(g, eps) for g in g_bars),
        power=10.0 ** (power_db / 10.0),
    )


def orthogonal_instance(rng=None, nt=2, k=1, power=10.0):
    """Eves orthogonal to Bob with zero uncertainty: closed-form optimum."""
    if rng is None:
        h = np.zeros(nt, dtype=complex)
        h[0] = 1.0
        eves = []
        for j in range(k):
            g = np.zeros(nt, dtype=complex)
            g[1 + (j % (nt - 1))] = 1.0
            eves.append(Eavesdropper(g, 0.0))
        return ProblemInstance(h=h, eves=tuple(eves), power=power)
    h, g_bars = gen_channels(nt, k, rng)
    hn = h / np.linalg.norm(h)
    eves = []
    for g in g_bars:
        g_perp = g - hn * np.vdot(hn, g)
        eves.append(Eavesdropper(g_perp, 0.0))
    return ProblemInstance(h=h, eves=tuple(eves), power=power)
