"""Reference transmit designs used for comparison."""
from __future__ import annotations

import numpy as np

from .errors import RequiresMultipleAntennas
from .types import ProblemInstance, TransmitDesign


def isotropic_an(instance: ProblemInstance) -> TransmitDesign:
    """Equal-power-split isotropic artificial noise.

    Half the budget beamforms along h, the other half is spread uniformly
    over the orthogonal complement of h, so Bob sees no noise at all and no
    eavesdropper CSI is used. Tr(W + Sigma) = P exactly.
    """
    nt = instance.nt
    if nt < 2:
        raise RequiresMultipleAntennas(
            "isotropic noise needs nt >= 2 (orthogonal complement is empty)"
        )
    h = instance.h
    p = instance.power
    proj = np.outer(h, h.conj()) / float(np.linalg.norm(h) ** 2)
    w = (p / 2.0) * proj
    sigma = (p / 2.0) / (nt - 1) * (np.eye(nt) - proj)
    return TransmitDesign(W=w, Sigma=sigma)


def no_an_mrt(instance: ProblemInstance) -> TransmitDesign:
    """Maximum-ratio transmission with no artificial noise: all power on h."""
    h = instance.h
    w = instance.power * np.outer(h, h.conj()) / float(np.linalg.norm(h) ** 2)
    return TransmitDesign(W=w, Sigma=np.zeros_like(w))


BASELINES = {"isotropic": isotropic_an, "mrt": no_an_mrt}
