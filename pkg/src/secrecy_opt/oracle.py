"""Exact worst-case eavesdropper evaluation over uncertainty balls.

Independent of the SDP machinery: the inner maximization of the eve ratio
over a Euclidean ball is computed by bisection on the ratio level t, where
each level test reduces to maximizing an indefinite quadratic over the ball
(a trust-region subproblem, solved exactly in the real embedding of
dimension 2*nt). Used both to report per-eve worst-case terms for final
designs and to cross-validate the LMI-based solver path.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .conic import embed_complex
from .errors import DimensionMismatch, NumericalFailure
from .trs import max_quadratic_over_ball
from .types import ProblemInstance, TransmitDesign, _freeze, hermitize

__all__ = ["eve_ratio", "worst_ratio", "evaluate_design", "WorstCaseEveReport"]


@dataclass(frozen=True)
class WorstCaseEveReport:
    """Worst-case terms for one eavesdropper at a fixed design.

    worst_g is the certificate channel attaining worst_ratio inside the
    ball; secrecy_term = bob_term - log2(worst_ratio).
    """

    k: int
    worst_ratio: float
    worst_g: np.ndarray
    bob_term: float
    secrecy_term: float

    def __post_init__(self):
        object.__setattr__(self, "worst_g", _freeze(np.asarray(self.worst_g, dtype=complex)))

    def to_json(self) -> dict:
        from .types import cvec_to_json

        return {
            "k": self.k,
            "worst_ratio": self.worst_ratio,
            "worst_g": cvec_to_json(self.worst_g),
            "bob_term": self.bob_term,
            "secrecy_term": self.secrecy_term,
        }


def eve_ratio(g: np.ndarray, w: np.ndarray, sigma: np.ndarray) -> float:
    """(1 + g^H (W+Sigma) g) / (1 + g^H Sigma g), the eve's SNR-like ratio.

    Fused form of 1 + g^H W g / (1 + g^H Sigma g); >= 1 whenever W is PSD.
    """
    g = np.asarray(g, dtype=complex).ravel()
    if w.shape[0] != g.shape[0] or sigma.shape[0] != g.shape[0]:
        raise DimensionMismatch("g, W, Sigma dimensions do not match")
    an = float(np.real(g.conj() @ sigma @ g))
    sig = float(np.real(g.conj() @ w @ g))
    return (1.0 + an + sig) / (1.0 + an)


def worst_ratio(
    g_bar: np.ndarray,
    epsilon: float,
    w: np.ndarray,
    sigma: np.ndarray,
    rel_tol: float = 1e-9,
    max_iter: int = 200,
):
    """Maximize eve_ratio over the ball ||g - g_bar|| <= epsilon, exactly.

    Bisects on the level t: "some g in the ball reaches ratio >= t" holds
    iff the ball maximum of g^H (W - (t-1) Sigma) g exceeds t - 1, a
    trust-region subproblem solved exactly. Every feasible level yields a
    certificate g whose actual ratio tightens the lower bracket, so the
    returned ratio is attained by the returned certificate.

    Returns (ratio, worst_g).
    """
    g_bar = np.asarray(g_bar, dtype=complex).ravel()
    n = g_bar.shape[0]
    if epsilon < 0:
        raise ValueError("epsilon must be >= 0")

    best_g = g_bar
    t_lo = eve_ratio(g_bar, w, sigma)
    lam_max = float(np.linalg.eigvalsh(hermitize(w)).max()) if n else 0.0
    t_hi = 1.0 + max(lam_max, 0.0) * (np.linalg.norm(g_bar) + epsilon) ** 2
    if epsilon == 0.0 or t_hi <= t_lo * (1.0 + rel_tol):
        return t_lo, g_bar

    w = hermitize(np.asarray(w, dtype=complex))
    sigma = hermitize(np.asarray(sigma, dtype=complex))
    for _ in range(max_iter):
        if t_hi - t_lo <= rel_tol * t_hi:
            break
        t = 0.5 * (t_lo + t_hi)
        c = w - (t - 1.0) * sigma
        b_c = c @ g_bar
        s_real = embed_complex(c)
        b_real = np.concatenate([b_c.real, b_c.imag])
        _x, val = max_quadratic_over_ball(s_real, b_real, epsilon)
        total = val + float(np.real(g_bar.conj() @ c @ g_bar))
        if total >= t - 1.0:
            dg = _x[:n] + 1j * _x[n:]
            nrm = np.linalg.norm(dg)
            if nrm > epsilon:
                dg *= epsilon / nrm
            g = g_bar + dg
            r = eve_ratio(g, w, sigma)
            if r >= t_lo:
                t_lo, best_g = r, g
            else:  # certificate no better than current; still a feasible level
                t_lo = max(t_lo, t)
        else:
            t_hi = t
    else:
        raise NumericalFailure(
            f"worst-ratio bisection failed to converge: bracket [{t_lo:.12e}, {t_hi:.12e}], "
            f"lam_max(W)={lam_max:.3e}, epsilon={epsilon:.3e}"
        )
    return eve_ratio(best_g, w, sigma), best_g


def evaluate_design(instance: ProblemInstance, design: TransmitDesign):
    """Worst-case secrecy rate of a design, with per-eve reports.

    rate = max(0, min_k secrecy_term_k) in bps/Hz.
    """
    h = instance.h
    w, sigma = design.W, design.Sigma
    bob_num = float(np.real(h.conj() @ w @ h))
    bob_den = 1.0 + float(np.real(h.conj() @ sigma @ h))
    bob_term = float(np.log2(1.0 + bob_num / bob_den))
    reports = []
    for k, eve in enumerate(instance.eves):
        ratio, g = worst_ratio(eve.g_bar, eve.epsilon, w, sigma)
        reports.append(
            WorstCaseEveReport(
                k=k,
                worst_ratio=ratio,
                worst_g=g,
                bob_term=bob_term,
                secrecy_term=bob_term - float(np.log2(ratio)),
            )
        )
    rate = max(0.0, min(r.secrecy_term for r in reports))
    return rate, reports
