"""Exact maximization of a quadratic over a Euclidean ball.

Solves  max  x'Sx + 2 b'x  s.t.  ||x|| <= radius  for real symmetric S of
any inertia, via eigendecomposition and More-Sorensen style root finding on
the secular equation of the shifted system (nu I - S) x = b. The hard case
(b orthogonal to the top eigenspace) is handled by moving along the top
eigenvector to the ball boundary.

Dimensions here are tiny (2 * nt), so a dense eigensolve per call is cheap
and the secular equation is solved to near machine precision.
"""
from __future__ import annotations

import numpy as np

from .errors import NumericalFailure

_EPS = np.finfo(float).eps


def _secular_norm2(nu, d, g2):
    return float(np.sum(g2 / (nu - d) ** 2))


def max_quadratic_over_ball(s: np.ndarray, b: np.ndarray, radius: float):
    """Return (x, value) maximizing x'Sx + 2 b'x over the ball ||x|| <= radius."""
    s = np.asarray(s, dtype=float)
    b = np.asarray(b, dtype=float).ravel()
    n = b.shape[0]
    if radius < 0:
        raise ValueError("radius must be >= 0")
    if radius == 0.0 or n == 0:
        return np.zeros(n), 0.0

    d, u = np.linalg.eigh(s)
    g = u.T @ b
    g2 = g * g
    d_max = float(d[-1])
    scale = max(1.0, float(np.max(np.abs(d))), float(np.linalg.norm(g)) / radius)

    # Interior stationary point exists only when S is negative semidefinite.
    if d_max < 0.0:
        y0 = g / (0.0 - d)
        if np.linalg.norm(y0) <= radius:
            x = u @ y0
            return x, float(x @ s @ x + 2.0 * b @ x)

    nu_lo = max(d_max, 0.0)
    nu_hi = nu_lo + np.linalg.norm(g) / radius

    # Hard case: no root above nu_lo because b has (numerically) no
    # component on the top eigenspace. Take the pseudo-inverse solution at
    # nu_lo and pad with the top eigenvector up to the boundary.
    probe = nu_lo + 1e-11 * scale
    if nu_hi <= nu_lo or _secular_norm2(probe, d, g2) <= radius**2:
        nu = nu_lo
        gap = nu - d
        y = np.where(gap > 1e-9 * scale, g / np.where(gap > 0, gap, 1.0), 0.0)
        norm2 = float(y @ y)
        if norm2 > radius**2:  # borderline regular: rescale
            y *= radius / np.sqrt(norm2)
            tau = 0.0
        else:
            tau = np.sqrt(max(radius**2 - norm2, 0.0))
        e_top = np.zeros(n)
        e_top[-1] = 1.0
        x = u @ (y + tau * e_top)
        return x, float(x @ s @ x + 2.0 * b @ x)

    # Regular case: Newton on f(nu) = 1/radius - 1/||y(nu)|| (monotone
    # decreasing, near-linear) with bisection safeguards on [nu_lo, nu_hi].
    lo, hi = probe, nu_hi
    nu = 0.5 * (lo + hi)
    for _ in range(200):
        norm2 = _secular_norm2(nu, d, g2)
        norm = np.sqrt(norm2)
        f = 1.0 / radius - 1.0 / norm
        if f > 0:  # ||y|| > radius: nu too small
            lo = nu
        else:
            hi = nu
        fprime = -float(np.sum(g2 / (nu - d) ** 3)) / norm2 / norm
        if fprime < 0:
            step = nu - f / fprime
            nu_next = step if lo < step < hi else 0.5 * (lo + hi)
        else:
            nu_next = 0.5 * (lo + hi)
        if abs(nu_next - nu) <= 4 * _EPS * max(1.0, abs(nu)):
            nu = nu_next
            break
        nu = nu_next
        if hi - lo <= 4 * _EPS * max(1.0, hi):
            break
    else:
        raise NumericalFailure(
            f"secular root finding stalled: bracket [{lo:.6e}, {hi:.6e}], "
            f"eig range [{d[0]:.3e}, {d_max:.3e}]"
        )

    y = g / (nu - d)
    norm = np.linalg.norm(y)
    if norm > 0:
        y *= radius / norm  # put the solution exactly on the boundary
    x = u @ y
    return x, float(x @ s @ x + 2.0 * b @ x)
