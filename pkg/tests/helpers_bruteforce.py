"""Grid brute-force reference for tiny instances (nt=2, K=1).

Independent of the SDP path: enumerates rank-one designs W = p u u^H,
Sigma = q v v^H over sphere/power grids and evaluates each design's
worst-case eve ratio exactly with a vectorized bisection + 2x2 trust-region
subproblem (the same mathematical oracle as secrecy_opt.oracle, batched in
closed form). A coarse global stage is followed by zoom rounds around the
best candidates.
"""
from __future__ import annotations

import numpy as np


def bloch_dirs(n: int) -> np.ndarray:
    """n complex unit vectors in C^2 covering the Bloch sphere uniformly."""
    i = np.arange(n) + 0.5
    z = 1.0 - 2.0 * i / n
    theta = np.arccos(np.clip(z, -1.0, 1.0))
    phi = np.pi * (3.0 - np.sqrt(5.0)) * np.arange(n)
    return np.stack([np.cos(theta / 2), np.exp(1j * phi) * np.sin(theta / 2)], axis=1)


def _bloch_xyz(u):
    # u = (cos(t/2), e^{ip} sin(t/2)) up to global phase
    u0, u1 = u[..., 0], u[..., 1]
    phase = np.where(np.abs(u0) > 1e-12, u0 / np.abs(np.maximum(np.abs(u0), 1e-300)), 1.0)
    u0n, u1n = u0 / phase, u1 / phase
    theta = 2.0 * np.arctan2(np.abs(u1n), np.real(u0n))
    phi = np.angle(u1n)
    return np.stack(
        [np.sin(theta) * np.cos(phi), np.sin(theta) * np.sin(phi), np.cos(theta)], axis=-1
    )


def _xyz_to_u(xyz):
    x, y, z = xyz[..., 0], xyz[..., 1], xyz[..., 2]
    theta = np.arccos(np.clip(z, -1.0, 1.0))
    phi = np.arctan2(y, x)
    return np.stack([np.cos(theta / 2), np.exp(1j * phi) * np.sin(theta / 2)], axis=-1)


def cap_dirs(center_u, radius, n):
    """n unit vectors within angular `radius` of center_u on the Bloch sphere."""
    c = _bloch_xyz(np.asarray(center_u)[None, :])[0]
    # frame
    a = np.array([1.0, 0.0, 0.0]) if abs(c[0]) < 0.9 else np.array([0.0, 1.0, 0.0])
    e1 = np.cross(c, a)
    e1 /= np.linalg.norm(e1)
    e2 = np.cross(c, e1)
    i = np.arange(n) + 0.5
    r = radius * np.sqrt(i / n)
    ang = np.pi * (3.0 - np.sqrt(5.0)) * np.arange(n)
    xyz = (
        np.cos(r)[:, None] * c[None, :]
        + (np.sin(r) * np.cos(ang))[:, None] * e1[None, :]
        + (np.sin(r) * np.sin(ang))[:, None] * e2[None, :]
    )
    return _xyz_to_u(xyz)


def _trs_2d(d1, d2, g1, g2, eps, secular_iters=32):
    """Vectorized max of d1 r1^2 + d2 r2^2 + 2 g1 r1 + 2 g2 r2 over ||r|| <= eps.

    d1 >= d2; g1, g2 >= 0 (phases absorbed). Exact per-design solution.
    """
    eps2 = eps * eps
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        ri1 = np.where(d1 < 0, g1 / np.maximum(-d1, 1e-300), np.inf)
        ri2 = np.where(d2 < 0, g2 / np.maximum(-d2, 1e-300), np.inf)
    interior = (d1 < 0) & (ri1 * ri1 + ri2 * ri2 <= eps2)
    ri1 = np.where(interior, ri1, 0.0)
    ri2 = np.where(interior, ri2, 0.0)
    val_int = d1 * ri1**2 + d2 * ri2**2 + 2 * g1 * ri1 + 2 * g2 * ri2

    nu_lo = np.maximum(d1, 0.0)
    gn = np.sqrt(g1 * g1 + g2 * g2)
    nu_hi = nu_lo + gn / max(eps, 1e-300) + 1e-300
    lo = nu_lo + 1e-13 * (np.abs(nu_lo) + 1.0)

    def fsec(nu):
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            y1 = g1 / (nu - d1)
            y2 = g2 / (nu - d2)
            return y1 * y1 + y2 * y2

    hard = fsec(lo) <= eps2
    lo_b, hi_b = lo.copy(), nu_hi.copy()
    for _ in range(secular_iters):
        mid = 0.5 * (lo_b + hi_b)
        too_big = fsec(mid) > eps2
        lo_b = np.where(too_big, mid, lo_b)
        hi_b = np.where(too_big, hi_b, mid)
    nu = 0.5 * (lo_b + hi_b)
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        r1 = np.where(nu - d1 > 0, g1 / (nu - d1), 0.0)
        r2 = np.where(nu - d2 > 0, g2 / (nu - d2), 0.0)
    nrm = np.sqrt(r1 * r1 + r2 * r2)
    scale = np.where(nrm > 0, eps / np.maximum(nrm, 1e-300), 1.0)
    r1, r2 = r1 * scale, r2 * scale

    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        gap2 = nu_lo - d2
        r2_h = np.where(gap2 > 1e-13 * (np.abs(nu_lo) + 1.0), g2 / np.maximum(gap2, 1e-300), 0.0)
    r2_h = np.minimum(r2_h, eps)
    r1_h = np.sqrt(np.maximum(eps2 - r2_h * r2_h, 0.0))
    r1 = np.where(hard, r1_h, r1)
    r2 = np.where(hard, r2_h, r2)
    val_b = d1 * r1 * r1 + d2 * r2 * r2 + 2 * g1 * r1 + 2 * g2 * r2
    return np.where(interior, val_int, val_b)


def batch_worst_ratio_rank1(g_bar, eps, u, p, v, q, level_iters=30):
    """Worst-case eve ratio over the eps-ball for designs (p uu^H, q vv^H).

    All of u (B,2), v (B,2), p (B,), q (B,) are batched; returns (B,)
    ratios via lockstep bisection on the ratio level.
    """
    g_bar = np.asarray(g_bar, dtype=complex).ravel()

    def ratio_at_center():
        gu = np.abs(np.conj(u[:, 0]) * g_bar[0] + np.conj(u[:, 1]) * g_bar[1]) ** 2
        gv = np.abs(np.conj(v[:, 0]) * g_bar[0] + np.conj(v[:, 1]) * g_bar[1]) ** 2
        an = q * gv
        return (1.0 + an + p * gu) / (1.0 + an)

    t_lo = ratio_at_center()
    if eps == 0.0:
        return t_lo
    t_hi = np.maximum(1.0 + p * (np.linalg.norm(g_bar) + eps) ** 2, t_lo)
    for _ in range(level_iters):
        t = 0.5 * (t_lo + t_hi)
        s = t - 1.0
        # C = p uu^H - s q vv^H, 2x2 Hermitian
        a = p * np.abs(u[:, 0]) ** 2 - s * q * np.abs(v[:, 0]) ** 2
        b = p * np.abs(u[:, 1]) ** 2 - s * q * np.abs(v[:, 1]) ** 2
        c = p * u[:, 0] * np.conj(u[:, 1]) - s * q * v[:, 0] * np.conj(v[:, 1])
        mean = 0.5 * (a + b)
        rad = np.sqrt(np.maximum(0.25 * (a - b) ** 2 + np.abs(c) ** 2, 0.0))
        d1, d2 = mean + rad, mean - rad
        w1x = c.astype(complex)
        w1y = (d1 - a).astype(complex)
        nrm = np.sqrt(np.abs(w1x) ** 2 + np.abs(w1y) ** 2)
        deg = nrm <= 1e-14 * (np.abs(d1) + np.abs(d2) + 1.0)
        w1x = np.where(deg, 1.0 + 0j, w1x)
        w1y = np.where(deg, 0.0 + 0j, w1y)
        nrm = np.where(deg, 1.0, nrm)
        w1x, w1y = w1x / nrm, w1y / nrm
        w2x, w2y = -np.conj(w1y), np.conj(w1x)
        bg0 = a * g_bar[0] + c * g_bar[1]
        bg1 = np.conj(c) * g_bar[0] + b * g_bar[1]
        gam1 = np.abs(np.conj(w1x) * bg0 + np.conj(w1y) * bg1)
        gam2 = np.abs(np.conj(w2x) * bg0 + np.conj(w2y) * bg1)
        val = _trs_2d(d1, d2, gam1, gam2, eps)
        total = val + np.real(np.conj(g_bar[0]) * bg0 + np.conj(g_bar[1]) * bg1)
        feas = total >= s
        t_lo = np.where(feas, t, t_lo)
        t_hi = np.where(feas, t_hi, t)
    return t_lo


def _rates_for(instance, u, v, p, q, chunk=250_000):
    h = instance.h
    eve = instance.eves[0]
    out = np.empty(u.shape[0])
    for start in range(0, u.shape[0], chunk):
        sl = slice(start, start + chunk)
        uu, vv, pp, qq = u[sl], v[sl], p[sl], q[sl]
        hu = np.abs(np.conj(uu[:, 0]) * h[0] + np.conj(uu[:, 1]) * h[1]) ** 2
        hv = np.abs(np.conj(vv[:, 0]) * h[0] + np.conj(vv[:, 1]) * h[1]) ** 2
        bob = 1.0 + pp * hu / (1.0 + qq * hv)
        ratio = batch_worst_ratio_rank1(eve.g_bar, eve.epsilon, uu, pp, vv, qq)
        out[sl] = np.log2(bob) - np.log2(ratio)
    return out


def _mesh(us, vs, fracs, power):
    nu, nv, npq = us.shape[0], vs.shape[0], fracs.shape[0]
    ui = np.repeat(np.arange(nu), nv * npq)
    vi = np.tile(np.repeat(np.arange(nv), npq), nu)
    fi = np.tile(np.arange(npq), nu * nv)
    return (
        us[ui],
        vs[vi],
        power * fracs[fi, 0],
        power * fracs[fi, 1],
    )


def brute_force_best_rate(
    instance,
    n_u=256,
    n_v=80,
    n_pow=8,
    zoom_rounds=3,
    top=6,
):
    """Best worst-case rate over rank-one designs on a zoomed grid."""
    assert instance.nt == 2 and instance.num_eves == 1
    power = instance.power
    pf = np.linspace(1.0 / n_pow, 1.0, n_pow)
    qf = np.linspace(0.0, 1.0, n_pow)
    fracs = np.array([(a, b) for a in pf for b in qf if a + b <= 1.0 + 1e-12])

    us, vs = bloch_dirs(n_u), bloch_dirs(n_v)
    u, v, p, q = _mesh(us, vs, fracs, power)
    rates = _rates_for(instance, u, v, p, q)
    order = np.argsort(rates)[::-1]
    cands = [(u[i], v[i], p[i], q[i]) for i in order[: top * 40 : 40]]
    cands.insert(0, (u[order[0]], v[order[0]], p[order[0]], q[order[0]]))
    best = float(rates[order[0]])

    u_rad = 2.2 * np.sqrt(4 * np.pi / n_u)
    v_rad = 2.2 * np.sqrt(4 * np.pi / n_v)
    p_rad = power / n_pow
    for _ in range(zoom_rounds):
        new_cands = []
        for cu, cv, cp, cq in cands:
            us_l = cap_dirs(cu, u_rad, 40)
            vs_l = cap_dirs(cv, v_rad, 28)
            pl = np.clip(np.linspace(cp - p_rad, cp + p_rad, 5), 0.0, power)
            ql = np.clip(np.linspace(cq - p_rad, cq + p_rad, 5), 0.0, power)
            fr = np.array(
                [(a / power, b / power) for a in pl for b in ql if a + b <= power * (1 + 1e-12)]
            )
            if fr.size == 0:
                continue
            ul, vl, pl2, ql2 = _mesh(us_l, vs_l, fr, power)
            r = _rates_for(instance, ul, vl, pl2, ql2)
            i = int(np.argmax(r))
            new_cands.append((ul[i], vl[i], pl2[i], ql2[i]))
            best = max(best, float(r[i]))
        cands = new_cands or cands
        u_rad *= 0.35
        v_rad *= 0.35
        p_rad *= 0.35
    return max(best, 0.0)
