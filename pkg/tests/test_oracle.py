import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from secrecy_opt import eve_ratio, evaluate_design, worst_ratio
from secrecy_opt.trs import max_quadratic_over_ball
from secrecy_opt.types import zero_design
from conftest import make_instance, orthogonal_instance


def rand_psd(rng, n, scale=1.0):
    a = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    return scale * (a @ a.conj().T) / n


def rand_cvec(rng, n):
    return (rng.normal(size=n) + 1j * rng.normal(size=n)) * np.sqrt(0.5)


def sample_ball(rng, center, eps, count):
    n = center.shape[0]
    z = rng.normal(size=(count, n)) + 1j * rng.normal(size=(count, n))
    z /= np.linalg.norm(z, axis=1, keepdims=True)
    radii = eps * rng.uniform(0, 1, size=count) ** (1.0 / (2 * n))
    return center[None, :] + radii[:, None] * z


# --- trust-region subproblem -----------------------------------------------

def test_trs_interior_matches_closed_form(rng):
    for _ in range(25):
        n = int(rng.integers(2, 9))
        a = rng.normal(size=(n, n))
        s = -(a @ a.T) - 0.1 * np.eye(n)  # negative definite -> concave
        b = 0.01 * rng.normal(size=n)
        x, val = max_quadratic_over_ball(s, b, 1e6)
        x_star = np.linalg.solve(-s, b)
        assert np.allclose(x, x_star, atol=1e-10 * (1 + np.linalg.norm(x_star)))
        assert val == pytest.approx(float(x_star @ s @ x_star + 2 * b @ x_star), abs=1e-10)


def test_trs_dominates_samples(rng):
    for _ in range(20):
        n = int(rng.integers(2, 7))
        s = rng.normal(size=(n, n))
        s = 0.5 * (s + s.T)  # indefinite
        b = rng.normal(size=n)
        radius = float(rng.uniform(0.1, 3.0))
        _x, val = max_quadratic_over_ball(s, b, radius)
        z = rng.normal(size=(4000, n))
        z = radius * (z / np.linalg.norm(z, axis=1, keepdims=True)) * rng.uniform(
            0, 1, size=(4000, 1)
        ) ** (1 / n)
        sampled = np.einsum("ij,jk,ik->i", z, s, z) + 2 * z @ b
        assert sampled.max() <= val + 1e-9 * (1 + abs(val))


def test_trs_boundary_when_convex(rng):
    s = np.diag([2.0, 1.0])
    b = np.zeros(2)
    x, val = max_quadratic_over_ball(s, b, 1.5)
    assert np.linalg.norm(x) == pytest.approx(1.5, abs=1e-9)
    assert val == pytest.approx(2.0 * 1.5**2, abs=1e-8)


def test_trs_hard_case():
    # top eigenspace orthogonal to b: solution pads along the top eigenvector
    s = np.diag([3.0, 1.0, -1.0])
    b = np.array([0.0, 0.5, 0.2])
    radius = 2.0
    x, val = max_quadratic_over_ball(s, b, radius)
    assert np.linalg.norm(x) == pytest.approx(radius, abs=1e-8)
    z = np.random.default_rng(0).normal(size=(20000, 3))
    z = radius * z / np.linalg.norm(z, axis=1, keepdims=True)
    sampled = np.einsum("ij,jk,ik->i", z, s, z) + 2 * z @ b
    assert val >= sampled.max() - 1e-6


def test_trs_zero_radius():
    x, val = max_quadratic_over_ball(np.eye(2), np.ones(2), 0.0)
    assert np.all(x == 0) and val == 0.0


# --- eve_ratio ----------------------------------------------------------------

def test_eve_ratio_zero_w(rng):
    g = rand_cvec(rng, 3)
    sigma = rand_psd(rng, 3)
    assert eve_ratio(g, np.zeros((3, 3)), sigma) == pytest.approx(1.0, abs=1e-14)


def test_eve_ratio_identity():
    g = np.array([1.0, 1.0, 1.0]) / np.sqrt(3) * np.sqrt(3)  # ||g||^2 = 3
    assert eve_ratio(g, np.eye(3), np.zeros((3, 3))) == pytest.approx(4.0, abs=1e-12)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**31 - 1), st.integers(1, 5))
def test_eve_ratio_matches_two_expression_form(seed, n):
    r = np.random.Generator(np.random.Philox(seed))
    g = rand_cvec(r, n)
    w = rand_psd(r, n)
    sigma = rand_psd(r, n)
    direct = 1.0 + float(np.real(g.conj() @ w @ g)) / (1.0 + float(np.real(g.conj() @ sigma @ g)))
    assert eve_ratio(g, w, sigma) == pytest.approx(direct, rel=1e-12)


# --- worst_ratio ----------------------------------------------------------------

def test_worst_ratio_point_ball(rng):
    g = rand_cvec(rng, 3)
    w, sigma = rand_psd(rng, 3), rand_psd(rng, 3)
    ratio, worst_g = worst_ratio(g, 0.0, w, sigma)
    assert ratio == pytest.approx(eve_ratio(g, w, sigma), rel=1e-14)
    assert np.array_equal(worst_g, g)


def test_worst_ratio_rank_one_origin(rng):
    w_vec = rand_cvec(rng, 3)
    w = np.outer(w_vec, w_vec.conj())
    ratio, worst_g = worst_ratio(np.zeros(3, dtype=complex), 1.0, w, np.zeros((3, 3)))
    expected = 1.0 + float(np.linalg.norm(w_vec) ** 2)
    assert ratio == pytest.approx(expected, rel=1e-9)
    # attained along w up to phase
    align = abs(np.vdot(worst_g, w_vec)) / (np.linalg.norm(worst_g) * np.linalg.norm(w_vec))
    assert align == pytest.approx(1.0, abs=1e-6)


def test_worst_ratio_vs_dense_sampling(rng):
    g_bar = rand_cvec(rng, 2)
    w, sigma = rand_psd(rng, 2, 3.0), rand_psd(rng, 2)
    eps = 0.5

    def ratios_at(pts):
        num = 1.0 + np.real(np.einsum("ij,jk,ik->i", pts.conj(), w + sigma, pts))
        den = 1.0 + np.real(np.einsum("ij,jk,ik->i", pts.conj(), sigma, pts))
        return num / den

    def unit(z):
        return z / np.linalg.norm(z, axis=1, keepdims=True)

    # global pass: interior + boundary shell samples
    pts = np.vstack(
        [
            sample_ball(rng, g_bar, eps, 400_000),
            g_bar[None, :]
            + eps * unit(rng.normal(size=(600_000, 2)) + 1j * rng.normal(size=(600_000, 2))),
        ]
    )
    vals = ratios_at(pts)
    best = int(np.argmax(vals))
    sampled_max = float(vals[best])
    # zoom pass: resample the cap around the empirical argmax direction
    dir0 = unit((pts[best] - g_bar)[None, :])[0]
    cap = unit(
        dir0[None, :]
        + 0.05 * unit(rng.normal(size=(500_000, 2)) + 1j * rng.normal(size=(500_000, 2)))
    )
    sampled_max = max(sampled_max, float(ratios_at(g_bar[None, :] + eps * cap).max()))

    ratio, worst_g = worst_ratio(g_bar, eps, w, sigma)
    assert sampled_max <= ratio * (1 + 1e-9)  # oracle upper-bounds every sample
    assert ratio <= sampled_max * (1 + 1e-4)  # dense sampling gets close


def test_worst_ratio_soundness_and_attainment(rng):
    for _ in range(10):
        n = int(rng.integers(2, 5))
        g_bar = rand_cvec(rng, n)
        w, sigma = rand_psd(rng, n, 2.0), rand_psd(rng, n)
        eps = float(rng.uniform(0.05, 0.8))
        ratio, worst_g = worst_ratio(g_bar, eps, w, sigma)
        assert np.linalg.norm(worst_g - g_bar) <= eps * (1 + 1e-9)
        assert eve_ratio(worst_g, w, sigma) >= ratio - 1e-7  # certificate attains
        pts = sample_ball(rng, g_bar, eps, 10_000)
        num = 1.0 + np.real(np.einsum("ij,jk,ik->i", pts.conj(), w + sigma, pts))
        den = 1.0 + np.real(np.einsum("ij,jk,ik->i", pts.conj(), sigma, pts))
        assert float((num / den).max()) <= ratio + 1e-8


def test_worst_ratio_monotone_in_epsilon(rng):
    g_bar = rand_cvec(rng, 3)
    w, sigma = rand_psd(rng, 3), rand_psd(rng, 3)
    ratios = [worst_ratio(g_bar, e, w, sigma)[0] for e in (0.0, 0.1, 0.2, 0.4, 0.8)]
    assert all(b >= a - 1e-9 for a, b in zip(ratios, ratios[1:]))


def test_worst_ratio_zero_w(rng):
    g_bar = rand_cvec(rng, 3)
    ratio, worst_g = worst_ratio(g_bar, 0.5, np.zeros((3, 3)), rand_psd(rng, 3))
    assert ratio == pytest.approx(1.0, abs=1e-12)


# --- evaluate_design ----------------------------------------------------------

def test_evaluate_zero_design(rng):
    inst = make_instance(rng)
    rate, reports = evaluate_design(inst, zero_design(inst.nt))
    assert rate == 0.0
    assert all(r.worst_ratio == pytest.approx(1.0, abs=1e-12) for r in reports)


def test_evaluate_orthogonal_mrt():
    inst = orthogonal_instance(power=10.0)
    h = inst.h
    w = inst.power * np.outer(h, h.conj()) / np.linalg.norm(h) ** 2
    from secrecy_opt import TransmitDesign

    design = TransmitDesign(W=w, Sigma=np.zeros_like(w))
    rate, reports = evaluate_design(inst, design)
    assert rate == pytest.approx(np.log2(1 + 10.0), abs=1e-9)


def test_evaluate_rate_is_clamped_min(rng):
    inst = make_instance(rng, nt=3, k=2)
    from secrecy_opt.baselines import no_an_mrt

    rate, reports = evaluate_design(inst, no_an_mrt(inst))
    worst = min(r.secrecy_term for r in reports)
    assert rate == pytest.approx(max(0.0, worst), abs=1e-12)
