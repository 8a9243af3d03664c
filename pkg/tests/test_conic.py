import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from secrecy_opt import NonHermitianInput, SdpProblem, SolveStatus, embed_complex
from secrecy_opt.conic import (
    SolveTolerances,
    coords_to_matrix,
    default_backend,
    functional_coords,
    hermitian_basis,
    svec,
    unsvec,
)


def rand_hermitian(rng, n):
    a = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    return 0.5 * (a + a.conj().T)


# --- embedding ------------------------------------------------------------

def test_embed_identity():
    out = embed_complex(np.eye(2, dtype=complex))
    assert np.array_equal(out, np.eye(4))


def test_embed_pauli_y():
    h = np.array([[0.0, 1j], [-1j, 0.0]])
    out = embed_complex(h)
    eigs = np.sort(np.linalg.eigvalsh(out))
    assert np.allclose(eigs, [-1, -1, 1, 1], atol=1e-14)


def test_embed_eigenvalue_doubling(rng):
    h = rand_hermitian(rng, 3)
    he = np.sort(np.linalg.eigvalsh(h))
    ee = np.sort(np.linalg.eigvalsh(embed_complex(h)))
    assert np.allclose(ee, np.repeat(he, 2), atol=1e-10)


def test_embed_rejects_non_hermitian():
    with pytest.raises(NonHermitianInput):
        embed_complex(np.array([[0.0, 1.0], [0.0, 0.0]]))


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 5), st.integers(0, 2**31 - 1))
def test_embed_linearity_exact(n, seed):
    r = np.random.Generator(np.random.Philox(seed))
    a, b = rand_hermitian(r, n), rand_hermitian(r, n)
    lhs = embed_complex(a + b)
    rhs = embed_complex(a) + embed_complex(b)
    assert np.array_equal(lhs, rhs)  # exact: embedding only rearranges


def test_psd_iff_embedding_psd(rng):
    h = rand_hermitian(rng, 3)
    h_psd = h.conj().T @ h
    assert np.linalg.eigvalsh(embed_complex(h_psd)).min() >= -1e-12
    h_indef = h_psd - 2.0 * np.eye(3) * float(np.linalg.eigvalsh(h_psd)[1])
    same_sign = np.linalg.eigvalsh(h_indef).min() < 0
    assert same_sign == (np.linalg.eigvalsh(embed_complex(h_indef)).min() < 0)


# --- svec / coordinates ------------------------------------------------------

def test_svec_roundtrip(rng):
    m = rng.normal(size=(4, 4))
    m = 0.5 * (m + m.T)
    assert np.allclose(unsvec(svec(m), 4), m, atol=1e-14)


def test_svec_preserves_inner_product(rng):
    a = rng.normal(size=(3, 3)); a = 0.5 * (a + a.T)
    b = rng.normal(size=(3, 3)); b = 0.5 * (b + b.T)
    assert np.trace(a @ b) == pytest.approx(float(svec(a) @ svec(b)), rel=1e-12)


def test_coords_and_functional(rng):
    n = 3
    basis = hermitian_basis(n)
    x = rng.normal(size=n * n)
    m = np.tensordot(x, basis, axes=1)
    assert np.allclose(coords_to_matrix(x, n), m, atol=1e-14)
    f = rand_hermitian(rng, n)
    assert float(functional_coords(f) @ x) == pytest.approx(
        float(np.real(np.trace(f @ m))), rel=1e-10, abs=1e-12
    )


# --- solve ------------------------------------------------------------------

def test_solve_min_trace_psd():
    p = SdpProblem("min-trace")
    p.add_psd_var("X", 2)
    p.set_objective("min", {}, {"X": np.eye(2)})
    p.add_lmi("floor", 2, const=-np.eye(2), matrix_terms=[("X", 1.0, None)])  # X - I >= 0
    sol = default_backend().solve(p)
    assert sol.status is SolveStatus.OPTIMAL
    assert sol.objective == pytest.approx(2.0, abs=1e-7)
    assert np.allclose(sol.primal["X"], np.eye(2), atol=1e-6)
    # dual of the floor LMI is the identity here
    assert np.allclose(sol.duals["floor"], np.eye(2), atol=1e-6)


def test_solve_max_scalar():
    p = SdpProblem("max-x")
    p.add_scalar_var("x", nonneg=True)
    p.set_objective("max", {"x": 1.0})
    p.add_linear("cap", "le", 3.0, {"x": 1.0})
    sol = default_backend().solve(p)
    assert sol.status is SolveStatus.OPTIMAL
    assert sol.objective == pytest.approx(3.0, abs=1e-8)
    assert sol.primal["x"] == pytest.approx(3.0, abs=1e-8)


def test_weak_duality_and_residual_contract(rng):
    p = SdpProblem("wd")
    p.add_psd_var("X", 3)
    c = rand_hermitian(rng, 3) + 4 * np.eye(3)
    p.set_objective("min", {}, {"X": c})
    p.add_linear("mass", "eq", 1.0, {}, {"X": np.eye(3)})
    sol = default_backend().solve(p)
    assert sol.status is SolveStatus.OPTIMAL
    gap = abs(sol.objective - sol.objective_dual)
    assert gap <= 1e-7 * (1.0 + abs(sol.objective))
    # min problem: primal is an upper bound on the dual within the gap
    assert sol.objective >= sol.objective_dual - 1e-7 * (1.0 + abs(sol.objective))


def test_infeasible_is_certified():
    p = SdpProblem("infeasible")
    p.add_scalar_var("x", nonneg=True)
    p.set_objective("min", {"x": 1.0})
    p.add_linear("impossible", "le", -1.0, {"x": 1.0})
    sol = default_backend().solve(p)
    assert sol.status is SolveStatus.INFEASIBLE


def test_unbounded_is_certified():
    p = SdpProblem("unbounded")
    p.add_scalar_var("x", nonneg=True)
    p.set_objective("max", {"x": 1.0})
    sol = default_backend().solve(p)
    assert sol.status is SolveStatus.UNBOUNDED


def test_complex_lmi_solve(rng):
    # min t s.t. t I >= H  ->  t = lambda_max(H)
    h = rand_hermitian(rng, 3)
    p = SdpProblem("lambda-max")
    p.add_scalar_var("t", nonneg=False)
    p.set_objective("min", {"t": 1.0})
    p.add_lmi("cap", 3, const=-h, scalar_terms={"t": np.eye(3, dtype=complex)})
    sol = default_backend().solve(p)
    assert sol.status is SolveStatus.OPTIMAL
    assert sol.objective == pytest.approx(float(np.linalg.eigvalsh(h).max()), abs=1e-7)


def test_congruence_term(rng):
    # min Tr(X) s.t. S^H X S >= I with S tall: X = S (S^H S)^-2 S^H-ish optimum;
    # verify primal feasibility and objective agreement with a direct solve.
    s = rng.normal(size=(3, 2)) + 1j * rng.normal(size=(3, 2))
    p = SdpProblem("congruence")
    p.add_psd_var("X", 3)
    p.set_objective("min", {}, {"X": np.eye(3)})
    p.add_lmi("floor", 2, const=-np.eye(2), matrix_terms=[("X", 1.0, s)])
    sol = default_backend().solve(p)
    assert sol.status is SolveStatus.OPTIMAL
    x = sol.primal["X"]
    val = s.conj().T @ x @ s - np.eye(2)
    assert np.linalg.eigvalsh(0.5 * (val + val.conj().T)).min() >= -1e-7


def test_dump_lists_blocks():
    p = SdpProblem("dumped")
    p.add_psd_var("X", 2)
    p.add_scalar_var("t")
    p.set_objective("min", {"t": 1.0})
    p.add_lmi("blk", 2, scalar_terms={"t": np.eye(2, dtype=complex)}, matrix_terms=[("X", -1.0, None)])
    text = p.dump()
    for token in ("sdp-problem dumped", "var X kind=psd-block n=2", "lmi blk size=2", "congruence X"):
        assert token in text


def test_tolerances_respected(rng):
    p = SdpProblem("tols")
    p.add_psd_var("X", 2)
    p.set_objective("min", {}, {"X": np.eye(2)})
    p.add_lmi("floor", 2, const=-np.eye(2), matrix_terms=[("X", 1.0, None)])
    sol = default_backend().solve(p, SolveTolerances(feas=1e-10, gap=1e-10))
    assert sol.diagnostics["r_prim"] <= 1e-7
    assert sol.diagnostics["r_dual"] <= 1e-7
