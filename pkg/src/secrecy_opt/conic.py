"""Backend-neutral SDP description and a Clarabel-based solver.

Complex Hermitian data is lowered mechanically through the real symmetric
embedding [[Re, -Im], [Im, Re]], so any real PSD-cone solver can back the
interface. Block sizes double under the embedding, which is acceptable at
the small dense scales targeted here (n <= ~16 per matrix variable).

Variables are flat real coordinate vectors under the hood: an n x n
Hermitian variable contributes n^2 real coordinates (diagonal entries plus
re/im pairs of the upper triangle, column-major).
"""
from __future__ import annotations

import io
from dataclasses import dataclass, field
from enum import Enum

import numpy as np
from scipy import sparse

from .errors import DimensionMismatch, SolverFailure
from .types import check_hermitian, hermitize

__all__ = [
    "embed_complex",
    "SdpProblem",
    "SdpSolution",
    "SolveStatus",
    "SolveTolerances",
    "ClarabelBackend",
    "default_backend",
]


def embed_complex(h: np.ndarray) -> np.ndarray:
    """Real symmetric embedding [[Re H, -Im H], [Im H, Re H]] of Hermitian H.

    H is PSD iff the embedding is PSD; every eigenvalue of H appears in the
    embedding with doubled multiplicity.
    """
    h = np.asarray(h)
    check_hermitian(h)
    re, im = h.real, h.imag
    return np.block([[re, -im], [im, re]])


def unembed_dual(v: np.ndarray) -> np.ndarray:
    """Pull a real symmetric dual block back to a complex Hermitian matrix.

    Chosen so that Tr(V * embed(T)) == Tr(unembed_dual(V) * T) for all
    Hermitian T, which keeps dual variables on the complex side consistent
    with the original (un-embedded) Lagrangian.
    """
    n = v.shape[0] // 2
    v11, v12 = v[:n, :n], v[:n, n:]
    v21, v22 = v[n:, :n], v[n:, n:]
    return hermitize((v11 + v22) + 1j * (v21 - v12))


# --- scaled-triangle (svec) packing, Clarabel convention ------------------
# Upper triangle, column-major, off-diagonal entries scaled by sqrt(2).

_SQRT2 = np.sqrt(2.0)


def svec(m: np.ndarray) -> np.ndarray:
    n = m.shape[0]
    out = np.empty(n * (n + 1) // 2)
    k = 0
    for j in range(n):
        for i in range(j + 1):
            out[k] = m[i, j] * (1.0 if i == j else _SQRT2)
            k += 1
    return out


def unsvec(v: np.ndarray, n: int) -> np.ndarray:
    m = np.zeros((n, n))
    k = 0
    for j in range(n):
        for i in range(j + 1):
            if i == j:
                m[i, j] = v[k]
            else:
                m[i, j] = m[j, i] = v[k] / _SQRT2
            k += 1
    return m


def hermitian_basis(n: int) -> np.ndarray:
    """Stack of n^2 Hermitian basis matrices matching the coordinate layout.

    Layout per matrix variable: for each column j, the diagonal (j, j) then
    re/im pairs for rows i < j.
    """
    mats = []
    for j in range(n):
        e = np.zeros((n, n), dtype=complex)
        e[j, j] = 1.0
        mats.append(e)
        for i in range(j):
            e = np.zeros((n, n), dtype=complex)
            e[i, j] = 1.0
            e[j, i] = 1.0
            mats.append(e)
            e = np.zeros((n, n), dtype=complex)
            e[i, j] = 1.0j
            e[j, i] = -1.0j
            mats.append(e)
    return np.stack(mats)


def coords_to_matrix(x: np.ndarray, n: int) -> np.ndarray:
    m = np.zeros((n, n), dtype=complex)
    k = 0
    for j in range(n):
        m[j, j] = x[k]
        k += 1
        for i in range(j):
            m[i, j] = x[k] + 1j * x[k + 1]
            m[j, i] = x[k] - 1j * x[k + 1]
            k += 2
    return m


def functional_coords(f: np.ndarray) -> np.ndarray:
    """Coordinates of X -> Tr(F X) for Hermitian F in the variable layout."""
    n = f.shape[0]
    out = np.empty(n * n)
    k = 0
    for j in range(n):
        out[k] = f[j, j].real
        k += 1
        for i in range(j):
            out[k] = 2.0 * f[i, j].real
            out[k + 1] = 2.0 * f[i, j].imag
            k += 2
    return out


class VarKind(Enum):
    PSD_BLOCK = "psd-block"
    NONNEG_SCALAR = "nonneg-scalar"
    FREE_SCALAR = "free-scalar"


@dataclass(frozen=True)
class _Var:
    name: str
    kind: VarKind
    n: int  # matrix side for PSD blocks, 1 for scalars
    offset: int  # first coordinate index

    @property
    def ncoords(self) -> int:
        return self.n * self.n if self.kind is VarKind.PSD_BLOCK else 1


@dataclass
class _LinearConstraint:
    name: str
    rel: str  # "eq" | "le" | "ge"
    rhs: float
    scalar_terms: dict
    matrix_terms: dict  # var name -> Hermitian F, meaning Tr(F X)


@dataclass
class _LmiTerm:
    var: str
    coeff: float
    s: np.ndarray | None  # contribution coeff * S^H X S; None means whole-matrix


@dataclass
class _LmiConstraint:
    name: str
    size: int
    const: np.ndarray
    scalar_terms: dict  # var name -> Hermitian matrix multiplied by the scalar
    matrix_terms: list  # list of _LmiTerm


class SolveStatus(Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"
    NUMERICAL_FAILURE = "numerical-failure"


@dataclass(frozen=True)
class SolveTolerances:
    """Target and acceptance accuracy for a conic solve.

    The solver aims for (feas, gap); a solve that stalls is still accepted
    as optimal when it certifies the looser (accept_feas, accept_gap),
    which default to the residual bound promised for optimal solutions.
    """

    feas: float = 1e-8
    gap: float = 1e-8
    max_iter: int = 200
    accept_feas: float = 1e-7
    accept_gap: float = 1e-7
    # Ruiz equilibration helps generic scaling but degrades the unscaled
    # residuals of problems that are already normalized; callers that
    # pre-scale their data may switch it off.
    equilibrate: bool = True


@dataclass
class SdpSolution:
    status: SolveStatus
    objective: float | None
    objective_dual: float | None
    primal: dict
    duals: dict
    diagnostics: dict = field(default_factory=dict)


class SdpProblem:
    """Conic program over Hermitian PSD blocks and scalar variables.

    Matrix variables enter linear constraints through trace functionals
    Tr(F X) and enter LMI blocks through congruences c * S^H X S, which is
    expressive enough for every program built in this package while keeping
    the lowering mechanical.
    """

    def __init__(self, name: str = "sdp"):
        self.name = name
        self._vars: dict[str, _Var] = {}
        self._ncoords = 0
        self._sense = "min"
        self._obj_scalar: dict[str, float] = {}
        self._obj_matrix: dict[str, np.ndarray] = {}
        self._obj_const = 0.0
        self._linear: list[_LinearConstraint] = []
        self._lmis: list[_LmiConstraint] = []

    # -- variables ---------------------------------------------------------
    def add_psd_var(self, name: str, n: int) -> str:
        self._register(name, VarKind.PSD_BLOCK, n)
        return name

    def add_scalar_var(self, name: str, nonneg: bool = True) -> str:
        self._register(name, VarKind.NONNEG_SCALAR if nonneg else VarKind.FREE_SCALAR, 1)
        return name

    def _register(self, name, kind, n):
        if name in self._vars:
            raise ValueError(f"variable {name!r} already declared")
        v = _Var(name, kind, n, self._ncoords)
        self._vars[name] = v
        self._ncoords += v.ncoords

    def _var(self, name) -> _Var:
        try:
            return self._vars[name]
        except KeyError:
            raise KeyError(f"constraint references undeclared variable {name!r}") from None

    # -- objective -----------------------------------------------------------
    def set_objective(self, sense: str, scalar_terms=None, matrix_terms=None, constant=0.0):
        if sense not in ("min", "max"):
            raise ValueError("sense must be 'min' or 'max'")
        self._sense = sense
        self._obj_scalar = dict(scalar_terms or {})
        self._obj_matrix = {k: self._checked_coeff(k, v) for k, v in (matrix_terms or {}).items()}
        self._obj_const = float(constant)

    def _checked_coeff(self, var_name, f):
        v = self._var(var_name)
        f = np.asarray(f, dtype=complex)
        if f.shape != (v.n, v.n):
            raise DimensionMismatch(f"coefficient for {var_name!r} has shape {f.shape}, expected {(v.n, v.n)}")
        check_hermitian(f)
        return f

    # -- constraints ---------------------------------------------------------
    def add_linear(self, name, rel, rhs, scalar_terms=None, matrix_terms=None):
        if rel not in ("eq", "le", "ge"):
            raise ValueError("rel must be one of 'eq', 'le', 'ge'")
        for v in (scalar_terms or {}):
            self._var(v)
        mt = {k: self._checked_coeff(k, f) for k, f in (matrix_terms or {}).items()}
        self._linear.append(_LinearConstraint(name, rel, float(rhs), dict(scalar_terms or {}), mt))

    def add_lmi(self, name, size, const=None, scalar_terms=None, matrix_terms=None):
        """Require const + sum_s x_s * F_s + sum_X c * S^H X S  >=  0 (PSD).

        matrix_terms is a list of (var, coeff, S) with S of shape (n, size);
        S=None stands for the identity (so the variable itself, for n == size).
        """
        const = np.zeros((size, size), dtype=complex) if const is None else np.asarray(const, dtype=complex)
        if const.shape != (size, size):
            raise DimensionMismatch(f"LMI const has shape {const.shape}, expected {(size, size)}")
        check_hermitian(const)
        st = {}
        for vname, f in (scalar_terms or {}).items():
            v = self._var(vname)
            if v.kind is VarKind.PSD_BLOCK:
                raise ValueError("scalar_terms entries must be scalar variables")
            f = np.asarray(f, dtype=complex)
            check_hermitian(f)
            if f.shape != (size, size):
                raise DimensionMismatch(f"scalar LMI coefficient for {vname!r} has wrong shape")
            st[vname] = f
        terms = []
        for vname, coeff, s in (matrix_terms or []):
            v = self._var(vname)
            if v.kind is not VarKind.PSD_BLOCK:
                raise ValueError("matrix_terms entries must be PSD block variables")
            if s is not None:
                s = np.asarray(s, dtype=complex)
                if s.shape != (v.n, size):
                    raise DimensionMismatch(
                        f"congruence factor for {vname!r} has shape {s.shape}, expected {(v.n, size)}"
                    )
            elif v.n != size:
                raise DimensionMismatch(f"identity congruence needs var size {size}, got {v.n}")
            terms.append(_LmiTerm(vname, float(coeff), s))
        self._lmis.append(_LmiConstraint(name, size, const, st, terms))

    # -- inspection ----------------------------------------------------------
    @property
    def variables(self):
        return [(v.name, v.kind.value, v.n) for v in self._vars.values()]

    def dump(self) -> str:
        """Text dump of blocks and coefficients for solver cross-validation."""
        out = io.StringIO()
        print(f"sdp-problem {self.name}", file=out)
        print(f"sense {self._sense}", file=out)
        for v in self._vars.values():
            print(f"var {v.name} kind={v.kind.value} n={v.n}", file=out)
        print("objective", file=out)
        for k, c in self._obj_scalar.items():
            print(f"  scalar {k} coeff {c!r}", file=out)
        for k, f in self._obj_matrix.items():
            print(f"  trace {k} coeff {np.array2string(f, precision=8)}", file=out)
        if self._obj_const:
            print(f"  const {self._obj_const!r}", file=out)
        for c in self._linear:
            print(f"linear {c.name} rel={c.rel} rhs={c.rhs!r}", file=out)
            for k, v in c.scalar_terms.items():
                print(f"  scalar {k} coeff {v!r}", file=out)
            for k, f in c.matrix_terms.items():
                print(f"  trace {k} coeff {np.array2string(f, precision=8)}", file=out)
        for c in self._lmis:
            print(f"lmi {c.name} size={c.size}", file=out)
            print(f"  const {np.array2string(c.const, precision=8)}", file=out)
            for k, f in c.scalar_terms.items():
                print(f"  scalar {k} coeff {np.array2string(f, precision=8)}", file=out)
            for t in c.matrix_terms:
                s_repr = "I" if t.s is None else np.array2string(t.s, precision=8)
                print(f"  congruence {t.var} coeff {t.coeff!r} S {s_repr}", file=out)
        return out.getvalue()

    # -- lowering ------------------------------------------------------------
    def lower(self):
        """Lower to real conic data (q, A, b, cone layout, row map).

        Returns a dict with dense A; the backend converts to CSC. Rows are
        ordered: equalities, inequalities (incl. scalar nonnegativity),
        then one embedded PSD triangle block per LMI (declared PSD block
        variables contribute an implicit X >= 0 LMI each, appended last).
        """
        n = self._ncoords
        q = np.zeros(n)
        sign = 1.0 if self._sense == "min" else -1.0
        for name, c in self._obj_scalar.items():
            q[self._var(name).offset] += sign * float(c)
        for name, f in self._obj_matrix.items():
            v = self._var(name)
            q[v.offset : v.offset + v.ncoords] += sign * functional_coords(f)

        eq_rows, eq_rhs, eq_names = [], [], []
        in_rows, in_rhs, in_names = [], [], []

        def linear_row(c: _LinearConstraint):
            row = np.zeros(n)
            for vname, coeff in c.scalar_terms.items():
                row[self._var(vname).offset] += float(coeff)
            for vname, f in c.matrix_terms.items():
                v = self._var(vname)
                row[v.offset : v.offset + v.ncoords] += functional_coords(f)
            return row

        for c in self._linear:
            row = linear_row(c)
            if c.rel == "eq":
                eq_rows.append(row)
                eq_rhs.append(c.rhs)
                eq_names.append(c.name)
            elif c.rel == "le":
                in_rows.append(row)
                in_rhs.append(c.rhs)
                in_names.append(c.name)
            else:  # ge -> negate
                in_rows.append(-row)
                in_rhs.append(-c.rhs)
                in_names.append(c.name)

        for v in self._vars.values():
            if v.kind is VarKind.NONNEG_SCALAR:
                row = np.zeros(n)
                row[v.offset] = -1.0
                in_rows.append(row)
                in_rhs.append(0.0)
                in_names.append(f"__nonneg__{v.name}")

        lmis = list(self._lmis)
        for v in self._vars.values():
            if v.kind is VarKind.PSD_BLOCK:
                lmis.append(
                    _LmiConstraint(
                        f"__psd__{v.name}", v.n, np.zeros((v.n, v.n), dtype=complex),
                        {}, [_LmiTerm(v.name, 1.0, None)],
                    )
                )

        lmi_blocks = []  # (name, complex size, A rows, b rows)
        for c in lmis:
            m2 = 2 * c.size
            tri = m2 * (m2 + 1) // 2
            a_blk = np.zeros((tri, n))
            for vname, f in c.scalar_terms.items():
                v = self._var(vname)
                a_blk[:, v.offset] -= svec(embed_complex(f))
            for t in c.matrix_terms:
                v = self._var(t.var)
                basis = hermitian_basis(v.n)
                if t.s is None:
                    contrib = t.coeff * basis
                else:
                    contrib = t.coeff * np.einsum("ai,cij,jb->cab", t.s.conj().T, basis, t.s)
                for k in range(v.ncoords):
                    a_blk[:, v.offset + k] -= svec(embed_complex(hermitize(contrib[k])))
            b_blk = svec(embed_complex(c.const))
            lmi_blocks.append((c.name, c.size, a_blk, b_blk))

        a_parts, b_parts = [], []
        if eq_rows:
            a_parts.append(np.vstack(eq_rows))
            b_parts.append(np.array(eq_rhs))
        if in_rows:
            a_parts.append(np.vstack(in_rows))
            b_parts.append(np.array(in_rhs))
        for _, _, a_blk, b_blk in lmi_blocks:
            a_parts.append(a_blk)
            b_parts.append(b_blk)
        a = np.vstack(a_parts) if a_parts else np.zeros((0, n))
        b = np.concatenate(b_parts) if b_parts else np.zeros(0)

        return {
            "q": q,
            "A": a,
            "b": b,
            "n_eq": len(eq_rows),
            "n_ineq": len(in_rows),
            "eq_names": eq_names,
            "ineq_names": in_names,
            "lmi_blocks": [(name, size) for name, size, _, _ in lmi_blocks],
            "sense_sign": sign,
            "obj_const": self._obj_const,
        }

    # -- solution extraction --------------------------------------------------
    def extract(self, lowered, x, z) -> tuple[dict, dict]:
        primal = {}
        for v in self._vars.values():
            xs = x[v.offset : v.offset + v.ncoords]
            if v.kind is VarKind.PSD_BLOCK:
                primal[v.name] = coords_to_matrix(xs, v.n)
            else:
                primal[v.name] = float(xs[0])
        duals = {}
        pos = 0
        for name in lowered["eq_names"]:
            duals[name] = float(z[pos])
            pos += 1
        for name in lowered["ineq_names"]:
            duals[name] = float(z[pos])
            pos += 1
        for name, size in lowered["lmi_blocks"]:
            m2 = 2 * size
            tri = m2 * (m2 + 1) // 2
            duals[name] = unembed_dual(unsvec(z[pos : pos + tri], m2))
            pos += tri
        return primal, duals


_STATUS_MAP = {
    "Solved": SolveStatus.OPTIMAL,
    "AlmostSolved": SolveStatus.OPTIMAL,  # certifies the acceptance tolerances
    "PrimalInfeasible": SolveStatus.INFEASIBLE,
    "DualInfeasible": SolveStatus.UNBOUNDED,
}


class ClarabelBackend:
    """Default conic backend: Clarabel interior-point solver.

    Reentrant: each solve builds an independent solver object, so distinct
    problems may be solved concurrently.
    """

    name = "clarabel"

    def solve(
        self,
        problem: SdpProblem,
        tolerances: SolveTolerances | None = None,
        raise_on_failure: bool = True,
    ) -> SdpSolution:
        lowered = problem.lower()
        return self.solve_lowered(problem, lowered, tolerances, raise_on_failure)

    def solve_lowered(self, problem, lowered, tolerances=None, raise_on_failure=True):
        import clarabel

        tol = tolerances or SolveTolerances()
        n = lowered["q"].shape[0]
        a = sparse.csc_matrix(lowered["A"])
        cones = []
        if lowered["n_eq"]:
            cones.append(clarabel.ZeroConeT(lowered["n_eq"]))
        if lowered["n_ineq"]:
            cones.append(clarabel.NonnegativeConeT(lowered["n_ineq"]))
        for _, size in lowered["lmi_blocks"]:
            cones.append(clarabel.PSDTriangleConeT(2 * size))

        settings = clarabel.DefaultSettings()
        settings.verbose = False
        settings.max_iter = tol.max_iter
        settings.tol_feas = tol.feas
        settings.tol_gap_abs = tol.gap
        settings.tol_gap_rel = tol.gap
        # AlmostSolved certifies these reduced tolerances, which we pin to
        # the acceptance thresholds so such solves remain contract-valid.
        settings.reduced_tol_feas = max(tol.feas, tol.accept_feas)
        settings.reduced_tol_gap_abs = max(tol.gap, tol.accept_gap)
        settings.reduced_tol_gap_rel = max(tol.gap, tol.accept_gap)
        settings.equilibrate_enable = tol.equilibrate
        # Blocks here are tiny and dense; decomposition only obscures duals.
        settings.chordal_decomposition_enable = False

        solver = clarabel.DefaultSolver(
            sparse.csc_matrix((n, n)), lowered["q"], a, lowered["b"], cones, settings
        )
        sol = solver.solve()
        status_name = str(sol.status)
        diagnostics = {
            "solver": self.name,
            "solver_status": status_name,
            "iterations": sol.iterations,
            "solve_time": sol.solve_time,
            "r_prim": sol.r_prim,
            "r_dual": sol.r_dual,
            "reduced_accuracy": status_name == "AlmostSolved",
        }
        status = _STATUS_MAP.get(status_name)
        if status is None:
            if raise_on_failure:
                raise SolverFailure(f"conic solve failed with status {status_name}", diagnostics)
            return SdpSolution(SolveStatus.NUMERICAL_FAILURE, None, None, {}, {}, diagnostics)

        if status is not SolveStatus.OPTIMAL:
            return SdpSolution(status, None, None, {}, {}, diagnostics)

        sign = lowered["sense_sign"]
        obj = sign * sol.obj_val + lowered["obj_const"]
        obj_dual = sign * sol.obj_val_dual + lowered["obj_const"]
        primal, duals = problem.extract(lowered, np.asarray(sol.x), np.asarray(sol.z))
        return SdpSolution(status, obj, obj_dual, primal, duals, diagnostics)


_DEFAULT = None


def default_backend() -> ClarabelBackend:
    global _DEFAULT
    if _DEFAULT is None:
        _DEFAULT = ClarabelBackend()
    return _DEFAULT


def solve(problem: SdpProblem, tolerances: SolveTolerances | None = None, **kw) -> SdpSolution:
    """Solve with the default backend. See ClarabelBackend.solve."""
    return default_backend().solve(problem, tolerances, **kw)
