"""Robust secrecy-rate maximization: S-procedure LMIs, the SDP subproblem,
and the one-dimensional line search.

The fractional objective is handled by a Charnes-Cooper change of variables
(W = Z/xi, Sigma = Q/xi) plus a scalar eve-side ratio bound beta. For fixed
beta the problem is an SDP whose optimal value phi(beta) is evaluated here;
the outer search maximizes phi over beta in [1, 1 + P*||h||^2] with a
mandatory uniform grid followed by golden-section refinement (unimodality
of phi is not guaranteed, so the grid stage is never skipped). The secrecy
rate is log2 phi(beta*).
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace

import numpy as np

from .conic import SdpProblem, SolveStatus, SolveTolerances, default_backend
from .errors import DimensionMismatch, SolverFailure
from .oracle import evaluate_design
from .types import ProblemInstance, TransmitDesign, _freeze, hermitize

logger = logging.getLogger(__name__)

_INVPHI = (np.sqrt(5.0) - 1.0) / 2.0


def beta_upper_bound(instance: ProblemInstance) -> float:
    """Largest useful eve-ratio bound, 1 + P * ||h||^2."""
    return 1.0 + instance.power * float(np.linalg.norm(instance.h) ** 2)


def build_tk(z, q, beta, xi, mu_k, g_bar_k, epsilon_k) -> np.ndarray:
    """Numeric S-procedure block for one eavesdropper.

    With M = Z - (beta-1) Q:

        T_k = [[mu_k I - M,  -M g_bar], [-g_bar^H M,  -eps^2 mu_k - g_bar^H M g_bar + (beta-1) xi]]

    Hermitian by construction. T_k >= 0 together with mu_k >= 0 certifies
    that the eve-side quadratic stays below (beta-1) xi on the whole ball.
    """
    z = np.asarray(z, dtype=complex)
    q = np.asarray(q, dtype=complex)
    g = np.asarray(g_bar_k, dtype=complex).ravel()
    n = g.shape[0]
    if z.shape != (n, n) or q.shape != (n, n):
        raise DimensionMismatch(
            f"Z {z.shape}, Q {q.shape} incompatible with g_bar of length {n}"
        )
    m = hermitize(z - (beta - 1.0) * q)
    t = np.zeros((n + 1, n + 1), dtype=complex)
    t[:n, :n] = mu_k * np.eye(n) - m
    col = -(m @ g)
    t[:n, n] = col
    t[n, :n] = col.conj()
    t[n, n] = -(epsilon_k**2) * mu_k - float(np.real(g.conj() @ m @ g)) + (beta - 1.0) * xi
    return t


@dataclass(frozen=True)
class CharnesCooperPoint:
    """Optimizer of the fixed-beta SDP in transformed variables."""

    Z: np.ndarray
    Q: np.ndarray
    xi: float
    mu: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "Z", _freeze(np.asarray(self.Z, dtype=complex)))
        object.__setattr__(self, "Q", _freeze(np.asarray(self.Q, dtype=complex)))
        object.__setattr__(self, "mu", _freeze(np.asarray(self.mu, dtype=float)))

    def validate(self, h: np.ndarray, beta: float, tol: float = 1e-7) -> None:
        if self.xi < -tol:
            raise ValueError(f"xi = {self.xi} < 0")
        if np.any(self.mu < -tol):
            raise ValueError(f"negative multiplier in mu = {self.mu}")
        for name, m in (("Z", self.Z), ("Q", self.Q)):
            lo = float(np.linalg.eigvalsh(hermitize(m)).min())
            if lo < -1e-7 * max(1.0, float(np.trace(m).real)):
                raise ValueError(f"{name} eigenvalue {lo:.3e} below PSD tolerance")
        norm = beta * (self.xi + float(np.real(h.conj() @ self.Q @ h)))
        if abs(norm - 1.0) > tol:
            raise ValueError(f"normalization beta*(xi + h^H Q h) = {norm} != 1")

    def to_design(self) -> TransmitDesign:
        return TransmitDesign(W=hermitize(self.Z) / self.xi, Sigma=hermitize(self.Q) / self.xi)


@dataclass(frozen=True)
class PhiSample:
    beta: float
    phi: float | None
    status: str  # "optimal" | "failed"


@dataclass(frozen=True)
class LineSearchTrace:
    samples: tuple
    beta_star: float
    phi_star: float

    def validate(self, beta_max: float, tol: float = 1e-9) -> None:
        for s in self.samples:
            if not (1.0 - tol <= s.beta <= beta_max * (1.0 + tol) + tol):
                raise ValueError(f"sampled beta {s.beta} outside [1, {beta_max}]")
        best = max((s.phi for s in self.samples if s.phi is not None), default=None)
        if best is None or abs(best - self.phi_star) > tol * max(1.0, abs(best)):
            raise ValueError(f"phi_star {self.phi_star} is not the max over samples ({best})")

    def to_json(self) -> list:
        return [{"beta": s.beta, "phi": s.phi, "status": s.status} for s in self.samples]


@dataclass(frozen=True)
class SecrecyResult:
    """Output of the robust design: covariances, rate, and search evidence."""

    design: TransmitDesign
    rate_worst_case: float
    beta_star: float
    trace: LineSearchTrace
    per_eve: tuple
    lambda_ratio: float | None = None

    def validate(self, tol: float = 1e-6) -> None:
        if self.rate_worst_case < 0:
            raise ValueError("rate_worst_case must be >= 0")
        worst = min(r.secrecy_term for r in self.per_eve)
        if abs(self.rate_worst_case - max(0.0, worst)) > tol:
            raise ValueError(
                f"rate {self.rate_worst_case} inconsistent with per-eve worst term {worst}"
            )

    def to_json(self) -> dict:
        out = self.design.to_json()
        out.update(
            {
                "beta_star": self.beta_star,
                "rate": self.rate_worst_case,
                "trace": self.trace.to_json(),
                "per_eve": [r.to_json() for r in self.per_eve],
                "lambda_ratio": self.lambda_ratio,
            }
        )
        return out


@dataclass(frozen=True)
class SearchOptions:
    """Line-search knobs. `exhaustive` switches to a pure N-point grid."""

    grid: int = 40
    exhaustive: int | None = None
    refine_min_iters: int = 30
    refine_max_iters: int = 120
    refine_width_rel: float = 1e-7
    min_success_frac: float = 0.8
    tolerances: SolveTolerances = field(default_factory=lambda: SolveTolerances(feas=1e-9, gap=1e-9))
    backend: object | None = None


def build_phi_problem(instance: ProblemInstance, beta: float) -> SdpProblem:
    """The fixed-beta SDP: maximize xi + h^H (Z+Q) h under the S-procedure
    blocks, the Charnes-Cooper normalization, and the transformed power cap."""
    nt = instance.nt
    h = instance.h
    hh = np.outer(h, h.conj())
    eye = np.eye(nt)
    p = SdpProblem(f"phi[nt={nt},K={instance.num_eves}]")
    p.add_psd_var("Z", nt)
    p.add_psd_var("Q", nt)
    p.add_scalar_var("xi", nonneg=True)
    for k in range(instance.num_eves):
        p.add_scalar_var(f"mu{k}", nonneg=True)
    p.set_objective("max", {"xi": 1.0}, {"Z": hh, "Q": hh})
    p.add_linear("normalization", "eq", 1.0, {"xi": beta}, {"Q": beta * hh})
    p.add_linear("power", "le", 0.0, {"xi": -instance.power}, {"Z": eye, "Q": eye})
    for k, eve in enumerate(instance.eves):
        g = eve.g_bar
        gmat = np.hstack([eye, g[:, None]])  # [I, g_bar], nt x (nt+1)
        corner = np.zeros((nt + 1, nt + 1), dtype=complex)
        corner[nt, nt] = 1.0
        mu_coeff = np.zeros((nt + 1, nt + 1), dtype=complex)
        mu_coeff[:nt, :nt] = eye
        mu_coeff[nt, nt] = -eve.epsilon**2
        p.add_lmi(
            f"T{k}",
            nt + 1,
            scalar_terms={f"mu{k}": mu_coeff, "xi": (beta - 1.0) * corner},
            matrix_terms=[("Z", -1.0, gmat), ("Q", beta - 1.0, gmat)],
        )
    return p


class PhiSolver:
    """Evaluates phi(beta) with a cached lowering.

    All lowered coefficients are affine in beta, so the structure is built
    once from two anchor values and re-assembled per call. Calls are
    independent; a single instance may be shared across threads for reads
    but per-call state is local.
    """

    def __init__(self, instance, backend=None, tolerances=None):
        self.instance = instance
        self.backend = backend or default_backend()
        self.tolerances = tolerances or SolveTolerances(feas=1e-9, gap=1e-9)
        beta_a, beta_b = 1.25, 2.75
        self._problem = build_phi_problem(instance, beta_a)
        base = self._problem.lower()
        other = build_phi_problem(instance, beta_b).lower()
        self._base = base
        scale = beta_b - beta_a
        self._beta_a = beta_a
        self._d_a = (other["A"] - base["A"]) / scale
        self._d_b = (other["b"] - base["b"]) / scale
        self._d_q = (other["q"] - base["q"]) / scale

    def lowered_at(self, beta: float) -> dict:
        t = beta - self._beta_a
        lo = dict(self._base)
        lo["A"] = self._base["A"] + t * self._d_a
        lo["b"] = self._base["b"] + t * self._d_b
        lo["q"] = self._base["q"] + t * self._d_q
        return lo

    def __call__(self, beta: float):
        """Return (phi(beta), CharnesCooperPoint). Raises SolverFailure with
        beta attached on any non-optimal outcome (the SDP is feasible for
        every beta in range, so certified infeasibility is solver trouble)."""
        closed = self._beta_one_closed_form(beta)
        if closed is not None:
            return closed
        lowered = self.lowered_at(beta)
        sol = None
        last_exc = None
        ladder = (
            self.tolerances,
            replace(self.tolerances, feas=1e-8, gap=1e-8),
            replace(self.tolerances, feas=1e-8, gap=1e-8, equilibrate=False),
        )
        for tol in ladder:
            try:
                sol = self.backend.solve_lowered(self._problem, lowered, tol)
                break
            except SolverFailure as e:
                e.diagnostics["beta"] = beta
                last_exc = e
        if sol is None:
            raise last_exc
        if sol.status is not SolveStatus.OPTIMAL:
            raise SolverFailure(
                f"phi({beta}) returned {sol.status.value} though the problem is feasible",
                {**sol.diagnostics, "beta": beta},
            )
        mu = np.array([sol.primal[f"mu{k}"] for k in range(self.instance.num_eves)])
        point = CharnesCooperPoint(Z=sol.primal["Z"], Q=sol.primal["Q"], xi=sol.primal["xi"], mu=mu)
        return float(sol.objective), point

    def _beta_one_closed_form(self, beta: float):
        """At beta = 1 with any positive ball radius, the eve block's bottom
        diagonal entry forces its multiplier and then Z to zero, pinning the
        objective at exactly 1. The SDP is maximally degenerate there, so
        return the closed form instead of solving."""
        if beta != 1.0 or not any(e.epsilon > 0 for e in self.instance.eves):
            return None
        nt = self.instance.nt
        point = CharnesCooperPoint(
            Z=np.zeros((nt, nt), dtype=complex),
            Q=np.zeros((nt, nt), dtype=complex),
            xi=1.0,
            mu=np.zeros(self.instance.num_eves),
        )
        return 1.0, point


def phi(beta: float, instance: ProblemInstance, backend=None, tolerances=None):
    """One-off evaluation of the fixed-beta SDP. See PhiSolver for batches."""
    bmax = beta_upper_bound(instance)
    if not (1.0 - 1e-12 <= beta <= bmax * (1.0 + 1e-12)):
        raise ValueError(f"beta={beta} outside [1, {bmax}]")
    return PhiSolver(instance, backend, tolerances)(beta)


class _BestTracker:
    """Keeps the incumbent (phi, beta, point) with smallest-beta tie-breaks."""

    def __init__(self):
        self.phi = -np.inf
        self.beta = None
        self.point = None

    def offer(self, beta, value, point):
        if value > self.phi or (value == self.phi and (self.beta is None or beta < self.beta)):
            self.phi, self.beta, self.point = value, beta, point


def solve_srm(instance: ProblemInstance, options: SearchOptions | None = None) -> SecrecyResult:
    """Robust secrecy-rate maximization via line search over beta.

    Uniform grid (always including beta = 1, which pins the rate at >= 0),
    then golden-section refinement around the best grid point. Isolated
    solver failures on the grid are skipped with a warning; the solve
    errors out if fewer than `min_success_frac` of the grid points succeed.
    Covariances are recovered from the winning Charnes-Cooper point.
    """
    opts = options or SearchOptions()
    bmax = beta_upper_bound(instance)
    solver = PhiSolver(instance, opts.backend, opts.tolerances)

    npts = opts.exhaustive if opts.exhaustive else opts.grid
    if npts < 2:
        raise ValueError("grid must have at least 2 points")
    grid = np.linspace(1.0, bmax, npts)
    samples: list[PhiSample] = []
    best = _BestTracker()
    best_grid_idx = None
    n_failed = 0
    for i, b in enumerate(grid):
        got = _eval_with_nudge(solver, float(b), bmax, samples)
        if got is None:
            n_failed += 1
            continue
        val, point, b_used = got
        if val > best.phi:
            best_grid_idx = i
        best.offer(b_used, val, point)
    n_ok = npts - n_failed
    if n_ok < math.ceil(opts.min_success_frac * npts):
        raise SolverFailure(
            f"only {n_ok}/{npts} grid evaluations succeeded "
            f"(need {opts.min_success_frac:.0%})"
        )

    if not opts.exhaustive:
        lo = float(grid[max(best_grid_idx - 1, 0)])
        hi = float(grid[min(best_grid_idx + 1, npts - 1)])
        _golden_refine(solver, lo, hi, opts, samples, best)

    design = best.point.to_design()
    rate = max(0.0, float(np.log2(best.phi)))
    _oracle_rate, reports = evaluate_design(instance, design)
    trace = LineSearchTrace(tuple(samples), beta_star=best.beta, phi_star=best.phi)
    return SecrecyResult(
        design=design,
        rate_worst_case=rate,
        beta_star=best.beta,
        trace=trace,
        per_eve=tuple(reports),
    )


def _eval_with_nudge(solver, b, bmax, samples):
    """Evaluate phi(b), retrying once on each side of a degenerate point.

    A hair-shifted beta changes phi by far less than the solve tolerances
    and routinely dodges geometries the interior point cannot handle.
    Returns (value, point, beta_used) or None after recording the failure.
    """
    last = None
    for bb in (b, b + 1e-9 * (1.0 + b), b - 1e-9 * (1.0 + b)):
        bb = min(max(bb, 1.0), bmax)
        try:
            val, point = solver(bb)
        except SolverFailure as e:
            last = e
            continue
        samples.append(PhiSample(bb, val, "optimal"))
        return val, point, bb
    logger.warning("phi evaluation failed at beta=%.6g: %s", b, last)
    samples.append(PhiSample(b, None, "failed"))
    return None


def _golden_refine(solver, lo, hi, opts, samples, best):
    """Golden-section maximization of phi on [lo, hi], recording samples.

    Failed probes count as -inf (steering the bracket away) rather than
    aborting: the incumbent best is kept either way, so a failure can only
    cost refinement resolution, never a regression below the grid stage.
    """
    bmax = hi

    def ev(b):
        got = _eval_with_nudge(solver, b, bmax, samples)
        if got is None:
            return -np.inf
        val, point, b_used = got
        best.offer(b_used, val, point)
        return val

    if hi - lo <= 0:
        return
    x1 = hi - _INVPHI * (hi - lo)
    x2 = lo + _INVPHI * (hi - lo)
    f1 = ev(x1)
    f2 = ev(x2)
    iters = 2
    while iters < opts.refine_max_iters:
        if np.isneginf(f1) and np.isneginf(f2):
            logger.warning("refinement stopped: solver failing across the bracket")
            break
        width_tol = opts.refine_width_rel * max(1.0, lo)
        if iters >= opts.refine_min_iters and (hi - lo) <= width_tol:
            break
        if f1 < f2:
            lo, x1, f1 = x1, x2, f2
            x2 = lo + _INVPHI * (hi - lo)
            f2 = ev(x2)
        else:
            hi, x2, f2 = x2, x1, f1
            x1 = hi - _INVPHI * (hi - lo)
            f1 = ev(x1)
        iters += 1
