"""Core domain types: problem instances, transmit designs, serialization.

All types are immutable after construction (arrays are set read-only) and
safe to share across threads. Complex numbers are pairs of float64
throughout; rates are base-2 logs (bps/Hz); transmit power is stored in
linear scale with noise variances normalized to 1, so the JSON interface
accepts power in dB.
"""
from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .errors import (
    DimensionMismatch,
    EmptyEveList,
    NegativeEpsilon,
    NonHermitianInput,
    NonPositivePower,
    ZeroBobChannel,
)

HERMITIAN_RTOL = 1e-12


def db_to_linear(db: float) -> float:
    return 10.0 ** (db / 10.0)


def linear_to_db(lin: float) -> float:
    return 10.0 * np.log10(lin)


def _freeze(a: np.ndarray) -> np.ndarray:
    a = np.asarray(a)
    a.setflags(write=False)
    return a


def hermitian_violation(a: np.ndarray) -> float:
    """max_ij |A_ij - conj(A_ji)|, the deviation from Hermitian symmetry."""
    return float(np.max(np.abs(a - a.conj().T))) if a.size else 0.0


def check_hermitian(a: np.ndarray, rtol: float = HERMITIAN_RTOL) -> None:
    a = np.asarray(a)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise NonHermitianInput(f"expected a square matrix, got shape {a.shape}")
    scale = 1.0 + (float(np.max(np.abs(a))) if a.size else 0.0)
    if hermitian_violation(a) > rtol * scale:
        raise NonHermitianInput(
            f"matrix asymmetry {hermitian_violation(a):.3e} exceeds {rtol:.1e}*(1+maxabs)"
        )


def hermitize(a: np.ndarray) -> np.ndarray:
    """Return the Hermitian part (A + A^H)/2."""
    return 0.5 * (a + a.conj().T)


# ---------------------------------------------------------------------------
# JSON encoding of complex data
#
# Vectors:  [[re, im], ...]
# Matrices: {"re": [[...]], "im": [[...]]}
# Floats go through Python's repr so parse(emit(x)) is bit-exact.
# ---------------------------------------------------------------------------

def cvec_to_json(v: np.ndarray) -> list:
    v = np.asarray(v, dtype=complex).ravel()
    return [[float(x.real), float(x.imag)] for x in v]


def cvec_from_json(obj) -> np.ndarray:
    try:
        return np.array([complex(re, im) for re, im in obj], dtype=complex)
    except (TypeError, ValueError) as e:
        raise DimensionMismatch(f"malformed complex vector: {e}") from e


def cmat_to_json(m: np.ndarray) -> dict:
    m = np.asarray(m, dtype=complex)
    return {"re": m.real.tolist(), "im": m.imag.tolist()}


def cmat_from_json(obj) -> np.ndarray:
    try:
        return np.array(obj["re"], dtype=float) + 1j * np.array(obj["im"], dtype=float)
    except (TypeError, KeyError, ValueError) as e:
        raise DimensionMismatch(f"malformed complex matrix: {e}") from e


@dataclass(frozen=True)
class ComplexMatrix:
    """Dense complex matrix with an optional Hermitian contract.

    Hermitian-flagged instances are validated at construction:
    max_ij |A_ij - conj(A_ji)| <= 1e-12 * (1 + maxabs).
    """

    data: np.ndarray
    hermitian: bool = False

    def __post_init__(self):
        a = np.asarray(self.data, dtype=complex)
        if a.ndim != 2:
            raise DimensionMismatch(f"expected a 2-D array, got ndim={a.ndim}")
        if self.hermitian:
            check_hermitian(a)
        object.__setattr__(self, "data", _freeze(a))

    @property
    def rows(self) -> int:
        return self.data.shape[0]

    @property
    def cols(self) -> int:
        return self.data.shape[1]

    def to_json(self) -> dict:
        out = cmat_to_json(self.data)
        out["hermitian"] = self.hermitian
        return out

    @classmethod
    def from_json(cls, obj) -> "ComplexMatrix":
        return cls(cmat_from_json(obj), hermitian=bool(obj.get("hermitian", False)))

    def __eq__(self, other):
        if not isinstance(other, ComplexMatrix):
            return NotImplemented
        return (
            self.hermitian == other.hermitian
            and self.data.shape == other.data.shape
            and np.array_equal(self.data, other.data)
        )


@dataclass(frozen=True)
class Eavesdropper:
    """Channel estimate g_bar and uncertainty-ball radius epsilon for one eve."""

    g_bar: np.ndarray
    epsilon: float

    def __post_init__(self):
        object.__setattr__(self, "g_bar", _freeze(np.asarray(self.g_bar, dtype=complex).ravel()))
        object.__setattr__(self, "epsilon", float(self.epsilon))


@dataclass(frozen=True)
class ProblemInstance:
    """One robust design problem: Bob channel, eve estimates, power budget.

    h is Bob's channel (length nt), each eavesdropper carries an estimate
    of the same length plus a Euclidean ball radius, and power is the total
    transmit budget in linear scale (noise-normalized SNR-like quantity).
    """

    h: np.ndarray
    eves: tuple[Eavesdropper, ...]
    power: float

    def __post_init__(self):
        object.__setattr__(self, "h", _freeze(np.asarray(self.h, dtype=complex).ravel()))
        eves = tuple(
            e if isinstance(e, Eavesdropper) else Eavesdropper(*e) for e in self.eves
        )
        object.__setattr__(self, "eves", eves)
        object.__setattr__(self, "power", float(self.power))
        validate(self)

    @property
    def nt(self) -> int:
        return self.h.shape[0]

    @property
    def num_eves(self) -> int:
        return len(self.eves)

    def to_json(self) -> dict:
        return {
            "nt": self.nt,
            "h": cvec_to_json(self.h),
            "eves": [
                {"g_bar": cvec_to_json(e.g_bar), "epsilon": e.epsilon} for e in self.eves
            ],
            "power_db": linear_to_db(self.power),
            # dB -> linear -> dB does not round-trip bit-exactly, so the
            # linear value is carried alongside and preferred when present.
            "power_linear": self.power,
        }

    @classmethod
    def from_json(cls, obj) -> "ProblemInstance":
        h = cvec_from_json(obj["h"])
        nt = int(obj.get("nt", h.shape[0]))
        if nt != h.shape[0]:
            raise DimensionMismatch(f"nt={nt} but h has length {h.shape[0]}")
        eves = tuple(
            Eavesdropper(cvec_from_json(e["g_bar"]), float(e["epsilon"]))
            for e in obj["eves"]
        )
        if "power_linear" in obj and obj["power_linear"] is not None:
            power = float(obj["power_linear"])
        else:
            power = db_to_linear(float(obj["power_db"]))
        return cls(h=h, eves=eves, power=power)

    def emit(self) -> str:
        return json.dumps(self.to_json(), indent=2)

    @classmethod
    def parse(cls, text: str) -> "ProblemInstance":
        return cls.from_json(json.loads(text))

    def __eq__(self, other):
        if not isinstance(other, ProblemInstance):
            return NotImplemented
        return (
            self.power == other.power
            and np.array_equal(self.h, other.h)
            and len(self.eves) == len(other.eves)
            and all(
                a.epsilon == b.epsilon and np.array_equal(a.g_bar, b.g_bar)
                for a, b in zip(self.eves, other.eves)
            )
        )


def validate(instance: ProblemInstance) -> None:
    """Check all ProblemInstance invariants, raising on the first violation."""
    if len(instance.eves) == 0:
        raise EmptyEveList("at least one eavesdropper is required")
    nt = instance.h.shape[0]
    if nt < 1:
        raise DimensionMismatch("Bob channel must have length >= 1")
    for i, e in enumerate(instance.eves):
        if e.g_bar.shape[0] != nt:
            raise DimensionMismatch(
                f"eve {i} estimate has length {e.g_bar.shape[0]}, expected {nt}"
            )
        if e.epsilon < 0:
            raise NegativeEpsilon(f"eve {i} has epsilon {e.epsilon} < 0")
    if not np.any(instance.h):
        raise ZeroBobChannel("Bob channel is identically zero")
    if not instance.power > 0:
        raise NonPositivePower(f"power budget must be > 0, got {instance.power}")


PSD_RTOL = 1e-8
TRACE_RTOL = 1e-8
BEAM_RTOL = 1e-6


@dataclass(frozen=True)
class TransmitDesign:
    """Pair of Hermitian PSD covariances (signal W, artificial noise Sigma).

    `beam` is the rank-one factor w with W = w w^H when extraction
    succeeded, phase-normalized downstream so that h^H w is real >= 0.
    """

    W: np.ndarray
    Sigma: np.ndarray
    beam: np.ndarray | None = None

    def __post_init__(self):
        W = np.asarray(self.W, dtype=complex)
        S = np.asarray(self.Sigma, dtype=complex)
        if W.shape != S.shape or W.ndim != 2 or W.shape[0] != W.shape[1]:
            raise DimensionMismatch(f"W and Sigma must be square and same shape, got {W.shape}, {S.shape}")
        object.__setattr__(self, "W", _freeze(W))
        object.__setattr__(self, "Sigma", _freeze(S))
        if self.beam is not None:
            b = np.asarray(self.beam, dtype=complex).ravel()
            if b.shape[0] != W.shape[0]:
                raise DimensionMismatch("beam length does not match W")
            object.__setattr__(self, "beam", _freeze(b))

    @property
    def nt(self) -> int:
        return self.W.shape[0]

    def total_power(self) -> float:
        return float(np.trace(self.W).real + np.trace(self.Sigma).real)

    def validate(self, power_budget: float | None = None) -> None:
        """Check PSD-ness, the power budget, and beam consistency."""
        for name, m in (("W", self.W), ("Sigma", self.Sigma)):
            check_hermitian(m, rtol=1e-9)
            tr = float(np.trace(m).real)
            lo = float(np.linalg.eigvalsh(hermitize(m)).min())
            if lo < -PSD_RTOL * max(tr, 1.0):
                raise ValueError(f"{name} has eigenvalue {lo:.3e} below PSD tolerance")
        if power_budget is not None and self.total_power() > power_budget * (1 + TRACE_RTOL):
            raise ValueError(
                f"Tr(W+Sigma)={self.total_power():.12g} exceeds budget {power_budget:.12g}"
            )
        if self.beam is not None:
            trw = float(np.trace(self.W).real)
            err = float(np.linalg.norm(self.W - np.outer(self.beam, self.beam.conj())))
            if err > BEAM_RTOL * max(trw, 1e-300):
                raise ValueError(f"beam outer product deviates from W by {err:.3e}")

    def to_json(self) -> dict:
        out = {"w": cmat_to_json(self.W), "sigma": cmat_to_json(self.Sigma)}
        out["beam"] = cvec_to_json(self.beam) if self.beam is not None else None
        return out

    @classmethod
    def from_json(cls, obj) -> "TransmitDesign":
        beam = obj.get("beam")
        return cls(
            W=cmat_from_json(obj["w"]),
            Sigma=cmat_from_json(obj["sigma"]),
            beam=cvec_from_json(beam) if beam is not None else None,
        )

    def __eq__(self, other):
        if not isinstance(other, TransmitDesign):
            return NotImplemented
        beams_equal = (self.beam is None) == (other.beam is None) and (
            self.beam is None or np.array_equal(self.beam, other.beam)
        )
        return (
            np.array_equal(self.W, other.W)
            and np.array_equal(self.Sigma, other.Sigma)
            and beams_equal
        )


def zero_design(nt: int, with_beam: bool = False) -> TransmitDesign:
    z = np.zeros((nt, nt), dtype=complex)
    beam = np.zeros(nt, dtype=complex) if with_beam else None
    return TransmitDesign(W=z, Sigma=z.copy(), beam=beam)
