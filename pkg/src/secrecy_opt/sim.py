"""Monte Carlo harness: channel generation, sweeps, CSV aggregation.

Channels are generated once per trial and shared by every method and every
axis value (paired comparison). Per-trial RNG streams come from spawning a
SeedSequence into Philox generators (counter-based, parallel-safe), so a
given (config, seed) pair reproduces byte-identical CSV output. Trials are
independent and may be fanned out across workers; aggregation walks trials
in index order either way.
"""
from __future__ import annotations

import io
import logging
from dataclasses import dataclass, field

import numpy as np

from .baselines import isotropic_an, no_an_mrt
from .errors import NumericalFailure, SolverFailure, ValidationError
from .oracle import evaluate_design
from .srm import SearchOptions, solve_srm
from .types import Eavesdropper, ProblemInstance, db_to_linear

logger = logging.getLogger(__name__)

RNG_NAME = "philox"
METHODS = ("robust", "isotropic", "mrt")
SWEEP_AXES = ("power_db", "alpha")
MAX_FAILED_TRIAL_FRAC = 0.05


@dataclass(frozen=True)
class SweepConfig:
    nt: int
    k: int
    trials: int
    seed: int
    sweep_axis: str
    axis_values: tuple
    fixed: float
    methods: tuple = METHODS

    def __post_init__(self):
        object.__setattr__(self, "axis_values", tuple(float(v) for v in self.axis_values))
        object.__setattr__(self, "methods", tuple(self.methods))
        if self.nt < 1 or self.k < 1:
            raise ValidationError("nt and k must be >= 1")
        if self.trials < 1:
            raise ValidationError("trials must be >= 1")
        if self.sweep_axis not in SWEEP_AXES:
            raise ValidationError(f"sweep_axis must be one of {SWEEP_AXES}")
        if not self.axis_values or list(self.axis_values) != sorted(self.axis_values):
            raise ValidationError("axis_values must be nonempty and sorted")
        bad = [m for m in self.methods if m not in METHODS]
        if bad or not self.methods:
            raise ValidationError(f"methods must be a nonempty subset of {METHODS}")

    def to_json(self) -> dict:
        return {
            "nt": self.nt,
            "k": self.k,
            "trials": self.trials,
            "seed": self.seed,
            "sweep_axis": self.sweep_axis,
            "axis_values": list(self.axis_values),
            "fixed": self.fixed,
            "methods": list(self.methods),
        }

    @classmethod
    def from_json(cls, obj) -> "SweepConfig":
        return cls(
            nt=int(obj["nt"]),
            k=int(obj["k"]),
            trials=int(obj["trials"]),
            seed=int(obj["seed"]),
            sweep_axis=str(obj["sweep_axis"]),
            axis_values=tuple(obj["axis_values"]),
            fixed=float(obj["fixed"]),
            methods=tuple(obj.get("methods", METHODS)),
        )


def gen_channels(nt: int, k: int, rng: np.random.Generator):
    """Draw Bob and eve channels with i.i.d. CN(0, 1) entries.

    Real and imaginary parts are independent N(0, 1/2); deterministic for a
    given generator state.
    """
    scale = np.sqrt(0.5)

    def draw():
        return rng.normal(0.0, scale, nt) + 1j * rng.normal(0.0, scale, nt)

    h = draw()
    return h, [draw() for _ in range(k)]


def alpha_to_epsilon(alpha: float, nt: int) -> float:
    """Ball radius for a normalized uncertainty level: eps = alpha * sqrt(nt),
    since E||g||^2 = nt under unit-variance entries."""
    if alpha < 0:
        raise ValidationError(f"alpha must be >= 0, got {alpha}")
    return alpha * np.sqrt(nt)


def trial_rngs(seed: int, trials: int):
    """Independent per-trial Philox streams via SeedSequence spawning."""
    return [
        np.random.Generator(np.random.Philox(child))
        for child in np.random.SeedSequence(seed).spawn(trials)
    ]


@dataclass(frozen=True)
class SweepRow:
    axis_value: float
    method: str
    mean_rate: float
    stderr: float
    n_success: int
    n_fail: int


@dataclass(frozen=True)
class SweepResult:
    config: SweepConfig
    rows: tuple
    metadata: dict
    per_trial: dict = field(repr=False, default_factory=dict)

    def to_csv(self) -> str:
        out = io.StringIO()
        for key, value in self.metadata.items():
            out.write(f"# {key}={value}\n")
        out.write("axis_value,method,mean_rate,stderr,n_success,n_fail\n")
        for r in self.rows:
            out.write(
                f"{r.axis_value!r},{r.method},{r.mean_rate!r},{r.stderr!r},"
                f"{r.n_success},{r.n_fail}\n"
            )
        return out.getvalue()

    def write_csv(self, path) -> None:
        with open(path, "w", encoding="utf-8", newline="\n") as f:
            f.write(self.to_csv())


def _method_rate(method: str, instance: ProblemInstance, options) -> float:
    if method == "robust":
        return solve_srm(instance, options).rate_worst_case
    if method == "isotropic":
        return evaluate_design(instance, isotropic_an(instance))[0]
    if method == "mrt":
        return evaluate_design(instance, no_an_mrt(instance))[0]
    raise ValidationError(f"unknown method {method!r}")


def run_sweep(
    config: SweepConfig,
    options: SearchOptions | None = None,
    progress=None,
) -> SweepResult:
    """Evaluate every configured method over the sweep axis.

    Per-trial solver failures are logged, counted in the n_fail column, and
    excluded from the aggregates; the run errors out if more than 5% of
    trials are affected. `progress(done, total)` is called after each trial
    when provided.
    """
    channels = [gen_channels(config.nt, config.k, rng) for rng in trial_rngs(config.seed, config.trials)]
    rates = {(av, m): [] for av in config.axis_values for m in config.methods}
    fails = {(av, m): 0 for av in config.axis_values for m in config.methods}
    failed_trials = set()

    for t in range(config.trials):
        h, g_bars = channels[t]
        for av in config.axis_values:
            power_db = av if config.sweep_axis == "power_db" else config.fixed
            alpha = av if config.sweep_axis == "alpha" else config.fixed
            eps = alpha_to_epsilon(alpha, config.nt)
            instance = ProblemInstance(
                h=h,
                eves=tuple(Eavesdropper(g, eps) for g in g_bars),
                power=db_to_linear(power_db),
            )
            for m in config.methods:
                try:
                    rates[(av, m)].append(_method_rate(m, instance, options))
                except (SolverFailure, NumericalFailure) as e:
                    logger.warning(
                        "trial %d failed for method=%s axis=%g: %s", t, m, av, e
                    )
                    fails[(av, m)] += 1
                    failed_trials.add(t)
        if progress is not None:
            progress(t + 1, config.trials)

    if len(failed_trials) > MAX_FAILED_TRIAL_FRAC * config.trials:
        raise SolverFailure(
            f"{len(failed_trials)}/{config.trials} trials failed "
            f"(limit {MAX_FAILED_TRIAL_FRAC:.0%})"
        )

    rows = []
    for av in config.axis_values:
        for m in config.methods:
            vals = np.array(rates[(av, m)])
            n = vals.size
            mean = float(vals.mean()) if n else float("nan")
            stderr = float(vals.std(ddof=1) / np.sqrt(n)) if n >= 2 else 0.0
            rows.append(SweepRow(av, m, mean, stderr, n, fails[(av, m)]))

    metadata = {
        "tool": "secrecy-opt sweep",
        "rng": RNG_NAME,
        "seed": config.seed,
        "nt": config.nt,
        "k": config.k,
        "trials": config.trials,
        "sweep_axis": config.sweep_axis,
        "fixed": config.fixed,
        "methods": ";".join(config.methods),
    }
    return SweepResult(config=config, rows=tuple(rows), metadata=metadata, per_trial=rates)
