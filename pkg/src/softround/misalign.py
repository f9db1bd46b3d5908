"""Training-test misalignment analysis on the quadratic toy problem.

A pair of decision vectors is "bad" when the surrogate objective and the
post-derandomization objective order them oppositely: lowering the training
loss between the two would raise the quantity actually reported at test time.
``bad_pair_count`` counts those discordances; ``toy_trial`` measures them for
hard rounding schemes on a random quadratic instance, and ``soft_sweep``
repeats the measurement with the surrogate evaluated after soft
derandomization at a grid of temperatures.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .problems import QuadraticProblem
from .rounding import (
    GreedyRounder,
    IterativeRounder,
    SoftGreedyRounder,
    SoftIterativeRounder,
)
from .seeding import SeedStream

#: Softmax temperatures swept by the soft-rounding study.
DEFAULT_TEMPERATURES = (10.0, 1.0, 0.1, 0.01, 0.001)

HARD_SCHEMES = ("iterative", "greedy")


@dataclass(frozen=True)
class TrialReport:
    """Bad-pair tally for one (trial, scheme, temperature) cell."""

    trial: int
    scheme: str
    temperature: float | None  # None for hard schemes
    bad_count: int
    total_pairs: int

    @property
    def fraction(self) -> float:
        return self.bad_count / self.total_pairs if self.total_pairs else 0.0


def bad_pair_count(surrogate_values, final_values) -> int:
    """Number of unordered pairs ordered oppositely by the two score vectors.

    A pair (k1, k2) counts iff (s_k1 - s_k2) * (f_k1 - f_k2) < 0; ties in
    either score are not bad.  Direct O(m^2) enumeration over all pairs.
    """
    s = np.asarray(surrogate_values, dtype=np.float64)
    f = np.asarray(final_values, dtype=np.float64)
    if s.shape != f.shape or s.ndim != 1:
        raise ValueError("score vectors must be 1-d and of equal length")
    if not (np.isfinite(s).all() and np.isfinite(f).all()):
        raise ValueError("scores must be finite")
    products = (s[:, None] - s[None, :]) * (f[:, None] - f[None, :])
    i, j = np.triu_indices(s.size, k=1)
    return int((products[i, j] < 0).sum())


def _toy_data(stream: SeedStream, n: int, samples: int):
    """One random quadratic instance plus uniform continuous decisions."""
    problem = QuadraticProblem.sample(n, stream.child(0))
    decisions = stream.child(1).uniforms(samples * n).reshape(samples, n)
    return problem, decisions


def _hard_rounder(scheme: str, problem):
    if scheme == "iterative":
        return IterativeRounder().fit(problem)  # identity order
    if scheme == "greedy":
        return GreedyRounder().fit(problem)
    raise ValueError(f"scheme must be one of {HARD_SCHEMES}, got {scheme!r}")


def _soft_rounder(scheme: str, tau: float, problem):
    if scheme == "iterative":
        return SoftIterativeRounder(tau=tau).fit(problem)
    return SoftGreedyRounder(tau=tau).fit(problem)


def toy_trial(
    scheme: str,
    stream: SeedStream,
    *,
    n: int = 50,
    samples: int = 100,
    trial: int = 0,
) -> TrialReport:
    """One bad-pair trial: hard-rounding finals against plain surrogate values."""
    problem, decisions = _toy_data(stream, n, samples)
    surrogates = np.array([problem.surrogate(row) for row in decisions])
    rounded = _hard_rounder(scheme, problem).transform(decisions)
    finals = np.array([problem.hard_objective(row) for row in rounded])
    return TrialReport(
        trial=trial,
        scheme=scheme,
        temperature=None,
        bad_count=bad_pair_count(surrogates, finals),
        total_pairs=samples * (samples - 1) // 2,
    )


def soft_trial(
    scheme: str,
    stream: SeedStream,
    *,
    temperatures=DEFAULT_TEMPERATURES,
    n: int = 50,
    samples: int = 100,
    trial: int = 0,
) -> list[TrialReport]:
    """One trial of the soft-rounding study, one report per temperature.

    The surrogate score of each decision vector is surrogate(soft-round(x)) at
    every temperature; the final score stays the hard objective of hard
    rounding applied to the original vector, so temperatures are compared
    against a fixed test-time reference.
    """
    if any(t <= 0 for t in temperatures):
        raise ValueError("temperatures must be positive")
    if scheme not in HARD_SCHEMES:
        raise ValueError(f"scheme must be one of {HARD_SCHEMES}, got {scheme!r}")
    problem, decisions = _toy_data(stream, n, samples)
    rounded = _hard_rounder(scheme, problem).transform(decisions)
    finals = np.array([problem.hard_objective(row) for row in rounded])
    reports = []
    for tau in temperatures:
        softened = _soft_rounder(scheme, tau, problem).transform(decisions)
        surrogates = np.array([problem.surrogate(row) for row in softened])
        reports.append(
            TrialReport(
                trial=trial,
                scheme=scheme,
                temperature=float(tau),
                bad_count=bad_pair_count(surrogates, finals),
                total_pairs=samples * (samples - 1) // 2,
            )
        )
    return reports


def soft_sweep(
    scheme: str,
    stream: SeedStream,
    *,
    temperatures=DEFAULT_TEMPERATURES,
    trials: int = 5,
    n: int = 50,
    samples: int = 100,
) -> list[TrialReport]:
    """Soft-rounding study over several trials; trials use child streams of
    `stream` by trial index, matching :func:`toy_trial`."""
    reports = []
    for trial in range(trials):
        reports.extend(
            soft_trial(
                scheme,
                stream.child(trial),
                temperatures=temperatures,
                n=n,
                samples=samples,
                trial=trial,
            )
        )
    return reports


def mean_fraction(reports) -> float:
    """Average bad-pair fraction over a collection of reports."""
    reports = list(reports)
    if not reports:
        raise ValueError("no reports to average")
    return float(np.mean([r.fraction for r in reports]))
