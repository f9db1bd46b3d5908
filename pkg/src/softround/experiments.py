"""Seeded experiment drivers behind the command-line front end.

Each command owns a dedicated experiment stream, ``SeedStream(seed, index)``
with a fixed per-command index, so commands never share randomness and the
default seed reproduces the reported phenomenology.  Within a command,
trials and runs draw from child streams by index, which makes the fan-out
across a worker pool deterministic regardless of scheduling.
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor

import numpy as np
import torch

from . import autodiff as ad
from .misalign import DEFAULT_TEMPERATURES, TrialReport, soft_trial, toy_trial
from .problems import FacilityLocationProblem, QuadraticProblem
from .rounding import SoftGreedyRounder, SoftIterativeRounder
from .seeding import SeedStream
from .training import DecisionTrainer, training_step_budget

EXPERIMENT_STREAM_INDICES = {
    "toy-misalign": 1,
    "toy-soft": 4,
    "train-fl": 3,
    "grad-check": 5,
}


def experiment_stream(command: str, seed: int) -> SeedStream:
    return SeedStream(seed, EXPERIMENT_STREAM_INDICES[command])


def _worker_init() -> None:
    torch.set_num_threads(1)


def parallel_map(fn, items: list, jobs: int) -> list:
    """Map preserving input order; forks a process pool when it pays off."""
    if jobs <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ProcessPoolExecutor(max_workers=min(jobs, len(items)), initializer=_worker_init) as pool:
        return list(pool.map(fn, items))


# ------------------------------------------------------------ toy-misalign


def _misalign_cell(args) -> TrialReport:
    scheme, trial, seed, n, samples = args
    stream = experiment_stream("toy-misalign", seed).child(trial)
    return toy_trial(scheme, stream, n=n, samples=samples, trial=trial)


def run_toy_misalign(
    *, seed: int, n: int, samples: int, trials: int, schemes, jobs: int = 1
) -> list[TrialReport]:
    cells = [
        (scheme, trial, seed, n, samples)
        for scheme in schemes
        for trial in range(trials)
    ]
    return parallel_map(_misalign_cell, cells, jobs)


# ---------------------------------------------------------------- toy-soft


def _soft_cell(args) -> list[TrialReport]:
    scheme, trial, seed, n, samples, temperatures = args
    stream = experiment_stream("toy-soft", seed).child(trial)
    return soft_trial(
        scheme, stream, temperatures=temperatures, n=n, samples=samples, trial=trial
    )


def run_toy_soft(
    *,
    seed: int,
    n: int,
    samples: int,
    trials: int,
    schemes,
    temperatures=DEFAULT_TEMPERATURES,
    jobs: int = 1,
) -> list[TrialReport]:
    cells = [
        (scheme, trial, seed, n, samples, tuple(temperatures))
        for scheme in schemes
        for trial in range(trials)
    ]
    nested = parallel_map(_soft_cell, cells, jobs)
    return [report for group in nested for report in group]


def fractions_by_temperature(reports: list[TrialReport], scheme: str, temperatures) -> list[float]:
    """Mean bad-pair fraction per temperature for one scheme."""
    means = []
    for tau in temperatures:
        group = [r for r in reports if r.scheme == scheme and r.temperature == tau]
        if not group:
            raise ValueError(f"no reports for scheme={scheme} tau={tau}")
        means.append(float(np.mean([r.fraction for r in group])))
    return means


# ---------------------------------------------------------------- train-fl


def _train_cell(args) -> dict:
    problem, label, scheme, tau, params = args
    trainer_params = dict(params)
    if scheme != "none":
        trainer_params["tau"] = tau
    trainer = DecisionTrainer(scheme=scheme, **trainer_params)
    trainer.fit(problem)
    return {
        "label": label,
        "scheme": scheme,
        "tau": tau,
        "curve": trainer.curve_,
        "aborted_epoch": trainer.aborted_epoch_,
    }


def run_train_fl(
    *,
    seed: int,
    n: int,
    k: int,
    beta: float,
    schemes,
    temperatures=DEFAULT_TEMPERATURES,
    epochs: int = 300,
    learning_rate: float = 0.01,
    steps: int | None = None,
    jobs: int = 1,
):
    """Baseline plus one soft run per (scheme, temperature), sharing one
    instance and one initialization; returns the instance and all curves."""
    stream = experiment_stream("train-fl", seed)
    problem = FacilityLocationProblem.sample(n, k, beta, stream.child(0))
    params = {"epochs": epochs, "learning_rate": learning_rate}
    if steps is not None:
        params["steps"] = steps
    cells = [(problem, "baseline", "none", None, params)]
    for scheme in schemes:
        for tau in temperatures:
            cells.append((problem, f"{scheme}-tau{tau:g}", scheme, float(tau), params))
    runs = parallel_map(_train_cell, cells, jobs)
    return problem, runs


# -------------------------------------------------------------- grad-check


def _gradcheck_problem(name: str, stream: SeedStream, n: int, k: int, beta: float):
    if name == "quadratic":
        return QuadraticProblem.sample(n, stream)
    if name == "facility":
        return FacilityLocationProblem.sample(n, max(1, min(k, n)), beta, stream)
    raise ValueError(f"unknown problem {name!r}")


def run_grad_check(
    *,
    seed: int,
    problems=("quadratic", "facility"),
    pipelines=("none", "soft-iterative", "soft-greedy"),
    temperatures=(1.0, 0.1),
    points: int = 5,
    n: int = 10,
    k: int = 3,
    beta: float = 1.0,
    h: float = 1e-7,
) -> list[tuple]:
    """Max relative error of reverse-mode vs central-difference gradients for
    every (problem, pipeline, temperature) cell; rows for the report table.

    The default difference step balances truncation against roundoff for the
    sharpest pipelines checked (truncation grows with the cube of 1/tau).
    """
    stream = experiment_stream("grad-check", seed)
    rows = []
    for pi, problem_name in enumerate(problems):
        problem = _gradcheck_problem(problem_name, stream.child(pi), n, k, beta)
        for pipeline in pipelines:
            taus = [None] if pipeline == "none" else list(temperatures)
            for tau in taus:
                if pipeline == "none":
                    loss = problem.surrogate
                elif pipeline == "soft-iterative":
                    rounder = SoftIterativeRounder(tau=tau).fit(problem)
                    loss = lambda x, r=rounder: problem.surrogate(r.transform_graph(x))
                elif pipeline == "soft-greedy":
                    rounder = SoftGreedyRounder(
                        tau=tau, steps=training_step_budget(problem.dimension)
                    ).fit(problem)
                    loss = lambda x, r=rounder: problem.surrogate(r.transform_graph(x))
                else:
                    raise ValueError(f"unknown pipeline {pipeline!r}")
                worst = 0.0
                point_stream = stream.child(100 + pi)
                for point_index in range(points):
                    x = 0.1 + 0.8 * point_stream.child(point_index).uniforms(
                        problem.dimension
                    )
                    worst = max(worst, ad.grad_check(loss, x, h=h))
                rows.append((problem_name, pipeline, tau, points, worst))
    return rows
