"""Acceptance suite.

Each criterion below runs at its stated tolerance and prints one PASS/FAIL
line (visible with `pytest -s` or in failure output).  Criteria use the same
entry points as the command line, with the default seed.
"""

import time
import warnings

import numpy as np
import pytest

from softround import autodiff as ad
from softround.experiments import (
    experiment_stream,
    fractions_by_temperature,
    run_toy_misalign,
    run_toy_soft,
)
from softround.misalign import DEFAULT_TEMPERATURES, mean_fraction
from softround.problems import FacilityLocationProblem, QuadraticProblem
from softround.rounding import (
    GreedyRounder,
    IterativeRounder,
    SoftGreedyRounder,
    SoftIterativeRounder,
)
from softround.seeding import SeedStream
from softround.training import DecisionTrainer, training_step_budget
from softround.validation import threshold

from conftest import bernoulli_expectation, corners, overflow_tail_oracle


def report(criterion: str, ok: bool, detail: str = "") -> bool:
    tag = "PASS" if ok else "FAIL"
    print(f"[{tag}] {criterion}" + (f" -- {detail}" if detail else ""))
    return ok


def zero_diag_quadratic(n, stream):
    alpha = stream.normals(n * n).reshape(n, n)
    np.fill_diagonal(alpha, 0.0)
    return QuadraticProblem(alpha)


# ------------------------------------------------------------- criterion 1


def test_criterion_1_bad_pair_band():
    start = time.perf_counter()
    reports = run_toy_misalign(
        seed=0, n=50, samples=100, trials=5, schemes=("iterative", "greedy"), jobs=1
    )
    elapsed = time.perf_counter() - start
    means = {
        scheme: mean_fraction([r for r in reports if r.scheme == scheme])
        for scheme in ("iterative", "greedy")
    }
    ok = (
        0.30 <= means["iterative"] <= 0.46
        and 0.30 <= means["greedy"] <= 0.47
        and elapsed < 120.0
    )
    assert report(
        "criterion 1: default bad-pair fractions in band, under 2 minutes",
        ok,
        f"iterative={means['iterative']:.3f} greedy={means['greedy']:.3f} "
        f"elapsed={elapsed:.1f}s",
    )


# ------------------------------------------------------------- criterion 2


def test_criterion_2_soft_temperature_trend():
    reports = run_toy_soft(
        seed=0, n=50, samples=100, trials=5, schemes=("iterative", "greedy"),
        temperatures=DEFAULT_TEMPERATURES, jobs=1,
    )
    ok = True
    details = []
    for scheme in ("iterative", "greedy"):
        means = fractions_by_temperature(reports, scheme, DEFAULT_TEMPERATURES)
        inversions = [
            means[i + 1] - means[i]
            for i in range(len(means) - 1)
            if means[i + 1] > means[i]
        ]
        scheme_ok = (
            len(inversions) <= 1
            and all(size <= 0.02 for size in inversions)
            and means[-1] < 0.05
            and means[-1] < means[0]
        )
        ok &= scheme_ok
        details.append(f"{scheme}={np.round(means, 3).tolist()}")
    assert report(
        "criterion 2: bad pairs shrink as temperature drops", ok, "; ".join(details)
    )


# ------------------------------------------------------------- criterion 3


def test_criterion_3_oracle_equivalence():
    root = SeedStream(101)
    worst_quad = worst_fl = 0.0
    local_min_ok = True
    for index in range(100):
        sub = root.child(index)
        n = 4 + index % 9  # sizes 4..12
        if index % 2 == 0:
            problem = zero_diag_quadratic(n, sub)
            probs = sub.child(1).uniforms(n)
            oracle = bernoulli_expectation(problem.hard_objective, probs)
            worst_quad = max(worst_quad, abs(problem.surrogate(probs) - oracle))
        else:
            budget = max(1, n // 3)
            problem = FacilityLocationProblem.sample(n, budget, 1.0, sub)
            probs = sub.child(1).uniforms(n)
            oracle = bernoulli_expectation(
                problem.hard_objective, probs
            ) + problem.constraint_coefficient * overflow_tail_oracle(probs, budget)
            worst_fl = max(worst_fl, abs(problem.surrogate(probs) - oracle))

        rounded = GreedyRounder().fit(problem).transform(sub.child(2).uniforms(n))
        base = problem.surrogate(rounded)
        for j in range(n):
            for bit in (0.0, 1.0):
                flipped = rounded.copy()
                flipped[j] = bit
                if problem.surrogate(flipped) < base - 1e-12:
                    local_min_ok = False
    ok = worst_quad <= 1e-9 and worst_fl <= 1e-9 and local_min_ok
    assert report(
        "criterion 3: surrogates equal enumeration; greedy outputs are local minima",
        ok,
        f"max quad err={worst_quad:.2e} max facility err={worst_fl:.2e} "
        f"local minima={'all' if local_min_ok else 'violated'}",
    )


# ------------------------------------------------------------- criterion 4


def test_criterion_4_greedy_never_worsens():
    root = SeedStream(202)
    checked = 0
    ok = True
    for family in range(2):
        for instance_index in range(10):
            sub = root.child(10 * family + instance_index)
            n = 6 + instance_index % 6
            if family == 0:
                problem = zero_diag_quadratic(n, sub)
            else:
                problem = FacilityLocationProblem.sample(n, max(1, n // 3), 1.0, sub)
            rounder = GreedyRounder().fit(problem)
            starts = sub.child(1).uniforms(50 * n).reshape(50, n)
            for x in starts:
                ok &= problem.surrogate(rounder.transform(x)) <= problem.surrogate(x) + 1e-9
                checked += 1
    assert checked == 1000
    assert report(
        "criterion 4: greedy rounding never worsens multilinear surrogates",
        ok,
        f"{checked} random starts",
    )


# ------------------------------------------------------------- criterion 5


def test_criterion_5_gradient_checks():
    root = SeedStream(303)
    problems = {
        "quadratic": QuadraticProblem.sample(10, root.child(0)),
        "facility": FacilityLocationProblem.sample(10, 3, 1.0, root.child(1)),
    }
    ok = True
    details = []
    for pi, (name, problem) in enumerate(problems.items()):
        plain_worst = 0.0
        point_stream = root.child(10 + pi)
        for i in range(20):
            x = 0.1 + 0.8 * point_stream.child(i).uniforms(10)
            plain_worst = max(plain_worst, ad.grad_check(problem.surrogate, x))
        ok &= plain_worst < 1e-5
        details.append(f"{name} plain={plain_worst:.1e}")

        # h = 1e-7 keeps the central-difference truncation error (which grows
        # with the cube of the sharpness 1/tau) well below the gate
        pipe_worst = 0.0
        for tau in (1.0, 0.1):
            for rounder in (
                SoftIterativeRounder(tau=tau).fit(problem),
                SoftGreedyRounder(tau=tau, steps=training_step_budget(10)).fit(problem),
            ):
                def loss(v, r=rounder, p=problem):
                    return p.surrogate(r.transform_graph(v))

                for i in range(20):
                    x = 0.1 + 0.8 * point_stream.child(1000 + i).uniforms(10)
                    pipe_worst = max(pipe_worst, ad.grad_check(loss, x, h=1e-7))
        ok &= pipe_worst < 1e-4
        details.append(f"{name} pipelines={pipe_worst:.1e}")
    assert report(
        "criterion 5: gradients match finite differences", ok, " ".join(details)
    )


# ------------------------------------------------------------- criterion 6


def test_criterion_6_soft_iterative_limit_consistency():
    root = SeedStream(404)
    matches = 0
    kept = 0
    attempt = 0
    while kept < 100 and attempt < 500:
        sub = root.child(attempt)
        attempt += 1
        problem = QuadraticProblem.sample(10, sub)
        x = sub.child(1).uniforms(10)
        hard_rounder = IterativeRounder().fit(problem)
        if hard_rounder.decision_margins(x).min() <= 1e-6:
            continue  # near-tie: an arbitrarily sharp softmax may still flip
        kept += 1
        hard = hard_rounder.transform(x)
        soft = SoftIterativeRounder(tau=1e-4).fit(problem).transform(x)
        if np.array_equal(threshold(soft, 0.5), hard):
            matches += 1
    ok = kept == 100 and matches >= 95
    assert report(
        "criterion 6: thresholded sharp soft-iterative equals hard iterative",
        ok,
        f"{matches}/{kept} matches",
    )


# ------------------------------------------------------------- criterion 7


@pytest.fixture(scope="module")
def figure2_runs():
    problem = FacilityLocationProblem.sample(
        200, 20, 1.0, experiment_stream("train-fl", 0).child(0)
    )
    epochs = 12
    runs = {"baseline": DecisionTrainer(scheme="none", epochs=epochs).fit(problem)}
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        for scheme in ("soft-iterative", "soft-greedy"):
            for tau in (10.0, 0.1, 0.01, 0.001):
                runs[f"{scheme}-tau{tau:g}"] = DecisionTrainer(
                    scheme=scheme, tau=tau, epochs=epochs
                ).fit(problem)
    return problem, runs, caught


def test_criterion_7a_high_temperature_matches_baseline(figure2_runs):
    _, runs, _ = figure2_runs
    base = runs["baseline"].curve_.losses
    ok = True
    details = []
    for scheme in ("soft-iterative", "soft-greedy"):
        soft = runs[f"{scheme}-tau10"].curve_.losses
        shared = min(len(base), len(soft))
        rel = np.abs(soft[:shared] - base[:shared]) / np.abs(base[:shared])
        ok &= bool((rel < 1e-3).all())
        details.append(f"{scheme} max rel diff={rel.max():.2e}")
    assert report(
        "criterion 7a: tau=10 training loss within 1e-3 of baseline each epoch",
        ok,
        "; ".join(details),
    )


def test_criterion_7b_baseline_descends(figure2_runs):
    _, runs, _ = figure2_runs
    losses = runs["baseline"].curve_.losses
    ok = losses[-1] < losses[0]
    assert report(
        "criterion 7b: baseline final loss below initial loss",
        ok,
        f"{losses[0]:.4f} -> {losses[-1]:.4f}",
    )


def test_criterion_7c_low_temperature_runs_are_graceful(figure2_runs):
    _, runs, caught = figure2_runs
    ok = True
    details = []
    for scheme in ("soft-iterative", "soft-greedy"):
        for tau in (0.01, 0.001):
            trainer = runs[f"{scheme}-tau{tau:g}"]
            curve = trainer.curve_
            finite = bool(np.isfinite(curve.losses).all())
            if trainer.aborted_epoch_ is None:
                complete = len(curve) == trainer.epochs + 1
                ok &= complete and finite
                details.append(f"{scheme}@{tau:g}=complete")
            else:
                warned = any("aborted" in str(w.message) for w in caught)
                partial = len(curve) <= trainer.aborted_epoch_ + 1
                ok &= warned and partial and finite
                details.append(f"{scheme}@{tau:g}=aborted@{trainer.aborted_epoch_}")
    assert report(
        "criterion 7c: very low temperature runs complete or abort gracefully",
        ok,
        " ".join(details),
    )


def test_criterion_7d_report_low_temperature_test_objectives(figure2_runs):
    # observational: emitted, not gated
    _, runs, _ = figure2_runs
    base = runs["baseline"].curve_
    lines = []
    for scheme, column in (
        ("soft-iterative", lambda r: r.test_iterative),
        ("soft-greedy", lambda r: r.test_greedy),
    ):
        soft = runs[f"{scheme}-tau0.1"].curve_
        lines.append(
            f"{scheme}: tau=0.1 final test objective {column(soft.records[-1]):.4f} "
            f"vs baseline {column(base.records[-1]):.4f}"
        )
    assert report(
        "criterion 7d: tau=0.1 test-objective comparison emitted (observational)",
        True,
        "; ".join(lines),
    )


# ------------------------------------------------------------- criterion 8


def test_criterion_8_byte_identical_reruns(tmp_path):
    from softround import cli

    invocations = {
        "toy-misalign": ["--n", "12", "--samples", "10", "--trials", "2"],
        "toy-soft": ["--n", "10", "--samples", "8", "--trials", "1",
                      "--temperatures", "1.0,0.01"],
        "train-fl": ["--n", "12", "--k", "3", "--epochs", "2",
                      "--temperatures", "0.5", "--scheme", "soft-greedy"],
        "grad-check": ["--points", "1", "--n", "6"],
    }
    ok = True
    for command, flags in invocations.items():
        outs = []
        for attempt in ("first", "second"):
            out = tmp_path / f"{command}-{attempt}"
            code = cli.main(
                [command, *flags, "--seed", "5", "--jobs", "1", "--out", str(out)]
            )
            ok &= code == 0
            outs.append(out)
        for csv_path in sorted(outs[0].glob("*.csv")):
            twin = outs[1] / csv_path.name
            ok &= twin.exists() and csv_path.read_bytes() == twin.read_bytes()
    assert report("criterion 8: byte-identical CSV output on rerun", ok)
