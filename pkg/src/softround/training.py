"""Training continuous decisions on a single instance by gradient descent.

The trainable parameters are unconstrained logits; the decision probabilities
are their elementwise logistic, which keeps them in [0, 1] without
projection.  The per-epoch loss is the problem surrogate, optionally composed
with a soft derandomization scheme so the training objective matches what the
test-time rounding will do.  Parameters follow the adaptive-moment update

    m <- b1 m + (1 - b1) g        v <- b2 v + (1 - b2) g^2
    theta <- theta - lr * mhat / (sqrt(vhat) + eps)

with the standard bias corrections.  After every epoch the curve records the
hard objective of iterative and greedy rounding applied to the current
probabilities, plus feasibility flags; those test metrics are computed
outside the gradient graph and never influence the trajectory.

Runs that hit a non-finite loss or gradient stop gracefully: the curve keeps
the finite prefix and carries the aborting epoch, because instability at very
low softmax temperatures is an expected observation, not a crash.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
import torch
from sklearn.base import BaseEstimator

from . import autodiff as ad
from .problems import DecisionProblem
from .rounding import (
    GreedyRounder,
    IterativeRounder,
    SoftGreedyRounder,
    SoftIterativeRounder,
)
from .seeding import SeedStream

TRAIN_SCHEMES = ("none", "soft-iterative", "soft-greedy")

#: Soft-greedy step budget used inside training: bounded so one epoch's graph
#: stays proportional to the instance size.
def training_step_budget(n: int) -> int:
    return min(n, 50)


@dataclass(frozen=True)
class EpochRecord:
    epoch: int
    train_loss: float
    test_iterative: float
    test_greedy: float
    feasible_iterative: bool
    feasible_greedy: bool


@dataclass
class TrainingCurve:
    records: list[EpochRecord] = field(default_factory=list)
    aborted_epoch: int | None = None
    abort_reason: str | None = None
    metadata: dict = field(default_factory=dict)

    @property
    def losses(self) -> np.ndarray:
        return np.array([r.train_loss for r in self.records])

    def __len__(self) -> int:
        return len(self.records)


class TrainingRunError(RuntimeError):
    """A sweep run failed outright (distinct from a graceful low-tau abort)."""


class DecisionTrainer(BaseEstimator):
    """Fits decision logits to one problem instance by gradient descent.

    Parameters mirror the experiment knobs: `scheme` selects the soft
    derandomization composed into the loss ("none" trains the plain
    surrogate), `tau` its temperature, `steps` the soft-greedy budget
    (defaults to min(n, 50)).  `init_scale` > 0 adds a seeded Gaussian
    perturbation to the zero logits (probabilities 0.5) using `stream`.

    After ``fit(problem)`` the fitted attributes are ``curve_`` (per-epoch
    records), ``decisions_`` (final probabilities), ``theta_`` (final
    logits), and ``aborted_epoch_``.
    """

    def __init__(
        self,
        scheme: str = "none",
        tau: float = 1.0,
        epochs: int = 300,
        learning_rate: float = 0.01,
        beta1: float = 0.9,
        beta2: float = 0.999,
        epsilon: float = 1e-8,
        init_scale: float = 0.0,
        steps: int | None = None,
        stream: SeedStream | None = None,
    ):
        self.scheme = scheme
        self.tau = tau
        self.epochs = epochs
        self.learning_rate = learning_rate
        self.beta1 = beta1
        self.beta2 = beta2
        self.epsilon = epsilon
        self.init_scale = init_scale
        self.steps = steps
        self.stream = stream

    def _validate(self, problem: DecisionProblem) -> None:
        if self.scheme not in TRAIN_SCHEMES:
            raise ValueError(f"scheme must be one of {TRAIN_SCHEMES}, got {self.scheme!r}")
        if self.epochs < 0:
            raise ValueError("epochs must be non-negative (0 records only epoch 0)")
        if not self.learning_rate > 0:
            raise ValueError("learning_rate must be positive")
        for name, value in (("beta1", self.beta1), ("beta2", self.beta2)):
            if not 0.0 <= value < 1.0:
                raise ValueError(f"{name} must lie in [0, 1), got {value}")
        if self.scheme != "none" and not self.tau > 0:
            raise ValueError(f"tau must be positive, got {self.tau}")
        if self.init_scale < 0:
            raise ValueError("init_scale must be non-negative")
        if self.init_scale > 0 and self.stream is None:
            raise ValueError("a stream is required for a perturbed initialization")

    def _soft_rounder(self, problem: DecisionProblem):
        if self.scheme == "none":
            return None
        if self.scheme == "soft-iterative":
            return SoftIterativeRounder(tau=self.tau).fit(problem)
        budget = training_step_budget(problem.dimension) if self.steps is None else self.steps
        return SoftGreedyRounder(tau=self.tau, steps=budget).fit(problem)

    def fit(self, problem: DecisionProblem, y=None) -> "DecisionTrainer":
        self._validate(problem)
        n = problem.dimension
        theta = np.zeros(n)
        if self.init_scale > 0:
            theta += self.init_scale * self.stream.normals(n)

        soft = self._soft_rounder(problem)
        test_iter = IterativeRounder().fit(problem)
        test_greedy = GreedyRounder().fit(problem)

        curve = TrainingCurve(metadata=self._metadata(problem, soft))
        m = np.zeros(n)
        v = np.zeros(n)
        for epoch in range(self.epochs + 1):
            theta_t = ad.leaf(theta)
            probs_t = torch.sigmoid(theta_t)
            rounded_t = soft.transform_graph(probs_t) if soft is not None else probs_t
            loss_t = problem.surrogate(rounded_t)
            loss = float(loss_t.detach())
            if not np.isfinite(loss):
                self._abort(curve, epoch, f"non-finite training loss at epoch {epoch}")
                break

            probs = torch.sigmoid(torch.from_numpy(theta)).numpy()
            d_iter = test_iter.transform(probs)
            d_greedy = test_greedy.transform(probs)
            curve.records.append(
                EpochRecord(
                    epoch=epoch,
                    train_loss=loss,
                    test_iterative=problem.hard_objective(d_iter),
                    test_greedy=problem.hard_objective(d_greedy),
                    feasible_iterative=problem.is_feasible(d_iter),
                    feasible_greedy=problem.is_feasible(d_greedy),
                )
            )
            if epoch == self.epochs:
                break

            grad = ad.backward(loss_t, theta_t)
            if not np.isfinite(grad).all():
                self._abort(curve, epoch, f"non-finite gradient at epoch {epoch}")
                break
            m = self.beta1 * m + (1.0 - self.beta1) * grad
            v = self.beta2 * v + (1.0 - self.beta2) * grad * grad
            t = epoch + 1
            m_hat = m / (1.0 - self.beta1**t)
            v_hat = v / (1.0 - self.beta2**t)
            theta = theta - self.learning_rate * m_hat / (np.sqrt(v_hat) + self.epsilon)

        self.theta_ = theta
        self.decisions_ = torch.sigmoid(torch.from_numpy(theta)).numpy()
        self.curve_ = curve
        self.aborted_epoch_ = curve.aborted_epoch
        return self

    def _abort(self, curve: TrainingCurve, epoch: int, reason: str) -> None:
        curve.aborted_epoch = epoch
        curve.abort_reason = reason
        curve.metadata["aborted_epoch"] = epoch
        curve.metadata["abort_reason"] = reason
        warnings.warn(f"training aborted: {reason} (partial curve kept)")

    def _metadata(self, problem: DecisionProblem, soft) -> dict:
        meta = {
            "scheme": self.scheme,
            "tau": None if self.scheme == "none" else self.tau,
            "epochs": self.epochs,
            "learning_rate": self.learning_rate,
            "beta1": self.beta1,
            "beta2": self.beta2,
            "epsilon": self.epsilon,
            "init_scale": self.init_scale,
            "dimension": problem.dimension,
        }
        if isinstance(soft, SoftGreedyRounder):
            meta["steps"] = soft._steps
        return meta


def sweep_temperatures(
    problem: DecisionProblem,
    scheme: str,
    temperatures,
    *,
    trainer_params: dict | None = None,
) -> list[dict]:
    """Baseline plus one training run per temperature for a soft scheme.

    All runs share the instance and the initialization.  A run that raises is
    recorded with its error and the sweep continues; graceful low-temperature
    aborts are ordinary results with partial curves.
    """
    if scheme not in ("soft-iterative", "soft-greedy"):
        raise ValueError(f"sweep scheme must be a soft scheme, got {scheme!r}")
    params = dict(trainer_params or {})
    runs = [("baseline", {"scheme": "none"})]
    runs += [(f"tau={tau:g}", {"scheme": scheme, "tau": float(tau)}) for tau in temperatures]
    results = []
    for label, overrides in runs:
        trainer = DecisionTrainer(**{**params, **overrides})
        entry = {"label": label, "scheme": overrides["scheme"],
                 "tau": overrides.get("tau")}
        try:
            trainer.fit(problem)
            entry["curve"] = trainer.curve_
            entry["decisions"] = trainer.decisions_
        except Exception as exc:  # run failures are reported, not fatal
            entry["error"] = f"{type(exc).__name__}: {exc}"
        results.append(entry)
    return results
