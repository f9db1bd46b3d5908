"""Derandomization schemes: turning continuous decisions into binary ones.

Hard schemes produce a single binary vector:

* ``sample``      -- draw each entry independently from Bernoulli(x_i);
* ``iterative``   -- visit entries in a fixed order and set each to the bit
  with the lower surrogate value given all decisions so far;
* ``greedy``      -- repeatedly apply the single-entry assignment (any index,
  either bit) that lowers the surrogate the most, until no strict improvement
  remains, then finish any leftover fractional entries in index order.

Soft schemes replace the discrete argmax with a temperature softmax, giving a
differentiable map from continuous decisions to continuous decisions that
approaches the hard scheme as the temperature goes to zero.

All schemes are exposed as scikit-learn style transformers: ``fit`` binds the
problem instance, ``transform`` maps one decision vector or a stack of them.
Improvement scores are the single-coordinate surrogate differences
``delta_b = surrogate(x) - surrogate(x with x_j := b)``; ties prefer b = 0 and
then the smaller index, which is deterministic and biases toward sparser
solutions.
"""

from __future__ import annotations

import numpy as np
import torch
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.exceptions import NotFittedError

from . import autodiff as ad
from .problems import DecisionProblem
from .seeding import SeedStream
from .validation import validate_continuous

SCHEME_NAMES = ("sample", "iterative", "greedy", "soft-iterative", "soft-greedy")


class RoundingError(RuntimeError):
    """Rounding hit a non-finite surrogate value; carries the entry index."""


def default_order(n: int, stream: SeedStream | None = None) -> np.ndarray:
    """Rounding sequence over entries 0..n-1: identity, or a seeded shuffle."""
    if n < 0:
        raise ValueError("n must be non-negative")
    if stream is None:
        return np.arange(n, dtype=np.int64)
    return stream.permutation(n).astype(np.int64)


def _check_order(order, n: int) -> np.ndarray:
    seq = np.asarray(order, dtype=np.int64)
    if sorted(seq.tolist()) != list(range(n)):
        raise ValueError(f"order must be a permutation of 0..{n - 1}")
    return seq


class _RounderBase(TransformerMixin, BaseEstimator):
    """Common fit/transform plumbing for all schemes."""

    def fit(self, problem: DecisionProblem, y=None):
        if not isinstance(problem, DecisionProblem):
            raise TypeError("fit expects a DecisionProblem instance")
        self.problem_ = problem
        self.n_features_in_ = problem.dimension
        self._prepare()
        return self

    def _prepare(self) -> None:  # overridden where schemes need extra state
        pass

    def _require_fit(self) -> DecisionProblem:
        if not hasattr(self, "problem_"):
            raise NotFittedError(f"{type(self).__name__} must be fit to a problem first")
        return self.problem_

    def transform(self, X) -> np.ndarray:
        """Round one decision vector (n,) or a stack of them (m, n)."""
        self._require_fit()
        arr = np.asarray(X, dtype=np.float64)
        if arr.ndim == 1:
            validate_continuous(arr)
            self.problem_.check_dimension(arr)
            return self._round_one(arr.copy(), 0)
        if arr.ndim != 2:
            raise ValueError(f"expected a vector or a matrix, got shape {arr.shape}")
        out = np.empty_like(arr)
        for i in range(arr.shape[0]):
            validate_continuous(arr[i])
            self.problem_.check_dimension(arr[i])
            out[i] = self._round_one(arr[i].copy(), i)
        return out

    def _round_one(self, x: np.ndarray, row: int) -> np.ndarray:
        raise NotImplementedError


def _best_move(delta0: np.ndarray, delta1: np.ndarray) -> tuple[int, int, float]:
    """Highest improvement among all (index, bit) moves; ties prefer the
    smaller index, then bit 0."""
    pairs = np.stack([delta0, delta1], axis=1)
    if not np.isfinite(pairs).all():
        j = int(np.argmax((~np.isfinite(pairs)).any(axis=1)))
        raise RoundingError(f"non-finite surrogate difference at entry {j}")
    # C-order argmax scans (j=0,b=0), (j=0,b=1), (j=1,b=0), ... taking the
    # first maximum, which is exactly the tie rule.
    flat = int(np.argmax(pairs))
    return flat // 2, flat % 2, float(pairs[flat // 2, flat % 2])


class SampleRounder(_RounderBase):
    """Independent Bernoulli sampling from the decision probabilities.

    Each row of a transform input draws from its own child stream (by row
    index), so the map is pure: the same rounder and input always give the
    same output.
    """

    def __init__(self, stream: SeedStream | None = None):
        self.stream = stream

    def _prepare(self) -> None:
        if self.stream is None:
            raise ValueError("SampleRounder needs a SeedStream")

    def _round_one(self, x, row):
        u = self.stream.child(row).uniforms(x.shape[0])
        return (u < x).astype(np.float64)


class IterativeRounder(_RounderBase):
    """Fixed-order single-pass rounding (identity order unless given one)."""

    def __init__(self, order=None):
        self.order = order

    def _prepare(self) -> None:
        n = self.problem_.dimension
        self._order = (
            default_order(n) if self.order is None else _check_order(self.order, n)
        )

    def _round_one(self, x, row):
        out, _ = self._round_with_margins(x)
        return out

    def decision_margins(self, x) -> np.ndarray:
        """|delta_1 - delta_0| at each visited entry along the rounding path.

        Small margins flag near-ties where an arbitrarily sharp softmax could
        still disagree with the hard argmax.
        """
        self._require_fit()
        arr = validate_continuous(np.asarray(x, dtype=np.float64)).copy()
        self.problem_.check_dimension(arr)
        _, margins = self._round_with_margins(arr)
        return margins

    def _round_with_margins(self, x):
        problem = self.problem_
        margins = np.empty(x.shape[0])
        for step, j in enumerate(self._order):
            delta0, delta1 = problem.flip_deltas(x)
            d0, d1 = delta0[j], delta1[j]
            if not (np.isfinite(d0) and np.isfinite(d1)):
                raise RoundingError(f"non-finite surrogate difference at entry {j}")
            x[j] = 1.0 if d1 > d0 else 0.0
            margins[step] = abs(d1 - d0)
        return x, margins


class GreedyRounder(_RounderBase):
    """Best-improvement local search over single-entry assignments.

    Phase 1 applies the best (index, bit) move while it strictly improves the
    surrogate.  On multilinear surrogates that always ends in a binary local
    minimum; if fractional entries survive (possible when the surrogate is
    curved per coordinate), phase 2 rounds them in index order to the better
    endpoint even when neither improves, so the output is always binary.
    """

    def _round_one(self, x, row):
        problem = self.problem_
        if x.size == 0:
            return x
        while True:
            delta0, delta1 = problem.flip_deltas(x)
            j, bit, gain = _best_move(delta0, delta1)
            if gain <= 0.0:
                break
            x[j] = float(bit)
        fractional = np.nonzero((x != 0.0) & (x != 1.0))[0]
        for j in fractional:
            delta0, delta1 = problem.flip_deltas(x)
            d0, d1 = delta0[j], delta1[j]
            if not (np.isfinite(d0) and np.isfinite(d1)):
                raise RoundingError(f"non-finite surrogate difference at entry {j}")
            x[j] = 1.0 if d1 > d0 else 0.0
        return x


class SoftIterativeRounder(_RounderBase):
    """Iterative rounding with the argmax replaced by a two-way softmax.

    Each visited entry becomes the softmax weight of the b = 1 branch at
    temperature `tau`; the output is a differentiable function of the input
    (use :meth:`transform_graph` for gradient flow).
    """

    def __init__(self, tau: float = 1.0, order=None):
        self.tau = tau
        self.order = order

    def _prepare(self) -> None:
        if not self.tau > 0:
            raise ValueError(f"tau must be positive, got {self.tau}")
        n = self.problem_.dimension
        self._order = (
            default_order(n) if self.order is None else _check_order(self.order, n)
        )

    def transform_graph(self, x: torch.Tensor) -> torch.Tensor:
        problem = self._require_fit()
        q = x
        for j in self._order:
            d0, d1 = problem.coordinate_deltas_graph(q, int(j))
            w1 = ad.softmax_pair(d0, d1, self.tau)
            hot = torch.zeros(q.shape[0], dtype=torch.float64)
            hot[int(j)] = 1.0
            q = q + (w1 - q[int(j)]) * hot
        return q

    def _round_one(self, x, row):
        with torch.no_grad():
            return self.transform_graph(torch.from_numpy(x)).numpy()


class SoftGreedyRounder(_RounderBase):
    """Greedy rounding with the argmax over all 2n moves softened.

    Each of `steps` rounds scores every (index, bit) move, takes a softmax at
    temperature `tau` over the 2n scores, and moves every coordinate
    simultaneously to the convex combination of staying, being set to 0, and
    being set to 1.  Entries therefore remain in [0, 1].  The step budget
    replaces the hard scheme's data-dependent stopping so the computation
    graph does not depend on values; it defaults to the problem dimension.
    """

    def __init__(self, tau: float = 1.0, steps: int | None = None):
        self.tau = tau
        self.steps = steps

    def _prepare(self) -> None:
        if not self.tau > 0:
            raise ValueError(f"tau must be positive, got {self.tau}")
        if self.steps is None:
            self._steps = self.problem_.dimension
        else:
            self._steps = int(self.steps)
            if self._steps < 1:
                raise ValueError(f"steps must be at least 1, got {self.steps}")

    def transform_graph(self, x: torch.Tensor) -> torch.Tensor:
        problem = self._require_fit()
        n = x.shape[0]
        q = x
        if n == 0:
            return q
        for _ in range(self._steps):
            d0, d1 = problem.flip_deltas_graph(q)
            w = ad.stable_softmax(torch.cat([d0, d1]), self.tau)
            w0, w1 = w[:n], w[n:]
            q = q * (1.0 - w0 - w1) + w1
        return q

    def _round_one(self, x, row):
        with torch.no_grad():
            return self.transform_graph(torch.from_numpy(x)).numpy()


def make_rounder(scheme: str, *, tau: float | None = None, order=None,
                 steps: int | None = None, stream: SeedStream | None = None):
    """Instantiate a rounder from its scheme name (see SCHEME_NAMES)."""
    if scheme == "sample":
        return SampleRounder(stream=stream)
    if scheme == "iterative":
        return IterativeRounder(order=order)
    if scheme == "greedy":
        return GreedyRounder()
    if scheme == "soft-iterative":
        return SoftIterativeRounder(tau=1.0 if tau is None else tau, order=order)
    if scheme == "soft-greedy":
        return SoftGreedyRounder(tau=1.0 if tau is None else tau, steps=steps)
    raise ValueError(f"unknown scheme {scheme!r}; expected one of {SCHEME_NAMES}")
