"""Concrete binary-decision problems and their differentiable surrogates.

A problem owns three views of its objective:

* ``hard_objective(D)`` -- the discrete objective on binary decisions;
* ``surrogate(x)`` -- a smooth extension to [0, 1]^n, read as expected
  objective plus a penalty on the probability of constraint violation under
  the independent Bernoulli distribution defined by x.  It accepts a numpy
  vector (returns a float) or a torch tensor (returns a graph value);
* ``is_feasible(D)`` -- constraint membership for binary decisions.

Rounding schemes only need single-coordinate surrogate differences
``delta_b = surrogate(x) - surrogate(x with x_j := b)``.  The base class
computes those by full re-evaluation; both concrete problems override them
with algebraically equal closed forms (the surrogates are polynomial per
coordinate), which is what makes the n^2-size pipelines affordable.
"""

from __future__ import annotations

import abc

import numpy as np
import torch
from torch.autograd.function import once_differentiable

from . import _facility_kernels as _fk
from .validation import validate_binary, validate_continuous


def _is_graph(x) -> bool:
    return isinstance(x, torch.Tensor)


class DecisionProblem(abc.ABC):
    """Contract every concrete problem fulfils."""

    @property
    @abc.abstractmethod
    def dimension(self) -> int:
        """Number of binary decisions n."""

    @abc.abstractmethod
    def hard_objective(self, decisions) -> float:
        """Objective value on a binary decision vector."""

    @abc.abstractmethod
    def is_feasible(self, decisions) -> bool:
        """Whether a binary decision vector satisfies the constraints."""

    @abc.abstractmethod
    def surrogate(self, x):
        """Smooth surrogate; numpy in -> float out, tensor in -> tensor out."""

    def check_dimension(self, x) -> None:
        n = x.shape[0] if hasattr(x, "shape") else len(x)
        if n != self.dimension:
            raise ValueError(
                f"decision vector has length {n}, problem dimension is {self.dimension}"
            )

    # -- single-coordinate surrogate differences ----------------------------
    # delta_b[j] = surrogate(x) - surrogate(x with x_j := b).  The generic
    # versions re-evaluate the surrogate in full; subclasses override with
    # closed forms that tests pin to these within 1e-10.

    def flip_deltas(self, state: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        base = self.surrogate(state)
        n = state.shape[0]
        delta0 = np.empty(n)
        delta1 = np.empty(n)
        for j in range(n):
            kept = state[j]
            state[j] = 0.0
            delta0[j] = base - self.surrogate(state)
            state[j] = 1.0
            delta1[j] = base - self.surrogate(state)
            state[j] = kept
        return delta0, delta1

    def flip_deltas_graph(self, state: torch.Tensor):
        base = self.surrogate(state)
        n = state.shape[0]
        eye = torch.eye(n, dtype=torch.float64)
        d0, d1 = [], []
        for j in range(n):
            off = state * (1.0 - eye[j])
            d0.append(base - self.surrogate(off))
            d1.append(base - self.surrogate(off + eye[j]))
        return torch.stack(d0), torch.stack(d1)

    def coordinate_deltas_graph(self, state: torch.Tensor, j: int):
        base = self.surrogate(state)
        hot = torch.zeros(state.shape[0], dtype=torch.float64)
        hot[j] = 1.0
        off = state * (1.0 - hot)
        return base - self.surrogate(off), base - self.surrogate(off + hot)


class QuadraticProblem(DecisionProblem):
    """Unconstrained pseudo-Boolean quadratic: f(D) = sum_ij coeff[i,j] D_i D_j.

    The surrogate is the same bilinear form evaluated on probabilities.  On
    zero-diagonal coefficient matrices it equals the exact expectation of f
    under the product Bernoulli distribution; diagonal terms enter as the
    square of the mean, which is the convention this library follows
    throughout.
    """

    def __init__(self, coefficients):
        alpha = np.asarray(coefficients, dtype=np.float64)
        if alpha.ndim != 2 or alpha.shape[0] != alpha.shape[1]:
            raise ValueError(f"coefficient matrix must be square, got {alpha.shape}")
        if alpha.size and not np.isfinite(alpha).all():
            raise ValueError("coefficient matrix must be finite")
        self.coefficients = alpha.copy()
        self._sym = self.coefficients + self.coefficients.T
        self._diag = np.diag(self.coefficients).copy()

    @classmethod
    def sample(cls, n: int, stream) -> "QuadraticProblem":
        """Random instance: n x n i.i.d. standard normal coefficients."""
        if n < 0:
            raise ValueError("n must be non-negative")
        return cls(stream.normals(n * n).reshape(n, n))

    @property
    def dimension(self) -> int:
        return self.coefficients.shape[0]

    def hard_objective(self, decisions) -> float:
        d = validate_binary(decisions)
        self.check_dimension(d)
        return float(d @ self.coefficients @ d)

    def is_feasible(self, decisions) -> bool:
        d = validate_binary(decisions)
        self.check_dimension(d)
        return True

    def surrogate(self, x):
        self.check_dimension(x)
        if _is_graph(x):
            return x @ torch.from_numpy(self.coefficients) @ x
        return float(np.asarray(x) @ self.coefficients @ np.asarray(x))

    def flip_deltas(self, state: np.ndarray):
        self.check_dimension(state)
        s = self._sym @ state - 2.0 * self._diag * state
        sq = state * state
        delta0 = self._diag * sq + s * state
        delta1 = self._diag * (sq - 1.0) + s * (state - 1.0)
        return delta0, delta1

    def flip_deltas_graph(self, state: torch.Tensor):
        s = torch.from_numpy(self._sym) @ state - 2.0 * torch.from_numpy(self._diag) * state
        sq = state * state
        diag = torch.from_numpy(self._diag)
        return diag * sq + s * state, diag * (sq - 1.0) + s * (state - 1.0)

    def coordinate_deltas_graph(self, state: torch.Tensor, j: int):
        s_j = torch.from_numpy(self._sym[j]) @ state - 2.0 * self._diag[j] * state[j]
        t = state[j]
        d0 = self._diag[j] * t * t + s_j * t
        d1 = self._diag[j] * (t * t - 1.0) + s_j * (t - 1.0)
        return d0, d1

    def to_json(self) -> dict:
        return {"alpha": self.coefficients.tolist()}

    @classmethod
    def from_json(cls, doc: dict) -> "QuadraticProblem":
        return cls(np.asarray(doc["alpha"], dtype=np.float64))


class _ExpectedServiceFn(torch.autograd.Function):
    @staticmethod
    def forward(ctx, q, problem):
        ctx.problem = problem
        ctx.save_for_backward(q)
        value = _fk.expected_service_value(
            problem._sd, problem._order, problem.penalty_distance, q.detach().numpy()
        )
        return torch.tensor(value, dtype=torch.float64)

    @staticmethod
    @once_differentiable
    def backward(ctx, grad_out):
        (q,) = ctx.saved_tensors
        p = ctx.problem
        _, grad = _fk.expected_service_grad(
            p._sd, p._order, p.penalty_distance, q.detach().numpy()
        )
        return grad_out * torch.from_numpy(grad), None


class _OverflowTailFn(torch.autograd.Function):
    @staticmethod
    def forward(ctx, q, problem):
        ctx.problem = problem
        ctx.save_for_backward(q)
        value = _fk.overflow_tail(q.detach().numpy(), problem.max_centers)
        return torch.tensor(value, dtype=torch.float64)

    @staticmethod
    @once_differentiable
    def backward(ctx, grad_out):
        (q,) = ctx.saved_tensors
        p = ctx.problem
        _, grad = _fk.overflow_tail_grad(q.detach().numpy(), p.max_centers)
        return grad_out * torch.from_numpy(grad), None


class _SurrogateGradientFn(torch.autograd.Function):
    """Gradient of the facility surrogate as a graph value.

    The surrogate is multilinear, so single-coordinate differences reduce to
    (x_j - b) * c_j with c the gradient.  Backward needs the exact
    Hessian-vector product, supplied by the kernels.
    """

    @staticmethod
    def forward(ctx, q, problem):
        ctx.problem = problem
        ctx.save_for_backward(q)
        qn = q.detach().numpy()
        _, es_grad = _fk.expected_service_grad(
            problem._sd, problem._order, problem.penalty_distance, qn
        )
        _, tail_grad = _fk.overflow_tail_grad(qn, problem.max_centers)
        return torch.from_numpy(es_grad + problem.constraint_coefficient * tail_grad)

    @staticmethod
    @once_differentiable
    def backward(ctx, grad_out):
        (q,) = ctx.saved_tensors
        p = ctx.problem
        qn = q.detach().numpy()
        u = grad_out.detach().numpy()
        out = _fk.expected_service_hvp(p._sd, p._order, p.penalty_distance, qn, u)
        out = out + p.constraint_coefficient * _fk.overflow_tail_vjp(qn, p.max_centers, u)
        return torch.from_numpy(out), None


class FacilityLocationProblem(DecisionProblem):
    """Pick at most `max_centers` centers to minimize total nearest distance.

    ``distances[v, c]`` is the distance from location v to candidate center c.
    The hard objective is the summed distance from every location to its
    closest selected center; an empty selection costs `penalty_distance` per
    location.  Feasibility is the cardinality budget sum(D) <= max_centers.

    The surrogate is the exact expectation of the service cost under the
    product Bernoulli distribution (per location, a sorted-order chain of
    "closest available center" terms) plus `constraint_coefficient` times the
    exact Poisson-binomial probability of exceeding the budget.
    """

    def __init__(self, distances, max_centers: int, constraint_coefficient: float = 1.0,
                 penalty_distance: float | None = None, points=None):
        dist = np.asarray(distances, dtype=np.float64)
        if dist.ndim != 2 or dist.shape[0] != dist.shape[1]:
            raise ValueError(f"distance matrix must be square, got {dist.shape}")
        if not np.isfinite(dist).all() or (dist < 0).any():
            raise ValueError("distances must be finite and non-negative")
        n = dist.shape[0]
        if not 1 <= max_centers <= n:
            raise ValueError(f"max_centers must be in [1, {n}], got {max_centers}")
        if not constraint_coefficient > 0:
            raise ValueError("constraint_coefficient must be positive")
        top = float(dist.max()) if dist.size else 0.0
        if penalty_distance is None:
            penalty_distance = top
        elif penalty_distance < top:
            raise ValueError("penalty_distance must be at least the largest distance")

        self.distances = dist.copy()
        self.max_centers = int(max_centers)
        self.constraint_coefficient = float(constraint_coefficient)
        self.penalty_distance = float(penalty_distance)
        self.points = None if points is None else np.asarray(points, dtype=np.float64).copy()
        self._order = np.argsort(self.distances, axis=1, kind="stable")
        self._sd = np.take_along_axis(self.distances, self._order, axis=1)

    @classmethod
    def sample(cls, n: int, max_centers: int, constraint_coefficient: float,
               stream) -> "FacilityLocationProblem":
        """Random instance: n uniform points in the unit square, Euclidean distances."""
        points = stream.uniforms(2 * n).reshape(n, 2)
        return cls.from_points(points, max_centers, constraint_coefficient)

    @classmethod
    def from_points(cls, points, max_centers: int,
                    constraint_coefficient: float = 1.0) -> "FacilityLocationProblem":
        pts = np.asarray(points, dtype=np.float64)
        if pts.ndim != 2 or pts.shape[1] != 2:
            raise ValueError(f"points must have shape (n, 2), got {pts.shape}")
        diff = pts[:, None, :] - pts[None, :, :]
        dist = np.sqrt((diff * diff).sum(axis=2))
        return cls(dist, max_centers, constraint_coefficient, points=pts)

    @property
    def dimension(self) -> int:
        return self.distances.shape[0]

    def hard_objective(self, decisions) -> float:
        d = validate_binary(decisions)
        self.check_dimension(d)
        chosen = d > 0.5
        if not chosen.any():
            return self.dimension * self.penalty_distance
        return float(self.distances[:, chosen].min(axis=1).sum())

    def is_feasible(self, decisions) -> bool:
        d = validate_binary(decisions)
        self.check_dimension(d)
        return float(d.sum()) <= self.max_centers

    def expected_service(self, x):
        """Expected distance from every location to its nearest selected center."""
        self.check_dimension(x)
        if _is_graph(x):
            return _ExpectedServiceFn.apply(x, self)
        return float(_fk.expected_service_value(
            self._sd, self._order, self.penalty_distance,
            np.ascontiguousarray(x, dtype=np.float64)))

    def overflow_probability(self, x):
        """Pr[number of selected centers > max_centers] under Bernoulli(x)."""
        self.check_dimension(x)
        if _is_graph(x):
            return _OverflowTailFn.apply(x, self)
        return float(_fk.overflow_tail(
            np.ascontiguousarray(x, dtype=np.float64), self.max_centers))

    def surrogate(self, x):
        return self.expected_service(x) + self.constraint_coefficient * self.overflow_probability(x)

    def surrogate_gradient(self, x: np.ndarray) -> np.ndarray:
        """Exact gradient of the surrogate at a numpy point."""
        self.check_dimension(x)
        q = np.ascontiguousarray(x, dtype=np.float64)
        _, es_grad = _fk.expected_service_grad(self._sd, self._order, self.penalty_distance, q)
        _, tail_grad = _fk.overflow_tail_grad(q, self.max_centers)
        return es_grad + self.constraint_coefficient * tail_grad

    def flip_deltas(self, state: np.ndarray):
        self.check_dimension(state)
        c = self.surrogate_gradient(state)
        return state * c, (state - 1.0) * c

    def flip_deltas_graph(self, state: torch.Tensor):
        c = _SurrogateGradientFn.apply(state, self)
        return state * c, (state - 1.0) * c

    def coordinate_deltas_graph(self, state: torch.Tensor, j: int):
        c_j = _SurrogateGradientFn.apply(state, self)[j]
        return state[j] * c_j, (state[j] - 1.0) * c_j

    def to_json(self) -> dict:
        if self.points is None:
            raise ValueError("only point-based instances serialize to JSON")
        return {"points": self.points.tolist(), "k": self.max_centers,
                "beta": self.constraint_coefficient}

    @classmethod
    def from_json(cls, doc: dict) -> "FacilityLocationProblem":
        return cls.from_points(doc["points"], int(doc["k"]), float(doc["beta"]))


def embed(decisions) -> np.ndarray:
    """Map a binary decision vector into [0, 1]^n (bits become reals)."""
    return validate_continuous(validate_binary(decisions))
