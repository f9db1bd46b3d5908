"""Reverse-mode differentiation plumbing.

All losses in this library are scalars built from float64 graph values, so a
single backward sweep yields the whole gradient.  Graph values are
``torch.Tensor`` objects (0-d for scalars, 1-d for decision vectors) and the
recording is rebuilt fresh for every loss evaluation; torch.autograd supplies
the reverse sweep.  This module adds the pieces the algorithms rely on:
domain-checked primitives, a numerically stable temperature softmax (the only
smooth selection mechanism used anywhere -- hard argmax paths are evaluated
outside the graph), gradient extraction, and a central-difference checker.
"""

from __future__ import annotations

from typing import Callable, Sequence

import numpy as np
import torch

#: Scalars and vectors participating in the differentiation graph.
GraphValue = torch.Tensor


class GraphDomainError(ValueError):
    """An operation was applied outside its differentiable domain."""


def leaf(values) -> GraphValue:
    """A float64 graph input that accumulates gradients."""
    return torch.as_tensor(np.asarray(values, dtype=np.float64)).clone().requires_grad_(True)


def _as_value(x) -> GraphValue:
    if isinstance(x, torch.Tensor):
        if x.dtype != torch.float64:
            raise GraphDomainError(f"graph values must be float64, got {x.dtype}")
        return x
    return torch.as_tensor(float(x), dtype=torch.float64)


def add(a, b) -> GraphValue:
    return _as_value(a) + _as_value(b)


def subtract(a, b) -> GraphValue:
    return _as_value(a) - _as_value(b)


def multiply(a, b) -> GraphValue:
    return _as_value(a) * _as_value(b)


def divide(a, b) -> GraphValue:
    den = _as_value(b)
    if bool((den == 0).any()):
        raise GraphDomainError("divide: zero denominator")
    return _as_value(a) / den


def negate(a) -> GraphValue:
    return -_as_value(a)


def exponential(a) -> GraphValue:
    return torch.exp(_as_value(a))


def natural_log(a) -> GraphValue:
    arg = _as_value(a)
    if bool((arg <= 0).any()):
        raise GraphDomainError("natural_log: argument must be positive")
    return torch.log(arg)


def logistic(a) -> GraphValue:
    return torch.sigmoid(_as_value(a))


def power(a, exponent: float) -> GraphValue:
    """a ** exponent for a constant (non-graph) exponent."""
    return _as_value(a) ** float(exponent)


def stable_softmax(scores, tau: float) -> GraphValue:
    """softmax(scores / tau) with the max subtracted before exponentiation.

    Accepts a 1-d graph value or any sequence of scalars; outputs are strictly
    positive and sum to 1 even for huge score magnitudes.  The subtracted max
    is detached: softmax is invariant to uniform shifts, so gradients are
    unaffected.  Shifted scores are floored at -700 so exp cannot underflow to
    an exact zero; the affected weights are below 1e-304 regardless.
    """
    if not tau > 0:
        raise GraphDomainError(f"softmax temperature must be positive, got {tau}")
    if isinstance(scores, torch.Tensor):
        z = scores
    else:
        z = torch.stack([_as_value(s).reshape(()) for s in scores])
    if z.numel() == 0:
        raise GraphDomainError("softmax needs at least one score")
    z = z / tau
    z = torch.clamp(z - z.max().detach(), min=-700.0)
    e = torch.exp(z)
    return e / e.sum()


def backward(output: GraphValue, inputs) -> np.ndarray:
    """Partials of a scalar output w.r.t. designated inputs.

    `inputs` is a leaf vector or a sequence of leaves; inputs the output does
    not depend on get partial 0.  Returns a flat float64 numpy array aligned
    with the inputs.
    """
    single = isinstance(inputs, torch.Tensor)
    ins = [inputs] if single else list(inputs)
    grads = torch.autograd.grad(output, ins, allow_unused=True)
    parts = []
    for tensor, grad in zip(ins, grads):
        if grad is None:
            grad = torch.zeros_like(tensor)
        parts.append(grad.detach().numpy().reshape(-1))
    return np.concatenate(parts) if parts else np.zeros(0)


def relative_error(a: float, b: float) -> float:
    """|a - b| / max(1, |a|, |b|); bounded denominator avoids blowup near 0."""
    return abs(a - b) / max(1.0, abs(a), abs(b))


def grad_check(
    f: Callable[[GraphValue], GraphValue],
    x,
    h: float = 1e-5,
) -> float:
    """Max relative error between reverse-mode and central-difference gradients.

    `f` maps a decision vector (graph value) to a scalar graph value.  `x`
    must be strictly interior to [0, 1]^n with margin > h so the perturbed
    points stay inside the domain.
    """
    point = np.asarray(x, dtype=np.float64)
    if point.ndim != 1:
        raise ValueError(f"expected a 1-d point, got shape {point.shape}")
    if point.size and not ((point - h > 0.0).all() and (point + h < 1.0).all()):
        raise ValueError(f"point must be interior to [0, 1]^n with margin > {h}")

    inputs = leaf(point)
    analytic = backward(f(inputs), inputs)

    worst = 0.0
    with torch.no_grad():
        for i in range(point.size):
            bumped = point.copy()
            bumped[i] = point[i] + h
            upper = float(f(torch.as_tensor(bumped)))
            bumped[i] = point[i] - h
            lower = float(f(torch.as_tensor(bumped)))
            numeric = (upper - lower) / (2.0 * h)
            worst = max(worst, relative_error(float(analytic[i]), numeric))
    return worst


def softmax_pair(delta_zero: GraphValue, delta_one: GraphValue, tau: float) -> GraphValue:
    """Weight assigned to the b=1 branch by a two-way temperature softmax."""
    return stable_softmax(torch.stack([_as_value(delta_zero).reshape(()),
                                       _as_value(delta_one).reshape(())]), tau)[1]
