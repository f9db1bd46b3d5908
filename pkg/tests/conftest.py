"""Shared brute-force oracles used to pin the fast implementations."""

import itertools

import numpy as np
import pytest

from softround.seeding import SeedStream


def corners(n):
    """All 2^n binary decision vectors."""
    for bits in itertools.product((0.0, 1.0), repeat=n):
        yield np.array(bits)


def outcome_weight(bits, p):
    return float(np.prod(np.where(bits == 1.0, p, 1.0 - p)))


def bernoulli_expectation(fn, p):
    """E[fn(D)] under D ~ independent Bernoulli(p), by full enumeration."""
    p = np.asarray(p, dtype=np.float64)
    return sum(outcome_weight(bits, p) * fn(bits) for bits in corners(p.size))


def overflow_tail_oracle(p, budget):
    """Pr[sum(D) > budget] under D ~ Bernoulli(p), by full enumeration."""
    p = np.asarray(p, dtype=np.float64)
    return sum(
        outcome_weight(bits, p)
        for bits in corners(p.size)
        if bits.sum() > budget
    )


def brute_force_minimum(fn, n):
    """min over {0,1}^n of fn, by full enumeration."""
    return min(fn(bits) for bits in corners(n))


@pytest.fixture
def stream():
    return SeedStream(20240 + 817)
