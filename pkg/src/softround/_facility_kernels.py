"""Compiled kernels for the facility-location surrogate.

Everything here works on the per-location sorted view of the distance matrix:
``order[v, i]`` is the candidate index of the i-th closest center to location
v and ``sd[v, i]`` the corresponding distance.  With ``Q[i] = q[order[v, i]]``
the expected distance from v to its nearest selected center is

    E_v = sum_i sd[v, i] * Q[i] * prod_{l<i} (1 - Q[l]) + M * prod_l (1 - Q[l])

and the cardinality-overflow probability Pr[sum_i Bern(q_i) > k] comes from
the exact Poisson-binomial dynamic program over count states 0..k+1, where
state k+1 absorbs all overflow.

Both quantities are multilinear in q, and the kernels below provide values,
gradients and the vector products of their (exact) Hessians, derived from the
prefix-product / suffix-recursion structure.  These power the differentiable
pipelines without building per-coordinate graphs in Python.
"""

from __future__ import annotations

import numpy as np
from numba import njit


@njit(cache=True)
def expected_service_value(sd, order, penalty, q):
    n_loc, n = sd.shape
    total = 0.0
    for v in range(n_loc):
        keep = 1.0
        acc = 0.0
        for i in range(n):
            p = q[order[v, i]]
            acc += sd[v, i] * p * keep
            keep *= 1.0 - p
        total += acc + penalty * keep
    return total


@njit(cache=True)
def expected_service_grad(sd, order, penalty, q):
    """Value and gradient of the expected-service sum.

    dE_v/dQ_i = C_i * (sd_i - G_{i+1}) with C the exclusive prefix products of
    (1 - Q) and G the tail recursion G_i = sd_i Q_i + (1 - Q_i) G_{i+1},
    G_n = penalty.
    """
    n_loc, n = sd.shape
    grad = np.zeros(n)
    total = 0.0
    C = np.empty(n + 1)
    G = np.empty(n + 1)
    for v in range(n_loc):
        C[0] = 1.0
        for i in range(n):
            C[i + 1] = C[i] * (1.0 - q[order[v, i]])
        G[n] = penalty
        for i in range(n - 1, -1, -1):
            p = q[order[v, i]]
            G[i] = sd[v, i] * p + (1.0 - p) * G[i + 1]
        total += G[0]
        for i in range(n):
            grad[order[v, i]] += C[i] * (sd[v, i] - G[i + 1])
    return total, grad


@njit(cache=True)
def expected_service_hvp(sd, order, penalty, q, u):
    """Hessian-vector product of the expected-service sum.

    In position space the Hessian is H_ab = -C_a P(a+1, b) (sd_b - G_{b+1})
    for a < b (P = product of (1 - Q) over the open segment), symmetric, zero
    diagonal.  Row sums against u reduce to two linear scans per location:

        R_a = sum_{b>a} P(a+1, b) (sd_b - G_{b+1}) u_b
        L_a = sum_{b<a} C_b P(b+1, a) u_b
        (H u)_a = -C_a R_a - (sd_a - G_{a+1}) L_a
    """
    n_loc, n = sd.shape
    out = np.zeros(n)
    C = np.empty(n + 1)
    G = np.empty(n + 1)
    R = np.empty(n)
    L = np.empty(n)
    for v in range(n_loc):
        C[0] = 1.0
        for i in range(n):
            C[i + 1] = C[i] * (1.0 - q[order[v, i]])
        G[n] = penalty
        for i in range(n - 1, -1, -1):
            p = q[order[v, i]]
            G[i] = sd[v, i] * p + (1.0 - p) * G[i + 1]
        R[n - 1] = 0.0
        for a in range(n - 2, -1, -1):
            p_next = q[order[v, a + 1]]
            u_next = u[order[v, a + 1]]
            R[a] = (sd[v, a + 1] - G[a + 2]) * u_next + (1.0 - p_next) * R[a + 1]
        L[0] = 0.0
        for a in range(1, n):
            p_prev = q[order[v, a - 1]]
            u_prev = u[order[v, a - 1]]
            L[a] = C[a - 1] * u_prev + (1.0 - p_prev) * L[a - 1]
        for a in range(n):
            out[order[v, a]] += -C[a] * R[a] - (sd[v, a] - G[a + 1]) * L[a]
    return out


@njit(cache=True)
def _pb_forward(q, k):
    """Row i holds the absorbed count pmf of the first i Bernoullis."""
    n = q.shape[0]
    width = k + 2
    F = np.zeros((n + 1, width))
    F[0, 0] = 1.0
    for i in range(n):
        p = q[i]
        for c in range(width):
            F[i + 1, c] = F[i, c] * (1.0 - p)
        for c in range(1, k + 1):
            F[i + 1, c] += F[i, c - 1] * p
        F[i + 1, k + 1] = F[i, k + 1] + F[i, k] * p
    return F


@njit(cache=True)
def _pb_backward(q, k):
    """Row i holds the absorbed count pmf of Bernoullis i..n-1."""
    n = q.shape[0]
    width = k + 2
    B = np.zeros((n + 1, width))
    B[n, 0] = 1.0
    for i in range(n - 1, -1, -1):
        p = q[i]
        for c in range(width):
            B[i, c] = B[i + 1, c] * (1.0 - p)
        for c in range(1, k + 1):
            B[i, c] += B[i + 1, c - 1] * p
        B[i, k + 1] = B[i + 1, k + 1] + B[i + 1, k] * p
    return B


@njit(cache=True)
def overflow_tail(q, k):
    """Pr[sum_i Bern(q_i) > k] by the absorbing dynamic program."""
    n = q.shape[0]
    width = k + 2
    s = np.zeros(width)
    s[0] = 1.0
    for i in range(n):
        p = q[i]
        carry = s[k] * p
        for c in range(k, 0, -1):
            s[c] = s[c] * (1.0 - p) + s[c - 1] * p
        s[0] = s[0] * (1.0 - p)
        s[k + 1] = s[k + 1] + carry
    return s[k + 1]


@njit(cache=True)
def overflow_tail_grad(q, k):
    """Tail value plus its gradient.

    d tail / d q_j = Pr[sum_{i != j} Bern(q_i) = k], assembled from the
    forward and backward pmf tables.
    """
    n = q.shape[0]
    F = _pb_forward(q, k)
    B = _pb_backward(q, k)
    grad = np.empty(n)
    for j in range(n):
        acc = 0.0
        for c in range(k + 1):
            acc += F[j, c] * B[j + 1, k - c]
        grad[j] = acc
    return F[n, k + 1], grad


@njit(cache=True)
def overflow_tail_vjp(q, k, u):
    """Product of the tail's Hessian with a vector u.

    d^2 tail / dq_i dq_j = Pr[S_{-ij} = k-1] - Pr[S_{-ij} = k] for i != j
    (zero diagonal).  The sums over j are carried by "marked" dynamic
    programs: A[i] = sum_{j<i} u_j pmf(first i items minus j) and
    Z[i] = sum_{j>=i} u_j pmf(items i.. minus j).
    """
    n = q.shape[0]
    width = k + 2
    F = _pb_forward(q, k)
    B = _pb_backward(q, k)

    A = np.zeros((n + 1, width))
    for i in range(n):
        p = q[i]
        for c in range(width):
            A[i + 1, c] = A[i, c] * (1.0 - p)
        for c in range(1, k + 1):
            A[i + 1, c] += A[i, c - 1] * p
        A[i + 1, k + 1] = A[i, k + 1] + A[i, k] * p
        for c in range(width):
            A[i + 1, c] += u[i] * F[i, c]

    Z = np.zeros((n + 1, width))
    for i in range(n - 1, -1, -1):
        p = q[i]
        for c in range(width):
            Z[i, c] = Z[i + 1, c] * (1.0 - p)
        for c in range(1, k + 1):
            Z[i, c] += Z[i + 1, c - 1] * p
        Z[i, k + 1] = Z[i + 1, k + 1] + Z[i + 1, k] * p
        for c in range(width):
            Z[i, c] += u[i] * B[i + 1, c]

    out = np.empty(n)
    for i in range(n):
        w_k = 0.0
        for c in range(k + 1):
            w_k += A[i, c] * B[i + 1, k - c] + F[i, c] * Z[i + 1, k - c]
        w_k1 = 0.0
        if k >= 1:
            for c in range(k):
                w_k1 += A[i, c] * B[i + 1, k - 1 - c] + F[i, c] * Z[i + 1, k - 1 - c]
        out[i] = w_k1 - w_k
    return out
