"""Exact q-calculus primitives: Pochhammer symbols and Gaussian binomials.

All functions are generic in the scalar type: pass `fractions.Fraction`
for exact identity checking, `complex`/`float` (or numpy arrays) for
quadrature work.  Exactness is the default mode everywhere else in the
package, so the rational path is the one exercised hardest.
"""

from __future__ import annotations

import itertools
from fractions import Fraction
from typing import Iterable, Iterator, Sequence

#: Scalars are anything with field arithmetic; Fraction in exact mode.
Scalar = object

ZERO = Fraction(0)
ONE = Fraction(1)


def q_pochhammer(a, q, k: int):
    """(a; q)_k = prod_{j=0}^{k-1} (1 - a q^j), with (a; q)_0 = 1.

    Negative k is rejected: callers rewrite via the splitting identity
    (a;q)_{j+k} = (a;q)_j (a q^j; q)_k instead.
    """
    if k < 0:
        raise ValueError(f"q_pochhammer needs k >= 0, got {k}")
    out = a * 0 + 1
    aqj = a
    for _ in range(k):
        out = out * (1 - aqj)
        aqj = aqj * q
    return out


def q_pochhammer_inf(a: complex, q: complex, tol: float = 1e-18) -> complex:
    """(a; q)_infty for |q| < 1, truncated once |a q^j| < tol."""
    if abs(q) >= 1:
        raise ValueError("infinite q-Pochhammer needs |q| < 1")
    out = 1.0
    aqj = a
    while abs(aqj) > tol:
        out *= 1 - aqj
        aqj *= q
    return out


def q_binomial(n: int, k: int, q):
    """Gaussian binomial (q;q)_n / ((q;q)_k (q;q)_{n-k}).

    Vanishes unless 0 <= k <= n (the convention used throughout: binomials
    with negative or inverted arguments are zero, which is what makes the
    height-function observables well defined on all inputs).
    """
    if k < 0 or n < 0 or k > n:
        return q * 0
    k = min(k, n - k)
    num = q * 0 + 1
    den = q * 0 + 1
    for i in range(1, k + 1):
        num = num * (1 - q ** (n - k + i))
        den = den * (1 - q**i)
    if _is_exact_zero(den):
        raise ZeroDivisionError(
            f"q_binomial({n},{k}) undefined: (q;q)_{k} vanishes at q={q!r}"
        )
    return num / den


def _is_exact_zero(x) -> bool:
    try:
        return x == 0
    except (TypeError, ValueError):  # numpy arrays: never treat as exact zero
        return False


class QSymbolCache:
    """Memo table for (base; q)_k symbols at a fixed q.

    The weight kernels evaluate the same handful of Pochhammer symbols many
    thousands of times inside dynamic programs; caching them keeps the exact
    mode fast.  Cached values are plain recomputations, nothing clever.
    """

    def __init__(self, q) -> None:
        self.q = q
        self._memo: dict[tuple, object] = {}

    def poch(self, a, k: int):
        key = (a, k)
        try:
            return self._memo[key]
        except KeyError:
            val = q_pochhammer(a, self.q, k)
            self._memo[key] = val
            return val

    def binom(self, n: int, k: int):
        key = ("binom", n, k)
        try:
            return self._memo[key]
        except KeyError:
            val = q_binomial(n, k, self.q)
            self._memo[key] = val
            return val


def compositions_bounded(bounds: Sequence[int], total: int) -> Iterator[tuple[int, ...]]:
    """All integer vectors 0 <= v_i <= bounds_i with sum(v) == total."""
    n = len(bounds)

    def rec(i: int, remaining: int) -> Iterator[tuple[int, ...]]:
        if i == n:
            if remaining == 0:
                yield ()
            return
        tail_room = sum(bounds[i + 1 :])
        lo = max(0, remaining - tail_room)
        hi = min(bounds[i], remaining)
        for v in range(lo, hi + 1):
            for rest in rec(i + 1, remaining - v):
                yield (v,) + rest

    return rec(0, total)


def verify_q_identity(alpha: Sequence[int], beta_total: int, Q) -> bool:
    """Check the merged-colour q-identity

        sum_{beta <= alpha, |beta| fixed}
            Q^{sum_{i<j} beta_i (alpha_j - beta_j)}
            prod_i binom(alpha_i, alpha_i - beta_i)_Q
        == binom(|alpha|, |alpha| - |beta|)_Q

    exactly, summing the left side over every admissible beta.
    """
    if beta_total > sum(alpha):
        raise ValueError("need |beta| <= |alpha|")
    lhs = Q * 0
    for beta in compositions_bounded(alpha, beta_total):
        expo = sum(
            beta[i] * (alpha[j] - beta[j])
            for i, j in itertools.combinations(range(len(alpha)), 2)
        )
        term = Q**expo
        for a_i, b_i in zip(alpha, beta):
            term = term * q_binomial(a_i, a_i - b_i, Q)
        lhs = lhs + term
    rhs = q_binomial(sum(alpha), sum(alpha) - beta_total, Q)
    return lhs == rhs
