"""Vertex weight families and the exact checks that tie them together.

The master object is the fused weight W_{L,M}(x; q; A,B,C,D) given by the
double-Phi sum; everything else is a specialization of it:

* the fundamental R-matrix at L = M = 1,
* the one-path row weights L / L_stoch (M-capacity continued to s^2),
* the dual row weights M / M_stoch,
* the q-Hahn weight at spectral parameter 1,
* the fused-model bulk weight with (q^{-L}, q^{-M}) -> (z^2, s^2).

`fuse_oracle` rebuilds W from an (L x M)-block of fundamental R-vertices by
brute-force enumeration and is the ground truth the explicit formula is
tested against.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Iterator, Mapping, Sequence

from vertexlab.qkit import (
    compositions_bounded,
    q_binomial,
    q_pochhammer,
    q_pochhammer_inf,
)

Vec = tuple[int, ...]


def unit(n: int, colour: int) -> Vec:
    """e_colour in n coordinates; colour 0 is the zero vector."""
    if colour == 0:
        return (0,) * n
    return tuple(1 if i == colour - 1 else 0 for i in range(n))


def vec_add(a: Sequence[int], b: Sequence[int]) -> Vec:
    return tuple(x + y for x, y in zip(a, b))


def vec_sub(a: Sequence[int], b: Sequence[int]) -> Vec:
    return tuple(x - y for x, y in zip(a, b))


def vec_ge(a: Sequence[int], b: Sequence[int]) -> bool:
    return all(x >= y for x, y in zip(a, b))


# ---------------------------------------------------------------------------
# Parameters
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ModelParams:
    """q, spin s, row rapidities, and optional column inhomogeneities.

    Columns default to (s_j, xi_j) = (s, 1); only finitely many may differ,
    stored sparsely.  Column 0 must stay at the default wherever the
    conditioned measure is involved; the constructor does not enforce that
    so the weight-level checks can probe general columns.
    """

    q: object
    s: object
    xs: tuple = ()
    columns: tuple = ()  # ((col, s_col, xi_col), ...)

    @classmethod
    def make(cls, q, s, xs=(), columns: Mapping[int, tuple] | None = None) -> "ModelParams":
        cols = tuple(sorted((j, sj, xj) for j, (sj, xj) in (columns or {}).items()))
        return cls(q, s, tuple(xs), cols)

    @property
    def n(self) -> int:
        return len(self.xs)

    def s_at(self, j: int):
        for col, sj, _ in self.columns:
            if col == j:
                return sj
        return self.s

    def xi_at(self, j: int):
        for col, _, xj in self.columns:
            if col == j:
                return xj
        return self.q * 0 + 1

    def column_default(self, j: int) -> bool:
        return all(col != j for col, _, _ in self.columns)

    def with_xs(self, xs) -> "ModelParams":
        return ModelParams(self.q, self.s, tuple(xs), self.columns)

    def inverted(self) -> "ModelParams":
        """(q, s) -> (1/q, 1/s); used by the f <-> g duality."""
        if self.columns:
            raise ValueError("parameter inversion only supported without column data")
        return ModelParams(1 / self.q, 1 / self.s, self.xs, ())


@dataclass(frozen=True)
class FusedConfig:
    """Fully fused model: parameters q, s^2, z^2 and the row colouring."""

    q: object
    s_sq: object
    z_sq: object
    colouring: tuple[int, ...] = ()

    @property
    def in_positive_regime(self) -> bool:
        q, ssq, zsq = float(self.q), float(self.s_sq), float(self.z_sq)
        return 0 < q < 1 and 0 < ssq < zsq < 1

    def require_positive_regime(self) -> None:
        if not self.in_positive_regime:
            raise ValueError(
                f"need 0 < q < 1 and 0 < s^2 < z^2 < 1, got "
                f"q={self.q}, s^2={self.s_sq}, z^2={self.z_sq}"
            )


# ---------------------------------------------------------------------------
# Fundamental R-matrix
# ---------------------------------------------------------------------------


def r_weight(z, q, i: int, j: int, k: int, l: int):
    """Fundamental stochastic R-vertex: bottom i, left j -> top k, right l.

    Colours are 0 (empty) or 1..n; only five patterns are nonzero.  Rows of
    the table sum to 1 over the outgoing pair for every incoming pair.
    """
    if 1 - q * z == 0:
        raise ZeroDivisionError("r_weight undefined at z = 1/q")
    if i == j == k == l:
        return z * 0 + 1
    if (i, j) == (k, l):
        if j < i:  # bottom colour dominant, pass-through
            return q * (1 - z) / (1 - q * z)
        if i < j:
            return (1 - z) / (1 - q * z)
        return z * 0
    if (j, i) == (k, l):  # swap
        if i > j:
            return (1 - q) / (1 - q * z)
        if i < j:
            return (1 - q) * z / (1 - q * z)
    return z * 0


# ---------------------------------------------------------------------------
# The fused weight W_{L,M}
# ---------------------------------------------------------------------------


def _phi(lam: Vec, mu: Vec, x, y, q):
    """Phi(lam, mu; x, y) for lam <= mu coordinatewise:

        (x;q)_{|lam|} (y/x;q)_{|mu-lam|} / (y;q)_{|mu|}
        * (y/x)^{|lam|} q^{sum_{i<j} (mu_i - lam_i) lam_j}
        * prod_i binom(mu_i, lam_i)_q.
    """
    if not vec_ge(mu, lam):
        raise ValueError("_phi needs lam <= mu coordinatewise")
    la, mu_tot = sum(lam), sum(mu)
    den = q_pochhammer(y, q, mu_tot)
    if den == 0:
        raise ZeroDivisionError(f"Phi denominator (y;q)_{mu_tot} vanishes at y={y!r}")
    n = len(lam)
    expo = sum(
        (mu[i] - lam[i]) * lam[j] for i in range(n) for j in range(i + 1, n)
    )
    out = (
        q_pochhammer(x, q, la)
        * q_pochhammer(y / x, q, mu_tot - la)
        / den
        * (y / x) ** la
        * q**expo
    )
    for m_i, l_i in zip(mu, lam):
        out = out * q_binomial(m_i, l_i, q)
    return out


def w_weight_analytic(L: int, t, x, q, A: Vec, B: Vec, C: Vec, D: Vec):
    """W_{L, M} with q^{-M} analytically continued to the free parameter t.

    Rational in t; at t = q^{-M} this is the genuine fused weight.  The
    horizontal capacity L stays a nonnegative integer.
    """
    if vec_add(A, B) != vec_add(C, D):
        return q * 0
    if sum(B) > L or sum(D) > L:
        return q * 0
    total = q * 0
    n = len(A)
    for P in itertools.product(*(range(min(b, c) + 1) for b, c in zip(B, C))):
        P = tuple(P)
        total = total + _phi(
            vec_sub(C, P), vec_sub(vec_add(C, D), P), q**L * t * x, t * x, q
        ) * _phi(P, B, q ** (-L) / x, q ** (-L), q)
    return total * x ** (sum(D) - sum(B)) * q ** (sum(A) * L) * t ** sum(D)


def w_weight(L: int, M, x, q, A: Vec, B: Vec, C: Vec, D: Vec):
    """Fused vertex weight W_{L,M}(x; q; A,B,C,D).

    `M` is either a nonnegative integer (vertical capacity, enforced) or a
    pair ("analytic", t) substituting t for q^{-M}.
    """
    if isinstance(M, tuple) and M[0] == "analytic":
        return w_weight_analytic(L, M[1], x, q, A, B, C, D)
    if sum(A) > M or sum(C) > M:
        return q * 0
    return w_weight_analytic(L, q ** (-M), x, q, A, B, C, D)


# ---------------------------------------------------------------------------
# Row weights L, L_stoch, M, M_stoch
# ---------------------------------------------------------------------------


def l_weight(x, s, q, I: Vec, j: int, K: Vec, l: int):
    """Gauge-transformed one-path row weight L_x(I, j; K, l), table form."""
    n = len(I)
    if 1 - s * x == 0:
        raise ZeroDivisionError("l_weight undefined at s*x = 1")
    if K != vec_add(I, vec_sub(unit(n, j), unit(n, l))) or min(K) < 0:
        return q * 0
    den = 1 - s * x

    def tail(a: int) -> int:  # I_{>= a}, 1-based colour index
        return sum(I[a - 1 :])

    if j == 0 and l == 0:
        return (1 - s * x * q ** tail(1)) / den
    if j == l:
        return (x - s * q ** I[j - 1]) * q ** tail(j + 1) / den
    if j == 0:
        return x * (1 - q ** I[l - 1]) * q ** tail(l + 1) / den
    if l == 0:
        return (1 - s * s * q ** tail(1)) / den
    if j < l:
        return x * (1 - q ** I[l - 1]) * q ** tail(l + 1) / den
    return s * (1 - q ** I[l - 1]) * q ** tail(l + 1) / den


def l_weight_stoch(x, s, q, I: Vec, j: int, K: Vec, l: int):
    """Stochastic version: L_stoch = (-s)^{1_{l >= 1}} L."""
    w = l_weight(x, s, q, I, j, K, l)
    return w * (-s) if l >= 1 else w


_M_CACHE: dict = {}


def m_weight_stoch(x, s, q, I: Vec, j: int, K: Vec, l: int):
    """M_stoch_x(I, j; K, l) = W_{1,M}(s/x; 1/q)|_{q^M -> s^{-2}}.

    Right label j enters, left label l exits: conservation I + e_j = K + e_l.
    Computed from the analytic fused weight and memoized (the lattice DPs
    revisit the same vertex data constantly).
    """
    key = (x, s, q, I, j, K, l)
    try:
        return _M_CACHE[key]
    except TypeError:  # unhashable scalars (arrays): compute directly
        n = len(I)
        return w_weight_analytic(1, 1 / (s * s), s / x, 1 / q, I, unit(n, j), K, unit(n, l))
    except KeyError:
        pass
    n = len(I)
    val = w_weight_analytic(1, 1 / (s * s), s / x, 1 / q, I, unit(n, j), K, unit(n, l))
    _M_CACHE[key] = val
    return val


def m_weight(x, s, q, I: Vec, j: int, K: Vec, l: int):
    """Gauge-transformed dual row weight: M = (-s)^{1_{j >= 1}} M_stoch."""
    w = m_weight_stoch(x, s, q, I, j, K, l)
    return w * (-s) if j >= 1 else w


def l_weight_family(
    kind: str,
    params: ModelParams,
    row: int,
    column: int,
    I: Vec,
    j: int,
    K: Vec,
    l: int,
):
    """Row weight of the requested family at lattice position (row, column).

    Column inhomogeneities substitute x -> x_row * xi_col, s -> s_col for the
    L-family and x -> x_row / xi_col, s -> s_col for the M-family.
    """
    x_row = params.xs[row - 1]
    s_col = params.s_at(column)
    xi = params.xi_at(column)
    if kind == "L":
        return l_weight(x_row * xi, s_col, params.q, I, j, K, l)
    if kind == "L_stoch":
        return l_weight_stoch(x_row * xi, s_col, params.q, I, j, K, l)
    if kind == "M":
        return m_weight(x_row / xi, s_col, params.q, I, j, K, l)
    if kind == "M_stoch":
        return m_weight_stoch(x_row / xi, s_col, params.q, I, j, K, l)
    raise ValueError(f"unknown weight family {kind!r}")


# ---------------------------------------------------------------------------
# Specializations: q-Hahn point, fused bulk, fused boundary
# ---------------------------------------------------------------------------


def q_hahn_weight(zsq, ssq, q, A: Vec, D: Vec):
    """The q-Hahn kernel

        (s^2/z^2)^{|D|} (s^2/z^2;q)_{|A|-|D|} (z^2;q)_{|D|} / (s^2;q)_{|A|}
        * q^{sum_{i<j} D_i (A_j - D_j)} prod_i binom(A_i, D_i)_q

    which is W_{L,M} at spectral parameter 1 after (q^{-L}, q^{-M}) ->
    (z^2, s^2).  Zero unless D <= A coordinatewise; summing over D <= A
    gives 1 (a q-Vandermonde identity).
    """
    if not vec_ge(A, D):
        return q * 0
    a_tot, d_tot = sum(A), sum(D)
    den = q_pochhammer(ssq, q, a_tot)
    if den == 0:
        raise ZeroDivisionError(f"(s^2;q)_{a_tot} vanishes")
    n = len(A)
    expo = sum(D[i] * (A[j] - D[j]) for i in range(n) for j in range(i + 1, n))
    out = (
        (ssq / zsq) ** d_tot
        * q_pochhammer(ssq / zsq, q, a_tot - d_tot)
        * q_pochhammer(zsq, q, d_tot)
        / den
        * q**expo
    )
    for a_i, d_i in zip(A, D):
        out = out * q_binomial(a_i, a_i - d_i, q)
    return out


def fused_bulk_weight(config: FusedConfig, A: Vec, D: Vec):
    """Bulk weight of the fully fused stochastic model (D given A)."""
    return q_hahn_weight(config.z_sq, config.s_sq, config.q, A, D)


def boundary_tail_mass(config: FusedConfig, k: int) -> float:
    """Probability that k paths enter a fused row from the left boundary."""
    q = float(config.q)
    ssq, zsq = float(config.s_sq), float(config.z_sq)
    pref = q_pochhammer_inf(ssq / zsq, q) / q_pochhammer_inf(ssq, q)
    return (
        pref
        * q_pochhammer(zsq, q, k)
        / q_pochhammer(q, q, k)
        * (ssq / zsq) ** k
    )


def boundary_tail_masses(config: FusedConfig, mass_floor: float = 1e-15) -> list[float]:
    """Masses of the boundary distribution until cumulative >= 1 - floor."""
    config.require_positive_regime()
    out: list[float] = []
    cum = 0.0
    k = 0
    while cum < 1 - mass_floor:
        m = boundary_tail_mass(config, k)
        out.append(m)
        cum += m
        k += 1
        if k > 10_000:
            raise RuntimeError("boundary distribution failed to accumulate mass")
    return out


def specialized_weight(kind: str, *args, **kwargs):
    """Dispatcher for the named specializations of the fused weight."""
    if kind == "q_hahn":
        return q_hahn_weight(*args, **kwargs)
    if kind == "fused_bulk":
        return fused_bulk_weight(*args, **kwargs)
    if kind == "boundary_tail":
        return boundary_tail_mass(*args, **kwargs)
    raise ValueError(f"unknown specialization {kind!r}")


# ---------------------------------------------------------------------------
# Fusion oracle: W from an L x M block of fundamental vertices
# ---------------------------------------------------------------------------


def content_sequences(vec: Vec, length: int) -> Iterator[tuple[int, ...]]:
    """All colour sequences of the given length with content `vec`."""
    n = len(vec)
    pool: list[int] = []
    for colour, count in enumerate(vec, start=1):
        pool.extend([colour] * count)
    pool.extend([0] * (length - len(pool)))
    if len(pool) != length:
        return iter(())
    return iter(sorted(set(itertools.permutations(pool))))


def inversions(seq: Sequence[int]) -> int:
    return sum(
        1
        for a in range(len(seq))
        for b in range(a + 1, len(seq))
        if seq[a] > seq[b]
    )


def anti_inversions(seq: Sequence[int]) -> int:
    return sum(
        1
        for a in range(len(seq))
        for b in range(a + 1, len(seq))
        if seq[a] < seq[b]
    )


def z_q_normalizer(N: int, vec: Vec, q):
    """Z_q(N; I) = sum over content-I sequences of q^{inv}."""
    total = q * 0
    for seq in content_sequences(vec, N):
        total = total + q ** inversions(seq)
    return total


def _r_block_partition_function(
    L: int, M: int, x, y, q, js: Sequence[int], is_: Sequence[int], ks: Sequence[int], ls: Sequence[int]
):
    """Partition function of the L x M grid of fundamental R-vertices.

    Row r (bottom to top) has rapidity q^{r-1} x and boundary labels
    js[r] (left in) / ls[r] (right out); column c (left to right) has
    rapidity q^{M-1-c} y and labels is_[c] (bottom in) / ks[c] (top out).
    The R spectral parameter at (r, c) is column rapidity / row rapidity.
    """
    # DP column by column: state = vertical colours currently crossing
    # upward out of each processed cell of the current column... simpler:
    # sweep rows bottom to top, state = tuple of vertical colours on top of
    # the current row, branching over each vertex's outgoing pair.
    states = {tuple(is_): q * 0 + 1}
    for r in range(L):
        row_rap = q**r * x
        new_states: dict[tuple[int, ...], object] = {}
        for verticals, acc in states.items():
            # walk the row left to right
            partial = [((), js[r], acc)]
            for c in range(M):
                z = (q ** (M - 1 - c) * y) / row_rap
                nxt = []
                for tops, left, wacc in partial:
                    bottom = verticals[c]
                    # outgoing pair (top k, right l) conserves {bottom, left}
                    for top, right in {(bottom, left), (left, bottom)}:
                        w = r_weight(z, q, bottom, left, top, right)
                        if w == 0:
                            continue
                        nxt.append((tops + (top,), right, wacc * w))
                partial = nxt
            for tops, right_out, wacc in partial:
                if right_out != ls[r]:
                    continue
                new_states[tops] = new_states.get(tops, q * 0) + wacc
        states = new_states
    return states.get(tuple(ks), q * 0)


def fuse_oracle(L: int, M: int, x, y, q, A: Vec, B: Vec, C: Vec, D: Vec):
    """Stochastic fusion: W_{L,M}(x/y) from first principles.

    Sums the L x M block of fundamental R-vertices over all boundary colour
    sequences with the prescribed contents, weighting the bottom/left sums
    by q^{inv} / q^{anti-inv} and dividing by the Z_q normalizers.
    Exponential in (L, M, n): use only at oracle scale.
    """
    if vec_add(A, B) != vec_add(C, D):
        return q * 0
    za = z_q_normalizer(M, A, q)
    zb = z_q_normalizer(L, B, q)
    total = q * 0
    for js in content_sequences(B, L):
        for ls in content_sequences(D, L):
            outer = q ** anti_inversions(js)
            for is_ in content_sequences(A, M):
                for ks in content_sequences(C, M):
                    inner = q ** inversions(is_)
                    pf = _r_block_partition_function(L, M, x, y, q, js, is_, ks, ls)
                    total = total + outer * inner * pf
    return total / (za * zb)


# ---------------------------------------------------------------------------
# Property verifiers
# ---------------------------------------------------------------------------


@dataclass
class WeightReport:
    suite: str
    passed: bool
    checks: int
    counterexample: dict | None = None

    def fail(self, **state) -> "WeightReport":
        self.passed = False
        if self.counterexample is None:
            self.counterexample = state
        return self


def _external_vectors(n: int, cap: int) -> list[Vec]:
    out = []
    for total in range(cap + 1):
        out.extend(compositions_bounded((cap,) * n, total))
    return out


def check_w_stochasticity(L: int, M: int, x, q, n: int) -> WeightReport:
    """sum_{C,D} W_{L,M}(x; A,B,C,D) = 1 for every admissible (A, B)."""
    report = WeightReport("stochasticity", True, 0)
    for A in _external_vectors(n, M):
        for B in _external_vectors(n, L):
            tot_in = vec_add(A, B)
            acc = q * 0
            for D in itertools.product(*(range(min(t, L) + 1) for t in tot_in)):
                if sum(D) > L:
                    continue
                C = vec_sub(tot_in, D)
                if sum(C) > M:
                    continue
                acc = acc + w_weight(L, M, x, q, A, B, tuple(C), tuple(D))
            report.checks += 1
            if acc != q * 0 + 1:
                return report.fail(A=A, B=B, row_sum=str(acc))
    return report


def check_transposition(L: int, M: int, x, q, n: int) -> WeightReport:
    """W_{L,M}(x;q;A,B,C,D) == W_{M,L}(q^{M-L}/x; 1/q; B,A,D,C)."""
    report = WeightReport("transposition", True, 0)
    for A in _external_vectors(n, M):
        for B in _external_vectors(n, L):
            tot_in = vec_add(A, B)
            for D in itertools.product(*(range(min(t, L) + 1) for t in tot_in)):
                if sum(D) > L:
                    continue
                C = vec_sub(tot_in, D)
                if sum(C) > M:
                    continue
                lhs = w_weight(L, M, x, q, A, B, tuple(C), tuple(D))
                rhs = w_weight(M, L, q ** (M - L) / x, 1 / q, B, A, tuple(D), tuple(C))
                report.checks += 1
                if lhs != rhs:
                    return report.fail(A=A, B=B, C=C, D=D, lhs=str(lhs), rhs=str(rhs))
    return report


def check_fusion(L: int, M: int, x, y, q, n: int) -> WeightReport:
    """Explicit W formula against the brute-force fusion oracle."""
    report = WeightReport("fusion", True, 0)
    for A in _external_vectors(n, M):
        for B in _external_vectors(n, L):
            tot_in = vec_add(A, B)
            for D in itertools.product(*(range(min(t, L) + 1) for t in tot_in)):
                if sum(D) > L:
                    continue
                C = vec_sub(tot_in, D)
                if sum(C) > M:
                    continue
                lhs = w_weight(L, M, x / y, q, A, B, tuple(C), tuple(D))
                rhs = fuse_oracle(L, M, x, y, q, A, B, tuple(C), tuple(D))
                report.checks += 1
                if lhs != rhs:
                    return report.fail(A=A, B=B, C=C, D=D, lhs=str(lhs), rhs=str(rhs))
    return report


def check_yang_baxter(x, z, s, q, n: int, xi=None, cap: int = 2) -> WeightReport:
    """RLL-type Yang-Baxter for the L / M row weights with an R crossing.

    Checks, for all external states, that inserting the R-vertex of
    spectral parameter 1/(q x z) on either side of the fat column gives
    equal sums.  `xi` exercises the column-inhomogeneous deformation.
    """
    if xi is None:
        xi = q * 0 + 1
    report = WeightReport("yang_baxter", True, 0)
    r_spec = 1 / (q * x * z)
    for I in _external_vectors(n, cap):
        for i1, i3, j1, j3 in itertools.product(range(n + 1), repeat=4):
            J = vec_add(I, vec_sub(vec_add(unit(n, i1), unit(n, i3)),
                                   vec_add(unit(n, j1), unit(n, j3))))
            if min(J) < 0:
                continue
            lhs = q * 0
            rhs = q * 0
            for k1 in range(n + 1):
                K = vec_add(I, vec_sub(unit(n, i1), unit(n, k1)))
                if min(K) >= 0:
                    lw = l_weight(x * xi, s, q, I, i1, K, k1)
                    if lw != 0:
                        for k3 in range(n + 1):
                            rw = r_weight(r_spec, q, i3, k1, k3, j1)
                            if rw == 0:
                                continue
                            mw = m_weight(z / xi, s, q, K, k3, J, j3)
                            lhs = lhs + lw * rw * mw
                for k3 in range(n + 1):
                    K2 = vec_add(I, vec_sub(unit(n, i3), unit(n, k3)))
                    if min(K2) < 0:
                        continue
                    mw = m_weight(z / xi, s, q, I, i3, K2, k3)
                    if mw == 0:
                        continue
                    rw = r_weight(r_spec, q, k3, i1, j3, k1)
                    if rw == 0:
                        continue
                    lw = l_weight(x * xi, s, q, K2, k1, J, j1)
                    rhs = rhs + mw * rw * lw
            report.checks += 1
            if lhs != rhs:
                return report.fail(I=I, i1=i1, i3=i3, j1=j1, j3=j3,
                                   lhs=str(lhs), rhs=str(rhs))
    return report


def check_colour_merge(L: int, M: int, x, q, n1: int, theta: Sequence[int], n2: int) -> WeightReport:
    """Colour merging: summing W over theta-fibres reproduces merged W."""
    from vertexlab.compositions import merge_vector

    report = WeightReport("colour_merge", True, 0)
    for A in _external_vectors(n1, M):
        for B in _external_vectors(n1, L):
            tot_in = vec_add(A, B)
            tot_merged = merge_vector(theta, tot_in, n2)
            for D2 in itertools.product(*(range(min(t, L) + 1) for t in tot_merged)):
                if sum(D2) > L:
                    continue
                C2 = vec_sub(tot_merged, D2)
                if sum(C2) > M:
                    continue
                rhs = w_weight(
                    L, M, x, q,
                    merge_vector(theta, A, n2), merge_vector(theta, B, n2),
                    tuple(C2), tuple(D2),
                )
                lhs = q * 0
                for D in itertools.product(*(range(min(t, L) + 1) for t in tot_in)):
                    if sum(D) > L or merge_vector(theta, D, n2) != tuple(D2):
                        continue
                    C = vec_sub(tot_in, D)
                    if sum(C) > M or merge_vector(theta, C, n2) != tuple(C2):
                        continue
                    lhs = lhs + w_weight(L, M, x, q, A, B, tuple(C), tuple(D))
                report.checks += 1
                if lhs != rhs:
                    return report.fail(A=A, B=B, C2=C2, D2=D2, theta=tuple(theta),
                                       lhs=str(lhs), rhs=str(rhs))
    return report


def verify_weight_properties(suite: str, **kwargs) -> WeightReport:
    """Run one of the named exact weight suites; see the check_* functions."""
    table = {
        "stochasticity": check_w_stochasticity,
        "yang_baxter": check_yang_baxter,
        "transposition": check_transposition,
        "fusion": check_fusion,
        "colour_merge": check_colour_merge,
    }
    try:
        fn = table[suite]
    except KeyError:
        raise ValueError(f"unknown suite {suite!r}") from None
    return fn(**kwargs)
