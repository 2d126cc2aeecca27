"""Contour-integral machinery: residue sums, quadrature, polymer formulas.

The moment formula for the unfused model has only simple poles at the
inverse rapidities, so it is evaluated exactly over rationals by iterated
residues (`residue_expectation_rhs`).  Everything with higher-order poles
(the fused corollary and the polymer limits) goes through trapezoidal
contour quadrature on validated nested circles or vertical lines.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Sequence

import numpy as np

from vertexlab.compositions import ColouredComposition, ObservableSpec
from vertexlab.qkit import q_pochhammer
from vertexlab.shl import EvaluationPoint, FSession, f_eval, stoch_factor
from vertexlab.weights import FusedConfig, ModelParams

EPS0 = 0.125  # default nesting margin for constructed contours
GUARD = 1e-6  # pole proximity guard band, relative to contour scale


# ---------------------------------------------------------------------------
# Iterated simple-pole residues
# ---------------------------------------------------------------------------


def iterated_residue_sum(pole_sets: Sequence[Sequence], analytic: Callable):
    """Sum of iterated residues of  F(z) * prod_p prod_{w in D_p} 1/(z_p - w).

    `analytic` must be regular at every assignment of distinct poles, and
    must vanish whenever two variables collide (a Vandermonde numerator);
    colliding assignments are skipped outright, so the caller never divides
    by zero.  Each pole set must consist of distinct points.
    """
    if not pole_sets or any(not D for D in pole_sets):
        raise ValueError("every variable needs a nonempty pole set")
    for D in pole_sets:
        if len(set(D)) != len(D):
            raise ValueError("pole set with repeated entries")
    total = pole_sets[0][0] * 0
    for assignment in itertools.product(*pole_sets):
        if len(set(assignment)) != len(assignment):
            continue  # Vandermonde zero
        mult = 1
        for p, w in enumerate(assignment):
            for other in pole_sets[p]:
                if other != w:
                    mult = mult * (w - other)
        total = total + analytic(assignment) / mult
    return total


def _check_genericity(params: ModelParams) -> None:
    xs, q, s = params.xs, params.q, params.s
    if len(set(xs)) != len(xs):
        raise ValueError("rapidities must be pairwise distinct")
    for a in xs:
        if a == 0:
            raise ValueError("zero rapidity")
        if s != 0 and a * s == 1:
            raise ValueError(f"x = 1/s collision at x={a}")
        for b in xs:
            if a == q * b:
                raise ValueError(f"genericity violation: {a} = q * {b}")


def _vandermonde(ys: Sequence, q):
    out = 1
    for i in range(len(ys)):
        for j in range(i + 1, len(ys)):
            out = out * (ys[j] - ys[i]) / (ys[j] - q * ys[i])
    return out


def _moment_prefactor(spec: ObservableSpec, params: ModelParams, min_col: int = 1):
    """q^{sum_{x >= min_col} sum_{i>j} m_i m_j} / prod_{x >= min_col} (s^2;q)_{|m^(x)|}."""
    q, s = params.q, params.s
    by_col: dict[int, list[int]] = {}
    for (i, x), m in spec.m_table().items():
        by_col.setdefault(x, []).append((i, m))
    out = q * 0 + 1
    for x, entries in by_col.items():
        if x < min_col:
            continue
        tot = sum(m for _, m in entries)
        cross = sum(
            m1 * m2
            for (i1, m1), (i2, m2) in itertools.combinations(entries, 2)
            if i1 != i2
        )
        out = out * q**cross / q_pochhammer(s * s, q, tot)
    return out


def _block_of_variable(spec: ObservableSpec) -> list[int]:
    """Variable index p (0-based) -> block index k (0-based)."""
    out = []
    for k, count in enumerate(spec.colour_counts):
        out.extend([k] * count)
    return out


def _bracket_ranges(spec: ObservableSpec, lam: Sequence[int], j_choice: Sequence[int]):
    """Rapidity index range (lo, n] of each variable for one j-term."""
    ell = [0]
    for size in lam:
        ell.append(ell[-1] + size)
    ranges = []
    p = 0
    for k, (colour, count) in enumerate(zip(spec.colours, spec.colour_counts)):
        for t in range(1, count + 1):
            lo = ell[colour - 1] if t <= j_choice[k] else ell[colour]
            ranges.append(lo)
            p += 1
    return ranges  # variable p may sit on poles {1/x_a : ranges[p] < a <= n}


def residue_expectation_rhs(params: ModelParams, spec: ObservableSpec | None,
                            lam: Sequence[int]):
    """Right-hand side of the moment formula, exactly, by residues.

    The m-fold integral over contours enclosing the inverse rapidities and
    nothing else collapses to a sum over injective assignments of variables
    to poles; each residue strips one factor (1 - x_a y_p) analytically and
    evaluates the rest (including f^stoch at the assigned points) exactly.
    """
    lam = tuple(lam)
    q, s = params.q, params.s
    n = params.n
    if spec is None or spec.length == 0:
        return q * 0 + 1
    m = spec.length
    if m > n:
        raise ValueError(f"observable has {m} nonzero parts but only {n} rows")
    _check_genericity(params)
    if not params.column_default(0):
        raise ValueError("column 0 must carry default parameters")
    for x in set(spec.mu.parts):
        if not params.column_default(x):
            raise ValueError(f"column {x} holds parts of mu but is inhomogeneous")
    pref = _moment_prefactor(spec, params, min_col=1)
    xs = params.xs
    counts = spec.colour_counts
    sess = FSession(params)
    f_factor = stoch_factor(spec.mu, params)

    def analytic_factory(ranges):
        consts = 1
        for p, lo in enumerate(ranges):
            for a in range(lo + 1, n + 1):
                consts = consts * (-1) / xs[a - 1]

        def analytic(Y):
            out = _vandermonde(Y, q) * consts
            for p, lo in enumerate(ranges):
                out = out * (Y[p] - s) / Y[p] ** 2
                for a in range(lo + 1, n + 1):
                    out = out * (1 - q * xs[a - 1] * Y[p])
            args = tuple(1 / y for y in Y)
            out = out * f_factor * f_eval(
                spec.mu, EvaluationPoint(args, params), "plain", sess
            )
            return out

        return analytic

    total = q * 0
    for j_choice in itertools.product(*(range(c + 1) for c in counts)):
        coeff = q * 0 + 1
        for k, (jk, mk) in enumerate(zip(j_choice, counts)):
            binom2 = (mk - jk) * (mk - jk - 1) // 2
            coeff = coeff * (-1) ** jk * q**binom2 / (
                q_pochhammer(q, q, jk) * q_pochhammer(q, q, mk - jk)
            )
        ranges = _bracket_ranges(spec, lam, j_choice)
        pole_sets = [
            [1 / xs[a - 1] for a in range(lo + 1, n + 1)] for lo in ranges
        ]
        if any(not ps for ps in pole_sets):
            continue  # a variable with no admissible pole kills the term
        total = total + coeff * iterated_residue_sum(
            pole_sets, analytic_factory(ranges)
        )
    return pref * total


def colour_blind_moment_rhs(params: ModelParams, theta: Sequence[int]):
    """Colour-blind corollary: E[(1-q^{H(t_1+1)})...(1-q^{H(t_m+1)-m+1})].

    theta must be weakly decreasing with positive parts; the integrand is
    fully factorized and every variable sees every pole.
    """
    theta = tuple(theta)
    if any(theta[i] < theta[i + 1] for i in range(len(theta) - 1)):
        raise ValueError("theta must be sorted decreasingly")
    if any(t < 1 for t in theta):
        raise ValueError("theta needs positive parts")
    if params.columns:
        raise ValueError("colour-blind reduction implemented homogeneously")
    _check_genericity(params)
    q, s = params.q, params.s
    xs = params.xs
    n, m = params.n, len(theta)
    consts = 1
    for _ in range(m):
        for a in range(n):
            consts = consts * (-1) / xs[a]

    def analytic(Y):
        out = consts
        for i in range(m):
            for j in range(i + 1, m):
                out = out * (Y[i] - Y[j]) / (Y[i] - q * Y[j])
        for p in range(m):
            out = out * ((1 - s * Y[p]) / (Y[p] - s)) ** theta[p] / Y[p]
            for a in range(n):
                out = out * (1 - q * xs[a] * Y[p])
        return out

    pole_sets = [[1 / x for x in xs] for _ in range(m)]
    value = iterated_residue_sum(pole_sets, analytic)
    sign = (-1) ** m * (-s) ** sum(theta)
    return sign * value


# ---------------------------------------------------------------------------
# Contour specifications and quadrature
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class NestedCircles:
    """Product of circles; orientation +1 is counterclockwise."""

    centers: tuple[complex, ...]
    radii: tuple[float, ...]
    orientation: int = 1

    @property
    def m(self) -> int:
        return len(self.radii)

    def validate(self, poles_inside: Sequence[complex] = (),
                 poles_outside: Sequence[complex] = (),
                 guard: float | None = None) -> None:
        g = guard if guard is not None else GUARD * max(self.radii)
        for c, r in zip(self.centers, self.radii):
            for p in poles_inside:
                if abs(abs(p - c) - r) < g:
                    raise ValueError(f"pole {p} too close to circle ({c}, {r})")
                if abs(p - c) > r:
                    raise ValueError(f"pole {p} not inside circle ({c}, {r})")
            for p in poles_outside:
                if abs(p - c) < r + g:
                    raise ValueError(f"pole {p} inside or near circle ({c}, {r})")


@dataclass(frozen=True)
class VerticalLines:
    """Upward lines Re w = a_k, truncated at |Im w| <= half_height."""

    abscissas: tuple[float, ...]
    half_height: float

    @property
    def m(self) -> int:
        return len(self.abscissas)


@dataclass(frozen=True)
class SimplePoles:
    """Marker spec for the exact residue route."""

    poles: tuple


def contour_quadrature(
    integrand: Callable,
    spec,
    tol: float = 1e-9,
    start_n: int = 64,
    max_doublings: int = 7,
) -> tuple[complex, float]:
    """(2 pi i)^{-m} integral of `integrand` over the product contour.

    Trapezoidal product rule, resolution doubled until two successive
    estimates differ by less than `tol` (relative when the value is large).
    The integrand must accept m numpy arrays and evaluate pointwise.
    """
    if isinstance(spec, NestedCircles):
        eval_at = _circle_value
    elif isinstance(spec, VerticalLines):
        eval_at = _line_value
    else:
        raise TypeError(f"unsupported contour spec {spec!r}")
    prev = None
    n_pts = start_n
    for _ in range(max_doublings + 1):
        if n_pts**spec.m > 2**24:
            raise RuntimeError(
                f"quadrature grid {n_pts}^{spec.m} exceeds the memory budget "
                f"before reaching tol={tol}"
            )
        val = eval_at(integrand, spec, n_pts)
        if prev is not None:
            delta = abs(val - prev)
            if delta <= tol * max(1.0, abs(val)):
                return val, delta
        prev = val
        n_pts *= 2
    raise RuntimeError(
        f"quadrature failed to converge below {tol} at {n_pts // 2} points"
    )


def _circle_value(integrand, spec: NestedCircles, n_pts: int) -> complex:
    m = spec.m
    theta = 2 * np.pi * (np.arange(n_pts) + 0.5) / n_pts
    phases = np.exp(1j * theta)
    axes = []
    weights = []
    for c, r in zip(spec.centers, spec.radii):
        axes.append(c + r * phases)
        weights.append(spec.orientation * r * phases / n_pts)
    grids = np.meshgrid(*axes, indexing="ij")
    wgrids = np.meshgrid(*weights, indexing="ij")
    vals = integrand(*grids)
    w = np.ones_like(vals)
    for wg in wgrids:
        w = w * wg
    return complex((vals * w).sum())


def _line_value(integrand, spec: VerticalLines, n_pts: int) -> complex:
    m = spec.m
    t = np.linspace(-spec.half_height, spec.half_height, n_pts)
    h = t[1] - t[0]
    axes = [a + 1j * t for a in spec.abscissas]
    grids = np.meshgrid(*axes, indexing="ij")
    vals = integrand(*grids)
    # dw = i dt and the 1/(2 pi i) per variable leaves h / (2 pi)
    return complex(vals.sum() * (h / (2 * np.pi)) ** m)


# ---------------------------------------------------------------------------
# Quadrature route for the unfused moment formula (contour freedom check)
# ---------------------------------------------------------------------------


def _main_integrand(params: ModelParams, spec: ObservableSpec, lam: Sequence[int]):
    q = complex(params.q)
    s = complex(params.s)
    xs = [complex(x) for x in params.xs]
    n = len(xs)
    counts = spec.colour_counts
    float_params = ModelParams.make(q, s, tuple(xs))
    f_factor = complex(stoch_factor(spec.mu, params))
    ell = [0]
    for size in lam:
        ell.append(ell[-1] + size)
    qq = [complex(q_pochhammer(params.q, params.q, k)) for k in range(max(counts) + 1)]

    def integrand(*Y):
        out = 1
        for i in range(len(Y)):
            for j in range(i + 1, len(Y)):
                out = out * (Y[j] - Y[i]) / (Y[j] - q * Y[i])
        p0 = 0
        for k, (colour, mk) in enumerate(zip(spec.colours, counts)):
            bracket = 0
            for jk in range(mk + 1):
                term = (-1) ** jk * q ** ((mk - jk) * (mk - jk - 1) // 2)
                term = term / (qq[jk] * qq[mk - jk])
                for t in range(1, mk + 1):
                    p = p0 + t - 1
                    lo = ell[colour - 1] if t <= jk else ell[colour]
                    for a in range(lo + 1, n + 1):
                        term = term * (1 - q * xs[a - 1] * Y[p]) / (1 - xs[a - 1] * Y[p])
                bracket = bracket + term
            out = out * bracket
            p0 += mk
        args = tuple(1 / y for y in Y)
        out = out * f_factor * f_eval(
            spec.mu, EvaluationPoint(args, float_params), "plain",
            FSession(float_params, memo=False),
        )
        for y in Y:
            out = out * (y - s) / y**2
        return out

    return integrand


def q_nested_circles_around(points: Sequence[complex], q: float, m: int,
                            eps0: float = EPS0) -> NestedCircles:
    """Positively oriented q-nested circles enclosing all `points`.

    Contour i must contain q^{-1} times contour j for i < j, so radii grow
    outward from an innermost circle that covers the point cluster.
    """
    center = (min(p.real for p in points) + max(p.real for p in points)) / 2 + 0j
    spread = max(abs(p - center) for p in points)
    radii = [spread + eps0]
    for _ in range(m - 1):
        radii.append(abs(center) * (1 / q - 1) + radii[-1] / q + eps0)
    radii.reverse()  # radii[0] largest: y_1-contour outermost
    return NestedCircles(tuple([center] * m), tuple(radii), 1)


def main_theorem_rhs_quadrature(params: ModelParams, spec: ObservableSpec,
                                lam: Sequence[int], tol: float = 1e-10) -> complex:
    """Moment formula RHS by q-nested circle quadrature (contour freedom)."""
    if params.columns:
        raise ValueError("quadrature route implemented for homogeneous columns")
    q = float(params.q)
    s = complex(params.s)
    poles = [1 / complex(x) for x in params.xs]
    circles = q_nested_circles_around(poles, q, spec.length)
    circles.validate(poles_inside=poles, poles_outside=[s])
    # cross poles q^{+-1} x_a^{-1} must not sit on any contour either
    cross = [p / q for p in poles] + [q * p for p in poles]
    for c, r in zip(circles.centers, circles.radii):
        for p in cross:
            if abs(abs(p - c) - r) < GUARD * max(circles.radii):
                raise ValueError(f"cross pole {p} on contour ({c}, {r})")
    pref = complex(_moment_prefactor(spec, params, min_col=1))
    val, err = contour_quadrature(_main_integrand(params, spec, lam), circles, tol)
    return pref * val


# ---------------------------------------------------------------------------
# The section-5 residue lemma
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SymmetricPolynomial:
    """Polynomial in the elementary symmetric polynomials e_1..e_m."""

    nvars: int
    terms: tuple  # ((coeff, (d_1..d_m)), ...)

    def __call__(self, zs: Sequence):
        es = []
        for k in range(1, self.nvars + 1):
            e = 0
            for combo in itertools.combinations(range(self.nvars), k):
                prod = 1
                for i in combo:
                    prod = prod * zs[i]
                e = e + prod
            es.append(e)
        out = 0
        for coeff, degs in self.terms:
            term = coeff
            for e, d in zip(es, degs):
                term = term * e**d
            out = out + term
        return out


def lemma_check(frak_k: int, frak_l: int, frak_m: int, xs: Sequence, q,
                phi: SymmetricPolynomial) -> bool:
    """Exact check of the residue-identity lemma behind the coloured formula.

    Both sides are evaluated as iterated residue sums over the pole set
    {xs_j}: the left side sums over decreasing index tuples i_1 > ... > i_m
    in [frak_k, frak_l); the right side is the binomial-type j-sum.
    """
    if not (1 <= frak_k and frak_k + frak_m < frak_l <= len(xs)):
        raise ValueError("need 1 <= k, k + m < l <= len(xs)")
    if phi.nvars != frak_m:
        raise ValueError("phi must have m variables")
    if len(set(xs)) != len(xs) or any(x == 0 for x in xs):
        raise ValueError("poles must be distinct and nonzero")
    # left side
    lhs = None
    for idx in itertools.combinations(range(frak_k, frak_l), frak_m):
        i_tuple = tuple(reversed(idx))  # i_1 > ... > i_m

        def analytic(Z, i_tuple=i_tuple):
            out = phi(Z)
            for i in range(frak_m):
                for j in range(i + 1, frak_m):
                    out = out * (Z[j] - Z[i]) / (Z[j] - q * Z[i])
            for p, ip in enumerate(i_tuple):
                for j in range(1, ip + 1):
                    out = out * (q * Z[p] - xs[j - 1])
            return out

        pole_sets = [
            [xs[j - 1] for j in range(1, ip + 2)] for ip in i_tuple
        ]
        val = iterated_residue_sum(pole_sets, analytic)
        lhs = val if lhs is None else lhs + val
    # right side
    rhs = None
    for j in range(frak_m + 1):
        coeff = (-1) ** j * q ** ((frak_m - j) * (frak_m - j - 1) // 2)
        coeff = coeff / (q_pochhammer(q, q, j) * q_pochhammer(q, q, frak_m - j))

        def analytic(Z, j=j):
            out = phi(Z)
            for a in range(frak_m):
                for b in range(a + 1, frak_m):
                    out = out * (Z[b] - Z[a]) / (Z[b] - q * Z[a])
            for p in range(j):
                for a in range(1, frak_l + 1):
                    out = out * (q * Z[p] - xs[a - 1])
            for r in range(j, frak_m):
                for b in range(1, frak_k + 1):
                    out = out * (q * Z[r] - xs[b - 1])
            for p in range(frak_m):
                out = out / Z[p]
            return out

        pole_sets = [
            [xs[a - 1] for a in range(1, frak_l + 1)] if p < j
            else [xs[b - 1] for b in range(1, frak_k + 1)]
            for p in range(frak_m)
        ]
        val = coeff * iterated_residue_sum(pole_sets, analytic)
        rhs = val if rhs is None else rhs + val
    return lhs == rhs


# ---------------------------------------------------------------------------
# Limit functions frak-f, frak-p, frak-e
# ---------------------------------------------------------------------------


class LimitSession:
    """Exchange-recursion evaluator for the polymer-limit functions.

    kind "frak_f": base anti-dominant, prod (sigma/2 - u)^{-1}
    ((sigma/2 + u)/(sigma/2 - u))^{mu_i}; kind "frak_p": base anti-dominant,
    prod v^{-mu_i - 1}; kind "frak_e": base dominant, exp(sum mu_i w_i).
    The exchange operator is T~_i = 1 - (d + 1)/d (1 - swap), d = u_i - u_{i+1}.
    """

    def __init__(self, kind: str, sigma: float | None = None, memo: bool = True):
        if kind not in ("frak_f", "frak_p", "frak_e"):
            raise ValueError(f"unknown limit function {kind!r}")
        if kind == "frak_f" and sigma is None:
            raise ValueError("frak_f needs sigma")
        self.kind = kind
        self.sigma = sigma
        self.memo: dict | None = {} if memo else None

    def _base_ready(self, mu: tuple) -> bool:
        if self.kind == "frak_e":
            return all(mu[i] >= mu[i + 1] for i in range(len(mu) - 1))
        return all(mu[i] <= mu[i + 1] for i in range(len(mu) - 1))

    def _descent(self, mu: tuple) -> int | None:
        if self.kind == "frak_e":
            return next((i for i in range(len(mu) - 1) if mu[i] < mu[i + 1]), None)
        return next((i for i in range(len(mu) - 1) if mu[i] > mu[i + 1]), None)

    def _base(self, mu: tuple, args: tuple):
        if self.kind == "frak_f":
            half = self.sigma / 2
            out = 1
            for m_i, u in zip(mu, args):
                out = out / (half - u) * ((half + u) / (half - u)) ** m_i
            return out
        if self.kind == "frak_p":
            out = 1
            for m_i, v in zip(mu, args):
                out = out * v ** (-(m_i + 1))
            return out
        acc = 0
        for m_i, w in zip(mu, args):
            acc = acc + m_i * w
        return np.exp(acc)

    def rainbow(self, mu: tuple, args: tuple):
        if self.memo is not None:
            try:
                return self.memo[(mu, args)]
            except (KeyError, TypeError):
                pass
        val = self._compute(mu, args)
        if self.memo is not None:
            try:
                self.memo[(mu, args)] = val
            except TypeError:
                pass
        return val

    def _compute(self, mu: tuple, args: tuple):
        i = self._descent(mu)
        if i is None:
            return self._base(mu, args)
        nu = mu[:i] + (mu[i + 1], mu[i]) + mu[i + 2 :]
        ui, ui1 = args[i], args[i + 1]
        swapped = args[:i] + (ui1, ui) + args[i + 2 :]
        here = self.rainbow(nu, args)
        there = self.rainbow(nu, swapped)
        d = ui - ui1
        return here - (d + 1) / d * (here - there)

    def coloured(self, parts: tuple, colouring: tuple[int, ...], args: tuple):
        total = None
        for pre in _generic_preimages(parts, colouring):
            v = self.rainbow(pre, args)
            total = v if total is None else total + v
        return total


def _generic_preimages(parts: tuple, colouring: tuple[int, ...]):
    """Rainbow preimages of a block composition with arbitrary part values."""
    blocks = []
    lo = 0
    for size in colouring:
        block = parts[lo : lo + size]
        if any(block[i] < block[i + 1] for i in range(len(block) - 1)):
            raise ValueError("blocks must be weakly decreasing")
        blocks.append(sorted(set(itertools.permutations(block))))
        lo += size
    for combo in itertools.product(*blocks):
        yield tuple(itertools.chain.from_iterable(combo))


def limit_function_eval(kind: str, parts: Sequence, colouring: Sequence[int],
                        args: Sequence, sigma: float | None = None,
                        session: LimitSession | None = None):
    """frak_f / frak_p / frak_e at the given argument tuple."""
    sess = session or LimitSession(kind, sigma)
    parts = tuple(parts)
    colouring = tuple(colouring)
    if colouring == (1,) * len(parts):
        return sess.rainbow(parts, tuple(args))
    return sess.coloured(parts, colouring, tuple(args))


# ---------------------------------------------------------------------------
# Polymer moment formulas (right-hand sides)
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class MomentRequest:
    """A coloured moment: entries (colour, position x, power m_i^(x)).

    Colours are the delay indices for the Beta and strict-weak polymers
    (integers >= 1) and the start times for the O'Connell-Yor polymer /
    the continuum polymer (reals).  Positions are the lattice positions /
    levels (integers >= 1; >= 2 where the formulas require it), and real
    endpoints for the continuum polymer.
    """

    t: float
    entries: tuple  # ((colour, x, power), ...)

    def sorted_entries(self):
        return sorted(self.entries, key=lambda e: (e[0], -e[1]))

    def blocks(self):
        """colours c_1 < ... < c_alpha with their counts and part lists."""
        colours = sorted({c for c, _, _ in self.entries})
        counts, parts = [], []
        for c in colours:
            block = []
            for cc, x, p in self.sorted_entries():
                if cc == c:
                    block.extend([x] * p)
            counts.append(len(block))
            parts.append(tuple(sorted(block, reverse=True)))
        return colours, counts, parts

    @property
    def m(self) -> int:
        return sum(p for _, _, p in self.entries)


def _beta_contours(sigma: float, m: int, family: str = "around_plus",
                   eps0: float = EPS0) -> NestedCircles:
    if family == "around_plus":
        radii = [eps0 + (m - k) * (1 + eps0) for k in range(1, m + 1)]
        if radii[0] >= sigma - eps0:
            raise ValueError(
                f"cannot nest {m} unit-spaced circles inside |u - sigma/2| < sigma: "
                f"increase sigma (= {sigma})"
            )
        return NestedCircles((complex(sigma / 2),) * m, tuple(radii), 1)
    radii = [eps0 + (k - 1) * (1 + eps0) for k in range(1, m + 1)]
    if radii[-1] >= sigma - eps0:
        raise ValueError(f"negatively oriented family infeasible at sigma={sigma}")
    return NestedCircles((complex(-sigma / 2),) * m, tuple(radii), -1)


def _zero_centered_growing(m: int, r0: float = 0.5, eps0: float = EPS0) -> NestedCircles:
    radii = tuple(r0 + (k - 1) * (1 + eps0) for k in range(1, m + 1))
    return NestedCircles((0j,) * m, radii, 1)


def polymer_moment_rhs(model: str, request: MomentRequest, *,
                       sigma: float | None = None, rho: float | None = None,
                       kappa: float | None = None, tol: float = 1e-9,
                       contour_family: str = "around_plus") -> tuple[float, float]:
    """Moment formula right-hand side for one of the polymer models.

    Returns (value, error_estimate); the imaginary part of the quadrature
    must vanish within tolerance and is folded into the error estimate.
    """
    colours, counts, parts = request.blocks()
    m = request.m
    t = request.t
    blocks_of = []
    for k, c in enumerate(counts):
        blocks_of.extend([k] * c)
    mu_parts = tuple(itertools.chain.from_iterable(parts))
    colouring = tuple(counts)

    if model == "beta":
        if sigma is None or rho is None or not sigma > rho > 0:
            raise ValueError("beta model needs sigma > rho > 0")
        if any(x < 2 for _, x, _ in request.entries):
            raise ValueError("beta moment positions must be >= 2")
        if t < max(colours):
            raise ValueError("need t >= every colour index")
        shifted = tuple(p - 1 for p in mu_parts)
        sess = LimitSession("frak_f", sigma, memo=False)
        sign = (-1) ** sum(mu_parts)

        def integrand(*U):
            out = 1
            for i in range(m):
                for j in range(i + 1, m):
                    out = out * (U[j] - U[i]) / (U[j] - U[i] + 1)
            p0 = 0
            for k, (c, mk) in enumerate(zip(colours, counts)):
                bracket = 0
                for jk in range(mk + 1):
                    term = (-1) ** jk / (math.factorial(jk) * math.factorial(mk - jk))
                    for tt in range(1, mk + 1):
                        p = p0 + tt - 1
                        X = (sigma / 2 - U[p] - rho) / (sigma / 2 - U[p])
                        expo = (t - c + 1) if tt <= jk else (t - c)
                        term = term * X**expo
                    bracket = bracket + term
                out = out * bracket
                p0 += mk
            neg = tuple(-u for u in U)
            return out * sess.coloured(shifted, colouring, neg) * sign

        circles = _beta_contours(sigma, m, contour_family)
        val, err = contour_quadrature(integrand, circles, tol)
        return _realize(val, err, tol)

    if model == "strict_weak":
        if kappa is None or kappa <= 0:
            raise ValueError("strict-weak model needs kappa > 0")
        if t < max(colours) + m - 1:
            raise ValueError("need t >= m + max colour - 1")
        shifted = tuple(p - 1 for p in mu_parts)
        sess = LimitSession("frak_p", memo=False)
        fact = 1.0
        for mk in counts:
            fact *= math.factorial(mk)

        def integrand(*V):
            out = 1
            for i in range(m):
                for j in range(i + 1, m):
                    out = out * (V[j] - V[i]) / (V[j] - V[i] - 1)
            p0 = 0
            for k, (c, mk) in enumerate(zip(colours, counts)):
                for tt in range(1, mk + 1):
                    p = p0 + tt - 1
                    out = out * (kappa + V[p]) ** (t - c)
                p0 += mk
            return out * sess.coloured(shifted, colouring, V) / fact

        circles = _zero_centered_growing(m)
        val, err = contour_quadrature(integrand, circles, tol)
        return _realize(val, err, tol)

    if model == "oy":
        # colours are real start times 0 <= s_1 < ... < s_alpha <= t
        if t < max(colours):
            raise ValueError("need t >= every start time")
        shifted = tuple(p - 1 for p in mu_parts)
        sess = LimitSession("frak_p", memo=False)
        fact = 1.0
        for mk in counts:
            fact *= math.factorial(mk)

        def integrand(*V):
            out = 1
            for i in range(m):
                for j in range(i + 1, m):
                    out = out * (V[j] - V[i]) / (V[j] - V[i] - 1)
            p0 = 0
            for k, (c, mk) in enumerate(zip(colours, counts)):
                acc = 0
                for tt in range(1, mk + 1):
                    acc = acc + V[p0 + tt - 1]
                out = out * np.exp((t - c) * acc)
                p0 += mk
            return out * sess.coloured(shifted, colouring, V) / fact

        circles = _zero_centered_growing(m)
        val, err = contour_quadrature(integrand, circles, tol)
        return _realize(val, err, tol)

    if model == "she":
        # colours are real start points, positions are real endpoints
        sess = LimitSession("frak_e", memo=False)
        fact = 1.0
        for mk in counts:
            fact *= math.factorial(mk)
        a0 = 0.0
        abscissas = tuple(a0 + k * (1 + EPS0) for k in range(m))
        a_max = max(abscissas)
        half = math.sqrt(max(2 * (math.log(1e4 / tol) / t + a_max**2), 1.0)) + 1
        lines = VerticalLines(abscissas, half)

        def integrand(*W):
            out = 1
            for i in range(m):
                for j in range(i + 1, m):
                    out = out * (W[j] - W[i]) / (W[j] - W[i] - 1)
            p0 = 0
            for k, (c, mk) in enumerate(zip(colours, counts)):
                acc = 0
                for tt in range(1, mk + 1):
                    acc = acc + W[p0 + tt - 1]
                out = out * np.exp(-c * acc)
                p0 += mk
            out = out * sess.coloured(mu_parts, colouring, W) / fact
            for w in W:
                out = out * np.exp(t * w**2 / 2)
            return out

        val, err = contour_quadrature(integrand, lines, tol)
        return _realize(val, err, tol)

    raise ValueError(f"unknown polymer model {model!r}")


def _realize(val: complex, err: float, tol: float) -> tuple[float, float]:
    if abs(val.imag) > 100 * max(tol, err) + 1e-12 * abs(val):
        raise RuntimeError(f"quadrature value {val} has a non-negligible imaginary part")
    return val.real, err + abs(val.imag)


# ---------------------------------------------------------------------------
# The fused corollary RHS
# ---------------------------------------------------------------------------


def fused_circles(config: FusedConfig, m: int, eps0: float = EPS0) -> NestedCircles:
    """Negatively oriented q-nested circles around s for the fused formula.

    q-dilation moves circle centers, so radii absorb the (1-q)|s| drift:
    r_1 = eps0, r_{k+1} = (1-q)|s| + q r_k + eps0.
    """
    q = float(config.q)
    s = math.sqrt(float(config.s_sq))
    radii = [eps0 * s]
    for _ in range(m - 1):
        radii.append((1 - q) * s + q * radii[-1] + eps0 * s)
    spec = NestedCircles((complex(s),) * m, tuple(radii), -1)
    spec.validate(poles_inside=[complex(s)], poles_outside=[complex(1 / s)])
    return spec


def fused_moment_rhs(config: FusedConfig, spec: ObservableSpec, n_rows: int,
                     tol: float = 1e-9) -> tuple[float, float]:
    """RHS of the fused-model moment formula by nested-circle quadrature."""
    q = float(config.q)
    s = math.sqrt(float(config.s_sq))
    zsq = float(config.z_sq)
    lam = tuple(config.colouring)
    if any(p < 2 for p in spec.mu.parts):
        raise ValueError("fused observable needs parts >= 2")
    m = spec.length
    counts = spec.colour_counts
    colours = spec.colours
    ell = [0]
    for size in lam:
        ell.append(ell[-1] + size)
    n = n_rows
    params_f = ModelParams.make(q, s, ())
    mu_shift = spec.mu.shift(-1)
    sess = FSession(params_f, memo=False)
    qq = [float(q_pochhammer(q, q, k)) for k in range(max(counts) + 1)]
    pref = complex(_moment_prefactor(spec, ModelParams.make(q, s, ()), min_col=2))
    pref = pref * (-s) ** m

    def integrand(*Y):
        out = 1
        for i in range(m):
            for j in range(i + 1, m):
                out = out * (Y[j] - Y[i]) / (Y[j] - q * Y[i])
        p0 = 0
        for k, (colour, mk) in enumerate(zip(colours, counts)):
            bracket = 0
            for jk in range(mk + 1):
                term = (-1) ** jk * q ** ((mk - jk) * (mk - jk - 1) // 2)
                term = term / (qq[jk] * qq[mk - jk])
                for tt in range(1, mk + 1):
                    p = p0 + tt - 1
                    X = (1 - s * Y[p] / zsq) / (1 - s * Y[p])
                    expo = (n - ell[colour - 1]) if tt <= jk else (n - ell[colour])
                    term = term * X**expo
                bracket = bracket + term
            out = out * bracket
            p0 += mk
        args = tuple(1 / y for y in Y)
        fval = f_eval(mu_shift, EvaluationPoint(args, params_f), "plain", sess)
        fval = fval * (-s) ** (spec.mu.weight - m)
        out = out * fval
        for y in Y:
            out = out / y**2
        return out

    circles = fused_circles(config, m)
    val, err = contour_quadrature(integrand, circles, tol)
    total = pref * val
    if abs(total.imag) > 100 * max(tol, err) + 1e-12 * abs(total):
        raise RuntimeError(f"fused quadrature value {total} not real")
    return total.real, err + abs(total.imag)


# ---------------------------------------------------------------------------
# Limit scans
# ---------------------------------------------------------------------------


@dataclass
class ScanReport:
    source: str
    points: list  # (parameter, error or value)
    ratios: list
    monotone: bool

    def as_dict(self) -> dict:
        return {
            "source": self.source,
            "points": [(str(p), float(e)) for p, e in self.points],
            "ratios": [float(r) for r in self.ratios],
            "monotone": self.monotone,
        }


def limit_scan(source: str, schedule: Sequence, **kwargs) -> ScanReport:
    """Tabulate convergence of one of the limit statements over a schedule."""
    if source == "f_to_frakf":
        return _scan_f_to_frakf(schedule, **kwargs)
    if source == "frakp_from_frakf":
        return _scan_frakp(schedule, **kwargs)
    if source == "frake_from_frakp":
        return _scan_frake(schedule, **kwargs)
    if source == "oy_to_she":
        return _scan_oy_to_she(schedule, **kwargs)
    raise ValueError(f"unknown scan source {source!r}")


def _finish_scan(source: str, pts: list) -> ScanReport:
    errs = [e for _, e in pts]
    ratios = [b / a for a, b in zip(errs, errs[1:]) if a > 0]
    monotone = all(b < a for a, b in zip(errs, errs[1:]))
    return ScanReport(source, pts, ratios, monotone)


def _scan_f_to_frakf(schedule, *, mu: ColouredComposition, sigma: float,
                     us: Sequence[complex]) -> ScanReport:
    sess_lim = LimitSession("frak_f", sigma)
    target = limit_function_eval("frak_f", mu.parts, mu.colouring, us,
                                 sigma=sigma, session=sess_lim)
    pts = []
    m = mu.length
    for eps in schedule:
        q = math.exp(-eps)
        s = q ** (sigma / 2)
        params = ModelParams.make(q, s, ())
        args = tuple(1 + eps * u for u in us)
        fval = f_eval(mu, EvaluationPoint(args, params), "plain",
                      FSession(params, memo=False))
        norm = 1.0
        for tot in _column_totals(mu).values():
            norm *= float(q_pochhammer(s * s, q, tot))
        scaled = eps**m * fval / norm
        pts.append((eps, abs(scaled - target)))
    return _finish_scan("f_to_frakf", pts)


def _column_totals(mu: ColouredComposition) -> dict[int, int]:
    out: dict[int, int] = {}
    for p in mu.parts:
        out[p] = out.get(p, 0) + 1
    return out


def _scan_frakp(schedule, *, mu: ColouredComposition, vs: Sequence[complex]) -> ScanReport:
    sess_p = LimitSession("frak_p")
    target = limit_function_eval("frak_p", mu.parts, mu.colouring, vs, session=sess_p)
    m = mu.length
    pts = []
    for sigma in schedule:
        sess_f = LimitSession("frak_f", sigma)
        args = tuple(sigma / 2 + v for v in vs)
        fval = limit_function_eval("frak_f", mu.parts, mu.colouring, args,
                                   sigma=sigma, session=sess_f)
        scaled = (-1) ** (mu.weight + m) * sigma ** (-mu.weight) * fval
        pts.append((sigma, abs(scaled - target)))
    return _finish_scan("frakp_from_frakf", pts)


def _stable_p_dominant(mu_parts: Sequence[int], t: float, sqrt_l: float,
                       ws: Sequence):
    """e^{t sqrt(L) sum w} L^{|mu|/2} frak_p_{mu - 1^m}(sqrt(L) + w), stably.

    Only for anti-dominant mu, where frak_p factorizes into prod v^{-mu_r};
    each variable contributes exp(t sqrt(L) w - mu_r log1p(w / sqrt(L))),
    an O(1) quantity even though the factors separately under/overflow.
    """
    out = 1
    for m_r, w in zip(mu_parts, ws):
        out = out * np.exp(t * sqrt_l * w - m_r * np.log1p(w / sqrt_l))
    return out


def _scan_frake(schedule, *, kappa: Sequence[float], t: float,
                ws: Sequence[complex]) -> ScanReport:
    if any(kappa[i] < kappa[i + 1] for i in range(len(kappa) - 1)):
        raise ValueError("scan requires dominant kappa (stable factorized path)")
    m = len(kappa)
    sess_e = LimitSession("frak_e")
    target = sess_e.rainbow(tuple(kappa), tuple(ws))
    for w in ws:
        target = target * np.exp(t * w**2 / 2)
    pts = []
    for L in schedule:
        sqrt_l = math.sqrt(L)
        mu = tuple(int(round(t * L - k * sqrt_l)) for k in kappa)
        if any(mu[i] > mu[i + 1] for i in range(len(mu) - 1)):
            raise ValueError("rounded mu not anti-dominant; adjust kappa spacing")
        ex = _stable_p_dominant(mu, t, sqrt_l, ws)
        pts.append((L, abs(ex - target)))
    return _finish_scan("frake_from_frakp", pts)


def _scan_oy_to_she(schedule, *, request: MomentRequest, tol: float = 1e-7) -> ScanReport:
    """Scaled OY RHS (w-line quadrature) against the SHE RHS.

    The request holds real start times as colours and real endpoints as
    positions; at each L the OY formula is evaluated with levels
    round(tL - x sqrt(L)) through the stable change of variables
    v = sqrt(L) + w, after dividing out the exact exponential normalizer.
    """
    she_val, she_err = polymer_moment_rhs("she", request, tol=tol)
    colours, counts, parts = request.blocks()
    t = request.t
    m = request.m
    kappa = tuple(itertools.chain.from_iterable(parts))
    colouring = tuple(counts)
    if any(kappa[i] < kappa[i + 1] for i in range(len(kappa) - 1)):
        raise ValueError("oy_to_she scan requires dominant endpoint tuple")
    fact = 1.0
    for mk in counts:
        fact *= math.factorial(mk)
    pts = []
    for L in schedule:
        sqrt_l = math.sqrt(L)
        mu = tuple(int(round(t * L - k * sqrt_l)) for k in kappa)

        def integrand(*W):
            out = 1
            for i in range(m):
                for j in range(i + 1, m):
                    out = out * (W[j] - W[i]) / (W[j] - W[i] - 1)
            p0 = 0
            for k, (c, mk) in enumerate(zip(colours, counts)):
                acc = 0
                for tt in range(1, mk + 1):
                    acc = acc + W[p0 + tt - 1]
                out = out * np.exp(-c * acc)
                p0 += mk
            return out * _stable_p_dominant(mu, t, sqrt_l, W) / fact

        abscissas = tuple(k * (1 + EPS0) for k in range(m))
        a_max = max(abscissas)
        half = math.sqrt(max(2 * (math.log(1e4 / tol) / t + a_max**2), 1.0)) + 1
        lines = VerticalLines(abscissas, half)
        val, err = contour_quadrature(integrand, lines, tol)
        pts.append((L, abs(val.real - she_val)))
    report = _finish_scan("oy_to_she", pts)
    report.points.append(("she", she_val))
    return report
