"""Spin nonsymmetric Hall-Littlewood functions and their Cauchy identities.

Two independent routes to every function:

* `f_lattice` / `g_lattice` / `g_skew_lattice` sum lattice partition
  functions by brute-force dynamic programming over column transfers
  (the defining pictures, with L- resp. M-weights);
* `f_eval` runs the exchange recursion off the factorized anti-dominant
  base case, `g_star_eval` reaches g through the f <-> g parameter flip,
  and `cal_g` is the closed principal-specialization limit of the skew
  function.

The `verify_cauchy` suites sum the identities over truncated composition
ranges with a geometric tail estimate.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

from vertexlab.compositions import (
    ColouredComposition,
    all_coloured_compositions,
    heights,
    preimages_of,
    rainbow,
)
from vertexlab.qkit import q_binomial, q_pochhammer
from vertexlab.weights import ModelParams, l_weight, m_weight, unit, vec_add, vec_sub


@dataclass(frozen=True)
class EvaluationPoint:
    """Argument tuple plus model parameters (q, s, column data)."""

    args: tuple
    params: ModelParams

    @property
    def n(self) -> int:
        return len(self.args)


def point(args: Sequence, params: ModelParams) -> EvaluationPoint:
    return EvaluationPoint(tuple(args), params)


# ---------------------------------------------------------------------------
# Lattice oracles
# ---------------------------------------------------------------------------


def _top_data(mu: ColouredComposition, x_max: int) -> list[tuple[int, ...]]:
    """A(k) per column k: counts of colour-c parts of mu equal to k."""
    n_col = mu.n_colours
    table = [[0] * n_col for _ in range(x_max + 1)]
    for idx, p in enumerate(mu.parts):
        table[p][mu.colour_of(idx) - 1] += 1
    return [tuple(row) for row in table]


def _row_colours(lam: Sequence[int]) -> tuple[int, ...]:
    out: list[int] = []
    for colour, size in enumerate(lam, start=1):
        out.extend([colour] * size)
    return tuple(out)


class _ColumnTransfer:
    """Lazy transfer tensor of one lattice column.

    For a horizontal in-state (one colour label per row, bottom to top)
    enumerate every way the column can route paths, recording the top
    output vector, the horizontal out-state, and the exact weight.
    """

    def __init__(self, point_: EvaluationPoint, s_col, xi_col, n_colours: int,
                 family: str, bottom: tuple[int, ...] | None = None) -> None:
        self.point = point_
        self.s_col = s_col
        self.xi_col = xi_col
        self.n_colours = n_colours
        self.family = family  # "L", "L_stoch" or "M"
        self.bottom = bottom if bottom is not None else (0,) * n_colours
        self._memo: dict[tuple[int, ...], list] = {}

    def _vertex(self, row: int, I, j, K, l):
        p = self.point.params
        x = self.point.args[row - 1]
        s_col, xi = self.s_col, self.xi_col
        if self.family == "L":
            return l_weight(x * xi, s_col, p.q, I, j, K, l)
        if self.family == "L_stoch":
            w = l_weight(x * xi, s_col, p.q, I, j, K, l)
            return w * (-s_col) if l >= 1 else w
        return m_weight(x / xi, s_col, p.q, I, j, K, l)

    def expand(self, h_in: tuple[int, ...]) -> list[tuple[tuple[int, ...], tuple[int, ...], object]]:
        """[(top_vector, h_out, weight)] over all routings of this column."""
        try:
            return self._memo[h_in]
        except KeyError:
            pass
        q = self.point.params.q
        n_rows = len(h_in)
        out: list = []

        def walk(row: int, vertical: tuple[int, ...], h_out: tuple[int, ...], acc):
            if row > n_rows:
                out.append((vertical, h_out, acc))
                return
            j = h_in[row - 1]
            candidates = {j}
            if j >= 1:
                candidates.add(0)
            candidates.update(
                c for c in range(1, self.n_colours + 1) if vertical[c - 1] >= 1
            )
            for l in candidates:
                K = vec_add(vertical, vec_sub(unit(self.n_colours, j), unit(self.n_colours, l)))
                if min(K, default=0) < 0:
                    continue
                w = self._vertex(row, vertical, j, K, l)
                if w == 0:
                    continue
                walk(row + 1, K, h_out + (l,), acc * w)

        walk(1, self.bottom, (), q * 0 + 1)
        self._memo[h_in] = out
        return out


def _lattice_sum(point_: EvaluationPoint, family: str, columns: range,
                 start: tuple[int, ...], end: tuple[int, ...],
                 tops: Sequence[tuple[int, ...]],
                 bottoms: Sequence[tuple[int, ...]] | None,
                 n_colours: int):
    """Sweep the columns in the given order, pinning boundary data."""
    q = point_.params.q
    transfers: dict[tuple, _ColumnTransfer] = {}
    states = {start: q * 0 + 1}
    for idx, col in enumerate(columns):
        p = point_.params
        bottom = bottoms[idx] if bottoms is not None else None
        key = (p.s_at(col), p.xi_at(col), bottom)
        if key not in transfers:
            transfers[key] = _ColumnTransfer(
                point_, p.s_at(col), p.xi_at(col), n_colours, family, bottom
            )
        transfer = transfers[key]
        target_top = tops[idx]
        new_states: dict[tuple[int, ...], object] = {}
        for h_in, acc in states.items():
            for top, h_out, w in transfer.expand(h_in):
                if top != target_top:
                    continue
                prev = new_states.get(h_out)
                new_states[h_out] = acc * w if prev is None else prev + acc * w
        states = new_states
        if not states:
            return q * 0
    return states.get(end, q * 0)


def f_lattice(mu: ColouredComposition, point_: EvaluationPoint,
              x_max: int | None = None, stoch: bool = False):
    """f_mu as the quadrant-slice partition function (brute force).

    Rows 1..n carry rapidities x_1..x_n and left-entering colours per the
    colouring of mu; the top boundary pins the parts of mu over columns
    0..x_max; nothing exits right of x_max because the top pins all paths.
    """
    if point_.n != mu.length:
        raise ValueError("need one argument per part of mu")
    if mu.length == 0:
        return point_.params.q * 0 + 1
    if x_max is None:
        x_max = max(mu.parts)
    if x_max < max(mu.parts):
        raise ValueError("x_max smaller than the largest part")
    tops = _top_data(mu, x_max)
    start = _row_colours(mu.colouring)
    end = (0,) * mu.length
    fam = "L_stoch" if stoch else "L"
    return _lattice_sum(point_, fam, range(0, x_max + 1), start, end, tops,
                        None, mu.n_colours)


def g_lattice(mu: ColouredComposition, point_: EvaluationPoint,
              x_max: int | None = None):
    """Dual function g_mu: M-weight lattice with mu entering from the bottom.

    Horizontal flow is leftward: the sweep runs from the far right (empty)
    down to column 0, after which row r must emit its own colour.
    """
    if point_.n != mu.length:
        raise ValueError("need one argument per part of mu")
    if mu.length == 0:
        return point_.params.q * 0 + 1
    if x_max is None:
        x_max = max(mu.parts)
    bottoms = _top_data(mu, x_max)
    start = (0,) * mu.length
    end = _row_colours(mu.colouring)
    zero_top = (0,) * mu.n_colours
    cols = range(x_max, -1, -1)
    tops = [zero_top] * (x_max + 1)
    bots = [bottoms[c] for c in cols]
    return _lattice_sum(point_, "M", cols, start, end, tops, bots, mu.n_colours)


def big_g_lattice(bottom: ColouredComposition, top: ColouredComposition,
                  ys: Sequence, params: ModelParams, x_max: int | None = None):
    """Skew function G_{bottom/top}(y_1..y_p): p-row M-weight lattice.

    Paths enter from below in configuration `bottom`, exit on top in
    configuration `top`, and nothing crosses the side boundaries.  p = 0
    degenerates to the indicator of bottom == top.
    """
    if bottom.colouring != top.colouring:
        raise ValueError("skew G needs a common colouring")
    p = len(ys)
    if p == 0:
        return params.q * 0 + (1 if bottom == top else 0)
    if x_max is None:
        x_max = max((*bottom.parts, *top.parts), default=0)
    pt = EvaluationPoint(tuple(ys), params)
    bot_data = _top_data(bottom, x_max)
    top_data = _top_data(top, x_max)
    zeros = (0,) * p
    cols = range(x_max, -1, -1)
    tops = [top_data[c] for c in cols]
    bots = [bot_data[c] for c in cols]
    return _lattice_sum(pt, "M", cols, zeros, zeros, tops, bots, bottom.n_colours)


# ---------------------------------------------------------------------------
# Exchange-recursion evaluation
# ---------------------------------------------------------------------------


def f_base_antidominant(delta: Sequence[int], args: Sequence, params: ModelParams):
    """Factorized anti-dominant rainbow value (column-inhomogeneous form)."""
    q = params.q
    out = q * 0 + 1
    mults: dict[int, int] = {}
    for d in delta:
        mults[d] = mults.get(d, 0) + 1
    for j, m in mults.items():
        sj = params.s_at(j)
        out = out * q_pochhammer(sj * sj, q, m)
    for d, x in zip(delta, args):
        s_d = params.s_at(d)
        xi_d = params.xi_at(d)
        out = out / (1 - s_d * xi_d * x)
        for j in range(d):
            sj, xj = params.s_at(j), params.xi_at(j)
            out = out * (xj * x - sj) / (1 - sj * xj * x)
    return out


class FSession:
    """Memoized exchange-recursion evaluator for the rainbow functions.

    Off the anti-dominant base case, a descent mu_i > mu_{i+1} is unwound
    through the Demazure-Lusztig step

        f_mu(x) = q f_nu(x)
                  - (x_i - q x_{i+1}) / (x_i - x_{i+1}) (f_nu(x) - f_nu(s_i x))

    with nu = mu with slots i, i+1 swapped.  Values at swapped argument
    tuples are shared through the memo, which keeps the recursion to a
    desk-scale number of distinct states.
    """

    def __init__(self, params: ModelParams, memo: bool = True) -> None:
        self.params = params
        self.memo: dict | None = {} if memo else None

    def rainbow_f(self, mu: tuple[int, ...], args: tuple):
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

    def _compute(self, mu: tuple[int, ...], args: tuple):
        i = next((k for k in range(len(mu) - 1) if mu[k] > mu[k + 1]), None)
        if i is None:
            return f_base_antidominant(mu, args, self.params)
        nu = mu[:i] + (mu[i + 1], mu[i]) + mu[i + 2 :]
        xi, xi1 = args[i], args[i + 1]
        if xi == xi1:
            raise ZeroDivisionError(
                f"exchange step needs distinct arguments in slots {i}, {i + 1}"
            )
        swapped = args[:i] + (xi1, xi) + args[i + 2 :]
        q = self.params.q
        f_here = self.rainbow_f(nu, args)
        f_swap = self.rainbow_f(nu, swapped)
        return q * f_here - (xi - q * xi1) / (xi - xi1) * (f_here - f_swap)


def f_eval(mu: ColouredComposition, point_: EvaluationPoint,
           variant: str = "plain", session: FSession | None = None):
    """f_mu(lambda; x_1..x_m) by exchange recursion (+ preimage sums).

    variant "stoch" multiplies by (-s)^{|mu|}, or by the per-part column
    products when column inhomogeneities are present.
    """
    if point_.n != mu.length:
        raise ValueError("need one argument per part of mu")
    sess = session or FSession(point_.params)
    if mu.is_rainbow:
        val = sess.rainbow_f(mu.parts, point_.args)
    else:
        total = point_.params.q * 0
        for pre in preimages_of(mu):
            total = total + sess.rainbow_f(pre.parts, point_.args)
        val = total
    if variant == "plain":
        return val
    if variant == "stoch":
        return val * stoch_factor(mu, point_.params)
    raise ValueError(f"unknown variant {variant!r}")


def stoch_factor(mu: ColouredComposition, params: ModelParams):
    """(-s)^{|mu|}, or prod_i prod_{j < mu_i} (-s_j) with column data."""
    out = params.q * 0 + 1
    for p in mu.parts:
        for j in range(p):
            out = out * (-params.s_at(j))
    return out


def apply_exchange(fn, i: int, q):
    """Pointwise Demazure-Lusztig operator T_i acting on arg-tuple functions."""

    def acted(args: tuple):
        xi, xi1 = args[i], args[i + 1]
        swapped = args[:i] + (xi1, xi) + args[i + 2 :]
        return q * fn(args) - (xi - q * xi1) / (xi - xi1) * (fn(args) - fn(swapped))

    return acted


def c_mu(mu: Sequence[int], q, s):
    """Proportionality constant of the f <-> g relation."""
    n = len(mu)
    inv = sum(
        1 for i in range(n) for j in range(i + 1, n) if mu[i] <= mu[j]
    )
    mults: dict[int, int] = {}
    for p in mu:
        mults[p] = mults.get(p, 0) + 1
    den = q * 0 + 1
    for m in mults.values():
        den = den * q_pochhammer(s * s, q, m)
    return s**n * (q - 1) ** n * q**inv / den


def g_star_eval(mu: ColouredComposition, point_: EvaluationPoint,
                session: FSession | None = None):
    """g*_mu(y) through the reflection identity

        g_mu(y; q, s) = c_{mu~}(1/q, 1/s) prod y_i^{-1}
                        * f_{mu~}(y_n^{-1}..y_1^{-1}; 1/q, 1/s),

    then rescaled by q^{n(n+1)/2} (q-1)^{-n}.  Rainbow labels only; the
    lattice route `g_lattice` stays available as the independent oracle.
    """
    if not mu.is_rainbow:
        raise ValueError("the f<->g relation is stated for rainbow labels")
    if any(a == 0 for a in point_.args):
        raise ValueError("g* needs nonzero arguments")
    params = point_.params
    inv_params = params.inverted()
    n = mu.length
    mu_rev = tuple(reversed(mu.parts))
    args_rev_inv = tuple(1 / a for a in reversed(point_.args))
    sess = session or FSession(inv_params)
    f_val = sess.rainbow_f(mu_rev, args_rev_inv)
    q, s = params.q, params.s
    g_val = c_mu(mu_rev, 1 / q, 1 / s) * f_val
    for a in point_.args:
        g_val = g_val / a
    return q ** (n * (n + 1) // 2) * (q - 1) ** (-n) * g_val


# ---------------------------------------------------------------------------
# The principal specialization limit of G
# ---------------------------------------------------------------------------


def cal_g(nu: ColouredComposition, mu: ColouredComposition, params: ModelParams):
    """Closed form of the principal-specialization skew limit cal-G_{nu/mu}.

    Vanishes unless every part of nu is nonzero; otherwise

        prod_i prod_{j=mu_i}^{nu_i - 1} (-s_j)
        * s^{-2n} prod_{x >= 0} [ (s^2;q)_{|m^(x)|} q^{-sum_{i>j} m_i m_j}
              prod_i q^{m_i^(x) H_{>i}^{nu/mu}(x+1)}
                     binom(H_i^{nu/mu}(x+1), m_i^(x))_q ]

    with m^(x) the colour multiplicities of mu at value x.  Columns where mu
    has a part must carry default parameters (s, 1).
    """
    if nu.colouring != mu.colouring:
        raise ValueError("cal_g needs a common colouring")
    q, s = params.q, params.s
    if any(p == 0 for p in nu.parts):
        return q * 0
    for x in set(mu.parts):
        if not params.column_default(x):
            raise ValueError(f"column {x} holds parts of mu but is inhomogeneous")
    n = nu.length
    h_nu, h_mu = heights(nu), heights(mu)
    out = s ** (-2 * n)
    n_col = mu.n_colours
    m_at: dict[int, list[int]] = {}
    for idx, p in enumerate(mu.parts):
        m_at.setdefault(p, [0] * n_col)[mu.colour_of(idx) - 1] += 1
    for x, m_vec in m_at.items():
        tot = sum(m_vec)
        cross = sum(
            m_vec[i] * m_vec[j] for i in range(n_col) for j in range(i) if m_vec[i]
        )
        out = out * q_pochhammer(s * s, q, tot) * q ** (-cross)
        for i in range(1, n_col + 1):
            m = m_vec[i - 1]
            if m == 0:
                continue
            dh = h_nu.h(i, x + 1) - h_mu.h(i, x + 1)
            dh_gt = h_nu.h_gt(i, x + 1) - h_mu.h_gt(i, x + 1)
            out = out * q ** (m * dh_gt) * q_binomial(dh, m, q)
            if out == 0:
                return out
    pref = q * 0 + 1
    for i in range(n):
        for j in range(mu.parts[i], nu.parts[i]):
            pref = pref * (-params.s_at(j))
    return pref * out


def cal_g_rainbow(nu: ColouredComposition, mu: ColouredComposition, params: ModelParams):
    """Rainbow shortcut: indicator form of the same limit."""
    if not (nu.is_rainbow and mu.is_rainbow):
        raise ValueError("rainbow branch needs rainbow labels")
    q, s = params.q, params.s
    if any(p == 0 for p in nu.parts):
        return q * 0
    n = nu.length
    h_nu, h_mu = heights(nu), heights(mu)
    out = s ** (-2 * n)
    m_at: dict[int, list[int]] = {}
    for idx, p in enumerate(mu.parts):
        m_at.setdefault(p, []).append(idx + 1)
    for x, colours_here in m_at.items():
        tot = len(colours_here)
        out = out * q_pochhammer(s * s, q, tot) * q ** (-(tot * (tot - 1) // 2))
        for i in colours_here:
            if h_nu.h(i, x + 1) - h_mu.h(i, x + 1) != 1:
                return q * 0
            out = out * q ** (h_nu.h_gt(i, x + 1) - h_mu.h_gt(i, x + 1))
    pref = q * 0 + 1
    for i in range(n):
        for j in range(mu.parts[i], nu.parts[i]):
            pref = pref * (-params.s_at(j))
    return pref * out


# ---------------------------------------------------------------------------
# Cauchy identity verification
# ---------------------------------------------------------------------------


@dataclass
class CauchyReport:
    kind: str
    passed: bool
    lhs: object
    rhs: object
    abs_diff: float
    tail_bound: float
    slack: float
    terms: int
    shells: list[float]

    def as_dict(self) -> dict:
        return {
            "kind": self.kind,
            "passed": self.passed,
            "lhs": str(self.lhs),
            "rhs": str(self.rhs),
            "abs_diff": self.abs_diff,
            "tail_bound": self.tail_bound,
            "slack": self.slack,
            "terms": self.terms,
        }


def _geometric_tail(shells: list, rho: float, safety: float = 4.0) -> float:
    """Tail estimate past the last shell: geometric with observed ratio.

    Uses the worse of the theoretical per-part ratio and the observed
    shell-to-shell decay, times a safety factor.
    """
    mags = [float(abs(s)) for s in shells]
    ratios = [
        b / a for a, b in zip(mags[-4:-1], mags[-3:]) if a > 0
    ]
    rho_hat = max([rho, *ratios]) if ratios else rho
    if rho_hat >= 1:
        raise ValueError(f"observed shell ratio {rho_hat} is not contracting")
    last = mags[-1] if mags else 0.0
    return safety * last * rho_hat / (1 - rho_hat)


def _ratio_r(z, s):
    return (z - s) / (1 - s * z)


def verify_cauchy(kind: str, params: ModelParams, x_cut: int,
                  ys: Sequence | None = None,
                  mu: ColouredComposition | None = None,
                  lam: Sequence[int] | None = None,
                  slack: float = 1e-10) -> CauchyReport:
    """Verify one of the summation identities by truncated exact summation.

    kinds: "mimachi" (f against g* over all compositions), "skew_principal"
    (f against cal-G, rainbow), "merged" (same with a coloured colouring),
    "normalization" (the measure sums to one).  The identity must hold up
    to the geometric tail estimate plus `slack`.
    """
    q, s = params.q, params.s
    xs = params.xs
    n = len(xs)
    sess = FSession(params)
    if kind == "mimachi":
        if ys is None or len(ys) != n:
            raise ValueError("mimachi needs ys of the same length as xs")
        rho = max(
            float(abs(_ratio_r(x, s) * _ratio_r(y, s))) for x in xs for y in ys
        )
        if rho >= 1:
            raise ValueError(f"convergence condition violated: ratio {rho} >= 1")
        inv_sess = FSession(params.inverted())
        shells = []
        lhs = q * 0
        terms = 0
        for k in range(0, x_cut + 1):
            shell = q * 0
            shell_abs = Fraction(0)
            for parts in itertools.product(range(k + 1), repeat=n):
                if max(parts, default=0) != k and k > 0:
                    continue
                if k == 0 and any(parts):
                    continue
                mu_r = rainbow(parts)
                term = sess.rainbow_f(mu_r.parts, xs) * g_star_eval(
                    mu_r, EvaluationPoint(tuple(ys), params), session=inv_sess
                )
                shell = shell + term
                shell_abs += abs(term)
                terms += 1
            lhs = lhs + shell
            shells.append(shell_abs)
        rhs = q * 0 + 1
        for i in range(n):
            rhs = rhs / (1 - xs[i] * ys[i])
        for i in range(n):
            for j in range(i):
                rhs = rhs * (1 - q * xs[i] * ys[j]) / (1 - xs[i] * ys[j])
        tail = _geometric_tail(shells, rho)
    elif kind in ("skew_principal", "merged", "normalization"):
        rho = max(float(abs(s * _ratio_r(x, s))) for x in xs)
        if rho >= 1:
            raise ValueError(f"convergence condition violated: ratio {rho} >= 1")
        if kind == "normalization":
            lam_ = tuple(lam) if lam is not None else (1,) * n
            pref = q * 0 + 1
            for x in xs:
                pref = pref * (1 - s * x) / (s * (s - x))
            shells = []
            lhs = q * 0
            terms = 0
            for k in range(1, x_cut + 1):
                shell = q * 0
                shell_abs = Fraction(0)
                for nu in all_coloured_compositions(lam_, k, 1):
                    if max(nu.parts) != k:
                        continue
                    term = f_eval(nu, EvaluationPoint(xs, params), "stoch", sess)
                    shell = shell + term
                    shell_abs += abs(term)
                    terms += 1
                lhs = lhs + shell
                shells.append(shell_abs)
            lhs = pref * lhs
            rhs = q * 0 + 1
            tail = float(abs(pref)) * _geometric_tail(shells, rho)
        else:
            if mu is None:
                raise ValueError(f"{kind} needs the composition mu")
            if kind == "skew_principal" and not mu.is_rainbow:
                raise ValueError("skew_principal is the rainbow branch")
            lam_ = mu.colouring
            shells = []
            lhs = q * 0
            terms = 0
            for k in range(1, x_cut + 1):
                shell = q * 0
                shell_abs = Fraction(0)
                for nu in all_coloured_compositions(lam_, k, 1):
                    if max(nu.parts) != k:
                        continue
                    gval = cal_g(nu, mu, params)
                    if gval == 0:
                        continue
                    term = f_eval(nu, EvaluationPoint(xs, params), "plain", sess) * gval
                    shell = shell + term
                    shell_abs += abs(term)
                    terms += 1
                lhs = lhs + shell
                shells.append(shell_abs)
            rhs = f_eval(mu, EvaluationPoint(xs, params), "plain", sess)
            for x in xs:
                rhs = rhs * (1 - x / s)
            tail = _geometric_tail(shells, rho)
    else:
        raise ValueError(f"unknown Cauchy kind {kind!r}")
    diff = float(abs(lhs - rhs))
    return CauchyReport(kind, diff <= tail + slack, lhs, rhs, diff, tail,
                        slack, terms, [float(x) for x in shells])
