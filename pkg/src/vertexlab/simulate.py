"""Samplers and the exact expectation engine for the quadrant models.

The unfused model runs on signed local distributions in general, so its
default verification path is `exact_expectation`: a dynamic program over
rows whose state is the coloured occupation of the tracked columns plus a
right-exit ledger.  The samplers validate every local distribution before
drawing and abort on a negative weight.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from vertexlab.compositions import ColouredComposition, ObservableSpec, observable_value
from vertexlab.weights import (
    FusedConfig,
    ModelParams,
    boundary_tail_masses,
    fused_bulk_weight,
    l_weight_stoch,
    unit,
    vec_add,
    vec_sub,
)


# ---------------------------------------------------------------------------
# RNG streams
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class RngStream:
    """Counter-based RNG stream: (seed, index) fully determines all draws."""

    seed: int
    stream: int = 0

    def generator(self) -> np.random.Generator:
        key = np.array([self.seed % 2**64, self.stream % 2**64], dtype=np.uint64)
        return np.random.Generator(np.random.Philox(key=key))

    def child(self, stream: int) -> "RngStream":
        return RngStream(self.seed, stream)


# ---------------------------------------------------------------------------
# Samples
# ---------------------------------------------------------------------------


@dataclass
class QuadrantSample:
    """Exit record of one simulated quadrant strip.

    `counts[(colour, column)]` holds the paths of that colour crossing up
    between rows n and n+1 at that column; `beyond[colour-1]` counts paths
    that left the tracked strip to the right (their column exceeds x_max,
    which is all the height functions at arguments <= x_max + 1 need).
    """

    colouring: tuple[int, ...]
    x_max: int
    min_column: int
    counts: dict
    beyond: tuple[int, ...]
    seed: tuple[int, int]

    def h(self, colour: int, x: int) -> int:
        if x > self.x_max + 1:
            raise ValueError(f"height argument {x} beyond tracked range")
        total = self.beyond[colour - 1] if 1 <= colour <= len(self.beyond) else 0
        for (c, col), k in self.counts.items():
            if c == colour and col >= x:
                total += k
        return total

    def h_gt(self, colour: int, x: int) -> int:
        return sum(self.h(c, x) for c in range(colour + 1, len(self.colouring) + 1))

    def h_ge(self, colour: int, x: int) -> int:
        return sum(self.h(c, x) for c in range(colour, len(self.colouring) + 1))

    def nu(self) -> ColouredComposition:
        """Exit positions as a coloured composition; beyond-strip paths are
        reported at the sentinel coordinate x_max + 1."""
        n_col = len(self.colouring)
        blocks: list[list[int]] = [[] for _ in range(n_col)]
        for (c, col), k in self.counts.items():
            blocks[c - 1].extend([col] * k)
        for c, k in enumerate(self.beyond, start=1):
            blocks[c - 1].extend([self.x_max + 1] * k)
        parts = tuple(
            itertools.chain.from_iterable(sorted(b, reverse=True) for b in blocks)
        )
        return ColouredComposition(parts, tuple(len(b) for b in blocks))

    def check_conservation(self) -> None:
        for colour, lam_c in enumerate(self.colouring, start=1):
            got = self.beyond[colour - 1] + sum(
                k for (c, _), k in self.counts.items() if c == colour
            )
            if got != lam_c:
                raise AssertionError(
                    f"colour {colour}: {got} exits recorded, expected {lam_c}"
                )


def _row_colours(lam) -> list[int]:
    out: list[int] = []
    for colour, size in enumerate(lam, start=1):
        out.extend([colour] * size)
    return out


def _draw_indexed(masses, rng: np.random.Generator) -> int:
    """Inverse-CDF draw over exact masses; validates the distribution."""
    total = sum(masses)
    if any(m < 0 for m in masses):
        raise ValueError(f"negative local weight in {masses}")
    if isinstance(total, Fraction):
        if total != 1:
            raise ValueError(f"local distribution sums to {total}, not 1")
    elif not math.isclose(float(total), 1.0, rel_tol=0, abs_tol=1e-9):
        raise ValueError(f"local distribution sums to {float(total)}, not 1")
    u = rng.random()
    cum = 0.0
    for idx, m in enumerate(masses):
        cum += float(m)
        if u < cum:
            return idx
    return len(masses) - 1


# ---------------------------------------------------------------------------
# Unfused sampler
# ---------------------------------------------------------------------------


def sample_quadrant_unfused(
    params: ModelParams,
    lam,
    n_rows: int,
    x_max: int,
    rng_stream: RngStream,
) -> QuadrantSample:
    """Sample the conditioned unfused model row by row (L_stoch weights).

    Column 0 is forced to pass-through, implementing the conditioning of
    the measure on no exits there; every other local distribution must be
    a genuine probability vector or the sampler aborts with the vertex.
    """
    lam = tuple(lam)
    if sum(lam) != n_rows:
        raise ValueError("colouring must account for every row")
    rng = rng_stream.generator()
    q = params.q
    n_col = len(lam)
    colours = _row_colours(lam)
    occupancy = {col: (0,) * n_col for col in range(1, x_max + 1)}
    beyond = [0] * n_col
    for r in range(1, n_rows + 1):
        horizontal = colours[r - 1]
        for col in range(1, x_max + 1):
            I = occupancy[col]
            outs: list[tuple[tuple[int, ...], int]] = []
            masses = []
            s_col = params.s_at(col)
            x_eff = params.xs[r - 1] * params.xi_at(col)
            candidates = {horizontal}
            if horizontal >= 1:
                candidates.add(0)
            candidates.update(c for c in range(1, n_col + 1) if I[c - 1] >= 1)
            for l in sorted(candidates):
                K = vec_add(I, vec_sub(unit(n_col, horizontal), unit(n_col, l)))
                if min(K, default=0) < 0:
                    continue
                w = l_weight_stoch(x_eff, s_col, q, I, horizontal, K, l)
                if w == 0:
                    continue
                if w < 0:
                    raise ValueError(
                        f"negative weight {w} at row {r}, column {col}, "
                        f"state I={I}, in={horizontal}, out={l}"
                    )
                outs.append((K, l))
                masses.append(w)
            pick = _draw_indexed(masses, rng)
            K, l = outs[pick]
            occupancy[col] = K
            horizontal = l
        if horizontal >= 1:
            beyond[horizontal - 1] += 1
    counts = {
        (c + 1, col): occupancy[col][c]
        for col in occupancy
        for c in range(n_col)
        if occupancy[col][c]
    }
    sample = QuadrantSample(lam, x_max, 1, counts, tuple(beyond),
                            (rng_stream.seed, rng_stream.stream))
    sample.check_conservation()
    return sample


# ---------------------------------------------------------------------------
# Fused sampler
# ---------------------------------------------------------------------------


class _FusedTables:
    """Cached float CDF tables for the fused local distributions."""

    def __init__(self, config: FusedConfig) -> None:
        config.require_positive_regime()
        self.config = config
        masses = boundary_tail_masses(config)
        self.boundary_cdf = np.cumsum(masses)
        self._bulk: dict[tuple[int, ...], tuple[list[tuple[int, ...]], np.ndarray]] = {}

    def draw_boundary(self, rng: np.random.Generator) -> int:
        return int(np.searchsorted(self.boundary_cdf, rng.random(), side="right"))

    def draw_bulk(self, A: tuple[int, ...], rng: np.random.Generator) -> tuple[int, ...]:
        if sum(A) == 0:
            return A
        try:
            supports, cdf = self._bulk[A]
        except KeyError:
            supports = []
            masses = []
            total = Fraction(0)
            for D in itertools.product(*(range(a + 1) for a in A)):
                w = fused_bulk_weight(self.config, A, D)
                if w < 0:
                    raise ValueError(f"negative fused weight at A={A}, D={D}: {w}")
                supports.append(D)
                masses.append(w)
                total += w
            if total != 1:
                raise ValueError(f"fused distribution at A={A} sums to {total}")
            cdf = np.cumsum([float(m) for m in masses])
            self._bulk[A] = (supports, cdf)
        idx = int(np.searchsorted(cdf, rng.random(), side="right"))
        return supports[min(idx, len(supports) - 1)]


def sample_fused(
    config: FusedConfig,
    n_rows: int,
    x_max: int,
    rng_stream: RngStream,
    tables: _FusedTables | None = None,
) -> QuadrantSample:
    """Sample the fully fused model on columns 2..x_max.

    Each row receives a random number of paths of its colour at the left
    edge; each vertex routes D <= A of the arriving bottom paths to the
    right by an exact inverse-CDF draw from the q-Hahn kernel.
    """
    lam = tuple(config.colouring)
    if sum(lam) != n_rows:
        raise ValueError("colouring must account for every row")
    tables = tables or _FusedTables(config)
    rng = rng_stream.generator()
    n_col = len(lam)
    colours = _row_colours(lam)
    occupancy = {col: (0,) * n_col for col in range(2, x_max + 1)}
    beyond = [0] * n_col
    for r in range(1, n_rows + 1):
        k_in = tables.draw_boundary(rng)
        horizontal = tuple(
            k_in if c == colours[r - 1] else 0 for c in range(1, n_col + 1)
        )
        for col in range(2, x_max + 1):
            A = occupancy[col]
            D = tables.draw_bulk(A, rng)
            C = vec_add(vec_sub(A, D), horizontal)
            occupancy[col] = C
            horizontal = D
        for c in range(n_col):
            beyond[c] += horizontal[c]
    counts = {
        (c + 1, col): occupancy[col][c]
        for col in occupancy
        for c in range(n_col)
        if occupancy[col][c]
    }
    sample = QuadrantSample(lam, x_max, 2, counts, tuple(beyond),
                            (rng_stream.seed, rng_stream.stream))
    sample.check_conservation()
    return sample


def fused_mc_expectation(
    config: FusedConfig,
    spec: ObservableSpec,
    n_rows: int,
    n_samples: int,
    rng_stream: RngStream,
    threads: int = 1,
) -> tuple[float, float]:
    """Monte Carlo average of O_mu over the fused model: (mean, stderr).

    Replica r draws from stream index rng_stream.stream + r, so the result
    is bit-identical for any thread count.
    """
    x_max = max(spec.max_part(), 2)
    tables = _FusedTables(config)
    qf = float(config.q)

    def one(r: int) -> float:
        sample = sample_fused(config, n_rows, x_max, rng_stream.child(rng_stream.stream + r), tables)
        return float(observable_value(spec, sample, qf))

    values = _run_replicas(one, n_samples, threads)
    mean = sum(values) / n_samples
    var = sum((v - mean) ** 2 for v in values) / max(n_samples - 1, 1)
    return mean, math.sqrt(var / n_samples)


def _run_replicas(fn, n: int, threads: int) -> list:
    """Run fn(0..n-1), optionally on a thread pool, in deterministic order."""
    if threads <= 1:
        return [fn(r) for r in range(n)]
    from concurrent.futures import ThreadPoolExecutor

    chunk = max(1, n // (threads * 8))
    ranges = [(lo, min(lo + chunk, n)) for lo in range(0, n, chunk)]
    out: list = [None] * n

    def run_range(bounds):
        lo, hi = bounds
        return lo, [fn(r) for r in range(lo, hi)]

    with ThreadPoolExecutor(max_workers=threads) as pool:
        for lo, vals in pool.map(run_range, ranges):
            out[lo : lo + len(vals)] = vals
    return out


# ---------------------------------------------------------------------------
# Exact expectation
# ---------------------------------------------------------------------------


@dataclass
class _StateHeights:
    counts: dict
    beyond: tuple[int, ...]
    n_colours: int

    def h(self, colour: int, x: int) -> int:
        total = self.beyond[colour - 1]
        for (c, col), k in self.counts.items():
            if c == colour and col >= x:
                total += k
        return total

    def h_gt(self, colour: int, x: int) -> int:
        return sum(self.h(c, x) for c in range(colour + 1, self.n_colours + 1))


def exact_expectation(
    params_or_config,
    lam,
    n_rows: int,
    spec: ObservableSpec | None,
    x_max: int | None = None,
    state_bound: int = 2_000_000,
    boundary_floor: float = 1e-12,
):
    """E[O_mu] by exhaustive dynamic programming over rows.

    For `ModelParams` this is exact over rationals (signed weights fine):
    the state is the occupation of columns 1..x_max plus the per-colour
    right-exit ledger, and the column-0 conditioning of the measure is
    built in.  `spec=None` computes the total mass (which the summation
    identities say is exactly 1).

    For `FusedConfig` the row inflow is truncated at cumulative mass
    1 - `boundary_floor` per row and the result is the pair
    (value, defect_bound).
    """
    if isinstance(params_or_config, FusedConfig):
        return _exact_expectation_fused(
            params_or_config, lam, n_rows, spec, x_max, state_bound, boundary_floor
        )
    params: ModelParams = params_or_config
    lam = tuple(lam)
    if sum(lam) != n_rows:
        raise ValueError("colouring must account for every row")
    if x_max is None:
        x_max = max(spec.max_part() if spec else 1, 1)
    if spec is not None and spec.max_part() > x_max:
        raise ValueError("x_max smaller than the observable support")
    q = params.q
    n_col = len(lam)
    colours = _row_colours(lam)
    # state: (occupancy columns 1..x_max as a flat tuple, ledger tuple)
    init = ((0,) * (n_col * x_max), (0,) * n_col)
    states = {init: q * 0 + 1}
    for r in range(1, n_rows + 1):
        new_states: dict = {}
        x_r = params.xs[r - 1]
        for (occ_flat, ledger), acc in states.items():
            occ = [
                tuple(occ_flat[(col - 1) * n_col : col * n_col])
                for col in range(1, x_max + 1)
            ]

            def walk(col: int, occ_now: list, horizontal: int, wacc):
                if col > x_max:
                    led = list(ledger)
                    if horizontal >= 1:
                        led[horizontal - 1] += 1
                    key = (tuple(itertools.chain.from_iterable(occ_now)), tuple(led))
                    prev = new_states.get(key)
                    new_states[key] = wacc if prev is None else prev + wacc
                    return
                I = occ_now[col - 1]
                s_col = params.s_at(col)
                x_eff = x_r * params.xi_at(col)
                candidates = {horizontal}
                if horizontal >= 1:
                    candidates.add(0)
                candidates.update(c for c in range(1, n_col + 1) if I[c - 1] >= 1)
                for l in sorted(candidates):
                    K = vec_add(I, vec_sub(unit(n_col, horizontal), unit(n_col, l)))
                    if min(K, default=0) < 0:
                        continue
                    w = l_weight_stoch(x_eff, s_col, q, I, horizontal, K, l)
                    if w == 0:
                        continue
                    occ_next = occ_now.copy()
                    occ_next[col - 1] = K
                    walk(col + 1, occ_next, l, wacc * w)

            walk(1, occ, colours[r - 1], acc)
            if len(new_states) > state_bound:
                raise MemoryError(
                    f"state space exceeded {state_bound} states at row {r}"
                )
        states = new_states
    total = q * 0
    for (occ_flat, ledger), acc in states.items():
        if spec is None:
            total = total + acc
            continue
        counts = {}
        for col in range(1, x_max + 1):
            for c in range(n_col):
                k = occ_flat[(col - 1) * n_col + c]
                if k:
                    counts[(c + 1, col)] = k
        hp = _StateHeights(counts, ledger, n_col)
        total = total + acc * observable_value(spec, hp, q)
    return total


def _exact_expectation_fused(
    config: FusedConfig,
    lam,
    n_rows: int,
    spec: ObservableSpec | None,
    x_max: int | None,
    state_bound: int,
    boundary_floor: float,
):
    """Truncated-boundary exact DP for the fused model; returns (value, defect)."""
    config.require_positive_regime()
    lam = tuple(lam)
    if sum(lam) != n_rows:
        raise ValueError("colouring must account for every row")
    if x_max is None:
        x_max = max(spec.max_part() if spec else 2, 2)
    q = config.q
    n_col = len(lam)
    colours = _row_colours(lam)
    masses = boundary_tail_masses(config, boundary_floor)
    defect = 1.0 - float(sum(masses))
    exact_masses = [
        Fraction(m).limit_denominator(10**15) for m in masses
    ]  # masses are float (infinite products); value below carries float error
    columns = list(range(2, x_max + 1))
    init = ((0,) * (n_col * len(columns)), (0,) * n_col)
    states = {init: 1.0}
    for r in range(1, n_rows + 1):
        new_states: dict = {}
        for (occ_flat, ledger), acc in states.items():
            occ = [
                tuple(occ_flat[i * n_col : (i + 1) * n_col])
                for i in range(len(columns))
            ]
            for k_in, mass in enumerate(masses):
                horizontal0 = tuple(
                    k_in if c == colours[r - 1] else 0 for c in range(1, n_col + 1)
                )

                def walk(ci: int, occ_now: list, horizontal, wacc):
                    if ci == len(columns):
                        led = tuple(
                            ledger[c] + horizontal[c] for c in range(n_col)
                        )
                        key = (
                            tuple(itertools.chain.from_iterable(occ_now)),
                            led,
                        )
                        new_states[key] = new_states.get(key, 0.0) + wacc
                        return
                    A = occ_now[ci]
                    for D in itertools.product(*(range(a + 1) for a in A)):
                        w = float(fused_bulk_weight(config, A, D))
                        if w == 0:
                            continue
                        occ_next = occ_now.copy()
                        occ_next[ci] = vec_add(vec_sub(A, D), horizontal)
                        walk(ci + 1, occ_next, D, wacc * w)

                walk(0, occ, horizontal0, acc * mass)
                if len(new_states) > state_bound:
                    raise MemoryError(
                        f"fused state space exceeded {state_bound} states"
                    )
        states = new_states
    qf = float(config.q)
    total = 0.0
    for (occ_flat, ledger), acc in states.items():
        if spec is None:
            total += acc
            continue
        counts = {}
        for i, col in enumerate(columns):
            for c in range(n_col):
                k = occ_flat[i * n_col + c]
                if k:
                    counts[(c + 1, col)] = k
        hp = _StateHeights(counts, ledger, n_col)
        total += acc * float(observable_value(spec, hp, qf))
    return total, defect * n_rows


# ---------------------------------------------------------------------------
# Continuum vertex model
# ---------------------------------------------------------------------------


@dataclass
class ContinuumState:
    """Coloured masses at one vertex: alpha (bottom in), beta (left in),
    gamma (top out), delta (right out)."""

    alpha: np.ndarray
    beta: np.ndarray
    gamma: np.ndarray
    delta: np.ndarray


def continuum_vertex_split(alpha: np.ndarray, zeta: float) -> np.ndarray:
    """Right-exiting masses delta from bottom masses alpha and one Beta draw.

    With A_j the suffix sums of alpha, the cumulative right flow is
    Delta_j = -log(e^{-A_j} + zeta (1 - e^{-A_j})); differencing gives
    delta, and 0 <= delta_j <= alpha_j always (strict when alpha_j > 0).
    """
    n = len(alpha)
    delta = np.zeros(n)
    if alpha.sum() <= 0:
        return delta
    suffix = np.concatenate([np.cumsum(alpha[::-1])[::-1], [0.0]])
    big = -np.log(np.exp(-suffix) + zeta * (1 - np.exp(-suffix)))
    delta = big[:-1] - big[1:]
    if np.any(delta < -1e-12) or np.any(delta > alpha + 1e-12):
        raise AssertionError(f"continuum split out of range: {alpha}, {delta}")
    bad = (alpha > 1e-12) & (delta <= 0)
    if np.any(bad):
        raise AssertionError(f"vanishing split mass at alpha={alpha}")
    return np.clip(delta, 0.0, alpha)


def continuum_grid_from_noise(
    boundary_masses: np.ndarray, zeta: np.ndarray, n_colours: int
) -> dict[tuple[int, int], ContinuumState]:
    """Deterministic continuum propagation from given noise.

    boundary_masses[r-1] is the mass entering row r (colour r) at column 2;
    zeta[r-1, x-2] is the Beta variate of vertex (x, r), x = 2..x_max.
    """
    n_rows = len(boundary_masses)
    x_cols = zeta.shape[1]
    grid: dict[tuple[int, int], ContinuumState] = {}
    for r in range(1, n_rows + 1):
        beta_vec = np.zeros(n_colours)
        colour = min(r, n_colours)
        beta_vec[colour - 1] = boundary_masses[r - 1]
        for xi in range(x_cols):
            x = xi + 2
            alpha = (
                grid[(x, r - 1)].gamma.copy() if r >= 2 else np.zeros(n_colours)
            )
            delta = continuum_vertex_split(alpha, zeta[r - 1, xi])
            gamma = beta_vec + alpha - delta
            grid[(x, r)] = ContinuumState(alpha, beta_vec, gamma, delta)
            beta_vec = delta
    return grid


def sample_continuum_vertex(
    a: float, b: float, n_rows: int, x_max: int, rng_stream: RngStream
) -> dict[tuple[int, int], ContinuumState]:
    """Sample the continuum Beta vertex model on columns 2..x_max.

    The mass entering row r carries colour r and satisfies
    e^{-mass} ~ Beta(a, b), matching the scaling limit of the fused
    boundary counts; each vertex consumes one Beta(a, b) variate.
    """
    if a <= 0 or b <= 0:
        raise ValueError("Beta parameters must be positive")
    rng = rng_stream.generator()
    boundary = -np.log(rng.beta(a, b, size=n_rows))
    zeta = rng.beta(a, b, size=(n_rows, max(x_max - 1, 0)))
    return continuum_grid_from_noise(boundary, zeta, n_rows)


def continuum_height(
    grid: dict[tuple[int, int], ContinuumState], k: int, x: int, y: int
) -> float:
    """h^{(>=k)}(x, y): mass of colours >= k that entered column x from the
    left in rows 1..y (equivalently exited the column-x box up or right)."""
    total = 0.0
    for r in range(1, y + 1):
        state = grid.get((x, r))
        if state is not None:
            total += state.beta[k - 1 :].sum()
        else:
            prev = grid.get((x - 1, r))
            if prev is not None:
                total += prev.delta[k - 1 :].sum()
    return total
