"""Coloured compositions, height functions, colour merging, observables.

A coloured composition is a list of nonnegative parts split into blocks of
weakly decreasing entries; block k holds the parts of colour k.  These are
the labels of everything downstream: measure states, observable indices,
and the function labels of the spin Hall-Littlewood machinery.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Iterator, Sequence

from vertexlab.qkit import q_binomial


@dataclass(frozen=True)
class ColouredComposition:
    """Parts split into colour blocks; weakly decreasing inside each block."""

    parts: tuple[int, ...]
    colouring: tuple[int, ...]

    def __post_init__(self) -> None:
        if sum(self.colouring) != len(self.parts):
            raise ValueError("colouring sizes must sum to the number of parts")
        if any(c < 0 for c in self.colouring):
            raise ValueError("block sizes must be nonnegative")
        if any(p < 0 for p in self.parts):
            raise ValueError("parts must be nonnegative")
        for lo, hi in self.block_bounds():
            block = self.parts[lo:hi]
            if any(block[i] < block[i + 1] for i in range(len(block) - 1)):
                raise ValueError(
                    f"block {self.parts[lo:hi]} is not weakly decreasing"
                )

    # -- structure ---------------------------------------------------------

    @property
    def n_colours(self) -> int:
        return len(self.colouring)

    @property
    def length(self) -> int:
        return len(self.parts)

    @property
    def weight(self) -> int:
        return sum(self.parts)

    def block_bounds(self) -> list[tuple[int, int]]:
        """[lo, hi) index range of each colour block."""
        bounds = []
        lo = 0
        for size in self.colouring:
            bounds.append((lo, lo + size))
            lo += size
        return bounds

    def colour_of(self, index: int) -> int:
        """1-based colour of the part at `index` (0-based)."""
        for colour, (lo, hi) in enumerate(self.block_bounds(), start=1):
            if lo <= index < hi:
                return colour
        raise IndexError(index)

    def block(self, colour: int) -> tuple[int, ...]:
        lo, hi = self.block_bounds()[colour - 1]
        return self.parts[lo:hi]

    @property
    def is_rainbow(self) -> bool:
        return all(c == 1 for c in self.colouring)

    @property
    def is_colour_blind(self) -> bool:
        return len(self.colouring) == 1

    # -- derived objects ---------------------------------------------------

    def multiplicity(self, colour: int, value: int) -> int:
        """m_colour^(value): number of colour parts equal to value."""
        return sum(1 for p in self.block(colour) if p == value)

    def strip_zeros(self) -> "ColouredComposition":
        """Drop zero parts; the colouring shrinks accordingly (mu^{>=1})."""
        new_parts: list[int] = []
        new_colouring: list[int] = []
        for lo, hi in self.block_bounds():
            block = [p for p in self.parts[lo:hi] if p >= 1]
            new_parts.extend(block)
            new_colouring.append(len(block))
        return ColouredComposition(tuple(new_parts), tuple(new_colouring))

    def shift(self, delta: int) -> "ColouredComposition":
        """Add `delta` to every part (used for the fused-model mu - 1^m)."""
        parts = tuple(p + delta for p in self.parts)
        if any(p < 0 for p in parts):
            raise ValueError("shift would produce negative parts")
        return ColouredComposition(parts, self.colouring)

    # -- text form ---------------------------------------------------------

    def to_text(self) -> str:
        return "|".join(
            ",".join(str(p) for p in self.parts[lo:hi])
            for lo, hi in self.block_bounds()
        )

    def __str__(self) -> str:  # pragma: no cover - repr sugar
        return self.to_text()


def rainbow(parts: Sequence[int]) -> ColouredComposition:
    """Rainbow composition: every part its own colour."""
    return ColouredComposition(tuple(parts), (1,) * len(parts))


def colour_blind(parts: Sequence[int]) -> ColouredComposition:
    """Single-colour composition; parts get sorted decreasingly."""
    return ColouredComposition(
        tuple(sorted(parts, reverse=True)), (len(parts),)
    )


def parse_coloured(text: str, colouring: Sequence[int] | None = None) -> ColouredComposition:
    """Parse "3,1|2|2,2" into a coloured composition.

    With an explicit `colouring`, missing trailing blocks are padded with
    zero parts and short blocks are zero-padded to their declared size,
    so "2|1" with colouring (1,1,1) means (2|1|0).  Empty block strings
    are rejected.
    """
    text = text.strip()
    if not text:
        blocks: list[list[int]] = []
    else:
        blocks = []
        for chunk in text.split("|"):
            chunk = chunk.strip()
            if not chunk:
                raise ValueError(f"empty colour block in {text!r}")
            blocks.append([int(tok) for tok in chunk.split(",")])
    if colouring is None:
        colouring = tuple(len(b) for b in blocks)
    else:
        colouring = tuple(colouring)
        if len(blocks) > len(colouring):
            raise ValueError("more blocks than colours in the colouring")
        while len(blocks) < len(colouring):
            blocks.append([])
        for j, size in enumerate(colouring):
            if len(blocks[j]) > size:
                raise ValueError(f"block {j + 1} longer than colouring allows")
            blocks[j] = blocks[j] + [0] * (size - len(blocks[j]))
    parts = tuple(itertools.chain.from_iterable(blocks))
    return ColouredComposition(parts, colouring)


# ---------------------------------------------------------------------------
# Height functions
# ---------------------------------------------------------------------------


class HeightField:
    """Coloured height functions H_i(x) = #{parts of colour i that are >= x}.

    Values are available at every x >= 0; the table is computed lazily from
    the composition.  `H_i(x)` is nonincreasing in x and bounded by the
    block size lambda_i.
    """

    def __init__(self, rho: ColouredComposition) -> None:
        self._rho = rho

    def h(self, colour: int, x: int) -> int:
        if colour < 1 or colour > self._rho.n_colours:
            return 0
        return sum(1 for p in self._rho.block(colour) if p >= x)

    def h_ge(self, colour: int, x: int) -> int:
        return sum(self.h(c, x) for c in range(colour, self._rho.n_colours + 1))

    def h_gt(self, colour: int, x: int) -> int:
        return self.h_ge(colour + 1, x)

    def table(self, x_max: int) -> dict[tuple[int, int], int]:
        return {
            (i, x): self.h(i, x)
            for i in range(1, self._rho.n_colours + 1)
            for x in range(x_max + 1)
        }


def heights(rho: ColouredComposition) -> HeightField:
    return HeightField(rho)


# ---------------------------------------------------------------------------
# Observables
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ObservableSpec:
    """The q-moment observable index: a coloured mu with all parts >= 1.

    Derived data follows the usual bookkeeping: m_i^(x) counts colour-i
    parts equal to x, c_1 < ... < c_alpha are the colours present, and
    frak_m_k is the number of parts of colour c_k.
    """

    mu: ColouredComposition

    def __post_init__(self) -> None:
        if any(p < 1 for p in self.mu.parts):
            raise ValueError("observable index needs all parts >= 1; strip zeros first")

    @classmethod
    def from_mu(cls, mu: ColouredComposition) -> "ObservableSpec":
        """Build from a coloured composition, dropping its zero parts."""
        stripped = mu.strip_zeros()
        return cls(stripped)

    @property
    def length(self) -> int:
        return self.mu.length

    @property
    def colours(self) -> tuple[int, ...]:
        """c_1 < ... < c_alpha, the colours actually present."""
        return tuple(
            c for c in range(1, self.mu.n_colours + 1) if self.mu.colouring[c - 1] > 0
        )

    @property
    def colour_counts(self) -> tuple[int, ...]:
        """frak_m_1, ..., frak_m_alpha, aligned with `colours`."""
        return tuple(self.mu.colouring[c - 1] for c in self.colours)

    def count_prefix(self, a: int, b: int) -> int:
        """frak_m[a, b] = frak_m_a + ... + frak_m_b (1-based, inclusive)."""
        counts = self.colour_counts
        return sum(counts[k - 1] for k in range(a, b + 1))

    def m_table(self) -> dict[tuple[int, int], int]:
        """{(colour, value): multiplicity} over the nonzero entries."""
        out: dict[tuple[int, int], int] = {}
        for idx, p in enumerate(self.mu.parts):
            key = (self.mu.colour_of(idx), p)
            out[key] = out.get(key, 0) + 1
        return out

    def column_totals(self) -> dict[int, int]:
        """{value x: |m^(x)|} over nonzero parts."""
        out: dict[int, int] = {}
        for p in self.mu.parts:
            out[p] = out.get(p, 0) + 1
        return out

    def max_part(self) -> int:
        return max(self.mu.parts, default=0)


class HeightProvider:
    """Anything exposing coloured heights h(colour, x); used so observables
    can be evaluated both on compositions and on simulation samples."""

    def h(self, colour: int, x: int) -> int:  # pragma: no cover - interface
        raise NotImplementedError

    def h_gt(self, colour: int, x: int) -> int:
        raise NotImplementedError


def observable_value(spec: ObservableSpec, nu, q) -> object:
    """O_mu(nu): the product over (colour i, value x >= 1) of

        q^{m_i^(x) H_{>i}^{nu/mu}(x+1)} * binom(H_i^{nu/mu}(x+1), m_i^(x))_q.

    `nu` is a coloured composition or any height provider.  Fast paths for
    the rainbow and colour-blind sectors are checked against this general
    form in the test suite.
    """
    h_nu = heights(nu) if isinstance(nu, ColouredComposition) else nu
    h_mu = heights(spec.mu)
    out = q * 0 + 1
    for (i, x), m in sorted(spec.m_table().items()):
        dh = h_nu.h(i, x + 1) - h_mu.h(i, x + 1)
        dh_gt = h_nu.h_gt(i, x + 1) - h_mu.h_gt(i, x + 1)
        out = out * q ** (m * dh_gt) * q_binomial(dh, m, q)
        if out == 0:
            return out
    return out


def observable_value_rainbow(spec: ObservableSpec, nu, q) -> object:
    """Rainbow fast path: indicators 1_{H_i^{nu/mu}(x+1)=1} q^{H_{>i}^{nu/mu}(x+1)}."""
    h_nu = heights(nu) if isinstance(nu, ColouredComposition) else nu
    h_mu = heights(spec.mu)
    out = q * 0 + 1
    for (i, x), m in sorted(spec.m_table().items()):
        if m != 1:
            raise ValueError("rainbow observable expects multiplicities 1")
        if h_nu.h(i, x + 1) - h_mu.h(i, x + 1) != 1:
            return q * 0
        out = out * q ** (h_nu.h_gt(i, x + 1) - h_mu.h_gt(i, x + 1))
    return out


def observable_value_colour_blind(spec: ObservableSpec, nu, q) -> object:
    """Colour-blind fast path: the shifted q-moment

        prod_k (1 - q^{H(theta_k + 1) - k + 1}) / prod_j (q;q)_{mult_j}

    with theta the decreasingly sorted parts of mu.
    """
    h_nu = heights(nu) if isinstance(nu, ColouredComposition) else nu
    theta = sorted(spec.mu.parts, reverse=True)
    num = q * 0 + 1
    for k, t in enumerate(theta, start=1):
        num = num * (1 - q ** (h_nu.h_ge(1, t + 1) - (k - 1)))
    den = q * 0 + 1
    for x, mult in spec.column_totals().items():
        for i in range(1, mult + 1):
            den = den * (1 - q**i)
    return num / den


# ---------------------------------------------------------------------------
# Colour merging
# ---------------------------------------------------------------------------


def _check_monotone(theta: Sequence[int], n_target: int) -> None:
    if any(theta[i] > theta[i + 1] for i in range(len(theta) - 1)):
        raise ValueError(f"colour map {theta} is not monotone")
    if theta and (theta[0] < 1 or theta[-1] > n_target):
        raise ValueError("colour map out of range")


def merge_vector(theta: Sequence[int], vec: Sequence[int], n_target: int) -> tuple[int, ...]:
    """theta_* on count vectors: sum coordinates with the same image."""
    _check_monotone(theta, n_target)
    out = [0] * n_target
    for i, v in enumerate(vec):
        out[theta[i] - 1] += v
    return tuple(out)


def colour_map(
    theta: Sequence[int], rho: ColouredComposition, n_target: int
) -> ColouredComposition:
    """Pushforward theta_*(rho): re-colour parts along the monotone map theta.

    theta is given on the colours 1..rho.n_colours; parts keep their values
    and blocks with equal image are concatenated (sortedness survives only
    after canonical resorting inside each merged block).
    """
    _check_monotone(theta, n_target)
    if len(theta) != rho.n_colours:
        raise ValueError("theta must be defined on every source colour")
    new_colouring = merge_vector(theta, rho.colouring, n_target)
    new_blocks: list[list[int]] = [[] for _ in range(n_target)]
    for idx, p in enumerate(rho.parts):
        new_blocks[theta[rho.colour_of(idx) - 1] - 1].append(p)
    parts = tuple(
        itertools.chain.from_iterable(sorted(b, reverse=True) for b in new_blocks)
    )
    return ColouredComposition(parts, new_colouring)


def block_theta(lam: Sequence[int]) -> tuple[int, ...]:
    """The unique monotone theta: {1..|lam|} -> colours with theta_*(1^m) = lam."""
    out: list[int] = []
    for colour, size in enumerate(lam, start=1):
        out.extend([colour] * size)
    return tuple(out)


def rainbow_preimages(
    theta: Sequence[int], target: ColouredComposition
) -> list[ColouredComposition]:
    """All rainbow nu with theta_*(nu) = target.

    theta must map {1..m} blockwise onto the colours of `target`; the
    preimages are the distinct arrangements of each block's multiset over
    the block's rainbow slots.
    """
    m = len(theta)
    _check_monotone(theta, target.n_colours)
    sizes = merge_vector(theta, (1,) * m, target.n_colours)
    if sizes != target.colouring:
        raise ValueError("theta does not match the target colouring")
    per_block: list[list[tuple[int, ...]]] = []
    for colour in range(1, target.n_colours + 1):
        block = target.block(colour)
        per_block.append(sorted(set(itertools.permutations(block))))
    out = []
    for combo in itertools.product(*per_block):
        parts = tuple(itertools.chain.from_iterable(combo))
        out.append(rainbow(parts))
    return out


def preimages_of(mu: ColouredComposition) -> list[ColouredComposition]:
    """Rainbow preimages of mu under its own block map."""
    return rainbow_preimages(block_theta(mu.colouring), mu)


def monotone_maps(n_source: int, n_target: int) -> Iterator[tuple[int, ...]]:
    """All monotone maps {1..n_source} -> {1..n_target}."""
    for combo in itertools.combinations_with_replacement(
        range(1, n_target + 1), n_source
    ):
        yield combo


def all_coloured_compositions(
    lam: Sequence[int], max_part: int, min_part: int = 0
) -> Iterator[ColouredComposition]:
    """Every lam-coloured composition with parts in [min_part, max_part]."""
    lam = tuple(lam)
    block_choices = []
    for size in lam:
        block_choices.append(
            list(
                itertools.combinations_with_replacement(
                    range(max_part, min_part - 1, -1), size
                )
            )
        )
    for combo in itertools.product(*block_choices):
        parts = tuple(itertools.chain.from_iterable(combo))
        yield ColouredComposition(parts, lam)
