"""Combinatorics of correlation labels on the Keldysh contour.

A Wightman label ``sigma`` stands for ``Tr[B_sigma(n) ... B_sigma(1) rho]``.
Its *chronological reading* is ``sigma(1), sigma(2), ..., sigma(n)``: the
operator adjacent to ``rho`` first.  Padding the reading with a sentinel 0 on
both ends (``rho`` sits at the earliest contour time), the contour rank is the
number of local maxima: every maximum is one forward/backward turn.

Two string forms are used for labels:

* one-line images, ``"3,1,2"`` for ``sigma = (3, 1, 2)``;
* the trace string, ``"213"`` for the same label, i.e. the operator indices as
  they appear left-to-right inside the trace.

Sign vectors ``eta`` are written with ``eta_n`` first (``"+-+"``), matching how
nested correlations are conventionally labelled.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Iterable, NamedTuple, Sequence

MAX_ENUMERATION_ORDER = 8


class Permutation(tuple):
    """Bijection of ``{1..n}`` stored as its images ``(sigma(1), ..., sigma(n))``."""

    def __new__(cls, images: Iterable[int]):
        images = tuple(int(i) for i in images)
        if sorted(images) != list(range(1, len(images) + 1)) or not images:
            raise ValueError(f"{images} is not a permutation of 1..{len(images)}")
        return super().__new__(cls, images)

    @property
    def n(self) -> int:
        return len(self)

    @classmethod
    def identity(cls, n: int) -> Permutation:
        return cls(range(1, n + 1))

    @classmethod
    def parse(cls, text: str) -> Permutation:
        """Parse one-line images such as ``"3,1,2"`` or ``"3 1 2"``."""
        parts = text.replace(",", " ").split()
        return cls(int(p) for p in parts)

    @classmethod
    def from_trace(cls, text: str) -> Permutation:
        """Parse a trace string: ``"213"`` means ``Tr[B2 B1 B3 rho]``."""
        digits = [int(c) for c in text.strip()]
        return cls(reversed(digits))

    def trace_label(self) -> str:
        if self.n > 9:
            return ",".join(str(i) for i in reversed(self))
        return "".join(str(i) for i in reversed(self))

    def __str__(self):
        return ",".join(str(i) for i in self)

    def __repr__(self):
        return f"Permutation({tuple(self)})"


class EtaVector(tuple):
    """Signs ``(eta_1, ..., eta_n)`` as +1/-1; ``eta_n`` is always +1."""

    def __new__(cls, signs: Iterable):
        vals = []
        for s in signs:
            if s in ("+", 1):
                vals.append(1)
            elif s in ("-", "−", -1):
                vals.append(-1)
            else:
                raise ValueError(f"invalid sign {s!r}")
        if not vals:
            raise ValueError("empty sign vector")
        if vals[-1] != 1:
            raise ValueError("the outermost sign eta_n must be '+'")
        return super().__new__(cls, vals)

    @property
    def n(self) -> int:
        return len(self)

    @classmethod
    def parse(cls, text: str) -> EtaVector:
        """``"++-"`` is ``eta_3 = +, eta_2 = +, eta_1 = -``."""
        return cls(reversed(text.strip()))

    def __str__(self):
        return "".join("+" if s > 0 else "-" for s in reversed(self))

    def __repr__(self):
        return f"EtaVector('{self}')"


class ExpansionTerm(NamedTuple):
    sigma: Permutation
    coeff: complex


@dataclass(frozen=True)
class RankHistogram:
    n: int
    counts: dict = field(default_factory=dict)

    @property
    def total(self) -> int:
        return sum(self.counts.values())


class TimeMap(NamedTuple):
    """New times ``t'_i = sign * t[source[i] - 1]``."""

    source: tuple
    sign: int

    def apply(self, times: Sequence[float]) -> tuple:
        return tuple(self.sign * times[j - 1] + 0.0 for j in self.source)


class LabelMap(NamedTuple):
    sigma: Permutation
    times: TimeMap


def _reading(sigma: Sequence[int]) -> tuple:
    return (0, *sigma, 0)


def rank(sigma: Sequence[int]) -> int:
    """Number of time contours needed by the label (1 for a CTOC)."""
    p = _reading(Permutation(sigma))
    return sum(1 for i in range(1, len(p) - 1) if p[i - 1] < p[i] > p[i + 1])


def is_contour_ordered(sigma: Sequence[int]) -> bool:
    return rank(sigma) == 1


def enumerate_ranks(n: int) -> RankHistogram:
    if not 1 <= n <= MAX_ENUMERATION_ORDER:
        raise ValueError(f"order must be in 1..{MAX_ENUMERATION_ORDER}, got {n}")
    counts: dict[int, int] = {}
    for images in itertools.permutations(range(1, n + 1)):
        k = rank(images)
        counts[k] = counts.get(k, 0) + 1
    hist = RankHistogram(n, dict(sorted(counts.items())))
    assert hist.total == math.factorial(n)
    return hist


def reverse_sigma(sigma: Sequence[int]) -> Permutation:
    return Permutation(reversed(Permutation(sigma)))


def c_transform_label(sigma: Sequence[int]) -> Permutation:
    """Label reached under particle-hole exchange; the rank is unchanged."""
    return reverse_sigma(sigma)


def _reversed_negated_times(n: int) -> TimeMap:
    return TimeMap(tuple(range(n, 0, -1)), -1)


def t_transform_label(sigma: Sequence[int]) -> LabelMap:
    """Canonical label of ``W^{reversed sigma}`` with every time negated.

    Reversing the time axis turns operator ``j`` into the ``(n+1-j)``-th in
    ascending order, so ``sigma'(i) = n+1 - sigma(n+1-i)`` and
    ``t'_i = -t_{n+1-i}``.
    """
    s = Permutation(sigma)
    n = s.n
    return LabelMap(Permutation(n + 1 - s[n - i] for i in range(1, n + 1)),
                    _reversed_negated_times(n))


def s_transform_label(sigma: Sequence[int]) -> LabelMap:
    """Canonical label of ``W^sigma`` with every time negated."""
    s = Permutation(sigma)
    n = s.n
    return LabelMap(Permutation(n + 1 - v for v in s), _reversed_negated_times(n))


def branch_occupancy(sigma: Sequence[int]) -> tuple[bool, bool]:
    """Whether the first forward and the last backward branch hold operators.

    The turning-point operator at a contour's tip can sit on either branch, so
    a branch only counts as occupied when it holds some other operator: the
    reading rises out of ``rho`` (first forward) or falls back into it (last
    backward).
    """
    s = Permutation(sigma)
    if s.n == 1:
        return False, True
    return s[0] < s[1], s[-1] < s[-2]


def predict_rank_delta(sigma: Sequence[int], mode: str = "T") -> int:
    """Rank change under the T or S label map, from branch occupancy alone."""
    if mode not in ("T", "S"):
        raise ValueError(f"mode must be 'T' or 'S', got {mode!r}")
    first_forward, last_backward = branch_occupancy(sigma)
    return int(first_forward) + int(last_backward) - 1


def expand_ctoc(eta: Sequence) -> list[ExpansionTerm]:
    """Expand ``Tr[B_n^+ ... B_1^{eta_1} rho]`` into Wightman terms.

    Each inner superoperator contributes ``B A`` or ``A B``: with weight
    ``1/2`` each for ``+`` and ``-i`` / ``+i`` for ``-``.  The outermost
    anticommutator collapses under the trace to a single product.
    """
    eta = eta if isinstance(eta, EtaVector) else EtaVector(eta)
    n = eta.n
    terms = []
    for sides in itertools.product((0, 1), repeat=n - 1):  # 0: left, 1: right
        coeff = 1 + 0j
        left, right = [], []
        for j, (side, sign) in enumerate(zip(sides, eta[:-1]), start=1):
            if sign > 0:
                coeff *= 0.5
            else:
                coeff *= -1j if side == 0 else 1j
            (left if side == 0 else right).append(j)
        sigma = Permutation([*left, n, *reversed(right)])
        terms.append(ExpansionTerm(sigma, coeff))
    return terms
