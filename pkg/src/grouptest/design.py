"""Bernoulli test designs, defective-set sampling and noiseless outcomes.

Items are 0-indexed. A design is a ``t x n`` boolean matrix whose row ``r``
is the pool for test ``r``; rows are also kept bit-packed so that checking
whether a pool meets an item set is a word-wise AND.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable

import numpy as np


class ParameterError(ValueError):
    """Raised for out-of-range parameters (probabilities, counts, indices)."""


@dataclass(frozen=True)
class ItemSet:
    """Sorted, duplicate-free tuple of item indices."""

    items: tuple[int, ...] = ()

    def __post_init__(self):
        items = tuple(int(i) for i in self.items)
        if any(i < 0 for i in items):
            raise ParameterError("item indices must be non-negative")
        if any(a >= b for a, b in zip(items, items[1:])):
            raise ParameterError("items must be strictly increasing")
        object.__setattr__(self, "items", items)

    @classmethod
    def of(cls, items: Iterable[int]) -> "ItemSet":
        return cls(tuple(sorted({int(i) for i in items})))

    @classmethod
    def from_mask(cls, mask: np.ndarray) -> "ItemSet":
        return cls(tuple(np.flatnonzero(mask).tolist()))

    def mask(self, n: int) -> np.ndarray:
        if self.items and self.items[-1] >= n:
            raise ParameterError(f"item {self.items[-1]} out of range for n={n}")
        out = np.zeros(n, dtype=bool)
        out[list(self.items)] = True
        return out

    def __iter__(self):
        return iter(self.items)

    def __len__(self):
        return len(self.items)

    def __contains__(self, item):
        return item in self.items

    def issubset(self, other: "ItemSet") -> bool:
        return set(self.items) <= set(other.items)

    def issuperset(self, other: "ItemSet") -> bool:
        return set(self.items) >= set(other.items)

    def __str__(self):
        return " ".join(map(str, self.items))


@dataclass(frozen=True, eq=False)
class TestDesign:
    """Pooling plan: ``inclusion[r, i]`` is true iff item ``i`` is in test ``r``.

    ``p`` records the Bernoulli parameter the design was drawn with, if any.
    """

    __test__ = False  # not a pytest class

    inclusion: np.ndarray
    p: float | None = None
    packed: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        x = np.array(self.inclusion, dtype=bool)
        if x.ndim != 2 or x.shape[0] < 1 or x.shape[1] < 1:
            raise ParameterError(f"inclusion must be a non-empty 2-d matrix, got shape {x.shape}")
        x.setflags(write=False)
        packed = np.packbits(x, axis=1)
        packed.setflags(write=False)
        object.__setattr__(self, "inclusion", x)
        object.__setattr__(self, "packed", packed)

    @property
    def t(self) -> int:
        return self.inclusion.shape[0]

    @property
    def n(self) -> int:
        return self.inclusion.shape[1]

    def membership(self, test: int, item: int) -> bool:
        return bool(self.packed[test, item >> 3] & (0x80 >> (item & 7)))

    def pool(self, test: int) -> ItemSet:
        return ItemSet.from_mask(self.inclusion[test])

    def hits(self, items: ItemSet) -> np.ndarray:
        """Boolean vector: which pools contain at least one of ``items``."""
        key = np.packbits(items.mask(self.n))
        return np.bitwise_and(self.packed, key).any(axis=1)

    def __eq__(self, other):
        if not isinstance(other, TestDesign):
            return NotImplemented
        return np.array_equal(self.inclusion, other.inclusion)

    def __hash__(self):
        return hash((self.t, self.n, self.packed.tobytes()))


def _check_prob(p: float) -> float:
    p = float(p)
    if not 0.0 <= p <= 1.0:
        raise ParameterError(f"probability must lie in [0, 1], got {p}")
    return p


def bernoulli_design(n: int, t: int, p: float, rng: np.random.Generator) -> TestDesign:
    """Each item joins each pool independently with probability ``p``."""
    p = _check_prob(p)
    if n < 1 or t < 1:
        raise ParameterError(f"need n >= 1 and t >= 1, got n={n}, t={t}")
    return TestDesign(rng.random((t, n)) < p, p=p)


def sample_defective_set(n: int, k: int, rng: np.random.Generator) -> ItemSet:
    """Uniformly random ``k``-subset of ``range(n)``."""
    if not 0 <= k <= n:
        raise ParameterError(f"need 0 <= k <= n, got k={k}, n={n}")
    return ItemSet.of(rng.choice(n, size=k, replace=False).tolist())


def compute_outcomes(design: TestDesign, defectives: ItemSet) -> np.ndarray:
    """A test is positive iff its pool contains a defective."""
    out = design.hits(defectives)
    out.setflags(write=False)
    return out


def p_from_k(k: int, mode: str = "reciprocal", nu: float = 1.0) -> float:
    """Bernoulli parameter from the number of defectives.

    ``reciprocal`` gives 1/(k+1); ``nu_over_k`` gives min(nu/k, 1).
    """
    if mode == "reciprocal":
        return 1.0 / (k + 1)
    if mode == "nu_over_k":
        if k < 1 or nu <= 0:
            raise ParameterError("nu_over_k needs k >= 1 and nu > 0")
        return min(nu / k, 1.0)
    raise ParameterError(f"unknown p mode {mode!r}")


def check_outcomes(design: TestDesign, outcomes) -> np.ndarray:
    y = np.asarray(outcomes, dtype=bool)
    if y.shape != (design.t,):
        raise ParameterError(f"outcomes have shape {y.shape}, design has {design.t} tests")
    return y


# Text formats: design file is "n t" then t rows of n 0/1 characters;
# outcomes file is a single line of t 0/1 characters.

def _parse_bits(line: str, width: int, what: str) -> list[bool]:
    line = line.strip()
    if len(line) != width or set(line) - {"0", "1"}:
        raise ParameterError(f"malformed {what}: expected {width} characters of 0/1, got {line!r}")
    return [c == "1" for c in line]


def parse_design(text: str) -> TestDesign:
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines:
        raise ParameterError("empty design file")
    try:
        n, t = (int(v) for v in lines[0].split())
    except ValueError:
        raise ParameterError(f"malformed design header {lines[0]!r}") from None
    rows = lines[1:]
    if len(rows) != t:
        raise ParameterError(f"design header declares {t} tests, found {len(rows)} rows")
    return TestDesign(np.array([_parse_bits(r, n, "design row") for r in rows], dtype=bool).reshape(t, n))


def format_design(design: TestDesign) -> str:
    rows = ["".join("1" if v else "0" for v in row) for row in design.inclusion]
    return "\n".join([f"{design.n} {design.t}", *rows]) + "\n"


def parse_outcomes(text: str) -> np.ndarray:
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if len(lines) != 1:
        raise ParameterError("outcomes file must contain exactly one line")
    return np.array(_parse_bits(lines[0], len(lines[0].strip()), "outcomes"), dtype=bool)


def format_outcomes(outcomes) -> str:
    return "".join("1" if v else "0" for v in outcomes) + "\n"


def load_design(path: str | Path) -> TestDesign:
    return parse_design(Path(path).read_text())


def load_outcomes(path: str | Path) -> np.ndarray:
    return parse_outcomes(Path(path).read_text())
