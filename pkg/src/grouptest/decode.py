"""COMP, DD and SCOMP decoders, satisfying-set checks and an exhaustive oracle."""
from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations

import numpy as np

from .design import ItemSet, TestDesign, check_outcomes

ORACLE_MAX_ITEMS = 25


class CapacityError(RuntimeError):
    """Instance is too large for exhaustive search."""


@dataclass(frozen=True)
class DecodeResult:
    estimate: ItemSet
    satisfying: bool
    dd_core: ItemSet = ItemSet()
    n_possible: int = 0
    n_unexplained: int = 0
    # set when the decoder declares a global failure (e.g. crude LP rounding)
    error: str | None = None
    extra: dict = field(default_factory=dict, compare=False)

    @property
    def failed(self) -> bool:
        return self.error is not None


def possible_defectives_mask(design: TestDesign, outcomes) -> np.ndarray:
    y = check_outcomes(design, outcomes)
    return ~design.inclusion[~y].any(axis=0)


def possible_defectives(design: TestDesign, outcomes) -> ItemSet:
    """Items that appear in no negative test (untested items included)."""
    return ItemSet.from_mask(possible_defectives_mask(design, outcomes))


def is_satisfying(design: TestDesign, outcomes, candidate: ItemSet) -> bool:
    """True iff ``candidate`` avoids every negative test and meets every positive one."""
    y = check_outcomes(design, outcomes)
    return bool(np.array_equal(design.hits(candidate), y))


def comp_decode(design: TestDesign, outcomes) -> DecodeResult:
    pd = possible_defectives(design, outcomes)
    return DecodeResult(pd, is_satisfying(design, outcomes, pd), n_possible=len(pd))


def _dd_parts(design: TestDesign, y: np.ndarray):
    pd_mask = ~design.inclusion[~y].any(axis=0)
    pd_idx = np.flatnonzero(pd_mask)
    # positive tests restricted to possible-defective columns
    sub = design.inclusion[y][:, pd_idx]
    lone = sub.sum(axis=1) == 1
    if not lone.any():
        return pd_idx, sub, np.zeros(0, dtype=np.intp)
    dd_cols = np.unique(np.argmax(sub[lone], axis=1))
    return pd_idx, sub, dd_cols


def dd_decode(design: TestDesign, outcomes) -> DecodeResult:
    """Definite defectives: the lone possible defective of some positive test."""
    y = check_outcomes(design, outcomes)
    pd_idx, sub, dd_cols = _dd_parts(design, y)
    est = ItemSet(tuple(pd_idx[dd_cols].tolist()))
    explained = sub[:, dd_cols].any(axis=1)
    unexplained = int((~explained).sum())
    return DecodeResult(est, unexplained == 0, dd_core=est,
                        n_possible=len(pd_idx), n_unexplained=unexplained)


def scomp_decode(design: TestDesign, outcomes, tie_rule: str = "lowest",
                 rng: np.random.Generator | None = None) -> DecodeResult:
    """DD followed by greedy covering of unexplained positive tests.

    ``tie_rule`` is ``"lowest"`` (lowest item index) or ``"random"``, which
    draws uniformly among the tied candidates from ``rng``.
    """
    if tie_rule not in ("lowest", "random"):
        raise ValueError(f"unknown tie rule {tie_rule!r}")
    if tie_rule == "random" and rng is None:
        raise ValueError("random tie rule needs an rng")
    y = check_outcomes(design, outcomes)
    pd_idx, sub, dd_cols = _dd_parts(design, y)
    dd = ItemSet(tuple(pd_idx[dd_cols].tolist()))

    chosen = np.zeros(len(pd_idx), dtype=bool)
    chosen[dd_cols] = True
    unexplained = ~sub[:, dd_cols].any(axis=1)
    counts = sub[unexplained].sum(axis=0)
    while unexplained.any():
        best = counts.max() if counts.size else 0
        if best == 0:
            break  # a positive test with no possible defective: inconsistent input
        if tie_rule == "lowest":
            j = int(np.argmax(counts))
        else:
            j = int(rng.choice(np.flatnonzero(counts == best)))
        chosen[j] = True
        newly = unexplained & sub[:, j]
        counts -= sub[newly].sum(axis=0)
        unexplained &= ~newly

    est = ItemSet(tuple(pd_idx[chosen].tolist()))
    left = int(unexplained.sum())
    return DecodeResult(est, left == 0, dd_core=dd, n_possible=len(pd_idx), n_unexplained=left)


@dataclass(frozen=True)
class OracleResult:
    """Outcome of the exhaustive search.

    ``status`` is ``"unique"``, ``"ambiguous"`` or ``"none-within-cap"``.
    For ``ambiguous``, ``witnesses`` holds two distinct minimum sets.
    """

    status: str
    estimate: ItemSet | None = None
    size: int | None = None
    witnesses: tuple[ItemSet, ...] = ()

    @property
    def unique(self) -> bool:
        return self.status == "unique"


def smallest_satisfying_oracle(design: TestDesign, outcomes, size_cap: int | None = None,
                               max_items: int = ORACLE_MAX_ITEMS) -> OracleResult:
    """Exhaustive search for the minimum-cardinality satisfying set."""
    if design.n > max_items:
        raise CapacityError(f"oracle limited to n <= {max_items}, got n={design.n}")
    y = check_outcomes(design, outcomes)
    pd_idx = np.flatnonzero(possible_defectives_mask(design, y))
    pos = design.inclusion[y][:, pd_idx]
    full = (1 << pos.shape[0]) - 1
    # bitmask of positive tests covered by each possible defective
    masks = [sum(1 << int(r) for r in np.flatnonzero(col)) for col in pos.T]
    cap = len(pd_idx) if size_cap is None else min(size_cap, len(pd_idx))

    for size in range(cap + 1):
        found = []
        for combo in combinations(range(len(pd_idx)), size):
            cover = 0
            for c in combo:
                cover |= masks[c]
            if cover == full:
                found.append(ItemSet(tuple(int(pd_idx[c]) for c in combo)))
                if len(found) == 2:
                    return OracleResult("ambiguous", size=size, witnesses=tuple(found))
        if found:
            return OracleResult("unique", estimate=found[0], size=size, witnesses=tuple(found))
    return OracleResult("none-within-cap")
