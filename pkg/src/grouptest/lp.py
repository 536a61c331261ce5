"""LP relaxation of the smallest-satisfying-set problem.

The 0-1 program is: minimise sum(z) subject to every positive test holding
at least one unit of z and every negative test holding none.  Items seen in
a negative test are fixed at zero and dropped, which leaves a pure covering
LP over the possible defectives:

    minimise  1'z   subject to  A z >= 1,  z >= 0

solved here with a dense-tableau two-phase primal simplex under Bland's rule.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .decode import DecodeResult, is_satisfying, possible_defectives_mask
from .design import ItemSet, TestDesign, check_outcomes

TOL = 1e-9
ROUNDING_RULES = ("malioutov", "half", "crude", "randomized")


class InconsistentInputError(ValueError):
    """A positive test contains no possible defective (impossible without noise)."""


class SolverError(RuntimeError):
    """The simplex method did not reach an optimum (iteration cap, unboundedness)."""


class RoundingError(RuntimeError):
    """Global error declared by the crude rounding rule on a fractional solution."""


@dataclass(frozen=True)
class CoverLp:
    """Covering LP over ``variables`` (item indices) within a population of ``n``.

    Each constraint is the sorted tuple of variables in one positive test.
    """

    n: int
    variables: tuple[int, ...]
    constraints: tuple[tuple[int, ...], ...]

    def matrix(self, dedupe: bool = True) -> np.ndarray:
        pos = {v: j for j, v in enumerate(self.variables)}
        rows = dict.fromkeys(self.constraints) if dedupe else self.constraints
        a = np.zeros((len(rows), len(self.variables)))
        for r, cons in enumerate(rows):
            a[r, [pos[v] for v in cons]] = 1.0
        return a


@dataclass(frozen=True, eq=False)
class LpSolution:
    values: np.ndarray
    objective: float
    status: str  # "optimal" | "infeasible"
    integral: bool
    iterations: int = 0

    def support(self, tol: float = TOL) -> ItemSet:
        return ItemSet.from_mask(self.values > tol)


def build_relaxation(design: TestDesign, outcomes) -> CoverLp:
    y = check_outcomes(design, outcomes)
    pd_idx = np.flatnonzero(possible_defectives_mask(design, y))
    sub = design.inclusion[y][:, pd_idx]
    constraints = []
    for row in sub:
        cols = np.flatnonzero(row)
        if cols.size == 0:
            raise InconsistentInputError("positive test with no possible defective")
        constraints.append(tuple(pd_idx[cols].tolist()))
    return CoverLp(design.n, tuple(pd_idx.tolist()), tuple(constraints))


def _pivot(tab: np.ndarray, cost: np.ndarray, row: int, col: int) -> None:
    tab[row] /= tab[row, col]
    factor = tab[:, col].copy()
    factor[row] = 0.0
    tab -= np.outer(factor, tab[row])
    cost -= cost[col] * tab[row]


def _bland_loop(tab, cost, basis, n_cols, tol, budget):
    """Run simplex pivots until optimal; returns pivots used.

    Entering: lowest-index column with negative reduced cost.
    Leaving: minimum ratio, ties to the lowest basic variable index.
    """
    used = 0
    while True:
        neg = np.flatnonzero(cost[:n_cols] < -tol)
        if neg.size == 0:
            return used
        if used >= budget:
            raise SolverError(f"simplex iteration cap of {budget} exceeded")
        col = int(neg[0])
        colv = tab[:, col]
        ok = np.flatnonzero(colv > tol)
        if ok.size == 0:
            raise SolverError("LP is unbounded")
        ratios = tab[ok, -1] / colv[ok]
        best = ratios.min()
        tied = ok[ratios <= best + tol]
        row = int(tied[np.argmin(basis[tied])])
        _pivot(tab, cost, row, col)
        basis[row] = col
        used += 1


def simplex_solve(lp: CoverLp, tol: float = TOL, max_iter: int | None = None) -> LpSolution:
    """Solve the covering LP exactly up to floating-point tolerance ``tol``."""
    values = np.zeros(lp.n)
    if any(len(c) == 0 for c in lp.constraints):
        return LpSolution(values, 0.0, "infeasible", False)
    a = lp.matrix(dedupe=True)
    m, nv = a.shape
    if m == 0:
        return LpSolution(values, 0.0, "optimal", True)
    budget = max_iter if max_iter is not None else 50 * (m + nv) + 100

    # columns: z (nv), surplus (m), rhs; artificials are implicit, index nv+m+r
    tab = np.hstack([a, -np.eye(m), np.ones((m, 1))])
    n_real = nv + m
    basis = np.arange(n_real, n_real + m)

    # phase 1: minimise the sum of artificials
    cost = np.concatenate([-a.sum(axis=0), np.ones(m), [-float(m)]])
    used = _bland_loop(tab, cost, basis, n_real, tol, budget)
    if -cost[-1] > tol * max(1, m):
        return LpSolution(values, 0.0, "infeasible", False, used)

    # drive zero-level artificials out of the basis, dropping redundant rows
    keep = np.ones(m, dtype=bool)
    for r in np.flatnonzero(basis >= n_real):
        cand = np.flatnonzero(np.abs(tab[r, :n_real]) > tol)
        if cand.size:
            _pivot(tab, cost, r, int(cand[0]))
            basis[r] = cand[0]
        else:
            keep[r] = False
    tab, basis = tab[keep], basis[keep]

    # phase 2: unit cost on z, zero on surplus
    c = np.concatenate([np.ones(nv), np.zeros(m)])
    cost = np.concatenate([c, [0.0]]) - c[basis] @ tab
    used += _bland_loop(tab, cost, basis, n_real, tol, budget - used)

    z = np.zeros(nv)
    in_z = basis < nv
    z[basis[in_z]] = tab[in_z, -1]
    z[np.abs(z) <= tol] = 0.0
    values[list(lp.variables)] = z
    integral = bool(np.all((np.abs(z) <= tol) | (np.abs(z - 1.0) <= tol)))
    return LpSolution(values, float(z.sum()), "optimal", integral, used)


def round_solution(sol: LpSolution, rule: str = "malioutov",
                   rng: np.random.Generator | None = None, tol: float = TOL) -> ItemSet:
    """Turn a fractional LP optimum into an item set.

    Every rule maps an integral solution to its support.  ``crude`` raises
    :class:`RoundingError` on anything else.
    """
    if rule not in ROUNDING_RULES:
        raise ValueError(f"unknown rounding rule {rule!r}")
    if sol.status != "optimal":
        raise ValueError("can only round an optimal solution")
    z = sol.values
    if sol.integral:
        return ItemSet.from_mask(z > 1.0 - tol)
    if rule == "malioutov":
        return ItemSet.from_mask(z > tol)
    if rule == "half":
        return ItemSet.from_mask(z >= 0.5 - tol)
    if rule == "crude":
        raise RoundingError("fractional LP solution")
    if rng is None:
        raise ValueError("randomized rounding needs an rng")
    return ItemSet.from_mask(rng.random(z.size) < np.clip(z, 0.0, 1.0))


def lp_decode(design: TestDesign, outcomes, rule: str = "malioutov",
              rng: np.random.Generator | None = None, tol: float = TOL) -> DecodeResult:
    try:
        lp = build_relaxation(design, outcomes)
        sol = simplex_solve(lp, tol=tol)
        if sol.status != "optimal":
            raise SolverError(f"LP {sol.status}")
        est = round_solution(sol, rule, rng, tol)
    except (InconsistentInputError, SolverError, RoundingError) as exc:
        return DecodeResult(ItemSet(), False, error=str(exc))
    return DecodeResult(est, is_satisfying(design, outcomes, est),
                        n_possible=len(lp.variables), extra={"lp": sol})


def dump_lp(lp: CoverLp) -> str:
    """Plain-text form: one ``>=1: i j ...`` line per constraint."""
    head = [f"# n: {lp.n}", "# variables: " + " ".join(map(str, lp.variables))]
    return "\n".join(head + [">=1: " + " ".join(map(str, c)) for c in lp.constraints]) + "\n"


def parse_lp(text: str, n: int | None = None) -> CoverLp:
    variables = None
    constraints = []
    for line in text.splitlines():
        line = line.strip()
        if not line:
            continue
        if line.startswith("# n:"):
            n = int(line.split(":", 1)[1]) if n is None else n
        elif line.startswith("# variables:"):
            variables = tuple(int(v) for v in line.split(":", 1)[1].split())
        elif line.startswith(">=1:"):
            constraints.append(tuple(sorted(int(v) for v in line[4:].split())))
        elif not line.startswith("#"):
            raise ValueError(f"unrecognised LP dump line {line!r}")
    if variables is None:
        variables = tuple(sorted({v for c in constraints for v in c}))
    if n is None:
        n = max(variables, default=-1) + 1
    return CoverLp(n, variables, tuple(constraints))
