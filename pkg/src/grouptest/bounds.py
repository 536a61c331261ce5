"""Rate and capacity expressions for Bernoulli nonadaptive group testing.

All rates are in bits per test. Several bounds are max-min problems over the
Bernoulli density parameter ``nu`` (with ``p ~ nu / k``); these are solved by a
grid scan followed by golden-section refinement around the best grid point.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy import optimize

from .design import ParameterError

LOG2E = 1.0 / math.log(2.0)
# 1/(e ln 2) ~ 0.5307: the rate DD reaches at nu = 1
E_LN2_INV = 1.0 / (math.e * math.log(2.0))


@dataclass(frozen=True)
class OptimizerSettings:
    nu_max: float = 8.0
    grid_step: float = 1e-3
    xtol: float = 1e-7

    def grid(self) -> np.ndarray:
        return np.arange(1, int(round(self.nu_max / self.grid_step)) + 1) * self.grid_step


DEFAULT_OPT = OptimizerSettings()


@dataclass(frozen=True)
class TestProfile:
    """Probabilities that a single test holds zero, exactly one, or at least one defective."""

    __test__ = False

    q0: float
    q1: float
    q1plus: float


@dataclass(frozen=True)
class RateCurve:
    name: str
    samples: tuple[tuple[float, float], ...]

    @property
    def thetas(self) -> np.ndarray:
        return np.array([s[0] for s in self.samples])

    @property
    def rates(self) -> np.ndarray:
        return np.array([s[1] for s in self.samples])


def _check_theta(theta: float) -> float:
    theta = float(theta)
    if not 0.0 < theta < 1.0:
        raise ParameterError(f"theta must lie in (0, 1), got {theta}")
    return theta


def binary_entropy(x):
    """h(x) in bits, with h(0) = h(1) = 0."""
    arr = np.asarray(x, dtype=float)
    if np.any((arr < 0) | (arr > 1)) or np.any(np.isnan(arr)):
        raise ParameterError(f"binary entropy needs x in [0, 1], got {x}")
    with np.errstate(divide="ignore", invalid="ignore"):
        h = -arr * np.log2(arr) - (1 - arr) * np.log2(1 - arr)
    h = np.where((arr == 0) | (arr == 1), 0.0, h)
    return float(h) if np.ndim(x) == 0 else h


def test_profile(p: float, k: int) -> TestProfile:
    if not 0.0 <= p <= 1.0 or k < 0:
        raise ParameterError(f"need p in [0, 1] and k >= 0, got p={p}, k={k}")
    q0 = (1.0 - p) ** k
    q1 = k * p * (1.0 - p) ** (k - 1) if k >= 1 else 0.0
    return TestProfile(q0, q1, 1.0 - q0)


def test_profile_asymptotic(nu: float) -> TestProfile:
    """Limit of :func:`test_profile` with ``p = nu / k`` as ``k`` grows."""
    if nu <= 0:
        raise ParameterError(f"nu must be positive, got {nu}")
    q0 = math.exp(-nu)
    return TestProfile(q0, nu * q0, -math.expm1(-nu))


def _xlog_inv(x):
    """x * log2(1/x), zero at x = 0."""
    x = np.asarray(x, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(x > 0, -x * np.log2(np.where(x > 0, x, 1.0)), 0.0)


def dd_entropy_bound(profile: TestProfile) -> float:
    """Bits per test usable by DD: negative tests plus tests with one defective."""
    q1_term = 0.0
    if profile.q1 > 0:
        q1_term = profile.q1 * math.log2(1.0 / profile.q1plus)
    return float(_xlog_inv(profile.q0)) + q1_term


# --- minimands as functions of nu -------------------------------------------

def density_constraint(nu, theta: float):
    """nu e^{-nu} / ln 2 * (1 - theta) / theta."""
    nu = np.asarray(nu, dtype=float)
    return nu * np.exp(-nu) * LOG2E * (1.0 - theta) / theta


def entropy_minimand(nu):
    return binary_entropy(np.exp(-np.asarray(nu, dtype=float)))


def dd_minimand(nu):
    """e^{-nu} log2 e^nu + nu e^{-nu} log2(1 / (1 - e^{-nu}))."""
    nu = np.asarray(nu, dtype=float)
    q0 = np.exp(-nu)
    return q0 * nu * LOG2E - nu * q0 * np.log2(-np.expm1(-nu))


def maxmin_over_nu(funcs: Sequence[Callable], opt: OptimizerSettings = DEFAULT_OPT) -> tuple[float, float]:
    """Return ``(max over nu > 0 of min_f f(nu), argmax nu)``."""
    def objective(nu):
        return np.min([np.broadcast_to(f(nu), np.shape(nu)) for f in funcs], axis=0)

    grid = opt.grid()
    vals = objective(grid)
    i = int(np.argmax(vals))
    best_nu, best = float(grid[i]), float(vals[i])
    if 0 < i < len(grid) - 1:
        a, b, c = grid[i - 1], grid[i], grid[i + 1]
        # golden-section needs a strict bracket; a flat top means the grid point is already exact
        if vals[i] > vals[i - 1] and vals[i] > vals[i + 1]:
            res = optimize.minimize_scalar(lambda v: -float(objective(v)), bracket=(a, b, c),
                                           method="golden", options={"xtol": opt.xtol})
            if -res.fun >= best:
                best_nu, best = float(res.x), float(-res.fun)
    return best, best_nu


# --- named rates --------------------------------------------------------------

def capacity(theta: float, opt: OptimizerSettings = DEFAULT_OPT) -> float:
    """Maximum achievable rate of Bernoulli nonadaptive testing, any decoder."""
    return capacity_nu(theta, opt)[0]


def capacity_nu(theta: float, opt: OptimizerSettings = DEFAULT_OPT) -> tuple[float, float]:
    theta = _check_theta(theta)
    return maxmin_over_nu([entropy_minimand, lambda v: density_constraint(v, theta)], opt)


def dd_lower_rate(theta: float) -> float:
    theta = _check_theta(theta)
    return E_LN2_INV * min(1.0, (1.0 - theta) / theta)


def dd_upper_rate(theta: float, opt: OptimizerSettings = DEFAULT_OPT) -> float:
    return dd_upper_nu(theta, opt)[0]


def dd_upper_nu(theta: float, opt: OptimizerSettings = DEFAULT_OPT) -> tuple[float, float]:
    theta = _check_theta(theta)
    return maxmin_over_nu([dd_minimand, lambda v: density_constraint(v, theta)], opt)


def dd_plateau(opt: OptimizerSettings = DEFAULT_OPT) -> tuple[float, float]:
    """Maximum of the DD minimand alone and the nu attaining it (~0.853 bits)."""
    return maxmin_over_nu([dd_minimand], opt)


def theta_star() -> float:
    """Sparsity below which DD is strictly below capacity."""
    return 1.0 / (2.0 - math.log(1.0 - math.exp(-1.0)))


def comp_rate(theta: float) -> float:
    return E_LN2_INV * (1.0 - _check_theta(theta))


def comp_upper() -> float:
    return E_LN2_INV


def lipo_coefficient() -> float:
    return 1.0 / (8.0 / 3.0 * math.e ** 2 * math.log(2.0))


def lipo_rate(theta: float) -> float:
    theta = _check_theta(theta)
    return lipo_coefficient() * (1.0 - theta) / (1.0 + theta)


def counting_bound_tests(n: int, k: int) -> float:
    """log2 C(n, k): tests needed by the counting bound."""
    if not 0 <= k <= n:
        raise ParameterError(f"need 0 <= k <= n, got k={k}, n={n}")
    k = min(k, n - k)
    return math.fsum(math.log2((n - i) / (i + 1)) for i in range(k))


def achieved_rate(n: int, k: int, t: int) -> float:
    if t < 1:
        raise ParameterError(f"need t >= 1, got {t}")
    return counting_bound_tests(n, k) / t


# --- curves -------------------------------------------------------------------

CURVES: dict[str, Callable[[float], float]] = {
    "capacity": capacity,
    "dd_lower": dd_lower_rate,
    "dd_upper": dd_upper_rate,
    "comp": comp_rate,
    "lipo": lipo_rate,
}


def theta_grid(lo: float = 0.01, hi: float = 0.99, step: float = 0.01) -> np.ndarray:
    if step <= 0 or lo > hi:
        raise ParameterError(f"bad grid {lo}:{hi}:{step}")
    count = int(math.floor((hi - lo) / step + 1e-9)) + 1
    grid = np.round(lo + step * np.arange(count), 12)
    if grid[0] <= 0 or grid[-1] >= 1:
        raise ParameterError("theta grid must lie inside (0, 1)")
    return grid


def rate_curve(name: str, thetas) -> RateCurve:
    try:
        fn = CURVES[name]
    except KeyError:
        raise ParameterError(f"unknown curve {name!r}; choose from {sorted(CURVES)}") from None
    thetas = np.asarray(thetas, dtype=float)
    if np.any(np.diff(thetas) <= 0):
        raise ParameterError("thetas must be strictly increasing")
    return RateCurve(name, tuple((float(th), float(fn(th))) for th in thetas))


def crossovers(xtol: float = 1e-6) -> dict[str, float]:
    """Sparsity values where the closed forms of the curves change regime.

    - ``capacity_flat_end``: capacity stops being 1 (near 1/3)
    - ``capacity_simple_start``: capacity equals its nu = 1 branch from here on (~0.359)
    - ``dd_upper_plateau_end``: the DD upper bound leaves its plateau (~0.357)
    - ``theta_star``: DD upper bound meets capacity (~0.407)
    """
    plateau, nu_plateau = dd_plateau()
    h1 = binary_entropy(math.exp(-1.0))

    def root(g):
        return float(optimize.bisect(g, 0.05, 0.95, xtol=xtol))

    return {
        "capacity_flat_end": root(lambda th: float(density_constraint(math.log(2.0), th)) - 1.0),
        "capacity_simple_start": root(lambda th: float(density_constraint(1.0, th)) - h1),
        "dd_upper_plateau_end": root(lambda th: float(density_constraint(nu_plateau, th)) - plateau),
        "theta_star": root(lambda th: float(density_constraint(1.0, th)) - float(dd_minimand(1.0))),
        "dd_plateau_nu": nu_plateau,
        "dd_plateau_rate": plateau,
    }
