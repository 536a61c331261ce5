"""Monte Carlo success-probability sweeps and the Property-P audit.

Every trial is keyed by ``(master_seed, t, trial_index)``; the key seeds a
counter-based Philox stream, so results do not depend on execution order or
on how trials are split across worker processes.  All decoders at one key see
the same defective set, design and outcomes.
"""
from __future__ import annotations

import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from statsmodels.stats.proportion import proportion_confint

from .decode import (DecodeResult, comp_decode, dd_decode, scomp_decode,
                     smallest_satisfying_oracle, ORACLE_MAX_ITEMS)
from .design import (ItemSet, ParameterError, TestDesign, bernoulli_design,
                     compute_outcomes, p_from_k, sample_defective_set)
from .lp import (ROUNDING_RULES, InconsistentInputError, RoundingError, SolverError,
                 build_relaxation, lp_decode, round_solution, simplex_solve)

DECODERS = ("comp", "dd", "scomp", "lp-malioutov", "lp-crude", "lp-half", "lp-randomized", "oracle")
_DECODER_STREAM = {name: i for i, name in enumerate(DECODERS)}


def _rng(key, *extra) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([*key, *extra])))


def trial_key(master_seed: int, t: int, trial: int) -> tuple[int, int, int]:
    return (int(master_seed) & (2**64 - 1), int(t), int(trial))


@dataclass(frozen=True)
class Instance:
    defectives: ItemSet
    design: TestDesign
    outcomes: np.ndarray


def draw_instance(n: int, k: int, p: float, t: int, key) -> Instance:
    rng = _rng(key, 0)
    defectives = sample_defective_set(n, k, rng)
    design = bernoulli_design(n, t, p, rng)
    return Instance(defectives, design, compute_outcomes(design, defectives))


def decode_with(name: str, inst: Instance, key) -> DecodeResult:
    design, y = inst.design, inst.outcomes
    if name == "comp":
        return comp_decode(design, y)
    if name == "dd":
        return dd_decode(design, y)
    if name == "scomp":
        return scomp_decode(design, y)
    if name == "scomp-random":
        return scomp_decode(design, y, "random", _rng(key, 2))
    if name.startswith("lp-") and name[3:] in ROUNDING_RULES:
        return lp_decode(design, y, name[3:], _rng(key, 1, _DECODER_STREAM[name]))
    if name == "oracle":
        res = smallest_satisfying_oracle(design, y)
        if res.unique:
            return DecodeResult(res.estimate, True)
        return DecodeResult(ItemSet(), False, error=res.status)
    raise ParameterError(f"unknown decoder {name!r}")


def run_trial(n: int, k: int, p: float, t: int, decoder: str, trial_seed) -> tuple[bool, DecodeResult]:
    """Draw one instance and decode it; success means exact recovery.

    ``trial_seed`` is an int or a key tuple as produced by :func:`trial_key`.
    """
    key = (trial_seed,) if np.isscalar(trial_seed) else tuple(trial_seed)
    inst = draw_instance(n, k, p, t, key)
    res = decode_with(decoder, inst, key)
    return (not res.failed and res.estimate == inst.defectives), res


@dataclass(frozen=True)
class SweepConfig:
    n: int
    k: int
    t_values: tuple[int, ...]
    trials: int
    decoders: tuple[str, ...] = ("comp", "dd", "scomp", "lp-malioutov")
    p_mode: str = "reciprocal"  # reciprocal | nu_over_k | explicit
    nu: float = 1.0
    p: float | None = None
    master_seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "t_values", tuple(int(t) for t in self.t_values))
        object.__setattr__(self, "decoders", tuple(self.decoders))
        if self.trials < 1:
            raise ParameterError("trials must be at least 1")
        if not self.t_values or any(a >= b for a, b in zip(self.t_values, self.t_values[1:])):
            raise ParameterError("t_values must be non-empty and strictly increasing")
        if self.t_values[0] < 1:
            raise ParameterError("t values must be positive")
        if not 0 <= self.k <= self.n:
            raise ParameterError("need 0 <= k <= n")
        bad = [d for d in self.decoders if d not in DECODERS]
        if bad:
            raise ParameterError(f"unknown decoders {bad}; choose from {list(DECODERS)}")
        if "oracle" in self.decoders and self.n > ORACLE_MAX_ITEMS:
            raise ParameterError(f"oracle decoder needs n <= {ORACLE_MAX_ITEMS}")
        self.p_value  # validate

    @property
    def p_value(self) -> float:
        if self.p_mode == "explicit":
            if self.p is None or not 0 <= self.p <= 1:
                raise ParameterError("explicit p mode needs p in [0, 1]")
            return float(self.p)
        return p_from_k(self.k, self.p_mode, self.nu)


@dataclass
class PointStats:
    successes: int = 0
    trials: int = 0
    dd_satisfying: int = 0
    agree_when_dd_satisfying: int = 0
    # matched-instance dominance: DD succeeded but this decoder did not
    dominance_violations: int = 0
    total_time: float = field(default=0.0, compare=False)

    @property
    def success_rate(self) -> float:
        return self.successes / self.trials

    @property
    def mean_decode_time(self) -> float:
        return self.total_time / self.trials if self.trials else 0.0

    def wilson(self, alpha: float = 0.05) -> tuple[float, float]:
        lo, hi = proportion_confint(self.successes, self.trials, alpha=alpha, method="wilson")
        return float(lo), float(hi)

    def merge(self, other: "PointStats") -> None:
        self.successes += other.successes
        self.trials += other.trials
        self.dd_satisfying += other.dd_satisfying
        self.agree_when_dd_satisfying += other.agree_when_dd_satisfying
        self.dominance_violations += other.dominance_violations
        self.total_time += other.total_time


@dataclass
class SweepResult:
    config: SweepConfig
    points: dict[tuple[str, int], PointStats]

    def rate(self, decoder: str, t: int) -> float:
        return self.points[decoder, t].success_rate

    def curve(self, decoder: str) -> np.ndarray:
        return np.array([self.rate(decoder, t) for t in self.config.t_values])

    def rows(self) -> list[dict]:
        out = []
        for d in self.config.decoders:
            for t in self.config.t_values:
                st = self.points[d, t]
                lo, hi = st.wilson()
                out.append({"decoder": d, "t": t, "trials": st.trials, "successes": st.successes,
                            "success_rate": st.success_rate, "ci_low": lo, "ci_high": hi})
        return out


def _run_block(config: SweepConfig, t: int, start: int, stop: int) -> dict[str, PointStats]:
    n, k, p = config.n, config.k, config.p_value
    decoders = config.decoders
    stats = {d: PointStats() for d in decoders}
    for trial in range(start, stop):
        key = trial_key(config.master_seed, t, trial)
        inst = draw_instance(n, k, p, t, key)
        dd = dd_decode(inst.design, inst.outcomes)
        dd_ok = dd.estimate == inst.defectives
        for d in decoders:
            t0 = time.perf_counter()
            res = dd if d == "dd" else decode_with(d, inst, key)
            elapsed = time.perf_counter() - t0
            ok = not res.failed and res.estimate == inst.defectives
            st = stats[d]
            st.trials += 1
            st.successes += ok
            st.total_time += elapsed
            if dd.satisfying:
                st.dd_satisfying += 1
                st.agree_when_dd_satisfying += (not res.failed and res.estimate == dd.estimate)
            if dd_ok and not ok:
                st.dominance_violations += 1
    return stats


def run_sweep(config: SweepConfig, workers: int = 1, chunk: int = 100) -> SweepResult:
    """Aggregate ``config.trials`` matched trials per (decoder, t)."""
    blocks = [(t, s, min(s + chunk, config.trials))
              for t in config.t_values for s in range(0, config.trials, chunk)]
    points = {(d, t): PointStats() for d in config.decoders for t in config.t_values}
    if workers > 1:
        with ProcessPoolExecutor(workers) as pool:
            futures = [(t, pool.submit(_run_block, config, t, s, e)) for t, s, e in blocks]
            parts = [(t, f.result()) for t, f in futures]
    else:
        parts = [(t, _run_block(config, t, s, e)) for t, s, e in blocks]
    for t, part in parts:
        for d, st in part.items():
            points[d, t].merge(st)
    return SweepResult(config, points)


# --- Property-P audit -----------------------------------------------------------

AUDIT_DECODERS = ("scomp", "scomp-random") + tuple(f"lp-{r}" for r in ROUNDING_RULES)


@dataclass
class AuditReport:
    n: int
    k: int
    p: float
    t: int
    instances: int = 0
    dd_satisfying: int = 0
    dd_success: int = 0
    violations: dict[str, int] = field(default_factory=lambda: {d: 0 for d in AUDIT_DECODERS})
    lp_nonintegral: int = 0
    lp_not_dd_indicator: int = 0
    oracle_checked: int = 0
    oracle_mismatches: int = 0
    counterexamples: list[dict] = field(default_factory=list)

    @property
    def total_violations(self) -> int:
        return (sum(self.violations.values()) + self.lp_nonintegral
                + self.lp_not_dd_indicator + self.oracle_mismatches)

    def merge(self, other: "AuditReport") -> None:
        self.instances += other.instances
        self.dd_satisfying += other.dd_satisfying
        self.dd_success += other.dd_success
        for d, v in other.violations.items():
            self.violations[d] += v
        self.lp_nonintegral += other.lp_nonintegral
        self.lp_not_dd_indicator += other.lp_not_dd_indicator
        self.oracle_checked += other.oracle_checked
        self.oracle_mismatches += other.oracle_mismatches
        self.counterexamples.extend(other.counterexamples)

    def as_dict(self) -> dict:
        return {"n": self.n, "k": self.k, "p": self.p, "t": self.t, "instances": self.instances,
                "dd_satisfying": self.dd_satisfying, "dd_success": self.dd_success,
                "violations": dict(self.violations), "lp_nonintegral": self.lp_nonintegral,
                "lp_not_dd_indicator": self.lp_not_dd_indicator,
                "oracle_checked": self.oracle_checked, "oracle_mismatches": self.oracle_mismatches,
                "total_violations": self.total_violations,
                "counterexamples": list(self.counterexamples)}


def property_p_audit(n: int, k: int, p: float, t: int, trials: int, master_seed: int = 0,
                     oracle: bool | None = None, start: int = 0,
                     max_counterexamples: int = 20) -> AuditReport:
    """Check that SCOMP and every LP rule return the DD set whenever it is satisfying.

    With ``oracle`` (default: on when ``n`` is small enough) it also checks that
    the exhaustive search finds that same set as the unique minimum.
    """
    if oracle is None:
        oracle = n <= ORACLE_MAX_ITEMS
    rep = AuditReport(n, k, p, t)

    def flag(key, what, **info):
        if len(rep.counterexamples) < max_counterexamples:
            rep.counterexamples.append({"key": list(key), "check": what, **info})

    for trial in range(start, start + trials):
        key = trial_key(master_seed, t, trial)
        inst = draw_instance(n, k, p, t, key)
        dd = dd_decode(inst.design, inst.outcomes)
        rep.instances += 1
        rep.dd_success += dd.estimate == inst.defectives
        if not dd.satisfying:
            continue
        rep.dd_satisfying += 1
        for d in ("scomp", "scomp-random"):
            res = decode_with(d, inst, key)
            if res.estimate != dd.estimate:
                rep.violations[d] += 1
                flag(key, d, dd=list(dd.estimate), got=list(res.estimate))
        # one LP solve per instance, every rounding rule applied to it
        try:
            sol = simplex_solve(build_relaxation(inst.design, inst.outcomes))
        except (InconsistentInputError, SolverError) as exc:
            for r in ROUNDING_RULES:
                rep.violations[f"lp-{r}"] += 1
            flag(key, "lp", error=str(exc))
            sol = None
        if sol is not None:
            if not sol.integral:
                rep.lp_nonintegral += 1
                flag(key, "lp-integral")
            if not np.allclose(sol.values, dd.estimate.mask(n).astype(float), atol=1e-9):
                rep.lp_not_dd_indicator += 1
                flag(key, "lp-indicator")
            for r in ROUNDING_RULES:
                try:
                    got = round_solution(sol, r, _rng(key, 1, _DECODER_STREAM[f"lp-{r}"]))
                except RoundingError:
                    got = None
                if got != dd.estimate:
                    rep.violations[f"lp-{r}"] += 1
                    flag(key, f"lp-{r}", dd=list(dd.estimate), got=None if got is None else list(got))
        if oracle:
            res = smallest_satisfying_oracle(inst.design, inst.outcomes)
            rep.oracle_checked += 1
            if not res.unique or res.estimate != dd.estimate:
                rep.oracle_mismatches += 1
                flag(key, "oracle", status=res.status)
    return rep
