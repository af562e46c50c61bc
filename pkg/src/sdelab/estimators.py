"""Monte Carlo estimators, moment bounds and test-function evaluation.

Path batches are simulated in fixed-size chunks of consecutive stream ids.
Chunks may be executed by a thread pool, but chunk boundaries and the
reduction order are fixed, so results are bit-identical for any worker
count. Stopped (exploded) paths are never silently dropped: every report
carries the excluded count.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import EstimationError, ResourceError, UsageError
from .euler import BatchWalk
from .models import ControlFunction, SdeSystem
from .noise import MAX_LEVEL, reduce_to_level, sample_increment_batch
from .quadrature import adaptive_simpson
from .serialize import csv_text

__all__ = [
    "MomentReport",
    "BoundConstants",
    "MomentBound",
    "LevelCurve",
    "ExplosionStats",
    "ConfluenceStats",
    "MonotoneStats",
    "TestFunctionEval",
    "estimate_sup_moment",
    "moment_bound",
    "explosion_stats",
    "confluence_stats",
    "monotonicity_stats",
    "convergence_diagnostic",
    "strong_error_vs_oracle",
    "eval_test_function",
]

CHUNK = 256


def _chunk_ranges(paths: int) -> list[tuple[int, int]]:
    return [(lo, min(lo + CHUNK, paths)) for lo in range(0, paths, CHUNK)]


def _map_chunks(fn: Callable[[int, int], object], paths: int, workers: int) -> list:
    """Apply fn to fixed chunk ranges; reduction order never depends on workers."""
    ranges = _chunk_ranges(paths)
    if workers <= 1 or len(ranges) <= 1:
        return [fn(lo, hi) for lo, hi in ranges]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        futures = [pool.submit(fn, lo, hi) for lo, hi in ranges]
        return [f.result() for f in futures]


def _mean_ci(values: np.ndarray) -> tuple[float, float]:
    n = values.size
    if n == 0:
        return math.nan, math.nan
    mean = float(values.mean())
    if n < 2:
        return mean, 0.0
    half = 1.96 * float(values.std(ddof=1)) / math.sqrt(n)
    return mean, half


# --- maximum-process moments -------------------------------------------------


@dataclass(frozen=True)
class BoundConstants:
    """Constants entering the maximum-process moment bound.

    Defaults are conservative power-mean / martingale-inequality constants:
    c_p = 3^(p/2-1) (three-term), c_p_dprime = 2^(p/2-1) (two-term) and
    c_p_prime = p^(p/2) for the martingale maximal term. All overridable.
    """

    p: float
    c_p: float
    c_p_prime: float
    c_p_dprime: float

    @classmethod
    def default(cls, p: float) -> "BoundConstants":
        return cls(
            p=p,
            c_p=3.0 ** (p / 2.0 - 1.0),
            c_p_prime=p ** (p / 2.0),
            c_p_dprime=2.0 ** (p / 2.0 - 1.0),
        )

    def to_dict(self) -> dict:
        return {"p": self.p, "C_p": self.c_p, "C_p_prime": self.c_p_prime,
                "C_p_dprime": self.c_p_dprime}


@dataclass(frozen=True)
class MomentBound:
    """A computed bound value, kept in log space so it is always finite."""

    branch: str
    log_value: float
    value: float  # exp(log_value); inf when it overflows float64
    constants: BoundConstants
    integrals: dict

    def to_dict(self) -> dict:
        return {"branch": self.branch, "log_value": self.log_value,
                "value": self.value, "constants": self.constants.to_dict(),
                "integrals": self.integrals}


def _integral(f: Callable[[float], float], power: float, t: float) -> float:
    def integrand(s: float) -> float:
        v = float(f(s))
        return v ** power if v >= 0 else math.nan  # f must be nonnegative
    res = adaptive_simpson(integrand, 0.0, t, strict=True)
    return res.value


def moment_bound(
    f: Callable[[float], float],
    p: float,
    t: float,
    x0,
    constants: Optional[BoundConstants] = None,
    branch: str = "i",
) -> MomentBound:
    """Upper bound for E(sup_{s<=t} |X_s|^p) under the moment condition.

    branch 'i' needs f locally L^p: value = A exp(B int f^(p/2) + C int f^p).
    branch 'ii' needs f locally L^(2p/(p-2)): value = A exp(B1 t) with B1
    built from the (p-2)/p-power integrals. A, B, C follow the Gronwall
    closure: A = 1 + 2 c_p |x0|^p + 2 c_p c''_p (int f)^(p/2)
    + (c_p c'_p c''_p)^2 (int f^2)^(p/2), B = 2 c_p c''_p,
    C = (c_p c'_p c''_p)^2.
    """
    if p <= 2:
        raise UsageError(f"moment order p must exceed 2, got p={p}")
    if t <= 0:
        raise UsageError(f"horizon must be positive, got {t}")
    if branch not in ("i", "ii"):
        raise UsageError(f"branch must be 'i' or 'ii', got '{branch}'")
    constants = constants or BoundConstants.default(p)
    x0 = np.asarray(x0, dtype=float).reshape(-1)

    cp, cpp, cdp = constants.c_p, constants.c_p_prime, constants.c_p_dprime
    i_f = _integral(f, 1.0, t)
    i_f2 = _integral(f, 2.0, t)
    big_a = (1.0 + 2.0 * cp * float(np.linalg.norm(x0)) ** p
             + 2.0 * cp * cdp * i_f ** (p / 2.0)
             + (cp * cpp * cdp) ** 2 * i_f2 ** (p / 2.0))
    big_b = 2.0 * cp * cdp
    big_c = (cp * cpp * cdp) ** 2

    integrals = {"int_f": i_f, "int_f2": i_f2}
    if branch == "i":
        i_fp2 = _integral(f, p / 2.0, t)
        i_fp = _integral(f, p, t)
        integrals.update({"int_f_p2": i_fp2, "int_f_p": i_fp})
        log_value = math.log(big_a) + big_b * i_fp2 + big_c * i_fp
    else:
        r1 = p / (p - 2.0)
        i_r1 = _integral(f, r1, t)
        i_r2 = _integral(f, 2.0 * r1, t)
        integrals.update({"int_f_p_over_p2": i_r1, "int_f_2p_over_p2": i_r2})
        b1 = big_b * i_r1 ** ((p - 2.0) / p) + big_c * i_r2 ** ((p - 2.0) / p)
        integrals["B1"] = b1
        log_value = math.log(big_a) + b1 * t
    integrals.update({"A": big_a, "B": big_b, "C": big_c})
    value = math.exp(log_value) if log_value < 709.0 else math.inf
    return MomentBound(branch=branch, log_value=log_value, value=value,
                       constants=constants, integrals=integrals)


@dataclass
class MomentReport:
    """Monte Carlo estimate of E(sup_{s<=t} |X_s|^p) plus optional bounds.

    The estimate uses the grid maximum, an underestimate of the continuous
    sup; `level` is recorded so the bias is reviewable. Bounds carry their
    constants verbatim and stay comparable in log space even when exp
    overflows.
    """

    p: float
    t: float
    estimate: float
    ci_halfwidth: float
    paths: int
    level: int
    excluded_paths: int
    explosion: bool
    seed: int
    x0: list
    bound_i: Optional[MomentBound] = None
    bound_ii: Optional[MomentBound] = None

    def to_dict(self) -> dict:
        return {
            "p": self.p, "t": self.t, "estimate": self.estimate,
            "ci_halfwidth": self.ci_halfwidth, "paths": self.paths,
            "level": self.level, "excluded_paths": self.excluded_paths,
            "explosion": self.explosion, "seed": self.seed, "x0": self.x0,
            "bound_i": self.bound_i.to_dict() if self.bound_i else None,
            "bound_ii": self.bound_ii.to_dict() if self.bound_ii else None,
        }


def _sup_chunk(system: SdeSystem, x0: np.ndarray, level: int, T: float,
               R_stop: float, seed: int, lo: int, hi: int):
    P = hi - lo
    inc = sample_increment_batch(system.m, T, level, seed, range(lo, hi))
    h = T / (1 << level)
    walk = BatchWalk(system, np.tile(x0, (P, 1)), h, R_stop)
    sup = np.full(P, float(np.linalg.norm(x0)))
    for k in range(1 << level):
        walk.step(k * h, inc[:, k, :])
        finite = np.isfinite(walk.X).all(axis=1)
        norms = np.linalg.norm(np.where(finite[:, None], walk.X, 0.0), axis=1)
        sup = np.maximum(sup, norms)
        if not walk.active.any():
            break
    return sup, walk.reason.copy(), walk.exit_step.copy()


def estimate_sup_moment(
    system: SdeSystem,
    p: float,
    t: float,
    level: int,
    paths: int,
    seed: int,
    x0,
    R_stop: float = 1e6,
    workers: int = 1,
) -> MomentReport:
    """Estimate E(sup_{s<=t} |X_s|^p) by Monte Carlo over `paths` streams."""
    if p <= 2:
        raise UsageError(f"moment order p must exceed 2, got p={p}")
    x0 = np.asarray(x0, dtype=float).reshape(-1)
    parts = _map_chunks(
        lambda lo, hi: _sup_chunk(system, x0, level, t, R_stop, seed, lo, hi),
        paths, workers)
    sup = np.concatenate([s for s, _, _ in parts])
    reason = np.concatenate([r for _, r, _ in parts])
    ok = reason == 0
    excluded = int((~ok).sum())
    if excluded == paths:
        raise EstimationError(
            f"all {paths} paths stopped before t={t} (explosion fraction 1.0)"
        )
    est, half = _mean_ci(sup[ok] ** p)
    return MomentReport(p=p, t=t, estimate=est, ci_halfwidth=half, paths=paths,
                        level=level, excluded_paths=excluded,
                        explosion=excluded > 0, seed=seed, x0=x0.tolist())


# --- explosion / confluence / monotonicity statistics ------------------------


@dataclass(frozen=True)
class ExplosionStats:
    frequency: float
    paths: int
    exploded: int
    horizon: float
    level: int
    R_stop: float
    seed: int
    exit_time_histogram: dict  # {"edges": [...], "counts": [...]}
    exit_time_quantiles: dict

    def to_dict(self) -> dict:
        return {
            "frequency": self.frequency, "paths": self.paths, "exploded": self.exploded,
            "horizon": self.horizon, "level": self.level, "R_stop": self.R_stop,
            "seed": self.seed, "exit_time_histogram": self.exit_time_histogram,
            "exit_time_quantiles": self.exit_time_quantiles,
        }


def explosion_stats(
    system: SdeSystem,
    R_stop: float,
    T: float,
    level: int,
    paths: int,
    seed: int,
    x0,
    workers: int = 1,
    bins: int = 20,
) -> ExplosionStats:
    """Frequency of radius exhaustion before T plus the first-exit histogram."""
    x0 = np.asarray(x0, dtype=float).reshape(-1)
    parts = _map_chunks(
        lambda lo, hi: _sup_chunk(system, x0, level, T, R_stop, seed, lo, hi),
        paths, workers)
    reason = np.concatenate([r for _, r, _ in parts])
    exit_step = np.concatenate([e for _, _, e in parts])
    h = T / (1 << level)
    stopped = reason != 0
    times = exit_step[stopped] * h
    counts, edges = np.histogram(times, bins=bins, range=(0.0, T))
    if stopped.any():
        qs = {f"q{int(q*100)}": float(np.quantile(times, q)) for q in (0.0, 0.25, 0.5, 0.75, 1.0)}
    else:
        qs = {}
    return ExplosionStats(
        frequency=float(stopped.mean()), paths=paths, exploded=int(stopped.sum()),
        horizon=T, level=level, R_stop=R_stop, seed=seed,
        exit_time_histogram={"edges": edges.tolist(), "counts": counts.tolist()},
        exit_time_quantiles=qs,
    )


def _pair_chunk(system: SdeSystem, x0: np.ndarray, y0: np.ndarray, level: int,
                T: float, R_stop: float, seed: int, eps2: np.ndarray,
                lo: int, hi: int):
    """Coupled two-start chunk: min distance, per-eps first passage, ordering."""
    P = hi - lo
    inc = sample_increment_batch(system.m, T, level, seed, range(lo, hi))
    h = T / (1 << level)
    wx = BatchWalk(system, np.tile(x0, (P, 1)), h, R_stop)
    wy = BatchWalk(system, np.tile(y0, (P, 1)), h, R_stop)
    d0 = float(np.sum((x0 - y0) ** 2))
    min_d2 = np.full(P, d0)
    passage = np.full((len(eps2), P), -1, dtype=np.int64)
    for j, e2 in enumerate(eps2):
        if d0 <= e2:
            passage[j] = 0
    order_violated = np.zeros(P, dtype=bool)
    for k in range(1 << level):
        dB = inc[:, k, :]
        wx.step(k * h, dB)
        wy.step(k * h, dB)
        both = wx.active & wy.active
        d2 = np.sum((wx.X - wy.X) ** 2, axis=1)
        min_d2 = np.where(both, np.minimum(min_d2, d2), min_d2)
        for j, e2 in enumerate(eps2):
            hit = both & (passage[j] < 0) & (d2 <= e2)
            passage[j, hit] = k + 1
        if system.d == 1:
            order_violated |= both & (wx.X[:, 0] > wy.X[:, 0])
        if not (wx.active.any() or wy.active.any()):
            break
    stopped = (wx.reason != 0) | (wy.reason != 0)
    return np.sqrt(min_d2), passage, order_violated, stopped


@dataclass(frozen=True)
class ConfluenceStats:
    eps: list
    frequencies: list  # fraction of paths with first passage <= T, per eps
    min_distances: list
    min_distance_quantiles: dict
    paths: int
    excluded: int
    horizon: float
    level: int
    seed: int

    def to_dict(self) -> dict:
        return {
            "eps": self.eps, "frequencies": self.frequencies,
            "min_distances": self.min_distances,
            "min_distance_quantiles": self.min_distance_quantiles,
            "paths": self.paths, "excluded": self.excluded,
            "horizon": self.horizon, "level": self.level, "seed": self.seed,
        }


def confluence_stats(
    system: SdeSystem,
    x0,
    y0,
    eps_list: Sequence[float],
    T: float,
    level: int,
    paths: int,
    seed: int,
    R_stop: float = 1e6,
    workers: int = 1,
) -> ConfluenceStats:
    """Per-eps frequency of meeting below eps before T, plus min distances."""
    x0 = np.asarray(x0, dtype=float).reshape(-1)
    y0 = np.asarray(y0, dtype=float).reshape(-1)
    if np.array_equal(x0, y0):
        raise UsageError("x0 and y0 must differ")
    eps = np.asarray(sorted(float(e) for e in eps_list))
    if eps.size == 0 or eps.min() <= 0:
        raise UsageError("eps thresholds must be positive")
    eps2 = eps**2
    parts = _map_chunks(
        lambda lo, hi: _pair_chunk(system, x0, y0, level, T, R_stop, seed, eps2, lo, hi),
        paths, workers)
    min_d = np.concatenate([p[0] for p in parts])
    passage = np.concatenate([p[1] for p in parts], axis=1)
    stopped = np.concatenate([p[3] for p in parts])
    ok = ~stopped
    n_ok = int(ok.sum())
    if n_ok == 0:
        raise EstimationError("all coupled paths stopped before the horizon")
    freqs = [float((passage[j][ok] >= 0).mean()) for j in range(eps.size)]
    quant = {f"q{int(q*100)}": float(np.quantile(min_d[ok], q))
             for q in (0.0, 0.25, 0.5, 0.75, 1.0)}
    return ConfluenceStats(
        eps=eps.tolist(), frequencies=freqs, min_distances=min_d[ok].tolist(),
        min_distance_quantiles=quant, paths=paths, excluded=int(stopped.sum()),
        horizon=T, level=level, seed=seed,
    )


@dataclass(frozen=True)
class MonotoneStats:
    violation_fraction: float
    paths: int
    excluded: int
    horizon: float
    level: int
    seed: int

    def to_dict(self) -> dict:
        return {
            "violation_fraction": self.violation_fraction, "paths": self.paths,
            "excluded": self.excluded, "horizon": self.horizon,
            "level": self.level, "seed": self.seed,
        }


def monotonicity_stats(
    system: SdeSystem,
    x0: float,
    y0: float,
    T: float,
    level: int,
    paths: int,
    seed: int,
    R_stop: float = 1e6,
    workers: int = 1,
) -> MonotoneStats:
    """Fraction of coupled 1D paths whose ordering X(x0) <= X(y0) ever flips."""
    if system.d != 1 or system.m != 1:
        raise UsageError(f"stochastic monotonicity needs d = m = 1, got d={system.d}, m={system.m}")
    x0f, y0f = float(np.asarray(x0).reshape(())), float(np.asarray(y0).reshape(()))
    if x0f == y0f:
        raise UsageError("x0 and y0 must differ")
    if x0f > y0f:
        raise UsageError(f"need x0 < y0, got x0={x0f} > y0={y0f}")
    xv = np.array([x0f])
    yv = np.array([y0f])
    parts = _map_chunks(
        lambda lo, hi: _pair_chunk(system, xv, yv, level, T, R_stop, seed,
                                   np.empty(0), lo, hi),
        paths, workers)
    violated = np.concatenate([p[2] for p in parts])
    stopped = np.concatenate([p[3] for p in parts])
    ok = ~stopped
    if not ok.any():
        raise EstimationError("all coupled paths stopped before the horizon")
    return MonotoneStats(
        violation_fraction=float(violated[ok].mean()), paths=paths,
        excluded=int(stopped.sum()), horizon=T, level=level, seed=seed,
    )


# --- convergence and strong-error curves -------------------------------------


@dataclass(frozen=True)
class LevelCurve:
    """Per-level values with confidence halfwidths (convergence / error curves)."""

    levels: list
    values: list
    ci_halfwidths: list
    excluded: list
    paths: int
    seed: int
    kind: str
    slope: Optional[float] = None  # log-log order in h, when fitted

    def to_csv(self) -> str:
        rows = [[int(l), float(v), float(c)]
                for l, v, c in zip(self.levels, self.values, self.ci_halfwidths)]
        return csv_text(["level", "value", "ci_halfwidth"], rows)

    def to_dict(self) -> dict:
        return {
            "levels": self.levels, "values": self.values,
            "ci_halfwidths": self.ci_halfwidths, "excluded": self.excluded,
            "paths": self.paths, "seed": self.seed, "kind": self.kind,
            "slope": self.slope,
        }


def _converge_chunk(system: SdeSystem, x0: np.ndarray, T: float, levels, level_ref: int,
                    R_stop: float, seed: int, lo: int, hi: int):
    P = hi - lo
    l_max = max(levels)
    inc_ref = sample_increment_batch(system.m, T, level_ref, seed, range(lo, hi))
    h_ref = T / (1 << level_ref)
    record_stride = 1 << (level_ref - l_max)

    walk = BatchWalk(system, np.tile(x0, (P, 1)), h_ref, R_stop)
    ref_states = np.empty((1 << l_max, P, x0.size))
    for k in range(1 << level_ref):
        walk.step(k * h_ref, inc_ref[:, k, :])
        if (k + 1) % record_stride == 0:
            ref_states[(k + 1) // record_stride - 1] = walk.X
    ref_stopped = walk.reason != 0

    out = []
    for lev in levels:
        inc = reduce_to_level(inc_ref, level_ref, lev)
        h = T / (1 << lev)
        stride = 1 << (l_max - lev)
        w = BatchWalk(system, np.tile(x0, (P, 1)), h, R_stop)
        sup_xi = np.zeros(P)
        for k in range(1 << lev):
            w.step(k * h, inc[:, k, :])
            xi = np.sum((w.X - ref_states[(k + 1) * stride - 1]) ** 2, axis=1)
            sup_xi = np.where(w.active, np.maximum(sup_xi, xi), sup_xi)
        out.append((sup_xi, (w.reason != 0) | ref_stopped))
    return out


def convergence_diagnostic(
    system: SdeSystem,
    x0,
    T: float,
    levels: Sequence[int],
    level_ref: int,
    paths: int,
    seed: int,
    R_stop: float = 1e6,
    workers: int = 1,
) -> LevelCurve:
    """E[sup_t |X^(level) - X^(level_ref)|^2] per level, same Brownian paths."""
    levels = [int(l) for l in levels]
    if not levels:
        raise UsageError("need at least one level")
    if max(levels) > level_ref:
        raise UsageError(f"levels must not exceed level_ref={level_ref}")
    if level_ref > MAX_LEVEL:
        raise ResourceError(f"level_ref exceeds finest-level guard {MAX_LEVEL}")
    x0 = np.asarray(x0, dtype=float).reshape(-1)
    parts = _map_chunks(
        lambda lo, hi: _converge_chunk(system, x0, T, levels, level_ref, R_stop,
                                       seed, lo, hi),
        paths, workers)
    values, halfs, excl = [], [], []
    for i, _ in enumerate(levels):
        sup_xi = np.concatenate([p[i][0] for p in parts])
        stopped = np.concatenate([p[i][1] for p in parts])
        ok = ~stopped
        if not ok.any():
            raise EstimationError(f"all paths stopped for level {levels[i]}")
        v, half = _mean_ci(sup_xi[ok])
        values.append(v)
        halfs.append(half)
        excl.append(int(stopped.sum()))
    return LevelCurve(levels=levels, values=values, ci_halfwidths=halfs,
                      excluded=excl, paths=paths, seed=seed, kind="convergence")


def _strong_error_chunk(system: SdeSystem, x0: np.ndarray, T: float, levels,
                        oracle_level: int, R_stop: float, seed: int,
                        lo: int, hi: int):
    P = hi - lo
    inc = sample_increment_batch(system.m, T, oracle_level, seed, range(lo, hi))
    exact = np.asarray(system.exact_solution(T, x0, inc, T), dtype=float)
    out = []
    for lev in levels:
        inc_l = reduce_to_level(inc, oracle_level, lev)
        h = T / (1 << lev)
        w = BatchWalk(system, np.tile(x0, (P, 1)), h, R_stop)
        for k in range(1 << lev):
            w.step(k * h, inc_l[:, k, :])
        err2 = np.sum((w.X - exact) ** 2, axis=1)
        out.append((err2, w.reason != 0))
    return out


def strong_error_vs_oracle(
    system: SdeSystem,
    x0,
    T: float,
    levels: Sequence[int],
    paths: int,
    seed: int,
    oracle_pad: int = 4,
    R_stop: float = 1e6,
    workers: int = 1,
) -> LevelCurve:
    """RMS endpoint error against the closed-form solution, with fitted order.

    The oracle is evaluated on a grid oracle_pad levels finer than the finest
    requested level, so its own discretization error is negligible against
    the Euler error being measured. slope is d log(RMS) / d log(h).
    """
    if system.exact_solution is None:
        raise UsageError(f"system '{system.label}' has no exact solution")
    levels = [int(l) for l in levels]
    if not levels:
        raise UsageError("need at least one level")
    oracle_level = min(max(levels) + oracle_pad, MAX_LEVEL)
    if oracle_level < max(levels):
        raise UsageError("levels exceed the finest-grid guard")
    x0 = np.asarray(x0, dtype=float).reshape(-1)
    parts = _map_chunks(
        lambda lo, hi: _strong_error_chunk(system, x0, T, levels, oracle_level,
                                           R_stop, seed, lo, hi),
        paths, workers)
    values, halfs, excl = [], [], []
    for i, _ in enumerate(levels):
        err2 = np.concatenate([p[i][0] for p in parts])
        stopped = np.concatenate([p[i][1] for p in parts])
        ok = ~stopped
        if not ok.any():
            raise EstimationError(f"all paths stopped for level {levels[i]}")
        m2, half2 = _mean_ci(err2[ok])
        rms = math.sqrt(m2)
        values.append(rms)
        halfs.append(half2 / (2.0 * rms) if rms > 0 else 0.0)
        excl.append(int(stopped.sum()))
    slope = None
    if len(levels) >= 2 and all(v > 0 for v in values):
        # log2 h = log2 T - level, so the order is minus the slope in level
        fit = np.polyfit(np.asarray(levels, dtype=float), np.log2(values), 1)
        slope = float(-fit[0])
    return LevelCurve(levels=levels, values=values, ci_halfwidths=halfs,
                      excluded=excl, paths=paths, seed=seed,
                      kind="strong_error", slope=slope)


# --- test functions ----------------------------------------------------------


@dataclass(frozen=True)
class TestFunctionEval:
    kind: str  # 'phi_delta' | 'varphi' | 'Phi_delta'
    control: str
    delta: float
    x: float
    c0: Optional[float]
    value: float
    error_estimate: float

    def to_dict(self) -> dict:
        return {"kind": self.kind, "control": self.control, "delta": self.delta,
                "x": self.x, "c0": self.c0, "value": self.value,
                "error_estimate": self.error_estimate}


def eval_test_function(
    kind: str,
    control: ControlFunction,
    delta: float,
    x: float,
    c0: Optional[float] = None,
) -> TestFunctionEval:
    """Evaluate one of the diagnostic integral transforms of a control.

    phi_delta(x) = int_0^x ds / (ctrl(s) + delta)         (delta > 0)
    varphi(x)    = int_0^x ds / (ctrl(s) + 1)
    Phi_delta(x) = exp(int_x^c0 ds / (ctrl(s) + delta))   (delta > 0, 0 <= x <= c0)
    """
    if x < 0:
        raise UsageError(f"x must be nonnegative, got {x}")
    if kind == "varphi":
        res = adaptive_simpson(lambda s: 1.0 / (float(control(s)) + 1.0), 0.0, x, strict=True)
        return TestFunctionEval(kind=kind, control=control.label, delta=0.0, x=x,
                                c0=None, value=res.value, error_estimate=res.error_estimate)
    if delta <= 0:
        if float(control(np.asarray(0.0))) == 0.0:
            raise UsageError(
                "delta must be positive: the unregularized integral diverges at 0"
            )
        raise UsageError(f"delta must be positive, got {delta}")
    if kind == "phi_delta":
        res = adaptive_simpson(lambda s: 1.0 / (float(control(s)) + delta), 0.0, x, strict=True)
        return TestFunctionEval(kind=kind, control=control.label, delta=delta, x=x,
                                c0=None, value=res.value, error_estimate=res.error_estimate)
    if kind == "Phi_delta":
        c0 = control.c0 if c0 is None else float(c0)
        if not (0.0 <= x <= c0):
            raise UsageError(f"Phi_delta needs 0 <= x <= c0, got x={x}, c0={c0}")
        res = adaptive_simpson(lambda s: 1.0 / (float(control(s)) + delta), x, c0, strict=True)
        value = math.exp(res.value)
        return TestFunctionEval(kind=kind, control=control.label, delta=delta, x=x,
                                c0=c0, value=value, error_estimate=value * res.error_estimate)
    raise UsageError(f"unknown test-function kind '{kind}' "
                     "(choose phi_delta, varphi, Phi_delta)")
