"""Sampled certification of the sufficient conditions on a system.

Each check evaluates its condition's margin (left side minus right side)
over a stratified deterministic sample and reports the worst case. A
report never claims a proof: the verdict vocabulary is only
'no_violation_found' / 'violated'. Margins bind in the small-separation
and near-singularity regimes, so separations and radii are log-spaced
down to tiny scales and near-origin / axis-aligned strata are mixed in.

A sample counts as a violation when margin > 1e-9 * (1 + scale), where
scale is the largest constituent term; this separates genuine violations
from float roundoff. The worst sample is chosen by that normalized
margin (first index wins ties), so the reported verdict always agrees
with worst_margin > tolerance.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Iterator, Optional

import numpy as np

from .errors import ModelDomainError, UsageError
from .models import ControlFunction, SdeSystem

__all__ = [
    "PairSampler",
    "PointSampler",
    "ConditionReport",
    "check_monotonicity",
    "check_coercivity",
    "check_moment_condition",
    "check_confluence_condition",
    "check_k_ratio",
    "monotonicity_margin_terms",
    "calibrate_moment_f",
]

VIOLATION_RTOL = 1e-9
N_BLOCKS = 8


@dataclass(frozen=True)
class ConditionReport:
    condition_id: str
    samples_evaluated: int
    worst_margin: float
    worst_point: dict
    verdict: str  # 'no_violation_found' | 'violated'
    sampling_spec: dict
    tolerance: float

    def to_dict(self) -> dict:
        return {
            "condition_id": self.condition_id,
            "samples_evaluated": self.samples_evaluated,
            "worst_margin": self.worst_margin,
            "worst_point": self.worst_point,
            "verdict": self.verdict,
            "sampling_spec": self.sampling_spec,
            "tolerance": self.tolerance,
        }


def _ball(rng: np.random.Generator, n: int, d: int, radius) -> np.ndarray:
    """n points uniform in the d-ball of the given radius (radius may be (n,))."""
    u = rng.standard_normal((n, d))
    u /= np.maximum(np.linalg.norm(u, axis=1, keepdims=True), 1e-300)
    r = np.asarray(radius) * rng.random(n) ** (1.0 / d)
    return u * r[:, None]


def _directions(rng: np.random.Generator, n: int, d: int, axis_aligned: bool) -> np.ndarray:
    if axis_aligned:
        idx = rng.integers(0, d, size=n)
        sign = np.where(rng.random(n) < 0.5, -1.0, 1.0)
        out = np.zeros((n, d))
        out[np.arange(n), idx] = sign
        return out
    u = rng.standard_normal((n, d))
    return u / np.maximum(np.linalg.norm(u, axis=1, keepdims=True), 1e-300)


@dataclass(frozen=True)
class PairSampler:
    """Pairs (x, y) with |x| v |y| <= R and |x - y| <= c0, stratified.

    Strata: bulk midpoints in the R-ball, axis-aligned separation
    directions, and near-origin midpoints; separations log-uniform in
    [s_min, c0]. Emits N_BLOCKS blocks, each with one time draw in
    [0, t_max].
    """

    d: int
    R: float = 10.0
    c0: float = 0.5
    count: int = 100_000
    seed: int = 0
    s_min: float = 1e-8
    t_max: float = 1.0

    def __post_init__(self) -> None:
        if self.R <= self.c0 / 2:
            raise UsageError(f"R={self.R} too small for separations up to c0={self.c0}")
        if not (0 < self.s_min < self.c0):
            raise UsageError("need 0 < s_min < c0")

    def spec(self) -> dict:
        return {
            "kind": "pair", "d": self.d, "R": self.R, "c0": self.c0,
            "count": self.count, "seed": self.seed, "s_min": self.s_min,
            "t_max": self.t_max,
        }

    def blocks(self) -> Iterator[tuple[float, np.ndarray, np.ndarray]]:
        rng = np.random.Generator(np.random.Philox(key=np.array([self.seed, 0x7A2], dtype=np.uint64)))
        per = -(-self.count // N_BLOCKS)
        for _ in range(N_BLOCKS):
            t = float(rng.random() * self.t_max)
            n_axis = per // 6
            n_origin = per // 6
            n_bulk = per - n_axis - n_origin
            xs, ys = [], []
            for n, axis, origin in ((n_bulk, False, False), (n_axis, True, False),
                                    (n_origin, False, True)):
                if n == 0:
                    continue
                s = np.exp(rng.uniform(np.log(self.s_min), np.log(self.c0), size=n))
                u = _directions(rng, n, self.d, axis)
                rad = min(self.c0, self.R / 50.0) if origin else self.R
                mid = _ball(rng, n, self.d, np.maximum(rad - s / 2.0, 0.0))
                xs.append(mid + (s / 2.0)[:, None] * u)
                ys.append(mid - (s / 2.0)[:, None] * u)
            X = np.concatenate(xs)
            Y = np.concatenate(ys)
            slack = 1.0 + 1e-12
            if (np.linalg.norm(X, axis=1).max() > self.R * slack
                    or np.linalg.norm(Y, axis=1).max() > self.R * slack
                    or np.linalg.norm(X - Y, axis=1).max() > self.c0 * slack):
                raise RuntimeError("internal error: pair sampler left its region")
            yield t, X, Y


@dataclass(frozen=True)
class PointSampler:
    """Points with |x| in [r_min, r_max], radii log-spaced, plus strata.

    include_origin adds the exact origin (needed by conditions that must
    bind at x = 0).
    """

    d: int
    r_max: float = 10.0
    r_min: float = 1e-8
    count: int = 100_000
    seed: int = 0
    t_max: float = 1.0
    include_origin: bool = False

    def __post_init__(self) -> None:
        if not (0 < self.r_min < self.r_max):
            raise UsageError("need 0 < r_min < r_max")

    def spec(self) -> dict:
        return {
            "kind": "point", "d": self.d, "r_min": self.r_min, "r_max": self.r_max,
            "count": self.count, "seed": self.seed, "t_max": self.t_max,
            "include_origin": self.include_origin,
        }

    def blocks(self) -> Iterator[tuple[float, np.ndarray]]:
        rng = np.random.Generator(np.random.Philox(key=np.array([self.seed, 0x701], dtype=np.uint64)))
        per = -(-self.count // N_BLOCKS)
        for i in range(N_BLOCKS):
            t = float(rng.random() * self.t_max)
            n_axis = per // 6
            n_shell = per // 6
            n_bulk = per - n_axis - n_shell
            pts = []
            for n, axis, shell in ((n_bulk, False, False), (n_axis, True, False),
                                   (n_shell, False, True)):
                if n == 0:
                    continue
                if shell:
                    r = np.full(n, self.r_min)
                else:
                    r = np.exp(rng.uniform(np.log(self.r_min), np.log(self.r_max), size=n))
                u = _directions(rng, n, self.d, axis)
                pts.append(u * r[:, None])
            X = np.concatenate(pts)
            if i == 0 and self.include_origin:
                X[0] = 0.0
            yield t, X


def _hs2(mat: np.ndarray) -> np.ndarray:
    return (mat**2).sum(axis=(-2, -1))


def _dot(u: np.ndarray, v: np.ndarray) -> np.ndarray:
    return (u * v).sum(axis=-1)


def monotonicity_margin_terms(
    system: SdeSystem, t: float, X: np.ndarray, Y: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """(||sigma(x)-sigma(y)||_HS^2, 2<x-y, b(x)-b(y)>) for sample batches."""
    t1 = _hs2(system.diffusion(t, X) - system.diffusion(t, Y))
    t2 = 2.0 * _dot(X - Y, system.drift(t, X) - system.drift(t, Y))
    return t1, t2


@dataclass
class _Worst:
    norm_margin: float = -np.inf
    margin: float = 0.0
    tol: float = np.inf
    point: dict = field(default_factory=dict)
    count: int = 0
    violated: bool = False

    def update(self, margin, scale, points: dict) -> None:
        bad = ~np.isfinite(margin)
        if bad.any():
            i = int(np.flatnonzero(bad)[0])
            where = {k: (np.asarray(v[i]).tolist() if np.ndim(v) > 0 else v)
                     for k, v in points.items()}
            raise ModelDomainError(f"non-finite condition margin at sample {where}")
        tol = VIOLATION_RTOL * (1.0 + np.abs(scale))
        norm = margin / (1.0 + np.abs(scale))
        self.violated |= bool((margin > tol).any())
        self.count += margin.size
        i = int(np.argmax(norm))
        if norm[i] > self.norm_margin:
            self.norm_margin = float(norm[i])
            self.margin = float(margin[i])
            self.tol = float(tol[i])
            self.point = {k: (np.asarray(v[i]).tolist() if np.ndim(v) > 0 else v)
                          for k, v in points.items()}

    def report(self, condition_id: str, spec: dict) -> ConditionReport:
        return ConditionReport(
            condition_id=condition_id,
            samples_evaluated=self.count,
            worst_margin=self.margin,
            worst_point=self.point,
            verdict="violated" if self.violated else "no_violation_found",
            sampling_spec=spec,
            tolerance=self.tol,
        )


def check_monotonicity(
    system: SdeSystem,
    eta: ControlFunction,
    g: Callable[[float], float] = lambda t: 1.0,
    R: float = 10.0,
    c0: float = 0.5,
    sampler: Optional[PairSampler] = None,
) -> ConditionReport:
    """Locally weak monotonicity: HS-difference + 2<x-y, b-b> <= g(t) eta(|x-y|^2)."""
    sampler = sampler or PairSampler(d=system.d, R=R, c0=c0)
    worst = _Worst()
    for t, X, Y in sampler.blocks():
        t1, t2 = monotonicity_margin_terms(system, t, X, Y)
        t3 = float(g(t)) * eta(((X - Y) ** 2).sum(axis=1))
        margin = t1 + t2 - t3
        scale = np.maximum(np.maximum(np.abs(t1), np.abs(t2)), np.abs(t3))
        worst.update(margin, scale, {"t": t, "x": X, "y": Y})
    return worst.report("monotonicity", sampler.spec())


def check_coercivity(
    system: SdeSystem,
    gamma: ControlFunction,
    f: Callable[[float], float] = lambda t: 1.0,
    K_radius: float = 1.0,
    r_max: float = 100.0,
    sampler: Optional[PointSampler] = None,
) -> ConditionReport:
    """Coercivity: ||sigma||^2 + 2<x,b> <= f(t) (gamma(|x|^2) + 1) for |x| >= K_radius."""
    sampler = sampler or PointSampler(d=system.d, r_min=K_radius, r_max=r_max)
    worst = _Worst()
    for t, X in sampler.blocks():
        lhs = _hs2(system.diffusion(t, X)) + 2.0 * _dot(X, system.drift(t, X))
        rhs = float(f(t)) * (gamma((X**2).sum(axis=1)) + 1.0)
        margin = lhs - rhs
        scale = np.maximum(np.abs(lhs), np.abs(rhs))
        worst.update(margin, scale, {"t": t, "x": X})
    return worst.report("coercivity", sampler.spec())


def check_moment_condition(
    system: SdeSystem,
    f: Callable[[float], float] = lambda t: 1.0,
    r_max: float = 10.0,
    sampler: Optional[PointSampler] = None,
) -> ConditionReport:
    """Moment condition: (||sigma||^2 + 2<x,b>) v |sigma^T x|^2 <= f(t)(|x|^2 + 1)."""
    sampler = sampler or PointSampler(d=system.d, r_max=r_max, include_origin=True)
    worst = _Worst()
    for t, X in sampler.blocks():
        s = system.diffusion(t, X)
        l1 = _hs2(s) + 2.0 * _dot(X, system.drift(t, X))
        stx = np.einsum("...ij,...i->...j", s, X)
        l2 = (stx**2).sum(axis=-1)
        lhs = np.maximum(l1, l2)
        rhs = float(f(t)) * ((X**2).sum(axis=1) + 1.0)
        margin = lhs - rhs
        scale = np.maximum(np.maximum(np.abs(l1), np.abs(l2)), np.abs(rhs))
        worst.update(margin, scale, {"t": t, "x": X})
    return worst.report("moment", sampler.spec())


def calibrate_moment_f(system: SdeSystem, sampler: Optional[PointSampler] = None) -> float:
    """Sampled sup over x of [moment-condition left side] / (|x|^2 + 1).

    The smallest constant f for which the sampled points satisfy the moment
    condition with equality at the worst point.
    """
    sampler = sampler or PointSampler(d=system.d, r_max=10.0, include_origin=True)
    best = -np.inf
    for t, X in sampler.blocks():
        s = system.diffusion(t, X)
        l1 = _hs2(s) + 2.0 * _dot(X, system.drift(t, X))
        stx = np.einsum("...ij,...i->...j", s, X)
        lhs = np.maximum(l1, (stx**2).sum(axis=-1))
        ratio = lhs / ((X**2).sum(axis=1) + 1.0)
        best = max(best, float(ratio.max()))
    return max(best, 0.0)


def check_confluence_condition(
    system: SdeSystem,
    gamma_r: ControlFunction,
    K: float = 1.0,
    R: float = 10.0,
    c0: float = 0.5,
    sampler: Optional[PairSampler] = None,
) -> ConditionReport:
    """Non-confluence: ||sigma-sigma||^2 - 2/(2K-1) <x-y, b-b> <= gamma_R(|x-y|^2).

    Time-homogeneous condition; coefficients are read at t = 0.
    """
    if K <= 0.5:
        raise UsageError(f"K must exceed 1/2, got {K}")
    sampler = sampler or PairSampler(d=system.d, R=R, c0=c0)
    factor = 2.0 / (2.0 * K - 1.0)
    worst = _Worst()
    for _, X, Y in sampler.blocks():
        t = 0.0
        t1 = _hs2(system.diffusion(t, X) - system.diffusion(t, Y))
        t2 = factor * _dot(X - Y, system.drift(t, X) - system.drift(t, Y))
        t3 = gamma_r(((X - Y) ** 2).sum(axis=1))
        margin = t1 - t2 - t3
        scale = np.maximum(np.maximum(np.abs(t1), np.abs(t2)), np.abs(t3))
        worst.update(margin, scale, {"t": t, "x": X, "y": Y})
    return worst.report("confluence", sampler.spec())


def check_k_ratio(
    gamma_r: ControlFunction,
    K: float,
    c0: Optional[float] = None,
    grid: Optional[np.ndarray] = None,
) -> ConditionReport:
    """Ratio bound x (gamma_R'(x) + 1) / gamma_R(x) <= K on (0, c0].

    Uses the analytic derivative when the control carries one, otherwise a
    central difference with step 1e-6 * x.
    """
    if K <= 0.5:
        raise UsageError(f"K must exceed 1/2, got {K}")
    c0 = gamma_r.c0 if c0 is None else c0
    if grid is None:
        grid = np.geomspace(1e-12, c0, 512)
    grid = np.asarray(grid, dtype=float)
    if grid.min() <= 0 or grid.max() > c0:
        raise UsageError(f"grid must lie in (0, {c0}]")
    vals = gamma_r(grid)
    if np.any(vals <= 0.0):
        raise UsageError(
            f"gamma_R '{gamma_r.label}' must be positive on (0, {c0}] for the ratio bound"
        )
    if gamma_r.derivative is not None:
        deriv = gamma_r.derivative(grid)
    else:
        step = 1e-6 * grid
        deriv = (gamma_r(grid + step) - gamma_r(grid - step)) / (2.0 * step)
    ratio = grid * (deriv + 1.0) / vals
    margin = ratio - K
    worst = _Worst()
    worst.update(margin, np.maximum(np.abs(ratio), K), {"x": grid})
    report = worst.report("k_ratio", {"kind": "log_grid", "n": int(grid.size),
                                      "lo": float(grid.min()), "hi": float(grid.max()),
                                      "K": K})
    return report
