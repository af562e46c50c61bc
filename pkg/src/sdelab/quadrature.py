"""Adaptive Simpson quadrature with interval bisection.

Integrands here are smooth away from 0 and delta-regularized at 0, so
Simpson with Richardson-style acceptance is enough. An interval is
accepted when its two-half refinement changes the estimate by less than
its share of the tolerance budget; otherwise it is bisected, up to a
subdivision budget after which the result is flagged. The relative
tolerance is applied in two passes: a first pass fixes the integral's
scale, the second refines against it (a single pass would inherit the
wildly wrong scale a crude Simpson gives spiked integrands).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

from .errors import QuadratureError, UsageError

__all__ = ["QuadratureResult", "adaptive_simpson"]


@dataclass(frozen=True)
class QuadratureResult:
    value: float
    error_estimate: float
    subdivisions: int
    converged: bool


def _eval(f: Callable[[float], float], x: float) -> float:
    try:
        return float(f(x))
    except (ZeroDivisionError, OverflowError, ValueError):
        return math.nan


def _refine(f, a, fa, b, fb, abs_share: float, max_subdivisions: int):
    m = 0.5 * (a + b)
    fm = _eval(f, m)
    whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb)
    total = 0.0
    err_total = 0.0
    subdivisions = 0
    converged = True
    # stack entries: (a, fa, b, fb, m, fm, simpson_estimate, abs_tol_share)
    stack = [(a, fa, b, fb, m, fm, whole, abs_share)]
    while stack:
        a0, fa0, b0, fb0, m0, fm0, s0, tol0 = stack.pop()
        lm = 0.5 * (a0 + m0)
        rm = 0.5 * (m0 + b0)
        flm, frm = _eval(f, lm), _eval(f, rm)
        sl = (m0 - a0) / 6.0 * (fa0 + 4.0 * flm + fm0)
        sr = (b0 - m0) / 6.0 * (fm0 + 4.0 * frm + fb0)
        if not (math.isfinite(sl) and math.isfinite(sr)):
            raise QuadratureError(f"integrand non-finite inside [{a0}, {b0}]")
        delta = sl + sr - s0
        if abs(delta) <= 15.0 * max(tol0, 1e-300):
            total += sl + sr + delta / 15.0
            err_total += abs(delta) / 15.0
        elif subdivisions >= max_subdivisions:
            total += sl + sr
            err_total += abs(delta)
            converged = False
        else:
            subdivisions += 1
            stack.append((a0, fa0, m0, fm0, lm, flm, sl, tol0 / 2.0))
            stack.append((m0, fm0, b0, fb0, rm, frm, sr, tol0 / 2.0))
    return total, err_total, subdivisions, converged


def adaptive_simpson(
    f: Callable[[float], float],
    a: float,
    b: float,
    rel_tol: float = 1e-8,
    max_subdivisions: int = 10_000,
    strict: bool = False,
) -> QuadratureResult:
    """Integrate f over [a, b] to the requested relative tolerance.

    With strict=True a non-converged integral raises QuadratureError instead
    of returning a flagged result.
    """
    if not math.isfinite(a) or not math.isfinite(b):
        raise UsageError("integration bounds must be finite")
    if a == b:
        return QuadratureResult(0.0, 0.0, 0, True)
    sign = 1.0
    if a > b:
        a, b = b, a
        sign = -1.0

    fa, fb = _eval(f, a), _eval(f, b)
    if not (math.isfinite(fa) and math.isfinite(fb)):
        raise QuadratureError(f"integrand non-finite at an endpoint of [{a}, {b}]")

    fmid = _eval(f, 0.5 * (a + b))
    crude = max((abs(fa) + 4.0 * abs(fmid) + abs(fb)) / 6.0, 1e-300) * (b - a)
    rough, rough_err, sub1, conv1 = _refine(f, a, fa, b, fb,
                                            rel_tol * crude, max_subdivisions)
    scale = max(abs(rough), rough_err, 1e-300)
    total, err, sub2, conv2 = _refine(f, a, fa, b, fb,
                                      rel_tol * scale, max_subdivisions - sub1)
    converged = conv1 and conv2
    if strict and not converged:
        raise QuadratureError(
            f"quadrature did not converge within {max_subdivisions} subdivisions"
        )
    return QuadratureResult(sign * total, err, sub1 + sub2, converged)
