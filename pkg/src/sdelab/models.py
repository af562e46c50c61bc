"""SDE model abstraction, built-in example systems and control functions.

A system dX = b(t,X) dt + sigma(t,X) dB is described by its dimensions
(d states, m noise channels) and two coefficient callables. Coefficients
are deterministic functions of (t, x) and must accept batched states:
drift maps (..., d) -> (..., d) and diffusion maps (..., d) -> (..., d, m),
broadcasting over leading axes. All built-ins follow this contract, which
is what lets the Monte Carlo layer step thousands of paths per numpy call.

Fractional powers of negative reals use the real signed-root convention:
x^(1/3) = sign(x)|x|^(1/3) (numpy cbrt) and x^(2/3) = |x|^(2/3).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import ModelDomainError, UsageError

__all__ = [
    "SdeSystem",
    "ControlFunction",
    "drift_eval",
    "diffusion_eval",
    "control_eval",
    "make_cube_root",
    "make_rotation",
    "make_oracle",
    "make_sine",
    "make_custom_1d",
    "zero_control",
    "linear_control",
    "log_control",
    "build_model",
    "build_control",
    "BUILTIN_MODELS",
]


@dataclass(frozen=True)
class SdeSystem:
    """An SDE dX = drift dt + diffusion dB with batch-aware coefficients.

    exact_solution, when present, maps (t, x0, increments, horizon) to the
    closed-form state at time t driven by the given finest-grid Brownian
    increments; increments may carry leading batch axes.
    monotonicity_identity, when present, is the closed-form value of the
    locally-weak-monotonicity margin (control term excluded) used as an
    independent cross-check by the conditions module.
    """

    d: int
    m: int
    drift: Callable[[float, np.ndarray], np.ndarray]
    diffusion: Callable[[float, np.ndarray], np.ndarray]
    label: str
    exact_solution: Optional[Callable[..., np.ndarray]] = None
    monotonicity_identity: Optional[Callable[[np.ndarray, np.ndarray], np.ndarray]] = None
    params: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.d < 1 or self.m < 1:
            raise UsageError(f"dimensions must be positive, got d={self.d}, m={self.m}")


def _as_state(x, d: int) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.shape != (d,):
        raise UsageError(f"state must have shape ({d},), got {x.shape}")
    return x


def drift_eval(system: SdeSystem, t: float, x) -> np.ndarray:
    """Evaluate the drift at a single state, checking shape and finiteness."""
    if t < 0:
        raise UsageError(f"time must be nonnegative, got {t}")
    x = _as_state(x, system.d)
    if not np.all(np.isfinite(x)):
        raise UsageError("state must be finite")
    out = np.asarray(system.drift(t, x), dtype=float)
    if out.shape != (system.d,):
        raise UsageError(f"drift returned shape {out.shape}, expected ({system.d},)")
    bad = np.flatnonzero(~np.isfinite(out))
    if bad.size:
        raise ModelDomainError(
            f"drift of '{system.label}' non-finite in coordinate {bad[0]} at t={t}, x={x.tolist()}"
        )
    return out


def diffusion_eval(system: SdeSystem, t: float, x) -> np.ndarray:
    """Evaluate the diffusion matrix at a single state (shape d x m)."""
    if t < 0:
        raise UsageError(f"time must be nonnegative, got {t}")
    x = _as_state(x, system.d)
    if not np.all(np.isfinite(x)):
        raise UsageError("state must be finite")
    out = np.asarray(system.diffusion(t, x), dtype=float)
    if out.shape != (system.d, system.m):
        raise UsageError(
            f"diffusion returned shape {out.shape}, expected ({system.d}, {system.m})"
        )
    bad = np.argwhere(~np.isfinite(out))
    if bad.size:
        i, j = bad[0]
        raise ModelDomainError(
            f"diffusion of '{system.label}' non-finite at entry ({i},{j}), t={t}, x={x.tolist()}"
        )
    return out


def _diag_matrix(values: np.ndarray) -> np.ndarray:
    """Embed (..., d) values on the diagonal of (..., d, d) matrices."""
    d = values.shape[-1]
    out = np.zeros(values.shape + (d,))
    idx = np.arange(d)
    out[..., idx, idx] = values
    return out


def make_cube_root(d: int) -> SdeSystem:
    """Holder-continuous example: sigma = diag(x_i^(2/3)), b_i = -x_i^(1/3).

    Signed-root convention makes both coefficients total on R^d. The
    monotonicity margin has the closed form
    -sum (x_i^(1/3) - y_i^(1/3))^2 (x_i^(2/3) + y_i^(2/3)), which is
    attached for cross-checking.
    """
    if d < 1:
        raise UsageError(f"d must be >= 1, got {d}")

    def drift(t, x):
        return -np.cbrt(x)

    def diffusion(t, x):
        return _diag_matrix(np.cbrt(x) ** 2)

    def identity(x, y):
        u = np.cbrt(x)
        v = np.cbrt(y)
        return -np.sum((u - v) ** 2 * (u**2 + v**2), axis=-1)

    return SdeSystem(
        d=d,
        m=d,
        drift=drift,
        diffusion=diffusion,
        label=f"cube-root(d={d})",
        monotonicity_identity=identity,
        params={"d": d},
    )


def make_rotation(r: float) -> SdeSystem:
    """Planar system sigma(x) = |x|^r (-x2, x1)^T, b(x) = -|x|^(2r) x.

    The diffusion is orthogonal to the state, so sigma^T x = 0 identically.
    """
    if r <= 0:
        raise UsageError(f"r must be positive, got {r}")

    def drift(t, x):
        n2 = np.sum(x**2, axis=-1, keepdims=True)
        return -(n2 ** r) * x

    def diffusion(t, x):
        n = np.sqrt(np.sum(x**2, axis=-1))
        col = np.stack([-x[..., 1], x[..., 0]], axis=-1)
        return (n**r)[..., None, None] * col[..., None]

    return SdeSystem(
        d=2,
        m=1,
        drift=drift,
        diffusion=diffusion,
        label=f"rotation(r={fmt_param(r)})",
        params={"r": r},
    )


def fmt_param(v) -> str:
    return format(v, "g") if isinstance(v, float) else str(v)


def make_oracle(kind: str, **params) -> SdeSystem:
    """Baseline systems with closed-form solutions for engine validation.

    ou: dX = -theta X dt + vol dB           (exact via exponential weights)
    gbm: dX = mu X dt + vol X dB            (exact via log-space closed form)
    deterministic_blowup: dX = (1 + X^2) dt (exact tan, blows up in finite time)
    """
    if kind == "ou":
        theta = float(params.pop("theta", 1.0))
        vol = float(params.pop("vol", 1.0))
        if params:
            raise UsageError(f"unknown ou parameters: {sorted(params)}")
        if theta <= 0:
            raise UsageError(f"theta must be positive, got {theta}")
        if vol < 0:
            raise UsageError(f"vol must be nonnegative, got {vol}")

        def drift(t, x):
            return -theta * x

        def diffusion(t, x):
            return np.broadcast_to(vol, x.shape + (1,)).copy()

        def exact(t, x0, increments, horizon):
            # left-endpoint exponential weights on the finest grid; exact
            # when vol == 0, O(h_L) accurate otherwise
            increments = np.asarray(increments, dtype=float)
            n = increments.shape[-2]
            h = horizon / n
            k = int(round(t / h))
            x0 = np.asarray(x0, dtype=float)
            base = x0 * math.exp(-theta * t)
            if k == 0 or vol == 0.0:
                return np.broadcast_to(base, increments.shape[:-2] + (1,)).copy()
            s = np.arange(k) * h
            w = np.exp(-theta * (t - s))
            noise = np.einsum("...km,k->...", increments[..., :k, :], w)
            return base + vol * noise[..., None]

        return SdeSystem(
            d=1, m=1, drift=drift, diffusion=diffusion,
            label=f"ou(theta={fmt_param(theta)},vol={fmt_param(vol)})",
            exact_solution=exact, params={"theta": theta, "vol": vol},
        )

    if kind == "gbm":
        mu = float(params.pop("mu", 0.05))
        vol = float(params.pop("vol", 0.2))
        if params:
            raise UsageError(f"unknown gbm parameters: {sorted(params)}")
        if vol < 0:
            raise UsageError(f"vol must be nonnegative, got {vol}")

        def drift(t, x):
            return mu * x

        def diffusion(t, x):
            return vol * x[..., None]

        def exact(t, x0, increments, horizon):
            increments = np.asarray(increments, dtype=float)
            n = increments.shape[-2]
            h = horizon / n
            k = int(round(t / h))
            bt = increments[..., :k, :].sum(axis=-2)
            x0 = np.asarray(x0, dtype=float)
            return x0 * np.exp((mu - 0.5 * vol**2) * t + vol * bt)

        return SdeSystem(
            d=1, m=1, drift=drift, diffusion=diffusion,
            label=f"gbm(mu={fmt_param(mu)},vol={fmt_param(vol)})",
            exact_solution=exact, params={"mu": mu, "vol": vol},
        )

    if kind == "deterministic_blowup":
        if params:
            raise UsageError(f"unknown blowup parameters: {sorted(params)}")

        def drift(t, x):
            return 1.0 + x**2

        def diffusion(t, x):
            return np.zeros(x.shape + (1,))

        def exact(t, x0, increments, horizon):
            x0 = np.asarray(x0, dtype=float)
            t_max = math.pi / 2 - math.atan(float(x0[0]))
            if t >= t_max:
                raise ModelDomainError(
                    f"blow-up solution undefined at t={t} >= {t_max}"
                )
            increments = np.asarray(increments, dtype=float)
            val = math.tan(t + math.atan(float(x0[0])))
            return np.broadcast_to(val, increments.shape[:-2] + (1,)).copy()

        return SdeSystem(
            d=1, m=1, drift=drift, diffusion=diffusion,
            label="deterministic_blowup", exact_solution=exact, params={},
        )

    raise UsageError(f"unknown oracle kind '{kind}' (choose ou, gbm, deterministic_blowup)")


def blowup_time(x0: float) -> float:
    """Exact blow-up time of dX = (1 + X^2) dt started at x0."""
    return math.pi / 2 - math.atan(x0)


def make_sine(amp: float = 1.0, freq: float = 1.0, decay: float = 1.0) -> SdeSystem:
    """Locally Lipschitz 1D test system sigma(x) = amp sin(freq x), b(x) = -decay x."""
    if decay < 0 or freq <= 0:
        raise UsageError("sine model needs freq > 0 and decay >= 0")

    def drift(t, x):
        return -decay * x

    def diffusion(t, x):
        return amp * np.sin(freq * x)[..., None]

    return SdeSystem(
        d=1, m=1, drift=drift, diffusion=diffusion,
        label=f"sine(amp={fmt_param(amp)},freq={fmt_param(freq)},decay={fmt_param(decay)})",
        params={"amp": amp, "freq": freq, "decay": decay},
    )


def make_custom_1d(drift_poly: list[float], diffusion_poly: list[float]) -> SdeSystem:
    """1D system with polynomial coefficients given as coefficient lists c0,c1,..."""
    bc = np.asarray(drift_poly, dtype=float)
    sc = np.asarray(diffusion_poly, dtype=float)
    if bc.size == 0 or sc.size == 0:
        raise UsageError("polynomial coefficient lists must be non-empty")

    def drift(t, x):
        return _polyval(bc, x)

    def diffusion(t, x):
        return _polyval(sc, x)[..., None]

    return SdeSystem(
        d=1, m=1, drift=drift, diffusion=diffusion,
        label="custom-1d",
        params={"drift_poly": list(map(float, bc)), "diffusion_poly": list(map(float, sc))},
    )


def _polyval(coeffs: np.ndarray, x: np.ndarray) -> np.ndarray:
    out = np.zeros_like(x)
    for c in coeffs[::-1]:
        out = out * x + c
    return out


# --- control functions -----------------------------------------------------


@dataclass(frozen=True)
class ControlFunction:
    """A control function eta_R / gamma / gamma_R with its domain constants.

    kinds: 'eta' (locally weak monotonicity), 'gamma' (coercivity growth),
    'gamma_r' (non-confluence, differentiable, subject to the K-ratio bound).
    fn is defined on [0, domain_max); monotone_max marks the upper end of the
    interval on which the function is guaranteed nondecreasing.
    """

    kind: str
    fn: Callable[[np.ndarray], np.ndarray]
    label: str
    derivative: Optional[Callable[[np.ndarray], np.ndarray]] = None
    R: float = 10.0
    c0: float = 0.5
    eps0: float = 0.5
    K: float = 1.0
    domain_max: float = math.inf
    monotone_max: float = math.inf

    def __post_init__(self) -> None:
        if self.kind not in ("eta", "gamma", "gamma_r"):
            raise UsageError(f"unknown control kind '{self.kind}'")
        if not (0 < self.eps0 <= self.c0 < 1):
            raise UsageError(
                f"constants must satisfy 0 < eps0 <= c0 < 1, got eps0={self.eps0}, c0={self.c0}"
            )

    def __call__(self, x):
        return self.fn(np.asarray(x, dtype=float))


def control_eval(ctrl: ControlFunction, x: float) -> float:
    """Evaluate a control function at a scalar point with domain checks."""
    x = float(x)
    if x < 0 or x >= ctrl.domain_max:
        raise UsageError(
            f"control '{ctrl.label}' argument {x} outside [0, {ctrl.domain_max})"
        )
    val = float(ctrl.fn(np.asarray(x)))
    if not math.isfinite(val) or val < 0:
        raise ModelDomainError(f"control '{ctrl.label}' returned {val} at x={x}")
    return val


def zero_control(kind: str = "eta", *, c0: float = 0.5, eps0: Optional[float] = None) -> ControlFunction:
    """The identically-zero control (degenerate; margin checks only)."""
    eps0 = c0 if eps0 is None else eps0
    return ControlFunction(
        kind=kind, fn=lambda x: np.zeros_like(x), derivative=lambda x: np.zeros_like(x),
        label="zero", c0=c0, eps0=eps0,
    )


def linear_control(
    kind: str = "gamma",
    slope: float = 1.0,
    *,
    R: float = 10.0,
    c0: float = 0.5,
    eps0: Optional[float] = None,
    K: float = 1.0,
) -> ControlFunction:
    """Linear control slope * x; K-ratio is (slope+1)/slope, constant."""
    if slope <= 0:
        raise UsageError(f"slope must be positive, got {slope}")
    eps0 = c0 if eps0 is None else eps0
    return ControlFunction(
        kind=kind,
        fn=lambda x: slope * x,
        derivative=lambda x: np.full_like(x, slope),
        label=f"linear(slope={fmt_param(slope)})",
        R=R, c0=c0, eps0=eps0, K=K,
    )


def log_control(
    kind: str = "eta",
    *,
    R: float = 10.0,
    c0: float = 0.5,
    eps0: Optional[float] = None,
    K: float = 1.0,
) -> ControlFunction:
    """The typical non-Lipschitz control R * x * log(1/x) on [0, 1).

    Continuous extension by 0 at x = 0. Nondecreasing only up to 1/e, which
    is recorded in monotone_max; condition checks only ever evaluate it at
    squared separations <= c0^2 < 1/e.
    """
    eps0 = c0 if eps0 is None else eps0

    def fn(x):
        x = np.asarray(x, dtype=float)
        safe = np.where(x > 0.0, x, 1.0)
        return np.where(x > 0.0, -R * safe * np.log(safe), 0.0)

    def deriv(x):
        x = np.asarray(x, dtype=float)
        safe = np.where(x > 0.0, x, 1.0)
        return np.where(x > 0.0, R * (-np.log(safe) - 1.0), np.inf)

    return ControlFunction(
        kind=kind, fn=fn, derivative=deriv,
        label=f"log(R={fmt_param(R)})",
        R=R, c0=c0, eps0=eps0, K=K,
        domain_max=1.0, monotone_max=1.0 / math.e,
    )


# --- registries for the declarative config surface --------------------------


def _strict(allowed: set[str], name: str):
    def check(p: dict) -> dict:
        unknown = set(p) - allowed
        if unknown:
            raise UsageError(
                f"unknown parameters for model '{name}': {sorted(unknown)} "
                f"(allowed: {sorted(allowed)})"
            )
        return p
    return check


BUILTIN_MODELS = {
    "cube-root": lambda p: make_cube_root(int(_strict({"d"}, "cube-root")(p).get("d", 1))),
    "rotation": lambda p: make_rotation(float(_strict({"r"}, "rotation")(p).get("r", 1.0))),
    "ou": lambda p: make_oracle("ou", **p),
    "gbm": lambda p: make_oracle("gbm", **p),
    "blowup": lambda p: make_oracle("deterministic_blowup", **p),
    "sine": lambda p: make_sine(**{k: float(v) for k, v in _strict({"amp", "freq", "decay"}, "sine")(p).items()}),
    "custom-1d": lambda p: make_custom_1d(
        list(_strict({"drift_poly", "diffusion_poly"}, "custom-1d")(p).get("drift_poly", [0.0])),
        list(p.get("diffusion_poly", [0.0])),
    ),
}

BUILTIN_CONTROLS = {
    "zero": zero_control,
    "linear": linear_control,
    "log": log_control,
}


def build_model(name: str, params: Optional[dict] = None) -> SdeSystem:
    """Instantiate a built-in model by name; unknown names list the registry."""
    factory = BUILTIN_MODELS.get(name)
    if factory is None:
        raise UsageError(
            f"unknown model '{name}'; built-ins: {', '.join(sorted(BUILTIN_MODELS))}"
        )
    try:
        return factory(dict(params or {}))
    except TypeError as exc:
        raise UsageError(f"bad parameters for model '{name}': {exc}") from exc


def build_control(name: str, kind: str, params: Optional[dict] = None) -> ControlFunction:
    """Instantiate a built-in control by name for the given kind."""
    factory = BUILTIN_CONTROLS.get(name)
    if factory is None:
        raise UsageError(
            f"unknown control '{name}'; built-ins: {', '.join(sorted(BUILTIN_CONTROLS))}"
        )
    try:
        return factory(kind, **(params or {}))
    except TypeError as exc:
        raise UsageError(f"bad parameters for control '{name}': {exc}") from exc
