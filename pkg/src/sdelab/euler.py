"""Left-endpoint Euler stepping with stopping-time truncation.

X_{k+1} = X_k + b(t_k, X_k) h + sigma(t_k, X_k) dB_k, with coefficients
frozen at the left grid node. A path halts at the first state with
|X| >= R_stop (the computable proxy for the lifetime) or at the first
non-finite state; the record is frozen from that point on.

Coupled runs drive two resolutions, or two initial conditions, with one
BrownianTree and expose the squared separation series xi_t, its first
upcrossing time, and the per-cell discretization defect of the first path.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import ModelDomainError, UsageError
from .models import SdeSystem
from .noise import BrownianTree, increments_at_level, reduce_to_level
from .serialize import csv_text

__all__ = [
    "EulerConfig",
    "PathRecord",
    "CoupledRecord",
    "euler_path",
    "coupled_resolutions",
    "coupled_starts",
    "BatchWalk",
    "step_states",
]

STOP_NONE = ""
STOP_RADIUS = "radius"
STOP_NONFINITE = "nonfinite"


@dataclass(frozen=True)
class EulerConfig:
    """Resolution, horizon, truncation radius and start of one Euler run."""

    level: int
    T: float
    R_stop: float
    x0: np.ndarray
    eps0: float = 0.5  # xi upcrossing threshold for coupled runs

    def __post_init__(self) -> None:
        object.__setattr__(self, "x0", np.asarray(self.x0, dtype=float).reshape(-1))
        if self.T <= 0:
            raise UsageError(f"T must be positive, got {self.T}")
        if self.level < 0:
            raise UsageError(f"level must be nonnegative, got {self.level}")
        if not np.all(np.isfinite(self.x0)):
            raise UsageError("x0 must be finite")
        if self.R_stop <= float(np.linalg.norm(self.x0)):
            raise UsageError(
                f"R_stop={self.R_stop} must exceed |x0|={np.linalg.norm(self.x0)}"
            )
        if not (0 < self.eps0 < 1):
            raise UsageError(f"eps0 must lie in (0,1), got {self.eps0}")

    @property
    def h(self) -> float:
        return self.T / (1 << self.level)

    @property
    def n_steps(self) -> int:
        return 1 << self.level


@dataclass
class PathRecord:
    """States on the grid up to (and including) the stopping state."""

    times: np.ndarray
    states: np.ndarray  # (K, d)
    stopped_at: Optional[tuple[int, str]]
    sup_norm_running: np.ndarray

    @property
    def d(self) -> int:
        return self.states.shape[1]

    def to_csv(self) -> str:
        header = ["t"] + [f"x{i+1}" for i in range(self.d)] + ["stopped"]
        stop_idx = self.stopped_at[0] if self.stopped_at else -1
        rows = []
        for k, t in enumerate(self.times):
            flag = self.stopped_at[1] if (self.stopped_at and k == stop_idx) else STOP_NONE
            rows.append([float(t), *map(float, self.states[k]), flag])
        return csv_text(header, rows)


@dataclass
class CoupledRecord:
    """Two paths on one Brownian tree plus separation diagnostics.

    xi[k] = |X_a(t_k) - X_b(t_k)|^2 on the common (coarser) grid; tau_nm is
    the first grid time with xi >= eps0 (None if never); defect[k] is the
    max norm of the first path's discretization defect over the finest
    nodes interior to cell k (0.0 on the final row).
    """

    path_a: PathRecord
    path_b: PathRecord
    times: np.ndarray
    xi: np.ndarray
    tau_nm: Optional[float]
    min_distance: float
    defect: np.ndarray

    def first_passage_below(self, eps: float) -> Optional[float]:
        """First grid time with |X_a - X_b| <= eps, or None."""
        hits = np.flatnonzero(self.xi <= eps * eps)
        return float(self.times[hits[0]]) if hits.size else None

    def to_csv(self) -> str:
        d = self.path_a.d
        header = ["t"] + [f"x{i+1}" for i in range(d)] + ["stopped", "xi", "defect_norm"]
        stop = self.path_a.stopped_at
        stop_idx = stop[0] if stop else -1
        rows = []
        for k, t in enumerate(self.times):
            flag = stop[1] if (stop and k == stop_idx) else STOP_NONE
            rows.append(
                [float(t), *map(float, self.path_a.states[k]), flag,
                 float(self.xi[k]), float(self.defect[k])]
            )
        return csv_text(header, rows)


def step_states(system: SdeSystem, t: float, X: np.ndarray, h: float, dB: np.ndarray) -> np.ndarray:
    """One Euler update for a (P, d) batch of states with (P, m) increments."""
    b = system.drift(t, X)
    s = system.diffusion(t, X)
    return X + b * h + np.einsum("...ij,...j->...i", s, dB)


class BatchWalk:
    """Steps P paths at one resolution, freezing each at its stopping state.

    Rows stay finite while active; a non-finite coefficient on an active row
    is a model-domain error, a non-finite or out-of-radius new state stops
    that row only.
    """

    def __init__(self, system: SdeSystem, x0: np.ndarray, h: float, R_stop: float):
        x0 = np.asarray(x0, dtype=float)
        if x0.ndim == 1:
            x0 = np.broadcast_to(x0, (1, x0.size)).copy()
        self.system = system
        self.X = x0.copy()
        self.h = h
        self.R_stop = R_stop
        P = x0.shape[0]
        self.active = np.ones(P, dtype=bool)
        self.exit_step = np.full(P, -1, dtype=np.int64)
        self.reason = np.zeros(P, dtype=np.int8)  # 0 none, 1 radius, 2 nonfinite
        self.k = 0

    def step(self, t: float, dB: np.ndarray) -> None:
        sys_ = self.system
        with np.errstate(over="ignore", invalid="ignore"):
            b = sys_.drift(t, self.X)
            s = sys_.diffusion(t, self.X)
            coeff_ok = np.isfinite(b).all(axis=-1) & np.isfinite(s).all(axis=(-2, -1))
            bad = self.active & ~coeff_ok
            if bad.any():
                p = int(np.flatnonzero(bad)[0])
                raise ModelDomainError(
                    f"non-finite coefficient of '{sys_.label}' at finite state "
                    f"{self.X[p].tolist()}, t={t}"
                )
            new = self.X + b * self.h + np.einsum("...ij,...j->...i", s, dB)
        self.X = np.where(self.active[:, None], new, self.X)
        self.k += 1

        finite = np.isfinite(self.X).all(axis=-1)
        hit_nonfinite = self.active & ~finite
        with np.errstate(invalid="ignore"):
            norms = np.linalg.norm(np.where(finite[:, None], self.X, 0.0), axis=-1)
        hit_radius = self.active & finite & (norms >= self.R_stop)
        for mask, code in ((hit_nonfinite, 2), (hit_radius, 1)):
            if mask.any():
                self.exit_step[mask] = self.k
                self.reason[mask] = code
                self.active &= ~mask


_REASONS = {1: STOP_RADIUS, 2: STOP_NONFINITE}


def _check_tree(config: EulerConfig, tree: BrownianTree, d: int) -> None:
    if tree.T != config.T:
        raise UsageError(f"tree horizon {tree.T} != config horizon {config.T}")
    if tree.level < config.level:
        raise UsageError(f"tree level {tree.level} coarser than config level {config.level}")
    if config.x0.size != d:
        raise UsageError(f"x0 has dimension {config.x0.size}, system needs {d}")


def euler_path(system: SdeSystem, config: EulerConfig, tree: BrownianTree,
               record_stride: int = 1) -> PathRecord:
    """Simulate one path at config.level driven by the given tree.

    record_stride > 1 retains only every stride-th grid state (coupled runs
    keep the fine path on the coarse grid only). A stop between retained
    nodes freezes the record at the last retained state, which then carries
    the stop flag.
    """
    _check_tree(config, tree, system.d)
    if tree.m != system.m:
        raise UsageError(f"tree has m={tree.m}, system needs m={system.m}")
    if record_stride < 1 or config.n_steps % record_stride != 0:
        raise UsageError(f"record_stride {record_stride} must divide {config.n_steps}")
    inc = increments_at_level(tree, config.level)
    h = config.h
    walk = BatchWalk(system, config.x0, h, config.R_stop)
    states = [walk.X[0].copy()]
    for k in range(config.n_steps):
        walk.step(k * h, inc[k][None, :])
        if (k + 1) % record_stride == 0:
            states.append(walk.X[0].copy())
        if not walk.active[0]:
            break
    states = np.asarray(states)
    times = np.arange(states.shape[0]) * (h * record_stride)
    stopped = None
    if walk.reason[0]:
        stopped = (states.shape[0] - 1, _REASONS[int(walk.reason[0])])
    sup_running = np.maximum.accumulate(np.linalg.norm(states, axis=1))
    return PathRecord(times=times, states=states, stopped_at=stopped,
                      sup_norm_running=sup_running)


def _cell_defects(system: SdeSystem, path: PathRecord, level: int, tree: BrownianTree) -> np.ndarray:
    """Max defect norm per grid cell of `path`, from the tree's finest nodes.

    Within cell k the Euler interpolant is X_k + b_k (t - t_k) + s_k (B_t - B_{t_k}),
    so the defect at an interior node is minus that drift+noise part.
    """
    K = path.times.size
    out = np.zeros(K)
    span = 1 << (tree.level - level)
    if span == 1:
        return out
    h_fine = tree.T / (1 << tree.level)
    for k in range(K - 1):
        x = path.states[k]
        t = path.times[k]
        b = system.drift(t, x)
        s = system.diffusion(t, x)
        cell = tree.increments[k * span:(k + 1) * span]
        partial = np.cumsum(cell[:-1], axis=0)  # B at interior nodes 1..span-1
        j = np.arange(1, span)[:, None]
        p = b[None, :] * (j * h_fine) + partial @ s.T
        out[k] = np.sqrt((p**2).sum(axis=1)).max()
    return out


def _coupled(system: SdeSystem, rec_a: PathRecord, rec_b: PathRecord,
             config: EulerConfig, level_a: int, tree: BrownianTree) -> CoupledRecord:
    # both records live on the level_a grid (the fine path is recorded strided)
    n_common = min(rec_a.times.size, rec_b.times.size)
    times = rec_a.times[:n_common]
    diff = rec_a.states[:n_common] - rec_b.states[:n_common]
    xi = (diff**2).sum(axis=1)
    hits = np.flatnonzero(xi >= config.eps0)
    tau_nm = float(times[hits[0]]) if hits.size else None
    min_distance = float(np.sqrt(xi.min()))
    defect = _cell_defects(system, rec_a, level_a, tree)[:n_common]
    if n_common:
        defect[-1] = 0.0
    return CoupledRecord(path_a=rec_a, path_b=rec_b, times=times, xi=xi,
                         tau_nm=tau_nm, min_distance=min_distance, defect=defect)


def coupled_resolutions(system: SdeSystem, level_coarse: int, level_fine: int,
                        config: EulerConfig, tree: BrownianTree) -> CoupledRecord:
    """Run the same start at two resolutions on one tree; xi on the coarse grid."""
    if level_fine <= level_coarse:
        raise UsageError(
            f"need level_coarse < level_fine, got {level_coarse} >= {level_fine}"
        )
    if level_fine > tree.level:
        raise UsageError(f"level_fine {level_fine} finer than tree level {tree.level}")
    cfg_c = EulerConfig(level=level_coarse, T=config.T, R_stop=config.R_stop,
                        x0=config.x0, eps0=config.eps0)
    cfg_f = EulerConfig(level=level_fine, T=config.T, R_stop=config.R_stop,
                        x0=config.x0, eps0=config.eps0)
    rec_c = euler_path(system, cfg_c, tree)
    rec_f = euler_path(system, cfg_f, tree, record_stride=1 << (level_fine - level_coarse))
    return _coupled(system, rec_c, rec_f, config, level_coarse, tree)


def coupled_starts(system: SdeSystem, config: EulerConfig, x0, y0,
                   tree: BrownianTree) -> CoupledRecord:
    """Run two initial conditions at one resolution on one tree."""
    x0 = np.asarray(x0, dtype=float).reshape(-1)
    y0 = np.asarray(y0, dtype=float).reshape(-1)
    if x0.shape != y0.shape:
        raise UsageError("x0 and y0 must have the same dimension")
    if np.array_equal(x0, y0):
        raise UsageError("x0 and y0 must differ (confluence is trivial otherwise)")
    cfg_x = EulerConfig(level=config.level, T=config.T, R_stop=config.R_stop,
                        x0=x0, eps0=config.eps0)
    cfg_y = EulerConfig(level=config.level, T=config.T, R_stop=config.R_stop,
                        x0=y0, eps0=config.eps0)
    rec_x = euler_path(system, cfg_x, tree)
    rec_y = euler_path(system, cfg_y, tree)
    return _coupled(system, rec_x, rec_y, config, config.level, tree)
