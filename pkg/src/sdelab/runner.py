"""Experiment orchestration: request models in, file artifacts out.

Every runner returns the same shape: a list of (name, content) text files
(always including config.echo.json, the canonical dump of the validated
request) plus a small summary dict. The service returns these payloads
over HTTP and the CLI writes them to disk, so outputs are byte-identical
no matter where the computation ran or how many workers it used.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import conditions, estimators
from .errors import UsageError
from .euler import EulerConfig, euler_path
from .models import SdeSystem
from .noise import sample_tree
from .serialize import json_text
from .service.schemas import (
    CheckRequest,
    ConfluenceRequest,
    ConvergeRequest,
    EvalTestFnRequest,
    FilePayload,
    MomentsRequest,
    MonotoneRequest,
    RunArtifacts,
    SimulateRequest,
    StrongErrorRequest,
)

__all__ = [
    "run_simulate",
    "run_check",
    "run_moments",
    "run_confluence",
    "run_monotone",
    "run_converge",
    "run_strong_error",
    "run_eval_test_fn",
]


def _echo(req) -> FilePayload:
    return FilePayload(name="config.echo.json", content=json_text(req.model_dump(mode="json")))


def _resolve_x0(x0, system: SdeSystem) -> np.ndarray:
    if x0 is None:
        return np.ones(system.d)
    return np.asarray(x0, dtype=float)


def run_simulate(req: SimulateRequest, workers: int = 1) -> RunArtifacts:
    system = req.model.build()
    cfg = EulerConfig(level=req.level, T=req.T, R_stop=req.R_stop,
                      x0=_resolve_x0(req.x0, system))

    def one(i: int) -> FilePayload:
        stream = req.stream_base + i
        tree = sample_tree(system.m, req.T, req.level, req.seed, stream)
        rec = euler_path(system, cfg, tree)
        return FilePayload(name=f"path_{stream}.csv", content=rec.to_csv())

    if workers > 1 and req.paths > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            files = list(pool.map(one, range(req.paths)))
    else:
        files = [one(i) for i in range(req.paths)]
    files.append(_echo(req))
    return RunArtifacts(files=files, summary={"paths": req.paths, "level": req.level})


def run_check(req: CheckRequest, workers: int = 1) -> RunArtifacts:
    cond = req.condition
    if cond == "k-ratio":
        gamma_r = req.gamma_r.build("gamma_r")
        report = conditions.check_k_ratio(gamma_r, K=req.K, c0=req.c0)
    else:
        if req.model is None:
            raise UsageError(f"condition '{cond}' needs a model")
        system = req.model.build()
        if cond == "monotonicity":
            sampler = conditions.PairSampler(d=system.d, R=req.R, c0=req.c0,
                                             count=req.samples, seed=req.seed)
            report = conditions.check_monotonicity(
                system, req.eta.build("eta"), g=req.g.build(), R=req.R,
                c0=req.c0, sampler=sampler)
        elif cond == "coercivity":
            sampler = conditions.PointSampler(d=system.d, r_min=req.K_radius,
                                              r_max=req.r_max, count=req.samples,
                                              seed=req.seed)
            report = conditions.check_coercivity(
                system, req.gamma.build("gamma"), f=req.f.build(),
                K_radius=req.K_radius, sampler=sampler)
        elif cond == "moment":
            sampler = conditions.PointSampler(d=system.d, r_max=req.r_max,
                                              count=req.samples, seed=req.seed,
                                              include_origin=True)
            report = conditions.check_moment_condition(
                system, f=req.f.build(), sampler=sampler)
        else:  # confluence
            sampler = conditions.PairSampler(d=system.d, R=req.R, c0=req.c0,
                                             count=req.samples, seed=req.seed)
            report = conditions.check_confluence_condition(
                system, req.gamma_r.build("gamma_r"), K=req.K, R=req.R,
                c0=req.c0, sampler=sampler)
    files = [FilePayload(name="report.json", content=json_text(report.to_dict())),
             _echo(req)]
    return RunArtifacts(files=files, summary={"condition": cond,
                                              "verdict": report.verdict,
                                              "worst_margin": report.worst_margin})


def _resolve_f(req: MomentsRequest, system: SdeSystem):
    if req.f.kind == "auto":
        sampler = conditions.PointSampler(
            d=system.d, r_max=req.calibration_r_max,
            count=req.calibration_samples, seed=req.seed, include_origin=True)
        const = conditions.calibrate_moment_f(system, sampler)
        return (lambda t: const), {"kind": "auto", "calibrated_const": const}
    return req.f.build(), req.f.model_dump(mode="json")


def run_moments(req: MomentsRequest, workers: int = 1) -> RunArtifacts:
    system = req.model.build()
    f, f_info = _resolve_f(req, system)
    x0 = _resolve_x0(req.x0, system)
    report = estimators.estimate_sup_moment(
        system, p=req.p, t=req.T, level=req.level, paths=req.paths,
        seed=req.seed, x0=x0, R_stop=req.R_stop, workers=workers)
    spec = req.constants
    base = estimators.BoundConstants.default(req.p)
    consts = estimators.BoundConstants(
        p=req.p,
        c_p=spec.C_p if spec.C_p is not None else base.c_p,
        c_p_prime=spec.C_p_prime if spec.C_p_prime is not None else base.c_p_prime,
        c_p_dprime=spec.C_p_dprime if spec.C_p_dprime is not None else base.c_p_dprime,
    )
    if req.bound in ("i", "both"):
        report.bound_i = estimators.moment_bound(f, req.p, req.T, x0,
                                                 constants=consts, branch="i")
    if req.bound in ("ii", "both"):
        report.bound_ii = estimators.moment_bound(f, req.p, req.T, x0,
                                                  constants=consts, branch="ii")
    payload = report.to_dict()
    payload["f"] = f_info
    files = [FilePayload(name="moment_report.json", content=json_text(payload)),
             _echo(req)]
    summary = {"estimate": report.estimate, "ci_halfwidth": report.ci_halfwidth,
               "excluded_paths": report.excluded_paths}
    if report.bound_i:
        summary["log_bound_i"] = report.bound_i.log_value
    if report.bound_ii:
        summary["log_bound_ii"] = report.bound_ii.log_value
    return RunArtifacts(files=files, summary=summary)


def run_confluence(req: ConfluenceRequest, workers: int = 1) -> RunArtifacts:
    system = req.model.build()
    stats = estimators.confluence_stats(
        system, req.x0, req.y0, req.eps, T=req.T, level=req.level,
        paths=req.paths, seed=req.seed, R_stop=req.R_stop, workers=workers)
    files = [FilePayload(name="confluence_stats.json", content=json_text(stats.to_dict())),
             _echo(req)]
    return RunArtifacts(files=files, summary={
        "frequencies": dict(zip(map(str, stats.eps), stats.frequencies)),
        "min_distance": stats.min_distance_quantiles.get("q0")})


def run_monotone(req: MonotoneRequest, workers: int = 1) -> RunArtifacts:
    system = req.model.build()
    stats = estimators.monotonicity_stats(
        system, req.x0, req.y0, T=req.T, level=req.level, paths=req.paths,
        seed=req.seed, R_stop=req.R_stop, workers=workers)
    files = [FilePayload(name="monotone_stats.json", content=json_text(stats.to_dict())),
             _echo(req)]
    return RunArtifacts(files=files,
                        summary={"violation_fraction": stats.violation_fraction})


def _curve_files(curve: estimators.LevelCurve, stem: str, fmt: str) -> list[FilePayload]:
    files = []
    if fmt in ("csv", "both"):
        files.append(FilePayload(name=f"{stem}.csv", content=curve.to_csv()))
    if fmt in ("json", "both"):
        files.append(FilePayload(name=f"{stem}.json", content=json_text(curve.to_dict())))
    return files


def run_converge(req: ConvergeRequest, workers: int = 1) -> RunArtifacts:
    system = req.model.build()
    curve = estimators.convergence_diagnostic(
        system, _resolve_x0(req.x0, system), req.T, req.levels, req.ref_level, paths=req.paths,
        seed=req.seed, R_stop=req.R_stop, workers=workers)
    files = _curve_files(curve, "converge", req.format) + [_echo(req)]
    return RunArtifacts(files=files, summary={
        "levels": curve.levels, "values": curve.values})


def run_strong_error(req: StrongErrorRequest, workers: int = 1) -> RunArtifacts:
    system = req.model.build()
    curve = estimators.strong_error_vs_oracle(
        system, _resolve_x0(req.x0, system), req.T, req.levels, paths=req.paths, seed=req.seed,
        oracle_pad=req.oracle_pad, R_stop=req.R_stop, workers=workers)
    files = _curve_files(curve, "strong_error", req.format) + [_echo(req)]
    return RunArtifacts(files=files, summary={
        "levels": curve.levels, "values": curve.values, "slope": curve.slope})


def run_eval_test_fn(req: EvalTestFnRequest, workers: int = 1) -> RunArtifacts:
    control = req.control.build("gamma" if req.kind == "varphi" else
                                ("eta" if req.kind == "phi_delta" else "gamma_r"))
    result = estimators.eval_test_function(req.kind, control, req.delta, req.x, req.c0)
    files = [FilePayload(name="test_function.json", content=json_text(result.to_dict())),
             _echo(req)]
    return RunArtifacts(files=files, summary={"value": result.value,
                                              "error_estimate": result.error_estimate})
