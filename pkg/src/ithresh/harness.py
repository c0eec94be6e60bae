"""Seeded experiment grids: one trial = one (dictionary, signal) draw, a solve,
and the analysis of its trace.

Trial ``i`` uses seed ``base_seed + i`` for both the dictionary (when random)
and the signal, so any single trial can be reproduced in isolation.
"""
import csv
import dataclasses
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .analysis import check_condition, compute_ell, verify_trace_bounds
from .dictionaries import (
    Dictionary,
    format_float,
    gen_gaussian,
    gen_identity_plus_hadamard,
    gen_signal,
)
from .exceptions import ArgumentError, FormatError, NotDetectedError, NumericalError
from .solvers import (
    SolverConfig,
    geometric_schedule,
    iht_solve,
    ist_fixed,
    ist_solve,
    ita_schedule_solve,
    omp_solve,
)

__all__ = [
    "TrialSpec",
    "TrialResult",
    "run_trial",
    "run_experiment",
    "parse_schedule",
    "parse_config",
    "load_config",
    "make_dictionary",
    "TRIAL_HEADER",
    "SUMMARY_HEADER",
]

ENSEMBLES = ("gaussian", "id_hadamard", "identity")
ALGORITHMS = ("iht", "ist", "ist_fixed", "ita_schedule", "omp")

# theorem governing each algorithm's detection bound
_THEOREM_OF = {"iht": "thm3_iht", "ist": "thm4_ist", "omp": "thm1_omp"}
_ELL_PARAMS = {"iht": (3, 4), "ist": (2, 5)}

SUCCESS_REL_TOL = 1e-6


def parse_schedule(text):
    """``"l0,ratio,floor"`` -> (l0, ratio, floor). ``l0`` may be ``auto``,
    meaning ``||Phi^T y||_inf`` of the instance."""
    parts = [p.strip() for p in str(text).split(",")]
    if len(parts) != 3:
        raise ArgumentError(f"schedule must be 'l0,ratio,floor', got {text!r}")
    try:
        l0 = None if parts[0] == "auto" else float(parts[0])
        ratio, floor = float(parts[1]), float(parts[2])
    except ValueError:
        raise ArgumentError(f"schedule must be 'l0,ratio,floor', got {text!r}") from None
    return l0, ratio, floor


@dataclass(frozen=True)
class TrialSpec:
    """One experiment configuration.

    ``lam`` is an absolute fixed threshold for ``ist_fixed``; ``lam_rel``
    instead scales ``||Phi^T y||_inf`` per instance. ``schedule`` and
    ``mode`` drive ``ita_schedule``.
    """

    ensemble: str = "id_hadamard"
    n: int = 256
    N: int = 512
    k: int = 5
    magnitude_ratio: float = 1.0
    algorithm: str = "iht"
    lam: float | None = None
    lam_rel: float | None = None
    step: float = 1.0
    schedule: str | None = None
    mode: str = "hard"
    base_seed: int = 0
    trials: int = 1
    record_gamma: bool = False
    max_iters: int = 1000
    conv_tol: float = 1e-12

    def __post_init__(self):
        if self.ensemble not in ENSEMBLES:
            raise ArgumentError(f"ensemble must be one of {ENSEMBLES}, got {self.ensemble!r}")
        if self.algorithm not in ALGORITHMS:
            raise ArgumentError(f"algorithm must be one of {ALGORITHMS}, got {self.algorithm!r}")
        if self.trials < 1:
            raise ArgumentError("trials must be >= 1")
        if not 1 <= self.k <= self.N:
            raise ArgumentError("need 1 <= k <= N")
        if self.ensemble == "id_hadamard" and self.N != 2 * self.n:
            raise ArgumentError("id_hadamard ensemble needs N = 2n")
        if self.ensemble == "identity" and self.N != self.n:
            raise ArgumentError("identity ensemble needs N = n")
        if self.algorithm == "ist_fixed" and (self.lam is None) == (self.lam_rel is None):
            raise ArgumentError("ist_fixed needs exactly one of lam, lam_rel")
        if self.algorithm == "ita_schedule":
            if self.schedule is None:
                raise ArgumentError("ita_schedule needs a schedule 'l0,ratio,floor'")
            parse_schedule(self.schedule)
            if self.mode not in ("hard", "soft"):
                raise ArgumentError("mode must be hard or soft")
        SolverConfig(k=self.k, max_iters=self.max_iters, conv_tol=self.conv_tol)


@dataclass(frozen=True)
class TrialResult:
    trial_index: int
    seed: int
    status: str
    success: bool
    iterations_to_detect: int | None
    iterations_run: int
    bound: int | None
    bound_ok: bool | None
    violations: int
    rel_error: float | None
    max_gamma: float | None = None
    error: str | None = None


TRIAL_HEADER = ("trial", "seed", "status", "success", "iterations_to_detect",
                "iterations_run", "bound", "bound_ok", "violations", "rel_error",
                "max_gamma", "error")

SUMMARY_HEADER = ("trials", "success_rate", "mean_iterations_to_detect",
                  "max_iterations_to_detect", "bound_ok_rate", "total_violations", "errors")


def make_dictionary(ensemble, n, N, seed):
    if ensemble == "gaussian":
        return gen_gaussian(n, N, seed)
    if ensemble == "id_hadamard":
        return gen_identity_plus_hadamard(n)
    return Dictionary(np.eye(n), "identity")


def _solve(spec, d, y, truth):
    cfg = SolverConfig(k=spec.k, max_iters=spec.max_iters, conv_tol=spec.conv_tol,
                       record_gamma=spec.record_gamma)
    algo = spec.algorithm
    if algo == "iht":
        return iht_solve(d, y, cfg, truth)
    if algo == "ist":
        return ist_solve(d, y, cfg, truth)
    if algo == "omp":
        return omp_solve(d, y, spec.k, truth=truth)
    corr_max = float(np.max(np.abs(d.matrix.T @ y)))
    if algo == "ist_fixed":
        lam = spec.lam if spec.lam is not None else spec.lam_rel * corr_max
        return ist_fixed(d, y, lam, cfg, truth, step=spec.step)
    l0, ratio, floor = parse_schedule(spec.schedule)
    if l0 is None:
        l0 = max(corr_max, floor)
    return ita_schedule_solve(d, y, spec.mode, geometric_schedule(l0, ratio, floor), cfg, truth)


def run_trial(spec, trial_index):
    """Generate, solve and analyse one trial. Never raises for solver or
    analysis failures; those are returned as an ``error`` record."""
    seed = spec.base_seed + trial_index
    try:
        d = make_dictionary(spec.ensemble, spec.n, spec.N, seed)
        truth = gen_signal(spec.N, spec.k, spec.magnitude_ratio, seed)
        x_o = truth.to_dense()
        y = d.matrix @ x_o
        result = _solve(spec, d, y, truth)
    except (ArgumentError, NumericalError, FloatingPointError) as exc:
        return TrialResult(trial_index, seed, "error", False, None, 0, None, None, 0, None,
                           error=f"{type(exc).__name__}: {exc}")

    detect = next((s.t for s in result.trace if s.detected == truth.k), None)
    rel = float(np.linalg.norm(result.x_hat - x_o) / np.linalg.norm(x_o))
    exact_support = tuple(np.flatnonzero(result.x_hat)) == truth.support
    success = bool(exact_support and rel <= SUCCESS_REL_TOL and detect is not None)
    gammas = [s.gamma for s in result.trace if s.gamma is not None]

    bound = bound_ok = None
    violations = 0
    theorem = _THEOREM_OF.get(spec.algorithm)
    if theorem is not None and check_condition(theorem, truth.k, d.mu):
        if spec.algorithm == "omp":
            bound = truth.k
        else:
            bound = compute_ell(truth, *_ELL_PARAMS[spec.algorithm])[1]
            mode = "hard" if spec.algorithm == "iht" else "soft"
            try:
                violations = len(verify_trace_bounds(result, truth, d.mu, mode))
            except NotDetectedError:
                violations = 0
        bound_ok = detect is not None and detect <= bound
    return TrialResult(trial_index, seed, result.status, success, detect,
                       result.iterations_run, bound, bound_ok, violations, rel,
                       max(gammas) if gammas else None)


def _run_indexed(args):
    spec, i = args
    return run_trial(spec, i)


def aggregate(results):
    detects = [r.iterations_to_detect for r in results if r.iterations_to_detect is not None]
    applicable = [r.bound_ok for r in results if r.bound_ok is not None]
    return {
        "trials": len(results),
        "success_rate": sum(r.success for r in results) / len(results),
        "mean_iterations_to_detect": sum(detects) / len(detects) if detects else None,
        "max_iterations_to_detect": max(detects) if detects else None,
        "bound_ok_rate": sum(applicable) / len(applicable) if applicable else None,
        "total_violations": sum(r.violations for r in results),
        "errors": sum(r.error is not None for r in results),
    }


def _cell(v):
    if v is None:
        return ""
    if isinstance(v, bool):
        return int(v)
    if isinstance(v, float):
        return format_float(v)
    return v


def write_trials_csv(path, results):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(TRIAL_HEADER)
        for r in results:
            w.writerow([_cell(v) for v in dataclasses.astuple(r)])


def write_summary_csv(path, summary):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(SUMMARY_HEADER)
        w.writerow([_cell(summary[key]) for key in SUMMARY_HEADER])


def run_experiment(spec, out_dir=None, workers=1):
    """Run every trial of ``spec`` and aggregate.

    Results are ordered by trial index whatever ``workers`` is. When
    ``out_dir`` is given, ``trials.csv`` and ``summary.csv`` are written there
    after the batch completes; the directory is checked for writability first.
    """
    if out_dir is not None:
        out_dir = Path(out_dir)
        try:
            out_dir.mkdir(parents=True, exist_ok=True)
        except OSError as exc:
            raise OSError(f"cannot create output directory {out_dir}: {exc}") from exc
        if not os.access(out_dir, os.W_OK):
            raise OSError(f"output directory {out_dir} is not writable")
    jobs = [(spec, i) for i in range(spec.trials)]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_run_indexed, jobs))
    else:
        results = [_run_indexed(job) for job in jobs]
    summary = aggregate(results)
    if out_dir is not None:
        write_trials_csv(out_dir / "trials.csv", results)
        write_summary_csv(out_dir / "summary.csv", summary)
    return summary, results


# -- config files -------------------------------------------------------------

_FIELD_TYPES = {f.name: f.type for f in dataclasses.fields(TrialSpec)}


def _convert(key, raw, lineno, path):
    kind = _FIELD_TYPES[key]
    try:
        if kind is bool:
            if raw.lower() not in ("true", "false", "1", "0", "yes", "no"):
                raise ValueError(raw)
            return raw.lower() in ("true", "1", "yes")
        if kind is int:
            return int(raw)
        if kind in (float, float | None):
            value = float(raw)
            if not math.isfinite(value):
                raise ValueError(raw)
            return value
        return raw
    except ValueError:
        raise FormatError(f"bad value {raw!r} for {key}", line=lineno, path=path) from None


def parse_config(text, path=None):
    """Flat ``key=value`` lines with ``#`` comments -> TrialSpec."""
    values = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise FormatError("expected key=value", line=lineno, path=path)
        key, raw = (part.strip() for part in line.split("=", 1))
        if key not in _FIELD_TYPES:
            raise FormatError(f"unknown key {key!r}", line=lineno, path=path)
        values[key] = _convert(key, raw, lineno, path)
    return TrialSpec(**values)


def load_config(path):
    return parse_config(Path(path).read_text(encoding="utf-8"), path=path)
