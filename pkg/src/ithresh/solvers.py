"""Sparse recovery algorithms with per-iteration tracing.

All thresholding solvers start from ``x = 0`` and iterate

    z^t = x^{t-1} + Phi^T (y - Phi x^{t-1}),    x^t = eta_t(z^t),

so trace step ``t`` (1-based) describes ``z^t``, the threshold used on it, and
the resulting iterate ``x^t``. With this numbering ``z^1 = Phi^T y``.
"""
import csv
import math
from dataclasses import dataclass, field

import numpy as np

from ._validation import check_count, check_positive, check_vector
from .analysis import restricted_gram_deviation
from .core import support_of, top_k_select
from .dictionaries import Dictionary, SparseSignal, format_float
from .exceptions import ArgumentError, FormatError, NumericalError

__all__ = [
    "SolverConfig",
    "IterationStep",
    "SolveResult",
    "iht_solve",
    "ist_solve",
    "ist_fixed",
    "ita_schedule_solve",
    "omp_solve",
    "geometric_schedule",
    "p1_objective",
    "write_trace_csv",
    "read_trace_csv",
    "TRACE_HEADER",
]

CONVERGED = "converged"
MAX_ITERS = "max_iters_reached"

TRACE_HEADER = ("iter", "lambda", "support_size", "detected", "err_l2",
                "err_zmax", "support_changed", "gamma", "err_active")


@dataclass(frozen=True)
class SolverConfig:
    k: int = 0
    max_iters: int = 1000
    conv_tol: float = 1e-12
    record_gamma: bool = False

    def __post_init__(self):
        check_count(self.k, "k")
        check_count(self.max_iters, "max_iters", minimum=1)
        check_positive(self.conv_tol, "conv_tol")


@dataclass(frozen=True)
class IterationStep:
    """One trace record.

    Error fields are ``None`` unless ground truth was supplied. ``active`` is
    ``None`` only for steps read back from a trace CSV, which stores sizes but
    not index sets.
    """

    t: int
    lam: float
    active: tuple | None
    support_size: int
    support_changed: bool
    detected: int | None = None
    err_l2: float | None = None
    err_zmax: float | None = None
    err_active: float | None = None
    gamma: float | None = None
    objective: float | None = None
    orthogonality: float | None = None


@dataclass(frozen=True)
class SolveResult:
    x_hat: np.ndarray
    status: str
    trace: tuple = field(default_factory=tuple)

    @property
    def iterations_run(self):
        return len(self.trace)

    @property
    def converged(self):
        return self.status == CONVERGED


def p1_objective(phi, y, x, lam):
    """``||y - Phi x||^2 + 2 lam ||x||_1``."""
    r = y - phi @ x
    return float(r @ r + 2.0 * lam * np.abs(x).sum())


def _prepare(d, y, truth):
    if not isinstance(d, Dictionary):
        raise ArgumentError("expected a Dictionary")
    y = check_vector(y, "y", size=d.n)
    if truth is not None:
        if not isinstance(truth, SparseSignal):
            raise ArgumentError("truth must be a SparseSignal")
        if truth.dim != d.N:
            raise ArgumentError(f"truth has dim {truth.dim}, dictionary has N={d.N}")
    return y


class _Tracer:
    """Builds IterationStep records for one solve call."""

    def __init__(self, d, truth, record_gamma):
        self.d = d
        self.record_gamma = record_gamma
        self.prev_active = ()
        if truth is not None:
            self.x_o = truth.to_dense()
            self.true_support = frozenset(truth.support)
        else:
            self.x_o = None
            self.true_support = None
        self.steps = []

    def record(self, t, lam, z, x_new, **extra):
        active = support_of(x_new)
        fields = dict(t=t, lam=float(lam), active=active, support_size=len(active),
                      support_changed=active != self.prev_active)
        if self.x_o is not None:
            diff = x_new - self.x_o
            fields["detected"] = len(self.true_support.intersection(active))
            fields["err_l2"] = float(np.linalg.norm(diff))
            if z is not None:
                fields["err_zmax"] = float(np.max(np.abs(z - self.x_o)))
            fields["err_active"] = float(np.max(np.abs(diff[list(active)]))) if active else 0.0
        if self.record_gamma:
            L = set(active) | set(self.prev_active)
            if self.true_support is not None:
                L |= self.true_support
            fields["gamma"] = restricted_gram_deviation(self.d, sorted(L)) if L else 0.0
        fields.update(extra)
        self.steps.append(IterationStep(**fields))
        self.prev_active = active


def _iterate(d, y, rule, cfg, truth, *, step=1.0, may_stop=None, objective_lam=None):
    """Shared thresholded-Landweber loop.

    ``rule(z, t)`` returns ``(x_new, lam_t)``. ``may_stop(t)`` gates the
    step-size convergence test (schedules must reach their floor first).
    """
    phi = d.matrix
    x = np.zeros(d.N)
    tracer = _Tracer(d, truth, cfg.record_gamma)
    status = MAX_ITERS
    for t in range(1, cfg.max_iters + 1):
        with np.errstate(over="ignore", invalid="ignore"):
            z = x + step * (phi.T @ (y - phi @ x))
            x_new, lam = rule(z, t)
            delta = float(np.linalg.norm(x_new - x))
            extra = {}
            if objective_lam is not None:
                extra["objective"] = p1_objective(phi, y, x_new, objective_lam)
        if not (np.isfinite(delta) and np.isfinite(extra.get("objective", 0.0))):
            raise NumericalError(f"iteration diverged at step {t}")
        tracer.record(t, lam, z, x_new, **extra)
        x = x_new
        if delta < cfg.conv_tol and (may_stop is None or may_stop(t)):
            status = CONVERGED
            break
    return SolveResult(x, status, tuple(tracer.steps))


def _kth_magnitude(z, k):
    if k >= z.size:
        return 0.0
    return float(np.partition(np.abs(z), z.size - k - 1)[z.size - k - 1])


def _soft(z, lam):
    return np.sign(z) * np.maximum(np.abs(z) - lam, 0.0)


def iht_solve(d, y, cfg, truth=None):
    """Iterative hard thresholding with the top-k policy.

    Each step keeps exactly the ``cfg.k`` largest-magnitude entries of ``z``
    (ties to the lowest index). The recorded threshold is the (k+1)-th
    largest magnitude, i.e. the scalar the policy would apply.
    """
    y = _prepare(d, y, truth)
    k = check_count(cfg.k, "k", minimum=1)

    def rule(z, t):
        keep = top_k_select(z, k)
        x_new = np.zeros_like(z)
        x_new[keep] = z[keep]
        return x_new, _kth_magnitude(z, k)

    return _iterate(d, y, rule, cfg, truth)


def ist_solve(d, y, cfg, truth=None):
    """Iterative soft thresholding with the top-k policy.

    The (k+1)-th largest magnitude of ``z`` is applied as a scalar soft
    threshold, so at most ``k`` entries survive, each shrunk by it.
    """
    y = _prepare(d, y, truth)
    k = check_count(cfg.k, "k", minimum=1)

    def rule(z, t):
        lam = _kth_magnitude(z, k)
        return _soft(z, lam), lam

    return _iterate(d, y, rule, cfg, truth)


def ist_fixed(d, y, lam, cfg, truth=None, step=1.0):
    """Soft thresholding with a constant threshold ``lam``.

    With ``step=1`` this is the classical unit-step iteration. A smaller
    ``step`` (with threshold ``step * lam``) is the proximal-gradient form of
    the same problem ``min ||y - Phi x||^2 + 2 lam ||x||_1``, which converges
    for ``step < 2 / ||Phi||_2^2``. Every trace step records the objective.
    """
    y = _prepare(d, y, truth)
    lam = check_positive(lam, "lambda")
    step = check_positive(step, "step")
    thresh = step * lam

    def rule(z, t):
        return _soft(z, thresh), lam

    return _iterate(d, y, rule, cfg, truth, step=step, objective_lam=lam)


def geometric_schedule(l0, ratio, floor):
    """Thresholds ``max(l0 * ratio**t, floor)`` for t = 0, 1, ... up to the floor.

    The returned list ends at the first value equal to ``floor``; solvers
    reuse the last value indefinitely.
    """
    l0 = check_positive(l0, "l0")
    floor = check_positive(floor, "floor")
    if not 0.0 < ratio < 1.0:
        raise ArgumentError(f"ratio must lie in (0, 1), got {ratio!r}")
    if floor > l0:
        raise ArgumentError("floor must not exceed l0")
    out = []
    t = 0
    while True:
        lam = max(l0 * ratio**t, floor)
        out.append(lam)
        if lam == floor:
            return out
        t += 1


def ita_schedule_solve(d, y, mode, schedule, cfg, truth=None):
    """Thresholding iteration driven by an explicit nonincreasing schedule.

    Iteration ``t`` uses ``schedule[t-1]``; past the end the last value is
    reused. Convergence is only declared once the schedule is exhausted.
    With ``cfg.record_gamma`` each step records ``||I - Phi_L^T Phi_L||`` over
    ``L = supp(x^t) | supp(x^{t-1}) | supp(x_o)``.
    """
    y = _prepare(d, y, truth)
    if mode not in ("hard", "soft"):
        raise ArgumentError(f"mode must be 'hard' or 'soft', got {mode!r}")
    sched = [check_positive(v, "schedule value") for v in schedule]
    if not sched:
        raise ArgumentError("schedule must be non-empty")
    if any(b > a for a, b in zip(sched, sched[1:])):
        raise ArgumentError("schedule must be nonincreasing")
    last = len(sched)

    def rule(z, t):
        lam = sched[min(t, last) - 1]
        if mode == "hard":
            return np.where(np.abs(z) > lam, z, 0.0), lam
        return _soft(z, lam), lam

    return _iterate(d, y, rule, cfg, truth, may_stop=lambda t: t >= last)


def omp_solve(d, y, k, truth=None, tol=1e-12, max_cond=1e12):
    """Orthogonal matching pursuit for ``k`` greedy steps.

    Each step adds the column most correlated with the residual (ties to the
    lowest index) and re-fits all selected coefficients by least squares via
    the normal equations. Stops early once the residual norm drops below
    ``tol * ||y||``. The trace ``lam`` field holds the winning correlation
    magnitude; ``orthogonality`` holds ``max |<phi_j, r>|`` over selected j.
    """
    y = _prepare(d, y, truth)
    k = check_count(k, "k", minimum=1)
    phi = d.matrix
    tracer = _Tracer(d, truth, False)
    x = np.zeros(d.N)
    residual = y.copy()
    selected = []
    y_norm = float(np.linalg.norm(y))
    status = CONVERGED
    for t in range(1, k + 1):
        if float(np.linalg.norm(residual)) <= tol * y_norm:
            break
        corr = phi.T @ residual
        j = int(np.argmax(np.abs(corr)))
        if j in selected:
            break
        selected.append(j)
        sub = phi[:, selected]
        gram = sub.T @ sub
        cond = np.linalg.cond(gram)
        if not np.isfinite(cond) or cond > max_cond:
            raise NumericalError(
                f"restricted Gram matrix is ill-conditioned (cond={cond:.3g}) at step {t}"
            )
        coef = np.linalg.solve(gram, sub.T @ y)
        x = np.zeros(d.N)
        x[selected] = coef
        residual = y - sub @ coef
        orth = float(np.max(np.abs(sub.T @ residual)))
        tracer.record(t, abs(corr[j]), None, x, orthogonality=orth)
    return SolveResult(x, status, tuple(tracer.steps))


# -- trace CSV ----------------------------------------------------------------

def _fmt_opt(v):
    return "" if v is None else format_float(v)


def write_trace_csv(path, result):
    """One row per step; floats as 17-significant-digit decimals."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(TRACE_HEADER)
        for s in result.trace:
            w.writerow([
                s.t, format_float(s.lam), s.support_size,
                "" if s.detected is None else s.detected,
                _fmt_opt(s.err_l2), _fmt_opt(s.err_zmax),
                int(s.support_changed), _fmt_opt(s.gamma), _fmt_opt(s.err_active),
            ])


def read_trace_csv(path):
    """Parse a trace CSV back into IterationStep records (``active=None``)."""
    def opt_float(text, lineno):
        if text == "":
            return None
        try:
            return float(text)
        except ValueError:
            raise FormatError(f"non-numeric value {text!r}", line=lineno, path=path) from None

    steps = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        required = TRACE_HEADER[:8]
        if header is None or tuple(header[:8]) != required:
            raise FormatError(f"trace header must start with {','.join(required)}",
                              line=1, path=path)
        has_active = len(header) > 8 and header[8] == "err_active"
        for lineno, row in enumerate(reader, start=2):
            if len(row) != len(header):
                raise FormatError(f"expected {len(header)} fields, got {len(row)}",
                                  line=lineno, path=path)
            try:
                t = int(row[0])
                size = int(row[2])
                detected = None if row[3] == "" else int(row[3])
                changed = bool(int(row[6]))
            except ValueError as exc:
                raise FormatError(str(exc), line=lineno, path=path) from None
            lam = opt_float(row[1], lineno)
            if lam is None or math.isnan(lam):
                raise FormatError("lambda is required", line=lineno, path=path)
            steps.append(IterationStep(
                t=t, lam=lam, active=None, support_size=size, support_changed=changed,
                detected=detected, err_l2=opt_float(row[4], lineno),
                err_zmax=opt_float(row[5], lineno), gamma=opt_float(row[7], lineno),
                err_active=opt_float(row[8], lineno) if has_active else None,
            ))
    return tuple(steps)

