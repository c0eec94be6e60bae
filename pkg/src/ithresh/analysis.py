"""Recovery guarantees: coherence conditions, per-coefficient phase lengths,
iteration bounds, and checks of solver traces against the decay bounds.
"""
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from ._validation import check_count, check_positive, check_vector
from .core import spectral_norm_symmetric
from .exceptions import ArgumentError, FormatError, NotDetectedError

__all__ = [
    "THEOREMS",
    "TheoremReport",
    "BoundViolation",
    "DetectionRecord",
    "check_condition",
    "compute_ell",
    "theorem_report",
    "verify_trace_bounds",
    "restricted_gram_deviation",
    "kkt_residual",
    "detection_schedule",
    "BOUND_SLACK",
]

THEOREMS = ("thm1_omp", "thm3_iht", "thm4_ist")

# multiplicative slack absorbing floating-point roundoff in bound checks
BOUND_SLACK = 1e-9

# (base, offset) of the phase-length condition ratio_i < base**(ell_i - offset)
_ELL_PARAMS = {"thm3_iht": (3, 4), "thm4_ist": (2, 5)}

_NOTES = {
    "thm1_omp": "k <= (1 + 1/mu)/2; OMP needs exactly k greedy steps",
    "thm3_iht": "k < 1/(3.1 mu); bound = sum(ell) + ell[-1] + k",
    "thm4_ist": ("k < 1/(4.1 mu) (strict form; the supporting detection step is stated "
                 "with <=); bound = sum(ell) + ell[-1] + k"),
}


def check_condition(theorem, k, mu):
    """Whether sparsity ``k`` satisfies the coherence condition of ``theorem``.

    Comparisons are done in exact rational arithmetic on the float value of
    ``mu``, so the verdict never depends on rounding of ``1/mu``.
    ``mu == 0`` (orthonormal columns) satisfies every condition.
    """
    if theorem not in THEOREMS:
        raise ArgumentError(f"unknown theorem {theorem!r}; expected one of {THEOREMS}")
    k = check_count(k, "k")
    if not np.isfinite(mu) or mu < 0:
        raise ArgumentError(f"mu must be a finite nonnegative real, got {mu!r}")
    if mu == 0:
        return True
    kmu = k * Fraction(float(mu))
    if theorem == "thm1_omp":
        # k <= (1 + 1/mu)/2  <=>  2 k mu <= mu + 1
        return 2 * kmu <= Fraction(float(mu)) + 1
    if theorem == "thm3_iht":
        return kmu * Fraction(31, 10) < 1
    return kmu * Fraction(41, 10) < 1


def compute_ell(signal, base, offset):
    """Phase lengths and the detection-iteration bound for a sorted signal.

    ``ell[i]`` is the smallest integer with
    ``|x(i)| / |x(i+1)| < base**(ell[i] - offset)`` for consecutive sorted
    magnitudes. The bound is ``sum(ell) + ell[-1] + k`` for ``k >= 2`` (the
    undefined last phase length is taken equal to the previous one) and
    ``1 + k`` for ``k == 1``.
    """
    mags = [abs(v) for _, v in signal.entries] if hasattr(signal, "entries") else \
        [abs(float(v)) for v in signal]
    if not mags:
        raise ArgumentError("signal has no entries")
    if any(b > a for a, b in zip(mags, mags[1:])):
        raise ArgumentError("signal magnitudes must be in descending order")
    base = check_count(base, "base", minimum=2)
    offset = check_count(offset, "offset")
    ell = []
    for a, b in zip(mags, mags[1:]):
        ratio = Fraction(a) / Fraction(b)
        e = 0
        while not ratio < Fraction(base) ** e:
            e += 1
        ell.append(e + offset)
    k = len(mags)
    bound = sum(ell) + ell[-1] + k if k >= 2 else 1 + k
    return tuple(ell), bound


@dataclass(frozen=True)
class TheoremReport:
    theorem: str
    mu: float
    k: int
    coherence_ok: bool
    ell: tuple
    iteration_bound: int
    ratio_ok: bool
    note: str = ""

    def to_text(self):
        lines = [
            f"theorem={self.theorem}",
            f"mu={self.mu!r}",
            f"k={self.k}",
            f"coherence_ok={str(self.coherence_ok).lower()}",
            "ell=[" + ", ".join(str(v) for v in self.ell) + "]",
            f"iteration_bound={self.iteration_bound}",
            f"ratio_ok={str(self.ratio_ok).lower()}",
        ]
        if self.note:
            lines.append(f"note={self.note}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text):
        kv = {}
        for lineno, line in enumerate(text.splitlines(), start=1):
            if not line.strip():
                continue
            if "=" not in line:
                raise FormatError("expected key=value", line=lineno)
            key, value = line.split("=", 1)
            kv[key.strip()] = value.strip()
        try:
            ell_text = kv["ell"].strip("[]").strip()
            return cls(
                theorem=kv["theorem"],
                mu=float(kv["mu"]),
                k=int(kv["k"]),
                coherence_ok=kv["coherence_ok"] == "true",
                ell=tuple(int(v) for v in ell_text.split(",")) if ell_text else (),
                iteration_bound=int(kv["iteration_bound"]),
                ratio_ok=kv["ratio_ok"] == "true",
                note=kv.get("note", ""),
            )
        except (KeyError, ValueError) as exc:
            raise FormatError(f"bad report: {exc}") from None


def theorem_report(theorem, signal, mu):
    """Evaluate a recovery condition for a concrete signal and coherence.

    ``ratio_ok`` records that consecutive magnitude ratios are finite and
    non-increasing in order, which is what the phase lengths presuppose.
    For the OMP condition ``ell`` is empty and the bound is ``k`` steps.
    """
    if theorem not in THEOREMS:
        raise ArgumentError(f"unknown theorem {theorem!r}")
    k = signal.k
    ok = check_condition(theorem, k, mu)
    mags = signal.magnitudes
    ratio_ok = bool(k >= 1 and np.all(np.isfinite(mags)) and np.all(mags > 0))
    if theorem == "thm1_omp":
        ell, bound = (), k
    else:
        ell, bound = compute_ell(signal, *_ELL_PARAMS[theorem])
    return TheoremReport(theorem, float(mu), k, ok, ell, bound, ratio_ok, _NOTES[theorem])


@dataclass(frozen=True)
class BoundViolation:
    lemma: str
    iteration: int
    observed: float
    bound: float


def _steps_of(result):
    return result.trace if hasattr(result, "trace") else tuple(result)


def verify_trace_bounds(result, truth, mu, mode, anchor="detection"):
    """Check the post-detection behaviour of a thresholding trace.

    Let ``m`` be the first step at which all ``k`` true indices are active.
    For every ``s >= 0``:

    * hard mode: ``max_j |z^{m+s}(j) - x_o(j)| <= 1.5 (k mu)**(s+1) |x_o(k)|``
    * soft mode: ``max_{i active} |x^{m+s}(i) - x_o(i)| <= 2 (2 k mu)**(s+1) |x_o(k)|``

    and every true index stays active. Returns the list of violations (empty
    means the trace complies). Raises ``NotDetectedError`` if the support is
    never fully detected.

    ``anchor="entry"`` instead starts at the first fully-detected step whose
    error already meets the decay bound's entry condition (``1.5 k mu |x_o(k)|``
    on ``z`` for hard mode, ``4 k mu |x_o(k)|`` on active entries for soft).
    With large dynamic range that condition can lag full detection by a
    few steps, and the ``s = 0`` bound does not hold before it.
    """
    if mode not in ("hard", "soft"):
        raise ArgumentError(f"mode must be 'hard' or 'soft', got {mode!r}")
    if anchor not in ("detection", "entry"):
        raise ArgumentError(f"anchor must be 'detection' or 'entry', got {anchor!r}")
    steps = _steps_of(result)
    k = truth.k
    smallest = float(truth.magnitudes[-1])
    if mode == "hard":
        name, coef, rate, entry = "hard_decay", 1.5, k * mu, 1.5 * k * mu * smallest
    else:
        name, coef, rate, entry = "soft_decay", 2.0, 2 * k * mu, 4 * k * mu * smallest

    def observed_of(step):
        value = step.err_zmax if mode == "hard" else step.err_active
        if value is None:
            raise ArgumentError(f"trace lacks the error field needed for {mode} mode")
        return value

    if steps and steps[0].detected is None:
        raise ArgumentError("trace was recorded without ground truth")
    m = None
    for i, s in enumerate(steps):
        if s.detected == k and (anchor == "detection" or observed_of(s) <= entry):
            m = i
            break
    if m is None:
        raise NotDetectedError(f"true support (k={k}) never fully detected "
                               f"in {len(steps)} steps")
    violations = []
    for s, step in enumerate(steps[m:]):
        if step.detected < k:
            violations.append(BoundViolation("support_stability", step.t,
                                             float(step.detected), float(k)))
        observed = observed_of(step)
        bound = coef * rate ** (s + 1) * smallest
        if observed > bound * (1 + BOUND_SLACK):
            violations.append(BoundViolation(name, step.t, observed, bound))
    return violations


@dataclass(frozen=True)
class DetectionRecord:
    first: int | None
    stable: bool


def detection_schedule(result, truth):
    """First iteration at which each true index becomes active, and whether
    it stays active for the rest of the trace."""
    steps = _steps_of(result)
    if any(s.active is None for s in steps):
        raise ArgumentError("detection schedule needs per-step active sets")
    out = {}
    for idx in truth.support:
        first = None
        stable = False
        for pos, step in enumerate(steps):
            if idx in step.active:
                first = step.t
                stable = all(idx in later.active for later in steps[pos:])
                break
        out[idx] = DetectionRecord(first, stable)
    return out


def restricted_gram_deviation(d, L):
    """``||I - Phi_L^T Phi_L||_2`` for the columns indexed by ``L``.

    The diagonal of ``Phi_L^T Phi_L`` is one by the unit-norm invariant and is
    taken as exactly one, so a single column gives exactly zero.
    """
    idx = [check_count(int(i), "index") for i in L]
    if not idx:
        raise ArgumentError("support set must be non-empty")
    if max(idx) >= d.N:
        raise ArgumentError(f"index {max(idx)} out of range for N={d.N}")
    sub = d.matrix[:, idx]
    a = -(sub.T @ sub)
    a = 0.5 * (a + a.T)
    np.fill_diagonal(a, 0.0)
    return spectral_norm_symmetric(a)


def kkt_residual(d, y, x, lam):
    """Distance from stationarity for ``min ||y - Phi x||^2 + 2 lam ||x||_1``.

    With ``c = Phi^T (y - Phi x)``: ``|c_i - lam sign(x_i)|`` on the support and
    ``max(0, |c_i| - lam)`` off it; the maximum over all ``i`` is returned.
    """
    lam = check_positive(lam, "lambda")
    y = check_vector(y, "y", size=d.n)
    x = check_vector(x, "x", size=d.N)
    c = d.matrix.T @ (y - d.matrix @ x)
    on = x != 0
    res = np.where(on, np.abs(c - lam * np.sign(x)), np.maximum(np.abs(c) - lam, 0.0))
    return float(res.max())
