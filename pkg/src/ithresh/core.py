"""Threshold operators, the gradient (Landweber) step and small linear-algebra
primitives used by every solver.

Vectors and matrices are plain float64 numpy arrays; ``SupportSet`` values are
sorted tuples of column indices.
"""
import numpy as np

from ._validation import check_matrix, check_nonneg, check_vector, check_count
from .exceptions import ArgumentError, NumericalError

__all__ = [
    "hard_threshold",
    "soft_threshold",
    "landweber_step",
    "top_k_threshold_value",
    "top_k_select",
    "spectral_norm_symmetric",
    "lemma_sequence",
    "support_of",
]


def hard_threshold(v, lam):
    """Keep entries with ``|v[i]| > lam`` (strictly), zero the rest."""
    v = check_vector(v, "v")
    lam = check_nonneg(lam, "lam")
    return np.where(np.abs(v) > lam, v, 0.0)


def soft_threshold(v, lam):
    """Shrink magnitudes by ``lam`` and clamp at zero, preserving sign."""
    v = check_vector(v, "v")
    lam = check_nonneg(lam, "lam")
    return np.sign(v) * np.maximum(np.abs(v) - lam, 0.0)


def landweber_step(phi, y, x):
    """Return ``z = x + phi.T @ (y - phi @ x)``."""
    phi = check_matrix(phi, "phi")
    n, N = phi.shape
    y = check_vector(y, "y", size=n)
    x = check_vector(x, "x", size=N)
    return x + phi.T @ (y - phi @ x)


def top_k_threshold_value(z, k):
    """Magnitude of the (k+1)-th largest entry of ``z``.

    Returns 0.0 when ``k >= len(z)``: there is no (k+1)-th entry and a zero
    threshold leaves every nonzero in place.
    """
    z = check_vector(z, "z")
    k = check_count(k, "k")
    if k >= z.size:
        return 0.0
    mags = np.abs(z)
    # (k+1)-th largest == element at ascending position size-k-1
    return float(np.partition(mags, z.size - k - 1)[z.size - k - 1])


def top_k_select(z, k):
    """Indices of the ``k`` largest-magnitude entries, ties to the lowest index.

    Returned sorted ascending.
    """
    z = np.asarray(z, dtype=np.float64)
    if k >= z.size:
        return np.arange(z.size)
    if k == 0:
        return np.array([], dtype=np.intp)
    # stable sort on -|z| puts lower indices first among equal magnitudes
    order = np.argsort(-np.abs(z), kind="stable")
    return np.sort(order[:k])


def support_of(x):
    return tuple(int(i) for i in np.flatnonzero(x))


def _start_vector(n):
    # All-ones is orthogonal to the top eigenvector of some signed structured
    # matrices (e.g. [[-1, 1], [1, -1]]); a fixed irrational sequence avoids that.
    v = 1.0 + np.mod(np.arange(1, n + 1) * 0.6180339887498949, 1.0)
    return v / np.linalg.norm(v)


def spectral_norm_symmetric(a, rtol=1e-10, max_iter=10_000, sym_tol=1e-10):
    """Largest absolute eigenvalue of a symmetric matrix.

    Power iteration on ``a @ a`` so that eigenvalues of either sign are
    handled; ``a @ a`` is never formed explicitly. Convergence is declared when
    an a posteriori estimate of the remaining error, extrapolated from the
    contraction of successive Rayleigh-quotient increments, falls below
    ``rtol`` relative.
    """
    a = check_matrix(a, "a")
    n, m = a.shape
    if n != m:
        raise ArgumentError(f"matrix must be square, got shape {a.shape}")
    scale = max(1.0, float(np.max(np.abs(a))))
    if np.max(np.abs(a - a.T)) > sym_tol * scale:
        raise ArgumentError("matrix is not symmetric within tolerance")
    if not np.any(a):
        return 0.0
    if n == 1:
        return abs(float(a[0, 0]))

    v = _start_vector(n)
    theta = 0.0
    prev_diff = None
    for _ in range(max_iter):
        av = a @ v
        new_theta = float(np.linalg.norm(av))
        w = a @ av
        wn = np.linalg.norm(w)
        if wn == 0.0:
            # v landed in the null space of a; nothing left to amplify
            return new_theta
        v = w / wn
        diff = abs(new_theta - theta)
        theta = new_theta
        if diff == 0.0:
            return theta
        if prev_diff is not None and prev_diff > 0.0:
            q = min(diff / prev_diff, 1.0)
            remaining = diff * q / (1.0 - q) if q < 1.0 else np.inf
            if remaining <= rtol * theta and diff <= rtol * theta:
                return theta
        prev_diff = diff
    raise NumericalError(
        f"power iteration did not converge in {max_iter} iterations"
    )


def lemma_sequence(alpha, beta, s):
    """``alpha + alpha**2 + ... + alpha**s + beta * alpha**(s + 1)``.

    The geometric part is empty when ``s == 0``. For ``0 < alpha < 1`` the
    sequence is bounded by ``alpha / (1 - alpha)`` when ``beta*(1-alpha) < 1``,
    by ``beta * alpha`` when ``beta*(1-alpha) > 1``, and is constant at
    ``alpha / (1 - alpha)`` in the boundary case.
    """
    if not 0.0 < alpha < 1.0:
        raise ArgumentError(f"alpha must lie in (0, 1), got {alpha!r}")
    beta = check_nonneg(beta, "beta")
    s = check_count(s, "s")
    total = 0.0
    power = 1.0
    for _ in range(s):
        power *= alpha
        total += power
    return total + beta * power * alpha
