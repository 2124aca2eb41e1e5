"""Spectral range estimation and the affine map onto [-1, 1].

The solver works on the transformed operator l(A) with
l(t) = (2t - lmax - lmin) / (lmax - lmin), so the whole (estimated)
spectrum lands in [-1, 1] and Chebyshev recurrences are stable.
"""

from dataclasses import dataclass

import numpy as np
from scipy.linalg import eigh_tridiagonal

from .errors import IntervalError
from .sparse import matvec


@dataclass(frozen=True)
class SpectralTransform:
    """Affine spectrum map t -> (2t - lmax - lmin) / (lmax - lmin).

    Attributes
    ----------
    lambda_min_est, lambda_max_est : float
        Estimated (padded) extreme eigenvalues, lambda_min_est < lambda_max_est.
    breakdown : bool
        True if the Lanczos recurrence hit an invariant subspace early; the
        estimates are then exact Ritz values of the captured subspace.
    """

    lambda_min_est: float
    lambda_max_est: float
    breakdown: bool = False

    def map(self, t):
        """Original units -> mapped units."""
        lo, hi = self.lambda_min_est, self.lambda_max_est
        return (2.0 * np.asarray(t) - hi - lo) / (hi - lo)

    def unmap(self, t):
        """Mapped units -> original units."""
        lo, hi = self.lambda_min_est, self.lambda_max_est
        return (np.asarray(t) * (hi - lo) + hi + lo) / 2.0

    @property
    def scale(self):
        """Slope of the map: l(t) = scale * t + shift."""
        return 2.0 / (self.lambda_max_est - self.lambda_min_est)

    @property
    def shift(self):
        """Intercept of the map: l(t) = scale * t + shift."""
        lo, hi = self.lambda_min_est, self.lambda_max_est
        return -(hi + lo) / (hi - lo)

    @property
    def operator_norm(self):
        """max(|lambda_min_est|, |lambda_max_est|), a 2-norm estimate of A."""
        return max(abs(self.lambda_min_est), abs(self.lambda_max_est))


@dataclass(frozen=True)
class TargetInterval:
    """Search interval in original and mapped units with its end angles.

    alpha = arccos(a_t) and beta = arccos(b_t) are the angles of the mapped
    endpoints; beta < alpha because arccos is decreasing.
    """

    a: float
    b: float
    a_t: float
    b_t: float
    alpha: float
    beta: float

    @property
    def width_t(self):
        """Mapped width b_t - a_t."""
        return self.b_t - self.a_t

    def contains(self, values, mapped=False):
        """Closed-interval membership test (elementwise)."""
        v = np.asarray(values)
        if mapped:
            return (v >= self.a_t) & (v <= self.b_t)
        return (v >= self.a) & (v <= self.b)


class MappedOperator:
    """Lazily applies the transformed matrix l(A) to blocks.

    Matrix-vector products are counted against the *original* matrix: one
    application of l(A) costs exactly one application of A.
    """

    def __init__(self, a, tr):
        self.a = a
        self.transform = tr
        lo, hi = tr.lambda_min_est, tr.lambda_max_est
        self._scale = 2.0 / (hi - lo)
        self._shift = (hi + lo) / (hi - lo)

    @property
    def n(self):
        return self.a.n

    def apply(self, x, counter=None):
        return self._scale * matvec(self.a, x, counter) - self._shift * x


def lanczos_extremes(a, steps=50, seed=0):
    """Run Lanczos with full reorthogonalization from a seeded random start.

    Parameters
    ----------
    a : SparseSymmetric
    steps : int
        Krylov dimension (capped at n).
    seed : int
        Seed for the unit-norm Gaussian start vector.

    Returns
    -------
    (theta, resid, breakdown)
        Ritz values (ascending), their residual norms |beta_last * u_last|,
        and whether the recurrence broke down (invariant subspace found).
    """
    n = a.n
    steps = int(steps)
    if steps < 2:
        raise ValueError(f"steps must be >= 2, got {steps}")
    if steps > n:
        raise ValueError(f"steps must be <= n = {n}, got {steps}")
    rng = np.random.default_rng(seed)
    q = rng.standard_normal(n)
    q /= np.linalg.norm(q)

    basis = np.zeros((n, steps))
    alphas = np.zeros(steps)
    betas = np.zeros(steps)  # betas[j] couples steps j and j+1
    breakdown = False
    k = 0
    beta_last = 0.0
    for j in range(steps):
        basis[:, j] = q
        w = matvec(a, q)
        if j > 0:
            w -= betas[j - 1] * basis[:, j - 1]
        alphas[j] = q @ w
        w -= alphas[j] * q
        # Full reorthogonalization against every kept basis vector.
        w -= basis[:, : j + 1] @ (basis[:, : j + 1].T @ w)
        k = j + 1
        beta = np.linalg.norm(w)
        scale = max(1.0, np.max(np.abs(alphas[: j + 1])))
        if beta <= 1e-14 * scale:
            # A vanishing beta at the final step just means the Krylov space
            # is exhausted; only stopping early counts as a breakdown.
            breakdown = j + 1 < steps
            beta_last = 0.0
            break
        beta_last = beta
        if j + 1 < steps:
            betas[j] = beta
            q = w / beta

    if k == 1:
        theta = alphas[:1].copy()
        resid = np.array([beta_last])
        return theta, resid, breakdown
    theta, u = eigh_tridiagonal(alphas[:k], betas[: k - 1])
    resid = np.abs(beta_last * u[-1, :])
    return theta, resid, breakdown


def estimate_spectral_range(a, steps=50, seed=0):
    """Estimate [lambda_min, lambda_max] with residual-padded Lanczos bounds.

    The returned transform uses lambda_min_est = theta_1 - r_1 and
    lambda_max_est = theta_s + r_s, where r is the Ritz residual norm, so
    the true extreme eigenvalues are enclosed with high probability.  A
    one-point spectrum (estimates collapse) is widened symmetrically so the
    map stays well defined.
    """
    theta, resid, breakdown = lanczos_extremes(a, steps=steps, seed=seed)
    # Residuals of converged Ritz pairs underflow below the rounding error
    # of the Ritz values themselves; keep a roundoff-scale safety margin so
    # the padded range still encloses the true extremes.
    safety = len(theta) * np.finfo(np.float64).eps * max(1.0, abs(theta[0]), abs(theta[-1]))
    lo = float(theta[0] - max(resid[0], safety))
    hi = float(theta[-1] + max(resid[-1], safety))
    if hi - lo <= 1e-12 * max(1.0, abs(lo), abs(hi)):
        # One-point spectrum: widen symmetrically so the map is well defined.
        pad = max(1e-8, 1e-8 * abs(hi))
        lo, hi = lo - pad, hi + pad
    return SpectralTransform(lo, hi, breakdown=breakdown)


def exact_transform(lambda_min, lambda_max):
    """Transform from externally supplied exact (or reference) extremes."""
    if not lambda_min < lambda_max:
        raise ValueError(f"need lambda_min < lambda_max, got [{lambda_min}, {lambda_max}]")
    return SpectralTransform(float(lambda_min), float(lambda_max))


def make_interval(tr, a, b):
    """Build the TargetInterval for [a, b] (original units) under ``tr``.

    Raises
    ------
    IntervalError
        If a >= b or [a, b] is not inside [lambda_min_est, lambda_max_est].
    """
    if not a < b:
        raise IntervalError(f"empty interval: a = {a} must be < b = {b}")
    if a < tr.lambda_min_est or b > tr.lambda_max_est:
        raise IntervalError(
            f"interval [{a}, {b}] escapes the estimated spectral range "
            f"[{tr.lambda_min_est}, {tr.lambda_max_est}]"
        )
    a_t = float(tr.map(a))
    b_t = float(tr.map(b))
    # arccos is decreasing: alpha (angle of a_t) is the larger angle.
    return TargetInterval(
        a=float(a),
        b=float(b),
        a_t=a_t,
        b_t=b_t,
        alpha=float(np.arccos(a_t)),
        beta=float(np.arccos(b_t)),
    )


def mapped_interval(a_t, b_t):
    """TargetInterval for endpoints already given in mapped units.

    Convenience for diagnostics that work directly on [-1, 1]; original and
    mapped units coincide (identity transform).
    """
    if not -1.0 <= a_t < b_t <= 1.0:
        raise IntervalError(f"need -1 <= a_t < b_t <= 1, got [{a_t}, {b_t}]")
    return TargetInterval(
        a=float(a_t),
        b=float(b_t),
        a_t=float(a_t),
        b_t=float(b_t),
        alpha=float(np.arccos(a_t)),
        beta=float(np.arccos(b_t)),
    )
