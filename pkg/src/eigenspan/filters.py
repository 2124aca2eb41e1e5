"""Damped Chebyshev approximation of the interval indicator times a polynomial.

For the indicator h of [a_t, b_t] (value 1 inside, 1/2 at the endpoints, 0
outside) and a basis polynomial p_k, the degree-d filtered expansion is

    F_d(p_k)(t) = c_{k,0}/2 + sum_{j=1..d} rho_{j,d} c_{k,j} T_j(t),

where T_j are Chebyshev polynomials of the first kind, rho_{j,d} are the
damping factors that make the underlying kernel nonnegative, and

    c_{k,j} = (2/pi) * integral_{beta}^{alpha} p_k(cos(theta)) cos(j theta) dtheta

with alpha = arccos(a_t), beta = arccos(b_t).  Applying F_d(p_k) to a matrix
uses only the three-term recurrence, d matrix applications per start vector.
"""

import math
import warnings
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.integrate import IntegrationWarning, quad

from .errors import CoefficientQuadratureError, RecurrenceDivergenceError

#: Absolute tolerance requested from the adaptive coefficient quadrature.
COEFF_ABSTOL = 1e-13
#: An estimate is rejected if its reported error exceeds this.
COEFF_MAX_ABSERR = 1e-10

BASES = ("chebyshev", "scaled", "monomial")


def jackson_factors(d):
    """Damping factors rho_{j, d}, j = 0..d.

    rho_{j,d} = sin((j+1) a) / ((d+2) sin a) + (1 - (j+1)/(d+2)) cos(j a)
    with a = pi / (d + 2).  rho_0 = 1 analytically; the factors decay to
    ~0 at j = d, which is what suppresses the Gibbs oscillations.
    """
    if d < 0:
        raise ValueError(f"degree must be >= 0, got {d}")
    j = np.arange(d + 1, dtype=np.float64)
    alpha = math.pi / (d + 2)
    rho = np.sin((j + 1) * alpha) / ((d + 2) * math.sin(alpha))
    rho += (1.0 - (j + 1) / (d + 2)) * np.cos(j * alpha)
    return rho


def _basis_scalar(basis, k, t, a_t, b_t):
    """Evaluate the k-th basis polynomial at scalar t (mapped units)."""
    if basis == "monomial":
        return t**k
    u = (2.0 * t - a_t - b_t) / (b_t - a_t)
    if basis == "scaled":
        return u**k
    if basis == "chebyshev":
        # u can stray past [-1, 1] by roundoff at the interval ends.
        return math.cos(k * math.acos(min(1.0, max(-1.0, u))))
    raise ValueError(f"unknown basis {basis!r}")


@lru_cache(maxsize=128)
def _coefficient_row(a_t, b_t, alpha, beta, basis, k, d):
    """Coefficients c_{k, 0..d} by adaptive Gauss-Kronrod quadrature.

    j = 0 uses plain adaptive quadrature; j >= 1 uses the oscillatory
    cos(j theta)-weighted rule, which stays accurate up to j ~ 1e4.
    The returned array is cached and marked read-only.
    """

    def p_of_cos(theta):
        return _basis_scalar(basis, k, math.cos(theta), a_t, b_t)

    coeffs = np.empty(d + 1)
    with warnings.catch_warnings():
        warnings.simplefilter("error", IntegrationWarning)
        for j in range(d + 1):
            try:
                if j == 0:
                    val, abserr = quad(
                        p_of_cos, beta, alpha,
                        epsabs=COEFF_ABSTOL, epsrel=COEFF_ABSTOL, limit=500,
                    )
                else:
                    val, abserr = quad(
                        p_of_cos, beta, alpha, weight="cos", wvar=j,
                        epsabs=COEFF_ABSTOL, epsrel=COEFF_ABSTOL,
                        limit=500, maxp1=200,
                    )
            except IntegrationWarning as exc:
                raise CoefficientQuadratureError(
                    f"coefficient quadrature failed for basis={basis}, k={k}, j={j}: {exc}"
                ) from None
            if not math.isfinite(val) or abserr > COEFF_MAX_ABSERR:
                raise CoefficientQuadratureError(
                    f"coefficient quadrature for basis={basis}, k={k}, j={j} "
                    f"reported error {abserr:.2e}"
                )
            coeffs[j] = 2.0 / math.pi * val
    coeffs.setflags(write=False)
    return coeffs


def step_coefficients(iv, basis, k, d):
    """Expansion coefficients c_{k, j}, j = 0..d, for basis polynomial k.

    Parameters
    ----------
    iv : TargetInterval
    basis : {'chebyshev', 'scaled', 'monomial'}
        Polynomial family on the mapped interval: Chebyshev of the first
        kind in the interval-normalized variable (default elsewhere),
        plain powers of that variable, or raw powers of t.
    k : int
        Basis index (polynomial degree), k >= 0.
    d : int
        Expansion degree, d >= 0.

    Returns
    -------
    ndarray, shape (d + 1,), read-only (cached).
    """
    if basis not in BASES:
        raise ValueError(f"unknown basis {basis!r}, expected one of {BASES}")
    if k < 0:
        raise ValueError(f"basis index must be >= 0, got {k}")
    if d < 0:
        raise ValueError(f"degree must be >= 0, got {d}")
    return _coefficient_row(iv.a_t, iv.b_t, iv.alpha, iv.beta, basis, k, d)


@dataclass(frozen=True)
class FilterSpec:
    """Fully assembled filter: damping factors and per-basis coefficients.

    Attributes
    ----------
    interval : TargetInterval
    d : int
        Expansion degree.
    m : int
        Number of basis polynomials (degrees 0 .. m-1).
    basis : str
    rho : ndarray, shape (d + 1,)
    coeffs : ndarray, shape (m, d + 1)
        Row k holds c_{k, 0..d}.
    """

    interval: "TargetInterval"  # noqa: F821 - forward ref for docs only
    d: int
    m: int
    basis: str
    rho: np.ndarray
    coeffs: np.ndarray


def make_filter_spec(iv, d, m, basis="chebyshev"):
    """Build the FilterSpec for m moment blocks at expansion degree d."""
    if m < 1:
        raise ValueError(f"need at least one basis polynomial, got m = {m}")
    rho = jackson_factors(d)
    coeffs = np.vstack([step_coefficients(iv, basis, k, d) for k in range(m)])
    return FilterSpec(interval=iv, d=d, m=m, basis=basis, rho=rho, coeffs=coeffs)


def filter_scalar(spec, k, t):
    """Evaluate F_d(p_k) pointwise on mapped values t in [-1, 1].

    Vectorized over t; used by diagnostics and by the dense-oracle tests.
    Values outside [-1, 1] (beyond 1e-12 roundoff) are rejected, since the
    Chebyshev cos-form is only defined there.
    """
    t = np.atleast_1d(np.asarray(t, dtype=np.float64))
    if np.any(np.abs(t) > 1.0 + 1e-12):
        raise ValueError("filter evaluation points must lie in [-1, 1]")
    theta = np.arccos(np.clip(t, -1.0, 1.0))
    weighted = spec.rho * spec.coeffs[k]  # rho_j * c_{k, j}
    out = np.full(t.shape, 0.5 * weighted[0])
    # Chunk the Fourier sum to keep the (degrees x points) matrix small.
    j = np.arange(1, spec.d + 1, dtype=np.float64)
    for start in range(0, t.size, 512):
        sl = slice(start, min(start + 512, t.size))
        out[sl] += np.cos(np.outer(theta[sl], j)) @ weighted[1:]
    return out if out.size > 1 else float(out[0])


@dataclass(frozen=True)
class MomentBlock:
    """Stacked filtered blocks S = [S_0 | ... | S_{m-1}] and the MV bill."""

    s: np.ndarray
    mv_count: int


def build_moment_block(a_t, v, spec, counter=None):
    """Apply all m filters to a start block with one shared recurrence.

    Computes S_k = F_d(p_k)(A_t) V for k = 0..m-1 using the three-term
    Chebyshev recurrence on the mapped operator: exactly d * ell matrix
    applications for an n-by-ell start block, independent of m.

    Parameters
    ----------
    a_t : MappedOperator
    v : ndarray, shape (n, ell)
    spec : FilterSpec
    counter : MVCounter, optional

    Returns
    -------
    MomentBlock
        ``s`` has shape (n, m * ell); columns k*ell .. (k+1)*ell - 1 hold S_k.

    Raises
    ------
    RecurrenceDivergenceError
        If any recurrence iterate stops being finite (spectrum escaping
        [-1, 1], i.e. an unsafe spectral transform); names the step.
    """
    v = np.asarray(v, dtype=np.float64)
    if v.ndim != 2:
        raise ValueError(f"start block must be 2-D, got shape {v.shape}")
    n, ell = v.shape
    m, d = spec.m, spec.d
    weighted = spec.rho * spec.coeffs  # (m, d+1): rho_j * c_{k, j}

    s = np.zeros((n, m * ell))
    blocks = [s[:, k * ell : (k + 1) * ell] for k in range(m)]

    v_prev = v
    for k in range(m):
        blocks[k] += 0.5 * weighted[k, 0] * v_prev
    if d >= 1:
        v_curr = a_t.apply(v_prev, counter)
        for k in range(m):
            blocks[k] += weighted[k, 1] * v_curr
        for j in range(2, d + 1):
            v_prev, v_curr = v_curr, 2.0 * a_t.apply(v_curr, counter) - v_prev
            if not np.all(np.isfinite(v_curr)):
                raise RecurrenceDivergenceError(
                    f"recurrence diverged at step {j} of {d}; "
                    "the spectral transform does not enclose the spectrum",
                    j,
                )
            for k in range(m):
                blocks[k] += weighted[k, j] * v_curr
    return MomentBlock(s=s, mv_count=d * ell)
