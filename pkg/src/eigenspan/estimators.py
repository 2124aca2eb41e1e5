"""Expansion-degree selection and stochastic eigenvalue counting."""

import math
from dataclasses import dataclass

import numpy as np

from .errors import BoundUndefinedError
from .filters import build_moment_block, make_filter_spec

PI2 = math.pi**2


@dataclass(frozen=True)
class DegreeChoice:
    """Selected expansion degree together with the knobs that produced it.

    ``width`` is the mapped interval width the rule was evaluated on.
    """

    d: int
    width: float
    m: int
    d_factor: float
    k_factor: float


def select_degree(width_t, m, d_factor=1.0, k_factor=10.0):
    """Practical expansion degree for a mapped interval width and block count.

    d = ceil(D * pi^2 / w^(4/3) + pi^2 * (M - 1)^2 / (K^2 * w)) - 2,

    clamped to at least 2.  The first term drives the cubic-rate tail of the
    filter error, the second controls the part growing with the basis degree;
    D in [1, 8] and K in [1, 10] trade filter sharpness against matrix
    applications per iteration.

    Parameters
    ----------
    width_t : float
        Interval width in mapped units, 0 < width_t <= 2.
    m : int
        Number of basis polynomials (m >= 1).
    d_factor, k_factor : float
        The D and K knobs above.

    Returns
    -------
    DegreeChoice
    """
    if not 0.0 < width_t <= 2.0:
        raise ValueError(f"mapped width must be in (0, 2], got {width_t}")
    if m < 1:
        raise ValueError(f"need m >= 1, got {m}")
    if not 1.0 <= d_factor <= 8.0:
        raise ValueError(f"d_factor must be in [1, 8], got {d_factor}")
    if not 1.0 <= k_factor <= 10.0:
        raise ValueError(f"k_factor must be in [1, 10], got {k_factor}")
    raw = (
        d_factor * PI2 / width_t ** (4.0 / 3.0)
        + PI2 * (m - 1) ** 2 / (k_factor**2 * width_t)
    )
    return DegreeChoice(
        d=max(2, math.ceil(raw) - 2),
        width=float(width_t),
        m=int(m),
        d_factor=float(d_factor),
        k_factor=float(k_factor),
    )


def constant_degree(width_t, convention="adjusted"):
    """Width-only degree rule d = ceil(pi^2 / w^(4/3) + pi^2 / w) (- 2).

    Two offset conventions are in circulation for this rule; ``adjusted``
    subtracts 2 from the ceiling (consistent with ``select_degree``),
    ``literal`` evaluates the ceiling expression as written.
    """
    if not 0.0 < width_t <= 2.0:
        raise ValueError(f"mapped width must be in (0, 2], got {width_t}")
    raw = math.ceil(PI2 / width_t ** (4.0 / 3.0) + PI2 / width_t)
    if convention == "adjusted":
        return max(2, raw - 2)
    if convention == "literal":
        return raw
    raise ValueError(f"unknown convention {convention!r}")


def _cheb_t(m, x):
    """Chebyshev T_m(x) for x >= 1 via the cosh form (no overflow for the
    argument ranges used here; x < 1 falls back to the cos form)."""
    if x >= 1.0:
        return math.cosh(m * math.acosh(x))
    return math.cos(m * math.acos(max(-1.0, x)))


def theoretical_degree_bound(iv, m, n_ev, ell, zeta=1.0):
    """Sufficient expansion degree from the worst-case convergence analysis.

    Assumes n_ev eigenvalues spread uniformly over the mapped interval, so
    the boundary gaps shrink to width / n_ev.  Returned as a real number:
    any integer degree above it satisfies the sufficient condition.  This
    is a diagnostic; it is far too pessimistic to drive the solver (use
    ``select_degree`` for that).

    For a single basis polynomial (m == 1) the condition is

        d + 2 > pi^2 / delta^(4/3) * ((1 + zeta) / zeta)^(1/3),

    with delta = width / n_ev and zeta the contraction-safety ratio.  For
    m >= 2 the max-form rule with the standard safety ratio baked in
    (zeta = 1, damping loss bounded by 1/3) is evaluated:

        d + 2 > max{ pi^2 n_ev^(4/3) / w^(4/3) * max(12, 3 tau)^(1/3),
                     pi^2 (m - 1)^2 / w * max(12, 12 tau / 5) },

    where tau is the Chebyshev growth ratio of the uniform model.

    Raises
    ------
    BoundUndefinedError
        If m >= 2 and n_ev - 1 - ell <= 0: the uniform model then has no
        gap separating wanted from unwanted eigenvalues.
    """
    if m < 1 or n_ev < 1 or ell < 1:
        raise ValueError("m, n_ev and ell must all be >= 1")
    if zeta <= 0.0:
        raise ValueError(f"zeta must be positive, got {zeta}")
    w = iv.width_t

    if m == 1:
        delta = w / n_ev
        rhs = PI2 / delta ** (4.0 / 3.0) * ((1.0 + zeta) / zeta) ** (1.0 / 3.0)
        return rhs - 2.0

    if n_ev - 1 - ell <= 0:
        raise BoundUndefinedError(
            f"uniform model needs n_ev - 1 - ell > 0, got n_ev = {n_ev}, ell = {ell}"
        )
    deg = m - 1
    tau = _cheb_t(deg, (n_ev + 1 + ell) / (n_ev - 1 - ell)) / _cheb_t(
        deg, (n_ev - 1 + ell) / (n_ev - 1 - ell)
    )
    cubic = (
        PI2 * n_ev ** (4.0 / 3.0) / w ** (4.0 / 3.0)
        * max(12.0, 3.0 * tau) ** (1.0 / 3.0)
    )
    linear = PI2 * deg**2 / w * max(12.0, 12.0 * tau / 5.0)
    return max(cubic, linear) - 2.0


@dataclass(frozen=True)
class CountEstimate:
    """Stochastic-trace estimate of the eigenvalue count in the interval."""

    n_ev_tilde: float
    samples: int
    per_sample: np.ndarray
    seed: int
    d: int


def estimate_count(a_t, iv, d=2000, samples=30, seed=0):
    """Estimate the number of eigenvalues in the interval by a filtered trace.

    Uses the degree-d damped expansion of the plain indicator (constant
    basis polynomial) on i.i.d. sign vectors v_i, returning

        n_ev_tilde = mean_i( v_i^T F_d(1)(A_t) v_i ) + 1,

    the +1 compensating the damped filter's mass deficit inside the
    interval.  Deterministic for a fixed seed.

    Parameters
    ----------
    a_t : MappedOperator
    iv : TargetInterval
    d : int
        Expansion degree for the indicator filter.
    samples : int
        Number of sign probes (s >= 1).
    seed : int

    Returns
    -------
    CountEstimate
    """
    if samples < 1:
        raise ValueError(f"need samples >= 1, got {samples}")
    if d < 2:
        raise ValueError(f"need degree >= 2, got {d}")
    rng = np.random.default_rng(seed)
    n = a_t.n
    v = rng.integers(0, 2, size=(n, samples)).astype(np.float64) * 2.0 - 1.0
    spec = make_filter_spec(iv, d=d, m=1, basis="chebyshev")
    block = build_moment_block(a_t, v, spec)
    per_sample = np.einsum("ij,ij->j", v, block.s)
    return CountEstimate(
        n_ev_tilde=float(per_sample.mean() + 1.0),
        samples=int(samples),
        per_sample=per_sample,
        seed=int(seed),
        d=int(d),
    )


def recommended_block_size(n_ev_tilde, m):
    """Block size ell = ceil(1.5 * n_ev_tilde / m), at least 1."""
    if m < 1:
        raise ValueError(f"need m >= 1, got {m}")
    return max(1, math.ceil(1.5 * n_ev_tilde / m))
