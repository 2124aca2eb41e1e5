"""Degree-selection rules and the stochastic in-interval eigenvalue count."""

import math

import numpy as np
import pytest

from eigenspan import (
    BoundUndefinedError,
    MappedOperator,
    SparseSymmetric,
    constant_degree,
    estimate_count,
    exact_transform,
    filter_scalar,
    make_filter_spec,
    mapped_interval,
    recommended_block_size,
    select_degree,
    theoretical_degree_bound,
)
from helpers import diag_matrix, random_spectrum_matrix

IDENTITY_TRANSFORM = exact_transform(-1.0, 1.0)
NARROW_WIDTH = 0.100008  # mapped width of a [1.9, 2.1] band in a [-1.696e-3, 3.998] range


@pytest.mark.parametrize(
    "m, expected",
    [(1, 211), (2, 212), (4, 220), (8, 259), (16, 433)],
)
def test_select_degree_reference_values(m, expected):
    assert select_degree(NARROW_WIDTH, m).d == expected


def test_select_degree_echoes_inputs():
    choice = select_degree(0.25, 4, d_factor=2.0, k_factor=5.0)
    assert choice.width == 0.25
    assert choice.m == 4
    assert choice.d_factor == 2.0
    assert choice.k_factor == 5.0
    assert choice.d >= 2


def test_select_degree_clamps_to_two():
    assert select_degree(2.0, 1).d == 2


def test_select_degree_monotonicity():
    widths = [1.0, 0.5, 0.2, 0.1, 0.05]
    by_width = [select_degree(w, 4).d for w in widths]
    assert all(lo <= hi for lo, hi in zip(by_width, by_width[1:]))

    by_m = [select_degree(0.2, m).d for m in (1, 2, 4, 8, 16)]
    assert all(lo <= hi for lo, hi in zip(by_m, by_m[1:]))

    by_d_factor = [select_degree(0.2, 4, d_factor=f).d for f in (1.0, 2.0, 4.0, 8.0)]
    assert all(lo <= hi for lo, hi in zip(by_d_factor, by_d_factor[1:]))

    by_k_factor = [select_degree(0.2, 4, k_factor=k).d for k in (10.0, 5.0, 2.0, 1.0)]
    assert all(lo <= hi for lo, hi in zip(by_k_factor, by_k_factor[1:]))


def test_select_degree_validation():
    with pytest.raises(ValueError):
        select_degree(0.0, 1)
    with pytest.raises(ValueError):
        select_degree(2.5, 1)
    with pytest.raises(ValueError):
        select_degree(0.2, 0)
    with pytest.raises(ValueError):
        select_degree(0.2, 1, d_factor=0.5)
    with pytest.raises(ValueError):
        select_degree(0.2, 1, k_factor=12.0)


def test_constant_degree_conventions():
    assert constant_degree(NARROW_WIDTH, convention="adjusted") == 310
    assert constant_degree(NARROW_WIDTH, convention="literal") == 312
    with pytest.raises(ValueError):
        constant_degree(0.2, convention="other")


def test_theoretical_bound_single_basis_example():
    iv = mapped_interval(-0.25, 0.25)
    bound = theoretical_degree_bound(iv, m=1, n_ev=1, ell=1, zeta=1.0)
    assert 29.0 < bound < 30.0
    assert math.ceil(bound) == 30


def test_theoretical_bound_single_basis_closed_form():
    iv = mapped_interval(-0.1, 0.3)
    for n_ev, zeta in [(1, 1.0), (5, 0.5), (20, 2.0)]:
        delta = iv.width_t / n_ev
        expected = math.pi**2 / delta ** (4.0 / 3.0) * ((1 + zeta) / zeta) ** (1.0 / 3.0) - 2.0
        got = theoretical_degree_bound(iv, m=1, n_ev=n_ev, ell=3, zeta=zeta)
        assert got == pytest.approx(expected, rel=1e-14)


def test_theoretical_bound_undefined_without_separation_gap():
    iv = mapped_interval(-0.1, 0.1)
    with pytest.raises(BoundUndefinedError):
        theoretical_degree_bound(iv, m=4, n_ev=5, ell=5)


def test_theoretical_bound_dominates_practical_rule():
    for width in (0.1, 0.2, 0.5):
        iv = mapped_interval(-width / 2, width / 2)
        for m in (1, 2, 4, 8, 16):
            for n_ev in (20, 100):
                ell = recommended_block_size(n_ev, m)
                if m >= 2 and n_ev - 1 - ell <= 0:
                    continue
                bound = theoretical_degree_bound(iv, m=m, n_ev=n_ev, ell=ell)
                assert bound >= select_degree(width, m).d


def test_theoretical_bound_validation():
    iv = mapped_interval(-0.1, 0.1)
    with pytest.raises(ValueError):
        theoretical_degree_bound(iv, m=0, n_ev=5, ell=2)
    with pytest.raises(ValueError):
        theoretical_degree_bound(iv, m=1, n_ev=5, ell=2, zeta=0.0)


def test_count_estimate_is_deterministic():
    a = diag_matrix(np.linspace(-0.9, 0.9, 50))
    op = MappedOperator(a, IDENTITY_TRANSFORM)
    iv = mapped_interval(-0.2, 0.2)
    first = estimate_count(op, iv, d=200, samples=10, seed=42)
    second = estimate_count(op, iv, d=200, samples=10, seed=42)
    assert first.n_ev_tilde == second.n_ev_tilde
    np.testing.assert_array_equal(first.per_sample, second.per_sample)
    assert first.samples == 10
    assert first.seed == 42
    assert first.d == 200


def test_count_estimate_seven_inside(rng):
    inside = np.linspace(-0.06, 0.06, 7)
    outside = np.concatenate([np.linspace(-0.95, -0.25, 147), np.linspace(0.25, 0.95, 146)])
    a = diag_matrix(np.concatenate([inside, outside]))
    op = MappedOperator(a, IDENTITY_TRANSFORM)
    iv = mapped_interval(-0.1, 0.1)
    hits = 0
    for seed in range(20):
        est = estimate_count(op, iv, d=2000, samples=200, seed=seed)
        if 6.0 <= est.n_ev_tilde <= 8.5:
            hits += 1
        assert est.per_sample.min() >= -0.5
        assert est.per_sample.max() <= a.n + 0.5
    assert hits >= 19


def test_count_estimate_whole_spectrum(rng):
    n = 100
    a = diag_matrix(rng.uniform(-0.5, 0.5, size=n))
    op = MappedOperator(a, IDENTITY_TRANSFORM)
    iv = mapped_interval(-0.8, 0.8)
    est = estimate_count(op, iv, d=1500, samples=10, seed=0)
    assert est.n_ev_tilde == pytest.approx(n + 1, rel=0.02)


def test_count_estimate_empty_gap(rng):
    values = np.concatenate([rng.uniform(-0.9, -0.3, 60), rng.uniform(0.3, 0.9, 60)])
    a = diag_matrix(values)
    op = MappedOperator(a, IDENTITY_TRANSFORM)
    iv = mapped_interval(-0.1, 0.1)
    est = estimate_count(op, iv, d=2000, samples=30, seed=1)
    assert 0.5 <= est.n_ev_tilde <= 1.5


def test_count_estimate_mean_matches_dense_trace(rng):
    n = 80
    eigenvalues = rng.uniform(-0.9, 0.9, size=n)
    a = SparseSymmetric.from_dense(random_spectrum_matrix(eigenvalues, rng))
    op = MappedOperator(a, IDENTITY_TRANSFORM)
    iv = mapped_interval(-0.2, 0.3)
    d = 400

    spec = make_filter_spec(iv, d=d, m=1)
    oracle = filter_scalar(spec, 0, eigenvalues).sum() + 1.0

    estimates = np.array(
        [estimate_count(op, iv, d=d, samples=8, seed=seed).n_ev_tilde for seed in range(100)]
    )
    standard_error = estimates.std(ddof=1) / math.sqrt(estimates.size)
    assert abs(estimates.mean() - oracle) <= 3.0 * standard_error


def test_count_estimate_validation():
    a = diag_matrix(np.linspace(-0.5, 0.5, 10))
    op = MappedOperator(a, IDENTITY_TRANSFORM)
    iv = mapped_interval(-0.2, 0.2)
    with pytest.raises(ValueError):
        estimate_count(op, iv, d=200, samples=0)
    with pytest.raises(ValueError):
        estimate_count(op, iv, d=1, samples=5)


def test_recommended_block_size():
    assert recommended_block_size(200.0, 4) == 75
    assert recommended_block_size(36.0, 4) == 14
    assert recommended_block_size(0.3, 8) == 1
    with pytest.raises(ValueError):
        recommended_block_size(10.0, 0)
