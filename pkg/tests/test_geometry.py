"""Geometry primitives: metrics, unit-ball volumes, appendix utilities."""

import math

import numpy as np
import pytest

from singlab.geometry import (
    CircleDataset,
    CirclePoint,
    ContractViolation,
    Decision,
    DegenerateSegmentError,
    DomainError,
    LineDirection,
    PlaneDataset,
    ScalarValue,
    dataset_distance,
    feature_distance,
    omega_s,
    segment_average_norm,
    sorted_eigenvalues,
)

# Frozen from a 10^6-step Riemann-sum oracle (test_riemann_oracle cross-checks).
SEG_AVG_UNIT_DIAGONAL = 0.8116126200701153


def test_dataset_distance_examples():
    a = PlaneDataset([(0, 0), (1, 2), (3, -1)])
    assert dataset_distance(a, a) == 0.0
    assert dataset_distance(PlaneDataset([(0, 0)]), PlaneDataset([(3, 4)])) == 5.0
    c1 = CircleDataset([(1, 0)])
    c2 = CircleDataset([(0, 1)])
    assert abs(dataset_distance(c1, c2) - math.pi / 2) < 1e-15


def test_dataset_distance_contract_errors():
    with pytest.raises(ContractViolation):
        dataset_distance(PlaneDataset([(0, 0)]), PlaneDataset([(0, 0), (1, 1)]))
    with pytest.raises(ContractViolation):
        dataset_distance(PlaneDataset([(1, 0)]), CircleDataset([(1, 0)]))


def test_dataset_validation():
    with pytest.raises(ContractViolation):
        PlaneDataset([(0, float("nan"))])
    with pytest.raises(ContractViolation):
        CircleDataset([(0.5, 0.5)])
    CircleDataset([(math.cos(0.3), math.sin(0.3))])


def test_feature_distance_examples():
    assert feature_distance(LineDirection(0.1), LineDirection(0.1)) == 0.0
    assert abs(feature_distance(LineDirection(0), LineDirection(3 * math.pi / 4)) - math.pi / 4) < 1e-15
    assert feature_distance(Decision(0), Decision(1)) == 1.0
    assert feature_distance(Decision(1), Decision(1)) == 0.0
    assert abs(feature_distance(CirclePoint((1, 0)), CirclePoint((0, 1))) - math.pi / 2) < 1e-12
    assert feature_distance(ScalarValue(0.25), ScalarValue(1.0)) == 0.75
    with pytest.raises(ContractViolation):
        feature_distance(LineDirection(0), Decision(0))


def test_line_direction_reduced_mod_pi():
    assert abs(LineDirection(math.pi + 0.3).theta - 0.3) < 1e-12
    assert abs(LineDirection(-0.3).theta - (math.pi - 0.3)) < 1e-12


def test_metric_axioms_line_directions():
    rng = np.random.default_rng(5)
    thetas = rng.uniform(-10, 10, size=(10_000, 3))
    for t1, t2, t3 in thetas:
        f1, f2, f3 = LineDirection(t1), LineDirection(t2), LineDirection(t3)
        d12 = feature_distance(f1, f2)
        d21 = feature_distance(f2, f1)
        assert d12 == d21
        assert d12 <= feature_distance(f1, f3) + feature_distance(f3, f2) + 1e-12


def test_metric_axioms_datasets():
    rng = np.random.default_rng(6)
    n = 3
    for _ in range(2_000):
        a, b, c = (PlaneDataset(rng.standard_normal((n, 2))) for _ in range(3))
        dab = dataset_distance(a, b)
        assert dab == dataset_distance(b, a)
        assert dab <= dataset_distance(a, c) + dataset_distance(c, b) + 1e-12
    for _ in range(2_000):
        angs = rng.uniform(0, 2 * math.pi, size=(3, n))
        a, b, c = (
            CircleDataset(np.stack([np.cos(t), np.sin(t)], axis=1)) for t in angs
        )
        dab = dataset_distance(a, b)
        assert dab == dataset_distance(b, a)
        assert dab <= dataset_distance(a, c) + dataset_distance(c, b) + 1e-12


def test_omega_closed_forms():
    assert abs(omega_s(0) - 1.0) <= 1e-12
    assert abs(omega_s(1) - 2.0) <= 1e-12
    assert abs(omega_s(2) - math.pi) <= 1e-12
    assert abs(omega_s(3) - 4 * math.pi / 3) <= 1e-12
    # continuous in s: small increments move the value slightly
    assert abs(omega_s(1.5) - omega_s(1.5 + 1e-9)) < 1e-7
    with pytest.raises(DomainError):
        omega_s(-0.1)


def test_segment_average_norm_examples():
    assert abs(segment_average_norm((1, 0), (2, 0)) - 1.5) < 1e-9
    assert abs(segment_average_norm((-1, 0), (1, 0)) - 0.5) < 1e-9
    assert abs(segment_average_norm((1, 0), (0, 1)) - SEG_AVG_UNIT_DIAGONAL) < 1e-8
    with pytest.raises(DegenerateSegmentError):
        segment_average_norm((1, 2), (1, 2))


def test_riemann_oracle():
    # independent midpoint Riemann sum for the pinned diagonal value
    n = 200_000
    u = (np.arange(n) + 0.5) / n
    pts = np.stack([1 - u, u], axis=1)
    riemann = float(np.linalg.norm(pts, axis=1).mean())
    assert abs(riemann - SEG_AVG_UNIT_DIAGONAL) < 1e-9


def test_segment_average_norm_lower_bound():
    rng = np.random.default_rng(7)
    for dim in (2, 6):
        for _ in range(5_000):
            x = rng.standard_normal(dim)
            y = rng.standard_normal(dim)
            if np.allclose(x, y):
                continue
            avg = segment_average_norm(x, y, epsrel=1e-8)
            bound = max(np.linalg.norm(x), np.linalg.norm(y)) / 8.0
            assert avg >= bound


def test_sorted_eigenvalues_examples():
    np.testing.assert_allclose(sorted_eigenvalues(np.diag([2 / 3, 0])), [2 / 3, 0])
    np.testing.assert_allclose(sorted_eigenvalues(np.eye(2)), [1, 1])
    np.testing.assert_allclose(sorted_eigenvalues([[0, 1], [1, 0]]), [1, -1])
    with pytest.raises(ContractViolation):
        sorted_eigenvalues([[0, 1], [1.001, 0]])


def test_sorted_eigenvalues_matches_lapack():
    rng = np.random.default_rng(8)
    for q in (2, 3, 5):
        for _ in range(200):
            a = rng.standard_normal((q, q))
            m = (a + a.T) / 2
            np.testing.assert_allclose(
                sorted_eigenvalues(m), np.linalg.eigvalsh(m)[::-1], atol=1e-10
            )


def test_eigenvalue_weyl_lipschitz():
    # |lambda_i(M+E) - lambda_i(M)| <= ||E||_F, the quantitative form of
    # eigenvalue continuity
    rng = np.random.default_rng(9)
    for q, trials in ((2, 8_000), (5, 2_000)):
        for _ in range(trials):
            a = rng.standard_normal((q, q))
            m = (a + a.T) / 2
            e = rng.standard_normal((q, q)) * rng.choice([1e-3, 0.1, 1.0])
            e = (e + e.T) / 2
            lam = sorted_eigenvalues(m)
            lam_p = sorted_eigenvalues(m + e)
            assert np.max(np.abs(lam_p - lam)) <= np.linalg.norm(e, "fro") + 1e-10
