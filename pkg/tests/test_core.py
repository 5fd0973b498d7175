"""Panels, weight matrices, S(rho) facility and the stability check."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nlarch.core import (
    DataError,
    PanelData,
    SpatialOperator,
    SpatialParams,
    StabilityError,
    WeightMatrix,
    build_S,
    correlation_network,
    log_squared_transform,
    queen_contiguity,
    row_normalize,
    stability_check,
)


def panel_of(Y, Y0=None, X=None):
    Y = np.asarray(Y, dtype=float)
    if Y0 is None:
        Y0 = np.ones(Y.shape[0])
    return PanelData(Y=Y, Y0=Y0, X=X)


class TestLogSquaredTransform:
    def test_basic_values(self):
        p = panel_of([[1.0, -1.0, np.e]])
        out = log_squared_transform(p)
        assert out.ystar[0, 0] == 0.0
        assert out.ystar[0, 1] == 0.0
        assert out.ystar[0, 2] == pytest.approx(2.0, abs=1e-12)

    def test_floor_keeps_zero_finite_and_counts(self):
        p = panel_of([[0.0, 2.0]])
        out = log_squared_transform(p, floor=1e-12)
        assert out.ystar[0, 0] == pytest.approx(np.log(1e-12))
        assert out.floored_cells == 1
        assert np.all(np.isfinite(out.ystar))

    def test_rejects_bad_floor(self):
        with pytest.raises(DataError):
            log_squared_transform(panel_of([[1.0]]), floor=0.0)

    def test_nonfinite_rejected_with_index(self):
        with pytest.raises(DataError, match=r"\(0, 1\)"):
            panel_of([[1.0, np.nan]])


class TestRowNormalize:
    def test_single_neighbor_rows(self):
        out = row_normalize(np.array([[0.0, 2.0], [3.0, 0.0]]))
        assert np.array_equal(out.M, [[0.0, 1.0], [1.0, 0.0]])
        assert out.row_normalized

    def test_row_stochastic_unchanged(self):
        m = np.array([[0.0, 0.4, 0.6], [1.0, 0.0, 0.0], [0.5, 0.5, 0.0]])
        assert np.allclose(row_normalize(m).M, m)

    def test_queen_corner_weights(self):
        # corner cell of a 3x3 lattice has exactly the 3 adjacent cells
        out = row_normalize(queen_contiguity(3, 3))
        row = out.M[0]
        expected = {1, 3, 4}  # enumerate: right, below, below-right
        assert set(np.nonzero(row)[0]) == expected
        assert np.allclose(row[list(expected)], 1.0 / 3.0)

    def test_negative_rejected(self):
        with pytest.raises(DataError):
            row_normalize(np.array([[0.0, -1.0], [1.0, 0.0]]))

    def test_zero_rows_stay_zero(self):
        out = row_normalize(np.array([[0.0, 0.0], [1.0, 0.0]]))
        assert np.array_equal(out.M[0], [0.0, 0.0])


def brute_force_queen(rows, cols):
    # independent 8-neighborhood enumeration on (row, col) pairs
    cells = [(r, c) for r in range(rows) for c in range(cols)]
    n = len(cells)
    M = np.zeros((n, n))
    for a, (r1, c1) in enumerate(cells):
        for b, (r2, c2) in enumerate(cells):
            if a != b and abs(r1 - r2) <= 1 and abs(c1 - c2) <= 1:
                M[a, b] = 1.0
    return M


class TestQueenContiguity:
    def test_center_has_eight_neighbors(self):
        M = queen_contiguity(3, 3).M
        assert M[4].sum() == 8

    def test_corner_has_three_neighbors(self):
        M = queen_contiguity(3, 3).M
        assert M[0].sum() == 3

    def test_reference_design_size(self):
        assert queen_contiguity(7, 7).n == 49

    def test_degenerate_grid_rejected(self):
        with pytest.raises(DataError):
            queen_contiguity(1, 1)

    def test_matches_brute_force_up_to_5x5(self):
        for rows in range(1, 6):
            for cols in range(1, 6):
                if rows * cols < 2:
                    continue
                M = queen_contiguity(rows, cols).M
                assert np.array_equal(M, brute_force_queen(rows, cols))
                assert np.array_equal(M, M.T)


class TestCorrelationNetwork:
    def test_perfectly_anticorrelated(self):
        x = np.linspace(-1, 1, 40)
        out = correlation_network(np.vstack([x, -x]), row_normalized=False)
        # rho = -1 -> d = 2 -> weight 1/2
        assert out.M[0, 1] == pytest.approx(0.5)

    def test_uncorrelated_weight(self):
        # rho = 0 -> d = sqrt(2) -> weight 1/sqrt(2)
        x = np.array([1.0, -1.0, 1.0, -1.0])
        y = np.array([1.0, 1.0, -1.0, -1.0])
        out = correlation_network(np.vstack([x, y]), row_normalized=False)
        assert out.M[0, 1] == pytest.approx(1.0 / np.sqrt(2.0))

    def test_identical_series_capped(self):
        rng = np.random.default_rng(0)
        x = rng.standard_normal(30)
        out = correlation_network(np.vstack([x, x, rng.standard_normal(30)]),
                                  cap=1e6, row_normalized=False)
        assert out.M[0, 1] == 1e6

    def test_constant_series_rejected(self):
        with pytest.raises(DataError, match="constant"):
            correlation_network(np.vstack([np.ones(10), np.arange(10.0)]))

    def test_symmetric_and_affine_invariant(self):
        rng = np.random.default_rng(1)
        R = rng.standard_normal((4, 50))
        raw = correlation_network(R, row_normalized=False).M
        assert np.allclose(raw, raw.T)
        R2 = R.copy()
        R2[2] = 3.5 * R2[2] - 7.0  # positive affine rescale of one series
        assert np.allclose(correlation_network(R2, row_normalized=False).M, raw)

    def test_default_is_row_normalized(self):
        rng = np.random.default_rng(2)
        out = correlation_network(rng.standard_normal((3, 40)))
        assert out.row_normalized
        assert np.allclose(out.M.sum(axis=1), 1.0)


class TestBuildS:
    def test_rho_zero_is_identity(self):
        M = row_normalize(queen_contiguity(2, 2))
        assert np.array_equal(build_S(M, 0.0), np.eye(4))

    def test_two_unit_determinant(self):
        M = row_normalize(np.array([[0.0, 1.0], [1.0, 0.0]]))
        S = build_S(M, 0.5)
        assert np.allclose(S, [[1.0, -0.5], [-0.5, 1.0]])
        assert np.linalg.det(S) == pytest.approx(0.75)

    def test_rho_one_rejected_when_row_normalized(self):
        M = row_normalize(queen_contiguity(2, 2))
        with pytest.raises(StabilityError):
            build_S(M, 1.0)

    def test_unnormalized_range_uses_spectral_radius(self):
        W = queen_contiguity(3, 3)  # binary, tau > 1
        lo, hi = W.rho_range()
        assert hi == pytest.approx(1.0 / W.spectral_radius_tau)
        with pytest.raises(StabilityError):
            build_S(W, hi * 1.01)


class TestSpatialOperator:
    def test_solve_roundtrip(self):
        M = row_normalize(queen_contiguity(4, 4))
        op = SpatialOperator(M)
        rng = np.random.default_rng(3)
        b = rng.standard_normal((16, 5))
        x = op.solve(0.6, b)
        assert np.allclose(op.apply(0.6, x), b, rtol=1e-10, atol=1e-10)

    def test_logdet_matches_lu(self):
        for rows, cols in ((2, 2), (3, 3), (4, 5)):
            M = row_normalize(queen_contiguity(rows, cols))
            op = SpatialOperator(M)
            for rho in (-0.9, -0.3, 0.0, 0.45, 0.85):
                assert op.logdet(rho) == pytest.approx(op.logdet_lu(rho), abs=1e-8)

    @settings(max_examples=25, deadline=None)
    @given(rho=st.floats(-0.95, 0.95))
    def test_logdet_property_random_rho(self, rho):
        M = row_normalize(queen_contiguity(3, 4))
        op = SpatialOperator(M)
        assert op.logdet(rho) == pytest.approx(op.logdet_lu(rho), abs=1e-8)


class TestStabilityCheck:
    def test_reference_design_is_stable(self):
        M = row_normalize(queen_contiguity(7, 7))
        v = stability_check(SpatialParams(0.16, 0.15, 0.2), M)
        assert v.stable and v.criterion == "sufficient"
        assert v.triple_sum == pytest.approx(0.51)

    def test_sufficient_fails_then_eigenvalue_decides(self):
        M = row_normalize(queen_contiguity(7, 7))
        v = stability_check(SpatialParams(0.5, 0.4, 0.2), M)
        assert v.criterion == "eigenvalue"
        assert not v.stable  # radius (0.4 + 0.2) / (1 - 0.5) = 1.2 at the unit eigenvector

    def test_zero_params_stable(self):
        M = row_normalize(queen_contiguity(3, 3))
        assert stability_check(SpatialParams(0.0, 0.0, 0.0), M).stable

    def test_unnormalized_goes_straight_to_eigenvalue(self):
        W = queen_contiguity(3, 3)
        v = stability_check(SpatialParams(0.05, 0.1, 0.05), W)
        assert v.criterion == "eigenvalue"


class TestWeightMatrixValidation:
    def test_nonzero_diagonal_rejected(self):
        with pytest.raises(DataError):
            WeightMatrix(np.array([[1.0, 0.0], [0.0, 0.0]]))

    def test_negative_rejected(self):
        with pytest.raises(DataError):
            WeightMatrix(np.array([[0.0, -0.5], [0.5, 0.0]]))

    def test_row_normalized_flag_checked(self):
        with pytest.raises(DataError):
            WeightMatrix(np.array([[0.0, 0.5], [0.5, 0.0]]), row_normalized=True)

    def test_immutable(self):
        M = queen_contiguity(2, 2)
        with pytest.raises(ValueError):
            M.M[0, 1] = 5.0


class TestPanelData:
    def test_dimension_mismatch_rejected(self):
        with pytest.raises(DataError):
            PanelData(Y=np.ones((2, 3)), Y0=np.ones(3))

    def test_covariate_shape_rejected(self):
        with pytest.raises(DataError):
            PanelData(Y=np.ones((2, 3)), Y0=np.ones(2), X=np.ones((2, 4, 1)))

    def test_properties(self):
        p = PanelData(Y=np.ones((2, 3)), Y0=np.ones(2), X=np.ones((2, 3, 2)))
        assert (p.n, p.T, p.k) == (2, 3, 2)
