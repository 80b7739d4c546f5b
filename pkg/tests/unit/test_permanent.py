import math

import numpy as np
import pytest

from optics.errors import InputError, ParseError
from optics.fock import weight_masks
from optics.permanent import (
    composition_expansion,
    estimate_permanent_gurvits,
    estimate_permanent_sq_repeated,
    laplace_expansion,
    matrix_from_json,
    matrix_to_json,
    permanent_naive,
    permanent_repeated,
    permanent_ryser,
    repeat_matrix,
    repeated_rows_factor,
    sample_count,
    spectral_norm,
)
from helpers import make_random_matrix, make_unitary


class TestExactPermanents:
    def test_empty_matrix_is_one(self):
        assert permanent_ryser(np.zeros((0, 0))) == 1

    def test_two_by_two(self):
        a = np.array([[1, 2], [3, 4]])
        assert permanent_ryser(a) == pytest.approx(10)
        assert permanent_naive(a) == pytest.approx(10)

    def test_all_ones(self):
        assert permanent_ryser(np.ones((5, 5))).real == pytest.approx(math.factorial(5))

    @pytest.mark.parametrize("size", [1, 3, 4, 6])
    def test_ryser_matches_naive(self, size):
        a = make_random_matrix(size, seed=size)
        assert permanent_ryser(a) == pytest.approx(permanent_naive(a), rel=1e-9, abs=1e-9)

    def test_invariant_under_transpose_and_permutation(self):
        a = make_random_matrix(5, seed=3)
        rng = np.random.default_rng(0)
        permuted = a[rng.permutation(5)][:, rng.permutation(5)]
        assert permanent_ryser(a.T) == pytest.approx(permanent_ryser(a))
        assert permanent_ryser(permuted) == pytest.approx(permanent_ryser(a))

    def test_non_square_rejected(self):
        with pytest.raises(InputError):
            permanent_ryser(np.ones((2, 3)))

    def test_size_limits(self):
        with pytest.raises(InputError):
            permanent_naive(np.eye(11))
        with pytest.raises(InputError):
            permanent_ryser(np.eye(31))


class TestRepeated:
    def test_repeat_matrix_shape(self):
        b = make_random_matrix(3, seed=1)
        assert repeat_matrix(b, (2, 0, 1), (1, 1, 1)).shape == (3, 3)

    def test_repeated_rows_of_identity(self):
        # Per of a matrix with two equal rows of the identity vanishes
        assert permanent_repeated(np.eye(2), (2, 0), (1, 1)) == pytest.approx(0)

    def test_mismatched_totals(self):
        with pytest.raises(InputError):
            permanent_repeated(np.eye(2), (2, 0), (1, 0))

    def test_factor(self):
        assert repeated_rows_factor((0, 1, 2)) == pytest.approx(2 / 2)
        assert repeated_rows_factor((3,)) == pytest.approx(6 / math.sqrt(27))


class TestIdentities:
    @pytest.mark.parametrize("r", [0, 1, 2, 4])
    def test_laplace_expansion(self, r):
        w = make_random_matrix(4, seed=5)
        for mask in weight_masks(4, r):
            assert laplace_expansion(w, mask) == pytest.approx(permanent_ryser(w), rel=1e-9)

    def test_composition_identity(self):
        m_mat = make_random_matrix(3, 4, seed=8)
        n_mat = make_random_matrix(3, 4, seed=9).T
        u, v = (1, 0, 2), (0, 2, 1)
        expected = permanent_repeated(m_mat @ n_mat, u, v)
        assert composition_expansion(m_mat, n_mat, u, v) == pytest.approx(expected, rel=1e-9)


class TestMatrixJson:
    def test_round_trip(self):
        a = make_random_matrix(2, 3, seed=2)
        assert np.allclose(matrix_from_json(matrix_to_json(a)), a)

    def test_wrong_entry_count(self):
        data = {"rows": 2, "cols": 2, "re": [1, 0, 0], "im": [0, 0, 0, 0]}
        with pytest.raises(ParseError) as exc:
            matrix_from_json(data, source="u.json")
        assert exc.value.field == "re"
        assert "u.json" in str(exc.value)

    def test_missing_key(self):
        with pytest.raises(ParseError):
            matrix_from_json({"rows": 1, "cols": 1, "re": [1]})


class TestEstimators:
    def test_sample_count(self):
        assert sample_count(0.1, 0.05) == math.ceil(9 * math.log(40) / 0.01)
        with pytest.raises(InputError):
            sample_count(0.0, 0.1)
        with pytest.raises(InputError):
            sample_count(0.1, 1.0)

    def test_spectral_norm(self):
        a = make_random_matrix(4, seed=4)
        assert spectral_norm(a) == pytest.approx(np.linalg.norm(a, 2), rel=1e-6)
        assert spectral_norm(make_unitary(5)) == pytest.approx(1.0, rel=1e-8)

    def test_spectral_norm_top_vector_orthogonal_to_ones(self):
        # eigenvalues 1 along (1, 1) and 2 along (1, -1)
        a = np.array([[1.5, -0.5], [-0.5, 1.5]])
        assert spectral_norm(a) == pytest.approx(2.0, rel=1e-12)
        est = estimate_permanent_gurvits(a, 0.05, 0.05, seed=0)
        assert est.abs_error_bound == pytest.approx(0.05 * 2.0 ** 2)
        with pytest.raises(InputError):
            estimate_permanent_sq_repeated(a, (1, 1), 0.1, 0.05, seed=0)

    def test_gurvits_within_bound(self):
        a = make_random_matrix(4, seed=12) / 3.0
        est = estimate_permanent_gurvits(a, epsilon=0.1, delta=0.01, seed=3)
        assert est.samples_used == sample_count(0.1, 0.01)
        assert abs(est.value - permanent_ryser(a)) <= est.abs_error_bound

    def test_gurvits_deterministic(self):
        a = make_random_matrix(3, seed=1)
        first = estimate_permanent_gurvits(a, 0.2, 0.1, seed=9)
        second = estimate_permanent_gurvits(a, 0.2, 0.1, seed=9)
        assert first.value == second.value

    def test_gurvits_identity_is_exact(self):
        # every sign vector gives prod(x)^2 = 1
        est = estimate_permanent_gurvits(np.eye(3), 0.5, 0.1, seed=0)
        assert est.value == pytest.approx(1.0)

    @pytest.mark.parametrize("reps", [(1, 1, 1, 0), (2, 1, 0, 0), (0, 3, 0, 0)])
    def test_repeated_rows_within_bound(self, reps):
        u = make_unitary(4, seed=21)
        b = u[:, :3]
        est = estimate_permanent_sq_repeated(b, reps, epsilon=0.05, delta=0.01, seed=5)
        exact = abs(permanent_repeated(b, reps, (1, 1, 1))) ** 2
        assert est.value.real >= 0
        assert abs(est.value.real - exact) <= est.abs_error_bound

    def test_repeated_rows_rejects_large_norm(self):
        with pytest.raises(InputError):
            estimate_permanent_sq_repeated(2 * np.eye(2), (1, 1), 0.1, 0.1, seed=0)

    def test_repeated_rows_rejects_bad_reps(self):
        with pytest.raises(InputError):
            estimate_permanent_sq_repeated(np.eye(2), (2, 1), 0.1, 0.1, seed=0)
