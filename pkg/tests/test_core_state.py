import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from simplex_collapse.core_state import (
    DensityMatrix,
    EpsilonDraw,
    NoiseSchedule,
    SimplexPoint,
    StateVector,
    UpdateMode,
    density_from_state,
    diagonal,
    entropy,
    new_state_vector,
)
from simplex_collapse.errors import (
    InvalidNoise,
    InvalidSigns,
    NonRealDiagonal,
    NotHermitian,
    NotNormalized,
    NotPositiveSemidefinite,
    TooShort,
    ValidationError,
)

from conftest import simplex_points, state_vectors


class TestStateVector:
    def test_basis_state(self):
        psi = new_state_vector([1, 0])
        assert psi.n == 2
        np.testing.assert_array_equal(psi.probabilities.probabilities, [1.0, 0.0])

    def test_probabilities(self):
        psi = new_state_vector([0.6, 0.8])
        np.testing.assert_allclose(psi.probabilities.probabilities, [0.36, 0.64], atol=1e-15)

    def test_not_normalized(self):
        with pytest.raises(NotNormalized):
            new_state_vector([0.5, 0.5])

    def test_too_short(self):
        with pytest.raises(TooShort):
            new_state_vector([1.0])

    def test_tolerance_is_1e9(self):
        new_state_vector([math.sqrt(0.5 + 4e-10), math.sqrt(0.5)])
        with pytest.raises(NotNormalized):
            new_state_vector([math.sqrt(0.5 + 4e-9), math.sqrt(0.5)])

    def test_immutable(self):
        psi = new_state_vector([0.6, 0.8])
        with pytest.raises(ValueError):
            psi.amplitudes[0] = 1.0

    @given(state_vectors())
    def test_revalidation_idempotent(self, psi):
        again = StateVector(psi.amplitudes)
        np.testing.assert_array_equal(again.amplitudes, psi.amplitudes)


class TestDensityMatrix:
    def test_basis(self):
        rho = density_from_state(new_state_vector([1, 0]))
        np.testing.assert_array_equal(rho.entries, [[1, 0], [0, 0]])

    def test_real_outer_product(self):
        rho = density_from_state(new_state_vector([0.6, 0.8]))
        assert not np.iscomplexobj(rho.entries)
        np.testing.assert_allclose(rho.entries, [[0.36, 0.48], [0.48, 0.64]], atol=1e-15)

    def test_complex_outer_product(self):
        s = 1 / math.sqrt(2)
        rho = density_from_state(new_state_vector([s, 1j * s]))
        np.testing.assert_allclose(rho.entries, [[0.5, -0.5j], [0.5j, 0.5]], atol=1e-15)

    def test_rejects_non_hermitian(self):
        with pytest.raises(NotHermitian):
            DensityMatrix(np.array([[0.5, 0.1], [0.2, 0.5]]))

    def test_rejects_bad_trace(self):
        with pytest.raises(NotNormalized):
            DensityMatrix(np.eye(2))

    def test_rejects_negative_eigenvalue(self):
        m = np.array([[0.5, 0.6], [0.6, 0.5]])
        with pytest.raises(NotPositiveSemidefinite):
            DensityMatrix(m)
        DensityMatrix(m, require_psd=False)

    def test_offdiag_frobenius(self):
        rho = density_from_state(new_state_vector([0.6, 0.8]))
        assert rho.offdiag_frobenius() == pytest.approx(math.sqrt(2) * 0.48, abs=1e-15)

    @given(state_vectors())
    def test_pure_state_properties(self, psi):
        rho = density_from_state(psi)
        assert np.trace(rho.entries).real == pytest.approx(1.0, abs=1e-12)
        assert np.linalg.matrix_rank(rho.entries, tol=1e-10) == 1
        p = diagonal(rho)
        np.testing.assert_allclose(p.probabilities, np.abs(psi.amplitudes) ** 2, atol=1e-15)


class TestSimplexAndEntropy:
    def test_corner(self):
        assert entropy(SimplexPoint([1.0, 0.0])) == 0.0

    def test_uniform(self):
        assert entropy([0.5, 0.5]) == pytest.approx(math.log(2), abs=1e-15)

    def test_value(self):
        # -0.36 ln 0.36 - 0.64 ln 0.64 = 0.65341819...
        assert entropy([0.36, 0.64]) == pytest.approx(0.6534182, abs=1e-7)

    def test_rejects_negative(self):
        with pytest.raises(ValidationError):
            SimplexPoint([1.1, -0.1])

    def test_rejects_unnormalized(self):
        with pytest.raises(NotNormalized):
            SimplexPoint([0.5, 0.4])

    @given(simplex_points(min_p=0.0))
    def test_entropy_bounds(self, p):
        s = entropy(p)
        assert -1e-15 <= s <= math.log(p.size) + 1e-12

    @given(st.integers(2, 5).flatmap(lambda n: st.tuples(simplex_points(n=n, min_p=0.0), simplex_points(n=n, min_p=0.0))))
    def test_entropy_concave(self, pq):
        p, q = pq
        assert entropy((p + q) / 2) >= (entropy(p) + entropy(q)) / 2 - 1e-12


class TestDiagonal:
    def test_cases(self):
        np.testing.assert_array_equal(diagonal(DensityMatrix(np.array([[1.0, 0], [0, 0]]))).probabilities, [1, 0])
        m = np.array([[0.36, 0.48], [0.48, 0.64]])
        np.testing.assert_allclose(diagonal(DensityMatrix(m)).probabilities, [0.36, 0.64])
        np.testing.assert_allclose(diagonal(DensityMatrix(np.eye(4) / 4)).probabilities, [0.25] * 4)

    def test_small_imaginary_part_discarded(self):
        m = np.array([[0.5 + 1e-13j, 0], [0, 0.5 - 1e-13j]])
        # not Hermitian beyond 1e-12 would fail; 2e-13 passes
        p = diagonal(DensityMatrix(m))
        assert p.probabilities.dtype == float

    def test_non_real_diagonal(self):
        m = np.array([[0.5 + 1e-11j, 0], [0, 0.5 - 1e-11j]])
        rho = DensityMatrix.__new__(DensityMatrix)
        object.__setattr__(rho, "entries", m)
        with pytest.raises(NonRealDiagonal):
            diagonal(rho)


class TestNoiseSchedule:
    def test_uniform(self):
        s = NoiseSchedule.uniform(0.1, 3)
        assert s.n == 3 and s.steps is None and s.covers(10**9)
        np.testing.assert_array_equal(s.at(7), [0.1, 0.1, 0.1])

    def test_table(self):
        t = np.array([[0.1, 0.2], [0.05, 0.01]])
        s = NoiseSchedule.from_table(t)
        assert s.steps == 2
        np.testing.assert_array_equal(s.at(2), [0.2, 0.01])
        assert not s.covers(3)
        with pytest.raises(InvalidNoise):
            s.at(3)

    @pytest.mark.parametrize("eta", [0.0, -0.1, 1.0])
    def test_range(self, eta):
        with pytest.raises(InvalidNoise):
            NoiseSchedule.per_channel([eta, 0.1])

    def test_sum_bound(self):
        NoiseSchedule.uniform(0.45, 2)
        with pytest.raises(InvalidNoise):
            NoiseSchedule.uniform(0.6, 2)


class TestEpsilonAndMode:
    def test_signs(self):
        e = EpsilonDraw(np.array([1, -1]))
        assert e.pattern() == "+-"
        with pytest.raises(InvalidSigns):
            EpsilonDraw(np.array([1, 0]))

    def test_table_pattern_is_step_major(self):
        e = EpsilonDraw(np.array([[1, -1], [1, 1]]))
        assert e.pattern() == "++-+"

    @pytest.mark.parametrize("name", ["paper_second_order", "PaperSecondOrder", "paper-second-order"])
    def test_parse_paper(self, name):
        assert UpdateMode.parse(name) is UpdateMode.PAPER_SECOND_ORDER

    def test_parse_exact(self):
        assert UpdateMode.parse("ExactProduct") is UpdateMode.EXACT_PRODUCT
        with pytest.raises(ValidationError):
            UpdateMode.parse("third_order")
