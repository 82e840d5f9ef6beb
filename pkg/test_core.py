import numpy as np
import pytest
from hypothesis import given, seed, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from conftest import amplitude_damping, random_matrix, random_state
from modules.core import (
    CountingVector, DensityOperator, DetailedBalancePairing, HermitianOperator,
    JumpOperator, OpenSystem, QuantumModelError, StationaryStateError,
    dagger, identity_vector, inner_product_s, matrix_power_hermitian, norm_s,
    trace_distance, unvectorize, validate_system, vectorize, weight_matrix,
)

finite = st.floats(min_value=-10, max_value=10, allow_nan=False, allow_infinity=False)


@seed(1)
@settings(max_examples=50, deadline=None)
@given(arrays(np.float64, (3, 3), elements=finite), arrays(np.float64, (3, 3), elements=finite))
def test_vectorization_identities(a, b):
    eye = np.eye(3)
    assert np.allclose(vectorize(a @ b), np.kron(a, eye) @ vectorize(b))
    assert np.allclose(vectorize(b @ a), np.kron(eye, a.T) @ vectorize(b))


@seed(2)
@settings(max_examples=50, deadline=None)
@given(arrays(np.float64, (3, 3), elements=finite), arrays(np.float64, (3, 3), elements=finite))
def test_sandwich_vectorization(l_re, rho):
    L = l_re + 0.5j * l_re.T
    assert np.allclose(vectorize(L @ rho @ dagger(L)), np.kron(L, L.conj()) @ vectorize(rho))


@seed(3)
@settings(max_examples=30, deadline=None)
@given(arrays(np.float64, (4, 4), elements=finite))
def test_identity_vector_is_trace(a):
    assert np.isclose(identity_vector(4) @ vectorize(a), np.trace(a))
    assert np.array_equal(unvectorize(vectorize(a)), a)


def test_unvectorize_rejects_non_square_length():
    with pytest.raises(ValueError):
        unvectorize(np.zeros(5))


def test_hamiltonian_must_be_hermitian():
    with pytest.raises(QuantumModelError):
        HermitianOperator(np.array([[0, 1], [0, 0]]))
    with pytest.raises(QuantumModelError):
        HermitianOperator(np.eye(1))


def test_jump_dimension_mismatch():
    with pytest.raises(QuantumModelError):
        OpenSystem(HermitianOperator(np.eye(2)), (JumpOperator(np.eye(3), 1),))


def test_density_operator_checks():
    DensityOperator(np.diag([0.3, 0.7]))
    with pytest.raises(QuantumModelError):
        DensityOperator(np.diag([0.3, 0.6]))
    with pytest.raises(QuantumModelError):
        DensityOperator(np.diag([1.5, -0.5]))


def test_pairing_from_pairs_fills_reverse():
    pairing = DetailedBalancePairing.from_pairs([(1, 2, 0.7)])
    assert pairing.partner(1) == 2
    assert pairing.partner(2) == 1
    assert pairing.entropy_change(2) == pytest.approx(-0.7)


def test_pairing_rejects_non_involution():
    with pytest.raises(QuantumModelError):
        DetailedBalancePairing(((1, 2, 0.5), (2, 3, -0.5), (3, 1, 0.0)))
    with pytest.raises(QuantumModelError):
        DetailedBalancePairing(((1, 2, 0.5), (2, 1, 0.4)))


def test_validate_reports_missing_pairing():
    report = validate_system(amplitude_damping())
    assert report.passed
    assert any("no pairing" in note for note in report.notes)


def test_validate_flags_pairing_residual():
    lowering = np.array([[0, 1], [0, 0]], dtype=complex)
    system = OpenSystem(
        HermitianOperator(np.zeros((2, 2))),
        (JumpOperator(lowering, 1), JumpOperator(0.5 * dagger(lowering), 2)),
        DetailedBalancePairing.from_pairs([(1, 2, 0.0)]),
    )
    report = validate_system(system)
    assert not report.passed
    assert report.pairing_residuals[1] > 0.1


def test_validate_flags_duplicate_ids():
    lowering = np.array([[0, 1], [0, 0]], dtype=complex)
    system = OpenSystem(HermitianOperator(np.zeros((2, 2))),
                        (JumpOperator(lowering, 1), JumpOperator(dagger(lowering), 1)))
    report = validate_system(system)
    assert report.duplicate_ids == [1]
    assert not report.passed


def test_counting_vector_current():
    lowering = np.array([[0, 1], [0, 0]], dtype=complex)
    system = OpenSystem(
        HermitianOperator(np.zeros((2, 2))),
        (JumpOperator(lowering, 1), JumpOperator(dagger(lowering), 2)),
        DetailedBalancePairing.from_pairs([(1, 2, 0.0)]),
    )
    assert CountingVector.from_sequence(system, [1.0, -1.0]).is_current(system)
    assert not CountingVector.from_sequence(system, [1.0, 1.0]).is_current(system)
    assert not CountingVector({1: 1.0, 2: -1.0}).is_current(amplitude_damping())
    with pytest.raises(QuantumModelError):
        CountingVector({1: 1.0}).as_array(system)
    with pytest.raises(QuantumModelError):
        CountingVector.from_sequence(system, [1.0])


def test_inner_product_properties(rng):
    pi = random_state(rng, 3)
    a, b = random_matrix(rng, 3), random_matrix(rng, 3)
    for s in (0.0, 0.5):
        ab = inner_product_s(a, b, pi, s)
        ba = inner_product_s(b, a, pi, s)
        assert np.isclose(ab, np.conj(ba))
        assert inner_product_s(a, a, pi, s).real > 0
        w = weight_matrix(pi, s)
        assert np.isclose(vectorize(a).conj() @ w @ vectorize(b), ab)
        assert norm_s(np.eye(3), pi, s) == pytest.approx(1.0)
    with pytest.raises(ValueError):
        inner_product_s(a, b, pi, 0.25)


def test_inner_product_s_zero_is_weighted_trace(rng):
    pi = random_state(rng, 3)
    a, b = random_matrix(rng, 3), random_matrix(rng, 3)
    assert np.isclose(inner_product_s(a, b, pi, 0.0), np.trace(dagger(a) @ b @ pi))


def test_rank_deficient_state_rejected():
    pi = np.diag([1.0, 0.0])
    with pytest.raises(StationaryStateError, match="not full rank"):
        inner_product_s(np.eye(2), np.eye(2), pi, 0.5)
    assert np.array_equal(matrix_power_hermitian(pi, 0), np.eye(2))


def test_weight_matrix_square_root(rng):
    pi = random_state(rng, 3)
    half = weight_matrix(pi, 0.5, power=0.5)
    assert np.allclose(half @ half, weight_matrix(pi, 0.5))


def test_trace_distance(rng):
    rho = random_state(rng, 3)
    assert trace_distance(rho, rho) == pytest.approx(0.0, abs=1e-14)
    assert trace_distance(np.diag([1.0, 0.0]), np.diag([0.0, 1.0])) == pytest.approx(1.0)
