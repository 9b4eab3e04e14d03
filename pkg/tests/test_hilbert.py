import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from geogate import (
    DimensionError,
    HilbertSpace,
    NumericError,
    Operator,
    QuantumState,
    TruncationError,
    cavity_state,
    collective_operator,
    default_cutoff,
    displacement_operator,
    ladder_operator,
    matrix_exponential,
    partial_trace,
    product_state,
    reduce_to_qubits,
    site_operator,
)
from geogate.errors import AddressingError
from geogate.hilbert import LinearHamiltonian, coherent_tail, pauli, qubit_ket

angles = st.floats(min_value=0, max_value=2 * math.pi, allow_nan=False)
amplitudes = st.complex_numbers(max_magnitude=2.0, allow_nan=False, allow_infinity=False)


def random_qubit(theta, phi):
    return np.array([math.cos(theta / 2), np.exp(1j * phi) * math.sin(theta / 2)])


def test_space_dims_and_ordering():
    space = HilbertSpace(2, 5)
    assert space.dims == (5, 2, 2)
    assert space.dim == 20
    assert space.qubit_subsystems == (1, 2)
    a = site_operator("annihilation", "cavity", space)
    assert np.allclose(a.matrix, np.kron(ladder_operator(5).matrix, np.eye(4)))
    sz1 = site_operator("sigma_z", 1, space)
    assert np.allclose(sz1.matrix, np.kron(np.eye(10), np.diag([1, -1])))


def test_invalid_space_and_sites():
    with pytest.raises(DimensionError):
        HilbertSpace(0, 5)
    with pytest.raises(DimensionError):
        HilbertSpace(1, 0)
    space = HilbertSpace(2, 3)
    with pytest.raises(AddressingError):
        site_operator("sigma_x", 2, space)
    with pytest.raises(AddressingError):
        site_operator("annihilation", 0, space)


def test_pauli_algebra():
    sx, sy, sz = (pauli(k) for k in ("sigma_x", "sigma_y", "sigma_z"))
    assert np.allclose(sx @ sy, 1j * sz)
    sp, sm = pauli("sigma_plus"), pauli("sigma_minus")
    assert np.allclose(sp @ qubit_ket("down"), qubit_ket("up"))
    assert np.allclose(sp + sm, sx)


def test_ladder_commutator_away_from_edge():
    a = ladder_operator(10).matrix
    comm = a @ a.conj().T - a.conj().T @ a
    assert np.allclose(np.diag(comm)[:-1], 1.0)
    assert np.isclose(comm[-1, -1], -9.0)


def test_collective_operator_weights():
    space = HilbertSpace(2, 2)
    S = collective_operator("sigma_x", space, weights=[1.0, 2.0])
    expected = site_operator("sigma_x", 0, space) + 2.0 * site_operator("sigma_x", 1, space)
    assert np.allclose(S.matrix, expected.matrix)
    assert np.allclose(collective_operator("sigma_x", space, weights=[1.0]).matrix, collective_operator("sigma_x", space).matrix)
    with pytest.raises(ValueError):
        collective_operator("sigma_x", space, weights=[1.0, 2.0, 3.0])


def test_operator_arithmetic_and_hermiticity():
    space = HilbertSpace(1, 3)
    a = site_operator("annihilation", "cavity", space)
    x = a + a.dag()
    assert x.is_hermitian()
    assert not a.is_hermitian()
    assert np.allclose((2 * x / 2 - x).matrix, 0)
    assert np.allclose((-x).matrix, -x.matrix)
    with pytest.raises(DimensionError):
        Operator(np.eye(3), (2, 2))


@given(amplitudes)
def test_coherent_state_properties(alpha):
    cutoff = default_cutoff(abs(alpha))
    psi = cavity_state("coherent", alpha, cutoff)
    assert np.isclose(np.linalg.norm(psi.data), 1.0)
    a = ladder_operator(cutoff)
    assert abs(psi.expect(a) - alpha) < 1e-8
    assert coherent_tail(alpha, cutoff) <= 1e-10


@given(amplitudes)
def test_displacement_of_vacuum_is_coherent(alpha):
    cutoff = default_cutoff(abs(alpha)) + 10
    d = displacement_operator(alpha, cutoff)
    vac = np.zeros(cutoff)
    vac[0] = 1
    coh = cavity_state("coherent", alpha, cutoff).data
    assert abs(np.vdot(coh, d.matrix @ vac)) ** 2 > 1 - 1e-9


def test_truncation_errors():
    with pytest.raises(TruncationError):
        cavity_state("coherent", 3.0, 8)
    with pytest.raises(TruncationError):
        cavity_state("thermal", 2.0, 8)
    psi = cavity_state("coherent", 3.0, 8, strict=False)
    assert np.isclose(np.linalg.norm(psi.data), 1.0)


@given(st.floats(min_value=0.0, max_value=2.0))
def test_thermal_state_mean_and_purity(nbar):
    cutoff = default_cutoff(0.0, nbar)
    rho = cavity_state("thermal", nbar, cutoff)
    num = site_operator("number", "cavity", HilbertSpace(1, cutoff))
    n_op = ladder_operator(cutoff)
    mean = np.trace(rho.data @ (n_op.dag() @ n_op).matrix).real
    assert abs(mean - nbar) < 1e-8
    assert rho.purity() <= 1 + 1e-12
    assert num.dim == 2 * cutoff


@given(angles, angles, angles, angles)
def test_partial_trace_of_product_is_pure(t1, p1, t2, p2):
    state = product_state(cavity_state("fock", 0, 3), [random_qubit(t1, p1), random_qubit(t2, p2)])
    rho = reduce_to_qubits(state)
    assert rho.dims == (2, 2)
    assert abs(rho.purity() - 1) < 1e-12
    single = partial_trace(state, [1])
    assert np.allclose(single.data, np.outer(random_qubit(t1, p1), random_qubit(t1, p1).conj()))


def test_partial_trace_of_bell_is_mixed():
    bell = (np.kron(qubit_ket("up"), qubit_ket("up")) + np.kron(qubit_ket("down"), qubit_ket("down"))) / math.sqrt(2)
    half = partial_trace(QuantumState(bell, (2, 2)), [0])
    assert np.allclose(half.data, np.eye(2) / 2)


def test_state_validation():
    with pytest.raises(DimensionError):
        QuantumState(np.ones(3), (2, 2))
    with pytest.raises(NumericError):
        QuantumState(np.array([1.0, 1.0]), (2,)).validate()
    QuantumState(np.array([1.0, 0.0]), (2,)).validate()


def test_matrix_exponential():
    sx = pauli("sigma_x")
    u = matrix_exponential(-1j * math.pi / 2 * sx)
    assert np.allclose(u, -1j * sx)
    with pytest.raises(NumericError):
        matrix_exponential(np.array([[np.nan]]))


def test_linear_hamiltonian_matches_sum():
    space = HilbertSpace(1, 4)
    a = site_operator("annihilation", "cavity", space).matrix
    H = LinearHamiltonian([(a, lambda t: np.exp(-1j * t)), (a.conj().T, lambda t: np.exp(1j * t))], space.dims)
    t = 0.37
    expected = a * np.exp(-1j * t) + a.conj().T * np.exp(1j * t)
    assert np.allclose(H(t).matrix, expected)
    assert H.coefficients([0.0, t]).shape == (2, 2)


def test_default_cutoff_grows():
    assert default_cutoff(0.0) == 10
    assert default_cutoff(2.0) > default_cutoff(1.0)
    assert default_cutoff(0.0, 0.5) > default_cutoff(0.0)


def test_coherent_mean_photon_number():
    psi = cavity_state("coherent", 1.0, 30)
    n_op = ladder_operator(30)
    assert abs(psi.expect(n_op.dag() @ n_op) - 1.0) < 1e-8


@given(amplitudes)
def test_displacement_inverse(alpha):
    cutoff = default_cutoff(abs(alpha))
    d = displacement_operator(alpha, cutoff).matrix @ displacement_operator(-alpha, cutoff).matrix
    assert np.allclose(d, np.eye(cutoff), atol=1e-8)
