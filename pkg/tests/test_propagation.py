import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from geogate import ConvergenceError, HilbertSpace, ModelParams, StepPolicy, propagate
from geogate.errors import DegenerateDetuningError, DesignError
from geogate.hilbert import matrix_exponential, pauli
from geogate.model import interaction_hamiltonian_provider
from geogate.propagation import (
    branch_weights,
    closed_form_propagator,
    detect_blocks,
    entangler_design,
    gate_times,
    h3_propagator,
    ideal_gate,
    magnus_coefficients,
    propagate_many,
    twisting_gate,
)

times = st.floats(min_value=0.0, max_value=10.0)
deltas = st.floats(min_value=0.2, max_value=5.0)


def test_time_independent_matches_exponential():
    H = np.array([[1.0, 0.3 - 0.2j], [0.3 + 0.2j, -0.5]])
    u, info = propagate(lambda t: H, t0=0.0, t1=2.0, return_info=True)
    assert np.allclose(u.matrix, matrix_exponential(-2j * H), atol=1e-9)
    assert info.residual < 1e-9


def test_driven_qubit_against_rotating_solution():
    # H = w/2 sz + r cos(w t) sx, resonant Rabi drive, compared against a fine reference
    w, r = 3.0, 0.4
    sx, sz = pauli("sigma_x"), pauli("sigma_z")
    H = lambda t: 0.5 * w * sz + r * math.cos(w * t) * sx  # noqa: E731
    coarse = propagate(H, t1=4.0, policy=StepPolicy(dt=0.05, tol=1e-10))
    fine = propagate(H, t1=4.0, policy=StepPolicy(dt=0.005, tol=1e-12))
    assert np.linalg.norm(coarse.matrix - fine.matrix, 2) < 1e-9


def test_state_and_operator_inputs_agree():
    H = lambda t: np.array([[0.0, math.sin(t)], [math.sin(t), 1.0]])  # noqa: E731
    from geogate import QuantumState

    psi = QuantumState(np.array([1.0, 0.0], dtype=complex), (2,))
    u = propagate(H, t1=1.5)
    out = propagate(H, psi, t1=1.5)
    assert np.allclose(out.data, u.matrix @ psi.data, atol=1e-8)


def test_zero_span_is_identity():
    u = propagate(lambda t: np.eye(3), t0=1.0, t1=1.0)
    assert np.allclose(u.matrix, np.eye(3))


def test_convergence_failure_reports_residual():
    H = lambda t: np.array([[0.0, math.cos(40 * t)], [math.cos(40 * t), 0.0]])  # noqa: E731
    with pytest.raises(ConvergenceError) as exc:
        propagate(H, t1=5.0, policy=StepPolicy(dt=0.5, tol=1e-14, max_steps=64))
    assert exc.value.residual > 0


def test_block_detection_for_h2():
    params = ModelParams(g=(1.0, 1.5), delta=2.0)
    space = HilbertSpace(2, 6)
    blocks = detect_blocks(interaction_hamiltonian_provider("H2", params, space), 0.0, 1.0)
    assert len(blocks) == 4
    assert sorted(np.concatenate(blocks).tolist()) == list(range(space.dim))


def test_propagate_many_chains_intervals():
    H = lambda t: np.array([[0.0, math.sin(t)], [math.sin(t), 1.0]])  # noqa: E731
    ts = [2.0, 0.5, 1.0]
    us = propagate_many(H, ts)
    for t, u in zip(ts, us):
        assert np.allclose(u.matrix, propagate(H, t1=t).matrix, atol=1e-8)


@given(deltas, st.integers(min_value=1, max_value=8))
def test_loops_close_at_gate_times(delta, n):
    T = gate_times(delta, n)
    assert delta * T == pytest.approx(2 * n * math.pi, rel=1e-15)
    c = magnus_coefficients(T, delta)
    assert abs(c.beta) <= 1e-12
    assert c.phi == pytest.approx(n * math.pi / (2 * delta**2))


@given(times, deltas)
def test_magnus_coefficients_match_quadrature(t, delta):
    s = np.linspace(0.0, t, 2001)
    f = np.exp(1j * delta * s) / 2
    beta = np.trapezoid(f, s) * 1j if hasattr(np, "trapezoid") else np.trapz(f, s) * 1j
    c = magnus_coefficients(t, delta)
    assert abs(c.beta - beta) < 1e-5 * max(1.0, t)
    assert c.phi >= -1e-15


def test_gate_time_errors():
    with pytest.raises(DegenerateDetuningError):
        gate_times(0.0, 1)
    with pytest.raises(ValueError):
        gate_times(1.0, 0)
    with pytest.raises(DegenerateDetuningError):
        magnus_coefficients(1.0, 0.0)


def test_branch_weight_order():
    assert branch_weights([1.0, 1.5]).tolist() == [2.5, -0.5, 0.5, -2.5]


@given(times)
def test_closed_form_is_unitary_on_low_levels(t):
    params = ModelParams(g=(1.0, 1.5), delta=2.0)
    space = HilbertSpace(2, 30)
    u = closed_form_propagator(t, params, space, strict=False).matrix
    keep = np.arange(8 * 4)
    gram = (u.conj().T @ u)[np.ix_(keep, keep)]
    assert np.allclose(gram, np.eye(len(keep)), atol=1e-8)


def test_closed_form_against_numerics_single_qubit():
    params = ModelParams(g=(1.0,), delta=2.0)
    space = HilbertSpace(1, 24)
    ts = [0.4, 1.7, 3.0]
    numeric = h3_propagator(ts, params, space)
    keep = np.arange(5 * 2)
    for t, u in zip(ts, numeric):
        v = closed_form_propagator(t, params, space)
        assert np.linalg.norm((u.matrix - v.matrix)[np.ix_(keep, keep)], 2) < 1e-7


def test_closed_form_at_gate_time_factorizes():
    design = entangler_design((1.0, 1.0))
    params = design.params()
    space = HilbertSpace(2, 12)
    u = closed_form_propagator(design.T, params, space).matrix
    gate = ideal_gate(design).matrix
    phase = np.exp(1j * design.phase_kernel * 2.0)
    block = u[:4, :4]
    assert np.allclose(block, phase * gate, atol=1e-10)
    assert np.allclose(u[4:8, 4:8], block, atol=1e-10)


@pytest.mark.parametrize("n", [1, 2, 3, 4])
def test_entangler_design_inversion(n):
    design = entangler_design((1.0, 1.0), n=n)
    assert design.delta == pytest.approx(2 * math.sqrt(n))
    assert design.T == pytest.approx(math.sqrt(n) * math.pi)
    assert design.cross_phase == pytest.approx(math.pi / 4)


def test_maximal_ising_gate():
    design = entangler_design((1.0, 1.0))
    sx = pauli("sigma_x")
    target = matrix_exponential(1j * math.pi / 4 * np.kron(sx, sx))
    assert np.allclose(ideal_gate(design).matrix, target)


def test_twist_design_and_ideal_gate():
    design = entangler_design((1.0,) * 3, twist_phase=math.pi / 8)
    assert design.delta == pytest.approx(2.0)
    u = ideal_gate(design).matrix
    v = twisting_gate(math.pi / 8, 3).matrix
    overlap = np.trace(u.conj().T @ v) / 8
    assert abs(overlap) == pytest.approx(1.0)


def test_design_errors():
    with pytest.raises(DesignError):
        entangler_design((1.0, -1.0))
    with pytest.raises(DesignError):
        entangler_design((1.0, 1.5, 1.0))
    with pytest.raises(DesignError):
        entangler_design((1.0, 1.0), n=0)


@given(st.integers(min_value=2, max_value=6), st.floats(min_value=0.05, max_value=1.0))
def test_twist_gate_time_independent_of_register_size(n_qubits, chi):
    base = entangler_design((1.0,) * 2, twist_phase=chi)
    other = entangler_design((1.0,) * n_qubits, twist_phase=chi)
    assert other.T == base.T


@given(times, st.integers(min_value=4, max_value=20))
def test_closed_form_unitary_for_any_cutoff(t, cutoff):
    params = ModelParams(g=(1.0, 1.5), delta=2.0)
    u = closed_form_propagator(t, params, HilbertSpace(2, cutoff), strict=False).matrix
    assert np.allclose(u.conj().T @ u, np.eye(u.shape[0]), atol=1e-8)


def test_propagated_identity_is_unitary():
    params = ModelParams(g=(1.0, 1.5), delta=2.0)
    u = h3_propagator(1.3, params, HilbertSpace(2, 12)).matrix
    assert np.allclose(u.conj().T @ u, np.eye(u.shape[0]), atol=1e-8)
