"""Fidelities, entanglement measures and phase-space trajectories."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import DimensionError
from .hilbert import Operator, QuantumState, kron, matrix_exponential, partial_trace, qubit_ket
from .model import (
    ModelParams,
    build_hamiltonian,
    interaction_hamiltonian_provider,
    rotating_frame_generator,
    sigma_x_rotation,
)
from .propagation import (
    GateDesign,
    StepPolicy,
    default_step,
    gate_times,
    ideal_gate,
    magnus_coefficients,
    propagate,
)

_RANK_TOL = 1e-12


class ResolutionWarning(UserWarning):
    """A time grid is too coarse for the oscillation it samples."""


class ApproximationWarning(UserWarning):
    """The Rabi frequency is not large against the detuning and coupling."""


def _psd_sqrt(rho):
    w, v = np.linalg.eigh(rho)
    return (v * np.sqrt(np.clip(w, 0, None))) @ v.conj().T


def _rank(rho):
    w = np.linalg.eigvalsh(rho)
    return int(np.sum(w > _RANK_TOL * max(w.max(), 1.0)))


def fidelity(a: QuantumState, b: QuantumState) -> float:
    """``|<a|b>|^2`` for pure states, Uhlmann fidelity ``(Tr sqrt(sqrt(a) b sqrt(a)))^2`` otherwise."""
    if a.dim != b.dim:
        raise DimensionError(f"cannot compare states of dimension {a.dim} and {b.dim}")
    if a.is_pure and b.is_pure:
        f = abs(np.vdot(a.data, b.data)) ** 2
    elif a.is_pure:
        f = np.vdot(a.data, b.data @ a.data).real
    elif b.is_pure:
        f = np.vdot(b.data, a.data @ b.data).real
    else:
        ra, rb = a.data, b.data
        if min(_rank(ra), _rank(rb)) < a.dim:
            ev = np.linalg.eigvals(ra @ rb)
            f = np.sum(np.sqrt(np.clip(ev.real, 0, None))) ** 2
        else:
            s = _psd_sqrt(ra)
            ev = np.linalg.eigvalsh(s @ rb @ s)
            f = np.sum(np.sqrt(np.clip(ev, 0, None))) ** 2
    return float(min(max(f, 0.0), 1.0))


def von_neumann_entropy(state: QuantumState) -> float:
    """Entropy ``-Tr rho ln rho`` in nats."""
    if state.is_pure:
        return 0.0
    w = np.linalg.eigvalsh(state.data)
    w = w[w > 1e-15]
    return float(-np.sum(w * np.log(w)))


def purity_and_entropy(state: QuantumState, keep=None) -> tuple[float, float]:
    """Purity and von Neumann entropy, of the reduced state on ``keep`` if given."""
    if keep is not None:
        state = partial_trace(state, keep)
    return state.purity(), von_neumann_entropy(state)


_SPIN_FLIP = np.kron(np.array([[0, -1j], [1j, 0]]), np.array([[0, -1j], [1j, 0]]))


def concurrence(state: QuantumState) -> float:
    """Wootters concurrence of a two-qubit state."""
    if state.dim != 4:
        raise DimensionError(f"concurrence needs a two-qubit state, got dimension {state.dim}")
    rho = state.density_matrix()
    flipped = _SPIN_FLIP @ rho.conj() @ _SPIN_FLIP
    ev = np.linalg.eigvals(rho @ flipped)
    lam = np.sort(np.sqrt(np.clip(ev.real, 0, None)))[::-1]
    return float(max(0.0, lam[0] - lam[1] - lam[2] - lam[3]))


_GHZ_AXES = {"z": ("up", "down"), "x": ("+", "-"), "y": ("+i", "-i")}


def ghz_state(n_qubits: int, phase: float = 0.0, axis: str = "z") -> QuantumState:
    """``(|u...u> + e^{i phase} |d...d>)/sqrt(2)`` for the eigenbasis of ``axis``."""
    u, d = (qubit_ket(label) for label in _GHZ_AXES[axis])
    vec = (kron(*[u] * n_qubits) + np.exp(1j * phase) * kron(*[d] * n_qubits)) / math.sqrt(2)
    return QuantumState(vec, (2,) * n_qubits)


def ghz_fidelity(state: QuantumState, optimize_phase: bool = True, axis: str = "z") -> float:
    """Overlap with the GHZ state along ``axis``.

    With ``optimize_phase`` the relative phase is chosen optimally (closed
    form ``(p_u + p_d + 2|c|)/2``); otherwise it is fixed at ``pi/2``.
    """
    if axis not in _GHZ_AXES:
        raise ValueError(f"unknown GHZ axis {axis!r}")
    n = int(round(math.log2(state.dim)))
    if 2**n != state.dim or n < 2:
        raise DimensionError("GHZ fidelity needs a register of at least two qubits")
    u, d = (qubit_ket(label) for label in _GHZ_AXES[axis])
    up, down = kron(*[u] * n), kron(*[d] * n)
    rho = state.density_matrix()
    p_u = np.vdot(up, rho @ up).real
    p_d = np.vdot(down, rho @ down).real
    c = np.vdot(up, rho @ down)
    if optimize_phase:
        f = 0.5 * (p_u + p_d + 2 * abs(c))
    else:
        f = 0.5 * (p_u + p_d + 2 * (np.exp(1j * math.pi / 2) * c).real)
    return float(min(max(f, 0.0), 1.0))


def gate_fidelity(u, v) -> float:
    """Phase-aligned overlap ``|Tr(U^dag V)| / dim``."""
    mu = u.matrix if isinstance(u, Operator) else np.asarray(u)
    mv = v.matrix if isinstance(v, Operator) else np.asarray(v)
    if mu.shape != mv.shape:
        raise DimensionError("gate fidelity needs operators of equal dimension")
    return float(abs(np.trace(mu.conj().T @ mv)) / mu.shape[0])


def cavity_kraus(u: Operator, cavity_ket: np.ndarray) -> list[np.ndarray]:
    """Kraus operators ``<k| U |psi_cav>`` of the qubit channel induced by ``U``."""
    cutoff = u.dims[0]
    nq = u.dim // cutoff
    blocks = u.matrix.reshape(cutoff, nq, cutoff, nq)
    return [np.einsum("inm,n->im", blocks[k], cavity_ket) for k in range(cutoff)]


def process_fidelity(kraus, target) -> float:
    """Entanglement fidelity ``sum_k |Tr(V^dag K_k)|^2 / d^2`` of a channel against unitary ``V``."""
    v = target.matrix if isinstance(target, Operator) else np.asarray(target)
    if isinstance(kraus, Operator):
        kraus = [kraus.matrix]
    elif isinstance(kraus, np.ndarray) and kraus.ndim == 2:
        kraus = [kraus]
    d = v.shape[0]
    return float(sum(abs(np.trace(v.conj().T @ k)) ** 2 for k in kraus) / d**2)


def shoelace_area(points) -> float:
    """Signed area of the closed polygon through ``points`` (positive counterclockwise)."""
    z = np.asarray(points, dtype=complex)
    if z.size < 3:
        return 0.0
    x, y = z.real, z.imag
    return float(0.5 * np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y))


def cumulative_area(points) -> np.ndarray:
    """Area of the polygon ``points[0..k]`` closed back to the start, for each ``k``."""
    z = np.asarray(points, dtype=complex)
    x, y = z.real, z.imag
    cross = x[:-1] * y[1:] - x[1:] * y[:-1]
    partial = np.concatenate([[0.0], np.cumsum(cross)])
    closing = x * y[0] - x[0] * y
    return 0.5 * (partial + closing)


@dataclass(frozen=True)
class TrajectoryRecord:
    """Conditional cavity path of one sigma_x branch ``s`` with weight ``S_s``."""

    branch: tuple[int, ...]
    weight: float
    times: np.ndarray
    points: np.ndarray
    enclosed_area: float
    accumulated_phase: float
    loops: int

    @property
    def closure_error(self) -> float:
        return float(abs(self.points[-1] - self.points[0]))

    @property
    def area_per_loop(self) -> float:
        return self.enclosed_area / self.loops if self.loops else math.nan

    @property
    def phase_area_factor(self) -> float:
        return self.accumulated_phase / self.enclosed_area if self.enclosed_area else math.nan


def conditional_trajectory(params: ModelParams, s, t_grid) -> TrajectoryRecord:
    """Closed-form path ``alpha_s(t) = S_s (e^{i delta t} - 1)/(2 delta)`` of branch ``s``.

    ``s`` holds one sigma_x eigenvalue (+1/-1) per qubit. The enclosed area is
    the shoelace area of the sampled path; the accumulated phase is
    ``Phi(t_end) S_s^2``. Warns when a period has fewer than 200 samples.
    """
    s = tuple(int(v) for v in s)
    if len(s) != params.n_qubits or any(v not in (1, -1) for v in s):
        raise ValueError(f"branch must hold {params.n_qubits} entries of +1/-1, got {s}")
    t = np.asarray(t_grid, dtype=float)
    delta = params.delta
    weight = float(np.dot(params.g, s))
    if t.size > 1:
        period = 2 * math.pi / abs(delta)
        per_period = (t.size - 1) * period / (t[-1] - t[0]) if t[-1] != t[0] else math.inf
        if per_period < 200:
            warnings.warn(f"only {per_period:.0f} samples per period (need >= 200)", ResolutionWarning, stacklevel=2)
    coeff = magnus_coefficients(t, delta)
    points = weight * np.atleast_1d(coeff.beta)
    phi_end = float(np.atleast_1d(coeff.phi)[-1])
    loops = int(math.floor(abs(delta) * (t[-1] - t[0]) / (2 * math.pi) + 1e-9)) if t.size else 0
    return TrajectoryRecord(
        branch=s,
        weight=weight,
        times=t,
        points=points,
        enclosed_area=shoelace_area(points),
        accumulated_phase=phi_end * weight**2,
        loops=loops,
    )


def rwa_propagator(params: ModelParams, space, n: int = 1, method: str = "exact", policy=None):
    """Interaction-picture propagator of the full rotating-frame model at ``T_n``.

    ``method="exact"`` uses ``exp(i H0 T) exp(-i H_RF T)`` with
    ``H0 = delta a^dag a + sum_j Omega_j/2 sx_j`` (the model is time
    independent in the rotating frame); ``"propagate"`` integrates the
    interaction-picture Hamiltonian with the stepper and rotates the
    result back into the original qubit basis.
    """
    T = gate_times(params.delta, n)
    scale = max(abs(params.delta), max(abs(g) for g in params.g))
    if min(abs(o) for o in params.Omega) < 10 * scale:
        warnings.warn(
            f"Omega = {min(params.Omega):.3g} is below 10 max(delta, g) = {10 * scale:.3g}; fast terms are not negligible",
            ApproximationWarning,
            stacklevel=3,
        )
    if method == "exact":
        H_rf = build_hamiltonian("rotating_frame", params, space)
        H0 = rotating_frame_generator(params, space)
        return Operator(matrix_exponential(1j * T * H0.matrix) @ matrix_exponential(-1j * T * H_rf.matrix), space.dims), None
    if method != "propagate":
        raise ValueError(f"unknown method {method!r}")
    policy = policy or StepPolicy(dt=default_step(params, rabi_active=True))
    provider = interaction_hamiltonian_provider("H1", params, space)
    u, info = propagate(provider, None, 0.0, T, policy, return_info=True)
    R = sigma_x_rotation(space)
    return R @ u @ R.dag(), info


def rwa_process_fidelity(params: ModelParams, space, n: int = 1, method: str = "exact", policy=None):
    """Process fidelity of the full-model qubit channel (cavity from vacuum) against the ideal gate.

    Returns ``(fidelity, info)``; ``info`` is ``None`` for the exact route.
    """
    u, info = rwa_propagator(params, space, n, method, policy)
    design = GateDesign(n=n, delta=params.delta, g=params.g, target_phase=math.nan)
    target = ideal_gate(design)
    vac = np.zeros(space.fock_cutoff)
    vac[0] = 1.0
    return process_fidelity(cavity_kraus(u, vac), target), info
