"""Time evolution: a generic step-halving propagator and the closed-form
geometric propagator of the effective cavity-qubit interaction.

The effective interaction is ``H3(t) = -1/2 (a e^{-i delta t} + a^dag e^{i
delta t}) S`` with ``S = sum_j g_j sigma_x_j``. Its two-term Magnus
expansion terminates, giving

    U(t) = exp(i Phi(t) S^2) exp(S (beta(t) a^dag - beta(t)^* a)),
    beta(t) = (e^{i delta t} - 1) / (2 delta),
    Phi(t) = (t - sin(delta t) / delta) / (4 delta).
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components

from .errors import ConvergenceError, DegenerateDetuningError, DesignError, DimensionError
from .hilbert import (
    HilbertSpace,
    LinearHamiltonian,
    Operator,
    QuantumState,
    default_cutoff,
    displacement_operator,
    matrix_exponential,
    qubit_collective,
)
from .model import ModelParams, interaction_hamiltonian_provider, sigma_x_rotation

__all__ = [
    "StepPolicy",
    "PropagationInfo",
    "propagate",
    "LinearHamiltonian",
    "propagate_many",
    "detect_blocks",
    "MagnusCoefficients",
    "magnus_coefficients",
    "branch_weights",
    "closed_form_propagator",
    "h3_propagator",
    "gate_times",
    "GateDesign",
    "entangler_design",
    "ideal_gate",
    "twisting_gate",
    "default_step",
    "gate_cutoff",
]


@dataclass(frozen=True)
class StepPolicy:
    """Initial step, convergence tolerance and step budget for :func:`propagate`."""

    dt: float | None = None
    tol: float = 1e-9
    max_steps: int = 2**20


@dataclass(frozen=True)
class PropagationInfo:
    steps: int
    residual: float
    levels: int


_CHUNK = 256


def _as_matrix(op):
    return op.matrix if isinstance(op, Operator) else np.asarray(op, dtype=complex)


def _pattern_blocks(pattern) -> list[np.ndarray]:
    n_comp, labels = connected_components(csr_matrix(pattern | pattern.T), directed=False)
    return [np.flatnonzero(labels == c) for c in range(n_comp)]


def detect_blocks(hamiltonian, t0: float, t1: float) -> list[np.ndarray]:
    """Basis partitions left invariant by ``hamiltonian`` on ``[t0, t1]``.

    Exact for a :class:`LinearHamiltonian` (union of its term patterns);
    for a plain callable, the union of the sparsity patterns at a few
    sample times including irrational fractions of the interval.
    """
    if isinstance(hamiltonian, LinearHamiltonian):
        return _pattern_blocks(hamiltonian.pattern())
    pattern = None
    for f in (0.0, 1.0, 0.5, 1 / math.pi, 1 / math.e, 1 / math.sqrt(2)):
        m = np.abs(_as_matrix(hamiltonian(t0 + f * (t1 - t0)))) > 0
        pattern = m if pattern is None else pattern | m
    return _pattern_blocks(pattern)


def _nearest_unitary(m):
    u, _, vh = np.linalg.svd(m)
    return u @ vh


class _BlockStepper:
    """Evaluates per-block step exponentials for a Hamiltonian on a fixed partition."""

    def __init__(self, hamiltonian, blocks):
        self.hamiltonian = hamiltonian
        self.blocks = blocks
        self.linear = isinstance(hamiltonian, LinearHamiltonian)
        # blocks with identical generator terms evolve identically
        self.owner = list(range(len(blocks)))
        self.zero = [False] * len(blocks)
        if self.linear:
            self.term_blocks = [np.stack([m[np.ix_(b, b)] for m, _ in hamiltonian.terms]) for b in blocks]
            seen = {}
            for i, tb in enumerate(self.term_blocks):
                self.zero[i] = not np.any(tb)
                key = (tb.shape, tb.tobytes())
                self.owner[i] = seen.setdefault(key, i)

    def run(self, t0, span, n):
        h = span / n
        unique = [i for i in range(len(self.blocks)) if self.owner[i] == i and not self.zero[i]]
        us = {i: np.eye(len(self.blocks[i]), dtype=complex) for i in unique}
        for start in range(0, n, _CHUNK):
            mids = t0 + (np.arange(start, min(n, start + _CHUNK)) + 0.5) * h
            if self.linear:
                coeffs = self.hamiltonian.coefficients(mids)
                stacks = {i: np.einsum("ck,kab->cab", coeffs, self.term_blocks[i]) for i in unique}
            else:
                mats = [_as_matrix(self.hamiltonian(t)) for t in mids]
                stacks = {i: np.stack([m[np.ix_(self.blocks[i], self.blocks[i])] for m in mats]) for i in unique}
            for i in unique:
                steps = matrix_exponential(-1j * h * stacks[i])
                u = us[i]
                for s in steps:
                    u = s @ u
                us[i] = u
        out = []
        for i, b in enumerate(self.blocks):
            if self.zero[i]:
                out.append(np.eye(len(b), dtype=complex))
            else:
                out.append(us[self.owner[i]])
        return out


def propagate(
    hamiltonian: Callable,
    initial=None,
    t0: float = 0.0,
    t1: float = 1.0,
    policy: StepPolicy | None = None,
    blocks=None,
    return_info: bool = False,
):
    """Time-ordered evolution under ``hamiltonian(t)`` from ``t0`` to ``t1``.

    Each step multiplies by ``exp(-i H(t_mid) dt)``, a second-order scheme.
    The step count is doubled until two successive Richardson-extrapolated
    estimates ``(4 U_{dt/2} - U_dt) / 3`` differ by less than ``policy.tol``
    (spectral norm for operators, 2-norm for state vectors); the accepted
    estimate is mapped back onto the nearest unitary.

    Parameters
    ----------
    hamiltonian : callable or LinearHamiltonian
        ``t -> Operator`` (or square array).
    initial : QuantumState, Operator or None
        ``None`` returns the propagator itself.
    policy : StepPolicy, optional
        ``dt`` defaults to a hundredth of the interval.
    blocks : None, "auto" or list of index arrays
        Invariant subspaces to exponentiate separately; ``"auto"`` detects
        them from the sparsity pattern of the Hamiltonian.
    return_info : bool
        Also return a :class:`PropagationInfo`.

    Raises
    ------
    ConvergenceError
        If the tolerance is not met within ``policy.max_steps`` steps.
    """
    policy = policy or StepPolicy()
    span = t1 - t0
    if isinstance(hamiltonian, LinearHamiltonian):
        dims = hamiltonian.dims
        dim = math.prod(dims)
    else:
        h_start = hamiltonian(t0)
        dims = h_start.dims if isinstance(h_start, Operator) else (h_start.shape[0],)
        dim = _as_matrix(h_start).shape[0]
    if blocks is None:
        blocks = [np.arange(dim)]
    elif isinstance(blocks, str):
        if blocks != "auto":
            raise ValueError(f"unknown block mode {blocks!r}")
        blocks = detect_blocks(hamiltonian, t0, t1)

    if isinstance(initial, QuantumState):
        if initial.dim != dim:
            raise DimensionError("initial state does not match the Hamiltonian dimension")
        target = initial
    elif initial is None:
        target = None
    else:
        target = _as_matrix(initial)

    if span == 0:
        u = np.eye(dim, dtype=complex)
        return _finish(u, dims, target, PropagationInfo(0, 0.0, 0), return_info)

    dt = policy.dt if policy.dt else abs(span) / 100
    n_steps = max(1, math.ceil(abs(span) / dt - 1e-9))
    stepper = _BlockStepper(hamiltonian, blocks)

    def distance(xs, ys):
        if isinstance(target, QuantumState) and target.is_pure:
            diffs = [np.linalg.norm((x - y) @ target.data[b]) for x, y, b in zip(xs, ys, blocks)]
            return float(np.sqrt(np.sum(np.square(diffs))))
        return max(float(np.linalg.norm(x - y, 2)) for x, y in zip(xs, ys))

    coarse = stepper.run(t0, span, n_steps)
    previous = None
    residual = math.inf
    levels = 1
    while True:
        n_steps *= 2
        if n_steps > policy.max_steps:
            raise ConvergenceError(
                f"propagation did not converge to {policy.tol:g} within {policy.max_steps} steps "
                f"(residual {residual:.3g})",
                residual=residual,
                steps=n_steps // 2,
            )
        fine = stepper.run(t0, span, n_steps)
        levels += 1
        estimate = [(4 * f - c) / 3 for f, c in zip(fine, coarse)]
        if previous is not None:
            residual = distance(estimate, previous)
            if residual < policy.tol:
                break
        previous, coarse = estimate, fine

    u = np.zeros((dim, dim), dtype=complex)
    for b, ub in zip(blocks, estimate):
        u[np.ix_(b, b)] = _nearest_unitary(ub)
    return _finish(u, dims, target, PropagationInfo(n_steps, residual, levels), return_info)


def _finish(u, dims, target, info, return_info):
    if target is None:
        result = Operator(u, dims)
    elif isinstance(target, QuantumState):
        result = target.evolve(u)
    else:
        result = Operator(u @ target, dims)
    return (result, info) if return_info else result


def propagate_many(hamiltonian, times, t0=0.0, policy=None, blocks=None, return_info=False):
    """Propagators from ``t0`` to each of ``times`` (sorted), chaining intervals."""
    times = np.asarray(times, dtype=float)
    order = np.argsort(times)
    out = [None] * len(times)
    infos = [None] * len(times)
    current = None
    t_prev = t0
    for idx in order:
        step, info = propagate(hamiltonian, None, t_prev, times[idx], policy, blocks, return_info=True)
        current = step if current is None else step @ current
        out[idx] = current
        infos[idx] = info
        t_prev = times[idx]
    return (out, infos) if return_info else out


@dataclass(frozen=True)
class MagnusCoefficients:
    """Conditional displacement per unit coupling and the phase kernel."""

    beta: complex
    phi: float


def magnus_coefficients(t, delta: float) -> MagnusCoefficients:
    """``beta = (e^{i delta t} - 1)/(2 delta)``, ``Phi = (t - sin(delta t)/delta)/(4 delta)``.

    Array ``t`` gives array-valued fields.
    """
    if delta == 0:
        raise DegenerateDetuningError("Magnus coefficients need a nonzero detuning")
    t = np.asarray(t, dtype=float)
    # exact zeros at the loop-closing times delta t = 2 n pi
    phase = np.mod(delta * t, 2 * np.pi)
    beta = (np.exp(1j * phase) - 1) / (2 * delta)
    phi = (t - np.sin(phase) / delta) / (4 * delta)
    if t.ndim == 0:
        return MagnusCoefficients(complex(beta), float(phi))
    return MagnusCoefficients(beta, phi)


def branch_weights(g) -> np.ndarray:
    """``S_s = sum_j g_j s_j`` for every sigma_x configuration ``s``.

    Configurations are ordered like the computational basis of the rotated
    register: bit value 0 means ``s_j = +1``.
    """
    g = np.asarray(g, dtype=float)
    signs = np.array(list(itertools.product((1, -1), repeat=len(g))), dtype=float)
    return signs @ g


def gate_cutoff(params: ModelParams, alpha0: float = 0.0, nbar: float = 0.0) -> int:
    """Default Fock cutoff for a gate: initial amplitude plus the largest conditional displacement."""
    reach = np.abs(branch_weights(params.g)).max() / abs(params.delta)
    return default_cutoff(abs(alpha0) + reach, nbar)


def closed_form_propagator(t: float, params: ModelParams, space: HilbertSpace, strict: bool = True) -> Operator:
    """``exp(i Phi S^2) exp(S (beta a^dag - beta^* a))`` on the full truncated space.

    Assembled per sigma_x branch from truncated displacement operators, then
    rotated back into the sigma_z basis.
    """
    if space.n_qubits != params.n_qubits:
        raise DimensionError("space and params disagree on the number of qubits")
    coeff = magnus_coefficients(t, params.delta)
    weights = branch_weights(params.g)
    nb = 2**space.n_qubits
    cutoff = space.fock_cutoff
    u_rot = np.zeros((space.dim, space.dim), dtype=complex)
    for b, S in enumerate(weights):
        block = np.exp(1j * coeff.phi * S * S) * displacement_operator(S * coeff.beta, cutoff, strict).matrix
        idx = np.arange(cutoff) * nb + b
        u_rot[np.ix_(idx, idx)] = block
    R = sigma_x_rotation(space).matrix
    return Operator(R @ u_rot @ R.conj().T, space.dims)


def default_step(params: ModelParams, rabi_active: bool = False) -> float:
    dt = min(0.01 / abs(params.delta), 0.01 / max(abs(g) for g in params.g))
    if rabi_active:
        dt = min(dt, 0.002 / max(abs(o) for o in params.Omega))
    return dt


def h3_propagator(times, params: ModelParams, space: HilbertSpace, policy: StepPolicy | None = None, return_info=False):
    """Numerical propagators of ``H3`` at ``times`` (scalar or sequence).

    Integrates ``H2``, the same interaction expressed in the sigma_x
    eigenbasis where it is block diagonal, then rotates back.
    """
    policy = policy or StepPolicy(dt=default_step(params))
    provider = interaction_hamiltonian_provider("H2", params, space)
    scalar = np.ndim(times) == 0
    ts = np.atleast_1d(times)
    us, infos = propagate_many(provider, ts, 0.0, policy, blocks="auto", return_info=True)
    R = sigma_x_rotation(space)
    us = [R @ u @ R.dag() for u in us]
    if scalar:
        us, infos = us[0], infos[0]
    return (us, infos) if return_info else us


def gate_times(delta: float, n: int) -> float:
    """Loop-closing time ``T_n = 2 n pi / delta``."""
    if delta <= 0:
        raise DegenerateDetuningError(f"gate times need delta > 0, got {delta}")
    if int(n) != n or n < 1:
        raise ValueError(f"loop count must be a positive integer, got {n}")
    return 2 * int(n) * math.pi / delta


@dataclass(frozen=True)
class GateDesign:
    """Gate schedule closing ``n`` phase-space loops at detuning ``delta``.

    ``target_phase`` is the solved-for coefficient: of ``sx_1 sx_2`` for a
    two-qubit Ising design (``kind="xx"``), of ``J_x^2`` otherwise
    (``kind="twist"``).
    """

    n: int
    delta: float
    g: tuple[float, ...]
    target_phase: float
    kind: str = "xx"

    @property
    def T(self) -> float:
        return gate_times(self.delta, self.n)

    @property
    def phase_kernel(self) -> float:
        return magnus_coefficients(self.T, self.delta).phi

    @property
    def cross_phase(self) -> float:
        """Ising coefficient ``2 Phi(T) g_1 g_2`` of the first qubit pair."""
        return 2 * self.phase_kernel * self.g[0] * self.g[1] if len(self.g) > 1 else 0.0

    @property
    def twist_phase(self) -> float:
        """``J_x^2`` coefficient ``Phi(T) g^2``; only meaningful for equal couplings."""
        return self.phase_kernel * self.g[0] ** 2

    def params(self) -> ModelParams:
        return ModelParams(g=self.g, delta=self.delta)


def entangler_design(g, n: int = 1, twist_phase: float | None = None) -> GateDesign:
    """Solve for the detuning that produces a target entangling phase at ``T_n``.

    Two qubits without ``twist_phase``: the maximal Ising entangler
    ``2 Phi(T_n) g_1 g_2 = pi/4``, i.e. ``delta = 2 sqrt(n g_1 g_2)``.
    Otherwise the couplings must be equal and ``Phi(T_n) g^2 = twist_phase``
    (default ``pi/8``, the two-qubit Bell value), i.e.
    ``delta = g sqrt(n pi / (2 twist_phase))``.
    """
    g = tuple(float(x) for x in np.atleast_1d(g))
    if int(n) != n or n < 1:
        raise DesignError(f"loop count must be a positive integer, got {n}")
    n = int(n)
    if len(g) == 2 and twist_phase is None:
        prod = g[0] * g[1]
        if prod <= 0:
            raise DesignError("no positive detuning solves the design for g1*g2 <= 0")
        return GateDesign(n=n, delta=2 * math.sqrt(n * prod), g=g, target_phase=math.pi / 4, kind="xx")
    if not np.allclose(g, g[0], rtol=0, atol=1e-12 * abs(g[0])):
        raise DesignError("collective J_x^2 design requires equal couplings")
    phase = math.pi / 8 if twist_phase is None else float(twist_phase)
    if phase <= 0 or g[0] == 0:
        raise DesignError("twist phase and coupling must be positive")
    delta = abs(g[0]) * math.sqrt(n * math.pi / (2 * phase))
    return GateDesign(n=n, delta=delta, g=g, target_phase=phase, kind="twist")


def ideal_gate(design: GateDesign) -> Operator:
    """Qubit-only gate ``exp(i Phi(T_n) (S^2 - sum_j g_j^2))``.

    Equals ``exp(i c sx_1 sx_2)`` with ``c = 2 Phi g_1 g_2`` for two qubits
    and ``exp(i Phi g^2 J_x^2)`` up to a global phase for equal couplings.
    """
    n = len(design.g)
    phi = design.phase_kernel
    weights = branch_weights(design.g)
    offset = float(np.sum(np.square(design.g)))
    diag = np.exp(1j * phi * (weights**2 - offset))
    r = np.array([[1, -1], [1, 1]], dtype=complex) / math.sqrt(2)
    R = r
    for _ in range(n - 1):
        R = np.kron(R, r)
    return Operator(R @ np.diag(diag) @ R.conj().T, (2,) * n)


def twisting_gate(chi: float, n_qubits: int) -> Operator:
    """One-axis twisting ``exp(i chi J_x^2)`` with ``J_x = sum_j sigma_x_j``."""
    jx = qubit_collective("sigma_x", n_qubits)
    return Operator(matrix_exponential(1j * chi * (jx @ jx)), (2,) * n_qubits)
