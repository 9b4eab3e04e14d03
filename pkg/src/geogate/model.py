"""Charge-qubit/cavity parameters and the chain of model Hamiltonians.

Every builder works in one consistent unit system with hbar = 1; the
frame-level helpers assume dimensionless angular frequencies scaled by a
reference coupling g.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
import scipy.constants

from .errors import DegenerateDetuningError, DimensionError
from .hilbert import (
    HilbertSpace,
    LinearHamiltonian,
    Operator,
    coherent_tail,
    default_cutoff,
    displacement_operator,
    kron,
    pauli,
    site_operator,
    TAIL_TOL,
)

HAMILTONIAN_KINDS = (
    "charge_qubit",
    "lab_coupled",
    "eigenbasis",
    "optimal_point",
    "jaynes_cummings",
    "rotating_frame",
)
STAGES = ("H1", "H2", "H3")


class ChargeRegimeWarning(UserWarning):
    """E_J is not small against E_c; the two-charge-state model is doubtful."""


@dataclass(frozen=True)
class DeviceParams:
    """Physical Cooper-pair-box parameters.

    Energies ``E_c``, ``E_J`` and ``omega_r`` are frequencies in GHz,
    capacitances in farads, ``V_rms`` in volts and ``Phi`` in units of the
    flux quantum.
    """

    E_c: float
    E_J: float
    n_bar: float = 0.5
    Phi: float = 0.0
    C_g: float | None = None
    C_J: float | None = None
    C_Sigma: float | None = None
    V_rms: float | None = None
    omega_r: float | None = None

    def __post_init__(self):
        if not 0.0 <= self.n_bar <= 1.0:
            raise ValueError(f"n_bar must lie in [0, 1], got {self.n_bar}")
        if self.E_c <= 0:
            raise ValueError("E_c must be positive")
        if self.E_J / self.E_c > 0.2:
            warnings.warn(
                f"E_J/E_c = {self.E_J / self.E_c:.3g} > 0.2: outside the charge regime",
                ChargeRegimeWarning,
                stacklevel=3,
            )
        if self.C_g is not None and self.C_J is not None:
            total = self.C_g + 2 * self.C_J
            if self.C_Sigma is None:
                object.__setattr__(self, "C_Sigma", total)
            elif abs(self.C_Sigma - total) > 1e-12 * max(abs(total), 1e-300):
                raise ValueError(f"C_Sigma={self.C_Sigma} differs from C_g + 2 C_J = {total}")


class QubitParams(NamedTuple):
    epsilon: float
    Delta: float
    theta: float
    omega_a: float
    g: float | None


def derive_qubit_params(dev: DeviceParams) -> QubitParams:
    """Bias, tunnel splitting, mixing angle, qubit splitting and cavity coupling.

    ``g = e C_g V_rms / C_Sigma`` is converted to GHz (divided by Planck's
    constant) so it shares units with ``E_c``; it is ``None`` when the
    capacitances or the rms voltage are not given.
    """
    epsilon = dev.E_c * (1 - 2 * dev.n_bar)
    Delta = 2 * dev.E_J * math.cos(math.pi * dev.Phi)
    # flux tuning exactly onto the cosine node
    if abs(Delta) < 1e-15 * max(dev.E_J, 1.0):
        Delta = 0.0
    theta = math.atan2(Delta, epsilon)
    omega_a = math.hypot(epsilon, Delta)
    g = None
    if dev.C_g is not None and dev.C_Sigma and dev.V_rms is not None:
        g = scipy.constants.e * dev.C_g * dev.V_rms / dev.C_Sigma / scipy.constants.h / 1e9
    return QubitParams(epsilon, Delta, theta, omega_a, g)


def _tuple(values, n=None):
    if values is None:
        return None
    arr = tuple(float(v) for v in np.atleast_1d(values))
    if n is not None and len(arr) == 1 and n > 1:
        arr = arr * n
    if n is not None and len(arr) != n:
        raise DimensionError(f"expected {n} per-qubit values, got {len(arr)}")
    return arr


@dataclass(frozen=True)
class ModelParams:
    """Frame-level parameters of the cavity + qubits model.

    ``delta = omega_r - omega_d`` is stored directly because the gate only
    depends on it; lab-frame builders additionally need ``omega_r``.
    Per-qubit sequences accept a scalar that is broadcast.
    """

    g: tuple[float, ...]
    delta: float | None = None
    omega_r: float | None = None
    Delta: tuple[float, ...] | None = None
    drive_eps: float = 0.0
    epsilon: tuple[float, ...] | None = None
    n_bar: float = 0.5
    Omega_override: tuple[float, ...] | None = field(default=None, repr=False)

    def __post_init__(self):
        g = _tuple(self.g)
        if not g:
            raise DimensionError("at least one coupling is required")
        object.__setattr__(self, "g", g)
        n = len(g)
        object.__setattr__(self, "Delta", _tuple(self.Delta, n))
        object.__setattr__(self, "epsilon", _tuple(self.epsilon, n))
        object.__setattr__(self, "Omega_override", _tuple(self.Omega_override, n))

    @classmethod
    def with_rabi(cls, g, delta, Omega, **kwargs) -> ModelParams:
        """Parameters whose drive gives the Rabi frequency ``Omega`` on qubit 0."""
        g = _tuple(g)
        if delta == 0:
            raise DegenerateDetuningError("a nonzero detuning is needed to define the Rabi frequency")
        eps = Omega * delta / (2 * g[0])
        return cls(g=g, delta=delta, drive_eps=eps, **kwargs)

    @property
    def n_qubits(self) -> int:
        return len(self.g)

    @property
    def omega_d(self) -> float:
        if self.omega_r is None or self.delta is None:
            raise ValueError("omega_d needs both omega_r and delta")
        return self.omega_r - self.delta

    @property
    def Omega(self) -> tuple[float, ...]:
        """Per-qubit Rabi frequencies ``2 g_j eps / delta``."""
        if self.Omega_override is not None:
            return self.Omega_override
        if not self.delta:
            raise DegenerateDetuningError("the Rabi frequency is undefined at delta = 0")
        return tuple(2 * gj * self.drive_eps / self.delta for gj in self.g)

    @property
    def splittings(self) -> tuple[float, ...]:
        """Qubit splittings; resonant with the drive when not given."""
        if self.Delta is not None:
            return self.Delta
        return (self.omega_d,) * self.n_qubits

    @property
    def biases(self) -> tuple[float, ...]:
        return self.epsilon if self.epsilon is not None else (0.0,) * self.n_qubits

    @property
    def theta(self) -> tuple[float, ...]:
        return tuple(math.atan2(D, e) for D, e in zip(self.splittings, self.biases))

    @property
    def omega_a(self) -> tuple[float, ...]:
        return tuple(math.hypot(D, e) for D, e in zip(self.splittings, self.biases))


def _check_space(params: ModelParams, space: HilbertSpace):
    if space.n_qubits != params.n_qubits:
        raise DimensionError(f"space has {space.n_qubits} qubits but params describe {params.n_qubits}")


def _require(value, name):
    if value is None:
        raise ValueError(f"this Hamiltonian needs {name}")
    return value


def eigenbasis_rotation(theta: float) -> np.ndarray:
    """Columns are |up>, |down> written in the charge basis {|0>, |1>}."""
    c, s = math.cos(theta / 2), math.sin(theta / 2)
    return np.array([[c, -s], [s, c]], dtype=complex)


def sigma_x_rotation(space: HilbertSpace) -> Operator:
    """``exp(-i (pi/4) sum_j sigma_y_j)``: maps sigma_z eigenstates onto sigma_x ones."""
    r = np.array([[1, -1], [1, 1]], dtype=complex) / math.sqrt(2)
    return Operator(kron(np.eye(space.fock_cutoff), *([r] * space.n_qubits)), space.dims)


def build_hamiltonian(kind: str, params: ModelParams, space: HilbertSpace) -> Operator:
    """Hermitian matrix of one Hamiltonian of the model chain.

    Parameters
    ----------
    kind : str
        ``charge_qubit``
            ``-sum_j (eps_j/2 s~z_j + Delta_j/2 s~x_j)`` in the charge basis,
            returned on the qubit register only (no cavity factor).
        ``lab_coupled``
            ``w_r a^dag a - sum_j [eps_j/2 s~z + Delta_j/2 s~x
            + g_j (a + a^dag)(1 - 2 n_bar - s~z)]``.
        ``eigenbasis``
            ``w_r a^dag a + sum_j [w_a/2 sz - g_j (a + a^dag)
            (1 - 2 n_bar - cos(theta) sz + sin(theta) sx)]``.
        ``optimal_point``
            ``w_r a^dag a + sum_j [Delta_j/2 sz - g_j (a + a^dag) sx]``.
        ``jaynes_cummings``
            ``w_r a^dag a + sum_j [Delta_j/2 sz - g_j (a^dag s- + a s+)]``.
        ``rotating_frame``
            ``delta a^dag a + sum_j [Omega_j/2 sx - g_j (a s+ + a^dag s-)]``.
    params : ModelParams
    space : HilbertSpace
    """
    _check_space(params, space)
    n = params.n_qubits
    if kind == "charge_qubit":
        H = np.zeros((2**n, 2**n), dtype=complex)
        for j, (e, D) in enumerate(zip(params.biases, params.splittings)):
            local = -0.5 * e * pauli("sigma_z") - 0.5 * D * pauli("sigma_x")
            H += kron(*[local if k == j else np.eye(2) for k in range(n)])
        return Operator(H, space.qubit_dims)
    if kind not in HAMILTONIAN_KINDS:
        raise ValueError(f"unknown Hamiltonian kind {kind!r}")

    a = site_operator("annihilation", "cavity", space)
    ad = a.dag()
    quad = a + ad
    num = ad @ a
    one = space.identity()
    sx = [site_operator("sigma_x", j, space) for j in range(n)]
    sz = [site_operator("sigma_z", j, space) for j in range(n)]
    sp = [site_operator("sigma_plus", j, space) for j in range(n)]
    sm = [site_operator("sigma_minus", j, space) for j in range(n)]
    g = params.g

    if kind == "rotating_frame":
        delta = _require(params.delta, "delta")
        H = delta * num
        for j in range(n):
            H = H + 0.5 * params.Omega[j] * sx[j] - g[j] * (a @ sp[j] + ad @ sm[j])
        return H

    omega_r = _require(params.omega_r, "omega_r")
    H = omega_r * num
    if kind == "lab_coupled":
        drive_bias = 1 - 2 * params.n_bar
        for j in range(n):
            coupling = quad @ (drive_bias * one - sz[j])
            H = H - (0.5 * params.biases[j] * sz[j] + 0.5 * params.splittings[j] * sx[j] + g[j] * coupling)
    elif kind == "eigenbasis":
        drive_bias = 1 - 2 * params.n_bar
        for j in range(n):
            th = params.theta[j]
            mix = drive_bias * one - math.cos(th) * sz[j] + math.sin(th) * sx[j]
            H = H + 0.5 * params.omega_a[j] * sz[j] - g[j] * (quad @ mix)
    elif kind == "optimal_point":
        for j in range(n):
            H = H + 0.5 * params.splittings[j] * sz[j] - g[j] * (quad @ sx[j])
    elif kind == "jaynes_cummings":
        for j in range(n):
            H = H + 0.5 * params.splittings[j] * sz[j] - g[j] * (ad @ sm[j] + a @ sp[j])
    return H


def drive_term(t: float, params: ModelParams, space: HilbertSpace) -> Operator:
    """``eps a^dag e^{-i w_d t} + eps^* a e^{i w_d t}`` on the cavity."""
    a = site_operator("annihilation", "cavity", space)
    phase = np.exp(-1j * params.omega_d * t)
    return params.drive_eps * phase * a.dag() + np.conj(params.drive_eps * phase) * a


def classical_drive_amplitude(t, omega_r, omega_d, eps, alpha0=0.0):
    """Closed-form solution of ``i dalpha/dt = w_r alpha + eps e^{-i w_d t}``.

    ``alpha(t) = (alpha0 + eps/delta) e^{-i w_r t} - (eps/delta) e^{-i w_d t}``
    with ``delta = w_r - w_d``. Accepts scalar or array ``t``.
    """
    delta = omega_r - omega_d
    if delta == 0:
        raise DegenerateDetuningError("resonant cavity drive (delta = 0) has no bounded classical field")
    t = np.asarray(t, dtype=float)
    ratio = eps / delta
    out = (alpha0 + ratio) * np.exp(-1j * omega_r * t) - ratio * np.exp(-1j * omega_d * t)
    return complex(out) if out.ndim == 0 else out


def classical_drive_rate(t, alpha, omega_r, omega_d, eps):
    """Right-hand side ``-i (w_r alpha + eps e^{-i w_d t})`` of the field equation."""
    return -1j * (omega_r * alpha + eps * np.exp(-1j * omega_d * np.asarray(t, dtype=float)))


def interaction_hamiltonian_provider(stage: str, params: ModelParams, space: HilbertSpace):
    """Time-dependent Hamiltonian (``t -> Operator``) of the interaction-picture stage ``H1``, ``H2`` or ``H3``.

    ``H1`` and ``H2`` are written in the sigma_x eigenbasis (qubit index 0
    is |+>, index 1 is |->); ``H3`` is in the original sigma_z basis.
    """
    if stage not in STAGES:
        raise ValueError(f"unknown interaction stage {stage!r}")
    _check_space(params, space)
    delta = _require(params.delta, "delta")
    a = site_operator("annihilation", "cavity", space).matrix
    dims = space.dims

    if stage in ("H2", "H3"):
        kind = "sigma_z" if stage == "H2" else "sigma_x"
        S = sum(gj * site_operator(kind, j, space).matrix for j, gj in enumerate(params.g))
        lower = -0.5 * a @ S
        return LinearHamiltonian(
            [(lower, lambda t: np.exp(-1j * delta * t)), (lower.conj().T, lambda t: np.exp(1j * delta * t))],
            dims,
        )

    terms = []

    def add(m, freq):
        # m e^{-i freq t} + h.c.
        terms.append((m, lambda t: np.exp(-1j * freq * t)))
        terms.append((m.conj().T, lambda t: np.exp(1j * freq * t)))

    add(sum(-0.5 * gj * a @ site_operator("sigma_z", j, space).matrix for j, gj in enumerate(params.g)), delta)
    for j, (gj, om) in enumerate(zip(params.g, params.Omega)):
        add(-0.5 * gj * a @ site_operator("sigma_plus", j, space).matrix, delta - om)
        add(0.5 * gj * a @ site_operator("sigma_minus", j, space).matrix, delta + om)
    return LinearHamiltonian(terms, dims)


def interaction_hamiltonian(stage: str, t: float, params: ModelParams, space: HilbertSpace) -> Operator:
    return interaction_hamiltonian_provider(stage, params, space)(t)


def sigma_x_split(params: ModelParams, space: HilbertSpace) -> tuple[Operator, Operator]:
    """Free part and interaction of the rotating-frame Hamiltonian in the sigma_x eigenbasis.

    ``H0 = delta a^dag a + sum_j Omega_j/2 sz_j`` and
    ``H_int = -1/2 sum_j [g_j a (sz_j + |+><-| - |-><+|) + h.c.]``.
    """
    _check_space(params, space)
    a = site_operator("annihilation", "cavity", space)
    H0 = _require(params.delta, "delta") * (a.dag() @ a)
    lower = None
    for j, gj in enumerate(params.g):
        sz = site_operator("sigma_z", j, space)
        H0 = H0 + 0.5 * params.Omega[j] * sz
        term = (-0.5 * gj) * (a @ (sz + site_operator("sigma_plus", j, space) - site_operator("sigma_minus", j, space)))
        lower = term if lower is None else lower + term
    return H0, lower + lower.dag()


def rotating_frame_generator(params: ModelParams, space: HilbertSpace) -> Operator:
    """``delta a^dag a + sum_j Omega_j/2 sx_j``: removing it from the rotating frame
    gives the interaction picture in the original qubit basis."""
    a = site_operator("annihilation", "cavity", space)
    H0 = params.delta * (a.dag() @ a)
    for j in range(params.n_qubits):
        H0 = H0 + 0.5 * params.Omega[j] * site_operator("sigma_x", j, space)
    return H0


@dataclass(frozen=True)
class FrameResidual:
    """Outcome of :func:`displaced_frame_residual`.

    ``residual`` is the largest operator norm (over the time grid) of the
    traceless remainder restricted to the Fock window ``n < window``;
    ``derivative_error`` compares the analytic frame term with a central
    finite difference of the truncated displacement.
    """

    residual: float
    derivative_error: float
    window: int
    per_time: np.ndarray


def displaced_frame_residual(
    params: ModelParams,
    space: HilbertSpace,
    t_grid,
    alpha0=None,
    alpha_error: float = 0.0,
    window: int | None = None,
    fd_step: float | None = None,
) -> FrameResidual:
    """Check that displacing by the classical field removes the cavity drive.

    The driven lab Hamiltonian ``H_JC + drive`` is conjugated by
    ``D(alpha(t))`` and the frame term ``i D^dag dD/dt`` (from the analytic
    ``dalpha/dt``) is removed; what remains is compared with
    ``w_r a^dag a + sum_j {Delta_j/2 sz - g_j [(a + alpha) s+ + h.c.]}``.
    Only a multiple of the identity may survive, so the trace part is
    subtracted before taking the norm.

    ``alpha_error`` scales the field used in the transformation by
    ``1 + alpha_error`` (the target keeps the exact field) to probe how the
    residual responds to a mismatched frame. The comparison is restricted to
    cavity levels below ``window``, by default the cutoff minus the default
    cutoff rule for the largest ``|alpha|``, so truncation-edge artefacts of
    the finite displacement matrix stay out of the check.
    """
    _check_space(params, space)
    omega_r = _require(params.omega_r, "omega_r")
    omega_d = params.omega_d
    eps = params.drive_eps
    delta = omega_r - omega_d
    if alpha0 is None:
        alpha0 = -eps / delta if delta else 0.0
    t_grid = np.atleast_1d(np.asarray(t_grid, dtype=float))
    alphas = np.atleast_1d(classical_drive_amplitude(t_grid, omega_r, omega_d, eps, alpha0))
    used = (1 + alpha_error) * alphas
    cutoff = space.fock_cutoff
    amax = float(np.max(np.abs(used), initial=0.0))
    if window is None:
        window = max(1, cutoff - default_cutoff(amax))
    if coherent_tail(amax, cutoff) > TAIL_TOL and window == cutoff:
        warnings.warn("full-space residual includes truncation-edge effects", stacklevel=2)

    keep = np.array([i for i in range(space.dim) if i // 2**space.n_qubits < window])
    a = site_operator("annihilation", "cavity", space)
    ad = a.dag()
    H_jc = build_hamiltonian("jaynes_cummings", params, space)
    sp = [site_operator("sigma_plus", j, space) for j in range(params.n_qubits)]
    base = omega_r * (ad @ a)
    for j in range(params.n_qubits):
        base = base + 0.5 * params.splittings[j] * site_operator("sigma_z", j, space)
    one = space.identity()
    cav_eye = np.eye(2**space.n_qubits)

    if fd_step is None:
        spacing = np.min(np.diff(t_grid)) if t_grid.size > 1 else 1.0
        fd_step = min(1e-4 / max(abs(omega_r), abs(omega_d), 1.0), 0.5 * spacing)

    def full_displacement(alpha):
        return Operator(np.kron(displacement_operator(alpha, cutoff, strict=False).matrix, cav_eye), space.dims)

    per_time = np.empty(t_grid.size)
    deriv_err = 0.0
    for k, (t, alpha, alpha_used) in enumerate(zip(t_grid, alphas, used)):
        rate = (1 + alpha_error) * classical_drive_rate(t, alpha, omega_r, omega_d, eps)
        D = full_displacement(alpha_used)
        transformed = D.dag() @ (H_jc + drive_term(t, params, space)) @ D
        frame = 1j * (rate * ad - np.conj(rate) * a) + (
            0.5j * (rate * np.conj(alpha_used) - np.conj(rate) * alpha_used)
        ) * one
        target = base
        for j, gj in enumerate(params.g):
            lower = (a + alpha * one) @ sp[j]
            target = target - gj * (lower + lower.dag())
        rem = (transformed - frame - target).matrix[np.ix_(keep, keep)]
        rem = rem - np.trace(rem) / len(keep) * np.eye(len(keep))
        per_time[k] = np.linalg.norm(rem, 2)

        # finite-difference cross-check of the frame term
        a_plus = (1 + alpha_error) * classical_drive_amplitude(t + fd_step, omega_r, omega_d, eps, alpha0)
        a_minus = (1 + alpha_error) * classical_drive_amplitude(t - fd_step, omega_r, omega_d, eps, alpha0)
        dD = (full_displacement(a_plus) - full_displacement(a_minus)) / (2 * fd_step)
        fd = (1j * (D.dag() @ dD)).matrix[np.ix_(keep, keep)]
        deriv_err = max(deriv_err, float(np.linalg.norm(fd - frame.matrix[np.ix_(keep, keep)], 2)))

    if deriv_err > 1e-4:
        warnings.warn(f"finite-difference frame term deviates by {deriv_err:.3g}; grid or step too coarse", stacklevel=2)
    return FrameResidual(float(per_time.max(initial=0.0)), deriv_err, int(window), per_time)
