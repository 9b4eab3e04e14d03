"""Truncated Hilbert space of one cavity mode and N two-level qubits.

Tensor ordering is fixed everywhere: cavity first, then qubits 0..N-1.
Qubit basis index 0 is |up> (sigma_z = +1), index 1 is |down>, so that
sigma_plus = |up><down|.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import reduce

import numpy as np
import scipy.linalg
import scipy.special
from scipy.stats import poisson

from .errors import AddressingError, DimensionError, NumericError, TruncationError

#: Largest tolerated probability weight beyond the Fock cutoff.
TAIL_TOL = 1e-10

HERMITIAN_TOL = 1e-12

_PAULI = {
    "identity": np.eye(2, dtype=complex),
    "sigma_x": np.array([[0, 1], [1, 0]], dtype=complex),
    "sigma_y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "sigma_z": np.array([[1, 0], [0, -1]], dtype=complex),
    "sigma_plus": np.array([[0, 1], [0, 0]], dtype=complex),
    "sigma_minus": np.array([[0, 0], [1, 0]], dtype=complex),
}
_CAVITY_KINDS = ("annihilation", "creation", "number", "identity")


def pauli(kind: str) -> np.ndarray:
    """Bare 2x2 matrix of a single-qubit operator."""
    try:
        return _PAULI[kind].copy()
    except KeyError:
        raise AddressingError(f"unknown qubit operator {kind!r}") from None


@dataclass(frozen=True)
class HilbertSpace:
    """One truncated cavity mode (``fock_cutoff`` levels) plus ``n_qubits`` qubits."""

    n_qubits: int
    fock_cutoff: int

    def __post_init__(self):
        if int(self.n_qubits) != self.n_qubits or self.n_qubits < 1:
            raise DimensionError(f"n_qubits must be a positive integer, got {self.n_qubits}")
        if int(self.fock_cutoff) != self.fock_cutoff or self.fock_cutoff < 2:
            raise DimensionError(f"fock_cutoff must be >= 2, got {self.fock_cutoff}")

    @property
    def dims(self) -> tuple[int, ...]:
        return (self.fock_cutoff,) + (2,) * self.n_qubits

    @property
    def qubit_dims(self) -> tuple[int, ...]:
        return (2,) * self.n_qubits

    @property
    def dim(self) -> int:
        return self.fock_cutoff * 2**self.n_qubits

    @property
    def qubit_subsystems(self) -> tuple[int, ...]:
        """Subsystem indices of the qubits within :attr:`dims`."""
        return tuple(range(1, self.n_qubits + 1))

    def identity(self) -> Operator:
        return Operator(np.eye(self.dim, dtype=complex), self.dims)


class Operator:
    """Dense complex matrix tagged with the subsystem dimensions it acts on."""

    __array_priority__ = 100

    def __init__(self, matrix, dims):
        matrix = np.asarray(matrix, dtype=complex)
        dims = tuple(int(d) for d in dims)
        if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
            raise DimensionError(f"operator matrix must be square, got shape {matrix.shape}")
        if matrix.shape[0] != math.prod(dims):
            raise DimensionError(f"matrix of size {matrix.shape[0]} does not match dims {dims}")
        self.matrix = matrix
        self.dims = dims

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def dag(self) -> Operator:
        return Operator(self.matrix.conj().T, self.dims)

    def hermiticity_error(self) -> float:
        return float(np.max(np.abs(self.matrix - self.matrix.conj().T), initial=0.0))

    def is_hermitian(self, tol: float = HERMITIAN_TOL) -> bool:
        return self.hermiticity_error() <= tol

    def _coerce(self, other):
        if isinstance(other, Operator):
            if other.dims != self.dims:
                raise DimensionError(f"dims mismatch: {self.dims} vs {other.dims}")
            return other.matrix
        return None

    def __matmul__(self, other):
        if isinstance(other, Operator):
            return Operator(self.matrix @ self._coerce(other), self.dims)
        return NotImplemented

    def __add__(self, other):
        m = self._coerce(other)
        if m is None:
            return NotImplemented
        return Operator(self.matrix + m, self.dims)

    def __sub__(self, other):
        m = self._coerce(other)
        if m is None:
            return NotImplemented
        return Operator(self.matrix - m, self.dims)

    def __mul__(self, scalar):
        if isinstance(scalar, Operator):
            return NotImplemented
        return Operator(self.matrix * scalar, self.dims)

    __rmul__ = __mul__

    def __truediv__(self, scalar):
        return Operator(self.matrix / scalar, self.dims)

    def __neg__(self):
        return Operator(-self.matrix, self.dims)

    def __repr__(self):
        return f"Operator(dims={self.dims})"


class QuantumState:
    """Pure state vector (1-D data) or density matrix (2-D data)."""

    def __init__(self, data, dims):
        data = np.asarray(data, dtype=complex)
        dims = tuple(int(d) for d in dims)
        size = math.prod(dims)
        if data.ndim == 1:
            ok = data.shape == (size,)
        elif data.ndim == 2:
            ok = data.shape == (size, size)
        else:
            ok = False
        if not ok:
            raise DimensionError(f"state data of shape {data.shape} does not match dims {dims}")
        self.data = data
        self.dims = dims

    @property
    def is_pure(self) -> bool:
        return self.data.ndim == 1

    @property
    def dim(self) -> int:
        return self.data.shape[0]

    def density_matrix(self) -> np.ndarray:
        if self.is_pure:
            return np.outer(self.data, self.data.conj())
        return self.data

    def purity(self) -> float:
        if self.is_pure:
            return float(np.vdot(self.data, self.data).real ** 2)
        rho = self.data
        return float(np.real(np.einsum("ij,ji->", rho, rho)))

    def expect(self, op) -> complex:
        m = op.matrix if isinstance(op, Operator) else np.asarray(op)
        if self.is_pure:
            return complex(np.vdot(self.data, m @ self.data))
        return complex(np.trace(m @ self.data))

    def evolve(self, unitary) -> QuantumState:
        u = unitary.matrix if isinstance(unitary, Operator) else np.asarray(unitary)
        if self.is_pure:
            return QuantumState(u @ self.data, self.dims)
        return QuantumState(u @ self.data @ u.conj().T, self.dims)

    def validate(self, tol: float = 1e-10) -> None:
        """Raise :class:`NumericError` unless the state is physical within ``tol``."""
        if not np.all(np.isfinite(self.data)):
            raise NumericError("state contains non-finite entries")
        if self.is_pure:
            norm = np.linalg.norm(self.data)
            if abs(norm - 1) > tol:
                raise NumericError(f"state norm {norm} deviates from 1")
            return
        rho = self.data
        if np.max(np.abs(rho - rho.conj().T)) > tol:
            raise NumericError("density matrix is not Hermitian")
        tr = np.trace(rho).real
        if abs(tr - 1) > tol:
            raise NumericError(f"density matrix trace {tr} deviates from 1")
        low = np.linalg.eigvalsh(rho).min()
        if low < -tol:
            raise NumericError(f"density matrix has negative eigenvalue {low}")

    def __repr__(self):
        kind = "pure" if self.is_pure else "mixed"
        return f"QuantumState({kind}, dims={self.dims})"


def default_cutoff(alpha_max: float, nbar: float = 0.0) -> int:
    """Fock cutoff ``ceil(|a|^2 + 6|a| + 10)``, widened for a thermal component."""
    a = abs(alpha_max)
    cutoff = math.ceil(a * a + 6 * a + 10)
    if nbar > 0:
        ratio = nbar / (1 + nbar)
        cutoff += math.ceil(math.log(TAIL_TOL) / math.log(ratio))
    return cutoff


def coherent_tail(alpha: complex, cutoff: int) -> float:
    """Probability weight of a coherent state on Fock levels >= ``cutoff``."""
    return float(poisson.sf(cutoff - 1, abs(alpha) ** 2))


def _check_tail(alpha, cutoff, strict):
    tail = coherent_tail(alpha, cutoff)
    if strict and tail > TAIL_TOL:
        raise TruncationError(
            f"cutoff {cutoff} is inadequate for |alpha|={abs(alpha):.4g} "
            f"(tail weight {tail:.3g}; default rule suggests {default_cutoff(alpha)})",
            tail=tail,
            cutoff=cutoff,
        )
    return tail


def ladder_operator(cutoff: int) -> Operator:
    """Truncated annihilation operator with ``a[n-1, n] = sqrt(n)``.

    The creation operator is ``ladder_operator(cutoff).dag()``.
    """
    if int(cutoff) != cutoff or cutoff < 2:
        raise DimensionError(f"cutoff must be an integer >= 2, got {cutoff}")
    a = np.diag(np.sqrt(np.arange(1, cutoff, dtype=float)), 1).astype(complex)
    return Operator(a, (cutoff,))


def kron(*matrices: np.ndarray) -> np.ndarray:
    return reduce(np.kron, matrices)


def embed(local: np.ndarray, site, space: HilbertSpace) -> Operator:
    """Place ``local`` on ``site`` ("cavity" or qubit index) with identities elsewhere."""
    factors = [np.eye(space.fock_cutoff, dtype=complex)] + [np.eye(2, dtype=complex)] * space.n_qubits
    if site == "cavity":
        slot = 0
    elif isinstance(site, (int, np.integer)) and not isinstance(site, bool) and 0 <= site < space.n_qubits:
        slot = int(site) + 1
    else:
        raise AddressingError(f"invalid site {site!r} for {space.n_qubits} qubits")
    if local.shape != (space.dims[slot],) * 2:
        raise AddressingError(f"local operator of shape {local.shape} does not fit site {site!r}")
    factors[slot] = local
    return Operator(kron(*factors), space.dims)


def site_operator(kind: str, site, space: HilbertSpace) -> Operator:
    """Operator ``kind`` acting on one factor of ``space``.

    Parameters
    ----------
    kind : str
        One of ``sigma_x``, ``sigma_y``, ``sigma_z``, ``sigma_plus``,
        ``sigma_minus`` (qubit sites), ``annihilation``, ``creation``,
        ``number`` (cavity site) or ``identity`` (either).
    site : "cavity" or int
        Target factor; qubits are indexed from 0.
    space : HilbertSpace
    """
    if site == "cavity":
        if kind not in _CAVITY_KINDS:
            raise AddressingError(f"{kind!r} cannot act on the cavity")
        a = ladder_operator(space.fock_cutoff).matrix
        local = {
            "annihilation": a,
            "creation": a.conj().T,
            "number": a.conj().T @ a,
            "identity": np.eye(space.fock_cutoff, dtype=complex),
        }[kind]
    else:
        if kind in _CAVITY_KINDS and kind != "identity":
            raise AddressingError(f"{kind!r} acts on the cavity, not on qubit {site!r}")
        local = pauli(kind)
    return embed(local, site, space)


def collective_operator(kind: str, space: HilbertSpace, weights=None) -> Operator:
    """Weighted sum ``sum_j w_j kind_j`` over all qubits (``J_nu`` for unit weights)."""
    if weights is None:
        weights = np.ones(space.n_qubits)
    weights = np.broadcast_to(np.asarray(weights, dtype=float), (space.n_qubits,))
    total = np.zeros((space.dim, space.dim), dtype=complex)
    for j, w in enumerate(weights):
        total += w * site_operator(kind, j, space).matrix
    return Operator(total, space.dims)


def qubit_operator(local: np.ndarray, site: int, n_qubits: int) -> np.ndarray:
    """Embed a 2x2 matrix on qubit ``site`` of a qubit-only register."""
    factors = [np.eye(2, dtype=complex)] * n_qubits
    factors[site] = local
    return kron(*factors)


def qubit_collective(kind: str, n_qubits: int, weights=None) -> np.ndarray:
    """Qubit-register version of :func:`collective_operator`."""
    if weights is None:
        weights = np.ones(n_qubits)
    local = pauli(kind)
    return sum(w * qubit_operator(local, j, n_qubits) for j, w in enumerate(weights))


def fock_state(n: int, cutoff: int) -> np.ndarray:
    if not 0 <= n < cutoff:
        raise DimensionError(f"Fock level {n} is outside cutoff {cutoff}")
    vec = np.zeros(cutoff, dtype=complex)
    vec[n] = 1.0
    return vec


def coherent_amplitudes(alpha: complex, cutoff: int, strict: bool = True) -> np.ndarray:
    """Truncated coherent-state amplitudes, renormalized after truncation."""
    _check_tail(alpha, cutoff, strict)
    if alpha == 0:
        return fock_state(0, cutoff)
    n = np.arange(cutoff)
    # log-space: alpha**n / sqrt(n!) overflows for large n
    log_mag = n * np.log(abs(alpha)) - 0.5 * scipy.special.gammaln(n + 1) - abs(alpha) ** 2 / 2
    amps = np.exp(log_mag) * np.exp(1j * n * np.angle(alpha))
    return amps / np.linalg.norm(amps)


def thermal_populations(nbar: float, cutoff: int, strict: bool = True) -> np.ndarray:
    if nbar < 0:
        raise ValueError(f"mean photon number must be >= 0, got {nbar}")
    if nbar == 0:
        return np.eye(cutoff)[0]
    ratio = nbar / (1 + nbar)
    tail = ratio**cutoff
    if strict and tail > TAIL_TOL:
        raise TruncationError(
            f"cutoff {cutoff} is inadequate for thermal nbar={nbar} (tail weight {tail:.3g})",
            tail=tail,
            cutoff=cutoff,
        )
    p = ratio ** np.arange(cutoff)
    return p / p.sum()


def cavity_state(kind: str, value=0, cutoff: int = 20, strict: bool = True) -> QuantumState:
    """Initial cavity state: ``fock`` (value = n), ``coherent`` (value = alpha)
    or ``thermal`` (value = mean photon number).

    Coherent and thermal states are renormalized after truncation; with
    ``strict`` a tail weight above ``TAIL_TOL`` raises :class:`TruncationError`.
    """
    if cutoff < 2:
        raise DimensionError(f"cutoff must be >= 2, got {cutoff}")
    if kind == "fock":
        return QuantumState(fock_state(int(value), cutoff), (cutoff,))
    if kind == "coherent":
        return QuantumState(coherent_amplitudes(complex(value), cutoff, strict), (cutoff,))
    if kind == "thermal":
        return QuantumState(np.diag(thermal_populations(float(value), cutoff, strict)).astype(complex), (cutoff,))
    raise ValueError(f"unknown cavity state kind {kind!r}")


_QUBIT_KETS = {
    "up": np.array([1, 0], dtype=complex),
    "down": np.array([0, 1], dtype=complex),
    "+": np.array([1, 1], dtype=complex) / np.sqrt(2),
    "-": np.array([1, -1], dtype=complex) / np.sqrt(2),
    "+i": np.array([1, 1j], dtype=complex) / np.sqrt(2),
    "-i": np.array([1, -1j], dtype=complex) / np.sqrt(2),
}


def qubit_ket(label) -> np.ndarray:
    """Single-qubit ket from a label (``up``, ``down``, ``+``, ``-``, ``+i``, ``-i``)
    or from an explicit length-2 amplitude vector."""
    if isinstance(label, str):
        try:
            return _QUBIT_KETS[label].copy()
        except KeyError:
            raise ValueError(f"unknown qubit state label {label!r}") from None
    vec = np.asarray(label, dtype=complex)
    if vec.shape != (2,):
        raise DimensionError("qubit ket must have two amplitudes")
    return vec / np.linalg.norm(vec)


def product_state(cavity: QuantumState, qubits) -> QuantumState:
    """``cavity ⊗ q_0 ⊗ ... ⊗ q_{N-1}`` with qubit kets given as labels or vectors."""
    kets = [qubit_ket(q) for q in qubits]
    register = kron(*kets)
    dims = cavity.dims + (2,) * len(kets)
    if cavity.is_pure:
        return QuantumState(np.kron(cavity.data, register), dims)
    return QuantumState(np.kron(cavity.data, np.outer(register, register.conj())), dims)


def matrix_exponential(m):
    """``exp(M)`` by scaling and squaring with a Padé approximant.

    Accepts an :class:`Operator` (returns one), a bare square array or a
    stack of square arrays along the leading axes.
    """
    if isinstance(m, Operator):
        return Operator(matrix_exponential(m.matrix), m.dims)
    m = np.asarray(m)
    if m.ndim < 2 or m.shape[-1] != m.shape[-2]:
        raise DimensionError(f"matrix exponential needs square matrices, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise NumericError("matrix exponential of a matrix with non-finite entries")
    return scipy.linalg.expm(m)


class LinearHamiltonian:
    """``H(t) = sum_k f_k(t) M_k`` with constant matrices and scalar coefficient functions.

    Coefficient functions must accept arrays of times. Calling the object
    returns the :class:`Operator` at one time, so it can be used wherever a
    plain ``t -> Operator`` provider is expected.
    """

    def __init__(self, terms, dims):
        self.terms = [(np.asarray(m.matrix if isinstance(m, Operator) else m, dtype=complex), f) for m, f in terms]
        self.dims = tuple(dims)

    def coefficients(self, times) -> np.ndarray:
        times = np.asarray(times, dtype=float)
        return np.stack([np.broadcast_to(f(times), times.shape) for _, f in self.terms], axis=-1)

    def pattern(self) -> np.ndarray:
        return np.any([np.abs(m) > 0 for m, _ in self.terms], axis=0)

    def __call__(self, t) -> Operator:
        c = self.coefficients(np.array([t]))[0]
        return Operator(sum(ck * m for ck, (m, _) in zip(c, self.terms)), self.dims)



def displacement_operator(alpha: complex, cutoff: int, strict: bool = True) -> Operator:
    """Truncated ``D(alpha) = exp(alpha a^dag - alpha^* a)`` on the cavity alone."""
    _check_tail(alpha, cutoff, strict)
    a = ladder_operator(cutoff).matrix
    gen = alpha * a.conj().T - np.conj(alpha) * a
    return Operator(matrix_exponential(gen), (cutoff,))


def partial_trace(state: QuantumState, keep) -> QuantumState:
    """Reduced density matrix on the subsystems ``keep`` (indices into ``state.dims``)."""
    dims = state.dims
    keep = sorted(set(int(k) for k in np.atleast_1d(keep)))
    if not keep or any(k < 0 or k >= len(dims) for k in keep):
        raise AddressingError(f"invalid subsystems {keep} for dims {dims}")
    traced = [k for k in range(len(dims)) if k not in keep]
    kdims = tuple(dims[k] for k in keep)
    kdim = math.prod(kdims)
    if state.is_pure:
        psi = state.data.reshape(dims)
        psi = np.transpose(psi, keep + traced).reshape(kdim, -1)
        rho = psi @ psi.conj().T
    else:
        n = len(dims)
        rho = state.data.reshape(dims + dims)
        perm = keep + traced + [n + k for k in keep] + [n + k for k in traced]
        rest = state.dim // kdim
        rho = np.transpose(rho, perm).reshape(kdim, rest, kdim, rest)
        rho = np.einsum("ajbj->ab", rho)
    return QuantumState(rho, kdims)


def reduce_to_qubits(state: QuantumState) -> QuantumState:
    """Trace out the cavity (subsystem 0)."""
    return partial_trace(state, range(1, len(state.dims)))
