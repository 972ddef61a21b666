"""Dense operators for small spin chains.

Site ordering convention: site 1 is the leftmost (most significant) Kronecker
factor, so ``pauli_string(2, {1: "x"}) == kron(sigma_x, I)``.  The basis is the
one in which sigma^z is diagonal and sigma^x is real.
"""
from __future__ import annotations

import threading
from dataclasses import dataclass
from typing import Mapping

import numpy as np

MAX_SITES = 12
HERMITIAN_TOL = 1e-12
PSD_TOL = 1e-10
SPECTRAL_TOL = 1e-10

PAULI = {
    "i": np.eye(2, dtype=complex),
    "x": np.array([[0, 1], [1, 0]], dtype=complex),
    "y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "z": np.array([[1, 0], [0, -1]], dtype=complex),
}


def hermiticity_residual(matrix) -> float:
    m = np.asarray(matrix)
    scale = np.max(np.abs(m)) if m.size else 0.0
    if scale == 0.0:
        return 0.0
    return float(np.max(np.abs(m - m.conj().T)) / scale)


class QuantumOperator:
    """Immutable dense square operator on ``N`` spins (``dim == 2**N``).

    With ``hermitian=True`` the Hermiticity is verified on construction.  The
    eigendecomposition of a Hermitian operator is computed lazily and cached
    on the instance (see :meth:`spectrum`).
    """

    __array_priority__ = 10

    def __init__(self, matrix, hermitian: bool = False):
        m = np.array(matrix, dtype=complex)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError(f"operator must be a square matrix, got shape {m.shape}")
        dim = m.shape[0]
        if dim < 1 or dim & (dim - 1) or dim > 2**MAX_SITES:
            raise ValueError(f"dimension {dim} is not a power of two <= {2**MAX_SITES}")
        if hermitian and hermiticity_residual(m) > HERMITIAN_TOL:
            raise ValueError("operator flagged Hermitian but M != M^dagger")
        m.setflags(write=False)
        self._matrix = m
        self.hermitian = hermitian
        self._spectrum: SpectralCache | None = None
        self._lock = threading.Lock()

    @property
    def matrix(self) -> np.ndarray:
        return self._matrix

    @property
    def dim(self) -> int:
        return self._matrix.shape[0]

    @property
    def n_sites(self) -> int:
        return self.dim.bit_length() - 1

    def __array__(self, dtype=None, copy=None):
        if dtype is None:
            return self._matrix
        return self._matrix.astype(dtype)

    def __repr__(self):
        return f"{type(self).__name__}(dim={self.dim}, hermitian={self.hermitian})"

    def __eq__(self, other):
        if not isinstance(other, QuantumOperator):
            return NotImplemented
        return np.array_equal(self._matrix, other._matrix)

    __hash__ = object.__hash__

    def spectrum(self) -> SpectralCache:
        """Eigendecomposition, computed on first use and reused afterwards."""
        cache = self._spectrum
        if cache is None:
            with self._lock:
                if self._spectrum is None:
                    self._spectrum = SpectralCache.from_hermitian(self._matrix)
                cache = self._spectrum
        return cache


class DensityMatrix(QuantumOperator):
    """A validated quantum state: Hermitian, unit trace, positive semidefinite."""

    def __init__(self, matrix):
        super().__init__(matrix, hermitian=True)
        tr = np.trace(self.matrix)
        if abs(tr - 1.0) > HERMITIAN_TOL:
            raise ValueError(f"density matrix trace is {tr}, expected 1")
        lowest = np.linalg.eigvalsh(self.matrix)[0]
        if lowest < -PSD_TOL:
            raise ValueError(f"density matrix has negative eigenvalue {lowest}")


@dataclass(frozen=True)
class SpectralCache:
    """Eigen-decomposition ``H = V diag(E) V^dagger`` of a Hermitian operator."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    @classmethod
    def from_hermitian(cls, matrix) -> SpectralCache:
        m = np.asarray(matrix, dtype=complex)
        if hermiticity_residual(m) > HERMITIAN_TOL:
            raise ValueError("spectral decomposition requires a Hermitian operator")
        evals, evecs = np.linalg.eigh(m)
        evals.setflags(write=False)
        evecs.setflags(write=False)
        cache = cls(evals, evecs)
        radius = max(np.max(np.abs(evals)), 1.0)
        if np.max(np.abs(cache.reconstruct() - m)) > SPECTRAL_TOL * radius:
            raise np.linalg.LinAlgError("eigendecomposition failed to reconstruct source")
        eye = np.eye(m.shape[0])
        if np.max(np.abs(evecs @ evecs.conj().T - eye)) > SPECTRAL_TOL:
            raise np.linalg.LinAlgError("eigenvectors are not unitary")
        return cache

    @property
    def dim(self) -> int:
        return self.eigenvalues.shape[0]

    def reconstruct(self) -> np.ndarray:
        v = self.eigenvectors
        return (v * self.eigenvalues) @ v.conj().T

    def to_eigenbasis(self, a) -> np.ndarray:
        v = self.eigenvectors
        return v.conj().T @ np.asarray(a) @ v

    def from_eigenbasis(self, a) -> np.ndarray:
        v = self.eigenvectors
        return v @ np.asarray(a) @ v.conj().T

    def propagator(self, t: float) -> np.ndarray:
        """``exp(-i H t)``."""
        v = self.eigenvectors
        return (v * np.exp(-1j * self.eigenvalues * t)) @ v.conj().T

    def evolve_in_eigenbasis(self, a_eig: np.ndarray, t: float) -> np.ndarray:
        # (e^{iEt})_j a_jk (e^{-iEt})_k
        phase = np.exp(1j * self.eigenvalues * t)
        return phase[:, None] * a_eig * phase.conj()[None, :]


def as_matrix(op) -> np.ndarray:
    return np.asarray(op, dtype=complex)


def spectrum_of(h) -> SpectralCache:
    if isinstance(h, QuantumOperator):
        return h.spectrum()
    return SpectralCache.from_hermitian(h)


def _check_sites(n_sites: int) -> None:
    if not 1 <= n_sites <= MAX_SITES:
        raise ValueError(f"site count must be in 1..{MAX_SITES}, got {n_sites}")


def pauli_string(n_sites: int, factors: Mapping[int, str]) -> QuantumOperator:
    """Kronecker product of single-site Pauli matrices; identity on unlisted sites.

    ``factors`` maps 1-based site indices to one of ``"x", "y", "z", "i"``.
    """
    _check_sites(n_sites)
    for site, axis in factors.items():
        if not 1 <= site <= n_sites:
            raise ValueError(f"site {site} out of range 1..{n_sites}")
        if axis.lower() not in PAULI:
            raise ValueError(f"unknown Pauli axis {axis!r}")
    out = np.ones((1, 1), dtype=complex)
    for site in range(1, n_sites + 1):
        out = np.kron(out, PAULI[factors.get(site, "i").lower()])
    return QuantumOperator(out, hermitian=True)


def build_tfim(
    n_sites: int, coupling: float, periodic: bool = True, field: float = 1.0
) -> QuantumOperator:
    """Transverse-field Ising chain ``H = -field sum_j Z_j - coupling sum_j X_j X_{j+1}``.

    With ``periodic`` the bond (N, 1) is included; otherwise the chain is open.
    """
    if n_sites < 2:
        raise ValueError("the Ising chain needs at least two sites")
    _check_sites(n_sites)
    dim = 2**n_sites
    h = np.zeros((dim, dim), dtype=complex)
    for j in range(1, n_sites + 1):
        h -= field * pauli_string(n_sites, {j: "z"}).matrix
    last = n_sites if periodic else n_sites - 1
    for j in range(1, last + 1):
        # N=2 periodic counts the (1, 2) bond twice, as the lattice sum does
        h -= coupling * pauli_string(n_sites, {j: "x", j % n_sites + 1: "x"}).matrix
    return QuantumOperator(h, hermitian=True)


def heisenberg_evolve(b, h, t: float) -> QuantumOperator:
    """Heisenberg-picture operator ``exp(iHt) B exp(-iHt)``."""
    b_mat = as_matrix(b)
    if t == 0:
        return QuantumOperator(b_mat, hermitian=_is_hermitian_flag(b))
    spec = spectrum_of(h)
    u = spec.propagator(t)
    return QuantumOperator(u.conj().T @ b_mat @ u, hermitian=_is_hermitian_flag(b))


def _is_hermitian_flag(b) -> bool:
    if isinstance(b, QuantumOperator):
        return b.hermitian
    return False


def thermal_state(h, beta: float = 1.0) -> DensityMatrix:
    """Gibbs state ``exp(-beta H) / Z``."""
    if beta < 0:
        raise ValueError(f"inverse temperature must be >= 0, got {beta}")
    spec = spectrum_of(h)
    e = spec.eigenvalues
    weights = np.exp(-beta * (e - e.min()))
    weights /= weights.sum()
    v = spec.eigenvectors
    rho = (v * weights) @ v.conj().T
    rho = 0.5 * (rho + rho.conj().T)
    rho /= np.trace(rho).real
    return DensityMatrix(rho)


def maximally_mixed(n_sites: int) -> DensityMatrix:
    _check_sites(n_sites)
    dim = 2**n_sites
    return DensityMatrix(np.eye(dim) / dim)


def product_state_C(n_sites: int) -> DensityMatrix:
    """Product of ``(X + I)/2`` on odd sites and ``I/2`` on even sites."""
    if n_sites % 2:
        raise ValueError(f"product_state_C needs an even site count, got {n_sites}")
    _check_sites(n_sites)
    odd = (PAULI["x"] + PAULI["i"]) / 2
    even = PAULI["i"] / 2
    rho = np.ones((1, 1), dtype=complex)
    for site in range(1, n_sites + 1):
        rho = np.kron(rho, odd if site % 2 else even)
    return DensityMatrix(rho)


def collective_z(n_sites: int) -> QuantumOperator:
    """Normalized collective magnetization ``(1/sqrt(N)) sum_j Z_j``."""
    _check_sites(n_sites)
    dim = 2**n_sites
    # Z_j is diagonal: accumulate the diagonal directly
    diag = np.zeros(dim)
    idx = np.arange(dim)
    for site in range(1, n_sites + 1):
        bit = (idx >> (n_sites - site)) & 1
        diag += 1 - 2 * bit
    return QuantumOperator(np.diag(diag / np.sqrt(n_sites)), hermitian=True)
