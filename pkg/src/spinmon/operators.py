"""Collective spin operators and reference states in the Dicke basis.

Basis convention (fixed project-wide): index ``i`` of every amplitude vector
or matrix corresponds to ``m_z = J - i``, i.e. magnetic quantum numbers run
from ``+J`` down to ``-J``.  The north-pole coherent state is therefore the
first basis vector.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.linalg import eigh_tridiagonal
from scipy.special import gammaln, xlogy


@dataclass(frozen=True)
class SpinQuantum:
    """Particle count ``N`` of a permutationally symmetric spin-1/2 ensemble."""

    N: int

    def __post_init__(self):
        if isinstance(self.N, bool) or int(self.N) != self.N or self.N < 1:
            raise ValueError(f"particle number must be a positive integer, got {self.N!r}")
        object.__setattr__(self, "N", int(self.N))

    @property
    def J(self) -> float:
        return self.N / 2

    @property
    def d(self) -> int:
        return self.N + 1

    @property
    def m_values(self) -> np.ndarray:
        """Magnetic quantum numbers in basis order (+J ... -J)."""
        return self.J - np.arange(self.d, dtype=float)

    def index_of(self, m: float) -> int:
        i = self.J - m
        if abs(i - round(i)) > 1e-9 or not 0 <= round(i) < self.d:
            raise ValueError(f"m={m} is not a valid magnetic quantum number for J={self.J}")
        return int(round(i))


@dataclass(frozen=True, eq=False)
class CollectiveOps:
    """Dense and banded representations of J_x, J_y, J_z for fixed J.

    ``raising[i]`` is the matrix element <m+1|J_+|m> for ``m = m_values[i+1]``;
    in descending order J_+ lives on the first superdiagonal.
    """

    quantum: SpinQuantum
    jz: np.ndarray
    raising: np.ndarray
    jx: np.ndarray
    jy: np.ndarray
    jx_eigen: tuple[np.ndarray, np.ndarray]
    jy_eigen: tuple[np.ndarray, np.ndarray]
    ladder_coeffs: tuple[np.ndarray, np.ndarray] = field(repr=False)

    def matrix(self, axis: str) -> np.ndarray:
        if axis == "x":
            return self.jx
        if axis == "y":
            return self.jy
        if axis == "z":
            return np.diag(self.jz).astype(complex)
        raise ValueError(f"unknown axis {axis!r}")

    def eigen(self, axis: str) -> tuple[np.ndarray, np.ndarray]:
        if axis == "x":
            return self.jx_eigen
        if axis == "y":
            return self.jy_eigen
        if axis == "z":
            return self.jz, np.eye(self.quantum.d, dtype=complex)
        raise ValueError(f"unknown axis {axis!r}")


@dataclass(eq=False)
class SpinState:
    """Pure state as a complex amplitude vector over the Dicke basis."""

    amplitudes: np.ndarray
    quantum: SpinQuantum

    def __post_init__(self):
        self.amplitudes = np.asarray(self.amplitudes, dtype=complex)
        if self.amplitudes.shape != (self.quantum.d,):
            raise ValueError(
                f"amplitude vector has shape {self.amplitudes.shape}, expected ({self.quantum.d},)"
            )

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def populations(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2

    def to_density(self) -> "DensityState":
        return DensityState(np.outer(self.amplitudes, self.amplitudes.conj()), self.quantum)


@dataclass(eq=False)
class DensityState:
    """Mixed state as a Hermitian ``d x d`` matrix over the Dicke basis."""

    matrix: np.ndarray
    quantum: SpinQuantum

    def __post_init__(self):
        self.matrix = np.asarray(self.matrix, dtype=complex)
        d = self.quantum.d
        if self.matrix.shape != (d, d):
            raise ValueError(f"density matrix has shape {self.matrix.shape}, expected ({d}, {d})")

    @property
    def trace(self) -> float:
        return float(np.trace(self.matrix).real)

    def populations(self) -> np.ndarray:
        return np.clip(np.diag(self.matrix).real, 0.0, None)

    @classmethod
    def maximally_mixed(cls, quantum: SpinQuantum) -> "DensityState":
        return cls(np.eye(quantum.d, dtype=complex) / quantum.d, quantum)


def ladder_coefficients(quantum: SpinQuantum) -> tuple[np.ndarray, np.ndarray]:
    """Return ``(C_plus, C_minus)`` in basis order, with
    ``C_plus**2 = (J - m)(J + m + 1)`` and ``C_minus**2 = (J + m)(J - m + 1)``."""
    J, m = quantum.J, quantum.m_values
    c_plus = np.sqrt(np.clip((J - m) * (J + m + 1), 0.0, None))
    c_minus = np.sqrt(np.clip((J + m) * (J - m + 1), 0.0, None))
    return c_plus, c_minus


@lru_cache(maxsize=64)
def make_ops(quantum: SpinQuantum) -> CollectiveOps:
    """Build collective operators for ``quantum``; cached per particle number."""
    if not isinstance(quantum, SpinQuantum):
        quantum = SpinQuantum(quantum)
    d, m = quantum.d, quantum.m_values
    c_plus, c_minus = ladder_coefficients(quantum)
    # <m+1|J+|m> for m = m_values[1:], sitting at (i, i+1)
    raising = c_plus[1:].copy()

    jplus = np.diag(raising, 1).astype(complex)
    jx = 0.5 * (jplus + jplus.conj().T)
    jy = -0.5j * (jplus - jplus.conj().T)

    if d == 1:
        evals, evecs = np.zeros(1), np.ones((1, 1))
    else:
        evals, evecs = eigh_tridiagonal(np.zeros(d), 0.5 * raising)
    evecs = evecs.astype(complex)
    # J_y = R J_x R^dagger with R = exp(-i pi/2 J_z)
    phase = np.exp(-0.5j * np.pi * m)
    jy_vecs = phase[:, None] * evecs

    for arr in (m, raising, jx, jy, evals, evecs, jy_vecs, c_plus, c_minus):
        arr.setflags(write=False)
    return CollectiveOps(
        quantum=quantum,
        jz=m,
        raising=raising,
        jx=jx,
        jy=jy,
        jx_eigen=(evals, evecs),
        jy_eigen=(evals, jy_vecs),
        ladder_coeffs=(c_plus, c_minus),
    )


def spin_coherent(quantum: SpinQuantum, theta: float, phi: float) -> SpinState:
    """Coherent state ``exp(-i phi J_z) exp(-i theta J_y) |J, J>``.

    Amplitudes are evaluated in log space so large ``N`` does not overflow
    the binomial prefactor.
    """
    theta = float(theta) % (2 * np.pi)
    phi = float(phi) % (2 * np.pi)
    N, m = quantum.N, quantum.m_values
    up = (quantum.J + m).round()
    down = N - up
    a, b = np.cos(theta / 2), np.sin(theta / 2)
    log_binom = gammaln(N + 1) - gammaln(up + 1) - gammaln(down + 1)
    log_amp = 0.5 * log_binom + xlogy(up, abs(a)) + xlogy(down, abs(b))
    sign = np.where((a < 0) & (up % 2 == 1), -1.0, 1.0) * np.where((b < 0) & (down % 2 == 1), -1.0, 1.0)
    amps = sign * np.exp(log_amp) * np.exp(-1j * m * phi)
    amps /= np.linalg.norm(amps)
    return SpinState(amps, quantum)


def dicke_state(quantum: SpinQuantum, m: float) -> SpinState:
    amps = np.zeros(quantum.d, dtype=complex)
    amps[quantum.index_of(m)] = 1.0
    return SpinState(amps, quantum)


def haar_random_state(quantum: SpinQuantum, rng: np.random.Generator) -> SpinState:
    """Draw a state uniformly from the unit sphere of the symmetric subspace."""
    z = rng.standard_normal(quantum.d) + 1j * rng.standard_normal(quantum.d)
    return SpinState(z / np.linalg.norm(z), quantum)


def expectation(state: SpinState, op: np.ndarray) -> complex:
    psi = state.amplitudes
    return complex(np.vdot(psi, op @ psi))


def magnetization(amplitudes: np.ndarray, ops: CollectiveOps) -> tuple[float, float, float]:
    """First moments ``(<J_x>, <J_y>, <J_z>)`` of a pure state in O(d)."""
    psi = amplitudes
    pops = psi.real**2 + psi.imag**2
    jz = float(pops @ ops.jz)
    # <J+> = sum_i conj(psi_i) raising_i psi_{i+1}
    jp = complex(np.vdot(psi[:-1], ops.raising * psi[1:])) if psi.size > 1 else 0j
    return jp.real, jp.imag, jz


def magnetization_density(rho: np.ndarray, ops: CollectiveOps) -> tuple[float, float, float]:
    """``(tr rho J_x, tr rho J_y, tr rho J_z)`` from the diagonal and first off-diagonal."""
    jz = float(np.diag(rho).real @ ops.jz)
    # tr(rho J+) = sum_i raising_i rho[i+1, i]
    jp = complex(np.sum(ops.raising * np.diagonal(rho, -1))) if rho.shape[0] > 1 else 0j
    return jp.real, jp.imag, jz
