"""Order parameters: axis QFI, mean QFI, purity and reference values.

In the symmetric subspace ``J_x^2 + J_y^2 + J_z^2 = J(J+1)``, so the QFI
averaged over three orthogonal axes only needs first moments:

    mean_qfi = (4/3) [J(J+1) - |<J>|^2].
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .operators import (
    CollectiveOps,
    DensityState,
    SpinQuantum,
    SpinState,
    magnetization,
    magnetization_density,
)


@dataclass(frozen=True)
class QfiSummary:
    mean_qfi: float
    mag_len_sq: float
    per_axis: tuple[float, float, float] | None = None

    @classmethod
    def from_moments(cls, J: float, moments, per_axis=None) -> "QfiSummary":
        mag = float(sum(v * v for v in moments))
        return cls(4.0 / 3.0 * (J * (J + 1) - mag), mag, per_axis)


def mean_qfi_value(J: float, moments) -> float:
    jx, jy, jz = moments
    return 4.0 / 3.0 * (J * (J + 1) - (jx * jx + jy * jy + jz * jz))


def qfi_axis(state: SpinState, ops: CollectiveOps, axis: str) -> float:
    """``4 Var(J_axis)`` for a pure state."""
    op = ops.matrix(axis)
    psi = state.amplitudes
    v = op @ psi
    first = np.vdot(psi, v).real
    second = np.vdot(v, v).real
    return float(max(4.0 * (second - first**2), 0.0))


def mean_qfi(state: SpinState, ops: CollectiveOps, per_axis: bool = False) -> QfiSummary:
    axes = tuple(qfi_axis(state, ops, a) for a in "xyz") if per_axis else None
    return QfiSummary.from_moments(ops.quantum.J, magnetization(state.amplitudes, ops), axes)


def mean_qfi_density(rho: DensityState, ops: CollectiveOps) -> QfiSummary:
    """Magnetization-length diagnostic for mixed states.

    Applies the pure-state reduced formula to ``tr(rho J_a)``; this is not
    the quantum Fisher information of a mixed state.
    """
    return QfiSummary.from_moments(ops.quantum.J, magnetization_density(rho.matrix, ops))


def purity(rho: DensityState) -> float:
    r = rho.matrix
    return float(np.vdot(r, r).real)


def reference_values(quantum: SpinQuantum, r: float = 0.0) -> dict[str, float]:
    """Mean QFI of the four reference state families at this ``J``.

    ``r`` is the squeezing parameter of the Gaussian (squeezed) family.
    """
    r = float(r)
    if not np.isfinite(r):
        raise ValueError("squeezing parameter must be finite")
    J = quantum.J
    return {
        "SCS": 4.0 / 3.0 * J,
        "squeezed": 4.0 / 3.0 * J * np.cosh(r),
        "Haar": 4.0 / 3.0 * (J**2 + J / 2),
        "Dicke_avg": 8.0 / 9.0 * (J**2 + J),
    }
