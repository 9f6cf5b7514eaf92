"""Kicked-top Floquet map ``U = U_z U_y U_x``.

Each factor is ``exp[-i(alpha J + k/(2J) J^2)]`` about one axis, built
spectrally from the cached eigendecomposition of that axis' spin operator.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .operators import CollectiveOps, DensityState, SpinQuantum, SpinState, make_ops

DEFAULT_ALPHA = (1.7, 1.0, 0.8)
DEFAULT_TWIST_RATIOS = (0.85, 0.9, 1.0)


@dataclass(frozen=True)
class KickedTopParams:
    """Rotation angles ``alpha`` and twisting strengths ``kappa_twist`` per axis (x, y, z)."""

    alpha: tuple[float, float, float] = DEFAULT_ALPHA
    kappa_twist: tuple[float, float, float] = (0.0, 0.0, 0.0)
    k: float | None = None

    def __post_init__(self):
        alpha = tuple(float(a) for a in self.alpha)
        kappa = tuple(float(c) for c in self.kappa_twist)
        if len(alpha) != 3 or len(kappa) != 3:
            raise ValueError("alpha and kappa_twist need exactly three components")
        if not all(np.isfinite(alpha + kappa)):
            raise ValueError("kicked-top parameters must be finite")
        object.__setattr__(self, "alpha", alpha)
        object.__setattr__(self, "kappa_twist", kappa)

    @classmethod
    def from_k(cls, k: float, alpha=DEFAULT_ALPHA) -> "KickedTopParams":
        """Default parametrisation: twists ``(0.85k, 0.9k, k)``."""
        k = float(k)
        return cls(alpha=tuple(alpha), kappa_twist=tuple(r * k for r in DEFAULT_TWIST_RATIOS), k=k)


@dataclass(frozen=True, eq=False)
class FloquetPropagator:
    matrix: np.ndarray
    params: KickedTopParams
    quantum: SpinQuantum


def axis_factor(ops: CollectiveOps, axis: str, alpha: float, kappa: float) -> np.ndarray:
    """``exp[-i(alpha J_axis + kappa/(2J) J_axis^2)]`` via the spectral theorem."""
    J = ops.quantum.J
    lam, vecs = ops.eigen(axis)
    phases = np.exp(-1j * (alpha * lam + kappa / (2 * J) * lam**2))
    if axis == "z":
        return np.diag(phases)
    return (vecs * phases) @ vecs.conj().T


@lru_cache(maxsize=32)
def build_propagator(quantum: SpinQuantum, params: KickedTopParams) -> FloquetPropagator:
    ops = make_ops(quantum)
    ux, uy, uz = (
        axis_factor(ops, axis, a, c) for axis, a, c in zip("xyz", params.alpha, params.kappa_twist)
    )
    # U_z is diagonal: scale rows instead of a full product
    u = np.diag(uz)[:, None] * (uy @ ux)
    u.setflags(write=False)
    return FloquetPropagator(u, params, quantum)


def _check_dims(prop: FloquetPropagator, quantum: SpinQuantum):
    if prop.quantum.d != quantum.d:
        raise ValueError(f"propagator dimension {prop.quantum.d} does not match state dimension {quantum.d}")


def apply(prop: FloquetPropagator, state: SpinState) -> SpinState:
    _check_dims(prop, state.quantum)
    return SpinState(prop.matrix @ state.amplitudes, state.quantum)


def apply_density(prop: FloquetPropagator, rho: DensityState) -> DensityState:
    _check_dims(prop, rho.quantum)
    u = prop.matrix
    out = u @ rho.matrix @ u.conj().T
    out = 0.5 * (out + out.conj().T)
    return DensityState(out, rho.quantum)
