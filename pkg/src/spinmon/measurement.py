"""Finite-resolution Gaussian measurement of J_z.

The Kraus operator for outcome ``m`` is diagonal in the Dicke basis,

    K_m = (2 pi sigma^2)^(-1/4) exp(-(J_z - m)^2 / (4 sigma^2)),

so the outcome density for a state with populations ``p(m_z)`` is the
Gaussian mixture ``sum_mz p(m_z) Normal(m; m_z, sigma^2)``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import integrate
from scipy.special import logsumexp

from .operators import DensityState, SpinQuantum, SpinState


class InvalidOutcome(ArithmeticError):
    """All Kraus weights vanished for the requested outcome."""


@dataclass(frozen=True)
class GaussianMeasurement:
    sigma: float
    quantum: SpinQuantum

    def __post_init__(self):
        sigma = float(self.sigma)
        if not np.isfinite(sigma) or sigma <= 0:
            raise ValueError(f"measurement resolution must be positive and finite, got {self.sigma!r}")
        object.__setattr__(self, "sigma", sigma)

    @property
    def strength(self) -> float:
        return 1.0 / self.sigma


@dataclass(frozen=True)
class MeasurementOutcome:
    m: float
    log_norm: float  # log P(m) at the sampled point


def kraus_weights(m_values: np.ndarray, m: float, sigma: float) -> np.ndarray:
    """Unnormalised diagonal of ``K_m``, rescaled so the largest entry is 1."""
    expo = -((m_values - m) ** 2) / (4 * sigma**2)
    w = np.exp(expo - expo.max())
    if not np.any(w > 0):
        raise InvalidOutcome(f"Kraus weights underflowed for m={m}, sigma={sigma}")
    return w


def log_outcome_density(populations: np.ndarray, m_values: np.ndarray, m: float, sigma: float) -> float:
    """``log P(m)`` for the Gaussian mixture with the given Born weights."""
    log_gauss = -((m - m_values) ** 2) / (2 * sigma**2) - 0.5 * np.log(2 * np.pi * sigma**2)
    with np.errstate(divide="ignore"):
        return float(logsumexp(log_gauss + np.log(populations)))


def draw_outcome(populations: np.ndarray, m_values: np.ndarray, sigma: float, rng: np.random.Generator) -> float:
    """Ancestral draw: pick ``m_z`` with Born weights, then add Gaussian readout noise.

    Consumes exactly one uniform and one standard normal from ``rng`` so
    pure and mixed trajectories driven by the same stream stay in lockstep.
    """
    cdf = np.cumsum(populations)
    u = rng.random() * cdf[-1]
    idx = min(int(np.searchsorted(cdf, u, side="right")), len(cdf) - 1)
    return float(m_values[idx] + sigma * rng.standard_normal())


def sample_outcome(meas: GaussianMeasurement, state: SpinState, rng: np.random.Generator) -> MeasurementOutcome:
    pops = state.populations()
    m_values = meas.quantum.m_values
    m = draw_outcome(pops, m_values, meas.sigma, rng)
    return MeasurementOutcome(m, log_outcome_density(pops / pops.sum(), m_values, m, meas.sigma))


def sample_outcome_density(
    meas: GaussianMeasurement, rho: DensityState, rng: np.random.Generator
) -> MeasurementOutcome:
    pops = rho.populations()
    m_values = meas.quantum.m_values
    m = draw_outcome(pops, m_values, meas.sigma, rng)
    return MeasurementOutcome(m, log_outcome_density(pops / pops.sum(), m_values, m, meas.sigma))


def posterior_update(meas: GaussianMeasurement, state: SpinState, m: float) -> SpinState:
    """Apply ``K_m`` and renormalise."""
    if not np.isfinite(m):
        raise InvalidOutcome(f"outcome must be finite, got {m}")
    psi = state.amplitudes * kraus_weights(meas.quantum.m_values, m, meas.sigma)
    norm = np.linalg.norm(psi)
    if norm == 0 or not np.isfinite(norm):
        raise InvalidOutcome(f"post-measurement state vanished for m={m}")
    return SpinState(psi / norm, state.quantum)


def posterior_update_density(meas: GaussianMeasurement, rho: DensityState, m: float) -> DensityState:
    if not np.isfinite(m):
        raise InvalidOutcome(f"outcome must be finite, got {m}")
    w = kraus_weights(meas.quantum.m_values, m, meas.sigma)
    out = w[:, None] * rho.matrix * w[None, :]
    tr = np.trace(out).real
    if tr <= 0 or not np.isfinite(tr):
        raise InvalidOutcome(f"post-measurement density matrix vanished for m={m}")
    out /= tr
    out = 0.5 * (out + out.conj().T)
    return DensityState(out, rho.quantum)


def povm_completeness_check(meas: GaussianMeasurement) -> float:
    """Largest deviation from 1 of the integrated POVM diagonal.

    Integrates ``K_m^2`` (a normalised Gaussian in ``m`` for each ``m_z``)
    over ``[-J - 8 sigma, J + 8 sigma]`` with adaptive quadrature.
    """
    J, sigma = meas.quantum.J, meas.sigma
    lo, hi = -J - 8 * sigma, J + 8 * sigma
    norm = 1.0 / np.sqrt(2 * np.pi * sigma**2)
    worst = 0.0
    for mz in meas.quantum.m_values:
        def density(m, mz=mz):
            return norm * np.exp(-((m - mz) ** 2) / (2 * sigma**2))

        # break at the peak and +-10 sigma so quad never misses a narrow Gaussian
        cuts = sorted({lo, hi, mz, *np.clip([mz - 10 * sigma, mz + 10 * sigma], lo, hi)})
        total = sum(
            integrate.quad(density, a, b, epsabs=1e-15, epsrel=1e-13, limit=200)[0]
            for a, b in zip(cuts[:-1], cuts[1:])
        )
        worst = max(worst, abs(total - 1.0))
    return worst
