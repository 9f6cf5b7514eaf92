"""One-shot Haar model of the fully chaotic regime.

A Haar-random state hit by a single Kraus operator ``K_m0`` has, to the
ratio-of-expectations approximation,

    E[<J_a>^2] ~ (tr(K^2 J_a)^2 + tr(K^2 J_a K^2 J_a)) / (tr(K^2)^2 + tr(K^4)).

The traces are evaluated in the large-J continuum limit, where ``m`` is
integrated over ``[-J, J]`` against ``g(m) = Normal(m; m0, sigma^2)``.  All
functions broadcast over array-valued ``m0``.

Accuracy of the continuum forms against exact finite-J sums is O(1/J) in the
transverse trace (it replaces ``J + 1`` by ``J``), O(g(+-J)) from the
truncation at ``+-J``, and O(exp(-pi^2 sigma^2)) from treating the integer
lattice as a continuum; below ``sigma ~ 0.5`` the last term dominates.
For ``sigma <~ 1`` and ``m0`` within a few ``sigma`` of ``+-J`` the transverse
integrand itself (``g(m-1) g(m) (J^2 - m^2)``, vanishing at ``m = J``) misses
the edge pair of the ladder and the error is O(1) there.  The outcome
average weights that region by ``~sigma/J``.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.special import erfc, roots_legendre

SQRT2 = np.sqrt(2.0)
SQRTPI = np.sqrt(np.pi)


@dataclass(frozen=True)
class HaarModelInput:
    J: float
    sigma: float
    m0: float | np.ndarray = 0.0

    def __post_init__(self):
        if not self.J >= 1:
            raise ValueError(f"J must be >= 1, got {self.J}")
        if not (np.isfinite(self.sigma) and self.sigma > 0):
            raise ValueError(f"sigma must be positive and finite, got {self.sigma}")


@dataclass(frozen=True)
class HaarTraces:
    tr_k2: float | np.ndarray
    tr_k4: float | np.ndarray
    tr_k2jz: float | np.ndarray
    tr_k2jz_k2jz: float | np.ndarray
    tr_k2jx_k2jx: float | np.ndarray

    @property
    def tr_k2jy_k2jy(self):
        return self.tr_k2jx_k2jx


def erf_sum(a, b):
    """``erf(a) + erf(b)`` without cancellation when either argument is negative.

    Callers guarantee ``a + b > 0``.
    """
    a, b = np.asarray(a, dtype=float), np.asarray(b, dtype=float)
    both = 2.0 - erfc(a) - erfc(b)
    neg_a = erfc(-a) - erfc(b)
    neg_b = erfc(-b) - erfc(a)
    return np.where(a < 0, neg_a, np.where(b < 0, neg_b, both))


def closed_form_traces(inp: HaarModelInput, jx_form: str = "integral") -> HaarTraces:
    """Continuum traces of ``K^2``, ``K^4``, ``K^2 J_z``, ``K^2 J_z K^2 J_z``, ``K^2 J_x K^2 J_x``.

    ``jx_form="integral"`` evaluates ``(1/2) int_{-J}^{J} g(m-1) g(m) (J^2 - m^2) dm``
    exactly.  ``jx_form="printed"`` keeps the widely quoted closed form,
    whose boundary exponent lacks a ``-1/(2 sigma^2)`` term; it grows like
    ``exp(1/(4 sigma^2))`` near ``m0 = +-J`` and is only usable for
    ``sigma >~ 0.5``.
    """
    J, s = float(inp.J), float(inp.sigma)
    m0 = np.asarray(inp.m0, dtype=float)
    s2 = s * s
    e_narrow = erf_sum((J - m0) / s, (J + m0) / s)

    tr_k2 = 0.5 * erf_sum((J - m0) / (SQRT2 * s), (J + m0) / (SQRT2 * s))
    tr_k4 = e_narrow / (4.0 * SQRTPI * s)
    tr_k2jz = (
        s / np.sqrt(2 * np.pi) * (np.exp(-((J + m0) ** 2) / (2 * s2)) - np.exp(-((J - m0) ** 2) / (2 * s2)))
        + m0 * tr_k2
    )
    tr_k2jz_k2jz = (
        ((m0 - J) * np.exp(-((J + m0) ** 2) / s2) - (m0 + J) * np.exp(-((J - m0) ** 2) / s2)) / (4 * np.pi)
        + (m0**2 + 0.5 * s2) * tr_k4
    )

    if jx_form == "integral":
        # g(m-1) g(m) is a Gaussian of variance s^2/2 centred at mu, damped by exp(-1/(4 s^2))
        mu = m0 + 0.5
        edge = (
            (J + mu) * np.exp(-((J - mu) ** 2 + 0.25) / s2)
            + (J - mu) * np.exp(-((J + mu) ** 2 + 0.25) / s2)
        ) / (8 * np.pi)
        bulk = (
            np.exp(-0.25 / s2) * (J * J - mu * mu - 0.5 * s2) / (8 * SQRTPI * s)
            * erf_sum((J - mu) / s, (J + mu) / s)
        )
        tr_k2jx_k2jx = edge + bulk
    elif jx_form == "printed":
        d_minus, d_plus = J - m0, J + m0
        edge = (
            (J + m0) * np.exp((d_minus - d_minus**2) / s2)
            + (J - m0) * np.exp((-d_plus - d_plus**2) / s2)
        ) / (8 * np.pi)
        bulk = (
            -np.exp(-0.25 / s2) / (32 * SQRTPI * s)
            * (-4 * J * J + 2 * s2 + (1 + 2 * m0) ** 2)
            * e_narrow
        )
        tr_k2jx_k2jx = edge + bulk
    else:
        raise ValueError(f"unknown jx_form {jx_form!r}")

    def out(x):
        return float(x) if np.ndim(x) == 0 else x

    return HaarTraces(out(tr_k2), out(tr_k4), out(tr_k2jz), out(tr_k2jz_k2jz), out(tr_k2jx_k2jx))


def _expectation_sq(tr: HaarTraces, axis: str):
    denom = tr.tr_k2**2 + tr.tr_k4
    if axis == "z":
        num = tr.tr_k2jz**2 + tr.tr_k2jz_k2jz
    elif axis in ("x", "y"):
        # tr(K^2 J_x) = tr(K^2 J_y) = 0: K^2 is diagonal, J_x and J_y are off-diagonal
        num = tr.tr_k2jx_k2jx
    else:
        raise ValueError(f"unknown axis {axis!r}")
    return num / denom


def haar_expectation_sq(inp: HaarModelInput, axis: str, jx_form: str = "integral"):
    """Haar-averaged ``<J_axis>^2`` after the Kraus update with outcome ``m0``."""
    val = _expectation_sq(closed_form_traces(inp, jx_form), axis)
    return float(val) if np.ndim(val) == 0 else val


@lru_cache(maxsize=8)
def _legendre(n: int) -> tuple[np.ndarray, np.ndarray]:
    return roots_legendre(n)


def _composite_nodes(J: float, sigma: float, n: int) -> tuple[np.ndarray, np.ndarray]:
    """Gauss-Legendre nodes on ``[-J-8s, J+8s]``, split into edge and bulk panels.

    The edge panels ``J +- 8s`` hold the erf steps of the outcome density.
    """
    lo, hi = -J - 8 * sigma, J + 8 * sigma
    if 8 * sigma < J:
        cuts = [lo, -J + 8 * sigma, J - 8 * sigma, hi]
    else:
        cuts = [lo, hi]
    x, w = _legendre(n)
    nodes, weights = [], []
    for a, b in zip(cuts[:-1], cuts[1:]):
        nodes.append(0.5 * (b - a) * x + 0.5 * (b + a))
        weights.append(0.5 * (b - a) * w)
    return np.concatenate(nodes), np.concatenate(weights)


def _outcome_average(J: float, sigma: float, n: int, jx_form: str) -> float:
    m0, w = _composite_nodes(J, sigma, n)
    tr = closed_form_traces(HaarModelInput(J, sigma, m0), jx_form)
    mag_sq = _expectation_sq(tr, "z") + 2.0 * _expectation_sq(tr, "x")
    # Haar-averaged outcome density is tr(K^2)/d; normalise on the quadrature grid
    p = tr.tr_k2
    return float(np.sum(w * p * mag_sq) / np.sum(w * p))


@dataclass(frozen=True)
class HaarCurve:
    J: float
    sigma: np.ndarray
    mean_qfi: np.ndarray
    mag_len_sq: np.ndarray
    rel_change: np.ndarray  # relative change on doubling the node count
    converged: np.ndarray

    @property
    def sigma_over_sqrtJ(self) -> np.ndarray:
        return self.sigma / np.sqrt(self.J)

    @property
    def mean_qfi_over_J2(self) -> np.ndarray:
        return self.mean_qfi / self.J**2


def haar_mean_qfi_curve(
    J: float, sigmas, nodes: int = 2048, rtol: float = 1e-6, jx_form: str = "integral"
) -> HaarCurve:
    """Mean QFI of the one-shot Haar model versus ``sigma``.

    ``E[|<J>|^2]`` is averaged over the outcome ``m0`` with weight
    ``tr(K_m0^2)``, using ``nodes`` Gauss-Legendre points per panel; the
    result is recomputed with twice as many nodes and flagged as not
    converged when the two differ by more than ``rtol``.
    """
    sigmas = np.atleast_1d(np.asarray(sigmas, dtype=float))
    if sigmas.size == 0:
        raise ValueError("sigma grid is empty")
    J = float(J)
    mags, changes = [], []
    for s in sigmas:
        coarse = _outcome_average(J, s, nodes, jx_form)
        fine = _outcome_average(J, s, 2 * nodes, jx_form)
        mags.append(fine)
        changes.append(abs(fine - coarse) / max(abs(fine), 1e-300))
    mags = np.array(mags)
    changes = np.array(changes)
    return HaarCurve(
        J=J,
        sigma=sigmas,
        mean_qfi=4.0 / 3.0 * (J * (J + 1) - mags),
        mag_len_sq=mags,
        rel_change=changes,
        converged=changes <= rtol,
    )
