"""Hybrid kicked-top / Gaussian-measurement trajectories and ensemble sweeps.

One step of the map is: apply the Floquet unitary, draw an outcome from the
post-unitary state, apply the Kraus update.  Observables are recorded on the
post-measurement state.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .kicked_top import KickedTopParams, build_propagator
from .measurement import draw_outcome, kraus_weights
from .observables import mean_qfi_value
from .operators import (
    SpinQuantum,
    magnetization,
    magnetization_density,
    make_ops,
    spin_coherent,
)

RANDOM_SCS = "random_scs"
FIXED_SCS = "fixed_scs"
MAXIMALLY_MIXED = "maximally_mixed"
PURE_STEPS_DEFAULT = 40


@dataclass(frozen=True)
class InitialCondition:
    kind: str = RANDOM_SCS
    theta: float = 0.0
    phi: float = 0.0

    def __post_init__(self):
        if self.kind not in (RANDOM_SCS, FIXED_SCS, MAXIMALLY_MIXED):
            raise ValueError(f"unknown initial condition {self.kind!r}")

    @property
    def is_mixed(self) -> bool:
        return self.kind == MAXIMALLY_MIXED


@dataclass(frozen=True)
class RunConfig:
    """One grid point: system, dynamics, measurement and ensemble settings.

    ``steps=None`` resolves to 40 for coherent-state starts and ``3N`` for
    the maximally mixed start.
    """

    quantum: SpinQuantum
    kt_params: KickedTopParams
    sigma: float
    steps: int | None = None
    n_trajectories: int = 50
    burn_in: int = 0
    seed: int = 0
    initial_condition: InitialCondition = field(default_factory=InitialCondition)

    def __post_init__(self):
        if not isinstance(self.quantum, SpinQuantum):
            object.__setattr__(self, "quantum", SpinQuantum(self.quantum))
        if self.steps is None:
            default = 3 * self.quantum.N if self.initial_condition.is_mixed else PURE_STEPS_DEFAULT
            object.__setattr__(self, "steps", default)
        if self.steps < 1:
            raise ValueError("steps must be >= 1")
        if not 0 <= self.burn_in < self.steps:
            raise ValueError("burn_in must satisfy 0 <= burn_in < steps")
        if self.n_trajectories < 1:
            raise ValueError("n_trajectories must be >= 1")
        if not (np.isfinite(self.sigma) and self.sigma > 0):
            raise ValueError("sigma must be positive and finite")

    @property
    def J(self) -> float:
        return self.quantum.J


@dataclass(eq=False)
class TrajectoryRecord:
    outcomes: np.ndarray
    qfi_series: np.ndarray
    time_avg: float
    purity_series: np.ndarray | None = None

    @property
    def observable(self) -> np.ndarray:
        return self.qfi_series if self.purity_series is None else self.purity_series


@dataclass(frozen=True)
class SweepRow:
    N: int
    J: float
    k: float | None
    sigma: float
    sigma_over_sqrtJ: float
    sigma_over_J: float
    mean: float
    sem: float
    n_trajectories: int
    steps: int
    seed: int
    observable: str
    error: str | None = None


@dataclass(eq=False)
class SweepResult:
    rows: list[SweepRow]

    def __eq__(self, other):
        if not isinstance(other, SweepResult):
            return NotImplemented
        return _rows_key(self.rows) == _rows_key(other.rows)

    @property
    def failed(self) -> list[SweepRow]:
        return [r for r in self.rows if r.error is not None]


def _rows_key(rows):
    # NaN-safe comparison: compare bit patterns of floats
    out = []
    for r in rows:
        out.append(tuple(np.float64(v).tobytes() if isinstance(v, float) else v for v in r.__dict__.values()))
    return out


def trajectory_rng(seed: int, trajectory_index: int, grid_index: int = 0) -> np.random.Generator:
    """Counter-based stream keyed by (master seed, grid index, trajectory index)."""
    ss = np.random.SeedSequence([int(seed), int(grid_index), int(trajectory_index)])
    return np.random.Generator(np.random.Philox(ss))


def _initial_angles(ic: InitialCondition, rng: np.random.Generator) -> tuple[float, float]:
    if ic.kind == FIXED_SCS:
        return ic.theta, ic.phi
    # uniform on the sphere
    cos_theta = rng.uniform(-1.0, 1.0)
    phi = rng.uniform(0.0, 2 * np.pi)
    return float(np.arccos(cos_theta)), float(phi)


def _time_average(series: np.ndarray, burn_in: int) -> float:
    tail = series[burn_in:]
    return math.fsum(tail.tolist()) / len(tail)


def run_pure_trajectory(config: RunConfig, trajectory_index: int, grid_index: int = 0) -> TrajectoryRecord:
    """Evolve one coherent-state trajectory and record the mean QFI per step."""
    ic = config.initial_condition
    if ic.is_mixed:
        raise ValueError("pure trajectories need a coherent-state initial condition")
    rng = trajectory_rng(config.seed, trajectory_index, grid_index)
    quantum = config.quantum
    ops = make_ops(quantum)
    u = build_propagator(quantum, config.kt_params).matrix
    m_values, sigma, J = quantum.m_values, config.sigma, quantum.J

    psi = spin_coherent(quantum, *_initial_angles(ic, rng)).amplitudes
    outcomes = np.empty(config.steps)
    qfi = np.empty(config.steps)
    for j in range(config.steps):
        psi = u @ psi
        pops = psi.real**2 + psi.imag**2
        m = draw_outcome(pops, m_values, sigma, rng)
        psi = psi * kraus_weights(m_values, m, sigma)
        psi /= np.linalg.norm(psi)
        outcomes[j] = m
        qfi[j] = mean_qfi_value(J, magnetization(psi, ops))
    return TrajectoryRecord(outcomes, qfi, _time_average(qfi, config.burn_in))


def run_mixed_trajectory(config: RunConfig, trajectory_index: int, grid_index: int = 0) -> TrajectoryRecord:
    """Evolve a density matrix under the same map, recording purity per step.

    A coherent-state initial condition is accepted too; it consumes the RNG
    stream exactly like :func:`run_pure_trajectory`, so both paths can be
    compared step by step.  Memory is O(d^2), practical up to N of a few
    thousand.
    """
    ic = config.initial_condition
    rng = trajectory_rng(config.seed, trajectory_index, grid_index)
    quantum = config.quantum
    ops = make_ops(quantum)
    u = build_propagator(quantum, config.kt_params).matrix
    uh = u.conj().T
    m_values, sigma, J, d = quantum.m_values, config.sigma, quantum.J, quantum.d

    if ic.is_mixed:
        rho = np.eye(d, dtype=complex) / d
    else:
        psi = spin_coherent(quantum, *_initial_angles(ic, rng)).amplitudes
        rho = np.outer(psi, psi.conj())

    outcomes = np.empty(config.steps)
    pur = np.empty(config.steps)
    qfi = np.empty(config.steps)
    for j in range(config.steps):
        rho = u @ rho @ uh
        pops = np.clip(np.diag(rho).real, 0.0, None)
        m = draw_outcome(pops, m_values, sigma, rng)
        w = kraus_weights(m_values, m, sigma)
        rho = w[:, None] * rho * w[None, :]
        rho /= np.trace(rho).real
        rho = 0.5 * (rho + rho.conj().T)
        outcomes[j] = m
        pur[j] = np.vdot(rho, rho).real
        qfi[j] = mean_qfi_value(J, magnetization_density(rho, ops))
    return TrajectoryRecord(outcomes, qfi, _time_average(pur, config.burn_in), purity_series=pur)


def run_trajectory(config: RunConfig, trajectory_index: int, grid_index: int = 0) -> TrajectoryRecord:
    runner = run_mixed_trajectory if config.initial_condition.is_mixed else run_pure_trajectory
    return runner(config, trajectory_index, grid_index)


def _run_point(config: RunConfig, grid_index: int) -> list[float]:
    return [run_trajectory(config, t, grid_index).time_avg for t in range(config.n_trajectories)]


def _summarise(config: RunConfig, values: list[float] | None, error: str | None) -> SweepRow:
    J = config.J
    n = config.n_trajectories
    if values is None:
        mean = sem = float("nan")
    else:
        mean = math.fsum(values) / n
        if n > 1:
            var = math.fsum((v - mean) ** 2 for v in values) / (n - 1)
            sem = math.sqrt(var / n)
        else:
            sem = 0.0
    return SweepRow(
        N=config.quantum.N,
        J=J,
        k=config.kt_params.k,
        sigma=config.sigma,
        sigma_over_sqrtJ=config.sigma / math.sqrt(J),
        sigma_over_J=config.sigma / J,
        mean=mean,
        sem=sem,
        n_trajectories=n,
        steps=config.steps,
        seed=config.seed,
        observable="purity" if config.initial_condition.is_mixed else "mean_qfi",
        error=error,
    )


def run_sweep(configs, threads: int | None = None) -> SweepResult:
    """Run every grid point's ensemble and aggregate mean and SEM of time averages.

    Results do not depend on ``threads``: every trajectory owns a stream keyed
    by its grid and trajectory index, and aggregation uses exact summation.
    A grid point that raises is kept as a row with ``error`` set.
    """
    configs = list(configs)
    if not configs:
        raise ValueError("sweep grid is empty")
    threads = threads or os.cpu_count() or 1
    results: list[tuple[list[float] | None, str | None]] = []
    if threads == 1 or len(configs) == 1 and configs[0].n_trajectories == 1:
        for g, cfg in enumerate(configs):
            try:
                results.append((_run_point(cfg, g), None))
            except Exception as exc:  # recorded per grid point, not fatal
                results.append((None, f"{type(exc).__name__}: {exc}"))
    else:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            futures = [pool.submit(_run_point, cfg, g) for g, cfg in enumerate(configs)]
            for fut in futures:
                try:
                    results.append((fut.result(), None))
                except Exception as exc:
                    results.append((None, f"{type(exc).__name__}: {exc}"))
    return SweepResult([_summarise(cfg, vals, err) for cfg, (vals, err) in zip(configs, results)])


def rescaled_grid(
    sizes,
    ks,
    sigma_over_sqrtJ,
    *,
    steps: int | None = None,
    n_trajectories: int = 50,
    burn_in: int = 0,
    seed: int = 0,
    initial_condition: InitialCondition | None = None,
) -> list[RunConfig]:
    """Grid where ``sigma = x * sqrt(J)`` per size, so rescaled values align exactly."""
    ic = initial_condition or InitialCondition()
    out = []
    for k in ks:
        params = KickedTopParams.from_k(k)
        for x in sigma_over_sqrtJ:
            for n in sizes:
                q = SpinQuantum(n)
                out.append(RunConfig(q, params, float(x) * math.sqrt(q.J), steps, n_trajectories,
                                     burn_in, seed, ic))
    return out


def raw_sigma_grid(sizes, ks, sigmas, **kwargs) -> list[RunConfig]:
    """Grid with the same unscaled ``sigma`` values for every size."""
    ic = kwargs.pop("initial_condition", None) or InitialCondition()
    steps = kwargs.pop("steps", None)
    out = []
    for k in ks:
        params = KickedTopParams.from_k(k)
        for s in sigmas:
            for n in sizes:
                out.append(RunConfig(SpinQuantum(n), params, float(s), steps, initial_condition=ic, **kwargs))
    return out
