"""Time-domain integration of the single-mode quantum Langevin equation.

The intracavity field obeys

    da/dt = −(κ/2 + iΔ)a − 2igβ·a† + √κ_e·a_in + √κ_i·a_in,i

Splitting into X = a† + a and Y = i(a† − a) gives a linear two-dimensional Ornstein-Uhlenbeck
process dS = A·S dt + √κ_e dW_e + √κ_i dW_i, where every port contributes white noise of unit
two-sided quadrature PSD. The output port obeys X_out = √κ_e·X − X_in with the same external
increments that drove the cavity.

Design Philosophy:
- Exact one-step update by default: state propagator, process noise and its correlation with
  the external-port increments all come from matrix exponentials, so results carry no dt bias
- Euler-Maruyama is kept for cross-validation
- The cavity starts in its stationary state; a configurable transient is still discarded
"""

from __future__ import annotations

import math
import time
from typing import Callable, Optional

import numpy as np
import structlog
from numpy.typing import NDArray
from scipy import linalg, signal
from scipy.integrate import solve_ivp

from sqzlab.errors import DivergenceError, StabilityError
from sqzlab.models import CavityParams, Integrator, PumpState, QuadratureTrace, SimConfig
from sqzlab.observability.metrics import SIMULATION_SECONDS

logger = structlog.get_logger(__name__)

# Largest step as a fraction of the cavity period 2π/κ.
MAX_STEP_FRACTION = 0.01
# Minimum number of Welch segments a run must be able to fill.
MIN_SEGMENTS = 100
# Eigenvector condition number above which the propagator is iterated directly.
_MAX_EIGEN_CONDITION = 1e8


def drift_matrix(cavity: CavityParams, pump: PumpState) -> NDArray[np.float64]:
    """2×2 drift of (X, Y) for detuning Δ and pump phase φ_β.

    With ε = −2igβ the matrix is [[−κ/2 + Re ε, Δ + Im ε], [−Δ + Im ε, −κ/2 − Re ε]]. For Δ = 0 and
    φ_β = −π/2 it is diagonal and X decays at κ/2 + 2g|β|, so X is the squeezed quadrature.
    """
    eps = -2j * pump.nonlinear_rate * pump.beta
    half = cavity.total_rate / 2
    delta = cavity.detuning
    return np.array(
        [
            [-half + eps.real, delta + eps.imag],
            [-delta + eps.imag, -half - eps.real],
        ]
    )


def complex_amplitude_rhs(
    cavity: CavityParams, pump: PumpState
) -> Callable[[float, NDArray[np.float64]], NDArray[np.float64]]:
    """Noise-free right-hand side of the Langevin equation on (Re a, Im a), for solve_ivp."""
    kappa = cavity.total_rate
    delta = cavity.detuning
    coupling = -2j * pump.nonlinear_rate * pump.beta

    def rhs(_: float, y: NDArray[np.float64]) -> NDArray[np.float64]:
        a = complex(y[0], y[1])
        da = -(kappa / 2 + 1j * delta) * a + coupling * a.conjugate()
        return np.array([da.real, da.imag])

    return rhs


def propagate_mean(
    cavity: CavityParams, pump: PumpState, amplitude: complex, times: NDArray[np.float64]
) -> NDArray[np.float64]:
    """Mean quadratures (X, Y) at ``times`` from an initial coherent amplitude, via solve_ivp.

    Returns:
        Array of shape (2, len(times))
    """
    result = solve_ivp(
        complex_amplitude_rhs(cavity, pump),
        (0.0, float(times[-1])),
        [amplitude.real, amplitude.imag],
        t_eval=times,
        method="DOP853",
        rtol=1e-11,
        atol=1e-13,
    )
    re, im = result.y
    return np.vstack([2.0 * re, 2.0 * im])


def stationary_covariance(drift: NDArray[np.float64], cavity: CavityParams) -> NDArray[np.float64]:
    """Solution P of A·P + P·Aᵀ + κI = 0."""
    return linalg.solve_continuous_lyapunov(drift, -cavity.total_rate * np.eye(2))


def _check_run(cavity: CavityParams, pump: PumpState, cfg: SimConfig) -> int:
    """Validate the run and return the number of recorded samples."""
    x = pump.ratio_for(cavity)
    if x >= 1.0:
        raise DivergenceError(f"Pump ratio x = {x:.6g} has no stationary state")
    eigenvalues = np.linalg.eigvals(drift_matrix(cavity, pump))
    if np.any(eigenvalues.real >= 0):
        raise DivergenceError(f"Drift has a non-decaying mode: {eigenvalues}")
    max_dt = MAX_STEP_FRACTION * 2 * math.pi / cavity.total_rate
    if cfg.dt > max_dt * (1 + 1e-9):
        raise StabilityError(f"dt = {cfg.dt:.3g} s exceeds {max_dt:.3g} s (1% of 2π/κ)")
    samples = int(round(cfg.duration / cfg.dt))
    needed = MIN_SEGMENTS * cfg.segment_length()
    if samples < needed:
        raise StabilityError(
            f"duration holds {samples} samples; {MIN_SEGMENTS} segments of "
            f"{cfg.segment_length()} need {needed}"
        )
    return samples


def _exact_step(
    drift: NDArray[np.float64], cavity: CavityParams, dt: float
) -> tuple[NDArray[np.float64], NDArray[np.float64]]:
    """Propagator Φ = e^{A·dt} and a factor L with L·Lᵀ equal to the joint covariance of
    (process noise, external-port increments) over one step."""
    noise = cavity.total_rate * np.eye(2)
    van_loan = linalg.expm(np.block([[-drift, noise], [np.zeros((2, 2)), drift.T]]) * dt)
    phi = van_loan[2:, 2:].T
    process = phi @ van_loan[:2, 2:]
    integral = linalg.expm(np.block([[drift, np.eye(2)], [np.zeros((2, 4))]]) * dt)[:2, 2:]
    cross = math.sqrt(cavity.external_rate) * integral
    joint = np.block([[process, cross], [cross.T, dt * np.eye(2)]])
    joint = (joint + joint.T) / 2
    values, vectors = np.linalg.eigh(joint)
    factor = vectors * np.sqrt(np.clip(values, 0.0, None))
    return phi, factor


def _iterate(
    phi: NDArray[np.float64], start: NDArray[np.float64], forcing: NDArray[np.float64]
) -> NDArray[np.float64]:
    """States S_0..S_n of S_{k+1} = Φ·S_k + u_k; returns shape (n + 1, 2)."""
    eigenvalues, vectors = np.linalg.eig(phi)
    if np.linalg.cond(vectors) < _MAX_EIGEN_CONDITION:
        inverse = np.linalg.inv(vectors)
        modal_start = inverse @ start
        modal_forcing = forcing @ inverse.T
        modes = np.empty((forcing.shape[0] + 1, 2), dtype=complex)
        modes[0] = modal_start
        for i, lam in enumerate(eigenvalues):
            modes[1:, i], _ = signal.lfilter(
                [1.0], [1.0, -lam], modal_forcing[:, i], zi=[lam * modal_start[i]]
            )
        return np.real(modes @ vectors.T)
    states = np.empty((forcing.shape[0] + 1, 2))
    states[0] = start
    for k in range(forcing.shape[0]):
        states[k + 1] = phi @ states[k] + forcing[k]
    return states


def simulate_cavity(
    cavity: CavityParams,
    pump: PumpState,
    cfg: SimConfig,
    rng: Optional[np.random.Generator] = None,
) -> QuadratureTrace:
    """Simulate the output-port quadratures of the sub-threshold OPO.

    Each output sample is the field averaged over one step: √κ_e times the trapezoidal mean of
    the intracavity state minus the external increment divided by dt. Vacuum therefore has
    per-sample variance 1/dt and a two-sided PSD of one.

    Args:
        cavity: Cavity rates and detuning
        pump: Pump state; must be below threshold
        cfg: Step, duration, transient and integrator
        rng: Generator for all noise draws; seeded from ``cfg.seed`` when omitted

    Returns:
        QuadratureTrace of the recorded (post-transient) output field

    Raises:
        StabilityError: If dt is too coarse or the run cannot fill the Welch segments
        DivergenceError: If the pump is at or above threshold
    """
    samples = _check_run(cavity, pump, cfg)
    generator = rng if rng is not None else np.random.default_rng(cfg.seed)
    started = time.perf_counter()

    drift = drift_matrix(cavity, pump)
    dt = cfg.dt
    transient = cfg.transient if cfg.transient is not None else 10.0 / cavity.total_rate
    skip = int(math.ceil(transient / dt))
    steps = skip + samples

    start = np.linalg.cholesky(stationary_covariance(drift, cavity)) @ generator.standard_normal(2)
    draws = generator.standard_normal((steps, 4))
    if cfg.integrator is Integrator.EXACT:
        phi, factor = _exact_step(drift, cavity, dt)
        joint = draws @ factor.T
        forcing, external = joint[:, :2], joint[:, 2:]
    else:
        increments = draws * math.sqrt(dt)
        external, internal = increments[:, :2], increments[:, 2:]
        phi = np.eye(2) + drift * dt
        forcing = math.sqrt(cavity.external_rate) * external + math.sqrt(
            cavity.intrinsic_rate
        ) * internal

    states = _iterate(phi, start, forcing)
    averaged = (states[:-1] + states[1:]) / 2.0
    output = math.sqrt(cavity.external_rate) * averaged - external / dt
    output = output[skip:]
    times = dt * np.arange(skip, steps)

    elapsed = time.perf_counter() - started
    SIMULATION_SECONDS.observe(elapsed)
    logger.debug(
        "simulation_finished",
        samples=samples,
        pump_ratio=pump.ratio_for(cavity),
        integrator=cfg.integrator.value,
        seconds=round(elapsed, 4),
    )
    return QuadratureTrace(
        times=times,
        x=output[:, 0],
        y=output[:, 1],
        metadata={
            "pump_ratio": pump.ratio_for(cavity),
            "escape_efficiency": cavity.escape_efficiency,
            "dt": dt,
            "integrator": cfg.integrator.value,
            "transient_samples": skip,
        },
    )
