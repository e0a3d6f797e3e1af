"""Coupling-condition diagnostic from the phase response across a resonance.

The transmitted amplitude of the cold cavity, 1 + κ_e(iΔ − κ/2)/(Δ² + κ²/4), has a phase that
swings by less than π when κ_e < κ_i and wraps through a full 2π when κ_e > κ_i. Both branches
are fitted with wrapped residuals; the better one wins unless the two residuals agree within
one percent.
"""

from __future__ import annotations

import math
from typing import Optional

import numpy as np
import structlog
from numpy.typing import NDArray

from sqzlab.errors import FitConvergenceError, InsufficientDataError
from sqzlab.estimation.core import fit_model
from sqzlab.models import CouplingDiagnosis, CouplingRegime, FitResult, TransmissionCurve

logger = structlog.get_logger(__name__)

Vector = NDArray[np.float64]

AMBIGUITY_TOLERANCE = 0.01
# Residual floor (rad) below which two fits count as equally good.
_RESIDUAL_FLOOR = 1e-6

_BRANCHES = {
    CouplingRegime.UNDERCOUPLED: (0.0, 0.5),
    CouplingRegime.OVERCOUPLED: (0.5, 1.0),
}


def cold_phase(
    detuning: Vector, center: float, kappa: float, escape_efficiency: float, offset: float = 0.0
) -> Vector:
    """Phase of the cold-cavity transmission amplitude plus a constant offset."""
    d = detuning - center
    amplitude = 1.0 + escape_efficiency * kappa * (1j * d - kappa / 2) / (d**2 + kappa**2 / 4)
    return np.angle(amplitude) + offset


def _wrap(values: Vector) -> Vector:
    return np.angle(np.exp(1j * values))


def _fit_branch(
    delta: Vector,
    phase: Vector,
    regime: CouplingRegime,
    total_rate: Optional[float],
) -> FitResult:
    low, high = _BRANCHES[regime]
    span = float(np.ptp(delta))
    spacing = float(np.median(np.diff(delta)))
    gradient = np.abs(np.gradient(np.unwrap(phase), delta))
    center0 = float(delta[int(np.argmax(gradient))])
    kappas = [total_rate] if total_rate else list(np.geomspace(2 * spacing, span, 25))
    rhos = np.linspace(low + 0.02, high - 0.02, 9)

    best: Optional[tuple[float, list[float]]] = None
    for kappa in kappas:
        for rho in rhos:
            model = cold_phase(delta, center0, kappa, float(rho))
            offset = float(np.angle(np.mean(np.exp(1j * (phase - model)))))
            cost = float(np.sum(_wrap(model + offset - phase) ** 2))
            if best is None or cost < best[0]:
                best = (cost, [center0 / span, kappa / span, float(rho), offset])
    if best is None:
        raise InsufficientDataError("No initial guess could be formed")
    guess = best[1]

    def predict(p: Vector) -> Vector:
        return cold_phase(delta, p[0] * span, p[1] * span, p[2], p[3])

    def residual(p: Vector) -> Vector:
        return _wrap(predict(p) - phase)

    lower = [float(np.min(delta)) / span, 1e-6, low, -2 * math.pi]
    upper = [float(np.max(delta)) / span, 10.0, high, 2 * math.pi]
    guess[1] = min(max(guess[1], 1e-6), 10.0)
    return fit_model(
        f"coupling_{regime.value.lower()}",
        ["center", "kappa", "escape_efficiency", "offset"],
        guess,
        predict,
        phase,
        bounds=(lower, upper),
        residual_fn=residual,
    )


def coupling_diagnostic(
    phase_trace: TransmissionCurve, total_rate: Optional[float] = None
) -> CouplingDiagnosis:
    """Classify a resonance as undercoupled, overcoupled or critical from its phase response.

    Args:
        phase_trace: Curve whose ``amplitude_phase`` spans the resonance
        total_rate: Known κ (rad/s), e.g. from a Lorentzian fit; fitted when omitted

    Returns:
        CouplingDiagnosis with the winning branch, a confidence in [0, 1], the unwrapped phase
        excursion and the fitted escape efficiency

    Raises:
        InsufficientDataError: If fewer than eight points are given
    """
    delta = phase_trace.detunings
    phase = phase_trace.amplitude_phase
    if delta.size < 8:
        raise InsufficientDataError(f"Phase diagnostic needs at least 8 points, got {delta.size}")

    fits: dict[CouplingRegime, FitResult] = {}
    residuals: dict[CouplingRegime, float] = {}
    for regime in _BRANCHES:
        try:
            fit = _fit_branch(delta, phase, regime, total_rate)
        except FitConvergenceError as exc:
            if exc.best is None:
                raise
            fit = exc.best
        fits[regime] = fit
        residuals[regime] = fit.residual_norm / math.sqrt(delta.size)

    under = residuals[CouplingRegime.UNDERCOUPLED]
    over = residuals[CouplingRegime.OVERCOUPLED]
    worse = max(under, over)
    separation = abs(under - over)
    excursion = float(np.ptp(np.unwrap(phase)))

    if separation <= AMBIGUITY_TOLERANCE * worse + _RESIDUAL_FLOOR:
        regime = CouplingRegime.CRITICAL
        rho = 0.5 * sum(f.params["escape_efficiency"] for f in fits.values())
        confidence = 1.0 - (separation / worse if worse > 0 else 0.0)
    else:
        regime = CouplingRegime.UNDERCOUPLED if under < over else CouplingRegime.OVERCOUPLED
        rho = fits[regime].params["escape_efficiency"]
        confidence = separation / worse

    expected = CouplingRegime.UNDERCOUPLED if excursion < math.pi else CouplingRegime.OVERCOUPLED
    if regime is not CouplingRegime.CRITICAL and regime is not expected:
        logger.warning(
            "coupling_excursion_disagrees", regime=regime.value, phase_excursion=excursion
        )
    return CouplingDiagnosis(
        regime=regime,
        confidence=min(max(confidence, 0.0), 1.0),
        phase_excursion=excursion,
        escape_efficiency=min(max(rho, 0.0), 1.0),
        residual_undercoupled=under,
        residual_overcoupled=over,
    )
