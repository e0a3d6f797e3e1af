"""Fitters for resonances, SHG conversion, linear sweeps and squeezing spectra.

Design Philosophy:
- Analytic Jacobians for the closed-form Lorentzian, quadratic and linear models; finite
  differences for the squeezing model
- Initial guesses come from the data (extremum scan, half-depth crossings, closed-form
  inversion of the squeezing pair), never from hidden defaults
- Abscissae are rescaled to O(1) internally so GHz detunings and mW powers fit equally well
"""

from __future__ import annotations

import math
from typing import Optional, Sequence, Union

import numpy as np
import structlog
from numpy.typing import NDArray

from sqzlab.errors import (
    DomainError,
    FitConvergenceError,
    InsufficientDataError,
    RankError,
    UnderdeterminedFitError,
)
from sqzlab.estimation.core import fit_model
from sqzlab.models import FitResult, SpectrumTrace, TraceUnit, TransmissionCurve
from sqzlab.units import hz_to_angular, wavelength_to_angular

logger = structlog.get_logger(__name__)

Vector = NDArray[np.float64]

# Keeps the pump ratio strictly below threshold inside the bounded fit.
_MAX_PUMP_RATIO = 1.0 - 1e-6


def _lorentzian(x: Vector, center: float, width: float, depth: float, baseline: float) -> Vector:
    return baseline - depth / (1.0 + (2.0 * (x - center) / width) ** 2)


def _lorentzian_jacobian(
    x: Vector, center: float, width: float, depth: float
) -> NDArray[np.float64]:
    u = 2.0 * (x - center) / width
    denom = 1.0 + u**2
    d_center = -depth * 2.0 * u / denom**2 * (2.0 / width)
    d_width = -depth * 2.0 * u**2 / (denom**2 * width)
    d_depth = -1.0 / denom
    d_baseline = np.ones_like(x)
    return np.column_stack([d_center, d_width, d_depth, d_baseline])


def _lorentzian_guess(x: Vector, y: Vector) -> list[float]:
    edge = max(2, x.size // 10)
    baseline = float(np.median(np.concatenate([y[:edge], y[-edge:]])))
    index = int(np.argmax(np.abs(y - baseline)))
    depth = baseline - float(y[index])
    beyond_half = np.abs(y - baseline) > abs(depth) / 2.0
    spacing = float(np.median(np.diff(x)))
    width = max(float(np.count_nonzero(beyond_half)) * spacing, 2.0 * spacing)
    return [float(x[index]), width, depth, baseline]


def fit_lorentzian(
    trace: Union[TransmissionCurve, SpectrumTrace],
    resonance_wavelength: Optional[float] = None,
    assume_undercoupled: bool = True,
) -> FitResult:
    """Fit baseline − depth/(1 + (2(x − center)/fwhm)²) to a single resonance.

    TransmissionCurve abscissae are detunings in rad/s; SpectrumTrace abscissae are Hz and the
    fitted width is converted to rad/s for the derived quantities.

    Derived values: ``linewidth`` (κ, rad/s), ``linewidth_hz``, ``extinction`` (T_min/baseline),
    ρ and Q_int for both coupling branches via T_min = (1 − 2ρ)², and, with a resonance
    wavelength, ``q_total`` = ω₀/κ with the branch selected by ``assume_undercoupled``.

    Raises:
        InsufficientDataError: If fewer than five points are given
        FitConvergenceError: If the trace is flat or the optimizer does not converge
    """
    if isinstance(trace, TransmissionCurve):
        x = trace.detunings
        y = trace.transmittance
        to_angular = 1.0
    else:
        x = trace.freqs
        y = trace.to_linear().values if trace.unit is TraceUnit.SHOT_NORMALIZED_DB else trace.values
        to_angular = 2.0 * math.pi
    if x.size < 5:
        raise InsufficientDataError(f"Lorentzian fit needs at least 5 points, got {x.size}")
    scale = max(float(np.max(np.abs(y))), 1e-300)
    if float(np.ptp(y)) <= 1e-12 * scale:
        raise FitConvergenceError("Trace is flat; no resonance to fit")

    offset = float(np.mean(x))
    span = float(np.ptp(x))
    xn = (x - offset) / span
    yn = y / scale
    guess = _lorentzian_guess(xn, yn)

    def predict(p: Vector) -> Vector:
        return _lorentzian(xn, p[0], p[1], p[2], p[3])

    def jacobian(p: Vector) -> NDArray[np.float64]:
        return _lorentzian_jacobian(xn, p[0], p[1], p[2])

    fit = fit_model(
        "lorentzian", ["center", "fwhm", "depth", "baseline"], guess, predict, yn, jacobian
    )
    center = fit.params["center"] * span + offset
    fwhm = abs(fit.params["fwhm"]) * span
    depth = fit.params["depth"] * scale
    baseline = fit.params["baseline"] * scale
    factors = {"center": span, "fwhm": span, "depth": scale, "baseline": scale}
    params = {"center": center, "fwhm": fwhm, "depth": depth, "baseline": baseline}
    stderr = {name: fit.stderr[name] * factors[name] for name in params}
    names = list(params)
    covariance = [
        [fit.covariance[i][j] * factors[a] * factors[b] for j, b in enumerate(names)]
        for i, a in enumerate(names)
    ]

    kappa = fwhm * to_angular
    derived: dict[str, float] = {"linewidth": kappa, "linewidth_hz": kappa / (2.0 * math.pi)}
    if baseline > 0 and depth > 0:
        extinction = max((baseline - depth) / baseline, 0.0)
        root = math.sqrt(extinction)
        rho_under = (1.0 - root) / 2.0
        rho_over = (1.0 + root) / 2.0
        derived["extinction"] = extinction
        derived["escape_efficiency_undercoupled"] = rho_under
        derived["escape_efficiency_overcoupled"] = rho_over
        derived["escape_efficiency"] = rho_under if assume_undercoupled else rho_over
        if resonance_wavelength is not None:
            q_total = wavelength_to_angular(resonance_wavelength) / kappa
            derived["q_total"] = q_total
            derived["q_intrinsic_undercoupled"] = q_total / (1.0 - rho_under)
            if rho_over < 1.0:
                derived["q_intrinsic_overcoupled"] = q_total / (1.0 - rho_over)
            if assume_undercoupled:
                derived["q_intrinsic"] = derived["q_intrinsic_undercoupled"]
            elif "q_intrinsic_overcoupled" in derived:
                derived["q_intrinsic"] = derived["q_intrinsic_overcoupled"]
    elif resonance_wavelength is not None:
        derived["q_total"] = wavelength_to_angular(resonance_wavelength) / kappa

    return fit.model_copy(
        update={
            "params": params,
            "stderr": stderr,
            "covariance": covariance,
            "residual_norm": fit.residual_norm * scale,
            "derived": derived,
        }
    )


def _check_powers(name: str, values: Vector) -> None:
    if np.any(values < 0):
        raise DomainError(f"{name} must be non-negative")


def fit_shg_quadratic(p_fh: Sequence[float], p_sh: Sequence[float]) -> FitResult:
    """Least squares for P_SH = η·P_FH² with no linear or constant term.

    Returns:
        FitResult with ``eta_norm`` (1/W) and ``eta_norm_percent`` derived (%/W)

    Raises:
        InsufficientDataError: If fewer than three points are given
        DomainError: If a power is negative
    """
    x = np.asarray(p_fh, dtype=float)
    y = np.asarray(p_sh, dtype=float)
    if x.size != y.size:
        raise InsufficientDataError(f"Length mismatch: {x.size} FH vs {y.size} SH powers")
    if x.size < 3:
        raise InsufficientDataError(f"SHG fit needs at least 3 points, got {x.size}")
    _check_powers("FH powers", x)
    _check_powers("SH powers", y)
    x_scale = max(float(np.max(x)), 1e-300)
    y_scale = max(float(np.max(np.abs(y))), 1e-300)
    u = (x / x_scale) ** 2
    if not np.any(u > 0):
        raise RankError("All FH powers are zero")
    v = y / y_scale
    guess = [float(np.sum(u * v) / np.sum(u * u))]

    def predict(p: Vector) -> Vector:
        return p[0] * u

    def jacobian(_: Vector) -> NDArray[np.float64]:
        return u[:, None]

    fit = fit_model("shg", ["eta_norm"], guess, predict, v, jacobian)
    factor = y_scale / x_scale**2
    eta = fit.params["eta_norm"] * factor
    return fit.model_copy(
        update={
            "params": {"eta_norm": eta},
            "stderr": {"eta_norm": fit.stderr["eta_norm"] * factor},
            "covariance": [[fit.covariance[0][0] * factor**2]],
            "residual_norm": fit.residual_norm * y_scale,
            "derived": {"eta_norm_percent": 100.0 * eta},
        }
    )


def fit_linear_origin(
    x: Sequence[float], y: Sequence[float], zero_intercept: bool = False
) -> FitResult:
    """Ordinary least squares y = slope·x (+ intercept).

    Raises:
        InsufficientDataError: If fewer than two points are given
        RankError: If x is degenerate
    """
    xs = np.asarray(x, dtype=float)
    ys = np.asarray(y, dtype=float)
    if xs.size != ys.size:
        raise InsufficientDataError(f"Length mismatch: {xs.size} x vs {ys.size} y")
    if xs.size < 2:
        raise InsufficientDataError(f"Linear fit needs at least 2 points, got {xs.size}")
    if zero_intercept and not np.any(xs != 0):
        raise RankError("All x values are zero")
    if not zero_intercept and float(np.ptp(xs)) == 0.0:
        raise RankError("All x values are equal; slope and intercept are not separable")

    x_scale = max(float(np.max(np.abs(xs))), 1e-300)
    y_scale = max(float(np.max(np.abs(ys))), 1e-300)
    u = xs / x_scale
    v = ys / y_scale
    if zero_intercept:
        names = ["slope"]
        design = u[:, None]
    else:
        names = ["slope", "intercept"]
        design = np.column_stack([u, np.ones_like(u)])
    guess = np.linalg.lstsq(design, v, rcond=None)[0]

    def predict(p: Vector) -> Vector:
        return design @ p

    def jacobian(_: Vector) -> NDArray[np.float64]:
        return design

    fit = fit_model("linear", names, list(guess), predict, v, jacobian)
    factors = {"slope": y_scale / x_scale, "intercept": y_scale}
    params = {name: fit.params[name] * factors[name] for name in names}
    if zero_intercept:
        params["intercept"] = 0.0
    return fit.model_copy(
        update={
            "params": params,
            "stderr": {name: fit.stderr[name] * factors[name] for name in names},
            "covariance": [
                [fit.covariance[i][j] * factors[a] * factors[b] for j, b in enumerate(names)]
                for i, a in enumerate(names)
            ],
            "residual_norm": fit.residual_norm * y_scale,
        }
    )


def _squeezing_model(
    omega: Vector, anti: NDArray[np.bool_], x: float, eta: float, kappa: float
) -> Vector:
    r = 4.0 * (omega / kappa) ** 2
    minus = 1.0 - eta * 4.0 * x / ((1.0 + x) ** 2 + r)
    plus = 1.0 + eta * 4.0 * x / ((1.0 - x) ** 2 + r)
    return np.where(anti, plus, minus)


def invert_squeezing_pair(
    s_minus: float, s_plus: float, omega_over_kappa: float = 0.0
) -> Optional[tuple[float, float]]:
    """Closed-form (x, η) reproducing a measured linear pair at one sideband frequency.

    With q = (S+ − 1)/(1 − S−) the pump ratio solves (1 − q)x² + (2 + 2q)x + (1 − q)(1 + r) = 0,
    r = 4(ω/κ)². Returns None when the pair shows no squeezing or anti-squeezing.
    """
    if s_minus >= 1.0 or s_plus <= 1.0:
        return None
    r = 4.0 * omega_over_kappa**2
    q = (s_plus - 1.0) / (1.0 - s_minus)
    if math.isclose(q, 1.0):
        x = 0.0
    else:
        a, b, c = 1.0 - q, 2.0 + 2.0 * q, (1.0 - q) * (1.0 + r)
        disc = b * b - 4.0 * a * c
        if disc < 0:
            return None
        roots = [(-b + s * math.sqrt(disc)) / (2.0 * a) for s in (1.0, -1.0)]
        valid = [root for root in roots if 0.0 < root < 1.0]
        if not valid:
            return None
        x = min(valid)
    if x == 0.0:
        return None
    eta = (1.0 - s_minus) * ((1.0 + x) ** 2 + r) / (4.0 * x)
    return x, eta


def fit_squeezing_model(
    spectra: Sequence[SpectrumTrace],
    kappa: float,
    fit_kappa: bool = False,
) -> FitResult:
    """Weighted fit of the measured squeezing/anti-squeezing model to shot-normalized traces.

    Each trace names its quadrature in ``metadata["quadrature"]`` (``squeezed`` or
    ``anti_squeezed``). Traces carrying ``metadata["averages"]`` are weighted by inverse
    variance (σ ∝ S/√averages); otherwise uniformly.

    Returns:
        FitResult with ``pump_ratio``, ``total_efficiency`` (and ``kappa`` when free);
        ``feasible`` is False when the data violate S+·S− ≥ 1 or the pump ratio is pinned at
        threshold

    Raises:
        UnderdeterminedFitError: If a quadrature is missing or there are too few points
        DomainError: If κ is not positive
    """
    if kappa <= 0:
        raise DomainError(f"κ must be positive, got {kappa}")
    omegas, values, anti_flags, weights = [], [], [], []
    for trace in spectra:
        label = trace.metadata.get("quadrature")
        if label not in ("squeezed", "anti_squeezed"):
            raise UnderdeterminedFitError(
                f"Trace quadrature must be 'squeezed' or 'anti_squeezed', got {label!r}"
            )
        linear = trace.to_linear().values
        omegas.append(hz_to_angular(trace.freqs))
        values.append(linear)
        anti_flags.append(np.full(linear.size, label == "anti_squeezed"))
        averages = trace.metadata.get("averages")
        if averages:
            weights.append(math.sqrt(float(averages)) / linear)
        else:
            weights.append(np.ones_like(linear))
    if not spectra:
        raise UnderdeterminedFitError("No spectra given")

    omega = np.concatenate(omegas)
    data = np.concatenate(values)
    anti = np.concatenate(anti_flags)
    weight = np.concatenate(weights)
    names = ["pump_ratio", "total_efficiency"] + (["kappa"] if fit_kappa else [])
    if not anti.any() or anti.all():
        raise UnderdeterminedFitError("Both quadrature extrema are needed to separate x and η")
    if data.size <= len(names) or (fit_kappa and np.unique(omega).size < 2):
        raise UnderdeterminedFitError(
            f"{data.size} points at {np.unique(omega).size} frequencies cannot fix {names}"
        )

    s_minus = float(np.mean(data[~anti]))
    s_plus = float(np.mean(data[anti]))
    center = float(np.mean(omega))
    start = invert_squeezing_pair(s_minus, s_plus, center / kappa)
    x0, eta0 = start if start is not None else (0.01, 0.5)
    x0 = min(max(x0, 1e-6), 0.99)
    eta0 = min(max(eta0, 1e-6), 1.0)

    def predict(p: Vector) -> Vector:
        k = p[2] * kappa if fit_kappa else kappa
        return _squeezing_model(omega, anti, p[0], p[1], k)

    guess = [x0, eta0] + ([1.0] if fit_kappa else [])
    lower = [0.0, 0.0] + ([1e-3] if fit_kappa else [])
    upper = [_MAX_PUMP_RATIO, 1.0] + ([1e3] if fit_kappa else [])
    fit = fit_model(
        "squeezing", names, guess, predict, data, weights=weight, bounds=(lower, upper)
    )

    params = dict(fit.params)
    stderr = dict(fit.stderr)
    covariance = fit.covariance
    if fit_kappa:
        params["kappa"] *= kappa
        stderr["kappa"] *= kappa
        factors = [1.0, 1.0, kappa]
        covariance = [
            [value * factors[i] * factors[j] for j, value in enumerate(row)]
            for i, row in enumerate(fit.covariance)
        ]
    feasible = s_minus * s_plus >= 1.0 - 1e-3 and params["pump_ratio"] < _MAX_PUMP_RATIO * 0.999
    if not feasible:
        logger.warning(
            "squeezing_fit_infeasible",
            s_minus=s_minus,
            s_plus=s_plus,
            pump_ratio=params["pump_ratio"],
        )
    return fit.model_copy(
        update={
            "params": params,
            "stderr": stderr,
            "covariance": covariance,
            "feasible": feasible,
            "derived": {"power_fraction": params["pump_ratio"] ** 2},
        }
    )
