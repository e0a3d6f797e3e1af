"""Damped least-squares core shared by every fitter.

Wraps ``scipy.optimize.least_squares``: Levenberg-Marquardt for unconstrained problems and
the bounded trust-region variant when bounds are given. Convergence is declared when both
the relative step and the relative cost change fall below 1e-10; the evaluation budget is
200 iterations' worth of model evaluations.
"""

from __future__ import annotations

import math
import time
from typing import Callable, Optional, Sequence, Union

import numpy as np
import structlog
from numpy.typing import NDArray
from scipy.optimize import least_squares

from sqzlab.errors import FitConvergenceError
from sqzlab.models import FitResult
from sqzlab.observability.metrics import FIT_SECONDS, FITS_TOTAL

logger = structlog.get_logger(__name__)

Vector = NDArray[np.float64]
Predict = Callable[[Vector], Vector]
Jacobian = Callable[[Vector], NDArray[np.float64]]

TOLERANCE = 1e-10
MAX_ITERATIONS = 200


def r_squared(observed: Vector, predicted: Vector) -> float:
    """Coefficient of determination 1 − SS_res/SS_tot (centered)."""
    residual = float(np.sum((observed - predicted) ** 2))
    total = float(np.sum((observed - np.mean(observed)) ** 2))
    if total == 0.0:
        return 1.0 if residual == 0.0 else 0.0
    return min(1.0, 1.0 - residual / total)


def _weighted(jacobian: Jacobian, w: Vector) -> Jacobian:
    def weighted(p: Vector) -> NDArray[np.float64]:
        return w[:, None] * jacobian(p)

    return weighted


def fit_model(
    model: str,
    names: Sequence[str],
    x0: Sequence[float],
    predict: Predict,
    observed: Vector,
    jacobian: Optional[Jacobian] = None,
    weights: Optional[Vector] = None,
    bounds: Optional[tuple[Sequence[float], Sequence[float]]] = None,
    residual_fn: Optional[Callable[[Vector], Vector]] = None,
) -> FitResult:
    """Minimize Σ w²(predict(p) − observed)² and package the outcome.

    Args:
        model: Name recorded in the result and the metrics
        names: Parameter names, in the order of ``x0``
        x0: Initial guess
        predict: Model values at the data points for a parameter vector
        observed: Data values
        jacobian: Analytic ∂predict/∂p; finite differences when omitted
        weights: Per-point weights w (inverse standard deviations)
        bounds: (lower, upper) parameter bounds
        residual_fn: Replaces predict − observed, e.g. to wrap phase residuals

    Returns:
        FitResult with 1σ errors from (JᵀJ)⁻¹·s²

    Raises:
        FitConvergenceError: If the evaluation budget runs out; carries the best-so-far result
    """
    data = np.asarray(observed, dtype=float)
    w = np.ones_like(data) if weights is None else np.asarray(weights, dtype=float)

    def residuals(p: Vector) -> Vector:
        raw = residual_fn(p) if residual_fn is not None else predict(p) - data
        return w * raw

    jac: Union[str, Jacobian] = "2-point"
    if jacobian is not None:
        jac = _weighted(jacobian, w)

    n = len(names)
    started = time.perf_counter()
    if bounds is None:
        result = least_squares(
            residuals,
            np.asarray(x0, dtype=float),
            jac=jac,
            method="lm",
            xtol=TOLERANCE,
            ftol=TOLERANCE,
            gtol=TOLERANCE,
            max_nfev=MAX_ITERATIONS * (n + 1),
            x_scale="jac",
        )
    else:
        result = least_squares(
            residuals,
            np.asarray(x0, dtype=float),
            jac=jac,
            method="trf",
            bounds=bounds,
            xtol=TOLERANCE,
            ftol=TOLERANCE,
            gtol=TOLERANCE,
            max_nfev=MAX_ITERATIONS * (n + 1),
            x_scale="jac",
        )
    FIT_SECONDS.labels(model=model).observe(time.perf_counter() - started)

    params = result.x
    dof = max(data.size - n, 1)
    s2 = 2.0 * float(result.cost) / dof
    jtj = result.jac.T @ result.jac
    covariance = np.linalg.pinv(jtj) * s2
    stderr = np.sqrt(np.clip(np.diag(covariance), 0.0, None))
    fitted = predict(params)

    fit = FitResult(
        model=model,
        params={name: float(v) for name, v in zip(names, params)},
        stderr={name: float(v) for name, v in zip(names, stderr)},
        covariance=covariance.tolist(),
        residual_norm=float(np.linalg.norm(result.fun)),
        r_squared=r_squared(data, fitted),
        converged=bool(result.status > 0),
        iterations=int(result.nfev),
        message=str(result.message),
    )
    outcome = "converged" if fit.converged else "failed"
    FITS_TOTAL.labels(model=model, outcome=outcome).inc()
    if not fit.converged:
        logger.warning("fit_not_converged", model=model, evaluations=fit.iterations)
        raise FitConvergenceError(f"{model} fit did not converge: {result.message}", best=fit)
    if not math.isfinite(fit.residual_norm):
        raise FitConvergenceError(f"{model} fit produced a non-finite residual", best=fit)
    return fit
