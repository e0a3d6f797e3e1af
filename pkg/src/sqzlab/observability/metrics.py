from __future__ import annotations

from prometheus_client import Counter, Histogram

SIMULATION_RUNS_TOTAL = Counter(
    "sqzlab_simulation_runs_total",
    "Total number of homodyne simulation runs",
    labelnames=("mode",),
)

SIMULATION_SECONDS = Histogram(
    "sqzlab_simulation_seconds",
    "Wall time (seconds) of a single cavity simulation",
    buckets=(0.01, 0.05, 0.1, 0.25, 0.5, 1, 2.5, 5, 10, 30, 60),
)

FITS_TOTAL = Counter(
    "sqzlab_fits_total",
    "Total fits attempted",
    labelnames=("model", "outcome"),
)

FIT_SECONDS = Histogram(
    "sqzlab_fit_seconds",
    "Wall time (seconds) of a least-squares fit",
    labelnames=("model",),
    buckets=(0.001, 0.005, 0.01, 0.05, 0.1, 0.5, 1, 5),
)
