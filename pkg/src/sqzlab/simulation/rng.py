"""Seeded random streams for reproducible simulation runs."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class RunStreams:
    """Independent generators owned by one simulation run.

    Streams derive from (seed, run index) only, so a sweep executed serially or on a thread
    pool draws exactly the same numbers for every run.
    """

    seed: int
    run_index: int
    cavity: np.random.Generator
    detection: np.random.Generator
    electronic: np.random.Generator

    @classmethod
    def for_run(cls, seed: int, run_index: int = 0, record: int = 0) -> "RunStreams":
        """Streams of record ``record`` within run ``run_index``."""
        root = np.random.SeedSequence(seed)
        key = (run_index,) if record == 0 else (run_index, record)
        child = np.random.SeedSequence(root.entropy, spawn_key=key)
        cavity, detection, electronic = child.spawn(3)
        return cls(
            seed=seed,
            run_index=run_index,
            cavity=np.random.default_rng(cavity),
            detection=np.random.default_rng(detection),
            electronic=np.random.default_rng(electronic),
        )
