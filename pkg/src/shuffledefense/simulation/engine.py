"""Seeded trial execution and ensemble summaries.

Trials are grouped into fixed-size blocks. Block ``b`` draws from
``SeedSequence(seed, spawn_key=(b,))``, so a run depends only on the root
seed and the block size, never on how many worker processes execute it.
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from functools import partial
from typing import Callable

import numpy as np

from shuffledefense.errors import DomainError

BLOCK_SIZE = 500
POPULATIONS = ("finite", "binomial")


def block_rng(seed: int, block: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(block,)))


def _run_block(kernel: Callable, seed: int, kwargs: dict, task: tuple[int, int]) -> dict:
    block, count = task
    return kernel(block_rng(seed, block), count, **kwargs)


def run_trials(
    kernel: Callable[..., dict[str, np.ndarray]],
    trials: int,
    seed: int,
    workers: int = 1,
    block_size: int = BLOCK_SIZE,
    **kwargs,
) -> dict[str, np.ndarray]:
    """Run ``kernel(rng, count, **kwargs)`` over blocks and concatenate results.

    The kernel returns a dict of arrays whose first axis indexes its trials
    (or, for pooled samples such as run lengths, any per-block sample count).
    Block results are concatenated in block order.
    """
    if trials < 1:
        raise DomainError(f"trials must be >= 1, got {trials}")
    if not 0 <= seed < 2**64:
        raise DomainError(f"seed must be an unsigned 64-bit value, got {seed}")
    tasks = [(b, min(block_size, trials - start)) for b, start in enumerate(range(0, trials, block_size))]
    job = partial(_run_block, kernel, seed, kwargs)
    if workers > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(job, tasks))
    else:
        parts = [job(t) for t in tasks]
    return {key: np.concatenate([p[key] for p in parts]) for key in parts[0]}


def check_population(population: str) -> None:
    if population not in POPULATIONS:
        raise DomainError(f"population must be one of {POPULATIONS}, got {population!r}")


@dataclass(frozen=True)
class SimulationOutcome:
    """Per-trial samples of one metric.

    With ``weights`` the estimate is the ratio of sums ``sum(w*x) / sum(w)``
    (e.g. a per-trial fraction weighted by its denominator). ``variance`` is
    scaled so that ``std_error == sqrt(variance / trials)`` holds in both cases.
    Samples may be vector valued (one column per stage or bin).
    """

    metric: str
    samples: np.ndarray
    seed: int
    weights: np.ndarray | None = None
    trajectory: np.ndarray | None = None
    truncated: int = 0
    extra: dict = field(default_factory=dict)

    @property
    def trials(self) -> int:
        return len(self.samples)

    def _w(self) -> np.ndarray:
        w = self.weights
        return w.reshape(w.shape + (1,) * (self.samples.ndim - 1))

    @property
    def mean(self):
        if self.weights is None:
            return self.samples.mean(axis=0)
        w = self._w()
        return (w * self.samples).sum(axis=0) / w.sum()

    @property
    def variance(self):
        n = self.trials
        if n < 2:
            return np.zeros_like(np.asarray(self.mean, dtype=float))
        if self.weights is None:
            return self.samples.var(axis=0, ddof=1)
        # delta-method variance of a ratio estimator, per unit trial
        w = self._w()
        resid = w * (self.samples - self.mean)
        return n * n / (n - 1) * (resid**2).sum(axis=0) / w.sum() ** 2

    @property
    def std_error(self):
        return np.sqrt(self.variance / self.trials)

    def summary(self) -> dict:
        return {
            "metric": self.metric,
            "mean": self.mean,
            "variance": self.variance,
            "std_error": self.std_error,
            "trials": self.trials,
            "seed": self.seed,
        }

    def same_as(self, other: "SimulationOutcome") -> bool:
        """Bit-level equality of samples, weights and trajectory."""

        def eq(a, b):
            if a is None or b is None:
                return a is b
            return a.shape == b.shape and a.dtype == b.dtype and a.tobytes() == b.tobytes()

        return (
            self.metric == other.metric
            and self.seed == other.seed
            and eq(self.samples, other.samples)
            and eq(self.weights, other.weights)
            and eq(self.trajectory, other.trajectory)
        )
