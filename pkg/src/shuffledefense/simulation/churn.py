"""Proactive shuffling under client arrivals and departures."""

from __future__ import annotations

import math
from functools import lru_cache

import numpy as np

from shuffledefense.analytics import ChurnParams, in_service_threshold
from shuffledefense.errors import DomainError
from shuffledefense.simulation.engine import SimulationOutcome, run_trials
from shuffledefense.simulation.placement import Layout


@lru_cache(maxsize=4096)
def _layout(clients: int, servers: int) -> Layout:
    return Layout(clients, servers)


class _GaussianArrivals:
    """Integer arrival counts whose running total tracks a Gaussian random walk.

    Per-period counts are increments of the running maximum of the rounded
    cumulative sum of N(rate, sd^2) draws. Counts are non-negative integers
    and their long-run mean equals ``rate``; rounding and clamping each
    period's draw separately would inflate the mean whenever sd is
    comparable to rate.
    """

    def __init__(self, rate: float, sd: float):
        self.rate, self.sd = rate, sd
        self.walk = 0.0
        self.emitted = 0

    def draw(self, rng) -> int:
        self.walk += rng.normal(self.rate, self.sd) if self.sd > 0 else self.rate
        target = max(self.emitted, int(math.floor(self.walk + 0.5)))
        count = target - self.emitted
        self.emitted = target
        return count


def _lifetimes(rng, churn: ChurnParams, mean: float, count: int) -> np.ndarray:
    if churn.arrival_model == "gaussian-deterministic":
        return np.full(count, max(1, int(round(mean))), dtype=np.int64)
    # geometric on {1, 2, ...} with the requested mean
    return rng.geometric(min(1.0, 1.0 / max(mean, 1.0)), size=count)


def _trial(rng, churn, servers, threshold, warmup, horizon, lo_fraction):
    gauss = churn.arrival_model == "gaussian-deterministic"
    if gauss:
        sources = (
            _GaussianArrivals(churn.nominal_arrival_rate, churn.nominal_arrival_sd),
            _GaussianArrivals(churn.attacker_arrival_rate, churn.attacker_arrival_sd),
        )
    is_att = np.zeros(0, dtype=bool)
    expire = np.zeros(0, dtype=np.int64)
    born = np.zeros(0, dtype=np.int64)
    good = np.zeros(0, dtype=np.int64)
    done_good, done_life = [], []
    pop_n = pop_a = 0.0
    for t in range(warmup + horizon):
        # retire clients whose lifetime has elapsed
        gone = expire <= t
        if gone.any():
            keep = ~gone
            fin = gone & ~is_att & (born >= warmup)
            done_good.append(good[fin])
            done_life.append((expire - born)[fin])
            is_att, expire, born, good = is_att[keep], expire[keep], born[keep], good[keep]
        counts = []
        for cls, rate, life in (
            (0, churn.nominal_arrival_rate, churn.nominal_mean_lifetime),
            (1, churn.attacker_arrival_rate, churn.attacker_mean_lifetime),
        ):
            n = sources[cls].draw(rng) if gauss else int(rng.poisson(rate))
            counts.append((cls, n, life))
        for cls, n, life in counts:
            if n:
                is_att = np.concatenate([is_att, np.full(n, bool(cls))])
                expire = np.concatenate([expire, t + _lifetimes(rng, churn, life, n)])
                born = np.concatenate([born, np.full(n, t)])
                good = np.concatenate([good, np.zeros(n, dtype=np.int64)])
        total = len(is_att)
        if t >= warmup:
            k = int(is_att.sum())
            pop_a += k
            pop_n += total - k
        if total == 0:
            continue
        layout = _layout(total, servers)
        perm = rng.permutation(total)
        att_slot = is_att[perm].astype(np.int32)
        per = layout.per_server(att_slot[None, :])[0]
        ov_slot = per[layout.slot_server] >= threshold
        ov = np.empty(total, dtype=bool)
        ov[perm] = ov_slot
        good += ~ov
    finished_good = np.concatenate(done_good) if done_good else np.zeros(0, dtype=np.int64)
    finished_life = np.concatenate(done_life) if done_life else np.zeros(0, dtype=np.int64)
    lo = np.array([in_service_threshold(int(s), lo_fraction) for s in finished_life], dtype=np.int64)
    hits = finished_good >= lo
    return {
        "mean_nominal": pop_n / horizon,
        "mean_attackers": pop_a / horizon,
        "in_service_hits": float(hits.sum()),
        "finished": float(len(hits)),
        "fraction_sum": float((finished_good / np.maximum(finished_life, 1)).sum()),
    }


def _kernel(rng, count, churn, servers, threshold, warmup, horizon, percent):
    rows = [_trial(rng, churn, servers, threshold, warmup, horizon, percent) for _ in range(count)]
    return {k: np.array([r[k] for r in rows]) for k in rows[0]}


def simulate_churn(
    servers: int,
    threshold: int,
    churn: ChurnParams,
    warmup: int,
    horizon: int,
    trials: int,
    seed: int,
    percent: float = 50.0,
    workers: int = 1,
) -> dict[str, SimulationOutcome]:
    """Shuffle a changing population over ``servers`` servers each period.

    Per period: retire expired clients, admit arrivals, reshuffle everyone
    with a balanced placement (sizes differ by at most one), and detect
    overload exactly. A nominal client that arrives after ``warmup`` and
    retires within the horizon contributes its in-service fraction over its
    own lifetime. Outcomes:

      ``mean_nominal`` / ``mean_attackers``  time-averaged population after warmup
      ``in_service_likelihood``  share of completed nominal lifetimes in service
                                 for at least ``percent`` % of their periods
      ``in_service_fraction``    mean in-service fraction of those lifetimes
    """
    if horizon < 1:
        raise DomainError(f"horizon must be >= 1, got {horizon}")
    if warmup < 0:
        raise DomainError(f"warmup must be >= 0, got {warmup}")
    if servers < 1 or threshold < 1:
        raise DomainError("servers and threshold must be >= 1")
    if not 0.0 <= percent <= 100.0:
        raise DomainError(f"percent must lie in [0, 100], got {percent!r}")
    raw = run_trials(
        _kernel, trials, seed, workers, block_size=1,
        churn=churn, servers=servers, threshold=threshold, warmup=warmup, horizon=horizon, percent=percent,
    )
    finished = raw["finished"]
    weights = finished if finished.any() else None
    with np.errstate(invalid="ignore", divide="ignore"):
        like = np.where(finished > 0, raw["in_service_hits"] / np.maximum(finished, 1), 1.0)
        frac = np.where(finished > 0, raw["fraction_sum"] / np.maximum(finished, 1), 1.0)
    return {
        "mean_nominal": SimulationOutcome("mean_nominal", raw["mean_nominal"], seed),
        "mean_attackers": SimulationOutcome("mean_attackers", raw["mean_attackers"], seed),
        "in_service_likelihood": SimulationOutcome("in_service_likelihood", like, seed, weights=weights),
        "in_service_fraction": SimulationOutcome("in_service_fraction", frac, seed, weights=weights),
    }
