"""Proactive shuffling: every client is reshuffled each shuffle-period."""

from __future__ import annotations

import numpy as np

from shuffledefense.analytics import SystemParams, in_service_threshold
from shuffledefense.errors import DomainError
from shuffledefense.simulation.engine import SimulationOutcome, check_population, run_trials
from shuffledefense.simulation.placement import Layout, client_labels, overloaded_clients

ROUND_CAP = 10_000


def tagged_exposure(rng, params: SystemParams, shape, attacker: bool = False, population: str = "binomial"):
    """Overload indicator of tagged clients after independent reshuffles.

    Each entry is a fresh placement: the tagged client's slot is uniform, so
    its server size follows the balanced layout, and its co-residents are the
    other clients of that server. ``population="binomial"`` draws their
    classes independently; ``"finite"`` samples them without replacement from
    the fixed population.
    """
    layout = Layout(params.clients, params.servers)
    size = layout.slot_size[rng.integers(0, params.clients, size=shape)]
    peers = size - 1
    if population == "binomial":
        co = rng.binomial(peers, params.attacker_fraction)
    else:
        good = params.attackers - attacker
        bad = params.nominal - (not attacker)
        co = rng.hypergeometric(np.full(shape, good), np.full(shape, bad), peers)
    need = params.overload_threshold - 1 if attacker else params.overload_threshold
    return co >= need


def _runs_until_clear(draw, count: int, cap: int):
    """Overloaded rounds before the first in-service round, one per history."""
    runs = np.zeros(count, dtype=np.int64)
    open_ = np.ones(count, dtype=bool)
    rounds = 0
    while open_.any() and rounds < cap:
        hit = draw(int(open_.sum()))
        idx = np.flatnonzero(open_)
        runs[idx[hit]] += 1
        open_[idx[~hit]] = False
        rounds += 1
    return runs, open_


def _binomial_kernel(rng, count, params, shuffles, lo, tracked, runs, cap):
    exposed = tagged_exposure(rng, params, (count, tracked, shuffles))
    good = (~exposed).sum(axis=2)
    out = {
        "in_service": (good >= lo).mean(axis=1),
        "fraction": (good / shuffles).mean(axis=1),
        "exposure": exposed.mean(axis=(1, 2)),
        "trajectory": exposed.mean(axis=1),
    }
    if runs:
        draw = lambda n: tagged_exposure(rng, params, (n,))
        r, open_ = _runs_until_clear(draw, count * tracked, cap)
        out["runs"] = r
        out["open"] = open_
    return out


def _finite_kernel(rng, count, params, shuffles, lo, tracked, runs, cap):
    layout = Layout(params.clients, params.servers)
    labels = np.broadcast_to(client_labels(params), (count, params.clients))
    nominal = slice(0, params.nominal)
    good = np.zeros((count, params.nominal), dtype=np.int64)
    traj = np.zeros((count, shuffles))
    for s in range(shuffles):
        ov = overloaded_clients(rng, labels, layout, params.overload_threshold)[:, nominal]
        good += ~ov
        traj[:, s] = ov.mean(axis=1)
    out = {
        "in_service": (good >= lo).mean(axis=1),
        "fraction": (good / shuffles).mean(axis=1),
        "exposure": traj.mean(axis=1),
        "trajectory": traj,
    }
    if runs:
        # histories of the first ``tracked`` nominal clients, reshuffling the
        # whole population until every tracked client has been in service
        r = np.zeros((count, tracked), dtype=np.int64)
        open_ = np.ones((count, tracked), dtype=bool)
        rounds = 0
        while open_.any() and rounds < cap:
            live = np.flatnonzero(open_.any(axis=1))
            ov = overloaded_clients(rng, labels[live], layout, params.overload_threshold)[:, :tracked]
            sub = open_[live]
            r[live] += sub & ov
            open_[live] = sub & ov
            rounds += 1
        out["runs"] = r.ravel()
        out["open"] = open_.ravel()
    return out


def simulate_proactive(
    params: SystemParams,
    shuffles: int,
    trials: int,
    seed: int,
    percent: float = 50.0,
    population: str = "finite",
    runs: bool = False,
    tracked: int = 1,
    workers: int = 1,
    round_cap: int = ROUND_CAP,
) -> dict[str, SimulationOutcome]:
    """Reshuffle all clients ``shuffles`` times per trial and track nominal clients.

    Outcomes:
      ``in_service_prob``  share of nominal clients in service for at least
                           ``percent`` % of the shuffles
      ``in_service_fraction``  mean fraction of in-service rounds
      ``exposure``         fraction of (client, round) pairs spent overloaded;
                           its trajectory holds the per-round values
      ``outage_run``       (``runs=True``) overloaded rounds a tracked client
                           sees before its first in-service round, counted
                           past ``shuffles`` until resolved or ``round_cap``

    In finite mode every nominal client of the trial contributes to the
    in-service metrics, and the first ``tracked`` nominal clients give the
    outage histories. In binomial mode ``tracked`` independent tagged
    clients are followed per trial.
    """
    check_population(population)
    if shuffles < 1:
        raise DomainError(f"shuffles must be >= 1, got {shuffles}")
    if not 0.0 <= percent <= 100.0:
        raise DomainError(f"percent must lie in [0, 100], got {percent!r}")
    if params.nominal < 1:
        raise DomainError("need at least one nominal client")
    if not 1 <= tracked <= params.nominal:
        raise DomainError(f"tracked must lie in 1..{params.nominal}, got {tracked}")
    lo = in_service_threshold(shuffles, percent)
    kernel = _finite_kernel if population == "finite" else _binomial_kernel
    raw = run_trials(
        kernel, trials, seed, workers,
        params=params, shuffles=shuffles, lo=lo, tracked=tracked, runs=runs, cap=round_cap,
    )
    out = {
        "in_service_prob": SimulationOutcome("in_service_prob", raw["in_service"], seed),
        "in_service_fraction": SimulationOutcome("in_service_fraction", raw["fraction"], seed),
        "exposure": SimulationOutcome(
            "exposure", raw["exposure"], seed, trajectory=raw["trajectory"].mean(axis=0)
        ),
    }
    if runs:
        r = raw["runs"].astype(float)
        out["outage_run"] = SimulationOutcome(
            "outage_run",
            r,
            seed,
            truncated=int(raw["open"].sum()),
            extra={"histogram": np.bincount(raw["runs"])},
        )
    return out
