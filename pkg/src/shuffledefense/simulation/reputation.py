"""Reputation rounds: shuffle, detect, and score every client."""

from __future__ import annotations

import numpy as np

from shuffledefense.analytics import ReputationConfig, SystemParams
from shuffledefense.errors import DomainError
from shuffledefense.simulation.engine import SimulationOutcome, check_population, run_trials
from shuffledefense.simulation.placement import Layout, client_labels, overloaded_clients
from shuffledefense.simulation.proactive import tagged_exposure

_KEYS = (
    "nominal_negative",
    "nominal_zero",
    "nominal_positive",
    "attacker_positive",
    "attacker_zero",
    "attacker_negative",
    "nominal_mean",
    "attacker_mean",
)


def _score(config, hits):
    """Final reputation after feeding the per-round overload flags (last axis)."""
    rep = np.zeros(hits.shape[:-1])
    for s in range(hits.shape[-1]):
        rep = config.update(rep, hits[..., s])
    return rep


def _summaries(nom, att):
    # nom/att: (trials, clients_of_class) final reputations; empty classes give nan
    def frac(x, cond):
        return cond.mean(axis=1) if x.shape[1] else np.full(x.shape[0], np.nan)

    return {
        "nominal_negative": frac(nom, nom < 0),
        "nominal_zero": frac(nom, nom == 0),
        "nominal_positive": frac(nom, nom > 0),
        "attacker_positive": frac(att, att > 0),
        "attacker_zero": frac(att, att == 0),
        "attacker_negative": frac(att, att < 0),
        "nominal_mean": nom.mean(axis=1) if nom.shape[1] else np.full(nom.shape[0], np.nan),
        "attacker_mean": att.mean(axis=1) if att.shape[1] else np.full(att.shape[0], np.nan),
    }


def _finite_kernel(rng, count, params, shuffles, config):
    layout = Layout(params.clients, params.servers)
    labels = np.broadcast_to(client_labels(params), (count, params.clients))
    rep = np.zeros((count, params.clients))
    for _ in range(shuffles):
        ov = overloaded_clients(rng, labels, layout, params.overload_threshold)
        rep = config.update(rep, ov)
    return _summaries(rep[:, : params.nominal], rep[:, params.nominal :])


def _binomial_kernel(rng, count, params, shuffles, config):
    # one tagged client of each class per trial
    nom = _score(config, tagged_exposure(rng, params, (count, 1, shuffles)))
    if params.attackers:
        att = _score(config, tagged_exposure(rng, params, (count, 1, shuffles), attacker=True))
    else:
        att = np.zeros((count, 0))
    if not params.nominal:
        nom = np.zeros((count, 0))
    return _summaries(nom, att)


def simulate_reputation(
    params: SystemParams,
    shuffles: int,
    config: ReputationConfig | None = None,
    trials: int = 10_000,
    seed: int = 0,
    population: str = "finite",
    workers: int = 1,
) -> dict[str, SimulationOutcome]:
    """Run ``shuffles`` shuffle-detection rounds and report final reputations.

    Every round reshuffles all clients over all servers, detects overload
    exactly, and updates every client once, so a client sees exactly
    ``shuffles`` assessments. Per-trial class shares are reported as
    ``nominal_negative`` (false positives), ``nominal_zero``,
    ``nominal_positive``, ``attacker_positive`` (false negatives),
    ``attacker_zero`` and ``attacker_negative``, plus class means.
    A class with no members yields NaN samples.
    """
    check_population(population)
    if shuffles < 1:
        raise DomainError(f"shuffles must be >= 1, got {shuffles}")
    config = config or ReputationConfig()
    kernel = _finite_kernel if population == "finite" else _binomial_kernel
    raw = run_trials(kernel, trials, seed, workers, params=params, shuffles=shuffles, config=config)
    return {k: SimulationOutcome(k, raw[k], seed) for k in _KEYS}


def autoregressive_path(config: ReputationConfig, overloaded, start: float = 0.0) -> np.ndarray:
    """Reputation trajectory of one client for a given sequence of overload flags."""
    path = [start]
    for hit in overloaded:
        path.append(float(config.update(path[-1], hit)))
    return np.array(path)
