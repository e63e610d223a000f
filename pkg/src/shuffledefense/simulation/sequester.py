"""Recovery when every server is under attack: sequester, score, quarantine."""

from __future__ import annotations

import math

import numpy as np

from shuffledefense.analytics import ReputationConfig, SystemParams
from shuffledefense.errors import DomainError
from shuffledefense.simulation.engine import SimulationOutcome, run_trials
from shuffledefense.simulation.placement import Layout, client_labels

PLACEMENT_ATTEMPTS = 10_000


def _place(rng, attackers: np.ndarray, servers: int, threshold: int):
    """Shuffle the given clients over all servers.

    Returns per-client overload flags and whether every server is overloaded.
    """
    n = len(attackers)
    if n == 0:
        return np.zeros(0, dtype=bool), False
    layout = Layout(n, servers)
    perm = rng.permutation(n)
    per = layout.per_server(attackers[perm].astype(np.int32)[None, :])[0]
    ov = np.empty(n, dtype=bool)
    ov[perm] = per[layout.slot_server] >= threshold
    return ov, bool((per >= threshold).all())


def _trial(rng, params, fraction, config, q_threshold, rep_rounds, round_cap):
    m, a = params.servers, params.overload_threshold
    labels = client_labels(params)
    n = len(labels)
    for _ in range(PLACEMENT_ATTEMPTS):
        _, all_ov = _place(rng, labels, m, a)
        if all_ov:
            break
    else:
        raise DomainError("could not draw a placement with every server overloaded")
    active = np.ones(n, dtype=bool)
    queued = np.zeros(n, dtype=bool)
    quarantined = np.zeros(n, dtype=bool)
    rep = np.zeros(n)
    batch = max(1, math.ceil(fraction * n))
    rounds = 0
    restored = False
    sequestered = 0
    while rounds < round_cap:
        rounds += 1
        # step 1: queue a random share of the active clients until some server is clean
        while all_ov and active.any():
            idx = np.flatnonzero(active)
            take = rng.choice(idx, size=max(1, math.ceil(fraction * len(idx))), replace=False)
            active[take] = False
            queued[take] = True
            sequestered += len(take)
            _, all_ov = _place(rng, labels[active], m, a)
        # step 2: reputation shuffles among the active clients
        idx = np.flatnonzero(active)
        for _ in range(rep_rounds):
            ov, _ = _place(rng, labels[idx], m, a)
            rep[idx] = config.update(rep[idx], ov)
        # step 3: quarantine low scorers, then readmit a batch from the queue
        bad = idx[rep[idx] < q_threshold]
        active[bad] = False
        quarantined[bad] = True
        waiting = np.flatnonzero(queued)
        if len(waiting):
            back = rng.choice(waiting, size=min(batch, len(waiting)), replace=False)
            queued[back] = False
            active[back] = True
            rep[back] = 0.0
        ov, all_ov = _place(rng, labels[active], m, a)
        if not queued.any() and not ov.any():
            restored = True
            break
    k, u = params.attackers, params.nominal
    return {
        "rounds": rounds,
        "attackers_quarantined": (quarantined & labels).sum() / k,
        "nominals_quarantined": (quarantined & ~labels).sum() / u if u else np.nan,
        "sequestered": sequestered,
        "restored": float(restored),
        "conserved": float(active.sum() + queued.sum() + quarantined.sum() == n),
    }


def _kernel(rng, count, **kw):
    rows = [_trial(rng, **kw) for _ in range(count)]
    return {key: np.array([r[key] for r in rows], dtype=float) for key in rows[0]}


def simulate_sequester_recovery(
    params: SystemParams,
    fraction: float,
    config: ReputationConfig | None = None,
    quarantine_threshold: float = 0.0,
    reputation_rounds: int = 10,
    trials: int = 100,
    seed: int = 0,
    round_cap: int = 100,
    workers: int = 1,
) -> dict[str, SimulationOutcome]:
    """Sequester, score and quarantine until service is restored.

    Starts from a balanced placement in which every server is overloaded
    (rejection sampled). Each round: (1) move a uniform random ``fraction``
    of the active clients to an idle queue until some server is not
    overloaded, (2) run ``reputation_rounds`` shuffle-detection rounds over
    the active clients, (3) quarantine active clients whose reputation is
    below ``quarantine_threshold`` and readmit ``ceil(fraction * (U + K))``
    queued clients with reputation reset to 0. Service is restored once the
    queue is empty and no server is overloaded; runs hitting ``round_cap``
    count as truncated.

    Outcomes: ``rounds``, ``attackers_quarantined`` (share of K),
    ``nominals_quarantined`` (share of U, NaN when U = 0), ``sequestered``
    (total queue insertions) and ``restored`` (0/1).
    """
    if params.attackers < params.servers * params.overload_threshold:
        raise DomainError(
            "every server overloaded needs K >= M * A "
            f"({params.attackers} < {params.servers * params.overload_threshold})"
        )
    if not 0.0 < fraction < 1.0:
        raise DomainError(f"fraction must lie in (0, 1), got {fraction!r}")
    if reputation_rounds < 1:
        raise DomainError(f"reputation_rounds must be >= 1, got {reputation_rounds}")
    config = config or ReputationConfig()
    raw = run_trials(
        _kernel, trials, seed, workers, block_size=10,
        params=params, fraction=fraction, config=config, q_threshold=quarantine_threshold,
        rep_rounds=reputation_rounds, round_cap=round_cap,
    )
    truncated = int((raw["restored"] == 0).sum())
    out = {
        key: SimulationOutcome(key, raw[key], seed)
        for key in ("attackers_quarantined", "nominals_quarantined", "sequestered", "restored", "conserved")
    }
    out["rounds"] = SimulationOutcome("rounds", raw["rounds"], seed, truncated=truncated)
    return out
