"""m-ary fission: split overloaded containers until attackers are isolated."""

from __future__ import annotations

import math

import numpy as np

from shuffledefense.errors import DomainError
from shuffledefense.simulation.engine import SimulationOutcome, run_trials


def split_counts(rng, attackers: int, clients: int, arity: int) -> list[tuple[int, int]]:
    """Divide a container uniformly at random into ``arity`` near-equal parts.

    Returns ``(attackers, clients)`` per non-empty part; the first
    ``clients % arity`` parts take one extra client.
    """
    base, extra = divmod(clients, arity)
    parts = []
    rem_a, rem_n = attackers, clients - attackers
    for j in range(arity):
        size = base + (j < extra)
        if size == 0:
            continue
        a = int(rng.hypergeometric(rem_a, rem_n, size))
        parts.append((a, size))
        rem_a -= a
        rem_n -= size - a
    return parts


def _trial(rng, clients, attackers, arity, capacity, round_cap):
    live = [(attackers, clients)] if attackers else []
    liberated = [] if attackers else [clients]
    spun = 0
    rounds = 0
    while any(a < n for a, n in live):
        if rounds == round_cap:
            break
        rounds += 1
        freed = 0
        nxt = []
        for a, n in live:
            if a == n:
                # attacker-only containers stay quarantined
                nxt.append((a, n))
                continue
            spun += arity - 1
            for pa, pn in split_counts(rng, a, n, arity):
                if pa == 0:
                    freed += pn
                else:
                    nxt.append((pa, pn))
        live = nxt
        liberated.append(freed)
    total = sum(liberated)
    return {
        "rounds": rounds,
        "containers_spun": spun,
        "liberated": total,
        "clean_containers": math.ceil(total / capacity),
        "quarantine_containers": len(live),
        "truncated": any(a < n for a, n in live),
        "per_round": liberated,
    }


def _kernel(rng, count, clients, attackers, arity, capacity, round_cap):
    rows = [_trial(rng, clients, attackers, arity, capacity, round_cap) for _ in range(count)]
    # part sizes at least halve each round, so ceil(log2 N) rounds always suffice
    width = min(round_cap, math.ceil(math.log2(clients))) + 1
    per_round = np.zeros((count, width))
    for i, r in enumerate(rows):
        per_round[i, : len(r["per_round"])] = r["per_round"]
    out = {k: np.array([r[k] for r in rows], dtype=float) for k in rows[0] if k != "per_round"}
    out["per_round"] = per_round
    return out


def simulate_fission(
    initial_clients: int,
    initial_attackers: int,
    arity: int,
    capacity: int,
    trials: int,
    seed: int,
    round_cap: int = 1000,
    workers: int = 1,
) -> dict[str, SimulationOutcome]:
    """Repeatedly split every container holding an attacker into ``arity`` parts.

    A single attacker overloads a replica. Parts with no attacker liberate
    their nominal clients; liberated clients are packed greedily into
    ``ceil(liberated / capacity)`` clean containers. The process ends when
    every remaining container holds attackers only. Outcomes: ``rounds``,
    ``containers_spun`` (``arity - 1`` per split), ``liberated``,
    ``clean_containers``, ``quarantine_containers`` and
    ``liberated_per_round`` (column r = nominals freed in round r + 1; with
    no attackers column 0 holds everyone and ``rounds`` is 0).
    """
    if arity < 2:
        raise DomainError(f"arity must be >= 2, got {arity}")
    if capacity < 1:
        raise DomainError(f"capacity must be >= 1, got {capacity}")
    if initial_clients < 1 or not 0 <= initial_attackers <= initial_clients:
        raise DomainError("need 0 <= initial_attackers <= initial_clients and at least one client")
    raw = run_trials(
        _kernel, trials, seed, workers, block_size=100,
        clients=initial_clients, attackers=initial_attackers, arity=arity, capacity=capacity, round_cap=round_cap,
    )
    out = {
        k: SimulationOutcome(k, raw[k], seed)
        for k in ("rounds", "containers_spun", "liberated", "clean_containers", "quarantine_containers")
    }
    out["liberated_per_round"] = SimulationOutcome("liberated_per_round", raw["per_round"], seed)
    out["rounds"] = SimulationOutcome("rounds", raw["rounds"], seed, truncated=int(raw["truncated"].sum()))
    return out
