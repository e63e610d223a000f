"""Quarantine shuffling: only overloaded servers reshuffle, among themselves."""

from __future__ import annotations

import numpy as np

from shuffledefense.analytics import QuarantineParams
from shuffledefense.simulation.engine import SimulationOutcome, check_population, run_trials
from shuffledefense.simulation.placement import Layout


def redistribute(rng, att, nom, pool):
    """Uniformly reshuffle the clients of the ``pool`` servers among themselves.

    ``att``/``nom`` are (trials, servers) counts, updated in place. Pool sizes
    are balanced to within one client. Server contents are drawn one server
    at a time from the remaining pooled clients (sequential hypergeometric),
    which is equivalent to a uniform random permutation of the pool.
    """
    rows = np.arange(att.shape[0])
    m_pool = pool.sum(axis=1)
    rem_a = np.where(pool, att, 0).sum(axis=1)
    rem_n = np.where(pool, nom, 0).sum(axis=1)
    total = rem_a + rem_n
    safe = np.maximum(m_pool, 1)
    base, extra = total // safe, total % safe
    # pool servers first, in index order
    order = np.argsort(~pool, axis=1, kind="stable")
    for r in range(int(m_pool.max(initial=0))):
        live = r < m_pool
        idx = order[:, r]
        size = np.where(live, base + (r < extra), 0)
        a = rng.hypergeometric(rem_a, rem_n, size)
        att[rows[live], idx[live]] = a[live]
        nom[rows[live], idx[live]] = (size - a)[live]
        rem_a = rem_a - a
        rem_n = rem_n - (size - a)


def _kernel(rng, count, q: QuarantineParams, population: str):
    base = q.base
    m, h, a = base.servers, q.hot_spares, base.overload_threshold
    width = m + h
    att = np.zeros((count, width), dtype=np.int64)
    nom = np.zeros((count, width), dtype=np.int64)
    if population == "finite":
        att[:, 0] = base.attackers
        nom[:, 0] = base.nominal
        active = np.zeros(width, dtype=bool)
        active[:m] = True
        redistribute(rng, att, nom, np.broadcast_to(active, (count, width)))
    else:
        sizes = Layout(base.clients, m).sizes
        att[:, :m] = rng.binomial(np.broadcast_to(sizes, (count, m)), base.attacker_fraction)
        nom[:, :m] = sizes - att[:, :m]
    stages = q.stages + 1
    liberated = np.zeros((count, stages))
    clean = np.zeros((count, stages))
    overloaded = np.zeros((count, stages))
    spare = np.zeros(width, dtype=bool)
    spare[m:] = True
    for s in range(stages):
        ov = att >= a
        if s:
            pool = ov | spare if s == 1 else ov
            redistribute(rng, att, nom, pool)
            ov = att >= a
        liberated[:, s] = np.where(ov, 0, nom).sum(axis=1)
        clean[:, s] = np.where(ov, 0, att + nom).sum(axis=1)
        overloaded[:, s] = ov.sum(axis=1)
    return {
        "liberated": liberated,
        "clean": clean,
        "overloaded": overloaded,
        "nominals": nom.sum(axis=1).astype(float),
    }


def simulate_quarantine(
    q: QuarantineParams,
    trials: int,
    seed: int,
    population: str = "finite",
    workers: int = 1,
) -> dict[str, SimulationOutcome]:
    """Initial balanced placement followed by ``q.stages`` quarantine stages.

    Each stage detects overload exactly and reshuffles the union of the
    overloaded servers' clients among those servers. The ``hot_spares``
    empty standby servers join the pool at the first stage; afterwards they
    are ordinary servers. Samples have one column per stage, column 0 being
    the initial placement:

      ``liberated_nominals``   nominal clients in non-overloaded servers
      ``liberated_fraction``   the same over all nominal clients
      ``clean_clients``        all clients in non-overloaded servers
      ``overloaded_servers``   number of overloaded servers
    """
    check_population(population)
    raw = run_trials(_kernel, trials, seed, workers, q=q, population=population)
    nominals = raw["nominals"]
    with np.errstate(invalid="ignore", divide="ignore"):
        frac = np.where(nominals[:, None] > 0, raw["liberated"] / np.maximum(nominals, 1)[:, None], 1.0)
    return {
        "liberated_nominals": SimulationOutcome("liberated_nominals", raw["liberated"], seed),
        "liberated_fraction": SimulationOutcome(
            "liberated_fraction", frac, seed, weights=nominals if nominals.any() else None
        ),
        "clean_clients": SimulationOutcome("clean_clients", raw["clean"], seed),
        "overloaded_servers": SimulationOutcome("overloaded_servers", raw["overloaded"], seed),
    }
