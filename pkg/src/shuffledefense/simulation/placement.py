"""Balanced random client-to-server placement and overload detection."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from shuffledefense.analytics import SystemParams, balanced_sizes
from shuffledefense.errors import DomainError
from shuffledefense.simulation.engine import SimulationOutcome, check_population, run_trials

NOMINAL = "nominal"
ATTACKER = "attacker"


@dataclass
class ClientRecord:
    id: int
    cls: str
    reputation: float = 0.0
    server: int = -1
    remaining_lifetime: int | None = None

    @property
    def is_attacker(self) -> bool:
        return self.cls == ATTACKER


@dataclass
class ServerState:
    id: int
    clients: set = field(default_factory=set)
    role: str = "active"
    attackers: int = 0
    threshold: int = 1

    @property
    def overloaded(self) -> bool:
        return self.attackers >= self.threshold


class Layout:
    """Slot structure of a balanced placement of ``clients`` over ``servers``."""

    def __init__(self, clients: int, servers: int, exact: bool = False):
        if exact and clients % servers:
            raise DomainError(f"{clients} clients cannot be split evenly over {servers} servers")
        self.clients = clients
        self.servers = servers
        pairs = balanced_sizes(clients, servers)
        self.sizes = np.concatenate([np.full(c, s, dtype=np.int64) for s, c in pairs])
        self.slot_server = np.repeat(np.arange(servers), self.sizes)
        self.starts = np.concatenate([[0], np.cumsum(self.sizes)[:-1]])
        self.slot_size = self.sizes[self.slot_server]

    def per_server(self, slot_values: np.ndarray) -> np.ndarray:
        """Sum a (trials, slots) array within each server."""
        if self.clients == 0:
            return np.zeros(slot_values.shape[:-1] + (self.servers,), dtype=slot_values.dtype)
        empty = self.sizes == 0
        if empty.any():
            # pad so the starts of empty trailing servers stay in bounds
            pad = np.zeros(slot_values.shape[:-1] + (1,), dtype=slot_values.dtype)
            slot_values = np.concatenate([slot_values, pad], axis=-1)
        out = np.add.reduceat(slot_values, self.starts, axis=-1)
        # reduceat of an empty server returns the element at its start
        out[..., empty] = 0
        return out


def assign_uniform(
    clients: Sequence[ClientRecord] | int,
    servers: int,
    rng: np.random.Generator,
    relaxed: bool = False,
) -> np.ndarray:
    """Uniformly random balanced placement; returns the server index per client.

    Exact mode needs ``len(clients) % servers == 0``; relaxed mode spreads
    the remainder so server sizes differ by at most one. ClientRecords get
    their ``server`` field updated.
    """
    count = clients if isinstance(clients, int) else len(clients)
    layout = Layout(count, servers, exact=not relaxed)
    assignment = np.empty(count, dtype=np.int64)
    assignment[rng.permutation(count)] = layout.slot_server
    if not isinstance(clients, int):
        for rec, srv in zip(clients, assignment):
            rec.server = int(srv)
    return assignment


def build_servers(clients: Sequence[ClientRecord], assignment: np.ndarray, servers: int, threshold: int) -> list[ServerState]:
    states = [ServerState(i, threshold=threshold) for i in range(servers)]
    for rec, srv in zip(clients, assignment):
        states[srv].clients.add(rec.id)
        states[srv].attackers += rec.is_attacker
    return states


def make_population(params: SystemParams) -> list[ClientRecord]:
    """Nominal clients get ids 0..U-1, attackers U..U+K-1."""
    return [ClientRecord(i, NOMINAL if i < params.nominal else ATTACKER) for i in range(params.clients)]


def client_labels(params: SystemParams) -> np.ndarray:
    labels = np.zeros(params.clients, dtype=bool)
    labels[params.nominal :] = True
    return labels


def overloaded_clients(
    rng: np.random.Generator, labels: np.ndarray, layout: Layout, threshold: int
) -> np.ndarray:
    """One reshuffle of every trial's population; True where a client's server is overloaded.

    ``labels`` has shape (trials, clients) with True marking attackers.
    """
    trials, n = labels.shape
    perm = rng.permuted(np.broadcast_to(np.arange(n), (trials, n)), axis=1)
    at_slot = np.take_along_axis(labels, perm, axis=1)
    counts = layout.per_server(at_slot.astype(np.int32))
    ov_slot = counts[:, layout.slot_server] >= threshold
    out = np.empty_like(ov_slot)
    np.put_along_axis(out, perm, ov_slot, axis=1)
    return out


def _placement_kernel(rng, count, params: SystemParams, population: str):
    layout = Layout(params.clients, params.servers)
    n = params.clients
    a = params.overload_threshold
    if population == "finite":
        base = np.broadcast_to(client_labels(params), (count, n))
        slots = rng.permuted(base, axis=1)
    else:
        # client classes are i.i.d. per placement, so slot order is irrelevant
        slots = rng.random((count, n)) < params.attacker_fraction
    att = layout.per_server(slots.astype(np.int32))
    nom = layout.sizes - att
    ov = att >= a
    hist = np.zeros((count, int(layout.sizes.max()) + 1))
    rows = np.repeat(np.arange(count), params.servers)
    np.add.at(hist, (rows, att.ravel()), 1.0)
    return {
        "server_overload": ov.mean(axis=1),
        "exposed_nominals": (nom * ov).sum(axis=1).astype(float),
        "nominals": nom.sum(axis=1).astype(float),
        "covered_attackers": (att * ~ov).sum(axis=1).astype(float),
        "attackers": att.sum(axis=1).astype(float),
        "clean_clients": (layout.sizes * ~ov).sum(axis=1).astype(float),
        "attacker_histogram": hist / params.servers,
    }


def _ratio(name, num, den, seed):
    with np.errstate(invalid="ignore", divide="ignore"):
        x = np.where(den > 0, num / np.where(den > 0, den, 1), 0.0)
    return SimulationOutcome(name, x, seed, weights=den)


def simulate_placement(
    params: SystemParams,
    trials: int,
    seed: int,
    population: str = "finite",
    workers: int = 1,
) -> dict[str, SimulationOutcome]:
    """Independent balanced placements, summarised per placement.

    Outcomes: ``server_overload`` (Omega), ``nominal_exposure`` (omega),
    ``attacker_cover`` (beta), ``clean_clients`` (L0) and
    ``attacker_histogram`` (fraction of servers holding i attackers).

    ``population="finite"`` places exactly U nominal and K attacker clients;
    ``"binomial"`` draws every client's class independently with attacker
    probability K / (U + K), the population the closed forms describe.
    """
    check_population(population)
    raw = run_trials(_placement_kernel, trials, seed, workers, params=params, population=population)
    return {
        "server_overload": SimulationOutcome("server_overload", raw["server_overload"], seed),
        "nominal_exposure": _ratio("nominal_exposure", raw["exposed_nominals"], raw["nominals"], seed),
        "attacker_cover": _ratio("attacker_cover", raw["covered_attackers"], raw["attackers"], seed),
        "clean_clients": SimulationOutcome("clean_clients", raw["clean_clients"], seed),
        "attacker_histogram": SimulationOutcome("attacker_histogram", raw["attacker_histogram"], seed),
    }
