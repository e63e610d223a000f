"""Seeded Monte Carlo simulation of shuffling procedures."""

from shuffledefense.simulation.churn import simulate_churn
from shuffledefense.simulation.engine import BLOCK_SIZE, POPULATIONS, SimulationOutcome, run_trials
from shuffledefense.simulation.fission import simulate_fission
from shuffledefense.simulation.placement import (
    ClientRecord,
    ServerState,
    assign_uniform,
    build_servers,
    simulate_placement,
)
from shuffledefense.simulation.proactive import simulate_proactive
from shuffledefense.simulation.quarantine import simulate_quarantine
from shuffledefense.simulation.reputation import autoregressive_path, simulate_reputation
from shuffledefense.simulation.sequester import simulate_sequester_recovery

__all__ = [
    "BLOCK_SIZE",
    "POPULATIONS",
    "ClientRecord",
    "ServerState",
    "SimulationOutcome",
    "assign_uniform",
    "autoregressive_path",
    "build_servers",
    "run_trials",
    "simulate_churn",
    "simulate_fission",
    "simulate_placement",
    "simulate_proactive",
    "simulate_quarantine",
    "simulate_reputation",
    "simulate_sequester_recovery",
]
