"""Figure presets: the tables behind each reproduced plot.

Every preset is a pure function of its keyword parameters (including the
seed), returning a :class:`ResultTable` with analytic columns and, where a
simulation exists, simulated columns with standard errors.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from shuffledefense import analytics as an
from shuffledefense.errors import ConfigError
from shuffledefense.mtd import MtdParams, unknown_proxies_curve
from shuffledefense.scenario.table import ResultTable
from shuffledefense.simulation import (
    SimulationOutcome,
    simulate_churn,
    simulate_proactive,
    simulate_quarantine,
    simulate_reputation,
)

SERVER_GRID = (50, 60, 75, 80, 100, 120, 150, 200, 240, 300, 400, 600)
ATTACKER_GRID = tuple(range(10, 1001, 10))
QUARANTINE_ATTACKERS = (25, 50, 100, 200, 400, 800)
CHURN_SERVERS = (100, 120, 150, 200, 240, 300, 400, 600)
Z_GRID = tuple(float(z) for z in np.logspace(-2, 3, 26))


def _sims(trials, fallback):
    return fallback if trials is None else trials


def in_service_vs_servers(
    trials=None, seed=0, workers=1, nominal=1000, attackers=200, threshold=1, shuffles=10,
    percent=50.0, servers=SERVER_GRID,
):
    trials = _sims(trials, 10_000)
    table = ResultTable(["M", "analytic", "simulated", "std_error", "trials", "seed"])
    for i, m in enumerate(servers):
        p = an.SystemParams(m, nominal, attackers, threshold)
        sim = simulate_proactive(p, shuffles, trials, seed + i, percent, population="binomial", workers=workers)
        out = sim["in_service_prob"]
        table.add(m, an.in_service_prob(p, shuffles, percent), out.mean, out.std_error, trials, seed + i)
    return table


def _bound_table(kind, trials, seed, workers, nominal, servers, thresholds, attackers, k_conf, limit):
    trials = _sims(trials, 10_000)
    prob_name = "omega" if kind == "nominal" else "beta"
    table = ResultTable(
        ["K", "A", prob_name, "bound", "shuffles", "simulated", "std_error", "trials", "seed"]
    )
    i = 0
    for a in thresholds:
        for k in attackers:
            p = an.SystemParams(servers, nominal, k, a)
            if kind == "nominal":
                q, bound = an.nominal_exposure_prob(p), an.nominal_shuffle_bound(p, k_conf)
            else:
                q, bound = an.attacker_cover_prob(p), an.attacker_shuffle_bound(p, k_conf)
            sim = se = s = None
            if q < limit and not isinstance(bound, an.Infeasible):
                s = max(1, math.ceil(bound))
                rep = simulate_reputation(p, s, trials=trials, seed=seed + i, population="binomial", workers=workers)
                out = rep["nominal_positive"] if kind == "nominal" else rep["attacker_negative"]
                sim, se = out.mean, out.std_error
            table.add(k, a, q, bound, s, sim, se, trials if sim is not None else None, seed + i)
            i += 1
    return table


def reputation_nominal_bound(
    trials=None, seed=0, workers=1, nominal=1000, servers=100, thresholds=(1, 2, 3),
    attackers=ATTACKER_GRID, k_conf=2.0, limit=0.45,
):
    """Shuffles needed to deem a client nominal; ``simulated`` is P(R_n > 0)
    after ``ceil(bound)`` shuffles, evaluated where omega < ``limit``."""
    return _bound_table("nominal", trials, seed, workers, nominal, servers, thresholds, attackers, k_conf, limit)


def reputation_attacker_bound(
    trials=None, seed=0, workers=1, nominal=1000, servers=100, thresholds=(2, 3),
    attackers=ATTACKER_GRID, k_conf=2.0, limit=0.45,
):
    """Shuffles needed to deem a client an attacker; ``simulated`` is P(R_a < 0)."""
    return _bound_table("attacker", trials, seed, workers, nominal, servers, thresholds, attackers, k_conf, limit)


def _error_table(kind, trials, seed, workers, nominal, servers, thresholds, attackers, shuffles):
    trials = _sims(trials, 10_000)
    table = ResultTable(
        [
            "K", "A", "analytic", "simulated", "std_error",
            "analytic_strict", "simulated_strict", "std_error_strict", "trials", "seed",
        ]
    )
    i = 0
    for a in thresholds:
        for k in attackers:
            p = an.SystemParams(servers, nominal, k, a)
            rep = simulate_reputation(p, shuffles, trials=trials, seed=seed + i, population="binomial", workers=workers)
            if kind == "fp":
                exact = an.false_positive_rate(p, shuffles)
                strict = an.false_positive_rate(p, shuffles, include_ties=False)
                main, tie = rep["nominal_negative"], rep["nominal_zero"]
            else:
                exact = an.false_negative_rate(p, shuffles)
                strict = an.false_negative_rate(p, shuffles, include_ties=False)
                main, tie = rep["attacker_positive"], rep["attacker_zero"]
            both = SimulationOutcome("with_ties", main.samples + tie.samples, seed + i)
            table.add(k, a, exact, both.mean, both.std_error, strict, main.mean, main.std_error, trials, seed + i)
            i += 1
    return table


def false_positive(
    trials=None, seed=0, workers=1, nominal=1000, servers=100, thresholds=(1, 2, 3),
    attackers=ATTACKER_GRID, shuffles=10,
):
    """``analytic``/``simulated`` count a zero reputation as an error; the
    ``_strict`` columns are P(R_n < 0)."""
    return _error_table("fp", trials, seed, workers, nominal, servers, thresholds, attackers, shuffles)


def false_negative(
    trials=None, seed=0, workers=1, nominal=1000, servers=100, thresholds=(2, 3),
    attackers=ATTACKER_GRID, shuffles=10,
):
    """As :func:`false_positive` for attackers; ``_strict`` is P(R_a > 0)."""
    return _error_table("fn", trials, seed, workers, nominal, servers, thresholds, attackers, shuffles)


def quarantine_servers(clients: int, min_servers: int = 10) -> list[int]:
    """Server counts that divide the population and leave at least two clients each."""
    return [m for m in range(min_servers, clients // 2 + 1) if clients % m == 0]


def quarantine_gain(
    trials=None, seed=0, workers=1, nominal=1000, threshold=1, hot_spares=0,
    attackers=QUARANTINE_ATTACKERS, servers=None, simulate=True,
):
    """Liberated nominal fraction before (stage 0) and after one quarantine
    shuffle (stage 1), per (K, M). ``servers=None`` uses every divisor of
    U + K with at least two clients per server."""
    trials = _sims(trials, 2_000)
    table = ResultTable(
        [
            "K", "M", "stage0", "stage1", "gain",
            "sim_stage0", "sim_stage1", "sim_gain", "std_error", "trials", "seed",
        ]
    )
    i = 0
    for k in attackers:
        grid = servers if servers is not None else quarantine_servers(nominal + k)
        for m in grid:
            base = an.SystemParams(m, nominal, k, threshold)
            if not base.exact:
                continue
            q = an.QuarantineParams(base, hot_spares, 1)
            freed = an.quarantine_one_shuffle_freed(q)
            # with A = 1 every clean-server client is nominal; otherwise scale by the nominal share
            share = 1.0 if threshold == 1 else nominal / base.clients
            s0, s1 = share * freed.baseline / nominal, share * freed.expected / nominal
            row = [k, m, s0, s1, s1 - s0]
            if simulate:
                out = simulate_quarantine(q, trials, seed + i, population="binomial", workers=workers)
                frac = out["liberated_fraction"]
                g = frac.samples[:, 1] - frac.samples[:, 0]
                gain = SimulationOutcome("gain", g, seed + i, weights=frac.weights)
                row += [frac.mean[0], frac.mean[1], gain.mean, gain.std_error, trials, seed + i]
            else:
                row += [None, None, None, None, None, None]
            table.add(*row)
            i += 1
    return table


def mtd_unknown_constant(trials=None, seed=0, workers=1, proxies=10, z_grid=Z_GRID, reset_rate=1.0):
    """M - E V for the constant discovery rate: closed form and numeric solve."""
    table = ResultTable(["z", "unknown_closed_form", "unknown_numeric"])
    closed = unknown_proxies_curve(MtdParams(proxies, 0.0, reset_rate, "constant"), z_grid)
    numeric = _numeric_curve(proxies, reset_rate, "constant", z_grid)
    for (z, c), n in zip(closed, numeric):
        table.add(z, c, n)
    return table


def _numeric_curve(proxies, reset_rate, model, z_grid):
    from shuffledefense.mtd import build_generator, expected_known_proxies, stationary_distribution

    out = []
    for z in z_grid:
        params = MtdParams(proxies, z * reset_rate, reset_rate, model)
        out.append(proxies - expected_known_proxies(stationary_distribution(build_generator(params))))
    return out


def mtd_unknown_linear(trials=None, seed=0, workers=1, proxies=10, z_grid=Z_GRID, reset_rate=1.0):
    """M - E V when discovery slows as proxies become known, next to the constant model."""
    table = ResultTable(["z", "unknown_linear", "unknown_linear_normalized", "unknown_constant"])
    lin = unknown_proxies_curve(MtdParams(proxies, 0.0, reset_rate, "linear-remaining"), z_grid)
    norm = unknown_proxies_curve(MtdParams(proxies, 0.0, reset_rate, "linear-remaining-normalized"), z_grid)
    const = unknown_proxies_curve(MtdParams(proxies, 0.0, reset_rate, "constant"), z_grid)
    for (z, a), (_, b), (_, c) in zip(lin, norm, const):
        table.add(z, a, b, c)
    return table


def churn_in_service(
    trials=None, seed=0, workers=1, servers=CHURN_SERVERS, threshold=1, percent=50.0,
    nominal_rate=100.0, nominal_sd=10.0, nominal_life=10.0,
    attacker_rate=2.0, attacker_sd=2.0, attacker_life=100.0,
    arrival_model="gaussian-deterministic", warmup=300, horizon=1000, shuffles=10,
):
    """Simulated in-service likelihood under churn against the fixed-population
    value and the Poisson mixture at the Little's-law means."""
    trials = _sims(trials, 10)
    churn = an.ChurnParams(
        nominal_rate, attacker_rate, nominal_life, attacker_life, arrival_model, nominal_sd, attacker_sd
    )
    u, k = churn.mean_nominal, churn.mean_attackers
    table = ResultTable(
        [
            "M", "analytic_fixed", "analytic_mixture", "simulated", "std_error",
            "mean_nominal", "mean_attackers", "trials", "seed",
        ]
    )
    for i, m in enumerate(servers):
        fixed = an.in_service_prob(an.SystemParams(m, round(u), round(k), threshold), shuffles, percent)
        mix = an.churn_in_service_mixture(u, k, m, threshold, shuffles, percent)
        out = simulate_churn(m, threshold, churn, warmup, horizon, trials, seed + i, percent, workers)
        like = out["in_service_likelihood"]
        table.add(
            m, fixed, mix, like.mean, like.std_error,
            out["mean_nominal"].mean, out["mean_attackers"].mean, trials, seed + i,
        )
    return table


@dataclass(frozen=True)
class Preset:
    run: Callable[..., ResultTable]
    description: str


PRESETS: dict[str, Preset] = {
    "in_service_vs_servers": Preset(in_service_vs_servers, "50% in-service probability over S=10 shuffles vs M"),
    "reputation_nominal_bound": Preset(reputation_nominal_bound, "shuffles needed to deem a client nominal vs K"),
    "reputation_attacker_bound": Preset(reputation_attacker_bound, "shuffles needed to deem a client an attacker vs K"),
    "false_positive": Preset(false_positive, "false positive rate after 10 shuffles vs K"),
    "false_negative": Preset(false_negative, "false negative rate after 10 shuffles vs K"),
    "quarantine_gain": Preset(quarantine_gain, "liberated nominal fraction after one quarantine shuffle vs M"),
    "mtd_unknown_constant": Preset(mtd_unknown_constant, "unknown proxies vs z, constant discovery rate"),
    "mtd_unknown_linear": Preset(mtd_unknown_linear, "unknown proxies vs z, linear discovery rates"),
    "churn_in_service": Preset(churn_in_service, "50% in-service likelihood under client churn vs M"),
}


def run_figure(name: str, trials: int | None = None, seed: int = 0, workers: int = 1, **params) -> ResultTable:
    if name not in PRESETS:
        raise ConfigError("preset", f"unknown preset {name!r}; valid presets: {', '.join(PRESETS)}")
    return PRESETS[name].run(trials=trials, seed=seed, workers=workers, **params)
