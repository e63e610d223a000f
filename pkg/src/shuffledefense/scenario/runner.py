"""Dispatch a scenario to the analytic, simulation or MTD evaluators."""

from __future__ import annotations

from shuffledefense import analytics as an
from shuffledefense.mtd import MtdParams, unknown_proxies_curve
from shuffledefense.scenario.config import ScenarioConfig
from shuffledefense.scenario.table import ResultTable
from shuffledefense.simulation import (
    SimulationOutcome,
    simulate_churn,
    simulate_placement,
    simulate_proactive,
    simulate_quarantine,
    simulate_reputation,
)

TAIL_COLUMNS = ["metric", "value", "std_error", "trials", "seed"]


def system_params(config: ScenarioConfig) -> an.SystemParams:
    s = config.sections["system"]
    return an.SystemParams(s["servers"], s["nominal"], s["attackers"], s["overload_threshold"])


def churn_params(config: ScenarioConfig) -> an.ChurnParams:
    c = config.sections["churn"]
    return an.ChurnParams(
        c["nominal_arrival_rate"],
        c["attacker_arrival_rate"],
        c["nominal_mean_lifetime"],
        c["attacker_mean_lifetime"],
        c["arrival_model"],
        c["nominal_arrival_sd"],
        c["attacker_arrival_sd"],
    )


def reputation_config(config: ScenarioConfig) -> an.ReputationConfig:
    if not config.has("reputation"):
        return an.ReputationConfig()
    r = config.sections["reputation"]
    return an.ReputationConfig(r["scheme"], r["ar_factor"], r["confidence"])


def _analytic_rows(config: ScenarioConfig):
    p = system_params(config)
    s = config.get("shuffle", "rounds")
    x = config.get("shuffle", "in_service_percent")
    rows = [
        ("omega", an.nominal_exposure_prob(p)),
        ("Omega", an.server_overload_prob(p)),
        ("in_service_prob", an.in_service_prob(p, s, x)),
        ("fp_rate", an.false_positive_rate(p, s)),
        ("fn_rate", an.false_negative_rate(p, s)),
    ]
    if config.has("reputation"):
        k_conf = config.get("reputation", "confidence")
        rows.append(("nominal_shuffle_bound", an.nominal_shuffle_bound(p, k_conf)))
        rows.append(("attacker_shuffle_bound", an.attacker_shuffle_bound(p, k_conf)))
    if config.has("quarantine") and p.exact:
        q = an.QuarantineParams(p, config.get("quarantine", "hot_spares"), config.get("quarantine", "stages"))
        freed = an.quarantine_one_shuffle_freed(q)
        rows.append(("clean_clients", freed.baseline))
        rows.append(("quarantine_freed", freed.expected))
    if config.has("churn"):
        c = churn_params(config)
        rows.append(
            (
                "churn_in_service_prob",
                an.churn_in_service_mixture(c.mean_nominal, c.mean_attackers, p.servers, p.overload_threshold, s, x),
            )
        )
    return [(m, v, None, None, None) for m, v in rows]


def _simulate_rows(config: ScenarioConfig):
    p = system_params(config)
    sh = config.sections["shuffle"]
    s, x, n, seed = sh["rounds"], sh["in_service_percent"], sh["trials"], sh["seed"]
    pop, workers = sh["population"], sh["workers"]
    rows = []

    def emit(metric, outcome, column=None):
        mean, se = outcome.mean, outcome.std_error
        if column is not None:
            mean, se = mean[column], se[column]
        rows.append((metric, float(mean), float(se), outcome.trials, seed))
        if outcome.truncated:
            rows.append((f"{metric}_truncated", outcome.truncated, None, outcome.trials, seed))

    placed = simulate_placement(p, n, seed, population=pop, workers=workers)
    emit("omega", placed["nominal_exposure"])
    emit("Omega", placed["server_overload"])
    pro = simulate_proactive(p, s, n, seed, percent=x, population=pop, workers=workers)
    emit("in_service_prob", pro["in_service_prob"])
    rep = simulate_reputation(p, s, reputation_config(config), n, seed, population=pop, workers=workers)
    # the closed forms count ties as errors
    for metric, a, b in (
        ("fp_rate", "nominal_negative", "nominal_zero"),
        ("fn_rate", "attacker_positive", "attacker_zero"),
    ):
        both = rep[a].samples + rep[b].samples
        emit(metric, SimulationOutcome(metric, both, seed))
    if config.has("quarantine"):
        q = an.QuarantineParams(p, config.get("quarantine", "hot_spares"), config.get("quarantine", "stages"))
        out = simulate_quarantine(q, n, seed, population=pop, workers=workers)
        emit("clean_clients", out["clean_clients"], 0)
        for stage in range(1, q.stages + 1):
            emit(f"quarantine_freed_stage{stage}", out["clean_clients"], stage)
    if config.has("churn"):
        c = churn_params(config)
        ch = config.sections["churn"]
        out = simulate_churn(
            p.servers, p.overload_threshold, c, ch["warmup"], ch["horizon"], ch["trials"], seed, x, workers
        )
        emit("churn_in_service_prob", out["in_service_likelihood"])
        emit("churn_mean_nominal", out["mean_nominal"])
        emit("churn_mean_attackers", out["mean_attackers"])
    return rows


def _mtd_rows(config: ScenarioConfig):
    m = config.sections["mtd"]
    proxies = m["proxies"] if m["proxies"] is not None else config.get("system", "servers")
    params = MtdParams(proxies, m["probe_rate"], m["reset_rate"], m["rate_model"])
    rows = []
    for z, unknown in unknown_proxies_curve(params, m["z_grid"]):
        rows.append(("unknown_proxies", unknown, None, None, None, z))
    return rows


def run_scenario(config: ScenarioConfig) -> ResultTable:
    """Evaluate a scenario over its sweep; one row per (sweep point, metric).

    Figure mode is handled by :func:`shuffledefense.scenario.figures.run_figure`.
    """
    mode = config.mode
    sweep = config.sweep
    swept = [sweep[0]] if sweep else []
    extra = ["z"] if mode == "mtd" else []
    table = ResultTable(["scenario_id", *swept, *extra, *TAIL_COLUMNS])
    points = sweep[1] if sweep else [None]
    for value in points:
        point = config.with_value(sweep[0], value) if sweep else config
        lead = [point.get(*sweep[0].split(".", 1))] if sweep else []
        if mode == "analytic":
            rows = _analytic_rows(point)
        elif mode == "simulate":
            rows = _simulate_rows(point)
        elif mode == "mtd":
            rows = _mtd_rows(point)
        else:
            from shuffledefense.scenario.figures import run_figure

            return run_figure(config.get("scenario", "preset"), **figure_overrides(config))
        for row in rows:
            if mode == "mtd":
                metric, v, se, n, sd, z = row
                table.add(config.scenario_id, *lead, z, metric, v, se, n, sd)
            else:
                table.add(config.scenario_id, *lead, *row)
    return table


def figure_overrides(config: ScenarioConfig) -> dict:
    out = {}
    if config.has("shuffle"):
        out["trials"] = config.get("shuffle", "trials")
        out["seed"] = config.get("shuffle", "seed")
        out["workers"] = config.get("shuffle", "workers")
    return out
