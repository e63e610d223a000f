"""Closed-form evaluators for client-to-server shuffling.

Every quantity here is the binomial placement model: a server holding ``v``
clients contains ``binom(v, p)`` attackers with ``p = K / (U + K)``, i.e.
client classes behave as independent draws (finite-population corrections
are ignored). When ``U + K`` is not a multiple of ``M`` the servers are
taken to be balanced to within one client, and each formula becomes the
corresponding mixture over the two server sizes; for divisible populations
this reduces to the textbook expressions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from shuffledefense.errors import DomainError
from shuffledefense.probability import (
    BinomialSpec,
    PoissonSpec,
    binomial_lower_tail,
    binomial_pmf,
    binomial_pmf_table,
    binomial_upper_tail,
    geometric_run_stats,
    poisson_weights,
)


@dataclass(frozen=True)
class Infeasible:
    """No finite shuffle count reaches the requested confidence."""

    quantity: str
    value: float

    def __str__(self) -> str:
        return "infeasible"


def balanced_sizes(clients: int, servers: int) -> list[tuple[int, int]]:
    """``(size, count)`` pairs of a placement balanced to within one client.

    The first ``clients % servers`` servers take the extra client.
    """
    if servers < 1:
        raise DomainError(f"need at least one server, got {servers}")
    lo, extra = divmod(clients, servers)
    layout = [(lo + 1, extra), (lo, servers - extra)]
    return [(s, c) for s, c in layout if c > 0]


@dataclass(frozen=True)
class SystemParams:
    """Population model: ``servers`` (M), ``nominal`` (U), ``attackers`` (K)
    and ``overload_threshold`` (A, attackers needed to overload a server)."""

    servers: int
    nominal: int
    attackers: int
    overload_threshold: int = 1

    def __post_init__(self) -> None:
        for name in ("servers", "nominal", "attackers", "overload_threshold"):
            value = getattr(self, name)
            if int(value) != value:
                raise DomainError(f"{name} must be an integer, got {value!r}")
        if self.servers < 1:
            raise DomainError(f"servers must be >= 1, got {self.servers}")
        if self.nominal < 0 or self.attackers < 0:
            raise DomainError("client counts must be non-negative")
        if self.nominal + self.attackers < 1:
            raise DomainError("need at least one client (U + K >= 1)")
        if self.overload_threshold < 1:
            raise DomainError(f"overload_threshold must be >= 1, got {self.overload_threshold}")
        if self.overload_threshold > self.max_server_size:
            raise DomainError(
                f"overload_threshold {self.overload_threshold} exceeds the largest server "
                f"size {self.max_server_size}"
            )

    @property
    def clients(self) -> int:
        return self.nominal + self.attackers

    @property
    def per_server(self) -> float:
        """v = (U + K) / M; an integer exactly when :attr:`exact` holds."""
        return self.clients / self.servers

    @property
    def exact(self) -> bool:
        return self.clients % self.servers == 0

    @property
    def attacker_fraction(self) -> float:
        return self.attackers / self.clients

    @property
    def max_server_size(self) -> int:
        return -(-self.clients // self.servers)

    def server_sizes(self) -> list[tuple[int, int]]:
        return balanced_sizes(self.clients, self.servers)

    def require_exact(self) -> int:
        if not self.exact:
            raise DomainError(
                f"U + K = {self.clients} is not divisible by M = {self.servers}"
            )
        return self.clients // self.servers


@dataclass(frozen=True)
class ChurnParams:
    """Arrival and lifetime description of client turnover (per shuffle-period)."""

    nominal_arrival_rate: float
    attacker_arrival_rate: float
    nominal_mean_lifetime: float
    attacker_mean_lifetime: float
    arrival_model: str = "poisson-exponential"
    nominal_arrival_sd: float = 0.0
    attacker_arrival_sd: float = 0.0

    MODELS = ("poisson-exponential", "gaussian-deterministic")

    def __post_init__(self) -> None:
        if self.arrival_model not in self.MODELS:
            raise DomainError(f"arrival_model must be one of {self.MODELS}, got {self.arrival_model!r}")
        for name in (
            "nominal_arrival_rate",
            "attacker_arrival_rate",
            "nominal_mean_lifetime",
            "attacker_mean_lifetime",
            "nominal_arrival_sd",
            "attacker_arrival_sd",
        ):
            value = getattr(self, name)
            if not (value >= 0 and math.isfinite(value)):
                raise DomainError(f"{name} must be finite and >= 0, got {value!r}")

    @property
    def mean_nominal(self) -> float:
        """Little's law: U = lambda_n / mu_n."""
        return self.nominal_arrival_rate * self.nominal_mean_lifetime

    @property
    def mean_attackers(self) -> float:
        return self.attacker_arrival_rate * self.attacker_mean_lifetime


@dataclass(frozen=True)
class ReputationConfig:
    scheme: str = "unit-increment"
    ar_factor: float = 0.9
    confidence_multiplier: float = 2.0

    SCHEMES = ("unit-increment", "autoregressive")

    def __post_init__(self) -> None:
        if self.scheme not in self.SCHEMES:
            raise DomainError(f"scheme must be one of {self.SCHEMES}, got {self.scheme!r}")
        if self.scheme == "autoregressive" and not 0.0 < self.ar_factor < 1.0:
            raise DomainError(f"ar_factor must lie in (0, 1), got {self.ar_factor!r}")
        if not self.confidence_multiplier > 0:
            raise DomainError("confidence_multiplier must be positive")

    def update(self, reputation, overloaded):
        """Apply one detection round; works elementwise on numpy arrays."""
        step = np.where(overloaded, -1.0, 1.0)
        if self.scheme == "unit-increment":
            return reputation + step
        return self.ar_factor * reputation + (1.0 - self.ar_factor) * step


@dataclass(frozen=True)
class QuarantineParams:
    base: SystemParams
    hot_spares: int = 0
    stages: int = 1

    def __post_init__(self) -> None:
        if self.hot_spares < 0:
            raise DomainError(f"hot_spares must be >= 0, got {self.hot_spares}")
        if self.stages < 1:
            raise DomainError(f"stages must be >= 1, got {self.stages}")


@dataclass(frozen=True)
class FreedClients:
    """Expected clients in non-overloaded servers after one quarantine shuffle.

    ``omitted_mass`` is the probability of overloaded-server counts that fall
    outside the summation range; ``skipped_terms`` counts in-range terms
    dropped because the pooled servers could not hold all K attackers.
    """

    expected: float
    baseline: float
    skipped_terms: int = 0
    omitted_mass: float = 0.0

    @property
    def gain(self) -> float:
        return self.expected - self.baseline


# -- per-server building blocks ------------------------------------------------


def _size_biased(params: SystemParams):
    """Server sizes weighted by the chance that a tagged client sits in one."""
    n = params.clients
    return [(s, c * s / n) for s, c in params.server_sizes()]


def _peer_tail(size: int, p: float, lo: int) -> float:
    """P(at least ``lo`` attackers among the ``size - 1`` co-residents)."""
    peers = size - 1
    if lo > peers:
        return 0.0
    return binomial_upper_tail(BinomialSpec(peers, p), max(lo, 0))


def server_overload_prob(params: SystemParams) -> float:
    """Omega: probability a server holds at least A attackers."""
    p, a = params.attacker_fraction, params.overload_threshold
    total = 0.0
    for size, count in params.server_sizes():
        if a <= size:
            total += count / params.servers * binomial_upper_tail(BinomialSpec(size, p), a)
    return total


def nominal_exposure_prob(params: SystemParams) -> float:
    """omega: probability a given nominal client sits in an overloaded server.

    Only the tagged client's ``v - 1`` co-residents can be attackers.
    """
    p, a = params.attacker_fraction, params.overload_threshold
    return math.fsum(w * _peer_tail(size, p, a) for size, w in _size_biased(params))


def attacker_cover_prob(params: SystemParams) -> float:
    """beta: probability an attacker lands in a server that is not overloaded.

    The attacker itself counts toward A, so at most A - 2 co-residents may be
    attackers; A = 1 gives beta = 0.
    """
    p, a = params.attacker_fraction, params.overload_threshold
    if a == 1:
        return 0.0
    return math.fsum(
        w * binomial_lower_tail(BinomialSpec(size - 1, p), a - 2) for size, w in _size_biased(params)
    )


def in_service_threshold(shuffles: int, percent: float) -> int:
    """Smallest number of in-service rounds that meets ``percent`` of ``shuffles``."""
    return math.ceil(Fraction(shuffles) * Fraction(percent) / 100)


def in_service_prob_for(omega: float, shuffles: int, percent: float) -> float:
    if shuffles < 1:
        raise DomainError(f"need at least one shuffle, got {shuffles}")
    if not 0.0 <= percent <= 100.0:
        raise DomainError(f"percent must lie in [0, 100], got {percent!r}")
    lo = in_service_threshold(shuffles, percent)
    return binomial_upper_tail(BinomialSpec(shuffles, 1.0 - omega), lo)


def in_service_prob(params: SystemParams, shuffles: int, percent: float) -> float:
    """P(a nominal client is in service for at least ``percent`` % of ``shuffles``)."""
    return in_service_prob_for(nominal_exposure_prob(params), shuffles, percent)


@dataclass(frozen=True)
class PopulationSpread:
    sigma_attackers: float
    sigma_nominals: float
    rel_attackers: float | None
    rel_nominals: float | None


def population_spread(params: SystemParams) -> PopulationSpread:
    """Standard deviation of the attacker/nominal totals, sqrt(M v p (1-p)).

    Relative spreads are ``None`` when the class is empty.
    """
    u, k = params.nominal, params.attackers
    n = params.clients
    p = params.attacker_fraction
    sigma = math.sqrt(n * p * (1.0 - p))
    rel_a = math.sqrt(u / (k * n)) if k > 0 else None
    rel_n = math.sqrt(k / (u * n)) if u > 0 else None
    return PopulationSpread(sigma, sigma, rel_a, rel_n)


def buffer_for_exposure(omega: float, k_sd: float = 2.0) -> float:
    """Outage mean plus ``k_sd`` standard deviations, in shuffle-periods."""
    if omega >= 1.0:
        raise DomainError("omega = 1: outages never end")
    mean, var = geometric_run_stats(omega)
    return mean + k_sd * math.sqrt(var)


def playout_buffer_requirement(params: SystemParams) -> float:
    """Playout buffer T (in shuffle-periods) needed so that T > mu + 2 sigma."""
    return buffer_for_exposure(nominal_exposure_prob(params))


# -- Poisson churn mixture ------------------------------------------------------


def _exposure_grid(u: np.ndarray, k: np.ndarray, servers: int, threshold: int) -> np.ndarray:
    """omega over a grid of population pairs, v rounded to the nearest positive integer."""
    total = u[:, None] + k[None, :]
    v = np.maximum(1, np.floor(total / servers + 0.5)).astype(int)
    with np.errstate(invalid="ignore", divide="ignore"):
        p = np.where(total > 0, k[None, :] / np.maximum(total, 1), 0.0)
    omega = np.zeros_like(p)
    for size in np.unique(v):
        peers = size - 1
        mask = v == size
        if threshold > peers:
            continue
        table = binomial_pmf_table(peers, p[mask])
        omega[mask] = table[:, threshold:].sum(axis=1)
    return np.clip(omega, 0.0, 1.0)


def _in_service_grid(omega: np.ndarray, shuffles: int, percent: float) -> np.ndarray:
    lo = in_service_threshold(shuffles, percent)
    table = binomial_pmf_table(shuffles, (1.0 - omega).ravel())
    return table[:, lo:].sum(axis=1).reshape(omega.shape)


def churn_in_service_mixture(
    mean_nominal: float,
    mean_attackers: float,
    servers: int,
    threshold: int,
    shuffles: int,
    percent: float,
    width: float = 10.0,
) -> float:
    """E V(u, k) with u ~ Poisson(U) and k ~ Poisson(K) independent.

    V(u, k) is the in-service probability at the rounded per-server load.
    Both Poisson supports are truncated at ``mean +/- (width*sqrt(mean) + 20)``
    and the weights renormalised over the kept terms.
    """
    if mean_nominal < 0 or mean_attackers < 0:
        raise DomainError("population means must be non-negative")
    us, wu = poisson_weights(PoissonSpec(mean_nominal), width)
    ks, wk = poisson_weights(PoissonSpec(mean_attackers), width)
    omega = _exposure_grid(us.astype(float), ks.astype(float), servers, threshold)
    # (u, k) = (0, 0): no clients at all, so no outage either
    values = _in_service_grid(omega, shuffles, percent)
    # renormalise so the truncated mass never biases the average
    return float(wu @ values @ wk / (wu.sum() * wk.sum()))


# -- reputation -----------------------------------------------------------------


def reputation_shuffle_bound(prob: float, k_conf: float = 2.0, quantity: str = "prob") -> float | Infeasible:
    """S > 4 k^2 q (1-q) / (1-2q)^2 for a per-round misclassification chance q."""
    if prob >= 0.5:
        return Infeasible(quantity, prob)
    return 4.0 * k_conf**2 * prob * (1.0 - prob) / (1.0 - 2.0 * prob) ** 2


def nominal_shuffle_bound(params: SystemParams, k_conf: float = 2.0) -> float | Infeasible:
    """Shuffles needed before a nominal client's reputation is positive with
    ``k_conf`` standard deviations of confidence."""
    return reputation_shuffle_bound(nominal_exposure_prob(params), k_conf, "omega")


def attacker_shuffle_bound(params: SystemParams, k_conf: float = 2.0) -> float | Infeasible:
    return reputation_shuffle_bound(attacker_cover_prob(params), k_conf, "beta")


def _majority_tail(prob: float, shuffles: int, include_ties: bool) -> float:
    if shuffles < 1:
        raise DomainError(f"need at least one shuffle, got {shuffles}")
    lo = math.ceil(shuffles / 2) if include_ties else shuffles // 2 + 1
    return binomial_upper_tail(BinomialSpec(shuffles, prob), lo)


def false_positive_rate(params: SystemParams, shuffles: int, include_ties: bool = True) -> float:
    """Chance a nominal client ends ``shuffles`` rounds with non-positive reputation.

    The sum starts at ceil(S/2) overloaded rounds, so for even S a zero
    reputation counts as a false positive. ``include_ties=False`` gives the
    strict P(R_n < 0).
    """
    return _majority_tail(nominal_exposure_prob(params), shuffles, include_ties)


def false_negative_rate(params: SystemParams, shuffles: int, include_ties: bool = True) -> float:
    """Chance an attacker ends with non-negative reputation (strict: R_a > 0)."""
    return _majority_tail(attacker_cover_prob(params), shuffles, include_ties)


# -- quarantine -----------------------------------------------------------------


def _clean_clients(attackers: int, clients: int, servers: int, threshold: int) -> float:
    """Expected clients in servers with fewer than ``threshold`` attackers."""
    if clients == 0:
        return 0.0
    p = attackers / clients
    return math.fsum(
        count * size * binomial_lower_tail(BinomialSpec(size, p), threshold - 1)
        for size, count in balanced_sizes(clients, servers)
    )


def expected_clean_clients(
    attackers: int, nominal: int, servers: int, threshold: int = 1, relaxed: bool = False
) -> float:
    """L0 = M * P(server not overloaded) * v."""
    clients = attackers + nominal
    if not relaxed and clients % servers:
        raise DomainError(f"U + K = {clients} is not divisible by M = {servers}")
    return _clean_clients(attackers, clients, servers, threshold)


def quarantine_one_shuffle_freed(q: QuarantineParams) -> FreedClients:
    """Expected freed clients after one quarantine shuffle-detection round.

    The Q1 initially overloaded servers (Q1 ~ binom(M, Omega)) pool their
    ``v * Q1`` clients, which are redistributed over ``Q1 + H`` servers; the
    pooled attacker count is taken to be K.
    """
    base = q.base
    v = base.require_exact()
    k, m, a = base.attackers, base.servers, base.overload_threshold
    baseline = expected_clean_clients(k, base.nominal, m, a)
    if k == 0:
        return FreedClients(baseline, baseline)
    overload = server_overload_prob(base)
    lo = max(math.ceil(Fraction(m * k, base.clients)), 1)
    hi = min(m, k)
    spec = BinomialSpec(m, overload)
    terms = []
    skipped = 0
    for n in range(lo, hi + 1):
        pool = v * n
        if pool < k:
            skipped += 1
            continue
        terms.append(binomial_pmf(spec, n) * _clean_clients(k, pool, n + q.hot_spares, a))
    in_range = math.fsum(binomial_pmf(spec, n) for n in range(lo, hi + 1))
    return FreedClients(
        expected=baseline + math.fsum(terms),
        baseline=baseline,
        skipped_terms=skipped,
        omitted_mass=max(0.0, 1.0 - in_range),
    )
