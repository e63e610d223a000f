"""Markov model of botnet reconnaissance against proxy address rotation.

State ``n`` is the number of proxy addresses currently known to the botnet.
Probes discover one more proxy at rate ``q(n, n+1)``; an address rotation
resets the state to 0 at rate ``delta``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from shuffledefense.errors import DomainError, SolverError

RATE_MODELS = ("constant", "linear-remaining", "linear-remaining-normalized")


@dataclass(frozen=True)
class MtdParams:
    proxies: int
    probe_rate: float
    reset_rate: float
    rate_model: str = "constant"

    def __post_init__(self) -> None:
        if int(self.proxies) != self.proxies or self.proxies < 1:
            raise DomainError(f"proxies must be a positive integer, got {self.proxies!r}")
        if not (self.probe_rate >= 0 and math.isfinite(self.probe_rate)):
            raise DomainError(f"probe_rate must be finite and >= 0, got {self.probe_rate!r}")
        if not (self.reset_rate > 0 and math.isfinite(self.reset_rate)):
            raise DomainError(f"reset_rate must be finite and > 0, got {self.reset_rate!r}")
        if self.rate_model not in RATE_MODELS:
            raise DomainError(f"rate_model must be one of {RATE_MODELS}, got {self.rate_model!r}")

    @property
    def z(self) -> float:
        return self.probe_rate / self.reset_rate

    @property
    def x(self) -> float:
        return self.probe_rate / (self.probe_rate + self.reset_rate)


@dataclass(frozen=True)
class StationaryDistribution:
    probs: np.ndarray

    @property
    def states(self) -> int:
        return len(self.probs)


def build_generator(params: MtdParams, exact: bool = False) -> np.ndarray:
    """Rate matrix over states 0..M with zero row sums.

    With ``exact=True`` the entries are :class:`~fractions.Fraction` objects
    (object array) so row sums are exactly zero; otherwise floats.
    """
    m = params.proxies
    beta = Fraction(params.probe_rate)
    delta = Fraction(params.reset_rate)
    q = np.full((m + 1, m + 1), Fraction(0), dtype=object)
    for n in range(m + 1):
        if n < m:
            if params.rate_model == "constant":
                q[n, n + 1] = beta
            elif params.rate_model == "linear-remaining":
                q[n, n + 1] = beta * (m - n)
            else:
                q[n, n + 1] = beta * (m - n) / m
        if n >= 1:
            q[n, 0] = delta
        q[n, n] = -sum(q[n, j] for j in range(m + 1) if j != n)
    if exact:
        return q
    return q.astype(float)


def stationary_distribution(generator: np.ndarray) -> StationaryDistribution:
    """Solve pi^T Q = 0 with sum(pi) = 1 by a dense direct solve.

    The last balance equation is replaced by the normalisation row.
    """
    q = np.asarray(generator, dtype=float)
    if q.ndim != 2 or q.shape[0] != q.shape[1]:
        raise DomainError("generator must be a square matrix")
    size = q.shape[0]
    system = q.T.copy()
    system[-1, :] = 1.0
    rhs = np.zeros(size)
    rhs[-1] = 1.0
    try:
        pi = np.linalg.solve(system, rhs)
    except np.linalg.LinAlgError as exc:
        raise SolverError("generator has no unique stationary distribution") from exc
    scale = max(1.0, float(np.abs(q).max()))
    if not np.all(np.isfinite(pi)) or np.abs(pi @ q).max() > 1e-8 * scale:
        raise SolverError("generator has no unique stationary distribution")
    # round-off can leave -1e-17 in states of vanishing mass
    pi = np.where(np.abs(pi) < 1e-15, 0.0, pi)
    if np.any(pi < 0):
        raise SolverError("stationary solve produced negative probabilities")
    return StationaryDistribution(pi / pi.sum())


def expected_known_proxies(dist: StationaryDistribution) -> float:
    """E V = sum_i i * pi_i."""
    return float(np.arange(dist.states) @ dist.probs)


def closed_form_expected_known(proxies: int, z: float) -> float:
    """E V = z (1 - (z / (z + 1))**M) for the constant discovery rate."""
    if z < 0:
        raise DomainError(f"z must be >= 0, got {z!r}")
    if z == 0:
        return 0.0
    if math.isinf(z):
        return float(proxies)
    # log x stays finite for tiny z; 1 - x**M is computed without cancellation
    log_x = math.log(z) - math.log1p(z) if z < 1.0 else math.log1p(-1.0 / (z + 1.0))
    return z * -math.expm1(proxies * log_x)


def constant_model_distribution(proxies: int, z: float) -> np.ndarray:
    """pi_i = x^i (1 - x) for i < M and pi_M = x^M."""
    x = z / (z + 1.0)
    i = np.arange(proxies + 1)
    pi = x**i * (1.0 - x)
    pi[-1] = x**proxies
    return pi


def unknown_proxies_curve(params: MtdParams, z_grid: Sequence[float]) -> list[tuple[float, float]]:
    """Rows ``(z, M - E V)``; the probe rate is set to ``z * reset_rate``."""
    if len(z_grid) == 0:
        raise DomainError("z_grid must not be empty")
    rows = []
    for z in z_grid:
        if params.rate_model == "constant":
            ev = closed_form_expected_known(params.proxies, z)
        else:
            point = MtdParams(params.proxies, z * params.reset_rate, params.reset_rate, params.rate_model)
            ev = expected_known_proxies(stationary_distribution(build_generator(point)))
        rows.append((float(z), params.proxies - ev))
    return rows
