"""Elementary distributions evaluated in log space.

Binomial and Poisson probabilities are computed as ``exp(log pmf)`` so that
large trial counts and Poisson means never overflow an intermediate
factorial or power. Tails are accumulated with :func:`math.fsum`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from shuffledefense.errors import DomainError

# Below this size log C(n, k) is taken from the exact integer binomial.
_EXACT_COMB_LIMIT = 1024


@dataclass(frozen=True)
class BinomialSpec:
    trials: int
    success_prob: float

    def __post_init__(self) -> None:
        if int(self.trials) != self.trials or self.trials < 0:
            raise DomainError(f"trials must be a non-negative integer, got {self.trials!r}")
        if not 0.0 <= self.success_prob <= 1.0:
            raise DomainError(f"success_prob must lie in [0, 1], got {self.success_prob!r}")


@dataclass(frozen=True)
class PoissonSpec:
    mean: float

    def __post_init__(self) -> None:
        if not (self.mean >= 0.0 and math.isfinite(self.mean)):
            raise DomainError(f"Poisson mean must be finite and >= 0, got {self.mean!r}")


def log_comb(n: int, k: int) -> float:
    if n <= _EXACT_COMB_LIMIT:
        return math.log(math.comb(n, k))
    return math.lgamma(n + 1) - math.lgamma(k + 1) - math.lgamma(n - k + 1)


def binomial_logpmf(spec: BinomialSpec, i: int) -> float:
    n, p = spec.trials, spec.success_prob
    if not 0 <= i <= n:
        raise DomainError(f"binomial support is 0..{n}, got {i}")
    if p == 0.0:
        return 0.0 if i == 0 else -math.inf
    if p == 1.0:
        return 0.0 if i == n else -math.inf
    return log_comb(n, i) + i * math.log(p) + (n - i) * math.log1p(-p)


def binomial_pmf(spec: BinomialSpec, i: int) -> float:
    """P(X = i) for X ~ binom(trials, success_prob)."""
    return math.exp(binomial_logpmf(spec, i))


def binomial_upper_tail(spec: BinomialSpec, lo: int) -> float:
    """P(X >= lo); ``lo`` may range over 0..trials+1."""
    n = spec.trials
    if not 0 <= lo <= n + 1:
        raise DomainError(f"tail start must lie in 0..{n + 1}, got {lo}")
    if lo == 0:
        return 1.0
    if lo == n + 1:
        return 0.0
    # Direct summation keeps relative accuracy for tiny tails; the complement
    # is only used for very long supports where the lower side is shorter.
    if n <= 4096 or lo > n // 2:
        total = math.fsum(binomial_pmf(spec, i) for i in range(lo, n + 1))
    else:
        total = 1.0 - math.fsum(binomial_pmf(spec, i) for i in range(lo))
    return min(1.0, max(0.0, total))


def binomial_lower_tail(spec: BinomialSpec, hi: int) -> float:
    """P(X <= hi); ``hi < 0`` gives 0."""
    if hi < 0:
        return 0.0
    if hi >= spec.trials:
        return 1.0
    return 1.0 - binomial_upper_tail(spec, hi + 1)


def poisson_logpmf(spec: PoissonSpec, i: int) -> float:
    if i < 0:
        raise DomainError(f"Poisson support is i >= 0, got {i}")
    lam = spec.mean
    if lam == 0.0:
        return 0.0 if i == 0 else -math.inf
    return i * math.log(lam) - lam - math.lgamma(i + 1)


def poisson_pmf(spec: PoissonSpec, i: int) -> float:
    return math.exp(poisson_logpmf(spec, i))


def poisson_support(spec: PoissonSpec, width: float = 10.0, pad: int = 20) -> range:
    """Truncated support ``mean +/- (width*sqrt(mean) + pad)`` clipped at 0."""
    lam = spec.mean
    half = width * math.sqrt(lam) + pad
    lo = max(0, math.floor(lam - half))
    hi = math.ceil(lam + half)
    return range(lo, hi + 1)


def poisson_weights(spec: PoissonSpec, width: float = 10.0, pad: int = 20) -> tuple[np.ndarray, np.ndarray]:
    """Support points and pmf values over the truncated support."""
    support = poisson_support(spec, width, pad)
    ks = np.arange(support.start, support.stop)
    if spec.mean == 0.0:
        return ks, (ks == 0).astype(float)
    logp = ks * math.log(spec.mean) - spec.mean - _log_factorials(int(ks[-1]))[ks]
    return ks, np.exp(logp)


def geometric_run_stats(q: float) -> tuple[float, float]:
    """Mean and variance of a run with pmf ``q**s * (1 - q)``, s = 0, 1, 2, ...

    A run counts whole shuffle-periods spent in the "bad" state before the
    first "good" one.
    """
    if not 0.0 <= q < 1.0:
        raise DomainError(f"run probability must lie in [0, 1), got {q!r}")
    mean = q / (1.0 - q)
    return mean, mean / (1.0 - q)


@lru_cache(maxsize=8)
def _log_factorials(n_max: int) -> np.ndarray:
    out = np.zeros(n_max + 1)
    if n_max:
        out[1:] = np.cumsum(np.log(np.arange(1, n_max + 1, dtype=float)))
    return out


def binomial_pmf_table(n: int, p: np.ndarray) -> np.ndarray:
    """Vectorised pmf: row ``j`` holds binom(n, p[j]) over 0..n.

    Used by the Poisson mixtures, where thousands of (n, p) pairs are needed.
    """
    p = np.asarray(p, dtype=float)
    ks = np.arange(n + 1)
    lf = _log_factorials(max(n, 1))
    logc = lf[n] - lf[ks] - lf[n - ks]
    with np.errstate(divide="ignore", invalid="ignore"):
        logp = np.log(p)[:, None] * ks + np.log1p(-p)[:, None] * (n - ks)
    # 0 * log(0) terms: p == 0 or p == 1 rows
    logp = np.where((p[:, None] == 0.0) & (ks == 0), 0.0, logp)
    logp = np.where((p[:, None] == 1.0) & (ks == n), 0.0, logp)
    return np.exp(logc + logp)
