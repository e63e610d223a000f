"""Independent reference implementations used only by the tests.

Nothing here imports the package under test: exact rational arithmetic,
exhaustive enumeration, scipy's hypergeometric law and matrix exponentials.
"""

from __future__ import annotations

import itertools
from fractions import Fraction
from math import comb

import numpy as np
from scipy import linalg, stats


def binom_pmf_exact(n: int, p: Fraction, i: int) -> Fraction:
    return comb(n, i) * p**i * (1 - p) ** (n - i)


def binom_tail_exact(n: int, p: Fraction, lo: int) -> Fraction:
    return sum((binom_pmf_exact(n, p, i) for i in range(lo, n + 1)), Fraction(0))


def sizes(clients: int, servers: int) -> list[int]:
    lo, extra = divmod(clients, servers)
    return [lo + 1] * extra + [lo] * (servers - extra)


# -- binomial (independent class) model, via rational sums -----------------------


def omega_exact(m, u, k, a) -> Fraction:
    n = u + k
    p = Fraction(k, n)
    return sum(
        (Fraction(s, n) * binom_tail_exact(s - 1, p, a) for s in sizes(n, m)),
        Fraction(0),
    )


def big_omega_exact(m, u, k, a) -> Fraction:
    n = u + k
    p = Fraction(k, n)
    return sum((Fraction(1, m) * binom_tail_exact(s, p, a) for s in sizes(n, m)), Fraction(0))


def beta_exact(m, u, k, a) -> Fraction:
    n = u + k
    p = Fraction(k, n)
    return sum(
        (Fraction(s, n) * (1 - binom_tail_exact(s - 1, p, max(a - 1, 0))) for s in sizes(n, m) if a >= 2),
        Fraction(0),
    )


# -- fixed population (exactly U nominal and K attacker clients) -----------------


def omega_finite(m, u, k, a) -> float:
    """Tagged nominal: its s-1 co-residents are drawn without replacement."""
    n = u + k
    return sum(s / n * stats.hypergeom(n - 1, k, s - 1).sf(a - 1) for s in sizes(n, m))


def big_omega_finite(m, u, k, a) -> float:
    n = u + k
    return sum(stats.hypergeom(n, k, s).sf(a - 1) / m for s in sizes(n, m))


def clean_clients_finite(m, u, k, a) -> float:
    n = u + k
    return sum(s * stats.hypergeom(n, k, s).cdf(a - 1) for s in sizes(n, m))


def brute_force_placements(u, k, m):
    """Every equally likely balanced placement, as per-server attacker lists.

    Yields tuples of (server sizes, attacker flags per slot) for each
    permutation of labelled clients; tiny populations only.
    """
    labels = [False] * u + [True] * k
    layout = sizes(u + k, m)
    for perm in itertools.permutations(range(u + k)):
        servers, pos = [], 0
        for s in layout:
            servers.append([labels[c] for c in perm[pos : pos + s]])
            pos += s
        yield servers


def brute_force_exposure(u, k, m, a) -> Fraction:
    """P(a nominal client sits in an overloaded server), by enumeration."""
    hit = total = 0
    for servers in brute_force_placements(u, k, m):
        for srv in servers:
            bad = sum(srv) >= a
            for is_att in srv:
                if not is_att:
                    total += 1
                    hit += bad
    return Fraction(hit, total)


def brute_force_quarantine(u, k, m, a, spares=0) -> Fraction:
    """Exact expected clients in clean servers after one quarantine shuffle."""
    total = Fraction(0)
    count = 0
    for servers in brute_force_placements(u, k, m):
        count += 1
        clean = [srv for srv in servers if sum(srv) < a]
        pool = [c for srv in servers if sum(srv) >= a for c in srv]
        freed = sum(len(srv) for srv in clean)
        n_pool = m - len(clean)
        if not pool:
            total += freed
            continue
        layout = sizes(len(pool), n_pool + spares)
        perms = list(itertools.permutations(pool))
        acc = Fraction(0)
        for perm in perms:
            pos = 0
            for s in layout:
                part = perm[pos : pos + s]
                pos += s
                if sum(part) < a:
                    acc += s
        total += freed + acc / len(perms)
    return total / count


def quarantine_stage1_finite(u, k, m) -> float:
    """Exact fixed-population stage-1 clean clients for A = 1, no spares.

    Q1 (initially overloaded servers) is computed by a dynamic programme over
    servers with hypergeometric draws; every attacker sits in the pool, which
    is reshuffled over Q1 servers of v clients each.
    """
    n = u + k
    v = n // m
    # dist[a][q] = P(a attackers placed, q overloaded) after j servers
    dist = np.zeros((k + 1, m + 1))
    dist[0, 0] = 1.0
    for j in range(m):
        left = n - j * v
        new = np.zeros_like(dist)
        for used in range(k + 1):
            row = dist[used]
            if not row.any():
                continue
            rem = k - used
            pmf = stats.hypergeom(left, rem, v).pmf(np.arange(min(rem, v) + 1))
            for x, w in enumerate(pmf):
                if w == 0:
                    continue
                shift = 1 if x >= 1 else 0
                new[used + x, shift:] += w * row[: m + 1 - shift]
        dist = new
    q1 = dist[k]
    expected = 0.0
    for q, w in enumerate(q1):
        if w == 0:
            continue
        initial = (m - q) * v
        pool = q * v
        inner = q * v * stats.hypergeom(pool, k, v).pmf(0) if q else 0.0
        expected += w * (initial + inner)
    return expected


# -- Markov chain ------------------------------------------------------------


def transient_limit(q: np.ndarray, t: float = 1e4) -> np.ndarray:
    return linalg.expm(q * t)[0]


# -- reputation / fission -------------------------------------------------------


def majority_tail_exact(q: Fraction, s: int, lo: int) -> Fraction:
    return binom_tail_exact(s, q, lo)


def fission_first_round_exact(clients: int, arity: int) -> Fraction:
    """Expected nominals freed in round one for a single attacker, by enumeration."""
    base, extra = divmod(clients, arity)
    layout = [base + (j < extra) for j in range(arity)]
    total = Fraction(0)
    perms = list(itertools.permutations(range(clients)))
    for perm in perms:
        pos = 0
        for s in layout:
            part = perm[pos : pos + s]
            pos += s
            if 0 not in part:  # client 0 is the attacker
                total += s
    return total / len(perms)
