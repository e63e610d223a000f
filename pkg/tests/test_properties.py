"""Randomised invariants; every property runs 1000 generated cases."""

import math
from fractions import Fraction

import numpy as np
from hypothesis import HealthCheck, assume, given, settings
from hypothesis import strategies as st

from oracles import binom_tail_exact, omega_exact
from shuffledefense import analytics as an
from shuffledefense.mtd import RATE_MODELS, MtdParams, build_generator, closed_form_expected_known
from shuffledefense.probability import (
    BinomialSpec,
    PoissonSpec,
    binomial_lower_tail,
    binomial_pmf,
    binomial_upper_tail,
    poisson_weights,
)
from shuffledefense.simulation import assign_uniform, simulate_quarantine, simulate_reputation
from shuffledefense.simulation.fission import split_counts
from shuffledefense.simulation.quarantine import redistribute

CASES = settings(max_examples=1000, deadline=None, suppress_health_check=[HealthCheck.too_slow])

probs = st.floats(0.0, 1.0, allow_nan=False)


@st.composite
def systems(draw, max_servers=40, max_per_server=30, divisible=True):
    m = draw(st.integers(1, max_servers))
    if divisible:
        n = m * draw(st.integers(1, max_per_server))
    else:
        n = draw(st.integers(1, m * max_per_server))
    k = draw(st.integers(0, n))
    a = draw(st.integers(1, min(4, -(-n // m))))
    return an.SystemParams(m, n - k, k, a)


# -- elementary distributions ---------------------------------------------------------


@CASES
@given(st.integers(0, 400), probs)
def test_binomial_pmf_normalised(n, p):
    spec = BinomialSpec(n, p)
    assert abs(math.fsum(binomial_pmf(spec, i) for i in range(n + 1)) - 1) < 1e-9


@CASES
@given(st.integers(0, 400), probs, st.data())
def test_tails_complement_and_monotone(n, p, data):
    spec = BinomialSpec(n, p)
    lo = data.draw(st.integers(0, n + 1))
    up, down = binomial_upper_tail(spec, lo), binomial_lower_tail(spec, lo - 1)
    assert abs(up + down - 1) < 1e-9
    if lo <= n:
        assert binomial_upper_tail(spec, lo + 1) <= up + 1e-15


@CASES
@given(st.integers(0, 20), st.integers(0, 20), st.integers(1, 20), st.data())
def test_tail_matches_rational(n, num, den, data):
    assume(num <= den)
    p = Fraction(num, den)
    lo = data.draw(st.integers(0, n + 1))
    exact = binom_tail_exact(n, p, lo)
    assert abs(binomial_upper_tail(BinomialSpec(n, float(p)), lo) - float(exact)) < 1e-12


@CASES
@given(st.floats(0.0, 5000.0, allow_nan=False))
def test_poisson_truncation_keeps_mass(mean):
    _, w = poisson_weights(PoissonSpec(mean))
    assert abs(w.sum() - 1) < 1e-9


# -- analytic model -----------------------------------------------------------------------


@CASES
@given(systems())
def test_exposure_below_overload(p):
    assert an.nominal_exposure_prob(p) <= an.server_overload_prob(p) + 1e-12


@CASES
@given(systems(max_servers=6, max_per_server=5, divisible=False))
def test_exposure_matches_rational(p):
    exact = omega_exact(p.servers, p.nominal, p.attackers, p.overload_threshold)
    assert abs(an.nominal_exposure_prob(p) - float(exact)) < 1e-12


@CASES
@given(systems())
def test_attacker_cover_complements_tail(p):
    v, q, a = p.clients // p.servers, p.attacker_fraction, p.overload_threshold
    beta = an.attacker_cover_prob(p)
    tail = binomial_upper_tail(BinomialSpec(v - 1, q), min(max(a - 1, 0), v))
    assert abs(beta + tail - 1) < 1e-9 or a == 1 and beta == 0


@CASES
@given(probs, probs, st.integers(1, 60), st.floats(0, 100))
def test_in_service_decreasing_in_exposure(w1, w2, s, x):
    lo, hi = sorted((w1, w2))
    assert an.in_service_prob_for(hi, s, x) <= an.in_service_prob_for(lo, s, x) + 1e-12


@CASES
@given(st.floats(0.0, 0.499, allow_nan=False), st.floats(0.0, 0.499, allow_nan=False), st.floats(0.1, 5))
def test_reputation_bound_grows_and_diverges(q1, q2, k):
    lo, hi = sorted((q1, q2))
    assert an.reputation_shuffle_bound(lo, k) <= an.reputation_shuffle_bound(hi, k) + 1e-9
    assert isinstance(an.reputation_shuffle_bound(0.5 + lo, k), an.Infeasible)


@CASES
@given(systems(), st.integers(1, 40))
def test_false_positive_falls_with_more_shuffles(p, s):
    assume(an.nominal_exposure_prob(p) < 0.5)
    assert an.false_positive_rate(p, s + 2) <= an.false_positive_rate(p, s) + 1e-12


@CASES
@given(systems(max_servers=30, max_per_server=20), st.integers(0, 5))
def test_quarantine_never_below_baseline(p, spares):
    freed = an.quarantine_one_shuffle_freed(an.QuarantineParams(p, spares))
    assert freed.expected >= freed.baseline - 1e-9
    assert freed.baseline == an.expected_clean_clients(p.attackers, p.nominal, p.servers, p.overload_threshold)


# -- Markov model ----------------------------------------------------------------------------


@CASES
@given(
    st.integers(1, 12),
    st.fractions(0, 20, max_denominator=50),
    st.fractions(Fraction(1, 50), 20, max_denominator=50),
    st.sampled_from(RATE_MODELS),
)
def test_generator_rows_sum_to_zero(m, probe, reset, model):
    q = build_generator(MtdParams(m, probe, reset, model), exact=True)
    assert all(sum(row) == 0 for row in q)


@CASES
@given(st.integers(1, 200), st.floats(0, 1e4), st.floats(0, 1e4))
def test_expected_known_bounded_and_increasing(m, z1, z2):
    lo, hi = sorted((z1, z2))
    a, b = closed_form_expected_known(m, lo), closed_form_expected_known(m, hi)
    assert 0 <= a <= b + 1e-9 * m <= m * (1 + 1e-12) + 1e-9 * m


# -- simulation invariants ------------------------------------------------------------------


@CASES
@given(st.integers(0, 300), st.integers(1, 40), st.booleans(), st.integers(0, 2**32))
def test_placement_conserves_clients(n, m, relaxed, seed):
    assume(relaxed or n % m == 0)
    a = assign_uniform(n, m, np.random.default_rng(seed), relaxed=relaxed)
    counts = np.bincount(a, minlength=m)
    assert counts.sum() == n and counts.max() - counts.min() <= 1


@CASES
@given(st.integers(1, 4), st.integers(2, 8), st.integers(0, 2**32), st.data())
def test_redistribute_conserves_classes(trials, servers, seed, data):
    cells = st.lists(st.integers(0, 6), min_size=servers, max_size=servers)
    att = np.array([data.draw(cells) for _ in range(trials)])
    nom = np.array([data.draw(cells) for _ in range(trials)])
    pool = np.array([data.draw(st.lists(st.booleans(), min_size=servers, max_size=servers)) for _ in range(trials)])
    before_a = np.where(pool, att, 0).sum(axis=1)
    before_n = np.where(pool, nom, 0).sum(axis=1)
    fixed_a, fixed_n = np.where(pool, 0, att), np.where(pool, 0, nom)
    redistribute(np.random.default_rng(seed), att, nom, pool)
    assert (np.where(pool, att, 0).sum(axis=1) == before_a).all()
    assert (np.where(pool, nom, 0).sum(axis=1) == before_n).all()
    assert (np.where(pool, 0, att) == fixed_a).all() and (np.where(pool, 0, nom) == fixed_n).all()


@CASES
@given(st.integers(1, 200), st.integers(2, 6), st.integers(0, 2**32), st.data())
def test_fission_split_conserves(clients, arity, seed, data):
    attackers = data.draw(st.integers(0, clients))
    parts = split_counts(np.random.default_rng(seed), attackers, clients, arity)
    assert sum(a for a, _ in parts) == attackers
    assert sum(s for _, s in parts) == clients
    assert all(0 <= a <= s for a, s in parts)


@CASES
@given(systems(max_servers=12, max_per_server=8), st.integers(0, 3), st.integers(1, 4), st.integers(0, 2**32))
def test_quarantine_stages_monotone(p, spares, stages, seed):
    out = simulate_quarantine(an.QuarantineParams(p, spares, stages), 8, seed)
    ov = out["overloaded_servers"].samples
    start = 0 if spares == 0 else 1
    assert (np.diff(ov[:, start:], axis=1) <= 0).all()
    clean = out["clean_clients"].samples
    assert (clean <= p.clients).all()


@CASES
@given(systems(max_servers=10, max_per_server=6), st.integers(1, 12), st.integers(0, 2**32))
def test_detected_attackers_score_minus_s(p, s, seed):
    assume(p.attackers > 0)
    p = an.SystemParams(p.servers, p.nominal, p.attackers, 1)
    out = simulate_reputation(p, s, trials=4, seed=seed)
    assert float(out["attacker_mean"].mean) == -s
    if p.nominal:
        assert float(out["nominal_mean"].mean) >= -s
