"""Analytics and simulation of client-to-server shuffling against DDoS attacks."""

from shuffledefense.analytics import (
    ChurnParams,
    FreedClients,
    Infeasible,
    QuarantineParams,
    ReputationConfig,
    SystemParams,
    attacker_cover_prob,
    attacker_shuffle_bound,
    churn_in_service_mixture,
    expected_clean_clients,
    false_negative_rate,
    false_positive_rate,
    in_service_prob,
    nominal_exposure_prob,
    nominal_shuffle_bound,
    playout_buffer_requirement,
    population_spread,
    quarantine_one_shuffle_freed,
    server_overload_prob,
)
from shuffledefense.errors import ConfigError, DomainError, SolverError
from shuffledefense.mtd import (
    MtdParams,
    StationaryDistribution,
    build_generator,
    closed_form_expected_known,
    expected_known_proxies,
    stationary_distribution,
    unknown_proxies_curve,
)

__version__ = "0.1.0"
