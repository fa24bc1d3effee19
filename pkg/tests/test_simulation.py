import json
import math

import numpy as np
import pytest

from cohortkit import AcceptanceStarvation, DomainError
from cohortkit.distribution import backward_pmf_table, make_backward_posterior, posterior_oracle_table
from cohortkit.simulation import (
    SimConfig,
    simulate_backward_bayes,
    simulate_forward,
    total_variation,
)


def test_total_variation_examples():
    assert total_variation([0.2, 0.3, 0.5], [0.2, 0.3, 0.5]) == 0.0
    assert total_variation([1.0, 0.0], [0.0, 1.0]) == 1.0
    assert total_variation([0.5, 0.5], [1.0, 0.0]) == 0.5


def test_total_variation_rejects():
    with pytest.raises(DomainError, match="normalized"):
        total_variation([0.5, 0.4], [0.5, 0.5])
    with pytest.raises(DomainError):
        total_variation([0.5, 0.5], [1.0])
    with pytest.raises(DomainError):
        total_variation([1.5, -0.5], [0.5, 0.5])


@pytest.mark.parametrize("p, expected", [(1.0, 25), (0.0, 0)])
def test_forward_degenerate(backend, p, expected):
    res = simulate_forward(SimConfig(seed=4, replications=500, backend=backend), 25, p)
    assert res.empirical_mean == expected
    assert res.empirical_variance == 0
    assert res.total_variation_distance == 0


def test_forward_deterministic_across_backends_and_threads():
    results = {
        simulate_forward(SimConfig(seed=77, replications=20_000, backend=b, threads=t), 60, 0.45)
        for b in ("python", None) for t in (1, 3)
    }
    assert len(results) == 1


def test_forward_seed_changes_result():
    a = simulate_forward(SimConfig(seed=1, replications=2000), 50, 0.5)
    b = simulate_forward(SimConfig(seed=2, replications=2000), 50, 0.5)
    assert a != b


def test_forward_convergence():
    tvs = [simulate_forward(SimConfig(seed=8, replications=r), 100, 0.7).total_variation_distance
           for r in (10**3, 10**4, 10**5)]
    assert tvs[1] <= 2 * tvs[0]
    assert tvs[2] <= 2 * tvs[1]
    assert tvs[2] < 0.01


def test_backward_degenerate(backend):
    res = simulate_backward_bayes(SimConfig(seed=1, replications=3000, backend=backend), 12, 1.0)
    assert res.accepted_samples == 3000
    assert res.empirical_mean == 12
    assert res.empirical_variance == 0
    assert res.total_variation_distance == 0


def test_backward_empty_cohort():
    res = simulate_backward_bayes(SimConfig(seed=1, replications=2000), 0, 0.3)
    assert res.empirical_mean == 0 and res.total_variation_distance == 0


def test_backward_deterministic_across_backends_and_threads():
    results = {
        simulate_backward_bayes(SimConfig(seed=5, replications=30_000, backend=b, threads=t), 8, 0.8)
        for b in ("python", None) for t in (1, 4)
    }
    assert len(results) == 1


def test_backward_large_prior_uses_rejection_poisson():
    res = simulate_backward_bayes(SimConfig(seed=3, replications=20_000), 100, 0.5)
    assert res.analytic_mean == 200
    assert abs(res.empirical_mean - 200) < 4 * math.sqrt(100 / 20_000)
    assert abs(res.empirical_variance / 100 - 1) < 0.05


def test_backward_starvation():
    cfg = SimConfig(seed=1, replications=10_000, max_attempts=2000, min_accepted=1000)
    with pytest.raises(AcceptanceStarvation) as err:
        simulate_backward_bayes(cfg, 50, 0.5)
    assert err.value.attempts == 2000


def test_backward_budget_exhausted_but_enough():
    cfg = SimConfig(seed=1, replications=10**6, max_attempts=50_000, min_accepted=1000)
    res = simulate_backward_bayes(cfg, 8, 0.8)
    assert 1000 <= res.accepted_samples < 50_000


def test_three_routes_agree():
    # rejection sampling, closed-form shifted Poisson and brute-force Bayes sum
    cfg = SimConfig(seed=21, replications=50_000)
    n, p = 6, 0.6
    res = simulate_backward_bayes(cfg, n, p)
    bp = make_backward_posterior(n, p)
    support, pmf = backward_pmf_table(bp)
    oracle = posterior_oracle_table(n, bp.a, p, support, cfg.tail_epsilon)
    assert np.max(np.abs(pmf - oracle)) < 1e-10
    assert res.total_variation_distance < 0.015
    assert abs(res.empirical_mean - bp.a) < 4 * math.sqrt(bp.lam / res.accepted_samples)


def test_report_fields():
    cfg = SimConfig(seed=9, replications=100)
    res = simulate_forward(cfg, 10, 0.5)
    report = json.loads(res.to_json(cfg, {"N": 10, "p": 0.5}))
    assert set(report) == {
        "empirical_mean", "empirical_variance", "analytic_mean", "analytic_variance",
        "total_variation_distance", "accepted_samples", "seed", "replications", "parameters",
    }
    assert report["parameters"] == {"N": 10, "p": 0.5}


def test_thread_cap_env(monkeypatch):
    from cohortkit import simulation
    monkeypatch.setenv("COHORTKIT_THREADS", "2")
    assert simulation._threads(SimConfig(threads=8)) == 2
    monkeypatch.setenv("COHORTKIT_THREADS", "lots")
    with pytest.raises(DomainError):
        simulation._threads(SimConfig())


def test_config_validation():
    with pytest.raises(DomainError):
        SimConfig(replications=0)
    with pytest.raises(DomainError):
        SimConfig(seed=-1)
    with pytest.raises(DomainError):
        SimConfig(tail_epsilon=0)
