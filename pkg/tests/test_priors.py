import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from spikelab.priors import (
    Prior,
    bernoulli,
    gaussian,
    moments,
    parse_prior,
    rademacher,
    sample,
    sbm_prior,
    sparse_gaussian_prior,
)

CONSTRUCTORS = [
    rademacher(),
    gaussian(),
    gaussian(0.3, 2.0),
    bernoulli(0.3),
    sbm_prior(0.07),
    sparse_gaussian_prior(0.2),
]


@pytest.mark.parametrize("prior", CONSTRUCTORS)
def test_moments_match_monte_carlo(prior):
    n = 10**6
    xs = sample(prior, seed=42, count=n)
    m1, m2, var = moments(prior)
    # 5 standard errors on each moment
    se1 = math.sqrt(var / n)
    se2 = xs.var(ddof=1) and math.sqrt(np.var(xs**2) / n)
    assert abs(xs.mean() - m1) < 5 * se1 + 1e-12
    assert abs(np.mean(xs**2) - m2) < 5 * se2 + 1e-12


@settings(max_examples=100, deadline=None)
@given(st.floats(min_value=1e-6, max_value=1 - 1e-6))
def test_sbm_prior_zero_mean_unit_variance(p):
    m1, m2, var = moments(sbm_prior(p))
    assert abs(m1) < 1e-12
    assert abs(var - 1.0) < 1e-9


@pytest.mark.parametrize("prior", CONSTRUCTORS)
def test_weight_normalization(prior):
    total = sum(w for _, w in prior.atoms) + sum(w for _, _, w in prior.gaussians)
    assert abs(total - 1.0) < 1e-12


def test_invalid_weights_rejected():
    with pytest.raises(ValueError):
        Prior(atoms=((1.0, 0.6), (-1.0, 0.6)))
    with pytest.raises(ValueError):
        Prior(atoms=((1.0, -0.5), (0.0, 1.5)))
    with pytest.raises(ValueError):
        Prior(gaussians=((0.0, -1.0, 1.0),))


def test_degeneracy_flag():
    assert Prior(atoms=((2.0, 1.0),)).is_degenerate
    assert not rademacher().is_degenerate
    assert not gaussian().is_degenerate


def test_json_round_trip():
    for prior in CONSTRUCTORS:
        assert Prior.from_json(prior.to_json()) == prior


def test_parse_prior_forms():
    assert parse_prior("rademacher") == rademacher()
    assert parse_prior("gaussian:mean=0.5,var=2") == gaussian(0.5, 2.0)
    assert parse_prior("sbm:p=0.05") == sbm_prior(0.05)
    assert parse_prior("sparse:s=0.15") == sparse_gaussian_prior(0.15)
    assert parse_prior("bernoulli:eps=0.1") == bernoulli(0.1)
    assert parse_prior(rademacher().to_json()) == rademacher()
    with pytest.raises(ValueError):
        parse_prior("cauchy")


def test_sampling_deterministic_in_seed():
    a = sample(sparse_gaussian_prior(0.3), seed=7, count=1000)
    b = sample(sparse_gaussian_prior(0.3), seed=7, count=1000)
    c = sample(sparse_gaussian_prior(0.3), seed=8, count=1000)
    assert np.array_equal(a, b)
    assert not np.array_equal(a, c)
