import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import random_density, random_hermitian
from latticeqms.catalog import model_xyz
from latticeqms.operators import SIGMA_1, SIGMA_3, Region, StateError, trace_norm
from latticeqms.wasserstein import (appena_slack, hermitian_traceless_basis, lipschitz_seminorm,
                                    normalized_trace_out, telescoping_decomposition, w1_bracket)

seeds = st.integers(0, 2**31 - 1)


def test_single_site_lipschitz_is_spectral_spread(rng):
    f = random_hermitian(rng, 2)
    w = np.linalg.eigvalsh(f)
    lo, up = lipschitz_seminorm(f, Region.chain(1))
    assert lo == pytest.approx(w[-1] - w[0]) and up == pytest.approx(w[-1] - w[0])


def test_lipschitz_of_scalars_and_products():
    assert lipschitz_seminorm(np.eye(4), Region.chain(2)) == (0.0, 0.0)
    lo, up = lipschitz_seminorm(np.kron(SIGMA_3, np.eye(2)), Region.chain(2))
    assert lo <= 2 + 1e-9 <= up + 2e-9
    with pytest.raises(ValueError):
        lipschitz_seminorm(np.array([[0, 1], [0, 0]]), Region.chain(1))


@settings(max_examples=20)
@given(seeds)
def test_lipschitz_bracket_is_ordered(seed):
    rng = np.random.default_rng(seed)
    f = random_hermitian(rng, 4)
    lo, up = lipschitz_seminorm(f, Region.chain(2))
    assert 0 <= lo <= up + 1e-9


def test_telescoping_sums_to_difference(rng):
    mu, nu = random_density(rng, 8), random_density(rng, 8)
    parts = telescoping_decomposition(mu - nu, 3, 2)
    np.testing.assert_allclose(sum(parts), mu - nu, atol=1e-12)
    for pos, p in enumerate(parts):
        np.testing.assert_allclose(normalized_trace_out(p, pos, 3, 2), 0, atol=1e-12)


def test_gell_mann_basis():
    for d in (2, 3):
        basis = hermitian_traceless_basis(d)
        assert len(basis) == d * d - 1
        for i, a in enumerate(basis):
            assert abs(np.trace(a)) < 1e-14
            for j, b in enumerate(basis):
                assert np.trace(a @ b) == pytest.approx(2.0 if i == j else 0.0, abs=1e-12)


@settings(max_examples=25)
@given(seeds)
def test_single_qubit_bracket_is_half_trace_distance(seed):
    rng = np.random.default_rng(seed)
    mu, nu = random_density(rng, 2), random_density(rng, 2)
    br = w1_bracket(mu, nu, Region.chain(1))
    half = 0.5 * trace_norm(mu - nu)
    assert br.lower - 1e-8 <= half <= br.upper + 1e-8
    assert br.upper - br.lower < 1e-8


@settings(max_examples=25)
@given(seeds, st.sampled_from([1, 2]))
def test_bracket_sandwich(seed, n):
    rng = np.random.default_rng(seed)
    D = 2**n
    rank = int(rng.integers(1, D + 1))
    mu, nu = random_density(rng, D, rank), random_density(rng, D)
    br = w1_bracket(mu, nu, Region.chain(n))
    assert 0 <= br.lower <= br.upper + 1e-12
    assert br.upper <= 0.5 * n * trace_norm(mu - nu) + 1e-9
    if br.witness_observable is not None:
        assert abs(np.trace((mu - nu) @ br.witness_observable)) == pytest.approx(br.lower, rel=1e-9)


def test_bracket_of_equal_states_is_zero(rng):
    mu = random_density(rng, 4)
    br = w1_bracket(mu, mu, Region.chain(2))
    assert br.lower == br.upper == 0
    assert br.to_dict()["kind"] == "bracket"


def test_bracket_rejects_non_states():
    with pytest.raises(StateError):
        w1_bracket(np.eye(2), np.eye(2) / 2, Region.chain(1))


def test_seminorm_dominated_by_lipschitz(rng):
    spec = model_xyz(0.002, 0, 0)
    sp = spec.spectral
    for _ in range(5):
        f = random_hermitian(rng, 4)
        assert appena_slack(f, Region.chain(2), sp) >= -1e-9
    assert appena_slack(np.kron(SIGMA_1, SIGMA_3), Region.chain(2), sp) >= -1e-9
