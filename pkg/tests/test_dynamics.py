import math
from itertools import product

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import random_density, random_hermitian, random_matrix
from latticeqms.catalog import (glauber_rate, model_classical_conjugation, model_xyz,
                                random_gns_model, spins_of)
from latticeqms.dynamics import (BoundNotClaimed, check_contraction, check_convergence,
                                 check_correlation_decay, check_intertwining, check_propagation,
                                 check_resolvent_bound, check_volume_limit, evolve,
                                 expm_cross_check, propagator, series_csv, stationary_state)
from latticeqms.locality import certify, delta_vector
from latticeqms.model import FiniteVolumeGenerator, assemble, unperturbed_generator
from latticeqms.operators import SIGMA_1, SIGMA_3, LocalOperator, Region, operator_norm, unvec, vec

I2 = np.eye(2, dtype=complex)
seeds = st.integers(0, 2**31 - 1)
TIMES = np.linspace(0, 3, 12)


def local_hermitian(rng, vol, sites):
    region = Region(sites)
    return LocalOperator(region, 2, random_hermitian(rng, 2 ** len(region))).on(vol)


def semi_fn(vol, sp):
    return lambda m: float(delta_vector(m, vol, sp).sum())


def test_evolution_at_zero_and_single_site_decay():
    spec = model_xyz(0, 0, 0)
    gen = assemble(spec, Region.chain(1))
    res = evolve(gen, LocalOperator.single(SIGMA_3, (0,)), [0.0, 0.5, 1.3])
    np.testing.assert_array_equal(res.observables[0], SIGMA_3)
    for t, o in zip(res.times, res.observables):
        np.testing.assert_allclose(o, math.exp(-4 * t) * SIGMA_3, atol=1e-12)


def test_expm_agrees_with_runge_kutta(rng):
    gen = assemble(random_gns_model(2, rng, 0.3), Region.chain(2))
    f = random_matrix(rng, 4)
    assert expm_cross_check(gen, f, 0.7) < 1e-6


def test_evolve_reports_traces():
    spec = model_xyz(0.002, 0, 0)
    vol = Region.chain(3)
    gen = assemble(spec, vol)
    pi = stationary_state(gen).density
    res = evolve(gen, LocalOperator.single(SIGMA_3, (1,)), TIMES, spec.spectral, pi)
    assert res.seminorm_trace[0] == pytest.approx(1.0)
    assert np.all(np.diff(res.distance_trace) <= 1e-12)
    with pytest.raises(ValueError):
        evolve(gen, LocalOperator.single(SIGMA_3, (1,)), [-1.0])


def test_stationary_state_of_unperturbed_product(rng):
    spec = random_gns_model(2, rng, coupling=0)
    vol = Region.chain(2)
    pi = stationary_state(assemble(spec, vol))
    rho = spec.single_site.rho
    np.testing.assert_allclose(pi.density, np.kron(rho, rho), atol=1e-10)
    assert pi.degeneracy == 1
    xyz = stationary_state(assemble(model_xyz(0, 0, 0), Region.chain(3)))
    np.testing.assert_allclose(xyz.density, np.eye(8) / 8, atol=1e-12)


def test_classical_lift_stationary_state_is_gibbs():
    beta, L = 0.4, 3
    conj = model_classical_conjugation(glauber_rate(beta), L)
    gen = FiniteVolumeGenerator(Region.chain(L), 2, [], conj.jumps)
    pi = stationary_state(gen)
    weights = np.array([math.exp(beta * sum(s[x] * s[(x + 1) % L] for x in range(L)))
                        for s in (spins_of(i, L) for i in range(2**L))])
    np.testing.assert_allclose(np.diag(pi.density).real, weights / weights.sum(), atol=1e-10)


def test_intertwining_residuals(rng):
    spec = model_xyz(0.1, 0.0, 0.0)
    vol = Region.chain(3)
    assert check_intertwining(unperturbed_generator(spec, vol), spec.spectral) < 1e-10
    rnd = random_gns_model(2, rng)
    vol2 = Region.chain(2)
    assert check_intertwining(unperturbed_generator(rnd, vol2), rnd.spectral) < 1e-9


def test_resolvent_bound(rng):
    spec = model_xyz(0.005, 0.0, 0.0)
    vol = Region.chain(3)
    gen = assemble(spec, vol)
    cert = certify(spec)
    obs = [local_hermitian(rng, vol, [(i,), (i + 1,)]) for i in range(2)] + [np.eye(8)]
    res = check_resolvent_bound(gen, spec, cert, 1.0, obs)
    assert res.passed
    with pytest.raises(BoundNotClaimed):
        check_resolvent_bound(gen, spec, cert, -1.0, obs)


def test_resolvent_of_constant_observable():
    spec = model_xyz(0.005, 0.0, 0.0)
    gen = assemble(spec, Region.chain(2))
    g = np.linalg.solve(2.0 * np.eye(16) - gen.heisenberg, vec(np.eye(4)))
    np.testing.assert_allclose(unvec(g), np.eye(4) / 2, atol=1e-12)


def test_contraction_without_perturbation():
    spec = model_xyz(0, 0, 0)
    vol = Region.chain(2)
    gen = assemble(spec, vol)
    cert = certify(spec)
    f = LocalOperator.single(SIGMA_3, (0,)).on(vol)
    res = check_contraction(gen, spec, cert, [f], TIMES)
    assert res.passed
    for t, _, val, bound in res.series:
        assert val == pytest.approx(math.exp(-4 * t), abs=1e-12)
        assert bound == pytest.approx(math.exp(-2 * t))


def test_contraction_small_coupling(rng):
    spec = model_xyz(0.001, 0, 0)
    vol = Region.chain(4)
    gen = assemble(spec, vol)
    obs = [local_hermitian(rng, vol, [(i,), (i + 1,)]) for i in range(3)]
    res = check_contraction(gen, spec, certify(spec), obs, TIMES)
    assert res.passed and res.series[0][2] == pytest.approx(res.series[0][3], abs=1e-12)


def test_convergence(rng):
    spec = model_xyz(0.002, 0, 0)
    vol = Region.chain(4)
    gen = assemble(spec, vol)
    cert = certify(spec)
    obs = [local_hermitian(rng, vol, [(1,)]), local_hermitian(rng, vol, [(2,)]), np.eye(16)]
    res = check_convergence(gen, spec.name, cert, obs, np.linspace(0, 5, 11),
                            semi_fn(vol, spec.spectral))
    assert res.passed
    with pytest.raises(BoundNotClaimed):
        check_convergence(gen, spec.name, certify(model_xyz(1.0, 0, 0)), obs, TIMES,
                          semi_fn(vol, spec.spectral))


def test_convergence_without_perturbation(rng):
    spec = random_gns_model(2, rng, coupling=0)
    vol = Region.chain(2)
    gen = assemble(spec, vol)
    cert = certify(spec)
    sp = spec.spectral
    f = local_hermitian(rng, vol, [(0,), (1,)])
    res = check_convergence(gen, spec.name, cert, [f], TIMES, semi_fn(vol, sp))
    assert res.passed


def test_propagation():
    spec = model_xyz(0.002, 0, 0)
    vol = Region.chain(4)
    gen = assemble(spec, vol)
    f1 = LocalOperator.single(SIGMA_3, (0,))
    f2 = LocalOperator.single(SIGMA_1, (3,))
    res = check_propagation(gen, spec, certify(spec), f1, f2, TIMES)
    assert res.passed and res.params["distance"] == 3
    assert res.series[0][2] == pytest.approx(0, abs=1e-14)
    with pytest.raises(ValueError):
        check_propagation(gen, spec, certify(spec), f1, f1, TIMES)


def test_product_dynamics_factorizes():
    spec = model_xyz(0, 0, 0)
    vol = Region.chain(3)
    gen = assemble(spec, vol)
    res = check_propagation(gen, spec, certify(spec), LocalOperator.single(SIGMA_3, (0,)),
                            LocalOperator.single(SIGMA_1, (2,)), TIMES)
    assert max(row[2] for row in res.series) < 1e-13


def test_correlations():
    spec = model_xyz(0.002, 0, 0)
    vol = Region.chain(4)
    gen = assemble(spec, vol)
    cert = certify(spec)
    pairs = [(LocalOperator.single(SIGMA_3, (0,)), LocalOperator.single(SIGMA_3, (k,))) for k in (1, 2, 3)]
    res = check_correlation_decay(gen, spec.name, cert, pairs, semi_fn(vol, spec.spectral))
    assert res.passed
    one = LocalOperator.identity(Region([(3,)]), 2)
    res1 = check_correlation_decay(gen, spec.name, cert, [(pairs[0][0], one)], semi_fn(vol, spec.spectral))
    assert res1.series[0][2] == pytest.approx(0, abs=1e-14)


def test_correlations_vanish_without_perturbation():
    spec = model_xyz(0, 0, 0)
    vol = Region.chain(3)
    gen = assemble(spec, vol)
    pairs = [(LocalOperator.single(SIGMA_3, (0,)), LocalOperator.single(SIGMA_3, (2,)))]
    res = check_correlation_decay(gen, spec.name, certify(spec), pairs, semi_fn(vol, spec.spectral))
    assert res.series[0][2] == pytest.approx(0, abs=1e-14)


def test_volume_limit():
    spec = model_xyz(0.01, 0, 0)
    f = LocalOperator.single(SIGMA_3, (0,))
    vols = [Region.chain(1), Region.chain(3, start=-1), Region.chain(5, start=-2)]
    rep = check_volume_limit(lambda v: assemble(spec, v), f, 1.0, vols)
    assert rep["increments"][1] * 10 <= rep["increments"][0]
    rep0 = check_volume_limit(lambda v: assemble(spec, v), f, 0.0, vols)
    assert max(rep0["increments"]) == 0
    free = model_xyz(0, 0, 0)
    rep_free = check_volume_limit(lambda v: assemble(free, v), f, 1.0, vols)
    assert max(rep_free["increments"]) < 1e-14


def test_series_csv_header():
    spec = model_xyz(0, 0, 0)
    gen = assemble(spec, Region.chain(1))
    res = check_contraction(gen, spec, certify(spec), [SIGMA_3], [0.0, 1.0])
    text = series_csv([res])
    assert text.splitlines()[0] == "t,quantity,value,bound"
    assert len(text.splitlines()) == 3


@settings(max_examples=15)
@given(seeds)
def test_semigroup_properties(seed):
    rng = np.random.default_rng(seed)
    gen = assemble(random_gns_model(2, rng, 0.3), Region.chain(2))
    P = propagator(gen)
    f = random_hermitian(rng, 4)
    s, t = rng.uniform(0, 1, size=2)
    np.testing.assert_allclose(P(s + t) @ vec(f), P(t) @ (P(s) @ vec(f)), atol=1e-9)
    np.testing.assert_allclose(unvec(P(t) @ vec(np.eye(4))), np.eye(4), atol=1e-10)
    z = random_matrix(rng, 4)
    pos = unvec(P(t) @ vec(z @ z.conj().T))
    assert np.linalg.eigvalsh((pos + pos.conj().T) / 2).min() >= -1e-9
    rho = random_density(rng, 4)
    rho_t = unvec(P(t).conj().T @ vec(rho))
    lhs = np.trace(rho_t @ f)
    rhs = np.trace(rho @ unvec(P(t) @ vec(f)))
    assert abs(lhs - rhs) < 1e-9


def test_correlations_nonunital_model():
    from latticeqms.catalog import spin_dissipative_example
    spec = spin_dissipative_example(epsilon=1e-4).spec
    vol = Region.chain(4)
    gen = assemble(spec, vol)
    cert = certify(spec)
    assert cert.verdict
    pairs = [(LocalOperator.single(SIGMA_3, (0,)), LocalOperator.single(SIGMA_3, (k,))) for k in (1, 2, 3)]
    res = check_correlation_decay(gen, spec.name, cert, pairs, semi_fn(vol, spec.spectral))
    assert res.passed
    assert res.series[0][2] > 0
