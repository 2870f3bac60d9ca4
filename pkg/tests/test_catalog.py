import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from latticeqms.catalog import (BUILTINS, builtin, classical_generator, constant_rate, glauber_rate,
                                model_classical_conjugation, model_spin_dissipative, model_xyz,
                                random_gns_model, random_gns_single_site, spin_dissipative_example,
                                spin_dissipative_eigenvalues, spins_of, xyz_bounds)
from latticeqms.fermions import FermionModelSpec
from latticeqms.locality import certify
from latticeqms.model import ModelError, ModelSpec
from latticeqms.operators import SIGMA_1, SIGMA_2, embed_matrix, operator_norm
from latticeqms.single_site import check_gns_selfadjoint

seeds = st.integers(0, 2**31 - 1)


def jumps_of(spec):
    return [t.jump.matrix for t in spec.terms]


def test_exact_dissipative_jumps_have_zero_distance():
    a0, a1, b0, b1 = 0.7, -0.4, 0.3, -0.2
    a, b = np.diag([a0, a1]), np.diag([b0, b1])
    sd = model_spin_dissipative([SIGMA_1 @ a, SIGMA_2 @ a, b], radius=0)
    assert sd.Delta12 < 1e-7 and sd.Delta3 < 1e-7
    np.testing.assert_allclose(np.abs(sd.alpha), [abs(a0), abs(a1)], atol=1e-6)
    np.testing.assert_allclose(sd.beta, [b0, b1], atol=1e-6)
    ev = np.sort(sd.spec.spectral.eigenvalues)
    np.testing.assert_allclose(ev, spin_dissipative_eigenvalues(a0, a1, b0, b1), atol=1e-6)
    assert sd.eta_formula == pytest.approx(sd.spec.spectral.eta, rel=1e-5)


def test_distance_minimization_beats_random_probes():
    sd = spin_dissipative_example(epsilon=0.05)
    l1, l2, l3 = jumps_of(sd.spec)
    s1, s2 = embed_matrix(SIGMA_1, [1], 3, 2), embed_matrix(SIGMA_2, [1], 3, 2)

    def at(p):
        return embed_matrix(np.diag(p).astype(complex), [1], 3, 2)

    rng = np.random.default_rng(7)
    centre_a, centre_b = np.array(sd.alpha), np.array(sd.beta)
    for _ in range(1000):
        p = centre_a + rng.normal(scale=0.2, size=2)
        g = at(p)
        probe = operator_norm(s1 @ g - l1) + operator_norm(s2 @ g - l2)
        assert sd.Delta12 <= probe + 1e-9
        q = centre_b + rng.normal(scale=0.2, size=2)
        assert sd.Delta3 <= operator_norm(at(q) - l3) + 1e-9


def test_dissipative_model_metadata():
    sd = spin_dissipative_example()
    assert sd.spec.range == 2
    assert check_gns_selfadjoint(sd.spec.single_site)[0]
    cert = certify(sd.spec)
    assert cert.lambda1 == pytest.approx(min(sd.extras["lambda"], sd.extras["mu"]))
    assert cert.verdict
    assert cert.M <= sd.M_bound
    with pytest.raises(ModelError):
        model_spin_dissipative([np.eye(2)] * 2, radius=0)


def test_xyz_constants():
    b = xyz_bounds(0.01, 0, 0)
    assert b["threshold"] == pytest.approx(1 / (48 * math.sqrt(2)))
    sp = model_xyz(0.01, 0, 0).spectral
    assert sp.gap == pytest.approx(b["lambda1"]) and sp.eta == pytest.approx(b["eta"])


@pytest.mark.parametrize("rate,L", [(glauber_rate(0.3), 4), (constant_rate(0.7), 3), (glauber_rate(1.5), 3)])
def test_classical_conjugation(rate, L):
    conj = model_classical_conjugation(rate, L)
    assert conj.residual < 1e-9
    np.testing.assert_allclose(conj.classical.sum(axis=1), 0, atol=1e-12)


def test_classical_generator_by_hand():
    Q = classical_generator(constant_rate(1.0), 1)
    np.testing.assert_allclose(Q, [[-1, 1], [1, -1]])
    np.testing.assert_array_equal(spins_of(0, 2), [1, 1])
    np.testing.assert_array_equal(spins_of(1, 2), [1, -1])


def test_conjugation_with_diagonal_jump_is_still_classical():
    conj = model_classical_conjugation(glauber_rate(0.2), 3, diagonal_jump=lambda x, s: 0.3 * s[x])
    assert conj.residual < 1e-9


@settings(max_examples=15)
@given(seeds, st.sampled_from([2, 3]))
def test_random_sites_are_gns_selfadjoint(seed, dim):
    g = random_gns_single_site(dim, np.random.default_rng(seed))
    assert check_gns_selfadjoint(g)[0]


def test_random_model_is_deterministic():
    a = random_gns_model(2, np.random.default_rng(4))
    b = random_gns_model(2, np.random.default_rng(4))
    np.testing.assert_array_equal(a.terms[0].hamiltonian.matrix, b.terms[0].hamiltonian.matrix)


@pytest.mark.parametrize("name", sorted(BUILTINS))
def test_builtins_instantiate(name):
    spec = builtin(name)
    assert isinstance(spec, (ModelSpec, FermionModelSpec))
    with pytest.raises(KeyError):
        builtin("nope")


def test_builtin_parameter_override():
    spec = builtin("xyz", J1=0.5)
    assert not certify(spec).verdict
