import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from conftest import random_density, random_hermitian, random_matrix
from latticeqms.catalog import model_xyz, random_gns_model, spin_dissipative_example
from latticeqms.dynamics import choi_min_eigenvalue
from latticeqms.model import (InteractionTerm, ModelError, ModelSpec, assemble, operator_on,
                              split_perturbation, translate_term, unperturbed_generator)
from latticeqms.operators import (SIGMA_1, SIGMA_2, SIGMA_3, LocalOperator, Region, embed_matrix,
                                  unvec, vec)
from latticeqms.single_site import SingleSiteGenerator

I2 = np.eye(2, dtype=complex)
seeds = st.integers(0, 2**31 - 1)


def brute_force_lindblad(hams, jumps, f):
    out = np.zeros_like(f)
    for k in hams:
        out += 1j * (k @ f - f @ k)
    for l in jumps:
        ld = l.conj().T
        out += ld @ (f @ l - l @ f) + (ld @ f - f @ ld) @ l
    return out


def test_empty_model_assembles_to_zero():
    spec = ModelSpec("empty", 2, 1, SingleSiteGenerator(2, I2 / 2, ()), ())
    gen = assemble(spec, Region.chain(2))
    np.testing.assert_array_equal(gen.heisenberg, 0)


def test_xyz_two_sites_matches_pauli_algebra():
    J1, J2, J3 = 0.3, -0.2, 0.7
    gen = assemble(model_xyz(J1, J2, J3), Region.chain(2))
    assert gen.heisenberg.shape == (16, 16)
    f = np.kron(SIGMA_3, I2)
    expected = -4 * f + 2 * J1 * np.kron(SIGMA_2, SIGMA_1) - 2 * J2 * np.kron(SIGMA_1, SIGMA_2)
    np.testing.assert_allclose(unvec(gen.heisenberg @ vec(f)), expected, atol=1e-12)


@pytest.mark.parametrize("spec", [model_xyz(0.1, 0.2, 0.3), spin_dissipative_example().spec,
                                  random_gns_model(2, np.random.default_rng(3), 0.1)],
                         ids=["xyz", "spin-dissipative", "random"])
def test_generators_are_unital_and_match_brute_force(spec, rng):
    vol = Region.chain(3)
    gen = assemble(spec, vol)
    D = gen.dim
    np.testing.assert_allclose(gen.heisenberg @ vec(np.eye(D)), 0, atol=1e-12)
    f = random_matrix(rng, D)
    np.testing.assert_allclose(unvec(gen.heisenberg @ vec(f)),
                               brute_force_lindblad(gen.hamiltonians, gen.jumps, f), atol=1e-10)
    np.testing.assert_allclose(gen.apply(f), unvec(gen.heisenberg @ vec(f)), atol=1e-10)
    rho = random_density(rng, D)
    np.testing.assert_allclose(gen.apply_dual(rho), unvec(gen.schrodinger @ vec(rho)), atol=1e-10)
    assert np.linalg.eigvals(gen.heisenberg).real.max() <= 1e-9


def test_split_for_xyz_is_pure_hamiltonian():
    spec = model_xyz(0.1, 0.0, 0.05)
    vol = Region.chain(3)
    L0, L1 = split_perturbation(spec, vol)
    np.testing.assert_allclose(L0, unperturbed_generator(spec, vol).heisenberg)
    K = sum(embed_matrix(J * np.kron(s, s), [i, i + 1], 3, 2)
            for i in range(2) for J, s in ((0.1, SIGMA_1), (0.05, SIGMA_3)))
    expected = 1j * (np.kron(np.eye(8), K) - np.kron(K.T, np.eye(8)))
    np.testing.assert_allclose(L1, expected, atol=1e-12)


def test_split_reassembles_for_perturbed_jumps():
    spec = spin_dissipative_example(epsilon=0.05).spec
    vol = Region.chain(4)
    L0, L1 = split_perturbation(spec, vol)
    np.testing.assert_allclose(L0 + L1, assemble(spec, vol).heisenberg, atol=1e-10)


def test_single_site_only_model_has_no_dissipative_perturbation():
    single = SingleSiteGenerator(2, I2 / 2, (SIGMA_1 / math.sqrt(2),))
    k = operator_on(0.3 * SIGMA_3, [(0,)], 2)
    term = InteractionTerm("field", Region([(0,)]), hamiltonian=k,
                           jump=operator_on(SIGMA_1 / math.sqrt(2), [(0,)], 2), unperturbed=((0,), 0))
    spec = ModelSpec("field", 2, 1, single, [term])
    vol = Region.chain(2)
    L0, L1 = split_perturbation(spec, vol)
    K = embed_matrix(0.3 * SIGMA_3, [0], 2, 2) + embed_matrix(0.3 * SIGMA_3, [1], 2, 2)
    np.testing.assert_allclose(L1, 1j * (np.kron(np.eye(4), K) - np.kron(K.T, np.eye(4))), atol=1e-12)


def test_translate_term():
    spec = model_xyz(1.0, 0.0, 0.0)
    t = spec.terms[0]
    same = translate_term(t, (0,))
    assert same.region == t.region
    np.testing.assert_array_equal(same.hamiltonian.matrix, t.hamiltonian.matrix)
    moved = translate_term(t, (1,))
    assert moved.region == Region([(1,), (2,)])
    np.testing.assert_array_equal(moved.hamiltonian.matrix, t.hamiltonian.matrix)
    twice = translate_term(translate_term(t, (2,)), (3,))
    assert twice.region == translate_term(t, (5,)).region


def test_model_validation():
    single = SingleSiteGenerator(2, I2 / 2, (SIGMA_1,))
    jump = operator_on(SIGMA_1, [(0,)], 2)
    a = InteractionTerm("a", Region([(0,)]), jump=jump, unperturbed=((0,), 0))
    b = InteractionTerm("b", Region([(0,), (1,)]), jump=operator_on(np.kron(SIGMA_1, I2), [(0,), (1,)], 2),
                        unperturbed=((0,), 0))
    with pytest.raises(ModelError):
        ModelSpec("non-injective", 2, 1, single, [a, b])
    with pytest.raises(ModelError):
        InteractionTerm("h", Region([(0,)]), hamiltonian=operator_on(SIGMA_1 + 1j * SIGMA_3, [(0,)], 2))
    with pytest.raises(ModelError):
        ModelSpec("range", 2, 1, single, [b], range=0)


def test_periodic_boundary_adds_wrapping_bond():
    spec = model_xyz(0.2, 0.0, 0.0)
    vol = Region.chain(3)
    open_gen = assemble(spec, vol)
    ring = assemble(spec, vol, periodic=True, shape=[3])
    assert len(ring.hamiltonians) == len(open_gen.hamiltonians) + 1
    with pytest.raises(ModelError):
        assemble(spec, vol, periodic=True)


@pytest.mark.parametrize("spec", [model_xyz(0.1, 0.2, 0.3), spin_dissipative_example().spec,
                                  random_gns_model(2, np.random.default_rng(5), 0.2)],
                         ids=["xyz", "spin-dissipative", "random"])
def test_semigroup_is_completely_positive(spec):
    for L in (2, 3):
        gen = assemble(spec, Region.chain(L))
        for t in (0.1, 1.0):
            assert choi_min_eigenvalue(gen, t) >= -1e-8


@given(seeds)
def test_generator_action_is_hermiticity_preserving(seed):
    rng = np.random.default_rng(seed)
    gen = assemble(random_gns_model(2, rng, 0.3), Region.chain(2))
    f = random_hermitian(rng, 4)
    out = gen.apply(f)
    np.testing.assert_allclose(out, out.conj().T, atol=1e-12)
