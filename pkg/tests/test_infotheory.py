import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qdarwin.dynamics import default_model, evolve, gram_schmidt_ideal, reduced_state_SF
from qdarwin.errors import DomainError, OverlappingSupportError
from qdarwin.infotheory import (
    JointDistribution,
    binary_entropy,
    conditional_entropy,
    conditional_entropy_from_table,
    conditional_probability,
    joint_distribution,
    markov_check,
    mutual_information,
    sequential_chain_joint,
    shannon_entropy,
)
from qdarwin.qstate import Observable, bloch_observable, tensor_product

from conftest import density, qubits, random_density


def test_shannon_examples():
    assert shannon_entropy([1, 0]) == 0
    assert shannon_entropy([0.5, 0.5]) == pytest.approx(math.log(2))
    assert shannon_entropy([0.36, 0.64]) == pytest.approx(0.65342, abs=5e-6)


def test_distribution_validation():
    with pytest.raises(DomainError):
        shannon_entropy([0.5, 0.6])
    with pytest.raises(DomainError):
        shannon_entropy([1.1, -0.1])


def test_conditional_entropy_table_example():
    cond = np.array([[0.9, 0.1], [0.1, 0.9]])
    assert conditional_entropy_from_table(cond, [0.5, 0.5]) == pytest.approx(0.32508, abs=5e-6)
    assert conditional_entropy_from_table(cond, [0.5, 0.5]) == pytest.approx(binary_entropy(0.1))


def perfect_state():
    b = evolve(default_model(2, math.pi / 4))
    ideal = gram_schmidt_ideal(b, [0])
    sp = ideal.sigma.space
    a = Observable.computational(sp, (0,))
    x = Observable.from_basis(sp, (1,), ideal.ortho_branches.T)
    return ideal.sigma, a, x


def test_conditional_probability_examples():
    sp = qubits(1)
    rho = random_density(sp, np.random.default_rng(0))
    z = Observable.computational(sp, (0,))
    assert np.allclose(conditional_probability(rho, z, z), np.eye(2))
    sigma, a, x = perfect_state()
    assert np.allclose(conditional_probability(sigma, a, x), np.eye(2), atol=1e-14)
    ghz = density(qubits(2), [1, 0, 0, 1])
    sx = bloch_observable(ghz.space, 0, math.pi / 2)
    z1 = Observable.computational(ghz.space, (1,))
    assert np.allclose(conditional_probability(ghz, sx, z1), 0.5)


def test_conditional_entropy_cases():
    sigma, a, x = perfect_state()
    assert conditional_entropy(sigma, a, x) == pytest.approx(0, abs=1e-14)
    prod = tensor_product([density(qubits(1, 0), [0.6, 0.8]), density(qubits(1, 1), [1, 1])])
    a = Observable.computational(prod.space, (0,))
    x = Observable.computational(prod.space, (1,))
    assert conditional_entropy(prod, a, x) == pytest.approx(shannon_entropy([0.36, 0.64]))


def test_mutual_information_cases():
    sigma, a, x = perfect_state()
    rep = mutual_information(sigma, a, x)
    assert rep.mutual == pytest.approx(math.log(2), abs=1e-14)
    prod = tensor_product([density(qubits(1, 0), [0.6, 0.8]), density(qubits(1, 1), [1, 1j])])
    rep = mutual_information(prod, bloch_observable(prod.space, 0, 0.4),
                             bloch_observable(prod.space, 1, 1.1))
    assert rep.mutual == pytest.approx(0, abs=1e-14)


def test_same_subsystem_information_can_be_negative():
    sp = qubits(1)
    rho = density(sp, [1, 0])
    rep = mutual_information(rho, Observable.computational(sp, (0,)),
                             bloch_observable(sp, 0, math.pi / 2))
    assert rep.mutual == pytest.approx(-math.log(2))
    assert not rep.disjoint and math.isnan(rep.mutual_symmetric)


def test_null_outcomes_are_reported():
    sp = qubits(2)
    rho = density(sp, [1, 0, 0, 0])
    rep = mutual_information(rho, Observable.computational(sp, (0,)),
                             Observable.computational(sp, (1,)))
    assert rep.null_outcomes == (1,)


def test_joint_distribution_cases():
    prod = tensor_product([density(qubits(1, 0), [0.6, 0.8]), density(qubits(1, 1), [1, 1])])
    a = Observable.computational(prod.space, (0,))
    x = Observable.computational(prod.space, (1,))
    jd = joint_distribution(prod, a, x)
    assert np.allclose(jd.table, np.outer([0.36, 0.64], [0.5, 0.5]))
    sigma, a2, x2 = perfect_state()
    t = joint_distribution(sigma, a2, x2).table
    assert np.allclose(t, np.diag([0.5, 0.5]), atol=1e-14)
    with pytest.raises(OverlappingSupportError):
        joint_distribution(prod, a, bloch_observable(prod.space, 0, 0.3))


def test_joint_distribution_matches_explicit_conditioning():
    rng = np.random.default_rng(4)
    rho = random_density(qubits(3), rng)
    a = bloch_observable(rho.space, 0, 0.7, 0.2)
    x = Observable.computational(rho.space, (1, 2))
    table = joint_distribution(rho, a, x).table
    for j in range(4):
        px = np.trace(x.embedded(j) @ rho.matrix).real
        post = x.embedded(j) @ rho.matrix @ x.embedded(j)
        for i in range(2):
            assert table[i, j] == pytest.approx(np.trace(a.embedded(i) @ post).real, abs=1e-14)
        assert table[:, j].sum() == pytest.approx(px, abs=1e-14)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2 ** 31 - 1))
def test_venn_consistency(seed):
    rng = np.random.default_rng(seed)
    rho = random_density(qubits(3), rng, rank=1 + seed % 4)
    a = bloch_observable(rho.space, 0, rng.uniform(0, np.pi), rng.uniform(0, 2 * np.pi))
    x = Observable.from_hermitian(rho.space, (1, 2), _herm(rng, 4))
    rep = mutual_information(rho, a, x)
    assert rep.mutual == pytest.approx(rep.mutual_symmetric, abs=1e-10)
    assert rep.mutual == pytest.approx(rep.h_x - rep.h_x_given_a, abs=1e-10)
    assert rep.mutual <= min(rep.h_a, rep.h_x) + 1e-10


def _herm(rng, d):
    m = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    return m + m.conj().T


def test_joint_distribution_entropy_identity():
    jd = JointDistribution(np.array([[0.2, 0.1], [0.3, 0.4]]))
    assert jd.mutual_information() == pytest.approx(
        shannon_entropy(jd.marginal_rows) + shannon_entropy(jd.marginal_cols) - jd.entropy())


def markov_chain_setup(seed):
    rng = np.random.default_rng(seed)
    b = evolve(default_model(2, math.pi / 4, alpha=_haar(rng)))
    rho = reduced_state_SF(b, (0, 1))
    sp = rho.space
    a = Observable.computational(sp, (0,))
    bb = bloch_observable(sp, 0, rng.uniform(0, np.pi), rng.uniform(0, 2 * np.pi))
    x = Observable.from_basis(sp, (1,), b.branch_states[0].T)
    y = bloch_observable(sp, 2, rng.uniform(0, np.pi), rng.uniform(0, 2 * np.pi))
    return rho, [bb, a, x, y]


def _haar(rng):
    v = rng.normal(size=2) + 1j * rng.normal(size=2)
    return v / np.linalg.norm(v)


@pytest.mark.parametrize("seed", range(5))
def test_markov_chain_in_measurement_order(seed):
    rho, chain = markov_chain_setup(seed)
    # A first, then the records, then B; Y last
    assert markov_check(rho, chain, order=(1, 2, 0, 3)) < 1e-10


def test_markov_chain_literal_order_can_fail():
    worst = max(markov_check(*markov_chain_setup(s)) for s in range(5))
    assert worst > 1e-3


def test_markov_identical_chain_and_counterexample():
    sp = qubits(3)
    rho = random_density(sp, np.random.default_rng(2))
    z0 = Observable.computational(sp, (0,))
    assert markov_check(rho, [z0, z0, z0]) < 1e-15
    # Bell pair on qubits 0 and 2, qubit 1 in |+>: Z0 -> Z1 -> Z2 is not a chain
    v = np.zeros(8)
    v[0b000] = v[0b010] = v[0b101] = v[0b111] = 0.5
    rho = density(sp, v)
    chain = [Observable.computational(sp, (k,)) for k in range(3)]
    assert markov_check(rho, chain) == pytest.approx(0.125, abs=1e-14)
    assert markov_check(rho, chain) > 0.01


def test_chain_joint_rejects_bad_order():
    sp = qubits(1)
    rho = density(sp, [1, 0])
    z = Observable.computational(sp, (0,))
    with pytest.raises(DomainError):
        sequential_chain_joint(rho, [z, z], order=(0, 0))


@pytest.mark.parametrize("seed", range(5))
def test_dpi_along_model_chain(seed):
    rho, chain = markov_chain_setup(seed)
    j = sequential_chain_joint(rho, chain, order=(1, 2, 0, 3))
    pb = j.sum(axis=(1, 2, 3))
    h_b = shannon_entropy(pb)
    infos = []
    for axis in (1, 2, 3):
        pair = j.sum(axis=tuple(k for k in (1, 2, 3) if k != axis))
        infos.append(shannon_entropy(pb) + shannon_entropy(pair.sum(axis=0))
                     - shannon_entropy(pair.ravel()))
    assert h_b >= infos[0] - 1e-9
    assert infos[0] >= infos[1] - 1e-9 >= infos[2] - 2e-9
