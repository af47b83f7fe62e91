import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qdarwin.errors import (
    CommutatorError,
    IncompleteMapError,
    InvalidObservableError,
    InvalidStateError,
    LabelCollisionError,
    NullConditioningError,
    SpaceMismatchError,
)
from qdarwin.qstate import (
    DensityOperator,
    Observable,
    StateVector,
    SubsystemLabel,
    TensorSpace,
    bloch_observable,
    born_probabilities,
    coarse_grain,
    conditional_state,
    max_commutator,
    partial_trace,
    refine,
    refinement_map,
    tensor_product,
)

from conftest import density, qubits, random_density

PLUS = np.array([1, 1]) / np.sqrt(2)


def ket(space, vec):
    return StateVector.normalized(space, vec)


def test_space_labels_must_be_unique():
    with pytest.raises(LabelCollisionError):
        TensorSpace((SubsystemLabel(0, 2), SubsystemLabel(0, 3)))


def test_state_must_be_normalised():
    with pytest.raises(InvalidStateError):
        StateVector(qubits(1), np.array([1.0, 1.0]))


def test_density_rejects_negative_eigenvalue():
    with pytest.raises(InvalidStateError):
        DensityOperator(qubits(1), np.diag([1.5, -0.5]))


def test_tensor_product_basis_and_uniform():
    s0, s1 = qubits(1, 0), qubits(1, 1)
    out = tensor_product([ket(s0, [1, 0]), ket(s1, [1, 0])])
    assert np.allclose(out.amplitudes, [1, 0, 0, 0])
    out = tensor_product([ket(s0, PLUS), ket(s1, PLUS)])
    assert np.allclose(out.amplitudes, 0.5)


def test_tensor_product_three_factors():
    out = tensor_product([ket(qubits(1, 0), [0.6, 0.8]), ket(qubits(1, 1), PLUS),
                          ket(qubits(1, 2), PLUS)])
    assert np.linalg.norm(out.amplitudes) == pytest.approx(1.0, abs=1e-12)
    assert out.amplitudes[0] == pytest.approx(0.3)


def test_tensor_product_label_collision():
    with pytest.raises(LabelCollisionError):
        tensor_product([ket(qubits(1), PLUS), ket(qubits(1), PLUS)])


def test_partial_trace_product_and_ghz(rng):
    ra, rb = random_density(qubits(1, 0), rng), random_density(qubits(2, 1), rng)
    joint = tensor_product([ra, rb])
    assert np.allclose(partial_trace(joint, {0}).matrix, ra.matrix, atol=1e-12)
    assert np.allclose(partial_trace(joint, {1, 2}).matrix, rb.matrix, atol=1e-12)
    ghz = density(qubits(2), [1, 0, 0, 1])
    assert np.allclose(partial_trace(ghz, {0}).matrix, np.eye(2) / 2)


def test_born_probabilities_examples():
    sp = qubits(1)
    z = Observable.computational(sp, (0,))
    assert np.allclose(born_probabilities(density(sp, PLUS), z), [0.5, 0.5])
    assert np.allclose(born_probabilities(density(sp, [1, 0]), z), [1, 0])


def test_born_space_mismatch():
    with pytest.raises(SpaceMismatchError):
        born_probabilities(density(qubits(1), PLUS), Observable.computational(qubits(2), (0,)))


def test_observable_validation():
    sp = qubits(1)
    with pytest.raises(InvalidObservableError):
        Observable.from_projectors(sp, (0,), [np.diag([1, 0]), np.diag([1, 0])])
    with pytest.raises(InvalidObservableError):
        Observable.from_projectors(sp, (0,), [np.diag([1, 0])])
    with pytest.raises(InvalidObservableError):
        Observable.from_projectors(sp, (0,), [np.diag([1, 0]), np.diag([0, 1])], [1.0, 1.0])


def test_from_hermitian_merges_degenerate_eigenvalues():
    sp = TensorSpace.from_dims([3])
    obs = Observable.from_hermitian(sp, (0,), np.diag([1.0, 1.0, -2.0]))
    assert len(obs) == 2
    assert sorted(np.trace(p).real for p in obs.projectors) == pytest.approx([1, 2])


def test_conditional_state_examples():
    sp = qubits(1)
    z = Observable.computational(sp, (0,))
    post = conditional_state(density(sp, PLUS), z, 0)
    assert np.allclose(post.matrix, np.diag([1, 0]))
    ghz = density(qubits(2), [1, 0, 0, 1])
    z0 = Observable.computational(qubits(2), (0,))
    post = conditional_state(ghz, z0, 0)
    assert np.allclose(post.matrix, np.diag([1, 0, 0, 0]))
    with pytest.raises(NullConditioningError):
        conditional_state(density(sp, [1, 0]), z, 1)


def test_coarse_grain_ranks_and_identity():
    sp = qubits(2)
    x = Observable.computational(sp, (0, 1))
    two = coarse_grain(x, {0: 0, 1: 0, 2: 1, 3: 1})
    assert len(two) == 2
    assert [round(np.trace(p).real) for p in two.projectors] == [2, 2]
    same = coarse_grain(x, [0, 1, 2, 3])
    for p, q in zip(same.projectors, x.projectors):
        assert np.allclose(p, q)
    with pytest.raises(IncompleteMapError):
        coarse_grain(x, {0: 0, 1: 0})


def test_refine_examples():
    sp = qubits(1)
    z = Observable.computational(sp, (0,))
    for r in (refine(z, z), refine(z, Observable.identity(sp, (0,)))):
        assert len(r) == 2
        assert all(any(np.allclose(p, q) for q in z.projectors) for p in r.projectors)
    with pytest.raises(CommutatorError) as exc:
        refine(z, bloch_observable(sp, 0, np.pi / 2))
    assert exc.value.max_norm > 0.1


def test_refine_then_coarse_grain_recovers_factors():
    sp = TensorSpace.from_dims([4])
    b = Observable.from_projectors(sp, (0,), [np.diag([1, 1, 0, 0]), np.diag([0, 0, 1, 1])])
    c = Observable.from_projectors(sp, (0,), [np.diag([1, 0, 1, 0]), np.diag([0, 1, 0, 1])])
    a = refine(b, c)
    assert len(a) == 4
    for axis, src in ((0, b), (1, c)):
        back = coarse_grain(a, refinement_map(a, axis))
        for p, q in zip(back.projectors, src.projectors):
            assert np.max(np.abs(p - q)) < 1e-12


def test_max_commutator_on_disjoint_supports_is_zero():
    sp = qubits(2)
    assert max_commutator(bloch_observable(sp, 0, 0.3), bloch_observable(sp, 1, 1.2)) < 1e-15


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 3), st.integers(0, 2 ** 31 - 1), st.floats(0, np.pi), st.floats(0, 2 * np.pi))
def test_born_normalisation_and_repeatability(n, seed, theta, phi):
    rng = np.random.default_rng(seed)
    sp = qubits(n)
    rho = random_density(sp, rng, rank=1 + seed % 3)
    obs = bloch_observable(sp, seed % n, theta, phi)
    p = born_probabilities(rho, obs)
    assert abs(p.sum() - 1) < 1e-10
    for k, pk in enumerate(p):
        if pk > 1e-6:
            again = born_probabilities(conditional_state(rho, obs, k), obs)
            assert again[k] == pytest.approx(1.0, abs=1e-10)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2 ** 31 - 1))
def test_observable_projector_algebra(seed):
    rng = np.random.default_rng(seed)
    m = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
    obs = Observable.from_hermitian(TensorSpace.from_dims([4]), (0,), m + m.conj().T)
    total = sum(obs.projectors)
    assert np.max(np.abs(total - np.eye(4))) < 1e-10
    for i, p in enumerate(obs.projectors):
        for j, q in enumerate(obs.projectors):
            assert np.max(np.abs(p @ q - (p if i == j else 0))) < 1e-10
