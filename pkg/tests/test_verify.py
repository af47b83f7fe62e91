import json
import math

import numpy as np
import pytest

from qdarwin.dynamics import (
    default_model,
    evolve,
    gram_schmidt_ideal,
    overlap_time,
    reduced_state_S,
)
from qdarwin.qstate import Observable, TensorSpace, bloch_observable
from qdarwin.redundancy import MeasurementSearchConfig, redundancy, system_space
from qdarwin.verify import (
    SuiteConfig,
    check_cauchy_schwarz,
    check_commuting_records,
    check_convexity,
    check_dpi,
    check_duality,
    check_fannes,
    check_gram_schmidt,
    check_measurement_distance,
    check_rho_commutes,
    check_same_effect,
    check_theorem1,
    commutator_on_support,
    replay,
    run_suite,
)

from conftest import density, qubits, random_density
from test_redundancy import fourier_model

SEARCH = MeasurementSearchConfig(restarts=2)


def perfect(n=2):
    b = evolve(default_model(n, math.pi / 4))
    ideal = gram_schmidt_ideal(b, [0])
    sp = ideal.sigma.space
    return b, ideal.sigma, Observable.computational(sp, (0,)), Observable.from_basis(
        sp, (1,), ideal.ortho_branches.T)


def test_duality_on_perfect_record():
    _, sigma, a, x = perfect()
    res = check_duality(sigma, a, x)
    assert res.passed and not res.skipped
    assert res.value < 1e-10


def test_duality_skipped_without_record():
    b = evolve(default_model(2, 0.0))
    from qdarwin.dynamics import reduced_state_SF
    rho = reduced_state_SF(b, [0])
    res = check_duality(rho, Observable.computational(rho.space, (0,)),
                        Observable.computational(rho.space, (1,)))
    assert res.skipped and res.hypothesis_margin < 0


def test_duality_coarse_grains_refining_record():
    # 4-outcome record on two qubits refining a 2-outcome system observable
    sp = qubits(3)
    v = np.zeros(8)
    v[0b000] = v[0b001] = 0.5
    v[0b110] = v[0b111] = 0.5
    rho = density(sp, v)
    a = Observable.computational(sp, (0,))
    x = Observable.computational(sp, (1, 2))
    res = check_duality(rho, a, x)
    assert res.passed and res.extra["x_prime_outcomes"] == 2
    same = check_same_effect(rho, a, res.extra["x_prime"])
    assert same.passed and same.value < 1e-12


def test_same_effect_cases():
    _, sigma, a, x = perfect()
    dual = check_duality(sigma, a, x)
    assert check_same_effect(sigma, a, dual.extra["x_prime"]).passed
    sp = qubits(1)
    rho = density(sp, [1, 0])
    z = Observable.computational(sp, (0,))
    res = check_same_effect(rho, z, z)
    assert res.passed and res.value == 0


def test_rho_commutes_cases():
    b = evolve(default_model(3, math.pi / 4))
    rho_s = reduced_state_S(b)
    a = Observable.computational(rho_s.space, (0,))
    assert check_rho_commutes(rho_s, a).value < 1e-10
    b0 = evolve(default_model(3, 0.0))
    ident = Observable.identity(rho_s.space, (0,))
    assert check_rho_commutes(reduced_state_S(b0), ident).value == 0


@pytest.mark.parametrize("gamma", [1e-4, 1e-3, 1e-2])
def test_rho_commutator_scales_with_gamma(gamma):
    b = evolve(default_model(1, overlap_time(gamma)))
    rho_s = reduced_state_S(b)
    sz = Observable.computational(rho_s.space, (0,), [1.0, -1.0])
    val = check_rho_commutes(rho_s, sz, 2 * gamma).value
    assert val <= 2 * gamma
    assert val == pytest.approx(math.sqrt(2) * gamma, rel=1e-6)


def test_commuting_records():
    b = evolve(default_model(4, math.pi / 4))
    z = bloch_observable(system_space(b), 0, 0.0)
    res = check_commuting_records(b, z, z, (0, 1), cfg=SEARCH)
    assert res.passed and not res.skipped
    assert res.extra["support_se_commutator"] < 1e-12
    sx = bloch_observable(system_space(b), 0, math.pi / 2)
    assert check_commuting_records(b, z, sx, (0, 1), cfg=SEARCH).skipped


def test_commutator_on_partial_support():
    # rank-deficient rho_S: commutators outside the support are invisible
    sp = TensorSpace.from_dims([3])
    rho = np.diag([0.5, 0.5, 0.0])
    b = Observable.from_projectors(sp, (0,), [np.diag([0, 1, 0]), np.diag([1, 0, 1])])
    v = np.array([0, 1, 1]) / math.sqrt(2)
    p = np.outer(v, v)
    c = Observable.from_projectors(sp, (0,), [p, np.eye(3) - p])
    on_s, on_se = commutator_on_support(rho, b, c)
    assert on_s < 1e-15
    assert on_se > 0.1


def test_theorem1_on_qudit_records():
    b = evolve(fourier_model(3))
    sp = system_space(b)
    bb = Observable.from_projectors(sp, (0,), [np.diag([1, 1, 0, 0]), np.diag([0, 0, 1, 1])])
    cc = Observable.from_projectors(sp, (0,), [np.diag([1, 0, 1, 0]), np.diag([0, 1, 0, 1])])
    res = check_theorem1(b, bb, cc, [(0,), (1,), (2,)], cfg=SEARCH)
    assert res.passed and not res.skipped
    assert res.extra["refined_outcomes"] == 4
    rep = redundancy(b, Observable.computational(sp, (0,)), 1e-6, SEARCH)
    assert rep.r_delta >= res.extra["r0_lower"]


def test_cauchy_schwarz_cases():
    rng = np.random.default_rng(0)
    r = random_density(qubits(1), rng).matrix
    res = check_cauchy_schwarz(r, r)
    assert res.passed and res.value == 0 and res.bound == 0
    for _ in range(20):
        res = check_cauchy_schwarz(random_density(qubits(1), rng).matrix,
                                   random_density(qubits(1), rng).matrix)
        # a traceless qubit difference saturates the bound
        assert res.passed and res.margin >= -1e-15
    res = check_cauchy_schwarz(np.diag([1.0, 0.0]), np.diag([0.0, 1.0]))
    assert res.value == pytest.approx(2) and res.bound == pytest.approx(2)
    assert res.passed


def test_fannes_examples():
    res = check_fannes([0.3, 0.7], [0.3, 0.7])
    assert res.passed and res.value == 0 and res.bound == 0
    res = check_fannes([1.0, 0.0], [0.9, 0.1])
    assert res.value == pytest.approx(0.3251, abs=1e-4)
    assert res.bound == pytest.approx(0.4605, abs=1e-4)
    assert res.passed
    assert check_fannes([1.0, 0.0], [0.5, 0.5]).skipped


def test_measurement_distance_and_convexity_and_dpi():
    rng = np.random.default_rng(1)
    sp = qubits(2)
    for _ in range(10):
        rho, sigma = random_density(sp, rng), random_density(sp, rng)
        obs = bloch_observable(sp, 1, rng.uniform(0, np.pi), rng.uniform(0, 6))
        assert check_measurement_distance(rho, sigma, obs).passed
        t = rng.dirichlet(np.ones(3), size=4).T
        assert check_convexity(t, rng.dirichlet(np.ones(4))).passed
    px = rng.dirichlet(np.ones(3))
    pyx = rng.dirichlet(np.ones(3), size=3)
    pzy = rng.dirichlet(np.ones(2), size=3)
    joint = np.einsum("x,xy,yz->xyz", px, pyx, pzy)
    res = check_dpi(joint)
    assert res.passed and abs(res.hypothesis_margin) < 1e-15


def test_gram_schmidt_check():
    b = evolve(default_model(2, 1.0, g=[overlap_time(0.1), overlap_time(0.05)]))
    res = check_gram_schmidt(b, [0])
    assert res.passed and res.hypothesis_margin == pytest.approx(0.1)
    assert check_gram_schmidt(evolve(default_model(2, 0.0)), [0]).skipped


def test_suite_is_deterministic_and_replayable():
    cfg = SuiteConfig((2, 4), (0.0, math.pi / 8, math.pi / 4), 2, seed=5)
    r1 = run_suite(cfg)
    r2 = run_suite(cfg)
    assert [json.dumps(r.to_record(), sort_keys=True) for r in r1] == \
        [json.dumps(r.to_record(), sort_keys=True) for r in r2]
    assert all(r.passed for r in r1)
    target = next(r for r in r1 if r.name == "gram_schmidt" and not r.skipped)
    again = [r for r in replay(cfg, target.witness) if r.name == "gram_schmidt"]
    assert again[0].margin == target.margin
    names = {r.name for r in r1 if not r.skipped}
    assert {"rho_commutes", "cauchy_schwarz", "fannes", "dpi", "duality", "same_effect",
            "convexity", "measurement_distance", "gram_schmidt"} <= names


def test_vacuous_flag():
    res = check_cauchy_schwarz(np.diag([1.0, 0.0]), np.diag([1.0 - 1e-9, 1e-9]))
    assert not res.vacuous
    res = check_fannes([0.5, 0.5], [0.5 + 1e-12, 0.5 - 1e-12])
    assert res.vacuous
