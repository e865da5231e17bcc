import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from mgi_falqon import qstate
from mgi_falqon.graph import random_complete
from mgi_falqon.ising import IsingHamiltonian, energy_table, from_graph_reduced
from mgi_falqon.qstate import (apply_cost_phase, apply_driver, apply_driver_axiswise, basis_state,
                               expect_commutator, expect_cost, product_state, sample,
                               success_probability, uniform_state)
import oracles


def test_uniform_state():
    np.testing.assert_allclose(uniform_state(1), [2 ** -0.5, 2 ** -0.5])
    np.testing.assert_allclose(uniform_state(2), [0.5] * 4)
    assert np.all(uniform_state(3).imag == 0)
    np.testing.assert_allclose(uniform_state(4), product_state([np.pi / 2] * 4), atol=1e-15)


def test_uniform_state_bounds():
    with pytest.raises(ValueError):
        uniform_state(0)
    with pytest.raises(Exception):
        uniform_state(qstate.MAX_QUBITS + 1)


def test_product_state_endpoints():
    np.testing.assert_allclose(product_state([0.0, 0.0, 0.0]), basis_state(0, 3), atol=1e-15)
    np.testing.assert_allclose(product_state([np.pi]), [0.0, 1.0], atol=1e-15)


def test_product_state_marginal():
    psi = product_state([np.pi / 3, np.pi / 3])
    p = qstate.probabilities(psi)
    # P(qubit 0 = 1) sums indices with bit 0 set
    assert abs(p[1] + p[3] - 0.25) < 1e-12
    assert abs(p[2] + p[3] - 0.25) < 1e-12


def test_product_state_qubit_order():
    psi = product_state([np.pi, 0.0, 0.0])
    assert abs(abs(psi[1]) - 1) < 1e-15


def test_cost_phase_identities():
    rng = np.random.default_rng(1)
    psi = oracles.random_state(rng, 3)
    t = rng.normal(size=8)
    np.testing.assert_array_equal(apply_cost_phase(psi, t, 0.0), psi)
    np.testing.assert_array_equal(apply_cost_phase(psi, np.zeros(8), 0.7), psi)


def test_cost_phase_dimension_mismatch():
    with pytest.raises(ValueError):
        apply_cost_phase(uniform_state(2), np.zeros(8), 0.1)


def test_cost_phase_matches_dense_exponential():
    rng = np.random.default_rng(2)
    psi = oracles.random_state(rng, 2)
    t = rng.normal(size=4)
    ref = oracles.expm_apply(np.diag(t).astype(complex), 0.37, psi)
    assert np.abs(apply_cost_phase(psi, t, 0.37) - ref).max() < 1e-12


def test_driver_identity_and_half_rotation():
    psi = oracles.random_state(np.random.default_rng(3), 3)
    np.testing.assert_allclose(apply_driver(psi, 0.0, 0.4), psi, atol=1e-15)
    out = apply_driver(basis_state(0, 1), 1.0, np.pi / 2)
    np.testing.assert_allclose(out, [0.0, -1j], atol=1e-15)


@pytest.mark.parametrize("n", [1, 2, 3])
def test_driver_matches_dense_exponential(n):
    rng = np.random.default_rng(10 + n)
    hd = oracles.driver(n)
    for _ in range(20):
        psi = oracles.random_state(rng, n)
        beta, dt = rng.normal(), rng.uniform(0.01, 1.0)
        ref = oracles.expm_apply(hd, beta * dt, psi)
        assert np.abs(apply_driver(psi, beta, dt) - ref).max() < 1e-12
        assert np.abs(apply_driver_axiswise(psi, beta, dt) - ref).max() < 1e-12


def test_driver_walsh_and_axiswise_agree_at_width():
    rng = np.random.default_rng(4)
    psi = oracles.random_state(rng, 10)
    assert np.abs(apply_driver(psi, 0.3, 0.9) - apply_driver_axiswise(psi, 0.3, 0.9)).max() < 1e-12


def test_expect_cost_examples():
    t = np.array([3.0, -1.0, -1.0, -1.0])
    assert expect_cost(basis_state(2, 2), t) == -1.0
    assert abs(expect_cost(uniform_state(2), t)) < 1e-15
    psi = oracles.random_state(np.random.default_rng(5), 2)
    assert abs(expect_cost(psi, t) - expect_cost(np.exp(0.8j) * psi, t)) < 1e-14


def test_commutator_vanishes_on_basis_and_uniform():
    h = from_graph_reduced(random_complete(4, 0), 0, 1.0)
    t = energy_table(h)
    for k in range(8):
        assert abs(expect_commutator(basis_state(k, 3), t)) < 1e-15
    assert abs(expect_commutator(uniform_state(3), h)) < 1e-14


@pytest.mark.parametrize("n", [1, 2, 3])
def test_commutator_matches_dense(n):
    rng = np.random.default_rng(20 + n)
    hd = oracles.driver(n)
    for _ in range(20):
        couplings, fields = oracles.random_hamiltonian(rng, n)
        h = IsingHamiltonian(n, tuple(couplings), tuple(fields), 1.0)
        obs = oracles.commutator_observable(hd, oracles.ising_matrix(n, couplings, fields))
        psi = oracles.random_state(rng, n)
        ref = np.vdot(psi, obs @ psi)
        assert abs(ref.imag) < 1e-12
        assert abs(expect_commutator(psi, h) - ref.real) < 1e-10


def test_commutator_flip_path(monkeypatch):
    rng = np.random.default_rng(6)
    h = from_graph_reduced(random_complete(6, 1), 0, 0.25)
    t = energy_table(h)
    psi = oracles.random_state(rng, 5)
    walsh = expect_commutator(psi, t)
    monkeypatch.setattr(qstate, "_WALSH_MAX_QUBITS", 0)
    assert abs(expect_commutator(psi, t) - walsh) < 1e-13


def test_norm_preserved_over_many_layers():
    rng = np.random.default_rng(7)
    t = energy_table(from_graph_reduced(random_complete(6, 2), 0, 0.25))
    psi = oracles.random_state(rng, 5)
    for _ in range(1000):
        before = np.linalg.norm(psi)
        psi = apply_driver(apply_cost_phase(psi, t, 0.2), rng.normal(), 0.2)
        assert abs(np.linalg.norm(psi) - before) < 1e-12
    assert abs(np.vdot(psi, psi).real - 1) < 1e-9


def test_check_norm_is_loud():
    with pytest.raises(qstate.NormError):
        qstate.check_norm(2 * uniform_state(2))


def test_sample_basis_state():
    counts = sample(basis_state(5, 3), 100, np.random.default_rng(0))
    assert counts.counts == {5: 100}
    assert counts.total_shots == 100


def test_sample_binomial():
    shots = 10 ** 5
    counts = sample(uniform_state(1), shots, np.random.default_rng(1))
    sigma = np.sqrt(0.25 * shots)
    assert abs(counts.counts[0] - shots / 2) < 3 * sigma
    assert counts.counts[0] + counts.counts[1] == shots


def test_sample_deterministic():
    psi = oracles.random_state(np.random.default_rng(2), 4)
    a = sample(psi, 500, np.random.default_rng(99))
    b = sample(psi, 500, np.random.default_rng(99))
    assert a.counts == b.counts


def test_sample_never_hits_zero_amplitude():
    psi = np.zeros(8, dtype=complex)
    psi[[1, 6]] = 2 ** -0.5
    counts = sample(psi, 5000, np.random.default_rng(3))
    assert set(counts.counts) == {1, 6}


def test_sample_rejects_zero_shots():
    with pytest.raises(ValueError):
        sample(uniform_state(2), 0, np.random.default_rng(0))


def test_sample_converges_in_total_variation():
    rng = np.random.default_rng(4)
    for _ in range(3):
        psi = oracles.random_state(rng, 3)
        counts = sample(psi, 10 ** 6, rng)
        emp = np.zeros(8)
        for k, m in counts.counts.items():
            emp[k] = m / 10 ** 6
        assert 0.5 * np.abs(emp - qstate.probabilities(psi)).sum() < 0.02


def test_success_probability():
    assert abs(success_probability(uniform_state(3), range(8)) - 1) < 1e-15
    assert abs(success_probability(uniform_state(7), {17}) - 1 / 128) < 1e-15
    assert abs(success_probability(uniform_state(2), {1, 2, 3}) - 0.75) < 1e-15


@settings(max_examples=40, deadline=None)
@given(st.lists(st.floats(0.0, 1.0), min_size=1, max_size=6))
def test_product_state_round_trip(c):
    thetas = 2 * np.arcsin(np.sqrt(c))
    p = qstate.probabilities(product_state(thetas))
    idx = np.arange(p.size)
    for i, ci in enumerate(c):
        assert abs(p[(idx >> i) & 1 == 1].sum() - ci) < 1e-12
