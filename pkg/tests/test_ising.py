import itertools

import numpy as np
import pytest

from mgi_falqon import ResourceLimitError
from mgi_falqon.graph import (WeightedGraph, brute_force_maxcut, cut_value, index_to_bits,
                              random_complete)
from mgi_falqon.ising import (IsingHamiltonian, energy_table, expand_reduced_index,
                              from_graph_full, from_graph_reduced, ground_states)

EDGE = WeightedGraph(2, ((0, 1, 1.0),))
TRIANGLE = WeightedGraph(3, ((0, 1, 1.0), (1, 2, 1.0), (0, 2, 1.0)))


def test_full_single_edge_energies():
    h = from_graph_full(EDGE, 1.0)
    # |01> in qubit-0-first rendering is index 2; either crossing state has energy -1
    assert h.energy((0, 1)) == -1.0
    assert h.energy((0, 0)) == 1.0
    np.testing.assert_array_equal(energy_table(h), [1.0, -1.0, -1.0, 1.0])


def test_full_empty_graph():
    assert np.all(energy_table(from_graph_full(WeightedGraph(3, ()), 1.0)) == 0.0)


def test_scale_is_linear():
    g = random_complete(5, 3)
    full = energy_table(from_graph_full(g, 1.0))
    quarter = energy_table(from_graph_full(g, 0.25))
    np.testing.assert_array_equal(quarter, 0.25 * full)


def test_reduced_triangle():
    h = from_graph_reduced(TRIANGLE, 0, 1.0)
    assert h.n_qubits == 2
    assert h.couplings == ((0, 1, 1.0),)
    assert h.fields == ((0, 1.0), (1, 1.0))
    t = energy_table(h)
    np.testing.assert_array_equal(t, [3.0, -1.0, -1.0, -1.0])
    assert ground_states(t) == (-1.0, frozenset({1, 2, 3}))


def test_reduced_single_edge():
    h = from_graph_reduced(WeightedGraph(2, ((0, 1, 0.7),)), 0, 1.0)
    assert h.n_qubits == 1 and h.couplings == () and h.fields == ((0, 0.7),)
    np.testing.assert_allclose(energy_table(h), [0.7, -0.7])
    assert ground_states(energy_table(h))[1] == {1}


def test_reduced_star_is_all_fields():
    star = WeightedGraph(4, ((0, 1, 0.2), (0, 2, 0.4), (0, 3, 0.6)))
    h = from_graph_reduced(star, 0, 1.0)
    assert h.couplings == ()
    assert h.fields == ((0, 0.2), (1, 0.4), (2, 0.6))


def test_reduced_invalid_vertex():
    with pytest.raises(ValueError):
        from_graph_reduced(TRIANGLE, 3)


def test_energy_table_one_qubit():
    np.testing.assert_array_equal(energy_table(IsingHamiltonian(1, (), ((0, 1.0),))), [1.0, -1.0])


def test_energy_table_bound():
    with pytest.raises(ResourceLimitError):
        energy_table(IsingHamiltonian(5), max_qubits=4)


@pytest.mark.parametrize("table, expected", [
    ([3.0, -1.0, -1.0, -1.0], (-1.0, {1, 2, 3})),
    ([0.0, 0.0, 0.0, 0.0], (0.0, {0, 1, 2, 3})),
    ([1.0, -1.0], (-1.0, {1})),
])
def test_ground_states(table, expected):
    e, idx = ground_states(np.array(table))
    assert e == expected[0] and idx == expected[1]


@pytest.mark.parametrize("seed", range(10))
def test_full_energy_is_total_minus_twice_cut(seed):
    g = random_complete(8, seed)
    t = energy_table(from_graph_full(g, 1.0))
    for k in range(256):
        assert abs(t[k] - (g.total_weight - 2 * cut_value(g, index_to_bits(k, 8)))) < 1e-12


@pytest.mark.parametrize("seed", range(10))
@pytest.mark.parametrize("fixed", [0, 3])
def test_reduced_ground_states_are_full_optima(seed, fixed):
    g = random_complete(7, seed)
    _, optima = brute_force_maxcut(g)
    e_star, ground = ground_states(energy_table(from_graph_reduced(g, fixed, 0.25)))
    expanded = {index_to_bits(expand_reduced_index(k, fixed), 7) for k in ground}
    assert expanded == {a for a in optima if a[fixed] == 0}


def test_table_matches_term_by_term():
    rng = np.random.default_rng(0)
    g = random_complete(9, 11)
    h = from_graph_reduced(g, 0, 0.25)
    t = energy_table(h)
    for k in rng.integers(0, t.size, size=50):
        assert abs(t[k] - h.energy(index_to_bits(int(k), h.n_qubits))) < 1e-12


def test_expand_reduced_index():
    # reduced bits (a, b) on vertices (1, 2) when vertex 0 is fixed
    assert expand_reduced_index(0b11, 0) == 0b110
    assert expand_reduced_index(0b11, 1) == 0b101
    assert expand_reduced_index(0b11, 2) == 0b011
    assert all(expand_reduced_index(k, 2) == k for k in range(4))


def test_hamiltonian_validation():
    with pytest.raises(ValueError):
        IsingHamiltonian(2, ((1, 0, 1.0),))
    with pytest.raises(ValueError):
        IsingHamiltonian(2, ((0, 1, 1.0), (0, 1, 2.0)))
    with pytest.raises(ValueError):
        IsingHamiltonian(2, (), ((2, 1.0),))


def test_small_register_convention():
    """energy(b) uses z = 1 - 2b on each qubit."""
    h = IsingHamiltonian(3, ((0, 2, 0.5),), ((1, 2.0),), scale=1.0)
    for bits in itertools.product((0, 1), repeat=3):
        z = [1 - 2 * b for b in bits]
        assert h.energy(bits) == 0.5 * z[0] * z[2] + 2.0 * z[1]
