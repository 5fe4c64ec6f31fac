import math
import random

import numpy as np
import pytest

from ppdfl.consensus import (
    BadWeights,
    NoFiniteK,
    Trajectory,
    consensus_final,
    consensus_step,
    min_iterations,
    plain_weighted_aggregate,
    run_consensus,
)
from ppdfl.field import DimensionMismatch
from ppdfl.topology import generate_topology, mh_weights


def direct_error_norm(a, k):
    # independent oracle: matrix power + SVD-based spectral norm
    n = a.shape[0]
    m = n * np.linalg.matrix_power(a, k) - np.ones((n, n))
    return np.linalg.norm(m, 2)


def test_step_fixed_point_of_consensus():
    a = mh_weights(generate_topology("random_connected", 10, seed=1, avg_degree=3))
    states = np.full((10, 2), 3.7)
    assert np.allclose(consensus_step(states, a), states)


def test_step_two_node_average():
    a = np.full((2, 2), 0.5)
    out = consensus_step(np.array([[0.0], [10.0]]), a)
    assert np.allclose(out, [[5.0], [5.0]])


def test_step_preserves_column_sums():
    rng = np.random.default_rng(2)
    a = mh_weights(generate_topology("random_connected", 12, seed=2, avg_degree=3))
    states = rng.uniform(0, 100, (12, 3))
    stepped = consensus_step(states, a)
    assert np.allclose(stepped.sum(axis=0), states.sum(axis=0), rtol=1e-12)


def test_step_dimension_checks():
    a = np.full((2, 2), 0.5)
    with pytest.raises(DimensionMismatch):
        consensus_step(np.zeros((3, 1)), a)
    with pytest.raises(DimensionMismatch):
        consensus_step(np.zeros((2, 1)), np.zeros((2, 3)))


def test_run_consensus_zero_iterations():
    traj = run_consensus(np.array([[1.0], [2.0]]), np.full((2, 2), 0.5), 0)
    assert traj.iterations == 0
    assert traj.states.shape[0] == 1
    assert np.allclose(traj.final, [[1.0], [2.0]])


def test_run_consensus_complete_graph_one_step():
    n = 7
    a = mh_weights(generate_topology("complete", n))
    init = np.arange(n, dtype=float)[:, None]
    traj = run_consensus(init, a, 1)
    assert np.allclose(traj.final, np.full((n, 1), init.mean()), atol=1e-12)


def test_run_consensus_path_converges_to_mean():
    a = mh_weights(generate_topology("line", 3))
    init = np.array([[9.0], [0.0], [3.0]])
    traj = run_consensus(init, a, 400)
    assert np.max(np.abs(traj.final - init.mean())) < 1e-9
    assert traj.states.shape == (401, 3, 1)
    assert np.allclose(consensus_final(init, a, 400), traj.final)


def test_contraction_of_spread():
    rng = np.random.default_rng(3)
    for seed in range(10):
        n = int(rng.integers(3, 20))
        g = generate_topology(
            "random_connected", n, seed=seed, avg_degree=min(2.5, n - 1)
        )
        a = mh_weights(g)
        states = rng.uniform(-5, 5, (int(n), 1))
        spread = np.max(np.abs(states - states.mean()))
        for _ in range(30):
            states = consensus_step(states, a)
            new_spread = np.max(np.abs(states - states.mean()))
            assert new_spread <= spread + 1e-12
            spread = new_spread


def test_min_iterations_complete_graph():
    a = mh_weights(generate_topology("complete", 10))
    assert min_iterations(a, 1020431) == 1


def test_min_iterations_tight_against_direct_norm():
    rng = random.Random(17)
    p = 1020431
    for trial in range(12):
        n = rng.randrange(3, 50)
        g = generate_topology(
            "random_connected", n, seed=trial, avg_degree=rng.uniform(2, min(6, n - 1))
        )
        a = mh_weights(g)
        k = min_iterations(a, p)
        threshold = 1.0 / (2 * p * math.sqrt(n))
        assert direct_error_norm(a, k) < threshold
        if k > 1:
            assert direct_error_norm(a, k - 1) >= threshold


def test_min_iterations_line_matches_closed_form_prediction():
    p = 1020431
    a = mh_weights(generate_topology("line", 100))
    k = min_iterations(a, p)
    threshold = 1.0 / (2 * p * 10.0)
    assert direct_error_norm(a, k) < threshold
    assert direct_error_norm(a, k - 1) >= threshold


def test_min_iterations_no_finite_k():
    with pytest.raises(NoFiniteK):
        min_iterations(np.eye(3), 11)


def test_rounding_margin_with_residue_initials():
    # after K iterations from states in [0, p), every scaled state is
    # within 0.5 of the exact integer column sum
    rng = random.Random(19)
    p = 40009
    for trial in range(10):
        n = rng.randrange(3, 25)
        g = generate_topology(
            "random_connected", n, seed=100 + trial, avg_degree=min(2.5, n - 1)
        )
        a = mh_weights(g)
        k = min_iterations(a, p)
        init = np.array([[rng.randrange(p)] for _ in range(n)], dtype=float)
        final = consensus_final(init, a, k)
        assert np.max(np.abs(n * final - init.sum())) < 0.5


def test_plain_weighted_aggregate():
    assert np.allclose(plain_weighted_aggregate([[4.0, 1.0]], [1.0]), [4.0, 1.0])
    assert np.allclose(
        plain_weighted_aggregate([[1.0], [3.0]], [0.5, 0.5]), [2.0]
    )
    models = np.array([[3.0], [6.0], [-3.0]])
    assert np.allclose(
        plain_weighted_aggregate(models, [1 / 3, 1 / 3, 1 / 3]), [2.0]
    )


def test_plain_weighted_aggregate_validation():
    with pytest.raises(BadWeights):
        plain_weighted_aggregate([[1.0], [2.0]], [0.7, 0.7])
    with pytest.raises(BadWeights):
        plain_weighted_aggregate([[1.0], [2.0]], [1.5, -0.5])
    with pytest.raises(DimensionMismatch):
        plain_weighted_aggregate([[1.0], [2.0]], [1.0])


def test_trajectory_properties():
    traj = Trajectory(np.zeros((5, 3, 2)))
    assert traj.iterations == 4
    assert traj.initial.shape == (3, 2)
