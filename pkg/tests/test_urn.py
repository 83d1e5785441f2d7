from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from urnlab.field import F_general, sa_increment_expectation
from urnlab.stationary import Stability, enumerate_stationary_points
from urnlab.urn import (
    MAX_EXACT_COUNT,
    ModelSpec,
    UrnState,
    proportions,
    simulate,
    step,
    trajectory_rng,
    transition_probabilities,
)


def exact_probabilities(A, counts, beta):
    """Rational oracle for integer beta and rational A."""
    A = [[Fraction(v).limit_denominator(10**6) for v in row] for row in A]
    powers = [Fraction(c) ** beta for c in counts]
    u = [sum(a * p for a, p in zip(row, powers)) for row in A]
    total = sum(u)
    return [x / total for x in u]


# ---------------------------------------------------------------- model / state


def test_model_validation():
    with pytest.raises(ValueError):
        ModelSpec(np.array([[1.0, -0.1], [0.2, 1.0]]), 2.0)
    with pytest.raises(ValueError):
        ModelSpec(np.array([[0.0, 0.0], [0.2, 1.0]]), 2.0)
    with pytest.raises(ValueError):
        ModelSpec(np.eye(3), 0.0)
    with pytest.raises(ValueError):
        ModelSpec(np.ones((2, 3)), 1.0)
    with pytest.raises(ValueError):
        ModelSpec(np.eye(1), 1.0)


def test_model_matrix_is_read_only():
    m = ModelSpec.symmetric(0.2, 2.0)
    with pytest.raises(ValueError):
        m.A[0, 0] = 5.0


def test_model_roundtrip_dict():
    for m in (ModelSpec.symmetric(0.2, 2.0), ModelSpec.cyclic(0.5, 3.0), ModelSpec.two_type(0.3, 2.5), ModelSpec(np.eye(3), 1.5)):
        assert ModelSpec.from_dict(m.to_dict()) == m


def test_cyclic_matrix_layout():
    A = ModelSpec.cyclic(0.5, 2.0).A
    np.testing.assert_array_equal(A, [[1, 0.5, 0], [0, 1, 0.5], [0.5, 0, 1]])


def test_state_invariants():
    with pytest.raises(ValueError):
        UrnState(np.array([1, 1, 1]), n0=3, n=1)
    with pytest.raises(ValueError):
        UrnState.initial(counts=[1, 0, 1])
    with pytest.raises(OverflowError):
        UrnState(np.array([MAX_EXACT_COUNT, 1]), n0=MAX_EXACT_COUNT + 1)
    s = UrnState.initial(3)
    assert s.total == 3 and s.n == 0


@pytest.mark.parametrize(
    "counts, expected",
    [((1, 1, 1), (1 / 3, 1 / 3, 1 / 3)), ((2, 1, 1), (0.5, 0.25, 0.25)), ((5, 3, 2), (0.5, 0.3, 0.2))],
)
def test_proportions(counts, expected):
    np.testing.assert_allclose(proportions(UrnState.initial(counts=counts)), expected, rtol=0, atol=1e-15)


# ---------------------------------------------------------------- transition probabilities


def test_classical_polya():
    p = transition_probabilities(ModelSpec(np.eye(3), 1.0), UrnState.initial(counts=[2, 1, 1]))
    np.testing.assert_allclose(p, [0.5, 0.25, 0.25], atol=1e-15)


def test_all_ones_matrix_is_uniform():
    m = ModelSpec(np.ones((3, 3)), 2.7)
    for counts in ([1, 1, 1], [7, 1, 300], [2, 9, 4]):
        np.testing.assert_allclose(transition_probabilities(m, UrnState.initial(counts=counts)), [1 / 3] * 3, atol=1e-15)


def test_symmetric_hand_computation():
    m = ModelSpec.symmetric(0.2, 2.0)
    p = transition_probabilities(m, UrnState.initial(counts=[1, 1, 2]))
    oracle = exact_probabilities(m.A.tolist(), [1, 1, 2], 2)
    np.testing.assert_allclose(p, [float(x) for x in oracle], rtol=0, atol=1e-15)
    np.testing.assert_allclose(p, [2.0 / 8.4, 2.0 / 8.4, 4.4 / 8.4], atol=1e-15)


def test_dominant_colour_probability():
    m = ModelSpec(np.eye(3), 2.0)
    p = transition_probabilities(m, UrnState.initial(counts=[10**6, 1, 1]))
    exact = exact_probabilities([[1, 0, 0], [0, 1, 0], [0, 0, 1]], [10**6, 1, 1], 2)
    assert p[0] >= 1 - 3e-12
    assert abs(p[0] - float(exact[0])) < 1e-15


@st.composite
def model_and_state(draw):
    d = draw(st.integers(2, 5))
    A = np.array(draw(st.lists(st.lists(st.floats(0, 5), min_size=d, max_size=d), min_size=d, max_size=d)))
    for i in range(d):
        if not np.any(A[i] > 0):
            A[i, i] = 1.0
    beta = draw(st.floats(0.1, 6))
    counts = draw(st.lists(st.integers(1, 10**6), min_size=d, max_size=d))
    return ModelSpec(A, beta), UrnState.initial(counts=counts)


@given(model_and_state())
def test_probabilities_normalised(ms):
    model, state = ms
    p = transition_probabilities(model, state)
    assert abs(p.sum() - 1.0) < 1e-12
    assert np.all(p >= 0) and np.all(p <= 1)


@given(st.floats(0.01, 3), st.floats(0.1, 5), st.lists(st.integers(1, 1000), min_size=3, max_size=5), st.randoms())
def test_permutation_equivariance(a, beta, counts, rnd):
    model = ModelSpec.symmetric(a, beta, d=len(counts))
    perm = list(range(len(counts)))
    rnd.shuffle(perm)
    p = transition_probabilities(model, UrnState.initial(counts=counts))
    q = transition_probabilities(model, UrnState.initial(counts=[counts[i] for i in perm]))
    np.testing.assert_allclose(q, p[perm], rtol=1e-14, atol=1e-15)


def test_normalisation_bulk(rng):
    for _ in range(10_000 // 100):
        d = int(rng.integers(2, 6))
        A = rng.uniform(0, 3, size=(d, d))
        model = ModelSpec(A, float(rng.uniform(0.1, 6)))
        for _ in range(100):
            counts = rng.integers(1, 10**5, size=d)
            assert abs(transition_probabilities(model, UrnState.initial(counts=counts)).sum() - 1) < 1e-12


@given(model_and_state())
def test_sa_identity(ms):
    model, state = ms
    expected = sa_increment_expectation(model, state)
    x = proportions(state)
    gamma = 1.0 / (state.total + 1)
    np.testing.assert_allclose(expected, gamma * F_general(model, x), rtol=0, atol=1e-12)


# ---------------------------------------------------------------- step / simulate


def test_step_conserves():
    m = ModelSpec.symmetric(0.3, 2.0)
    s, c = step(m, UrnState.initial(3), np.random.default_rng(0))
    assert s.counts.sum() == 4 and s.n == 1 and 0 <= c < 3


def test_step_determinism():
    m = ModelSpec.symmetric(0.5, 2.0)

    def run():
        rng = trajectory_rng(42)
        s = UrnState.initial(3)
        for _ in range(10):
            s, _ = step(m, s, rng)
        return s.counts

    np.testing.assert_array_equal(run(), run())


def test_step_matches_simulate_bitwise():
    m = ModelSpec.cyclic(0.7, 2.5)
    rng = trajectory_rng(99, 3)
    s = UrnState.initial(counts=[2, 1, 4])
    for _ in range(5000):
        s, _ = step(m, s, rng)
    rec = simulate(m, UrnState.initial(counts=[2, 1, 4]), steps=5000, seed=99, index=3, thinning=1)
    assert rec.final_state == s
    np.testing.assert_array_equal(rec.points[-1], proportions(s))


def test_simulate_shapes():
    m = ModelSpec.symmetric(0.2, 2.0)
    rec = simulate(m, steps=1, seed=0)
    assert rec.final_state.total == 4 and len(rec) == 2
    rec = simulate(m, steps=1050, seed=1, thinning=100)
    assert len(rec) == -(-1050 // 100) + 1
    assert rec.times[0] == 0 and rec.times[-1] == 1050
    assert np.all(np.diff(rec.times) > 0)
    np.testing.assert_allclose(rec.points.sum(axis=1), 1.0, atol=1e-12)
    assert np.all(rec.points >= 0)
    with pytest.raises(ValueError):
        simulate(m, steps=0)
    with pytest.raises(ValueError):
        simulate(m, steps=10, thinning=0)


def test_simulate_times_and_points_consistent():
    m = ModelSpec.symmetric(0.4, 1.5)
    rec = simulate(m, steps=3000, seed=5, thinning=7)
    final = rec.final_state
    assert final.n == 3000 and final.counts.sum() == final.n0 + 3000
    np.testing.assert_array_equal(rec.points[-1], final.counts / final.total)


def test_simulate_determinism():
    m = ModelSpec.symmetric(0.2, 2.0)
    assert simulate(m, steps=20_000, seed=7, index=2) == simulate(m, steps=20_000, seed=7, index=2)
    assert simulate(m, steps=20_000, seed=7, index=2) != simulate(m, steps=20_000, seed=7, index=3)


def test_simulate_spans_chunks():
    # a run longer than one uniform chunk equals the step-by-step path
    m = ModelSpec.symmetric(0.6, 1.2)
    rec = simulate(m, steps=70_000, seed=3, thinning=70_000)
    rng = trajectory_rng(3)
    s = UrnState.initial(3)
    for _ in range(70_000):
        s, _ = step(m, s, rng)
    assert rec.final_state == s


def test_simulate_refuses_overflow():
    m = ModelSpec.symmetric(0.2, 2.0)
    big = UrnState(np.array([MAX_EXACT_COUNT - 10, 5, 5], dtype=np.int64), n0=MAX_EXACT_COUNT)
    with pytest.raises(OverflowError):
        simulate(m, big, steps=1)


def test_seed_split_rule():
    a = trajectory_rng(7, 5).random(4)
    b = np.random.default_rng(7 ^ 5).random(4)
    np.testing.assert_array_equal(a, b)


# ---------------------------------------------------------------- finite-horizon examples


@pytest.mark.slow
def test_symmetric_a02_final_near_stable_points():
    m = ModelSpec.symmetric(0.2, 2.0)
    targets = [p.location for p in enumerate_stationary_points(0.2, 2.0) if p.stability is Stability.STABLE]
    hits = 0
    for i in range(20):
        x = simulate(m, steps=100_000, seed=7, index=i).points[-1]
        hits += min(np.linalg.norm(x - t) for t in targets) < 0.05
    assert hits >= 18, f"{hits}/20 final proportions within 0.05 of an asymmetric stable point"


@pytest.mark.slow
def test_cyclic_beta3_majority_at_center():
    m = ModelSpec.cyclic(1.0, 3.0)
    hits = sum(
        np.linalg.norm(simulate(m, steps=1_000_000, seed=7, index=i).points[-1] - 1 / 3) < 0.02 for i in range(20)
    )
    assert hits > 10
