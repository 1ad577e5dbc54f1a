import numpy as np
import pytest

from qudit_concurrence import gate_model as gm
from qudit_concurrence.gate_model import AncillaLevel as L
from qudit_concurrence.ion import (
    AncillaIonLevel as A,
    FluorescenceOutcome,
    IonLevelScheme,
    bright_probability,
    cascade_distribution,
    compile_protocol,
    compile_readout,
    execute,
    measure_cascade,
    sample_cascade,
)
from tests.oracles import random_state

SCHEME = IonLevelScheme(2)
PLAN = compile_readout(SCHEME)
BELL = np.array([1, 0, 0, 1], dtype=complex) / np.sqrt(2)


def mapped_level(level):
    """Ancilla prepared in one logical level, then sent through the mapping pulses."""
    init = SCHEME.embed(random_state(np.random.default_rng(int(level))), ancilla_level=level)
    return execute(PLAN.mapping, init, SCHEME).state


def protocol_output(chi):
    run = execute(compile_protocol(SCHEME), SCHEME.embed(chi), SCHEME)
    return execute(PLAN.mapping, run.state, SCHEME).state


def test_mapping_leaves_only_g_bright():
    assert bright_probability(mapped_level(A.G)) == pytest.approx(1.0, abs=1e-15)
    for level in (A.Gp, A.E, A.Ep):
        assert bright_probability(mapped_level(level)) < 1e-30


@pytest.mark.parametrize("level,tests", [(L.G, 1), (L.Gp, 2), (L.E, 3), (L.Ep, 4)])
def test_pure_levels_give_deterministic_outcomes(level, tests):
    state = mapped_level(A(int(level)))
    for seed in range(5):
        out, _ = measure_cascade(state, seed, PLAN, SCHEME)
        assert out == FluorescenceOutcome(level, tests)
    expected = np.zeros(4)
    expected[int(level)] = 1.0
    assert np.array_equal(cascade_distribution(state, PLAN, SCHEME).as_array(), expected)


def test_cascade_distribution_matches_gate_model():
    rng = np.random.default_rng(40)
    for _ in range(10):
        chi = random_state(rng)
        got = cascade_distribution(protocol_output(chi), PLAN, SCHEME).as_array()
        ref = gm.ancilla_probabilities(gm.run_protocol(chi)).as_array()
        assert np.max(np.abs(got - ref)) < 1e-12


def test_sampled_bell_frequencies():
    shots = 100_000
    counts = sample_cascade(protocol_output(BELL), shots, 7, PLAN, SCHEME)
    sigma = np.sqrt(shots * 0.25 * 0.75)
    assert counts.sum() == shots
    assert np.all(np.abs(counts - shots / 4) < 3 * sigma)


def test_single_shot_loop_matches_distribution():
    shots = 4000
    state = protocol_output(BELL)
    rng = np.random.default_rng(8)
    counts = np.zeros(4)
    for _ in range(shots):
        out, _ = measure_cascade(state, rng, PLAN, SCHEME)
        counts[out.level_detected] += 1
    sigma = np.sqrt(shots * 0.25 * 0.75)
    assert np.all(np.abs(counts - shots / 4) < 3 * sigma)


def test_seeded_sampling_is_reproducible():
    state = protocol_output(random_state(np.random.default_rng(41)))
    a = sample_cascade(state, 1000, 123, PLAN, SCHEME)
    b = sample_cascade(state, 1000, 123, PLAN, SCHEME)
    assert np.array_equal(a, b)
    o1, s1 = measure_cascade(state, 5, PLAN, SCHEME)
    o2, s2 = measure_cascade(state, 5, PLAN, SCHEME)
    assert o1 == o2
    assert np.array_equal(s1.amplitudes, s2.amplitudes)


def test_collapse_after_bright_test():
    state = protocol_output(BELL)
    rng = np.random.default_rng(9)
    for _ in range(50):
        out, post = measure_cascade(state, rng, PLAN, SCHEME)
        assert abs(post.norm() - 1) < 1e-12
        if out.num_tests < 4:
            assert bright_probability(post) == pytest.approx(1.0, abs=1e-12)
        else:
            assert bright_probability(post) < 1e-24


def test_outcome_validation():
    with pytest.raises(ValueError):
        FluorescenceOutcome(L.G, 0)
    with pytest.raises(ValueError):
        FluorescenceOutcome(L.Ep, 5)


def test_sample_rejects_zero_shots():
    with pytest.raises(ValueError):
        sample_cascade(protocol_output(BELL), 0, 1, PLAN, SCHEME)
