import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from spinquad.rng import blocks, parallel_map, root_sequence, seed_of, spawn
from spinquad.samples import SampleSet

finite = st.floats(allow_nan=False, allow_infinity=False)


@given(arrays(float, st.tuples(st.integers(1, 20), st.integers(1, 2)), elements=finite),
       st.dictionaries(st.text("abc_", min_size=1, max_size=5), st.floats(-1e3, 1e3)))
def test_sample_csv_round_trip_is_exact(outcomes, meta):
    angles = np.linspace(0, 3, outcomes.shape[0])
    s = SampleSet("scheme", 17, angles, outcomes, meta)
    back = SampleSet.from_csv(s.to_csv())
    assert back.scheme == "scheme" and back.seed == 17 and back.metadata == meta
    assert np.array_equal(back.angles, s.angles)
    assert np.array_equal(back.outcomes, s.outcomes)
    assert back.to_csv() == s.to_csv()


def test_sample_set_helpers(tmp_path):
    s = SampleSet("x", 1, [0.0, 1.0, 0.0], [[1.0, 2.0], [3.0, 4.0], [5.0, 6.0]])
    assert len(s) == 3 and s.width == 2
    assert np.array_equal(s.at_angle(0.0), [[1.0, 2.0], [5.0, 6.0]])
    assert np.array_equal(s.unique_angles(), [0.0, 1.0])
    s.save(tmp_path / "s.csv")
    assert np.array_equal(SampleSet.load(tmp_path / "s.csv").outcomes, s.outcomes)
    with pytest.raises(ValueError):
        SampleSet("x", 1, [0.0], [[1.0], [2.0]])


def test_sample_csv_errors():
    with pytest.raises(ValueError):
        SampleSet.from_csv("a,b,c,d\n1,2,3,4\n")
    with pytest.raises(ValueError):
        SampleSet.from_csv("scheme,seed,angle_rad,outcome_1\n")


def test_seed_required():
    with pytest.raises(ValueError):
        root_sequence(None)


def test_spawn_is_reproducible_and_independent():
    a = [g.random() for g in spawn(5, 3)]
    b = [g.random() for g in spawn(5, 3)]
    assert a == b and len(set(a)) == 3
    assert seed_of(5) == 5 and seed_of(np.random.default_rng(1)) == -1
    assert seed_of(np.random.SeedSequence(8)) == 8


def test_blocks():
    assert blocks(10, 4) == [4, 4, 2]
    assert blocks(8, 4) == [4, 4]
    assert sum(blocks(100_001)) == 100_001


def test_parallel_map_preserves_order():
    args = [(i,) for i in range(50)]
    assert parallel_map(lambda i: i * i, args, threads=8) == [i * i for i in range(50)]
