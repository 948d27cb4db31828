import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from spinquad.core import (
    LIGHT,
    LIGHT_SPIN,
    SPIN,
    GaussianState,
    InvariantError,
    ModeLayout,
    NumericPolicy,
    SymplecticMap,
    apply_map,
    coherent_state,
    compose,
    local_block,
    omega,
    two_mode_block,
    vacuum_state,
)
from spinquad.interactions import PassSpec, fr_pass, rotation_block, squeezer

angles = st.floats(-2 * np.pi, 2 * np.pi, allow_nan=False)
kappas = st.floats(-3, 3, allow_nan=False)
squeeze = st.floats(-1.5, 1.5, allow_nan=False)


def random_symplectic(draw_angles, r):
    maps = [fr_pass(PassSpec("Z", 1, draw_angles[0])), local_block(LIGHT_SPIN, SPIN, rotation_block(draw_angles[1])),
            squeezer(LIGHT, r), fr_pass(PassSpec("Y", -1, draw_angles[2]))]
    return compose(maps)


def test_layout_indexing():
    lay = ModeLayout(("a", "b", "c"))
    assert lay.dim == 6 and lay.index("c") == 2 and lay.index(1) == 1
    assert lay.slice("b") == slice(2, 4)
    assert lay.without("b").labels == ("a", "c")
    assert lay.with_mode("d").labels[-1] == "d"
    with pytest.raises(ValueError):
        ModeLayout(("a", "a"))
    with pytest.raises(KeyError):
        lay.index("z")
    with pytest.raises(KeyError):
        lay.index(3)


def test_omega_blocks():
    om = omega(2)
    assert np.array_equal(om[:2, :2], [[0, 1], [-1, 0]])
    assert np.array_equal(om[2:, 2:], [[0, 1], [-1, 0]])
    assert not om[:2, 2:].any()


def test_vacuum_and_coherent():
    v = vacuum_state()
    assert np.array_equal(v.cov, 0.5 * np.eye(4))
    c = coherent_state(LIGHT_SPIN, SPIN, 1 + 2j)
    assert np.allclose(c.mean, [0, 0, np.sqrt(2), 2 * np.sqrt(2)])
    assert np.array_equal(c.reduced(LIGHT).mean, [0, 0])
    with pytest.raises(ValueError):
        vacuum_state(ModeLayout(()))


def test_state_is_read_only_and_shape_checked():
    v = vacuum_state()
    with pytest.raises(ValueError):
        v.mean[0] = 1.0
    with pytest.raises(ValueError):
        GaussianState(np.zeros(3), np.eye(4))


def test_validate_rejects_unphysical():
    bad = GaussianState(np.zeros(4), 0.1 * np.eye(4))
    with pytest.raises(InvariantError, match="uncertainty"):
        bad.validate()
    asym = np.eye(4) * 0.5
    asym[0, 1] = 1e-6
    with pytest.raises(InvariantError, match="symmetric"):
        GaussianState(np.zeros(4), asym).validate()
    with pytest.raises(InvariantError, match="non-finite"):
        GaussianState(np.array([np.nan, 0, 0, 0]), 0.5 * np.eye(4)).validate()


def test_apply_map_rejects_non_symplectic():
    with pytest.raises(InvariantError):
        apply_map(vacuum_state(), SymplecticMap(2 * np.eye(4)))
    loose = NumericPolicy(symplectic=10.0)
    apply_map(vacuum_state(), SymplecticMap(1.01 * np.eye(4)), loose)
    with pytest.raises(ValueError):
        apply_map(vacuum_state(), SymplecticMap(np.eye(2)))


def test_compose_order_is_chronological():
    a = local_block(LIGHT_SPIN, LIGHT, rotation_block(0.3))
    b = squeezer(LIGHT, 0.7)
    ab = compose([a, b])
    assert np.allclose(ab.matrix, b.matrix @ a.matrix)
    with pytest.raises(ValueError):
        compose([])
    with pytest.raises(ValueError):
        compose([a, SymplecticMap(np.eye(2))])


def test_two_mode_block_distinct():
    with pytest.raises(ValueError):
        two_mode_block(LIGHT_SPIN, LIGHT, LIGHT, np.eye(4))


def test_displacement_composition():
    a = SymplecticMap(np.eye(4), [1, 0, 0, 0])
    b = SymplecticMap(rotation_block_4(np.pi / 2), [0, 1, 0, 0])
    ab = compose([a, b])
    state = apply_map(apply_map(vacuum_state(), a), b)
    assert np.allclose(apply_map(vacuum_state(), ab).mean, state.mean)
    inv = ab.inverse()
    assert np.allclose(compose([ab, inv]).matrix, np.eye(4))
    assert np.allclose(compose([ab, inv]).displacement, 0)


def rotation_block_4(theta):
    m = np.eye(4)
    m[:2, :2] = rotation_block(theta)
    return m


@given(st.tuples(kappas, angles, kappas), squeeze)
def test_maps_are_symplectic_with_unit_determinant(ang, r):
    m = random_symplectic(ang, r)
    assert m.symplectic_defect() < 1e-9 * max(1.0, np.abs(m.matrix).max() ** 2)
    assert np.linalg.det(m.matrix) == pytest.approx(1.0, rel=1e-8)


@given(st.tuples(kappas, angles, kappas), squeeze, st.tuples(angles, squeeze))
def test_sequential_application_equals_composition(ang, r, extra):
    m1 = random_symplectic(ang, r)
    m2 = compose([local_block(LIGHT_SPIN, LIGHT, rotation_block(extra[0])), squeezer(SPIN, extra[1])])
    s0 = coherent_state(LIGHT_SPIN, SPIN, 0.4 - 0.2j)
    seq = apply_map(apply_map(s0, m1), m2)
    once = apply_map(s0, compose([m1, m2]))
    assert np.allclose(seq.mean, once.mean, atol=1e-9)
    assert np.allclose(seq.cov, once.cov, rtol=1e-9, atol=1e-9)


@given(st.tuples(kappas, angles, kappas), squeeze)
def test_physical_states_stay_physical(ang, r):
    out = apply_map(vacuum_state(), random_symplectic(ang, r))
    out.validate(NumericPolicy(uncertainty=1e-7))
    assert np.linalg.det(out.cov) == pytest.approx(1 / 16, rel=1e-6)
