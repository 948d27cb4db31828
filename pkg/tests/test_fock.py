import numpy as np
import pytest
from scipy.interpolate import RegularGridInterpolator
from hypothesis import given, settings
from hypothesis import strategies as st

from spinquad import fock
from spinquad.core import SPIN, apply_map
from spinquad.interactions import HomodyneSetting, PassSpec, fr_pass, homodyne_statistics, rotation_block
from spinquad.schemes import joint_state, spin_coherent
from spinquad.tomography import GridSpec, analytic_reference

D = 30


def coherent(alpha, d=D):
    return fock.single_mode(fock.coherent_ket(d, alpha))


def test_commutator_away_from_cutoff():
    x, p = fock.quadrature_operator(D, "x"), fock.quadrature_operator(D, "p")
    comm = x @ p - p @ x
    assert np.allclose(comm[:-1, :-1], 1j * np.eye(D - 1))
    with pytest.raises(ValueError):
        fock.quadrature_operator(1, "x")
    with pytest.raises(ValueError):
        fock.quadrature_operator(4, "q")


def test_coherent_moments():
    m, c = fock.quadrature_moments(coherent(0.6 + 0.8j))
    assert np.allclose(m, np.sqrt(2) * np.array([0.6, 0.8]), atol=1e-10)
    assert np.allclose(c, 0.5 * np.eye(2), atol=1e-10)


def test_squeezed_ket_matches_squeezer_convention():
    s = fock.single_mode(fock.squeezed_ket(60, 0.5))
    assert s.trace == pytest.approx(1.0, abs=1e-9)
    _, c = fock.quadrature_moments(s)
    assert np.allclose(c, np.diag([0.5 * np.exp(-1), 0.5 * np.exp(1)]), atol=1e-8)


def test_rotation_unitary_matches_phase_space_rotation():
    theta = 0.9
    s = fock.evolve(coherent(1.0 - 0.5j), fock.rotation_unitary(D, theta))
    m, _ = fock.quadrature_moments(s)
    m0 = np.sqrt(2) * np.array([1.0, -0.5])
    assert np.allclose(m, rotation_block(theta) @ m0, atol=1e-9)


def test_validate_and_leakage():
    s = coherent(3.0, d=6)
    assert s.leakage > 1e-3
    with pytest.raises(ValueError, match="trace"):
        s.validate()
    coherent(0.5).validate()
    with pytest.raises(ValueError):
        fock.TruncatedFockState(np.eye(3), (2,))
    with pytest.raises(ValueError):
        fock.fock_ket(3, 3)


def test_partial_trace_of_product():
    a, b = coherent(0.3, 8), fock.single_mode(fock.fock_ket(8, 1))
    j = fock.product(a, b)
    assert np.allclose(fock.partial_trace(j, 0).rho, a.rho)
    assert np.allclose(fock.partial_trace(j, 1).rho, b.rho)


def test_hermite_functions_orthonormal():
    q = np.linspace(-12, 12, 4001)
    psi = fock.hermite_functions(20, q)
    gram = psi @ psi.T * (q[1] - q[0])
    assert np.allclose(gram, np.eye(20), atol=1e-9)


@pytest.mark.parametrize("phi", [0.0, 0.5 * np.pi, 1.0, 1.5 * np.pi])
def test_homodyne_pdf_matches_gaussian_engine(phi):
    alpha = 0.7 + 0.4j
    pdf = fock.homodyne_pdf(coherent(alpha), 0, phi)
    g = spin_coherent(alpha)
    mean, var = homodyne_statistics(g, HomodyneSetting(SPIN, phi))
    grid = fock.PDF_GRID
    ref = np.exp(-(grid - mean) ** 2 / (2 * var)) / np.sqrt(2 * np.pi * var)
    assert np.max(np.abs(pdf - ref)) < 1e-8


def test_homodyne_pdf_sign_on_imaginary_amplitude():
    # alpha = i has p = sqrt2; q at phi = pi/2 is -p
    grid = fock.PDF_GRID
    pdf = fock.homodyne_pdf(coherent(1j), 0, 0.5 * np.pi)
    mean = np.sum(grid * pdf) * (grid[1] - grid[0])
    assert mean == pytest.approx(-np.sqrt(2), abs=1e-6)


@pytest.mark.parametrize("kind", ["vacuum", "fock1", "squeezed"])
@pytest.mark.parametrize("theta", [0.0, 0.4, 1.3, 2.8])
def test_wigner_marginals_match_homodyne_pdf(kind, theta):
    # the marginal of W along q_theta = x cos + p sin equals the pdf at phi = -theta
    spec = GridSpec(8.0, 801)
    ket = {"vacuum": fock.fock_ket(60, 0), "fock1": fock.fock_ket(60, 1),
           "squeezed": fock.squeezed_ket(60, 0.3)}[kind]
    q = np.array([-1.3, -0.2, 0.0, 0.7, 2.1])
    pdf = fock.homodyne_pdf(fock.single_mode(ket), 0, np.mod(-theta, 2 * np.pi), q)
    w = analytic_reference(kind, "W", spec, r=0.3)
    # integrate W along the line orthogonal to the quadrature direction
    c, s = np.cos(theta), np.sin(theta)
    t = np.linspace(-8, 8, 3201)
    interp = RegularGridInterpolator((spec.axis, spec.axis), w.values, method="cubic", bounds_error=False, fill_value=0.0)
    marg = [np.trapezoid(interp(np.column_stack([qq * c - t * s, qq * s + t * c])), t) for qq in q]
    assert np.allclose(marg, pdf, atol=1e-6)


def test_sample_from_pdf():
    grid = fock.PDF_GRID
    pdf = np.exp(-grid ** 2) / np.sqrt(np.pi)
    x = fock.sample_from_pdf(pdf, grid, np.random.default_rng(2), 100_000)
    assert abs(x.mean()) < 5 * np.sqrt(0.5 / x.size)
    assert abs(x.var() - 0.5) < 5 * 0.5 * np.sqrt(2 / x.size)
    with pytest.raises(ValueError):
        fock.sample_from_pdf(np.zeros_like(grid), grid, np.random.default_rng(0), 3)


def test_gate_exponential_is_unitary():
    u = fock.gate_exponential(12, "Z", 0.8)
    assert np.allclose(u @ u.conj().T, np.eye(144), atol=1e-10)
    with pytest.raises(ValueError):
        fock.gate_exponential(1, "Z", 1.0)


@settings(max_examples=15)
@given(st.floats(-1, 1), st.floats(-1, 1), st.sampled_from(["Z", "Y"]))
def test_single_pass_moments_match_engine(re, im, coupling):
    alpha = complex(re, im) / np.sqrt(2)
    d = 24
    ket = np.kron(fock.fock_ket(d, 0), fock.coherent_ket(d, alpha))
    out = fock.evolve(fock.TruncatedFockState.from_ket(ket, (d, d)), fock.gate_exponential(d, coupling, 0.5))
    fm, fc = fock.quadrature_moments(out)
    g = apply_map(joint_state(spin_coherent(alpha)), fr_pass(PassSpec(coupling, 1, 0.5)))
    assert np.allclose(fm, g.mean, atol=1e-6)
    assert np.allclose(fc, g.cov, atol=1e-6)


def test_transducer_pdf_reads_rotated_spin_quadrature():
    d = 20
    spin = fock.single_mode(fock.squeezed_ket(d, 0.3))
    for theta in (0.0, 0.9):
        pdf, edge = fock.transducer_pdf(spin, theta)
        # outcome is q at theta + pi of the spin, i.e. phi = -(theta + pi)
        ref = fock.homodyne_pdf(spin, 0, np.mod(-(theta + np.pi), 2 * np.pi))
        assert np.max(np.abs(pdf - ref)) < 1e-4
        assert edge < 1e-6


def test_edge_population_flags_truncation():
    s = coherent(2.5, d=8)
    assert fock.edge_population(s) > 1e-3


def test_ket_moments_match_density_matrix_moments():
    d = 10
    ket = fock.gate_exponential(d, "Y", 0.4) @ np.kron(fock.coherent_ket(d, 0.3j), fock.squeezed_ket(d, 0.2))
    ket = ket / np.linalg.norm(ket)
    m1, c1 = fock.ket_moments(ket, (d, d))
    m2, c2 = fock.quadrature_moments(fock.TruncatedFockState.from_ket(ket, (d, d)))
    assert np.allclose(m1, m2, atol=1e-12) and np.allclose(c1, c2, atol=1e-12)


def test_gate_cache_returns_read_only_matrix():
    u = fock.gate_exponential(6, "Z", 1.0)
    assert u is fock.gate_exponential(6, "Z", 1.0)
    with pytest.raises(ValueError):
        u[0, 0] = 0
