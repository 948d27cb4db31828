"""Brute-force truncated Fock-space backend for one or two modes.

Used as an independent oracle for the Gaussian engine and to simulate
non-Gaussian spin states.  Two-mode operators act on ``light (x) spin``.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from math import factorial, lgamma

import numpy as np

from .interactions import Coupling

VALIDATION_CUTOFF = 40
DEMO_CUTOFF = 20
PDF_GRID = np.linspace(-8.0, 8.0, 801)


@dataclass(frozen=True, eq=False)
class TruncatedFockState:
    """Density matrix on ``prod(dims)`` levels."""

    rho: np.ndarray
    dims: tuple[int, ...]

    def __post_init__(self):
        rho = np.array(self.rho, dtype=complex)
        n = int(np.prod(self.dims))
        if rho.shape != (n, n):
            raise ValueError(f"density matrix shape {rho.shape} does not match dims {self.dims}")
        rho.setflags(write=False)
        object.__setattr__(self, "rho", rho)
        object.__setattr__(self, "dims", tuple(int(d) for d in self.dims))

    @classmethod
    def from_ket(cls, ket: np.ndarray, dims: tuple[int, ...]) -> "TruncatedFockState":
        ket = np.asarray(ket, dtype=complex)
        return cls(np.outer(ket, ket.conj()), dims)

    @property
    def trace(self) -> float:
        return float(np.real(np.trace(self.rho)))

    @property
    def leakage(self) -> float:
        return 1.0 - self.trace

    def validate(self, leak_tol: float = 1e-6, herm_tol: float = 1e-10, eig_tol: float = 1e-9) -> "TruncatedFockState":
        if np.max(np.abs(self.rho - self.rho.conj().T)) > herm_tol:
            raise ValueError("density matrix is not Hermitian")
        lowest = np.linalg.eigvalsh(self.rho).min()
        if lowest < -eig_tol:
            raise ValueError(f"density matrix has negative eigenvalue {lowest:.3e}")
        if not (1.0 - leak_tol <= self.trace <= 1.0 + herm_tol):
            raise ValueError(f"trace {self.trace:.8f} outside [1 - {leak_tol:g}, 1]")
        return self

    def expect(self, op: np.ndarray) -> complex:
        return complex(np.trace(self.rho @ op))


def annihilation(d: int) -> np.ndarray:
    return np.diag(np.sqrt(np.arange(1, d, dtype=float)), 1)


def quadrature_operator(d: int, kind: str) -> np.ndarray:
    """``x = (a + a^dag)/sqrt2`` or ``p = (a - a^dag)/(i sqrt2)`` on ``d`` levels."""
    if d < 2:
        raise ValueError("truncation must keep at least two levels")
    a = annihilation(d)
    if kind == "x":
        return ((a + a.T) / np.sqrt(2.0)).astype(complex)
    if kind == "p":
        return (a - a.T) / (1j * np.sqrt(2.0))
    raise ValueError(f"quadrature kind must be 'x' or 'p', got {kind!r}")


def number_operator(d: int) -> np.ndarray:
    return np.diag(np.arange(d, dtype=float)).astype(complex)


def embed(op: np.ndarray, mode: int, dims: tuple[int, ...]) -> np.ndarray:
    """Lift a single-mode operator onto the product space."""
    out = np.eye(1, dtype=complex)
    for k, d in enumerate(dims):
        out = np.kron(out, op if k == mode else np.eye(d))
    return out


@lru_cache(maxsize=16)
def _quadrature_eigh(d: int, kind: str) -> tuple[np.ndarray, np.ndarray]:
    return np.linalg.eigh(quadrature_operator(d, kind))


@lru_cache(maxsize=4)
def _gate_cached(d: int, coupling: Coupling, kappa: float) -> np.ndarray:
    u = _gate_exponential(d, coupling, kappa)
    u.setflags(write=False)
    return u


def gate_exponential(d: int, coupling: Coupling, kappa: float) -> np.ndarray:
    """``exp(-i kappa G)`` with ``G = p (x) p`` (Z) or ``x (x) x`` (Y), on ``d**2`` levels."""
    if d < 2:
        raise ValueError("truncation must keep at least two levels")
    if not np.isfinite(kappa):
        raise ValueError("kappa must be finite")
    return _gate_cached(int(d), coupling, float(kappa))


def _gate_exponential(d: int, coupling: Coupling, kappa: float) -> np.ndarray:
    kind = {"Z": "p", "Y": "x"}[coupling]
    vals, vecs = _quadrature_eigh(d, kind)
    phase = np.exp(-1j * kappa * np.outer(vals, vals)).reshape(-1)
    v2 = np.kron(vecs, vecs)
    if not np.all(np.isfinite(v2)):
        raise np.linalg.LinAlgError("quadrature eigendecomposition failed")
    return (v2 * phase) @ v2.conj().T


def rotation_unitary(d: int, theta: float) -> np.ndarray:
    """``exp(-i theta n)``: rotates ``(x, p)`` the same way as ``fmps_rotation``."""
    return np.diag(np.exp(-1j * theta * np.arange(d)))


def fock_ket(d: int, n: int) -> np.ndarray:
    if not 0 <= n < d:
        raise ValueError(f"level {n} not representable with cutoff {d}")
    ket = np.zeros(d, dtype=complex)
    ket[n] = 1.0
    return ket


def coherent_ket(d: int, alpha: complex) -> np.ndarray:
    """Truncated (unrenormalised) coherent-state amplitudes."""
    if alpha == 0:
        return fock_ket(d, 0)
    n = np.arange(d)
    log_norm = np.array([0.5 * lgamma(k + 1) for k in n])
    mag = np.exp(-0.5 * abs(alpha) ** 2 + n * np.log(abs(alpha)) - log_norm)
    return mag * np.exp(1j * n * np.angle(alpha))


def squeezed_ket(d: int, r: float) -> np.ndarray:
    """Squeezed vacuum with ``Var x = e^{-2r}/2`` (matches ``squeezer``)."""
    ket = np.zeros(d, dtype=complex)
    t = np.tanh(r)
    for m in range(0, d, 2):
        k = m // 2
        ket[m] = (-t) ** k * np.sqrt(float(factorial(m))) / (2 ** k * factorial(k))
    return ket / np.sqrt(np.cosh(r))


def single_mode(ket: np.ndarray) -> TruncatedFockState:
    return TruncatedFockState.from_ket(ket, (len(ket),))


def product(a: TruncatedFockState, b: TruncatedFockState) -> TruncatedFockState:
    return TruncatedFockState(np.kron(a.rho, b.rho), a.dims + b.dims)


def evolve(state: TruncatedFockState, unitary: np.ndarray) -> TruncatedFockState:
    return TruncatedFockState(unitary @ state.rho @ unitary.conj().T, state.dims)


def partial_trace(state: TruncatedFockState, keep: int) -> TruncatedFockState:
    if len(state.dims) == 1:
        return state
    d0, d1 = state.dims
    r = state.rho.reshape(d0, d1, d0, d1)
    if keep == 0:
        return TruncatedFockState(np.einsum("ajbj->ab", r), (d0,))
    return TruncatedFockState(np.einsum("jajb->ab", r), (d1,))


def hermite_functions(n_max: int, q: np.ndarray) -> np.ndarray:
    """Oscillator eigenfunctions ``psi_n(q)`` for ``n < n_max``; vacuum ``psi_0^2 = e^{-q^2}/sqrt(pi)``."""
    q = np.asarray(q, dtype=float)
    psi = np.zeros((n_max, q.size))
    psi[0] = np.pi ** -0.25 * np.exp(-q ** 2 / 2)
    if n_max > 1:
        psi[1] = np.sqrt(2.0) * q * psi[0]
    for n in range(1, n_max - 1):
        psi[n + 1] = np.sqrt(2.0 / (n + 1)) * q * psi[n] - np.sqrt(n / (n + 1)) * psi[n - 1]
    return psi


def homodyne_pdf(state: TruncatedFockState, mode: int, phi: float, grid: np.ndarray = PDF_GRID) -> np.ndarray:
    """Density of ``q_phi = x cos(phi) - p sin(phi)`` on ``mode`` evaluated on ``grid``."""
    grid = np.asarray(grid, dtype=float)
    if not np.all(np.isfinite(grid)):
        raise ValueError("grid must be finite")
    rho = partial_trace(state, mode).rho if len(state.dims) > 1 else state.rho
    d = rho.shape[0]
    psi = hermite_functions(d, grid)
    ph = np.exp(1j * phi * np.arange(d))
    rotated = ph[:, None] * rho * ph.conj()[None, :]
    return np.real(np.einsum("mg,mn,ng->g", psi, rotated, psi))


def sample_from_pdf(pdf: np.ndarray, grid: np.ndarray, rng: np.random.Generator, shots: int) -> np.ndarray:
    """Inverse-CDF draws treating each grid value as the density on its cell."""
    pdf = np.clip(np.asarray(pdf, dtype=float), 0.0, None)
    grid = np.asarray(grid, dtype=float)
    if not np.any(pdf > 0):
        raise ValueError("pdf vanishes everywhere")
    half = 0.5 * np.diff(grid)
    edges = np.concatenate([[grid[0] - half[0]], grid[:-1] + half, [grid[-1] + half[-1]]])
    cdf = np.concatenate([[0.0], np.cumsum(pdf * np.diff(edges))])
    cdf /= cdf[-1]
    u = rng.random(shots)
    idx = np.clip(np.searchsorted(cdf, u, side="right"), 1, len(cdf) - 1)
    lo, hi = cdf[idx - 1], cdf[idx]
    frac = (u - lo) / (hi - lo)
    return edges[idx - 1] + frac * (edges[idx] - edges[idx - 1])


def quadrature_moments(state: TruncatedFockState) -> tuple[np.ndarray, np.ndarray]:
    """Mean vector and symmetrised covariance in the Gaussian engine's ordering."""
    ops = []
    for mode, d in enumerate(state.dims):
        for kind in ("x", "p"):
            ops.append(embed(quadrature_operator(d, kind), mode, state.dims))
    rho_ops = [state.rho @ o for o in ops]
    mean = np.array([np.real(np.trace(r)) for r in rho_ops])
    n = len(ops)
    cov = np.empty((n, n))
    for i in range(n):
        for j in range(i, n):
            # tr(rho A B) = sum((rho A) * B^T); avoids forming the products
            sym = 0.5 * (np.sum(rho_ops[i] * ops[j].T) + np.sum(rho_ops[j] * ops[i].T))
            cov[i, j] = cov[j, i] = np.real(sym) - mean[i] * mean[j]
    return mean, cov


def ket_moments(ket: np.ndarray, dims: tuple[int, ...]) -> tuple[np.ndarray, np.ndarray]:
    """:func:`quadrature_moments` for a pure state via matrix-vector products; normalised by ``<psi|psi>``."""
    ket = np.asarray(ket, dtype=complex)
    vecs = []
    for mode, d in enumerate(dims):
        for kind in ("x", "p"):
            vecs.append(embed(quadrature_operator(d, kind), mode, dims) @ ket)
    norm = np.real(np.vdot(ket, ket))
    mean = np.array([np.real(np.vdot(ket, v)) for v in vecs]) / norm
    n = len(vecs)
    cov = np.empty((n, n))
    for i in range(n):
        for j in range(i, n):
            # <{A, B}>/2 = Re <A psi | B psi> for Hermitian A, B
            cov[i, j] = cov[j, i] = np.real(np.vdot(vecs[i], vecs[j])) / norm - mean[i] * mean[j]
    return mean, cov


def two_pass_unitary(d: int, kappa: float = 1.0) -> np.ndarray:
    """Z pass followed by Y pass on ``light (x) spin``."""
    return gate_exponential(d, "Y", kappa) @ gate_exponential(d, "Z", kappa)


def transducer_pdf(spin: TruncatedFockState, theta: float, kappa: float = 1.0,
                   grid: np.ndarray = PDF_GRID) -> tuple[np.ndarray, float]:
    """Light ``s_z`` density after FMPS(theta) and the two-pass map, vacuum probe.

    Returns the density and the largest top-level population of either mode
    after evolution, which bounds the truncation error.
    """
    d = spin.dims[0]
    light = single_mode(fock_ket(d, 0))
    joint = product(light, spin)
    u = two_pass_unitary(d, kappa) @ np.kron(np.eye(d), rotation_unitary(d, theta))
    out = evolve(joint, u)
    return homodyne_pdf(out, 0, 1.5 * np.pi, grid), edge_population(out)


def edge_population(state: TruncatedFockState) -> float:
    """Largest population of the highest retained level over all modes."""
    return max(float(np.real(partial_trace(state, m).rho[-1, -1])) for m in range(len(state.dims)))
