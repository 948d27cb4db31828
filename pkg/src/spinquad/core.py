"""Phase-space primitives: mode layouts, Gaussian states and symplectic maps.

Conventions are fixed once for the whole package: hbar = 1, ``[x, p] = i``,
vacuum variance 1/2 per quadrature, and quadrature ordering
``(x_1, p_1, x_2, p_2, ...)``.  For the light mode ``(x, p) = (s_y, s_z)``,
for the spin mode ``(x, p) = (j_y, j_z)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

LIGHT = "light"
SPIN = "spin"
ANCILLA = "ancilla"


class InvariantError(ValueError):
    """A numerical invariant (symplecticity, uncertainty relation, ...) is violated."""


@dataclass(frozen=True)
class NumericPolicy:
    """Tolerances used by the validators.  One record, overridable per call."""

    symmetric: float = 1e-12
    uncertainty: float = 1e-9
    symplectic: float = 1e-10
    determinant: float = 1e-9
    degenerate_variance: float = 1e-12


DEFAULT_POLICY = NumericPolicy()


@dataclass(frozen=True)
class ModeLayout:
    """Ordered, uniquely labelled modes."""

    labels: tuple[str, ...]

    def __init__(self, labels: Sequence[str]):
        labels = tuple(labels)
        if len(set(labels)) != len(labels):
            raise ValueError(f"mode labels must be unique, got {labels}")
        object.__setattr__(self, "labels", labels)

    @property
    def n_modes(self) -> int:
        return len(self.labels)

    @property
    def dim(self) -> int:
        return 2 * len(self.labels)

    def index(self, mode: str | int) -> int:
        if isinstance(mode, (int, np.integer)):
            if not 0 <= mode < self.n_modes:
                raise KeyError(f"mode index {mode} out of range for {self.labels}")
            return int(mode)
        try:
            return self.labels.index(mode)
        except ValueError:
            raise KeyError(f"unknown mode {mode!r}; layout has {self.labels}") from None

    def slice(self, mode: str | int) -> slice:
        i = self.index(mode)
        return slice(2 * i, 2 * i + 2)

    def without(self, mode: str | int) -> "ModeLayout":
        i = self.index(mode)
        return ModeLayout(self.labels[:i] + self.labels[i + 1:])

    def with_mode(self, label: str) -> "ModeLayout":
        return ModeLayout(self.labels + (label,))


LIGHT_SPIN = ModeLayout((LIGHT, SPIN))


def omega(n_modes: int) -> np.ndarray:
    """Symplectic form, block diagonal with ``[[0, 1], [-1, 0]]`` blocks."""
    return np.kron(np.eye(n_modes), np.array([[0.0, 1.0], [-1.0, 0.0]]))


@dataclass(frozen=True, eq=False)
class GaussianState:
    """First and second moments of a Gaussian state.

    ``cov`` is the symmetrised covariance ``<{dr_i, dr_j}>/2`` so that the
    vacuum has ``cov = I/2``.
    """

    mean: np.ndarray
    cov: np.ndarray
    layout: ModeLayout = field(default=LIGHT_SPIN)

    def __post_init__(self):
        mean = np.array(self.mean, dtype=float)
        cov = np.array(self.cov, dtype=float)
        mean.setflags(write=False)
        cov.setflags(write=False)
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "cov", cov)
        d = self.layout.dim
        if mean.shape != (d,) or cov.shape != (d, d):
            raise ValueError(
                f"state shapes {mean.shape}, {cov.shape} do not match layout of dimension {d}"
            )

    @property
    def n_modes(self) -> int:
        return self.layout.n_modes

    def reduced(self, mode: str | int) -> "GaussianState":
        """Marginal state of a single mode."""
        s = self.layout.slice(mode)
        return GaussianState(self.mean[s], self.cov[s, s], ModeLayout((self.layout.labels[s.start // 2],)))

    def validate(self, policy: NumericPolicy = DEFAULT_POLICY) -> "GaussianState":
        if not (np.all(np.isfinite(self.mean)) and np.all(np.isfinite(self.cov))):
            raise InvariantError("state contains non-finite entries")
        if np.max(np.abs(self.cov - self.cov.T), initial=0.0) > policy.symmetric:
            raise InvariantError("covariance matrix is not symmetric")
        # cov + (i/2) Omega >= 0 is the uncertainty relation
        h = self.cov + 0.5j * omega(self.n_modes)
        lowest = np.linalg.eigvalsh(h).min()
        if lowest < -policy.uncertainty:
            raise InvariantError(f"uncertainty relation violated (min eigenvalue {lowest:.3e})")
        return self


@dataclass(frozen=True, eq=False)
class SymplecticMap:
    """Affine phase-space map ``r -> S r + d`` acting on quadrature operators."""

    matrix: np.ndarray
    displacement: np.ndarray | None = None

    def __post_init__(self):
        m = np.array(self.matrix, dtype=float)
        if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] % 2:
            raise ValueError(f"symplectic matrix must be square of even size, got {m.shape}")
        d = np.zeros(m.shape[0]) if self.displacement is None else np.array(self.displacement, dtype=float)
        if d.shape != (m.shape[0],):
            raise ValueError("displacement length does not match the matrix")
        m.setflags(write=False)
        d.setflags(write=False)
        object.__setattr__(self, "matrix", m)
        object.__setattr__(self, "displacement", d)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @classmethod
    def identity(cls, n_modes: int) -> "SymplecticMap":
        return cls(np.eye(2 * n_modes))

    def inverse(self) -> "SymplecticMap":
        inv = np.linalg.inv(self.matrix)
        return SymplecticMap(inv, -inv @ self.displacement)

    def symplectic_defect(self) -> float:
        om = omega(self.dim // 2)
        return float(np.max(np.abs(self.matrix @ om @ self.matrix.T - om)))

    def validate(self, policy: NumericPolicy = DEFAULT_POLICY) -> "SymplecticMap":
        if not np.all(np.isfinite(self.matrix)):
            raise InvariantError("map contains non-finite entries")
        defect = self.symplectic_defect()
        if defect > policy.symplectic:
            raise InvariantError(f"map is not symplectic (max |S Om S^T - Om| = {defect:.3e})")
        return self


def local_block(layout: ModeLayout, mode: str | int, block: np.ndarray) -> SymplecticMap:
    """Embed a 2x2 single-mode matrix into ``layout``, identity elsewhere."""
    m = np.eye(layout.dim)
    s = layout.slice(mode)
    m[s, s] = block
    return SymplecticMap(m)


def two_mode_block(layout: ModeLayout, m1: str | int, m2: str | int, block: np.ndarray) -> SymplecticMap:
    """Embed a 4x4 matrix acting on ``(x1, p1, x2, p2)`` of two distinct modes."""
    i, j = layout.index(m1), layout.index(m2)
    if i == j:
        raise ValueError("the two modes must be distinct")
    idx = [2 * i, 2 * i + 1, 2 * j, 2 * j + 1]
    m = np.eye(layout.dim)
    m[np.ix_(idx, idx)] = block
    return SymplecticMap(m)


def vacuum_state(layout: ModeLayout = LIGHT_SPIN) -> GaussianState:
    if layout.n_modes == 0:
        raise ValueError("layout has no modes")
    return GaussianState(np.zeros(layout.dim), 0.5 * np.eye(layout.dim), layout)


def coherent_state(layout: ModeLayout, mode: str | int, alpha: complex) -> GaussianState:
    """Vacuum everywhere except ``mode``, which is displaced to ``alpha``."""
    state = vacuum_state(layout)
    mean = state.mean.copy()
    mean[layout.slice(mode)] = np.sqrt(2.0) * np.array([np.real(alpha), np.imag(alpha)])
    return GaussianState(mean, state.cov, layout)


def apply_map(state: GaussianState, smap: SymplecticMap, policy: NumericPolicy = DEFAULT_POLICY) -> GaussianState:
    if smap.dim != state.layout.dim:
        raise ValueError(f"map of dimension {smap.dim} cannot act on a state of dimension {state.layout.dim}")
    smap.validate(policy)
    s = smap.matrix
    cov = s @ state.cov @ s.T
    return GaussianState(s @ state.mean + smap.displacement, 0.5 * (cov + cov.T), state.layout)


def compose(maps: Sequence[SymplecticMap]) -> SymplecticMap:
    """Chronological composition: ``maps[0]`` acts first (rightmost factor)."""
    if not maps:
        raise ValueError("nothing to compose")
    dim = maps[0].dim
    s = np.eye(dim)
    d = np.zeros(dim)
    for m in maps:
        if m.dim != dim:
            raise ValueError("cannot compose maps of different dimension")
        s = m.matrix @ s
        d = m.matrix @ d + m.displacement
    return SymplecticMap(s, d)
