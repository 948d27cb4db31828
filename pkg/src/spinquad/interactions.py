"""Elementary operations on Gaussian states.

Faraday-rotation passes, spin/light phase rotations, squeezing, loss,
beamsplitting, and homodyne / double-homodyne measurements.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Literal, NamedTuple

import numpy as np

from .core import (
    ANCILLA,
    DEFAULT_POLICY,
    LIGHT,
    LIGHT_SPIN,
    SPIN,
    GaussianState,
    ModeLayout,
    NumericPolicy,
    SymplecticMap,
    apply_map,
    local_block,
    two_mode_block,
    vacuum_state,
)

log = logging.getLogger(__name__)

Coupling = Literal["Z", "Y"]


@dataclass(frozen=True)
class PassSpec:
    """One light passage through the ensemble.

    ``Z`` couples ``p_L p_A`` (``s_z j_z``), ``Y`` couples ``x_L x_A`` (``s_y j_y``).
    """

    coupling: Coupling = "Z"
    sign: int = 1
    kappa: float = 1.0

    def __post_init__(self):
        if self.coupling not in ("Z", "Y"):
            raise ValueError(f"coupling must be 'Z' or 'Y', got {self.coupling!r}")
        if self.sign not in (1, -1):
            raise ValueError(f"sign must be +1 or -1, got {self.sign}")
        if not np.isfinite(self.kappa):
            raise ValueError("kappa must be finite")

    @property
    def strength(self) -> float:
        return self.sign * self.kappa


@dataclass(frozen=True)
class HomodyneSetting:
    """Measure ``q_phi = x cos(phi) - p sin(phi)`` on ``mode``."""

    mode: str | int = LIGHT
    phi: float = 0.0

    def __post_init__(self):
        if not (np.isfinite(self.phi) and 0.0 <= self.phi < 2 * np.pi):
            raise ValueError(f"LO phase must lie in [0, 2pi), got {self.phi}")

    @property
    def direction(self) -> np.ndarray:
        quarter = self.phi / (0.5 * np.pi)
        k = round(quarter)
        if abs(quarter - k) < 1e-14:
            # exact at quarter turns so integer maps give exact readout statistics
            return np.array(_QUARTER_DIRECTIONS[k % 4])
        return np.array([np.cos(self.phi), -np.sin(self.phi)])


_QUARTER_DIRECTIONS = ((1.0, 0.0), (0.0, -1.0), (-1.0, 0.0), (0.0, 1.0))


# LO phases reading out x, -p and p respectively.
X_PHASE = 0.0
MINUS_P_PHASE = 0.5 * np.pi
P_PHASE = 1.5 * np.pi


def fr_pass(spec: PassSpec, light_mode: str | int = LIGHT, spin_mode: str | int = SPIN,
            layout: ModeLayout = LIGHT_SPIN) -> SymplecticMap:
    """Heisenberg action of ``exp(-i k G)`` with ``G = p_L p_A`` or ``x_L x_A``."""
    k = spec.strength
    if spec.coupling == "Z":
        # x_L += k p_A ; x_A += k p_L
        block = np.array([
            [1.0, 0.0, 0.0, k],
            [0.0, 1.0, 0.0, 0.0],
            [0.0, k, 1.0, 0.0],
            [0.0, 0.0, 0.0, 1.0],
        ])
    else:
        # p_L -= k x_A ; p_A -= k x_L
        block = np.array([
            [1.0, 0.0, 0.0, 0.0],
            [0.0, 1.0, -k, 0.0],
            [0.0, 0.0, 1.0, 0.0],
            [-k, 0.0, 0.0, 1.0],
        ])
    return two_mode_block(layout, light_mode, spin_mode, block)


def rotation_block(theta: float) -> np.ndarray:
    """``(x, p) -> (x cos t + p sin t, -x sin t + p cos t)``."""
    c, s = np.cos(theta), np.sin(theta)
    return np.array([[c, s], [-s, c]])


def fmps_rotation(spin_mode: str | int = SPIN, theta: float = 0.0,
                  layout: ModeLayout = LIGHT_SPIN) -> SymplecticMap:
    """Phase rotation of the spin quadratures by the optical phase-shifter."""
    if not np.isfinite(theta):
        raise ValueError("rotation angle must be finite")
    return local_block(layout, spin_mode, rotation_block(theta))


def stokes_rotation(light_mode: str | int = LIGHT, theta: float = 0.0,
                    layout: ModeLayout = LIGHT_SPIN) -> SymplecticMap:
    """Same rotation applied to the light quadratures (a waveplate)."""
    if not np.isfinite(theta):
        raise ValueError("rotation angle must be finite")
    return local_block(layout, light_mode, rotation_block(theta))


def squeezer(mode: str | int, r: float, layout: ModeLayout = LIGHT_SPIN) -> SymplecticMap:
    """``x -> e^{-r} x``, ``p -> e^{r} p``; ``r > 0`` squeezes x."""
    if not np.isfinite(r):
        raise ValueError("squeezing parameter must be finite")
    return local_block(layout, mode, np.diag([np.exp(-r), np.exp(r)]))


def beamsplitter(m1: str | int, m2: str | int, transmittance: float,
                 layout: ModeLayout = LIGHT_SPIN) -> SymplecticMap:
    """Passive two-mode mixer.

    ``x1 -> sqrt(T) x1 + sqrt(1-T) x2`` and ``x2 -> -sqrt(1-T) x1 + sqrt(T) x2``,
    identically for the momenta.  At T = 1/2 a coherent input ``|a>|0>``
    leaves as ``|a/sqrt2>|-a/sqrt2>``.
    """
    if not 0.0 <= transmittance <= 1.0:
        raise ValueError(f"transmittance must lie in [0, 1], got {transmittance}")
    t, r = np.sqrt(transmittance), np.sqrt(1.0 - transmittance)
    mix = np.array([[t, r], [-r, t]])
    return two_mode_block(layout, m1, m2, np.kron(mix, np.eye(2)))


def attenuator(state: GaussianState, mode: str | int, eta: float) -> GaussianState:
    """Pure-loss channel of transmission ``eta`` on one mode."""
    if not 0.0 <= eta <= 1.0:
        raise ValueError(f"attenuation eta must lie in [0, 1], got {eta}")
    s = state.layout.slice(mode)
    scale = np.ones(state.layout.dim)
    scale[s] = np.sqrt(eta)
    mean = scale * state.mean
    cov = np.outer(scale, scale) * state.cov
    cov[s, s] += 0.5 * (1.0 - eta) * np.eye(2)
    return GaussianState(mean, cov, state.layout)


def squeezed_vacuum(layout: ModeLayout, mode: str | int, r: float) -> GaussianState:
    return apply_map(vacuum_state(layout), squeezer(mode, r, layout))


def thermal_state(layout: ModeLayout, mode: str | int, variance: float) -> GaussianState:
    """Vacuum elsewhere; ``variance * I`` on ``mode`` (``variance >= 1/2``)."""
    if variance < 0.5:
        raise ValueError("thermal variance must be at least the vacuum value 1/2")
    state = vacuum_state(layout)
    cov = state.cov.copy()
    cov[layout.slice(mode), layout.slice(mode)] = variance * np.eye(2)
    return GaussianState(state.mean, cov, layout)


def tensor(a: GaussianState, b: GaussianState) -> GaussianState:
    """Product state, modes of ``a`` first."""
    layout = ModeLayout(a.layout.labels + b.layout.labels)
    cov = np.zeros((layout.dim, layout.dim))
    na = a.layout.dim
    cov[:na, :na] = a.cov
    cov[na:, na:] = b.cov
    return GaussianState(np.concatenate([a.mean, b.mean]), cov, layout)


def homodyne_statistics(state: GaussianState, setting: HomodyneSetting) -> tuple[float, float]:
    """Exact mean and variance of the measured quadrature."""
    s = state.layout.slice(setting.mode)
    c = setting.direction
    return float(c @ state.mean[s]), float(c @ state.cov[s, s] @ c)


class HomodyneOutcome(NamedTuple):
    value: float
    state: GaussianState | None
    degenerate: bool


def homodyne_sample(state: GaussianState, setting: HomodyneSetting, rng: np.random.Generator,
                    policy: NumericPolicy = DEFAULT_POLICY) -> HomodyneOutcome:
    """Draw one outcome and return the conditioned state of the remaining modes.

    The measured mode is removed from the layout.  ``state`` is ``None`` when
    nothing is left.
    """
    mean, var = homodyne_statistics(state, setting)
    i = state.layout.index(setting.mode)
    u = np.zeros(state.layout.dim)
    u[2 * i:2 * i + 2] = setting.direction
    keep = [k for k in range(state.layout.dim) if k // 2 != i]
    rest = state.layout.without(i)

    degenerate = var < policy.degenerate_variance
    if degenerate:
        log.warning("homodyne variance %.3e below threshold; outcome is deterministic", var)
        value = mean
    else:
        value = float(rng.normal(mean, np.sqrt(var)))
    if not keep:
        return HomodyneOutcome(value, None, degenerate)

    m_b = state.mean[keep]
    v_b = state.cov[np.ix_(keep, keep)]
    if not degenerate:
        cross = state.cov[keep] @ u
        m_b = m_b + cross * (value - mean) / var
        v_b = v_b - np.outer(cross, cross) / var
    return HomodyneOutcome(value, GaussianState(m_b, 0.5 * (v_b + v_b.T), rest), degenerate)


def sample_homodyne(state: GaussianState, setting: HomodyneSetting, rng: np.random.Generator,
                    shots: int) -> np.ndarray:
    """Vectorised outcomes only (no conditioning)."""
    mean, var = homodyne_statistics(state, setting)
    return rng.normal(mean, np.sqrt(max(var, 0.0)), size=shots)


def _split_with_ancilla(state: GaussianState, mode: str | int) -> tuple[GaussianState, str]:
    label = ANCILLA
    while label in state.layout.labels:
        label += "_"
    anc = vacuum_state(ModeLayout((label,)))
    joint = tensor(state, anc)
    split = beamsplitter(state.layout.index(mode), label, 0.5, joint.layout)
    return apply_map(joint, split), label


def double_homodyne_statistics(state: GaussianState, mode: str | int) -> tuple[np.ndarray, np.ndarray]:
    """Mean and covariance of the outcome pair returned by :func:`double_homodyne_sample`."""
    joint, anc = _split_with_ancilla(state, mode)
    ix = 2 * joint.layout.index(mode)
    ip = 2 * joint.layout.index(anc) + 1
    # arm 2 carries -a/sqrt2, so its momentum is read with the opposite sign
    flip = np.diag([1.0, -1.0])
    mean = flip @ joint.mean[[ix, ip]]
    cov = flip @ joint.cov[np.ix_([ix, ip], [ix, ip])] @ flip
    return mean, cov


def double_homodyne_sample(state: GaussianState, mode: str | int, rng: np.random.Generator,
                           shots: int | None = None) -> tuple[float, float] | np.ndarray:
    """Split ``mode`` on a 50:50 beamsplitter with vacuum and read x / p on the two arms.

    Arm 2 is read at LO phase pi/2, i.e. its momentum with the sign that
    undoes the beamsplitter's reflection.

    With ``shots=None`` the two homodyne measurements are performed one after
    the other with Gaussian conditioning and a ``(x, p)`` pair is returned.
    Otherwise an array of shape ``(shots, 2)`` is drawn from the exact joint
    distribution of the pair.  The outcome density is the Husimi function
    ``Q(x + i p)``.
    """
    if shots is not None:
        mean, cov = double_homodyne_statistics(state, mode)
        return rng.multivariate_normal(mean, cov, size=shots, method="cholesky")
    joint, anc = _split_with_ancilla(state, mode)
    first = homodyne_sample(joint, HomodyneSetting(mode, X_PHASE), rng)
    second = homodyne_sample(first.state, HomodyneSetting(anc, MINUS_P_PHASE), rng)
    return first.value, second.value
