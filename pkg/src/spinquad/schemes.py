"""Multi-pass measurement schemes built from the elementary operations.

The light-spin passes are composed into a single symplectic map and then
read out with homodyne or double-homodyne detection of the light.
"""

from __future__ import annotations

import itertools
import re
from dataclasses import dataclass, field
from typing import Sequence, Union

import numpy as np

from . import fock
from .core import LIGHT, LIGHT_SPIN, SPIN, GaussianState, ModeLayout, SymplecticMap, apply_map, compose, vacuum_state
from .interactions import (
    P_PHASE,
    X_PHASE,
    HomodyneSetting,
    PassSpec,
    double_homodyne_sample,
    fmps_rotation,
    fr_pass,
    rotation_block,
    sample_homodyne,
    squeezer,
    stokes_rotation,
    tensor,
)
from .rng import blocks, parallel_map, seed_of, spawn
from .samples import SampleSet

SPIN_ONLY = ModeLayout((SPIN,))
LIGHT_ONLY = ModeLayout((LIGHT,))

# The three-pass swap leaves the light holding the spin state rotated by this angle.
SWAP_ROTATION = 0.5 * np.pi
# Two-pass readout gives s_z'' = -j_y, i.e. the quadrature at angle theta + pi.
TRANSDUCER_ANGLE_OFFSET = np.pi


@dataclass(frozen=True)
class FMPS:
    theta: float


@dataclass(frozen=True)
class StokesRotation:
    theta: float


Step = Union[PassSpec, FMPS, StokesRotation]


def step_map(step: Step, layout: ModeLayout = LIGHT_SPIN) -> SymplecticMap:
    if isinstance(step, PassSpec):
        return fr_pass(step, LIGHT, SPIN, layout)
    if isinstance(step, FMPS):
        return fmps_rotation(SPIN, step.theta, layout)
    if isinstance(step, StokesRotation):
        return stokes_rotation(LIGHT, step.theta, layout)
    raise TypeError(f"not a scheme step: {step!r}")


def scheme_map(steps: Sequence[Step], layout: ModeLayout = LIGHT_SPIN) -> SymplecticMap:
    if not steps:
        return SymplecticMap.identity(layout.n_modes)
    return compose([step_map(s, layout) for s in steps])


def describe(step: Step) -> str:
    if isinstance(step, PassSpec):
        sign = "+" if step.sign > 0 else "-"
        return f"{step.coupling}{sign}" if step.kappa == 1.0 else f"{step.coupling}{sign}{step.kappa:g}"
    name = "FMPS" if isinstance(step, FMPS) else "Stokes"
    return f"{name}({step.theta / np.pi:+g}pi)"


_STEP_RE = re.compile(r"^(?:([ZY])([+-])([0-9.eE+-]*)|(FMPS|Stokes)\(([+-]?[0-9.eE+-]+)pi\))$")


def parse_step(text: str) -> Step:
    """Inverse of :func:`describe`: ``Z+``, ``Y-0.5``, ``FMPS(+0.5pi)``, ``Stokes(-0.5pi)``."""
    m = _STEP_RE.match(text.strip())
    if not m:
        raise ValueError(f"cannot parse scheme step {text!r}")
    if m.group(1):
        return PassSpec(m.group(1), 1 if m.group(2) == "+" else -1, float(m.group(3)) if m.group(3) else 1.0)
    theta = float(m.group(5)) * np.pi
    return FMPS(theta) if m.group(4) == "FMPS" else StokesRotation(theta)


@dataclass(frozen=True)
class Probe:
    """Initial light state: ``vacuum``, ``squeezed`` (x squeezed by ``r``), ``coherent`` or ``thermal``."""

    kind: str = "vacuum"
    r: float = 0.0
    alpha: complex = 0.0
    variance: float = 0.5

    def state(self) -> GaussianState:
        vac = vacuum_state(LIGHT_ONLY)
        if self.kind == "vacuum":
            return vac
        if self.kind == "squeezed":
            if self.r < 0:
                raise ValueError("squeezing must be non-negative")
            return apply_map(vac, squeezer(LIGHT, self.r, LIGHT_ONLY))
        if self.kind == "coherent":
            mean = np.sqrt(2.0) * np.array([np.real(self.alpha), np.imag(self.alpha)])
            return GaussianState(mean, vac.cov, LIGHT_ONLY)
        if self.kind == "thermal":
            if self.variance < 0.5:
                raise ValueError("thermal variance below vacuum")
            return GaussianState(vac.mean, self.variance * np.eye(2), LIGHT_ONLY)
        raise ValueError(f"unknown probe kind {self.kind!r}")


@dataclass(frozen=True)
class MeasurementPlan:
    settings: tuple[HomodyneSetting, ...] = (HomodyneSetting(LIGHT, P_PHASE),)
    shots: int = 1000
    angles: tuple[float, ...] = (0.0,)


@dataclass(frozen=True)
class SchemeConfig:
    """A pass sequence, a probe preparation and a measurement plan.

    Each plan angle is applied to the spin as an FMPS rotation before the steps.
    """

    steps: tuple[Step, ...]
    probe: Probe = field(default_factory=Probe)
    plan: MeasurementPlan = field(default_factory=MeasurementPlan)
    name: str = "custom"

    def __post_init__(self):
        for s in self.steps:
            if not isinstance(s, (PassSpec, FMPS, StokesRotation)):
                raise TypeError(f"not a scheme step: {s!r}")
        for setting in self.plan.settings:
            if setting.mode not in (LIGHT, SPIN):
                raise ValueError(f"measurement must target light or spin, got {setting.mode!r}")
        if self.plan.shots < 1:
            raise ValueError("shot count must be at least 1")

    def map(self) -> SymplecticMap:
        return scheme_map(self.steps)


def joint_state(spin: GaussianState, probe: GaussianState | None = None) -> GaussianState:
    if spin.layout != SPIN_ONLY:
        raise ValueError(f"spin preparation must live on the single mode {SPIN!r}")
    return tensor(probe if probe is not None else vacuum_state(LIGHT_ONLY), spin)


def spin_coherent(alpha: complex) -> GaussianState:
    mean = np.sqrt(2.0) * np.array([np.real(alpha), np.imag(alpha)])
    return GaussianState(mean, 0.5 * np.eye(2), SPIN_ONLY)


def spin_squeezed(r: float, alpha: complex = 0.0) -> GaussianState:
    base = spin_coherent(alpha)
    sq = np.diag([np.exp(-r), np.exp(r)])
    return GaussianState(base.mean, sq @ base.cov @ sq, SPIN_ONLY)


def two_pass_transducer_map(kappa: float = 1.0) -> SymplecticMap:
    """Z pass then Y pass; at unit coupling ``(s_y+j_z, -j_y, j_y+s_z, -s_y)``."""
    if kappa == 0:
        raise ValueError("coupling must be non-zero")
    return compose([fr_pass(PassSpec("Z", 1, kappa)), fr_pass(PassSpec("Y", 1, kappa))])


def three_pass_swap_map(kappa: float = 1.0) -> SymplecticMap:
    """Z, Y, Z passes; at unit coupling ``(j_z, -j_y, s_z, -s_y)``."""
    return compose([fr_pass(PassSpec("Z", 1, kappa)), fr_pass(PassSpec("Y", 1, kappa)),
                    fr_pass(PassSpec("Z", 1, kappa))])


# -- folded-path search -----------------------------------------------------

def is_swap_class(m: np.ndarray, tol: float = 1e-12) -> bool:
    """Swap up to local rotations: zero diagonal blocks, orthogonal cross blocks."""
    m = np.asarray(m)
    if np.abs(m[:2, :2]).max() > tol or np.abs(m[2:, 2:]).max() > tol:
        return False
    return all(np.abs(b.T @ b - np.eye(2)).max() <= tol for b in (m[:2, 2:], m[2:, :2]))


def _quarter(k: int) -> np.ndarray:
    return np.rint(rotation_block(0.5 * np.pi * k))


_QUARTER_LOCALS = [np.kron(np.diag([1.0, 0.0]), _quarter(a)) + np.kron(np.diag([0.0, 1.0]), _quarter(b))
                   for a in range(4) for b in range(4)]


def equivalent_up_to_local_rotations(m: np.ndarray, target: np.ndarray, tol: float = 1e-12) -> bool:
    """True when ``L_out @ m @ L_in == target`` for some quarter-turn local rotations."""
    for lo in _QUARTER_LOCALS:
        left = lo @ m
        for li in _QUARTER_LOCALS:
            if np.abs(left @ li - target).max() <= tol:
                return True
    return False


@dataclass
class SearchResult:
    criterion: str
    n_candidates: int
    matches: list[tuple[Step, ...]]

    @property
    def found(self) -> bool:
        return bool(self.matches)

    @property
    def first(self) -> tuple[Step, ...] | None:
        return self.matches[0] if self.matches else None

    def to_dict(self) -> dict:
        return {
            "criterion": self.criterion,
            "n_candidates": self.n_candidates,
            "found": self.found,
            "matches": [[describe(s) for s in m] for m in self.matches],
        }


def folded_scheme_search(target: SymplecticMap, template: Sequence[Sequence[Step]],
                         criterion: str = "auto") -> SearchResult:
    """Exhaustively enumerate a template of step slots.

    Each slot lists its admissible steps (one entry for a fixed step).  A
    candidate matches when its composite is in the swap class (``"swap"``) or
    equals ``target`` up to quarter-turn local rotations (``"local"``).
    ``"auto"`` picks ``"swap"`` when the target itself is in the swap class.
    """
    if not template or any(len(slot) == 0 for slot in template):
        raise ValueError("empty search space")
    t = target.matrix
    if criterion == "auto":
        criterion = "swap" if is_swap_class(t) else "local"
    if criterion not in ("swap", "local"):
        raise ValueError(f"unknown criterion {criterion!r}")
    matches, n = [], 0
    for assignment in itertools.product(*template):
        n += 1
        m = scheme_map(assignment).matrix
        ok = is_swap_class(m) if criterion == "swap" else equivalent_up_to_local_rotations(m, t)
        if ok:
            matches.append(tuple(assignment))
    return SearchResult(criterion, n, matches)


def _passes(couplings: str = "ZY") -> tuple[PassSpec, ...]:
    return tuple(PassSpec(c, s) for c in couplings for s in (1, -1))


_ROT = (0.0, 0.5 * np.pi, -0.5 * np.pi)
_STOKES_OPTIONAL = tuple(StokesRotation(a) for a in _ROT)

UNFOLDED_SWAP_TEMPLATE = ((PassSpec("Z"),), (PassSpec("Y"),), (PassSpec("Z"),))

# Folded swap: first pass, +pi/2 spin turn, pass, -pi/2 spin turn, pass,
# with free pass types/signs and optional waveplates before each later pass.
FOLDED_SWAP_TEMPLATE = (
    (PassSpec("Z"),),
    (FMPS(0.5 * np.pi),),
    _STOKES_OPTIONAL,
    _passes("ZY"),
    (FMPS(-0.5 * np.pi),),
    _STOKES_OPTIONAL,
    _passes("ZY"),
)

# Same geometry restricted to counter-propagating (Z-type) passes.
FOLDED_SWAP_TEMPLATE_Z_ONLY = tuple(
    _passes("Z") if slot == _passes("ZY") else slot for slot in FOLDED_SWAP_TEMPLATE
)

# Folded geometry with the waveplates removed.
FOLDED_SWAP_TEMPLATE_NO_WAVEPLATE = tuple(
    (StokesRotation(0.0),) if slot == _STOKES_OPTIONAL else slot for slot in FOLDED_SWAP_TEMPLATE
)

# Folded two-pass: pass, +pi/2 spin turn, returning pass.
FOLDED_TWO_PASS_TEMPLATE = (
    (PassSpec("Z"),),
    (FMPS(0.5 * np.pi),),
    _STOKES_OPTIONAL,
    _passes("Z"),
)


# -- acquisitions ---------------------------------------------------------------

def run_scheme(config: SchemeConfig, spin: GaussianState, rng, threads: int = 1) -> SampleSet:
    """Run ``config.plan`` on a spin preparation; one column per homodyne setting."""
    joint = joint_state(spin, config.probe.state())
    base = config.map()
    angles = list(config.plan.angles)

    def one(theta, gen):
        out = apply_map(joint, compose([fmps_rotation(SPIN, theta), base]))
        return np.column_stack([sample_homodyne(out, s, gen, config.plan.shots) for s in config.plan.settings])

    outs = parallel_map(one, list(zip(angles, spawn(rng, len(angles)))), threads)
    tags = np.repeat(angles, config.plan.shots)
    meta = {"steps": [describe(s) for s in config.steps], "probe": config.probe.kind,
            "settings": [[str(s.mode), s.phi] for s in config.plan.settings]}
    return SampleSet(config.name, seed_of(rng), tags, np.vstack(outs), meta)


def single_pass_probe(r: float, shots: int, rng, spin: GaussianState | None = None,
                      kappa: float = 1.0) -> SampleSet:
    """x-squeezed light, one Z pass, homodyne of ``s_y``: samples ``s_y + kappa j_z``."""
    if r < 0:
        raise ValueError("squeezing must be non-negative")
    spin = spin if spin is not None else vacuum_state(SPIN_ONLY)
    out = apply_map(joint_state(spin, Probe("squeezed", r=r).state()), fr_pass(PassSpec("Z", 1, kappa)))
    gen = spawn(rng, 1)[0]
    x = sample_homodyne(out, HomodyneSetting(LIGHT, X_PHASE), gen, shots)
    meta = {"r": r, "kappa": kappa, "measured": "s_y"}
    return SampleSet("single_pass", seed_of(rng), np.zeros(shots), x, meta)


def tomography_scan(spin, angles: Sequence[float], shots_per_angle: int, rng, threads: int = 1,
                    kappa: float = 1.0) -> SampleSet:
    """FMPS(theta), two-pass transducer, homodyne of ``s_z`` for each angle.

    ``spin`` is a single-mode :class:`GaussianState` or a one-mode
    :class:`~spinquad.fock.TruncatedFockState`.  At unit coupling the outcome at
    angle ``theta`` is distributed as ``-(j_y cos theta + j_z sin theta)``.
    """
    angles = [float(a) for a in angles]
    if not angles:
        raise ValueError("no tomography angles given")
    if any(not 0.0 <= a < np.pi for a in angles):
        raise ValueError("tomography angles must lie in [0, pi)")
    if shots_per_angle < 1:
        raise ValueError("at least one shot per angle is required")
    meta = {"angle_offset_rad": TRANSDUCER_ANGLE_OFFSET, "measured": "s_z", "kappa": kappa}

    if isinstance(spin, fock.TruncatedFockState):
        def one(theta, gen):
            pdf, edge = fock.transducer_pdf(spin, theta, kappa)
            return fock.sample_from_pdf(pdf, fock.PDF_GRID, gen, shots_per_angle), edge

        results = parallel_map(one, list(zip(angles, spawn(rng, len(angles)))), threads)
        outs = [r[0] for r in results]
        meta["backend"] = "fock"
        meta["edge_population"] = max(r[1] for r in results)
    else:
        joint = joint_state(spin)
        transducer = two_pass_transducer_map(kappa)
        setting = HomodyneSetting(LIGHT, P_PHASE)

        def one(theta, gen):
            out = apply_map(joint, compose([fmps_rotation(SPIN, theta), transducer]))
            return sample_homodyne(out, setting, gen, shots_per_angle)

        outs = parallel_map(one, list(zip(angles, spawn(rng, len(angles)))), threads)
        meta["backend"] = "gaussian"
    tags = np.repeat(angles, shots_per_angle)
    return SampleSet("tomography", seed_of(rng), tags, np.concatenate(outs), meta)


def husimi_acquisition(spin: GaussianState, shots: int, rng, threads: int = 1) -> SampleSet:
    """Swap the spin onto the light and double-homodyne the light.

    Pairs are distributed as the Husimi function of the spin state rotated by
    ``SWAP_ROTATION``; the rotation is recorded, not undone.
    """
    if shots < 1:
        raise ValueError("at least one shot is required")
    out = apply_map(joint_state(spin), three_pass_swap_map())
    sizes = blocks(shots)
    pairs = parallel_map(lambda n, g: double_homodyne_sample(out, LIGHT, g, n),
                         list(zip(sizes, spawn(rng, len(sizes)))), threads)
    meta = {"rotation_rad": SWAP_ROTATION, "coordinates": "alpha"}
    return SampleSet("husimi", seed_of(rng), np.zeros(shots), np.vstack(pairs), meta)
