"""Phase-space reconstruction from measured samples.

Wigner functions come from filtered back-projection of angle-resolved
homodyne histograms.  Husimi functions come straight from a kernel density
estimate of double-homodyne pairs.  Wigner grids use quadrature coordinates
``(x, p)``; Husimi grids use the coherent-amplitude plane ``alpha = x + i p``.
"""

from __future__ import annotations

import io
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.optimize import least_squares
from scipy.signal import fftconvolve

from .interactions import rotation_block
from .samples import SampleSet

VACUUM_STD = np.sqrt(0.5)
DEFAULT_CUTOFF = 4.0
DEFAULT_BINS = 201
DEFAULT_RANGE = (-6.0, 6.0)


class GridTooSmall(ValueError):
    pass


@dataclass(frozen=True)
class GridSpec:
    """Square grid of ``n x n`` nodes spanning ``[-extent, extent]`` on both axes."""

    extent: float = 5.0
    n: int = 64

    def __post_init__(self):
        if self.extent <= 0 or self.n < 2:
            raise ValueError("grid needs a positive extent and at least two nodes")

    @property
    def axis(self) -> np.ndarray:
        return np.linspace(-self.extent, self.extent, self.n)

    @property
    def step(self) -> float:
        return 2 * self.extent / (self.n - 1)

    @property
    def cell_area(self) -> float:
        return self.step ** 2

    def mesh(self) -> tuple[np.ndarray, np.ndarray]:
        """``X[i, j] = axis[i]`` (first index is x), ``P[i, j] = axis[j]``."""
        return np.meshgrid(self.axis, self.axis, indexing="ij")


@dataclass(frozen=True, eq=False)
class ReconGrid:
    spec: GridSpec
    values: np.ndarray
    kind: str  # "W" or "Q"

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.shape != (self.spec.n, self.spec.n):
            raise ValueError("grid values do not match the grid spec")
        if not np.all(np.isfinite(v)):
            raise ValueError("grid values must be finite")
        object.__setattr__(self, "values", v)

    def total(self) -> float:
        return float(self.values.sum() * self.spec.cell_area)

    def peak(self, level: float = 0.5) -> tuple[float, float]:
        """Vertex of a quadratic fitted to ``log(values)`` where values exceed ``level * max``.

        Averaging over the whole cap keeps the estimate stable on noisy,
        flat-topped densities where a bare argmax jitters.
        """
        v = self.values
        x, p = self.spec.mesh()
        sel = v >= level * v.max()
        if sel.sum() < 6:
            i, j = np.unravel_index(np.argmax(v), v.shape)
            return float(x[i, j]), float(p[i, j])
        xs, ps = x[sel], p[sel]
        design = np.column_stack([np.ones_like(xs), xs, ps, xs * xs, xs * ps, ps * ps])
        c = np.linalg.lstsq(design, np.log(v[sel]), rcond=None)[0]
        hess = np.array([[2 * c[3], c[4]], [c[4], 2 * c[5]]])
        vertex = np.linalg.solve(hess, -c[1:3])
        return float(vertex[0]), float(vertex[1])

    def moments(self) -> tuple[np.ndarray, np.ndarray]:
        """Normalised mean and covariance of the grid treated as a density."""
        x, p = self.spec.mesh()
        w = self.values / self.values.sum()
        m = np.array([(w * x).sum(), (w * p).sum()])
        dx, dp = x - m[0], p - m[1]
        c = np.array([[(w * dx * dx).sum(), (w * dx * dp).sum()], [(w * dx * dp).sum(), (w * dp * dp).sum()]])
        return m, c

    def to_csv(self) -> str:
        header = {"kind": self.kind, "extent": self.spec.extent, "resolution": self.spec.n}
        lines = [json.dumps(header, sort_keys=True)]
        lines += [",".join(repr(float(v)) for v in row) for row in self.values]
        return "\n".join(lines) + "\n"

    @classmethod
    def from_csv(cls, text: str) -> "ReconGrid":
        first, _, body = text.partition("\n")
        header = json.loads(first)
        values = np.array([[float(v) for v in line.split(",")] for line in body.splitlines() if line])
        return cls(GridSpec(header["extent"], header["resolution"]), values, header["kind"])

    def to_gnuplot(self) -> str:
        buf = io.StringIO()
        np.savetxt(buf, self.values, fmt="%.17g", delimiter=" ")
        return buf.getvalue()

    def save(self, path: str | Path) -> None:
        Path(path).write_text(self.to_csv())

    @classmethod
    def load(cls, path: str | Path) -> "ReconGrid":
        return cls.from_csv(Path(path).read_text())


@dataclass(frozen=True, eq=False)
class Sinogram:
    """Per-angle histograms of ``q_theta = x cos(theta) + p sin(theta)``, angles in ``[0, pi)``."""

    angles: np.ndarray
    edges: np.ndarray
    counts: np.ndarray  # (n_angles, n_bins)
    totals: np.ndarray  # shots per angle, including any outside the binning range

    def density(self) -> np.ndarray:
        width = np.diff(self.edges)
        return self.counts / (self.totals[:, None] * width[None, :])


def build_sinogram(samples: SampleSet, bins: int = DEFAULT_BINS,
                   q_range: tuple[float, float] = DEFAULT_RANGE) -> Sinogram:
    """Histogram homodyne samples after undoing the recorded angle offset.

    An outcome at tagged angle ``t`` samples the quadrature at ``t + offset``;
    angles that land in ``[pi, 2pi)`` are folded back with a sign flip.
    """
    if len(samples) == 0:
        raise ValueError("no samples")
    offset = float(samples.metadata.get("angle_offset_rad", 0.0))
    eff = np.mod(samples.angles + offset, 2 * np.pi)
    sign = np.where(eff >= np.pi, -1.0, 1.0)
    eff = np.where(eff >= np.pi, eff - np.pi, eff)
    # fold roundoff like pi - 1e-16 onto a shared key
    eff = np.round(eff, 12) % np.pi
    q = sign * samples.outcomes[:, 0]
    angles = np.unique(eff)
    edges = np.linspace(q_range[0], q_range[1], bins + 1)
    counts = np.empty((angles.size, bins))
    totals = np.empty(angles.size)
    for k, a in enumerate(angles):
        sel = q[eff == a]
        counts[k], _ = np.histogram(sel, edges)
        totals[k] = sel.size
    return Sinogram(angles, edges, counts, totals)


def _ramp_antiderivative(u: np.ndarray, cutoff: float) -> np.ndarray:
    """``L(u) = 2 (1 - cos(k u)) / u``, the integral of the cut-off ramp kernel."""
    small = np.abs(u) < 1e-6
    safe = np.where(small, 1.0, u)
    return np.where(small, cutoff ** 2 * u, 2.0 * (1.0 - np.cos(cutoff * safe)) / safe)


def ramp_kernel(u: np.ndarray, cutoff: float) -> np.ndarray:
    """``K(u) = int_{-k}^{k} |k'| exp(i k' u) dk'``."""
    u = np.asarray(u, dtype=float)
    small = np.abs(u) < 1e-4
    safe = np.where(small, 1.0, u)
    full = 2.0 * ((np.cos(cutoff * safe) - 1.0) / safe ** 2 + cutoff * np.sin(cutoff * safe) / safe)
    return np.where(small, cutoff ** 2 - cutoff ** 4 * u ** 2 / 4.0, full)


def fbp_points(sinogram: Sinogram, x: np.ndarray, p: np.ndarray, cutoff: float = DEFAULT_CUTOFF) -> np.ndarray:
    """Filtered back-projection evaluated at arbitrary phase-space points."""
    if sinogram.angles.size < 8:
        raise ValueError(f"at least 8 angles are required, got {sinogram.angles.size}")
    if np.any(sinogram.totals == 0):
        raise ValueError("empty histogram in sinogram")
    x = np.asarray(x, dtype=float)
    p = np.asarray(p, dtype=float)
    flat_x, flat_p = x.reshape(-1), p.reshape(-1)
    dens = sinogram.density()
    # step heights of the piecewise-constant density at each bin edge
    jumps = np.diff(np.concatenate([np.zeros((dens.shape[0], 1)), dens, np.zeros((dens.shape[0], 1))], axis=1), axis=1)
    dtheta = np.pi / sinogram.angles.size
    acc = np.zeros(flat_x.size)
    for k, theta in enumerate(sinogram.angles):
        t = flat_x * np.cos(theta) + flat_p * np.sin(theta)
        nz = jumps[k] != 0
        if not np.any(nz):
            continue
        # int rho(q) K(t - q) dq for piecewise-constant rho
        acc += dtheta * (_ramp_antiderivative(t[:, None] - sinogram.edges[None, nz], cutoff) @ jumps[k, nz])
    return (acc / (4 * np.pi ** 2)).reshape(x.shape)


def fbp_reconstruct(sinogram: Sinogram, grid: GridSpec = GridSpec(), cutoff: float = DEFAULT_CUTOFF) -> ReconGrid:
    x, p = grid.mesh()
    return ReconGrid(grid, fbp_points(sinogram, x, p, cutoff), "W")


def silverman_bandwidth(points: np.ndarray) -> np.ndarray:
    """Per-axis ``N^{-1/6} * std``."""
    return points.shape[0] ** (-1.0 / 6.0) * points.std(axis=0, ddof=1)


def reference_bandwidth(points: np.ndarray, order: int = 4) -> np.ndarray:
    """Normal-reference bandwidth ``N^{-1/(2 order + 2)} * std`` for a 2-D kernel of ``order``."""
    if order == 2:
        return silverman_bandwidth(points)
    if order != 4:
        raise ValueError(f"kernel order must be 2 or 4, got {order}")
    return points.shape[0] ** (-1.0 / 10.0) * points.std(axis=0, ddof=1)


def _kernel_1d(u: np.ndarray, order: int) -> np.ndarray:
    g = np.exp(-0.5 * u * u)
    # (3 - u^2)/2 times the Gaussian has vanishing second moment
    return g if order == 2 else g * (3.0 - u * u) / 2.0


def spin_frame_pairs(samples: SampleSet) -> np.ndarray:
    """Double-homodyne pairs with the recorded rotation undone."""
    rot = float(samples.metadata.get("rotation_rad", 0.0))
    return samples.outcomes[:, :2] @ rotation_block(rot)


def husimi_estimate(samples: SampleSet, grid: GridSpec = GridSpec(), bandwidth=None,
                    undo_rotation: bool = True, order: int = 4, chunk: int = 8192) -> ReconGrid:
    """Product-kernel density estimate of the pair density.

    ``order=4`` uses the bias-reducing Gaussian kernel ``(3 - u^2) phi(u) / 2``
    per axis; its small negative lobes are clipped since Q is non-negative.
    ``order=2`` is the plain Gaussian kernel with Silverman's bandwidth.
    """
    if len(samples) == 0 or samples.width < 2:
        raise ValueError("double-homodyne pairs are required")
    pts = spin_frame_pairs(samples) if undo_rotation else samples.outcomes[:, :2]
    if bandwidth is None:
        h = reference_bandwidth(pts, order)
    else:
        if order not in (2, 4):
            raise ValueError(f"kernel order must be 2 or 4, got {order}")
        h = np.broadcast_to(np.asarray(bandwidth, dtype=float), (2,))
    ax = grid.axis
    acc = np.zeros((grid.n, grid.n))
    for start in range(0, pts.shape[0], chunk):
        block = pts[start:start + chunk]
        kx = _kernel_1d((ax[None, :] - block[:, :1]) / h[0], order)
        kp = _kernel_1d((ax[None, :] - block[:, 1:2]) / h[1], order)
        acc += kx.T @ kp
    q = acc / (pts.shape[0] * 2 * np.pi * h[0] * h[1])
    return ReconGrid(grid, np.clip(q, 0.0, None), "Q")


def husimi_histogram(samples: SampleSet, grid: GridSpec = GridSpec(), undo_rotation: bool = True) -> ReconGrid:
    """Raw 2-D histogram density with cells centred on the grid nodes."""
    pts = spin_frame_pairs(samples) if undo_rotation else samples.outcomes[:, :2]
    half = 0.5 * grid.step
    edges = np.linspace(-grid.extent - half, grid.extent + half, grid.n + 1)
    counts, _, _ = np.histogram2d(pts[:, 0], pts[:, 1], bins=[edges, edges])
    return ReconGrid(grid, counts / (pts.shape[0] * grid.cell_area), "Q")


def analytic_reference(kind: str, which: str, grid: GridSpec = GridSpec(), alpha: complex = 0.0,
                       r: float = 0.0) -> ReconGrid:
    """Closed-form W (quadrature plane) or Q (alpha plane) for standard states.

    ``kind`` is ``vacuum``, ``coherent`` (amplitude ``alpha``), ``squeezed``
    (x squeezed by ``r``) or ``fock1``.
    """
    x, p = grid.mesh()
    if which == "W":
        if kind == "vacuum":
            v = np.exp(-x ** 2 - p ** 2) / np.pi
        elif kind == "coherent":
            x0, p0 = np.sqrt(2) * np.real(alpha), np.sqrt(2) * np.imag(alpha)
            v = np.exp(-(x - x0) ** 2 - (p - p0) ** 2) / np.pi
        elif kind == "squeezed":
            v = np.exp(-x ** 2 * np.exp(2 * r) - p ** 2 * np.exp(-2 * r)) / np.pi
        elif kind == "fock1":
            rr = x ** 2 + p ** 2
            v = (2 * rr - 1) * np.exp(-rr) / np.pi
        else:
            raise ValueError(f"unsupported state kind {kind!r}")
    elif which == "Q":
        if kind == "vacuum":
            v = np.exp(-x ** 2 - p ** 2) / np.pi
        elif kind == "coherent":
            v = np.exp(-(x - np.real(alpha)) ** 2 - (p - np.imag(alpha)) ** 2) / np.pi
        elif kind == "squeezed":
            sx2 = 0.25 * (np.exp(-2 * r) + 1)
            sp2 = 0.25 * (np.exp(2 * r) + 1)
            v = np.exp(-x ** 2 / (2 * sx2) - p ** 2 / (2 * sp2)) / (2 * np.pi * np.sqrt(sx2 * sp2))
        elif kind == "fock1":
            rr = x ** 2 + p ** 2
            v = rr * np.exp(-rr) / np.pi
        else:
            raise ValueError(f"unsupported state kind {kind!r}")
    else:
        raise ValueError(f"'which' must be 'W' or 'Q', got {which!r}")
    return ReconGrid(grid, v, which)


def q_from_wigner(w: ReconGrid, edge_tol: float = 1e-3) -> ReconGrid:
    """Smooth a Wigner grid with the vacuum Gaussian to get the Husimi function.

    The result lives on the same nodes rescaled to the alpha plane
    (``alpha = (x + i p)/sqrt2``), so its extent is ``w.extent / sqrt2``.
    Raises :class:`GridTooSmall` when W is not negligible within two vacuum
    widths of the boundary, where zero padding would lose mass.
    """
    if w.kind != "W":
        raise ValueError("expected a Wigner grid")
    spec = w.spec
    band = max(1, int(np.ceil(2 * VACUUM_STD / spec.step)))
    v = np.abs(w.values)
    inner = v[band:-band, band:-band] if 2 * band < spec.n else np.zeros((0, 0))
    edge_max = max(v[:band].max(), v[-band:].max(), v[:, :band].max(), v[:, -band:].max())
    if inner.size == 0 or edge_max > edge_tol * v.max():
        raise GridTooSmall(
            f"|W| reaches {edge_max:.2e} (relative {edge_max / v.max():.1e}) near the grid edge; enlarge the extent"
        )
    half = int(np.ceil(4 * VACUUM_STD / spec.step))
    k_ax = spec.step * np.arange(-half, half + 1)
    g = np.exp(-k_ax ** 2)
    kern = np.outer(g, g)
    kern /= kern.sum()
    smoothed = fftconvolve(w.values, kern, mode="same")
    # Q(alpha) = 2 (W * e^{-|u|^2}/pi)(sqrt2 alpha); the cell area halves on rescaling.
    q_spec = GridSpec(spec.extent / np.sqrt(2), spec.n)
    return ReconGrid(q_spec, 2.0 * smoothed, "Q")


def grid_error(a: ReconGrid, b: ReconGrid) -> tuple[float, float]:
    """``(L1, max_abs)`` of ``a - b``."""
    if a.spec != b.spec:
        raise ValueError(f"grid specs differ: {a.spec} vs {b.spec}")
    d = np.abs(a.values - b.values)
    return float(d.sum() * a.spec.cell_area), float(d.max())


def principal_variances(grid: ReconGrid) -> np.ndarray:
    """Eigenvalues (ascending) of the grid's raw second moments.

    Sensitive to cut-off ringing on narrow axes; see :func:`gaussian_fit`.
    """
    return np.linalg.eigvalsh(grid.moments()[1])


def gaussian_fit(grid: ReconGrid) -> tuple[np.ndarray, np.ndarray]:
    """Least-squares fit of ``A exp(-(r-m)^T C^{-1} (r-m)/2)``; returns ``(m, C)``."""
    x, p = grid.spec.mesh()
    m0, c0 = grid.moments()
    c0 = c0 if np.all(np.linalg.eigvalsh(c0) > 0) else 0.5 * np.eye(2)
    l0 = np.linalg.cholesky(c0)

    def unpack(th):
        chol = np.array([[np.exp(th[3]), 0.0], [th[5], np.exp(th[4])]])
        return th[0], th[1:3], chol @ chol.T

    def resid(th):
        a, m, c = unpack(th)
        ci = np.linalg.inv(c)
        dx, dp = x - m[0], p - m[1]
        q = ci[0, 0] * dx * dx + 2 * ci[0, 1] * dx * dp + ci[1, 1] * dp * dp
        return (a * np.exp(-0.5 * q) - grid.values).ravel()

    start = [grid.values.max(), m0[0], m0[1], np.log(l0[0, 0]), np.log(l0[1, 1]), l0[1, 0]]
    sol = least_squares(resid, start)
    _, m, c = unpack(sol.x)
    return m, c
