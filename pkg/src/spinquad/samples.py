"""Angle-tagged measurement records and their CSV form."""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

METADATA_PREFIX = "# metadata: "


@dataclass(frozen=True, eq=False)
class SampleSet:
    """Outcomes of one acquisition.

    ``outcomes`` has shape ``(n, k)`` with ``k = 1`` for homodyne and ``k = 2``
    for double-homodyne pairs.  ``metadata`` carries what a reconstruction
    must undo (e.g. ``angle_offset_rad``, ``rotation_rad``); raw outcomes are
    never corrected in place.
    """

    scheme: str
    seed: int
    angles: np.ndarray
    outcomes: np.ndarray
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        angles = np.asarray(self.angles, dtype=float).reshape(-1)
        outcomes = np.asarray(self.outcomes, dtype=float)
        if outcomes.ndim == 1:
            outcomes = outcomes[:, None]
        if outcomes.shape[0] != angles.shape[0]:
            raise ValueError("one angle tag per outcome row is required")
        object.__setattr__(self, "angles", angles)
        object.__setattr__(self, "outcomes", outcomes)

    def __len__(self) -> int:
        return self.angles.shape[0]

    @property
    def width(self) -> int:
        return self.outcomes.shape[1]

    def at_angle(self, theta: float) -> np.ndarray:
        return self.outcomes[self.angles == theta]

    def unique_angles(self) -> np.ndarray:
        return np.unique(self.angles)

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write(METADATA_PREFIX + json.dumps(self.metadata, sort_keys=True) + "\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["scheme", "seed", "angle_rad"] + [f"outcome_{i + 1}" for i in range(self.width)])
        for theta, row in zip(self.angles, self.outcomes):
            # repr of a Python float is the shortest exact round-trip form
            w.writerow([self.scheme, self.seed, repr(float(theta))] + [repr(float(v)) for v in row])
        return buf.getvalue()

    def save(self, path: str | Path) -> None:
        Path(path).write_text(self.to_csv())

    @classmethod
    def from_csv(cls, text: str) -> "SampleSet":
        lines = text.splitlines()
        metadata = {}
        if lines and lines[0].startswith(METADATA_PREFIX):
            metadata = json.loads(lines[0][len(METADATA_PREFIX):])
            lines = lines[1:]
        rows = list(csv.reader(lines))
        header, body = rows[0], rows[1:]
        if header[:3] != ["scheme", "seed", "angle_rad"] or len(header) < 4:
            raise ValueError(f"unexpected sample header {header}")
        if not body:
            raise ValueError("sample file has no rows")
        scheme, seed = body[0][0], int(body[0][1])
        angles = np.array([float(r[2]) for r in body])
        outcomes = np.array([[float(v) for v in r[3:]] for r in body])
        return cls(scheme, seed, angles, outcomes, metadata)

    @classmethod
    def load(cls, path: str | Path) -> "SampleSet":
        return cls.from_csv(Path(path).read_text())
