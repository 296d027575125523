"""Point sets on the unit cube: Sobol, randomly shifted rank-1 lattices and i.i.d. uniforms.

All generators return points in [0, 1)^s.  ``to_parameter_box`` is the single
place where points are mapped to the parameter box [-1/2, 1/2)^s.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.stats import qmc

from ._lattice_table import GENERATING_VECTOR, MAX_LOG2_POINTS

# scipy ships the Joe-Kuo new-joe-kuo-6.21201 direction numbers
SOBOL_TABLE = "joe-kuo-6.21201"
SOBOL_MAX_DIM = 21201
KINDS = ("sobol", "lattice", "mc")


@dataclass
class QmcPointSet:
    kind: str
    points: np.ndarray  # (N, s) in [0, 1)
    generating_vector: Optional[np.ndarray] = None
    shift: Optional[np.ndarray] = None
    table: str = ""
    skip: int = 0
    info: dict = field(default_factory=dict)

    @property
    def num_points(self) -> int:
        return self.points.shape[0]

    @property
    def dimension(self) -> int:
        return self.points.shape[1]

    def parameters(self) -> np.ndarray:
        return to_parameter_box(self.points)

    def write(self, path) -> None:
        """One point per line, coordinates space-separated."""
        np.savetxt(path, self.points, fmt="%.17g")


def to_parameter_box(points: np.ndarray) -> np.ndarray:
    return np.asarray(points, dtype=float) - 0.5


def _check_sizes(s: int, N: int) -> None:
    if s < 1:
        raise ValueError(f"dimension s must be >= 1, got {s}")
    if N < 1:
        raise ValueError(f"number of points N must be >= 1, got {N}")


def sobol_points(s: int, N: int, skip: int = 1) -> QmcPointSet:
    """First ``N`` unscrambled Sobol points after dropping ``skip`` leading points."""
    _check_sizes(s, N)
    if s > SOBOL_MAX_DIM:
        raise ValueError(f"Sobol table supports s <= {SOBOL_MAX_DIM}, got {s}")
    if skip < 0:
        raise ValueError("skip must be nonnegative")
    engine = qmc.Sobol(d=s, scramble=False)
    if skip:
        engine.fast_forward(skip)
    # power-of-two balance warnings are irrelevant for arbitrary N
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", UserWarning)
        pts = engine.random(N)
    return QmcPointSet("sobol", pts, table=SOBOL_TABLE, skip=skip)


def default_generating_vector(s: int) -> np.ndarray:
    if s > len(GENERATING_VECTOR):
        raise ValueError(f"embedded lattice vector supports s <= {len(GENERATING_VECTOR)}, got {s}")
    return np.array(GENERATING_VECTOR[:s], dtype=np.int64)


def lattice_points(
    s: int, N: int, z: Optional[np.ndarray] = None, shift: Optional[np.ndarray] = None
) -> QmcPointSet:
    """Points ``{j z / N + shift}`` for ``j = 1..N``.

    Without ``z`` the embedded table is used; it is designed for ``N = 2^m``.
    """
    _check_sizes(s, N)
    N = int(N)
    z = default_generating_vector(s) if z is None else np.asarray(z, dtype=np.int64)
    if z.shape != (s,):
        raise ValueError(f"generating vector must have {s} components, got shape {z.shape}")
    shift = np.zeros(s) if shift is None else np.asarray(shift, dtype=float)
    if shift.shape != (s,) or np.any(shift < 0) or np.any(shift >= 1):
        raise ValueError("shift must lie in [0, 1)^s")
    j = np.arange(1, N + 1, dtype=np.int64)
    # exact integer arithmetic before the division
    base = np.mod(np.outer(j, z), N) / N
    pts = np.mod(base + shift, 1.0)
    info = {}
    if N & (N - 1) == 0 and N.bit_length() - 1 <= MAX_LOG2_POINTS:
        info["embedded"] = True
    return QmcPointSet("lattice", pts, generating_vector=z, shift=shift, info=info)


def random_shifts(s: int, R: int, rng: np.random.Generator) -> np.ndarray:
    return rng.random((R, s))


def mc_points(s: int, N: int, rng: np.random.Generator) -> QmcPointSet:
    _check_sizes(s, N)
    return QmcPointSet("mc", rng.random((N, s)))
