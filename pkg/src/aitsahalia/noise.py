"""Reproducible Brownian increments on dyadic grids.

Each path owns a lattice of 2**fine_level increments over [0, T], drawn
from a counter-based generator keyed by (seed, path_index).  Because the
key pins down the whole stream, a path's increments are identical no
matter how work is sliced across processes or in what order paths are
generated.  Gaussians come from the inverse normal CDF applied to
uniforms built from the top 52 bits of each 64-bit word; every uniform
is an exact dyadic rational in (0, 1), so the pipeline is reproducible
bit for bit wherever the libm functions round identically.

Coarser grids are obtained by summing adjacent pairs of increments one
level at a time.  The pairwise schedule forms a fixed binary tree shared
by all levels, hence coarsening commutes exactly: coarsening to level j
and then to level i gives the same floats as coarsening straight to i.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass, field

import numpy as np
from scipy.special import ndtri

from .model import Array

__all__ = [
    "BrownianLattice",
    "LevelTooDeep",
    "LevelMismatch",
    "generate",
    "generate_block",
    "coarsen",
    "coarsen_block",
    "save_lattice",
    "load_lattice",
]

# 2**24 increments is 128 MiB per path; anything deeper is a mistake.
MAX_FINE_LEVEL = 24


class LevelTooDeep(ValueError):
    """Requested fine level exceeds MAX_FINE_LEVEL."""


class LevelMismatch(ValueError):
    """Requested coarse level does not fit the lattice."""


@dataclass(frozen=True, eq=False)
class BrownianLattice:
    """Increments of one Brownian path on the dyadic grid of fine_level."""

    seed: int
    path_index: int
    horizon: float
    fine_level: int
    increments: Array = field(repr=False)


def _check_levels(fine_level: int) -> None:
    if not 0 <= fine_level <= MAX_FINE_LEVEL:
        raise LevelTooDeep(f"fine_level must lie in [0, {MAX_FINE_LEVEL}], got {fine_level}")


def _uniforms(seed: int, path_index: int, n: int) -> Array:
    if seed < 0 or path_index < 0:
        raise ValueError("seed and path_index must be non-negative")
    key = np.array([seed, path_index], dtype=np.uint64)
    raw = np.random.Generator(np.random.Philox(key=key)).integers(
        0, 2**64, size=n, dtype=np.uint64
    )
    # (m + 1/2) * 2**-52 with m < 2**52: exact, strictly inside (0, 1).
    return (raw >> np.uint64(12)).astype(np.float64) * 2.0**-52 + 2.0**-53


def generate(seed: int, path_index: int, horizon: float, fine_level: int) -> BrownianLattice:
    """Draw the lattice for one path.

    Examples
    --------
    >>> lat = generate(seed=1, path_index=0, horizon=1.0, fine_level=3)
    >>> lat.increments.shape
    (8,)
    """
    _check_levels(fine_level)
    if not (horizon > 0.0 and math.isfinite(horizon)):
        raise ValueError(f"horizon must be finite and > 0, got {horizon!r}")
    n = 1 << fine_level
    h = horizon * 2.0**-fine_level
    increments = ndtri(_uniforms(seed, path_index, n)) * math.sqrt(h)
    return BrownianLattice(seed, path_index, horizon, fine_level, increments)


def generate_block(
    seed: int, path_start: int, n_paths: int, horizon: float, fine_level: int
) -> Array:
    """Increments for paths path_start .. path_start + n_paths - 1, one per row.

    Row i is bitwise identical to generate(seed, path_start + i, ...).
    """
    _check_levels(fine_level)
    if n_paths <= 0:
        raise ValueError("n_paths must be positive")
    n = 1 << fine_level
    raw = np.empty((n_paths, n), dtype=np.float64)
    for i in range(n_paths):
        raw[i] = _uniforms(seed, path_start + i, n)
    return ndtri(raw) * math.sqrt(horizon * 2.0**-fine_level)


def coarsen_block(block: Array, from_level: int, to_level: int) -> Array:
    """Pairwise-sum rows of increments from from_level down to to_level."""
    if not 0 <= to_level <= from_level:
        raise LevelMismatch(
            f"target level {to_level} must lie in [0, {from_level}]"
        )
    if block.shape[-1] != 1 << from_level:
        raise LevelMismatch(
            f"lattice has {block.shape[-1]} increments, expected {1 << from_level}"
        )
    out = block
    for _ in range(from_level - to_level):
        out = out[..., 0::2] + out[..., 1::2]
    return out.copy() if out is block else out


def coarsen(lattice: BrownianLattice, level: int) -> Array:
    """Increments of the same path on the coarser grid of 2**level steps."""
    return coarsen_block(lattice.increments, lattice.fine_level, level)


_HEADER = struct.Struct("<QQdQ")  # seed, path_index, horizon, fine_level


def save_lattice(lattice: BrownianLattice, path: str) -> None:
    """Write header and float64 payload, everything little-endian 64-bit."""
    with open(path, "wb") as fh:
        fh.write(
            _HEADER.pack(lattice.seed, lattice.path_index, lattice.horizon, lattice.fine_level)
        )
        fh.write(np.ascontiguousarray(lattice.increments, dtype="<f8").tobytes())


def load_lattice(path: str) -> BrownianLattice:
    """Exact inverse of save_lattice."""
    with open(path, "rb") as fh:
        seed, path_index, horizon, fine_level = _HEADER.unpack(fh.read(_HEADER.size))
        payload = fh.read()
    _check_levels(fine_level)
    expected = (1 << fine_level) * 8
    if len(payload) != expected:
        raise LevelMismatch(f"payload has {len(payload)} bytes, expected {expected}")
    increments = np.frombuffer(payload, dtype="<f8").astype(np.float64)
    return BrownianLattice(int(seed), int(path_index), float(horizon), int(fine_level), increments)
