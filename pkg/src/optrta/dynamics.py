"""Vehicle models, fixed-step RK4 integration, and the state quantizer.

Model tags: ``ACC`` state ``[x, v]`` input ``[a]``; ``DUBINS`` state
``[x, y, psi, v]`` input ``[omega, a]``; ``AIR`` state
``[x, y, z, psi, gamma, v]`` input ``[omega, Gamma, a]`` (gamma is pitch).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ._backend import kernels
from ._pykernels import ACC, AIR, ANGLE_IDX, DUBINS, INPUT_DIM, STATE_DIM, wrap_angle
from .errors import IntegrationError, PreconditionError

MODEL_NAMES = {"acc": ACC, "dubins": DUBINS, "air": AIR}

__all__ = [
    "ACC",
    "AIR",
    "ANGLE_IDX",
    "DUBINS",
    "INPUT_DIM",
    "MODEL_NAMES",
    "Quantizer",
    "STATE_DIM",
    "derivative",
    "integrate",
    "wrap_angle",
]


def _check(model: int, state, u) -> None:
    if model not in (ACC, DUBINS, AIR):
        raise PreconditionError(f"unknown model tag {model!r}")
    if len(state) != STATE_DIM[model]:
        raise PreconditionError(f"state has {len(state)} components, model expects {STATE_DIM[model]}")
    if len(u) != INPUT_DIM[model]:
        raise PreconditionError(f"input has {len(u)} components, model expects {INPUT_DIM[model]}")


def derivative(model: int, state, u) -> np.ndarray:
    _check(model, state, u)
    return kernels.derivative(model, state, u)


def integrate(model: int, state, u, dt: float, steps: int) -> np.ndarray:
    """RK4 with the input held constant; angles are wrapped after every step."""
    _check(model, state, u)
    if not dt > 0.0:
        raise PreconditionError(f"dt must be positive, got {dt}")
    if steps < 0:
        raise PreconditionError("steps must be non-negative")
    out, bad = kernels.rk4(model, state, u, float(dt), int(steps))
    if bad >= 0:
        raise IntegrationError(bad)
    return out


class Quantizer:
    """Uniform grid over a box; points outside the box clamp to the edge cells."""

    def __init__(self, lower, upper, cells):
        self.lower = np.asarray(lower, dtype=float).reshape(-1)
        self.upper = np.asarray(upper, dtype=float).reshape(-1)
        self.cells = np.asarray(cells, dtype=np.int64).reshape(-1)
        if not (len(self.lower) == len(self.upper) == len(self.cells)):
            raise PreconditionError("quantizer bounds and cell counts must have equal length")
        if np.any(self.cells < 1):
            raise PreconditionError("every dimension needs at least one cell")
        if not (np.all(np.isfinite(self.lower)) and np.all(np.isfinite(self.upper))):
            raise PreconditionError("quantizer bounds must be finite")
        if np.any(self.upper <= self.lower):
            raise PreconditionError("quantizer upper bounds must exceed lower bounds")
        self.width = (self.upper - self.lower) / self.cells
        # row-major strides: the last dimension varies fastest
        self.strides = np.ones(len(self.cells), dtype=np.int64)
        for i in range(len(self.cells) - 2, -1, -1):
            self.strides[i] = self.strides[i + 1] * self.cells[i + 1]
        # plain-float copies for the per-step scalar path
        self._rows = list(
            zip(self.lower.tolist(), self.width.tolist(), (self.cells - 1).tolist(), self.strides.tolist())
        )

    @property
    def dim(self) -> int:
        return len(self.cells)

    @property
    def size(self) -> int:
        return int(np.prod(self.cells))

    def cell_coords(self, state) -> np.ndarray:
        x = np.asarray(state, dtype=float)
        k = np.floor((x - self.lower) / self.width).astype(np.int64)
        return np.clip(k, 0, self.cells - 1)

    def quantize(self, state) -> int:
        if len(state) != len(self._rows):
            raise PreconditionError(f"state has {len(state)} components, quantizer expects {len(self._rows)}")
        idx = 0
        for x, (lo, w, top, stride) in zip(state, self._rows):
            k = math.floor((x - lo) / w)
            idx += (0 if k < 0 else (top if k > top else k)) * stride
        return idx

    def coords_of(self, index: int) -> np.ndarray:
        if not 0 <= index < self.size:
            raise PreconditionError(f"cell index {index} out of range")
        return (index // self.strides) % self.cells

    def dequantize(self, index: int) -> np.ndarray:
        return self.lower + (self.coords_of(index) + 0.5) * self.width

    def to_dict(self) -> dict:
        return {"lower": self.lower.tolist(), "upper": self.upper.tolist(), "cells": self.cells.tolist()}

    @classmethod
    def from_dict(cls, d: dict) -> Quantizer:
        return cls(d["lower"], d["upper"], d["cells"])

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, Quantizer)
            and np.array_equal(self.lower, other.lower)
            and np.array_equal(self.upper, other.upper)
            and np.array_equal(self.cells, other.cells)
        )

    def __repr__(self) -> str:
        return f"Quantizer(lower={self.lower.tolist()}, upper={self.upper.tolist()}, cells={self.cells.tolist()})"


@dataclass(frozen=True)
class Identity:
    """Quantizer stand-in for plants whose states already are cells."""

    size: int

    def quantize(self, state) -> int:
        return int(state)
