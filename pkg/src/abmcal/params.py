"""Calibration parameter space for the virus-spread ABM.

Vectors are plain float64 numpy arrays; the space carries the box bounds
and knows which coordinates are whole-day counts.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

CONTINUOUS = "continuous"
INTEGER_DAYS = "integer-days"


class DimensionError(ValueError):
    """Vector length does not match the space."""


@dataclass(frozen=True)
class ParameterSpec:
    name: str
    lower: float
    upper: float
    kind: str = CONTINUOUS

    def __post_init__(self):
        if not self.lower < self.upper:
            raise ValueError(f"{self.name}: lower must be < upper")
        if self.kind not in (CONTINUOUS, INTEGER_DAYS):
            raise ValueError(f"{self.name}: unknown kind {self.kind!r}")
        if self.kind == INTEGER_DAYS and (
            self.lower != int(self.lower) or self.upper != int(self.upper)
        ):
            raise ValueError(f"{self.name}: integer-days bounds must be whole")

    @property
    def width(self) -> float:
        return self.upper - self.lower

    def to_dict(self) -> dict:
        return {"name": self.name, "lower": self.lower, "upper": self.upper, "kind": self.kind}


class ParameterSpace:
    """Ordered box of :class:`ParameterSpec` rows."""

    def __init__(self, specs: Sequence[ParameterSpec]):
        specs = tuple(specs)
        if not specs:
            raise ValueError("a parameter space needs at least one spec")
        names = [s.name for s in specs]
        if len(set(names)) != len(names):
            raise ValueError("parameter names must be unique")
        self.specs = specs
        self.lower = np.array([s.lower for s in specs], dtype=float)
        self.upper = np.array([s.upper for s in specs], dtype=float)
        self.integer_mask = np.array([s.kind == INTEGER_DAYS for s in specs])

    def __len__(self):
        return len(self.specs)

    def __eq__(self, other):
        return isinstance(other, ParameterSpace) and self.specs == other.specs

    def __repr__(self):
        return f"ParameterSpace({[s.name for s in self.specs]})"

    @property
    def dim(self) -> int:
        return len(self.specs)

    @property
    def names(self) -> list[str]:
        return [s.name for s in self.specs]

    @property
    def widths(self) -> np.ndarray:
        return self.upper - self.lower

    def index(self, name: str) -> int:
        return self.names.index(name)

    def subspace(self, indices: Sequence[int]) -> "ParameterSpace":
        return ParameterSpace([self.specs[i] for i in indices])

    def check(self, v) -> np.ndarray:
        v = np.asarray(v, dtype=float)
        if v.shape[-1:] != (self.dim,):
            raise DimensionError(f"expected {self.dim} values, got shape {v.shape}")
        return v

    def contains(self, v) -> bool:
        v = self.check(v)
        inside = np.all((v >= self.lower) & (v <= self.upper))
        whole = np.all(v[..., self.integer_mask] == np.round(v[..., self.integer_mask]))
        return bool(inside and whole)

    # unit-box maps, used by every surrogate and strategy
    def to_unit(self, v) -> np.ndarray:
        return (self.check(v) - self.lower) / self.widths

    def from_unit(self, u) -> np.ndarray:
        return self.lower + np.asarray(u, dtype=float) * self.widths

    def to_dict(self) -> list[dict]:
        return [s.to_dict() for s in self.specs]

    @classmethod
    def from_dict(cls, rows) -> "ParameterSpace":
        return cls([ParameterSpec(**r) for r in rows])


def default_space() -> ParameterSpace:
    """The seven calibrated ABM parameters, in model order."""
    return ParameterSpace([
        ParameterSpec("transmission_probability", 0.0, 1.0),
        ParameterSpec("reinfection_probability", 0.0, 1.0),
        ParameterSpec("death_probability", 0.0, 1.0),
        ParameterSpec("infection_period", 0.0, 41.0, INTEGER_DAYS),
        ParameterSpec("detection_time", 0.0, 41.0, INTEGER_DAYS),
        ParameterSpec("speed", 0.0, 1.0),
        ParameterSpec("interaction_radius", 0.0, 0.022),
    ])


def sample_uniform(space: ParameterSpace, rng: np.random.Generator, size=None) -> np.ndarray:
    """Uniform draw(s) inside the box.

    Integer-days coordinates are uniform over the whole values in range.
    With ``size`` given, returns a ``(size, d)`` array.
    """
    shape = (space.dim,) if size is None else (size, space.dim)
    v = space.lower + rng.random(shape) * space.widths
    if space.integer_mask.any():
        n_int = int(space.integer_mask.sum())
        lo = space.lower[space.integer_mask].astype(int)
        hi = space.upper[space.integer_mask].astype(int)
        ishape = (n_int,) if size is None else (size, n_int)
        v[..., space.integer_mask] = rng.integers(lo, hi + 1, size=ishape)
    return v


def clamp(space: ParameterSpace, v) -> np.ndarray:
    """Project onto the box, then round integer-days coordinates half up."""
    v = np.clip(space.check(v), space.lower, space.upper)
    if space.integer_mask.any():
        v[..., space.integer_mask] = np.floor(v[..., space.integer_mask] + 0.5)
    return v


def perturb_gaussian(space, center, sigma, mask, rng, require_mask=False):
    """Add ``Normal(0, sigma_i**2)`` noise to the masked coordinates of ``center``.

    ``center`` may be a single vector; ``mask`` may be ``(d,)`` or ``(n, d)``
    to perturb ``n`` candidates at once. ``require_mask`` enforces the
    coordinate-search contract that every candidate perturbs something.
    """
    center = space.check(center)
    sigma = np.asarray(sigma, dtype=float)
    mask = np.asarray(mask, dtype=bool)
    if sigma.shape != (space.dim,) or mask.shape[-1] != space.dim:
        raise DimensionError("sigma and mask must have one entry per parameter")
    if require_mask and not mask.any(axis=-1).all():
        raise ValueError("perturbation mask selects no coordinate")
    noise = rng.standard_normal(mask.shape) * sigma
    return clamp(space, center + np.where(mask, noise, 0.0))


def standardized_l2(space: ParameterSpace, a, b) -> float:
    """Euclidean distance after dividing each coordinate gap by its range width."""
    a, b = space.check(a), space.check(b)
    return float(np.sqrt(np.sum(((a - b) / space.widths) ** 2)))
