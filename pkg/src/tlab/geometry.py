"""Vectors, tolerances, radius schedules and seeded random streams."""

from __future__ import annotations

import zlib
from dataclasses import dataclass

import numpy as np
from scipy.special import ndtr

from tlab.errors import DimensionMismatch, NonFiniteInput


def as_vector(x, dim: int | None = None) -> np.ndarray:
    """Return ``x`` as a 1-D float64 array, checking finiteness and dimension."""
    v = np.array(x, dtype=np.float64, copy=True).reshape(-1)
    if v.size == 0:
        raise DimensionMismatch("vectors must have dimension >= 1")
    if not np.all(np.isfinite(v)):
        raise NonFiniteInput(f"non-finite vector component in {v!r}")
    if dim is not None and v.size != dim:
        raise DimensionMismatch(f"expected dimension {dim}, got {v.size}")
    return v


def unit(v: np.ndarray) -> np.ndarray:
    n = np.linalg.norm(v)
    if n == 0.0:
        raise ValueError("cannot normalize the zero vector")
    return v / n


@dataclass(frozen=True)
class Tolerances:
    feas_tol: float = 1e-10
    align_tol: float = 1e-3
    rate_tol: float = 0.02
    eta0: float = 0.05

    def __post_init__(self):
        for name in ("feas_tol", "align_tol", "rate_tol", "eta0"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be strictly positive")
        if not self.align_tol < 1:
            raise ValueError("align_tol must be < 1")


DEFAULT_TOL = Tolerances()


@dataclass(frozen=True)
class RadiusSchedule:
    """Geometric radii ``rho0 * factor**k`` for ``k = 0 .. steps-1``."""

    rho0: float = 0.1
    factor: float = 0.5
    steps: int = 6

    def __post_init__(self):
        if not self.rho0 > 0:
            raise ValueError("rho0 must be positive")
        if not 0 < self.factor < 1:
            raise ValueError("factor must lie in (0, 1)")
        if self.steps < 2:
            raise ValueError("steps must be >= 2")

    @property
    def radii(self) -> list[float]:
        return [self.rho0 * self.factor**k for k in range(self.steps)]

    @property
    def smallest(self) -> float:
        return self.radii[-1]

    def eta(self, rho: float, eta0: float) -> float:
        """Relaxation in force at radius ``rho`` (linear in the radius)."""
        return eta0 * rho / self.rho0


def stream(seed: int, name: str, *keys: int) -> np.random.Generator:
    """Independent generator for the named substream ``name`` of ``seed``."""
    spawn_key = (zlib.crc32(name.encode()),) + tuple(int(k) for k in keys)
    return np.random.default_rng(np.random.SeedSequence(int(seed), spawn_key=spawn_key))


def uniform_ball(rng: np.random.Generator, center: np.ndarray, rho: float, n: int) -> np.ndarray:
    """``n`` points uniform in the closed ball; row ``i`` depends only on draw ``i``.

    Uses the fact that the first ``d`` coordinates of a uniform point on the
    sphere in dimension ``d + 2`` are uniform in the ``d``-ball, so the whole
    sample comes from a single row-major normal draw and is prefix-stable.
    """
    d = center.size
    g = rng.standard_normal((n, d + 2))
    g /= np.linalg.norm(g, axis=1, keepdims=True)
    return center + rho * g[:, :d]


def uniform_shell(rng: np.random.Generator, center: np.ndarray, r_in: float, r_out: float,
                  n: int) -> np.ndarray:
    """``n`` points uniform in ``{r_in <= |x - center| <= r_out}``, prefix-stable like ``uniform_ball``.

    One row-major normal draw per point: ``d`` coordinates give the direction
    and the last one, mapped through the normal CDF, the radius.
    """
    if not 0 <= r_in < r_out:
        raise ValueError("need 0 <= r_in < r_out")
    d = center.size
    g = rng.standard_normal((n, d + 1))
    w = g[:, :d] / np.linalg.norm(g[:, :d], axis=1, keepdims=True)
    u = ndtr(g[:, d])
    r = (r_in ** d + u * (r_out ** d - r_in ** d)) ** (1.0 / d)
    return center + r[:, None] * w


def sphere_mesh(dim: int, size: int = 2048) -> np.ndarray:
    """Deterministic near-uniform unit vectors: circle grid, Fibonacci sphere, or seeded cloud."""
    if dim == 1:
        return np.array([[1.0], [-1.0]])
    if dim == 2:
        t = 2 * np.pi * np.arange(size) / size
        return np.column_stack([np.cos(t), np.sin(t)])
    if dim == 3:
        i = np.arange(size) + 0.5
        z = 1 - 2 * i / size
        r = np.sqrt(1 - z * z)
        phi = np.pi * (1 + 5**0.5) * i
        return np.column_stack([r * np.cos(phi), r * np.sin(phi), z])
    g = np.random.default_rng(0).standard_normal((4 * size, dim))
    return g / np.linalg.norm(g, axis=1, keepdims=True)
