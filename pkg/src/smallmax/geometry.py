"""Euclidean domains (intervals, boxes, balls), projections, and soft thresholding.

All domain objects are immutable value types: projecting, measuring or sampling
never mutates them, so they are safe to share across threads.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


class DimensionMismatchError(ValueError):
    """Point dimension does not match the domain dimension."""


def _as_vector(y) -> np.ndarray:
    arr = np.atleast_1d(np.asarray(y, dtype=float))
    if arr.ndim != 1:
        raise ValueError(f"expected a point (1-d array), got shape {arr.shape}")
    return arr


@dataclass(frozen=True)
class Domain:
    """Base class for the supported convex domains."""

    @property
    def dim(self) -> int:
        raise NotImplementedError

    def diameter(self) -> float:
        raise NotImplementedError

    def project(self, y) -> np.ndarray:
        raise NotImplementedError

    def contains(self, y, tol: float = 1e-9) -> bool:
        y = self._check(y)
        return bool(np.linalg.norm(y - self.project(y)) <= tol)

    def chebyshev_center(self) -> np.ndarray:
        raise NotImplementedError

    def sample(self, rng: np.random.Generator, size: int = 1) -> np.ndarray:
        """Uniform samples from the domain, shape (size, dim)."""
        raise NotImplementedError

    def _check(self, y) -> np.ndarray:
        y = _as_vector(y)
        if y.size != self.dim:
            raise DimensionMismatchError(
                f"point has dimension {y.size}, domain has dimension {self.dim}"
            )
        return y


@dataclass(frozen=True)
class Interval(Domain):
    lo: float
    hi: float

    def __post_init__(self):
        if not self.lo <= self.hi:
            raise ValueError(f"interval requires lo <= hi, got [{self.lo}, {self.hi}]")

    @property
    def dim(self) -> int:
        return 1

    def diameter(self) -> float:
        return self.hi - self.lo

    def project(self, y) -> np.ndarray:
        y = self._check(y)
        return np.clip(y, self.lo, self.hi)

    def chebyshev_center(self) -> np.ndarray:
        return np.array([0.5 * (self.lo + self.hi)])

    def sample(self, rng, size=1):
        return rng.uniform(self.lo, self.hi, size=(size, 1))

    def grid(self, n: int) -> np.ndarray:
        """n equispaced points including both endpoints, shape (n, 1)."""
        return np.linspace(self.lo, self.hi, n)[:, None]


@dataclass(frozen=True)
class Box(Domain):
    lo: np.ndarray
    hi: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "lo", _as_vector(self.lo))
        object.__setattr__(self, "hi", _as_vector(self.hi))
        if self.lo.size != self.hi.size:
            raise ValueError("box bounds must have equal dimension")
        if not np.all(self.lo <= self.hi):
            raise ValueError("box requires lo <= hi componentwise")

    @property
    def dim(self) -> int:
        return self.lo.size

    def diameter(self) -> float:
        return float(np.linalg.norm(self.hi - self.lo))

    def project(self, y) -> np.ndarray:
        y = self._check(y)
        return np.clip(y, self.lo, self.hi)

    def chebyshev_center(self) -> np.ndarray:
        return 0.5 * (self.lo + self.hi)

    def sample(self, rng, size=1):
        return rng.uniform(self.lo, self.hi, size=(size, self.dim))

    def grid(self, n: int) -> np.ndarray:
        """Cartesian grid with n points per axis, shape (n**dim, dim)."""
        axes = [np.linspace(l, h, n) for l, h in zip(self.lo, self.hi)]
        mesh = np.meshgrid(*axes, indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=-1)


@dataclass(frozen=True)
class Ball(Domain):
    center: np.ndarray
    radius: float

    def __post_init__(self):
        object.__setattr__(self, "center", _as_vector(self.center))
        if self.radius < 0:
            raise ValueError("ball requires radius >= 0")

    @property
    def dim(self) -> int:
        return self.center.size

    def diameter(self) -> float:
        return 2.0 * self.radius

    def project(self, y) -> np.ndarray:
        y = self._check(y)
        d = y - self.center
        nrm = np.linalg.norm(d)
        if nrm <= self.radius:
            # interior (or center): the point itself is its own projection
            return y.copy()
        return self.center + d * (self.radius / nrm)

    def chebyshev_center(self) -> np.ndarray:
        return self.center.copy()

    def sample(self, rng, size=1):
        # uniform in the ball: direction on the sphere, radius ~ U^(1/d) scaling
        g = rng.standard_normal((size, self.dim))
        g /= np.maximum(np.linalg.norm(g, axis=1, keepdims=True), 1e-300)
        r = self.radius * rng.uniform(0.0, 1.0, size=(size, 1)) ** (1.0 / self.dim)
        return self.center + r * g


@dataclass(frozen=True)
class WholeSpace(Domain):
    dimension: int = field(default=1)

    def __post_init__(self):
        if self.dimension < 1:
            raise ValueError("dimension must be >= 1")

    @property
    def dim(self) -> int:
        return self.dimension

    def diameter(self) -> float:
        return np.inf

    def project(self, y) -> np.ndarray:
        return self._check(y).copy()

    def chebyshev_center(self) -> np.ndarray:
        return np.zeros(self.dimension)

    def sample(self, rng, size=1):
        raise ValueError("cannot sample uniformly from the whole space; supply a probe box")


def project(domain: Domain, y) -> np.ndarray:
    """Euclidean projection of y onto the domain."""
    return domain.project(y)


def soft_threshold(z, r):
    """Soft thresholding [z]_r = (max{|z|, r} - r) * sign(z), elementwise; requires r >= 0."""
    z = np.asarray(z, dtype=float)
    if np.any(np.asarray(r) < 0):
        raise ValueError("soft_threshold requires r >= 0")
    out = (np.maximum(np.abs(z), r) - r) * np.sign(z)
    return out if out.ndim else float(out)
