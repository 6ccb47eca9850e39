"""Dense-grid maximization over low-dimensional domains (the desk-scale trust anchor)."""

from __future__ import annotations

import numpy as np

from .geometry import Ball, Box, Domain, Interval


def candidate_grid(domain: Domain, resolution: int) -> np.ndarray:
    """Grid of candidate points covering the domain, shape (n_points, dim)."""
    if isinstance(domain, Interval):
        return domain.grid(resolution)
    if isinstance(domain, Box):
        if domain.dim > 2:
            raise ValueError("grid search supports dim <= 2")
        return domain.grid(resolution)
    if isinstance(domain, Ball):
        if domain.dim == 1:
            lo = float(domain.center[0] - domain.radius)
            hi = float(domain.center[0] + domain.radius)
            return np.linspace(lo, hi, resolution)[:, None]
        if domain.dim == 2:
            ax = [np.linspace(c - domain.radius, c + domain.radius, resolution)
                  for c in domain.center]
            mesh = np.meshgrid(*ax, indexing="ij")
            pts = np.stack([m.ravel() for m in mesh], axis=-1)
            inside = np.linalg.norm(pts - domain.center, axis=1) <= domain.radius
            ang = np.linspace(0.0, 2 * np.pi, 4 * resolution, endpoint=False)
            ring = domain.center + domain.radius * np.stack(
                [np.cos(ang), np.sin(ang)], axis=-1)
            return np.vstack([pts[inside], ring])
        raise ValueError("grid search supports dim <= 2")
    raise ValueError(f"cannot grid over {type(domain).__name__}")


def _eval_on_grid(fn, pts: np.ndarray, vectorized: bool) -> np.ndarray:
    if vectorized and pts.shape[1] == 1:
        return np.asarray(fn(pts[:, 0]), dtype=float)
    return np.array([float(fn(p)) for p in pts])


def grid_max(fn, domain: Domain, resolution: int = 2001, refine: bool = True,
             vectorized: bool = False):
    """Maximize fn over the domain on a dense grid, with one local refinement pass.

    fn takes a point of shape (dim,); with ``vectorized`` (1-d domains only) it
    may take an array of scalars.  Returns (argmax point, value).
    """
    pts = candidate_grid(domain, resolution)
    vals = _eval_on_grid(fn, pts, vectorized)
    j = int(np.argmax(vals))
    best_p, best_v = pts[j].copy(), float(vals[j])
    if refine:
        if isinstance(domain, Interval) or (isinstance(domain, Ball) and domain.dim == 1):
            lo, hi = (domain.lo, domain.hi) if isinstance(domain, Interval) else (
                float(domain.center[0] - domain.radius), float(domain.center[0] + domain.radius))
            h = (hi - lo) / (resolution - 1) if resolution > 1 else (hi - lo)
            fine = np.linspace(max(lo, best_p[0] - h), min(hi, best_p[0] + h), resolution)[:, None]
        else:
            h = np.max(np.ptp(pts, axis=0)) / (resolution - 1) if resolution > 1 else 0.0
            local = best_p + np.stack(np.meshgrid(
                *[np.linspace(-h, h, 41)] * domain.dim, indexing="ij"),
                axis=-1).reshape(-1, domain.dim)
            fine = np.array([domain.project(p) for p in local])
        fvals = _eval_on_grid(fn, fine, vectorized)
        jj = int(np.argmax(fvals))
        if float(fvals[jj]) > best_v:
            best_p, best_v = fine[jj].copy(), float(fvals[jj])
    return best_p, best_v
