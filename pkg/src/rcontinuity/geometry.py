"""Finite-dimensional vector geometry: distances, one-sided excess, compact
windows, solution regions, and deterministic samplers.

Everything here is a pure function of its inputs (no shared mutable state),
so concurrent use is safe.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterator, Optional, Sequence, Union

import numpy as np
from scipy.special import ndtri
from scipy.stats import qmc

#: Default tolerance for set-membership decisions.
MEMBERSHIP_TOL = 1e-9


class DimensionMismatchError(ValueError):
    """Operands live in different ambient dimensions."""


class EmptyTargetError(ValueError):
    """Distance queried against an empty target set."""


def as_point(x, dim: Optional[int] = None) -> np.ndarray:
    """Coerce a scalar or sequence to a finite 1-d float vector.

    Raises on NaN/Inf coordinates and, when ``dim`` is given, on a
    dimension mismatch.
    """
    p = np.atleast_1d(np.asarray(x, dtype=float))
    if p.ndim != 1 or p.size == 0:
        raise ValueError(f"a point must be a nonempty 1-d vector, got shape {p.shape}")
    if not np.all(np.isfinite(p)):
        raise ValueError("point coordinates must be finite")
    if dim is not None and p.size != dim:
        raise DimensionMismatchError(f"expected dimension {dim}, got {p.size}")
    return p


@dataclass(frozen=True)
class PointSet:
    """A finite (possibly empty) set of points of equal dimension.

    ``points`` is stored as an ``(n, dim)`` float array.  Empty sets keep an
    explicit dimension so downstream code can stay shape-consistent.
    """

    points: np.ndarray

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        if pts.ndim == 1:
            pts = pts.reshape(-1, 1)
        if pts.ndim != 2 or pts.shape[1] == 0:
            raise ValueError(f"PointSet needs an (n, dim) array, got shape {pts.shape}")
        if pts.size and not np.all(np.isfinite(pts)):
            raise ValueError("all coordinates must be finite")
        object.__setattr__(self, "points", pts)

    @classmethod
    def empty(cls, dim: int) -> "PointSet":
        return cls(np.empty((0, dim)))

    @classmethod
    def from_points(cls, points: Sequence, dim: Optional[int] = None) -> "PointSet":
        rows = [as_point(p, dim) for p in points]
        if not rows:
            if dim is None:
                raise ValueError("cannot build an empty PointSet without a dimension")
            return cls.empty(dim)
        d = rows[0].size
        if any(r.size != d for r in rows):
            raise DimensionMismatchError("points have mixed dimensions")
        return cls(np.vstack(rows))

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    @property
    def is_empty(self) -> bool:
        return self.points.shape[0] == 0

    def __len__(self) -> int:
        return self.points.shape[0]

    def __iter__(self) -> Iterator[np.ndarray]:
        return iter(self.points)


@dataclass(frozen=True)
class Window:
    """A compact axis-aligned box or closed ball.

    ``extent`` holds per-axis half-widths for boxes and a scalar radius for
    balls.  Extents must be strictly positive, so the window is compact with
    nonempty interior by construction.
    """

    kind: str  # "box" | "ball"
    center: np.ndarray
    extent: np.ndarray

    def __post_init__(self):
        if self.kind not in ("box", "ball"):
            raise ValueError(f"unknown window kind {self.kind!r}")
        c = as_point(self.center)
        if self.kind == "box":
            e = np.atleast_1d(np.asarray(self.extent, dtype=float))
            if e.size == 1:
                e = np.full(c.size, float(e[0]))
            if e.size != c.size:
                raise DimensionMismatchError("extent and center dimensions differ")
        else:
            e = np.atleast_1d(float(np.asarray(self.extent).reshape(-1)[0]))
        if not np.all(np.isfinite(e)) or np.any(e <= 0):
            raise ValueError("window extents must be strictly positive and finite")
        object.__setattr__(self, "center", c)
        object.__setattr__(self, "extent", e)

    @classmethod
    def box(cls, center, halfwidths) -> "Window":
        return cls("box", as_point(center), halfwidths)

    @classmethod
    def ball(cls, center, radius: float) -> "Window":
        return cls("ball", as_point(center), radius)

    @property
    def dim(self) -> int:
        return self.center.size

    def contains(self, x) -> bool:
        p = as_point(x, self.dim)
        if self.kind == "box":
            return bool(np.all(np.abs(p - self.center) <= self.extent))
        return bool(np.linalg.norm(p - self.center) <= self.extent[0])

    def contains_rows(self, pts: np.ndarray) -> np.ndarray:
        """Vectorized containment test for an (n, dim) array."""
        if self.kind == "box":
            return np.all(np.abs(pts - self.center) <= self.extent, axis=1)
        return np.linalg.norm(pts - self.center, axis=1) <= self.extent[0]

    def scaled(self, factor: float) -> "Window":
        """Same center, extents multiplied by ``factor``."""
        if factor <= 0:
            raise ValueError("scale factor must be positive")
        return Window(self.kind, self.center, self.extent * factor)

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "center": [float(v) for v in self.center],
            "extent": [float(v) for v in self.extent],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Window":
        return cls(d["kind"], np.asarray(d["center"], dtype=float), np.asarray(d["extent"], dtype=float))


@dataclass(frozen=True)
class Region:
    """An exact solution-set descriptor with a closed-form distance oracle.

    Supported kinds: a finite point list, an axis-aligned box, an affine
    subspace (anchor plus orthonormal basis columns), and a closed ball.
    ``distance`` is exact for every kind; ``contains`` applies the membership
    tolerance.
    """

    kind: str  # "points" | "box" | "affine" | "ball"
    points: Optional[np.ndarray] = None
    center: Optional[np.ndarray] = None
    halfwidths: Optional[np.ndarray] = None
    radius: Optional[float] = None
    anchor: Optional[np.ndarray] = None
    basis: Optional[np.ndarray] = None  # (dim, k), orthonormal columns

    def __post_init__(self):
        if self.kind == "points":
            ps = PointSet(self.points if self.points is not None else np.empty((0, 1)))
            if ps.is_empty:
                raise ValueError("a point-list region must be nonempty")
            object.__setattr__(self, "points", ps.points)
        elif self.kind == "box":
            c = as_point(self.center)
            h = np.atleast_1d(np.asarray(self.halfwidths, dtype=float))
            if h.size == 1:
                h = np.full(c.size, float(h[0]))
            if h.size != c.size or np.any(h < 0):
                raise ValueError("box halfwidths must be nonnegative and match the center")
            object.__setattr__(self, "center", c)
            object.__setattr__(self, "halfwidths", h)
        elif self.kind == "ball":
            c = as_point(self.center)
            r = float(self.radius)
            if r < 0:
                raise ValueError("ball radius must be nonnegative")
            object.__setattr__(self, "center", c)
            object.__setattr__(self, "radius", r)
        elif self.kind == "affine":
            a = as_point(self.anchor)
            b = np.asarray(self.basis, dtype=float)
            if b.ndim != 2 or b.shape[0] != a.size or b.shape[1] == 0:
                raise ValueError("affine basis must be a (dim, k) matrix")
            gram = b.T @ b
            if not np.allclose(gram, np.eye(b.shape[1]), atol=1e-12):
                raise ValueError("affine basis columns must be orthonormal (tol 1e-12)")
            object.__setattr__(self, "anchor", a)
            object.__setattr__(self, "basis", b)
        else:
            raise ValueError(f"unknown region kind {self.kind!r}")

    @classmethod
    def from_points(cls, points: Sequence) -> "Region":
        return cls("points", points=PointSet.from_points(points).points)

    @classmethod
    def box(cls, center, halfwidths) -> "Region":
        return cls("box", center=as_point(center), halfwidths=halfwidths)

    @classmethod
    def ball(cls, center, radius: float) -> "Region":
        return cls("ball", center=as_point(center), radius=radius)

    @classmethod
    def affine(cls, anchor, basis) -> "Region":
        return cls("affine", anchor=as_point(anchor), basis=np.asarray(basis, dtype=float))

    @property
    def dim(self) -> int:
        if self.kind == "points":
            return self.points.shape[1]
        if self.kind == "affine":
            return self.anchor.size
        return self.center.size

    def distance(self, x) -> float:
        """Exact Euclidean distance from ``x`` to the region."""
        p = as_point(x, self.dim)
        if self.kind == "points":
            return float(np.min(np.linalg.norm(self.points - p, axis=1)))
        if self.kind == "box":
            gap = np.maximum(np.abs(p - self.center) - self.halfwidths, 0.0)
            return float(np.linalg.norm(gap))
        if self.kind == "ball":
            return float(max(0.0, np.linalg.norm(p - self.center) - self.radius))
        r = p - self.anchor
        coeff = self.basis.T @ r
        return float(np.linalg.norm(r - self.basis @ coeff))

    def project(self, x) -> np.ndarray:
        """A nearest point of the region to ``x``."""
        p = as_point(x, self.dim)
        if self.kind == "points":
            idx = int(np.argmin(np.linalg.norm(self.points - p, axis=1)))
            return self.points[idx].copy()
        if self.kind == "box":
            return np.clip(p, self.center - self.halfwidths, self.center + self.halfwidths)
        if self.kind == "ball":
            d = np.linalg.norm(p - self.center)
            if d <= self.radius or d == 0.0:
                return p.copy() if d <= self.radius else self.center.copy()
            return self.center + (p - self.center) * (self.radius / d)
        return self.anchor + self.basis @ (self.basis.T @ (p - self.anchor))

    def contains(self, x, tol: float = MEMBERSHIP_TOL) -> bool:
        return self.distance(x) <= tol

    def sample(self, count: int, seed: int = 0, span: float = 1.0) -> PointSet:
        """Deterministic representative points of the region.

        For point lists the list is cycled; for boxes/balls a grid sample is
        used; for affine subspaces coefficients range over ``[-span, span]``.
        """
        if count < 1:
            raise ValueError("count must be >= 1")
        if self.kind == "points":
            idx = np.arange(count) % self.points.shape[0]
            return PointSet(self.points[idx])
        if self.kind == "box":
            h = np.where(self.halfwidths > 0, self.halfwidths, 1e-300)
            w = Window.box(self.center, h)
            pts = sample_window(w, "grid", count, seed).points
            return PointSet(np.where(self.halfwidths > 0, pts, self.center))
        if self.kind == "ball":
            if self.radius == 0:
                return PointSet(np.tile(self.center, (count, 1)))
            return sample_window(Window.ball(self.center, self.radius), "grid", count, seed)
        k = self.basis.shape[1]
        coeff = sample_window(Window.box(np.zeros(k), span), "grid", count, seed).points
        return PointSet(self.anchor + coeff @ self.basis.T)

    def reference_points(self) -> np.ndarray:
        """A few exact members, used for nonemptiness checks."""
        if self.kind == "points":
            return self.points
        if self.kind == "affine":
            return self.anchor.reshape(1, -1)
        return self.center.reshape(1, -1)


TargetSet = Union[PointSet, Region]


def distance_to_set(x, target: TargetSet) -> float:
    """Euclidean distance from a point to a point set or region.

    Exact minimum for a finite :class:`PointSet`, closed form for every
    :class:`Region` kind.  An empty point-set target is an error.
    """
    if isinstance(target, Region):
        return target.distance(x)
    if target.is_empty:
        raise EmptyTargetError("distance to an empty point set is undefined")
    p = as_point(x, target.dim)
    return float(np.min(np.linalg.norm(target.points - p, axis=1)))


def excess(a: PointSet, b: TargetSet) -> float:
    """One-sided excess ``sup_{p in a} d(p, b)``.

    Empty ``a`` gives 0 (the empty set lies inside everything).  Nonempty
    ``a`` against an empty point set signals unbounded excess by returning
    ``inf`` rather than raising.
    """
    if a.is_empty:
        return 0.0
    if isinstance(b, PointSet):
        if b.is_empty:
            return math.inf
        if a.dim != b.dim:
            raise DimensionMismatchError("excess operands have different dimensions")
        diffs = a.points[:, None, :] - b.points[None, :, :]
        return float(np.max(np.min(np.linalg.norm(diffs, axis=2), axis=1)))
    return float(max(b.distance(p) for p in a))


def _grid_axis_counts(count: int, dim: int) -> int:
    m = max(1, int(math.ceil(count ** (1.0 / dim))))
    while m ** dim < count:
        m += 1
    return m


def _unit_grid(count: int, dim: int) -> np.ndarray:
    """First ``count`` points of the smallest symmetric lattice in [-1,1]^dim.

    Axes include both endpoints whenever more than one point per axis is
    requested; the single-point lattice sits at the origin.
    """
    m = _grid_axis_counts(count, dim)
    axis = np.linspace(-1.0, 1.0, m) if m > 1 else np.zeros(1)
    grids = np.meshgrid(*([axis] * dim), indexing="ij")
    lattice = np.stack([g.ravel() for g in grids], axis=1)
    return lattice[:count]


def _halton_unit(count: int, dim: int, seed: int) -> np.ndarray:
    sampler = qmc.Halton(d=dim, scramble=True, seed=seed)
    return sampler.random(count)


def sample_window(w: Window, scheme: str, count: int, seed: int = 0) -> PointSet:
    """Deterministic sample of ``count`` points inside a window.

    Schemes: ``"grid"`` (product lattice; in 1-d evenly spaced including both
    endpoints) and ``"halton"`` (scrambled Halton sequence, reproducible for a
    fixed seed).  Grid sampling of a ball in dimension >= 2 grids the inscribed
    box so that containment stays exact.
    """
    if count < 1:
        raise ValueError("count must be >= 1")
    if scheme not in ("grid", "halton"):
        raise ValueError(f"unknown sampling scheme {scheme!r}")
    d = w.dim
    if scheme == "grid":
        unit = _unit_grid(count, d)
        if w.kind == "box":
            pts = w.center + unit * w.extent
        elif d == 1:
            pts = w.center + unit * w.extent[0]
        else:
            pts = w.center + unit * (w.extent[0] / math.sqrt(d))
        return PointSet(pts)
    if w.kind == "box":
        u = _halton_unit(count, d, seed)
        return PointSet(w.center + (2.0 * u - 1.0) * w.extent)
    # Ball + Halton: consume the sequence in order, rejecting points outside
    # the ball, so the accepted set is a deterministic function of the seed.
    sampler = qmc.Halton(d=d, scramble=True, seed=seed)
    rows = []
    guard = 0
    while len(rows) < count:
        batch = sampler.random(max(count, 64))
        cand = w.center + (2.0 * batch - 1.0) * w.extent[0]
        keep = np.linalg.norm(cand - w.center, axis=1) <= w.extent[0]
        rows.extend(cand[keep])
        guard += 1
        if guard > 1000:
            raise RuntimeError("ball rejection sampling failed to fill the request")
    return PointSet(np.asarray(rows[:count]))


def unit_directions(count: int, dim: int, seed: int = 0) -> np.ndarray:
    """Deterministic unit vectors; alternating signs in 1-d, Halton-derived
    Gaussian directions otherwise."""
    if dim == 1:
        return np.array([[1.0 if i % 2 == 0 else -1.0] for i in range(count)])
    u = _halton_unit(count, dim, seed)
    z = ndtri(np.clip(u, 1e-12, 1 - 1e-12))
    norms = np.linalg.norm(z, axis=1, keepdims=True)
    norms[norms == 0] = 1.0
    return z / norms
