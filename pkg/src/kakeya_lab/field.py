"""Uniform-grid scalar fields on a finite window of the plane.

A field is piecewise constant per cell and identically zero outside its
window, so integrals are exact sums. Rectangle averages sample a bilinear
interpolant of the cell-centered values on a lattice inside the rectangle.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Union

import numpy as np

from . import _kernels
from .errors import GeometryError, InputError

Region = Callable[[np.ndarray, np.ndarray], np.ndarray]


@dataclass(frozen=True)
class DomainSpec:
    """A window of ``nx * ny`` square cells of side ``h`` anchored at ``origin``."""

    origin: tuple[float, float]
    nx: int
    ny: int
    h: float

    def __post_init__(self):
        if int(self.nx) != self.nx or int(self.ny) != self.ny or self.nx < 1 or self.ny < 1:
            raise InputError(f"cell counts must be positive integers, got {self.nx}x{self.ny}")
        if not (self.h > 0 and math.isfinite(self.h)):
            raise InputError(f"cell side must be positive, got {self.h}")
        object.__setattr__(self, "origin", (float(self.origin[0]), float(self.origin[1])))
        object.__setattr__(self, "nx", int(self.nx))
        object.__setattr__(self, "ny", int(self.ny))
        object.__setattr__(self, "h", float(self.h))

    @classmethod
    def from_bounds(cls, x0: float, y0: float, x1: float, y1: float, h: float) -> "DomainSpec":
        """Smallest window of side-``h`` cells starting at ``(x0, y0)`` covering the box."""
        nx = max(1, math.ceil((x1 - x0) / h - 1e-9))
        ny = max(1, math.ceil((y1 - y0) / h - 1e-9))
        return cls((x0, y0), nx, ny, h)

    @property
    def shape(self) -> tuple[int, int]:
        return (self.nx, self.ny)

    @property
    def extent(self) -> tuple[float, float]:
        return (self.nx * self.h, self.ny * self.h)

    @property
    def bounds(self) -> tuple[float, float, float, float]:
        x0, y0 = self.origin
        return (x0, y0, x0 + self.nx * self.h, y0 + self.ny * self.h)

    @property
    def cell_area(self) -> float:
        return self.h * self.h

    def axes(self) -> tuple[np.ndarray, np.ndarray]:
        x0, y0 = self.origin
        return (
            x0 + (np.arange(self.nx) + 0.5) * self.h,
            y0 + (np.arange(self.ny) + 0.5) * self.h,
        )

    def centers(self) -> tuple[np.ndarray, np.ndarray]:
        """Cell-center coordinates as two ``(nx, ny)`` arrays."""
        xs, ys = self.axes()
        return np.meshgrid(xs, ys, indexing="ij")

    def to_grid(self, x, y):
        """Grid coordinates in which cell ``(i, j)`` is centered at ``(i, j)``."""
        x0, y0 = self.origin
        return (np.asarray(x) - x0) / self.h - 0.5, (np.asarray(y) - y0) / self.h - 0.5

    def inside(self, x, y) -> np.ndarray:
        x0, y0, x1, y1 = self.bounds
        x = np.asarray(x)
        y = np.asarray(y)
        return (x >= x0) & (x <= x1) & (y >= y0) & (y <= y1)

    def to_json(self) -> dict:
        return {"nx": self.nx, "ny": self.ny, "h": self.h, "origin": list(self.origin)}


@dataclass(frozen=True, eq=False)
class ScalarField2D:
    """Cell-centered samples ``values[i, j]`` on ``domain``; zero outside it."""

    domain: DomainSpec
    values: np.ndarray

    def __post_init__(self):
        vals = np.array(self.values, dtype=np.float64)
        if vals.shape != self.domain.shape:
            raise InputError(f"values have shape {vals.shape}, domain expects {self.domain.shape}")
        if not np.all(np.isfinite(vals)):
            raise InputError("field values must be finite")
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)

    @classmethod
    def zeros(cls, domain: DomainSpec) -> "ScalarField2D":
        return cls(domain, np.zeros(domain.shape))

    @classmethod
    def constant(cls, domain: DomainSpec, c: float) -> "ScalarField2D":
        return cls(domain, np.full(domain.shape, float(c)))

    @classmethod
    def from_function(cls, fn, domain: DomainSpec) -> "ScalarField2D":
        X, Y = domain.centers()
        return cls(domain, np.broadcast_to(fn(X, Y), domain.shape))

    def with_values(self, values) -> "ScalarField2D":
        return ScalarField2D(self.domain, values)

    def abs(self) -> "ScalarField2D":
        return self.with_values(np.abs(self.values))

    def __add__(self, other: "ScalarField2D") -> "ScalarField2D":
        _check_same_domain(self, other)
        return self.with_values(self.values + other.values)

    def __mul__(self, c: float) -> "ScalarField2D":
        return self.with_values(self.values * float(c))

    __rmul__ = __mul__

    def touches_boundary(self) -> bool:
        """True when the outermost ring of cells carries nonzero values."""
        v = self.values
        return bool(np.any(v[0]) or np.any(v[-1]) or np.any(v[:, 0]) or np.any(v[:, -1]))


def _check_same_domain(f, g):
    if f.domain != g.domain:
        raise InputError("fields live on different domains")


# --- regions ---------------------------------------------------------------


@dataclass(frozen=True)
class Box:
    """Closed axis-parallel box ``[x0, x1] x [y0, y1]``."""

    x0: float
    y0: float
    x1: float
    y1: float

    def __call__(self, x, y):
        return (x >= self.x0) & (x <= self.x1) & (y >= self.y0) & (y <= self.y1)

    @property
    def area(self) -> float:
        return max(self.x1 - self.x0, 0.0) * max(self.y1 - self.y0, 0.0)


@dataclass(frozen=True)
class Ball:
    center: tuple[float, float]
    radius: float

    def __call__(self, x, y):
        return (x - self.center[0]) ** 2 + (y - self.center[1]) ** 2 <= self.radius**2


def everywhere(x, y):
    return np.ones(np.broadcast(x, y).shape, dtype=bool)


def indicator(region: Region, domain: DomainSpec) -> ScalarField2D:
    """Characteristic function of ``region`` by cell-center membership."""
    X, Y = domain.centers()
    return ScalarField2D(domain, np.asarray(region(X, Y), dtype=np.float64))


def integrate(f: ScalarField2D) -> float:
    return float(f.domain.cell_area * np.sum(f.values))


# --- rectangles ------------------------------------------------------------


@dataclass(frozen=True)
class RectangleSpec:
    """Rectangle with long side ``length`` along angle ``theta`` and width ``length / eccentricity``."""

    center: tuple[float, float]
    theta: float
    length: float
    eccentricity: float

    def __post_init__(self):
        if not (self.length > 0 and math.isfinite(self.length)):
            raise GeometryError(f"rectangle length must be positive, got {self.length}")
        if not (self.eccentricity > 1 and math.isfinite(self.eccentricity)):
            raise GeometryError(f"eccentricity must exceed 1, got {self.eccentricity}")
        object.__setattr__(self, "center", (float(self.center[0]), float(self.center[1])))
        theta = float(self.theta) % math.pi
        # tiny negative angles round up to pi itself
        object.__setattr__(self, "theta", 0.0 if theta >= math.pi else theta)

    @classmethod
    def axis_aligned(cls, x0, y0, x1, y1) -> "RectangleSpec":
        """The box ``[x0, x1] x [y0, y1]`` as a rectangle spec (long side either way)."""
        dx, dy = x1 - x0, y1 - y0
        if dx <= 0 or dy <= 0:
            raise GeometryError("degenerate box")
        center = ((x0 + x1) / 2, (y0 + y1) / 2)
        if dy >= dx:
            return cls(center, math.pi / 2, dy, dy / dx)
        return cls(center, 0.0, dx, dx / dy)

    @property
    def width(self) -> float:
        return self.length / self.eccentricity

    @property
    def area(self) -> float:
        return self.length * self.width

    @property
    def axes(self) -> tuple[np.ndarray, np.ndarray]:
        """Unit vectors along the long and the short side."""
        c, s = math.cos(self.theta), math.sin(self.theta)
        return np.array([c, s]), np.array([-s, c])

    def local(self, x, y):
        """Coordinates ``(u, v)`` relative to the center along the two axes."""
        c, s = math.cos(self.theta), math.sin(self.theta)
        dx = np.asarray(x) - self.center[0]
        dy = np.asarray(y) - self.center[1]
        return dx * c + dy * s, dy * c - dx * s

    def contains(self, x, y, tol: float = 0.0):
        u, v = self.local(x, y)
        return (np.abs(u) <= self.length / 2 + tol) & (np.abs(v) <= self.width / 2 + tol)

    def corners(self) -> np.ndarray:
        e, n = self.axes
        c = np.asarray(self.center)
        hl, hw = self.length / 2, self.width / 2
        return np.array([c + a * hl * e + b * hw * n for a, b in ((-1, -1), (1, -1), (1, 1), (-1, 1))])


@dataclass(frozen=True)
class SamplingRule:
    """Sample-lattice density for rectangle averages; ``None`` means half a cell."""

    max_spacing: float | None = None

    def spacing(self, h: float) -> float:
        s = h / 2 if self.max_spacing is None else float(self.max_spacing)
        if not s > 0:
            raise InputError("sampling spacing must be positive")
        return s


def lattice_offsets(theta, length, width, spacing, h):
    """Sample offsets of a centered rectangle, in grid units."""
    nu = max(1, math.ceil(length / spacing - 1e-9))
    nv = max(1, math.ceil(width / spacing - 1e-9))
    u = (np.arange(nu) + 0.5) * (length / nu) - length / 2
    v = (np.arange(nv) + 0.5) * (width / nv) - width / 2
    U, V = np.meshgrid(u, v, indexing="ij")
    c, s = math.cos(theta), math.sin(theta)
    dgx = ((U * c - V * s) / h).ravel()
    dgy = ((U * s + V * c) / h).ravel()
    return dgx, dgy


def rect_averages(
    f: ScalarField2D,
    gcx: np.ndarray,
    gcy: np.ndarray,
    theta: float,
    length: float,
    width: float,
    rule: SamplingRule = SamplingRule(),
    absolute: bool = True,
) -> np.ndarray:
    """Averages over congruent rectangles centered at grid coordinates ``(gcx, gcy)``.

    This is the single averaging routine every engine uses; ``absolute``
    averages ``|f|`` rather than ``f``.
    """
    if not (length > 0 and width > 0):
        raise GeometryError("degenerate rectangle")
    h = f.domain.h
    dgx, dgy = lattice_offsets(theta, length, width, rule.spacing(h), h)
    vals = np.abs(f.values) if absolute else f.values
    gcx = np.ascontiguousarray(gcx, dtype=np.float64).ravel()
    gcy = np.ascontiguousarray(gcy, dtype=np.float64).ravel()
    out = np.empty(gcx.size)
    _kernels.rect_average_batch(np.ascontiguousarray(vals), gcx, gcy, dgx, dgy, out)
    return out


def sample_average_rect(
    f: ScalarField2D, r: RectangleSpec, rule: SamplingRule = SamplingRule()
) -> float:
    """Average of ``f`` over the rectangle ``r`` on the sample lattice of ``rule``."""
    gx, gy = f.domain.to_grid(r.center[0], r.center[1])
    out = rect_averages(f, np.array([gx]), np.array([gy]), r.theta, r.length, r.width, rule, absolute=False)
    return float(out[0])


# --- grid files ------------------------------------------------------------

PathLike = Union[str, Path]


def sidecar_path(path: PathLike) -> Path:
    return Path(str(path) + ".meta.json")


def write_grid(f: ScalarField2D, path: PathLike, fmt: str | None = None) -> None:
    """Write ``f`` as CSV (12 significant digits) or raw little-endian float64.

    Rows run over ``j`` (increasing y), each row holding ``nx`` values.
    """
    path = Path(path)
    fmt = fmt or ("csv" if path.suffix.lower() == ".csv" else "raw")
    rows = f.values.T
    if fmt == "csv":
        with open(path, "w") as fh:
            for row in rows:
                fh.write(",".join(f"{v:.12g}" for v in row) + "\n")
    elif fmt == "raw":
        np.ascontiguousarray(rows, dtype="<f8").tofile(path)
    else:
        raise InputError(f"unknown grid format {fmt!r}")
    sidecar_path(path).write_text(json.dumps(f.domain.to_json()) + "\n")


def read_grid(path: PathLike, fmt: str | None = None) -> ScalarField2D:
    path = Path(path)
    meta_path = sidecar_path(path)
    if not path.exists():
        raise InputError(f"grid file not found: {path}")
    if not meta_path.exists():
        raise InputError(f"missing sidecar {meta_path}")
    try:
        meta = json.loads(meta_path.read_text())
        domain = DomainSpec(tuple(meta["origin"]), meta["nx"], meta["ny"], meta["h"])
    except (KeyError, TypeError, ValueError) as exc:
        raise InputError(f"bad sidecar {meta_path}: {exc}") from exc
    fmt = fmt or ("csv" if path.suffix.lower() == ".csv" else "raw")
    try:
        if fmt == "csv":
            rows = np.loadtxt(path, delimiter=",", ndmin=2, dtype=np.float64)
        else:
            rows = np.fromfile(path, dtype="<f8")
            rows = rows.reshape(domain.ny, domain.nx)
    except ValueError as exc:
        raise InputError(f"cannot parse grid {path}: {exc}") from exc
    if rows.shape != (domain.ny, domain.nx):
        raise InputError(f"grid {path} has shape {rows.shape}, sidecar says {(domain.ny, domain.nx)}")
    return ScalarField2D(domain, rows.T)
