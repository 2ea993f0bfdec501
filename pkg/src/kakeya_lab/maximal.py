"""Maximal operators on grid fields.

Three operators live here:

* :func:`hl_maximal`, the Hardy-Littlewood maximal function over
  axis-aligned squares;
* the Kakeya maximal function ``K_N f``, the sup of ``|f|``-averages over
  rectangles of eccentricity ``N`` containing a point, computed by
  :func:`kakeya_oracle` (direct enumeration) or :func:`kakeya_fast`;
* the linearization ``T_k f`` (:func:`linearize`), which freezes one
  rectangle per dyadic cube.

All Kakeya engines work on a finite :class:`BasisDiscretization`: a set of
orientations, a ladder of lengths, and every cell center as a rectangle
center.  A cell ``x`` belongs to a rectangle when its center lies inside it
up to a tolerance band of half a cell.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field as dc_field

import numpy as np
from scipy.ndimage import maximum_filter1d

from . import _kernels
from .errors import DiscretizationError, GeometryError, InputError
from .field import DomainSpec, RectangleSpec, SamplingRule, ScalarField2D, rect_averages

__all__ = [
    "BasisDiscretization",
    "DiscretizationWarning",
    "DyadicMesh",
    "LinearizationPlan",
    "RectangleSpec",
    "basis_averages",
    "default_basis",
    "hl_maximal",
    "kakeya_fast",
    "kakeya_oracle",
    "kakeya_maximal",
    "linearize",
]

MIN_ORIENTATIONS = 8


class DiscretizationWarning(UserWarning):
    """The basis is too fine for the grid to resolve its rectangles."""


@dataclass(frozen=True)
class BasisDiscretization:
    """Finite stand-in for all rectangles of a fixed eccentricity.

    ``orientations`` are angles in ``[0, pi)``; ``scales`` are rectangle
    lengths.  ``tol_cells`` is the containment band in cell units.
    """

    orientations: tuple[float, ...]
    scales: tuple[float, ...]
    tol_cells: float = 0.5

    def __post_init__(self):
        th = tuple(float(t) for t in self.orientations)
        sc = tuple(sorted(set(float(s) for s in self.scales)))
        if len(th) < MIN_ORIENTATIONS:
            raise InputError(f"need at least {MIN_ORIENTATIONS} orientations, got {len(th)}")
        if any(not (0.0 <= t < math.pi) for t in th):
            raise InputError("orientations must lie in [0, pi)")
        if not sc or any(not (s > 0 and math.isfinite(s)) for s in sc):
            raise InputError("scales must be a nonempty set of positive lengths")
        if not self.tol_cells >= 0:
            raise InputError("containment tolerance must be nonnegative")
        object.__setattr__(self, "orientations", th)
        object.__setattr__(self, "scales", sc)

    @classmethod
    def uniform(cls, K: int, scales, tol_cells: float = 0.5) -> "BasisDiscretization":
        """``K`` equally spaced orientations starting at 0."""
        return cls(tuple(math.pi * np.arange(int(K)) / int(K)), tuple(scales), tol_cells)

    @property
    def K(self) -> int:
        return len(self.orientations)

    def pairs(self):
        """All ``(theta, length)`` combinations."""
        return [(t, L) for t in self.orientations for L in self.scales]

    def check(self, N: float, h: float) -> None:
        """Warn when the narrowest rectangle is under two cells wide."""
        if min(self.scales) / N < 2 * h * (1 - 1e-12):
            warnings.warn(
                f"narrowest rectangle width {min(self.scales) / N:.4g} is below two cells ({2 * h:.4g}); "
                "averages will be dominated by sampling noise",
                DiscretizationWarning,
                stacklevel=3,
            )


def default_basis(
    domain: DomainSpec,
    N: float,
    K: int | None = None,
    L_min: float | None = None,
    L_max: float | None = None,
) -> BasisDiscretization:
    """The default basis: ``ceil(4N)`` angles, dyadic lengths from ``4hN`` up to the window size."""
    _check_eccentricity(N)
    K = max(MIN_ORIENTATIONS, math.ceil(4 * N)) if K is None else int(K)
    L_min = 4 * domain.h * N if L_min is None else float(L_min)
    L_max = min(domain.extent) if L_max is None else float(L_max)
    scales = []
    L = L_min
    while L <= L_max * (1 + 1e-12):
        scales.append(L)
        L *= 2
    if not scales:
        raise DiscretizationError(
            f"scale ladder is empty: shortest length {L_min:.4g} exceeds the longest {L_max:.4g}; "
            "enlarge the window, refine the grid or pass the lengths explicitly"
        )
    return BasisDiscretization.uniform(K, scales)


def _check_eccentricity(N):
    if not (N > 1 and math.isfinite(N)):
        raise GeometryError(f"eccentricity must exceed 1, got {N}")


def _cell_grid(domain: DomainSpec):
    gi, gj = np.meshgrid(np.arange(domain.nx, dtype=np.float64), np.arange(domain.ny, dtype=np.float64), indexing="ij")
    return gi.ravel(), gj.ravel()


def _footprint(theta, length, N, h, tol_cells):
    """Predicate parameters for containment of a cell offset in a centered rectangle."""
    half_l = length / 2 + tol_cells * h
    half_w = length / N / 2 + tol_cells * h
    return h * math.cos(theta), h * math.sin(theta), half_l, half_w


def _averages(f, gi, gj, theta, length, N, rule):
    return rect_averages(f, gi, gj, theta, length, length / N, rule).reshape(f.domain.shape)


def basis_averages(
    f: ScalarField2D, N: float, disc: BasisDiscretization, rule: SamplingRule = SamplingRule()
) -> dict:
    """``|f|``-averages of every basis rectangle, keyed by ``(theta, length)``.

    Each value is an array over rectangle centers (one per cell).  Passing
    the result to the engines or to :func:`linearize` skips recomputation.
    """
    _check_eccentricity(N)
    gi, gj = _cell_grid(f.domain)
    return {(t, L): _averages(f, gi, gj, t, L, N, rule) for t, L in disc.pairs()}


def _average_source(f, N, disc, rule, averages):
    if averages is None:
        gi, gj = _cell_grid(f.domain)
        for t, L in disc.pairs():
            yield t, L, _averages(f, gi, gj, t, L, N, rule)
    else:
        for t, L in disc.pairs():
            yield t, L, averages[(t, L)]


# --- Hardy-Littlewood --------------------------------------------------------


def hl_maximal(f: ScalarField2D, max_side: int | None = None) -> ScalarField2D:
    """Hardy-Littlewood maximal function over cell-aligned squares.

    For every side ``m`` cells in the ladder ``1, 2, 4, ...`` (up to the
    window size or ``max_side``) and every placement of an ``m x m`` block
    of cells containing ``x``, the block mean of ``|f|`` is computed from a
    summed-area table; ``Mf(x)`` is the largest of them.  Blocks may hang
    over the window edge, where ``f`` is zero.
    """
    a = np.abs(f.values)
    nx, ny = a.shape
    top = max(nx, ny) if max_side is None else int(max_side)
    out = a.copy()
    m = 2
    while m <= top:
        padded = np.pad(a, m - 1)
        sat = np.zeros((padded.shape[0] + 1, padded.shape[1] + 1))
        sat[1:, 1:] = padded.cumsum(0).cumsum(1)
        # means[s, t]: block whose first padded cell is (s, t), i.e. cells s-m+1 .. s
        means = (sat[m:, m:] - sat[:-m, m:] - sat[m:, :-m] + sat[:-m, :-m]) / (m * m)
        # cell i lies in blocks s = i .. i+m-1 of the padded index
        best = np.lib.stride_tricks.sliding_window_view(means, m, axis=0).max(axis=-1)
        best = np.lib.stride_tricks.sliding_window_view(best, m, axis=1).max(axis=-1)
        np.maximum(out, best, out=out)
        m *= 2
    return f.with_values(out)


# --- Kakeya engines ----------------------------------------------------------


def kakeya_oracle(
    f: ScalarField2D,
    N: float,
    disc: BasisDiscretization,
    rule: SamplingRule = SamplingRule(),
    averages: dict | None = None,
) -> ScalarField2D:
    """``K_N f`` by direct enumeration of every (rectangle, cell) pair."""
    _check_eccentricity(N)
    dom = f.domain
    disc.check(N, dom.h)
    out = np.zeros(dom.shape)
    for theta, L, avg in _average_source(f, N, disc, rule, averages):
        _kernels.oracle_max(avg, *_footprint(theta, L, N, dom.h, disc.tol_cells), out)
    return f.with_values(out)


def _pruned(f, N, disc, rule, averages):
    dom = f.domain
    out = np.zeros(dom.shape)
    for theta, L, avg in _average_source(f, N, disc, rule, averages):
        hc, hs, half_l, half_w = _footprint(theta, L, N, dom.h, disc.tol_cells)
        # Bounding box of the rotated rectangle in cell units, one cell of slack.
        rad_i = min(dom.nx, int((half_l * abs(math.cos(theta)) + half_w * abs(math.sin(theta))) / dom.h) + 1)
        rad_j = min(dom.ny, int((half_l * abs(math.sin(theta)) + half_w * abs(math.cos(theta))) / dom.h) + 1)
        offsets = _kernels.footprint_offsets(hc, hs, half_l, half_w, rad_i, rad_j)
        _kernels.scatter_max(avg, offsets, out)
    return out


def _rotation(f, N, disc, spacing_cells=0.5):
    """Per orientation: resample on a rotated lattice, box-average, box-max, sample back."""
    dom = f.domain
    h = dom.h
    s = spacing_cells * h
    vals = np.ascontiguousarray(np.abs(f.values))
    x0, y0, x1, y1 = dom.bounds
    cx, cy = (x0 + x1) / 2, (y0 + y1) / 2
    corners = np.array([[x0, y0], [x1, y0], [x1, y1], [x0, y1]]) - [cx, cy]
    X, Y = dom.centers()
    X = X.ravel() - cx
    Y = Y.ravel() - cy
    out = np.zeros(X.size)
    for theta in disc.orientations:
        c, sn = math.cos(theta), math.sin(theta)
        cu = corners @ [c, sn]
        cv = corners @ [-sn, c]
        for L in disc.scales:
            n_l = _odd(L / s)
            n_w = _odd(L / N / s)
            hl, hw = n_l // 2, n_w // 2
            a0 = math.floor(cu.min() / s) - 2 * hl - 2
            a1 = math.ceil(cu.max() / s) + 2 * hl + 2
            b0 = math.floor(cv.min() / s) - 2 * hw - 2
            b1 = math.ceil(cv.max() / s) + 2 * hw + 2
            A, B = np.meshgrid(np.arange(a0, a1 + 1) * s, np.arange(b0, b1 + 1) * s, indexing="ij")
            px = cx + A * c - B * sn
            py = cy + A * sn + B * c
            samples = np.empty(A.size)
            gx, gy = dom.to_grid(px.ravel(), py.ravel())
            _kernels.resample(vals, np.ascontiguousarray(gx), np.ascontiguousarray(gy), samples)
            samples = samples.reshape(A.shape)
            means = _box_means(samples, n_l, n_w)
            means[~dom.inside(px, py)] = 0.0
            best = maximum_filter1d(means, n_l, axis=0, mode="constant", cval=0.0)
            best = maximum_filter1d(best, n_w, axis=1, mode="constant", cval=0.0)
            ga = (X * c + Y * sn) / s - a0
            gb = (-X * sn + Y * c) / s - b0
            back = np.empty(X.size)
            # resample uses cell-centered coordinates, which index ``best`` directly
            _kernels.resample(best, ga, gb, back)
            np.maximum(out, back, out=out)
    return out.reshape(dom.shape)


def _odd(x):
    n = max(1, int(round(x)))
    return n if n % 2 else n + 1


def _box_means(a, n_l, n_w):
    """Centered ``n_l x n_w`` box means; entries whose box leaves the array are 0."""
    sat = np.zeros((a.shape[0] + 1, a.shape[1] + 1))
    sat[1:, 1:] = a.cumsum(0).cumsum(1)
    full = (sat[n_l:, n_w:] - sat[:-n_l, n_w:] - sat[n_l:, :-n_w] + sat[:-n_l, :-n_w]) / (n_l * n_w)
    out = np.zeros_like(a)
    hl, hw = n_l // 2, n_w // 2
    out[hl : hl + full.shape[0], hw : hw + full.shape[1]] = full
    return out


def kakeya_fast(
    f: ScalarField2D,
    N: float,
    disc: BasisDiscretization,
    mode: str = "pruned",
    rule: SamplingRule = SamplingRule(),
    averages: dict | None = None,
) -> ScalarField2D:
    """``K_N f`` by a faster engine.

    ``mode="pruned"`` computes exactly what :func:`kakeya_oracle` computes,
    pushing each rectangle's average only to the cells its footprint can
    reach.  ``mode="rotation"`` resamples ``|f|`` on a lattice aligned with
    each orientation and replaces rectangle averages and the containment
    search by separable box means and box maxima; it agrees with the oracle
    up to interpolation error (a few percent on smooth fields) and ignores
    ``rule`` and ``averages``.
    """
    _check_eccentricity(N)
    disc.check(N, f.domain.h)
    if mode == "pruned":
        out = _pruned(f, N, disc, rule, averages)
    elif mode == "rotation":
        out = _rotation(f, N, disc)
    else:
        raise InputError(f"unknown engine mode {mode!r}")
    return f.with_values(out)


def kakeya_maximal(f: ScalarField2D, N: float, disc: BasisDiscretization | None = None, engine: str = "pruned"):
    """Dispatch to an engine by name: ``oracle``, ``pruned`` or ``rotation``."""
    disc = default_basis(f.domain, N) if disc is None else disc
    if engine == "oracle":
        return kakeya_oracle(f, N, disc)
    return kakeya_fast(f, N, disc, mode=engine)


# --- linearization ----------------------------------------------------------


@dataclass(frozen=True)
class DyadicMesh:
    """Dyadic cubes ``2^-k (m + [0, 1)^2)`` holding at least one cell center of ``domain``."""

    k: int
    domain: DomainSpec

    @property
    def side(self) -> float:
        return 2.0 ** (-self.k)

    def cell_labels(self) -> tuple[np.ndarray, np.ndarray]:
        """Integer cube index ``(mx, my)`` of every cell center."""
        X, Y = self.domain.centers()
        return np.floor(X / self.side).astype(np.int64), np.floor(Y / self.side).astype(np.int64)

    def cubes(self) -> np.ndarray:
        """Distinct cube indices as an ``(n, 2)`` array, sorted."""
        mx, my = self.cell_labels()
        return np.unique(np.stack([mx.ravel(), my.ravel()], axis=1), axis=0)

    def corners(self, m) -> np.ndarray:
        m = np.asarray(m, dtype=np.float64)
        s = self.side
        return np.array([[m[0], m[1]], [m[0] + 1, m[1]], [m[0] + 1, m[1] + 1], [m[0], m[1] + 1]]) * s


@dataclass
class LinearizationPlan:
    """One rectangle per dyadic cube, each containing its cube."""

    mesh: DyadicMesh
    N: float
    selection: dict = dc_field(default_factory=dict)
    averages: dict = dc_field(default_factory=dict)

    def verify(self, tol: float = 0.0) -> None:
        """Check every selected rectangle contains the four corners of its cube."""
        for m, R in self.selection.items():
            cx, cy = self.mesh.corners(m).T
            if not np.all(R.contains(cx, cy, tol)):
                raise DiscretizationError(f"rectangle chosen for cube {m} does not contain it")
            if abs(R.length / R.width - self.N) > 1e-9 * self.N:
                raise DiscretizationError(f"rectangle chosen for cube {m} has the wrong eccentricity")


def linearize(
    f: ScalarField2D,
    N: float,
    k: int,
    disc: BasisDiscretization,
    plan: str = "greedy",
    rng: np.random.Generator | int | None = None,
    rule: SamplingRule = SamplingRule(),
    averages: dict | None = None,
):
    """Linearized maximal function ``T_k f`` and the plan behind it.

    For each dyadic cube ``Q`` of side ``2^-k`` the candidates are the
    basis rectangles that contain ``Q`` (all four corners, no tolerance).
    ``plan="greedy"`` picks the candidate with the largest ``|f|``-average;
    ``plan="random"`` picks one uniformly at random.  The result equals that
    average on every cell of ``Q``.
    """
    _check_eccentricity(N)
    dom = f.domain
    k = int(k)
    if 2.0 ** (-k) < 2 * dom.h * (1 - 1e-12):
        raise DiscretizationError(f"cubes of side 2^-{k} are finer than two grid cells (h = {dom.h:g})")
    if plan not in ("greedy", "random"):
        raise InputError(f"unknown plan {plan!r}")
    rng = np.random.default_rng(rng)
    disc.check(N, dom.h)
    mesh = DyadicMesh(k, dom)
    cubes = mesh.cubes()
    nq = len(cubes)
    X, Y = dom.centers()
    Xc, Yc = X.ravel(), Y.ravel()
    side = mesh.side
    lo_x, lo_y = cubes[:, 0] * side, cubes[:, 1] * side
    qx = np.stack([lo_x, lo_x + side, lo_x + side, lo_x], axis=1)
    qy = np.stack([lo_y, lo_y, lo_y + side, lo_y + side], axis=1)

    best_val = np.full(nq, -np.inf)
    best_choice = [None] * nq
    seen = np.zeros(nq, dtype=np.int64)
    # A sliver of slack keeps corner containment robust to rounding.
    slack = 1e-9 * dom.h
    for theta, L, avg in _average_source(f, N, disc, rule, averages):
        W = L / N
        c, s = math.cos(theta), math.sin(theta)
        avg = avg.ravel()
        cu = Xc * c + Yc * s
        cv = -Xc * s + Yc * c
        qu = qx * c + qy * s
        qv = -qx * s + qy * c
        u_lo = qu.max(1) - L / 2 - slack
        u_hi = qu.min(1) + L / 2 + slack
        v_lo = qv.max(1) - W / 2 - slack
        v_hi = qv.min(1) + W / 2 + slack
        for start in range(0, nq, 256):
            sl = slice(start, start + 256)
            ok = (
                (cu >= u_lo[sl, None])
                & (cu <= u_hi[sl, None])
                & (cv >= v_lo[sl, None])
                & (cv <= v_hi[sl, None])
            )
            rows = np.arange(sl.start, sl.start + ok.shape[0])
            counts = ok.sum(1)
            if plan == "greedy":
                masked = np.where(ok, avg[None, :], -np.inf)
                j = masked.argmax(1)
                val = masked[np.arange(ok.shape[0]), j]
                better = val > best_val[rows]
            else:
                # reservoir sampling: replace the kept choice with probability new / seen
                seen[rows] += counts
                keys = np.where(ok, rng.random(ok.shape), -1.0)
                j = keys.argmax(1)
                val = avg[j]
                better = (counts > 0) & (rng.random(ok.shape[0]) * np.maximum(seen[rows], 1) < counts)
            for r in np.nonzero(better)[0]:
                best_val[rows[r]] = val[r]
                best_choice[rows[r]] = (theta, L, int(j[r]))

    missing = [tuple(int(v) for v in cubes[q]) for q in range(nq) if best_choice[q] is None]
    if missing:
        m = missing[0]
        raise DiscretizationError(
            f"no basis rectangle contains the dyadic cube m={m} of side 2^-{k} "
            f"([{m[0] * side:g}, {(m[0] + 1) * side:g}) x [{m[1] * side:g}, {(m[1] + 1) * side:g}))"
            + (f" nor {len(missing) - 1} other cubes" if len(missing) > 1 else "")
        )

    result = LinearizationPlan(mesh, float(N))
    labels = mesh.cell_labels()
    out = np.zeros(dom.shape)
    index = {tuple(int(v) for v in cubes[q]): q for q in range(nq)}
    for m, q in index.items():
        theta, L, j = best_choice[q]
        R = RectangleSpec((float(Xc[j]), float(Yc[j])), theta, L, N)
        result.selection[m] = R
        result.averages[m] = float(best_val[q])
    q_of_cell = np.vectorize(lambda a, b: index[(int(a), int(b))])(labels[0], labels[1])
    out = best_val[q_of_cell]
    result.verify(tol=2 * slack)
    return result, f.with_values(out)
