"""Exponent functions ``p(.)`` and their regularity constants.

Every exponent is total on the plane: inside its window it follows its
recipe, outside it equals the declared tail value ``p_inf``. Suprema over
pairs of points are taken over pairs of cell centers of an analysis grid
(the exponent's own window unless another domain is passed).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np

from . import _kernels
from .errors import GeometryError, InputError
from .field import Box, DomainSpec, ScalarField2D, read_grid

DEFAULT_PAIR_CAP = 20_000_000


class ExponentField:
    """Base class. Subclasses implement ``_evaluate`` for points inside the window."""

    kind: str = "abstract"

    def __init__(self, p_inf: float, window: DomainSpec | None = None):
        self.p_inf = float(p_inf)
        self.window = window
        if not (self.p_inf >= 1 and math.isfinite(self.p_inf)):
            raise InputError(f"p_inf must be a finite value >= 1, got {p_inf}")

    def _evaluate(self, x, y):
        raise NotImplementedError

    def __call__(self, x, y) -> np.ndarray:
        x, y = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(y, dtype=float))
        if self.window is None:
            return np.asarray(self._evaluate(x, y), dtype=float)
        inside = self.window.inside(x, y)
        out = np.full(x.shape, self.p_inf)
        if np.any(inside):
            out[inside] = self._evaluate(x[inside], y[inside])
        return out

    def sample(self, domain: DomainSpec | None = None) -> np.ndarray:
        """Exponent values at the cell centers of ``domain`` (default: own window)."""
        domain = self._analysis_domain(domain)
        X, Y = domain.centers()
        return self(X, Y)

    def _analysis_domain(self, domain):
        domain = domain or self.window
        if domain is None:
            raise InputError(f"{self.kind} exponent has no window; pass an analysis domain")
        return domain

    def _validate(self):
        if self.window is None:
            return
        vals = self.sample()
        if not np.all(np.isfinite(vals)) or vals.min() < 1:
            raise InputError("exponent must be finite and >= 1 on its window")

    def to_recipe(self) -> dict:
        raise InputError(f"{self.kind} exponents are not serializable")

    def __repr__(self):
        return f"{type(self).__name__}(p_inf={self.p_inf}, window={self.window})"


class ConstantExponent(ExponentField):
    kind = "constant"

    def __init__(self, p: float, window: DomainSpec | None = None):
        super().__init__(p, window)
        self.p = float(p)

    def _evaluate(self, x, y):
        return np.full(np.shape(x), self.p)

    def _analysis_domain(self, domain):
        # every window sees the same value, so a tiny one serves for analysis
        return domain or self.window or DomainSpec((0.0, 0.0), 4, 4, 0.25)

    def to_recipe(self):
        return {"kind": "constant", "p": self.p}

    def __repr__(self):
        return f"ConstantExponent({self.p})"


class PiecewiseExponent(ExponentField):
    """Constant values on boxes (later boxes win), ``default`` elsewhere; ``p_inf = default``."""

    kind = "piecewise"

    def __init__(self, pieces, default: float, window: DomainSpec | None = None):
        pieces = [(b if isinstance(b, Box) else Box(*b), float(v)) for b, v in pieces]
        if not pieces:
            raise InputError("piecewise exponent needs at least one piece")
        super().__init__(default, window or _pieces_window(pieces))
        self.pieces = pieces
        self.default = float(default)
        self._validate()

    def _evaluate(self, x, y):
        out = np.full(np.shape(x), self.default)
        for box, value in self.pieces:
            out[box(x, y)] = value
        return out

    def to_recipe(self):
        return {
            "kind": "piecewise",
            "pieces": [{"rect": [b.x0, b.y0, b.x1, b.y1], "p": v} for b, v in self.pieces],
            "default": self.default,
            "window": self.window.to_json(),
        }


def _pieces_window(pieces, cells: int = 64) -> DomainSpec:
    x0 = min(b.x0 for b, _ in pieces)
    y0 = min(b.y0 for b, _ in pieces)
    x1 = max(b.x1 for b, _ in pieces)
    y1 = max(b.y1 for b, _ in pieces)
    pad = 0.125 * max(x1 - x0, y1 - y0)
    h = (max(x1 - x0, y1 - y0) + 2 * pad) / cells
    return DomainSpec.from_bounds(x0 - pad, y0 - pad, x1 + pad, y1 + pad, h)


class SmoothExponent(ExponentField):
    """Closed-form evaluator ``fn(x, y)`` inside ``window``."""

    kind = "smooth"

    def __init__(self, fn: Callable, p_inf: float, window: DomainSpec | None = None, recipe: dict | None = None):
        super().__init__(p_inf, window)
        self.fn = fn
        self.recipe = recipe
        self._validate()

    def _evaluate(self, x, y):
        return np.broadcast_to(np.asarray(self.fn(x, y), dtype=float), np.shape(x)).copy()

    def to_recipe(self):
        if self.recipe is None:
            return super().to_recipe()
        return dict(self.recipe)


class SampledExponent(ExponentField):
    """Piecewise-constant exponent read off a grid.

    ``p_inf`` defaults to the mean over the outermost ring of cells.
    """

    kind = "sampled"

    def __init__(self, grid: ScalarField2D, p_inf: float | None = None, source: str | None = None):
        if p_inf is None:
            p_inf = _outer_ring_mean(grid.values)
        super().__init__(p_inf, grid.domain)
        self.grid = grid
        self.source = source
        self._validate()

    def _evaluate(self, x, y):
        d = self.grid.domain
        gx, gy = d.to_grid(x, y)
        i = np.clip(np.floor(gx + 0.5).astype(int), 0, d.nx - 1)
        j = np.clip(np.floor(gy + 0.5).astype(int), 0, d.ny - 1)
        return self.grid.values[i, j]

    def sample(self, domain=None):
        if domain is None or domain == self.grid.domain:
            return np.array(self.grid.values)
        return super().sample(domain)

    def to_recipe(self):
        if self.source is None:
            return super().to_recipe()
        return {"kind": "sampled", "grid": self.source, "p_inf": self.p_inf}


def _outer_ring_mean(v):
    if min(v.shape) <= 2:
        return float(v.mean())
    mask = np.ones(v.shape, dtype=bool)
    mask[1:-1, 1:-1] = False
    return float(v[mask].mean())


# --- named recipes ---------------------------------------------------------


def two_square_exponent(s: float, t: float, p1: float, p2: float, h: float | None = None) -> SmoothExponent:
    """Continuous exponent equal to ``p1`` on ``[0,s]^2`` and ``p2`` on ``[0,s] x [t-s,t]``.

    ``1/p`` ramps linearly in the distance to the upper square over the gap
    ``g = t - 2s`` separating the squares, and ``p = p1`` beyond, so
    ``p_inf = p1``. Requires disjoint squares (``t > 2s``).
    """
    if not (t > s > 0):
        raise GeometryError(f"need t > s > 0, got s={s}, t={t}")
    if not (1 < p1 < p2 < math.inf):
        raise GeometryError(f"need 1 < p1 < p2 < inf, got p1={p1}, p2={p2}")
    if not t > 2 * s:
        raise GeometryError(
            f"squares [0,{s}]^2 and [0,{s}]x[{t - s},{t}] overlap or touch (t <= 2s); "
            "no exponent can have p_+(B1) < p_-(B2)"
        )
    gap = t - 2 * s
    inv1, inv2 = 1.0 / p1, 1.0 / p2
    b2 = (0.0, t - s, s, t)

    def fn(x, y):
        dx = np.maximum(np.maximum(b2[0] - x, x - b2[2]), 0.0)
        dy = np.maximum(np.maximum(b2[1] - y, y - b2[3]), 0.0)
        phi = np.clip(1.0 - np.hypot(dx, dy) / gap, 0.0, 1.0)
        return 1.0 / (inv1 + (inv2 - inv1) * phi)

    if h is None:
        h = min(s, gap) / 8
    window = DomainSpec.from_bounds(-gap, -gap, s + gap, t + gap, h)
    recipe = {"kind": "two-square", "s": s, "t": t, "p1": p1, "p2": p2, "h": h}
    return SmoothExponent(fn, p1, window, recipe)


def log_holder_exponent(p0: float, a: float, x0=(0.0, 0.0), window: DomainSpec | None = None) -> SmoothExponent:
    """``p(x) = p0 + a / log(e + 1/|x - x0|)``, which is log-Hölder continuous.

    It equals ``p0`` at ``x0`` and tends to ``p_inf = p0 + a`` far away.
    """

    def fn(x, y):
        r = np.hypot(x - x0[0], y - x0[1])
        with np.errstate(divide="ignore"):
            return p0 + a / np.log(math.e + 1.0 / r)

    recipe = {"kind": "log-holder", "p0": p0, "a": a, "x0": list(x0)}
    if window is not None:
        recipe["window"] = window.to_json()
    return SmoothExponent(fn, p0 + a, window, recipe)


def from_recipe(recipe, base_dir: str | Path | None = None) -> ExponentField:
    """Build an exponent from a JSON recipe (dict or JSON text)."""
    if isinstance(recipe, (str, bytes)):
        try:
            recipe = json.loads(recipe)
        except json.JSONDecodeError as exc:
            raise InputError(f"exponent recipe is not valid JSON: {exc}") from exc
    if not isinstance(recipe, dict) or "kind" not in recipe:
        raise InputError("exponent recipe must be an object with a 'kind'")
    kind = recipe["kind"]
    window = _window_from_json(recipe.get("window"))
    try:
        if kind == "constant":
            return ConstantExponent(float(recipe["p"]), window)
        if kind == "piecewise":
            pieces = [(Box(*piece["rect"]), float(piece["p"])) for piece in recipe["pieces"]]
            return PiecewiseExponent(pieces, float(recipe["default"]), window)
        if kind == "sampled":
            path = Path(recipe["grid"])
            if base_dir is not None and not path.is_absolute():
                path = Path(base_dir) / path
            return SampledExponent(read_grid(path), recipe.get("p_inf"), source=str(recipe["grid"]))
        if kind == "two-square":
            return two_square_exponent(recipe["s"], recipe["t"], recipe["p1"], recipe["p2"], recipe.get("h"))
        if kind == "log-holder":
            return log_holder_exponent(recipe["p0"], recipe["a"], tuple(recipe.get("x0", (0.0, 0.0))), window)
    except KeyError as exc:
        raise InputError(f"{kind} recipe is missing field {exc}") from exc
    raise InputError(f"unknown exponent kind {kind!r}")


def _window_from_json(meta):
    if meta is None:
        return None
    return DomainSpec(tuple(meta["origin"]), meta["nx"], meta["ny"], meta["h"])


# --- conjugation -----------------------------------------------------------


def _conj(p):
    return p / (p - 1.0)


def conjugate(p: ExponentField) -> ExponentField:
    """The conjugate exponent ``p' = p / (p - 1)``."""
    if p.p_inf <= 1:
        raise InputError("conjugate undefined: p_inf = 1")
    if isinstance(p, ConstantExponent):
        if p.p <= 1:
            raise InputError("conjugate undefined: p = 1")
        return ConstantExponent(_conj(p.p), p.window)
    if p.window is not None and np.min(p.sample()) <= 1:
        raise InputError("conjugate undefined: p = 1 somewhere on the window")
    if isinstance(p, PiecewiseExponent):
        if any(v <= 1 for _, v in p.pieces):
            raise InputError("conjugate undefined: a piece has p = 1")
        return PiecewiseExponent([(b, _conj(v)) for b, v in p.pieces], _conj(p.default), p.window)
    if isinstance(p, SampledExponent):
        return SampledExponent(p.grid.with_values(_conj(p.grid.values)), _conj(p.p_inf))

    def fn(x, y):
        q = p._evaluate(x, y)
        if np.any(q <= 1):
            raise InputError("conjugate undefined: p = 1")
        return _conj(q)

    return SmoothExponent(fn, _conj(p.p_inf), p.window)


# --- ranges and regularity constants --------------------------------------


def p_range(p: ExponentField, E=None, domain: DomainSpec | None = None) -> tuple[float, float]:
    """``(p_-(E), p_+(E))`` over cell centers in ``E``.

    ``E=None`` means the whole plane; ``p_inf`` then participates, as it does
    for a :class:`Box` reaching outside the analysis window. Other predicates
    are taken to lie inside the window.
    """
    if isinstance(p, ConstantExponent) and domain is None and p.window is None:
        return (p.p, p.p)
    domain = p._analysis_domain(domain)
    X, Y = domain.centers()
    vals = p(X, Y)
    if E is None:
        return (float(min(vals.min(), p.p_inf)), float(max(vals.max(), p.p_inf)))
    mask = np.asarray(E(X, Y), dtype=bool)
    x0, y0, x1, y1 = domain.bounds
    exits = isinstance(E, Box) and (E.x0 < x0 or E.y0 < y0 or E.x1 > x1 or E.y1 > y1)
    if not mask.any():
        if exits:
            return (p.p_inf, p.p_inf)
        raise InputError("region contains no cell centers")
    lo, hi = float(vals[mask].min()), float(vals[mask].max())
    if exits:
        lo, hi = min(lo, p.p_inf), max(hi, p.p_inf)
    return (lo, hi)


@dataclass
class PairSample:
    """Cell offsets ``(di, dj)`` (one per unordered direction) and their lengths."""

    di: np.ndarray
    dj: np.ndarray
    dist: np.ndarray
    n_pairs: int
    subsampled: bool = False


def pair_offsets(
    domain: DomainSpec,
    max_dist: float,
    cap: int = DEFAULT_PAIR_CAP,
    seed: int = 0,
) -> PairSample:
    """Cell-center pair offsets with ``0 < |x - y| < max_dist``.

    All pairs are kept when there are at most ``cap`` of them. Beyond the cap
    the offsets are subsampled per distance decade (in cells) with equal pair
    budgets, always keeping offsets of length at most two cells.
    """
    nx, ny, h = domain.nx, domain.ny, domain.h
    rmax_i = min(nx - 1, int(math.ceil(max_dist / h)))
    rmax_j = min(ny - 1, int(math.ceil(max_dist / h)))
    di, dj = np.meshgrid(np.arange(0, rmax_i + 1), np.arange(-rmax_j, rmax_j + 1), indexing="ij")
    di, dj = di.ravel(), dj.ravel()
    keep = (di > 0) | (dj > 0)
    di, dj = di[keep], dj[keep]
    dist = h * np.hypot(di, dj)
    keep = dist < max_dist
    di, dj, dist = di[keep], dj[keep], dist[keep]
    counts = (nx - np.abs(di)) * (ny - np.abs(dj))
    total = int(counts.sum())
    if total <= cap:
        return PairSample(di, dj, dist, total)

    rng = np.random.default_rng(seed)
    cells = dist / h
    always = cells <= 2.0
    chosen = always.copy()
    budget = cap - int(counts[always].sum())
    decade = np.floor(np.log10(cells)).astype(int)
    decades = np.unique(decade)
    for n_left, dec in zip(range(len(decades), 0, -1), decades):
        idx = np.flatnonzero((decade == dec) & ~always)
        share = budget // n_left
        order = rng.permutation(idx)
        taken = np.cumsum(counts[order]) <= share
        chosen[order[taken]] = True
        budget -= int(counts[order[taken]].sum())
    return PairSample(di[chosen], dj[chosen], dist[chosen], int(counts[chosen].sum()), True)


@dataclass
class PairSup:
    value: float
    pair: tuple[tuple[float, float], tuple[float, float]] | None
    n_pairs: int
    subsampled: bool


def _pair_sup(q, domain, pairs: PairSample, weights) -> PairSup:
    if pairs.di.size == 0:
        return PairSup(0.0, None, 0, pairs.subsampled)
    best, arg = _kernels.pair_sup(
        np.ascontiguousarray(q, dtype=float),
        pairs.di.astype(np.int64),
        pairs.dj.astype(np.int64),
        np.ascontiguousarray(weights, dtype=float),
    )
    pair = None
    if arg[0] >= 0:
        xs, ys = domain.axes()
        pair = ((xs[arg[0]], ys[arg[1]]), (xs[arg[2]], ys[arg[3]]))
    return PairSup(float(best), pair, pairs.n_pairs, pairs.subsampled)


def local_log_holder_constant(
    p: ExponentField, domain: DomainSpec | None = None, cap: int = DEFAULT_PAIR_CAP, seed: int = 0, detail: bool = False
):
    """Sup of ``|p(x) - p(y)| log(1/|x - y|)`` over sampled pairs with ``|x - y| < 1``.

    For a discontinuous exponent this is the grid-scale value, roughly
    ``jump * log(1/h)``, and it grows without bound under refinement.
    """
    domain = p._analysis_domain(domain)
    pairs = pair_offsets(domain, 1.0, cap, seed)
    res = _pair_sup(p.sample(domain), domain, pairs, np.log(1.0 / pairs.dist))
    return res if detail else res.value


def log_holder_infinity_constant(p: ExponentField, domain: DomainSpec | None = None) -> float:
    """Sup over cell centers of ``|p(x) - p_inf| log(e + |x|)``."""
    if isinstance(p, ConstantExponent) and domain is None and p.window is None:
        return abs(p.p - p.p_inf)
    domain = p._analysis_domain(domain)
    X, Y = domain.centers()
    return float(np.max(np.abs(p(X, Y) - p.p_inf) * np.log(math.e + np.hypot(X, Y))))


def _check_N(N):
    if not (N > 1 and math.isfinite(N)):
        raise InputError(f"N must exceed 1, got {N}")


def n_modified_constant(
    p: ExponentField,
    N: float,
    domain: DomainSpec | None = None,
    cap: int = DEFAULT_PAIR_CAP,
    seed: int = 0,
    detail: bool = False,
):
    """Smallest ``c_N`` with ``|1/p(x) - 1/p(y)| log(N/|x-y|^2) <= c_N log N`` over sampled pairs, ``|x-y| < sqrt(N)``.

    Any larger constant also satisfies the inequality; this returns the
    sample's minimal one.
    """
    _check_N(N)
    if isinstance(p, ConstantExponent) and domain is None and p.window is None:
        return PairSup(0.0, None, 0, False) if detail else 0.0
    domain = p._analysis_domain(domain)
    pairs = pair_offsets(domain, math.sqrt(N), cap, seed)
    w = np.log(N / pairs.dist**2) / math.log(N)
    res = _pair_sup(1.0 / p.sample(domain), domain, pairs, w)
    return res if detail else res.value


def oscillation_constant(
    p: ExponentField,
    N: float,
    domain: DomainSpec | None = None,
    cap: int = DEFAULT_PAIR_CAP,
    seed: int = 0,
    detail: bool = False,
):
    """Sup of ``|1/p(x) - 1/p(y)|`` over sampled pairs with ``|x - y| < sqrt(N)``."""
    _check_N(N)
    if isinstance(p, ConstantExponent) and domain is None and p.window is None:
        return PairSup(0.0, None, 0, False) if detail else 0.0
    domain = p._analysis_domain(domain)
    pairs = pair_offsets(domain, math.sqrt(N), cap, seed)
    res = _pair_sup(1.0 / p.sample(domain), domain, pairs, np.ones(pairs.di.size))
    return res if detail else res.value


@dataclass
class RegularityReport:
    p_minus: float
    p_plus: float
    c0: float
    c_inf: float
    N: float | None = None
    cN: float | None = None
    CN: float | None = None
    notes: list[str] = field(default_factory=list)

    def as_dict(self) -> dict:
        return {
            "p_minus": self.p_minus,
            "p_plus": self.p_plus,
            "c0": self.c0,
            "c_inf": self.c_inf,
            "N": self.N,
            "cN": self.cN,
            "CN": self.CN,
            "notes": list(self.notes),
        }


def analyze(
    p: ExponentField, N: float | None = None, domain: DomainSpec | None = None, cap: int = DEFAULT_PAIR_CAP, seed: int = 0
) -> RegularityReport:
    """Every regularity constant of ``p`` on one analysis grid."""
    lo, hi = p_range(p, None, domain)
    local = local_log_holder_constant(p, domain, cap, seed, detail=True)
    report = RegularityReport(lo, hi, local.value, log_holder_infinity_constant(p, domain))
    if local.subsampled:
        report.notes.append(f"local constant from {local.n_pairs} subsampled pairs")
    if N is not None:
        report.N = float(N)
        report.cN = n_modified_constant(p, N, domain, cap, seed)
        report.CN = oscillation_constant(p, N, domain, cap, seed)
    return report
