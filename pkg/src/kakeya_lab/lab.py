"""Scaling experiments for the Kakeya maximal operator on variable Lebesgue spaces.

The studies here estimate how operator norms grow with the eccentricity
``N`` and compare them with closed-form predictions:

* :func:`thm13_scaling_study` measures the duality lower bound
  ``|R|^-1 ||chi_R||_p ||chi_R||_p'`` on the two-square construction, which
  grows like ``N^(1/p1 - 1/p2)``;
* :func:`eq11_constant_p_study` and :func:`thm15_bound_check` estimate
  ``||K_N||`` from below by ``max ||K_N f|| / ||f||`` over witness fields;
* :func:`lemma31_check`, :func:`lemma32_diagnostic` and
  :func:`diening_disjoint_cube_diagnostic` evaluate the inequalities the
  upper bound rests on.

Every study returns a :class:`StudyReport` whose CSV output depends only
on its inputs; timestamps go to the JSON sidecar.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Callable, Iterable

import numpy as np
from scipy import stats

from .errors import GeometryError, InputError
from .exponent import (
    ConstantExponent,
    ExponentField,
    conjugate,
    n_modified_constant,
    oscillation_constant,
    p_range,
    two_square_exponent,
)
from .field import Box, DomainSpec, RectangleSpec, ScalarField2D, indicator
from .maximal import BasisDiscretization, kakeya_fast, kakeya_oracle
from .vnorm import luxemburg_from_samples, luxemburg_norm, norm_product_over_measure, rectangle_lattice

CSV_FORMAT = "%.12g"


# --- reports -----------------------------------------------------------------


@dataclass(frozen=True)
class LogLogFit:
    """Least-squares line through ``(log N, log value)``."""

    slope: float
    intercept: float
    stderr: float
    n: int


def loglog_fit(N, values) -> LogLogFit:
    x = np.log(np.asarray(N, dtype=float))
    y = np.log(np.asarray(values, dtype=float))
    if x.size < 2:
        raise InputError("a fit needs at least two rows")
    if x.size == 2:
        slope = (y[1] - y[0]) / (x[1] - x[0])
        return LogLogFit(float(slope), float(y[0] - slope * x[0]), 0.0, 2)
    res = stats.linregress(x, y)
    return LogLogFit(float(res.slope), float(res.intercept), float(res.stderr), int(x.size))


def _now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


def _fmt(v) -> str:
    if isinstance(v, (float, np.floating)):
        return CSV_FORMAT % v
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return str(v)


@dataclass
class StudyReport:
    """Rows of ``(N, value, extra columns...)`` plus a log-log fit of value against ``N``."""

    name: str
    columns: tuple[str, ...]
    rows: list[tuple] = field(default_factory=list)
    metadata: dict = field(default_factory=dict)
    burn_in: int = 0

    def __post_init__(self):
        if self.columns[:2] != ("N", "value"):
            raise InputError("report columns must start with N, value")

    def add(self, *row) -> None:
        if len(row) != len(self.columns):
            raise InputError(f"row has {len(row)} entries, expected {len(self.columns)}")
        self.rows.append(tuple(row))
        self.rows.sort(key=lambda r: r[0])

    def column(self, name: str) -> np.ndarray:
        k = self.columns.index(name)
        return np.array([r[k] for r in self.rows])

    @property
    def N(self) -> np.ndarray:
        return self.column("N").astype(float)

    @property
    def values(self) -> np.ndarray:
        return self.column("value").astype(float)

    @property
    def fit(self) -> LogLogFit:
        """Log-log fit of ``value`` over all rows after the burn-in prefix."""
        return self.fit_column("value")

    def fit_column(self, name: str) -> LogLogFit:
        return loglog_fit(self.N[self.burn_in :], self.column(name)[self.burn_in :].astype(float))

    def ratio_spread(self, numerator: str = "value", denominator: str = "reference") -> float:
        """``max / min`` of ``numerator / denominator`` over the rows."""
        r = self.column(numerator).astype(float) / self.column(denominator).astype(float)
        return float(r.max() / r.min())

    def csv_text(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.columns)
        for row in self.rows:
            w.writerow([_fmt(v) for v in row])
        return buf.getvalue()

    def summary(self) -> dict:
        out = {"name": self.name, "rows": len(self.rows), "burn_in": self.burn_in}
        if len(self.rows) - self.burn_in >= 2:
            f = self.fit
            out["fit"] = {"slope": f.slope, "intercept": f.intercept, "stderr": f.stderr, "n": f.n}
        return out

    def write(self, path) -> Path:
        """Write the CSV and a ``.meta.json`` sidecar with metadata and fit."""
        path = Path(path)
        path.write_text(self.csv_text())
        meta = {**self.summary(), "columns": list(self.columns), "metadata": self.metadata}
        meta_path = path.with_name(path.name + ".meta.json")
        meta_path.write_text(json.dumps(meta, indent=2, sort_keys=True, default=_json_default))
        return meta_path

    def write_plot_csv(self, path, column: str = "value") -> None:
        """Two-column ``N,<column>`` file for plotting."""
        k = self.columns.index(column)
        lines = [f"N,{column}"] + [f"{_fmt(r[0])},{_fmt(r[k])}" for r in self.rows]
        Path(path).write_text("\n".join(lines) + "\n")


def _json_default(o):
    if isinstance(o, np.generic):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    return str(o)


# --- the two-square construction -------------------------------------------------


@dataclass
class Thm13Result:
    """The two-square construction at one eccentricity.

    ``chain`` holds the intermediate quantities of the lower-bound argument:
    the areas of ``R`` meeting each square and the restricted norms next to
    their constant-exponent bounds.
    """

    exponent: ExponentField
    rectangle: RectangleSpec
    predicted: float
    measured: float
    chain: dict


def thm13_predicted(s: float, t: float, p1: float, p2: float, N: float) -> float:
    """Closed-form lower bound ``t^-2 (st)^(1 + 1/p2 - 1/p1) N^(1/p1 - 1/p2)``."""
    return t**-2 * (s * t) ** (1 + 1 / p2 - 1 / p1) * N ** (1 / p1 - 1 / p2)


def _check_thm13(s, t, p1, p2, N):
    if not (0 < s < t):
        raise GeometryError(f"need 0 < s < t, got s={s}, t={t}")
    if not s < 1:
        raise GeometryError(f"squares must have area below 1, got side {s}")
    if not (1 < p1 < p2 < math.inf):
        raise GeometryError(f"need 1 < p1 < p2 < inf so that p_+(B1) < p_-(B2), got p1={p1}, p2={p2}")
    if not (N > 1 and t / N < s):
        raise GeometryError(f"need t/N < s, got N={N} with t/N={t / N:g} and s={s}")


def thm13_construction(
    s: float,
    t: float,
    p1: float,
    p2: float,
    N: float,
    exponent: ExponentField | None = None,
    cells_across: int = 16,
    tol: float = 1e-10,
) -> Thm13Result:
    """Build ``B1 = [0,s]^2``, ``B2 = [0,s] x [t-s,t]``, ``R = [0,t/N] x [0,t]`` and measure.

    ``measured`` is ``|R|^-1 ||chi_R||_p ||chi_R||_p'`` on a lattice aligned
    with ``R`` (``cells_across`` cells over its width); ``predicted`` is the
    closed form, which it must exceed up to quadrature error.
    """
    _check_thm13(s, t, p1, p2, N)
    p = two_square_exponent(s, t, p1, p2) if exponent is None else exponent
    R = RectangleSpec.axis_aligned(0.0, 0.0, t / N, t)
    res = norm_product_over_measure(R, p, tol, cells_across, detail=True)

    X, Y, cell = rectangle_lattice(R, cells_across)
    in1 = (X <= s) & (Y <= s)
    in2 = (X <= s) & (Y >= t - s) & (Y <= t)
    q = conjugate(p)
    ones = np.ones(X.shape)
    area1 = cell * int(in1.sum())
    area2 = cell * int(in2.sum())
    norm2 = luxemburg_from_samples(ones[in2], p(X[in2], Y[in2]), cell, tol)
    norm1 = luxemburg_from_samples(ones[in1], q(X[in1], Y[in1]), cell, tol)
    chain = {
        "area_R": res.area,
        "area_R_B1": area1,
        "area_R_B2": area2,
        "area_exact": s * t / N,
        "norm_p_R_B2": norm2,
        "bound_p_R_B2": area2 ** (1 / p2),
        "norm_conj_R_B1": norm1,
        "bound_conj_R_B1": area1 ** (1 - 1 / p1),
        "restricted_product": norm2 * norm1 / res.area,
    }
    return Thm13Result(p, R, thm13_predicted(s, t, p1, p2, N), res.value, chain)


def eq21_lower_bound(R: RectangleSpec, p: ExponentField, tol: float = 1e-10, cells_across: int = 8) -> float:
    """Duality lower bound ``|R|^-1 ||chi_R||_p' ||chi_R||_p`` on the operator norm."""
    return norm_product_over_measure(R, p, tol, cells_across)


def thm13_scaling_study(
    s: float,
    t: float,
    p1: float,
    p2: float,
    N_list: Iterable[float],
    exponent: ExponentField | None = None,
    cells_across: int = 16,
    burn_in: int = 0,
) -> StudyReport:
    """Growth of the duality lower bound with ``N``; the slope approaches ``1/p1 - 1/p2``.

    Passing a constant ``exponent`` gives the control run, whose values are
    all 1 (``predicted`` is then still the two-exponent formula).
    """
    N_list = _ascending(N_list)
    if exponent is None:
        exponent = two_square_exponent(s, t, p1, p2)
    report = StudyReport(
        "thm13",
        ("N", "value", "predicted", "ratio"),
        metadata={
            "exponent": exponent.to_recipe(),
            "s": s,
            "t": t,
            "p1": p1,
            "p2": p2,
            "epsilon": 1 / p1 - 1 / p2,
            "cells_across": cells_across,
            "started": _now(),
        },
        burn_in=burn_in,
    )
    for N in N_list:
        r = thm13_construction(s, t, p1, p2, N, exponent, cells_across)
        report.add(N, r.measured, r.predicted, r.measured / r.predicted)
    report.metadata["finished"] = _now()
    return report


def _ascending(N_list) -> list[float]:
    N_list = [float(n) for n in N_list]
    if not N_list:
        raise InputError("empty N list")
    if any(b <= a for a, b in zip(N_list, N_list[1:])):
        raise InputError("N list must be strictly ascending")
    if N_list[0] <= 1:
        raise InputError("every N must exceed 1")
    return N_list


# --- operator-norm lower estimates ----------------------------------------------


@dataclass(frozen=True)
class StudySetup:
    """Grid, basis and anchor rectangle used to estimate ``||K_N||`` at one ``N``.

    The grid resolves the anchor's width with ``cells_across`` cells; the
    basis holds ``2 * cone + 1`` orientations spaced ``pi / (4N)`` around the
    anchor's and the lengths ``anchor.length * 2^j`` for ``j < levels``.  The
    window covers every point a basis rectangle through the anchor center
    can reach sideways.
    """

    N: float
    anchor: RectangleSpec
    domain: DomainSpec
    disc: BasisDiscretization

    @classmethod
    def around(
        cls, anchor: RectangleSpec, cells_across: int = 4, cone: int = 6, levels: int = 2, margin: float = 0.05
    ) -> "StudySetup":
        N = anchor.eccentricity
        L = anchor.length
        h = L / (cells_across * N)
        step = math.pi / (4 * N)
        if cone * step >= math.pi / 2:
            raise InputError(f"orientation cone too wide for N={N}")
        thetas = sorted((anchor.theta + j * step) % math.pi for j in range(-cone, cone + 1))
        scales = [L * 2.0**j for j in range(levels)]
        spread = L * math.sin(cone * step) + 4 * anchor.width
        e, n = anchor.axes
        half_u, half_v = L / 2 + margin * L, anchor.width / 2 + spread
        cx, cy = anchor.center
        ex = abs(e[0]) * half_u + abs(n[0]) * half_v
        ey = abs(e[1]) * half_u + abs(n[1]) * half_v
        nx = max(1, math.ceil(2 * ex / h))
        ny = max(1, math.ceil(2 * ey / h))
        domain = DomainSpec((cx - nx * h / 2, cy - ny * h / 2), nx, ny, h)
        return cls(N, anchor, domain, BasisDiscretization(tuple(thetas), tuple(scales)))


def _rect_field(R: RectangleSpec, domain: DomainSpec) -> ScalarField2D:
    return indicator(R.contains, domain)


def dual_witness(R: RectangleSpec, p: ExponentField, domain: DomainSpec) -> ScalarField2D:
    """``lam^(1 - p'(y)) chi_R`` with ``lam = ||chi_R||_p'``.

    It has unit modular, and its average over ``R`` equals ``lam / |R|``,
    so ``K_N`` of it is at least ``|R|^-1 ||chi_R||_p' ||chi_R||_p`` in norm.
    """
    chi = _rect_field(R, domain)
    q = conjugate(p)
    lam = luxemburg_norm(chi, q)
    if lam == 0:
        raise InputError("rectangle contains no cell centers")
    qv = q.sample(domain)
    return chi.with_values(chi.values * lam ** (1.0 - qv))


def witness_fields(setup: StudySetup, p: ExponentField, family: Iterable[str]) -> dict[str, ScalarField2D]:
    """Named witness fields on the setup grid.

    ``rectangle``: the anchor's indicator; ``dual``: :func:`dual_witness`
    of the anchor; ``ball``: a disk of diameter the anchor width at its
    center; ``bush``: the union of basis rectangles of the anchor's length
    through its center; ``window``: the constant 1.
    """
    R, dom = setup.anchor, setup.domain
    out = {}
    for name in family:
        if name == "rectangle":
            out[name] = _rect_field(R, dom)
        elif name == "dual":
            out[name] = dual_witness(R, p, dom)
        elif name == "ball":
            cx, cy = R.center
            r = max(R.width / 2, dom.h)
            out[name] = indicator(lambda x, y: np.hypot(x - cx, y - cy) <= r, dom)
        elif name == "bush":
            v = np.zeros(dom.shape)
            X, Y = dom.centers()
            for th in setup.disc.orientations:
                v = np.maximum(v, RectangleSpec(R.center, th, R.length, R.eccentricity).contains(X, Y))
            out[name] = ScalarField2D(dom, v.astype(float))
        elif name == "window":
            out[name] = ScalarField2D.constant(dom, 1.0)
        else:
            raise InputError(f"unknown witness {name!r}")
    return out


@dataclass
class NormEstimate:
    value: float
    witness: str
    ratios: dict


def operator_norm_estimate(
    setup: StudySetup, p: ExponentField, witnesses: dict[str, ScalarField2D], engine: str = "rotation"
) -> NormEstimate:
    """``max ||K_N f||_p / ||f||_p`` over the witnesses, ``K_N f`` evaluated on the setup grid."""
    ratios = {}
    for name, f in witnesses.items():
        nf = luxemburg_norm(f, p)
        if nf == 0:
            continue
        if engine == "oracle":
            Kf = kakeya_oracle(f, setup.N, setup.disc)
        else:
            Kf = kakeya_fast(f, setup.N, setup.disc, mode=engine)
        ratios[name] = luxemburg_norm(Kf, p) / nf
    if not ratios:
        raise InputError("every witness field is zero")
    best = max(ratios, key=ratios.get)
    return NormEstimate(ratios[best], best, ratios)


EQ11_FAMILY = ("rectangle", "ball", "bush")
THM15_FAMILY = ("dual", "rectangle", "ball", "bush")


def eq11_constant_p_study(
    p0: float,
    family: Iterable[str] = EQ11_FAMILY,
    N_list: Iterable[float] = (8, 16, 32, 64, 128, 256),
    engine: str = "rotation",
    length: float = 1.0,
    cells_across: int = 4,
) -> StudyReport:
    """Witness lower estimates of ``||K_N||`` on ``L^p0`` against ``(log N)^(2/p0)``.

    The anchor at each ``N`` is a vertical rectangle of length ``length``
    centered at the origin; the small ball therefore has radius
    ``length / (2N)``.
    """
    if not p0 >= 2:
        raise InputError(f"need p0 >= 2, got {p0}")
    family = tuple(family)
    p = ConstantExponent(p0)
    report = StudyReport(
        "eq11",
        ("N", "value", "reference", "witness"),
        metadata={"p0": p0, "family": list(family), "engine": engine, "length": length, "started": _now()},
    )
    for N in _ascending(N_list):
        setup = StudySetup.around(RectangleSpec((0.0, 0.0), math.pi / 2, length, N), cells_across)
        est = operator_norm_estimate(setup, p, witness_fields(setup, p, family), engine)
        report.add(N, est.value, math.log(N) ** (2 / p0), est.witness)
    ref = stats.linregress(report.column("reference").astype(float), report.values) if len(report.rows) > 2 else None
    if ref is not None:
        report.metadata["fit_vs_reference"] = {"slope": float(ref.slope), "intercept": float(ref.intercept)}
    report.metadata["finished"] = _now()
    return report


def _thm15_anchor(p: ExponentField, N: float) -> RectangleSpec:
    recipe = p.to_recipe()
    if recipe.get("kind") == "two-square":
        t = recipe["t"]
        return RectangleSpec.axis_aligned(0.0, 0.0, t / N, t)
    dom = p._analysis_domain(None)
    x0, y0, x1, y1 = dom.bounds
    return RectangleSpec(((x0 + x1) / 2, (y0 + y1) / 2), math.pi / 2, min(dom.extent) / 2, N)


def thm15_bound_check(
    p: ExponentField,
    N_list: Iterable[float] = (16, 32, 64, 128, 256),
    family: Iterable[str] = THM15_FAMILY,
    engine: str = "rotation",
    anchor: Callable[[float], RectangleSpec] | None = None,
    cells_across: int = 4,
) -> StudyReport:
    """Witness estimates of ``||K_N||`` on ``L^p(.)`` against ``N^(p_- c_N) (log N)^(2/p_-)``.

    Rows carry the estimate, the reference, their ratio, ``c_N``, the
    duality lower bound of the anchor rectangle and the best witness.  The
    anchor defaults to the two-square rectangle ``[0, t/N] x [0, t]`` for a
    two-square exponent and to a centered vertical rectangle otherwise.
    """
    p_lo, p_hi = p_range(p)
    if not (2 <= p_lo <= p_hi < math.inf):
        raise InputError(f"need 2 <= p_- <= p_+ < inf, got [{p_lo}, {p_hi}]")
    family = tuple(family)
    anchor = (lambda N: _thm15_anchor(p, N)) if anchor is None else anchor
    report = StudyReport(
        "thm15",
        ("N", "value", "reference", "ratio", "cN", "eq21", "witness"),
        metadata={
            "exponent": p.to_recipe(),
            "p_minus": p_lo,
            "p_plus": p_hi,
            "family": list(family),
            "engine": engine,
            "started": _now(),
        },
    )
    remarks = []
    for N in _ascending(N_list):
        cN = n_modified_constant(p, N)
        ref = N ** (p_lo * cN) * math.log(N) ** (2 / p_lo)
        R = anchor(N)
        setup = StudySetup.around(R, cells_across)
        est = operator_norm_estimate(setup, p, witness_fields(setup, p, family), engine)
        report.add(N, est.value, ref, est.value / ref, cN, eq21_lower_bound(R, p), est.witness)
        remarks.append(remark17_check(p, N))
    report.metadata["remark17"] = [{"N": r.N, "lhs": r.lhs, "rhs": r.rhs} for r in remarks]
    report.metadata["ratio_spread"] = report.ratio_spread()
    report.metadata["finished"] = _now()
    return report


# --- inequalities behind the upper bound ---------------------------------------------


@dataclass
class Remark17:
    N: float
    lhs: float
    rhs: float

    @property
    def holds(self) -> bool:
        return self.lhs <= self.rhs + 1e-12


def remark17_check(p: ExponentField, N: float, domain: DomainSpec | None = None) -> Remark17:
    """``p_- C_N`` against ``1 - p_- / p_+`` (the first never exceeds the second)."""
    lo, hi = p_range(p, None, domain)
    return Remark17(float(N), lo * oscillation_constant(p, N, domain), 1.0 - lo / hi)


@dataclass
class Lemma31Report:
    N: float
    cN: float
    ratios: np.ndarray
    rectangles: list

    @property
    def worst(self) -> float:
        return float(self.ratios.max()) if self.ratios.size else 0.0

    @property
    def worst_rectangle(self) -> RectangleSpec | None:
        return self.rectangles[int(self.ratios.argmax())] if self.ratios.size else None

    def passes(self, slack: float = 1e-9) -> bool:
        return self.worst <= 1 + slack


def random_rectangles(
    domain: DomainSpec, N: float, n: int, seed: int = 0, min_length: float | None = None, max_length: float | None = None
) -> list[RectangleSpec]:
    """Rectangles with uniform centers in ``domain``, uniform angles and log-uniform lengths."""
    rng = np.random.default_rng(seed)
    x0, y0, x1, y1 = domain.bounds
    lo = 2 * domain.h if min_length is None else min_length
    hi = 2 * max(domain.extent) if max_length is None else max_length
    cx = rng.uniform(x0, x1, n)
    cy = rng.uniform(y0, y1, n)
    th = rng.uniform(0, math.pi, n)
    L = np.exp(rng.uniform(math.log(lo), math.log(hi), n))
    return [RectangleSpec((cx[i], cy[i]), th[i], L[i], N) for i in range(n)]


def lemma31_check(
    p: ExponentField,
    N: float,
    sample: list[RectangleSpec] | None = None,
    n_samples: int = 500,
    seed: int = 0,
    domain: DomainSpec | None = None,
) -> Lemma31Report:
    """Ratios ``|R|^(1/p_+(R) - 1/p_-(R)) / N^c_N`` over rectangles.

    ``p_+(R)`` and ``p_-(R)`` run over the analysis-grid cell centers inside
    ``R``, the same points ``c_N`` is computed from.  A rectangle holding
    no cell center has ``p_+ = p_-`` and ratio ``N^-c_N``.
    """
    dom = p._analysis_domain(domain)
    cN = n_modified_constant(p, N, dom)
    if sample is None:
        sample = random_rectangles(dom, N, n_samples, seed)
    X, Y = dom.centers()
    X, Y = X.ravel(), Y.ravel()
    inv = 1.0 / p.sample(dom).ravel()
    ratios = np.empty(len(sample))
    for i, R in enumerate(sample):
        inside = R.contains(X, Y)
        gap = float(inv[inside].max() - inv[inside].min()) if inside.any() else 0.0
        # |R|^(1/p_+ - 1/p_-) = |R|^(-gap)
        ratios[i] = math.exp(-gap * math.log(R.area) - cN * math.log(N))
    return Lemma31Report(float(N), cN, ratios, list(sample))


@dataclass
class Lemma32Result:
    """Integrals of both two-sided modular comparisons and the smallest constants that work."""

    lhs1: float
    rhs1_parts: tuple[float, float]
    lhs2: float
    rhs2_parts: tuple[float, float]

    @property
    def c1(self) -> float:
        return _smallest_constant(self.lhs1, sum(self.rhs1_parts))

    @property
    def c2(self) -> float:
        return _smallest_constant(self.lhs2, sum(self.rhs2_parts))


def _smallest_constant(lhs, rhs):
    if lhs == 0:
        return 0.0
    return lhs / rhs if rhs > 0 else math.inf


def lemma32_diagnostic(p: ExponentField, M: float, E, F: ScalarField2D) -> Lemma32Result:
    """Compare ``int_E F^p(y)`` with ``int_E F^p_inf`` up to the tail term ``int_E P^p_inf``.

    ``P(x) = (e + |x|)^-M``.  Returns the three integrals arranged as the
    two inequalities; :attr:`Lemma32Result.c1` and ``c2`` are the smallest
    constants making each hold for this input.
    """
    if not M >= 2:
        raise InputError(f"need M >= 2, got {M}")
    dom = F.domain
    X, Y = dom.centers()
    mask = np.asarray(E(X, Y), dtype=bool) if E is not None else np.ones(dom.shape, dtype=bool)
    vals = F.values[mask]
    if vals.size and (vals.min() < 0 or vals.max() > 1):
        raise InputError("F must take values in [0, 1] on E")
    pv = p.sample(dom)[mask]
    pinf = p.p_inf
    P = (math.e + np.hypot(X[mask], Y[mask])) ** (-float(M))
    area = dom.cell_area
    i_var = area * float(np.sum(vals**pv))
    i_inf = area * float(np.sum(vals**pinf))
    i_tail = area * float(np.sum(P**pinf))
    return Lemma32Result(i_var, (i_inf, i_tail), i_inf, (i_var, i_tail))


def diening_disjoint_cube_diagnostic(p: ExponentField, partition: list[Box], f: ScalarField2D) -> tuple[float, float]:
    """``(||sum_Q avg_Q |f| chi_Q||_p, ||f||_p)`` for pairwise disjoint cubes.

    Averages and membership use cell centers in ``[x0, x1) x [y0, y1)``.
    Cubes whose interiors overlap are rejected.
    """
    for i, a in enumerate(partition):
        if abs((a.x1 - a.x0) - (a.y1 - a.y0)) > 1e-12 * max(1.0, a.x1 - a.x0):
            raise GeometryError(f"region {i} is not a square")
        for j in range(i):
            b = partition[j]
            if min(a.x1, b.x1) > max(a.x0, b.x0) and min(a.y1, b.y1) > max(a.y0, b.y0):
                raise GeometryError(f"cubes {j} and {i} overlap")
    dom = f.domain
    X, Y = dom.centers()
    a = np.abs(f.values)
    out = np.zeros(dom.shape)
    for Q in partition:
        m = (X >= Q.x0) & (X < Q.x1) & (Y >= Q.y0) & (Y < Q.y1)
        if m.any():
            out[m] = a[m].mean()
    return luxemburg_norm(f.with_values(out), p), luxemburg_norm(f, p)


__all__ = [
    "LogLogFit",
    "StudyReport",
    "StudySetup",
    "Thm13Result",
    "NormEstimate",
    "Lemma31Report",
    "Lemma32Result",
    "Remark17",
    "loglog_fit",
    "thm13_predicted",
    "thm13_construction",
    "thm13_scaling_study",
    "eq21_lower_bound",
    "dual_witness",
    "witness_fields",
    "operator_norm_estimate",
    "eq11_constant_p_study",
    "thm15_bound_check",
    "remark17_check",
    "random_rectangles",
    "lemma31_check",
    "lemma32_diagnostic",
    "diening_disjoint_cube_diagnostic",
]
