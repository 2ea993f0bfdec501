"""The modular and the Luxemburg norm of variable Lebesgue spaces.

For a cell field ``f`` and exponent ``p`` sampled at cell centers::

    rho(f / lam) = h^2 * sum_cells (|f| / lam) ** p
    ||f||        = inf { lam > 0 : rho(f / lam) <= 1 }

The norm is found by bisection on ``lam``; ``rho(f / lam)`` is strictly
decreasing in ``lam`` wherever ``f`` is nonzero.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.optimize import bisect
from scipy.special import logsumexp

from .errors import InputError, NumericalError
from .exponent import ExponentField, conjugate
from .field import ScalarField2D, integrate, RectangleSpec, DomainSpec, indicator

DEFAULT_TOL = 1e-10
DEFAULT_MAX_ITER = 200


class BoundaryWarning(UserWarning):
    """A field is nonzero on its window's outermost ring, so it may be truncated."""


@dataclass(frozen=True)
class ModularValue:
    value: float
    finite: bool = True


def modular(f: ScalarField2D, p: ExponentField, lam: float = 1.0) -> ModularValue:
    """``rho_p(f / lam)`` under the piecewise-constant cell semantics."""
    if not lam > 0:
        raise InputError(f"lambda must be positive, got {lam}")
    a = np.abs(f.values)
    nz = a > 0
    if not nz.any():
        return ModularValue(0.0)
    pv = p.sample(f.domain)[nz]
    with np.errstate(over="ignore"):
        value = f.domain.cell_area * float(np.sum((a[nz] / lam) ** pv))
    return ModularValue(value, math.isfinite(value))


class _Modular:
    """``log rho(lam)`` for fixed samples, evaluated stably in log space."""

    def __init__(self, absvals, pvals, cell_area):
        absvals = np.ravel(absvals)
        pvals = np.ravel(pvals)
        nz = absvals > 0
        self.logs = np.log(absvals[nz])
        self.p = pvals[nz]
        self.weights = float(cell_area)
        self.empty = not nz.any()

    def log_rho(self, lam):
        return float(logsumexp(self.p * (self.logs - math.log(lam)), b=self.weights))

    @property
    def p_range(self):
        return float(self.p.min()), float(self.p.max())


def luxemburg_from_samples(absvals, pvals, cell_area, tol=DEFAULT_TOL, max_iter=DEFAULT_MAX_ITER) -> float:
    """Luxemburg norm of a cell function given its absolute values and exponents."""
    if not tol > 0:
        raise InputError(f"tol must be positive, got {tol}")
    if not np.all(np.isfinite(absvals)):
        raise InputError("field values must be finite")
    mod = _Modular(absvals, pvals, cell_area)
    if mod.empty:
        return 0.0
    g = mod.log_rho
    # rho(f) bounds the norm: rho1**(1/p) over p in [p_-, p_+] brackets it.
    log_rho1 = g(1.0)
    p_lo, p_hi = mod.p_range
    ends = [log_rho1 / p_lo, log_rho1 / p_hi]
    lo = math.exp(min(ends)) * 0.5
    hi = math.exp(max(ends)) * 2.0
    for _ in range(max_iter):
        if g(lo) >= 0:
            break
        lo *= 0.5
    else:
        raise NumericalError("could not bracket the norm from below")
    for _ in range(max_iter):
        if g(hi) <= 0:
            break
        hi *= 2.0
    else:
        raise NumericalError("could not bracket the norm from above")
    try:
        lam = float(bisect(g, lo, hi, xtol=1e-300, rtol=tol, maxiter=max_iter))
    except RuntimeError as exc:
        raise NumericalError(f"bisection failed: {exc}") from exc
    # the root lies within tol * lam; step to its feasible side so rho(f / lam) <= 1
    return lam * (1 + tol) if g(lam) > 0 else lam


def luxemburg_norm(
    f: ScalarField2D,
    p: ExponentField,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
    boundary: str = "ignore",
) -> float:
    """``||f||_{p(.)}`` to relative bracket width ``tol``.

    ``boundary`` controls fields that are nonzero on the window's outer ring:
    ``"ignore"``, ``"warn"`` (emit :class:`BoundaryWarning`) or ``"raise"``.
    """
    if boundary != "ignore" and f.touches_boundary():
        msg = "field is nonzero on the window boundary ring; values outside the window are taken as 0"
        if boundary == "raise":
            raise InputError(msg)
        warnings.warn(msg, BoundaryWarning, stacklevel=2)
    return luxemburg_from_samples(np.abs(f.values), p.sample(f.domain), f.domain.cell_area, tol, max_iter)


def holder_check(f: ScalarField2D, g: ScalarField2D, p: ExponentField, tol: float = DEFAULT_TOL):
    """``(int |f g|, 2 ||f||_p ||g||_p')``; the first never exceeds the second."""
    if f.domain != g.domain:
        raise InputError("fields live on different domains")
    lhs = integrate(f.with_values(np.abs(f.values * g.values)))
    if not np.any(g.values):
        return lhs, 0.0
    q = conjugate(p)
    return lhs, 2.0 * luxemburg_norm(f, p, tol) * luxemburg_norm(g, q, tol)


@dataclass
class NormProduct:
    value: float
    norm_p: float
    norm_conj: float
    area: float


def rectangle_lattice(R: RectangleSpec, cells_across: int = 8):
    """Cell centers of a grid aligned with ``R`` that tiles it exactly.

    Returns the center coordinates and the common cell area.
    """
    nv = int(cells_across)
    nu = max(1, math.ceil(R.length / (R.width / nv) - 1e-9))
    u = (np.arange(nu) + 0.5) * (R.length / nu) - R.length / 2
    v = (np.arange(nv) + 0.5) * (R.width / nv) - R.width / 2
    e, n = R.axes
    U, V = np.meshgrid(u, v, indexing="ij")
    X = R.center[0] + U * e[0] + V * n[0]
    Y = R.center[1] + U * e[1] + V * n[1]
    return X, Y, R.area / (nu * nv)


def norm_product_over_measure(
    R: RectangleSpec,
    p: ExponentField,
    tol: float = DEFAULT_TOL,
    cells_across: int = 8,
    domain: DomainSpec | None = None,
    detail: bool = False,
):
    """``|R|^-1 ||chi_R||_p' ||chi_R||_p``, at least 1/2 by Hölder.

    By default the indicator lives on a lattice aligned with ``R``
    (``cells_across`` cells over the short side) so that ``|R|`` is exact.
    With ``domain`` it is the cell-center indicator on that grid and the
    area is its quadrature.
    """
    q = conjugate(p)
    if domain is None:
        X, Y, cell = rectangle_lattice(R, cells_across)
        ones = np.ones(X.shape)
        area = cell * X.size
        norm_p = luxemburg_from_samples(ones, p(X, Y), cell, tol)
        norm_q = luxemburg_from_samples(ones, q(X, Y), cell, tol)
    else:
        chi = indicator(R.contains, domain)
        area = integrate(chi)
        if area == 0:
            raise InputError("rectangle contains no cell centers of the domain")
        norm_p = luxemburg_norm(chi, p, tol)
        norm_q = luxemburg_norm(chi, q, tol)
    res = NormProduct(norm_p * norm_q / area, norm_p, norm_q, area)
    return res if detail else res.value
