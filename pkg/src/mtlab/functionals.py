"""The Moser-Trudinger functional, norms, and the inequality checks that
feed the median, Hardy and quadratic-shift steps of the MT argument.

Every check reports both sides of its inequality.  Where the eigenvalue
could enter as lambda1 or as its reciprocal, both readings are returned and
the one that follows from a proof is marked as the asserted one.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.optimize import minimize_scalar

from .errors import (
    ConstantFunction,
    ConstraintViolated,
    InfiniteVolume,
    NotMonotone,
    Overflow,
    PreconditionViolated,
    ValidationError,
)
from .geom import GridFunction, WarpedSurface, dirichlet_energy, integrate
from .rearrange import distribution
from .spectral import Boundary, SpectralEstimate

EXP_LIMIT = 700.0


@dataclass(frozen=True)
class MTReport:
    alpha: float
    value: float
    energy: float
    constraint_ok: bool


def mt_functional(surface: WarpedSurface, u: GridFunction, alpha: float = 4 * math.pi) -> MTReport:
    """int (exp(alpha u^2) - 1) with expm1, refusing exponents above 700."""
    if not alpha > 0:
        raise ValidationError("alpha must be positive")
    x = alpha * u.values**2
    if np.any(x > EXP_LIMIT):
        node = tuple(int(i) for i in np.argwhere(x > EXP_LIMIT)[0])
        safe = GridFunction(surface, np.where(x > EXP_LIMIT, 0.0, np.expm1(np.minimum(x, EXP_LIMIT))), u.radial)
        raise Overflow(
            f"alpha u^2 = {float(x.max()):g} exceeds {EXP_LIMIT:g} at node {node}",
            node=node,
            partial=integrate(surface, safe),
            context={"alpha": alpha},
        )
    value = integrate(surface, GridFunction(surface, np.expm1(x), u.radial))
    energy = dirichlet_energy(surface, u)
    return MTReport(alpha=float(alpha), value=value, energy=energy, constraint_ok=energy <= 1.0 + 1e-12)


def lp_norm(surface: WarpedSurface, u: GridFunction, p: float) -> float:
    if not p >= 1:
        raise ValidationError("p must be >= 1")
    total = integrate(surface, u, lambda v: np.abs(v) ** p)
    return total ** (1.0 / p)


def median_average(surface: WarpedSurface, u: GridFunction, n_levels: int = 513):
    """(median, average) of u; the median interpolates linearly between levels."""
    if not surface.finite_volume:
        raise InfiniteVolume("median and average need finite volume")
    try:
        dist = distribution(surface, u, n_levels)
    except ConstantFunction:
        c = float(u.values.flat[0])
        return c, c
    return dist.median, dist.average


@dataclass(frozen=True)
class MarkovReport:
    lhs: float
    rhs_lambda: float
    rhs_poincare: float
    holds_lambda: bool
    holds_poincare: bool
    median: float
    average: float
    gradient_norm: float


def markov_report(surface: WarpedSurface, u: GridFunction, est: SpectralEstimate, n_levels: int = 513) -> MarkovReport:
    """|m - avg| against sqrt(2 lambda1 / Vol) |grad u| and
    sqrt(2 / (lambda1 Vol)) |grad u|.

    The second form follows from Chebyshev, |m - avg|^2 <= 2 |u - avg|_2^2 / Vol,
    and the Poincare inequality |u - avg|_2^2 <= |grad u|_2^2 / lambda1, so it
    is the one expected to hold.
    """
    m, avg = median_average(surface, u, n_levels)
    vol = surface.volume
    grad = math.sqrt(max(dirichlet_energy(surface, u), 0.0))
    lhs = abs(m - avg)
    rhs_lambda = math.sqrt(2.0 * est.lambda1 / vol) * grad
    rhs_poinc = math.sqrt(2.0 * est.poincare_const / vol) * grad
    slack = 1e-12 * max(1.0, abs(avg))
    return MarkovReport(
        lhs=lhs,
        rhs_lambda=rhs_lambda,
        rhs_poincare=rhs_poinc,
        holds_lambda=lhs <= rhs_lambda + slack,
        holds_poincare=lhs <= rhs_poinc + slack,
        median=m,
        average=avg,
        gradient_norm=grad,
    )


@dataclass(frozen=True)
class HardyReport:
    energy: float
    bound_lambda: float
    bound_A2: float
    bound_poincare: float
    area: float
    integral: float
    certified: bool
    holds: bool


def hardy_report(
    disk_surface: WarpedSurface,
    v: GridFunction,
    m: float,
    est: SpectralEstimate,
    tol: float = 1e-8,
) -> HardyReport:
    """Energy of a radial nondecreasing v with v = m on the edge and
    int v <= -m A, against 4 lambda m^2 A and its variants.

    With phi = m - v (zero on the edge, int phi >= 2 m A),
    |grad v|^2 >= lambda_D |phi|_2^2 >= lambda_D (int phi)^2 / A >= 4 lambda_D m^2 A,
    where lambda_D is the Dirichlet eigenvalue of the disk.  The bound
    4 lambda m^2 A is therefore asserted (``certified``) only when ``est``
    is a Dirichlet estimate; the A^2 forms are informational.
    """
    if not v.radial:
        raise ValidationError("v must be radial")
    if not m > 0:
        raise PreconditionViolated("m must be positive")
    vals = v.values
    scale = max(1.0, float(np.max(np.abs(vals))))
    if np.any(np.diff(vals) < -tol * scale):
        raise NotMonotone("v must be nondecreasing in r")
    if abs(vals[-1] - m) > tol * max(1.0, m):
        raise PreconditionViolated(f"v at the edge is {vals[-1]:g}, not m={m:g}")
    A = disk_surface.volume
    total = integrate(disk_surface, v)
    if total > -m * A + tol * m * A:
        raise PreconditionViolated(f"int v = {total:g} > -m A = {-m * A:g}")
    E = dirichlet_energy(disk_surface, v)
    lam = est.lambda1
    b_lambda = 4.0 * lam * m * m * A
    certified = est.boundary is Boundary.DIRICHLET
    return HardyReport(
        energy=E,
        bound_lambda=b_lambda,
        bound_A2=4.0 * lam * m * m * A * A,
        bound_poincare=4.0 * m * m * A * A / est.poincare_const,
        area=A,
        integral=total,
        certified=certified,
        holds=E >= b_lambda * (1 - 1e-8),
    )


@dataclass(frozen=True)
class ShiftBound:
    min_value: float
    argmin: float
    search_min: float
    search_argmin: float
    c: float

    @property
    def agreement(self) -> float:
        return abs(self.search_min - self.min_value) / abs(self.min_value)


def quadratic_shift_bound(m: float, Lambda: float, A: float) -> ShiftBound:
    """min over u of (u - m)^2 / (1 - c) - u^2 with c = 4 Lambda m^2 A.

    The closed form is -1/(4 Lambda A) at u = m / c; a golden-section search
    on the same expression is returned next to it.
    """
    if not (Lambda > 0 and A > 0):
        raise ConstraintViolated("Lambda and A must be positive")
    c = 4.0 * Lambda * m * m * A
    if not 0.0 < c < 1.0:
        raise ConstraintViolated(f"c = 4 Lambda m^2 A = {c:g} must lie in (0, 1)")
    target = -1.0 / (4.0 * Lambda * A)
    u_star = m / c

    def expr(u):
        return (u - m) ** 2 / (1.0 - c) - u * u

    # bracket from the scale of m alone, so the search does not see u_star
    span = 1.0 + abs(m)
    res = minimize_scalar(expr, bracket=(-span, span), method="golden", options={"xtol": 1e-12})
    return ShiftBound(min_value=target, argmin=u_star, search_min=float(res.fun), search_argmin=float(res.x), c=c)


def shift_expression(u, m: float, c: float):
    return (np.asarray(u, dtype=float) - m) ** 2 / (1.0 - c) - np.asarray(u, dtype=float) ** 2
