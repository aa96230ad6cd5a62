"""Isoperimetric comparison profiles.

The small-volume bound sqrt(t (4 pi - K t)) holds up to the volume threshold
v0 fixed by the systole; beyond it the comparison profile freezes at its
value there and then follows the Cheeger line h t.  Centered disks of a
rotational surface give measured (area, perimeter) pairs to compare against.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.optimize import brentq

from .errors import (
    CurvatureTooLarge,
    EpsTooLarge,
    NegativeRadicand,
    NonPositive,
    ValidationError,
    WrongTopology,
)
from .geom import Topology, WarpedSurface, _area_to

FOUR_PI = 4.0 * math.pi


class DegeneratePlateauWarning(UserWarning):
    """The plateau branch of the profile is empty; a two-branch profile is used."""


@dataclass(frozen=True)
class ProfileParams:
    delta: float
    h: float
    K: float
    v0: float


def make_params(delta: float, h: float, K: float) -> ProfileParams:
    if not delta > 0 or not h > 0:
        raise NonPositive(f"delta and h must be positive (got delta={delta}, h={h})")
    disc = 4 * math.pi**2 - K * delta**2
    if not disc > 0:
        raise CurvatureTooLarge(f"4 pi^2 - K delta^2 = {disc:g} <= 0")
    v0 = delta**2 / (2 * math.pi + math.sqrt(disc))
    return ProfileParams(delta=float(delta), h=float(h), K=float(K), v0=v0)


def small_volume_bound(t, K: float):
    """sqrt(t (4 pi - K t)), the perimeter of a model-space disk of area t."""
    t = np.asarray(t, dtype=float)
    rad = t * (FOUR_PI - K * t)
    if np.any(rad < 0):
        raise NegativeRadicand(f"t >= 4 pi / K for K={K}")
    out = np.sqrt(rad)
    return float(out) if out.ndim == 0 else out


def positive_curvature_clip(K: float) -> float:
    return FOUR_PI / (1.0 + K) if K > 0 else math.inf


@dataclass(frozen=True)
class PiecewiseProfile:
    """Three-branch comparison profile.

    ``eps`` is the end of the model-space branch, ``t2 = g(eps) / h`` the end of
    the plateau.  ``eps = inf`` gives the pure model-space profile; when
    ``t2 <= eps`` the plateau is empty and the linear branch starts at eps.
    """

    params: ProfileParams
    eps: float
    g_eps: float
    t2: float
    degenerate: bool = False

    @property
    def h(self) -> float:
        return self.params.h

    @property
    def K(self) -> float:
        return self.params.K

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        if math.isinf(self.eps):
            out = np.sqrt(np.maximum(t * (FOUR_PI - self.K * t), 0.0))
        else:
            small = np.sqrt(np.maximum(np.minimum(t, self.eps) * (FOUR_PI - self.K * np.minimum(t, self.eps)), 0.0))
            out = np.where(t <= self.eps, small, np.where(t <= self.t2, self.g_eps, self.h * t))
        return float(out) if out.ndim == 0 else out

    def branch(self, t: float) -> int:
        """0 model-space, 1 plateau, 2 linear."""
        if t <= self.eps:
            return 0
        return 1 if t <= self.t2 else 2

    @property
    def breakpoints(self) -> tuple:
        if math.isinf(self.eps):
            return ()
        if self.degenerate:
            return (self.eps,)
        return (self.eps, self.t2)


def build_g(params: ProfileParams, eps: Optional[float] = None, enforce_v0: bool = True) -> PiecewiseProfile:
    """Comparison profile with first breakpoint ``eps`` (defaults to v0).

    With ``enforce_v0`` the plateau level g(eps) is guaranteed not to exceed
    the systole; switching it off decouples eps from delta.
    """
    eps = params.v0 if eps is None else float(eps)
    if not eps > 0:
        raise NonPositive("eps must be positive")
    K, h = params.K, params.h
    if math.isinf(eps):
        if K > 0:
            raise EpsTooLarge("an unbounded first branch needs K <= 0")
        return PiecewiseProfile(params, math.inf, math.inf, math.inf)
    if enforce_v0 and eps > params.v0 * (1 + 1e-12):
        raise EpsTooLarge(f"eps={eps:g} exceeds v0={params.v0:g}")
    clip = positive_curvature_clip(K)
    if eps > clip:
        raise EpsTooLarge(f"eps={eps:g} beyond the positive-curvature clip 4 pi/(1+K)={clip:g}")
    g_eps = small_volume_bound(eps, K)
    t2 = g_eps / h
    if t2 <= eps:
        warnings.warn(
            f"plateau empty (g(eps)/h={t2:g} <= eps={eps:g}); using the two-branch profile",
            DegeneratePlateauWarning,
            stacklevel=2,
        )
        return PiecewiseProfile(params, eps, g_eps, eps, degenerate=True)
    return PiecewiseProfile(params, eps, g_eps, t2)


@dataclass(frozen=True)
class MeasuredProfile:
    surface: WarpedSurface
    areas: np.ndarray
    perimeters: np.ndarray
    cheeger_upper: float

    @property
    def samples(self):
        return list(zip(self.areas.tolist(), self.perimeters.tolist()))


def measure_profile(surface: WarpedSurface, n_samples: int = 256) -> MeasuredProfile:
    """(area, perimeter) of centered disks at ``n_samples`` radii.

    For finite volume the half-volume disk is appended so the Cheeger ratio
    over disks of at most half the volume reaches its infimum.
    """
    if surface.topology not in (Topology.DISK, Topology.CLOSED_ROTATIONAL):
        raise WrongTopology(f"centered disks need a disk or closed rotational surface, got {surface.topology.value}")
    if n_samples < 16:
        raise ValidationError("n_samples must be >= 16")
    a, b = surface.t_min, surface.t_max
    radii = a + (b - a) * np.arange(1, n_samples + 1) / n_samples
    if surface.topology is Topology.CLOSED_ROTATIONAL:
        radii = radii[:-1]
    finite = surface.finite_volume
    vol = surface.volume
    if finite:
        r_half = brentq(lambda r: _area_to(surface, r) - vol / 2, a + 1e-12 * (b - a), b, xtol=1e-14, rtol=1e-15)
        radii = np.unique(np.append(radii, r_half))
    areas = np.array([_area_to(surface, float(r)) for r in radii])
    perims = surface.theta_period * surface.w(radii)
    order = np.argsort(areas)
    areas, perims, radii = areas[order], perims[order], radii[order]
    keep = np.concatenate(([True], np.diff(areas) > 0))
    areas, perims = areas[keep], perims[keep]
    ratio = perims / areas
    if finite:
        ratio = ratio[2 * areas <= vol * (1 + 1e-12)]
    return MeasuredProfile(surface, areas, perims, float(ratio.min()))


@dataclass(frozen=True)
class DominanceReport:
    worst_margin: float
    worst_area: float
    dominated: bool
    tolerance: float


def profile_dominates(g: PiecewiseProfile, measured: MeasuredProfile, tolerance: float = 1e-8,
                      area_max: Optional[float] = None) -> DominanceReport:
    """Check perimeter >= g(area) on every measured sample.

    ``tolerance`` is relative to the perimeter scale; ``area_max`` restricts the
    check to samples of at most that area (e.g. half the volume).
    """
    areas, perims = measured.areas, measured.perimeters
    if area_max is not None:
        sel = areas <= area_max * (1 + 1e-12)
        areas, perims = areas[sel], perims[sel]
    margin = perims - g(areas)
    i = int(np.argmin(margin))
    tol = tolerance * max(1.0, float(np.max(np.abs(perims))))
    return DominanceReport(float(margin[i]), float(areas[i]), bool(margin[i] >= -tol), tol)
