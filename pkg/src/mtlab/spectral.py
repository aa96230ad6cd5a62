"""Spectral gap of rotational surfaces.

Separating variables u = v(t) e^{i m theta} turns -Laplace u = lambda u
into the Sturm-Liouville problem

    -(w v')' / w + m^2 v / w^2 = lambda v

in each Fourier sector m.  We discretize it with cell-centred finite
volumes on a uniform t grid: the stiffness matrix is tridiagonal with face
weights w(t_{i+1/2}) / dt and the mass is diagonal with the w-weighted cell
areas, so the pencil is symmetric and second-order accurate.  The pencil is
reduced to a symmetric tridiagonal matrix and handed to LAPACK's bisection
plus inverse iteration for the single requested eigenpair.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np
from scipy.linalg import LinAlgError, eigh_tridiagonal

from .errors import NoConvergence, ValidationError, WrongTopology
from .geom import Topology, Warp, WarpedSurface


class Boundary(enum.Enum):
    NEUMANN = "neumann"
    DIRICHLET = "dirichlet"

    @classmethod
    def parse(cls, value) -> "Boundary":
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).lower())
        except ValueError:
            raise ValidationError(f"boundary must be neumann or dirichlet, got {value!r}") from None


@dataclass(frozen=True)
class SectorEstimate:
    m: int
    eigenvalue: float
    t: np.ndarray = field(repr=False)
    vector: np.ndarray = field(repr=False)
    rayleigh: float = math.nan
    constant_overlap: float = 0.0


@dataclass(frozen=True)
class SpectralEstimate:
    lambda1: float
    n: int
    boundary: Boundary
    poincare_const: float
    sector: int
    by_sector: dict = field(default_factory=dict)
    truncation_sensitivity: Optional[float] = None

    @property
    def radial(self) -> SectorEstimate:
        return self.by_sector[0]


def _check_surface(surface: WarpedSurface):
    if surface.topology is Topology.CUSP and not surface.truncated:
        raise WrongTopology("an untruncated cusp has no discrete gap to compute")


def _assemble(surface: WarpedSurface, n: int, boundary: Boundary, m: int):
    a, b = surface.t_min, surface.t_max
    dt = (b - a) / n
    faces = a + dt * np.arange(n + 1)
    centres = 0.5 * (faces[1:] + faces[:-1])
    wf = surface.w(faces)
    wc = surface.w(centres)
    if surface.topology in (Topology.DISK, Topology.CLOSED_ROTATIONAL):
        wf[0] = 0.0
    if surface.topology is Topology.CLOSED_ROTATIONAL:
        wf[-1] = 0.0
    if np.any(wc <= 0) or not np.all(np.isfinite(wc)):
        raise ValidationError("warp must be positive and finite at cell centres")
    mass = (wf[:-1] + 4.0 * wc + wf[1:]) * dt / 6.0
    cond = wf / dt
    diag = np.zeros(n)
    diag[1:] += cond[1:-1]
    diag[:-1] += cond[1:-1]
    if boundary is Boundary.DIRICHLET:
        # the boundary face sits half a cell from the first centre
        diag[0] += 2.0 * cond[0]
        diag[-1] += 2.0 * cond[-1]
    if m:
        diag = diag + dt * m * m / wc
    off = -cond[1:-1]
    return centres, mass, diag, off


def _sector(surface: WarpedSurface, n: int, boundary: Boundary, m: int) -> SectorEstimate:
    t, mass, diag, off = _assemble(surface, n, boundary, m)
    s = 1.0 / np.sqrt(mass)
    d = diag * s * s
    e = off * s[:-1] * s[1:]
    index = 1 if (boundary is Boundary.NEUMANN and m == 0) else 0
    try:
        vals, vecs = eigh_tridiagonal(d, e, select="i", select_range=(index, index))
    except LinAlgError as exc:
        raise NoConvergence(f"tridiagonal eigensolver failed in sector {m}: {exc}", residual=math.nan) from exc
    lam = float(vals[0])
    v = vecs[:, 0] * s
    stiff = diag * v * v
    stiff[:-1] += off * v[:-1] * v[1:]
    stiff[1:] += off * v[:-1] * v[1:]
    rq = float(np.sum(stiff) / np.sum(mass * v * v))
    residual = abs(rq - lam) / max(abs(lam), 1.0)
    if not np.isfinite(lam) or residual > 1e-8:
        raise NoConvergence(f"Rayleigh quotient {rq:g} disagrees with eigenvalue {lam:g}", residual=residual)
    overlap = float(abs(np.sum(mass * v)) / (math.sqrt(np.sum(mass * v * v)) * math.sqrt(np.sum(mass))))
    return SectorEstimate(m=m, eigenvalue=lam, t=t, vector=v, rayleigh=rq, constant_overlap=overlap)


def radial_gap(
    surface: WarpedSurface,
    n: int = 2048,
    boundary="neumann",
    sectors=(0,),
    sensitivity: bool = False,
) -> SpectralEstimate:
    """Smallest nonzero eigenvalue (Neumann) or smallest eigenvalue (Dirichlet).

    ``sectors`` lists the Fourier modes m to solve; ``lambda1`` is the
    minimum over them and every sector's result is kept in ``by_sector``.
    With ``sensitivity`` and a truncated surface whose warp is analytic the
    gap is recomputed on an interval 1.5 times longer and the relative
    change is reported.
    """
    _check_surface(surface)
    bc = Boundary.parse(boundary)
    if int(n) < 64:
        raise ValidationError("n must be >= 64")
    n = int(n)
    sectors = tuple(sorted({int(m) for m in sectors}))
    if not sectors or sectors[0] < 0:
        raise ValidationError("sectors must be non-negative integers")
    by_sector = {m: _sector(surface, n, bc, m) for m in sectors}
    m_best = min(by_sector, key=lambda m: by_sector[m].eigenvalue)
    lam = by_sector[m_best].eigenvalue
    if not lam > 0:
        raise NoConvergence(f"non-positive gap {lam:g}", residual=abs(lam))
    sens = None
    if sensitivity and surface.truncated and isinstance(surface.warp, Warp):
        span = surface.t_max - surface.t_min
        longer = replace(surface, t_max=surface.t_min + 1.5 * span, segments=None)
        lam_long = min(_sector(longer, int(1.5 * n), bc, m).eigenvalue for m in sectors)
        sens = abs(lam_long - lam) / lam
    return SpectralEstimate(
        lambda1=lam,
        n=n,
        boundary=bc,
        poincare_const=1.0 / lam,
        sector=m_best,
        by_sector=by_sector,
        truncation_sensitivity=sens,
    )


@dataclass(frozen=True)
class CrossCheckReport:
    four_lambda: float
    cheeger_upper_sq: float
    buser_quantity: float
    certified: bool
    cheeger_holds: bool
    violation: bool
    h_true: Optional[float] = None
    holds_with_true_h: Optional[bool] = None


def cheeger_buser_report(
    surface: WarpedSurface,
    est: SpectralEstimate,
    cheeger_upper: float,
    curvature_lower: float,
    certified: bool = False,
    h_true: Optional[float] = None,
) -> CrossCheckReport:
    """Compare 4 lambda1 with h^2 and report lambda1 / (sqrt(-kappa) h + h^2).

    ``cheeger_upper`` from centered disks only bounds h from above, so a
    failure of 4 lambda1 >= h^2 is flagged as a violation only when the
    caller certifies the value as exact.  ``h_true`` (when known in closed
    form) gives the assertable comparison.
    """
    if not cheeger_upper > 0:
        raise ValidationError("cheeger_upper must be positive")
    four = 4.0 * est.lambda1
    hsq = cheeger_upper**2
    kappa = math.sqrt(max(-curvature_lower, 0.0))
    buser = est.lambda1 / (kappa * cheeger_upper + hsq)
    holds = four >= hsq
    true_ok = None if h_true is None else bool(four >= h_true**2 * (1 - 1e-12))
    return CrossCheckReport(
        four_lambda=four,
        cheeger_upper_sq=hsq,
        buser_quantity=buser,
        certified=bool(certified),
        cheeger_holds=holds,
        violation=bool(certified and not holds),
        h_true=h_true,
        holds_with_true_h=true_ok,
    )
