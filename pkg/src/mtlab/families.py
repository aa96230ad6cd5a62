"""Explicit test-function families: the cusp functions (e^t - e^b) on t <= b,
the collar bumps cosh t - cosh R0 with R0 = eps^(1/10), and the Moser
sequence on the unit disk.  Scans over members run in a thread pool sized
by MTLAB_THREADS and always return rows in input order.
"""
from __future__ import annotations

import enum
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import quad

from .errors import InsufficientRange, Overflow, ValidationError
from .functionals import lp_norm, mt_functional
from .geom import (
    GridFunction,
    Segment,
    Topology,
    Warp,
    WarpedSurface,
    collar_surface,
    cusp_surface,
    dirichlet_energy,
    integrate,
)

TWO_PI = 2.0 * math.pi


class FamilyKind(enum.Enum):
    CUSP = "cusp"
    COLLAR = "collar"
    MOSER = "moser"


def collar_width(eps: float) -> float:
    """Half-width of the embedded collar around a geodesic of length 2 pi eps."""
    return math.asinh(1.0 / math.sinh(math.pi * eps))


@dataclass(frozen=True)
class FamilySpec:
    kind: FamilyKind
    params: tuple
    grid: dict = field(default_factory=dict)

    def __post_init__(self):
        kind = FamilyKind(self.kind) if not isinstance(self.kind, FamilyKind) else self.kind
        object.__setattr__(self, "kind", kind)
        vals = tuple(float(p) for p in self.params)
        object.__setattr__(self, "params", vals)
        if not vals:
            raise ValidationError("parameter range is empty")
        if kind is FamilyKind.COLLAR:
            if list(vals) != sorted(vals, reverse=True):
                raise ValidationError("collar eps values must be sorted decreasing")
            for eps in vals:
                if not 0 < eps < 1:
                    raise ValidationError(f"collar eps={eps:g} must lie in (0, 1)")
                R0 = eps**0.1
                if 1.5 * R0 >= collar_width(eps):
                    raise ValidationError(f"eps={eps:g}: R0 + pad exceeds the collar half-width")
        else:
            if list(vals) != sorted(vals):
                raise ValidationError("parameters must be sorted increasing")
            if kind is FamilyKind.MOSER and vals[0] < math.e * (1 - 1e-12):
                raise ValidationError("Moser k must be >= e")


def _threads() -> int:
    raw = os.environ.get("MTLAB_THREADS", "1")
    try:
        n = int(raw)
    except ValueError:
        raise ValidationError(f"MTLAB_THREADS must be an integer, got {raw!r}") from None
    if n < 1:
        raise ValidationError("MTLAB_THREADS must be >= 1")
    return n


def ordered_map(fn, items):
    """map() over a thread pool of MTLAB_THREADS workers, results in input order."""
    items = list(items)
    n = min(_threads(), max(len(items), 1))
    if n == 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=n) as pool:
        return list(pool.map(fn, items))


# ---------------------------------------------------------------------------
# cusp


@dataclass(frozen=True, eq=False)
class CuspMember:
    b: float
    surface: WarpedSurface
    u: GridFunction
    closed_forms: dict

    def measured(self) -> dict:
        return {
            "e2": dirichlet_energy(self.surface, self.u),
            "l2": lp_norm(self.surface, self.u, 2) ** 2,
            "l4": lp_norm(self.surface, self.u, 4) ** 4,
        }


def cusp_member(b: float, n_t: int = 2048, tail_tol: float = 1e-12) -> CuspMember:
    """f_b = e^t - e^b on the cusp w = e^t, t <= b.

    The end is cut where the discarded area is ``tail_tol`` times the kept
    area; every integrand here is bounded by a multiple of e^t, so the
    truncation error of all three norms is of that relative size.
    """
    surf = cusp_surface(b, tail_tol=tail_tol, n_t=n_t, n_theta=8)
    eb = math.exp(b)
    u = GridFunction.from_function(surf, lambda t: np.exp(t) - eb)
    forms = {
        "e2": TWO_PI / 3 * math.exp(3 * b),
        "l2": TWO_PI / 3 * math.exp(3 * b),
        "l4": TWO_PI / 5 * math.exp(5 * b),
    }
    return CuspMember(b, surf, u, forms)


def cusp_ratio(b: float) -> float:
    """|f_b|_4^4 / |grad f_b|_2^4 = (9 / (10 pi)) e^{-b}."""
    return 9.0 / (10.0 * math.pi) * math.exp(-b)


# ---------------------------------------------------------------------------
# collar


@dataclass(frozen=True, eq=False)
class CollarMember:
    eps: float
    R0: float
    surface: WarpedSurface
    u: GridFunction
    report: dict


def collar_member(eps: float, R0: float = None, pad: float = None, n_t: int = 4096) -> CollarMember:
    """g = cosh t - cosh R0 on |t| < R0, zero elsewhere, on the collar
    w = eps cosh t over |t| <= R0 + pad.

    ``report`` holds quadrature values, their closed forms, and the literal
    expressions quoted for this construction (energy (2/3) eps cosh R0, and
    so on), which leave out the 2 pi of the theta integral; those are for
    comparison only.
    """
    if not eps > 0:
        raise ValidationError("eps must be positive")
    R0 = eps**0.1 if R0 is None else float(R0)
    if not R0 > 0:
        raise ValidationError("R0 must be positive")
    pad = 0.5 * R0 if pad is None else float(pad)
    half = R0 + pad
    # the kink of g at +-R0 sits on segment boundaries
    inner = max(8, int(n_t * R0 / half) // 2 * 2)
    outer = max(8, (n_t - inner) // 4 * 2)
    segs = (
        Segment(-half, -R0, outer),
        Segment(-R0, R0, inner),
        Segment(R0, half, outer),
    )
    surf = WarpedSurface(
        Warp("cosh", amp=eps), -half, half, Topology.CYLINDER, n_t=n_t, n_theta=8,
        segments=segs, label=f"collar(eps={eps:g})",
    )
    cR = math.cosh(R0)
    u = GridFunction.from_function(surf, lambda t: np.where(np.abs(t) < R0, np.cosh(t) - cR, 0.0))
    vol = surf.volume
    energy = dirichlet_energy(surf, u)
    total = integrate(surf, u)
    avg = total / vol
    l2 = integrate(surf, u, lambda x: x * x)
    l4c = integrate(surf, u, lambda x: (x - avg) ** 4)
    sR = math.sinh(R0)
    report = {
        "energy": energy,
        "integral": total,
        "l2sq": l2,
        "l4c": l4c,
        "volume": vol,
        "ratio": l4c / energy**2,
        "energy_exact": TWO_PI * eps * (2.0 / 3.0) * sR**3,
        "integral_exact": TWO_PI * eps * (R0 - sR * cR),
        "energy_literal": (2.0 / 3.0) * eps * cR,
        "integral_literal": 2 * eps * (-math.sinh(2 * R0) / 4 + R0 / 2),
        "l2sq_literal": 2 * eps * (sR**3 / 3 + sR - R0 * cR),
        "l4c_literal": 16 * eps * R0**9 / 315,
        "ratio_literal": 4.0 / 35.0 * eps ** (-0.1),
    }
    return CollarMember(eps, R0, surf, u, report)


@dataclass(frozen=True)
class BlowupScan:
    eps: tuple
    ratio: tuple
    slope: float
    increasing: bool


def collar_blowup_scan(eps_list, n_t: int = 4096) -> BlowupScan:
    """|g - avg|_4^4 / |grad g|_2^4 over decreasing eps, and the least-squares
    slope of log ratio against log eps."""
    eps = [float(e) for e in eps_list]
    if len(eps) < 4:
        raise InsufficientRange("need at least 4 eps values")
    if eps != sorted(eps, reverse=True) or len(set(eps)) != len(eps):
        raise InsufficientRange("eps values must be strictly decreasing")
    if math.log10(eps[0] / eps[-1]) < 3 - 1e-12:
        raise InsufficientRange("eps values must span at least 3 decades")
    FamilySpec(FamilyKind.COLLAR, tuple(eps))
    members = ordered_map(lambda e: collar_member(e, n_t=n_t), eps)
    ratio = [m.report["ratio"] for m in members]
    slope = float(np.polyfit(np.log(eps), np.log(ratio), 1)[0])
    increasing = all(b > a for a, b in zip(ratio, ratio[1:]))
    return BlowupScan(tuple(eps), tuple(ratio), slope, increasing)


# ---------------------------------------------------------------------------
# Moser


@dataclass(frozen=True, eq=False)
class MoserMember:
    k: float
    surface: WarpedSurface
    u: GridFunction


def moser_member(k: float, n_t: int = 4096) -> MoserMember:
    """The Moser function on the unit disk: constant sqrt(log k / 2 pi) on
    rho <= 1/k and log(1/rho) / sqrt(2 pi log k) outside, so |grad u|_2 = 1.

    The outer piece is sampled uniformly in log rho.
    """
    if not k >= math.e * (1 - 1e-12):
        raise ValidationError("k must be >= e")
    rho0 = 1.0 / k
    L = math.log(k)
    n_in = max(16, n_t // 8 // 2 * 2)
    segs = (
        Segment(0.0, rho0, n_in),
        Segment(rho0, 1.0, max(16, (n_t - n_in) // 2 * 2), kind="geometric", origin=0.0),
    )
    surf = WarpedSurface(
        Warp("linear"), 0.0, 1.0, Topology.DISK, n_t=n_t, n_theta=8, segments=segs,
        label=f"unit_disk(moser k={k:g})",
    )
    top = math.sqrt(L / TWO_PI)
    norm = math.sqrt(TWO_PI * L)

    def fn(r):
        r = np.asarray(r, dtype=float)
        with np.errstate(divide="ignore"):
            return np.where(r <= rho0, top, -np.log(np.maximum(r, rho0)) / norm)

    return MoserMember(float(k), surf, GridFunction.from_function(surf, fn))


def moser_mt_exact(k: float, alpha: float) -> float:
    """Closed-form inner part plus 1D quadrature of the outer part of the MT
    value of the Moser function.

    Inner disk: pi k^{-2} (k^{alpha / 2 pi} - 1).  Outer annulus, with
    s = log(1/rho): 2 pi int_0^{log k} (exp(alpha s^2 / (2 pi log k)) - 1) e^{-2 s} ds.
    """
    L = math.log(k)
    inner = math.pi * math.exp(-2 * L) * math.expm1(alpha * L / TWO_PI)
    f = lambda s: math.expm1(alpha * s * s / (TWO_PI * L)) * math.exp(-2 * s)
    outer, _ = quad(f, 0.0, L, limit=400, epsabs=0, epsrel=1e-12)
    return inner + TWO_PI * outer


# ---------------------------------------------------------------------------
# scans


@dataclass(frozen=True)
class ScanRow:
    member: float
    alpha: float
    value: float
    energy: float


def _member(spec: FamilySpec, p: float):
    n_t = spec.grid.get("n_t")
    kw = {"n_t": int(n_t)} if n_t else {}
    if spec.kind is FamilyKind.CUSP:
        m = cusp_member(p, **kw)
        E = dirichlet_energy(m.surface, m.u)
        # normalize to unit energy, the MT constraint
        return m.surface, m.u.map(lambda v: v / math.sqrt(E))
    if spec.kind is FamilyKind.COLLAR:
        m = collar_member(p, **kw)
        E = m.report["energy"]
        return m.surface, m.u.map(lambda v: v / math.sqrt(E))
    m = moser_member(p, **kw)
    return m.surface, m.u


def mt_scan(spec: FamilySpec, alphas) -> list:
    """MT value of every (member, alpha) pair; rows follow the input order."""
    alphas = [float(a) for a in alphas]
    if not alphas:
        raise ValidationError("alphas is empty")
    jobs = [(p, a) for p in spec.params for a in alphas]

    def run(job):
        p, a = job
        surf, u = _member(spec, p)
        try:
            rep = mt_functional(surf, u, a)
        except Overflow as exc:
            exc.context = {**(exc.context or {}), "member": p, "alpha": a, "kind": spec.kind.value}
            raise
        return ScanRow(p, a, rep.value, rep.energy)

    return ordered_map(run, jobs)


def extrapolate_limit(k_values, values, terms: int = 3) -> float:
    """Least-squares fit of v(k) = c0 + c1 / log k + ... and return c0."""
    x = 1.0 / np.log(np.asarray(k_values, dtype=float))
    y = np.asarray(values, dtype=float)
    n = min(terms, len(y))
    V = np.vander(x, n, increasing=True)
    coef, *_ = np.linalg.lstsq(V, y, rcond=None)
    return float(coef[0])
