"""Warped-product surfaces ``dt^2 + w(t)^2 dtheta^2`` and quadrature on them.

A :class:`WarpedSurface` carries its own sampling grid.  The ``t`` axis is a
chain of :class:`Segment` objects, each uniform in an auxiliary coordinate
``s`` (identity, logarithmic, or an arbitrary smooth map).  Integrals use
composite Simpson in ``s`` per segment and the periodic trapezoid rule in
``theta``; derivatives use fourth-order differences inside each segment, so
a kink of the integrand placed on a segment boundary costs no accuracy.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, replace
from functools import cached_property
from typing import Callable, Optional

import numpy as np
from scipy.optimize import brentq

from .errors import (
    DegenerateGrid,
    NearZeroWarp,
    NonFiniteIntegrand,
    OutOfDomain,
    ValidationError,
    WrongTopology,
)

TWO_PI = 2.0 * math.pi


class Topology(enum.Enum):
    DISK = "disk"
    CYLINDER = "cylinder"
    CUSP = "cusp"
    CLOSED_ROTATIONAL = "closed_rotational"


@dataclass(frozen=True)
class Warp:
    """Closed-form warp ``w(t) = amp * F(rate * (t - shift))``.

    ``kind`` selects F among ``linear`` (F(x) = x), ``const`` (F = 1),
    ``sinh``, ``cosh``, ``sin`` and ``exp``.
    """

    kind: str
    amp: float = 1.0
    rate: float = 1.0
    shift: float = 0.0

    _KINDS = ("linear", "const", "sinh", "cosh", "sin", "exp")

    def __post_init__(self):
        if self.kind not in self._KINDS:
            raise ValidationError(f"unknown warp kind {self.kind!r}")

    def __call__(self, t):
        x = self.rate * (np.asarray(t, dtype=float) - self.shift)
        if self.kind == "linear":
            return self.amp * x
        if self.kind == "const":
            return self.amp * np.ones_like(x)
        return self.amp * getattr(np, self.kind)(x)

    def derivative(self, t):
        x = self.rate * (np.asarray(t, dtype=float) - self.shift)
        c = self.amp * self.rate
        if self.kind == "linear":
            return c * np.ones_like(x)
        if self.kind == "const":
            return np.zeros_like(x)
        d = {"sinh": np.cosh, "cosh": np.sinh, "sin": np.cos, "exp": np.exp}[self.kind]
        return c * d(x)

    @property
    def curvature(self) -> float:
        if self.kind in ("linear", "const"):
            return 0.0
        if self.kind == "sin":
            return self.rate**2
        return -(self.rate**2)


def _even(n: int, minimum: int = 4) -> int:
    n = max(int(n), minimum)
    return n + (n % 2)


@dataclass(frozen=True)
class Segment:
    """One piece of the ``t`` axis, uniform in the auxiliary coordinate ``s``.

    ``linear``: t = s.  ``geometric``: t = origin + exp(s), which clusters
    nodes toward ``origin``.  ``mapped``: t = t_of_s(s) over ``s_range`` with
    Jacobian ``dt_ds``.  ``n`` is the number of intervals (forced even);
    0 means "let the surface distribute its n_t budget".
    """

    t0: float
    t1: float
    n: int = 0
    kind: str = "linear"
    origin: float = 0.0
    s_range: Optional[tuple] = None
    t_of_s: Optional[Callable] = None
    dt_ds: Optional[Callable] = None

    def __post_init__(self):
        if not self.t1 > self.t0:
            raise ValidationError(f"empty segment [{self.t0}, {self.t1}]")
        if self.kind == "geometric" and not self.t0 > self.origin:
            raise ValidationError("geometric segment must start strictly after its origin")
        if self.kind == "mapped" and (self.s_range is None or self.t_of_s is None or self.dt_ds is None):
            raise ValidationError("mapped segment needs s_range, t_of_s and dt_ds")

    @property
    def s_bounds(self):
        if self.kind == "linear":
            return self.t0, self.t1
        if self.kind == "geometric":
            return math.log(self.t0 - self.origin), math.log(self.t1 - self.origin)
        return tuple(self.s_range)

    def to_t(self, s):
        s = np.asarray(s, dtype=float)
        if self.kind == "linear":
            return s.copy()
        if self.kind == "geometric":
            return self.origin + np.exp(s)
        return np.asarray(self.t_of_s(s), dtype=float)

    def jac(self, s):
        s = np.asarray(s, dtype=float)
        if self.kind == "linear":
            return np.ones_like(s)
        if self.kind == "geometric":
            return np.exp(s)
        return np.asarray(self.dt_ds(s), dtype=float)

    def s_of_t(self, t: float) -> float:
        if self.kind == "linear":
            return float(t)
        if self.kind == "geometric":
            return math.log(t - self.origin)
        s0, s1 = self.s_bounds
        if t <= self.t0:
            return s0
        if t >= self.t1:
            return s1
        return brentq(lambda s: float(self.to_t(s)) - t, s0, s1, xtol=1e-15, rtol=1e-15)

    def clipped(self, t_hi: float) -> "Segment":
        """The part of this segment below ``t_hi`` with the same interval count."""
        if self.kind == "mapped":
            return replace(self, t1=t_hi, s_range=(self.s_bounds[0], self.s_of_t(t_hi)))
        return replace(self, t1=t_hi)

    def sample(self):
        """Return (t nodes, jacobian, local Simpson weights in t, ds)."""
        s0, s1 = self.s_bounds
        n = _even(self.n)
        s = np.linspace(s0, s1, n + 1)
        ds = (s1 - s0) / n
        t = self.to_t(s)
        t[0], t[-1] = self.t0, self.t1
        jac = self.jac(s)
        sw = np.full(n + 1, 2.0)
        sw[1::2] = 4.0
        sw[0] = sw[-1] = 1.0
        return t, jac, sw * ds / 3.0 * jac, ds


@dataclass
class _Grid:
    t: np.ndarray
    w: np.ndarray
    weights: np.ndarray  # Simpson weights in t (no w), summed over segments
    pieces: list  # (slice, local weights, jac, ds)
    theta: np.ndarray
    dtheta: float


@dataclass(frozen=True)
class WarpedSurface:
    """A rotationally symmetric surface with metric ``dt^2 + w(t)^2 dtheta^2``.

    Infinite ends are represented by a finite cutoff; ``truncated`` records
    that this happened and ``tail_bound`` the discarded volume.
    """

    warp: Callable
    t_min: float
    t_max: float
    topology: Topology
    theta_period: float = TWO_PI
    n_t: int = 2048
    n_theta: int = 256
    segments: Optional[tuple] = None
    truncated: bool = False
    tail_bound: float = 0.0
    label: str = ""
    meta: dict = field(default_factory=dict, compare=False, hash=False)

    def __post_init__(self):
        if not (math.isfinite(self.t_min) and math.isfinite(self.t_max) and self.t_max > self.t_min):
            raise ValidationError(f"bad t interval [{self.t_min}, {self.t_max}]")
        if self.segments is not None:
            segs = tuple(self.segments)
            if not math.isclose(segs[0].t0, self.t_min, abs_tol=1e-14) or not math.isclose(
                segs[-1].t1, self.t_max, abs_tol=1e-12, rel_tol=1e-12
            ):
                raise ValidationError("segments must span [t_min, t_max]")
            for a, b in zip(segs, segs[1:]):
                if not math.isclose(a.t1, b.t0, abs_tol=1e-14, rel_tol=1e-14):
                    raise ValidationError("segments must be contiguous")
        w_int = self.w(self.grid.t[1:-1])
        if np.any(~np.isfinite(w_int)) or np.any(w_int <= 0):
            raise ValidationError("warp must be positive on the open interval")
        if self.topology in (Topology.DISK, Topology.CLOSED_ROTATIONAL):
            self._check_cone(self.t_min, +1)
        if self.topology is Topology.CLOSED_ROTATIONAL:
            self._check_cone(self.t_max, -1)

    def _check_cone(self, t0, sign):
        scale = float(np.max(np.abs(self.grid.w))) or 1.0
        if abs(float(self.w(t0))) > 1e-10 * scale:
            raise ValidationError(f"warp must vanish at the cone point t={t0}")
        slope = sign * self.warp_derivative(t0)
        rtol = 1e-9 if self.tag else 1e-4
        if not math.isclose(slope * self.theta_period, TWO_PI, rel_tol=rtol):
            raise ValidationError("cone point is not smooth: w'(t0) * theta_period != 2 pi")

    # -- warp access -------------------------------------------------------
    @property
    def tag(self) -> Optional[str]:
        return self.warp.kind if isinstance(self.warp, Warp) else None

    def w(self, t):
        return np.asarray(self.warp(t), dtype=float)

    def warp_derivative(self, t: float) -> float:
        if isinstance(self.warp, Warp):
            return float(self.warp.derivative(t))
        hh = 1e-5 * (self.t_max - self.t_min)
        if t - 2 * hh < self.t_min:
            f = self.w(np.array([t, t + hh, t + 2 * hh]))
            return float((-3 * f[0] + 4 * f[1] - f[2]) / (2 * hh))
        if t + 2 * hh > self.t_max:
            f = self.w(np.array([t, t - hh, t - 2 * hh]))
            return float((3 * f[0] - 4 * f[1] + f[2]) / (2 * hh))
        f = self.w(np.array([t - hh, t + hh]))
        return float((f[1] - f[0]) / (2 * hh))

    # -- grid --------------------------------------------------------------
    def segment_list(self) -> tuple:
        if self.segments is None:
            return (Segment(self.t_min, self.t_max, _even(self.n_t)),)
        segs = tuple(self.segments)
        if all(s.n > 0 for s in segs):
            return segs
        lengths = np.array([abs(s.s_bounds[1] - s.s_bounds[0]) for s in segs])
        share = lengths / lengths.sum()
        return tuple(
            s if s.n > 0 else replace(s, n=_even(round(self.n_t * f), 8)) for s, f in zip(segs, share)
        )

    @cached_property
    def grid(self) -> _Grid:
        ts, pieces = [], []
        offset = 0
        for k, seg in enumerate(self.segment_list()):
            if _even(seg.n) < 4:
                raise DegenerateGrid("each segment needs at least 4 intervals")
            t, jac, sw, ds = seg.sample()
            sl = slice(offset, offset + len(t))
            pieces.append((sl, sw, jac, ds))
            ts.append(t if k == 0 else t[1:])
            offset += len(t) - 1
        wts = np.zeros(offset + 1)
        for sl, sw, _, _ in pieces:
            wts[sl] += sw
        t = np.concatenate(ts)
        n_theta = max(int(self.n_theta), 1)
        dtheta = self.theta_period / n_theta
        theta = np.arange(n_theta) * dtheta
        w = self.w(t)
        if self.topology in (Topology.DISK, Topology.CLOSED_ROTATIONAL):
            w[0] = 0.0
        if self.topology is Topology.CLOSED_ROTATIONAL:
            w[-1] = 0.0
        return _Grid(t=t, w=w, weights=wts, pieces=pieces, theta=theta, dtheta=dtheta)

    @property
    def t(self) -> np.ndarray:
        return self.grid.t

    @property
    def theta(self) -> np.ndarray:
        return self.grid.theta

    @cached_property
    def radial_weights(self) -> np.ndarray:
        """Area weight of each t node for a theta-independent integrand."""
        return self.grid.weights * self.grid.w * self.theta_period

    @cached_property
    def volume(self) -> float:
        return float(np.sum(self.radial_weights))

    @property
    def finite_volume(self) -> bool:
        """False when the grid is a finite window onto an infinite-area surface."""
        return not (self.truncated and math.isinf(self.tail_bound))

    def with_resolution(self, n_t=None, n_theta=None) -> "WarpedSurface":
        segs = self.segments
        if segs is not None and n_t is not None:
            factor = n_t / max(self.n_t, 1)
            segs = tuple(replace(s, n=_even(round(s.n * factor), 8)) if s.n else s for s in segs)
        return replace(
            self,
            n_t=self.n_t if n_t is None else n_t,
            n_theta=self.n_theta if n_theta is None else n_theta,
            segments=segs,
        )


@dataclass(frozen=True, eq=False)
class GridFunction:
    """Samples of a scalar function at the nodes of ``surface``.

    Radial functions store one value per t node; others an (n_t, n_theta) array.
    """

    surface: WarpedSurface
    values: np.ndarray
    radial: bool = True

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "values", v)
        nt = len(self.surface.t)
        expected = (nt,) if self.radial else (nt, len(self.surface.theta))
        if v.shape != expected:
            raise ValidationError(f"values shape {v.shape} does not match grid {expected}")
        if not np.all(np.isfinite(v)):
            raise ValidationError("grid function has non-finite values")

    @classmethod
    def from_function(cls, surface: WarpedSurface, fn, radial: bool = True) -> "GridFunction":
        if radial:
            return cls(surface, fn(surface.t), True)
        T, TH = np.meshgrid(surface.t, surface.theta, indexing="ij")
        return cls(surface, fn(T, TH), False)

    def full(self) -> np.ndarray:
        if not self.radial:
            return self.values
        return np.repeat(self.values[:, None], len(self.surface.theta), axis=1)

    def map(self, fn) -> "GridFunction":
        return GridFunction(self.surface, fn(self.values), self.radial)


# ---------------------------------------------------------------------------
# operations


def curvature_at(surface: WarpedSurface, t: float, floor: float = 1e-8) -> float:
    if not surface.t_min < t < surface.t_max:
        raise OutOfDomain(f"t={t} outside ({surface.t_min}, {surface.t_max})")
    wt = float(surface.w(t))
    if wt < floor:
        raise NearZeroWarp(f"w({t}) = {wt:g} below floor {floor:g}")
    if isinstance(surface.warp, Warp):
        return surface.warp.curvature
    hh = min(1e-3, (t - surface.t_min) / 2.5, (surface.t_max - t) / 2.5)
    f = surface.w(t + hh * np.arange(-2, 3))
    w2 = (-f[0] + 16 * f[1] - 30 * f[2] + 16 * f[3] - f[4]) / (12 * hh * hh)
    return float(-w2 / wt)


def _require_disk(surface):
    if surface.topology is not Topology.DISK:
        raise WrongTopology(f"expected a disk, got {surface.topology.value}")


def _area_to(surface: WarpedSurface, r: float) -> float:
    """Area of {t_min <= t <= r}, Simpson per segment."""
    if not surface.t_min <= r <= surface.t_max * (1 + 1e-12):
        raise OutOfDomain(f"r={r} outside [{surface.t_min}, {surface.t_max}]")
    total = 0.0
    for seg in surface.segment_list():
        if seg.t0 >= r:
            break
        piece = seg if seg.t1 <= r else seg.clipped(r)
        t, _, sw, _ = piece.sample()
        total += float(np.dot(sw, surface.w(t)))
    return surface.theta_period * total


def disk_area(surface: WarpedSurface, r: float) -> float:
    _require_disk(surface)
    return _area_to(surface, r)


def disk_perimeter(surface: WarpedSurface, r: float) -> float:
    _require_disk(surface)
    if not surface.t_min < r <= surface.t_max * (1 + 1e-12):
        raise OutOfDomain(f"r={r} outside ({surface.t_min}, {surface.t_max}]")
    return surface.theta_period * float(surface.w(r))


def integrate(surface: WarpedSurface, u: GridFunction, F=None) -> float:
    """Quadrature of ``F(u)`` over the surface (``F`` defaults to identity)."""
    with np.errstate(over="ignore", invalid="ignore"):
        vals = u.values if F is None else np.asarray(F(u.values), dtype=float)
    bad = ~np.isfinite(vals)
    if bad.any():
        node = tuple(int(i) for i in np.argwhere(bad)[0])
        raise NonFiniteIntegrand(f"integrand not finite at node {node}", node=node)
    g = surface.grid
    if u.radial:
        return float(np.dot(surface.radial_weights, vals))
    row = vals.sum(axis=1) * g.dtheta
    return float(np.dot(g.weights * g.w, row))


def _d_ds(v: np.ndarray, ds: float) -> np.ndarray:
    """Fourth-order first derivative along axis 0 of a uniform sample."""
    if v.shape[0] < 5:
        raise DegenerateGrid("need at least 5 nodes for the derivative stencil")
    d = np.empty_like(v)
    d[2:-2] = (-v[4:] + 8 * v[3:-1] - 8 * v[1:-3] + v[:-4]) / 12.0
    d[0] = (-25 * v[0] + 48 * v[1] - 36 * v[2] + 16 * v[3] - 3 * v[4]) / 12.0
    d[1] = (-3 * v[0] - 10 * v[1] + 18 * v[2] - 6 * v[3] + v[4]) / 12.0
    d[-1] = (25 * v[-1] - 48 * v[-2] + 36 * v[-3] - 16 * v[-4] + 3 * v[-5]) / 12.0
    d[-2] = (3 * v[-1] + 10 * v[-2] - 18 * v[-3] + 6 * v[-4] - v[-5]) / 12.0
    return d / ds


def _d_dtheta(v: np.ndarray, dtheta: float) -> np.ndarray:
    return (
        -np.roll(v, -2, axis=1) + 8 * np.roll(v, -1, axis=1) - 8 * np.roll(v, 1, axis=1) + np.roll(v, 2, axis=1)
    ) / (12.0 * dtheta)


def t_derivative(surface: WarpedSurface, u: GridFunction):
    """Per-segment d/dt of ``u`` as a list of (slice, local weights, derivative)."""
    out = []
    for sl, sw, jac, ds in surface.grid.pieces:
        du = _d_ds(u.values[sl], ds)
        du = du / (jac if u.radial else jac[:, None])
        out.append((sl, sw, du))
    return out


def dirichlet_energy(surface: WarpedSurface, u: GridFunction) -> float:
    """``int |grad u|^2`` with per-segment fourth-order differences."""
    if len(surface.t) < 3:
        raise DegenerateGrid("n_t < 3")
    g = surface.grid
    total = 0.0
    if u.radial:
        for sl, sw, du in t_derivative(surface, u):
            total += float(np.dot(sw * g.w[sl], du * du))
        return surface.theta_period * total
    if len(g.theta) < 5:
        raise DegenerateGrid("n_theta < 5 for a non-radial function")
    for sl, sw, du in t_derivative(surface, u):
        total += float(np.dot(sw * g.w[sl], (du * du).sum(axis=1)))
    dth = _d_dtheta(u.values, g.dtheta)
    inv_w = np.zeros_like(g.w)
    pos = g.w > 0
    inv_w[pos] = 1.0 / g.w[pos]
    total += float(np.dot(g.weights * inv_w, (dth * dth).sum(axis=1)))
    return total * g.dtheta


# ---------------------------------------------------------------------------
# standard surfaces


def euclidean_disk(R: float = 1.0, **kw) -> WarpedSurface:
    return WarpedSurface(Warp("linear"), 0.0, R, Topology.DISK, label=f"euclidean_disk(R={R:g})", **kw)


def hyperbolic_disk(R: float, K: float = -1.0, truncated: bool = True, **kw) -> WarpedSurface:
    """Geodesic disk of radius R in the plane of constant curvature K < 0.

    ``truncated`` marks it as a stand-in for the whole (infinite-area) plane.
    """
    if K >= 0:
        raise ValidationError("hyperbolic_disk needs K < 0")
    c = math.sqrt(-K)
    tail = math.inf if truncated else 0.0
    return WarpedSurface(
        Warp("sinh", amp=1.0 / c, rate=c), 0.0, R, Topology.DISK, truncated=truncated,
        tail_bound=tail, label=f"hyperbolic_disk(R={R:g},K={K:g})", **kw,
    )


def round_sphere(radius: float = 1.0, **kw) -> WarpedSurface:
    return WarpedSurface(
        Warp("sin", amp=radius, rate=1.0 / radius), 0.0, math.pi * radius, Topology.CLOSED_ROTATIONAL,
        label=f"round_sphere(radius={radius:g})", **kw,
    )


def flat_cylinder(t0: float, t1: float, w: float = 1.0, theta_period: float = TWO_PI, **kw) -> WarpedSurface:
    return WarpedSurface(
        Warp("const", amp=w), t0, t1, Topology.CYLINDER, theta_period=theta_period,
        label=f"flat_cylinder([{t0:g},{t1:g}],w={w:g},period={theta_period:g})", **kw,
    )


def cusp_surface(t_top: float, tail_tol: float = 1e-12, **kw) -> WarpedSurface:
    """The cusp ``dt^2 + e^{2t} dtheta^2`` for t <= t_top.

    The end at -infinity is cut where the discarded volume is ``tail_tol``
    times the volume kept.
    """
    t_min = t_top + math.log(tail_tol)
    tail = TWO_PI * math.exp(t_min)
    return WarpedSurface(
        Warp("exp"), t_min, t_top, Topology.CUSP, truncated=True, tail_bound=tail,
        label=f"cusp(t<={t_top:g})", **kw,
    )


def collar_surface(eps: float, half_width: float, breaks=(), **kw) -> WarpedSurface:
    """The collar ``dt^2 + eps^2 cosh(t)^2 dtheta^2`` on |t| <= half_width."""
    edges = [-half_width, *sorted(breaks), half_width]
    segs = tuple(Segment(a, b) for a, b in zip(edges, edges[1:])) if breaks else None
    return WarpedSurface(
        Warp("cosh", amp=eps), -half_width, half_width, Topology.CYLINDER, segments=segs,
        label=f"collar(eps={eps:g})", **kw,
    )
