"""Distribution functions, co-area bounds and radial rearrangement.

A grid function is read as piecewise linear: along t in the segment
coordinate for radial functions, and on a split-cell triangulation of the
(t, theta) grid otherwise.  The distribution A(s) = area{u >= s} and the
level lengths l(s) are computed exactly for that model (with a constant
area density inside each triangle), so the decreasing rearrangement

    u*(a) = sup{s : A(s) >= a}

is a piecewise-linear function of the disk area a, which is how it is
stored.  On the comparison disk |grad u*|^2 da = (du*/da)^2 g(a)^2 da, and
g^2 is a polynomial on every branch, so the Dirichlet energy of u* is
integrated exactly.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .comparison import ComparisonDisk, as_warped_surface
from .errors import (
    ConstantFunction,
    DiskTooSmall,
    InfiniteVolume,
    MedianDegenerate,
    NoVariation,
    ValidationError,
)
from .geom import GridFunction, Topology, WarpedSurface, dirichlet_energy, integrate
from .profile import PiecewiseProfile, measure_profile, profile_dominates

_GL_X, _GL_W = np.polynomial.legendre.leggauss(8)


# ---------------------------------------------------------------------------
# the radial model: cells between consecutive t nodes, uniform in s


@dataclass(frozen=True, eq=False)
class _Cells:
    segments: tuple
    seg_id: np.ndarray
    s0: np.ndarray
    ds: np.ndarray
    area: np.ndarray  # int w dt over each cell (no theta factor)
    cum: np.ndarray  # cumulative area at the nodes, same units

    def _gl(self, cells, s_lo, s_hi):
        out = np.zeros(len(cells))
        for k in np.unique(self.seg_id[cells]):
            seg = self.segments[k]
            m = self.seg_id[cells] == k
            lo, hi = s_lo[m], s_hi[m]
            pts = 0.5 * (lo + hi)[:, None] + 0.5 * (hi - lo)[:, None] * _GL_X[None, :]
            f = self._density(seg, pts)
            out[m] = 0.5 * (hi - lo) * (f @ _GL_W)
        return out

    def _density(self, seg, s):
        return np.asarray(self.warp(seg.to_t(s)), dtype=float) * seg.jac(s)

    def partial(self, cells, s_end):
        """int w dt from the start of each cell to ``s_end``."""
        return self._gl(cells, self.s0[cells], s_end)

    def t_at(self, cells, s):
        out = np.empty(len(cells))
        for k in np.unique(self.seg_id[cells]):
            m = self.seg_id[cells] == k
            out[m] = self.segments[k].to_t(s[m])
        return out


def _cells(surface: WarpedSurface) -> _Cells:
    cached = surface.__dict__.get("_cells")
    if cached is None:
        cached = _build_cells(surface)
        object.__setattr__(surface, "_cells", cached)
    return cached


def _build_cells(surface: WarpedSurface) -> _Cells:
    segs = surface.segment_list()
    seg_id, s0, ds = [], [], []
    for k, seg in enumerate(segs):
        a, b = seg.s_bounds
        t, _, _, h = seg.sample()
        n = len(t) - 1
        seg_id.append(np.full(n, k))
        s0.append(a + h * np.arange(n))
        ds.append(np.full(n, h))
    cells = _Cells(segs, np.concatenate(seg_id), np.concatenate(s0), np.concatenate(ds), None, None)
    object.__setattr__(cells, "warp", surface.w)
    idx = np.arange(len(cells.s0))
    area = cells._gl(idx, cells.s0, cells.s0 + cells.ds)
    object.__setattr__(cells, "area", area)
    object.__setattr__(cells, "cum", np.concatenate(([0.0], np.cumsum(area))))
    return cells


def node_areas(surface: WarpedSurface) -> np.ndarray:
    """Area of {t <= t_i} at every grid node."""
    return surface.theta_period * _cells(surface).cum


# ---------------------------------------------------------------------------
# distribution


@dataclass(frozen=True)
class DistributionSummary:
    levels: np.ndarray
    A: np.ndarray
    l: np.ndarray
    volume: float
    median: float
    average: float
    A_gt: np.ndarray = field(repr=False, default=None)
    mid_levels: np.ndarray = field(repr=False, default=None)
    l_mid: np.ndarray = field(repr=False, default=None)
    knots: tuple = field(repr=False, default=None)
    finite_volume: bool = True
    plateau_at_median: float = 0.0

    def rearranged(self, a):
        """u*(a), the decreasing rearrangement as a function of area."""
        return _eval_knots(self.knots, a)


def _eval_knots(knots, a):
    x, y = knots
    a = np.asarray(a, dtype=float)
    idx = np.clip(np.searchsorted(x, a, side="left"), 1, len(x) - 1)
    x0, x1 = x[idx - 1], x[idx]
    y0, y1 = y[idx - 1], y[idx]
    gap = x1 - x0
    with np.errstate(invalid="ignore", divide="ignore"):
        lam = np.where(gap > 0, (a - x0) / np.where(gap > 0, gap, 1.0), 1.0)
    out = np.where(a <= x[0], y[0], np.where(a >= x[-1], y[-1], y0 + np.clip(lam, 0, 1) * (y1 - y0)))
    return float(out) if out.ndim == 0 else out


def _make_knots(levels, A_ge, A_gt):
    lv = levels[::-1]
    x = np.empty(2 * len(lv))
    x[0::2] = A_gt[::-1]
    x[1::2] = A_ge[::-1]
    y = np.repeat(lv, 2)
    return np.maximum.accumulate(x), y


def _radial_tables(surface, u, levels):
    c = _cells(surface)
    period = surface.theta_period
    u0, u1 = u[:-1], u[1:]
    A_ge = np.empty(len(levels))
    flat = np.zeros(len(levels))
    for k, lv in enumerate(levels):
        full = (u0 >= lv) & (u1 >= lv)
        total = c.area[full].sum()
        up = np.nonzero((u0 < lv) & (u1 >= lv) & ~full)[0]
        down = np.nonzero((u0 >= lv) & (u1 < lv))[0]
        if len(up):
            s_star = c.s0[up] + c.ds[up] * (lv - u0[up]) / (u1[up] - u0[up])
            total += (c.area[up] - c.partial(up, s_star)).sum()
        if len(down):
            s_star = c.s0[down] + c.ds[down] * (u0[down] - lv) / (u0[down] - u1[down])
            total += c.partial(down, s_star).sum()
        A_ge[k] = period * total
        flat[k] = period * c.area[(u0 == lv) & (u1 == lv)].sum()
    return A_ge, A_ge - flat


def _radial_lengths(surface, u, levels):
    c = _cells(surface)
    u0, u1 = u[:-1], u[1:]
    out = np.zeros(len(levels))
    for k, lv in enumerate(levels):
        cross = np.nonzero(((u0 < lv) & (u1 >= lv)) | ((u0 >= lv) & (u1 < lv)))[0]
        if len(cross):
            s_star = c.s0[cross] + c.ds[cross] * (lv - u0[cross]) / (u1[cross] - u0[cross])
            out[k] = surface.theta_period * surface.w(c.t_at(cross, s_star)).sum()
    return out


@dataclass(frozen=True, eq=False)
class _Triangles:
    u: np.ndarray  # (T, 3) sorted vertex values
    t: np.ndarray
    th: np.ndarray
    area: np.ndarray
    t_grid: np.ndarray
    w_grid: np.ndarray


def _triangles(surface: WarpedSurface, values: np.ndarray) -> _Triangles:
    g = surface.grid
    nt, nth = values.shape
    cell_area = _cells(surface).area * g.dtheta
    i = np.arange(nt - 1)[:, None]
    j = np.arange(nth)[None, :]
    jn = (j + 1) % nth
    I0 = np.broadcast_to(i, (nt - 1, nth)).ravel()
    J0 = np.broadcast_to(j, (nt - 1, nth)).ravel()
    J1 = np.broadcast_to(jn, (nt - 1, nth)).ravel()
    th0 = g.theta[J0]
    th1 = th0 + g.dtheta
    tri_i = np.concatenate([np.stack([I0, I0 + 1, I0 + 1], 1), np.stack([I0, I0 + 1, I0], 1)])
    tri_j = np.concatenate([np.stack([J0, J0, J1], 1), np.stack([J0, J1, J1], 1)])
    tri_th = np.concatenate([np.stack([th0, th0, th1], 1), np.stack([th0, th1, th1], 1)])
    U = values[tri_i, tri_j]
    order = np.argsort(U, axis=1, kind="stable")
    U = np.take_along_axis(U, order, 1)
    Tt = np.take_along_axis(g.t[tri_i], order, 1)
    TH = np.take_along_axis(tri_th, order, 1)
    half = 0.5 * np.broadcast_to(cell_area[:, None], (nt - 1, nth)).ravel()
    return _Triangles(U, Tt, TH, np.concatenate([half, half]), g.t, g.w)


def _level_pairs(lo, hi, levels, strict_top):
    """(triangle, level) pairs with lo < level <= hi (or < hi)."""
    k0 = np.searchsorted(levels, lo, side="right")
    k1 = np.searchsorted(levels, hi, side="left" if strict_top else "right")
    count = np.maximum(k1 - k0, 0)
    tri = np.repeat(np.arange(len(lo)), count)
    start = np.repeat(np.cumsum(count) - count, count)
    lev = np.repeat(k0, count) + (np.arange(count.sum()) - start)
    return tri, lev


def _tri_tables(tri: _Triangles, levels):
    a, b, c = tri.u[:, 0], tri.u[:, 1], tri.u[:, 2]
    order = np.argsort(a)
    cum = np.concatenate(([0.0], np.cumsum(tri.area[order][::-1])))
    n_ge = len(a) - np.searchsorted(a[order], levels, side="left")
    A = cum[n_ge].copy()
    T, K = _level_pairs(a, c, levels, strict_top=False)
    s = levels[K]
    aa, bb, cc = a[T], b[T], c[T]
    with np.errstate(invalid="ignore", divide="ignore"):
        lower = 1.0 - (s - aa) ** 2 / ((bb - aa) * (cc - aa))
        upper = (cc - s) ** 2 / ((cc - aa) * (cc - bb))
    frac = np.where(s <= bb, lower, upper)
    frac = np.where(np.isfinite(frac), frac, 0.0)
    A += np.bincount(K, weights=tri.area[T] * frac, minlength=len(levels))
    flat = a == c
    F = np.zeros(len(levels))
    if flat.any():
        pos = np.searchsorted(levels, a[flat])
        hit = (pos < len(levels)) & (levels[np.minimum(pos, len(levels) - 1)] == a[flat])
        F = np.bincount(pos[hit], weights=tri.area[flat][hit], minlength=len(levels))
    return A, A - F


def _tri_lengths(tri: _Triangles, levels):
    """Total metric length of {u = s} inside the triangles with a < s <= c.

    The half-open rule counts a contour that runs along a shared edge once,
    in the triangle lying below it.
    """
    a, c = tri.u[:, 0], tri.u[:, 2]
    T, K = _level_pairs(a, c, levels, strict_top=False)
    s = levels[K]
    U, Tt, TH = tri.u[T], tri.t[T], tri.th[T]
    al = (s - U[:, 0]) / (U[:, 2] - U[:, 0])
    Pt = Tt[:, 0] + al * (Tt[:, 2] - Tt[:, 0])
    Pth = TH[:, 0] + al * (TH[:, 2] - TH[:, 0])
    low = s <= U[:, 1]
    d_low = np.where(low, U[:, 1] - U[:, 0], 1.0)
    d_up = np.where(low, 1.0, U[:, 2] - U[:, 1])
    be = np.where(low, (s - U[:, 0]) / d_low, (s - U[:, 1]) / d_up)
    i0 = np.where(low, 0, 1)
    rows = np.arange(len(T))
    Q0t, Q1t = Tt[rows, i0], Tt[rows, i0 + 1]
    Q0th, Q1th = TH[rows, i0], TH[rows, i0 + 1]
    Qt = Q0t + be * (Q1t - Q0t)
    Qth = Q0th + be * (Q1th - Q0th)
    wm = np.interp(0.5 * (Pt + Qt), tri.t_grid, tri.w_grid)
    seg = np.sqrt((Pt - Qt) ** 2 + (wm * (Pth - Qth)) ** 2)
    return np.bincount(K, weights=seg, minlength=len(levels))


def distribution(surface: WarpedSurface, u: GridFunction, n_levels: int = 257) -> DistributionSummary:
    """A(s) = area{u >= s} and l(s) = length{u = s} on a uniform level grid."""
    if n_levels < 32:
        raise ValidationError("n_levels must be >= 32")
    if u.surface is not surface and u.values.shape[0] != len(surface.t):
        raise ValidationError("grid function does not live on this surface")
    vals = u.values
    lo, hi = float(vals.min()), float(vals.max())
    if hi - lo < 1e-14:
        raise ConstantFunction(f"max u - min u = {hi - lo:g}")
    levels = np.linspace(lo, hi, n_levels)
    levels[0], levels[-1] = lo, hi
    mid = 0.5 * (levels[1:] + levels[:-1])
    if u.radial:
        A, A_gt = _radial_tables(surface, vals, levels)
        l = _radial_lengths(surface, vals, levels)
        l_mid = _radial_lengths(surface, vals, mid)
        volume = float(node_areas(surface)[-1])
    else:
        tri = _triangles(surface, vals)
        A, A_gt = _tri_tables(tri, levels)
        l = _tri_lengths(tri, levels)
        l_mid = _tri_lengths(tri, mid)
        volume = float(tri.area.sum())
    A = np.minimum(A, volume)
    A[0] = volume
    A_gt = np.minimum(A_gt, A)
    if u.radial:
        # node values as extra knots make u* exact for monotone radial u
        fine = np.union1d(levels, vals)
        Af, Af_gt = _radial_tables(surface, vals, fine)
        Af = np.minimum(Af, volume)
        Af[0] = volume
        knots = _make_knots(fine, Af, np.minimum(Af_gt, Af))
    else:
        knots = _make_knots(levels, A, A_gt)
    median = _eval_knots(knots, 0.5 * volume)
    plateau = _plateau_mass(vals, surface, u.radial, median)
    average = integrate(surface, u) / surface.volume
    return DistributionSummary(
        levels=levels,
        A=A,
        l=l,
        volume=volume,
        median=float(median),
        average=float(average),
        A_gt=A_gt,
        mid_levels=mid,
        l_mid=l_mid,
        knots=knots,
        finite_volume=surface.finite_volume,
        plateau_at_median=plateau,
    )


def _plateau_mass(vals, surface, radial, m, rtol=1e-12):
    tol = rtol * max(1.0, abs(m))
    c = _cells(surface)
    if radial:
        flat = (np.abs(vals[:-1] - m) <= tol) & (np.abs(vals[1:] - m) <= tol)
        return float(surface.theta_period * c.area[flat].sum())
    on = np.abs(vals - m) <= tol
    quad = on[:-1] & on[1:] & np.roll(on[:-1], -1, 1) & np.roll(on[1:], -1, 1)
    return float((quad * c.area[:, None]).sum() * surface.grid.dtheta)


# ---------------------------------------------------------------------------
# co-area


def coarea_lower_bound(dist: DistributionSummary) -> float:
    """Discrete int l(s)^2 / (-A'(s)) ds, with l at the interval midpoints.

    Intervals on which A does not change (value gaps of u) carry no level
    sets of positive length and are skipped.
    """
    if len(dist.levels) < 3:
        raise ValidationError("need at least 3 levels")
    dA = -np.diff(dist.A)
    ds = np.diff(dist.levels)
    keep = dA > 0
    if not keep.any():
        raise NoVariation("A is constant on every level interval")
    return float(np.sum(dist.l_mid[keep] ** 2 * ds[keep] ** 2 / dA[keep]))


# ---------------------------------------------------------------------------
# rearrangement onto the comparison disk


def _g2_antiderivative(profile: PiecewiseProfile, a):
    """int_0^a g(x)^2 dx, exact on every branch."""
    a = np.asarray(a, dtype=float)
    eps, K = profile.eps, profile.K
    s0 = np.minimum(a, eps)
    out = 2.0 * math.pi * s0**2 - K * s0**3 / 3.0
    if math.isfinite(eps):
        t2, h = profile.t2, profile.h
        out = out + profile.g_eps**2 * (np.clip(a, eps, t2) - eps)
        top = np.maximum(a, t2)
        out = out + h * h * (top**3 - t2**3) / 3.0
    return out


def _energy_of_knots(profile: PiecewiseProfile, x, y) -> float:
    dx = np.diff(x)
    dy = np.diff(y)
    keep = dx > 0
    G = _g2_antiderivative(profile, x)
    slope2 = np.where(keep, dy**2 / np.where(keep, dx, 1.0) ** 2, 0.0)
    if np.any((~keep) & (dy != 0)):
        return math.inf
    return float(np.sum(slope2 * np.diff(G)))


def _restrict(knots, a0, a1):
    x, y = knots
    inside = (x > a0) & (x < a1)
    xs = np.concatenate(([a0], x[inside], [a1]))
    ys = np.concatenate(([_eval_knots(knots, a0)], y[inside], [_eval_knots(knots, a1)]))
    return xs, ys


def _disk_surface(disk: ComparisonDisk, area: float, n_t: int) -> WarpedSurface:
    top = float(disk.q[-1]) ** 2
    if top < area * (1 - 1e-12):
        raise DiskTooSmall(f"comparison disk area {top:g} < required {area:g}")
    return as_warped_surface(disk, area_max=min(area, top), n_t=n_t)


@dataclass(frozen=True, eq=False)
class RadialRearrangement:
    """A radial function on a comparison-disk surface, stored by area knots."""

    function: GridFunction
    knots: tuple
    disk: ComparisonDisk

    @property
    def surface(self) -> WarpedSurface:
        return self.function.surface

    @property
    def energy(self) -> float:
        return _energy_of_knots(self.disk.profile, *self.knots)

    def grid_energy(self) -> float:
        return dirichlet_energy(self.surface, self.function)


def rearrange_decreasing(dist: DistributionSummary, disk: ComparisonDisk, n_t: int = 2048) -> RadialRearrangement:
    """u*(r) = A^{-1}(2 pi f(r)) on the disk of area equal to ``dist.volume``.

    Works for any bounded u on a finite window; for a nonnegative u with
    infinite-area support pass the window that carries the support.
    """
    surf = _disk_surface(disk, dist.volume, n_t)
    a = node_areas(surf)
    vals = dist.rearranged(np.minimum(a, dist.volume))
    return RadialRearrangement(GridFunction(surf, vals, True), _restrict(dist.knots, 0.0, dist.volume), disk)


@dataclass(frozen=True, eq=False)
class TwoSidedRearrangement:
    u_minus: RadialRearrangement
    u_plus: RadialRearrangement
    median: float
    volume: float
    plateau_mass: float

    @property
    def energy_sum(self) -> float:
        return self.u_minus.energy + self.u_plus.energy


def rearrange_two_sided(
    surface: WarpedSurface,
    u: GridFunction,
    disk: ComparisonDisk,
    n_levels: int = 257,
    n_t: int = 2048,
) -> TwoSidedRearrangement:
    """Upper and lower radial rearrangements about the median, on the
    half-volume disk (area Vol / 2).

    u_plus(a) = u*(a) is nonincreasing and u_minus(a) = u*(Vol - a) is
    nondecreasing in the disk area a, so together they are equimeasurable
    with u.  A plateau of u at the median that is larger than a tenth of
    the volume raises MedianDegenerate; the error carries the result with
    the plateau assigned to u_plus.
    """
    if not surface.finite_volume:
        raise InfiniteVolume("two-sided rearrangement needs a finite-volume surface")
    vals = u.values
    vol = surface.volume
    if float(vals.max() - vals.min()) < 1e-14:
        c = float(vals.flat[0])
        surf = _disk_surface(disk, 0.5 * vol, n_t)
        knots = (np.array([0.0, 0.5 * vol]), np.array([c, c]))
        const = RadialRearrangement(GridFunction(surf, np.full(len(surf.t), c), True), knots, disk)
        return TwoSidedRearrangement(const, const, c, vol, vol)
    dist = distribution(surface, u, n_levels)
    V = dist.volume
    half = 0.5 * V
    surf = _disk_surface(disk, half, n_t)
    a = np.minimum(node_areas(surf), half)
    plus_knots = _restrict(dist.knots, 0.0, half)
    xm, ym = _restrict(dist.knots, half, V)
    minus_knots = ((V - xm)[::-1], ym[::-1])
    u_plus = RadialRearrangement(GridFunction(surf, dist.rearranged(a), True), plus_knots, disk)
    u_minus = RadialRearrangement(GridFunction(surf, dist.rearranged(V - a), True), minus_knots, disk)
    result = TwoSidedRearrangement(u_minus, u_plus, dist.median, V, dist.plateau_at_median)
    if dist.plateau_at_median > 0.1 * V:
        err = MedianDegenerate(
            f"plateau of area {dist.plateau_at_median:g} at the median exceeds 0.1 Vol"
        )
        err.result = result
        raise err
    return result


def _flat_at_edge(surface: WarpedSurface, u: GridFunction, rtol: float = 1e-9) -> bool:
    """True when u sits at its minimum all along the outer edge of a disk
    window.  Otherwise level sets end on the edge, their length inside the
    window can fall below g(area), and the energy comparison need not hold.
    """
    if surface.topology is Topology.CLOSED_ROTATIONAL:
        return True
    edge = u.values[-1]
    lo, hi = float(u.values.min()), float(u.values.max())
    return bool(np.all(np.abs(np.atleast_1d(edge) - lo) <= rtol * max(1.0, hi - lo)))


@dataclass(frozen=True)
class PolyaSzegoReport:
    E_original: float
    E_rearranged: float
    coarea_bound: float
    dominated: bool
    holds: bool
    E_rearranged_grid: float = math.nan
    tolerance: float = 1e-2


def polya_szego_report(
    surface: WarpedSurface,
    u: GridFunction,
    disk: ComparisonDisk,
    n_levels: int = 257,
    tolerance: float = 1e-2,
    dominated: Optional[bool] = None,
) -> PolyaSzegoReport:
    """Energies of u and of its rearrangement, and the co-area bound between
    them.  The chain E* <= coarea <= E holds when every level set of u is at
    least as long as g of its enclosed area; the centered-disk profile check
    is used as that certificate unless ``dominated`` is given.
    """
    E = dirichlet_energy(surface, u)
    dist = distribution(surface, u, n_levels)
    star = rearrange_decreasing(dist, disk, n_t=surface.n_t)
    cb = coarea_lower_bound(dist)
    if dominated is None:
        if surface.topology in (Topology.DISK, Topology.CLOSED_ROTATIONAL):
            dominated = profile_dominates(disk.profile, measure_profile(surface)).dominated
            dominated = dominated and _flat_at_edge(surface, u)
        else:
            dominated = False
    E_star = star.energy
    holds = E_star <= cb * (1 + tolerance) and cb <= E * (1 + tolerance)
    return PolyaSzegoReport(
        E_original=E,
        E_rearranged=E_star,
        coarea_bound=cb,
        dominated=bool(dominated),
        holds=bool(holds),
        E_rearranged_grid=star.grid_energy(),
        tolerance=tolerance,
    )
