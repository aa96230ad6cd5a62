"""The comparison disk: the radial metric dr^2 + f'(r)^2 dtheta^2 whose
centered disks have perimeter g(area), i.e. 2 pi f' = g(2 pi f).

The ODE is integrated for ``q = sqrt(2 pi f)`` (square root of the disk
area).  In that variable the right-hand side q' = g(q^2) / (2 q) is smooth
at the origin, so the solve starts at r = 0 without a seed, and every
branch of g has a closed-form right-hand side.  Breakpoints of g are volume
events q^2 = eps and q^2 = t2, located by root-finding on the RK4 step map
and followed by a restart.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Optional

import numpy as np
from scipy.interpolate import BPoly
from scipy.optimize import brentq

from .errors import DiskTooSmall, OutOfRegime, StepUnderflow, TruncationTooShort, ValidationError
from .geom import Segment, Topology, WarpedSurface
from .profile import PiecewiseProfile

TWO_PI = 2.0 * math.pi


def closed_form_f(K: float, r, eps: Optional[float] = None):
    """First-branch solution f(r) = area / (2 pi) of the curvature-K model disk."""
    r = np.asarray(r, dtype=float)
    if np.any(r < 0):
        raise ValidationError("r must be >= 0")
    if K < 0:
        c = math.sqrt(-K)
        out = (np.cosh(c * r) - 1.0) / (-K)
    elif K == 0:
        out = 0.5 * r * r
    else:
        c = math.sqrt(K)
        if np.any(r > math.pi / c * (1 + 1e-15)):
            raise OutOfRegime(f"r beyond the antipode pi/sqrt(K)={math.pi / c:g}")
        out = (1.0 - np.cos(c * r)) / K
    if eps is not None and np.any(TWO_PI * out > eps * (1 + 1e-12)):
        raise OutOfRegime("2 pi f(r) exceeds eps: r is past the first branch")
    return float(out) if out.ndim == 0 else out


def _branch_rhs(profile: PiecewiseProfile, branch: int):
    K, h, g_eps = profile.K, profile.h, profile.g_eps
    if branch == 0:
        return lambda q: 0.5 * np.sqrt(np.maximum(4 * math.pi - K * q * q, 0.0))
    if branch == 1:
        return lambda q: 0.5 * g_eps / q
    return lambda q: 0.5 * h * q


def _branch_rhs_slope(profile: PiecewiseProfile, branch: int):
    """dG/dq for the right-hand side of the same branch."""
    K, h, g_eps = profile.K, profile.h, profile.g_eps
    G0 = _branch_rhs(profile, 0)
    if branch == 0:
        return lambda q: -K * q / (4.0 * np.maximum(G0(q), 1e-300))
    if branch == 1:
        return lambda q: -0.5 * g_eps / (q * q)
    return lambda q: np.full_like(np.asarray(q, dtype=float), 0.5 * h)


def _rk4(G, q, dt):
    k1 = G(q)
    k2 = G(q + 0.5 * dt * k1)
    k3 = G(q + 0.5 * dt * k2)
    k4 = G(q + dt * k3)
    return q + dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)


@dataclass
class _Phase:
    branch: int
    r: np.ndarray
    q: np.ndarray
    qp: np.ndarray
    qpp: np.ndarray

    # quintic Hermite in both directions: q'' = G'(q) G(q) and
    # r''(q) = -G'(q) / G(q)^2 are known exactly on every branch
    @cached_property
    def q_of_r(self):
        return BPoly.from_derivatives(self.r, np.column_stack([self.q, self.qp, self.qpp]), extrapolate=True)

    @cached_property
    def r_of_q(self):
        rpp = -self.qpp / self.qp**3
        return BPoly.from_derivatives(self.q, np.column_stack([self.r, 1.0 / self.qp, rpp]), extrapolate=True)


@dataclass(frozen=True)
class DistortionReport:
    sup_ratio: float
    inf_ratio: float
    limit_zero: float
    limit_inf: float
    limit_inf_literal: float
    computed_limit_inf: float
    constant: float
    spread: float


@dataclass(frozen=True, eq=False)
class ComparisonDisk:
    profile: PiecewiseProfile
    r: np.ndarray
    q: np.ndarray
    qprime: np.ndarray
    r1: float
    r2: float
    r_max: float
    phases: tuple = field(repr=False)
    n_steps: int = 0

    @property
    def f(self) -> np.ndarray:
        return self.q**2 / TWO_PI

    @property
    def fprime(self) -> np.ndarray:
        return self.q * self.qprime / math.pi

    def _phase_index(self, r):
        edges = np.array([p.r[-1] for p in self.phases[:-1]])
        return np.searchsorted(edges, r, side="left")

    def q_at(self, r):
        r = np.asarray(r, dtype=float)
        idx = self._phase_index(r)
        out = np.empty_like(r)
        for k, ph in enumerate(self.phases):
            m = idx == k
            if np.any(m):
                out[m] = ph.q_of_r(r[m])
        out = np.maximum(out, 0.0)
        return float(out) if out.ndim == 0 else out

    def area(self, r):
        return np.asarray(self.q_at(r)) ** 2 if np.ndim(r) else self.q_at(r) ** 2

    def f_at(self, r):
        return self.area(r) / TWO_PI

    def fprime_at(self, r):
        return self.profile(self.area(r)) / TWO_PI

    def r_at_area(self, a):
        """Radius of the centered disk of area ``a``."""
        q = math.sqrt(a)
        for ph in self.phases:
            if q <= ph.q[-1]:
                return float(ph.r_of_q(q))
        raise DiskTooSmall(f"area {a:g} beyond the solved disk (max {self.q[-1] ** 2:g})")

    @cached_property
    def distortion(self) -> DistortionReport:
        return conformal_distortion(self, self.profile.h)


def solve_f(
    profile: PiecewiseProfile,
    r_max: Optional[float] = None,
    tol: float = 1e-10,
    max_step: float = 0.05,
    adaptive: bool = True,
) -> ComparisonDisk:
    """Integrate 2 pi f' = g(2 pi f) from the origin to ``r_max``.

    Classical RK4.  With ``adaptive`` the step is chosen by step doubling
    (local error <= tol (1 + q)) and capped at ``max_step``; otherwise the
    step is exactly ``max_step`` except where an event or the end is hit.
    ``r_max`` defaults to r2 + 20 / h.
    """
    if r_max is not None and not r_max > 0:
        raise ValidationError("r_max must be positive")
    if not tol > 0 or not max_step > 0:
        raise ValidationError("tol and max_step must be positive")
    events = [math.sqrt(b) for b in profile.breakpoints]
    branches = [0, 1, 2][: len(events) + 1] if not profile.degenerate else [0, 2]
    phases = []
    r, q = 0.0, 0.0
    step = min(max_step, 1e-3) if adaptive else max_step
    n_steps = 0
    r_events = []
    for k, branch in enumerate(branches):
        G = _branch_rhs(profile, branch)
        q_event = events[k] if k < len(events) else None
        r_end = None
        if q_event is None:
            r_end = r_max if r_max is not None else (r_events[-1] if r_events else 0.0) + 20.0 / profile.h
            if r_end <= r:
                break
        rs, qs = [r], [q]
        while True:
            dt = step if r_end is None else min(step, r_end - r)
            if adaptive:
                full = _rk4(G, q, dt)
                half = _rk4(G, _rk4(G, q, 0.5 * dt), 0.5 * dt)
                err = abs(half - full) / 15.0
                scale = tol * (1.0 + abs(half))
                if err > scale:
                    step = dt * max(0.2, 0.9 * (scale / err) ** 0.2)
                    if step < 1e-14:
                        raise StepUnderflow(f"step {step:g} below 1e-14 at r={r:g}")
                    continue
                q_new = half
                step = min(max_step, dt * min(4.0, 0.9 * (scale / max(err, 1e-300)) ** 0.2))
                advance = lambda s: _rk4(G, _rk4(G, q, 0.5 * s), 0.5 * s)
            else:
                q_new = _rk4(G, q, dt)
                advance = lambda s: _rk4(G, q, s)
            n_steps += 1
            if q_event is not None and q_new >= q_event:
                s_ev = brentq(lambda s: advance(s) - q_event, 0.0, dt, xtol=1e-16, rtol=1e-15)
                r, q = r + s_ev, q_event
                rs.append(r)
                qs.append(q)
                r_events.append(r)
                break
            r, q = r + dt, q_new
            rs.append(r)
            qs.append(q)
            if r_end is not None and r >= r_end - 1e-14 * max(1.0, r_end):
                break
        ra, qa = np.array(rs), np.array(qs)
        dG = _branch_rhs_slope(profile, branch)
        phases.append(_Phase(branch, ra, qa, G(qa), dG(qa) * G(qa)))
        if r_max is not None and q_event is not None and r > r_max:
            break
    if len(r_events) < len(events):
        raise ValidationError("r_max ends before the profile breakpoints are reached")
    r1 = float(r_events[0]) if r_events else math.inf
    r2 = float(r_events[-1]) if r_events else math.inf
    r_all = np.concatenate([phases[0].r] + [p.r[1:] for p in phases[1:]])
    q_all = np.concatenate([phases[0].q] + [p.q[1:] for p in phases[1:]])
    qp_all = np.concatenate([phases[0].qp] + [p.qp[1:] for p in phases[1:]])
    return ComparisonDisk(
        profile=profile, r=r_all, q=q_all, qprime=qp_all, r1=r1, r2=r2,
        r_max=float(r_all[-1]), phases=tuple(phases), n_steps=n_steps,
    )


def ode_residual(disk: ComparisonDisk, midpoints: bool = False) -> float:
    """max |2 pi f' - g(2 pi f)| / (1 + |g|).

    At the nodes f' comes from the integrated state; at midpoints it comes
    from the cubic Hermite dense output, which measures interpolation error.
    """
    if not midpoints:
        lhs = TWO_PI * disk.fprime
        g = disk.profile(disk.q**2)
        return float(np.max(np.abs(lhs - g) / (1 + np.abs(g))))
    worst = 0.0
    for ph in disk.phases:
        if len(ph.r) < 2:
            continue
        rm = 0.5 * (ph.r[1:] + ph.r[:-1])
        q = ph.q_of_r(rm)
        dq = ph.q_of_r.derivative()(rm)
        g = disk.profile(q * q)
        worst = max(worst, float(np.max(np.abs(2 * q * dq - g) / (1 + np.abs(g)))))
    return worst


def conformal_distortion(disk: ComparisonDisk, h: float) -> DistortionReport:
    """Two-sided bound on f'(r) / sinh(h r) over (0, r_max].

    With a linear branch the ratio tends to 2 h f(r2) e^{-h r2}; the value
    2 h f(r2) e^{-g(eps)} is reported alongside as ``limit_inf_literal``.
    A pure model-space profile (no breakpoints, K < 0) has
    f' = sinh(c r) / c with c = sqrt(-K), so the ratio tends to 1/h when
    c = h, to 0 when c < h, and diverges when c > h.
    """
    if not h > 0:
        raise ValidationError("h must be positive")
    prof = disk.profile
    if math.isfinite(disk.r2):
        if disk.r_max < disk.r2 + 5.0 / h:
            raise TruncationTooShort(f"r_max={disk.r_max:g} < r2 + 5/h = {disk.r2 + 5.0 / h:g}")
        f_r2 = prof.t2 / TWO_PI
        limit_inf = 2.0 * h * f_r2 * math.exp(-h * disk.r2)
        literal = 2.0 * h * f_r2 * math.exp(-prof.g_eps)
    else:
        c = math.sqrt(-prof.K) if prof.K < 0 else 0.0
        if math.isclose(c, h, rel_tol=1e-12):
            limit_inf = 1.0 / h
        else:
            limit_inf = 0.0 if c < h else math.inf
        literal = limit_inf
    r = disk.r[1:]
    fp = disk.fprime[1:]
    # f'/sinh(hr) written with e^{-hr} so large radii do not overflow
    e = np.exp(-h * r)
    ratio = fp * 2.0 * e / (1.0 - e * e)
    sup_r = max(float(ratio.max()), 1.0 / h)
    inf_r = min(float(ratio.min()), 1.0 / h)
    return DistortionReport(
        sup_ratio=sup_r,
        inf_ratio=inf_r,
        limit_zero=1.0 / h,
        limit_inf=limit_inf,
        limit_inf_literal=literal,
        computed_limit_inf=float(ratio[-1]),
        constant=max(sup_r, 1.0 / inf_r),
        spread=sup_r / inf_r,
    )


def as_warped_surface(disk: ComparisonDisk, area_max: Optional[float] = None, n_t: int = 2048) -> WarpedSurface:
    """The comparison disk as a WarpedSurface with w = f'.

    The grid is uniform in q = sqrt(area) on each branch of g, so nodes are
    evenly spread in the square root of the enclosed area and the kinks of
    f'' sit on segment boundaries.  ``area_max`` cuts the disk at that area.
    """
    q_top = float(disk.q[-1])
    if area_max is not None:
        q_cut = math.sqrt(area_max)
        if q_cut > q_top * (1 + 1e-12):
            raise DiskTooSmall(f"disk area {q_top ** 2:g} < requested {area_max:g}")
        q_cut = min(q_cut, q_top)
    else:
        q_cut = q_top
    segs = []
    for ph in disk.phases:
        qa, qb = float(ph.q[0]), min(float(ph.q[-1]), q_cut)
        if qb <= qa:
            continue
        G = _branch_rhs(disk.profile, ph.branch)
        t0 = float(ph.r[0])
        t1 = float(ph.r[-1]) if qb == ph.q[-1] else float(ph.r_of_q(qb))
        segs.append(
            Segment(t0, t1, kind="mapped", s_range=(qa, qb), t_of_s=ph.r_of_q, dt_ds=(lambda G: lambda q: 1.0 / G(q))(G))
        )
        if qb >= q_cut:
            break
    return WarpedSurface(
        warp=disk.fprime_at,
        t_min=0.0,
        t_max=segs[-1].t1,
        topology=Topology.DISK,
        n_t=n_t,
        segments=segs,
        truncated=area_max is None,
        tail_bound=math.inf if area_max is None else 0.0,
        label="comparison_disk",
        meta={"disk": disk},
    )
