"""Numbered acceptance checks, shared by ``mtlab verify-all`` and the test suite.

Each check returns a :class:`Check` with the measured value, the target,
the tolerance and the wall time.  Checks never soften their thresholds: a
check that cannot be met reports ``passed=False`` together with the
numbers that show why.
"""
from __future__ import annotations

import math
import os
import tempfile
import time
import warnings
from dataclasses import dataclass, field

import numpy as np

from .comparison import closed_form_f, solve_f
from .errors import MedianDegenerate
from .families import (
    collar_blowup_scan,
    cusp_member,
    extrapolate_limit,
    moser_member,
)
from .functionals import markov_report, mt_functional, quadratic_shift_bound
from .geom import (
    GridFunction,
    euclidean_disk,
    flat_cylinder,
    hyperbolic_disk,
    integrate,
    round_sphere,
)
from .profile import build_g, make_params
from .rearrange import distribution, polya_szego_report, rearrange_decreasing, rearrange_two_sided
from .spectral import cheeger_buser_report, radial_gap

FIGURE = dict(K=-1.0, h=1.6, eps=0.2)


@dataclass
class Check:
    criterion: str
    name: str
    passed: bool
    value: float
    target: float
    tol: float
    seconds: float = 0.0
    detail: dict = field(default_factory=dict)

    def line(self) -> str:
        flag = "PASS" if self.passed else "FAIL"
        return (
            f"[{flag}] {self.criterion} {self.name}: value={self.value:.6g} target={self.target:.6g} "
            f"tol={self.tol:.3g} ({self.seconds:.2f}s)"
        )


def _timed(fn):
    t0 = time.perf_counter()
    out = fn()
    return out, time.perf_counter() - t0


def _rel(a, b):
    return abs(a - b) / abs(b)


# 1 ---------------------------------------------------------------------------


def check_cusp():
    out = []
    for b in (-2.0, -1.0, 0.0, 1.0):
        def run():
            m = cusp_member(b)
            return m, m.measured()

        (m, meas), dt = _timed(run)
        err = max(_rel(meas[k], m.closed_forms[k]) for k in ("e2", "l2", "l4"))
        out.append(
            Check("1", f"cusp closed forms b={b:g}", err <= 1e-6 and dt < 1.0, err, 0.0, 1e-6, dt,
                  {"measured": meas, "closed": m.closed_forms})
        )
    return out


# 2 ---------------------------------------------------------------------------


# relative error along the exponential tail grows with r, so the regime
# comparison runs the adaptive solver below its default tolerance
ODE_TOL = 1e-12


def _first_branch_error(K, eps, h=1.0):
    g = build_g(make_params(1.0, h, K), eps, enforce_v0=False)
    d = solve_f(g, r_max=None if math.isfinite(eps) else 2.0, tol=ODE_TOL)
    sel = (d.r > 0) & (d.r <= min(d.r1, d.r_max))
    exact = closed_form_f(K, d.r[sel])
    return float(np.max(np.abs(d.f[sel] - exact) / exact)), d


def check_ode():
    def run():
        errs = {}
        for K, eps in ((-1.0, math.inf), (0.0, math.inf), (1.0, 2.0)):
            errs[f"K={K:g}"], _ = _first_branch_error(K, eps)
        g = build_g(make_params(1.0, FIGURE["h"], FIGURE["K"]), FIGURE["eps"], enforce_v0=False)
        d = solve_f(g, tol=ODE_TOL)
        two_pi = 2 * math.pi
        plateau = (d.r > d.r1) & (d.r <= d.r2)
        f1 = g.eps / two_pi
        lin = f1 + g.g_eps * (d.r[plateau] - d.r1) / two_pi
        errs["plateau"] = float(np.max(np.abs(d.f[plateau] - lin) / lin))
        tail = d.r > d.r2
        f2 = g.t2 / two_pi
        ex = f2 * np.exp(g.h * (d.r[tail] - d.r2))
        errs["tail"] = float(np.max(np.abs(d.f[tail] - ex) / ex))
        gK = build_g(make_params(1.0, 1.0, -1.0), math.inf)
        steps = []
        for hstep in (0.2, 0.1, 0.05):
            dd = solve_f(gK, r_max=2.0, adaptive=False, max_step=hstep)
            steps.append(float(np.max(np.abs(dd.f[1:] - closed_form_f(-1.0, dd.r[1:])) / closed_form_f(-1.0, dd.r[1:]))))
        return errs, steps

    (errs, steps), dt = _timed(run)
    worst = max(errs.values())
    gains = [a / b for a, b in zip(steps, steps[1:])]
    return [
        Check("2", "ODE regimes vs closed forms", worst <= 1e-8 and dt < 1.0, worst, 0.0, 1e-8, dt, errs),
        Check("2", "RK4 order (error ratio per halving)", min(gains) >= 8.0, min(gains), 8.0, 0.0, dt,
              {"errors": steps}),
    ]


# 3 ---------------------------------------------------------------------------


def check_distortion():
    def run():
        g = build_g(make_params(1.0, FIGURE["h"], FIGURE["K"]), FIGURE["eps"], enforce_v0=False)
        return solve_f(g).distortion

    rep, dt = _timed(run)
    literal = _rel(rep.computed_limit_inf, rep.limit_inf_literal)
    corrected = _rel(rep.computed_limit_inf, rep.limit_inf)
    info = {
        "computed": rep.computed_limit_inf,
        "literal": rep.limit_inf_literal,
        "with_exp_minus_h_r2": rep.limit_inf,
        "C": rep.constant,
    }
    return [
        Check("3", "tail limit vs 2h f(r2) exp(-g(eps))", literal <= 1e-6, literal, 0.0, 1e-6, dt, info),
        Check("3*", "tail limit vs 2h f(r2) exp(-h r2)", corrected <= 1e-6, corrected, 0.0, 1e-6, dt, info),
    ]


# 4 ---------------------------------------------------------------------------

_FS = {
    "x^2": lambda x: x * x,
    "x^4": lambda x: x**4,
    "exp(x^2)-1": lambda x: np.expm1(x * x),
}


def _bump(T, TH):
    return np.maximum(0.0, 1 - T**2 / 1.4**2) ** 3 * (1 + 0.3 * T * np.cos(TH) + 0.2 * T**3 * np.sin(3 * TH))


def _sphere_u(T, TH):
    return np.cos(T) + 0.4 * np.sin(T) * np.cos(TH) + 0.3 * np.sin(T) ** 2 * np.sin(2 * TH)


def rearrangement_fixtures():
    """(name, surface, u, disk, finite) for the rearrangement checks."""
    hyp = build_g(make_params(1.0, 1.0, -1.0), math.inf)
    flat = build_g(make_params(1.0, 1.0, 0.0), math.inf)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        sph = build_g(make_params(1.0, 0.5, 1.0), 2 * math.pi, enforce_v0=False)
    d_h = solve_f(hyp, r_max=3.0)
    d_f = solve_f(flat, r_max=2.0)
    d_s = solve_f(sph)
    H = hyperbolic_disk(1.5)
    D = euclidean_disk(1.0)
    S = round_sphere()
    return [
        ("hyperbolic bump", H, GridFunction.from_function(H, _bump, radial=False), d_h, False),
        ("euclidean radial", D, GridFunction.from_function(D, lambda t: (1 - t * t) ** 2), d_f, True),
        ("euclidean 2D", D, GridFunction.from_function(
            D, lambda T, TH: (1 - T * T) ** 2 * (1 + 0.5 * T * np.sin(TH)), radial=False), d_f, True),
        ("sphere 2D", S, GridFunction.from_function(S, _sphere_u, radial=False), d_s, True),
    ]


def check_rearrangement():
    out = []
    for name, surf, u, disk, finite in rearrangement_fixtures():
        def run():
            dist = distribution(surf, u, 257)
            star = rearrange_decreasing(dist, disk)
            eq = max(
                _rel(integrate(star.surface, star.function, F), integrate(surf, u, F)) for F in _FS.values()
            )
            rep = polya_szego_report(surf, u, disk)
            two = None
            if finite and surf.finite_volume:
                try:
                    ts = rearrange_two_sided(surf, u, disk)
                except MedianDegenerate as exc:
                    ts = exc.result
                two = max(
                    _rel(
                        integrate(ts.u_minus.surface, ts.u_minus.function, F)
                        + integrate(ts.u_plus.surface, ts.u_plus.function, F),
                        integrate(surf, u, F),
                    )
                    for F in _FS.values()
                )
            return eq, rep, two

        (eq, rep, two), dt = _timed(run)
        out.append(Check("4", f"equimeasurability [{name}]", eq <= 1e-3 and dt < 10, eq, 0.0, 1e-3, dt))
        if rep.dominated:
            ratio = rep.E_rearranged / rep.E_original
            out.append(Check("4", f"Polya-Szego E(u*)/E(u) [{name}]", ratio <= 1 + 1e-2, ratio, 1.0, 1e-2, dt,
                             {"coarea": rep.coarea_bound}))
        if two is not None:
            out.append(Check("4", f"two-sided identity [{name}]", two <= 1e-3, two, 0.0, 1e-3, dt))
    return out


# 5 ---------------------------------------------------------------------------


def check_spectral():
    out = []
    j11 = 3.8317059702075125
    est, dt = _timed(lambda: radial_gap(euclidean_disk(1.0), 4096))
    err = _rel(est.lambda1, j11**2)
    out.append(Check("5", "unit disk radial Neumann gap", err <= 1e-3, err, j11**2, 1e-3, dt, {"lambda1": est.lambda1}))
    s = 2.5
    base = radial_gap(euclidean_disk(1.0), 1024).lambda1
    scaled = radial_gap(euclidean_disk(s), 1024).lambda1
    sc = _rel(scaled * s * s, base)
    out.append(Check("5", "scaling law lambda(s^2 g) = lambda / s^2", sc <= 1e-6, sc, 0.0, 1e-6))
    fixtures = [
        ("unit disk", euclidean_disk(1.0), 2 * math.sqrt(2), 0.0),
        ("hyperbolic R=30", hyperbolic_disk(30.0), 1.0, -1.0),
        ("unit sphere", round_sphere(), 1.0, 1.0),
    ]
    for name, surf, h_true, kappa in fixtures:
        # h = 1 is the Cheeger constant of the hyperbolic plane, which a
        # truncated disk inherits only for radial functions: a diameter cuts
        # the disk itself cheaply, so its m >= 1 Neumann modes are tiny
        sectors = (0,) if kappa < 0 else (0, 1, 2)
        e = radial_gap(surf, 4096, sectors=sectors)
        rep = cheeger_buser_report(surf, e, h_true, kappa, certified=True, h_true=h_true)
        out.append(Check("5", f"Cheeger 4 lambda >= h^2 [{name}]", bool(rep.holds_with_true_h),
                         rep.four_lambda, h_true**2, 0.0, detail={"buser": rep.buser_quantity}))
    return out


# 6 ---------------------------------------------------------------------------


def check_shift(n=1000, seed=0):
    def run():
        rng = np.random.default_rng(seed)
        worst = 0.0
        for _ in range(n):
            c = rng.uniform(0.01, 0.99)
            Lam = 10 ** rng.uniform(-1, 1)
            A = 10 ** rng.uniform(-1, 1)
            m = math.sqrt(c / (4 * Lam * A)) * rng.choice([-1.0, 1.0])
            worst = max(worst, quadratic_shift_bound(m, Lam, A).agreement)
        return worst

    worst, dt = _timed(run)
    return [Check("6", "shift bound closed form vs golden search", worst <= 1e-8 and dt < 1.0, worst, 0.0, 1e-8, dt)]


# 7 ---------------------------------------------------------------------------

MOSER_K = (math.e, 10.0, 100.0, 1000.0)


def check_moser():
    def run():
        at4 = [mt_functional(m.surface, m.u, 4 * math.pi).value for m in map(moser_member, MOSER_K)]
        at44 = [mt_functional(m.surface, m.u, 4.4 * math.pi).value for m in map(moser_member, MOSER_K)]
        return at4, at44

    (at4, at44), dt = _timed(run)
    limit = extrapolate_limit(MOSER_K, at4)
    bound = max(at4) / limit
    growth = at44[-1] / at44[0]
    info = {"values_4pi": at4, "values_4.4pi": at44, "extrapolated": limit, "exact_limit": 2 * math.pi}
    return [
        Check("7", "Moser alpha=4pi: max / extrapolated limit", bound <= 1.2 and dt < 5, bound, 1.2, 0.0, dt, info),
        Check("7", "Moser alpha=4.4pi: growth k=e..1e3", growth >= 10 and dt < 5, growth, 10.0, 0.0, dt, info),
    ]


# 8 ---------------------------------------------------------------------------


def check_collar():
    scan, dt = _timed(lambda: collar_blowup_scan([1e-2, 1e-3, 1e-4, 1e-5, 1e-6]))
    ok = -0.13 <= scan.slope <= -0.07 and dt < 10
    return [Check("8", "collar log-log slope", ok, scan.slope, -0.1, 0.03, dt, {"ratios": scan.ratio})]


# 9 ---------------------------------------------------------------------------


def markov_fixtures():
    return [
        round_sphere(n_t=256, n_theta=64),
        flat_cylinder(0.0, 2.0, n_t=256, n_theta=64),
        euclidean_disk(1.0, n_t=256, n_theta=64),
    ]


def _band_limited(surf, rng):
    a, b = surf.t_min, surf.t_max
    coef = rng.normal(size=(4, 3, 2))

    def fn(T, TH):
        x = (T - a) / (b - a)
        val = np.zeros_like(T)
        for k in range(4):
            for m in range(3):
                radial = np.cos(k * math.pi * x)
                if surf.topology.value in ("disk", "closed_rotational") and m:
                    # keep the function smooth at the cone points
                    radial = radial * surf.w(T) ** m
                val += radial * (coef[k, m, 0] * np.cos(m * TH) + coef[k, m, 1] * np.sin(m * TH))
        return val

    return GridFunction.from_function(surf, fn, radial=False)


def check_markov(n=100, seed=1):
    def run():
        rng = np.random.default_rng(seed)
        surfaces = markov_fixtures()
        ests = [radial_gap(s, 1024, sectors=(0, 1, 2)) for s in surfaces]
        fails, worst = 0, 0.0
        for i in range(n):
            k = i % len(surfaces)
            rep = markov_report(surfaces[k], _band_limited(surfaces[k], rng), ests[k])
            worst = max(worst, rep.lhs / rep.rhs_poincare)
            fails += not rep.holds_poincare
        return fails, worst

    (fails, worst), dt = _timed(run)
    return [Check("9", "Markov (Poincare reading) on random fixtures", fails == 0 and dt < 30, worst, 1.0, 0.0, dt,
                  {"failures": fails})]


# 10 --------------------------------------------------------------------------

DETERMINISM_COMMANDS = [
    ["profile", "--delta", "1", "--K", "-1", "--h", "1.6", "--eps", "0.2"],
    ["disk", "--K", "-1", "--h", "1.6", "--eps", "0.2", "--n", "64"],
    ["rearrange", "--surface", "hyperbolic", "--radius", "1.5", "--n-t", "256", "--n-theta", "64"],
    ["mt", "--family", "moser", "--param", "e,10,100", "--alpha", "4pi,4.4pi"],
    ["spectral", "--surface", "disk", "--n", "512", "--sectors", "0,1,2"],
    ["family", "--kind", "cusp", "--b=-2,-1,0"],
    ["family", "--kind", "collar", "--eps", "1e-2,1e-3,1e-4,1e-5"],
]


def check_determinism():
    from .cli import run as cli_run

    def run():
        bad = []
        with tempfile.TemporaryDirectory() as tmp:
            for i, cmd in enumerate(DETERMINISM_COMMANDS):
                blobs = []
                for threads in ("1", "1", "4"):
                    path = os.path.join(tmp, f"{i}_{len(blobs)}.csv")
                    old = os.environ.get("MTLAB_THREADS")
                    os.environ["MTLAB_THREADS"] = threads
                    try:
                        code = cli_run(cmd + ["--out", path], quiet=True)
                    finally:
                        if old is None:
                            os.environ.pop("MTLAB_THREADS", None)
                        else:
                            os.environ["MTLAB_THREADS"] = old
                    if code != 0:
                        bad.append(f"{cmd[0]} exit {code}")
                        break
                    with open(path, "rb") as fh:
                        blobs.append(fh.read())
                if len(set(blobs)) > 1:
                    bad.append(cmd[0])
        return bad

    bad, dt = _timed(run)
    return [Check("10", "CLI byte-identical across runs and MTLAB_THREADS", not bad, len(bad), 0, 0, dt,
                  {"mismatched": bad})]


CRITERIA = {
    "1": check_cusp,
    "2": check_ode,
    "3": check_distortion,
    "4": check_rearrangement,
    "5": check_spectral,
    "6": check_shift,
    "7": check_moser,
    "8": check_collar,
    "9": check_markov,
    "10": check_determinism,
}


def run_all(selected=None):
    out = []
    for key, fn in CRITERIA.items():
        if selected is None or key in selected:
            out.extend(fn())
    return out
