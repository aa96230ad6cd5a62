"""``mtlab``: batch experiments with CSV/JSON output.

Every subcommand takes ``--config FILE`` (a JSON object whose keys are the
option names, dashes or underscores), ``--out PATH`` ('-' for stdout) and
``--format csv|json``.  Explicit flags override the config file.  Numbers
are written with 17 significant digits so repeated runs are byte-identical.

Exit codes: 0 success, 2 invalid input, 1 runtime failure (including a
failing check in ``verify-all``).
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import re
import sys
import warnings

import numpy as np

from . import __version__
from .errors import MtlabError, ValidationError

# ---------------------------------------------------------------------------
# value parsing


def parse_number(text) -> float:
    """A float, optionally written as a multiple of pi ('4pi', '4.4*pi'),
    or one of 'e', 'pi', 'inf'."""
    if isinstance(text, (int, float)) and not isinstance(text, bool):
        return float(text)
    s = str(text).strip().lower().replace(" ", "")
    consts = {"pi": math.pi, "e": math.e, "inf": math.inf, "+inf": math.inf}
    if s in consts:
        return consts[s]
    m = re.fullmatch(r"([-+]?[0-9.]+(?:e[-+]?\d+)?)\*?pi", s)
    try:
        if m:
            return float(m.group(1)) * math.pi
        return float(s)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None


def parse_list(text) -> tuple:
    if isinstance(text, (list, tuple)):
        return tuple(parse_number(x) for x in text)
    parts = [p for p in str(text).split(",") if p.strip()]
    if not parts:
        raise argparse.ArgumentTypeError("empty list")
    return tuple(parse_number(p) for p in parts)


def parse_int_list(text) -> tuple:
    vals = parse_list(text)
    if any(v != int(v) for v in vals):
        raise argparse.ArgumentTypeError(f"expected integers: {text!r}")
    return tuple(int(v) for v in vals)


def _positive_int(text) -> int:
    try:
        v = int(parse_number(text))
    except (OverflowError, ValueError):
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if v < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return v


# ---------------------------------------------------------------------------
# output


def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return "%.17g" % float(v)
    return str(v)


def _json_value(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return "%.17g" % float(v) if math.isfinite(v) else "null"
    return json.dumps(str(v))


def render(columns, rows, fmt: str) -> str:
    if fmt == "json":
        body = ",\n".join(
            "  {" + ", ".join(f"{json.dumps(c)}: {_json_value(r[i])}" for i, c in enumerate(columns)) + "}"
            for r in rows
        )
        return '{"columns": [' + ", ".join(json.dumps(c) for c in columns) + '], "rows": [\n' + body + "\n]}\n"
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([_fmt(v) for v in r])
    return buf.getvalue()


# ---------------------------------------------------------------------------
# subcommands: each returns (columns, rows, summary)


def _profile(p):
    from .profile import build_g, make_params

    params = make_params(p["delta"], p["h"], p["K"])
    eps = p.get("eps")
    if eps is not None and eps > params.v0:
        warnings.warn(f"eps={eps:g} exceeds v0={params.v0:g}; plateau level not capped by the systole")
    g = build_g(params, eps, enforce_v0=False)
    t_max = p.get("t_max") or (10.0 * g.t2 if math.isfinite(g.t2) else 100.0)
    if not 0 < p["t_min"] < t_max:
        raise ValidationError("need 0 < t_min < t_max")
    t = np.geomspace(p["t_min"], t_max, p["n"])
    vals = g(t)
    rows = [(ti, gi, g.branch(ti)) for ti, gi in zip(t, vals)]
    summary = f"v0={params.v0:.10g} eps={g.eps:.10g} g(eps)={g.g_eps:.10g} t2={g.t2:.10g} degenerate={g.degenerate}"
    return ["t", "g", "branch"], rows, summary


def _disk(p):
    from .comparison import solve_f
    from .profile import build_g, make_params

    params = make_params(p["delta"], p["h"], p["K"])
    g = build_g(params, p.get("eps"), enforce_v0=False)
    d = solve_f(g, r_max=p.get("r_max"), tol=p["tol"])
    r = np.linspace(0.0, d.r_max, p["n"])
    area = d.area(r)
    f = area / (2 * math.pi)
    per = g(area)
    rows = [(ri, fi, pi_ / (2 * math.pi), ai, pi_) for ri, fi, ai, pi_ in zip(r, f, area, per)]
    summary = f"r1={d.r1:.10g} r2={d.r2:.10g} r_max={d.r_max:.10g} steps={d.n_steps}"
    if math.isfinite(d.r2) or params.K < 0:
        rep = d.distortion
        summary += f" C={rep.constant:.10g} limit={rep.limit_inf:.10g} computed={rep.computed_limit_inf:.10g}"
    return ["r", "f", "fprime", "area", "perimeter"], rows, summary


def _surface(name, radius, n_t=2048, n_theta=256):
    from .geom import euclidean_disk, flat_cylinder, hyperbolic_disk, round_sphere

    kw = {"n_t": n_t, "n_theta": n_theta}
    if name == "disk":
        return euclidean_disk(radius, **kw)
    if name == "hyperbolic":
        return hyperbolic_disk(radius, **kw)
    if name == "sphere":
        return round_sphere(radius, **kw)
    if name == "cylinder":
        return flat_cylinder(0.0, radius, **kw)
    raise ValidationError(f"unknown surface {name!r}")


def _rearrange(p):
    from .comparison import solve_f
    from .geom import GridFunction
    from .profile import build_g, make_params
    from .rearrange import distribution, polya_szego_report, rearrange_decreasing
    from .verify import _bump, _sphere_u

    name = p["surface"]
    radius = p.get("radius") or {"disk": 1.0, "hyperbolic": 1.5, "sphere": 1.0}[name]
    surf = _surface(name, radius, p["n_t"], p["n_theta"])
    if name == "hyperbolic":
        fn = lambda T, TH: _bump(T / radius * 1.5, TH)
        g = build_g(make_params(1.0, 1.0, -1.0), math.inf)
    elif name == "disk":
        fn = lambda T, TH: (1 - (T / radius) ** 2) ** 2 * (1 + 0.5 * (T / radius) * np.sin(TH))
        g = build_g(make_params(1.0, 1.0, 0.0), math.inf)
    elif name == "sphere":
        fn = lambda T, TH: _sphere_u(T / radius, TH)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            g = build_g(make_params(1.0, 0.5 / radius, 1.0 / radius**2), 2 * math.pi * radius**2, enforce_v0=False)
    else:
        raise ValidationError("rearrange supports disk, hyperbolic and sphere")
    u = GridFunction.from_function(surf, fn, radial=False)
    disk = solve_f(g)
    dist = distribution(surf, u, p["levels"])
    star = rearrange_decreasing(dist, disk)
    rep = polya_szego_report(surf, u, disk, n_levels=p["levels"])
    a = np.linspace(0.0, dist.volume, p["n"])
    rows = [(ai, si) for ai, si in zip(a, dist.rearranged(a))]
    summary = (
        f"E_original={rep.E_original:.10g} E_rearranged={rep.E_rearranged:.10g} "
        f"coarea={rep.coarea_bound:.10g} dominated={rep.dominated} median={dist.median:.10g}"
    )
    del star
    return ["area", "u_star"], rows, summary


def _mt(p):
    from .families import FamilySpec, mt_scan

    grid = {"n_t": p["n_t"]} if p.get("n_t") else {}
    spec = FamilySpec(p["family"], p["param"], grid)
    rows = [(r.member, r.alpha, r.value, r.energy) for r in mt_scan(spec, p["alpha"])]
    return ["member", "alpha", "value", "energy"], rows, f"rows={len(rows)} family={p['family']}"


def _spectral(p):
    from .spectral import radial_gap

    name = p["surface"]
    radius = p.get("radius") or {"disk": 1.0, "hyperbolic": 30.0, "sphere": 1.0, "cylinder": 2.0}[name]
    surf = _surface(name, radius)
    est = radial_gap(surf, p["n"], p["boundary"], p["sectors"])
    rows = [(m, s.eigenvalue) for m, s in sorted(est.by_sector.items())]
    summary = f"lambda1={est.lambda1:.10g} sector={est.sector} poincare_const={est.poincare_const:.10g}"
    return ["sector", "eigenvalue"], rows, summary


def _family(p):
    from .families import FamilySpec, collar_blowup_scan, collar_member, cusp_member, moser_member, ordered_map
    from .functionals import mt_functional

    kind = p["kind"]
    n_t = p.get("n_t")
    kw = {"n_t": n_t} if n_t else {}
    if kind == "cusp":
        bs = p.get("b") or (-2.0, -1.0, 0.0, 1.0)
        FamilySpec("cusp", bs)

        def row(b):
            meas = cusp_member(b, **kw).measured()
            return (b, meas["e2"], meas["l2"], meas["l4"], meas["l4"] / meas["e2"] ** 2)

        rows = ordered_map(row, bs)
        return ["b", "energy", "l2sq", "l4", "ratio"], rows, f"members={len(rows)}"
    if kind == "collar":
        eps = p.get("eps") or (1e-2, 1e-3, 1e-4, 1e-5, 1e-6)
        FamilySpec("collar", eps)
        members = ordered_map(lambda e: collar_member(e, **kw), eps)
        rows = [
            (m.eps, m.R0, m.report["energy"], m.report["energy_exact"], m.report["l4c"], m.report["ratio"],
             m.report["ratio_literal"])
            for m in members
        ]
        summary = f"members={len(rows)}"
        if len(eps) >= 4:
            summary += f" slope={collar_blowup_scan(eps, **kw).slope:.10g}"
        return ["eps", "R0", "energy", "energy_exact", "l4c", "ratio", "ratio_literal"], rows, summary
    if kind == "moser":
        ks = p.get("k") or (math.e, 10.0, 100.0, 1000.0)
        FamilySpec("moser", ks)

        def row(k):
            m = moser_member(k, **kw)
            rep = mt_functional(m.surface, m.u, 4 * math.pi)
            return (k, float(m.u.values[0]), rep.energy, rep.value)

        rows = ordered_map(row, ks)
        return ["k", "u0", "energy", "mt_4pi"], rows, f"members={len(rows)}"
    raise ValidationError(f"unknown family kind {kind!r}")


def _verify_all(p, echo):
    from .verify import run_all

    sel = None if not p.get("criteria") else {str(int(c)) for c in p["criteria"]}
    checks = run_all(sel)
    for c in checks:
        echo(c.line())
    rows = [(c.criterion, c.name, c.passed, c.value, c.target, c.tol) for c in checks]
    failed = [c for c in checks if not c.passed]
    summary = f"checks={len(checks)} passed={len(checks) - len(failed)} failed={len(failed)}"
    return ["criterion", "check", "passed", "value", "target", "tol"], rows, summary, bool(failed)


# ---------------------------------------------------------------------------
# parser

_PROFILE_OPTS = [
    ("--delta", parse_number, 1.0, "systole"),
    ("--K", parse_number, -1.0, "curvature lower bound"),
    ("--h", parse_number, 1.0, "Cheeger constant"),
    ("--eps", parse_number, None, "first breakpoint (default v0; 'inf' for the pure model profile)"),
]

COMMANDS = {
    "profile": (
        "comparison profile g on a log grid. columns: t, g, branch",
        _PROFILE_OPTS
        + [
            ("--t-min", parse_number, 1e-6, "smallest area"),
            ("--t-max", parse_number, None, "largest area (default 10 t2)"),
            ("--n", _positive_int, 200, "number of rows"),
        ],
        _profile,
    ),
    "disk": (
        "comparison disk f(r). columns: r, f, fprime, area, perimeter",
        _PROFILE_OPTS
        + [
            ("--r-max", parse_number, None, "truncation radius (default r2 + 20/h)"),
            ("--tol", parse_number, 1e-10, "ODE tolerance"),
            ("--n", _positive_int, 200, "number of rows"),
        ],
        _disk,
    ),
    "rearrange": (
        "decreasing rearrangement of a built-in test function. columns: area, u_star",
        [
            ("--surface", str, "hyperbolic", "disk | hyperbolic | sphere"),
            ("--radius", parse_number, None, "disk radius or sphere radius"),
            ("--n-t", _positive_int, 2048, "radial grid intervals"),
            ("--n-theta", _positive_int, 256, "angular nodes"),
            ("--levels", _positive_int, 257, "number of levels"),
            ("--n", _positive_int, 200, "number of rows"),
        ],
        _rearrange,
    ),
    "mt": (
        "Moser-Trudinger values over a family. columns: member, alpha, value, energy",
        [
            ("--family", str, "moser", "moser | cusp | collar (cusp and collar normalized to unit energy)"),
            ("--param", parse_list, (math.e, 10.0, 100.0, 1000.0), "member parameters k, b or eps"),
            ("--alpha", parse_list, (4 * math.pi,), "exponents, e.g. 4pi,4.4pi"),
            ("--n-t", _positive_int, None, "radial grid intervals"),
        ],
        _mt,
    ),
    "spectral": (
        "radial spectral gap per Fourier sector. columns: sector, eigenvalue",
        [
            ("--surface", str, "disk", "disk | hyperbolic | sphere | cylinder"),
            ("--radius", parse_number, None, "radius (or cylinder length)"),
            ("--n", _positive_int, 2048, "cells"),
            ("--boundary", str, "neumann", "neumann | dirichlet"),
            ("--sectors", parse_int_list, (0,), "Fourier sectors m"),
        ],
        _spectral,
    ),
    "family": (
        "family members against closed forms. columns: cusp b, energy, l2sq, l4, ratio; "
        "collar eps, R0, energy, energy_exact, l4c, ratio, ratio_literal; moser k, u0, energy, mt_4pi",
        [
            ("--kind", str, "cusp", "cusp | collar | moser"),
            ("--b", parse_list, None, "cusp parameters"),
            ("--eps", parse_list, None, "collar parameters (decreasing)"),
            ("--k", parse_list, None, "Moser parameters (>= e)"),
            ("--n-t", _positive_int, None, "radial grid intervals"),
        ],
        _family,
    ),
    "verify-all": (
        "run the numbered acceptance checks. columns: criterion, check, passed, value, target, tol",
        [("--criteria", parse_int_list, None, "subset of criteria, e.g. 1,2,6")],
        None,
    ),
}


def _dest(flag: str) -> str:
    return flag.lstrip("-").replace("-", "_")


def build_parser():
    parser = argparse.ArgumentParser(prog="mtlab", description=__doc__.split("\n\n")[0],
                                     argument_default=argparse.SUPPRESS)
    parser.add_argument("--version", action="version", version=f"mtlab {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, (help_, opts, _) in COMMANDS.items():
        sp = sub.add_parser(name, help=help_, description=help_, argument_default=argparse.SUPPRESS)
        for flag, typ, default, h in opts:
            sp.add_argument(flag, dest=_dest(flag), type=typ, help=f"{h} (default: {default})")
        sp.add_argument("--config", dest="config", help="JSON file with option values")
        sp.add_argument("--out", dest="out", help="output path, '-' for stdout (default)")
        sp.add_argument("--format", dest="format", choices=("csv", "json"), help="csv (default) or json")
    return parser


def _join_negative(argv):
    """'--b -2,-1' -> '--b=-2,-1' so argparse does not read -2 as a flag."""
    out, i = [], 0
    while i < len(argv):
        tok = argv[i]
        if (
            tok.startswith("--") and "=" not in tok and i + 1 < len(argv)
            and re.match(r"^-[0-9.]", argv[i + 1])
        ):
            out.append(f"{tok}={argv[i + 1]}")
            i += 2
            continue
        out.append(tok)
        i += 1
    return out


def _load_config(path, opts):
    try:
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ValidationError(f"cannot read config {path}: {exc}") from None
    if not isinstance(data, dict):
        raise ValidationError("config must be a JSON object")
    types = {_dest(f): t for f, t, _, _ in opts}
    types.update({"out": str, "format": str})
    out = {}
    for key, value in data.items():
        dest = key.replace("-", "_")
        if dest not in types:
            raise ValidationError(f"unknown config key {key!r}")
        if value is None:
            out[dest] = None
            continue
        try:
            out[dest] = types[dest](value)
        except argparse.ArgumentTypeError as exc:
            raise ValidationError(f"config key {key!r}: {exc}") from None
    if out.get("format") not in (None, "csv", "json"):
        raise ValidationError("format must be csv or json")
    return out


def run(argv=None, quiet: bool = False) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    err = sys.stderr
    parser = build_parser()
    try:
        ns = parser.parse_args(_join_negative(argv))
    except SystemExit as exc:
        return int(exc.code or 0)
    flags = vars(ns)
    name = flags.pop("command")
    _, opts, handler = COMMANDS[name]
    params = {_dest(f): d for f, _, d, _ in opts}
    params.update({"out": "-", "format": "csv"})
    try:
        if "config" in flags:
            params.update(_load_config(flags.pop("config"), opts))
        params.update(flags)
        echo_to = err if params["out"] == "-" else sys.stdout
        echo = (lambda s: None) if quiet else (lambda s: print(s, file=echo_to))
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            failed = False
            if name == "verify-all":
                cols, rows, summary, failed = _verify_all(params, echo)
            else:
                cols, rows, summary = handler(params)
        for wmsg in caught:
            if not quiet:
                print(f"warning: {wmsg.message}", file=err)
        text = render(cols, rows, params["format"])
        if params["out"] == "-":
            sys.stdout.write(text)
        else:
            with open(params["out"], "w", encoding="utf-8", newline="") as fh:
                fh.write(text)
        echo(f"{name}: {summary}")
        return 1 if failed else 0
    except (ValidationError, argparse.ArgumentTypeError) as exc:
        print(f"error: {exc}", file=err)
        return 2
    except MtlabError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=err)
        return 1
    except Exception as exc:  # noqa: BLE001 - any other failure is a runtime error
        print(f"error: {type(exc).__name__}: {exc}", file=err)
        return 1


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
