"""Command-line entry point: ``kfpwall <command> ...``.

Exit codes: 0 success, 1 numerical failure (diagnostic JSON on stderr),
2 usage or domain error.
"""
from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import subprocess
import sys
import time
from dataclasses import asdict, dataclass, field
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__

log = logging.getLogger("kfpwall")


# ------------------------------------------------------------- output ---

def version_string() -> str:
    """Package version with a git-describe suffix when run from a checkout."""
    try:
        out = subprocess.run(
            ["git", "describe", "--always", "--dirty", "--tags"], cwd=Path(__file__).resolve().parent,
            capture_output=True, text=True, timeout=5,
        )
        desc = out.stdout.strip()
        if out.returncode == 0 and desc:
            return f"{__version__}+g{desc}"
    except (OSError, subprocess.SubprocessError):
        pass
    return __version__


def _now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


def _clean(obj):
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return x if math.isfinite(x) else None
    return obj


def dumps(obj) -> str:
    return json.dumps(_clean(obj), indent=2, sort_keys=False)


@dataclass
class RunManifest:
    command: str
    config: dict
    seed: int | None = None
    version: str = field(default_factory=version_string)
    started: str = field(default_factory=_now)
    finished: str | None = None
    outputs: list[str] = field(default_factory=list)

    def write(self, path: Path) -> Path:
        self.finished = _now()
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(dumps(asdict(self)) + "\n")
        return path


def write_csv(path: Path, header, rows) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([repr(float(x)) if isinstance(x, (float, np.floating)) else x for x in row])
    return path


class Output:
    """Collects files written by one command and emits the manifest."""

    def __init__(self, args, config: dict, seed: int | None = None):
        self.out = Path(args.out) if getattr(args, "out", None) else None
        self.manifest = RunManifest(command=" ".join(args.argv), config=config, seed=seed)

    def path(self, name: str) -> Path | None:
        return None if self.out is None else self.out / name

    def add(self, path: Path | None):
        if path is not None:
            self.manifest.outputs.append(str(path))

    def finish(self):
        if self.out is not None:
            self.manifest.write(self.out / "manifest.json")


def _emit(obj, as_json: bool = True):
    if as_json:
        print(dumps(obj))
    else:
        width = max(len(k) for k in obj)
        for k, v in obj.items():
            print(f"{k:<{width}}  {v}")


# ----------------------------------------------------------- commands ---

def cmd_exponents(args) -> int:
    from .exponents import RestitutionConstants, alpha_of_r, beta_of_r, c_star_closed_form, critical_r, kappa_of_r
    if args.action == "table":
        rs = np.geomspace(args.r_from, args.r_to, args.n)
        rc = critical_r()
        rows = []
        for r in rs:
            r = float(r)
            cs = c_star_closed_form(r) if r < rc else float("nan")
            rows.append((r, alpha_of_r(r), beta_of_r(r), kappa_of_r(r), cs))
        header = ("r", "alpha", "beta", "kappa", "c_star")
        if args.csv:
            write_csv(Path(args.csv), header, rows)
        else:
            w = csv.writer(sys.stdout, lineterminator="\n")
            w.writerow(header)
            w.writerows([[repr(x) for x in row] for row in rows])
        return 0
    if args.r is None:
        raise UsageError("exponents needs --r")
    c = RestitutionConstants.from_r(args.r)
    d = {"r": c.r, "r_c": c.r_c, "alpha": c.alpha, "beta": c.beta, "k_alpha": c.k_alpha,
         "kappa": c.kappa, "c_star": c.c_star}
    _emit(d, not args.text)
    return 0


def _parse_grid(text: str) -> tuple[int, int]:
    try:
        a, b = text.lower().split("x")
        return int(a), int(b)
    except ValueError:
        raise UsageError(f"--grid must look like 64x128, got {text!r}") from None


def cmd_profile(args) -> int:
    from .exponents import RestitutionConstants
    from .profiles import SelfSimilarProfile
    c = RestitutionConstants.from_r(args.r)
    if args.kind == "G":
        prof = SelfSimilarProfile.g(c, "alpha" if args.gamma == "alpha" else "m23")
    elif args.kind == "F":
        prof = SelfSimilarProfile.f(c)
    else:
        prof = SelfSimilarProfile(0.0, c, "S")
    nx, nv = _parse_grid(args.grid)
    xs = np.linspace(args.xmax / nx, args.xmax, nx)
    vs = np.linspace(-args.vmax, args.vmax, nv)
    vals = prof.grid(xs, vs)
    rows = ((x, v, vals[i, j]) for i, x in enumerate(xs) for j, v in enumerate(vs))
    if args.csv:
        write_csv(Path(args.csv), ("x", "v", "value"), rows)
    else:
        w = csv.writer(sys.stdout, lineterminator="\n")
        w.writerow(("x", "v", "value"))
        w.writerows([[repr(float(a)) for a in row] for row in rows])
    return 0


def _gamma_arg(text: str, r: float) -> float:
    from .exponents import alpha_of_r
    t = text.lower()
    if t in ("m23", "-2/3"):
        return -2.0 / 3.0
    if t == "alpha":
        return alpha_of_r(r)
    return float(text)


def cmd_flux(args) -> int:
    from . import fluxes as fl
    from .exponents import RestitutionConstants
    if args.action == "moment":
        val = fl.zeta_lambda_moment(args.M)
        _emit({"M": args.M, "moment": val, "limit": math.pi / math.sqrt(3.0)})
    elif args.action == "boundary":
        c = RestitutionConstants.from_r(args.r)
        g = _gamma_arg(args.gamma, args.r)
        dom = fl.ExcisionDomain(args.delta, args.b, args.r)
        top, bot, right = fl.boundary_flux_edges(g, dom)
        val = fl.boundary_flux(g, dom, c)
        _emit({"gamma": g, "r": args.r, "delta": args.delta, "b": args.b, "flux": val,
               "edges": {"top": top, "bottom": bot, "right": right},
               "kappa_target": -c.kappa if abs(g + 2 / 3) < 1e-12 else 0.0})
    else:
        c = RestitutionConstants.from_r(args.r)
        res = fl.c_star_quadrature(c, args.R)
        d = {"r": args.r, "R": args.R, "quadrature": res.value, "integral": res.integral,
             "tail": res.tail, "tail_exponent": res.tail_exponent, "quad_error": res.quad_error}
        if args.compare:
            d["closed_form"] = c.c_star
            d["relative_deviation"] = abs(res.value - c.c_star) / abs(c.c_star)
        _emit(d)
    return 0


def cmd_cstar(args) -> int:
    from .exponents import RestitutionConstants
    c = RestitutionConstants.from_r(args.r)
    if c.c_star is None:
        raise ValueError("C* is defined only for r < r_c")
    _emit({"r": args.r, "c_star": c.c_star})
    return 0


def _sim_config(args, r: float, t_max: float, h_max: float):
    from .sde import SimConfig
    return SimConfig(r=r, T_max=t_max, h_max=h_max, n_paths=args.n, seed=args.seed,
                     c_step=args.c_step, eps_v=args.eps_v, x0=args.x0, v0=args.v0)


def cmd_sde(args) -> int:
    from . import sde
    if args.action == "collapse":
        cfg = _sim_config(args, args.r, args.tmax, args.hmax)
        o = Output(args, asdict(cfg), cfg.seed)
        status, tf, nb, _x, _v = sde.run_paths(cfg)
        summary = sde.summarize_paths(cfg, status, tf, nb)
        if args.csv or o.out is not None:
            p = Path(args.csv) if args.csv else o.path("paths.csv")
            rows = ((i, int(status[i] == sde.COLLAPSED), tf[i], nb[i]) for i in range(cfg.n_paths))
            o.add(write_csv(p, ("path", "collapsed", "t_final", "bounces"), rows))
        d = summary.as_dict()
        if o.out is not None:
            p = o.path("summary.json")
            p.parent.mkdir(parents=True, exist_ok=True)
            p.write_text(dumps(d) + "\n")
            o.add(p)
        o.finish()
        _emit(d, args.json) if args.json else _emit({k: v for k, v in d.items() if k != "config"}, False)
        return 0
    if args.action == "hitting":
        o = Output(args, {"b": args.b, "n": args.n, "c_step": args.c_step}, args.seed)
        s = sde.hitting_statistics(args.b, args.n, rng=args.seed, c_step=args.c_step)
        t1_all = np.concatenate([s.t1, np.full(s.n_unreturned, np.inf)])
        d = {"b": args.b, "n": args.n, "n_returned": int(s.t1.size), "n_unreturned": s.n_unreturned,
             "median_t1": float(np.median(t1_all)), "mean_log_h1": float(np.mean(np.log(s.h1))),
             "median_h1": float(np.median(s.h1))}
        if args.csv or o.out is not None:
            p = Path(args.csv) if args.csv else o.path("hitting.csv")
            o.add(write_csv(p, ("t1", "h1"), zip(s.t1, s.h1)))
        o.finish()
        _emit(d)
        return 0
    rs = [float(x) for x in args.rs.split(",") if x.strip()]
    o = Output(args, {"rs": rs, "n": args.n, "T_max": args.tmax, "h_max": args.hmax}, args.seed)
    rows = []
    for r in rs:
        s = sde.collapse_experiment(_sim_config(args, r, args.tmax, args.hmax))
        rows.append((r, s.fraction, s.ci_low, s.ci_high, s.n_capped))
    if args.csv or o.out is not None:
        p = Path(args.csv) if args.csv else o.path("sweep.csv")
        o.add(write_csv(p, ("r", "fraction", "ci_low", "ci_high", "capped"), rows))
    o.finish()
    _emit({"T_max": args.tmax, "n": args.n,
           "rows": [dict(zip(("r", "fraction", "ci_low", "ci_high", "capped"), row)) for row in rows]})
    return 0


def _parse_lambda(text: str, h: float) -> float:
    t = text.replace(" ", "").lower()
    if t.endswith("*h"):
        return float(t[:-2]) * h
    return float(t)


def cmd_lattice(args) -> int:
    from . import lattice as lt
    lam = _parse_lambda(args.lam, args.h)
    bc = lt.BoundaryCondition("dynamic", lam / args.h) if args.bc_check == "dynamic" else lt.BoundaryCondition(args.bc_check)
    k = round(args.t / args.h ** 2)
    o = Output(args, {"lambda": lam, "h": args.h, "t": args.t, "bc_check": args.bc_check, "steps": k})
    d = lt.evolve(lt.LatticeDist.gaussian(args.h, lam), k)
    c = lt.continuum_compare(d, bc)
    if args.csv or o.out is not None:
        p = Path(args.csv) if args.csv else o.path("profile.csv")
        u_ref, _, _ = lt.reference_profile(bc, d.x[1:], d.t, h=d.h)
        rows = zip(d.x[1:], d.p[1:] / d.h, u_ref)
        o.add(write_csv(p, ("x", "p_over_h", "reference"), rows))
    o.finish()
    res = {"max_error": c.max_error, "m_lattice": c.m_lattice, "m_reference": c.m_reference,
           "t": c.t, "lambda": lam, "h": args.h}
    if c.warning:
        res["warning"] = c.warning
    _emit(res)
    return 0


def _pde_config(args):
    from .pde import PDEConfig
    base = {}
    if args.config:
        base = json.loads(Path(args.config).read_text())
    flags = {"mode": args.mode, "bc": args.bc, "r": args.r, "nx": args.nx, "nv": args.nv,
             "delta": args.delta, "t_end": args.tend, "dt": args.dt, "snapshot_every": args.snapshot_every}
    base.update({k: v for k, v in flags.items() if v is not None})
    try:
        return PDEConfig(**base)
    except TypeError as exc:
        raise UsageError(f"bad PDE configuration: {exc}") from None


def cmd_pde(args) -> int:
    from .pde import run
    cfg = _pde_config(args)
    o = Output(args, cfg.as_dict())
    t0 = time.perf_counter()
    res = run(cfg)
    s = res.series
    cols = ("t", "interior_mass", "m", "a_alpha", "a_m23", "fit_alpha", "fit_m23", "m_flux", "outflow")
    if o.out is not None:
        o.add(write_csv(o.path("series.csv"), cols, zip(*(s[k] for k in cols))))
        snaps = res.snapshots if res.snapshots else []
        if not snaps or snaps[-1].t != res.field.t:
            snaps = list(snaps) + [res.field]
        g = res.field.grid
        X, V = np.meshgrid(g.x, g.v, indexing="ij")
        for i, f in enumerate(snaps):
            rows = zip(X.ravel(), V.ravel(), f.values.ravel())
            o.add(write_csv(o.path(f"snapshot_{i:04d}.csv"), ("x", "v", "P"), rows))
    o.finish()
    _emit({"t": res.field.t, "interior_mass": res.field.interior_mass(), "m": res.m,
           "m_corners": [x.m for x in res.origins], "total_mass": res.total_mass(),
           "a_alpha": res.origins[0].a_alpha, "a_m23": res.origins[0].a_m23,
           "fit_alpha": res.origins[0].fit_alpha, "fit_m23": res.origins[0].fit_m23,
           "steps": len(s["t"]) - 1, "wall_seconds": time.perf_counter() - t0})
    return 0


def cmd_reproduce(args) -> int:
    from .acceptance import CRITERIA, format_table, run_all
    only = None
    if args.only:
        only = [int(x) for x in args.only.split(",")]
        bad = [k for k in only if k not in CRITERIA]
        if bad:
            raise UsageError(f"unknown criteria {bad}")
    o = Output(args, {"fast": args.fast, "only": only})

    def show(res):
        print(res.line(), flush=True)

    results = run_all(fast=args.fast, only=only, on_result=show)
    table = format_table(results)
    print(table.splitlines()[-1])
    if o.out is not None:
        p = o.path("acceptance.json")
        p.parent.mkdir(parents=True, exist_ok=True)
        p.write_text(dumps([r.as_dict() for r in results]) + "\n")
        o.add(p)
        p = o.path("acceptance.txt")
        p.write_text(table + "\n")
        o.add(p)
    o.finish()
    return 0


def cmd_specfun(args) -> int:
    from . import specfun as sf
    if args.which == "M":
        val = sf.kummer_m(args.a, args.b, args.z)
    elif args.which == "U":
        val = sf.tricomi_u(args.a, args.b, args.z)
    else:
        val = sf.ln_gamma(args.z)[0]
    print(repr(float(val)))
    return 0


# ------------------------------------------------------------- parser ---

class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(2)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="kfpwall", description="Kinetic Fokker-Planck equation with an inelastic wall.")
    p.add_argument("--threads", type=int, default=None, help="numba worker threads")
    p.add_argument("--verbose", "-v", action="store_true")
    p.add_argument("--version", action="version", version=f"kfpwall {__version__}")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser,
                           metavar="{exponents,profile,flux,cstar,sde,lattice,pde,reproduce}")

    e = sub.add_parser("exponents", help="alpha, beta, kappa, C* for a restitution coefficient")
    e.add_argument("action", nargs="?", choices=["table"], default=None)
    e.add_argument("--r", type=float)
    e.add_argument("--json", action="store_true", help="JSON output (the default)")
    e.add_argument("--text", action="store_true", help="aligned text table instead of JSON")
    e.add_argument("--from", dest="r_from", type=float, default=0.01)
    e.add_argument("--to", dest="r_to", type=float, default=1.0)
    e.add_argument("--n", type=int, default=50)
    e.add_argument("--csv")
    e.set_defaults(func=cmd_exponents)

    pr = sub.add_parser("profile", help="self-similar profiles on a grid")
    prs = pr.add_subparsers(dest="action", required=True, parser_class=_Parser)
    d = prs.add_parser("dump")
    d.add_argument("--kind", choices=["G", "F", "S"], default="G")
    d.add_argument("--r", type=float, required=True)
    d.add_argument("--gamma", choices=["m23", "alpha"], default="m23")
    d.add_argument("--grid", default="32x64")
    d.add_argument("--xmax", type=float, default=1.0)
    d.add_argument("--vmax", type=float, default=2.0)
    d.add_argument("--csv")
    pr.set_defaults(func=cmd_profile)

    f = sub.add_parser("flux", help="flux identities by quadrature")
    fs = f.add_subparsers(dest="action", required=True, parser_class=_Parser)
    m = fs.add_parser("moment")
    m.add_argument("--M", type=float, default=50.0)
    b = fs.add_parser("boundary")
    b.add_argument("--gamma", default="m23", help="m23, alpha or a number")
    b.add_argument("--r", type=float, required=True)
    b.add_argument("--delta", type=float, default=1.0)
    b.add_argument("--b", type=float, default=1e-4)
    c = fs.add_parser("cstar")
    c.add_argument("--r", type=float, required=True)
    c.add_argument("--R", type=float, default=50.0)
    c.add_argument("--compare", action="store_true")
    f.set_defaults(func=cmd_flux)

    cs = sub.add_parser("cstar", help="closed-form coupling constant")
    cs.add_argument("--r", type=float, required=True)
    cs.set_defaults(func=cmd_cstar)

    s = sub.add_parser("sde", help="particle simulations")
    ss = s.add_subparsers(dest="action", required=True, parser_class=_Parser)
    for name in ("collapse", "hitting", "sweep"):
        q = ss.add_parser(name)
        q.add_argument("--n", type=int, default=10_000)
        q.add_argument("--seed", type=int, default=12345)
        q.add_argument("--c-step", type=float, default=0.01)
        q.add_argument("--csv")
        q.add_argument("--out")
        if name == "hitting":
            q.add_argument("--b", type=float, default=1.0)
            continue
        q.add_argument("--tmax", type=float, default=50.0 if name == "collapse" else 1e8)
        q.add_argument("--hmax", type=float, default=0.05 if name == "collapse" else 1e12)
        q.add_argument("--eps-v", type=float, default=1e-5)
        q.add_argument("--x0", type=float, default=1.0)
        q.add_argument("--v0", type=float, default=0.0)
        if name == "collapse":
            q.add_argument("--r", type=float, required=True)
            q.add_argument("--json", action="store_true")
        else:
            q.add_argument("--rs", default="0.05,0.1,0.12,0.14,0.18,0.2,0.25")
    s.set_defaults(func=cmd_sde)

    lp = sub.add_parser("lattice", help="random-walk master equation")
    ls = lp.add_subparsers(dest="action", required=True, parser_class=_Parser)
    lr = ls.add_parser("run")
    lr.add_argument("--lambda", dest="lam", default="1", help="value or mu*h, e.g. 2*h")
    lr.add_argument("--h", type=float, default=1 / 128)
    lr.add_argument("--t", type=float, default=0.25)
    lr.add_argument("--bc-check", choices=["neumann", "dirichlet", "dynamic"], default="neumann")
    lr.add_argument("--csv")
    lr.add_argument("--out")
    lp.set_defaults(func=cmd_lattice)

    pp = sub.add_parser("pde", help="phase-space finite-volume solver")
    ps = pp.add_subparsers(dest="action", required=True, parser_class=_Parser)
    pr_ = ps.add_parser("run")
    pr_.add_argument("--config", help="JSON file with PDE configuration fields")
    pr_.add_argument("--mode", choices=["halfline", "strip"])
    pr_.add_argument("--bc", help="trap, nontrap, partial:<mu> or super")
    pr_.add_argument("--r", type=float)
    pr_.add_argument("--nx", type=int)
    pr_.add_argument("--nv", type=int)
    pr_.add_argument("--delta", type=float)
    pr_.add_argument("--tend", type=float)
    pr_.add_argument("--dt", type=float)
    pr_.add_argument("--snapshot-every", type=float)
    pr_.add_argument("--out")
    pp.set_defaults(func=cmd_pde)

    rp = sub.add_parser("reproduce", help="acceptance experiments")
    rs = rp.add_subparsers(dest="action", required=True, parser_class=_Parser)
    ra = rs.add_parser("all")
    ra.add_argument("--fast", action="store_true", help="10x fewer paths, coarser grids")
    ra.add_argument("--only", help="comma-separated criterion numbers")
    ra.add_argument("--out")
    rp.set_defaults(func=cmd_reproduce)

    sp = sub.add_parser("specfun")  # debugging aid, not listed in help
    sps = sp.add_subparsers(dest="action", required=True, parser_class=_Parser)
    ev = sps.add_parser("eval")
    ev.add_argument("--func", dest="which", choices=["M", "U", "lngamma"], required=True)
    ev.add_argument("--a", type=float, default=0.0)
    ev.add_argument("--b", type=float, default=2 / 3)
    ev.add_argument("--z", type=float, required=True)
    sp.set_defaults(func=cmd_specfun)
    # keep the debugging command out of the top-level help listing
    sub._choices_actions = [a for a in sub._choices_actions if a.dest != "specfun"]
    return p


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    args = parser.parse_args(argv)
    args.argv = ["kfpwall", *argv]
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.threads is not None:
        import numba
        numba.set_num_threads(max(1, min(args.threads, numba.config.NUMBA_NUM_THREADS)))
    try:
        return args.func(args)
    except (UsageError, ValueError) as exc:
        print(dumps({"error": "usage", "type": type(exc).__name__, "message": str(exc)}), file=sys.stderr)
        return 2
    except (ArithmeticError, RuntimeError, FloatingPointError) as exc:
        print(dumps({"error": "numerical", "type": type(exc).__name__, "message": str(exc)}), file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
