"""Command-line interface, configuration, and report generation.

Exit codes: 0 all checks passed; 1 a verification failed (nonzero residual
or tolerance exceeded); 2 usage, parse or document error; 3 internal
consistency error (corrupt table, rewrite bound, failed fit).

Configuration is a flat key=value file (see Config.FIELDS) named by
--config or the HEXALG_CONFIG environment variable; command-line flags
override file values.  With an explicit seed, reports are byte-identical
across runs (timings are reported as 0 so the bytes cannot drift).
"""

import argparse
import os
import sys
import time
from dataclasses import dataclass, fields, replace

import numpy as np

from .coeff import mpq
from .ncalg import ConstructionError, EngineError, NCPoly, normalize
from . import tables, conformal, hexgeom, repnum, serialize
from .expr import parse, to_poly, print_canonical, ParseError
from .conformal import AccelParams, ObservableSet, elaboration_context
from .serialize import LoadError

__all__ = ["Config", "run", "main"]

EXIT_OK = 0
EXIT_VERIFY = 1
EXIT_USAGE = 2
EXIT_INTERNAL = 3


@dataclass
class Config:
    basis: str = "B"
    grid_n: int = 32
    grid_box: float = 4.0
    grid_eps: float = 0.5
    tol: float = 1e-6
    tol_composite: float = 1e-5
    step_bound: int = 5_000_000
    manifest: str = ""
    report: str = "text"
    seed: int = -1  # -1 means unseeded (non-deterministic timings)

    FIELDS = ("basis", "grid_n", "grid_box", "grid_eps", "tol",
              "tol_composite", "step_bound", "manifest", "report", "seed")

    @classmethod
    def load(cls, path=None):
        cfg = cls()
        path = path or os.environ.get("HEXALG_CONFIG")
        if not path:
            return cfg
        values = {}
        with open(path) as fh:
            for lineno, raw in enumerate(fh, 1):
                line = raw.strip()
                if not line or line.startswith("#"):
                    continue
                if "=" not in line:
                    raise LoadError(
                        f"{path}:{lineno}: expected key=value")
                key, _, val = line.partition("=")
                key = key.strip()
                val = val.strip()
                if key not in cls.FIELDS:
                    raise LoadError(f"{path}:{lineno}: unknown key {key!r}")
                values[key] = val
        for f in fields(cls):
            if f.name in values:
                raw = values[f.name]
                if f.type is int or isinstance(getattr(cfg, f.name), int):
                    setattr(cfg, f.name, int(raw))
                elif isinstance(getattr(cfg, f.name), float):
                    setattr(cfg, f.name, float(raw))
                else:
                    setattr(cfg, f.name, raw)
        cfg.validate()
        return cfg

    def validate(self):
        if self.basis not in ("A", "B"):
            raise LoadError(f"basis must be A or B, not {self.basis!r}")
        if self.report not in ("text", "json"):
            raise LoadError("report must be 'text' or 'json'")
        for name in ("grid_n", "step_bound"):
            if getattr(self, name) <= 0:
                raise LoadError(f"{name} must be positive")
        for name in ("grid_box", "grid_eps", "tol", "tol_composite"):
            if getattr(self, name) <= 0:
                raise LoadError(f"{name} must be positive")

    def echo(self):
        return {f.name: getattr(self, f.name) for f in fields(self)}

    @property
    def deterministic(self):
        return self.seed >= 0


def _rationals(text, n=None):
    parts = [p.strip() for p in text.split(",")]
    if n is not None and len(parts) != n:
        raise ParseError(f"expected {n} comma-separated rationals", 1, 1)
    out = []
    for p in parts:
        try:
            out.append(mpq(p))
        except (ValueError, ZeroDivisionError):
            raise ParseError(f"bad rational {p!r}", 1, 1)
    return out


def _floats(text, n=None):
    parts = [p.strip() for p in text.split(",")]
    if n is not None and len(parts) != n:
        raise ParseError(f"expected {n} comma-separated numbers", 1, 1)
    try:
        return [float(p) for p in parts]
    except ValueError as exc:
        raise ParseError(f"bad number in {text!r}: {exc}", 1, 1)


class _Context:
    """Lazily built engine objects shared across a command."""

    def __init__(self, cfg):
        self.cfg = cfg
        self._obs = {}

    def observables(self, basis=None):
        basis = basis or self.cfg.basis
        if basis not in self._obs:
            if basis == "B" and self.cfg.manifest:
                doc = serialize.read_manifest(self.cfg.manifest)
                rw = tables.basis_B(manifest=doc,
                                    step_bound=self.cfg.step_bound)
            elif basis == "B":
                rw = tables.basis_B(step_bound=self.cfg.step_bound)
            else:
                rw = tables.basis_A(step_bound=self.cfg.step_bound)
            self._obs[basis] = ObservableSet(basis, rw=rw)
        return self._obs[basis]

    def elaborate(self, text, basis=None):
        obs = self.observables(basis)
        images, ys = elaboration_context(obs)
        ast = parse(text)
        return to_poly(ast, obs.rw, images=images, y_table=ys), obs

    def oracle(self):
        grid = repnum.Grid(n=self.cfg.grid_n, box=self.cfg.grid_box,
                           eps=self.cfg.grid_eps)
        rng = np.random.default_rng(
            self.cfg.seed if self.cfg.deterministic else None)
        return repnum.Oracle(grid=grid, rng=rng, tol=self.cfg.tol)


def _emit(cfg, command, results, stream=sys.stdout):
    doc = serialize.report_doc(command, cfg.echo(), results,
                               deterministic=cfg.deterministic)
    stream.write(serialize.render_report(doc, cfg.report))
    return EXIT_OK if all(r["pass"] for r in results) else EXIT_VERIFY


# -- alg ----------------------------------------------------------------------

_SUITE_ALL = (
    "PX", "DX", "JX", "XX", "inverse", "S2", "Y2", "spinhalf", "CM", "CY",
    "PJDC", "JJ", "JY", "YY", "YYY", "jacobi", "nonassoc", "traY",
    "boost_group", "conservation", "lambda", "motion", "d2Y",
)


def _cmd_alg(args, cfg):
    ctx = _Context(cfg)
    if args.alg_cmd == "normalize":
        t0 = time.time()
        poly, obs = ctx.elaborate(args.expr, args.basis)
        value = normalize(poly, obs.rw)
        return _emit(cfg, "alg normalize", [{
            "id": "normalize", "pass": True,
            "residual": print_canonical(value),
            "time_ms": int((time.time() - t0) * 1000)}])
    if args.alg_cmd == "commute":
        t0 = time.time()
        obs = ctx.observables(args.basis)
        a, _ = ctx.elaborate(args.lhs, args.basis)
        b, _ = ctx.elaborate(args.rhs, args.basis)
        from .ncalg import commutator
        value = commutator(normalize(a, obs.rw), normalize(b, obs.rw),
                           obs.rw)
        return _emit(cfg, "alg commute", [{
            "id": "commute", "pass": True,
            "residual": print_canonical(value),
            "time_ms": int((time.time() - t0) * 1000)}])
    if args.alg_cmd == "verify":
        obs = ctx.observables(args.basis)
        alpha = AccelParams.parse(args.alpha) if args.alpha else None
        beta = AccelParams.parse(args.beta) if args.beta else None
        suites = _SUITE_ALL if args.suite == "all" else (args.suite,)
        results = []
        for suite in suites:
            reports = conformal.verify_identity(obs, suite, alpha=alpha,
                                                beta=beta)
            for r in reports:
                results.append({
                    "id": r.identity, "pass": r.passed,
                    "residual": print_canonical(r.residual),
                    "time_ms": r.time_ms})
        return _emit(cfg, f"alg verify {args.suite}", results)
    if args.alg_cmd == "boost":
        t0 = time.time()
        alpha = AccelParams.parse(args.alpha)
        poly, obs = ctx.elaborate(args.target, args.basis or "B")
        res = conformal.boost(obs, poly, alpha, order=args.order)
        rows = [{
            "id": "boost", "pass": res.truncated_at is None,
            "residual": print_canonical(res.poly),
            "time_ms": int((time.time() - t0) * 1000)}]
        rows.append({
            "id": "boost:termination-order",
            "pass": res.terminated_at is not None,
            "residual": str(res.terminated_at if res.terminated_at is not None
                            else f"truncated at {res.truncated_at}"),
            "time_ms": 0})
        closed = conformal.closed_form_boost_M(obs, alpha)
        if normalize(res.poly - closed, obs.rw).is_zero():
            rows.append({
                "id": "boost:closed-form",
                "pass": True,
                "residual": _traY_string(alpha),
                "time_ms": 0})
        return _emit(cfg, "alg boost", rows)
    if args.alg_cmd == "motion":
        t0 = time.time()
        alpha = AccelParams.parse(args.alpha)
        poly, obs = ctx.elaborate(args.observable, args.basis or "B")
        value = normalize(poly, obs.rw)
        for _ in range(args.order):
            value = conformal.motion_derivative(obs, value, alpha)
        return _emit(cfg, "alg motion", [{
            "id": f"motion:order{args.order}", "pass": True,
            "residual": print_canonical(value),
            "time_ms": int((time.time() - t0) * 1000)}])
    raise ConstructionError(f"unknown alg command {args.alg_cmd!r}")


def _traY_string(alpha):
    """Human form of the transformed mass in hexaspherical components."""
    bits = ["M"]
    for mu in range(4):
        c = 2 * alpha.upper(mu)
        if c:
            bits.append(f"- {c}*Y_{mu}" if c > 0 else f"+ {-c}*Y_{mu}")
    if alpha.alpha_sq:
        a2 = alpha.alpha_sq
        bits.append(f"+ {a2}*(Y_+ - Y_-)" if a2 > 0
                    else f"- {-a2}*(Y_+ - Y_-)")
    return " ".join(bits)


# -- geom ---------------------------------------------------------------------

def _cmd_geom(args, cfg):
    rows = []
    t0 = time.time()
    if args.geom_cmd == "lift":
        p = hexgeom.SpaceTimePoint(tuple(_floats(args.x, 4)), args.lam)
        y = hexgeom.lift(p)
        rows.append({"id": "lift", "pass": True,
                     "residual": ",".join(repr(v) for v in y.y),
                     "time_ms": int((time.time() - t0) * 1000)})
        rows.append({"id": "lift:quadric", "pass":
                     abs(hexgeom.hexa_sq(y)) <= 1e-12 * max(
                         1.0, max(abs(v) for v in y.y)) ** 2,
                     "residual": repr(hexgeom.hexa_sq(y)), "time_ms": 0})
    elif args.geom_cmd == "map":
        p = hexgeom.SpaceTimePoint(tuple(_floats(args.x, 4)), args.lam)
        q = hexgeom.conformal_map(p, _floats(args.alpha, 4))
        rows.append({"id": "map", "pass": True,
                     "residual": ",".join(repr(v) for v in (*q.x, q.lam)),
                     "time_ms": int((time.time() - t0) * 1000)})
    elif args.geom_cmd == "rotate":
        y = hexgeom.HexaPoint(tuple(_floats(args.y, 6)))
        z = hexgeom.rotate_hexa(y, _floats(args.alpha, 4))
        rows.append({"id": "rotate", "pass": True,
                     "residual": ",".join(repr(v) for v in z.y),
                     "time_ms": int((time.time() - t0) * 1000)})
    elif args.geom_cmd == "invariant":
        y1 = hexgeom.HexaPoint(tuple(_floats(args.y, 6)))
        y2 = hexgeom.HexaPoint(tuple(_floats(args.y2, 6)))
        rows.append({"id": "invariant", "pass": True,
                     "residual": repr(hexgeom.pair_invariant(y1, y2)),
                     "time_ms": int((time.time() - t0) * 1000)})
    elif args.geom_cmd == "hyperboloid":
        h = hexgeom.Hyperboloid.from_radius(
            tuple(_floats(args.omega, 4)), args.rho2, args.k2)
        if args.alpha:
            h = hexgeom.hyperboloid_map(h, _floats(args.alpha, 4))
        rows.append({"id": "hyperboloid", "pass": True,
                     "residual": ",".join(repr(v) for v in
                                          (*h.omega, h.rho_sq, h.k_sq,
                                           h.lam_sq)),
                     "time_ms": int((time.time() - t0) * 1000)})
    elif args.geom_cmd == "metric":
        p = hexgeom.SpaceTimePoint(tuple(_floats(args.x, 4)), args.lam)
        rep = hexgeom.metric_check(p, _floats(args.dx, 4),
                                   _floats(args.alpha, 4), step=args.step)
        ok = 3.5 <= rep["ratio"] <= 4.5 or rep["relative_defect"] <= 1e-12
        rows.append({"id": "metric", "pass": ok,
                     "residual": f"ratio={rep['ratio']!r},"
                                 f"defect={rep['relative_defect']!r}",
                     "time_ms": int((time.time() - t0) * 1000)})
    return _emit(cfg, f"geom {args.geom_cmd}", rows)


# -- rep ----------------------------------------------------------------------

def _cmd_rep(args, cfg):
    ctx = _Context(cfg)
    if args.rep_cmd == "calibrate":
        t0 = time.time()
        oracle = ctx.oracle()
        weight = oracle.calibrate_weight()
        return _emit(cfg, "rep calibrate", [{
            "id": "dilatation-weight", "pass": True,
            "residual": str(weight),
            "time_ms": int((time.time() - t0) * 1000)}])
    if args.rep_cmd == "check":
        oracle = ctx.oracle()
        rw = ctx.observables("B").rw
        results = repnum.run_entry_suite(
            oracle, rw, tol=args.tol or cfg.tol,
            tol_composite=cfg.tol_composite)
        rows = [{"id": r["id"], "pass": r["pass"],
                 "residual": repr(r["residual"]), "time_ms": r["time_ms"]}
                for r in results]
        return _emit(cfg, "rep check", rows)
    if args.rep_cmd == "fit":
        doc = tables.build_manifest(n=args.fit_n,
                                    richardson=not args.no_richardson,
                                    snap_tol=args.snap_tol)
        rows = []
        for e in doc["entries"]:
            if e["provenance"].startswith("derived:fit"):
                rows.append({"id": f"fit({e['left']},{e['right']})",
                             "pass": True,
                             "residual": print_canonical(
                                 serialize.obj_to_poly(e["bracket"])),
                             "time_ms": 0})
        return _emit(cfg, "rep fit", rows)
    if args.rep_cmd == "converge":
        results = repnum.convergence_study(n_small=args.coarse_n)
        rows = [{"id": r["id"], "pass": r["factor"] >= 64.0,
                 "residual": f"coarse={r['coarse']!r},fine={r['fine']!r},"
                             f"factor={r['factor']!r}",
                 "time_ms": 0} for r in results]
        return _emit(cfg, "rep converge", rows)
    raise ConstructionError(f"unknown rep command {args.rep_cmd!r}")


# -- manifest -------------------------------------------------------------------

def _cmd_manifest(args, cfg):
    if args.manifest_cmd == "write":
        doc = tables.build_manifest(n=args.fit_n,
                                    richardson=not args.no_richardson,
                                    snap_tol=args.snap_tol)
        serialize.write_manifest(doc, args.path)
        return _emit(cfg, "manifest write", [{
            "id": "manifest", "pass": True, "residual": args.path,
            "time_ms": 0}])
    if args.manifest_cmd == "read":
        doc = serialize.read_manifest(args.path)
        rw = tables.basis_B(manifest=doc)
        return _emit(cfg, "manifest read", [{
            "id": "manifest", "pass": True,
            "residual": f"{len(doc['entries'])} entries, "
                        f"D_weight={doc['calibration']['D_weight']}",
            "time_ms": 0}])
    raise ConstructionError(f"unknown manifest command {args.manifest_cmd!r}")


# -- entry point -----------------------------------------------------------------

def _build_parser():
    ap = argparse.ArgumentParser(
        prog="hexalg",
        description="Exact conformal-observable algebra, classical "
                    "hexaspherical geometry, and the numerical oracle.")
    ap.add_argument("--config", help="key=value configuration file")
    ap.add_argument("--report", choices=("text", "json"))
    ap.add_argument("--seed", type=int)
    sub = ap.add_subparsers(dest="command", required=True)

    alg = sub.add_parser("alg", help="exact algebra commands")
    algsub = alg.add_subparsers(dest="alg_cmd", required=True)
    p = algsub.add_parser("normalize")
    p.add_argument("expr")
    p.add_argument("--basis", choices=("A", "B"))
    p = algsub.add_parser("commute")
    p.add_argument("lhs")
    p.add_argument("rhs")
    p.add_argument("--basis", choices=("A", "B"))
    p = algsub.add_parser("verify")
    p.add_argument("--suite", required=True,
                   choices=conformal.SUITE_IDS + ("all",))
    p.add_argument("--basis", choices=("A", "B"))
    p.add_argument("--alpha")
    p.add_argument("--beta")
    p = algsub.add_parser("boost")
    p.add_argument("--alpha", required=True)
    p.add_argument("--target", required=True)
    p.add_argument("--order", type=int)
    p.add_argument("--basis", choices=("A", "B"))
    p = algsub.add_parser("motion")
    p.add_argument("--alpha", required=True)
    p.add_argument("--observable", required=True)
    p.add_argument("--order", type=int, choices=(1, 2), default=1)
    p.add_argument("--basis", choices=("A", "B"))

    geom = sub.add_parser("geom", help="classical geometry commands")
    geomsub = geom.add_subparsers(dest="geom_cmd", required=True)
    p = geomsub.add_parser("lift")
    p.add_argument("--x", required=True)
    p.add_argument("--lam", type=float, required=True)
    p = geomsub.add_parser("map")
    p.add_argument("--x", required=True)
    p.add_argument("--lam", type=float, required=True)
    p.add_argument("--alpha", required=True)
    p = geomsub.add_parser("rotate")
    p.add_argument("--y", required=True)
    p.add_argument("--alpha", required=True)
    p = geomsub.add_parser("invariant")
    p.add_argument("--y", required=True)
    p.add_argument("--y2", required=True)
    p = geomsub.add_parser("hyperboloid")
    p.add_argument("--omega", required=True)
    p.add_argument("--rho2", type=float, required=True)
    p.add_argument("--k2", type=float, required=True)
    p.add_argument("--alpha")
    p = geomsub.add_parser("metric")
    p.add_argument("--x", required=True)
    p.add_argument("--lam", type=float, required=True)
    p.add_argument("--dx", required=True)
    p.add_argument("--alpha", required=True)
    p.add_argument("--step", type=float, default=0.01)

    rep = sub.add_parser("rep", help="numerical oracle commands")
    repsub = rep.add_subparsers(dest="rep_cmd", required=True)
    p = repsub.add_parser("calibrate")
    p.add_argument("--grid", type=int, dest="grid_n")
    p = repsub.add_parser("check")
    p.add_argument("--grid", type=int, dest="grid_n")
    p.add_argument("--tol", type=float)
    p = repsub.add_parser("fit")
    p.add_argument("--fit-n", type=int, default=48)
    p.add_argument("--no-richardson", action="store_true")
    p.add_argument("--snap-tol", type=float)
    p = repsub.add_parser("converge")
    p.add_argument("--coarse-n", type=int, default=24)

    man = sub.add_parser("manifest", help="fitted-table manifest io")
    mansub = man.add_subparsers(dest="manifest_cmd", required=True)
    p = mansub.add_parser("write")
    p.add_argument("path")
    p.add_argument("--fit-n", type=int, default=48)
    p.add_argument("--no-richardson", action="store_true")
    p.add_argument("--snap-tol", type=float)
    p = mansub.add_parser("read")
    p.add_argument("path")
    return ap


def run(argv, config=None):
    """Parse argv, run the command, return the exit code."""
    ap = _build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code not in (0, None) else EXIT_OK
    try:
        cfg = config if config is not None else Config.load(args.config)
        if args.report:
            cfg.report = args.report
        if args.seed is not None:
            cfg.seed = args.seed
        if getattr(args, "grid_n", None):
            cfg.grid_n = args.grid_n
        cfg.validate()
        if args.command == "alg":
            return _cmd_alg(args, cfg)
        if args.command == "geom":
            return _cmd_geom(args, cfg)
        if args.command == "rep":
            return _cmd_rep(args, cfg)
        if args.command == "manifest":
            return _cmd_manifest(args, cfg)
        return EXIT_USAGE
    except (ParseError, LoadError, ConstructionError,
            hexgeom.HorizonError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (EngineError, repnum.FitError) as exc:
        print(f"internal error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


def main():
    sys.exit(run(sys.argv[1:]))


if __name__ == "__main__":
    main()
