"""Command line entry point: ``kwlab <subcommand> [options]``.

Every option can also come from a flat ``key = value`` file passed with
``--config``; flags given on the command line win. Exit codes: 0 on
success, 1 on invalid input, 2 when ``--check`` is set and a tolerance is
breached.
"""
import argparse
import json
import sys
import time
from dataclasses import dataclass, field

import numpy as np

from . import __version__, artifacts, classify, lie, nahm

EXIT_OK, EXIT_INVALID, EXIT_BREACH = 0, 1, 2


class ConfigError(ValueError):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError(f"{self.prog}: {message}")


@dataclass
class RunConfig:
    command: str
    n: int = 2
    k: int = 1
    g: int = None
    seed: int = 0
    shape: tuple = None
    y_range: tuple = None
    y0: float = None
    y1: float = None
    step: float = None
    perturb: float = 0.0
    levels: int = 3
    tol: float = None
    out: str = None
    check: bool = False
    params: dict = field(default_factory=dict)

    def validate(self):
        if self.n < 2:
            raise ConfigError(f"n must be >= 2, got {self.n}")
        if self.k < 0:
            raise ConfigError(f"k must be >= 0, got {self.k}")
        if self.seed < 0:
            raise ConfigError("seed must be nonnegative")
        if self.shape is not None and (len(self.shape) != 4 or min(self.shape) < 4):
            raise ConfigError(f"shape needs four sizes >= 4, got {self.shape}")
        if self.y_range is not None and not 0 < self.y_range[0] < self.y_range[1]:
            raise ConfigError(f"y range must satisfy 0 < lo < hi, got {self.y_range}")
        for name in ("y0", "y1", "step", "tol"):
            v = getattr(self, name)
            if v is not None and not v > 0:
                raise ConfigError(f"{name} must be positive, got {v}")
        if self.y0 is not None and self.y1 is not None and not self.y1 > self.y0:
            raise ConfigError("need y1 > y0")
        if not 1 + self.perturb > 0:
            raise ConfigError("perturb must exceed -1 (start is (1 + perturb) t/y0)")
        if self.levels < 1:
            raise ConfigError("levels must be >= 1")
        return self


def _pairs(text, kind):
    """``"p=1,2;q=0,1"`` -> ``[("p", (1, 2)), ("q", (0, 1))]``."""
    out = []
    for chunk in filter(None, (c.strip() for c in text.split(";"))):
        if "=" not in chunk:
            raise ConfigError(f"bad {kind} entry {chunk!r}, expected id=v1,v2,...")
        pid, vals = chunk.split("=", 1)
        try:
            out.append((pid.strip(), tuple(int(v) for v in vals.replace(",", " ").split())))
        except ValueError:
            raise ConfigError(f"non-integer {kind} in {chunk!r}") from None
    return out


def read_config(path):
    cfg = {}
    with open(path) as fh:
        for num, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{num}: expected key = value")
            key, val = (s.strip() for s in line.split("=", 1))
            cfg[key.replace("-", "_")] = val
    return cfg


def _convert(action, raw):
    if isinstance(action, argparse._StoreTrueAction):
        if raw.lower() in ("1", "true", "yes", "on"):
            return True
        if raw.lower() in ("0", "false", "no", "off"):
            return False
        raise ConfigError(f"{action.dest}: expected a boolean, got {raw!r}")
    conv = action.type or str
    try:
        if action.nargs not in (None, "?"):
            return [conv(v) for v in raw.replace(",", " ").split()]
        return conv(raw)
    except ValueError:
        raise ConfigError(f"{action.dest}: cannot parse {raw!r}") from None


def _common(p, out, tol=None):
    p.add_argument("--config", help="flat key = value file")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=out, help="output file (bare names go to $KWLAB_OUTPUT_DIR)")
    p.add_argument("--check", action="store_true", help="exit 2 on a tolerance breach")
    p.add_argument("--tol", type=float, default=tol)


def build_parser():
    parser = _Parser(prog="kwlab", description="Kapustin-Witten lattice toolkit")
    parser.add_argument("--version", action="version", version=f"kwlab {__version__}")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)
    subs = {}

    p = subs["verify-model"] = sub.add_parser("verify-model", help="KW residuals of the SU(2) knot model")
    _common(p, None, 1e-8)
    p.add_argument("--n", type=int, default=2)
    p.add_argument("--k", type=int, default=1)
    p.add_argument("--samples", type=int, default=10_000)
    p.add_argument("--R-range", dest="R_range", type=float, nargs=2, default=[0.1, 2.0])
    p.add_argument("--s-range", dest="s_range", type=float, nargs=2, default=[0.1, float(np.pi / 2)])
    p.add_argument("--fd-step", dest="fd_step", type=float, default=1e-4)

    p = subs["emit-model"] = sub.add_parser("emit-model", help="write a model field as KWLF")
    _common(p, None)
    p.add_argument("--model", choices=("nahm", "knot"), default="nahm")
    p.add_argument("--n", type=int, default=2)
    p.add_argument("--k", type=int, default=1)
    p.add_argument("--shape", type=int, nargs=4, default=[8, 8, 8, 16])
    p.add_argument("--y-range", dest="y_range", type=float, nargs=2, default=[0.1, 10.0])
    p.add_argument("--samples", type=int, default=1000)

    p = subs["nahm-integrate"] = sub.add_parser("nahm-integrate", help="RK4 for the Nahm equations")
    _common(p, "nahm.csv", 1e-6)
    p.add_argument("--n", type=int, default=2)
    p.add_argument("--y0", type=float, default=0.05)
    p.add_argument("--y1", type=float, default=10.0)
    p.add_argument("--step", type=float, default=1e-3)
    p.add_argument("--perturb", type=float, default=0.0, help="start from (1 + perturb) t/y0")
    p.add_argument("--variable", choices=("T", "u"), default="T")
    p.add_argument("--every", type=int, default=10, help="write every k-th point")

    p = subs["audit-weitzenbock"] = sub.add_parser("audit-weitzenbock", help="audit both integral identities")
    _common(p, "audit.csv", 0.05)
    p.add_argument("--n", type=int, default=2)
    p.add_argument("--shape", type=int, nargs=4, default=[16, 16, 16, 32])
    p.add_argument("--levels", type=int, default=3)
    p.add_argument("--y-range", dest="y_range", type=float, nargs=2, default=[0.5, 2.0])
    p.add_argument("--support", choices=("inner", "none"), default="inner")
    p.add_argument("--gauge", choices=("full", "temporal"), default="full")
    p.add_argument("--amplitude", type=float, default=1.0)
    p.add_argument("--order-window", dest="order_window", type=float, default=0.4)

    for name, helptext in (("knot-admissible", "divisibility test for knot data"),
                           ("classify", "existence verdict")):
        p = subs[name] = sub.add_parser(name, help=helptext)
        _common(p, None)
        p.add_argument("--query", help="JSON query document")
        p.add_argument("--n", type=int, default=None)
        p.add_argument("--g", type=int, default=None)
        p.add_argument("--weights", default="", help='knot weights, e.g. "p=1,2;q=0,1"')
        p.add_argument("--vanishing", default="", help='vanishing orders, e.g. "p=0,2,3"')
        if name == "classify":
            p.add_argument("--limit", choices=classify.LIMITS, default=None)
            p.add_argument("--witness", choices=("yes", "no"), default=None)
            p.add_argument("--table", action="store_true", help="also print a table on stderr")

    p = subs["refine-study"] = sub.add_parser("refine-study", help="Richardson orders over h, h/2, h/4")
    _common(p, "refine.csv")
    p.add_argument("--quantity", choices=("weitzenbock", "exterior_d", "nahm", "nahm_pole"), default="weitzenbock")
    p.add_argument("--n", type=int, default=2)
    p.add_argument("--shape", type=int, nargs=4, default=[8, 8, 8, 16])
    p.add_argument("--levels", type=int, default=3)
    p.add_argument("--step", type=float, default=4e-3)
    p.add_argument("--y-range", dest="y_range", type=float, nargs=2, default=None)
    return parser, subs


def parse(argv):
    parser, subs = build_parser()
    ns = parser.parse_args(argv)
    if ns.command is None:
        raise ConfigError("no subcommand given; see kwlab --help")
    if ns.config:
        sp = subs[ns.command]
        actions = {a.dest: a for a in sp._actions}
        defaults = {}
        for key, raw in read_config(ns.config).items():
            if key not in actions or key in ("help", "config"):
                raise ConfigError(f"unknown config key {key!r} for {ns.command}")
            defaults[key] = _convert(actions[key], raw)
        sp.set_defaults(**defaults)
        ns = parser.parse_args(argv)
    return to_config(ns)


def to_config(ns):
    d = dict(vars(ns))
    d.pop("config", None)
    known = {k: d.pop(k) for k in list(d) if k in RunConfig.__dataclass_fields__ and k != "params"}
    if known.get("shape") is not None:
        known["shape"] = tuple(known["shape"])
    if known.get("y_range") is not None:
        known["y_range"] = tuple(known["y_range"])
    for k in ("n", "k"):
        if known.get(k) is None:
            known.pop(k, None)
        else:
            d[f"{k}_given"] = True
    return RunConfig(params=d, **known).validate()


def _emit(obj):
    sys.stdout.write(json.dumps(obj, sort_keys=True) + "\n")


def _status(cfg, ok):
    return EXIT_BREACH if cfg.check and not ok else EXIT_OK


def cmd_verify_model(cfg):
    from .lattice import SphericalPatch
    from .residuals import knot_kw_pointwise

    P = cfg.params
    if cfg.n != 2:
        raise ConfigError("the knot model is implemented for n = 2 only")
    patch = SphericalPatch(tuple(P["R_range"]), tuple(P["s_range"]), P["samples"])
    R, s, th, x1 = patch.sample(cfg.seed)
    t0 = time.perf_counter()
    n1, n2 = knot_kw_pointwise(cfg.k, R, s, th, step=P["fd_step"])
    elapsed = time.perf_counter() - t0
    path = artifacts.resolve(cfg.out or f"verify_model_k{cfg.k}.csv")
    report = [(name, P["fd_step"], float(np.sqrt(np.mean(v ** 2))), float(v.max()), None)
              for name, v in (("kw_curvature", n1), ("kw_divergence", n2))]
    artifacts.write_csv(path, "verify-model", ("equation", "grid_h", "l2", "sup", "order_estimate"), report)
    samples = path[:-4] + "_samples.csv" if path.endswith(".csv") else path + ".samples.csv"
    rows = [(i, x1[i], R[i], s[i], th[i], n1[i], n2[i]) for i in range(len(R))]
    artifacts.write_csv(samples, "verify-model", ("sample", "x1", "R", "s", "theta", "kw_curvature", "kw_divergence"), rows)
    sup = float(max(n1.max(), n2.max()))
    ok = sup <= cfg.tol
    _emit({"v": 1, "command": "verify-model", "k": cfg.k, "samples": len(R), "sup": sup,
           "rms": float(np.sqrt(np.mean(n1 ** 2 + n2 ** 2))), "tol": cfg.tol, "pass": ok,
           "seconds": round(elapsed, 3), "csv": path, "samples_csv": samples})
    return _status(cfg, ok)


def cmd_emit_model(cfg):
    from .lattice import Grid4, SphericalPatch
    from .models import nahm_pole_field, su2_knot_model

    P = cfg.params
    meta = {"model": P["model"], "n": cfg.n, "axes": "x1,x2,x3,y", "seed": cfg.seed}
    if P["model"] == "nahm":
        grid = Grid4(cfg.shape, cfg.y_range)
        A, Phi = nahm_pole_field(lie.principal_triple(cfg.n), grid)
        arrays = {"A": A.components, "Phi": Phi.components, "y": grid.axis(3)}
        meta.update(shape=list(grid.shape), spacings=list(grid.spacings), y_range=list(grid.y_range),
                    degree={"A": 1, "Phi": 1}, layout="(component, x1, x2, x3, y, n, n) row-major")
        extra = None
    else:
        if cfg.n != 2:
            raise ConfigError("the knot model is implemented for n = 2 only")
        R, s, th, x1 = SphericalPatch(samples=P["samples"]).sample(cfg.seed)
        model = su2_knot_model(cfg.k, R, s, th)
        A, Phi = model.cartesian_forms()
        arrays = {"R": R, "s": s, "theta": th, "x1": x1, "A": A, "Phi": Phi}
        meta.update(k=cfg.k, degree={"A": 1, "Phi": 1}, layout="(component, sample, 2, 2) row-major")
        na, nphi = model.norms()
        extra = [(R[i], s[i], th[i], na[i], nphi[i]) for i in range(len(R))]
    path = artifacts.resolve(cfg.out or f"{P['model']}_model.kwlf")
    artifacts.write_kwlf(path, arrays, meta)
    out = {"v": 1, "command": "emit-model", "file": path, "arrays": sorted(arrays)}
    if extra is not None:
        out["csv"] = artifacts.write_csv(path.rsplit(".", 1)[0] + "_norms.csv", "emit-model",
                                         ("R", "s", "theta", "norm_A", "norm_Phi"), extra)
    _emit(out)
    return EXIT_OK


def cmd_nahm_integrate(cfg):
    P = cfg.params
    t = lie.principal_triple(cfg.n)
    s0 = nahm.NahmState.pole(t, cfg.y0, 1 + cfg.perturb)
    traj = nahm.integrate(s0, cfg.y1, cfg.step, t=t, variable=P["variable"])
    dev = nahm.deviation_profile(traj, t)
    norms = lie.frob(traj.T)
    C = lie.casimir(t)
    every = max(1, P["every"])
    idx = sorted(set(range(0, len(traj), every)) | {len(traj) - 1})
    rows = [(traj.y[i], *norms[i], dev[i], traj.casimir[i], C / traj.y[i] ** 2) for i in idx]
    path = artifacts.resolve(cfg.out)
    artifacts.write_csv(path, "nahm-integrate",
                        ("y", "norm_T1", "norm_T2", "norm_T3", "deviation", "casimir", "casimir_pole"), rows)
    sup = float(dev.max())
    exact_start = cfg.perturb == 0.0
    ok = not traj.truncated and (sup <= cfg.tol if exact_start else True)
    _emit({"v": 1, "command": "nahm-integrate", "n": cfg.n, "steps": len(traj) - 1,
           "pole_deviation": sup, "terminal_error": nahm.terminal_error(traj, t),
           "truncated": traj.truncated, "message": traj.message,
           "tol": cfg.tol if exact_start else None, "pass": ok, "csv": path})
    return _status(cfg, ok)


def _shapes(base, levels):
    return [tuple(v * 2 ** i for v in base) for i in range(levels)]


def cmd_audit(cfg):
    from .audit import random_field_study, refinement_orders

    P = cfg.params
    shapes = _shapes(cfg.shape, cfg.levels)
    study = random_field_study(cfg.seed, shapes, slab=cfg.y_range, n=cfg.n,
                               support=None if P["support"] == "none" else "inner",
                               gauge=P["gauge"], amplitude=P["amplitude"])
    rows, summary, ok = [], {}, True
    for ident, reps in study.items():
        p = refinement_orders(reps) if len(reps) >= 3 else None
        for lvl, r in enumerate(reps):
            last = lvl == len(reps) - 1
            rows.append((ident, lvl, r.h, r.lhs, r.rhs_bulk, r.rhs_boundary, r.gap, r.relative_gap,
                         p if last else None))
            ok &= r.relative_gap <= cfg.tol
        if p is not None:
            ok &= abs(p - 2.0) <= P["order_window"]
        summary[ident] = {"relative_gap": [r.relative_gap for r in reps], "order": p, "note": reps[0].note}
    path = artifacts.resolve(cfg.out)
    artifacts.write_csv(path, "audit-weitzenbock",
                        ("identity", "level", "h", "lhs", "bulk", "boundary", "gap", "relative_gap", "order"), rows)
    _emit({"v": 1, "command": "audit-weitzenbock", "seed": cfg.seed, "shapes": [list(s) for s in shapes],
           "identities": summary, "tol": cfg.tol, "pass": bool(ok), "csv": path})
    return _status(cfg, ok)


def _query(cfg):
    P = cfg.params
    if P.get("query"):
        with open(P["query"]) as fh:
            doc = json.load(fh)
    else:
        doc = {}
    if cfg.g is not None:
        doc["g"] = cfg.g
    if P.get("n_given") or "n" not in doc:
        doc["n"] = cfg.n
    if P.get("weights"):
        doc["points"] = [{"id": p, "weight": list(w)} for p, w in _pairs(P["weights"], "weight")]
    if P.get("vanishing"):
        doc["vanishing_orders"] = {p: list(o) for p, o in _pairs(P["vanishing"], "vanishing order")}
    if P.get("limit"):
        doc["limit"] = P["limit"]
    if P.get("witness"):
        doc["witness"] = P["witness"] == "yes"
    if "g" not in doc:
        raise ConfigError("a genus is required (--g or the query document)")
    return doc


def cmd_knot_admissible(cfg):
    doc = _query(cfg)
    s, _, kd, _, hit = classify.parse_query(doc)
    if s.g < 2:
        raise ConfigError("admissibility is stated for g >= 2; use classify for g <= 1")
    if kd and kd.n != s.n:
        raise ConfigError(f"weights have length {kd.n - 1}, expected {s.n - 1}")
    D = classify.divisor_from_knot_data(kd)
    res = classify.admissibility(D, s)
    out = {"v": 1, "verdict": res.verdict, "g": s.g, "n": s.n, "divisor": str(D), "deg_D": D.degree,
           "count_bound": classify.solution_count_bound(s), "hitchin_component": bool(hit) if hit is not None else None}
    out["deg_L"] = getattr(res, "deg_L", None)
    if cfg.out:
        artifacts.write_json(artifacts.resolve(cfg.out), out)
    _emit(out)
    return EXIT_OK


def cmd_classify(cfg):
    v = classify.classify_query(_query(cfg))
    out = v.to_dict()
    if cfg.out:
        artifacts.write_json(artifacts.resolve(cfg.out), out)
    _emit(out)
    if cfg.params.get("table"):
        sys.stderr.write(v.table() + "\n")
    return EXIT_OK


def _refine_values(cfg):
    """``(rows, analytic)`` for the refine-study quantities, rows = (name, h, value)."""
    from .lattice import Grid4, LatticeField, exterior_d

    P = cfg.params
    q = P["quantity"]
    if q == "weitzenbock":
        from .audit import random_field_study

        study = random_field_study(cfg.seed, _shapes(cfg.shape, cfg.levels),
                                   slab=cfg.y_range or (0.5, 2.0), n=cfg.n)
        rows = []
        for ident, reps in study.items():
            rows += [(f"{ident}_gap", r.h, r.signed_gap) for r in reps]
            for key in reps[0].terms:
                if key not in ("chi_nabla1", "ricci"):
                    rows += [(f"{ident}_{key}", r.h, r.terms[key]) for r in reps]
        return rows, False
    if q == "exterior_d":
        E = lie.su_basis(cfg.n)[0]
        rows = []
        for shape in _shapes(cfg.shape, cfg.levels):
            grid = Grid4(shape, cfg.y_range or (1.0, 2.0))
            X1, X2, X3, Y = grid.mesh()
            f = LatticeField(grid, 0, (np.sin(2 * np.pi * X2) * np.exp(Y))[None, ..., None, None] * E)
            df = exterior_d(f).components
            exact = np.zeros_like(df)
            exact[1] = (2 * np.pi * np.cos(2 * np.pi * X2) * np.exp(Y))[..., None, None] * E
            exact[3] = (np.sin(2 * np.pi * X2) * np.exp(Y))[..., None, None] * E
            rows.append(("exterior_d_sup_error", grid.h, float(np.max(np.abs(df - exact)))))
        return rows, False
    if q == "nahm":
        t = lie.principal_triple(cfg.n)
        s0 = nahm.NahmState.pole(t, cfg.y0 or 0.05)
        rows = []
        for i in range(cfg.levels):
            h = cfg.step / 2 ** i
            tr = nahm.integrate(s0, cfg.y1 or 10.0, h)
            rows.append(("nahm_pole_deviation", h, nahm.pole_deviation(tr, t)))
        return rows, False
    # exact partials: nothing depends on the grid spacing
    from .models import nahm_pole_field
    from .residuals import kw_residual

    rows = []
    for i in range(cfg.levels):
        # the pole is x-independent: refine y only to keep memory flat
        grid = Grid4(tuple(cfg.shape[:3]) + (cfg.shape[3] * 2 ** i,), cfg.y_range or (0.1, 10.0))
        rep = kw_residual(*nahm_pole_field(lie.principal_triple(cfg.n), grid))
        rows.append(("nahm_pole_kw_sup", grid.h, rep.max_sup))
    return rows, True


def refine_study(rows, analytic=False, threshold=1.5):
    """Order table from ``(quantity, h, value)`` rows over >= 3 resolutions.

    Returns rows ``(quantity, level, h, value, order, flag)``; the order is
    the Richardson estimate over the last three resolutions of each
    quantity, and ``flag`` marks orders below ``threshold``.
    """
    from .residuals import richardson_order

    by = {}
    for name, h, val in rows:
        by.setdefault(name, []).append((h, val))
    out = []
    for name, seq in by.items():
        if len(seq) < 3:
            raise ConfigError(f"{name}: a refinement study needs at least 3 resolutions")
        # values that do not move with h (analytic or exactly zero) get no order
        fixed = analytic or len({v for _, v in seq}) == 1
        order = None if fixed else richardson_order(*(v for _, v in seq[-3:]))
        flag = "" if fixed else ("low_order" if not order >= threshold else "")
        for lvl, (h, val) in enumerate(seq):
            last = lvl == len(seq) - 1
            out.append((name, lvl, h, val, order if last else None, flag if last else ""))
    return out


def cmd_refine_study(cfg):
    if cfg.levels < 3:
        raise ConfigError("a refinement study needs at least 3 resolutions")
    rows, analytic = _refine_values(cfg)
    table = refine_study(rows, analytic)
    path = artifacts.resolve(cfg.out)
    artifacts.write_csv(path, "refine-study", ("quantity", "level", "h", "value", "order", "flag"), table)
    flagged = sorted({r[0] for r in table if r[5]})
    orders = {r[0]: r[4] for r in table if r[4] is not None}
    _emit({"v": 1, "command": "refine-study", "quantity": cfg.params["quantity"], "analytic": analytic,
           "orders": orders, "flagged": flagged, "pass": not flagged, "csv": path})
    return _status(cfg, not flagged)


COMMANDS = {
    "verify-model": cmd_verify_model,
    "emit-model": cmd_emit_model,
    "nahm-integrate": cmd_nahm_integrate,
    "audit-weitzenbock": cmd_audit,
    "knot-admissible": cmd_knot_admissible,
    "classify": cmd_classify,
    "refine-study": cmd_refine_study,
}


def run(cfg):
    try:
        return COMMANDS[cfg.command](cfg)
    except ConfigError as e:
        sys.stderr.write(f"error: {e}\n")
        return EXIT_INVALID
    except ValueError as e:
        # model-level precondition failures are input errors
        sys.stderr.write(f"error: {e}\n")
        return EXIT_INVALID


def main(argv=None):
    try:
        cfg = parse(sys.argv[1:] if argv is None else argv)
    except (ConfigError, OSError) as e:
        sys.stderr.write(f"error: {e}\n")
        return EXIT_INVALID
    return run(cfg)


if __name__ == "__main__":
    sys.exit(main())
