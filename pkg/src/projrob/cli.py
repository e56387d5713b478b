"""Command-line front end.

Subcommands cover monotone evaluation, distillation bounds, trade-off
programs, figure/parameter sweeps (CSV + JSON + rendered PNG), conversion
decisions, instrument build/verify/apply, and the discrimination-advantage
audit.  A JSON config file can hold any option; explicit flags win.

Exit codes: 0 success (including certified-infinite values and no-go
verdicts), 1 configuration problems, 2 numerical trouble.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys

import numpy as np

from . import __version__, discrimination, figures, protocols
from .distill import (
    distillation_report,
    isotropic_nogo_check,
    overhead_bound,
    solve_HP,
    solve_HP_aff,
    solve_HP_eps,
    solve_Theta_p,
)
from .errors import (
    CertificateError,
    ConfigError,
    DomainError,
    DualDegenerateError,
    NoGoError,
    ProjrobError,
    SolverError,
    TheoremViolationError,
)
from .free_sets import FreeSetSpec, _mat_from_json
from .monotones import (
    free_projective_robustness,
    generalized_robustness,
    projective_robustness,
    pure_overlap,
    standard_robustness,
    support_overlap,
    weight,
)
from .operators import HermitianOperator, QuantumState, n_copies, state_factory
from .solver import SolveOptions, Status

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 1, 2


class _Parser(argparse.ArgumentParser):
    """argparse that reports bad usage as a config error (exit 1, not 2)."""

    def error(self, message):
        raise ConfigError(message)


# ---------------------------------------------------------------------------
# spec parsing


def _load_doc(text: str) -> dict:
    if text.startswith("@"):
        try:
            with open(text[1:]) as fh:
                return json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read JSON from {text[1:]!r}: {exc}") from exc
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"inline JSON is malformed: {exc}") from exc


def parse_state(spec: str, copies: int = 1) -> QuantumState:
    """State from a factory spec like ``isotropic:0.4,2`` or operator JSON."""
    spec = spec.strip()
    if spec.startswith("{") or spec.startswith("@"):
        doc = _load_doc(spec)
        try:
            mat = _mat_from_json(doc)
            bp = tuple(doc["bipartition"]) if "bipartition" in doc else None
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"bad operator JSON: {exc}") from exc
        st = QuantumState(HermitianOperator(mat, bp))
    else:
        name, _, argstr = spec.partition(":")
        args = [a for a in argstr.split(",") if a] if argstr else []
        try:
            if name == "isotropic":
                st = state_factory("isotropic", gamma=float(args[0]),
                                   d=int(args[1]) if len(args) > 1 else 2)
            elif name == "bell":
                st = state_factory("maximally_entangled", m=int(args[0]))
            elif name == "coherent":
                st = state_factory("maximally_coherent", m=int(args[0]))
            elif name in ("figure3a", "figure3b"):
                st = state_factory(name)
            else:
                raise ConfigError(
                    f"unknown state spec {name!r}; use isotropic:g[,d], bell:m, "
                    "coherent:m, figure3a, figure3b, inline JSON, or @file"
                )
        except (IndexError, ValueError) as exc:
            raise ConfigError(f"bad parameters in state spec {spec!r}: {exc}") from exc
    if copies > 1:
        st = n_copies(st, copies)
    return st


def parse_theory(spec: str) -> FreeSetSpec:
    """Theory from ``ppt:2,2`` / ``incoherent:3`` / ``real:3`` or JSON."""
    spec = spec.strip()
    if spec.startswith("{") or spec.startswith("@"):
        return FreeSetSpec.from_json(_load_doc(spec))
    name, _, argstr = spec.partition(":")
    args = [a for a in argstr.split(",") if a] if argstr else []
    try:
        if name == "ppt":
            return FreeSetSpec.ppt(int(args[0]), int(args[1]))
        if name == "incoherent":
            return FreeSetSpec.incoherent(int(args[0]))
        if name == "real":
            return FreeSetSpec.real(int(args[0]))
    except (IndexError, ValueError) as exc:
        raise ConfigError(f"bad parameters in theory spec {spec!r}: {exc}") from exc
    if name in ("single", "polytope"):
        raise ConfigError(f"{name} theories need a JSON spec (sigma0/vertices)")
    raise ConfigError(f"unknown theory spec {spec!r}")


def _parse_grid(spec: str):
    spec = spec.strip()
    if ":" in spec:
        try:
            a, b, n = spec.split(":")
            return [float(x) for x in np.round(np.linspace(float(a), float(b), int(n)), 10)]
        except ValueError as exc:
            raise ConfigError(f"bad grid {spec!r}; use start:stop:count") from exc
    try:
        return [float(x) for x in spec.split(",") if x]
    except ValueError as exc:
        raise ConfigError(f"bad grid {spec!r}") from exc


def _parse_t(raw):
    if raw is None:
        return None
    if isinstance(raw, str) and raw.strip().lower() in ("inf", "infinity"):
        return math.inf
    try:
        return float(raw)
    except ValueError as exc:
        raise ConfigError(f"bad cover scale {raw!r}") from exc


def _fmt_value(x: float) -> str:
    if math.isinf(x):
        return "infinite (certified)" if x > 0 else "-infinite (certified)"
    return f"{x:.10g}"


def _round_mat(M, nd=6):
    return np.round(np.asarray(M), nd).tolist()


# ---------------------------------------------------------------------------
# config merging


def _merge(args: argparse.Namespace, keys) -> dict:
    """Config-file values filled in wherever the flag was left unset."""
    cfg = {}
    if getattr(args, "config", None):
        doc = _load_doc("@" + args.config if not args.config.startswith("@") else args.config)
        if not isinstance(doc, dict):
            raise ConfigError("config file must hold a JSON object")
        cfg = doc
    out = {}
    for key in keys:
        flag = getattr(args, key, None)
        out[key] = flag if flag is not None else cfg.get(key)
    return out


def _opts(args) -> SolveOptions:
    kw = {}
    if getattr(args, "tol_gap", None) is not None:
        kw["tol_gap"] = args.tol_gap
    if getattr(args, "tol_feas", None) is not None:
        kw["tol_feas"] = args.tol_feas
    if getattr(args, "max_iter", None) is not None:
        kw["max_iter"] = args.max_iter
    return SolveOptions(**kw)


# ---------------------------------------------------------------------------
# subcommands

_MONOTONES = {
    "robustness": generalized_robustness,
    "standard-robustness": standard_robustness,
    "weight": weight,
    "omega": projective_robustness,
    "omega-free": free_projective_robustness,
}
_SCALAR_MONOTONES = {
    "support-overlap": support_overlap,
    "pure-overlap": pure_overlap,
}


def _cmd_monotone(args) -> int:
    p = _merge(args, ("state", "theory"))
    if not p["state"] or not p["theory"]:
        raise ConfigError("monotone needs --state and --theory")
    rho = parse_state(p["state"], args.copies)
    F = parse_theory(p["theory"])
    opts = _opts(args)
    if args.name in _SCALAR_MONOTONES:
        value = _SCALAR_MONOTONES[args.name](rho.mat, F, opts=opts)
        doc = {"monotone": args.name, "value": value, "status": "optimal"}
        code = EXIT_OK
    else:
        mv = _MONOTONES[args.name](rho.mat, F, opts)
        certified = (not mv.trouble) and math.isinf(mv.value)
        doc = {
            "monotone": args.name,
            "value": None if math.isnan(mv.value) else
                     ("inf" if math.isinf(mv.value) else mv.value),
            "status": mv.status.name.lower() if hasattr(mv.status, "name") else str(mv.status),
            "certified_infinite": certified,
        }
        if args.optimizers and mv.optimizer_sigma is not None:
            doc["optimizer"] = _round_mat(mv.optimizer_sigma)
        if args.optimizers and mv.dual_A is not None:
            doc["dual_A"] = _round_mat(mv.dual_A)
            doc["dual_B"] = _round_mat(mv.dual_B) if mv.dual_B is not None else None
        code = EXIT_NUMERIC if mv.trouble else EXIT_OK
    if args.json:
        print(json.dumps(doc, indent=2, sort_keys=True))
        return code
    val = doc["value"]
    print(f"value: {_fmt_value(float('inf')) if val == 'inf' else val}")
    print(f"status: {doc['status']}")
    if doc.get("certified_infinite"):
        print("witness: independently verified")
    for key in ("optimizer", "dual_A", "dual_B"):
        if doc.get(key) is not None:
            print(f"{key}: {doc[key]}")
    return code


def _cmd_bound(args) -> int:
    p = _merge(args, ("state", "theory", "target", "eps", "mode"))
    for need in ("state", "theory", "target"):
        if not p[need]:
            raise ConfigError(f"bound needs --{need}")
    rho = parse_state(p["state"], args.copies)
    F = parse_theory(p["theory"])
    phi = parse_state(p["target"])
    opts = _opts(args)
    mode = p["mode"] or "general"
    rep = distillation_report(rho.mat, phi.mat, F, mode, opts)
    doc = {
        "overlap": rep.overlap,
        "omega": "inf" if math.isinf(rep.omega) else rep.omega,
        "error_floor": rep.lower_error,
        "achievable_error": rep.achievable,
        "eigenvalue_floor": rep.floors.eigenvalue,
        "exact": rep.exact,
        "verdict": rep.verdict,
    }
    if p["eps"] is not None:
        n = overhead_bound(rho.mat, phi.mat, F, float(p["eps"]), opts)
        doc["copies_needed"] = "inf" if math.isinf(n) else n
    if args.nogo is not None:
        e1, e2 = (float(x) for x in args.nogo)
        v = isotropic_nogo_check(phi.mat, F, e1, e2, mode, opts)
        doc["nogo"] = {"verdict": v.verdict, "available": v.available,
                       "required": v.required}
    if args.json:
        print(json.dumps(doc, indent=2, sort_keys=True))
    else:
        for k, v in doc.items():
            print(f"{k}: {v}")
    return EXIT_OK


_TRADEOFFS = {"H_P": solve_HP, "H_P_aff": solve_HP_aff,
              "H_eps": solve_HP_eps, "Theta_p": solve_Theta_p}


def _cmd_tradeoff(args) -> int:
    p = _merge(args, ("program", "state", "theory", "target", "p", "eps", "t", "mode"))
    if p["program"] not in _TRADEOFFS:
        raise ConfigError(f"--program must be one of {tuple(_TRADEOFFS)}")
    if not p["state"] or not p["theory"]:
        raise ConfigError("tradeoff needs --state and --theory")
    rho = parse_state(p["state"], args.copies)
    F = parse_theory(p["theory"])
    opts = _opts(args)
    t = _parse_t(p["t"])
    prog = p["program"]
    if prog in ("H_P", "H_P_aff"):
        if t is None:
            raise ConfigError(f"{prog} needs --t")
        res = _TRADEOFFS[prog](rho.mat, F, t, opts)
    else:
        if not p["target"]:
            raise ConfigError(f"{prog} needs --target")
        phi = parse_state(p["target"])
        kw = {"opts": opts}
        if p["mode"]:
            kw["mode"] = p["mode"]
        if prog == "H_eps":
            if p["eps"] is None:
                raise ConfigError("H_eps needs --eps")
            res = solve_HP_eps(rho.mat, phi.mat, F, float(p["eps"]), t, **kw)
        else:
            if p["p"] is None:
                raise ConfigError("Theta_p needs --p")
            res = solve_Theta_p(rho.mat, phi.mat, F, float(p["p"]), t, **kw)
    doc = {"program": res.program, "t": "inf" if math.isinf(res.t) else res.t,
           "value": res.value, "p": res.p, "eps": res.eps, "gap": res.gap}
    if args.json:
        print(json.dumps(doc, indent=2, sort_keys=True))
    else:
        for k, v in doc.items():
            print(f"{k}: {v}")
    return EXIT_OK


def _cmd_sweep(args) -> int:
    p = _merge(args, ("figure", "program", "sweep", "grid", "state", "target",
                      "theory", "p", "eps", "t", "out", "format"))
    outdir = p["out"] or "."
    os.makedirs(outdir, exist_ok=True)
    opts = _opts(args)
    if p["figure"]:
        fig = p["figure"]
        if fig in figures.SLOW_FIGURES and not args.slow:
            raise ConfigError(f"figure {fig} runs 64-dim programs; pass --slow to enable")
        grid = _parse_grid(p["grid"]) if p["grid"] else None
        kw = {"gammas": grid} if fig.startswith("2") else {"ps": grid}
        result = figures.figure_sweep(fig, opts, jobs=args.jobs, **kw)
        stem = os.path.join(outdir, f"figure_{fig}")
    elif p["program"]:
        if not p["theory"] or not p["sweep"] or not p["grid"]:
            raise ConfigError("program sweeps need --theory, --sweep, and --grid")
        F = parse_theory(p["theory"])
        rho = parse_state(p["state"], args.copies).mat if p["state"] else None
        phi = parse_state(p["target"]).mat if p["target"] else None
        result = figures.tradeoff_sweep(
            p["program"], F, p["sweep"], _parse_grid(p["grid"]),
            rho=rho, phi=phi,
            p=float(p["p"]) if p["p"] is not None else None,
            eps=float(p["eps"]) if p["eps"] is not None else None,
            t=_parse_t(p["t"]), gamma_copies=args.copies,
            opts=opts, jobs=args.jobs,
        )
        stem = os.path.join(outdir, f"sweep_{p['program']}_{p['sweep']}")
    else:
        raise ConfigError("sweep needs either --figure or --program")
    fmt = p["format"] or "both"
    written = []
    if fmt in ("csv", "both"):
        figures.write_csv(result, stem + ".csv")
        written.append(stem + ".csv")
    if fmt in ("json", "both"):
        figures.write_json(result, stem + ".json")
        written.append(stem + ".json")
    figures.render_png(result, stem + ".png")
    written.append(stem + ".png")
    bad = [r for r in result.rows if "trouble" in str(r[-1] if p["program"] else r[-1])]
    for path in written:
        print(f"wrote: {path}")
    print(f"rows: {len(result.rows)}  troubled: {len(bad)}")
    return EXIT_NUMERIC if bad else EXIT_OK


def _cmd_decide(args) -> int:
    p = _merge(args, ("state", "target", "theory", "theory_class"))
    for need in ("state", "target", "theory"):
        if not p[need]:
            raise ConfigError(f"decide needs --{need}")
    rho = parse_state(p["state"], args.copies)
    phi = parse_state(p["target"])
    F = parse_theory(p["theory"])
    verdict = protocols.convertibility_decision(rho.mat, phi.mat, F,
                                                p["theory_class"], _opts(args))
    doc = {"verdict": verdict.verdict,
           "evidence": {k: ("inf" if isinstance(v, float) and math.isinf(v) else v)
                        for k, v in verdict.evidence.items()}}
    if args.json:
        print(json.dumps(doc, indent=2, sort_keys=True))
    else:
        print(f"verdict: {verdict.verdict}")
        for k, v in doc["evidence"].items():
            print(f"  {k}: {v}")
    return EXIT_OK


def _print_certificate(cert: protocols.FreenessCertificate) -> None:
    print(f"certification: {cert.method}")
    print(f"max violation: {cert.max_violation:.3e}")
    print(f"passed: {cert.passed}")
    for c in cert.checks:
        print(f"  [{c.violation:.3e}] {c.label}")


def _cmd_protocol(args) -> int:
    action = args.action
    opts = _opts(args)
    if action == "build":
        p = _merge(args, ("kind", "state", "target", "theory", "p", "t", "mode"))
        for need in ("kind", "state", "target", "theory"):
            if not p[need]:
                raise ConfigError(f"protocol build needs --{need}")
        rho = parse_state(p["state"], args.copies)
        phi = parse_state(p["target"])
        F = parse_theory(p["theory"])
        if p["kind"] == "distill":
            if p["p"] is None:
                raise ConfigError("distill builds need --p")
            res = solve_Theta_p(rho.mat, phi.mat, F, float(p["p"]),
                                _parse_t(p["t"]), opts=opts)
            built = protocols.build_distillation_map(res.W.mat, res.Z.mat,
                                                     phi.mat, F, res.t, opts=opts)
        elif p["kind"] == "convert":
            try:
                built = protocols.build_conversion_map(rho.mat, phi.mat, F,
                                                       p["mode"], opts=opts)
            except NoGoError as exc:
                print(f"no-go: {exc}")
                if exc.witness:
                    print(f"witness: {exc.witness}")
                return EXIT_OK
            if isinstance(built, protocols.AsymptoticFlag):
                print(f"asymptotic-only: {built.message}")
                return EXIT_OK
        else:
            raise ConfigError("--kind must be distill or convert")
        dest = args.out or "map.json"
        with open(dest, "w") as fh:
            json.dump(built.to_json(), fh, indent=2, sort_keys=True)
            fh.write("\n")
        print(f"wrote: {dest}")
        print(f"effects: {len(built.effects)}")
        cert = protocols.verify_free(built, F, opts=opts)
        _print_certificate(cert)
        return EXIT_OK
    if action == "verify":
        p = _merge(args, ("map", "theory", "theory_out"))
        if not p["map"] or not p["theory"]:
            raise ConfigError("protocol verify needs --map and --theory")
        built = protocols.MeasurePrepareMap.from_json(_load_doc("@" + p["map"]))
        F_in = parse_theory(p["theory"])
        F_out = parse_theory(p["theory_out"]) if p["theory_out"] else None
        cert = protocols.verify_free(built, F_in, F_out, opts)
        _print_certificate(cert)
        return EXIT_OK
    if action == "apply":
        p = _merge(args, ("map", "state"))
        if not p["map"] or not p["state"]:
            raise ConfigError("protocol apply needs --map and --state")
        built = protocols.MeasurePrepareMap.from_json(_load_doc("@" + p["map"]))
        rho = parse_state(p["state"], args.copies)
        prob, out = protocols.apply_map(built, rho.mat)
        doc = {"probability": prob,
               "output": None if out is None else _round_mat(out.mat.real),
               "output_imag": None if out is None else _round_mat(out.mat.imag)}
        if args.json:
            print(json.dumps(doc, indent=2, sort_keys=True))
        else:
            print(f"probability: {prob:.10g}")
            print("output: null" if out is None else f"output: {doc['output']}")
        return EXIT_OK
    raise ConfigError(f"unknown protocol action {action!r}")


def _cmd_discriminate(args) -> int:
    p = _merge(args, ("state", "theory", "random", "seed"))
    if not p["state"] or not p["theory"]:
        raise ConfigError("discriminate needs --state and --theory")
    rho = parse_state(p["state"], args.copies)
    F = parse_theory(p["theory"])
    opts = _opts(args)
    n_random = int(p["random"]) if p["random"] is not None else 20
    seed = int(p["seed"]) if p["seed"] is not None else 0
    try:
        rep = discrimination.verify_advantage_theorem(rho.mat, F, n_random, seed, opts)
    except DomainError as exc:
        print("omega: infinite (certified)")
        print(f"advantage: unbounded ({exc})")
        return EXIT_OK
    doc = {"omega": rep.omega, "constructed_ratio": rep.constructed_ratio,
           "random_trials": rep.random_trials,
           "max_random_ratio": rep.max_random_ratio}
    if args.json:
        print(json.dumps(doc, indent=2, sort_keys=True))
    else:
        print(f"omega: {rep.omega:.10g}")
        print(f"constructed ratio: {rep.constructed_ratio:.10g}")
        print(f"audit: {rep.random_trials} random instances, "
              f"max ratio {rep.max_random_ratio:.10g} (never above omega)")
    return EXIT_OK


# ---------------------------------------------------------------------------
# wiring


def _add_common(sp, state=True, theory=True, target=False):
    sp.add_argument("--config", help="JSON config file; flags override its fields")
    if state:
        sp.add_argument("--state", help="state spec (factory, inline JSON, or @file)")
    if theory:
        sp.add_argument("--theory", help="theory spec (compact, inline JSON, or @file)")
    if target:
        sp.add_argument("--target", help="target-state spec")
    sp.add_argument("--copies", type=int, default=1,
                    help="tensor copies of the input state")
    sp.add_argument("--tol-gap", type=float, dest="tol_gap")
    sp.add_argument("--tol-feas", type=float, dest="tol_feas")
    sp.add_argument("--max-iter", type=int, dest="max_iter")
    sp.add_argument("--json", action="store_true", help="JSON output")


def build_parser() -> _Parser:
    ap = _Parser(prog="projrob", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("monotone", parents=[], help="evaluate a resource monotone")
    sp.add_argument("name", choices=sorted({**_MONOTONES, **_SCALAR_MONOTONES}))
    _add_common(sp)
    sp.add_argument("--optimizers", action="store_true",
                    help="print optimizer and dual witnesses")
    sp.set_defaults(fn=_cmd_monotone)

    sp = sub.add_parser("bound", help="distillation error floors and overheads")
    _add_common(sp, target=True)
    sp.add_argument("--eps", type=float, help="error target for the copy-count bound")
    sp.add_argument("--mode", choices=("general", "affine"))
    sp.add_argument("--nogo", nargs=2, metavar=("EPS", "EPS2"),
                    help="audit an error-improvement step between two levels")
    sp.set_defaults(fn=_cmd_bound)

    sp = sub.add_parser("tradeoff", help="solve one probability/error program")
    _add_common(sp, target=True)
    sp.add_argument("--program", choices=sorted(_TRADEOFFS))
    sp.add_argument("--p", type=float)
    sp.add_argument("--eps", type=float)
    sp.add_argument("--t", help="cover scale (number or 'inf')")
    sp.add_argument("--mode", choices=("ineq", "aff"))
    sp.set_defaults(fn=_cmd_tradeoff)

    sp = sub.add_parser("sweep", help="figure or parameter sweeps to CSV/JSON/PNG")
    _add_common(sp, target=True)
    sp.add_argument("--figure", choices=figures.FIGURES)
    sp.add_argument("--program", choices=sorted(_TRADEOFFS))
    sp.add_argument("--sweep", choices=("gamma", "p", "eps"),
                    help="swept parameter for program sweeps")
    sp.add_argument("--grid", help="start:stop:count or comma list")
    sp.add_argument("--p", type=float)
    sp.add_argument("--eps", type=float)
    sp.add_argument("--t")
    sp.add_argument("--out", help="output directory (default .)")
    sp.add_argument("--format", choices=("csv", "json", "both"))
    sp.add_argument("--slow", action="store_true", help="enable the 64-dim figure")
    sp.add_argument("--jobs", type=int, default=1, help="worker pool size")
    sp.set_defaults(fn=_cmd_sweep)

    sp = sub.add_parser("decide", help="convertibility verdict for a state pair")
    _add_common(sp, target=True)
    sp.add_argument("--theory-class", dest="theory_class",
                    choices=("affine", "general"))
    sp.set_defaults(fn=_cmd_decide)

    sp = sub.add_parser("protocol", help="build, verify, or apply an instrument")
    sp.add_argument("action", choices=("build", "verify", "apply"))
    _add_common(sp, target=True)
    sp.add_argument("--kind", choices=("distill", "convert"))
    sp.add_argument("--p", type=float)
    sp.add_argument("--t")
    sp.add_argument("--mode", choices=("affine", "general"))
    sp.add_argument("--map", help="instrument JSON file")
    sp.add_argument("--theory-out", dest="theory_out",
                    help="output-side theory for verification")
    sp.add_argument("--out", help="destination for built maps (default map.json)")
    sp.set_defaults(fn=_cmd_protocol)

    sp = sub.add_parser("discriminate",
                        help="discrimination/exclusion advantage audit")
    _add_common(sp)
    sp.add_argument("--random", type=int, help="random audit instances (default 20)")
    sp.add_argument("--seed", type=int, help="audit RNG seed (default 0)")
    sp.set_defaults(fn=_cmd_discriminate)

    return ap


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        return args.fn(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (DomainError, NoGoError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (SolverError, DualDegenerateError, CertificateError,
            TheoremViolationError) as exc:
        print(f"numerical trouble: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except ProjrobError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
