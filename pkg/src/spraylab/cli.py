"""Command-line front end.

Exit codes: 0 success, 1 verification failure, 2 configuration error,
3 domain or dimension error, 4 numerical failure, 5 file error.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import catalog, completeness, diffops, geodesics, pathspace, projective, verification
from .core import SprayField, TangentState, eval_spray
from .errors import BadParams, ConfigError, SprayError, UnknownLabel

EXIT_OK = 0
EXIT_VERIFY_FAILED = 1
EXIT_CONFIG = 2
EXIT_IO = 5

CONFIG_KEYS = {"spray", "initial", "t_end", "factor", "family", "strategy", "settings", "suite", "samples"}
SPRAY_KEYS = {"label", "params", "n"}
SETTINGS_KEYS = {
    "rtol",
    "atol",
    "residual_bound",
    "max_step",
    "horizon",
    "blowup_norm",
    "probe_rtol",
    "sample_count",
    "probe",
}


@dataclass
class RunConfig:
    """Merged configuration; see README for every key and default."""

    spray: dict = field(default_factory=lambda: {"label": "flat", "params": {}, "n": 2})
    initial: Optional[dict] = None
    t_end: float = 1.0
    factor: Optional[dict] = None
    family: Optional[dict] = None
    strategy: Optional[str] = None
    settings: dict = field(default_factory=dict)
    suite: str = "all"
    samples: Optional[list] = None


def _spec(obj, what: str) -> dict:
    if isinstance(obj, str):
        return {"label": obj, "params": {}}
    if not isinstance(obj, dict):
        raise ConfigError(f"{what} must be a label or an object")
    unknown = set(obj) - SPRAY_KEYS
    if unknown:
        raise ConfigError(f"unknown keys in {what}: {sorted(unknown)}")
    if "label" not in obj:
        raise ConfigError(f"{what} needs a label")
    params = obj.get("params", {}) or {}
    if not isinstance(params, dict):
        raise ConfigError(f"{what}.params must be an object")
    out = {"label": str(obj["label"]), "params": dict(params)}
    if "n" in obj:
        out["n"] = obj["n"]
    return out


def load_config(path: Optional[str]) -> RunConfig:
    cfg = RunConfig()
    if not path:
        return cfg
    try:
        with open(path) as fh:
            raw = json.load(fh)
    except OSError as exc:
        raise _IOFailure(f"cannot read config {path}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from None
    if not isinstance(raw, dict):
        raise ConfigError("config must be a JSON object")
    unknown = set(raw) - CONFIG_KEYS
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    if "spray" in raw:
        cfg.spray = _spec(raw["spray"], "spray")
    if "factor" in raw:
        cfg.factor = _spec(raw["factor"], "factor")
    if "family" in raw:
        cfg.family = _spec(raw["family"], "family")
    if "initial" in raw:
        ini = raw["initial"]
        if not isinstance(ini, dict) or set(ini) != {"x", "y"}:
            raise ConfigError("initial must be an object with exactly the keys x and y")
        cfg.initial = {"x": _vector(ini["x"], "initial.x"), "y": _vector(ini["y"], "initial.y")}
    if "t_end" in raw:
        cfg.t_end = _number(raw["t_end"], "t_end")
    if "strategy" in raw:
        cfg.strategy = str(raw["strategy"])
    if "suite" in raw:
        cfg.suite = str(raw["suite"])
    if "settings" in raw:
        st = raw["settings"]
        if not isinstance(st, dict):
            raise ConfigError("settings must be an object")
        unknown = set(st) - SETTINGS_KEYS
        if unknown:
            raise ConfigError(f"unknown settings keys: {sorted(unknown)}")
        cfg.settings = dict(st)
    if "samples" in raw:
        cfg.samples = [(_vector(s["x"], "samples.x"), _vector(s["y"], "samples.y")) for s in raw["samples"]]
    return cfg


class _IOFailure(Exception):
    pass


def _number(v, what):
    try:
        out = float(v)
    except (TypeError, ValueError):
        raise ConfigError(f"{what} must be a number, got {v!r}") from None
    if not math.isfinite(out):
        raise ConfigError(f"{what} must be finite")
    return out


def _vector(v, what):
    if isinstance(v, str):
        v = [p for p in v.replace(" ", "").split(",") if p]
    if not isinstance(v, (list, tuple)) or not v:
        raise ConfigError(f"{what} must be a non-empty list of numbers")
    return [_number(e, what) for e in v]


def _params(pairs):
    out = {}
    for item in pairs or []:
        if "=" not in item:
            raise ConfigError(f"parameter {item!r} must look like name=value")
        k, v = item.split("=", 1)
        out[k.strip()] = v.strip()
    return out


# -- object resolution ----------------------------------------------------


def _numeric_params(params):
    out = {}
    for k, v in params.items():
        try:
            out[k] = float(v) if k != "n" else int(float(v))
        except (TypeError, ValueError):
            raise BadParams(f"parameter {k} must be numeric, got {v!r}") from None
    return out


def resolve_spray(spec: dict, settings: Optional[dict] = None) -> SprayField:
    """``label``, ``pathspace:<family>`` or ``completed:<base>+<strategy>``."""
    label = spec["label"]
    params = dict(spec.get("params", {}))
    n = int(spec.get("n", params.pop("n", 2)))
    if label.startswith("pathspace:"):
        fam = pathspace.named_family(label.split(":", 1)[1], **_family_params(label, params, n))
        return pathspace.construct_spray(fam)
    if label.startswith("completed:"):
        body = label.split(":", 1)[1]
        if "+" not in body:
            raise ConfigError("completed sprays are written completed:<base>+<strategy>")
        base_label, strat = body.rsplit("+", 1)
        base = resolve_spray({"label": base_label, "params": params, "n": n})
        strategy = completeness.named_strategy(strat)
        return completeness.make_complete(base, strategy, completeness.CompletionSettings(probe=probe_settings(settings or {})))
    return catalog.named_spray(label, n=n, **params)


def _family_params(label, params, n):
    p = _numeric_params(params)
    name = label.split(":", 1)[1]
    if name in ("lines", "ball_arcs", "circles") and "n" not in p and n != 2:
        p["n"] = n
    return p


def resolve_factor(spec: dict):
    params = dict(spec.get("params", {}))
    if "n" in spec:
        params["n"] = spec["n"]
    return catalog.named_factor(spec["label"], **params)


def integrator_settings(s: dict) -> geodesics.IntegratorSettings:
    kw = {k: float(s[k]) for k in ("rtol", "atol", "residual_bound", "max_step", "blowup_norm") if k in s}
    return geodesics.IntegratorSettings(**kw)


def probe_settings(s: dict) -> geodesics.ProbeSettings:
    kw = {}
    if "horizon" in s:
        kw["horizon"] = float(s["horizon"])
    if "probe_rtol" in s:
        kw["rtol"] = float(s["probe_rtol"])
    if "blowup_norm" in s:
        kw["blowup_norm"] = float(s["blowup_norm"])
    extra = s.get("probe", {})
    if not isinstance(extra, dict):
        raise ConfigError("settings.probe must be an object")
    allowed = set(geodesics.ProbeSettings.__dataclass_fields__)
    unknown = set(extra) - allowed
    if unknown:
        raise ConfigError(f"unknown probe settings: {sorted(unknown)}")
    kw.update({k: (int(v) if k == "max_steps" else float(v)) for k, v in extra.items()})
    return geodesics.ProbeSettings(**kw)


# -- output ---------------------------------------------------------------


def _clean(obj):
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return v
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def dumps(obj) -> str:
    """Deterministic JSON with shortest round-trip floats."""
    return json.dumps(_clean(obj), sort_keys=True, indent=2)


def _emit(args, payload, text=None, filename=None):
    out = dumps(payload)
    if filename and args.out:
        _write(os.path.join(args.out, filename), out + "\n")
    if args.json or text is None:
        print(out)
    else:
        print(text)


def _write(path, content):
    try:
        os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
        with open(path, "w") as fh:
            fh.write(content)
    except OSError as exc:
        raise _IOFailure(f"cannot write {path}: {exc.strerror}") from None


# -- commands ---------------------------------------------------------------


def _merge(args) -> RunConfig:
    cfg = load_config(args.config)
    if getattr(args, "spray", None):
        cfg.spray = {"label": args.spray, "params": _params(args.param)}
    elif getattr(args, "param", None):
        cfg.spray = {**cfg.spray, "params": {**cfg.spray.get("params", {}), **_params(args.param)}}
    if getattr(args, "dim", None):
        cfg.spray = {**cfg.spray, "n": args.dim}
    if getattr(args, "x", None) is not None or getattr(args, "y", None) is not None:
        if args.x is None or args.y is None:
            raise ConfigError("--x and --y must be given together")
        cfg.initial = {"x": _vector(args.x, "--x"), "y": _vector(args.y, "--y")}
    if getattr(args, "t_end", None) is not None:
        cfg.t_end = args.t_end
    if getattr(args, "factor", None):
        cfg.factor = {"label": args.factor, "params": _params(args.factor_param)}
    if getattr(args, "family", None):
        cfg.family = {"label": args.family, "params": _params(args.param)}
    if getattr(args, "strategy", None):
        cfg.strategy = args.strategy
    if getattr(args, "suite", None):
        cfg.suite = args.suite
    return cfg


def _state(cfg: RunConfig) -> TangentState:
    if cfg.initial is None:
        raise ConfigError("an initial state is required (--x/--y or initial in the config)")
    return TangentState(cfg.initial["x"], cfg.initial["y"])


def _listing():
    return {
        "sprays": sorted(catalog.SPRAYS),
        "factors": sorted(catalog.FACTORS),
        "families": sorted(pathspace.FAMILIES),
        "strategies": sorted(completeness.STRATEGIES),
        "suites": list(verification.SUITES),
    }


def cmd_list(args) -> int:
    data = _listing()
    if args.what:
        if args.what not in data:
            raise UnknownLabel(f"nothing called {args.what!r} to list; choose from {sorted(data)}")
        data = {args.what: data[args.what]}
    if args.json:
        payload = data[args.what] if args.what else data
        print(dumps(payload))
    else:
        for key, items in data.items():
            print(f"{key}:")
            for item in items:
                print(f"  {item}")
    return EXIT_OK


def cmd_eval(args) -> int:
    cfg = _merge(args)
    spray = resolve_spray(cfg.spray, cfg.settings)
    st = _state(cfg)
    G = eval_spray(spray, st)
    payload = {"spray": spray.label, "x": st.x, "y": st.y, "G": G}
    _emit(args, payload, "G = " + " ".join(repr(float(g)) for g in G), "eval.json")
    return EXIT_OK


def cmd_curvature(args) -> int:
    cfg = _merge(args)
    spray = resolve_spray(cfg.spray, cfg.settings)
    st = _state(cfg)
    rep = diffops.riemann_curvature(spray, st, args.scheme)
    iso = diffops.isotropy_decompose(rep)
    payload = {
        "spray": spray.label,
        "x": st.x,
        "y": st.y,
        "R": rep.R,
        "ric": rep.ric,
        "scheme_error": rep.scheme_error,
        "isotropy": {"R": iso.R_scalar, "tau": iso.tau, "residual": iso.residual},
    }
    if args.ricci_derivative:
        d, err = diffops.ricci_horizontal_derivative(spray, st, args.scheme, with_error=True)
        payload["ric_horizontal_derivative"] = d
        payload["ric_horizontal_derivative_error"] = err
    _emit(args, payload, f"Ric = {rep.ric!r}", "curvature.json")
    return EXIT_OK


def _interval_record(est):
    return {
        "a": est.a,
        "b": est.b,
        "left_status": est.left_status,
        "right_status": est.right_status,
        "refinement_error": est.refinement_error,
    }


def cmd_geodesic(args) -> int:
    cfg = _merge(args)
    spray = resolve_spray(cfg.spray, cfg.settings)
    st = _state(cfg)
    traj = geodesics.integrate(spray, st, cfg.t_end, integrator_settings(cfg.settings))
    summary = {
        "spray": spray.label,
        "t_end": cfg.t_end,
        "samples": len(traj),
        "max_residual": traj.max_residual,
        "status": traj.status,
        "truncated": traj.truncated,
        "final_t": traj.t[-1],
        "tolerances": traj.tolerances,
    }
    if not args.no_probe:
        summary.update(_interval_record(geodesics.probe_maximal_interval(spray, st, probe_settings(cfg.settings))))
    header, rows = geodesics.trajectory_rows(traj)
    csv_text = "\n".join(",".join(r) for r in [header] + rows) + "\n"
    if args.out:
        _write(os.path.join(args.out, "trajectory.csv"), csv_text)
        _write(os.path.join(args.out, "summary.json"), dumps(summary) + "\n")
        print(dumps(summary) if args.json else f"wrote {len(rows)} rows to {os.path.join(args.out, 'trajectory.csv')}")
    elif args.json:
        print(dumps(summary))
    else:
        sys.stdout.write(csv_text)
    return EXIT_OK


def cmd_probe(args) -> int:
    cfg = _merge(args)
    spray = resolve_spray(cfg.spray, cfg.settings)
    st = _state(cfg)
    est = geodesics.probe_maximal_interval(spray, st, probe_settings(cfg.settings))
    payload = {"spray": spray.label, "x": st.x, "y": st.y, **_interval_record(est)}
    _emit(args, payload, f"({est.a!r}, {est.b!r}) {est.left_status}/{est.right_status}", "probe.json")
    return EXIT_OK


def _family_states(fam, count, seed):
    rng = np.random.default_rng(seed)
    dom = fam.graph_form.domain if fam.form == "offset" and fam.graph_form is not None else fam.domain
    return verification.random_states(dom, count, rng, radius=0.6)


def cmd_construct(args) -> int:
    cfg = _merge(args)
    if cfg.family is None:
        raise ConfigError("construct needs --family or family in the config")
    fam = pathspace.named_family(cfg.family["label"], **_numeric_params(cfg.family.get("params", {})))
    spray = pathspace.construct_spray(fam)
    count = int(cfg.settings.get("sample_count", 5))
    states = _family_states(fam, count, args.seed)
    axioms = pathspace.axioms_check(fam, states)
    graph = fam.graph_form if fam.form == "offset" else fam
    sol = pathspace.newton_solve(graph, states[0].x, states[0].y)
    payload = {
        "family": fam.label,
        "form": fam.form,
        "param_dim": fam.param_dim,
        "axioms": {"uniqueness": axioms.uniqueness, "closure": axioms.closure, "samples": axioms.samples, "passed": axioms.passed},
        "jacobian_determinant": pathspace.jacobian_rank_check(fam, sol.t, sol.p),
    }
    if cfg.initial is not None:
        st = _state(cfg)
        payload["x"], payload["y"] = st.x, st.y
        payload["G"] = eval_spray(spray, st)
    if args.roundtrip:
        rep = pathspace.roundtrip_check(fam, spray, states[: max(1, min(3, count))])
        payload["roundtrip"] = {"max_distance": rep.max_distance, "radius_error": rep.radius_error}
    _emit(args, payload, None, "construct.json")
    return EXIT_OK


def cmd_complete(args) -> int:
    cfg = _merge(args)
    if not cfg.strategy:
        raise ConfigError("complete needs --strategy or strategy in the config")
    strategy = completeness.named_strategy(cfg.strategy)
    base = resolve_spray(cfg.spray, cfg.settings)
    psettings = probe_settings(cfg.settings)
    payload = {"spray": base.label, "strategy": strategy.cli_name}
    if cfg.initial is not None:
        st = _state(cfg)
        completed = completeness.make_complete(base, strategy, completeness.CompletionSettings(probe=psettings))
        payload["x"], payload["y"] = st.x, st.y
        payload["P"] = completeness.completion_factor(base, st, strategy, psettings)
        payload["G"] = eval_spray(completed, st)
    if args.check_samples:
        samples = cfg.samples or verification.random_states(base.domain, args.check_samples, np.random.default_rng(args.seed))
        rep = completeness.verify_complete(base, samples, psettings.horizon, psettings)
        payload["base_completeness"] = {"verdict": rep.verdict, "samples": rep.samples}
    _emit(args, payload, None, "complete.json")
    return EXIT_OK


def cmd_classify(args) -> int:
    cfg = _merge(args)
    if cfg.factor is None:
        raise ConfigError("classify needs --factor or factor in the config")
    spray = resolve_spray(cfg.spray, cfg.settings)
    factor = resolve_factor({**cfg.factor, "n": spray.dimension} if cfg.factor["label"] != "semicircle" else cfg.factor)
    st = _state(cfg)
    isettings = integrator_settings({**{"max_step": abs(cfg.t_end) / 400}, **cfg.settings})
    traj = geodesics.integrate(spray, st, cfg.t_end, isettings)
    if args.clock:
        fit = projective.fit_parameter_relation(projective.reclock_geodesic(traj, factor, initial_rate=args.initial_rate))
    else:
        fit = projective.classify_P_profile(projective.sample_P_along_geodesic(factor, traj))
    payload = {"spray": spray.label, "factor": factor.label, "mode": "clock" if args.clock else "profile", **fit.to_record()}
    _emit(args, payload, None, "classify.json")
    return EXIT_OK


def cmd_verify(args) -> int:
    cfg = _merge(args)
    results = verification.run([cfg.suite], seed=args.seed)
    report = {
        "seed": args.seed,
        "suite": cfg.suite,
        "passed": all(r.passed for r in results),
        "criteria": [r.to_record() for r in results],
    }
    text = "\n".join(r.summary_line() for r in results)
    if args.out:
        _write(os.path.join(args.out, "verify.json"), dumps(report) + "\n")
    print(dumps(report) if args.json else text)
    return EXIT_OK if report["passed"] else EXIT_VERIFY_FAILED


# -- parser -----------------------------------------------------------------


def _global_flags(p):
    p.add_argument("--config", help="JSON run configuration")
    p.add_argument("--seed", type=int, default=verification.DEFAULT_SEED, help="seed for every random draw")
    p.add_argument("--out", help="directory for output files")
    p.add_argument("--json", action="store_true", help="print machine-readable JSON")


def _spray_flags(p):
    p.add_argument("--spray", help="catalog label, pathspace:<family> or completed:<base>+<strategy>")
    p.add_argument("--param", action="append", metavar="NAME=VALUE", help="spray or family parameter (repeatable)")
    p.add_argument("-n", "--dim", type=int, help="dimension")
    p.add_argument("--x", help="position, comma separated")
    p.add_argument("--y", help="velocity, comma separated")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    _global_flags(common)
    parser = argparse.ArgumentParser(prog="spraylab", description="Sprays, geodesics and projective deformations.", parents=[common])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("list", parents=[common], help="list catalog sprays, factors, families, strategies, suites")
    p.add_argument("what", nargs="?", help="sprays | factors | families | strategies | suites")
    p.set_defaults(func=cmd_list)

    p = sub.add_parser("eval", parents=[common], help="spray coefficients at a state")
    _spray_flags(p)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("curvature", parents=[common], help="Riemann and Ricci curvature at a state")
    _spray_flags(p)
    p.add_argument("--scheme", choices=["auto", "ad", "fd"], default="auto")
    p.add_argument("--ricci-derivative", action="store_true", help="also report Ric_;0")
    p.set_defaults(func=cmd_curvature)

    p = sub.add_parser("geodesic", parents=[common], help="integrate a geodesic to CSV")
    _spray_flags(p)
    p.add_argument("--t-end", type=float, help="final parameter value (negative integrates backward)")
    p.add_argument("--no-probe", action="store_true", help="skip the maximal-interval probe in the summary")
    p.set_defaults(func=cmd_geodesic)

    p = sub.add_parser("probe", parents=[common], help="maximal interval of a geodesic")
    _spray_flags(p)
    p.set_defaults(func=cmd_probe)

    p = sub.add_parser("construct", parents=[common], help="spray from a curve family")
    _spray_flags(p)
    p.add_argument("--family", help="family label")
    p.add_argument("--roundtrip", action="store_true", help="integrate and compare with family curves")
    p.set_defaults(func=cmd_construct)

    p = sub.add_parser("complete", parents=[common], help="completion factor and completed spray")
    _spray_flags(p)
    p.add_argument("--strategy", help="ln-left | ln-right | ln-two-sided | tan-two-sided")
    p.add_argument("--check-samples", type=int, default=0, help="probe this many states of the base spray")
    p.set_defaults(func=cmd_complete)

    p = sub.add_parser("classify", parents=[common], help="fit P(s) or s(t) along a geodesic")
    _spray_flags(p)
    p.add_argument("--factor", help="projective factor label")
    p.add_argument("--factor-param", action="append", metavar="NAME=VALUE")
    p.add_argument("--t-end", type=float)
    p.add_argument("--clock", action="store_true", help="fit the reclocked parameter s(t) instead of P(s)")
    p.add_argument("--initial-rate", type=float, default=1.0, help="s'(0) of the reclocked parameter")
    p.set_defaults(func=cmd_classify)

    p = sub.add_parser("verify", parents=[common], help="run acceptance suites")
    p.add_argument("suite", nargs="?", help="all | " + " | ".join(verification.SUITES) + " | a1..a8")
    p.set_defaults(func=cmd_verify)
    return parser


def _attach_negative_vectors(argv):
    """Let ``--x -1,0`` through argparse by rewriting it as ``--x=-1,0``."""
    out, i = [], 0
    while i < len(argv):
        tok = argv[i]
        if tok in ("--x", "--y") and i + 1 < len(argv) and argv[i + 1].startswith("-") and len(argv[i + 1]) > 1 and (argv[i + 1][1].isdigit() or argv[i + 1][1] == "."):
            out.append(f"{tok}={argv[i + 1]}")
            i += 2
            continue
        out.append(tok)
        i += 1
    return out


def main(argv=None) -> int:
    parser = build_parser()
    argv = list(sys.argv[1:] if argv is None else argv)
    args = parser.parse_args(_attach_negative_vectors(argv))
    try:
        return args.func(args)
    except _IOFailure as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except SprayError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return exc.exit_code
    except (ValueError, TypeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
