"""Command-line entry point: ``bcropt {generate,solve,sweep,replay}``.

Exit status is 0 on success, 1 when a solve fails or a hard trend check
breaks, and 2 for usage, configuration or input errors.  Every command
writes a manifest from which ``bcropt replay`` reproduces the run.
"""

import argparse
import json
import logging
import sys
from dataclasses import asdict, dataclass, replace
from datetime import datetime, timezone
from pathlib import Path

from . import __version__
from .errors import (BcrError, ConfigInvalid, InfeasibleLambda, InstanceValidationError,
                     MissingParameter, MonotonicityViolation, SchemaVersionMismatch)
from .generate import GeneratorConfig, generate_instance
from .harness import (SolveSettings, check_trend, emit_report, run_scenario, sweep_cost,
                      sweep_lambda, sweep_rho, sweep_scale)
from .instance import load_instance, save_instance
from .lp import DEFAULT_TOL

log = logging.getLogger("bcropt")

USAGE_ERRORS = (ConfigInvalid, InstanceValidationError, SchemaVersionMismatch,
                InfeasibleLambda, MissingParameter)
OBJECTIVES = {"benefit": "benefit_max", "cost": "cost_min", "profit": "profit_max", "ratio": "ratio_max"}


class UsageError(Exception):
    pass


@dataclass
class RunManifest:
    command: str
    argv: list
    config_path: str | None
    seed: int | None
    tool_version: str
    tolerances: dict
    output: str
    started: str
    finished: str = ""

    def write(self, path):
        Path(path).write_text(json.dumps(asdict(self), indent=1, sort_keys=True) + "\n")


def _now():
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


# -- argument parsing -------------------------------------------------------------

def parse_lambda(text):
    """``"2"`` is a global minimum; ``"Queens=1,Bronx=1"`` sets per-borough minima."""
    text = text.strip()
    if "=" not in text:
        try:
            return int(text)
        except ValueError:
            raise UsageError(f"bad --lambda value {text!r}") from None
    out = {}
    for part in text.split(","):
        name, _, val = part.partition("=")
        try:
            out[name.strip()] = int(val)
        except ValueError:
            raise UsageError(f"bad --lambda entry {part!r}") from None
    return out


def parse_range(text, integer=False):
    """``"1..4"``, ``"0.5..6:0.5"`` or a comma list ``"1,2,4"``."""
    conv = int if integer else float
    try:
        if ".." in text:
            lo, _, rest = text.partition("..")
            hi, _, step = rest.partition(":")
            lo, hi = conv(lo), conv(hi)
            step = conv(step) if step else conv(1)
            if step <= 0:
                raise ValueError
            n = int(round((hi - lo) / step)) + 1
            vals = [lo + k * step for k in range(n)]
            return [int(v) if integer else round(v, 10) for v in vals]
        return [conv(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise UsageError(f"bad range {text!r}; use a..b, a..b:step or a,b,c") from None


def load_config(path):
    try:
        data = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ConfigInvalid(f"{path}: not valid JSON ({exc})") from exc
    if not isinstance(data, dict):
        raise ConfigInvalid(f"{path}: top level must be an object")
    return GeneratorConfig.from_mapping(data)


def build_parser():
    p = argparse.ArgumentParser(prog="bcropt", description="Benefit-to-cost ratio optimization")
    p.add_argument("--version", action="version", version=f"bcropt {__version__}")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="draw a synthetic instance")
    g.add_argument("--config", required=True, help="generator settings (JSON)")
    g.add_argument("--seed", type=int, required=True)
    g.add_argument("--out", required=True, help="instance file to write")

    def solver_flags(sp):
        sp.add_argument("--objective", choices=sorted(OBJECTIVES), default="ratio")
        sp.add_argument("--lambda", dest="lam", default="1", help="N or Borough=N,...")
        sp.add_argument("--rho", type=float, help="returns multiplier")
        sp.add_argument("--delta", type=float, help="status-quo free-capacity fraction")
        sp.add_argument("--gap", type=float, default=0.05, help="MIP relative gap")
        sp.add_argument("--epsilon", type=float, help="Dinkelbach stopping tolerance")
        sp.add_argument("--backend", choices=("highs", "bnb"), default="highs")
        sp.add_argument("--status-quo", action="store_true", help="fix openings and expansion to 0")
        sp.add_argument("--workers", type=int, default=1)
        sp.add_argument("--timing", action="store_true", help="record wall time in the CSV")
        sp.add_argument("--out", required=True, help="output directory")

    s = sub.add_parser("solve", help="solve one scenario")
    s.add_argument("instance")
    solver_flags(s)

    w = sub.add_parser("sweep", help="solve a parameter sweep")
    w.add_argument("instance", nargs="?", help="instance file (not used with --vary scale)")
    w.add_argument("--vary", required=True, choices=("lambda", "rho", "cost-multiplier", "scale"))
    w.add_argument("--range", dest="range_spec", required=True)
    w.add_argument("--config", help="generator settings for --vary scale")
    w.add_argument("--seed", type=int, default=0, help="generator seed for --vary scale")
    solver_flags(w)

    r = sub.add_parser("replay", help="re-run a command from its manifest")
    r.add_argument("manifest")
    r.add_argument("--out", help="write to this location instead of the original one")
    return p


def _settings(args):
    if not 0.0 <= args.gap < 1.0:
        raise UsageError("--gap must lie in [0, 1)")
    if args.workers < 1:
        raise UsageError("--workers must be >= 1")
    return SolveSettings(gap=args.gap, epsilon=args.epsilon, backend=args.backend,
                         workers=args.workers)


def _overrides(args):
    ov = {}
    if args.rho is not None:
        ov["rho"] = args.rho
    if args.delta is not None:
        ov["delta"] = args.delta
    if args.status_quo:
        ov["status_quo_only"] = True
    return ov


def _manifest(args, argv, output, config=None, seed=None):
    return RunManifest(command=args.command, argv=list(argv), config_path=config, seed=seed,
                       tool_version=__version__, tolerances=asdict(DEFAULT_TOL),
                       output=str(output), started=_now())


# -- commands ----------------------------------------------------------------

def cmd_generate(args, argv):
    cfg = load_config(args.config)
    man = _manifest(args, argv, args.out, args.config, args.seed)
    inst = generate_instance(cfg, args.seed)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    save_instance(inst, out)
    man.finished = _now()
    man.write(out.with_name(out.name + ".manifest.json"))
    print(f"wrote {out} ({len(inst.youth)} youth, {len(inst.shelters)} shelters)")
    return 0


def cmd_solve(args, argv):
    inst = load_instance(args.instance)
    lam = parse_lambda(args.lam)
    settings = _settings(args)
    man = _manifest(args, argv, args.out, seed=inst.seed)
    res = run_scenario(inst, OBJECTIVES[args.objective], lam, _overrides(args), settings)
    emit_report([res], args.out, timing=args.timing)
    man.finished = _now()
    man.write(Path(args.out) / "manifest.json")
    m = res.metrics
    print(f"{res.scenario_id}: BCR {m.bcr:.6g}, cost {m.total_cost:.6g}, referrals {m.referrals}, "
          f"utilization {m.utilization:.3f}, opened {m.shelters_opened}")
    return 0


def cmd_sweep(args, argv):
    settings = _settings(args)
    mode = OBJECTIVES[args.objective]
    ov = _overrides(args)
    exact = settings.exact
    if args.vary == "scale":
        if not args.config:
            raise UsageError("--vary scale needs --config")
        cfg = load_config(args.config)
        sizes = parse_range(args.range_spec, integer=True)
        man = _manifest(args, argv, args.out, args.config, args.seed)
        lam = parse_lambda(args.lam)
        results = sweep_scale(cfg, sizes, args.seed, mode, lam, settings)
        params = sizes
    else:
        if not args.instance:
            raise UsageError("an instance file is required")
        inst = load_instance(args.instance)
        if "rho" in ov:
            inst = inst.with_rho(ov.pop("rho"))
        if "delta" in ov:
            inst = inst.with_delta(ov.pop("delta"))
        man = _manifest(args, argv, args.out, seed=inst.seed)
        if args.vary == "lambda":
            params = parse_range(args.range_spec, integer=True)
            results = sweep_lambda(inst, mode, params, settings, ov or None, check=False)
        elif args.vary == "rho":
            params = parse_range(args.range_spec)
            results = sweep_rho(inst, mode, params, parse_lambda(args.lam), settings)
        else:
            params = parse_range(args.range_spec, integer=True)
            results = sweep_cost(inst, mode, parse_lambda(args.lam), params, settings)
    name = args.vary.replace("-", "_")
    emit_report(results, args.out, series={name: list(zip(params, results))}, timing=args.timing)
    man.finished = _now()
    man.write(Path(args.out) / "manifest.json")
    for p, r in zip(params, results):
        m = r.metrics
        print(f"{args.vary}={p}: BCR {m.bcr:.6g}, cost {m.total_cost:.6g}, referrals {m.referrals}, "
              f"opened {','.join(r.opened) or '-'}")
    if args.vary == "lambda" and mode == "ratio_max":
        check_trend(results, "bcr", "nonincreasing", exact, "BCR over lambda")
    return 0


def cmd_replay(args, argv):
    try:
        man = json.loads(Path(args.manifest).read_text())
        old = list(man["argv"])
    except (OSError, ValueError, KeyError) as exc:
        raise UsageError(f"cannot read manifest {args.manifest}: {exc}") from exc
    if args.out:
        old = _replace_flag(old, "--out", args.out)
    return main(old)


def _replace_flag(argv, flag, value):
    out = list(argv)
    for k, tok in enumerate(out):
        if tok == flag and k + 1 < len(out):
            out[k + 1] = value
            return out
        if tok.startswith(flag + "="):
            out[k] = f"{flag}={value}"
            return out
    return out + [flag, value]


COMMANDS = {"generate": cmd_generate, "solve": cmd_solve, "sweep": cmd_sweep, "replay": cmd_replay}


def main(argv=None):
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args, argv)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except USAGE_ERRORS as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except MonotonicityViolation as exc:
        print(f"assertion failed: {exc}", file=sys.stderr)
        return 1
    except BcrError as exc:
        stage = getattr(exc, "stage", None)
        where = f" [{stage}]" if stage else ""
        print(f"solver failure{where}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
