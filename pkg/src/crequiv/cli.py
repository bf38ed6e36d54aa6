"""Command-line interface: ``crequiv {fit,test,simulate,nelson-aalen,scenario}``.

Exit codes: 0 success, 1 statistical failure (non-convergence), 2 usage or
input error. Any flag may also be given in a ``--config`` file of
``key=value`` lines; explicit flags win. ``CREQUIV_SEED`` sets the default
seed.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
from pathlib import Path

import numpy as np

from .constrained import ConstrainedFitError
from .data import Administrative, DataError, Parametric, parse_censoring, read_csv, format_csv
from .distance import GRID_POINTS, T_MIN
from .equivalence import BootstrapError, TestConfig, fit_groups, iup_test, run_test
from .hazards import canonical_family
from .likelihood import fit_mle
from .nonparametric import diagnostic_rows, rows_to_csv, rows_to_json
from .scenarios import HORIZON, ScenarioConfig, get_scenario, run_scenario, simulate_pair, to_csv, to_json, to_wide_csv

SEED_ENV = "CREQUIV_SEED"
EXIT_OK, EXIT_STAT, EXIT_USAGE = 0, 1, 2


class UsageError(ValueError):
    pass


# --- argument types --------------------------------------------------------


def _positive_float(text):
    v = float(text)
    if not v > 0:
        raise argparse.ArgumentTypeError(f"must be positive, got {text}")
    return v


def _positive_int(text):
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError(f"must be at least 1, got {text}")
    return v


def _alpha(text):
    v = float(text)
    if not 0 < v < 0.5:
        raise argparse.ArgumentTypeError(f"alpha must lie in (0, 0.5), got {text}")
    return v


def _families(text):
    try:
        return tuple(canonical_family(f.strip()) for f in text.split(","))
    except ValueError as e:
        raise argparse.ArgumentTypeError(str(e)) from None


def _censoring(text):
    try:
        return parse_censoring(text)
    except ValueError as e:
        raise argparse.ArgumentTypeError(str(e)) from None


def _ladder(text):
    """``start:stop:step`` inclusive of ``stop``."""
    try:
        a, b, step = (float(x) for x in text.split(":"))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected start:stop:step, got {text!r}") from None
    if not (a > 0 and b >= a and step > 0):
        raise argparse.ArgumentTypeError(f"invalid ladder {text!r}")
    n = int(np.floor((b - a) / step + 1e-9)) + 1
    return tuple(float(round(a + i * step, 12)) for i in range(n))


def _float_list(text):
    try:
        vals = tuple(float(x) for x in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None
    if any(not v > 0 for v in vals):
        raise argparse.ArgumentTypeError("values must be positive")
    return vals


def _pair(text):
    parts = text.split(",")
    try:
        vals = tuple(int(x) for x in parts)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected n1,n2, got {text!r}") from None
    if len(vals) == 1:
        vals = vals * 2
    if len(vals) != 2 or min(vals) < 1:
        raise argparse.ArgumentTypeError(f"expected two positive sizes, got {text!r}")
    return vals


def _pairs(text):
    return tuple(_pair(p) for p in text.split(";"))


def _censoring_list(text):
    return tuple(_censoring(c) for c in text.split(";"))


def _jobs(text):
    v = int(text)
    if v == 0 or v < -1:
        raise argparse.ArgumentTypeError("jobs must be positive or -1")
    return v


# --- parser ----------------------------------------------------------------


def _default_seed():
    env = os.environ.get(SEED_ENV)
    if env is None:
        return 0
    try:
        return int(env)
    except ValueError:
        raise UsageError(f"{SEED_ENV} must be an integer, got {env!r}") from None


def _common(p, seed):
    p.add_argument("--config", help="key=value file mirroring the flags")
    p.add_argument("--seed", type=int, default=seed)
    p.add_argument("--output", "-o", help="output file (default: stdout)")
    p.add_argument("--format", choices=("json", "csv"), default="json")


def _data_args(p):
    p.add_argument("--input", "-i", required=True, help="CSV with columns group,time,state")
    p.add_argument("--k", type=_positive_int, required=True, help="number of competing states")
    p.add_argument("--horizon", type=_positive_float, help="time window tau (default: admin horizon or largest time)")


def build_parser() -> argparse.ArgumentParser:
    seed = _default_seed()
    parser = argparse.ArgumentParser(prog="crequiv", description="Similarity tests for competing risks models")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("fit", help="maximum likelihood fit per group")
    _common(p, seed)
    _data_args(p)
    p.add_argument("--families", type=_families, required=True)
    p.add_argument("--censoring", type=_censoring, default=Administrative(HORIZON))

    p = sub.add_parser("test", help="bootstrap similarity test")
    _common(p, seed)
    _data_args(p)
    p.add_argument("--families", type=_families, required=True)
    p.add_argument("--censoring", type=_censoring, default=Administrative(HORIZON))
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("--delta", type=_positive_float)
    g.add_argument("--delta-ladder", type=_ladder, help="start:stop:step; writes a p-value curve")
    p.add_argument("--deltas-per-transition", type=_float_list, help="individual thresholds for --method iup")
    p.add_argument("--method", choices=("global", "iup", "both"), default="global")
    p.add_argument("--alpha", type=_alpha, default=0.05)
    p.add_argument("--b", type=_positive_int, default=200, help="bootstrap replicates")
    p.add_argument("--grid", type=_positive_int, default=GRID_POINTS)
    p.add_argument("--t-min", type=float, default=T_MIN)
    p.add_argument("--replicates", action="store_true", help="include bootstrap replicates in JSON")
    p.add_argument("--jobs", type=_jobs, default=1)

    p = sub.add_parser("simulate", help="simulate a two-group dataset from a scenario")
    _common(p, seed)
    p.set_defaults(format="csv")
    p.add_argument("--scenario", type=int, required=True, choices=(1, 2, 3, 4))
    p.add_argument("--n", type=_pair, default=(200, 200), help="n1,n2")
    p.add_argument("--censoring", type=_censoring, default=Administrative(HORIZON))

    p = sub.add_parser("nelson-aalen", help="Nelson-Aalen estimates with confidence bands")
    _common(p, seed)
    p.set_defaults(format="csv")
    _data_args(p)
    p.add_argument("--level", type=float, default=0.95)
    p.add_argument("--families", type=_families, help="add parametric cumulative intensities for comparison")
    p.add_argument("--censoring", type=_censoring, default=Administrative(HORIZON))

    p = sub.add_parser("scenario", help="Monte Carlo rejection rates for a scenario")
    _common(p, seed)
    p.set_defaults(format="csv")
    p.add_argument("--scenario", type=int, required=True, choices=(1, 2, 3, 4))
    p.add_argument("--n", type=_pairs, default=((200, 200),), help="n1,n2 pairs separated by ';'")
    p.add_argument("--censoring", type=_censoring_list, default=(Administrative(HORIZON),),
                   help="regimes separated by ';' (admin:90 or exp:<rate>)")
    p.add_argument("--deltas", type=_float_list)
    p.add_argument("--reps", type=_positive_int, default=200)
    p.add_argument("--b", type=_positive_int, default=200)
    p.add_argument("--alpha", type=_alpha, default=0.05)
    p.add_argument("--methods", default="global", help="global, iup or global,iup")
    p.add_argument("--grid", type=_positive_int, default=GRID_POINTS)
    p.add_argument("--t-min", type=float, default=T_MIN)
    p.add_argument("--jobs", type=_jobs, default=os.cpu_count() or 1)
    p.add_argument("--full-scale", action="store_true", help="full scenario grid with N=1000, B=250")
    p.add_argument("--layout", choices=("long", "table"), default="long", help="CSV layout")
    return parser


def _config_tokens(path: str) -> list[str]:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as e:
        raise UsageError(f"cannot read config {path}: {e.strerror}") from None
    tokens = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise UsageError(f"{path}:{lineno}: expected key=value")
        flag = "--" + key.strip().replace("_", "-")
        value = value.strip()
        if value.lower() in ("true", "yes", "on"):
            tokens.append(flag)
        elif value.lower() in ("false", "no", "off"):
            continue
        else:
            tokens += [flag, value]
    return tokens


def _expand_config(argv: list[str]) -> list[str]:
    """Insert config-file flags right after the subcommand, before explicit flags."""
    for i, tok in enumerate(argv):
        path = None
        if tok == "--config" and i + 1 < len(argv):
            path, drop = argv[i + 1], 2
        elif tok.startswith("--config="):
            path, drop = tok.split("=", 1)[1], 1
        if path is not None:
            rest = argv[:i] + argv[i + drop:]
            return rest[:1] + _config_tokens(path) + rest[1:]
    return argv


# --- commands --------------------------------------------------------------


def _emit(text: str, output: str | None) -> None:
    if output:
        Path(output).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
        if not text.endswith("\n"):
            sys.stdout.write("\n")


def _summary(msg: str, args) -> None:
    # human summary goes to stdout only when machine output goes to a file
    if args.output:
        print(msg)


def _load(args):
    horizon = args.horizon
    if horizon is None and isinstance(args.censoring, Administrative):
        horizon = args.censoring.horizon
    admin = isinstance(args.censoring, Administrative)
    try:
        samples = read_csv(args.input, args.k, horizon, administrative=admin)
    except FileNotFoundError:
        raise UsageError(f"no such file: {args.input}") from None
    except OSError as e:
        raise UsageError(f"cannot read {args.input}: {e.strerror}") from None
    return samples


def _check_families(args):
    if args.families is not None and len(args.families) != args.k:
        raise UsageError(f"--families lists {len(args.families)} families but --k is {args.k}")


def cmd_fit(args) -> int:
    _check_families(args)
    samples = _load(args)
    out, ok = {}, True
    for g, s in sorted(samples.items()):
        fit = fit_mle(s, args.families, args.censoring)
        ok &= fit.converged
        out[str(g)] = fit.to_dict()
        _summary(f"group {g}: logL={fit.logL:.4f} " + " ".join(str(t) for t in fit.model.transitions), args)
    if args.format == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["group", "j", "family", "param1", "param2", "logL"])
        for g, d in out.items():
            for j, tr in enumerate(d["model"]["transitions"], start=1):
                params = list(tr["params"]) + [""]
                w.writerow([g, j, tr["family"], params[0], params[1], d["logL"]])
        _emit(buf.getvalue(), args.output)
    else:
        _emit(json.dumps({"groups": out}, indent=2), args.output)
    return EXIT_OK if ok else EXIT_STAT


def _two_groups(samples):
    if set(samples) != {1, 2}:
        raise UsageError(f"need observations for groups 1 and 2, found {sorted(samples)}")
    return samples[1], samples[2]


def cmd_test(args) -> int:
    _check_families(args)
    s1, s2 = _two_groups(_load(args))
    deltas = args.delta_ladder or (args.delta,)
    methods = ("global", "iup") if args.method == "both" else (args.method,)
    if args.deltas_per_transition is not None and len(args.deltas_per_transition) != args.k:
        raise UsageError(f"--deltas-per-transition needs {args.k} values")
    base = TestConfig(deltas[0], args.families, args.alpha, args.b, args.censoring, args.seed, args.grid, args.t_min, args.jobs)
    fits = fit_groups(s1, s2, base)
    results = []
    for delta in deltas:
        cfg = TestConfig(delta, args.families, args.alpha, args.b, args.censoring, args.seed, args.grid, args.t_min, args.jobs)
        for method in methods:
            if method == "global":
                res = run_test(s1, s2, cfg, fits=fits)
            else:
                res = iup_test(s1, s2, cfg, deltas=args.deltas_per_transition, fits=fits)
            results.append(res)
            _summary(
                f"{method:6s} delta={delta:g} d_hat={res.d_hat:.6g} p={res.p_value:.4f} "
                f"q_alpha={res.q_alpha:.6g} -> {'reject H0 (similar)' if res.reject else 'do not reject'}",
                args,
            )
    if args.format == "csv":
        lines = ["delta,method,d_hat,p_value,q_alpha,reject"]
        for r in results:
            lines.append(f"{r.delta!r},{r.method},{r.d_hat!r},{r.p_value!r},{r.q_alpha!r},{str(r.reject).lower()}")
        _emit("\n".join(lines) + "\n", args.output)
    else:
        payload = [r.to_dict(include_replicates=args.replicates) for r in results]
        _emit(json.dumps(payload[0] if len(payload) == 1 else payload, indent=2), args.output)
    return EXIT_OK


def cmd_simulate(args) -> int:
    sc = get_scenario(args.scenario)
    if isinstance(args.censoring, Parametric) and args.censoring.hazard is None:
        raise UsageError("simulation needs admin:<tau> or exp:<rate> censoring")
    s1, s2 = simulate_pair(sc, args.n[0], args.n[1], args.censoring, args.seed, (0,))
    if args.format == "json":
        _emit(json.dumps([s1.to_dict(), s2.to_dict()], indent=2), args.output)
    else:
        _emit(format_csv([s1, s2]), args.output)
    _summary(
        f"scenario {args.scenario}: n={args.n} censored {100 * s1.censored_fraction:.1f}% / "
        f"{100 * s2.censored_fraction:.1f}%",
        args,
    )
    return EXIT_OK


def cmd_nelson_aalen(args) -> int:
    if args.families is not None:
        _check_families(args)
    if not 0 < args.level < 1:
        raise UsageError("--level must lie in (0, 1)")
    samples = _load(args)
    rows = []
    for g, s in sorted(samples.items()):
        fit = fit_mle(s, args.families) if args.families is not None else None
        for j in range(1, args.k + 1):
            spec = fit.model.transitions[j - 1] if fit is not None else None
            rows += diagnostic_rows(s, j, args.level, spec)
    _emit(rows_to_json(rows) if args.format == "json" else rows_to_csv(rows), args.output)
    return EXIT_OK


def cmd_scenario(args) -> int:
    methods = tuple(m.strip() for m in args.methods.split(","))
    kw = dict(seed=args.seed, methods=methods, grid=args.grid, t_min=args.t_min, jobs=args.jobs, alpha=args.alpha)
    if args.full_scale:
        config = ScenarioConfig.full_scale(args.scenario, **kw)
    else:
        config = ScenarioConfig(
            args.scenario, args.n, args.censoring, args.deltas or (), args.reps, args.b, **kw
        )
    rows, _ = run_scenario(config, progress=lambda m: print(m, file=sys.stderr))
    if args.format == "json":
        _emit(to_json(rows, config), args.output)
    else:
        _emit(to_wide_csv(rows) if args.layout == "table" else to_csv(rows), args.output)
    for r in rows:
        _summary(
            f"n=({r.n1},{r.n2}) {r.censoring} delta={r.delta:g} {r.method}: "
            f"{r.rate:.3f} (se {r.se:.3f}, {r.failures} failed){' FLAGGED' if r.flagged else ''}",
            args,
        )
    return EXIT_STAT if any(r.flagged for r in rows) else EXIT_OK


COMMANDS = {
    "fit": cmd_fit,
    "test": cmd_test,
    "simulate": cmd_simulate,
    "nelson-aalen": cmd_nelson_aalen,
    "scenario": cmd_scenario,
}


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        argv = _expand_config(argv)
        parser = build_parser()
    except UsageError as e:
        print(f"crequiv: error: {e}", file=sys.stderr)
        return EXIT_USAGE
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_USAGE if e.code not in (0, None) else EXIT_OK
    try:
        return COMMANDS[args.command](args)
    except (UsageError, DataError) as e:
        print(f"crequiv: error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except (ConstrainedFitError, BootstrapError) as e:
        print(f"crequiv: statistical failure: {e}", file=sys.stderr)
        return EXIT_STAT
    except ValueError as e:
        print(f"crequiv: error: {e}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
