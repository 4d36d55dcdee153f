"""Command-line interface: ``copulacov {certify,simulate,variance,estimate,check}``.

Every subcommand prints one JSON document to stdout that carries the schema
version and the effective configuration.  Options may also come from a flat
``key = value`` file given with ``--config``; flags on the command line win.

Exit codes
----------
0
    The run succeeded and, for ``certify`` and ``check``, the property holds.
2
    The run succeeded and found a violation (a legitimate finding).
1
    Usage, input or internal error; a message is written to stderr.
"""

from __future__ import annotations

import argparse
import json
import math
import sys

from .asymptotics import Proposition, certify_dominance
from .copulas import Condition, check_condition, make_copula
from .empirical import empirical_copula, known_margin_empirical
from .exceptions import CopulaError
from .functionals import Functional, asymptotic_variance, evaluate
from .montecarlo import SCHEMA_VERSION, ExperimentConfig, compare_to_asymptotics, run_experiment
from .samples import MarginKind, PairSample

__all__ = ["main", "build_parser", "read_config", "dumps"]

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_FINDING = 2

_DEFAULTS = {
    "certify": {"grid": 21, "family": None, "theta": None, "prop": None, "dim": None, "output": None},
    "simulate": {
        "family": None, "theta": None, "n": 500, "reps": 1000, "seed": 0, "workers": 1,
        "functional": "t1,t2,t3,t4", "output": None, "compare": True,
    },
    "variance": {"family": None, "theta": None, "functional": None},
    "estimate": {"input": None, "functional": "t1,t2,t3,t4", "margins": "rank"},
    "check": {"family": None, "theta": None, "condition": None, "grid": 101},
}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits with status 2 on bad usage, which would collide with "finding"
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _bool(text: str) -> bool:
    key = str(text).strip().lower()
    if key in ("1", "true", "yes", "on"):
        return True
    if key in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _add_model(p):
    p.add_argument("--family", help="independence, fgm, gumbel-barnett, clayton or gaussian")
    p.add_argument("--theta", "--rho", dest="theta", type=float, help="copula parameter (rho for gaussian)")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="copulacov", description=__doc__.split("\n")[0])
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)
    sub.required = True

    def common(p):
        p.add_argument("--config", help="flat key=value file; flags override it")

    p = sub.add_parser("certify", help="scan a grid for covariance dominance")
    common(p)
    _add_model(p)
    p.add_argument("--prop", help="1 (full covariance), 2 (variances) or 4 (multivariate independence)")
    p.add_argument("--dim", type=int, help="dimension, required for --prop 4")
    p.add_argument("--grid", type=int, help="interior points per axis (default 21)")
    p.add_argument("--output", help="per-point CSV path")

    p = sub.add_parser("simulate", help="Monte Carlo comparison of known-margin and rank estimators")
    common(p)
    _add_model(p)
    p.add_argument("--n", type=int, help="sample size (default 500)")
    p.add_argument("--reps", type=int, help="replications (default 1000)")
    p.add_argument("--seed", type=int, help="master seed (default 0)")
    p.add_argument("--workers", type=int, help="worker processes (default 1)")
    p.add_argument("--functional", help="comma-separated functionals (default t1,t2,t3,t4)")
    p.add_argument("--output", help="per-replication CSV path")
    p.add_argument("--compare", type=_bool, help="compare with asymptotic variances (default true)")

    p = sub.add_parser("variance", help="asymptotic variances of both estimators")
    common(p)
    _add_model(p)
    p.add_argument("--functional", help="t1..t5")

    p = sub.add_parser("estimate", help="evaluate functionals on a sample CSV")
    common(p)
    p.add_argument("--input", help="CSV with two columns")
    p.add_argument("--functional", help="comma-separated functionals, kendall included")
    p.add_argument("--margins", choices=("rank", "known"), help="rank (default) or known uniform margins")

    p = sub.add_parser("check", help="check a dependence condition on a grid")
    common(p)
    _add_model(p)
    p.add_argument("--condition", help="ltd, pqd, nqd or condition3")
    p.add_argument("--grid", type=int, help="interior points per axis (default 101)")
    return parser


def read_config(path: str) -> dict:
    """Parse a flat ``key = value`` file; ``#`` starts a comment."""
    out = {}
    with open(path) as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise UsageError(f"{path}:{lineno}: expected key = value")
            key, value = (part.strip() for part in line.split("=", 1))
            out[key.replace("-", "_")] = value
    return out


def _resolve(parser, args) -> dict:
    """Merge defaults, config file and flags, in increasing priority."""
    command = args.command
    sub = parser._subparsers._group_actions[0].choices[command]
    types = {a.dest: a.type for a in sub._actions}
    effective = dict(_DEFAULTS[command])
    if args.config:
        for key, value in read_config(args.config).items():
            key = "theta" if key == "rho" else key
            if key not in effective:
                raise UsageError(f"config key {key!r} does not apply to {command}")
            conv = types.get(key)
            try:
                effective[key] = conv(value) if conv and value != "" else (value or None)
            except ValueError as exc:
                raise UsageError(f"config key {key!r}: {exc}") from None
    for key in effective:
        value = getattr(args, key, None)
        if value is not None:
            effective[key] = value
    return effective


def _require(cfg: dict, *keys):
    missing = [k for k in keys if cfg.get(k) in (None, "")]
    if missing:
        raise UsageError("missing required option(s): " + ", ".join("--" + k for k in missing))


def _model(cfg):
    _require(cfg, "family")
    return make_copula(cfg["family"], cfg["theta"])


def _functionals(text) -> list:
    return [Functional.parse(f) for f in str(text).split(",") if f.strip()]


# -- JSON with 17 significant digits ----------------------------------------------------


def dumps(obj, indent: int = 2, _level: int = 0) -> str:
    """JSON text whose floats carry 17 significant digits; non-finite floats become null."""
    pad = " " * (indent * (_level + 1))
    end = " " * (indent * _level)
    if isinstance(obj, bool) or obj is None or isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, int):
        return str(obj)
    if isinstance(obj, float):
        return format(obj, ".17g") if math.isfinite(obj) else "null"
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(str(k))}: {dumps(v, indent, _level + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        items = [pad + dumps(v, indent, _level + 1) for v in obj]
        return "[\n" + ",\n".join(items) + "\n" + end + "]"
    if hasattr(obj, "item"):
        return dumps(obj.item(), indent, _level)
    raise TypeError(f"cannot serialise {type(obj).__name__}")


def _emit(command, cfg, payload) -> None:
    doc = {"schema_version": SCHEMA_VERSION, "command": command, "config": cfg}
    doc.update(payload)
    sys.stdout.write(dumps(doc) + "\n")


# -- subcommands ---------------------------------------------------------------------


def cmd_certify(cfg) -> int:
    _require(cfg, "prop")
    prop = Proposition.parse(cfg["prop"])
    if prop is Proposition.P4:
        _require(cfg, "dim")
        model = make_copula(cfg["family"] or "independence", cfg["theta"])
        dim = cfg["dim"]
    else:
        model = _model(cfg)
        dim = 2
    cert = certify_dominance(model, prop, cfg["grid"], dim=dim, keep_points=cfg["output"] is not None)
    if cfg["output"]:
        header = [f"schema_version={SCHEMA_VERSION}", "config=" + json.dumps(cfg, sort_keys=True)]
        cert.to_csv(cfg["output"], header_lines=header)
    _emit("certify", cfg, {"model": model.to_dict(), "certificate": cert.to_dict()})
    return EXIT_OK if cert.certified else EXIT_FINDING


def cmd_simulate(cfg) -> int:
    model = _model(cfg)
    config = ExperimentConfig(
        model, cfg["n"], cfg["reps"], tuple(_functionals(cfg["functional"])), cfg["seed"], cfg["workers"]
    )
    result = run_experiment(config)
    if cfg["output"]:
        result.to_csv(cfg["output"])
    summary = result.summary
    payload = {"experiment": config.to_dict(), "summary": result.summary_dict()["summary"]}
    payload["rank_below_known"] = {
        f.value: summary[(f.value, "rank")]["variance"] < summary[(f.value, "known")]["variance"]
        for f in config.functionals
    }
    if cfg["compare"]:
        payload["comparison"] = [row.to_dict() for row in compare_to_asymptotics(result, model)]
    _emit("simulate", cfg, payload)
    return EXIT_OK


def cmd_variance(cfg) -> int:
    _require(cfg, "functional")
    model = _model(cfg)
    func = Functional.parse(cfg["functional"])
    res = {k: asymptotic_variance(func, model, k) for k in ("rank", "known")}
    payload = {
        "model": model.to_dict(),
        "functional": func.value,
        "rank": res["rank"].variance,
        "known": res["known"].variance,
        "method": res["rank"].method.value,
        "error_bound": {k: r.quadrature_error_bound for k, r in res.items()},
    }
    _emit("variance", cfg, payload)
    return EXIT_OK


def cmd_estimate(cfg) -> int:
    _require(cfg, "input")
    if cfg["margins"] == "known":
        sample = PairSample.from_csv(cfg["input"], MarginKind.UNIFORM)
        grid = known_margin_empirical(sample)
    else:
        sample = PairSample.from_csv(cfg["input"])
        grid = empirical_copula(sample)
    estimates = {f.value: evaluate(f, grid) for f in _functionals(cfg["functional"])}
    _emit("estimate", cfg, {"n": sample.n, "estimates": estimates})
    return EXIT_OK


def cmd_check(cfg) -> int:
    _require(cfg, "condition")
    model = _model(cfg)
    report = check_condition(model, Condition(cfg["condition"].strip().lower()), cfg["grid"])
    _emit("check", cfg, {"model": model.to_dict(), "report": report.to_dict()})
    return EXIT_OK if report.holds else EXIT_FINDING


_COMMANDS = {
    "certify": cmd_certify,
    "simulate": cmd_simulate,
    "variance": cmd_variance,
    "estimate": cmd_estimate,
    "check": cmd_check,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        cfg = _resolve(parser, args)
        return _COMMANDS[args.command](cfg)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
    except (CopulaError, ValueError, OSError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
    except Exception as exc:  # internal failure; keep the exit-code contract
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
    return EXIT_ERROR


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
