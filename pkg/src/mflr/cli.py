"""Command-line entry point: ``mflr {allocate,stats,fit,experiment,models}``.

Every subcommand except ``models`` reads a JSON config (``--config``); flags
only override paths, the seed and the worker count.
"""

import argparse
import json
import os
import sys
from importlib import resources

import numpy as np

from . import experiments as ex
from .allocation import DENOMINATORS, allocate, single_fidelity_allocation, validate_allocation, write_allocation_csv
from .coefficients import SINGLE_FIDELITY, STRATEGY_NAMES, build_strategy
from .errors import ConfigError, DataError, MflrError
from .estimators import fit, predict
from .models import FAMILIES, get_family, tabulate

EXIT_OK, EXIT_CONFIG, EXIT_NUMERICAL, EXIT_IO = 0, 2, 3, 4

_SOURCE_KEYS = {k: ex.PLAN_PROPERTIES[k] for k in ("family", "family_options", "dataset", "costs",
                                                   "distribution", "features")}

ALLOCATE_SCHEMA = {
    "type": "object", "additionalProperties": False, "required": ["stats_file", "costs", "budgets"],
    "properties": {
        "stats_file": {"type": "string", "description": "ModelStats JSON written by `mflr stats`"},
        "costs": ex.PLAN_PROPERTIES["costs"],
        "budgets": ex.PLAN_PROPERTIES["budgets"],
        "strict": {"type": "boolean", "description": "force m_k > m_{k-1} when the budget allows"},
        "denominator": {"enum": list(DENOMINATORS), "description": "ratio denominator variant"},
        "output": {"type": "string", "description": "CSV path (default: stdout)"},
    },
}

STATS_SCHEMA = {
    "type": "object", "additionalProperties": False, "required": ["mode"],
    "properties": {
        "mode": {"enum": ["exact", "pilot", "dataset"], "description": "exact|pilot|dataset"},
        **_SOURCE_KEYS,
        "n_pilot": {"type": "integer", "minimum": 2, "description": "pilot sample count (mode pilot)"},
        "seed": ex.PLAN_PROPERTIES["seed"],
        "output": {"type": "string", "description": "JSON path (default: stdout)"},
    },
}

FIT_SCHEMA = {
    "type": "object", "additionalProperties": False, "required": ["strategy", "seed"],
    "properties": {
        **_SOURCE_KEYS,
        "strategy": {"enum": list(STRATEGY_NAMES), "description": "estimator"},
        "budget": {"type": "number", "exclusiveMinimum": 0, "description": "budget p (optimal allocation)"},
        "m": {"type": "array", "items": {"type": "integer"}, "minItems": 1,
              "description": "given sample counts m_1..m_K instead of a budget"},
        "stats": ex.PLAN_PROPERTIES["stats"],
        "cxx": ex.PLAN_PROPERTIES["cxx"],
        "seed": ex.PLAN_PROPERTIES["seed"],
        "eval_points": ex.PLAN_PROPERTIES["eval_points"],
        "bootstrap_replace": ex.PLAN_PROPERTIES["bootstrap_replace"],
        "output": {"type": "string", "description": "JSON path (default: stdout)"},
    },
}

EXPERIMENT_SCHEMA = {
    "type": "object", "additionalProperties": False,
    "required": list(ex.PLAN_SCHEMA["required"]),
    "properties": {**ex.PLAN_PROPERTIES,
                   "output_dir": {"type": "string", "description": "directory for report files"}},
}


class UsageError(ConfigError):
    pass


def _emit_error(exc, code):
    doc = {"error": type(exc).__name__, "message": str(exc), "exit_code": code}
    z = getattr(exc, "z", None)
    if z is not None:
        doc["z"] = [float(v) for v in np.ravel(z)]
    print(json.dumps(doc, sort_keys=True), file=sys.stderr)
    return code


def packaged_configs():
    return sorted(p.name[:-5] for p in resources.files("mflr.configs").iterdir() if p.name.endswith(".json"))


def resolve_path(path):
    """A file path, or a packaged config name (without ``.json``) mapped to its file."""
    if not os.path.exists(path) and path in packaged_configs():
        return str(resources.files("mflr.configs").joinpath(path + ".json"))
    return path


def load_config(path, schema):
    """Read a JSON config (file path or packaged config name) and validate it."""
    try:
        with open(resolve_path(path)) as fh:
            text = fh.read()
    except OSError as exc:
        raise DataError(f"cannot read config {path}: {exc.strerror}") from None
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: not valid JSON ({exc})") from None
    ex.validate_document(doc, schema)
    return doc


def _apply_seed(doc, args):
    env = os.environ.get("MFLR_SEED")
    if env is not None:
        try:
            doc["seed"] = int(env)
        except ValueError:
            raise ConfigError(f"MFLR_SEED must be an integer, got {env!r}") from None
    if getattr(args, "seed", None) is not None:
        doc["seed"] = args.seed
    return doc


def _write_json(doc, path):
    text = json.dumps(doc, indent=2, sort_keys=True, allow_nan=False) + "\n"
    if path:
        d = os.path.dirname(path)
        if d:
            os.makedirs(d, exist_ok=True)
        with open(path, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def cmd_allocate(doc, args):
    from .statistics import ModelStats

    try:
        stats = ModelStats.from_json(resolve_path(doc["stats_file"]))
    except OSError as exc:
        raise DataError(f"cannot read statistics {doc['stats_file']}: {exc.strerror}") from None
    rows = [allocate(stats, doc["costs"], p, strict=doc.get("strict", False),
                     denominator=doc.get("denominator", "printed")) for p in doc["budgets"]]
    out = args.output or doc.get("output")
    if out:
        with open(out, "w", newline="") as fh:
            write_allocation_csv(rows, fh)
    else:
        write_allocation_csv(rows, sys.stdout)
    return rows


def _source_plan(doc, stats=None, strategies=(SINGLE_FIDELITY,), extra=None):
    keys = ("family", "family_options", "dataset", "costs", "distribution", "features", "eval_points",
            "cxx", "bootstrap_replace")
    plan = {k: doc[k] for k in keys if k in doc}
    plan.update(budgets=[1.0], strategies=list(strategies), stats=stats or {"mode": "exact"},
                replications=2, seed=doc.get("seed", 0))
    plan.update(extra or {})
    p = ex.ExperimentPlan(**plan)
    p.check()
    return p


def cmd_stats(doc, args):
    mode = doc["mode"]
    doc = _apply_seed(doc, args)
    if mode == "pilot":
        if "n_pilot" not in doc:
            raise ConfigError("mode 'pilot' needs 'n_pilot'")
        if "seed" not in doc:
            raise ConfigError("mode 'pilot' needs 'seed'")
    stats_spec = {"mode": "pilot", "n_pilot": doc["n_pilot"]} if mode == "pilot" else {"mode": mode}
    plan = _source_plan(doc, stats=stats_spec)
    ctx = ex._Context(plan)
    if mode == "pilot":
        stats = ctx.pilot(np.random.default_rng(doc["seed"]))
    else:
        stats = ctx.fixed_stats
    _write_json(stats.to_dict(), args.output or doc.get("output"))
    return stats


def cmd_fit(doc, args):
    doc = _apply_seed(doc, args)
    name = doc["strategy"]
    if ("budget" in doc) == ("m" in doc):
        raise ConfigError("give exactly one of 'budget' or 'm'")
    stats_spec = doc.get("stats")
    if stats_spec is None and name != SINGLE_FIDELITY:
        raise ConfigError(f"strategy {name!r} needs 'stats'")
    # single-fidelity needs no statistics; the pilot placeholder is never drawn
    plan = _source_plan(doc, stats=stats_spec or {"mode": "pilot", "n_pilot": 2})
    ctx = ex._Context(plan)
    rng = np.random.default_rng(doc["seed"])
    stats = ctx.fixed_stats
    if stats is None and stats_spec is not None:
        stats = ctx.pilot(rng)
    strategy = build_strategy(name, stats)
    if "m" in doc:
        m = tuple(doc["m"][:1]) if name == SINGLE_FIDELITY else tuple(doc["m"])
        validate_allocation(m, ctx.costs[:len(m)])
    elif name == SINGLE_FIDELITY:
        m = single_fidelity_allocation(ctx.costs, doc["budget"]).m
    else:
        m = allocate(stats, ctx.costs, doc["budget"]).m
    if name == SINGLE_FIDELITY:
        _, data = ctx.draw(rng, (m[0],), m[0])
    else:
        data, _ = ctx.draw(rng, m, 0)
    res = fit(data, strategy, ctx.c_xx, costs=ctx.costs, seed=doc["seed"], standardized=ctx.fmap.standardized,
              L=ctx.L)
    out = res.to_dict()
    if ctx.eval_points.shape[0]:
        out["predictions"] = [{"z": z.tolist(), "value": float(v)}
                              for z, v in zip(ctx.eval_points, predict(res, ctx.fmap, ctx.eval_points))]
    _write_json(out, args.output or doc.get("output"))
    return res


def cmd_experiment(doc, args):
    doc = _apply_seed(doc, args)
    outdir = args.output_dir or doc.pop("output_dir", None) or "mflr-output"
    doc.pop("output_dir", None)
    if args.workers is not None:
        doc["workers"] = args.workers
    plan = ex.ExperimentPlan.from_dict(doc)
    report = ex.run_experiment(plan)
    paths = report.write(outdir)
    print(json.dumps({"outputs": paths}, sort_keys=True))
    return report


def cmd_models(args):
    if args.tabulate:
        models = get_family(args.tabulate)
        if args.n is None or args.seed is None or not args.output:
            raise UsageError("--tabulate needs --n, --seed and --output")
        tabulate(models, args.n, args.seed, path=args.output)
        print(json.dumps({"family": args.tabulate, "rows": args.n, "output": args.output}, sort_keys=True))
        return
    for name in sorted(FAMILIES):
        m = get_family(name)
        print(f"{name}\tK={m.K}\tp={m.distribution.p}\tcosts={list(m.costs)}\t{FAMILIES[name][0]}")


def _keys_help(schema):
    lines = ["config keys:"]
    required = set(schema.get("required", []))
    for key, spec in schema["properties"].items():
        desc = spec.get("description", "")
        if "enum" in spec:
            desc += (" " if desc else "") + "{" + "|".join(map(str, spec["enum"])) + "}"
        lines.append(f"  {key}{' (required)' if key in required else ''}: {desc}")
        for sub, sspec in spec.get("properties", {}).items():
            sdesc = "{" + "|".join(map(str, sspec["enum"])) + "}" if "enum" in sspec else sspec.get("type", "")
            lines.append(f"      {key}.{sub}: {sdesc}")
    return "\n".join(lines)


def build_parser():
    parser = argparse.ArgumentParser(prog="mflr", description="Multifidelity linear regression.")
    sub = parser.add_subparsers(dest="command", required=True)
    specs = {
        "allocate": (ALLOCATE_SCHEMA, "sample allocations for budgets (CSV)"),
        "stats": (STATS_SCHEMA, "model statistics (JSON)"),
        "fit": (FIT_SCHEMA, "one regression fit (JSON)"),
        "experiment": (EXPERIMENT_SCHEMA, "replication study (report.json, trace_cov.csv, estimates.csv)"),
    }
    for name, (schema, desc) in specs.items():
        p = sub.add_parser(name, help=desc, description=desc, epilog=_keys_help(schema),
                           formatter_class=argparse.RawDescriptionHelpFormatter)
        p.add_argument("--config", required=True, help="JSON config file or packaged config name")
        if name != "allocate":
            p.add_argument("--seed", type=int, help="override the config seed (also MFLR_SEED)")
        if name == "experiment":
            p.add_argument("--output-dir", help="override output_dir")
            p.add_argument("--workers", type=int, help="override workers")
        else:
            p.add_argument("--output", help="override output path")
    m = sub.add_parser("models", help="list built-in model families", description="list built-in model families")
    m.add_argument("--tabulate", metavar="FAMILY", choices=sorted(FAMILIES), help="write a dataset CSV")
    m.add_argument("--n", type=int, help="rows to tabulate")
    m.add_argument("--seed", type=int, help="seed for tabulated inputs")
    m.add_argument("--output", help="dataset CSV path")
    m.add_argument("--configs", action="store_true", help="list packaged configs")
    return parser, specs


def main(argv=None):
    parser, specs = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "models":
            if args.configs:
                print("\n".join(packaged_configs()))
            else:
                cmd_models(args)
            return EXIT_OK
        doc = load_config(args.config, specs[args.command][0])
        handler = {"allocate": cmd_allocate, "stats": cmd_stats, "fit": cmd_fit,
                   "experiment": cmd_experiment}[args.command]
        handler(doc, args)
    except MflrError as exc:
        return _emit_error(exc, exc.exit_code)
    except OSError as exc:
        return _emit_error(exc, EXIT_IO)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
