"""Config-driven experiment runner.

Subcommands:
  run <file> [--trials N --horizon N --out DIR]   execute one experiment
  list                                            print the catalog
  oracle <suite>                                  run a brute-force suite

Configs are line-oriented ``key = value`` pairs with dotted sections; see
the README for the schema.  Exit codes: 0 pass, 1 acceptance failure,
2 usage or config error.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__, catalog, harness
from .core import ConfigurationError


class ConfigError(ValueError):
    def __init__(self, message: str, line: int | None = None):
        super().__init__(message if line is None else f"line {line}: {message}")
        self.line = line


def parse_config(text: str) -> tuple[dict, dict]:
    """Flat key/value mapping plus the line number of each key."""
    values: dict[str, str] = {}
    lines: dict[str, int] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        stripped = raw.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if "=" not in stripped:
            raise ConfigError(f"expected 'key = value', got {stripped!r}", lineno)
        key, _, value = stripped.partition("=")
        key = key.strip()
        value = value.strip()
        if not key:
            raise ConfigError("empty key", lineno)
        if key in values:
            raise ConfigError(f"duplicate key {key!r}", lineno)
        values[key] = value
        lines[key] = lineno
    return values, lines


def canonical_config(values: dict) -> str:
    return "\n".join(f"{k} = {values[k]}" for k in sorted(values)) + "\n"


def config_digest(values: dict) -> str:
    return hashlib.sha256(canonical_config(values).encode()).hexdigest()


def _section(values: dict, prefix: str) -> dict:
    plen = len(prefix) + 1
    return {k[plen:]: v for k, v in values.items() if k.startswith(prefix + ".")}


def _numbered_sections(values: dict, prefix: str) -> dict[int, dict]:
    out: dict[int, dict] = {}
    for key, value in values.items():
        if not key.startswith(prefix + "."):
            continue
        rest = key[len(prefix) + 1:]
        head, _, tail = rest.partition(".")
        if head.isdigit() and tail:
            out.setdefault(int(head), {})[tail] = value
    return out


_KNOWN_TOP = {"experiment", "label", "base_seed", "trials", "horizon",
              "model", "predictor", "loss", "estimator", "check", "checkpoint"}


def build_experiment(values: dict, lines: dict,
                     trials: int | None = None,
                     horizon: int | None = None) -> harness.ExperimentConfig:
    def fail(message: str, key: str | None = None):
        raise ConfigError(message, lines.get(key))

    for key in values:
        if key.split(".")[0] not in _KNOWN_TOP:
            fail(f"unknown key {key!r}", key)

    for required in ("base_seed", "trials", "horizon"):
        if required not in values:
            raise ConfigError(f"missing required key {required!r}")

    try:
        base_seed = int(values["base_seed"])
        n_trials = trials if trials is not None else int(values["trials"])
        n_horizon = horizon if horizon is not None else int(values["horizon"])
    except ValueError as exc:
        raise ConfigError(f"numeric key invalid: {exc}")

    kind = values.get("experiment.kind", "trajectory")
    if kind not in ("trajectory", "stopping"):
        fail(f"experiment.kind must be trajectory or stopping, got {kind!r}",
             "experiment.kind")

    numbered = _numbered_sections(values, "model")
    try:
        if numbered:
            model_pairs = []
            for idx in sorted(numbered):
                params = numbered[idx]
                weight = float(params.pop("weight", "1"))
                model_pairs.append((catalog.build_model(params, f"model.{idx}"), weight))
        else:
            section = _section(values, "model")
            if not section:
                raise ConfigError("missing model.* section")
            model_pairs = [(catalog.build_model(section, "model"), 1.0)]

        specs = [m for m, _ in model_pairs]
        predictor_factory = None
        loss = None
        estimator = None
        if kind == "trajectory":
            predictor_factory = catalog.build_predictor(_section(values, "predictor"), specs)
            loss = catalog.build_loss(_section(values, "loss"))
        else:
            estimator = catalog.build_estimator(_section(values, "estimator"))

        checks = []
        for idx in sorted(_numbered_sections(values, "check")):
            params = _numbered_sections(values, "check")[idx]
            if "kind" not in params:
                raise ConfigError(f"check.{idx} needs a kind")
            ckind = params.pop("kind")
            parsed = {}
            for name, raw in params.items():
                if name in ("step", "lo", "hi", "max_step"):
                    parsed[name] = int(raw)
                elif name == "name":
                    parsed[name] = raw
                else:
                    parsed[name] = float(raw)
            checks.append(harness.Check(ckind, parsed))

        checkpoints = tuple(int(v) for k, v in sorted(values.items())
                            if k.startswith("checkpoint."))

        return harness.ExperimentConfig(
            label=values.get("label", "experiment"),
            models=model_pairs,
            horizon=n_horizon,
            trials=n_trials,
            base_seed=base_seed,
            kind=kind,
            predictor_factory=predictor_factory,
            loss=loss,
            estimator=estimator,
            checkpoints=checkpoints,
            checks=tuple(checks),
        )
    except ConfigurationError as exc:
        raise ConfigError(str(exc))


def cmd_run(args) -> int:
    path = Path(args.config)
    if not path.is_file():
        print(f"error: config file not found: {path}", file=sys.stderr)
        return 2
    try:
        values, lines = parse_config(path.read_text())
        config = build_experiment(values, lines, args.trials, args.horizon)
    except (ConfigError, ConfigurationError) as exc:
        print(f"error: {path.name}: {exc}", file=sys.stderr)
        return 2

    started = time.time()
    report = harness.run_monte_carlo(config)
    elapsed = time.time() - started

    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    stem = path.stem
    csv_path = out_dir / f"{stem}.csv"
    summary_path = out_dir / f"{stem}_summary.json"
    manifest_path = out_dir / f"{stem}_manifest.json"
    figure_path = out_dir / f"{stem}_curve.png"

    csv_path.write_bytes(("\n".join(report.csv_rows()) + "\n").encode())
    summary = report.to_json_dict()
    summary["config_sha256"] = config_digest(values)
    summary["effective_trials"] = config.trials
    summary["effective_horizon"] = config.horizon
    summary_path.write_bytes(
        (json.dumps(summary, sort_keys=True, indent=2) + "\n").encode())

    from .plotting import render_report_figure
    render_report_figure(report, figure_path)

    manifest = {
        "config_path": str(path),
        "config_sha256": summary["config_sha256"],
        "outputs": {
            "csv": csv_path.name,
            "summary": summary_path.name,
            "figure": figure_path.name,
        },
        "versions": {
            "easpred": __version__,
            "python": sys.version.split()[0],
            "numpy": np.__version__,
        },
        "wall_clock_seconds": round(elapsed, 3),
        "created_unix": int(started),
    }
    manifest_path.write_bytes(
        (json.dumps(manifest, sort_keys=True, indent=2) + "\n").encode())

    for check in report.checks:
        status = "pass" if check.passed else "FAIL"
        print(f"[{status}] {check.kind} observed={check.observed:.6g} params={check.params}")
    print(f"{config.label}: {'pass' if report.passed else 'FAIL'} "
          f"({config.trials} trials, horizon {config.horizon}, {elapsed:.1f}s)")
    return 0 if report.passed else 1


def cmd_list(_args) -> int:
    rows = catalog.list_catalog()
    width = max(len(name) for name, _, _ in rows)
    kind_width = max(len(kind) for _, kind, _ in rows)
    for name, kind, ref in rows:
        print(f"{name:<{width}}  {kind:<{kind_width}}  {ref}")
    print(f"{len(rows)} catalog entries")
    return 0


_ORACLE_SUITES = {
    "tv": lambda: harness.tv_suite(),
    "lecam": lambda: harness.lecam_suite(),
    "mlpartition": lambda: harness.ml_partition_suite(),
    "combinator-state": lambda: harness.combinator_state_suite(),
}


def cmd_oracle(args) -> int:
    suite = args.suite
    if suite not in _ORACLE_SUITES:
        print(f"error: unknown suite {suite!r}; choose from "
              f"{', '.join(sorted(_ORACLE_SUITES))}", file=sys.stderr)
        return 2
    result = _ORACLE_SUITES[suite]()
    print(json.dumps({"suite": suite, **result}, sort_keys=True))
    failures = result.get("violations", 0) + result.get("state_mismatches", 0) \
        + result.get("grid_violations", 0)
    return 0 if failures == 0 else 1


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="easpred",
        description="Sequential prediction experiments with settle-rate acceptance checks")
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="run one experiment config")
    run_p.add_argument("config")
    run_p.add_argument("--trials", type=int, default=None)
    run_p.add_argument("--horizon", type=int, default=None)
    run_p.add_argument("--out", default="runs")
    run_p.set_defaults(fn=cmd_run)

    list_p = sub.add_parser("list", help="print the catalog of identifiers")
    list_p.set_defaults(fn=cmd_list)

    oracle_p = sub.add_parser("oracle", help="run a brute-force oracle suite")
    oracle_p.add_argument("suite")
    oracle_p.set_defaults(fn=cmd_oracle)

    args = parser.parse_args(argv)
    return args.fn(args)


if __name__ == "__main__":
    sys.exit(main())
