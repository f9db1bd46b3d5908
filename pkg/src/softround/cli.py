"""Command-line front end.

Four subcommands reproduce the library's studies end to end:

* ``toy-misalign`` -- bad-pair counts for hard rounding on random quadratics;
* ``toy-soft``     -- the same counts with soft rounding over a temperature
  grid (optionally plotted);
* ``train-fl``     -- training curves on one facility-location instance with
  and without soft derandomization in the loss;
* ``grad-check``   -- reverse-mode versus finite-difference gradient audit.

Every command resolves its configuration as defaults < ``--config`` JSON <
explicit flags, writes the resolved configuration next to its outputs before
computing anything, and produces deterministic, byte-identical files for a
fixed seed.  Exit codes: 0 success (including expected low-temperature
training aborts, which are reported as warnings), 1 runtime failure, 2 usage
error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from .experiments import (
    fractions_by_temperature,
    run_grad_check,
    run_toy_misalign,
    run_toy_soft,
    run_train_fl,
)
from .misalign import DEFAULT_TEMPERATURES
from .plotting import Series, line_chart, write_svg
from .reporting import (
    CURVE_HEADER,
    GRADCHECK_HEADER,
    MISALIGN_HEADER,
    curve_rows,
    misalign_rows,
    write_csv,
    write_json,
)


class UsageError(ValueError):
    """Bad flag or configuration values; maps to exit code 2."""


_COMMON_DEFAULTS = {"seed": 0, "jobs": os.cpu_count() or 1}

COMMAND_DEFAULTS = {
    "toy-misalign": {
        **_COMMON_DEFAULTS,
        "n": 50,
        "samples": 100,
        "trials": 5,
        "scheme": "both",
        "out": "softround-toy-misalign",
    },
    "toy-soft": {
        **_COMMON_DEFAULTS,
        "n": 50,
        "samples": 100,
        "trials": 5,
        "scheme": "both",
        "temperatures": DEFAULT_TEMPERATURES,
        "plot": False,
        "out": "softround-toy-soft",
    },
    "train-fl": {
        **_COMMON_DEFAULTS,
        "n": 200,
        "k": 20,
        "beta": 1.0,
        "epochs": 300,
        "lr": 0.01,
        "steps": None,
        "scheme": "both",
        "temperatures": DEFAULT_TEMPERATURES,
        "plot": False,
        "out": "softround-train-fl",
    },
    "grad-check": {
        **_COMMON_DEFAULTS,
        "n": 10,
        "k": 3,
        "beta": 1.0,
        "problem": "both",
        "scheme": "all",
        "temperatures": (1.0, 0.1),
        "points": 5,
        "threshold": 1e-4,
        "out": "softround-grad-check",
    },
}

_TOY_SCHEMES = {"iterative": ("iterative",), "greedy": ("greedy",),
                "both": ("iterative", "greedy")}
_TRAIN_SCHEMES = {"soft-iterative": ("soft-iterative",),
                  "soft-greedy": ("soft-greedy",),
                  "both": ("soft-iterative", "soft-greedy")}
_CHECK_PIPELINES = {"none": ("none",), "soft-iterative": ("soft-iterative",),
                    "soft-greedy": ("soft-greedy",),
                    "all": ("none", "soft-iterative", "soft-greedy")}
_CHECK_PROBLEMS = {"quadratic": ("quadratic",), "facility": ("facility",),
                   "both": ("quadratic", "facility")}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="softround",
        description="Surrogate-objective derandomization experiments.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, help_text, flags):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", type=Path, help="JSON file with flag values")
        p.add_argument("--seed", type=int)
        p.add_argument("--jobs", type=int)
        p.add_argument("--out", type=Path)
        for flag in flags:
            if flag == "--temperatures":
                p.add_argument(flag, type=str, help="comma-separated positive values")
            elif flag == "--plot":
                p.add_argument(flag, action=argparse.BooleanOptionalAction)
            elif flag in ("--scheme", "--problem"):
                p.add_argument(flag, type=str)
            elif flag in ("--beta", "--lr", "--threshold"):
                p.add_argument(flag, type=float)
            else:
                p.add_argument(flag, type=int)
        return p

    add("toy-misalign", "bad-pair counts for hard rounding",
        ["--n", "--samples", "--trials", "--scheme"])
    add("toy-soft", "bad-pair counts after soft rounding",
        ["--n", "--samples", "--trials", "--scheme", "--temperatures", "--plot"])
    add("train-fl", "train on one facility-location instance",
        ["--n", "--k", "--beta", "--epochs", "--lr", "--steps", "--scheme",
         "--temperatures", "--plot"])
    add("grad-check", "gradient audit against finite differences",
        ["--n", "--k", "--beta", "--problem", "--scheme", "--temperatures",
         "--points", "--threshold"])
    return parser


def _parse_temperatures(value) -> tuple[float, ...]:
    if isinstance(value, str):
        try:
            parsed = tuple(float(part) for part in value.split(",") if part.strip())
        except ValueError as exc:
            raise UsageError(f"bad temperature list {value!r}") from exc
    else:
        parsed = tuple(float(v) for v in value)
    if not parsed:
        raise UsageError("temperature list is empty")
    if any(t <= 0 for t in parsed):
        raise UsageError("temperatures must be positive")
    return parsed


def resolve_config(args: argparse.Namespace) -> dict:
    defaults = COMMAND_DEFAULTS[args.command]
    file_values = {}
    if args.config is not None:
        try:
            file_values = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot read config file: {exc}") from exc
        unknown = set(file_values) - set(defaults)
        if unknown:
            raise UsageError(f"unknown config keys: {sorted(unknown)}")

    resolved = {}
    for key, fallback in defaults.items():
        flag = getattr(args, key, None)
        value = flag if flag is not None else file_values.get(key, fallback)
        resolved[key] = value

    if "temperatures" in resolved:
        resolved["temperatures"] = _parse_temperatures(resolved["temperatures"])
    for key, table in (("scheme", None), ("problem", _CHECK_PROBLEMS)):
        if key not in resolved:
            continue
        if key == "scheme":
            table = {"toy-misalign": _TOY_SCHEMES, "toy-soft": _TOY_SCHEMES,
                     "train-fl": _TRAIN_SCHEMES, "grad-check": _CHECK_PIPELINES}[args.command]
        if resolved[key] not in table:
            raise UsageError(
                f"bad --{key} {resolved[key]!r}; expected one of {sorted(table)}"
            )
    for key in ("n", "samples", "trials", "epochs", "points", "jobs", "k"):
        if key in resolved and (not isinstance(resolved[key], int) or resolved[key] < 0):
            raise UsageError(f"--{key} must be a non-negative integer")
    resolved["out"] = Path(resolved["out"])
    resolved["command"] = args.command
    return resolved


def _write_run_config(cfg: dict) -> None:
    doc = {
        key: (str(value) if isinstance(value, Path) else
              list(value) if isinstance(value, tuple) else value)
        for key, value in cfg.items()
    }
    write_json(cfg["out"] / "config.json", doc)


def _cmd_toy_misalign(cfg: dict) -> int:
    _write_run_config(cfg)
    reports = run_toy_misalign(
        seed=cfg["seed"], n=cfg["n"], samples=cfg["samples"], trials=cfg["trials"],
        schemes=_TOY_SCHEMES[cfg["scheme"]], jobs=cfg["jobs"],
    )
    rows = misalign_rows(reports, aggregate=True)
    path = write_csv(cfg["out"] / "misalign.csv", MISALIGN_HEADER, rows)
    for row in rows:
        if row[0] == "average":
            print(f"{row[1]}: mean bad pairs {row[3]:.1f} of {row[4]} ({row[5]:.1%})")
    print(f"wrote {path}")
    return 0


def _cmd_toy_soft(cfg: dict) -> int:
    _write_run_config(cfg)
    schemes = _TOY_SCHEMES[cfg["scheme"]]
    reports = run_toy_soft(
        seed=cfg["seed"], n=cfg["n"], samples=cfg["samples"], trials=cfg["trials"],
        schemes=schemes, temperatures=cfg["temperatures"], jobs=cfg["jobs"],
    )
    path = write_csv(
        cfg["out"] / "soft_misalign.csv", MISALIGN_HEADER, misalign_rows(reports)
    )
    print(f"wrote {path}")
    for scheme in schemes:
        means = fractions_by_temperature(reports, scheme, cfg["temperatures"])
        pairs = ", ".join(
            f"tau={t:g}: {m:.3f}" for t, m in zip(cfg["temperatures"], means)
        )
        print(f"{scheme}: mean fraction by temperature -> {pairs}")
    if cfg["plot"]:
        series = [
            Series(
                label=scheme,
                xs=tuple(cfg["temperatures"]),
                ys=tuple(fractions_by_temperature(reports, scheme, cfg["temperatures"])),
            )
            for scheme in schemes
        ]
        svg = line_chart(
            series,
            title="Bad-pair fraction after soft rounding",
            x_label="softmax temperature",
            y_label="mean bad-pair fraction",
            log_x=True,
        )
        print(f"wrote {write_svg(cfg['out'] / 'soft_misalign.svg', svg)}")
    return 0


def _curve_series(runs, scheme: str, column) -> list[Series]:
    series = []
    for run in runs:
        if run["scheme"] not in ("none", scheme):
            continue
        records = run["curve"].records
        if not records:
            continue
        series.append(
            Series(
                label=run["label"],
                xs=tuple(r.epoch for r in records),
                ys=tuple(column(r) for r in records),
            )
        )
    return series


def _cmd_train_fl(cfg: dict) -> int:
    _write_run_config(cfg)
    schemes = _TRAIN_SCHEMES[cfg["scheme"]]
    problem, runs = run_train_fl(
        seed=cfg["seed"], n=cfg["n"], k=cfg["k"], beta=cfg["beta"], schemes=schemes,
        temperatures=cfg["temperatures"], epochs=cfg["epochs"],
        learning_rate=cfg["lr"], steps=cfg["steps"], jobs=cfg["jobs"],
    )
    write_json(cfg["out"] / "instance.json", problem.to_json())
    for run in runs:
        curve = run["curve"]
        write_csv(cfg["out"] / f"curve_{run['label']}.csv", CURVE_HEADER, curve_rows(curve))
        write_json(
            cfg["out"] / f"curve_{run['label']}.json",
            {
                "label": run["label"],
                "command_seed": cfg["seed"],
                "instance": {"n": cfg["n"], "k": cfg["k"], "beta": cfg["beta"]},
                **{k: v for k, v in curve.metadata.items()},
            },
        )
        if run["aborted_epoch"] is not None:
            print(
                f"warning: run {run['label']} stopped early at epoch "
                f"{run['aborted_epoch']} ({curve.abort_reason}); partial curve written",
                file=sys.stderr,
            )
    if cfg["plot"]:
        test_column = {
            "soft-iterative": lambda r: r.test_iterative,
            "soft-greedy": lambda r: r.test_greedy,
        }
        for scheme in schemes:
            loss_series = _curve_series(runs, scheme, lambda r: r.train_loss)
            write_svg(
                cfg["out"] / f"train_loss_{scheme}.svg",
                line_chart(loss_series, title=f"Training loss ({scheme})",
                           x_label="epoch", y_label="training loss"),
            )
            write_svg(
                cfg["out"] / f"test_objective_{scheme}.svg",
                line_chart(_curve_series(runs, scheme, test_column[scheme]),
                           title=f"Test objective ({scheme})",
                           x_label="epoch", y_label="test objective"),
            )
    print(f"wrote {len(runs)} curves to {cfg['out']}")
    return 0


def _cmd_grad_check(cfg: dict) -> int:
    _write_run_config(cfg)
    rows = run_grad_check(
        seed=cfg["seed"], problems=_CHECK_PROBLEMS[cfg["problem"]],
        pipelines=_CHECK_PIPELINES[cfg["scheme"]], temperatures=cfg["temperatures"],
        points=cfg["points"], n=cfg["n"], k=cfg["k"], beta=cfg["beta"],
    )
    write_csv(cfg["out"] / "gradcheck.csv", GRADCHECK_HEADER, rows)
    print(f"{'problem':<12} {'pipeline':<16} {'tau':>8} {'max rel err':>14}")
    worst = 0.0
    for problem_name, pipeline, tau, _, err in rows:
        tau_text = f"{tau:g}" if tau is not None else "-"
        print(f"{problem_name:<12} {pipeline:<16} {tau_text:>8} {err:>14.3e}")
        worst = max(worst, err)
    if worst >= cfg["threshold"]:
        print(
            f"FAIL: max relative error {worst:.3e} >= threshold {cfg['threshold']:g}",
            file=sys.stderr,
        )
        return 1
    print(f"OK: all errors below {cfg['threshold']:g}")
    return 0


_HANDLERS = {
    "toy-misalign": _cmd_toy_misalign,
    "toy-soft": _cmd_toy_soft,
    "train-fl": _cmd_train_fl,
    "grad-check": _cmd_grad_check,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = resolve_config(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 2
    try:
        return _HANDLERS[args.command](cfg)
    except Exception as exc:  # runtime failure: diagnostics on stderr
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
