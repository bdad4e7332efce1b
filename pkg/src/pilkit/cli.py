"""Batch command-line front end: ``pilkit train | eval | diagnose``.

Exit status: 0 success, 2 configuration/usage error, 3 data error,
4 numerical failure. Settings resolve as command-line flag, then
``--config`` file, then built-in default; the seed additionally falls back
to ``$PILKIT_SEED`` before the default.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
import time

import numpy as np

from . import __version__
from .activation import Activation
from .dataset import MODES, TargetEncoding, load_csv
from .diagnostics import (
    DEFAULT_EPSILONS,
    SaturationProbe,
    counterexample_fx,
    csv_text,
    error_floor,
    fx_rank_experiment,
    theorem1_sweep,
)
from .errors import (
    ConfigError,
    DatasetError,
    DomainError,
    FormatError,
    InvalidMatrix,
    NumericalError,
    ShapeMismatch,
)
from .linalg import frobenius_error
from .network import forward, load, save
from .trainers import ALGORITHMS, TrainConfig, train

SCHEMA_VERSION = 1
DIAGNOSTICS = ("theorem1", "fx-rank", "error-floor")
SEED_ENV = "PILKIT_SEED"

EXIT_OK, EXIT_CONFIG, EXIT_DATA, EXIT_NUMERIC = 0, 2, 3, 4

DEFAULTS = {
    "algo": "pil",
    "features": None,
    "target": None,
    "hidden_width": "auto",
    "stopping_error": 1e-8,
    "max_depth": 16,
    "noise_stddev": 0.01,
    "seed": 0,
    "weight_interval": None,
    "encoding": "regression-scaled",
    "activation": None,
    "output_activation": None,
    "hidden_bias": False,
    "out": "model.pilnet",
    "report": None,
    "format": "json",
    "points": 100,
    "samples": 50,
    "n_features": 5,
    "epsilons": None,
}


class UsageError(Exception):
    """Bad flag value or config file; maps to exit status 2."""


def _float_pair(text: str) -> tuple[float, float]:
    parts = [p for p in str(text).replace(" ", "").split(",") if p]
    if len(parts) != 2:
        raise UsageError(f"expected 'lo,hi', got {text!r}")
    try:
        return float(parts[0]), float(parts[1])
    except ValueError:
        raise UsageError(f"expected two numbers in {text!r}") from None


def read_config_file(path: str) -> dict:
    """Parse a flat ``key = value`` file (``#`` comments, UTF-8)."""
    out = {}
    try:
        with open(path, encoding="utf-8") as fh:
            lines = fh.read().splitlines()
    except OSError as exc:
        raise UsageError(f"cannot read config file {path}: {exc}") from None
    for num, line in enumerate(lines, 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise UsageError(f"{path}:{num}: expected key = value")
        key = key.strip().replace("-", "_")
        if key not in DEFAULTS:
            raise UsageError(f"{path}:{num}: unknown key {key!r}")
        out[key] = value.strip()
    return out


def _coerce(key: str, value):
    if value is None or key not in ("max_depth", "seed", "points", "samples", "n_features",
                                    "stopping_error", "noise_stddev", "hidden_bias"):
        return value
    if key == "hidden_bias":
        if isinstance(value, bool):
            return value
        return str(value).lower() in ("1", "true", "yes", "on")
    try:
        return float(value) if key in ("stopping_error", "noise_stddev") else int(value)
    except (TypeError, ValueError):
        raise UsageError(f"bad value for {key}: {value!r}") from None


def resolve(args: argparse.Namespace) -> dict:
    """Merge flags over config-file values over defaults."""
    file_values = read_config_file(args.config) if getattr(args, "config", None) else {}
    merged = {}
    for key, default in DEFAULTS.items():
        flag = getattr(args, key, None)
        if flag is not None:
            merged[key] = flag
        elif key in file_values:
            merged[key] = file_values[key]
        elif key == "seed" and os.environ.get(SEED_ENV):
            merged[key] = os.environ[SEED_ENV]
        else:
            merged[key] = default
        merged[key] = _coerce(key, merged[key])
    return merged


def _encoding(cfg: dict) -> TargetEncoding:
    if cfg["encoding"] not in MODES:
        raise UsageError(f"unknown encoding {cfg['encoding']!r}; expected one of {', '.join(MODES)}")
    return TargetEncoding(cfg["encoding"])


def train_config(cfg: dict) -> TrainConfig:
    width = cfg["hidden_width"]
    if str(width).lower() == "auto":
        width = None
    else:
        try:
            width = int(width)
        except ValueError:
            raise UsageError(f"--hidden-width must be an integer or 'auto', got {width!r}") from None
    kwargs = dict(
        hidden_width=width,
        stopping_error=cfg["stopping_error"],
        max_depth=cfg["max_depth"],
        noise_stddev=cfg["noise_stddev"],
        random_seed=cfg["seed"],
        activation=Activation.parse(cfg["activation"] or "tanh"),
        hidden_bias=cfg["hidden_bias"],
    )
    if cfg["weight_interval"]:
        kwargs["weight_interval"] = _float_pair(cfg["weight_interval"])
    if cfg["output_activation"]:
        kwargs["output_activation"] = Activation.parse(cfg["output_activation"])
    return TrainConfig(**kwargs)


def _json_safe(obj):
    if isinstance(obj, float) and not math.isfinite(obj):
        return None
    if isinstance(obj, dict):
        return {k: _json_safe(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_json_safe(v) for v in obj]
    if isinstance(obj, np.generic):
        return _json_safe(obj.item())
    return obj


def _flatten(prefix: str, obj, rows: list) -> None:
    if isinstance(obj, dict):
        for k, v in obj.items():
            _flatten(f"{prefix}.{k}" if prefix else k, v, rows)
    elif isinstance(obj, list) and obj and isinstance(obj[0], (dict, list)):
        for i, v in enumerate(obj):
            _flatten(f"{prefix}.{i}", v, rows)
    else:
        rows.append((prefix, json.dumps(obj) if isinstance(obj, list) else obj))


def emit(payload: dict, cfg: dict, csv_rows: list | None = None) -> None:
    """Write the report to ``cfg['report']`` or stdout.

    JSON output keeps ``timing`` as its own top-level key so reports can be
    compared byte for byte once that key is dropped. CSV output writes the
    experiment's data rows when it has them, else flattened key/value pairs.
    """
    if cfg["format"] == "csv":
        if csv_rows is None:
            flat: list = []
            _flatten("", {k: v for k, v in payload.items() if k != "timing"}, flat)
            csv_rows = [("key", "value")] + flat
        text = csv_text(csv_rows)
    else:
        text = json.dumps(_json_safe(payload), indent=2, sort_keys=True) + "\n"
    if cfg["report"]:
        with open(cfg["report"], "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _envelope(command: str, body: dict, started: float) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "command": command,
        **body,
        "timing": {"wall_time_s": time.perf_counter() - started},
    }


def cmd_train(args: argparse.Namespace) -> int:
    started = time.perf_counter()
    cfg = resolve(args)
    if cfg["algo"] not in ALGORITHMS:
        raise UsageError(f"unknown algorithm {cfg['algo']!r}; expected one of {', '.join(ALGORITHMS)}")
    tcfg = train_config(cfg)
    data = load_csv(args.data, cfg["features"], cfg["target"], _encoding(cfg))
    net, report = train(cfg["algo"], data, tcfg)
    net.meta.update({
        "encoding": data.encoding.to_dict(),
        "features": cfg["features"],
        "target": cfg["target"],
        "n_raw_features": data.n_raw_features,
    })
    save(net, cfg["out"])
    for w in report.warnings:
        print(f"warning: {w}", file=sys.stderr)
    rep = report.to_dict(timing=False)
    body = {
        "algorithm": cfg["algo"],
        "config": tcfg.to_dict(),
        "dataset": {
            "source": data.source,
            "n_samples": data.n_samples,
            "n_raw_features": data.n_raw_features,
            "n_targets": data.t.shape[1],
            "encoding": data.encoding.to_dict(),
        },
        "model": cfg["out"],
        "report": rep,
    }
    payload = _envelope("train", body, started)
    payload["timing"]["train_wall_time_s"] = report.wall_time
    emit(payload, cfg)
    return EXIT_OK


def cmd_eval(args: argparse.Namespace) -> int:
    started = time.perf_counter()
    cfg = resolve(args)
    try:
        net = load(args.model)
    except FileNotFoundError:
        raise FormatError(f"model file not found: {args.model}", 0) from None
    meta = net.meta
    enc = TargetEncoding.from_dict(meta["encoding"]) if "encoding" in meta else _encoding(cfg)
    features = cfg["features"] if cfg["features"] is not None else meta.get("features")
    target = cfg["target"] if cfg["target"] is not None else meta.get("target")
    data = load_csv(args.data, features, target, enc)
    if data.x.shape[1] != net.input_width:
        raise ShapeMismatch(
            f"model expects {net.input_width - 1} features ({net.input_width} with bias), "
            f"dataset has {data.n_raw_features} ({data.x.shape[1]} with bias)"
        )
    o = forward(net, data.x)
    if o.shape[1] != data.t.shape[1]:
        raise ShapeMismatch(
            f"model produces {o.shape[1]} outputs, dataset has {data.t.shape[1]} targets"
        )
    if not np.all(np.isfinite(o)):
        raise NumericalError("non-finite network output")
    body = {
        "model": args.model,
        "dataset": {"source": data.source, "n_samples": data.n_samples},
        "sse": frobenius_error(o, data.t),
    }
    if data.encoding.is_classification:
        body["accuracy"] = float(np.mean(np.argmax(o, axis=1) == np.argmax(data.t, axis=1)))
    emit(_envelope("eval", body, started), cfg)
    return EXIT_OK


def cmd_diagnose(args: argparse.Namespace) -> int:
    started = time.perf_counter()
    cfg = resolve(args)
    key = args.diagnostic
    rows = None
    if key == "theorem1":
        eps = DEFAULT_EPSILONS
        if cfg["epsilons"]:
            try:
                eps = tuple(float(e) for e in str(cfg["epsilons"]).split(","))
            except ValueError:
                raise UsageError(f"bad --epsilons {cfg['epsilons']!r}") from None
        probe = SaturationProbe(
            activation=Activation.parse(cfg["activation"] or "sigmoid"),
            weight_interval=_float_pair(cfg["weight_interval"] or "1,2"),
            epsilon_schedule=eps,
            n_samples=cfg["samples"],
            n_features=cfg["n_features"],
            seed=cfg["seed"],
        )
        result = theorem1_sweep(probe)
        body, rows = result.to_dict(), result.csv_rows()
    elif key == "fx-rank":
        width = cfg["hidden_width"]
        width = cfg["points"] if str(width).lower() == "auto" else int(width)
        result = fx_rank_experiment(
            n_points=cfg["points"],
            hidden_width=width,
            seed=cfg["seed"],
            activation=Activation.parse(cfg["activation"] or "tanh"),
            weight_interval=_float_pair(cfg["weight_interval"] or "-1,1"),
        )
        body, rows = result.to_dict(), result.csv_rows()
    else:
        if args.data:
            data = load_csv(args.data, cfg["features"], cfg["target"], _encoding(cfg))
        else:
            data = counterexample_fx(cfg["points"])
        width = cfg["hidden_width"]
        if str(width).lower() == "auto":
            raise UsageError("error-floor needs an explicit --hidden-width < N")
        floor = error_floor(
            data, int(width), seed=cfg["seed"],
            activation=Activation.parse(cfg["activation"] or "tanh"),
            weight_interval=_float_pair(cfg["weight_interval"] or "-1,1"),
        )
        body = {
            "experiment": "error-floor",
            "source": data.source,
            "n_samples": data.n_samples,
            "hidden_width": int(width),
            "seed": cfg["seed"],
            "error_floor": floor,
            "min_sse": floor * floor / (2 * data.n_samples),
        }
    emit(_envelope("diagnose", body, started), cfg, rows)
    return EXIT_OK


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="flat key = value config file")
    p.add_argument("--seed", type=int, help=f"random seed (falls back to ${SEED_ENV}, then 0)")
    p.add_argument("--report", help="report path (default: stdout)")
    p.add_argument("--format", choices=("json", "csv"), help="report format (default json)")
    p.add_argument("--features", help="feature columns, e.g. '0-1' (default: all but last)")
    p.add_argument("--target", help="target column(s), e.g. '2' (default: last)")
    p.add_argument("--encoding", help=f"target encoding: {', '.join(MODES)}")
    p.add_argument("--activation", help="hidden activation, e.g. tanh, sigmoid, gaussian:2")
    p.add_argument("--weight-interval", help="'lo,hi' interval for random weights")
    p.add_argument("--hidden-width", help="hidden layer width or 'auto'")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="pilkit", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="train a network and write a .pilnet model")
    _add_common(p)
    p.add_argument("--algo", choices=ALGORITHMS)
    p.add_argument("--data", required=True, help="training CSV")
    p.add_argument("--stopping-error", type=float, help="ePIL/PIL1 projector threshold E")
    p.add_argument("--max-depth", type=int, help="ePIL/PIL1 depth cap")
    p.add_argument("--noise-stddev", type=float, help="PIL1 weight-noise standard deviation")
    p.add_argument("--output-activation", help="linear, tanh or sigmoid")
    p.add_argument("--hidden-bias", action="store_true", default=None,
                   help="prepend a constant column to hidden outputs")
    p.add_argument("--out", help="model output path (default model.pilnet)")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="evaluate a .pilnet model on a dataset")
    _add_common(p)
    p.add_argument("--model", required=True, help=".pilnet model path")
    p.add_argument("--data", required=True, help="evaluation CSV")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("diagnose", help="run a rank/invertibility experiment")
    p.add_argument("diagnostic", choices=DIAGNOSTICS)
    _add_common(p)
    p.add_argument("--data", help="CSV for error-floor (default: f(x) samples)")
    p.add_argument("--points", type=int, help="f(x) sample count (default 100)")
    p.add_argument("--samples", type=int, help="theorem1 sample count N (default 50)")
    p.add_argument("--n-features", type=int, help="theorem1 input features (default 5)")
    p.add_argument("--epsilons", help="theorem1 comma-separated decreasing scales")
    p.set_defaults(func=cmd_diagnose)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (UsageError, ConfigError) as exc:
        print(f"pilkit: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericalError as exc:
        print(f"pilkit: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (DatasetError, ShapeMismatch, DomainError, FormatError, InvalidMatrix, OSError) as exc:
        print(f"pilkit: data error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
