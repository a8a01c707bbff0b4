"""Command-line entry point.

Usage: ``popgate <subcommand> --config run.json [--seed N] [--workspace DIR]
[--threads N]``. Every option can also come from the environment
(POPGATE_CONFIG, POPGATE_SEED, POPGATE_WORKSPACE, POPGATE_THREADS) or from
top-level config keys; flags win over the environment, which wins over the
config file. Exit codes: 0 ok, 1 generic failure, 2 missing input, 3 bad
config, 4 shape mismatch.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from .exceptions import ConfigError, MissingInputError, PopgateError
from .pipeline import DEFAULT_SEED, SUBCOMMANDS, run_command

_DESCRIPTIONS = {
    "synth": "generate a synthetic catalog with planted cross-modal structure",
    "clean": "filter the catalog and normalize lyrics",
    "split": "stratified train/test assignment by popularity bin",
    "ctd-extract": "turn raw listening events into per-track CTD features",
    "ae-train": "train the per-group audio compression autoencoders",
    "compress": "apply trained autoencoders to a feature matrix",
    "train-phase1": "train each modality branch on its own",
    "train-phase2": "joint fine-tune with the learnable gate",
    "predict": "write per-track predictions and gate weights",
    "evaluate": "score predictions against held-out popularity",
    "gate-report": "summarize gate weights, optionally per decade",
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="path to the run config (JSON)")
    common.add_argument("--seed", type=int, help=f"base RNG seed (default {DEFAULT_SEED})")
    common.add_argument("--workspace", help="root for relative paths (default: config dir)")
    common.add_argument("--threads", type=int, help="cap BLAS/OpenMP threads")

    parser = argparse.ArgumentParser(
        prog="popgate",
        description="multimodal music-popularity pipeline",
    )
    sub = parser.add_subparsers(dest="command", required=True, metavar="subcommand")
    for name in SUBCOMMANDS:
        sub.add_parser(name, parents=[common], help=_DESCRIPTIONS[name])
    return parser


def _env(name: str) -> str | None:
    v = os.environ.get(name)
    return v if v else None


def _as_int(value, what: str) -> int:
    try:
        return int(value)
    except (TypeError, ValueError):
        raise ConfigError(f"{what} must be an integer, got {value!r}") from None


def _load_config(args) -> tuple[dict, Path]:
    config_path = args.config or _env("POPGATE_CONFIG")
    if not config_path:
        raise ConfigError("no config given: pass --config PATH or set POPGATE_CONFIG")
    path = Path(config_path)
    if not path.is_file():
        raise MissingInputError(f"config file not found: {path}")
    try:
        config = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as e:
        raise ConfigError(f"{path} is not valid JSON: {e}") from None
    if not isinstance(config, dict):
        raise ConfigError(f"{path}: config root must be a JSON object")
    return config, path


def _set_threads(n: int) -> None:
    # best effort: BLAS backends read these at first use
    if n < 1:
        raise ConfigError(f"--threads must be positive, got {n}")
    for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS",
                "NUMEXPR_NUM_THREADS"):
        os.environ[var] = str(n)


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        config, config_path = _load_config(args)

        if args.threads is not None:
            threads = args.threads
        elif _env("POPGATE_THREADS"):
            threads = _as_int(_env("POPGATE_THREADS"), "POPGATE_THREADS")
        else:
            threads = config.get("threads")
        if threads is not None:
            _set_threads(_as_int(threads, "threads"))

        if args.seed is not None:
            seed = args.seed
        elif _env("POPGATE_SEED"):
            seed = _as_int(_env("POPGATE_SEED"), "POPGATE_SEED")
        else:
            seed = _as_int(config.get("seed", DEFAULT_SEED), "config key 'seed'")

        workspace = (
            args.workspace
            or _env("POPGATE_WORKSPACE")
            or config.get("workspace")
            or config_path.parent
        )
        try:
            summary = run_command(args.command, config, workspace, seed)
        except TypeError as e:
            # dataclass kwargs from config sections land here on unknown keys
            raise ConfigError(f"invalid config for {args.command!r}: {e}") from None
    except PopgateError as e:
        print(f"error: {e}", file=sys.stderr)
        return e.exit_code
    except ValueError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    print(summary)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
