"""``spectre-da`` command line: run an experiment config, or just validate it.

Exit codes: 0 success, 1 input/config error, 2 numeric failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import platform
import sys
import time
from importlib import resources
from pathlib import Path

import numpy as np

from . import __version__
from .config import ExperimentConfig, load_config
from .da_core import run_chain
from .distributions import RngStream
from .models import (
    MixtureModel,
    MixtureTheta,
    PswModel,
    ToyModel,
    fit_logistic_mle,
    mixture_kmeans_start,
    simulate_mixture_data,
)
from .numerics import CapabilityError, InputError, NumericError
from .spectrum import eigenvalue_trajectory, resolve_threads

EXIT_OK, EXIT_INPUT, EXIT_NUMERIC = 0, 1, 2
CSV_COLUMNS = ("experiment", "variant", "m", "N", "rank", "eigenvalue")

# child streams of the master seed
_DATA_STREAM, _CHAIN_STREAM, _SPECTRUM_STREAM = 0, 1, 2


# -----------------------------------------------------------------------------
# Data


def bundled_dataset(name: str) -> Path:
    path = resources.files("spectre_da") / "data" / f"{name}.csv"
    return Path(str(path))


def load_binary_design(path):
    """Read a 0/1 CSV with response column ``r``; return (U with intercept, y)."""
    path = Path(path)
    if not path.is_file():
        raise InputError(f"dataset not found: {path}")
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise InputError(f"{path}: empty file") from None
        if "r" not in header:
            raise InputError(f"{path}: response column 'r' is missing (columns: {header})")
        rows = []
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != len(header):
                raise InputError(f"{path}: line {lineno} has {len(row)} fields, expected {len(header)}")
            values = []
            for col, cell in zip(header, row):
                cell = cell.strip()
                if cell not in ("0", "1"):
                    raise InputError(f"{path}: line {lineno}, column {col!r}: value {cell!r} is not 0/1")
                values.append(int(cell))
            rows.append(values)
    if not rows:
        raise InputError(f"{path}: no data rows")
    data = np.array(rows, dtype=float)
    r = header.index("r")
    y = data[:, r]
    X = np.delete(data, r, axis=1)
    U = np.column_stack([np.ones(len(y)), X])
    return U, y


def _resolve_dataset(name: str) -> Path:
    path = Path(name)
    if path.suffix == "" and not path.exists():
        bundled = bundled_dataset(name)
        if bundled.is_file():
            return bundled
    return path


def _prior(value, p, what, matrix):
    arr = np.asarray(value, dtype=float)
    if arr.ndim == 0:
        return float(arr) * np.eye(p) if matrix else np.full(p, float(arr))
    expected = (p, p) if matrix else (p,)
    if arr.shape != expected:
        raise InputError(f"psw.{what} has shape {arr.shape}, expected {expected}")
    return arr


# -----------------------------------------------------------------------------
# Experiments


def _toy_runs(cfg: ExperimentConfig, root: RngStream):
    model = ToyModel()
    trace = run_chain(model, 0.0, cfg.burn_in, cfg.m_grid[-1], root.child(_CHAIN_STREAM))
    yield "", model, trace


def _psw_runs(cfg: ExperimentConfig, root: RngStream):
    U, y = load_binary_design(_resolve_dataset(cfg.psw.dataset))
    p = U.shape[1]
    model = PswModel(
        U,
        y,
        _prior(cfg.psw.b, p, "b", False),
        _prior(cfg.psw.B, p, "B", True),
        pg_method=cfg.psw.pg_method,
    )
    x0 = fit_logistic_mle(U, y)
    trace = run_chain(model, x0, cfg.burn_in, cfg.m_grid[-1], root.child(_CHAIN_STREAM))
    yield "", model, trace


def _mixture_runs(cfg: ExperimentConfig, root: RngStream):
    mx = cfg.mixture
    truth = MixtureTheta(mx.mu1, mx.mu2, mx.p)
    y = simulate_mixture_data(truth, mx.tau, mx.n, root.child(_DATA_STREAM).generator())
    start = mixture_kmeans_start(y)
    for variant in mx.variants:
        model = MixtureModel(y, mx.tau, variant)
        chain = root.child(_CHAIN_STREAM)
        z0 = model.draw_next_state(start, chain.child(0).generator())
        trace = run_chain(model, z0, cfg.burn_in, cfg.m_grid[-1], chain.child(1))
        yield variant, model, trace


_RUNNERS = {"toy": _toy_runs, "psw": _psw_runs, "mixture": _mixture_runs}


def format_float(x: float) -> str:
    # shortest round-trip decimal
    return repr(float(x))


def run_experiment(cfg: ExperimentConfig, out_dir=None, threads=None, log=None) -> dict:
    """Run ``cfg``; write trajectory.csv and meta.json under ``out_dir`` if given.

    Returns a dict with the CSV text, the metadata and the trajectory rows.
    """
    threads = resolve_threads(cfg.threads if threads is None else threads)
    root = RngStream(cfg.master_seed)
    start = time.perf_counter()
    records, timings = [], []
    for variant, model, trace in _RUNNERS[cfg.experiment](cfg, root):
        if log:
            log(f"{cfg.experiment} {variant or '-'}: chain ready ({trace.m} states)")
        rows = eigenvalue_trajectory(
            model,
            trace,
            cfg.m_grid,
            cfg.schedule,
            cfg.rescale,
            cfg.top_k,
            root.child(_SPECTRUM_STREAM),
            threads=threads,
            estimator=cfg.estimator,
        )
        for row in rows:
            records.append((cfg.experiment, variant, row))
            if row.rank == 0:
                timings.append({"variant": variant, "m": row.m, "N": row.N, "wall_seconds": row.wall_seconds})
                if log:
                    log(f"  m={row.m} N={row.N}: {row.wall_seconds:.1f}s")

    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for exp, variant, row in records:
        writer.writerow([exp, variant, row.m, row.N, row.rank, format_float(row.eigenvalue)])
    csv_text = buf.getvalue()

    meta = {
        "master_seed": cfg.master_seed,
        "config": cfg.to_dict(),
        "threads": threads,
        "versions": {
            "spectre_da": __version__,
            "python": platform.python_version(),
            "numpy": np.__version__,
        },
        "timings": timings,
        "wall_seconds": time.perf_counter() - start,
    }
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        (out / "trajectory.csv").write_text(csv_text)
        (out / "meta.json").write_text(json.dumps(meta, indent=2) + "\n")
    return {"csv": csv_text, "meta": meta, "rows": records}


# -----------------------------------------------------------------------------
# Entry point


def _parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="spectre-da",
        description="Estimate eigenvalue spectra of data augmentation Markov operators.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    run = sub.add_parser("run", help="run an experiment config")
    run.add_argument("--config", required=True, help="TOML (or meta.json) experiment config")
    run.add_argument("--out-dir", default="results", help="output directory (default: results)")
    run.add_argument("--threads", default=None, help="worker threads, or 'auto' (env SPECTRE_DA_THREADS)")
    run.add_argument("--seed", type=int, default=None, help="override master_seed")
    run.add_argument("--quiet", action="store_true", help="no progress on stderr")
    val = sub.add_parser("validate", help="check a config without running it")
    val.add_argument("--config", required=True)
    return parser


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
        if args.command == "validate":
            print(json.dumps(cfg.to_dict(), indent=2))
            return EXIT_OK
        if args.seed is not None:
            if not 0 <= args.seed < 2**64:
                raise InputError(f"--seed must be a 64-bit unsigned integer, got {args.seed}")
            cfg.master_seed = args.seed
        threads = args.threads
        if threads is None and os.environ.get("SPECTRE_DA_THREADS"):
            threads = "auto"
        log = None if args.quiet else (lambda msg: print(msg, file=sys.stderr, flush=True))
        run_experiment(cfg, args.out_dir, threads=threads, log=log)
    except (InputError, CapabilityError) as exc:
        print(f"spectre-da: input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except NumericError as exc:
        print(f"spectre-da: numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except ValueError as exc:  # e.g. bad --threads / SPECTRE_DA_THREADS
        print(f"spectre-da: input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    return EXIT_OK


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
