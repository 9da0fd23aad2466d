"""Experiment driver: configuration files, single completions and (R, p) sweeps."""

from __future__ import annotations

import configparser
import csv
import logging
import os
import time
from concurrent.futures import ProcessPoolExecutor, as_completed
from dataclasses import fields

import numpy as np

from .solver import SolverConfig, sampling_rate, solve
from .synthetic import SyntheticSpec, gen_mask, gen_synthetic, psnr, relative_error
from .transforms import TransformFamily

log = logging.getLogger(__name__)

SUCCESS_RE = 1e-2
DESK_SHAPE = (20, 20, 20, 20)
LONG_SHAPE = (30, 30, 30, 30)
DIAGNOSTIC_FIELDS = ("t", "objective", "residual", "rel_residual", "mu", "eta",
                     "dZ", "dX", "dU_max", "weighted_step", "y_norm")
RECORD_FIELDS = ("shape", "R", "p", "trials", "seed", "re_mean", "re_trials", "success",
                 "iterations", "wall_time", "residual", "converged")


def default_transforms(order, model="tcu1", fixed="dcm", slice_pair=None):
    """Default per-mode transform names (0-based keys).

    TC-U1: ``fixed`` on the first two modes, learnable elsewhere. TC-SL:
    identity on the slice modes, learnable elsewhere.
    """
    if model == "tcsl":
        pair = slice_pair if slice_pair is not None else default_slice_pair(order)
        return {k: "identity" if k in pair else "learnable" for k in range(order)}
    return {k: fixed if k < 2 else "learnable" for k in range(order)}


def default_slice_pair(order):
    # For 4-order data: learnable modes 1 and 4, slices over modes 2 and 3.
    return (1, 2) if order == 4 else (0, 1)


def parse_modes(text):
    """``"2,3"`` (1-based) -> ``(1, 2)``."""
    modes = tuple(int(v) - 1 for v in text.replace(" ", "").split(",") if v)
    if len(modes) != 2:
        raise ValueError(f"expected two comma-separated modes, got {text!r}")
    return modes


def parse_shape(text):
    return tuple(int(v) for v in text.lower().replace("x", ",").split(",") if v)


def _coerce(field_type, value):
    value = value.strip().strip('"').strip("'")
    if field_type in ("float", float):
        return float(value)
    if field_type in ("int", int):
        return int(value)
    if field_type in ("bool", bool):
        return value.lower() in ("1", "true", "yes", "on")
    return value


def load_config(path):
    """Read a key-value config file.

    Format (INI)::

        [solver]
        model = tcu1          # or tcsl
        slice_pair = 2,3      # 1-based, tcsl only
        mu0 = 0.1
        max_iter = 500

        [transforms]
        mode1 = "dfm"
        mode2 = "dfm"
        mode3 = "learnable"

    Returns ``(SolverConfig, {mode: name})`` with 0-based mode keys.
    """
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    if not parser.read(path):
        raise ValueError(f"cannot read config file {path}")
    kwargs = {}
    types = {f.name: f.type for f in fields(SolverConfig)}
    if parser.has_section("solver"):
        for key, value in parser.items("solver"):
            if key == "slice_pair":
                kwargs[key] = parse_modes(value.strip('"\''))
            elif key in types:
                ftype = types[key].split("|")[0].strip() if isinstance(types[key], str) else types[key]
                kwargs[key] = None if value.strip() == "none" else _coerce(ftype, value)
            else:
                raise ValueError(f"unknown solver option {key!r} in {path}")
    names = {}
    if parser.has_section("transforms"):
        for key, value in parser.items("transforms"):
            if not key.startswith("mode"):
                raise ValueError(f"transform keys look like mode3, got {key!r}")
            names[int(key[4:]) - 1] = value.strip().strip('"\'')
    return SolverConfig(**kwargs), names


def write_diagnostics_csv(history, path):
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=DIAGNOSTIC_FIELDS, extrasaction="ignore")
        writer.writeheader()
        writer.writerows(history)


def complete(M, mask, family, config=None, truth=None, peak=None, callback=None):
    """Run the solver and collect metrics.

    ``truth`` enables the relative error; ``peak`` additionally enables PSNR.
    Returns ``(SolveResult, metrics dict)``.
    """
    start = time.perf_counter()
    result = solve(M, mask, family, config, callback=callback)
    final = result.final
    metrics = {
        "p": sampling_rate(mask),
        "iterations": result.iterations,
        "converged": result.converged,
        "objective": final.get("objective"),
        "residual": final.get("rel_residual"),
        "y_bounded": result.flags["y_bounded"],
        "eta_capped_before_convergence": result.flags["eta_capped_before_convergence"],
        "wall_time": time.perf_counter() - start,
    }
    if truth is not None:
        metrics["re"] = relative_error(truth, result.X)
        if peak is not None:
            metrics["psnr"] = psnr(truth, np.clip(result.X, 0, peak), peak)
    return result, metrics


def trial_seeds(seed, R, p, trial):
    ss = np.random.SeedSequence([seed, R, int(round(p * 10000)), trial])
    data_seed, mask_seed = ss.generate_state(2)
    return int(data_seed), int(mask_seed)


def run_trial(shape, R, p, seed, trial, config=None, transforms=None, source="dcm",
              callback=None):
    """One synthetic completion; returns the trial's metrics.

    ``callback`` is passed through to the solver.
    """
    data_seed, mask_seed = trial_seeds(seed, R, p, trial)
    M = gen_synthetic(SyntheticSpec(shape=tuple(shape), rank=R, seed=data_seed, source=source))
    mask = gen_mask(M.shape, p, mask_seed)
    config = config or SolverConfig()
    names = transforms or default_transforms(len(shape), config.model, slice_pair=config.slice_pair)
    family = TransformFamily.from_names(M.shape, names)
    result, metrics = complete(M, mask, family, config, truth=M, callback=callback)
    metrics["flags"] = result.flags
    return metrics


def run_cell(shape, R, p, trials, seed, config=None, transforms=None, source="dcm",
             callback=None):
    """Average ``trials`` runs of one (R, p) cell into an experiment record."""
    start = time.perf_counter()
    runs = [run_trial(shape, R, p, seed, i, config, transforms, source, callback)
            for i in range(trials)]
    res = [r["re"] for r in runs]
    re_mean = float(np.mean(res))
    return {
        "shape": "x".join(map(str, shape)),
        "R": R,
        "p": p,
        "trials": trials,
        "seed": seed,
        "re_mean": re_mean,
        "re_trials": ";".join(repr(v) for v in res),
        "success": re_mean <= SUCCESS_RE,
        "iterations": float(np.mean([r["iterations"] for r in runs])),
        "wall_time": time.perf_counter() - start,
        "residual": max(r["residual"] for r in runs),
        "converged": all(r["converged"] for r in runs),
    }


def _cell_key(R, p):
    return int(R), round(float(p), 6)


def read_records(path):
    """Parse a sweep CSV back into typed records."""
    if not os.path.exists(path):
        return []
    records = []
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            records.append({
                **row,
                "R": int(row["R"]),
                "p": float(row["p"]),
                "trials": int(row["trials"]),
                "seed": int(row["seed"]),
                "re_mean": float(row["re_mean"]),
                "success": row["success"] == "True",
                "iterations": float(row["iterations"]),
                "wall_time": float(row["wall_time"]),
                "residual": float(row["residual"]),
                "converged": row["converged"] == "True",
            })
    return records


def sweep(ranks, rates, output, shape=DESK_SHAPE, trials=5, seed=0, config=None,
          transforms=None, workers=1, source="dcm", max_cells=None):
    """Run every (R, p) cell and write one CSV record per cell to ``output``.

    Cells already present in ``output`` are skipped, so an interrupted sweep
    resumes where it stopped. Records are appended as they finish (by this
    process only) and the file is rewritten in grid order at the end.
    ``max_cells`` limits how many new cells run in this call.
    """
    directory = os.path.dirname(os.path.abspath(output))
    if not os.path.isdir(directory) or not os.access(directory, os.W_OK):
        raise OSError(f"output directory {directory} is not writable")
    done = {_cell_key(r["R"], r["p"]) for r in read_records(output)}
    todo = [(R, p) for R in ranks for p in rates if _cell_key(R, p) not in done]
    if max_cells is not None:
        todo = todo[:max_cells]

    new_file = not os.path.exists(output) or os.path.getsize(output) == 0
    with open(output, "a", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=RECORD_FIELDS)
        if new_file:
            writer.writeheader()

        def append(record):
            writer.writerow(record)
            fh.flush()
            log.info("cell R=%d p=%.2f re=%.3e", record["R"], record["p"], record["re_mean"])

        args = (trials, seed, config, transforms, source)
        if workers > 1 and len(todo) > 1:
            with ProcessPoolExecutor(max_workers=workers) as pool:
                futures = [pool.submit(run_cell, shape, R, p, *args) for R, p in todo]
                for fut in as_completed(futures):
                    append(fut.result())
        else:
            for R, p in todo:
                append(run_cell(shape, R, p, *args))

    records = read_records(output)
    order = {_cell_key(R, p): i for i, (R, p) in enumerate((R, p) for R in ranks for p in rates)}
    records.sort(key=lambda r: order.get(_cell_key(r["R"], r["p"]), len(order)))
    with open(output, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=RECORD_FIELDS, extrasaction="ignore")
        writer.writeheader()
        writer.writerows(records)
    return records


def phase_grid(records):
    """``{(R, p): success}`` lookup built from sweep records."""
    return {_cell_key(r["R"], r["p"]): r["success"] for r in records}


def monotonicity_violations(records, rank_step=2, rate_step=0.2):
    """Cells whose success is not inherited by (R - rank_step, p) and (R, p + rate_step).

    Neighbours missing from the grid are ignored.
    """
    grid = phase_grid(records)
    bad = set()
    for (R, p), ok in grid.items():
        if not ok:
            continue
        for nb in (_cell_key(R - rank_step, p), _cell_key(R, p + rate_step)):
            if nb in grid and not grid[nb]:
                bad.add(nb)
    return sorted(bad)
