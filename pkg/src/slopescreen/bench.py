"""Benchmark orchestration.

A benchmark is a list of cells, each pairing a data spec with path
settings. Every cell is fitted with and without screening on the same
data, and every path step becomes one row of a long-format CSV. A JSON
manifest with the configuration and library version is written next to
the CSV.
"""
import csv
import itertools
import json
import logging
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields

import numpy as np

from .datasets import GenSpec, checksum, generate
from .objectives import standardize
from .path import PathConfig, fit_path
from .solver import SolverConfig

try:
    import tomllib
except ModuleNotFoundError:  # python < 3.11
    import tomli as tomllib

logger = logging.getLogger(__name__)

COLUMNS = ["dataset_id", "checksum", "family", "design", "n", "p", "k", "rho", "q",
           "seed", "replicate", "screening", "driver", "step", "sigma", "active",
           "screened", "working", "violations", "refits", "kkt_checks",
           "deviance_ratio", "gap", "infeasibility", "converged", "termination",
           "error", "step_time", "total_time"]
TIMING_COLUMNS = ("step_time", "total_time")


@dataclass
class BenchCell:
    name: str
    spec: GenSpec
    path: dict = field(default_factory=dict)
    screenings: tuple = ("none", "strong")


@dataclass
class BenchRecord:
    dataset_id: str
    checksum: str
    family: str
    n: int
    p: int
    screening: str
    driver: str
    total_time: float
    steps: list
    violations: int
    termination: str
    error: str = ""


def _path_config(options, screening):
    opts = dict(options)
    solver = SolverConfig(**opts.pop("solver", {}))
    return PathConfig(screening=screening, solver=solver, **opts)


def run_cell(cell, replicate):
    """Fit one cell (every screening mode) on one replicate's data."""
    spec = GenSpec(**{**asdict(cell.spec),
                      "seed": int(np.random.SeedSequence([cell.spec.seed, replicate])
                                  .generate_state(2, np.uint64)[0])})
    dataset_id = "%s/r%d" % (cell.name, replicate)
    records = []
    try:
        design, response, _ = generate(spec)
        design, response = standardize(design, response)
        digest = checksum(design, response)
    except Exception as exc:  # recorded, the run goes on
        logger.exception("data generation failed for %s", dataset_id)
        return [BenchRecord(dataset_id, "", spec.family, spec.n, spec.p, s, "", 0.0,
                            [], 0, "failed", repr(exc)) for s in cell.screenings], spec
    for screening in cell.screenings:
        cfg = _path_config(cell.path, screening)
        t0 = time.perf_counter()
        try:
            res = fit_path(design, response, cfg)
        except Exception as exc:
            logger.exception("fit failed for %s (%s)", dataset_id, screening)
            records.append(BenchRecord(dataset_id, digest, spec.family, spec.n, spec.p,
                                       screening, cfg.driver, time.perf_counter() - t0,
                                       [], 0, "failed", repr(exc)))
            continue
        records.append(BenchRecord(dataset_id, digest, spec.family, spec.n, spec.p,
                                   screening, cfg.driver, time.perf_counter() - t0,
                                   res.steps, int(res.column("violations").sum()),
                                   res.termination))
    return records, spec


def _rows(record, spec, cell, replicate):
    base = dict(dataset_id=record.dataset_id, checksum=record.checksum,
                family=spec.family, design=spec.design_kind, n=spec.n, p=spec.p,
                k=spec.k, rho=spec.rho, q=cell.path.get("q", PathConfig.q),
                seed=spec.seed, replicate=replicate, screening=record.screening,
                driver=record.driver, termination=record.termination,
                error=record.error, total_time="%.6f" % record.total_time)
    if not record.steps:
        yield {**base, "step": ""}
        return
    for i, s in enumerate(record.steps, start=1):
        yield {**base, "step": i, "sigma": repr(float(s.sigma)), "active": s.active,
               "screened": s.screened, "working": s.working,
               "violations": s.violations, "refits": s.refits,
               "kkt_checks": s.kkt_checks,
               "deviance_ratio": repr(float(s.deviance_ratio)),
               "gap": repr(float(s.gap)), "infeasibility": repr(float(s.infeasibility)),
               "converged": int(s.converged), "step_time": "%.6f" % s.time}


def bench_run(cells, replicates, out_path, workers=1):
    """Run every cell for every replicate and write the CSV plus a manifest.

    Parameters
    ----------
    cells : list of BenchCell
    replicates : int
    out_path : str or Path
        CSV destination; the manifest goes to the same path with a
        ``.json`` suffix.
    workers : int
        Number of worker processes. Rows are always written by the parent.

    Returns
    -------
    list of BenchRecord
    """
    from . import __version__

    jobs = [(c, r) for c in cells for r in range(replicates)]
    out = []
    with open(out_path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=COLUMNS, restval="")
        writer.writeheader()
        if workers > 1:
            with ProcessPoolExecutor(max_workers=workers) as pool:
                results = pool.map(run_cell, *zip(*jobs))
                for (cell, rep), (records, spec) in zip(jobs, results):
                    for rec in records:
                        writer.writerows(_rows(rec, spec, cell, rep))
                    out.extend(records)
        else:
            for cell, rep in jobs:
                records, spec = run_cell(cell, rep)
                for rec in records:
                    writer.writerows(_rows(rec, spec, cell, rep))
                out.extend(records)

    manifest = {
        "version": __version__,
        "replicates": replicates,
        "cells": [{"name": c.name, "spec": c.spec.to_dict(), "path": c.path,
                   "screenings": list(c.screenings)} for c in cells],
        "seed_derivation": "SeedSequence([cell seed, replicate]).generate_state(2)[0]",
    }
    with open(str(out_path).rsplit(".", 1)[0] + ".json", "w") as fh:
        json.dump(manifest, fh, indent=2, default=float)
    return out


_SPEC_KEYS = {f.name for f in fields(GenSpec)}


def _expand(table):
    """Cartesian product over list-valued entries of a flat dict."""
    keys = sorted(table)
    choices = [table[k] if isinstance(table[k], list) else [table[k]] for k in keys]
    for combo in itertools.product(*choices):
        yield dict(zip(keys, combo))


def load_bench_config(path):
    """Parse a TOML benchmark matrix.

    Top-level ``replicates`` and ``workers`` are optional. Each
    ``[[experiment]]`` table holds data-spec keys (``n``, ``p``, ``rho``,
    ...; ``k_fraction`` may replace ``k``), an optional ``[experiment.path]``
    table of path settings (``solver`` nested), and optional
    ``screening`` list. List values expand into one cell per combination.

    Returns
    -------
    (cells, replicates, workers)
    """
    with open(path, "rb") as fh:
        cfg = tomllib.load(fh)
    cells = []
    for i, exp in enumerate(cfg.get("experiment", [])):
        exp = dict(exp)
        name = exp.pop("name", "exp%d" % i)
        path_opts = exp.pop("path", {})
        screenings = tuple(exp.pop("screening", ("none", "strong")))
        solver_opts = path_opts.pop("solver", {})
        unknown = set(exp) - _SPEC_KEYS - {"k_fraction"}
        if unknown:
            raise ValueError("unknown experiment keys: %s" % sorted(unknown))
        for data in _expand(exp):
            frac = data.pop("k_fraction", None)
            if frac is not None:
                data["k"] = int(round(frac * data["p"]))
            spec = GenSpec(**data)
            for popts in _expand(path_opts):
                popts = {**popts, "solver": solver_opts}
                label = "%s/%s" % (name, "-".join(
                    "%s=%s" % kv for kv in sorted({**data, **{k: v for k, v in popts.items()
                                                            if k != "solver"}}.items())
                    if kv[0] not in ("seed", "family", "design_kind")))
                cells.append(BenchCell(label, spec, popts, screenings))
    return cells, int(cfg.get("replicates", 1)), int(cfg.get("workers", 1))
