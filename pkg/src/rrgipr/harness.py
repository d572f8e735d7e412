"""Ensemble runs: configuration, seeding, parallel execution and file output."""

from __future__ import annotations

import csv
import hashlib
import io
import json
import logging
import platform
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .errors import ConfigError, FitError, InvalidSpecError
from .graphgen import RNG_ALGORITHM, GraphSpec, enumerate_connected_regular, generate_regular
from .iprstats import (
    DEFAULT_IPR_BINS,
    DEFAULT_IPR_RANGE,
    EnsembleIprStats,
    GaussianFit,
    GraphIprSummary,
    IprHistogram,
    ensemble_stats,
    gaussian_fit,
    graph_ipr_summary,
    histogram_skewness,
    ipr_histogram,
)
from .spectra import (
    SpectralDensityHistogram,
    eigendecompose,
    eigenvalue_histogram,
    kesten_mckay_band,
    laplacian,
)
from .sphere import mu1_exact, mu2_exact

log = logging.getLogger(__name__)

SUMMARY_COLUMNS = (
    "n", "z", "N_G", "mean_ipr", "std_ipr", "mean_var",
    "mu1_exact", "mu2_exact", "delta1", "delta2",
)


def fmt(x) -> str:
    """Reals with 17 significant digits, integers as-is."""
    if isinstance(x, (int, np.integer)) and not isinstance(x, bool):
        return str(int(x))
    return f"{float(x):.17g}"


def default_graph_count(n: int) -> int:
    return 100 if n <= 2000 else 20


def derive_seed(master_seed: int, n: int, z: int, index: int) -> int:
    """Independent 64-bit stream seed for one graph of one (n, z) cell."""
    ss = np.random.SeedSequence([master_seed, n, z, index])
    return int(ss.generate_state(1, dtype=np.uint64)[0])


# --------------------------------------------------------------------------
# configuration
# --------------------------------------------------------------------------


@dataclass
class RunConfig:
    """An ensemble sweep.

    ``cells`` holds ``(n, z, graph_count)`` triples; ``census`` holds
    ``(n, z)`` pairs whose complete isomorphism-free graph set replaces
    random sampling.
    """

    cells: list[tuple[int, int, int]] = field(default_factory=list)
    census: list[tuple[int, int]] = field(default_factory=list)
    master_seed: int = 0
    workers: int = 1
    out_dir: str = "rrgipr-run"
    eig_bins: int = 50
    ipr_bins: int = DEFAULT_IPR_BINS
    ipr_range: tuple[float, float] = DEFAULT_IPR_RANGE
    eigensolver: str = "ql"
    dump_eigenvectors: bool = False
    verify_sphere: bool = False
    verify_n: tuple[int, ...] = (3, 4, 5, 6, 7, 8)

    def validate(self) -> RunConfig:
        if not self.cells and not self.census:
            raise ConfigError("configuration lists no cells")
        for n, z, count in self.cells:
            if count < 1:
                raise ConfigError(f"cell ({n}, {z}) needs at least one graph")
        for n, z, *_ in list(self.cells) + list(self.census):
            try:
                GraphSpec(n, z)
            except InvalidSpecError as exc:
                raise ConfigError(f"cell ({n}, {z}): {exc}") from exc
        if not 0 <= self.master_seed < 2**64:
            raise ConfigError("seed must be an unsigned 64-bit integer")
        if self.workers < 1:
            raise ConfigError("workers must be positive")
        if self.eig_bins < 1 or self.ipr_bins < 1:
            raise ConfigError("bin counts must be positive")
        if not self.ipr_range[1] > self.ipr_range[0]:
            raise ConfigError("ipr_range must be increasing")
        if self.eigensolver not in ("ql", "dc", "native"):
            raise ConfigError(f"unknown eigensolver {self.eigensolver!r}")
        return self


def _ints(value, key):
    try:
        return [int(t) for t in value.split(",")]
    except ValueError:
        raise ConfigError(f"{key}: expected comma-separated integers, got {value!r}") from None


def _bool(value, key):
    low = value.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"{key}: expected a boolean, got {value!r}")


def parse_config(text: str) -> RunConfig:
    """Parse the flat ``key = value`` format; ``cell`` and ``census`` repeat.

    ``graphs`` sets the default graph count for cells written as ``n,z``;
    ``cell = n,z,N_G`` overrides it per cell.
    """
    raw_cells = []
    cfg = RunConfig()
    default_count = None
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value'")
        key, value = (t.strip() for t in line.split("=", 1))
        if key == "cell":
            vals = _ints(value, key)
            if len(vals) not in (2, 3):
                raise ConfigError(f"line {lineno}: cell needs n,z or n,z,N_G")
            raw_cells.append(vals)
        elif key == "census":
            vals = _ints(value, key)
            if len(vals) != 2:
                raise ConfigError(f"line {lineno}: census needs n,z")
            cfg.census.append((vals[0], vals[1]))
        elif key == "graphs":
            default_count = _ints(value, key)[0]
        elif key == "seed":
            cfg.master_seed = _ints(value, key)[0]
        elif key == "workers":
            cfg.workers = _ints(value, key)[0]
        elif key == "out":
            cfg.out_dir = value
        elif key == "eig_bins":
            cfg.eig_bins = _ints(value, key)[0]
        elif key == "ipr_bins":
            cfg.ipr_bins = _ints(value, key)[0]
        elif key == "ipr_range":
            try:
                lo, hi = (float(t) for t in value.split(","))
            except ValueError:
                raise ConfigError(f"line {lineno}: ipr_range needs lo,hi") from None
            cfg.ipr_range = (lo, hi)
        elif key == "eigensolver":
            cfg.eigensolver = value
        elif key == "dump_eigenvectors":
            cfg.dump_eigenvectors = _bool(value, key)
        elif key == "verify_sphere":
            cfg.verify_sphere = _bool(value, key)
        elif key == "verify_n":
            cfg.verify_n = tuple(_ints(value, key))
        else:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
    for vals in raw_cells:
        n, z = vals[0], vals[1]
        count = vals[2] if len(vals) == 3 else default_count or default_graph_count(n)
        cfg.cells.append((n, z, count))
    return cfg.validate()


def load_config(path) -> RunConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return parse_config(text)


def config_to_text(cfg: RunConfig) -> str:
    lines = [
        f"seed = {cfg.master_seed}",
        f"workers = {cfg.workers}",
        f"out = {cfg.out_dir}",
        f"eig_bins = {cfg.eig_bins}",
        f"ipr_bins = {cfg.ipr_bins}",
        f"ipr_range = {cfg.ipr_range[0]!r},{cfg.ipr_range[1]!r}",
        f"eigensolver = {cfg.eigensolver}",
        f"dump_eigenvectors = {str(cfg.dump_eigenvectors).lower()}",
        f"verify_sphere = {str(cfg.verify_sphere).lower()}",
        f"verify_n = {','.join(map(str, cfg.verify_n))}",
    ]
    lines += [f"cell = {n},{z},{c}" for n, z, c in cfg.cells]
    lines += [f"census = {n},{z}" for n, z in cfg.census]
    return "\n".join(lines) + "\n"


# --------------------------------------------------------------------------
# per-graph work
# --------------------------------------------------------------------------


@dataclass
class GraphResult:
    index: int
    seed: int | None
    retries: int
    summary: GraphIprSummary
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray | None = None


def _process_graph(g, index, z, method, keep_vectors):
    d = eigendecompose(laplacian(g), method=method)
    return GraphResult(
        index=index,
        seed=g.seed,
        retries=g.retries,
        summary=graph_ipr_summary(d, z=z),
        eigenvalues=d.eigenvalues,
        eigenvectors=d.eigenvectors if keep_vectors else None,
    )


def _random_graph_task(args):
    n, z, seed, index, method, keep_vectors = args
    g = generate_regular(GraphSpec(n, z, seed))
    return _process_graph(g, index, z, method, keep_vectors)


def _census_graph_task(args):
    g, index, method, keep_vectors = args
    return _process_graph(g, index, g.z, method, keep_vectors)


# --------------------------------------------------------------------------
# results
# --------------------------------------------------------------------------


@dataclass
class CellResult:
    n: int
    z: int
    kind: str
    graphs: list[GraphResult] = field(default_factory=list)
    stats: EnsembleIprStats | None = None
    eig_hist: SpectralDensityHistogram | None = None
    ipr_hist: IprHistogram | None = None
    fit: GaussianFit | None = None
    skewness: float | None = None
    error: str | None = None
    graph_objects: list | None = None

    @property
    def label(self) -> str:
        return f"{self.kind}_n{self.n}_z{self.z}"

    @property
    def ok(self) -> bool:
        return self.error is None and self.stats is not None

    @property
    def summaries(self) -> list[GraphIprSummary]:
        return [g.summary for g in self.graphs]

    def fraction_reaching(self, value: float, tol: float = 1e-8) -> float:
        hits = sum(1 for g in self.graphs if g.summary.max_ipr >= value - tol)
        return hits / len(self.graphs)


@dataclass
class OutputRecord:
    config: RunConfig
    metadata: dict
    cells: list[CellResult]
    files: dict[str, str] = field(default_factory=dict)
    verification: object | None = None

    def cell(self, n: int, z: int, kind: str | None = None) -> CellResult | None:
        for c in self.cells:
            if c.n == n and c.z == z and (kind is None or c.kind == kind) and c.ok:
                return c
        return None

    def ok_cells(self, kind: str | None = None) -> list[CellResult]:
        return [c for c in self.cells if c.ok and (kind is None or c.kind == kind)]


def summarize_cell(cell: CellResult, cfg: RunConfig) -> CellResult:
    """Fill in ensemble statistics, histograms and the Gaussian fit."""
    n = cell.n
    cell.graphs.sort(key=lambda g: g.index)
    summaries = cell.summaries
    cell.stats = ensemble_stats(summaries, mu1_exact(n), mu2_exact(n))
    lo, hi = kesten_mckay_band(cell.z) if cell.z >= 2 else (0.0, 2.0 * cell.z)
    edges = np.linspace(lo, hi, cfg.eig_bins + 1)
    total = np.zeros(cfg.eig_bins)
    for g in cell.graphs:
        counts, _ = np.histogram(g.summary.eigenvalues, bins=edges)
        total += counts / len(g.summary.eigenvalues)
    cell.eig_hist = SpectralDensityHistogram(edges, total / len(cell.graphs), len(cell.graphs), 1.0 / n)
    cell.ipr_hist = ipr_histogram(summaries, cfg.ipr_bins, cfg.ipr_range)
    try:
        cell.fit = gaussian_fit(cell.ipr_hist)
    except FitError as exc:
        log.info("%s: no gaussian fit (%s)", cell.label, exc)
        cell.fit = None
    cell.skewness = (
        histogram_skewness(cell.ipr_hist) if cell.ipr_hist.masses.sum() > 0 else float("nan")
    )
    return cell


def _map(func, tasks, workers):
    if workers <= 1 or len(tasks) <= 1:
        return [func(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(func, tasks, chunksize=max(1, len(tasks) // (4 * workers))))


def run_cell(n: int, z: int, count: int, cfg: RunConfig) -> CellResult:
    tasks = [
        (n, z, derive_seed(cfg.master_seed, n, z, i), i, cfg.eigensolver, cfg.dump_eigenvectors)
        for i in range(count)
    ]
    cell = CellResult(n, z, "ensemble", _map(_random_graph_task, tasks, cfg.workers))
    return summarize_cell(cell, cfg)


def run_census(n: int, z: int, cfg: RunConfig) -> CellResult:
    graphs = enumerate_connected_regular(n, z).graphs
    tasks = [(g, i, cfg.eigensolver, cfg.dump_eigenvectors) for i, g in enumerate(graphs)]
    cell = CellResult(n, z, "census", _map(_census_graph_task, tasks, cfg.workers), graph_objects=graphs)
    return summarize_cell(cell, cfg)


# --------------------------------------------------------------------------
# output
# --------------------------------------------------------------------------


def _csv_text(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([fmt(x) if not isinstance(x, str) else x for x in row])
    return buf.getvalue()


class _Writer:
    """Writes files under one directory and remembers their checksums."""

    def __init__(self, root: Path):
        self.root = root
        self.files: dict[str, str] = {}

    def write(self, rel: str, text: str) -> Path:
        path = self.root / rel
        path.parent.mkdir(parents=True, exist_ok=True)
        data = text.encode()
        path.write_bytes(data)
        self.files[rel] = hashlib.sha256(data).hexdigest()
        return path


def summary_row(stats: EnsembleIprStats):
    return (
        stats.n, stats.z, stats.graph_count, stats.mean_ipr, stats.std_ipr, stats.mean_var,
        stats.mu1, stats.mu2, stats.delta1, stats.delta2,
    )


def _write_cell(w: _Writer, cell: CellResult, cfg: RunConfig):
    d = cell.label
    w.write(f"{d}/eigenvalues.csv", _csv_text(
        ("graph_index", "mode_index", "eigenvalue"),
        ((g.index, k, ev) for g in cell.graphs for k, ev in enumerate(g.eigenvalues)),
    ))
    rows = []
    for g in cell.graphs:
        zero = int(np.argmin(np.abs(g.eigenvalues)))
        modes = [k for k in range(len(g.eigenvalues)) if k != zero]
        rows += [(g.index, k, g.eigenvalues[k], v) for k, v in zip(modes, g.summary.mode_iprs)]
    w.write(f"{d}/ipr_per_mode.csv", _csv_text(("graph_index", "mode_index", "eigenvalue", "ipr"), rows))
    w.write(f"{d}/graph_summary.csv", _csv_text(
        ("graph_index", "seed", "retries", "mean_ipr", "variance", "max_ipr"),
        ((g.index, g.seed if g.seed is not None else -1, g.retries, g.summary.mean_ipr,
          g.summary.variance, g.summary.max_ipr) for g in cell.graphs),
    ))
    h = cell.eig_hist
    w.write(f"{d}/eigenvalue_histogram.csv", _csv_text(
        ("bin_left", "bin_right", "mass"), zip(h.edges[:-1], h.edges[1:], h.masses)
    ))
    h = cell.ipr_hist
    w.write(f"{d}/ipr_histogram.csv", _csv_text(
        ("bin_left", "bin_right", "mass"), zip(h.edges[:-1], h.edges[1:], h.masses)
    ))
    if cfg.dump_eigenvectors:
        rows = []
        for g in cell.graphs:
            if g.eigenvectors is None:
                continue
            for k in range(g.eigenvectors.shape[1]):
                rows.append((g.index, k, *g.eigenvectors[:, k]))
        header = ("graph_index", "mode_index") + tuple(f"x{i}" for i in range(cell.n))
        w.write(f"{d}/eigenvectors.csv", _csv_text(header, rows))
    if cell.graph_objects is not None:
        w.write(f"{d}/graphs.txt", "".join(g.to_text() for g in cell.graph_objects))


def run_ensemble(cfg: RunConfig, write: bool = True) -> OutputRecord:
    """Run every cell of ``cfg`` and write its files.

    A failing cell is recorded with its error and does not stop the others.
    Output depends only on ``cfg``; worker count changes scheduling only.
    """
    cfg.validate()
    started = time.time()
    cells: list[CellResult] = []
    for n, z, count in cfg.cells:
        cells.append(_guarded(lambda: run_cell(n, z, count, cfg), n, z, "ensemble"))
    for n, z in cfg.census:
        cells.append(_guarded(lambda: run_census(n, z, cfg), n, z, "census"))
    verification = None
    if cfg.verify_sphere:
        from .verify import verify_analytics

        verification = verify_analytics(cfg.verify_n, seed=cfg.master_seed)
    metadata = {
        "package_version": __version__,
        "rng_algorithm": RNG_ALGORITHM,
        "seed_derivation": "numpy.random.SeedSequence([master_seed, n, z, graph_index]) -> uint64",
        "eigensolver": cfg.eigensolver,
        "python": platform.python_version(),
        "numpy": np.__version__,
        "started": time.strftime("%Y-%m-%dT%H:%M:%S%z", time.localtime(started)),
        "finished": time.strftime("%Y-%m-%dT%H:%M:%S%z"),
        "config": config_to_text(cfg),
        "cells": [
            {
                "label": c.label, "n": c.n, "z": c.z, "kind": c.kind,
                "status": "ok" if c.ok else "error", "error": c.error,
                "graphs": len(c.graphs),
                "retries": sum(g.retries for g in c.graphs),
            }
            for c in cells
        ],
    }
    record = OutputRecord(cfg, metadata, cells, verification=verification)
    if write:
        write_record(record, Path(cfg.out_dir))
    return record


def _guarded(fn, n, z, kind) -> CellResult:
    try:
        return fn()
    except Exception as exc:  # noqa: BLE001 - one bad cell must not abort the sweep
        log.error("cell n=%d z=%d failed: %s", n, z, exc)
        return CellResult(n, z, kind, error=f"{type(exc).__name__}: {exc}")


def write_record(record: OutputRecord, out: Path):
    out.mkdir(parents=True, exist_ok=True)
    w = _Writer(out)
    ok = record.ok_cells()
    w.write("ensemble_summary.csv", _csv_text(
        SUMMARY_COLUMNS, (summary_row(c.stats) for c in ok if c.kind == "ensemble")
    ))
    if any(c.kind == "census" for c in ok):
        w.write("census_summary.csv", _csv_text(
            SUMMARY_COLUMNS, (summary_row(c.stats) for c in ok if c.kind == "census")
        ))
    for c in ok:
        _write_cell(w, c, record.config)
    if record.verification is not None:
        w.write("sphere_verify.txt", record.verification.to_text())
        w.write("sphere_verify.json", record.verification.to_json())
    w.write("run_metadata.json", json.dumps(record.metadata, indent=2, sort_keys=True) + "\n")
    record.files.update(w.files)
    write_manifest(out, record.files, record.metadata["cells"])


def write_manifest(out: Path, files: dict[str, str], cells=None):
    manifest_path = out / "manifest.json"
    existing = {}
    if manifest_path.exists():
        existing = json.loads(manifest_path.read_text()).get("files", {})
    existing.update(files)
    body = {"files": dict(sorted(existing.items()))}
    if cells is not None:
        body["cells"] = cells
    elif manifest_path.exists():
        body["cells"] = json.loads(manifest_path.read_text()).get("cells", [])
    manifest_path.write_text(json.dumps(body, indent=2, sort_keys=True) + "\n")


# --------------------------------------------------------------------------
# reading a run back
# --------------------------------------------------------------------------


def _read_csv(path: Path):
    with path.open(newline="") as fh:
        return list(csv.DictReader(fh))


def load_record(out_dir) -> OutputRecord:
    """Rebuild an OutputRecord (without eigenvectors) from a run directory."""
    out = Path(out_dir)
    meta_path = out / "run_metadata.json"
    if not meta_path.exists():
        raise FileNotFoundError(f"{out} holds no run_metadata.json")
    metadata = json.loads(meta_path.read_text())
    cfg = parse_config(metadata["config"])
    cells = []
    for info in metadata["cells"]:
        if info["status"] != "ok":
            cells.append(CellResult(info["n"], info["z"], info["kind"], error=info["error"]))
            continue
        cells.append(_load_cell(out / info["label"], info["n"], info["z"], info["kind"], cfg))
    files = json.loads((out / "manifest.json").read_text())["files"]
    return OutputRecord(cfg, metadata, cells, files=files)


def _load_cell(d: Path, n, z, kind, cfg) -> CellResult:
    per_graph: dict[int, list] = {}
    for row in _read_csv(d / "ipr_per_mode.csv"):
        per_graph.setdefault(int(row["graph_index"]), []).append(
            (float(row["eigenvalue"]), float(row["ipr"]))
        )
    graphs = []
    for row in _read_csv(d / "graph_summary.csv"):
        idx = int(row["graph_index"])
        modes = per_graph[idx]
        evs = np.array([m[0] for m in modes])
        iprs = np.array([m[1] for m in modes])
        summary = GraphIprSummary(
            n=n, z=z, mean_ipr=float(row["mean_ipr"]), variance=float(row["variance"]),
            max_ipr=float(row["max_ipr"]), mode_iprs=iprs, eigenvalues=evs,
        )
        seed = int(row["seed"])
        graphs.append(GraphResult(idx, None if seed < 0 else seed, int(row["retries"]), summary,
                                  np.concatenate(([0.0], evs))))
    cell = CellResult(n, z, kind, graphs)
    return summarize_cell(cell, cfg)


def fit_inverse_n(ns, deltas) -> float:
    """Least-squares c in delta = c / n."""
    x = 1.0 / np.asarray(ns, dtype=float)
    y = np.asarray(deltas, dtype=float)
    return float(x @ y / (x @ x))
