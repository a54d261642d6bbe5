"""Experiment grid, result tables, and CSV ingestion for real datasets."""

from __future__ import annotations

import csv
import io
import json
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Iterable, Literal, Sequence

import numpy as np

from .core import DataMatrix, LabelVector, normalize
from .errors import CsvParseError, InvalidArgument, InvalidConfig
from .metrics import ErrorReport, hamming_star
from .spca import (
    InitializerSpec,
    PenaltyParams,
    SpcaParams,
    default_s_prime,
    pca_cluster_baseline,
    spca_fit,
)
from .synth import GridPoint, Replicate, SynthConfig, run_one

logger = logging.getLogger(__name__)

GRID_R = (0.25, 0.35, 0.5, 0.65)
GRID_V = (0.6, 0.7, 0.8)
METHOD_IDS = {"spca": 1, "pca": 2}
CSV_HEADER = ("r", "v", "method", "mean_error", "std_error", "n_reps", "failures", "seconds")


@dataclass
class ExperimentConfig:
    """Flat experiment settings; JSON config files use the same keys."""

    n: int = 145
    p: int = 4000
    K: int = 2
    r_values: list[float] = field(default_factory=lambda: list(GRID_R))
    v_values: list[float] = field(default_factory=lambda: list(GRID_V))
    n_reps: int = 10
    seed: int = 0
    method: Literal["spca", "pca", "both"] = "both"
    beta: float = 1.0
    delta: float = 0.2
    alpha: float = 1.0
    s_prime: int | None = None
    init: Literal["diag", "screen"] = "screen"
    restarts: int = 10
    on_empty: Literal["raise", "initial"] = "initial"
    normalize: Literal["center", "center-scale"] = "center"
    tau: float | None = None
    calibration: Literal["sqrt", "detection"] = "sqrt"
    threads: int = 1
    timing: bool = True
    out: str | None = None
    format: Literal["csv", "markdown"] = "csv"

    def validate(self) -> ExperimentConfig:
        if not self.r_values or not self.v_values:
            raise InvalidConfig("r_values and v_values must be non-empty")
        for r in self.r_values:
            for v in self.v_values:
                GridPoint(r, v)
        if self.n_reps < 1:
            raise InvalidConfig("n_reps must be >= 1")
        if self.seed < 0:
            raise InvalidConfig("seed must be nonnegative")
        if self.K < 2 or self.n <= self.K or self.p < self.K - 1:
            raise InvalidConfig(f"need K >= 2, n > K and p >= K-1; got n={self.n}, p={self.p}, K={self.K}")
        if self.method not in ("spca", "pca", "both"):
            raise InvalidConfig(f"unknown method {self.method!r}")
        if self.init not in ("diag", "screen"):
            raise InvalidConfig(f"unknown initializer {self.init!r}")
        if self.format not in ("csv", "markdown"):
            raise InvalidConfig(f"unknown format {self.format!r}")
        if self.threads < 1 or self.restarts < 1:
            raise InvalidConfig("threads and restarts must be >= 1")
        if self.s_prime is not None and not 1 <= self.s_prime <= self.p:
            raise InvalidConfig(f"s_prime must lie in 1..{self.p}")
        try:
            PenaltyParams(self.beta, self.delta)
            InitializerSpec.diagonal(self.alpha)
        except InvalidArgument as exc:
            raise InvalidConfig(str(exc)) from None
        self.synth_config()
        return self

    @classmethod
    def from_mapping(cls, data: dict) -> ExperimentConfig:
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise InvalidConfig(f"unknown config keys: {', '.join(sorted(unknown))}")
        return cls(**data)

    @classmethod
    def from_json(cls, path: str | Path) -> ExperimentConfig:
        try:
            data = json.loads(Path(path).read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise InvalidConfig(f"{path}: invalid JSON ({exc})") from None
        if not isinstance(data, dict):
            raise InvalidConfig(f"{path}: expected a JSON object")
        return cls.from_mapping(data)

    def methods(self) -> list[str]:
        return ["spca", "pca"] if self.method == "both" else [self.method]

    def synth_config(self) -> SynthConfig:
        return SynthConfig(
            n=self.n, p=self.p, K=self.K, seed=self.seed, tau_override=self.tau, calibration=self.calibration
        )

    def spca_params(self, v: float | None = None) -> SpcaParams:
        if self.init == "screen" and (self.s_prime is not None or v is not None):
            s_prime = self.s_prime if self.s_prime is not None else default_s_prime(self.p, v)
            init = InitializerSpec.screen(s_prime)
        else:
            init = InitializerSpec.diagonal(self.alpha)
        return SpcaParams(
            K=self.K,
            penalty=PenaltyParams(self.beta, self.delta),
            init=init,
            kmeans_restarts=self.restarts,
            seed=self.seed,
            on_empty=self.on_empty,
        )


def make_method(config: ExperimentConfig, name: str, v: float):
    """A ``(W, rng) -> labels`` callable for one method at sparsity exponent v."""
    if name == "spca":
        params = config.spca_params(v)

        def method(W, rng):
            fit = spca_fit(W, params, rng)
            if fit.fallback:
                logger.debug("empty selection at v=%s; clustered on the initial basis", v)
            return fit.labels

        return method
    if name == "pca":
        return lambda W, rng: pca_cluster_baseline(W, config.K, rng, restarts=config.restarts)
    raise InvalidConfig(f"unknown method {name!r}")


@dataclass(frozen=True)
class ResultsRow:
    r: float
    v: float
    method: str
    mean_error: float
    std_error: float
    n_reps: int
    failures: int
    seconds: float


@dataclass
class ResultsTable:
    rows: list[ResultsRow] = field(default_factory=list)

    def __len__(self):
        return len(self.rows)

    def __iter__(self):
        return iter(self.rows)

    def get(self, r: float, v: float, method: str) -> ResultsRow:
        for row in self.rows:
            if math.isclose(row.r, r) and math.isclose(row.v, v) and row.method == method:
                return row
        raise KeyError((r, v, method))

    def rounded(self) -> ResultsTable:
        """The table as it reads back from CSV (six decimals)."""
        return parse_csv_report(emit_report(self, "csv"))


def summarize(reps: Sequence[Replicate], r: float, v: float, method: str, timing: bool = True) -> ResultsRow:
    errors = np.array([x.error for x in reps if x.failure is None], dtype=float)
    failures = len(reps) - errors.size
    if errors.size:
        mean = float(errors.mean())
        se = float(errors.std(ddof=1) / math.sqrt(errors.size)) if errors.size > 1 else 0.0
    else:
        mean = se = math.nan
    seconds = float(sum(x.seconds for x in reps)) if timing else 0.0
    return ResultsRow(r, v, method, mean, se, len(reps), failures, seconds)


def run_grid(config: ExperimentConfig, write: bool = True) -> ResultsTable:
    """Run every (r, v, method) cell and return one row per cell.

    Replicate seeds are keyed by ``(r_index, v_index)`` and the replicate
    index (see :func:`spcaclust.synth.run_replicates`), so the table is the
    same for any ``threads`` value. Methods within a cell share datasets.
    """
    config.validate()
    synth = config.synth_config()
    tasks = []
    for ri, r in enumerate(config.r_values):
        for vi, v in enumerate(config.v_values):
            grid = GridPoint(r, v)
            for name in config.methods():
                method = make_method(config, name, v)
                for rep in range(config.n_reps):
                    tasks.append((ri, vi, name, grid, method, rep))

    def work(task):
        ri, vi, name, grid, method, rep = task
        return run_one(
            synth, grid, method, rep,
            key=(ri, vi), method_id=METHOD_IDS[name], normalize_mode=config.normalize,
        )

    if config.threads > 1:
        with ThreadPoolExecutor(max_workers=config.threads) as pool:
            results = list(pool.map(work, tasks))
    else:
        results = [work(t) for t in tasks]

    slots: dict[tuple[int, int, str], list[Replicate]] = {}
    for (ri, vi, name, *_), res in zip(tasks, results):
        slots.setdefault((ri, vi, name), []).append(res)
    table = ResultsTable()
    for (ri, vi, name), reps in slots.items():
        table.rows.append(summarize(reps, config.r_values[ri], config.v_values[vi], name, config.timing))
        for rep in reps:
            if rep.failure:
                logger.warning("r=%s v=%s %s: %s", config.r_values[ri], config.v_values[vi], name, rep.failure)

    if write and config.out:
        write_report(table, config.out, config.format)
    return table


# --- reports -----------------------------------------------------------------

def _fmt(x: float) -> str:
    return "nan" if math.isnan(x) else f"{x:.6f}"


def emit_report(table: ResultsTable, format: str = "csv") -> str:
    if not len(table):
        raise InvalidConfig("cannot emit an empty results table")
    if format == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(CSV_HEADER)
        for row in table:
            writer.writerow([
                _fmt(row.r), _fmt(row.v), row.method, _fmt(row.mean_error), _fmt(row.std_error),
                row.n_reps, row.failures, _fmt(row.seconds),
            ])
        return buf.getvalue()
    if format == "markdown":
        return _markdown(table)
    raise InvalidConfig(f"unknown report format {format!r}")


def _markdown(table: ResultsTable) -> str:
    rs = sorted({row.r for row in table})
    vs = sorted({row.v for row in table}, reverse=True)
    methods = list(dict.fromkeys(row.method for row in table))
    lines = []
    for method in methods:
        lines.append(f"### {method}")
        lines.append("")
        lines.append("| r \\ v | " + " | ".join(f"{v:g}" for v in vs) + " |")
        lines.append("|---" * (len(vs) + 1) + "|")
        for r in rs:
            cells = []
            for v in vs:
                try:
                    row = table.get(r, v, method)
                except KeyError:
                    cells.append("")
                    continue
                cell = f"{row.mean_error:.4f} ± {row.std_error:.4f}"
                if row.failures:
                    cell += f" ({row.failures} failed)"
                cells.append(cell)
            lines.append(f"| {r:g} | " + " | ".join(cells) + " |")
        lines.append("")
    return "\n".join(lines)


def write_report(table: ResultsTable, path: str | Path, format: str = "csv") -> Path:
    path = Path(path)
    path.write_text(emit_report(table, format), encoding="utf-8")
    return path


def parse_csv_report(text: str) -> ResultsTable:
    reader = csv.reader(io.StringIO(text))
    header = next(reader)
    if tuple(header) != CSV_HEADER:
        raise CsvParseError(f"unexpected report header {header}", row=1)
    table = ResultsTable()
    for i, rec in enumerate(reader, start=2):
        if len(rec) != len(CSV_HEADER):
            raise CsvParseError(f"expected {len(CSV_HEADER)} fields, got {len(rec)}", row=i)
        r, v, method, mean, se, n_reps, failures, seconds = rec
        table.rows.append(ResultsRow(
            float(r), float(v), method, float(mean), float(se), int(n_reps), int(failures), float(seconds)
        ))
    return table


# --- real data -------------------------------------------------------------------

def _is_number(cell: str) -> bool:
    try:
        float(cell)
    except ValueError:
        return False
    return True


def _map_labels(raw: Sequence[str]) -> LabelVector:
    if all(_is_number(x) and float(x).is_integer() for x in raw):
        values = sorted({int(float(x)) for x in raw})
        lookup = {str(val): k for k, val in enumerate(values, start=1)}
        labels = [lookup[str(int(float(x)))] for x in raw]
    else:
        lookup: dict[str, int] = {}
        labels = [lookup.setdefault(x, len(lookup) + 1) for x in raw]
    return LabelVector(np.asarray(labels), max(labels))


def load_csv(
    path: str | Path,
    has_labels: bool = False,
    label_column: str | int | None = None,
) -> tuple[DataMatrix, LabelVector | None]:
    """Read a samples-by-features CSV.

    A header row is assumed when any cell of the first row is non-numeric.
    ``label_column`` names the label column (header name, or 0-based index
    when there is no header); with ``has_labels`` and no column given, the
    last column holds the labels. Integer labels are renumbered to 1..K in
    increasing order, string labels by first appearance.
    """
    path = Path(path)
    if not path.is_file():
        raise CsvParseError(f"{path}: no such file")
    with path.open(newline="", encoding="utf-8") as fh:
        rows = [row for row in csv.reader(fh)]
    rows_with_line = [(i, row) for i, row in enumerate(rows, start=1) if any(c.strip() for c in row)]
    if not rows_with_line:
        raise CsvParseError(f"{path}: file is empty")

    header = None
    first_line, first = rows_with_line[0]
    if not all(_is_number(c.strip()) for c in first):
        header = [c.strip() for c in first]
        rows_with_line = rows_with_line[1:]
    if not rows_with_line:
        raise CsvParseError(f"{path}: no data rows")

    width = len(header) if header is not None else len(rows_with_line[0][1])
    label_idx = None
    if has_labels or label_column is not None:
        if label_column is None:
            label_idx = width - 1
        elif isinstance(label_column, int) or (header is None and str(label_column).lstrip("-").isdigit()):
            label_idx = int(label_column) % width
        elif header is not None and label_column in header:
            label_idx = header.index(label_column)
        else:
            raise CsvParseError(f"{path}: label column {label_column!r} not found")

    data, raw_labels = [], []
    for line, row in rows_with_line:
        if len(row) != width:
            raise CsvParseError(f"{path}: expected {width} fields, found {len(row)}", row=line)
        values = []
        for j, cell in enumerate(row):
            if j == label_idx:
                raw_labels.append(cell.strip())
                continue
            try:
                values.append(float(cell))
            except ValueError:
                raise CsvParseError(f"{path}: non-numeric cell {cell!r}", row=line, column=j + 1) from None
        data.append(values)

    X = DataMatrix(np.asarray(data, dtype=float))
    labels = _map_labels(raw_labels) if label_idx is not None else None
    logger.info("loaded %s: n=%d p=%d%s", path, X.n, X.p, " with labels" if labels else "")
    return X, labels


@dataclass(frozen=True)
class ClusterOutcome:
    labels: np.ndarray
    report: ErrorReport | None
    fallback: bool


def cluster_file(
    path: str | Path,
    K: int,
    params: SpcaParams | None = None,
    normalize_mode: str = "center",
    has_labels: bool = False,
    label_column: str | int | None = None,
    out: str | Path | None = None,
) -> ClusterOutcome:
    """Normalize a CSV dataset, cluster it, and score it when labels are present."""
    X, truth = load_csv(path, has_labels=has_labels, label_column=label_column)
    if truth is not None and truth.K != K:
        raise InvalidConfig(f"K={K} but the label column has {truth.K} distinct values")
    params = params or SpcaParams(K=K)
    if params.K != K:
        raise InvalidConfig("params.K disagrees with K")
    fit = spca_fit(normalize(X, normalize_mode), params)
    if fit.fallback:
        logger.warning("penalized selection kept too few rows; clustered on the initial basis")
    report = hamming_star(fit.labels, truth, K) if truth is not None else None
    if out is not None:
        write_labels(fit.labels, out)
    return ClusterOutcome(fit.labels, report, fit.fallback)


def format_labels(labels: Iterable[int]) -> str:
    lines = ["sample,label"] + [f"{i},{int(k)}" for i, k in enumerate(labels, start=1)]
    return "\n".join(lines) + "\n"


def write_labels(labels: Iterable[int], path: str | Path) -> Path:
    path = Path(path)
    path.write_text(format_labels(labels), encoding="utf-8")
    return path
