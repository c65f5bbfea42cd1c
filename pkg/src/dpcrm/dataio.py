"""Data ingestion (count files, csv tallies, edge lists) and result
serialization.  All text I/O is UTF-8 and accepts LF or CRLF endings;
floats are written with repr (shortest round-trip, 17 significant
digits)."""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .diagnostics import PredictiveBands
from .errors import ParseError, ValidationError
from .inference import PosteriorSamples
from .sampling import PartitionCounts

__all__ = [
    "Dataset", "load_counts", "load_edge_list",
    "export_trace", "import_trace", "export_bands", "export_summary",
]

COUNTS_FILE = "counts_file"
TOKEN_STREAM = "token_stream"
EDGE_LIST = "edge_list"


@dataclass(frozen=True)
class Dataset:
    name: str
    counts: PartitionCounts
    provenance: str


def _read_lines(path) -> list[str]:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError:
        raise
    return text.splitlines()


def load_counts(path, fmt: str = "lines", name: str | None = None) -> Dataset:
    """Counts from a text file: 'lines' has one positive integer per line,
    'csv' has an item,count header with duplicate items summed."""
    lines = _read_lines(path)
    name = name if name is not None else Path(path).stem
    if fmt == "lines":
        values = []
        for i, raw in enumerate(lines, start=1):
            s = raw.strip()
            if not s:
                continue
            try:
                v = int(s)
            except ValueError:
                raise ParseError(f"expected an integer count, got {s!r}", line=i) from None
            if v <= 0:
                raise ParseError(f"counts must be positive, got {v}", line=i)
            values.append(v)
        if not values:
            raise ValidationError(f"no counts found in {path}")
        return Dataset(name, PartitionCounts(np.array(values)), COUNTS_FILE)
    if fmt == "csv":
        tally: dict[str, int] = {}
        rows = list(csv.reader(lines))
        if not rows:
            raise ValidationError(f"empty csv file {path}")
        header = [h.strip().lower() for h in rows[0]]
        if header[:2] != ["item", "count"]:
            raise ParseError("csv header must be 'item,count'", line=1)
        for i, row in enumerate(rows[1:], start=2):
            if not row or (len(row) == 1 and not row[0].strip()):
                continue
            if len(row) < 2:
                raise ParseError("expected 'item,count'", line=i)
            try:
                v = int(row[1].strip())
            except ValueError:
                raise ParseError(f"expected an integer count, got {row[1]!r}", line=i) from None
            if v <= 0:
                raise ParseError(f"counts must be positive, got {v}", line=i)
            tally[row[0]] = tally.get(row[0], 0) + v
        if not tally:
            raise ValidationError(f"no counts found in {path}")
        return Dataset(name, PartitionCounts(np.array(list(tally.values()))), COUNTS_FILE)
    raise ValidationError(f"unknown counts format {fmt!r}")


def load_edge_list(path, name: str | None = None) -> Dataset:
    """Out-degree multiplicities of a directed multigraph given as
    whitespace-separated 'src dst' lines; '#' lines are comments.
    Self-loops and multi-edges count toward the out-degree."""
    lines = _read_lines(path)
    name = name if name is not None else Path(path).stem
    degree: dict[str, int] = {}
    edges = 0
    for i, raw in enumerate(lines, start=1):
        s = raw.strip()
        if not s or s.startswith("#"):
            continue
        parts = s.split()
        if len(parts) != 2:
            raise ParseError(f"expected 'src dst', got {raw!r}", line=i)
        degree[parts[0]] = degree.get(parts[0], 0) + 1
        edges += 1
    if edges == 0:
        raise ValidationError(f"no edges found in {path}")
    return Dataset(name, PartitionCounts(np.array(list(degree.values()))), EDGE_LIST)


# ---------------------------------------------------------------------------
# exports
# ---------------------------------------------------------------------------

def _fmt(x: float) -> str:
    return repr(float(x))


def export_trace(samples: PosteriorSamples, path) -> None:
    """Trace CSV with columns iter,eta,sigma,tau,u,log_joint (CRM families)
    or iter,theta,alpha,log_joint (Pitman-Yor)."""
    d = samples.draws
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh)
        if "theta" in d:
            w.writerow(["iter", "theta", "alpha", "log_joint"])
            for i in range(len(samples)):
                w.writerow([i, _fmt(d["theta"][i]), _fmt(d["alpha"][i]),
                            _fmt(samples.log_joint[i])])
        else:
            w.writerow(["iter", "eta", "sigma", "tau", "u", "log_joint"])
            for i in range(len(samples)):
                w.writerow([i, _fmt(d["eta"][i]), _fmt(d["sigma"][i]),
                            _fmt(d["tau"][i]), _fmt(d["u"][i]),
                            _fmt(samples.log_joint[i])])


def import_trace(path) -> dict[str, np.ndarray]:
    """Columns of a trace CSV as float arrays keyed by header name."""
    with open(path, encoding="utf-8", newline="") as fh:
        rows = list(csv.reader(fh))
    header = rows[0]
    cols = {h: np.array([float(r[j]) for r in rows[1:]]) for j, h in enumerate(header)}
    return cols


def export_bands(bands: PredictiveBands, path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["axis", "lower", "median", "upper"])
        for i in range(bands.axis.size):
            w.writerow([_fmt(bands.axis[i]), _fmt(bands.lower[i]),
                        _fmt(bands.median[i]), _fmt(bands.upper[i])])


def export_summary(summary: dict, path) -> None:
    """Summary JSON; nan/inf are encoded as strings for portability."""
    def clean(obj):
        if isinstance(obj, dict):
            return {k: clean(v) for k, v in obj.items()}
        if isinstance(obj, (list, tuple)):
            return [clean(v) for v in obj]
        if isinstance(obj, (np.floating, float)):
            x = float(obj)
            if math.isnan(x):
                return "nan"
            if math.isinf(x):
                return "inf" if x > 0 else "-inf"
            return x
        if isinstance(obj, (np.integer,)):
            return int(obj)
        if isinstance(obj, np.ndarray):
            return [clean(v) for v in obj.tolist()]
        return obj
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(clean(summary), fh, indent=2, sort_keys=True)
        fh.write("\n")
