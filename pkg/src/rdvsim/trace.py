"""Run traces: per-tick telemetry rows plus header and terminal summary.

Two interchangeable encodings (CSV and JSONL) round-trip to identical
records.  Values are rounded at write time with a fixed per-column rule so
repeated runs of the same (config, seed) produce byte-identical files.
Wall-clock measurements are deliberately kept out of trace files and live
in a separate timings sidecar.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path

# column -> decimal places used by both encodings
_COLUMNS: dict[str, int] = {
    "t": 3,
    "phase": -1,  # string
    "uas_x": 3,
    "uas_y": 3,
    "e_r": 3,
    "theta_true": 3,
    "theta_meas": 3,
    "vel_meas": 3,
    "vel_hist": 3,
    "t1": 3,
    "t2": 3,
    "t3": 3,
    "t4": 3,
    "e1": 3,
    "e2": 3,
    "e3": 3,
    "e4": 3,
    "t_rdv": 3,
    "rho": 3,
    "rho_r": 6,
    "dist_uas_driver": 3,
    "solver_status": -1,
}


@dataclass
class TelemetryRow:
    t: float
    phase: str
    uas_x: float
    uas_y: float
    e_r: float
    theta_true: float
    theta_meas: float = math.nan
    vel_meas: float = math.nan
    vel_hist: float = math.nan
    t1: float = math.nan
    t2: float = math.nan
    t3: float = math.nan
    t4: float = math.nan
    e1: float = math.nan
    e2: float = math.nan
    e3: float = math.nan
    e4: float = math.nan
    t_rdv: float = math.nan
    rho: float = math.nan
    rho_r: float = math.nan
    dist_uas_driver: float = math.nan
    solver_status: str = ""


@dataclass
class RunTrace:
    header: dict
    rows: list[TelemetryRow] = field(default_factory=list)
    summary: dict = field(default_factory=dict)
    timings: dict = field(default_factory=dict)  # wall-clock; never serialized with the trace


def _encode(name: str, value) -> str:
    places = _COLUMNS[name]
    if places < 0:
        return str(value)
    v = float(value)
    if math.isnan(v):
        return "nan"
    if math.isinf(v):
        return "inf" if v > 0 else "-inf"
    return f"{v:.{places}f}"


def _decode(name: str, text: str):
    if _COLUMNS[name] < 0:
        return text
    return float(text)


def _row_record(row: TelemetryRow) -> dict[str, str]:
    raw = asdict(row)
    return {name: _encode(name, raw[name]) for name in _COLUMNS}


def write_csv(trace: RunTrace, path: str | Path) -> None:
    path = Path(path)
    with path.open("w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=list(_COLUMNS))
        writer.writeheader()
        for row in trace.rows:
            writer.writerow(_row_record(row))


def write_jsonl(trace: RunTrace, path: str | Path) -> None:
    path = Path(path)
    with path.open("w") as fh:
        fh.write(json.dumps({"type": "header", **trace.header}, sort_keys=True) + "\n")
        for row in trace.rows:
            fh.write(json.dumps({"type": "row", **_row_record(row)}, sort_keys=True) + "\n")
        fh.write(json.dumps({"type": "summary", **trace.summary}, sort_keys=True) + "\n")


def write_summary(trace: RunTrace, path: str | Path) -> None:
    payload = {"header": trace.header, "summary": trace.summary}
    Path(path).write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")


def read_rows(path: str | Path) -> list[dict]:
    """Decode trace rows from either encoding into typed records."""
    path = Path(path)
    records: list[dict] = []
    if path.suffix == ".jsonl":
        for line in path.read_text().splitlines():
            obj = json.loads(line)
            if obj.get("type") == "row":
                records.append(
                    {name: _decode(name, obj[name]) for name in _COLUMNS}
                )
        return records
    with path.open() as fh:
        for raw in csv.DictReader(fh):
            records.append({name: _decode(name, raw[name]) for name in _COLUMNS})
    return records


def columns() -> list[str]:
    return list(_COLUMNS)
