"""
SBRO-FL Records - per-round results and their CSV form
"""
from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping

CSV_COLUMNS = (
    "round", "method", "seed", "selected_ids", "num_selected", "num_clean_selected",
    "total_cost", "global_accuracy", "sv", "reputation",
)


@dataclass(frozen=True)
class RoundRecord:
    """What one communication round selected, paid and achieved."""

    round: int
    method: str
    seed: int
    selected_ids: tuple[int, ...]
    total_cost: float
    global_accuracy: float
    num_clean_selected: int = 0
    sv: Mapping[int, float] = field(default_factory=dict)
    reputation_snapshot: tuple[float, ...] = ()
    wall_time_ms: float = 0.0
    # v(S) and v(empty) of the round's coalition game; None when no Shapley pass ran.
    coalition_value: float | None = None
    empty_value: float | None = None

    def __post_init__(self):
        if not 0.0 <= self.global_accuracy <= 1.0:
            raise ValueError(f"global_accuracy {self.global_accuracy} outside [0, 1]")


def _real(value: float) -> str:
    return f"{value:.6f}"


def _row(record: RoundRecord, include_timing: bool) -> list[str]:
    row = [
        str(record.round),
        record.method,
        str(record.seed),
        ";".join(str(i) for i in record.selected_ids),
        str(len(record.selected_ids)),
        str(record.num_clean_selected),
        _real(record.total_cost),
        _real(record.global_accuracy),
        ";".join(f"{i}:{_real(v)}" for i, v in sorted(record.sv.items())),
        ";".join(_real(r) for r in record.reputation_snapshot),
    ]
    if include_timing:
        row.append(_real(record.wall_time_ms))
    return row


def render_csv(records: Iterable[RoundRecord], include_timing: bool = False) -> str:
    """CSV text: header plus one LF-terminated row per record."""
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    header = list(CSV_COLUMNS) + (["wall_time_ms"] if include_timing else [])
    writer.writerow(header)
    for record in records:
        writer.writerow(_row(record, include_timing))
    return buffer.getvalue()


def emit_csv(records: Iterable[RoundRecord], path: str | Path, include_timing: bool = False) -> Path:
    """
    Write records as UTF-8 CSV with LF line endings.

    selected_ids is semicolon-joined, sv holds id:value pairs, reals carry
    six decimals.

    Args:
        records: Rounds to write, in order
        path: Output file (parent directories are created)
        include_timing: Append the wall_time_ms column

    Returns:
        The written path
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8", newline="") as handle:
        handle.write(render_csv(records, include_timing))
    return path


def write_sidecar(flat_config: Mapping[str, str], csv_path: str | Path) -> Path:
    """Store the resolved configuration next to a CSV as <name>.json."""
    path = Path(csv_path).with_suffix(".json")
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(dict(flat_config), indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return path
