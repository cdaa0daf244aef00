"""Result serialization: one JSON layout, one CSV layout, both byte-stable.

JSON files carry ``{"config": ..., "meta": {"seed", "version",
"wallclock_s"}, "results": ...}`` with sorted keys.  CSV files carry one row
per trial followed by a ``#summary`` trailer block (one line per summary
entry, values JSON-encoded so nested summaries survive the round trip).
Execution details that do not affect the sampled numbers (thread count,
output destination) never enter the config block, so a rerun with a
different thread count reproduces the file byte for byte; pass
``wallclock_s=0.0`` to also drop the one genuinely nondeterministic field.
"""

from __future__ import annotations

import csv
import io
import json
from pathlib import Path

__all__ = ["payload", "dump_json", "write_json", "csv_text", "write_csv"]


def payload(config_block: dict, seed: int, version: str, wallclock_s: float,
            results: dict) -> dict:
    return {
        "config": config_block,
        "meta": {"seed": int(seed), "version": version,
                 "wallclock_s": float(wallclock_s)},
        "results": results,
    }


def dump_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=2) + "\n"


def write_json(path, obj) -> None:
    Path(path).write_text(dump_json(obj), encoding="utf-8")


def csv_text(rows: list[dict], summary: dict) -> str:
    """Per-trial rows, then ``#summary,<key>,<json value>`` trailer lines."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    if rows:
        header = list(rows[0].keys())
        writer.writerow(header)
        for row in rows:
            writer.writerow([row[k] for k in header])
    for key in sorted(summary):
        writer.writerow(["#summary", key, json.dumps(summary[key], sort_keys=True)])
    return buf.getvalue()


def write_csv(path, rows: list[dict], summary: dict) -> None:
    Path(path).write_text(csv_text(rows, summary), encoding="utf-8")
