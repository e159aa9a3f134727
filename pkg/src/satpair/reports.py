"""Report emission: canonical JSON with provenance, CSV tables, digests.

Reports are {"report": ..., "provenance": ..., "metadata": ...} with sorted
keys and fixed separators, so two runs with the same config and seed produce
byte-identical files once the metadata block (the only home of timestamps) is
dropped.  Provenance carries the config hash, the seed, and a SHA-256 digest
of every input file.
"""

from __future__ import annotations

import csv
import hashlib
import json
from datetime import datetime, timezone
from pathlib import Path


def canonical_json(obj) -> str:
    """Deterministic JSON text: sorted keys, no whitespace variation."""
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), ensure_ascii=False)


def sha256_file(path: str | Path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(1 << 20), b""):
            digest.update(chunk)
    return digest.hexdigest()


def config_hash(config: dict) -> str:
    """SHA-256 over the canonical JSON rendering of the config."""
    return hashlib.sha256(canonical_json(config).encode("utf-8")).hexdigest()


def make_provenance(config: dict, seed: int, inputs: dict[str, str | Path]) -> dict:
    """Provenance block: config hash, seed, and per-input digests."""
    return {
        "config_hash": config_hash(config),
        "seed": seed,
        "inputs": {name: sha256_file(path) for name, path in sorted(inputs.items())},
    }


def write_report(path: str | Path, report: dict, provenance: dict) -> dict:
    """Write the full report document; returns it.

    Everything outside "metadata" is deterministic for a fixed config + seed;
    "metadata" holds the wall-clock timestamp and nothing else load-bearing.
    """
    doc = {
        "report": report,
        "provenance": provenance,
        "metadata": {"timestamp": datetime.now(timezone.utc).isoformat()},
    }
    Path(path).write_text(canonical_json(doc) + "\n", encoding="utf-8")
    return doc


def strip_metadata(doc: dict) -> dict:
    """The byte-comparable portion of a report document."""
    return {k: v for k, v in doc.items() if k != "metadata"}


def write_csv(path: str | Path, header: list[str], rows: list[list]) -> None:
    """Plain comma-delimited table with a header row."""
    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f)
        writer.writerow(header)
        writer.writerows(rows)
