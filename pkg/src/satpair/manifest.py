"""Manifest records: construction against the captioning endpoint, merging, JSONL I/O.

A manifest pairs each image crop and prompt with its caption and provenance.
build_manifest fetches both prompts per image over a bounded thread pool but
always emits records in (input index, SHORT before DETAIL) order, so output is
deterministic regardless of completion order.  An image whose fetches fail
after retries contributes no records and one entry in the failures sidecar.
"""

from __future__ import annotations

import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

from .captions import PROMPT_IDS, PROMPT_TEXTS, CaptionClientConfig, caption_image
from .crops import CropRect
from .errors import DuplicateKeyError, SatpairError


@dataclass(frozen=True)
class ImageRef:
    """One source image queued for captioning."""

    image_id: str
    source_dataset: str
    crop: CropRect
    image_b64: str | None = None


@dataclass
class ManifestRecord:
    """One image-prompt-caption triple with provenance."""

    image_id: str
    source_dataset: str
    crop: CropRect
    prompt_id: str
    prompt_text: str
    caption: str

    def __post_init__(self):
        canonical = PROMPT_TEXTS.get(self.prompt_id)
        if canonical is None:
            raise ValueError(f"prompt_id must be one of {PROMPT_IDS}, got {self.prompt_id!r}")
        if self.prompt_text != canonical:
            raise ValueError(
                f"prompt_text {self.prompt_text!r} does not match canonical text for "
                f"{self.prompt_id}: {canonical!r}"
            )
        if not self.caption:
            raise ValueError(f"caption for image {self.image_id!r} is empty")

    def as_dict(self) -> dict:
        return {
            "image_id": self.image_id,
            "source_dataset": self.source_dataset,
            "crop": {"x": self.crop.x, "y": self.crop.y, "w": self.crop.w, "h": self.crop.h},
            "prompt_id": self.prompt_id,
            "prompt_text": self.prompt_text,
            "caption": self.caption,
        }

    @classmethod
    def from_dict(cls, obj: dict) -> "ManifestRecord":
        c = obj["crop"]
        return cls(
            image_id=obj["image_id"],
            source_dataset=obj["source_dataset"],
            crop=CropRect(int(c["x"]), int(c["y"]), int(c["w"]), int(c["h"])),
            prompt_id=obj["prompt_id"],
            prompt_text=obj["prompt_text"],
            caption=obj["caption"],
        )


def build_manifest(
    images: list[ImageRef], cfg: CaptionClientConfig
) -> tuple[list[ManifestRecord], list[dict]]:
    """Caption every image with both prompts; returns (records, failures).

    Fetches run concurrently (cfg.concurrency in flight); output order is by
    (input index, SHORT, DETAIL).  If either prompt of an image fails, the
    image is dropped whole: no records, one failure entry naming the error.
    """
    jobs = [(idx, pid) for idx in range(len(images)) for pid in PROMPT_IDS]

    def fetch(job: tuple[int, str]) -> tuple[int, str, str | None, str | None]:
        idx, pid = job
        ref = images[idx]
        try:
            return idx, pid, caption_image(ref.image_id, pid, cfg, ref.image_b64), None
        except SatpairError as exc:
            return idx, pid, None, str(exc)

    with ThreadPoolExecutor(max_workers=cfg.concurrency) as pool:
        outcomes = list(pool.map(fetch, jobs))

    captions: dict[tuple[int, str], str] = {}
    errors: dict[int, str] = {}
    for idx, pid, caption, error in outcomes:
        if error is None:
            captions[(idx, pid)] = caption
        else:
            errors.setdefault(idx, f"{pid}: {error}")

    records: list[ManifestRecord] = []
    failures: list[dict] = []
    for idx, ref in enumerate(images):
        if idx in errors:
            failures.append({"image_id": ref.image_id, "error": errors[idx]})
            continue
        for pid in PROMPT_IDS:
            records.append(
                ManifestRecord(
                    image_id=ref.image_id,
                    source_dataset=ref.source_dataset,
                    crop=ref.crop,
                    prompt_id=pid,
                    prompt_text=PROMPT_TEXTS[pid],
                    caption=captions[(idx, pid)],
                )
            )
    return records, failures


def merge_manifests(
    parts: list[list[ManifestRecord]],
) -> tuple[list[ManifestRecord], dict[str, int], int]:
    """Concatenate manifest parts, rejecting duplicate (image_id, prompt_id) keys.

    Returns (merged records, per-source-dataset counts, total).
    """
    merged: list[ManifestRecord] = []
    seen: set[tuple[str, str]] = set()
    counts: dict[str, int] = {}
    for part in parts:
        for rec in part:
            key = (rec.image_id, rec.prompt_id)
            if key in seen:
                raise DuplicateKeyError(rec.image_id, rec.prompt_id)
            seen.add(key)
            merged.append(rec)
            counts[rec.source_dataset] = counts.get(rec.source_dataset, 0) + 1
    return merged, counts, len(merged)


def write_manifest(path: str | Path, records: list[ManifestRecord]) -> None:
    """One record object per line, UTF-8 JSONL."""
    with open(path, "w", encoding="utf-8") as f:
        for rec in records:
            f.write(json.dumps(rec.as_dict(), ensure_ascii=False) + "\n")


def read_manifest(path: str | Path) -> list[ManifestRecord]:
    """Read a JSONL manifest written by write_manifest."""
    records: list[ManifestRecord] = []
    with open(path, encoding="utf-8") as f:
        for line in f:
            line = line.strip()
            if line:
                records.append(ManifestRecord.from_dict(json.loads(line)))
    return records
