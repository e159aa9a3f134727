"""HTTP captioning client: two canonical prompts, retries with backoff.

The captioner lives behind a minimal HTTP contract so the pipeline is
testable without any model: POST {endpoint}/v1/caption with JSON body
{"image_id": str, "image_b64": optional str, "prompt": str}; a 200 response
carries {"caption": str}.  5xx responses and transport errors are retried
with exponential backoff (3 retries by default); anything else outside the
contract raises MalformedResponseError.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import requests

from .errors import EndpointDownError, MalformedResponseError

PROMPT_SHORT = "Write a short description for the image."
PROMPT_DETAIL = "Describe the image in detail"
PROMPT_TEXTS = {"SHORT": PROMPT_SHORT, "DETAIL": PROMPT_DETAIL}
PROMPT_IDS = ("SHORT", "DETAIL")  # canonical emission order per image


@dataclass
class CaptionClientConfig:
    """Endpoint location and retry/concurrency behavior."""

    endpoint: str
    timeout: float = 10.0
    max_retries: int = 3
    backoff_base: float = 0.25  # seconds; delay = base * 2^attempt
    concurrency: int = 8

    def __post_init__(self):
        if self.max_retries < 0:
            raise ValueError(f"max_retries must be >= 0, got {self.max_retries}")
        if self.concurrency < 1:
            raise ValueError(f"concurrency must be >= 1, got {self.concurrency}")


def prompt_text(prompt_id: str) -> str:
    """Canonical prompt string for SHORT or DETAIL."""
    try:
        return PROMPT_TEXTS[prompt_id]
    except KeyError:
        raise ValueError(f"prompt_id must be one of {PROMPT_IDS}, got {prompt_id!r}") from None


def caption_image(
    image_id: str,
    prompt_id: str,
    cfg: CaptionClientConfig,
    image_b64: str | None = None,
) -> str:
    """Fetch one caption; retries 5xx/transport failures, returns the text verbatim."""
    body: dict = {"image_id": image_id, "prompt": prompt_text(prompt_id)}
    if image_b64 is not None:
        body["image_b64"] = image_b64
    url = cfg.endpoint.rstrip("/") + "/v1/caption"
    last_failure = "no attempt made"
    for attempt in range(cfg.max_retries + 1):
        if attempt:
            time.sleep(cfg.backoff_base * 2 ** (attempt - 1))
        try:
            resp = requests.post(url, json=body, timeout=cfg.timeout)
        except requests.RequestException as exc:
            last_failure = f"transport error: {exc}"
            continue
        if 500 <= resp.status_code < 600:
            last_failure = f"server error {resp.status_code}"
            continue
        if resp.status_code != 200:
            raise MalformedResponseError(
                f"{url} answered {resp.status_code} for image {image_id!r}"
            )
        try:
            payload = resp.json()
        except ValueError as exc:
            raise MalformedResponseError(f"{url} returned non-JSON body: {exc}") from exc
        caption = payload.get("caption") if isinstance(payload, dict) else None
        if not isinstance(caption, str) or not caption:
            raise MalformedResponseError(
                f"{url} response lacks a non-empty 'caption' string: {payload!r}"
            )
        return caption
    raise EndpointDownError(
        f"{url} unreachable after {cfg.max_retries + 1} attempts ({last_failure})"
    )
