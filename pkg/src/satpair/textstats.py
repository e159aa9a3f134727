"""Caption statistics: word-length histograms and stopword-filtered token counts.

The stopword filter is a shipped lexicon (determiners, prepositions,
conjunctions, WH-pronouns, existential "there", and common adverbs including
the frequent -ly forms) rather than a part-of-speech tagger; the file is
plain text, one token per line, and replaceable.
"""

from __future__ import annotations

import string
from collections import Counter
from dataclasses import dataclass
from importlib import resources
from pathlib import Path


@dataclass
class Histogram:
    """Fixed-width binning of caption word counts: counts[i] covers
    [i*bin_width, (i+1)*bin_width)."""

    bin_width: int
    counts: list[int]

    @property
    def total(self) -> int:
        return sum(self.counts)

    def as_dict(self) -> dict:
        return {"bin_width": self.bin_width, "counts": list(self.counts)}


@dataclass
class CaptionStats:
    """The §II-B style summary: lengths, filtered token frequencies, pair count."""

    length_histogram: Histogram
    token_frequencies: dict[str, int]
    total_pairs: int

    def as_dict(self) -> dict:
        return {
            "length_histogram": self.length_histogram.as_dict(),
            "token_frequencies": dict(
                sorted(self.token_frequencies.items(), key=lambda kv: (-kv[1], kv[0]))
            ),
            "total_pairs": self.total_pairs,
        }


def caption_word_count(caption: str) -> int:
    """Whitespace-delimited word count."""
    return len(caption.split())


def caption_length_histogram(captions: list[str], bin_width: int = 10) -> Histogram:
    """Histogram of word counts; bin index = floor(length / bin_width)."""
    if bin_width < 1:
        raise ValueError(f"bin_width must be >= 1, got {bin_width}")
    if not captions:
        return Histogram(bin_width, [])
    bins = [caption_word_count(c) // bin_width for c in captions]
    counts = [0] * (max(bins) + 1)
    for b in bins:
        counts[b] += 1
    return Histogram(bin_width, counts)


def tokenize(caption: str) -> list[str]:
    """Lowercase, split on whitespace, strip punctuation at token edges."""
    out = []
    for raw in caption.lower().split():
        tok = raw.strip(string.punctuation)
        if tok:
            out.append(tok)
    return out


def token_frequency(captions: list[str], stoplist: set[str]) -> dict[str, int]:
    """Token counts over all captions, with stoplist members excluded."""
    counter: Counter[str] = Counter()
    for caption in captions:
        counter.update(tok for tok in tokenize(caption) if tok not in stoplist)
    return dict(counter)


def load_stoplist(path: str | Path) -> set[str]:
    """One token per line; '#' starts a comment; blank lines ignored."""
    words: set[str] = set()
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        line = line.split("#", 1)[0].strip()
        if line:
            words.add(line.lower())
    return words


def default_stoplist() -> set[str]:
    """The lexicon shipped with the package."""
    text = resources.files("satpair").joinpath("data/stopwords.txt").read_text(encoding="utf-8")
    words: set[str] = set()
    for line in text.splitlines():
        line = line.split("#", 1)[0].strip()
        if line:
            words.add(line.lower())
    return words


def caption_stats(captions: list[str], stoplist: set[str], bin_width: int = 10) -> CaptionStats:
    """Bundle histogram, token table, and pair count for a caption collection."""
    return CaptionStats(
        length_histogram=caption_length_histogram(captions, bin_width),
        token_frequencies=token_frequency(captions, stoplist),
        total_pairs=len(captions),
    )
