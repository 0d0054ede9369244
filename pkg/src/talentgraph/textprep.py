"""Corpus statistics and token pruning ahead of embedding training."""

from __future__ import annotations

import math
import re
from collections import Counter
from dataclasses import dataclass, replace
from pathlib import Path

from .orgdata import EmailRecord

DEFAULT_TFIDF_FLOOR = 0.05
TRIM_FRACTION = 0.05

_MONTHS = (
    "jan|feb|mar|apr|may|jun|jul|aug|sep|sept|oct|nov|dec|january|february|march|"
    "april|june|july|august|september|october|november|december"
)
_DAYS = "mon|tue|tues|wed|thu|thur|thurs|fri|sat|sun|monday|tuesday|wednesday|thursday|friday|saturday|sunday"
DATE_TIME_PATTERN = re.compile(
    r"^(?:"
    r"\d{4}[-/.]\d{1,2}[-/.]\d{1,2}"            # 2024-03-01
    r"|\d{1,2}[-/.]\d{1,2}(?:[-/.]\d{2,4})?"     # 03/01, 3.1.24
    r"|\d{1,2}:\d{2}(?::\d{2})?(?:am|pm)?"       # 14:30, 9:00am
    r"|\d{1,2}(?:am|pm)"                          # 9am
    r"|\d{4}(?:q[1-4]|h[12])|(?:q[1-4]|h[12])\d{2,4}|fy\d{2,4}"
    r"|\d{1,2}(?:st|nd|rd|th)"
    r"|(?:" + _MONTHS + r")\d{0,4}"
    r"|(?:" + _DAYS + r")"
    r"|today|tomorrow|yesterday|tonight|weekly|monthly|quarterly"
    r")$"
)


@dataclass(frozen=True)
class CorpusStats:
    token_doc_freq: dict[str, int]
    token_total_freq: dict[str, int]
    n_docs: int


def build_corpus_stats(records: list[EmailRecord]) -> CorpusStats:
    if not records:
        raise ValueError("cannot build statistics over an empty corpus")
    doc = Counter()
    total = Counter()
    for r in records:
        total.update(r.subject_tokens)
        doc.update(set(r.subject_tokens))
    return CorpusStats(dict(doc), dict(total), len(records))


def rank_trimmed(stats: CorpusStats, fraction: float = TRIM_FRACTION) -> set[str]:
    """Tokens in the top or bottom ``fraction`` of the frequency-ranked vocabulary.

    Ranking is by descending total frequency, ties by token text, and the
    cut size is ceil(fraction * vocabulary size) at each end, so at least a
    ``2 * fraction`` share of the types goes whenever the vocabulary is non-empty.
    """
    ranked = sorted(stats.token_total_freq, key=lambda t: (-stats.token_total_freq[t], t))
    m = math.ceil(fraction * len(ranked) - 1e-9)
    if m == 0:
        return set()
    return set(ranked[:m]) | set(ranked[-m:])


def tfidf_scores(records: list[EmailRecord], stats: CorpusStats) -> dict[str, float]:
    """Peak L2-normalised TF-IDF weight of each token over the documents."""
    idf = {
        t: math.log((1 + stats.n_docs) / (1 + df)) + 1.0
        for t, df in stats.token_doc_freq.items()
    }
    best: dict[str, float] = {}
    for r in records:
        tf = Counter(r.subject_tokens)
        weights = {t: c * idf.get(t, 1.0) for t, c in tf.items()}
        norm = math.sqrt(sum(w * w for w in weights.values()))
        for t, w in weights.items():
            v = w / norm
            if v > best.get(t, 0.0):
                best[t] = v
    return best


def is_date_or_time(token: str) -> bool:
    return DATE_TIME_PATTERN.match(token) is not None


def prune_tokens(
    records: list[EmailRecord],
    stats: CorpusStats,
    blocklist: set[str] | frozenset[str] = frozenset(),
    tfidf_floor: float = DEFAULT_TFIDF_FLOOR,
) -> list[EmailRecord]:
    removed = rank_trimmed(stats)
    removed |= set(blocklist)
    scores = tfidf_scores(records, stats)
    removed |= {t for t, s in scores.items() if s < tfidf_floor}
    out = []
    for r in records:
        kept = tuple(t for t in r.subject_tokens if t not in removed and not is_date_or_time(t))
        if kept:
            out.append(r if kept == r.subject_tokens else replace(r, subject_tokens=kept))
    return out


def load_blocklist(path) -> set[str]:
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    return {ln.strip().lower() for ln in lines if ln.strip()}
