from collections import Counter

import pytest
from hypothesis import given, strategies as st

from talentgraph.orgdata import EmailRecord
from talentgraph.textprep import (build_corpus_stats, is_date_or_time, load_blocklist, prune_tokens, rank_trimmed,
                                  tfidf_scores)


def recs(*subjects):
    return [EmailRecord("a", "b", k, tuple(s.split())) for k, s in enumerate(subjects)]


def test_doc_freq_two_subjects():
    st_ = build_corpus_stats(recs("a b", "a c"))
    assert st_.token_doc_freq == {"a": 2, "b": 1, "c": 1}
    assert st_.n_docs == 2


def test_single_subject_doc_freq_one():
    st_ = build_corpus_stats(recs("x y z x"))
    assert set(st_.token_doc_freq.values()) == {1}
    assert st_.token_total_freq["x"] == 2


def test_empty_corpus_rejected():
    with pytest.raises(ValueError):
        build_corpus_stats([])


def test_stats_match_recount(small_org):
    stats = build_corpus_stats(small_org.records)
    doc, tot = {}, {}
    for r in small_org.records:
        for t in r.subject_tokens:
            tot[t] = tot.get(t, 0) + 1
        for t in set(r.subject_tokens):
            doc[t] = doc.get(t, 0) + 1
    assert stats.token_doc_freq == doc and stats.token_total_freq == tot
    assert stats.n_docs == len(small_org.records)


def test_rank_trim_removes_five_each_end():
    # token t_k appears k+1 times: 100 distinct frequencies
    subjects = [" ".join([f"t{k:03d}"] * (k + 1)) for k in range(100)]
    records = recs(*subjects)
    stats = build_corpus_stats(records)
    out = prune_tokens(records, stats, tfidf_floor=0.0)
    kept = {t for r in out for t in r.subject_tokens}
    ranked = sorted(stats.token_total_freq, key=lambda t: (-stats.token_total_freq[t], t))
    assert kept == set(ranked[5:-5])
    assert len(kept) == 90


def test_rank_trim_ties_lexicographic():
    stats = build_corpus_stats(recs(" ".join(f"w{k:02d}" for k in range(40))))
    # all frequencies tie: the 2 first and 2 last names go
    assert rank_trimmed(stats) == {"w00", "w01", "w38", "w39"}


def test_date_tokens_removed():
    assert is_date_or_time("2024-03-01")
    assert is_date_or_time("14:30")
    assert not is_date_or_time("payroll")
    records = recs("payroll 2024-03-01 request")
    stats = build_corpus_stats(records)
    out = prune_tokens(records, stats, tfidf_floor=0.0)
    assert "2024-03-01" not in out[0].subject_tokens


def test_uniform_frequencies_only_rank_trim():
    records = recs(" ".join(f"w{k:02d}" for k in range(40)))
    stats = build_corpus_stats(records)
    out = prune_tokens(records, stats)
    assert set(out[0].subject_tokens) == {f"w{k:02d}" for k in range(2, 38)}


def test_blocklist(tmp_path):
    p = tmp_path / "block.txt"
    p.write_text("Meeting\n\nreport\n", encoding="utf-8")
    assert load_blocklist(p) == {"meeting", "report"}
    subjects = [" ".join(f"w{k:02d}" for k in range(40)) + " meeting"]
    records = recs(*subjects)
    out = prune_tokens(records, build_corpus_stats(records), load_blocklist(p))
    assert "meeting" not in out[0].subject_tokens


def test_tfidf_peak_normalised():
    records = recs("a b", "a a c")
    s = tfidf_scores(records, build_corpus_stats(records))
    assert all(0 < v <= 1 for v in s.values())
    assert s["c"] > s["b"] * 0.5


token = st.sampled_from([f"w{k}" for k in range(30)])
corpus = st.lists(st.lists(token, min_size=1, max_size=8), min_size=1, max_size=30)


@given(corpus, st.floats(0.0, 0.3))
def test_prune_idempotent(subjects, floor):
    records = [EmailRecord("a", "b", k, tuple(s)) for k, s in enumerate(subjects)]
    stats = build_corpus_stats(records)
    once = prune_tokens(records, stats, tfidf_floor=floor)
    assert prune_tokens(once, stats, tfidf_floor=floor) == once


@given(st.lists(st.integers(1, 50), min_size=10, max_size=60, unique=True))
def test_distinct_frequencies_shrink_vocab(freqs):
    subjects = [" ".join([f"t{k}"] * f) for k, f in enumerate(freqs)]
    records = recs(*subjects)
    out = prune_tokens(records, build_corpus_stats(records), tfidf_floor=0.0)
    kept = Counter(t for r in out for t in r.subject_tokens)
    assert len(kept) <= 0.9 * len(freqs)
