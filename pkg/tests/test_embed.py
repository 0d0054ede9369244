import numpy as np
import pytest
from hypothesis import given, strategies as st

from talentgraph.embed import (NodeSemantics, SkipGramConfig, VocabularyError, WordEmbeddings, node_centroids,
                               pool_subject, train_skipgram)
from talentgraph.orgdata import EmailRecord, SyntheticOrgConfig, generate_synthetic_org


def recs(*subjects, pairs=None):
    pairs = pairs or [("a", "b")] * len(subjects)
    return [EmailRecord(s, r, k, tuple(t.split())) for k, ((s, r), t) in enumerate(zip(pairs, subjects))]


def test_cooccurrence_structure_learned():
    # a,b always together and c,d always together, never across
    corpus = recs(*(["a b a b"] * 60 + ["c d c d"] * 60))
    wins = 0
    for seed in range(5):
        emb = train_skipgram(corpus, SkipGramConfig(dim=16, window=2, epochs=20, seed=seed))
        v = {t: emb.vectors[emb.index[t]] for t in "abcd"}
        cos = lambda x, y: x @ y / np.linalg.norm(x) / np.linalg.norm(y)
        wins += cos(v["a"], v["b"]) > cos(v["a"], v["c"])
    assert wins >= 3


def test_zero_epochs_returns_init():
    corpus = recs("x y z", "y z w")
    cfg = SkipGramConfig(dim=8, epochs=0, seed=4)
    emb = train_skipgram(corpus, cfg)
    rng = np.random.default_rng(4)
    expected = (rng.random((4, 8)) - 0.5) / 8
    assert np.array_equal(emb.vectors, expected)
    assert emb.loss_curve == []


def test_same_seed_same_vectors():
    corpus = recs(*["p q r s"] * 20)
    a = train_skipgram(corpus, SkipGramConfig(dim=10, epochs=3, seed=1))
    b = train_skipgram(corpus, SkipGramConfig(dim=10, epochs=3, seed=1))
    assert np.array_equal(a.vectors, b.vectors) and a.vocab == b.vocab


def test_tiny_vocab_rejected():
    with pytest.raises(VocabularyError):
        train_skipgram(recs("solo solo"))


def test_training_lowers_loss():
    corpus = recs(*(["a b a b"] * 50 + ["c d c d"] * 50))
    emb = train_skipgram(corpus, SkipGramConfig(dim=16, window=2, epochs=8, seed=0))
    assert emb.loss_curve[-1] < emb.loss_curve[0]


def test_pool_single_token_verbatim():
    emb = WordEmbeddings(["a", "b"], np.array([[1.0, 2.0], [3.0, 4.0]]))
    vec, ok = pool_subject(["b"], emb)
    assert ok and np.array_equal(vec, [3.0, 4.0])


def test_pool_mean_pooling_worked_example():
    # five token vectors; first two and last two components of each
    rows = {
        "payroll": [0.1624, -0.3841, 0.5189, -0.2496],
        "adjustment": [-0.3012, 0.0973, 0.1487, 0.4172],
        "error": [0.5650, -0.1229, -0.3794, -0.2186],
        "confirmation": [-0.0876, 0.3321, 0.2079, -0.1443],
        "request": [0.2210, -0.2988, -0.0604, 0.0768],
    }
    emb = WordEmbeddings(list(rows), np.array(list(rows.values())))
    vec, ok = pool_subject("payroll adjustment error confirmation request".split(), emb)
    assert ok
    assert np.allclose(vec, [0.11192, -0.07528, 0.08714, -0.0237], atol=5e-6)


def test_pool_antipodes_cancel():
    emb = WordEmbeddings(["u", "v"], np.array([[0.3, -1.2], [-0.3, 1.2]]))
    vec, _ = pool_subject(["u", "v"], emb)
    assert np.allclose(vec, 0.0)


def test_pool_all_oov_flagged():
    emb = WordEmbeddings(["u"], np.array([[1.0]]))
    vec, ok = pool_subject(["zz", "yy"], emb)
    assert not ok and np.array_equal(vec, [0.0])


@given(st.permutations(["a", "b", "c", "a", "zz"]))
def test_pool_permutation_invariant(tokens):
    emb = WordEmbeddings(["a", "b", "c"], np.arange(9.0).reshape(3, 3) / 7.0)
    vec, _ = pool_subject(tokens, emb)
    ref, _ = pool_subject(["a", "b", "c", "a"], emb)
    assert np.allclose(vec, ref, atol=1e-15)


def test_centroids_single_email_and_uncovered():
    emb = WordEmbeddings(["x", "y"], np.array([[1.0, 0.0], [0.0, 1.0]]))
    sem = node_centroids(recs("x y"), emb, ["a", "b", "c"])
    assert np.allclose(sem.centroids[0], [0.5, 0.5])
    assert sem.coverage.tolist() == [1, 1, 0]
    assert sem.uncovered == ["c"]
    assert np.array_equal(sem.centroids[2], [0.0, 0.0])


def test_centroids_two_pass_oracle(small_org):
    emb = train_skipgram(small_org.records, SkipGramConfig(dim=12, epochs=1, seed=0))
    order = small_org.roster.ids
    sem = node_centroids(small_org.records, emb, order)
    # pass 1: every pooled email vector; pass 2: per-node average
    pooled = [(r.sender, r.recipient, pool_subject(r.subject_tokens, emb)) for r in small_org.records]
    for k, e in enumerate(order):
        mine = [v for s, r, (v, ok) in pooled if ok and e in (s, r)]
        ref = np.mean(mine, axis=0) if mine else np.zeros(12)
        assert np.allclose(sem.centroids[k], ref, atol=1e-12)
        assert sem.coverage[k] == len(mine)
    # centroid norm never exceeds the largest pooled norm
    top = max(np.linalg.norm(v) for _, _, (v, ok) in pooled if ok)
    assert np.linalg.norm(sem.centroids, axis=1).max() <= top + 1e-12


def test_centroid_csv_roundtrip(tmp_path):
    sem = NodeSemantics(["a", "b"], np.array([[0.1, 1 / 3], [0.0, -2.5]]), np.array([3, 0]))
    sem.write_csv(tmp_path / "c.csv")
    back = NodeSemantics.read_csv(tmp_path / "c.csv")
    assert back.order == sem.order and np.array_equal(back.centroids, sem.centroids)
    assert np.array_equal(back.coverage, sem.coverage)


def test_embeddings_json_roundtrip(tmp_path):
    emb = WordEmbeddings(["a", "b"], np.array([[0.1, 0.2], [1 / 3, -4.0]]))
    emb.save(tmp_path / "e.json")
    back = WordEmbeddings.load(tmp_path / "e.json")
    assert back.vocab == emb.vocab and np.array_equal(back.vectors, emb.vectors)


def test_intra_family_cosine_exceeds_inter():
    org = generate_synthetic_org(SyntheticOrgConfig(n_employees=100, text_informativeness=1.0, rng_seed=2))
    emb = train_skipgram(org.records, SkipGramConfig(dim=32, epochs=3, seed=0))
    sem = node_centroids(org.records, emb, org.roster.ids)
    fam = np.array([e.job_family for e in org.roster.employees])
    u = sem.centroids / np.linalg.norm(sem.centroids, axis=1, keepdims=True)
    s = u @ u.T
    same = fam[:, None] == fam[None, :]
    off = ~np.eye(len(fam), dtype=bool)
    assert s[same & off].mean() > s[~same].mean()
