import numpy as np
import pytest

import oracles
from conftest import graph_from_adj
from talentgraph.graphs import normalize
from talentgraph.model import (KINDS, FusedEmbeddings, FusionHead, FusionModel, ShapeError, cosine_scores, fuse,
                               gcn_forward, score_pair, sigmoid)


def small_instance(rng, n=6, d=104):
    a_str = oracles.random_graph_adj(rng, n, 0.5, weighted=True)
    a_ssim = oracles.random_graph_adj(rng, n, 0.5, weighted=True)
    early = a_str / max(a_str.max(), 1e-12) + a_ssim / max(a_ssim.max(), 1e-12)
    ops = {k: normalize(graph_from_adj(a)) for k, a in (("str", a_str), ("ssim", a_ssim), ("early", early))}
    return rng.normal(size=(n, d)), ops


def test_gcn_identity_operator():
    x = np.array([[1.0, -2.0], [-0.5, 3.0]])
    out = gcn_forward(x, np.eye(2), [(np.eye(2), np.zeros(2))])
    # a single layer is the output layer, so it is linear
    assert np.array_equal(out, x)
    two = gcn_forward(x, np.eye(2), [(np.eye(2), np.zeros(2)), (np.eye(2), np.zeros(2))])
    assert np.array_equal(two, np.maximum(x, 0))


def test_gcn_clique_equal_rows(rng):
    op = normalize(graph_from_adj(np.array([[0.0, 1.0], [1.0, 0.0]])))
    x = np.tile(rng.normal(size=(1, 5)), (2, 1))
    m = FusionModel("single_str", in_dim=5, hidden=4, out_dim=3)
    out = gcn_forward(x, op, m.layers("str"))
    assert np.array_equal(out[0], out[1])


def test_gcn_matches_dense_chain(rng):
    a = oracles.random_graph_adj(rng, 6, 0.5, weighted=True)
    m = FusionModel("single_str", in_dim=7, hidden=5, out_dim=4, seed=3)
    x = rng.normal(size=(6, 7))
    m.params["str.b0"] = rng.normal(size=5)
    out = gcn_forward(x, normalize(graph_from_adj(a)), m.layers("str"))
    ref = oracles.gcn_chain(x, oracles.normalized_dense(a), m.layers("str"))
    assert np.abs(out - ref).max() < 1e-12


def test_gcn_shape_errors(rng):
    m = FusionModel("single_str", in_dim=4, hidden=3, out_dim=2)
    with pytest.raises(ShapeError):
        gcn_forward(rng.normal(size=(5, 4)), np.eye(3), m.layers("str"))
    with pytest.raises(ShapeError):
        gcn_forward(rng.normal(size=(3, 6)), np.eye(3), m.layers("str"))


def test_gating_zero_params_is_mean(rng):
    hs, hm = rng.normal(size=(4, 3)), rng.normal(size=(4, 3))
    out = fuse(hs, hm, FusionHead("gating", gate_w=np.zeros((3, 6)), gate_b=np.zeros(3)))
    assert np.all(out.gate_values == 0.5)
    assert np.allclose(out.H, (hs + hm) / 2, atol=1e-15)


def test_gating_saturated_is_structure(rng):
    hs, hm = rng.normal(size=(4, 3)), rng.normal(size=(4, 3))
    out = fuse(hs, hm, FusionHead("gating", gate_w=np.zeros((3, 6)), gate_b=np.full(3, 50.0)))
    assert np.abs(out.H - hs).max() < 1e-9


def test_weighted_sum_hand_case():
    hs = np.array([[1.0, 2.0], [3.0, 4.0]])
    hm = np.array([[5.0, 0.0], [-1.0, 10.0]])
    out = fuse(hs, hm, FusionHead("weighted_sum", alpha=0.8)).H
    assert np.allclose(out, [[1.8, 1.6], [2.2, 5.2]], atol=1e-14)


def test_late_concat_and_mismatch(rng):
    hs, hm = rng.normal(size=(3, 2)), rng.normal(size=(3, 2))
    out = fuse(hs, hm, FusionHead("late_concat")).H
    assert out.shape == (3, 4) and np.array_equal(out[:, :2], hs)
    with pytest.raises(ShapeError):
        fuse(hs, rng.normal(size=(3, 3)), FusionHead("late_concat"))


def test_score_pair_cases(rng):
    H = np.array([[1.0, 2.0], [1.0, 2.0], [-2.0, 1.0], [0.0, 0.0]])
    assert score_pair(H, 0, 1) == pytest.approx(1.0)
    assert score_pair(H, 0, 2) == pytest.approx(0.0, abs=1e-15)
    assert score_pair(H, 0, 3) == 0.0
    R = rng.normal(size=(5, 4))
    assert score_pair(FusedEmbeddings(R), 1, 4) == pytest.approx(R[1] @ R[4] / np.linalg.norm(R[1]) / np.linalg.norm(R[4]))
    S = cosine_scores(R)
    assert S[1, 4] == pytest.approx(score_pair(R, 1, 4), abs=1e-14)


def test_sigmoid_stable():
    v = sigmoid(np.array([-800.0, 0.0, 800.0]))
    assert np.all(np.isfinite(v)) and v[1] == 0.5


@pytest.mark.parametrize("kind", KINDS)
def test_gradients_match_finite_differences(kind):
    rng = np.random.default_rng(7)
    x, ops = small_instance(rng, n=6, d=10)
    m = FusionModel(kind, in_dim=10, hidden=6, out_dim=5, seed=1)
    for k in m.params:
        if k.endswith(("b0", "b1", ".b")):
            m.params[k] = rng.normal(0, 0.1, size=m.params[k].shape)
    errs = oracles.model_grad_errors(m, x, ops)
    assert max(errs.values()) < 1e-6, errs


@pytest.mark.parametrize("kind", ["attention", "gating", "late_concat"])
def test_zero_upstream_gives_zero_grads(kind, rng):
    x, ops = small_instance(rng, d=8)
    m = FusionModel(kind, in_dim=8, hidden=4, out_dim=3)
    H = m.forward(x, ops).H
    grads = m.backward(np.zeros_like(H))
    assert set(grads) == set(m.params)
    assert all(not np.any(g) for g in grads.values())


def test_saturated_gate_grads_vanish(rng):
    x, ops = small_instance(rng, d=8)
    m = FusionModel("gating", in_dim=8, hidden=4, out_dim=3)
    m.params["gate.b"] = np.full(3, 40.0)
    m.params["gate.W"] = np.zeros((3, 6))
    fused = m.forward(x, ops)
    grads = m.backward(rng.normal(size=fused.H.shape))
    assert np.abs(grads["gate.W"]).max() < 1e-10
    assert np.abs(grads["gate.b"]).max() < 1e-10


def test_backward_before_forward():
    with pytest.raises(RuntimeError):
        FusionModel("gating", in_dim=3, hidden=2, out_dim=2).backward(np.zeros((1, 2)))


def test_late_concat_prefix_equals_single_str(rng):
    x, ops = small_instance(rng, d=9)
    late = FusionModel("late_concat", in_dim=9, hidden=4, out_dim=3, seed=5)
    single = FusionModel("single_str", in_dim=9, hidden=4, out_dim=3, seed=0)
    for k in single.params:
        single.params[k] = late.params[k].copy()
    assert np.array_equal(late.forward(x, ops).H[:, :3], single.forward(x, ops).H)


def test_towers_do_not_share_weights():
    m = FusionModel("gating", in_dim=5, hidden=4, out_dim=3)
    assert not np.array_equal(m.params["str.W0"], m.params["ssim.W0"])


def test_unknown_kind_and_alpha():
    with pytest.raises(ValueError):
        FusionModel("gat")
    with pytest.raises(ValueError):
        FusionModel("weighted_sum", alpha=1.5)


@pytest.mark.parametrize("kind", KINDS)
def test_checkpoint_roundtrip(kind, tmp_path, rng):
    x, ops = small_instance(rng, d=6)
    m = FusionModel(kind, in_dim=6, hidden=5, out_dim=4, seed=2)
    m.save(tmp_path / "ck.json")
    back = FusionModel.load(tmp_path / "ck.json")
    assert back.kind == kind and back.dims == m.dims
    assert np.array_equal(back.forward(x, ops).H, m.forward(x, ops).H)


def test_checkpoint_version_checked():
    obj = FusionModel("single_str", in_dim=3, hidden=2, out_dim=2).to_json()
    obj["version"] = 99
    with pytest.raises(ValueError):
        FusionModel.from_json(obj)


def test_seeded_init_deterministic():
    a = FusionModel("attention", in_dim=6, hidden=4, out_dim=3, seed=11)
    b = FusionModel("attention", in_dim=6, hidden=4, out_dim=3, seed=11)
    assert all(np.array_equal(a.params[k], b.params[k]) for k in a.params)
