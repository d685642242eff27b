import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from crossrl.embedding import StructuralEmbedding, pca_reduce, raw_structural_features, structural_embedding
from crossrl.graph import Graph, generate_rome_like

C6 = Graph.from_edges(6, [(i, (i + 1) % 6) for i in range(6)])


def test_raw_shape_and_vertex_transitive():
    raw = raw_structural_features(C6)
    assert raw.shape == (6, 32)
    assert np.allclose(raw, raw[0])


def test_star_center_differs_from_leaf():
    g = Graph.from_edges(7, [(0, i) for i in range(1, 6)] + [(1, 2), (5, 6)])
    raw = raw_structural_features(g)
    assert raw[0, 0] != raw[3, 0]


@given(st.integers(0, 10_000))
def test_raw_features_permutation_equivariant(seed):
    g = generate_rome_like(15, seed)
    perm = np.random.default_rng(seed).permutation(g.n)
    raw = raw_structural_features(g)
    raw_p = raw_structural_features(g.relabeled(perm))
    np.testing.assert_allclose(raw_p[perm], raw, atol=1e-12)


@pytest.mark.parametrize("seed", range(5))
def test_embedding_permutation_equivariant(seed):
    g = generate_rome_like(30, seed)
    perm = np.random.default_rng(seed).permutation(g.n)
    a = pca_reduce(raw_structural_features(g)).features
    b = pca_reduce(raw_structural_features(g.relabeled(perm))).features
    np.testing.assert_allclose(b[perm], a, atol=1e-7)


def test_rank_one_input():
    rng = np.random.default_rng(0)
    raw = np.outer(rng.normal(size=10), rng.normal(size=32))
    emb = pca_reduce(raw, standardize=False)
    assert np.abs(emb.features[:, 1:]).max() < 1e-9
    assert np.abs(emb.components[1:]).max() == 0.0


def test_two_clusters_separated():
    rng = np.random.default_rng(1)
    centers = rng.normal(size=(2, 32)) * 5
    raw = np.vstack([centers[0] + rng.normal(size=(20, 32)), centers[1] + rng.normal(size=(20, 32))])
    f = pca_reduce(raw).features[:, 0]
    a, b = f[:20], f[20:]
    within = (a.var() + b.var()) / 2
    between = (a.mean() - b.mean()) ** 2
    assert within < between


@pytest.mark.parametrize("seed", range(5))
def test_pca_matches_eigh_oracle(seed):
    rng = np.random.default_rng(seed)
    raw = rng.normal(size=(12, 32))
    emb = pca_reduce(raw, standardize=False)
    x = raw - raw.mean(axis=0)
    vals, vecs = np.linalg.eigh(x.T @ x / len(x))
    top = vecs[:, ::-1][:, :4].T
    np.testing.assert_allclose(emb.explained, vals[::-1][:4], rtol=1e-6)
    np.testing.assert_allclose(np.abs(emb.components @ top.T), np.eye(4), atol=1e-5)


def test_pca_reconstruction_optimal():
    rng = np.random.default_rng(7)
    raw = rng.normal(size=(5, 32))
    x = raw - raw.mean(axis=0)
    emb = pca_reduce(raw, standardize=False)
    err = np.linalg.norm(x - emb.features @ emb.components)
    for _ in range(50):
        q, _ = np.linalg.qr(rng.normal(size=(32, 4)))
        assert err <= np.linalg.norm(x - x @ q @ q.T) + 1e-9


def test_components_orthonormal():
    emb = structural_embedding(generate_rome_like(40, 3))
    gram = emb.components @ emb.components.T
    nz = np.abs(np.diag(gram)) > 0
    np.testing.assert_allclose(gram[np.ix_(nz, nz)], np.eye(nz.sum()), atol=1e-6)


def test_embedding_cached_and_persisted(tmp_path):
    g = generate_rome_like(20, 4)
    a, b = structural_embedding(g), structural_embedding(g)
    assert a is b
    a.save(tmp_path / "e.json")
    np.testing.assert_allclose(StructuralEmbedding.load_features(tmp_path / "e.json"), a.features)
    assert a.features.shape == (g.n, 4)
