"""Per-vertex structural position: 32 message-passing features reduced to 4 by PCA."""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .graph import Graph

RAW_DIM = 32
REDUCED_DIM = 4


@dataclass(frozen=True)
class StructuralEmbedding:
    features: np.ndarray  # (n, 4)
    components: np.ndarray  # (4, raw_dim), rows orthonormal or zero
    explained: np.ndarray  # (4,) eigenvalues, nonincreasing
    raw_dim: int = RAW_DIM
    reduced_dim: int = REDUCED_DIM

    def to_json(self) -> str:
        return json.dumps({str(v): [float(x) for x in row] for v, row in enumerate(self.features)})

    def save(self, path: str | Path) -> None:
        Path(path).write_text(self.to_json(), encoding="utf-8")

    @staticmethod
    def load_features(path: str | Path) -> np.ndarray:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
        return np.array([data[str(v)] for v in range(len(data))], dtype=np.float64)


def _base_features(g: Graph) -> np.ndarray:
    deg = g.degrees.astype(np.float64)
    n = g.n
    feats = np.zeros((n, 6))
    adj = g.adjacency
    nbr_sets = [set(a) for a in adj]
    ecc = g.distance_matrix.max(axis=1).astype(np.float64)
    for v in range(n):
        nb = adj[v]
        if nb:
            nd = deg[list(nb)]
            feats[v, 1:4] = nd.mean(), nd.min(), nd.max()
        k = len(nb)
        if k >= 2:
            links = sum(len(nbr_sets[u] & nbr_sets[v]) for u in nb) / 2
            feats[v, 4] = 2.0 * links / (k * (k - 1))
    feats[:, 0] = deg
    feats[:, 5] = ecc
    return feats


def _aggregate(g: Graph, h: np.ndarray, how: str) -> np.ndarray:
    out = np.zeros_like(h)
    for v, nb in enumerate(g.adjacency):
        if nb:
            rows = h[list(nb)]
            out[v] = rows.mean(axis=0) if how == "mean" else rows.max(axis=0)
    return out


def raw_structural_features(g: Graph, rounds: int = 3) -> np.ndarray:
    """Deterministic, permutation-equivariant 32-dimensional vertex features.

    Base block: degree, mean/min/max neighbor degree, clustering coefficient
    and eccentricity. Round 1 appends neighborhood mean and max of the base
    block; each later round appends the neighborhood mean of the previous
    round's mean block. Zero-padded to 32 columns.
    """
    base = _base_features(g)
    blocks = [base]
    prev = base
    for r in range(rounds):
        mean = _aggregate(g, prev, "mean")
        blocks.append(mean)
        if r == 0:
            blocks.append(_aggregate(g, base, "max"))
        prev = mean
    raw = np.concatenate(blocks, axis=1)[:, :RAW_DIM]
    if raw.shape[1] < RAW_DIM:
        raw = np.pad(raw, ((0, 0), (0, RAW_DIM - raw.shape[1])))
    return raw


def _top_eigenpairs(cov: np.ndarray, k: int, tol: float = 1e-8, max_iter: int = 10_000):
    """Leading eigenpairs of a symmetric PSD matrix by power iteration with deflation."""
    dim = cov.shape[0]
    a = cov.copy()
    scale = max(np.trace(cov), 1e-300)
    vals, vecs = np.zeros(k), np.zeros((k, dim))
    for i in range(k):
        # deterministic start that is not orthogonal to any axis
        x = np.linspace(1.0, 2.0, dim)
        x -= vecs[:i].T @ (vecs[:i] @ x)
        norm = np.linalg.norm(x)
        if norm == 0:
            break
        x /= norm
        lam = 0.0
        for _ in range(max_iter):
            y = a @ x
            y -= vecs[:i].T @ (vecs[:i] @ y)
            ny = np.linalg.norm(y)
            if ny <= 1e-12 * scale:
                lam = 0.0
                break
            y /= ny
            done = min(np.linalg.norm(y - x), np.linalg.norm(y + x)) < tol
            x = y
            lam = float(x @ a @ x)
            if done:
                break
        if lam <= 1e-12 * scale:
            break
        # sign convention: largest-magnitude loading positive
        if x[np.argmax(np.abs(x))] < 0:
            x = -x
        vals[i], vecs[i] = lam, x
        a = a - lam * np.outer(x, x)
    return vals, vecs


def pca_reduce(raw: np.ndarray, k: int = REDUCED_DIM, standardize: bool = True) -> StructuralEmbedding:
    """Project rows onto the top ``k`` principal components.

    Columns are centered and, by default, scaled to unit variance (constant
    columns stay zero). Components beyond the data rank are zero.
    """
    raw = np.asarray(raw, dtype=np.float64)
    if raw.shape[0] < 2:
        raise ValueError("PCA needs at least 2 rows")
    x = raw - raw.mean(axis=0)
    if standardize:
        sd = x.std(axis=0)
        x = np.divide(x, sd, out=np.zeros_like(x), where=sd > 1e-12)
    cov = x.T @ x / x.shape[0]
    vals, vecs = _top_eigenpairs(cov, k)
    return StructuralEmbedding(x @ vecs.T, vecs, vals, raw_dim=raw.shape[1], reduced_dim=k)


_CACHE: dict[tuple, StructuralEmbedding] = {}


def structural_embedding(g: Graph) -> StructuralEmbedding:
    """Cached per-graph embedding, computed once per instance."""
    key = (g.n, g.edges)
    emb = _CACHE.get(key)
    if emb is None:
        emb = pca_reduce(raw_structural_features(g)) if g.n >= 2 else StructuralEmbedding(
            np.zeros((g.n, REDUCED_DIM)), np.zeros((REDUCED_DIM, RAW_DIM)), np.zeros(REDUCED_DIM))
        if len(_CACHE) > 4096:
            _CACHE.clear()
        _CACHE[key] = emb
    return emb
