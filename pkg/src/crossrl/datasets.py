"""Benchmark dataset construction: generation, filtering, splits and manifests."""

from __future__ import annotations

import json
import random
from dataclasses import dataclass
from pathlib import Path
from typing import Iterator

from .embedding import structural_embedding
from .graph import (BAParams, Graph, Rejected, generate_extended_ba, generate_rome_like, load_edgelist,
                    load_graphml, preprocess, save_edgelist, split_dataset)

ROME_N = (10, 100)
ROME_M = (9, 158)
BA_N = (50, 150)
BA_M = (19, 666)


def in_envelope(g: Graph, n_range: tuple[int, int], m_range: tuple[int, int]) -> bool:
    return n_range[0] <= g.n <= n_range[1] and m_range[0] <= g.m <= m_range[1]


def random_ba_params(rng: random.Random, seed: int) -> BAParams:
    return BAParams(n=rng.randint(*BA_N), m_attach=rng.choice((1, 2, 3)),
                    p=rng.uniform(0.0, 0.1), q=rng.uniform(0.0, 0.2), seed=seed)


def iter_ba_graphs(seed: int) -> Iterator[Graph]:
    """Endless stream of raw extended-BA graphs with randomized parameters."""
    rng = random.Random(seed)
    i = 0
    while True:
        yield generate_extended_ba(random_ba_params(rng, seed * 1_000_003 + i))
        i += 1


def iter_rome_like_graphs(seed: int) -> Iterator[Graph]:
    rng = random.Random(seed)
    i = 0
    while True:
        yield generate_rome_like(rng.randint(*ROME_N), seed * 1_000_003 + i)
        i += 1


def filtered(stream: Iterator[Graph], count: int, n_range, m_range, budget: int = 3,
             max_tries: int = 100_000) -> list[Graph]:
    """Preprocess graphs from ``stream`` until ``count`` survive inside the envelope."""
    out = []
    for tries, g in enumerate(stream):
        if len(out) >= count:
            break
        if tries >= max_tries:
            raise RuntimeError(f"only {len(out)} of {count} graphs survived filtering")
        try:
            core = preprocess(g, budget, seed=tries)
        except Rejected:
            continue
        if in_envelope(core, n_range, m_range):
            out.append(Graph(core.n, core.edges, g.name))
    return out


def rome_like_set(count: int, seed: int) -> list[Graph]:
    return filtered(iter_rome_like_graphs(seed), count, ROME_N, ROME_M)


def ba_set(count: int, seed: int) -> list[Graph]:
    return filtered(iter_ba_graphs(seed), count, (1, BA_N[1]), BA_M)


@dataclass(frozen=True)
class ManifestEntry:
    path: str
    split: str
    cls: str

    def to_dict(self) -> dict:
        return {"path": self.path, "split": self.split, "class": self.cls}


def write_manifest(entries: list[ManifestEntry], path: str | Path, extra: dict | None = None) -> None:
    doc = {"graphs": [e.to_dict() for e in entries], **(extra or {})}
    Path(path).write_text(json.dumps(doc, indent=2), encoding="utf-8")


def read_manifest(path: str | Path) -> list[ManifestEntry]:
    path = Path(path)
    doc = json.loads(path.read_text(encoding="utf-8"))
    rows = doc["graphs"] if isinstance(doc, dict) else doc
    out = []
    for r in rows:
        p = Path(r["path"])
        if not p.is_absolute():
            p = path.parent / p
        out.append(ManifestEntry(str(p), r["split"], r["class"]))
    return out


def load_graph(path: str | Path) -> Graph:
    path = Path(path)
    if path.suffix.lower() in (".graphml", ".xml"):
        return load_graphml(path)
    return load_edgelist(path)


def load_split(manifest: str | Path, split: str, cls: str | None = None) -> list[Graph]:
    return [load_graph(e.path) for e in read_manifest(manifest)
            if e.split == split and (cls is None or e.cls == cls)]


def prepare(out_dir: str | Path, sources: list[Graph], cls: str, seed: int, *, test_fraction: float = 0.2,
            n_train: int | None = None, n_test: int | None = None, budget: int = 3) -> dict:
    """Preprocess ``sources``, split them and write edge lists, embeddings and a manifest.

    Returns a summary with counts of kept and rejected graphs by reason.
    """
    out_dir = Path(out_dir)
    (out_dir / "graphs").mkdir(parents=True, exist_ok=True)
    (out_dir / "embeddings").mkdir(exist_ok=True)
    kept: dict[str, Graph] = {}
    rejected: dict[str, int] = {}
    for i, g in enumerate(sources):
        try:
            core = preprocess(g, budget, seed=seed + i)
        except Rejected as r:
            rejected[r.reason] = rejected.get(r.reason, 0) + 1
            continue
        gid = g.name or f"{cls}_{i}"
        if gid in kept:
            gid = f"{gid}_{i}"
        kept[gid] = Graph(core.n, core.edges, gid)
    if not kept:
        raise ValueError("no graph survived filtering")
    split = split_dataset(sorted(kept), seed, test_fraction=test_fraction, n_train=n_train, n_test=n_test)
    entries = []
    for name, ids in (("train", split.train), ("test", split.test)):
        for gid in ids:
            rel = Path("graphs") / f"{gid}.edges"
            save_edgelist(kept[gid], out_dir / rel)
            structural_embedding(kept[gid]).save(out_dir / "embeddings" / f"{gid}.json")
            entries.append(ManifestEntry(str(rel), name, cls))
    summary = {"kept": len(kept), "rejected": rejected, "train": len(split.train), "test": len(split.test),
               "seed": seed, "split_rule": "test = floor(test_fraction * kept), train = rest"
               if n_train is None and n_test is None else "absolute sizes"}
    write_manifest(entries, out_dir / "manifest.json", {"summary": summary})
    return summary
