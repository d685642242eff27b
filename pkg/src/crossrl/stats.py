"""Summary statistics, pairwise win tables and Wilcoxon signed-rank tests with Holm correction."""

from __future__ import annotations

import itertools
import math
import warnings
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

EXACT_MAX_N = 25


@dataclass(frozen=True)
class RunRecord:
    graph_id: str
    algo: str
    status: str
    gcn: int | None = None
    lcn: int | None = None
    runtime_s: float = 0.0
    seed: int = 0

    def __post_init__(self) -> None:
        if self.status not in ("ok", "timeout", "failure"):
            raise ValueError(f"bad status {self.status!r}")
        if self.status != "ok" and (self.gcn is not None or self.lcn is not None):
            raise ValueError("only ok records carry metrics")
        if self.status == "ok" and (self.gcn is None or self.lcn is None):
            raise ValueError("ok records need gcn and lcn")

    def metric(self, name: str) -> int | None:
        return getattr(self, name)


def _by_algo(records: Iterable[RunRecord]) -> dict[str, dict[str, RunRecord]]:
    out: dict[str, dict[str, RunRecord]] = {}
    for r in records:
        out.setdefault(r.algo, {})[r.graph_id] = r
    return out


def five_number(values: Sequence[float]) -> dict:
    v = np.asarray(values, dtype=np.float64)
    q1, med, q3 = np.percentile(v, [25, 50, 75])
    return {"min": float(v.min()), "q1": float(q1), "median": float(med), "mean": float(v.mean()),
            "q3": float(q3), "max": float(v.max()), "count": int(len(v))}


def summarize(records: Iterable[RunRecord], metric: str, graphs: set[str] | None = None) -> dict[str, dict]:
    """Per-algorithm box-plot summary over ok records, optionally restricted to ``graphs``."""
    out = {}
    for algo, recs in sorted(_by_algo(records).items()):
        vals = [r.metric(metric) for g, r in sorted(recs.items())
                if r.status == "ok" and (graphs is None or g in graphs)]
        if not vals:
            warnings.warn(f"{algo}: no ok records, omitted from summary", stacklevel=2)
            continue
        out[algo] = five_number(vals)
    return out


def commonly_solved(records: Iterable[RunRecord]) -> set[str]:
    """Graphs on which every algorithm finished."""
    by = _by_algo(records)
    sets = [{g for g, r in recs.items() if r.status == "ok"} for recs in by.values()]
    return set.intersection(*sets) if sets else set()


@dataclass(frozen=True)
class WinCell:
    win: float
    loss: float
    tie: float
    n: int


def compare_pair(a: dict[str, RunRecord], b: dict[str, RunRecord], metric: str) -> WinCell:
    """Win/loss/tie percentages of A against B over the union of their graphs.

    Lower metric wins. A finished run beats an unfinished one; two
    unfinished runs tie.
    """
    graphs = sorted(set(a) | set(b))
    if not graphs:
        raise ValueError("no graphs to compare")
    win = loss = tie = 0
    for g in graphs:
        ra, rb = a.get(g), b.get(g)
        ok_a = ra is not None and ra.status == "ok"
        ok_b = rb is not None and rb.status == "ok"
        if ok_a and ok_b:
            x, y = ra.metric(metric), rb.metric(metric)
            win += x < y
            loss += x > y
            tie += x == y
        elif ok_a:
            win += 1
        elif ok_b:
            loss += 1
        else:
            tie += 1
    n = len(graphs)
    return WinCell(100.0 * win / n, 100.0 * loss / n, 100.0 * tie / n, n)


def pairwise_wins(records: Iterable[RunRecord], metric: str) -> dict[tuple[str, str], WinCell]:
    by = _by_algo(records)
    algos = sorted(by)
    return {(x, y): compare_pair(by[x], by[y], metric) for x in algos for y in algos if x != y}


# -- Wilcoxon signed-rank ---------------------------------------------------


def _ranks(a: np.ndarray) -> np.ndarray:
    """Average ranks (1-based) with ties sharing the mean rank."""
    order = np.argsort(a, kind="mergesort")
    ranks = np.empty(len(a))
    sa = a[order]
    i = 0
    while i < len(a):
        j = i
        while j + 1 < len(a) and sa[j + 1] == sa[i]:
            j += 1
        ranks[order[i:j + 1]] = (i + j) / 2.0 + 1.0
        i = j + 1
    return ranks


def _exact_counts(doubled: Sequence[int]) -> np.ndarray:
    """Number of sign assignments giving each value of the doubled positive rank sum."""
    total = int(sum(doubled))
    counts = np.zeros(total + 1, dtype=object)
    counts[0] = 1
    for r in doubled:
        counts[r:] = counts[r:] + counts[:total + 1 - r].copy()
    return counts


@dataclass(frozen=True)
class WilcoxonResult:
    statistic: float  # sum of ranks of positive differences
    p_value: float
    n: int
    method: str  # "exact", "normal" or "empty"


def wilcoxon(x: Sequence[float], y: Sequence[float] | None = None, *,
             method: str = "auto", alternative: str = "two-sided") -> WilcoxonResult:
    """Paired Wilcoxon signed-rank test; zero differences are dropped."""
    d = np.asarray(x, dtype=np.float64)
    if y is not None:
        d = d - np.asarray(y, dtype=np.float64)
    d = d[d != 0]
    n = len(d)
    if n == 0:
        return WilcoxonResult(0.0, 1.0, 0, "empty")
    r = _ranks(np.abs(d))
    w = float(r[d > 0].sum())
    if method == "auto":
        method = "exact" if n <= EXACT_MAX_N else "normal"
    if method == "exact":
        doubled = np.rint(2 * r).astype(int)
        counts = _exact_counts(doubled)
        w2 = int(round(2 * w))
        total = 2 ** n
        le = float(sum(counts[: w2 + 1])) / total
        ge = float(sum(counts[w2:])) / total
    elif method == "normal":
        mean = n * (n + 1) / 4.0
        _, t = np.unique(np.abs(d), return_counts=True)
        var = n * (n + 1) * (2 * n + 1) / 24.0 - (t ** 3 - t).sum() / 48.0
        sd = math.sqrt(var)
        le = 0.5 * math.erfc(-((w - mean + 0.5) / sd) / math.sqrt(2))
        ge = 0.5 * math.erfc(((w - mean - 0.5) / sd) / math.sqrt(2))
    else:
        raise ValueError(f"unknown method {method!r}")
    if alternative == "two-sided":
        p = min(1.0, 2.0 * min(le, ge))
    elif alternative == "greater":
        p = ge
    elif alternative == "less":
        p = le
    else:
        raise ValueError(f"unknown alternative {alternative!r}")
    return WilcoxonResult(w, p, n, method)


def holm(pvalues: Sequence[float]) -> np.ndarray:
    """Holm step-down adjusted p-values, in the input order."""
    p = np.asarray(pvalues, dtype=np.float64)
    k = len(p)
    order = np.argsort(p, kind="mergesort")
    adj = np.empty(k)
    running = 0.0
    for i, j in enumerate(order):
        running = max(running, min(1.0, (k - i) * p[j]))
        adj[j] = running
    return adj


def wilcoxon_holm(records: Iterable[RunRecord], metric: str,
                  pairs: Sequence[tuple[str, str]] | None = None) -> dict[tuple[str, str], dict]:
    """Holm-adjusted two-sided Wilcoxon p-values for each algorithm pair.

    Samples are paired over the graphs both algorithms solved.
    """
    by = _by_algo(records)
    if pairs is None:
        pairs = list(itertools.combinations(sorted(by), 2))
    raw = []
    for a, b in pairs:
        common = sorted(g for g in set(by[a]) & set(by[b]) if by[a][g].status == "ok" and by[b][g].status == "ok")
        xs = [by[a][g].metric(metric) for g in common]
        ys = [by[b][g].metric(metric) for g in common]
        raw.append(wilcoxon(xs, ys))
    adj = holm([r.p_value for r in raw]) if raw else []
    return {pair: {"p_raw": r.p_value, "p_holm": float(q), "n": r.n, "statistic": r.statistic,
                   "method": r.method, "flag": "no_nonzero_differences" if r.n == 0 else ""}
            for pair, r, q in zip(pairs, raw, adj)}
