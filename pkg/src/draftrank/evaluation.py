"""Held-out evaluation: top-1 accuracy, picked-card ranks, breakdowns.

Works against any *scorer* — an object with ``score_pack(pool, pack)``
returning one real score per pack card. :class:`EmbeddingScorer` adapts a
frozen embedding model; the simulator's planted scorer plugs in directly.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .domain import CardCatalog, Decision, MAX_PACK
from .encoders import EmbeddingModel


class EmptyPack(ValueError):
    pass


class EmptyInput(ValueError):
    pass


class EmbeddingScorer:
    """Cosine scores between the encoded pool and each pack card's embedding.

    Card embeddings for the whole catalog are computed once at construction;
    the model must stay frozen while the scorer is in use.
    """

    def __init__(self, model: EmbeddingModel, catalog: CardCatalog):
        self.model = model
        self.catalog = catalog
        cards = model.embed_all_cards(catalog)
        if not model.config.normalize_output:
            cards = cards / np.maximum(np.linalg.norm(cards, axis=1, keepdims=True), 1e-30)
        self._cards = cards

    def _pool_unit(self, pools: list) -> np.ndarray:
        emb = self.model.pools_var(pools, self.catalog, self.model.store.as_vars()).value
        if not self.model.config.normalize_output:
            emb = emb / np.maximum(np.linalg.norm(emb, axis=1, keepdims=True), 1e-30)
        return emb

    def score_pack(self, pool, pack) -> np.ndarray:
        return self._cards[list(pack)] @ self._pool_unit([list(pool)])[0]

    def score_decisions(self, decisions: list[Decision], batch: int = 1024) -> list[np.ndarray]:
        out = []
        for start in range(0, len(decisions), batch):
            chunk = decisions[start : start + batch]
            pools = self._pool_unit([list(d.pool) for d in chunk])
            for row, d in zip(pools, chunk):
                out.append(self._cards[list(d.pack)] @ row)
        return out


def _pack_scores(scorer, decisions: list[Decision]) -> list[np.ndarray]:
    if hasattr(scorer, "score_decisions"):
        return scorer.score_decisions(decisions)
    return [np.asarray(scorer.score_pack(d.pool, list(d.pack))) for d in decisions]


def predict_pick(scorer, pool, pack) -> tuple[int, np.ndarray]:
    """Highest-scored card in the pack; exact ties go to the lowest card id."""
    if len(pack) == 0:
        raise EmptyPack("nothing to rank")
    scores = np.asarray(scorer.score_pack(pool, list(pack)), dtype=np.float64)
    best = scores.max()
    return min(c for c, s in zip(pack, scores) if s == best), scores


def _rank_of_pick(scores: np.ndarray, picked_index: int) -> int:
    # competition ranking: ties share the best rank
    return 1 + int((scores > scores[picked_index]).sum())


@dataclass
class EvalReport:
    top1: float
    mean_rank: float
    n_decisions: int
    by_pack_size: dict[int, tuple[int, int]] = field(default_factory=dict)  # size -> (n, hits)

    def csv_row(self) -> tuple[list[str], list[str]]:
        """Header and value row: the results-file columns plus per-pack-size
        accuracy breakdown columns."""
        header = ["top1_accuracy", "mean_rank", "n_decisions"]
        values = [repr(self.top1), repr(self.mean_rank), str(self.n_decisions)]
        for size in sorted(self.by_pack_size):
            n, hits = self.by_pack_size[size]
            header.append(f"top1_pack_{size}")
            values.append(repr(hits / n))
        return header, values


def top1_accuracy(scorer, decisions: list[Decision]) -> EvalReport:
    if not decisions:
        raise EmptyInput("no decisions to evaluate")
    hits = 0
    rank_sum = 0
    by_size: dict[int, list[int]] = {}
    for d, scores in zip(decisions, _pack_scores(scorer, decisions)):
        best = scores.max()
        predicted = min(c for c, s in zip(d.pack, scores) if s == best)
        hit = predicted == d.picked_card
        hits += hit
        rank_sum += _rank_of_pick(scores, d.picked)
        size = by_size.setdefault(len(d.pack), [0, 0])
        size[0] += 1
        size[1] += hit
    return EvalReport(
        top1=hits / len(decisions),
        mean_rank=rank_sum / len(decisions),
        n_decisions=len(decisions),
        by_pack_size={k: (n, h) for k, (n, h) in sorted(by_size.items())},
    )


def rank_distribution(scorer, decisions: list[Decision]) -> np.ndarray:
    """Counts of the picked card's rank; index r-1 holds rank r."""
    if not decisions:
        raise EmptyInput("no decisions to evaluate")
    hist = np.zeros(MAX_PACK, dtype=np.int64)
    for d, scores in zip(decisions, _pack_scores(scorer, decisions)):
        hist[_rank_of_pick(scores, d.picked) - 1] += 1
    return hist
