"""Core value types: card catalog, draft decisions, datasets.

All types here are immutable after construction and safe to share across
threads. Serialization lives in :mod:`draftrank.ingest`.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

MAX_POOL = 45          # a finished draft pool
MAX_DECISION_POOL = 44  # pool size at the moment of the last real decision
MAX_PACK = 15
MIN_PACK = 2           # single-card packs carry no choice


class DomainError(ValueError):
    """Base class for decision/catalog validation failures."""


class DuplicateInPack(DomainError):
    pass


class PickedOutOfRange(DomainError):
    pass


class UnknownCard(DomainError):
    pass


class PackTooSmall(DomainError):
    pass


class PoolTooLarge(DomainError):
    pass


class EmptyDataset(DomainError):
    pass


@dataclass(frozen=True)
class CardCatalog:
    """Card-id to feature-vector table.

    Row ``i`` of ``features`` is the representation of card id ``i``.
    """

    features: np.ndarray  # [M, F] float64
    names: tuple[str, ...]

    def __post_init__(self):
        feats = np.ascontiguousarray(self.features, dtype=np.float64)
        object.__setattr__(self, "features", feats)
        object.__setattr__(self, "names", tuple(self.names))
        if feats.ndim != 2:
            raise DomainError("features must be a 2-D matrix")
        if feats.shape[0] < 2 or feats.shape[1] < 1:
            raise DomainError(f"catalog needs M >= 2 and F >= 1, got {feats.shape}")
        if feats.shape[0] != len(self.names):
            raise DomainError("one name per feature row required")
        if not np.isfinite(feats).all():
            raise DomainError("catalog features must be finite")
        feats.setflags(write=False)

    @property
    def size(self) -> int:
        return self.features.shape[0]

    @property
    def feature_dim(self) -> int:
        return self.features.shape[1]

    def id_of(self, name: str) -> int:
        try:
            return self._name_index[name]
        except AttributeError:
            object.__setattr__(self, "_name_index", {n: i for i, n in enumerate(self.names)})
            return self.id_of(name)

    def __contains__(self, card_id: int) -> bool:
        return 0 <= card_id < self.size


@dataclass(frozen=True)
class Decision:
    """One human pick: the pool held so far, the offered pack, the choice.

    ``pool`` is pick-ordered and may be empty; ``picked`` indexes into
    ``pack``. Contradictory decisions (same pool and pack, different pick)
    are legitimate data and are never deduplicated.
    """

    pool: tuple[int, ...]
    pack: tuple[int, ...]
    picked: int

    def __post_init__(self):
        object.__setattr__(self, "pool", tuple(int(c) for c in self.pool))
        object.__setattr__(self, "pack", tuple(int(c) for c in self.pack))

    @property
    def picked_card(self) -> int:
        return self.pack[self.picked]

    def unchosen(self) -> tuple[int, ...]:
        return tuple(c for i, c in enumerate(self.pack) if i != self.picked)


def validate_decision(decision: Decision, catalog: CardCatalog) -> None:
    """Raise a :class:`DomainError` subclass unless all invariants hold."""
    if len(decision.pack) < MIN_PACK:
        raise PackTooSmall(f"pack of {len(decision.pack)} cards is not a decision")
    if len(decision.pack) > MAX_PACK:
        raise DomainError(f"pack of {len(decision.pack)} exceeds {MAX_PACK}")
    if len(set(decision.pack)) != len(decision.pack):
        raise DuplicateInPack(f"pack {decision.pack} has repeated cards")
    if not 0 <= decision.picked < len(decision.pack):
        raise PickedOutOfRange(f"picked index {decision.picked} for pack of {len(decision.pack)}")
    if len(decision.pool) > MAX_DECISION_POOL:
        raise PoolTooLarge(f"pool of {len(decision.pool)} at decision time (max {MAX_DECISION_POOL})")
    for card in decision.pack + decision.pool:
        if card not in catalog:
            raise UnknownCard(f"card id {card} not in catalog of {catalog.size}")


def pool_matrix(pool: tuple[int, ...] | list[int], catalog: CardCatalog) -> np.ndarray:
    """Zero-padded [45, F] matrix whose first rows are the pool's feature rows."""
    if len(pool) > MAX_POOL:
        raise PoolTooLarge(f"pool of {len(pool)} exceeds {MAX_POOL}")
    out = np.zeros((MAX_POOL, catalog.feature_dim), dtype=np.float64)
    for k, card in enumerate(pool):
        if card not in catalog:
            raise UnknownCard(f"card id {card} not in catalog of {catalog.size}")
        out[k] = catalog.features[card]
    return out


@dataclass(frozen=True)
class PickRecord:
    """A decision tagged with its source drafter sequence and pick number."""

    draft_id: str
    pick_number: int
    decision: Decision


TRAIN, TEST = "train", "test"


@dataclass(frozen=True)
class Dataset:
    """Decisions plus catalog plus a per-decision train/test assignment."""

    records: tuple[PickRecord, ...]
    catalog: CardCatalog
    split: tuple[str, ...] = field(default=())  # TRAIN/TEST per record

    def __post_init__(self):
        object.__setattr__(self, "records", tuple(self.records))
        object.__setattr__(self, "split", tuple(self.split))
        if self.split and len(self.split) != len(self.records):
            raise DomainError("split must assign every record")

    def __len__(self) -> int:
        return len(self.records)

    @property
    def decisions(self) -> list[Decision]:
        return [r.decision for r in self.records]

    def partition(self, side: str) -> list[Decision]:
        return [r.decision for r, s in zip(self.records, self.split) if s == side]

    @property
    def train(self) -> list[Decision]:
        return self.partition(TRAIN)

    @property
    def test(self) -> list[Decision]:
        return self.partition(TEST)


def chance_baseline(dataset: Dataset | list[Decision]) -> float:
    """Uniform-guess top-1 accuracy: the mean of 1/|pack| over decisions."""
    decisions = dataset.decisions if isinstance(dataset, Dataset) else list(dataset)
    if not decisions:
        raise EmptyDataset("no decisions")
    return float(np.mean([1.0 / len(d.pack) for d in decisions]))
