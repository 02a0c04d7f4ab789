"""Dataset ingestion: feature files, draft logs, splits, synthetic data.

File formats (all UTF-8 CSV, ``\\n`` line endings):

* feature file — header ``name,f0,f1,...``, one card per row;
* draft log — header ``draft_id,pick_number,pack,pool,picked`` where ``pack``
  and ``pool`` are ``;``-separated card names (an omitted pool after pick 1
  is reconstructed from the draft's earlier picks);
* dataset directory — ``catalog.csv``, ``decisions.csv`` (draft-log schema),
  ``split.csv`` (``draft_id,partition``).

Floats are written with ``repr`` so the round trip is bit-exact.
"""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .domain import (
    TEST,
    TRAIN,
    CardCatalog,
    Dataset,
    Decision,
    PickRecord,
    UnknownCard,
    validate_decision,
)
from .draft_sim import PlantedScorer, SoftmaxPolicy, run_draft

logger = logging.getLogger(__name__)


class IngestError(ValueError):
    pass


class Malformed(IngestError):
    pass


class DuplicateName(IngestError):
    pass


class NonFiniteValue(IngestError):
    pass


class PickNotInPack(IngestError):
    pass


class MalformedRecord(IngestError):
    pass


class EmptyInput(IngestError):
    pass


class TooFewDrafts(IngestError):
    pass


class InvalidSpec(IngestError):
    pass


def _reader(path):
    return csv.reader(open(path, newline="", encoding="utf-8"))


def _writer(fh):
    return csv.writer(fh, lineterminator="\n")


def parse_feature_file(path) -> CardCatalog:
    rows = _reader(path)
    try:
        header = next(rows)
    except StopIteration:
        raise Malformed(f"{path}: empty file") from None
    if len(header) < 2 or header[0] != "name":
        raise Malformed(f"{path}:1: header must be name,f0,f1,...")
    width = len(header) - 1
    names: list[str] = []
    feats: list[list[float]] = []
    seen: set[str] = set()
    for lineno, row in enumerate(rows, start=2):
        if len(row) != width + 1:
            raise Malformed(f"{path}:{lineno}: expected {width + 1} columns, got {len(row)}")
        name = row[0]
        if ";" in name:
            raise Malformed(f"{path}:{lineno}: card names may not contain ';'")
        if name in seen:
            raise DuplicateName(f"{path}:{lineno}: duplicate card {name!r}")
        seen.add(name)
        values = []
        for col, cell in enumerate(row[1:], start=2):
            try:
                v = float(cell)
            except ValueError:
                raise Malformed(f"{path}:{lineno}:{col}: not a number: {cell!r}") from None
            if not np.isfinite(v):
                raise NonFiniteValue(f"{path}:{lineno}:{col}: non-finite value {cell!r}")
            values.append(v)
        names.append(name)
        feats.append(values)
    return CardCatalog(features=np.array(feats), names=tuple(names))


def write_feature_file(path, catalog: CardCatalog) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = _writer(fh)
        w.writerow(["name"] + [f"f{i}" for i in range(catalog.feature_dim)])
        for name, row in zip(catalog.names, catalog.features):
            w.writerow([name] + [repr(float(v)) for v in row])


@dataclass
class IngestStats:
    records: int = 0
    dropped_single_card: int = 0


def _split_names(cell: str) -> list[str]:
    return cell.split(";") if cell else []


def parse_draft_log(path, catalog: CardCatalog) -> tuple[list[PickRecord], IngestStats]:
    """One PickRecord per loggable decision; single-card offerings are counted
    and dropped (the game adds those cards without a choice)."""
    rows = _reader(path)
    header = next(rows, None)
    if header != ["draft_id", "pick_number", "pack", "pool", "picked"]:
        raise Malformed(f"{path}: bad or missing draft-log header")
    records: list[PickRecord] = []
    stats = IngestStats()
    last_pick: dict[str, int] = {}
    history: dict[str, list[int]] = {}
    for lineno, row in enumerate(rows, start=2):
        if len(row) != 5:
            raise MalformedRecord(f"{path}:{lineno}: expected 5 columns")
        draft_id, pick_s, pack_s, pool_s, picked = row
        try:
            pick_number = int(pick_s)
        except ValueError:
            raise MalformedRecord(f"{path}:{lineno}: bad pick number {pick_s!r}") from None
        if pick_number <= last_pick.get(draft_id, 0):
            raise MalformedRecord(
                f"{path}:{lineno}: pick {pick_number} not increasing within {draft_id!r}")
        last_pick[draft_id] = pick_number

        def to_id(name, lineno=lineno):
            try:
                return catalog.id_of(name)
            except KeyError:
                raise UnknownCard(f"{path}:{lineno}: unknown card {name!r}") from None

        pack = [to_id(n) for n in _split_names(pack_s)]
        if pool_s == "" and pick_number > 1:
            pool = list(history.get(draft_id, []))
        else:
            pool = [to_id(n) for n in _split_names(pool_s)]
        stats.records += 1
        if len(pack) == 1:
            stats.dropped_single_card += 1
            history.setdefault(draft_id, []).append(pack[0])
            continue
        if picked not in _split_names(pack_s):
            raise PickNotInPack(f"{path}:{lineno}: picked {picked!r} not offered")
        decision = Decision(pool=tuple(pool), pack=tuple(pack), picked=pack.index(to_id(picked)))
        validate_decision(decision, catalog)
        history.setdefault(draft_id, []).append(decision.picked_card)
        records.append(PickRecord(draft_id=draft_id, pick_number=pick_number, decision=decision))
    if stats.dropped_single_card:
        logger.warning("%s: dropped %d single-card records", path, stats.dropped_single_card)
    return records, stats


def write_draft_log(path, records: list[PickRecord], catalog: CardCatalog) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = _writer(fh)
        w.writerow(["draft_id", "pick_number", "pack", "pool", "picked"])
        for r in records:
            d = r.decision
            w.writerow([
                r.draft_id,
                r.pick_number,
                ";".join(catalog.names[c] for c in d.pack),
                ";".join(catalog.names[c] for c in d.pool),
                catalog.names[d.picked_card],
            ])


def split_dataset(records: list[PickRecord], catalog: CardCatalog, ratio: float,
                  seed: int) -> Dataset:
    """Partition whole drafts (never individual decisions) into train/test."""
    if not records:
        raise EmptyInput("no decisions to split")
    if not 0.0 < ratio < 1.0:
        raise IngestError(f"ratio {ratio} outside (0, 1)")
    draft_ids = list(dict.fromkeys(r.draft_id for r in records))
    if len(draft_ids) < 2:
        raise TooFewDrafts("need at least 2 drafts to build both partitions")
    order = np.random.default_rng([seed, 0x5B1D]).permutation(len(draft_ids))
    n_train = min(max(int(round(ratio * len(draft_ids))), 1), len(draft_ids) - 1)
    train_ids = {draft_ids[i] for i in order[:n_train]}
    split = tuple(TRAIN if r.draft_id in train_ids else TEST for r in records)
    return Dataset(records=tuple(records), catalog=catalog, split=split)


@dataclass(frozen=True)
class SyntheticSpec:
    cards: int = 200
    features: int = 32
    players: int = 8
    drafts: int = 50
    latent_rank: int = 4
    noise: float = 0.04  # planted-oracle top-1 lands near 0.85 at this level
    seed: int = 0

    def __post_init__(self):
        if min(self.cards, self.features, self.players, self.drafts, self.latent_rank) < 1:
            raise InvalidSpec("all sizes must be positive")
        if self.noise < 0:
            raise InvalidSpec("noise must be >= 0")


def synthetic_oracle(spec: SyntheticSpec) -> PlantedScorer:
    """The ground-truth scorer behind a synthetic dataset, reconstructible
    from the spec alone."""
    rng = np.random.default_rng([spec.seed, 0x7A81])
    latents = rng.normal(size=(spec.cards, spec.latent_rank))
    latents /= np.linalg.norm(latents, axis=1, keepdims=True)
    empty = rng.normal(size=spec.latent_rank)
    empty /= np.linalg.norm(empty)
    return PlantedScorer(latents=latents, empty_context=empty)


def synthetic_catalog(spec: SyntheticSpec) -> CardCatalog:
    """Observable features: a fixed random projection of the card latents."""
    oracle = synthetic_oracle(spec)
    rng = np.random.default_rng([spec.seed, 0x7A82])
    proj = rng.normal(size=(spec.latent_rank, spec.features)) / np.sqrt(spec.latent_rank)
    return CardCatalog(features=oracle.latents @ proj,
                       names=tuple(f"card_{i:04d}" for i in range(spec.cards)))


def generate_synthetic(spec: SyntheticSpec) -> tuple[CardCatalog, list[PickRecord]]:
    """Simulate drafts where every seat picks softmax-noisily by the planted
    utility. Latents are unit vectors, so the planted ranking is exactly a
    cosine ranking and a well-trained embedding model can represent it."""
    catalog = synthetic_catalog(spec)
    oracle = synthetic_oracle(spec)
    records: list[PickRecord] = []
    for d in range(spec.drafts):
        policies = [SoftmaxPolicy(oracle, spec.noise, seed=[spec.seed, 0x7A83, d, seat])
                    for seat in range(spec.players)]
        result = run_draft(catalog, policies, seed=[spec.seed, 0x7A84, d],
                           draft_id=f"d{d:04d}")
        records.extend(result.records)
    return catalog, records


# ---- dataset directory ---------------------------------------------------


def save_dataset(dataset: Dataset, directory) -> None:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    write_feature_file(directory / "catalog.csv", dataset.catalog)
    write_draft_log(directory / "decisions.csv", list(dataset.records), dataset.catalog)
    by_draft = dict.fromkeys(r.draft_id for r in dataset.records)
    for r, side in zip(dataset.records, dataset.split):
        by_draft[r.draft_id] = side
    with open(directory / "split.csv", "w", newline="", encoding="utf-8") as fh:
        w = _writer(fh)
        w.writerow(["draft_id", "partition"])
        for draft_id, side in by_draft.items():
            w.writerow([draft_id, side])


def load_dataset(directory) -> Dataset:
    directory = Path(directory)
    catalog = parse_feature_file(directory / "catalog.csv")
    records, _ = parse_draft_log(directory / "decisions.csv", catalog)
    sides: dict[str, str] = {}
    rows = _reader(directory / "split.csv")
    header = next(rows, None)
    if header != ["draft_id", "partition"]:
        raise Malformed(f"{directory}/split.csv: bad header")
    for row in rows:
        if len(row) != 2 or row[1] not in (TRAIN, TEST):
            raise Malformed(f"{directory}/split.csv: bad row {row!r}")
        sides[row[0]] = row[1]
    try:
        split = tuple(sides[r.draft_id] for r in records)
    except KeyError as e:
        raise Malformed(f"{directory}/split.csv: no partition for draft {e}") from None
    return Dataset(records=tuple(records), catalog=catalog, split=split)
