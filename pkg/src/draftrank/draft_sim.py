"""Pick-and-pass draft state machine.

Eight (configurable 2-8) seats each open a 15-card pack, everyone picks one
card simultaneously, and the shrunk packs rotate to a neighbour. Three rounds
of 15; pass direction alternates left, right, left. The last card of each
pack is added automatically — no decision is recorded for it — so a full
draft yields 42 decisions and a 45-card pool per seat.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .domain import CardCatalog, Decision, PickRecord

ROUNDS = 3
PACK_SIZE = 15
MIN_SEATS = 2
MAX_SEATS = 8
DECISIONS_PER_SEAT = ROUNDS * (PACK_SIZE - 1)


class DraftError(ValueError):
    pass


class CatalogTooSmall(DraftError):
    pass


class IllegalPick(DraftError):
    pass


class Finished(DraftError):
    pass


@dataclass
class Pack:
    origin: int  # index into DraftState.dealt, for conservation checks
    cards: list[int]


@dataclass
class DraftState:
    catalog: CardCatalog
    players: int
    seed: int | list[int]
    round: int = 0
    pick_in_round: int = 0
    finished: bool = False
    pools: list[list[int]] = field(default_factory=list)
    packs: list[Pack] = field(default_factory=list)       # index = seat
    dealt: list[list[int]] = field(default_factory=list)  # original pack contents
    decisions: list[list[Decision]] = field(default_factory=list)  # per seat
    _rng: np.random.Generator = None

    @property
    def pass_direction(self) -> str:
        return "left" if self.round % 2 == 1 else "right"


def new_draft(catalog: CardCatalog, players: int, seed: int | list[int]) -> DraftState:
    if not MIN_SEATS <= players <= MAX_SEATS:
        raise DraftError(f"seat count {players} outside {MIN_SEATS}..{MAX_SEATS}")
    if catalog.size < PACK_SIZE:
        raise CatalogTooSmall(f"{catalog.size} cards cannot fill a {PACK_SIZE}-card pack")
    entropy = [seed] if isinstance(seed, int) else list(seed)
    state = DraftState(catalog=catalog, players=players, seed=seed,
                       pools=[[] for _ in range(players)],
                       decisions=[[] for _ in range(players)],
                       _rng=np.random.default_rng(entropy + [0xD4AF]))
    _open_round(state)
    return state


def _open_round(state: DraftState) -> None:
    state.round += 1
    state.pick_in_round = 1
    state.packs = []
    for _ in range(state.players):
        cards = sorted(state._rng.choice(state.catalog.size, PACK_SIZE, replace=False).tolist())
        state.dealt.append(list(cards))
        state.packs.append(Pack(origin=len(state.dealt) - 1, cards=cards))


def legal_picks(state: DraftState, seat: int) -> list[int]:
    if state.finished:
        raise Finished("draft is over")
    return list(state.packs[seat].cards)


def apply_picks(state: DraftState, picks: list[int]) -> DraftState:
    """One simultaneous pick per seat, then rotate packs.

    When the rotation leaves single-card packs, those cards are added to the
    receiving pools automatically and the next round (or the end) begins.
    """
    if state.finished:
        raise Finished("draft is over")
    if len(picks) != state.players:
        raise DraftError(f"{len(picks)} picks for {state.players} seats")
    for seat, card in enumerate(picks):
        pack = state.packs[seat]
        if card not in pack.cards:
            raise IllegalPick(f"seat {seat}: card {card} not in pack {pack.cards}")
    for seat, card in enumerate(picks):
        pack = state.packs[seat]
        state.decisions[seat].append(Decision(pool=tuple(state.pools[seat]),
                                              pack=tuple(pack.cards),
                                              picked=pack.cards.index(card)))
        pack.cards.remove(card)
        state.pools[seat].append(card)
    _rotate(state)
    if len(state.packs[0].cards) == 1:
        for seat in range(state.players):
            state.pools[seat].append(state.packs[seat].cards.pop())
        if state.round == ROUNDS:
            state.finished = True
            state.packs = []
        else:
            _open_round(state)
    else:
        state.pick_in_round += 1
    return state


def _rotate(state: DraftState) -> None:
    if state.pass_direction == "left":
        state.packs = state.packs[-1:] + state.packs[:-1]
    else:
        state.packs = state.packs[1:] + state.packs[:1]


# ---- pick policies ------------------------------------------------------


class RandomPolicy:
    """Uniform pick; deterministic for a given seed."""

    def __init__(self, seed: int | list[int]):
        entropy = [seed] if isinstance(seed, int) else list(seed)
        self._rng = np.random.default_rng(entropy + [0x9A3D])

    def choose(self, pool, pack) -> int:
        return int(pack[self._rng.integers(len(pack))])


class GreedyScorerPolicy:
    """Always takes the scorer's top card; ties go to the lowest card id."""

    def __init__(self, scorer):
        self.scorer = scorer

    def choose(self, pool, pack) -> int:
        scores = np.asarray(self.scorer.score_pack(pool, pack))
        best = scores.max()
        return min(c for c, s in zip(pack, scores) if s == best)


class PlantedScorer:
    """Ground-truth utility over latent card vectors: a card's score is its
    latent dotted with the mean latent of the pool (a fixed context vector
    when the pool is empty)."""

    def __init__(self, latents: np.ndarray, empty_context: np.ndarray):
        self.latents = latents
        self.empty_context = empty_context

    def context(self, pool) -> np.ndarray:
        if len(pool) == 0:
            return self.empty_context
        return self.latents[list(pool)].mean(axis=0)

    def score_pack(self, pool, pack) -> np.ndarray:
        return self.latents[list(pack)] @ self.context(pool)


class SoftmaxPolicy:
    """Samples proportionally to exp(score / noise); noise 0 is greedy."""

    def __init__(self, scorer, noise: float, seed: int | list[int]):
        if noise < 0:
            raise DraftError("noise must be >= 0")
        self.scorer = scorer
        self.noise = noise
        entropy = [seed] if isinstance(seed, int) else list(seed)
        self._rng = np.random.default_rng(entropy + [0x50F7])

    def choose(self, pool, pack) -> int:
        scores = np.asarray(self.scorer.score_pack(pool, pack))
        if self.noise == 0.0:
            best = scores.max()
            return min(c for c, s in zip(pack, scores) if s == best)
        z = scores / self.noise
        p = np.exp(z - z.max())
        p /= p.sum()
        return int(pack[self._rng.choice(len(pack), p=p)])


class ScriptedPolicy:
    """Plays back a fixed pick sequence (transcript replay, human stand-in)."""

    def __init__(self, picks: list[int]):
        self._picks = iter(picks)

    def choose(self, pool, pack) -> int:
        return next(self._picks)


@dataclass
class DraftResult:
    pools: list[list[int]]
    decisions: list[list[Decision]]
    records: list[PickRecord]
    state: DraftState


def run_draft(catalog: CardCatalog, policies: list, seed: int | list[int],
              draft_id: str = "d0") -> DraftResult:
    """Drive a draft to completion with one policy per seat."""
    state = new_draft(catalog, len(policies), seed)
    while not state.finished:
        picks = [policies[seat].choose(tuple(state.pools[seat]), legal_picks(state, seat))
                 for seat in range(state.players)]
        apply_picks(state, picks)
    records = [
        PickRecord(draft_id=f"{draft_id}_s{seat}", pick_number=k + 1, decision=d)
        for seat in range(state.players)
        for k, d in enumerate(state.decisions[seat])
    ]
    return DraftResult(pools=state.pools, decisions=state.decisions,
                       records=records, state=state)


def bot_agreement(scorer, decisions: list[Decision]) -> float:
    """How often the greedy pick matches the recorded pick."""
    if not decisions:
        raise DraftError("no decisions")
    policy = GreedyScorerPolicy(scorer)
    hits = sum(1 for d in decisions
               if policy.choose(d.pool, list(d.pack)) == d.picked_card)
    return hits / len(decisions)
