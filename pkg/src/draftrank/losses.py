"""The six training objectives.

The centerpiece is the masked contextual InfoNCE: every batch decision
contributes one row of a pool-vs-vocabulary cosine matrix, and an integer
mask restricts the row softmax to the cards that were actually offered
(1 = chosen, 0 = offered but unchosen, -1 = not offered, excluded). Only the
row direction is trained; a card legitimately pairs with many pools, so a
column-wise term would be wrong for this data.

Baselines: CLIP-style symmetric InfoNCE over (pool, chosen card) pairs, a
pairwise sigmoid variant with learnable scale and bias, and the triplet loss
under three negative-mining strategies.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import log

import numpy as np

from .domain import CardCatalog, Decision
from .encoders import SEPARATE_OUTPUTS, SHARED_MAIN_BLOCK, EmbeddingModel
from .numerics import ParamStore
from .numerics import autograd as ag
from .numerics.autograd import Var
from .numerics.backend import masked_ce_bwd, masked_ce_fwd

STANDARD_INFONCE = "standard-infonce"
SIGMOID_INFONCE = "sigmoid-infonce"
CONTEXTUAL_INFONCE = "contextual-infonce"
TRIPLET_RANDOM = "triplet-random"
TRIPLET_HARD = "triplet-hard"
TRIPLET_ALL = "triplet-all"

METHODS = (STANDARD_INFONCE, SIGMOID_INFONCE, CONTEXTUAL_INFONCE,
           TRIPLET_RANDOM, TRIPLET_HARD, TRIPLET_ALL)

# wiring each method uses when no explicit choice is made
DEFAULT_WIRING = {
    STANDARD_INFONCE: SEPARATE_OUTPUTS,
    SIGMOID_INFONCE: SEPARATE_OUTPUTS,
    CONTEXTUAL_INFONCE: SEPARATE_OUTPUTS,
    TRIPLET_RANDOM: SHARED_MAIN_BLOCK,
    TRIPLET_HARD: SHARED_MAIN_BLOCK,
    TRIPLET_ALL: SHARED_MAIN_BLOCK,
}

SIGMOID_T_INIT = log(10.0)
SIGMOID_B_INIT = -10.0


class NoPositiveInRow(ValueError):
    pass


class EmptyValidSet(ValueError):
    pass


@dataclass(frozen=True)
class InfoNceConfig:
    temperature: float = 0.07
    sigmoid_t_init: float = SIGMOID_T_INIT  # learnable scale, trained from here
    sigmoid_b_init: float = SIGMOID_B_INIT  # learnable bias

    def __post_init__(self):
        if self.temperature <= 0:
            raise ValueError("temperature must be positive")


@dataclass(frozen=True)
class TripletConfig:
    margin: float = 0.2
    mining: str = "random"  # random | hardest | all

    def __post_init__(self):
        if self.margin < 0:
            raise ValueError("margin must be >= 0")
        if self.mining not in ("random", "hardest", "all"):
            raise ValueError(f"unknown mining strategy {self.mining!r}")


@dataclass(frozen=True)
class MaskedSimilarityBatch:
    """Pool-vs-card similarities with the {1, 0, -1} validity mask."""

    sims: np.ndarray  # [N, M] float64
    mask: np.ndarray  # [N, M] int8

    def __post_init__(self):
        object.__setattr__(self, "sims", np.ascontiguousarray(self.sims, dtype=np.float64))
        object.__setattr__(self, "mask", np.ascontiguousarray(self.mask, dtype=np.int8))
        if self.sims.shape != self.mask.shape:
            raise ValueError("sims and mask must have the same shape")
        ones = (self.mask == 1).sum(axis=1)
        if not (ones == 1).all():
            raise NoPositiveInRow(f"rows with one-counts {set(ones.tolist())} (need exactly 1)")
        if not ((self.mask == 0).sum(axis=1) >= 1).all():
            raise ValueError("every row needs at least one unchosen alternative")


@dataclass(frozen=True)
class PairBatch:
    """Aligned (pool, chosen card) embedding rows; row i is one decision."""

    pool_emb: np.ndarray
    chosen_emb: np.ndarray

    def __post_init__(self):
        if self.pool_emb.shape != self.chosen_emb.shape:
            raise ValueError("pair sides must align")


def contextual_mask(decisions: list[Decision], vocab: int) -> np.ndarray:
    mask = np.full((len(decisions), vocab), -1, dtype=np.int8)
    for i, d in enumerate(decisions):
        mask[i, list(d.pack)] = 0
        mask[i, d.picked_card] = 1
    return mask


def build_contextual_batch(decisions: list[Decision], model: EmbeddingModel,
                           catalog: CardCatalog) -> MaskedSimilarityBatch:
    """Cosine similarities of every decision's pool against the whole catalog.

    Card embeddings are computed once for the batch.
    """
    leaves = model.store.as_vars()
    cards = model.cards_var(catalog.features, leaves).value
    pools = model.pools_var([d.pool for d in decisions], catalog, leaves).value
    if not model.config.normalize_output:
        cards = cards / np.linalg.norm(cards, axis=1, keepdims=True)
        pools = pools / np.linalg.norm(pools, axis=1, keepdims=True)
    return MaskedSimilarityBatch(pools @ cards.T, contextual_mask(decisions, catalog.size))


def contextual_infonce_loss(batch: MaskedSimilarityBatch, tau: float = 0.07):
    """Mean over rows of the valid-entry softmax cross-entropy.

    Returns (loss, gradient w.r.t. sims). Excluded entries get exactly zero
    gradient.
    """
    if (batch.mask >= 0).sum(axis=1).min() == 0:
        raise EmptyValidSet("a row excludes every card")
    n = batch.sims.shape[0]
    inv_tau = 1.0 / tau
    row_loss, probs = masked_ce_fwd(batch.sims, batch.mask, inv_tau)
    dsims = masked_ce_bwd(probs, batch.mask, inv_tau, np.full(n, 1.0 / n))
    return float(row_loss.mean()), dsims


def _eye_mask(n: int) -> np.ndarray:
    mask = np.zeros((n, n), dtype=np.int8)
    np.fill_diagonal(mask, 1)
    return mask


def _pair_sims(pool: Var, chosen: Var, normalized: bool) -> Var:
    if not normalized:
        pool = ag.l2norm_rows(pool)
        chosen = ag.l2norm_rows(chosen)
    return ag.matmul_nt(pool, chosen)


def standard_infonce_loss(pairs: PairBatch, tau: float = 0.07, *, normalized: bool = True):
    """CLIP-style: softmax cross-entropy toward the diagonal, both matrix
    directions, summed. Returns (loss, (d_pool_emb, d_chosen_emb))."""
    n = pairs.pool_emb.shape[0]
    if n < 2:
        raise ValueError("pair batch needs at least 2 rows")
    pool, chosen = Var(pairs.pool_emb), Var(pairs.chosen_emb)
    loss = _standard_infonce_var(pool, chosen, tau, normalized)
    loss.backward()
    return loss.item(), (pool.grad, chosen.grad)


def _standard_infonce_var(pool: Var, chosen: Var, tau: float, normalized: bool) -> Var:
    sims = _pair_sims(pool, chosen, normalized)
    eye = _eye_mask(sims.shape[0])
    return ag.add(ag.masked_ce_mean(sims, eye, tau),
                  ag.masked_ce_mean(ag.transpose(sims), eye, tau))


def sigmoid_pair_loss(pairs: PairBatch, t: float = SIGMOID_T_INIT, b: float = SIGMOID_B_INIT,
                      *, normalized: bool = True):
    """Pairwise logistic loss over the N x N pair matrix.

    Each entry contributes log(1 + exp(z * (b - t * s))) with z = +1 on the
    diagonal and -1 off it; the total is divided by N. Returns
    (loss, (d_pool, d_chosen, dt, db)).
    """
    pool, chosen = Var(pairs.pool_emb), Var(pairs.chosen_emb)
    tv, bv = Var(t), Var(b)
    loss = _sigmoid_pair_var(pool, chosen, tv, bv, normalized)
    loss.backward()
    return loss.item(), (pool.grad, chosen.grad, float(tv.grad), float(bv.grad))


def _sigmoid_pair_var(pool: Var, chosen: Var, t: Var, b: Var, normalized: bool) -> Var:
    sims = _pair_sims(pool, chosen, normalized)
    n = sims.shape[0]
    signs = ag.const(2.0 * np.eye(n) - 1.0)
    inner = ag.sub(ag.mul(b, ag.const(np.ones((n, n)))), ag.mul(t, sims))
    return ag.scale(ag.vsum(ag.softplus(ag.mul(signs, inner))), 1.0 / n)


def triplet_loss(anchor: np.ndarray, positive: np.ndarray, negative: np.ndarray,
                 margin: float = 0.2):
    """Euclidean hinge: max(d(a, p) - d(a, n) + margin, 0); subgradient 0 at
    the kink. Returns (loss, (da, dp, dn))."""
    a = Var(np.atleast_2d(anchor))
    p = Var(np.atleast_2d(positive))
    nv = Var(np.atleast_2d(negative))
    loss = ag.vmean(_triplet_hinge(a, p, nv, margin))
    loss.backward()
    shape = np.shape(anchor)
    da = a.grad.reshape(shape) if a.grad is not None else np.zeros(shape)
    dp = p.grad.reshape(shape) if p.grad is not None else np.zeros(shape)
    dn = nv.grad.reshape(shape) if nv.grad is not None else np.zeros(shape)
    return loss.item(), (da, dp, dn)


def _triplet_hinge(a: Var, p: Var, n: Var, margin: float) -> Var:
    gap = ag.sub(ag.rowdist(a, p), ag.rowdist(a, n))
    return ag.relu(ag.add(gap, ag.const(np.full(gap.shape, margin))))


def mine(decision: Decision, strategy: str, *, model: EmbeddingModel | None = None,
         catalog: CardCatalog | None = None, rng=None) -> list[tuple[tuple[int, ...], int, int]]:
    """Build (pool, positive card, negative card) triplets for one decision.

    random: one uniformly-drawn negative. hardest: the unchosen card whose
    embedding is closest to the pool's (needs a forward pass; ties go to the
    lowest card id). all: one triplet per unchosen card.
    """
    pool, pos = decision.pool, decision.picked_card
    unchosen = decision.unchosen()
    if strategy == "all":
        return [(pool, pos, neg) for neg in unchosen]
    if strategy == "random":
        return [(pool, pos, unchosen[int(rng.integers(len(unchosen)))])]
    if strategy == "hardest":
        candidates = sorted(unchosen)
        leaves = model.store.as_vars()
        pool_emb = model.pools_var([pool], catalog, leaves).value[0]
        card_embs = model.cards_var(catalog.features[candidates], leaves).value
        dists = np.linalg.norm(card_embs - pool_emb, axis=1)
        return [(pool, pos, candidates[int(np.argmin(dists))])]
    raise ValueError(f"unknown mining strategy {strategy!r}")


def mine_hardest_batch(decisions: list[Decision], model: EmbeddingModel,
                       catalog: CardCatalog) -> list[tuple[tuple[int, ...], int, int]]:
    """Hardest-negative mining for a whole batch with one forward pass.

    Same result as per-decision :func:`mine`, without re-encoding the
    vocabulary for every decision.
    """
    leaves = model.store.as_vars()
    pools = model.pools_var([d.pool for d in decisions], catalog, leaves).value
    ids = sorted({c for d in decisions for c in d.pack})
    col = {c: i for i, c in enumerate(ids)}
    cards = model.cards_var(catalog.features[ids], leaves).value
    mined = []
    for i, d in enumerate(decisions):
        candidates = sorted(d.unchosen())
        dists = np.linalg.norm(cards[[col[c] for c in candidates]] - pools[i], axis=1)
        mined.append((d.pool, d.picked_card, candidates[int(np.argmin(dists))]))
    return mined


def collision_rate(decisions: list[Decision]) -> float:
    """Fraction of decisions whose picked card is also picked elsewhere in the
    batch — the off-diagonal correct pairings that break the square-matrix
    batch assumption."""
    if len(decisions) < 2:
        raise ValueError("need at least 2 decisions")
    picks = [d.picked_card for d in decisions]
    counts: dict[int, int] = {}
    for c in picks:
        counts[c] = counts.get(c, 0) + 1
    return sum(1 for c in picks if counts[c] > 1) / len(picks)


# ---- training-level composition ----------------------------------------


def ensure_sigmoid_params(store: ParamStore, cfg: InfoNceConfig = InfoNceConfig()) -> None:
    if "loss.sigmoid_t" not in store:
        store.add("loss.sigmoid_t", np.asarray(cfg.sigmoid_t_init))
        store.add("loss.sigmoid_b", np.asarray(cfg.sigmoid_b_init))


def batch_loss(model: EmbeddingModel, decisions: list[Decision], catalog: CardCatalog,
               method: str, leaves: dict[str, Var], *,
               infonce: InfoNceConfig = InfoNceConfig(),
               triplet: TripletConfig = TripletConfig(),
               mined: list[tuple[tuple[int, ...], int, int]] | None = None,
               rng=None) -> Var:
    """Scalar loss Var for one batch under the named method.

    For triplet methods the mined triplets may be passed in (the trainer
    mines before building the graph); otherwise they are mined here.
    """
    normalized = model.config.normalize_output
    if method == CONTEXTUAL_INFONCE:
        cards = model.cards_var(catalog.features, leaves)
        pools = model.pools_var([d.pool for d in decisions], catalog, leaves)
        sims = _pair_sims(pools, cards, normalized)
        return ag.masked_ce_mean(sims, contextual_mask(decisions, catalog.size),
                                 infonce.temperature)
    if method in (STANDARD_INFONCE, SIGMOID_INFONCE):
        pools = model.pools_var([d.pool for d in decisions], catalog, leaves)
        chosen = model.cards_var(catalog.features[[d.picked_card for d in decisions]], leaves)
        if method == STANDARD_INFONCE:
            return _standard_infonce_var(pools, chosen, infonce.temperature, normalized)
        ensure_sigmoid_params(model.store, infonce)
        if "loss.sigmoid_t" not in leaves:
            leaves.update({n: Var(model.store.value(n))
                           for n in ("loss.sigmoid_t", "loss.sigmoid_b")})
        return _sigmoid_pair_var(pools, chosen, leaves["loss.sigmoid_t"],
                                 leaves["loss.sigmoid_b"], normalized)
    if method in (TRIPLET_RANDOM, TRIPLET_HARD, TRIPLET_ALL):
        if mined is None:
            strategy = {TRIPLET_RANDOM: "random", TRIPLET_HARD: "hardest",
                        TRIPLET_ALL: "all"}[method]
            mined = []
            for d in decisions:
                mined.extend(mine(d, strategy, model=model, catalog=catalog, rng=rng))
        pools = model.pools_var([d.pool for d in decisions], catalog, leaves)
        pool_index = {id(d): i for i, d in enumerate(decisions)}
        pool_of_triplet = []
        k = 0
        for d in decisions:
            n_t = len(d.pack) - 1 if method == TRIPLET_ALL else 1
            pool_of_triplet.extend([pool_index[id(d)]] * n_t)
            k += n_t
        if k != len(mined):
            raise ValueError("mined triplets do not align with decisions")
        card_ids = sorted({t[1] for t in mined} | {t[2] for t in mined})
        card_pos = {c: i for i, c in enumerate(card_ids)}
        cards = model.cards_var(catalog.features[card_ids], leaves)
        anchors = ag.gather_rows(pools, np.array(pool_of_triplet))
        positives = ag.gather_rows(cards, np.array([card_pos[t[1]] for t in mined]))
        negatives = ag.gather_rows(cards, np.array([card_pos[t[2]] for t in mined]))
        return ag.vmean(_triplet_hinge(anchors, positives, negatives, triplet.margin))
    raise ValueError(f"unknown method {method!r}")
