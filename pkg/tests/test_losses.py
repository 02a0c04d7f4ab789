"""Loss-by-loss contracts, each against an independent oracle where one exists."""

import math

import numpy as np
import numpy.testing as npt
import pytest

from draftrank.domain import Decision
from draftrank.losses import (
    CONTEXTUAL_INFONCE,
    MaskedSimilarityBatch,
    NoPositiveInRow,
    PairBatch,
    TripletConfig,
    batch_loss,
    build_contextual_batch,
    collision_rate,
    contextual_infonce_loss,
    contextual_mask,
    mine,
    mine_hardest_batch,
    sigmoid_pair_loss,
    standard_infonce_loss,
    triplet_loss,
)
from conftest import make_catalog, make_decisions, tiny_model


def compact_ce(sims_row, mask_row, tau):
    """Oracle: delete the -1 columns, then plain softmax cross-entropy."""
    valid = mask_row >= 0
    z = sims_row[valid] / tau
    pos = np.flatnonzero(mask_row[valid] == 1)[0]
    z = z - z.max()
    return float(np.log(np.exp(z).sum()) - z[pos])


def random_masked_rows(rng, n, m):
    sims = rng.uniform(-1, 1, size=(n, m))
    mask = np.full((n, m), -1, dtype=np.int8)
    for i in range(n):
        k = int(rng.integers(2, min(m, 15) + 1))
        cols = rng.choice(m, size=k, replace=False)
        mask[i, cols] = 0
        mask[i, cols[int(rng.integers(k))]] = 1
    return sims, mask


class TestMaskedBatchInvariants:
    def test_row_without_positive_rejected(self):
        mask = np.array([[0, 0, -1]], dtype=np.int8)
        with pytest.raises(NoPositiveInRow):
            MaskedSimilarityBatch(np.zeros((1, 3)), mask)

    def test_row_without_alternative_rejected(self):
        mask = np.array([[1, -1, -1]], dtype=np.int8)
        with pytest.raises(ValueError):
            MaskedSimilarityBatch(np.zeros((1, 3)), mask)


class TestContextualMask:
    def test_documented_example(self):
        d = Decision(pool=(), pack=(0, 1, 2), picked=0)
        npt.assert_array_equal(contextual_mask([d], 5), [[1, 0, 0, -1, -1]])

    def test_one_positive_per_row(self):
        catalog = make_catalog(cards=12)
        decisions = make_decisions(catalog, n=20, seed=3)
        mask = contextual_mask(decisions, catalog.size)
        npt.assert_array_equal((mask == 1).sum(axis=1), 1)

    def test_never_offered_card_is_all_masked(self):
        d1 = Decision(pool=(), pack=(0, 1), picked=0)
        d2 = Decision(pool=(0,), pack=(1, 2), picked=1)
        mask = contextual_mask([d1, d2], 4)
        npt.assert_array_equal(mask[:, 3], [-1, -1])


class TestContextualLoss:
    def test_equal_sims_give_log_k(self):
        for k in (2, 5, 9):
            mask = np.full((1, 12), -1, dtype=np.int8)
            mask[0, :k] = 0
            mask[0, 0] = 1
            loss, _ = contextual_infonce_loss(
                MaskedSimilarityBatch(np.full((1, 12), 0.37), mask), tau=0.07)
            assert loss == pytest.approx(math.log(k), abs=1e-12)

    def test_two_entry_hand_value(self):
        sims = np.array([[1.0, 0.0, 0.5]])
        mask = np.array([[1, 0, -1]], dtype=np.int8)
        loss, _ = contextual_infonce_loss(MaskedSimilarityBatch(sims, mask), tau=1.0)
        assert loss == pytest.approx(math.log(1 + math.exp(-1)), abs=1e-12)

    def test_matches_compaction_oracle_and_masked_grads_zero(self):
        rng = np.random.default_rng(17)
        sims, mask = random_masked_rows(rng, 50, 20)
        batch = MaskedSimilarityBatch(sims, mask)
        loss, dsims = contextual_infonce_loss(batch, tau=0.07)
        expected = np.mean([compact_ce(sims[i], mask[i], 0.07) for i in range(50)])
        assert loss == pytest.approx(expected, abs=1e-12)
        assert (dsims[mask < 0] == 0.0).all()

    def test_row_gradients_sum_to_zero_over_valid(self):
        rng = np.random.default_rng(23)
        sims, mask = random_masked_rows(rng, 10, 8)
        _, dsims = contextual_infonce_loss(MaskedSimilarityBatch(sims, mask))
        npt.assert_allclose(dsims.sum(axis=1), 0.0, atol=1e-14)

    def test_shift_invariance(self):
        rng = np.random.default_rng(29)
        sims, mask = random_masked_rows(rng, 4, 9)
        base, _ = contextual_infonce_loss(MaskedSimilarityBatch(sims, mask))
        shifted = sims + 3.7 * (mask >= 0)
        after, _ = contextual_infonce_loss(MaskedSimilarityBatch(shifted, mask))
        assert after == pytest.approx(base, abs=1e-12)

    def test_raising_positive_strictly_lowers_loss(self):
        rng = np.random.default_rng(31)
        sims, mask = random_masked_rows(rng, 6, 9)
        base, _ = contextual_infonce_loss(MaskedSimilarityBatch(sims, mask))
        sims2 = sims + 0.05 * (mask == 1)
        after, _ = contextual_infonce_loss(MaskedSimilarityBatch(sims2, mask))
        assert after < base

    def test_gradient_matches_finite_differences(self):
        rng = np.random.default_rng(37)
        sims, mask = random_masked_rows(rng, 3, 7)
        _, dsims = contextual_infonce_loss(MaskedSimilarityBatch(sims, mask))
        h = 1e-6
        for i in range(3):
            for j in range(7):
                up, down = sims.copy(), sims.copy()
                up[i, j] += h
                down[i, j] -= h
                lu, _ = contextual_infonce_loss(MaskedSimilarityBatch(up, mask))
                ld, _ = contextual_infonce_loss(MaskedSimilarityBatch(down, mask))
                npt.assert_allclose(dsims[i, j], (lu - ld) / (2 * h), atol=1e-7)


class TestBuildContextualBatch:
    def test_shapes_and_mask(self, catalog):
        model = tiny_model(catalog)
        decisions = make_decisions(catalog, n=5, seed=11)
        batch = build_contextual_batch(decisions, model, catalog)
        assert batch.sims.shape == (5, catalog.size)
        npt.assert_array_equal(batch.mask, contextual_mask(decisions, catalog.size))

    def test_sims_are_cosines(self, catalog):
        model = tiny_model(catalog)
        decisions = make_decisions(catalog, n=4, seed=13)
        batch = build_contextual_batch(decisions, model, catalog)
        from draftrank.numerics import cosine_sim

        pool_emb = model.encode_pool(decisions[2].pool, catalog)
        card_emb = model.encode_card(catalog.features[5])
        assert batch.sims[2, 5] == pytest.approx(cosine_sim(pool_emb, card_emb), abs=1e-9)


class TestStandardInfoNce:
    def test_identity_matrix_value(self):
        pairs = PairBatch(np.eye(2), np.eye(2))
        loss, _ = standard_infonce_loss(pairs, tau=1.0)
        assert loss == pytest.approx(2 * math.log(1 + math.exp(-1)), abs=1e-12)

    def test_constant_matrix_gives_2_log_n(self):
        for n in (2, 4, 7):
            emb = np.tile(np.array([1.0, 0.0]), (n, 1))
            loss, _ = standard_infonce_loss(PairBatch(emb, emb), tau=0.07)
            assert loss == pytest.approx(2 * math.log(n), abs=1e-12)

    def test_gradient_matches_finite_differences(self):
        rng = np.random.default_rng(41)
        pool = rng.normal(size=(3, 4))
        chosen = rng.normal(size=(3, 4))
        _, (dp, dc) = standard_infonce_loss(PairBatch(pool, chosen), tau=0.5,
                                            normalized=False)
        h = 1e-5
        for arr, grad in ((pool, dp), (chosen, dc)):
            it = np.nditer(arr, flags=["multi_index"])
            while not it.finished:
                idx = it.multi_index
                orig = arr[idx]
                arr[idx] = orig + h
                lu, _ = standard_infonce_loss(PairBatch(pool, chosen), 0.5, normalized=False)
                arr[idx] = orig - h
                ld, _ = standard_infonce_loss(PairBatch(pool, chosen), 0.5, normalized=False)
                arr[idx] = orig
                npt.assert_allclose(grad[idx], (lu - ld) / (2 * h), rtol=1e-4, atol=1e-8)
                it.iternext()


class TestSigmoidPairLoss:
    def test_degenerate_parameters_give_log2_each(self):
        rng = np.random.default_rng(43)
        for n in (1, 3):
            emb = rng.normal(size=(n, 4))
            loss, _ = sigmoid_pair_loss(PairBatch(emb, rng.normal(size=(n, 4))), t=0.0, b=0.0)
            assert loss == pytest.approx(n * math.log(2), abs=1e-12)

    def test_single_pair_hand_value(self):
        emb = np.array([[1.0, 0.0]])
        loss, _ = sigmoid_pair_loss(PairBatch(emb, emb))  # s = 1
        expected = math.log(1 + math.exp(-math.log(10.0) * 1.0 + (-10.0)))
        assert loss == pytest.approx(expected, abs=1e-12)

    def test_gradients_including_t_and_b(self):
        rng = np.random.default_rng(47)
        pool = rng.normal(size=(3, 4))
        chosen = rng.normal(size=(3, 4))
        t0, b0 = 0.7, -0.3
        _, (dp, dc, dt, db) = sigmoid_pair_loss(PairBatch(pool, chosen), t0, b0)
        h = 1e-5

        def f(t=t0, b=b0):
            return sigmoid_pair_loss(PairBatch(pool, chosen), t, b)[0]

        npt.assert_allclose(dt, (f(t=t0 + h) - f(t=t0 - h)) / (2 * h), rtol=1e-4)
        npt.assert_allclose(db, (f(b=b0 + h) - f(b=b0 - h)) / (2 * h), rtol=1e-4)
        it = np.nditer(pool, flags=["multi_index"])
        while not it.finished:
            idx = it.multi_index
            orig = pool[idx]
            pool[idx] = orig + h
            hi = f()
            pool[idx] = orig - h
            lo = f()
            pool[idx] = orig
            npt.assert_allclose(dp[idx], (hi - lo) / (2 * h), rtol=1e-4, atol=1e-8)
            it.iternext()


class TestTripletLoss:
    def test_equal_positive_negative_gives_margin(self):
        a = np.array([1.0, 2.0])
        p = np.array([0.0, 0.5])
        loss, _ = triplet_loss(a, p, p.copy(), margin=0.2)
        assert loss == pytest.approx(0.2)

    def test_satisfied_margin_is_zero(self):
        a = np.array([0.0, 0.0])
        loss, grads = triplet_loss(a, a.copy(), np.array([5.0, 0.0]), margin=0.2)
        assert loss == 0.0
        for g in grads:
            npt.assert_array_equal(g, 0.0)

    def test_hand_value(self):
        a = np.array([0.0, 0.0])
        p = np.array([0.9, 0.0])
        n = np.array([0.5, 0.0])
        loss, _ = triplet_loss(a, p, n, margin=0.2)
        assert loss == pytest.approx(0.6, abs=1e-12)

    def test_gradients_away_from_kink(self):
        rng = np.random.default_rng(53)
        while True:
            a, p, n = rng.normal(size=(3, 4))
            gap = np.linalg.norm(a - p) - np.linalg.norm(a - n) + 0.2
            if abs(gap) > 1e-3 and gap > 0:  # active, away from the kink
                break
        loss, (da, dp, dn) = triplet_loss(a, p, n, margin=0.2)
        h = 1e-6
        for arr, grad in ((a, da), (p, dp), (n, dn)):
            for i in range(4):
                orig = arr[i]
                arr[i] = orig + h
                hi, _ = triplet_loss(a, p, n, margin=0.2)
                arr[i] = orig - h
                lo, _ = triplet_loss(a, p, n, margin=0.2)
                arr[i] = orig
                npt.assert_allclose(grad[i], (hi - lo) / (2 * h), rtol=1e-4, atol=1e-9)


class TestMining:
    def test_two_card_pack_forces_negative(self, catalog):
        d = Decision(pool=(), pack=(3, 7), picked=0)
        model = tiny_model(catalog)
        rng = np.random.default_rng(0)
        for strategy, kw in (("random", dict(rng=rng)), ("all", {}),
                             ("hardest", dict(model=model, catalog=catalog))):
            triplets = mine(d, strategy, **kw)
            assert triplets == [((), 3, 7)]

    def test_all_mining_covers_pack(self, catalog):
        decisions = make_decisions(catalog, n=10, seed=5)
        for d in decisions:
            triplets = mine(d, "all")
            negs = {t[2] for t in triplets}
            assert negs | {d.picked_card} == set(d.pack)
            assert len(triplets) == len(d.pack) - 1

    def test_all_mining_on_full_pack(self):
        catalog = make_catalog(cards=20)
        d = Decision(pool=(), pack=tuple(range(15)), picked=4)
        assert len(mine(d, "all")) == 14

    def test_hardest_agrees_with_brute_force(self, catalog):
        model = tiny_model(catalog, seed=3)
        for d in make_decisions(catalog, n=8, seed=7):
            (_, _, neg), = mine(d, "hardest", model=model, catalog=catalog)
            pool_emb = model.encode_pool(d.pool, catalog)
            best = min(d.unchosen(), key=lambda c: (
                np.linalg.norm(model.encode_card(catalog.features[c]) - pool_emb), c))
            assert neg == best

    def test_hardest_tie_breaks_to_lowest_id(self):
        feats = np.ones((6, 4))  # identical cards -> identical embeddings
        from draftrank.domain import CardCatalog

        catalog = CardCatalog(features=feats, names=tuple(f"c{i}" for i in range(6)))
        model = tiny_model(catalog)
        d = Decision(pool=(0,), pack=(5, 2, 4), picked=2)
        (_, _, neg), = mine(d, "hardest", model=model, catalog=catalog)
        assert neg == 2

    def test_random_mining_is_seeded(self, catalog):
        d = Decision(pool=(), pack=(0, 1, 2, 3, 4), picked=1)
        picks1 = [mine(d, "random", rng=np.random.default_rng(9))[0][2] for _ in range(5)]
        picks2 = [mine(d, "random", rng=np.random.default_rng(9))[0][2] for _ in range(5)]
        assert picks1 == picks2

    def test_batched_hardest_matches_single(self, catalog):
        model = tiny_model(catalog, seed=5)
        decisions = make_decisions(catalog, n=12, seed=9)
        batched = mine_hardest_batch(decisions, model, catalog)
        singles = [mine(d, "hardest", model=model, catalog=catalog)[0] for d in decisions]
        assert batched == singles


class TestCollisionRate:
    def test_all_distinct(self):
        ds = [Decision(pool=(), pack=(i, i + 1), picked=0) for i in range(0, 8, 2)]
        assert collision_rate(ds) == 0.0

    def test_all_same(self):
        ds = [Decision(pool=(), pack=(0, i), picked=0) for i in range(1, 6)]
        assert collision_rate(ds) == 1.0

    def test_counting_oracle(self):
        rng = np.random.default_rng(61)
        ds = []
        for _ in range(50):
            pack = rng.choice(5, size=3, replace=False).tolist()
            ds.append(Decision(pool=(), pack=tuple(pack), picked=int(rng.integers(3))))
        picks = [d.picked_card for d in ds]
        oracle = sum(1 for p in picks if picks.count(p) > 1) / len(picks)
        assert collision_rate(ds) == pytest.approx(oracle)
        assert collision_rate(ds) > 0.9


def test_batch_loss_contextual_matches_array_surface(catalog):
    model = tiny_model(catalog)
    decisions = make_decisions(catalog, n=4, seed=21)
    leaves = model.store.as_vars()
    var = batch_loss(model, decisions, catalog, CONTEXTUAL_INFONCE, leaves)
    batch = build_contextual_batch(decisions, model, catalog)
    loss, _ = contextual_infonce_loss(batch, tau=0.07)
    assert var.item() == pytest.approx(loss, abs=1e-12)
