import numpy as np
import numpy.testing as npt
import pytest

from draftrank.domain import PoolTooLarge
from draftrank.encoders import (
    CONV1D,
    SEPARATE_OUTPUTS,
    SHARED_MAIN_BLOCK,
    ConfigError,
    EncoderConfig,
    EmbeddingModel,
    load_model,
    save_model,
)
from conftest import make_catalog, tiny_model


@pytest.fixture(params=[SEPARATE_OUTPUTS, SHARED_MAIN_BLOCK])
def wiring(request):
    return request.param


class TestEncodeCard:
    def test_unit_norm_when_normalizing(self, catalog, wiring):
        model = tiny_model(catalog, wiring=wiring)
        for i in range(catalog.size):
            e = model.encode_card(catalog.features[i])
            assert abs(np.linalg.norm(e) - 1.0) <= 1e-9

    def test_identical_features_identical_embeddings(self, catalog, wiring):
        model = tiny_model(catalog, wiring=wiring)
        row = catalog.features[3]
        npt.assert_array_equal(model.encode_card(row), model.encode_card(row.copy()))

    def test_embed_all_cards_matches_single(self, catalog, wiring):
        model = tiny_model(catalog, wiring=wiring)
        table = model.embed_all_cards(catalog)
        for i in (0, catalog.size - 1):
            npt.assert_allclose(table[i], model.encode_card(catalog.features[i]), atol=1e-12)

    def test_identical_feature_cards_share_embedding_rows(self):
        from draftrank.domain import CardCatalog

        feats = np.vstack([np.arange(4.0), np.arange(4.0), np.ones(4)])
        catalog = CardCatalog(features=feats, names=("a", "b", "c"))
        table = tiny_model(catalog).embed_all_cards(catalog)
        npt.assert_array_equal(table[0], table[1])
        assert not np.allclose(table[0], table[2])

    def test_embeddings_move_after_an_update_step(self, catalog):
        from draftrank.numerics import SgdConfig, sgd_step

        model = tiny_model(catalog, seed=4)
        before = model.embed_all_cards(catalog)
        leaves = model.store.as_vars()
        from draftrank.numerics import autograd as ag

        ag.vsum(model.cards_var(catalog.features, leaves)).backward()
        model.store.accumulate(leaves)
        sgd_step(model.store, SgdConfig(learning_rate=0.05))
        assert not np.allclose(model.embed_all_cards(catalog), before)


class TestEncodePool:
    def test_empty_pool_is_learned_vector(self, catalog, wiring):
        model = tiny_model(catalog, wiring=wiring)
        raw = model.store.value("pool.empty")
        expected = raw / np.linalg.norm(raw)
        npt.assert_allclose(model.encode_pool([], catalog), expected, atol=1e-12)

    def test_duplicate_card_equals_single(self, catalog, wiring):
        model = tiny_model(catalog, wiring=wiring)
        npt.assert_allclose(model.encode_pool([4, 4], catalog),
                            model.encode_pool([4], catalog), atol=1e-12)

    def test_masked_mean_permutation_invariance(self, catalog, wiring):
        model = tiny_model(catalog, wiring=wiring)
        rng = np.random.default_rng(5)
        for _ in range(10):
            pool = rng.integers(0, catalog.size, size=rng.integers(2, 12)).tolist()
            shuffled = list(pool)
            rng.shuffle(shuffled)
            npt.assert_allclose(model.encode_pool(pool, catalog),
                                model.encode_pool(shuffled, catalog), atol=1e-9)

    def test_unit_norm(self, catalog, wiring):
        model = tiny_model(catalog, wiring=wiring)
        e = model.encode_pool([1, 2, 3], catalog)
        assert abs(np.linalg.norm(e) - 1.0) <= 1e-9

    def test_oversized_pool_rejected(self, catalog):
        model = tiny_model(catalog)
        with pytest.raises(PoolTooLarge):
            model.encode_pool(list(range(46)), catalog)

    def test_batch_matches_single(self, catalog, wiring):
        model = tiny_model(catalog, wiring=wiring)
        pools = [[], [1], [2, 3, 4], []]
        batch = model.pools_var(pools, catalog, model.store.as_vars()).value
        for row, pool in zip(batch, pools):
            npt.assert_allclose(row, model.encode_pool(pool, catalog), atol=1e-12)


class TestConvAggregation:
    def test_forward_shapes_and_norm(self, catalog, wiring):
        model = tiny_model(catalog, wiring=wiring, pool_aggregation=CONV1D, conv_filters=6)
        e = model.encode_pool([0, 1, 2], catalog)
        assert e.shape == (4,)
        assert abs(np.linalg.norm(e) - 1.0) <= 1e-9

    def test_empty_pool_still_learned_vector(self, catalog):
        model = tiny_model(catalog, pool_aggregation=CONV1D, conv_filters=6)
        raw = model.store.value("pool.empty")
        npt.assert_allclose(model.encode_pool([], catalog), raw / np.linalg.norm(raw),
                            atol=1e-12)

    def test_conv_pools_are_order_sensitive(self, catalog):
        # width-3 filters look at neighbours, so order may matter (unlike masked mean)
        model = tiny_model(catalog, pool_aggregation=CONV1D, conv_filters=6)
        a = model.encode_pool([0, 1, 2, 3], catalog)
        b = model.encode_pool([3, 2, 1, 0], catalog)
        assert not np.allclose(a, b)


class TestSharedMainBlock:
    def test_output_layer_parameters_are_shared(self, catalog):
        model = tiny_model(catalog, wiring=SHARED_MAIN_BLOCK)
        card_before = model.encode_card(catalog.features[0])
        pool_before = model.encode_pool([1, 2], catalog)
        model.store.value("main.out.w")[...] += 0.05
        assert not np.allclose(model.encode_card(catalog.features[0]), card_before)
        assert not np.allclose(model.encode_pool([1, 2], catalog), pool_before)

    def test_separate_wiring_has_no_main_block(self, catalog):
        model = tiny_model(catalog, wiring=SEPARATE_OUTPUTS)
        assert not any(n.startswith("main.") for n in model.store.names())


def test_score_sorting_is_transitive(catalog):
    # real-valued scores cannot produce preference cycles
    model = tiny_model(catalog, seed=2)
    pool_emb = model.encode_pool([0, 1], catalog)
    cards = model.embed_all_cards(catalog)
    scores = cards @ pool_emb
    rng = np.random.default_rng(11)
    for _ in range(100):
        i, j, k = rng.choice(catalog.size, size=3, replace=False)
        better = lambda a, b: scores[a] >= scores[b]  # noqa: E731
        if better(i, j) and better(j, k):
            assert better(i, k)


def test_config_validation():
    with pytest.raises(ConfigError):
        EncoderConfig(feature_dim=8, embed_dim=1)
    with pytest.raises(ConfigError):
        EncoderConfig(feature_dim=8, wiring="tangled")
    with pytest.raises(ConfigError):
        EncoderConfig(feature_dim=8, card_layers=0)


def test_checkpoint_round_trip(tmp_path, catalog, wiring):
    model = tiny_model(catalog, wiring=wiring, seed=9)
    p1 = tmp_path / "model.ckpt"
    p2 = tmp_path / "model2.ckpt"
    save_model(model, p1)
    loaded = load_model(p1)
    assert loaded.config == model.config
    npt.assert_array_equal(loaded.embed_all_cards(catalog), model.embed_all_cards(catalog))
    save_model(loaded, p2)
    assert p1.read_bytes() == p2.read_bytes()


def test_cosine_equals_dot_for_normalized_outputs(catalog):
    from draftrank.numerics import cosine_sim

    model = tiny_model(catalog)
    pool = model.encode_pool([0, 2], catalog)
    card = model.encode_card(catalog.features[5])
    assert abs(cosine_sim(pool, card) - float(pool @ card)) <= 1e-9
