import numpy as np
import pytest

from draftrank.domain import CardCatalog, Decision
from draftrank.encoders import EmbeddingModel, EncoderConfig


def make_catalog(cards=10, features=8, seed=0) -> CardCatalog:
    rng = np.random.default_rng([seed, 0xCA7])
    return CardCatalog(features=rng.normal(size=(cards, features)),
                       names=tuple(f"card_{i:04d}" for i in range(cards)))


def make_decisions(catalog, n=6, seed=0, max_pool=10) -> list[Decision]:
    rng = np.random.default_rng([seed, 0xDEC])
    out = []
    for _ in range(n):
        pack_size = int(rng.integers(2, min(catalog.size, 15) + 1))
        pack = rng.choice(catalog.size, pack_size, replace=False).tolist()
        pool_size = int(rng.integers(0, max_pool + 1))
        pool = rng.integers(0, catalog.size, size=pool_size).tolist()
        out.append(Decision(pool=tuple(pool), pack=tuple(pack),
                            picked=int(rng.integers(pack_size))))
    return out


def tiny_model(catalog, wiring="separate_outputs", seed=0, **kw) -> EmbeddingModel:
    defaults = dict(feature_dim=catalog.feature_dim, embed_dim=4, card_layers=2,
                    card_width=6, pool_layers=1, main_layers=2, wiring=wiring)
    defaults.update(kw)
    return EmbeddingModel.create(EncoderConfig(**defaults), seed=seed)


@pytest.fixture
def catalog():
    return make_catalog()
