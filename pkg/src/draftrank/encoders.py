"""Card and pool encoders producing one shared embedding space.

Two wirings are supported:

* ``separate_outputs`` — a card encoder (MLP trunk + single output layer) and
  a pool encoder that reuses the card encoder on every pool row, aggregates,
  and finishes with its own MLP head. Used by the InfoNCE-family losses.
* ``shared_main_block`` — smaller per-modality input stacks that meet in a
  shared main block whose output layer is literally the same parameter
  tensors for both paths. Used by the triplet-family losses.

Pool aggregation is either a masked mean over the real (non-padding) rows or
a width-3 convolution stack along the 45-card axis followed by a plain mean.
The empty pool maps to a learned vector.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from .domain import MAX_POOL, CardCatalog, PoolTooLarge
from .numerics import ParamStore, init_uniform, load_tensors, save_tensors
from .numerics import autograd as ag
from .numerics.autograd import Var

SEPARATE_OUTPUTS = "separate_outputs"
SHARED_MAIN_BLOCK = "shared_main_block"
MASKED_MEAN = "masked_mean"
CONV1D = "conv1d"

WIRINGS = (SEPARATE_OUTPUTS, SHARED_MAIN_BLOCK)
AGGREGATIONS = (MASKED_MEAN, CONV1D)


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class EncoderConfig:
    """Architecture knobs. Defaults are desk-scale; see README for the
    large-scale settings (1024-wide trunks, 128 conv filters)."""

    feature_dim: int
    embed_dim: int = 16
    card_layers: int = 3
    card_width: int = 64
    pool_layers: int = 2
    main_layers: int = 2
    wiring: str = SEPARATE_OUTPUTS
    pool_aggregation: str = MASKED_MEAN
    conv_filters: int = 64
    normalize_output: bool = True

    def __post_init__(self):
        if self.embed_dim < 2:
            raise ConfigError("embed_dim must be >= 2")
        if min(self.card_layers, self.pool_layers, self.main_layers) < 1:
            raise ConfigError("all layer counts must be >= 1")
        if self.feature_dim < 1 or self.card_width < 1 or self.conv_filters < 1:
            raise ConfigError("dimensions must be positive")
        if self.wiring not in WIRINGS:
            raise ConfigError(f"unknown wiring {self.wiring!r}")
        if self.pool_aggregation not in AGGREGATIONS:
            raise ConfigError(f"unknown aggregation {self.pool_aggregation!r}")


def _mlp_layer(store, prefix, fan_in, width, rng):
    init_uniform(store, f"{prefix}.w", (fan_in, width), fan_in, rng)
    init_uniform(store, f"{prefix}.b", (width,), fan_in, rng)
    store.add(f"{prefix}.ln_g", np.ones(width))
    store.add(f"{prefix}.ln_b", np.zeros(width))


def _head(store, prefix, fan_in, out, rng):
    init_uniform(store, f"{prefix}.w", (fan_in, out), fan_in, rng)
    init_uniform(store, f"{prefix}.b", (out,), fan_in, rng)


def _conv_layer(store, prefix, fan_in, filters, rng):
    init_uniform(store, f"{prefix}.w", (3 * fan_in, filters), 3 * fan_in, rng)
    init_uniform(store, f"{prefix}.b", (filters,), 3 * fan_in, rng)
    store.add(f"{prefix}.ln_g", np.ones(filters))
    store.add(f"{prefix}.ln_b", np.zeros(filters))


class EmbeddingModel:
    """Encoder parameters plus the forward wiring defined by the config."""

    def __init__(self, config: EncoderConfig, store: ParamStore):
        self.config = config
        self.store = store

    @classmethod
    def create(cls, config: EncoderConfig, seed: int = 0) -> "EmbeddingModel":
        rng = np.random.default_rng([seed, 0x1A17])
        store = ParamStore()
        c = config
        for i in range(c.card_layers):
            _mlp_layer(store, f"card.trunk.{i}", c.feature_dim if i == 0 else c.card_width,
                       c.card_width, rng)
        if c.wiring == SEPARATE_OUTPUTS:
            _head(store, "card.head", c.card_width, c.embed_dim, rng)
            agg_out = cls._build_separate_pool(store, c, rng)
            _head(store, "pool.head", agg_out, c.embed_dim, rng)
        else:
            cls._build_shared_pool(store, c, rng)
            for i in range(c.main_layers - 1):
                _mlp_layer(store, f"main.{i}", c.card_width, c.card_width, rng)
            _head(store, "main.out", c.card_width, c.embed_dim, rng)
        init_uniform(store, "pool.empty", (c.embed_dim,), c.embed_dim, rng)
        return cls(config, store)

    @staticmethod
    def _build_separate_pool(store, c, rng) -> int:
        if c.pool_aggregation == MASKED_MEAN:
            for i in range(c.pool_layers):
                _mlp_layer(store, f"pool.trunk.{i}", c.embed_dim if i == 0 else c.card_width,
                           c.card_width, rng)
            return c.card_width
        for i in range(c.pool_layers):
            _conv_layer(store, f"pool.conv.{i}", c.embed_dim if i == 0 else c.conv_filters,
                        c.conv_filters, rng)
        return c.conv_filters

    @staticmethod
    def _build_shared_pool(store, c, rng) -> None:
        if c.pool_aggregation == MASKED_MEAN:
            for i in range(c.pool_layers):
                _mlp_layer(store, f"pool.row.{i}", c.feature_dim if i == 0 else c.card_width,
                           c.card_width, rng)
        else:
            # last conv layer meets the main block at card_width
            for i in range(c.pool_layers):
                fan = c.feature_dim if i == 0 else c.conv_filters
                filters = c.card_width if i == c.pool_layers - 1 else c.conv_filters
                _conv_layer(store, f"pool.conv.{i}", fan, filters, rng)

    # ---- tape-level forward passes -------------------------------------

    def _mlp(self, x: Var, prefix: str, layers: int, leaves) -> Var:
        for i in range(layers):
            p = f"{prefix}.{i}"
            x = ag.linear(x, leaves[f"{p}.w"], leaves[f"{p}.b"])
            x = ag.layernorm(x, leaves[f"{p}.ln_g"], leaves[f"{p}.ln_b"])
            x = ag.elu(x)
        return x

    def _conv_stack(self, x3: Var, leaves) -> Var:
        B, R, _ = x3.shape
        for i in range(self.config.pool_layers):
            p = f"pool.conv.{i}"
            x3 = ag.conv1d_rows(x3, leaves[f"{p}.w"], leaves[f"{p}.b"])
            flat = ag.reshape(x3, (B * R, x3.shape[2]))
            flat = ag.layernorm(flat, leaves[f"{p}.ln_g"], leaves[f"{p}.ln_b"])
            flat = ag.elu(flat)
            x3 = ag.reshape(flat, (B, R, flat.shape[1]))
        return x3

    def _main_block(self, x: Var, leaves) -> Var:
        x = self._mlp(x, "main", self.config.main_layers - 1, leaves)
        return ag.linear(x, leaves["main.out.w"], leaves["main.out.b"])

    def _card_raw(self, feats: Var, leaves) -> Var:
        """Card path before output normalization; feats is [K, F]."""
        x = self._mlp(feats, "card.trunk", self.config.card_layers, leaves)
        if self.config.wiring == SEPARATE_OUTPUTS:
            return ag.linear(x, leaves["card.head.w"], leaves["card.head.b"])
        return self._main_block(x, leaves)

    def cards_var(self, features: np.ndarray, leaves) -> Var:
        out = self._card_raw(ag.const(features), leaves)
        return ag.l2norm_rows(out) if self.config.normalize_output else out

    def _pools_packed(self, cards: list[int], counts: np.ndarray,
                      catalog: CardCatalog, leaves) -> Var:
        """Masked-mean aggregation on packed rows.

        The per-row encoder sees each distinct card once; its output is
        gathered back to the packed layout before the segment mean, so pools
        full of repeated cards cost one encoder row each. Gradients scatter
        through the gather with the right multiplicities.
        """
        c = self.config
        unique = sorted(set(cards))
        col = {card: i for i, card in enumerate(unique)}
        flat_idx = np.array([col[card] for card in cards])
        x = ag.const(catalog.features[unique])
        if c.wiring == SEPARATE_OUTPUTS:
            rows = ag.gather_rows(self._card_raw(x, leaves), flat_idx)
            agg = self._mlp(ag.segment_mean_rows(rows, counts), "pool.trunk",
                            c.pool_layers, leaves)
            return ag.linear(agg, leaves["pool.head.w"], leaves["pool.head.b"])
        rows = ag.gather_rows(self._mlp(x, "pool.row", c.pool_layers, leaves), flat_idx)
        return self._main_block(ag.segment_mean_rows(rows, counts), leaves)

    def _pools_padded(self, padded: np.ndarray, leaves) -> Var:
        """Convolutional aggregation over the fixed 45-row layout (padding
        rows stay zero and flow through the convolutions)."""
        c = self.config
        B, R, F = padded.shape
        x = ag.const(padded)
        if c.wiring == SEPARATE_OUTPUTS:
            flat = self._card_raw(ag.reshape(x, (B * R, F)), leaves)
            rows = ag.reshape(flat, (B, R, c.embed_dim))
            agg = ag.mean_rows(self._conv_stack(rows, leaves))
            return ag.linear(agg, leaves["pool.head.w"], leaves["pool.head.b"])
        return self._main_block(ag.mean_rows(self._conv_stack(x, leaves)), leaves)

    def pools_var(self, pools: list, catalog: CardCatalog, leaves) -> Var:
        """Encode a batch of pools (lists of card ids, each of length <= 45)."""
        counts = np.array([len(p) for p in pools], dtype=np.int64)
        if counts.size and counts.max() > MAX_POOL:
            raise PoolTooLarge(f"pool of {counts.max()} exceeds {MAX_POOL}")
        nonempty = np.nonzero(counts > 0)[0]
        empty = np.nonzero(counts == 0)[0]
        parts = []
        if nonempty.size:
            if self.config.pool_aggregation == MASKED_MEAN:
                cards = [c for i in nonempty for c in pools[i]]
                emb = self._pools_packed(cards, counts[nonempty], catalog, leaves)
            else:
                padded = np.zeros((nonempty.size, MAX_POOL, catalog.feature_dim))
                for row, i in enumerate(nonempty):
                    padded[row, : counts[i]] = catalog.features[list(pools[i])]
                emb = self._pools_padded(padded, leaves)
            parts.append((nonempty, emb))
        if empty.size:
            parts.append((empty, ag.tile_rows(leaves["pool.empty"], empty.size)))
        out = parts[0][1] if len(parts) == 1 else ag.assemble_rows(len(pools), parts)
        return ag.l2norm_rows(out) if self.config.normalize_output else out

    # ---- inference conveniences ----------------------------------------

    def encode_card(self, features_row: np.ndarray) -> np.ndarray:
        feats = np.asarray(features_row, dtype=np.float64).reshape(1, -1)
        if feats.shape[1] != self.config.feature_dim:
            raise ag.ShapeMismatch(f"feature row of {feats.shape[1]}, expected {self.config.feature_dim}")
        return self.cards_var(feats, self.store.as_vars()).value[0]

    def encode_pool(self, pool, catalog: CardCatalog) -> np.ndarray:
        return self.pools_var([list(pool)], catalog, self.store.as_vars()).value[0]

    def embed_all_cards(self, catalog: CardCatalog) -> np.ndarray:
        return self.cards_var(catalog.features, self.store.as_vars()).value


def save_model(model: EmbeddingModel, path) -> None:
    tensors = {name: model.store.value(name) for name in model.store.names()}
    meta = {"kind": "embedding_model", "config": asdict(model.config)}
    save_tensors(path, tensors, meta, step=model.store.step)


def load_model(path) -> EmbeddingModel:
    tensors, meta, step = load_tensors(path)
    if meta.get("kind") != "embedding_model":
        raise ValueError(f"{path}: not an embedding-model checkpoint")
    config = EncoderConfig(**meta["config"])
    store = ParamStore()
    for name, value in tensors.items():
        store.add(name, value)
    store.step = step
    return EmbeddingModel(config, store)
