"""Batch assembly, epoch loop, timing, and the six-method comparison run.

All randomness (shuffling, negative mining, parameter init) is derived from
one master seed, so a (seed, config) pair pins the whole trajectory and a
checkpoint resume continues it bit-exactly.
"""

from __future__ import annotations

import csv
import time
from dataclasses import dataclass

import numpy as np

from .domain import CardCatalog, Dataset, Decision
from .encoders import EmbeddingModel, EncoderConfig
from .evaluation import EmbeddingScorer, top1_accuracy
from .losses import (
    DEFAULT_WIRING,
    METHODS,
    SIGMOID_INFONCE,
    TRIPLET_ALL,
    TRIPLET_HARD,
    TRIPLET_RANDOM,
    InfoNceConfig,
    TripletConfig,
    batch_loss,
    ensure_sigmoid_params,
    mine,
    mine_hardest_batch,
)
from .numerics import SgdConfig, sgd_step
from .numerics.autograd import NonFiniteError


class NonFiniteLoss(FloatingPointError):
    pass


@dataclass(frozen=True)
class TrainConfig:
    method: str
    epochs: int = 10
    batch_size: int = 512
    learning_rate: float = 0.0003
    seed: int = 0
    eval_every: int = 0  # 0 = evaluate only after the final epoch
    temperature: float = 0.07
    margin: float = 0.2

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"unknown method {self.method!r}; choose from {METHODS}")
        if self.batch_size < 1 or self.epochs < 1:
            raise ValueError("batch_size and epochs must be >= 1")

    @property
    def effective_batch_size(self) -> int:
        # all-mining multiplies the triplet count per decision; shrink the
        # decision batch tenfold to keep the physical batch comparable
        if self.method == TRIPLET_ALL:
            return max(self.batch_size // 10, 1)
        return self.batch_size


@dataclass
class EpochReport:
    epoch: int
    mean_train_loss: float
    seconds: float
    top1: float | None = None


def _mine_for_batch(model, batch, catalog, cfg: TrainConfig, rng):
    if cfg.method == TRIPLET_RANDOM:
        return [mine(d, "random", rng=rng)[0] for d in batch]
    if cfg.method == TRIPLET_HARD:
        return mine_hardest_batch(batch, model, catalog)
    if cfg.method == TRIPLET_ALL:
        mined = []
        for d in batch:
            mined.extend(mine(d, "all"))
        return mined
    return None


def train_epoch(model: EmbeddingModel, decisions: list[Decision], catalog: CardCatalog,
                cfg: TrainConfig, epoch: int) -> EpochReport:
    """One pass over a seeded shuffle of the decisions. Wall time covers the
    optimization work only; evaluation happens outside."""
    shuffle_rng = np.random.default_rng([cfg.seed, 0xE901, epoch])
    mine_rng = np.random.default_rng([cfg.seed, 0xE902, epoch])
    order = shuffle_rng.permutation(len(decisions))
    bs = cfg.effective_batch_size
    infonce = InfoNceConfig(temperature=cfg.temperature)
    triplet = TripletConfig(margin=cfg.margin)
    sgd = SgdConfig(learning_rate=cfg.learning_rate)
    loss_sum = 0.0
    n_seen = 0
    started = time.perf_counter()
    for bi, start in enumerate(range(0, len(order), bs)):
        batch = [decisions[i] for i in order[start : start + bs]]
        mined = _mine_for_batch(model, batch, catalog, cfg, mine_rng)
        leaves = model.store.as_vars()
        try:
            loss = batch_loss(model, batch, catalog, cfg.method, leaves,
                              infonce=infonce, triplet=triplet, mined=mined)
        except NonFiniteError as e:
            raise NonFiniteLoss(f"epoch {epoch} batch {bi}: {e}") from e
        loss.backward()
        model.store.accumulate(leaves)
        sgd_step(model.store, sgd)
        loss_sum += loss.item() * len(batch)
        n_seen += len(batch)
    return EpochReport(epoch=epoch, mean_train_loss=loss_sum / max(n_seen, 1),
                       seconds=time.perf_counter() - started)


def train(model: EmbeddingModel, catalog: CardCatalog, train_decisions: list[Decision],
          cfg: TrainConfig, test_decisions: list[Decision] | None = None,
          start_epoch: int = 0) -> list[EpochReport]:
    if cfg.method == SIGMOID_INFONCE:
        ensure_sigmoid_params(model.store)
    reports = []
    for epoch in range(start_epoch, cfg.epochs):
        report = train_epoch(model, train_decisions, catalog, cfg, epoch)
        due = cfg.eval_every and (epoch + 1) % cfg.eval_every == 0
        if test_decisions and (due or epoch == cfg.epochs - 1):
            report.top1 = top1_accuracy(EmbeddingScorer(model, catalog), test_decisions).top1
        reports.append(report)
    return reports


@dataclass
class MethodResult:
    method: str
    top1: float
    seconds_per_epoch: float
    epochs: int
    seed: int


def build_model(method: str, catalog: CardCatalog, seed: int,
                **config_overrides) -> EmbeddingModel:
    config = EncoderConfig(feature_dim=catalog.feature_dim,
                           wiring=DEFAULT_WIRING[method], **config_overrides)
    return EmbeddingModel.create(config, seed=seed)


def run_experiment(dataset: Dataset, configs: list[TrainConfig],
                   **config_overrides) -> list[MethodResult]:
    """Train each config from an identically-seeded init and report the
    final held-out accuracy and the mean wall time per epoch."""
    results = []
    for cfg in configs:
        model = build_model(cfg.method, dataset.catalog, cfg.seed, **config_overrides)
        reports = train(model, dataset.catalog, dataset.train, cfg, dataset.test)
        results.append(MethodResult(
            method=cfg.method,
            top1=reports[-1].top1 if reports[-1].top1 is not None else float("nan"),
            seconds_per_epoch=float(np.mean([r.seconds for r in reports])),
            epochs=cfg.epochs,
            seed=cfg.seed,
        ))
    return results


RESULTS_HEADER = ["method", "top1_accuracy", "seconds_per_epoch", "epochs", "seed"]


def write_results(path, results: list[MethodResult], zero_timing: bool = False) -> None:
    """Results CSV. ``zero_timing`` writes 0.0 in the wall-time column so two
    identical runs produce byte-identical files."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(RESULTS_HEADER)
        for r in results:
            seconds = 0.0 if zero_timing else r.seconds_per_epoch
            w.writerow([r.method, repr(r.top1), repr(seconds), r.epochs, r.seed])


def format_results_table(results: list[MethodResult]) -> str:
    lines = [f"{'Method':<22} {'Top-1 Accuracy':>15} {'Time/epoch':>12}"]
    for r in results:
        lines.append(f"{r.method:<22} {r.top1:>14.2%} {r.seconds_per_epoch:>11.2f}s")
    return "\n".join(lines)
