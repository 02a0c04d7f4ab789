"""Command-line entry point.

Subcommands: ingest, synth, train, eval, rank, simulate, compare, serve.
Usage errors exit 2 (argparse); runtime failures print one ``error:`` line
and exit 1. All randomness flows from ``--seed`` (default 0).
"""

from __future__ import annotations

import argparse
import csv
import sys
from pathlib import Path

from . import draft_sim, ingest, losses, training
from .domain import chance_baseline
from .encoders import EmbeddingModel, load_model, save_model
from .evaluation import EmbeddingScorer, predict_pick, top1_accuracy


def _add_common_train_flags(p):
    p.add_argument("--epochs", type=int, default=10)
    p.add_argument("--batch-size", type=int, default=512)
    p.add_argument("--lr", type=float, default=0.0003)
    p.add_argument("--temperature", type=float, default=0.07)
    p.add_argument("--margin", type=float, default=0.2)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="draftrank")
    parser.add_argument("--seed", type=int, default=None, dest="seed_global",
                        help="master RNG seed (default 0); accepted before or "
                             "after the subcommand")
    # every subcommand also takes --seed so the flag works in either position
    seed_parent = argparse.ArgumentParser(add_help=False)
    seed_parent.add_argument("--seed", type=int, default=None, dest="seed_sub",
                             help="master RNG seed (default 0)")
    sub = parser.add_subparsers(dest="command", required=True,
                                parser_class=lambda **kw: argparse.ArgumentParser(
                                    parents=[seed_parent], **kw))

    p = sub.add_parser("ingest", help="parse a feature file and draft log into a dataset dir")
    p.add_argument("--features", required=True)
    p.add_argument("--log", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--ratio", type=float, default=0.8)

    p = sub.add_parser("synth", help="generate a synthetic dataset dir")
    p.add_argument("--out", required=True)
    p.add_argument("--cards", type=int, default=200)
    p.add_argument("--features", type=int, default=32)
    p.add_argument("--players", type=int, default=8)
    p.add_argument("--drafts", type=int, default=50)
    p.add_argument("--latent-rank", type=int, default=4)
    p.add_argument("--noise", type=float, default=0.04)
    p.add_argument("--ratio", type=float, default=0.8)

    p = sub.add_parser("train", help="train one method on a dataset dir")
    p.add_argument("--data", required=True)
    p.add_argument("--loss", required=True, choices=losses.METHODS)
    p.add_argument("--out", help="results CSV")
    p.add_argument("--checkpoint", help="write the trained model here")
    p.add_argument("--eval-every", type=int, default=0)
    p.add_argument("--repro", action="store_true",
                   help="zero the wall-time column for byte-stable output")
    _add_common_train_flags(p)

    p = sub.add_parser("eval", help="evaluate a checkpoint on a dataset's test split")
    p.add_argument("--data", required=True)
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--out", help="report CSV")

    p = sub.add_parser("rank", help="rank a pack against a pool")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--data", required=True, help="dataset dir providing the catalog")
    p.add_argument("--pool", default="", help="';'-separated card names")
    p.add_argument("--pack", required=True, help="';'-separated card names")

    p = sub.add_parser("simulate", help="run a bot draft and write its transcript")
    p.add_argument("--data", required=True, help="dataset dir providing the catalog")
    p.add_argument("--players", type=int, default=8)
    p.add_argument("--checkpoint", help="greedy model bots instead of random ones")
    p.add_argument("--out", required=True, help="transcript CSV (draft-log schema)")
    p.add_argument("--draft-id", default="sim0")

    p = sub.add_parser("compare", help="train all six methods and print the comparison")
    p.add_argument("--data", required=True, help="dataset dir, or 'synthetic'")
    p.add_argument("--out", help="results CSV")
    p.add_argument("--repro", action="store_true",
                   help="zero the wall-time column for byte-stable output")
    _add_common_train_flags(p)

    p = sub.add_parser("serve", help="start the ranking/draft HTTP service")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--data", required=True, help="dataset dir providing the catalog")
    p.add_argument("--port", type=int, default=8000)
    p.add_argument("--host", default="127.0.0.1")

    return parser


def _load_data(path: str, seed: int) -> "ingest.Dataset":
    if path == "synthetic":
        spec = ingest.SyntheticSpec(seed=seed)
        catalog, records = ingest.generate_synthetic(spec)
        return ingest.split_dataset(records, catalog, 0.8, seed=seed)
    return ingest.load_dataset(path)


def _train_config(args, method: str) -> training.TrainConfig:
    return training.TrainConfig(
        method=method, epochs=args.epochs, batch_size=args.batch_size,
        learning_rate=args.lr, seed=args.seed, temperature=args.temperature,
        margin=args.margin, eval_every=getattr(args, "eval_every", 0),
    )


def cmd_ingest(args) -> int:
    catalog = ingest.parse_feature_file(args.features)
    records, stats = ingest.parse_draft_log(args.log, catalog)
    dataset = ingest.split_dataset(records, catalog, args.ratio, seed=args.seed)
    ingest.save_dataset(dataset, args.out)
    print(f"ingested {len(records)} decisions ({stats.dropped_single_card} single-card "
          f"records dropped) -> {args.out}")
    return 0


def cmd_synth(args) -> int:
    spec = ingest.SyntheticSpec(cards=args.cards, features=args.features,
                                players=args.players, drafts=args.drafts,
                                latent_rank=args.latent_rank, noise=args.noise,
                                seed=args.seed)
    catalog, records = ingest.generate_synthetic(spec)
    dataset = ingest.split_dataset(records, catalog, args.ratio, seed=args.seed)
    ingest.save_dataset(dataset, args.out)
    print(f"wrote {len(records)} synthetic decisions over {spec.cards} cards -> {args.out}")
    return 0


def cmd_train(args) -> int:
    dataset = _load_data(args.data, args.seed)
    cfg = _train_config(args, args.loss)
    model = training.build_model(cfg.method, dataset.catalog, cfg.seed)
    reports = training.train(model, dataset.catalog, dataset.train, cfg, dataset.test)
    result = training.MethodResult(
        method=cfg.method, top1=reports[-1].top1, epochs=cfg.epochs, seed=cfg.seed,
        seconds_per_epoch=sum(r.seconds for r in reports) / len(reports))
    print(training.format_results_table([result]))
    if args.out:
        training.write_results(args.out, [result], zero_timing=args.repro)
    if args.checkpoint:
        save_model(model, args.checkpoint)
        print(f"checkpoint -> {args.checkpoint}")
    return 0


def cmd_eval(args) -> int:
    dataset = _load_data(args.data, args.seed)
    model = load_model(args.checkpoint)
    report = top1_accuracy(EmbeddingScorer(model, dataset.catalog), dataset.test)
    print(f"top1 {report.top1:.4f}  mean_rank {report.mean_rank:.3f}  "
          f"n {report.n_decisions}  chance {chance_baseline(dataset):.4f}")
    if args.out:
        header, values = report.csv_row()
        with open(args.out, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(header)
            w.writerow(values)
    return 0


def cmd_rank(args) -> int:
    dataset = _load_data(args.data, args.seed)
    model = load_model(args.checkpoint)
    scorer = EmbeddingScorer(model, dataset.catalog)
    catalog = dataset.catalog
    pool = [catalog.id_of(n) for n in args.pool.split(";") if n]
    pack = [catalog.id_of(n) for n in args.pack.split(";") if n]
    _, scores = predict_pick(scorer, pool, pack)
    for i in sorted(range(len(pack)), key=lambda i: (-scores[i], pack[i])):
        print(f"{scores[i]:+.4f}  {catalog.names[pack[i]]}")
    return 0


def cmd_simulate(args) -> int:
    dataset = _load_data(args.data, args.seed)
    catalog = dataset.catalog
    if args.checkpoint:
        scorer = EmbeddingScorer(load_model(args.checkpoint), catalog)
        policies = [draft_sim.GreedyScorerPolicy(scorer) for _ in range(args.players)]
    else:
        policies = [draft_sim.RandomPolicy([args.seed, seat]) for seat in range(args.players)]
    result = draft_sim.run_draft(catalog, policies, seed=args.seed, draft_id=args.draft_id)
    ingest.write_draft_log(args.out, result.records, catalog)
    print(f"{len(result.records)} decisions from {args.players} seats -> {args.out}")
    return 0


def cmd_compare(args) -> int:
    dataset = _load_data(args.data, args.seed)
    configs = [_train_config(args, method) for method in losses.METHODS]
    results = training.run_experiment(dataset, configs)
    print(format_compare_header(dataset))
    print(training.format_results_table(results))
    if args.out:
        training.write_results(args.out, results, zero_timing=args.repro)
    return 0


def format_compare_header(dataset) -> str:
    return (f"{len(dataset.train)} train / {len(dataset.test)} test decisions, "
            f"chance baseline {chance_baseline(dataset):.4f}")


def cmd_serve(args) -> int:
    from .service import checkpoint_digest, serve

    dataset = _load_data(args.data, args.seed)
    model = load_model(args.checkpoint)
    serve(model, dataset.catalog, checkpoint_digest(args.checkpoint),
          host=args.host, port=args.port)
    return 0


COMMANDS = {
    "ingest": cmd_ingest,
    "synth": cmd_synth,
    "train": cmd_train,
    "eval": cmd_eval,
    "rank": cmd_rank,
    "simulate": cmd_simulate,
    "compare": cmd_compare,
    "serve": cmd_serve,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    args.seed = next((s for s in (args.seed_sub, args.seed_global) if s is not None), 0)
    try:
        return COMMANDS[args.command](args)
    except Exception as e:  # noqa: BLE001 - single exit path for runtime errors
        print(f"error: {type(e).__name__}: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
