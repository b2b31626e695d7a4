"""Command-line entry point wiring the modules into reproducible workflows.

Every run logs its resolved configuration; all randomness hangs off a single
--seed flag so repeated runs produce byte-identical artifacts. Artifact files
embed registry/model/calibration version strings and mismatches abort instead
of silently mixing model generations.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import dataclass
from pathlib import Path

from . import analysis, ensemble, features, forest, lite, service
from . import corpus as corpus_mod
from .jsonutil import parse_utc

logger = logging.getLogger("botscope.cli")

DEFAULT_SEED = 42


@dataclass(frozen=True)
class RunConfig:
    subcommand: str
    seed: int
    options: dict

    def log(self) -> None:
        logger.info("resolved config: %s", json.dumps(
            {"subcommand": self.subcommand, "seed": self.seed, **self.options},
            sort_keys=True, default=str))


def _write_json(path: str | Path, obj) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _load_datasets(path: str, names: list[str]) -> list[corpus_mod.LabeledDataset]:
    return [corpus_mod.load_dataset(path, name) for name in names]


# ---------------------------------------------------------------------------
# Subcommand implementations
# ---------------------------------------------------------------------------

def _cmd_datasets(args) -> int:
    if args.action == "synth":
        spec = corpus_mod.CorpusSpec(
            humans=args.humans, spammers=args.spammers,
            fake_followers=args.fake_followers, self_declared=args.self_declared,
            astroturf=args.astroturf, cyborgs=args.cyborgs, name=args.name)
        dataset = corpus_mod.synthesize_corpus(spec, seed=args.seed)
        corpus_mod.save_dataset(dataset, args.out)
        print(json.dumps({
            "name": dataset.name, "bots": dataset.n_bots, "humans": dataset.n_humans,
            "bot_classes": dataset.bot_classes()}, sort_keys=True))
        return 0
    dataset = corpus_mod.load_dataset(args.path, args.name)
    print(json.dumps({
        "name": dataset.name, "bots": dataset.n_bots, "humans": dataset.n_humans,
        "bot_classes": dataset.bot_classes()}, sort_keys=True))
    return 0


def _forest_params(args) -> forest.ForestParams:
    return forest.ForestParams(
        n_trees=args.n_trees, max_depth=args.max_depth, min_leaf=args.min_leaf)


def _cmd_train(args) -> int:
    datasets = _load_datasets(args.data, args.names.split(","))
    model = ensemble.train_esc(
        datasets, registry=features.default_registry(),
        params=_forest_params(args), seed=args.seed)
    ensemble.save_esc(model, args.out)
    if args.registry_out:
        features.export_registry(args.registry_out)
    print(json.dumps({
        "model_version": model.version,
        "registry_version": model.registry_version,
        "classes": list(model.class_list)}, sort_keys=True))
    return 0


def _cmd_calibrate(args) -> int:
    model = ensemble.load_esc(args.model)
    datasets = _load_datasets(args.data, args.names.split(","))
    english: list[tuple[float, str]] = []
    universal: list[tuple[float, str]] = []
    for dataset in datasets:
        for record in dataset.records:
            report = ensemble.score_account(model, record.payload)
            english.append((report.raw_overall, record.label))
            universal.append((report.raw_universal, record.label))
    tables = {
        "english": ensemble.calibrate(model, english, prior=args.prior),
        "universal": ensemble.calibrate(model, universal, prior=args.prior),
    }
    ensemble.save_calibration_bundle(tables, args.out)
    print(json.dumps({
        "model_version": model.version, "prior": args.prior,
        "n_scores": len(english)}, sort_keys=True))
    return 0


def _cmd_select_lite(args) -> int:
    candidates = _load_datasets(args.data, args.candidates.split(","))
    holdout = corpus_mod.load_dataset(args.data, args.holdout)
    reference = ensemble.load_esc(args.reference)
    weights = tuple(float(w) for w in args.weights.split(","))
    if len(weights) != 3:
        raise ValueError("select-lite: --weights needs exactly 3 comma-separated values")
    model = lite.select_training_sets(
        candidates, holdout, reference, weights=weights,
        params=_forest_params(args), seed=args.seed)
    lite.save_lite(model, args.out)
    if args.report:
        Path(args.report).write_text(lite.selection_report_csv(model), encoding="utf-8")
    print(json.dumps({
        "selected": list(model.selected_datasets),
        "subsets_evaluated": len(model.selection_report)}, sort_keys=True))
    return 0


def _cmd_score(args) -> int:
    model = ensemble.load_esc(args.model)
    tables = None
    if args.calibration:
        tables, _version = ensemble.load_calibration_bundle(args.calibration)
        for table in tables.values():
            if table.model_version and table.model_version != model.version:
                raise ValueError(
                    f"score: calibration built for model {table.model_version}, "
                    f"loaded model is {model.version}")
    n = 0
    with open(args.input, encoding="utf-8") as src, \
            open(args.out, "w", encoding="utf-8") as dst:
        for line_no, line in enumerate(src, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                payload = corpus_mod.payload_from_dict(json.loads(line))
            except (ValueError, json.JSONDecodeError) as exc:
                raise ValueError(f"{args.input} line {line_no}: {exc}") from None
            report = ensemble.score_account(model, payload)
            if tables:
                report = ensemble.apply_calibration(
                    report, tables["english"], tables["universal"])
            dst.write(json.dumps(ensemble.report_to_dict(report), sort_keys=True))
            dst.write("\n")
            n += 1
    print(json.dumps({"scored": n, "model_version": model.version}, sort_keys=True))
    return 0


def _cmd_serve(args) -> int:
    config = service.load_config(args.config)
    service.serve(config)
    return 0


def _read_group_tweets(path: str) -> list[corpus_mod.TweetRecord]:
    tweets = []
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                tweets.append(corpus_mod.tweet_from_dict(json.loads(line)))
            except (ValueError, json.JSONDecodeError) as exc:
                raise ValueError(f"{path} line {line_no}: {exc}") from None
    return tweets


def _read_scores(path: str) -> dict[str, float]:
    scores: dict[str, float] = {}
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            row = json.loads(line)
            if "raw_scores" in row:  # a serialized score report
                scores[row["user_id"]] = float(row["raw_scores"]["english"]["overall"])
            else:
                scores[row["user_id"]] = float(row["score"])
    return scores


def _cmd_analyze(args) -> int:
    if args.mode != "casestudy":
        raise ValueError(f"analyze: unknown mode {args.mode!r}")
    scores = _read_scores(args.scores)
    thresholds = [float(t) for t in args.thresholds.split(",")]
    samples = []
    counts = {}
    pooled_tweets: list[corpus_mod.TweetRecord] = []
    for spec in args.groups.split(","):
        path = Path(spec)
        name = path.stem
        tweets = _read_group_tweets(spec)
        pooled_tweets.extend(tweets)
        sample = analysis.build_sample(name, tweets, scores, language=args.language)
        samples.append(sample)
        counts[name] = {
            "raw_tweets": sample.raw_tweet_count,
            "raw_accounts": sample.raw_account_count,
            "analytical_tweets": sample.n_tweets,
            "analytical_accounts": sample.n_accounts,
        }
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    _write_json(out / "sample_counts.json", counts)
    _write_json(out / "plot_data.json", analysis.plot_payload(samples, thresholds))
    profile = analysis.language_profile(pooled_tweets) if pooled_tweets else {}
    _write_json(out / "language_profile.json", profile)
    print(json.dumps({"groups": sorted(counts), "out": str(out)}, sort_keys=True))
    return 0


def _cmd_probe(args) -> int:
    store = analysis.SeriesStore(args.store)
    series = analysis.record_probe(
        store, args.user_id, parse_utc(args.time, "--time"), args.score,
        model_version=args.model_version)
    print(json.dumps({"user_id": args.user_id, "points": len(series.points)}))
    return 0


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="botscope",
        description="Desk-scale bot scoring: datasets, training, calibration, "
                    "scoring, serving, and case-study analysis.")
    parser.add_argument("--seed", type=int, default=DEFAULT_SEED,
                        help="master seed for all randomness (default %(default)s)")
    parser.add_argument("--verbose", action="store_true", help="log at INFO level")
    sub = parser.add_subparsers(dest="subcommand", required=True)

    p = sub.add_parser("datasets", help="synthesize or inspect labeled datasets")
    ds = p.add_subparsers(dest="action", required=True)
    synth = ds.add_parser("synth", help="generate a synthetic corpus")
    synth.add_argument("--out", required=True)
    synth.add_argument("--name", default="synthetic")
    synth.add_argument("--humans", type=int, default=0)
    synth.add_argument("--spammers", type=int, default=0)
    synth.add_argument("--fake-followers", dest="fake_followers", type=int, default=0)
    synth.add_argument("--self-declared", dest="self_declared", type=int, default=0)
    synth.add_argument("--astroturf", type=int, default=0)
    synth.add_argument("--cyborgs", type=int, default=0)
    load = ds.add_parser("load", help="load a dataset and report counts")
    load.add_argument("--path", required=True)
    load.add_argument("--name", required=True)
    p.set_defaults(fn=_cmd_datasets)

    p = sub.add_parser("train", help="train the specialized ensemble")
    p.add_argument("--data", required=True, help="dataset directory")
    p.add_argument("--names", required=True, help="comma-separated dataset names")
    p.add_argument("--out", required=True)
    p.add_argument("--registry-out", default=None,
                   help="also export the feature registry document")
    p.add_argument("--n-trees", type=int, default=100)
    p.add_argument("--max-depth", type=int, default=12)
    p.add_argument("--min-leaf", type=int, default=2)
    p.set_defaults(fn=_cmd_train)

    p = sub.add_parser("calibrate", help="build CAP tables from labeled data")
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--names", required=True)
    p.add_argument("--prior", type=float, default=ensemble.DEFAULT_PRIOR)
    p.add_argument("--out", required=True)
    p.set_defaults(fn=_cmd_calibrate)

    p = sub.add_parser("select-lite", help="training-set selection for the lite model")
    p.add_argument("--data", required=True)
    p.add_argument("--candidates", required=True, help="comma-separated dataset names")
    p.add_argument("--holdout", required=True)
    p.add_argument("--reference", required=True, help="reference ensemble model path")
    p.add_argument("--weights", default="1,1,1")
    p.add_argument("--out", required=True)
    p.add_argument("--report", default=None, help="write the per-subset table as CSV")
    p.add_argument("--n-trees", type=int, default=100)
    p.add_argument("--max-depth", type=int, default=12)
    p.add_argument("--min-leaf", type=int, default=2)
    p.set_defaults(fn=_cmd_select_lite)

    p = sub.add_parser("score", help="score payloads from JSON-lines")
    p.add_argument("--model", required=True)
    p.add_argument("--calibration", default=None)
    p.add_argument("--input", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(fn=_cmd_score)

    p = sub.add_parser("serve", help="run the scoring service")
    p.add_argument("--config", required=True)
    p.set_defaults(fn=_cmd_serve)

    p = sub.add_parser("analyze", help="case-study statistics")
    p.add_argument("mode", choices=["casestudy"])
    p.add_argument("--groups", required=True,
                   help="comma-separated JSON-lines tweet files, one per group")
    p.add_argument("--scores", required=True,
                   help="JSON-lines of score reports or {user_id, score} rows")
    p.add_argument("--thresholds", default="0.5,0.7")
    p.add_argument("--language", default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(fn=_cmd_analyze)

    p = sub.add_parser("probe", help="record a score probe into a time series store")
    p.add_argument("--store", required=True)
    p.add_argument("--user-id", required=True)
    p.add_argument("--time", required=True)
    p.add_argument("--score", type=float, required=True)
    p.add_argument("--model-version", default="")
    p.set_defaults(fn=_cmd_probe)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    options = {k: v for k, v in vars(args).items()
               if k not in ("fn", "seed", "subcommand") and not callable(v)}
    RunConfig(subcommand=args.subcommand, seed=args.seed, options=options).log()
    try:
        return args.fn(args)
    except FileNotFoundError as exc:
        print(f"error (io): {exc}", file=sys.stderr)
        return 1
    except ValueError as exc:
        print(f"error (invalid input): {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
