#!/usr/bin/env python3
"""End-to-end demo pipeline: synth -> train -> calibrate -> score -> analyze.

Everything hangs off one --seed, so two runs into different directories
produce byte-identical artifacts. --fast shrinks the corpus and forests for
quick turnaround (the acceptance determinism check uses it).
"""

import argparse
import json
import sys
from pathlib import Path

from botscope import cli, corpus
from botscope.corpus import CASHTAG_STUDY_SHAPE, synthesize_cashtag_study


def write_case_study(out_dir: Path, seed: int) -> tuple[list[str], Path]:
    groups, scores = synthesize_cashtag_study(seed=seed)
    group_paths = []
    for symbol, tweets in groups.items():
        path = out_dir / f"{symbol}.jsonl"
        with open(path, "w", encoding="utf-8") as fh:
            for tweet in tweets:
                fh.write(json.dumps(corpus.tweet_to_dict(tweet), sort_keys=True))
                fh.write("\n")
        group_paths.append(str(path))
    scores_path = out_dir / "case_scores.jsonl"
    with open(scores_path, "w", encoding="utf-8") as fh:
        for uid in sorted(scores):
            fh.write(json.dumps({"user_id": uid, "score": scores[uid]}) + "\n")
    return group_paths, scores_path


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", required=True)
    parser.add_argument("--seed", type=int, default=42)
    parser.add_argument("--fast", action="store_true",
                        help="small corpus and forests for quick runs")
    args = parser.parse_args(argv)

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    data_dir = out / "datasets"
    seed = str(args.seed)

    if args.fast:
        counts = ["--humans", "60", "--spammers", "25", "--fake-followers", "15",
                  "--self-declared", "15", "--astroturf", "15", "--cyborgs", "12"]
        trees = "30"
    else:
        spec = corpus.DEFAULT_FIXTURE_SPEC
        counts = ["--humans", str(spec.humans), "--spammers", str(spec.spammers),
                  "--fake-followers", str(spec.fake_followers),
                  "--self-declared", str(spec.self_declared),
                  "--astroturf", str(spec.astroturf), "--cyborgs", str(spec.cyborgs)]
        trees = "100"

    lite_n = "20" if args.fast else "40"
    steps = [
        ["--seed", seed, "datasets", "synth", "--out", str(data_dir),
         "--name", "fixture", *counts],
        ["--seed", "101", "datasets", "synth", "--out", str(data_dir),
         "--name", "lite_a", "--humans", lite_n, "--spammers", lite_n],
        ["--seed", "102", "datasets", "synth", "--out", str(data_dir),
         "--name", "lite_b", "--humans", lite_n, "--fake-followers", lite_n],
        ["--seed", "103", "datasets", "synth", "--out", str(data_dir),
         "--name", "lite_holdout", "--humans", lite_n, "--spammers", lite_n],
        ["--seed", seed, "train", "--data", str(data_dir), "--names", "fixture",
         "--out", str(out / "model.json"), "--n-trees", trees,
         "--registry-out", str(out / "registry.json")],
        ["--seed", seed, "calibrate", "--model", str(out / "model.json"),
         "--data", str(data_dir), "--names", "fixture", "--prior", "0.15",
         "--out", str(out / "calibration.json")],
        ["--seed", seed, "select-lite", "--data", str(data_dir),
         "--candidates", "lite_a,lite_b", "--holdout", "lite_holdout",
         "--reference", str(out / "model.json"), "--n-trees", trees,
         "--out", str(out / "lite.json"),
         "--report", str(out / "lite_selection.csv")],
        ["--seed", seed, "score", "--model", str(out / "model.json"),
         "--calibration", str(out / "calibration.json"),
         "--input", str(data_dir / "fixture.jsonl"),
         "--out", str(out / "scores.jsonl")],
    ]
    for step in steps:
        code = cli.main(step)
        if code != 0:
            return code

    group_paths, scores_path = write_case_study(out, seed=args.seed)
    code = cli.main([
        "--seed", seed, "analyze", "casestudy",
        "--groups", ",".join(group_paths),
        "--scores", str(scores_path),
        "--thresholds", "0.5,0.7", "--language", "en",
        "--out", str(out / "analysis")])
    if code != 0:
        return code

    (out / "keys.txt").write_text("demo-key\n", encoding="utf-8")
    (out / "service.json").write_text(json.dumps({
        "model_path": "model.json",
        "calibration_path": "calibration.json",
        "lite_path": "lite.json",
        "keys_path": "keys.txt",
        "port": 8750,
    }, indent=2) + "\n", encoding="utf-8")
    print(json.dumps({"out": str(out), "expected_counts": CASHTAG_STUDY_SHAPE["SHIB"]},
                     sort_keys=True))
    return 0


if __name__ == "__main__":
    sys.exit(main())
