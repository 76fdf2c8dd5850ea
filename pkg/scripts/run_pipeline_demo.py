"""Run every CLI stage on a fresh synthetic corpus and print what each produced.

    python scripts/run_pipeline_demo.py workdir
"""
import argparse
import json
import warnings
from pathlib import Path

from medleykit.cli import main as medley
from medleykit.synthetic import synthetic_corpus, write_corpus


def count_lines(path):
    return sum(1 for line in Path(path).read_text(encoding="utf-8").splitlines() if line)


def run(*argv):
    code = medley([str(a) for a in argv])
    print(f"medley {' '.join(str(a) for a in argv)} -> exit {code}")
    if code == 2:
        raise SystemExit(code)


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("workdir")
    args = parser.parse_args()
    work = Path(args.workdir)
    corpus_dir = work / "corpus"
    write_corpus(synthetic_corpus(), corpus_dir)

    run("extract", corpus_dir, "-o", work / "transitions.jsonl")
    run("validate", work / "transitions.jsonl", corpus_dir / "ground_truth.jsonl", "-o", work / "validation.json")
    run("filter", work / "transitions.jsonl", "--midi-dir", corpus_dir, "-o", work / "kept.jsonl",
        "--audit", work / "audit.jsonl")
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        run("encode", work / "kept.jsonl", "--midi-dir", corpus_dir, "-o", work / "rolls")
    first = sorted((work / "rolls").glob("*.mdlr"))[0]
    run("augment", first, "-o", work / "augmented")
    run("stats", corpus_dir, "-o", work / "stats", "--samples-dir", work / "rolls")
    run("metrics", work / "augmented", work / "rolls", "-o", work / "metrics.jsonl", "--n-splits", "20")

    print(f"transitions: {count_lines(work / 'transitions.jsonl')}, kept: {count_lines(work / 'kept.jsonl')}")
    print("validation:", (work / "validation.json").read_text(encoding="utf-8").strip())
    print("summary:", (work / "stats" / "summary.json").read_text(encoding="utf-8").strip())
    for line in (work / "metrics.jsonl").read_text(encoding="utf-8").splitlines():
        report = json.loads(line)
        print(f"  {report['metric']:<22} raw={report['raw_distance']:.4f} normalized={report['normalized']}")


if __name__ == "__main__":
    main()
