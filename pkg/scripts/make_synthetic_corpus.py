"""Write a synthetic MXL + MIDI medley corpus with its ground-truth transitions.

    python scripts/make_synthetic_corpus.py out/corpus --n 20 --seed 7
"""
import argparse

from medleykit.synthetic import synthetic_corpus, write_corpus


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("output")
    parser.add_argument("--n", type=int, default=20)
    parser.add_argument("--seed", type=int, default=7)
    args = parser.parse_args()
    corpus = synthetic_corpus(args.n, args.seed)
    truth = write_corpus(corpus, args.output)
    n_points = sum(len(m.planted) for m in corpus)
    print(f"wrote {len(corpus)} medleys with {n_points} planted transitions; ground truth in {truth}")


if __name__ == "__main__":
    main()
