"""How often a held-out half of a random corpus lands within k baseline deviations.

For every metric, a 200-roll corpus is split into two halves per trial and
the normalized score of one half against the other is recorded.
"""
import argparse
import random
import warnings

import numpy as np

from medleykit.metrics import METRIC_NAMES, normalized_score
from medleykit.pianoroll import NoteSlice, SliceNote, encode


def random_roll(rng, n_bars=4, voices=3):
    density = rng.uniform(0.1, 0.95)
    notes = []
    for _ in range(voices):
        t = 0
        while t < n_bars * 16:
            length = rng.randint(1, 8)
            if rng.random() < density:
                notes.append(SliceNote(t, rng.randint(40, 90), min(length, n_bars * 16 - t)))
            t += length
    return encode(NoteSlice(n_bars, tuple(notes)), voices)


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--pieces", type=int, default=200)
    parser.add_argument("--trials", type=int, default=100)
    parser.add_argument("--n-splits", type=int, default=50)
    parser.add_argument("--seed", type=int, default=8)
    args = parser.parse_args()
    rng = random.Random(args.seed)
    corpus = [random_roll(rng) for _ in range(args.pieces)]
    half = args.pieces // 2
    print(f"{'metric':<22} {'<=1sd':>6} {'<=2sd':>6} {'<=3sd':>6} {'max|z|':>7}")
    for metric in METRIC_NAMES:
        scores = []
        for trial in range(args.trials):
            perm = np.random.default_rng(args.seed * 1000 + trial).permutation(args.pieces)
            with warnings.catch_warnings():
                warnings.simplefilter("ignore")
                report = normalized_score([corpus[i] for i in perm[:half]], [corpus[i] for i in perm[half:]],
                                          metric, args.n_splits, seed=trial)
            if report.normalized is not None:
                scores.append(abs(report.normalized))
        scores = np.array(scores)
        shares = [np.mean(scores <= k) for k in (1, 2, 3)]
        print(f"{metric:<22} " + " ".join(f"{s:6.2f}" for s in shares) + f" {scores.max():7.2f}")


if __name__ == "__main__":
    main()
