"""Automatic evaluation metrics for symbolic music rolls.

Per-piece metrics reduce one roll to a scalar.  Corpora are compared by
the distance between their metric distributions (Wasserstein for scalars,
total variation for the note-combination distribution), normalized by the
spread of that distance across random splits of the reference corpus.
"""
from __future__ import annotations

import math
import warnings
from collections import Counter
from dataclasses import asdict, dataclass
from itertools import combinations
from typing import Optional

import numpy as np

from .core import HOLD_OFFSET, MAX_PITCH, SILENCE, MedleyError, RollShape
from .distances import EmptyCorpus, Histogram, total_variation, wasserstein_1d
from .pianoroll import PianoRoll, as_doubled, as_roll, normalize_holds

DISSONANT_INTERVALS = frozenset({1, 6, 11})
STEPS_PER_QUARTER = 4
INTERVAL_EPSILON = 1e-6


class FewerThanTwoVoices(MedleyError, ValueError):
    pass


class ShapeMismatch(MedleyError, ValueError):
    pass


class DegenerateSingleBar(UserWarning):
    """A one-bar roll has no bar repetition to measure; its bar score is 1."""


class ZeroBaselineStd(UserWarning):
    """All reference split distances were equal, so no normalized score exists."""


def _doubled(roll) -> PianoRoll:
    return normalize_holds(as_doubled(as_roll(roll)))


def _step_pitch_sets(roll: PianoRoll) -> list:
    flat = roll.steps()
    pitches = np.where(flat > MAX_PITCH, flat - HOLD_OFFSET, flat)
    return [tuple(sorted(set(row[row != SILENCE].tolist()))) for row in pitches]


def is_dissonant(interval: int) -> bool:
    return interval % 12 in DISSONANT_INTERVALS


def dissonant_ratio(chord) -> float:
    """Share of pitch pairs in ``chord`` forming a minor second, tritone or major seventh."""
    chord = list(chord)
    if len(chord) < 2:
        raise FewerThanTwoVoices(f"need at least two pitches, got {len(chord)}")
    pairs = list(combinations(chord, 2))
    return sum(is_dissonant(abs(a - b)) for a, b in pairs) / len(pairs)


def piece_dissonant_values(roll) -> list:
    """Dissonant ratio of every step where at least two distinct pitches sound."""
    return [dissonant_ratio(s) for s in _step_pitch_sets(_doubled(roll)) if len(s) >= 2]


def piece_dissonant_ratio(roll) -> float:
    """Mean of :func:`piece_dissonant_values`, 0.0 for rolls without harmony."""
    values = piece_dissonant_values(roll)
    return math.fsum(values) / len(values) if values else 0.0


def silent_ratio(roll) -> float:
    grid = as_roll(roll).grid
    return int(np.count_nonzero(grid == SILENCE)) / grid.size


def variety_ratio(roll) -> float:
    """Distinct sounding pitches over the 128 possible ones."""
    used = set()
    for s in _step_pitch_sets(_doubled(roll)):
        used.update(s)
    return len(used) / MAX_PITCH


def variety_score(roll) -> float:
    """Distinct per-step pitch sets (silence counts as one) over the number of steps."""
    sets = _step_pitch_sets(_doubled(roll))
    return len(set(sets)) / len(sets)


def length_variety_ratio(roll) -> float:
    """Hold cells over non-silent cells; 0.0 for an all-silent roll."""
    grid = _doubled(roll).grid
    sounding = int(np.count_nonzero(grid))
    return int(np.count_nonzero(grid > MAX_PITCH)) / sounding if sounding else 0.0


def avg_note_length(roll) -> float:
    """Mean note length in steps; 0.0 when the roll holds no note.

    After hold normalization every note is one onset cell plus its holds,
    so the mean is sounding cells over onset cells.
    """
    grid = _doubled(roll).grid
    onsets = int(np.count_nonzero((grid > 0) & (grid <= MAX_PITCH)))
    return int(np.count_nonzero(grid)) / onsets if onsets else 0.0


@dataclass(frozen=True)
class RepetitionBreakdown:
    pbar_max: int
    pquarter_max: int
    bar_score_scaled: float
    quarter_score_scaled: float
    repetition_score: float


def _scaled(score: float, minimum: float) -> float:
    return (score - minimum) / (1.0 - minimum)


def repetition_score(roll, shape: Optional[RollShape] = None) -> RepetitionBreakdown:
    """How often the most common bar and quarter-bar patterns recur.

    Both raw scores (max multiplicity over the number of patterns) are
    rescaled from their minimum ``1 / count`` to [0, 1] and averaged.
    """
    grid = _doubled(roll).grid
    shape = shape or RollShape(b=grid.shape[0], v=grid.shape[2])
    if grid.shape != (shape.b, shape.q, shape.v):
        raise ShapeMismatch(f"roll {grid.shape} does not match {shape}")
    b = shape.b
    quarters_per_bar = shape.q // STEPS_PER_QUARTER
    bars = Counter(grid[i].tobytes() for i in range(b))
    quarters = Counter(
        grid[i, j * STEPS_PER_QUARTER:(j + 1) * STEPS_PER_QUARTER].tobytes()
        for i in range(b) for j in range(quarters_per_bar)
    )
    pbar = max(bars.values())
    pquarter = max(quarters.values())
    if b == 1:
        warnings.warn(DegenerateSingleBar("single-bar roll: bar score fixed at 1.0"), stacklevel=2)
        bar_scaled = 1.0
    else:
        bar_scaled = _scaled(pbar / b, 1 / b)
    n_quarters = quarters_per_bar * b
    quarter_scaled = _scaled(pquarter / n_quarters, 1 / n_quarters)
    return RepetitionBreakdown(pbar, pquarter, bar_scaled, quarter_scaled, (bar_scaled + quarter_scaled) / 2)


def _combination_counts(roll) -> Counter:
    return Counter(_step_pitch_sets(_doubled(roll)))


def note_combination_distribution(rolls) -> Histogram:
    """Normalized frequency of each per-step sounding-pitch set across ``rolls``.

    Sets are sorted pitch tuples, octave-sensitive; silent steps count as
    the empty combination.
    """
    total = Counter()
    for roll in rolls:
        total.update(_combination_counts(roll))
    if not total:
        raise EmptyCorpus("no rolls to build a combination distribution from")
    return Histogram.from_counts(total).normalized()


def interval_match_regularizer(generated, reference, epsilon: float = INTERVAL_EPSILON) -> float:
    """Negative log of the share of adjacent-voice intervals that agree.

    At each step the interval between voice ``i`` and ``i + 1`` is defined
    when both sound.  Positions where either roll defines an interval are
    compared, pooled over all steps; they match when both rolls define the
    same signed interval.  With nothing to compare the share is 1.
    """
    gen = _doubled(generated)
    ref = _doubled(reference)
    if gen.grid.shape != ref.grid.shape:
        raise ShapeMismatch(f"shapes differ: {gen.grid.shape} vs {ref.grid.shape}")
    if gen.v < 2:
        raise ShapeMismatch("interval matching needs at least two voices")

    def intervals(roll):
        flat = roll.steps().astype(np.int32)
        pitch = np.where(flat > MAX_PITCH, flat - HOLD_OFFSET, flat)
        defined = (pitch[:, :-1] > 0) & (pitch[:, 1:] > 0)
        return pitch[:, :-1] - pitch[:, 1:], defined

    gi, gd = intervals(gen)
    ri, rd = intervals(ref)
    comparable = int(np.count_nonzero(gd | rd))
    matches = int(np.count_nonzero(gd & rd & (gi == ri)))
    share = matches / comparable if comparable else 1.0
    return -math.log(max(share, epsilon))


SCALAR_METRICS = {
    "dissonant_ratio": piece_dissonant_ratio,
    "silent_ratio": silent_ratio,
    "variety_ratio": variety_ratio,
    "variety_score": variety_score,
    "length_variety_ratio": length_variety_ratio,
    "avg_note_length": avg_note_length,
    "repetition_score": lambda roll: repetition_score(roll).repetition_score,
}
DISTRIBUTION_METRICS = ("variety_distribution",)
METRIC_NAMES = tuple(SCALAR_METRICS) + DISTRIBUTION_METRICS


@dataclass(frozen=True)
class MetricReport:
    metric: str
    raw_distance: float
    baseline_mean: float
    baseline_std: float
    normalized: Optional[float]
    n_splits: int
    seed: int

    def to_dict(self) -> dict:
        return asdict(self)


def _metric_machinery(metric: str):
    """(featurize one roll, aggregate features into a histogram, distance)."""
    if metric in SCALAR_METRICS:
        return SCALAR_METRICS[metric], lambda values: Histogram.from_values(values).normalized(), wasserstein_1d
    if metric == "variety_distribution":
        def aggregate(counters):
            total = Counter()
            for c in counters:
                total.update(c)
            return Histogram.from_counts(total).normalized()
        return _combination_counts, aggregate, total_variation
    raise KeyError(f"unknown metric {metric!r}; choose from {METRIC_NAMES}")


def normalized_score(generated, reference, metric: str = "silent_ratio",
                     n_splits: int = 50, seed: int = 0) -> MetricReport:
    """Distance of ``generated`` to ``reference``, in units of reference-split spread.

    The reference is split ``n_splits`` times into random halves (seeded);
    the mean and sample standard deviation of the half-to-half distances
    form the baseline.  ``raw_distance`` compares the generated corpus with
    the full reference.  If the baseline has zero spread, ``normalized`` is
    None and a :class:`ZeroBaselineStd` warning is issued.
    """
    reference = list(reference)
    generated = list(generated)
    if len(reference) < 4:
        raise ValueError("reference corpus needs at least 4 pieces")
    if n_splits < 2:
        raise ValueError("n_splits must be >= 2")
    if not generated:
        raise EmptyCorpus("generated corpus is empty")
    featurize, aggregate, distance = _metric_machinery(metric)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", DegenerateSingleBar)
        ref_items = [featurize(r) for r in reference]
        gen_items = [featurize(g) for g in generated]

    rng = np.random.default_rng(seed)
    n = len(ref_items)
    split_distances = []
    for _ in range(n_splits):
        perm = rng.permutation(n)
        half_a = [ref_items[i] for i in perm[: n // 2]]
        half_b = [ref_items[i] for i in perm[n // 2:]]
        split_distances.append(distance(aggregate(half_a), aggregate(half_b)))
    mean = float(np.mean(split_distances))
    std = float(np.std(split_distances, ddof=1))
    raw = distance(aggregate(gen_items), aggregate(ref_items))
    if len(set(split_distances)) > 1 and std > 0:
        normalized = (raw - mean) / std
    else:
        warnings.warn(ZeroBaselineStd(f"{metric}: all {n_splits} split distances equal {mean}"), stacklevel=2)
        normalized = None
    return MetricReport(metric, raw, mean, std, normalized, n_splits, seed)
