"""Corpus-level descriptive statistics of medleys and transition samples."""
from __future__ import annotations

import csv
import io
from collections import Counter
from dataclasses import dataclass

import numpy as np

from .core import MAX_PITCH, TARGET_BARS, Song
from .distances import EmptyCorpus, Histogram
from .timeline import tick_to_seconds


@dataclass(frozen=True)
class MedleySummary:
    duration_minutes: float
    key_change_count: int
    tempo_change_count: int
    instrument_count: int


def medley_summary(song: Song) -> MedleySummary:
    """Duration and change counts of one medley.

    Changes are map entries after tick 0; instruments are distinct General
    MIDI programs over all tracks.
    """
    return MedleySummary(
        duration_minutes=tick_to_seconds(song, song.length_ticks) / 60.0,
        key_change_count=sum(1 for tick, _ in song.key_signatures if tick > 0),
        tempo_change_count=sum(1 for tick, _ in song.tempo_map if tick > 0),
        instrument_count=len(set(song.programs.values())),
    )


def corpus_summary(songs) -> dict:
    summaries = [medley_summary(s) for s in songs]
    if not summaries:
        raise EmptyCorpus("no songs to summarize")
    return {
        "n_medleys": len(summaries),
        "mean_duration_minutes": float(np.mean([s.duration_minutes for s in summaries])),
        "mean_key_changes": float(np.mean([s.key_change_count for s in summaries])),
        "mean_tempo_changes": float(np.mean([s.tempo_change_count for s in summaries])),
        "mean_instruments": float(np.mean([s.instrument_count for s in summaries])),
    }


def instrumentation_distribution(songs) -> list:
    """``(program, probability)`` for all 128 programs, most frequent first.

    The probability is the fraction of songs using the program on any track.
    """
    songs = list(songs)
    if not songs:
        raise EmptyCorpus("no songs in corpus")
    counts = Counter()
    for song in songs:
        counts.update(set(song.programs.values()))
    rows = [(program, counts[program] / len(songs)) for program in range(128)]
    return sorted(rows, key=lambda r: (-r[1], r[0]))


def target_onsets(sample) -> int:
    """Number of note onsets in the four target bars of a sample."""
    target = np.asarray(sample.grid)[TARGET_BARS]
    return int(np.count_nonzero((target > 0) & (target <= MAX_PITCH)))


def transition_note_histogram(samples) -> Histogram:
    """Histogram (raw counts) of target-bar onset counts over samples."""
    counts = [target_onsets(s) for s in samples]
    if not counts:
        raise EmptyCorpus("no samples")
    return Histogram.from_values(counts)


def _csv(header, rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buf.getvalue()


def instrumentation_csv(distribution) -> str:
    return _csv(("program", "probability"), ((p, repr(float(x))) for p, x in distribution))


def note_histogram_csv(hist: Histogram) -> str:
    return _csv(("note_count", "frequency"), ((v, int(m)) for v, m in hist.bins))
