import csv
import io
import random
from collections import Counter

import numpy as np
import pytest

from conftest import random_slice
from medleykit.core import TransitionSample
from medleykit.distances import EmptyCorpus
from medleykit.pianoroll import encode
from medleykit.smf import parse_midi
from medleykit.stats import (
    corpus_summary,
    instrumentation_csv,
    instrumentation_distribution,
    medley_summary,
    note_histogram_csv,
    target_onsets,
    transition_note_histogram,
)


@pytest.fixture(scope="module")
def songs(corpus):
    return [parse_midi(m.midi_bytes()) for m in corpus]


def test_medley_summary_matches_generator_counts(corpus, songs):
    for medley, song in zip(corpus, songs):
        s = medley_summary(song)
        assert s.key_change_count == medley.key_change_count()
        assert s.tempo_change_count == medley.tempo_change_count()
        assert s.instrument_count == len(set(medley.programs.values()))
        seconds = sum(4 * t / 1e6 for t in medley.bar_tempos)
        assert s.duration_minutes == pytest.approx(seconds / 60, abs=1e-12)


def test_corpus_summary_is_mean_of_summaries(corpus, songs):
    summary = corpus_summary(songs)
    assert summary["n_medleys"] == len(corpus)
    assert summary["mean_key_changes"] == pytest.approx(np.mean([m.key_change_count() for m in corpus]))
    assert summary["mean_tempo_changes"] == pytest.approx(np.mean([m.tempo_change_count() for m in corpus]))
    with pytest.raises(EmptyCorpus):
        corpus_summary([])


def test_instrumentation_distribution_counts_song_membership(corpus, songs):
    rows = instrumentation_distribution(songs)
    assert sorted(p for p, _ in rows) == list(range(128))
    counts = Counter(p for m in corpus for p in set(m.programs.values()))
    assert dict(rows) == {p: counts[p] / len(corpus) for p in range(128)}
    probs = [x for _, x in rows]
    assert probs == sorted(probs, reverse=True)


def sample_with_onsets(rng, n):
    grid = np.zeros((12, 16, 2), dtype=int)
    cells = rng.sample([(b, s) for b in range(4, 8) for s in range(16)], n)
    for b, s in cells:
        grid[b, s, 0] = 60
    # holds and context-bar onsets must not count
    grid[4:8, :, 1] = 188
    grid[4, 0, 1] = 60
    grid[0, 0, 0] = grid[10, 3, 0] = 70
    return TransitionSample(grid)


def test_target_onsets_and_histogram():
    rng = random.Random(3)
    wanted = [rng.randint(0, 30) for _ in range(40)]
    samples = [sample_with_onsets(rng, n) for n in wanted]
    assert [target_onsets(s) for s in samples] == [n + 1 for n in wanted]
    hist = transition_note_histogram(samples)
    assert hist.as_dict() == dict(Counter(n + 1 for n in wanted))
    with pytest.raises(EmptyCorpus):
        transition_note_histogram([])


def test_target_onsets_counts_encoded_notes():
    rng = random.Random(5)
    for _ in range(50):
        sl = random_slice(rng, voices=1)
        expected = sum(64 <= n.start < 128 for n in sl.notes)
        assert target_onsets(encode(sl, 1)) == expected


def test_csv_outputs(songs):
    rows = list(csv.reader(io.StringIO(instrumentation_csv(instrumentation_distribution(songs)))))
    assert rows[0] == ["program", "probability"] and len(rows) == 129
    hist = transition_note_histogram([sample_with_onsets(random.Random(0), 4)] * 3)
    assert note_histogram_csv(hist) == "note_count,frequency\n5,3\n"
