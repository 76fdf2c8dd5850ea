import random

import pytest
from hypothesis import given, settings
import hypothesis.strategies as st

from medleykit.core import BarOutOfRange, NoteEvent, Song, TransitionPoint
from medleykit.filtering import (
    FilterConfig,
    InsufficientContext,
    beat_ok,
    filter_transitions,
    is_vivid,
    make_sample,
    slice_bars,
    slice_sample,
)
from medleykit.pianoroll import SliceNote
from medleykit.smf import parse_midi
from medleykit.stats import target_onsets

TPQ = 480
BAR = 4 * TPQ
STEP = TPQ // 4
ANY1 = FilterConfig(vivid_mode="any1")


def song_with(n_bars, notes=(), tempos=(), sigs=()):
    return Song(ticks_per_quarter=TPQ, notes=tuple(notes), tempo_map=tempos, time_signatures=sigs,
                length_ticks=n_bars * BAR)


def onsets_at(*ticks, pitch=60):
    return [NoteEvent(t, pitch, STEP) for t in ticks]


def half_bar_ticks(tp_bar):
    start = (tp_bar - 1) * BAR
    return [start - BAR, start - BAR // 2, start, start + BAR // 2]


def test_vivid_all_four_half_bars():
    s = song_with(12, onsets_at(*half_bar_ticks(7)))
    assert is_vivid(s, 7)
    assert not is_vivid(song_with(12), 7)
    first_only = song_with(12, onsets_at(half_bar_ticks(7)[0]))
    assert not is_vivid(first_only, 7)
    assert is_vivid(first_only, 7, ANY1)


def test_vivid_threshold():
    s = song_with(12, onsets_at(*half_bar_ticks(7)))
    assert not is_vivid(s, 7, FilterConfig(min_starts_per_half_bar=2))
    with pytest.raises(ValueError):
        FilterConfig(min_starts_per_half_bar=0)


def test_beat_ok_examples():
    assert beat_ok(song_with(12), 7)
    assert not beat_ok(song_with(12, sigs=((0, 4, 4), (3 * BAR, 3, 4))), 7)
    assert beat_ok(song_with(12, sigs=((0, 2, 2),)), 7)
    assert beat_ok(song_with(12, sigs=((0, 8, 8),)), 7)
    ramp = song_with(12, tempos=((5 * BAR, round(60e6 / 121)),))
    assert not beat_ok(ramp, 7)
    assert beat_ok(ramp, 7, FilterConfig(tempo_tolerance_bpm=1.5))
    with pytest.raises(BarOutOfRange):
        beat_ok(song_with(12), 3)


def test_tempo_outside_window_is_ignored():
    s = song_with(14, tempos=((12 * BAR, 300_000),))
    assert beat_ok(s, 7)


def test_slice_window_bounds():
    sl = slice_sample(song_with(12, onsets_at(0, 12 * BAR - STEP)), 7)
    assert sl.n_bars == 12 and sl.n_steps == 192
    assert [n.start for n in sl.notes] == [0, 191]
    with pytest.raises(InsufficientContext):
        slice_sample(song_with(12), 3)
    with pytest.raises(InsufficientContext):
        slice_sample(song_with(12), 8)


def test_slice_truncates_and_quantizes():
    # bar 0.5 to bar 4.5 in window coordinates
    s = song_with(14, [NoteEvent(2 * BAR + BAR // 2, 60, 4 * BAR)])
    assert slice_sample(s, 9).notes == (SliceNote(8, 60, 64),)
    # a note crossing the window start is cut at the edge
    s = song_with(14, [NoteEvent(BAR - 2 * STEP, 60, 4 * STEP)])
    assert slice_sample(s, 8).notes == (SliceNote(0, 60, 2),)
    # round half up, and drop notes shorter than half a step
    s = song_with(12, [NoteEvent(STEP * 5 // 2, 61, STEP), NoteEvent(STEP * 8, 62, STEP // 3),
                       NoteEvent(STEP * 10 + STEP // 4, 63, STEP // 2)])
    assert slice_bars(s, 1).notes == (SliceNote(3, 61, 1), SliceNote(10, 63, 1))


def test_same_pitch_overlap_becomes_monophonic():
    s = song_with(12, [NoteEvent(0, 60, 4 * STEP, track=0), NoteEvent(2 * STEP, 60, 4 * STEP, track=1)])
    assert slice_bars(s, 1).notes == (SliceNote(0, 60, 2), SliceNote(2, 60, 4))


def test_filter_reasons_and_idempotence():
    vivid = song_with(20, onsets_at(*half_bar_ticks(7), *half_bar_ticks(12)))
    three_four = song_with(20, onsets_at(*half_bar_ticks(7)), sigs=((0, 4, 4), (8 * BAR, 3, 4)))

    def tp(song_id, bar):
        return TransitionPoint(song_id, "x", bar, bar, 0.0, 0, 0.0, 0, 0)

    points = [tp("a", 7), tp("a", 12), tp("a", 3), tp("b", 7), tp("c", 7), tp("a", 10)]
    songs = {"a": vivid, "b": three_four}
    kept, audit = filter_transitions(points, songs)
    assert [(p.song_id, p.bar_offset) for p in kept] == [("a", 7), ("a", 12)]
    assert [r["reason"] for r in audit] == ["insufficient_context", "beat_or_tempo", "missing_song", "not_vivid"]
    assert filter_transitions(kept, songs) == (kept, [])


def random_song(rng):
    n_bars = rng.randint(12, 20)
    notes = []
    for _ in range(rng.randint(0, 40)):
        onset = rng.randrange(0, n_bars * BAR)
        notes.append(NoteEvent(onset, rng.randint(30, 100), rng.randint(1, BAR)))
    return song_with(n_bars, notes)


def test_vivid_transitions_have_four_onsets_in_target_bars_random_songs():
    rng = random.Random(2024)
    checked = 0
    for _ in range(1000):
        song = random_song(rng)
        n_bars = song.length_ticks // BAR
        for bar in range(7, n_bars - 4):
            if is_vivid(song, bar):
                lo, hi = (bar - 3) * BAR, (bar + 1) * BAR
                assert sum(lo <= n.onset < hi for n in song.notes) >= 4
                checked += 1
    assert checked > 50


@pytest.mark.filterwarnings("ignore::medleykit.pianoroll.TooManyVoices")
def test_vivid_samples_of_synthetic_corpus_have_four_target_onsets(corpus):
    checked = 0
    for medley in corpus:
        song = parse_midi(medley.midi_bytes())
        for record in medley.expected_records():
            bar = record["bar_offset"]
            if 7 <= bar <= medley.n_playback_bars - 5 and is_vivid(song, bar):
                assert target_onsets(make_sample(song, bar, v=4)) >= 4
                checked += 1
    assert checked >= 10


@settings(max_examples=50)
@given(st.integers(0, 2**32 - 1))
def test_slices_stay_on_grid(seed):
    song = random_song(random.Random(seed))
    sl = slice_bars(song, 1)
    assert sl.n_steps == 192
    assert all(0 <= n.start and n.end <= 192 and n.length >= 1 for n in sl.notes)
