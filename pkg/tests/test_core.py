import numpy as np
import pytest
from hypothesis import given
import hypothesis.strategies as st

from medleykit.core import (
    DEFAULT_KEY,
    DEFAULT_TEMPO,
    Measure,
    NoteEvent,
    RollShape,
    ScoreDocument,
    Song,
    TransitionPoint,
    TransitionSample,
    cell_kind,
    cell_pitch,
    midi_key_to_pitch,
    sounding_pitches,
    tempo_to_bpm,
)


def test_sounding_pitches_examples():
    assert sounding_pitches(np.array([[[72, 0]]]), 0, 0) == {72}
    assert sounding_pitches(np.array([[[200]]]), 0, 0) == {72}
    assert sounding_pitches(np.zeros((1, 1, 3), dtype=int), 0, 0) == set()


@given(st.integers(0, 256))
def test_cell_classes_partition_alphabet(s):
    kind = cell_kind(s)
    assert kind in ("silence", "onset", "hold")
    assert (kind == "silence") == (s == 0)
    assert (kind == "onset") == (1 <= s <= 128)
    assert (kind == "hold") == (129 <= s <= 256)


@given(st.integers(1, 128), st.integers(0, 3), st.integers(1, 4))
def test_onset_and_hold_sound_the_same_pitch(p, voice, v):
    voice = voice % v
    grid = np.zeros((1, 16, v), dtype=int)
    grid[0, 3, voice] = p
    onset = sounding_pitches(grid, 0, 3)
    grid[0, 3, voice] = p + 128
    assert sounding_pitches(grid, 0, 3) == onset == {p}
    assert cell_pitch(p + 128) == cell_pitch(p) == p


def test_cell_kind_rejects_out_of_alphabet():
    with pytest.raises(ValueError):
        cell_kind(257)


def test_note_event_validation():
    NoteEvent(onset=0, pitch=1, duration=1)
    NoteEvent(onset=0, pitch=128, duration=1)
    for bad in (dict(pitch=0), dict(pitch=129), dict(duration=0), dict(onset=-1)):
        with pytest.raises(ValueError):
            NoteEvent(**{"onset": 0, "pitch": 60, "duration": 10, **bad})


def test_midi_mapping_and_tempo():
    assert midi_key_to_pitch(60) == 61
    assert tempo_to_bpm(500_000) == 120.0


def test_song_inserts_tick_zero_defaults_and_sorts():
    song = Song(ticks_per_quarter=480, notes=(NoteEvent(960, 60, 10), NoteEvent(0, 62, 10)),
                tempo_map=((960, 250_000),))
    assert song.tempo_map == ((0, DEFAULT_TEMPO), (960, 250_000))
    assert song.time_signatures == ((0, 4, 4),)
    assert song.key_signatures == ((0, DEFAULT_KEY),)
    assert [n.onset for n in song.notes] == [0, 960]
    assert song.bpm_at(959) == 120.0 and song.bpm_at(960) == 240.0
    assert song.length_ticks == 970


def test_song_keeps_last_entry_per_tick():
    song = Song(ticks_per_quarter=480, tempo_map=((0, 400_000), (0, 600_000)))
    assert song.tempo_map == ((0, 600_000),)


def test_score_document_requires_contiguous_measures():
    ScoreDocument(measures=(Measure(1), Measure(2)))
    with pytest.raises(ValueError):
        ScoreDocument(measures=(Measure(1), Measure(3)))
    with pytest.raises(ValueError):
        Measure(1, repeat_end=0)


def test_transition_point_invariants_and_roundtrip():
    tp = TransitionPoint("s", "super mario bros", 23, 27, 50.7, 5, 0.1493, 5, 25, (2, 3, 13, 12))
    assert TransitionPoint.from_dict(tp.to_dict()) == tp
    with pytest.raises(ValueError):
        TransitionPoint("s", "x", 27, 23, 0.0, 0, 0.0, 0, 0)
    with pytest.raises(ValueError):
        TransitionPoint("s", "x", 1, 1, 0.0, -1, 0.0, 0, 0)


def test_transition_sample_shape_and_range():
    s = TransitionSample(np.zeros((12, 16, 3), dtype=int))
    assert s.v == 3 and s.grid.shape == (12, 16, 3)
    with pytest.raises(ValueError):
        TransitionSample(np.zeros((11, 16, 3), dtype=int))
    with pytest.raises(ValueError):
        TransitionSample(np.full((12, 16, 1), 257))
    with pytest.raises(ValueError):
        s.grid[0, 0, 0] = 1


def test_roll_shape_fixed_axes():
    assert RollShape(b=4, v=2).q == 16
    with pytest.raises(ValueError):
        RollShape(b=4, q=12)
