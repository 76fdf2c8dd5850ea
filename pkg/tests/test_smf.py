import io
import struct
import warnings

import mido
import pytest
from hypothesis import given
import hypothesis.strategies as st

from medleykit.core import NoteEvent, Song
from medleykit.smf import (
    DanglingNoteOn,
    MalformedHeader,
    MalformedTrack,
    UnsupportedSmfType,
    key_name,
    key_signature_bytes,
    parse_midi,
    write_midi,
)


def smf(tracks, fmt=1, tpq=480):
    body = b"".join(b"MTrk" + struct.pack(">I", len(t)) + t for t in tracks)
    return b"MThd" + struct.pack(">IHHH", 6, fmt, len(tracks), tpq) + body


EOT = b"\x00\xff\x2f\x00"
ONE_NOTE = smf([b"\x00\x90\x3c\x40" + b"\x83\x60\x80\x3c\x40" + EOT], fmt=0)


def mido_notes(data):
    """Independent reading of note spans with mido (absolute ticks per track)."""
    mid = mido.MidiFile(file=io.BytesIO(data))
    spans = []
    for track_index, track in enumerate(mid.tracks):
        tick = 0
        open_notes = {}
        for msg in track:
            tick += msg.time
            if msg.type == "note_on" and msg.velocity > 0:
                if msg.note in open_notes:
                    on, vel = open_notes.pop(msg.note)
                    if tick > on:
                        spans.append((on, msg.note, tick - on, vel, track_index))
                open_notes[msg.note] = (tick, msg.velocity)
            elif msg.type in ("note_off", "note_on") and msg.note in open_notes:
                on, vel = open_notes.pop(msg.note)
                if tick > on:
                    spans.append((on, msg.note, tick - on, vel, track_index))
    return sorted(spans)


def test_single_note_fixture_matches_mido():
    song = parse_midi(ONE_NOTE)
    assert song.notes == (NoteEvent(onset=0, pitch=61, duration=480, velocity=64, track=0),)
    assert mido_notes(ONE_NOTE) == [(0, 60, 480, 64, 0)]
    assert song.ticks_per_quarter == 480


def test_empty_song_and_default_tempo():
    song = parse_midi(smf([EOT]))
    assert song.notes == ()
    assert song.bpm_at(0) == 120.0
    song = parse_midi(smf([b"\x00\xff\x51\x03\x07\xa1\x20" + EOT]))
    assert song.tempo_map == ((0, 500_000),)
    assert song.bpm_at(100) == 120.0


def test_velocity_zero_and_running_status():
    # note-on 60, running-status note-on 64, then both released by velocity-0 note-ons
    track = b"\x00\x90\x3c\x50" + b"\x00\x40\x50" + b"\x60\x3c\x00" + b"\x10\x40\x00" + EOT
    data = smf([track])
    song = parse_midi(data)
    assert [(n.onset, n.pitch, n.duration) for n in song.notes] == [(0, 61, 96), (0, 65, 112)]
    assert [(on, k + 1, d) for on, k, d, _, _ in mido_notes(data)] == [(0, 61, 96), (0, 65, 112)]


def test_restrike_closes_earlier_note():
    track = b"\x00\x90\x3c\x50" + b"\x60\x90\x3c\x50" + b"\x60\x80\x3c\x00" + EOT
    song = parse_midi(smf([track]))
    assert [(n.onset, n.duration) for n in song.notes] == [(0, 96), (96, 96)]


def test_dangling_note_closed_at_track_end():
    track = b"\x00\x90\x3c\x50" + b"\x83\x60\xff\x2f\x00"
    with pytest.warns(DanglingNoteOn):
        song = parse_midi(smf([track]))
    assert [(n.onset, n.duration) for n in song.notes] == [(0, 480)]


def test_meta_events_and_programs():
    meta = (b"\x00\xff\x03\x05Hello" + b"\x00\xff\x58\x04\x03\x02\x18\x08"
            + b"\x00\xff\x59\x02\x01\x00" + b"\x83\x60\xff\x59\x02\xfd\x01" + EOT)
    notes = b"\x00\xc1\x18" + b"\x00\x91\x40\x40" + b"\x60\x81\x40\x40" + EOT
    song = parse_midi(smf([meta, notes]))
    assert song.title == "Hello"
    assert song.time_signatures == ((0, 3, 4),)
    assert song.key_signatures == ((0, "G major"), (480, "C minor"))
    assert song.programs == {1: 24}


def test_header_errors():
    with pytest.raises(MalformedHeader):
        parse_midi(b"RIFF0000")
    with pytest.raises(UnsupportedSmfType):
        parse_midi(smf([EOT], fmt=2))
    with pytest.raises(MalformedHeader):
        parse_midi(b"MThd" + struct.pack(">IHHH", 6, 1, 1, 0xE728) + b"MTrk\x00\x00\x00\x04" + EOT)
    with pytest.raises(MalformedTrack):
        parse_midi(smf([b"\x00\x90\x3c"]))
    with pytest.raises(MalformedTrack):
        parse_midi(smf([b"\x00\x3c\x40" + EOT]))


@given(st.integers(-7, 7), st.booleans())
def test_key_signature_names_roundtrip(sf, minor):
    assert key_signature_bytes(key_name(sf, minor)) == (sf, int(minor))


@st.composite
def songs(draw):
    n_tracks = draw(st.integers(1, 3))
    notes = []
    for track in range(n_tracks):
        for key in draw(st.sets(st.integers(0, 127), max_size=4)):
            t = draw(st.integers(0, 200))
            for _ in range(draw(st.integers(1, 4))):
                d = draw(st.integers(1, 500))
                notes.append(NoteEvent(t, key + 1, d, draw(st.integers(1, 127)), track))
                t += d + draw(st.integers(0, 50))
    tempos = draw(st.lists(st.tuples(st.integers(0, 5000), st.integers(200_000, 1_000_000)), max_size=4))
    keys = draw(st.lists(st.tuples(st.integers(0, 5000), st.integers(-7, 7), st.booleans()), max_size=3))
    programs = {track: draw(st.integers(0, 127)) for track in range(n_tracks)}
    return Song(
        ticks_per_quarter=draw(st.sampled_from([96, 480, 960])),
        notes=tuple(notes),
        tempo_map=tuple(tempos),
        time_signatures=((0, 4, 4),) + tuple(draw(st.lists(
            st.tuples(st.integers(1, 5000), st.integers(1, 12), st.sampled_from([2, 4, 8])), max_size=2))),
        key_signatures=tuple((t, key_name(sf, m)) for t, sf, m in keys),
        programs=programs,
        title=draw(st.text(alphabet="abcxyz ", max_size=8)),
        length_ticks=draw(st.integers(0, 20000)),
    )


@given(songs())
def test_write_parse_roundtrip(song):
    data = write_midi(song)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        parsed = parse_midi(data)
    assert parsed.notes == song.notes
    assert parsed.tempo_map == song.tempo_map
    assert parsed.time_signatures == song.time_signatures
    assert parsed.key_signatures == song.key_signatures
    assert parsed.programs == song.programs
    assert parsed.title == song.title
    assert parsed.length_ticks == song.length_ticks


@given(songs())
def test_parse_agrees_with_mido(song):
    data = write_midi(song)
    ours = sorted((n.onset, n.pitch - 1, n.duration, n.velocity, n.track) for n in parse_midi(data).notes)
    assert ours == mido_notes(data)
