"""Standard MIDI File (type 0/1) reading and a small writer for fixtures."""
from __future__ import annotations

import struct
import warnings
from collections import defaultdict

from .core import (
    MedleyError,
    NoteEvent,
    Song,
    midi_key_to_pitch,
    pitch_to_midi_key,
)

_MAJOR_KEYS = ["Cb", "Gb", "Db", "Ab", "Eb", "Bb", "F", "C", "G", "D", "A", "E", "B", "F#", "C#"]
_MINOR_KEYS = ["Ab", "Eb", "Bb", "F", "C", "G", "D", "A", "E", "B", "F#", "C#", "G#", "D#", "A#"]


class MidiError(MedleyError):
    pass


class MalformedHeader(MidiError):
    pass


class MalformedTrack(MidiError):
    pass


class UnsupportedSmfType(MidiError):
    pass


class DanglingNoteOn(UserWarning):
    """A note-on was never closed and has been ended at its track's end."""


def key_name(sharps_flats: int, minor: bool) -> str:
    table = _MINOR_KEYS if minor else _MAJOR_KEYS
    if not -7 <= sharps_flats <= 7:
        raise MalformedTrack(f"key signature {sharps_flats} outside -7..7")
    return f"{table[sharps_flats + 7]} {'minor' if minor else 'major'}"


def key_signature_bytes(name: str) -> tuple:
    tonic, mode = name.split()
    minor = mode == "minor"
    table = _MINOR_KEYS if minor else _MAJOR_KEYS
    return table.index(tonic) - 7, int(minor)


def _read_vlq(data: bytes, pos: int, limit: int):
    value = 0
    for _ in range(4):
        if pos >= limit:
            raise MalformedTrack("truncated variable-length quantity")
        byte = data[pos]
        pos += 1
        value = (value << 7) | (byte & 0x7F)
        if not byte & 0x80:
            return value, pos
    raise MalformedTrack("variable-length quantity longer than 4 bytes")


def _write_vlq(value: int) -> bytes:
    out = [value & 0x7F]
    value >>= 7
    while value:
        out.append(0x80 | (value & 0x7F))
        value >>= 7
    return bytes(reversed(out))


_CHANNEL_DATA_LEN = {0x8: 2, 0x9: 2, 0xA: 2, 0xB: 2, 0xC: 1, 0xD: 1, 0xE: 2}


def _parse_track(data: bytes, start: int, end: int, track: int, sink: dict):
    pos = start
    tick = 0
    status = None
    open_notes = {}  # midi key -> (onset, velocity)
    program = None

    def close(key, at):
        onset, velocity = open_notes.pop(key)
        if at > onset:
            sink["notes"].append(
                NoteEvent(onset=onset, pitch=midi_key_to_pitch(key), duration=at - onset,
                          velocity=velocity, track=track)
            )

    while pos < end:
        delta, pos = _read_vlq(data, pos, end)
        tick += delta
        if pos >= end:
            raise MalformedTrack(f"track {track}: event missing after delta time")
        byte = data[pos]
        if byte == 0xFF:
            if pos + 2 > end:
                raise MalformedTrack(f"track {track}: truncated meta event")
            kind = data[pos + 1]
            length, pos = _read_vlq(data, pos + 2, end)
            payload = data[pos:pos + length]
            if len(payload) != length:
                raise MalformedTrack(f"track {track}: truncated meta payload")
            pos += length
            if kind == 0x51 and length == 3:
                sink["tempo"].append((tick, int.from_bytes(payload, "big")))
            elif kind == 0x58 and length >= 2:
                sink["time"].append((tick, payload[0], 2 ** payload[1]))
            elif kind == 0x59 and length == 2:
                sf = struct.unpack("b", payload[:1])[0]
                sink["key"].append((tick, key_name(sf, bool(payload[1]))))
            elif kind == 0x03 and track == 0 and not sink["title"]:
                sink["title"] = payload.decode("utf-8", errors="replace")
            elif kind == 0x2F:
                break
            continue
        if byte in (0xF0, 0xF7):
            length, pos = _read_vlq(data, pos + 1, end)
            pos += length
            continue
        if byte & 0x80:
            if byte >= 0xF0:
                raise MalformedTrack(f"track {track}: unexpected system message 0x{byte:02X}")
            status = byte
            pos += 1
        elif status is None:
            raise MalformedTrack(f"track {track}: running status without prior status")
        kind = status >> 4
        n = _CHANNEL_DATA_LEN[kind]
        if pos + n > end:
            raise MalformedTrack(f"track {track}: truncated channel message")
        args = data[pos:pos + n]
        pos += n
        if kind == 0x9 and args[1] > 0:
            key = args[0]
            if key in open_notes:
                # monophonic per key: a re-strike closes the sounding note
                close(key, tick)
            open_notes[key] = (tick, args[1])
        elif kind == 0x8 or kind == 0x9:
            if args[0] in open_notes:
                close(args[0], tick)
        elif kind == 0xC and program is None:
            program = args[0]

    if open_notes:
        warnings.warn(
            DanglingNoteOn(f"track {track}: {len(open_notes)} note(s) closed at track end (tick {tick})"),
            stacklevel=3,
        )
        for key in sorted(open_notes):
            close(key, tick)
    has_notes = any(n.track == track for n in sink["notes"])
    if program is not None or has_notes:
        sink["programs"][track] = program or 0
    sink["length"] = max(sink["length"], tick)


def parse_midi(data: bytes, title: str | None = None) -> Song:
    """Read an SMF type 0 or 1 byte stream into a :class:`Song`.

    Note-on with velocity 0 counts as note-off.  Pitches are shifted into
    the 1..128 space.  Notes left open at the end of a track are closed
    there and reported with a :class:`DanglingNoteOn` warning.
    """
    if len(data) < 14 or data[:4] != b"MThd":
        raise MalformedHeader("missing MThd chunk")
    (hlen,) = struct.unpack(">I", data[4:8])
    if hlen < 6 or len(data) < 8 + hlen:
        raise MalformedHeader(f"header length {hlen} invalid")
    fmt, ntrks, division = struct.unpack(">HHH", data[8:14])
    if fmt == 2:
        raise UnsupportedSmfType("SMF type 2 (sequential tracks) is not supported")
    if fmt > 2:
        raise MalformedHeader(f"unknown SMF format {fmt}")
    if division & 0x8000:
        raise MalformedHeader("SMPTE time division is not supported")
    if division == 0:
        raise MalformedHeader("ticks per quarter must be positive")

    sink = {"notes": [], "tempo": [], "time": [], "key": [], "programs": {},
            "title": "", "length": 0}
    pos = 8 + hlen
    track = 0
    while pos + 8 <= len(data) and track < ntrks:
        chunk, length = struct.unpack(">4sI", data[pos:pos + 8])
        body = pos + 8
        if body + length > len(data):
            raise MalformedTrack(f"chunk {chunk!r} runs past end of file")
        if chunk == b"MTrk":
            _parse_track(data, body, body + length, track, sink)
            track += 1
        pos = body + length
    if track < ntrks:
        raise MalformedTrack(f"header announces {ntrks} tracks, found {track}")

    return Song(
        ticks_per_quarter=division,
        notes=tuple(sink["notes"]),
        tempo_map=tuple(sink["tempo"]),
        time_signatures=tuple(sink["time"]),
        key_signatures=tuple(sink["key"]),
        programs=sink["programs"],
        title=title if title is not None else sink["title"],
        length_ticks=sink["length"],
    )


def _channel_for(track: int) -> int:
    c = track % 15
    return c + 1 if c >= 9 else c


def _encode_track(events, end_tick: int) -> bytes:
    out = bytearray()
    last = 0
    for tick, _, payload in sorted(events, key=lambda e: (e[0], e[1])):
        out += _write_vlq(tick - last) + payload
        last = tick
    out += _write_vlq(max(end_tick - last, 0)) + b"\xff\x2f\x00"
    return b"MTrk" + struct.pack(">I", len(out)) + bytes(out)


def write_midi(song: Song) -> bytes:
    """Serialize a Song as SMF type 1; track 0 carries the meta events.

    Intended for fixtures: same-pitch overlaps on one track do not survive
    a round trip, and velocities must be at least 1.
    """
    tracks = defaultdict(list)
    meta = tracks[0]
    if song.title:
        name = song.title.encode("utf-8")
        meta.append((0, 0, b"\xff\x03" + _write_vlq(len(name)) + name))
    for tick, tempo in song.tempo_map:
        meta.append((tick, 0, b"\xff\x51\x03" + tempo.to_bytes(3, "big")))
    for tick, num, den in song.time_signatures:
        meta.append((tick, 0, bytes([0xFF, 0x58, 4, num, den.bit_length() - 1, 24, 8])))
    for tick, name in song.key_signatures:
        sf, minor = key_signature_bytes(name)
        meta.append((tick, 0, bytes([0xFF, 0x59, 2, sf & 0xFF, minor])))
    for track, program in song.programs.items():
        tracks[track].append((0, 1, bytes([0xC0 | _channel_for(track), program])))
    for note in song.notes:
        ch = _channel_for(note.track)
        key = pitch_to_midi_key(note.pitch)
        if not 0 <= key <= 127:
            raise ValueError(f"pitch {note.pitch} has no MIDI key")
        tracks[note.track].append((note.end, 2, bytes([0x80 | ch, key, 0x40])))
        tracks[note.track].append((note.onset, 3, bytes([0x90 | ch, key, max(note.velocity, 1)])))
    n_tracks = max(tracks) + 1
    end = song.length_ticks
    body = b"".join(_encode_track(tracks.get(i, []), end) for i in range(n_tracks))
    header = b"MThd" + struct.pack(">IHHH", 6, 1, n_tracks, song.ticks_per_quarter)
    return header + body

