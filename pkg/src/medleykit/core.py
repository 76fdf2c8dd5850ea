"""Domain types shared across the pipeline.

Pitches live in a 1..128 space with 0 reserved for silence: MIDI key ``k``
maps to pitch ``k + 1``.  Piano-roll cells use the doubled-hold alphabet:
``1..128`` starts a note, ``129..256`` sustains pitch ``s - 128``.  Note that
the worked example we follow labels symbol 72 as C4, so symbol values should
not be read as MIDI note names.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

SILENCE = 0
MAX_PITCH = 128
HOLD_OFFSET = 128
LEGACY_HOLD = 129
STEPS_PER_BAR = 16
SAMPLE_BARS = 12
PAST_BARS = slice(0, 4)
TARGET_BARS = slice(4, 8)
FUTURE_BARS = slice(8, 12)

DEFAULT_TEMPO = 500_000  # microseconds per quarter, 120 BPM
DEFAULT_TIME_SIGNATURE = (4, 4)
DEFAULT_KEY = "C major"


class MedleyError(Exception):
    """Base class for all pipeline errors."""


class BarOutOfRange(MedleyError, IndexError):
    pass


def midi_key_to_pitch(key: int) -> int:
    return key + 1


def pitch_to_midi_key(pitch: int) -> int:
    return pitch - 1


def tempo_to_bpm(us_per_quarter: float) -> float:
    return 60_000_000.0 / us_per_quarter


def bpm_to_tempo(bpm: float) -> int:
    return int(round(60_000_000.0 / bpm))


@dataclass(frozen=True, order=True)
class NoteEvent:
    onset: int
    pitch: int
    duration: int
    velocity: int = 64
    track: int = 0
    voice_hint: Optional[int] = None

    def __post_init__(self):
        if not 1 <= self.pitch <= MAX_PITCH:
            raise ValueError(f"pitch {self.pitch} outside 1..{MAX_PITCH}")
        if self.duration <= 0:
            raise ValueError(f"duration must be positive, got {self.duration}")
        if self.onset < 0:
            raise ValueError(f"onset must be non-negative, got {self.onset}")
        if not 0 <= self.velocity <= 127:
            raise ValueError(f"velocity {self.velocity} outside 0..127")

    @property
    def end(self) -> int:
        return self.onset + self.duration


def _strict_map(entries, default, name):
    """Sort by tick, keep the last entry per tick, and insert a tick-0 default."""
    by_tick = {}
    for entry in sorted(entries, key=lambda e: e[0]):
        if entry[0] < 0:
            raise ValueError(f"{name} entry at negative tick {entry[0]}")
        by_tick[entry[0]] = entry
    if 0 not in by_tick:
        by_tick[0] = (0,) + tuple(default)
    return tuple(by_tick[t] for t in sorted(by_tick))


@dataclass(frozen=True)
class Song:
    """Playback view of a piece, as read from a Standard MIDI File.

    ``tempo_map`` holds ``(tick, microseconds_per_quarter)``,
    ``time_signatures`` holds ``(tick, numerator, denominator)`` and
    ``key_signatures`` holds ``(tick, key_name)``.  Each map is strictly
    sorted by tick and always has a tick-0 entry.
    """

    ticks_per_quarter: int
    notes: tuple = ()
    tempo_map: tuple = ()
    time_signatures: tuple = ()
    key_signatures: tuple = ()
    programs: dict = field(default_factory=dict)
    title: str = ""
    length_ticks: int = 0

    def __post_init__(self):
        if self.ticks_per_quarter <= 0:
            raise ValueError("ticks_per_quarter must be positive")
        notes = tuple(sorted(self.notes))
        object.__setattr__(self, "notes", notes)
        object.__setattr__(
            self, "tempo_map", _strict_map(self.tempo_map, (DEFAULT_TEMPO,), "tempo")
        )
        object.__setattr__(
            self,
            "time_signatures",
            _strict_map(self.time_signatures, DEFAULT_TIME_SIGNATURE, "time signature"),
        )
        object.__setattr__(
            self, "key_signatures", _strict_map(self.key_signatures, (DEFAULT_KEY,), "key")
        )
        object.__setattr__(self, "programs", dict(sorted(self.programs.items())))
        last_event = max(
            [n.end for n in notes]
            + [e[0] for e in self.tempo_map + self.time_signatures + self.key_signatures]
        )
        object.__setattr__(self, "length_ticks", max(self.length_ticks, last_event))

    def tempo_at(self, tick: int) -> int:
        current = self.tempo_map[0][1]
        for t, tempo in self.tempo_map:
            if t > tick:
                break
            current = tempo
        return current

    def bpm_at(self, tick: int) -> float:
        return tempo_to_bpm(self.tempo_at(tick))


@dataclass(frozen=True)
class Measure:
    index_real: int
    annotations: tuple = ()  # (text, placement) pairs
    time_signature: Optional[tuple] = None
    repeat_start: bool = False
    repeat_end: Optional[int] = None
    number: str = ""
    unsupported: tuple = ()  # jump/volta markers we do not expand

    def __post_init__(self):
        if self.repeat_end is not None and self.repeat_end < 1:
            raise ValueError("repeat_end count must be >= 1")


@dataclass(frozen=True)
class ScoreDocument:
    """Notation view of a piece, as read from (compressed) MusicXML."""

    measures: tuple = ()
    parts: tuple = ()
    title: str = ""

    def __post_init__(self):
        measures = tuple(self.measures)
        for i, m in enumerate(measures, start=1):
            if m.index_real != i:
                raise ValueError(f"measure indices must be contiguous from 1, got {m.index_real} at {i}")
        object.__setattr__(self, "measures", measures)
        object.__setattr__(self, "parts", tuple(self.parts))


@dataclass(frozen=True)
class TransitionPoint:
    song_id: str
    text: str
    bar_real: int
    bar_offset: int
    time_seconds: float
    notes_during: int
    avg_note_length_seconds: float
    notes_before_bar: int
    notes_after_bar: int
    half_bar_starts: tuple = (0, 0, 0, 0)

    def __post_init__(self):
        object.__setattr__(self, "half_bar_starts", tuple(int(x) for x in self.half_bar_starts))
        if len(self.half_bar_starts) != 4:
            raise ValueError("half_bar_starts needs exactly 4 counts")
        if self.bar_offset < self.bar_real:
            raise ValueError("bar_offset cannot precede bar_real")
        counts = (self.notes_during, self.notes_before_bar, self.notes_after_bar) + self.half_bar_starts
        if min(counts) < 0 or self.time_seconds < 0:
            raise ValueError("counts and time must be non-negative")

    def to_dict(self) -> dict:
        return {
            "song_id": self.song_id,
            "text": self.text,
            "bar_real": self.bar_real,
            "bar_offset": self.bar_offset,
            "time_seconds": self.time_seconds,
            "notes_during": self.notes_during,
            "avg_note_length_seconds": self.avg_note_length_seconds,
            "notes_before_bar": self.notes_before_bar,
            "notes_after_bar": self.notes_after_bar,
            "half_bar_starts": list(self.half_bar_starts),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "TransitionPoint":
        return cls(
            song_id=str(d["song_id"]),
            text=d["text"],
            bar_real=int(d["bar_real"]),
            bar_offset=int(d["bar_offset"]),
            time_seconds=float(d["time_seconds"]),
            notes_during=int(d["notes_during"]),
            avg_note_length_seconds=float(d["avg_note_length_seconds"]),
            notes_before_bar=int(d["notes_before_bar"]),
            notes_after_bar=int(d["notes_after_bar"]),
            half_bar_starts=tuple(d["half_bar_starts"]),
        )


@dataclass(frozen=True)
class RollShape:
    b: int
    q: int = STEPS_PER_BAR
    p: int = MAX_PITCH
    v: int = 1

    def __post_init__(self):
        if self.q != STEPS_PER_BAR or self.p != MAX_PITCH:
            raise ValueError("only 16 steps per bar and 128 pitches are supported")
        if self.b < 1 or self.v < 1:
            raise ValueError("need at least one bar and one voice")


def cell_kind(symbol: int) -> str:
    """Classify a doubled-scheme cell as 'silence', 'onset' or 'hold'."""
    if symbol == SILENCE:
        return "silence"
    if 1 <= symbol <= MAX_PITCH:
        return "onset"
    if MAX_PITCH < symbol <= 2 * MAX_PITCH:
        return "hold"
    raise ValueError(f"symbol {symbol} outside 0..256")


def cell_pitch(symbol: int) -> int:
    """Underlying pitch of a cell, 0 for silence."""
    return symbol - HOLD_OFFSET if symbol > MAX_PITCH else symbol


def sounding_pitches(grid, bar: int, step: int) -> frozenset:
    """Pitches sounding at one (bar, step) position of a doubled-scheme grid."""
    cells = np.asarray(grid)[bar, step]
    return frozenset(int(cell_pitch(int(s))) for s in np.atleast_1d(cells) if s != SILENCE)


def pitches_of_cells(cells: Sequence[int]) -> frozenset:
    return frozenset(cell_pitch(int(s)) for s in cells if s != SILENCE)


@dataclass(frozen=True, eq=False)
class TransitionSample:
    """A 12 x 16 x v doubled-scheme grid cut around one transition.

    Bars 0-3 are past context, 4-7 the target and 8-11 future context.
    """

    grid: np.ndarray
    tempo_bpm: float = 120.0
    source: tuple = ("", 0)

    def __post_init__(self):
        grid = np.array(self.grid, dtype=np.int16)
        if grid.ndim != 3 or grid.shape[:2] != (SAMPLE_BARS, STEPS_PER_BAR) or grid.shape[2] < 1:
            raise ValueError(f"sample grid must be 12 x 16 x v, got {grid.shape}")
        if grid.min() < 0 or grid.max() > 2 * MAX_PITCH:
            raise ValueError("sample cells must lie in 0..256")
        grid.flags.writeable = False
        object.__setattr__(self, "grid", grid)
        object.__setattr__(self, "source", tuple(self.source))

    @property
    def v(self) -> int:
        return self.grid.shape[2]

    def __eq__(self, other):
        if not isinstance(other, TransitionSample):
            return NotImplemented
        return (
            np.array_equal(self.grid, other.grid)
            and self.tempo_bpm == other.tempo_bpm
            and self.source == other.source
        )

    __hash__ = None
