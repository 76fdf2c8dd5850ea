"""Piano-roll encoding of note slices.

Two schemes are supported:

* ``doubled``: pitch ``p`` starts as symbol ``p`` and sustains as ``p + 128``;
* ``legacy``: every sustained step is the shared symbol 129.

Rolls are ``bars x 16 x voices`` integer grids.  A roll serializes to a
little-endian ``.mdlr`` file (header: magic ``MDLR``, u16 version, u16 bars,
u16 steps per bar, u16 voices, u8 scheme; then u16 cells in bar, step, voice
order) or to CSV with one row per (bar, step) and one column per voice.
"""
from __future__ import annotations

import csv
import io
import struct
import warnings
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .core import (
    HOLD_OFFSET,
    LEGACY_HOLD,
    MAX_PITCH,
    SILENCE,
    STEPS_PER_BAR,
    MedleyError,
    RollShape,
)

SCHEMES = ("doubled", "legacy")
MDLR_MAGIC = b"MDLR"
MDLR_VERSION = 1
_HEADER = struct.Struct("<4sHHHHB")


class LegacySchemeUnsupported(MedleyError):
    pass


class RollFormatError(MedleyError):
    pass


class TooManyVoices(UserWarning):
    """More simultaneous notes than voices; the lowest ones were cut."""


@dataclass(frozen=True, order=True)
class SliceNote:
    start: int
    pitch: int
    length: int
    voice: Optional[int] = field(default=None, compare=False)

    @property
    def end(self) -> int:
        return self.start + self.length


@dataclass(frozen=True)
class NoteSlice:
    """Grid-quantized notes over ``n_bars`` bars of 16 steps."""

    n_bars: int
    notes: tuple = ()
    tempo_bpm: Optional[float] = field(default=None, compare=False)
    source: Optional[tuple] = field(default=None, compare=False)

    def __post_init__(self):
        notes = tuple(sorted(self.notes))
        total = self.n_bars * STEPS_PER_BAR
        for n in notes:
            if not 1 <= n.pitch <= MAX_PITCH:
                raise ValueError(f"pitch {n.pitch} outside 1..{MAX_PITCH}")
            if n.length < 1 or n.start < 0 or n.end > total:
                raise ValueError(f"note {n} does not fit {self.n_bars} bars")
        object.__setattr__(self, "notes", notes)

    @property
    def n_steps(self) -> int:
        return self.n_bars * STEPS_PER_BAR

    def to_dict(self) -> dict:
        d = {"n_bars": self.n_bars, "notes": [[n.start, n.pitch, n.length] for n in self.notes]}
        if self.tempo_bpm is not None:
            d["tempo_bpm"] = self.tempo_bpm
        if self.source is not None:
            d["source"] = list(self.source)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "NoteSlice":
        return cls(
            n_bars=int(d["n_bars"]),
            notes=tuple(SliceNote(int(s), int(p), int(ln)) for s, p, ln in d["notes"]),
            tempo_bpm=d.get("tempo_bpm"),
            source=tuple(d["source"]) if d.get("source") is not None else None,
        )


@dataclass(frozen=True, eq=False)
class PianoRoll:
    grid: np.ndarray
    scheme: str = "doubled"

    def __post_init__(self):
        if self.scheme not in SCHEMES:
            raise ValueError(f"unknown scheme {self.scheme!r}")
        grid = np.array(self.grid, dtype=np.int16)
        if grid.ndim != 3 or grid.shape[1] != STEPS_PER_BAR or grid.shape[0] < 1 or grid.shape[2] < 1:
            raise ValueError(f"roll grid must be bars x 16 x voices, got {grid.shape}")
        top = 2 * MAX_PITCH if self.scheme == "doubled" else LEGACY_HOLD
        if grid.size and (grid.min() < 0 or grid.max() > top):
            raise ValueError(f"{self.scheme} cells must lie in 0..{top}")
        grid.flags.writeable = False
        object.__setattr__(self, "grid", grid)

    @property
    def shape(self) -> RollShape:
        return RollShape(b=self.grid.shape[0], v=self.grid.shape[2])

    @property
    def n_bars(self) -> int:
        return self.grid.shape[0]

    @property
    def v(self) -> int:
        return self.grid.shape[2]

    def steps(self) -> np.ndarray:
        """The grid flattened to ``(bars * 16, voices)``."""
        return self.grid.reshape(-1, self.v)

    def __eq__(self, other):
        if not isinstance(other, PianoRoll):
            return NotImplemented
        return self.scheme == other.scheme and np.array_equal(self.grid, other.grid)

    __hash__ = None


def as_roll(obj) -> PianoRoll:
    """Accept a PianoRoll, a TransitionSample or a raw doubled-scheme grid."""
    if isinstance(obj, PianoRoll):
        return obj
    grid = getattr(obj, "grid", obj)
    return PianoRoll(np.asarray(grid), "doubled")


def encode(noteslice: NoteSlice, v: int, scheme: str = "doubled") -> PianoRoll:
    """Encode a note slice into ``v`` voices.

    Notes starting together fill the free voices from the top pitch down; a
    sustained note keeps its voice.  When more than ``v`` notes sound at once
    the ``v`` highest are kept (sustained notes win ties), the rest are cut,
    and a :class:`TooManyVoices` warning reports how many.
    """
    if v < 1:
        raise ValueError("need at least one voice")
    if scheme not in SCHEMES:
        raise ValueError(f"unknown scheme {scheme!r}")
    total = noteslice.n_steps
    flat = np.zeros((total, v), dtype=np.int16)
    by_start = {}
    for idx, n in enumerate(noteslice.notes):
        by_start.setdefault(n.start, []).append(idx)
    notes = noteslice.notes
    occupant = [None] * v
    cut = 0
    for t in range(total):
        for j in range(v):
            if occupant[j] is not None and notes[occupant[j]].end <= t:
                occupant[j] = None
        fresh = sorted(by_start.get(t, ()), key=lambda i: -notes[i].pitch)
        if fresh:
            held = [i for i in occupant if i is not None]
            if len(held) + len(fresh) > v:
                pool = [(notes[i].pitch, 1, i) for i in held] + [(notes[i].pitch, 0, i) for i in fresh]
                keep = {i for _, _, i in sorted(pool, reverse=True)[:v]}
                cut += len(pool) - v
                occupant = [i if i in keep else None for i in occupant]
                fresh = [i for i in fresh if i in keep]
            for i in fresh:
                occupant[occupant.index(None)] = i
        for j, i in enumerate(occupant):
            if i is None:
                continue
            n = notes[i]
            if n.start == t:
                flat[t, j] = n.pitch
            else:
                flat[t, j] = n.pitch + HOLD_OFFSET if scheme == "doubled" else LEGACY_HOLD
    if cut:
        warnings.warn(TooManyVoices(f"{cut} note(s) cut to fit {v} voice(s)"), stacklevel=2)
    return PianoRoll(flat.reshape(noteslice.n_bars, STEPS_PER_BAR, v), scheme)


def normalize_holds(roll: PianoRoll) -> PianoRoll:
    """Make every doubled-scheme hold agree with the pitch sounding before it.

    A hold whose predecessor sounds another pitch is rewritten to hold that
    pitch; a hold at the very first step or after silence becomes an onset
    of its own pitch.  Onset and silence cells are never touched.
    """
    if roll.scheme != "doubled":
        raise LegacySchemeUnsupported("normalize_holds applies to the doubled scheme only")
    flat = roll.steps().copy()
    for j in range(flat.shape[1]):
        prev = SILENCE
        for t in range(flat.shape[0]):
            s = int(flat[t, j])
            if s > MAX_PITCH:
                if prev == SILENCE:
                    s -= HOLD_OFFSET
                else:
                    s = (prev if prev <= MAX_PITCH else prev - HOLD_OFFSET) + HOLD_OFFSET
                flat[t, j] = s
            prev = s
    return PianoRoll(flat.reshape(roll.grid.shape), "doubled")


def decode(roll: PianoRoll) -> NoteSlice:
    """Inverse of :func:`encode`; each decoded note records its voice.

    Doubled rolls are normalized first.  A legacy hold with nothing to
    sustain is read as silence.
    """
    if roll.scheme == "doubled":
        roll = normalize_holds(roll)
    flat = roll.steps()
    notes = []
    for j in range(flat.shape[1]):
        start = pitch = None
        for t in range(flat.shape[0] + 1):
            s = int(flat[t, j]) if t < flat.shape[0] else SILENCE
            if 1 <= s <= MAX_PITCH or s == SILENCE:
                if start is not None:
                    notes.append(SliceNote(start, pitch, t - start, voice=j))
                start, pitch = (t, s) if s != SILENCE else (None, None)
            # holds extend the open note; orphan legacy holds are dropped
    return NoteSlice(n_bars=roll.n_bars, notes=tuple(notes))


def as_doubled(roll: PianoRoll) -> PianoRoll:
    """Convert a legacy roll to the doubled scheme (doubled rolls pass through)."""
    if roll.scheme == "doubled":
        return roll
    flat = roll.steps().copy()
    for j in range(flat.shape[1]):
        current = SILENCE
        for t in range(flat.shape[0]):
            s = int(flat[t, j])
            if s == LEGACY_HOLD:
                flat[t, j] = current + HOLD_OFFSET if current else SILENCE
            else:
                current = s
    return PianoRoll(flat.reshape(roll.grid.shape), "doubled")


def as_legacy(roll: PianoRoll) -> PianoRoll:
    if roll.scheme == "legacy":
        return roll
    grid = normalize_holds(roll).grid.copy()
    grid[grid > MAX_PITCH] = LEGACY_HOLD
    return PianoRoll(grid, "legacy")


def to_mdlr(roll: PianoRoll) -> bytes:
    b, q, v = roll.grid.shape
    header = _HEADER.pack(MDLR_MAGIC, MDLR_VERSION, b, q, v, SCHEMES.index(roll.scheme))
    return header + roll.grid.astype("<u2").tobytes(order="C")


def from_mdlr(data: bytes) -> PianoRoll:
    if len(data) < _HEADER.size:
        raise RollFormatError("file shorter than the .mdlr header")
    magic, version, b, q, v, scheme = _HEADER.unpack_from(data)
    if magic != MDLR_MAGIC:
        raise RollFormatError(f"bad magic {magic!r}")
    if version != MDLR_VERSION:
        raise RollFormatError(f"unsupported .mdlr version {version}")
    if q != STEPS_PER_BAR or scheme >= len(SCHEMES):
        raise RollFormatError(f"unsupported layout q={q} scheme={scheme}")
    expected = _HEADER.size + 2 * b * q * v
    if len(data) != expected:
        raise RollFormatError(f"expected {expected} bytes, got {len(data)}")
    cells = np.frombuffer(data, dtype="<u2", offset=_HEADER.size).reshape(b, q, v)
    try:
        return PianoRoll(cells.astype(np.int16), SCHEMES[scheme])
    except ValueError as exc:
        raise RollFormatError(str(exc)) from None


def to_csv(roll: PianoRoll) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerows(roll.steps().tolist())
    return buf.getvalue()


def from_csv(text: str, scheme: str = "doubled") -> PianoRoll:
    rows = [[int(x) for x in row] for row in csv.reader(io.StringIO(text)) if row]
    if not rows or len(rows) % STEPS_PER_BAR:
        raise RollFormatError(f"{len(rows)} rows is not a whole number of 16-step bars")
    if len({len(r) for r in rows}) != 1:
        raise RollFormatError("ragged CSV rows")
    grid = np.array(rows).reshape(len(rows) // STEPS_PER_BAR, STEPS_PER_BAR, len(rows[0]))
    return PianoRoll(grid, scheme)
