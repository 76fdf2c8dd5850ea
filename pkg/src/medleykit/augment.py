"""Vertical (transposition) and horizontal (sliding window) augmentation."""
from __future__ import annotations

from typing import Optional

import numpy as np

from .core import HOLD_OFFSET, MAX_PITCH, SAMPLE_BARS, MedleyError, Song, TransitionSample
from .pianoroll import NoteSlice
from .timeline import BarGrid
from .filtering import slice_bars

MAX_SHIFT = 11
SHIFTS = tuple(k for k in range(-MAX_SHIFT, MAX_SHIFT + 1) if k)


class KOutOfRange(MedleyError, ValueError):
    pass


class SongTooShort(MedleyError):
    pass


def pitch_span(grid) -> Optional[tuple]:
    """(lowest, highest) sounding pitch of a doubled grid, None if silent."""
    g = np.asarray(grid)
    sounding = g[g > 0]
    if sounding.size == 0:
        return None
    pitches = np.where(sounding > MAX_PITCH, sounding - HOLD_OFFSET, sounding)
    return int(pitches.min()), int(pitches.max())


def valid_shifts(grid) -> list:
    """Shifts in ``SHIFTS`` that keep every pitch inside 1..128, ascending."""
    span = pitch_span(grid)
    if span is None:
        return list(SHIFTS)
    lo, hi = span
    return [k for k in SHIFTS if lo + k >= 1 and hi + k <= MAX_PITCH]


def transpose(sample: TransitionSample, k: int) -> Optional[TransitionSample]:
    """Shift every onset and hold by ``k`` semitones; None if a pitch leaves 1..128."""
    if abs(k) > MAX_SHIFT:
        raise KOutOfRange(f"shift {k} outside -{MAX_SHIFT}..{MAX_SHIFT}")
    if k == 0:
        return sample
    span = pitch_span(sample.grid)
    if span is not None and not (span[0] + k >= 1 and span[1] + k <= MAX_PITCH):
        return None
    grid = sample.grid.astype(np.int16)
    grid = np.where(grid > 0, grid + k, 0)
    return TransitionSample(grid, tempo_bpm=sample.tempo_bpm, source=sample.source)


def vertical_variants(sample: TransitionSample) -> list:
    """All valid transpositions by -11..-1 and +1..+11, in ascending shift order.

    The untransposed sample is not included.
    """
    return [transpose(sample, k) for k in valid_shifts(sample.grid)]


def horizontal_windows(song: Song, width: int = SAMPLE_BARS, stride: int = 1) -> list:
    """Every ``width``-bar window of ``song`` at the given bar stride, quantized."""
    if stride < 1:
        raise ValueError("stride must be >= 1")
    grid = BarGrid(song)
    if grid.n_bars < width:
        raise SongTooShort(f"song has {grid.n_bars} bars, window needs {width}")
    windows = []
    for first in range(1, grid.n_bars - width + 2, stride):
        sl = slice_bars(song, first, width, grid)
        windows.append(NoteSlice(sl.n_bars, sl.notes, tempo_bpm=sl.tempo_bpm, source=(song.title, first)))
    return windows
