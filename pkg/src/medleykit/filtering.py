"""Post-processing of extracted transitions and 12-bar sample slicing."""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import floor
from typing import Optional

from .core import (
    SAMPLE_BARS,
    STEPS_PER_BAR,
    BarOutOfRange,
    MedleyError,
    Song,
    TransitionPoint,
    TransitionSample,
    tempo_to_bpm,
)
from .pianoroll import NoteSlice, SliceNote, encode
from .timeline import BarGrid
from .transitions import half_bar_starts

VIVID_MODES = ("all4", "any1")


class InsufficientContext(MedleyError):
    """The 12-bar window around a transition runs past the song."""


@dataclass(frozen=True)
class FilterConfig:
    min_starts_per_half_bar: int = 1
    tempo_tolerance_bpm: float = 0.5
    required_beat: tuple = (4, 4)
    vivid_mode: str = "all4"
    # window position: the transition bar is preceded by this many bars,
    # so with 6 it splits the target into two bars before and two after
    bars_before_tp: int = 6

    def __post_init__(self):
        if self.min_starts_per_half_bar < 1:
            raise ValueError("min_starts_per_half_bar must be >= 1")
        if self.vivid_mode not in VIVID_MODES:
            raise ValueError(f"vivid_mode must be one of {VIVID_MODES}")
        if not 0 <= self.bars_before_tp <= SAMPLE_BARS - 1:
            raise ValueError("bars_before_tp must leave the transition inside the window")


DEFAULT_CONFIG = FilterConfig()


def is_vivid(song: Song, bar_offset: int, config: FilterConfig = DEFAULT_CONFIG,
             grid: Optional[BarGrid] = None) -> bool:
    """Whether notes start in the half bars around the transition.

    ``all4`` needs ``min_starts_per_half_bar`` onsets in each of the four
    half bars; ``any1`` is satisfied by a single qualifying half bar.
    """
    halves = half_bar_starts(song, bar_offset, grid)
    hits = [c >= config.min_starts_per_half_bar for c in halves]
    return all(hits) if config.vivid_mode == "all4" else any(hits)


def window_bounds(grid: BarGrid, first_bar: int, n_bars: int = SAMPLE_BARS) -> tuple:
    last = first_bar + n_bars - 1
    if first_bar < 1 or last > grid.n_bars:
        raise InsufficientContext(f"bars {first_bar}..{last} exceed the song's 1..{grid.n_bars}")
    return first_bar, last


def beat_ok(song: Song, bar_offset: int, config: FilterConfig = DEFAULT_CONFIG,
            grid: Optional[BarGrid] = None) -> bool:
    """True if the sample window is in a 4/4-reducible beat at a steady tempo."""
    grid = grid or BarGrid(song)
    first = bar_offset - config.bars_before_tp
    try:
        first, last = window_bounds(grid, first)
    except InsufficientContext as exc:
        raise BarOutOfRange(str(exc)) from None
    target = Fraction(*config.required_beat)
    if any(Fraction(*grid.signature(bar)) != target for bar in range(first, last + 1)):
        return False
    lo, hi = grid.start(first), grid.end(last)
    tempos = [song.tempo_at(lo)] + [tempo for tick, tempo in song.tempo_map if lo < tick < hi]
    bpms = [tempo_to_bpm(t) for t in tempos]
    return max(bpms) - min(bpms) <= config.tempo_tolerance_bpm


def _round_half_up(x: Fraction) -> int:
    return floor(x + Fraction(1, 2))


def slice_bars(song: Song, first_bar: int, n_bars: int = SAMPLE_BARS,
               grid: Optional[BarGrid] = None) -> NoteSlice:
    """Quantize the notes of bars ``first_bar .. first_bar + n_bars - 1``.

    Each bar is split into 16 equal steps.  Notes are cut at the window
    edges, both ends are rounded half-up to the nearest step, notes
    shorter than half a step are dropped and a surviving note lasts at
    least one step.  Same-pitch overlaps are made monophonic: the earlier
    note ends where the later one starts.
    """
    grid = grid or BarGrid(song)
    first, last = window_bounds(grid, first_bar, n_bars)
    lo, hi = grid.start(first), grid.end(last)
    total = n_bars * STEPS_PER_BAR

    def position(tick) -> Fraction:
        bar = grid.bar_of_tick(tick)
        if tick == hi:
            return Fraction(total)
        return (bar - first) * STEPS_PER_BAR + (tick - grid.start(bar)) * STEPS_PER_BAR / grid.length(bar)

    spans = []
    for n in song.notes:
        if n.onset >= hi:
            break
        a, b = max(Fraction(n.onset), lo), min(Fraction(n.end), hi)
        if b <= a:
            continue
        on, off = position(a), position(b)
        if off - on < Fraction(1, 2):
            continue
        start = _round_half_up(on)
        end = min(max(_round_half_up(off), start + 1), total)
        if start < total:
            spans.append((n.pitch, start, end))

    notes = []
    spans.sort()
    for i, (pitch, start, end) in enumerate(spans):
        if i + 1 < len(spans) and spans[i + 1][0] == pitch and spans[i + 1][1] < end:
            end = spans[i + 1][1]
        if end > start:
            notes.append(SliceNote(start, pitch, end - start))
    return NoteSlice(n_bars=n_bars, notes=tuple(notes), tempo_bpm=song.bpm_at(int(lo)))


def slice_sample(song: Song, bar_offset: int, config: FilterConfig = DEFAULT_CONFIG,
                 grid: Optional[BarGrid] = None, song_id: str = "") -> NoteSlice:
    """The 12-bar slice around a transition at the start of ``bar_offset``.

    With the default window the transition falls between the second and
    third target bar: the slice covers ``bar_offset - 6 .. bar_offset + 5``.
    """
    grid = grid or BarGrid(song)
    sl = slice_bars(song, bar_offset - config.bars_before_tp, SAMPLE_BARS, grid)
    return NoteSlice(
        n_bars=sl.n_bars,
        notes=sl.notes,
        tempo_bpm=song.bpm_at(int(grid.start(bar_offset))),
        source=(song_id, bar_offset),
    )


def make_sample(song: Song, bar_offset: int, v: int, config: FilterConfig = DEFAULT_CONFIG,
                grid: Optional[BarGrid] = None, song_id: str = "") -> TransitionSample:
    sl = slice_sample(song, bar_offset, config, grid, song_id)
    roll = encode(sl, v, "doubled")
    return TransitionSample(roll.grid, tempo_bpm=sl.tempo_bpm, source=sl.source)


def filter_transitions(points, songs: dict, config: FilterConfig = DEFAULT_CONFIG):
    """Split transition points into kept ones and audit records.

    ``songs`` maps song_id to Song.  Reason codes: ``missing_song``,
    ``insufficient_context``, ``not_vivid``, ``beat_or_tempo``.
    """
    kept, audit = [], []
    grids = {}
    for tp in points:
        if isinstance(tp, dict):
            tp = TransitionPoint.from_dict(tp)
        song = songs.get(tp.song_id)
        reason = None
        if song is None:
            reason = "missing_song"
        else:
            grid = grids.get(tp.song_id) or grids.setdefault(tp.song_id, BarGrid(song))
            first = tp.bar_offset - config.bars_before_tp
            if first < 1 or first + SAMPLE_BARS - 1 > grid.n_bars:
                reason = "insufficient_context"
            elif not is_vivid(song, tp.bar_offset, config, grid):
                reason = "not_vivid"
            elif not beat_ok(song, tp.bar_offset, config, grid):
                reason = "beat_or_tempo"
        if reason is None:
            kept.append(tp)
        else:
            audit.append({"song_id": tp.song_id, "bar_real": tp.bar_real,
                          "bar_offset": tp.bar_offset, "reason": reason})
    return kept, audit
