"""Bar grid and wall-clock time for a Song.

Bars are laid out from tick 0 using the time-signature map.  A signature
change that falls inside a bar cuts that bar short and starts a new one.
"""
from __future__ import annotations

from bisect import bisect_right
from fractions import Fraction

from .core import BarOutOfRange, Song


class BarGrid:
    """Bar start ticks of a song, 1-based.

    ``starts[i]`` is the first tick of bar ``i + 1``; the final entry is the
    end boundary, so ``len(starts) == n_bars + 1``.
    """

    def __init__(self, song: Song):
        self.song = song
        tpq = song.ticks_per_quarter
        sigs = song.time_signatures
        end = max(song.length_ticks, 1)
        starts = []
        signatures = []
        tick = Fraction(0)
        k = 0
        while tick < end:
            while k + 1 < len(sigs) and sigs[k + 1][0] <= tick:
                k += 1
            num, den = sigs[k][1], sigs[k][2]
            length = Fraction(num * 4 * tpq, den)
            nxt = tick + length
            if k + 1 < len(sigs) and sigs[k + 1][0] < nxt:
                nxt = Fraction(sigs[k + 1][0])
            starts.append(tick)
            signatures.append((num, den))
            tick = nxt
        starts.append(tick)
        self._starts = starts
        self.signatures = signatures

    @property
    def n_bars(self) -> int:
        return len(self._starts) - 1

    def _check(self, bar: int, allow_end: bool):
        top = self.n_bars + 1 if allow_end else self.n_bars
        if not 1 <= bar <= top:
            raise BarOutOfRange(f"bar {bar} outside 1..{top}")

    def start(self, bar: int) -> Fraction:
        """First tick of ``bar``; ``n_bars + 1`` gives the end of the song."""
        self._check(bar, allow_end=True)
        return self._starts[bar - 1]

    def end(self, bar: int) -> Fraction:
        self._check(bar, allow_end=False)
        return self._starts[bar]

    def length(self, bar: int) -> Fraction:
        return self.end(bar) - self.start(bar)

    def signature(self, bar: int) -> tuple:
        self._check(bar, allow_end=False)
        return self.signatures[bar - 1]

    def bar_of_tick(self, tick) -> int:
        """1-based bar containing ``tick`` (ticks past the end map to the last bar)."""
        i = bisect_right(self._starts, tick)
        return max(1, min(i, self.n_bars))


def n_bars(song: Song) -> int:
    return BarGrid(song).n_bars


def tick_to_seconds(song: Song, tick) -> float:
    """Wall-clock time of ``tick`` integrating the tempo map."""
    tpq = song.ticks_per_quarter
    total = Fraction(0)
    tempo_map = song.tempo_map
    for i, (t, tempo) in enumerate(tempo_map):
        if t >= tick:
            break
        seg_end = tempo_map[i + 1][0] if i + 1 < len(tempo_map) else tick
        seg_end = min(seg_end, tick)
        total += Fraction(seg_end - t) * tempo / tpq
    return float(total / 1_000_000)


def time_of_bar(song: Song, bar_offset: int, grid: BarGrid | None = None) -> float:
    """Seconds from the start of the song to the first tick of ``bar_offset``."""
    grid = grid or BarGrid(song)
    return tick_to_seconds(song, grid.start(bar_offset))
