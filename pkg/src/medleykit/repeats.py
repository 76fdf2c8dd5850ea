"""Unroll repeat barlines into playback order."""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field

from .core import ScoreDocument


class UnbalancedRepeat(UserWarning):
    """A backward repeat had no matching forward repeat."""


class UnsupportedJump(UserWarning):
    """Voltas, da capo, dal segno and coda jumps are left unexpanded."""


@dataclass(frozen=True)
class PlaybackMap:
    order: tuple
    real_to_offset: dict = field(default_factory=dict)

    @classmethod
    def from_order(cls, order) -> "PlaybackMap":
        mapping = {}
        for position, bar in enumerate(order, start=1):
            mapping.setdefault(bar, []).append(position)
        return cls(tuple(order), {k: tuple(v) for k, v in sorted(mapping.items())})

    def first_offset(self, bar_real: int) -> int:
        return self.real_to_offset[bar_real][0]

    def __len__(self):
        return len(self.order)


def expand_repeats(doc: ScoreDocument, max_length: int | None = None) -> PlaybackMap:
    """Playback order of ``doc`` with forward/backward repeats unrolled.

    A backward barline with count ``n`` plays its span ``n`` times in total
    (2 when the score gives no count).  The span opens at the latest forward
    repeat; without one it opens right after the previous completed repeat,
    or at bar 1, and an :class:`UnbalancedRepeat` warning is issued.
    """
    measures = doc.measures
    n = len(measures)
    flagged = sorted({tag for m in measures for tag in m.unsupported})
    if flagged:
        warnings.warn(UnsupportedJump(f"ignoring {', '.join(flagged)} markers"), stacklevel=2)
    max_length = max_length or 64 * max(n, 1)

    order = []
    passes = {}
    span_start = 0
    opened = False
    i = 0
    while i < n:
        m = measures[i]
        if m.repeat_start:
            span_start = i
            opened = True
        order.append(m.index_real)
        if len(order) > max_length:
            raise RuntimeError("repeat expansion did not terminate")
        if m.repeat_end is not None:
            if not opened and i not in passes:
                warnings.warn(
                    UnbalancedRepeat(f"backward repeat at bar {m.index_real} has no forward repeat; "
                                     f"repeating from bar {measures[span_start].index_real}"),
                    stacklevel=2,
                )
            done = passes.get(i, 1)
            if done < m.repeat_end:
                passes[i] = done + 1
                i = span_start
                continue
            passes.pop(i, None)
            span_start = i + 1
            opened = False
        i += 1
    return PlaybackMap.from_order(order)
