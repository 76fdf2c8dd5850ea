"""Transition-point labeling from score annotations, and label validation."""
from __future__ import annotations

import re
import string
import unicodedata
import warnings
from collections import defaultdict
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Iterable, Optional

from .core import BarOutOfRange, MedleyError, ScoreDocument, Song, TransitionPoint
from .repeats import expand_repeats
from .timeline import BarGrid, tick_to_seconds, time_of_bar

# "#" survives so that entries like "F#" keep their meaning
_EDGE_PUNCTUATION = string.punctuation.replace("#", "") + " "
_CODEPOINT = re.compile(r"^U\+([0-9A-Fa-f]{4,6})(?:\.\.U\+([0-9A-Fa-f]{4,6}))?$")


class AlignmentMismatch(MedleyError):
    """Score and MIDI disagree on the bar count after repeat expansion."""


class AlignmentWarning(UserWarning):
    pass


def _normalize_phrase(text: str) -> str:
    return " ".join(text.lower().split()).strip(_EDGE_PUNCTUATION)


@dataclass(frozen=True)
class Blacklist:
    words: frozenset = frozenset()
    glyphs: frozenset = frozenset()

    @classmethod
    def from_lines(cls, lines: Iterable[str]) -> "Blacklist":
        words, glyphs = set(), set()
        for raw in lines:
            entry = raw.strip()
            if not entry or entry.startswith("#"):
                continue
            m = _CODEPOINT.match(entry)
            if m:
                lo = int(m.group(1), 16)
                hi = int(m.group(2), 16) if m.group(2) else lo
                glyphs.update(chr(c) for c in range(lo, hi + 1))
            elif len(entry) == 1 and not entry.isalnum():
                glyphs.add(entry)
            else:
                word = _normalize_phrase(entry)
                if word:
                    words.add(word)
        return cls(frozenset(words), frozenset(glyphs))

    @classmethod
    def load(cls, path) -> "Blacklist":
        return cls.from_lines(Path(path).read_text(encoding="utf-8").splitlines())

    @classmethod
    def default(cls) -> "Blacklist":
        text = resources.files("medleykit").joinpath("data/blacklist.txt").read_text(encoding="utf-8")
        return cls.from_lines(text.splitlines())

    def __contains__(self, word: str) -> bool:
        return _normalize_phrase(word) in self.words


def classify_annotation(text: str, blacklist: Blacklist) -> bool:
    """True if ``text`` plausibly names the next song of a medley.

    Rejected: text without any letter (numbers, bare punctuation), text
    holding a blacklisted glyph, and text that is a blacklisted phrase or
    consists only of blacklisted tokens.
    """
    text = unicodedata.normalize("NFC", text).strip()
    if not any(ch.isalpha() for ch in text):
        return False
    if any(ch in blacklist.glyphs for ch in text):
        return False
    phrase = _normalize_phrase(text)
    if phrase in blacklist.words:
        return False
    tokens = [t.strip(_EDGE_PUNCTUATION) for t in phrase.split()]
    tokens = [t for t in tokens if t]
    return not (tokens and all(t in blacklist.words for t in tokens))


def extract_annotations(doc: ScoreDocument) -> list:
    """Every measure-attached text as ``(bar_real, text)``, in notation order."""
    return [(m.index_real, text) for m in doc.measures for text, _ in m.annotations]


def _count_onsets(notes, lo, hi) -> int:
    return sum(1 for n in notes if lo <= n.onset < hi)


def _check_bar(grid: BarGrid, bar_offset: int):
    if not 1 <= bar_offset <= grid.n_bars:
        raise BarOutOfRange(f"bar {bar_offset} outside 1..{grid.n_bars}")


def half_bar_starts(song: Song, bar_offset: int, grid: Optional[BarGrid] = None) -> tuple:
    """Onset counts in the two half bars before and the two after the bar start."""
    grid = grid or BarGrid(song)
    _check_bar(grid, bar_offset)
    tp = grid.start(bar_offset)
    bounds = [tp, tp + grid.length(bar_offset) / 2, grid.end(bar_offset)]
    if bar_offset > 1:
        before = grid.start(bar_offset - 1)
        bounds = [before, before + (tp - before) / 2] + bounds
    counts = [_count_onsets(song.notes, lo, hi) for lo, hi in zip(bounds, bounds[1:])]
    if bar_offset == 1:
        counts = [0, 0] + counts
    return tuple(counts)


def tp_context_stats(song: Song, bar_offset: int, epsilon_seconds: float = 0.0,
                     grid: Optional[BarGrid] = None) -> dict:
    """Note statistics around the transition at the start of ``bar_offset``.

    ``notes_during`` counts notes sounding at the transition instant,
    widened by ``epsilon_seconds`` on each side, and
    ``avg_note_length_seconds`` is their mean duration.  Onset counts cover
    the bar before and the bar after the transition, and its four half bars.
    """
    grid = grid or BarGrid(song)
    halves = half_bar_starts(song, bar_offset, grid)
    notes = song.notes
    tp = grid.start(bar_offset)
    tp_s = tick_to_seconds(song, tp)
    durations = []
    for n in notes:
        if n.end <= tp and epsilon_seconds <= 0:
            continue
        on_s = tick_to_seconds(song, n.onset)
        if on_s > tp_s + epsilon_seconds:
            break  # notes are sorted by onset
        end_s = tick_to_seconds(song, n.end)
        if end_s > tp_s - epsilon_seconds:
            durations.append(end_s - on_s)
    return {
        "notes_during": len(durations),
        "avg_note_length_seconds": sum(durations) / len(durations) if durations else 0.0,
        "notes_before_bar": halves[0] + halves[1],
        "notes_after_bar": halves[2] + halves[3],
        "half_bar_starts": halves,
    }


def extract_transitions(doc: ScoreDocument, song: Song, blacklist: Optional[Blacklist] = None,
                        song_id: str = "", epsilon_seconds: float = 0.0,
                        tolerance_bars: int = 1) -> list:
    """Label transition points of one medley.

    Each bar carrying accepted annotations yields one TransitionPoint at the
    bar's first playback occurrence; several accepted texts on one bar are
    joined with a space.  Raises :class:`AlignmentMismatch` when the
    repeat-expanded score and the MIDI differ by more than
    ``tolerance_bars`` bars.
    """
    blacklist = blacklist if blacklist is not None else Blacklist.default()
    playback = expand_repeats(doc)
    grid = BarGrid(song)
    if abs(len(playback) - grid.n_bars) > tolerance_bars:
        raise AlignmentMismatch(
            f"{song_id or doc.title!r}: score plays {len(playback)} bars, MIDI has {grid.n_bars}"
        )
    accepted = defaultdict(list)
    for bar, text in extract_annotations(doc):
        if classify_annotation(text, blacklist):
            accepted[bar].append(text.strip())

    points = []
    for bar in sorted(accepted):
        offset = playback.first_offset(bar)
        if offset > grid.n_bars:
            warnings.warn(AlignmentWarning(f"{song_id}: bar {bar} plays at {offset}, past the MIDI end"),
                          stacklevel=2)
            continue
        stats = tp_context_stats(song, offset, epsilon_seconds, grid)
        points.append(TransitionPoint(
            song_id=song_id,
            text=" ".join(accepted[bar]),
            bar_real=bar,
            bar_offset=offset,
            time_seconds=time_of_bar(song, offset, grid),
            **stats,
        ))
    return points


@dataclass(frozen=True)
class ConfusionMatrix:
    tp: int = 0
    fp: int = 0
    fn: int = 0
    tn: int = 0

    def __post_init__(self):
        if min(self.tp, self.fp, self.fn, self.tn) < 0:
            raise ValueError("confusion counts must be non-negative")

    @property
    def precision(self) -> Optional[float]:
        return self.tp / (self.tp + self.fp) if self.tp + self.fp else None

    @property
    def recall(self) -> Optional[float]:
        return self.tp / (self.tp + self.fn) if self.tp + self.fn else None

    def to_dict(self) -> dict:
        return {"tp": self.tp, "fp": self.fp, "fn": self.fn, "tn": self.tn,
                "precision": self.precision, "recall": self.recall}


def _key(item) -> tuple:
    if isinstance(item, TransitionPoint):
        return item.song_id, item.bar_real
    song_id, bar = item
    return str(song_id), int(bar)


def _match_count(pred: list, truth: list, window: int) -> int:
    # two-pointer greedy is a maximum matching for |p - t| <= window
    pred, truth = sorted(pred), sorted(truth)
    i = j = matched = 0
    while i < len(truth) and j < len(pred):
        if abs(pred[j] - truth[i]) <= window:
            matched += 1
            i += 1
            j += 1
        elif pred[j] < truth[i]:
            j += 1
        else:
            i += 1
    return matched


def evaluate_labels(predicted, truth, window_bars: int = 0, candidates=None) -> ConfusionMatrix:
    """Confusion matrix of predicted transition bars against ground truth.

    Items are TransitionPoints or ``(song_id, bar_real)`` pairs.  A truth bar
    matches at most one prediction within ``window_bars``.  ``tn`` counts
    candidate bars (bars carrying any annotation) that appear in neither set.
    """
    if window_bars < 0:
        raise ValueError("window_bars must be >= 0")
    pred_keys = [_key(p) for p in predicted]
    truth_keys = [_key(t) for t in truth]
    by_song = defaultdict(lambda: ([], []))
    for song_id, bar in pred_keys:
        by_song[song_id][0].append(bar)
    for song_id, bar in truth_keys:
        by_song[song_id][1].append(bar)
    tp = sum(_match_count(p, t, window_bars) for p, t in by_song.values())
    tn = 0
    if candidates is not None:
        seen = set(pred_keys) | set(truth_keys)
        tn = len({_key(c) for c in candidates} - seen)
    return ConfusionMatrix(tp=tp, fp=len(pred_keys) - tp, fn=len(truth_keys) - tp, tn=tn)
